//! File formats. Every CSV may start with `# key=value` metadata lines.
//!
//! - hospitals: `hospital_id,capacity`
//! - preferences: `unit_id,kind,member_ids,rank1,…,rankm` with `kind` one of
//!   `single`/`couple` and member ids separated by `;`
//! - matrices: `intern_id,<hospital ids…>`, one row per intern
//! - area maps: `hospital_id,area`
//! - decompositions: JSON `{"meta":{…},"weights":[…],"assignments":[{intern_id:hospital_id}]}`

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};
use crate::model::{
    ConvexCombination, DeterministicAssignment, Hospital, HospitalId, InternId, Matrix, Problem,
    RawProblem, RawUnit, UnitKind,
};

pub type Meta = BTreeMap<String, String>;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_owned(),
        line,
        message: message.into(),
    }
}

/// Data records with their 1-based line numbers, skipping metadata, blank
/// lines and the header (recognized by its first field).
fn records(text: &str, source: &str, header: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) || rec.get(0) == Some(header) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

/// Metadata from leading `# key=value` lines.
pub fn parse_meta(text: &str) -> Meta {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect()
}

fn with_meta(meta: &Meta, body: Vec<u8>) -> String {
    let mut s: String = meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect();
    s.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    s
}

fn csv_body(rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn parse_hospitals(text: &str, source: &str) -> Result<Vec<Hospital>> {
    records(text, source, "hospital_id")?
        .into_iter()
        .map(|(line, rec)| {
            if rec.len() != 2 {
                return Err(parse_err(
                    source,
                    line,
                    format!("expected 2 fields, got {}", rec.len()),
                ));
            }
            let capacity = rec[1]
                .parse()
                .map_err(|_| parse_err(source, line, format!("bad capacity `{}`", &rec[1])))?;
            Ok(Hospital {
                id: rec[0].into(),
                capacity,
            })
        })
        .collect()
}

pub fn write_hospitals(hospitals: &[Hospital], meta: &Meta) -> String {
    let rows = std::iter::once(vec!["hospital_id".to_owned(), "capacity".to_owned()]).chain(
        hospitals
            .iter()
            .map(|h| vec![h.id.0.clone(), h.capacity.to_string()]),
    );
    with_meta(meta, csv_body(rows))
}

pub fn parse_preferences(text: &str, source: &str) -> Result<Vec<RawUnit>> {
    records(text, source, "unit_id")?
        .into_iter()
        .map(|(line, rec)| {
            if rec.len() < 3 {
                return Err(parse_err(
                    source,
                    line,
                    "expected unit_id,kind,member_ids,ranks…",
                ));
            }
            let kind = match &rec[1] {
                "single" => UnitKind::Single,
                "couple" => UnitKind::Couple,
                other => {
                    return Err(parse_err(source, line, format!("unknown kind `{other}`")));
                }
            };
            Ok(RawUnit {
                id: rec[0].into(),
                kind,
                members: rec[2]
                    .split(';')
                    .map(|m| InternId::from(m.trim()))
                    .collect(),
                ranking: rec
                    .iter()
                    .skip(3)
                    .filter(|h| !h.is_empty())
                    .map(HospitalId::from)
                    .collect(),
            })
        })
        .collect()
}

pub fn write_preferences(units: &[RawUnit], meta: &Meta) -> String {
    let m = units.iter().map(|u| u.ranking.len()).max().unwrap_or(0);
    let mut header = vec![
        "unit_id".to_owned(),
        "kind".to_owned(),
        "member_ids".to_owned(),
    ];
    header.extend((1..=m).map(|k| format!("rank{k}")));
    let rows = std::iter::once(header).chain(units.iter().map(|u| {
        let mut row = vec![
            u.id.0.clone(),
            match u.kind {
                UnitKind::Single => "single",
                UnitKind::Couple => "couple",
            }
            .to_owned(),
            u.members
                .iter()
                .map(|m| m.0.as_str())
                .collect::<Vec<_>>()
                .join(";"),
        ];
        row.extend(u.ranking.iter().map(|h| h.0.clone()));
        row
    }));
    with_meta(meta, csv_body(rows))
}

/// Builds and validates a problem from preference and hospital file contents.
pub fn parse_problem(
    preferences: &str,
    preferences_source: &str,
    hospitals: &str,
    hospitals_source: &str,
) -> Result<Problem> {
    Problem::new(RawProblem {
        hospitals: parse_hospitals(hospitals, hospitals_source)?,
        units: parse_preferences(preferences, preferences_source)?,
    })
}

pub fn read_problem(preferences: &Path, hospitals: &Path) -> Result<Problem> {
    parse_problem(
        &read_to_string(preferences)?,
        &preferences.display().to_string(),
        &read_to_string(hospitals)?,
        &hospitals.display().to_string(),
    )
}

pub fn write_matrix(problem: &Problem, matrix: &Matrix, meta: &Meta) -> String {
    let mut header = vec!["intern_id".to_owned()];
    header.extend(problem.hospitals().iter().map(|h| h.id.0.clone()));
    let rows =
        std::iter::once(header).chain(problem.interns().iter().enumerate().map(|(i, intern)| {
            let mut row = vec![intern.id.0.clone()];
            row.extend(matrix.row(i).iter().map(|v| v.to_string()));
            row
        }));
    with_meta(meta, csv_body(rows))
}

/// Reads a matrix whose columns may come in any order; every intern and
/// hospital of `problem` must appear exactly once.
pub fn parse_matrix(problem: &Problem, text: &str, source: &str) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut recs = rdr.records();
    let header = loop {
        match recs.next() {
            None => return Err(parse_err(source, 0, "missing header")),
            Some(Err(e)) => return Err(parse_err(source, 0, e.to_string())),
            Some(Ok(r)) if r.iter().all(|f| f.is_empty()) => continue,
            Some(Ok(r)) => break r,
        }
    };
    let hline = header.position().map_or(0, |p| p.line() as usize);
    if header.len() != problem.n_hospitals() + 1 {
        return Err(parse_err(
            source,
            hline,
            format!(
                "expected {} hospital columns, got {}",
                problem.n_hospitals(),
                header.len().saturating_sub(1)
            ),
        ));
    }
    let cols = header
        .iter()
        .skip(1)
        .map(|h| {
            problem
                .hospital_index(&h.into())
                .ok_or_else(|| parse_err(source, hline, format!("unknown hospital `{h}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = Matrix::zeros(problem.n_interns(), problem.n_hospitals());
    let mut seen = vec![false; problem.n_interns()];
    for rec in recs {
        let rec = rec.map_err(|e| {
            parse_err(
                source,
                e.position().map_or(0, |p| p.line() as usize),
                e.to_string(),
            )
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", header.len(), rec.len()),
            ));
        }
        let i = problem
            .intern_index(&rec[0].into())
            .ok_or_else(|| parse_err(source, line, format!("unknown intern `{}`", &rec[0])))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(parse_err(
                source,
                line,
                format!("intern `{}` listed twice", &rec[0]),
            ));
        }
        for (k, &h) in cols.iter().enumerate() {
            let v: f64 = rec[k + 1]
                .parse()
                .map_err(|_| parse_err(source, line, format!("bad number `{}`", &rec[k + 1])))?;
            matrix.set(i, h, v);
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(parse_err(
            source,
            0,
            format!("intern `{}` missing", problem.interns()[i].id),
        ));
    }
    Ok(matrix)
}

#[derive(Debug, Serialize, Deserialize)]
struct DecompositionFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: Meta,
    weights: Vec<f64>,
    assignments: Vec<BTreeMap<String, String>>,
}

pub fn write_decomposition(
    problem: &Problem,
    combination: &ConvexCombination,
    meta: &Meta,
) -> String {
    let file = DecompositionFile {
        meta: meta.clone(),
        weights: combination.terms.iter().map(|t| t.0).collect(),
        assignments: combination
            .terms
            .iter()
            .map(|(_, a)| {
                a.hospital_of
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| {
                        (
                            problem.interns()[i].id.0.clone(),
                            problem.hospitals()[h].id.0.clone(),
                        )
                    })
                    .collect()
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

pub fn parse_decomposition(
    problem: &Problem,
    text: &str,
    source: &str,
) -> Result<ConvexCombination> {
    let file: DecompositionFile =
        serde_json::from_str(text).map_err(|e| parse_err(source, e.line(), e.to_string()))?;
    if file.weights.len() != file.assignments.len() {
        return Err(parse_err(
            source,
            0,
            format!(
                "{} weights for {} assignments",
                file.weights.len(),
                file.assignments.len()
            ),
        ));
    }
    let mut terms = Vec::with_capacity(file.weights.len());
    for (k, (w, map)) in file.weights.iter().zip(&file.assignments).enumerate() {
        if map.len() != problem.n_interns() {
            return Err(parse_err(
                source,
                0,
                format!("assignment {k} lists {} interns", map.len()),
            ));
        }
        let mut hospital_of = vec![0; problem.n_interns()];
        for (intern, hospital) in map {
            let i = problem
                .intern_index(&intern.as_str().into())
                .ok_or_else(|| {
                    parse_err(
                        source,
                        0,
                        format!("assignment {k}: unknown intern `{intern}`"),
                    )
                })?;
            hospital_of[i] = problem
                .hospital_index(&hospital.as_str().into())
                .ok_or_else(|| {
                    parse_err(
                        source,
                        0,
                        format!("assignment {k}: unknown hospital `{hospital}`"),
                    )
                })?;
        }
        terms.push((*w, DeterministicAssignment::new(hospital_of)));
    }
    let combination = ConvexCombination { terms };
    combination
        .validate(problem)
        .map_err(|v| Error::InvalidAssignment(Violations(v)))?;
    Ok(combination)
}

pub fn parse_area_map(text: &str, source: &str) -> Result<HashMap<HospitalId, String>> {
    let mut map = HashMap::new();
    for (line, rec) in records(text, source, "hospital_id")? {
        if rec.len() != 2 {
            return Err(parse_err(
                source,
                line,
                format!("expected 2 fields, got {}", rec.len()),
            ));
        }
        if map
            .insert(HospitalId::from(&rec[0]), rec[1].to_owned())
            .is_some()
        {
            return Err(parse_err(
                source,
                line,
                format!("hospital `{}` mapped twice", &rec[0]),
            ));
        }
    }
    Ok(map)
}

pub fn write_area_map(hospitals: &[HospitalId], areas: &[String], meta: &Meta) -> String {
    let rows = std::iter::once(vec!["hospital_id".to_owned(), "area".to_owned()]).chain(
        hospitals
            .iter()
            .zip(areas)
            .map(|(h, a)| vec![h.0.clone(), a.clone()]),
    );
    with_meta(meta, csv_body(rows))
}
