use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Value};

use internmatch_core::couples::{approximate_decompose, DecompositionReport};
use internmatch_core::harness::{self, BenchConfig, BenchMode, MarketOutcome};
use internmatch_core::instances::{
    self, apportion, decomposition_from_coloring, find_edge_coloring, CubicGraph, ProfilePool,
    DEFAULT_CAPACITY_TEMPLATE,
};
use internmatch_core::io::{self, write_file, Meta};
use internmatch_core::lp::{build_trade_lp, intern_happiness, solve_trade_lp};
use internmatch_core::rating::{
    rating_first_choice, rating_weighted, same_area_topk, top_triplet_distribution, HospitalRating,
};
use internmatch_core::rsd::{rsd_exact, rsd_monte_carlo};
use internmatch_core::{ensure_target, Error, Matrix, Problem, Result};

use crate::output::{meta, Table};
use crate::{
    BenchArgs, DecomposeArgs, Format, GenerateArgs, Kind, LpArgs, Mode, PipelineArgs, ProblemFiles,
    RateArgs, RsdArgs,
};

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_owned()
}

fn load(files: &ProblemFiles) -> Result<Problem> {
    io::read_problem(&files.preferences, &files.hospitals)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )))
    }
}

fn write_problem(dir: &Path, problem: &Problem, meta: &Meta) -> Result<()> {
    let raw = problem.to_raw();
    write_file(
        &dir.join("preferences.csv"),
        &io::write_preferences(&raw.units, meta),
    )?;
    write_file(
        &dir.join("hospitals.csv"),
        &io::write_hospitals(&raw.hospitals, meta),
    )
}

fn report_table(problem: &Problem, report: &DecompositionReport) -> (Table, Table) {
    let mut summary = Table::new(vec!["metric", "value"]);
    let b = &report.bounds;
    for (k, v) in [
        ("max_row_l1", json!(report.max_row_l1)),
        ("avg_row_l1", json!(report.avg_row_l1)),
        ("max_couple_row_l1", json!(report.max_couple_row_l1)),
        ("alpha", json!(b.alpha)),
        ("min_capacity", json!(b.min_capacity)),
        ("upper_bound", json!(b.upper)),
        ("lower_bound", json!(b.lower)),
        ("singles_demand_upper_bound", json!(b.singles_demand_upper)),
        ("in_domain", json!(report.in_domain)),
        ("clamped_mass", json!(report.clamped_mass)),
        ("terms", json!(report.terms)),
    ] {
        summary.push(vec![json!(k), v]);
    }
    let mut rows = Table::new(vec!["intern_id", "row_l1"]);
    for (i, intern) in problem.interns().iter().enumerate() {
        rows.push(vec![json!(intern.id.0), json!(report.row_l1[i])]);
    }
    (summary, rows)
}

pub fn pipeline(a: PipelineArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let problem = load(&a.files)?;
    let out = harness::run_pipeline(&problem, a.trials, a.seed, a.alpha)?;
    let m = meta(&[
        ("command", "pipeline".into()),
        ("seed", a.seed.to_string()),
        ("trials", a.trials.to_string()),
    ]);
    let dir = &a.out_dir;
    write_file(
        &dir.join("baseline.csv"),
        &io::write_matrix(&problem, &out.baseline.matrix, &m),
    )?;
    write_file(
        &dir.join("target.csv"),
        &io::write_matrix(&problem, &out.target, &m),
    )?;
    let combination = out.decomposition.to_combination(&problem);
    write_file(
        &dir.join("decomposition.json"),
        &io::write_decomposition(&problem, &combination, &m),
    )?;
    let mut sample = Table::new(vec!["intern_id", "hospital_id"]);
    for (i, &h) in out.sampled.hospital_of.iter().enumerate() {
        sample.push(vec![
            json!(problem.interns()[i].id.0),
            json!(problem.hospitals()[h].id.0),
        ]);
    }
    sample.write(dir, "sample", Format::Csv, &m)?;
    let (summary, rows) = report_table(&problem, &out.report);
    summary.write(dir, "report", a.format, &m)?;
    rows.write(dir, "row_l1", a.format, &m)?;
    println!(
        "happiness {:.4} -> {:.4}; {} assignments; max row-L1 {:.6} (bound {:.6})",
        out.happiness_before,
        out.happiness_after,
        combination.len(),
        out.report.max_row_l1,
        out.report.bounds.upper
    );
    Ok(())
}

fn read_pool(prefs: &Path, template: &Option<Vec<usize>>) -> Result<(ProfilePool, Vec<usize>)> {
    let units = io::parse_preferences(&io::read_to_string(prefs)?, &prefs.display().to_string())?;
    let first = units
        .first()
        .ok_or_else(|| Error::InvalidParameter(format!("pool `{}` is empty", prefs.display())))?;
    // hospitals in lexicographic order so the template lines up predictably
    let mut hospitals = first.ranking.clone();
    hospitals.sort();
    let pool = ProfilePool::from_units(hospitals, &units)?;
    let template = template
        .clone()
        .unwrap_or_else(|| vec![1; pool.hospitals.len()]);
    Ok((pool, template))
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let mode = match a.mode {
        Mode::Subsample => BenchMode::Subsample,
        Mode::Random => BenchMode::Random,
        Mode::CapacityCouples => BenchMode::CapacityCouples,
    };
    let mut cfg = BenchConfig::new(mode, a.markets as usize, a.seed);
    cfg.trials = a.trials;
    cfg.n_interns = a.interns;
    cfg.n_couples = a.couples;
    if 2 * a.couples > a.interns {
        return Err(Error::InvalidParameter(format!(
            "{} couples exceed {} interns",
            a.couples, a.interns
        )));
    }
    match &a.pool {
        Some(path) => {
            let (pool, template) = read_pool(path, &a.template)?;
            cfg.pool = Some(pool);
            cfg.template = template;
        }
        None => {
            cfg.template = a
                .template
                .clone()
                .unwrap_or_else(|| DEFAULT_CAPACITY_TEMPLATE.to_vec())
        }
    }
    let min_capacity = *apportion(&cfg.template, cfg.n_interns)?
        .iter()
        .min()
        .expect("non-empty template");
    let reference = 2.0 / min_capacity as f64;
    let outcomes = harness::run_bench(&cfg)?;

    let m = meta(&[
        ("command", "bench".into()),
        ("mode", value_name(a.mode)),
        ("seed", a.seed.to_string()),
        ("markets", a.markets.to_string()),
        ("trials", a.trials.to_string()),
        ("reference_2_over_min_capacity", reference.to_string()),
    ]);
    let mut draws = Table::new(vec![
        "index",
        "status",
        "min_capacity",
        "max_row_l1",
        "avg_row_l1",
        "max_couple_row_l1",
        "in_domain",
        "terms",
        "rsd_first_choice",
        "lp_first_choice",
    ]);
    let (mut maxes, mut avgs, mut skipped) = (Vec::new(), Vec::new(), 0);
    for o in &outcomes {
        match o {
            MarketOutcome::Done(r) => {
                maxes.push(r.max_row_l1);
                avgs.push(r.avg_row_l1);
                draws.push(vec![
                    json!(r.index),
                    json!("ok"),
                    json!(r.min_capacity),
                    json!(r.max_row_l1),
                    json!(r.avg_row_l1),
                    json!(r.max_couple_row_l1),
                    json!(r.in_domain),
                    json!(r.terms),
                    json!(r.rsd_first_choice),
                    json!(r.lp_first_choice),
                ]);
            }
            MarketOutcome::Skipped { index, reason } => {
                skipped += 1;
                let mut row = vec![json!(index), json!(format!("skipped: {reason}"))];
                row.extend(std::iter::repeat_n(Value::Null, 8));
                draws.push(row);
            }
        }
    }
    draws.write(&a.out_dir, "draws", a.format, &m)?;
    for (stem, values) in [("hist_max_row_l1", &maxes), ("hist_avg_row_l1", &avgs)] {
        let mut t = Table::new(vec!["bin_start", "bin_end", "count"]);
        for (lo, hi, c) in harness::histogram(values, 0.01) {
            t.push(vec![json!(lo), json!(hi), json!(c)]);
        }
        t.write(&a.out_dir, stem, a.format, &m)?;
    }
    let mut summary = Table::new(vec!["metric", "value"]);
    let mean_or_null = |v: &[f64]| {
        if v.is_empty() {
            Value::Null
        } else {
            json!(harness::mean(v))
        }
    };
    for (k, v) in [
        ("markets_done", json!(maxes.len())),
        ("markets_skipped", json!(skipped)),
        ("mean_max_row_l1", mean_or_null(&maxes)),
        ("mean_avg_row_l1", mean_or_null(&avgs)),
        ("reference_2_over_min_capacity", json!(reference)),
    ] {
        summary.push(vec![json!(k), v]);
    }
    summary.write(&a.out_dir, "summary", a.format, &m)?;
    println!(
        "{} markets ({} skipped); mean max row-L1 {}; reference 2/q = {reference:.4}",
        maxes.len(),
        skipped,
        mean_or_null(&maxes)
    );
    Ok(())
}

fn rating_table(problem: &Problem, r: &HospitalRating) -> Table {
    let mut t = Table::new(vec!["hospital_id", "score", "rank"]);
    for h in r.order() {
        t.push(vec![
            json!(problem.hospitals()[h].id.0),
            json!(r.scores[h]),
            json!(r.ranks[h]),
        ]);
    }
    t
}

pub fn rate(a: RateArgs) -> Result<()> {
    let problem = load(&a.files)?;
    let m = meta(&[("command", "rate".into())]);
    let first = rating_first_choice(&problem);
    let weighted = rating_weighted(&problem);
    rating_table(&problem, &first).write(&a.out_dir, "rating_first_choice", a.format, &m)?;
    rating_table(&problem, &weighted).write(&a.out_dir, "rating_weighted", a.format, &m)?;
    if problem.n_hospitals() >= 3 {
        let d = top_triplet_distribution(&problem)?;
        let mut t = Table::new(vec![
            "first",
            "second",
            "third",
            "count",
            "density",
            "cumulative",
        ]);
        let name = |h: usize| json!(problem.hospitals()[h].id.0);
        for (k, (trip, count)) in d.triplets.iter().enumerate() {
            t.push(vec![
                name(trip[0]),
                name(trip[1]),
                name(trip[2]),
                json!(count),
                json!(d.density[k]),
                json!(d.cumulative[k]),
            ]);
        }
        t.write(&a.out_dir, "top_triplets", a.format, &m)?;
    }
    if let Some(path) = &a.areas {
        let map = io::parse_area_map(&io::read_to_string(path)?, &path.display().to_string())?;
        let excluded = a.exclude.as_deref().map(Into::into);
        let fr = same_area_topk(&problem, &map, a.k_max, excluded.as_ref())?;
        let mut t = Table::new(vec!["k", "fraction"]);
        for (k, f) in fr {
            t.push(vec![json!(k), json!(f)]);
        }
        t.write(&a.out_dir, "same_area_topk", a.format, &m)?;
    }
    println!(
        "first-choice leader {}; weighted leader {}",
        problem.hospitals()[first.order()[0]].id,
        problem.hospitals()[weighted.order()[0]].id
    );
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let dir = &a.out_dir;
    let kind = value_name(a.kind);
    let mut pairs = vec![
        ("command", "generate".to_owned()),
        ("kind", kind),
        ("seed", a.seed.to_string()),
    ];
    let template = a
        .template
        .clone()
        .unwrap_or_else(|| DEFAULT_CAPACITY_TEMPLATE.to_vec());
    let (problem, target) = match a.kind {
        Kind::LowerBound => {
            pairs.push(("n", a.n.to_string()));
            let (p, t) = instances::gen_lower_bound(a.n)?;
            (p, Some(t))
        }
        Kind::SmallProbs => {
            pairs.push(("m", a.m.to_string()));
            pairs.push(("k", a.k.to_string()));
            let (p, t) = instances::gen_small_probs(a.m, a.k)?;
            (p, Some(t))
        }
        Kind::Coloring => {
            let graph = match &a.graph {
                Some(path) => CubicGraph::parse_edge_list(
                    &io::read_to_string(path)?,
                    &path.display().to_string(),
                )?,
                None => CubicGraph::k4(),
            };
            let (p, t) = instances::gen_coloring_reduction(&graph)?;
            let m = meta(&pairs);
            write_file(&dir.join("graph.txt"), &graph.to_edge_list())?;
            if let Some(coloring) = find_edge_coloring(&graph) {
                let cc = decomposition_from_coloring(&graph, &coloring)?;
                write_file(
                    &dir.join("decomposition.json"),
                    &io::write_decomposition(&p, &cc, &m),
                )?;
            }
            (p, Some(t))
        }
        Kind::Random => {
            if 2 * a.couples > a.interns {
                return Err(Error::InvalidParameter(format!(
                    "{} couples exceed {} interns",
                    a.couples, a.interns
                )));
            }
            let caps = apportion(&template, a.interns)?;
            let (p, t) =
                instances::gen_random_market(a.interns - 2 * a.couples, a.couples, &caps, a.seed)?;
            (p, Some(t))
        }
        Kind::Market => {
            let (pool, areas) = instances::synthetic_pool(&template, 5, 2000, 200, a.seed)?;
            let p = instances::subsample_market(&pool, a.interns, a.couples, &template, a.seed)?;
            write_file(
                &dir.join("areas.csv"),
                &io::write_area_map(&pool.hospitals, &areas, &meta(&pairs)),
            )?;
            (p, None)
        }
    };
    let m = meta(&pairs);
    write_problem(dir, &problem, &m)?;
    if let Some(t) = &target {
        write_file(&dir.join("target.csv"), &io::write_matrix(&problem, t, &m))?;
    }
    println!(
        "{} interns, {} couples, {} hospitals written to {}",
        problem.n_interns(),
        problem.couples().len(),
        problem.n_hospitals(),
        dir.display()
    );
    Ok(())
}

fn read_matrix(problem: &Problem, path: &Path) -> Result<Matrix> {
    let m = io::parse_matrix(
        problem,
        &io::read_to_string(path)?,
        &path.display().to_string(),
    )?;
    ensure_target(problem, &m)?;
    Ok(m)
}

pub fn decompose(a: DecomposeArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let problem = load(&a.files)?;
    let target = read_matrix(&problem, &a.matrix)?;
    let d = approximate_decompose(&problem, &target)?;
    let report = d.report(&problem, &target, a.alpha)?;
    let m = meta(&[("command", "decompose".into())]);
    let combination = d.to_combination(&problem);
    write_file(
        &a.out_dir.join("decomposition.json"),
        &io::write_decomposition(&problem, &combination, &m),
    )?;
    let (summary, rows) = report_table(&problem, &report);
    summary.write(&a.out_dir, "report", a.format, &m)?;
    rows.write(&a.out_dir, "row_l1", a.format, &m)?;
    println!(
        "{} assignments; max row-L1 {:.6} (bound {:.6})",
        combination.len(),
        report.max_row_l1,
        report.bounds.upper
    );
    Ok(())
}

pub fn rsd(a: RsdArgs) -> Result<()> {
    let problem = load(&a.files)?;
    let (matrix, m) = if a.exact {
        let e = rsd_exact(&problem)?;
        let m = meta(&[
            ("command", "rsd".into()),
            ("method", "exact".into()),
            ("valid_orders", e.valid_orders.to_string()),
            ("stranded_orders", e.stranded_orders.to_string()),
        ]);
        (e.to_matrix(), m)
    } else {
        let mc = rsd_monte_carlo(&problem, a.trials, a.seed)?;
        let m = meta(&[
            ("command", "rsd".into()),
            ("method", "monte-carlo".into()),
            ("seed", a.seed.to_string()),
            ("trials", a.trials.to_string()),
            ("redraws", mc.redraws.to_string()),
        ]);
        (mc.matrix, m)
    };
    write_file(
        &a.out_dir.join("rsd.csv"),
        &io::write_matrix(&problem, &matrix, &m),
    )?;
    println!("wrote {}", a.out_dir.join("rsd.csv").display());
    Ok(())
}

pub fn lp(a: LpArgs) -> Result<()> {
    let problem = load(&a.files)?;
    let baseline = read_matrix(&problem, &a.baseline)?;
    let lp = build_trade_lp(&problem, &baseline)?;
    let out = solve_trade_lp(&lp)?;
    let before = intern_happiness(&problem, &baseline)?;
    let after = intern_happiness(&problem, &out.matrix)?;
    let m = meta(&[("command", "lp".into())]);
    write_file(
        &a.out_dir.join("target.csv"),
        &io::write_matrix(&problem, &out.matrix, &m),
    )?;
    let mut t = Table::new(vec!["intern_id", "happiness_before", "happiness_after"]);
    for (i, intern) in problem.interns().iter().enumerate() {
        t.push(vec![json!(intern.id.0), json!(before[i]), json!(after[i])]);
    }
    t.write(&a.out_dir, "happiness", a.format, &m)?;
    println!(
        "total happiness {:.6} -> {:.6}",
        before.iter().sum::<f64>(),
        out.objective
    );
    Ok(())
}
