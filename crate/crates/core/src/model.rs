//! Domain types shared by every stage of the pipeline.
//!
//! A [`Problem`] fixes the order of interns (matrix rows) and hospitals
//! (matrix columns). Every [`Matrix`], [`DeterministicAssignment`] and
//! [`ConvexCombination`] is interpreted against that order.
//!
//! Interns are laid out unit by unit: a single occupies one row, a couple
//! occupies two consecutive rows in member order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

/// Absolute tolerance for row sums, column sums and reconstruction checks.
pub const TOLERANCE: f64 = 1e-9;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(HospitalId);
id_newtype!(InternId);
id_newtype!(
    /// Identifier of a decision unit. For a couple this is the couple id.
    UnitId
);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hospital {
    pub id: HospitalId,
    pub capacity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Single,
    Couple,
}

/// One row of a preferences file before cross-references are resolved.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawUnit {
    pub id: UnitId,
    pub kind: UnitKind,
    pub members: Vec<InternId>,
    pub ranking: Vec<HospitalId>,
}

impl RawUnit {
    pub fn single(id: &str, ranking: &[&str]) -> Self {
        Self {
            id: id.into(),
            kind: UnitKind::Single,
            members: vec![id.into()],
            ranking: ranking.iter().map(|&h| h.into()).collect(),
        }
    }

    pub fn couple(id: &str, members: [&str; 2], ranking: &[&str]) -> Self {
        Self {
            id: id.into(),
            kind: UnitKind::Couple,
            members: members.iter().map(|&m| m.into()).collect(),
            ranking: ranking.iter().map(|&h| h.into()).collect(),
        }
    }
}

/// Unvalidated problem description, as read from disk or built by a generator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawProblem {
    pub hospitals: Vec<Hospital>,
    pub units: Vec<RawUnit>,
}

impl RawProblem {
    pub fn hospital(mut self, id: &str, capacity: usize) -> Self {
        self.hospitals.push(Hospital {
            id: id.into(),
            capacity,
        });
        self
    }

    pub fn unit(mut self, unit: RawUnit) -> Self {
        self.units.push(unit);
        self
    }

    /// Removes one seat per direct picker (interns who choose their hospital
    /// outside the lottery) from the named hospitals.
    pub fn with_direct_pickers(mut self, picks: &[HospitalId]) -> Result<Self> {
        for pick in picks {
            let h = self
                .hospitals
                .iter_mut()
                .find(|h| &h.id == pick)
                .ok_or_else(|| Error::UnknownHospital(pick.0.clone()))?;
            if h.capacity == 0 {
                return Err(Error::InvalidParameter(format!(
                    "hospital `{pick}` has no seat left for a direct picker"
                )));
            }
            h.capacity -= 1;
        }
        Ok(self)
    }

    pub fn intern_count(&self) -> usize {
        self.units.iter().map(|u| u.members.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    CapacityMismatch { capacity: usize, interns: usize },
    NonPositiveCapacity,
    DuplicateHospitalId(HospitalId),
    DuplicateInternId(InternId),
    DuplicateUnitId(UnitId),
    MemberCount { expected: usize, got: usize },
    UnknownHospital(HospitalId),
    DuplicateRanking(HospitalId),
    IncompleteRanking { missing: usize },
    NoInterns,
    EntryOutOfRange { value: f64 },
    RowSum { sum: f64 },
    ColumnSum { sum: f64, capacity: usize },
    CoupleRowsDiffer { hospital: usize },
    CoupleSplit,
    HospitalIndex { index: usize },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CapacityMismatch { capacity, interns } => write!(
                f,
                "capacity/intern mismatch: total capacity {capacity}, interns {interns}"
            ),
            Self::NonPositiveCapacity => f.write_str("capacity must be at least 1"),
            Self::DuplicateHospitalId(id) => write!(f, "duplicate hospital id `{id}`"),
            Self::DuplicateInternId(id) => write!(f, "duplicate intern id `{id}`"),
            Self::DuplicateUnitId(id) => write!(f, "duplicate unit id `{id}`"),
            Self::MemberCount { expected, got } => {
                write!(f, "expected {expected} member(s), got {got}")
            }
            Self::UnknownHospital(id) => write!(f, "unknown hospital `{id}`"),
            Self::DuplicateRanking(id) => write!(f, "hospital `{id}` ranked twice"),
            Self::IncompleteRanking { missing } => {
                write!(f, "incomplete ranking: {missing} hospital(s) missing")
            }
            Self::NoInterns => f.write_str("problem has no interns"),
            Self::EntryOutOfRange { value } => write!(f, "entry {value} outside [0, 1]"),
            Self::RowSum { sum } => write!(f, "row sums to {sum}, expected 1"),
            Self::ColumnSum { sum, capacity } => {
                write!(f, "column sums to {sum}, expected capacity {capacity}")
            }
            Self::CoupleRowsDiffer { hospital } => {
                write!(f, "couple rows differ at hospital column {hospital}")
            }
            Self::CoupleSplit => f.write_str("couple members assigned to different hospitals"),
            Self::HospitalIndex { index } => write!(f, "hospital index {index} out of range"),
        }
    }
}

/// An invariant violation with a path to the offending element,
/// e.g. `units[3].ranking` or `matrix.row[5]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub path: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.kind)
    }
}

fn violation(path: impl Into<String>, kind: ViolationKind) -> Violation {
    Violation {
        path: path.into(),
        kind,
    }
}

/// Checks every problem invariant and returns all violations found.
pub fn validate_problem(raw: &RawProblem) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut hospital_ids = HashSet::new();
    for (i, h) in raw.hospitals.iter().enumerate() {
        if h.capacity == 0 {
            out.push(violation(
                format!("hospitals[{i}]"),
                ViolationKind::NonPositiveCapacity,
            ));
        }
        if !hospital_ids.insert(&h.id) {
            out.push(violation(
                format!("hospitals[{i}]"),
                ViolationKind::DuplicateHospitalId(h.id.clone()),
            ));
        }
    }

    let mut unit_ids = HashSet::new();
    let mut intern_ids = HashSet::new();
    for (u, unit) in raw.units.iter().enumerate() {
        let path = format!("units[{u}]");
        if !unit_ids.insert(&unit.id) {
            out.push(violation(
                path.clone(),
                ViolationKind::DuplicateUnitId(unit.id.clone()),
            ));
        }
        let expected = match unit.kind {
            UnitKind::Single => 1,
            UnitKind::Couple => 2,
        };
        if unit.members.len() != expected {
            out.push(violation(
                format!("{path}.members"),
                ViolationKind::MemberCount {
                    expected,
                    got: unit.members.len(),
                },
            ));
        }
        for (m, member) in unit.members.iter().enumerate() {
            if !intern_ids.insert(member) {
                out.push(violation(
                    format!("{path}.members[{m}]"),
                    ViolationKind::DuplicateInternId(member.clone()),
                ));
            }
        }
        let mut seen = HashSet::new();
        for (r, h) in unit.ranking.iter().enumerate() {
            if !hospital_ids.contains(h) {
                out.push(violation(
                    format!("{path}.ranking[{r}]"),
                    ViolationKind::UnknownHospital(h.clone()),
                ));
            } else if !seen.insert(h) {
                out.push(violation(
                    format!("{path}.ranking[{r}]"),
                    ViolationKind::DuplicateRanking(h.clone()),
                ));
            }
        }
        if seen.len() < hospital_ids.len() {
            out.push(violation(
                format!("{path}.ranking"),
                ViolationKind::IncompleteRanking {
                    missing: hospital_ids.len() - seen.len(),
                },
            ));
        }
    }

    let interns = raw.intern_count();
    if interns == 0 {
        out.push(violation("units", ViolationKind::NoInterns));
    }
    let capacity: usize = raw.hospitals.iter().map(|h| h.capacity).sum();
    if capacity != interns {
        out.push(violation(
            "hospitals",
            ViolationKind::CapacityMismatch { capacity, interns },
        ));
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Single,
    /// Index into [`Problem::couples`].
    CoupleMember(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Intern {
    pub id: InternId,
    pub membership: Membership,
    /// Index of the decision unit this intern belongs to.
    pub unit: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Couple {
    pub id: UnitId,
    /// Row indices of the two members.
    pub members: [usize; 2],
    pub unit: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitRef {
    /// Row index of the single intern.
    Single(usize),
    /// Index into [`Problem::couples`].
    Couple(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    pub id: UnitId,
    pub kind: UnitRef,
}

/// Strict rankings over all hospitals, one per decision unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    rankings: Vec<Vec<usize>>,
    // ranks[u][h] = 1-based rank of hospital h for unit u
    ranks: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    fn new(rankings: Vec<Vec<usize>>) -> Self {
        let ranks = rankings
            .iter()
            .map(|r| {
                let mut inv = vec![0; r.len()];
                for (k, &h) in r.iter().enumerate() {
                    inv[h] = k + 1;
                }
                inv
            })
            .collect();
        Self { rankings, ranks }
    }

    /// Hospitals of `unit`, best first.
    pub fn ranking(&self, unit: usize) -> &[usize] {
        &self.rankings[unit]
    }

    /// Rank of `hospital` for `unit`, 1 being the top choice.
    pub fn rank_of(&self, unit: usize, hospital: usize) -> Result<usize> {
        let ranks = self
            .ranks
            .get(unit)
            .ok_or_else(|| Error::UnknownUnit(format!("#{unit}")))?;
        ranks
            .get(hospital)
            .copied()
            .ok_or_else(|| Error::UnknownHospital(format!("#{hospital}")))
    }

    pub fn units(&self) -> usize {
        self.rankings.len()
    }
}

/// A validated assignment problem with couples.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    hospitals: Vec<Hospital>,
    interns: Vec<Intern>,
    couples: Vec<Couple>,
    units: Vec<Unit>,
    preferences: PreferenceProfile,
    hospital_index: HashMap<HospitalId, usize>,
}

impl Problem {
    pub fn new(raw: RawProblem) -> Result<Self> {
        validate_problem(&raw).map_err(|v| Error::InvalidProblem(Violations(v)))?;
        let hospital_index: HashMap<HospitalId, usize> = raw
            .hospitals
            .iter()
            .enumerate()
            .map(|(i, h)| (h.id.clone(), i))
            .collect();
        let mut interns = Vec::new();
        let mut couples = Vec::new();
        let mut units = Vec::new();
        let mut rankings = Vec::new();
        for (u, unit) in raw.units.into_iter().enumerate() {
            let kind = match unit.kind {
                UnitKind::Single => {
                    interns.push(Intern {
                        id: unit.members[0].clone(),
                        membership: Membership::Single,
                        unit: u,
                    });
                    UnitRef::Single(interns.len() - 1)
                }
                UnitKind::Couple => {
                    let c = couples.len();
                    let first = interns.len();
                    for m in &unit.members {
                        interns.push(Intern {
                            id: m.clone(),
                            membership: Membership::CoupleMember(c),
                            unit: u,
                        });
                    }
                    couples.push(Couple {
                        id: unit.id.clone(),
                        members: [first, first + 1],
                        unit: u,
                    });
                    UnitRef::Couple(c)
                }
            };
            rankings.push(unit.ranking.iter().map(|h| hospital_index[h]).collect());
            units.push(Unit { id: unit.id, kind });
        }
        Ok(Self {
            hospitals: raw.hospitals,
            interns,
            couples,
            units,
            preferences: PreferenceProfile::new(rankings),
            hospital_index,
        })
    }

    /// Converts back to the unvalidated description; `Problem::new` of the
    /// result reproduces `self`.
    pub fn to_raw(&self) -> RawProblem {
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(u, unit)| {
                let (kind, members) = match unit.kind {
                    UnitRef::Single(i) => (UnitKind::Single, vec![self.interns[i].id.clone()]),
                    UnitRef::Couple(c) => (
                        UnitKind::Couple,
                        self.couples[c]
                            .members
                            .iter()
                            .map(|&i| self.interns[i].id.clone())
                            .collect(),
                    ),
                };
                RawUnit {
                    id: unit.id.clone(),
                    kind,
                    members,
                    ranking: self
                        .preferences
                        .ranking(u)
                        .iter()
                        .map(|&h| self.hospitals[h].id.clone())
                        .collect(),
                }
            })
            .collect();
        RawProblem {
            hospitals: self.hospitals.clone(),
            units,
        }
    }

    pub fn hospitals(&self) -> &[Hospital] {
        &self.hospitals
    }

    pub fn interns(&self) -> &[Intern] {
        &self.interns
    }

    pub fn couples(&self) -> &[Couple] {
        &self.couples
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn preferences(&self) -> &PreferenceProfile {
        &self.preferences
    }

    pub fn n_interns(&self) -> usize {
        self.interns.len()
    }

    pub fn n_hospitals(&self) -> usize {
        self.hospitals.len()
    }

    pub fn capacity(&self, h: usize) -> usize {
        self.hospitals[h].capacity
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.hospitals.iter().map(|h| h.capacity).collect()
    }

    /// Smallest hospital capacity.
    pub fn min_capacity(&self) -> usize {
        self.hospitals.iter().map(|h| h.capacity).min().unwrap_or(0)
    }

    pub fn has_couples(&self) -> bool {
        !self.couples.is_empty()
    }

    /// Row indices of single interns, ascending.
    pub fn singles(&self) -> impl Iterator<Item = usize> + '_ {
        self.interns
            .iter()
            .enumerate()
            .filter(|(_, i)| i.membership == Membership::Single)
            .map(|(idx, _)| idx)
    }

    pub fn hospital_index(&self, id: &HospitalId) -> Option<usize> {
        self.hospital_index.get(id).copied()
    }

    pub fn unit_index(&self, id: &UnitId) -> Option<usize> {
        self.units.iter().position(|u| &u.id == id)
    }

    pub fn intern_index(&self, id: &InternId) -> Option<usize> {
        self.interns.iter().position(|i| &i.id == id)
    }

    /// Ranking used by the intern in row `intern` (shared by couple members).
    pub fn intern_ranking(&self, intern: usize) -> &[usize] {
        self.preferences.ranking(self.interns[intern].unit)
    }

    /// Rank (1 = top) of `hospital` in the ranking of the unit `unit`.
    pub fn rank_of(&self, unit: &UnitId, hospital: &HospitalId) -> Result<usize> {
        let u = self
            .unit_index(unit)
            .ok_or_else(|| Error::UnknownUnit(unit.0.clone()))?;
        let h = self
            .hospital_index(hospital)
            .ok_or_else(|| Error::UnknownHospital(hospital.0.clone()))?;
        self.preferences.rank_of(u, h)
    }

    pub fn intern_rank(&self, intern: usize, hospital: usize) -> usize {
        self.preferences.ranks[self.interns[intern].unit][hospital]
    }
}

/// Dense row-major matrix of probabilities: rows are interns, columns hospitals.
///
/// A *target matrix* is a `Matrix` whose rows sum to 1, whose couple rows are
/// identical, and whose columns sum to the hospital capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub type TargetMatrix = Matrix;

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: n,
            cols,
            data,
        })
    }

    /// Builds a target matrix for `problem`, copying the first member's row of
    /// each couple onto the second so couple rows are exactly equal.
    pub fn for_problem(problem: &Problem, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = Self::from_rows(rows)?;
        m.check_shape(problem)?;
        m.sync_couples(problem);
        Ok(m)
    }

    pub fn check_shape(&self, problem: &Problem) -> Result<()> {
        if self.rows != problem.n_interns() || self.cols != problem.n_hospitals() {
            return Err(Error::DimensionMismatch {
                expected_rows: problem.n_interns(),
                expected_cols: problem.n_hospitals(),
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    pub fn sync_couples(&mut self, problem: &Problem) {
        for c in problem.couples() {
            let [a, b] = c.members;
            let (src, dst) = (a * self.cols, b * self.cols);
            self.data.copy_within(src..src + self.cols, dst);
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).iter().sum()
    }

    pub fn column_sum(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, c)).sum()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn count_positive(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Checks the stochastic-assignment invariants of `matrix` against `problem`.
///
/// Couple rows must match exactly; sums are checked within [`TOLERANCE`].
pub fn validate_target(problem: &Problem, matrix: &Matrix) -> Result<Result<(), Vec<Violation>>> {
    matrix.check_shape(problem)?;
    let mut out = Vec::new();
    for r in 0..matrix.rows() {
        for (c, &v) in matrix.row(r).iter().enumerate() {
            if !(-TOLERANCE..=1.0 + TOLERANCE).contains(&v) || v.is_nan() {
                out.push(violation(
                    format!("matrix[{r}][{c}]"),
                    ViolationKind::EntryOutOfRange { value: v },
                ));
            }
        }
        let sum = matrix.row_sum(r);
        if (sum - 1.0).abs() > TOLERANCE {
            out.push(violation(
                format!("matrix.row[{r}]"),
                ViolationKind::RowSum { sum },
            ));
        }
    }
    for h in 0..matrix.cols() {
        let sum = matrix.column_sum(h);
        let capacity = problem.capacity(h);
        if (sum - capacity as f64).abs() > TOLERANCE {
            out.push(violation(
                format!("matrix.column[{h}]"),
                ViolationKind::ColumnSum { sum, capacity },
            ));
        }
    }
    for c in problem.couples() {
        let [a, b] = c.members;
        for h in 0..matrix.cols() {
            if matrix.get(a, h) != matrix.get(b, h) {
                out.push(violation(
                    format!("couples[{}]", c.id),
                    ViolationKind::CoupleRowsDiffer { hospital: h },
                ));
            }
        }
    }
    Ok(if out.is_empty() { Ok(()) } else { Err(out) })
}

/// Like [`validate_target`] but folds violations into an error.
pub fn ensure_target(problem: &Problem, matrix: &Matrix) -> Result<()> {
    validate_target(problem, matrix)?.map_err(|v| Error::InvalidMatrix(Violations(v)))
}

/// A concrete placement: `hospital_of[i]` is the hospital column of intern row `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicAssignment {
    pub hospital_of: Vec<usize>,
}

impl DeterministicAssignment {
    pub fn new(hospital_of: Vec<usize>) -> Self {
        Self { hospital_of }
    }

    pub fn to_matrix(&self, n_hospitals: usize) -> Matrix {
        let mut m = Matrix::zeros(self.hospital_of.len(), n_hospitals);
        for (i, &h) in self.hospital_of.iter().enumerate() {
            m.set(i, h, 1.0);
        }
        m
    }

    /// Seats used per hospital.
    pub fn occupancy(&self, n_hospitals: usize) -> Vec<usize> {
        let mut occ = vec![0; n_hospitals];
        for &h in &self.hospital_of {
            occ[h] += 1;
        }
        occ
    }
}

/// Checks a deterministic assignment with exact integer arithmetic.
pub fn validate_assignment(
    problem: &Problem,
    assignment: &DeterministicAssignment,
) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if assignment.hospital_of.len() != problem.n_interns() {
        out.push(violation(
            "assignment",
            ViolationKind::MemberCount {
                expected: problem.n_interns(),
                got: assignment.hospital_of.len(),
            },
        ));
        return Err(out);
    }
    let m = problem.n_hospitals();
    let mut occ = vec![0usize; m];
    for (i, &h) in assignment.hospital_of.iter().enumerate() {
        if h >= m {
            out.push(violation(
                format!("assignment[{i}]"),
                ViolationKind::HospitalIndex { index: h },
            ));
        } else {
            occ[h] += 1;
        }
    }
    for (h, &n) in occ.iter().enumerate() {
        if n != problem.capacity(h) {
            out.push(violation(
                format!("assignment.column[{h}]"),
                ViolationKind::ColumnSum {
                    sum: n as f64,
                    capacity: problem.capacity(h),
                },
            ));
        }
    }
    for c in problem.couples() {
        let [a, b] = c.members;
        if assignment.hospital_of[a] != assignment.hospital_of[b] {
            out.push(violation(
                format!("couples[{}]", c.id),
                ViolationKind::CoupleSplit,
            ));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// A lottery over deterministic assignments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexCombination {
    pub terms: Vec<(f64, DeterministicAssignment)>,
}

impl ConvexCombination {
    pub fn single(assignment: DeterministicAssignment) -> Self {
        Self {
            terms: vec![(1.0, assignment)],
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w).sum()
    }

    /// The expected assignment matrix `Σ λᵏ Mᵏ`.
    pub fn mixture(&self, n_interns: usize, n_hospitals: usize) -> Matrix {
        let mut m = Matrix::zeros(n_interns, n_hospitals);
        for (w, a) in &self.terms {
            for (i, &h) in a.hospital_of.iter().enumerate() {
                m.add(i, h, *w);
            }
        }
        m
    }

    /// Checks weights and every assignment against `problem`.
    pub fn validate(&self, problem: &Problem) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for (k, (w, a)) in self.terms.iter().enumerate() {
            if !(*w > 0.0 && *w <= 1.0 + TOLERANCE) {
                out.push(violation(
                    format!("terms[{k}].weight"),
                    ViolationKind::EntryOutOfRange { value: *w },
                ));
            }
            if let Err(v) = validate_assignment(problem, a) {
                out.extend(v.into_iter().map(|mut v| {
                    v.path = format!("terms[{k}].{}", v.path);
                    v
                }));
            }
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > TOLERANCE {
            out.push(violation("weights", ViolationKind::RowSum { sum: total }));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Picks the term whose cumulative weight interval contains `u ∈ [0, 1)`.
    pub fn pick(&self, u: f64) -> Option<usize> {
        let total = self.total_weight();
        let target = u * total;
        let mut acc = 0.0;
        for (k, (w, _)) in self.terms.iter().enumerate() {
            acc += w;
            if target < acc {
                return Some(k);
            }
        }
        self.terms.len().checked_sub(1)
    }
}

/// Per-hospital comparison of singles' weight against α times couples' weight.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMembership {
    pub alpha: f64,
    /// `Σ_s M[s,h]`
    pub singles_weight: Vec<f64>,
    /// `2 Σ_c M[c₁,h]`
    pub couples_weight: Vec<f64>,
    pub per_hospital: Vec<bool>,
}

impl DomainMembership {
    pub fn in_domain(&self) -> bool {
        self.per_hospital.iter().all(|&b| b)
    }
}

/// Reports, per hospital, whether `Σ_s M[s,h] ≥ α · 2 Σ_c M[c₁,h]`.
pub fn domain_membership(problem: &Problem, matrix: &Matrix, alpha: f64) -> DomainMembership {
    let m = problem.n_hospitals();
    let mut singles_weight = vec![0.0; m];
    let mut couples_weight = vec![0.0; m];
    for s in problem.singles() {
        for (h, w) in singles_weight.iter_mut().enumerate() {
            *w += matrix.get(s, h);
        }
    }
    for c in problem.couples() {
        for (h, w) in couples_weight.iter_mut().enumerate() {
            *w += 2.0 * matrix.get(c.members[0], h);
        }
    }
    let per_hospital = singles_weight
        .iter()
        .zip(&couples_weight)
        .map(|(s, c)| *s >= alpha * c - TOLERANCE)
        .collect();
    DomainMembership {
        alpha,
        singles_weight,
        couples_weight,
        per_hospital,
    }
}
