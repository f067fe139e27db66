//! Approximate decomposition of stochastic assignment matrices with couples.
//!
//! Stage one treats each couple as a single agent demanding one "couple
//! unit" per hospital and adds one dummy agent per hospital that tops the
//! couples' demand up to the next integer, spilling the rest into a dummy
//! hospital `h_∅`. Its exact decomposition fixes where couples go.
//!
//! Stage two, per stage-one realization, shrinks every single's demand at
//! hospitals where couples took more than their fractional share, in
//! proportion to the single's weight there, and routes the shortfall to
//! `h_∅`. That singles-only matrix is decomposed exactly; singles landing
//! in `h_∅` are then reseated into the leftover vacancies.
//!
//! On problems where singles carry at least as much weight as couples at
//! every hospital, every intern's row moves by at most `2/q̲` in L1.

use std::collections::HashMap;

use serde::Serialize;

use crate::bvn::{decompose_transport_with, DUST};
use crate::error::{Error, Result};
use crate::model::{
    ensure_target, ConvexCombination, DeterministicAssignment, Matrix, Problem, TOLERANCE,
};

/// Snaps values within [`TOLERANCE`] of an integer before rounding up.
fn ceil_snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= TOLERANCE {
        r
    } else {
        x.ceil()
    }
}

/// Couple-only problem: couples plus one dummy agent per hospital, over
/// `H ∪ {h_∅}` (the last column).
#[derive(Clone, Debug, PartialEq)]
pub struct Stage1Problem {
    /// Rows `0..|C|` are couples, rows `|C|..|C|+|H|` the dummy agents.
    pub matrix: Matrix,
    /// `⌈q'_h⌉` for each hospital, then the dummy hospital's capacity.
    pub capacities: Vec<usize>,
    /// `q'_h = Σ_c M[c₁,h]`, the couples' demand in couple units.
    pub couple_demand: Vec<f64>,
}

impl Stage1Problem {
    pub fn new(problem: &Problem, matrix: &Matrix) -> Self {
        let n_c = problem.couples().len();
        let m = problem.n_hospitals();
        let mut mp = Matrix::zeros(n_c + m, m + 1);
        let mut couple_demand = vec![0.0; m];
        for (c, couple) in problem.couples().iter().enumerate() {
            for (h, demand) in couple_demand.iter_mut().enumerate() {
                let v = matrix.get(couple.members[0], h);
                mp.set(c, h, v);
                *demand += v;
            }
        }
        let mut capacities = Vec::with_capacity(m + 1);
        for (h, &q) in couple_demand.iter().enumerate() {
            let up = ceil_snap(q);
            let top_up = (up - q).max(0.0);
            let top_up = if top_up < DUST { 0.0 } else { top_up };
            mp.set(n_c + h, h, top_up);
            mp.set(n_c + h, m, 1.0 - top_up);
            capacities.push(up as usize);
        }
        let placed: usize = capacities.iter().sum();
        capacities.push(n_c + m - placed);
        Self {
            matrix: mp,
            capacities,
            couple_demand,
        }
    }

    pub fn n_couples(&self) -> usize {
        self.matrix.rows() - self.couple_demand.len()
    }
}

/// Hospital of every couple (indexed like [`Problem::couples`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoupleAssignment {
    pub hospital_of: Vec<usize>,
}

impl CoupleAssignment {
    /// Couple units per hospital.
    pub fn counts(&self, n_hospitals: usize) -> Vec<usize> {
        let mut n = vec![0; n_hospitals];
        for &h in &self.hospital_of {
            n[h] += 1;
        }
        n
    }
}

/// Runs stage one: builds the couple-only problem and decomposes it exactly.
///
/// Without couples the combination is a single weight-1 empty assignment.
pub fn stage1(
    problem: &Problem,
    matrix: &Matrix,
) -> Result<(Stage1Problem, Vec<(f64, CoupleAssignment)>)> {
    ensure_target(problem, matrix)?;
    let s1 = Stage1Problem::new(problem, matrix);
    let n_c = problem.couples().len();
    if n_c == 0 {
        return Ok((
            s1,
            vec![(
                1.0,
                CoupleAssignment {
                    hospital_of: Vec::new(),
                },
            )],
        ));
    }
    let mut terms = Vec::new();
    decompose_transport_with(&s1.matrix, &s1.capacities, |w, a| {
        terms.push((
            w,
            CoupleAssignment {
                hospital_of: a[..n_c].to_vec(),
            },
        ));
    })?;
    let m = problem.n_hospitals();
    for (_, a) in &terms {
        for (h, n) in a.counts(m).into_iter().enumerate() {
            if 2 * n > problem.capacity(h) {
                return Err(Error::CapacityOverflow {
                    hospital: problem.hospitals()[h].id.0.clone(),
                    needed: 2 * n,
                    capacity: problem.capacity(h),
                });
            }
        }
    }
    Ok((s1, terms))
}

/// Singles-only problem for one stage-one realization, over `H ∪ {h_∅}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage2Problem {
    /// Intern rows of the singles, in problem order; row `k` of `matrix`
    /// belongs to `singles[k]`.
    pub singles: Vec<usize>,
    pub matrix: Matrix,
    /// Seats left for singles: `q_h − 2·(couple units at h)`.
    pub seats: Vec<usize>,
    /// Probability mass that would have gone negative and was clamped to 0.
    pub clamped_mass: f64,
}

/// Builds the reduced singles matrix for a realization with `couple_counts`
/// couple units per hospital.
pub fn stage2(
    problem: &Problem,
    matrix: &Matrix,
    couple_counts: &[usize],
    stage1: &Stage1Problem,
) -> Result<Stage2Problem> {
    let m = problem.n_hospitals();
    if couple_counts.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: couple_counts.len(),
        });
    }
    let singles: Vec<usize> = problem.singles().collect();
    let mut seats = Vec::with_capacity(m);
    for (h, &n) in couple_counts.iter().enumerate() {
        seats.push(problem.capacity(h).checked_sub(2 * n).ok_or_else(|| {
            Error::CapacityOverflow {
                hospital: problem.hospitals()[h].id.0.clone(),
                needed: 2 * n,
                capacity: problem.capacity(h),
            }
        })?);
    }
    let mut singles_weight = vec![0.0; m];
    for &s in &singles {
        for (h, w) in singles_weight.iter_mut().enumerate() {
            *w += matrix.get(s, h);
        }
    }
    let mut out = Matrix::zeros(singles.len(), m + 1);
    let mut clamped = 0.0;
    for (k, &s) in singles.iter().enumerate() {
        let mut kept = 0.0;
        for h in 0..m {
            let base = matrix.get(s, h);
            let excess = couple_counts[h] as f64 - stage1.couple_demand[h];
            let mut v = base;
            if excess > TOLERANCE && singles_weight[h] > 0.0 {
                v = base - base / singles_weight[h] * 2.0 * excess;
            }
            if v < 0.0 {
                clamped += -v;
                v = 0.0;
            }
            if v < DUST {
                v = 0.0;
            }
            out.set(k, h, v);
            kept += v;
        }
        let spill = (1.0 - kept).max(0.0);
        out.set(k, m, if spill < DUST { 0.0 } else { spill });
    }
    Ok(Stage2Problem {
        singles,
        matrix: out,
        seats,
        clamped_mass: clamped,
    })
}

impl Stage2Problem {
    /// Pads every hospital's fractional singles demand up to an integer with
    /// one dummy intern (rest of its row at `h_∅`), returning the padded
    /// matrix and integer column capacities.
    pub fn padded(&self) -> Result<(Matrix, Vec<usize>)> {
        let m = self.seats.len();
        let n = self.matrix.rows();
        let mut dummies: Vec<(usize, f64)> = Vec::new();
        let mut caps = Vec::with_capacity(m + 1);
        for h in 0..m {
            let d = self.matrix.column_sum(h);
            let up = ceil_snap(d);
            if up as usize > self.seats[h] {
                return Err(Error::Internal(format!(
                    "singles demand {d} exceeds {} free seats at hospital column {h}",
                    self.seats[h]
                )));
            }
            let gap = up - d;
            if gap > DUST {
                dummies.push((h, gap));
            }
            caps.push(up as usize);
        }
        let rows = n + dummies.len();
        let placed: usize = caps.iter().sum();
        caps.push(rows.checked_sub(placed).ok_or_else(|| {
            Error::Internal("stage-two demand exceeds the number of rows".into())
        })?);
        let mut padded = Matrix::zeros(rows, m + 1);
        for r in 0..n {
            padded.row_mut(r).copy_from_slice(self.matrix.row(r));
        }
        for (k, &(h, gap)) in dummies.iter().enumerate() {
            padded.set(n + k, h, gap);
            padded.set(n + k, m, 1.0 - gap);
        }
        Ok((padded, caps))
    }
}

/// Places singles sitting in `h_∅` (column `m`) into the vacancies left by
/// couples and placed singles. Displaced singles go in intern order, each to
/// the vacant hospital they rank highest.
fn reseat(
    problem: &Problem,
    couple_counts: &[usize],
    singles: &[usize],
    placement: &[usize],
) -> Result<Vec<usize>> {
    let m = problem.n_hospitals();
    let mut vacancies: Vec<isize> = (0..m)
        .map(|h| problem.capacity(h) as isize - 2 * couple_counts[h] as isize)
        .collect();
    for &h in placement {
        if h < m {
            vacancies[h] -= 1;
        }
    }
    if let Some(h) = vacancies.iter().position(|&v| v < 0) {
        return Err(Error::Internal(format!(
            "stitching overfills hospital column {h}"
        )));
    }
    let mut out = placement.to_vec();
    for (k, &s) in singles.iter().enumerate() {
        if out[k] < m {
            continue;
        }
        let h = problem
            .intern_ranking(s)
            .iter()
            .copied()
            .find(|&h| vacancies[h] > 0)
            .ok_or_else(|| Error::Internal("displaced single found no vacancy".into()))?;
        vacancies[h] -= 1;
        out[k] = h;
    }
    if vacancies.iter().any(|&v| v != 0) {
        return Err(Error::Internal(
            "vacancies left after reseating displaced singles".into(),
        ));
    }
    Ok(out)
}

/// Merges a couples realization and a singles realization (hospital per
/// single in problem order, `n_hospitals` meaning `h_∅`) into one valid
/// deterministic assignment.
pub fn stitch(
    problem: &Problem,
    couples: &CoupleAssignment,
    singles: &[usize],
) -> Result<DeterministicAssignment> {
    let single_rows: Vec<usize> = problem.singles().collect();
    if singles.len() != single_rows.len() {
        return Err(Error::LengthMismatch {
            expected: single_rows.len(),
            got: singles.len(),
        });
    }
    let counts = couples.counts(problem.n_hospitals());
    let seated = reseat(problem, &counts, &single_rows, singles)?;
    Ok(assemble(problem, couples, &single_rows, &seated))
}

fn assemble(
    problem: &Problem,
    couples: &CoupleAssignment,
    single_rows: &[usize],
    seated: &[usize],
) -> DeterministicAssignment {
    let mut hospital_of = vec![0; problem.n_interns()];
    for (c, couple) in problem.couples().iter().enumerate() {
        for &i in &couple.members {
            hospital_of[i] = couples.hospital_of[c];
        }
    }
    for (&s, &h) in single_rows.iter().zip(seated) {
        hospital_of[s] = h;
    }
    DeterministicAssignment::new(hospital_of)
}

/// Stage-one realizations sharing the same couple counts per hospital.
#[derive(Clone, Debug, PartialEq)]
pub struct SinglesGroup {
    pub couple_counts: Vec<usize>,
    /// Total stage-one weight of the group.
    pub weight: f64,
    /// Stage-two terms: weight and reseated hospital per single.
    pub terms: Vec<(f64, Vec<usize>)>,
    pub clamped_mass: f64,
}

/// Output of the two-stage algorithm in factored form.
///
/// The full lottery is every pair `(k, l)` of a stage-one term `k` and a
/// stage-two term `l` of `k`'s group, with weight `λᵏ · λ̂ˡ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxDecomposition {
    pub stage1: Stage1Problem,
    /// Stage-one terms with the index of their group.
    pub couple_terms: Vec<(f64, CoupleAssignment, usize)>,
    pub groups: Vec<SinglesGroup>,
}

impl ApproxDecomposition {
    pub fn term_count(&self) -> usize {
        self.couple_terms
            .iter()
            .map(|(_, _, g)| self.groups[*g].terms.len())
            .sum()
    }

    /// Worst stage-two clamping over all realizations.
    pub fn clamped_mass(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.clamped_mass)
            .fold(0.0, f64::max)
    }

    /// Expands the factored form in `(k, l)` order.
    pub fn to_combination(&self, problem: &Problem) -> ConvexCombination {
        let single_rows: Vec<usize> = problem.singles().collect();
        let mut terms = Vec::with_capacity(self.term_count());
        for (w, ca, g) in &self.couple_terms {
            for (wl, seated) in &self.groups[*g].terms {
                terms.push((w * wl, assemble(problem, ca, &single_rows, seated)));
            }
        }
        ConvexCombination { terms }
    }

    /// `Σ λᵏλ̂ˡ Mᵏˡ` without expanding the product.
    pub fn mixture(&self, problem: &Problem) -> Matrix {
        let mut mix = Matrix::zeros(problem.n_interns(), problem.n_hospitals());
        for (w, ca, _) in &self.couple_terms {
            for (c, couple) in problem.couples().iter().enumerate() {
                for &i in &couple.members {
                    mix.add(i, ca.hospital_of[c], *w);
                }
            }
        }
        let single_rows: Vec<usize> = problem.singles().collect();
        for g in &self.groups {
            for (wl, seated) in &g.terms {
                for (&s, &h) in single_rows.iter().zip(seated) {
                    mix.add(s, h, g.weight * wl);
                }
            }
        }
        mix
    }

    /// Draws one assignment: `u1` picks the stage-one term, `u2` the
    /// stage-two term within its group.
    pub fn sample(&self, problem: &Problem, u1: f64, u2: f64) -> DeterministicAssignment {
        let pick = |weights: &mut dyn Iterator<Item = f64>, u: f64, total: f64| {
            let mut acc = 0.0;
            let mut last = 0;
            for (i, w) in weights.enumerate() {
                acc += w;
                last = i;
                if u * total < acc {
                    return i;
                }
            }
            last
        };
        let total: f64 = self.couple_terms.iter().map(|t| t.0).sum();
        let k = pick(&mut self.couple_terms.iter().map(|t| t.0), u1, total);
        let (_, ca, g) = &self.couple_terms[k];
        let group = &self.groups[*g];
        let total: f64 = group.terms.iter().map(|t| t.0).sum();
        let l = pick(&mut group.terms.iter().map(|t| t.0), u2, total);
        let single_rows: Vec<usize> = problem.singles().collect();
        assemble(problem, ca, &single_rows, &group.terms[l].1)
    }
}

type TwoStage = (
    Stage1Problem,
    Vec<(f64, CoupleAssignment, usize)>,
    Vec<SinglesGroup>,
);

/// Stage one, grouping, and the per-group stage-two decompositions.
/// `sink(group, weight, reseated)` receives every stage-two term.
fn run_two_stage(
    problem: &Problem,
    matrix: &Matrix,
    mut sink: impl FnMut(usize, f64, &[usize]),
) -> Result<TwoStage> {
    let (s1, terms) = stage1(problem, matrix)?;
    let m = problem.n_hospitals();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut groups: Vec<SinglesGroup> = Vec::new();
    let mut couple_terms = Vec::with_capacity(terms.len());
    for (w, ca) in terms {
        let counts = ca.counts(m);
        let g = *index.entry(counts.clone()).or_insert_with(|| {
            groups.push(SinglesGroup {
                couple_counts: counts,
                weight: 0.0,
                terms: Vec::new(),
                clamped_mass: 0.0,
            });
            groups.len() - 1
        });
        groups[g].weight += w;
        couple_terms.push((w, ca, g));
    }
    for (g, group) in groups.iter_mut().enumerate() {
        let s2 = stage2(problem, matrix, &group.couple_counts, &s1)?;
        group.clamped_mass = s2.clamped_mass;
        let n_singles = s2.singles.len();
        if n_singles == 0 {
            sink(g, 1.0, &[]);
            continue;
        }
        let (padded, caps) = s2.padded()?;
        let mut failure = None;
        decompose_transport_with(&padded, &caps, |w, a| {
            if failure.is_some() {
                return;
            }
            match reseat(problem, &group.couple_counts, &s2.singles, &a[..n_singles]) {
                Ok(seated) => sink(g, w, &seated),
                Err(e) => failure = Some(e),
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok((s1, couple_terms, groups))
}

/// Two-stage approximate decomposition, keeping every term.
pub fn approximate_decompose(problem: &Problem, matrix: &Matrix) -> Result<ApproxDecomposition> {
    let mut stored: Vec<Vec<(f64, Vec<usize>)>> = Vec::new();
    let (stage1, couple_terms, mut groups) = run_two_stage(problem, matrix, |g, w, seated| {
        if stored.len() <= g {
            stored.resize_with(g + 1, Vec::new);
        }
        stored[g].push((w, seated.to_vec()));
    })?;
    for (g, terms) in stored.into_iter().enumerate() {
        groups[g].terms = terms;
    }
    Ok(ApproxDecomposition {
        stage1,
        couple_terms,
        groups,
    })
}

/// Mixture-only output of the two-stage algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxMixture {
    pub mixture: Matrix,
    /// Number of `(k, l)` terms in the full lottery.
    pub terms: usize,
    pub clamped_mass: f64,
}

/// Runs the two-stage algorithm accumulating only the mixture matrix, for
/// markets whose full lottery is too large to hold in memory.
pub fn approximate_mixture(problem: &Problem, matrix: &Matrix) -> Result<ApproxMixture> {
    let single_rows: Vec<usize> = problem.singles().collect();
    let mut singles_mix: Vec<Matrix> = Vec::new();
    let mut per_group: Vec<usize> = Vec::new();
    let m = problem.n_hospitals();
    let (_, couple_terms, groups) = run_two_stage(problem, matrix, |g, w, seated| {
        if singles_mix.len() <= g {
            singles_mix.resize_with(g + 1, || Matrix::zeros(single_rows.len(), m));
            per_group.resize(g + 1, 0);
        }
        per_group[g] += 1;
        for (k, &h) in seated.iter().enumerate() {
            singles_mix[g].add(k, h, w);
        }
    })?;
    let mut mixture = Matrix::zeros(problem.n_interns(), m);
    for (w, ca, _) in &couple_terms {
        for (c, couple) in problem.couples().iter().enumerate() {
            for &i in &couple.members {
                mixture.add(i, ca.hospital_of[c], *w);
            }
        }
    }
    for (g, group) in groups.iter().enumerate() {
        if let Some(sm) = singles_mix.get(g) {
            for (k, &s) in single_rows.iter().enumerate() {
                for h in 0..m {
                    mixture.add(s, h, group.weight * sm.get(k, h));
                }
            }
        }
    }
    let terms = couple_terms
        .iter()
        .map(|(_, _, g)| per_group.get(*g).copied().unwrap_or(0))
        .sum();
    Ok(ApproxMixture {
        mixture,
        terms,
        clamped_mass: groups.iter().map(|g| g.clamped_mass).fold(0.0, f64::max),
    })
}

/// Approximation guarantees for a problem at domain parameter `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub alpha: f64,
    pub min_capacity: usize,
    /// `1/((α/(1+α))·q̲)`; equals `2/q̲` at `α = 1`.
    pub upper: f64,
    /// `1/((α/(1+α))·q̲ + 1)`; equals `2/(q̲+2)` at `α = 1`.
    pub lower: f64,
    /// `1/min_h Σ_s M[s,h]`, the upper bound in terms of singles' demand.
    pub singles_demand_upper: f64,
}

pub fn theoretical_bounds(problem: &Problem, matrix: &Matrix, alpha: f64) -> Result<Bounds> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let q = problem.min_capacity();
    let share = alpha / (1.0 + alpha) * q as f64;
    let m = problem.n_hospitals();
    let min_singles = (0..m)
        .map(|h| problem.singles().map(|s| matrix.get(s, h)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(Bounds {
        alpha,
        min_capacity: q,
        upper: 1.0 / share,
        lower: 1.0 / (share + 1.0),
        singles_demand_upper: 1.0 / min_singles,
    })
}

/// Row-L1 distances between a target and a lottery's mixture.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub row_l1: Vec<f64>,
    /// The ε of the approximation: `max_i Σ_h |M − Σλᵏ Mᵏ|_{i,h}`.
    pub max_row_l1: f64,
    pub avg_row_l1: f64,
    /// Largest couple-row deviation (zero up to rounding for the two-stage algorithm).
    pub max_couple_row_l1: f64,
    pub bounds: Bounds,
    pub in_domain: bool,
    pub clamped_mass: f64,
    pub terms: usize,
}

/// Compares a mixture matrix against `target`.
pub fn report_from_mixture(
    problem: &Problem,
    target: &Matrix,
    mixture: &Matrix,
    alpha: f64,
) -> Result<DecompositionReport> {
    target.check_shape(problem)?;
    mixture.check_shape(problem)?;
    let row_l1: Vec<f64> = (0..problem.n_interns())
        .map(|i| {
            target
                .row(i)
                .iter()
                .zip(mixture.row(i))
                .map(|(a, b)| (a - b).abs())
                .sum()
        })
        .collect();
    let n = row_l1.len().max(1) as f64;
    let max_couple_row_l1 = problem
        .couples()
        .iter()
        .flat_map(|c| c.members)
        .map(|i| row_l1[i])
        .fold(0.0, f64::max);
    Ok(DecompositionReport {
        max_row_l1: row_l1.iter().copied().fold(0.0, f64::max),
        avg_row_l1: row_l1.iter().sum::<f64>() / n,
        max_couple_row_l1,
        row_l1,
        bounds: theoretical_bounds(problem, target, alpha)?,
        in_domain: crate::model::domain_membership(problem, target, alpha).in_domain(),
        clamped_mass: 0.0,
        terms: 0,
    })
}

/// Measures how well `combination` approximates `target` (at `α = 1`).
pub fn approximation_error(
    problem: &Problem,
    target: &Matrix,
    combination: &ConvexCombination,
) -> Result<DecompositionReport> {
    let mix = combination.mixture(problem.n_interns(), problem.n_hospitals());
    let mut r = report_from_mixture(problem, target, &mix, 1.0)?;
    r.terms = combination.len();
    Ok(r)
}

impl ApproxDecomposition {
    pub fn report(
        &self,
        problem: &Problem,
        target: &Matrix,
        alpha: f64,
    ) -> Result<DecompositionReport> {
        let mut r = report_from_mixture(problem, target, &self.mixture(problem), alpha)?;
        r.terms = self.term_count();
        r.clamped_mass = self.clamped_mass();
        Ok(r)
    }
}

impl ApproxMixture {
    pub fn report(
        &self,
        problem: &Problem,
        target: &Matrix,
        alpha: f64,
    ) -> Result<DecompositionReport> {
        let mut r = report_from_mixture(problem, target, &self.mixture, alpha)?;
        r.terms = self.terms;
        r.clamped_mass = self.clamped_mass;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::four_interns;
    use crate::model::{validate_assignment, RawProblem, RawUnit};

    /// One couple at 0.5/0.5 over two capacity-4 hospitals, six singles.
    fn small_couple_market() -> (Problem, Matrix) {
        let mut raw = RawProblem::default()
            .hospital("h1", 4)
            .hospital("h2", 4)
            .unit(RawUnit::couple("c", ["c1", "c2"], &["h1", "h2"]));
        for i in 0..6 {
            raw = raw.unit(RawUnit::single(&format!("s{i}"), &["h1", "h2"]));
        }
        let p = Problem::new(raw).unwrap();
        let rows = vec![
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.9, 0.1],
            vec![0.6, 0.4],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.3, 0.7],
            vec![0.2, 0.8],
        ];
        let m = Matrix::for_problem(&p, rows).unwrap();
        (p, m)
    }

    #[test]
    fn no_couples_stage1_is_trivial() {
        let p = four_interns();
        let m = Matrix::from_rows(vec![vec![0.25; 4]; 4]).unwrap();
        let (s1, terms) = stage1(&p, &m).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, 1.0);
        assert!(terms[0].1.hospital_of.is_empty());
        assert_eq!(s1.n_couples(), 0);
    }

    #[test]
    fn stage1_one_couple_half_half() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("h1", 2)
                .hospital("h2", 2)
                .unit(RawUnit::couple("c", ["a", "b"], &["h1", "h2"]))
                .unit(RawUnit::single("s", &["h1", "h2"]))
                .unit(RawUnit::single("t", &["h1", "h2"])),
        )
        .unwrap();
        let m = Matrix::for_problem(&p, vec![vec![0.5, 0.5]; 4]).unwrap();
        let (s1, terms) = stage1(&p, &m).unwrap();
        assert_eq!(s1.matrix.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(s1.matrix.row(1), &[0.5, 0.0, 0.5]);
        assert_eq!(s1.matrix.row(2), &[0.0, 0.5, 0.5]);
        assert_eq!(s1.capacities, vec![1, 1, 1]);
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().all(|(w, _)| *w == 0.5));
        let mut at: Vec<usize> = terms.iter().map(|(_, a)| a.hospital_of[0]).collect();
        at.sort();
        assert_eq!(at, vec![0, 1]);
    }

    #[test]
    fn stage2_without_excess_keeps_singles() {
        let (p, m) = small_couple_market();
        let (s1, _) = stage1(&p, &m).unwrap();
        // zero couple units everywhere never exceeds the quota
        let s2 = stage2(&p, &m, &[0, 0], &s1).unwrap();
        for (k, &s) in s2.singles.iter().enumerate() {
            assert_eq!(&s2.matrix.row(k)[..2], m.row(s));
            assert_eq!(s2.matrix.get(k, 2), 0.0);
        }
        assert_eq!(s2.clamped_mass, 0.0);
    }

    #[test]
    fn stage2_proportional_reduction() {
        // Singles' weight at h1 is 3.0; couples place 1 unit against a
        // demand of 0.5, so each single loses M[s,h1] · (1/3) · 2 · 0.5.
        let (p, m) = small_couple_market();
        let (s1, _) = stage1(&p, &m).unwrap();
        let s2 = stage2(&p, &m, &[1, 0], &s1).unwrap();
        for (k, &s) in s2.singles.iter().enumerate() {
            let base = m.get(s, 0);
            let expected = base - base / 3.0;
            assert!((s2.matrix.get(k, 0) - expected).abs() < 1e-12);
            assert_eq!(s2.matrix.get(k, 1), m.get(s, 1));
            assert!((s2.matrix.row_sum(k) - 1.0).abs() < 1e-12);
        }
        // the reduced column matches the seats exactly
        assert!((s2.matrix.column_sum(0) - 2.0).abs() < 1e-12);
        assert_eq!(s2.seats, vec![2, 4]);
    }

    #[test]
    fn stage2_weight_four_loses_a_quarter() {
        // Direct evaluation of the reduction: weight 4, excess 0.5.
        let mut raw = RawProblem::default()
            .hospital("h", 5)
            .hospital("g", 7)
            .unit(RawUnit::couple("c", ["a", "b"], &["h", "g"]));
        for i in 0..10 {
            raw = raw.unit(RawUnit::single(&format!("s{i}"), &["h", "g"]));
        }
        let p = Problem::new(raw).unwrap();
        let mut rows = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        for _ in 0..8 {
            rows.push(vec![0.5, 0.5]);
        }
        rows.push(vec![0.0, 1.0]);
        rows.push(vec![0.0, 1.0]);
        let m = Matrix::for_problem(&p, rows).unwrap();
        let (s1, _) = stage1(&p, &m).unwrap();
        let s2 = stage2(&p, &m, &[1, 0], &s1).unwrap();
        assert!((s2.matrix.get(0, 0) - (0.5 - 0.5 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn stitch_reseats_in_order() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("a", 1)
                .hospital("b", 1)
                .hospital("c", 2)
                .unit(RawUnit::couple("cp", ["x", "y"], &["c", "a", "b"]))
                .unit(RawUnit::single("s", &["b", "a", "c"]))
                .unit(RawUnit::single("t", &["a", "b", "c"])),
        )
        .unwrap();
        let ca = CoupleAssignment {
            hospital_of: vec![2],
        };
        // no displaced singles: union
        let a = stitch(&p, &ca, &[1, 0]).unwrap();
        assert_eq!(a.hospital_of, vec![2, 2, 1, 0]);
        // one displaced single takes the only vacancy
        let a = stitch(&p, &ca, &[3, 0]).unwrap();
        assert_eq!(a.hospital_of, vec![2, 2, 1, 0]);
        // two displaced: s (lower row) picks its favourite vacancy first
        let a = stitch(&p, &ca, &[3, 3]).unwrap();
        assert_eq!(a.hospital_of, vec![2, 2, 1, 0]);
        assert!(validate_assignment(&p, &a).is_ok());
        // overfilled hospital is an upstream bug
        assert!(stitch(&p, &ca, &[0, 0]).is_err());
    }

    #[test]
    fn couple_free_reduces_to_exact() {
        let p = four_interns();
        let m = crate::rsd::rsd_exact(&p).unwrap().to_matrix();
        let d = approximate_decompose(&p, &m).unwrap();
        let r = d.report(&p, &m, 1.0).unwrap();
        assert!(r.max_row_l1 < 1e-12);
        let cc = d.to_combination(&p);
        assert!(cc.validate(&p).is_ok());
    }

    #[test]
    fn small_market_within_bound() {
        let (p, m) = small_couple_market();
        assert!(crate::model::domain_membership(&p, &m, 1.0).in_domain());
        let d = approximate_decompose(&p, &m).unwrap();
        let cc = d.to_combination(&p);
        assert!(cc.validate(&p).is_ok());
        let r = approximation_error(&p, &m, &cc).unwrap();
        assert!(r.max_row_l1 <= 0.5 + 1e-9);
        assert!(r.max_couple_row_l1 < 1e-12);
        assert_eq!(r.terms, d.term_count());
        let mix = approximate_mixture(&p, &m).unwrap();
        assert!(mix.mixture.max_abs_diff(&cc.mixture(8, 2)) < 1e-12);
        assert_eq!(mix.terms, cc.len());
    }

    #[test]
    fn report_on_point_mass() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("a", 1)
                .hospital("b", 1)
                .unit(RawUnit::single("x", &["a", "b"]))
                .unit(RawUnit::single("y", &["a", "b"])),
        )
        .unwrap();
        let m = Matrix::from_rows(vec![vec![0.5, 0.5]; 2]).unwrap();
        let cc = ConvexCombination::single(DeterministicAssignment::new(vec![0, 1]));
        let r = approximation_error(&p, &m, &cc).unwrap();
        assert_eq!(r.row_l1, vec![1.0, 1.0]);
        assert_eq!(r.max_row_l1, 1.0);
        assert_eq!(r.avg_row_l1, 1.0);
    }

    #[test]
    fn bounds_formulas() {
        let p = crate::model::tests::one_couple_two_singles();
        let m = Matrix::for_problem(&p, vec![vec![0.5, 0.5]; 4]).unwrap();
        let b = theoretical_bounds(&p, &m, 1.0).unwrap();
        assert_eq!(b.min_capacity, 2);
        assert_eq!(b.upper, 1.0);
        assert_eq!(b.lower, 0.5);
        assert_eq!(b.singles_demand_upper, 1.0);
        let big = theoretical_bounds(&p, &m, 1e12).unwrap();
        assert!((big.upper - 0.5).abs() < 1e-9);
        assert!((big.lower - 1.0 / 3.0).abs() < 1e-9);
        assert!(theoretical_bounds(&p, &m, 0.0).is_err());
    }
}
