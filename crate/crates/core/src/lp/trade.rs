//! Probability trading under Do-No-Harm.
//!
//! Starting from a baseline (RSD) matrix, the program reallocates
//! probability shares to maximise total happiness while keeping every
//! hospital exactly full and never lowering any intern's happiness.
//!
//! Happiness of a rank-probability vector `p` over `m` hospitals is
//! `Σ_k p_k (m − k + 1)²`.

use super::{auto_solver, LinearProgram, LpError, LpSolver, Sense};
use crate::error::{Error, Result};
use crate::model::{Matrix, Problem, UnitRef, TOLERANCE};
use crate::rsd::rank_probabilities;

/// Rank weights `(m − k + 1)²` for `k = 1..=m`.
pub fn happiness_weights(m: usize) -> Vec<f64> {
    (1..=m).map(|k| ((m - k + 1) as f64).powi(2)).collect()
}

pub fn happiness(rank_probs: &[f64], m: usize) -> Result<f64> {
    if rank_probs.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: rank_probs.len(),
        });
    }
    Ok(rank_probs
        .iter()
        .zip(happiness_weights(m))
        .map(|(p, w)| p * w)
        .sum())
}

/// Happiness of every intern under `matrix`.
pub fn intern_happiness(problem: &Problem, matrix: &Matrix) -> Result<Vec<f64>> {
    let m = problem.n_hospitals();
    rank_probabilities(problem, matrix)?
        .rows
        .iter()
        .map(|r| happiness(r, m))
        .collect()
}

pub fn total_happiness(problem: &Problem, matrix: &Matrix) -> Result<f64> {
    Ok(intern_happiness(problem, matrix)?.iter().sum())
}

/// Per-intern happiness change `after − before`.
pub fn trade_surplus(problem: &Problem, before: &Matrix, after: &Matrix) -> Result<Vec<f64>> {
    let b = intern_happiness(problem, before)?;
    let a = intern_happiness(problem, after)?;
    Ok(a.iter().zip(&b).map(|(a, b)| a - b).collect())
}

/// The trading program. Variable `u * m + h` is the probability that unit
/// `u` (a single, or a couple jointly) lands in hospital `h`.
///
/// Constraints, in order: one row-sum equality per unit, one capacity
/// equality per hospital (couple variables weigh 2), one Do-No-Harm
/// inequality per intern.
#[derive(Clone, Debug)]
pub struct TradeLp {
    pub program: LinearProgram,
    pub n_hospitals: usize,
    pub n_interns: usize,
    /// Intern rows covered by each unit's variables.
    pub unit_rows: Vec<Vec<usize>>,
    pub baseline_happiness: Vec<f64>,
}

impl TradeLp {
    pub fn n_variables(&self) -> usize {
        self.program.n_vars()
    }

    pub fn unit_constraints(&self) -> usize {
        self.unit_rows.len()
    }

    pub fn capacity_constraints(&self) -> usize {
        self.n_hospitals
    }

    pub fn dnh_constraints(&self) -> usize {
        self.n_interns
    }

    pub fn baseline_total(&self) -> f64 {
        self.baseline_happiness.iter().sum()
    }

    fn capacity_row(&self, h: usize) -> &super::Constraint {
        &self.program.constraints[self.unit_constraints() + h]
    }

    /// Capacity coefficient of unit `u`'s variable at hospital `h`.
    pub fn capacity_coefficient(&self, u: usize, h: usize) -> f64 {
        let var = u * self.n_hospitals + h;
        self.capacity_row(h)
            .coeffs
            .iter()
            .find(|(j, _)| *j == var)
            .map_or(0.0, |&(_, a)| a)
    }

    /// Unit-level variable vector of a target matrix (couples read member one).
    pub fn point_of(&self, matrix: &Matrix) -> Vec<f64> {
        let m = self.n_hospitals;
        let mut x = vec![0.0; self.n_variables()];
        for (u, rows) in self.unit_rows.iter().enumerate() {
            x[u * m..(u + 1) * m].copy_from_slice(matrix.row(rows[0]));
        }
        x
    }
}

pub fn build_trade_lp(problem: &Problem, baseline: &Matrix) -> Result<TradeLp> {
    crate::model::ensure_target(problem, baseline)?;
    let m = problem.n_hospitals();
    let n_units = problem.units().len();
    let weights = happiness_weights(m);
    let baseline_happiness = intern_happiness(problem, baseline)?;
    let prefs = problem.preferences();

    let unit_rows: Vec<Vec<usize>> = problem
        .units()
        .iter()
        .map(|u| match u.kind {
            UnitRef::Single(i) => vec![i],
            UnitRef::Couple(c) => problem.couples()[c].members.to_vec(),
        })
        .collect();

    let mut lp = LinearProgram::new(n_units * m);
    for (u, rows) in unit_rows.iter().enumerate() {
        for (k, &h) in prefs.ranking(u).iter().enumerate() {
            lp.objective[u * m + h] = rows.len() as f64 * weights[k];
        }
    }
    for u in 0..n_units {
        lp.add((0..m).map(|h| (u * m + h, 1.0)).collect(), Sense::Eq, 1.0);
    }
    for h in 0..m {
        lp.add(
            unit_rows
                .iter()
                .enumerate()
                .map(|(u, rows)| (u * m + h, rows.len() as f64))
                .collect(),
            Sense::Eq,
            problem.capacity(h) as f64,
        );
    }
    for (i, intern) in problem.interns().iter().enumerate() {
        let u = intern.unit;
        lp.add(
            prefs
                .ranking(u)
                .iter()
                .enumerate()
                .map(|(k, &h)| (u * m + h, weights[k]))
                .collect(),
            Sense::Ge,
            baseline_happiness[i],
        );
    }
    Ok(TradeLp {
        program: lp,
        n_hospitals: m,
        n_interns: problem.n_interns(),
        unit_rows,
        baseline_happiness,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeOutcome {
    pub matrix: Matrix,
    /// Total happiness after trading.
    pub objective: f64,
}

pub fn solve_trade_lp(lp: &TradeLp) -> Result<TradeOutcome> {
    solve_trade_lp_with(lp, auto_solver(&lp.program).as_ref())
}

/// Solves `lp` and repacks the optimal vertex as a target matrix.
pub fn solve_trade_lp_with(lp: &TradeLp, solver: &dyn LpSolver) -> Result<TradeOutcome> {
    let sol = solver.solve(&lp.program).map_err(|e| match e {
        LpError::Infeasible => Error::Internal(
            "trade program reported infeasible although the baseline is feasible".into(),
        ),
        e => Error::Lp(e),
    })?;
    let m = lp.n_hospitals;
    let mut matrix = Matrix::zeros(lp.n_interns, m);
    for (u, rows) in lp.unit_rows.iter().enumerate() {
        let mut p: Vec<f64> = sol.x[u * m..(u + 1) * m]
            .iter()
            .map(|&v| if v < 1e-12 { 0.0 } else { v.min(1.0) })
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        for &r in rows {
            matrix.row_mut(r).copy_from_slice(&p);
        }
    }
    let x = lp.point_of(&matrix);
    let objective = lp.program.objective_value(&x);
    // DNH rows come last.
    let dnh = &lp.program.constraints[lp.unit_constraints() + lp.capacity_constraints()..];
    for (i, c) in dnh.iter().enumerate() {
        let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        // relative: happiness scales with m², solver feasibility does not
        if lhs < c.rhs - TOLERANCE * c.rhs.abs().max(1.0) {
            return Err(Error::Internal(format!(
                "Do-No-Harm violated for intern {i} by {:e}",
                c.rhs - lhs
            )));
        }
    }
    Ok(TradeOutcome { matrix, objective })
}
