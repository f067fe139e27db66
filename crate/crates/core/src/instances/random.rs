//! Random stochastic assignment matrices by iterative row/column scaling.

use rand::Rng;

use super::problem_from_matrix;
use crate::error::{Error, Result};
use crate::model::{domain_membership, Matrix, Problem};
use crate::seeding::rng_for;

pub const SINKHORN_TOLERANCE: f64 = 1e-12;
pub const SINKHORN_MAX_SWEEPS: usize = 10_000;

/// Rejection-sampling budget for landing in the singles-dominate domain.
const MAX_ATTEMPTS: usize = 10_000;

/// Alternately rescales rows to sum 1 and columns to sum `col_sums` until the
/// largest row deviation drops below `tol`. Returns the sweeps used.
///
/// Rows that start equal stay bitwise equal.
pub fn sinkhorn(
    matrix: &mut Matrix,
    col_sums: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<usize> {
    if col_sums.len() != matrix.cols() {
        return Err(Error::LengthMismatch {
            expected: matrix.cols(),
            got: col_sums.len(),
        });
    }
    let mut deviation = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for r in 0..matrix.rows() {
            let s = matrix.row_sum(r);
            if s > 0.0 {
                matrix.row_mut(r).iter_mut().for_each(|v| *v /= s);
            }
        }
        let sums: Vec<f64> = (0..matrix.cols()).map(|c| matrix.column_sum(c)).collect();
        for r in 0..matrix.rows() {
            for (v, (s, t)) in matrix.row_mut(r).iter_mut().zip(sums.iter().zip(col_sums)) {
                if *s > 0.0 {
                    *v *= t / s;
                }
            }
        }
        deviation = (0..matrix.rows())
            .map(|r| (matrix.row_sum(r) - 1.0).abs())
            .fold(0.0, f64::max);
        if deviation < tol {
            return Ok(sweep);
        }
    }
    Err(Error::NotConverged {
        sweeps: max_sweeps,
        deviation,
    })
}

/// One scaled matrix: singles' rows first, then each couple's two rows.
fn scaled_sample(
    rng: &mut impl Rng,
    num_singles: usize,
    num_couples: usize,
    capacities: &[usize],
) -> Result<Matrix> {
    let rows = num_singles + 2 * num_couples;
    let cols = capacities.len();
    let targets: Vec<f64> = capacities.iter().map(|&q| q as f64).collect();
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for v in m.row_mut(r) {
            *v = 1.0 - rng.gen::<f64>();
        }
    }
    sinkhorn(&mut m, &targets, SINKHORN_TOLERANCE, SINKHORN_MAX_SWEEPS)?;
    for c in 0..num_couples {
        let first = num_singles + 2 * c;
        let row = m.row(first).to_vec();
        m.row_mut(first + 1).copy_from_slice(&row);
    }
    if num_couples > 0 {
        sinkhorn(&mut m, &targets, SINKHORN_TOLERANCE, SINKHORN_MAX_SWEEPS)?;
    }
    Ok(m)
}

/// A random market with `num_singles` singles `s0..`, `num_couples` couples
/// `c0..` and hospitals `h0..` of the given capacities, whose target lies in
/// the singles-dominate domain (α = 1). Rankings follow the target rows.
pub fn gen_random_market(
    num_singles: usize,
    num_couples: usize,
    capacities: &[usize],
    seed: u64,
) -> Result<(Problem, Matrix)> {
    let total: usize = capacities.iter().sum();
    if total != num_singles + 2 * num_couples {
        return Err(Error::InvalidParameter(format!(
            "capacities sum to {total} but there are {} interns",
            num_singles + 2 * num_couples
        )));
    }
    let hospitals: Vec<(String, usize)> = capacities
        .iter()
        .enumerate()
        .map(|(h, &q)| (format!("h{h}"), q))
        .collect();
    let mut units: Vec<(String, Vec<String>)> = (0..num_singles)
        .map(|s| (format!("s{s}"), vec![format!("s{s}")]))
        .collect();
    units.extend(
        (0..num_couples).map(|c| (format!("c{c}"), vec![format!("c{c}.1"), format!("c{c}.2")])),
    );
    let mut rng = rng_for(seed, &[]);
    for _ in 0..MAX_ATTEMPTS {
        let m = scaled_sample(&mut rng, num_singles, num_couples, capacities)?;
        let (problem, m) = problem_from_matrix(&hospitals, &units, m)?;
        if domain_membership(&problem, &m, 1.0).in_domain() {
            return Ok((problem, m));
        }
    }
    Err(Error::InvalidParameter(format!(
        "no sample inside the singles-dominate domain after {MAX_ATTEMPTS} attempts"
    )))
}

/// The target matrix of [`gen_random_market`].
pub fn gen_random_matrix(
    num_singles: usize,
    num_couples: usize,
    capacities: &[usize],
    seed: u64,
) -> Result<Matrix> {
    gen_random_market(num_singles, num_couples, capacities, seed).map(|(_, m)| m)
}
