//! Best achievable lottery for tiny instances, by enumerating every valid
//! assignment and solving a min-max-L1 linear program over their weights.

use crate::error::{Error, Result};
use crate::lp::{auto_solver, LinearProgram, Sense};
use crate::model::{
    ensure_target, ConvexCombination, DeterministicAssignment, Matrix, Problem, UnitRef,
};

pub const ORACLE_MAX_INTERNS: usize = 12;
pub const ORACLE_MAX_HOSPITALS: usize = 4;

/// Every assignment respecting capacities with couples co-located.
pub fn enumerate_assignments(problem: &Problem) -> Vec<DeterministicAssignment> {
    fn go(
        problem: &Problem,
        unit: usize,
        row: usize,
        free: &mut [usize],
        current: &mut Vec<usize>,
        out: &mut Vec<DeterministicAssignment>,
    ) {
        if unit == problem.units().len() {
            out.push(DeterministicAssignment::new(current.clone()));
            return;
        }
        let size = match problem.units()[unit].kind {
            UnitRef::Single(_) => 1,
            UnitRef::Couple(_) => 2,
        };
        for h in 0..free.len() {
            if free[h] >= size {
                free[h] -= size;
                current.extend(std::iter::repeat_n(h, size));
                go(problem, unit + 1, row + size, free, current, out);
                current.truncate(row);
                free[h] += size;
            }
        }
    }
    let mut out = Vec::new();
    go(
        problem,
        0,
        0,
        &mut problem.capacities(),
        &mut Vec::with_capacity(problem.n_interns()),
        &mut out,
    );
    out
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Smallest achievable maximum row-L1 distance.
    pub epsilon: f64,
    /// A lottery attaining it.
    pub witness: ConvexCombination,
    /// Number of valid deterministic assignments.
    pub assignments: usize,
}

/// Minimizes `max_i Σ_h |M[i,h] − Σ_a λ_a a[i,h]|` over lotteries `λ` on all
/// valid assignments. Limited to 12 interns and 4 hospitals.
pub fn brute_force_best_decomposition(problem: &Problem, matrix: &Matrix) -> Result<OracleResult> {
    if problem.n_interns() > ORACLE_MAX_INTERNS || problem.n_hospitals() > ORACLE_MAX_HOSPITALS {
        return Err(Error::TooLarge(format!(
            "{} interns / {} hospitals; the oracle handles at most {ORACLE_MAX_INTERNS} / {ORACLE_MAX_HOSPITALS}",
            problem.n_interns(),
            problem.n_hospitals()
        )));
    }
    ensure_target(problem, matrix)?;
    let all = enumerate_assignments(problem);
    let n = problem.n_interns();
    let m = problem.n_hospitals();
    let a = all.len();
    // variables: λ (a), t[i,h] (n·m), ε
    let t = |i: usize, h: usize| a + i * m + h;
    let eps = a + n * m;
    let mut lp = LinearProgram::new(eps + 1);
    lp.objective[eps] = -1.0;
    lp.add((0..a).map(|k| (k, 1.0)).collect(), Sense::Eq, 1.0);
    // rows hit by (i, h) for each assignment
    let mut users = vec![Vec::new(); n * m];
    for (k, asg) in all.iter().enumerate() {
        for (i, &h) in asg.hospital_of.iter().enumerate() {
            users[i * m + h].push(k);
        }
    }
    for i in 0..n {
        for h in 0..m {
            // t ≥ M − mix and t ≥ mix − M
            let mut up = vec![(t(i, h), 1.0)];
            up.extend(users[i * m + h].iter().map(|&k| (k, 1.0)));
            lp.add(up, Sense::Ge, matrix.get(i, h));
            let mut down = vec![(t(i, h), 1.0)];
            down.extend(users[i * m + h].iter().map(|&k| (k, -1.0)));
            lp.add(down, Sense::Ge, -matrix.get(i, h));
        }
        let mut row: Vec<(usize, f64)> = (0..m).map(|h| (t(i, h), 1.0)).collect();
        row.push((eps, -1.0));
        lp.add(row, Sense::Le, 0.0);
    }
    let sol = auto_solver(&lp).solve(&lp)?;
    let total: f64 = sol.x[..a].iter().sum();
    let witness = ConvexCombination {
        terms: all
            .iter()
            .zip(&sol.x[..a])
            .filter(|(_, &w)| w > 1e-12)
            .map(|(asg, &w)| (w / total, asg.clone()))
            .collect(),
    };
    let mix = witness.mixture(n, m);
    let epsilon = (0..n)
        .map(|i| {
            (0..m)
                .map(|h| (matrix.get(i, h) - mix.get(i, h)).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(OracleResult {
        epsilon,
        witness,
        assignments: a,
    })
}
