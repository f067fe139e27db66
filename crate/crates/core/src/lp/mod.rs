//! Linear programming: a solver-agnostic problem description, two
//! deterministic backends, and the probability-trading program built on them.

mod simplex;
mod sparse;
pub mod trade;

pub use simplex::DenseSimplex;
pub use sparse::SparseSimplex;
pub use trade::{
    build_trade_lp, happiness, happiness_weights, intern_happiness, solve_trade_lp,
    solve_trade_lp_with, total_happiness, trade_surplus, TradeLp, TradeOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Sparse row: `(variable, coefficient)`.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize objective · x` subject to `constraints` and `x ≥ 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bound = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
                match c.sense {
                    Sense::Le => (lhs - c.rhs).max(0.0),
                    Sense::Ge => (c.rhs - lhs).max(0.0),
                    Sense::Eq => (lhs - c.rhs).abs(),
                }
            })
            .fold(bound, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed program: {0}")]
    Malformed(String),
}

/// A deterministic LP backend: equal inputs give bit-identical outputs.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}

/// Dense tableau up to this many `rows × columns` cells; sparse beyond.
pub const DENSE_CELL_LIMIT: usize = 250_000;

/// Picks the dense simplex for small programs and the sparse backend otherwise.
pub fn auto_solver(lp: &LinearProgram) -> Box<dyn LpSolver> {
    if lp.n_vars().saturating_mul(lp.constraints.len() + 1) <= DENSE_CELL_LIMIT {
        Box::new(DenseSimplex::default())
    } else {
        Box::new(SparseSimplex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small programs with known optima, solved by both backends.
    fn cases() -> Vec<(LinearProgram, f64)> {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3  -> (3,1): 11
        let mut a = LinearProgram::new(2);
        a.objective = vec![3.0, 2.0];
        a.add(vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        a.add(vec![(0, 1.0), (1, 3.0)], Sense::Le, 6.0);
        a.add(vec![(0, 1.0)], Sense::Le, 3.0);
        // max x + y, x + y = 1, x >= 0.25 (Ge row needs phase 1) -> 1
        let mut b = LinearProgram::new(2);
        b.objective = vec![1.0, 1.0];
        b.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        b.add(vec![(0, 1.0)], Sense::Ge, 0.25);
        // min x + 2y (max -x - 2y), x + y >= 2, x <= 1.5 -> x=1.5,y=.5: -2.5
        let mut c = LinearProgram::new(2);
        c.objective = vec![-1.0, -2.0];
        c.add(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 2.0);
        c.add(vec![(0, 1.0)], Sense::Le, 1.5);
        // redundant equality rows
        let mut d = LinearProgram::new(3);
        d.objective = vec![1.0, 0.0, 2.0];
        d.add(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 1.0);
        d.add(vec![(0, 2.0), (1, 2.0), (2, 2.0)], Sense::Eq, 2.0);
        // negative rhs normalisation: -x - y <= -1, x <= 2, y <= 2, max x - y
        let mut e = LinearProgram::new(2);
        e.objective = vec![1.0, -1.0];
        e.add(vec![(0, -1.0), (1, -1.0)], Sense::Le, -1.0);
        e.add(vec![(0, 1.0)], Sense::Le, 2.0);
        e.add(vec![(1, 1.0)], Sense::Le, 2.0);
        vec![(a, 11.0), (b, 1.0), (c, -2.5), (d, 2.0), (e, 2.0)]
    }

    #[test]
    fn both_backends_reach_known_optima() {
        let solvers: [&dyn LpSolver; 2] = [&DenseSimplex::default(), &SparseSimplex];
        for (lp, opt) in cases() {
            for s in solvers {
                let sol = s.solve(&lp).unwrap();
                assert!(
                    (sol.objective - opt).abs() < 1e-9,
                    "{} vs {opt}",
                    sol.objective
                );
                assert!(lp.max_violation(&sol.x) < 1e-9);
            }
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add(vec![(0, 1.0)], Sense::Le, 1.0);
        lp.add(vec![(0, 1.0)], Sense::Ge, 2.0);
        assert_eq!(DenseSimplex::default().solve(&lp), Err(LpError::Infeasible));
        assert_eq!(SparseSimplex.solve(&lp), Err(LpError::Infeasible));

        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(DenseSimplex::default().solve(&lp), Err(LpError::Unbounded));
        assert_eq!(SparseSimplex.solve(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![0.75, -150.0, 0.02, -6.0];
        lp.add(
            vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
            Sense::Le,
            0.0,
        );
        lp.add(
            vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
            Sense::Le,
            0.0,
        );
        lp.add(vec![(2, 1.0)], Sense::Le, 1.0);
        let sol = DenseSimplex::default().solve(&lp).unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-9);
    }
}
