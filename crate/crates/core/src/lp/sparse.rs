use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use super::{LinearProgram, LpError, LpSolution, LpSolver, Sense};

/// Revised simplex with sparse LU factorisation, backed by `minilp`.
///
/// Deterministic (no randomised pivoting), and fast enough for trade
/// programs with ~10⁴ variables.
#[derive(Clone, Copy, Debug, Default)]
pub struct SparseSimplex;

impl LpSolver for SparseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let n = lp.n_vars();
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = lp
            .objective
            .iter()
            .map(|&c| p.add_var(c, (0.0, f64::INFINITY)))
            .collect();
        for c in &lp.constraints {
            let mut expr = LinearExpr::empty();
            for &(j, a) in &c.coeffs {
                let v = *vars
                    .get(j)
                    .ok_or_else(|| LpError::Malformed(format!("variable {j} out of range")))?;
                expr.add(v, a);
            }
            let op = match c.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(expr, op, c.rhs);
        }
        let sol = p.solve().map_err(|e| match e {
            minilp::Error::Infeasible => LpError::Infeasible,
            minilp::Error::Unbounded => LpError::Unbounded,
        })?;
        let x: Vec<f64> = (0..n).map(|j| sol.var_value(vars[j]).max(0.0)).collect();
        // minilp can report an unbounded ray as infinite values
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Unbounded);
        }
        let objective = lp.objective_value(&x);
        Ok(LpSolution { x, objective })
    }
}
