use super::{LinearProgram, LpError, LpSolution, LpSolver, Sense};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;

/// Sparse coefficients, sense and right-hand side of one constraint.
type Row = (Vec<(usize, f64)>, Sense, f64);

/// Two-phase dense tableau simplex.
///
/// Entering column: largest reduced cost, switching permanently to Bland's
/// smallest-index rule after `degenerate_switch` consecutive degenerate
/// pivots. Leaving row: minimum ratio, ties to the smallest basic index.
#[derive(Clone, Debug)]
pub struct DenseSimplex {
    pub max_iterations: usize,
    pub degenerate_switch: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            degenerate_switch: 50,
        }
    }
}

struct Tableau {
    /// `rows + 1` rows (last is the objective), `cols + 1` columns (last is rhs).
    a: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.a[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let (before, rest) = self.a.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations maximising the objective row over columns
    /// `< active_cols`.
    fn optimise(&mut self, active_cols: usize, cfg: &DenseSimplex) -> Result<(), LpError> {
        let obj = self.rows;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        for _ in 0..cfg.max_iterations {
            // objective row stores -reduced cost; entering when negative
            let entering = if bland {
                (0..active_cols).find(|&c| self.at(obj, c) < -COST_EPS)
            } else {
                let mut best = None;
                let mut best_val = -COST_EPS;
                for c in 0..active_cols {
                    let v = self.at(obj, c);
                    if v < best_val {
                        best_val = v;
                        best = Some(c);
                    }
                }
                best
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio.abs() <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= cfg.degenerate_switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
        Err(LpError::IterationLimit(cfg.max_iterations))
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let n = lp.n_vars();
        let m = lp.constraints.len();
        for c in &lp.constraints {
            if let Some(&(j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(LpError::Malformed(format!("variable {j} out of range")));
            }
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed("non-finite right-hand side".into()));
            }
        }

        // Normalise to rhs >= 0.
        let rows: Vec<Row> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let sense = match c.sense {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    };
                    (
                        c.coeffs.iter().map(|&(j, a)| (j, -a)).collect(),
                        sense,
                        -c.rhs,
                    )
                } else {
                    (c.coeffs.clone(), c.sense, c.rhs)
                }
            })
            .collect();

        // Columns: originals | slack/surplus | artificials.
        let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let cols = n + n_slack + n_art;
        let w = cols + 1;
        let mut t = Tableau {
            a: vec![0.0; (m + 1) * w],
            rows: m,
            cols,
            basis: vec![0; m],
        };
        let (mut s, mut art) = (n, n + n_slack);
        for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            for &(j, a) in coeffs {
                t.a[r * w + j] += a;
            }
            t.a[r * w + cols] = *rhs;
            match sense {
                Sense::Le => {
                    t.a[r * w + s] = 1.0;
                    t.basis[r] = s;
                    s += 1;
                }
                Sense::Ge => {
                    t.a[r * w + s] = -1.0;
                    s += 1;
                    t.a[r * w + art] = 1.0;
                    t.basis[r] = art;
                    art += 1;
                }
                Sense::Eq => {
                    t.a[r * w + art] = 1.0;
                    t.basis[r] = art;
                    art += 1;
                }
            }
        }

        // Phase 1: maximise -Σ artificials.
        if n_art > 0 {
            let obj = m * w;
            for c in n + n_slack..cols {
                t.a[obj + c] = 1.0;
            }
            for r in 0..m {
                if t.basis[r] >= n + n_slack {
                    for c in 0..w {
                        let v = t.a[r * w + c];
                        t.a[obj + c] -= v;
                    }
                }
            }
            t.optimise(cols, self)?;
            let infeas = -t.a[obj + cols];
            let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
            if infeas > 1e-9 * scale {
                return Err(LpError::Infeasible);
            }
            // Drive artificials out of the basis; drop redundant rows.
            let mut r = 0;
            while r < t.rows {
                if t.basis[r] >= n + n_slack {
                    match (0..n + n_slack).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                        Some(c) => {
                            t.pivot(r, c);
                            r += 1;
                        }
                        None => {
                            // redundant: remove the row
                            t.a.drain(r * w..(r + 1) * w);
                            t.basis.remove(r);
                            t.rows -= 1;
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        // Phase 2 over non-artificial columns.
        let active = n + n_slack;
        let obj = t.rows * w;
        for v in &mut t.a[obj..obj + w] {
            *v = 0.0;
        }
        for (j, &c) in lp.objective.iter().enumerate() {
            t.a[obj + j] = -c;
        }
        for r in 0..t.rows {
            let b = t.basis[r];
            let f = t.a[obj + b];
            if f != 0.0 {
                for c in 0..w {
                    let v = t.a[r * w + c];
                    t.a[obj + c] -= f * v;
                }
            }
        }
        t.optimise(active, self)?;

        let mut x = vec![0.0; n];
        for r in 0..t.rows {
            if t.basis[r] < n {
                x[t.basis[r]] = t.rhs(r).max(0.0);
            }
        }
        let objective = lp.objective_value(&x);
        Ok(LpSolution { x, objective })
    }
}
