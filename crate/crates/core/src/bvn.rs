//! Constructive Birkhoff–von Neumann decomposition for couple-free
//! stochastic assignment matrices with integer column capacities.
//!
//! Each round finds an integral capacity-respecting assignment inside the
//! support of the residual matrix, gives it weight equal to the smallest
//! residual entry it uses, and subtracts. At least one entry hits zero per
//! round, so the number of terms never exceeds the input's positive entries.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{ensure_target, ConvexCombination, DeterministicAssignment, Matrix, Problem};

/// Residual entries below this are treated as zero.
pub const DUST: f64 = 1e-12;

/// Largest residual entry that may be left undecomposed when no assignment
/// fits the remaining support. Inputs are only validated to 1e-9 per row and
/// column sum, so leftovers of that order are expected; they still show up in
/// any measured reconstruction error.
const RESIDUAL_SLACK: f64 = 1e-8;

/// Rows × columns with an edge per positive entry; columns carry capacities.
#[derive(Clone, Debug)]
pub struct SupportGraph {
    residual: Matrix,
    capacities: Vec<usize>,
}

impl SupportGraph {
    pub fn new(matrix: &Matrix, capacities: &[usize]) -> Result<Self> {
        if capacities.len() != matrix.cols() {
            return Err(Error::LengthMismatch {
                expected: matrix.cols(),
                got: capacities.len(),
            });
        }
        let mut residual = matrix.clone();
        for r in 0..residual.rows() {
            for v in residual.row_mut(r) {
                if *v < DUST {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            residual,
            capacities: capacities.to_vec(),
        })
    }

    pub fn has_edge(&self, row: usize, col: usize) -> bool {
        self.residual.get(row, col) > 0.0
    }

    pub fn residual(&self) -> &Matrix {
        &self.residual
    }

    /// Subtracts `weight` along `assignment`, zeroing dust.
    pub fn subtract(&mut self, assignment: &[usize], weight: f64) {
        for (r, &c) in assignment.iter().enumerate() {
            let v = self.residual.get(r, c) - weight;
            self.residual.set(r, c, if v < DUST { 0.0 } else { v });
        }
    }
}

/// Incremental b-matching of rows into capacitated columns.
struct Matcher {
    col_of: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
    capacities: Vec<usize>,
    // BFS scratch
    parent_col: Vec<usize>,
    seen_col: Vec<bool>,
    seen_row: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Matcher {
    fn new(rows: usize, capacities: &[usize]) -> Self {
        let cols = capacities.len();
        Self {
            col_of: vec![None; rows],
            members: vec![Vec::new(); cols],
            capacities: capacities.to_vec(),
            parent_col: vec![0; cols],
            seen_col: vec![false; cols],
            seen_row: vec![false; rows],
            queue: VecDeque::new(),
        }
    }

    fn unassign(&mut self, r: usize) {
        if let Some(c) = self.col_of[r].take() {
            let pos = self.members[c].iter().position(|&x| x == r).unwrap();
            self.members[c].remove(pos);
        }
    }

    /// Breadth-first augmenting path from unmatched `root` over positive
    /// residual entries; columns and rows are scanned in index order.
    fn augment(&mut self, residual: &Matrix, root: usize) -> bool {
        self.seen_col.iter_mut().for_each(|s| *s = false);
        self.seen_row.iter_mut().for_each(|s| *s = false);
        self.queue.clear();
        self.queue.push_back(root);
        self.seen_row[root] = true;
        while let Some(r) = self.queue.pop_front() {
            for c in 0..residual.cols() {
                if self.seen_col[c] || residual.get(r, c) <= 0.0 || self.col_of[r] == Some(c) {
                    continue;
                }
                self.seen_col[c] = true;
                self.parent_col[c] = r;
                if self.members[c].len() < self.capacities[c] {
                    self.flip(c);
                    return true;
                }
                for &r2 in &self.members[c] {
                    if !self.seen_row[r2] {
                        self.seen_row[r2] = true;
                        self.queue.push_back(r2);
                    }
                }
            }
        }
        false
    }

    fn flip(&mut self, end: usize) {
        let mut c = end;
        loop {
            let r = self.parent_col[c];
            let old = self.col_of[r];
            self.unassign(r);
            self.members[c].push(r);
            self.col_of[r] = Some(c);
            match old {
                Some(o) => c = o,
                None => break,
            }
        }
    }

    fn assignment(&self) -> Vec<usize> {
        self.col_of.iter().map(|c| c.expect("complete")).collect()
    }
}

/// Finds an integral capacity-respecting assignment using only support edges.
pub fn extract_assignment(support: &SupportGraph) -> Result<DeterministicAssignment> {
    let rows = support.residual.rows();
    let mut matcher = Matcher::new(rows, &support.capacities);
    for r in 0..rows {
        if !matcher.augment(&support.residual, r) {
            return Err(Error::Internal(format!(
                "support admits no complete assignment (row {r} unmatched)"
            )));
        }
    }
    Ok(DeterministicAssignment::new(matcher.assignment()))
}

/// Decomposes a matrix with unit row sums and integer column sums
/// `capacities`, calling `visit(weight, assignment)` per extracted term.
///
/// Returns the number of terms.
pub fn decompose_transport_with(
    matrix: &Matrix,
    capacities: &[usize],
    mut visit: impl FnMut(f64, &[usize]),
) -> Result<usize> {
    let mut support = SupportGraph::new(matrix, capacities)?;
    let rows = matrix.rows();
    if rows == 0 {
        return Ok(0);
    }
    let mut nnz = support.residual.count_positive();
    let mut matcher = Matcher::new(rows, capacities);
    let mut pending: Vec<usize> = (0..rows).collect();
    let mut terms = 0;
    loop {
        for &r in &pending {
            if !matcher.augment(&support.residual, r) {
                let left = support
                    .residual
                    .data()
                    .iter()
                    .fold(0.0, |a: f64, &b| a.max(b));
                if left <= RESIDUAL_SLACK {
                    return Ok(terms);
                }
                return Err(Error::Internal(format!(
                    "residual support admits no complete assignment (row {r} unmatched, \
                     largest residual {left:e})"
                )));
            }
        }
        pending.clear();
        let assignment = matcher.assignment();
        let (mut weight, mut argmin) = (f64::INFINITY, 0);
        for (r, &c) in assignment.iter().enumerate() {
            let v = support.residual.get(r, c);
            if v < weight {
                weight = v;
                argmin = r;
            }
        }
        visit(weight, &assignment);
        terms += 1;
        for (r, &c) in assignment.iter().enumerate() {
            let v = support.residual.get(r, c) - weight;
            if r == argmin || v < DUST {
                support.residual.set(r, c, 0.0);
                nnz -= 1;
                pending.push(r);
            } else {
                support.residual.set(r, c, v);
            }
        }
        if nnz == 0 {
            return Ok(terms);
        }
        for &r in &pending {
            matcher.unassign(r);
        }
    }
}

/// Collecting form of [`decompose_transport_with`].
pub fn decompose_transport(
    matrix: &Matrix,
    capacities: &[usize],
) -> Result<Vec<(f64, Vec<usize>)>> {
    let mut out = Vec::new();
    decompose_transport_with(matrix, capacities, |w, a| out.push((w, a.to_vec())))?;
    Ok(out)
}

/// Decomposes a couple-free target matrix into a lottery over assignments.
pub fn bvn_decompose(problem: &Problem, matrix: &Matrix) -> Result<ConvexCombination> {
    if problem.has_couples() {
        return Err(Error::CouplesPresent);
    }
    ensure_target(problem, matrix)?;
    let terms = decompose_transport(matrix, &problem.capacities())?;
    Ok(ConvexCombination {
        terms: terms
            .into_iter()
            .map(|(w, a)| (w, DeterministicAssignment::new(a)))
            .collect(),
    })
}
