//! Instance generators and a brute-force decomposition oracle.

mod adversarial;
mod coloring;
mod market;
mod oracle;
mod random;

pub use adversarial::{gen_lower_bound, gen_small_probs};
pub use coloring::{
    coloring_reduction_exact, decomposition_from_coloring, find_edge_coloring,
    gen_coloring_reduction, CubicGraph, EdgeColoring,
};
pub use market::{
    apportion, capacity_driven_ranking, gen_capacity_driven_couples, subsample_market,
    synthetic_pool, with_capacity_driven_couples, ProfilePool, DEFAULT_CAPACITY_TEMPLATE,
};
pub use oracle::{
    brute_force_best_decomposition, enumerate_assignments, OracleResult, ORACLE_MAX_HOSPITALS,
    ORACLE_MAX_INTERNS,
};
pub use random::{
    gen_random_market, gen_random_matrix, sinkhorn, SINKHORN_MAX_SWEEPS, SINKHORN_TOLERANCE,
};

use crate::model::{HospitalId, Matrix, Problem, RawProblem, RawUnit, UnitKind};
use crate::Result;

/// Hospitals ordered by decreasing probability in `row`, ties by index.
pub(crate) fn ranking_by_row(row: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    order
}

/// Builds a problem whose unit rankings follow the target probabilities and
/// returns it with the matrix. `units` lists `(unit id, member ids)` in row
/// order; a unit with two members is a couple.
pub(crate) fn problem_from_matrix(
    hospitals: &[(String, usize)],
    units: &[(String, Vec<String>)],
    matrix: Matrix,
) -> Result<(Problem, Matrix)> {
    let ids: Vec<HospitalId> = hospitals.iter().map(|(h, _)| h.as_str().into()).collect();
    let mut raw = RawProblem::default();
    for (h, q) in hospitals {
        raw = raw.hospital(h, *q);
    }
    let mut row = 0;
    for (id, members) in units {
        let ranking = ranking_by_row(matrix.row(row))
            .into_iter()
            .map(|h| ids[h].clone())
            .collect();
        raw = raw.unit(RawUnit {
            id: id.as_str().into(),
            kind: if members.len() == 2 {
                UnitKind::Couple
            } else {
                UnitKind::Single
            },
            members: members.iter().map(|m| m.as_str().into()).collect(),
            ranking,
        });
        row += members.len();
    }
    let problem = Problem::new(raw)?;
    matrix.check_shape(&problem)?;
    Ok((problem, matrix))
}
