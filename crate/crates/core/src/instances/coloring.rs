//! Reduction from 3-edge-coloring of cubic graphs: a couples problem has an
//! exact decomposition iff the graph is 3-edge-colorable.

use num_rational::Ratio;

use super::ranking_by_row;
use crate::error::{Error, Result};
use crate::model::{
    ConvexCombination, DeterministicAssignment, HospitalId, Matrix, Problem, RawProblem, RawUnit,
    UnitKind,
};

/// Simple 3-regular graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
}

impl CubicGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut incident = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} ({u}, {v}) names a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} is a loop at {u}"
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} ({u}, {v}) repeats an earlier edge; multigraphs are not supported"
                )));
            }
            incident[u].push(e);
            incident[v].push(e);
        }
        if n == 0 {
            return Err(Error::InvalidParameter("graph has no vertices".into()));
        }
        if let Some((vertex, inc)) = incident.iter().enumerate().find(|(_, inc)| inc.len() != 3) {
            return Err(Error::NotCubic {
                vertex,
                degree: inc.len(),
            });
        }
        Ok(Self { n, edges, incident })
    }

    /// Parses an edge list: one `u v` pair per line, 0-indexed. Blank lines
    /// and lines starting with `#` are skipped. The vertex count is one more
    /// than the largest index.
    pub fn parse_edge_list(text: &str, source_name: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_owned(),
                line: k + 1,
                message,
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(parse_err(format!("expected `u v`, got `{line}`")));
            }
            let u: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(format!("bad vertex `{}`", parts[0])))?;
            let v: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(format!("bad vertex `{}`", parts[1])))?;
            edges.push((u, v));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges
            .iter()
            .map(|(u, v)| format!("{u} {v}\n"))
            .collect()
    }

    pub fn k4() -> Self {
        Self::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    /// The Petersen graph, cubic but not 3-edge-colorable.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((i + 5, (i + 2) % 5 + 5));
        }
        Self::new(10, edges).unwrap()
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Color in `1..=3` per edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeColoring(pub Vec<u8>);

impl EdgeColoring {
    pub fn validate(&self, graph: &CubicGraph) -> Result<()> {
        if self.0.len() != graph.edges.len() {
            return Err(Error::LengthMismatch {
                expected: graph.edges.len(),
                got: self.0.len(),
            });
        }
        if let Some(&c) = self.0.iter().find(|&&c| !(1..=3).contains(&c)) {
            return Err(Error::InvalidParameter(format!("color {c} outside 1..=3")));
        }
        for (vertex, inc) in graph.incident.iter().enumerate() {
            for (a, &first) in inc.iter().enumerate() {
                for &second in &inc[a + 1..] {
                    if self.0[first] == self.0[second] {
                        return Err(Error::ImproperColoring {
                            first,
                            second,
                            color: self.0[first],
                            vertex,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Every color advanced by `shift` steps around the cycle 1 → 2 → 3 → 1.
    pub fn shifted(&self, shift: u8) -> Self {
        Self(self.0.iter().map(|&c| (c - 1 + shift) % 3 + 1).collect())
    }
}

/// Backtracking search for a proper 3-edge-coloring.
pub fn find_edge_coloring(graph: &CubicGraph) -> Option<EdgeColoring> {
    fn go(graph: &CubicGraph, e: usize, colors: &mut Vec<u8>) -> bool {
        if e == graph.edges.len() {
            return true;
        }
        let (u, v) = graph.edges[e];
        for c in 1..=3 {
            let clash = graph.incident[u]
                .iter()
                .chain(&graph.incident[v])
                .any(|&f| f < e && colors[f] == c);
            if !clash {
                colors[e] = c;
                if go(graph, e + 1, colors) {
                    return true;
                }
            }
        }
        false
    }
    let mut colors = vec![0; graph.edges.len()];
    go(graph, 0, &mut colors).then_some(EdgeColoring(colors))
}

// Layout: per edge e, hospitals A(e), B(e), C(e) (capacity 2) at 3e..3e+3,
// then per (vertex, color) a capacity-1 hospital at 3|E| + 3v + (color-1).
// Per edge, interns are the couple's two members then six singles.
fn edge_hospital(e: usize, color: u8) -> usize {
    3 * e + (color as usize - 1)
}

fn slot_hospital(graph: &CubicGraph, v: usize, color: u8) -> usize {
    3 * graph.edges.len() + 3 * v + (color as usize - 1)
}

/// Color and endpoint of the `k`-th single (0-based) of edge `(u, v)`.
fn single_spec(k: usize, (u, v): (usize, usize)) -> (u8, usize) {
    ((k / 2 + 1) as u8, if k.is_multiple_of(2) { u } else { v })
}

const INTERNS_PER_EDGE: usize = 8;

/// The reduction's target in exact thirds, with the problem.
pub fn coloring_reduction_exact(graph: &CubicGraph) -> Result<(Problem, Vec<Vec<Ratio<u64>>>)> {
    let n_edges = graph.edges.len();
    let n_h = 3 * n_edges + 3 * graph.n;
    let third = Ratio::new(1u64, 3);
    let mut rows = Vec::with_capacity(INTERNS_PER_EDGE * n_edges);
    for (e, &edge) in graph.edges.iter().enumerate() {
        let mut couple = vec![Ratio::from_integer(0); n_h];
        for c in 1..=3 {
            couple[edge_hospital(e, c)] = third;
        }
        rows.push(couple.clone());
        rows.push(couple);
        for k in 0..6 {
            let (c, w) = single_spec(k, edge);
            let mut row = vec![Ratio::from_integer(0); n_h];
            row[edge_hospital(e, c)] = third * 2;
            row[slot_hospital(graph, w, c)] = third;
            rows.push(row);
        }
    }

    let mut ids: Vec<String> = Vec::with_capacity(n_h);
    for e in 0..n_edges {
        for x in ["A", "B", "C"] {
            ids.push(format!("{x}(e{e})"));
        }
    }
    for v in 0..graph.n {
        for c in 1..=3 {
            ids.push(format!("(v{v},{c})"));
        }
    }
    let mut raw = RawProblem::default();
    for (h, id) in ids.iter().enumerate() {
        raw = raw.hospital(id, if h < 3 * n_edges { 2 } else { 1 });
    }
    let ranking = |row: &[Ratio<u64>]| -> Vec<HospitalId> {
        let f: Vec<f64> = row
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect();
        ranking_by_row(&f)
            .into_iter()
            .map(|h| ids[h].as_str().into())
            .collect()
    };
    for e in 0..n_edges {
        let base = INTERNS_PER_EDGE * e;
        raw = raw.unit(RawUnit {
            id: format!("couple(e{e})").into(),
            kind: UnitKind::Couple,
            members: vec![
                format!("couple(e{e}).1").into(),
                format!("couple(e{e}).2").into(),
            ],
            ranking: ranking(&rows[base]),
        });
        for k in 0..6 {
            let id = format!("single{}(e{e})", k + 1);
            raw = raw.unit(RawUnit {
                id: id.as_str().into(),
                kind: UnitKind::Single,
                members: vec![id.as_str().into()],
                ranking: ranking(&rows[base + 2 + k]),
            });
        }
    }
    Ok((Problem::new(raw)?, rows))
}

/// The reduction instance for `graph` as a floating-point target.
pub fn gen_coloring_reduction(graph: &CubicGraph) -> Result<(Problem, Matrix)> {
    let (problem, exact) = coloring_reduction_exact(graph)?;
    let rows = exact
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                .collect()
        })
        .collect();
    let matrix = Matrix::for_problem(&problem, rows)?;
    Ok((problem, matrix))
}

/// The three assignments induced by a proper coloring and its two cyclic
/// shifts, each with weight 1/3.
pub fn decomposition_from_coloring(
    graph: &CubicGraph,
    coloring: &EdgeColoring,
) -> Result<ConvexCombination> {
    coloring.validate(graph)?;
    let terms = (0..3)
        .map(|shift| {
            let colors = coloring.shifted(shift);
            let mut hospital_of = Vec::with_capacity(INTERNS_PER_EDGE * graph.edges.len());
            for (e, &edge) in graph.edges.iter().enumerate() {
                let chosen = colors.0[e];
                let couple_at = edge_hospital(e, chosen);
                hospital_of.push(couple_at);
                hospital_of.push(couple_at);
                for k in 0..6 {
                    let (c, w) = single_spec(k, edge);
                    hospital_of.push(if c == chosen {
                        slot_hospital(graph, w, c)
                    } else {
                        edge_hospital(e, c)
                    });
                }
            }
            (1.0 / 3.0, DeterministicAssignment::new(hospital_of))
        })
        .collect();
    Ok(ConvexCombination { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_assignment, validate_target};

    #[test]
    fn k4_reduction_shape() {
        let g = CubicGraph::k4();
        let (p, m) = gen_coloring_reduction(&g).unwrap();
        assert_eq!(p.n_interns(), 48);
        let caps = p.capacities();
        assert_eq!(caps.iter().filter(|&&q| q == 2).count(), 18);
        assert_eq!(caps.iter().filter(|&&q| q == 1).count(), 12);
        assert!(validate_target(&p, &m).unwrap().is_ok());
    }

    #[test]
    fn rejects_non_cubic_and_multi() {
        assert!(matches!(
            CubicGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
            Err(Error::NotCubic { .. })
        ));
        assert!(CubicGraph::new(2, vec![(0, 1), (0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn coloring_search() {
        let k4 = CubicGraph::k4();
        let c = find_edge_coloring(&k4).unwrap();
        assert!(c.validate(&k4).is_ok());
        assert!(find_edge_coloring(&CubicGraph::petersen()).is_none());
    }

    #[test]
    fn improper_coloring_rejected() {
        let g = CubicGraph::k4();
        let bad = EdgeColoring(vec![1, 1, 2, 3, 2, 1]);
        assert!(matches!(
            decomposition_from_coloring(&g, &bad),
            Err(Error::ImproperColoring { .. })
        ));
    }

    #[test]
    fn shifts_saturate_and_reconstruct() {
        let g = CubicGraph::k4();
        let c = find_edge_coloring(&g).unwrap();
        let (p, m) = gen_coloring_reduction(&g).unwrap();
        let cc = decomposition_from_coloring(&g, &c).unwrap();
        for (_, a) in &cc.terms {
            assert!(validate_assignment(&p, a).is_ok());
            assert_eq!(a.occupancy(p.n_hospitals()), p.capacities());
        }
        assert!(cc.mixture(48, p.n_hospitals()).max_abs_diff(&m) < 1e-15);
        // relabelled colors give the same three assignments
        let other = decomposition_from_coloring(&g, &c.shifted(1)).unwrap();
        let mut a: Vec<_> = cc.terms.iter().map(|t| t.1.hospital_of.clone()).collect();
        let mut b: Vec<_> = other
            .terms
            .iter()
            .map(|t| t.1.hospital_of.clone())
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = CubicGraph::petersen();
        let back = CubicGraph::parse_edge_list(&g.to_edge_list(), "petersen").unwrap();
        assert_eq!(back, g);
        let err = CubicGraph::parse_edge_list("0 1\nx 2\n", "bad.txt").unwrap_err();
        assert_eq!(err.to_string(), "bad.txt:2: bad vertex `x`");
    }
}
