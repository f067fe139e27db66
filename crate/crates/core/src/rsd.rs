//! Random Serial Dictatorship with the couple house rules.
//!
//! A couple draws a single slot in the order. When its turn comes it takes the
//! highest-ranked hospital that still has two vacancies; a single takes the
//! highest-ranked hospital with any vacancy.
//!
//! Orders in which a couple finds no hospital with two vacancies are
//! *stranded*. [`rsd_draw`] reports them as errors; the estimators below
//! condition on non-stranded orders.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DeterministicAssignment, Matrix, Problem, UnitRef};
use crate::seeding::rng_for;

/// Largest unit count accepted by [`rsd_exact`] (9! orders).
pub const MAX_EXACT_UNITS: usize = 9;

/// Redraw budget per Monte Carlo trial when orders strand a couple.
pub const MAX_REDRAWS: u64 = 1000;

/// A permutation of decision-unit indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrawOrder(Vec<usize>);

impl DrawOrder {
    pub fn new(problem: &Problem, order: Vec<usize>) -> Result<Self> {
        let n = problem.units().len();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: order.len(),
            });
        }
        for &u in &order {
            if u >= n || std::mem::replace(&mut seen[u], true) {
                return Err(Error::InvalidParameter(format!(
                    "draw order is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Self(order))
    }

    /// Builds an order from unit ids.
    pub fn from_ids(problem: &Problem, ids: &[&str]) -> Result<Self> {
        let order = ids
            .iter()
            .map(|&id| {
                problem
                    .unit_index(&id.into())
                    .ok_or_else(|| Error::UnknownUnit(id.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(problem, order)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Runs one draw; on stranding returns the index of the stranded couple.
fn draw_into(
    problem: &Problem,
    order: &[usize],
    vacancies: &mut [usize],
    hospital_of: &mut [usize],
) -> Result<(), usize> {
    for (h, v) in vacancies.iter_mut().enumerate() {
        *v = problem.capacity(h);
    }
    let prefs = problem.preferences();
    for &u in order {
        match problem.units()[u].kind {
            UnitRef::Single(i) => {
                let h = prefs
                    .ranking(u)
                    .iter()
                    .copied()
                    .find(|&h| vacancies[h] >= 1)
                    .expect("total capacity equals intern count");
                vacancies[h] -= 1;
                hospital_of[i] = h;
            }
            UnitRef::Couple(c) => {
                let h = prefs
                    .ranking(u)
                    .iter()
                    .copied()
                    .find(|&h| vacancies[h] >= 2)
                    .ok_or(c)?;
                vacancies[h] -= 2;
                let [a, b] = problem.couples()[c].members;
                hospital_of[a] = h;
                hospital_of[b] = h;
            }
        }
    }
    Ok(())
}

/// Assigns interns by letting units pick in `order`.
pub fn rsd_draw(problem: &Problem, order: &DrawOrder) -> Result<DeterministicAssignment> {
    let mut vacancies = vec![0; problem.n_hospitals()];
    let mut hospital_of = vec![0; problem.n_interns()];
    draw_into(problem, order.as_slice(), &mut vacancies, &mut hospital_of).map_err(|c| {
        Error::CoupleStranded {
            couple: problem.couples()[c].id.0.clone(),
        }
    })?;
    Ok(DeterministicAssignment::new(hospital_of))
}

/// Exact RSD lottery: assignment counts over all non-stranded unit orders.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactRsd {
    n_hospitals: usize,
    /// `counts[i * m + h]`: orders placing intern `i` at hospital `h`.
    pub counts: Vec<u64>,
    pub valid_orders: u64,
    pub stranded_orders: u64,
}

impl ExactRsd {
    pub fn probability(&self, intern: usize, hospital: usize) -> Ratio<u64> {
        Ratio::new(
            self.counts[intern * self.n_hospitals + hospital],
            self.valid_orders,
        )
    }

    pub fn row(&self, intern: usize) -> Vec<Ratio<u64>> {
        (0..self.n_hospitals)
            .map(|h| self.probability(intern, h))
            .collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        counts_to_matrix(&self.counts, self.n_hospitals, self.valid_orders)
    }
}

fn counts_to_matrix(counts: &[u64], n_hospitals: usize, total: u64) -> Matrix {
    let rows = counts.len() / n_hospitals.max(1);
    let mut m = Matrix::zeros(rows, n_hospitals);
    for (k, &c) in counts.iter().enumerate() {
        m.set(k / n_hospitals, k % n_hospitals, c as f64 / total as f64);
    }
    m
}

/// Enumerates every unit order (Heap's algorithm) and averages the draws.
pub fn rsd_exact(problem: &Problem) -> Result<ExactRsd> {
    let n = problem.units().len();
    if n > MAX_EXACT_UNITS {
        return Err(Error::TooManyUnits {
            units: n,
            max: MAX_EXACT_UNITS,
        });
    }
    let m = problem.n_hospitals();
    let mut counts = vec![0u64; problem.n_interns() * m];
    let mut vacancies = vec![0; m];
    let mut hospital_of = vec![0; problem.n_interns()];
    let (mut valid, mut stranded) = (0u64, 0u64);

    let mut visit = |order: &[usize]| {
        if draw_into(problem, order, &mut vacancies, &mut hospital_of).is_ok() {
            valid += 1;
            for (i, &h) in hospital_of.iter().enumerate() {
                counts[i * m + h] += 1;
            }
        } else {
            stranded += 1;
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&order);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    if valid == 0 {
        return Err(Error::AllOrdersStranded);
    }
    Ok(ExactRsd {
        n_hospitals: m,
        counts,
        valid_orders: valid,
        stranded_orders: stranded,
    })
}

/// Empirical RSD frequencies over `trials` seeded draws.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloRsd {
    pub matrix: Matrix,
    pub counts: Vec<u64>,
    pub trials: u64,
    /// Orders discarded because they stranded a couple.
    pub redraws: u64,
}

/// Estimates the RSD probability matrix as `n_{i,h} / N`.
///
/// Trial `t`, attempt `a` uses the stream `derive_seed(seed, [t, a])`, and
/// counts are summed as integers, so the result is bit-identical for any
/// number of worker threads.
pub fn rsd_monte_carlo(problem: &Problem, trials: u64, seed: u64) -> Result<MonteCarloRsd> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let m = problem.n_hospitals();
    let n = problem.n_interns();
    let units = problem.units().len();

    #[derive(Clone)]
    struct Acc {
        counts: Vec<u64>,
        redraws: u64,
    }
    let fresh = || Acc {
        counts: vec![0u64; n * m],
        redraws: 0,
    };

    let acc = (0..trials)
        .into_par_iter()
        .try_fold(
            || {
                (
                    fresh(),
                    vec![0usize; m],
                    vec![0usize; n],
                    vec![0usize; units],
                )
            },
            |(mut acc, mut vac, mut assigned, mut order), t| {
                for attempt in 0..MAX_REDRAWS {
                    let mut rng = rng_for(seed, &[t, attempt]);
                    order.iter_mut().enumerate().for_each(|(k, o)| *o = k);
                    order.shuffle(&mut rng);
                    if draw_into(problem, &order, &mut vac, &mut assigned).is_ok() {
                        for (i, &h) in assigned.iter().enumerate() {
                            acc.counts[i * m + h] += 1;
                        }
                        return Ok((acc, vac, assigned, order));
                    }
                    acc.redraws += 1;
                }
                Err(Error::AllOrdersStranded)
            },
        )
        .map(|r| r.map(|(acc, ..)| acc))
        .try_reduce(fresh, |mut a, b| {
            a.counts
                .iter_mut()
                .zip(&b.counts)
                .for_each(|(x, y)| *x += y);
            a.redraws += b.redraws;
            Ok(a)
        })?;

    let mut matrix = counts_to_matrix(&acc.counts, m, trials);
    matrix.sync_couples(problem);
    Ok(MonteCarloRsd {
        matrix,
        counts: acc.counts,
        trials,
        redraws: acc.redraws,
    })
}

/// Per-intern probabilities of receiving the k-th ranked hospital.
#[derive(Clone, Debug, PartialEq)]
pub struct RankProbabilities {
    pub rows: Vec<Vec<f64>>,
}

/// Permutes each intern's hospital-indexed row into the intern's rank order.
pub fn rank_probabilities(problem: &Problem, matrix: &Matrix) -> Result<RankProbabilities> {
    matrix.check_shape(problem)?;
    let rows = (0..problem.n_interns())
        .map(|i| {
            problem
                .intern_ranking(i)
                .iter()
                .map(|&h| matrix.get(i, h))
                .collect()
        })
        .collect();
    Ok(RankProbabilities { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{four_interns, one_couple_two_singles};
    use crate::model::{validate_assignment, validate_target, RawProblem, RawUnit};

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn worked_order_walkthrough() {
        let p = four_interns();
        let order = DrawOrder::from_ids(&p, &["Diane", "Bob", "Charlie", "Alice"]).unwrap();
        let a = rsd_draw(&p, &order).unwrap();
        let name = |h: usize| p.hospitals()[h].id.0.as_str();
        let at = |who: &str| name(a.hospital_of[p.intern_index(&who.into()).unwrap()]);
        assert_eq!(at("Diane"), "A");
        assert_eq!(at("Bob"), "B");
        assert_eq!(at("Charlie"), "D");
        assert_eq!(at("Alice"), "C");
    }

    #[test]
    fn single_unit_single_hospital() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("h", 1)
                .unit(RawUnit::single("s", &["h"])),
        )
        .unwrap();
        let a = rsd_draw(&p, &DrawOrder::new(&p, vec![0]).unwrap()).unwrap();
        assert_eq!(a.hospital_of, vec![0]);
    }

    #[test]
    fn couple_takes_ranked_hospital_with_two_seats() {
        let p = one_couple_two_singles();
        let a = rsd_draw(&p, &DrawOrder::new(&p, vec![0, 1, 2]).unwrap()).unwrap();
        assert_eq!(a.hospital_of, vec![1, 1, 0, 0]);
        // singles first fill h1, couple still fits in h2
        let a = rsd_draw(&p, &DrawOrder::new(&p, vec![1, 2, 0]).unwrap()).unwrap();
        assert_eq!(a.hospital_of, vec![1, 1, 0, 0]);
    }

    #[test]
    fn stranded_couple_is_error() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("h1", 2)
                .hospital("h2", 2)
                .unit(RawUnit::single("s1", &["h1", "h2"]))
                .unit(RawUnit::single("s2", &["h2", "h1"]))
                .unit(RawUnit::couple("c", ["a", "b"], &["h1", "h2"])),
        )
        .unwrap();
        let err = rsd_draw(&p, &DrawOrder::new(&p, vec![0, 1, 2]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::CoupleStranded { .. }));
        let exact = rsd_exact(&p).unwrap();
        assert_eq!(exact.valid_orders + exact.stranded_orders, 6);
        assert_eq!(exact.stranded_orders, 2);
        assert!(validate_target(&p, &exact.to_matrix()).unwrap().is_ok());
    }

    #[test]
    fn exact_four_interns_rows() {
        let p = four_interns();
        let e = rsd_exact(&p).unwrap();
        assert_eq!(e.valid_orders, 24);
        assert_eq!(e.row(0), vec![r(1, 4), r(1, 4), r(5, 12), r(1, 12)]);
        assert_eq!(e.row(1), vec![r(1, 4), r(1, 4), r(1, 12), r(5, 12)]);
        for i in 0..4 {
            let total: Ratio<u64> = e.row(i).into_iter().sum();
            assert_eq!(total, r(1, 1));
        }
    }

    #[test]
    fn exact_one_unit() {
        let p = Problem::new(
            RawProblem::default()
                .hospital("x", 1)
                .hospital("y", 1)
                .unit(RawUnit::single("s", &["y", "x"]))
                .unit(RawUnit::single("t", &["y", "x"])),
        )
        .unwrap();
        let e = rsd_exact(&p).unwrap();
        assert_eq!(e.row(0), vec![r(1, 2), r(1, 2)]);
        let p = Problem::new(
            RawProblem::default()
                .hospital("x", 1)
                .unit(RawUnit::single("s", &["x"])),
        )
        .unwrap();
        assert_eq!(rsd_exact(&p).unwrap().row(0), vec![r(1, 1)]);
    }

    #[test]
    fn exact_rejects_large() {
        let mut raw = RawProblem::default().hospital("h", 10);
        for i in 0..10 {
            raw = raw.unit(RawUnit::single(&format!("s{i}"), &["h"]));
        }
        let p = Problem::new(raw).unwrap();
        assert!(matches!(rsd_exact(&p), Err(Error::TooManyUnits { .. })));
    }

    #[test]
    fn monte_carlo_single_trial_is_a_draw() {
        let p = four_interns();
        let mc = rsd_monte_carlo(&p, 1, 3).unwrap();
        for i in 0..4 {
            let row = mc.matrix.row(i);
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
        }
        let a = DeterministicAssignment::new(
            (0..4)
                .map(|i| mc.matrix.row(i).iter().position(|&v| v == 1.0).unwrap())
                .collect(),
        );
        assert!(validate_assignment(&p, &a).is_ok());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let p = four_interns();
        let a = rsd_monte_carlo(&p, 500, 42).unwrap();
        let b = rsd_monte_carlo(&p, 500, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let c = pool.install(|| rsd_monte_carlo(&p, 500, 42).unwrap());
        assert_eq!(a, c);
        assert!(rsd_monte_carlo(&p, 0, 1).is_err());
    }

    #[test]
    fn monte_carlo_symmetric_for_identical_preferences() {
        // Identical rankings: every single has the same marginal; check each
        // entry against the common value within 3 sigma.
        let mut raw = RawProblem::default()
            .hospital("a", 2)
            .hospital("b", 1)
            .hospital("c", 3);
        for i in 0..6 {
            raw = raw.unit(RawUnit::single(&format!("s{i}"), &["b", "a", "c"]));
        }
        let p = Problem::new(raw).unwrap();
        let n = 20_000;
        let mc = rsd_monte_carlo(&p, n, 9).unwrap();
        let expected = [2.0 / 6.0, 1.0 / 6.0, 3.0 / 6.0];
        for i in 0..6 {
            for (h, &e) in expected.iter().enumerate() {
                let sigma = (e * (1.0 - e) / n as f64).sqrt();
                assert!((mc.matrix.get(i, h) - e).abs() <= 3.0 * sigma);
            }
        }
    }

    #[test]
    fn rank_probabilities_permute_rows() {
        let p = four_interns();
        let e = rsd_exact(&p).unwrap().to_matrix();
        let rp = rank_probabilities(&p, &e).unwrap();
        let expect = [0.25, 0.25, 5.0 / 12.0, 1.0 / 12.0];
        for (a, b) in rp.rows[0].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // Bob ranks D third
        for (a, b) in rp.rows[1].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let uniform = Matrix::from_rows(vec![vec![0.25; 4]; 4]).unwrap();
        let rp = rank_probabilities(&p, &uniform).unwrap();
        assert!(rp.rows.iter().all(|r| r.iter().all(|&v| v == 0.25)));
    }
}
