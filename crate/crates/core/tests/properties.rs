use std::collections::HashMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use internmatch_core::couples::approximate_decompose;
use internmatch_core::instances::gen_random_market;
use internmatch_core::rating::{rating_first_choice, rating_weighted, same_area_topk};
use internmatch_core::seeding::rng_for;
use internmatch_core::{HospitalId, Matrix, Problem, RawProblem, RawUnit};

/// A random in-domain market: 1..=6 hospitals with capacity 4..=12.
fn market(seed: u64) -> (Problem, Matrix) {
    let mut rng = rng_for(seed, &[]);
    let caps: Vec<usize> = (0..rng.gen_range(1..=6))
        .map(|_| rng.gen_range(4..=12))
        .collect();
    let total: usize = caps.iter().sum();
    let couples = rng.gen_range(0..=total / 6);
    gen_random_market(total - 2 * couples, couples, &caps, seed).unwrap()
}

/// Singles only, uniformly random complete rankings.
fn uniform_singles(seed: u64, interns: usize, caps: &[usize]) -> Problem {
    assert_eq!(caps.iter().sum::<usize>(), interns);
    let mut rng = rng_for(seed, &[]);
    let ids: Vec<String> = (0..caps.len()).map(|h| format!("h{h}")).collect();
    let mut raw = RawProblem::default();
    for (id, &q) in ids.iter().zip(caps) {
        raw = raw.hospital(id, q);
    }
    for i in 0..interns {
        let mut ranking: Vec<&str> = ids.iter().map(String::as_str).collect();
        ranking.shuffle(&mut rng);
        raw = raw.unit(RawUnit::single(&format!("s{i}"), &ranking));
    }
    Problem::new(raw).unwrap()
}

fn caps_for(seed: u64, hospitals: usize, interns: usize) -> Vec<usize> {
    let mut rng = rng_for(seed, &[1]);
    let mut caps = vec![1; hospitals];
    for _ in hospitals..interns {
        caps[rng.gen_range(0..hospitals)] += 1;
    }
    caps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lottery_weights_sum_to_one(seed in any::<u64>()) {
        let (p, target) = market(seed);
        let cc = approximate_decompose(&p, &target).unwrap().to_combination(&p);
        prop_assert!((cc.total_weight() - 1.0).abs() < 1e-9);
        prop_assert!(cc.terms.iter().all(|(w, _)| *w > 0.0));
    }

    #[test]
    fn every_assignment_is_valid_and_keeps_couples_together(seed in any::<u64>()) {
        let (p, target) = market(seed);
        let cc = approximate_decompose(&p, &target).unwrap().to_combination(&p);
        prop_assert!(cc.validate(&p).is_ok());
        for (_, a) in &cc.terms {
            for c in p.couples() {
                prop_assert_eq!(a.hospital_of[c.members[0]], a.hospital_of[c.members[1]]);
            }
            prop_assert_eq!(a.occupancy(p.n_hospitals()), p.capacities());
        }
    }

    #[test]
    fn couple_counts_round_demand(seed in any::<u64>()) {
        let (p, target) = market(seed);
        let d = approximate_decompose(&p, &target).unwrap();
        for (_, a, _) in &d.couple_terms {
            for (h, n) in a.counts(p.n_hospitals()).into_iter().enumerate() {
                let q = d.stage1.couple_demand[h];
                prop_assert!((q - 1e-9).floor() <= n as f64 && n as f64 <= (q + 1e-9).ceil(), "{n} couples for demand {q}");
            }
        }
    }

    #[test]
    fn couple_counts_average_to_demand(seed in any::<u64>()) {
        let (p, target) = market(seed);
        let d = approximate_decompose(&p, &target).unwrap();
        let m = p.n_hospitals();
        let mut avg = vec![0.0; m];
        for (w, a, _) in &d.couple_terms {
            for (h, n) in a.counts(m).into_iter().enumerate() {
                avg[h] += w * n as f64;
            }
        }
        for (a, q) in avg.iter().zip(&d.stage1.couple_demand) {
            prop_assert!((a - q).abs() < 1e-9);
        }
    }

    #[test]
    fn rating_totals(seed in any::<u64>(), hospitals in 1usize..8, extra in 0usize..30) {
        let interns = hospitals + extra;
        let p = uniform_singles(seed, interns, &caps_for(seed, hospitals, interns));
        let first: f64 = rating_first_choice(&p).scores.iter().sum();
        prop_assert_eq!(first, interns as f64);
        let squares: usize = (1..=hospitals).map(|k| k * k).sum();
        let weighted: f64 = rating_weighted(&p).scores.iter().sum();
        prop_assert_eq!(weighted, (interns * squares) as f64);
    }

    #[test]
    fn dominant_hospital_rates_higher(seed in any::<u64>(), hospitals in 2usize..8, extra in 0usize..30) {
        let interns = hospitals + extra;
        let p = uniform_singles(seed, interns, &caps_for(seed, hospitals, interns));
        // move h0 directly above h1 in every ranking; h0 then dominates h1
        let mut raw = p.to_raw();
        for u in &mut raw.units {
            u.ranking.retain(|h| h.0 != "h0");
            let at = u.ranking.iter().position(|h| h.0 == "h1").unwrap();
            u.ranking.insert(at, HospitalId::from("h0"));
        }
        let q = Problem::new(raw).unwrap();
        for r in [rating_first_choice(&q), rating_weighted(&q)] {
            prop_assert!(r.scores[0] >= r.scores[1]);
            prop_assert!(r.ranks[0] <= r.ranks[1]);
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|j| (n - j) as f64 / (j + 1) as f64).product()
}

/// Under uniformly random rankings the top k form a uniform k-subset, so the
/// same-area fraction has a closed form.
#[test]
fn same_area_matches_uniform_rankings() {
    let areas = [4usize, 3, 2, 1];
    let hospitals: usize = areas.iter().sum();
    let interns = 4000;
    let p = uniform_singles(17, interns, &caps_for(17, hospitals, interns));
    let mut map = HashMap::new();
    let mut h = 0;
    for (a, &n) in areas.iter().enumerate() {
        for _ in 0..n {
            map.insert(
                HospitalId::from(format!("h{h}").as_str()),
                format!("area{a}"),
            );
            h += 1;
        }
    }
    let observed = same_area_topk(&p, &map, 4, None).unwrap();
    for (k, frac) in observed {
        let expected: f64 = areas
            .iter()
            .map(|&n| if n >= k { binomial(n, k) } else { 0.0 })
            .sum::<f64>()
            / binomial(hospitals, k);
        let sigma = (expected * (1.0 - expected) / interns as f64).sqrt();
        assert!(
            (frac - expected).abs() <= 3.0 * sigma,
            "k={k}: observed {frac}, expected {expected} ± {sigma}"
        );
    }
}
