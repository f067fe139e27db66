//! Subsampled markets from preference pools, capacity templates, and
//! synthetic geographically clustered pools.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{HospitalId, Problem, RawProblem, RawUnit, UnitKind};
use crate::seeding::rng_for;

/// 23 hospitals, smallest capacity 4, total 496.
pub const DEFAULT_CAPACITY_TEMPLATE: [usize; 23] = [
    4, 6, 8, 9, 10, 12, 13, 14, 16, 17, 18, 20, 21, 22, 24, 25, 27, 28, 30, 38, 40, 44, 50,
];

/// Rankings (as hospital indices) submitted by singles and by couples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProfilePool {
    pub hospitals: Vec<HospitalId>,
    pub singles: Vec<Vec<usize>>,
    pub couples: Vec<Vec<usize>>,
}

impl ProfilePool {
    /// Collects the rankings of `units`, which must rank only `hospitals`.
    pub fn from_units(hospitals: Vec<HospitalId>, units: &[RawUnit]) -> Result<Self> {
        let mut pool = Self {
            hospitals,
            ..Self::default()
        };
        for u in units {
            let ranking = u
                .ranking
                .iter()
                .map(|h| {
                    pool.hospitals
                        .iter()
                        .position(|x| x == h)
                        .ok_or_else(|| Error::UnknownHospital(h.0.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            if ranking.len() != pool.hospitals.len() {
                return Err(Error::InvalidParameter(format!(
                    "pool unit `{}` ranks {} of {} hospitals",
                    u.id,
                    ranking.len(),
                    pool.hospitals.len()
                )));
            }
            match u.kind {
                UnitKind::Single => pool.singles.push(ranking),
                UnitKind::Couple => pool.couples.push(ranking),
            }
        }
        Ok(pool)
    }

    /// The pool as preference-file units (`s0..`, `c0..`).
    pub fn to_units(&self) -> Vec<RawUnit> {
        let names = |r: &[usize]| -> Vec<HospitalId> {
            r.iter().map(|&h| self.hospitals[h].clone()).collect()
        };
        let mut units: Vec<RawUnit> = self
            .singles
            .iter()
            .enumerate()
            .map(|(k, r)| RawUnit {
                id: format!("s{k}").into(),
                kind: UnitKind::Single,
                members: vec![format!("s{k}").into()],
                ranking: names(r),
            })
            .collect();
        units.extend(self.couples.iter().enumerate().map(|(k, r)| RawUnit {
            id: format!("c{k}").into(),
            kind: UnitKind::Couple,
            members: vec![format!("c{k}.1").into(), format!("c{k}.2").into()],
            ranking: names(r),
        }));
        units
    }
}

/// Index drawn with probability proportional to `weights[i]` among `candidates`.
fn pick_weighted(rng: &mut impl Rng, weights: &[f64], candidates: &[usize]) -> usize {
    let total: f64 = candidates.iter().map(|&i| weights[i]).sum();
    let mut u = rng.gen::<f64>() * total;
    for &i in candidates {
        u -= weights[i];
        if u < 0.0 {
            return i;
        }
    }
    *candidates.last().expect("non-empty candidates")
}

/// Draws hospitals one at a time without replacement, each with probability
/// proportional to its capacity among those not yet drawn.
pub fn capacity_driven_ranking(capacities: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    let weights: Vec<f64> = capacities.iter().map(|&q| q as f64).collect();
    let mut left: Vec<usize> = (0..capacities.len()).collect();
    let mut ranking = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let h = pick_weighted(rng, &weights, &left);
        left.retain(|&x| x != h);
        ranking.push(h);
    }
    ranking
}

/// Seeded form of [`capacity_driven_ranking`].
pub fn gen_capacity_driven_couples(capacities: &[usize], seed: u64) -> Result<Vec<usize>> {
    if capacities.is_empty() || capacities.contains(&0) {
        return Err(Error::InvalidParameter(
            "capacities must be positive".into(),
        ));
    }
    Ok(capacity_driven_ranking(capacities, &mut rng_for(seed, &[])))
}

/// Splits `total` seats proportionally to `template` by largest remainder
/// (ties to the lower index), giving every hospital at least one seat.
pub fn apportion(template: &[usize], total: usize) -> Result<Vec<usize>> {
    let weight: usize = template.iter().sum();
    if template.is_empty() || weight == 0 {
        return Err(Error::InvalidParameter("capacity template is empty".into()));
    }
    if total < template.len() {
        return Err(Error::InvalidParameter(format!(
            "{total} seats cannot cover {} hospitals",
            template.len()
        )));
    }
    let mut caps: Vec<usize> = template.iter().map(|&t| t * total / weight).collect();
    let mut order: Vec<usize> = (0..template.len()).collect();
    order.sort_by_key(|&h| std::cmp::Reverse(template[h] * total % weight));
    let short = total - caps.iter().sum::<usize>();
    for &h in order.iter().take(short) {
        caps[h] += 1;
    }
    while let Some(h) = caps.iter().position(|&q| q == 0) {
        let donor = (0..caps.len())
            .max_by_key(|&d| (caps[d], std::cmp::Reverse(d)))
            .unwrap();
        caps[donor] -= 1;
        caps[h] = 1;
    }
    Ok(caps)
}

/// Draws `n_interns − 2·n_couples` singles and `n_couples` couples with
/// replacement from the pool; capacities follow `template` scaled to
/// `n_interns` seats.
pub fn subsample_market(
    pool: &ProfilePool,
    n_interns: usize,
    n_couples: usize,
    template: &[usize],
    seed: u64,
) -> Result<Problem> {
    if 2 * n_couples > n_interns {
        return Err(Error::InvalidParameter(format!(
            "{n_couples} couples do not fit in {n_interns} interns"
        )));
    }
    let n_singles = n_interns - 2 * n_couples;
    if (n_singles > 0 && pool.singles.is_empty()) || (n_couples > 0 && pool.couples.is_empty()) {
        return Err(Error::InvalidParameter(
            "profile pool has no rankings of a needed kind".into(),
        ));
    }
    if template.len() != pool.hospitals.len() {
        return Err(Error::LengthMismatch {
            expected: pool.hospitals.len(),
            got: template.len(),
        });
    }
    let caps = apportion(template, n_interns)?;
    let mut rng = rng_for(seed, &[]);
    let mut raw = RawProblem::default();
    for (h, &q) in pool.hospitals.iter().zip(&caps) {
        raw = raw.hospital(&h.0, q);
    }
    let names =
        |r: &[usize]| -> Vec<HospitalId> { r.iter().map(|&h| pool.hospitals[h].clone()).collect() };
    for k in 0..n_singles {
        let r = &pool.singles[rng.gen_range(0..pool.singles.len())];
        raw = raw.unit(RawUnit {
            id: format!("s{k}").into(),
            kind: UnitKind::Single,
            members: vec![format!("s{k}").into()],
            ranking: names(r),
        });
    }
    for k in 0..n_couples {
        let r = &pool.couples[rng.gen_range(0..pool.couples.len())];
        raw = raw.unit(RawUnit {
            id: format!("c{k}").into(),
            kind: UnitKind::Couple,
            members: vec![format!("c{k}.1").into(), format!("c{k}.2").into()],
            ranking: names(r),
        });
    }
    Problem::new(raw)
}

/// Replaces every couple's ranking with a capacity-driven draw.
pub fn with_capacity_driven_couples(problem: &Problem, seed: u64) -> Result<Problem> {
    let caps = problem.capacities();
    let mut rng = rng_for(seed, &[]);
    let mut raw = problem.to_raw();
    for u in raw.units.iter_mut().filter(|u| u.kind == UnitKind::Couple) {
        u.ranking = capacity_driven_ranking(&caps, &mut rng)
            .into_iter()
            .map(|h| problem.hospitals()[h].id.clone())
            .collect();
    }
    Problem::new(raw)
}

/// A synthetic pool over hospitals `h0..` with capacities `template`, spread
/// round-robin over `n_areas` areas (`area0..`).
///
/// Each profile has a home area (chosen by the area's total capacity) and a
/// stickiness in [0.3, 0.95]: every next choice comes from the home area with
/// that probability while home hospitals remain, otherwise from all remaining
/// hospitals. Within a draw hospitals are weighted by a popularity drawn once
/// per pool, independent of capacity.
pub fn synthetic_pool(
    template: &[usize],
    n_areas: usize,
    n_singles: usize,
    n_couples: usize,
    seed: u64,
) -> Result<(ProfilePool, Vec<String>)> {
    if template.is_empty() || n_areas == 0 {
        return Err(Error::InvalidParameter(
            "need at least one hospital and one area".into(),
        ));
    }
    let m = template.len();
    let area_of: Vec<usize> = (0..m).map(|h| h % n_areas).collect();
    let mut rng = rng_for(seed, &[0]);
    let popularity: Vec<f64> = (0..m)
        .map(|_| (3.0 * (rng.gen::<f64>() - 0.5)).exp())
        .collect();
    let mut area_weight = vec![0.0; n_areas];
    for h in 0..m {
        area_weight[area_of[h]] += template[h] as f64;
    }
    let areas: Vec<usize> = (0..n_areas).collect();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let home = pick_weighted(rng, &area_weight, &areas);
        let sticky = 0.3 + 0.65 * rng.gen::<f64>();
        let mut left: Vec<usize> = (0..m).collect();
        let mut ranking = Vec::with_capacity(m);
        while !left.is_empty() {
            let local: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&h| area_of[h] == home)
                .collect();
            let from = if !local.is_empty() && rng.gen::<f64>() < sticky {
                &local
            } else {
                &left
            };
            let h = pick_weighted(rng, &popularity, from);
            left.retain(|&x| x != h);
            ranking.push(h);
        }
        ranking
    };
    let mut singles_rng = rng_for(seed, &[1]);
    let singles = (0..n_singles).map(|_| draw(&mut singles_rng)).collect();
    let mut couples_rng = rng_for(seed, &[2]);
    let couples = (0..n_couples).map(|_| draw(&mut couples_rng)).collect();
    let pool = ProfilePool {
        hospitals: (0..m).map(|h| format!("h{h}").into()).collect(),
        singles,
        couples,
    };
    Ok((pool, area_of.iter().map(|a| format!("area{a}")).collect()))
}
