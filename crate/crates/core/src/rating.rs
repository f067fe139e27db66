//! Hospital ratings from submitted rankings, and preference-heterogeneity
//! statistics. Couples count once per member throughout.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{HospitalId, Problem};

#[derive(Clone, Debug, PartialEq)]
pub struct HospitalRating {
    pub scores: Vec<f64>,
    /// 1-based position per hospital; higher score first, ties by hospital id.
    pub ranks: Vec<usize>,
}

impl HospitalRating {
    fn from_scores(problem: &Problem, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| problem.hospitals()[a].id.cmp(&problem.hospitals()[b].id))
        });
        let mut ranks = vec![0; scores.len()];
        for (pos, &h) in order.iter().enumerate() {
            ranks[h] = pos + 1;
        }
        Self { scores, ranks }
    }

    /// Hospital indices from best to worst.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ranks.len()).collect();
        order.sort_by_key(|&h| self.ranks[h]);
        order
    }
}

/// Number of interns ranking each hospital first.
pub fn rating_first_choice(problem: &Problem) -> HospitalRating {
    let mut scores = vec![0.0; problem.n_hospitals()];
    for i in 0..problem.n_interns() {
        scores[problem.intern_ranking(i)[0]] += 1.0;
    }
    HospitalRating::from_scores(problem, scores)
}

/// `Σ_i (m − rank_i(h) + 1)²` per hospital.
pub fn rating_weighted(problem: &Problem) -> HospitalRating {
    let m = problem.n_hospitals();
    let mut scores = vec![0.0; m];
    for i in 0..problem.n_interns() {
        for (k, &h) in problem.intern_ranking(i).iter().enumerate() {
            let w = (m - k) as f64;
            scores[h] += w * w;
        }
    }
    HospitalRating::from_scores(problem, scores)
}

/// Area of every hospital, in problem order.
pub fn areas_for(problem: &Problem, area_map: &HashMap<HospitalId, String>) -> Result<Vec<String>> {
    problem
        .hospitals()
        .iter()
        .map(|h| {
            area_map
                .get(&h.id)
                .cloned()
                .ok_or_else(|| Error::UnknownHospital(format!("{} (no area)", h.id)))
        })
        .collect()
}

/// For `k = 2..=k_max`, the fraction of interns whose top `k` hospitals all
/// lie in one area, after dropping `excluded` from every ranking.
pub fn same_area_topk(
    problem: &Problem,
    area_map: &HashMap<HospitalId, String>,
    k_max: usize,
    excluded: Option<&HospitalId>,
) -> Result<Vec<(usize, f64)>> {
    let areas = areas_for(problem, area_map)?;
    let skip = match excluded {
        Some(id) => Some(
            problem
                .hospital_index(id)
                .ok_or_else(|| Error::UnknownHospital(id.0.clone()))?,
        ),
        None => None,
    };
    let available = problem.n_hospitals() - usize::from(skip.is_some());
    if k_max < 2 || k_max > available {
        return Err(Error::InvalidParameter(format!(
            "k_max must lie in 2..={available}, got {k_max}"
        )));
    }
    let mut hits = vec![0usize; k_max + 1];
    for i in 0..problem.n_interns() {
        let top: Vec<usize> = problem
            .intern_ranking(i)
            .iter()
            .copied()
            .filter(|&h| Some(h) != skip)
            .take(k_max)
            .collect();
        let home = &areas[top[0]];
        let run = top.iter().take_while(|&&h| &areas[h] == home).count();
        for hit in hits.iter_mut().take(run + 1).skip(2) {
            *hit += 1;
        }
    }
    let n = problem.n_interns() as f64;
    Ok((2..=k_max).map(|k| (k, hits[k] as f64 / n)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletDistribution {
    /// Ordered top-3 triplets with their counts, most frequent first.
    pub triplets: Vec<([usize; 3], usize)>,
    pub density: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Frequencies of ordered top-three choices.
pub fn top_triplet_distribution(problem: &Problem) -> Result<TripletDistribution> {
    if problem.n_hospitals() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three hospitals".into(),
        ));
    }
    let mut counts: HashMap<[usize; 3], usize> = HashMap::new();
    for i in 0..problem.n_interns() {
        let r = problem.intern_ranking(i);
        *counts.entry([r[0], r[1], r[2]]).or_default() += 1;
    }
    let mut triplets: Vec<([usize; 3], usize)> = counts.into_iter().collect();
    triplets.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = problem.n_interns() as f64;
    let density: Vec<f64> = triplets.iter().map(|t| t.1 as f64 / n).collect();
    let mut acc = 0;
    let cumulative = triplets
        .iter()
        .map(|t| {
            acc += t.1;
            acc as f64 / n
        })
        .collect();
    Ok(TripletDistribution {
        triplets,
        density,
        cumulative,
    })
}
