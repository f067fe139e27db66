use super::problem_from_matrix;
use crate::error::{Error, Result};
use crate::model::{Matrix, Problem};

/// Two hospitals of capacity `q = 4⌈n/8⌉`. Each holds `q/2 + 1` singles and
/// `q/4 − 1` couples with certainty; one more couple is split 0.5/0.5.
///
/// No algorithm approximates this instance better than `2/(q+2)`.
pub fn gen_lower_bound(n: usize) -> Result<(Problem, Matrix)> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "n must be at least 8, got {n}"
        )));
    }
    let q = 4 * n.div_ceil(8);
    let hospitals = vec![("h".to_owned(), q), ("h'".to_owned(), q)];
    let mut units = Vec::new();
    let mut rows = Vec::new();
    for (tag, row) in [("", [1.0, 0.0]), ("'", [0.0, 1.0])] {
        for k in 1..=q / 2 + 1 {
            units.push((format!("s{k}{tag}"), vec![format!("s{k}{tag}")]));
            rows.push(row.to_vec());
        }
    }
    for (tag, row) in [("", [1.0, 0.0]), ("'", [0.0, 1.0])] {
        for k in 1..q / 4 {
            let id = format!("c{k}{tag}");
            units.push((id.clone(), vec![format!("{id}.1"), format!("{id}.2")]));
            rows.push(row.to_vec());
            rows.push(row.to_vec());
        }
    }
    units.push(("c*".to_owned(), vec!["c*.1".to_owned(), "c*.2".to_owned()]));
    rows.push(vec![0.5, 0.5]);
    rows.push(vec![0.5, 0.5]);
    problem_from_matrix(&hospitals, &units, Matrix::from_rows(rows)?)
}

/// `4m` hospitals of capacity `2k+1`: singles spread uniformly over the
/// primed half, couples uniformly over the unprimed half.
///
/// Every lottery errs by at least `2/(2k+1)` here, although the instance is
/// outside the singles-dominate-couples domain.
pub fn gen_small_probs(m: usize, k: usize) -> Result<(Problem, Matrix)> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "m and k must be positive, got m={m}, k={k}"
        )));
    }
    let cap = 2 * k + 1;
    let half = 2 * m;
    let mut hospitals: Vec<(String, usize)> = (1..=half).map(|j| (format!("h{j}"), cap)).collect();
    hospitals.extend((1..=half).map(|j| (format!("h{j}'"), cap)));
    let p = 1.0 / half as f64;
    let single_row: Vec<f64> = (0..2 * half)
        .map(|h| if h < half { 0.0 } else { p })
        .collect();
    let couple_row: Vec<f64> = (0..2 * half)
        .map(|h| if h < half { p } else { 0.0 })
        .collect();
    let mut units = Vec::new();
    let mut rows = Vec::new();
    for s in 1..=half * cap {
        units.push((format!("s{s}"), vec![format!("s{s}")]));
        rows.push(single_row.clone());
    }
    for c in 1..=cap * m {
        units.push((format!("c{c}"), vec![format!("c{c}.1"), format!("c{c}.2")]));
        rows.push(couple_row.clone());
        rows.push(couple_row.clone());
    }
    problem_from_matrix(&hospitals, &units, Matrix::from_rows(rows)?)
}
