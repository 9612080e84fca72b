use log::warn;

use crate::data::ScoreAggregation;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl FScore {
    const ZERO: FScore = FScore {
        precision: 0.0,
        recall: 0.0,
        f: 0.0,
    };
}

/// Overlap score of a generated mask `generated` against a reference mask
/// `reference`. Precision is the overlap over the reference size and recall
/// the overlap over the generated size; F is symmetric either way.
pub fn f_score(reference: &[bool], generated: &[bool]) -> Result<FScore> {
    if reference.len() != generated.len() {
        return Err(Error::Shape(format!(
            "reference mask has {} frames, generated mask {}",
            reference.len(),
            generated.len()
        )));
    }
    let size_a = reference.iter().filter(|&&a| a).count();
    let size_b = generated.iter().filter(|&&b| b).count();
    if size_a == 0 || size_b == 0 {
        warn!("F score of an empty summary is defined as 0");
        return Ok(FScore::ZERO);
    }
    let overlap = reference
        .iter()
        .zip(generated)
        .filter(|(&a, &b)| a && b)
        .count();
    if overlap == 0 {
        return Ok(FScore::ZERO);
    }
    let precision = overlap as f64 / size_a as f64;
    let recall = overlap as f64 / size_b as f64;
    Ok(FScore {
        precision,
        recall,
        f: 2.0 * precision * recall / (precision + recall),
    })
}

/// F of `generated` against several user summaries, combined by `mode`.
pub fn f_score_multi(
    user_summaries: &[Vec<bool>],
    generated: &[bool],
    mode: ScoreAggregation,
) -> Result<f64> {
    if user_summaries.is_empty() {
        return Err(Error::Shape("no user summaries to score against".into()));
    }
    let scores = user_summaries
        .iter()
        .map(|u| f_score(u, generated).map(|s| s.f))
        .collect::<Result<Vec<_>>>()?;
    Ok(match mode {
        ScoreAggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ScoreAggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
    })
}

fn paired<S: Real>(x: &[S], y: &[S]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "rank correlation of vectors with {} and {} entries",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Shape(
            "rank correlation needs at least two entries".into(),
        ));
    }
    let x: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let y: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "non-finite score in rank correlation".into(),
        ));
    }
    Ok((x, y))
}

/// Pairs tied within each run of equal values of a sorted slice.
fn tied_pairs(sorted: &[f64]) -> u64 {
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let k = run.len() as u64;
            k * (k - 1) / 2
        })
        .sum()
}

/// Sorts `v` in place and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b, O(T log T).
pub fn kendall_tau<S: Real>(x: &[S], y: &[S]) -> Result<f64> {
    let (x, y) = paired(x, y)?;
    let n = x.len() as u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let n0 = n * (n - 1) / 2;
    let n1 = tied_pairs(&xs);
    let mut n3 = 0;
    let mut start = 0;
    for run in xs.chunk_by(|a, b| a == b) {
        n3 += tied_pairs(&ys[start..start + run.len()]);
        start += run.len();
    }
    let swaps = merge_count(&mut ys, &mut Vec::with_capacity(x.len()));
    let n2 = tied_pairs(&ys);

    if n0 == n1 || n0 == n2 {
        warn!("Kendall tau of a constant vector is defined as 0");
        return Ok(0.0);
    }
    let numerator = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    Ok(numerator as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt())
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_rho<S: Real>(x: &[S], y: &[S]) -> Result<f64> {
    let (x, y) = paired(x, y)?;
    match pearson(&average_ranks(&x), &average_ranks(&y)) {
        Some(rho) => Ok(rho),
        None => {
            warn!("Spearman rho of a constant vector is defined as 0");
            Ok(0.0)
        }
    }
}
