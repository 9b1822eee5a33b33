//! Small statistics toolbox: rank-sum test, five-number summaries, robust
//! location/scale. Hand-rolled rather than pulling in a stats crate; every
//! routine here is covered by an independent oracle in the test suite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("both samples must be non-empty")]
    EmptySample,
    #[error("input must be non-empty")]
    EmptyInput,
}

/// Outcome of a two-sided Mann-Whitney rank-sum test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankSumTest {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// True when the exact enumeration path was used.
    pub exact: bool,
}

/// Midranks of the pooled sample, returned in pooled input order
/// (first all of `a`, then all of `b`). Ties share their average rank.
fn midranks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let val = |i: usize| if i < a.len() { a[i] } else { b[i - a.len()] };
    idx.sort_by(|&x, &y| val(x).partial_cmp(&val(y)).expect("NaN in rank-sum input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && val(idx[j]) == val(idx[i]) {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for k in i..j {
            ranks[idx[k]] = avg;
        }
        i = j;
    }
    ranks
}

/// Sum of `t^3 - t` over tie groups, for the variance tie correction.
fn tie_term(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Two-sided Mann-Whitney U test of `a` versus `b`.
///
/// Uses exact enumeration of all rank arrangements when both samples have
/// at most 8 elements, and the normal approximation with tie correction and
/// continuity correction otherwise. The returned U is the U statistic of
/// `a`, so swapping the samples maps `u -> n_a*n_b - u` and preserves `p`.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<RankSumTest, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (na, nb) = (a.len(), b.len());
    let ranks = midranks(a, b);
    let r_a: f64 = ranks[..na].iter().sum();
    let u = r_a - (na * (na + 1)) as f64 / 2.0;
    let mu = (na * nb) as f64 / 2.0;

    let exact = na <= 8 && nb <= 8;
    let p = if exact {
        exact_two_sided_p(&ranks, na, u, mu)
    } else {
        normal_two_sided_p(&ranks, na, nb, u, mu)
    };
    Ok(RankSumTest {
        u,
        p,
        n_a: na,
        n_b: nb,
        exact,
    })
}

/// Exact two-sided p: the fraction of all C(n, na) assignments of the pooled
/// midranks to the first sample whose U deviates from the mean at least as
/// much as the observed U.
fn exact_two_sided_p(ranks: &[f64], na: usize, u_obs: f64, mu: f64) -> f64 {
    let n = ranks.len();
    let threshold = (u_obs - mu).abs() - 1e-9;
    let offset = (na * (na + 1)) as f64 / 2.0;
    let mut comb: Vec<usize> = (0..na).collect();
    let mut hits = 0u64;
    let mut total = 0u64;
    loop {
        let r: f64 = comb.iter().map(|&i| ranks[i]).sum();
        if (r - offset - mu).abs() >= threshold {
            hits += 1;
        }
        total += 1;
        // Next combination in lexicographic order.
        let mut i = na;
        loop {
            if i == 0 {
                return hits as f64 / total as f64;
            }
            i -= 1;
            if comb[i] != i + n - na {
                break;
            }
        }
        comb[i] += 1;
        for j in i + 1..na {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

fn normal_two_sided_p(ranks: &[f64], na: usize, nb: usize, u: f64, mu: f64) -> f64 {
    let n = (na + nb) as f64;
    let tie = tie_term(ranks);
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
    if var <= 0.0 {
        // All pooled values identical: no evidence of separation.
        return 1.0;
    }
    let dev = (u - mu).abs();
    // Continuity correction; deviations under half a rank count as none.
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}

/// Upper tail of the standard normal distribution.
///
/// Abramowitz & Stegun 7.1.26 rational approximation (|error| < 1.5e-7),
/// far below any tolerance used in this crate.
pub fn normal_sf(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - normal_sf(-z);
    }
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-x * x).exp();
    0.5 * erfc
}

/// Five-number summary with quartiles by linear interpolation between
/// closest ranks: the q-quantile sits at rank `q * (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn summarize_box(values: &[f64]) -> Result<BoxSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("NaN in summary input"));
    Ok(BoxSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median of a slice (0.0 for empty input).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    quantile_sorted(&sorted, 0.5)
}

/// Median absolute deviation around the median (unscaled).
pub fn mad(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = median(values);
    let devs: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&devs)
}
