//! Paired significance testing for the critical-difference machinery:
//! Wilcoxon signed-rank with an exact small-sample null, and the Holm
//! step-down correction.

use bamoes::stats::normal_cdf;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact null is used up to this many non-zero differences.
const EXACT_LIMIT: usize = 25;

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map_or(f64::NAN, |d| d.sf(x))
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero
/// differences are dropped; with no informative pairs the p-value is 1.
/// Exact subset-sum null for n <= 25 (valid with average-rank ties), normal
/// approximation with tie correction and continuity correction beyond.
pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples must align");
    let diffs: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return 1.0;
    }

    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    if n <= EXACT_LIMIT {
        exact_two_sided(&ranks, w)
    } else {
        // tie-corrected variance
        let mut sorted = ranks.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let z = (w - mean + 0.5) / var.sqrt();
        (2.0 * normal_cdf(z)).min(1.0)
    }
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // mean of 1-based positions i+1..=j+1
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Exact two-sided p: doubled ranks are integers, so the null distribution
/// of W+ (uniform over sign assignments) comes from a subset-sum count.
fn exact_two_sided(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len();
    let weights: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = weights.iter().sum();
    let target = (2.0 * w).round() as usize;
    // dp[s] = number of subsets with doubled-rank sum s
    let mut dp = vec![0.0f64; total + 1];
    dp[0] = 1.0;
    for &wt in &weights {
        for s in (wt..=total).rev() {
            dp[s] += dp[s - wt];
        }
    }
    let count: f64 = dp[..=target.min(total)].iter().sum();
    let p = 2.0 * count / (n as f64).exp2();
    p.min(1.0)
}

/// Holm step-down: returns the rejection decision per input p-value at
/// family level `alpha`.
pub fn holm_rejections(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}
