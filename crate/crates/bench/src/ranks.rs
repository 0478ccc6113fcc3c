//! Rank aggregation and the critical-difference procedure: per-series
//! average ranks, the Friedman omnibus test, and pairwise Wilcoxon with Holm
//! correction rendered as cliques of statistically indistinguishable
//! methods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::runner::{Metric, ResultsTable};
use crate::stats::{chi_square_sf, holm_rejections, wilcoxon_signed_rank};

/// Per-series metric values restricted to series where every method
/// succeeded (failed cells drop the series for all methods, keeping ranks
/// comparable).
#[derive(Debug, Clone)]
pub struct MetricMatrix {
    pub methods: Vec<String>,
    pub used_series: Vec<String>,
    pub dropped_series: usize,
    /// `values[s][m]` for series `s`, method `m`.
    pub values: Vec<Vec<f64>>,
}

impl MetricMatrix {
    pub fn from_table(table: &ResultsTable, metric: Metric) -> MetricMatrix {
        let mut used_series = Vec::new();
        let mut values = Vec::new();
        let mut dropped = 0;
        for sid in &table.series_ids {
            let row: Option<Vec<f64>> = table
                .methods
                .iter()
                .map(|m| {
                    table
                        .cell(sid, m)
                        .and_then(|c| c.metrics())
                        .map(|mm| mm.get(metric))
                })
                .collect();
            match row {
                Some(row) => {
                    used_series.push(sid.clone());
                    values.push(row);
                }
                None => dropped += 1,
            }
        }
        MetricMatrix {
            methods: table.methods.clone(),
            used_series,
            dropped_series: dropped,
            values,
        }
    }

    /// Ascending ranks per series (lower metric = better); ties share the
    /// average rank, so each row sums to `M (M + 1) / 2`.
    pub fn per_series_ranks(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|row| rank_row(row)).collect()
    }

    pub fn mean_ranks(&self) -> Vec<f64> {
        let m = self.methods.len();
        let ranks = self.per_series_ranks();
        let s = ranks.len().max(1) as f64;
        (0..m)
            .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / s)
            .collect()
    }
}

fn rank_row(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank per method for one metric over the usable series.
pub fn rank_methods(table: &ResultsTable, metric: Metric) -> MetricMatrix {
    MetricMatrix::from_table(table, metric)
}

/// Friedman chi-square over a rank matrix (`S` series x `M` methods):
/// `12 S / (M (M + 1)) * sum_j (Rbar_j - (M + 1) / 2)^2`, p-value from the
/// chi-square upper tail with `M - 1` degrees of freedom. With `M = 2` this
/// degenerates to the ordering information of a sign test.
pub fn friedman_test(per_series_ranks: &[Vec<f64>]) -> (f64, f64) {
    let s = per_series_ranks.len() as f64;
    if per_series_ranks.is_empty() {
        return (0.0, 1.0);
    }
    let m = per_series_ranks[0].len() as f64;
    if m < 2.0 {
        return (0.0, 1.0);
    }
    let mean_ranks: Vec<f64> = (0..per_series_ranks[0].len())
        .map(|j| per_series_ranks.iter().map(|r| r[j]).sum::<f64>() / s)
        .collect();
    let center = (m + 1.0) / 2.0;
    let stat = 12.0 * s / (m * (m + 1.0))
        * mean_ranks
            .iter()
            .map(|r| (r - center) * (r - center))
            .sum::<f64>();
    let p = chi_square_sf(stat, m - 1.0);
    (stat, p)
}

/// Pairwise Wilcoxon signed-rank with Holm step-down at `alpha_sig`;
/// returns maximal groups of methods (in mean-rank order) with no rejected
/// pair inside, i.e. the thick bars of a critical-difference diagram. The
/// groups always cover every method.
pub fn wilcoxon_holm_cliques(matrix: &MetricMatrix, alpha_sig: f64) -> Vec<Vec<String>> {
    let m = matrix.methods.len();
    if m == 0 {
        return Vec::new();
    }
    if matrix.values.is_empty() {
        return vec![matrix.methods.clone()];
    }

    // pairwise p-values
    let mut pairs = Vec::new();
    let mut pvals = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            let xs: Vec<f64> = matrix.values.iter().map(|row| row[a]).collect();
            let ys: Vec<f64> = matrix.values.iter().map(|row| row[b]).collect();
            pairs.push((a, b));
            pvals.push(wilcoxon_signed_rank(&xs, &ys));
        }
    }
    let rejected = holm_rejections(&pvals, alpha_sig);
    let mut reject = vec![vec![false; m]; m];
    for ((a, b), r) in pairs.into_iter().zip(rejected) {
        reject[a][b] = r;
        reject[b][a] = r;
    }

    // order methods by mean rank, then emit maximal non-rejected intervals
    let mean_ranks = matrix.mean_ranks();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| mean_ranks[a].partial_cmp(&mean_ranks[b]).unwrap());

    let mut cliques: Vec<Vec<String>> = Vec::new();
    let mut last_end: Option<usize> = None;
    for start in 0..m {
        let mut end = start;
        'grow: while end + 1 < m {
            for i in start..=end {
                if reject[order[i]][order[end + 1]] {
                    break 'grow;
                }
            }
            end += 1;
        }
        if last_end.is_none_or(|le| end > le) {
            cliques.push(
                order[start..=end]
                    .iter()
                    .map(|&i| matrix.methods[i].clone())
                    .collect(),
            );
            last_end = Some(end);
        }
    }
    cliques
}

/// Everything the reports need for one metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean_ranks: BTreeMap<String, f64>,
    pub cliques: Vec<Vec<String>>,
    pub friedman_statistic: f64,
    pub friedman_p_value: f64,
    pub series_used: usize,
    pub series_dropped: usize,
}

/// Per-metric mean ranks, significance decisions, and cliques.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSummary {
    pub alpha: f64,
    pub metrics: BTreeMap<String, MetricSummary>,
}

impl RankSummary {
    /// The critical-difference pipeline: rank, Friedman gate, then the
    /// pairwise Wilcoxon-Holm cliques (gate closed leaves one clique of all
    /// methods).
    pub fn compute(table: &ResultsTable, alpha: f64) -> RankSummary {
        let mut metrics = BTreeMap::new();
        for metric in Metric::ALL {
            let matrix = MetricMatrix::from_table(table, metric);
            let ranks = matrix.per_series_ranks();
            let (stat, p) = friedman_test(&ranks);
            let cliques = if p < alpha {
                wilcoxon_holm_cliques(&matrix, alpha)
            } else {
                vec![matrix.methods.clone()]
            };
            let mean = matrix.mean_ranks();
            metrics.insert(
                metric.name().to_string(),
                MetricSummary {
                    mean_ranks: matrix
                        .methods
                        .iter()
                        .cloned()
                        .zip(mean.iter().copied())
                        .collect(),
                    cliques,
                    friedman_statistic: stat,
                    friedman_p_value: p,
                    series_used: matrix.used_series.len(),
                    series_dropped: matrix.dropped_series,
                },
            );
        }
        RankSummary { alpha, metrics }
    }
}
