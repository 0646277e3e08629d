//! Desk-scale runs of the Gaussian simulation study: the `k = 3` tables over
//! four mean/covariance shifts and the pairwise two-dimensional scans.

use serde::Serialize;

use crate::criterion::{fitness_from_pmfs, FitnessReport, Verdict};
use crate::dataset::Dataset;
use crate::error::{domain, Result};
use crate::partition::{build_moving_partition, Branching, PartitionSpec};
use crate::scalar::Real;
use crate::threshold::{check_epsilon, delta_star_hellinger};

use super::{mean_se, per_replicate, Family};

/// Size overrides for a table run.
#[derive(Debug, Clone, PartialEq)]
pub struct TableScale {
    pub n2: usize,
    /// Mother sample sizes, one column each.
    pub n1s: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Dimension of the pairwise scans.
    pub k: usize,
}

impl TableScale {
    /// Full-size defaults for `table` (1-6).
    pub fn full(table: u8) -> Self {
        let n1s = match table {
            5 => vec![1_000],
            6 => vec![10_000],
            _ => vec![10_000_000, 1_000_000, 100_000, 10_000],
        };
        Self {
            n2: 10_000_000,
            n1s,
            replicates: 1,
            seed: 0x5eed,
            epsilon: 0.05,
            k: 10,
        }
    }
}

/// `(alpha, beta)` of the mother distribution `N(alpha 1, I + beta V)`.
pub fn table_shift(table: u8) -> Result<(f64, f64)> {
    match table {
        1 => Ok((0.0, 0.0)),
        2 => Ok((0.01, 0.01)),
        3 | 5 | 6 => Ok((0.1, 0.1)),
        4 => Ok((1.0, 1.0)),
        _ => domain(format!("table must be 1-6, got {table}")),
    }
}

/// One table cell, averaged over replicates. Pairwise rows carry 1-based axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub table: u8,
    pub axis_i: Option<usize>,
    pub axis_j: Option<usize>,
    pub n1: usize,
    pub n2: usize,
    pub p_prime: u64,
    pub replicates: usize,
    pub seed: u64,
    pub d_mean: f64,
    pub d_se: f64,
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

fn summarise(table: u8, pair: Option<(usize, usize)>, scale: &TableScale, n1: usize, reports: &[&FitnessReport<f64>]) -> TableRow {
    let d: Vec<f64> = reports.iter().map(|r| r.hellinger_hat).collect();
    let lhs: Vec<f64> = reports.iter().map(|r| r.lhs).collect();
    let (d_mean, d_se) = mean_se(&d);
    let (lhs_mean, lhs_se) = mean_se(&lhs);
    let threshold = reports[0].threshold;
    TableRow {
        table,
        axis_i: pair.map(|p| p.0 + 1),
        axis_j: pair.map(|p| p.1 + 1),
        n1,
        n2: scale.n2,
        p_prime: reports[0].p_prime,
        replicates: reports.len(),
        seed: scale.seed,
        d_mean,
        d_se,
        lhs_mean,
        lhs_se,
        threshold,
        verdict: if lhs_mean < threshold {
            Verdict::Close
        } else {
            Verdict::NotShownClose
        },
    }
}

/// Runs table 1-4 (`k = 3`, depth 3, four bins per level) or 5-6 (pairwise).
///
/// Each replicate draws one model sample of size `n2` and reuses its tree
/// for every `n1` column.
pub fn reproduce_table(table: u8, scale: &TableScale) -> Result<Vec<TableRow>> {
    let (alpha, beta) = table_shift(table)?;
    check_epsilon(scale.epsilon)?;
    if scale.replicates == 0 || scale.n1s.is_empty() {
        return domain("need at least one replicate and one n1 column");
    }
    if table >= 5 {
        return reproduce_pairwise_table(table, scale);
    }
    let k = 3;
    let mother = Family::shifted_normal(k, alpha, beta)?;
    let model = Family::standard_normal(k);
    let spec = PartitionSpec::uniform(3, 4);
    let per_rep = per_replicate(scale.replicates, scale.seed, |stream| {
        let model_sample = model.sample(scale.n2, stream.substream(0))?;
        let tree = build_moving_partition(&model_sample, &spec)?;
        drop(model_sample);
        let model_pmf = tree.model_pmf()?;
        scale
            .n1s
            .iter()
            .enumerate()
            .map(|(c, &n1)| {
                let m = mother.sample(n1, stream.substream(1 + c as u16))?;
                let counts = tree.count_into_bins(&m)?;
                fitness_from_pmfs(&counts.to_pmf()?, &model_pmf, n1 as u64, scale.n2 as u64, scale.epsilon)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(scale
        .n1s
        .iter()
        .enumerate()
        .map(|(c, &n1)| {
            let col: Vec<&FitnessReport<f64>> = per_rep.iter().map(|r| &r[c]).collect();
            summarise(table, None, scale, n1, &col)
        })
        .collect())
}

/// Tables 5-6: every two-dimensional marginal pair of a `k`-dimensional
/// shifted normal against the standard normal, depth 2, four bins per level.
pub fn reproduce_pairwise_table(table: u8, scale: &TableScale) -> Result<Vec<TableRow>> {
    let (alpha, beta) = table_shift(table)?;
    if scale.k < 2 {
        return domain("pairwise scan needs k >= 2");
    }
    let mother = Family::shifted_normal(scale.k, alpha, beta)?;
    let model = Family::standard_normal(scale.k);
    let per_rep = per_replicate(scale.replicates, scale.seed, |stream| {
        let model_sample = model.sample(scale.n2, stream.substream(0))?;
        let mothers = scale
            .n1s
            .iter()
            .enumerate()
            .map(|(c, &n1)| mother.sample(n1, stream.substream(1 + c as u16)))
            .collect::<Result<Vec<_>>>()?;
        scan_pairs(&mothers, &model_sample, &Branching::Uniform(4), scale.epsilon)
    })?;
    let mut rows = Vec::new();
    for (c, &n1) in scale.n1s.iter().enumerate() {
        for (p, pair) in per_rep[0][c].pairs.iter().enumerate() {
            let col: Vec<&FitnessReport<f64>> = per_rep.iter().map(|s| &s[c].pairs[p].report).collect();
            rows.push(summarise(table, Some((pair.i, pair.j)), scale, n1, &col));
        }
    }
    Ok(rows)
}

/// Criterion on one pair of axes (0-based, `i < j`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport<T> {
    pub i: usize,
    pub j: usize,
    pub report: FitnessReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseScan<T> {
    pub k: usize,
    pub threshold: T,
    /// Row-major by `(i, j)`, `i < j`.
    pub pairs: Vec<PairReport<T>>,
}

impl<T: Real> PairwiseScan<T> {
    /// `k x k` matrix with the criterion's left side above the diagonal.
    pub fn lhs_matrix(&self) -> Vec<Vec<Option<T>>> {
        let mut m = vec![vec![None; self.k]; self.k];
        for p in &self.pairs {
            m[p.i][p.j] = Some(p.report.lhs);
        }
        m
    }

    pub fn max_lhs(&self) -> T {
        self.pairs.iter().map(|p| p.report.lhs).fold(T::neg_infinity(), T::max)
    }
}

/// Runs the criterion on every two-dimensional marginal with a depth-2
/// partition split first on axis `i`, then on `j`.
pub fn pairwise_marginal_scan<T: Real>(
    mother: &Dataset<T>,
    model: &Dataset<T>,
    branching: &Branching,
    epsilon: T,
) -> Result<PairwiseScan<T>> {
    Ok(scan_pairs(std::slice::from_ref(mother), model, branching, epsilon)?.remove(0))
}

/// One scan per mother sample, building each pair's tree once.
fn scan_pairs<T: Real>(
    mothers: &[Dataset<T>],
    model: &Dataset<T>,
    branching: &Branching,
    epsilon: T,
) -> Result<Vec<PairwiseScan<T>>> {
    let k = model.k();
    if k < 2 {
        return domain("pairwise scan needs at least two dimensions");
    }
    let threshold = delta_star_hellinger(epsilon)?;
    let mut scans: Vec<PairwiseScan<T>> = mothers
        .iter()
        .map(|_| PairwiseScan {
            k,
            threshold,
            pairs: Vec::with_capacity(k * (k - 1) / 2),
        })
        .collect();
    for i in 0..k {
        for j in i + 1..k {
            let spec = PartitionSpec {
                depth: 2,
                branching: branching.clone(),
                axis_order: Some(vec![i, j]),
            };
            let tree = build_moving_partition(model, &spec)?;
            let model_pmf = tree.model_pmf()?;
            for (scan, mother) in scans.iter_mut().zip(mothers) {
                let counts = tree.count_into_bins(mother)?;
                let report = fitness_from_pmfs(&counts.to_pmf()?, &model_pmf, mother.n() as u64, model.n() as u64, epsilon)?;
                scan.pairs.push(PairReport { i, j, report });
            }
        }
    }
    Ok(scans)
}
