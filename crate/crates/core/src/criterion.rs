//! The model fitness criterion
//! `D[m1_hat : m2_hat] + p'/(2 n1) + sqrt(8 p'/n2) < 8 eps^2`
//! and a two-sample Kolmogorov-Smirnov baseline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::divergence::{hellinger, MultinomialPmf};
use crate::error::{domain, Result};
use crate::partition::{build_moving_partition, BinCounts, PartitionSpec, PartitionTree};
use crate::scalar::Real;
use crate::threshold::{check_epsilon, delta_star_hellinger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Close,
    NotShownClose,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Close => "close",
            Verdict::NotShownClose => "not-shown-close",
        })
    }
}

/// Full accounting of one criterion evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport<T> {
    pub hellinger_hat: T,
    pub p_prime: u64,
    pub n1: u64,
    pub n2: u64,
    pub bias_n1: T,
    pub bias_n2: T,
    pub lhs: T,
    pub epsilon: T,
    pub threshold: T,
    pub verdict: Verdict,
    pub implied_epsilon: T,
    pub implied_bayes_error: T,
    /// Leaves with no mother-sample points.
    pub zero_bins: u64,
}

/// `(p'/(2 n1), sqrt(8 p'/n2))`.
pub fn bias_correction<T: Real>(p_prime: u64, n1: u64, n2: u64) -> Result<(T, T)> {
    if p_prime == 0 || n1 == 0 || n2 == 0 {
        return domain(format!(
            "bias correction needs positive p', n1, n2 (got {p_prime}, {n1}, {n2})"
        ));
    }
    let p = T::lit(p_prime as f64);
    let b1 = p / (T::lit(2.0) * T::lit(n1 as f64));
    let b2 = (T::lit(8.0) * p / T::lit(n2 as f64)).sqrt();
    Ok((b1, b2))
}

/// `sqrt(lhs / 8)`, the slack at which `lhs` would sit exactly on the threshold.
pub fn implied_epsilon<T: Real>(lhs: T) -> Result<T> {
    if !(lhs >= T::zero()) {
        return domain(format!("lhs must be non-negative, got {lhs}"));
    }
    Ok((lhs / T::lit(8.0)).sqrt())
}

/// Criterion from already-discretized samples.
pub fn fitness_from_pmfs<T: Real>(
    mother: &MultinomialPmf<T>,
    model: &MultinomialPmf<T>,
    n1: u64,
    n2: u64,
    epsilon: T,
) -> Result<FitnessReport<T>> {
    let threshold = delta_star_hellinger(epsilon)?;
    let zero_bins = mother.probs().iter().filter(|p| **p == T::zero()).count() as u64;
    let p_prime = (model.len() - 1) as u64;
    let hellinger_hat = hellinger(mother, model)?;
    let (bias_n1, bias_n2) = bias_correction::<T>(p_prime, n1, n2)?;
    let lhs = hellinger_hat + bias_n1 + bias_n2;
    let implied = implied_epsilon(lhs)?;
    Ok(FitnessReport {
        hellinger_hat,
        p_prime,
        n1,
        n2,
        bias_n1,
        bias_n2,
        lhs,
        epsilon,
        threshold,
        verdict: if lhs < threshold {
            Verdict::Close
        } else {
            Verdict::NotShownClose
        },
        implied_epsilon: implied,
        implied_bayes_error: T::lit(0.5) - implied,
        zero_bins,
    })
}

/// Report plus the intermediate partition and counts.
#[derive(Debug, Clone)]
pub struct FitnessEvaluation<T: Real> {
    pub report: FitnessReport<T>,
    pub tree: PartitionTree<T>,
    pub mother_counts: BinCounts,
}

/// Builds the partition from the model sample, discretizes the mother sample
/// into it and applies the criterion. The roles are not interchangeable.
pub fn evaluate_fitness<T: Real>(
    mother: &Dataset<T>,
    model: &Dataset<T>,
    spec: &PartitionSpec,
    epsilon: T,
) -> Result<FitnessReport<T>> {
    Ok(evaluate_fitness_detailed(mother, model, spec, epsilon)?.report)
}

pub fn evaluate_fitness_detailed<T: Real>(
    mother: &Dataset<T>,
    model: &Dataset<T>,
    spec: &PartitionSpec,
    epsilon: T,
) -> Result<FitnessEvaluation<T>> {
    check_epsilon(epsilon)?;
    if mother.k() != model.k() {
        return domain(format!(
            "mother has dimension {} but model has {}",
            mother.k(),
            model.k()
        ));
    }
    let tree = build_moving_partition(model, spec)?;
    let mother_counts = tree.count_into_bins(mother)?;
    let report = fitness_from_pmfs(
        &mother_counts.to_pmf()?,
        &tree.model_pmf()?,
        mother.n() as u64,
        model.n() as u64,
        epsilon,
    )?;
    Ok(FitnessEvaluation {
        report,
        tree,
        mother_counts,
    })
}

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult<T> {
    pub statistic: T,
    pub p_value: T,
}

/// `sup |F_x - F_y|` with the asymptotic p-value at effective size
/// `n m / (n + m)`.
pub fn ks_two_sample<T: Real>(x: &[T], y: &[T]) -> Result<KsResult<T>> {
    if x.is_empty() || y.is_empty() {
        return domain("Kolmogorov-Smirnov needs two non-empty samples");
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return domain("Kolmogorov-Smirnov needs finite values");
    }
    let sorted = |s: &[T]| {
        let mut v = s.to_vec();
        v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        v
    };
    let (a, b) = (sorted(x), sorted(y));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0f64;
    while i < n && j < m {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = (n as f64 * m as f64) / (n + m) as f64;
    Ok(KsResult {
        statistic: T::lit(d),
        p_value: T::lit(kolmogorov_sf(en.sqrt() * d)),
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small lambda
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let w = -pi2 / (8.0 * lambda * lambda);
        let s: f64 = (1..=8)
            .map(|j| (w * ((2 * j - 1) as f64).powi(2)).exp())
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j as f64).powi(2) * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}
