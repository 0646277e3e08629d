//! Monte Carlo checks of the risk expansions and the bias bound, and
//! desk-scale reproduction of the simulation tables.

mod masses;
mod tables;

pub use masses::{bivariate_rectangle, leaf_masses, DEFAULT_QMC_POINTS};
pub use tables::{
    pairwise_marginal_scan, reproduce_pairwise_table, reproduce_table, PairwiseScan, TableRow, TableScale,
};

use nalgebra::DMatrix;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{ar_covariance, sample_mvn, sample_uniform, Dataset, RngStream};
use crate::divergence::{f_divergence, hellinger, DivergenceGenerator, MultinomialPmf};
use crate::error::{domain, Error, Result};
use crate::partition::{build_moving_partition, PartitionSpec};
use crate::scalar::compensated_sum;

/// Built-in distributions with computable leaf masses.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Uniform on `(0, 1]^k`.
    Uniform { k: usize },
    Gaussian { mean: Vec<f64>, cov: DMatrix<f64> },
}

impl Family {
    pub fn standard_normal(k: usize) -> Self {
        Family::Gaussian {
            mean: vec![0.0; k],
            cov: DMatrix::identity(k, k),
        }
    }

    /// `N(alpha 1, I + beta V)` with `V_ij = 0.95^|i-j|`.
    pub fn shifted_normal(k: usize, alpha: f64, beta: f64) -> Result<Self> {
        let v = ar_covariance(k, 0.95)?;
        Ok(Family::Gaussian {
            mean: vec![alpha; k],
            cov: DMatrix::identity(k, k) + v * beta,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Family::Uniform { k } => *k,
            Family::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn sample(&self, n: usize, rng: RngStream) -> Result<Dataset<f64>> {
        match self {
            Family::Uniform { k } => sample_uniform(n, *k, rng),
            Family::Gaussian { mean, cov } => sample_mvn(n, mean, cov, rng),
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Mother distribution (two-sample experiments only).
    pub mother: Family,
    /// Model distribution; the one-sample experiments draw from it.
    pub model: Family,
    pub spec: PartitionSpec,
    /// One-sample size.
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub replicates: usize,
    pub seed: u64,
    pub generator: DivergenceGenerator<f64>,
    pub qmc_points: usize,
}

impl ExperimentConfig {
    pub fn one_sample(family: Family, spec: PartitionSpec, n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            mother: family.clone(),
            model: family,
            spec,
            n,
            n1: n,
            n2: n,
            replicates,
            seed,
            generator: DivergenceGenerator::hellinger(),
            qmc_points: DEFAULT_QMC_POINTS,
        }
    }

    pub fn two_sample(
        mother: Family,
        model: Family,
        spec: PartitionSpec,
        n1: usize,
        n2: usize,
        replicates: usize,
        seed: u64,
    ) -> Self {
        Self {
            mother,
            model,
            spec,
            n: n2,
            n1,
            n2,
            replicates,
            seed,
            generator: DivergenceGenerator::hellinger(),
            qmc_points: DEFAULT_QMC_POINTS,
        }
    }

    pub fn with_generator(mut self, generator: DivergenceGenerator<f64>) -> Self {
        self.generator = generator;
        self
    }

    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        if self.n == 0 || self.n1 == 0 || self.n2 == 0 {
            return domain("sample sizes must be positive");
        }
        if self.mother.dim() != self.model.dim() {
            return domain("mother and model dimensions differ");
        }
        Ok(())
    }
}

/// Mean and standard error over replicates against a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(R)`; NaN when `R = 1`.
    pub se: f64,
    pub replicates: usize,
    pub prediction: f64,
    /// `mean / prediction`.
    pub ratio: f64,
}

impl RiskEstimate {
    fn from_values(values: &[f64], prediction: f64) -> Self {
        let (mean, se) = mean_se(values);
        Self {
            mean,
            se,
            replicates: values.len(),
            prediction,
            ratio: mean / prediction,
        }
    }

    /// `|mean - prediction| / se`.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.prediction).abs() / self.se
    }
}

pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / r;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Runs `f` once per replicate on its own stream; results come back in
/// replicate order whatever the thread schedule.
pub(crate) fn per_replicate<T: Send>(
    replicates: usize,
    seed: u64,
    f: impl Fn(RngStream) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| f(RngStream::new(seed, r as u64)))
        .collect()
}

/// Risk of the moving-region estimate: draws `n` points from the model
/// family, partitions them, and measures `D_f[m : m_true]` between the
/// equal-mass vector `m` and the true leaf masses. Prediction `p' / (2n)`.
pub fn one_sample_risk_moving(config: &ExperimentConfig) -> Result<RiskEstimate> {
    config.check()?;
    let values = per_replicate(config.replicates, config.seed, |stream| {
        let sample = config.model.sample(config.n, stream)?;
        let tree = build_moving_partition(&sample, &config.spec)?;
        let m_true = leaf_masses(&config.model, &tree, config.qmc_points)?;
        let d = f_divergence(&config.generator, &tree.model_pmf()?, &m_true)?;
        Ok((d, tree.free_param_count()))
    })?;
    let ds: Vec<f64> = values.iter().map(|v| v.0).collect();
    let p_prime = values.first().map_or(0, |v| v.1);
    Ok(RiskEstimate::from_values(&ds, p_prime as f64 / (2.0 * config.n as f64)))
}

/// Two-term expansion of the fixed-region risk,
/// `p'/(2n) + [4 f'''(1)(M - 3p' - 1) + 3 f''''(1)(M - 2p' - 1)] / (24 n^2)`
/// with `M = sum 1/m_i`.
pub fn fixed_risk_prediction(generator: &DivergenceGenerator<f64>, true_m: &MultinomialPmf<f64>, n: usize) -> Result<f64> {
    if true_m.probs().iter().any(|&p| p == 0.0) {
        return domain("fixed-region expansion needs every bin mass positive");
    }
    let p = (true_m.len() - 1) as f64;
    let big_m: f64 = compensated_sum(true_m.probs().iter().map(|q| 1.0 / q));
    let (d3, d4) = generator.third_fourth_at_one();
    let n = n as f64;
    Ok(p / (2.0 * n) + (4.0 * d3 * (big_m - 3.0 * p - 1.0) + 3.0 * d4 * (big_m - 2.0 * p - 1.0)) / (24.0 * n * n))
}

/// Risk of the fixed-region estimate from `R` multinomial draws of size
/// `n`, measured as `D_f[m : m_hat]`.
pub fn one_sample_risk_fixed(config: &ExperimentConfig, true_m: &MultinomialPmf<f64>) -> Result<RiskEstimate> {
    config.check()?;
    let prediction = fixed_risk_prediction(&config.generator, true_m, config.n)?;
    let n = config.n as u64;
    let probs = true_m.probs();
    let values = per_replicate(config.replicates, config.seed, |stream| {
        let mut rng = stream.rng();
        let mut left = n;
        let mut rest = 1.0;
        let mut hat = Vec::with_capacity(probs.len());
        for (i, &p) in probs.iter().enumerate() {
            let c = if i + 1 == probs.len() || left == 0 {
                left
            } else {
                let q = (p / rest).clamp(0.0, 1.0);
                Binomial::new(left, q)
                    .map_err(|e| Error::Domain(e.to_string()))?
                    .sample(&mut rng)
            };
            hat.push(c as f64 / n as f64);
            left -= c;
            rest -= p;
        }
        let hat = MultinomialPmf::new(hat)?;
        f_divergence(&config.generator, true_m, &hat)
    })?;
    Ok(RiskEstimate::from_values(&values, prediction))
}

/// Outcome of comparing `E D[m1 : m2]` (true masses under the realized
/// tree) with `E D[m1_hat : m2_hat] + sqrt(8 p'/n2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasBoundReport {
    pub replicates: usize,
    pub p_prime: usize,
    pub true_mean: f64,
    pub true_se: f64,
    pub estimate_mean: f64,
    pub estimate_se: f64,
    pub bias_n2: f64,
    /// Three standard errors of the difference.
    pub slack: f64,
    /// `estimate_mean + bias_n2 + slack - true_mean`.
    pub margin: f64,
    pub holds: bool,
    /// False when `R < 2`: no standard error exists and `holds` is not meaningful.
    pub sufficient_replicates: bool,
}

pub fn bias_bound_check(config: &ExperimentConfig) -> Result<BiasBoundReport> {
    config.check()?;
    let values = per_replicate(config.replicates, config.seed, |stream| {
        let model = config.model.sample(config.n2, stream.substream(0))?;
        let mother = config.mother.sample(config.n1, stream.substream(1))?;
        let tree = build_moving_partition(&model, &config.spec)?;
        let m1 = leaf_masses(&config.mother, &tree, config.qmc_points)?;
        let m2 = leaf_masses(&config.model, &tree, config.qmc_points)?;
        let truth = hellinger(&m1, &m2)?;
        let est = hellinger(&tree.count_into_bins(&mother)?.to_pmf()?, &tree.model_pmf()?)?;
        Ok((truth, est, tree.free_param_count()))
    })?;
    let truth: Vec<f64> = values.iter().map(|v| v.0).collect();
    let est: Vec<f64> = values.iter().map(|v| v.1).collect();
    let diff: Vec<f64> = values.iter().map(|v| v.1 - v.0).collect();
    let p_prime = values[0].2;
    let (true_mean, true_se) = mean_se(&truth);
    let (estimate_mean, estimate_se) = mean_se(&est);
    let (_, diff_se) = mean_se(&diff);
    let bias_n2 = (8.0 * p_prime as f64 / config.n2 as f64).sqrt();
    let sufficient = config.replicates >= 2;
    let slack = if sufficient { 3.0 * diff_se } else { 0.0 };
    let margin = estimate_mean + bias_n2 + slack - true_mean;
    Ok(BiasBoundReport {
        replicates: config.replicates,
        p_prime,
        true_mean,
        true_se,
        estimate_mean,
        estimate_se,
        bias_n2,
        slack,
        margin,
        holds: sufficient && margin >= 0.0,
        sufficient_replicates: sufficient,
    })
}

/// Log-log least-squares slope of mean risk against `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub ns: Vec<usize>,
    pub estimates: Vec<RiskEstimate>,
    pub slope: f64,
}

pub fn moving_risk_rate(config: &ExperimentConfig, ns: &[usize]) -> Result<RateCheck> {
    if ns.len() < 2 {
        return domain("rate check needs at least two sample sizes");
    }
    let estimates = ns
        .iter()
        .map(|&n| {
            let mut c = config.clone();
            c.n = n;
            one_sample_risk_moving(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RateCheck {
        ns: ns.to_vec(),
        estimates,
        slope: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_prediction_values() {
        let h = DivergenceGenerator::hellinger();
        let m = MultinomialPmf::uniform(4).unwrap();
        let p = fixed_risk_prediction(&h, &m, 100).unwrap();
        assert!((p - 0.0152719).abs() < 1e-7);
        assert!((p - (0.015 + 2.71875e-4)).abs() < 1e-15);
        let p = fixed_risk_prediction(&h, &m, 1000).unwrap();
        assert!((p - (0.0015 + 2.71875e-6)).abs() < 1e-15);
        let skew = MultinomialPmf::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let big_m = 1.0 / 0.7 + 30.0;
        let expect = 0.0015 + (4.0 * -1.5 * (big_m - 10.0) + 3.0 * 3.75 * (big_m - 7.0)) / 24e6;
        assert!((fixed_risk_prediction(&h, &skew, 1000).unwrap() - expect).abs() < 1e-15);
        let zero = MultinomialPmf::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(fixed_risk_prediction(&h, &zero, 10).is_err());
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(mean_se(&[1.0]).1.is_nan());
    }

    #[test]
    fn replicates_are_schedule_independent() {
        let cfg = ExperimentConfig::one_sample(Family::Uniform { k: 1 }, PartitionSpec::uniform(1, 4), 200, 16, 9);
        let a = one_sample_risk_moving(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| one_sample_risk_moving(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_replicate_is_flagged() {
        let cfg = ExperimentConfig::two_sample(
            Family::standard_normal(1),
            Family::standard_normal(1),
            PartitionSpec::uniform(1, 4),
            100,
            1000,
            1,
            1,
        );
        let r = bias_bound_check(&cfg).unwrap();
        assert!(!r.sufficient_replicates);
        assert!(!r.holds);
        let mut zero = cfg.clone();
        zero.replicates = 0;
        assert!(bias_bound_check(&zero).is_err());
    }

    #[test]
    fn uniform_masses_equal_spacings() {
        let data = Dataset::from_column(&[0.1, 0.3, 0.6, 0.9])
            .unwrap()
            .with_bounds(vec![(0.0, 1.0)])
            .unwrap();
        let tree = build_moving_partition(&data, &PartitionSpec::uniform(1, 2)).unwrap();
        let m = leaf_masses(&Family::Uniform { k: 1 }, &tree, 0).unwrap();
        assert!((m.probs()[0] - 0.3).abs() < 1e-15);
        assert!((m.probs()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn correlated_masses_agree_with_quasi_random() {
        let fam = Family::shifted_normal(3, 0.1, 0.5).unwrap();
        let sample = fam.sample(4000, RngStream::new(5, 0)).unwrap();
        let spec = PartitionSpec::uniform(2, 3);
        let tree = build_moving_partition(&sample, &spec).unwrap();
        let quad = leaf_masses(&fam, &tree, 0).unwrap();
        let Family::Gaussian { mean, cov } = &fam else { unreachable!() };
        let qmc = masses::qmc_masses(mean, cov, &tree, 1 << 18).unwrap();
        for (a, b) in quad.probs().iter().zip(qmc.probs()) {
            assert!((a - b).abs() < 2e-4, "{a} vs {b}");
        }
    }
}
