//! True leaf probabilities of built-in distributions under a realized tree.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::cholesky_lower;
use crate::divergence::MultinomialPmf;
use crate::error::{domain, Result};
use crate::partition::{Leaf, PartitionTree};

use super::Family;

/// Quasi-random points used when no quadrature applies.
pub const DEFAULT_QMC_POINTS: usize = 1 << 20;

fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        1.0
    } else if z == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
    }
}

fn std_normal_quantile(u: f64) -> f64 {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal"))
        .inverse_cdf(u)
}

fn gauss_legendre() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(32).expect("nonzero")))
}

/// `(lo, hi]` per constrained axis of a leaf, axes ascending.
fn leaf_box(leaf: &Leaf<f64>) -> Vec<(usize, f64, f64)> {
    let mut b: Vec<(usize, f64, f64)> = leaf.intervals.iter().map(|iv| (iv.axis, iv.lo, iv.hi)).collect();
    b.sort_by_key(|x| x.0);
    b
}

/// Leaf masses of `family` under `tree`.
///
/// Uniform cubes and axis-independent Gaussians are exact products of 1-d
/// masses; leaves that constrain two correlated Gaussian axes use
/// conditional Gauss-Legendre quadrature; anything else falls back to a
/// Halton quasi-Monte Carlo estimate with `qmc_points` points.
pub fn leaf_masses(family: &Family, tree: &PartitionTree<f64>, qmc_points: usize) -> Result<MultinomialPmf<f64>> {
    if tree.dim() != family.dim() {
        return domain(format!(
            "tree has dimension {} but the distribution has {}",
            tree.dim(),
            family.dim()
        ));
    }
    let probs = match family {
        Family::Uniform { .. } => tree
            .leaves()
            .iter()
            .map(|leaf| {
                leaf.intervals
                    .iter()
                    .map(|iv| (iv.hi.min(1.0) - iv.lo.max(0.0)).max(0.0))
                    .product()
            })
            .collect(),
        Family::Gaussian { mean, cov } => {
            let axes = tree.split_axes();
            let independent = axes
                .iter()
                .all(|&i| axes.iter().all(|&j| i == j || cov[(i, j)] == 0.0));
            if independent {
                tree.leaves()
                    .iter()
                    .map(|leaf| {
                        leaf_box(leaf)
                            .into_iter()
                            .map(|(a, lo, hi)| {
                                let s = cov[(a, a)].sqrt();
                                std_normal_cdf((hi - mean[a]) / s) - std_normal_cdf((lo - mean[a]) / s)
                            })
                            .product()
                    })
                    .collect()
            } else if axes.len() == 2 {
                tree.leaves()
                    .iter()
                    .map(|leaf| {
                        let b = leaf_box(leaf);
                        bivariate_rectangle(mean, cov, b[0], b[1])
                    })
                    .collect()
            } else {
                return qmc_masses(mean, cov, tree, qmc_points);
            }
        }
    };
    normalise(probs)
}

fn normalise(mut probs: Vec<f64>) -> Result<MultinomialPmf<f64>> {
    for p in probs.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = crate::scalar::compensated_sum(probs.iter().copied());
    for p in probs.iter_mut() {
        *p /= total;
    }
    MultinomialPmf::new(probs)
}

/// `P(lo1 < X_a <= hi1, lo2 < X_b <= hi2)` for a Gaussian pair, integrating
/// the conditional law of `X_b` against the density of standardized `X_a`.
pub fn bivariate_rectangle(
    mean: &[f64],
    cov: &DMatrix<f64>,
    (a, lo1, hi1): (usize, f64, f64),
    (b, lo2, hi2): (usize, f64, f64),
) -> f64 {
    // the standard normal density is below 1e-40 beyond this
    const Z_MAX: f64 = 13.5;
    const PANELS: usize = 48;
    let (sa, sb) = (cov[(a, a)].sqrt(), cov[(b, b)].sqrt());
    let rho = cov[(a, b)] / (sa * sb);
    let cond_sd = sb * (1.0 - rho * rho).sqrt();
    let z_lo = ((lo1 - mean[a]) / sa).max(-Z_MAX);
    let z_hi = ((hi1 - mean[a]) / sa).min(Z_MAX);
    if z_hi <= z_lo {
        return 0.0;
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |z: f64| {
        let centre = mean[b] + rho * sb * z;
        let band = std_normal_cdf((hi2 - centre) / cond_sd) - std_normal_cdf((lo2 - centre) / cond_sd);
        norm * (-0.5 * z * z).exp() * band
    };
    let gl = gauss_legendre();
    let w = (z_hi - z_lo) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = z_lo + w * i as f64;
            gl.integrate(lo, lo + w, integrand)
        })
        .sum()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

pub(crate) fn qmc_masses(mean: &[f64], cov: &DMatrix<f64>, tree: &PartitionTree<f64>, points: usize) -> Result<MultinomialPmf<f64>> {
    let k = mean.len();
    if k > PRIMES.len() {
        return domain(format!("quasi-random masses support at most {} dimensions", PRIMES.len()));
    }
    let l = cholesky_lower(cov)?;
    let mut counts = vec![0u64; tree.leaf_count()];
    let mut z = vec![0.0; k];
    let mut x = vec![0.0; k];
    // skip the first points, which cluster near the origin of the cube
    for i in 1..=points as u64 {
        let idx = i + 1000;
        for (d, zd) in z.iter_mut().enumerate() {
            *zd = std_normal_quantile(radical_inverse(idx, PRIMES[d]));
        }
        for r in 0..k {
            x[r] = mean[r] + (0..=r).map(|c| l[(r, c)] * z[c]).sum::<f64>();
        }
        counts[tree.locate(&x)] += 1;
    }
    normalise(counts.into_iter().map(|c| c as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_independent_matches_product() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let m = [0.5, -1.0];
        let p = bivariate_rectangle(&m, &cov, (0, -0.3, 1.2), (1, f64::NEG_INFINITY, 0.0));
        let pa = std_normal_cdf(0.7) - std_normal_cdf(-0.8);
        let pb = std_normal_cdf(0.5);
        assert!((p - pa * pb).abs() < 1e-14);
    }

    #[test]
    fn bivariate_orthant() {
        // P(X > 0, Y > 0) = 1/4 + asin(rho) / (2 pi)
        let rho: f64 = 0.6;
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let p = bivariate_rectangle(&[0.0, 0.0], &cov, (0, 0.0, f64::INFINITY), (1, 0.0, f64::INFINITY));
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        assert!((p - exact).abs() < 1e-13, "{p} vs {exact}");
    }

    #[test]
    fn halton_points() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }
}
