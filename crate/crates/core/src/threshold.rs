//! Divergence thresholds and Bayes error rate bounds.
//!
//! If two densities are within `delta` in f-divergence, the Bayes error rate
//! of discriminating them is at least
//! `alpha(delta) = min(1 / (2 Delta*(delta)), inf { t : (x, t) in A(delta) })`.
//! For the Hellinger distance this is approximately `(1 - sqrt(delta / 2)) / 2`,
//! which gives the threshold `delta* = 8 eps^2` for a Bayes error of `1/2 - eps`.

use serde::Serialize;

use crate::divergence::DivergenceGenerator;
use crate::error::{domain, Error, Result};
use crate::roots::{bisect, golden_max};
use crate::scalar::Real;

/// Numerical settings for the threshold solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub root_tol: f64,
    pub grid_size: usize,
    pub max_bisect: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            grid_size: 2048,
            max_bisect: 128,
        }
    }
}

impl SolverOptions {
    fn tol<T: Real>(&self, scale: T) -> T {
        T::lit(self.root_tol).max(T::lit(4.0) * T::epsilon() * scale.abs().max(T::one()))
    }
}

/// Checks `0 < epsilon < 1/2`.
pub fn check_epsilon<T: Real>(epsilon: T) -> Result<T> {
    if epsilon > T::zero() && epsilon < T::lit(0.5) {
        Ok(epsilon)
    } else {
        domain(format!("epsilon must be in (0, 0.5), got {epsilon}"))
    }
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta > T::zero() && delta.is_finite() {
        Ok(())
    } else {
        domain(format!("delta must be positive and finite, got {delta}"))
    }
}

/// Target Bayes-error slack together with the divergence in use.
#[derive(Debug, Clone)]
pub struct ThresholdConfig<T: Real> {
    pub epsilon: T,
    pub generator: DivergenceGenerator<T>,
    pub solver: SolverOptions,
}

impl<T: Real> ThresholdConfig<T> {
    pub fn new(epsilon: T, generator: DivergenceGenerator<T>) -> Result<Self> {
        Ok(Self {
            epsilon: check_epsilon(epsilon)?,
            generator,
            solver: SolverOptions::default(),
        })
    }

    /// Largest `delta` with `alpha(delta) >= 1/2 - epsilon`, solved numerically.
    pub fn delta_star(&self) -> Result<T> {
        delta_for_epsilon(&self.generator, self.epsilon, &self.solver)
    }
}

/// Solution `Delta >= 1` of `f(Delta) / Delta + (1 - 1/Delta) f(0) = delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapitalDeltaStar<T> {
    pub value: T,
    /// False when `f(0)` is infinite: the equation has no solution and the
    /// `1 / (2 Delta*)` branch is reported as 1/2, so it never binds.
    pub feasible: bool,
}

pub fn capital_delta_star<T: Real>(f: &DivergenceGenerator<T>, delta: T) -> Result<CapitalDeltaStar<T>> {
    capital_delta_star_with(f, delta, &SolverOptions::default())
}

pub fn capital_delta_star_with<T: Real>(
    f: &DivergenceGenerator<T>,
    delta: T,
    opts: &SolverOptions,
) -> Result<CapitalDeltaStar<T>> {
    check_delta(delta)?;
    let f0 = f.at_zero();
    if f0.is_infinite() {
        return Ok(CapitalDeltaStar {
            value: T::one(),
            feasible: false,
        });
    }
    let one = T::one();
    let g = |d: T| f.eval(d) / d + (one - one / d) * f0 - delta;
    // the left side increases to slope_at_infinity + f(0)
    if f.slope_at_infinity() + f0 <= delta {
        return Ok(CapitalDeltaStar {
            value: T::infinity(),
            feasible: true,
        });
    }
    let mut hi = T::lit(2.0);
    while g(hi) <= T::zero() {
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::Bracket {
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
    }
    let lo = hi / T::lit(2.0);
    let lo = if lo < T::lit(2.0) { one } else { lo };
    let value = bisect(g, lo, hi, opts.tol(hi), 4 * opts.max_bisect)?;
    Ok(CapitalDeltaStar { value, feasible: true })
}

/// `inf { t : (x, t) in A(delta) }`, or 1/2 when `A(delta)` is empty.
///
/// With `u = 1 - 2t`, membership reads
/// `h_x(u) = x f(1 + u/x) + (1 - x) f(1 - u/(1 - x)) = delta` for
/// `0 <= u <= 1 - x`. `h_x` is convex with `h_x(0) = h_x'(0) = 0`, so each `x`
/// has at most one root and the infimum maximises that root over `x`.
pub fn a_set_infimum<T: Real>(f: &DivergenceGenerator<T>, delta: T) -> Result<T> {
    a_set_infimum_with(f, delta, &SolverOptions::default())
}

pub fn a_set_infimum_with<T: Real>(f: &DivergenceGenerator<T>, delta: T, opts: &SolverOptions) -> Result<T> {
    check_delta(delta)?;
    let one = T::one();
    let root = |x: T| -> Option<T> {
        let y = one - x;
        let h = |u: T| x * f.eval(one + u / x) + y * f.eval((one - u / y).max(T::zero())) - delta;
        if h(y) < T::zero() {
            return None;
        }
        bisect(h, T::zero(), y, opts.tol(one), opts.max_bisect).ok()
    };
    let n = opts.grid_size.max(16);
    let span = T::lit(14.0);
    let grid: Vec<T> = (0..n)
        .map(|i| {
            let z = -span + T::lit(2.0) * span * T::from_count(i) / T::from_count(n - 1);
            one / (one + (-z).exp())
        })
        .collect();
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in grid.iter().enumerate() {
        if let Some(u) = root(x) {
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((i, u));
            }
        }
    }
    let Some((i, mut u_best)) = best else {
        return Ok(T::lit(0.5));
    };
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(n - 1)];
    let (_, u_ref) = golden_max(|x| root(x).unwrap_or(-one), lo, hi, 80);
    if u_ref > u_best {
        u_best = u_ref;
    }
    Ok((one - u_best) / T::lit(2.0))
}

/// Both branches of the Bayes error lower bound and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaOfDelta<T> {
    pub alpha: T,
    pub capital_delta_star: CapitalDeltaStar<T>,
    /// `1 / (2 Delta*)`, or 1/2 on the infeasible branch.
    pub delta_branch: T,
    pub a_set_branch: T,
}

pub fn alpha_of_delta<T: Real>(f: &DivergenceGenerator<T>, delta: T) -> Result<AlphaOfDelta<T>> {
    alpha_of_delta_with(f, delta, &SolverOptions::default())
}

pub fn alpha_of_delta_with<T: Real>(
    f: &DivergenceGenerator<T>,
    delta: T,
    opts: &SolverOptions,
) -> Result<AlphaOfDelta<T>> {
    let cds = capital_delta_star_with(f, delta, opts)?;
    let half = T::lit(0.5);
    let delta_branch = if cds.feasible { half / cds.value } else { half };
    let a_set_branch = a_set_infimum_with(f, delta, opts)?;
    Ok(AlphaOfDelta {
        alpha: delta_branch.min(a_set_branch),
        capital_delta_star: cds,
        delta_branch,
        a_set_branch,
    })
}

/// `8 eps^2`.
pub fn delta_star_hellinger<T: Real>(epsilon: T) -> Result<T> {
    let e = check_epsilon(epsilon)?;
    Ok(T::lit(8.0) * e * e)
}

/// `(1 - sqrt(delta / 2)) / 2`, valid for `0 < delta <= 1/2`.
pub fn hellinger_alpha_approx<T: Real>(delta: T) -> Result<T> {
    if !(delta > T::zero() && delta <= T::lit(0.5)) {
        return domain(format!("approximation needs 0 < delta <= 0.5, got {delta}"));
    }
    Ok((T::one() - (delta / T::lit(2.0)).sqrt()) / T::lit(2.0))
}

/// Closed form `1 / (1 - delta/4)^2` for the Hellinger generator.
pub fn hellinger_capital_delta_star<T: Real>(delta: T) -> Result<T> {
    check_delta(delta)?;
    let c = T::one() - delta / T::lit(4.0);
    if c <= T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::one() / (c * c))
}

/// Largest `delta` whose Bayes error bound is still at least `1/2 - epsilon`.
pub fn delta_for_epsilon<T: Real>(f: &DivergenceGenerator<T>, epsilon: T, opts: &SolverOptions) -> Result<T> {
    let eps = check_epsilon(epsilon)?;
    let target = T::lit(0.5) - eps;
    let gap = |d: T| match alpha_of_delta_with(f, d, opts) {
        Ok(a) => a.alpha - target,
        Err(_) => T::nan(),
    };
    let mut hi = T::lit(1e-3);
    while gap(hi) > T::zero() {
        hi = hi * T::lit(2.0);
        if hi > T::lit(1e6) {
            return Err(Error::Bracket { lo: 0.0, hi: 1e6 });
        }
    }
    let mut lo = hi / T::lit(2.0);
    while gap(lo) <= T::zero() {
        lo = lo / T::lit(2.0);
        if lo < T::lit(1e-30) {
            return Err(Error::Bracket { lo: 0.0, hi: hi.as_f64() });
        }
    }
    bisect(gap, lo, hi, T::lit(1e-9).max(T::epsilon().sqrt()), 200)
}
