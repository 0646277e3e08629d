//! f-divergences between multinomial distributions.
//!
//! `D_f[m1 : m2] = sum_i m1_i f(m2_i / m1_i)` for a convex generator with
//! `f(1) = f'(1) = 0` and `f''(1) = 1`. The alpha family is built in, with
//! `alpha = 0` giving the Hellinger distance `2 sum (sqrt a - sqrt b)^2`,
//! `alpha = -1` the Kullback-Leibler divergence `KL(m1 || m2)` and
//! `alpha = 3` the chi-square divergence.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Probability vector over partition leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialPmf<T> {
    probs: Vec<T>,
}

impl<T: Real> MultinomialPmf<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return domain(format!("probability {i} is {} (must be finite and >= 0)", probs[i]));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - T::one()).abs() > T::mass_tolerance() {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        Self::new(vec![T::one() / T::from_count(len); len])
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

type GeneratorFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Convex generator `f` with its boundary behaviour.
#[derive(Clone)]
pub struct DivergenceGenerator<T> {
    label: String,
    func: GeneratorFn<T>,
    at_zero: T,
    slope_at_infinity: T,
    /// `(f'''(1), f''''(1))` when known in closed form.
    higher_derivs: Option<(T, T)>,
}

impl<T: Real> fmt::Debug for DivergenceGenerator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DivergenceGenerator")
            .field("label", &self.label)
            .field("at_zero", &self.at_zero)
            .field("slope_at_infinity", &self.slope_at_infinity)
            .finish()
    }
}

impl<T: Real> DivergenceGenerator<T> {
    /// Wraps a user generator after checking `f(1) = f'(1) = 0`, `f''(1) = 1`
    /// by central differences and spot-checking convexity on a log grid.
    pub fn new<F>(label: impl Into<String>, func: F, at_zero: T, slope_at_infinity: T) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        let g = Self {
            label: label.into(),
            func: Arc::new(func),
            at_zero,
            slope_at_infinity,
            higher_derivs: None,
        };
        g.check_normalisation()?;
        Ok(g)
    }

    fn check_normalisation(&self) -> Result<()> {
        let eps = T::epsilon();
        let h = eps.sqrt().sqrt();
        let tol = T::lit(1e-6).max(T::lit(10.0) * eps.sqrt());
        let one = T::one();
        let two = T::lit(2.0);
        let (fm, f0, fp) = (self.eval(one - h), self.eval(one), self.eval(one + h));
        let d1 = (fp - fm) / (two * h);
        let d2 = (fp - two * f0 + fm) / (h * h);
        if f0.abs() > tol || d1.abs() > tol || (d2 - one).abs() > tol {
            return domain(format!(
                "generator {:?} must satisfy f(1)=f'(1)=0, f''(1)=1 (got {f0}, {d1}, {d2})",
                self.label
            ));
        }
        let rel = T::lit(1e-3).max(eps.sqrt().sqrt());
        for i in -12..=12 {
            let x = T::lit(10f64.powf(i as f64 / 4.0));
            let dx = x * rel;
            let (a, b, c) = (self.eval(x - dx), self.eval(x), self.eval(x + dx));
            let second = a + c - two * b;
            if second < -tol * (T::one() + b.abs()) * rel {
                return domain(format!("generator {:?} is not convex near {x}", self.label));
            }
        }
        Ok(())
    }

    /// The alpha-divergence generator.
    pub fn alpha(alpha: T) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let label = format!("alpha:{alpha}");
        if alpha == T::zero() {
            return Self {
                label: "hellinger".into(),
                func: Arc::new(move |x: T| {
                    let d = one - x.sqrt();
                    two * d * d
                }),
                at_zero: two,
                slope_at_infinity: two,
                higher_derivs: Some((T::lit(-1.5), T::lit(3.75))),
            };
        }
        if alpha == one {
            return Self {
                label,
                func: Arc::new(move |x: T| x * x.ln() + one - x),
                at_zero: one,
                slope_at_infinity: T::infinity(),
                higher_derivs: Some((-one, two)),
            };
        }
        if alpha == -one {
            return Self {
                label,
                func: Arc::new(move |x: T| -x.ln() + x - one),
                at_zero: T::infinity(),
                slope_at_infinity: one,
                higher_derivs: Some((-two, T::lit(6.0))),
            };
        }
        let q = (one + alpha) / two;
        let c_pow = four / (one - alpha * alpha);
        let c_lin = two / (one - alpha);
        let at_zero = if alpha > -one { two / (one + alpha) } else { T::infinity() };
        let slope_at_infinity = if alpha < one { two / (one - alpha) } else { T::infinity() };
        // d^r/dx^r of -c_pow x^q at x = 1
        let falling = |r: usize| (0..r).fold(one, |acc, i| acc * (q - T::from_count(i)));
        let d3 = -c_pow * falling(3);
        let d4 = -c_pow * falling(4);
        Self {
            label,
            func: Arc::new(move |x: T| c_pow * (one - x.powf(q)) + c_lin * (x - one)),
            at_zero,
            slope_at_infinity,
            higher_derivs: Some((d3, d4)),
        }
    }

    pub fn hellinger() -> Self {
        Self::alpha(T::zero())
    }

    /// Looks up `hellinger`, `kl`, `reverse-kl`, `chi2` or `alpha:<value>`.
    pub fn by_name(name: &str) -> Result<Self> {
        let mut g = match name {
            "hellinger" => return Ok(Self::hellinger()),
            "kl" => Self::alpha(-T::one()),
            "reverse-kl" => Self::alpha(T::one()),
            "chi2" => Self::alpha(T::lit(3.0)),
            other => match other.strip_prefix("alpha:").map(str::parse::<T>) {
                Some(Ok(a)) if a.is_finite() => return Ok(Self::alpha(a)),
                _ => return domain(format!("unknown generator {other:?}")),
            },
        };
        g.label = name.to_string();
        Ok(g)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `f(x)` for `x >= 0`, with `f(0)` taken from the boundary value.
    #[inline]
    pub fn eval(&self, x: T) -> T {
        if x == T::zero() {
            self.at_zero
        } else {
            (self.func)(x)
        }
    }

    pub fn at_zero(&self) -> T {
        self.at_zero
    }

    pub fn slope_at_infinity(&self) -> T {
        self.slope_at_infinity
    }

    /// `(f'''(1), f''''(1))`, in closed form for the alpha family and its
    /// duals, otherwise by five-point finite differences.
    pub fn third_fourth_at_one(&self) -> (T, T) {
        if let Some(d) = self.higher_derivs {
            return d;
        }
        let h = T::lit(2e-2).max(T::epsilon().powf(T::lit(1.0 / 6.0)));
        let one = T::one();
        let two = T::lit(2.0);
        let f = |k: f64| self.eval(one + T::lit(k) * h);
        let d3 = (f(2.0) - two * f(1.0) + two * f(-1.0) - f(-2.0)) / (two * h * h * h);
        let d4 = (f(2.0) - T::lit(4.0) * f(1.0) + T::lit(6.0) * f(0.0) - T::lit(4.0) * f(-1.0) + f(-2.0))
            / (h * h * h * h);
        (d3, d4)
    }
}

/// The dual generator `x f(1/x)`, for which `D_{f*}[a : b] = D_f[b : a]`.
pub fn dual_generator<T: Real>(f: &DivergenceGenerator<T>) -> DivergenceGenerator<T> {
    let inner = f.clone();
    let higher_derivs = f.higher_derivs.map(|(a, b)| {
        (
            -T::lit(3.0) - a,
            T::lit(12.0) + T::lit(8.0) * a + b,
        )
    });
    DivergenceGenerator {
        label: format!("dual({})", f.label),
        func: Arc::new(move |x: T| x * inner.eval(T::one() / x)),
        at_zero: f.slope_at_infinity,
        slope_at_infinity: f.at_zero,
        higher_derivs,
    }
}

pub fn alpha_generator<T: Real>(alpha: T) -> DivergenceGenerator<T> {
    DivergenceGenerator::alpha(alpha)
}

fn check_lengths<T>(m1: &MultinomialPmf<T>, m2: &MultinomialPmf<T>) -> Result<()> {
    if m1.probs.len() != m2.probs.len() {
        return domain(format!(
            "distributions have different lengths ({} vs {})",
            m1.probs.len(),
            m2.probs.len()
        ));
    }
    Ok(())
}

/// `sum_i m1_i f(m2_i / m1_i)` with the limit conventions for empty bins:
/// `m1_i = 0` contributes `m2_i * lim f(t)/t`, `m2_i = 0` contributes
/// `m1_i * f(0)`.
pub fn f_divergence<T: Real>(
    f: &DivergenceGenerator<T>,
    m1: &MultinomialPmf<T>,
    m2: &MultinomialPmf<T>,
) -> Result<T> {
    check_lengths(m1, m2)?;
    let terms = m1.probs.iter().zip(&m2.probs).map(|(&a, &b)| {
        if a == T::zero() {
            if b == T::zero() {
                T::zero()
            } else {
                b * f.slope_at_infinity
            }
        } else if b == T::zero() {
            a * f.at_zero
        } else {
            a * f.eval(b / a)
        }
    });
    Ok(compensated_sum(terms))
}

/// Hellinger distance `2 sum (sqrt m1_i - sqrt m2_i)^2`, in `[0, 4]`.
pub fn hellinger<T: Real>(m1: &MultinomialPmf<T>, m2: &MultinomialPmf<T>) -> Result<T> {
    check_lengths(m1, m2)?;
    let s = compensated_sum(m1.probs.iter().zip(&m2.probs).map(|(&a, &b)| {
        let d = a.sqrt() - b.sqrt();
        d * d
    }));
    Ok(T::lit(2.0) * s)
}

/// `(D_alpha[m1 : m2] + D_{-alpha}[m1 : m2]) / 2`, symmetric in its arguments.
pub fn symmetrized_alpha<T: Real>(alpha: T, m1: &MultinomialPmf<T>, m2: &MultinomialPmf<T>) -> Result<T> {
    let forward = f_divergence(&DivergenceGenerator::alpha(alpha), m1, m2)?;
    let backward = f_divergence(&DivergenceGenerator::alpha(-alpha), m1, m2)?;
    Ok((forward + backward) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha_generator(a: f64) -> DivergenceGenerator<f64> {
        super::alpha_generator(a)
    }

    fn pmf(p: &[f64]) -> MultinomialPmf<f64> {
        MultinomialPmf::new(p.to_vec()).unwrap()
    }

    #[test]
    fn alpha_branches() {
        let h = alpha_generator(0.0);
        assert_eq!(h.eval(4.0), 2.0);
        assert_eq!(h.at_zero(), 2.0);
        assert_eq!(alpha_generator(1.0).eval(1.0), 0.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(alpha_generator(-1.0).eval(e), e - 2.0, epsilon = 1e-15);
        assert_relative_eq!(alpha_generator(-1.0).eval(e), 0.71828, epsilon = 1e-5);
        let chi2 = alpha_generator(3.0);
        assert_relative_eq!(chi2.eval(2.5), 0.5 * 1.5 * 1.5, epsilon = 1e-14);
        assert_eq!(chi2.at_zero(), 0.5);
        assert!(chi2.slope_at_infinity().is_infinite());
        assert!(alpha_generator(-1.0).at_zero().is_infinite());
        assert!(alpha_generator(-2.0).at_zero().is_infinite());
        assert_eq!(alpha_generator(0.5).at_zero(), 2.0 / 1.5);
    }

    #[test]
    fn generic_branch_normalised() {
        for &a in &[-3.0, -0.5, 0.5, 2.0, 3.0] {
            let g = alpha_generator(a);
            let f = g.func.clone();
            DivergenceGenerator::new("copy", move |x| f(x), g.at_zero(), g.slope_at_infinity()).unwrap();
        }
    }

    #[test]
    fn user_generator_checks() {
        assert!(DivergenceGenerator::new("tv-ish", |x: f64| (x - 1.0).abs(), 1.0, 1.0).is_err());
        assert!(DivergenceGenerator::new("scaled", |x: f64| (x - 1.0) * (x - 1.0), 1.0, f64::INFINITY).is_err());
        assert!(DivergenceGenerator::new("quadratic", |x: f64| 0.5 * (x - 1.0).powi(2), 0.5, f64::INFINITY).is_ok());
        assert!(DivergenceGenerator::new(
            "wiggly",
            |x: f64| 0.5 * (x - 1.0).powi(2) - 5.0 * (x - 1.0).powi(3) * (-(x - 3.0).powi(2)).exp(),
            0.5,
            f64::INFINITY
        )
        .is_err());
    }

    #[test]
    fn f32_generators_validate() {
        let f = |x: f32| 2.0 * (1.0 - x.sqrt()).powi(2);
        assert!(DivergenceGenerator::<f32>::new("h32", f, 2.0, 2.0).is_ok());
    }

    #[test]
    fn duals() {
        let d = dual_generator(&alpha_generator(1.0));
        assert_relative_eq!(d.eval(0.5), -(0.5f64.ln()) - 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.eval(0.5), 0.19315, epsilon = 1e-5);
        let h = alpha_generator(0.0);
        let hd = dual_generator(&h);
        let chi = alpha_generator(3.0);
        let chi_dd = dual_generator(&dual_generator(&chi));
        for i in 1..200 {
            let x = i as f64 * 0.05;
            assert!((hd.eval(x) - h.eval(x)).abs() < 1e-12);
            assert!((chi_dd.eval(x) - chi.eval(x)).abs() < 1e-12 * (1.0 + chi.eval(x)));
        }
        assert_eq!(hd.at_zero(), 2.0);
        assert!(dual_generator(&alpha_generator(-1.0)).slope_at_infinity().is_infinite());
    }

    #[test]
    fn higher_derivatives_match_finite_differences() {
        for &a in &[-2.0, -1.0, -0.3, 0.0, 0.7, 1.0, 3.0] {
            let g = alpha_generator(a);
            let f = g.func.clone();
            let raw = DivergenceGenerator::new("raw", move |x| f(x), g.at_zero(), g.slope_at_infinity()).unwrap();
            let (c3, c4) = g.third_fourth_at_one();
            let (n3, n4) = raw.third_fourth_at_one();
            assert!((c3 - n3).abs() < 1e-2 * (1.0 + c3.abs()), "alpha {a}: {c3} vs {n3}");
            assert!((c4 - n4).abs() < 5e-2 * (1.0 + c4.abs()), "alpha {a}: {c4} vs {n4}");
            let (d3, d4) = dual_generator(&g).third_fourth_at_one();
            let (e3, e4) = alpha_generator(-a).third_fourth_at_one();
            assert!((d3 - e3).abs() < 1e-12 && (d4 - e4).abs() < 1e-12, "dual of alpha {a}");
        }
        assert_eq!(alpha_generator(0.0).third_fourth_at_one(), (-1.5, 3.75));
    }

    #[test]
    fn kl_example() {
        let m1 = pmf(&[0.5, 0.5]);
        let m2 = pmf(&[0.25, 0.75]);
        let kl = f_divergence(&alpha_generator(-1.0), &m1, &m2).unwrap();
        let direct = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert_relative_eq!(kl, direct, epsilon = 1e-15);
        assert_relative_eq!(kl, 0.14384, epsilon = 1e-5);
    }

    #[test]
    fn boundary_conventions() {
        let a = pmf(&[1.0, 0.0]);
        let b = pmf(&[0.0, 1.0]);
        assert!(f_divergence(&alpha_generator(-1.0), &a, &b).unwrap().is_infinite());
        assert_eq!(f_divergence(&alpha_generator(0.0), &a, &b).unwrap(), 4.0);
        assert_eq!(hellinger(&a, &b).unwrap(), 4.0);
        let c = pmf(&[0.5, 0.5, 0.0]);
        let d = pmf(&[0.5, 0.25, 0.25]);
        // m1 = 0 bin: 0.25 * slope(=2); m2 = 0 bin absent
        let expect = 0.5 * alpha_generator(0.0).eval(0.5) + 0.25 * 2.0;
        assert_relative_eq!(f_divergence(&alpha_generator(0.0), &c, &d).unwrap(), expect, epsilon = 1e-15);
        assert!(f_divergence(&alpha_generator(0.0), &a, &c).is_err());
    }

    #[test]
    fn hellinger_examples() {
        let m1 = pmf(&[0.5, 0.5]);
        let m2 = pmf(&[0.25, 0.75]);
        assert_eq!(hellinger(&m1, &m1).unwrap(), 0.0);
        let h = hellinger(&m1, &m2).unwrap();
        assert_relative_eq!(h, 0.13629, epsilon = 1e-5);
        let via_f = f_divergence(&alpha_generator(0.0), &m1, &m2).unwrap();
        assert!((h - via_f).abs() < 1e-12);
    }

    #[test]
    fn symmetrized_examples() {
        let m1 = pmf(&[0.5, 0.5]);
        let m2 = pmf(&[0.25, 0.75]);
        assert!((symmetrized_alpha(0.0, &m1, &m2).unwrap() - hellinger(&m1, &m2).unwrap()).abs() < 1e-15);
        let s = symmetrized_alpha(1.0, &m1, &m2).unwrap();
        let kl12 = 0.5 * (2.0f64).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let kl21 = 0.25 * (0.5f64).ln() + 0.75 * (1.5f64).ln();
        assert_relative_eq!(s, 0.5 * (kl12 + kl21), epsilon = 1e-15);
        assert_relative_eq!(s, 0.13733, epsilon = 1e-5);
        assert!((s - symmetrized_alpha(1.0, &m2, &m1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn alpha_limits_are_continuous() {
        for &(a, b) in &[(1.0 - 1e-4, 1.0), (-1.0 + 1e-4, -1.0)] {
            let near = alpha_generator(a);
            let exact = alpha_generator(b);
            // the gap grows like x (log x)^2, so the grid stops at x = 4
            for i in 1..=40 {
                let x = 0.1 * i as f64;
                assert!((near.eval(x) - exact.eval(x)).abs() < 1e-4, "alpha {a} x {x}");
            }
        }
    }

    #[test]
    fn pmf_validation() {
        assert!(MultinomialPmf::new(vec![0.5, 0.4]).is_err());
        assert!(MultinomialPmf::new(vec![1.5, -0.5]).is_err());
        assert!(MultinomialPmf::<f64>::new(vec![]).is_err());
        assert!(MultinomialPmf::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert_eq!(MultinomialPmf::<f32>::uniform(4).unwrap().probs(), &[0.25; 4]);
    }

    #[test]
    fn names() {
        assert_eq!(DivergenceGenerator::<f64>::by_name("hellinger").unwrap().at_zero(), 2.0);
        assert!(DivergenceGenerator::<f64>::by_name("kl").unwrap().at_zero().is_infinite());
        assert_eq!(DivergenceGenerator::<f64>::by_name("reverse-kl").unwrap().at_zero(), 1.0);
        assert_eq!(DivergenceGenerator::<f64>::by_name("chi2").unwrap().eval(3.0), 2.0);
        assert_eq!(DivergenceGenerator::<f64>::by_name("alpha:0.5").unwrap().label(), "alpha:0.5");
        assert!(DivergenceGenerator::<f64>::by_name("alpha:x").is_err());
        assert!(DivergenceGenerator::<f64>::by_name("tv").is_err());
    }
}
