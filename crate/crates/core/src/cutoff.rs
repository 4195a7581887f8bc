//! Scalar cutoff machinery: the normal-window function `psi`, moments of
//! `log X`, cutoff times and windows, the Lindeberg and truncated-moment
//! checkers, and the Bayer–Diaconis style asymptotic evaluators.
//!
//! All logarithms are natural. Condition checkers return finite-`n` values;
//! trends across `n` are for the caller to read.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::combinatorics::factorial;
use crate::error::{Result, RiffleError};
use crate::numeric::{fmt_sig17, ln_biguint, ln_ratio, ratio_to_f64, CompensatedSum};
use crate::shuffle_laws::{q_nm, PackDistribution};

/// Standard normal mass of `[-x/(4 sqrt 3), x/(4 sqrt 3)]`.
///
/// Evaluated as `erf(x / (4 sqrt 6))` with the FreeBSD-derived `erf` from
/// `libm`, whose error is below one ulp; `psi(inf) = 1`.
pub fn psi(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(RiffleError::Domain(format!("psi requires x >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(libm::erf(x / (4.0 * 6f64.sqrt())))
}

/// Mean and standard deviation of `log X` in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMoments {
    pub mu: f64,
    pub sigma: f64,
}

impl LogMoments {
    /// `p` is the point mass at 1.
    pub fn no_mixing(&self) -> bool {
        self.mu == 0.0
    }

    /// `p` is a point mass.
    pub fn degenerate(&self) -> bool {
        self.sigma == 0.0
    }

    /// `E[(log X)^2]`.
    pub fn second_moment(&self) -> f64 {
        self.sigma * self.sigma + self.mu * self.mu
    }
}

/// `(log m, p(m))` pairs of a pack distribution.
fn log_atoms(p: &PackDistribution) -> Vec<(f64, f64)> {
    p.atoms()
        .iter()
        .map(|(m, w)| ((*m as f64).ln(), w.to_f64()))
        .collect()
}

/// Two-pass moments over `(log value, probability)` pairs.
pub fn log_moments_of(atoms: &[(f64, f64)]) -> LogMoments {
    let mu = atoms
        .iter()
        .map(|(l, w)| l * w)
        .collect::<CompensatedSum>()
        .value();
    let var = atoms
        .iter()
        .map(|(l, w)| (l - mu) * (l - mu) * w)
        .collect::<CompensatedSum>()
        .value();
    LogMoments {
        mu,
        sigma: var.max(0.0).sqrt(),
    }
}

/// `mu = E log X`, `sigma = sqrt Var(log X)`.
pub fn log_moments(p: &PackDistribution) -> LogMoments {
    log_moments_of(&log_atoms(p))
}

/// Second-largest eigenvalue `beta = sum p(m)/m` and the relaxation time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralGap {
    pub beta: BigRational,
    /// `(1 - beta)^{-1}`; `None` when `beta = 1` (no mixing).
    pub relaxation: Option<BigRational>,
}

pub fn second_eigenvalue(p: &PackDistribution) -> SpectralGap {
    let beta: BigRational = p
        .atoms()
        .iter()
        .map(|(m, w)| w.as_ratio() / BigRational::from_integer(BigInt::from(*m)))
        .sum();
    let gap = BigRational::one() - &beta;
    let relaxation = (!gap.is_zero()).then(|| gap.recip());
    SpectralGap { beta, relaxation }
}

fn require_mixing(m: &LogMoments) -> Result<()> {
    if m.no_mixing() {
        Err(RiffleError::NoMixing)
    } else {
        Ok(())
    }
}

/// Above- and below-threshold parts of `E[xi^2]` at threshold
/// `eps * log n / mu`, where `xi = (log X - mu) / sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindebergSplit {
    pub above: f64,
    pub below: f64,
}

pub fn lindeberg_split(p: &PackDistribution, n: u64, eps: f64) -> Result<LindebergSplit> {
    let atoms = log_atoms(p);
    let mom = log_moments_of(&atoms);
    require_mixing(&mom)?;
    if mom.degenerate() {
        return Err(RiffleError::Degenerate(
            "Lindeberg value needs sigma > 0".into(),
        ));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(RiffleError::Domain("eps must be positive".into()));
    }
    let threshold = eps * (n as f64).ln() / mom.mu;
    let mut above = CompensatedSum::new();
    let mut below = CompensatedSum::new();
    for (l, w) in atoms {
        let xi = (l - mom.mu) / mom.sigma;
        let term = xi * xi * w;
        if xi * xi > threshold {
            above.add(term);
        } else {
            below.add(term);
        }
    }
    Ok(LindebergSplit {
        above: above.value(),
        below: below.value(),
    })
}

/// `E[xi^2 1{xi^2 > eps log n / mu}]`.
pub fn lindeberg_value(p: &PackDistribution, n: u64, eps: f64) -> Result<f64> {
    Ok(lindeberg_split(p, n, eps)?.above)
}

/// Epsilons tabulated in [`CutoffReport::lindeberg`].
pub const LINDEBERG_EPS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Discrete-time cutoff parameters for a `p`-shuffle on `n` cards.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffReport {
    pub n: u64,
    pub mu: f64,
    pub sigma: f64,
    /// `3 log n / (2 mu)`, in steps.
    pub t_n: f64,
    /// `(1/mu) max{1, sqrt(sigma^2 log n / mu)}`; `1/mu` when `sigma = 0`.
    pub b_n: f64,
    /// `1/mu`, the window for point masses.
    pub window_inverse_mu: f64,
    /// Unit window, reported for point masses alongside `1/mu`.
    pub window_unit: Option<f64>,
    /// `(eps, E[xi^2 1{xi^2 > eps log n / mu}])`; empty when `sigma = 0`.
    pub lindeberg: Vec<(f64, f64)>,
    pub spectral: SpectralGap,
    /// `{t_n}` and `d(t_n) mu`.
    pub brace_t_n: f64,
    pub d_t_n_mu: f64,
    /// `mu / log n`.
    pub hyp1: f64,
}

pub fn cutoff_report(p: &PackDistribution, n: u64) -> Result<CutoffReport> {
    if n < 2 {
        return Err(RiffleError::Domain("cutoff report needs n >= 2".into()));
    }
    let mom = log_moments(p);
    require_mixing(&mom)?;
    let log_n = (n as f64).ln();
    let t_n = 3.0 * log_n / (2.0 * mom.mu);
    let window_inverse_mu = 1.0 / mom.mu;
    let (b_n, window_unit, lindeberg) = if mom.degenerate() {
        (window_inverse_mu, Some(1.0), Vec::new())
    } else {
        let b = window_inverse_mu * (mom.sigma * mom.sigma * log_n / mom.mu).sqrt().max(1.0);
        let table = LINDEBERG_EPS
            .iter()
            .map(|&eps| Ok((eps, lindeberg_value(p, n, eps)?)))
            .collect::<Result<Vec<_>>>()?;
        (b, None, table)
    };
    Ok(CutoffReport {
        n,
        mu: mom.mu,
        sigma: mom.sigma,
        t_n,
        b_n,
        window_inverse_mu,
        window_unit,
        lindeberg,
        spectral: second_eigenvalue(p),
        brace_t_n: brace(t_n)?,
        d_t_n_mu: d_of(t_n)? * mom.mu,
        hyp1: mom.mu / log_n,
    })
}

fn rational_json(r: &BigRational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "value": fmt_sig17(ratio_to_f64(r)),
    })
}

impl CutoffReport {
    /// Floats as 17-significant-digit strings; exact rationals as
    /// `num`/`den` decimal strings.
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "mu": fmt_sig17(self.mu),
            "sigma": fmt_sig17(self.sigma),
            "t_n": fmt_sig17(self.t_n),
            "b_n": fmt_sig17(self.b_n),
            "window_inverse_mu": fmt_sig17(self.window_inverse_mu),
            "window_unit": self.window_unit.map(fmt_sig17),
            "lindeberg": self.lindeberg.iter().map(|(e, v)| json!({
                "eps": fmt_sig17(*e),
                "value": fmt_sig17(*v),
            })).collect::<Vec<_>>(),
            "second_eigenvalue": rational_json(&self.spectral.beta),
            "relaxation_time": self.spectral.relaxation.as_ref().map(rational_json),
            "brace_t_n": fmt_sig17(self.brace_t_n),
            "d_t_n_times_mu": fmt_sig17(self.d_t_n_mu),
            "hyp1_ratio": fmt_sig17(self.hyp1),
        })
    }
}

/// Truncated moments of `log X` at level `a_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    pub n: u64,
    pub a_n: f64,
    /// `E[log X 1{log X <= a_n}]`.
    pub ey: f64,
    /// `E[min(log X, a_n)^2]`.
    pub ez2: f64,
    /// `a_n / log n`, which must stay bounded.
    pub a_n_over_log_n: f64,
    /// `log n * EZ^2 / (a_n^2 EY)`, which must vanish.
    pub second_moment_ratio: f64,
    /// `log n / EY`, which must diverge.
    pub log_n_over_ey: f64,
    /// `3 log n / (2 EY)`.
    pub t_n_truncated: f64,
}

pub fn truncation_report(p: &PackDistribution, n: u64, a_n: f64) -> Result<TruncationReport> {
    if a_n.is_nan() || a_n <= 0.0 {
        return Err(RiffleError::Domain("a_n must be positive".into()));
    }
    if n < 2 {
        return Err(RiffleError::Domain("truncation report needs n >= 2".into()));
    }
    let mut ey = CompensatedSum::new();
    let mut ez2 = CompensatedSum::new();
    for (l, w) in log_atoms(p) {
        if l <= a_n {
            ey.add(l * w);
            ez2.add(l * l * w);
        } else {
            ez2.add(a_n * a_n * w);
        }
    }
    let (ey, ez2) = (ey.value(), ez2.value());
    if ey <= 0.0 {
        return Err(RiffleError::Degenerate(
            "truncated mean EY is zero: no mass with 1 < X <= e^a_n".into(),
        ));
    }
    let log_n = (n as f64).ln();
    Ok(TruncationReport {
        n,
        a_n,
        ey,
        ez2,
        a_n_over_log_n: a_n / log_n,
        second_moment_ratio: log_n * ez2 / (a_n * a_n * ey),
        log_n_over_ey: log_n / ey,
        t_n_truncated: 3.0 * log_n / (2.0 * ey),
    })
}

impl TruncationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "a_n": fmt_sig17(self.a_n),
            "EY": fmt_sig17(self.ey),
            "EZ2": fmt_sig17(self.ez2),
            "a_n_over_log_n": fmt_sig17(self.a_n_over_log_n),
            "second_moment_ratio": fmt_sig17(self.second_moment_ratio),
            "log_n_over_EY": fmt_sig17(self.log_n_over_ey),
            "t_n_truncated": fmt_sig17(self.t_n_truncated),
        })
    }
}

/// `mu / log n` and `E[log X 1{log X > eta log n}] / mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypCheck {
    pub hyp1: f64,
    pub hyp2: f64,
}

pub fn hyp_check(p: &PackDistribution, n: u64, eta: f64) -> Result<HypCheck> {
    let atoms = log_atoms(p);
    let mom = log_moments_of(&atoms);
    require_mixing(&mom)?;
    let log_n = (n as f64).ln();
    let tail: CompensatedSum = atoms
        .iter()
        .filter(|(l, _)| *l > eta * log_n)
        .map(|(l, w)| l * w)
        .collect();
    Ok(HypCheck {
        hyp1: mom.mu / log_n,
        hyp2: tail.value() / mom.mu,
    })
}

/// Rounded "integer part" `{t}`: `1/2` on `(0, 1/2)`, else the `k` with
/// `k - 1/2 <= t < k + 1/2`.
pub fn brace(t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(RiffleError::Domain(format!("brace requires t > 0, got {t}")));
    }
    Ok(if t < 0.5 { 0.5 } else { (t + 0.5).floor() })
}

/// `d(t)`: `1/2` on `(0, 1/2)`, else `t - {t}`.
pub fn d_of(t: f64) -> Result<f64> {
    let b = brace(t)?;
    Ok(if t < 0.5 { 0.5 } else { t - b })
}

/// `c = m n^{-3/2}`, computed through logs so `m` may be astronomically large.
pub fn c_of(n: usize, m: &BigUint) -> f64 {
    (ln_biguint(m) - 1.5 * (n as f64).ln()).exp()
}

/// `psi(1/c)`, the normal-shape approximation of `||Q_{n,m} - U_n||`.
pub fn bd_tv_estimate(n: usize, m: &BigUint) -> Result<f64> {
    if m.is_zero() {
        return Err(RiffleError::Domain("m must be >= 1".into()));
    }
    psi(1.0 / c_of(n, m))
}

/// A value `h` in `Z/2`, stored as `2h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> Self {
        Self(twice)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Largest `h` with `Q_{n,m}(n/2 + h) >= 1/n!`, by scanning the exact law.
pub fn h_star_exact(n: usize, m: &BigUint) -> Result<HalfInt> {
    let law = q_nm(n, m)?;
    let fact = factorial(n);
    let r = (1..=n)
        .rev()
        .find(|&r| &law.numerators()[r - 1] * &fact >= *law.denominator())
        .ok_or_else(|| {
            RiffleError::InvariantViolation("no class reaches 1/n!".into())
        })?;
    Ok(HalfInt::from_twice(2 * r as i64 - n as i64))
}

/// `-sqrt(n) / (24 c)`.
pub fn h_star_asymptotic(n: usize, m: &BigUint) -> f64 {
    -(n as f64).sqrt() / (24.0 * c_of(n, m))
}

/// Main terms of the expansion of `log(n! Q_{n,m}(n/2 + h))`:
/// `(-h + 1/2)/(c sqrt n) - 1/(24 c^2) - (h/(c n))^2 / 2`.
/// Requires `c > a`.
pub fn log_q_expansion(n: usize, m: &BigUint, h: f64, a: f64) -> Result<f64> {
    let c = c_of(n, m);
    if c <= a {
        return Err(RiffleError::Domain(format!("c = {c} does not exceed a = {a}")));
    }
    let nf = n as f64;
    Ok((-h + 0.5) / (c * nf.sqrt()) - 1.0 / (24.0 * c * c) - 0.5 * (h / (c * nf)).powi(2))
}

/// Exact `log(n! Q_{n,m}(r))`; `-inf` when the class has probability zero.
pub fn log_q_exact(n: usize, m: &BigUint, r: usize) -> Result<f64> {
    let law = q_nm(n, m)?;
    Ok(ln_ratio(
        &(&law.numerators()[r - 1] * factorial(n)),
        law.denominator(),
    ))
}

/// Named pack-distribution families used in examples and tests.
pub mod families {
    use super::*;

    /// Point mass at `floor(n^alpha)` (at least 1).
    pub fn power_of_n(n: u64, alpha: f64) -> Result<PackDistribution> {
        PackDistribution::point(((n as f64).powf(alpha).floor() as u64).max(1))
    }

    /// Point mass at `floor((log n)^alpha)` (at least 1).
    pub fn power_of_log_n(n: u64, alpha: f64) -> Result<PackDistribution> {
        PackDistribution::point(((n as f64).ln().powf(alpha).floor() as u64).max(1))
    }

    /// `p(m) = p(m k^2) = 1/2`.
    pub fn two_point(m: u64, k: u64) -> Result<PackDistribution> {
        let half = BigRational::new(1.into(), 2.into());
        PackDistribution::new([(m, half.clone()), (m * k * k, half)])
    }

    /// `p_n(floor(e^i)) proportional to i^{-2}` for `1 <= i <= floor(log n)`.
    pub fn log_grid_inverse_square(n: u64) -> Result<PackDistribution> {
        let top = (n as f64).ln().floor() as u32;
        if top == 0 {
            return Err(RiffleError::Domain("needs n >= 3".into()));
        }
        PackDistribution::from_weights((1..=top).map(|i| {
            let m = (i as f64).exp().floor() as u64;
            (m, BigRational::new(1.into(), BigInt::from(i) * BigInt::from(i)))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(m: u64) -> BigUint {
        BigUint::from(m)
    }

    /// Composite Simpson rule for the standard normal density on `[-b, b]`.
    fn normal_mass_simpson(b: f64) -> f64 {
        let steps = 20_000;
        let h = 2.0 * b / steps as f64;
        let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(-b) + f(b);
        for i in 1..steps {
            let t = -b + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        s * h / 3.0
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert_eq!(psi(f64::INFINITY).unwrap(), 1.0);
        let x = 4.0 * 3f64.sqrt();
        let oracle = normal_mass_simpson(1.0);
        assert!((psi(x).unwrap() - oracle).abs() < 1e-12 * oracle);
        assert!((psi(x).unwrap() - 0.682_689_492_137_085_9).abs() < 1e-15);
        for b in [0.01, 0.3, 2.0, 5.0] {
            let oracle = normal_mass_simpson(b);
            let got = psi(b * 4.0 * 3f64.sqrt()).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle, "{b}: {got} vs {oracle}");
        }
        assert!(psi(-1.0).is_err());
        assert!(psi(f64::NAN).is_err());
    }

    #[test]
    fn moments_of_named_laws() {
        let m = log_moments(&PackDistribution::point(5).unwrap());
        assert_eq!(m.mu, 5f64.ln());
        assert_eq!(m.sigma, 0.0);
        assert!(m.degenerate());

        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        assert!((log_moments(&mix).mu - 6f64.sqrt().ln()).abs() < 1e-15);

        let e3 = log_moments(&families::two_point(3, 4).unwrap());
        assert!((e3.mu - 12f64.ln()).abs() < 1e-14);
        assert!((e3.sigma - 4f64.ln()).abs() < 1e-14);

        assert!(log_moments(&PackDistribution::point(1).unwrap()).no_mixing());
    }

    #[test]
    fn spectral_gap() {
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        let s = second_eigenvalue(&mix);
        assert_eq!(s.beta, BigRational::new(5.into(), 12.into()));
        assert_eq!(s.relaxation, Some(BigRational::new(12.into(), 7.into())));
        let s = second_eigenvalue(&PackDistribution::point(2).unwrap());
        assert_eq!(s.beta, BigRational::new(1.into(), 2.into()));
        let s = second_eigenvalue(&PackDistribution::point(1).unwrap());
        assert!(s.beta.is_one() && s.relaxation.is_none());
        for m in 2..=20u64 {
            let s = second_eigenvalue(&PackDistribution::point(m).unwrap());
            assert_eq!(
                s.relaxation.unwrap(),
                BigRational::new(m.into(), (m - 1).into())
            );
        }
    }

    #[test]
    fn gsr_report() {
        let r = cutoff_report(&PackDistribution::point(2).unwrap(), 52).unwrap();
        assert!((r.t_n - 1.5 * 52f64.log2()).abs() < 1e-12);
        assert!((r.b_n - 1.0 / 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.window_unit, Some(1.0));
        assert!(r.lindeberg.is_empty());
        assert!(matches!(
            cutoff_report(&PackDistribution::point(1).unwrap(), 52),
            Err(RiffleError::NoMixing)
        ));
    }

    #[test]
    fn mixture_report_window() {
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        let r = cutoff_report(&mix, 52).unwrap();
        let mu = 6f64.sqrt().ln();
        let sigma = 1.5f64.ln() / 2.0;
        assert!((r.t_n - 3.0 * 52f64.ln() / (2.0 * mu)).abs() < 1e-12);
        let expected_b = (1.0 / mu) * (sigma * sigma * 52f64.ln() / mu).sqrt().max(1.0);
        assert!((r.b_n - expected_b).abs() < 1e-12);
        assert_eq!(r.lindeberg.len(), LINDEBERG_EPS.len());
        let json = r.to_json();
        assert_eq!(json["second_eigenvalue"]["num"], "5");
        assert_eq!(json["relaxation_time"]["den"], "7");
        assert!(json["t_n"].as_str().unwrap().contains('e'));
    }

    #[test]
    fn lindeberg_vanishes_for_bounded_support() {
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        // xi^2 = 1 for both atoms; threshold eps log n / mu exceeds 1 once n is large
        assert!(lindeberg_value(&mix, 2, 0.01).unwrap() > 0.0);
        assert_eq!(lindeberg_value(&mix, 1000, 1.0).unwrap(), 0.0);
        assert_eq!(lindeberg_value(&mix, 10, 1e9).unwrap(), 0.0);
        assert!(lindeberg_value(&PackDistribution::point(2).unwrap(), 10, 1.0).is_err());
    }

    #[test]
    fn lindeberg_nonincreasing_in_eps_and_n() {
        let p = families::log_grid_inverse_square(1_000_000).unwrap();
        let mut last = f64::INFINITY;
        for eps in [0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 50.0] {
            let v = lindeberg_value(&p, 1_000_000, eps).unwrap();
            assert!(v <= last);
            last = v;
        }
        let mix: PackDistribution = "2:1/3,7:2/3".parse().unwrap();
        let mut last = f64::INFINITY;
        for n in [2u64, 3, 5, 10, 100, 10_000] {
            let v = lindeberg_value(&mix, n, 0.05).unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn truncation_inactive_above_support() {
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        let t = truncation_report(&mix, 100, 10.0).unwrap();
        let m = log_moments(&mix);
        assert!((t.ey - m.mu).abs() < 1e-15);
        assert!((t.ez2 - m.second_moment()).abs() < 1e-14);
        assert!(t.ey <= t.a_n && t.ez2 <= t.a_n * t.a_n);
        assert!(truncation_report(&mix, 100, 0.0).is_err());
        // nothing at or below a_n except X = 1
        assert!(truncation_report(&mix, 100, 0.5).is_err());
    }

    #[test]
    fn hyp_checks() {
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        assert_eq!(hyp_check(&mix, 1000, 0.2).unwrap().hyp2, 0.0);
        let d2 = PackDistribution::point(2).unwrap();
        let h = hyp_check(&d2, 1 << 20, 0.5).unwrap();
        assert!((h.hyp1 - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn brace_and_d() {
        assert_eq!((brace(0.3).unwrap(), d_of(0.3).unwrap()), (0.5, 0.5));
        assert_eq!((brace(1.5).unwrap(), d_of(1.5).unwrap()), (2.0, -0.5));
        assert_eq!(brace(1.4).unwrap(), 1.0);
        assert!((d_of(1.4).unwrap() - 0.4).abs() < 1e-15);
        assert!(brace(0.0).is_err() && d_of(-1.0).is_err());
    }

    #[test]
    fn bd_estimate() {
        // m = n^{3/2} exactly: n = 64, m = 512
        assert!((bd_tv_estimate(64, &big(512)).unwrap() - psi(1.0).unwrap()).abs() < 1e-14);
        let v = bd_tv_estimate(52, &big(512)).unwrap();
        let c = 512.0 / 52f64.powf(1.5);
        assert!((v - psi(1.0 / c).unwrap()).abs() < 1e-14);
        assert!((1.0 / c - 0.7324).abs() < 1e-4);
        assert!(bd_tv_estimate(52, &(big(1) << 400u32)).unwrap() < 1e-100);
    }

    #[test]
    fn h_star_small_deck_by_direct_comparison() {
        let law = q_nm(6, &big(2)).unwrap();
        let uniform = BigRational::new(1.into(), 720.into());
        let r = (1..=6)
            .filter(|&r| law.class_prob(r).as_ratio() >= &uniform)
            .max()
            .unwrap();
        assert_eq!(h_star_exact(6, &big(2)).unwrap(), HalfInt::from_twice(2 * r as i64 - 6));
        assert_eq!(HalfInt::from_twice(-3).to_string(), "-3/2");
    }

    #[test]
    fn h_star_for_huge_m_is_near_zero() {
        let m = big(1) << 60u32;
        assert!(h_star_asymptotic(52, &m).abs() < 1e-6);
        let h = h_star_exact(52, &m).unwrap().to_f64();
        assert!((-1.0..=0.0).contains(&h), "{h}");
    }

    #[test]
    fn expansion_against_exact() {
        let m = big(1) << 11u32;
        let exact = log_q_exact(100, &m, 50).unwrap();
        let approx = log_q_expansion(100, &m, 0.0, 0.1).unwrap();
        // O(1/(cn)) + O(h/n) remainder with c ~ 2
        assert!((exact - approx).abs() < 0.01, "{exact} vs {approx}");
        assert!(log_q_expansion(100, &big(10), 0.0, 1.0).is_err());
        assert_eq!(log_q_exact(6, &big(2), 5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn inverse_square_family() {
        let p = families::log_grid_inverse_square(1_000_000).unwrap();
        assert_eq!(p.atoms().len(), 13);
        assert_eq!(p.min_pack_count(), 2);
        assert_eq!(p.atoms()[1].0, 7);
        assert_eq!(p.atoms()[2].0, 20);
    }
}
