//! Continuous-time (Poissonized) shuffles and the discretization bridge
//! `X -> X~` that turns a continuous-time chain back into a discrete one.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::combinatorics::{factorial, shared_row, EulerianRow, ExactProb};
use crate::cutoff::{log_moments, LogMoments};
use crate::error::{Result, RiffleError};
use crate::numeric::{fmt_sig17, ln_biguint, ratio_to_f64, CompensatedSum};
use crate::shuffle_laws::{
    law_after_k, LawEntry, LawExport, PackDistribution, ProductLaw, DEFAULT_ATOM_LIMIT,
};

/// `H_{n,t}`, the law after a Poisson(`t`) number of `p`-shuffles, truncated
/// at `K` steps. Class values are floats: the Poisson weights are irrational.
#[derive(Clone, Debug)]
pub struct PoissonizedLaw {
    n: usize,
    t: f64,
    tol: f64,
    truncation_k: usize,
    tail_mass_bound: f64,
    total_mass: f64,
    /// `n! * H(r)` for `r = 1..=n`.
    density: Vec<f64>,
    row: std::sync::Arc<EulerianRow>,
}

/// Poisson(`t`) weights `e^{-t} t^k / k!` for `k = 0..` until they are
/// negligible in double precision, computed in log space.
fn poisson_weights(t: f64) -> Vec<f64> {
    if t == 0.0 {
        return vec![1.0];
    }
    let ln_t = t.ln();
    let upper = (t + 40.0 * t.sqrt() + 60.0).ceil() as usize;
    let mut ln_fact = 0.0;
    let mut out = Vec::with_capacity(upper + 1);
    for k in 0..=upper {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        out.push((-t + k as f64 * ln_t - ln_fact).exp());
    }
    out
}

/// Smallest `K` with `sum_{k > K} w_k < tol`, using suffix sums so small
/// tails are not lost to cancellation. Returns `(K, tail)`.
fn truncation_index(weights: &[f64], tol: f64) -> (usize, f64) {
    let mut suffix = vec![0.0; weights.len() + 1];
    let mut acc = CompensatedSum::new();
    for k in (0..weights.len()).rev() {
        acc.add(weights[k]);
        suffix[k] = acc.value();
    }
    let k = (0..weights.len())
        .find(|&k| suffix[k + 1] < tol)
        .unwrap_or(weights.len() - 1);
    (k, suffix[k + 1])
}

pub fn poissonized_law(n: usize, p: &PackDistribution, t: f64, tol: f64) -> Result<PoissonizedLaw> {
    if n == 0 {
        return Err(RiffleError::Domain("deck size must be >= 1".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(RiffleError::Domain(format!("t must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(RiffleError::Domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    let weights = poisson_weights(t);
    let (truncation_k, tail) = truncation_index(&weights, tol);

    let densities = (0..=truncation_k)
        .into_par_iter()
        .map(|k| {
            let law = law_after_k(n, p, k)?;
            Ok((1..=n).map(|r| law.density_ratio(r)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    // fixed k-order combination keeps the result bit-reproducible
    let density = (0..n)
        .map(|i| {
            densities
                .iter()
                .zip(&weights)
                .map(|(d, w)| w * d[i])
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    let total_mass = weights[..=truncation_k]
        .iter()
        .copied()
        .collect::<CompensatedSum>()
        .value();

    Ok(PoissonizedLaw {
        n,
        t,
        tol,
        truncation_k,
        tail_mass_bound: tail,
        total_mass,
        density,
        row: shared_row(n)?,
    })
}

impl PoissonizedLaw {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn truncation_k(&self) -> usize {
        self.truncation_k
    }

    /// Poisson mass beyond `truncation_k`; below `tol`.
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Mass retained by the truncated sum, `1 - tail_mass_bound` up to
    /// rounding.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `n! * H(r)`.
    pub fn density_ratio(&self, r: usize) -> f64 {
        self.density[r - 1]
    }

    /// Probability of each single arrangement with `r` rising sequences.
    pub fn class_prob(&self, r: usize) -> f64 {
        (self.density[r - 1].ln() - ln_biguint(&factorial(self.n))).exp()
    }

    /// Total probability of the class with `r` rising sequences.
    pub fn class_mass(&self, r: usize) -> f64 {
        self.density[r - 1] * self.row.fraction(r)
    }

    /// Sum of class masses of the truncated law.
    pub fn class_mass_sum(&self) -> f64 {
        (1..=self.n).map(|r| self.class_mass(r)).collect::<CompensatedSum>().value()
    }

    /// TV to uniform with a certificate: the true `||H_{n,t} - U_n||` lies
    /// within `value +- tol` (the dropped tail moves at most half its mass
    /// in each direction), and equals `exact` when `t = 0`.
    pub fn tv(&self) -> TvCertificate {
        let value = (1..=self.n)
            .map(|r| 0.5 * self.row.fraction(r) * (self.density[r - 1] - 1.0).abs())
            .collect::<CompensatedSum>()
            .value();
        let exact = (self.t == 0.0).then(|| {
            let fact = factorial(self.n);
            ExactProb::new(BigRational::new(
                (&fact - 1u8).into(),
                fact.into(),
            ))
            .expect("1 - 1/n! lies in [0, 1]")
        });
        TvCertificate {
            value,
            tol: self.tol,
            exact,
        }
    }

    /// Law JSON with class probabilities written as the exact rationals
    /// `density / n!`, where `density` is the stored float.
    pub fn to_export(&self) -> LawExport {
        let fact = BigRational::from_integer(factorial(self.n).into());
        LawExport {
            n: self.n,
            entries: (1..=self.n)
                .map(|r| {
                    let p = BigRational::from_float(self.density[r - 1])
                        .unwrap_or_else(BigRational::zero)
                        / &fact;
                    LawEntry {
                        r,
                        count: self.row.count(r).to_string(),
                        prob_num: p.numer().to_string(),
                        prob_den: p.denom().to_string(),
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self.to_export()).expect("law export serializes");
        let obj = v.as_object_mut().expect("law export is an object");
        obj.insert("t".into(), json!(fmt_sig17(self.t)));
        obj.insert("tol".into(), json!(fmt_sig17(self.tol)));
        obj.insert("truncation_k".into(), json!(self.truncation_k));
        v
    }
}

/// A float TV value with a guaranteed error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct TvCertificate {
    pub value: f64,
    pub tol: f64,
    /// Known exact value, when available.
    pub exact: Option<ExactProb>,
}

impl TvCertificate {
    pub fn lower(&self) -> f64 {
        (self.value - self.tol).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.value + self.tol).min(1.0)
    }
}

/// `X~`, the pack count that makes the discrete chain match the Poissonized
/// one: `P{X~ = 1} = e^{-P{X != 1}}` and, for `l > 1`,
/// `P{X~ = l} = e^{-1} sum_{j >= 1} P{X_1 ... X_j = l} / j!`.
#[derive(Clone, Debug)]
pub struct TildePackDistribution {
    atoms: BTreeMap<BigUint, f64>,
    j_truncation: usize,
    discarded_mass: f64,
}

/// Largest `j` the tilde construction will expand.
pub const TILDE_MAX_J: usize = 60;

/// `e^{-1} sum_{j > big_j} j^2 / j!`, which bounds the dropped mass and,
/// scaled by `mu` and `sigma^2 + mu^2`, the dropped parts of both moments.
fn tilde_tail(big_j: usize) -> f64 {
    let mut term = 1.0f64; // 1/j! at j = big_j + 1, built below
    for j in 1..=big_j + 1 {
        term /= j as f64;
    }
    let mut acc = CompensatedSum::new();
    let mut j = big_j + 1;
    while term > 0.0 && j < big_j + 200 {
        acc.add((j * j) as f64 * term);
        j += 1;
        term /= j as f64;
    }
    acc.value() / std::f64::consts::E
}

pub fn tilde_p(p: &PackDistribution, tol: f64) -> Result<TildePackDistribution> {
    tilde_p_with_limit(p, tol, DEFAULT_ATOM_LIMIT)
}

pub fn tilde_p_with_limit(
    p: &PackDistribution,
    tol: f64,
    atom_limit: usize,
) -> Result<TildePackDistribution> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(RiffleError::Domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    let big_j = (0..=TILDE_MAX_J)
        .find(|&j| tilde_tail(j) < tol)
        .ok_or_else(|| RiffleError::Domain(format!("tol = {tol} needs j > {TILDE_MAX_J}")))?;

    let mut atoms = BTreeMap::new();
    let p_not_one = ratio_to_f64(&p.prob_not_one());
    atoms.insert(BigUint::one(), (-p_not_one).exp());
    if !p.is_identity() {
        let single = ProductLaw::from_pack(p);
        let mut product = ProductLaw::point(1u8);
        let mut weight = (-1.0f64).exp();
        let mut sums: BTreeMap<BigUint, CompensatedSum> = BTreeMap::new();
        for j in 1..=big_j {
            product = product.multiply(&single, atom_limit)?;
            weight /= j as f64;
            for (l, q) in product.atoms() {
                if !l.is_one() {
                    sums.entry(l.clone()).or_default().add(weight * ratio_to_f64(q));
                }
            }
        }
        atoms.extend(sums.into_iter().map(|(l, s)| (l, s.value())));
    }

    let p_one = 1.0 - p_not_one;
    let discarded_mass = if p.is_identity() {
        0.0
    } else {
        let mut term = 1.0f64;
        for j in 1..=big_j {
            term /= j as f64;
        }
        let mut acc = CompensatedSum::new();
        let mut j = big_j;
        loop {
            j += 1;
            term /= j as f64;
            if term == 0.0 || j > big_j + 200 {
                break;
            }
            acc.add(term * (1.0 - p_one.powi(j as i32)));
        }
        acc.value() / std::f64::consts::E
    };

    Ok(TildePackDistribution {
        atoms,
        j_truncation: big_j,
        discarded_mass,
    })
}

impl TildePackDistribution {
    pub fn atoms(&self) -> &BTreeMap<BigUint, f64> {
        &self.atoms
    }

    pub fn probability(&self, l: &BigUint) -> f64 {
        self.atoms.get(l).copied().unwrap_or(0.0)
    }

    /// Number of factors `J` kept in the `j`-sum.
    pub fn j_truncation(&self) -> usize {
        self.j_truncation
    }

    /// Mass of the dropped terms `j > J`.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }

    pub fn retained_mass(&self) -> f64 {
        self.atoms.values().copied().collect::<CompensatedSum>().value()
    }

    /// Moments of `log X~` over the retained atoms, not renormalized.
    pub fn log_moments(&self) -> LogMoments {
        let pairs: Vec<(f64, f64)> = self.atoms.iter().map(|(l, w)| (ln_biguint(l), *w)).collect();
        let raw_mean = pairs.iter().map(|(l, w)| l * w).collect::<CompensatedSum>().value();
        let raw_second = pairs.iter().map(|(l, w)| l * l * w).collect::<CompensatedSum>().value();
        LogMoments {
            mu: raw_mean,
            sigma: (raw_second - raw_mean * raw_mean).max(0.0).sqrt(),
        }
    }

    /// Largest `log l` over retained atoms.
    pub fn max_log_atom(&self) -> f64 {
        self.atoms.keys().next_back().map(ln_biguint).unwrap_or(0.0)
    }
}

/// Cutoff parameters of the Poissonized chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousCutoffReport {
    pub n: u64,
    pub mu: f64,
    pub sigma: f64,
    /// `3 log n / (2 mu)`, in units of time.
    pub t_n: f64,
    /// `(1/mu) max{(mu + sigma) sqrt(log n / mu), 1}`.
    pub b_n: f64,
    pub point_mass: Option<PointMassForm>,
}

/// Extra quantities for `p = delta_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMassForm {
    pub m: u64,
    /// `sqrt(t_n)`, the window of the `(t_n, sqrt t_n)` form.
    pub sqrt_t_n: f64,
    /// `log n / log m`; cutoff needs it to diverge along the sequence.
    pub criterion: f64,
}

pub fn continuous_cutoff_report(p: &PackDistribution, n: u64) -> Result<ContinuousCutoffReport> {
    if n < 2 {
        return Err(RiffleError::Domain("cutoff report needs n >= 2".into()));
    }
    let mom = log_moments(p);
    if mom.no_mixing() {
        return Err(RiffleError::NoMixing);
    }
    let log_n = (n as f64).ln();
    let t_n = 3.0 * log_n / (2.0 * mom.mu);
    let b_n = ((mom.mu + mom.sigma) * (log_n / mom.mu).sqrt()).max(1.0) / mom.mu;
    let point_mass = p.is_point_mass().map(|m| PointMassForm {
        m,
        sqrt_t_n: t_n.sqrt(),
        criterion: log_n / (m as f64).ln(),
    });
    Ok(ContinuousCutoffReport {
        n,
        mu: mom.mu,
        sigma: mom.sigma,
        t_n,
        b_n,
        point_mass,
    })
}

impl ContinuousCutoffReport {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "mu": fmt_sig17(self.mu),
            "sigma": fmt_sig17(self.sigma),
            "t_n": fmt_sig17(self.t_n),
            "b_n": fmt_sig17(self.b_n),
            "point_mass": self.point_mass.as_ref().map(|f| json!({
                "m": f.m,
                "sqrt_t_n": fmt_sig17(f.sqrt_t_n),
                "log_n_over_log_m": fmt_sig17(f.criterion),
            })),
        })
    }
}
