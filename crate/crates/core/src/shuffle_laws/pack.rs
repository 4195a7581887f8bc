use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::combinatorics::ExactProb;
use crate::error::{Result, RiffleError};

/// Finite-support law of the pack count `m` used by one shuffle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackDistribution {
    atoms: Vec<(u64, ExactProb)>,
    discarded_mass: BigRational,
}

impl PackDistribution {
    /// Atoms must have distinct `m >= 1` and probabilities summing to 1.
    /// Zero-probability atoms are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (u64, BigRational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = BigRational::zero();
        for (m, prob) in atoms {
            if m == 0 {
                return Err(RiffleError::InvalidDistribution("pack count must be >= 1".into()));
            }
            if prob.is_negative() {
                return Err(RiffleError::InvalidDistribution(format!(
                    "negative probability for m = {m}"
                )));
            }
            total += &prob;
            if map.insert(m, prob).is_some() {
                return Err(RiffleError::InvalidDistribution(format!(
                    "pack count {m} listed twice"
                )));
            }
        }
        if !total.is_one() {
            return Err(RiffleError::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let atoms = map
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(m, p)| Ok((m, ExactProb::new(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            atoms,
            discarded_mass: BigRational::zero(),
        })
    }

    pub fn point(m: u64) -> Result<Self> {
        Self::new([(m, BigRational::one())])
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: impl IntoIterator<Item = (u64, BigRational)>) -> Result<Self> {
        let weights: Vec<_> = weights.into_iter().collect();
        let total: BigRational = weights.iter().map(|(_, w)| w.clone()).sum();
        if !total.is_positive() {
            return Err(RiffleError::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|(m, w)| (m, w / &total)))
    }

    /// Truncates a (possibly infinite) normalized atom sequence once the
    /// retained mass reaches `1 - tail_bound`, then renormalizes. The mass
    /// left out is kept in [`discarded_mass`](Self::discarded_mass).
    pub fn truncated(
        atoms: impl IntoIterator<Item = (u64, BigRational)>,
        tail_bound: &BigRational,
    ) -> Result<Self> {
        if !tail_bound.is_positive() || *tail_bound >= BigRational::one() {
            return Err(RiffleError::Domain("tail bound must lie in (0, 1)".into()));
        }
        let target = BigRational::one() - tail_bound;
        let mut kept = Vec::new();
        let mut mass = BigRational::zero();
        for (m, p) in atoms {
            mass += &p;
            kept.push((m, p));
            if mass >= target {
                break;
            }
        }
        if mass < target {
            return Err(RiffleError::InvalidDistribution(
                "atom sequence ended before reaching the requested mass".into(),
            ));
        }
        let discarded = BigRational::one() - &mass;
        let mut dist = Self::from_weights(kept)?;
        dist.discarded_mass = discarded.max(BigRational::zero());
        Ok(dist)
    }

    pub fn atoms(&self) -> &[(u64, ExactProb)] {
        &self.atoms
    }

    pub fn probability(&self, m: u64) -> ExactProb {
        self.atoms
            .iter()
            .find(|(k, _)| *k == m)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(ExactProb::zero)
    }

    pub fn discarded_mass(&self) -> &BigRational {
        &self.discarded_mass
    }

    pub fn max_pack_count(&self) -> u64 {
        self.atoms.last().map(|(m, _)| *m).unwrap_or(1)
    }

    pub fn min_pack_count(&self) -> u64 {
        self.atoms.first().map(|(m, _)| *m).unwrap_or(1)
    }

    /// True for the point mass at 1 (the identity shuffle).
    pub fn is_identity(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].0 == 1
    }

    pub fn is_point_mass(&self) -> Option<u64> {
        (self.atoms.len() == 1).then(|| self.atoms[0].0)
    }

    /// `P{X != 1}` exactly.
    pub fn prob_not_one(&self) -> BigRational {
        BigRational::one() - self.probability(1).into_ratio()
    }

    /// Canonical `m:num/den,...` form accepted by [`FromStr`].
    pub fn spec_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PackDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if p.denom().is_one() {
                write!(f, "{m}:{}", p.numer())?;
            } else {
                write!(f, "{m}:{p}")?;
            }
        }
        Ok(())
    }
}

/// Parses `m:prob,m:prob` with exact fractions such as `2:1/2,3:1/2`.
/// Decimal probabilities are rejected.
impl FromStr for PackDistribution {
    type Err = RiffleError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| RiffleError::InvalidDistribution(msg);
        let mut atoms = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (m, prob) = item
                .split_once(':')
                .ok_or_else(|| bad(format!("expected m:prob, got {item:?}")))?;
            let m: u64 = m
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad pack count {m:?}")))?;
            atoms.push((m, parse_fraction(prob.trim()).map_err(bad)?));
        }
        if atoms.is_empty() {
            return Err(bad("empty pack distribution".into()));
        }
        Self::new(atoms)
    }
}

fn parse_fraction(s: &str) -> std::result::Result<BigRational, String> {
    if s.contains(['.', 'e', 'E']) {
        return Err(format!("probability {s:?} must be an exact fraction, not a float"));
    }
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let num: BigInt = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: BigInt = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(num, den))
}

/// Default cap on the number of distinct products kept by a [`ProductLaw`].
pub const DEFAULT_ATOM_LIMIT: usize = 1_000_000;

/// Exact law of a product of independent pack counts, keyed by product value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductLaw {
    atoms: BTreeMap<BigUint, BigRational>,
}

impl ProductLaw {
    pub fn point(m: impl Into<BigUint>) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(m.into(), BigRational::one());
        Self { atoms }
    }

    pub fn from_pack(p: &PackDistribution) -> Self {
        Self {
            atoms: p
                .atoms()
                .iter()
                .map(|(m, prob)| (BigUint::from(*m), prob.as_ratio().clone()))
                .collect(),
        }
    }

    pub fn atoms(&self) -> &BTreeMap<BigUint, BigRational> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn probability(&self, value: &BigUint) -> BigRational {
        self.atoms.get(value).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.atoms.values().cloned().sum()
    }

    /// Law of the product of independent draws from `self` and `other`.
    pub fn multiply(&self, other: &ProductLaw, atom_limit: usize) -> Result<ProductLaw> {
        let mut atoms: BTreeMap<BigUint, BigRational> = BTreeMap::new();
        for (a, pa) in &self.atoms {
            for (b, pb) in &other.atoms {
                *atoms.entry(a * b).or_insert_with(BigRational::zero) += pa * pb;
                if atoms.len() > atom_limit {
                    return Err(RiffleError::SizeGuard {
                        what: "product law atoms",
                        requested: atoms.len() as u128,
                        limit: atom_limit as u128,
                    });
                }
            }
        }
        Ok(ProductLaw { atoms })
    }
}

/// Law of `X_1 ... X_k` for i.i.d. `X_i ~ p` with the default atom guard.
pub fn product_power(p: &PackDistribution, k: usize) -> Result<ProductLaw> {
    product_power_with_limit(p, k, DEFAULT_ATOM_LIMIT)
}

pub fn product_power_with_limit(
    p: &PackDistribution,
    k: usize,
    atom_limit: usize,
) -> Result<ProductLaw> {
    let base = ProductLaw::from_pack(p);
    let mut acc = ProductLaw::point(1u8);
    for _ in 0..k {
        acc = acc.multiply(&base, atom_limit)?;
    }
    Ok(acc)
}
