use std::ops::RangeInclusive;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use super::pack::{product_power, PackDistribution, ProductLaw};
use crate::combinatorics::{factorial, shared_row, EulerianRow, ExactProb};
use crate::error::{Result, RiffleError};
use crate::numeric::parts_to_f64;

/// Law on `n`-card arrangements that depends only on the number of rising
/// sequences. Stored per arrangement: `class_prob(r)` is the probability of
/// EACH arrangement with `r` rising sequences, kept as `nums[r-1] / den`
/// with `gcd(nums.., den) = 1`, so the representation is canonical.
#[derive(Clone, Debug)]
pub struct RisingSeqLaw {
    n: usize,
    nums: Vec<BigUint>,
    den: BigUint,
    row: Arc<EulerianRow>,
}

impl PartialEq for RisingSeqLaw {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.den == other.den && self.nums == other.nums
    }
}

impl Eq for RisingSeqLaw {}

impl RisingSeqLaw {
    /// Builds a law from per-arrangement numerators over a common
    /// denominator. Fails unless the class masses sum to exactly 1 and the
    /// per-arrangement probabilities are nonincreasing in `r`.
    pub fn from_parts(row: Arc<EulerianRow>, nums: Vec<BigUint>, den: BigUint) -> Result<Self> {
        let n = row.n();
        if nums.len() != n {
            return Err(RiffleError::InvariantViolation(format!(
                "expected {n} class values, got {}",
                nums.len()
            )));
        }
        if den.is_zero() {
            return Err(RiffleError::InvariantViolation("zero denominator".into()));
        }
        let mass: BigUint = nums.iter().zip(row.counts()).map(|(a, c)| a * c).sum();
        if mass != den {
            return Err(RiffleError::InvariantViolation(
                "class masses do not sum to 1".into(),
            ));
        }
        if let Some(r) = nums.windows(2).position(|w| w[1] > w[0]) {
            return Err(RiffleError::InvariantViolation(format!(
                "class probability increases from r = {} to r = {}",
                r + 1,
                r + 2
            )));
        }
        let g = nums.iter().fold(den.clone(), |g, a| g.gcd(a));
        let (nums, den) = if g.is_one() {
            (nums, den)
        } else {
            (nums.into_iter().map(|a| a / &g).collect(), den / &g)
        };
        Ok(Self { n, nums, den, row })
    }

    /// The ordered deck with probability one.
    pub fn identity(n: usize) -> Result<Self> {
        let row = shared_row(n)?;
        let mut nums = vec![BigUint::zero(); n];
        nums[0] = BigUint::one();
        Self::from_parts(row, nums, BigUint::one())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let row = shared_row(n)?;
        Self::from_parts(row, vec![BigUint::one(); n], factorial(n))
    }

    /// `sum_m w(m) Q_{n,m}` over the atoms of a product law.
    pub fn mixture(n: usize, law: &ProductLaw) -> Result<Self> {
        let row = shared_row(n)?;
        let parts: Vec<(Vec<BigUint>, BigUint, &BigRational)> = law
            .atoms()
            .iter()
            .map(|(m, w)| {
                let (nums, den) = q_nm_parts(n, m);
                (nums, den, w)
            })
            .collect();
        // common denominator of w * nums / den over all atoms
        let weight_den = |w: &BigRational| w.denom().magnitude().clone();
        let lcm = parts
            .iter()
            .fold(BigUint::one(), |acc, (_, den, w)| acc.lcm(&(den * weight_den(w))));
        let mut nums = vec![BigUint::zero(); n];
        for (part, den, w) in &parts {
            let scale = w.numer().magnitude() * (&lcm / (den * weight_den(w)));
            for (acc, a) in nums.iter_mut().zip(part) {
                *acc += a * &scale;
            }
        }
        Self::from_parts(row, nums, lcm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self) -> &EulerianRow {
        &self.row
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.nums
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    /// Probability of each single arrangement with `r` rising sequences.
    pub fn class_prob(&self, r: usize) -> ExactProb {
        ExactProb::from_parts(self.nums[r - 1].clone(), self.den.clone())
            .expect("law values lie in [0, 1]")
    }

    pub fn class_probs(&self) -> Vec<ExactProb> {
        (1..=self.n).map(|r| self.class_prob(r)).collect()
    }

    /// Total probability of the class of arrangements with `r` rising sequences.
    pub fn class_mass(&self, r: usize) -> ExactProb {
        ExactProb::from_parts(&self.nums[r - 1] * self.row.count(r), self.den.clone())
            .expect("class mass lies in [0, 1]")
    }

    /// `n! * class_prob(r)` as a float: the density against uniform.
    pub fn density_ratio(&self, r: usize) -> f64 {
        parts_to_f64(&(&self.nums[r - 1] * factorial(self.n)), &self.den)
    }

    /// Signed `U_n(B) - law(B)` for the set `B` of arrangements whose
    /// rising-sequence count lies in `classes`.
    pub fn uniform_gap(&self, classes: RangeInclusive<usize>) -> BigRational {
        let fact = factorial(self.n);
        let mut acc = BigInt::zero();
        for r in classes {
            let diff = BigInt::from(self.den.clone()) - BigInt::from(&self.nums[r - 1] * &fact);
            acc += diff * BigInt::from(self.row.count(r).clone());
        }
        BigRational::new(acc, BigInt::from(&self.den * fact))
    }

    pub fn to_export(&self) -> LawExport {
        LawExport {
            n: self.n,
            entries: (1..=self.n)
                .map(|r| {
                    let p = self.class_prob(r);
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
}

/// JSON form of a law; all exact fields are decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawExport {
    pub n: usize,
    pub entries: Vec<LawEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawEntry {
    pub r: usize,
    pub count: String,
    pub prob_num: String,
    pub prob_den: String,
}

/// `(C(n+m-r, n) for r = 1..=n, m^n)`.
fn q_nm_parts(n: usize, m: &BigUint) -> (Vec<BigUint>, BigUint) {
    let nn = BigUint::from(n);
    let mut nums = Vec::with_capacity(n);
    // top = n + m - r, starting at r = 1
    let mut top = &nn + m - 1u8;
    let mut c = crate::combinatorics::binomial_big(&top, n as u64);
    for r in 1..=n {
        nums.push(c.clone());
        if r == n {
            break;
        }
        if c.is_zero() || top <= nn {
            c = BigUint::zero();
        } else {
            // C(top-1, n) = C(top, n) * (top - n) / top
            c = c * (&top - &nn) / &top;
        }
        top -= 1u8;
    }
    (nums, Pow::pow(m, n))
}

/// Law of the deck after one `m`-shuffle of an ordered deck:
/// `Q_{n,m}(r) = C(n+m-r, n) / m^n`.
pub fn q_nm(n: usize, m: &BigUint) -> Result<RisingSeqLaw> {
    if n == 0 || m.is_zero() {
        return Err(RiffleError::Domain("q_nm requires n >= 1 and m >= 1".into()));
    }
    let row = shared_row(n)?;
    let (nums, den) = q_nm_parts(n, m);
    RisingSeqLaw::from_parts(row, nums, den)
}

pub fn q_nm_u64(n: usize, m: u64) -> Result<RisingSeqLaw> {
    q_nm(n, &BigUint::from(m))
}

/// Law after `k` independent `p`-shuffles: the mixture of `Q_{n,M}` over the
/// law of the product `M` of `k` draws from `p`.
pub fn law_after_k(n: usize, p: &PackDistribution, k: usize) -> Result<RisingSeqLaw> {
    if n == 0 {
        return Err(RiffleError::Domain("deck size must be >= 1".into()));
    }
    RisingSeqLaw::mixture(n, &product_power(p, k)?)
}

/// Exact total variation distance to the uniform law.
pub fn tv_to_uniform(law: &RisingSeqLaw) -> ExactProb {
    let fact = factorial(law.n);
    let mut acc = BigUint::zero();
    for (r, a) in law.nums.iter().enumerate() {
        let scaled = a * &fact;
        let diff = if scaled >= law.den {
            scaled - &law.den
        } else {
            &law.den - scaled
        };
        acc += diff * law.row.count(r + 1);
    }
    ExactProb::from_parts(acc, (&law.den * fact) << 1u32).expect("tv lies in [0, 1]")
}

/// `U_n(A_r) - Q_{n,m}(A_r)` for `A_r` = arrangements with at least `r`
/// rising sequences.
pub fn tail_set_gap(n: usize, m: &BigUint, r: usize) -> Result<BigRational> {
    if r == 0 || r > n {
        return Err(RiffleError::Domain(format!("r = {r} outside 1..={n}")));
    }
    Ok(q_nm(n, m)?.uniform_gap(r..=n))
}

/// Result of [`b_set_gap`].
#[derive(Clone, Debug, PartialEq)]
pub struct BSetGap {
    /// `c = m n^{-3/2}`.
    pub c: f64,
    /// Left end `n/2 - sqrt(n)/(24c) + n^{1/4}` of the window.
    pub lower_bound: f64,
    /// Smallest admissible rising-sequence count, `None` when the window is empty.
    pub r_min: Option<usize>,
    pub gap: BigRational,
}

impl BSetGap {
    pub fn is_empty(&self) -> bool {
        self.r_min.is_none()
    }
}

/// `U_n(B_c) - Q_{n,k}(B_c)` where `B_c` holds arrangements whose number of
/// rising sequences lies in `[n/2 - sqrt(n)/(24c) + n^{1/4}, n]`, `c = m n^{-3/2}`.
pub fn b_set_gap(n: usize, m: &BigUint, k: &BigUint) -> Result<BSetGap> {
    if k > m || k.is_zero() {
        return Err(RiffleError::Domain("b_set_gap requires 1 <= k <= m".into()));
    }
    let nf = n as f64;
    let c = parts_to_f64(m, &BigUint::one()) / nf.powf(1.5);
    let lower_bound = nf / 2.0 - nf.sqrt() / (24.0 * c) + nf.powf(0.25);
    let r_min = lower_bound.ceil().max(1.0);
    if r_min > nf {
        return Ok(BSetGap {
            c,
            lower_bound,
            r_min: None,
            gap: BigRational::zero(),
        });
    }
    let r_min = r_min as usize;
    let gap = q_nm(n, k)?.uniform_gap(r_min..=n);
    Ok(BSetGap {
        c,
        lower_bound,
        r_min: Some(r_min),
        gap,
    })
}
