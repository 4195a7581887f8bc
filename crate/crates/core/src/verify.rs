//! Exhaustive exact property suites over small grids, plus one statistical
//! suite for the sampler. Each suite returns a machine-readable verdict.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{all_arrangements, factorial, rising_sequences, shared_row};
use crate::error::{Result, RiffleError};
use crate::sampling::{chi_square_test, sample_histogram};
use crate::shuffle_laws::{
    law_after_k, oracle_convolution, oracle_convolution_sequence, oracle_digit_law, q_nm_u64,
    tail_set_gap, tv_to_uniform, PackDistribution, RisingSeqLaw,
};

/// Named property suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracle,
    Composition,
    Monotonicity,
    MainLemma,
    TailGap,
    SingleCrossing,
    Eulerian,
    Sampler,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Oracle,
        Suite::Composition,
        Suite::Monotonicity,
        Suite::MainLemma,
        Suite::TailGap,
        Suite::SingleCrossing,
        Suite::Eulerian,
        Suite::Sampler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Composition => "composition",
            Suite::Monotonicity => "monotonicity",
            Suite::MainLemma => "main_lemma",
            Suite::TailGap => "tail_gap",
            Suite::SingleCrossing => "single_crossing",
            Suite::Eulerian => "eulerian",
            Suite::Sampler => "sampler",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = RiffleError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                RiffleError::Domain(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Grid bounds for the suites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyBounds {
    /// Digit-word oracle: `n <= oracle_n`, `m <= oracle_m`.
    pub oracle_n: usize,
    pub oracle_m: u64,
    /// Group-convolution oracle: `n <= convolution_n`, `k <= convolution_k`.
    pub convolution_n: usize,
    pub convolution_k: usize,
    pub composition_n: usize,
    /// Exact lemma grids: `n <= grid_n`, `m <= grid_m`.
    pub grid_n: usize,
    pub grid_m: u64,
    pub eulerian_n: usize,
    pub sampler_n: usize,
    pub sampler_samples: u64,
    pub seed: u64,
}

impl Default for VerifyBounds {
    fn default() -> Self {
        Self {
            oracle_n: 6,
            oracle_m: 5,
            convolution_n: 5,
            convolution_k: 3,
            composition_n: 6,
            grid_n: 8,
            grid_m: 30,
            eulerian_n: 8,
            sampler_n: 8,
            sampler_samples: 100_000,
            seed: 0,
        }
    }
}

impl VerifyBounds {
    /// Sets every deck-size bound to `n`.
    pub fn with_n(mut self, n: usize) -> Self {
        self.oracle_n = n;
        self.convolution_n = n;
        self.composition_n = n;
        self.grid_n = n;
        self.eulerian_n = n;
        self.sampler_n = n;
        self
    }
}

/// Violations beyond this many are counted but not listed.
pub const MAX_LISTED_VIOLATIONS: usize = 20;

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteVerdict {
    pub name: String,
    pub passed: bool,
    pub checked: u64,
    pub violations: u64,
    pub examples: Vec<String>,
}

#[derive(Default)]
struct Tally {
    checked: u64,
    violations: u64,
    examples: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < MAX_LISTED_VIOLATIONS {
                self.examples.push(describe());
            }
        }
    }

    fn finish(self, suite: Suite) -> SuiteVerdict {
        SuiteVerdict {
            name: suite.name().to_string(),
            passed: self.violations == 0,
            checked: self.checked,
            violations: self.violations,
            examples: self.examples,
        }
    }
}

pub fn run_suite(suite: Suite, bounds: &VerifyBounds) -> Result<SuiteVerdict> {
    let tally = match suite {
        Suite::Oracle => oracle_suite(bounds)?,
        Suite::Composition => composition_suite(bounds)?,
        Suite::Monotonicity => monotonicity_suite(bounds)?,
        Suite::MainLemma => main_lemma_suite(bounds)?,
        Suite::TailGap => tail_gap_suite(bounds)?,
        Suite::SingleCrossing => single_crossing_suite(bounds)?,
        Suite::Eulerian => eulerian_suite(bounds)?,
        Suite::Sampler => sampler_suite(bounds)?,
    };
    Ok(tally.finish(suite))
}

pub fn run_all(bounds: &VerifyBounds) -> Result<Vec<SuiteVerdict>> {
    Suite::ALL.iter().map(|&s| run_suite(s, bounds)).collect()
}

fn test_packs() -> Vec<PackDistribution> {
    vec![
        PackDistribution::point(2).expect("valid"),
        PackDistribution::point(3).expect("valid"),
        "2:1/2,3:1/2".parse().expect("valid"),
    ]
}

fn oracle_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.oracle_n {
        for m in 1..=b.oracle_m {
            let ok = oracle_digit_law(n, m)? == q_nm_u64(n, m)?;
            t.check(ok, || format!("digit oracle differs from Q_{{{n},{m}}}"));
        }
    }
    for n in 1..=b.convolution_n {
        for p in test_packs() {
            for k in 0..=b.convolution_k {
                let ok = oracle_convolution(n, &p, k)? == law_after_k(n, &p, k)?;
                t.check(ok, || format!("convolution oracle differs: n={n}, p={p}, k={k}"));
            }
        }
    }
    Ok(t)
}

fn composition_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    let point = |m| PackDistribution::point(m).expect("valid");
    for n in 1..=b.composition_n {
        for (m1, m2) in [(2u64, 2u64), (2, 3), (3, 2)] {
            let composed = oracle_convolution_sequence(n, &[point(m1), point(m2)])?;
            let ok = composed == q_nm_u64(n, m1 * m2)?;
            t.check(ok, || format!("Q_{{{n},{m1}}} * Q_{{{n},{m2}}} != Q_{{{n},{}}}", m1 * m2));
        }
    }
    Ok(t)
}

/// `q_nm(n, m)` for `m = 1..=m_max`, index `m - 1`.
fn law_column(n: usize, m_max: u64) -> Result<Vec<RisingSeqLaw>> {
    (1..=m_max).map(|m| q_nm_u64(n, m)).collect()
}

fn uniform_prob(n: usize) -> BigRational {
    BigRational::new(1.into(), factorial(n).into())
}

fn monotonicity_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.grid_n {
        let laws = law_column(n, b.grid_m + 1)?;
        for m in 1..=b.grid_m as usize {
            let ok = tv_to_uniform(&laws[m]) <= tv_to_uniform(&laws[m - 1]);
            t.check(ok, || format!("TV(Q_{{{n},{}}}) > TV(Q_{{{n},{m}}})", m + 1));
        }
    }
    Ok(t)
}

fn main_lemma_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.grid_n {
        let u = uniform_prob(n);
        let laws = law_column(n, b.grid_m + 1)?;
        for m in 1..=b.grid_m as usize {
            for r in 1..=n {
                let q = laws[m - 1].class_prob(r).into_ratio();
                if q <= u {
                    let next = laws[m].class_prob(r).into_ratio();
                    t.check(q <= next, || {
                        format!("below uniform but decreasing: n={n}, m={m}, r={r}")
                    });
                } else {
                    for j in m..=b.grid_m as usize {
                        let later = laws[j - 1].class_prob(r).into_ratio();
                        t.check(later > u, || {
                            format!("left the above-uniform set: n={n}, m={m}, j={j}, r={r}")
                        });
                    }
                }
            }
        }
    }
    Ok(t)
}

fn tail_gap_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.grid_n {
        for m in 1..=b.grid_m {
            for r in 1..=n {
                let gap = tail_set_gap(n, &BigUint::from(m), r)?;
                t.check(gap >= BigRational::from_integer(0.into()), || {
                    format!("negative tail gap {gap}: n={n}, m={m}, r={r}")
                });
            }
        }
    }
    Ok(t)
}

fn single_crossing_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.grid_n {
        let u = uniform_prob(n);
        for law in law_column(n, b.grid_m)? {
            let above: Vec<bool> = (1..=n).map(|r| *law.class_prob(r).as_ratio() >= u).collect();
            let crossings = above.windows(2).filter(|w| w[0] != w[1]).count();
            let ok = above[0] && crossings <= 1;
            t.check(ok, || format!("n={n}: pattern {above:?} is not a single crossing"));
        }
    }
    Ok(t)
}

fn eulerian_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 1..=b.eulerian_n {
        let row = shared_row(n)?;
        let mut counts = vec![BigUint::from(0u8); n];
        for a in all_arrangements(n) {
            counts[rising_sequences(&a) - 1] += 1u8;
        }
        for (r, c) in counts.iter().enumerate() {
            t.check(c == row.count(r + 1), || {
                format!("A({n},{}) = {} but brute force gives {c}", r + 1, row.count(r + 1))
            });
        }
    }
    Ok(t)
}

/// Chi-square significance level for the sampler suite.
pub const SAMPLER_SIGNIFICANCE: f64 = 1e-3;

fn sampler_suite(b: &VerifyBounds) -> Result<Tally> {
    let mut t = Tally::default();
    let n = b.sampler_n;
    for (i, (p, k)) in test_packs().into_iter().zip([2usize, 1, 2]).enumerate() {
        let hist = sample_histogram(n, &p, k, b.sampler_samples, b.seed.wrapping_add(i as u64));
        let test = chi_square_test(&hist, &law_after_k(n, &p, k)?)?;
        t.check(test.passes(SAMPLER_SIGNIFICANCE), || {
            format!(
                "chi-square rejects n={n}, p={p}, k={k}: statistic {:.3}, dof {}, p-value {:.3e}",
                test.statistic, test.dof, test.p_value
            )
        });
    }
    Ok(t)
}
