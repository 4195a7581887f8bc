//! Monte-Carlo simulation of the physical shuffle and empirical total
//! variation over rising-sequence classes.

use std::io::Write;

use num_bigint::{BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::combinatorics::{rising_sequences, DeckArrangement, EulerianRow};
use crate::error::{Result, RiffleError};
use crate::numeric::parts_to_f64;
use crate::shuffle_laws::{PackDistribution, RisingSeqLaw};

/// Seed plus stream index; equal pairs give identical sample streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub split: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, split: 0 }
    }

    pub fn split(self, split: u64) -> Self {
        Self { split, ..self }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.split);
        rng
    }
}

/// Applies one `m`-shuffle to `deck` in place: cut into `m` packs with
/// multinomial sizes, then drop cards from the bottoms of the packs with
/// probability proportional to current pack sizes.
pub fn riffle<R: Rng + ?Sized>(deck: &mut Vec<u32>, m: u64, rng: &mut R) {
    let n = deck.len();
    if m <= 1 || n <= 1 {
        return;
    }
    let m = m as usize;
    let mut sizes = vec![0usize; m];
    for _ in 0..n {
        sizes[rng.gen_range(0..m)] += 1;
    }
    // pack j is deck[ends[j] - sizes[j]..ends[j]]; its bottom card is deck[ends[j] - 1]
    let mut ends = Vec::with_capacity(m);
    let mut acc = 0;
    for &s in &sizes {
        acc += s;
        ends.push(acc);
    }
    let mut remaining = sizes;
    let mut pile = Vec::with_capacity(n);
    for left in (1..=n).rev() {
        let mut u = rng.gen_range(0..left);
        let mut j = 0;
        while u >= remaining[j] {
            u -= remaining[j];
            j += 1;
        }
        remaining[j] -= 1;
        ends[j] -= 1;
        pile.push(deck[ends[j]]);
    }
    // first card dropped ends up at the bottom
    pile.reverse();
    *deck = pile;
}

/// One `m`-shuffle of the ordered deck.
pub fn sample_m_shuffle<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> DeckArrangement {
    let mut deck: Vec<u32> = (1..=n as u32).collect();
    riffle(&mut deck, m, rng);
    DeckArrangement::from_vec_unchecked(deck)
}

/// Exact sampler for the pack count of a `p`-shuffle.
#[derive(Clone, Debug)]
pub struct PackSampler {
    values: Vec<u64>,
    cumulative: Vec<BigUint>,
    den: BigUint,
}

impl PackSampler {
    pub fn new(p: &PackDistribution) -> Self {
        let den = p
            .atoms()
            .iter()
            .fold(BigUint::from(1u8), |acc, (_, w)| {
                num_integer::Integer::lcm(&acc, w.denom().magnitude())
            });
        let mut acc = BigUint::from(0u8);
        let mut cumulative = Vec::new();
        let mut values = Vec::new();
        for (m, w) in p.atoms() {
            acc += w.numer().magnitude() * (&den / w.denom().magnitude());
            cumulative.push(acc.clone());
            values.push(*m);
        }
        Self {
            values,
            cumulative,
            den,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let u = rng.gen_biguint_below(&self.den);
        let idx = self.cumulative.partition_point(|c| *c <= u);
        self.values[idx]
    }
}

/// `k` independent `p`-shuffles applied to the ordered deck.
pub fn sample_chain<R: Rng + ?Sized>(
    n: usize,
    p: &PackDistribution,
    k: usize,
    rng: &mut R,
) -> DeckArrangement {
    sample_chain_with(n, &PackSampler::new(p), k, rng)
}

fn sample_chain_with<R: Rng + ?Sized>(
    n: usize,
    sampler: &PackSampler,
    k: usize,
    rng: &mut R,
) -> DeckArrangement {
    let mut deck: Vec<u32> = (1..=n as u32).collect();
    for _ in 0..k {
        let m = sampler.sample(rng);
        riffle(&mut deck, m, rng);
    }
    DeckArrangement::from_vec_unchecked(deck)
}

/// Sample counts per rising-sequence class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalHistogram {
    n: usize,
    counts: Vec<u64>,
    samples: u64,
}

impl EmpiricalHistogram {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n],
            samples: 0,
        }
    }

    pub fn record(&mut self, r: usize) {
        self.counts[r - 1] += 1;
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &EmpiricalHistogram) {
        assert_eq!(self.n, other.n, "histograms for different deck sizes");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.samples += other.samples;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, r: usize) -> u64 {
        self.counts[r - 1]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }
}

/// Samples per work chunk; chunk `i` draws from stream `i`, so results do
/// not depend on the thread count.
pub const CHUNK_SAMPLES: u64 = 8192;

/// Histogram of `samples` runs of [`sample_chain`], computed in parallel.
pub fn sample_histogram(
    n: usize,
    p: &PackDistribution,
    k: usize,
    samples: u64,
    seed: u64,
) -> EmpiricalHistogram {
    let sampler = PackSampler::new(p);
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = RngSeed::new(seed).split(chunk).rng();
            let len = CHUNK_SAMPLES.min(samples - chunk * CHUNK_SAMPLES);
            let mut hist = EmpiricalHistogram::new(n);
            for _ in 0..len {
                hist.record(rising_sequences(&sample_chain_with(n, &sampler, k, &mut rng)));
            }
            hist
        })
        .reduce(
            || EmpiricalHistogram::new(n),
            |mut a, b| {
                a.merge(&b);
                a
            },
        )
}

/// Rising-sequence counts of `samples` runs in trial order. Uses the same
/// chunk streams as [`sample_histogram`], so both agree for equal seeds.
pub fn sample_rising_sequences(
    n: usize,
    p: &PackDistribution,
    k: usize,
    samples: u64,
    seed: u64,
) -> Vec<usize> {
    let sampler = PackSampler::new(p);
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = RngSeed::new(seed).split(chunk).rng();
            let len = CHUNK_SAMPLES.min(samples - chunk * CHUNK_SAMPLES);
            (0..len)
                .map(|_| rising_sequences(&sample_chain_with(n, &sampler, k, &mut rng)))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Plug-in TV estimate with a delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl TvEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// `(1/2) sum_r | counts[r]/N - count[r]/n! |`, valid because the target law
/// is constant on classes. The standard error linearizes the absolute values
/// around the observed signs: `sqrt(Var(s_R) / (4N))`.
pub fn empirical_tv(hist: &EmpiricalHistogram, row: &EulerianRow) -> Result<TvEstimate> {
    empirical_tv_against(hist, |r| row.fraction(r), row.n())
}

/// Plug-in TV between the histogram and an arbitrary class-mass vector.
pub fn empirical_tv_against(
    hist: &EmpiricalHistogram,
    class_mass: impl Fn(usize) -> f64,
    n: usize,
) -> Result<TvEstimate> {
    if hist.samples == 0 {
        return Err(RiffleError::Domain("empty histogram".into()));
    }
    if hist.n != n {
        return Err(RiffleError::Domain(format!(
            "histogram for n = {} against target for n = {n}",
            hist.n
        )));
    }
    let total = hist.samples as f64;
    let mut tv = 0.0;
    let mut mean_sign = 0.0;
    let mut mean_sign_sq = 0.0;
    for r in 1..=n {
        let observed = hist.count(r) as f64 / total;
        let diff = observed - class_mass(r);
        tv += diff.abs();
        let s = diff.signum() * (diff != 0.0) as u8 as f64;
        mean_sign += observed * s;
        mean_sign_sq += observed * s * s;
    }
    let var = (mean_sign_sq - mean_sign * mean_sign).max(0.0);
    Ok(TvEstimate {
        estimate: tv / 2.0,
        std_error: (var / (4.0 * total)).sqrt(),
    })
}

/// Pearson goodness-of-fit result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Samples landing in classes the law gives probability zero.
    pub impossible: u64,
}

impl ChiSquareTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.impossible == 0 && self.p_value >= significance
    }
}

/// Chi-square test of a class histogram against an exact law. Classes with
/// expected count below 5 are pooled.
pub fn chi_square_test(hist: &EmpiricalHistogram, law: &RisingSeqLaw) -> Result<ChiSquareTest> {
    if hist.n != law.n() {
        return Err(RiffleError::Domain("histogram and law differ in n".into()));
    }
    if hist.samples == 0 {
        return Err(RiffleError::Domain("empty histogram".into()));
    }
    let total = hist.samples as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut impossible = 0;
    for r in 1..=law.n() {
        let mass = law.numerators()[r - 1].clone() * law.row().count(r);
        let expected = parts_to_f64(&mass, law.denominator()) * total;
        let observed = hist.count(r) as f64;
        if mass == BigUint::from(0u8) {
            impossible += hist.count(r);
            continue;
        }
        if expected < 5.0 {
            pooled.0 += observed;
            pooled.1 += expected;
        } else {
            bins.push((observed, expected));
        }
    }
    if pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive dof")
            .sf(statistic)
    };
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
        impossible,
    })
}

/// Writes `trial,r` rows, one per sample.
pub fn write_sample_csv<W: Write>(mut out: W, rising: &[usize]) -> std::io::Result<()> {
    writeln!(out, "trial,r")?;
    for (trial, r) in rising.iter().enumerate() {
        writeln!(out, "{trial},{r}")?;
    }
    Ok(())
}
