//! Exact big-integer foundations: arrangements, rising sequences, binomials
//! with huge upper arguments, and Eulerian rows with an on-disk cache.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Result, RiffleError};
use crate::numeric::parts_to_f64;

/// Exact nonnegative count.
pub type BigCount = BigUint;

/// An exact probability: a reduced rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(BigRational);

impl ExactProb {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(RiffleError::Domain(format!(
                "probability {value} outside [0, 1]"
            )));
        }
        Ok(Self(value))
    }

    pub fn from_parts(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(RiffleError::Domain("zero denominator".into()));
        }
        Self::new(BigRational::new(
            BigInt::from(num.into()),
            BigInt::from(den),
        ))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        crate::numeric::ratio_to_f64(&self.0)
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// A deck arrangement: card values `1..=n` listed top to bottom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeckArrangement(Vec<u32>);

impl DeckArrangement {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            let idx = (v as usize).wrapping_sub(1);
            if idx >= n {
                return Err(RiffleError::InvalidArrangement(format!(
                    "value {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(RiffleError::InvalidArrangement(format!(
                    "value {v} appears twice"
                )));
            }
        }
        Ok(Self(values))
    }

    /// Caller guarantees `values` is a permutation of `1..=n`.
    pub(crate) fn from_vec_unchecked(values: Vec<u32>) -> Self {
        debug_assert!(Self::new(values.clone()).is_ok());
        Self(values)
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn into_values(self) -> Vec<u32> {
        self.0
    }

    /// `positions()[v - 1]` is the 0-based position of card `v`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            pos[v as usize - 1] = i;
        }
        pos
    }

    /// Arrangement obtained by re-dealing `self` according to `shuffle`:
    /// the card at position `i` afterwards is the card that sat at position
    /// `shuffle[i]` before.
    pub fn then(&self, shuffle: &DeckArrangement) -> DeckArrangement {
        assert_eq!(self.len(), shuffle.len());
        DeckArrangement(
            shuffle
                .0
                .iter()
                .map(|&src| self.0[src as usize - 1])
                .collect(),
        )
    }

    /// Lexicographic rank in `0..n!`; only meaningful for small `n`.
    pub fn rank(&self) -> usize {
        let n = self.0.len();
        let mut rank = 0usize;
        for i in 0..n {
            let smaller = self.0[i + 1..].iter().filter(|&&v| v < self.0[i]).count();
            rank = rank * (n - i) + smaller;
        }
        rank
    }
}

impl FromStr for DeckArrangement {
    type Err = RiffleError;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| RiffleError::InvalidArrangement(format!("bad card value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

/// Number of rising sequences: one plus the number of values `v` for which
/// card `v + 1` lies above card `v`.
pub fn rising_sequences(arrangement: &DeckArrangement) -> usize {
    let pos = arrangement.positions();
    if pos.is_empty() {
        return 0;
    }
    1 + pos.windows(2).filter(|w| w[1] < w[0]).count()
}

/// All arrangements of `n` cards in lexicographic order (rank order).
pub fn all_arrangements(n: usize) -> Vec<DeckArrangement> {
    let mut out = Vec::new();
    let mut current: Vec<u32> = (1..=n as u32).collect();
    loop {
        out.push(DeckArrangement(current.clone()));
        // next lexicographic permutation
        let Some(i) = (1..current.len()).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..current.len())
            .rev()
            .find(|&j| current[j] > current[i - 1])
            .expect("successor exists");
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

/// Exact `C(top, k)`; zero when `top < k`.
pub fn binomial_big(top: &BigUint, k: u64) -> BigUint {
    if *top < BigUint::from(k) {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= top - i;
        acc /= i + 1;
    }
    acc
}

/// Counts of `n`-card arrangements by number of rising sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerianRow {
    n: usize,
    counts: Vec<BigUint>,
}

impl EulerianRow {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of arrangements with exactly `r` rising sequences, `1 <= r <= n`.
    pub fn count(&self, r: usize) -> &BigUint {
        &self.counts[r - 1]
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    /// `count(r) / n!` as a float.
    pub fn fraction(&self, r: usize) -> f64 {
        parts_to_f64(self.count(r), &factorial(self.n))
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.counts.len() != self.n {
            return Err(format!("expected {} counts, found {}", self.n, self.counts.len()));
        }
        if !self.counts[0].is_one() || !self.counts[self.n - 1].is_one() {
            return Err("end counts must be 1".into());
        }
        for r in 0..self.n / 2 {
            if self.counts[r] != self.counts[self.n - 1 - r] {
                return Err(format!("row not symmetric at r = {}", r + 1));
            }
        }
        if self.total() != factorial(self.n) {
            return Err("row does not sum to n!".into());
        }
        Ok(())
    }

    fn extend_to(&self, target: usize) -> EulerianRow {
        let mut row = self.counts.clone();
        for k in self.n + 1..=target {
            let mut next = vec![BigUint::zero(); k];
            for r in 1..=k {
                let mut v = BigUint::zero();
                if r < k {
                    v += &row[r - 1] * r;
                }
                if r >= 2 {
                    v += &row[r - 2] * (k - r + 1);
                }
                next[r - 1] = v;
            }
            row = next;
        }
        EulerianRow {
            n: target,
            counts: row,
        }
    }

    /// Decimal text form: `n` on the first line, then `count(r)` for
    /// `r = 1..=n`, one per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.n)?;
        for c in &self.counts {
            writeln!(out, "{c}")?;
        }
        Ok(())
    }

    /// Parses and validates the decimal text form.
    pub fn read_text<R: BufRead>(input: R) -> std::result::Result<EulerianRow, String> {
        let mut lines = input.lines();
        let n: usize = lines
            .next()
            .ok_or("empty file")?
            .map_err(|e| e.to_string())?
            .trim()
            .parse()
            .map_err(|e| format!("bad header: {e}"))?;
        if n == 0 {
            return Err("n must be positive".into());
        }
        let mut counts = Vec::with_capacity(n);
        for line in lines {
            let line = line.map_err(|e| e.to_string())?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            counts.push(
                line.parse::<BigUint>()
                    .map_err(|e| format!("bad count {line:?}: {e}"))?,
            );
        }
        let row = EulerianRow { n, counts };
        row.check()?;
        Ok(row)
    }
}

/// Computes the row for `n` with the two-term Eulerian recurrence.
pub fn eulerian_row(n: usize) -> Result<EulerianRow> {
    if n == 0 {
        return Err(RiffleError::Domain("eulerian_row requires n >= 1".into()));
    }
    Ok(base_row().extend_to(n))
}

fn base_row() -> EulerianRow {
    EulerianRow {
        n: 1,
        counts: vec![BigUint::one()],
    }
}

/// Memoizing row store, optionally persisted to `dir/eulerian_<n>.txt`.
///
/// Reads are concurrent; file writes are serialized through one lock and
/// land via rename so readers never observe a partial file.
#[derive(Debug)]
pub struct EulerianCache {
    dir: Option<PathBuf>,
    persist_from: usize,
    rows: RwLock<HashMap<usize, Arc<EulerianRow>>>,
    writer: Mutex<()>,
}

pub const DEFAULT_PERSIST_THRESHOLD: usize = 32;

impl EulerianCache {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            persist_from: usize::MAX,
            rows: RwLock::new(HashMap::new()),
            writer: Mutex::new(()),
        }
    }

    /// Rows with `n >= persist_from` are read from and written to `dir`.
    pub fn with_dir(dir: impl Into<PathBuf>, persist_from: usize) -> Self {
        Self {
            dir: Some(dir.into()),
            persist_from,
            ..Self::in_memory()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, n: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("eulerian_{n}.txt")))
    }

    pub fn row(&self, n: usize) -> Result<Arc<EulerianRow>> {
        if n == 0 {
            return Err(RiffleError::Domain("eulerian_row requires n >= 1".into()));
        }
        if let Some(row) = self.rows.read().expect("cache lock").get(&n) {
            return Ok(Arc::clone(row));
        }
        let persist = n >= self.persist_from && self.dir.is_some();
        if persist {
            if let Some(row) = self.load(n)? {
                return Ok(self.remember(row));
            }
        }
        let row = self.nearest_below(n).extend_to(n);
        if persist {
            self.store(&row)?;
        }
        Ok(self.remember(row))
    }

    /// Reads a cached row file; `Ok(None)` when absent or invalid.
    fn load(&self, n: usize) -> Result<Option<EulerianRow>> {
        let Some(path) = self.path_for(n) else {
            return Ok(None);
        };
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match EulerianRow::read_text(BufReader::new(file)) {
            Ok(row) if row.n == n => Ok(Some(row)),
            // corrupt or mismatched: recompute and overwrite
            _ => Ok(None),
        }
    }

    fn store(&self, row: &EulerianRow) -> Result<()> {
        let path = self.path_for(row.n).expect("dir set");
        let dir = path.parent().expect("file in dir");
        let _guard = self.writer.lock().expect("writer lock");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".eulerian_{}.txt.{}.tmp",
            row.n,
            std::process::id()
        ));
        {
            let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
            row.write_text(&mut f)?;
            f.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn nearest_below(&self, n: usize) -> Arc<EulerianRow> {
        self.rows
            .read()
            .expect("cache lock")
            .iter()
            .filter(|(&k, _)| k <= n)
            .max_by_key(|(&k, _)| k)
            .map(|(_, r)| Arc::clone(r))
            .unwrap_or_else(|| Arc::new(base_row()))
    }

    fn remember(&self, row: EulerianRow) -> Arc<EulerianRow> {
        let mut rows = self.rows.write().expect("cache lock");
        Arc::clone(rows.entry(row.n).or_insert_with(|| Arc::new(row)))
    }
}

static GLOBAL_CACHE: OnceLock<EulerianCache> = OnceLock::new();

/// Installs the process-wide cache backed by `dir`. Returns `false` if the
/// global cache was already initialized.
pub fn init_global_cache(dir: impl Into<PathBuf>, persist_from: usize) -> bool {
    GLOBAL_CACHE
        .set(EulerianCache::with_dir(dir, persist_from))
        .is_ok()
}

/// The process-wide cache (memory-only unless [`init_global_cache`] ran first).
pub fn global_cache() -> &'static EulerianCache {
    GLOBAL_CACHE.get_or_init(EulerianCache::in_memory)
}

pub fn shared_row(n: usize) -> Result<Arc<EulerianRow>> {
    global_cache().row(n)
}

/// `max_h | R_{n,h}/n! - exp(-6h^2/n) / sqrt(pi n / 6) |` with `r = n/2 + h`.
pub fn tanny_max_deviation(row: &EulerianRow) -> f64 {
    let n = row.n() as f64;
    let scale = (std::f64::consts::PI * n / 6.0).sqrt();
    (1..=row.n())
        .map(|r| {
            let h = r as f64 - n / 2.0;
            let approx = (-6.0 * h * h / n).exp() / scale;
            (row.fraction(r) - approx).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Collects cards in passes over the deck: each pass picks up the next
    /// wanted value whenever it is encountered.
    fn rising_sequences_by_passes(arr: &DeckArrangement) -> usize {
        let n = arr.len() as u32;
        let mut next = 1;
        let mut passes = 0;
        while next <= n {
            passes += 1;
            for &v in arr.values() {
                if v == next {
                    next += 1;
                }
            }
        }
        passes
    }

    fn inverse_descents_plus_one(arr: &DeckArrangement) -> usize {
        let mut inv = vec![0u32; arr.len()];
        for (i, &v) in arr.values().iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        1 + inv.windows(2).filter(|w| w[0] > w[1]).count()
    }

    #[test]
    fn rising_sequences_worked_example() {
        let arr: DeckArrangement = "3,1,4,5,7,2,8,9,6".parse().unwrap();
        assert_eq!(rising_sequences(&arr), 3);
    }

    #[test]
    fn rising_sequences_identity_and_reversal() {
        for n in 1..10 {
            assert_eq!(rising_sequences(&DeckArrangement::identity(n)), 1);
            let rev = DeckArrangement::new((1..=n as u32).rev().collect()).unwrap();
            assert_eq!(rising_sequences(&rev), n);
        }
    }

    #[test]
    fn descent_formula_matches_passes_for_small_decks() {
        for n in 1..=6 {
            for arr in all_arrangements(n) {
                let r = rising_sequences(&arr);
                assert_eq!(r, rising_sequences_by_passes(&arr), "{arr:?}");
                assert_eq!(r, inverse_descents_plus_one(&arr), "{arr:?}");
            }
        }
    }

    #[test]
    fn malformed_arrangements_rejected() {
        assert!(DeckArrangement::new(vec![1, 1, 2]).is_err());
        assert!(DeckArrangement::new(vec![0, 1]).is_err());
        assert!(DeckArrangement::new(vec![1, 3]).is_err());
        assert!("1,x".parse::<DeckArrangement>().is_err());
    }

    #[test]
    fn arrangement_enumeration_and_rank() {
        let all = all_arrangements(4);
        assert_eq!(all.len(), 24);
        for (i, a) in all.iter().enumerate() {
            assert_eq!(a.rank(), i);
        }
    }

    #[test]
    fn eulerian_rows_match_brute_force() {
        for n in 1..=8 {
            let row = eulerian_row(n).unwrap();
            let mut brute = vec![0u64; n];
            for arr in all_arrangements(n) {
                brute[rising_sequences(&arr) - 1] += 1;
            }
            let expected: Vec<BigUint> = brute.into_iter().map(BigUint::from).collect();
            assert_eq!(row.counts(), &expected[..], "n = {n}");
        }
    }

    #[test]
    fn eulerian_small_rows() {
        assert_eq!(eulerian_row(1).unwrap().counts(), &[BigUint::one()]);
        let four: Vec<BigUint> = [1u32, 11, 11, 1].into_iter().map(BigUint::from).collect();
        assert_eq!(eulerian_row(4).unwrap().counts(), &four[..]);
        assert_eq!(eulerian_row(6).unwrap().total(), BigUint::from(720u32));
        assert!(eulerian_row(0).is_err());
    }

    #[test]
    fn large_rows_are_symmetric_and_sum_to_factorial() {
        for n in [31, 52, 97] {
            eulerian_row(n).unwrap().check().unwrap();
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_big(&BigUint::from(3u8), 2), BigUint::from(3u8));
        assert_eq!(binomial_big(&BigUint::zero(), 0), BigUint::one());
        assert_eq!(binomial_big(&BigUint::from(2u8), 3), BigUint::zero());
        let top = BigUint::from(1u8) << 4000u32;
        let c = binomial_big(&top, 2);
        assert_eq!(c, (&top * (&top - 1u8)) >> 1u32);
    }

    #[test]
    fn cache_round_trip_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EulerianCache::with_dir(dir.path(), 10);
        let row = cache.row(12).unwrap();
        let path = cache.path_for(12).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("12"));
        assert_eq!(lines.next(), Some("1"));
        assert_eq!(lines.next(), Some("4083"));
        assert_eq!(text.lines().count(), 13);

        // below threshold: not written
        cache.row(9).unwrap();
        assert!(!cache.path_for(9).unwrap().exists());

        // a fresh cache reads the file back
        let fresh = EulerianCache::with_dir(dir.path(), 10);
        assert_eq!(*fresh.row(12).unwrap(), *row);
    }

    #[test]
    fn corrupt_cache_file_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EulerianCache::with_dir(dir.path(), 1);
        let path = cache.path_for(5).unwrap();
        fs::write(&path, "5\n1\n2\n3\n4\n5\n").unwrap();
        let row = cache.row(5).unwrap();
        assert_eq!(*row, eulerian_row(5).unwrap());
        let reread = EulerianRow::read_text(BufReader::new(fs::File::open(&path).unwrap()));
        assert_eq!(reread.unwrap(), *row);
    }

    #[test]
    fn exact_prob_bounds() {
        assert!(ExactProb::from_parts(3u8, 2u8).is_err());
        assert!(ExactProb::from_parts(1u8, 0u8).is_err());
        let p = ExactProb::from_parts(2u8, 4u8).unwrap();
        assert_eq!(p.to_string(), "1/2");
    }

    #[test]
    fn tanny_deviation_shrinks() {
        let d: Vec<f64> = [20, 50, 100, 200]
            .iter()
            .map(|&n| tanny_max_deviation(&eulerian_row(n).unwrap()))
            .collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    }
}
