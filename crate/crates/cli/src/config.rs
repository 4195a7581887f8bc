//! Command-line arguments and the validated, canonical [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use riffle_core::cutoff::families;
use riffle_core::verify::Suite;
use riffle_core::PackDistribution;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Exact TV profile over a range of step counts.
    Profile,
    /// Cutoff time, window and condition values.
    Cutoff,
    /// Exact property suites.
    Verify,
    /// TV of the Poissonized chain over a time grid.
    Poisson,
    /// Monte Carlo rising-sequence samples.
    Sample,
    /// Precompute and persist Eulerian rows.
    Cache,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "riffle", version, about = "Mixing profiles and cutoff analysis for generalized riffle shuffles")]
pub struct Cli {
    pub command: Command,
    /// Deck size.
    #[arg(long)]
    pub n: Option<u64>,
    /// Deck-size grid `a:b:step` (cutoff only).
    #[arg(long = "n-grid")]
    pub n_grid: Option<String>,
    /// Pack distribution `m:prob,...` with exact fractions, or a family:
    /// `@log-grid-inverse-square`, `@n-power:ALPHA`, `@log-power:ALPHA`.
    #[arg(long)]
    pub p: Option<String>,
    /// Step range `a..b` (inclusive) or a single step count.
    #[arg(long)]
    pub k: Option<String>,
    /// Time grid `a:b:step` (inclusive).
    #[arg(long)]
    pub t: Option<String>,
    /// Poisson truncation tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long = "N")]
    pub samples: Option<u64>,
    /// Truncation level for `log X`, an expression in `logn` and `loglogn`.
    #[arg(long = "a-n")]
    pub a_n: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Eulerian row cache directory.
    #[arg(long, env = "RIFFLE_CACHE_DIR")]
    pub cache: Option<PathBuf>,
    /// Verification suite; all suites when omitted.
    #[arg(long)]
    pub suite: Option<String>,
    /// Read the whole configuration from a canonical JSON file instead of
    /// the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the canonical configuration as JSON and exit.
    #[arg(long = "show-config")]
    pub show_config: bool,
}

/// Pack distribution given directly or as a family indexed by `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum PackSpec {
    Fixed(PackDistribution),
    LogGridInverseSquare,
    PowerOfN(f64),
    PowerOfLogN(f64),
}

impl PackSpec {
    pub fn resolve(&self, n: u64) -> riffle_core::Result<PackDistribution> {
        match self {
            PackSpec::Fixed(p) => Ok(p.clone()),
            PackSpec::LogGridInverseSquare => families::log_grid_inverse_square(n),
            PackSpec::PowerOfN(a) => families::power_of_n(n, *a),
            PackSpec::PowerOfLogN(a) => families::power_of_log_n(n, *a),
        }
    }
}

impl fmt::Display for PackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackSpec::Fixed(p) => write!(f, "{p}"),
            PackSpec::LogGridInverseSquare => f.write_str("@log-grid-inverse-square"),
            PackSpec::PowerOfN(a) => write!(f, "@n-power:{a}"),
            PackSpec::PowerOfLogN(a) => write!(f, "@log-power:{a}"),
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, CliError> {
    match s.parse::<f64>() {
        Ok(a) if a.is_finite() && a > 0.0 => Ok(a),
        _ => Err(CliError::Config(format!("family exponent must be a positive number, got {s:?}"))),
    }
}

impl FromStr for PackSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "@log-grid-inverse-square" {
            Ok(PackSpec::LogGridInverseSquare)
        } else if let Some(a) = s.strip_prefix("@n-power:") {
            Ok(PackSpec::PowerOfN(parse_alpha(a)?))
        } else if let Some(a) = s.strip_prefix("@log-power:") {
            Ok(PackSpec::PowerOfLogN(parse_alpha(a)?))
        } else if s.starts_with('@') {
            Err(CliError::Config(format!("unknown family {s:?}")))
        } else {
            Ok(PackSpec::Fixed(s.parse()?))
        }
    }
}

/// Inclusive step range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for KRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--k expects `a..b` or `a`, got {s:?}"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
            None => (s, s),
        };
        let start: usize = a.trim().parse().map_err(|_| bad())?;
        let end: usize = b.trim().parse().map_err(|_| bad())?;
        if start > end {
            return Err(CliError::Config(format!("empty step range {s:?}")));
        }
        Ok(KRange { start, end })
    }
}

/// Inclusive integer grid `a:b:step`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGrid {
    pub start: u64,
    pub end: u64,
    pub step: u64,
}

impl NGrid {
    pub fn values(&self) -> Vec<u64> {
        (self.start..=self.end).step_by(self.step as usize).collect()
    }
}

impl FromStr for NGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--n-grid expects `a:b:step`, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(bad());
        };
        let grid = NGrid {
            start: a.trim().parse().map_err(|_| bad())?,
            end: b.trim().parse().map_err(|_| bad())?,
            step: step.trim().parse().map_err(|_| bad())?,
        };
        if grid.step == 0 || grid.start > grid.end || grid.start < 2 {
            return Err(CliError::Config(format!("invalid grid {s:?}: need 2 <= a <= b, step > 0")));
        }
        Ok(grid)
    }
}

/// Inclusive float grid `a:b:step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TGrid {
    /// `a + i step` for `i = 0..`, up to `b` with a relative slack of `1e-9`
    /// steps so grids like `0:1:0.1` include their end point.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for TGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--t expects `a:b:step` or a single time, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let grid = match parts.as_slice() {
            [a] => TGrid { start: num(a)?, end: num(a)?, step: 1.0 },
            [a, b, step] => TGrid { start: num(a)?, end: num(b)?, step: num(step)? },
            _ => return Err(bad()),
        };
        let finite = grid.start.is_finite() && grid.end.is_finite() && grid.step.is_finite();
        if !finite || grid.start < 0.0 || grid.start > grid.end || grid.step <= 0.0 {
            return Err(CliError::Config(format!("invalid time grid {s:?}")));
        }
        Ok(grid)
    }
}

/// Evaluates an `a_n` expression. Integer literals are read as floats so
/// `3/2*logn` means `1.5 logn`.
pub fn eval_a_n(expr: &str, n: u64) -> Result<f64, CliError> {
    use evalexpr::{ContextWithMutableVariables, HashMapContext, Value};
    let log_n = (n as f64).ln();
    let mut ctx = HashMapContext::new();
    ctx.set_value("logn".into(), Value::Float(log_n))
        .and_then(|_| ctx.set_value("loglogn".into(), Value::Float(log_n.ln())))
        .and_then(|_| ctx.set_value("n".into(), Value::Float(n as f64)))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let value = evalexpr::eval_number_with_context(&floatify_literals(expr), &ctx)
        .map_err(|e| CliError::Config(format!("cannot evaluate --a-n {expr:?}: {e}")))?;
    if !value.is_finite() || value <= 0.0 {
        return Err(CliError::Config(format!("--a-n {expr:?} evaluates to {value} at n = {n}")));
    }
    Ok(value)
}

/// Appends `.0` to bare integer literals.
fn floatify_literals(expr: &str) -> String {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = String::with_capacity(expr.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let in_word = i > 0 && (chars[i - 1].is_alphanumeric() || chars[i - 1] == '_' || chars[i - 1] == '.');
        // exponent digits as in `1e-9`
        let in_exponent = i > 2
            && matches!(chars[i - 1], '+' | '-')
            && matches!(chars[i - 2], 'e' | 'E')
            && (chars[i - 3].is_ascii_digit() || chars[i - 3] == '.');
        if c.is_ascii_digit() && !in_word && !in_exponent {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.extend(&chars[start..i]);
            let continues = i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E');
            if !continues {
                out.push_str(".0");
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Fully validated configuration. Serializes to a canonical JSON form that
/// parses back to an equal value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: Option<u64>,
    pub n_grid: Option<NGrid>,
    pub p: Option<String>,
    pub k: Option<KRange>,
    pub t: Option<TGrid>,
    pub tol: f64,
    pub seed: u64,
    pub samples: u64,
    pub a_n: Option<String>,
    pub format: Format,
    pub cache: Option<PathBuf>,
    pub suite: Option<Suite>,
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: u64 = 100_000;

impl RunConfig {
    /// Checks everything that can be checked without computing.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let config = Self::from_json(&text)?;
            if config.command != cli.command {
                return Err(CliError::Config(format!(
                    "config file is for {:?}, not {:?}",
                    config.command, cli.command
                )));
            }
            return Ok(config);
        }
        let p = cli.p.as_deref().map(PackSpec::from_str).transpose()?;
        let k = cli.k.as_deref().map(KRange::from_str).transpose()?;
        let t = cli.t.as_deref().map(TGrid::from_str).transpose()?;
        let n_grid = cli.n_grid.as_deref().map(NGrid::from_str).transpose()?;
        let suite = cli.suite.as_deref().map(Suite::from_str).transpose()?;
        let tol = cli.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("--tol must lie in (0, 1), got {tol}")));
        }
        let default_format = match cli.command {
            Command::Profile | Command::Poisson | Command::Sample => Format::Csv,
            Command::Cutoff | Command::Verify | Command::Cache => Format::Json,
        };
        let config = RunConfig {
            command: cli.command,
            n: cli.n,
            n_grid,
            p: p.as_ref().map(|p| p.to_string()),
            k,
            t,
            tol,
            seed: cli.seed.unwrap_or(0),
            samples: cli.samples.unwrap_or(DEFAULT_SAMPLES),
            a_n: cli.a_n.clone(),
            format: cli.format.unwrap_or(default_format),
            cache: cli.cache.clone(),
            suite,
        };
        config.check_required()?;
        if let (Some(expr), Some(n)) = (&config.a_n, config.n.or(config.n_grid.map(|g| g.start))) {
            eval_a_n(expr, n)?;
        }
        Ok(config)
    }

    fn check_required(&self) -> Result<(), CliError> {
        let need = |ok: bool, flag: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!("{:?} requires {flag}", self.command).to_lowercase()))
            }
        };
        match self.command {
            Command::Profile => {
                need(self.n.is_some(), "--n")?;
                need(self.p.is_some(), "--p")?;
                need(self.k.is_some(), "--k")
            }
            Command::Cutoff => {
                need(self.n.is_some() || self.n_grid.is_some(), "--n or --n-grid")?;
                need(!(self.n.is_some() && self.n_grid.is_some()), "only one of --n and --n-grid")?;
                need(self.p.is_some(), "--p")?;
                if self.n == Some(0) || self.n == Some(1) {
                    return Err(CliError::Config("cutoff requires n >= 2".into()));
                }
                Ok(())
            }
            Command::Verify => Ok(()),
            Command::Poisson => {
                need(self.n.is_some(), "--n")?;
                need(self.p.is_some(), "--p")?;
                need(self.t.is_some(), "--t")
            }
            Command::Sample => {
                need(self.n.is_some(), "--n")?;
                need(self.p.is_some(), "--p")?;
                need(self.k.is_some(), "--k")?;
                need(self.samples > 0, "--N > 0")
            }
            Command::Cache => need(self.cache.is_some(), "--cache or RIFFLE_CACHE_DIR"),
        }?;
        if matches!(self.command, Command::Profile | Command::Poisson | Command::Sample) {
            let n = self.n.expect("checked above");
            if n == 0 || n > u32::MAX as u64 {
                return Err(CliError::Config(format!("deck size {n} out of range")));
            }
        }
        Ok(())
    }

    pub fn pack_spec(&self) -> Result<PackSpec, CliError> {
        self.p
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --p".into()))?
            .parse()
    }

    /// Deck size as `usize`; present for deck commands after validation.
    pub fn deck(&self) -> usize {
        self.n.expect("validated") as usize
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = &config.p {
            p.parse::<PackSpec>()?;
        }
        config.check_required()?;
        Ok(config)
    }
}
