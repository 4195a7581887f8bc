use std::io::Write;

use num_bigint::BigUint;
use num_traits::Pow;
use riffle_core::combinatorics::{shared_row, EulerianCache};
use riffle_core::continuous::{continuous_cutoff_report, poissonized_law};
use riffle_core::cutoff::{bd_tv_estimate, cutoff_report, lindeberg_value, truncation_report};
use riffle_core::numeric::fmt_sig17;
use riffle_core::sampling::{empirical_tv, sample_rising_sequences, write_sample_csv, EmpiricalHistogram};
use riffle_core::verify::{run_suite, Suite, VerifyBounds};
use riffle_core::{law_after_k, tv_to_uniform, PackDistribution};
use serde_json::{json, Map, Value};

use crate::config::{eval_a_n, Command, Format, RunConfig};
use crate::error::CliError;

/// Whether the run found a property violation.
pub type Outcome = Result<bool, CliError>;

pub fn run(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    match config.command {
        Command::Profile => profile(config, out),
        Command::Cutoff => cutoff(config, out),
        Command::Verify => verify(config, out),
        Command::Poisson => poisson(config, out),
        Command::Sample => sample(config, out),
        Command::Cache => cache(config, out),
    }
}

/// Column names and rows of string cells, written as CSV or as a JSON array
/// of objects.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(csv_cell)).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .map(|c| c.to_string())
                        .zip(row.iter().cloned())
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn write_json(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn sig(x: f64) -> Value {
    Value::String(fmt_sig17(x))
}

fn profile(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let n = config.deck();
    let p = config.pack_spec()?.resolve(n as u64)?;
    let range = config.k.expect("validated");
    let mut table = Table::new(&["k", "tv_exact", "tv_float", "bd_estimate"]);
    for k in range.start..=range.end {
        let tv = tv_to_uniform(&law_after_k(n, &p, k)?);
        let bd = match p.is_point_mass() {
            Some(m) => sig(bd_tv_estimate(n, &Pow::pow(&BigUint::from(m), k))?),
            None => Value::Null,
        };
        table.push(vec![json!(k), json!(tv.to_string()), sig(tv.to_f64()), bd]);
    }
    match config.format {
        Format::Csv => table.write_csv(out)?,
        Format::Json => write_json(
            out,
            &json!({ "n": n, "p": p.to_string(), "rows": table.to_json() }),
        )?,
    }
    Ok(false)
}

const CUTOFF_COLUMNS: [&str; 15] = [
    "n",
    "mu",
    "sigma",
    "t_n",
    "b_n",
    "b_n_continuous",
    "lindeberg_eps1",
    "hyp1",
    "a_n",
    "EY",
    "EZ2",
    "a_n_over_log_n",
    "second_moment_ratio",
    "log_n_over_EY",
    "t_n_truncated",
];

fn cutoff_row(config: &RunConfig, p: &PackDistribution, n: u64) -> Result<Vec<Value>, CliError> {
    let report = cutoff_report(p, n)?;
    let cont = continuous_cutoff_report(p, n)?;
    let lind = if report.sigma > 0.0 {
        sig(lindeberg_value(p, n, 1.0)?)
    } else {
        Value::Null
    };
    let mut row = vec![
        json!(n),
        sig(report.mu),
        sig(report.sigma),
        sig(report.t_n),
        sig(report.b_n),
        sig(cont.b_n),
        lind,
        sig(report.hyp1),
    ];
    match &config.a_n {
        Some(expr) => {
            let t = truncation_report(p, n, eval_a_n(expr, n)?)?;
            row.extend([
                sig(t.a_n),
                sig(t.ey),
                sig(t.ez2),
                sig(t.a_n_over_log_n),
                sig(t.second_moment_ratio),
                sig(t.log_n_over_ey),
                sig(t.t_n_truncated),
            ]);
        }
        None => row.extend(std::iter::repeat_n(Value::Null, 7)),
    }
    Ok(row)
}

fn cutoff(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let spec = config.pack_spec()?;
    if let (Some(n), Format::Json) = (config.n, config.format) {
        let p = spec.resolve(n)?;
        let truncation = match &config.a_n {
            Some(expr) => truncation_report(&p, n, eval_a_n(expr, n)?)?.to_json(),
            None => Value::Null,
        };
        let report = json!({
            "n": n,
            "p": p.to_string(),
            "discrete": cutoff_report(&p, n)?.to_json(),
            "continuous": continuous_cutoff_report(&p, n)?.to_json(),
            "truncation": truncation,
        });
        write_json(out, &report)?;
        return Ok(false);
    }
    let ns = match (config.n, config.n_grid) {
        (Some(n), _) => vec![n],
        (None, Some(grid)) => grid.values(),
        (None, None) => unreachable!("validated"),
    };
    let mut table = Table::new(&CUTOFF_COLUMNS);
    for n in ns {
        table.push(cutoff_row(config, &spec.resolve(n)?, n)?);
    }
    match config.format {
        Format::Csv => table.write_csv(out)?,
        Format::Json => write_json(out, &json!({ "p": spec.to_string(), "rows": table.to_json() }))?,
    }
    Ok(false)
}

fn verify(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let mut bounds = VerifyBounds {
        seed: config.seed,
        sampler_samples: config.samples,
        ..VerifyBounds::default()
    };
    if let Some(n) = config.n {
        bounds = bounds.with_n(n as usize);
    }
    let suites: Vec<Suite> = match config.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let verdicts = suites
        .iter()
        .map(|&s| run_suite(s, &bounds))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = verdicts.iter().all(|v| v.passed);
    match config.format {
        Format::Json => write_json(
            out,
            &json!({ "passed": passed, "bounds": bounds, "suites": verdicts }),
        )?,
        Format::Csv => {
            let mut table = Table::new(&["suite", "passed", "checked", "violations"]);
            for v in &verdicts {
                table.push(vec![json!(v.name), json!(v.passed), json!(v.checked), json!(v.violations)]);
            }
            table.write_csv(out)?;
        }
    }
    Ok(!passed)
}

fn poisson(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let n = config.deck();
    let p = config.pack_spec()?.resolve(n as u64)?;
    let grid = config.t.expect("validated");
    let mut table = Table::new(&[
        "t",
        "tv",
        "tv_lower",
        "tv_upper",
        "tol",
        "truncation_k",
        "tv_exact",
    ]);
    let mut laws = Vec::new();
    let mut values = Vec::new();
    for t in grid.values() {
        let h = poissonized_law(n, &p, t, config.tol)?;
        let cert = h.tv();
        values.push(cert.value);
        table.push(vec![
            sig(t),
            sig(cert.value),
            sig(cert.lower()),
            sig(cert.upper()),
            sig(config.tol),
            json!(h.truncation_k()),
            cert.exact.map_or(Value::Null, |e| json!(e.to_string())),
        ]);
        if config.format == Format::Json {
            laws.push(h.to_json());
        }
    }
    // observed only; monotonicity in t is not a proven invariant
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + 2.0 * config.tol);
    if !nonincreasing {
        eprintln!("riffle: note: TV is not nonincreasing in t within 2 tol on this grid");
    }
    match config.format {
        Format::Csv => table.write_csv(out)?,
        Format::Json => {
            let mut rows = table.to_json();
            for (row, law) in rows.as_array_mut().expect("array").iter_mut().zip(laws) {
                row["law"] = law;
            }
            write_json(
                out,
                &json!({
                    "n": n,
                    "p": p.to_string(),
                    "rows": rows,
                    "observed_nonincreasing_within_2tol": nonincreasing,
                }),
            )?
        }
    }
    Ok(false)
}

fn sample(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let n = config.deck();
    let p = config.pack_spec()?.resolve(n as u64)?;
    let range = config.k.expect("validated");
    if range.start != range.end {
        return Err(CliError::Config("sample takes a single step count --k".into()));
    }
    let k = range.end;
    let trials = sample_rising_sequences(n, &p, k, config.samples, config.seed);
    match config.format {
        Format::Csv => write_sample_csv(&mut *out, &trials)?,
        Format::Json => {
            let mut hist = EmpiricalHistogram::new(n);
            for &r in &trials {
                hist.record(r);
            }
            let est = empirical_tv(&hist, &*shared_row(n)?)?;
            let exact = tv_to_uniform(&law_after_k(n, &p, k)?);
            write_json(
                out,
                &json!({
                    "n": n,
                    "p": p.to_string(),
                    "k": k,
                    "samples": config.samples,
                    "seed": config.seed,
                    "histogram": hist.counts(),
                    "tv_estimate": fmt_sig17(est.estimate),
                    "std_error": fmt_sig17(est.std_error),
                    "tv_exact": exact.to_string(),
                    "tv_exact_float": fmt_sig17(exact.to_f64()),
                }),
            )?
        }
    }
    Ok(false)
}

fn cached_sizes(dir: &std::path::Path) -> Result<Vec<usize>, CliError> {
    let mut sizes = Vec::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(n) = name
                .strip_prefix("eulerian_")
                .and_then(|s| s.strip_suffix(".txt"))
                .and_then(|s| s.parse().ok())
            {
                sizes.push(n);
            }
        }
    }
    sizes.sort_unstable();
    Ok(sizes)
}

fn cache(config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let dir = config.cache.clone().expect("validated");
    if let Some(n) = config.n {
        // persist every row requested explicitly
        let cache = EulerianCache::with_dir(&dir, 1);
        cache.row(n as usize)?;
    }
    let sizes = cached_sizes(&dir)?;
    match config.format {
        Format::Json => write_json(
            out,
            &json!({ "dir": dir.display().to_string(), "rows": sizes }),
        )?,
        Format::Csv => {
            let mut table = Table::new(&["n", "path"]);
            for n in sizes {
                let path = dir.join(format!("eulerian_{n}.txt"));
                table.push(vec![json!(n), json!(path.display().to_string())]);
            }
            table.write_csv(out)?;
        }
    }
    Ok(false)
}
