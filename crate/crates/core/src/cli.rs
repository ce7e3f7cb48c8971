//! Command-line front end: argument parsing, config loading, report output.
//!
//! Exit codes: 0 all claims verified, 1 bad input, 2 some claim refuted,
//! 3 some claim unknown (nothing refuted).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::examples::{
    hensel_chain, verify_interval_example, verify_product_sum_full, verify_product_union_small,
    verify_sqrt7_necessary_range,
};
use crate::filters::{hausdorff_verdict, FilterFamily, HausdorffBudget};
use crate::groups::GroupElement;
use crate::nonabelian::verify_fib_identity;
use crate::report::{RunMetadata, Status, VerificationReport, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

/// Overrides the fixture directory used to resolve relative config paths.
pub const FIXTURES_ENV: &str = "GROUPTOP_FIXTURES";

#[derive(Parser, Debug)]
#[command(
    name = "grouptop",
    version,
    about = "Certified checks for group topologies built from set families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one of the built-in example verifications.
    Verify {
        #[arg(value_enum)]
        example: Example,
        /// Largest |g| probed (sqrt7).
        #[arg(long, default_value_t = 50)]
        gmax: u64,
        /// Largest number of summands (sqrt7).
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        /// Truncation N (product) or number of iterations (fibonacci).
        #[arg(long)]
        n: Option<usize>,
        /// Smallest ε is 2^-steps (interval).
        #[arg(long, default_value_t = 10)]
        steps: u32,
        /// Random samples per configuration (product).
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate the Hausdorff criteria for a family described by a JSON config.
    Hausdorff {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the Hensel lifting chain of a square root of `a` modulo `p^k`.
    Hensel {
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 7, allow_negative_numbers = true)]
        a: i64,
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Re-verify every witness and exclusion in a saved report.
    Recheck { report: PathBuf },
}

#[derive(clap::Args, Debug)]
struct OutputArgs {
    /// Write the report here (plus `<out>.meta.json`) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    Sqrt7,
    Product,
    Interval,
    Fibonacci,
}

/// A `hausdorff` configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FilterFamily,
    pub probes: Vec<GroupElement>,
    #[serde(default)]
    pub budget: HausdorffBudget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl RunConfig {
    /// Parse errors carry the line and column of the failure.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text)
            .map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))
    }
}

pub fn fixture_dir() -> PathBuf {
    match std::env::var_os(FIXTURES_ENV) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("data"),
    }
}

/// `path` as given if it exists, otherwise relative to the fixture directory.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let candidate = fixture_dir().join(path);
    if candidate.exists() {
        candidate
    } else {
        path.to_path_buf()
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Verified => EXIT_OK,
        Status::Refuted => EXIT_REFUTED,
        Status::Unknown => EXIT_UNKNOWN,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let command: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let started = Instant::now();
    let result = match cli.command {
        Command::Verify {
            example,
            gmax,
            nmax,
            n,
            steps,
            samples,
            seed,
            output,
        } => build_verify(example, gmax, nmax, n, steps, samples, seed)
            .map(|r| (r, output.out, output.format)),
        Command::Hausdorff { config, output } => build_hausdorff(&config)
            .map(|(r, cfg_out, cfg_fmt)| (r, output.out.or(cfg_out), output.format.or(cfg_fmt))),
        Command::Hensel { p, a, k, format } => return hensel(p, a, k, format, out, err),
        Command::Recheck { report } => return recheck(&report, out, err),
    };
    let (report, path, format) = match result {
        Ok(r) => r,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let meta = RunMetadata {
        schema: SCHEMA_VERSION,
        command,
        wall_time_ms: started.elapsed().as_millis(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    if let Err(msg) = emit(&report, &meta, path.as_deref(), format, out) {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    exit_code(report.status)
}

fn build_verify(
    example: Example,
    gmax: u64,
    nmax: usize,
    n: Option<usize>,
    steps: u32,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport, String> {
    let e = |x: crate::examples::ExampleError| x.to_string();
    match example {
        Example::Sqrt7 => verify_sqrt7_necessary_range(gmax, nmax).map_err(e),
        Example::Interval => verify_interval_example(steps).map_err(e),
        Example::Fibonacci => verify_fib_identity(n.unwrap_or(10)).map_err(|x| x.to_string()),
        Example::Product => {
            let n = n.unwrap_or(6);
            if n < 3 {
                return Err("product needs --n ≥ 3".into());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Vec<u64>> = (0..samples)
                .map(|_| (1..=n as u64).map(|c| rng.gen_range(0..c)).collect())
                .collect();
            let mut parts = Vec::new();
            for m0 in [2usize, 3] {
                let r = verify_product_sum_full(n, m0, &vec![n; m0], &points).map_err(e)?;
                parts.push((format!("sum-m0-{m0}"), r));
            }
            for k in [1usize, 2] {
                parts.push((
                    format!("union-n{k}"),
                    verify_product_union_small(n, k).map_err(e)?,
                ));
            }
            Ok(VerificationReport::merge("product", parts))
        }
    }
}

type Built = (VerificationReport, Option<PathBuf>, Option<Format>);

fn build_hausdorff(config: &Path) -> Result<Built, String> {
    let path = resolve_input(config);
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report =
        hausdorff_verdict(&cfg.family, &cfg.probes, &cfg.budget).map_err(|e| e.to_string())?;
    Ok((report, cfg.output, cfg.format))
}

fn emit(
    report: &VerificationReport,
    meta: &RunMetadata,
    path: Option<&Path>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), String> {
    let body = match format.unwrap_or(if path.is_some() {
        Format::Json
    } else {
        Format::Text
    }) {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    match path {
        None => out.write_all(body.as_bytes()).map_err(|e| e.to_string()),
        Some(p) => {
            fs::write(p, body).map_err(|e| format!("{}: {e}", p.display()))?;
            let meta_path = sidecar_path(p);
            let meta_json = serde_json::to_string_pretty(meta).expect("metadata serializes") + "\n";
            fs::write(&meta_path, meta_json)
                .map_err(|e| format!("{}: {e}", meta_path.display()))?;
            writeln!(
                out,
                "{}: {} ({})",
                p.display(),
                report.status.as_str(),
                report.claims.len()
            )
            .map_err(|e| e.to_string())
        }
    }
}

/// `<out>.meta.json`, next to the report.
pub fn sidecar_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    report.with_file_name(name)
}

fn hensel(p: u64, a: i64, k: u32, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let chain = match hensel_chain(&BigInt::from(a), p, k) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match format {
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&json!({ "p": p, "a": a, "chain": chain }))
                .expect("serializes")
        ),
        Format::Text => {
            let mut text = format!("{:>3}  {:>12}  {:>12}  lift\n", "k", "modulus", "root");
            for (i, w) in chain.iter().enumerate() {
                let lift = match i {
                    0 => "-".to_string(),
                    _ => {
                        let prev = &chain[i - 1];
                        let zero = BigInt::from(0);
                        let sign = if (&w.root - &prev.root) % &prev.modulus == zero {
                            "+"
                        } else if (&w.root + &prev.root) % &prev.modulus == zero {
                            "-"
                        } else {
                            "!"
                        };
                        format!("≡ {sign}{} mod {}", prev.root, prev.modulus)
                    }
                };
                text.push_str(&format!(
                    "{:>3}  {:>12}  {:>12}  {lift}\n",
                    w.k, w.modulus, w.root
                ));
            }
            out.write_all(text.as_bytes())
        }
    };
    if result.is_err() {
        return EXIT_USAGE;
    }
    EXIT_OK
}

fn recheck(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let report = match VerificationReport::from_json(&text) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(
                err,
                "error: {}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            );
            return EXIT_USAGE;
        }
    };
    let summary = report.recheck();
    let _ = writeln!(
        out,
        "{} witnesses, {} exclusions re-verified",
        summary.witnesses, summary.exclusions
    );
    for f in &summary.failures {
        let _ = writeln!(out, "FAILED {f}");
    }
    if summary.ok() {
        EXIT_OK
    } else {
        EXIT_REFUTED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("grouptop").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn hensel_table() {
        let (code, out, _) = run_str(&["hensel", "--p", "3", "--a", "7", "--k", "3"]);
        assert_eq!(code, 0);
        let roots: Vec<&str> = out
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().nth(2).unwrap())
            .collect();
        assert_eq!(roots, vec!["1", "4", "13"]);
        assert_eq!(
            run_str(&["hensel", "--p", "3", "--a", "2", "--k", "1"]).0,
            1
        );
        assert_eq!(run_str(&["hensel", "--k", "0"]).0, 1);
    }

    #[test]
    fn verify_codes() {
        assert_eq!(run_str(&["verify", "sqrt7", "--gmax", "0"]).0, 1);
        assert_eq!(run_str(&["verify", "fibonacci", "--n", "6"]).0, 0);
        assert_eq!(run_str(&["verify", "nosuch"]).0, 1);
        let (code, out, _) = run_str(&["verify", "interval", "--steps", "3", "--format", "json"]);
        assert_eq!(code, 0);
        assert_eq!(VerificationReport::from_json(&out).unwrap().claims.len(), 5);
    }

    #[test]
    fn product_is_unknown_only_when_truncation_bites() {
        let (code, out, _) = run_str(&["verify", "product", "--samples", "5", "--format", "json"]);
        let r = VerificationReport::from_json(&out).unwrap();
        assert_eq!(r.count(Status::Refuted), 0);
        assert_eq!(code, exit_code(r.status));
    }

    #[test]
    fn config_errors_report_location() {
        let err = RunConfig::from_json("{\n  \"family\": {\"kind\": \"chain\", \"generator\": \"sqrt7\"},\n  \"probes\": [1,\n}").unwrap_err();
        assert!(err.starts_with("line 4"), "{err}");
        let cfg = RunConfig::from_json(
            r#"{"family": {"kind": "cofinite", "sequence": "powers3"}, "probes": [1, 2]}"#,
        )
        .unwrap();
        assert_eq!(cfg.budget, HausdorffBudget::default());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/r.json")),
            PathBuf::from("/tmp/r.json.meta.json")
        );
    }
}
