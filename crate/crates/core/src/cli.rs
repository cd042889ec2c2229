//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, Certificate};
use crate::error::{Error, Result};
use crate::methods::{run, RunConfig, RunTrace, TerminationRule};
use crate::oracle::{GeneratorSpec, OptimumInfo, Problem};
use crate::schedule::{MixPolicy, Schedule};
use crate::space::{ProxSetup, Tolerances};
use crate::verify::{run_suite, Suite, VerifyOptions};

/// Version tag written at the top of every CSV file.
pub const CSV_SCHEMA: &str = "auxopt-csv/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STEP_CONDITION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "auxopt", version, about = "Certified first-order methods for convex problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the runs of a config, certify them and write traces.
    Run(RunArgs),
    /// Run the built-in check suites.
    Verify(VerifyArgs),
    /// Run several presets on one problem and write aligned gaps.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Absolute residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Generator seed, for generated problems.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration count for every run.
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for the JSON report; printed to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the problem comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Generate { generate: GeneratorSpec },
    Explicit(Problem),
}

/// One run of an experiment: a preset with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub setup: ProxSetup,
    pub runs: Vec<RunEntry>,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_iters() -> usize {
    500
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: Problem,
    pub setup: ProxSetup,
    pub runs: Vec<(String, RunConfig)>,
    pub out: PathBuf,
    pub tol: Tolerances,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn build(mut self, args: &RunArgs) -> Result<Experiment> {
        if let (Some(seed), ProblemSource::Generate { generate }) = (args.seed, &mut self.problem) {
            generate.seed = seed;
        }
        let problem = match self.problem {
            ProblemSource::Generate { generate } => generate.generate()?,
            ProblemSource::Explicit(p) => p,
        };
        if problem.dim() != self.setup.dim() {
            return Err(Error::DimensionMismatch { expected: self.setup.dim(), got: problem.dim() });
        }
        if self.runs.is_empty() {
            return Err(Error::Config("no runs listed".into()));
        }
        let mut tol = self.tolerances;
        if let Some(t) = args.tol {
            tol = tol.with_residual_abs(t);
        }
        let mut runs: Vec<(String, RunConfig)> = Vec::with_capacity(self.runs.len());
        for entry in self.runs {
            let iters = args.kmax.or(entry.max_iters).unwrap_or(self.max_iters);
            let mut config = RunConfig::from_preset(&entry.preset, iters)?;
            if let Some(schedule) = entry.schedule {
                config = config.with_schedule(schedule);
            }
            if let Some(mix) = entry.mix {
                config.mix = mix;
            }
            if let Some(termination) = entry.termination {
                config.termination = termination;
            }
            config.schedule.validate()?;
            config.mix.validate()?;
            let base = config.label();
            let repeats = runs.iter().filter(|(_, c)| c.label() == base).count();
            let label = if repeats == 0 { base } else { format!("{base}-{}", repeats + 1) };
            runs.push((label, config));
        }
        Ok(Experiment { problem, setup: self.setup, runs, out: args.out.clone().unwrap_or(self.out), tol })
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::StepCondition { .. } => EXIT_STEP_CONDITION,
        _ => EXIT_CONFIG,
    }
}

/// Trace CSV: `k,f_xhat,gap,bound,envelope,residual_Rk,lambda,beta`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &RunTrace, cert: &Certificate) -> Result<()> {
    writeln!(out, "# {CSV_SCHEMA} trace problem={} setup={} run={}", trace.problem_id, trace.setup_id, trace.config.label())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "f_xhat", "gap", "bound", "envelope", "residual_Rk", "lambda", "beta"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (r, c) in trace.records.iter().zip(&cert.rows) {
        w.write_record([
            r.k.to_string(),
            r.f_xhat.to_string(),
            opt(c.gap),
            opt(c.bound),
            opt(c.envelope),
            c.residual.to_string(),
            r.lambda.to_string(),
            r.beta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Certifies `trace`, then checks that the serialized trace certifies identically.
fn certify_round_trip(trace: &RunTrace, exp: &Experiment, optimum: &OptimumInfo) -> Result<(Certificate, String)> {
    let cert = certify(trace, &exp.problem, &exp.setup, optimum, None, &exp.tol)?;
    let json = serde_json::to_string_pretty(trace)?;
    let reloaded: RunTrace = serde_json::from_str(&json)?;
    let again = certify(&reloaded, &exp.problem, &exp.setup, optimum, None, &exp.tol)?;
    if again != cert {
        return Err(Error::Config(format!("{}: trace does not survive a JSON round trip", trace.config.label())));
    }
    Ok((cert, json))
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let exp = match ExperimentConfig::load(&args.config).and_then(|c| c.build(args)) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_all(&exp) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CERTIFICATE,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_all(exp: &Experiment) -> Result<bool> {
    fs::create_dir_all(&exp.out)?;
    let optimum = exp.problem.known_optimum(&exp.setup);
    let mut all_pass = true;
    for (label, config) in &exp.runs {
        let trace = run(&exp.problem, &exp.setup, config)?;
        let (cert, json) = certify_round_trip(&trace, exp, &optimum)?;
        fs::write(exp.out.join(format!("{label}.trace.json")), json + "\n")?;
        write_json(&exp.out.join(format!("{label}.certificate.json")), &cert)?;
        write_trace_csv(fs::File::create(exp.out.join(format!("{label}.csv")))?, &trace, &cert)?;
        let mut rates = fs::File::create(exp.out.join(format!("{label}.certificate.csv")))?;
        writeln!(rates, "# {CSV_SCHEMA} certificate problem={} run={label}", trace.problem_id)?;
        cert.write_csv(rates)?;

        let last = cert.rows.last();
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
        println!(
            "{label}: iterations {} gap {} bound {} {}",
            trace.records.len(),
            show(last.and_then(|r| r.gap)),
            show(last.and_then(|r| r.bound)),
            if cert.pass { "PASS" } else { "FAIL" }
        );
        for failure in cert.consistency_failures.iter().take(5) {
            println!("  {failure}");
        }
        all_pass &= cert.pass;
    }
    Ok(all_pass)
}

pub fn cmd_compare(args: &RunArgs) -> i32 {
    let exp = match ExperimentConfig::load(&args.config).and_then(|c| c.build(args)) {
        Ok(e) if e.runs.len() < 2 => {
            eprintln!("error: compare needs at least two runs");
            return EXIT_CONFIG;
        }
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match compare_all(&exp) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CERTIFICATE,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn compare_all(exp: &Experiment) -> Result<bool> {
    fs::create_dir_all(&exp.out)?;
    let optimum = exp.problem.known_optimum(&exp.setup);
    let results: Vec<Result<(RunTrace, Certificate)>> = exp
        .runs
        .par_iter()
        .map(|(_, config)| {
            let trace = run(&exp.problem, &exp.setup, config)?;
            let cert = certify(&trace, &exp.problem, &exp.setup, &optimum, None, &exp.tol)?;
            Ok((trace, cert))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let f_star = optimum.f_star.or_else(|| optimum.x_star.as_ref().map(|x| exp.problem.true_value(x)));
    let quantity = if f_star.is_some() { "gap" } else { "f_xhat" };
    let mut file = fs::File::create(exp.out.join("compare.csv"))?;
    writeln!(file, "# {CSV_SCHEMA} compare problem={} quantity={quantity}", exp.problem.id())?;
    let mut w = csv::Writer::from_writer(file);
    let header: Vec<String> = std::iter::once("k".to_string()).chain(exp.runs.iter().map(|(l, _)| l.clone())).collect();
    w.write_record(&header)?;
    let rows = results.iter().map(|(t, _)| t.records.len()).max().unwrap_or(0);
    for k in 0..rows {
        let mut record = vec![k.to_string()];
        for (trace, _) in &results {
            record.push(trace.records.get(k).map(|r| (r.f_xhat - f_star.unwrap_or(0.0)).to_string()).unwrap_or_default());
        }
        w.write_record(&record)?;
    }
    w.flush()?;

    let mut all_pass = true;
    for ((label, _), (trace, cert)) in exp.runs.iter().zip(&results) {
        let final_value = trace.last().map(|r| r.f_xhat - f_star.unwrap_or(0.0)).unwrap_or(f64::NAN);
        println!("{label}: final {quantity} {final_value:.6e} {}", if cert.pass { "PASS" } else { "FAIL" });
        all_pass &= cert.pass;
    }
    Ok(all_pass)
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let suite = match Suite::parse(&args.suite) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut tol = Tolerances::default();
    if let Some(t) = args.tol {
        tol = tol.with_residual_abs(t);
    }
    let opts = VerifyOptions { seed: args.seed, kmax: args.kmax, tol };
    let reports = match run_suite(suite, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CERTIFICATE;
        }
    };
    for report in &reports {
        for check in &report.checks {
            eprintln!(
                "{} [{}] {} (worst {:.3e}) {}",
                if check.pass { "PASS" } else { "FAIL" },
                report.suite.name(),
                check.name,
                check.worst,
                check.detail
            );
        }
    }
    let written = match &args.out {
        Some(dir) => fs::create_dir_all(dir).map_err(Error::from).and_then(|_| write_json(&dir.join("verify.json"), &reports)),
        None => serde_json::to_string_pretty(&reports).map(|s| println!("{s}")).map_err(Error::from),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_CERTIFICATE
    }
}

pub fn execute(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

/// Parses `args` (including the program name) and executes; clap usage errors map to the config exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Variant;

    fn args(config: PathBuf, out: PathBuf) -> RunArgs {
        RunArgs { config, out: Some(out), tol: None, seed: None, kmax: None }
    }

    fn write_config(dir: &Path, value: serde_json::Value) -> PathBuf {
        let path = dir.join("config.json");
        fs::write(&path, value.to_string()).unwrap();
        path
    }

    #[test]
    fn config_parses_generated_problem() {
        let text = r#"{
            "problem": {"generate": {"variant": "quadratic", "dim": 4, "seed": 2}},
            "setup": {"dim": 4, "set": {"kind": "free"}, "geometry": "euclidean"},
            "runs": [{"preset": "fgm_da"}, {"preset": "fgm_da", "max_iters": 7}]
        }"#;
        let config: ExperimentConfig = serde_json::from_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let exp = config.build(&args(dir.path().join("c"), dir.path().to_path_buf())).unwrap();
        assert_eq!(exp.runs[0].0, "fgm_da");
        assert_eq!(exp.runs[1].0, "fgm_da-2");
        assert_eq!((exp.runs[0].1.max_iters, exp.runs[1].1.max_iters), (500, 7));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            serde_json::json!({
                "problem": {"generate": GeneratorSpec::new(Variant::Quadratic, 3, 1)},
                "setup": {"dim": 4, "set": {"kind": "free"}, "geometry": "euclidean"},
                "runs": [{"preset": "fgm_md"}]
            }),
        );
        assert_eq!(cmd_run(&args(path, dir.path().join("out"))), EXIT_CONFIG);
    }

    #[test]
    fn unknown_preset_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            serde_json::json!({
                "problem": {"generate": GeneratorSpec::new(Variant::Quadratic, 3, 1)},
                "setup": {"dim": 3, "set": {"kind": "free"}, "geometry": "euclidean"},
                "runs": [{"preset": "nesterov_hybrid"}]
            }),
        );
        assert_eq!(cmd_run(&args(path, dir.path().join("out"))), EXIT_CONFIG);
        assert_eq!(cmd_run(&args(dir.path().join("absent.json"), dir.path().join("out"))), EXIT_CONFIG);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["auxopt", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["auxopt", "verify", "--suite", "nope"]), EXIT_CONFIG);
    }
}
