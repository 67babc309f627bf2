//! Command-line front end: simulate, check, sweep, kernel-table and
//! lemma-check. Exit codes: 0 success, 1 usage or I/O error, 2 numerical or
//! geometric failure, or a failed check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, interpolation_lemma_check, BoundReport, GridField};
use crate::config::{parse_config, SimConfig};
use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::evolve_with;
use crate::error::{Error, Result};
use crate::io::{self, load_run, RunWriter};
use crate::kernel::KernelParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

const CONFIG_HELP: &str = "\
Config file (JSON, unknown keys rejected):
  alpha              required, in (0, 1]; 1 is the SQG endpoint (experimental)
  t_end              required, >= 0
  initial_condition  required, {\"kind\": ...}:
                       disk        radius (R0), center [0,0], theta0 1
                       annulus     inner, outer, theta0 1
                       two_disks   radius_a, radius_b, separation, theta0 1
                       random_blobs radius (R0), n_blobs 4, sigma_min 0.15,
                                   sigma_max 0.4, theta0 1
  dt                 0.05
  integrator         \"rk4\"
  representation     \"particles\" | \"contour\" (contour: alpha < 1, disk or two_disks)
  output_stride      10
  seed               0
  n_particles        4096
  n_nodes            512
  eps                blob radius, default half the initial particle spacing
  n_max              6 (highest moment order recorded)";

#[derive(Debug, Parser)]
#[command(name = "alphapatch", version, about = "Simulate alpha-patch flows and check confinement estimates")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ALPHAPATCH_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write diagnostics, snapshots and a manifest.
    #[command(after_help = CONFIG_HELP)]
    Simulate(SimulateArgs),
    /// Run bound checks on a saved run and write one JSON report per check.
    Check(CheckArgs),
    /// Run every (alpha, seed) pair of a sweep file and aggregate the fits.
    Sweep(SweepArgs),
    /// Print the Riesz constant and kernel prefactor for a list of alphas.
    KernelTable(KernelTableArgs),
    /// Test the interpolation inequality on seeded random grid fields.
    LemmaCheck(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Confinement,
    Moments,
    TailMass,
    RadialDecay,
}

pub const ALL_CHECKS: [CheckKind; 4] = [
    CheckKind::Confinement,
    CheckKind::Moments,
    CheckKind::TailMass,
    CheckKind::RadialDecay,
];

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run directory written by `simulate`.
    pub run: PathBuf,
    /// Checks to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub checks: Vec<CheckKind>,
    /// Report directory (default: <run>/reports).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Decay exponent for the tail-mass fit.
    #[arg(long, default_value_t = 4.0)]
    pub tail_k: f64,
}

#[derive(Debug, Args)]
#[command(after_help = "Sweep file: {\"base\": <config>, \"alphas\": [..], \"seeds\": [..], \"checks\": [..]}")]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelTableArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
    pub alphas: Vec<f64>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Number of random fields per (beta, p) pair.
    #[arg(long, default_value_t = 50)]
    pub fields: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5])]
    pub betas: Vec<f64>,
    /// Lebesgue exponents; `inf` for the sup norm.
    #[arg(long, value_delimiter = ',', default_values_t = [f64::INFINITY, 4.0])]
    pub ps: Vec<f64>,
    /// Cells per side of the random grids.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A sweep file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_sweep_checks")]
    pub checks: Vec<CheckKind>,
}

fn default_sweep_checks() -> Vec<CheckKind> {
    vec![CheckKind::Confinement]
}

/// One aggregate row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub seed: u64,
    pub c0_hat: f64,
    pub c0_hat_half: f64,
    pub p_hat: f64,
    pub status: String,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.status == "ok"
    }
}

pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // Fails only if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::KernelTable(a) => cmd_kernel_table(&a),
        Command::LemmaCheck(a) => cmd_lemma_check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_FAILURE
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Runs `config` into `dir`. Numerical failures are recorded in the manifest
/// and returned after the partial outputs are flushed.
pub fn simulate_to_dir(config: &SimConfig, dir: &Path) -> Result<io::RunManifest> {
    let mut writer = RunWriter::create(dir, config)?;
    let result = evolve_with(config, |s| writer.push(s));
    match result {
        Ok(()) => writer.finish(None),
        Err(e) if e.is_numerical() => {
            writer.finish(Some(&e))?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let mut config = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    match simulate_to_dir(&config, &args.out) {
        Ok(m) => {
            println!(
                "wrote {} snapshots to {}",
                m.snapshots.len(),
                args.out.display()
            );
            Ok(EXIT_OK)
        }
        Err(e) if e.is_numerical() => {
            eprintln!("run failed: {e} (partial outputs kept in {})", args.out.display());
            Ok(EXIT_FAILURE)
        }
        Err(e) => Err(e),
    }
}

/// Runs the selected checks on a loaded run.
pub fn run_checks(run: &io::LoadedRun, checks: &[CheckKind], tail_k: f64) -> Result<Vec<BoundReport>> {
    let alpha = run.manifest.config.alpha;
    let traj = &run.trajectory;
    let records: Vec<DiagnosticsRecord> = traj.records().cloned().collect();
    checks
        .iter()
        .map(|c| match c {
            CheckKind::Confinement => bounds::check_confinement(&records, alpha),
            CheckKind::Moments => bounds::check_moment_hierarchy(&records, alpha, run.manifest.config.n_max),
            CheckKind::TailMass => bounds::check_tail_mass(traj, alpha, tail_k),
            CheckKind::RadialDecay => {
                let last = traj
                    .snapshots
                    .last()
                    .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
                bounds::check_radial_decay(&last.field, &KernelParams::new(alpha)?)
            }
        })
        .collect()
}

fn write_reports(dir: &Path, reports: &[BoundReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in reports {
        io::write_atomic(&dir.join(format!("{}.json", r.check_name)), &r.to_json())?;
    }
    Ok(())
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let run = load_run(&args.run)?;
    let checks = if args.checks.is_empty() { ALL_CHECKS.to_vec() } else { args.checks.clone() };
    let reports = run_checks(&run, &checks, args.tail_k)?;
    let out = args.out.clone().unwrap_or_else(|| args.run.join("reports"));
    write_reports(&out, &reports)?;
    for r in &reports {
        println!("{:<20} {}  margin {:.6e}", r.check_name, r.verdict, r.margin);
    }
    Ok(if reports.iter().all(BoundReport::passed) { EXIT_OK } else { EXIT_FAILURE })
}

pub fn parse_sweep(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let sweep: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if sweep.alphas.is_empty() || sweep.seeds.is_empty() {
        return Err(Error::Validation("sweep needs at least one alpha and one seed".into()));
    }
    for &a in &sweep.alphas {
        let mut c = sweep.base.clone();
        c.alpha = a;
        c.validate()?;
    }
    Ok(sweep)
}

pub fn run_dir_name(alpha: f64, seed: u64) -> String {
    format!("alpha_{alpha}_seed_{seed}")
}

/// Runs every (alpha, seed) pair into its own directory under `out`, checks
/// each one and writes `sweep.csv`. A failed run is recorded and the sweep
/// carries on.
pub fn run_sweep(sweep: &SweepConfig, out: &Path) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out)?;
    let jobs: Vec<(f64, u64)> = sweep
        .alphas
        .iter()
        .flat_map(|&a| sweep.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(alpha, seed)| {
            let mut config = sweep.base.clone();
            config.alpha = alpha;
            config.seed = seed;
            let dir = out.join(run_dir_name(alpha, seed));
            let mut row = SweepRow {
                alpha,
                seed,
                c0_hat: f64::NAN,
                c0_hat_half: f64::NAN,
                p_hat: f64::NAN,
                status: "ok".into(),
            };
            let outcome = simulate_to_dir(&config, &dir)
                .and_then(|_| load_run(&dir))
                .and_then(|run| run_checks(&run, &sweep.checks, 4.0));
            match outcome {
                Ok(reports) => {
                    if let Some(conf) = reports.iter().find(|r| r.check_name == "confinement") {
                        row.c0_hat = conf.constant("C0_hat").unwrap_or(f64::NAN);
                        row.c0_hat_half = conf.constant("C0_hat_half").unwrap_or(f64::NAN);
                        row.p_hat = conf.constant("p_hat").unwrap_or(f64::NAN);
                    }
                    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check_name.as_str()).collect();
                    if !failed.is_empty() {
                        row.status = format!("check_failed:{}", failed.join("+"));
                    }
                    if let Err(e) = write_reports(&dir.join("reports"), &reports) {
                        row.status = format!("error:{e}");
                    }
                }
                Err(e) => row.status = format!("error:{}", e.to_string().replace(',', ";")),
            }
            row
        })
        .collect();
    let mut csv = String::from("# alphapatch sweep v1\nalpha,seed,c0_hat,c0_hat_half,p_hat,status\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{},{},{}", r.alpha, r.seed, r.c0_hat, r.c0_hat_half, r.p_hat, r.status).unwrap();
    }
    io::write_atomic(&out.join("sweep.csv"), &csv)?;
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let sweep = parse_sweep(&args.config)?;
    let rows = run_sweep(&sweep, &args.out)?;
    for r in &rows {
        println!("alpha {:<5} seed {:<4} p_hat {:>8.4} C0_hat {:>10.4e}  {}", r.alpha, r.seed, r.p_hat, r.c0_hat, r.status);
    }
    Ok(if rows.iter().all(SweepRow::succeeded) { EXIT_OK } else { EXIT_FAILURE })
}

pub fn kernel_table(alphas: &[f64]) -> Result<String> {
    let mut out = String::from("alpha,riesz_constant,kernel_prefactor\n");
    for &a in alphas {
        let p = KernelParams::new(a)?;
        writeln!(out, "{a},{},{}", p.riesz_constant(), p.kernel_prefactor()).unwrap();
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_atomic(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_kernel_table(args: &KernelTableArgs) -> Result<i32> {
    emit(&args.out, &kernel_table(&args.alphas)?)?;
    Ok(EXIT_OK)
}

/// Outcome of one (beta, p) pair over all random fields.
#[derive(Clone, Debug)]
pub struct LemmaSummary {
    pub beta: f64,
    pub p: f64,
    /// `None` when the pair is outside the inequality's hypotheses.
    pub reports: Option<Vec<BoundReport>>,
    pub rejection: Option<String>,
}

impl LemmaSummary {
    pub fn failures(&self) -> usize {
        self.reports.as_ref().map_or(0, |r| r.iter().filter(|r| !r.passed()).count())
    }

    pub fn worst_margin(&self) -> f64 {
        self.reports
            .as_ref()
            .map_or(f64::NAN, |r| r.iter().map(|r| r.margin).fold(0.0, f64::max))
    }
}

/// Field `k` uses grid seed `seed + k` and point seed `seed + k + 1_000_003`.
pub fn lemma_sweep(betas: &[f64], ps: &[f64], fields: u64, grid: usize, seed: u64) -> Result<Vec<LemmaSummary>> {
    let grids = (0..fields)
        .map(|k| GridField::random(seed + k, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &beta in betas {
        for &p in ps {
            if let Err(e) = bounds::interpolation_constant(beta, p) {
                out.push(LemmaSummary {
                    beta,
                    p,
                    reports: None,
                    rejection: Some(e.to_string()),
                });
                continue;
            }
            let reports = grids
                .iter()
                .enumerate()
                .map(|(k, g)| interpolation_lemma_check(g, beta, p, seed + k as u64 + 1_000_003))
                .collect::<Result<Vec<_>>>()?;
            out.push(LemmaSummary {
                beta,
                p,
                reports: Some(reports),
                rejection: None,
            });
        }
    }
    Ok(out)
}

pub fn cmd_lemma_check(args: &LemmaArgs) -> Result<i32> {
    let summaries = lemma_sweep(&args.betas, &args.ps, args.fields, args.grid, args.seed)?;
    let mut csv = String::from("beta,p,field,C,lhs_max,rhs,margin,verdict\n");
    for s in &summaries {
        match (&s.reports, &s.rejection) {
            (Some(reports), _) => {
                for (k, r) in reports.iter().enumerate() {
                    let c = |key: &str| r.constant(key).unwrap_or(f64::NAN);
                    writeln!(
                        csv,
                        "{},{},{k},{},{},{},{},{}",
                        s.beta,
                        s.p,
                        c("C"),
                        c("lhs_max"),
                        c("rhs"),
                        r.margin,
                        r.verdict
                    )
                    .unwrap();
                }
                eprintln!(
                    "beta {} p {}: {} failures, worst margin {:.4}",
                    s.beta,
                    s.p,
                    s.failures(),
                    s.worst_margin()
                );
            }
            (None, Some(why)) => eprintln!("beta {} p {}: rejected: {why}", s.beta, s.p),
            (None, None) => unreachable!(),
        }
    }
    emit(&args.out, &csv)?;
    Ok(if summaries.iter().all(|s| s.failures() == 0) { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_table_rows() {
        let t = kernel_table(&[1.0]).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        let c: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((c - 0.159_154_943_1).abs() < 1e-10);
        let t = kernel_table(&[0.5]).unwrap();
        let c: f64 = t.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((c - 0.332_967).abs() < 1e-6);
        assert!(kernel_table(&[1.5]).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_from_args(["alphapatch", "no-such-command"]), EXIT_USAGE);
        assert_eq!(main_from_args(["alphapatch", "simulate"]), EXIT_USAGE);
        assert_eq!(main_from_args(["alphapatch", "--help"]), EXIT_OK);
    }

    #[test]
    fn sweep_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"base": {"alpha": 0.5, "t_end": 1, "initial_condition": {"kind": "disk", "radius": 1}},
                "alphas": [0.1, 0.9], "seeds": [1, 2, 3]}"#,
        )
        .unwrap();
        let s = parse_sweep(&path).unwrap();
        assert_eq!(s.checks, vec![CheckKind::Confinement]);
        fs::write(
            &path,
            r#"{"base": {"alpha": 0.5, "t_end": 1, "initial_condition": {"kind": "disk", "radius": 1}},
                "alphas": [1.5], "seeds": [1]}"#,
        )
        .unwrap();
        assert!(matches!(parse_sweep(&path), Err(Error::Validation(_))));
    }
}
