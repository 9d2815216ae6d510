//! Command line front end: every toolkit operation as a subcommand, with
//! GF1/CSV/JSON artifacts and a replayable run manifest.

pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polarsym_core::functional::{audit_coupling, audit_integrand, Coupling, Integrand, Sampler};
use polarsym_core::grid::{GridFunction, HalfSpace};
use polarsym_core::inequalities::{
    equality_case_probe, verify_coupling_rearrangement, verify_polarization_invariance, verify_polya_szego,
    ProbeOptions, C_DISC,
};
use polarsym_core::io::{format_csv, read_gf1, write_gf1};
use polarsym_core::minimize::{gn_check, minimize, radial_decay_check, scaling_probe, upsilon, upsilon_certificate, FlowStatus};
use polarsym_core::rearrange::{
    grid_exact_cycle, halfspace_sequence, polarization_iterate, polarize, schwarz_symmetrize, IterateOptions,
    Schedule, Strategy,
};
use polarsym_core::report::{Report, Verdict};
use serde::Serialize;

use crate::config::ProblemConfig;
use crate::manifest::{canonical_argv, read_manifest, write_report, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_DIVERGENT: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "polarsym", version, about = "Rearrangement inequalities and symmetric minimizers on grids")]
pub struct Cli {
    /// Master seed for every randomized component.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Upper bound on cells × polarizations for iterated runs.
    #[arg(long, global = true, default_value_t = 10_000_000_000)]
    pub budget_cells: u128,
    /// JSON report path.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Wall-clock sidecar path (kept out of the report for reproducibility).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timing: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Schwarz symmetrization of a GF1 function.
    Symmetrize(SymmetrizeArgs),
    /// Polarization by one half-space.
    Polarize(PolarizeArgs),
    /// Iterated polarization towards the symmetrization.
    Iterate(IterateArgs),
    /// Inequality verdicts.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Sampled hypothesis audits.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Projected gradient flow for a configured problem.
    Minimize(MinimizeArgs),
    /// Negativity certificate along the Υ_θ family.
    Certify(CertifyArgs),
    /// Dilation probe of J(w^δ).
    Probe(ProbeArgs),
    /// Gagliardo–Nirenberg ratios.
    Gn(GnArgs),
    /// Radial decay constant.
    Decay(DecayArgs),
    /// Re-run a stored manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SymmetrizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV export of the result.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PolarizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Unit normal, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub normal: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    GridExact,
    Random,
    LowDiscrepancy,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleArg {
    Triangular,
    Linear,
}

#[derive(Debug, Args, Serialize)]
pub struct IterateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::GridExact)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub steps: usize,
    /// Length of the half-space sequence; defaults to one grid-exact cycle or `steps`.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Triangular)]
    pub schedule: ScheduleArg,
    #[arg(long)]
    pub integrand: Option<String>,
    /// Trace CSV (step, lp_distance, seminorm, J).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCommand {
    PolyaSzego(PolyaArgs),
    Polarization(PolarizationArgs),
    Coupling(CouplingArgs),
    Equality(EqualityArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PolyaArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "power:p=2")]
    pub integrand: String,
    #[arg(long, default_value_t = C_DISC)]
    pub c_disc: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PolarizationArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "power:p=2")]
    pub integrand: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub normal: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingArgs {
    /// One GF1 file per component.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub coupling: String,
    #[arg(long, default_value_t = C_DISC)]
    pub c_disc: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EqualityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "power:p=2")]
    pub integrand: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = C_DISC)]
    pub c_disc: f64,
    /// Critical slope threshold; defaults to the grid spacing.
    #[arg(long)]
    pub eps_grad: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub guard_fraction: f64,
    #[arg(long, default_value_t = 3)]
    pub search_radius: i64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditCommand {
    Integrand(AuditIntegrandArgs),
    Coupling(AuditCouplingArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 10.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 64)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 1000)]
    pub random_points: usize,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

impl SamplerArgs {
    fn sampler(&self, seed: u64) -> Sampler {
        Sampler {
            s_max: self.s_max,
            t_max: self.t_max,
            grid_points: self.grid_points,
            random_points: self.random_points,
            seed,
            dim: self.dim,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AuditIntegrandArgs {
    #[arg(long)]
    pub integrand: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditCouplingArgs {
    #[arg(long)]
    pub coupling: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Solution path; with several components `_k` is inserted before the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.2,0.15,0.1,0.05")]
    pub thetas: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
    pub deltas: Vec<f64>,
    /// Profile per component; defaults to Υ_1.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GnArgs {
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// A manifest or a report embedding one.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Result of one dispatched subcommand.
struct Outcome {
    result: serde_json::Value,
    summary: String,
    exit: i32,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Outcome {
    fn new(result: impl Serialize, summary: String, exit: i32) -> Result<Self, String> {
        Ok(Self {
            result: serde_json::to_value(result).map_err(|e| e.to_string())?,
            summary,
            exit,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn io(mut self, inputs: &[&Path], outputs: &[&Path]) -> Self {
        self.inputs = inputs.iter().map(|p| p.to_path_buf()).collect();
        self.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
        self
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn verdict_exit(pass: bool) -> i32 {
    if pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verdict_outcome(name: &str, v: Verdict) -> Result<Outcome, String> {
    let summary = format!(
        "{name}: {} lhs={:.12e} rhs={:.12e} residual={:.3e} tol={:.3e}",
        pass_word(v.pass),
        v.lhs,
        v.rhs,
        v.residual,
        v.tolerance
    );
    let exit = verdict_exit(v.pass);
    Outcome::new(v, summary, exit)
}

fn report_outcome(r: Report) -> Result<Outcome, String> {
    let pass = r.all_pass();
    let mut summary = format!("{}: {}", r.name, pass_word(pass));
    for f in &r.flags {
        summary.push_str(&format!(" [{f}]"));
    }
    Outcome::new(r, summary, verdict_exit(pass))
}

fn halfspace(normal: &[f64], offset: f64) -> Result<HalfSpace, String> {
    HalfSpace::new(normal, offset).map_err(err)
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<GridFunction>, String> {
    paths.iter().map(|p| read_gf1(p).map_err(err)).collect()
}

fn component_path(base: &Path, k: usize, m: usize) -> PathBuf {
    if m == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{k}"),
    };
    base.with_file_name(name)
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Symmetrize(_) => "symmetrize",
        Command::Polarize(_) => "polarize",
        Command::Iterate(_) => "iterate",
        Command::Verify(VerifyCommand::PolyaSzego(_)) => "verify polya-szego",
        Command::Verify(VerifyCommand::Polarization(_)) => "verify polarization",
        Command::Verify(VerifyCommand::Coupling(_)) => "verify coupling",
        Command::Verify(VerifyCommand::Equality(_)) => "verify equality",
        Command::Audit(AuditCommand::Integrand(_)) => "audit integrand",
        Command::Audit(AuditCommand::Coupling(_)) => "audit coupling",
        Command::Minimize(_) => "minimize",
        Command::Certify(_) => "certify",
        Command::Probe(_) => "probe",
        Command::Gn(_) => "gn",
        Command::Decay(_) => "decay",
        Command::Replay(_) => "replay",
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, String> {
    match &cli.command {
        Command::Symmetrize(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            let star = schwarz_symmetrize(&u);
            write_gf1(&a.out, &star).map_err(err)?;
            let mut outputs = vec![a.out.as_path()];
            if let Some(csv) = &a.csv {
                std::fs::write(csv, format_csv(&star)).map_err(err)?;
                outputs.push(csv);
            }
            let result = serde_json::json!({ "cells": star.grid().len(), "max": star.max_value() });
            let summary = format!("symmetrize: wrote {}", a.out.display());
            Ok(Outcome::new(result, summary, EXIT_OK)?.io(&[&a.input], &outputs))
        }
        Command::Polarize(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            let hs = halfspace(&a.normal, a.offset)?;
            let v = polarize(&u, &hs).map_err(err)?;
            write_gf1(&a.out, &v).map_err(err)?;
            let exact = hs.is_grid_exact(u.grid());
            let result = serde_json::json!({ "grid_exact": exact });
            let summary = format!("polarize: wrote {} (grid_exact={exact})", a.out.display());
            Ok(Outcome::new(result, summary, EXIT_OK)?.io(&[&a.input], &[&a.out]))
        }
        Command::Iterate(a) => iterate(cli, a),
        Command::Verify(v) => verify(v),
        Command::Audit(AuditCommand::Integrand(a)) => {
            let j = Integrand::parse(&a.integrand).map_err(err)?;
            report_outcome(audit_integrand(&j, &a.sampler.sampler(cli.seed)))
        }
        Command::Audit(AuditCommand::Coupling(a)) => {
            let c = Coupling::parse(&a.coupling).map_err(err)?;
            report_outcome(audit_coupling(&c, &a.sampler.sampler(cli.seed)))
        }
        Command::Minimize(a) => run_minimize(cli, a),
        Command::Certify(a) => {
            let problem = ProblemConfig::read(&a.config)?.problem().map_err(err)?;
            let r = upsilon_certificate(&problem, &a.thetas).map_err(err)?;
            let theta0 = r.value("theta0").unwrap_or(f64::NAN);
            let mut o = report_outcome(r)?;
            o.summary.push_str(&format!(" theta0={theta0}"));
            Ok(o.io(&[&a.config], &[]))
        }
        Command::Probe(a) => {
            let problem = ProblemConfig::read(&a.config)?.problem().map_err(err)?;
            let w = if a.inputs.is_empty() {
                upsilon(&problem, 1.0).map_err(err)?
            } else {
                read_all(&a.inputs)?
            };
            let r = scaling_probe(&problem, &w, &a.deltas).map_err(err)?;
            let mut inputs: Vec<&Path> = vec![&a.config];
            inputs.extend(a.inputs.iter().map(PathBuf::as_path));
            Ok(report_outcome(r)?.io(&inputs, &[]))
        }
        Command::Gn(a) => {
            let family = read_all(&a.inputs)?;
            let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
            Ok(report_outcome(gn_check(&family, a.p).map_err(err)?)?.io(&inputs, &[]))
        }
        Command::Decay(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            Ok(report_outcome(radial_decay_check(&u, a.p).map_err(err)?)?.io(&[&a.input], &[]))
        }
        Command::Replay(_) => Err("replay cannot be nested".into()),
    }
}

fn iterate(cli: &Cli, a: &IterateArgs) -> Result<Outcome, String> {
    let u = read_gf1(&a.input).map_err(err)?;
    let grid = u.grid();
    let strategy = match a.strategy {
        StrategyArg::GridExact => Strategy::GridExactAxes,
        StrategyArg::Random => Strategy::RandomDense { seed: cli.seed },
        StrategyArg::LowDiscrepancy => Strategy::LowDiscrepancy,
    };
    let count = a.count.unwrap_or(match a.strategy {
        StrategyArg::GridExact => grid_exact_cycle(grid).len(),
        _ => a.steps,
    });
    let seq = halfspace_sequence(strategy, count, grid).map_err(err)?;
    let opts = IterateOptions {
        p: a.p,
        schedule: match a.schedule {
            ScheduleArg::Triangular => Schedule::Triangular,
            ScheduleArg::Linear => Schedule::Linear,
        },
        budget_cells: cli.budget_cells,
        integrand: a.integrand.as_deref().map(Integrand::parse).transpose().map_err(err)?,
    };
    let trace = polarization_iterate(&u, &seq, a.steps, &opts).map_err(err)?;
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(csv) = &a.csv {
        std::fs::write(csv, trace.to_csv()).map_err(err)?;
        outputs.push(csv);
    }
    if let (Some(out), Some(last)) = (&a.out, &trace.last) {
        write_gf1(out, last).map_err(err)?;
        outputs.push(out);
    }
    let d = trace.distances();
    let summary = format!(
        "iterate: {} steps, distance {:.6e} -> {:.6e}",
        a.steps,
        d.first().copied().unwrap_or(f64::NAN),
        d.last().copied().unwrap_or(f64::NAN)
    );
    Ok(Outcome::new(&trace, summary, EXIT_OK)?.io(&[&a.input], &outputs))
}

fn verify(v: &VerifyCommand) -> Result<Outcome, String> {
    match v {
        VerifyCommand::PolyaSzego(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            let j = Integrand::parse(&a.integrand).map_err(err)?;
            let verdict = verify_polya_szego(&u, &j, a.c_disc).map_err(err)?;
            Ok(verdict_outcome("polya-szego", verdict)?.io(&[&a.input], &[]))
        }
        VerifyCommand::Polarization(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            let j = Integrand::parse(&a.integrand).map_err(err)?;
            let hs = halfspace(&a.normal, a.offset)?;
            let verdict = verify_polarization_invariance(&u, &hs, &j).map_err(err)?;
            Ok(verdict_outcome("polarization", verdict)?.io(&[&a.input], &[]))
        }
        VerifyCommand::Coupling(a) => {
            let u = read_all(&a.inputs)?;
            let f = Coupling::parse(&a.coupling).map_err(err)?;
            let verdict = verify_coupling_rearrangement(&u, &f, a.c_disc).map_err(err)?;
            let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
            Ok(verdict_outcome("coupling", verdict)?.io(&inputs, &[]))
        }
        VerifyCommand::Equality(a) => {
            let u = read_gf1(&a.input).map_err(err)?;
            let j = Integrand::parse(&a.integrand).map_err(err)?;
            let opts = ProbeOptions {
                c_disc: a.c_disc,
                eps_grad: a.eps_grad,
                guard_fraction: a.guard_fraction,
                search_radius: a.search_radius,
            };
            let probe = equality_case_probe(&u, &j, a.p, &opts).map_err(err)?;
            let summary = format!("equality: {:?}", probe.outcome);
            Ok(Outcome::new(&probe, summary, EXIT_OK)?.io(&[&a.input], &[]))
        }
    }
}

fn run_minimize(cli: &Cli, a: &MinimizeArgs) -> Result<Outcome, String> {
    let cfg = ProblemConfig::read(&a.config)?;
    let problem = cfg.problem().map_err(err)?;
    let sol = minimize(&problem, &cfg.flow(cli.seed), None).map_err(err)?;
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        let m = sol.components.len();
        for (k, u) in sol.components.iter().enumerate() {
            let path = component_path(out, k, m);
            write_gf1(&path, u).map_err(err)?;
            outputs.push(path);
        }
    }
    let exit = match sol.status {
        FlowStatus::Converged | FlowStatus::Stalled => EXIT_OK,
        FlowStatus::Divergent => EXIT_DIVERGENT,
        FlowStatus::BudgetExhausted => EXIT_ERROR,
    };
    let summary = format!(
        "minimize: {:?} after {} iterations, J={:.12e}, constraint residual={:.3e}",
        sol.status, sol.iterations, sol.energy, sol.constraint_residual
    );
    let result = serde_json::json!({ "solution": &sol, "report": sol.report() });
    let mut o = Outcome::new(result, summary, exit)?;
    o.inputs = vec![a.config.clone()];
    o.outputs = outputs;
    Ok(o)
}

/// Parses `args` (without the program name), runs the subcommand and returns
/// the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("polarsym".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    if let Command::Replay(r) = &cli.command {
        return replay(&cli, &r.manifest);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let start = Instant::now();
    let outcome = pool.install(|| dispatch(&cli));
    let wall = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    println!("{}", outcome.summary);
    if let Some(path) = &cli.report {
        let manifest = RunManifest {
            subcommand: subcommand_name(&cli.command).to_string(),
            argv: canonical_argv(&args),
            params: serde_json::to_value(&cli.command).unwrap_or_default(),
            seed: cli.seed,
            budget_cells: cli.budget_cells,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: outcome.inputs.clone(),
            outputs: outcome.outputs.clone(),
        };
        if let Err(e) = write_report(path, &manifest, &outcome.result) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    if let Some(path) = &cli.timing {
        let body = serde_json::json!({ "wall_seconds": wall, "threads": rayon_threads(&pool) });
        if let Err(e) = std::fs::write(path, format!("{body}\n")) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    outcome.exit
}

fn rayon_threads(pool: &rayon::ThreadPool) -> usize {
    pool.current_num_threads()
}

fn replay(cli: &Cli, path: &Path) -> i32 {
    let manifest = match read_manifest(path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    if manifest.argv.first().map(String::as_str) == Some("replay") {
        eprintln!("error: manifest records a replay");
        return EXIT_ERROR;
    }
    let mut args = manifest.argv.clone();
    if let Some(n) = cli.threads {
        args.push("--threads".into());
        args.push(n.to_string());
    }
    if let Some(r) = &cli.report {
        args.push("--report".into());
        args.push(r.display().to_string());
    }
    if let Some(t) = &cli.timing {
        args.push("--timing".into());
        args.push(t.display().to_string());
    }
    run(args)
}
