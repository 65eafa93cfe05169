//! The `orthotropic` command line: `exponents`, `simulate`, `selfsim`,
//! `verify-sobolev` and `report`.
//!
//! Each command returns its report text and the files it wrote; [`run_cli`]
//! prints the report and maps errors to exit codes (0 success, 1 usage or
//! configuration error, 2 numerical failure). CSV outputs never carry a
//! timestamp; the report header does unless `--no-timestamp` is given.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::diagnostics::compare_to_theory;
use crate::exponents::{
    embedding_recursion, feasibility, linf_decay_law, support_measure_exponents,
    support_radius_law, AnisotropyProfile, ExponentError,
};
use crate::lemmas::{self, RecursionSpec};
use crate::plot::{loglog_svg, Series};
use crate::selfsim::{
    self, build_solution, cone_constants, energy_monotone_check, extend, flux_consistency_check,
    picard_iterate, residual_check, ExtendOptions, PicardOptions, ResidualWindow, SelfSimError,
    SelfSimilarParams,
};
use crate::sobolev::{self, estimate_constant, RandomBumps, SobolevError, SobolevParams};
use crate::solver::{self, snapshot::write_snapshot, Grid, SolverError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<SelfSimError> for CliError {
    fn from(e: SelfSimError) -> Self {
        match e {
            SelfSimError::Regime(_) | SelfSimError::Contract(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SobolevError> for CliError {
    fn from(e: SobolevError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "orthotropic",
    version,
    about = "Experiments with orthotropic slow diffusion"
)]
pub struct Cli {
    /// Omit the timestamp line from report headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived exponents, feasibility and the embedding recursion of a profile.
    Exponents(ExponentsArgs),
    /// Run an experiment file and compare with the predicted rates.
    Simulate(SimulateArgs),
    /// Build and verify the self-similar solution emanating from zero.
    Selfsim(SelfsimArgs),
    /// Estimate the anisotropic Sobolev constants on random fields.
    VerifySobolev(SobolevArgs),
    /// Quick self-checks of every module.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    /// Comma-separated exponents p_1,...,p_N.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub p: Vec<f64>,
    /// σ of the embedding recursion.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Ellipticity constant Λ ≥ 1.
    #[arg(long, default_value_t = 1.0)]
    pub ellipticity: f64,
    /// Directory for the report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment file.
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write log-log SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Write snapshot files.
    #[arg(long)]
    pub snapshots: bool,
}

#[derive(Debug, Args)]
pub struct SelfsimArgs {
    #[arg(long, default_value_t = 3.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Cone parameter δ̄ ∈ (0, 1).
    #[arg(long, default_value_t = selfsim::DEFAULT_DELTA_BAR)]
    pub delta_bar: f64,
    /// End of the extension in the similarity variable.
    #[arg(long, default_value_t = 2.0)]
    pub smax: f64,
    /// Picard nodes per unit of s.
    #[arg(long, default_value_t = 10_000)]
    pub nodes_per_unit: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Tolerance of the energy identity.
    #[arg(long, default_value_t = 1e-4)]
    pub energy_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SobolevArgs {
    /// Comma-separated exponents.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub p: Vec<f64>,
    /// Comma-separated weights α_i (default all 1).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// θ ∈ [0, p̄/p̄*] (default half the upper end).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Cells per axis (default 48 in 2-D, 20 in 3-D, 12 above).
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Also run `barenblatt_1d.toml` and `anisotropic_3d.toml`.
    #[arg(long)]
    pub with_simulations: bool,
    /// Directory holding the reference experiment files.
    #[arg(long)]
    pub configs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Report text plus the files written.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub text: String,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn write_file(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Version line, plus wall-clock start and elapsed time when `timestamp`.
fn header(command: &str, timestamp: Option<(SystemTime, Instant)>) -> String {
    let mut h = format!("# orthotropic {} {command}\n", env!("CARGO_PKG_VERSION"));
    if let Some((wall, start)) = timestamp {
        let secs = wall
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(
            h,
            "# generated at unix time {secs}, took {:.2} s",
            start.elapsed().as_secs_f64()
        );
    }
    h
}

/// Parses `args` (program name first), runs the command, prints the report
/// and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
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
    match execute(&cli) {
        Ok((out, code)) => {
            print!("{}", out.text);
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command. The exit code is [`EXIT_NUMERICAL`] when a
/// verification inside the command failed without an error being raised.
pub fn execute(cli: &Cli) -> Result<(CommandOutput, i32), CliError> {
    let stamp = (!cli.no_timestamp).then(|| (SystemTime::now(), Instant::now()));
    let (name, result) = match &cli.command {
        Command::Exponents(a) => ("exponents", cmd_exponents(a)),
        Command::Simulate(a) => ("simulate", cmd_simulate(a)),
        Command::Selfsim(a) => ("selfsim", cmd_selfsim(a)),
        Command::VerifySobolev(a) => ("verify-sobolev", cmd_verify_sobolev(a)),
        Command::Report(a) => ("report", cmd_report(a)),
    };
    let (body, ok) = result?;
    let mut out = CommandOutput {
        text: header(name, stamp) + &body.text,
        files: body.files,
    };
    let dir = match &cli.command {
        Command::Exponents(a) => a.out.clone(),
        Command::Selfsim(a) => a.out.clone(),
        Command::VerifySobolev(a) => a.out.clone(),
        Command::Report(a) => a.out.clone(),
        Command::Simulate(_) => out
            .files
            .first()
            .and_then(|f| f.parent().map(Path::to_path_buf)),
    };
    if let Some(dir) = dir {
        prepare_dir(&dir)?;
        let text = out.text.clone();
        out.write_file(dir.join(format!("{name}_report.txt")), &text)?;
    }
    let files = out.files.clone();
    for f in &files {
        out.line(format!("wrote {}", f.display()));
    }
    Ok((out, if ok { EXIT_OK } else { EXIT_NUMERICAL }))
}

type Outcome = Result<(CommandOutput, bool), CliError>;

/// `x` rounded to 12 significant digits, shortest form.
fn num(x: f64) -> String {
    match format!("{x:.11e}").parse::<f64>() {
        Ok(r) if x.is_finite() => format!("{r}"),
        _ => format!("{x}"),
    }
}

fn nums(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", inner.join(", "))
}

fn axes(list: &[usize]) -> String {
    if list.is_empty() {
        return "none".into();
    }
    list.iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_exponents(args: &ExponentsArgs) -> Outcome {
    let profile = AnisotropyProfile::new(args.p.clone(), args.ellipticity)?;
    let d = profile.derived();
    let f = feasibility(&profile);
    let mut o = CommandOutput::default();
    o.line(format!(
        "p = {:?}  (N = {}, Λ = {})",
        profile.exponents(),
        profile.dim(),
        profile.ellipticity()
    ));
    o.line(format!("p̄ = {}", num(d.pbar)));
    match d.pbar_star {
        Some(s) => o.line(format!("p̄* = {}", num(s))),
        None => o.line("p̄* undefined (p̄ ≥ N)"),
    }
    o.line(format!("p̄_1 = {}  p̄_2 = {}", num(d.pbar_1), num(d.pbar_2)));
    o.line(format!("λ = {}  λ_2 = {}", num(d.lambda), num(d.lambda_2)));
    o.line(format!("slow directions: {}", axes(&f.slow_directions)));
    o.line(format!(
        "p̄ < N: {}  p_max < p̄_1 with a slow axis: {}  max(2, p_max) < p̄_2: {}",
        f.pbar_lt_n, f.condp2_ok, f.boundedness_ok
    ));
    o.line(format!(
        "p̄_1 > 2: {}  p̄_2 > 2: {}",
        f.pbar1_gt_2, f.pbar2_gt_2
    ));
    if f.mixed_regime {
        o.line("mixed regime: some axes are not slow; rates are not expected to be optimal");
    }
    for &j in &f.slow_directions {
        match support_radius_law(&profile, j) {
            Ok(law) => o.line(format!(
                "R_{} - 2R0 ~ t^{} m^{}",
                j + 1,
                num(law.t_exponent),
                num(law.mass_exponent)
            )),
            Err(e) => o.line(format!("R_{}: {e}", j + 1)),
        }
    }
    match linf_decay_law(&profile) {
        Ok(law) => o.line(format!(
            "sup-norm ≲ t^{} m^{}",
            num(law.t_exponent),
            num(law.mass_exponent)
        )),
        Err(e) => o.line(format!("sup-norm decay: {e}")),
    }
    if let Ok(law) = support_measure_exponents(&profile) {
        o.line(format!(
            "support measure ≲ t^{} m^{}",
            num(law.t_exponent),
            num(law.mass_exponent)
        ));
    }

    let mut sorted = profile.exponents().to_vec();
    sorted.sort_by(f64::total_cmp);
    let rec = embedding_recursion(&sorted, args.sigma)?;
    o.line(format!(
        "embedding recursion (σ = {}, p sorted = {sorted:?}):",
        args.sigma
    ));
    o.line(format!("  q^n = {}", nums(&rec.q)));
    o.line(format!("  cascade r_k = {}", nums(&rec.cascade)));
    match (rec.reached_at, rec.stalled_limit) {
        (Some(n), _) => o.line(format!("  q^{n} ≥ p_N")),
        (None, Some(lim)) => o.line(format!(
            "  stalled at {}{}",
            num(lim),
            rec.stalled_at_cascade
                .map(|k| format!(" = r_{k}"))
                .unwrap_or_default()
        )),
        _ => {}
    }
    o.line(format!("  verdict: {}", rec.verdict));
    Ok((o, true))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let cfg = ExperimentConfig::load(&args.config)?;
    let rc = cfg.run_config()?;
    let dir = args.out.clone().unwrap_or_else(|| cfg.output_dir());
    let prefix = cfg.prefix();
    let mut o = CommandOutput::default();
    o.line(format!("config: {}", args.config.display()));
    o.line(format!(
        "p = {:?}, cells {:?}, half-widths {:?}",
        cfg.flux.p,
        rc.grid.cells(),
        rc.grid.half_widths()
    ));
    o.line(format!(
        "datum: {} R0 = {} A = {}; horizon {}",
        cfg.initial.shape, rc.r0, rc.amplitude, rc.horizon
    ));

    let traj = solver::run(&rc).map_err(|e| match e {
        SolverError::SupportReachedBoundary { time } => CliError::Numerical(format!(
            "run aborted at t = {time}: the support reached the boundary collar"
        )),
        other => other.into(),
    })?;
    o.line(format!(
        "{} steps, dt in [{:.3e}, {:.3e}]",
        traj.steps, traj.dt_min, traj.dt_max
    ));

    prepare_dir(&dir)?;
    o.write_file(
        dir.join(format!("{prefix}_series.csv")),
        &traj.diagnostics.to_csv(),
    )?;
    if cfg.output.snapshots || args.snapshots {
        for (k, snap) in traj.snapshots().iter().enumerate() {
            let stem = dir.join(format!("{prefix}_snap{k:03}"));
            let written = write_snapshot(snap, &stem).map_err(CliError::from)?;
            o.files.extend(written);
        }
    }

    let mut ok = true;
    if let Some(a) = &traj.audit {
        o.line(format!(
            "per-step audit: max L1 increase {:.3e}, max L2 increase {:.3e}, mass drift {:.3e}, min value {:.3e}",
            a.max_l1_increase, a.max_l2_increase, a.max_mass_drift, a.min_value
        ));
    }
    let d = &traj.diagnostics;
    if d.norms.l1.first().copied().unwrap_or(0.0) == 0.0 {
        o.line("trivial run: the datum is zero and the solution stays zero");
        return Ok((o, ok));
    }
    let profile = AnisotropyProfile::new(cfg.flux.p.clone(), cfg.flux.ellipticity)?;
    match compare_to_theory(d, &profile, traj.r0(), cfg.fit_window()) {
        Ok(cmp) => {
            ok = cmp.l1_nonincreasing && cmp.l2_nonincreasing;
            o.text.push_str(&cmp.to_string());
        }
        Err(e) => o.line(format!("rate fit unavailable: {e}")),
    }

    if cfg.output.svg || args.svg {
        let t = &d.norms.times;
        let radii: Vec<Vec<f64>> = (0..d.dim()).map(|j| d.support.axis(j)).collect();
        let labels: Vec<String> = (1..=d.dim()).map(|j| format!("R_{j}")).collect();
        let series: Vec<Series> = radii
            .iter()
            .zip(&labels)
            .map(|(r, l)| Series {
                label: l,
                x: t,
                y: r,
            })
            .collect();
        if let Some(svg) = loglog_svg("support radii", "t", "R", &series) {
            o.write_file(dir.join(format!("{prefix}_radii.svg")), &svg)?;
        }
        let norms = [
            Series {
                label: "L1",
                x: t,
                y: &d.norms.l1,
            },
            Series {
                label: "L2",
                x: t,
                y: &d.norms.l2,
            },
            Series {
                label: "sup",
                x: t,
                y: &d.norms.linf,
            },
        ];
        if let Some(svg) = loglog_svg("norms", "t", "norm", &norms) {
            o.write_file(dir.join(format!("{prefix}_norms.svg")), &svg)?;
        }
    }
    Ok((o, ok))
}

fn residual_window(params: &SelfSimilarParams, s_max: f64) -> Option<ResidualWindow> {
    let t1 = 1.1f64;
    let x_hi = (0.95 * s_max / t1.powf(params.beta())).min(1.6);
    (x_hi >= 1.4).then_some(ResidualWindow {
        t: (1.0, t1),
        x: (1.3, x_hi),
    })
}

pub fn cmd_selfsim(args: &SelfsimArgs) -> Outcome {
    let params = SelfSimilarParams::from_beta(args.p, args.beta)?;
    let cone = cone_constants(&params, args.delta_bar)?;
    if !(args.smax > 1.0) {
        return Err(CliError::Usage(format!(
            "--smax {} must exceed 1",
            args.smax
        )));
    }
    let mut o = CommandOutput::default();
    let mut ok = true;
    let mut verdict = |o: &mut CommandOutput, name: &str, pass: bool, detail: String| {
        ok &= pass;
        o.line(format!(
            "{:<4} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        ));
    };
    o.line(format!(
        "p = {}, β = {}, α = {}, δ̄ = {}",
        params.p(),
        params.beta(),
        params.alpha(),
        cone.delta_bar
    ));
    o.line(format!(
        "cone: a = {}, b = {}, δ = {}",
        cone.a, cone.b, cone.delta
    ));

    let opts = PicardOptions {
        nodes_per_unit: args.nodes_per_unit,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let picard = picard_iterate(&params, &cone, &opts)?;
    verdict(
        &mut o,
        "Picard iteration",
        picard.residual() < args.tol,
        format!(
            "{} iterations, last change {:.3e}, every iterate inside the cone",
            picard.iterations,
            picard.residual()
        ),
    );
    let tr = &picard.trajectory;
    let v_pos = tr.s.iter().zip(&tr.v).all(|(&s, &v)| s <= 1.0 || v > 0.0);
    verdict(
        &mut o,
        "V > 0 on (1, 1+δ]",
        v_pos,
        format!("{} nodes", tr.len()),
    );

    let ext = extend(
        &params,
        tr,
        &ExtendOptions::new(args.smax, args.nodes_per_unit),
    )?;
    let last = ext.len() - 1;
    o.line(format!(
        "extended to s = {} with {} nodes: U = {:.3e}, V = {:.3e}",
        ext.s_max(),
        ext.len(),
        ext.u[last],
        ext.v[last]
    ));
    let energy = energy_monotone_check(&params, &ext, args.energy_tol);
    verdict(
        &mut o,
        "energy identity and growth",
        energy.passed,
        format!(
            "scaled defect {:.3} (passes ≤ 1){}",
            energy.max_defect,
            energy
                .first_failure
                .map(|s| format!(", first failure at s = {s}"))
                .unwrap_or_default()
        ),
    );
    let flux = flux_consistency_check(&params, &ext, 1e-3, 1.0);
    verdict(
        &mut o,
        "flux consistency",
        flux.passed,
        format!("scaled defect {:.3} (passes ≤ 1)", flux.max_defect),
    );

    match residual_window(&params, ext.s_max()) {
        Some(w) => {
            let sol = build_solution(&ext, &params)?;
            let coarse = residual_check(&sol, &w, 0.02, 0.02, 0.05)?;
            let fine = residual_check(&sol, &w, 0.01, 0.01, 0.05)?;
            verdict(
                &mut o,
                "PDE residual under refinement",
                fine <= 0.5 * coarse,
                format!(
                    "t in [{}, {}], x in [{}, {:.3}]: {coarse:.3e} -> {fine:.3e} (ratio {:.2})",
                    w.t.0,
                    w.t.1,
                    w.x.0,
                    w.x.1,
                    coarse / fine
                ),
            );
        }
        None => o.line("residual study skipped: --smax too small for a window"),
    }
    o.line(format!("all checks: {}", if ok { "PASS" } else { "FAIL" }));

    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        o.write_file(dir.join("selfsim_trajectory.csv"), &ext.to_csv(&params))?;
    }
    Ok((o, ok))
}

fn sobolev_grid(dim: usize, cells: Option<usize>) -> Result<Grid, CliError> {
    let cells = cells.unwrap_or(match dim {
        1 | 2 => 48,
        3 => 20,
        _ => 12,
    });
    Ok(Grid::cube(dim, 1.0, cells)?)
}

pub fn cmd_verify_sobolev(args: &SobolevArgs) -> Outcome {
    let dim = args.p.len();
    let pbar = crate::exponents::harmonic_mean(&args.p)?;
    let theta = match args.theta {
        Some(t) => t,
        None => 0.5 * pbar / crate::exponents::sobolev_conjugate(pbar, dim)?,
    };
    let alpha = args.alpha.clone().unwrap_or_else(|| vec![1.0; dim]);
    let params = SobolevParams::new(args.p.clone(), alpha, args.sigma, theta)?;
    let sampler = RandomBumps::new(sobolev_grid(dim, args.cells)?);
    let mut o = CommandOutput::default();
    o.line(format!(
        "p = {:?}, α = {:?}, σ = {}, θ = {}",
        params.exponents(),
        params.weights(),
        params.sigma(),
        params.theta()
    ));
    o.line(format!(
        "p̄ = {}, p̄* = {}, p*_α = {}, q = {}",
        num(params.pbar()),
        num(params.pbar_star()),
        num(params.p_star_alpha()),
        num(params.q())
    ));
    o.line(format!(
        "grid {:?} cells on [-1, 1]^{dim}; {} trials from master seed {}",
        sampler.grid.cells(),
        args.trials,
        args.seed
    ));
    let est = estimate_constant(&sampler, args.seed, args.trials, &params)?;
    if est.trials.is_empty() {
        o.line("no samples");
    } else {
        o.line(format!(
            "max elliptic ratio:  {:.6}",
            est.elliptic_constant()
        ));
        o.line(format!(
            "max parabolic ratio: {:.6}",
            est.parabolic_constant()
        ));
    }
    o.line(format!("violations: {}", est.violations.len()));
    for v in est.violations.iter().take(10) {
        o.line(format!(
            "  trial {} ({:?}): lhs {:.3e}, rhs {:.3e}",
            v.trial, v.inequality, v.lhs, v.rhs
        ));
    }
    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        o.write_file(dir.join("sobolev_ratios.csv"), &est.to_csv())?;
    }
    Ok((o, est.violations.is_empty()))
}

fn default_configs_dir() -> PathBuf {
    let local = PathBuf::from("configs");
    if local.join("barenblatt_1d.toml").is_file() {
        local
    } else {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
    }
}

pub fn cmd_report(args: &ReportArgs) -> Outcome {
    let mut o = CommandOutput::default();
    let mut ok = true;
    let mut check = |o: &mut CommandOutput, name: &str, pass: bool, detail: String| {
        ok &= pass;
        o.line(format!(
            "{:<4} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        ));
    };

    // exponents
    let iso = AnisotropyProfile::from_exponents(&[2.5, 2.5, 2.5])?;
    check(
        &mut o,
        "λ for p = (2.5, 2.5, 2.5)",
        (iso.lambda() - 4.0).abs() < 1e-14,
        num(iso.lambda()),
    );
    let aniso = AnisotropyProfile::from_exponents(&[2.2, 2.5, 2.8])?;
    let n = aniso.dim() as f64;
    let mut t_sum = 0.0;
    let mut m_sum = 0.0;
    for j in 0..aniso.dim() {
        let law = support_radius_law(&aniso, j)?;
        t_sum += law.t_exponent;
        m_sum += law.mass_exponent;
    }
    let lam = aniso.lambda();
    let (dt, dm) = (
        (t_sum - n / lam).abs(),
        (m_sum - n * (aniso.pbar() - 2.0) / lam).abs(),
    );
    check(
        &mut o,
        "exponent sums for p = (2.2, 2.5, 2.8)",
        dt < 1e-12 && dm < 1e-12,
        format!("|Σt - N/λ| = {dt:.2e}, |Σm - N(p̄-2)/λ| = {dm:.2e}"),
    );
    let rec = embedding_recursion(&[2.0, 2.0, 3.0], 2.0)?;
    check(
        &mut o,
        "embedding recursion p = (2, 2, 3), σ = 2",
        rec.verdict && rec.reached_at == Some(1) && (rec.q[0] - 10.0 / 3.0).abs() < 1e-12,
        format!("q^1 = {}", num(rec.q[0])),
    );
    let rec = embedding_recursion(&[1.5, 2.0, 4.0], 2.0)?;
    check(
        &mut o,
        "embedding recursion p = (1.5, 2, 4), σ = 2",
        !rec.verdict && rec.stalled_at_cascade.is_some(),
        format!(
            "stalled at {} = r_{}",
            rec.stalled_limit.map(num).unwrap_or_default(),
            rec.stalled_at_cascade.map(|k| k.to_string()).unwrap_or("?".into())
        ),    );

    // lemma
    let lattice = lemmas::test_lattice();
    let failures = lemmas::sufficiency_failures(&lattice, 200);
    check(
        &mut o,
        "convergence lemma lattice",
        failures.is_empty(),
        format!("{} specs, {} failures", lattice.len(), failures.len()),
    );
    let closed = RecursionSpec::new(2.0, 2.0, vec![1.0], 0.25)
        .and_then(|s| lemmas::simulate(&s, 40))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let err = closed
        .z
        .iter()
        .enumerate()
        .map(|(k, z)| (z - 2f64.powi(-(k as i32 + 2))).abs() / 2f64.powi(-(k as i32 + 2)))
        .fold(0.0, f64::max);
    check(
        &mut o,
        "closed form Z_n = 2^-(n+2)",
        err <= 1e-12,
        format!("max relative error {err:.2e}"),
    );

    // self-similar construction
    let params = SelfSimilarParams::from_beta(3.0, 1.0)?;
    let cone = cone_constants(&params, selfsim::DEFAULT_DELTA_BAR)?;
    check(
        &mut o,
        "cone constants for (p, β) = (3, 1)",
        cone.a == 1.0 / 16.0 && cone.b == 1.0 && cone.delta == 3.0 / 64.0,
        format!("a = {}, b = {}, δ = {}", cone.a, cone.b, cone.delta),
    );
    let picard = picard_iterate(&params, &cone, &PicardOptions::default())?;
    check(
        &mut o,
        "Picard iteration",
        picard.residual() < 1e-10,
        format!(
            "{} iterations, change {:.3e}",
            picard.iterations,
            picard.residual()
        ),
    );

    // Sobolev
    let sp = SobolevParams::unit_weights(vec![1.5, 2.5])?;
    let sampler = RandomBumps::new(sobolev_grid(2, None)?);
    let est = estimate_constant(&sampler, 1, 100, &sp)?;
    check(
        &mut o,
        "Sobolev sampling, 100 trials in 2-D",
        est.violations.is_empty(),
        format!(
            "max ratios {:.4} / {:.4}",
            est.elliptic_constant(),
            est.parabolic_constant()
        ),
    );
    let sample = {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        sobolev::FieldSampler::sample(&sampler, &mut rng)
    };
    let base = &sample.slices[0];
    let (l, r) = sobolev::elliptic_sides(base, &sp)?;
    let scaled = base.scaled(37.5);
    let (ls, rs) = sobolev::elliptic_sides(&scaled, &sp)?;
    let drift = ((ls / rs) - (l / r)).abs() / (l / r);
    check(
        &mut o,
        "scale invariance of the elliptic ratio",
        drift <= 1e-12,
        format!("relative change {drift:.2e}"),
    );

    if args.with_simulations {
        let dir = args.configs.clone().unwrap_or_else(default_configs_dir);
        for name in ["barenblatt_1d.toml", "anisotropic_3d.toml"] {
            let path = dir.join(name);
            let cfg = ExperimentConfig::load(&path)?;
            let traj = solver::run(&cfg.run_config()?)?;
            let profile = AnisotropyProfile::from_exponents(&cfg.flux.p)?;
            let cmp = compare_to_theory(&traj.diagnostics, &profile, traj.r0(), cfg.fit_window())
                .map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
            o.line(format!("-- {name}"));
            o.text.push_str(&cmp.to_string());
        }
    }
    o.line(format!("overall: {}", if ok { "PASS" } else { "FAIL" }));
    Ok((o, ok))
}
