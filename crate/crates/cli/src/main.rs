use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::warn;

use nudgelab_core::harness::{
    convolution_check, default_fit_window, estimate_noise_floor, fit_decay_rate, run_ensemble, sweep,
    verify_assumptions, SweepGrid, VerifyOptions,
};
use nudgelab_core::integrator::ReferencePath;
use nudgelab_core::io::{self, ManifestInfo};
use nudgelab_core::{eta0, parse_config, Error, Execution, Experiment, RunConfig};

const EXIT_CONFIG: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_CHECK: u8 = 3;
const INTERP_SAMPLES: usize = 32;

#[derive(Parser)]
#[command(name = "nudgelab", version, about = "Nudging data assimilation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble of nudged estimates and write the error series.
    Simulate(Common),
    /// Run one ensemble per (mu, delta) cell.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid as `mu=v1,v2,...;delta=v1,v2,...`.
        #[arg(long)]
        grid: String,
    },
    /// Measure the structural constants along the reference trajectory.
    Verify(Common),
    /// Compare the stochastic convolution against its closed-form variance.
    ConvolutionCheck(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides NUDGELAB_OUT_DIR and output.dir.
    #[arg(long, env = "NUDGELAB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    members: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 when the command's acceptance check fails.
    #[arg(long)]
    check: bool,
    /// Run ensemble members one after another.
    #[arg(long)]
    sequential: bool,
}

enum Failure {
    Config(String),
    Guard(String),
    Check(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            Error::BlowUp { .. } => Failure::Guard(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

struct Loaded {
    config: RunConfig,
    out: PathBuf,
    execution: Execution,
    check: bool,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(m) = common.members {
        config.ensemble.members = m;
    }
    if let Some(s) = common.seed {
        config.ensemble.seed = s;
    }
    if let Some(dir) = &common.out_dir {
        config.output.dir = dir.display().to_string();
    }
    config.validate()?;
    let out = PathBuf::from(&config.output.dir);
    let execution = if common.sequential { Execution::Sequential } else { Execution::Parallel };
    Ok(Loaded { config, out, execution, check: common.check })
}

struct Constants {
    alpha: f64,
    c_i: f64,
    eta0: f64,
}

fn constants(exp: &Experiment) -> Result<Constants, Failure> {
    let alpha = exp.spec.measured_alpha();
    let c_i = exp.op.estimate_interp_constant(&exp.spec, INTERP_SAMPLES, exp.config.ensemble.seed)?.value;
    let eta0 = eta0(alpha, c_i).unwrap_or(f64::INFINITY);
    let mu_delta2 = exp.step.mu * exp.op.delta().powi(2);
    if mu_delta2 > eta0 {
        warn!("mu delta^2 = {mu_delta2:.4e} exceeds the estimated threshold eta0 = {eta0:.4e}");
    }
    Ok(Constants { alpha, c_i, eta0 })
}

fn write_manifest(out: &Path, cfg: &RunConfig, command: &str, k: &Constants, start: Instant) -> Result<(), Failure> {
    let info = ManifestInfo {
        command: command.into(),
        alpha_hat: k.alpha,
        c_i_hat: k.c_i,
        eta0_hat: k.eta0,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    io::write_text(out, "manifest.txt", &io::manifest(cfg, &info))?;
    Ok(())
}

fn simulate(common: &Common) -> Result<(), Failure> {
    let start = Instant::now();
    let l = load(common)?;
    let exp = Experiment::from_config(&l.config)?;
    let k = constants(&exp)?;
    let res = run_ensemble(&exp, l.config.ensemble.members, l.config.ensemble.seed, l.execution)?;
    let stride = l.config.time.stride;
    io::write_text(&l.out, "series.csv", &io::series_csv(&res.sample, stride))?;
    if l.config.ensemble.members > 1 {
        io::write_text(&l.out, "ensemble.csv", &io::ensemble_csv(&res, stride))?;
    }
    io::write_text(&l.out, "plot.py", io::PLOT_SCRIPT)?;
    write_manifest(&l.out, &l.config, "simulate", &k, start)?;
    if let Some(f) = res.failures.first() {
        return Err(Failure::Guard(format!(
            "{} of {} members blew up; first: member {} at step {} (t = {}): {}",
            res.failures.len(),
            res.members,
            f.member,
            f.step,
            f.t,
            f.detail
        )));
    }
    let w0 = res.mean_w_h2[0];
    let w_end = *res.mean_w_h2.last().unwrap();
    println!("E||w(0)||_H^2 = {w0:.6e}, E||w(T)||_H^2 = {w_end:.6e}");
    if l.check {
        let floor = estimate_noise_floor(&res.times, &res.member_w_h2(), 0.5 * exp.step.t_end)
            .map(|f| f.value)
            .unwrap_or(0.0);
        let window = default_fit_window(&res.times, &res.mean_w_h2, floor);
        match fit_decay_rate(&res.times, &res.mean_w_h2, window) {
            Ok(fit) if fit.gamma > 0.0 => println!("check: gamma_fit = {:.6e} > 0", fit.gamma),
            Ok(fit) => return Err(Failure::Check(format!("gamma_fit = {:.6e} is not positive", fit.gamma))),
            Err(e) => return Err(Failure::Check(format!("decay fit failed: {e}"))),
        }
    }
    Ok(())
}

fn run_sweep(common: &Common, grid_spec: &str) -> Result<(), Failure> {
    let start = Instant::now();
    let grid = SweepGrid::parse(grid_spec)?;
    let l = load(common)?;
    let exp = Experiment::from_config(&l.config)?;
    let k = constants(&exp)?;
    let cells = sweep(&l.config, &grid, l.execution)?;
    io::write_text(&l.out, "sweep.csv", &io::sweep_csv(&cells))?;
    write_manifest(&l.out, &l.config, &format!("sweep --grid \"{grid_spec}\""), &k, start)?;
    for c in &cells {
        println!(
            "mu = {:<10} delta = {:<10} gamma = {:<14} mu delta^2 = {:.4e} eta0_hat = {:.4e}{}{}",
            c.mu,
            c.delta,
            c.gamma.map(|g| format!("{g:.6e}")).unwrap_or_else(|| "-".into()),
            c.mu_delta2,
            c.eta0_hat,
            if c.beyond_threshold { " [beyond threshold]" } else { "" },
            if c.invalid { " [invalid]" } else { "" },
        );
    }
    if l.check {
        let bad: Vec<String> = cells
            .iter()
            .filter(|c| !c.beyond_threshold && (c.invalid || !c.gamma.is_some_and(|g| g > 0.0)))
            .map(|c| format!("(mu = {}, delta = {})", c.mu, c.delta))
            .collect();
        if !bad.is_empty() {
            return Err(Failure::Check(format!("cells below the threshold without decay: {}", bad.join(", "))));
        }
    }
    Ok(())
}

fn verify(common: &Common) -> Result<(), Failure> {
    let start = Instant::now();
    let l = load(common)?;
    let exp = Experiment::from_config(&l.config)?;
    let stepper = exp.stepper()?;
    let path = ReferencePath::compute(&stepper, &exp.u0)?;
    let opts = VerifyOptions { seed: l.config.ensemble.seed, ..VerifyOptions::default() };
    let report = verify_assumptions(&exp.spec, &path, &exp.op, opts)?;
    let text = report.to_text();
    print!("{text}");
    io::write_text(&l.out, "report.txt", &text)?;
    io::write_text(&l.out, "report.csv", &report.to_csv())?;
    let k = Constants { alpha: report.alpha_hat, c_i: report.c_i_hat, eta0: report.eta0_hat };
    write_manifest(&l.out, &l.config, "verify", &k, start)?;
    if l.check && !report.all_pass() {
        return Err(Failure::Check("assumption report has failing entries".into()));
    }
    Ok(())
}

fn convolution(common: &Common) -> Result<(), Failure> {
    let start = Instant::now();
    let l = load(common)?;
    let exp = Experiment::from_config(&l.config)?;
    let k = constants(&exp)?;
    let report = convolution_check(&exp, l.config.ensemble.members, l.config.ensemble.seed, l.execution)?;
    let text = report.to_text();
    print!("{text}");
    io::write_text(&l.out, "convolution.txt", &text)?;
    write_manifest(&l.out, &l.config, "convolution-check", &k, start)?;
    if l.check && !report.all_pass() {
        return Err(Failure::Check("convolution variance outside three standard errors".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Sweep { common, grid } => run_sweep(common, grid),
        Command::Verify(c) => verify(c),
        Command::ConvolutionCheck(c) => convolution(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Guard(m)) => {
            eprintln!("run aborted: {m}");
            ExitCode::from(EXIT_GUARD)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
