//! Command-line front end. Every subcommand is a `run_*` function returning
//! its exit code, so tests can drive them without spawning a process.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decay::{sweep_eta, RowStatus, SweepRow};
use crate::energy::{energy_series_direct, energy_series_fast, EnergySeries};
use crate::scenario::{preset_names, ConfigError, Scenario};
use crate::simulator::{simulate_direct, simulate_with_tolerance, stability_warnings, Trajectory};
use crate::verify::{csv_writer, format_number, path_gap, run_checks};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "glassy-decay", version, about = "Simulate wave equations with glassy memory and certify their energy decay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the kernel assumptions and print its report.
    ValidateKernel(SourceArgs),
    /// Integrate a scenario and write trajectory CSVs.
    Simulate(SimulateArgs),
    /// Run every decay and energy check; exit 0 iff all pass.
    Verify(VerifyArgs),
    /// Rescale the kernel to each η and tabulate decay constants.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Bundled scenario: maxwell_glassy, burger2, wave_1d_multimode, conservative.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Fast,
    Direct,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Output directory (overrides the scenario's).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write every N-th grid point.
    #[arg(long, value_name = "N")]
    pub stride: Option<usize>,
    #[arg(long, value_enum, default_value_t = MethodChoice::Fast)]
    pub method: MethodChoice,
    /// Add per-term auxiliary columns z_i, w_i.
    #[arg(long)]
    pub aux: bool,
    /// Omit the energy columns.
    #[arg(long)]
    pub no_energy: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated η values, e.g. "1,2,4".
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub eta: String,
}

/// Where a scenario comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Config(PathBuf),
    Preset(String),
}

impl From<&SourceArgs> for Source {
    fn from(args: &SourceArgs) -> Self {
        match (&args.config, &args.preset) {
            (Some(path), _) => Source::Config(path.clone()),
            (None, Some(name)) => Source::Preset(name.clone()),
            (None, None) => Source::Preset(String::new()),
        }
    }
}

pub fn load(source: &Source) -> Result<Scenario, ConfigError> {
    match source {
        Source::Config(path) => Scenario::from_path(path),
        Source::Preset(name) => Scenario::preset(name),
    }
}

/// Options for [`run_simulate`], mirroring the command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub out: Option<PathBuf>,
    pub stride: Option<usize>,
    pub method: MethodChoice,
    pub aux: bool,
    pub energy: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            out: None,
            stride: None,
            method: MethodChoice::Fast,
            aux: false,
            energy: true,
        }
    }
}

/// Parses argv, dispatches, and returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match cli.command {
        Command::ValidateKernel(args) => run_validate_kernel(&Source::from(&args), out, err),
        Command::Simulate(args) => {
            let options = SimulateOptions {
                out: args.out,
                stride: args.stride,
                method: args.method,
                aux: args.aux,
                energy: !args.no_energy,
            };
            run_simulate(&Source::from(&args.source), &options, out, err)
        }
        Command::Verify(args) => run_verify(&Source::from(&args.source), args.out.as_deref(), out, err),
        Command::Sweep(args) => run_sweep(&Source::from(&args.source), &args.eta, args.out.as_deref(), out, err),
    }
}

fn load_or_report(source: &Source, err: &mut dyn Write) -> Option<Scenario> {
    match load(source) {
        Ok(s) => Some(s),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let ConfigError::UnknownPreset { .. } = e {
                let _ = writeln!(err, "presets: {}", preset_names().join(", "));
            }
            None
        }
    }
}

fn output_dir(scenario: &Scenario, flag: Option<&Path>) -> PathBuf {
    flag.map_or_else(|| scenario.output.dir.clone(), Path::to_path_buf)
}

fn write_file(path: &Path, contents: &[u8], err: &mut dyn Write) -> bool {
    let result = path
        .parent()
        .map_or(Ok(()), fs::create_dir_all)
        .and_then(|_| fs::write(path, contents));
    match result {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            false
        }
    }
}

pub fn run_validate_kernel(source: &Source, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(scenario) = load_or_report(source, err) else {
        return EXIT_USAGE;
    };
    let report = scenario.kernel_report();
    let _ = write!(out, "{report}");
    if report.is_valid() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Trajectory rows `t,mode,u,v,conv[,z_i..,w_i..][,E,E_kin,E_ela,E_his,dE]`.
///
/// Modes are numbered from 1; energy columns repeat the whole-system value on
/// every mode row of a time step.
pub fn trajectory_csv(traj: &Trajectory, energy: Option<&EnergySeries>, stride: usize, aux: bool) -> Vec<u8> {
    let mut w = csv_writer(Vec::new());
    let width = traj.aux_width();
    let mut header: Vec<String> = ["t", "mode", "u", "v", "conv"].iter().map(|s| s.to_string()).collect();
    if aux {
        header.extend((1..=width).map(|i| format!("z_{i}")));
        header.extend((1..=width).map(|i| format!("w_{i}")));
    }
    if energy.is_some() {
        header.extend(["E", "E_kin", "E_ela", "E_his", "dE"].iter().map(|s| s.to_string()));
    }
    let _ = w.write_record(&header);
    let mut record = Vec::with_capacity(header.len());
    for j in (0..traj.len()).step_by(stride.max(1)) {
        for m in 0..traj.mode_count() {
            let view = traj.view(j, m);
            record.clear();
            record.push(format_number(traj.time(j)));
            record.push((m + 1).to_string());
            record.push(format_number(view.u));
            record.push(format_number(view.v));
            record.push(format_number(view.z.iter().sum()));
            if aux {
                record.extend(view.z.iter().map(|&x| format_number(x)));
                record.extend(view.w.iter().map(|&x| format_number(x)));
            }
            if let Some(series) = energy {
                let b = &series.breakdowns[j];
                record.extend([b.total, b.kinetic, b.elastic, b.history, series.rates[j]].map(format_number));
            }
            let _ = w.write_record(&record);
        }
    }
    w.into_inner().unwrap_or_default()
}

pub fn run_simulate(source: &Source, options: &SimulateOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(scenario) = load_or_report(source, err) else {
        return EXIT_USAGE;
    };
    let stride = options.stride.unwrap_or(scenario.output.stride);
    if stride == 0 {
        let _ = writeln!(err, "error: --stride must be at least 1");
        return EXIT_USAGE;
    }
    let report = scenario.kernel_report();
    if !report.is_valid() {
        let _ = writeln!(err, "error: kernel rejected");
        let _ = write!(err, "{report}");
        return EXIT_USAGE;
    }
    for warning in stability_warnings(&scenario.operator, &scenario.kernel, scenario.grid.dt()) {
        let _ = writeln!(err, "warning: {warning}");
    }
    let dir = output_dir(&scenario, options.out.as_deref());
    let kernel = &scenario.kernel;

    let mut fast = None;
    if matches!(options.method, MethodChoice::Fast | MethodChoice::Both) {
        let traj = match simulate_with_tolerance(
            &scenario.operator,
            kernel,
            &scenario.initial,
            scenario.grid,
            scenario.mass_tolerance,
        ) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        };
        let series = energy_series_fast(kernel, &traj).expect("fast trajectory carries auxiliaries");
        let csv = trajectory_csv(&traj, options.energy.then_some(&series), stride, options.aux);
        let path = dir.join("trajectory_fast.csv");
        if !write_file(&path, &csv, err) {
            return EXIT_USAGE;
        }
        let _ = writeln!(out, "wrote {}", path.display());
        fast = Some((traj, series));
    }
    if matches!(options.method, MethodChoice::Direct | MethodChoice::Both) {
        let grid = scenario.direct_grid();
        let traj = match simulate_direct(&scenario.operator, kernel, &scenario.initial, grid) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        };
        let series = energy_series_direct(kernel, &traj);
        let csv = trajectory_csv(&traj, options.energy.then_some(&series), stride, options.aux);
        let path = dir.join("trajectory_direct.csv");
        if !write_file(&path, &csv, err) {
            return EXIT_USAGE;
        }
        let _ = writeln!(out, "wrote {}", path.display());
        if let Some((fast_traj, fast_series)) = &fast {
            let gap = path_gap(fast_traj, &traj, fast_series, &series);
            let _ = writeln!(
                out,
                "max gap fast vs direct: {} (t ≤ {})",
                format_number(gap),
                grid.final_time()
            );
        }
    }
    EXIT_PASS
}

pub fn run_verify(source: &Source, out_dir: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(scenario) = load_or_report(source, err) else {
        return EXIT_USAGE;
    };
    let report = run_checks(&scenario);
    let text = report.to_text();
    let _ = write!(out, "{text}");
    let dir = output_dir(&scenario, out_dir);
    if !write_file(&dir.join("verify_report.txt"), text.as_bytes(), err)
        || !write_file(&dir.join("verify_report.csv"), report.to_csv().as_bytes(), err)
    {
        return EXIT_USAGE;
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Parses `"1, 2,4"`; empty pieces are ignored.
pub fn parse_eta_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number in --eta: '{s}'")))
        .collect()
}

fn optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv_writer(Vec::new());
    let _ = w.write_record(["eta", "k0", "alpha_theory", "alpha_fitted", "bound_margin", "komornik_max", "status"]);
    for row in rows {
        let _ = w.write_record([
            format_number(row.eta),
            optional(row.k0),
            optional(row.alpha_theory),
            optional(row.alpha_fitted),
            optional(row.bound_margin),
            optional(row.komornik_max),
            row.status.to_string(),
        ]);
    }
    w.into_inner().unwrap_or_default()
}

pub fn run_sweep(source: &Source, etas: &str, out_dir: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let etas = match parse_eta_list(etas) {
        Ok(v) if v.is_empty() => {
            let _ = writeln!(err, "error: no sweep points");
            return EXIT_USAGE;
        }
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let Some(scenario) = load_or_report(source, err) else {
        return EXIT_USAGE;
    };
    let rows = sweep_eta(
        &scenario.kernel,
        &etas,
        &scenario.operator,
        &scenario.initial,
        scenario.grid,
        &scenario.checks.decay,
    );
    let csv = sweep_csv(&rows);
    let _ = out.write_all(&csv);
    let path = output_dir(&scenario, out_dir).join("sweep.csv");
    if !write_file(&path, &csv, err) {
        return EXIT_USAGE;
    }
    let limit = 1.0 + scenario.checks.decay.bound_tolerance;
    let bound_failed = rows
        .iter()
        .any(|r| r.status == RowStatus::Ok && r.bound_margin.is_some_and(|m| m > limit));
    if bound_failed {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}
