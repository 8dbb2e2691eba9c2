use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mr_qmem::dynamics::{log_grid, sweep_argmax, EnergyDifference};
use mr_qmem::full::{emission_spectra, FullModel, FullModelOptions, FullState};
use mr_qmem::{
    beta_analytic, collective_amplitude, detect_peaks, discretize_waveguide, efficiency_curve,
    energy_difference, optimal_coupling, sweep_coupling, trajectory_expm, uniform_grid,
    AmplitudeVector, ResonatorIndex, SystemParams, Trajectory,
};

use crate::config::{ConfigError, Model, Output, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Compare,
    Peaks,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<mr_qmem::Error> for CliError {
    fn from(e: mr_qmem::Error) -> Self {
        use mr_qmem::Error as E;
        match e {
            E::NonFinite(_) => Self::Numerical(e.to_string()),
            other => Self::Config(ConfigError {
                line: None,
                field: None,
                message: other.to_string(),
            }),
        }
    }
}

/// Files written and human-readable summary lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn write_csv(dir: &Path, name: &str, hash: &str, table: &Table) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut out = String::new();
    out.push_str(&format!("# mr-qmem config-hash={hash}\n"));
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(&path)?;
    f.write_all(out.as_bytes())?;
    Ok(path)
}

fn ensure_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<(), CliError> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("non-finite values in {what}")))
    }
}

fn time_grid(cfg: &RunConfig, params: &SystemParams) -> Result<Vec<f64>, CliError> {
    Ok(uniform_grid(cfg.t_max * params.echo_time(), cfg.samples)?)
}

fn analytic_trajectory(
    init: &AmplitudeVector,
    times: &[f64],
    params: &SystemParams,
) -> Result<Trajectory, CliError> {
    let states = times
        .iter()
        .map(|&t| beta_analytic(t, init, params))
        .collect::<mr_qmem::Result<Vec<_>>>()?;
    Ok(Trajectory::new(times.to_vec(), states, *params)?)
}

struct Simulation {
    trajectory: Trajectory,
    final_full: Option<(FullState, FullModel)>,
}

fn simulate_model(
    model: Model,
    cfg: &RunConfig,
    params: &SystemParams,
    init: &AmplitudeVector,
    times: &[f64],
) -> Result<Simulation, CliError> {
    match model {
        Model::Analytic => Ok(Simulation {
            trajectory: analytic_trajectory(init, times, params)?,
            final_full: None,
        }),
        Model::Reduced => Ok(Simulation {
            trajectory: trajectory_expm(init, times, params)?,
            final_full: None,
        }),
        Model::Full => {
            let grid = discretize_waveguide(params, cfg.modes_per_band)?;
            let model = FullModel::new(grid, *params, FullModelOptions::default())?;
            let start = FullState::from_resonators(init, model.grid())?;
            let states = model.trajectory(&start, times)?;
            let last = states.last().cloned().expect("non-empty time grid");
            let resonators: Vec<AmplitudeVector> =
                states.into_iter().map(|s| s.resonators().clone()).collect();
            Ok(Simulation {
                trajectory: Trajectory::new(times.to_vec(), resonators, *params)?,
                final_full: Some((last, model)),
            })
        }
    }
}

fn check_trajectory(traj: &Trajectory) -> Result<(), CliError> {
    ensure_finite(
        traj.states()
            .iter()
            .flat_map(|s| s.values().iter().flat_map(|z| [z.re, z.im])),
        "trajectory",
    )
}

fn prepare(
    cfg: &RunConfig,
    report: &mut RunReport,
) -> Result<(SystemParams, AmplitudeVector), CliError> {
    let params = cfg.params()?;
    let (init, normalized) = cfg.init_vector(&params)?;
    if normalized {
        report
            .warnings
            .push("note: custom amplitudes were normalized to unit norm".to_owned());
    }
    Ok((params, init))
}

fn e12_table(e: &EnergyDifference, echo: f64) -> Table {
    let mut t = Table::new(["time", "cycles", "e12", "valid"]);
    for ((time, v), ok) in e.series.iter().zip(&e.valid) {
        t.push(vec![
            fmt_f(time),
            fmt_f(time / echo),
            fmt_f(v),
            u8::from(*ok).to_string(),
        ]);
    }
    t
}

pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let mut report = RunReport::default();
    let (params, init) = prepare(cfg, &mut report)?;
    let times = time_grid(cfg, &params)?;
    let sim = simulate_model(cfg.model, cfg, &params, &init, &times)?;
    let traj = &sim.trajectory;
    check_trajectory(traj)?;
    let echo = params.echo_time();
    let hash = cfg.hash();
    fs::create_dir_all(out)?;

    let mut outputs = cfg.outputs.clone();
    outputs.sort();
    for output in outputs {
        let table = match output {
            Output::Amplitudes => {
                let mut header = vec!["time".to_owned(), "cycles".to_owned()];
                for n in params.indices() {
                    header.push(format!("re[{n}]"));
                    header.push(format!("im[{n}]"));
                }
                let mut t = Table::new(header);
                for (time, s) in traj.iter() {
                    let mut row = vec![fmt_f(time), fmt_f(time / echo)];
                    for z in s.values() {
                        row.push(fmt_f(z.re));
                        row.push(fmt_f(z.im));
                    }
                    t.push(row);
                }
                t
            }
            Output::Efficiency => {
                let eff = efficiency_curve(traj);
                let mut t = Table::new(["time", "cycles", "efficiency"]);
                for (time, v) in eff.iter() {
                    t.push(vec![fmt_f(time), fmt_f(time / echo), fmt_f(v)]);
                }
                if let Some(last) = eff.values().last() {
                    report
                        .summary
                        .push(format!("final efficiency = {}", fmt_f(*last)));
                }
                t
            }
            Output::E12 => {
                let e = energy_difference(
                    traj,
                    ResonatorIndex(cfg.e12_pair.0),
                    ResonatorIndex(cfg.e12_pair.1),
                )?;
                e12_table(&e, echo)
            }
            Output::Collective => {
                let col = collective_amplitude(traj);
                let mut t = Table::new(["time", "cycles", "collective"]);
                for (time, v) in col.iter() {
                    t.push(vec![fmt_f(time), fmt_f(time / echo), fmt_f(v)]);
                }
                t
            }
            Output::Spectra => {
                let (state, model) = sim
                    .final_full
                    .as_ref()
                    .expect("spectra output is validated to require the full model");
                let spectra = emission_spectra(state, model.grid())?;
                ensure_finite(
                    spectra
                        .forward
                        .iter()
                        .chain(&spectra.backward)
                        .map(|p| p.density),
                    "spectra",
                )?;
                let mut t = Table::new(["branch", "k", "density"]);
                for (branch, points) in [
                    ("forward", &spectra.forward),
                    ("backward", &spectra.backward),
                ] {
                    for p in points.iter() {
                        t.push(vec![
                            branch.to_owned(),
                            fmt_f(p.wavenumber),
                            fmt_f(p.density),
                        ]);
                    }
                }
                report
                    .summary
                    .push(format!("asymmetry = {}", fmt_f(spectra.asymmetry)));
                t
            }
        };
        let path = write_csv(out, &format!("{}.csv", output.name()), &hash, &table)?;
        report.files.push(path);
    }
    Ok(report)
}

pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let mut report = RunReport::default();
    let (params, init) = prepare(cfg, &mut report)?;
    let g_star = optimal_coupling(&params);
    let lo = cfg.g_min.unwrap_or(g_star / 10.0);
    let hi = cfg.g_max.unwrap_or(g_star * 10.0);
    if lo >= hi {
        return Err(CliError::Config(ConfigError {
            line: None,
            field: Some("g_max".into()),
            message: format!("sweep range is empty ({lo} to {hi})"),
        }));
    }
    let grid = log_grid(lo, hi, cfg.count)?;
    let table_rows = sweep_coupling(&params, &grid, &init)?;
    ensure_finite(table_rows.iter().map(|p| p.eta_echo), "sweep")?;
    let best = sweep_argmax(&table_rows).expect("sweep grid is non-empty");
    let g_best = table_rows[best].coupling;
    report.summary.push(format!(
        "argmax g = {} (eta = {}), g* = {}, relative distance = {}",
        fmt_f(g_best),
        fmt_f(table_rows[best].eta_echo),
        fmt_f(g_star),
        fmt_f((g_best - g_star).abs() / g_star)
    ));
    if best == 0 || best + 1 == table_rows.len() {
        report
            .warnings
            .push("warning: sweep maximum lies on the grid boundary".to_owned());
    }
    let mut t = Table::new(["g", "eta_echo", "eta0_analytic"]);
    for p in &table_rows {
        t.push(vec![
            fmt_f(p.coupling),
            fmt_f(p.eta_echo),
            fmt_f(p.eta0_analytic),
        ]);
    }
    fs::create_dir_all(out)?;
    report
        .files
        .push(write_csv(out, "sweep.csv", &cfg.hash(), &t)?);
    Ok(report)
}

/// `max_n |a_n − b_n| / max_n |b_n|` (absolute when `b` vanishes).
fn relative_deviation(a: &AmplitudeVector, b: &AmplitudeVector) -> f64 {
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let scale = b.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn run_compare(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let mut report = RunReport::default();
    let (params, init) = prepare(cfg, &mut report)?;
    let times = time_grid(cfg, &params)?;
    let analytic = simulate_model(Model::Analytic, cfg, &params, &init, &times)?.trajectory;
    let reduced = simulate_model(Model::Reduced, cfg, &params, &init, &times)?.trajectory;
    let full = simulate_model(Model::Full, cfg, &params, &init, &times)?.trajectory;
    for t in [&analytic, &reduced, &full] {
        check_trajectory(t)?;
    }
    let echo = params.echo_time();
    let mut table = Table::new(["time", "cycles", "analytic_vs_reduced", "reduced_vs_full"]);
    let (mut max_ar, mut max_rf) = (0.0f64, 0.0f64);
    for (i, &t) in times.iter().enumerate() {
        let ar = relative_deviation(&analytic.states()[i], &reduced.states()[i]);
        let rf = relative_deviation(&full.states()[i], &reduced.states()[i]);
        max_ar = max_ar.max(ar);
        max_rf = max_rf.max(rf);
        table.push(vec![fmt_f(t), fmt_f(t / echo), fmt_f(ar), fmt_f(rf)]);
    }
    let eta = |tr: &Trajectory| 1.0 - tr.last().map_or(1.0, |(_, s)| s.norm_sqr());
    report.summary.push(format!(
        "N = {}: max relative deviation analytic vs reduced = {}, reduced vs full = {}",
        params.n_resonators(),
        fmt_f(max_ar),
        fmt_f(max_rf)
    ));
    report.summary.push(format!(
        "final efficiency: analytic = {}, reduced = {}, full = {}",
        fmt_f(eta(&analytic)),
        fmt_f(eta(&reduced)),
        fmt_f(eta(&full))
    ));
    fs::create_dir_all(out)?;
    report
        .files
        .push(write_csv(out, "compare.csv", &cfg.hash(), &table)?);
    Ok(report)
}

pub fn run_peaks(cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let mut report = RunReport::default();
    let (params, init) = prepare(cfg, &mut report)?;
    let times = time_grid(cfg, &params)?;
    let traj = simulate_model(cfg.model, cfg, &params, &init, &times)?.trajectory;
    check_trajectory(&traj)?;
    let e = energy_difference(
        &traj,
        ResonatorIndex(cfg.e12_pair.0),
        ResonatorIndex(cfg.e12_pair.1),
    )?;
    let pulse = params.pulse_duration();
    let peaks = detect_peaks(&e.series, cfg.prominence, pulse)?;
    let echo = params.echo_time();
    let mut table = Table::new(["time", "cycles", "height", "width"]);
    for p in peaks.iter() {
        table.push(vec![
            fmt_f(p.time),
            fmt_f(p.time / echo),
            fmt_f(p.height),
            fmt_f(p.width),
        ]);
    }
    let narrow = peaks.iter().filter(|p| p.width < pulse).count();
    report.summary.push(format!(
        "{} peaks with prominence >= {}; {} narrower than 2pi/(N*Delta) = {}; max width = {}",
        peaks.len(),
        fmt_f(cfg.prominence),
        narrow,
        fmt_f(pulse),
        peaks.max_width().map_or("none".to_owned(), fmt_f)
    ));
    fs::create_dir_all(out)?;
    let hash = cfg.hash();
    report
        .files
        .push(write_csv(out, "peaks.csv", &hash, &table)?);
    report
        .files
        .push(write_csv(out, "e12.csv", &hash, &e12_table(&e, echo))?);
    Ok(report)
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    match command {
        Command::Simulate => run_simulate(cfg, out),
        Command::Sweep => run_sweep(cfg, out),
        Command::Compare => run_compare(cfg, out),
        Command::Peaks => run_peaks(cfg, out),
    }
}
