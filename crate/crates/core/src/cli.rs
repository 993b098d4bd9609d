//! Command-line front end. Every subcommand reads the shared TOML config
//! (or defaults), applies flag overrides, and writes `<output>.csv` plus a
//! `<output>.json` sidecar.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, RunConfig};
use crate::dynamics::{pq_commutator_sup, weyl_commutator_sup, Entry, WeylSymbol};
use crate::error::{Error, Result};
use crate::experiment::{
    fit_exponential_decay, read_table_csv, regime_preset, run_experiment, write_table_csv,
    EstimateTable, ObservableKind, Sidecar,
};
use crate::green::{fractional_moments, SpectralParameterZ};
use crate::model::{assemble_h, sample_params, ModelParams};
use crate::spectral::{correlator_q, diagonalize_with, EnergyWindow, SpectralData};
use crate::states::{pq_correlations, ThermalSpec};

#[derive(Debug, Parser)]
#[command(name = "oscloc", version, about = "Localization diagnostics for disordered oscillator lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one realization of the one-particle matrix.
    Spectrum(ConfigArgs),
    /// Time-sup of the Weyl or position/momentum commutator on one realization.
    LrCommutator(ConfigArgs),
    /// Ground-state position/momentum correlations at `observable.time`.
    GsCorrelations(ConfigArgs),
    /// Thermal position/momentum correlations at `observable.beta` and `observable.time`.
    ThermalCorrelations(ConfigArgs),
    /// Disorder-averaged fractional moments of the Green function.
    GreenMoments(ConfigArgs),
    /// The spectral correlator `Q_alpha(x, y)` on one realization.
    Correlator(ConfigArgs),
    /// Exponential fit to a `separation,mean,stderr,count` table.
    FitDecay(FitArgs),
    /// Disorder-averaged table for the configured observable or a preset.
    RunExperiment(ExperimentArgs),
    /// Print (or write) the configurations making up a regime preset.
    Preset(PresetArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// TOML configuration file; defaults are used for anything missing.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub half_width: Option<usize>,
    /// Disorder width `W`.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output path stem.
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input table CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub r_min: usize,
    #[arg(long)]
    pub r_max: usize,
    #[arg(long, default_value = "fit")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Run every configuration of a preset instead of `--config`.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    pub name: String,
    /// Directory to write one TOML file per run into.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl ConfigArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.dim {
            cfg.model.dim = v;
        }
        if let Some(v) = self.half_width {
            cfg.model.half_width = v;
        }
        if let Some(v) = self.width {
            cfg.model.width = v;
        }
        if let Some(v) = self.seed {
            cfg.execution.seed = v;
        }
        if let Some(v) = self.realizations {
            cfg.execution.realizations = v;
        }
        if let Some(v) = self.workers {
            cfg.execution.workers = v;
        }
        if let Some(v) = &self.output {
            cfg.execution.output = v.clone();
        }
    }

    /// Loads the config, applies overrides and re-validates the result by
    /// parsing its canonical text.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?.0,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        crate::config::parse_config(&cfg.to_toml())
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum(a) => single("spectrum", &a, spectrum),
        Command::LrCommutator(a) => single("lr-commutator", &a, lr_commutator),
        Command::GsCorrelations(a) => single("gs-correlations", &a, |c, s, p| correlations(c, s, p, true)),
        Command::ThermalCorrelations(a) => {
            single("thermal-correlations", &a, |c, s, p| correlations(c, s, p, false))
        }
        Command::Correlator(a) => single("correlator", &a, correlator),
        Command::GreenMoments(a) => green_moments(&a),
        Command::FitDecay(a) => fit_decay(&a),
        Command::RunExperiment(a) => experiment(&a),
        Command::Preset(a) => preset(&a),
    }
}

/// CSV header and rows.
type Table<R> = Result<(Vec<&'static str>, Vec<R>)>;

fn csv_path(stem: &str) -> PathBuf {
    PathBuf::from(format!("{stem}.csv"))
}

fn json_path(stem: &str) -> PathBuf {
    PathBuf::from(format!("{stem}.json"))
}

fn sidecar(
    subcommand: &str,
    cfg: &RunConfig,
    realizations: u64,
    resamples: u64,
    started: Instant,
    outputs: Vec<String>,
) -> Result<Sidecar> {
    Ok(Sidecar {
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        config_text: cfg.to_toml(),
        config: serde_json::to_value(cfg)?,
        seed: cfg.execution.seed,
        realizations,
        resamples,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs,
        fit: None,
    })
}

fn write_records<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Commands evaluated on realization 0 of the configured disorder.
fn single<R: Serialize>(
    name: &str,
    args: &ConfigArgs,
    eval: impl Fn(&RunConfig, &SpectralData, &ModelParams) -> Table<R>,
) -> Result<()> {
    let started = Instant::now();
    let cfg = args.resolve()?;
    let lattice = Arc::new(cfg.model.lattice()?);
    let params = sample_params(&cfg.model.disorder(cfg.execution.seed), &lattice, 0)?;
    let spec = diagonalize_with(&assemble_h(&params), &cfg.execution.spectral_options())?;
    let (header, rows) = eval(&cfg, &spec, &params)?;
    let stem = &cfg.execution.output;
    write_records(&csv_path(stem), &header, &rows)?;
    sidecar(name, &cfg, 1, 0, started, vec![csv_path(stem).display().to_string()])?
        .write(&json_path(stem))
}

fn pairs(cfg: &RunConfig, params: &ModelParams) -> Vec<(usize, usize)> {
    cfg.execution
        .pairs
        .pairs(params.lattice())
        .into_values()
        .flatten()
        .collect()
}

fn spectrum(
    _: &RunConfig,
    spec: &SpectralData,
    _: &ModelParams,
) -> Table<(usize, f64, f64)> {
    let rows = spec
        .eigenvalues()
        .iter()
        .zip(spec.gammas())
        .enumerate()
        .map(|(i, (&e, &g))| (i, e, g))
        .collect();
    Ok((vec!["index", "eigenvalue", "gamma"], rows))
}

fn lr_commutator(
    cfg: &RunConfig,
    spec: &SpectralData,
    params: &ModelParams,
) -> Table<(usize, usize, f64)> {
    let n = spec.dim();
    let rows = pairs(cfg, params)
        .into_iter()
        .map(|(x, y)| {
            let v = match cfg.observable.kind() {
                ObservableKind::PqCommutatorSup { entry } => {
                    let (i, j) = entry.index();
                    pq_commutator_sup(spec, params, x, y)[(i, j)]
                }
                _ => {
                    let o = &cfg.observable;
                    let f = WeylSymbol::delta(n, x, num_complex::Complex64::new(o.f[0], o.f[1]));
                    let g = WeylSymbol::delta(n, y, num_complex::Complex64::new(o.g[0], o.g[1]));
                    weyl_commutator_sup(spec, params, &f, &g)
                }
            };
            (x, y, v)
        })
        .collect();
    Ok((vec!["x", "y", "value"], rows))
}

fn correlations(
    cfg: &RunConfig,
    spec: &SpectralData,
    params: &ModelParams,
    ground: bool,
) -> Table<(usize, usize, &'static str, f64, f64)> {
    let state = if ground {
        ThermalSpec::Ground
    } else {
        ThermalSpec::new(cfg.observable.beta)?
    };
    let mut rows = Vec::new();
    for (x, y) in pairs(cfg, params) {
        let m = pq_correlations(spec, params, x, y, cfg.observable.time, state);
        for e in Entry::ALL {
            let (i, j) = e.index();
            rows.push((x, y, e.as_str(), m[(i, j)].re, m[(i, j)].im));
        }
    }
    Ok((vec!["x", "y", "entry", "real", "imag"], rows))
}

fn correlator(
    cfg: &RunConfig,
    spec: &SpectralData,
    params: &ModelParams,
) -> Table<(usize, usize, f64)> {
    let window = cfg.observable.window.map(|[a, b]| EnergyWindow::closed(a, b));
    let rows = pairs(cfg, params)
        .into_iter()
        .map(|(x, y)| (x, y, correlator_q(spec, cfg.observable.alpha, x, y, window.as_ref())))
        .collect();
    Ok((vec!["x", "y", "value"], rows))
}

fn green_moments(args: &ConfigArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = args.resolve()?;
    let lattice = Arc::new(cfg.model.lattice()?);
    let anchor = lattice.center();
    let axis = lattice.axis_sites();
    let targets: Vec<usize> = axis.iter().map(|&(_, y)| y).collect();
    let o = &cfg.observable;
    let est = fractional_moments(
        &cfg.model.disorder(cfg.execution.seed),
        &lattice,
        o.s,
        anchor,
        &targets,
        SpectralParameterZ::new(o.energy, o.epsilon),
        cfg.execution.realizations,
        cfg.execution.workers,
    )?;
    let rows: Vec<(usize, f64, f64, u64)> = axis
        .iter()
        .zip(&est.values)
        .map(|(&(d, _), &(m, se))| (d, m, se, est.realizations))
        .collect();
    let stem = &cfg.execution.output;
    write_records(&csv_path(stem), &["distance", "mean", "stderr", "N"], &rows)?;
    sidecar(
        "green-moments",
        &cfg,
        est.realizations,
        est.resamples,
        started,
        vec![csv_path(stem).display().to_string()],
    )?
    .write(&json_path(stem))
}

fn fit_decay(args: &FitArgs) -> Result<()> {
    let started = Instant::now();
    let rows = read_table_csv(&args.input)?;
    let table = EstimateTable {
        rows,
        samples: Vec::new(),
        observable: String::new(),
        realizations: 0,
        resamples: 0,
        seed: 0,
        dim: 0,
        half_width: 0,
    };
    let fit = fit_exponential_decay(&table, args.r_min, args.r_max)?;
    let stem = &args.output;
    write_records(
        &csv_path(stem),
        &["c_prime", "mu_prime", "mu_stderr", "r_squared", "r_min", "r_max", "points"],
        &[fit],
    )?;
    let side = Sidecar {
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: "fit-decay".into(),
        config_text: String::new(),
        config: serde_json::json!({
            "input": args.input.display().to_string(),
            "r_min": args.r_min,
            "r_max": args.r_max,
        }),
        seed: 0,
        realizations: 0,
        resamples: 0,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![csv_path(stem).display().to_string()],
        fit: Some(fit),
    };
    side.write(&json_path(stem))
}

/// Runs one configuration and writes its table and sidecar.
pub fn execute_run(cfg: &RunConfig) -> Result<EstimateTable> {
    let started = Instant::now();
    let spec = cfg.observable_spec()?;
    let table = run_experiment(&cfg.model, &spec, &cfg.execution)?;
    let stem = &cfg.execution.output;
    if let Some(dir) = Path::new(stem).parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_table_csv(&csv_path(stem), &table.rows)?;
    sidecar(
        "run-experiment",
        cfg,
        table.realizations,
        table.resamples,
        started,
        vec![csv_path(stem).display().to_string()],
    )?
    .write(&json_path(stem))?;
    Ok(table)
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let Some(name) = &args.preset else {
        execute_run(&args.common.resolve()?)?;
        return Ok(());
    };
    // With a preset, `--output` names a directory for the per-run files.
    let overrides = ConfigArgs {
        output: None,
        ..args.common.clone()
    };
    for mut cfg in regime_preset(name)?.runs {
        overrides.apply(&mut cfg);
        if let Some(dir) = &args.common.output {
            cfg.execution.output = Path::new(dir).join(&cfg.execution.output).display().to_string();
        }
        let cfg = crate::config::parse_config(&cfg.to_toml())?;
        execute_run(&cfg)?;
    }
    Ok(())
}

fn preset(args: &PresetArgs) -> Result<()> {
    let p = regime_preset(&args.name)?;
    if let Some(dir) = &args.output {
        std::fs::create_dir_all(dir)?;
    }
    for cfg in &p.runs {
        let text = cfg.to_toml();
        match &args.output {
            Some(dir) => std::fs::write(dir.join(format!("{}.toml", cfg.execution.output)), text)?,
            None => println!("# {}\n{text}", cfg.execution.output),
        }
    }
    Ok(())
}

/// Entry point shared with the binary: parses `std::env::args` and maps
/// errors onto exit codes.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    let cat = e.category();
    eprintln!("error[{}]: {e}", cat.name());
    cat.exit_code()
}
