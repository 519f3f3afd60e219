use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xychain::config::Settings;
use xychain::oracle::{anisotropy_experiment, validate_sector, HamiltonianSpec};
use xychain::runner::{
    estimate_front_velocity, run_heatmap, run_profile, run_timeseries, write_front, write_heatmap,
    write_profile, write_timeseries, InitialState, Metadata, OutputFormat, PairSelection,
    ScenarioConfig, TimeGrid, DEFAULT_STEP,
};
use xychain::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

/// Entanglement transport through an open Heisenberg-XY spin chain.
///
/// All times are given and reported in units of Kt/hbar.
#[derive(Debug, Parser)]
#[command(name = "xychain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measures of one pair over a time grid.
    Timeseries(Common),
    /// Measures of every nearest-neighbour pair at one time.
    Profile(Common),
    /// LBLE of every nearest-neighbour pair over a time grid.
    Heatmap(Common),
    /// Velocity of the entanglement front from the LBLE ridge.
    Front(Common),
    /// Cross-check the closed forms against exact diagonalization.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of sites.
    #[arg(long)]
    n: Option<usize>,
    /// Exchange strength K.
    #[arg(long)]
    k: Option<f64>,
    /// Anisotropy Delta (validate only).
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// unentangled | bell
    #[arg(long)]
    initial: Option<String>,
    /// `i,j` or `nn` for all nearest-neighbour pairs.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_stop: Option<f64>,
    #[arg(long)]
    t_step: Option<f64>,
    /// Profile time.
    #[arg(long, allow_hyphen_values = true)]
    time: Option<f64>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heatmap as an l x t matrix instead of (l, t, value) triples.
    #[arg(long)]
    matrix: bool,
    /// Random samples per initial state (validate).
    #[arg(long)]
    trials: Option<usize>,
    /// Pass threshold on the largest deviation (validate).
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed (validate).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn settings(&self) -> Result<Settings, Error> {
        let flags = Settings {
            n: self.n,
            k: self.k,
            delta: self.delta,
            initial: self.initial.as_deref().map(str::parse).transpose()?,
            pair: self.pair.as_deref().map(str::parse).transpose()?,
            t_start: self.t_start,
            t_stop: self.t_stop,
            t_step: self.t_step,
            time: self.time,
            format: self.format.as_deref().map(str::parse).transpose()?,
            out: self.out.clone(),
            matrix: self.matrix.then_some(true),
            trials: self.trials,
            tol: self.tol,
            seed: self.seed,
        };
        match &self.config {
            Some(path) => Ok(flags.or(Settings::load(path)?)),
            None => Ok(flags),
        }
    }
}

fn scenario(
    s: &Settings,
    initial: InitialState,
    pair: Option<PairSelection>,
    t_stop: f64,
) -> Result<ScenarioConfig, Error> {
    let n = s.n.unwrap_or(20);
    let pair = s
        .pair
        .or(pair)
        .unwrap_or(PairSelection::Single(n.saturating_sub(1), n));
    let cfg = ScenarioConfig {
        n,
        k: s.k.unwrap_or(1.0),
        initial: s.initial.unwrap_or(initial),
        pair,
        t_grid: TimeGrid {
            start: s.t_start.unwrap_or(0.0),
            stop: s.t_stop.unwrap_or(t_stop),
            step: s.t_step.unwrap_or(DEFAULT_STEP),
        },
        output_path: s.out.clone(),
        format: s.format.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn emit(
    path: Option<&PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Error> {
    let target = path.cloned().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let io_err = |source| Error::Io {
        path: target.clone(),
        source,
    };
    let mut w = open_output(path)?;
    write(&mut *w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Timeseries(c) => {
            let s = c.settings()?;
            let cfg = scenario(&s, InitialState::Unentangled, None, 200.0)?;
            let rows = run_timeseries(&cfg)?;
            let meta = Metadata::for_config("timeseries", &cfg);
            emit(cfg.output_path.as_ref(), |w| {
                write_timeseries(w, cfg.format, &meta, &rows)
            })?;
        }
        Command::Profile(c) => {
            let s = c.settings()?;
            let cfg = scenario(&s, InitialState::Unentangled, Some(PairSelection::NearestNeighbors), 200.0)?;
            let time = s.time.unwrap_or(50.0);
            let rows = run_profile(&cfg, time)?;
            let mut meta = Metadata::for_config("profile", &cfg);
            meta.profile_time = Some(time);
            emit(cfg.output_path.as_ref(), |w| write_profile(w, cfg.format, &meta, &rows))?;
        }
        Command::Heatmap(c) => {
            let s = c.settings()?;
            let cfg = scenario(&s, InitialState::Bell, Some(PairSelection::NearestNeighbors), 100.0)?;
            let grid = run_heatmap(&cfg)?;
            let meta = Metadata::for_config("heatmap", &cfg);
            let matrix = s.matrix.unwrap_or(false);
            emit(cfg.output_path.as_ref(), |w| {
                write_heatmap(w, cfg.format, &meta, &grid, matrix)
            })?;
        }
        Command::Front(c) => {
            let s = c.settings()?;
            let cfg = scenario(&s, InitialState::Bell, Some(PairSelection::NearestNeighbors), 100.0)?;
            let grid = run_heatmap(&cfg)?;
            let front = estimate_front_velocity(&grid, cfg.k)?;
            let meta = Metadata::for_config("front", &cfg);
            emit(cfg.output_path.as_ref(), |w| write_front(w, cfg.format, &meta, &front))?;
        }
        Command::Validate(c) => {
            let s = c.settings()?;
            let spec = HamiltonianSpec::new(s.n.unwrap_or(8), s.k.unwrap_or(1.0), s.delta.unwrap_or(0.0))?;
            let trials = s.trials.unwrap_or(50);
            let tol = s.tol.unwrap_or(1e-10);
            let seed = s.seed.unwrap_or(1);
            let experiment = spec.anisotropy() != 0.0;
            let report = if experiment {
                anisotropy_experiment(&spec, trials, seed)?
            } else {
                validate_sector(&spec, trials, tol, seed)?
            };
            let format = s.format.unwrap_or_default();
            emit(s.out.as_ref(), |w| match format {
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut *w, &report)?;
                    writeln!(w)
                }
                OutputFormat::Csv => writeln!(w, "{report}"),
            })?;
            if !experiment && !report.pass {
                return Ok(EXIT_FAIL);
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::FrontNotDetected(_) | Error::NoConvergence => EXIT_FAIL,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
