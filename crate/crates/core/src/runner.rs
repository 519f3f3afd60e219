//! Scenario execution and data emission.
//!
//! All times crossing this module's boundary are dimensionless `Kt/hbar`.
//! They are turned into physical times `t = tau / K` exactly once, right
//! before calling into [`crate::magnon`].

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnon::{evolve_bell, evolve_unentangled, mode_table, AmplitudeVector, ModeTable};
use crate::measures::{measure_all, MeasureSet};
use crate::rdm::{rdm_from_magnon, TwoQubitDensity};

pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|0111...>`
    Unentangled,
    /// `(|01> + |10>)/sqrt(2)` on sites 1, 2, rest up.
    Bell,
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unentangled" => Ok(Self::Unentangled),
            "bell" => Ok(Self::Bell),
            other => Err(Error::Config(format!(
                "unknown initial state {other:?} (expected unentangled or bell)"
            ))),
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unentangled => "unentangled",
            Self::Bell => "bell",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    Single(usize, usize),
    NearestNeighbors,
}

impl FromStr for PairSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("nn") || s.eq_ignore_ascii_case("all") {
            return Ok(Self::NearestNeighbors);
        }
        let bad = || Error::Config(format!("pair must look like `i,j` or `nn`, got {s:?}"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let i = a.trim().parse().map_err(|_| bad())?;
        let j = b.trim().parse().map_err(|_| bad())?;
        Ok(Self::Single(i, j))
    }
}

impl fmt::Display for PairSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Single(i, j) => write!(f, "{i},{j}"),
            Self::NearestNeighbors => f.write_str("nn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format {other:?} (expected csv or json)"))),
        }
    }
}

/// Uniform grid in `Kt/hbar`; both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::Config("time grid must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::Config(format!("t-step must be > 0, got {}", self.step)));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!(
                "t-stop ({}) is before t-start ({})",
                self.stop, self.start
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        // tolerate stop landing a hair below a grid point
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: f64,
    pub initial: InitialState,
    pub pair: PairSelection,
    pub t_grid: TimeGrid,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ScenarioConfig {
    /// `N`-site chain, `K = 1`, end pair `(N-1, N)`, `Kt` in `[0, 200]` at the default step.
    pub fn new(n: usize, initial: InitialState) -> Self {
        Self {
            n,
            k: 1.0,
            initial,
            pair: PairSelection::Single(n.saturating_sub(1), n),
            t_grid: TimeGrid {
                start: 0.0,
                stop: 200.0,
                step: DEFAULT_STEP,
            },
            output_path: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 sites, got {}", self.n)));
        }
        if !self.k.is_finite() || self.k == 0.0 {
            return Err(Error::Config(format!("K must be finite and nonzero, got {}", self.k)));
        }
        self.t_grid.validate()?;
        if let PairSelection::Single(i, j) = self.pair {
            if i == 0 || i >= j || j > self.n {
                return Err(Error::Config(format!(
                    "pair ({i}, {j}) must satisfy 1 <= i < j <= {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    fn modes(&self) -> Result<ModeTable> {
        self.validate()?;
        mode_table(self.n, self.k)
    }

    /// Physical time for a grid point in `Kt/hbar`.
    pub fn physical_time(&self, kt: f64) -> f64 {
        kt / self.k
    }
}

fn evolve(modes: &ModeTable, initial: InitialState, t: f64) -> Result<AmplitudeVector> {
    match initial {
        InitialState::Unentangled => evolve_unentangled(modes, t),
        InitialState::Bell => evolve_bell(modes, t),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeseriesRow {
    /// `Kt/hbar`
    pub t: f64,
    #[serde(flatten)]
    pub measures: MeasureSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    /// Left site of the pair `(l, l + 1)`.
    pub l: usize,
    #[serde(flatten)]
    pub measures: MeasureSet,
}

/// Lower bound on the localizable entanglement over `(l, Kt)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub l: Vec<usize>,
    pub t: Vec<f64>,
    /// `values[l - 1][k]` is the value for pair `(l, l + 1)` at `t[k]`.
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn sites(&self) -> usize {
        self.l.len() + 1
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    /// `argmax_l` at every time, ties going to the smaller `l`.
    pub fn ridge(&self) -> Vec<usize> {
        (0..self.t.len())
            .map(|k| {
                let mut best = 0;
                for r in 1..self.values.len() {
                    if self.values[r][k] > self.values[best][k] {
                        best = r;
                    }
                }
                self.l[best]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontEstimate {
    /// Sites per unit physical time (`hbar = 1`), i.e. `K` times the slope in `Kt`.
    pub velocity: f64,
    /// First `Kt/hbar` at which the ridge reaches the end pair `(N-1, N)`.
    pub arrival_time: f64,
    pub method: String,
}

/// Density matrices of the selected pairs at one grid time.
pub fn pair_densities(cfg: &ScenarioConfig, kt: f64) -> Result<Vec<TwoQubitDensity>> {
    let modes = cfg.modes()?;
    let psi = evolve(&modes, cfg.initial, cfg.physical_time(kt))?;
    match cfg.pair {
        PairSelection::Single(i, j) => Ok(vec![rdm_from_magnon(&psi, i, j)?]),
        PairSelection::NearestNeighbors => (1..cfg.n).map(|l| rdm_from_magnon(&psi, l, l + 1)).collect(),
    }
}

pub fn run_timeseries(cfg: &ScenarioConfig) -> Result<Vec<TimeseriesRow>> {
    let modes = cfg.modes()?;
    let PairSelection::Single(i, j) = cfg.pair else {
        return Err(Error::Config("timeseries needs a single pair".into()));
    };
    cfg.t_grid
        .points()
        .into_par_iter()
        .map(|kt| {
            let psi = evolve(&modes, cfg.initial, cfg.physical_time(kt))?;
            let measures = measure_all(&rdm_from_magnon(&psi, i, j)?)?;
            Ok(TimeseriesRow { t: kt, measures })
        })
        .collect()
}

fn profile_at(modes: &ModeTable, cfg: &ScenarioConfig, kt: f64) -> Result<Vec<ProfileRow>> {
    let psi = evolve(modes, cfg.initial, cfg.physical_time(kt))?;
    (1..cfg.n)
        .map(|l| {
            let measures = measure_all(&rdm_from_magnon(&psi, l, l + 1)?)?;
            Ok(ProfileRow { l, measures })
        })
        .collect()
}

/// Nearest-neighbour measures `(l, l + 1)` for `l = 1..N-1` at `kt`.
pub fn run_profile(cfg: &ScenarioConfig, kt: f64) -> Result<Vec<ProfileRow>> {
    if !kt.is_finite() {
        return Err(Error::Config(format!("profile time must be finite, got {kt}")));
    }
    let modes = cfg.modes()?;
    profile_at(&modes, cfg, kt)
}

pub fn run_heatmap(cfg: &ScenarioConfig) -> Result<Heatmap> {
    if cfg.pair != PairSelection::NearestNeighbors {
        return Err(Error::Config("heatmap needs pair mode `nn`".into()));
    }
    let modes = cfg.modes()?;
    let t = cfg.t_grid.points();
    let columns = t
        .par_iter()
        .map(|&kt| {
            profile_at(&modes, cfg, kt).map(|rows| rows.iter().map(|r| r.measures.le_lower).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let l: Vec<usize> = (1..cfg.n).collect();
    let values = (0..l.len())
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    Ok(Heatmap { l, t, values })
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fit the ridge `argmax_l LBLE(l, t)` over its first traversal of the chain.
///
/// The window runs from the first grid time at which the ridge leaves its
/// starting pair to the first time it sits on the end pair `(N-1, N)`.
pub fn estimate_front_velocity(grid: &Heatmap, k: f64) -> Result<FrontEstimate> {
    let end = grid.sites() - 1;
    if end < 2 {
        return Err(Error::FrontNotDetected("chain has a single pair".into()));
    }
    if grid.t.len() < 2 {
        return Err(Error::FrontNotDetected("time grid has fewer than two points".into()));
    }
    let ridge = grid.ridge();
    let arrival = ridge
        .iter()
        .position(|&l| l == end)
        .ok_or_else(|| {
            Error::FrontNotDetected(format!(
                "ridge never reaches pair ({}, {}) by Kt = {}",
                end,
                end + 1,
                grid.t.last().copied().unwrap_or(f64::NAN)
            ))
        })?;
    if arrival == 0 {
        return Err(Error::FrontNotDetected("ridge starts on the end pair".into()));
    }
    let moved = ridge.iter().position(|&l| l != ridge[0]).unwrap_or(arrival);
    let first = if moved < arrival { moved } else { arrival - 1 };
    let xs = &grid.t[first..=arrival];
    let ys: Vec<f64> = ridge[first..=arrival].iter().map(|&l| l as f64).collect();
    let velocity = slope(xs, &ys) * k.abs();
    if !(velocity > 0.0) {
        return Err(Error::FrontNotDetected(format!("non-positive ridge slope {velocity}")));
    }
    Ok(FrontEstimate {
        velocity,
        arrival_time: grid.t[arrival],
        method: format!(
            "least-squares slope of argmax_l le_lower(l, Kt) over Kt in [{:.6}, {:.6}], scaled by |K|",
            grid.t[first], grid.t[arrival]
        ),
    })
}

/// Number of samples strictly below `threshold`.
pub fn count_below(series: &[f64], threshold: f64) -> usize {
    series.iter().filter(|&&x| x < threshold).count()
}

/// Number of samples below `fraction` of the running maximum, ignoring the
/// stretch before the series first becomes positive.
pub fn count_relative_dips(series: &[f64], fraction: f64) -> usize {
    let mut running = 0.0f64;
    let mut count = 0;
    for &x in series {
        running = running.max(x);
        if running > 0.0 && x < fraction * running {
            count += 1;
        }
    }
    count
}

// ---------------------------------------------------------------------------
// output

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub kind: &'static str,
    pub sites: usize,
    pub exchange: f64,
    pub initial_state: InitialState,
    pub pair: String,
    pub time_unit: &'static str,
    pub t_grid: TimeGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_time: Option<f64>,
    pub entropy_unit: &'static str,
    pub version: &'static str,
}

impl Metadata {
    pub fn for_config(kind: &'static str, cfg: &ScenarioConfig) -> Self {
        Self {
            kind,
            sites: cfg.n,
            exchange: cfg.k,
            initial_state: cfg.initial,
            pair: cfg.pair.to_string(),
            time_unit: "Kt/hbar",
            t_grid: cfg.t_grid,
            profile_time: None,
            entropy_unit: "bits",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

const MEASURE_COLUMNS: [&str; 8] = ["M", "S", "Cc", "Qx", "Qy", "Qz", "le_lower", "le_upper"];

fn measure_fields(m: &MeasureSet) -> [f64; 8] {
    [
        m.impurity,
        m.entropy,
        m.concurrence,
        m.qx,
        m.qy,
        m.qz,
        m.le_lower,
        m.le_upper,
    ]
}

fn csv_line(w: &mut dyn Write, lead: String, m: &MeasureSet) -> std::io::Result<()> {
    let fields: Vec<String> = measure_fields(m).iter().map(|&x| fmt_float(x)).collect();
    writeln!(w, "{lead},{}", fields.join(","))
}

fn json_out<T: Serialize>(w: &mut dyn Write, meta: &Metadata, key: &str, body: &T) -> std::io::Result<()> {
    let doc = serde_json::json!({ "metadata": meta, key: body });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)
}

pub fn write_timeseries(
    w: &mut dyn Write,
    format: OutputFormat,
    meta: &Metadata,
    rows: &[TimeseriesRow],
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "t,{}", MEASURE_COLUMNS.join(","))?;
            for r in rows {
                csv_line(w, fmt_float(r.t), &r.measures)?;
            }
            Ok(())
        }
        OutputFormat::Json => json_out(w, meta, "rows", &rows),
    }
}

pub fn write_profile(
    w: &mut dyn Write,
    format: OutputFormat,
    meta: &Metadata,
    rows: &[ProfileRow],
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "l,{}", MEASURE_COLUMNS.join(","))?;
            for r in rows {
                csv_line(w, r.l.to_string(), &r.measures)?;
            }
            Ok(())
        }
        OutputFormat::Json => json_out(w, meta, "rows", &rows),
    }
}

/// Long form `(l, t, value)` by default; with `matrix`, one row per `l` and
/// one column per time.
pub fn write_heatmap(
    w: &mut dyn Write,
    format: OutputFormat,
    meta: &Metadata,
    grid: &Heatmap,
    matrix: bool,
) -> std::io::Result<()> {
    match (format, matrix) {
        (OutputFormat::Csv, false) => {
            writeln!(w, "l,t,le_lower")?;
            for (r, &l) in grid.l.iter().enumerate() {
                for (k, &t) in grid.t.iter().enumerate() {
                    writeln!(w, "{l},{},{}", fmt_float(t), fmt_float(grid.values[r][k]))?;
                }
            }
            Ok(())
        }
        (OutputFormat::Csv, true) => {
            let header: Vec<String> = grid.t.iter().map(|&t| fmt_float(t)).collect();
            writeln!(w, "l,{}", header.join(","))?;
            for (r, &l) in grid.l.iter().enumerate() {
                let row: Vec<String> = grid.values[r].iter().map(|&x| fmt_float(x)).collect();
                writeln!(w, "{l},{}", row.join(","))?;
            }
            Ok(())
        }
        (OutputFormat::Json, false) => {
            #[derive(Serialize)]
            struct Triple {
                l: usize,
                t: f64,
                le_lower: f64,
            }
            let triples: Vec<Triple> = grid
                .l
                .iter()
                .enumerate()
                .flat_map(|(r, &l)| {
                    grid.t.iter().enumerate().map(move |(k, &t)| Triple {
                        l,
                        t,
                        le_lower: grid.values[r][k],
                    })
                })
                .collect();
            json_out(w, meta, "rows", &triples)
        }
        (OutputFormat::Json, true) => json_out(w, meta, "heatmap", grid),
    }
}

pub fn write_front(
    w: &mut dyn Write,
    format: OutputFormat,
    meta: &Metadata,
    front: &FrontEstimate,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "velocity,arrival_time,method")?;
            writeln!(
                w,
                "{},{},\"{}\"",
                fmt_float(front.velocity),
                fmt_float(front.arrival_time),
                front.method.replace('"', "\"\"")
            )
        }
        OutputFormat::Json => json_out(w, meta, "front", front),
    }
}
