//! Declarative scenario runner behind the `fock-interfere` binary.
//!
//! A scenario is described by a TOML file, validated up front, executed by
//! one library routine and written out as CSV or JSON. Identical configs give
//! byte-identical files.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distinguish::{partial_overlap_probs, phase_averaged_state, phase_averaged_state_by_quadrature, simulate_partial_overlap, PhaseDistribution};
use crate::entanglement::{
    csop_check, entropies, hubbard_ground_state, particle_entangled, phi_x, postselected_spin_entanglement, quench_entropy_trace,
    reduced_density_matrix, schmidt_spectrum, twin_parity_purity, BipartiteCut, CsopVerdict, TwinBeamsplitter, TwoParticleAmplitude,
    DEFAULT_SCHMIDT_TOL,
};
use crate::error::Error;
use crate::fock::{enumerate_basis, FockBasis, FockStateVector, OccupationVector, Statistics};
use crate::hubbard::{
    build_hamiltonian, double_occupancy, double_well_p11, double_well_p11_min, doublon_exact, doublon_walk, lattice_propagator_matrix,
    lmg_distribution, site_densities, Boundary, HubbardParams, Propagator,
};
use crate::interference::{beamsplitter, fourier, mach_zehnder_probs, mach_zehnder_unitary, output_distribution, ModeUnitary, OutputDistribution};
use crate::matrix::{permanent_ryser, RYSER_MAX_N};

/// Registered scenarios with a one-line description.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("hom-dip", "two-particle coincidences against the overlap angle theta"),
    ("mach-zehnder", "single-particle Mach-Zehnder output against the phase"),
    ("distribution", "full output distribution of a Fock input on a mode network"),
    ("phase-noise", "phase-averaged two-particle output state"),
    ("double-well", "P(1,1) time series of two bosons in a double well"),
    ("lmg-sweep", "N bosons in a double well from direct evolution and moment inversion"),
    ("lattice-walk", "site densities of particles on a one-dimensional lattice"),
    ("doublon", "effective bound-pair walk against exact evolution"),
    ("schmidt", "Schmidt spectrum and CSOP verdict of a two-particle state"),
    ("entropy-quench", "half-system Renyi-2 entropy after a double-well quench"),
    ("twin-purity", "twin-copy parity purity of Bose-Hubbard ground states"),
    ("postselect", "measurement-induced spin entanglement on a beamsplitter"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Either an explicit list or `steps` equal intervals from `start` to `stop`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, steps: usize) -> Self {
        Self { values: None, start: Some(start), stop: Some(stop), steps: Some(steps) }
    }

    pub fn list(values: Vec<f64>) -> Self {
        Self { values: Some(values), ..Self::default() }
    }

    fn points(&self, field: &str) -> std::result::Result<Vec<f64>, RunError> {
        let out = match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(RunError::config(format!("{field}.steps"), "must be at least 1"));
                }
                (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
            }
            _ => return Err(RunError::config(field, "give either `values` or all of `start`, `stop`, `steps`")),
        };
        if out.is_empty() {
            return Err(RunError::config(field, "grid is empty"));
        }
        if let Some(x) = out.iter().find(|x| !x.is_finite()) {
            return Err(RunError::config(field, format!("non-finite grid value {x}")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Sweep {
    pub fn grid(&self) -> Grid {
        Grid { values: self.values.clone(), start: self.start, stop: self.stop, steps: self.steps }
    }
}

/// Physical parameters. Each scenario reads the subset it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Input occupations for `distribution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<u32>>,
    /// `beamsplitter`, `mach-zehnder`, `fourier` or `lattice`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    /// Initially occupied lattice sites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_core: Option<bool>,
    /// Named two-particle state for `schmidt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Left subsystem sites for `twin-purity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_noise: Option<PhaseDistribution>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Grid>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn load(path: &Path) -> std::result::Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    fn config(field: impl fmt::Display, msg: impl fmt::Display) -> Self {
        RunError::Config(format!("{field}: {msg}"))
    }

    /// 2 for invalid configurations, 3 for an exceeded dimension cap, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Library(Error::DimensionCap { .. }) => 3,
            RunError::Library(
                Error::Domain { .. }
                | Error::InvalidOccupation(_)
                | Error::InvalidCut(_)
                | Error::ModeOutOfRange { .. }
                | Error::ParticleNumber { .. }
                | Error::Unsupported(..),
            ) => 2,
            _ => 1,
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting is the shortest string that parses back exactly
            Cell::Num(x) => write!(f, "{x:?}"),
            Cell::Int(k) => write!(f, "{k}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as i64)
    }
}

impl From<u64> for Cell {
    fn from(k: u64) -> Self {
        Cell::Int(k as i64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; non-numeric cells are skipped.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r[k] {
                Cell::Num(x) => Some(x),
                Cell::Int(i) => Some(i as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub table: Table,
    /// Nested results (spectra, matrices, extrema).
    #[serde(skip_serializing_if = "Value::is_null")]
    pub summary: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Table>,
}

impl Report {
    fn new(scenario: &str, table: Table) -> Self {
        Self { scenario: scenario.to_string(), table, summary: Value::Null, counts: None }
    }
}

/// Overrides supplied on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(seed) = o.seed {
            if let Some(s) = self.sampling.as_mut() {
                s.seed = Some(seed);
            }
        }
    }
}

pub fn list_scenarios() -> String {
    SCENARIOS.iter().map(|(n, d)| format!("{n:<16}{d}\n")).collect()
}

/// Validates and runs a scenario, returning the report without writing it.
pub fn run(config: &ScenarioConfig) -> RunResult<Report> {
    if let Some(s) = &config.sampling {
        if s.shots == 0 {
            return Err(RunError::config("sampling.shots", "must be at least 1"));
        }
        if s.seed.is_none() {
            return Err(RunError::config("sampling.seed", "a seed is required when sampling is enabled"));
        }
    }
    let p = &config.params;
    match config.scenario.as_str() {
        "hom-dip" => hom_dip(config, p),
        "mach-zehnder" => mach_zehnder(config, p),
        "distribution" => distribution(config, p),
        "phase-noise" => phase_noise(p),
        "double-well" => double_well(config, p),
        "lmg-sweep" => lmg_sweep(config, p),
        "lattice-walk" => lattice_walk(config, p),
        "doublon" => doublon(config, p),
        "schmidt" => schmidt(p),
        "entropy-quench" => entropy_quench(config, p),
        "twin-purity" => twin_purity(config, p),
        "postselect" => postselect(),
        other => Err(RunError::config(
            "scenario",
            format!("unknown scenario {other:?}; valid scenarios: {}", SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")),
        )),
    }
}

/// Runs a scenario and writes its files; returns the written paths.
pub fn run_and_write(config: &ScenarioConfig) -> RunResult<Vec<PathBuf>> {
    let report = run(config)?;
    write_report(&report, config)
}

pub fn write_report(report: &Report, config: &ScenarioConfig) -> RunResult<Vec<PathBuf>> {
    let dir = config.output.dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let stem = config.output.name.clone().unwrap_or_else(|| report.scenario.clone());
    fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: String, body: String| -> RunResult<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    };
    let mut paths = Vec::new();
    match config.output.format {
        OutputFormat::Csv => {
            paths.push(write(format!("{stem}.csv"), report.table.to_csv())?);
            if !report.summary.is_null() {
                paths.push(write(format!("{stem}_summary.json"), pretty(&report.summary))?);
            }
            if let Some(c) = &report.counts {
                paths.push(write(format!("{stem}_counts.csv"), c.to_csv())?);
            }
        }
        OutputFormat::Json => {
            paths.push(write(format!("{stem}.json"), pretty(report))?);
        }
    }
    Ok(paths)
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn require<T: Clone>(v: &Option<T>, field: &str) -> RunResult<T> {
    v.clone().ok_or_else(|| RunError::config(format!("params.{field}"), "is required by this scenario"))
}

fn in_range(field: &str, v: f64, lo: f64, hi: f64) -> RunResult<f64> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(RunError::config(format!("params.{field}"), format!("{v} is outside [{lo}, {hi}]")))
    }
}

fn finite(field: &str, v: f64) -> RunResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RunError::config(format!("params.{field}"), "must be finite"))
    }
}

fn tunneling(p: &Params, default: f64) -> RunResult<f64> {
    let j = p.j.unwrap_or(default);
    if !(j > 0.0 && j.is_finite()) {
        return Err(RunError::config("params.j", format!("{j} must be positive")));
    }
    Ok(j)
}

fn statistics(config: &ScenarioConfig, default: Statistics) -> Statistics {
    config.statistics.unwrap_or(default)
}

fn sweep_points(config: &ScenarioConfig, parameter: &str, default: Grid) -> RunResult<Vec<f64>> {
    match &config.sweep {
        Some(s) if s.parameter == parameter => s.grid().points("sweep"),
        Some(s) => Err(RunError::config("sweep.parameter", format!("this scenario sweeps {parameter:?}, not {:?}", s.parameter))),
        None => default.points("sweep"),
    }
}

fn no_sweep(config: &ScenarioConfig) -> RunResult<()> {
    match config.sweep {
        Some(_) => Err(RunError::config("sweep", "this scenario does not take a sweep")),
        None => Ok(()),
    }
}

fn time_points(config: &ScenarioConfig, default: Grid) -> RunResult<Vec<f64>> {
    config.times.as_ref().unwrap_or(&default).points("times")
}

fn occupation_label(o: &[u32]) -> String {
    let inner: Vec<String> = o.iter().map(|n| n.to_string()).collect();
    format!("({})", inner.join(","))
}

fn complex_matrix_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

/// Multinomial draw of `shots` outcomes, built from successive binomial
/// draws so that the counts depend only on the seed and the probabilities.
pub fn multinomial(probabilities: &[f64], shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining_shots = shots;
    let mut remaining_mass: f64 = probabilities.iter().map(|p| p.max(0.0)).sum();
    let mut out = Vec::with_capacity(probabilities.len());
    for &p in probabilities {
        let p = p.max(0.0);
        let k = if remaining_shots == 0 || remaining_mass <= 0.0 {
            0
        } else {
            let q = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining_shots, q).expect("valid binomial").sample(&mut rng)
        };
        out.push(k);
        remaining_shots -= k;
        remaining_mass -= p;
    }
    out
}

/// Finite-shot emulation of detecting the outcomes of `distribution`.
pub fn sample_outcomes(distribution: &OutputDistribution, shots: u64, seed: u64) -> Vec<(OccupationVector, u64)> {
    let probs: Vec<f64> = distribution.entries().iter().map(|(_, p)| *p).collect();
    distribution.entries().iter().map(|(o, _)| o.clone()).zip(multinomial(&probs, shots, seed)).collect()
}

fn hom_dip(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    let r = in_range("r", p.r.unwrap_or(0.5), 0.0, 1.0)?;
    let phi = finite("phi", p.phi.unwrap_or(0.0))?;
    let stats = statistics(config, Statistics::Boson);
    let thetas = sweep_points(config, "theta", Grid::linspace(0.0, FRAC_PI_2, 50))?;
    for &th in &thetas {
        in_range("theta", th, 0.0, FRAC_PI_2)?;
    }
    let mut table = Table::new(&["theta", "P20", "P11", "P02"]);
    let mut counts = config.sampling.as_ref().map(|_| Table::new(&["theta", "n20", "n11", "n02"]));
    for (k, &th) in thetas.iter().enumerate() {
        let (a, b, c) = match stats {
            Statistics::Distinguishable => partial_overlap_probs(r, th, stats)?,
            _ => simulate_partial_overlap(r, phi, th, stats)?,
        };
        table.push(vec![th.into(), a.into(), b.into(), c.into()]);
        if let (Some(t), Some(s)) = (counts.as_mut(), &config.sampling) {
            let n = multinomial(&[a, b, c], s.shots, s.seed.expect("validated").wrapping_add(k as u64));
            t.push(vec![th.into(), n[0].into(), n[1].into(), n[2].into()]);
        }
    }
    let mut report = Report::new("hom-dip", table);
    report.counts = counts;
    Ok(report)
}

fn mach_zehnder(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    let r = in_range("r", p.r.unwrap_or(0.5), 0.0, 1.0)?;
    let phis = sweep_points(config, "phi", Grid::linspace(0.0, 2.0 * PI, 50))?;
    let input = OccupationVector::new(vec![1, 0], Statistics::Boson)?;
    let mut table = Table::new(&["phi", "P10", "P01", "P10_closed", "P01_closed"]);
    for &phi in &phis {
        let u = mach_zehnder_unitary(r, phi)?;
        let d = output_distribution(&input, &u, Statistics::Boson)?;
        let (a, b) = mach_zehnder_probs(r, phi)?;
        table.push(vec![phi.into(), d.probability(&[1, 0]).into(), d.probability(&[0, 1]).into(), a.into(), b.into()]);
    }
    Ok(Report::new("mach-zehnder", table))
}

fn network(p: &Params, modes: usize) -> RunResult<ModeUnitary> {
    let kind = p.network.clone().unwrap_or_else(|| "beamsplitter".into());
    let two_modes = |name: &str| -> RunResult<()> {
        if modes != 2 {
            return Err(RunError::config("params.input", format!("the {name} network has two modes, input has {modes}")));
        }
        Ok(())
    };
    match kind.as_str() {
        "beamsplitter" => {
            two_modes("beamsplitter")?;
            Ok(beamsplitter(in_range("r", p.r.unwrap_or(0.5), 0.0, 1.0)?, finite("phi", p.phi.unwrap_or(0.0))?)?)
        }
        "mach-zehnder" => {
            two_modes("mach-zehnder")?;
            Ok(mach_zehnder_unitary(in_range("r", p.r.unwrap_or(0.5), 0.0, 1.0)?, finite("phi", p.phi.unwrap_or(0.0))?)?)
        }
        "fourier" => Ok(fourier(modes)),
        "lattice" => {
            let j = tunneling(p, 1.0)?;
            let t = finite("t", require(&p.t, "t")?)?;
            Ok(lattice_propagator_matrix(t, j, modes, p.boundary.unwrap_or(Boundary::Open))?)
        }
        other => Err(RunError::config(
            "params.network",
            format!("unknown network {other:?}; expected beamsplitter, mach-zehnder, fourier or lattice"),
        )),
    }
}

fn distribution(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    no_sweep(config)?;
    let stats = statistics(config, Statistics::Boson);
    let input = require(&p.input, "input")?;
    if input.is_empty() {
        return Err(RunError::config("params.input", "needs at least one mode"));
    }
    let occ = OccupationVector::new(input.clone(), stats)
        .map_err(|e| RunError::config("params.input", e))?;
    let u = network(p, input.len())?;
    let d = output_distribution(&occ, &u, stats)?;
    let mut table = Table::new(&["outcome", "probability"]);
    for (o, prob) in d.entries() {
        table.push(vec![occupation_label(o.occupations()).into(), (*prob).into()]);
    }
    let mut report = Report::new("distribution", table);
    report.summary = json!({
        "statistics": stats.to_string(),
        "input": input,
        "mean_occupations": d.mean_occupations(),
        "total_probability": d.total(),
    });
    if let Some(s) = &config.sampling {
        let mut counts = Table::new(&["outcome", "count"]);
        for (o, n) in sample_outcomes(&d, s.shots, s.seed.expect("validated")) {
            counts.push(vec![occupation_label(o.occupations()).into(), n.into()]);
        }
        report.counts = Some(counts);
    }
    Ok(report)
}

fn phase_noise(p: &Params) -> RunResult<Report> {
    let r = in_range("r", p.r.unwrap_or(0.5), 0.0, 1.0)?;
    let dist = require(&p.phase_noise, "phase_noise")?;
    dist.validate().map_err(|e| RunError::config("params.phase_noise", e))?;
    let closed = phase_averaged_state(r, &dist)?;
    let quad = phase_averaged_state_by_quadrature(r, &dist)?;
    let mut table = Table::new(&["row", "col", "re", "im", "re_quadrature", "im_quadrature"]);
    let labels: Vec<String> = closed.labels().iter().map(|l| occupation_label(l.occupations())).collect();
    for a in 0..closed.dim() {
        for b in 0..closed.dim() {
            let (x, y) = (closed.matrix()[(a, b)], quad.matrix()[(a, b)]);
            table.push(vec![labels[a].clone().into(), labels[b].clone().into(), x.re.into(), x.im.into(), y.re.into(), y.im.into()]);
        }
    }
    let alpha = dist.alpha();
    let mut report = Report::new("phase-noise", table);
    report.summary = json!({
        "labels": labels,
        "alpha": [alpha.re, alpha.im],
        "rho": complex_matrix_json(closed.matrix()),
        "purity": closed.purity(),
    });
    Ok(report)
}

fn double_well(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    let j = tunneling(p, 1.0)?;
    let us = sweep_points(config, "u", Grid::list(vec![0.0, 1.0, 4.0, 16.0]))?;
    let times = time_points(config, Grid::linspace(0.0, 10.0 / j, 200))?;
    let mut table = Table::new(&["u", "t", "p11_exact", "p11_closed"]);
    let mut minima = Vec::new();
    for &u in &us {
        let params = HubbardParams::bosons(2, 2, j, u, Boundary::Open);
        let basis = Arc::new(params.basis()?);
        let prop = Propagator::new(&build_hamiltonian(&params, &basis)?)?;
        let start = FockStateVector::basis_state(Arc::clone(&basis), &[1, 1])?;
        let mut min = f64::INFINITY;
        for &t in &times {
            let exact = prop.evolve(&start, t)?.amplitude(&[1, 1]).expect("in basis").norm_sqr();
            min = min.min(exact);
            table.push(vec![u.into(), t.into(), exact.into(), double_well_p11(j, u, t)?.into()]);
        }
        minima.push(json!({ "u": u, "min_p11_on_grid": min, "bound": double_well_p11_min(j, u) }));
    }
    let mut report = Report::new("double-well", table);
    report.summary = json!({ "j": j, "minima": minima });
    Ok(report)
}

fn lmg_sweep(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    no_sweep(config)?;
    let j = tunneling(p, 1.0)?;
    let u = finite("u", p.u.unwrap_or(0.0))?;
    let n = require(&p.n, "n")?;
    if n % 2 == 1 || n > crate::hubbard::LMG_MAX_N {
        return Err(RunError::config("params.n", format!("{n} must be even and at most {}", crate::hubbard::LMG_MAX_N)));
    }
    let times = time_points(config, Grid::list(vec![PI / (4.0 * j)]))?;
    let mut table = Table::new(&["t", "m", "p_direct", "p_moments"]);
    for &t in &times {
        let d = lmg_distribution(n, j, u, t)?;
        for m in 0..=n as usize {
            table.push(vec![t.into(), m.into(), d.direct[m].into(), d.from_moments[m].into()]);
        }
    }
    Ok(Report::new("lmg-sweep", table))
}

fn lattice_walk(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    no_sweep(config)?;
    let j = tunneling(p, 1.0)?;
    let u = finite("u", p.u.unwrap_or(0.0))?;
    let l = require(&p.l, "l")?;
    let sites = require(&p.sites, "sites")?;
    let boundary = p.boundary.unwrap_or(Boundary::Open);
    let stats = statistics(config, Statistics::Boson);
    let hard_core = p.hard_core.unwrap_or(false);
    if l < 2 {
        return Err(RunError::config("params.l", "at least two sites are required"));
    }
    if let Some(&s) = sites.iter().find(|&&s| s >= l) {
        return Err(RunError::config("params.sites", format!("site {s} does not exist on {l} sites")));
    }
    if hard_core && stats != Statistics::Boson {
        return Err(RunError::config("params.hard_core", "applies to bosons only"));
    }
    let mut occ = vec![0u32; l];
    for &s in &sites {
        occ[s] += 1;
    }
    let n = sites.len() as u32;
    let params = HubbardParams { j, u, sites: l, particles: n, boundary, statistics: stats, spinful: false };
    let basis = Arc::new(if hard_core { FockBasis::hard_core(l, n)? } else { params.basis()? });
    let start = FockStateVector::basis_state(Arc::clone(&basis), &occ).map_err(|e| RunError::config("params.sites", e))?;
    let prop = Propagator::new(&build_hamiltonian(&params, &basis)?)?;
    let times = time_points(config, Grid::linspace(0.0, 5.0 / j, 50))?;
    let mut table = Table::new(&["t", "site", "density"]);
    for &t in &times {
        let dens = site_densities(&prop.evolve(&start, t)?);
        for (s, d) in dens.into_iter().enumerate() {
            table.push(vec![t.into(), s.into(), d.into()]);
        }
    }
    Ok(Report::new("lattice-walk", table))
}

fn doublon(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    no_sweep(config)?;
    let j = tunneling(p, 1.0)?;
    let u = finite("u", p.u.unwrap_or(20.0 * j))?;
    let l = p.l.unwrap_or(7);
    if l % 2 == 0 || l < 3 {
        return Err(RunError::config("params.l", format!("{l} must be odd and at least 3")));
    }
    if u <= 0.0 {
        return Err(RunError::config("params.u", "a bound pair needs U > 0"));
    }
    let boundary = p.boundary.unwrap_or(Boundary::Open);
    let times = time_points(config, Grid::linspace(0.0, 2.0 * u / (4.0 * j * j), 40))?;
    let mut table = Table::new(&["t", "site", "effective", "exact"]);
    let mut min_weight = f64::INFINITY;
    for &t in &times {
        let eff = double_occupancy(&doublon_walk(j, u, t, l)?);
        let exact = double_occupancy(&doublon_exact(j, u, t, l, boundary)?);
        min_weight = min_weight.min(exact.iter().sum());
        for s in 0..l {
            table.push(vec![t.into(), s.into(), eff[s].into(), exact[s].into()]);
        }
    }
    let mut report = Report::new("doublon", table);
    report.summary = json!({ "min_double_occupancy_weight": min_weight });
    Ok(report)
}

fn named_two_particle_state(p: &Params) -> RunResult<TwoParticleAmplitude> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let two_mode = |pairs: &[(&[u32], f64)]| -> RunResult<TwoParticleAmplitude> {
        let b = Arc::new(enumerate_basis(2, 2, Statistics::Boson)?);
        let pairs: Vec<(&[u32], Complex64)> = pairs.iter().map(|(o, c)| (*o, Complex64::new(*c, 0.0))).collect();
        Ok(TwoParticleAmplitude::from_fock(&FockStateVector::from_pairs(b, &pairs)?)?)
    };
    let name = require(&p.state, "state")?;
    match name.as_str() {
        "singlet" => two_mode(&[(&[1, 1], 1.0)]),
        "plus" => two_mode(&[(&[2, 0], h), (&[0, 2], h)]),
        "phi-x" => Ok(phi_x()),
        "doublon" => {
            let l = p.l.unwrap_or(3);
            let b = Arc::new(enumerate_basis(l, 2, Statistics::Boson)?);
            let mut occ = vec![0u32; l];
            occ[l / 2] = 2;
            Ok(TwoParticleAmplitude::from_fock(&FockStateVector::basis_state(b, &occ)?)?)
        }
        "walked-doublon" => {
            let j = tunneling(p, 1.0)?;
            let u = finite("u", p.u.unwrap_or(20.0))?;
            let t = finite("t", p.t.unwrap_or(15.0))?;
            let l = p.l.unwrap_or(5);
            if l < 3 {
                return Err(RunError::config("params.l", "needs at least three sites"));
            }
            Ok(TwoParticleAmplitude::from_fock(&doublon_exact(j, u, t, l, p.boundary.unwrap_or(Boundary::Open))?)?)
        }
        other => Err(RunError::config(
            "params.state",
            format!("unknown state {other:?}; expected singlet, plus, phi-x, doublon or walked-doublon"),
        )),
    }
}

fn schmidt(p: &Params) -> RunResult<Report> {
    let v = named_two_particle_state(p)?;
    let spec = schmidt_spectrum(&v, DEFAULT_SCHMIDT_TOL)?;
    let cls = particle_entangled(&v, DEFAULT_SCHMIDT_TOL)?;
    let csop = match csop_check(&v)? {
        CsopVerdict::SameState => json!({ "verdict": "same-state" }),
        CsopVerdict::Projector { vector, expectation } => json!({
            "verdict": "projector",
            "expectation": expectation,
            "vector": vector.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        }),
        CsopVerdict::Absent { best } => json!({ "verdict": "absent", "best_expectation": best }),
    };
    let mut table = Table::new(&["k", "coefficient"]);
    for (k, c) in spec.coefficients.iter().enumerate() {
        table.push(vec![k.into(), (*c).into()]);
    }
    let mut report = Report::new("schmidt", table);
    report.summary = json!({
        "state": p.state,
        "rank": spec.rank,
        "coefficients": spec.coefficients,
        "basis": complex_matrix_json(&spec.basis),
        "classification": cls,
        "csop": csop,
    });
    Ok(report)
}

fn entropy_quench(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    no_sweep(config)?;
    let j = tunneling(p, 1.0)?;
    let u = finite("u", p.u.unwrap_or(0.0))?;
    let times = time_points(config, Grid::linspace(0.0, PI / (2.0 * j), 100))?;
    let q = quench_entropy_trace(j, u, &times)?;
    let mut table = Table::new(&["t", "S2"]);
    for (t, s) in q.times.iter().zip(&q.renyi2) {
        table.push(vec![(*t).into(), (*s).into()]);
    }
    let mut report = Report::new("entropy-quench", table);
    report.summary = json!({ "t_max": q.t_max, "jt_max": j * q.t_max, "s2_max": q.renyi2_max });
    Ok(report)
}

fn twin_purity(config: &ScenarioConfig, p: &Params) -> RunResult<Report> {
    let j = tunneling(p, 1.0)?;
    let l = p.l.unwrap_or(2);
    let n = p.n.unwrap_or(2);
    let cut_sites = p.cut.clone().unwrap_or_else(|| vec![0]);
    let cut = BipartiteCut::new(l, &cut_sites).map_err(|e| RunError::config("params.cut", e))?;
    let us = sweep_points(config, "u", Grid::list(vec![0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0]))?;
    let mut table = Table::new(&["u_over_j", "purity_twin", "purity_uncorrected", "purity_trace", "S2"]);
    for &u in &us {
        let params = HubbardParams::bosons(l, n, j, u, p.boundary.unwrap_or(Boundary::Open));
        params.validate()?;
        let g = hubbard_ground_state(&params)?;
        let twin = twin_parity_purity(&g, &cut_sites, TwinBeamsplitter::Tunneling { corrected: true })?;
        let raw = twin_parity_purity(&g, &cut_sites, TwinBeamsplitter::Tunneling { corrected: false })?;
        let rho = reduced_density_matrix(&g, &cut)?;
        table.push(vec![(u / j).into(), twin.into(), raw.into(), rho.purity().into(), entropies(&rho).renyi2.into()]);
    }
    Ok(Report::new("twin-purity", table))
}

fn postselect() -> RunResult<Report> {
    let r = postselected_spin_entanglement()?;
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec!["success_probability".into(), r.success_probability.into()]);
    table.push(vec!["singlet_fidelity".into(), r.singlet_fidelity.into()]);
    table.push(vec!["conditional_rank".into(), r.conditional_rank.into()]);
    table.push(vec!["unconditioned_rank".into(), r.unconditioned_rank.into()]);
    let mut report = Report::new("postselect", table);
    report.summary = serde_json::to_value(&r).expect("serializable");
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub seconds: f64,
    pub abs_permanent: f64,
}

/// Times the Ryser permanent of seeded random complex matrices of size `1..=max_n`.
pub fn bench_permanent(max_n: usize, seed: u64) -> RunResult<Vec<BenchRow>> {
    if max_n == 0 || max_n > RYSER_MAX_N {
        return Err(RunError::config("--max-n", format!("{max_n} must be between 1 and {RYSER_MAX_N}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let mut rows = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let m = DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            Complex64::new(re, im) / (2.0 * n as f64).sqrt()
        });
        let start = Instant::now();
        let value = permanent_ryser(&m)?;
        rows.push(BenchRow { n, seconds: start.elapsed().as_secs_f64(), abs_permanent: value.norm() });
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> Table {
    let mut t = Table::new(&["n", "seconds", "abs_permanent"]);
    for r in rows {
        t.push(vec![r.n.into(), r.seconds.into(), r.abs_permanent.into()]);
    }
    t
}
