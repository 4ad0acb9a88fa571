//! Declarative runs: TOML config, presets, artifacts and the `run`,
//! `compare` and `sweep` drivers behind the command-line tool.
//!
//! Artifacts of one run go to a single directory:
//! `norms.csv`, `snapshots.bin` or `snapshots.txt`, `plot/*.dat` and
//! `summary.json`.

use crate::analysis::{
    default_gamma, extract_scattering_profile, fit_decay_exponent, norm_series, select_lambda_variant, theorem8_profile_check, AsymptoticForm,
    BandWeights, LambdaVariant, ScatterOptions,
};
use crate::error::{Error, Result};
use crate::fd::{crank_nicolson_robin, robin_residual, FdConfig};
use crate::field::{rel_l2, ComplexField, Grid};
use crate::forcing::BoundaryData;
use crate::solver::{solve, Method, SolverOptions};
use crate::trajectory::{ModelParams, RunStatus, Trajectory};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const OUTPUT_ROOT_VAR: &str = "HALFLINE_OUTPUT_ROOT";
const MAX_STEPS: f64 = 1e7;

// ---------------------------------------------------------------------------
// config

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub lambda_re: f64,
    #[serde(default)]
    pub lambda_im: f64,
    #[serde(default = "three")]
    pub power: f64,
    pub alpha: f64,
}

fn three() -> f64 {
    3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    Zero,
    /// `ε(x/c)²e^{−(x−c)²/4w²}e^{ikx}`, vanishing with its slope at the wall.
    Bump,
    /// `ε·x·e^{−x²/2w²}`
    GaussianOdd,
    /// `ε·e^{−(x−c)²/2w²}e^{ikx}`; must be negligible at the wall.
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub family: InitialFamily,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "five")]
    pub center: f64,
    #[serde(default = "unit")]
    pub width: f64,
    #[serde(default)]
    pub momentum: f64,
}

fn five() -> f64 {
    5.0
}

fn unit() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { family: InitialFamily::Zero, eps: 0.0, center: 5.0, width: 1.0, momentum: 0.0 }
    }
}

impl InitialConfig {
    pub fn field(&self, g: Grid) -> ComplexField {
        let InitialConfig { eps, center: c, width: w, momentum: k, .. } = *self;
        match self.family {
            InitialFamily::Zero => ComplexField::zeros(g, 0.0),
            InitialFamily::Bump => ComplexField::from_fn(g, 0.0, |x| C64::from_polar(eps * (x / c).powi(2) * (-(x - c).powi(2) / (4.0 * w * w)).exp(), k * x)),
            InitialFamily::GaussianOdd => ComplexField::from_fn(g, 0.0, |x| C64::new(eps * x * (-x * x / (2.0 * w * w)).exp(), 0.0)),
            InitialFamily::Gaussian => ComplexField::from_fn(g, 0.0, |x| C64::from_polar(eps * (-(x - c).powi(2) / (2.0 * w * w)).exp(), k * x)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFamily {
    Zero,
    Theorem4Class,
    Theorem7Class,
    Theorem8Profile,
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub family: BoundaryFamily,
    /// ε or A
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Defaults to `ε^{1/3}` for the theorem4 class.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub remainder: f64,
    #[serde(default)]
    pub omega: f64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { family: BoundaryFamily::Zero, amplitude: 0.0, beta: None, gamma: None, remainder: 0.0, omega: 0.0 }
    }
}

impl BoundaryConfig {
    fn need_beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| Error::Config(format!("boundary family {:?} needs beta", self.family)))
    }

    pub fn data(&self) -> Result<BoundaryData> {
        let a = self.amplitude;
        Ok(match self.family {
            BoundaryFamily::Zero => BoundaryData::zero(),
            BoundaryFamily::Theorem4Class => BoundaryData::theorem4(a, self.gamma.unwrap_or_else(|| default_gamma(a))),
            BoundaryFamily::Theorem7Class => BoundaryData::theorem7(a, self.need_beta()?),
            BoundaryFamily::Theorem8Profile => BoundaryData::theorem8_with_remainder(a, self.need_beta()?, self.remainder, self.gamma.unwrap_or(1.0)),
            BoundaryFamily::Probe => BoundaryData::probe(a, self.omega),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: Method::SteppedDuhamel }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    Binary,
    Text,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths are taken from the working directory, or from the
    /// output root when `HALFLINE_OUTPUT_ROOT` is set.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "binary")]
    pub snapshots: SnapshotFormat,
}

fn binary() -> SnapshotFormat {
    SnapshotFormat::Binary
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, snapshots: SnapshotFormat::Binary }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    #[serde(default)]
    pub decay: Option<DecayCheck>,
    #[serde(default)]
    pub conservation: Option<ConservationCheck>,
    #[serde(default)]
    pub scattering: Option<ScatteringCheck>,
    #[serde(default)]
    pub theorem8: Option<ProfileCheckConfig>,
    #[serde(default)]
    pub oracle: Option<OracleCheck>,
}

impl Analyses {
    pub fn is_empty(&self) -> bool {
        self.decay.is_none() && self.conservation.is_none() && self.scattering.is_none() && self.theorem8.is_none() && self.oracle.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCheck {
    pub window: [f64; 2],
    /// Expected slope of `log‖u‖∞`; defaults to ½ − β for theorem7-class
    /// forcing and −½ otherwise.
    #[serde(default)]
    pub expected: Option<f64>,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationCheck {
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringCheck {
    #[serde(default = "four")]
    pub xi_max: f64,
    #[serde(default = "robin")]
    pub form: AsymptoticForm,
    pub cauchy_times: Vec<f64>,
    /// Window and largest admissible exponent for the fitted decay of
    /// `sup_ξ|B(t,ξ)|`.
    pub tail_window: [f64; 2],
    pub tail_max_exponent: f64,
}

fn four() -> f64 {
    4.0
}

fn robin() -> AsymptoticForm {
    AsymptoticForm::Robin
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileCheckConfig {
    pub xi_max: f64,
    pub xi_points: usize,
    /// Times whose sup-differences must strictly decrease.
    pub times: Vec<f64>,
    /// Fit window used to pick the Λ variant on the linear control run.
    pub select_window: [f64; 2],
    /// Fixed variant instead of running the control.
    #[serde(default)]
    pub variant: Option<LambdaVariant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheck {
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub power: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default = "budget")]
    pub max_cells: usize,
    pub window: [f64; 2],
    pub tolerance: f64,
}

fn budget() -> usize {
    16
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Levels of the dx/dt halving table.
    #[serde(default = "levels")]
    pub levels: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn levels() -> usize {
    3
}

fn default_tol() -> f64 {
    1e-3
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { levels: 3, tolerance: 1e-3 }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    (line, column)
}

impl RunConfig {
    pub fn parse(text: &str, file: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::Parse { file: file.into(), line, column, message: e.message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A path, or the name of a bundled preset.
    pub fn load(source: &str) -> Result<RunConfig> {
        let p = Path::new(source);
        if p.exists() {
            return RunConfig::parse(&fs::read_to_string(p)?, source);
        }
        match preset(source) {
            Some(text) => RunConfig::parse(text, source),
            None => Err(Error::Usage(format!("no config file or preset named '{source}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.length, self.grid.n)?;
        let t = &self.time;
        if !(t.t_end > 0.0 && t.dt > 0.0) {
            return Err(Error::Config(format!("time.t_end and time.dt must be positive, got {} and {}", t.t_end, t.dt)));
        }
        if t.t_end / t.dt > MAX_STEPS {
            return Err(Error::Config(format!("T/dt = {:.3e} exceeds the {MAX_STEPS:.0e}-step limit", t.t_end / t.dt)));
        }
        if t.stride == 0 {
            return Err(Error::Config("time.stride must be at least 1".into()));
        }
        self.boundary.data()?;
        if let Some(d) = &self.analyses.decay {
            if !(d.window[0] < d.window[1]) {
                return Err(Error::Config(format!("analyses.decay.window {:?} is not increasing", d.window)));
            }
        }
        if let Some(s) = &self.sweep {
            if s.beta.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
                return Err(Error::Config("sweep.beta values must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical_json().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn grid_value(&self) -> Grid {
        Grid::new(self.grid.length, self.grid.n).expect("validated")
    }

    pub fn params(&self) -> Result<ModelParams> {
        let g = self.grid_value();
        ModelParams::new(C64::new(self.model.lambda_re, self.model.lambda_im), self.model.power, self.model.alpha, self.initial.field(g))
    }

    pub fn output_dir(&self) -> PathBuf {
        let rel = self.output.dir.clone().unwrap_or_else(|| format!("runs/{}", self.name));
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if Path::new(&rel).is_relative() => Path::new(&root).join(rel),
            _ => PathBuf::from(rel),
        }
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions::new(self.solver.method, self.time.t_end, self.time.dt).with_stride(self.time.stride)
    }

    fn expected_decay(&self, d: &DecayCheck) -> f64 {
        d.expected.unwrap_or(match (self.boundary.family, self.boundary.beta) {
            (BoundaryFamily::Theorem7Class, Some(b)) => 0.5 - b,
            _ => -0.5,
        })
    }

    fn band(&self) -> Option<BandWeights> {
        match (self.boundary.family, self.boundary.beta) {
            (BoundaryFamily::Theorem7Class | BoundaryFamily::Theorem8Profile, Some(beta)) => Some(BandWeights { beta, power: self.model.power, eps: self.boundary.amplitude }),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// presets

pub const PRESETS: [(&str, &str); 5] = [
    ("theorem4-small-data", include_str!("../presets/theorem4-small-data.toml")),
    ("theorem7-band", include_str!("../presets/theorem7-band.toml")),
    ("theorem7-sweep", include_str!("../presets/theorem7-sweep.toml")),
    ("theorem8-profile", include_str!("../presets/theorem8-profile.toml")),
    ("linear-only", include_str!("../presets/linear-only.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

// ---------------------------------------------------------------------------
// snapshot files

const MAGIC: &[u8; 8] = b"HLSNAP01";
const TEXT_HEADER: &str = "# halfline snapshots v1";

/// Binary layout, little-endian: magic `HLSNAP01`, `u32` version (1), `u64`
/// N, `f64` L, `u64` count, then per snapshot `f64` t followed by N pairs
/// `(f64 re, f64 im)` for `x_1..x_N`. The text form has a `#` header with
/// `N`, `L` and `count`, then one line per snapshot: `t re_1 im_1 …`.
pub fn write_snapshots(path: &Path, traj: &Trajectory, format: SnapshotFormat) -> Result<()> {
    let g = traj.grid();
    let mut f = BufWriter::new(fs::File::create(path)?);
    match format {
        SnapshotFormat::None => {}
        SnapshotFormat::Binary => {
            f.write_all(MAGIC)?;
            f.write_all(&1u32.to_le_bytes())?;
            f.write_all(&(g.n as u64).to_le_bytes())?;
            f.write_all(&g.length.to_le_bytes())?;
            f.write_all(&(traj.snapshots.len() as u64).to_le_bytes())?;
            for s in &traj.snapshots {
                f.write_all(&s.t.to_le_bytes())?;
                for v in &s.u.values {
                    f.write_all(&v.re.to_le_bytes())?;
                    f.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
        SnapshotFormat::Text => {
            writeln!(f, "{TEXT_HEADER}")?;
            writeln!(f, "# N {} L {} count {}", g.n, g.length, traj.snapshots.len())?;
            for s in &traj.snapshots {
                write!(f, "{:e}", s.t)?;
                for v in &s.u.values {
                    write!(f, " {:e} {:e}", v.re, v.im)?;
                }
                writeln!(f)?;
            }
        }
    }
    f.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub length: f64,
    pub n: usize,
    pub frames: Vec<(f64, Vec<C64>)>,
}

fn bad(path: &Path, what: &str) -> Error {
    Error::Config(format!("{}: {what}", path.display()))
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotFile> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        let mut pos = 8;
        let mut take = |k: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + k).ok_or_else(|| bad(path, "truncated snapshot file"))?;
            pos += k;
            Ok(s)
        };
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != 1 {
            return Err(bad(path, &format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let length = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut frames = Vec::with_capacity(count);
        for _ in 0..count {
            let t = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
                let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
                v.push(C64::new(re, im));
            }
            frames.push((t, v));
        }
        return Ok(SnapshotFile { length, n, frames });
    }
    let mut lines = BufReader::new(&bytes[..]).lines();
    if lines.next().transpose()?.as_deref() != Some(TEXT_HEADER) {
        return Err(bad(path, "not a snapshot file"));
    }
    let head = lines.next().transpose()?.ok_or_else(|| bad(path, "missing size line"))?;
    let w: Vec<&str> = head.split_whitespace().collect();
    if w.len() != 7 || w[1] != "N" || w[3] != "L" {
        return Err(bad(path, "malformed size line"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(path, &format!("bad number '{s}'")));
    let n = num(w[2])? as usize;
    let length = num(w[4])?;
    let mut frames = Vec::new();
    for line in lines {
        let line = line?;
        let vals: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
        if vals.len() != 1 + 2 * n {
            return Err(bad(path, "row length does not match N"));
        }
        frames.push((vals[0], vals[1..].chunks(2).map(|c| C64::new(c[0], c[1])).collect()));
    }
    Ok(SnapshotFile { length, n, frames })
}

// ---------------------------------------------------------------------------
// summaries

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, limit: format!("<= {limit:e}"), pass: value <= limit }
    }

    fn within(name: &str, value: f64, target: f64, tol: f64) -> Check {
        Check { name: name.into(), value, limit: format!("{target} ± {tol}"), pass: (value - target).abs() <= tol }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub config: Value,
    pub solver: String,
    pub status: String,
    pub warnings: Vec<String>,
    pub truncation_contaminated: bool,
    pub max_tail_fraction: f64,
    pub checks: Vec<Check>,
    pub results: Value,
    pub note: Option<String>,
    pub passed: bool,
    pub wall_time_s: f64,
}

fn status_string(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::Aborted { t, reason } => format!("aborted at t = {t}: {reason}"),
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(format!("summary does not serialize: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_plot(dir: &Path, name: &str, series: &[(f64, f64)]) -> Result<()> {
    fs::create_dir_all(dir.join("plot"))?;
    let mut f = BufWriter::new(fs::File::create(dir.join("plot").join(format!("{name}.dat")))?);
    writeln!(f, "# t {name}")?;
    for (t, v) in series {
        writeln!(f, "{t:e} {v:e}")?;
    }
    f.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

// ---------------------------------------------------------------------------
// run

/// Runs one configuration and writes its artifacts into `dir`. A run that
/// aborts still writes norms, snapshots and a failed summary.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    fs::create_dir_all(dir)?;
    let params = cfg.params()?;
    let h = cfg.boundary.data()?;
    let traj = solve(&params, &h, &cfg.solver_options())?;
    let gamma = default_gamma(cfg.boundary.amplitude.max(cfg.initial.eps));
    let reports = norm_series(&traj, gamma, cfg.band())?;

    let mut w = csv::Writer::from_path(dir.join("norms.csv")).map_err(csv_err)?;
    w.write_record(["t", "L2", "Linf", "H10", "H01", "Jnorm", "Xnorm"]).map_err(csv_err)?;
    for r in &reports {
        w.write_record([r.t, r.l2, r.linf, r.h10, r.h01, r.jnorm, r.xnorm].iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    match cfg.output.snapshots {
        SnapshotFormat::Binary => write_snapshots(&dir.join("snapshots.bin"), &traj, SnapshotFormat::Binary)?,
        SnapshotFormat::Text => write_snapshots(&dir.join("snapshots.txt"), &traj, SnapshotFormat::Text)?,
        SnapshotFormat::None => {}
    }
    let linf: Vec<(f64, f64)> = reports.iter().map(|r| (r.t, r.linf)).collect();
    write_plot(dir, "linf", &linf)?;
    write_plot(dir, "l2", &reports.iter().map(|r| (r.t, r.l2)).collect::<Vec<_>>())?;
    write_plot(dir, "xnorm", &reports.iter().map(|r| (r.t, r.xnorm)).collect::<Vec<_>>())?;

    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    let completed = traj.status == RunStatus::Completed;
    if completed {
        analyse(cfg, &params, &h, &traj, &linf, dir, &mut checks, &mut results)?;
    }
    if traj.truncation_contaminated() {
        checks.push(Check { name: "truncation".into(), value: traj.max_tail_fraction, limit: "<= 0.1".into(), pass: false });
    }
    let note = if cfg.analyses.is_empty() { Some("no checks requested".to_string()) } else { None };
    let summary = RunSummary {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        solver: traj.solver.clone(),
        status: status_string(&traj.status),
        warnings: traj.warnings.clone(),
        truncation_contaminated: traj.truncation_contaminated(),
        max_tail_fraction: traj.max_tail_fraction,
        passed: completed && checks.iter().all(|c| c.pass),
        checks,
        results: Value::Object(results),
        note,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    run_in(cfg, &cfg.output_dir())
}

#[allow(clippy::too_many_arguments)]
fn analyse(
    cfg: &RunConfig,
    params: &ModelParams,
    h: &BoundaryData,
    traj: &Trajectory,
    linf: &[(f64, f64)],
    dir: &Path,
    checks: &mut Vec<Check>,
    results: &mut serde_json::Map<String, Value>,
) -> Result<()> {
    let a = &cfg.analyses;
    if let Some(d) = &a.decay {
        let fit = fit_decay_exponent(linf, (d.window[0], d.window[1]))?;
        let target = cfg.expected_decay(d);
        checks.push(Check::within("linf_decay_exponent", fit.exponent, target, d.tolerance));
        results.insert("linf_decay".into(), json!(fit));
    }
    if let Some(c) = &a.conservation {
        let m0 = traj.snapshots[0].u.mass();
        let drift = traj.snapshots.iter().map(|s| (s.u.mass() - m0).abs()).fold(0.0, f64::max) / m0.max(1e-300);
        checks.push(Check::at_most("relative_mass_drift", drift, c.tolerance));
    }
    if let Some(s) = &a.scattering {
        let sc = extract_scattering_profile(traj, ScatterOptions { xi_max: s.xi_max, form: s.form, ..Default::default() })?;
        let tail = sc.b_sup_series();
        write_plot(dir, "b_tail", &tail)?;
        let fit = fit_decay_exponent(&tail, (s.tail_window[0], s.tail_window[1]))?;
        checks.push(Check::at_most("b_tail_exponent", fit.exponent, s.tail_max_exponent));
        let inc = sc.cauchy_increments(&s.cauchy_times);
        write_plot(dir, "cauchy", &inc)?;
        let decreasing = inc.windows(2).all(|w| w[1].1 < w[0].1);
        checks.push(Check { name: "cauchy_increments_decrease".into(), value: inc.last().map(|p| p.1).unwrap_or(f64::NAN), limit: "strictly decreasing".into(), pass: decreasing });
        let res = crate::analysis::asymptotic_residual(traj, &sc);
        write_plot(dir, "asymptotic_residual", &res.iter().map(|r| (r.t, r.residual)).collect::<Vec<_>>())?;
        results.insert(
            "scattering".into(),
            json!({ "form": s.form, "tail_fit": fit, "cauchy": inc, "psi_plus_error": sc.psi_plus_error(), "xi": sc.xi.len() }),
        );
    }
    if let Some(p) = &a.theorem8 {
        let xi: Vec<f64> = (0..p.xi_points).map(|k| p.xi_max * k as f64 / (p.xi_points.max(2) - 1) as f64).collect();
        let (variant, selection) = match p.variant {
            Some(v) => (v, Value::Null),
            None => {
                let control = if params.lambda == C64::new(0.0, 0.0) {
                    traj.clone()
                } else {
                    let mut lin = params.clone();
                    lin.lambda = C64::new(0.0, 0.0);
                    solve(&lin, h, &cfg.solver_options())?
                };
                let (v, all) = select_lambda_variant(&control, &xi, (p.select_window[0], p.select_window[1]))?;
                let table: Vec<Value> = all.iter().map(|(c, f)| json!({ "variant": c.variant, "fit": f, "final_diff": c.final_diff() })).collect();
                (v, Value::Array(table))
            }
        };
        let check = theorem8_profile_check(traj, variant, &xi)?;
        write_plot(dir, "profile_diff", &check.samples.iter().map(|s| (s.t, s.sup_diff)).collect::<Vec<_>>())?;
        let at: Vec<f64> = p
            .times
            .iter()
            .map(|&t| check.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).map(|s| s.sup_diff).unwrap_or(f64::NAN))
            .collect();
        let decreasing = at.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check { name: "profile_difference_decreases".into(), value: at.last().copied().unwrap_or(f64::NAN), limit: format!("strictly decreasing over t = {:?}", p.times), pass: decreasing });
        results.insert("theorem8".into(), json!({ "variant": variant, "in_band": check.in_band, "exponent": check.exponent, "differences": at, "selection": selection }));
    }
    if let Some(o) = &a.oracle {
        let fd = crank_nicolson_robin(&FdConfig::new(params.clone(), h.clone(), cfg.time.dt)?, cfg.time.t_end, cfg.time.stride)?;
        let diffs = solver_differences(traj, &fd);
        let worst = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
        checks.push(Check::at_most("oracle_relative_l2", worst, o.tolerance));
        write_plot(dir, "oracle_relative_l2", &diffs.iter().map(|d| (d.0, d.1)).collect::<Vec<_>>())?;
    }
    Ok(())
}

/// `(t, relative L², relative L∞)` between matching snapshots.
pub fn solver_differences(a: &Trajectory, b: &Trajectory) -> Vec<(f64, f64, f64)> {
    a.snapshots
        .iter()
        .filter_map(|s| {
            let o = b.snapshots.iter().find(|o| (o.t - s.t).abs() < 1e-9 * s.t.max(1.0))?;
            let l2 = rel_l2(&s.u, &o.u);
            let scale = o.u.linf_norm().max(1e-300);
            Some((s.t, l2, s.u.sub(&o.u).linf_norm() / scale))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// compare

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub solver: String,
    pub level: usize,
    pub n: usize,
    pub dt: f64,
    /// Relative L² distance to the next finer level at `T`.
    pub difference: f64,
    pub order: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareSummary {
    pub name: String,
    pub config_hash: String,
    pub config: Value,
    pub max_relative_l2: f64,
    pub max_relative_linf: f64,
    pub max_robin_residual_spectral: f64,
    pub max_robin_residual_fd: f64,
    pub convergence: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_time_s: f64,
}

fn refine(cfg: &RunConfig, level: usize, refine_space: bool) -> RunConfig {
    let mut c = cfg.clone();
    let k = 1usize << level;
    c.time.dt = cfg.time.dt / k as f64;
    c.time.stride = usize::MAX / 2;
    if refine_space {
        c.grid.n = (cfg.grid.n + 1) * k - 1;
    }
    c
}

fn final_field(traj: &Trajectory) -> &ComplexField {
    &traj.last().expect("trajectory has snapshots").u
}

/// Halving table: successive differences `e_k = ‖u_k − u_{k+1}‖/‖u_{k+1}‖`
/// at `T` and observed orders `log₂(e_k/e_{k+1})`. The spectral solver
/// halves dt only; the difference scheme halves dx and dt together and is
/// compared on the coarse nodes.
pub fn convergence_table(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let levels = cfg.compare.levels.max(2);
    let h = cfg.boundary.data()?;
    let spectral: Vec<(RunConfig, Trajectory)> = (0..=levels)
        .into_par_iter()
        .map(|k| {
            let c = refine(cfg, k, false);
            let t = solve(&c.params()?, &h, &c.solver_options())?;
            Ok((c, t))
        })
        .collect::<Result<_>>()?;
    let fd: Vec<(RunConfig, Trajectory)> = (0..=levels)
        .into_par_iter()
        .map(|k| {
            let c = refine(cfg, k, true);
            let t = crank_nicolson_robin(&FdConfig::new(c.params()?, h.clone(), c.time.dt)?, c.time.t_end, c.time.stride)?;
            Ok((c, t))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (name, runs, stride_of) in [("stepped-duhamel", &spectral, false), ("crank-nicolson", &fd, true)] {
        let mut diffs = Vec::new();
        for k in 0..levels {
            let coarse = final_field(&runs[k].1);
            let fine = final_field(&runs[k + 1].1);
            let fine_on_coarse = if stride_of {
                let step = (fine.grid.n + 1) / (coarse.grid.n + 1);
                ComplexField { grid: coarse.grid, values: (1..=coarse.grid.n).map(|j| fine.values[j * step - 1]).collect(), trace: fine.trace, time: fine.time, repr: fine.repr }
            } else {
                fine.clone()
            };
            diffs.push(rel_l2(coarse, &fine_on_coarse));
        }
        for k in 0..levels {
            let order = if k + 1 < levels && diffs[k + 1] > 0.0 { Some((diffs[k] / diffs[k + 1]).log2()) } else { None };
            rows.push(ConvergenceRow { solver: name.into(), level: k, n: runs[k].0.grid.n, dt: runs[k].0.time.dt, difference: diffs[k], order });
        }
    }
    Ok(rows)
}

pub fn compare_in(cfg: &RunConfig, dir: &Path) -> Result<CompareSummary> {
    let start = Instant::now();
    fs::create_dir_all(dir)?;
    let params = cfg.params()?;
    let h = cfg.boundary.data()?;
    let (sp, fd) = rayon::join(
        || solve(&params, &h, &cfg.solver_options()),
        || FdConfig::new(params.clone(), h.clone(), cfg.time.dt).and_then(|c| crank_nicolson_robin(&c, cfg.time.t_end, cfg.time.stride)),
    );
    let (sp, fd) = (sp?, fd?);
    let diffs = solver_differences(&sp, &fd);
    let rs = robin_residual(&sp)?;
    let rf = robin_residual(&fd)?;
    let mut w = csv::Writer::from_path(dir.join("compare.csv")).map_err(csv_err)?;
    w.write_record(["t", "rel_l2", "rel_linf", "robin_spectral", "robin_fd"]).map_err(csv_err)?;
    for (i, d) in diffs.iter().enumerate() {
        let a = rs.iter().find(|r| (r.0 - d.0).abs() < 1e-9).map(|r| r.1).unwrap_or(f64::NAN);
        let b = rf.get(i).map(|r| r.1).unwrap_or(f64::NAN);
        w.write_record([d.0, d.1, d.2, a, b].iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    let table = convergence_table(cfg)?;
    let mut w = csv::Writer::from_path(dir.join("convergence.csv")).map_err(csv_err)?;
    w.write_record(["solver", "level", "n", "dt", "difference", "order"]).map_err(csv_err)?;
    for r in &table {
        w.write_record([r.solver.clone(), r.level.to_string(), r.n.to_string(), r.dt.to_string(), r.difference.to_string(), r.order.map(|o| o.to_string()).unwrap_or_default()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    let max_l2 = diffs.iter().map(|d| d.1).fold(0.0, f64::max);
    let checks = vec![Check::at_most("relative_l2", max_l2, cfg.compare.tolerance)];
    let s = CompareSummary {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        max_relative_l2: max_l2,
        max_relative_linf: diffs.iter().map(|d| d.2).fold(0.0, f64::max),
        max_robin_residual_spectral: rs.iter().map(|r| r.1).fold(0.0, f64::max),
        max_robin_residual_fd: rf.iter().map(|r| r.1).fold(0.0, f64::max),
        convergence: table,
        passed: checks.iter().all(|c| c.pass) && sp.status == RunStatus::Completed,
        checks,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("summary.json"), &s)?;
    Ok(s)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub beta: Option<f64>,
    pub power: f64,
    pub eps: f64,
    pub alpha: f64,
    pub fitted: f64,
    pub predicted: f64,
    pub deviation: f64,
    pub pass: bool,
    pub status: String,
}

pub fn sweep_cells(cfg: &RunConfig) -> Result<Vec<RunConfig>> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("config has no [sweep] table".into()))?;
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let betas: Vec<Option<f64>> = if s.beta.is_empty() { vec![cfg.boundary.beta] } else { s.beta.iter().map(|&b| Some(b)).collect() };
    let powers = or(&s.power, cfg.model.power);
    let epss = or(&s.eps, cfg.boundary.amplitude);
    let alphas = or(&s.alpha, cfg.model.alpha);
    let count = betas.len() * powers.len() * epss.len() * alphas.len();
    if count > s.max_cells {
        return Err(Error::Config(format!("sweep has {count} cells, more than the budget of {}", s.max_cells)));
    }
    let mut cells = Vec::with_capacity(count);
    for &b in &betas {
        for &p in &powers {
            for &e in &epss {
                for &a in &alphas {
                    let mut c = cfg.clone();
                    c.boundary.beta = b;
                    c.model.power = p;
                    c.boundary.amplitude = e;
                    if c.initial.family != InitialFamily::Zero {
                        c.initial.eps = e;
                    }
                    c.model.alpha = a;
                    c.sweep = None;
                    c.name = format!("{}-cell{}", cfg.name, cells.len());
                    c.validate()?;
                    cells.push(c);
                }
            }
        }
    }
    Ok(cells)
}

fn sweep_cell(i: usize, c: &RunConfig, s: &SweepConfig) -> Result<SweepRow> {
    let traj = solve(&c.params()?, &c.boundary.data()?, &c.solver_options())?;
    let linf: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.t, s.u.linf_norm())).collect();
    let predicted = match (c.boundary.family, c.boundary.beta) {
        (BoundaryFamily::Theorem7Class, Some(b)) => 0.5 - b,
        _ => -0.5,
    };
    let fitted = if traj.status == RunStatus::Completed { fit_decay_exponent(&linf, (s.window[0], s.window[1]))?.exponent } else { f64::NAN };
    let deviation = (fitted - predicted).abs();
    Ok(SweepRow {
        cell: i,
        beta: c.boundary.beta,
        power: c.model.power,
        eps: c.boundary.amplitude,
        alpha: c.model.alpha,
        fitted,
        predicted,
        deviation,
        pass: deviation <= s.tolerance,
        status: status_string(&traj.status),
    })
}

/// Cells run in parallel; rows are written in cell order, so the CSV does
/// not depend on scheduling.
pub fn sweep_in(cfg: &RunConfig, dir: &Path) -> Result<Vec<SweepRow>> {
    let s = cfg.sweep.clone().ok_or_else(|| Error::Config("config has no [sweep] table".into()))?;
    let cells = sweep_cells(cfg)?;
    fs::create_dir_all(dir)?;
    let rows: Vec<SweepRow> = cells.par_iter().enumerate().map(|(i, c)| sweep_cell(i, c, &s)).collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv")).map_err(csv_err)?;
    w.write_record(["cell", "beta", "power", "eps", "alpha", "fitted", "predicted", "deviation", "pass"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.cell.to_string(),
            r.beta.map(|b| b.to_string()).unwrap_or_default(),
            r.power.to_string(),
            r.eps.to_string(),
            r.alpha.to_string(),
            r.fitted.to_string(),
            r.predicted.to_string(),
            r.deviation.to_string(),
            r.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    write_json(
        &dir.join("summary.json"),
        &json!({ "name": cfg.name, "config_hash": cfg.hash(), "config": cfg, "rows": rows, "passed": rows.iter().all(|r| r.pass) }),
    )?;
    Ok(rows)
}
