//! Initial data, preset run profiles, the flat key-value config format and
//! the batch driver that writes CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{convergence_study, error_norms, invariants, ConvergenceReport, InvariantRecord};
use crate::dynamics::{Model, Params};
use crate::error::{Error, Result};
use crate::integrators::{Scheme, Simulation};
use crate::solvers::{JacobianMode, NewtonSettings};
use crate::spectral::{
    central_diff, fourier_series_hilbert, hilbert_kernel, spectral_symbols, Difference, Field, Grid,
    Parity, Spectral,
};

/// Periodic Benjamin–Ono solitary wave of speed `c` on `[0, l)`, centred at
/// `l/2 + ct`. Valid for `α = λ = 1`.
pub fn bo_soliton(x: f64, t: f64, c: f64, l: f64) -> Result<f64> {
    let a = soliton_a(c, l)?;
    let r = (1.0 - a * a).sqrt();
    Ok(2.0 * c * a * a / (1.0 - r * (c * a * (x - c * t - 0.5 * l)).cos()))
}

fn soliton_a(c: f64, l: f64) -> Result<f64> {
    let a = 2.0 * std::f64::consts::PI / (c * l);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "solitary wave needs 0 < 2π/(cl) < 1, got {a} (c = {c}, l = {l})"
        )));
    }
    Ok(a)
}

pub fn bo_soliton_field(grid: Grid, t: f64, c: f64) -> Result<Field> {
    let l = grid.length();
    soliton_a(c, l)?;
    Ok(Field::from_fn(grid, |x| bo_soliton(x, t, c, l).unwrap()))
}

/// Initial profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Initial {
    BoSoliton { c: f64 },
    /// `amplitude · exp(−(x − center)² / width)`
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// `cos(2π·mode·x/l)`
    Cosine { mode: u32 },
}

impl Initial {
    pub fn sample(&self, grid: Grid) -> Result<Field> {
        let l = grid.length();
        match *self {
            Initial::BoSoliton { c } => bo_soliton_field(grid, 0.0, c),
            Initial::Gaussian {
                amplitude,
                width,
                center,
            } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
                Ok(Field::from_fn(grid, |x| {
                    amplitude * (-(x - center).powi(2) / width).exp()
                }))
            }
            Initial::Cosine { mode } => Ok(Field::from_fn(grid, |x| {
                (2.0 * std::f64::consts::PI * mode as f64 * x / l).cos()
            })),
        }
    }
}

impl std::fmt::Display for Initial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Initial::BoSoliton { c } => write!(f, "bo-soliton({c:?})"),
            Initial::Gaussian {
                amplitude,
                width,
                center,
            } => write!(f, "gaussian({amplitude:?}, {width:?}, {center:?})"),
            Initial::Cosine { mode } => write!(f, "cosine({mode})"),
        }
    }
}

impl FromStr for Initial {
    type Err = Error;

    /// `bo-soliton(c)`, `gaussian(amplitude, width, center)` or `cosine(mode)`.
    fn from_str(s: &str) -> Result<Initial> {
        let bad = || Error::Config(format!("cannot parse initial profile `{s}`"));
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(str::trim)
            .collect();
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad());
        match (name.trim(), args.as_slice()) {
            ("bo-soliton", [c]) => Ok(Initial::BoSoliton { c: num(c)? }),
            ("gaussian", [a, w, x0]) => Ok(Initial::Gaussian {
                amplitude: num(a)?,
                width: num(w)?,
                center: num(x0)?,
            }),
            ("cosine", [m]) => Ok(Initial::Cosine {
                mode: m.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    pub length: f64,
    pub points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub initial: Initial,
    /// Snapshot cadence in steps; 0 keeps only the first and last level.
    pub snapshot_every: u64,
    /// Invariant sampling cadence in steps; 0 keeps only the first and last level.
    pub invariants_every: u64,
    pub newton: NewtonSettings,
    pub out: PathBuf,
}

const REQUIRED_KEYS: [&str; 11] = [
    "alpha", "beta", "gamma", "lambda", "length", "points", "dt", "t_end", "scheme", "initial",
    "out",
];

const OPTIONAL_KEYS: [&str; 5] = [
    "snapshot_every",
    "invariants_every",
    "newton_tol",
    "newton_max_iter",
    "jacobian",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.length, self.points)
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.newton.validate()?;
        let grid = self.grid()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {:?}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {:?}",
                self.t_end
            )));
        }
        if let Some(parity) = self.scheme.required_parity() {
            grid.require(parity, self.scheme.name())?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.params.alpha = parse_value(key, value)?,
            "beta" => self.params.beta = parse_value(key, value)?,
            "gamma" => self.params.gamma = parse_value(key, value)?,
            "lambda" => self.params.lambda = parse_value(key, value)?,
            "length" => self.length = parse_value(key, value)?,
            "points" => self.points = parse_value(key, value)?,
            "dt" => self.dt = parse_value(key, value)?,
            "t_end" => self.t_end = parse_value(key, value)?,
            "scheme" => self.scheme = value.trim().parse()?,
            "initial" => self.initial = value.parse()?,
            "snapshot_every" => self.snapshot_every = parse_value(key, value)?,
            "invariants_every" => self.invariants_every = parse_value(key, value)?,
            "newton_tol" => self.newton.tol = parse_value(key, value)?,
            "newton_max_iter" => self.newton.max_iter = parse_value(key, value)?,
            "jacobian" => self.newton.jacobian_mode = value.trim().parse::<JacobianMode>()?,
            "out" => self.out = PathBuf::from(value.trim()),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. `#` starts a comment. Unknown or
    /// repeated keys are errors, as are missing required keys.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut seen = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !seen.contains_key(**k)) {
            return Err(Error::Config(format!("missing key `{missing}`")));
        }
        let mut cfg = preset(PresetName::BoSoliton);
        for (k, v) in &seen {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`RunConfig::parse`]; floats are written so that they parse back exactly.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("alpha", format!("{:?}", p.alpha));
        kv("beta", format!("{:?}", p.beta));
        kv("gamma", format!("{:?}", p.gamma));
        kv("lambda", format!("{:?}", p.lambda));
        kv("length", format!("{:?}", self.length));
        kv("points", self.points.to_string());
        kv("dt", format!("{:?}", self.dt));
        kv("t_end", format!("{:?}", self.t_end));
        kv("scheme", self.scheme.to_string());
        kv("initial", self.initial.to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("invariants_every", self.invariants_every.to_string());
        kv("newton_tol", format!("{:?}", self.newton.tol));
        kv("newton_max_iter", self.newton.max_iter.to_string());
        kv("jacobian", self.newton.jacobian_mode.to_string());
        kv("out", self.out.display().to_string());
        s
    }

    /// Reads the config echoed in a `run_manifest.json`.
    pub fn from_manifest(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        manifest.config.validate()?;
        Ok(manifest.config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    BoSoliton,
    GaussianSplit,
    WaveBreaking,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [
        PresetName::BoSoliton,
        PresetName::GaussianSplit,
        PresetName::WaveBreaking,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetName::BoSoliton => "bo-soliton",
            PresetName::GaussianSplit => "gaussian-split",
            PresetName::WaveBreaking => "wave-breaking",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<PresetName> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Desk-scale profile. Horizons and grids are reduced from the full-scale
/// settings (see [`preset_full_scale`]) so that each run finishes in minutes:
/// bo-soliton runs to t = 10, gaussian-split to t = 20 on 512 points,
/// wave-breaking to t = 5e-3 on 1024 points.
pub fn preset(name: PresetName) -> RunConfig {
    let base = |params, length, points, dt, t_end, initial, snapshot_every, invariants_every| RunConfig {
        params,
        length,
        points,
        dt,
        t_end,
        scheme: Scheme::EulerBox,
        initial,
        snapshot_every,
        invariants_every,
        newton: NewtonSettings::default(),
        out: PathBuf::from(format!("runs/{}", name.name())),
    };
    match name {
        PresetName::BoSoliton => base(
            Params::benjamin_ono(1.0, 1.0),
            30.0,
            255,
            2.5e-3,
            10.0,
            Initial::BoSoliton { c: 0.25 },
            400,
            10,
        ),
        PresetName::GaussianSplit => base(
            Params {
                alpha: -1.0,
                beta: -1.0,
                gamma: 1.0,
                lambda: 1.0,
            },
            600.0,
            512,
            1e-2,
            20.0,
            Initial::Gaussian {
                amplitude: 2.0,
                width: 16.0,
                center: 300.0,
            },
            200,
            10,
        ),
        PresetName::WaveBreaking => base(
            Params {
                alpha: 0.01,
                beta: 0.001,
                gamma: 0.1,
                lambda: 0.2,
            },
            10.0,
            1024,
            1e-6,
            5e-3,
            Initial::Cosine { mode: 1 },
            500,
            50,
        ),
    }
}

/// The published grids and horizons. These runs take hours.
pub fn preset_full_scale(name: PresetName) -> RunConfig {
    let mut cfg = preset(name);
    match name {
        PresetName::BoSoliton => {
            cfg.t_end = 100.0;
            cfg.snapshot_every = 4000;
            cfg.invariants_every = 100;
        }
        PresetName::GaussianSplit => {
            cfg.points = 2048;
            cfg.t_end = 100.0;
            cfg.snapshot_every = 1000;
            cfg.invariants_every = 100;
        }
        PresetName::WaveBreaking => cfg.points = 4096,
    }
    cfg
}

/// Preset with `key=value` overrides applied. Switching the bo-soliton preset
/// to a scheme that needs even grids moves it to 256 points unless `points`
/// is overridden too.
pub fn preset_with(name: PresetName, full_scale: bool, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = if full_scale {
        preset_full_scale(name)
    } else {
        preset(name)
    };
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    let points_set = overrides.iter().any(|(k, _)| k == "points");
    if name == PresetName::BoSoliton && !points_set && cfg.scheme.required_parity() == Some(Parity::Even) {
        cfg.points = 256;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `printf("%.17g")`: 17 significant digits, trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..17).contains(&exp) {
        trim(format!("{:.*}", (16 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa.to_string()), sign, exp.abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub benjamin_core: String,
    pub os: String,
    pub arch: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub integrate_seconds: f64,
    pub output_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Contents of `run_manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub versions: Versions,
    pub timings: Timings,
    pub status: RunStatus,
    pub steps_completed: u64,
    pub final_time: f64,
    /// Step index (1-based) whose solve failed.
    pub failed_step: Option<u64>,
    pub error: Option<String>,
    pub max_newton_iterations: usize,
}

/// Outcome of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out: PathBuf,
    pub steps: u64,
    pub final_time: f64,
    pub first: InvariantRecord,
    pub last: InvariantRecord,
    pub final_u: Field,
    pub snapshots: Vec<u64>,
}

fn csv_writer(path: &Path, header: &str) -> Result<BufWriter<fs::File>> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    Ok(w)
}

fn write_snapshot(dir: &Path, step: u64, u: &Field) -> Result<()> {
    let mut w = csv_writer(&dir.join(format!("snapshot_{step}.csv")), "x,u")?;
    for (x, v) in u.grid().nodes().zip(u.values()) {
        writeln!(w, "{},{}", fmt_g17(x), fmt_g17(*v))?;
    }
    w.flush()?;
    Ok(())
}

fn sampled(step: u64, every: u64, last: u64) -> bool {
    step == 0 || step == last || (every > 0 && step % every == 0)
}

/// Runs `cfg` and writes `invariants.csv`, `slope.csv` (max |δx u| over time),
/// `snapshot_<step>.csv`, `run_manifest.json` and `plot.py` into `cfg.out`.
/// A failed solve still writes the manifest, recording the failing step.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    cfg.validate()?;
    let grid = cfg.grid()?;
    let model = Model::new(grid, cfg.params);
    let u0 = cfg.initial.sample(grid)?;
    let mut sim = Simulation::new(cfg.scheme, model.clone(), u0, cfg.dt, cfg.newton)?;
    fs::create_dir_all(&cfg.out)?;
    let dir = cfg.out.as_path();
    let mut inv_w = csv_writer(&dir.join("invariants.csv"), "t,mass,momentum,energy")?;
    let mut slope_w = csv_writer(&dir.join("slope.csv"), "t,max_slope")?;
    let setup_seconds = start.elapsed().as_secs_f64();

    let total = cfg.steps();
    let mut snapshots = Vec::new();
    let mut first = None;
    let mut last = None;
    let mut max_its = 0;
    let mut failure = None;
    let mut output_seconds = 0.0;
    let integrate_start = Instant::now();
    for step in 0..=total {
        if step > 0 {
            if let Err(e) = sim.step() {
                failure = Some((step, e));
                break;
            }
            max_its = max_its.max(sim.last_iterations());
        }
        let t_out = Instant::now();
        let t = step as f64 * cfg.dt;
        if sampled(step, cfg.invariants_every, total) {
            let rec = invariants(sim.u(), &model, t);
            writeln!(
                inv_w,
                "{},{},{},{}",
                fmt_g17(rec.t),
                fmt_g17(rec.mass),
                fmt_g17(rec.momentum),
                fmt_g17(rec.energy)
            )?;
            let slope = central_diff(sim.u(), Difference::Centered).max_abs();
            writeln!(slope_w, "{},{}", fmt_g17(t), fmt_g17(slope))?;
            first.get_or_insert(rec);
            last = Some(rec);
        }
        if sampled(step, cfg.snapshot_every, total) {
            write_snapshot(dir, step, sim.u())?;
            snapshots.push(step);
        }
        output_seconds += t_out.elapsed().as_secs_f64();
    }
    inv_w.flush()?;
    slope_w.flush()?;
    let integrate_seconds = integrate_start.elapsed().as_secs_f64() - output_seconds;

    let manifest = Manifest {
        config: cfg.clone(),
        versions: Versions {
            benjamin_core: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        },
        timings: Timings {
            setup_seconds,
            integrate_seconds,
            output_seconds,
        },
        status: if failure.is_some() {
            RunStatus::Failed
        } else {
            RunStatus::Completed
        },
        steps_completed: sim.steps(),
        final_time: sim.time(),
        failed_step: failure.as_ref().map(|(s, _)| *s),
        error: failure.as_ref().map(|(_, e)| e.to_string()),
        max_newton_iterations: max_its,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("run_manifest.json"), json + "\n")?;
    fs::write(dir.join("plot.py"), PLOT_SCRIPT)?;

    if let Some((step, e)) = failure {
        return Err(Error::StepFailed {
            step,
            source: Box::new(e),
        });
    }
    Ok(RunSummary {
        out: cfg.out.clone(),
        steps: sim.steps(),
        final_time: sim.time(),
        first: first.expect("step 0 is always sampled"),
        last: last.expect("step 0 is always sampled"),
        final_u: sim.u().clone(),
        snapshots,
    })
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot the snapshots and invariant drift of the run in this directory."""
import glob
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(sys.argv[0]))

fig, ax = plt.subplots(figsize=(8, 4))
files = sorted(glob.glob(os.path.join(here, "snapshot_*.csv")),
               key=lambda p: int(p.rsplit("_", 1)[1][:-4]))
for path in files:
    d = np.loadtxt(path, delimiter=",", skiprows=1)
    ax.plot(d[:, 0], d[:, 1], lw=0.8, label=os.path.basename(path)[:-4])
ax.set_xlabel("x")
ax.set_ylabel("u")
if len(files) <= 12:
    ax.legend(fontsize=6)
fig.tight_layout()
fig.savefig(os.path.join(here, "snapshots.png"), dpi=150)

inv = np.loadtxt(os.path.join(here, "invariants.csv"), delimiter=",", skiprows=1, ndmin=2)
fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
for ax, col, name in zip(axes, (1, 2, 3), ("mass", "momentum", "energy")):
    ax.plot(inv[:, 0], inv[:, col] - inv[0, col])
    ax.set_ylabel(name + " drift")
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig(os.path.join(here, "invariants.png"), dpi=150)
"#;

/// CSV with columns `n,kernel,sgn_diag,wave_diag`.
pub fn kernel_dump(n: usize) -> Result<String> {
    let kernel = hilbert_kernel(n)?;
    let symbols = spectral_symbols(n)?;
    let mut s = String::from("n,kernel,sgn_diag,wave_diag\n");
    for k in 0..n {
        writeln!(
            s,
            "{},{},{},{}",
            k,
            fmt_g17(kernel.coeffs[k]),
            symbols.sgn_diag[k],
            symbols.wave_diag[k]
        )
        .unwrap();
    }
    Ok(s)
}

/// Reference profile of the Hilbert convergence study.
pub fn smooth_profile(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x / 30.0).sin().exp()
}

/// Max-norm error of the FFT Hilbert transform of [`smooth_profile`] on
/// `[0, 30)` against a 4096-mode Fourier series, for each grid size.
pub fn hilbert_convergence(points: &[usize]) -> Result<ConvergenceReport> {
    convergence_study(30.0, points, |grid| {
        let u = Field::from_fn(grid, smooth_profile);
        let h = Spectral::new(grid).hilbert(&u);
        let nodes: Vec<f64> = grid.nodes().collect();
        let reference = Field::new(grid, fourier_series_hilbert(smooth_profile, 30.0, 4096, &nodes))?;
        Ok(error_norms(&h, &reference)?.0)
    })
}

/// Max-norm error against the closed-form solitary wave at `t_end` for the
/// bo-soliton preset, refining `dt` together with `dx` (`dt ∝ 1/points`).
pub fn scheme_convergence(scheme: Scheme, points: &[usize], t_end: f64, newton: NewtonSettings) -> Result<ConvergenceReport> {
    let base = preset(PresetName::BoSoliton);
    let n0 = points.first().copied().unwrap_or(1) as f64;
    let Initial::BoSoliton { c } = base.initial else {
        unreachable!("bo-soliton preset starts from the solitary wave")
    };
    convergence_study(base.length, points, |grid| {
        let dt = base.dt * n0 / grid.points() as f64;
        let model = Model::new(grid, base.params);
        let mut sim = Simulation::new(scheme, model, bo_soliton_field(grid, 0.0, c)?, dt, newton)?;
        sim.run_until(t_end)?;
        let exact = bo_soliton_field(grid, sim.time(), c)?;
        Ok(error_norms(sim.u(), &exact)?.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_peak_and_symmetry() {
        let (c, l) = (0.25, 30.0);
        let a: f64 = 2.0 * std::f64::consts::PI / 7.5;
        assert!((a - 0.837758).abs() < 1e-6);
        let peak = 2.0 * c * a * a / (1.0 - (1.0 - a * a).sqrt());
        assert!((bo_soliton(15.0, 0.0, c, l).unwrap() - peak).abs() < 1e-14);
        assert!((bo_soliton(15.0 + 2.5, 10.0, c, l).unwrap() - peak).abs() < 1e-14);
        for x in [0.0, 3.1, 11.0, 27.9] {
            let u = bo_soliton(x, 0.0, c, l).unwrap();
            assert!(u > 0.0 && u <= peak);
            assert!((u - bo_soliton(30.0 - x, 0.0, c, l).unwrap()).abs() < 1e-13);
        }
        assert!(bo_soliton(1.0, 0.0, 0.2, 30.0).is_err());
        assert!(bo_soliton(1.0, 0.0, -0.25, 30.0).is_err());
    }

    #[test]
    fn g17_matches_printf() {
        for (x, want) in [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.10000000000000001"),
            (1e-6, "9.9999999999999995e-07"),
            (1e20, "1e+20"),
            (123456.0, "123456"),
            (0.0001, "0.0001"),
            (1.0 / 3.0, "0.33333333333333331"),
        ] {
            assert_eq!(fmt_g17(x), want, "{x}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for x in [std::f64::consts::PI, -1.234e-300, 6.02214076e23, 2.5e-3, f64::MAX] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn initial_profile_text_round_trip() {
        for init in [
            Initial::BoSoliton { c: 0.25 },
            Initial::Gaussian {
                amplitude: 2.0,
                width: 16.0,
                center: 300.0,
            },
            Initial::Cosine { mode: 3 },
        ] {
            assert_eq!(init.to_string().parse::<Initial>().unwrap(), init);
        }
        assert!("gaussian(1, 2)".parse::<Initial>().is_err());
        assert!("sine(1)".parse::<Initial>().is_err());
        assert!("cosine(1".parse::<Initial>().is_err());
    }

    #[test]
    fn config_text_round_trip_and_errors() {
        let mut cfg = preset(PresetName::GaussianSplit);
        cfg.newton.tol = 3.3e-13;
        cfg.newton.jacobian_mode = JacobianMode::Chord;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);

        let text = cfg.to_text();
        assert!(RunConfig::parse(&format!("{text}colour = red\n")).is_err());
        assert!(RunConfig::parse(&format!("{text}dt = 0.1\n")).is_err());
        let without_dt: String = text.lines().filter(|l| !l.starts_with("dt ")).map(|l| format!("{l}\n")).collect();
        assert!(RunConfig::parse(&without_dt).is_err());
        assert!(RunConfig::parse(&text.replace("dt = 0.01", "dt = -1.0")).is_err());
        assert!(RunConfig::parse(&text.replace("scheme = euler-box", "scheme = preissmann")).is_err());
    }

    #[test]
    fn bo_soliton_preset_moves_to_even_grid_for_tvm() {
        let tvm = preset_with(PresetName::BoSoliton, false, &[("scheme".into(), "tvm".into())]).unwrap();
        assert_eq!(tvm.points, 256);
        let pinned = [("scheme".to_string(), "tvm".to_string()), ("points".to_string(), "255".to_string())];
        assert!(preset_with(PresetName::BoSoliton, false, &pinned).is_err());
        assert!(preset_with(PresetName::WaveBreaking, false, &[("nope".into(), "1".into())]).is_err());
        assert!("bo_soliton".parse::<PresetName>().is_err());
    }

    #[test]
    fn kernel_dump_small_cases() {
        let csv = kernel_dump(4).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        let kernel: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        let want = [0.0, 0.5, 0.0, -0.5];
        for (k, w) in kernel.iter().zip(want) {
            assert!((k - w).abs() < 1e-15);
        }
        assert_eq!(rows.iter().map(|r| r[3]).collect::<Vec<_>>(), ["0", "1", "0", "-1"]);
        let three = kernel_dump(3).unwrap();
        let sgn: Vec<&str> = three.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(sgn, ["0", "1", "-1"]);
        assert!(kernel_dump(2).is_err());
    }
}
