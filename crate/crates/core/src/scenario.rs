//! Scenario configuration: TOML files with dotted sections, validated into
//! a `Scenario`.

use crate::controller::HistoryWindow;
use crate::error::{Error, Result};
use crate::field::CylinderGrid;
use crate::kernels::{PlantCoeffs, DEFAULT_I_MAX};
use crate::plant::PreHistory;
use crate::steady::{BoundaryData, ChannelSpec, FormationSpec};
use num_complex::Complex64 as C64;
use serde::Deserialize;
use std::path::Path;

pub const PAPER_PRESET: &str = include_str!("../presets/paper.toml");
pub const MODERATE_PRESET: &str = include_str!("../presets/moderate.toml");
pub const MISMATCH_PRESET: &str = include_str!("../presets/mismatch.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Realization {
    Spectral,
    Simpson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauChannels {
    Both,
    Planar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimateMode {
    Adaptive,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub grid: CylinderGrid,
    pub mprime: usize,
    pub i_max: usize,
    pub true_delay: f64,
    pub delay_lower: f64,
    pub delay_upper: f64,
    pub initial_estimate: f64,
    pub gain: f64,
    pub estimate_mode: EstimateMode,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub control_period: usize,
    pub snapshot_times: Vec<f64>,
    pub rebuild_tol: f64,
    pub realization: Realization,
    pub history_window: HistoryWindowSetting,
    pub tau_channels: TauChannels,
    pub prehistory: PreHistory,
    pub ring_indices: Vec<usize>,
    pub initial: FormationSpec,
    pub desired: FormationSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistoryWindowSetting {
    Estimate,
    TrueDelay,
}

impl Scenario {
    pub fn history_window(&self) -> HistoryWindow {
        match self.history_window {
            HistoryWindowSetting::Estimate => HistoryWindow::Estimate,
            HistoryWindowSetting::TrueDelay => HistoryWindow::TrueDelay(self.true_delay),
        }
    }

    pub fn preset(name: &str) -> Result<LoadedConfig> {
        let text = match name {
            "paper" => PAPER_PRESET,
            "moderate" => MODERATE_PRESET,
            "mismatch" => MISMATCH_PRESET,
            other => return Err(Error::Config(format!("unknown preset '{other}' (expected paper, moderate or mismatch)"))),
        };
        parse_config(text)
    }
}

/// A parsed scenario and the names of keys that fell back to defaults.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub scenario: Scenario,
    pub defaults_applied: Vec<String>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum Num {
    I(i64),
    F(f64),
}

impl Num {
    fn f(self) -> f64 {
        match self {
            Num::I(v) => v as f64,
            Num::F(v) => v,
        }
    }
}

#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum Scalar {
    Real(Num),
    Complex([Num; 2]),
}

impl Scalar {
    fn c(self) -> C64 {
        match self {
            Scalar::Real(v) => C64::new(v.f(), 0.0),
            Scalar::Complex([a, b]) => C64::new(a.f(), b.f()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    lambda: Scalar,
    beta: Scalar,
    f: Vec<(i64, Num, Num)>,
    g: Vec<(i64, Num, Num)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormation {
    planar: RawChannel,
    vertical: RawChannel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    m: usize,
    n: usize,
    mprime: Option<usize>,
    i_max: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelay {
    true_delay: Num,
    lower: Num,
    upper: Num,
    initial_estimate: Num,
    gain: Num,
    fixed_estimate: Option<Num>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: Num,
    dt: Option<Num>,
    control_period: Option<usize>,
    snapshots: Option<Vec<Num>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawController {
    realization: Option<String>,
    history_window: Option<String>,
    tau_channels: Option<String>,
    prehistory: Option<String>,
    rebuild_tol: Option<Num>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    ring_indices: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    delay: RawDelay,
    time: RawTime,
    #[serde(default)]
    controller: RawController,
    #[serde(default)]
    output: RawOutput,
    initial: RawFormation,
    desired: RawFormation,
}

fn modes(v: &[(i64, Num, Num)]) -> BoundaryData {
    BoundaryData::new(v.iter().map(|&(n, a, b)| (n as i32, C64::new(a.f(), b.f()))).collect())
}

fn channel(c: &RawChannel, real: bool, key: &str) -> Result<ChannelSpec> {
    let coeffs = PlantCoeffs::new(c.lambda.c(), c.beta.c());
    if real && (coeffs.lambda.im != 0.0 || coeffs.beta.im != 0.0) {
        return Err(Error::Config(format!("{key}: the vertical channel needs real coefficients")));
    }
    Ok(ChannelSpec {
        coeffs,
        f: modes(&c.f),
        g: modes(&c.g),
    })
}

fn formation(f: &RawFormation, key: &str) -> Result<FormationSpec> {
    Ok(FormationSpec {
        u: channel(&f.planar, false, &format!("{key}.planar"))?,
        z: channel(&f.vertical, true, &format!("{key}.vertical"))?,
    })
}

fn choice<T: Copy>(value: &Option<String>, key: &str, options: &[(&str, T)], defaults: &mut Vec<String>) -> Result<T> {
    match value {
        None => {
            defaults.push(format!("{key} = \"{}\"", options[0].0));
            Ok(options[0].1)
        }
        Some(v) => options.iter().find(|(name, _)| name == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("{key}: unknown value '{v}' (expected one of {})", names.join(", ")))
        }),
    }
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut defaults = Vec::new();

    let grid = CylinderGrid::new(raw.grid.m, raw.grid.n).map_err(|e| Error::Config(format!("grid: {e}")))?;
    let mprime = raw.grid.mprime.unwrap_or_else(|| {
        defaults.push("grid.mprime = 51".into());
        51
    });
    if mprime < 3 || mprime % 2 == 0 {
        return Err(Error::Config(format!("grid.mprime = {mprime} must be odd and at least 3")));
    }
    let i_max = raw.grid.i_max.unwrap_or_else(|| {
        defaults.push(format!("grid.i_max = {DEFAULT_I_MAX}"));
        DEFAULT_I_MAX
    });
    if i_max == 0 {
        return Err(Error::Config("grid.i_max must be positive".into()));
    }

    let d = &raw.delay;
    let (true_delay, lo, hi, d0, gain) = (d.true_delay.f(), d.lower.f(), d.upper.f(), d.initial_estimate.f(), d.gain.f());
    if !(true_delay >= 0.0 && true_delay.is_finite()) {
        return Err(Error::Config(format!("delay.true_delay = {true_delay} must be non-negative")));
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Config(format!("delay.lower = {lo}, delay.upper = {hi}: need 0 < lower < upper")));
    }
    if !(lo..=hi).contains(&d0) {
        return Err(Error::Config(format!("delay.initial_estimate = {d0} outside [{lo}, {hi}]")));
    }
    if !(gain > 0.0 && gain < 1.0) {
        return Err(Error::Config(format!("delay.gain = {gain} must lie in (0, 1)")));
    }
    let estimate_mode = match d.fixed_estimate {
        Some(v) if v.f() > 0.0 => EstimateMode::Fixed(v.f()),
        Some(v) => return Err(Error::Config(format!("delay.fixed_estimate = {} must be positive", v.f()))),
        None => EstimateMode::Adaptive,
    };

    let t_final = raw.time.t_final.f();
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("time.t_final = {t_final} must be positive")));
    }
    let dt = match raw.time.dt {
        Some(v) if v.f() > 0.0 => Some(v.f()),
        Some(v) => return Err(Error::Config(format!("time.dt = {} must be positive", v.f()))),
        None => {
            defaults.push("time.dt = <stability bound>".into());
            None
        }
    };
    let control_period = raw.time.control_period.unwrap_or_else(|| {
        defaults.push("time.control_period = 10".into());
        10
    });
    if control_period == 0 {
        return Err(Error::Config("time.control_period must be positive".into()));
    }
    let snapshot_times: Vec<f64> = match &raw.time.snapshots {
        Some(v) => v.iter().map(|x| x.f()).collect(),
        None => {
            defaults.push("time.snapshots = []".into());
            Vec::new()
        }
    };
    if let Some(bad) = snapshot_times.iter().find(|&&x| !(0.0..=t_final).contains(&x)) {
        return Err(Error::Config(format!("time.snapshots: {bad} outside [0, {t_final}]")));
    }

    let c = &raw.controller;
    let realization = choice(
        &c.realization,
        "controller.realization",
        &[("spectral", Realization::Spectral), ("simpson", Realization::Simpson)],
        &mut defaults,
    )?;
    let history_window = choice(
        &c.history_window,
        "controller.history_window",
        &[("estimate", HistoryWindowSetting::Estimate), ("true_delay", HistoryWindowSetting::TrueDelay)],
        &mut defaults,
    )?;
    let tau_channels = choice(
        &c.tau_channels,
        "controller.tau_channels",
        &[("both", TauChannels::Both), ("planar", TauChannels::Planar)],
        &mut defaults,
    )?;
    let prehistory = choice(
        &c.prehistory,
        "controller.prehistory",
        &[("zero", PreHistory::Zero), ("strict", PreHistory::Strict)],
        &mut defaults,
    )?;
    let rebuild_tol = match c.rebuild_tol {
        Some(v) => v.f(),
        None => {
            defaults.push("controller.rebuild_tol = 1e-4 (upper - lower)".into());
            1e-4 * (hi - lo)
        }
    };

    let ring_indices = raw.output.ring_indices.clone().unwrap_or_else(|| {
        defaults.push("output.ring_indices = []".into());
        Vec::new()
    });
    if let Some(bad) = ring_indices.iter().find(|&&i| i == 0 || i > grid.m) {
        return Err(Error::Config(format!("output.ring_indices: {bad} outside 1..={}", grid.m)));
    }

    Ok(LoadedConfig {
        scenario: Scenario {
            grid,
            mprime,
            i_max,
            true_delay,
            delay_lower: lo,
            delay_upper: hi,
            initial_estimate: d0,
            gain,
            estimate_mode,
            t_final,
            dt,
            control_period,
            snapshot_times,
            rebuild_tol,
            realization,
            history_window,
            tau_channels,
            prehistory,
            ring_indices,
            initial: formation(&raw.initial, "initial")?,
            desired: formation(&raw.desired, "desired")?,
        },
        defaults_applied: defaults,
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
