//! Run configuration in a flat `section.key = value` format.
//!
//! ```text
//! # comment
//! model.id = ac_weak
//! observation.cutoff = 8
//! nudging.mu = 50
//! ```
//!
//! Parsing is strict: unknown keys, duplicates, malformed values and constraint violations are
//! all collected and reported together.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::noise::NoiseKind;
use crate::observation::ObservationKind;
use crate::triple::{ModelId, NormConvention};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub id: ModelId,
    /// Sine modes or torus grid size; `None` selects 128 (interval) or 64 (torus).
    pub n: Option<usize>,
    pub nu: f64,
    pub resistivity: f64,
    pub norm: NormConvention,
}

impl ModelConfig {
    pub fn resolved_n(&self) -> usize {
        self.n.unwrap_or(if self.id.is_torus() { 64 } else { 128 })
    }
}

/// Observation scale, given directly or through the mode cutoff `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservationScale {
    Delta(f64),
    Cutoff(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationConfig {
    pub kind: ObservationKind,
    pub scale: ObservationScale,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub sigma: f64,
    /// `sigma_delta = sigma * delta^p`.
    pub p: f64,
    /// Spectrum exponent `s` in `lambda_k = (1 + |k|^2)^(-s)`; `None` selects 1.0 (interval)
    /// or 1.5 (torus).
    pub exponent: Option<f64>,
    /// Largest noise mode; `None` ties it to the observation cutoff.
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NudgingConfig {
    pub mu: f64,
    pub implicit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Output every `stride` steps.
    pub stride: usize,
    pub guard: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub members: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub emit_y: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialEstimate {
    Random,
    Zero,
    Equal,
}

impl InitialEstimate {
    pub fn name(self) -> &'static str {
        match self {
            InitialEstimate::Random => "random",
            InitialEstimate::Zero => "zero",
            InitialEstimate::Equal => "equal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(Self::Random),
            "zero" => Some(Self::Zero),
            "equal" => Some(Self::Equal),
            _ => None,
        }
    }
}

/// Random initial data: Gaussian coefficients on modes `<= modes` with amplitude
/// `(1 + |k|^2)^(-decay)`, rescaled to the requested `H` norms.
#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub u0_norm: f64,
    pub v0: InitialEstimate,
    pub v0_norm: f64,
    pub modes: f64,
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub observation: ObservationConfig,
    pub noise: NoiseConfig,
    pub nudging: NudgingConfig,
    pub time: TimeConfig,
    pub ensemble: EnsembleConfig,
    pub output: OutputConfig,
    pub init: InitConfig,
}

impl RunConfig {
    /// Defaults for `model`.
    pub fn defaults(model: ModelId) -> Self {
        Self {
            model: ModelConfig {
                id: model,
                n: None,
                nu: 1.0,
                resistivity: 1.0,
                norm: NormConvention::Homogeneous,
            },
            observation: ObservationConfig { kind: ObservationKind::Modal, scale: ObservationScale::Cutoff(8) },
            noise: NoiseConfig { kind: NoiseKind::Additive, sigma: 0.0, p: 0.0, exponent: None, rank: None },
            nudging: NudgingConfig { mu: 50.0, implicit: false },
            time: TimeConfig { dt: 1e-3, t_end: 1.0, stride: 10, guard: 1e12 },
            ensemble: EnsembleConfig { members: 1, seed: 0 },
            output: OutputConfig { dir: "nudgelab-out".into(), emit_y: false },
            init: InitConfig { u0_norm: 1.0, v0: InitialEstimate::Random, v0_norm: 1.0, modes: 4.0, decay: 0.5 },
        }
    }

    /// Observation scale `delta` implied by the configuration.
    pub fn delta(&self) -> f64 {
        match self.observation.scale {
            ObservationScale::Delta(d) => d,
            ObservationScale::Cutoff(k) => {
                if self.model.id.is_torus() {
                    PI / k as f64
                } else {
                    1.0 / k as f64
                }
            }
        }
    }

    pub fn noise_exponent(&self) -> f64 {
        self.noise.exponent.unwrap_or(if self.model.id.is_torus() { 1.5 } else { 1.0 })
    }

    /// Re-checks every constraint; returns all violations.
    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let torus = self.model.id.is_torus();
        let n = self.model.resolved_n();
        if torus && n < 4 {
            e.push(format!("model.n must be >= 4 for {}, got {n}", self.model.id));
        } else if !torus && n < 2 {
            e.push(format!("model.n must be >= 2 for {}, got {n}", self.model.id));
        }
        if !(self.model.nu > 0.0 && self.model.nu.is_finite()) {
            e.push(format!("model.nu must be > 0, got {}", self.model.nu));
        }
        if !(self.model.resistivity > 0.0 && self.model.resistivity.is_finite()) {
            e.push(format!("model.resistivity must be > 0, got {}", self.model.resistivity));
        }
        if self.model.norm == NormConvention::Inhomogeneous
            && !matches!(self.model.id, ModelId::Heat | ModelId::AcWeak)
        {
            e.push("model.norm = inhomogeneous is only available for heat and ac_weak".into());
        }
        match self.observation.scale {
            ObservationScale::Delta(d) => {
                let length = if torus { 2.0 * PI } else { 1.0 };
                if !(d > 0.0 && d.is_finite()) {
                    e.push(format!("observation.delta must be > 0, got {d}"));
                } else if d > length {
                    e.push(format!("observation.delta must not exceed the domain length {length}, got {d}"));
                }
            }
            ObservationScale::Cutoff(k) => {
                if k == 0 {
                    e.push("observation.cutoff must be >= 1".into());
                }
            }
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            e.push(format!("noise.sigma must be >= 0, got {}", self.noise.sigma));
        }
        if self.noise.p != 0.0 && self.noise.p != 0.5 {
            e.push(format!("noise.p must be 0 or 0.5, got {}", self.noise.p));
        }
        if let Some(s) = self.noise.exponent {
            if !s.is_finite() {
                e.push("noise.exponent must be finite".into());
            }
        }
        if self.noise.rank == Some(0) {
            e.push("noise.rank must be >= 1".into());
        }
        if !(self.nudging.mu >= 0.0 && self.nudging.mu.is_finite()) {
            e.push(format!("nudging.mu must be >= 0, got {}", self.nudging.mu));
        }
        if self.nudging.implicit && self.observation.kind != ObservationKind::Modal {
            e.push("nudging.implicit requires observation.kind = modal".into());
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            e.push(format!("time.dt must be > 0, got {}", t.dt));
        }
        if !(t.t_end >= t.dt && t.t_end.is_finite()) {
            e.push(format!("time.t_end must be >= time.dt, got {}", t.t_end));
        }
        if t.stride == 0 {
            e.push("time.stride must be >= 1".into());
        }
        if !(t.guard > 0.0) {
            e.push(format!("time.guard must be > 0, got {}", t.guard));
        }
        if self.ensemble.members == 0 {
            e.push("ensemble.members must be >= 1".into());
        }
        if self.output.dir.is_empty() {
            e.push("output.dir must not be empty".into());
        }
        let i = &self.init;
        if !(i.u0_norm >= 0.0 && i.u0_norm.is_finite()) {
            e.push(format!("init.u0_norm must be >= 0, got {}", i.u0_norm));
        }
        if !(i.v0_norm >= 0.0 && i.v0_norm.is_finite()) {
            e.push(format!("init.v0_norm must be >= 0, got {}", i.v0_norm));
        }
        if !(i.modes >= 1.0 && i.modes.is_finite()) {
            e.push(format!("init.modes must be >= 1, got {}", i.modes));
        }
        if !i.decay.is_finite() {
            e.push("init.decay must be finite".into());
        }
        e
    }

    /// Serialises every resolved setting in the input format; parsing the result gives back
    /// an equal configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "model.id = {}", m.id.name());
        let _ = writeln!(s, "model.n = {}", m.resolved_n());
        let _ = writeln!(s, "model.nu = {:?}", m.nu);
        let _ = writeln!(s, "model.resistivity = {:?}", m.resistivity);
        let _ = writeln!(s, "model.norm = {}", m.norm.name());
        let _ = writeln!(s, "observation.kind = {}", self.observation.kind.name());
        match self.observation.scale {
            ObservationScale::Delta(d) => {
                let _ = writeln!(s, "observation.delta = {d:?}");
            }
            ObservationScale::Cutoff(k) => {
                let _ = writeln!(s, "observation.cutoff = {k}");
            }
        }
        let nz = &self.noise;
        let _ = writeln!(s, "noise.kind = {}", nz.kind.name());
        let _ = writeln!(s, "noise.sigma = {:?}", nz.sigma);
        let _ = writeln!(s, "noise.p = {:?}", nz.p);
        let _ = writeln!(s, "noise.exponent = {:?}", self.noise_exponent());
        if let Some(r) = nz.rank {
            let _ = writeln!(s, "noise.rank = {r}");
        }
        let _ = writeln!(s, "nudging.mu = {:?}", self.nudging.mu);
        let _ = writeln!(s, "nudging.implicit = {}", self.nudging.implicit);
        let t = &self.time;
        let _ = writeln!(s, "time.dt = {:?}", t.dt);
        let _ = writeln!(s, "time.t_end = {:?}", t.t_end);
        let _ = writeln!(s, "time.stride = {}", t.stride);
        let _ = writeln!(s, "time.guard = {:?}", t.guard);
        let _ = writeln!(s, "ensemble.members = {}", self.ensemble.members);
        let _ = writeln!(s, "ensemble.seed = {}", self.ensemble.seed);
        let _ = writeln!(s, "output.dir = {}", self.output.dir);
        let _ = writeln!(s, "output.emit_y = {}", self.output.emit_y);
        let i = &self.init;
        let _ = writeln!(s, "init.u0_norm = {:?}", i.u0_norm);
        let _ = writeln!(s, "init.v0 = {}", i.v0.name());
        let _ = writeln!(s, "init.v0_norm = {:?}", i.v0_norm);
        let _ = writeln!(s, "init.modes = {:?}", i.modes);
        let _ = writeln!(s, "init.decay = {:?}", i.decay);
        s
    }
}

const KEYS: &[&str] = &[
    "model.id",
    "model.n",
    "model.nu",
    "model.resistivity",
    "model.norm",
    "observation.kind",
    "observation.delta",
    "observation.cutoff",
    "noise.kind",
    "noise.sigma",
    "noise.p",
    "noise.exponent",
    "noise.rank",
    "nudging.mu",
    "nudging.implicit",
    "time.dt",
    "time.t_end",
    "time.stride",
    "time.guard",
    "ensemble.members",
    "ensemble.seed",
    "output.dir",
    "output.emit_y",
    "init.u0_norm",
    "init.v0",
    "init.v0_norm",
    "init.modes",
    "init.decay",
];

const SECTIONS: &[&str] = &["model", "observation", "noise", "nudging", "time", "ensemble", "output", "init"];

/// Parses and validates a configuration. `model.id` is required; everything else has a
/// default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut errs = Vec::new();
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errs.push(format!("line {line_no}: expected `section.key = value`, got `{line}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some((section, _)) = key.split_once('.') else {
            errs.push(format!("line {line_no}: key `{key}` has no section"));
            continue;
        };
        if !SECTIONS.contains(&section) {
            errs.push(format!("line {line_no}: unknown section `{section}`"));
            continue;
        }
        if !KEYS.contains(&key) {
            errs.push(format!("line {line_no}: unknown key `{key}`"));
            continue;
        }
        if !seen.insert(key.to_string()) {
            errs.push(format!("line {line_no}: duplicate key `{key}`"));
            continue;
        }
        entries.push((line_no, key.to_string(), value.to_string()));
    }

    let id = match entries.iter().find(|(_, k, _)| k == "model.id") {
        Some((line, _, v)) => match ModelId::parse(v) {
            Some(id) => Some(id),
            None => {
                errs.push(format!(
                    "line {line}: model.id `{v}` is not one of {}",
                    ModelId::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
                ));
                None
            }
        },
        None => {
            errs.push("model.id is required".into());
            None
        }
    };
    let mut cfg = RunConfig::defaults(id.unwrap_or(ModelId::Heat));
    let has_delta = seen.contains("observation.delta");
    if has_delta && seen.contains("observation.cutoff") {
        errs.push("observation.delta and observation.cutoff are mutually exclusive".into());
    }

    for (line, key, value) in &entries {
        let bad = |what: &str| format!("line {line}: {key} expects {what}, got `{value}`");
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let int = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let boolean = || value.parse::<bool>().map_err(|_| bad("true or false"));
        let r: std::result::Result<(), String> = (|| {
            match key.as_str() {
                "model.id" => {}
                "model.n" => cfg.model.n = Some(int()?),
                "model.nu" => cfg.model.nu = float()?,
                "model.resistivity" => cfg.model.resistivity = float()?,
                "model.norm" => {
                    cfg.model.norm =
                        NormConvention::parse(value).ok_or_else(|| bad("homogeneous or inhomogeneous"))?
                }
                "observation.kind" => {
                    cfg.observation.kind = ObservationKind::parse(value).ok_or_else(|| bad("modal or volume"))?
                }
                "observation.delta" => cfg.observation.scale = ObservationScale::Delta(float()?),
                "observation.cutoff" => {
                    if !has_delta {
                        cfg.observation.scale = ObservationScale::Cutoff(int()?)
                    }
                }
                "noise.kind" => {
                    cfg.noise.kind = NoiseKind::parse(value)
                        .ok_or_else(|| bad("additive, state_scaled, pointwise or attractor_vanishing"))?
                }
                "noise.sigma" => cfg.noise.sigma = float()?,
                "noise.p" => cfg.noise.p = float()?,
                "noise.exponent" => cfg.noise.exponent = Some(float()?),
                "noise.rank" => cfg.noise.rank = Some(int()?),
                "nudging.mu" => cfg.nudging.mu = float()?,
                "nudging.implicit" => cfg.nudging.implicit = boolean()?,
                "time.dt" => cfg.time.dt = float()?,
                "time.t_end" => cfg.time.t_end = float()?,
                "time.stride" => cfg.time.stride = int()?,
                "time.guard" => cfg.time.guard = float()?,
                "ensemble.members" => cfg.ensemble.members = int()?,
                "ensemble.seed" => cfg.ensemble.seed = value.parse::<u64>().map_err(|_| bad("a 64-bit unsigned integer"))?,
                "output.dir" => cfg.output.dir = value.clone(),
                "output.emit_y" => cfg.output.emit_y = boolean()?,
                "init.u0_norm" => cfg.init.u0_norm = float()?,
                "init.v0" => cfg.init.v0 = InitialEstimate::parse(value).ok_or_else(|| bad("random, zero or equal"))?,
                "init.v0_norm" => cfg.init.v0_norm = float()?,
                "init.modes" => cfg.init.modes = float()?,
                "init.decay" => cfg.init.decay = float()?,
                _ => unreachable!("key list and match arms disagree on `{key}`"),
            }
            Ok(())
        })();
        if let Err(e) = r {
            errs.push(e);
        }
    }
    if id.is_some() {
        errs.extend(cfg.violations());
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}
