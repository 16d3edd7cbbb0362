use std::collections::BTreeMap;

use log::info;

use super::ensemble::{run_ensemble, Execution};
use super::fit::{default_fit_window, estimate_noise_floor, fit_decay_rate};
use super::Experiment;
use crate::config::{ObservationScale, RunConfig};
use crate::error::{Error, Result};
use crate::observation::eta0;

/// Cells with more than this fraction of blown-up members are marked invalid.
const MAX_BLOWUP_FRACTION: f64 = 0.1;
const INTERP_SAMPLES: usize = 32;

/// Grid of nudging gains and observation scales.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub mus: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl SweepGrid {
    /// Parses `mu=0,10,50;delta=0.25,0.125`; every problem is reported.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut errs = Vec::new();
        let mut mus = None;
        let mut deltas = None;
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let Some((key, list)) = part.split_once('=') else {
                errs.push(format!("grid entry `{part}` is not `name=v1,v2,...`"));
                continue;
            };
            let mut values = Vec::new();
            for v in list.split(',').map(str::trim) {
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => values.push(x),
                    _ => errs.push(format!("grid value `{v}` for `{}` is not a number", key.trim())),
                }
            }
            let slot = match key.trim() {
                "mu" => &mut mus,
                "delta" => &mut deltas,
                other => {
                    errs.push(format!("unknown grid axis `{other}` (expected mu or delta)"));
                    continue;
                }
            };
            if slot.is_some() {
                errs.push(format!("grid axis `{}` given twice", key.trim()));
            }
            *slot = Some(values);
        }
        let mus = mus.unwrap_or_else(|| {
            errs.push("grid needs a mu axis".into());
            Vec::new()
        });
        let deltas = deltas.unwrap_or_else(|| {
            errs.push("grid needs a delta axis".into());
            Vec::new()
        });
        if mus.iter().any(|m| *m < 0.0) {
            errs.push("grid mu values must be >= 0".into());
        }
        if deltas.iter().any(|d| *d <= 0.0) {
            errs.push("grid delta values must be > 0".into());
        }
        if errs.is_empty() {
            Ok(Self { mus, deltas })
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub mu: f64,
    pub delta: f64,
    pub cutoff: usize,
    pub gamma: Option<f64>,
    pub fit_residual: Option<f64>,
    pub floor: Option<f64>,
    pub floor_se: Option<f64>,
    pub mu_delta2: f64,
    pub c_i_hat: f64,
    /// `2 alpha / C_I^2`; infinite when no resolved mode is left unobserved.
    pub eta0_hat: f64,
    pub beyond_threshold: bool,
    pub blowup_fraction: f64,
    pub invalid: bool,
    pub note: Option<String>,
}

/// Runs one ensemble per `(mu, delta)` cell. Per-cell failures are recorded and the sweep
/// continues. The floor is averaged over the second half of the horizon.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, execution: Execution) -> Result<Vec<SweepCell>> {
    let mut c_i_cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut cells = Vec::with_capacity(grid.mus.len() * grid.deltas.len());
    for &delta in &grid.deltas {
        for &mu in &grid.mus {
            let mut cfg = base.clone();
            cfg.nudging.mu = mu;
            cfg.observation.scale = ObservationScale::Delta(delta);
            let exp = match Experiment::from_config(&cfg) {
                Ok(e) => e,
                Err(e) => {
                    cells.push(failed_cell(mu, delta, e));
                    continue;
                }
            };
            let c_i = match c_i_cache.get(&delta.to_bits()) {
                Some(&c) => c,
                None => {
                    let c = exp.op.estimate_interp_constant(&exp.spec, INTERP_SAMPLES, cfg.ensemble.seed)?.value;
                    c_i_cache.insert(delta.to_bits(), c);
                    c
                }
            };
            let eta0_hat = eta0(exp.spec.alpha(), c_i).unwrap_or(f64::INFINITY);
            let mu_delta2 = mu * delta * delta;
            let mut cell = SweepCell {
                mu,
                delta,
                cutoff: exp.op.cutoff(),
                gamma: None,
                fit_residual: None,
                floor: None,
                floor_se: None,
                mu_delta2,
                c_i_hat: c_i,
                eta0_hat,
                beyond_threshold: mu_delta2 > eta0_hat,
                blowup_fraction: 0.0,
                invalid: false,
                note: None,
            };
            info!("sweep cell mu = {mu}, delta = {delta}");
            match run_ensemble(&exp, cfg.ensemble.members, cfg.ensemble.seed, execution) {
                Ok(res) => {
                    cell.blowup_fraction = res.blowup_fraction();
                    cell.invalid = cell.blowup_fraction > MAX_BLOWUP_FRACTION;
                    let t_half = 0.5 * exp.step.t_end;
                    let floor = estimate_noise_floor(&res.times, &res.member_w_h2(), t_half);
                    let floor_value = match &floor {
                        Ok(f) => {
                            cell.floor = Some(f.value);
                            cell.floor_se = Some(f.se);
                            f.value
                        }
                        Err(e) => {
                            cell.note = Some(e.to_string());
                            0.0
                        }
                    };
                    let window = default_fit_window(&res.times, &res.mean_w_h2, floor_value);
                    match fit_decay_rate(&res.times, &res.mean_w_h2, window) {
                        Ok(fit) => {
                            cell.gamma = Some(fit.gamma);
                            cell.fit_residual = Some(fit.residual);
                        }
                        Err(e) => cell.note = Some(e.to_string()),
                    }
                }
                Err(Error::BlowUp { detail, .. }) => {
                    cell.blowup_fraction = 1.0;
                    cell.invalid = true;
                    cell.note = Some(detail);
                }
                Err(e) => return Err(e),
            }
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn failed_cell(mu: f64, delta: f64, e: Error) -> SweepCell {
    SweepCell {
        mu,
        delta,
        cutoff: 0,
        gamma: None,
        fit_residual: None,
        floor: None,
        floor_se: None,
        mu_delta2: mu * delta * delta,
        c_i_hat: f64::NAN,
        eta0_hat: f64::NAN,
        beyond_threshold: false,
        blowup_fraction: 0.0,
        invalid: true,
        note: Some(e.to_string().replace('\n', " ")),
    }
}
