//! CSV tables, run manifests and the plotting script written next to them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::Result;
use crate::harness::{EnsembleResult, SweepCell};
use crate::integrator::ErrorSeries;

/// Seventeen significant digits, so values survive a text round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const SERIES_COLUMNS: [&str; 7] = ["t", "w_H", "w_Vstar", "u_H", "v_H", "hs_norm_sq", "kappa"];
pub const Y_COLUMNS: [&str; 4] = ["y_H", "y_drift_H", "y_noise_H", "y_cross"];

/// One row every `stride` steps.
pub fn series_csv(series: &ErrorSeries, stride: usize) -> String {
    let mut s = SERIES_COLUMNS.join(",");
    if series.y.is_some() {
        s.push(',');
        s.push_str(&Y_COLUMNS.join(","));
    }
    s.push('\n');
    for i in (0..series.len()).step_by(stride.max(1)) {
        let row = [
            series.t[i],
            series.w_h[i],
            series.w_vstar[i],
            series.u_h[i],
            series.v_h[i],
            series.hs_norm_sq[i],
            series.kappa[i],
        ];
        s.push_str(&row.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","));
        if let Some(y) = &series.y {
            for x in [y.y_h[i], y.drift_h[i], y.noise_h[i], y.cross[i]] {
                s.push(',');
                s.push_str(&fmt_f64(x));
            }
        }
        s.push('\n');
    }
    s
}

pub fn ensemble_csv(res: &EnsembleResult, stride: usize) -> String {
    let mut s = String::from("t,mean_w_H2,se_w_H2,mean_w_Vstar2,se_w_Vstar2\n");
    for i in (0..res.times.len()).step_by(stride.max(1)) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(res.times[i]),
            fmt_f64(res.mean_w_h2[i]),
            fmt_f64(res.se_w_h2[i]),
            fmt_f64(res.mean_w_vstar2[i]),
            fmt_f64(res.se_w_vstar2[i])
        );
    }
    s
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from(
        "mu,delta,cutoff,gamma,fit_residual,floor,floor_se,mu_delta2,C_I_hat,eta0_hat,beyond_threshold,blowup_fraction,invalid,note\n",
    );
    for c in cells {
        let note = c.note.as_deref().unwrap_or("").replace('"', "'");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
            fmt_f64(c.mu),
            fmt_f64(c.delta),
            c.cutoff,
            opt(c.gamma),
            opt(c.fit_residual),
            opt(c.floor),
            opt(c.floor_se),
            fmt_f64(c.mu_delta2),
            fmt_f64(c.c_i_hat),
            fmt_f64(c.eta0_hat),
            c.beyond_threshold,
            fmt_f64(c.blowup_fraction),
            c.invalid,
            note
        );
    }
    s
}

/// Measured quantities recorded in a manifest header.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestInfo {
    pub command: String,
    pub alpha_hat: f64,
    pub c_i_hat: f64,
    pub eta0_hat: f64,
    pub wall_clock_s: f64,
}

/// The resolved configuration preceded by `#` metadata lines; it parses as a configuration
/// and reproduces the run.
pub fn manifest(cfg: &RunConfig, info: &ManifestInfo) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# nudgelab {} manifest", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# command = {}", info.command);
    let _ = writeln!(s, "# alpha_hat = {:?}", info.alpha_hat);
    let _ = writeln!(s, "# C_I_hat = {:?}", info.c_i_hat);
    let _ = writeln!(s, "# eta0_hat = {:?}", info.eta0_hat);
    let _ = writeln!(s, "# wall_clock_s = {:.3}", info.wall_clock_s);
    let m = cfg.ensemble.members;
    let _ = writeln!(
        s,
        "# member noise streams: ChaCha8 seed {}, streams 0 to {}, initial data on stream {}",
        cfg.ensemble.seed,
        m.saturating_sub(1),
        crate::noise::INIT_STREAM
    );
    s.push_str(&cfg.to_config_text());
    s
}

pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot the error series written by nudgelab."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent


def read(name):
    with open(out / name) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}


series = read("series.csv")
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].semilogy(series["t"], series["w_H"], label="||w||_H")
ax[0].semilogy(series["t"], series["w_Vstar"], label="||w||_V*")
ax[0].set_xlabel("t")
ax[0].legend()
ax[1].plot(series["t"], series["kappa"], label="kappa_u")
ax[1].plot(series["t"], series["hs_norm_sq"], label="||G(u)||^2_HS")
ax[1].set_xlabel("t")
ax[1].legend()
if (out / "ensemble.csv").exists():
    ens = read("ensemble.csv")
    ax[0].semilogy(ens["t"], [x ** 0.5 for x in ens["mean_w_H2"]], "k--", label="(E||w||_H^2)^1/2")
    ax[0].legend()
fig.tight_layout()
fig.savefig(out / "series.png", dpi=120)
"#;

pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}
