use crate::error::{invalid, Error, Result};

/// Least-squares fit `log y = intercept - gamma t` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub gamma: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    pub samples: usize,
    /// Smallest `C` with `y(t) <= C exp(-gamma (t - t0)) y(t0)` on the window.
    pub bound_constant: f64,
}

/// `[0.1 T_sync, 0.9 T_sync]`, where `T_sync` is the first time the series drops below
/// `max(10 floor, 1e-12)` (the last time if it never does).
pub fn default_fit_window(times: &[f64], values: &[f64], floor: f64) -> (f64, f64) {
    let level = (10.0 * floor).max(1e-12);
    let t_sync = times
        .iter()
        .zip(values)
        .find(|(_, &v)| v < level)
        .map(|(&t, _)| t)
        .unwrap_or_else(|| times.last().copied().unwrap_or(0.0));
    (0.1 * t_sync, 0.9 * t_sync)
}

pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(invalid("times and values differ in length"));
    }
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::Fit(format!("empty fit window [{t0}, {t1}]")));
    }
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(&t, _)| t >= t0 && t <= t1).map(|(&t, &v)| (t, v)).collect();
    if pts.len() < 2 {
        return Err(Error::Fit(format!("fewer than two samples in [{t0}, {t1}]")));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!(
            "value {v} at t = {t} is not positive; the noise floor or exact synchrony was reached, shrink the window"
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1.ln() - ml)).sum();
    let slope = sxy / sxx;
    let intercept = ml - slope * mt;
    let residual = (pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    let (ts, ys) = pts[0];
    let bound_constant = pts
        .iter()
        .map(|&(t, y)| y / (ys * (slope * (t - ts)).exp()))
        .fold(0.0, f64::max);
    Ok(RateFit { gamma: -slope, intercept, window, residual, samples: pts.len(), bound_constant })
}

/// Tail time-average of the ensemble mean with a standard error across members.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseFloor {
    pub value: f64,
    pub se: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Averages each member's series (e.g. `||w||_H^2`) over `t >= t0`; the floor is the mean of
/// the member averages and its standard error is taken across members.
pub fn estimate_noise_floor(times: &[f64], members: &[Vec<f64>], t0: f64) -> Result<NoiseFloor> {
    if members.is_empty() {
        return Err(invalid("noise floor needs at least one member series"));
    }
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t0).collect();
    if idx.len() < 10 {
        return Err(invalid(format!("noise floor window t >= {t0} holds {} samples, need >= 10", idx.len())));
    }
    let averages: Vec<f64> =
        members.iter().map(|s| idx.iter().map(|&i| s[i]).sum::<f64>() / idx.len() as f64).collect();
    let m = averages.len() as f64;
    let value = averages.iter().sum::<f64>() / m;
    let se = if averages.len() > 1 {
        (averages.iter().map(|a| (a - value).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    let window = (times[idx[0]], times[*idx.last().unwrap()]);
    Ok(NoiseFloor { value, se, samples: idx.len(), window })
}

/// `sup_{t >= n} ||w_t||_H` over the sampled times.
pub fn tail_sup(times: &[f64], w_h: &[f64], n: f64) -> Result<f64> {
    let mut found = false;
    let mut best = 0.0f64;
    for (&t, &w) in times.iter().zip(w_h) {
        if t >= n {
            found = true;
            best = best.max(w);
        }
    }
    if found {
        Ok(best)
    } else {
        Err(invalid(format!("tail_sup needs N below the horizon, got N = {n}")))
    }
}

/// Affine envelope `int_s^t kappa <= M0 (t - s) + M1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub m0: f64,
    pub m1: f64,
    pub horizon: f64,
    /// Number of `(s, t)` pairs the envelope was checked on.
    pub pairs: usize,
    pub method: &'static str,
}

const ENVELOPE_GRID: usize = 256;

/// `M0` is the largest long-window growth rate `(K(T) - K(s)) / (T - s)` over `s >= T/2`, where
/// `K` is the trapezoidal running integral of `kappa`; `M1` is then the smallest offset making
/// the envelope hold on every pair of a coarse time grid.
pub fn fit_envelope(times: &[f64], kappa: &[f64]) -> Result<Envelope> {
    if times.len() != kappa.len() || times.len() < 3 {
        return Err(invalid("envelope fit needs at least three (t, kappa) samples"));
    }
    let mut cum = vec![0.0; times.len()];
    for i in 1..times.len() {
        cum[i] = cum[i - 1] + 0.5 * (kappa[i] + kappa[i - 1]) * (times[i] - times[i - 1]);
    }
    let t_end = *times.last().unwrap();
    let t_start = times[0];
    let half = t_start + 0.5 * (t_end - t_start);
    let k_end = *cum.last().unwrap();
    let m0 = times
        .iter()
        .zip(&cum)
        .filter(|(&t, _)| t >= half && t < t_end)
        .map(|(&t, &k)| (k_end - k) / (t_end - t))
        .fold(0.0, f64::max);
    let stride = (times.len() / ENVELOPE_GRID).max(1);
    let mut grid: Vec<usize> = (0..times.len()).step_by(stride).collect();
    if *grid.last().unwrap() != times.len() - 1 {
        grid.push(times.len() - 1);
    }
    let mut m1 = 0.0f64;
    let mut pairs = 0;
    for (a, &i) in grid.iter().enumerate() {
        for &j in &grid[a + 1..] {
            m1 = m1.max(cum[j] - cum[i] - m0 * (times[j] - times[i]));
            pairs += 1;
        }
    }
    Ok(Envelope { m0, m1, horizon: t_end - t_start, pairs, method: "tail-window growth rate + max pair offset" })
}
