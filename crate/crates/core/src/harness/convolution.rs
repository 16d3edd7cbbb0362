use std::fmt::Write as _;

use super::ensemble::Execution;
use super::Experiment;
use crate::error::{invalid, Result};
use crate::integrator::{stochastic_convolution, CounterNoise, ReferencePath};
use crate::noise::NoiseKind;
use crate::triple::Space;

/// Number of leading noise directions compared against the closed-form variance.
const PROBE_MODES: usize = 3;

/// Empirical against closed-form variance of one coordinate of `Z` at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProbe {
    pub direction: usize,
    pub mode: f64,
    pub a: f64,
    pub t: f64,
    pub empirical: f64,
    pub se: f64,
    /// `mu^2 lambda^2 sigma_delta^2 (1 - exp(-2 a t)) / (2 a)`.
    pub exact: f64,
    /// Variance of the implicit-Euler recursion on the same grid.
    pub discrete: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionReport {
    pub members: usize,
    pub probes: Vec<VarianceProbe>,
    /// `E sup_{t <= T/2} ||Z||_H^2 / (mu^2 int_0^{T/2} ||G(u)||^2_{L_2^0} dt)`.
    pub c_half: f64,
    /// The same ratio on `[0, T]`.
    pub c_full: f64,
}

impl ConvolutionReport {
    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|p| p.pass) && self.c_half.is_finite() && self.c_full.is_finite()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "stochastic convolution check, {} paths", self.members);
        for p in &self.probes {
            let _ = writeln!(
                s,
                "[{}] direction {} (|k| = {}, a = {:.6e}) t = {:.6e}: var = {:.6e} +- {:.3e}, closed form {:.6e}, discrete {:.6e}",
                if p.pass { "PASS" } else { "FAIL" },
                p.direction,
                p.mode,
                p.a,
                p.t,
                p.empirical,
                p.se,
                p.exact,
                p.discrete
            );
        }
        if self.probes.is_empty() {
            let _ = writeln!(s, "no closed-form variance for this noise kind; only the sup-norm constant is reported");
        }
        let _ = writeln!(s, "sup-norm constant c_hat on [0, T/2] = {:.6e}", self.c_half);
        let _ = writeln!(s, "sup-norm constant c_hat on [0, T]   = {:.6e}", self.c_full);
        let _ = writeln!(s, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        s
    }
}

struct PathStats {
    coords: Vec<f64>,
    sup_half: f64,
    sup_full: f64,
}

/// Simulates `members` stochastic convolutions along the experiment's reference path. With
/// additive noise the per-direction variance at `T/4`, `T/2` and `T` is compared against the
/// closed form within three standard errors.
pub fn convolution_check(
    exp: &Experiment,
    members: usize,
    seed: u64,
    execution: Execution,
) -> Result<ConvolutionReport> {
    if members < 2 {
        return Err(invalid("the convolution check needs at least two paths"));
    }
    let stepper = exp.stepper()?;
    let steps = exp.step.steps();
    if steps < 4 {
        return Err(invalid("the convolution check needs at least four time steps"));
    }
    let spec = &exp.spec;
    let dt = exp.step.dt;
    let reference = ReferencePath::compute(&stepper, &exp.u0)?;
    let probe_steps = [steps / 4, steps / 2, steps];
    let half = steps / 2;
    let diagonal = exp.noise.kind() == NoiseKind::Additive;
    let dirs: Vec<usize> = if diagonal { (0..exp.q.directions().len().min(PROBE_MODES)).collect() } else { vec![] };

    let run = |m: usize| -> Result<PathStats> {
        let source = CounterNoise { master: seed, member: m as u64 };
        let path = stochastic_convolution(&stepper, &reference, &source, 1)?;
        let mut coords = Vec::with_capacity(dirs.len() * probe_steps.len());
        for &d in &dirs {
            for &n in &probe_steps {
                coords.push(exp.q.coordinate(spec, &path[n].1, d));
            }
        }
        let norms: Vec<f64> = path.iter().map(|(_, z)| spec.weighted_sq(z.coeffs(), Space::H)).collect();
        let sup_half = norms[..=half].iter().copied().fold(0.0, f64::max);
        let sup_full = norms.iter().copied().fold(0.0, f64::max);
        Ok(PathStats { coords, sup_half, sup_full })
    };
    let stats: Vec<Result<PathStats>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..members).into_par_iter().map(run).collect()
        }
        _ => (0..members).map(run).collect(),
    };
    let stats = stats.into_iter().collect::<Result<Vec<_>>>()?;
    let m = members as f64;

    let mu = exp.step.mu;
    let sd = exp.noise.sigma_delta();
    let mut probes = Vec::new();
    for (i, &d) in dirs.iter().enumerate() {
        let e = exp.q.direction_field(spec, d);
        let a = spec.weighted_dot(spec.apply_a(&e)?.coeffs(), e.coeffs());
        let lam = exp.q.lambda()[d];
        let scale = mu * mu * lam * lam * sd * sd;
        for (j, &n) in probe_steps.iter().enumerate() {
            let t = exp.step.time(n);
            let sq: Vec<f64> = stats.iter().map(|s| s.coords[i * probe_steps.len() + j].powi(2)).collect();
            let empirical = sq.iter().sum::<f64>() / m;
            let var = sq.iter().map(|x| (x - empirical).powi(2)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            let exact = scale * (-(-2.0 * a * t).exp_m1()) / (2.0 * a);
            let r = 1.0 / (1.0 + dt * a).powi(2);
            let discrete = scale * dt * r * (1.0 - r.powi(n as i32)) / (1.0 - r);
            let pass = (empirical - exact).abs() <= 3.0 * se;
            probes.push(VarianceProbe { direction: d, mode: exp.q.directions()[d].mode, a, t, empirical, se, exact, discrete, pass });
        }
    }

    let integral = |upto: usize| -> f64 {
        (0..upto).map(|n| 0.5 * (reference.hs_norm_sq[n] + reference.hs_norm_sq[n + 1]) * dt).sum::<f64>()
    };
    let ratio = |sup: f64, upto: usize| -> f64 {
        let denom = mu * mu * integral(upto);
        if denom > 0.0 {
            sup / denom
        } else {
            0.0
        }
    };
    let c_half = ratio(stats.iter().map(|s| s.sup_half).sum::<f64>() / m, half);
    let c_full = ratio(stats.iter().map(|s| s.sup_full).sum::<f64>() / m, steps);
    Ok(ConvolutionReport { members, probes, c_half, c_full })
}
