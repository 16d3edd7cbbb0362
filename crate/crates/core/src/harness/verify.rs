use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fit::{fit_envelope, Envelope};
use crate::error::Result;
use crate::integrator::ReferencePath;
use crate::observation::{eta0, ObservationOperator};
use crate::triple::{Field, ModelSpec, Space};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Random fields for the coercivity check.
    pub rayleigh_samples: usize,
    /// Random fields for the cancellation, growth and energy checks.
    pub samples: usize,
    /// Random fields for the interpolation constant.
    pub interp_samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { rayleigh_samples: 1000, samples: 100, interp_samples: 64, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportEntry {
    pub assumption: &'static str,
    pub name: String,
    pub value: f64,
    pub criterion: String,
    pub method: String,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub model: String,
    pub alpha_hat: f64,
    pub c_i_hat: f64,
    pub eta0_hat: f64,
    pub envelope: Envelope,
    pub entries: Vec<ReportEntry>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "assumption report for model {}", self.model);
        for e in &self.entries {
            let _ = writeln!(
                s,
                "[{}] {:<5} {:<28} = {:<24.16e} {}  ({}, n = {})",
                if e.pass { "PASS" } else { "FAIL" },
                e.assumption,
                e.name,
                e.value,
                e.criterion,
                e.method,
                e.samples
            );
        }
        let _ = writeln!(s, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("assumption,name,value,criterion,method,samples,pass\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{:.16e},\"{}\",\"{}\",{},{}",
                e.assumption, e.name, e.value, e.criterion, e.method, e.samples, e.pass
            );
        }
        s
    }
}

fn pairing(spec: &ModelSpec, f: &Field, g: &Field) -> f64 {
    spec.weighted_dot(f.coeffs(), g.coeffs())
}

fn weighted_norm(w: &[f64], f: &Field) -> f64 {
    w.iter().zip(f.coeffs()).map(|(w, x)| (w * x).powi(2)).sum::<f64>().sqrt()
}

fn max_mode(spec: &ModelSpec) -> f64 {
    (0..spec.dof()).filter(|&i| spec.band()[i]).map(|i| spec.mode_index(i)).fold(0.0, f64::max)
}

/// Measures the constants behind the structural assumptions along a reference trajectory.
pub fn verify_assumptions(
    spec: &ModelSpec,
    path: &ReferencePath,
    op: &ObservationOperator,
    opts: VerifyOptions,
) -> Result<AssumptionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut entries = Vec::new();
    let alpha = spec.alpha();
    let top = max_mode(spec);

    // coercivity
    let alpha_hat = spec.measured_alpha();
    let alpha_err = (alpha_hat - alpha).abs() / alpha;
    entries.push(ReportEntry {
        assumption: "A1",
        name: "alpha_hat".into(),
        value: alpha_hat,
        criterion: format!("matches declared alpha = {alpha:.16e} to 1e-9"),
        method: "smallest mode-wise Rayleigh quotient".into(),
        samples: spec.band().iter().filter(|b| **b).count(),
        pass: alpha_err <= 1e-9,
    });
    let mut rayleigh = f64::INFINITY;
    for _ in 0..opts.rayleigh_samples {
        let f = spec.random_field(&mut rng, top, 0.0);
        let v2 = spec.weighted_sq(f.coeffs(), Space::V);
        if v2 > 0.0 {
            let af = spec.apply_a(&f)?;
            rayleigh = rayleigh.min(pairing(spec, &af, &f) / v2);
        }
    }
    entries.push(ReportEntry {
        assumption: "A1",
        name: "rayleigh_min".into(),
        value: rayleigh,
        criterion: "<Af,f>/||f||_V^2 >= alpha (1 - 1e-9)".into(),
        method: "random fields over the retained band".into(),
        samples: opts.rayleigh_samples,
        pass: rayleigh >= alpha * (1.0 - 1e-9),
    });

    // interpolation bound and threshold
    let ci = op.estimate_interp_constant(spec, opts.interp_samples.max(1), opts.seed)?;
    let eta0_hat = eta0(alpha, ci.value).unwrap_or(f64::INFINITY);
    entries.push(ReportEntry {
        assumption: "I",
        name: "C_I_hat".into(),
        value: ci.value,
        criterion: "finite".into(),
        method: "max of random fields, cutoff probes and power iteration".into(),
        samples: ci.samples,
        pass: ci.value.is_finite(),
    });
    entries.push(ReportEntry {
        assumption: "I",
        name: "eta0_hat".into(),
        value: eta0_hat,
        criterion: "2 alpha / C_I^2".into(),
        method: "closed form from alpha_hat and C_I_hat".into(),
        samples: 1,
        pass: eta0_hat > 0.0,
    });

    // cancellation
    let mut cancel = 0.0f64;
    for _ in 0..opts.samples {
        let phi = spec.random_field(&mut rng, top, 0.0);
        let f = spec.apply_f(&phi)?;
        let scale = spec.norm(&f, Space::Vstar)? * spec.norm(&phi, Space::V)?;
        if scale > 0.0 {
            cancel = cancel.max(pairing(spec, &f, &phi).abs() / scale);
        }
    }
    let has_cancel = spec.has_energy_cancellation();
    entries.push(ReportEntry {
        assumption: "A3",
        name: "cancellation_residual".into(),
        value: if has_cancel { cancel } else { 0.0 },
        criterion: if has_cancel { "<= 1e-10".into() } else { "not applicable".into() },
        method: "|<F(phi),phi>| / (||F(phi)||_V* ||phi||_V) over random fields".into(),
        samples: if has_cancel { opts.samples } else { 0 },
        pass: !has_cancel || cancel <= 1e-10,
    });

    // energy budget
    let c1 = spec.energy_h_coefficient();
    let mut eps = 0.0f64;
    for j in 0..opts.samples {
        let scale = [0.1, 1.0, 3.0][j % 3];
        let x = spec.random_field_with_norm(&mut rng, top, 0.0, scale);
        let v2 = spec.weighted_sq(x.coeffs(), Space::V);
        if v2 > 0.0 {
            let lhs = pairing(spec, &spec.apply_f(&x)?, &x) - c1 * spec.weighted_sq(x.coeffs(), Space::H);
            eps = eps.max(lhs.max(0.0) / v2);
        }
    }
    entries.push(ReportEntry {
        assumption: "A3",
        name: "eps_budget".into(),
        value: eps,
        criterion: format!("Σε_j < α/4 = {:.6e} (C1 = {c1})", alpha / 4.0),
        method: "max (<F(x),x> - C1 ||x||_H^2)+ / ||x||_V^2".into(),
        samples: opts.samples,
        pass: eps < alpha / 4.0,
    });

    // growth bound stability under refinement
    match spec.growth_exponents() {
        None => entries.push(ReportEntry {
            assumption: "A2",
            name: "growth_ratio_n_2n".into(),
            value: 1.0,
            criterion: "not applicable (F = 0)".into(),
            method: "none".into(),
            samples: 0,
            pass: true,
        }),
        Some((rho, beta)) => {
            let fine = ModelSpec::new(spec.id(), 2 * spec.n(), *spec.params())?;
            let wb = spec.interpolation_weights(beta);
            let wb_fine = fine.interpolation_weights(beta);
            let quotient = |s: &ModelSpec, w: &[f64], u: &Field, v: &Field| -> Result<f64> {
                let df = &s.apply_f(u)? - &s.apply_f(v)?;
                let num = s.norm(&df, Space::Vstar)?;
                let den = (1.0 + weighted_norm(w, u).powf(rho) + weighted_norm(w, v).powf(rho))
                    * weighted_norm(w, &(u - v));
                Ok(if den > 0.0 { num / den } else { 0.0 })
            };
            let (mut coarse, mut refined) = (0.0f64, 0.0f64);
            for j in 0..opts.samples {
                let scale = [0.1, 1.0, 3.0][j % 3];
                let u = spec.random_field_with_norm(&mut rng, top, 0.5, scale);
                let v = if j % 2 == 0 {
                    spec.random_field_with_norm(&mut rng, top, 0.5, scale)
                } else {
                    &u + &spec.random_field_with_norm(&mut rng, top, 0.5, 1e-3 * scale)
                };
                coarse = coarse.max(quotient(spec, &wb, &u, &v)?);
                let (uf, vf) = (spec.embed(&u, &fine)?, spec.embed(&v, &fine)?);
                refined = refined.max(quotient(&fine, &wb_fine, &uf, &vf)?);
            }
            let ratio = if refined > 0.0 { coarse / refined } else { 1.0 };
            entries.push(ReportEntry {
                assumption: "A2",
                name: "growth_ratio_n_2n".into(),
                value: ratio,
                criterion: format!("within [1/1.5, 1.5] (rho = {rho}, beta = {beta})"),
                method: format!("sup quotient at n = {} over sup at n = {}", spec.n(), fine.n()),
                samples: opts.samples,
                pass: (1.0 / 1.5..=1.5).contains(&ratio),
            });
        }
    }

    // one-sided increment condition along the trajectory
    let envelope = fit_envelope(&path.t, &path.kappa)?;
    entries.push(ReportEntry {
        assumption: "A4",
        name: "envelope_M0".into(),
        value: envelope.m0,
        criterion: "finite".into(),
        method: envelope.method.into(),
        samples: envelope.pairs,
        pass: envelope.m0.is_finite(),
    });
    entries.push(ReportEntry {
        assumption: "A4",
        name: "envelope_M1".into(),
        value: envelope.m1,
        criterion: "finite".into(),
        method: envelope.method.into(),
        samples: envelope.pairs,
        pass: envelope.m1.is_finite(),
    });
    let eps1 = alpha / 8.0;
    let picks = 8.min(path.states.len());
    let mut local = 0.0f64;
    let mut count = 0;
    let last = path.states.len().saturating_sub(1);
    for p in 0..picks {
        let idx = if picks > 1 { p * last / (picks - 1) } else { 0 };
        let u = &path.states[idx];
        let kappa = path.kappa[idx];
        let fu = spec.apply_f(u)?;
        for _ in 0..8 {
            let xi = spec.random_field_with_norm(&mut rng, top, 0.5, 0.1);
            let lhs = pairing(spec, &(&fu - &spec.apply_f(&(u - &xi))?), &xi)
                - eps1 * spec.weighted_sq(xi.coeffs(), Space::V);
            let h2 = spec.weighted_sq(xi.coeffs(), Space::H);
            let c = if lhs <= 0.0 {
                0.0
            } else if kappa > 0.0 {
                lhs / (kappa * h2)
            } else {
                f64::INFINITY
            };
            local = local.max(c);
            count += 1;
        }
    }
    entries.push(ReportEntry {
        assumption: "A4",
        name: "local_constant".into(),
        value: local,
        criterion: format!("finite with eps1 = alpha/8 = {eps1:.6e}"),
        method: "max (<F(u)-F(u-xi),xi> - eps1 ||xi||_V^2)+ / (kappa_u ||xi||_H^2)".into(),
        samples: count,
        pass: local.is_finite(),
    });

    Ok(AssumptionReport {
        model: spec.id().name().into(),
        alpha_hat,
        c_i_hat: ci.value,
        eta0_hat,
        envelope,
        entries,
    })
}
