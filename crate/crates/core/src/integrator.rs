//! IMEX Euler-Maruyama time stepping for the reference, nudged and convolution equations.
//!
//! Every step solves the linear part implicitly (it is diagonal in the spectral basis) and the
//! nonlinearity explicitly:
//!
//! ```text
//! u+ = (u + dt F(u)) / (1 + dt a)
//! v+ = (v + dt F(v) - dt mu I v + mu dy) / (1 + dt a),   dy = I u dt + G(u) dW
//! Z+ = (Z + mu G(u) dW) / (1 + dt a)
//! ```
//!
//! With `implicit_nudging` and a modal `I` the `mu I v` term moves into the denominator. The
//! noise coefficient is evaluated at the left endpoint `u(t_n)`.

use crate::error::{invalid, Error, Result};
use crate::noise::{stream_rng, NoiseModel, QSpec};
use crate::observation::ObservationOperator;
use crate::triple::{Field, ModelSpec, Space};

/// Time grid, nudging gain and blow-up guard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    pub mu: f64,
    pub implicit_nudging: bool,
    /// Threshold on the running `sum dt ||x||_V^2` of either trajectory.
    pub guard: f64,
}

impl StepConfig {
    pub fn new(dt: f64, t_end: f64, mu: f64) -> Result<Self> {
        let cfg = Self { dt, t_end, mu, implicit_nudging: false, guard: 1e12 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            errs.push(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            errs.push(format!("t_end must be >= dt, got {}", self.t_end));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            errs.push(format!("mu must be >= 0, got {}", self.mu));
        }
        if !(self.guard > 0.0) {
            errs.push(format!("guard must be > 0, got {}", self.guard));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(invalid(errs.join("; ")))
        }
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Supplies `Delta W` for a given step.
pub trait NoiseSource: Sync {
    fn increment(&self, spec: &ModelSpec, q: &QSpec, step: usize, dt: f64) -> Field;
}

/// Counter-based increments of one ensemble member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterNoise {
    pub master: u64,
    pub member: u64,
}

impl NoiseSource for CounterNoise {
    fn increment(&self, spec: &ModelSpec, q: &QSpec, step: usize, dt: f64) -> Field {
        let mut rng = stream_rng(self.master, self.member, step as u64);
        q.sample_unchecked(spec, &mut rng, dt)
    }
}

/// Sums `factor` consecutive fine-grid increments of a [`CounterNoise`] stream, so runs at
/// `dt` and `dt / factor` see the same Brownian path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefinedNoise {
    pub fine: CounterNoise,
    pub factor: usize,
}

impl NoiseSource for RefinedNoise {
    fn increment(&self, spec: &ModelSpec, q: &QSpec, step: usize, dt: f64) -> Field {
        let fine_dt = dt / self.factor as f64;
        let mut sum = spec.zeros();
        for j in 0..self.factor {
            let inc = self.fine.increment(spec, q, step * self.factor + j, fine_dt);
            sum.add_scaled_in_place(1.0, &inc);
        }
        sum
    }
}

/// Observation increment `dy = I u dt + G(u) dW` split into its terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationTerms {
    pub drift: Field,
    pub noise: Field,
}

impl ObservationTerms {
    pub fn total(&self) -> Field {
        &self.drift + &self.noise
    }
}

/// Running `sum dt ||x||_V^2` monitor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Guard {
    threshold: f64,
    accum: f64,
}

impl Guard {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, accum: 0.0 }
    }

    pub fn accumulated(&self) -> f64 {
        self.accum
    }

    /// Adds `dt ||x||_V^2` and fails on non-finite states or an exceeded threshold.
    pub fn observe(&mut self, spec: &ModelSpec, x: &Field, dt: f64, step: usize, label: &str) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::BlowUp {
                step,
                t: step as f64 * dt,
                detail: format!("{label} has non-finite coefficients"),
            });
        }
        self.accum += dt * spec.weighted_sq(x.coeffs(), Space::V);
        if !(self.accum <= self.threshold) {
            return Err(Error::BlowUp {
                step,
                t: step as f64 * dt,
                detail: format!(
                    "{label}: accumulated L2(0,t;V) energy {:.3e} exceeds guard {:.3e}",
                    self.accum, self.threshold
                ),
            });
        }
        Ok(())
    }
}

/// One configured scheme: model, observation, noise and time grid.
#[derive(Clone, Debug)]
pub struct Stepper<'a> {
    pub spec: &'a ModelSpec,
    pub op: &'a ObservationOperator,
    pub noise: &'a NoiseModel,
    pub q: &'a QSpec,
    pub cfg: StepConfig,
    denom: Vec<f64>,
    denom_nudged: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        op: &'a ObservationOperator,
        noise: &'a NoiseModel,
        q: &'a QSpec,
        cfg: StepConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let denom: Vec<f64> = spec.a_symbol().iter().map(|a| 1.0 + cfg.dt * a).collect();
        let denom_nudged = if cfg.implicit_nudging {
            let mask = op
                .modal_mask()
                .ok_or_else(|| invalid("implicit nudging needs a modal observation operator"))?;
            denom.iter().zip(mask).map(|(d, &m)| if m { d + cfg.dt * cfg.mu } else { *d }).collect()
        } else {
            denom.clone()
        };
        Ok(Self { spec, op, noise, q, cfg, denom, denom_nudged })
    }

    fn solve(&self, rhs: Field, denom: &[f64]) -> Field {
        let coeffs = rhs.into_coeffs().into_iter().zip(denom).map(|(r, d)| r / d).collect();
        Field::from_parts(self.spec.id(), coeffs)
    }

    /// `u+ = (I + dt A)^{-1} (u + dt F(u))`.
    pub fn reference_step(&self, u: &Field) -> Field {
        let mut rhs = u.clone();
        rhs.add_scaled_in_place(self.cfg.dt, &self.spec.apply_f_unchecked(u));
        self.solve(rhs, &self.denom)
    }

    /// `dy = I u dt + G(u) dW` over one step.
    pub fn observation(&self, u: &Field, dw: &Field) -> ObservationTerms {
        ObservationTerms {
            drift: self.op.apply_unchecked(self.spec, u).scaled(self.cfg.dt),
            noise: self.noise.apply_unchecked(self.spec, u, dw),
        }
    }

    /// Nudged step driven by the observation increment `dy`.
    pub fn assimilated_step(&self, v: &Field, dy: &Field) -> Field {
        let dt = self.cfg.dt;
        let mu = self.cfg.mu;
        let mut rhs = v.clone();
        rhs.add_scaled_in_place(dt, &self.spec.apply_f_unchecked(v));
        if mu != 0.0 {
            if !self.cfg.implicit_nudging {
                rhs.add_scaled_in_place(-dt * mu, &self.op.apply_unchecked(self.spec, v));
            }
            rhs.add_scaled_in_place(mu, dy);
        }
        self.solve(rhs, &self.denom_nudged)
    }

    /// `Z+ = (I + dt A)^{-1} (Z + mu G(u) dW)`.
    pub fn convolution_step(&self, z: &Field, u: &Field, dw: &Field) -> Field {
        let mut rhs = z.clone();
        rhs.add_scaled_in_place(self.cfg.mu, &self.noise.apply_unchecked(self.spec, u, dw));
        self.solve(rhs, &self.denom)
    }

    /// Checked single reference step.
    pub fn step_reference(&self, u: &Field) -> Result<Field> {
        self.spec.check(u)?;
        let next = self.reference_step(u);
        if !next.is_finite() {
            return Err(Error::BlowUp { step: 1, t: self.cfg.dt, detail: "reference state non-finite".into() });
        }
        Ok(next)
    }

    /// Checked single nudged step: returns `(u+, v+)`.
    pub fn step_assimilated(&self, state: &PairState, dw: &Field) -> Result<PairState> {
        self.spec.check(&state.u)?;
        self.spec.check(&state.v)?;
        self.spec.check(dw)?;
        let dy = self.observation(&state.u, dw).total();
        let v = self.assimilated_step(&state.v, &dy);
        let u = self.reference_step(&state.u);
        let step = state.step + 1;
        for (x, label) in [(&u, "reference"), (&v, "estimate")] {
            if !x.is_finite() {
                return Err(Error::BlowUp { step, t: self.cfg.time(step), detail: format!("{label} non-finite") });
            }
        }
        Ok(PairState { step, t: self.cfg.time(step), u, v })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    pub step: usize,
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

/// Precomputed reference trajectory with per-step diagnostics, shared by ensemble members.
#[derive(Clone, Debug)]
pub struct ReferencePath {
    pub t: Vec<f64>,
    pub states: Vec<Field>,
    pub u_h: Vec<f64>,
    pub kappa: Vec<f64>,
    pub hs_norm_sq: Vec<f64>,
}

impl ReferencePath {
    /// Bytes needed to store the path for `steps` steps.
    pub fn memory_estimate(spec: &ModelSpec, steps: usize) -> usize {
        (steps + 1) * (spec.dof() + 3) * std::mem::size_of::<f64>()
    }

    pub fn compute(stepper: &Stepper<'_>, u0: &Field) -> Result<Self> {
        stepper.spec.check(u0)?;
        let steps = stepper.cfg.steps();
        let mut guard = Guard::new(stepper.cfg.guard);
        let mut path = Self {
            t: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            u_h: Vec::with_capacity(steps + 1),
            kappa: Vec::with_capacity(steps + 1),
            hs_norm_sq: Vec::with_capacity(steps + 1),
        };
        let mut u = u0.clone();
        for n in 0..=steps {
            guard.observe(stepper.spec, &u, stepper.cfg.dt, n, "reference")?;
            path.t.push(stepper.cfg.time(n));
            path.u_h.push(stepper.spec.h_norm(&u));
            path.kappa.push(stepper.spec.kappa_unchecked(&u));
            path.hs_norm_sq.push(stepper.noise.hs_unchecked(stepper.spec, &u, stepper.q));
            let next = if n < steps { Some(stepper.reference_step(&u)) } else { None };
            path.states.push(u);
            match next {
                Some(x) => u = x,
                None => break,
            }
        }
        Ok(path)
    }
}

/// Per-step observation increment diagnostics (`y = drift + noise`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationSeries {
    pub y_h: Vec<f64>,
    pub drift_h: Vec<f64>,
    pub noise_h: Vec<f64>,
    /// `(drift, noise)_H`.
    pub cross: Vec<f64>,
}

/// Per-step error statistics of one path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSeries {
    pub t: Vec<f64>,
    pub w_h: Vec<f64>,
    pub w_vstar: Vec<f64>,
    pub u_h: Vec<f64>,
    pub v_h: Vec<f64>,
    pub hs_norm_sq: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Increment over the step ending at each sample (zero at `t = 0`).
    pub y: Option<ObservationSeries>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct PairRun {
    pub series: ErrorSeries,
    pub final_state: PairState,
}

/// Integrates the reference/nudged pair from `(u0, v0)` over the configured horizon.
/// When `reference` is given its states replace the on-the-fly reference integration.
pub fn simulate_pair(
    stepper: &Stepper<'_>,
    u0: &Field,
    v0: &Field,
    source: &dyn NoiseSource,
    reference: Option<&ReferencePath>,
    emit_y: bool,
) -> Result<PairRun> {
    let spec = stepper.spec;
    spec.check(u0)?;
    spec.check(v0)?;
    let steps = stepper.cfg.steps();
    let dt = stepper.cfg.dt;
    if let Some(r) = reference {
        if r.states.len() != steps + 1 || r.states[0] != *u0 {
            return Err(invalid("shared reference path does not match this run"));
        }
    }
    let mut series = ErrorSeries {
        y: emit_y.then(ObservationSeries::default),
        ..Default::default()
    };
    let mut guard_u = Guard::new(stepper.cfg.guard);
    let mut guard_v = Guard::new(stepper.cfg.guard);
    let mut u = u0.clone();
    let mut v = v0.clone();
    let mut last_terms: Option<ObservationTerms> = None;
    for n in 0..=steps {
        if reference.is_none() {
            guard_u.observe(spec, &u, dt, n, "reference")?;
        }
        guard_v.observe(spec, &v, dt, n, "estimate")?;
        let w = &u - &v;
        series.t.push(stepper.cfg.time(n));
        series.w_h.push(spec.weighted_sq(w.coeffs(), Space::H).sqrt());
        series.w_vstar.push(spec.weighted_sq(w.coeffs(), Space::Vstar).sqrt());
        series.v_h.push(spec.h_norm(&v));
        match reference {
            Some(r) => {
                series.u_h.push(r.u_h[n]);
                series.hs_norm_sq.push(r.hs_norm_sq[n]);
                series.kappa.push(r.kappa[n]);
            }
            None => {
                series.u_h.push(spec.h_norm(&u));
                series.hs_norm_sq.push(stepper.noise.hs_unchecked(spec, &u, stepper.q));
                series.kappa.push(spec.kappa_unchecked(&u));
            }
        }
        if let Some(y) = series.y.as_mut() {
            match &last_terms {
                Some(terms) => {
                    y.y_h.push(spec.h_norm(&terms.total()));
                    y.drift_h.push(spec.h_norm(&terms.drift));
                    y.noise_h.push(spec.h_norm(&terms.noise));
                    y.cross.push(spec.weighted_dot(terms.drift.coeffs(), terms.noise.coeffs()));
                }
                None => {
                    y.y_h.push(0.0);
                    y.drift_h.push(0.0);
                    y.noise_h.push(0.0);
                    y.cross.push(0.0);
                }
            }
        }
        if n == steps {
            break;
        }
        let dw = if stepper.noise.is_zero() {
            spec.zeros()
        } else {
            source.increment(spec, stepper.q, n, dt)
        };
        let terms = stepper.observation(&u, &dw);
        v = stepper.assimilated_step(&v, &terms.total());
        u = match reference {
            Some(r) => r.states[n + 1].clone(),
            None => stepper.reference_step(&u),
        };
        if emit_y {
            last_terms = Some(terms);
        }
    }
    Ok(PairRun { series, final_state: PairState { step: steps, t: stepper.cfg.time(steps), u, v } })
}

/// Stochastic convolution `Z(t) = mu int_0^t e^{-(t-s)A} G(u(s)) dW_s`, driven by the same
/// increments as a [`simulate_pair`] run with the same `source`. Returns `(t, Z)` at every
/// `record_every`-th step (and at `t = 0`).
pub fn stochastic_convolution(
    stepper: &Stepper<'_>,
    reference: &ReferencePath,
    source: &dyn NoiseSource,
    record_every: usize,
) -> Result<Vec<(f64, Field)>> {
    let steps = stepper.cfg.steps();
    if reference.states.len() != steps + 1 {
        return Err(invalid("reference path length does not match the time grid"));
    }
    let every = record_every.max(1);
    let spec = stepper.spec;
    let mut z = spec.zeros();
    let mut out = vec![(0.0, z.clone())];
    for n in 0..steps {
        if !stepper.noise.is_zero() {
            let dw = source.increment(spec, stepper.q, n, stepper.cfg.dt);
            z = stepper.convolution_step(&z, &reference.states[n], &dw);
        }
        if (n + 1) % every == 0 {
            out.push((stepper.cfg.time(n + 1), z.clone()));
        }
    }
    Ok(out)
}
