//! Q-Wiener increments, noise coefficients `G_delta(u)` and Hilbert-Schmidt norms.
//!
//! `Q` is diagonal in the solver basis. Its eigendirections are unit `H`-norm fields: one per
//! sine mode on the interval; on the torus a `sqrt(2) cos(k.x)` and `sqrt(2) sin(k.x)` pair for
//! every `k` in the upper half plane, times `k^perp / |k|` for divergence-free fields.
//!
//! Random numbers come from a counter-based scheme: the increment of ensemble member `m` at
//! step `n` is drawn from ChaCha8 keyed by the master seed, on stream `m`, starting at word
//! `n * 2^24`. Any member and step can therefore be regenerated independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::spectral::wavenumber;
use crate::triple::{Basis, Field, ModelId, ModelSpec, Space};

const WORDS_PER_STEP: u32 = 24;

/// Stream reserved for initial conditions.
pub const INIT_STREAM: u64 = u64::MAX;

/// Generator for `(member, step)` under `master`.
pub fn stream_rng(master: u64, member: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(member);
    rng.set_word_pos(u128::from(step) << WORDS_PER_STEP);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Additive,
    StateScaled,
    Pointwise,
    AttractorVanishing,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Additive => "additive",
            NoiseKind::StateScaled => "state_scaled",
            NoiseKind::Pointwise => "pointwise",
            NoiseKind::AttractorVanishing => "attractor_vanishing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "additive" => Some(Self::Additive),
            "state_scaled" => Some(Self::StateScaled),
            "pointwise" | "pointwise_multiplicative" => Some(Self::Pointwise),
            "attractor_vanishing" => Some(Self::AttractorVanishing),
            _ => None,
        }
    }
}

/// One eigendirection of `Q`: a sparse unit `H`-norm field.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    /// Mode magnitude (`k` on the interval, `|k|` on the torus).
    pub mode: f64,
    pub entries: Vec<(usize, f64)>,
}

/// Truncated covariance `Q e_k = lambda_k^2 e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QSpec {
    model: ModelId,
    lambda: Vec<f64>,
    directions: Vec<Direction>,
    rank: usize,
}

impl QSpec {
    /// Directions with mode magnitude `<= rank`, `lambda = (1 + |k|^2)^(-exponent)`.
    pub fn power_law(spec: &ModelSpec, rank: usize, exponent: f64) -> Result<Self> {
        if !exponent.is_finite() {
            return Err(invalid("noise spectrum exponent must be finite"));
        }
        let directions = directions(spec, rank as f64);
        let lambda = directions.iter().map(|d| (1.0 + d.mode * d.mode).powf(-exponent)).collect();
        Ok(Self { model: spec.id(), lambda, directions, rank })
    }

    /// Directions with mode magnitude `<= rank` and caller-supplied eigenvalues, indexed like
    /// [`Self::directions`].
    pub fn with_lambda(spec: &ModelSpec, rank: usize, lambda: Vec<f64>) -> Result<Self> {
        let directions = directions(spec, rank as f64);
        if lambda.len() != directions.len() {
            return Err(invalid(format!(
                "expected {} noise eigenvalues, got {}",
                directions.len(),
                lambda.len()
            )));
        }
        if lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(invalid("noise eigenvalues must be finite and >= 0"));
        }
        Ok(Self { model: spec.id(), lambda, directions, rank })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `tr Q = sum lambda_k^2`.
    pub fn trace(&self) -> f64 {
        self.lambda.iter().map(|l| l * l).sum()
    }

    /// Direction `d` as a field.
    pub fn direction_field(&self, spec: &ModelSpec, d: usize) -> Field {
        let mut coeffs = vec![0.0; spec.dof()];
        for &(e, v) in &self.directions[d].entries {
            coeffs[e] = v;
        }
        Field::from_parts(spec.id(), coeffs)
    }

    /// `sum_k lambda_k sqrt(dt) xi_k e_k` with standard normal `xi_k` drawn from `rng` in
    /// direction order.
    pub fn sample_increment<R: Rng + ?Sized>(
        &self,
        spec: &ModelSpec,
        rng: &mut R,
        dt: f64,
    ) -> Result<Field> {
        if !(dt > 0.0) {
            return Err(invalid(format!("increment time step must be > 0, got {dt}")));
        }
        if spec.id() != self.model {
            return Err(crate::Error::ModelMismatch { expected: self.model, found: spec.id() });
        }
        Ok(self.sample_unchecked(spec, rng, dt))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(
        &self,
        spec: &ModelSpec,
        rng: &mut R,
        dt: f64,
    ) -> Field {
        let mut coeffs = vec![0.0; spec.dof()];
        let sq = dt.sqrt();
        for (d, lam) in self.directions.iter().zip(&self.lambda) {
            let xi: f64 = rng.sample(StandardNormal);
            let amp = lam * sq * xi;
            for &(e, v) in &d.entries {
                coeffs[e] += amp * v;
            }
        }
        Field::from_parts(spec.id(), coeffs)
    }

    /// Coordinate of `f` along direction `d` (`(f, e_d)_H`).
    pub fn coordinate(&self, spec: &ModelSpec, f: &Field, d: usize) -> f64 {
        let wh = spec.weights(Space::H);
        self.directions[d].entries.iter().map(|&(e, v)| wh[e] * wh[e] * v * f.coeffs()[e]).sum()
    }
}

fn directions(spec: &ModelSpec, max_mode: f64) -> Vec<Direction> {
    let wh = spec.weights(Space::H);
    let band = spec.band();
    let mut out = Vec::new();
    match spec.basis() {
        Basis::Sine { n } => {
            for i in 0..n {
                let k = spec.mode_index(i);
                if band[i] && k <= max_mode + 1e-9 {
                    out.push(Direction { mode: k, entries: vec![(i, 1.0 / wh[i])] });
                }
            }
        }
        Basis::Torus { n, components } => {
            let blocks: Vec<(usize, bool)> = match spec.id() {
                ModelId::Qg => vec![(0, false)],
                ModelId::Mhd => vec![(0, true), (2, true)],
                _ => vec![(0, true)],
            };
            debug_assert!(components >= 1);
            let mut modes = Vec::new();
            for iy in 0..n {
                for ix in 0..n {
                    let (kx, ky) = (wavenumber(ix, n), wavenumber(iy, n));
                    if !(ky > 0 || (ky == 0 && kx > 0)) {
                        continue;
                    }
                    let e = spec.torus_index(0, iy, ix);
                    let k = ((kx * kx + ky * ky) as f64).sqrt();
                    if band[e] && k <= max_mode + 1e-9 {
                        modes.push((k, kx, ky, iy, ix));
                    }
                }
            }
            // order by magnitude so a rank change keeps the low-mode directions stable
            modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.2, a.1).cmp(&(b.2, b.1))));
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for &(c0, vector) in &blocks {
                for &(k, kx, ky, iy, ix) in &modes {
                    let (jy, jx) = ((n - iy) % n, (n - ix) % n);
                    let dirs: Vec<(usize, f64)> = if vector {
                        vec![(c0, -(ky as f64) / k), (c0 + 1, kx as f64 / k)]
                    } else {
                        vec![(c0, 1.0)]
                    };
                    let w = wh[spec.torus_index(c0, iy, ix)];
                    // cos: u_k = v / sqrt(2); sin: u_k = -i v / sqrt(2)
                    for part in 0..2 {
                        let mut entries = Vec::new();
                        for &(c, v) in &dirs {
                            if v == 0.0 {
                                continue;
                            }
                            let p = spec.torus_index(c, iy, ix);
                            let q = spec.torus_index(c, jy, jx);
                            let a = v * r / w;
                            if part == 0 {
                                entries.push((p, a));
                                entries.push((q, a));
                            } else {
                                entries.push((p + 1, -a));
                                entries.push((q + 1, a));
                            }
                        }
                        out.push(Direction { mode: k, entries });
                    }
                }
            }
        }
    }
    out
}

/// `G_delta(u)`: the four supported coefficient families.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: f64,
    delta_power: f64,
    sigma_delta: f64,
    attractor: Option<Field>,
}

impl NoiseModel {
    /// `sigma_delta = sigma * delta^p`.
    pub fn new(kind: NoiseKind, sigma: f64, delta: f64, p: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("noise sigma must be >= 0, got {sigma}")));
        }
        if !(delta > 0.0) {
            return Err(invalid("noise delta must be > 0"));
        }
        if p != 0.0 && p != 0.5 {
            return Err(invalid(format!("noise delta exponent p must be 0 or 0.5, got {p}")));
        }
        Ok(Self { kind, sigma, delta_power: p, sigma_delta: sigma * delta.powf(p), attractor: None })
    }

    /// Sets the attracting state `a` of the attractor-vanishing kind (default `0`).
    pub fn with_attractor(mut self, a: Field) -> Self {
        self.attractor = Some(a);
        self
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta_power(&self) -> f64 {
        self.delta_power
    }

    pub fn sigma_delta(&self) -> f64 {
        self.sigma_delta
    }

    /// Whether `G_delta(u) = 0` for every `u`.
    pub fn is_zero(&self) -> bool {
        self.sigma_delta == 0.0
    }

    fn amplitude(&self, spec: &ModelSpec, u: &Field) -> f64 {
        match self.kind {
            NoiseKind::Additive | NoiseKind::Pointwise => self.sigma_delta,
            NoiseKind::StateScaled => self.sigma_delta * spec.h_norm(u),
            NoiseKind::AttractorVanishing => {
                let d = match &self.attractor {
                    Some(a) => spec.h_norm(&(u - a)),
                    None => spec.h_norm(u),
                };
                self.sigma_delta * d
            }
        }
    }

    /// `G_delta(u) dW`.
    pub fn apply(&self, spec: &ModelSpec, u: &Field, dw: &Field) -> Result<Field> {
        spec.check(u)?;
        spec.check(dw)?;
        if let Some(a) = &self.attractor {
            spec.check(a)?;
        }
        Ok(self.apply_unchecked(spec, u, dw))
    }

    pub(crate) fn apply_unchecked(&self, spec: &ModelSpec, u: &Field, dw: &Field) -> Field {
        match self.kind {
            NoiseKind::Pointwise => spec.pointwise_unchecked(u, dw).scaled(self.sigma_delta),
            _ => dw.scaled(self.amplitude(spec, u)),
        }
    }

    /// `||G_delta(u)||^2_{L_2^0} = sum_k lambda_k^2 ||G_delta(u) e_k||_H^2`.
    pub fn hs_norm_sq(&self, spec: &ModelSpec, u: &Field, q: &QSpec) -> Result<f64> {
        spec.check(u)?;
        Ok(self.hs_unchecked(spec, u, q))
    }

    pub(crate) fn hs_unchecked(&self, spec: &ModelSpec, u: &Field, q: &QSpec) -> f64 {
        match self.kind {
            NoiseKind::Pointwise => (0..q.directions.len())
                .map(|d| {
                    let l = q.lambda[d];
                    if l == 0.0 || self.sigma_delta == 0.0 {
                        return 0.0;
                    }
                    let g = self.apply_unchecked(spec, u, &q.direction_field(spec, d));
                    l * l * spec.weighted_sq(g.coeffs(), Space::H)
                })
                .sum(),
            _ => {
                let a = self.amplitude(spec, u);
                a * a * q.trace()
            }
        }
    }
}

/// `Gamma_u = sup_t ||G_delta(u(t))||^2_{L_2^0}` over a sampled series.
pub fn gamma_u_sup(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(invalid("gamma_u_sup needs a nonempty series"));
    }
    Ok(series.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Running maximum of a series.
pub fn running_max(series: &[f64]) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    series
        .iter()
        .map(|&x| {
            m = m.max(x);
            m
        })
        .collect()
}
