//! Concrete model instantiations: triple weights, nonlinearities, projections and the
//! per-model `kappa_u` monitors of the one-sided increment condition.
//!
//! | model        | domain      | `H`            | `V`            | `F`                          |
//! |--------------|-------------|----------------|----------------|------------------------------|
//! | `heat`       | `(0,1)`     | `L^2`          | `H^1_0`        | `0`                          |
//! | `ac_weak`    | `(0,1)`     | `L^2`          | `H^1_0`        | `u - u^3`                    |
//! | `ac_strong`  | `(0,1)`     | `H^1_0`        | `H^2 cap H^1_0`| `u - u^3`                    |
//! | `nse_weak`   | torus       | `L^2_sigma`    | `H^1_sigma`    | `-P (u . grad) u`            |
//! | `nse_strong` | torus       | `H^1_sigma`    | `H^2_sigma`    | `-P (u . grad) u`            |
//! | `qg`         | torus       | `L^2_0`        | `H^1_0`        | `-div(theta R^perp theta)`   |
//! | `mhd`        | torus       | `L^2_sigma^2`  | `H^1_sigma^2`  | Lorentz force + induction    |
//!
//! Homogeneous norms are used throughout (`||u||_V = ||A^{1/2} u||` style, with `nu = 1`), and
//! the torus is `[0, 2 pi)^2` with normalised measure.

mod allen_cahn;
mod mhd;
mod navier_stokes;
mod qg;
pub(crate) mod torus;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::spectral::{wavenumber, SineTransform, TorusTransform};
use crate::triple::{Basis, Field, ModelId, ModelParams, ModelSpec, NormConvention, Space};

pub use qg::VectorSpectrum;
use torus::TorusView;

/// Real values on the collocation grid, components stored one after another.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub components: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaSample {
    pub t: f64,
    pub kappa: f64,
}

impl ModelSpec {
    /// Builds the triple for `id` with `n` sine modes (interval models) or an `n x n` grid
    /// (torus models).
    pub fn new(id: ModelId, n: usize, params: ModelParams) -> Result<Self> {
        if !(params.nu > 0.0 && params.nu.is_finite()) {
            return Err(invalid("viscosity nu must be > 0"));
        }
        if id == ModelId::Mhd && !(params.resistivity > 0.0 && params.resistivity.is_finite()) {
            return Err(invalid("resistivity must be > 0"));
        }
        if params.norm == NormConvention::Inhomogeneous && !matches!(id, ModelId::Heat | ModelId::AcWeak)
        {
            return Err(invalid("the inhomogeneous norm convention applies to heat/ac_weak only"));
        }
        let spec = if id.is_torus() { Self::torus_model(id, n, params)? } else { Self::sine_model(id, n, params)? };
        spec.assert_triple_identities();
        Ok(spec)
    }

    fn sine_model(id: ModelId, n: usize, params: ModelParams) -> Result<Self> {
        if n < 2 {
            return Err(invalid("sine models need n >= 2"));
        }
        let cutoff = n / 2;
        let mut spec = ModelSpec {
            id,
            params,
            basis: Basis::Sine { n },
            a_symbol: Vec::with_capacity(n),
            w_h: Vec::with_capacity(n),
            w_v: Vec::with_capacity(n),
            w_vstar: Vec::with_capacity(n),
            band: Vec::with_capacity(n),
            wave: Vec::with_capacity(n),
            alpha: 0.0,
            sine: Some(SineTransform::new(n)),
            torus: None,
        };
        for k in 1..=n {
            let kp = k as f64 * PI;
            let (wh, wv, ws) = match (id, params.norm) {
                (ModelId::AcStrong, _) => (kp, kp * kp, 1.0),
                (_, NormConvention::Homogeneous) => (1.0, kp, 1.0 / kp),
                (_, NormConvention::Inhomogeneous) => {
                    let w = (1.0 + kp * kp).sqrt();
                    (1.0, w, 1.0 / w)
                }
            };
            spec.a_symbol.push(params.nu * kp * kp);
            spec.w_h.push(wh);
            spec.w_v.push(wv);
            spec.w_vstar.push(ws);
            spec.band.push(k <= cutoff);
            spec.wave.push(kp);
        }
        spec.alpha = spec.measured_alpha();
        Ok(spec)
    }

    fn torus_model(id: ModelId, n: usize, params: ModelParams) -> Result<Self> {
        if n < 4 {
            return Err(invalid("torus models need n >= 4"));
        }
        let comps = id.components();
        let cutoff = ((n - 1) / 3) as i64;
        let dof = 2 * comps * n * n;
        let mut spec = ModelSpec {
            id,
            params,
            basis: Basis::Torus { n, components: comps },
            a_symbol: vec![0.0; dof],
            w_h: vec![0.0; dof],
            w_v: vec![0.0; dof],
            w_vstar: vec![0.0; dof],
            band: vec![false; dof],
            wave: vec![0.0; dof],
            alpha: 0.0,
            sine: None,
            torus: Some(TorusTransform::new(n)),
        };
        for c in 0..comps {
            let diffusivity = if id == ModelId::Mhd && c >= 2 { params.resistivity } else { params.nu };
            for iy in 0..n {
                for ix in 0..n {
                    let (kx, ky) = (wavenumber(ix, n), wavenumber(iy, n));
                    let k2 = (kx * kx + ky * ky) as f64;
                    let e = spec.torus_index(c, iy, ix);
                    let keep = k2 > 0.0 && kx.abs() <= cutoff && ky.abs() <= cutoff;
                    let k = k2.sqrt();
                    let (wh, wv, ws) = if k2 == 0.0 {
                        (0.0, 0.0, 0.0)
                    } else if id == ModelId::NseStrong {
                        (k, k2, 1.0)
                    } else {
                        (1.0, k, 1.0 / k)
                    };
                    for off in 0..2 {
                        spec.a_symbol[e + off] = diffusivity * k2;
                        spec.w_h[e + off] = wh;
                        spec.w_v[e + off] = wv;
                        spec.w_vstar[e + off] = ws;
                        spec.band[e + off] = keep;
                        spec.wave[e + off] = k;
                    }
                }
            }
        }
        spec.alpha = spec.measured_alpha();
        Ok(spec)
    }

    /// Smallest mode-wise Rayleigh quotient `w_H^2 a / w_V^2` over the retained band.
    pub fn measured_alpha(&self) -> f64 {
        (0..self.dof())
            .filter(|&i| self.band[i])
            .map(|i| self.w_h[i] * self.w_h[i] * self.a_symbol[i] / (self.w_v[i] * self.w_v[i]))
            .fold(f64::INFINITY, f64::min)
    }

    fn assert_triple_identities(&self) {
        for i in (0..self.dof()).filter(|&i| self.band[i]) {
            let lhs = self.w_v[i] * self.w_vstar[i];
            let rhs = self.w_h[i] * self.w_h[i];
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "w_V w_V* != w_H^2 at entry {i}");
            assert!(self.a_symbol[i] > 0.0, "A symbol not positive at entry {i}");
        }
    }

    /// Integer mode magnitude per entry (`k` on the interval, `|k|` on the torus).
    pub fn mode_index(&self, entry: usize) -> f64 {
        match self.basis {
            Basis::Sine { .. } => self.wave[entry] / PI,
            Basis::Torus { .. } => self.wave[entry],
        }
    }

    /// Evaluates the model nonlinearity `F`.
    pub fn apply_f(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(self.apply_f_unchecked(f))
    }

    pub(crate) fn apply_f_unchecked(&self, f: &Field) -> Field {
        match self.id {
            ModelId::Heat => self.zeros(),
            ModelId::AcWeak | ModelId::AcStrong => allen_cahn::reaction(self, f),
            ModelId::NseWeak | ModelId::NseStrong => navier_stokes::nonlinearity(self, f),
            ModelId::Qg => qg::transport(self, f),
            ModelId::Mhd => mhd::nonlinearity(self, f),
        }
    }

    /// `R^perp theta = grad^perp (-Delta)^{-1/2} theta` (QG only).
    pub fn riesz_perp(&self, theta: &Field) -> Result<VectorSpectrum> {
        if self.id != ModelId::Qg {
            return Err(invalid("riesz_perp is defined for the qg model"));
        }
        qg::riesz_perp(self, theta)
    }

    /// Projects coefficients onto the model's `H`: retained band, mean-zero, and
    /// divergence-free where required.
    pub fn project_to_h(&self, f: &Field) -> Field {
        let mut out = f.clone();
        self.project_in_place(out.coeffs_mut());
        out
    }

    pub(crate) fn project_in_place(&self, coeffs: &mut [f64]) {
        for (c, keep) in coeffs.iter_mut().zip(&self.band) {
            if !keep {
                *c = 0.0;
            }
        }
        if self.id.is_solenoidal() {
            let view = TorusView::new(self);
            for c in (0..self.id.components()).step_by(2) {
                torus::leray_coeffs(&view, coeffs, c);
            }
        }
    }

    /// Leray projection of a grid vector field onto divergence-free, mean-zero fields of this
    /// (two-component) model.
    pub fn leray_project(&self, f: &GridField) -> Result<Field> {
        if !matches!(self.id, ModelId::NseWeak | ModelId::NseStrong) {
            return Err(invalid("leray_project expects a Navier-Stokes model"));
        }
        let nn = self.n() * self.n();
        if f.components != 2 || f.values.len() != 2 * nn {
            return Err(invalid("leray_project expects a two-component grid field"));
        }
        let view = TorusView::new(self);
        let mut out = vec![0.0; self.dof()];
        for c in 0..2 {
            let s = view.transform(&f.values[c * nn..(c + 1) * nn]);
            view.store(&mut out, c, &s);
        }
        torus::leray_coeffs(&view, &mut out, 0);
        Ok(Field::from_parts(self.id, out))
    }

    /// Coefficients to collocation values.
    pub fn to_grid(&self, f: &Field) -> Result<GridField> {
        self.check(f)?;
        Ok(match self.basis {
            Basis::Sine { .. } => GridField {
                components: 1,
                values: self.sine.as_ref().expect("sine transform").to_grid(f.coeffs()),
            },
            Basis::Torus { components, .. } => {
                let view = TorusView::new(self);
                let values =
                    (0..components).flat_map(|c| view.component_grid(f.coeffs(), c)).collect();
                GridField { components, values }
            }
        })
    }

    /// Collocation values to coefficients, truncated to the retained band (no projection).
    pub fn from_grid(&self, g: &GridField) -> Result<Field> {
        match self.basis {
            Basis::Sine { n } => {
                if g.values.len() != n {
                    return Err(invalid("grid length does not match the model"));
                }
                self.field(self.sine.as_ref().expect("sine transform").from_grid(&g.values))
            }
            Basis::Torus { n, components } => {
                if g.components != components || g.values.len() != components * n * n {
                    return Err(invalid("grid shape does not match the model"));
                }
                let view = TorusView::new(self);
                let mut out = vec![0.0; self.dof()];
                for c in 0..components {
                    let s = view.transform(&g.values[c * n * n..(c + 1) * n * n]);
                    view.store(&mut out, c, &s);
                }
                Ok(Field::from_parts(self.id, out))
            }
        }
    }

    /// `max_k |k . u_k| / max_k |u_k|` over every divergence-free block (0 for scalar models).
    pub fn divergence_residual(&self, f: &Field) -> f64 {
        if !self.id.is_solenoidal() {
            return 0.0;
        }
        let view = TorusView::new(self);
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        (0..self.id.components())
            .step_by(2)
            .map(|c| torus::max_divergence(&view, f.coeffs(), c))
            .fold(0.0, f64::max)
            / scale
    }

    /// Dealiased collocation product `a * b`, component by component, projected onto `H`.
    pub fn pointwise_product(&self, a: &Field, b: &Field) -> Result<Field> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.pointwise_unchecked(a, b))
    }

    pub(crate) fn pointwise_unchecked(&self, a: &Field, b: &Field) -> Field {
        match self.basis {
            Basis::Sine { .. } => allen_cahn::pointwise(self, a, b),
            Basis::Torus { components, .. } => {
                let view = TorusView::new(self);
                let mut out = vec![0.0; self.dof()];
                for c in 0..components {
                    let ga = view.component_grid(a.coeffs(), c);
                    let gb = view.component_grid(b.coeffs(), c);
                    let s = view.transform(&TorusView::product(&ga, &gb));
                    view.store(&mut out, c, &s);
                }
                self.project_in_place(&mut out);
                Field::from_parts(self.id, out)
            }
        }
    }

    /// Random field with independent Gaussian coefficients on modes of magnitude
    /// `<= max_mode`, amplitudes decaying like `(1 + |k|^2)^(-decay)`, projected onto `H`.
    pub fn random_field<R: Rng + ?Sized>(&self, rng: &mut R, max_mode: f64, decay: f64) -> Field {
        let mut coeffs = vec![0.0; self.dof()];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = self.mode_index(i);
            if self.band[i] && k <= max_mode {
                let z: f64 = rng.sample(StandardNormal);
                *c = z * (1.0 + k * k).powf(-decay);
            }
        }
        if let Basis::Torus { components, .. } = self.basis {
            let view = TorusView::new(self);
            for c in 0..components {
                torus::symmetrize(&view, &mut coeffs, c);
            }
        }
        self.project_in_place(&mut coeffs);
        Field::from_parts(self.id, coeffs)
    }

    /// [`Self::random_field`] rescaled to the given `H` norm.
    pub fn random_field_with_norm<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_mode: f64,
        decay: f64,
        h_norm: f64,
    ) -> Field {
        let f = self.random_field(rng, max_mode, decay);
        let norm = self.h_norm(&f);
        if norm == 0.0 {
            f
        } else {
            f.scaled(h_norm / norm)
        }
    }

    /// `(rho, beta)` of the growth bound `||F(u) - F(v)||_{V*} <~ (1 + ||u||^rho_{V_beta} +
    /// ||v||^rho_{V_beta}) ||u - v||_{V_beta}`; `None` for the linear model.
    pub fn growth_exponents(&self) -> Option<(f64, f64)> {
        match self.id {
            ModelId::Heat => None,
            ModelId::AcWeak | ModelId::AcStrong => Some((2.0, 2.0 / 3.0)),
            ModelId::NseWeak | ModelId::NseStrong | ModelId::Qg | ModelId::Mhd => Some((1.0, 0.75)),
        }
    }

    /// Declared `C^(1)` in `<F(x), x> <= eps ||x||_V^2 + C^(1) ||x||_H^2`.
    pub fn energy_h_coefficient(&self) -> f64 {
        match self.id {
            ModelId::AcWeak | ModelId::AcStrong => 1.0,
            _ => 0.0,
        }
    }

    /// Whether `<F(phi), phi> = 0` holds identically (strong NSE: `((u . grad) u, A u) = 0`).
    pub fn has_energy_cancellation(&self) -> bool {
        matches!(self.id, ModelId::NseWeak | ModelId::NseStrong | ModelId::Qg | ModelId::Mhd)
    }

    /// `kappa_u(t)` with every undetermined constant set to 1.
    pub fn kappa_monitor(&self, u: &Field, t: f64) -> Result<KappaSample> {
        self.check(u)?;
        Ok(KappaSample { t, kappa: self.kappa_unchecked(u) })
    }

    pub(crate) fn kappa_unchecked(&self, u: &Field) -> f64 {
        let h2 = self.weighted_sq(u.coeffs(), Space::H);
        let v2 = self.weighted_sq(u.coeffs(), Space::V);
        match self.id {
            ModelId::Heat => 0.0,
            ModelId::AcWeak => 1.0 + v2,
            ModelId::AcStrong => 1.0 + (1.0 + h2) * v2,
            ModelId::NseWeak | ModelId::Qg => h2 * v2,
            ModelId::Mhd => {
                let half = self.dof() / 2;
                let (cu, ch) = u.coeffs().split_at(half);
                let part = |c: &[f64], off: usize| {
                    let h: f64 = c.iter().enumerate().map(|(i, x)| (self.w_h[off + i] * x).powi(2)).sum();
                    let v: f64 = c.iter().enumerate().map(|(i, x)| (self.w_v[off + i] * x).powi(2)).sum();
                    h * v
                };
                part(cu, 0) + part(ch, half)
            }
            ModelId::NseStrong => {
                let view = TorusView::new(self);
                let s0 = view.spectrum(u.coeffs(), 0);
                let s1 = view.spectrum(u.coeffs(), 1);
                let g0 = view.grid(&s0);
                let g1 = view.grid(&s1);
                let d: Vec<Vec<f64>> = [&s0, &s1]
                    .iter()
                    .flat_map(|s| (0..2).map(|ax| view.grid(&view.derivative(s, ax))))
                    .collect();
                let nn = g0.len();
                let sup2 = (0..nn).map(|i| g0[i] * g0[i] + g1[i] * g1[i]).fold(0.0, f64::max);
                let l3 = (0..nn)
                    .map(|i| {
                        let f2: f64 = d.iter().map(|g| g[i] * g[i]).sum();
                        f2.powf(1.5)
                    })
                    .sum::<f64>()
                    / nn as f64;
                sup2 + l3.powf(2.0 / 3.0)
            }
        }
    }
}

impl ModelSpec {
    /// Re-expresses `f` in `target`'s basis (same model, any size): modes present in both are
    /// copied, the rest dropped, and the result is restricted to `target`'s band.
    pub fn embed(&self, f: &Field, target: &ModelSpec) -> Result<Field> {
        self.check(f)?;
        if target.id() != self.id() {
            return Err(crate::Error::ModelMismatch { expected: target.id(), found: self.id() });
        }
        let mut out = vec![0.0; target.dof()];
        match (self.basis, target.basis) {
            (Basis::Sine { n }, Basis::Sine { n: m }) => {
                out[..n.min(m)].copy_from_slice(&f.coeffs()[..n.min(m)]);
            }
            (Basis::Torus { n, components }, Basis::Torus { n: m, .. }) => {
                let (hn, hm) = (n as i64, m as i64);
                for c in 0..components {
                    for iy in 0..n {
                        for ix in 0..n {
                            let (kx, ky) = (wavenumber(ix, n), wavenumber(iy, n));
                            if 2 * kx.abs() >= hm || 2 * ky.abs() >= hm || 2 * kx.abs() >= hn || 2 * ky.abs() >= hn {
                                continue;
                            }
                            let a = self.torus_index(c, iy, ix);
                            let b = target.torus_index(c, ky.rem_euclid(hm) as usize, kx.rem_euclid(hm) as usize);
                            out[b] = f.coeffs()[a];
                            out[b + 1] = f.coeffs()[a + 1];
                        }
                    }
                }
            }
            _ => unreachable!("same model id implies the same basis family"),
        }
        target.field(out)
    }
}

/// Complex coefficient of component `c` at wavevector `(kx, ky)` (torus models).
pub fn torus_coefficient(spec: &ModelSpec, f: &Field, c: usize, kx: i64, ky: i64) -> Complex64 {
    let n = spec.n() as i64;
    let ix = kx.rem_euclid(n) as usize;
    let iy = ky.rem_euclid(n) as usize;
    let e = spec.torus_index(c, iy, ix);
    Complex64::new(f.coeffs()[e], f.coeffs()[e + 1])
}

/// Builds a torus field from a list of `(component, kx, ky, value)` coefficients; the
/// conjugate entries at `-k` are filled in so the field is real. No projection is applied.
pub fn torus_field_from_modes(
    spec: &ModelSpec,
    modes: &[(usize, i64, i64, Complex64)],
) -> Result<Field> {
    if !spec.id().is_torus() {
        return Err(invalid("torus_field_from_modes needs a torus model"));
    }
    let n = spec.n() as i64;
    let mut coeffs = vec![0.0; spec.dof()];
    let mut put = |c: usize, kx: i64, ky: i64, z: Complex64| {
        let e = spec.torus_index(c, ky.rem_euclid(n) as usize, kx.rem_euclid(n) as usize);
        coeffs[e] = z.re;
        coeffs[e + 1] = z.im;
    };
    for &(c, kx, ky, z) in modes {
        put(c, kx, ky, z);
        put(c, -kx, -ky, z.conj());
    }
    spec.field(coeffs)
}
