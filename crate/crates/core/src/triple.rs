//! Gelfand-triple state representation.
//!
//! Every state is a [`Field`]: a real coefficient vector in the model's orthonormal spectral
//! basis. The three spaces `V -> H -> V*` are realised by diagonal per-entry weights, so norms,
//! the `H` inner product, and the `V*`/`V` duality pairing are weighted sums over entries.
//!
//! Coefficient layout:
//!
//! * sine models: entry `k - 1` holds the coefficient of `sqrt(2) sin(k pi x)`, `k = 1..=n`;
//! * torus models: for each component `c`, the complex Fourier coefficient at grid index
//!   `(iy, ix)` is stored as two consecutive reals (re, im) at `((c n + iy) n + ix) 2`.
//!
//! Entries outside the retained band (dealiased modes, the mean mode of mean-zero models,
//! Nyquist modes) are kept at zero by every operation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::spectral::{SineTransform, TorusTransform};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    /// Dirichlet heat equation on (0, 1): the weak Allen-Cahn triple with `F = 0`.
    Heat,
    AcWeak,
    AcStrong,
    NseWeak,
    NseStrong,
    Qg,
    Mhd,
}

impl ModelId {
    pub const ALL: [ModelId; 7] = [
        ModelId::Heat,
        ModelId::AcWeak,
        ModelId::AcStrong,
        ModelId::NseWeak,
        ModelId::NseStrong,
        ModelId::Qg,
        ModelId::Mhd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Heat => "heat",
            ModelId::AcWeak => "ac_weak",
            ModelId::AcStrong => "ac_strong",
            ModelId::NseWeak => "nse_weak",
            ModelId::NseStrong => "nse_strong",
            ModelId::Qg => "qg",
            ModelId::Mhd => "mhd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_torus(self) -> bool {
        matches!(self, ModelId::NseWeak | ModelId::NseStrong | ModelId::Qg | ModelId::Mhd)
    }

    /// Number of scalar components per grid point.
    pub fn components(self) -> usize {
        match self {
            ModelId::Heat | ModelId::AcWeak | ModelId::AcStrong | ModelId::Qg => 1,
            ModelId::NseWeak | ModelId::NseStrong => 2,
            ModelId::Mhd => 4,
        }
    }

    /// Whether the state space consists of divergence-free vector fields.
    pub fn is_solenoidal(self) -> bool {
        matches!(self, ModelId::NseWeak | ModelId::NseStrong | ModelId::Mhd)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    H,
    V,
    Vstar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Sine { n: usize },
    Torus { n: usize, components: usize },
}

impl Basis {
    pub fn n(&self) -> usize {
        match *self {
            Basis::Sine { n } | Basis::Torus { n, .. } => n,
        }
    }

    pub fn dof(&self) -> usize {
        match *self {
            Basis::Sine { n } => n,
            Basis::Torus { n, components } => 2 * components * n * n,
        }
    }
}

/// A state of one model: coefficients in the model's orthonormal spectral basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    model: ModelId,
    coeffs: Vec<f64>,
}

impl Field {
    pub(crate) fn from_parts(model: ModelId, coeffs: Vec<f64>) -> Self {
        Self { model, coeffs }
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_parts(self.model, self.coeffs.iter().map(|c| a * c).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        debug_assert_eq!(self.model, other.model);
        Field::from_parts(
            self.model,
            self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect(),
        )
    }

    pub(crate) fn add_scaled_in_place(&mut self, a: f64, other: &Field) {
        debug_assert_eq!(self.model, other.model);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}

/// Weak Allen-Cahn / heat norm convention for `V = H^1_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormConvention {
    /// `||u||_V = ||u_x||_2`.
    Homogeneous,
    /// `||u||_V^2 = ||u||_2^2 + ||u_x||_2^2`.
    Inhomogeneous,
}

impl NormConvention {
    pub fn name(self) -> &'static str {
        match self {
            NormConvention::Homogeneous => "homogeneous",
            NormConvention::Inhomogeneous => "inhomogeneous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "homogeneous" => Some(Self::Homogeneous),
            "inhomogeneous" => Some(Self::Inhomogeneous),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Viscosity / diffusivity multiplying the Laplacian.
    pub nu: f64,
    /// Magnetic diffusivity (MHD only).
    pub resistivity: f64,
    pub norm: NormConvention,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { nu: 1.0, resistivity: 1.0, norm: NormConvention::Homogeneous }
    }
}

/// A Gelfand-triple instantiation: spectral symbol of `A`, norm weights, coercivity constant
/// and the transforms needed to evaluate `F`.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub(crate) id: ModelId,
    pub(crate) params: ModelParams,
    pub(crate) basis: Basis,
    pub(crate) a_symbol: Vec<f64>,
    pub(crate) w_h: Vec<f64>,
    pub(crate) w_v: Vec<f64>,
    pub(crate) w_vstar: Vec<f64>,
    pub(crate) band: Vec<bool>,
    /// Physical wavenumber magnitude per entry (`k pi` on the interval, `|k|` on the torus).
    pub(crate) wave: Vec<f64>,
    pub(crate) alpha: f64,
    pub(crate) sine: Option<SineTransform>,
    pub(crate) torus: Option<TorusTransform>,
}

impl ModelSpec {
    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn dof(&self) -> usize {
        self.basis.dof()
    }

    /// Coercivity constant: `<A f, f> >= alpha ||f||_V^2`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a_symbol(&self) -> &[f64] {
        &self.a_symbol
    }

    pub fn band(&self) -> &[bool] {
        &self.band
    }

    pub fn wave(&self) -> &[f64] {
        &self.wave
    }

    pub fn weights(&self, space: Space) -> &[f64] {
        match space {
            Space::H => &self.w_h,
            Space::V => &self.w_v,
            Space::Vstar => &self.w_vstar,
        }
    }

    pub fn zeros(&self) -> Field {
        Field::from_parts(self.id, vec![0.0; self.dof()])
    }

    /// Wraps a coefficient vector, checking its length. Coefficients outside the retained band
    /// are zeroed.
    pub fn field(&self, mut coeffs: Vec<f64>) -> Result<Field> {
        if coeffs.len() != self.dof() {
            return Err(Error::LengthMismatch { expected: self.dof(), found: coeffs.len() });
        }
        for (c, keep) in coeffs.iter_mut().zip(&self.band) {
            if !keep {
                *c = 0.0;
            }
        }
        Ok(Field::from_parts(self.id, coeffs))
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.model() != self.id {
            return Err(Error::ModelMismatch { expected: self.id, found: f.model() });
        }
        if f.len() != self.dof() {
            return Err(Error::LengthMismatch { expected: self.dof(), found: f.len() });
        }
        Ok(())
    }

    pub(crate) fn weighted_sq(&self, coeffs: &[f64], space: Space) -> f64 {
        self.weights(space)
            .iter()
            .zip(coeffs)
            .map(|(w, c)| {
                let x = w * c;
                x * x
            })
            .sum()
    }

    /// `(sum_k w_space(k)^2 |f_k|^2)^(1/2)`.
    pub fn norm(&self, f: &Field, space: Space) -> Result<f64> {
        self.check(f)?;
        Ok(self.weighted_sq(f.coeffs(), space).sqrt())
    }

    pub(crate) fn h_norm(&self, f: &Field) -> f64 {
        self.weighted_sq(f.coeffs(), Space::H).sqrt()
    }

    pub(crate) fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w_h.iter().zip(a).zip(b).map(|((w, x), y)| w * w * x * y).sum()
    }

    pub fn inner_h(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.weighted_dot(f.coeffs(), g.coeffs()))
    }

    /// Duality pairing `<f, g>_{V*, V}`. For truncated fields both arguments share the coefficient
    /// space, and the pairing weight is `w_H^2`; this makes the pairing coincide with the `H`
    /// inner product on `H`, and with `(f, A g)_2` for the strong triples.
    pub fn pairing(&self, f: &Field, g: &Field) -> Result<f64> {
        self.inner_h(f, g)
    }

    /// Mode-wise multiplication by the symbol of `A` (already Leray-compatible: the symbol is
    /// scalar per wavevector, so divergence-free inputs stay divergence-free).
    pub fn apply_a(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(Field::from_parts(
            self.id,
            f.coeffs().iter().zip(&self.a_symbol).map(|(c, a)| c * a).collect(),
        ))
    }

    /// Smallest constant `c` with `||f||_{V*} <= c ||f||_H` on the retained band.
    pub fn embedding_vstar_h(&self) -> f64 {
        self.band_max(|i| self.w_vstar[i] / self.w_h[i])
    }

    /// Smallest constant `c` with `||f||_H <= c ||f||_V` on the retained band.
    pub fn embedding_h_v(&self) -> f64 {
        self.band_max(|i| self.w_h[i] / self.w_v[i])
    }

    fn band_max(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.dof()).filter(|&i| self.band[i]).map(f).fold(0.0, f64::max)
    }

    /// Weights of the interpolation space `[V*, V]_beta`, diagonal in the spectral basis.
    pub fn interpolation_weights(&self, beta: f64) -> Vec<f64> {
        self.w_vstar
            .iter()
            .zip(&self.w_v)
            .map(|(ws, wv)| if *wv == 0.0 { 0.0 } else { ws.powf(1.0 - beta) * wv.powf(beta) })
            .collect()
    }

    pub fn sine(&self) -> Option<&SineTransform> {
        self.sine.as_ref()
    }

    pub fn torus(&self) -> Option<&TorusTransform> {
        self.torus.as_ref()
    }

    /// Entry index of the real part of the Fourier coefficient at grid index `(iy, ix)` of
    /// component `c` (torus models only).
    #[inline]
    pub fn torus_index(&self, c: usize, iy: usize, ix: usize) -> usize {
        let n = self.n();
        ((c * n + iy) * n + ix) * 2
    }
}
