//! Coarse observation operators `I_delta`: modal truncation and cell (volume) averaging.
//!
//! The observation scale `delta` is tied to a cutoff `K(delta)`, the largest mode whose
//! physical wavenumber does not exceed `pi / delta`. On `(0, 1)` the sine mode `k` has
//! wavenumber `k pi`, so `K = floor(1 / delta)`; on the `2 pi` torus `K = floor(pi / delta)`.
//! Volume averaging uses `m = round(L / delta)` equal cells per direction (`L = 1` or `2 pi`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::models::torus::{leray_coeffs, TorusView};
use crate::spectral::wavenumber;
use crate::triple::{Basis, Field, ModelId, ModelSpec, Space};

const CUTOFF_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservationKind {
    Modal,
    Volume,
}

impl ObservationKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservationKind::Modal => "modal",
            ObservationKind::Volume => "volume",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "modal" => Some(Self::Modal),
            "volume" => Some(Self::Volume),
            _ => None,
        }
    }
}

// Cell integrals of the basis functions along one direction.
#[derive(Clone, Debug)]
struct CellMaps {
    /// Retained 1D basis indices (sine: `k - 1`; torus: FFT index).
    modes: Vec<usize>,
    /// `average[j][i]`: mean of basis function `modes[i]` over cell `j`.
    average: Vec<Vec<Complex64>>,
    /// `lift[i][j]`: coefficient of basis function `modes[i]` in the indicator of cell `j`.
    lift: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug)]
pub struct ObservationOperator {
    kind: ObservationKind,
    delta: f64,
    cutoff: usize,
    cells: usize,
    model: ModelId,
    n: usize,
    /// Entries kept by the modal projection.
    observed: Vec<bool>,
    maps: Option<CellMaps>,
}

fn domain_length(spec: &ModelSpec) -> f64 {
    if spec.id().is_torus() {
        2.0 * PI
    } else {
        1.0
    }
}

impl ObservationOperator {
    /// Builds `I_delta` for `spec` at observation scale `delta`.
    pub fn new(spec: &ModelSpec, kind: ObservationKind, delta: f64) -> Result<Self> {
        let length = domain_length(spec);
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid(format!("observation scale delta must be > 0, got {delta}")));
        }
        if delta > length {
            return Err(invalid(format!(
                "observation scale delta = {delta} exceeds the domain length {length}"
            )));
        }
        let ratio = if spec.id().is_torus() { PI / delta } else { 1.0 / delta };
        let cutoff = (ratio + CUTOFF_SLACK).floor() as usize;
        let cells = ((length / delta).round() as usize).max(1);
        let observed = (0..spec.dof())
            .map(|i| spec.band()[i] && spec.mode_index(i) <= cutoff as f64 + CUTOFF_SLACK)
            .collect();
        let maps = match kind {
            ObservationKind::Modal => None,
            ObservationKind::Volume => Some(cell_maps(spec, cells)),
        };
        Ok(Self { kind, delta, cutoff, cells, model: spec.id(), n: spec.n(), observed, maps })
    }

    /// Builds `I_delta` from a mode cutoff `K`, with `delta = pi / (K * wavenumber unit)`.
    pub fn with_cutoff(spec: &ModelSpec, kind: ObservationKind, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(invalid("observation cutoff must be >= 1"));
        }
        let delta = if spec.id().is_torus() { PI / cutoff as f64 } else { 1.0 / cutoff as f64 };
        Self::new(spec, kind, delta)
    }

    pub fn kind(&self) -> ObservationKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `K(delta)`.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Cells per direction used by the volume operator.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Entries retained by the modal projection; `None` for the volume operator.
    pub fn modal_mask(&self) -> Option<&[bool]> {
        match self.kind {
            ObservationKind::Modal => Some(&self.observed),
            ObservationKind::Volume => None,
        }
    }

    fn check(&self, spec: &ModelSpec, f: &Field) -> Result<()> {
        if spec.id() != self.model || spec.n() != self.n {
            return Err(Error::ModelMismatch { expected: self.model, found: spec.id() });
        }
        spec.check(f)
    }

    /// `I_delta f`.
    pub fn apply(&self, spec: &ModelSpec, f: &Field) -> Result<Field> {
        self.check(spec, f)?;
        Ok(self.apply_unchecked(spec, f))
    }

    pub(crate) fn apply_unchecked(&self, spec: &ModelSpec, f: &Field) -> Field {
        match self.kind {
            ObservationKind::Modal => {
                let coeffs = f
                    .coeffs()
                    .iter()
                    .zip(&self.observed)
                    .map(|(&c, &keep)| if keep { c } else { 0.0 })
                    .collect();
                Field::from_parts(spec.id(), coeffs)
            }
            ObservationKind::Volume => {
                let cells = self.averages_unchecked(spec, f);
                self.lift_unchecked(spec, &cells)
            }
        }
    }

    /// Exact cell averages of `f`: `m` values on the interval, `m x m` (row-major in `y`) per
    /// component on the torus.
    pub fn cell_averages(&self, spec: &ModelSpec, f: &Field) -> Result<Vec<f64>> {
        self.check(spec, f)?;
        if self.kind != ObservationKind::Volume {
            return Err(invalid("cell averages are defined for the volume operator"));
        }
        Ok(self.averages_unchecked(spec, f))
    }

    /// Band projection of the piecewise-constant function with the given cell values
    /// (followed by the Leray projection for divergence-free models).
    pub fn lift(&self, spec: &ModelSpec, cells: &[f64]) -> Result<Field> {
        if spec.id() != self.model || spec.n() != self.n {
            return Err(Error::ModelMismatch { expected: self.model, found: spec.id() });
        }
        let per = if spec.id().is_torus() { self.cells * self.cells } else { self.cells };
        let expected = per * spec.id().components();
        if self.kind != ObservationKind::Volume || cells.len() != expected {
            return Err(Error::LengthMismatch { expected, found: cells.len() });
        }
        Ok(self.lift_unchecked(spec, cells))
    }

    fn averages_unchecked(&self, spec: &ModelSpec, f: &Field) -> Vec<f64> {
        let maps = self.maps.as_ref().expect("volume operator");
        match spec.basis() {
            Basis::Sine { .. } => maps
                .average
                .iter()
                .map(|row| row.iter().zip(&maps.modes).map(|(a, &i)| a.re * f.coeffs()[i]).sum())
                .collect(),
            Basis::Torus { n, components } => {
                let view = TorusView::new(spec);
                let m = self.cells;
                let mut out = Vec::with_capacity(components * m * m);
                for c in 0..components {
                    let s = view.spectrum(f.coeffs(), c);
                    // contract along x, then along y
                    let nk = maps.modes.len();
                    let mut half = vec![Complex64::new(0.0, 0.0); nk * m];
                    for (a, &iy) in maps.modes.iter().enumerate() {
                        for jx in 0..m {
                            let row = &maps.average[jx];
                            half[a * m + jx] =
                                maps.modes.iter().zip(row).map(|(&ix, w)| w * s[iy * n + ix]).sum();
                        }
                    }
                    for jy in 0..m {
                        let row = &maps.average[jy];
                        for jx in 0..m {
                            let z: Complex64 = (0..nk).map(|a| row[a] * half[a * m + jx]).sum();
                            out.push(z.re);
                        }
                    }
                }
                out
            }
        }
    }

    fn lift_unchecked(&self, spec: &ModelSpec, cells: &[f64]) -> Field {
        let maps = self.maps.as_ref().expect("volume operator");
        let mut coeffs = vec![0.0; spec.dof()];
        match spec.basis() {
            Basis::Sine { .. } => {
                for (row, &i) in maps.lift.iter().zip(&maps.modes) {
                    coeffs[i] = row.iter().zip(cells).map(|(b, c)| b.re * c).sum();
                }
            }
            Basis::Torus { n, components } => {
                let view = TorusView::new(spec);
                let m = self.cells;
                let nk = maps.modes.len();
                for c in 0..components {
                    let block = &cells[c * m * m..(c + 1) * m * m];
                    let mut half = vec![Complex64::new(0.0, 0.0); nk * m];
                    for jy in 0..m {
                        for (a, brow) in maps.lift.iter().enumerate() {
                            half[jy * nk + a] =
                                (0..m).map(|jx| brow[jx] * block[jy * m + jx]).sum();
                        }
                    }
                    let mut s = vec![Complex64::new(0.0, 0.0); n * n];
                    for (b, &iy) in maps.modes.iter().enumerate() {
                        let brow = &maps.lift[b];
                        for (a, &ix) in maps.modes.iter().enumerate() {
                            s[iy * n + ix] = (0..m).map(|jy| brow[jy] * half[jy * nk + a]).sum();
                        }
                    }
                    view.store(&mut coeffs, c, &s);
                }
                if spec.id().is_solenoidal() {
                    for c in (0..components).step_by(2) {
                        leray_coeffs(&view, &mut coeffs, c);
                    }
                }
            }
        }
        Field::from_parts(spec.id(), coeffs)
    }
}

fn cell_maps(spec: &ModelSpec, m: usize) -> CellMaps {
    match spec.basis() {
        Basis::Sine { n } => {
            let modes: Vec<usize> = (0..n).filter(|&i| spec.band()[i]).collect();
            let h = 1.0 / m as f64;
            // integral of sqrt(2) sin(k pi x) over [a, b]
            let integral = |k: f64, j: usize| {
                let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
                std::f64::consts::SQRT_2 * ((k * PI * a).cos() - (k * PI * b).cos()) / (k * PI)
            };
            let average = (0..m)
                .map(|j| {
                    modes.iter().map(|&i| Complex64::new(integral((i + 1) as f64, j) / h, 0.0)).collect()
                })
                .collect();
            let lift = modes
                .iter()
                .map(|&i| (0..m).map(|j| Complex64::new(integral((i + 1) as f64, j), 0.0)).collect())
                .collect();
            CellMaps { modes, average, lift }
        }
        Basis::Torus { n, .. } => {
            let cut = ((n - 1) / 3) as i64;
            let modes: Vec<usize> = (0..n).filter(|&i| wavenumber(i, n).abs() <= cut).collect();
            let h = 2.0 * PI / m as f64;
            // integral of exp(i k x) over [a, b]
            let integral = |k: i64, j: usize| {
                let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
                if k == 0 {
                    Complex64::new(h, 0.0)
                } else {
                    let kf = k as f64;
                    (Complex64::new(0.0, kf * b).exp() - Complex64::new(0.0, kf * a).exp())
                        / Complex64::new(0.0, kf)
                }
            };
            let average = (0..m)
                .map(|j| modes.iter().map(|&i| integral(wavenumber(i, n), j) / h).collect())
                .collect();
            let lift = modes
                .iter()
                .map(|&i| (0..m).map(|j| integral(-wavenumber(i, n), j) / (2.0 * PI)).collect())
                .collect();
            CellMaps { modes, average, lift }
        }
    }
}

/// Estimate of `C_I` in `<f - I_delta f, g> <= C_I delta ||f||_H ||g||_V`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpConstant {
    pub value: f64,
    /// Best value from the random fields alone.
    pub random: f64,
    /// Best value from single-mode probes just above the cutoff.
    pub probe: f64,
    /// Value from power iteration on `f -> ||f - I_delta f||_{V*} / ||f||_H`.
    pub power: f64,
    pub samples: usize,
}

impl ObservationOperator {
    /// `sup_g <f - I f, g> / (delta ||f||_H ||g||_V)`; the supremum over `g` is attained at the
    /// Riesz representative, which gives `||f - I f||_{V*} / (delta ||f||_H)`.
    pub fn quotient(&self, spec: &ModelSpec, f: &Field) -> Result<f64> {
        let h = spec.norm(f, Space::H)?;
        if h == 0.0 {
            return Ok(0.0);
        }
        let r = f - &self.apply(spec, f)?;
        Ok(spec.norm(&r, Space::Vstar)? / (self.delta * h))
    }

    /// Pairing quotient for a given pair `(f, g)`.
    pub fn pair_quotient(&self, spec: &ModelSpec, f: &Field, g: &Field) -> Result<f64> {
        let (fh, gv) = (spec.norm(f, Space::H)?, spec.norm(g, Space::V)?);
        if fh == 0.0 || gv == 0.0 {
            return Ok(0.0);
        }
        let r = f - &self.apply(spec, f)?;
        Ok(spec.pairing(&r, g)? / (self.delta * fh * gv))
    }

    /// Measures `C_I` as the maximum quotient over `samples` random fields, single-mode probes
    /// above the cutoff and a power iteration. Deterministic given `seed`.
    pub fn estimate_interp_constant(
        &self,
        spec: &ModelSpec,
        samples: usize,
        seed: u64,
    ) -> Result<InterpConstant> {
        if samples == 0 {
            return Err(invalid("estimate_interp_constant needs samples >= 1"));
        }
        if spec.id() != self.model || spec.n() != self.n {
            return Err(Error::ModelMismatch { expected: self.model, found: spec.id() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = spec.wave().iter().cloned().fold(0.0, f64::max);
        let mut random = 0.0f64;
        for _ in 0..samples {
            let f = spec.random_field(&mut rng, top, 0.0);
            random = random.max(self.quotient(spec, &f)?);
        }

        let mut probe = 0.0f64;
        let first_out = (0..spec.dof())
            .filter(|&i| spec.band()[i] && spec.mode_index(i) > self.cutoff as f64 + CUTOFF_SLACK)
            .map(|i| spec.mode_index(i))
            .fold(f64::INFINITY, f64::min);
        if first_out.is_finite() {
            for i in 0..spec.dof() {
                if spec.band()[i] && (spec.mode_index(i) - first_out).abs() < 1e-9 {
                    let f = self.mode_probe(spec, i);
                    probe = probe.max(self.quotient(spec, &f)?);
                }
            }
        }

        let power = self.power_iteration(spec, &mut rng, 60)?;
        Ok(InterpConstant { value: random.max(probe).max(power), random, probe, power, samples })
    }

    // Unit field concentrated on entry `i` (and its conjugate partner on the torus).
    fn mode_probe(&self, spec: &ModelSpec, i: usize) -> Field {
        let mut coeffs = vec![0.0; spec.dof()];
        coeffs[i] = 1.0;
        let f = Field::from_parts(spec.id(), coeffs);
        match spec.basis() {
            Basis::Sine { .. } => f,
            Basis::Torus { .. } => {
                let mut g = f;
                let view = TorusView::new(spec);
                let comps = spec.id().components();
                for c in 0..comps {
                    crate::models::torus::symmetrize(&view, g.coeffs_mut(), c);
                }
                spec.project_to_h(&g)
            }
        }
    }

    // Largest singular value of D_* (I - I_delta) D_H^{-1} restricted to H.
    fn power_iteration(&self, spec: &ModelSpec, rng: &mut ChaCha8Rng, iters: usize) -> Result<f64> {
        let wh = spec.weights(Space::H);
        let ws = spec.weights(Space::Vstar);
        let scale = |f: &Field, w: &dyn Fn(usize) -> f64| -> Field {
            let c = f.coeffs().iter().enumerate().map(|(i, x)| if spec.band()[i] { x * w(i) } else { 0.0 });
            Field::from_parts(spec.id(), c.collect())
        };
        let top = spec.wave().iter().cloned().fold(0.0, f64::max);
        let mut x = spec.random_field(rng, top, 0.0);
        let mut sigma = 0.0;
        for _ in 0..iters {
            let nx = x.coeffs().iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx == 0.0 {
                return Ok(0.0);
            }
            x = x.scaled(1.0 / nx);
            let f = spec.project_to_h(&scale(&x, &|i| 1.0 / wh[i]));
            let r = &f - &self.apply_unchecked(spec, &f);
            let y = scale(&r, &|i| ws[i]);
            sigma = y.coeffs().iter().map(|v| v * v).sum::<f64>().sqrt();
            // adjoint: D_H^{-1} P (I - I_delta)^T D_*
            let z = spec.project_to_h(&scale(&y, &|i| ws[i]));
            let rz = &z - &self.apply_unchecked(spec, &z);
            x = spec.project_to_h(&scale(&rz, &|i| 1.0 / wh[i]));
        }
        Ok(sigma / self.delta)
    }
}

/// Well-posedness threshold `eta_0 = 2 alpha / C_I^2` on `mu delta^2`.
pub fn eta0(alpha: f64, c_i: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(c_i > 0.0) || !alpha.is_finite() || !c_i.is_finite() {
        return Err(invalid(format!("eta0 needs alpha > 0 and C_I > 0, got ({alpha}, {c_i})")));
    }
    Ok(2.0 * alpha / (c_i * c_i))
}
