//! Shared torus plumbing: component extraction, spectral derivatives, Leray projection.

use num_complex::Complex64;

use crate::spectral::{wavenumber, TorusTransform};
use crate::triple::ModelSpec;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) struct TorusView<'a> {
    pub spec: &'a ModelSpec,
    pub fft: &'a TorusTransform,
    pub n: usize,
}

impl<'a> TorusView<'a> {
    pub fn new(spec: &'a ModelSpec) -> Self {
        let fft = spec.torus.as_ref().expect("torus model without transform");
        Self { spec, fft, n: spec.n() }
    }

    /// `(kx, ky)` at flat grid index `iy * n + ix`.
    #[inline]
    pub fn k(&self, idx: usize) -> (f64, f64) {
        let (iy, ix) = (idx / self.n, idx % self.n);
        (wavenumber(ix, self.n) as f64, wavenumber(iy, self.n) as f64)
    }

    pub fn spectrum(&self, coeffs: &[f64], c: usize) -> Vec<Complex64> {
        let nn = self.n * self.n;
        let base = 2 * c * nn;
        (0..nn).map(|i| Complex64::new(coeffs[base + 2 * i], coeffs[base + 2 * i + 1])).collect()
    }

    /// Writes a component spectrum into `out`, zeroing entries outside the retained band.
    pub fn store(&self, out: &mut [f64], c: usize, spec: &[Complex64]) {
        let nn = self.n * self.n;
        let base = 2 * c * nn;
        for (i, z) in spec.iter().enumerate() {
            let e = base + 2 * i;
            if self.spec.band[e] {
                out[e] = z.re;
                out[e + 1] = z.im;
            } else {
                out[e] = 0.0;
                out[e + 1] = 0.0;
            }
        }
    }

    pub fn grid(&self, spec: &[Complex64]) -> Vec<f64> {
        self.fft.to_grid(spec)
    }

    pub fn component_grid(&self, coeffs: &[f64], c: usize) -> Vec<f64> {
        self.grid(&self.spectrum(coeffs, c))
    }

    pub fn transform(&self, grid: &[f64]) -> Vec<Complex64> {
        self.fft.from_grid(grid)
    }

    /// Spectral partial derivative along axis 0 (x) or 1 (y).
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        spec.iter()
            .enumerate()
            .map(|(idx, z)| {
                let (kx, ky) = self.k(idx);
                let k = if axis == 0 { kx } else { ky };
                I * k * z
            })
            .collect()
    }

    /// Divergence of the symmetric or general tensor `t[i][j]` (spectra): `sum_j d_j t_ij`.
    pub fn tensor_divergence(&self, t: [[&[Complex64]; 2]; 2]) -> [Vec<Complex64>; 2] {
        let nn = self.n * self.n;
        let mut out = [vec![Complex64::new(0.0, 0.0); nn], vec![Complex64::new(0.0, 0.0); nn]];
        for idx in 0..nn {
            let (kx, ky) = self.k(idx);
            for (i, o) in out.iter_mut().enumerate() {
                o[idx] = I * (kx * t[i][0][idx] + ky * t[i][1][idx]);
            }
        }
        out
    }

    pub fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x * y).collect()
    }
}

/// In-place Leray projection `u_k -> (I - k k^T / |k|^2) u_k`; the mean mode is zeroed.
pub(crate) fn leray_in_place(view: &TorusView<'_>, u1: &mut [Complex64], u2: &mut [Complex64]) {
    for idx in 0..u1.len() {
        let (kx, ky) = view.k(idx);
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            u1[idx] = Complex64::new(0.0, 0.0);
            u2[idx] = Complex64::new(0.0, 0.0);
            continue;
        }
        let dot = u1[idx] * kx + u2[idx] * ky;
        u1[idx] -= dot * (kx / k2);
        u2[idx] -= dot * (ky / k2);
    }
}

/// Leray projection of the vector pair of components `(c, c + 1)` stored in `coeffs`.
pub(crate) fn leray_coeffs(view: &TorusView<'_>, coeffs: &mut [f64], c: usize) {
    let mut u1 = view.spectrum(coeffs, c);
    let mut u2 = view.spectrum(coeffs, c + 1);
    leray_in_place(view, &mut u1, &mut u2);
    view.store(coeffs, c, &u1);
    view.store(coeffs, c + 1, &u2);
}

/// `max_k |k . u_k|` for the vector pair at components `(c, c + 1)`.
pub(crate) fn max_divergence(view: &TorusView<'_>, coeffs: &[f64], c: usize) -> f64 {
    let u1 = view.spectrum(coeffs, c);
    let u2 = view.spectrum(coeffs, c + 1);
    (0..u1.len())
        .map(|idx| {
            let (kx, ky) = view.k(idx);
            (u1[idx] * kx + u2[idx] * ky).norm()
        })
        .fold(0.0, f64::max)
}

/// Replaces each coefficient by the Hermitian-symmetric average so the field is real-valued.
pub(crate) fn symmetrize(view: &TorusView<'_>, coeffs: &mut [f64], c: usize) {
    let n = view.n;
    let mut s = view.spectrum(coeffs, c);
    let orig = s.clone();
    for iy in 0..n {
        for ix in 0..n {
            let j = ((n - iy) % n) * n + (n - ix) % n;
            s[iy * n + ix] = 0.5 * (orig[iy * n + ix] + orig[j].conj());
        }
    }
    view.store(coeffs, c, &s);
}
