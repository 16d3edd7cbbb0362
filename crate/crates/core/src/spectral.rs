//! Collocation transforms used by the pseudo-spectral nonlinearities.
//!
//! Two bases are supported:
//!
//! * the Dirichlet sine basis `e_k(x) = sqrt(2) sin(k pi x)` on `(0, 1)`, collocated at
//!   `x_j = j / (n + 1)` through a type-I discrete sine transform;
//! * the Fourier basis `exp(i k.x)` on the torus `[0, 2 pi)^2` with the normalised measure
//!   `dx / (2 pi)^2`, collocated on the uniform `n x n` grid.
//!
//! Both transforms are orthonormal with respect to the coefficient layout of
//! [`Field`](crate::triple::Field), so grid round trips are exact up to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// DST-I realised through a complex FFT of length `2 (n + 1)`.
#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, plan }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid abscissae `x_j = j / (n + 1)`, `j = 1..=n`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|j| j as f64 / (self.n + 1) as f64).collect()
    }

    // s_j = sum_k x_k sin(pi j k / (n + 1)) for j, k = 1..=n
    fn raw(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let m = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, &xk) in x.iter().enumerate() {
            buf[k + 1].re = xk;
            buf[m - k - 1].re = -xk;
        }
        self.plan.process(&mut buf);
        (1..=n).map(|j| -0.5 * buf[j].im).collect()
    }

    /// Orthonormal sine coefficients to grid values.
    pub fn to_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        let mut out = self.raw(coeffs);
        out.iter_mut().for_each(|v| *v *= std::f64::consts::SQRT_2);
        out
    }

    /// Grid values to orthonormal sine coefficients (exact inverse of [`Self::to_grid`]).
    pub fn from_grid(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.n);
        let scale = std::f64::consts::SQRT_2 / (self.n + 1) as f64;
        let mut out = self.raw(values);
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

/// Signed integer wavenumber of FFT index `i` on an `n`-point periodic grid.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Two-dimensional complex FFT on an `n x n` row-major grid.
///
/// `forward` maps grid values to normalised Fourier coefficients `u_k = n^-2 sum_j u(x_j) e^{-i k.x_j}`,
/// `inverse` evaluates `sum_k u_k e^{i k.x_j}`.
#[derive(Clone)]
pub struct TorusTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TorusTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusTransform").field("n", &self.n).finish()
    }
}

impl TorusTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.n;
        for r in 0..n {
            for c in (r + 1)..n {
                data.swap(r * n + c, c * n + r);
            }
        }
    }

    fn both_axes(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        plan.process(data);
        self.transpose(data);
        plan.process(data);
        self.transpose(data);
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n * self.n);
        self.both_axes(&self.fwd, data);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n * self.n);
        self.both_axes(&self.inv, data);
    }

    /// Real grid values from spectral coefficients (imaginary round-off discarded).
    pub fn to_grid(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn from_grid(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Collocation points along one axis, `2 pi j / n`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| 2.0 * PI * j as f64 / self.n as f64).collect()
    }
}
