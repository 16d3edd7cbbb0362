//! Surface quasi-geostrophic transport: `F(theta) = -div(theta R^perp theta)`.

use num_complex::Complex64;

use super::torus::{TorusView, I};
use crate::error::{invalid, Result};
use crate::triple::{Field, ModelSpec};

/// Spectra of a two-component vector field on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpectrum {
    pub n: usize,
    pub components: [Vec<Complex64>; 2],
}

impl VectorSpectrum {
    /// `max_k |k . v_k|`.
    pub fn max_divergence(&self) -> f64 {
        let n = self.n;
        (0..n * n)
            .map(|idx| {
                let kx = crate::spectral::wavenumber(idx % n, n) as f64;
                let ky = crate::spectral::wavenumber(idx / n, n) as f64;
                (self.components[0][idx] * kx + self.components[1][idx] * ky).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Normalised `L^2` norm, `(sum_k |v_k|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        self.components.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Multiplier `i k^perp / |k|` with `k^perp = (-k2, k1)`.
pub(crate) fn riesz_spectra(view: &TorusView<'_>, theta: &[Complex64]) -> [Vec<Complex64>; 2] {
    let nn = theta.len();
    let mut r = [vec![Complex64::new(0.0, 0.0); nn], vec![Complex64::new(0.0, 0.0); nn]];
    for idx in 0..nn {
        let (kx, ky) = view.k(idx);
        let k = (kx * kx + ky * ky).sqrt();
        if k == 0.0 {
            continue;
        }
        r[0][idx] = I * (-ky / k) * theta[idx];
        r[1][idx] = I * (kx / k) * theta[idx];
    }
    r
}

pub(crate) fn riesz_perp(spec: &ModelSpec, theta: &Field) -> Result<VectorSpectrum> {
    spec.check(theta)?;
    let view = TorusView::new(spec);
    let s = view.spectrum(theta.coeffs(), 0);
    if s[0].norm() != 0.0 {
        return Err(invalid("R^perp requires a mean-zero scalar"));
    }
    Ok(VectorSpectrum { n: spec.n(), components: riesz_spectra(&view, &s) })
}

pub(crate) fn transport(spec: &ModelSpec, theta: &Field) -> Field {
    let view = TorusView::new(spec);
    let s = view.spectrum(theta.coeffs(), 0);
    let [r0, r1] = riesz_spectra(&view, &s);
    let g = view.grid(&s);
    let q0 = view.transform(&TorusView::product(&g, &view.grid(&r0)));
    let q1 = view.transform(&TorusView::product(&g, &view.grid(&r1)));
    let out_spec: Vec<Complex64> = (0..s.len())
        .map(|idx| {
            let (kx, ky) = view.k(idx);
            -I * (kx * q0[idx] + ky * q1[idx])
        })
        .collect();
    let mut out = vec![0.0; spec.dof()];
    view.store(&mut out, 0, &out_spec);
    Field::from_parts(spec.id, out)
}
