//! Two-dimensional magnetohydrodynamics on the torus, `Phi = (u, h)`.
//!
//! Velocity block: `-P div(u (x) u) + P div(h (x) h)`.
//! Magnetic block: `P((h . grad) u - (u . grad) h) = curl^perp` of the scalar
//! `m = h1 u2 - u1 h2`, which is divergence-free by construction.

use num_complex::Complex64;

use super::navier_stokes::advection_symmetric;
use super::torus::{leray_in_place, TorusView, I};
use crate::triple::{Field, ModelSpec};

pub(crate) fn nonlinearity(spec: &ModelSpec, phi: &Field) -> Field {
    let view = TorusView::new(spec);
    let c = phi.coeffs();
    let u: Vec<Vec<f64>> = (0..2).map(|k| view.component_grid(c, k)).collect();
    let h: Vec<Vec<f64>> = (2..4).map(|k| view.component_grid(c, k)).collect();

    let [uu0, uu1] = advection_symmetric(&view, [&u[0], &u[1]]);
    let [hh0, hh1] = advection_symmetric(&view, [&h[0], &h[1]]);
    let mut v0: Vec<Complex64> = hh0.iter().zip(&uu0).map(|(a, b)| a - b).collect();
    let mut v1: Vec<Complex64> = hh1.iter().zip(&uu1).map(|(a, b)| a - b).collect();
    leray_in_place(&view, &mut v0, &mut v1);

    let m: Vec<f64> = (0..u[0].len()).map(|i| h[0][i] * u[1][i] - u[0][i] * h[1][i]).collect();
    let m_hat = view.transform(&m);
    let mut b0 = vec![Complex64::new(0.0, 0.0); m_hat.len()];
    let mut b1 = b0.clone();
    for idx in 0..m_hat.len() {
        let (kx, ky) = view.k(idx);
        b0[idx] = -I * ky * m_hat[idx];
        b1[idx] = I * kx * m_hat[idx];
    }
    leray_in_place(&view, &mut b0, &mut b1);

    let mut out = vec![0.0; spec.dof()];
    view.store(&mut out, 0, &v0);
    view.store(&mut out, 1, &v1);
    view.store(&mut out, 2, &b0);
    view.store(&mut out, 3, &b1);
    Field::from_parts(spec.id, out)
}
