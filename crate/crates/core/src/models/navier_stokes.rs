//! Two-dimensional Navier-Stokes nonlinearity `B(u, u) = -P((u . grad) u)` on the torus.
//!
//! The same kernel serves the weak (`H = L^2_sigma`) and strong (`H = H^1_sigma`) triples;
//! only the norms and the pairing differ. The advection term is evaluated in conservative form
//! `div(u (x) u)`, which equals `(u . grad) u` for divergence-free `u`; with 2/3-rule inputs
//! the retained coefficients are exact.

use num_complex::Complex64;

use super::torus::{leray_in_place, TorusView};
use crate::triple::{Field, ModelSpec};

pub(crate) fn advection_symmetric(view: &TorusView<'_>, u: [&[f64]; 2]) -> [Vec<Complex64>; 2] {
    let p00 = view.transform(&TorusView::product(u[0], u[0]));
    let p01 = view.transform(&TorusView::product(u[0], u[1]));
    let p11 = view.transform(&TorusView::product(u[1], u[1]));
    view.tensor_divergence([[&p00, &p01], [&p01, &p11]])
}

pub(crate) fn nonlinearity(spec: &ModelSpec, u: &Field) -> Field {
    let view = TorusView::new(spec);
    let g0 = view.component_grid(u.coeffs(), 0);
    let g1 = view.component_grid(u.coeffs(), 1);
    let [mut n0, mut n1] = advection_symmetric(&view, [&g0, &g1]);
    leray_in_place(&view, &mut n0, &mut n1);
    let mut out = vec![0.0; spec.dof()];
    n0.iter_mut().chain(n1.iter_mut()).for_each(|z| *z = -*z);
    view.store(&mut out, 0, &n0);
    view.store(&mut out, 1, &n1);
    Field::from_parts(spec.id, out)
}
