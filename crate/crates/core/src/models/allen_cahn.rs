//! Allen-Cahn reaction term `F(u) = u - u^3` in the Dirichlet sine basis.
//!
//! The cubic is evaluated by collocation. With inputs restricted to modes `k <= n/2` the
//! product `u^3` (modes up to `3n/2`) aliases only onto modes above `n/2`, so the retained
//! coefficients are exact.

use crate::triple::{Field, ModelSpec};

pub(crate) fn reaction(spec: &ModelSpec, u: &Field) -> Field {
    let t = spec.sine.as_ref().expect("sine model without transform");
    let grid = t.to_grid(u.coeffs());
    let f: Vec<f64> = grid.iter().map(|&x| x - x * x * x).collect();
    let coeffs = t.from_grid(&f);
    spec.field(coeffs).expect("transform preserves length")
}

/// Grid product of two sine series, transformed back and truncated to the retained band.
pub(crate) fn pointwise(spec: &ModelSpec, a: &Field, b: &Field) -> Field {
    let t = spec.sine.as_ref().expect("sine model without transform");
    let ga = t.to_grid(a.coeffs());
    let gb = t.to_grid(b.coeffs());
    let prod: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
    spec.field(t.from_grid(&prod)).expect("transform preserves length")
}
