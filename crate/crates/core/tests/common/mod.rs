//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use nudgelab_core::models::torus_coefficient;
use nudgelab_core::{Field, ModelId, ModelParams, ModelSpec};

pub type Modes = BTreeMap<(i64, i64), Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn spec(id: ModelId, n: usize) -> ModelSpec {
    ModelSpec::new(id, n, ModelParams::default()).unwrap()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// `int_0^1 prod_i sqrt(2) sin(k_i pi x) dx`, summed exactly over the exponential expansion.
pub fn sine_product_integral(ks: &[usize]) -> f64 {
    let r = ks.len() as u32;
    let mut total = Complex64::new(0.0, 0.0);
    for signs in 0..(1u32 << r) {
        let mut m = 0i64;
        let mut parity = 1.0;
        for (i, &k) in ks.iter().enumerate() {
            if signs >> i & 1 == 1 {
                m -= k as i64;
                parity = -parity;
            } else {
                m += k as i64;
            }
        }
        // int_0^1 exp(i m pi x) dx
        let j = if m == 0 {
            Complex64::new(1.0, 0.0)
        } else if m % 2 == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 / (m as f64 * PI))
        };
        total += j * parity;
    }
    let scale = 2f64.sqrt().powi(r as i32) / (2.0 * I).powi(r as i32);
    (total * scale).re
}

/// Galerkin `u - u^3` on the retained sine modes, by quadruple sums.
pub fn allen_cahn_oracle(spec: &ModelSpec, u: &Field) -> Vec<f64> {
    let c = u.coeffs();
    let band: Vec<usize> = (0..spec.n()).filter(|&i| spec.band()[i]).collect();
    let mut out = vec![0.0; spec.n()];
    for &k in &band {
        let mut cubic = 0.0;
        for &a in &band {
            for &b in &band {
                for &d in &band {
                    let w = c[a] * c[b] * c[d];
                    if w != 0.0 {
                        cubic += w * sine_product_integral(&[a + 1, b + 1, d + 1, k + 1]);
                    }
                }
            }
        }
        out[k] = c[k] - cubic;
    }
    out
}

/// Sine coefficients to values at `x_j = j / (n + 1)` by direct summation.
pub fn naive_sine_to_grid(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    (1..=n)
        .map(|j| {
            let x = j as f64 / (n + 1) as f64;
            c.iter().enumerate().map(|(k, ck)| ck * 2f64.sqrt() * ((k + 1) as f64 * PI * x).sin()).sum()
        })
        .collect()
}

/// Inverse of [`naive_sine_to_grid`] (the DST-I is its own inverse up to `2 / (n + 1)`).
pub fn naive_sine_from_grid(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (1..=n)
        .map(|k| {
            g.iter()
                .enumerate()
                .map(|(j, gj)| gj * 2f64.sqrt() * (k as f64 * PI * (j + 1) as f64 / (n + 1) as f64).sin())
                .sum::<f64>()
                / (n + 1) as f64
        })
        .collect()
}

/// Collocation product `a b` on the grid, by direct sums, restricted to the retained band.
pub fn sine_grid_product_oracle(spec: &ModelSpec, a: &Field, b: &Field) -> Vec<f64> {
    let ga = naive_sine_to_grid(a.coeffs());
    let gb = naive_sine_to_grid(b.coeffs());
    let prod: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
    let mut out = naive_sine_from_grid(&prod);
    for (o, keep) in out.iter_mut().zip(spec.band()) {
        if !keep {
            *o = 0.0;
        }
    }
    out
}

/// Average of `sqrt(2) sin(k pi x)` over `[x0, x1]`.
pub fn sine_cell_average(k: usize, x0: f64, x1: f64) -> f64 {
    let kp = k as f64 * PI;
    2f64.sqrt() * ((kp * x0).cos() - (kp * x1).cos()) / (kp * (x1 - x0))
}

pub fn band_keys(spec: &ModelSpec) -> Vec<(i64, i64)> {
    let c = ((spec.n() - 1) / 3) as i64;
    let mut keys = Vec::new();
    for ky in -c..=c {
        for kx in -c..=c {
            if (kx, ky) != (0, 0) {
                keys.push((kx, ky));
            }
        }
    }
    keys
}

pub fn torus_modes(spec: &ModelSpec, f: &Field, c: usize) -> Modes {
    band_keys(spec).into_iter().map(|k| (k, torus_coefficient(spec, f, c, k.0, k.1))).collect()
}

/// `((a . grad) b)_k = sum_{p + q = k} sum_j a_j(p) i q_j b(q)`, evaluated on `keys`.
pub fn convect(a: [&Modes; 2], b: &Modes, keys: &[(i64, i64)]) -> Modes {
    let mut out = Modes::new();
    for &k in keys {
        let mut s = Complex64::new(0.0, 0.0);
        for (&p, &a0) in a[0] {
            let q = (k.0 - p.0, k.1 - p.1);
            if let Some(&bq) = b.get(&q) {
                let a1 = a[1][&p];
                s += (a0 * q.0 as f64 + a1 * q.1 as f64) * I * bq;
            }
        }
        out.insert(k, s);
    }
    out
}

pub fn leray(v: [Modes; 2]) -> [Modes; 2] {
    let [mut v0, mut v1] = v;
    for (k, z0) in v0.iter_mut() {
        let z1 = v1.get_mut(k).unwrap();
        let (kx, ky) = (k.0 as f64, k.1 as f64);
        let dot = (*z0 * kx + *z1 * ky) / (kx * kx + ky * ky);
        *z0 -= dot * kx;
        *z1 -= dot * ky;
    }
    [v0, v1]
}

fn combine(a: &Modes, b: &Modes, sb: f64) -> Modes {
    a.iter().map(|(k, z)| (*k, z + b[k] * sb)).collect()
}

/// Oracle value of `F` per component, on the band keys.
pub fn torus_oracle(spec: &ModelSpec, f: &Field) -> Vec<Modes> {
    let keys = band_keys(spec);
    let m: Vec<Modes> = (0..spec.id().components()).map(|c| torus_modes(spec, f, c)).collect();
    match spec.id() {
        ModelId::NseWeak | ModelId::NseStrong => {
            let [a, b] = leray([convect([&m[0], &m[1]], &m[0], &keys), convect([&m[0], &m[1]], &m[1], &keys)]);
            vec![a.into_iter().map(|(k, z)| (k, -z)).collect(), b.into_iter().map(|(k, z)| (k, -z)).collect()]
        }
        ModelId::Qg => {
            let mut r0 = Modes::new();
            let mut r1 = Modes::new();
            for (&p, &t) in &m[0] {
                let kk = ((p.0 * p.0 + p.1 * p.1) as f64).sqrt();
                r0.insert(p, I * (-(p.1 as f64) / kk) * t);
                r1.insert(p, I * (p.0 as f64 / kk) * t);
            }
            vec![convect([&r0, &r1], &m[0], &keys).into_iter().map(|(k, z)| (k, -z)).collect()]
        }
        ModelId::Mhd => {
            let (u, h) = ([&m[0], &m[1]], [&m[2], &m[3]]);
            let [a0, a1] = leray([
                combine(&convect(h, &m[2], &keys), &convect(u, &m[0], &keys), -1.0),
                combine(&convect(h, &m[3], &keys), &convect(u, &m[1], &keys), -1.0),
            ]);
            let [b0, b1] = leray([
                combine(&convect(h, &m[0], &keys), &convect(u, &m[2], &keys), -1.0),
                combine(&convect(h, &m[1], &keys), &convect(u, &m[3], &keys), -1.0),
            ]);
            vec![a0, a1, b0, b1]
        }
        other => panic!("no torus oracle for {other:?}"),
    }
}

/// Relative l2 error of `out` against the oracle value of `F(f)`.
pub fn torus_oracle_error(spec: &ModelSpec, f: &Field, out: &Field) -> f64 {
    let oracle = torus_oracle(spec, f);
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, modes) in oracle.iter().enumerate() {
        for (&k, &z) in modes {
            num += (torus_coefficient(spec, out, c, k.0, k.1) - z).norm_sqr();
            den += z.norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// Heun's method for `u' = rhs(u)`.
pub fn heun(rhs: impl Fn(&[f64]) -> Vec<f64>, u0: &[f64], dt: f64, steps: usize, mut record: impl FnMut(usize, &[f64])) {
    let mut u = u0.to_vec();
    record(0, &u);
    for n in 0..steps {
        let k1 = rhs(&u);
        let pred: Vec<f64> = u.iter().zip(&k1).map(|(x, k)| x + dt * k).collect();
        let k2 = rhs(&pred);
        for i in 0..u.len() {
            u[i] += 0.5 * dt * (k1[i] + k2[i]);
        }
        record(n + 1, &u);
    }
}

/// `-A u + F(u)` with the operator's diagonal symbol.
pub fn semilinear_rhs(spec: &ModelSpec) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |u: &[f64]| {
        let f = spec.field(u.to_vec()).unwrap();
        let nl = spec.apply_f(&f).unwrap();
        u.iter().zip(spec.a_symbol()).zip(nl.coeffs()).map(|((x, a), g)| -a * x + g).collect()
    }
}
