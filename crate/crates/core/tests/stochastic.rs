mod common;

use common::*;
use nudgelab_core::integrator::{simulate_pair, stochastic_convolution, CounterNoise, RefinedNoise, ReferencePath};
use nudgelab_core::noise::{gamma_u_sup, stream_rng};
use nudgelab_core::{
    Experiment, Field, ModelId, NoiseKind, NoiseModel, ObservationKind, ObservationOperator, QSpec, RunConfig,
    Space, StepConfig, Stepper,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn increment_covariance_is_lambda_squared_dt() {
    let s = spec(ModelId::Heat, 32);
    let q = QSpec::power_law(&s, 4, 1.0).unwrap();
    let dt = 1e-3;
    let draws = 100_000;
    let coords: Vec<Vec<f64>> = (0..draws)
        .map(|i| {
            let dw = q.sample_increment(&s, &mut stream_rng(3, 0, i), dt).unwrap();
            (0..q.rank()).map(|d| q.coordinate(&s, &dw, d)).collect()
        })
        .collect();
    for d in 0..q.rank() {
        for e in d..q.rank() {
            let prods: Vec<f64> = coords.iter().map(|c| c[d] * c[e]).collect();
            let (m, se) = mean_se(&prods);
            let want = if d == e { q.lambda()[d].powi(2) * dt } else { 0.0 };
            assert!((m - want).abs() <= 3.0 * se, "({d}, {e}): {m:e} vs {want:e} (se {se:e})");
        }
    }
}

#[test]
fn increment_variance_scales_with_dt() {
    let s = spec(ModelId::AcWeak, 16);
    let q = QSpec::power_law(&s, 1, 1.0).unwrap();
    let var = |dt: f64, stream: u64| {
        let sq: Vec<f64> = (0..50_000)
            .map(|i| q.coordinate(&s, &q.sample_increment(&s, &mut stream_rng(4, stream, i), dt).unwrap(), 0).powi(2))
            .collect();
        mean_se(&sq)
    };
    let (v1, s1) = var(1e-3, 0);
    let (v4, s4) = var(4e-3, 1);
    let ratio = v4 / v1;
    let se = ratio * ((s1 / v1).powi(2) + (s4 / v4).powi(2)).sqrt();
    assert!((ratio - 4.0).abs() <= 3.0 * se, "ratio {ratio} (se {se})");
}

#[test]
fn attractor_vanishing_noise_is_zero_at_the_attractor() {
    let s = spec(ModelId::AcWeak, 16);
    let q = QSpec::power_law(&s, 4, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = s.random_field(&mut rng, 4.0, 0.0);
    let g = NoiseModel::new(NoiseKind::AttractorVanishing, 2.0, 0.25, 0.0).unwrap().with_attractor(a.clone());
    let dw = q.sample_increment(&s, &mut rng, 1e-2).unwrap();
    assert!(g.apply(&s, &a, &dw).unwrap().coeffs().iter().all(|&x| x == 0.0));
    assert_eq!(g.hs_norm_sq(&s, &a, &q).unwrap(), 0.0);
    assert!(g.hs_norm_sq(&s, &s.zeros(), &q).unwrap() > 0.0);
}

#[test]
fn hilbert_schmidt_norms_of_scalar_kinds() {
    let s = spec(ModelId::AcWeak, 32);
    let q = QSpec::power_law(&s, 6, 1.0).unwrap();
    let sigma = 0.3;
    let trace: f64 = q.lambda().iter().map(|l| l * l).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = s.random_field(&mut rng, 8.0, 0.0);
    let u = u.scaled(2.0 / s.norm(&u, Space::H).unwrap());
    let add = NoiseModel::new(NoiseKind::Additive, sigma, 0.1, 0.0).unwrap();
    let scaled = NoiseModel::new(NoiseKind::StateScaled, sigma, 0.1, 0.0).unwrap();
    let want = sigma * sigma * trace;
    assert!((add.hs_norm_sq(&s, &u, &q).unwrap() - want).abs() < 1e-14);
    assert!((scaled.hs_norm_sq(&s, &u, &q).unwrap() - 4.0 * want).abs() < 1e-13);
    let half = NoiseModel::new(NoiseKind::Additive, sigma, 0.25, 0.5).unwrap();
    assert!((half.sigma_delta() - 0.5 * sigma).abs() < 1e-15);
}

fn stepper_parts(id: ModelId, n: usize, cutoff: usize, kind: NoiseKind, sigma: f64) -> (nudgelab_core::ModelSpec, ObservationOperator, NoiseModel, QSpec) {
    let s = spec(id, n);
    let op = ObservationOperator::with_cutoff(&s, ObservationKind::Modal, cutoff).unwrap();
    let noise = NoiseModel::new(kind, sigma, op.delta(), 0.0).unwrap();
    let q = QSpec::power_law(&s, cutoff, 1.0).unwrap();
    (s, op, noise, q)
}

#[test]
fn attractor_vanishing_supremum_is_at_the_start_of_a_decaying_path() {
    let (s, op, noise, q) = stepper_parts(ModelId::Heat, 32, 4, NoiseKind::AttractorVanishing, 1.0);
    let st = Stepper::new(&s, &op, &noise, &q, StepConfig::new(1e-3, 0.5, 10.0).unwrap()).unwrap();
    let u0 = s.random_field(&mut ChaCha8Rng::seed_from_u64(7), 8.0, 0.5);
    let path = ReferencePath::compute(&st, &u0).unwrap();
    assert_eq!(gamma_u_sup(&path.hs_norm_sq).unwrap(), path.hs_norm_sq[0]);
    assert!(path.hs_norm_sq.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn strong_allen_cahn_norm_is_nonincreasing() {
    let (s, op, noise, q) = stepper_parts(ModelId::AcStrong, 64, 8, NoiseKind::Additive, 0.0);
    let st = Stepper::new(&s, &op, &noise, &q, StepConfig::new(1e-4, 0.5, 0.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for norm in [0.25, 0.5, 1.0] {
        let u0 = s.random_field(&mut rng, 16.0, 0.5);
        let u0 = u0.scaled(norm / s.norm(&u0, Space::H).unwrap());
        let path = ReferencePath::compute(&st, &u0).unwrap();
        for w in path.u_h.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14), "{} > {}", w[1], w[0]);
        }
    }
}

#[test]
fn convolution_splits_the_estimate_exactly() {
    // with explicit nudging, v - Z obeys a noise-free recursion driven by u and Z
    let (s, op, noise, q) = stepper_parts(ModelId::AcWeak, 32, 4, NoiseKind::Additive, 0.5);
    let cfg = StepConfig::new(1e-3, 0.5, 20.0).unwrap();
    let st = Stepper::new(&s, &op, &noise, &q, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u0 = s.random_field(&mut rng, 4.0, 0.5);
    let v0 = s.random_field(&mut rng, 4.0, 0.5);
    let source = CounterNoise { master: 21, member: 3 };
    let path = ReferencePath::compute(&st, &u0).unwrap();
    let run = simulate_pair(&st, &u0, &v0, &source, Some(&path), false).unwrap();
    let z = stochastic_convolution(&st, &path, &source, 1).unwrap();

    let (dt, mu) = (cfg.dt, cfg.mu);
    let mut vh = v0.clone();
    for ((_, zn), un) in z.iter().zip(&path.states).take(cfg.steps()) {
        let v = &vh + zn;
        let mut rhs = vh.axpy(dt, &s.apply_f(&v).unwrap());
        rhs = rhs.axpy(-dt * mu, &op.apply(&s, &v).unwrap());
        rhs = rhs.axpy(dt * mu, &op.apply(&s, un).unwrap());
        let c: Vec<f64> = rhs.coeffs().iter().zip(s.a_symbol()).map(|(r, a)| r / (1.0 + dt * a)).collect();
        vh = s.field(c).unwrap();
    }
    let split = &run.final_state.v - &z.last().unwrap().1;
    let defect = s.norm(&(&split - &vh), Space::H).unwrap() / s.norm(&vh, Space::H).unwrap();
    assert!(defect < 1e-12, "{defect:e}");
}

#[test]
fn emitted_observation_terms_are_consistent() {
    let (s, op, noise, q) = stepper_parts(ModelId::AcWeak, 32, 4, NoiseKind::StateScaled, 0.7);
    let cfg = StepConfig::new(1e-3, 0.2, 30.0).unwrap();
    let st = Stepper::new(&s, &op, &noise, &q, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let u0 = s.random_field(&mut rng, 4.0, 0.5);
    let source = CounterNoise { master: 1, member: 0 };
    let run = simulate_pair(&st, &u0, &s.zeros(), &source, None, true).unwrap();
    let path = ReferencePath::compute(&st, &u0).unwrap();
    let y = run.series.y.unwrap();
    assert_eq!((y.y_h[0], y.drift_h[0], y.noise_h[0], y.cross[0]), (0.0, 0.0, 0.0, 0.0));
    for n in 1..y.y_h.len() {
        let u = &path.states[n - 1];
        let drift = op.apply(&s, u).unwrap().scaled(cfg.dt);
        let dw = nudgelab_core::integrator::NoiseSource::increment(&source, &s, &q, n - 1, cfg.dt);
        let g = noise.apply(&s, u, &dw).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        assert!(close(y.drift_h[n], s.norm(&drift, Space::H).unwrap()));
        assert!(close(y.noise_h[n], s.norm(&g, Space::H).unwrap()));
        assert!(close(y.cross[n], s.inner_h(&drift, &g).unwrap()));
        let sum = y.drift_h[n].powi(2) + y.noise_h[n].powi(2) + 2.0 * y.cross[n];
        assert!((y.y_h[n].powi(2) - sum).abs() <= 1e-12 * sum);
    }
}

/// RMS over members of `||v_dt(T) - v_ref(T)||_H`, all runs driven by one fine Brownian path.
fn strong_error(exp: &Experiment, dt_ref: f64, factors: &[usize], members: u64) -> Vec<f64> {
    let run = |factor: usize, member: u64| -> Field {
        let cfg = StepConfig { dt: dt_ref * factor as f64, ..exp.step };
        let st = Stepper::new(&exp.spec, &exp.op, &exp.noise, &exp.q, cfg).unwrap();
        let src = RefinedNoise { fine: CounterNoise { master: 77, member }, factor };
        simulate_pair(&st, &exp.u0, &exp.v0, &src, None, false).unwrap().final_state.v
    };
    let mut sq = vec![0.0; factors.len()];
    for m in 0..members {
        let reference = run(1, m);
        for (i, &f) in factors.iter().enumerate() {
            sq[i] += exp.spec.norm(&(&run(f, m) - &reference), Space::H).unwrap().powi(2);
        }
    }
    sq.iter().map(|s| (s / members as f64).sqrt()).collect()
}

#[test]
fn additive_noise_strong_order_is_one() {
    let mut cfg = RunConfig::defaults(ModelId::AcWeak);
    cfg.model.n = Some(16);
    cfg.observation.scale = nudgelab_core::config::ObservationScale::Cutoff(4);
    cfg.noise.sigma = 1.0;
    cfg.nudging.mu = 10.0;
    cfg.time.t_end = 0.5;
    let exp = Experiment::from_config(&cfg).unwrap();
    let errs = strong_error(&exp, 1.5625e-5, &[64, 32, 16], 32);
    let slopes: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    for p in &slopes {
        assert!((0.8..=1.2).contains(p), "errors {errs:?}, exponents {slopes:?}");
    }
}
