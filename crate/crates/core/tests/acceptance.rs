//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use nudgelab_core::config::{InitialEstimate, ObservationScale};
use nudgelab_core::harness::{
    convolution_check, default_fit_window, estimate_noise_floor, fit_decay_rate, run_ensemble, sweep,
    verify_assumptions, EnsembleResult, SweepGrid, VerifyOptions,
};
use nudgelab_core::integrator::ReferencePath;
use nudgelab_core::io::{ensemble_csv, manifest, series_csv, ManifestInfo};
use nudgelab_core::{
    eta0, parse_config, Execution, Experiment, ModelId, NoiseKind, NormConvention, ObservationKind, RunConfig,
    Space,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ensemble(cfg: &RunConfig) -> Result<(Experiment, EnsembleResult), String> {
    let exp = Experiment::from_config(cfg).map_err(|e| e.to_string())?;
    let res = run_ensemble(&exp, cfg.ensemble.members, cfg.ensemble.seed, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    Ok((exp, res))
}

fn sync_ratio(cfg: &RunConfig) -> Result<(f64, f64, f64), String> {
    let start = Instant::now();
    let (_, res) = ensemble(cfg)?;
    let w = &res.sample.w_h;
    let ratio = w.last().unwrap() / w[0];
    let window = default_fit_window(&res.times, &res.mean_w_h2, 0.0);
    let gamma = fit_decay_rate(&res.times, &res.mean_w_h2, window).map_err(|e| e.to_string())?.gamma;
    Ok((ratio, gamma, start.elapsed().as_secs_f64()))
}

fn zero_noise_synchronization() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let mut weak = RunConfig::defaults(ModelId::AcWeak);
    weak.time.t_end = 4.0;
    let mut strong = weak.clone();
    strong.model.id = ModelId::AcStrong;
    let mut nse = RunConfig::defaults(ModelId::NseStrong);
    nse.model.n = Some(64);
    nse.time.t_end = 2.0;
    nse.nudging.mu = 100.0;
    for (name, cfg, tol) in [("ac_weak", weak, 1e-6), ("ac_strong", strong, 1e-6), ("nse_strong 64^2", nse, 1e-4)] {
        let (ratio, gamma, secs) = sync_ratio(&cfg)?;
        ok &= ratio <= tol && gamma > 0.0;
        details.push(format!("{name}: |w(T)|/|w(0)| = {ratio:.2e} (<= {tol:.0e}), gamma = {gamma:.1} in {secs:.1}s"));
    }
    check(ok, details.join("; "))
}

fn tail_floor(cfg: &RunConfig) -> Result<f64, String> {
    let (exp, res) = ensemble(cfg)?;
    estimate_noise_floor(&res.times, &res.member_w_h2(), 0.5 * exp.step.t_end)
        .map(|f| f.value)
        .map_err(|e| e.to_string())
}

fn noise_floor_scaling() -> Outcome {
    let mut cfg = RunConfig::defaults(ModelId::AcWeak);
    cfg.time.t_end = 2.0;
    cfg.ensemble.members = 64;
    cfg.ensemble.seed = 11;
    cfg.noise.kind = NoiseKind::Additive;
    let sigma = 1e-2;
    let mut floors = Vec::new();
    for s in [0.0, sigma, 2.0 * sigma] {
        cfg.noise.sigma = s;
        floors.push(tail_floor(&cfg)?);
    }
    let ratio = floors[2] / floors[1];
    let over_zero = floors[1] / floors[0].max(f64::MIN_POSITIVE);
    check(
        (3.0..=5.0).contains(&ratio) && over_zero >= 1e3,
        format!(
            "floor(2 sigma)/floor(sigma) = {ratio:.3} in [3, 5]; floor(sigma) = {:.3e} vs floor(0) = {:.3e} (x{over_zero:.1e})",
            floors[1], floors[0]
        ),
    )
}

fn v_star_ordering() -> Outcome {
    let mut states = 0usize;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for id in ModelId::ALL {
        let mut cfg = RunConfig::defaults(id);
        cfg.model.n = Some(if id.is_torus() { 16 } else { 64 });
        cfg.observation.scale = ObservationScale::Cutoff(if id.is_torus() { 3 } else { 8 });
        cfg.noise.sigma = 0.1;
        cfg.time.t_end = 0.5;
        cfg.ensemble.members = 4;
        let (exp, res) = ensemble(&cfg)?;
        let c_emb = exp.spec.embedding_vstar_h();
        let s = &res.sample;
        for (vs, h) in s.w_vstar.iter().zip(&s.w_h) {
            states += 1;
            if *h > 0.0 {
                worst = worst.max(vs / (c_emb * h));
            }
            if *vs > c_emb * h * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    check(
        violations == 0,
        format!("{violations} violations over {states} states of all seven models; max |w|_V*/(c_emb |w|_H) = {worst:.6}"),
    )
}

fn tail_convergence() -> Outcome {
    let mut cfg = RunConfig::defaults(ModelId::AcStrong);
    cfg.model.n = Some(32);
    cfg.noise.kind = NoiseKind::StateScaled;
    cfg.noise.sigma = 1.0;
    cfg.init.u0_norm = 0.5;
    cfg.time.t_end = 12.0;
    cfg.ensemble.members = 32;
    cfg.ensemble.seed = 4;
    let (_, res) = ensemble(&cfg)?;
    let med = res.median_tail_sup(&[2.0, 4.0, 8.0]).map_err(|e| e.to_string())?;
    let ratio = med[2] / med[0];
    check(
        med[0] > med[1] && med[1] > med[2] && ratio <= 0.5,
        format!(
            "median tail_sup at N = 2, 4, 8: {:.3e}, {:.3e}, {:.3e}; tail_sup(8)/tail_sup(2) = {ratio:.2e}",
            med[0], med[1], med[2]
        ),
    )
}

fn convolution_isometry() -> Outcome {
    let start = Instant::now();
    let mut cfg = RunConfig::defaults(ModelId::Heat);
    cfg.model.n = Some(8);
    cfg.observation.scale = ObservationScale::Cutoff(4);
    cfg.noise.sigma = 1.0;
    cfg.nudging.mu = 1.0;
    cfg.time.dt = 1e-4;
    cfg.time.t_end = 0.2;
    let exp = Experiment::from_config(&cfg).map_err(|e| e.to_string())?;
    let report = convolution_check(&exp, 10_000, 5, Execution::Parallel).map_err(|e| e.to_string())?;
    let worst = report
        .probes
        .iter()
        .map(|p| (p.empirical - p.exact).abs() / p.se)
        .fold(0.0, f64::max);
    check(
        report.probes.len() == 9 && report.all_pass(),
        format!(
            "{} mode/time probes over 10^4 paths, worst deviation {worst:.2} s.e. (<= 3) in {:.1}s",
            report.probes.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn cancellation_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut details = Vec::new();
    let mut ok = true;
    for id in [ModelId::NseWeak, ModelId::Qg, ModelId::Mhd, ModelId::NseStrong] {
        let s = spec(id, 32);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let phi = s.random_field(&mut rng, 64.0, 0.0);
            let f = s.apply_f(&phi).map_err(|e| e.to_string())?;
            let pair = s.pairing(&f, &phi).map_err(|e| e.to_string())?;
            let scale = s.norm(&f, Space::Vstar).unwrap() * s.norm(&phi, Space::V).unwrap();
            worst = worst.max(pair.abs() / scale);
        }
        ok &= worst <= 1e-10;
        details.push(format!("{}: {worst:.1e}", id.name()));
    }
    check(ok, format!("max relative residual over 100 fields: {}", details.join(", ")))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for id in [ModelId::AcWeak, ModelId::AcStrong] {
        let s = spec(id, 16);
        for _ in 0..5 {
            let u = s.random_field(&mut rng, 8.0, 0.0).scaled(2.0);
            let f = s.apply_f(&u).unwrap();
            worst = worst.max(rel_l2(f.coeffs(), &allen_cahn_oracle(&s, &u)));
        }
    }
    for id in [ModelId::NseWeak, ModelId::NseStrong, ModelId::Qg, ModelId::Mhd] {
        let s = spec(id, 8);
        for _ in 0..5 {
            let u = s.random_field(&mut rng, 8.0, 0.0);
            let f = s.apply_f(&u).unwrap();
            worst = worst.max(torus_oracle_error(&s, &u, &f));
        }
    }
    let imex_nse = imex_vs_heun(ModelId::NseWeak, 4, 1e-4, 5.0);
    let imex_ac = imex_vs_heun(ModelId::AcWeak, 16, 2.5e-5, 1.0);
    check(
        worst <= 1e-12 && imex_nse <= 1e-3 && imex_ac <= 1e-3,
        format!(
            "nonlinearities vs direct sums: max rel error {worst:.1e}; IMEX vs Heun(dt/100) on 8 modes: nse_weak {imex_nse:.1e}, ac_weak {imex_ac:.1e}"
        ),
    )
}

fn imex_vs_heun(id: ModelId, n: usize, dt: f64, norm: f64) -> f64 {
    use nudgelab_core::{NoiseModel, ObservationOperator, QSpec, StepConfig, Stepper};
    let s = spec(id, n);
    let op = ObservationOperator::with_cutoff(&s, ObservationKind::Modal, 1).unwrap();
    let noise = NoiseModel::new(NoiseKind::Additive, 0.0, op.delta(), 0.0).unwrap();
    let q = QSpec::power_law(&s, 1, 1.0).unwrap();
    let cfg = StepConfig::new(dt, 1.0, 0.0).unwrap();
    let st = Stepper::new(&s, &op, &noise, &q, cfg).unwrap();
    let u0 = s.random_field(&mut ChaCha8Rng::seed_from_u64(7), 8.0, 0.5);
    let u0 = u0.scaled(norm / s.norm(&u0, Space::H).unwrap());
    let fine = 100;
    let mut reference = Vec::new();
    heun(semilinear_rhs(&s), u0.coeffs(), dt / fine as f64, cfg.steps() * fine, |i, u| {
        if i % fine == 0 {
            reference.push(u.to_vec());
        }
    });
    let mut u = u0;
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for (i, r) in reference.iter().enumerate() {
        if i > 0 {
            u = st.reference_step(&u);
        }
        worst = worst.max(u.coeffs().iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
        scale = scale.max(r.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    worst / scale
}

fn threshold_formula() -> Outcome {
    let mut ok = true;
    for (a, c, want) in [(1.0, 0.5, 8.0), (0.75, 0.25, 24.0), (2.0, 1.0, 4.0)] {
        ok &= eta0(a, c).unwrap() == want;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        use rand::Rng;
        let (a, c): (f64, f64) = (rng.random_range(0.01..10.0), rng.random_range(0.01..10.0));
        ok &= eta0(a, c).unwrap() == 2.0 * a / (c * c);
    }
    let formula_ok = ok;

    let mut cfg = RunConfig::defaults(ModelId::AcWeak);
    cfg.model.n = Some(32);
    cfg.time.t_end = 0.5;
    cfg.ensemble.members = 2;
    let grid = SweepGrid::parse("mu=0,10,100,2000;delta=0.25,0.125,0.0625").unwrap();
    let cells = sweep(&cfg, &grid, Execution::Parallel).map_err(|e| e.to_string())?;
    let mut flagged = 0;
    let mut mismatches = 0;
    for c in &cells {
        let mut ccfg = cfg.clone();
        ccfg.observation.scale = ObservationScale::Delta(c.delta);
        let exp = Experiment::from_config(&ccfg).map_err(|e| e.to_string())?;
        let alpha_hat = exp.spec.measured_alpha();
        let c_i = exp.op.estimate_interp_constant(&exp.spec, 32, cfg.ensemble.seed).unwrap().value;
        let expected = c.mu * c.delta * c.delta > 2.0 * alpha_hat / (c_i * c_i);
        mismatches += usize::from(expected != c.beyond_threshold);
        flagged += usize::from(c.beyond_threshold);
    }
    ok &= mismatches == 0 && flagged > 0 && flagged < cells.len();
    check(
        ok,
        format!(
            "eta0 = 2 alpha / C_I^2 exact on 103 inputs: {formula_ok}; sweep flags {flagged} of {} cells, {mismatches} disagree with mu delta^2 > 2 alpha_hat / C_I_hat^2",
            cells.len()
        ),
    )
}

fn assumption_verifier() -> Outcome {
    let mut cfg = RunConfig::defaults(ModelId::NseWeak);
    cfg.model.n = Some(32);
    cfg.observation.scale = ObservationScale::Cutoff(4);
    cfg.time.t_end = 4.0;
    let exp = Experiment::from_config(&cfg).map_err(|e| e.to_string())?;
    let path = ReferencePath::compute(&exp.stepper().unwrap(), &exp.u0).map_err(|e| e.to_string())?;
    let nse = verify_assumptions(&exp.spec, &path, &exp.op, VerifyOptions::default()).map_err(|e| e.to_string())?;
    let env = &nse.envelope;
    let nse_ok = env.m0 <= 1e-2 * env.m1 / env.horizon && (nse.alpha_hat - 1.0).abs() <= 1e-9;

    let mut heat = RunConfig::defaults(ModelId::Heat);
    heat.model.n = Some(32);
    heat.model.norm = NormConvention::Inhomogeneous;
    let exp = Experiment::from_config(&heat).map_err(|e| e.to_string())?;
    let path = ReferencePath::compute(&exp.stepper().unwrap(), &exp.u0).map_err(|e| e.to_string())?;
    let zero = verify_assumptions(&exp.spec, &path, &exp.op, VerifyOptions::default()).map_err(|e| e.to_string())?;
    let pi2 = std::f64::consts::PI.powi(2);
    let declared = pi2 / (1.0 + pi2);
    let zero_ok = zero.envelope.m0 == 0.0 && zero.envelope.m1 == 0.0 && (zero.alpha_hat - declared).abs() <= 1e-9;
    check(
        nse_ok && zero_ok,
        format!(
            "nse_weak: M0 = {:.2e} <= 1e-2 M1/T = {:.2e}, alpha_hat - 1 = {:.1e}; F = 0: (M0, M1) = ({}, {}), alpha_hat - pi^2/(1+pi^2) = {:.1e}",
            env.m0,
            1e-2 * env.m1 / env.horizon,
            nse.alpha_hat - 1.0,
            zero.envelope.m0,
            zero.envelope.m1,
            zero.alpha_hat - declared
        ),
    )
}

fn outputs(cfg: &RunConfig, execution: Execution) -> Result<String, String> {
    let exp = Experiment::from_config(cfg).map_err(|e| e.to_string())?;
    let res = run_ensemble(&exp, cfg.ensemble.members, cfg.ensemble.seed, execution).map_err(|e| e.to_string())?;
    Ok(series_csv(&res.sample, cfg.time.stride) + &ensemble_csv(&res, cfg.time.stride))
}

fn determinism() -> Outcome {
    let mut a = RunConfig::defaults(ModelId::AcWeak);
    a.model.n = Some(64);
    a.noise.kind = NoiseKind::Pointwise;
    a.noise.sigma = 0.3;
    a.ensemble.members = 8;
    a.ensemble.seed = 99;
    a.output.emit_y = true;
    let mut b = RunConfig::defaults(ModelId::NseWeak);
    b.model.n = Some(16);
    b.observation.kind = ObservationKind::Volume;
    b.observation.scale = ObservationScale::Cutoff(3);
    b.noise.kind = NoiseKind::StateScaled;
    b.noise.sigma = 0.2;
    b.ensemble.members = 6;
    b.time.t_end = 0.3;
    b.init.v0 = InitialEstimate::Zero;
    let info = ManifestInfo { command: "simulate".into(), alpha_hat: 1.0, c_i_hat: 1.0, eta0_hat: 2.0, wall_clock_s: 0.0 };
    let mut runs = 0;
    for cfg in [a, b] {
        let first = outputs(&cfg, Execution::Parallel)?;
        let replay = parse_config(&manifest(&cfg, &info)).map_err(|e| e.to_string())?;
        let mut variants = vec![outputs(&replay, Execution::Parallel)?, outputs(&cfg, Execution::Sequential)?];
        #[cfg(feature = "parallel")]
        for threads in [1, 2, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            variants.push(pool.install(|| outputs(&cfg, Execution::Parallel))?);
        }
        for v in &variants {
            if *v != first {
                return Err(format!("{} output differs between repeated runs", cfg.model.id.name()));
            }
        }
        runs += variants.len() + 1;
    }
    check(true, format!("{runs} runs over 2 configs (manifest replay, sequential, 1/2/3 threads) byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("zero-noise synchronization", zero_noise_synchronization),
        ("noise-floor scaling", noise_floor_scaling),
        ("V* ordering", v_star_ordering),
        ("tail convergence", tail_convergence),
        ("stochastic convolution isometry", convolution_isometry),
        ("cancellation identities", cancellation_identities),
        ("oracle equivalence", oracle_equivalence),
        ("threshold formula", threshold_formula),
        ("assumption verifier", assumption_verifier),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
