//! Monte Carlo ensembles, rate and floor estimation, sweeps and the assumption report.

mod convolution;
mod ensemble;
mod fit;
mod sweep;
mod verify;

pub use convolution::{convolution_check, ConvolutionReport, VarianceProbe};
pub use ensemble::{run_ensemble, EnsembleResult, Execution, MemberFailure};
pub use fit::{
    default_fit_window, estimate_noise_floor, fit_decay_rate, fit_envelope, tail_sup, Envelope, NoiseFloor,
    RateFit,
};
pub use sweep::{sweep, SweepCell, SweepGrid};
pub use verify::{verify_assumptions, AssumptionReport, ReportEntry, VerifyOptions};

use crate::config::{InitialEstimate, RunConfig};
use crate::error::Result;
use crate::integrator::{StepConfig, Stepper};
use crate::noise::{stream_rng, NoiseModel, QSpec, INIT_STREAM};
use crate::observation::ObservationOperator;
use crate::triple::{Field, ModelParams, ModelSpec};

/// Everything a run needs, resolved from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: RunConfig,
    pub spec: ModelSpec,
    pub op: ObservationOperator,
    pub noise: NoiseModel,
    pub q: QSpec,
    pub step: StepConfig,
    pub u0: Field,
    pub v0: Field,
}

impl Experiment {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let m = &config.model;
        let params = ModelParams { nu: m.nu, resistivity: m.resistivity, norm: m.norm };
        let spec = ModelSpec::new(m.id, m.resolved_n(), params)?;
        let op = ObservationOperator::new(&spec, config.observation.kind, config.delta())?;
        let noise = NoiseModel::new(config.noise.kind, config.noise.sigma, op.delta(), config.noise.p)?;
        let rank = config.noise.rank.unwrap_or(op.cutoff());
        let q = QSpec::power_law(&spec, rank, config.noise_exponent())?;
        let step = StepConfig {
            dt: config.time.dt,
            t_end: config.time.t_end,
            mu: config.nudging.mu,
            implicit_nudging: config.nudging.implicit,
            guard: config.time.guard,
        };
        step.validate()?;

        let init = &config.init;
        let seed = config.ensemble.seed;
        let mut rng = stream_rng(seed, INIT_STREAM, 0);
        let u0 = spec.random_field_with_norm(&mut rng, init.modes, init.decay, init.u0_norm);
        let v0 = match init.v0 {
            InitialEstimate::Random => {
                let mut rng = stream_rng(seed, INIT_STREAM, 1);
                spec.random_field_with_norm(&mut rng, init.modes, init.decay, init.v0_norm)
            }
            InitialEstimate::Zero => spec.zeros(),
            InitialEstimate::Equal => u0.clone(),
        };
        let exp = Self { config: config.clone(), spec, op, noise, q, step, u0, v0 };
        exp.stepper()?;
        Ok(exp)
    }

    pub fn stepper(&self) -> Result<Stepper<'_>> {
        Stepper::new(&self.spec, &self.op, &self.noise, &self.q, self.step)
    }
}
