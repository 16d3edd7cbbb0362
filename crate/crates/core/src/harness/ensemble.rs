use log::{debug, warn};

use super::fit::tail_sup;
use super::Experiment;
use crate::error::{Error, Result};
use crate::integrator::{simulate_pair, CounterNoise, ErrorSeries, ReferencePath};

/// Reference paths larger than this are recomputed by every member instead of shared.
const SHARED_REFERENCE_BYTES: usize = 256 << 20;

/// How ensemble members are scheduled. Results are identical either way.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberFailure {
    pub member: usize,
    pub step: usize,
    pub t: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub mean_w_h2: Vec<f64>,
    /// Standard error of the mean (unbiased variance); zero with fewer than two members.
    pub se_w_h2: Vec<f64>,
    pub mean_w_vstar2: Vec<f64>,
    pub se_w_vstar2: Vec<f64>,
    /// Requested member count.
    pub members: usize,
    /// Indices of members that completed, in order.
    pub completed: Vec<usize>,
    /// `||w_t||_H` per completed member.
    pub member_w_h: Vec<Vec<f64>>,
    pub failures: Vec<MemberFailure>,
    /// Set when at least one member tripped the blow-up guard.
    pub partial: bool,
    /// Full series of the lowest-index completed member.
    pub sample: ErrorSeries,
}

impl EnsembleResult {
    /// `tail_sup[member][j]` for each `N = ns[j]`.
    pub fn tail_sup_table(&self, ns: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.member_w_h
            .iter()
            .map(|w| ns.iter().map(|&n| tail_sup(&self.times, w, n)).collect())
            .collect()
    }

    /// Median over members of `tail_sup(N)` for each `N`.
    pub fn median_tail_sup(&self, ns: &[f64]) -> Result<Vec<f64>> {
        let table = self.tail_sup_table(ns)?;
        Ok((0..ns.len())
            .map(|j| {
                let mut col: Vec<f64> = table.iter().map(|row| row[j]).collect();
                col.sort_by(f64::total_cmp);
                let m = col.len();
                if m % 2 == 1 {
                    col[m / 2]
                } else {
                    0.5 * (col[m / 2 - 1] + col[m / 2])
                }
            })
            .collect())
    }

    /// Squared `H` error per completed member.
    pub fn member_w_h2(&self) -> Vec<Vec<f64>> {
        self.member_w_h.iter().map(|w| w.iter().map(|x| x * x).collect()).collect()
    }

    pub fn blowup_fraction(&self) -> f64 {
        self.failures.len() as f64 / self.members as f64
    }
}

fn mean_se(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
    let m = rows.len() as f64;
    let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m;
    if rows.len() < 2 {
        return (mean, 0.0);
    }
    let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Runs `members` independent nudged paths sharing the reference solution, with noise streams
/// derived from `seed`.
pub fn run_ensemble(exp: &Experiment, members: usize, seed: u64, execution: Execution) -> Result<EnsembleResult> {
    if members == 0 {
        return Err(crate::error::invalid("an ensemble needs at least one member"));
    }
    let stepper = exp.stepper()?;
    let steps = exp.step.steps();
    let shared = if ReferencePath::memory_estimate(&exp.spec, steps) <= SHARED_REFERENCE_BYTES {
        Some(ReferencePath::compute(&stepper, &exp.u0)?)
    } else {
        debug!("reference path too large to share; members integrate it themselves");
        None
    };
    let emit_y = exp.config.output.emit_y;
    let run_member = |m: usize| -> Result<ErrorSeries> {
        let source = CounterNoise { master: seed, member: m as u64 };
        simulate_pair(&stepper, &exp.u0, &exp.v0, &source, shared.as_ref(), emit_y).map(|r| r.series)
    };

    let outcomes: Vec<Result<ErrorSeries>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..members).into_par_iter().map(run_member).collect()
        }
        _ => (0..members).map(run_member).collect(),
    };

    let mut sample = None;
    let mut completed = Vec::new();
    let mut h2_rows = Vec::new();
    let mut v2_rows = Vec::new();
    let mut member_w_h = Vec::new();
    let mut failures = Vec::new();
    let mut first_err = None;
    for (m, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(series) => {
                completed.push(m);
                h2_rows.push(series.w_h.iter().map(|x| x * x).collect::<Vec<_>>());
                v2_rows.push(series.w_vstar.iter().map(|x| x * x).collect::<Vec<_>>());
                member_w_h.push(series.w_h.clone());
                if sample.is_none() {
                    sample = Some(series);
                }
            }
            Err(Error::BlowUp { step, t, detail }) => {
                warn!("member {m} blew up at step {step}: {detail}");
                failures.push(MemberFailure { member: m, step, t, detail: detail.clone() });
                first_err.get_or_insert(Error::BlowUp { step, t, detail });
            }
            Err(e) => return Err(e),
        }
    }
    let Some(sample) = sample else {
        return Err(first_err.expect("no members completed and none failed"));
    };
    let len = sample.t.len();
    let (mut mean_w_h2, mut se_w_h2, mut mean_w_vstar2, mut se_w_vstar2) =
        (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    for j in 0..len {
        let (a, b) = mean_se(&h2_rows, j);
        mean_w_h2.push(a);
        se_w_h2.push(b);
        let (a, b) = mean_se(&v2_rows, j);
        mean_w_vstar2.push(a);
        se_w_vstar2.push(b);
    }
    Ok(EnsembleResult {
        times: sample.t.clone(),
        mean_w_h2,
        se_w_h2,
        mean_w_vstar2,
        se_w_vstar2,
        members,
        completed,
        member_w_h,
        partial: !failures.is_empty(),
        failures,
        sample,
    })
}
