//! End-to-end run of one configuration: classical trajectory, covariance,
//! measures and time averages.
//!
//! The classical and covariance integrations advance in lockstep on the same
//! grid, so only every `sample_stride`-th state is kept in memory. The result
//! is identical to calling [`integrate_mean_field`](crate::meanfield::integrate_mean_field)
//! followed by [`propagate`](crate::fluctuations::propagate).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuations::{physicality_check, CovarianceMatrix, CovariancePropagator};
use crate::meanfield::{
    detect_limit_cycle, rk4_step, step_count, ClassicalState, ClassicalTrajectory, LimitCycle,
    StatePhaseTracker, DIVERGENCE_GUARD,
};
use crate::measures::{evaluate, time_average, Averages, MeasureSeries};
use crate::model::{validate, SystemConfig};

/// Number of physicality checks spread over the averaging window.
const PHYSICALITY_PROBES: usize = 32;

#[derive(Debug, Clone)]
pub struct Simulation {
    /// Classical states at the sampling stride.
    pub trajectory: ClassicalTrajectory,
    pub measures: MeasureSeries,
    pub averages: Averages,
    /// Start and length of the averaging window actually used.
    pub window: (f64, f64),
    pub physical: bool,
    /// Smallest uncertainty eigenvalue seen by the physicality probes.
    pub min_uncertainty_eig: f64,
    pub final_covariance: CovarianceMatrix,
}

impl Simulation {
    pub fn limit_cycle(&self) -> &LimitCycle {
        &self.trajectory.limit_cycle
    }
}

/// Averaging window: starts at `t_transient`, trimmed to a whole number of
/// periods when the classical motion is periodic.
pub fn averaging_window(config: &SystemConfig, limit_cycle: &LimitCycle) -> (f64, f64) {
    let start = config.numerics.t_transient;
    let mut window = config.numerics.t_average;
    if let (true, Some(period)) = (limit_cycle.converged, limit_cycle.period_estimate) {
        let cycles = (window / period).floor();
        if cycles >= 1.0 {
            window = cycles * period;
        }
    }
    (start, window)
}

/// Runs the full pipeline up to `t_transient + t_average`.
pub fn simulate(config: &SystemConfig) -> Result<Simulation> {
    validate(config).into_result()?;
    let n = &config.numerics;
    let dt = n.dt;
    let stride = n.sample_stride;
    let steps = step_count(config.t_end(), dt);

    let mut x = ClassicalState::ZERO;
    let mut tracker = StatePhaseTracker::new(n.phase_epsilon);
    let mut phases = tracker.update(&x);
    let mut prop = CovariancePropagator::new(config);
    let side = config.measures.discord_side;

    let mut kept = vec![x];
    let mut series = MeasureSeries::default();
    series.push(0.0, &evaluate(prop.covariance(), &phases, side)?);
    let mut covariances = vec![*prop.covariance()];

    for step in 0..steps {
        let t = step as f64 * dt;
        let t_next = (step + 1) as f64 * dt;
        let next = rk4_step(&x, config, t, dt);
        if !next.is_finite() || next.max_modulus() > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                stage: "mean-field integration",
                time: t_next,
            });
        }
        prop.step(&x, &next, dt, t_next)?;
        x = next;
        phases = tracker.update(&x);
        if (step + 1) % stride == 0 {
            kept.push(x);
            let m = evaluate(prop.covariance(), &phases, side).map_err(|e| match e {
                Error::Unphysical { .. } | Error::NonPositiveVariance(_) => Error::Divergence {
                    stage: "measures (unphysical covariance)",
                    time: t_next,
                },
                other => other,
            })?;
            series.push(t_next, &m);
            covariances.push(*prop.covariance());
        }
    }

    let mut trajectory = ClassicalTrajectory::from_samples(dt * stride as f64, kept);
    trajectory.limit_cycle = detect_limit_cycle(&trajectory, n.convergence_tol)?;
    let (start, window) = averaging_window(config, &trajectory.limit_cycle);
    let averages = time_average(&series, start, window)?;

    let first = series.times.partition_point(|&t| t < start);
    let probe_every = ((series.len() - first) / PHYSICALITY_PROBES).max(1);
    let mut min_eig = f64::INFINITY;
    let mut physical = true;
    for k in (first..series.len())
        .step_by(probe_every)
        .chain([series.len() - 1])
    {
        let check = physicality_check(&covariances[k])?;
        min_eig = min_eig.min(check.min_uncertainty_eig);
        physical &= check.physical;
    }

    Ok(Simulation {
        trajectory,
        measures: series,
        averages,
        window: (start, window),
        physical,
        min_uncertainty_eig: min_eig,
        final_covariance: *prop.covariance(),
    })
}

/// Time-averaged summary of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub mean_sp: f64,
    pub mean_dg: f64,
    pub mean_en: f64,
    pub mean_dg_other: f64,
    pub converged: bool,
    pub physical: bool,
    pub period: Option<f64>,
}

impl From<&Simulation> for RunSummary {
    fn from(sim: &Simulation) -> Self {
        Self {
            mean_sp: sim.averages.mean_sp,
            mean_dg: sim.averages.mean_dg,
            mean_en: sim.averages.mean_en,
            mean_dg_other: sim.averages.mean_dg_other,
            converged: sim.limit_cycle().converged,
            physical: sim.physical,
            period: sim.limit_cycle().period_estimate,
        }
    }
}
