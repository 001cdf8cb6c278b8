//! Classical mean-field dynamics: the noise-free nonlinear equations for the
//! cavity and mechanical amplitudes, their fixed-step integration, and
//! detection of the optomechanical limit cycle.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SystemConfig, Topology};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitudes above this abort the integration.
pub const DIVERGENCE_GUARD: f64 = 1e9;

/// Expectation values `<a_L>, <b_L>, <a_R>, <b_R>`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassicalState {
    pub alpha_l: Complex64,
    pub beta_l: Complex64,
    pub alpha_r: Complex64,
    pub beta_r: Complex64,
}

impl ClassicalState {
    pub const ZERO: Self = Self {
        alpha_l: Complex64::new(0.0, 0.0),
        beta_l: Complex64::new(0.0, 0.0),
        alpha_r: Complex64::new(0.0, 0.0),
        beta_r: Complex64::new(0.0, 0.0),
    };

    pub fn as_array(&self) -> [Complex64; 4] {
        [self.alpha_l, self.beta_l, self.alpha_r, self.beta_r]
    }

    pub fn from_array(z: [Complex64; 4]) -> Self {
        Self {
            alpha_l: z[0],
            beta_l: z[1],
            alpha_r: z[2],
            beta_r: z[3],
        }
    }

    pub fn norm(&self) -> f64 {
        self.as_array()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.as_array()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn map2(self, other: Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            alpha_l: f(self.alpha_l, other.alpha_l),
            beta_l: f(self.beta_l, other.beta_l),
            alpha_r: f(self.alpha_r, other.alpha_r),
            beta_r: f(self.beta_r, other.beta_r),
        }
    }

    /// Linear interpolation, `s = 0` gives `self`.
    pub fn lerp(self, other: Self, s: f64) -> Self {
        self + (other - self) * s
    }
}

impl Add for ClassicalState {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a + b)
    }
}

impl Sub for ClassicalState {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for ClassicalState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.map2(self, |a, _| a * s)
    }
}

/// Time derivative of the mean-field amplitudes.
///
/// The equations are autonomous; `_t` is accepted for uniformity with the
/// integrators.
pub fn mean_field_rhs(state: &ClassicalState, config: &SystemConfig, _t: f64) -> ClassicalState {
    let (l, r) = (&config.left, &config.right);
    let e = Complex64::new(config.drive.amplitude, 0.0);
    let s = state;

    let cavity = |p: &crate::model::OscillatorParams, alpha: Complex64, beta: Complex64| {
        Complex64::new(-p.kappa, p.delta0 + 2.0 * p.g * beta.re) * alpha
    };
    let mech = |p: &crate::model::OscillatorParams, alpha: Complex64, beta: Complex64| {
        Complex64::new(-p.gamma, -p.omega_m) * beta + I * (p.g * alpha.norm_sqr())
    };

    let mut alpha_l = cavity(l, s.alpha_l, s.beta_l) + e;
    let mut alpha_r = cavity(r, s.alpha_r, s.beta_r);
    match config.topology {
        Topology::Bidirectional { lambda } => {
            alpha_l += I * lambda * s.alpha_r;
            alpha_r += I * lambda * s.alpha_l + e;
        }
        Topology::Unidirectional { eta, .. } => {
            alpha_r -= 2.0 * (eta * l.kappa * r.kappa).sqrt() * s.alpha_l;
        }
    }
    ClassicalState {
        alpha_l,
        beta_l: mech(l, s.alpha_l, s.beta_l),
        alpha_r,
        beta_r: mech(r, s.alpha_r, s.beta_r),
    }
}

/// One classical RK4 step.
pub fn rk4_step(state: &ClassicalState, config: &SystemConfig, t: f64, dt: f64) -> ClassicalState {
    let k1 = mean_field_rhs(state, config, t);
    let k2 = mean_field_rhs(&(*state + k1 * (0.5 * dt)), config, t + 0.5 * dt);
    let k3 = mean_field_rhs(&(*state + k2 * (0.5 * dt)), config, t + 0.5 * dt);
    let k4 = mean_field_rhs(&(*state + k3 * dt), config, t + dt);
    *state + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
}

/// Result of limit-cycle detection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LimitCycle {
    /// Earliest time after which the stroboscopic criterion holds.
    pub transient_end: Option<f64>,
    /// Dominant oscillation period; `None` on the fixed-point branch.
    pub period_estimate: Option<f64>,
    pub converged: bool,
    /// The trajectory settled onto a stationary point rather than an orbit.
    pub fixed_point: bool,
}

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub dt: f64,
    pub limit_cycle: LimitCycle,
}

impl ClassicalTrajectory {
    /// Wraps samples taken on the uniform grid `t_i = i * dt`.
    pub fn from_samples(dt: f64, states: Vec<ClassicalState>) -> Self {
        let times = (0..states.len()).map(|i| i as f64 * dt).collect();
        Self {
            times,
            states,
            dt,
            limit_cycle: LimitCycle::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// CSV with columns `t` and the real and imaginary part of each amplitude.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,re_alpha_L,im_alpha_L,re_beta_L,im_beta_L,re_alpha_R,im_alpha_R,re_beta_R,im_beta_R\n",
        );
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for z in s.as_array() {
                out.push_str(&format!(",{},{}", z.re, z.im));
            }
            out.push('\n');
        }
        out
    }
}

/// Number of RK4 steps needed to reach `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt).round() as usize
}

/// Integrates from the cold start (all amplitudes zero) up to `t_end` and
/// runs limit-cycle detection on the result.
pub fn integrate_mean_field(config: &SystemConfig, t_end: f64) -> Result<ClassicalTrajectory> {
    let dt = config.numerics.dt;
    let steps = step_count(t_end, dt);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = ClassicalState::ZERO;
    states.push(x);
    for n in 0..steps {
        let t = n as f64 * dt;
        x = rk4_step(&x, config, t, dt);
        if !x.is_finite() || x.max_modulus() > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                stage: "mean-field integration",
                time: t + dt,
            });
        }
        states.push(x);
    }
    let mut traj = ClassicalTrajectory::from_samples(dt, states);
    traj.limit_cycle = detect_limit_cycle(&traj, config.numerics.convergence_tol)?;
    Ok(traj)
}

/// Four-point Lagrange interpolation of the state at fractional index `u`.
fn interpolate(states: &[ClassicalState], u: f64) -> ClassicalState {
    let n = states.len();
    let base = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = u - base as f64;
    // nodes at 0, 1, 2, 3 relative to `base`
    let w = [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ];
    (0..4).fold(ClassicalState::ZERO, |acc, k| acc + states[base + k] * w[k])
}

fn relative_gap(a: &ClassicalState, b: &ClassicalState) -> f64 {
    (*a - *b).norm() / a.norm().max(1.0)
}

/// Coarse period from the strongest non-DC spectral line of `signal`,
/// sampled every `spacing`.
fn spectral_period(signal: &[f64], spacing: f64) -> Option<f64> {
    let m = signal.len();
    if m < 8 {
        return None;
    }
    let mean = signal.iter().sum::<f64>() / m as f64;
    let mut buf: Vec<_> = signal
        .iter()
        .map(|v| rustfft::num_complex::Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf[..m / 2].iter().map(|z| z.norm()).collect();
    let (k, peak) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if *peak <= 0.0 {
        return None;
    }
    let shift = if k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some(m as f64 * spacing / (k as f64 + shift))
}

/// Refines `coarse` from upward mean crossings with hysteresis, counting
/// whole periods between the first and last crossing.
fn refine_period(signal: &[f64], spacing: f64, coarse: f64) -> f64 {
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let amp = signal.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let low = -0.5 * amp;
    let mut armed = false;
    let mut crossings = Vec::new();
    for i in 1..signal.len() {
        let (a, b) = (signal[i - 1] - mean, signal[i] - mean);
        if b < low {
            armed = true;
        }
        if armed && a < 0.0 && b >= 0.0 {
            crossings.push((i - 1) as f64 * spacing + spacing * a / (a - b));
            armed = false;
        }
    }
    if crossings.len() < 3 {
        return coarse;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    let cycles = (span / coarse).round();
    if cycles < 1.0 {
        return coarse;
    }
    let refined = span / cycles;
    if (refined - coarse).abs() < 0.1 * coarse {
        refined
    } else {
        coarse
    }
}

/// Finds the transient length and the period of the classical steady state.
///
/// The period comes from the dominant spectral line of `Im beta_L` over the
/// trailing half of the trajectory. The run counts as converged once states
/// one period apart agree to `tol` in norm relative to `max(|x|, 1)` for at
/// least one full period; a stationary tail is reported on the fixed-point
/// branch with no period.
pub fn detect_limit_cycle(traj: &ClassicalTrajectory, tol: f64) -> Result<LimitCycle> {
    let n = traj.len();
    let span = if n > 1 {
        traj.times[n - 1] - traj.times[0]
    } else {
        0.0
    };
    let need = 10.0 * 2.0 * PI;
    if n < 16 || span <= need {
        return Err(Error::TrajectoryTooShort {
            have: n,
            span,
            need,
        });
    }
    let dt = traj.dt;
    let states = &traj.states;
    let half = n / 2;

    let last = states[n - 1];
    let scale = last.norm().max(1.0);
    let settled = |i: usize| (states[i] - last).norm() <= tol * scale;
    if (half..n).all(settled) {
        let first_settled = (0..n)
            .rev()
            .take_while(|&i| settled(i))
            .last()
            .unwrap_or(n - 1);
        return Ok(LimitCycle {
            transient_end: Some(traj.times[first_settled]),
            period_estimate: None,
            converged: true,
            fixed_point: true,
        });
    }

    // decimate the tail so the transform stays small
    let stride = ((n - half) / 65_536).max(1);
    let tail: Vec<ClassicalState> = states[half..].iter().step_by(stride).copied().collect();
    let spacing = dt * stride as f64;
    let mut signal: Vec<f64> = tail.iter().map(|s| s.beta_l.im).collect();
    let spread = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        hi - lo
    };
    if spread(&signal) <= tol * scale {
        // fall back to the most strongly oscillating real component
        let component = |k: usize| -> Vec<f64> {
            tail.iter()
                .map(|s| {
                    let z = s.as_array()[k / 2];
                    if k % 2 == 0 {
                        z.re
                    } else {
                        z.im
                    }
                })
                .collect()
        };
        signal = (0..8)
            .map(component)
            .max_by(|a, b| spread(a).total_cmp(&spread(b)))
            .expect("eight components");
    }
    let Some(coarse) = spectral_period(&signal, spacing) else {
        return Ok(LimitCycle::default());
    };
    let period = refine_period(&signal, spacing, coarse);

    let shift = period / dt;
    let comparable = n.saturating_sub(shift.ceil() as usize + 2);
    let mut first_ok = None;
    for i in (0..comparable).rev() {
        let ahead = interpolate(states, i as f64 + shift);
        if relative_gap(&states[i], &ahead) > tol {
            break;
        }
        first_ok = Some(i);
    }
    let held_for_a_period = first_ok
        .map(|i| (comparable - i) as f64 * dt >= period)
        .unwrap_or(false);
    Ok(LimitCycle {
        transient_end: held_for_a_period.then(|| traj.times[first_ok.unwrap()]),
        period_estimate: Some(period),
        converged: held_for_a_period,
        fixed_point: false,
    })
}

/// Continuously unwrapped phase of a complex amplitude sampled in time.
///
/// Samples with modulus below `epsilon` hold the previous phase; the phase
/// starts at 0 until the first resolvable sample.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTracker {
    epsilon: f64,
    last_raw: Option<f64>,
    phase: f64,
}

impl PhaseTracker {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            last_raw: None,
            phase: 0.0,
        }
    }

    pub fn update(&mut self, z: Complex64) -> f64 {
        if z.norm() >= self.epsilon {
            let raw = z.arg();
            self.phase = match self.last_raw {
                None => raw,
                Some(prev) => {
                    let mut d = raw - prev;
                    if d > PI {
                        d -= 2.0 * PI;
                    } else if d <= -PI {
                        d += 2.0 * PI;
                    }
                    self.phase + d
                }
            };
            self.last_raw = Some(raw);
        }
        self.phase
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Phases `(phi_aL, phi_bL, phi_aR, phi_bR)` of one classical state.
pub type Phases = [f64; 4];

/// Tracks all four amplitude phases of a trajectory step by step.
#[derive(Debug, Clone, Copy)]
pub struct StatePhaseTracker([PhaseTracker; 4]);

impl StatePhaseTracker {
    pub fn new(epsilon: f64) -> Self {
        Self([PhaseTracker::new(epsilon); 4])
    }

    pub fn update(&mut self, state: &ClassicalState) -> Phases {
        let z = state.as_array();
        std::array::from_fn(|k| self.0[k].update(z[k]))
    }
}

/// Unwrapped phases of every sample of `traj`.
pub fn phases(traj: &ClassicalTrajectory, epsilon: f64) -> Vec<Phases> {
    let mut tracker = StatePhaseTracker::new(epsilon);
    traj.states.iter().map(|s| tracker.update(s)).collect()
}
