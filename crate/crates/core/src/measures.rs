//! Synchronization and correlation measures of the two mechanical modes.
//!
//! Fluctuations are first rotated into the frame of the classical phases,
//! `R' = U R` with `U = diag(e^{-iφ_aL}, e^{iφ_aL}, ..., e^{iφ_bR})`, so that
//! `q` and `p` of each mode are its amplitude and phase fluctuations.
//!
//! The phase-synchronization measure is `S_p = 1 / (2 <δp_-²>)` with
//! `δp_- = (δp_L - δp_R)/√2`. It uses the variance of the phase difference,
//! since the mean of a fluctuation operator vanishes identically.
//!
//! Two-mode quantities work on the 4x4 covariance `σ` of `(q_L, p_L, q_R, p_R)`
//! in the convention where the vacuum is the identity, with block invariants
//! `I1 = det A`, `I2 = det B`, `I3 = det C`, `I4 = det σ`. Logarithms are
//! natural.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuations::{quadrature_map_pair, CovarianceMatrix, B_L, B_L_DAG, B_R, B_R_DAG, DIM};
use crate::meanfield::Phases;
use crate::model::DiscordSide;

/// Floor applied to `<δp_-²>`.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Tolerance on `ν_-` below one before a state is rejected.
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// Diagonal rotation into the co-moving frame of the classical phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFrame {
    diag: [Complex64; DIM],
}

impl RotationFrame {
    pub fn new(phases: &Phases) -> Self {
        Self {
            diag: std::array::from_fn(|i| {
                let phi = phases[i / 2];
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                Complex64::from_polar(1.0, sign * phi)
            }),
        }
    }

    pub fn entry(&self, i: usize) -> Complex64 {
        self.diag[i]
    }
}

/// `C' = U C U†`.
pub fn rotate_covariance(c: &CovarianceMatrix, frame: &RotationFrame) -> CovarianceMatrix {
    let mut out = c.0;
    for i in 0..DIM {
        for l in 0..DIM {
            out[i][l] = frame.diag[i] * c.0[i][l] * frame.diag[l].conj();
        }
    }
    CovarianceMatrix(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSync {
    pub s_p: f64,
    pub var_p_minus: f64,
}

/// `σ` entry between the `p` quadratures of the ladder pairs starting at `j`
/// and `k`.
fn p_moment(c: &CovarianceMatrix, j: usize, k: usize) -> f64 {
    let (jd, kd) = (j + 1, k + 1);
    (0.5 * (c.get(j, k) - c.get(j, kd) - c.get(jd, k) + c.get(jd, kd))).re
}

/// Phase synchronization of the rotated mechanical modes.
///
/// Variances in `[-VARIANCE_FLOOR, VARIANCE_FLOOR)` are lifted to the floor;
/// anything more negative is an error.
pub fn phase_sync(rotated: &CovarianceMatrix) -> Result<PhaseSync> {
    let pl = p_moment(rotated, B_L, B_L);
    let pr = p_moment(rotated, B_R, B_R);
    let cross = p_moment(rotated, B_L, B_R);
    let var = 0.25 * (pl + pr) - 0.5 * cross;
    if var < -VARIANCE_FLOOR || !var.is_finite() {
        return Err(Error::NonPositiveVariance(var));
    }
    let var = var.max(VARIANCE_FLOOR);
    Ok(PhaseSync {
        s_p: 0.5 / var,
        var_p_minus: var,
    })
}

/// Covariance of `(q_L, p_L, q_R, p_R)` for the two mechanical modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureCM(pub [[f64; 4]; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Invariants {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

impl QuadratureCM {
    fn block(&self, r: usize, c: usize) -> [[f64; 2]; 2] {
        let m = &self.0;
        [
            [m[2 * r][2 * c], m[2 * r][2 * c + 1]],
            [m[2 * r + 1][2 * c], m[2 * r + 1][2 * c + 1]],
        ]
    }

    pub fn invariants(&self) -> Invariants {
        Invariants {
            i1: det2(self.block(0, 0)),
            i2: det2(self.block(1, 1)),
            i3: det2(self.block(0, 1)),
            i4: det4(&self.0),
        }
    }

    /// Same state with the two modes exchanged.
    pub fn swapped(&self) -> Self {
        let perm = [2, 3, 0, 1];
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[perm[i]][perm[j]])
        }))
    }

    /// Symplectic eigenvalues `(ν_-, ν_+)`.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let inv = self.invariants();
        split_roots(inv.i1 + inv.i2 + 2.0 * inv.i3, inv.i4)
    }

    /// Smallest symplectic eigenvalue of the partial transpose.
    pub fn partially_transposed_nu_minus(&self) -> f64 {
        let inv = self.invariants();
        split_roots(inv.i1 + inv.i2 - 2.0 * inv.i3, inv.i4).0
    }
}

/// `ν_±² = (Δ ± √(Δ² - 4 I4)) / 2`.
fn split_roots(delta: f64, i4: f64) -> (f64, f64) {
    let root = settle(delta * delta - 4.0 * i4, delta * delta).sqrt();
    let minus = (0.5 * (delta - root)).max(0.0).sqrt();
    let plus = (0.5 * (delta + root)).max(0.0).sqrt();
    (minus, plus)
}

/// Clears a difference that is within rounding of zero. Pure states sit
/// exactly on `x = 0`, where the square roots taken downstream would turn
/// rounding noise into an `O(√ε)` error.
fn settle(x: f64, scale: f64) -> f64 {
    if x <= 64.0 * f64::EPSILON * scale.abs() {
        0.0
    } else {
        x
    }
}

/// Extracts the rotated mechanical pair and maps it to quadratures.
pub fn mechanical_quadrature_cm(rotated: &CovarianceMatrix) -> Result<QuadratureCM> {
    let modes = [B_L, B_R];
    let m = quadrature_map_pair();
    let mut full = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (mj, &bj) in modes.iter().enumerate() {
        for (mk, &bk) in modes.iter().enumerate() {
            for qj in 0..2 {
                for qk in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..2 {
                        for b in 0..2 {
                            acc += m[qj][a] * rotated.get(bj + a, bk + b) * m[qk][b].conj();
                        }
                    }
                    full[2 * mj + qj][2 * mk + qk] = acc;
                }
            }
        }
    }
    debug_assert_eq!(B_L_DAG, B_L + 1);
    debug_assert_eq!(B_R_DAG, B_R + 1);
    let scale = full.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let mut deviation = 0.0f64;
    for j in 0..4 {
        for k in 0..4 {
            deviation = deviation
                .max(full[j][k].im.abs())
                .max((full[j][k].re - full[k][j].re).abs());
        }
    }
    if deviation > 1e-9 * scale {
        return Err(Error::NonSymmetric { deviation });
    }
    Ok(QuadratureCM(std::array::from_fn(|j| {
        std::array::from_fn(|k| 0.5 * (full[j][k].re + full[k][j].re))
    })))
}

/// Von Neumann entropy of a single mode with symplectic eigenvalue `x`.
fn entropy_fn(x: f64) -> f64 {
    let plus = 0.5 * (x + 1.0);
    let minus = 0.5 * (x - 1.0);
    let term = |y: f64| if y > 0.0 { y * y.ln() } else { 0.0 };
    term(plus) - term(minus)
}

/// Minimal conditional determinant over Gaussian measurements on mode 2.
fn min_conditional_det(inv: &Invariants) -> f64 {
    let Invariants {
        i1: a,
        i2: b,
        i3: c,
        i4: d,
    } = *inv;
    let c2 = c * c;
    if c2 == 0.0 || (b - 1.0).abs() < 1e-12 {
        return a;
    }
    if (d - a * b).powi(2) <= (1.0 + b) * c2 * (a + d) {
        let inner = settle(c2 + (b - 1.0) * (d - a), c2 + ((b - 1.0) * (d - a)).abs());
        (2.0 * c2 + (b - 1.0) * (d - a) + 2.0 * c.abs() * inner.sqrt()) / (b - 1.0).powi(2)
    } else {
        let inner = settle(
            c2 * c2 + (d - a * b).powi(2) - 2.0 * c2 * (a * b + d),
            c2 * c2 + (d - a * b).powi(2) + 2.0 * c2 * (a * b + d).abs(),
        );
        (a * b - c2 + d - inner.sqrt()) / (2.0 * b)
    }
}

fn ensure_physical(sigma: &QuadratureCM) -> Result<(f64, f64)> {
    let (nu_minus, nu_plus) = sigma.symplectic_eigenvalues();
    if !(nu_minus >= 1.0 - SYMPLECTIC_TOL) {
        return Err(Error::Unphysical { nu_minus });
    }
    Ok((nu_minus, nu_plus))
}

/// Gaussian discord with the measurement on mode 2 (the right oscillator).
pub fn gaussian_discord(sigma: &QuadratureCM) -> Result<f64> {
    let (nu_minus, nu_plus) = ensure_physical(sigma)?;
    let inv = sigma.invariants();
    let e_min = min_conditional_det(&inv);
    let value = entropy_fn(inv.i2.max(1.0).sqrt()) - entropy_fn(nu_minus) - entropy_fn(nu_plus)
        + entropy_fn(e_min.max(1.0).sqrt());
    Ok(value.max(0.0))
}

/// Gaussian discord with the measurement on the chosen oscillator.
pub fn gaussian_discord_measuring(sigma: &QuadratureCM, side: DiscordSide) -> Result<f64> {
    match side {
        DiscordSide::Right => gaussian_discord(sigma),
        DiscordSide::Left => gaussian_discord(&sigma.swapped()),
    }
}

/// Logarithmic negativity `max(0, -ln ν̃_-)`.
pub fn log_negativity(sigma: &QuadratureCM) -> Result<f64> {
    ensure_physical(sigma)?;
    let nu = sigma.partially_transposed_nu_minus();
    Ok((-nu.ln()).max(0.0))
}

/// All measures at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstantMeasures {
    pub s_p: f64,
    pub var_p_minus: f64,
    /// Discord measured on the configured side.
    pub d_g: f64,
    /// Discord measured on the other side.
    pub d_g_other: f64,
    pub e_n: f64,
}

/// Rotates `c` by `phases` and evaluates every measure.
pub fn evaluate(
    c: &CovarianceMatrix,
    phases: &Phases,
    side: DiscordSide,
) -> Result<InstantMeasures> {
    let rotated = rotate_covariance(c, &RotationFrame::new(phases));
    let sync = phase_sync(&rotated)?;
    let sigma = mechanical_quadrature_cm(&rotated)?;
    let other = match side {
        DiscordSide::Left => DiscordSide::Right,
        DiscordSide::Right => DiscordSide::Left,
    };
    Ok(InstantMeasures {
        s_p: sync.s_p,
        var_p_minus: sync.var_p_minus,
        d_g: gaussian_discord_measuring(&sigma, side)?,
        d_g_other: gaussian_discord_measuring(&sigma, other)?,
        e_n: log_negativity(&sigma)?,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MeasureSeries {
    pub times: Vec<f64>,
    pub s_p: Vec<f64>,
    pub d_g: Vec<f64>,
    pub d_g_other: Vec<f64>,
    pub e_n: Vec<f64>,
    pub var_p_minus: Vec<f64>,
}

impl MeasureSeries {
    pub fn push(&mut self, t: f64, m: &InstantMeasures) {
        self.times.push(t);
        self.s_p.push(m.s_p);
        self.d_g.push(m.d_g);
        self.d_g_other.push(m.d_g_other);
        self.e_n.push(m.e_n);
        self.var_p_minus.push(m.var_p_minus);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,Sp,DG,EN,var_p_minus\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.times[i], self.s_p[i], self.d_g[i], self.e_n[i], self.var_p_minus[i]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub mean_sp: f64,
    pub mean_dg: f64,
    pub mean_en: f64,
    pub mean_dg_other: f64,
}

fn value_at(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x < t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[k - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[k - 1] + s * (values[k] - values[k - 1])
}

/// Trapezoidal mean of `values` over `[start, end]`, interpolating linearly
/// at the window edges.
pub fn trapezoid_mean(times: &[f64], values: &[f64], start: f64, end: f64) -> f64 {
    let mut nodes = vec![(start, value_at(times, values, start))];
    let lo = times.partition_point(|&x| x <= start);
    let hi = times.partition_point(|&x| x < end);
    nodes.extend((lo..hi).map(|i| (times[i], values[i])));
    nodes.push((end, value_at(times, values, end)));
    // offset by the first value so constant series average exactly
    let base = nodes[0].1;
    let area: f64 = nodes
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * ((w[0].1 - base) + (w[1].1 - base)))
        .sum();
    base + area / (end - start)
}

/// Time averages over `[transient_end, transient_end + window]`.
pub fn time_average(series: &MeasureSeries, transient_end: f64, window: f64) -> Result<Averages> {
    let end = transient_end + window;
    let (first, last) = match (series.times.first(), series.times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => {
            return Err(Error::WindowNotCovered {
                start: transient_end,
                end,
                available: f64::NAN,
            })
        }
    };
    let slack = 1e-9 * end.abs().max(1.0);
    if !(window > 0.0) || first > transient_end + slack || last < end - slack {
        return Err(Error::WindowNotCovered {
            start: transient_end,
            end,
            available: last,
        });
    }
    let t = &series.times;
    Ok(Averages {
        mean_sp: trapezoid_mean(t, &series.s_p, transient_end, end),
        mean_dg: trapezoid_mean(t, &series.d_g, transient_end, end),
        mean_en: trapezoid_mean(t, &series.e_n, transient_end, end),
        mean_dg_other: trapezoid_mean(t, &series.d_g_other, transient_end, end),
    })
}
