//! Linearized quantum fluctuations around the classical trajectory.
//!
//! Fluctuations are collected in the ladder-operator vector
//!
//! ```text
//! R = (δa_L, δa_L†, δb_L, δb_L†, δa_R, δa_R†, δb_R, δb_R†)
//! ```
//!
//! and described by the symmetrized second moments
//! `C_il = <R_i R_l† + R_l† R_i>`, so the vacuum has unit diagonal. With
//! `dR = A(t) R dt + B dξ` and `<dξ_k dξ_m† + dξ_m† dξ_k> = Σ_km dt` the
//! moments obey `dC/dt = A C + C A† + B Σ B†`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meanfield::{ClassicalState, ClassicalTrajectory};
use crate::model::{SystemConfig, Topology};

pub const A_L: usize = 0;
pub const A_L_DAG: usize = 1;
pub const B_L: usize = 2;
pub const B_L_DAG: usize = 3;
pub const A_R: usize = 4;
pub const A_R_DAG: usize = 5;
pub const B_R: usize = 6;
pub const B_R_DAG: usize = 7;

/// Dimension of the fluctuation vector.
pub const DIM: usize = 8;

/// Index of the Hermitian conjugate partner of `i` (`δa ↔ δa†`).
pub const fn conjugate_index(i: usize) -> usize {
    i ^ 1
}

/// Entries of `C` above this magnitude abort propagation.
pub const COVARIANCE_GUARD: f64 = 1e12;

/// Hermiticity tolerance for covariance inputs.
pub const HERMITIAN_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub type Mat8 = [[Complex64; DIM]; DIM];

fn zeros() -> Mat8 {
    [[ZERO; DIM]; DIM]
}

fn max_abs(m: &Mat8) -> f64 {
    m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &Mat8) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for l in i..DIM {
            worst = worst.max((m[i][l] - m[l][i].conj()).norm());
        }
    }
    worst
}

/// Symmetrized covariance matrix of the fluctuation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub Mat8);

impl CovarianceMatrix {
    /// Optical vacuum, mechanical modes thermal at `n_th`.
    pub fn initial(n_th: f64) -> Self {
        let mech = 2.0 * n_th + 1.0;
        Self::diagonal([1.0, 1.0, mech, mech, 1.0, 1.0, mech, mech])
    }

    pub fn diagonal(diag: [f64; DIM]) -> Self {
        let mut m = zeros();
        for (i, d) in diag.iter().enumerate() {
            m[i][i] = Complex64::new(*d, 0.0);
        }
        Self(m)
    }

    pub fn get(&self, i: usize, l: usize) -> Complex64 {
        self.0[i][l]
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    /// Largest `|C_il - conj(C_li)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.0)
    }

    /// Replaces `C` by `(C + C†) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..DIM {
            self.0[i][i].im = 0.0;
            for l in i + 1..DIM {
                let avg = (self.0[i][l] + self.0[l][i].conj()) * 0.5;
                self.0[i][l] = avg;
                self.0[l][i] = avg.conj();
            }
        }
    }

    /// Fails with [`Error::NonHermitian`] unless `C = C†` within tolerance.
    pub fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NonHermitian { deviation });
        }
        Ok(())
    }

    /// One CSV row: `t` followed by the row-major entries with real and
    /// imaginary parts interleaved.
    pub fn csv_row(&self, t: f64) -> String {
        let mut out = format!("{t}");
        for z in self.0.iter().flatten() {
            out.push_str(&format!(",{},{}", z.re, z.im));
        }
        out
    }

    pub fn csv_header() -> String {
        let mut out = String::from("t");
        for i in 0..DIM {
            for l in 0..DIM {
                out.push_str(&format!(",re_{i}_{l},im_{i}_{l}"));
            }
        }
        out
    }
}

/// Linearized drift `A(t)` of the fluctuation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Mat8);

impl DriftMatrix {
    pub fn get(&self, i: usize, l: usize) -> Complex64 {
        self.0[i][l]
    }
}

/// Fills one optomechanical cell's 4x4 block starting at `base`.
fn cell_block(
    a: &mut Mat8,
    base: usize,
    p: &crate::model::OscillatorParams,
    alpha: Complex64,
    beta: Complex64,
) {
    let (ax, axd, bx, bxd) = (base, base + 1, base + 2, base + 3);
    let detuning = p.delta0 + 2.0 * p.g * beta.re;
    let coupling = I * p.g * alpha;
    let coupling_conj = I * p.g * alpha.conj();

    a[ax][ax] = Complex64::new(-p.kappa, detuning);
    a[ax][bx] = coupling;
    a[ax][bxd] = coupling;

    a[bx][bx] = Complex64::new(-p.gamma, -p.omega_m);
    a[bx][ax] = coupling_conj;
    a[bx][axd] = coupling;

    // conjugate rows: A[ī][j̄] = conj(A[i][j])
    for (row, col) in [(ax, ax), (ax, bx), (ax, bxd), (bx, bx), (bx, ax), (bx, axd)] {
        a[conjugate_index(row)][conjugate_index(col)] = a[row][col].conj();
    }
}

/// Builds the drift matrix for the instantaneous classical state.
pub fn drift_matrix(state: &ClassicalState, config: &SystemConfig) -> DriftMatrix {
    let mut a = zeros();
    cell_block(&mut a, A_L, &config.left, state.alpha_l, state.beta_l);
    cell_block(&mut a, A_R, &config.right, state.alpha_r, state.beta_r);
    match config.topology {
        Topology::Bidirectional { lambda } => {
            a[A_L][A_R] = I * lambda;
            a[A_R][A_L] = I * lambda;
            a[A_L_DAG][A_R_DAG] = -I * lambda;
            a[A_R_DAG][A_L_DAG] = -I * lambda;
        }
        Topology::Unidirectional { eta, .. } => {
            let feed = -2.0 * (eta * config.left.kappa * config.right.kappa).sqrt();
            a[A_R][A_L] = feed.into();
            a[A_R_DAG][A_L_DAG] = feed.into();
        }
    }
    DriftMatrix(a)
}

/// Noise input matrix, noise correlations and the resulting diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// `8 x m` input matrix.
    pub input: Vec<[Complex64; DIM]>,
    /// Diagonal of the symmetrized `m x m` noise correlation.
    pub correlation: Vec<f64>,
    /// `D = B Σ B†`.
    pub diffusion: Mat8,
}

impl NoiseModel {
    pub fn channels(&self) -> usize {
        self.correlation.len()
    }

    /// Entry `(row, k)` of the input matrix.
    pub fn input_entry(&self, row: usize, k: usize) -> Complex64 {
        self.input[k][row]
    }
}

/// Noise channels as columns of `B`, each listed with its correlation.
fn channel(entries: &[(usize, f64)], corr: f64) -> ([Complex64; DIM], f64) {
    let mut col = [ZERO; DIM];
    for &(row, v) in entries {
        col[row] = v.into();
    }
    (col, corr)
}

/// Input noise for the configured topology.
///
/// Bidirectional: eight independent channels. Unidirectional: the left
/// optical input also enters the right cavity with weight `sqrt(2 eta kappa_R)`;
/// with `vacuum_topup` an extra vacuum pair of weight `sqrt(2 (1-eta) kappa_R)`
/// is added to the right cavity.
pub fn noise_model(config: &SystemConfig) -> NoiseModel {
    let (l, r) = (&config.left, &config.right);
    let thermal = 2.0 * config.bath.n_th + 1.0;
    let sk = |k: f64| (2.0 * k).sqrt();
    let mut columns = vec![
        channel(&[(A_L, sk(l.kappa))], 1.0),
        channel(&[(A_L_DAG, sk(l.kappa))], 1.0),
        channel(&[(B_L, sk(l.gamma))], thermal),
        channel(&[(B_L_DAG, sk(l.gamma))], thermal),
    ];
    match config.topology {
        Topology::Bidirectional { .. } => {
            columns.push(channel(&[(A_R, sk(r.kappa))], 1.0));
            columns.push(channel(&[(A_R_DAG, sk(r.kappa))], 1.0));
        }
        Topology::Unidirectional { eta, vacuum_topup } => {
            let feed = sk(eta * r.kappa);
            columns[0].0[A_R] = feed.into();
            columns[1].0[A_R_DAG] = feed.into();
            if vacuum_topup {
                let extra = sk((1.0 - eta) * r.kappa);
                columns.push(channel(&[(A_R, extra)], 1.0));
                columns.push(channel(&[(A_R_DAG, extra)], 1.0));
            }
        }
    }
    columns.push(channel(&[(B_R, sk(r.gamma))], thermal));
    columns.push(channel(&[(B_R_DAG, sk(r.gamma))], thermal));

    let mut diffusion = zeros();
    for (col, corr) in &columns {
        for i in 0..DIM {
            for l in 0..DIM {
                diffusion[i][l] += col[i] * col[l].conj() * *corr;
            }
        }
    }
    let (input, correlation) = columns.into_iter().unzip();
    NoiseModel {
        input,
        correlation,
        diffusion,
    }
}

fn product(a: &Mat8, c: &Mat8) -> Mat8 {
    let mut out = zeros();
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for l in 0..DIM {
                out[i][l] += aik * c[k][l];
            }
        }
    }
    out
}

/// `A C + C A† + D` for arbitrary `C`.
pub fn covariance_rhs(c: &CovarianceMatrix, a: &DriftMatrix, d: &Mat8) -> CovarianceMatrix {
    let ac = product(&a.0, &c.0);
    let mut out = zeros();
    for i in 0..DIM {
        for l in 0..DIM {
            let mut ca_dag = ZERO;
            for k in 0..DIM {
                ca_dag += c.0[i][k] * a.0[l][k].conj();
            }
            out[i][l] = ac[i][l] + ca_dag + d[i][l];
        }
    }
    CovarianceMatrix(out)
}

/// `A C + (A C)† + D`, valid when `C` is Hermitian.
fn covariance_rhs_hermitian(c: &Mat8, a: &Mat8, d: &Mat8) -> Mat8 {
    let ac = product(a, c);
    let mut out = zeros();
    for i in 0..DIM {
        out[i][i] = Complex64::new(2.0 * ac[i][i].re + d[i][i].re, 0.0);
        for l in i + 1..DIM {
            let v = ac[i][l] + ac[l][i].conj() + d[i][l];
            out[i][l] = v;
            out[l][i] = v.conj();
        }
    }
    out
}

fn axpy(x: &Mat8, k: &Mat8, h: f64) -> Mat8 {
    let mut out = *x;
    for i in 0..DIM {
        for l in 0..DIM {
            out[i][l] += k[i][l] * h;
        }
    }
    out
}

/// Steps `C` alongside a classical trajectory.
///
/// Each RK4 step uses the drift at the two grid states it spans and at their
/// linear midpoint; the result is re-symmetrized after every step.
#[derive(Debug, Clone)]
pub struct CovariancePropagator<'a> {
    config: &'a SystemConfig,
    diffusion: Mat8,
    covariance: CovarianceMatrix,
}

impl<'a> CovariancePropagator<'a> {
    pub fn new(config: &'a SystemConfig) -> Self {
        Self {
            config,
            diffusion: noise_model(config).diffusion,
            covariance: CovarianceMatrix::initial(config.bath.n_th),
        }
    }

    pub fn with_initial(config: &'a SystemConfig, initial: CovarianceMatrix) -> Self {
        Self {
            covariance: initial,
            ..Self::new(config)
        }
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.covariance
    }

    /// Advances by `dt` between the classical states `from` and `to`;
    /// `t_next` is only used to label a divergence.
    pub fn step(
        &mut self,
        from: &ClassicalState,
        to: &ClassicalState,
        dt: f64,
        t_next: f64,
    ) -> Result<()> {
        let d = &self.diffusion;
        let a0 = drift_matrix(from, self.config).0;
        let am = drift_matrix(&from.lerp(*to, 0.5), self.config).0;
        let a1 = drift_matrix(to, self.config).0;
        let c = &self.covariance.0;

        let k1 = covariance_rhs_hermitian(c, &a0, d);
        let k2 = covariance_rhs_hermitian(&axpy(c, &k1, 0.5 * dt), &am, d);
        let k3 = covariance_rhs_hermitian(&axpy(c, &k2, 0.5 * dt), &am, d);
        let k4 = covariance_rhs_hermitian(&axpy(c, &k3, dt), &a1, d);

        let mut next = *c;
        let h = dt / 6.0;
        for i in 0..DIM {
            for l in 0..DIM {
                next[i][l] += (k1[i][l] + (k2[i][l] + k3[i][l]) * 2.0 + k4[i][l]) * h;
            }
        }
        self.covariance = CovarianceMatrix(next);
        self.covariance.symmetrize();

        let size = self.covariance.max_abs();
        if !size.is_finite() || size > COVARIANCE_GUARD {
            return Err(Error::Divergence {
                stage: "covariance propagation",
                time: t_next,
            });
        }
        Ok(())
    }
}

/// Sampled covariance history.
#[derive(Debug, Clone)]
pub struct CovarianceSeries {
    pub times: Vec<f64>,
    /// Index into the classical trajectory for each sample.
    pub indices: Vec<usize>,
    pub matrices: Vec<CovarianceMatrix>,
}

/// Propagates `C` over the whole trajectory, keeping every
/// `numerics.sample_stride`-th step (always including `t = 0`).
pub fn propagate(config: &SystemConfig, traj: &ClassicalTrajectory) -> Result<CovarianceSeries> {
    let stride = config.numerics.sample_stride.max(1);
    let mut prop = CovariancePropagator::new(config);
    let mut series = CovarianceSeries {
        times: vec![traj.times[0]],
        indices: vec![0],
        matrices: vec![*prop.covariance()],
    };
    for n in 1..traj.len() {
        prop.step(&traj.states[n - 1], &traj.states[n], traj.dt, traj.times[n])?;
        if n % stride == 0 {
            series.times.push(traj.times[n]);
            series.indices.push(n);
            series.matrices.push(*prop.covariance());
        }
    }
    Ok(series)
}

/// Quadrature map for one ladder pair: `q = (b + b†)/√2`, `p = (b - b†)/(i√2)`.
pub fn quadrature_map_pair() -> [[Complex64; 2]; 2] {
    let s = FRAC_1_SQRT_2;
    [
        [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(0.0, -s), Complex64::new(0.0, s)],
    ]
}

/// Real quadrature covariance `σ = M C M†` of `(q_aL, p_aL, q_bL, ..., p_bR)`
/// in the vacuum-variance-one convention.
pub fn quadrature_covariance(c: &CovarianceMatrix) -> [[f64; DIM]; DIM] {
    let m = quadrature_map_pair();
    let mut out = [[0.0; DIM]; DIM];
    for j in 0..DIM {
        for k in 0..DIM {
            let (mj, mk) = (j / 2, k / 2);
            let mut acc = ZERO;
            for a in 0..2 {
                for b in 0..2 {
                    acc += m[j % 2][a] * c.0[2 * mj + a][2 * mk + b] * m[k % 2][b].conj();
                }
            }
            out[j][k] = acc.re;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality {
    /// Smallest eigenvalue of `σ + iΩ`.
    pub min_uncertainty_eig: f64,
    pub physical: bool,
}

/// Eigenvalue floor below which a state is flagged unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Tests the uncertainty relation `σ + iΩ ≥ 0` for all four modes.
pub fn physicality_check(c: &CovarianceMatrix) -> Result<Physicality> {
    c.check_hermitian()?;
    let sigma = quadrature_covariance(c);
    let h = SMatrix::<Complex64, DIM, DIM>::from_fn(|j, k| {
        let omega = if j / 2 == k / 2 {
            match (j % 2, k % 2) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            }
        } else {
            0.0
        };
        Complex64::new(sigma[j][k], omega)
    });
    let min = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(Physicality {
        min_uncertainty_eig: min,
        physical: min >= -PHYSICALITY_TOL,
    })
}
