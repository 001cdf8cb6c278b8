//! Test oracles written independently of the library internals.
#![allow(dead_code)]

use num_complex::Complex64;
use optosync::fluctuations::{CovarianceMatrix, DIM};
use optosync::meanfield::{rk4_step, ClassicalState, ClassicalTrajectory};
use optosync::model::{SystemConfig, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Ladder covariance `C = T σ T†` from a quadrature covariance of
/// `(q_aL, p_aL, q_bL, p_bL, q_aR, p_aR, q_bR, p_bR)`, using
/// `b = (q + ip)/√2`, `b† = (q - ip)/√2`.
pub fn ladder_from_quadrature(sigma: &[[f64; DIM]; DIM]) -> CovarianceMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = [[ZERO; DIM]; DIM];
    for m in 0..4 {
        t[2 * m][2 * m] = Complex64::new(s, 0.0);
        t[2 * m][2 * m + 1] = Complex64::new(0.0, s);
        t[2 * m + 1][2 * m] = Complex64::new(s, 0.0);
        t[2 * m + 1][2 * m + 1] = Complex64::new(0.0, -s);
    }
    let mut c = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for l in 0..DIM {
            let mut acc = ZERO;
            for a in 0..DIM {
                for b in 0..DIM {
                    acc += t[i][a] * sigma[a][b] * t[l][b].conj();
                }
            }
            c[i][l] = acc;
        }
    }
    CovarianceMatrix(c)
}

/// Full quadrature covariance with optical vacuum and the given 4x4
/// mechanical block over `(q_L, p_L, q_R, p_R)`.
pub fn with_mechanical_block(mech: &[[f64; 4]; 4]) -> [[f64; DIM]; DIM] {
    let mut sigma = [[0.0; DIM]; DIM];
    for (i, row) in sigma.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let idx = [2, 3, 6, 7];
    for j in 0..4 {
        for k in 0..4 {
            sigma[idx[j]][idx[k]] = mech[j][k];
        }
    }
    sigma
}

/// `[[a, 0, c, 0], [0, a, 0, d], [c, 0, b, 0], [0, d, 0, b]]`.
pub fn standard_form(a: f64, b: f64, c: f64, d: f64) -> [[f64; 4]; 4] {
    [
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, d],
        [c, 0.0, b, 0.0],
        [0.0, d, 0.0, b],
    ]
}

pub fn two_mode_squeezed(r: f64) -> [[f64; 4]; 4] {
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    standard_form(c, c, s, -s)
}

/// Random physical state: vacuum plus a random positive semidefinite part.
pub fn random_physical_quadrature(rng: &mut ChaCha8Rng) -> [[f64; DIM]; DIM] {
    let g: [[f64; DIM]; DIM] =
        std::array::from_fn(|_| std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal)));
    let mut sigma = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for l in 0..DIM {
            sigma[i][l] = (0..DIM).map(|k| g[i][k] * g[l][k]).sum::<f64>() * 0.5;
        }
        sigma[i][i] += 1.0;
    }
    sigma
}

/// Classical trajectory from the cold start on a uniform grid.
pub fn cold_trajectory(config: &SystemConfig, steps: usize) -> ClassicalTrajectory {
    let dt = config.numerics.dt;
    let mut states = vec![ClassicalState::ZERO];
    let mut x = ClassicalState::ZERO;
    for n in 0..steps {
        x = rk4_step(&x, config, n as f64 * dt, dt);
        states.push(x);
    }
    ClassicalTrajectory::from_samples(dt, states)
}

/// Sample estimate of the symmetrized covariance with standard errors.
pub struct MonteCarloCovariance {
    pub mean: [[Complex64; DIM]; DIM],
    pub se_re: [[f64; DIM]; DIM],
    pub se_im: [[f64; DIM]; DIM],
}

fn complex_noise(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(x, y) * scale
}

/// Euler-Maruyama simulation of the linearized Langevin equations written
/// out mode by mode, driven by the classical states of `traj`.
///
/// A complex input noise with symmetrized strength `w` is sampled as
/// `ξ dt = sqrt(w dt)/2 (x + iy)`, so that `2 E|ξ dt|² = w dt`.
pub fn monte_carlo_covariance(
    config: &SystemConfig,
    traj: &ClassicalTrajectory,
    trajectories: usize,
    seed: u64,
) -> MonteCarloCovariance {
    let dt = traj.dt;
    let (l, r) = (&config.left, &config.right);
    let thermal = 2.0 * config.bath.n_th + 1.0;
    let i = Complex64::new(0.0, 1.0);
    let (lambda, feed, eta, topup) = match config.topology {
        Topology::Bidirectional { lambda } => (lambda, 0.0, 0.0, false),
        Topology::Unidirectional { eta, vacuum_topup } => (
            0.0,
            2.0 * (eta * l.kappa * r.kappa).sqrt(),
            eta,
            vacuum_topup,
        ),
    };
    let bidirectional = config.topology.is_bidirectional();
    let half_dt = 0.5 * dt.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [[ZERO; DIM]; DIM];
    let mut sum_sq_re = [[0.0; DIM]; DIM];
    let mut sum_sq_im = [[0.0; DIM]; DIM];

    for _ in 0..trajectories {
        // (δa_L, δb_L, δa_R, δb_R); the initial state is vacuum / thermal
        let mut u = [
            complex_noise(&mut rng, 0.5),
            complex_noise(&mut rng, 0.5 * thermal.sqrt()),
            complex_noise(&mut rng, 0.5),
            complex_noise(&mut rng, 0.5 * thermal.sqrt()),
        ];
        for s in &traj.states[..traj.len() - 1] {
            let xi_al = complex_noise(&mut rng, half_dt);
            let xi_bl = complex_noise(&mut rng, half_dt * thermal.sqrt());
            let xi_ar = complex_noise(&mut rng, half_dt);
            let xi_br = complex_noise(&mut rng, half_dt * thermal.sqrt());
            let [al, bl, ar, br] = u;
            let det_l = l.delta0 + 2.0 * l.g * s.beta_l.re;
            let det_r = r.delta0 + 2.0 * r.g * s.beta_r.re;

            let mut d_al = (Complex64::new(-l.kappa, det_l) * al
                + i * l.g * s.alpha_l * (bl + bl.conj()))
                * dt
                + (2.0 * l.kappa).sqrt() * xi_al;
            let d_bl = (Complex64::new(-l.gamma, -l.omega_m) * bl
                + i * l.g * (s.alpha_l.conj() * al + s.alpha_l * al.conj()))
                * dt
                + (2.0 * l.gamma).sqrt() * xi_bl;
            let mut d_ar = (Complex64::new(-r.kappa, det_r) * ar
                + i * r.g * s.alpha_r * (br + br.conj()))
                * dt;
            let d_br = (Complex64::new(-r.gamma, -r.omega_m) * br
                + i * r.g * (s.alpha_r.conj() * ar + s.alpha_r * ar.conj()))
                * dt
                + (2.0 * r.gamma).sqrt() * xi_br;
            if bidirectional {
                d_al += i * lambda * ar * dt;
                d_ar += i * lambda * al * dt + (2.0 * r.kappa).sqrt() * xi_ar;
            } else {
                d_ar += -feed * al * dt + (2.0 * eta * r.kappa).sqrt() * xi_al;
                if topup {
                    d_ar += (2.0 * (1.0 - eta) * r.kappa).sqrt() * xi_ar;
                }
            }
            u = [al + d_al, bl + d_bl, ar + d_ar, br + d_br];
        }
        let v = [
            u[0],
            u[0].conj(),
            u[1],
            u[1].conj(),
            u[2],
            u[2].conj(),
            u[3],
            u[3].conj(),
        ];
        for a in 0..DIM {
            for b in 0..DIM {
                let x = 2.0 * v[a] * v[b].conj();
                sum[a][b] += x;
                sum_sq_re[a][b] += x.re * x.re;
                sum_sq_im[a][b] += x.im * x.im;
            }
        }
    }
    let n = trajectories as f64;
    let mean: [[Complex64; DIM]; DIM] =
        std::array::from_fn(|a| std::array::from_fn(|b| sum[a][b] / n));
    let se = |sq: f64, m: f64| ((sq / n - m * m).max(0.0) / (n - 1.0)).sqrt();
    MonteCarloCovariance {
        mean,
        se_re: std::array::from_fn(|a| std::array::from_fn(|b| se(sum_sq_re[a][b], mean[a][b].re))),
        se_im: std::array::from_fn(|a| std::array::from_fn(|b| se(sum_sq_im[a][b], mean[a][b].im))),
    }
}

/// Largest deviation between `c` and the Monte Carlo estimate, in units of
/// the entry's standard error.
pub fn worst_z_score(c: &CovarianceMatrix, mc: &MonteCarloCovariance) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..DIM {
        for b in 0..DIM {
            let d = c.0[a][b] - mc.mean[a][b];
            let z_re = d.re.abs() / mc.se_re[a][b].max(1e-12);
            let z_im = d.im.abs() / mc.se_im[a][b].max(1e-12);
            worst = worst.max(z_re).max(z_im);
        }
    }
    worst
}
