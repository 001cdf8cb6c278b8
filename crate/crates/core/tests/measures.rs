mod common;

use common::{
    ladder_from_quadrature, random_physical_quadrature, standard_form, two_mode_squeezed,
    with_mechanical_block,
};
use num_complex::Complex64;
use optosync::fluctuations::{CovarianceMatrix, B_L, B_L_DAG, B_R, B_R_DAG, DIM};
use optosync::measures::{
    gaussian_discord, gaussian_discord_measuring, log_negativity, mechanical_quadrature_cm,
    phase_sync, rotate_covariance, time_average, trapezoid_mean, MeasureSeries, QuadratureCM,
    RotationFrame, VARIANCE_FLOOR,
};
use optosync::model::DiscordSide;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frozen values from an independent high-precision evaluation (discord
/// cross-checked by direct minimisation over Gaussian measurements).
const TMSV_050_DISCORD: f64 = 0.659_452_959_168_036_7;
const TMSV_025_DISCORD: f64 = 0.241_407_530_762_758_56;
const SQUEEZED_THERMAL_DISCORD: f64 = 0.216_881_508_717_507_52;
const SQUEEZED_THERMAL_NEGATIVITY: f64 = 0.084_620_234_506_244_47;
const MIXED_DISCORD: f64 = 0.044_442_753_409_612_003;

fn sigma_of(mech: [[f64; 4]; 4]) -> QuadratureCM {
    let c = ladder_from_quadrature(&with_mechanical_block(&mech));
    mechanical_quadrature_cm(&c).unwrap()
}

#[test]
fn squeezed_vacuum_maps_to_textbook_quadratures() {
    let r: f64 = 0.5;
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    // ladder-basis injection, independent of the quadrature helpers
    let mut c = CovarianceMatrix::initial(0.0);
    let z = |x: f64| Complex64::new(x, 0.0);
    for (i, j) in [
        (B_L, B_L),
        (B_L_DAG, B_L_DAG),
        (B_R, B_R),
        (B_R_DAG, B_R_DAG),
    ] {
        c.0[i][j] = z(ch);
    }
    for (i, j) in [
        (B_L, B_R_DAG),
        (B_R_DAG, B_L),
        (B_L_DAG, B_R),
        (B_R, B_L_DAG),
    ] {
        c.0[i][j] = z(sh);
    }
    let sigma = mechanical_quadrature_cm(&c).unwrap();
    let expected = two_mode_squeezed(r);
    for j in 0..4 {
        for k in 0..4 {
            assert!((sigma.0[j][k] - expected[j][k]).abs() < 1e-12, "({j},{k})");
        }
    }
}

#[test]
fn vacuum_and_thermal_quadratures() {
    let v = mechanical_quadrature_cm(&CovarianceMatrix::initial(0.0)).unwrap();
    let t = mechanical_quadrature_cm(&CovarianceMatrix::initial(10.0)).unwrap();
    for j in 0..4 {
        for k in 0..4 {
            let id = if j == k { 1.0 } else { 0.0 };
            assert!((v.0[j][k] - id).abs() < 1e-15);
            assert!((t.0[j][k] - 21.0 * id).abs() < 1e-12);
        }
    }
}

#[test]
fn discord_fixtures() {
    let cases = [
        (two_mode_squeezed(0.5), TMSV_050_DISCORD),
        (two_mode_squeezed(0.25), TMSV_025_DISCORD),
        (two_mode_squeezed(0.0), 0.0),
        (standard_form(3.0, 2.0, 1.5, -1.5), SQUEEZED_THERMAL_DISCORD),
        (standard_form(3.0, 2.0, 1.0, 0.5), MIXED_DISCORD),
        (standard_form(21.0, 21.0, 0.0, 0.0), 0.0),
        (standard_form(3.0, 1.0, 0.0, 0.0), 0.0),
    ];
    for (mech, expected) in cases {
        let got = gaussian_discord(&sigma_of(mech)).unwrap();
        assert!(
            (got - expected).abs() < 1e-8,
            "{mech:?}: {got} vs {expected}"
        );
    }
}

#[test]
fn squeezed_vacuum_discord_is_reduced_entropy() {
    for r in [0.1, 0.5, 1.0, 1.5] {
        let n = f64::sinh(r).powi(2);
        let entropy = (n + 1.0) * (n + 1.0).ln() - n * n.ln();
        let got = gaussian_discord(&sigma_of(two_mode_squeezed(r))).unwrap();
        assert!((got - entropy).abs() < 1e-8, "r={r}");
    }
}

#[test]
fn negativity_fixtures() {
    for r in [0.0, 0.25, 0.5, 1.0] {
        let got = log_negativity(&sigma_of(two_mode_squeezed(r))).unwrap();
        assert!((got - 2.0 * r).abs() < 1e-8, "r={r}: {got}");
    }
    let st = log_negativity(&sigma_of(standard_form(3.0, 2.0, 1.5, -1.5))).unwrap();
    assert!((st - SQUEEZED_THERMAL_NEGATIVITY).abs() < 1e-8);
    for mech in [
        standard_form(3.0, 2.0, 1.0, 0.5),
        standard_form(21.0, 21.0, 0.0, 0.0),
    ] {
        let s = sigma_of(mech);
        assert!(s.invariants().i3 >= 0.0);
        assert_eq!(log_negativity(&s).unwrap(), 0.0);
    }
}

#[test]
fn pure_states_have_discord_iff_entanglement() {
    for r in [0.0, 0.05, 0.3, 0.8] {
        let s = sigma_of(two_mode_squeezed(r));
        let dg = gaussian_discord(&s).unwrap();
        let en = log_negativity(&s).unwrap();
        assert_eq!(dg > 1e-12, en > 1e-12, "r={r}");
    }
}

#[test]
fn unphysical_state_is_rejected_with_nu_minus() {
    let s = sigma_of(standard_form(1.0, 1.0, 0.9, 0.9));
    match gaussian_discord(&s) {
        Err(optosync::Error::Unphysical { nu_minus }) => assert!(nu_minus < 1.0),
        other => panic!("unexpected {other:?}"),
    }
    assert!(log_negativity(&s).is_err());
}

#[test]
fn discord_side_switch_swaps_modes() {
    let s = sigma_of(standard_form(3.0, 2.0, 1.0, 0.5));
    let right = gaussian_discord_measuring(&s, DiscordSide::Right).unwrap();
    let left = gaussian_discord_measuring(&s, DiscordSide::Left).unwrap();
    assert_eq!(right, gaussian_discord(&s).unwrap());
    assert_eq!(left, gaussian_discord(&s.swapped()).unwrap());
    assert!((left - right).abs() > 1e-4);
}

/// `<δp_-²>` built by brute force: the phase-difference operator as a
/// coefficient vector over the full fluctuation basis.
fn brute_force_var_p_minus(c: &CovarianceMatrix) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let p = Complex64::new(0.0, -s); // coefficient of b in p = (b - b†)/(i√2)
    let mut w = [Complex64::new(0.0, 0.0); DIM];
    w[B_L] = p * s;
    w[B_L_DAG] = -p * s;
    w[B_R] = -p * s;
    w[B_R_DAG] = p * s;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..DIM {
        for l in 0..DIM {
            acc += w[i] * w[l].conj() * c.0[i][l];
        }
    }
    0.5 * acc.re
}

#[test]
fn phase_sync_matches_brute_force_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let c = ladder_from_quadrature(&random_physical_quadrature(&mut rng));
        let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
        let rotated = rotate_covariance(&c, &RotationFrame::new(&phases));
        let sync = phase_sync(&rotated).unwrap();
        let expected = brute_force_var_p_minus(&rotated);
        assert!((sync.var_p_minus - expected).abs() < 1e-12 * expected.max(1.0));
        assert!((sync.s_p * sync.var_p_minus - 0.5).abs() < 1e-15);
    }
}

#[test]
fn phase_sync_vacuum_and_thermal() {
    let v = phase_sync(&CovarianceMatrix::initial(0.0)).unwrap();
    assert!((v.s_p - 1.0).abs() < 1e-12);
    assert!((v.var_p_minus - 0.5).abs() < 1e-12);
    for n in [0.5, 3.0, 10.0] {
        let t = phase_sync(&CovarianceMatrix::initial(n)).unwrap();
        assert!((t.s_p - 1.0 / (2.0 * n + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn perfectly_correlated_phases_hit_the_cap() {
    // p_L = p_R exactly: var(p_L) = var(p_R) = cov(p_L, p_R) = 1
    let mut mech = standard_form(1.0, 1.0, 0.0, 1.0);
    mech[1][3] = 1.0;
    mech[3][1] = 1.0;
    let c = ladder_from_quadrature(&with_mechanical_block(&mech));
    let sync = phase_sync(&c).unwrap();
    assert_eq!(sync.var_p_minus, VARIANCE_FLOOR);
    assert_eq!(sync.s_p, 1.0 / (2.0 * VARIANCE_FLOOR));
}

#[test]
fn rotation_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = ladder_from_quadrature(&random_physical_quadrature(&mut rng));
    assert_eq!(rotate_covariance(&c, &RotationFrame::new(&[0.0; 4])), c);

    let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
    let r = rotate_covariance(&c, &RotationFrame::new(&phases));
    for i in 0..DIM {
        assert!((r.0[i][i] - c.0[i][i]).norm() < 1e-12);
    }
    assert!(r.hermitian_deviation() < 1e-12);

    let half_turn = rotate_covariance(
        &c,
        &RotationFrame::new(&[0.0, std::f64::consts::PI, 0.0, 0.0]),
    );
    assert!((half_turn.0[B_L][B_R] + c.0[B_L][B_R]).norm() < 1e-12);
}

#[test]
fn averages() {
    let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    let c = vec![0.7; times.len()];
    assert_eq!(trapezoid_mean(&times, &c, 0.0, 10.0), 0.7);
    let s: Vec<f64> = times.iter().map(|t| t.sin()).collect();
    let m = trapezoid_mean(&times, &s, 0.0, 2.0 * std::f64::consts::PI);
    assert!(m.abs() < 1e-4, "{m}");

    let series = MeasureSeries {
        times: vec![0.0, 1.0],
        ..Default::default()
    };
    assert!(time_average(&series, 0.0, 5.0).is_err());
}

fn local_rotation(theta: f64) -> [[f64; 2]; 2] {
    [[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]]
}

fn rotate_locally(s: &QuadratureCM, t1: f64, t2: f64) -> QuadratureCM {
    let (r1, r2) = (local_rotation(t1), local_rotation(t2));
    let mut big = [[0.0; 4]; 4];
    for j in 0..2 {
        for k in 0..2 {
            big[j][k] = r1[j][k];
            big[j + 2][k + 2] = r2[j][k];
        }
    }
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = (0..4)
                .flat_map(|j| (0..4).map(move |k| (j, k)))
                .map(|(j, k)| big[a][j] * s.0[j][k] * big[b][k])
                .sum();
        }
    }
    QuadratureCM(out)
}

proptest! {
    #[test]
    fn correlations_invariant_under_local_rotations(
        seed in 0u64..10_000,
        t1 in -6.3f64..6.3,
        t2 in -6.3f64..6.3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = ladder_from_quadrature(&random_physical_quadrature(&mut rng));
        let s = mechanical_quadrature_cm(&c).unwrap();
        let rotated = rotate_locally(&s, t1, t2);
        let (d0, d1) = (gaussian_discord(&s).unwrap(), gaussian_discord(&rotated).unwrap());
        let (e0, e1) = (log_negativity(&s).unwrap(), log_negativity(&rotated).unwrap());
        prop_assert!((d0 - d1).abs() < 1e-9, "discord {} vs {}", d0, d1);
        prop_assert!((e0 - e1).abs() < 1e-9, "negativity {} vs {}", e0, e1);
    }
}
