mod common;

use approx::assert_relative_eq;
use nalgebra::DVector;
use proptest::prelude::*;

use robustcode::decoders::{decode, ideal_ls, oracle_ls, reproject, DecoderConfig};
use robustcode::matrixgen::gen_gaussian_orthonormal;
use robustcode::model::{corrupt, encode, CorruptionMode, CorruptionPlan, ReceivedWord, Signal};
use robustcode::rng::{normal_vector, rng_from_seed};

use common::{ball_l1_oracle, box_l1_oracle, rel_diff};

fn noisy_word(
    m: usize,
    n: usize,
    seed: u64,
    flips: Vec<usize>,
    sigma: f64,
) -> (robustcode::model::CodingMatrix, DVector<f64>, ReceivedWord) {
    let cm = gen_gaussian_orthonormal(m, n, seed).unwrap();
    let mut rng = rng_from_seed(seed ^ 0x55);
    let x = normal_vector(&mut rng, n, 1.0);
    let cw = encode(&cm, &Signal::new(x.clone()).unwrap()).unwrap();
    let mut plan =
        CorruptionPlan::sign_flips(flips, normal_vector(&mut rng, m, sigma), sigma).unwrap();
    let y = corrupt(&cw, &mut plan, CorruptionMode::SignFlip).unwrap();
    (cm, x, y)
}

#[test]
fn tiny_socp_matches_brute_force() {
    for seed in 0..10 {
        let (cm, _, y) = noisy_word(4, 2, seed, vec![(seed % 4) as usize], 0.05);
        let eps = 0.05 + 0.02 * seed as f64;
        let res = decode(&cm, &y, &DecoderConfig::socp(eps)).unwrap();
        let qt = cm.q().transpose();
        let oracle = ball_l1_oracle(&qt, &(&qt * y.values()), eps);
        assert!(
            rel_diff(res.e_hat.lp_norm(1), oracle) < 1e-6,
            "seed {seed}: {} vs {oracle}",
            res.e_hat.lp_norm(1)
        );
    }
}

#[test]
fn tiny_lp_matches_brute_force() {
    for seed in 0..10 {
        let (cm, _, y) = noisy_word(4, 2, seed, vec![(seed % 4) as usize], 0.05);
        let lam = DVector::from_element(4, 0.03 + 0.01 * seed as f64);
        let res = decode(&cm, &y, &DecoderConfig::lp(lam.clone())).unwrap();
        let p = cm.complement_projector();
        let b = &p * y.values();
        let oracle = box_l1_oracle(&p, &(&b - &lam), &(&b + &lam)).unwrap();
        assert!(
            rel_diff(res.e_hat.lp_norm(1), oracle) < 1e-6,
            "seed {seed}: {} vs {oracle}",
            res.e_hat.lp_norm(1)
        );
    }
}

#[test]
fn clean_word_decodes_exactly() {
    let (cm, x, y) = noisy_word(40, 20, 3, vec![], 0.0);
    for config in [
        DecoderConfig::socp(0.0),
        DecoderConfig::lp(DVector::zeros(40)),
    ] {
        let res = decode(&cm, &y, &config).unwrap();
        assert!((&res.x_hat - &x).norm() < 1e-7 * x.norm());
    }
    assert_relative_eq!(ideal_ls(&cm, &y).unwrap(), x.clone(), epsilon = 1e-12);
    assert_relative_eq!(oracle_ls(&cm, &y, &[]).unwrap(), x, epsilon = 1e-12);
}

#[test]
fn oracle_ignores_deleted_rows() {
    let (cm, x, y) = noisy_word(30, 10, 8, vec![2, 11, 17], 0.0);
    let est = oracle_ls(&cm, &y, &[2, 11, 17]).unwrap();
    assert!((&est - &x).norm() < 1e-10);
    assert!((ideal_ls(&cm, &y).unwrap() - &x).norm() > 1e-3);
}

#[test]
fn reprojection_refits_detected_support() {
    let (cm, x, y) = noisy_word(64, 32, 12, vec![1, 9, 30, 44], 0.0);
    let res = decode(&cm, &y, &DecoderConfig::lp(DVector::from_element(64, 1e-3))).unwrap();
    let rp = reproject(&cm, &y, &res.e_hat, 1e-2).unwrap();
    assert!(rp.refit);
    assert!((&rp.x_hat - &x).norm() < 1e-9);
    let with = decode(
        &cm,
        &y,
        &DecoderConfig::lp(DVector::from_element(64, 1e-3)).with_reprojection(1e-2),
    )
    .unwrap();
    assert!(with.reprojected);
    assert_relative_eq!(with.x_hat, rp.x_hat, epsilon = 1e-12);
}

#[test]
fn reprojection_falls_back_when_rank_deficient() {
    let (cm, _, y) = noisy_word(8, 4, 2, vec![0], 0.0);
    let wide = DVector::from_element(8, 1.0);
    let rp = reproject(&cm, &y, &wide, 0.5).unwrap();
    assert!(!rp.refit);
    assert_eq!(rp.e_refit, wide);
}

#[test]
fn decoders_are_scale_equivariant() {
    let (cm, _, y) = noisy_word(32, 16, 21, vec![3, 7, 19], 0.02);
    let c = 7.5;
    let scaled = ReceivedWord::new(y.values() * c).unwrap();
    let lam = DVector::from_element(32, 0.03);
    for (base, big) in [
        (DecoderConfig::socp(0.1), DecoderConfig::socp(0.1 * c)),
        (DecoderConfig::lp(lam.clone()), DecoderConfig::lp(&lam * c)),
    ] {
        let a = decode(&cm, &y, &base).unwrap();
        let b = decode(&cm, &scaled, &big).unwrap();
        assert!((&b.x_hat - &a.x_hat * c).norm() <= 1e-6 * b.x_hat.norm());
    }
}

#[test]
fn shape_mismatch_is_an_error() {
    let cm = gen_gaussian_orthonormal(6, 3, 0).unwrap();
    let y = ReceivedWord::new(DVector::zeros(5)).unwrap();
    assert!(decode(&cm, &y, &DecoderConfig::socp(0.1)).is_err());
    let y = ReceivedWord::new(DVector::zeros(6)).unwrap();
    assert!(decode(&cm, &y, &DecoderConfig::lp(DVector::zeros(4))).is_err());
}

#[test]
fn ideal_mse_is_n_sigma_squared() {
    let (m, n, sigma) = (32, 8, 0.3);
    let cm = gen_gaussian_orthonormal(m, n, 77).unwrap();
    let mut rng = rng_from_seed(78);
    let x = normal_vector(&mut rng, n, 1.0);
    let cw = encode(&cm, &Signal::new(x.clone()).unwrap()).unwrap();
    let trials = 2000;
    let total: f64 = (0..trials)
        .map(|_| {
            let y = ReceivedWord::new(&cw + normal_vector(&mut rng, m, sigma)).unwrap();
            (ideal_ls(&cm, &y).unwrap() - &x).norm_squared()
        })
        .sum();
    let mse = total / trials as f64;
    let expected = n as f64 * sigma * sigma;
    assert!(
        (mse / expected - 1.0).abs() < 0.1,
        "mse {mse} vs {expected}"
    );
}

#[test]
fn feasible_truth_bounds_the_estimate() {
    let (cm, _, y) = noisy_word(48, 24, 31, vec![4, 20, 33], 0.01);
    let cw_err = {
        let (_, x, _) = noisy_word(48, 24, 31, vec![], 0.0);
        y.values() - cm.a() * x
    };
    let planted: f64 = [4, 20, 33].iter().map(|&i| cw_err[i].abs()).sum();
    let qt = cm.q().transpose();
    let eps = (&qt * &cw_err).norm() * 2.0;
    let res = decode(&cm, &y, &DecoderConfig::socp(eps)).unwrap();
    assert!(res.e_hat.lp_norm(1) <= planted * (1.0 + 1e-6));
}

#[test]
fn no_gross_errors_with_feasible_eps_gives_ideal() {
    let (cm, _, y) = noisy_word(40, 20, 44, vec![], 0.05);
    let eps = (cm.q().tr_mul(y.values())).norm() * 1.01;
    let res = decode(&cm, &y, &DecoderConfig::socp(eps)).unwrap();
    let ideal = ideal_ls(&cm, &y).unwrap();
    assert!((&res.x_hat - ideal).norm() < 1e-6);
}

#[test]
fn decoders_agree_without_noise() {
    let (cm, _, y) = noisy_word(60, 30, 5, vec![0, 13, 27, 41, 59], 0.0);
    let a = decode(&cm, &y, &DecoderConfig::socp(0.0)).unwrap();
    let b = decode(&cm, &y, &DecoderConfig::lp(DVector::zeros(60))).unwrap();
    assert!((&a.x_hat - &b.x_hat).norm() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decomposition_holds(seed in 0u64..1000, m in 8usize..24, eps in 0.0f64..0.5, lam in 0.0f64..0.2) {
        let n = m / 2;
        let (cm, _, y) = noisy_word(m, n, seed, vec![(seed as usize) % m], 0.05);
        for config in [DecoderConfig::socp(eps), DecoderConfig::lp(DVector::from_element(m, lam))] {
            let res = decode(&cm, &y, &config).unwrap();
            let recomposed = cm.a() * &res.x_hat + &res.z_hat + &res.e_hat;
            prop_assert!((y.values() - recomposed).amax() < 1e-10);
            prop_assert!(cm.a().tr_mul(&res.z_hat).amax() < 1e-10);
            prop_assert!(res.diagnostics.converged);
        }
    }
}
