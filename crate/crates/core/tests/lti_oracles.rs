use bcast_core::lti::{
    is_hurwitz, second_order_plant, spr_test, tf_to_statespace, SprVerdict,
    TransferFunction,
};
use nalgebra::{DMatrix, DVector};

mod common;
use common::{expm_step, rk4_error_ratios, rk4_run};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn realization_matches_transfer_function() {
    let cases = [
        second_order_plant(),
        TransferFunction::new(&[1.0], &[1.0, 1.0]).unwrap(),
        TransferFunction::new(&[2.0, -1.0, 3.0], &[1.0, 4.0, 6.0, 4.0]).unwrap(),
        TransferFunction::new(&[3.0, 1.0, 2.0], &[1.0, 2.0, 5.0]).unwrap(),
    ];
    for tf in &cases {
        let ss = tf_to_statespace(tf);
        for k in 0..100 {
            let w = 10f64.powf(-2.0 + 6.0 * k as f64 / 99.0);
            let g = tf.frequency_response(w);
            let h = ss.frequency_response(w).unwrap();
            assert!((g - h).norm() <= 1e-9 * g.norm(), "{tf:?} at {w}: {g} vs {h}");
        }
    }
}

#[test]
fn routh_agrees_with_companion_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tested = 0;
    while tested < 20 {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..8.0)).collect();
        let companion = DMatrix::from_row_slice(3, 3, &[-c[0], -c[1], -c[2], 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let max_re = companion
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_re.abs() < 1e-6 {
            continue;
        }
        let den = [1.0, c[0], c[1], c[2]];
        assert_eq!(is_hurwitz(&den).unwrap(), max_re < 0.0, "{den:?}");
        tested += 1;
    }
}

#[test]
fn plant_step_response_matches_exponential() {
    let ss = tf_to_statespace(&second_order_plant());
    let x = rk4_run(&ss, 1.0, 1e-5, 5000);
    let exact = expm_step(&ss, &DVector::zeros(2), 1.0, 0.05);
    let (y, y_exact) = (ss.output(&x, 1.0), ss.output(&exact, 1.0));
    assert!((y - y_exact).abs() < 1e-8, "{y} vs {y_exact}");
}

#[test]
fn rk4_is_fourth_order() {
    let ss = tf_to_statespace(&second_order_plant());
    let (errors, ratios) = rk4_error_ratios(&ss, 0.05);
    for r in ratios {
        assert!((14.0..=18.0).contains(&r), "ratio {r} from {errors:?}");
    }
}

#[test]
fn spr_implies_hurwitz_on_random_first_order_lags() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let num: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
        let den: Vec<f64> = vec![1.0, rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let tf = TransferFunction::new(&num, &den).unwrap();
        let cert = spr_test(&tf);
        if cert.verdict == SprVerdict::StrictlyPositiveReal {
            assert!(is_hurwitz(tf.den()).unwrap());
            // sampled real part stays positive
            for k in 0..200 {
                let w = 10f64.powf(-3.0 + 7.0 * k as f64 / 199.0);
                assert!(tf.frequency_response(w).re > 0.0, "{tf:?} at {w}");
            }
        }
    }
}
