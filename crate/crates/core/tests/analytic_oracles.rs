use std::path::PathBuf;

use fpl_core::analytic::{
    arc_grid, eval_g, eval_s, fourier_coeff, main_term, minor_arc_scan, sawtooth_error, MainTermParams,
};
use fpl_core::floorpow::{floor_pow, PrecisionPolicy};
use fpl_core::table::{build_table, chebyshev_theta, WeightMode};
use num_complex::Complex64;
use serde_json::Value;

fn constants() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/constants.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn main_term_matches_high_precision_gamma() {
    for case in constants()["main_term"].as_array().unwrap() {
        let n = case["N"].as_u64().unwrap();
        let c = case["c"].as_f64().unwrap();
        let s = case["s"].as_u64().unwrap() as usize;
        let want = case["value"].as_f64().unwrap();
        let got = main_term(&MainTermParams::new(n, c, s).unwrap()).unwrap();
        assert!(rel(got, want) < 1e-12, "N={n} c={c} s={s}: {got} vs {want}");
    }
}

#[test]
fn main_term_scales_exactly() {
    let a = main_term(&MainTermParams::new(200_000, 1.3, 5).unwrap()).unwrap();
    let b = main_term(&MainTermParams::new(700_000, 1.3, 5).unwrap()).unwrap();
    let expect = 3.5f64.powf(5.0 / 1.3 - 1.0);
    assert!(rel(b / a, expect) < 1e-12);
}

#[test]
fn fourier_coeff_matches_closed_form() {
    for case in constants()["fourier_coeff"].as_array().unwrap() {
        let h = case["h"].as_i64().unwrap();
        let alpha = case["alpha"].as_f64().unwrap();
        let v = case["value"].as_array().unwrap();
        let want = Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap());
        let got = fourier_coeff(h, alpha).unwrap();
        assert!((got - want).norm() <= 1e-15 * want.norm().max(1e-300) + 1e-17, "h={h}: {got} vs {want}");
    }
}

#[test]
fn fourier_coeff_decay_bound() {
    for h in [-50i64, -2, 2, 3, 17, 400] {
        for alpha in [0.01, 0.3, 0.5, 0.99] {
            let z = fourier_coeff(h, alpha).unwrap();
            assert!(z.norm() <= 1.0 / (std::f64::consts::PI * (h as f64 + alpha).abs()) + 1e-15);
            assert!(z.norm() <= 1.0 / (std::f64::consts::PI * (h.abs() as f64 - 1.0)));
        }
    }
}

#[test]
fn chebyshev_theta_and_s_at_zero() {
    let want = constants()["chebyshev_theta_1e5"].as_f64().unwrap();
    let theta = chebyshev_theta(100_000);
    assert!(rel(theta, want) < 1e-12);
    let t = build_table(1.5, 100_000, WeightMode::LogPrime, &PrecisionPolicy::default()).unwrap();
    let s0 = eval_s(&t, 0.0).unwrap();
    assert!(rel(s0.re, want) < 1e-9);
    assert_eq!(s0.im, 0.0);
}

#[test]
fn floor_pow_fixed_points() {
    for case in constants()["floor_pow"].as_array().unwrap() {
        let n = case["n"].as_u64().unwrap();
        let c = case["c"].as_f64().unwrap();
        let want = case["floor"].as_u64().unwrap() as u128;
        assert_eq!(floor_pow(n, c, &PrecisionPolicy::default()).unwrap(), want);
    }
}

#[test]
fn g_at_zero_approximates_power() {
    let g = eval_g(1_000_000, 1.5, 0.0).unwrap();
    assert!(rel(g.re, 1e4) < 0.01);
    assert_eq!(g.im, 0.0);
}

#[test]
fn g_obeys_minimum_bound() {
    let n = 100_000u64;
    let c = 1.5;
    let trivial = (n as f64).powf(1.0 / c);
    for k in 1..=50 {
        let alpha = k as f64 / 100.0;
        let g = eval_g(n, c, alpha).unwrap().norm();
        assert!(g <= trivial.min(4.0 * alpha.powf(-1.0 / c)), "alpha={alpha}: |G|={g}");
    }
}

#[test]
fn sawtooth_decays_at_half() {
    let errs: Vec<f64> = (2..=11).map(|k| sawtooth_error(0.5, 0.37, 1 << k).unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn doubling_the_grid_never_lowers_the_max() {
    let t = build_table(1.5, 3000, WeightMode::LogPrime, &PrecisionPolicy::default()).unwrap();
    let a = minor_arc_scan(&t, 0.01, 1000).unwrap();
    let b = minor_arc_scan(&t, 0.01, 2000).unwrap();
    assert!(b.max_abs >= a.max_abs);
    assert!(a.max_abs <= chebyshev_theta(3000));
    assert_eq!(arc_grid(a.tau, 1000)[999], 0.5);
}
