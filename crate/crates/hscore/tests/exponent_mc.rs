//! Monte-Carlo validation of the exponent predictions. These are statistical
//! checks on seeded simulations: the seeds are frozen, so the observed values
//! are reproducible, and the tolerances are deliberately loose because the
//! fitted slope carries a finite-size upward bias from the pre-exponential
//! factor of the error probability.

use ndarray::{array, Array1, Array2};

use hscore::exponent::{
    mismatched_exponent, optimal_exponent, simulate_error_rate, LocalPair,
};

const SIZES: [usize; 5] = [400, 800, 1200, 1600, 2000];

/// p1 = p0 + eps*d, p2 = p0 - eps*d with sum(d^2/p0) = 1, so the chi-square
/// distance saturates the eps-neighborhood and E_opt = eps^2/2 = 1.25e-3.
fn symmetric_pair() -> LocalPair {
    let p0 = array![0.4, 0.3, 0.2, 0.1];
    let s = 0.048_f64.sqrt();
    let d = array![s, -s, s, -s];
    let eps = 0.05;
    let p1 = &p0 + &(eps * &d);
    let p2 = &p0 - &(eps * &d);
    LocalPair::new(p0, p1, p2, eps).unwrap()
}

fn column(values: Array1<f64>) -> Array2<f64> {
    let n = values.len();
    values.into_shape_with_order((n, 1)).unwrap()
}

/// The likelihood-ratio direction (p1 - p2) / p0 attains the optimum.
fn likelihood_ratio_feature(pair: &LocalPair) -> Array2<f64> {
    let lr = (pair.p1() - pair.p2()) / pair.p0();
    column(lr)
}

#[test]
fn equal_hypotheses_have_zero_slope() {
    let p0 = array![0.4, 0.3, 0.2, 0.1];
    let pair = LocalPair::new(p0.clone(), p0.clone(), p0, 0.05).unwrap();
    // Any non-constant feature; the likelihood ratio itself is identically
    // zero for an equal pair.
    let f = column(array![1.0, -1.0, 1.0, -1.0]);
    let out = simulate_error_rate(&pair, &f.view(), &SIZES, 100_000, 0).unwrap();
    for &rate in &out.error_rates {
        assert!(
            (rate - 0.5).abs() < 0.01,
            "indistinguishable hypotheses must err half the time, got {rate}"
        );
    }
    assert!(out.slope.abs() < 0.01, "slope {} not ~0", out.slope);
}

#[test]
fn optimal_direction_slope_matches_the_predicted_exponent() {
    let pair = symmetric_pair();
    let f = likelihood_ratio_feature(&pair);
    let e_opt = optimal_exponent(&pair);
    assert!((e_opt - 1.25e-3).abs() < 1e-12);
    let predicted = mismatched_exponent(&pair, &f.view()).unwrap();
    assert!((predicted - e_opt).abs() < 1e-12 * e_opt.max(1.0));

    let out = simulate_error_rate(&pair, &f.view(), &SIZES, 200_000, 0).unwrap();
    let rel = (out.slope - e_opt) / e_opt;
    // The fitted slope sits ~20% above the exponent at these sample sizes
    // because P_e also carries a decaying pre-exponential factor.
    assert!(
        rel.abs() <= 0.25,
        "slope {} deviates {:.1}% from {}",
        out.slope,
        rel * 100.0,
        e_opt
    );
    assert!(out.dropped.is_empty(), "unexpected dropped sizes {:?}", out.dropped);
}

#[test]
fn slope_ratio_tracks_the_h_score_ratio() {
    let pair = symmetric_pair();
    let f_full = likelihood_ratio_feature(&pair);
    // A direction at 45 degrees to the likelihood ratio in whitened
    // coordinates: its exponent and exact H-score are exactly half.
    let f_half = column(array![
        1.161895003862225,
        -0.9036961141150639,
        -0.2581988897471611,
        -1.4200938936093859
    ]);
    let e_full = mismatched_exponent(&pair, &f_full.view()).unwrap();
    let e_half = mismatched_exponent(&pair, &f_half.view()).unwrap();
    let r = e_full / e_half;
    assert!((r - 2.0).abs() < 1e-9, "designed exponent ratio 2, got {r}");

    let out_full = simulate_error_rate(&pair, &f_full.view(), &SIZES, 200_000, 0).unwrap();
    let out_half = simulate_error_rate(&pair, &f_half.view(), &SIZES, 200_000, 1).unwrap();
    let slope_ratio = out_full.slope / out_half.slope;
    assert!(
        (slope_ratio / r - 1.0).abs() <= 0.20,
        "slope ratio {slope_ratio} vs exponent ratio {r}"
    );
}
