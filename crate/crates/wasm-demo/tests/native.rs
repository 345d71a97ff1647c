use reduced_branching::limits::LimitArgs;
use wasm_demo::{convergence_rows, mrca_cdf, regime_name};

#[test]
fn regimes_by_boundary() {
    assert_eq!(regime_name(0.4, 1.0, 0.3).unwrap(), "Q1_NEGLIGIBLE");
    assert_eq!(regime_name(0.5, 1.0, 0.3).unwrap(), "INTERMEDIATE_VASAG");
    assert_eq!(regime_name(0.9, 0.9, 0.4).unwrap(), "Q2_NEGLIGIBLE");
    assert!(regime_name(1.5, 1.0, 0.3).is_err());
}

#[test]
fn convergence_rows_approach_the_limit() {
    let x = LimitArgs { s1: 0.5, s2: 0.5, ..Default::default() };
    let rows = convergence_rows(0.5, 1.0, 0.3, "balanced.0", x, 12).unwrap();
    assert_eq!(rows.len(), 3 * 9);
    let first = (rows[1] - rows[2]).abs();
    let last = (rows[rows.len() - 2] - rows[rows.len() - 1]).abs();
    assert!(last < first, "{first} -> {last}");
    assert_eq!(rows[rows.len() - 3], 4096.0);
}

#[test]
fn mrca_cdf_is_a_distribution() {
    let v = mrca_cdf(0.5, 1.0, 0.3, 64).unwrap();
    assert_eq!(v.len(), 66);
    let cdf = &v[..65];
    assert!(cdf.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!((cdf[64] - 1.0).abs() < 1e-12);
    let p2 = v[65];
    assert!(p2 > 0.0 && p2 < 1.0);
}

#[test]
fn wrong_regime_point_is_rejected() {
    let x = LimitArgs { s1: 0.5, s2: 0.5, ..Default::default() };
    assert!(convergence_rows(0.4, 1.0, 0.3, "balanced.0", x, 8).is_err());
}
