mod common;

use common::oracles::{brute_tau, exact_expectation, finite_diff_grad, normal_cdf, BRUTE_MAX_N};
use kappa_core::simulate::{exhaustive_unbiasedness, JointPmf};

#[test]
fn brute_tau_hand_cases() {
    // N=2: every centred off-diagonal has magnitude 1, products are +1
    let r = brute_tau(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert_eq!(r.value.cov, 1.0);
    assert_eq!(r.value.corr, 1.0);
    let r = brute_tau(&[1.0, 2.0], &[2.0, 1.0]).unwrap();
    assert_eq!(r.value.cov, -1.0);

    let big = vec![0.0; BRUTE_MAX_N + 1];
    assert!(brute_tau(&big, &big).is_err());
    assert!(brute_tau(&[1.0], &[1.0]).is_err());
}

#[test]
fn finite_differences_of_quadratic() {
    let f = |t: &[f64]| Some(3.0 * t[0] * t[0] - 2.0 * t[0] * t[1] + t[1]);
    let g = finite_diff_grad(f, &[0.5, -1.0], 1e-5).unwrap();
    assert!((g[0] - (3.0 + 2.0)).abs() < 1e-8);
    assert!((g[1] - (-1.0 + 1.0)).abs() < 1e-8);
    assert!(finite_diff_grad(f, &[0.0], 1e-2).is_err());
    assert!(finite_diff_grad(|_| None, &[0.0], 1e-5).is_err());
}

#[test]
fn richardson_ratio_of_central_differences() {
    // error of central differences is O(h²): halving h divides it by 4
    let f = |t: &[f64]| Some(t[0].exp());
    let exact = 1.0f64.exp();
    let e1 = (finite_diff_grad(f, &[1.0], 1e-4).unwrap()[0] - exact).abs();
    let e2 = (finite_diff_grad(f, &[1.0], 5e-5).unwrap()[0] - exact).abs();
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn normal_cdf_reference_values() {
    // mpmath at 30 digits
    let cases = [
        (0.0, 0.5),
        (1.96, 0.975_002_104_851_779_6),
        (-3.0, 0.001_349_898_031_630_094_5),
        (1.0, 0.841_344_746_068_542_9),
        (-6.0, 9.865_876_450_376_98e-10),
        (4.5, 0.999_996_602_326_875_3),
    ];
    for (t, p) in cases {
        let got = normal_cdf(t);
        assert!((got - p).abs() <= 1e-15 + 1e-13 * p, "Φ({t}) = {got}, expected {p}");
    }
}

#[test]
fn exact_expectation_matches_library_enumeration() {
    let pmf = JointPmf::new(vec![(0.0, 0.0, 0.5), (1.0, 1.0, 0.3), (1.0, 0.0, 0.2)]).unwrap();
    for n in 2..=4 {
        let oracle = exact_expectation(&pmf.atoms, n).unwrap();
        let (lib, population) = exhaustive_unbiasedness(&pmf, n).unwrap();
        assert!((oracle.value - lib).abs() < 1e-14);
        assert!((oracle.value - population).abs() < 1e-14);
        assert_eq!(oracle.cost, 3u64.pow(n as u32));
    }
    assert!(exact_expectation(&pmf.atoms, 5).is_err());
}
