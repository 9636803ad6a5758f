use proptest::prelude::*;
use scorch_core::kernels::{m_g, smooth_l1_with_kernel, RadialKernel, HESSIAN_FLOOR};
use scorch_core::{
    catalog_kernel, infconv_oracle, self_concordance_check, smooth_l1, smooth_l2_groups,
    GroupStructure, SeparableKernel, SmoothingKernel,
};

fn abs_sum(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn hyperbolic_smoother_matches_brute_force() {
    let h = SeparableKernel::new(SmoothingKernel::hyperbolic(), 1);
    for mu in [0.1, 0.7] {
        let s = smooth_l1(mu, 1, 1.0).unwrap();
        for x in [-3.0, -0.4, 0.0, 0.05, 1.7] {
            let oracle = infconv_oracle(abs_sum, &h, mu, &[x], (-5.0, 5.0), 2001);
            assert!((s.value(&[x]) - oracle).abs() < 1e-8, "mu={mu} x={x}");
        }
    }
}

#[test]
fn ostrovskii_bach_smoother_matches_brute_force() {
    let ob = catalog_kernel("ostrovskii-bach").unwrap();
    let h = SeparableKernel::new(ob, 1);
    let s = smooth_l1_with_kernel(0.5, h.clone(), 1.0).unwrap();
    for x in [-2.0, -0.3, 0.0, 0.9, 4.0] {
        let oracle = infconv_oracle(abs_sum, &h, 0.5, &[x], (-6.0, 6.0), 2001);
        assert!((s.value(&[x]) - oracle).abs() < 1e-7, "x={x}");
    }
}

#[test]
fn group_smoother_matches_radial_brute_force() {
    let groups = GroupStructure::new(2, vec![vec![0, 1]], vec![1.0]).unwrap();
    let s = smooth_l2_groups(0.4, groups, 1.0).unwrap();
    let h = RadialKernel(SmoothingKernel::hyperbolic());
    let norm = |w: &[f64]| (w[0] * w[0] + w[1] * w[1]).sqrt();
    for x in [[0.3, -0.2], [1.5, 0.5], [0.0, 0.0]] {
        let oracle = infconv_oracle(norm, &h, 0.4, &x, (-3.0, 3.0), 401);
        assert!((s.value(&x) - oracle).abs() < 1e-6, "x={x:?}");
    }
}

#[test]
fn hyperbolic_constant_is_violated_on_a_wide_grid() {
    let k = SmoothingKernel::hyperbolic();
    let r = self_concordance_check(&k, &grid(-5.0, 5.0, 20001)).unwrap();
    assert!(!r.holds);
    // |φ'''|/φ''^{1.3} = 3|t|(1+t²)^{-0.55} peaks at t = √10
    let peak = 3.0 * 10f64.sqrt() * 11f64.powf(-0.55);
    assert!((r.worst_ratio - peak).abs() < 1e-6);
    assert!((r.worst_at.abs() - 10f64.sqrt()).abs() < 1e-3);
    // the check passes with the true supremum as the constant
    let fixed = k.with_m_phi(peak * (1.0 + 1e-9));
    assert!(self_concordance_check(&fixed, &grid(-50.0, 50.0, 20001)).unwrap().holds);
}

#[test]
fn catalog_constants_other_than_hyperbolic_hold() {
    for name in scorch_core::kernels::CATALOG {
        let k = catalog_kernel(name).unwrap();
        if k.kind() == SmoothingKernel::hyperbolic().kind() {
            continue;
        }
        let (lo, hi) = k.domain();
        let (a, b) = (lo.max(-5.0), hi.min(5.0));
        let pad = 1e-3 * (b - a);
        let pts = grid(a + pad, b - pad, 4001);
        let r = self_concordance_check(&k, &pts).unwrap();
        assert!(r.holds, "{name}: ratio {} at {}", r.worst_ratio, r.worst_at);
    }
}

#[test]
fn corrupted_constant_is_detected() {
    let k = catalog_kernel("logistic").unwrap().with_m_phi(0.1);
    assert!(!self_concordance_check(&k, &grid(-5.0, 5.0, 1001)).unwrap().holds);
}

proptest! {
    #[test]
    fn smoothing_gap_is_within_mu(x in -50.0f64..50.0, mu in 0.01f64..5.0, beta in 0.01f64..10.0) {
        let s = smooth_l1(mu, 1, beta).unwrap();
        let gap = x.abs() - s.value(&[x]) / beta;
        prop_assert!(gap >= -1e-12 && gap <= mu + 1e-12);
    }

    #[test]
    fn hessian_is_positive(x in prop::collection::vec(-1e6f64..1e6, 1..8), mu in 1e-3f64..10.0) {
        let s = smooth_l1(mu, x.len(), 1.0).unwrap();
        prop_assert!(s.hessian_diag(&x).iter().all(|h| *h >= HESSIAN_FLOOR));
    }

    #[test]
    fn gradient_matches_finite_differences(x in -3.0f64..3.0, mu in 0.1f64..2.0) {
        let s = smooth_l1(mu, 1, 1.3).unwrap();
        let e = 1e-6;
        let fd = (s.value(&[x + e]) - s.value(&[x - e])) / (2.0 * e);
        prop_assert!((s.gradient(&[x])[0] - fd).abs() < 1e-6);
        let fd2 = (s.gradient(&[x + e])[0] - s.gradient(&[x - e])[0]) / (2.0 * e);
        prop_assert!((s.hessian_diag(&[x])[0] - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
    }

    #[test]
    fn m_g_decreases_in_mu_and_grows_in_n(mu in 0.01f64..10.0, n in 1usize..1000) {
        prop_assert!(m_g(n, mu * 1.5, 2.6, 2.0) < m_g(n, mu, 2.6, 2.0));
        prop_assert!(m_g(n + 1, mu, 2.6, 2.0) > m_g(n, mu, 2.6, 2.0));
        prop_assert!((m_g(n, mu, 3.0, 2.0) - 2.0 / mu.sqrt()).abs() <= 1e-14 * m_g(n, mu, 3.0, 2.0));
    }
}
