use proptest::prelude::*;
use scorch_core::prox::{prox_group_l2_scaled, prox_l1_scaled, prox_oracle, prox_sparse_group};
use scorch_core::{DiagonalMetric, GroupStructure, PenaltySpec, ProxScaling};

fn metric_norm(d: &[f64], v: &[f64]) -> f64 {
    v.iter().zip(d).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0.05f64..20.0, n),
        )
    })
}

fn two_groups(n: usize) -> GroupStructure {
    let cut = n / 2;
    let mut groups = vec![(0..cut).collect::<Vec<_>>(), (cut..n).collect()];
    groups.retain(|g| !g.is_empty());
    GroupStructure::with_sqrt_sizes(n, groups).unwrap()
}

#[test]
fn group_prox_matches_oracle_under_uneven_metric() {
    let spec = PenaltySpec::group_l2(two_groups(3), 0.7).unwrap();
    let m = DiagonalMetric::new(vec![0.2, 3.0, 1.5]).unwrap();
    let x = [1.0, -0.4, 0.8];
    let p = prox_group_l2_scaled(&x, &spec, &m, 0.9, ProxScaling::Exact).unwrap();
    let o = prox_oracle(&x, |w| spec.value(w), &m, 0.9);
    for (a, b) in p.iter().zip(&o) {
        assert!((a - b).abs() < 1e-6, "{p:?} vs {o:?}");
    }
}

#[test]
fn literal_and_exact_agree_under_identity() {
    let spec = PenaltySpec::sparse_group(two_groups(4), 0.3, 0.5).unwrap();
    let m = DiagonalMetric::identity(4);
    let x = [1.0, -2.0, 0.1, 0.7];
    let a = spec.prox(&x, &m, 0.8, ProxScaling::Exact).unwrap();
    let b = spec.prox(&x, &m, 0.8, ProxScaling::Literal).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn bad_metric_is_rejected() {
    assert!(DiagonalMetric::new(vec![1.0, 0.0]).is_err());
    assert!(DiagonalMetric::new(vec![f64::NAN]).is_err());
    let m = DiagonalMetric::identity(2);
    assert!(prox_l1_scaled(&[1.0], 1.0, &m, 1.0, ProxScaling::Exact).is_err());
    assert!(prox_l1_scaled(&[1.0, 2.0], 1.0, &m, 0.0, ProxScaling::Exact).is_err());
}

proptest! {
    #[test]
    fn l1_prox_is_firmly_shrinking((x, y, d) in case(), beta in 0.0f64..3.0, alpha in 0.05f64..1.0) {
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let px = prox_l1_scaled(&x, beta, &m, alpha, ProxScaling::Exact).unwrap();
        let py = prox_l1_scaled(&y, beta, &m, alpha, ProxScaling::Exact).unwrap();
        prop_assert!(metric_norm(&d, &sub(&px, &py)) <= metric_norm(&d, &sub(&x, &y)) + 1e-12);
        for (p, v) in px.iter().zip(&x) {
            prop_assert!(p.abs() <= v.abs() && p * v >= 0.0);
        }
    }

    #[test]
    fn group_prox_is_nonexpansive_in_metric((x, y, d) in case(), c in 0.0f64..3.0, alpha in 0.05f64..1.0) {
        let spec = PenaltySpec::group_l2(two_groups(x.len()), c).unwrap();
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let px = prox_group_l2_scaled(&x, &spec, &m, alpha, ProxScaling::Exact).unwrap();
        let py = prox_group_l2_scaled(&y, &spec, &m, alpha, ProxScaling::Exact).unwrap();
        prop_assert!(metric_norm(&d, &sub(&px, &py)) <= metric_norm(&d, &sub(&x, &y)) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn sparse_group_prox_is_a_minimizer((x, _y, d) in case(), b in 0.0f64..2.0, c in 0.0f64..2.0) {
        let spec = PenaltySpec::sparse_group(two_groups(x.len()), b, c).unwrap();
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let p = prox_sparse_group(&x, &spec, &m, 1.0, ProxScaling::Exact).unwrap();
        let obj = |w: &[f64]| spec.value(w) + 0.5 * metric_norm(&d, &sub(w, &x)).powi(2);
        let base = obj(&p);
        // no coordinate perturbation improves the objective
        for i in 0..x.len() {
            for e in [1e-4, -1e-4] {
                let mut w = p.clone();
                w[i] += e;
                prop_assert!(obj(&w) >= base - 1e-12);
            }
        }
    }
}
