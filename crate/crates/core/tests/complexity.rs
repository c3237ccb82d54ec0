use nalgebra::DMatrix;
use sabha::complexity::{
    complexity_report, cube_complexity_mc, fdr_bound_independent, incidence_pinv, incidence_rho,
    rad_mc, rad_mc_points, CoordDist, SupKind,
};
use sabha::structure::{Graph, Grouping, StructureSpec};

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn chain_rho_scales_like_sqrt_n() {
    for n in [16usize, 64, 256] {
        let rho = incidence_rho(&Graph::chain(n).unwrap()).unwrap();
        let ratio = rho / (n as f64).sqrt();
        assert!((0.2..=1.2).contains(&ratio), "n={n} ratio={ratio}");
    }
}

#[test]
fn triangle_columns_have_equal_norm() {
    let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
    let pinv = incidence_pinv(&g).unwrap();
    let norms: Vec<f64> = pinv.column_iter().map(|c| c.norm()).collect();
    for w in norms.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-12, "{norms:?}");
    }
}

#[test]
fn pseudoinverse_matches_svd() {
    let g = Graph::new(
        6,
        vec![
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (0, 3),
            (1, 4),
            (2, 5),
        ],
    )
    .unwrap();
    let mut d = DMatrix::zeros(g.n_edges(), 6);
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        d[(k, i)] = 1.0;
        d[(k, j)] = -1.0;
    }
    let svd_pinv = d.pseudo_inverse(1e-10).unwrap();
    let ours = incidence_pinv(&g).unwrap();
    assert!((svd_pinv - ours).amax() < 1e-10);
}

#[test]
fn dense_limit_is_enforced() {
    assert!(incidence_rho(&Graph::chain(5001).unwrap()).is_err());
}

#[test]
fn single_group_matches_folded_binomial() {
    for n in [1u64, 2, 5, 10] {
        let exact: f64 = (0..=n)
            .map(|k| binomial(n, k) * (2.0 * k as f64 - n as f64).abs())
            .sum::<f64>()
            / 2f64.powi(n as i32)
            / n as f64;
        // a single group with floor eps scales the plain sum by 1 / eps
        let eps = 0.5;
        let spec = StructureSpec::grouped(eps, Grouping::single(n as usize).unwrap()).unwrap();
        let (est, kind) = rad_mc(&spec, n as usize, 200_000, 5).unwrap();
        assert_eq!(kind, SupKind::Exact);
        let got = est.estimate * eps;
        assert!(
            (got - exact).abs() <= 3.0 * est.stderr * eps,
            "n={n}: {got} vs {exact}"
        );
        assert!(exact <= 1.0 / (n as f64).sqrt() + 1e-12);
    }
}

#[test]
fn ordered_dominates_constant_vector_on_same_draws() {
    for n in [3usize, 40] {
        let ord = rad_mc(&StructureSpec::ordered_step(0.3).unwrap(), n, 5000, 9)
            .unwrap()
            .0;
        let ones = rad_mc(&StructureSpec::constant(0.3).unwrap(), n, 5000, 9)
            .unwrap()
            .0;
        assert!(ord.estimate >= ones.estimate * (1.0 - 1e-6));
    }
}

#[test]
fn tv_relaxation_without_budget_equals_constant_class() {
    let n = 12;
    let tv = StructureSpec::tv_graph(0.2, Graph::chain(n).unwrap(), 0.0).unwrap();
    let (a, kind) = rad_mc(&tv, n, 4000, 21).unwrap();
    assert_eq!(kind, SupKind::UpperBound);
    let (b, _) = rad_mc(&StructureSpec::constant(0.2).unwrap(), n, 4000, 21).unwrap();
    assert!((a.estimate - b.estimate).abs() <= 1e-12 * b.estimate);
}

#[test]
fn rademacher_cube_matches_class_estimate() {
    let n = 5;
    let eps = 0.4;
    // vertices (1/eps, .., 1/eps, 1, .., 1) of the ordered class
    let points: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            (0..n)
                .map(|i| if i < k { 1.0 / eps } else { 1.0 })
                .collect()
        })
        .collect();
    let a = rad_mc_points(&points, 100_000, 1).unwrap();
    let (b, _) = rad_mc(&StructureSpec::ordered_step(eps).unwrap(), n, 100_000, 2).unwrap();
    assert!((a.estimate - b.estimate).abs() <= 3.0 * a.stderr.hypot(b.stderr));
}

#[test]
fn uniform_cube_on_ones_vector() {
    let n = 30;
    let est =
        cube_complexity_mc(&[vec![1.0; n]], &vec![CoordDist::Uniform; n], 100_000, 4).unwrap();
    // sum of n uniforms on [-1, 1] has variance n/3; E|S| ~ sqrt(2/pi) sd
    let approx = (2.0 / std::f64::consts::PI).sqrt() * (n as f64 / 3.0).sqrt() / n as f64;
    assert!(
        (est.estimate - approx).abs() <= 0.05 * approx,
        "{} vs {approx}",
        est.estimate
    );
}

#[test]
fn independent_bound_is_monotone_in_complexity() {
    for &alpha in &[0.05, 0.1, 0.2] {
        for &tau in &[0.2, 0.5, 0.8] {
            let vals: Vec<f64> = (0..50)
                .map(|k| fdr_bound_independent(alpha, tau, k as f64 * 0.01))
                .collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(vals[0], alpha);
        }
    }
}

#[test]
fn report_serializes_spec_and_bound() {
    let spec = StructureSpec::tv_graph(0.5, Graph::grid(3, 3).unwrap(), 2.0).unwrap();
    let r = complexity_report(&spec, 9, 1000, 3).unwrap();
    assert_eq!(r.sup_kind, SupKind::UpperBound);
    assert!(r.rho_g.unwrap() > 0.0);
    assert!(r.rad_estimate >= 0.0 && r.analytic_bound >= 0.0);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["spec"]["structure"]["kind"], "tv-graph");
    assert_eq!(json["samples"], 1000);
}
