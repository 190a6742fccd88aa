use nalgebra::DMatrix;
use polyreg_core::geometry::{
    analysis_norm, extreme_points, facets_from_vertices, l1_linf_witness, synthesis_norm, weighted_l1_norm,
    zonotope_gauge, FacetMatrix, RegularizationOperator, VertexDictionary,
};
use polyreg_core::models::{make_mask, MaskSpec};
use polyreg_core::operators::{huber_prox, project_l1_ball, prox_linf, soft_threshold, ChannelStack};
use polyreg_core::{ForwardModel, Image, SeparablePotential, TightFrame};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn vec_of(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// `‖Px − Py‖² ≤ ⟨Px − Py, x − y⟩`.
fn firmly_nonexpansive(px: &[f64], py: &[f64], x: &[f64], y: &[f64]) -> bool {
    let dp = sub(px, py);
    dot(&dp, &dp) <= dot(&dp, &sub(x, y)) + 1e-10
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analysis_norm_is_homogeneous_and_subadditive(f in matrix(3, 4), x in vec_of(3), y in vec_of(3), a in -4.0..4.0f64) {
        let f = FacetMatrix::new(f).unwrap();
        let nx = analysis_norm(&f, &x).unwrap();
        let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
        prop_assert!((analysis_norm(&f, &ax).unwrap() - a.abs() * nx).abs() <= 1e-10 * (1.0 + nx));
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        prop_assert!(analysis_norm(&f, &xy).unwrap() <= nx + analysis_norm(&f, &y).unwrap() + 1e-10);
    }

    #[test]
    fn synthesis_norm_is_subadditive(g in matrix(2, 4), x in vec_of(2), y in vec_of(2)) {
        let v = VertexDictionary::new(g).unwrap();
        prop_assume!(v.rank() == 2);
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        let (nx, zx) = synthesis_norm(&v, &x).unwrap();
        let (ny, _) = synthesis_norm(&v, &y).unwrap();
        prop_assert!(synthesis_norm(&v, &xy).unwrap().0 <= nx + ny + 1e-8 * (1.0 + nx + ny));
        // the returned code reproduces x
        let back = v.matrix() * nalgebra::DVector::from_vec(zx);
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + nx)));
    }

    #[test]
    fn witness_gives_l1_and_linf(d in 2usize..=6, seed in prop::collection::vec(-5.0..5.0f64, 6)) {
        let x = &seed[..d];
        let (f, v) = l1_linf_witness(d).unwrap();
        let l1: f64 = x.iter().map(|a| a.abs()).sum();
        let linf = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        prop_assert!((analysis_norm(&f, x).unwrap() - l1).abs() <= 1e-9);
        prop_assert!((synthesis_norm(&v, x).unwrap().0 - linf).abs() <= 1e-9);
    }

    #[test]
    fn gauge_duality_round_trip(g in matrix(2, 5), x in vec_of(2)) {
        let v = VertexDictionary::new(g).unwrap();
        prop_assume!(v.rank() == 2);
        let reduced = extreme_points(&v, 1e-9).unwrap();
        prop_assert_eq!(extreme_points(&reduced, 1e-9).unwrap().len(), reduced.len());
        let f = facets_from_vertices(&reduced).unwrap();
        let s = synthesis_norm(&v, &x).unwrap().0;
        let a = analysis_norm(&f, &x).unwrap();
        prop_assert!((s - a).abs() <= 1e-8 * (1.0 + s));
    }

    #[test]
    fn weighted_l1_and_zonotope_are_dual(l in matrix(4, 3), x in vec_of(3), y in vec_of(3)) {
        let l = RegularizationOperator::new(l).unwrap();
        prop_assume!(l.rank() == 3);
        let bound = weighted_l1_norm(&l, &x).unwrap() * zonotope_gauge(&l, &y).unwrap();
        prop_assert!(dot(&x, &y) <= bound + 1e-9 * (1.0 + bound));
    }

    #[test]
    fn soft_threshold_is_firmly_nonexpansive(x in vec_of(4), y in vec_of(4), t in prop::collection::vec(0.0..2.0f64, 4), tau in 0.0..2.0f64) {
        let px = soft_threshold(&x, &t, tau).unwrap();
        let py = soft_threshold(&y, &t, tau).unwrap();
        prop_assert!(firmly_nonexpansive(&px, &py, &x, &y));
    }

    #[test]
    fn prox_linf_is_firmly_nonexpansive_and_optimal(x in vec_of(3), y in vec_of(3), t in 0.0..4.0f64) {
        let px = prox_linf(&x, t).unwrap();
        let py = prox_linf(&y, t).unwrap();
        prop_assert!(firmly_nonexpansive(&px, &py, &x, &y));
        // the residual x − prox lies in t·B₁, the subdifferential bound of t‖·‖_∞
        let r: f64 = sub(&x, &px).iter().map(|v| v.abs()).sum();
        prop_assert!(r <= t + 1e-10);
    }

    #[test]
    fn l1_ball_projection_is_a_projection(x in vec_of(5), y in vec_of(5), radius in 0.1..6.0f64) {
        let px = project_l1_ball(&x, radius).unwrap();
        let py = project_l1_ball(&y, radius).unwrap();
        prop_assert!(px.iter().map(|v| v.abs()).sum::<f64>() <= radius + 1e-10);
        let again = project_l1_ball(&px, radius).unwrap();
        prop_assert!(again.iter().zip(&px).all(|(a, b)| (a - b).abs() <= 1e-12));
        prop_assert!(firmly_nonexpansive(&px, &py, &x, &y));
    }

    #[test]
    fn huber_prox_is_firmly_nonexpansive(x in -5.0..5.0f64, y in -5.0..5.0f64, t in 0.0..3.0f64, mu in 0.01..2.0f64) {
        let (px, py) = (huber_prox(x, t, mu), huber_prox(y, t, mu));
        prop_assert!(firmly_nonexpansive(&[px], &[py], &[x], &[y]));
    }

    #[test]
    fn huber_gradient_matches_finite_differences(v in -3.0..3.0f64, mu in 0.05..1.0f64, lam in 0.1..2.0f64) {
        prop_assume!((v.abs() - mu).abs() > 1e-3);
        let pot = SeparablePotential::huber(vec![lam], mu).unwrap();
        let at = |x: f64| ChannelStack::from_vec(1, 1, 1, vec![x]).unwrap();
        let g = pot.grad(&at(v)).unwrap().data[0];
        let h = 1e-6;
        let fd = (pot.value(&at(v + h)).unwrap() - pot.value(&at(v - h)).unwrap()) / (2.0 * h);
        prop_assert!((g - fd).abs() <= 1e-5 * g.abs().max(1e-2));
    }

    #[test]
    fn frames_satisfy_parseval(which in 0usize..3, data in prop::collection::vec(-1.0..1.0f64, 100)) {
        let f = TightFrame::preset(["identity", "haar2", "dct3"][which]).unwrap();
        let s = Image::new(10, 10, data).unwrap();
        let z = f.analyze(&s);
        let back = f.synthesize(&z).unwrap();
        let ns = dot(&s.data, &s.data);
        prop_assert!((dot(&z.data, &z.data) - ns).abs() <= 1e-10 * (1.0 + ns));
        prop_assert!(back.data.iter().zip(&s.data).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn masked_dft_adjoint(seed in 0u64..1000, density in 0.1..0.9f64, data in prop::collection::vec(-1.0..1.0f64, 144)) {
        let mask = make_mask(&MaskSpec::Random { density }, 12, 12, seed).unwrap();
        let m = ForwardModel::masked_dft(mask);
        let hs = m.apply(&data).unwrap();
        let u: Vec<f64> = (0..m.meas_len()).map(|k| ((k as f64) * 0.7 + seed as f64).sin()).collect();
        let lhs = dot(&hs, &u);
        let rhs = dot(&data, &m.adjoint(&u).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        // HᵀH is a projector
        let p1 = m.normal(&data).unwrap();
        let p2 = m.normal(&p1).unwrap();
        prop_assert!(p1.iter().zip(&p2).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}
