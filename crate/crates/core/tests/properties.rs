mod common;

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use proptest::prelude::*;
use rand::Rng;
use witt_core::manifolds::builtin;
use witt_core::*;

use common::*;

fn lambda_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..3.0, 1..=3)
}

fn point_strategy(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-0.5f64..0.5, dim).prop_map(DVector::from_vec)
}

/// `max |g([a, b], c) + g(b, [a, c])|` over the frame.
fn ad_invariance_defect(model: &FrameModel) -> f64 {
    let m = model.dim();
    let c = model.structure_functions(&Point::zeros(m)).unwrap();
    let g = model.structure().gram();
    let mut w = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for k in 0..m {
                let mut acc = 0.0;
                for d in 0..m {
                    acc += c[[d, a, b]] * g[(d, k)] + g[(b, d)] * c[[d, a, k]];
                }
                w = w.max(acc.abs());
            }
        }
    }
    w
}

fn jacobi_oracle(c: &Array3<f64>) -> f64 {
    let m = c.dim().0;
    let br = |x: &DVector<f64>, y: &DVector<f64>| {
        DVector::from_fn(m, |k, _| {
            let mut acc = 0.0;
            for a in 0..m {
                for b in 0..m {
                    acc += c[[k, a, b]] * x[a] * y[b];
                }
            }
            acc
        })
    };
    let e = |i: usize| DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut w = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for k in 0..m {
                let (x, y, z) = (e(a), e(b), e(k));
                let s = br(&br(&x, &y), &z) + br(&br(&y, &z), &x) + br(&br(&z, &x), &y);
                w = w.max(s.amax());
            }
        }
    }
    w
}

/// Structure functions from the coordinate frame by central differences of its columns.
fn chart_brackets_fd(model: &FrameModel, x: &Point, h: f64) -> Array3<f64> {
    let n = model.dim();
    let f = model.frame_matrix(x).unwrap();
    let fi = f.clone().try_inverse().unwrap();
    let df: Vec<DMatrix<f64>> = (0..n)
        .map(|mu| {
            let e = DVector::from_fn(n, |i, _| if i == mu { h } else { 0.0 });
            (model.frame_matrix(&(x + &e)).unwrap() - model.frame_matrix(&(x - &e)).unwrap()) / (2.0 * h)
        })
        .collect();
    let mut out = Array3::zeros((n, n, n));
    for a in 0..n {
        for b in 0..n {
            let v = DVector::from_fn(n, |nu, _| {
                (0..n).map(|mu| f[(mu, a)] * df[mu][(nu, b)] - f[(mu, b)] * df[mu][(nu, a)]).sum()
            });
            let comp = &fi * v;
            for k in 0..n {
                out[[k, a, b]] = comp[k];
            }
        }
    }
    out
}

/// `p1 = {E0, E1}`, `p1* = {E2, E3}`, `q0 = {E4}` with `[E0, E1] = E2`, `[E4, E0] = E3`.
fn rank_two_pair_model() -> FrameModel {
    let blocks = vec![
        Block::new(BlockLabel::p(1), vec![0, 1]),
        Block::new(BlockLabel::pstar(1), vec![2, 3]),
        Block::new(BlockLabel::q(0), vec![4]),
    ];
    let mut g = DMatrix::zeros(5, 5);
    g[(0, 2)] = 1.0;
    g[(2, 0)] = 1.0;
    g[(1, 3)] = 1.0;
    g[(3, 1)] = 1.0;
    g[(4, 4)] = 1.0;
    let s = validate_witt_structure(WittGrading::new(5, blocks), g, ValidationMode::Strict).unwrap();
    let mut c = Array3::zeros((5, 5, 5));
    c[[2, 0, 1]] = 1.0;
    c[[2, 1, 0]] = -1.0;
    c[[3, 4, 0]] = 1.0;
    c[[3, 0, 4]] = -1.0;
    FrameModel::new("rank_two", s, FrameBackend::LieConstant(c)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_resolve_the_identity(lambda in lambda_strategy(), seed in any::<u64>()) {
        let model = builtin::osh(&lambda).unwrap();
        let s = model.structure();
        let mut r = rng(seed);
        let v = FrameVector(random_vec(&mut r, s.dim(), 2.0));
        let mut sum = DVector::zeros(s.dim());
        for b in s.grading().blocks() {
            sum += s.project(&v, b.label).unwrap().0;
        }
        prop_assert!((sum - &v.0).amax() < 1e-14);
        prop_assert!((s.sharp(&s.flat(&v)).0 - &v.0).amax() < 1e-12);
    }

    #[test]
    fn oscillator_connection_is_compatible(lambda in lambda_strategy()) {
        for model in [builtin::osc(&lambda).unwrap(), builtin::osh(&lambda).unwrap()] {
            let x = Point::zeros(model.dim());
            let f = connection_field(&model, ConnectionKind::CanonicalWitt, &x, false).unwrap();
            prop_assert!(metricity(model.structure(), &f.gamma) < 1e-12);
            prop_assert!(block_escape(model.structure(), &f.gamma) < 1e-12);
            prop_assert!(max_diff3(&torsion_from_gamma(&f.gamma, &f.c), &f.torsion) < 1e-12);
            let m = model.dim();
            for k in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        prop_assert_eq!(f.torsion[[k, a, b]], -f.torsion[[k, b, a]]);
                    }
                }
            }
        }
    }

    #[test]
    fn oscillator_structure_constants_satisfy_jacobi(lambda in lambda_strategy()) {
        for model in [builtin::osc(&lambda).unwrap(), builtin::osh(&lambda).unwrap()] {
            let c = model.structure_functions(&Point::zeros(model.dim())).unwrap();
            prop_assert!(jacobi_oracle(&c) < 1e-12);
        }
    }

    #[test]
    fn oscillator_ad_invariance_defect(lambda in lambda_strategy()) {
        let model = builtin::osc(&lambda).unwrap();
        let expected = lambda.iter().fold(0.0f64, |w, l| w.max((1.0 - l * l / 2.0).abs()));
        prop_assert!((ad_invariance_defect(&model) - expected).abs() < 1e-12);
    }

    #[test]
    fn specialized_torsion_matches_on_fefferman_charts(x in point_strategy(4)) {
        let model = builtin::fefferman_heisenberg(1).unwrap();
        let t = canonical_torsion(&model, &x).unwrap();
        prop_assert!(max_diff3(&t, &specialized_torsion(&model, &x).unwrap()) < 1e-12);
    }

    #[test]
    fn chart_brackets_match_finite_differences(x in point_strategy(4)) {
        for model in [builtin::fefferman_heisenberg(1).unwrap(), builtin::riemannian_chart().unwrap()] {
            let x = x.rows(0, model.dim()).into_owned();
            let c = model.structure_functions(&x).unwrap();
            prop_assert!(max_diff3(&c, &chart_brackets_fd(&model, &x, 1e-5)) < 1e-8);
        }
    }

    #[test]
    fn spec_documents_round_trip(lambda in lambda_strategy()) {
        let model = builtin::osc(&lambda).unwrap();
        let text = emit_manifold_spec(&ManifoldSpec::from_model(&model));
        let back = load_model(&text).unwrap();
        prop_assert_eq!(back.structure().gram(), model.structure().gram());
        let x = Point::zeros(model.dim());
        prop_assert_eq!(back.structure_functions(&x).unwrap(), model.structure_functions(&x).unwrap());
        prop_assert_eq!(back.null_pair(), model.null_pair());
    }
}

#[test]
fn strict_mode_rejects_indefinite_anisotropic_blocks() {
    let blocks = vec![Block::new(BlockLabel::q(0), vec![0, 1])];
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let strict = validate_witt_structure(WittGrading::new(2, blocks.clone()), g.clone(), ValidationMode::Strict);
    assert!(matches!(strict, Err(WittError::InvalidStructure(_))));
    assert!(validate_witt_structure(WittGrading::new(2, blocks), g, ValidationMode::Lax).is_ok());
}

#[test]
fn cross_block_gram_entries_are_reported() {
    let blocks = vec![Block::new(BlockLabel::q(0), vec![0]), Block::new(BlockLabel::q(-1), vec![1])];
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let err = validate_witt_structure(WittGrading::new(2, blocks), g, ValidationMode::Strict).unwrap_err();
    assert!(err.to_string().contains("0.5"), "{err}");
}

#[test]
fn rank_two_pairs_are_compatible() {
    let model = rank_two_pair_model();
    let x = Point::zeros(5);
    let f = connection_field(&model, ConnectionKind::CanonicalWitt, &x, false).unwrap();
    assert!(metricity(model.structure(), &f.gamma) < 1e-12);
    assert!(block_escape(model.structure(), &f.gamma) < 1e-12);
    assert!(max_diff3(&torsion_from_gamma(&f.gamma, &f.c), &f.torsion) < 1e-12);
    let b = bianchi_residuals(&model, ConnectionKind::CanonicalWitt, &x).unwrap();
    assert!(b.first < 1e-12 && b.second < 1e-12);
}

#[test]
fn null_direction_geodesic_is_a_subgroup() {
    // Γ(n, n) vanishes on osc, so the geodesic is exp(t n), a straight line in exponential coordinates.
    let model = builtin::osc(&[1.0, 2.0]).unwrap();
    let np = model.null_pair().unwrap();
    let f = connection_field(&model, ConnectionKind::CanonicalWitt, &Point::zeros(6), false).unwrap();
    for k in 0..6 {
        assert_eq!(f.gamma[[k, np.n, np.n]], 0.0);
    }
    let v0 = FrameVector::basis(6, np.n);
    let tr = integrate_geodesic(&model, &Point::zeros(6), &v0, (0.0, 1.5), 200).unwrap();
    assert!((tr.endpoint() - &v0.0 * 1.5).amax() < 1e-12);
}

#[test]
fn quadratic_chart_geodesic_matches_closed_form() {
    let model = builtin::abelian_quadratic().unwrap();
    let x0 = Point::from_vec(vec![0.3, -0.1]);
    let v0 = [0.5, -0.6];
    let tr = integrate_geodesic(&model, &x0, &FrameVector::from_slice(&v0), (0.0, 1.0), DEFAULT_STEPS).unwrap();
    for (t, p) in tr.times.iter().zip(&tr.points) {
        for k in 0..2 {
            assert!((p[k] - (x0[k].atan() + v0[k] * t).tan()).abs() < 1e-10);
        }
    }
}

#[test]
fn first_variation_detects_non_geodesics() {
    let model = builtin::fefferman_heisenberg(1).unwrap();
    let path = integrate_frame_velocity(
        &model,
        &Point::zeros(4),
        |t| DVector::from_vec(vec![0.0, 0.0, 1.0 + t, 0.5 * t * t]),
        (0.0, 1.0),
        400,
    )
    .unwrap();
    let lambdas = vec![(0.0, 0.0); path.len()];
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let c: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let w = VariationField::from_fn(&path.times, |t| DVector::from_fn(4, |a, _| t * (1.0 - t) * c[a])).unwrap();
        worst = worst.max(first_variation(&model, &path, &w, &lambdas).unwrap().abs());
    }
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn symmetry_map_fixes_its_center() {
    let model = builtin::osc(&[1.0]).unwrap();
    let x = Point::from_vec(vec![0.1, -0.2, 0.05, 0.3]);
    assert_eq!(local_symmetry_map(&model, &x, &x).unwrap(), x);
}
