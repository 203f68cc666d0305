//! Built-in models: flat groups, the oscillator groups `osc_λ` and `osh_λ`,
//! the Fefferman space over the Heisenberg group and two synthetic charts.

use nalgebra::DMatrix;
use ndarray::Array3;

use super::chart::ChartFrame;
use super::expr::Expr;
use crate::error::{Result, WittError};
use crate::hermitian::FeffermanData;
use crate::witt::{validate_witt_structure, Block, BlockLabel, FrameBackend, FrameModel, ValidationMode, WittGrading};

pub const BUILTIN_NAMES: [&str; 7] = [
    "abelian",
    "osc",
    "osh",
    "fefferman_heisenberg",
    "abelian_robinson",
    "abelian_quadratic",
    "riemannian_chart",
];

/// Parameters of [`builtin_model`]; unused fields are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuiltinParams {
    pub lambda: Option<Vec<f64>>,
    pub m: Option<usize>,
}

fn set_bracket(c: &mut Array3<f64>, a: usize, b: usize, k: usize, v: f64) {
    c[[k, a, b]] += v;
    c[[k, b, a]] -= v;
}

fn check_lambda(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(WittError::BadParams("lambda must have at least one entry".into()));
    }
    if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(WittError::BadParams(format!("lambda entries must be positive, got {l}")));
    }
    Ok(())
}

/// Warning text when `λ` breaks the normalization `1 <= λ_1 <= ... <= λ_m`.
pub fn lambda_ordering_warning(lambda: &[f64]) -> Option<String> {
    let sorted = lambda.windows(2).all(|w| w[0] <= w[1]);
    let lower = lambda.first().is_some_and(|l| *l >= 1.0);
    if sorted && lower {
        None
    } else {
        Some(format!(
            "lambda = {lambda:?} is not normalized as 1 <= lambda_1 <= ... <= lambda_m; formulas do not depend on it"
        ))
    }
}

/// Flat group `R^d` with one-dimensional anisotropic blocks `q0, q-1, ...`.
pub fn abelian(d: usize) -> Result<FrameModel> {
    if d == 0 {
        return Err(WittError::BadParams("dimension must be at least 1".into()));
    }
    let blocks = (0..d).map(|i| Block::new(BlockLabel::q(-(i as i32)), vec![i])).collect();
    let s = validate_witt_structure(WittGrading::new(d, blocks), DMatrix::identity(d, d), ValidationMode::Strict)?;
    FrameModel::new("abelian", s, FrameBackend::LieConstant(Array3::zeros((d, d, d))))
}

/// Slots: `0 = ε1 = n`, `1 = ε0 = n*`, `2..2+m = e_i`, `2+m..2+2m = e_{m+i}`.
fn oscillator_blocks(m: usize, hyperbolic: bool) -> Vec<Block> {
    let lo: Vec<usize> = (2..2 + m).collect();
    let hi: Vec<usize> = (2 + m..2 + 2 * m).collect();
    let (l1, l2) = if hyperbolic {
        (BlockLabel::p(2), BlockLabel::pstar(2))
    } else {
        (BlockLabel::q(0), BlockLabel::q(-1))
    };
    vec![
        Block::new(BlockLabel::p(1), vec![0]),
        Block::new(BlockLabel::pstar(1), vec![1]),
        Block::new(l1, lo),
        Block::new(l2, hi),
    ]
}

fn null_plane_gram(dim: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    g[(0, 1)] = 1.0;
    g[(1, 0)] = 1.0;
    g
}

/// The oscillator group with `[ε1, e_i] = λ_i e_{m+i}`, `[ε1, e_{m+i}] = -λ_i e_i`,
/// `[e_i, e_{m+j}] = δ_ij ε0` and `g(e_i, e_i) = λ_i / 2`.
pub fn osc(lambda: &[f64]) -> Result<FrameModel> {
    check_lambda(lambda)?;
    let m = lambda.len();
    let dim = 2 * m + 2;
    let mut g = null_plane_gram(dim);
    let mut c = Array3::zeros((dim, dim, dim));
    for (i, &l) in lambda.iter().enumerate() {
        let (e, f) = (2 + i, 2 + m + i);
        g[(e, e)] = l / 2.0;
        g[(f, f)] = l / 2.0;
        set_bracket(&mut c, 0, e, f, l);
        set_bracket(&mut c, 0, f, e, -l);
        set_bracket(&mut c, e, f, 1, 1.0);
    }
    let s = validate_witt_structure(WittGrading::new(dim, oscillator_blocks(m, false)), g, ValidationMode::Strict)?;
    FrameModel::new("osc", s, FrameBackend::LieConstant(c))?.with_null_pair(0, 1)
}

/// Hyperbolic variant: `[ε1, e_i] = λ_i e_i`, `[ε1, e_{m+i}] = -λ_i e_{m+i}`,
/// `[e_i, e_{m+j}] = δ_ij ε0`, with `e_i`, `e_{m+i}` spanning an isotropic pair
/// and `g(e_i, e_{m+i}) = λ_i / 2`.
pub fn osh(lambda: &[f64]) -> Result<FrameModel> {
    check_lambda(lambda)?;
    let m = lambda.len();
    let dim = 2 * m + 2;
    let mut g = null_plane_gram(dim);
    let mut c = Array3::zeros((dim, dim, dim));
    for (i, &l) in lambda.iter().enumerate() {
        let (e, f) = (2 + i, 2 + m + i);
        g[(e, f)] = l / 2.0;
        g[(f, e)] = l / 2.0;
        set_bracket(&mut c, 0, e, e, l);
        set_bracket(&mut c, 0, f, f, -l);
        set_bracket(&mut c, e, f, 1, 1.0);
    }
    let s = validate_witt_structure(WittGrading::new(dim, oscillator_blocks(m, true)), g, ValidationMode::Strict)?;
    FrameModel::new("osh", s, FrameBackend::LieConstant(c))?.with_null_pair(0, 1)
}

fn robinson_structure(m: usize) -> Result<(crate::witt::WittStructure, DMatrix<f64>)> {
    if m == 0 {
        return Err(WittError::BadParams("m must be at least 1".into()));
    }
    let dim = 2 * m + 2;
    let mut g = null_plane_gram(dim);
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..m {
        let (x, y) = (2 + i, 2 + m + i);
        g[(x, x)] = 1.0;
        g[(y, y)] = 1.0;
        j[(y, x)] = 1.0;
        j[(x, y)] = -1.0;
    }
    let blocks = vec![
        Block::new(BlockLabel::p(1), vec![0]),
        Block::new(BlockLabel::pstar(1), vec![1]),
        Block::new(BlockLabel::q(0), (2..dim).collect()),
    ];
    let s = validate_witt_structure(WittGrading::new(dim, blocks), g, ValidationMode::Strict)?;
    Ok((s, j))
}

/// Fefferman space of the flat Heisenberg group `H^{2m+1}` in coordinates
/// `(phi, t, x_1..x_m, y_1..y_m)`: `n = ∂_phi`, `n* = ∂_t`,
/// `X_i = ∂_{x_i} + (y_i/2) ∂_t`, `Y_i = ∂_{y_i} - (x_i/2) ∂_t`, `J X_i = Y_i`.
pub fn fefferman_heisenberg(m: usize) -> Result<FrameModel> {
    let (s, j) = robinson_structure(m)?;
    let dim = 2 * m + 2;
    let mut coords = vec!["phi".to_string(), "t".to_string()];
    coords.extend((1..=m).map(|i| format!("x{i}")));
    coords.extend((1..=m).map(|i| format!("y{i}")));
    let unit = |mu: usize| {
        let mut row = vec![Expr::constant(0.0); dim];
        row[mu] = Expr::constant(1.0);
        row
    };
    let mut frame = vec![unit(0), unit(1)];
    for i in 0..m {
        let mut row = unit(2 + i);
        row[1] = Expr::coord(2 + m + i) / Expr::constant(2.0);
        frame.push(row);
    }
    for i in 0..m {
        let mut row = unit(2 + m + i);
        row[1] = -(Expr::coord(2 + i) / Expr::constant(2.0));
        frame.push(row);
    }
    let chart = ChartFrame::new(coords, frame)?;
    Ok(FrameModel::new("fefferman_heisenberg", s, FrameBackend::Chart(chart))?
        .with_null_pair(0, 1)?
        .with_complex_structure(j)?
        .with_fefferman(FeffermanData::flat(m, dim)))
}

/// Flat group with the null-plane and screen layout of the Fefferman model.
pub fn abelian_robinson(m: usize) -> Result<FrameModel> {
    let (s, j) = robinson_structure(m)?;
    let dim = 2 * m + 2;
    FrameModel::new("abelian_robinson", s, FrameBackend::LieConstant(Array3::zeros((dim, dim, dim))))?
        .with_null_pair(0, 1)?
        .with_complex_structure(j)
}

/// Flat plane with the commuting frame `E_1 = (1 + x^2) ∂_x`, `E_2 = (1 + y^2) ∂_y`.
/// Geodesics are `x(t) = tan(atan(x_0) + v_1 t)` and likewise in `y`.
pub fn abelian_quadratic() -> Result<FrameModel> {
    let chart = ChartFrame::parse(&["x", "y"], &[&["1 + x*x", "0"], &["0", "1 + y*y"]])?;
    let blocks = vec![Block::new(BlockLabel::q(0), vec![0]), Block::new(BlockLabel::q(-1), vec![1])];
    let s = validate_witt_structure(WittGrading::new(2, blocks), DMatrix::identity(2, 2), ValidationMode::Strict)?;
    FrameModel::new("abelian_quadratic", s, FrameBackend::Chart(chart))
}

/// Riemannian 3-manifold with the orthonormal frame `∂_x`, `(1 + x^2) ∂_y + sin(x) ∂_z`, `∂_z`.
pub fn riemannian_chart() -> Result<FrameModel> {
    let chart = ChartFrame::parse(
        &["x", "y", "z"],
        &[&["1", "0", "0"], &["0", "1 + x*x", "sin(x)"], &["0", "0", "1"]],
    )?;
    let blocks = vec![Block::new(BlockLabel::q(0), vec![0, 1, 2])];
    let s = validate_witt_structure(WittGrading::new(3, blocks), DMatrix::identity(3, 3), ValidationMode::Strict)?;
    FrameModel::new("riemannian_chart", s, FrameBackend::Chart(chart))
}

/// Looks up a built-in by name. `abelian` reads its dimension from `m` (default 4),
/// `osc`/`osh` read `lambda` (default `[1]`), the Robinson models read `m` (default 1).
pub fn builtin_model(name: &str, params: &BuiltinParams) -> Result<FrameModel> {
    let lambda = params.lambda.clone().unwrap_or_else(|| vec![1.0]);
    match name {
        "abelian" => abelian(params.m.unwrap_or(4)),
        "osc" => osc(&lambda),
        "osh" => osh(&lambda),
        "fefferman_heisenberg" => fefferman_heisenberg(params.m.unwrap_or(1)),
        "abelian_robinson" => abelian_robinson(params.m.unwrap_or(1)),
        "abelian_quadratic" => abelian_quadratic(),
        "riemannian_chart" => riemannian_chart(),
        other => Err(WittError::BadParams(format!(
            "unknown built-in model '{other}' (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witt::Point;

    #[test]
    fn osc_gram_matches_metric() {
        let m = osc(&[1.0]).unwrap();
        let g = m.structure().gram();
        assert_eq!(g[(2, 2)], 0.5);
        assert_eq!(g[(3, 3)], 0.5);
        assert_eq!(g[(0, 1)], 1.0);
        assert_eq!(g.iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn osc_bracket_lands_on_eps0() {
        let m = osc(&[1.0]).unwrap();
        let c = m.structure_functions(&Point::zeros(4)).unwrap();
        assert_eq!(c[[1, 2, 3]], 1.0);
    }

    #[test]
    fn heisenberg_lifts_bracket_to_minus_dt() {
        let m = fefferman_heisenberg(1).unwrap();
        let c = m.structure_functions(&Point::from_vec(vec![0.3, -1.0, 0.7, 0.2])).unwrap();
        assert!((c[[1, 2, 3]] + 1.0).abs() < 1e-15);
        assert!(c.iter().map(|v| v.abs()).sum::<f64>() - 2.0 < 1e-14);
    }

    #[test]
    fn params_are_checked() {
        assert!(matches!(osc(&[]), Err(WittError::BadParams(_))));
        assert!(matches!(osh(&[-1.0]), Err(WittError::BadParams(_))));
        assert!(matches!(abelian(0), Err(WittError::BadParams(_))));
        assert!(matches!(
            builtin_model("nope", &BuiltinParams::default()),
            Err(WittError::BadParams(_))
        ));
    }

    #[test]
    fn ordering_warning() {
        assert!(lambda_ordering_warning(&[1.0, 2.0]).is_none());
        assert!(lambda_ordering_warning(&[2.0, 1.0]).is_some());
        assert!(lambda_ordering_warning(&[0.5]).is_some());
    }
}
