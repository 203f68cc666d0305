//! Curvature, Bianchi residuals and the parity-split symmetric-space predicates.

use ndarray::{Array4, ArrayD, ArrayView3, Axis, IxDyn};
use serde::Serialize;

use crate::connection::{connection_field, frame_derivative, nabla_all, ConnectionField, ConnectionKind, DERIV_STEP};
use crate::error::{Result, WittError};
use crate::witt::{FrameModel, Point, WittStructure};

/// `r[[d, a, b, c]] = R^d_abc` with `R(E_a, E_b) E_c = R^d_abc E_d`.
pub type CurvatureField = Array4<f64>;

/// Curvature from coefficients, their frame derivatives and the structure functions.
pub fn curvature_from(field: &ConnectionField) -> Result<CurvatureField> {
    let dg = field
        .dgamma
        .as_ref()
        .ok_or_else(|| WittError::NotApplicable("curvature needs coefficient derivatives".into()))?;
    let g = &field.gamma;
    let c = &field.c;
    let m = g.dim().0;
    let mut r = Array4::zeros((m, m, m, m));
    for d in 0..m {
        for a in 0..m {
            for b in 0..m {
                for cc in 0..m {
                    let mut acc = dg[[a, d, b, cc]] - dg[[b, d, a, cc]];
                    for e in 0..m {
                        acc += g[[d, a, e]] * g[[e, b, cc]] - g[[d, b, e]] * g[[e, a, cc]]
                            - c[[e, a, b]] * g[[d, e, cc]];
                    }
                    r[[d, a, b, cc]] = acc;
                }
            }
        }
    }
    Ok(r)
}

/// Curvature of the canonical Witt connection at `x`.
pub fn curvature_tensor(model: &FrameModel, x: &Point) -> Result<CurvatureField> {
    curvature_with(model, ConnectionKind::CanonicalWitt, x)
}

pub fn curvature_with(model: &FrameModel, kind: ConnectionKind, x: &Point) -> Result<CurvatureField> {
    curvature_from(&connection_field(model, kind, x, true)?)
}

/// `R_abcd = g(R(E_a, E_b) E_c, E_d)`.
pub fn lower_curvature(s: &WittStructure, r: &CurvatureField) -> Array4<f64> {
    let m = s.dim();
    let g = s.gram();
    Array4::from_shape_fn((m, m, m, m), |(a, b, c, d)| {
        (0..m).map(|e| r[[e, a, b, c]] * g[(e, d)]).sum()
    })
}

/// Connection, curvature and their covariant derivatives at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub field: ConnectionField,
    pub curvature: CurvatureField,
    /// `nabla_t[[e, c, a, b]] = (∇_e T)^c_ab`.
    pub nabla_t: ArrayD<f64>,
    /// `nabla_r[[e, d, a, b, c]] = (∇_e R)^d_abc`.
    pub nabla_r: ArrayD<f64>,
}

/// Frame derivatives `E_e(R)`: zero for left-invariant frames, otherwise a
/// fourth-order central difference of the jet-evaluated curvature.
pub fn curvature_derivative(model: &FrameModel, kind: ConnectionKind, x: &Point) -> Result<ArrayD<f64>> {
    let m = model.dim();
    let mut out = ArrayD::zeros(IxDyn(&[m, m, m, m, m]));
    if model.is_lie() {
        return Ok(out);
    }
    let f = model.frame_matrix(x)?;
    let field = |p: &Point| -> Result<ArrayD<f64>> { Ok(curvature_with(model, kind, p)?.into_dyn()) };
    for e in 0..m {
        let dir = f.column(e).into_owned();
        let d = frame_derivative(&field, x, &dir, DERIV_STEP)?;
        out.index_axis_mut(Axis(0), e).assign(&d);
    }
    Ok(out)
}

pub fn geometry_at(model: &FrameModel, kind: ConnectionKind, x: &Point) -> Result<PointGeometry> {
    let field = connection_field(model, kind, x, true)?;
    let curvature = curvature_from(&field)?;
    let dt = field.dtorsion.clone().expect("derivatives requested").into_dyn();
    let nabla_t = nabla_all(&field.gamma.view(), &field.torsion.clone().into_dyn(), 1, Some(&dt));
    let dr = curvature_derivative(model, kind, x)?;
    let nabla_r = nabla_all(&field.gamma.view(), &curvature.clone().into_dyn(), 1, Some(&dr));
    Ok(PointGeometry {
        field,
        curvature,
        nabla_t,
        nabla_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BianchiResiduals {
    /// `max |b(R) - d^∇T|` over frame triples.
    pub first: f64,
    /// `max |d^∇R|` over frame triples.
    pub second: f64,
}

fn cyclic(a: usize, b: usize, c: usize) -> [(usize, usize, usize); 3] {
    [(a, b, c), (b, c, a), (c, a, b)]
}

/// Both Bianchi residuals from precomputed geometry.
pub fn bianchi_of(geo: &PointGeometry) -> BianchiResiduals {
    let t = &geo.field.torsion;
    let r = &geo.curvature;
    let nt = &geo.nabla_t;
    let nr = &geo.nabla_r;
    let m = t.dim().0;
    let mut first = 0.0f64;
    let mut second = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for z in 0..m {
                for d in 0..m {
                    let mut acc = 0.0;
                    for (x, y, w) in cyclic(a, b, z) {
                        acc += r[[d, x, y, w]] - nt[[x, d, y, w]];
                        for f in 0..m {
                            acc -= t[[f, x, y]] * t[[d, f, w]];
                        }
                    }
                    first = first.max(acc.abs());
                    for cc in 0..m {
                        let mut acc = 0.0;
                        for (x, y, w) in cyclic(a, b, z) {
                            acc += nr[[x, d, y, w, cc]];
                            for f in 0..m {
                                acc += t[[f, x, y]] * r[[d, f, w, cc]];
                            }
                        }
                        second = second.max(acc.abs());
                    }
                }
            }
        }
    }
    BianchiResiduals { first, second }
}

pub fn bianchi_residuals(model: &FrameModel, kind: ConnectionKind, x: &Point) -> Result<BianchiResiduals> {
    Ok(bianchi_of(&geometry_at(model, kind, x)?))
}

/// Residuals of the necessary conditions for a locally symmetric Witt space,
/// with `V+` and `V-` the sums of even and odd blocks. Values are frame-component
/// maxima; none of them asserts that the space is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricSpaceReport {
    /// `[V+, V+]` escaping `V+`.
    pub bracket_closure: f64,
    /// `T(V-, V-)` escaping `V+`.
    pub torsion_even: f64,
    /// `T(V+, V-)` escaping `V-`.
    pub torsion_odd: f64,
    /// `R(V+, V-)`.
    pub curvature_mixed: f64,
    /// `∇_{V-} T`.
    pub parallel_t: f64,
    /// `∇_{V-} R`.
    pub parallel_r: f64,
}

impl SymmetricSpaceReport {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("bracket_closure", self.bracket_closure),
            ("torsion_even", self.torsion_even),
            ("torsion_odd", self.torsion_odd),
            ("curvature_mixed", self.curvature_mixed),
            ("parallel_t", self.parallel_t),
            ("parallel_r", self.parallel_r),
        ]
    }

    fn merge(self, o: Self) -> Self {
        SymmetricSpaceReport {
            bracket_closure: self.bracket_closure.max(o.bracket_closure),
            torsion_even: self.torsion_even.max(o.torsion_even),
            torsion_odd: self.torsion_odd.max(o.torsion_odd),
            curvature_mixed: self.curvature_mixed.max(o.curvature_mixed),
            parallel_t: self.parallel_t.max(o.parallel_t),
            parallel_r: self.parallel_r.max(o.parallel_r),
        }
    }
}

fn max_over3(t: &ArrayView3<f64>, ks: &[usize], as_: &[usize], bs: &[usize]) -> f64 {
    let mut w = 0.0f64;
    for &k in ks {
        for &a in as_ {
            for &b in bs {
                w = w.max(t[[k, a, b]].abs());
            }
        }
    }
    w
}

pub fn symmetric_report_at(s: &WittStructure, geo: &PointGeometry) -> Result<SymmetricSpaceReport> {
    let (even, odd) = s.parity_split()?;
    let m = s.dim();
    let c = geo.field.c.view();
    let t = geo.field.torsion.view();
    let r = &geo.curvature;
    let mut curvature_mixed = 0.0f64;
    for d in 0..m {
        for &a in &even {
            for &b in &odd {
                for cc in 0..m {
                    curvature_mixed = curvature_mixed.max(r[[d, a, b, cc]].abs());
                }
            }
        }
    }
    let directional_max = |arr: &ArrayD<f64>| {
        odd.iter()
            .map(|&e| arr.index_axis(Axis(0), e).iter().fold(0.0f64, |w, v| w.max(v.abs())))
            .fold(0.0f64, f64::max)
    };
    Ok(SymmetricSpaceReport {
        bracket_closure: max_over3(&c, &odd, &even, &even),
        torsion_even: max_over3(&t, &odd, &odd, &odd),
        torsion_odd: max_over3(&t, &even, &even, &odd),
        curvature_mixed,
        parallel_t: directional_max(&geo.nabla_t),
        parallel_r: directional_max(&geo.nabla_r),
    })
}

pub fn symmetric_space_report(model: &FrameModel, points: &[Point]) -> Result<SymmetricSpaceReport> {
    symmetric_space_report_with(model, ConnectionKind::CanonicalWitt, points)
}

pub fn symmetric_space_report_with(
    model: &FrameModel,
    kind: ConnectionKind,
    points: &[Point],
) -> Result<SymmetricSpaceReport> {
    model.structure().parity_split()?;
    let mut rep: Option<SymmetricSpaceReport> = None;
    for x in points {
        let r = symmetric_report_at(model.structure(), &geometry_at(model, kind, x)?)?;
        rep = Some(match rep {
            None => r,
            Some(p) => p.merge(r),
        });
    }
    rep.ok_or_else(|| WittError::BadParams("no sample points".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::builtin;

    #[test]
    fn abelian_is_flat() {
        let m = builtin::abelian(3).unwrap();
        let r = curvature_tensor(&m, &Point::zeros(3)).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        let b = bianchi_residuals(&m, ConnectionKind::CanonicalWitt, &Point::zeros(3)).unwrap();
        assert_eq!((b.first, b.second), (0.0, 0.0));
    }

    #[test]
    fn curvature_is_skew() {
        let m = builtin::osc(&[1.0, 2.0]).unwrap();
        let r = curvature_tensor(&m, &Point::zeros(6)).unwrap();
        let rl = lower_curvature(m.structure(), &r);
        let n = 6;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        assert!((r[[d, a, b, c]] + r[[d, b, a, c]]).abs() < 1e-14);
                        assert!((rl[[a, b, c, d]] + rl[[a, b, d, c]]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn parity_needs_both_parities() {
        let m = builtin::osc(&[1.0]).unwrap();
        let m = m
            .relabel(&[
                (crate::witt::BlockLabel::q(-1), crate::witt::BlockLabel::q(-2)),
                (crate::witt::BlockLabel::p(1), crate::witt::BlockLabel::p(2)),
                (crate::witt::BlockLabel::pstar(1), crate::witt::BlockLabel::pstar(2)),
            ])
            .unwrap();
        assert!(matches!(
            symmetric_space_report(&m, &[Point::zeros(4)]),
            Err(WittError::ParityUnassigned)
        ));
    }
}
