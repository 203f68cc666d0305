//! The canonical Witt connection: torsion, contorsion, Koszul coefficients and
//! covariant derivatives in an adapted frame.

use nalgebra::DVector;
use ndarray::{s, Array3, Array4, ArrayD, ArrayView3, Axis, Dimension, IxDyn};
use serde::Serialize;

use crate::error::{Result, WittError};
use crate::witt::{BlockLabel, FrameModel, Point, WittStructure};

pub mod specialized;

/// `T[[c, a, b]] = T^c_ab`.
pub type TorsionField = Array3<f64>;
/// `K[[a, b, c]] = K(E_a, E_b, E_c)`.
pub type ContorsionK = Array3<f64>;
/// `gamma[[c, a, b]] = Γ^c_ab` with `∇_{E_a} E_b = Γ^c_ab E_c`.
pub type ConnectionCoefficients = Array3<f64>;

/// Which torsion prescription builds the connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectionKind {
    #[default]
    CanonicalWitt,
    /// Real-form connection with parallel screen complex structure.
    Lichnerowicz,
}

fn column(c: &ArrayView3<f64>, a: usize, b: usize) -> DVector<f64> {
    DVector::from_iterator(c.dim().0, c.slice(s![.., a, b]).iter().copied())
}

/// `(L_{E_a} E_b^flat)(E_e) = -g(E_b, [E_a, E_e])`, as a covector in `e`.
pub(crate) fn lie_flat(s: &WittStructure, c: &ArrayView3<f64>, a: usize, b: usize) -> DVector<f64> {
    let m = s.dim();
    let g = s.gram();
    DVector::from_fn(m, |e, _| {
        let mut acc = 0.0;
        for d in 0..m {
            acc -= g[(b, d)] * c[[d, a, e]];
        }
        acc
    })
}

/// `τ^j(E_a, E_b)` with `E_a` in block `i` and `E_b` in block `j`; zero when `i = j`.
pub(crate) fn tau_slots(s: &WittStructure, c: &ArrayView3<f64>, a: usize, b: usize) -> DVector<f64> {
    let m = s.dim();
    let bi = s.block_of_slot(a);
    let bj = s.block_of_slot(b);
    if bi == bj {
        return DVector::zeros(m);
    }
    let lj = s.grading().blocks()[bj].label;
    let mut cov = lie_flat(s, c, a, b);
    if lj.is_isotropic() && bi == s.star_of_block(bj) {
        cov += lie_flat(s, c, b, a);
    }
    let raised = s.gram_inv() * cov;
    let diff = raised - column(c, a, b);
    s.project_blocks(&diff, |k| k == bj) * 0.5
}

/// The τ tensor restricted to arguments in blocks `i` and `j`:
/// `out[[k, a, b]] = τ^j(E_a, E_b)^k` for `a` in `i`, `b` in `j`.
pub fn tau_tensor(model: &FrameModel, x: &Point, i: BlockLabel, j: BlockLabel) -> Result<Array3<f64>> {
    let s = model.structure();
    let bi = s.grading().block(i)?.slots.clone();
    let bj = s.grading().block(j)?.slots.clone();
    let c = model.structure_functions(x)?;
    let m = s.dim();
    let mut out = Array3::zeros((m, m, m));
    for &a in &bi {
        for &b in &bj {
            let t = tau_slots(s, &c.view(), a, b);
            for k in 0..m {
                out[[k, a, b]] = t[k];
            }
        }
    }
    Ok(out)
}

/// Torsion of the canonical Witt connection from structure functions at a point.
pub fn witt_torsion(s: &WittStructure, c: &ArrayView3<f64>) -> TorsionField {
    let m = s.dim();
    let mut t = Array3::zeros((m, m, m));
    for a in 0..m {
        for b in (a + 1)..m {
            let bi = s.block_of_slot(a);
            let bj = s.block_of_slot(b);
            let mut v = -s.project_blocks(&column(c, a, b), |k| k != bi && k != bj);
            if bi != bj {
                v += tau_slots(s, c, a, b) - tau_slots(s, c, b, a);
            }
            for k in 0..m {
                t[[k, a, b]] = v[k];
                t[[k, b, a]] = -v[k];
            }
        }
    }
    t
}

pub fn canonical_torsion(model: &FrameModel, x: &Point) -> Result<TorsionField> {
    let c = model.structure_functions(x)?;
    Ok(witt_torsion(model.structure(), &c.view()))
}

/// `K(X,Y,Z) = ½(g(T(X,Y),Z) - g(T(Y,Z),X) + g(T(Z,X),Y))`.
pub fn contorsion(s: &WittStructure, t: &ArrayView3<f64>) -> ContorsionK {
    let m = s.dim();
    let g = s.gram();
    // tl[[a, b, c]] = g(T(E_a, E_b), E_c)
    let mut tl = Array3::<f64>::zeros((m, m, m));
    for a in 0..m {
        for b in 0..m {
            for cc in 0..m {
                let mut acc = 0.0;
                for d in 0..m {
                    acc += t[[d, a, b]] * g[(d, cc)];
                }
                tl[[a, b, cc]] = acc;
            }
        }
    }
    Array3::from_shape_fn((m, m, m), |(a, b, cc)| {
        0.5 * (tl[[a, b, cc]] - tl[[b, cc, a]] + tl[[cc, a, b]])
    })
}

/// Koszul formula with constant Gram matrix plus contorsion, index raised.
pub fn koszul_coefficients(s: &WittStructure, c: &ArrayView3<f64>, t: &ArrayView3<f64>) -> ConnectionCoefficients {
    let m = s.dim();
    let g = s.gram();
    let gi = s.gram_inv();
    let k = contorsion(s, t);
    // cl[[a, b, e]] = g([E_a, E_b], E_e)
    let mut cl = Array3::<f64>::zeros((m, m, m));
    for a in 0..m {
        for b in 0..m {
            for e in 0..m {
                let mut acc = 0.0;
                for d in 0..m {
                    acc += c[[d, a, b]] * g[(d, e)];
                }
                cl[[a, b, e]] = acc;
            }
        }
    }
    let lower = Array3::from_shape_fn((m, m, m), |(a, b, cc)| {
        0.5 * (cl[[a, b, cc]] - cl[[b, cc, a]] + cl[[cc, a, b]]) + k[[a, b, cc]]
    });
    let mut gamma = Array3::zeros((m, m, m));
    for d in 0..m {
        for a in 0..m {
            for b in 0..m {
                let mut acc = 0.0;
                for cc in 0..m {
                    acc += gi[(d, cc)] * lower[[a, b, cc]];
                }
                gamma[[d, a, b]] = acc;
            }
        }
    }
    gamma
}

pub fn connection_coefficients(model: &FrameModel, x: &Point) -> Result<ConnectionCoefficients> {
    let c = model.structure_functions(x)?;
    let t = witt_torsion(model.structure(), &c.view());
    Ok(koszul_coefficients(model.structure(), &c.view(), &t.view()))
}

/// `∇_a E_b - ∇_b E_a - [E_a, E_b]`.
pub fn torsion_of(gamma: &ArrayView3<f64>, c: &ArrayView3<f64>) -> TorsionField {
    let m = c.dim().0;
    Array3::from_shape_fn((m, m, m), |(k, a, b)| gamma[[k, a, b]] - gamma[[k, b, a]] - c[[k, a, b]])
}

fn torsion_rule(model: &FrameModel, kind: ConnectionKind, c: &ArrayView3<f64>) -> Result<TorsionField> {
    match kind {
        ConnectionKind::CanonicalWitt => Ok(witt_torsion(model.structure(), c)),
        ConnectionKind::Lichnerowicz => {
            let j = model
                .complex_structure()
                .ok_or_else(|| WittError::NotApplicable("model has no screen complex structure".into()))?;
            Ok(crate::hermitian::lichnerowicz_terms_from(model, j, c)?.total())
        }
    }
}

/// Everything about a connection at one point. Derivative arrays put the
/// frame direction first: `dgamma[[e, c, a, b]] = E_e(Γ^c_ab)`.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    pub c: Array3<f64>,
    pub torsion: TorsionField,
    pub gamma: ConnectionCoefficients,
    pub dc: Option<Array4<f64>>,
    pub dtorsion: Option<Array4<f64>>,
    pub dgamma: Option<Array4<f64>>,
}

/// Builds the connection at `x`; with `derivatives` the frame derivatives of
/// `c`, `T` and `Γ` are filled in as well.
pub fn connection_field(
    model: &FrameModel,
    kind: ConnectionKind,
    x: &Point,
    derivatives: bool,
) -> Result<ConnectionField> {
    let s = model.structure();
    let m = s.dim();
    if !derivatives {
        let c = model.structure_functions(x)?;
        let torsion = torsion_rule(model, kind, &c.view())?;
        let gamma = koszul_coefficients(s, &c.view(), &torsion.view());
        return Ok(ConnectionField {
            c,
            torsion,
            gamma,
            dc: None,
            dtorsion: None,
            dgamma: None,
        });
    }
    let jet = model.structure_jet(x)?;
    let c = jet.c;
    let torsion = torsion_rule(model, kind, &c.view())?;
    let gamma = koszul_coefficients(s, &c.view(), &torsion.view());
    // Torsion and coefficients are linear in the structure functions.
    let mut dt = Array4::zeros((m, m, m, m));
    let mut dg = Array4::zeros((m, m, m, m));
    if !model.is_lie() {
        for e in 0..m {
            let dce = jet.dc.index_axis(Axis(0), e);
            let te = torsion_rule(model, kind, &dce)?;
            let ge = koszul_coefficients(s, &dce, &te.view());
            dt.index_axis_mut(Axis(0), e).assign(&te);
            dg.index_axis_mut(Axis(0), e).assign(&ge);
        }
    }
    Ok(ConnectionField {
        c,
        torsion,
        gamma,
        dc: Some(jet.dc),
        dtorsion: Some(dt),
        dgamma: Some(dg),
    })
}

/// `∇_e S` for every direction `e`. `S` has its `upper` contravariant axes
/// first; `ds`, if given, holds `E_e(S)` with the direction axis first.
pub fn nabla_all(gamma: &ArrayView3<f64>, s: &ArrayD<f64>, upper: usize, ds: Option<&ArrayD<f64>>) -> ArrayD<f64> {
    let m = gamma.dim().0;
    let rank = s.ndim();
    let mut shape = vec![m];
    shape.extend_from_slice(s.shape());
    let mut out = match ds {
        Some(d) => d.clone(),
        None => ArrayD::zeros(IxDyn(&shape)),
    };
    let mut idx = vec![0usize; rank + 1];
    let mut src = vec![0usize; rank];
    for (multi, v) in out.indexed_iter_mut() {
        for (k, i) in multi.slice().iter().enumerate() {
            idx[k] = *i;
        }
        let a = idx[0];
        let comp = &idx[1..];
        let mut acc = 0.0;
        for slot in 0..rank {
            src.copy_from_slice(comp);
            for e in 0..m {
                src[slot] = e;
                let val = s[IxDyn(&src)];
                if val == 0.0 {
                    continue;
                }
                if slot < upper {
                    acc += gamma[[comp[slot], a, e]] * val;
                } else {
                    acc -= gamma[[e, a, comp[slot]]] * val;
                }
            }
        }
        *v += acc;
    }
    out
}

/// `∇_{E_a}` of a tensor field given as a function of the point, at `x`.
/// The frame derivative `E_a(S)` is taken by a fourth-order central difference
/// along the integral direction of `E_a`.
pub fn covariant_derivative<F>(
    model: &FrameModel,
    kind: ConnectionKind,
    field: F,
    upper: usize,
    a: usize,
    x: &Point,
) -> Result<ArrayD<f64>>
where
    F: Fn(&Point) -> Result<ArrayD<f64>>,
{
    let m = model.dim();
    if a >= m {
        return Err(WittError::Dimension { expected: m, found: a + 1 });
    }
    let conn = connection_field(model, kind, x, false)?;
    let s0 = field(x)?;
    let dir = model.frame_matrix(x)?.column(a).into_owned();
    let deriv = frame_derivative(&field, x, &dir, DERIV_STEP)?;
    let mut shape = vec![m];
    shape.extend_from_slice(s0.shape());
    let mut ds = ArrayD::zeros(IxDyn(&shape));
    ds.index_axis_mut(Axis(0), a).assign(&deriv);
    let all = nabla_all(&conn.gamma.view(), &s0, upper, Some(&ds));
    Ok(all.index_axis(Axis(0), a).to_owned())
}

pub(crate) const DERIV_STEP: f64 = 1e-3;

/// Fourth-order central difference of `field` along `x + h dir`.
pub(crate) fn frame_derivative<F>(field: &F, x: &Point, dir: &DVector<f64>, h: f64) -> Result<ArrayD<f64>>
where
    F: Fn(&Point) -> Result<ArrayD<f64>>,
{
    let at = |k: f64| field(&(x + dir * (k * h)));
    let p1 = at(1.0)?;
    let m1 = at(-1.0)?;
    let p2 = at(2.0)?;
    let m2 = at(-2.0)?;
    Ok(((&p1 - &m1) * 8.0 - (&p2 - &m2)) / (12.0 * h))
}

/// Residuals of metricity, block preservation and the torsion round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatibilityReport {
    /// `max |(∇_a g)(E_b, E_c)|`.
    pub metricity: f64,
    /// `max |Γ^c_ab|` over `c` outside the block of `b`.
    pub block_escape: f64,
    /// `max |(∇_a E_b - ∇_b E_a - [E_a, E_b]) - T(E_a, E_b)|`.
    pub torsion_roundtrip: f64,
}

impl CompatibilityReport {
    fn merge(self, o: Self) -> Self {
        CompatibilityReport {
            metricity: self.metricity.max(o.metricity),
            block_escape: self.block_escape.max(o.block_escape),
            torsion_roundtrip: self.torsion_roundtrip.max(o.torsion_roundtrip),
        }
    }
}

pub fn metricity_residual(s: &WittStructure, gamma: &ArrayView3<f64>) -> f64 {
    let m = s.dim();
    let g = s.gram();
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for cc in 0..m {
                let mut acc = 0.0;
                for e in 0..m {
                    acc -= gamma[[e, a, b]] * g[(e, cc)] + gamma[[e, a, cc]] * g[(b, e)];
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    worst
}

pub fn block_escape_residual(s: &WittStructure, gamma: &ArrayView3<f64>) -> f64 {
    let m = s.dim();
    let mut worst = 0.0f64;
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                if s.block_of_slot(k) != s.block_of_slot(b) {
                    worst = worst.max(gamma[[k, a, b]].abs());
                }
            }
        }
    }
    worst
}

fn max_abs_diff(a: &ArrayView3<f64>, b: &ArrayView3<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |w, (x, y)| w.max((x - y).abs()))
}

/// Residuals for explicitly supplied coefficients and torsion.
pub fn compatibility_of(
    s: &WittStructure,
    c: &ArrayView3<f64>,
    gamma: &ArrayView3<f64>,
    torsion: &ArrayView3<f64>,
) -> CompatibilityReport {
    CompatibilityReport {
        metricity: metricity_residual(s, gamma),
        block_escape: block_escape_residual(s, gamma),
        torsion_roundtrip: max_abs_diff(&torsion_of(gamma, c).view(), torsion),
    }
}

/// Maximum of each residual over the sample points.
pub fn compatibility_report(model: &FrameModel, kind: ConnectionKind, points: &[Point]) -> Result<CompatibilityReport> {
    let mut rep = CompatibilityReport {
        metricity: 0.0,
        block_escape: 0.0,
        torsion_roundtrip: 0.0,
    };
    for x in points {
        let f = connection_field(model, kind, x, false)?;
        rep = rep.merge(compatibility_of(
            model.structure(),
            &f.c.view(),
            &f.gamma.view(),
            &f.torsion.view(),
        ));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::builtin;

    #[test]
    fn abelian_connection_vanishes() {
        let m = builtin::abelian(4).unwrap();
        let x = Point::zeros(4);
        assert!(canonical_torsion(&m, &x).unwrap().iter().all(|v| *v == 0.0));
        assert!(connection_coefficients(&m, &x).unwrap().iter().all(|v| *v == 0.0));
        let rep = compatibility_report(&m, ConnectionKind::CanonicalWitt, &[x]).unwrap();
        assert_eq!(rep.metricity, 0.0);
        assert_eq!(rep.block_escape, 0.0);
    }

    #[test]
    fn tau_vanishes_on_equal_blocks() {
        let m = builtin::osc(&[1.0, 2.0]).unwrap();
        let x = Point::zeros(6);
        let t = tau_tensor(&m, &x, BlockLabel::q(0), BlockLabel::q(0)).unwrap();
        assert!(t.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn osc_torsion_between_screen_blocks() {
        let m = builtin::osc(&[1.0]).unwrap();
        let t = canonical_torsion(&m, &Point::zeros(4)).unwrap();
        // slots: n = 0, n* = 1, e1 = 2, e2 = 3
        assert_eq!(t[[1, 2, 3]], -1.0);
        assert_eq!(t[[0, 2, 3]], 0.0);
        assert_eq!(t[[2, 2, 3]], 0.0);
        assert_eq!(t[[3, 2, 3]], 0.0);
    }

    #[test]
    fn corrupted_coefficients_are_detected() {
        let m = builtin::osc(&[1.0]).unwrap();
        let x = Point::zeros(4);
        let f = connection_field(&m, ConnectionKind::CanonicalWitt, &x, false).unwrap();
        let mut bad = f.gamma.clone();
        bad[[0, 2, 3]] += 0.1;
        let rep = compatibility_of(m.structure(), &f.c.view(), &bad.view(), &f.torsion.view());
        assert!(rep.block_escape >= 0.1 - 1e-15);
        assert!(rep.metricity > 0.05);
    }
}
