//! Torsion of the canonical Witt connection written out for structures with a
//! rank-one null pair `(n, n*)` and at most two further summands.
//!
//! This is a separate evaluation path from [`super::witt_torsion`]: it works with
//! frame vectors, explicit Lie derivatives and block-restricted solves instead of
//! the general block-case formula, and serves as a cross-check.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;

use super::TorsionField;
use crate::error::{Result, WittError};
use crate::witt::{FrameModel, Point};

struct Ctx<'a> {
    c: &'a Array3<f64>,
    g: &'a DMatrix<f64>,
    m: usize,
    n: usize,
    nstar: usize,
}

impl Ctx<'_> {
    fn e(&self, a: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.m);
        v[a] = 1.0;
        v
    }

    fn br(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for a in 0..self.m {
            for b in 0..self.m {
                let s = x[a] * y[b];
                if s != 0.0 {
                    for k in 0..self.m {
                        out[k] += s * self.c[[k, a, b]];
                    }
                }
            }
        }
        out
    }

    fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * self.g * y)[(0, 0)]
    }

    fn sigma(&self, v: &DVector<f64>) -> f64 {
        self.g(&self.e(self.nstar), v)
    }

    fn sigma_star(&self, v: &DVector<f64>) -> f64 {
        self.g(&self.e(self.n), v)
    }

    // Exterior derivative of a frame-constant coefficient 1-form: dα(X,Y) = -α([X,Y]).
    fn dsigma(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        -self.sigma(&self.br(x, y))
    }

    fn dsigma_star(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        -self.sigma_star(&self.br(x, y))
    }

    // (L_Z g)(X, Y) with constant metric coefficients.
    fn lie_g(&self, z: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        -self.g(&self.br(z, x), y) - self.g(x, &self.br(z, y))
    }

    // (L_X Y^flat)(Z) = X g(Y,Z) - g(Y, [X,Z]) = -g(Y, [X,Z]).
    fn lie_flat(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        -self.g(y, &self.br(x, z))
    }

    fn proj(&self, v: &DVector<f64>, slots: &[usize]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for &s in slots {
            out[s] = v[s];
        }
        out
    }

    /// The vector `u` in span(`target`) with `g(u, E_w) = alpha(E_w)` for every
    /// `w` in `test` (the dual block of `target`).
    fn raise_into(&self, alpha: impl Fn(&DVector<f64>) -> f64, target: &[usize], test: &[usize]) -> DVector<f64> {
        let k = target.len();
        let a = DMatrix::from_fn(k, k, |r, col| self.g[(test[r], target[col])]);
        let rhs = DVector::from_fn(k, |r, _| alpha(&self.e(test[r])));
        let sol = a.lu().solve(&rhs).expect("pairing is non-degenerate after validation");
        let mut out = DVector::zeros(self.m);
        for (i, &s) in target.iter().enumerate() {
            out[s] = sol[i];
        }
        out
    }
}

#[derive(Clone)]
struct Part {
    slots: Vec<usize>,
    dual: Vec<usize>,
    isotropic: bool,
}

/// Canonical torsion via the explicit null-pair formulas.
///
/// Requires a null pair and one or two further summands; two summands must be
/// two anisotropic blocks or one isotropic pair.
pub fn specialized_torsion(model: &FrameModel, x: &Point) -> Result<TorsionField> {
    let np = model.null_pair().ok_or(WittError::NotNullPairModel)?;
    let s = model.structure();
    let m = s.dim();
    let nblk = s.block_of_slot(np.n);
    let sblk = s.block_of_slot(np.nstar);
    let others: Vec<usize> = (0..s.num_blocks()).filter(|&b| b != nblk && b != sblk).collect();
    if others.is_empty() || others.len() > 2 {
        return Err(WittError::NotNullPairModel);
    }
    let parts: Vec<Part> = others
        .iter()
        .map(|&b| Part {
            slots: s.block_slots(b).to_vec(),
            dual: s.block_slots(s.star_of_block(b)).to_vec(),
            isotropic: s.grading().blocks()[b].label.is_isotropic(),
        })
        .collect();
    if parts.len() == 2 {
        let pair = parts[0].isotropic && parts[1].isotropic && parts[0].dual == parts[1].slots;
        let both_q = !parts[0].isotropic && !parts[1].isotropic;
        if !pair && !both_q {
            return Err(WittError::NotNullPairModel);
        }
    } else if parts[0].isotropic {
        return Err(WittError::NotNullPairModel);
    }
    let c = model.structure_functions(x)?;
    let ctx = Ctx {
        c: &c,
        g: s.gram(),
        m,
        n: np.n,
        nstar: np.nstar,
    };
    let part_of = |a: usize| parts.iter().position(|p| p.slots.contains(&a));
    let nn = ctx.e(np.n);
    let ns = ctx.e(np.nstar);

    // τ^j(X, Y) for X in part i, Y in part j, i != j.
    let tau = |pi: usize, pj: usize, xv: &DVector<f64>, yv: &DVector<f64>| -> DVector<f64> {
        let tj = &parts[pj];
        let isotropic_dual = tj.isotropic && parts[pi].slots == tj.dual;
        let alpha = |z: &DVector<f64>| {
            let mut v = ctx.lie_flat(xv, yv, z);
            if isotropic_dual {
                v += ctx.lie_flat(yv, xv, z);
            }
            v
        };
        let raised = ctx.raise_into(alpha, &tj.slots, &tj.dual);
        (raised - ctx.proj(&ctx.br(xv, yv), &tj.slots)) * 0.5
    };
    // τ^i(n(*), X) for X in part i: g(τ, Y) = ½ (L_{n(*)} g)(X, Y).
    let tau_null = |z: &DVector<f64>, pi: usize, xv: &DVector<f64>| -> DVector<f64> {
        let p = &parts[pi];
        ctx.raise_into(|y| 0.5 * ctx.lie_g(z, xv, y), &p.slots, &p.dual)
    };
    let other_part = |pi: usize| -> Vec<usize> {
        if parts.len() == 2 {
            parts[1 - pi].slots.clone()
        } else {
            Vec::new()
        }
    };

    let mut t = Array3::zeros((m, m, m));
    let mut put = |a: usize, b: usize, v: DVector<f64>| {
        for k in 0..m {
            t[[k, a, b]] = v[k];
            t[[k, b, a]] = -v[k];
        }
    };
    for a in 0..m {
        for b in (a + 1)..m {
            let (xa, xb) = (ctx.e(a), ctx.e(b));
            let v = match (part_of(a), part_of(b)) {
                (Some(i), Some(j)) if i == j => {
                    -ctx.proj(&ctx.br(&xa, &xb), &other_part(i))
                        + &nn * ctx.dsigma(&xa, &xb)
                        + &ns * ctx.dsigma_star(&xa, &xb)
                }
                (Some(i), Some(j)) => {
                    &nn * ctx.dsigma(&xa, &xb) + &ns * ctx.dsigma_star(&xa, &xb) + tau(i, j, &xa, &xb)
                        - tau(j, i, &xb, &xa)
                }
                (None, None) => {
                    let all: Vec<usize> = parts.iter().flat_map(|p| p.slots.clone()).collect();
                    let sign = if a == np.n { 1.0 } else { -1.0 };
                    -ctx.proj(&ctx.br(&nn, &ns), &all) * sign
                }
                (None, Some(i)) | (Some(i), None) => {
                    let (null_slot, xv, sign) = if part_of(a).is_none() { (a, &xb, 1.0) } else { (b, &xa, -1.0) };
                    let lxg = ctx.lie_g(xv, &nn, &ns);
                    let val = if null_slot == np.n {
                        -ctx.proj(&ctx.br(&nn, xv), &other_part(i))
                            + &ns * ctx.dsigma_star(&nn, xv)
                            - &nn * (0.5 * lxg)
                            + tau_null(&nn, i, xv)
                    } else {
                        -ctx.proj(&ctx.br(&ns, xv), &other_part(i)) + &nn * ctx.dsigma(&ns, xv)
                            - &ns * (0.5 * lxg)
                            + tau_null(&ns, i, xv)
                    };
                    val * sign
                }
            };
            put(a, b, v);
        }
    }
    Ok(t)
}
