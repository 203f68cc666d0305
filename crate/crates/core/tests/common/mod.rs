//! Independent oracles shared by the integration tests. Nothing here calls the
//! engine's own tensor routines beyond reading raw model data.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4, ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use witt_core::{FrameModel, Point, WittStructure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |w, v| w.max(v.abs()))
}

pub fn max_diff3(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |w, (x, y)| w.max((x - y).abs()))
}

/// `max |g(∇_a E_b, E_c) + g(E_b, ∇_a E_c)|`.
pub fn metricity(s: &WittStructure, gamma: &Array3<f64>) -> f64 {
    let m = s.dim();
    let g = s.gram();
    let mut w = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let mut acc = 0.0;
                for e in 0..m {
                    acc += gamma[[e, a, b]] * g[(e, c)] + g[(b, e)] * gamma[[e, a, c]];
                }
                w = w.max(acc.abs());
            }
        }
    }
    w
}

/// Largest coefficient moving a frame field out of its own block.
pub fn block_escape(s: &WittStructure, gamma: &Array3<f64>) -> f64 {
    let m = s.dim();
    let mut w = 0.0f64;
    for c in 0..m {
        for a in 0..m {
            for b in 0..m {
                if s.label_of_slot(c) != s.label_of_slot(b) {
                    w = w.max(gamma[[c, a, b]].abs());
                }
            }
        }
    }
    w
}

/// `∇_a E_b - ∇_b E_a - [E_a, E_b]`.
pub fn torsion_from_gamma(gamma: &Array3<f64>, c: &Array3<f64>) -> Array3<f64> {
    let m = c.dim().0;
    Array3::from_shape_fn((m, m, m), |(k, a, b)| gamma[[k, a, b]] - gamma[[k, b, a]] - c[[k, a, b]])
}

/// Frame Levi-Civita coefficients from the coordinate metric `F^{-T} G F^{-1}`,
/// with Christoffel symbols and frame derivatives by central differences.
pub fn levi_civita_fd(model: &FrameModel, x: &Point, h: f64) -> Array3<f64> {
    let n = model.dim();
    let g = model.structure().gram().clone();
    let frame = |p: &Point| model.frame_matrix(p).unwrap();
    let metric = |p: &Point| {
        let fi = frame(p).try_inverse().unwrap();
        fi.transpose() * &g * fi
    };
    let d = |f: &dyn Fn(&Point) -> DMatrix<f64>, mu: usize| {
        let e = DVector::from_fn(n, |i, _| if i == mu { h } else { 0.0 });
        (f(&(x + &e)) * 8.0 - f(&(x - &e)) * 8.0 - f(&(x + &e * 2.0)) + f(&(x - &e * 2.0))) / (12.0 * h)
    };
    let gx = metric(x);
    let ginv = gx.clone().try_inverse().unwrap();
    let dg: Vec<DMatrix<f64>> = (0..n).map(|mu| d(&metric, mu)).collect();
    let df: Vec<DMatrix<f64>> = (0..n).map(|mu| d(&frame, mu)).collect();
    let chris = |nu: usize, mu: usize, la: usize| -> f64 {
        (0..n)
            .map(|r| 0.5 * ginv[(nu, r)] * (dg[mu][(r, la)] + dg[la][(r, mu)] - dg[r][(mu, la)]))
            .sum()
    };
    let f = frame(x);
    let fi = f.clone().try_inverse().unwrap();
    let mut out = Array3::zeros((n, n, n));
    for a in 0..n {
        for b in 0..n {
            let mut v = DVector::zeros(n);
            for nu in 0..n {
                let mut acc = 0.0;
                for mu in 0..n {
                    acc += f[(mu, a)] * df[mu][(nu, b)];
                    for la in 0..n {
                        acc += f[(mu, a)] * chris(nu, mu, la) * f[(la, b)];
                    }
                }
                v[nu] = acc;
            }
            let comp = &fi * v;
            for k in 0..n {
                out[[k, a, b]] = comp[k];
            }
        }
    }
    out
}

/// `(∇_e T)^c_ab` written out term by term; `dt[[e, c, a, b]] = E_e(T^c_ab)`.
pub fn nabla_torsion(gamma: &Array3<f64>, t: &Array3<f64>, dt: &Array4<f64>) -> Array4<f64> {
    let m = t.dim().0;
    Array4::from_shape_fn((m, m, m, m), |(e, c, a, b)| {
        let mut acc = dt[[e, c, a, b]];
        for d in 0..m {
            acc += gamma[[c, e, d]] * t[[d, a, b]] - gamma[[d, e, a]] * t[[c, d, b]] - gamma[[d, e, b]] * t[[c, a, d]];
        }
        acc
    })
}

/// `(∇_e R)^d_abc`; `dr[[e, d, a, b, c]] = E_e(R^d_abc)`.
pub fn nabla_curvature(gamma: &Array3<f64>, r: &Array4<f64>, dr: &ArrayD<f64>) -> ArrayD<f64> {
    let m = gamma.dim().0;
    ArrayD::from_shape_fn(IxDyn(&[m, m, m, m, m]), |ix| {
        let (e, d, a, b, c) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut acc = dr[[e, d, a, b, c]];
        for f in 0..m {
            acc += gamma[[d, e, f]] * r[[f, a, b, c]]
                - gamma[[f, e, a]] * r[[d, f, b, c]]
                - gamma[[f, e, b]] * r[[d, a, f, c]]
                - gamma[[f, e, c]] * r[[d, a, b, f]];
        }
        acc
    })
}
