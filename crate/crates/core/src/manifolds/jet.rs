//! Second-order forward-mode jets.

use super::expr::{guard_divisor, BinaryOp, Expr, UnaryFn};
use crate::error::{Result, WittError};

/// Value, gradient and Hessian of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n x n`, symmetric.
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Jet2 {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    pub fn variable(value: f64, i: usize, n: usize) -> Self {
        let mut j = Jet2::constant(value, n);
        j.grad[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    // Applies a scalar function with derivatives f, f', f''.
    fn chain(&self, f: f64, df: f64, ddf: f64) -> Jet2 {
        let n = self.dim();
        let grad = self.grad.iter().map(|g| df * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = ddf * self.grad[i] * self.grad[j] + df * self.hess[i * n + j];
            }
        }
        Jet2 { value: f, grad, hess }
    }

    pub fn neg(&self) -> Jet2 {
        self.chain(-self.value, -1.0, 0.0)
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let grad = (0..n)
            .map(|i| self.grad[i] * o.value + self.value * o.grad[i])
            .collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = i * n + j;
                let h = self.hess[k] * o.value
                    + self.value * o.hess[k]
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
                hess[k] = h;
                hess[j * n + i] = h;
            }
        }
        Jet2 {
            value: self.value * o.value,
            grad,
            hess,
        }
    }

    pub fn recip(&self) -> Result<Jet2> {
        guard_divisor(self.value)?;
        let v = self.value;
        Ok(self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    pub fn div(&self, o: &Jet2) -> Result<Jet2> {
        Ok(self.mul(&o.recip()?))
    }
}

/// Evaluates `expr` with value, gradient and Hessian at `x`.
pub fn jet_eval(expr: &Expr, x: &[f64]) -> Result<Jet2> {
    let n = x.len();
    Ok(match expr {
        Expr::Const(v) => Jet2::constant(*v, n),
        Expr::Coord(i) => {
            let v = *x.get(*i).ok_or(WittError::Dimension {
                expected: i + 1,
                found: n,
            })?;
            Jet2::variable(v, *i, n)
        }
        Expr::Unary(f, e) => {
            let j = jet_eval(e, x)?;
            match f {
                UnaryFn::Neg => j.neg(),
                UnaryFn::Sin => j.sin(),
                UnaryFn::Cos => j.cos(),
                UnaryFn::Exp => j.exp(),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = jet_eval(l, x)?;
            let b = jet_eval(r, x)?;
            match op {
                BinaryOp::Add => a.add(&b),
                BinaryOp::Sub => a.sub(&b),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => a.div(&b)?,
            }
        }
    })
}
