//! Frames given by coordinate expressions on a single chart.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

use super::expr::{parse_expr, Expr};
use super::jet::{jet_eval, Jet2};
use crate::error::{Result, WittError};
use crate::witt::StructureJet;

/// `frame[a][mu]` is the `mu`-th coordinate component of `E_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFrame {
    coordinates: Vec<String>,
    frame: Vec<Vec<Expr>>,
}

impl ChartFrame {
    pub fn new(coordinates: Vec<String>, frame: Vec<Vec<Expr>>) -> Result<Self> {
        let n = coordinates.len();
        if frame.len() != n {
            return Err(WittError::Dimension {
                expected: n,
                found: frame.len(),
            });
        }
        for row in &frame {
            if row.len() != n {
                return Err(WittError::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            for e in row {
                if let Some(k) = e.max_coord() {
                    if k >= n {
                        return Err(WittError::Parse(format!("coordinate index {k} out of range")));
                    }
                }
            }
        }
        Ok(ChartFrame { coordinates, frame })
    }

    /// Parses `frame[a][mu]` strings over `coordinates`.
    pub fn parse(coordinates: &[&str], frame: &[&[&str]]) -> Result<Self> {
        let names: Vec<String> = coordinates.iter().map(|s| s.to_string()).collect();
        let rows = frame
            .iter()
            .map(|row| row.iter().map(|s| parse_expr(s, &names)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        ChartFrame::new(names, rows)
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn expressions(&self) -> &[Vec<Expr>] {
        &self.frame
    }

    pub fn frame_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut f = DMatrix::zeros(n, n);
        for a in 0..n {
            for mu in 0..n {
                f[(mu, a)] = self.frame[a][mu].eval(x)?;
            }
        }
        Ok(f)
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<Vec<Jet2>>> {
        self.frame
            .iter()
            .map(|row| row.iter().map(|e| jet_eval(e, x)).collect())
            .collect()
    }

    fn inverse(f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let svd = f.clone().svd(false, false);
        let max = svd.singular_values.max();
        if max == 0.0 || svd.singular_values.min() <= 1e-12 * max {
            return Err(WittError::SingularFrame);
        }
        f.clone().try_inverse().ok_or(WittError::SingularFrame)
    }

    pub fn structure_functions(&self, x: &[f64]) -> Result<Array3<f64>> {
        Ok(self.evaluate(x, false)?.c)
    }

    pub fn structure_jet(&self, x: &[f64]) -> Result<StructureJet> {
        self.evaluate(x, true)
    }

    fn evaluate(&self, x: &[f64], with_derivatives: bool) -> Result<StructureJet> {
        let n = self.dim();
        let jets = self.jets(x)?;
        // f[mu][a], df[nu][mu][a]
        let f = DMatrix::from_fn(n, n, |mu, a| jets[a][mu].value);
        let finv = Self::inverse(&f)?;
        let df = |nu: usize, mu: usize, a: usize| jets[a][mu].grad[nu];
        let ddf = |rho: usize, nu: usize, mu: usize, a: usize| jets[a][mu].hess_at(rho, nu);

        // Coordinate components of the brackets: b[[mu, a, b]].
        let mut bc = Array3::<f64>::zeros((n, n, n));
        for mu in 0..n {
            for a in 0..n {
                for b in (a + 1)..n {
                    let mut s = 0.0;
                    for nu in 0..n {
                        s += f[(nu, a)] * df(nu, mu, b) - f[(nu, b)] * df(nu, mu, a);
                    }
                    bc[[mu, a, b]] = s;
                    bc[[mu, b, a]] = -s;
                }
            }
        }
        let mut c = Array3::<f64>::zeros((n, n, n));
        for k in 0..n {
            for a in 0..n {
                for b in (a + 1)..n {
                    let mut s = 0.0;
                    for mu in 0..n {
                        s += finv[(k, mu)] * bc[[mu, a, b]];
                    }
                    c[[k, a, b]] = s;
                    c[[k, b, a]] = -s;
                }
            }
        }
        if !with_derivatives {
            return Ok(StructureJet {
                c,
                dc: Array4::zeros((0, 0, 0, 0)),
            });
        }

        // Coordinate derivatives dcoord[[rho, k, a, b]] = d_rho c^k_ab.
        let mut dcoord = Array4::<f64>::zeros((n, n, n, n));
        for rho in 0..n {
            // d_rho F^{-1} = -F^{-1} (d_rho F) F^{-1}
            let dfr = DMatrix::from_fn(n, n, |mu, a| df(rho, mu, a));
            let dfinv = -(&finv * dfr * &finv);
            let mut dbc = Array3::<f64>::zeros((n, n, n));
            for mu in 0..n {
                for a in 0..n {
                    for b in (a + 1)..n {
                        let mut s = 0.0;
                        for nu in 0..n {
                            s += df(rho, nu, a) * df(nu, mu, b) + f[(nu, a)] * ddf(rho, nu, mu, b)
                                - df(rho, nu, b) * df(nu, mu, a)
                                - f[(nu, b)] * ddf(rho, nu, mu, a);
                        }
                        dbc[[mu, a, b]] = s;
                        dbc[[mu, b, a]] = -s;
                    }
                }
            }
            for k in 0..n {
                for a in 0..n {
                    for b in (a + 1)..n {
                        let mut s = 0.0;
                        for mu in 0..n {
                            s += dfinv[(k, mu)] * bc[[mu, a, b]] + finv[(k, mu)] * dbc[[mu, a, b]];
                        }
                        dcoord[[rho, k, a, b]] = s;
                        dcoord[[rho, k, b, a]] = -s;
                    }
                }
            }
        }
        let mut dc = Array4::<f64>::zeros((n, n, n, n));
        for e in 0..n {
            for rho in 0..n {
                let fe = f[(rho, e)];
                if fe == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            dc[[e, k, a, b]] += fe * dcoord[[rho, k, a, b]];
                        }
                    }
                }
            }
        }
        Ok(StructureJet { c, dc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frame of the Heisenberg group: X = dx + (y/2) dt, Y = dy - (x/2) dt, T = dt.
    fn heisenberg() -> ChartFrame {
        ChartFrame::parse(
            &["x", "y", "t"],
            &[&["1", "0", "y/2"], &["0", "1", "-x/2"], &["0", "0", "1"]],
        )
        .unwrap()
    }

    #[test]
    fn heisenberg_bracket_by_hand() {
        let c = heisenberg().structure_functions(&[0.3, -0.7, 2.0]).unwrap();
        assert!((c[[2, 0, 1]] + 1.0).abs() < 1e-15);
        assert!((c[[2, 1, 0]] - 1.0).abs() < 1e-15);
        let others: f64 = c.iter().map(|v| v.abs()).sum::<f64>() - 2.0;
        assert!(others.abs() < 1e-14);
    }

    #[test]
    fn derivative_along_frame_matches_difference() {
        let ch = ChartFrame::parse(
            &["x", "y"],
            &[&["1 + x*x", "sin(y)"], &["x*y", "exp(x) + 1"]],
        )
        .unwrap();
        let x = [0.2, -0.3];
        let jet = ch.structure_jet(&x).unwrap();
        let f = ch.frame_matrix(&x).unwrap();
        let h = 1e-5;
        for e in 0..2 {
            let xp = [x[0] + h * f[(0, e)], x[1] + h * f[(1, e)]];
            let xm = [x[0] - h * f[(0, e)], x[1] - h * f[(1, e)]];
            let cp = ch.structure_functions(&xp).unwrap();
            let cm = ch.structure_functions(&xm).unwrap();
            for k in 0..2 {
                let fd = (cp[[k, 0, 1]] - cm[[k, 0, 1]]) / (2.0 * h);
                assert!((fd - jet.dc[[e, k, 0, 1]]).abs() < 1e-8, "{fd} vs {}", jet.dc[[e, k, 0, 1]]);
            }
        }
    }

    #[test]
    fn singular_frame_is_reported() {
        let ch = ChartFrame::parse(&["x", "y"], &[&["x", "0"], &["0", "1"]]).unwrap();
        assert!(matches!(
            ch.structure_functions(&[0.0, 0.0]),
            Err(WittError::SingularFrame)
        ));
    }
}
