//! Geodesics of the canonical Witt connection, normal sub-Riemannian geodesics
//! with multipliers, curve functionals, the first variation, the exponential
//! map and the local Witt symmetry.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use serde::Serialize;

use crate::connection::{connection_field, ConnectionKind};
use crate::error::{Result, WittError};
use crate::witt::{bracket, FrameModel, FrameVector, NullPair, Point};

pub const DEFAULT_STEPS: usize = 1000;

/// A curve sampled on a grid, with frame velocities and optional multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Frame components of `ċ(t)`.
    pub velocities: Vec<DVector<f64>>,
    pub multipliers: Option<Vec<(f64, f64)>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn endpoint(&self) -> &Point {
        self.points.last().expect("trajectories are never empty")
    }

    fn check(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 || self.points.len() != n || self.velocities.len() != n {
            return Err(WittError::BadTrajectory("grid, points and velocities differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WittError::BadTrajectory("grid is not strictly increasing".into()));
        }
        if let Some(l) = &self.multipliers {
            if l.len() != n {
                return Err(WittError::BadTrajectory("multiplier column has the wrong length".into()));
            }
        }
        Ok(())
    }
}

/// `Γ(v, v)^c = Γ^c_ab v^a v^b`.
pub fn gamma_vv(gamma: &Array3<f64>, v: &DVector<f64>) -> DVector<f64> {
    let m = v.len();
    let mut out = DVector::zeros(m);
    for a in 0..m {
        if v[a] == 0.0 {
            continue;
        }
        for b in 0..m {
            let s = v[a] * v[b];
            if s == 0.0 {
                continue;
            }
            for c in 0..m {
                out[c] += gamma[[c, a, b]] * s;
            }
        }
    }
    out
}

/// Point evaluation of frame, structure functions and coefficients. Left-invariant
/// models reuse the constant coefficients.
struct Evaluator<'a> {
    model: &'a FrameModel,
    kind: ConnectionKind,
    constant: Option<(Array3<f64>, Array3<f64>)>,
}

impl<'a> Evaluator<'a> {
    fn new(model: &'a FrameModel, kind: ConnectionKind) -> Result<Self> {
        let constant = if model.is_lie() {
            let f = connection_field(model, kind, &Point::zeros(model.dim()), false)?;
            Some((f.c, f.gamma))
        } else {
            None
        };
        Ok(Evaluator { model, kind, constant })
    }

    fn at(&self, x: &Point, t: f64) -> Result<(DMatrix<f64>, Array3<f64>, Array3<f64>)> {
        let wrap = |e: WittError| match e {
            WittError::SingularFrame | WittError::DomainGuard(_) => WittError::StepOutOfDomain(t),
            e => e,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(WittError::NonFinite(t));
        }
        let f = self.model.frame_matrix(x).map_err(wrap)?;
        match &self.constant {
            Some((c, g)) => Ok((f, c.clone(), g.clone())),
            None => {
                let cf = connection_field(self.model, self.kind, x, false).map_err(wrap)?;
                Ok((f, cf.c, cf.gamma))
            }
        }
    }
}

fn rk4<F>(f: F, y0: DVector<f64>, t0: f64, t1: f64, steps: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if steps == 0 {
        return Err(WittError::BadParams("steps must be at least 1".into()));
    }
    if t1 <= t0 || !t0.is_finite() || !t1.is_finite() {
        return Err(WittError::BadParams(format!("invalid span [{t0}, {t1}]")));
    }
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut y = y0;
    times.push(t0);
    ys.push(y.clone());
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(&y + &k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(&y + &k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let tn = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(WittError::NonFinite(tn));
        }
        times.push(tn);
        ys.push(y.clone());
    }
    Ok((times, ys))
}

fn split(y: &DVector<f64>, m: usize) -> (Point, DVector<f64>) {
    (y.rows(0, m).into_owned(), y.rows(m, m).into_owned())
}

/// Fixed-step RK4 for `v̇ = -Γ(v, v)`, `ẋ = F(x) v` of the canonical Witt connection.
pub fn integrate_geodesic(model: &FrameModel, x0: &Point, v0: &FrameVector, span: (f64, f64), steps: usize) -> Result<Trajectory> {
    integrate_geodesic_with(model, ConnectionKind::CanonicalWitt, x0, v0, span, steps)
}

pub fn integrate_geodesic_with(
    model: &FrameModel,
    kind: ConnectionKind,
    x0: &Point,
    v0: &FrameVector,
    span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    let m = model.dim();
    check_len(m, x0.len())?;
    check_len(m, v0.0.len())?;
    let ev = Evaluator::new(model, kind)?;
    let mut y0 = DVector::zeros(2 * m);
    y0.rows_mut(0, m).copy_from(x0);
    y0.rows_mut(m, m).copy_from(&v0.0);
    let (times, ys) = rk4(
        |t, y| {
            let (x, v) = split(y, m);
            let (f, _, gamma) = ev.at(&x, t)?;
            let mut out = DVector::zeros(2 * m);
            out.rows_mut(0, m).copy_from(&(f * &v));
            out.rows_mut(m, m).copy_from(&(-gamma_vv(&gamma, &v)));
            Ok(out)
        },
        y0,
        span.0,
        span.1,
        steps,
    )?;
    let (points, velocities) = ys.iter().map(|y| split(y, m)).unzip();
    Ok(Trajectory {
        times,
        points,
        velocities,
        multipliers: None,
    })
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(WittError::Dimension { expected, found });
    }
    Ok(())
}

/// Curve with prescribed frame velocity `v(t)`: RK4 on `ẋ = F(x) v(t)`.
pub fn integrate_frame_velocity<V>(model: &FrameModel, x0: &Point, velocity: V, span: (f64, f64), steps: usize) -> Result<Trajectory>
where
    V: Fn(f64) -> DVector<f64>,
{
    let m = model.dim();
    check_len(m, x0.len())?;
    let (times, points) = rk4(
        |t, x| {
            let f = model.frame_matrix(x).map_err(|_| WittError::StepOutOfDomain(t))?;
            Ok(f * velocity(t))
        },
        x0.clone(),
        span.0,
        span.1,
        steps,
    )?;
    let velocities = times.iter().map(|&t| velocity(t)).collect();
    Ok(Trajectory {
        times,
        points,
        velocities,
        multipliers: None,
    })
}

/// Trajectory from sampled points: frame velocities from a fourth-order grid
/// derivative of the coordinates.
pub fn trajectory_from_points(model: &FrameModel, times: Vec<f64>, points: Vec<Point>) -> Result<Trajectory> {
    let xdot = grid_derivative(&times, &points)?;
    let velocities = points
        .iter()
        .zip(xdot)
        .map(|(x, xd)| {
            let f = model.frame_matrix(x)?;
            f.lu().solve(&xd).ok_or(WittError::SingularFrame)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        points,
        velocities,
        multipliers: None,
    })
}

/// Fourth-order derivative on a uniform grid: five-point central stencil in the
/// interior, one-sided five-point stencils at the two ends.
pub fn grid_derivative(times: &[f64], values: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let n = times.len();
    if n < 5 || values.len() != n {
        return Err(WittError::BadTrajectory("grid derivative needs at least 5 samples".into()));
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(WittError::BadTrajectory("grid derivative needs a uniform grid".into()));
    }
    let f = |i: usize| &values[i];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i >= 2 && i + 2 < n {
            (f(i - 2) - f(i + 2) + (f(i + 1) - f(i - 1)) * 8.0) / (12.0 * h)
        } else if i == 0 {
            (f(0) * -25.0 + f(1) * 48.0 - f(2) * 36.0 + f(3) * 16.0 - f(4) * 3.0) / (12.0 * h)
        } else if i == 1 {
            (f(0) * -3.0 - f(1) * 10.0 + f(2) * 18.0 - f(3) * 6.0 + f(4)) / (12.0 * h)
        } else if i == n - 2 {
            -(f(n - 1) * -3.0 - f(n - 2) * 10.0 + f(n - 3) * 18.0 - f(n - 4) * 6.0 + f(n - 5)) / (12.0 * h)
        } else {
            -(f(n - 1) * -25.0 + f(n - 2) * 48.0 - f(n - 3) * 36.0 + f(n - 4) * 16.0 - f(n - 5) * 3.0) / (12.0 * h)
        };
        out.push(d);
    }
    Ok(out)
}

fn simpson_pair(t: &[f64], f: &[f64], i: usize) -> f64 {
    let h0 = t[i + 1] - t[i];
    let h1 = t[i + 2] - t[i + 1];
    (h0 + h1) / 6.0 * ((2.0 - h1 / h0) * f[i] + (h0 + h1).powi(2) / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2])
}

// Integral over [t[i+1], t[i+2]] of the quadratic through the three samples.
fn last_panel(t: &[f64], f: &[f64], i: usize) -> f64 {
    let h0 = t[i + 1] - t[i];
    let h1 = t[i + 2] - t[i + 1];
    f[i + 2] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1)) + f[i + 1] * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
        - f[i] * h1.powi(3) / (6.0 * h0 * (h0 + h1))
}

/// Composite Simpson rule on a possibly non-uniform grid.
pub fn simpson(t: &[f64], f: &[f64]) -> Result<f64> {
    Ok(*cumulative_integral(t, f)?.last().unwrap())
}

/// `∫_{t_0}^{t_i} f` at every grid point.
pub fn cumulative_integral(t: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n == 0 || f.len() != n {
        return Err(WittError::BadTrajectory("quadrature needs matching non-empty samples".into()));
    }
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = if i == 1 {
            if n == 2 {
                0.5 * (t[1] - t[0]) * (f[0] + f[1])
            } else {
                // first panel from the quadratic through the first three samples
                simpson_pair(t, f, 0) - last_panel(t, f, 0)
            }
        } else if i % 2 == 0 {
            cum[i - 2] + simpson_pair(t, f, i - 2)
        } else {
            cum[i - 1] + last_panel(t, f, i - 2)
        };
    }
    Ok(cum)
}

fn null_pair(model: &FrameModel) -> Result<NullPair> {
    model.null_pair().ok_or(WittError::NotNullPairModel)
}

/// `(L_{E_z} σ_form)(v) = -Σ_b c^{form}_{z b} v^b`, with `σ` read off slot `form`.
fn lie_form(c: &Array3<f64>, z: usize, form: usize, v: &DVector<f64>) -> f64 {
    -(0..v.len()).map(|b| c[[form, z, b]] * v[b]).sum::<f64>()
}

/// `(L_{E_z} g)(v, v)`.
fn lie_g_vv(model: &FrameModel, c: &Array3<f64>, z: usize, v: &DVector<f64>) -> f64 {
    let e = FrameVector::basis(model.dim(), z).0;
    -2.0 * model.structure().g(&bracket(c, &e, v), v)
}

/// Residuals of the lightlike characterization along a curve in the null plane:
/// `d/dt σ(ċ) - σ(ċ)(L_{n*}σ*)(ċ)` and `d/dt σ*(ċ) - σ*(ċ)(L_n σ)(ċ)`, maximised over the grid.
pub fn lightlike_residual(model: &FrameModel, traj: &Trajectory) -> Result<(f64, f64)> {
    traj.check()?;
    let np = null_pair(model)?;
    let s = model.structure();
    for v in &traj.velocities {
        let tol = 1e-8 * (1.0 + v.norm_squared());
        let off = (0..v.len())
            .filter(|&a| a != np.n && a != np.nstar)
            .fold(0.0f64, |w, a| w.max(v[a].abs()));
        let gv = s.g(v, v).abs();
        if off > tol || gv > tol {
            return Err(WittError::NotLightlike(off.max(gv)));
        }
    }
    let sig: Vec<DVector<f64>> = traj
        .velocities
        .iter()
        .map(|v| DVector::from_vec(vec![v[np.n], v[np.nstar]]))
        .collect();
    let dsig = grid_derivative(&traj.times, &sig)?;
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for ((x, v), d) in traj.points.iter().zip(&traj.velocities).zip(&dsig) {
        let c = model.structure_functions(x)?;
        r1 = r1.max((d[0] - v[np.n] * lie_form(&c, np.nstar, np.nstar, v)).abs());
        r2 = r2.max((d[1] - v[np.nstar] * lie_form(&c, np.n, np.n, v)).abs());
    }
    Ok((r1, r2))
}

fn horizontal_slots(model: &FrameModel) -> Result<(NullPair, Vec<usize>)> {
    let np = null_pair(model)?;
    let s = model.structure();
    let others: Vec<usize> = (0..s.num_blocks())
        .filter(|&b| b != s.block_of_slot(np.n) && b != s.block_of_slot(np.nstar))
        .collect();
    if others.len() != 1 || s.grading().blocks()[others[0]].label.is_isotropic() {
        return Err(WittError::NotNullPairModel);
    }
    Ok((np, s.block_slots(others[0]).to_vec()))
}

/// Largest null-plane component of the velocity along the curve.
pub fn horizontal_defect(model: &FrameModel, traj: &Trajectory) -> Result<f64> {
    let np = null_pair(model)?;
    Ok(traj
        .velocities
        .iter()
        .fold(0.0f64, |w, v| w.max(v[np.n].abs()).max(v[np.nstar].abs())))
}

/// Horizontal vector `u` with `g(u, Y) = -form([v, Y])` for horizontal `Y`.
fn raise_d_form(c: &Array3<f64>, gh_lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, h: &[usize], form: usize, v: &DVector<f64>) -> DVector<f64> {
    let rhs = DVector::from_fn(h.len(), |i, _| {
        -(0..v.len()).map(|a| v[a] * c[[form, a, h[i]]]).sum::<f64>()
    });
    let sol = gh_lu.solve(&rhs).expect("horizontal metric is definite");
    let mut out = DVector::zeros(v.len());
    for (i, &s) in h.iter().enumerate() {
        out[s] = sol[i];
    }
    out
}

/// Normal sub-Riemannian geodesic system: horizontal acceleration driven by
/// the multipliers and the 2x2 linear multiplier equation.
pub fn integrate_normal_sr_geodesic(
    model: &FrameModel,
    x0: &Point,
    v0: &FrameVector,
    lambda0: (f64, f64),
    span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    let m = model.dim();
    check_len(m, x0.len())?;
    check_len(m, v0.0.len())?;
    let (np, h) = horizontal_slots(model)?;
    let defect = v0.0[np.n].abs().max(v0.0[np.nstar].abs());
    if defect > 1e-12 * (1.0 + v0.0.norm()) {
        return Err(WittError::NonHorizontalStart(defect));
    }
    let g = model.structure().gram();
    let gh = DMatrix::from_fn(h.len(), h.len(), |r, c| g[(h[r], h[c])]);
    let gh_lu = gh.lu();
    let ev = Evaluator::new(model, ConnectionKind::CanonicalWitt)?;
    let mut y0 = DVector::zeros(2 * m + 2);
    y0.rows_mut(0, m).copy_from(x0);
    y0.rows_mut(m, m).copy_from(&v0.0);
    y0[2 * m] = lambda0.0;
    y0[2 * m + 1] = lambda0.1;
    let (times, ys) = rk4(
        |t, y| {
            let (x, v) = split(y, m);
            let (l1, l2) = (y[2 * m], y[2 * m + 1]);
            let (f, c, gamma) = ev.at(&x, t)?;
            let a = raise_d_form(&c, &gh_lu, &h, np.n, &v);
            let b = raise_d_form(&c, &gh_lu, &h, np.nstar, &v);
            let acc = -gamma_vv(&gamma, &v) + a * l1 + b * l2;
            let dl1 = lie_form(&c, np.n, np.n, &v) * l1
                + lie_form(&c, np.n, np.nstar, &v) * l2
                + 0.5 * lie_g_vv(model, &c, np.n, &v);
            let dl2 = lie_form(&c, np.nstar, np.n, &v) * l1
                + lie_form(&c, np.nstar, np.nstar, &v) * l2
                + 0.5 * lie_g_vv(model, &c, np.nstar, &v);
            let mut out = DVector::zeros(2 * m + 2);
            out.rows_mut(0, m).copy_from(&(f * &v));
            out.rows_mut(m, m).copy_from(&acc);
            out[2 * m] = dl1;
            out[2 * m + 1] = dl2;
            Ok(out)
        },
        y0,
        span.0,
        span.1,
        steps,
    )?;
    let mut points = Vec::with_capacity(ys.len());
    let mut velocities = Vec::with_capacity(ys.len());
    let mut multipliers = Vec::with_capacity(ys.len());
    for y in &ys {
        let (x, v) = split(y, m);
        points.push(x);
        velocities.push(v);
        multipliers.push((y[2 * m], y[2 * m + 1]));
    }
    Ok(Trajectory {
        times,
        points,
        velocities,
        multipliers: Some(multipliers),
    })
}

/// Energy, length and the multiplier action of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub energy: f64,
    /// `None` when `g(ċ, ċ) < 0` somewhere on the grid.
    pub length: Option<f64>,
    pub action: f64,
    pub energy_lambda: f64,
}

/// `E_K`, `L_K`, `A^λ` and `E^λ = E_K + A^λ` by composite Simpson quadrature.
/// Without multipliers `A^λ = 0`; the multiplier action needs a null pair.
pub fn functionals(model: &FrameModel, traj: &Trajectory, lambdas: Option<&[(f64, f64)]>) -> Result<Functionals> {
    traj.check()?;
    let s = model.structure();
    let speed2: Vec<f64> = traj.velocities.iter().map(|v| s.g(v, v)).collect();
    let half: Vec<f64> = speed2.iter().map(|q| 0.5 * q).collect();
    let energy = simpson(&traj.times, &half)?;
    let min = speed2.iter().copied().fold(f64::INFINITY, f64::min);
    let length = if min < 0.0 {
        None
    } else {
        let root: Vec<f64> = speed2.iter().map(|q| q.sqrt()).collect();
        Some(simpson(&traj.times, &root)?)
    };
    let action = match lambdas {
        None => 0.0,
        Some(l) => {
            if l.len() != traj.len() {
                return Err(WittError::BadTrajectory("multiplier column has the wrong length".into()));
            }
            let np = null_pair(model)?;
            let f: Vec<f64> = traj
                .velocities
                .iter()
                .zip(l)
                .map(|(v, (l1, l2))| -(l1 * v[np.n] + l2 * v[np.nstar]))
                .collect();
            simpson(&traj.times, &f)?
        }
    };
    Ok(Functionals {
        energy,
        length,
        action,
        energy_lambda: energy + action,
    })
}

/// Length, or `NegativeSpeedSquare` when the curve is somewhere timelike.
pub fn length(model: &FrameModel, traj: &Trajectory) -> Result<f64> {
    let f = functionals(model, traj, None)?;
    f.length.ok_or_else(|| {
        let s = model.structure();
        let min = traj.velocities.iter().map(|v| s.g(v, v)).fold(f64::INFINITY, f64::min);
        WittError::NegativeSpeedSquare(min)
    })
}

/// Variation field `w(t)` in frame components, vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationField {
    values: Vec<DVector<f64>>,
}

impl VariationField {
    pub fn new(values: Vec<DVector<f64>>) -> Result<Self> {
        let ok = match (values.first(), values.last()) {
            (Some(a), Some(b)) => a.iter().chain(b.iter()).all(|v| *v == 0.0),
            _ => false,
        };
        if !ok {
            return Err(WittError::BadParams("variation field must vanish at both endpoints".into()));
        }
        Ok(VariationField { values })
    }

    /// Samples `f` on the grid; `f` must vanish exactly at the ends.
    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        Self::new(times.iter().map(|&t| f(t)).collect())
    }

    pub fn zeros(len: usize, m: usize) -> Self {
        VariationField {
            values: vec![DVector::zeros(m); len],
        }
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }
}

/// First variation of `E^λ` along `w`, integrating the pointwise formula.
/// `∇_ċ ċ` and `λ̇` come from grid derivatives.
pub fn first_variation(model: &FrameModel, traj: &Trajectory, w: &VariationField, lambdas: &[(f64, f64)]) -> Result<f64> {
    traj.check()?;
    let n = traj.len();
    if w.values.len() != n || lambdas.len() != n {
        return Err(WittError::BadTrajectory("variation or multipliers do not match the grid".into()));
    }
    if w.values.iter().all(|v| v.iter().all(|x| *x == 0.0)) {
        return Ok(0.0);
    }
    let np = null_pair(model)?;
    let s = model.structure();
    let ev = Evaluator::new(model, ConnectionKind::CanonicalWitt)?;
    let vdot = grid_derivative(&traj.times, &traj.velocities)?;
    let lam: Vec<DVector<f64>> = lambdas.iter().map(|l| DVector::from_vec(vec![l.0, l.1])).collect();
    let ldot = grid_derivative(&traj.times, &lam)?;
    let mut integrand = Vec::with_capacity(n);
    for i in 0..n {
        let (x, v, wi) = (&traj.points[i], &traj.velocities[i], &w.values[i]);
        let (l1, l2) = lambdas[i];
        let (_, c, gamma) = ev.at(x, traj.times[i])?;
        let acc = &vdot[i] + gamma_vv(&gamma, v);
        let mut wh = wi.clone();
        wh[np.n] = 0.0;
        wh[np.nstar] = 0.0;
        let br = bracket(&c, v, &wh);
        let d_sigma = -br[np.n];
        let d_sigma_star = -br[np.nstar];
        let mut val = -s.g(&acc, &wh) + l1 * d_sigma + l2 * d_sigma_star;
        val += wi[np.n]
            * (ldot[i][0] - l1 * lie_form(&c, np.n, np.n, v) - l2 * lie_form(&c, np.n, np.nstar, v)
                + 0.5 * lie_g_vv(model, &c, np.n, v));
        val += wi[np.nstar]
            * (ldot[i][1] - l1 * lie_form(&c, np.nstar, np.n, v) - l2 * lie_form(&c, np.nstar, np.nstar, v)
                + 0.5 * lie_g_vv(model, &c, np.nstar, v));
        integrand.push(val);
    }
    simpson(&traj.times, &integrand)
}

/// Points of the varied curve `c_s(t)`: the time-`s` flow of the frozen field
/// `Σ w^a(t) E_a` started at `c(t)`, integrated with RK4 substeps.
pub fn varied_points(model: &FrameModel, traj: &Trajectory, w: &VariationField, s: f64, substeps: usize) -> Result<Vec<Point>> {
    traj.points
        .iter()
        .zip(&w.values)
        .map(|(x, wi)| {
            if s == 0.0 || wi.iter().all(|v| *v == 0.0) {
                return Ok(x.clone());
            }
            // flowing backwards along w is flowing forwards along -w
            let field = if s > 0.0 { wi.clone() } else { -wi };
            let (_, ys) = rk4(
                |t, y| Ok(model.frame_matrix(y).map_err(|_| WittError::StepOutOfDomain(t))? * &field),
                x.clone(),
                0.0,
                s.abs(),
                substeps,
            )?;
            Ok(ys.last().unwrap().clone())
        })
        .collect()
}

/// `E^λ` of a curve given only by its points, with multipliers as functions of `t`.
pub fn energy_lambda_of_points(model: &FrameModel, times: &[f64], points: &[Point], lambdas: &[(f64, f64)]) -> Result<f64> {
    let traj = trajectory_from_points(model, times.to_vec(), points.to_vec())?;
    Ok(functionals(model, &traj, Some(lambdas))?.energy_lambda)
}

/// Central difference `(E^λ(c_h) - E^λ(c_{-h})) / 2h` of the synthesized variation.
pub fn first_variation_fd(model: &FrameModel, traj: &Trajectory, w: &VariationField, lambdas: &[(f64, f64)], h: f64) -> Result<f64> {
    let substeps = 16;
    let plus = varied_points(model, traj, w, h, substeps)?;
    let minus = varied_points(model, traj, w, -h, substeps)?;
    let ep = energy_lambda_of_points(model, &traj.times, &plus, lambdas)?;
    let em = energy_lambda_of_points(model, &traj.times, &minus, lambdas)?;
    Ok((ep - em) / (2.0 * h))
}

/// Endpoint of the unit-time geodesic with initial velocity `v`.
pub fn exp_map(model: &FrameModel, x: &Point, v: &FrameVector) -> Result<Point> {
    exp_map_steps(model, x, v, DEFAULT_STEPS)
}

pub fn exp_map_steps(model: &FrameModel, x: &Point, v: &FrameVector, steps: usize) -> Result<Point> {
    if v.0.iter().all(|c| *c == 0.0) {
        return Ok(x.clone());
    }
    Ok(integrate_geodesic(model, x, v, (0.0, 1.0), steps)?.endpoint().clone())
}

/// Options for the shooting solve behind the local symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            steps: DEFAULT_STEPS,
            tol: 1e-12,
            max_iter: 40,
            fd_step: 1e-6,
        }
    }
}

/// Solves `exp(x, v) = y` by damped Newton iteration with a central-difference Jacobian.
pub fn exp_inverse(model: &FrameModel, x: &Point, y: &Point, opts: ShootingOptions) -> Result<FrameVector> {
    let m = model.dim();
    check_len(m, y.len())?;
    let f = model.frame_matrix(x)?;
    let mut v = f.lu().solve(&(y - x)).ok_or(WittError::SingularFrame)?;
    let eval = |v: &DVector<f64>| exp_map_steps(model, x, &FrameVector(v.clone()), opts.steps);
    let mut r = eval(&v)? - y;
    let scale = 1.0 + y.norm();
    for _ in 0..opts.max_iter {
        if r.norm() <= opts.tol * scale {
            return Ok(FrameVector(v));
        }
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[j] += opts.fd_step;
            vm[j] -= opts.fd_step;
            let col = (eval(&vp)? - eval(&vm)?) / (2.0 * opts.fd_step);
            jac.set_column(j, &col);
        }
        let delta = jac.lu().solve(&(-&r)).ok_or(WittError::ShootingDiverged(r.norm()))?;
        let mut alpha = 1.0;
        loop {
            let cand = &v + &delta * alpha;
            let rc = eval(&cand)? - y;
            if rc.norm() < r.norm() || alpha < 1e-4 {
                v = cand;
                r = rc;
                break;
            }
            alpha *= 0.5;
        }
    }
    if r.norm() <= 1e3 * opts.tol * scale {
        return Ok(FrameVector(v));
    }
    Err(WittError::ShootingDiverged(r.norm()))
}

/// Local Witt symmetry `ψ_x(y) = exp_x(δ_x exp_x^{-1}(y))`.
pub fn local_symmetry_map(model: &FrameModel, x: &Point, y: &Point) -> Result<Point> {
    local_symmetry_map_with(model, x, y, ShootingOptions::default())
}

pub fn local_symmetry_map_with(model: &FrameModel, x: &Point, y: &Point, opts: ShootingOptions) -> Result<Point> {
    let delta = model.structure().parity_involution()?;
    if x == y {
        return Ok(x.clone());
    }
    let v = exp_inverse(model, x, y, opts)?;
    exp_map_steps(model, x, &FrameVector(delta * v.0), opts.steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::builtin;

    #[test]
    fn abelian_geodesic_is_straight() {
        let m = builtin::abelian(3).unwrap();
        let x0 = Point::from_vec(vec![1.0, -2.0, 0.5]);
        let v0 = FrameVector::from_slice(&[0.3, 0.1, -0.7]);
        let tr = integrate_geodesic(&m, &x0, &v0, (0.0, 1.0), 10).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            assert!((x - (&x0 + &v0.0 * *t)).amax() < 1e-15);
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let t: Vec<f64> = (0..=7).map(|i| (i as f64 / 7.0).powf(1.3)).collect();
        let f: Vec<f64> = t.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x * x).collect();
        let exact = 1.0 - 1.0 + 1.0;
        assert!((simpson(&t, &f).unwrap() - exact).abs() < 1e-13);
        let t: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let f: Vec<f64> = t.iter().map(|x| x * x * x).collect();
        assert!((simpson(&t, &f).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_derivative_is_exact_for_quartics() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<DVector<f64>> = t.iter().map(|x| DVector::from_vec(vec![x.powi(4)])).collect();
        let d = grid_derivative(&t, &v).unwrap();
        for (x, di) in t.iter().zip(d) {
            assert!((di[0] - 4.0 * x.powi(3)).abs() < 1e-11);
        }
    }

    #[test]
    fn unit_line_functionals() {
        let m = builtin::abelian(2).unwrap();
        let tr = integrate_geodesic(&m, &Point::zeros(2), &FrameVector::from_slice(&[0.6, 0.8]), (0.0, 1.0), 20).unwrap();
        let f = functionals(&m, &tr, None).unwrap();
        assert!((f.energy - 0.5).abs() < 1e-14);
        assert!((f.length.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(f.energy_lambda, f.energy);
    }

    #[test]
    fn nonzero_endpoint_variation_rejected() {
        let v = vec![DVector::from_vec(vec![1.0]), DVector::zeros(1)];
        assert!(VariationField::new(v).is_err());
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let m = builtin::osc(&[1.0]).unwrap();
        let x = Point::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(exp_map(&m, &x, &FrameVector::zeros(4)).unwrap(), x);
    }

    #[test]
    fn normal_sr_needs_horizontal_start() {
        let m = builtin::fefferman_heisenberg(1).unwrap();
        let r = integrate_normal_sr_geodesic(&m, &Point::zeros(4), &FrameVector::basis(4, 0), (0.0, 0.0), (0.0, 1.0), 10);
        assert!(matches!(r, Err(WittError::NonHorizontalStart(_))));
    }
}
