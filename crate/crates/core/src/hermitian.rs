//! Robinson layer in its real presentation: screen complex structure, the
//! Lichnerowicz connection, Fefferman multiplier diagnostics and the
//! parallelism residuals of a Fefferman Witt symmetric space.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, ArrayD, ArrayView3, Axis, Dimension, IxDyn};
use serde::Serialize;

use crate::connection::{connection_field, metricity_residual, nabla_all, ConnectionKind, TorsionField};
use crate::curvature::geometry_at;
use crate::error::{Result, WittError};
use crate::geodesics::{cumulative_integral, grid_derivative, Trajectory};
use crate::manifolds::expr::Expr;
use crate::manifolds::jet::jet_eval;
use crate::witt::{FrameModel, FrameVector, NullPair, Point};

const J_TOL: f64 = 1e-12;

/// Base curvature inputs of a Fefferman space, pulled back to the total space
/// and expressed on frame pairs as functions of the chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeffermanData {
    pub cr_dimension: usize,
    /// `ricci_form[a][b]` is the pulled-back pseudo-Hermitian Ricci form on `(E_a, E_b)`.
    pub ricci_form: Vec<Vec<Expr>>,
    /// Pseudo-Hermitian scalar curvature of the base.
    pub scalar: Expr,
    /// `reeb_lie_g[a][b]` is the pulled-back Lie derivative of the Webster metric along the Reeb field.
    pub reeb_lie_g: Vec<Vec<Expr>>,
}

impl FeffermanData {
    /// All inputs identically zero: the flat Heisenberg base.
    pub fn flat(cr_dimension: usize, dim: usize) -> Self {
        let zeros = vec![vec![Expr::Const(0.0); dim]; dim];
        FeffermanData {
            cr_dimension,
            ricci_form: zeros.clone(),
            scalar: Expr::Const(0.0),
            reeb_lie_g: zeros,
        }
    }

    fn matrix(rows: &[Vec<Expr>], x: &Point) -> Result<DMatrix<f64>> {
        let m = rows.len();
        let mut out = DMatrix::zeros(m, m);
        for (a, row) in rows.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                out[(a, b)] = e.eval(x.as_slice())?;
            }
        }
        Ok(out)
    }

    pub fn ricci_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        Self::matrix(&self.ricci_form, x)
    }

    pub fn reeb_lie_g_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        Self::matrix(&self.reeb_lie_g, x)
    }

    pub fn scalar_at(&self, x: &Point) -> Result<f64> {
        self.scalar.eval(x.as_slice())
    }

    /// Frame components `E_a(s)` of the differential of the scalar curvature.
    pub fn scalar_differential(&self, model: &FrameModel, x: &Point) -> Result<DVector<f64>> {
        let jet = jet_eval(&self.scalar, x.as_slice())?;
        let grad = DVector::from_vec(jet.grad);
        Ok(model.frame_matrix(x)?.transpose() * grad)
    }

    fn is_constant_scalar(&self) -> bool {
        self.scalar.max_coord().is_none()
    }

    fn reeb_vanishes(&self) -> bool {
        self.reeb_lie_g.iter().flatten().all(Expr::is_zero)
    }
}

fn null_pair_of(model: &FrameModel) -> Result<NullPair> {
    model.null_pair().ok_or(WittError::NotNullPairModel)
}

/// Frame slots outside the null pair.
pub fn screen_slots(model: &FrameModel) -> Result<Vec<usize>> {
    let np = null_pair_of(model)?;
    Ok((0..model.dim()).filter(|&a| a != np.n && a != np.nstar).collect())
}

/// Checks that `j` acts on the screen only, squares to `-1` there and is `g`-orthogonal.
pub fn check_adapted(model: &FrameModel, j: &DMatrix<f64>) -> Result<()> {
    let m = model.dim();
    if j.shape() != (m, m) {
        return Err(WittError::JNotAdapted(format!("expected a {m}x{m} matrix")));
    }
    let screen = screen_slots(model)?;
    let on_screen = |a: usize| screen.contains(&a);
    for r in 0..m {
        for c in 0..m {
            if !(on_screen(r) && on_screen(c)) && j[(r, c)] != 0.0 {
                return Err(WittError::JNotAdapted(format!(
                    "entry ({}, {}) leaves the screen",
                    r + 1,
                    c + 1
                )));
            }
        }
    }
    let mut id = DMatrix::zeros(m, m);
    for &a in &screen {
        id[(a, a)] = 1.0;
    }
    if (j * j + &id).amax() > J_TOL {
        return Err(WittError::JNotAdapted("J^2 != -1 on the screen".into()));
    }
    let g = model.structure().gram();
    let gs = DMatrix::from_fn(m, m, |r, c| if on_screen(r) && on_screen(c) { g[(r, c)] } else { 0.0 });
    if (j.transpose() * &gs * j - &gs).amax() > J_TOL {
        return Err(WittError::JNotAdapted("J is not orthogonal for g on the screen".into()));
    }
    Ok(())
}

/// Screen complex structure together with its fundamental form.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenHermitianData {
    pub j: DMatrix<f64>,
    /// `omega[(a, b)] = g(J E_a, E_b)`.
    pub omega: DMatrix<f64>,
    pub screen: Vec<usize>,
}

impl ScreenHermitianData {
    pub fn new(model: &FrameModel, j: &DMatrix<f64>) -> Result<Self> {
        check_adapted(model, j)?;
        Ok(ScreenHermitianData {
            j: j.clone(),
            omega: j.transpose() * model.structure().gram(),
            screen: screen_slots(model)?,
        })
    }

    pub fn of(model: &FrameModel) -> Result<Self> {
        let j = model
            .complex_structure()
            .ok_or_else(|| WittError::NotApplicable("model has no screen complex structure".into()))?;
        Self::new(model, j)
    }
}

/// Evaluation context for frame-constant vectors at one point.
struct Screen<'a> {
    c: &'a ArrayView3<'a, f64>,
    g: &'a DMatrix<f64>,
    j: &'a DMatrix<f64>,
    screen: &'a [usize],
    np: NullPair,
    m: usize,
}

impl Screen<'_> {
    fn e(&self, a: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.m);
        v[a] = 1.0;
        v
    }

    fn br(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let m = self.m;
        let mut out = DVector::zeros(m);
        for a in 0..m {
            for b in 0..m {
                let s = u[a] * v[b];
                if s != 0.0 {
                    for k in 0..m {
                        out[k] += s * self.c[[k, a, b]];
                    }
                }
            }
        }
        out
    }

    fn g(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(self.g * v))
    }

    fn jv(&self, u: &DVector<f64>) -> DVector<f64> {
        self.j * u
    }

    fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.g(&self.jv(u), v)
    }

    fn proj_s(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m, |a, _| if self.screen.contains(&a) { v[a] } else { 0.0 })
    }

    /// Screen vector `u` with `g(u, E_z) = alpha(E_z)` for screen slots `z`.
    fn sharp_s(&self, alpha: impl Fn(&DVector<f64>) -> f64) -> DVector<f64> {
        let k = self.screen.len();
        let gs = DMatrix::from_fn(k, k, |r, c| self.g[(self.screen[r], self.screen[c])]);
        let rhs = DVector::from_fn(k, |r, _| alpha(&self.e(self.screen[r])));
        let sol = gs.lu().solve(&rhs).expect("screen metric is non-degenerate after validation");
        let mut out = DVector::zeros(self.m);
        for (i, &s) in self.screen.iter().enumerate() {
            out[s] = sol[i];
        }
        out
    }

    fn d_omega(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        -self.omega(&self.br(u, v), w) - self.omega(&self.br(v, w), u) - self.omega(&self.br(w, u), v)
    }

    fn dc_omega(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        -self.d_omega(&self.jv(u), &self.jv(v), &self.jv(w))
    }

    fn nijenhuis(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let (ju, jv) = (self.jv(u), self.jv(v));
        self.br(u, v) - self.br(&ju, &jv) + self.jv(&self.br(&ju, v)) + self.jv(&self.br(u, &jv))
    }

    fn sigma(&self, v: &DVector<f64>) -> f64 {
        v[self.np.n]
    }

    fn sigma_star(&self, v: &DVector<f64>) -> f64 {
        v[self.np.nstar]
    }

    fn d_sigma(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        -self.sigma(&self.br(u, v))
    }

    fn d_sigma_star(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        -self.sigma_star(&self.br(u, v))
    }

    fn lie_g(&self, z: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        -self.g(&self.br(z, u), v) - self.g(u, &self.br(z, v))
    }

    fn lie_omega(&self, z: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        -self.omega(&self.br(z, u), v) - self.omega(u, &self.br(z, v))
    }
}

/// `N_J(E_a, E_b)` for screen slots, as `out[[k, a, b]]`; zero elsewhere.
pub fn nijenhuis_tensor(model: &FrameModel, j: &DMatrix<f64>, x: &Point) -> Result<Array3<f64>> {
    let data = ScreenHermitianData::new(model, j)?;
    let c = model.structure_functions(x)?;
    let cv = c.view();
    let ctx = Screen {
        c: &cv,
        g: model.structure().gram(),
        j,
        screen: &data.screen,
        np: null_pair_of(model)?,
        m: model.dim(),
    };
    let m = model.dim();
    let mut out = Array3::zeros((m, m, m));
    for &a in &data.screen {
        for &b in &data.screen {
            let v = ctx.nijenhuis(&ctx.e(a), &ctx.e(b));
            for k in 0..m {
                out[[k, a, b]] = v[k];
            }
        }
    }
    Ok(out)
}

/// `N_J(X, Y)` for screen vectors `X`, `Y`.
pub fn nijenhuis(model: &FrameModel, j: &DMatrix<f64>, x: &Point, u: &FrameVector, v: &FrameVector) -> Result<FrameVector> {
    let screen = screen_slots(model)?;
    for w in [u, v] {
        if (0..model.dim()).any(|a| !screen.contains(&a) && w.0[a] != 0.0) {
            return Err(WittError::NotScreen);
        }
    }
    let n = nijenhuis_tensor(model, j, x)?;
    let m = model.dim();
    let mut out = DVector::zeros(m);
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                out[k] += n[[k, a, b]] * u.0[a] * v.0[b];
            }
        }
    }
    Ok(FrameVector(out))
}

/// The Lichnerowicz torsion split into its individual contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LichnerowiczTerms {
    /// `-¼ N_J(X, Y)` projected to the screen, for screen `X`, `Y`.
    pub nijenhuis: TorsionField,
    /// `-¼ (d^c ω + M(d^c ω))^♯(X, Y)` for screen `X`, `Y`.
    pub dc_omega: TorsionField,
    /// `dσ(X,Y) n + dσ*(X,Y) n*` on the screen, `dσ*(n,X) n*` and `dσ(n*,X) n`.
    pub null_forms: TorsionField,
    /// `-½ (L_X g)(n, n*)` times `n` resp. `n*`.
    pub lie_g_null: TorsionField,
    /// `τ^S(n(*), X)` with `g(τ^S(n, X), Y) = ½ (L_n g)(X, Y)`.
    pub tau_screen: TorsionField,
    /// `¼ (L_{n(*)} ω - M(L_{n(*)} ω))^♯(JX)`.
    pub lie_omega: TorsionField,
    /// `T(n, n*) = -[n, n*]_S`.
    pub null_bracket: TorsionField,
}

impl LichnerowiczTerms {
    pub fn total(&self) -> TorsionField {
        &self.nijenhuis + &self.dc_omega + &self.null_forms + &self.lie_g_null + &self.tau_screen + &self.lie_omega
            + &self.null_bracket
    }
}

fn put(t: &mut Array3<f64>, a: usize, b: usize, v: &DVector<f64>) {
    for k in 0..v.len() {
        t[[k, a, b]] = v[k];
        t[[k, b, a]] = -v[k];
    }
}

/// Lichnerowicz torsion terms from structure functions (or any array linear in them).
pub fn lichnerowicz_terms_from(model: &FrameModel, j: &DMatrix<f64>, c: &ArrayView3<f64>) -> Result<LichnerowiczTerms> {
    let np = null_pair_of(model)?;
    let screen = screen_slots(model)?;
    let m = model.dim();
    let ctx = Screen {
        c,
        g: model.structure().gram(),
        j,
        screen: &screen,
        np,
        m,
    };
    let z = || Array3::<f64>::zeros((m, m, m));
    let mut t = LichnerowiczTerms {
        nijenhuis: z(),
        dc_omega: z(),
        null_forms: z(),
        lie_g_null: z(),
        tau_screen: z(),
        lie_omega: z(),
        null_bracket: z(),
    };
    let nn = ctx.e(np.n);
    let ns = ctx.e(np.nstar);
    for (ia, &a) in screen.iter().enumerate() {
        let xa = ctx.e(a);
        for &b in &screen[ia + 1..] {
            let xb = ctx.e(b);
            put(&mut t.nijenhuis, a, b, &(ctx.proj_s(&ctx.nijenhuis(&xa, &xb)) * -0.25));
            let (jxa, jxb) = (ctx.jv(&xa), ctx.jv(&xb));
            let dc = ctx.sharp_s(|w| ctx.dc_omega(&xa, &xb, w) + ctx.dc_omega(&jxa, &jxb, w));
            put(&mut t.dc_omega, a, b, &(dc * -0.25));
            let nf = &nn * ctx.d_sigma(&xa, &xb) + &ns * ctx.d_sigma_star(&xa, &xb);
            put(&mut t.null_forms, a, b, &nf);
        }
        // T(n, X) and T(n*, X)
        let lxg = ctx.lie_g(&xa, &nn, &ns);
        let jx = ctx.jv(&xa);
        for (z, other, own, dform) in [
            (&nn, &ns, &nn, ctx.d_sigma_star(&nn, &xa)),
            (&ns, &nn, &ns, ctx.d_sigma(&ns, &xa)),
        ] {
            let zs = if z[np.n] == 1.0 { np.n } else { np.nstar };
            put(&mut t.null_forms, zs, a, &(other * dform));
            put(&mut t.lie_g_null, zs, a, &(own * (-0.5 * lxg)));
            put(&mut t.tau_screen, zs, a, &ctx.sharp_s(|y| 0.5 * ctx.lie_g(z, &xa, y)));
            let lo = ctx.sharp_s(|y| {
                let jy = ctx.jv(y);
                ctx.lie_omega(z, &jx, y) - ctx.lie_omega(z, &ctx.jv(&jx), &jy)
            });
            put(&mut t.lie_omega, zs, a, &(lo * 0.25));
        }
    }
    put(&mut t.null_bracket, np.n, np.nstar, &(ctx.proj_s(&ctx.br(&nn, &ns)) * -1.0));
    Ok(t)
}

/// Lichnerowicz torsion at `x` for the screen complex structure `j`.
pub fn lichnerowicz_torsion(model: &FrameModel, j: &DMatrix<f64>, x: &Point) -> Result<TorsionField> {
    check_adapted(model, j)?;
    let c = model.structure_functions(x)?;
    Ok(lichnerowicz_terms_from(model, j, &c.view())?.total())
}

/// Coefficients and residuals of the Lichnerowicz connection at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LichnerowiczReport {
    pub gamma: Array3<f64>,
    pub torsion: TorsionField,
    pub metricity: f64,
    /// `max |(∇_a J)^c_b|`.
    pub nabla_j: f64,
    /// Coefficients leaving one of `span(n)`, `span(n*)` or the screen.
    pub block_escape: f64,
}

pub fn nabla_j_residual(gamma: &ArrayView3<f64>, j: &DMatrix<f64>) -> f64 {
    let m = j.nrows();
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let mut acc = 0.0;
                for e in 0..m {
                    acc += gamma[[c, a, e]] * j[(e, b)] - j[(c, e)] * gamma[[e, a, b]];
                }
                worst = worst.max(acc.abs());
            }
        }
    }
    worst
}

fn coarse_group(np: NullPair, a: usize) -> usize {
    if a == np.n {
        0
    } else if a == np.nstar {
        1
    } else {
        2
    }
}

/// Builds the model with `j` attached and evaluates the Lichnerowicz connection at `x`.
pub fn lichnerowicz_connection(model: &FrameModel, j: &DMatrix<f64>, x: &Point) -> Result<LichnerowiczReport> {
    let with_j = model.clone().with_complex_structure(j.clone())?;
    let np = null_pair_of(model)?;
    let f = connection_field(&with_j, ConnectionKind::Lichnerowicz, x, false)?;
    let m = model.dim();
    let mut block_escape = 0.0f64;
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                if coarse_group(np, k) != coarse_group(np, b) {
                    block_escape = block_escape.max(f.gamma[[k, a, b]].abs());
                }
            }
        }
    }
    Ok(LichnerowiczReport {
        metricity: metricity_residual(model.structure(), &f.gamma.view()),
        nabla_j: nabla_j_residual(&f.gamma.view(), j),
        block_escape,
        gamma: f.gamma,
        torsion: f.torsion,
    })
}

/// Multiplier behaviour of a normal sub-Riemannian run on a Fefferman model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeffermanDiagnostic {
    pub k1: f64,
    pub k2: f64,
    /// `max |λ1(t) - k1|`.
    pub lambda1_drift: f64,
    /// `max |λ2(t) - λ2_rec(t)|` with `λ2_rec` from the integral formula.
    pub lambda2_reconstruction: f64,
    /// `max` norm of `∇_ċ ċ` minus the right-hand side built from `λ2_rec`.
    pub acceleration_residual: f64,
    /// Same with the pseudo-Einstein Sasaki reduction, when the data qualify.
    pub sasaki_residual: Option<f64>,
}

/// Compares a multiplier run against the closed-form Fefferman reduction.
pub fn fefferman_multiplier_diagnostic(model: &FrameModel, fdata: &FeffermanData, traj: &Trajectory) -> Result<FeffermanDiagnostic> {
    let np = model.null_pair().ok_or(WittError::NotFeffermanModel)?;
    let data = ScreenHermitianData::of(model).map_err(|_| WittError::NotFeffermanModel)?;
    let lambdas = traj
        .multipliers
        .as_ref()
        .ok_or_else(|| WittError::BadTrajectory("trajectory carries no multipliers".into()))?;
    let nt = traj.times.len();
    if nt < 5 {
        return Err(WittError::BadTrajectory("need at least 5 grid points".into()));
    }
    let m = model.dim();
    let mcr = fdata.cr_dimension as f64;
    let (k1, k2) = lambdas[0];
    let lambda1_drift = lambdas.iter().fold(0.0f64, |w, l| w.max((l.0 - k1).abs()));

    let mut integrand = Vec::with_capacity(nt);
    let mut rho = Vec::with_capacity(nt);
    let mut scal = Vec::with_capacity(nt);
    for (x, v) in traj.points.iter().zip(&traj.velocities) {
        let r = fdata.ricci_at(x)?;
        let ds = fdata.scalar_differential(model, x)?;
        let lg = fdata.reeb_lie_g_at(x)?;
        let rho_ns: f64 = (0..m).map(|b| r[(np.nstar, b)] * v[b]).sum();
        let val = k1 * (rho_ns - ds.dot(v) / (2.0 * (mcr + 1.0))) + 0.5 * v.dot(&(&lg * v));
        integrand.push(val);
        rho.push(r);
        scal.push(fdata.scalar_at(x)?);
    }
    let cum = cumulative_integral(&traj.times, &integrand)?;
    let lambda2_rec: Vec<f64> = cum.iter().map(|i| k2 + i).collect();
    let lambda2_reconstruction = lambdas
        .iter()
        .zip(&lambda2_rec)
        .fold(0.0f64, |w, (l, r)| w.max((l.1 - r).abs()));

    let acc = covariant_acceleration(model, traj)?;
    let screen = &data.screen;
    let gs = DMatrix::from_fn(screen.len(), screen.len(), |r, c| model.structure().gram()[(screen[r], screen[c])]);
    let gs_lu = gs.lu();
    let sharp_rho = |r: &DMatrix<f64>, v: &DVector<f64>| {
        let rhs = DVector::from_fn(screen.len(), |i, _| (0..m).map(|a| v[a] * r[(a, screen[i])]).sum());
        let sol = gs_lu.solve(&rhs).expect("screen metric is non-degenerate");
        let mut out = DVector::zeros(m);
        for (i, &s) in screen.iter().enumerate() {
            out[s] = sol[i];
        }
        out
    };
    let mut acceleration_residual = 0.0f64;
    for i in 0..nt {
        let v = &traj.velocities[i];
        let jv = &data.j * v;
        let rhs = sharp_rho(&rho[i], v) * k1 + &jv * (k1 * scal[i] / (2.0 * (mcr + 1.0)) + lambda2_rec[i]);
        acceleration_residual = acceleration_residual.max((&acc[i] - rhs).amax());
    }

    let sasaki_residual = if fdata.reeb_vanishes() && fdata.is_constant_scalar() && mcr > 0.0 {
        let s0 = scal[0];
        let pseudo_einstein = traj.points.iter().zip(&rho).all(|(_, r)| {
            screen.iter().all(|&a| {
                screen
                    .iter()
                    .all(|&b| (r[(a, b)] + s0 / mcr * data.omega[(a, b)]).abs() <= 1e-12 * (1.0 + s0.abs()))
            })
        });
        if pseudo_einstein {
            let coef = -k1 * (mcr + 2.0) / (2.0 * mcr * (mcr + 1.0)) * s0 + k2;
            Some((0..nt).fold(0.0f64, |w, i| {
                let jv = &data.j * &traj.velocities[i];
                w.max((&acc[i] - jv * coef).amax())
            }))
        } else {
            None
        }
    } else {
        None
    };
    Ok(FeffermanDiagnostic {
        k1,
        k2,
        lambda1_drift,
        lambda2_reconstruction,
        acceleration_residual,
        sasaki_residual,
    })
}

/// `∇_ċ ċ` on the grid, from a grid derivative of the frame velocity.
pub fn covariant_acceleration(model: &FrameModel, traj: &Trajectory) -> Result<Vec<DVector<f64>>> {
    let vdot = grid_derivative(&traj.times, &traj.velocities)?;
    traj.points
        .iter()
        .zip(&traj.velocities)
        .zip(vdot)
        .map(|((x, v), vd)| {
            let gamma = connection_field(model, ConnectionKind::CanonicalWitt, x, false)?.gamma;
            Ok(vd + crate::geodesics::gamma_vv(&gamma, v))
        })
        .collect()
}

/// Parallelism residuals of a Fefferman Witt symmetric space for the
/// Lichnerowicz connection. Values are necessary-condition residuals only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinsonReport {
    /// Components of `[n, n*]` outside the null plane.
    pub foliation: f64,
    pub lie_n_sigma: f64,
    pub lie_n_sigma_star: f64,
    pub lie_nstar_sigma: f64,
    pub lie_nstar_sigma_star: f64,
    pub nabla_sigma: f64,
    pub nabla_sigma_star: f64,
    pub nabla_d_sigma_star: f64,
    /// `(∇_S dσ)_S`.
    pub nabla_s_d_sigma: f64,
    /// `(∇_S L_{n*} g)_S`.
    pub nabla_s_lie_nstar_g: f64,
    /// `∇_S R`.
    pub nabla_s_r: f64,
    /// `(i_n R)_S`.
    pub i_n_r: f64,
    /// `(i_{n*} R)_S`.
    pub i_nstar_r: f64,
}

impl RobinsonReport {
    pub fn entries(&self) -> [(&'static str, f64); 13] {
        [
            ("foliation", self.foliation),
            ("lie_n_sigma", self.lie_n_sigma),
            ("lie_n_sigma_star", self.lie_n_sigma_star),
            ("lie_nstar_sigma", self.lie_nstar_sigma),
            ("lie_nstar_sigma_star", self.lie_nstar_sigma_star),
            ("nabla_sigma", self.nabla_sigma),
            ("nabla_sigma_star", self.nabla_sigma_star),
            ("nabla_d_sigma_star", self.nabla_d_sigma_star),
            ("nabla_s_d_sigma", self.nabla_s_d_sigma),
            ("nabla_s_lie_nstar_g", self.nabla_s_lie_nstar_g),
            ("nabla_s_r", self.nabla_s_r),
            ("i_n_r", self.i_n_r),
            ("i_nstar_r", self.i_nstar_r),
        ]
    }

    fn merge(self, o: Self) -> Self {
        let mut a = self.entries();
        let b = o.entries();
        for (x, y) in a.iter_mut().zip(b) {
            x.1 = x.1.max(y.1);
        }
        let v = |i: usize| a[i].1;
        RobinsonReport {
            foliation: v(0),
            lie_n_sigma: v(1),
            lie_n_sigma_star: v(2),
            lie_nstar_sigma: v(3),
            lie_nstar_sigma_star: v(4),
            nabla_sigma: v(5),
            nabla_sigma_star: v(6),
            nabla_d_sigma_star: v(7),
            nabla_s_d_sigma: v(8),
            nabla_s_lie_nstar_g: v(9),
            nabla_s_r: v(10),
            i_n_r: v(11),
            i_nstar_r: v(12),
        }
    }
}

fn amax_where(arr: &ArrayD<f64>, keep: impl Fn(&[usize]) -> bool) -> f64 {
    arr.indexed_iter()
        .filter(|(ix, _)| keep(ix.slice()))
        .fold(0.0f64, |w, (_, v)| w.max(v.abs()))
}

/// Residuals at one point for a model carrying its screen complex structure.
pub fn robinson_report_at(model: &FrameModel, x: &Point) -> Result<RobinsonReport> {
    let np = null_pair_of(model)?;
    ScreenHermitianData::of(model)?;
    let screen = screen_slots(model)?;
    let in_s = |a: usize| screen.contains(&a);
    let m = model.dim();
    let g = model.structure().gram();
    let geo = geometry_at(model, ConnectionKind::Lichnerowicz, x)?;
    let c = &geo.field.c;
    let dc = geo.field.dc.as_ref().expect("derivatives requested");
    let gamma = geo.field.gamma.view();
    let (n, ns) = (np.n, np.nstar);

    let foliation = screen.iter().fold(0.0f64, |w, &k| w.max(c[[k, n, ns]].abs()));
    // (L_Z σ)(E_b) = -σ([Z, E_b]) = -c^n_{Zb}
    let lie = |z: usize, form: usize| (0..m).fold(0.0f64, |w, b| w.max(c[[form, z, b]].abs()));
    // (∇_a σ)(E_b) = -Γ^n_ab
    let nab = |form: usize| {
        let mut w = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                w = w.max(gamma[[form, a, b]].abs());
            }
        }
        w
    };
    // dα(E_a, E_b) = -c^α_ab for α = σ, σ*, with frame derivatives from dc.
    let d_form = |form: usize| {
        let val = ArrayD::from_shape_fn(IxDyn(&[m, m]), |ix| -c[[form, ix[0], ix[1]]]);
        let dval = ArrayD::from_shape_fn(IxDyn(&[m, m, m]), |ix| -dc[[ix[0], form, ix[1], ix[2]]]);
        nabla_all(&gamma, &val, 0, Some(&dval))
    };
    let nd_sigma_star = d_form(ns);
    let nd_sigma = d_form(n);
    // (L_{n*} g)(E_a, E_b) = -Σ_d (c^d_{n* a} g_db + g_ad c^d_{n* b})
    let lie_g = ArrayD::from_shape_fn(IxDyn(&[m, m]), |ix| {
        (0..m).map(|d| -(c[[d, ns, ix[0]]] * g[(d, ix[1])] + g[(ix[0], d)] * c[[d, ns, ix[1]]])).sum()
    });
    let dlie_g = ArrayD::from_shape_fn(IxDyn(&[m, m, m]), |ix| {
        (0..m)
            .map(|d| -(dc[[ix[0], d, ns, ix[1]]] * g[(d, ix[2])] + g[(ix[1], d)] * dc[[ix[0], d, ns, ix[2]]]))
            .sum()
    });
    let n_lie_g = nabla_all(&gamma, &lie_g, 0, Some(&dlie_g));
    let r = &geo.curvature;
    let mut i_n_r = 0.0f64;
    let mut i_nstar_r = 0.0f64;
    for &d in &screen {
        for &b in &screen {
            for &cc in &screen {
                i_n_r = i_n_r.max(r[[d, n, b, cc]].abs());
                i_nstar_r = i_nstar_r.max(r[[d, ns, b, cc]].abs());
            }
        }
    }
    let all_s = |ix: &[usize]| ix.iter().all(|&a| in_s(a));
    Ok(RobinsonReport {
        foliation,
        lie_n_sigma: lie(n, n),
        lie_n_sigma_star: lie(n, ns),
        lie_nstar_sigma: lie(ns, n),
        lie_nstar_sigma_star: lie(ns, ns),
        nabla_sigma: nab(n),
        nabla_sigma_star: nab(ns),
        nabla_d_sigma_star: amax_where(&nd_sigma_star, |_| true),
        nabla_s_d_sigma: amax_where(&nd_sigma, all_s),
        nabla_s_lie_nstar_g: amax_where(&n_lie_g, all_s),
        nabla_s_r: screen
            .iter()
            .map(|&e| geo.nabla_r.index_axis(Axis(0), e).iter().fold(0.0f64, |w, v| w.max(v.abs())))
            .fold(0.0f64, f64::max),
        i_n_r,
        i_nstar_r,
    })
}

/// Maximum of each residual over the sample points, for the complex structure `j`.
pub fn robinson_symmetric_report(model: &FrameModel, j: &DMatrix<f64>, points: &[Point]) -> Result<RobinsonReport> {
    let with_j = model.clone().with_complex_structure(j.clone())?;
    let mut rep: Option<RobinsonReport> = None;
    for x in points {
        let r = robinson_report_at(&with_j, x)?;
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
    fn fefferman_j_is_integrable() {
        let m = builtin::fefferman_heisenberg(1).unwrap();
        let j = m.complex_structure().unwrap().clone();
        let x = Point::from_vec(vec![0.1, 0.2, 0.3, -0.4]);
        let n = nijenhuis_tensor(&m, &j, &x).unwrap();
        assert!(n.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn non_symplectic_j_is_not_integrable() {
        // slots: n, n*, X1, X2, Y1, Y2 with J X1 = X2, J Y1 = -Y2
        let m = builtin::fefferman_heisenberg(2).unwrap();
        let mut j = DMatrix::zeros(6, 6);
        j[(3, 2)] = 1.0;
        j[(2, 3)] = -1.0;
        j[(5, 4)] = -1.0;
        j[(4, 5)] = 1.0;
        check_adapted(&m, &j).unwrap();
        let n = nijenhuis_tensor(&m, &j, &Point::zeros(6)).unwrap();
        // N(X1, Y1) = [X1, Y1] - [X2, -Y2] = -2 n*
        assert_eq!(n[[1, 2, 4]], -2.0);
    }

    #[test]
    fn non_screen_argument_rejected() {
        let m = builtin::fefferman_heisenberg(1).unwrap();
        let j = m.complex_structure().unwrap().clone();
        let x = Point::zeros(4);
        let e = |a| FrameVector::basis(4, a);
        assert!(matches!(nijenhuis(&m, &j, &x, &e(0), &e(2)), Err(WittError::NotScreen)));
        let nxx = nijenhuis(&m, &j, &x, &e(2), &e(2)).unwrap();
        assert!(nxx.0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn j_must_square_to_minus_one() {
        let m = builtin::abelian_robinson(1).unwrap();
        let mut j = m.complex_structure().unwrap().clone();
        j[(2, 3)] = 2.0;
        assert!(matches!(check_adapted(&m, &j), Err(WittError::JNotAdapted(_))));
    }

    #[test]
    fn abelian_lichnerowicz_vanishes() {
        let m = builtin::abelian_robinson(2).unwrap();
        let j = m.complex_structure().unwrap().clone();
        let rep = lichnerowicz_connection(&m, &j, &Point::zeros(6)).unwrap();
        assert!(rep.gamma.iter().all(|v| *v == 0.0));
        assert_eq!((rep.metricity, rep.nabla_j, rep.block_escape), (0.0, 0.0, 0.0));
    }
}
