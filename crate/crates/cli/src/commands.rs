use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;
use witt_core::*;

use crate::args::*;
use crate::error::{CliError, Result};

const ALGEBRAIC_TOL: f64 = 1e-12;
const JET_TOL: f64 = 1e-9;

pub fn load(args: &ModelArgs) -> Result<FrameModel> {
    match (&args.source.model, &args.source.spec) {
        (Some(name), None) => {
            if let Some(l) = &args.lambda {
                if let Some(w) = lambda_ordering_warning(l) {
                    eprintln!("warning: {w}");
                }
            }
            let params = BuiltinParams { lambda: args.lambda.clone(), m: args.m };
            Ok(builtin_model(name, &params)?)
        }
        (None, Some(path)) => {
            if args.lambda.is_some() || args.m.is_some() {
                return Err(CliError::Usage("--lambda and --m only apply to builtin models".into()));
            }
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            Ok(load_model(&text)?)
        }
        _ => Err(CliError::Usage("give exactly one of --model and --spec".into())),
    }
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite")))
    }
}

fn vector_arg(name: &str, v: &Option<Vec<f64>>, dim: usize) -> Result<Option<DVector<f64>>> {
    match v {
        None => Ok(None),
        Some(v) => {
            finite(name, v)?;
            if v.len() != dim {
                return Err(CliError::Usage(format!("--{name} needs {dim} components, got {}", v.len())));
            }
            Ok(Some(DVector::from_column_slice(v)))
        }
    }
}

fn pair_arg(name: &str, v: &[f64]) -> Result<(f64, f64)> {
    finite(name, v)?;
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Usage(format!("--{name} needs exactly two values"))),
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn nonzero_entries(t: &TorsionField) -> Vec<(usize, usize, usize, f64)> {
    t.indexed_iter()
        .filter(|(_, v)| **v != 0.0)
        .map(|((c, a, b), v)| (c, a, b, *v))
        .collect()
}

pub fn inspect(args: &InspectArgs) -> Result<()> {
    let model = load(&args.model)?;
    let m = model.dim();
    let x = vector_arg("point", &args.point, m)?.unwrap_or_else(|| Point::zeros(m));
    let s = model.structure();
    let field = connection_field(&model, ConnectionKind::CanonicalWitt, &x, false)?;
    let torsion: Vec<_> = nonzero_entries(&field.torsion).into_iter().filter(|e| e.1 < e.2).collect();
    let gamma = nonzero_entries(&field.gamma);
    let gram: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| s.gram()[(r, c)]).collect()).collect();
    let blocks: Vec<(String, Vec<usize>)> = s
        .grading()
        .blocks()
        .iter()
        .map(|b| (b.label.to_string(), b.slots.iter().map(|i| i + 1).collect()))
        .collect();
    let text = if args.format == Some(Format::Json) {
        let entries = |v: &[(usize, usize, usize, f64)]| {
            v.iter().map(|(c, a, b, val)| json!({"upper": c + 1, "a": a + 1, "b": b + 1, "value": val})).collect::<Vec<_>>()
        };
        let doc = json!({
            "model": model.name,
            "dimension": m,
            "backend": if model.is_lie() { "lie" } else { "chart" },
            "point": x.as_slice(),
            "blocks": blocks.iter().map(|(l, s)| json!({"label": l, "slots": s})).collect::<Vec<_>>(),
            "gram": gram,
            "null_pair": model.null_pair().map(|p| [p.n + 1, p.nstar + 1]),
            "torsion": entries(&torsion),
            "connection": entries(&gamma),
        });
        serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
    } else {
        let mut o = String::new();
        let backend = if model.is_lie() { "lie" } else { "chart" };
        writeln!(o, "model {} (dimension {m}, {backend} backend)", model.name).unwrap();
        writeln!(o, "point {:?}", x.as_slice()).unwrap();
        writeln!(o, "blocks").unwrap();
        for (l, slots) in &blocks {
            writeln!(o, "  {l:<6} slots {slots:?}").unwrap();
        }
        if let Some(p) = model.null_pair() {
            writeln!(o, "null pair n = E{}, n* = E{}", p.n + 1, p.nstar + 1).unwrap();
        }
        writeln!(o, "gram").unwrap();
        for row in &gram {
            writeln!(o, "  {row:?}").unwrap();
        }
        writeln!(o, "torsion T(E_a, E_b), a < b").unwrap();
        for (c, a, b, v) in &torsion {
            writeln!(o, "  T^{}_{},{} = {v}", c + 1, a + 1, b + 1).unwrap();
        }
        if torsion.is_empty() {
            writeln!(o, "  all zero").unwrap();
        }
        writeln!(o, "connection ∇_(E_a) E_b = Γ^c_ab E_c").unwrap();
        for (c, a, b, v) in &gamma {
            writeln!(o, "  Γ^{}_{},{} = {v}", c + 1, a + 1, b + 1).unwrap();
        }
        if gamma.is_empty() {
            writeln!(o, "  all zero").unwrap();
        }
        o
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct Residual {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct SuiteReport {
    suite: String,
    pass: bool,
    residuals: Vec<Residual>,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    model: String,
    dimension: usize,
    sample_points: usize,
    pass: bool,
    suites: Vec<SuiteReport>,
}

fn suite(name: &str, tol: f64, entries: &[(&str, f64)]) -> SuiteReport {
    let residuals: Vec<Residual> = entries
        .iter()
        .map(|(n, v)| Residual { name: n.to_string(), value: *v, tolerance: tol, pass: *v <= tol })
        .collect();
    SuiteReport { suite: name.into(), pass: residuals.iter().all(|r| r.pass), residuals }
}

pub fn check(args: &CheckArgs) -> Result<()> {
    let model = load(&args.model)?;
    let tol = args.tol.unwrap_or(if model.is_lie() { ALGEBRAIC_TOL } else { JET_TOL });
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Usage("--tol must be finite and non-negative".into()));
    }
    let mut suites = args.suite.clone();
    if suites.is_empty() {
        suites = vec![Suite::Compatibility, Suite::Bianchi];
    }
    if suites.contains(&Suite::All) {
        suites = vec![Suite::Compatibility, Suite::Bianchi, Suite::Symmetric];
        if model.complex_structure().is_some() {
            suites.push(Suite::Robinson);
        }
    }
    suites.sort();
    suites.dedup();
    let points = sample_points(&model, args.samples.max(1));
    let mut reports = Vec::new();
    for s in suites {
        reports.push(match s {
            Suite::Compatibility => {
                let r = compatibility_report(&model, ConnectionKind::CanonicalWitt, &points)?;
                suite(
                    "compatibility",
                    tol,
                    &[("metricity", r.metricity), ("block_escape", r.block_escape), ("torsion_roundtrip", r.torsion_roundtrip)],
                )
            }
            Suite::Bianchi => {
                let (mut first, mut second) = (0.0f64, 0.0f64);
                for x in &points {
                    let b = bianchi_residuals(&model, ConnectionKind::CanonicalWitt, x)?;
                    first = first.max(b.first);
                    second = second.max(b.second);
                }
                suite("bianchi", tol, &[("first", first), ("second", second)])
            }
            Suite::Symmetric => suite("symmetric", tol, &symmetric_space_report(&model, &points)?.entries()),
            Suite::Robinson => {
                let j = model
                    .complex_structure()
                    .ok_or_else(|| CliError::Usage("the robinson suite needs a model with a screen complex structure".into()))?;
                suite("robinson", tol, &robinson_symmetric_report(&model, j, &points)?.entries())
            }
            Suite::All => unreachable!(),
        });
    }
    let report = CheckReport {
        model: model.name.clone(),
        dimension: model.dim(),
        sample_points: points.len(),
        pass: reports.iter().all(|r| r.pass),
        suites: reports,
    };
    for s in &report.suites {
        for r in &s.residuals {
            eprintln!(
                "{} {}.{} = {:e} (tol {:e})",
                if r.pass { "PASS" } else { "FAIL" },
                s.suite,
                r.name,
                r.value,
                r.tolerance
            );
        }
    }
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    emit(args.out.as_deref(), &text)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("{}: residual suite failed", model.name)))
    }
}

fn trajectory_table(model: &FrameModel, traj: &Trajectory, format: Format) -> String {
    let s = model.structure();
    let mut columns = vec!["time".to_string()];
    columns.extend(model.coordinate_names());
    columns.extend((1..=model.dim()).map(|a| format!("v{a}")));
    if traj.multipliers.is_some() {
        columns.push("lambda1".into());
        columns.push("lambda2".into());
    }
    columns.push("gvv".into());
    let rows: Vec<Vec<f64>> = (0..traj.len())
        .map(|i| {
            let mut row = vec![traj.times[i]];
            row.extend(traj.points[i].iter());
            row.extend(traj.velocities[i].iter());
            if let Some(l) = &traj.multipliers {
                row.push(l[i].0);
                row.push(l[i].1);
            }
            row.push(s.g(&traj.velocities[i], &traj.velocities[i]));
            row
        })
        .collect();
    match format {
        Format::Csv => {
            let mut o = columns.join(",") + "\n";
            for r in &rows {
                let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                o.push_str(&cells.join(","));
                o.push('\n');
            }
            o
        }
        Format::Json => serde_json::to_string_pretty(&json!({"model": model.name, "columns": columns, "rows": rows}))
            .expect("json values serialize")
            + "\n",
    }
}

pub fn geodesic(args: &GeodesicArgs) -> Result<()> {
    let model = load(&args.model)?;
    let m = model.dim();
    let mode = args.resolved_mode();
    let x0 = vector_arg("point", &args.point, m)?.unwrap_or_else(|| Point::zeros(m));
    let span = pair_arg("span", &args.span)?;
    if span.1 <= span.0 {
        return Err(CliError::Usage("--span must be increasing".into()));
    }
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be positive".into()));
    }
    let v0 = match vector_arg("v0", &args.v0, m)? {
        Some(v) => FrameVector(v),
        None => match mode {
            Mode::NormalSr => FrameVector::basis(m, screen_slots(&model)?[0]),
            Mode::Lightlike => FrameVector::basis(m, model.null_pair().ok_or(WittError::NotNullPairModel)?.n),
            Mode::Plain => FrameVector::basis(m, 0),
        },
    };
    let traj = match mode {
        Mode::NormalSr => {
            let l0 = pair_arg("lambda0", &args.lambda0)?;
            integrate_normal_sr_geodesic(&model, &x0, &v0, l0, span, args.steps)?
        }
        Mode::Plain | Mode::Lightlike => integrate_geodesic(&model, &x0, &v0, span, args.steps)?,
    };
    emit(args.out.as_deref(), &trajectory_table(&model, &traj, args.format))?;
    match mode {
        Mode::Lightlike => match lightlike_residual(&model, &traj) {
            Ok((r1, r2)) => {
                eprintln!("lightlike residuals {r1:e}, {r2:e} (tol {:e})", args.tol);
                if r1.max(r2) > args.tol {
                    return Err(CliError::CheckFailed("lightlike characterization failed".into()));
                }
            }
            Err(WittError::NotLightlike(d)) => {
                return Err(CliError::CheckFailed(format!("curve left the null plane (defect {d:e})")));
            }
            Err(e) => return Err(e.into()),
        },
        Mode::NormalSr => eprintln!("horizontal defect {:e}", horizontal_defect(&model, &traj)?),
        Mode::Plain => {}
    }
    Ok(())
}

pub fn export(args: &ExportArgs) -> Result<()> {
    let model = load(&args.model)?;
    emit(args.out.as_deref(), &emit_manifold_spec(&ManifoldSpec::from_model(&model)))
}
