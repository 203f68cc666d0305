//! Manifold spec documents (JSON): loading with field-path validation errors,
//! conversion to and from [`FrameModel`], and normalized emission.
//!
//! Frame slots are 1-based in documents. Field paths in errors use 0-based
//! array positions, e.g. `blocks[2].slots[0]`.

use nalgebra::DMatrix;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::chart::ChartFrame;
use super::expr::{parse_expr, Expr};
use crate::error::{Result, StructureViolation, WittError};
use crate::hermitian::FeffermanData;
use crate::witt::{
    validate_witt_structure, Block, BlockKind, BlockLabel, FrameBackend, FrameModel, ValidationMode, WittGrading,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub name: String,
    pub dimension: usize,
    /// `"strict"` (default) or `"lax"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<String>,
    pub blocks: Vec<BlockSpec>,
    pub gram: Vec<Vec<f64>>,
    pub backend: BackendSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_pair: Option<NullPairSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex_structure: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fefferman: Option<FeffermanSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    /// `q0`, `q-1`, ... for anisotropic blocks, `p1` / `p1*` for isotropic pairs.
    pub label: String,
    pub slots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    /// Left-invariant frame: `[E_a, E_b] = Σ_k value[k] E_k`; omitted pairs commute.
    Lie { brackets: Vec<BracketSpec> },
    /// `frame[a][mu]` is the `mu`-th coordinate component of `E_a`.
    Chart { coordinates: Vec<String>, frame: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSpec {
    pub a: usize,
    pub b: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullPairSpec {
    pub n: usize,
    pub nstar: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeffermanSpec {
    pub cr_dimension: usize,
    pub ricci_form: Vec<Vec<String>>,
    pub scalar: String,
    pub reeb_lie_g: Vec<Vec<String>>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> WittError {
    WittError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

pub fn parse_label(s: &str) -> Option<BlockLabel> {
    let (kind, rest) = if let Some(r) = s.strip_prefix('q') {
        (BlockKind::Anisotropic, r)
    } else {
        let r = s.strip_prefix('p')?;
        match r.strip_suffix('*') {
            Some(r) => (BlockKind::IsotropicDual, r),
            None => (BlockKind::Isotropic, r),
        }
    };
    let index = rest.parse::<i32>().ok()?;
    Some(BlockLabel { kind, index })
}

/// Parses the document without building the model.
pub fn parse_manifold_spec(text: &str) -> Result<ManifoldSpec> {
    serde_json::from_str(text).map_err(|e| WittError::Parse(e.to_string()))
}

/// Parses, validates and returns the normalized document.
pub fn load_manifold_spec(text: &str) -> Result<ManifoldSpec> {
    let spec = parse_manifold_spec(text)?;
    Ok(ManifoldSpec::from_model(&spec.to_model()?))
}

/// Parses and validates a document into a model.
pub fn load_model(text: &str) -> Result<FrameModel> {
    parse_manifold_spec(text)?.to_model()
}

/// Pretty JSON with a trailing newline.
pub fn emit_manifold_spec(spec: &ManifoldSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec documents always serialize");
    s.push('\n');
    s
}

impl ManifoldSpec {
    fn labels(&self) -> Result<Vec<BlockLabel>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                parse_label(&b.label)
                    .ok_or_else(|| invalid(format!("blocks[{i}].label"), format!("cannot parse block label '{}'", b.label)))
            })
            .collect()
    }

    fn label_path(&self, labels: &[BlockLabel], label: BlockLabel) -> String {
        labels
            .iter()
            .position(|l| *l == label)
            .map(|i| format!("blocks[{i}]"))
            .unwrap_or_else(|| "blocks".into())
    }

    fn violation_path(&self, labels: &[BlockLabel], v: &StructureViolation) -> String {
        use StructureViolation::*;
        match v {
            ShapeMismatch { .. } | DegeneratePairing { .. } | Singular => "gram".into(),
            NonSymmetric { row, col } | NonOrthogonal { row, col, .. } => format!("gram[{row}][{col}]"),
            DimensionMismatch { pair, .. } => self.label_path(labels, BlockLabel::p(*pair as i32)),
            IndefiniteAnisotropicBlock { label }
            | DegenerateAnisotropicBlock { label }
            | UnpairedIsotropic { label }
            | DuplicateLabel { label }
            | BadLabel { label }
            | EmptyBlock { label } => self.label_path(labels, *label),
            OverlappingSlots { .. } | MissingSlot { .. } | SlotOutOfRange { .. } => "blocks".into(),
        }
    }

    fn mode(&self) -> Result<ValidationMode> {
        match self.validation.as_deref() {
            None | Some("strict") => Ok(ValidationMode::Strict),
            Some("lax") => Ok(ValidationMode::Lax),
            Some(other) => Err(invalid("validation", format!("expected 'strict' or 'lax', got '{other}'"))),
        }
    }

    fn matrix(&self, rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>> {
        let m = self.dimension;
        if rows.len() != m {
            return Err(invalid(path, format!("expected {m} rows, found {}", rows.len())));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(invalid(format!("{path}[{r}]"), format!("expected {m} entries, found {}", row.len())));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(invalid(format!("{path}[{r}][{c}]"), "entry is not finite"));
            }
        }
        Ok(DMatrix::from_fn(m, m, |r, c| rows[r][c]))
    }

    fn slot(&self, s: usize, path: String) -> Result<usize> {
        if s == 0 || s > self.dimension {
            return Err(invalid(path, format!("slot {s} outside 1..={}", self.dimension)));
        }
        Ok(s - 1)
    }

    fn backend(&self) -> Result<(FrameBackend, Vec<String>)> {
        let m = self.dimension;
        match &self.backend {
            BackendSpec::Lie { brackets } => {
                let mut c = Array3::zeros((m, m, m));
                let mut seen = vec![false; m * m];
                for (i, br) in brackets.iter().enumerate() {
                    let path = format!("backend.brackets[{i}]");
                    let a = self.slot(br.a, format!("{path}.a"))?;
                    let b = self.slot(br.b, format!("{path}.b"))?;
                    if a == b {
                        return Err(invalid(path, "bracket of a slot with itself"));
                    }
                    if br.value.len() != m {
                        return Err(invalid(format!("{path}.value"), format!("expected {m} components, found {}", br.value.len())));
                    }
                    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                    if std::mem::replace(&mut seen[lo * m + hi], true) {
                        return Err(invalid(path, format!("pair ({}, {}) given twice", lo + 1, hi + 1)));
                    }
                    for (k, v) in br.value.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(invalid(format!("{path}.value[{k}]"), "entry is not finite"));
                        }
                        c[[k, lo, hi]] = sign * v;
                        c[[k, hi, lo]] = -sign * v;
                    }
                }
                let names = (1..=m).map(|i| format!("x{i}")).collect();
                Ok((FrameBackend::LieConstant(c), names))
            }
            BackendSpec::Chart { coordinates, frame } => {
                if coordinates.len() != m {
                    return Err(invalid(
                        "backend.coordinates",
                        format!("expected {m} coordinates, found {}", coordinates.len()),
                    ));
                }
                if frame.len() != m {
                    return Err(invalid("backend.frame", format!("expected {m} frame fields, found {}", frame.len())));
                }
                let rows = frame
                    .iter()
                    .enumerate()
                    .map(|(a, row)| {
                        if row.len() != m {
                            return Err(invalid(format!("backend.frame[{a}]"), format!("expected {m} components, found {}", row.len())));
                        }
                        row.iter()
                            .enumerate()
                            .map(|(mu, src)| {
                                parse_expr(src, coordinates).map_err(|e| invalid(format!("backend.frame[{a}][{mu}]"), e.to_string()))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let chart = ChartFrame::new(coordinates.clone(), rows).map_err(|e| invalid("backend", e.to_string()))?;
                Ok((FrameBackend::Chart(chart), coordinates.clone()))
            }
        }
    }

    fn expr_matrix(&self, rows: &[Vec<String>], names: &[String], path: &str) -> Result<Vec<Vec<Expr>>> {
        let m = self.dimension;
        if rows.len() != m {
            return Err(invalid(path, format!("expected {m} rows, found {}", rows.len())));
        }
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                if row.len() != m {
                    return Err(invalid(format!("{path}[{r}]"), format!("expected {m} entries, found {}", row.len())));
                }
                row.iter()
                    .enumerate()
                    .map(|(c, src)| parse_expr(src, names).map_err(|e| invalid(format!("{path}[{r}][{c}]"), e.to_string())))
                    .collect()
            })
            .collect()
    }

    /// Validates the document and builds the model.
    pub fn to_model(&self) -> Result<FrameModel> {
        let m = self.dimension;
        if m == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        let mode = self.mode()?;
        let labels = self.labels()?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, (b, label)) in self.blocks.iter().zip(&labels).enumerate() {
            let slots = b
                .slots
                .iter()
                .enumerate()
                .map(|(j, &s)| self.slot(s, format!("blocks[{i}].slots[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(Block::new(*label, slots));
        }
        let gram = self.matrix(&self.gram, "gram")?;
        let structure = validate_witt_structure(WittGrading::new(m, blocks), gram, mode).map_err(|e| match e {
            WittError::InvalidStructure(v) => {
                let path = v.first().map(|f| self.violation_path(&labels, f)).unwrap_or_default();
                let message = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
                invalid(path, message)
            }
            e => e,
        })?;
        let (backend, names) = self.backend()?;
        let mut model = FrameModel::new(self.name.clone(), structure, backend).map_err(|e| invalid("backend", e.to_string()))?;
        if let Some(np) = self.null_pair {
            let n = self.slot(np.n, "null_pair.n".into())?;
            let ns = self.slot(np.nstar, "null_pair.nstar".into())?;
            model = model.with_null_pair(n, ns).map_err(|e| invalid("null_pair", e.to_string()))?;
        }
        if let Some(j) = &self.complex_structure {
            let j = self.matrix(j, "complex_structure")?;
            model = model.with_complex_structure(j).map_err(|e| invalid("complex_structure", e.to_string()))?;
        }
        if let Some(f) = &self.fefferman {
            if model.null_pair().is_none() || model.complex_structure().is_none() {
                return Err(invalid("fefferman", "Fefferman data needs a null pair and a complex structure"));
            }
            let scalar = parse_expr(&f.scalar, &names).map_err(|e| invalid("fefferman.scalar", e.to_string()))?;
            let data = FeffermanData {
                cr_dimension: f.cr_dimension,
                ricci_form: self.expr_matrix(&f.ricci_form, &names, "fefferman.ricci_form")?,
                scalar,
                reeb_lie_g: self.expr_matrix(&f.reeb_lie_g, &names, "fefferman.reeb_lie_g")?,
            };
            model = model.with_fefferman(data);
        }
        Ok(model)
    }

    /// Normalized document of a model: blocks in grading order with sorted slots,
    /// brackets listed once per nonzero pair with `a < b`.
    pub fn from_model(model: &FrameModel) -> Self {
        let s = model.structure();
        let m = s.dim();
        let rows = |mat: &DMatrix<f64>| (0..m).map(|r| (0..m).map(|c| mat[(r, c)]).collect()).collect();
        let blocks = s
            .grading()
            .blocks()
            .iter()
            .map(|b| {
                let mut slots: Vec<usize> = b.slots.iter().map(|s| s + 1).collect();
                slots.sort_unstable();
                BlockSpec {
                    label: b.label.to_string(),
                    slots,
                }
            })
            .collect();
        let names = model.coordinate_names();
        let backend = match model.backend() {
            FrameBackend::LieConstant(c) => {
                let mut brackets = Vec::new();
                for a in 0..m {
                    for b in (a + 1)..m {
                        let value: Vec<f64> = (0..m).map(|k| c[[k, a, b]]).collect();
                        if value.iter().any(|v| *v != 0.0) {
                            brackets.push(BracketSpec { a: a + 1, b: b + 1, value });
                        }
                    }
                }
                BackendSpec::Lie { brackets }
            }
            FrameBackend::Chart(ch) => BackendSpec::Chart {
                coordinates: ch.coordinates().to_vec(),
                frame: ch
                    .expressions()
                    .iter()
                    .map(|row| row.iter().map(|e| e.to_source(&names)).collect())
                    .collect(),
            },
        };
        let src = |rows: &[Vec<Expr>]| -> Vec<Vec<String>> {
            rows.iter().map(|r| r.iter().map(|e| e.to_source(&names)).collect()).collect()
        };
        ManifoldSpec {
            name: model.name.clone(),
            dimension: m,
            validation: match s.mode() {
                ValidationMode::Strict => None,
                ValidationMode::Lax => Some("lax".into()),
            },
            blocks,
            gram: rows(s.gram()),
            backend,
            null_pair: model.null_pair().map(|np| NullPairSpec {
                n: np.n + 1,
                nstar: np.nstar + 1,
            }),
            complex_structure: model.complex_structure().map(rows),
            fefferman: model.fefferman().map(|f| FeffermanSpec {
                cr_dimension: f.cr_dimension,
                ricci_form: src(&f.ricci_form),
                scalar: f.scalar.to_source(&names),
                reeb_lie_g: src(&f.reeb_lie_g),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::builtin;

    #[test]
    fn labels_parse_and_print() {
        for s in ["q0", "q-1", "p1", "p2*"] {
            assert_eq!(parse_label(s).unwrap().to_string(), s);
        }
        assert!(parse_label("r1").is_none());
        assert!(parse_label("p").is_none());
    }

    #[test]
    fn builtins_round_trip() {
        for name in builtin::BUILTIN_NAMES {
            let model = builtin::builtin_model(name, &Default::default()).unwrap();
            let text = emit_manifold_spec(&ManifoldSpec::from_model(&model));
            assert_eq!(load_model(&text).unwrap(), model, "{name}");
            assert_eq!(emit_manifold_spec(&load_manifold_spec(&text).unwrap()), text, "{name}");
        }
    }

    #[test]
    fn unequal_pair_ranks_name_the_pair() {
        let text = r#"{
            "name": "bad", "dimension": 3,
            "blocks": [{"label": "p1", "slots": [1]}, {"label": "p1*", "slots": [2, 3]}],
            "gram": [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
            "backend": {"type": "lie", "brackets": []}
        }"#;
        match load_model(text).unwrap_err() {
            WittError::Validation { path, message } => {
                assert_eq!(path, "blocks[0]");
                assert!(message.contains("isotropic pair 1"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_expression_reports_its_path() {
        let text = r#"{
            "name": "c", "dimension": 1,
            "blocks": [{"label": "q0", "slots": [1]}],
            "gram": [[1]],
            "backend": {"type": "chart", "coordinates": ["x"], "frame": [["1 + z"]]}
        }"#;
        match load_model(text).unwrap_err() {
            WittError::Validation { path, .. } => assert_eq!(path, "backend.frame[0][0]"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        assert!(matches!(load_model("{"), Err(WittError::Parse(_))));
        assert!(matches!(load_model(r#"{"name": 1}"#), Err(WittError::Parse(_))));
    }
}
