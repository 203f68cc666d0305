//! Block gradings, constant Gram matrices and adapted frame models.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use crate::error::{Result, StructureViolation, WittError};
use crate::hermitian::FeffermanData;
use crate::manifolds::chart::ChartFrame;

/// A point of the model: chart coordinates, or exponential coordinates for Lie backends.
pub type Point = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKind {
    /// `q`: anisotropic summand.
    Anisotropic,
    /// `p`: totally isotropic summand.
    Isotropic,
    /// `p*`: the dual of an isotropic summand.
    IsotropicDual,
}

/// Label of a summand. Anisotropic labels carry non-positive indices, isotropic
/// pairs share one positive index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockLabel {
    pub kind: BlockKind,
    pub index: i32,
}

impl BlockLabel {
    pub fn q(index: i32) -> Self {
        BlockLabel {
            kind: BlockKind::Anisotropic,
            index,
        }
    }

    pub fn p(index: i32) -> Self {
        BlockLabel {
            kind: BlockKind::Isotropic,
            index,
        }
    }

    pub fn pstar(index: i32) -> Self {
        BlockLabel {
            kind: BlockKind::IsotropicDual,
            index,
        }
    }

    pub fn star(self) -> Self {
        let kind = match self.kind {
            BlockKind::Anisotropic => BlockKind::Anisotropic,
            BlockKind::Isotropic => BlockKind::IsotropicDual,
            BlockKind::IsotropicDual => BlockKind::Isotropic,
        };
        BlockLabel { kind, ..self }
    }

    pub fn is_isotropic(self) -> bool {
        self.kind != BlockKind::Anisotropic
    }

    /// 0 for even indices, 1 for odd ones. `p` and `p*` always agree.
    pub fn parity(self) -> i32 {
        self.index.rem_euclid(2)
    }

    fn index_ok(self) -> bool {
        match self.kind {
            BlockKind::Anisotropic => self.index <= 0,
            _ => self.index >= 1,
        }
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BlockKind::Anisotropic => write!(f, "q{}", self.index),
            BlockKind::Isotropic => write!(f, "p{}", self.index),
            BlockKind::IsotropicDual => write!(f, "p{}*", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: BlockLabel,
    /// Zero-based frame slots spanning the block.
    pub slots: Vec<usize>,
}

impl Block {
    pub fn new(label: BlockLabel, slots: Vec<usize>) -> Self {
        Block { label, slots }
    }
}

/// Assignment of frame slots to labelled summands.
#[derive(Debug, Clone, PartialEq)]
pub struct WittGrading {
    dim: usize,
    blocks: Vec<Block>,
}

impl WittGrading {
    pub fn new(dim: usize, blocks: Vec<Block>) -> Self {
        WittGrading { dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_index(&self, label: BlockLabel) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn block(&self, label: BlockLabel) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|b| b.label == label)
            .ok_or(WittError::UnknownBlock(label))
    }

    /// Block index of each slot; `None` where a slot is unassigned.
    fn slot_owner(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.dim];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &s in &b.slots {
                if s < self.dim && owner[s].is_none() {
                    owner[s] = Some(bi);
                }
            }
        }
        owner
    }

    fn structural_violations(&self) -> Vec<StructureViolation> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.dim];
        for (i, b) in self.blocks.iter().enumerate() {
            if !b.label.index_ok() {
                out.push(StructureViolation::BadLabel { label: b.label });
            }
            if self.blocks[..i].iter().any(|o| o.label == b.label) {
                out.push(StructureViolation::DuplicateLabel { label: b.label });
            }
            if b.slots.is_empty() {
                out.push(StructureViolation::EmptyBlock { label: b.label });
            }
            for &s in &b.slots {
                if s >= self.dim {
                    out.push(StructureViolation::SlotOutOfRange { slot: s });
                } else if seen[s] {
                    out.push(StructureViolation::OverlappingSlots { slot: s });
                } else {
                    seen[s] = true;
                }
            }
            if b.label.is_isotropic() {
                match self.blocks.iter().find(|o| o.label == b.label.star()) {
                    None => out.push(StructureViolation::UnpairedIsotropic { label: b.label }),
                    Some(d) => {
                        if b.label.kind == BlockKind::Isotropic && d.slots.len() != b.slots.len() {
                            out.push(StructureViolation::DimensionMismatch {
                                pair: b.label.index as u32,
                                rank: b.slots.len(),
                                dual_rank: d.slots.len(),
                            });
                        }
                    }
                }
            }
        }
        for (s, ok) in seen.iter().enumerate() {
            if !ok {
                out.push(StructureViolation::MissingSlot { slot: s });
            }
        }
        out
    }
}

/// Strict mode requires definite anisotropic blocks; lax mode only non-degenerate ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    Lax,
}

const STRUCT_TOL: f64 = 1e-12;

/// A grading together with a Gram matrix that satisfies every Witt axiom.
#[derive(Debug, Clone, PartialEq)]
pub struct WittStructure {
    grading: WittGrading,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    slot_block: Vec<usize>,
    star_block: Vec<usize>,
    mode: ValidationMode,
}

/// Checks every clause and reports all violations at once.
pub fn validate_witt_structure(
    grading: WittGrading,
    gram: DMatrix<f64>,
    mode: ValidationMode,
) -> Result<WittStructure> {
    let mut v = grading.structural_violations();
    let m = grading.dim;
    if gram.nrows() != m || gram.ncols() != m {
        v.push(StructureViolation::ShapeMismatch {
            expected: m,
            found: (gram.nrows(), gram.ncols()),
        });
        return Err(WittError::InvalidStructure(v));
    }
    for r in 0..m {
        for c in (r + 1)..m {
            if (gram[(r, c)] - gram[(c, r)]).abs() > STRUCT_TOL {
                v.push(StructureViolation::NonSymmetric { row: r, col: c });
            }
        }
    }
    if !v.is_empty() {
        return Err(WittError::InvalidStructure(v));
    }
    let owner: Vec<usize> = grading.slot_owner().into_iter().map(|o| o.unwrap()).collect();
    let star_block: Vec<usize> = grading
        .blocks
        .iter()
        .map(|b| grading.block_index(b.label.star()).unwrap())
        .collect();
    for r in 0..m {
        for c in 0..m {
            if r < c && owner[c] != star_block[owner[r]] && gram[(r, c)].abs() > STRUCT_TOL {
                v.push(StructureViolation::NonOrthogonal {
                    row: r,
                    col: c,
                    value: gram[(r, c)],
                });
            }
        }
    }
    for b in &grading.blocks {
        let sub = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| gram[(rows[i], cols[j])])
        };
        match b.label.kind {
            BlockKind::Isotropic => {
                let d = grading.block(b.label.star()).unwrap();
                if d.slots.len() == b.slots.len() {
                    let pairing = sub(&b.slots, &d.slots);
                    if is_singular(&pairing) {
                        v.push(StructureViolation::DegeneratePairing {
                            pair: b.label.index as u32,
                        });
                    }
                }
            }
            BlockKind::IsotropicDual => {}
            BlockKind::Anisotropic => {
                let blk = sub(&b.slots, &b.slots);
                let eig = blk.clone().symmetric_eigen().eigenvalues;
                let scale = eig.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(1.0);
                let degenerate = eig.iter().any(|e| e.abs() <= 1e-12 * scale);
                let definite = eig.iter().all(|e| *e > 0.0) || eig.iter().all(|e| *e < 0.0);
                if degenerate {
                    v.push(StructureViolation::DegenerateAnisotropicBlock { label: b.label });
                } else if !definite && mode == ValidationMode::Strict {
                    v.push(StructureViolation::IndefiniteAnisotropicBlock { label: b.label });
                }
            }
        }
    }
    if !v.is_empty() {
        return Err(WittError::InvalidStructure(v));
    }
    let gram_inv = match gram.clone().try_inverse() {
        Some(g) => g,
        None => return Err(WittError::InvalidStructure(vec![StructureViolation::Singular])),
    };
    Ok(WittStructure {
        grading,
        gram,
        gram_inv,
        slot_block: owner,
        star_block,
        mode,
    })
}

fn is_singular(m: &DMatrix<f64>) -> bool {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    max == 0.0 || min <= 1e-12 * max
}

/// Frame coefficients of a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector(pub DVector<f64>);

impl FrameVector {
    pub fn zeros(m: usize) -> Self {
        FrameVector(DVector::zeros(m))
    }

    pub fn basis(m: usize, a: usize) -> Self {
        let mut v = DVector::zeros(m);
        v[a] = 1.0;
        FrameVector(v)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        FrameVector(DVector::from_column_slice(s))
    }
}

impl WittStructure {
    pub fn grading(&self) -> &WittGrading {
        &self.grading
    }

    pub fn dim(&self) -> usize {
        self.grading.dim
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn mode(&self) -> ValidationMode {
        self.mode
    }

    /// Index into `grading().blocks()` of the block owning slot `a`.
    pub fn block_of_slot(&self, a: usize) -> usize {
        self.slot_block[a]
    }

    /// Index of the dual block of block `bi`.
    pub fn star_of_block(&self, bi: usize) -> usize {
        self.star_block[bi]
    }

    pub fn label_of_slot(&self, a: usize) -> BlockLabel {
        self.grading.blocks[self.slot_block[a]].label
    }

    pub fn block_slots(&self, bi: usize) -> &[usize] {
        &self.grading.blocks[bi].slots
    }

    pub fn num_blocks(&self) -> usize {
        self.grading.blocks.len()
    }

    pub fn g(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        v.dot(&(&self.gram * w))
    }

    pub fn project(&self, v: &FrameVector, label: BlockLabel) -> Result<FrameVector> {
        let b = self.grading.block(label)?;
        let mut out = DVector::zeros(self.dim());
        for &s in &b.slots {
            out[s] = v.0[s];
        }
        Ok(FrameVector(out))
    }

    /// Projection onto the blocks with the given indices.
    pub(crate) fn project_blocks(&self, v: &DVector<f64>, keep: impl Fn(usize) -> bool) -> DVector<f64> {
        DVector::from_fn(self.dim(), |a, _| if keep(self.slot_block[a]) { v[a] } else { 0.0 })
    }

    pub fn flat(&self, v: &FrameVector) -> DVector<f64> {
        &self.gram * &v.0
    }

    pub fn sharp(&self, alpha: &DVector<f64>) -> FrameVector {
        FrameVector(&self.gram_inv * alpha)
    }

    /// The component of `alpha` raised by the metric that lies in block `label`.
    pub fn sharp_in(&self, alpha: &DVector<f64>, label: BlockLabel) -> Result<FrameVector> {
        self.project(&self.sharp(alpha), label)
    }

    /// `(-1)^i` on each block, as a diagonal matrix on frame components.
    pub fn parity_involution(&self) -> Result<DMatrix<f64>> {
        self.parity_split()?;
        Ok(DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r != c {
                0.0
            } else if self.label_of_slot(r).parity() == 0 {
                1.0
            } else {
                -1.0
            }
        }))
    }

    /// Slots of the even (`V+`) and odd (`V-`) parts.
    pub fn parity_split(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let (even, odd): (Vec<usize>, Vec<usize>) =
            (0..self.dim()).partition(|&a| self.label_of_slot(a).parity() == 0);
        if even.is_empty() || odd.is_empty() {
            return Err(WittError::ParityUnassigned);
        }
        Ok((even, odd))
    }
}

/// Frame slots of the distinguished null pair, with `g(n, n*) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NullPair {
    pub n: usize,
    pub nstar: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameBackend {
    /// Left-invariant frame of a Lie group; `c[[c, a, b]]` is the structure constant.
    LieConstant(Array3<f64>),
    Chart(ChartFrame),
}

/// Adapted frame with constant Gram matrix and structure functions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameModel {
    pub name: String,
    structure: WittStructure,
    backend: FrameBackend,
    null_pair: Option<NullPair>,
    complex_structure: Option<DMatrix<f64>>,
    fefferman: Option<FeffermanData>,
}

/// Structure functions at a point together with their frame derivatives.
#[derive(Debug, Clone)]
pub struct StructureJet {
    /// `c[[c, a, b]]` with `[E_a, E_b] = c^c_ab E_c`.
    pub c: Array3<f64>,
    /// `dc[[e, c, a, b]] = E_e(c^c_ab)`.
    pub dc: Array4<f64>,
}

const JACOBI_TOL: f64 = 1e-12;

impl FrameModel {
    pub fn new(name: impl Into<String>, structure: WittStructure, backend: FrameBackend) -> Result<Self> {
        let m = structure.dim();
        match &backend {
            FrameBackend::LieConstant(c) => {
                if c.dim() != (m, m, m) {
                    return Err(WittError::Dimension {
                        expected: m,
                        found: c.dim().0,
                    });
                }
                for k in 0..m {
                    for a in 0..m {
                        for b in a..m {
                            if (c[[k, a, b]] + c[[k, b, a]]).abs() > 0.0 {
                                return Err(WittError::NotAntisymmetric { a, b, c: k });
                            }
                        }
                    }
                }
                let j = jacobi_residual(c);
                if j > JACOBI_TOL {
                    return Err(WittError::JacobiViolation(j));
                }
            }
            FrameBackend::Chart(ch) => {
                if ch.dim() != m {
                    return Err(WittError::Dimension {
                        expected: m,
                        found: ch.dim(),
                    });
                }
            }
        }
        Ok(FrameModel {
            name: name.into(),
            structure,
            backend,
            null_pair: None,
            complex_structure: None,
            fefferman: None,
        })
    }

    pub fn with_null_pair(mut self, n: usize, nstar: usize) -> Result<Self> {
        let s = &self.structure;
        let m = s.dim();
        if n >= m || nstar >= m {
            return Err(WittError::NotNullPairModel);
        }
        let ln = s.label_of_slot(n);
        let ls = s.label_of_slot(nstar);
        let g = s.gram();
        let ok = ln.kind == BlockKind::Isotropic
            && ls == ln.star()
            && s.block_slots(s.block_of_slot(n)).len() == 1
            && g[(n, n)] == 0.0
            && g[(nstar, nstar)] == 0.0
            && (g[(n, nstar)] - 1.0).abs() <= STRUCT_TOL;
        if !ok {
            return Err(WittError::NotNullPairModel);
        }
        self.null_pair = Some(NullPair { n, nstar });
        Ok(self)
    }

    pub fn with_complex_structure(mut self, j: DMatrix<f64>) -> Result<Self> {
        crate::hermitian::check_adapted(&self, &j)?;
        self.complex_structure = Some(j);
        Ok(self)
    }

    pub fn with_fefferman(mut self, data: FeffermanData) -> Self {
        self.fefferman = Some(data);
        self
    }

    pub fn structure(&self) -> &WittStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn backend(&self) -> &FrameBackend {
        &self.backend
    }

    pub fn is_lie(&self) -> bool {
        matches!(self.backend, FrameBackend::LieConstant(_))
    }

    pub fn null_pair(&self) -> Option<NullPair> {
        self.null_pair
    }

    pub fn complex_structure(&self) -> Option<&DMatrix<f64>> {
        self.complex_structure.as_ref()
    }

    pub fn fefferman(&self) -> Option<&FeffermanData> {
        self.fefferman.as_ref()
    }

    /// Coordinate names: chart names, or `x1..xm` for group coordinates.
    pub fn coordinate_names(&self) -> Vec<String> {
        match &self.backend {
            FrameBackend::Chart(ch) => ch.coordinates().to_vec(),
            FrameBackend::LieConstant(_) => (1..=self.dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(WittError::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `c^c_ab(x)`.
    pub fn structure_functions(&self, x: &Point) -> Result<Array3<f64>> {
        self.check_point(x)?;
        match &self.backend {
            FrameBackend::LieConstant(c) => Ok(c.clone()),
            FrameBackend::Chart(ch) => ch.structure_functions(x.as_slice()),
        }
    }

    /// Structure functions and their frame derivatives.
    pub fn structure_jet(&self, x: &Point) -> Result<StructureJet> {
        self.check_point(x)?;
        match &self.backend {
            FrameBackend::LieConstant(c) => {
                let m = self.dim();
                Ok(StructureJet {
                    c: c.clone(),
                    dc: Array4::zeros((m, m, m, m)),
                })
            }
            FrameBackend::Chart(ch) => ch.structure_jet(x.as_slice()),
        }
    }

    /// Coordinate components of the frame: column `a` is `E_a(x)`.
    pub fn frame_matrix(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        match &self.backend {
            FrameBackend::LieConstant(c) => lie_frame_matrix(c, x),
            FrameBackend::Chart(ch) => ch.frame_matrix(x.as_slice()),
        }
    }

    /// The same model with block labels renamed by `map`.
    pub fn relabel(&self, map: &[(BlockLabel, BlockLabel)]) -> Result<Self> {
        let blocks = self
            .structure
            .grading
            .blocks
            .iter()
            .map(|b| {
                let label = map
                    .iter()
                    .find(|(from, _)| *from == b.label)
                    .map(|(_, to)| *to)
                    .unwrap_or(b.label);
                Block::new(label, b.slots.clone())
            })
            .collect();
        let structure = validate_witt_structure(
            WittGrading::new(self.dim(), blocks),
            self.structure.gram.clone(),
            self.structure.mode,
        )?;
        Ok(FrameModel {
            structure,
            ..self.clone()
        })
    }

    /// Merges all anisotropic blocks into a single screen block labelled `q0`.
    pub fn coarsen_screen(&self) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut screen = Vec::new();
        for b in &self.structure.grading.blocks {
            if b.label.is_isotropic() {
                blocks.push(b.clone());
            } else {
                screen.extend(&b.slots);
            }
        }
        if !screen.is_empty() {
            screen.sort_unstable();
            blocks.push(Block::new(BlockLabel::q(0), screen));
        }
        let structure = validate_witt_structure(
            WittGrading::new(self.dim(), blocks),
            self.structure.gram.clone(),
            self.structure.mode,
        )?;
        Ok(FrameModel {
            structure,
            ..self.clone()
        })
    }

    /// Bracket of two frame vectors with constant coefficients.
    pub fn bracket(&self, c: &Array3<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        bracket(c, v, w)
    }
}

pub(crate) fn bracket(c: &Array3<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let m = v.len();
    let mut out = DVector::zeros(m);
    for a in 0..m {
        if v[a] == 0.0 {
            continue;
        }
        for b in 0..m {
            if w[b] == 0.0 {
                continue;
            }
            let s = v[a] * w[b];
            for k in 0..m {
                out[k] += s * c[[k, a, b]];
            }
        }
    }
    out
}

/// Largest cyclic sum `[[E_a, E_b], E_c] + cyc` over frame triples.
pub fn jacobi_residual(c: &Array3<f64>) -> f64 {
    let m = c.dim().0;
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for cc in 0..m {
                for e in 0..m {
                    let mut s = 0.0;
                    for d in 0..m {
                        s += c[[d, a, b]] * c[[e, d, cc]]
                            + c[[d, b, cc]] * c[[e, d, a]]
                            + c[[d, cc, a]] * c[[e, d, b]];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Left-invariant frame in exponential coordinates of the first kind:
/// `F(x) = phi(ad_x)^{-1}` with `phi(A) = sum (-A)^k / (k+1)!`.
fn lie_frame_matrix(c: &Array3<f64>, x: &Point) -> Result<DMatrix<f64>> {
    let m = x.len();
    let mut ad = DMatrix::zeros(m, m);
    for k in 0..m {
        for b in 0..m {
            let mut s = 0.0;
            for a in 0..m {
                s += x[a] * c[[k, a, b]];
            }
            ad[(k, b)] = s;
        }
    }
    let neg = -ad;
    let mut term = DMatrix::<f64>::identity(m, m);
    let mut phi = DMatrix::<f64>::identity(m, m);
    for k in 1..200 {
        term = &term * &neg / (k as f64 + 1.0);
        phi += &term;
        if term.amax() < 1e-18 * phi.amax() {
            break;
        }
    }
    phi.try_inverse().ok_or(WittError::SingularFrame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc_grading() -> WittGrading {
        WittGrading::new(
            4,
            vec![
                Block::new(BlockLabel::p(1), vec![0]),
                Block::new(BlockLabel::pstar(1), vec![1]),
                Block::new(BlockLabel::q(0), vec![2]),
                Block::new(BlockLabel::q(-1), vec![3]),
            ],
        )
    }

    fn osc_gram() -> DMatrix<f64> {
        let mut g = DMatrix::zeros(4, 4);
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        g[(2, 2)] = 0.5;
        g[(3, 3)] = 0.5;
        g
    }

    #[test]
    fn label_involution() {
        for l in [BlockLabel::q(-3), BlockLabel::p(2), BlockLabel::pstar(5)] {
            assert_eq!(l.star().star(), l);
            assert_eq!(l.star().parity(), l.parity());
        }
        assert_eq!(BlockLabel::q(0).star(), BlockLabel::q(0));
        assert_eq!(BlockLabel::p(1).star(), BlockLabel::pstar(1));
        assert_eq!(BlockLabel::pstar(1).to_string(), "p1*");
    }

    #[test]
    fn osc_structure_is_valid() {
        validate_witt_structure(osc_grading(), osc_gram(), ValidationMode::Strict).unwrap();
    }

    #[test]
    fn riemannian_single_block_is_valid() {
        let gr = WittGrading::new(4, vec![Block::new(BlockLabel::q(0), vec![0, 1, 2, 3])]);
        validate_witt_structure(gr, DMatrix::identity(4, 4), ValidationMode::Strict).unwrap();
    }

    #[test]
    fn zero_pairing_is_degenerate() {
        let gr = WittGrading::new(
            2,
            vec![
                Block::new(BlockLabel::p(1), vec![0]),
                Block::new(BlockLabel::pstar(1), vec![1]),
            ],
        );
        let err = validate_witt_structure(gr, DMatrix::zeros(2, 2), ValidationMode::Strict).unwrap_err();
        match err {
            WittError::InvalidStructure(v) => {
                assert!(v.contains(&StructureViolation::DegeneratePairing { pair: 1 }))
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn reports_every_violation() {
        let gr = WittGrading::new(
            4,
            vec![
                Block::new(BlockLabel::p(1), vec![0]),
                Block::new(BlockLabel::pstar(1), vec![1, 2]),
                Block::new(BlockLabel::q(0), vec![2, 3]),
            ],
        );
        let err = validate_witt_structure(gr, DMatrix::identity(4, 4), ValidationMode::Strict).unwrap_err();
        let WittError::InvalidStructure(v) = err else { panic!() };
        assert!(v.contains(&StructureViolation::DimensionMismatch {
            pair: 1,
            rank: 1,
            dual_rank: 2
        }));
        assert!(v.contains(&StructureViolation::OverlappingSlots { slot: 2 }));
    }

    #[test]
    fn indefinite_screen_needs_lax_mode() {
        let gr = WittGrading::new(2, vec![Block::new(BlockLabel::q(0), vec![0, 1])]);
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let err = validate_witt_structure(gr.clone(), g.clone(), ValidationMode::Strict).unwrap_err();
        let WittError::InvalidStructure(v) = err else { panic!() };
        assert_eq!(
            v,
            vec![StructureViolation::IndefiniteAnisotropicBlock {
                label: BlockLabel::q(0)
            }]
        );
        validate_witt_structure(gr, g, ValidationMode::Lax).unwrap();
    }

    #[test]
    fn mixed_entries_rejected() {
        let mut g = osc_gram();
        g[(0, 2)] = 0.1;
        g[(2, 0)] = 0.1;
        let err = validate_witt_structure(osc_grading(), g, ValidationMode::Strict).unwrap_err();
        let WittError::InvalidStructure(v) = err else { panic!() };
        assert!(matches!(v[0], StructureViolation::NonOrthogonal { row: 0, col: 2, .. }));
    }

    #[test]
    fn projection_selects_slots() {
        let s = validate_witt_structure(osc_grading(), osc_gram(), ValidationMode::Strict).unwrap();
        let v = FrameVector::from_slice(&[0.0, 1.0, 1.0, 0.0]);
        let p = s.project(&v, BlockLabel::pstar(1)).unwrap();
        assert_eq!(p.0.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.project(&p, BlockLabel::pstar(1)).unwrap(), p);
        assert!(matches!(
            s.project(&v, BlockLabel::p(7)),
            Err(WittError::UnknownBlock(_))
        ));
    }

    #[test]
    fn flat_of_n_is_dual_to_nstar() {
        let s = validate_witt_structure(osc_grading(), osc_gram(), ValidationMode::Strict).unwrap();
        let n = FrameVector::basis(4, 0);
        assert_eq!(s.flat(&n).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn lie_frame_is_identity_at_origin() {
        let c = Array3::zeros((3, 3, 3));
        let f = lie_frame_matrix(&c, &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(f, DMatrix::identity(3, 3));
    }
}
