//! Piecewise-affine functions on the unit cube.

mod analysis;
mod checks;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::ratgeo::{
    homogeneous_compose, is_feasible, GeoError, HomogeneousMatrix, Polyhedron, RatMatrix, RatVector,
    SizeOf,
};

pub use analysis::{GrowthReport, Preimage};
pub use checks::{ContinuityViolation, FlowRule, OverlapViolation, RangeViolation, StabilityViolation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PafError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("a PAF needs at least one piece")]
    NoPieces,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("piece {piece}: dimension mismatch (expected {expected}, found {found})")]
    PieceDimension { piece: String, expected: usize, found: usize },
    #[error("duplicate piece name {0:?}")]
    DuplicateName(String),
    #[error("piece {0}: region has strict rows, regions must be closed")]
    OpenRegion(String),
    #[error("piece {0}: region has empty interior")]
    EmptyInterior(String),
    #[error("piece {0}: region is not contained in the unit cube")]
    OutsideCube(String),
    #[error("unknown piece {0:?}")]
    UnknownPiece(String),
    #[error("point {point} lies outside the domain")]
    Domain { point: RatVector },
    #[error("point {point} at step {step} lies outside the domain")]
    DomainAtStep { step: usize, point: RatVector },
    #[error("signature must be non-empty")]
    EmptySignature,
    #[error("target polyhedron of a flow rule must be closed")]
    OpenTarget,
    #[error("enumeration needs {needed} items, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

/// `x -> M x + o`, kept together with its homogeneous block form.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineMap {
    matrix: RatMatrix,
    offset: RatVector,
    homogeneous: HomogeneousMatrix,
}

impl AffineMap {
    pub fn new(matrix: RatMatrix, offset: RatVector) -> Result<Self, GeoError> {
        let homogeneous = HomogeneousMatrix::from_affine(&matrix, &offset)?;
        Ok(AffineMap { matrix, offset, homogeneous })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_homogeneous(HomogeneousMatrix::identity(d))
    }

    pub fn from_homogeneous(h: HomogeneousMatrix) -> Self {
        AffineMap { matrix: h.linear_part(), offset: h.offset_part(), homogeneous: h }
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &RatVector {
        &self.offset
    }

    pub fn as_homogeneous(&self) -> &HomogeneousMatrix {
        &self.homogeneous
    }

    pub fn apply(&self, x: &RatVector) -> Result<RatVector, GeoError> {
        Ok(self.matrix.mul_vec(x)?.add(&self.offset))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Piece {
    pub name: String,
    pub region: Polyhedron,
    pub map: AffineMap,
}

impl Piece {
    pub fn new(name: impl Into<String>, region: Polyhedron, map: AffineMap) -> Self {
        Piece { name: name.into(), region, map }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    /// Regions cover the whole unit cube.
    Total,
    /// The domain is the union of the regions.
    Partial,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Total => "total",
            DomainKind::Partial => "partial",
        })
    }
}

/// Sequence of piece indices traversed by a trajectory.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Signature(pub Vec<usize>);

impl Signature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

/// A validated piecewise-affine function `f: [0,1]^d -> [0,1]^d`.
///
/// Construction checks dimensions, closedness, nonempty interiors and
/// containment in the unit cube. Disjointness of interiors, continuity on
/// overlaps and the range condition are separate checks because they cost a
/// quadratic number of linear programs.
#[derive(Clone, Debug)]
pub struct Paf {
    dim: usize,
    pieces: Vec<Piece>,
    domain: DomainKind,
    by_name: HashMap<String, usize>,
    boxes: Vec<(RatVector, RatVector)>,
    /// Inverse of each piece's linear part, when it exists.
    inverses: Vec<Option<RatMatrix>>,
}

impl PartialEq for Paf {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.domain == other.domain && self.pieces == other.pieces
    }
}

impl Eq for Paf {}

impl Paf {
    pub fn new(dim: usize, pieces: Vec<Piece>, domain: DomainKind) -> Result<Self, PafError> {
        if dim == 0 {
            return Err(PafError::ZeroDimension);
        }
        if pieces.is_empty() {
            return Err(PafError::NoPieces);
        }
        let mut by_name = HashMap::with_capacity(pieces.len());
        let mut boxes = Vec::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            let dim_err = |found| PafError::PieceDimension { piece: p.name.clone(), expected: dim, found };
            if p.region.dim() != dim {
                return Err(dim_err(p.region.dim()));
            }
            if let Some(c) = p.region.constraints().iter().find(|c| c.normal.dim() != dim) {
                return Err(dim_err(c.normal.dim()));
            }
            if p.map.dim() != dim {
                return Err(dim_err(p.map.dim()));
            }
            if by_name.insert(p.name.clone(), i).is_some() {
                return Err(PafError::DuplicateName(p.name.clone()));
            }
            if !p.region.is_closed() {
                return Err(PafError::OpenRegion(p.name.clone()));
            }
            if !is_feasible(&p.region.interior()) {
                return Err(PafError::EmptyInterior(p.name.clone()));
            }
            let bbox = p.region.bounding_box().ok_or_else(|| PafError::OutsideCube(p.name.clone()))?;
            if !bbox.0.in_unit_cube() || !bbox.1.in_unit_cube() {
                return Err(PafError::OutsideCube(p.name.clone()));
            }
            boxes.push(bbox);
        }
        let inverses = pieces.iter().map(|p| p.map.matrix().inverse()).collect();
        Ok(Paf { dim, pieces, domain, by_name, boxes, inverses })
    }

    /// The identity on `[0,1]^d` as a single total piece.
    pub fn identity(dim: usize) -> Result<Self, PafError> {
        Self::new(
            dim,
            vec![Piece::new("id", Polyhedron::unit_cube(dim), AffineMap::identity(dim))],
            DomainKind::Total,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> &Piece {
        &self.pieces[i]
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    /// Componentwise bounds of a piece's region.
    pub fn bounding_box(&self, i: usize) -> &(RatVector, RatVector) {
        &self.boxes[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, PafError> {
        self.by_name.get(name).copied().ok_or_else(|| PafError::UnknownPiece(name.to_string()))
    }

    pub fn signature<S: AsRef<str>>(&self, names: &[S]) -> Result<Signature, PafError> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect::<Result<_, _>>().map(Signature)
    }

    pub fn signature_names(&self, sig: &Signature) -> Vec<&str> {
        sig.0.iter().map(|&i| self.pieces[i].name.as_str()).collect()
    }

    /// Lowest-index piece whose region contains `x`.
    pub fn piece_at(&self, x: &RatVector) -> Option<usize> {
        if x.dim() != self.dim {
            return None;
        }
        (0..self.pieces.len()).find(|&i| {
            let (lo, hi) = &self.boxes[i];
            (0..self.dim).all(|k| lo[k] <= x[k] && x[k] <= hi[k]) && self.pieces[i].region.contains(x)
        })
    }

    pub fn evaluate(&self, x: &RatVector) -> Result<RatVector, PafError> {
        if x.dim() != self.dim {
            return Err(GeoError::DimensionMismatch { expected: self.dim, found: x.dim() }.into());
        }
        if !x.in_unit_cube() {
            return Err(PafError::Domain { point: x.clone() });
        }
        let i = self.piece_at(x).ok_or_else(|| PafError::Domain { point: x.clone() })?;
        Ok(self.pieces[i].map.apply(x)?)
    }

    /// `[x, f(x), ..., f^t(x)]`.
    pub fn iterate(&self, x: &RatVector, t: usize) -> Result<Vec<RatVector>, PafError> {
        let mut traj = Vec::with_capacity(t + 1);
        traj.push(x.clone());
        for step in 0..t {
            let next = self.evaluate(&traj[step]).map_err(|e| match e {
                PafError::Domain { point } => PafError::DomainAtStep { step, point },
                e => e,
            })?;
            traj.push(next);
        }
        Ok(traj)
    }

    /// Pieces chosen by `evaluate` along the first `t` steps from `x`.
    pub fn signature_of(&self, x: &RatVector, t: usize) -> Result<Signature, PafError> {
        let mut sig = Vec::with_capacity(t);
        let mut cur = x.clone();
        for step in 0..t {
            let i = self
                .piece_at(&cur)
                .filter(|_| cur.in_unit_cube())
                .ok_or_else(|| PafError::DomainAtStep { step, point: cur.clone() })?;
            sig.push(i);
            cur = self.pieces[i].map.apply(&cur)?;
        }
        Ok(Signature(sig))
    }

    /// Product of the pieces' homogeneous matrices, first piece applied
    /// first.
    pub fn compose_along_signature(&self, sig: &Signature) -> Result<HomogeneousMatrix, PafError> {
        if sig.is_empty() {
            return Err(PafError::EmptySignature);
        }
        let ms = sig
            .0
            .iter()
            .map(|&i| {
                self.pieces
                    .get(i)
                    .map(|p| p.map.as_homogeneous().clone())
                    .ok_or_else(|| PafError::UnknownPiece(format!("#{i}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(homogeneous_compose(&ms, self.dim)?)
    }

    pub fn size(&self) -> u64 {
        self.pieces
            .iter()
            .map(|p| p.map.as_homogeneous().size().max(p.region.size()))
            .max()
            .unwrap_or(1)
    }
}

impl SizeOf for Paf {
    fn size_of(&self) -> u64 {
        self.size()
    }
}
