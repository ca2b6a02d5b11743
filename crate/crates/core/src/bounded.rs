//! Bounded-horizon reachability and control by signature search.
//!
//! The search walks signature prefixes in piece-index order while carrying
//! the exact set of states reachable along the prefix (a polyhedron, pushed
//! forward piece by piece). A prefix is pruned as soon as that set is empty,
//! and sets are memoized by a canonical form so that prefixes leading to the
//! same set are explored once per remaining horizon.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::paf::{Paf, PafError, Signature};
use crate::ratgeo::{
    is_feasible, lp_feasible, Constraint, Feasibility, GeoError, HomogeneousMatrix, Polyhedron,
    RatVector,
};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundedError {
    #[error(transparent)]
    Paf(#[from] PafError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("search budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedProblem {
    pub paf: Paf,
    pub init: Polyhedron,
    pub target: Polyhedron,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachCertificate {
    pub t: usize,
    pub signature: Signature,
    pub witness: RatVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachOutcome {
    Reachable(ReachCertificate),
    Unreachable,
}

/// A start point whose trajectory of length `T` never meets the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlCounterexample {
    pub signature: Signature,
    pub witness: RatVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControlOutcome {
    Controlled,
    Refuted(ControlCounterexample),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Verdict::Valid
    }
}

impl BoundedProblem {
    fn check_dims(&self) -> Result<(), BoundedError> {
        let d = self.paf.dim();
        for p in [&self.init, &self.target] {
            if p.dim() != d {
                return Err(GeoError::DimensionMismatch { expected: d, found: p.dim() }.into());
            }
        }
        Ok(())
    }
}

/// `x in init`, `C_k x in region(sig_k)` for every prefix product `C_k`,
/// and `C_t x in target`, as one polyhedron over start points.
pub fn build_signature_system(
    f: &Paf,
    init: &Polyhedron,
    sig: &Signature,
    target: &Polyhedron,
) -> Result<Polyhedron, BoundedError> {
    build_system(f, init, sig, Some(target), &[])
}

/// Shared builder. `extra` adds constraints at given steps, expressed on the
/// state at that step.
fn build_system(
    f: &Paf,
    init: &Polyhedron,
    sig: &Signature,
    target: Option<&Polyhedron>,
    extra: &[(usize, Constraint)],
) -> Result<Polyhedron, BoundedError> {
    let d = f.dim();
    if init.dim() != d {
        return Err(GeoError::DimensionMismatch { expected: d, found: init.dim() }.into());
    }
    let mut sys = init.clone();
    let mut c = HomogeneousMatrix::identity(d);
    let pull = |p: &Polyhedron, c: &HomogeneousMatrix| p.pullback(c);
    for (k, &i) in sig.indices().iter().enumerate() {
        let piece = f.pieces().get(i).ok_or_else(|| PafError::UnknownPiece(format!("#{i}")))?;
        sys = sys.intersect(&pull(&piece.region, &c)?)?;
        for (_, con) in extra.iter().filter(|(s, _)| *s == k) {
            let one = Polyhedron::new(d, vec![con.clone()])?;
            sys = sys.intersect(&pull(&one, &c)?)?;
        }
        c = piece.map.as_homogeneous().then_after(&c)?;
    }
    let t = sig.len();
    for (_, con) in extra.iter().filter(|(s, _)| *s == t) {
        let one = Polyhedron::new(d, vec![con.clone()])?;
        sys = sys.intersect(&pull(&one, &c)?)?;
    }
    if let Some(target) = target {
        sys = sys.intersect(&pull(target, &c)?)?;
    }
    Ok(sys)
}

type Key = Polyhedron;

struct Search<'a> {
    f: &'a Paf,
    target: &'a Polyhedron,
    successors: HashMap<Key, Vec<(usize, Key)>>,
    failed: HashSet<(Key, usize)>,
    nodes: usize,
    budget: usize,
}

impl<'a> Search<'a> {
    fn new(f: &'a Paf, target: &'a Polyhedron, budget: usize) -> Self {
        Search { f, target, successors: HashMap::new(), failed: HashSet::new(), nodes: 0, budget }
    }

    fn tick(&mut self) -> Result<(), BoundedError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(BoundedError::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    /// Nonempty images of `y` under each piece, in piece order.
    fn successors(&mut self, y: &Key) -> Result<Vec<(usize, Key)>, BoundedError> {
        if let Some(s) = self.successors.get(y) {
            return Ok(s.clone());
        }
        let bbox = y.bounding_box();
        let mut out = Vec::new();
        for (i, piece) in self.f.pieces().iter().enumerate() {
            if let Some((lo, hi)) = &bbox {
                let (plo, phi) = self.f.bounding_box(i);
                if (0..lo.dim()).any(|k| hi[k] < plo[k] || phi[k] < lo[k]) {
                    continue;
                }
            }
            let z = y.intersect(&piece.region)?;
            if !is_feasible(&z) {
                continue;
            }
            if let Some(img) = z.image(piece.map.as_homogeneous())?.canonical() {
                out.push((i, img));
            }
        }
        self.successors.insert(y.clone(), out.clone());
        Ok(out)
    }

    fn meets_target(&self, y: &Key) -> Result<bool, BoundedError> {
        Ok(is_feasible(&y.intersect(self.target)?))
    }

    /// Lexicographically first signature of length exactly `r` from `y`
    /// ending in the target.
    fn reach(&mut self, y: &Key, r: usize, path: &mut Vec<usize>) -> Result<bool, BoundedError> {
        if r == 0 {
            return self.meets_target(y);
        }
        if self.failed.contains(&(y.clone(), r)) {
            return Ok(false);
        }
        self.tick()?;
        for (i, next) in self.successors(y)? {
            path.push(i);
            if self.reach(&next, r - 1, path)? {
                return Ok(true);
            }
            path.pop();
        }
        self.failed.insert((y.clone(), r));
        Ok(false)
    }

    /// First signature of length `r` from `y` that avoids the target at
    /// every step. `negs` records the negated target row used at each step
    /// where the set meets the target.
    fn avoid(
        &mut self,
        y: &Key,
        r: usize,
        step: usize,
        path: &mut Vec<usize>,
        negs: &mut Vec<(usize, Constraint)>,
    ) -> Result<bool, BoundedError> {
        if self.failed.contains(&(y.clone(), r)) {
            return Ok(false);
        }
        self.tick()?;
        let branches: Vec<(Option<Constraint>, Key)> = if !self.meets_target(y)? {
            vec![(None, y.clone())]
        } else {
            let mut bs = Vec::new();
            for c in self.target.constraints() {
                let neg = c.negated();
                if let Some(part) = y.with(neg.clone())?.canonical() {
                    bs.push((Some(neg), part));
                }
            }
            bs
        };
        for (neg, part) in branches {
            if let Some(n) = &neg {
                negs.push((step, n.clone()));
            }
            if r == 0 {
                return Ok(true);
            }
            for (i, next) in self.successors(&part)? {
                path.push(i);
                if self.avoid(&next, r - 1, step + 1, path, negs)? {
                    return Ok(true);
                }
                path.pop();
            }
            if neg.is_some() {
                negs.pop();
            }
        }
        self.failed.insert((y.clone(), r));
        Ok(false)
    }
}

fn start_set(p: &BoundedProblem) -> Result<Option<Key>, BoundedError> {
    Ok(p.init.intersect(&Polyhedron::unit_cube(p.paf.dim()))?.canonical())
}

/// Decides whether some start point reaches the target within the horizon.
/// The certificate is minimal in `t`, then in the signature's piece
/// indices, and its witness is the lexicographically least start point.
pub fn reach_region_time(p: &BoundedProblem, budget: usize) -> Result<ReachOutcome, BoundedError> {
    p.check_dims()?;
    let Some(y0) = start_set(p)? else {
        return Ok(ReachOutcome::Unreachable);
    };
    let mut search = Search::new(&p.paf, &p.target, budget);
    for t in 0..=p.horizon {
        let mut path = Vec::with_capacity(t);
        if search.reach(&y0, t, &mut path)? {
            let signature = Signature(path);
            let sys = build_signature_system(&p.paf, &y0, &signature, &p.target)?;
            let Feasibility::Feasible(witness) = lp_feasible(&sys)? else {
                unreachable!("search found a nonempty set for this signature");
            };
            return Ok(ReachOutcome::Reachable(ReachCertificate { t, signature, witness }));
        }
    }
    Ok(ReachOutcome::Unreachable)
}

/// Decides whether every start point meets the target within the horizon.
/// A refutation carries a signature of length `T` and a start point whose
/// whole trajectory avoids the target.
pub fn control_region_time(p: &BoundedProblem, budget: usize) -> Result<ControlOutcome, BoundedError> {
    p.check_dims()?;
    let Some(y0) = start_set(p)? else {
        return Ok(ControlOutcome::Controlled);
    };
    let mut search = Search::new(&p.paf, &p.target, budget);
    let mut path = Vec::with_capacity(p.horizon);
    let mut negs = Vec::new();
    if !search.avoid(&y0, p.horizon, 0, &mut path, &mut negs)? {
        return Ok(ControlOutcome::Controlled);
    }
    let signature = Signature(path);
    let sys = build_system(&p.paf, &y0, &signature, None, &negs)?;
    let Feasibility::Feasible(witness) = lp_feasible(&sys)? else {
        unreachable!("search found a nonempty avoiding set");
    };
    Ok(ControlOutcome::Refuted(ControlCounterexample { signature, witness }))
}

/// Replays a reach certificate with exact evaluation.
pub fn verify_reach_certificate(p: &BoundedProblem, c: &ReachCertificate) -> Verdict {
    if !p.init.contains(&c.witness) {
        return Verdict::Invalid("init membership".into());
    }
    if c.signature.len() != c.t {
        return Verdict::Invalid("signature length".into());
    }
    if c.t > p.horizon {
        return Verdict::Invalid("horizon exceeded".into());
    }
    let mut x = c.witness.clone();
    for (k, &i) in c.signature.indices().iter().enumerate() {
        match p.paf.pieces().get(i) {
            Some(piece) if piece.region.contains(&x) => {}
            _ => return Verdict::Invalid(format!("signature mismatch at {k}")),
        }
        x = match p.paf.evaluate(&x) {
            Ok(y) => y,
            Err(_) => return Verdict::Invalid(format!("domain error at {k}")),
        };
    }
    if !p.target.contains(&x) {
        return Verdict::Invalid("target membership".into());
    }
    Verdict::Valid
}

/// Replays a control counterexample: the trajectory must follow the
/// signature for `T` steps and stay out of the target at steps `0..=T`.
pub fn verify_control_counterexample(p: &BoundedProblem, c: &ControlCounterexample) -> Verdict {
    if !p.init.contains(&c.witness) {
        return Verdict::Invalid("init membership".into());
    }
    if c.signature.len() != p.horizon {
        return Verdict::Invalid("signature length".into());
    }
    let mut x = c.witness.clone();
    for k in 0..=p.horizon {
        if p.target.contains(&x) {
            return Verdict::Invalid(format!("target hit at {k}"));
        }
        if k == p.horizon {
            break;
        }
        let i = c.signature.indices()[k];
        match p.paf.pieces().get(i) {
            Some(piece) if piece.region.contains(&x) => {}
            _ => return Verdict::Invalid(format!("signature mismatch at {k}")),
        }
        x = match p.paf.evaluate(&x) {
            Ok(y) => y,
            Err(_) => return Verdict::Invalid(format!("domain error at {k}")),
        };
    }
    Verdict::Valid
}
