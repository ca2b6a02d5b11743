//! Fixed-precision dynamics: every iterate is rounded down to the grid
//! `eps Z^d` with `eps = 2^-n`.
//!
//! After one step every state is a grid point, the lower corner of its cell,
//! so the rounded system is a deterministic map on finitely many corners.
//! Reachability is decided by following corner chains from the cells hit by
//! the first step, with cycle detection.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::bounded::Verdict;
use crate::paf::{DomainKind, Paf, PafError};
use crate::ratgeo::{
    is_feasible, lp_feasible, Constraint, GeoError, Polyhedron, RatVector, Rational, Relation,
};

pub const DEFAULT_CELL_BUDGET: usize = 1 << 20;
pub const DEFAULT_CORNER_BUDGET: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrecisionError {
    #[error(transparent)]
    Paf(#[from] PafError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("fixed-precision problems need a total PAF; extend partial gadgets by triangulation first")]
    PartialDomain,
    #[error("precision exponent {0} is too large")]
    PrecisionTooLarge(u32),
    #[error("cell budget of {budget} exceeded ({needed} candidate cells)")]
    CellBudget { needed: u128, budget: usize },
    #[error("corner budget of {budget} exceeded")]
    CornerBudget { budget: usize },
}

/// The grid `eps Z^d` with `eps = 2^-n` and `N = 2^n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub n: u32,
    pub dim: usize,
}

impl GridSpec {
    pub fn new(n: u32, dim: usize) -> Result<Self, PrecisionError> {
        if n > 62 {
            return Err(PrecisionError::PrecisionTooLarge(n));
        }
        Ok(GridSpec { n, dim })
    }

    pub fn eps(&self) -> Rational {
        Rational::pow2_neg(self.n)
    }

    /// Cells per axis, `1/eps`.
    pub fn cells_per_axis(&self) -> u64 {
        1u64 << self.n
    }

    fn scale(&self) -> Rational {
        Rational::from(self.cells_per_axis())
    }

    /// Index of the half-open cell containing `x` (index `N` for value 1).
    pub fn cell_of(&self, x: &RatVector) -> CellIndex {
        let s = self.scale();
        CellIndex(x.iter().map(|v| (v * &s).floor().to_u64().unwrap_or(0)).collect())
    }

    /// Lower corner `eps * alpha`.
    pub fn corner(&self, c: &CellIndex) -> RatVector {
        let eps = self.eps();
        c.0.iter().map(|&a| Rational::from(a) * &eps).collect()
    }

    /// `alpha_k eps <= x_k < (alpha_k + 1) eps` for every axis.
    pub fn cell_polyhedron(&self, c: &CellIndex) -> Polyhedron {
        let eps = self.eps();
        let d = self.dim;
        let mut cs = Vec::with_capacity(2 * d);
        for (k, &a) in c.0.iter().enumerate() {
            let lo = Rational::from(a) * &eps;
            cs.push(Constraint::lower(d, k, lo.clone(), Relation::Le));
            cs.push(Constraint::upper(d, k, lo + &eps, Relation::Lt));
        }
        Polyhedron::from_rows_unchecked(d, cs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub Vec<u64>);

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Largest grid point below `x` in every coordinate.
pub fn round_down(x: &RatVector, grid: &GridSpec) -> RatVector {
    let s = grid.scale();
    x.iter().map(|v| Rational::from_bigint((v * &s).floor()) / &s).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionProblem {
    pub paf: Paf,
    pub init: Polyhedron,
    pub target: Polyhedron,
    pub grid: GridSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionBudget {
    pub max_cells: usize,
    pub max_corners: usize,
}

impl Default for PrecisionBudget {
    fn default() -> Self {
        PrecisionBudget { max_cells: DEFAULT_CELL_BUDGET, max_corners: DEFAULT_CORNER_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// The state at step `entry` recurs; the trajectory never meets the
    /// target.
    Cycle { entry: usize },
    ReachedTarget { step: usize },
    Truncated,
}

/// Step 0 is `start`; step `k >= 1` is `corners[k - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundedTrajectory {
    pub start: RatVector,
    pub corners: Vec<RatVector>,
    pub terminal: Terminal,
}

impl RoundedTrajectory {
    pub fn states(&self) -> impl Iterator<Item = &RatVector> {
        std::iter::once(&self.start).chain(self.corners.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrecisionReach {
    Reachable { t: usize, trajectory: RoundedTrajectory },
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrecisionControl {
    Controlled,
    Refuted { cell: CellIndex, trajectory: RoundedTrajectory },
}

impl PrecisionProblem {
    pub fn new(paf: Paf, init: Polyhedron, target: Polyhedron, n: u32) -> Result<Self, PrecisionError> {
        if paf.domain() != DomainKind::Total {
            return Err(PrecisionError::PartialDomain);
        }
        let d = paf.dim();
        for p in [&init, &target] {
            if p.dim() != d {
                return Err(GeoError::DimensionMismatch { expected: d, found: p.dim() }.into());
            }
        }
        Ok(PrecisionProblem { grid: GridSpec::new(n, d)?, paf, init, target })
    }

    /// `round_down(f(x))`.
    pub fn step_rounded(&self, x: &RatVector) -> Result<RatVector, PrecisionError> {
        Ok(round_down(&self.paf.evaluate(x)?, &self.grid))
    }

    /// Cells met by `f(init)` (or by `f(init \ target)`), each with a start
    /// point whose image lies in it. Sorted by cell.
    pub fn initial_cells(
        &self,
        exclude_target: bool,
        budget: &PrecisionBudget,
    ) -> Result<Vec<(CellIndex, RatVector)>, PrecisionError> {
        let d = self.paf.dim();
        let base = self.init.intersect(&Polyhedron::unit_cube(d))?;
        let mut found: HashMap<CellIndex, RatVector> = HashMap::new();
        let mut considered: u128 = 0;
        for piece in self.paf.pieces() {
            let z = base.intersect(&piece.region)?;
            if !is_feasible(&z) {
                continue;
            }
            let branches: Vec<Polyhedron> = if exclude_target {
                self.target
                    .constraints()
                    .iter()
                    .map(|c| z.with(c.negated()))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .filter(is_feasible)
                    .collect()
            } else {
                vec![z]
            };
            let h = piece.map.as_homogeneous();
            for zb in branches {
                let img = zb.image(h)?;
                let Some((lo, hi)) = img.bounding_box() else { continue };
                let (clo, chi) = (self.grid.cell_of(&lo), self.grid.cell_of(&hi));
                let needed: u128 = clo.0.iter().zip(&chi.0).map(|(a, b)| (b - a + 1) as u128).product();
                considered += needed;
                if considered > budget.max_cells as u128 {
                    return Err(PrecisionError::CellBudget { needed: considered, budget: budget.max_cells });
                }
                let mut cur = clo.0.clone();
                loop {
                    let cell = CellIndex(cur.clone());
                    if let Entry::Vacant(slot) = found.entry(cell) {
                        let sys = zb.intersect(&self.grid.cell_polyhedron(slot.key()).pullback(h)?)?;
                        if let Some(w) = lp_feasible(&sys)?.witness() {
                            slot.insert(w.clone());
                        }
                    }
                    // odometer over the candidate box
                    let mut k = 0;
                    while k < d {
                        if cur[k] < chi.0[k] {
                            cur[k] += 1;
                            break;
                        }
                        cur[k] = clo.0[k];
                        k += 1;
                    }
                    if k == d {
                        break;
                    }
                }
            }
        }
        let mut out: Vec<_> = found.into_iter().collect();
        out.sort();
        Ok(out)
    }

    /// Rounded trajectory from `x0`, stopping at the first target hit, the
    /// first repeated state, or after `max_steps` steps.
    pub fn simulate_rounded(&self, x0: &RatVector, max_steps: usize) -> Result<RoundedTrajectory, PrecisionError> {
        let mut seen: HashMap<RatVector, usize> = HashMap::new();
        let mut corners = Vec::new();
        let mut cur = x0.clone();
        let mut step = 0;
        let terminal = loop {
            if self.target.contains(&cur) {
                break Terminal::ReachedTarget { step };
            }
            if let Some(&entry) = seen.get(&cur) {
                corners.pop();
                break Terminal::Cycle { entry };
            }
            if step == max_steps {
                break Terminal::Truncated;
            }
            seen.insert(cur.clone(), step);
            cur = self.step_rounded(&cur)?;
            corners.push(cur.clone());
            step += 1;
        };
        Ok(RoundedTrajectory { start: x0.clone(), corners, terminal })
    }

    /// Exists a start point whose rounded trajectory meets the target.
    /// Reports the least time over all starts.
    pub fn reach_region_precision(&self, budget: &PrecisionBudget) -> Result<PrecisionReach, PrecisionError> {
        let d = self.paf.dim();
        let start_zero = self.init.intersect(&Polyhedron::unit_cube(d))?.intersect(&self.target)?;
        if let Some(w) = lp_feasible(&start_zero)?.witness() {
            let trajectory = RoundedTrajectory {
                start: w.clone(),
                corners: vec![],
                terminal: Terminal::ReachedTarget { step: 0 },
            };
            return Ok(PrecisionReach::Reachable { t: 0, trajectory });
        }
        let cells = self.initial_cells(false, budget)?;
        let mut chains = CornerChains::new(self, budget.max_corners);
        let mut best: Option<(usize, RatVector)> = None;
        for (cell, x0) in &cells {
            if let Some(dist) = chains.distance(self.grid.corner(cell))? {
                if best.as_ref().is_none_or(|(t, _)| 1 + dist < *t) {
                    best = Some((1 + dist, x0.clone()));
                }
            }
        }
        match best {
            None => Ok(PrecisionReach::Unreachable),
            Some((t, x0)) => {
                let trajectory = self.simulate_rounded(&x0, t)?;
                debug_assert_eq!(trajectory.terminal, Terminal::ReachedTarget { step: t });
                Ok(PrecisionReach::Reachable { t, trajectory })
            }
        }
    }

    /// Every start point's rounded trajectory meets the target. A refutation
    /// names the first cell (in index order) whose corner chain cycles
    /// outside the target.
    pub fn control_region_precision(&self, budget: &PrecisionBudget) -> Result<PrecisionControl, PrecisionError> {
        let cells = self.initial_cells(true, budget)?;
        let mut chains = CornerChains::new(self, budget.max_corners);
        for (cell, x0) in cells {
            if chains.distance(self.grid.corner(&cell))?.is_none() {
                let limit = chains.visited + 2;
                let trajectory = self.simulate_rounded(&x0, limit)?;
                return Ok(PrecisionControl::Refuted { cell, trajectory });
            }
        }
        Ok(PrecisionControl::Controlled)
    }
}

impl PrecisionProblem {
    /// Replays a claimed rounded trajectory `states[0..=t]` that must start
    /// in `init` and end in the target.
    pub fn verify_reach_trajectory(&self, states: &[RatVector]) -> Verdict {
        if let Some(bad) = self.replay(states) {
            return bad;
        }
        match states.last() {
            Some(x) if self.target.contains(x) => Verdict::Valid,
            _ => Verdict::Invalid("target membership".into()),
        }
    }

    /// Replays a claimed cycle: no listed state meets the target and the
    /// step after the last state returns to `states[entry]`.
    pub fn verify_cycle_trajectory(&self, states: &[RatVector], entry: usize) -> Verdict {
        if let Some(bad) = self.replay(states) {
            return bad;
        }
        if let Some(k) = states.iter().position(|x| self.target.contains(x)) {
            return Verdict::Invalid(format!("target hit at {k}"));
        }
        let last = states.len() - 1;
        match self.step_rounded(&states[last]) {
            Ok(y) if entry <= last && y == states[entry] => Verdict::Valid,
            Ok(_) => Verdict::Invalid("no cycle".into()),
            Err(_) => Verdict::Invalid(format!("domain error at {last}")),
        }
    }

    fn replay(&self, states: &[RatVector]) -> Option<Verdict> {
        let Some(start) = states.first() else {
            return Some(Verdict::Invalid("empty trajectory".into()));
        };
        if start.dim() != self.paf.dim() || !start.in_unit_cube() || !self.init.contains(start) {
            return Some(Verdict::Invalid("init membership".into()));
        }
        for k in 1..states.len() {
            match self.step_rounded(&states[k - 1]) {
                Ok(y) if y == states[k] => {}
                Ok(_) => return Some(Verdict::Invalid(format!("trajectory mismatch at {k}"))),
                Err(_) => return Some(Verdict::Invalid(format!("domain error at {}", k - 1))),
            }
        }
        None
    }
}

/// Memoized distance from a corner to the target under the rounded map.
struct CornerChains<'a> {
    p: &'a PrecisionProblem,
    dist: HashMap<RatVector, Option<usize>>,
    visited: usize,
    budget: usize,
}

impl<'a> CornerChains<'a> {
    fn new(p: &'a PrecisionProblem, budget: usize) -> Self {
        CornerChains { p, dist: HashMap::new(), visited: 0, budget }
    }

    fn distance(&mut self, start: RatVector) -> Result<Option<usize>, PrecisionError> {
        let mut path: Vec<RatVector> = Vec::new();
        let mut on_path: HashMap<RatVector, usize> = HashMap::new();
        let mut cur = start;
        let base = loop {
            if let Some(d) = self.dist.get(&cur) {
                break *d;
            }
            if self.p.target.contains(&cur) {
                break Some(0);
            }
            if on_path.contains_key(&cur) {
                break None;
            }
            self.visited += 1;
            if self.visited > self.budget {
                return Err(PrecisionError::CornerBudget { budget: self.budget });
            }
            on_path.insert(cur.clone(), path.len());
            path.push(cur.clone());
            cur = self.p.step_rounded(&cur)?;
        };
        let len = path.len();
        for (i, c) in path.into_iter().enumerate() {
            self.dist.insert(c, base.map(|b| b + len - i));
        }
        Ok(base.map(|b| b + len))
    }
}
