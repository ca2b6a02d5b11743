//! Structural verification of a PAF by exact linear programming.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DomainKind, Paf, PafError};
use crate::ratgeo::{
    lp_feasible, lp_optimize, Optimum, Polyhedron, RatVector, Rational, Sense,
};

/// Two pieces whose maps disagree at a shared point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ContinuityViolation {
    pub piece_i: usize,
    pub piece_j: usize,
    pub witness: RatVector,
}

/// A piece whose image leaves `[0,1]` in some coordinate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RangeViolation {
    pub piece: usize,
    pub coordinate: usize,
    pub extremum: Rational,
    pub point: RatVector,
}

/// Source pieces of a flow rule must map into `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowRule {
    pub sources: Vec<usize>,
    pub target: Polyhedron,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StabilityViolation {
    pub rule: usize,
    pub piece: usize,
    /// Index of the violated target row.
    pub row: usize,
    /// Largest value of the row's left-hand side over the image.
    pub value: Rational,
    /// Source point attaining it.
    pub point: RatVector,
}

/// Two pieces whose interiors intersect.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OverlapViolation {
    pub piece_i: usize,
    pub piece_j: usize,
    pub witness: RatVector,
}

fn boxes_meet(a: &(RatVector, RatVector), b: &(RatVector, RatVector)) -> bool {
    (0..a.0.dim()).all(|k| a.0[k] <= b.1[k] && b.0[k] <= a.1[k])
}

impl Paf {
    fn pairs_with_touching_boxes(&self) -> Vec<(usize, usize)> {
        let n = self.pieces.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| boxes_meet(&self.boxes[i], &self.boxes[j]))
            .collect()
    }

    /// Every pair of pieces with intersecting regions must agree on the
    /// intersection. Violations are returned sorted.
    pub fn check_continuity(&self) -> Vec<ContinuityViolation> {
        let mut out: Vec<ContinuityViolation> = self
            .pairs_with_touching_boxes()
            .into_par_iter()
            .filter_map(|(i, j)| self.continuity_violation(i, j))
            .collect();
        out.sort();
        out
    }

    fn continuity_violation(&self, i: usize, j: usize) -> Option<ContinuityViolation> {
        let (pi, pj) = (&self.pieces[i], &self.pieces[j]);
        let inter = pi.region.intersect(&pj.region).ok()?;
        let diff_m = pi.map.matrix().sub(pj.map.matrix());
        let diff_o = pi.map.offset().sub(pj.map.offset());
        for k in 0..self.dim {
            let g = diff_m.row(k);
            for sense in [Sense::Max, Sense::Min] {
                match lp_optimize(&inter, &g, sense) {
                    Ok(Optimum::Infeasible) => return None,
                    Ok(Optimum::Bounded { value, argpoint }) => {
                        if !(value + &diff_o[k]).is_zero() {
                            return Some(ContinuityViolation { piece_i: i, piece_j: j, witness: argpoint });
                        }
                    }
                    // regions are bounded, so this only arises from malformed input
                    _ => return None,
                }
            }
        }
        None
    }

    /// Every output coordinate stays in `[0,1]` over each region.
    pub fn check_range(&self) -> Vec<RangeViolation> {
        let mut out: Vec<RangeViolation> = (0..self.pieces.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let p = &self.pieces[i];
                let mut v = Vec::new();
                for k in 0..self.dim {
                    let g = p.map.matrix().row(k);
                    let c = &p.map.offset()[k];
                    for sense in [Sense::Max, Sense::Min] {
                        if let Ok(Optimum::Bounded { value, argpoint }) = lp_optimize(&p.region, &g, sense) {
                            let ext = value + c;
                            let bad = match sense {
                                Sense::Max => ext > Rational::one(),
                                Sense::Min => ext.is_negative(),
                            };
                            if bad {
                                v.push(RangeViolation { piece: i, coordinate: k, extremum: ext, point: argpoint });
                            }
                        }
                    }
                }
                v
            })
            .collect();
        out.sort();
        out
    }

    /// Each source piece's image must lie in its rule's target.
    pub fn check_stability(&self, flow: &[FlowRule]) -> Result<Vec<StabilityViolation>, PafError> {
        for r in flow {
            if !r.target.is_closed() {
                return Err(PafError::OpenTarget);
            }
            if r.target.dim() != self.dim {
                return Err(crate::ratgeo::GeoError::DimensionMismatch {
                    expected: self.dim,
                    found: r.target.dim(),
                }
                .into());
            }
            if let Some(&bad) = r.sources.iter().find(|&&s| s >= self.pieces.len()) {
                return Err(PafError::UnknownPiece(format!("#{bad}")));
            }
        }
        let jobs: Vec<(usize, usize)> =
            flow.iter().enumerate().flat_map(|(ri, r)| r.sources.iter().map(move |&s| (ri, s))).collect();
        let mut out: Vec<StabilityViolation> = jobs
            .into_par_iter()
            .flat_map_iter(|(ri, s)| {
                let p = &self.pieces[s];
                let pulled = flow[ri].target.pullback(p.map.as_homogeneous()).expect("dimensions checked");
                let mut v = Vec::new();
                for (row, (c, orig)) in pulled.constraints().iter().zip(flow[ri].target.constraints()).enumerate() {
                    if let Ok(Optimum::Bounded { value, argpoint }) = lp_optimize(&p.region, &c.normal, Sense::Max) {
                        if value > c.bound {
                            let lhs = &value + &(&orig.bound - &c.bound);
                            v.push(StabilityViolation { rule: ri, piece: s, row, value: lhs, point: argpoint });
                        }
                    }
                }
                v
            })
            .collect();
        out.sort();
        Ok(out)
    }

    /// Pairs of pieces whose interiors meet.
    pub fn check_disjoint_interiors(&self) -> Vec<OverlapViolation> {
        let mut out: Vec<OverlapViolation> = self
            .pairs_with_touching_boxes()
            .into_par_iter()
            .filter_map(|(i, j)| {
                let inter = self.pieces[i].region.intersect(&self.pieces[j].region).ok()?;
                lp_feasible(&inter.interior())
                    .ok()?
                    .witness()
                    .map(|w| OverlapViolation { piece_i: i, piece_j: j, witness: w.clone() })
            })
            .collect();
        out.sort();
        out
    }

    /// Samples `samples` random dyadic points of the unit cube (plus its
    /// corners) and returns those no region contains. Only meaningful for
    /// total PAFs; partial ones return an empty list.
    pub fn check_coverage(&self, samples: usize, seed: u64) -> Vec<RatVector> {
        if self.domain == DomainKind::Partial {
            return Vec::new();
        }
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let den = 1i64 << 20;
        let mut pts: Vec<RatVector> = (0..(1usize << d.min(10)))
            .map(|mask| (0..d).map(|k| Rational::from_int(((mask >> k) & 1) as i64)).collect())
            .collect();
        for _ in 0..samples {
            pts.push((0..d).map(|_| Rational::new(rng.gen_range(0..=den), den)).collect());
        }
        pts.into_iter().filter(|x| self.piece_at(x).is_none()).collect()
    }
}
