use rayon::prelude::*;

use super::{Paf, PafError, Signature};
use crate::ratgeo::{is_feasible, Constraint, HomogeneousMatrix, Polyhedron, RatVector, Rational};

/// A solution of `f_i(x) = y` inside piece `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preimage {
    /// The map of the piece is invertible and the unique solution lies in
    /// its region.
    Point { piece: usize, x: RatVector },
    /// The map is singular; all solutions in the region, kept symbolic.
    Set { piece: usize, region: Polyhedron },
}

impl Preimage {
    pub fn piece(&self) -> usize {
        match self {
            Preimage::Point { piece, .. } | Preimage::Set { piece, .. } => *piece,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowthReport {
    /// Largest size over all products along signatures of length `t`.
    pub measured: u64,
    /// `(d+1)^2 s(f) p t + (t-1) ceil(log2(d+1))`.
    pub bound: u64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

impl Paf {
    /// All nonempty per-piece solution sets of `f(x) = y`, by piece index.
    pub fn preimages(&self, y: &RatVector) -> Result<Vec<Preimage>, PafError> {
        if y.dim() != self.dim {
            return Err(crate::ratgeo::GeoError::DimensionMismatch { expected: self.dim, found: y.dim() }.into());
        }
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let rhs = y.sub(p.map.offset());
            if let Some(inv) = &self.inverses[i] {
                let x = inv.mul_vec(&rhs)?;
                if p.region.contains(&x) {
                    out.push(Preimage::Point { piece: i, x });
                }
                continue;
            }
            // a zero row pins that coordinate of the image
            if (0..self.dim).any(|k| p.map.matrix().row_slice(k).iter().all(Rational::is_zero) && !rhs[k].is_zero()) {
                continue;
            }
            let mut region = p.region.clone();
            for k in 0..self.dim {
                let row = p.map.matrix().row(k);
                region.push(Constraint::le(row.clone(), rhs[k].clone()))?;
                region.push(Constraint::le(row.neg(), -&rhs[k]))?;
            }
            if is_feasible(&region) {
                out.push(Preimage::Set { piece: i, region });
            }
        }
        Ok(out)
    }

    /// Measures coefficient growth over every signature of length `t`
    /// against the analytic bound. Fails if `p^t` exceeds `budget`.
    pub fn coefficient_growth(&self, t: usize, budget: u128) -> Result<GrowthReport, PafError> {
        assert!(t >= 1, "t must be positive");
        let p = self.pieces.len() as u128;
        let needed = p.checked_pow(t as u32).unwrap_or(u128::MAX);
        if needed > budget {
            return Err(PafError::BudgetExceeded { needed, budget });
        }
        let d = self.dim as u64;
        let bound = (d + 1) * (d + 1) * self.size() * p as u64 * t as u64 + (t as u64 - 1) * ceil_log2(d + 1);
        let measured = (0..self.pieces.len())
            .into_par_iter()
            .map(|first| {
                let start = self.pieces[first].map.as_homogeneous().clone();
                self.max_size_from(start, t - 1)
            })
            .max()
            .unwrap_or(1);
        Ok(GrowthReport { measured, bound })
    }

    fn max_size_from(&self, acc: HomogeneousMatrix, remaining: usize) -> u64 {
        if remaining == 0 {
            return acc.size();
        }
        self.pieces
            .iter()
            .map(|p| {
                let next = p.map.as_homogeneous().then_after(&acc).expect("square matrices");
                self.max_size_from(next, remaining - 1)
            })
            .max()
            .unwrap_or(1)
    }

    /// Exhaustive list of signatures of length `t`, in lexicographic order.
    pub fn all_signatures(&self, t: usize) -> impl Iterator<Item = Signature> + '_ {
        let p = self.pieces.len();
        let total = p.checked_pow(t as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut code| {
            let mut sig = vec![0; t];
            for slot in sig.iter_mut().rev() {
                *slot = code % p;
                code /= p;
            }
            Signature(sig)
        })
    }
}
