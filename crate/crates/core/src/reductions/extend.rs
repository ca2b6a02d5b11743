//! Continuous extension of maps given on disjoint boxes of the unit square.
//!
//! The square is cut by the grid of all box coordinates. Grid cells outside
//! the boxes are split along their rising diagonal into two triangles, and
//! each triangle carries the affine interpolant of its vertex values. A
//! vertex on a box takes that box's map value, any other vertex stays fixed.
//! Neighbouring pieces agree on shared edges because an affine map on a
//! segment is determined by its endpoints.

use crate::paf::{AffineMap, DomainKind, Paf, Piece};
use crate::ratgeo::{Constraint, Polyhedron, RatMatrix, RatVector, Rational};

use super::ReductionError;

struct Boxed {
    lo: RatVector,
    hi: RatVector,
    map: AffineMap,
}

impl Boxed {
    fn contains(&self, x: &RatVector) -> bool {
        (0..2).all(|k| self.lo[k] <= x[k] && x[k] <= self.hi[k])
    }
}

/// Extends maps given on pairwise disjoint closed boxes of `[0,1]^2` to a
/// total continuous PAF. Box pieces come first, in input order, under their
/// own names.
pub fn extend_to_total(boxes: Vec<(String, Polyhedron, AffineMap)>) -> Result<Paf, ReductionError> {
    let mut named = Vec::with_capacity(boxes.len());
    for (i, (_, region, map)) in boxes.iter().enumerate() {
        if region.dim() != 2 || map.dim() != 2 {
            return Err(ReductionError::NotABox(i));
        }
        let (lo, hi) = region.bounding_box().ok_or(ReductionError::NotABox(i))?;
        let corners = [(&lo[0], &lo[1]), (&lo[0], &hi[1]), (&hi[0], &lo[1]), (&hi[0], &hi[1])];
        let is_box = corners.iter().all(|(a, b)| region.contains(&RatVector::new(vec![(*a).clone(), (*b).clone()])));
        if !is_box || !lo.in_unit_cube() || !hi.in_unit_cube() {
            return Err(ReductionError::NotABox(i));
        }
        named.push(Boxed { lo, hi, map: map.clone() });
    }
    for i in 0..named.len() {
        for j in i + 1..named.len() {
            let (a, b) = (&named[i], &named[j]);
            if (0..2).all(|k| a.lo[k] <= b.hi[k] && b.lo[k] <= a.hi[k]) {
                return Err(ReductionError::OverlappingBoxes(i, j));
            }
        }
    }

    let axis = |k: usize| {
        let mut v: Vec<Rational> = vec![Rational::zero(), Rational::one()];
        for b in &named {
            v.push(b.lo[k].clone());
            v.push(b.hi[k].clone());
        }
        v.sort();
        v.dedup();
        v
    };
    let (xs, ys) = (axis(0), axis(1));
    let value = |x: &Rational, y: &Rational| -> Result<RatVector, ReductionError> {
        let p = RatVector::new(vec![x.clone(), y.clone()]);
        match named.iter().find(|b| b.contains(&p)) {
            Some(b) => Ok(b.map.apply(&p)?),
            None => Ok(p),
        }
    };

    let mut pieces: Vec<Piece> =
        boxes.into_iter().map(|(name, region, map)| Piece::new(name, region, map)).collect();
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let (x0, x1, y0, y1) = (&xs[i], &xs[i + 1], &ys[j], &ys[j + 1]);
            let two = Rational::from_int(2);
            let centre = RatVector::new(vec![(x0 + x1) / &two, (y0 + y1) / &two]);
            if named.iter().any(|b| b.contains(&centre)) {
                continue;
            }
            let (dx, dy) = (x1 - x0, y1 - y0);
            let v00 = value(x0, y0)?;
            let v10 = value(x1, y0)?;
            let v01 = value(x0, y1)?;
            let v11 = value(x1, y1)?;
            let cell = Polyhedron::closed_box(
                &RatVector::new(vec![x0.clone(), y0.clone()]),
                &RatVector::new(vec![x1.clone(), y1.clone()]),
            );
            // (y - y0) dx - (x - x0) dy <= 0 below the diagonal
            let diag = Constraint::le(RatVector::new(vec![-dy.clone(), dx.clone()]), &(y0 * &dx) - &(x0 * &dy));
            let below = cell.with(diag.clone())?;
            let above = cell.with(Constraint::le(diag.normal.neg(), -&diag.bound))?;
            let lower = interpolant(x0, y0, &dx, &dy, &v00, &v10.sub(&v00), &v11.sub(&v10))?;
            let upper = interpolant(x0, y0, &dx, &dy, &v00, &v11.sub(&v01), &v01.sub(&v00))?;
            pieces.push(Piece::new(format!("ext.{i}.{j}.lo"), below, lower));
            pieces.push(Piece::new(format!("ext.{i}.{j}.hi"), above, upper));
        }
    }
    Ok(Paf::new(2, pieces, DomainKind::Total)?)
}

/// `v00 + (x - x0)/dx * ex + (y - y0)/dy * ey`
fn interpolant(
    x0: &Rational,
    y0: &Rational,
    dx: &Rational,
    dy: &Rational,
    v00: &RatVector,
    ex: &RatVector,
    ey: &RatVector,
) -> Result<AffineMap, ReductionError> {
    let cx = ex.scale(&dx.recip()?);
    let cy = ey.scale(&dy.recip()?);
    let rows = (0..2).map(|k| vec![cx[k].clone(), cy[k].clone()]).collect();
    let offset = v00.sub(&cx.scale(x0)).sub(&cy.scale(y0));
    Ok(AffineMap::new(RatMatrix::from_rows(rows)?, offset)?)
}
