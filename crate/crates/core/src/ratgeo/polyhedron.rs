use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::lp::{is_feasible, lp_optimize, Optimum, Sense};
use super::{GeoError, HomogeneousMatrix, RatVector, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `a.x <= b`
    Le,
    /// `a.x < b`
    Lt,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
        })
    }
}

/// One half-space `normal . x (<= | <) bound`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub normal: RatVector,
    pub bound: Rational,
    pub kind: Relation,
}

impl Constraint {
    pub fn new(normal: RatVector, bound: Rational, kind: Relation) -> Self {
        Constraint { normal, bound, kind }
    }

    pub fn le(normal: RatVector, bound: Rational) -> Self {
        Self::new(normal, bound, Relation::Le)
    }

    pub fn lt(normal: RatVector, bound: Rational) -> Self {
        Self::new(normal, bound, Relation::Lt)
    }

    /// `x_k >= lo`, written as `-x_k <= -lo`.
    pub fn lower(dim: usize, k: usize, lo: Rational, kind: Relation) -> Self {
        Self::new(RatVector::unit(dim, k).neg(), -lo, kind)
    }

    /// `x_k <= hi` (or `<`).
    pub fn upper(dim: usize, k: usize, hi: Rational, kind: Relation) -> Self {
        Self::new(RatVector::unit(dim, k), hi, kind)
    }

    pub fn satisfied_by(&self, x: &RatVector) -> bool {
        let lhs = self.normal.dot(x);
        match self.kind {
            Relation::Le => lhs <= self.bound,
            Relation::Lt => lhs < self.bound,
        }
    }

    /// The complementary half-space: `a.x <= b` becomes `-a.x < -b` and
    /// `a.x < b` becomes `-a.x <= -b`.
    pub fn negated(&self) -> Self {
        let kind = match self.kind {
            Relation::Le => Relation::Lt,
            Relation::Lt => Relation::Le,
        };
        Constraint::new(self.normal.neg(), -&self.bound, kind)
    }

    pub fn closure(&self) -> Self {
        Constraint::new(self.normal.clone(), self.bound.clone(), Relation::Le)
    }

    pub fn is_trivial(&self) -> bool {
        self.normal.is_zero()
    }

    /// Scales by a positive factor so that the first nonzero normal entry has
    /// absolute value one.
    pub fn normalized(&self) -> Self {
        match self.normal.iter().find(|x| !x.is_zero()) {
            None => self.clone(),
            Some(lead) => {
                let s = lead.abs().recip().expect("nonzero lead");
                Constraint::new(self.normal.scale(&s), &self.bound * &s, self.kind)
            }
        }
    }

    /// Largest entry size after scaling the row `(a, b)` to a primitive
    /// integer vector.
    pub fn integer_row_size(&self) -> u64 {
        let entries: Vec<&Rational> = self.normal.iter().chain(std::iter::once(&self.bound)).collect();
        let lcm = entries.iter().fold(BigInt::one(), |acc, x| acc.lcm(&x.denom()));
        let ints: Vec<BigInt> = entries.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if g.is_zero() {
            return 1;
        }
        ints.iter().map(|x| (x / &g).abs().bits().max(1)).max().unwrap_or(1)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.normal, self.kind, self.bound)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Intersection of finitely many half-spaces in Q^dim.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polyhedron {
    dim: usize,
    constraints: Vec<Constraint>,
}

impl Polyhedron {
    pub fn new(dim: usize, constraints: Vec<Constraint>) -> Result<Self, GeoError> {
        for c in &constraints {
            if c.normal.dim() != dim {
                return Err(GeoError::DimensionMismatch { expected: dim, found: c.normal.dim() });
            }
        }
        Ok(Polyhedron { dim, constraints })
    }

    /// Skips the dimension check. Solvers still validate their input.
    pub fn from_rows_unchecked(dim: usize, constraints: Vec<Constraint>) -> Self {
        Polyhedron { dim, constraints }
    }

    /// The whole space.
    pub fn universe(dim: usize) -> Self {
        Polyhedron { dim, constraints: Vec::new() }
    }

    /// A canonical empty set: the single row `0 <= -1`.
    pub fn empty(dim: usize) -> Self {
        Polyhedron { dim, constraints: vec![Constraint::le(RatVector::zeros(dim), -Rational::one())] }
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self::closed_box(&RatVector::zeros(dim), &RatVector::new(vec![Rational::one(); dim]))
    }

    pub fn closed_box(lo: &RatVector, hi: &RatVector) -> Self {
        let d = lo.dim();
        let mut cs = Vec::with_capacity(2 * d);
        for k in 0..d {
            cs.push(Constraint::lower(d, k, lo[k].clone(), Relation::Le));
            cs.push(Constraint::upper(d, k, hi[k].clone(), Relation::Le));
        }
        Polyhedron { dim: d, constraints: cs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn into_constraints(self) -> Vec<Constraint> {
        self.constraints
    }

    pub fn push(&mut self, c: Constraint) -> Result<(), GeoError> {
        if c.normal.dim() != self.dim {
            return Err(GeoError::DimensionMismatch { expected: self.dim, found: c.normal.dim() });
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn with(&self, c: Constraint) -> Result<Self, GeoError> {
        let mut p = self.clone();
        p.push(c)?;
        Ok(p)
    }

    pub fn contains(&self, x: &RatVector) -> bool {
        x.dim() == self.dim && self.constraints.iter().all(|c| c.satisfied_by(x))
    }

    pub fn is_closed(&self) -> bool {
        self.constraints.iter().all(|c| c.kind == Relation::Le)
    }

    pub fn closure(&self) -> Self {
        Polyhedron { dim: self.dim, constraints: self.constraints.iter().map(Constraint::closure).collect() }
    }

    /// Same rows, all strict. Nonempty iff the polyhedron has nonempty
    /// interior.
    pub fn interior(&self) -> Self {
        Polyhedron {
            dim: self.dim,
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint::new(c.normal.clone(), c.bound.clone(), Relation::Lt))
                .collect(),
        }
    }

    pub fn intersect(&self, other: &Polyhedron) -> Result<Self, GeoError> {
        if self.dim != other.dim {
            return Err(GeoError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut cs = self.constraints.clone();
        cs.extend(other.constraints.iter().cloned());
        Ok(Polyhedron { dim: self.dim, constraints: cs })
    }

    pub fn size(&self) -> u64 {
        self.constraints
            .iter()
            .map(|c| c.normal.size().max(c.bound.size()))
            .max()
            .unwrap_or(1)
    }

    /// `{x : h(x) in self}`.
    pub fn pullback(&self, h: &HomogeneousMatrix) -> Result<Self, GeoError> {
        if h.dim() != self.dim {
            return Err(GeoError::DimensionMismatch { expected: self.dim, found: h.dim() });
        }
        let lin = h.linear_part();
        let off = h.offset_part();
        let mut cs = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let normal = lin.left_mul_vec(&c.normal)?;
            let bound = &c.bound - &c.normal.dot(&off);
            cs.push(Constraint::new(normal, bound, c.kind));
        }
        Ok(Polyhedron { dim: self.dim, constraints: cs })
    }

    /// `{h(x) : x in self}`, exact. Invertible maps are handled by pulling
    /// back through the inverse; singular ones by solving for the pivot
    /// variables and eliminating the free ones with Fourier-Motzkin.
    pub fn image(&self, h: &HomogeneousMatrix) -> Result<Self, GeoError> {
        if h.dim() != self.dim {
            return Err(GeoError::DimensionMismatch { expected: self.dim, found: h.dim() });
        }
        let d = self.dim;
        let lin = h.linear_part();
        let off = h.offset_part();
        if let Some(inv) = lin.inverse() {
            let inv_h = HomogeneousMatrix::from_affine(&inv, &inv.mul_vec(&off)?.neg())?;
            return self.pullback(&inv_h);
        }
        // Gauss-Jordan on M while tracking E with E M = R (reduced echelon).
        let mut r: Vec<Vec<Rational>> = (0..d).map(|i| lin.row_slice(i).to_vec()).collect();
        let mut e: Vec<Vec<Rational>> = (0..d).map(|i| RatVector::unit(d, i).into_entries()).collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..d {
            let Some(pr) = (row..d).find(|&i| !r[i][col].is_zero()) else {
                continue;
            };
            r.swap(row, pr);
            e.swap(row, pr);
            let inv = r[row][col].recip()?;
            for x in r[row].iter_mut().chain(e[row].iter_mut()) {
                *x = &*x * &inv;
            }
            for i in 0..d {
                if i != row && !r[i][col].is_zero() {
                    let f = r[i][col].clone();
                    for j in 0..d {
                        let v = &r[i][j] - &(&f * &r[row][j]);
                        r[i][j] = v;
                        let w = &e[i][j] - &(&f * &e[row][j]);
                        e[i][j] = w;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        let rank = pivots.len();
        let free: Vec<usize> = (0..d).filter(|c| !pivots.contains(c)).collect();
        // variables: y_0..y_{d-1}, then one per free x
        let nv = d + free.len();
        let mut rows: Vec<Constraint> = Vec::new();
        let e_c: Vec<Rational> = (0..d).map(|i| RatVector::new(e[i].clone()).dot(&off)).collect();
        for c in &self.constraints {
            let mut coef = vec![Rational::zero(); nv];
            let mut bound = c.bound.clone();
            for (i, &p) in pivots.iter().enumerate() {
                let ap = &c.normal[p];
                if ap.is_zero() {
                    continue;
                }
                for j in 0..d {
                    coef[j] += &(ap * &e[i][j]);
                }
                bound += &(ap * &e_c[i]);
                for (k, &f) in free.iter().enumerate() {
                    coef[d + k] -= &(ap * &r[i][f]);
                }
            }
            for (k, &f) in free.iter().enumerate() {
                coef[d + k] += &c.normal[f];
            }
            rows.push(Constraint::new(RatVector::new(coef), bound, c.kind));
        }
        for k in (0..free.len()).rev() {
            match fourier_motzkin(rows, d + k) {
                Some(next) => rows = next,
                None => return Ok(Polyhedron::empty(d)),
            }
        }
        let mut out: Vec<Constraint> = rows
            .into_iter()
            .map(|c| {
                let n: RatVector = c.normal.entries()[..d].iter().cloned().collect();
                Constraint::new(n, c.bound, c.kind)
            })
            .collect();
        // zero rows of R: E_i (y - c) = 0
        for i in rank..d {
            let n = RatVector::new(e[i].clone());
            out.push(Constraint::le(n.clone(), e_c[i].clone()));
            out.push(Constraint::le(n.neg(), -&e_c[i]));
        }
        Ok(Polyhedron { dim: d, constraints: out })
    }

    /// Componentwise bounds of the closure, or `None` when empty or
    /// unbounded.
    pub fn bounding_box(&self) -> Option<(RatVector, RatVector)> {
        let cl = self.closure();
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let ek = RatVector::unit(self.dim, k);
            match lp_optimize(&cl, &ek, Sense::Min).ok()? {
                Optimum::Bounded { value, .. } => lo.push(value),
                _ => return None,
            }
            match lp_optimize(&cl, &ek, Sense::Max).ok()? {
                Optimum::Bounded { value, .. } => hi.push(value),
                _ => return None,
            }
        }
        Some((RatVector::new(lo), RatVector::new(hi)))
    }

    /// A representation that depends only on the point set, intended as a
    /// memo key. Returns `None` for the empty set.
    ///
    /// Implicit equalities are found by LP and put in reduced echelon form,
    /// the remaining rows are reduced modulo them, scaled, deduplicated and
    /// stripped of redundant rows, then sorted.
    pub fn canonical(&self) -> Option<Polyhedron> {
        if !is_feasible(self) {
            return None;
        }
        let d = self.dim;
        let rows: Vec<Constraint> = self.constraints.iter().filter(|c| !c.is_trivial()).cloned().collect();
        let mut eqs: Vec<Vec<Rational>> = Vec::new();
        let mut ineqs: Vec<Constraint> = Vec::new();
        for c in &rows {
            let tight = c.kind == Relation::Le && {
                let probe = Polyhedron {
                    dim: d,
                    constraints: rows
                        .iter()
                        .cloned()
                        .chain(std::iter::once(Constraint::lt(c.normal.clone(), c.bound.clone())))
                        .collect(),
                };
                !is_feasible(&probe)
            };
            if tight {
                let mut v = c.normal.entries().to_vec();
                v.push(c.bound.clone());
                eqs.push(v);
            } else {
                ineqs.push(c.clone());
            }
        }
        let (eqs, eq_pivots) = rref(eqs, d);
        let mut by_normal: BTreeMap<RatVector, (Rational, Relation)> = BTreeMap::new();
        for c in ineqs {
            let mut n = c.normal.into_entries();
            let mut b = c.bound;
            for (row, &p) in eqs.iter().zip(&eq_pivots) {
                let f = n[p].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..d {
                    n[j] -= &(&f * &row[j]);
                }
                b -= &(&f * &row[d]);
            }
            let c = Constraint::new(RatVector::new(n), b, c.kind).normalized();
            if c.is_trivial() {
                continue;
            }
            by_normal
                .entry(c.normal)
                .and_modify(|(ob, ok)| {
                    if c.bound < *ob || (c.bound == *ob && c.kind == Relation::Lt) {
                        *ob = c.bound.clone();
                        *ok = c.kind;
                    }
                })
                .or_insert((c.bound, c.kind));
        }
        let eq_rows: Vec<Constraint> = eqs
            .iter()
            .flat_map(|row| {
                let n = RatVector::new(row[..d].to_vec());
                let b = row[d].clone();
                [Constraint::le(n.clone(), b.clone()), Constraint::le(n.neg(), -b).normalized()]
            })
            .collect();
        let mut kept: Vec<Constraint> =
            by_normal.into_iter().map(|(n, (b, k))| Constraint::new(n, b, k)).collect();
        let mut i = 0;
        while i < kept.len() {
            let probe = Polyhedron {
                dim: d,
                constraints: eq_rows
                    .iter()
                    .cloned()
                    .chain(kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c.clone()))
                    .chain(std::iter::once(kept[i].negated()))
                    .collect(),
            };
            if is_feasible(&probe) {
                i += 1;
            } else {
                kept.remove(i);
            }
        }
        let mut all = eq_rows;
        all.extend(kept);
        all.sort();
        Some(Polyhedron { dim: d, constraints: all })
    }
}

/// Reduced row echelon form of augmented rows `[a | b]` over the first `d`
/// columns. Returns the nonzero rows and their pivot columns.
fn rref(mut rows: Vec<Vec<Rational>>, d: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..d {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][col].recip().expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x = &*x - &(&f * p);
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Eliminates variable `v`. Returns `None` if a contradictory constant row
/// appears.
fn fourier_motzkin(rows: Vec<Constraint>, v: usize) -> Option<Vec<Constraint>> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for c in rows {
        let a = c.normal[v].clone();
        if a.is_positive() {
            pos.push(c.scaled(&a.recip().expect("nonzero")));
        } else if a.is_negative() {
            neg.push(c.scaled(&(-a).recip().expect("nonzero")));
        } else {
            out.push(c);
        }
    }
    for p in &pos {
        for n in &neg {
            let normal = p.normal.add(&n.normal);
            let kind = if p.kind == Relation::Lt || n.kind == Relation::Lt { Relation::Lt } else { Relation::Le };
            out.push(Constraint::new(normal, &p.bound + &n.bound, kind));
        }
    }
    let mut dedup: BTreeMap<RatVector, (Rational, Relation)> = BTreeMap::new();
    for c in out {
        let c = c.normalized();
        if c.is_trivial() {
            let ok = match c.kind {
                Relation::Le => !c.bound.is_negative(),
                Relation::Lt => c.bound.is_positive(),
            };
            if !ok {
                return None;
            }
            continue;
        }
        dedup
            .entry(c.normal)
            .and_modify(|(ob, ok)| {
                if c.bound < *ob || (c.bound == *ob && c.kind == Relation::Lt) {
                    *ob = c.bound.clone();
                    *ok = c.kind;
                }
            })
            .or_insert((c.bound, c.kind));
    }
    Some(dedup.into_iter().map(|(n, (b, k))| Constraint::new(n, b, k)).collect())
}

impl Constraint {
    fn scaled(&self, s: &Rational) -> Constraint {
        Constraint::new(self.normal.scale(s), &self.bound * s, self.kind)
    }
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polyhedron[d={}]{self}", self.dim)
    }
}
