//! Independent oracles shared by the integration tests: Fourier-Motzkin
//! feasibility, brute-force signature enumeration, full-lattice simulation
//! of rounded dynamics and a generator of random continuous total PAFs.
#![allow(dead_code)]

use std::collections::HashSet;

use pafreach::paf::{AffineMap, DomainKind, Paf, Piece};
use pafreach::ratgeo::{Constraint, Polyhedron, RatMatrix, RatVector, Rational, Relation};
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn v(xs: &[Rational]) -> RatVector {
    RatVector::new(xs.to_vec())
}

/// A row `a.x <= b` or `a.x < b`.
#[derive(Clone, Debug)]
pub struct Row {
    pub a: Vec<Rational>,
    pub b: Rational,
    pub strict: bool,
}

pub fn rows_of(p: &Polyhedron) -> Vec<Row> {
    p.constraints()
        .iter()
        .map(|c| Row { a: c.normal.entries().to_vec(), b: c.bound.clone(), strict: c.kind == Relation::Lt })
        .collect()
}

/// Exact feasibility by Fourier-Motzkin elimination of every variable.
pub fn fm_feasible(rows: &[Row], dim: usize) -> bool {
    let mut rows: Vec<Row> = rows.to_vec();
    for k in (0..dim).rev() {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.a[k].signum() {
                1 => pos.push(r),
                -1 => neg.push(r),
                _ => rest.push(r),
            }
        }
        for p in &pos {
            for n in &neg {
                // scale so the k-th coefficients cancel
                let (sp, sn) = (-&n.a[k], p.a[k].clone());
                let a: Vec<Rational> = (0..dim).map(|j| &p.a[j] * &sp + &n.a[j] * &sn).collect();
                rest.push(Row { a, b: &p.b * &sp + &n.b * &sn, strict: p.strict || n.strict });
            }
        }
        rows = dedup(rest);
    }
    rows.iter().all(|r| if r.strict { r.b.is_positive() } else { !r.b.is_negative() })
}

/// Drops duplicate rows after scaling by the first nonzero coefficient, to
/// keep the elimination small.
fn dedup(rows: Vec<Row>) -> Vec<Row> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in rows {
        let lead = r.a.iter().find(|x| !x.is_zero()).map(Rational::abs);
        let key = match &lead {
            Some(l) => {
                let a: Vec<Rational> = r.a.iter().map(|x| x / l).collect();
                (a, &r.b / l, r.strict)
            }
            None => (r.a.clone(), r.b.clone(), r.strict),
        };
        if seen.insert(key) {
            out.push(r);
        }
    }
    out
}

pub fn poly_feasible(p: &Polyhedron) -> bool {
    fm_feasible(&rows_of(p), p.dim())
}

pub fn cube_rows(dim: usize) -> Vec<Row> {
    let mut out = Vec::new();
    for k in 0..dim {
        let mut a = vec![Rational::zero(); dim];
        a[k] = Rational::one();
        out.push(Row { a: a.clone(), b: Rational::one(), strict: false });
        a[k] = -Rational::one();
        out.push(Row { a, b: Rational::zero(), strict: false });
    }
    out
}

/// A plain affine map `x -> m x + c` kept as nested vectors.
#[derive(Clone, Debug)]
pub struct Affine {
    pub m: Vec<Vec<Rational>>,
    pub c: Vec<Rational>,
}

impl Affine {
    pub fn identity(d: usize) -> Self {
        let m = (0..d).map(|i| (0..d).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
        Affine { m, c: vec![Rational::zero(); d] }
    }

    pub fn of(map: &AffineMap) -> Self {
        let d = map.dim();
        Affine { m: (0..d).map(|i| map.matrix().row_slice(i).to_vec()).collect(), c: map.offset().entries().to_vec() }
    }

    /// `outer o self`
    pub fn then(&self, outer: &Affine) -> Affine {
        let d = self.c.len();
        let m = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| &outer.m[i][k] * &self.m[k][j]).sum()).collect())
            .collect();
        let c = (0..d).map(|i| (0..d).map(|k| &outer.m[i][k] * &self.c[k]).sum::<Rational>() + &outer.c[i]).collect();
        Affine { m, c }
    }

    /// Rows of `{x : self(x) in p}`.
    pub fn pull(&self, p: &Polyhedron) -> Vec<Row> {
        let d = self.c.len();
        rows_of(p)
            .into_iter()
            .map(|r| {
                let a = (0..d).map(|j| (0..d).map(|i| &r.a[i] * &self.m[i][j]).sum()).collect();
                let shift: Rational = (0..d).map(|i| &r.a[i] * &self.c[i]).sum();
                Row { a, b: &r.b - &shift, strict: r.strict }
            })
            .collect()
    }

    pub fn apply(&self, x: &RatVector) -> RatVector {
        let d = self.c.len();
        (0..d).map(|i| (0..d).map(|j| &self.m[i][j] * &x[j]).sum::<Rational>() + &self.c[i]).collect()
    }
}

/// Least `t <= horizon` such that some signature of length `t` admits a
/// start point in `init` (and the cube) whose trajectory meets `target`,
/// by plain enumeration of all `p^t` signatures.
pub fn brute_reach(f: &Paf, init: &Polyhedron, target: &Polyhedron, horizon: usize) -> Option<usize> {
    let d = f.dim();
    let base: Vec<Row> = rows_of(init).into_iter().chain(cube_rows(d)).collect();
    let p = f.len();
    for t in 0..=horizon {
        let total = p.pow(t as u32);
        for code in 0..total {
            let mut sig = Vec::with_capacity(t);
            let mut c = code;
            for _ in 0..t {
                sig.push(c % p);
                c /= p;
            }
            let mut rows = base.clone();
            let mut acc = Affine::identity(d);
            for &s in &sig {
                rows.extend(acc.pull(&f.piece(s).region));
                acc = acc.then(&Affine::of(&f.piece(s).map));
            }
            rows.extend(acc.pull(target));
            if fm_feasible(&rows, d) {
                return Some(t);
            }
        }
    }
    None
}

/// True when some start point avoids `target` at every step `0..=horizon`.
/// Depth-first over signatures and the violated target row at each step.
pub fn brute_control_refuted(f: &Paf, init: &Polyhedron, target: &Polyhedron, horizon: usize) -> bool {
    let d = f.dim();
    let base: Vec<Row> = rows_of(init).into_iter().chain(cube_rows(d)).collect();
    let negs: Vec<Polyhedron> = target
        .constraints()
        .iter()
        .map(|c| Polyhedron::new(d, vec![c.negated()]).unwrap())
        .collect();
    fn go(
        f: &Paf,
        negs: &[Polyhedron],
        rows: Vec<Row>,
        acc: Affine,
        step: usize,
        horizon: usize,
        d: usize,
    ) -> bool {
        for n in negs {
            let mut r = rows.clone();
            r.extend(acc.pull(n));
            if !fm_feasible(&r, d) {
                continue;
            }
            if step == horizon {
                return true;
            }
            for piece in f.pieces() {
                let mut r2 = r.clone();
                r2.extend(acc.pull(&piece.region));
                if fm_feasible(&r2, d) && go(f, negs, r2, acc.then(&Affine::of(&piece.map)), step + 1, horizon, d) {
                    return true;
                }
            }
        }
        false
    }
    go(f, &negs, base, Affine::identity(d), 0, horizon, d)
}

/// Rounds every coordinate down to a multiple of `2^-n`.
pub fn floor_grid(x: &RatVector, n: u32) -> RatVector {
    let big = Rational::pow_int(2, n);
    x.iter().map(|y| Rational::from_bigint((y * &big).floor()) / &big).collect()
}

/// Steps until the rounded corner chain from `x` meets `target`, or `None`
/// once it repeats a state.
pub fn corner_distance(f: &Paf, target: &Polyhedron, x: &RatVector, n: u32) -> Option<usize> {
    let mut seen = HashSet::new();
    let mut cur = x.clone();
    let mut k = 0;
    loop {
        if target.contains(&cur) {
            return Some(k);
        }
        if !seen.insert(cur.clone()) {
            return None;
        }
        cur = floor_grid(&f.evaluate(&cur).expect("total PAF"), n);
        k += 1;
    }
}

/// Rows of the half-open grid cell `alpha` (index `2^n` holds the value 1).
pub fn cell_rows(alpha: &[u64], n: u32) -> Polyhedron {
    let eps = Rational::pow2_neg(n);
    let d = alpha.len();
    let mut cs = Vec::new();
    for (k, &a) in alpha.iter().enumerate() {
        let lo = Rational::from(a) * &eps;
        cs.push(Constraint::lower(d, k, lo.clone(), Relation::Le));
        cs.push(Constraint::upper(d, k, lo + &eps, Relation::Lt));
    }
    Polyhedron::new(d, cs).unwrap()
}

pub fn all_cells(d: usize, n: u32) -> Vec<Vec<u64>> {
    let side = (1u64 << n) + 1;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let a = code % side;
                    code /= side;
                    a
                })
                .collect()
        })
        .collect()
}

/// Cells met by `f(start)`, by testing every cell against every piece.
pub fn image_cells(f: &Paf, start: &[Row], n: u32) -> Vec<Vec<u64>> {
    let d = f.dim();
    all_cells(d, n)
        .into_iter()
        .filter(|alpha| {
            let cell = cell_rows(alpha, n);
            f.pieces().iter().any(|p| {
                let a = Affine::of(&p.map);
                let mut rows = start.to_vec();
                rows.extend(rows_of(&p.region));
                rows.extend(a.pull(&cell));
                fm_feasible(&rows, d)
            })
        })
        .collect()
}

fn corner(alpha: &[u64], n: u32) -> RatVector {
    alpha.iter().map(|&a| Rational::from(a) * Rational::pow2_neg(n)).collect()
}

/// Least reach time of the rounded system, by simulating every relevant
/// lattice corner.
pub fn brute_precision_reach(f: &Paf, init: &Polyhedron, target: &Polyhedron, n: u32) -> Option<usize> {
    let d = f.dim();
    let start: Vec<Row> = rows_of(init).into_iter().chain(cube_rows(d)).collect();
    let mut zero = start.clone();
    zero.extend(rows_of(target));
    if fm_feasible(&zero, d) {
        return Some(0);
    }
    image_cells(f, &start, n)
        .iter()
        .filter_map(|alpha| corner_distance(f, target, &corner(alpha, n), n).map(|k| k + 1))
        .min()
}

/// Whether every start point's rounded trajectory meets the target.
pub fn brute_precision_controlled(f: &Paf, init: &Polyhedron, target: &Polyhedron, n: u32) -> bool {
    let d = f.dim();
    let start: Vec<Row> = rows_of(init).into_iter().chain(cube_rows(d)).collect();
    target.constraints().iter().all(|c| {
        let mut s = start.clone();
        s.extend(rows_of(&Polyhedron::new(d, vec![c.negated()]).unwrap()));
        image_cells(f, &s, n).iter().all(|alpha| corner_distance(f, target, &corner(alpha, n), n).is_some())
    })
}

fn affine_from(m: Vec<Vec<Rational>>, c: Vec<Rational>) -> AffineMap {
    AffineMap::new(RatMatrix::from_rows(m).unwrap(), RatVector::new(c)).unwrap()
}

fn grid_value<R: Rng>(rng: &mut R, den: i64) -> Rational {
    q(rng.gen_range(0..=den), den)
}

fn point<R: Rng>(rng: &mut R, d: usize, den: i64) -> Vec<Rational> {
    (0..d).map(|_| grid_value(rng, den)).collect()
}

/// Affine map on a triangle through three vertices `p_i -> v_i`.
fn through(p: [&[Rational]; 3], val: [&[Rational]; 3]) -> AffineMap {
    // solve for columns: v1 - v0 = M (p1 - p0), v2 - v0 = M (p2 - p0)
    let (dx1, dy1) = (&p[1][0] - &p[0][0], &p[1][1] - &p[0][1]);
    let (dx2, dy2) = (&p[2][0] - &p[0][0], &p[2][1] - &p[0][1]);
    let det = &dx1 * &dy2 - &dx2 * &dy1;
    let mut m = vec![vec![Rational::zero(); 2]; 2];
    let mut c = vec![Rational::zero(); 2];
    for k in 0..2 {
        let (e1, e2) = (&val[1][k] - &val[0][k], &val[2][k] - &val[0][k]);
        m[k][0] = (&e1 * &dy2 - &e2 * &dy1) / &det;
        m[k][1] = (&dx1 * &e2 - &dx2 * &e1) / &det;
        c[k] = &val[0][k] - &(&m[k][0] * &p[0][0]) - &m[k][1] * &p[0][1];
    }
    affine_from(m, c)
}

fn triangles(
    x0: &Rational,
    x1: &Rational,
    vals: [&[Rational]; 4],
    tag: &str,
) -> [Piece; 2] {
    // vals: (x0,0), (x1,0), (x0,1), (x1,1)
    let (o, i) = (Rational::zero(), Rational::one());
    let p00 = [x0.clone(), o.clone()];
    let p10 = [x1.clone(), o.clone()];
    let p01 = [x0.clone(), i.clone()];
    let p11 = [x1.clone(), i.clone()];
    let dx = x1 - x0;
    let cell = Polyhedron::closed_box(&v(&p00), &v(&p11));
    // below the diagonal: y dx - (x - x0) <= 0
    let diag = Constraint::le(v(&[-Rational::one(), dx.clone()]), -x0.clone());
    let below = cell.with(diag.clone()).unwrap();
    let above = cell.with(Constraint::le(diag.normal.neg(), -&diag.bound)).unwrap();
    [
        Piece::new(format!("{tag}lo"), below, through([&p00, &p10, &p11], [vals[0], vals[1], vals[3]])),
        Piece::new(format!("{tag}hi"), above, through([&p00, &p01, &p11], [vals[0], vals[2], vals[3]])),
    ]
}

/// A random continuous total PAF on `[0,1]^d` (`d` in 1..=2) with at most
/// `max_pieces` pieces and vertex values on the `1/den` grid.
pub fn random_total_paf<R: Rng>(rng: &mut R, d: usize, max_pieces: usize, den: i64) -> Paf {
    let k = rng.gen_range(1..=max_pieces.max(1));
    if d == 1 {
        let mut cuts: Vec<i64> = (1..8).collect();
        while cuts.len() > k - 1 {
            let i = rng.gen_range(0..cuts.len());
            cuts.remove(i);
        }
        let xs: Vec<Rational> = std::iter::once(Rational::zero())
            .chain(cuts.into_iter().map(|c| q(c, 8)))
            .chain(std::iter::once(Rational::one()))
            .collect();
        let vals: Vec<Rational> = (0..xs.len()).map(|_| grid_value(rng, den)).collect();
        let pieces = (0..k)
            .map(|j| {
                let slope = (&vals[j + 1] - &vals[j]) / (&xs[j + 1] - &xs[j]);
                let off = &vals[j] - &(&slope * &xs[j]);
                Piece::new(
                    format!("p{j}"),
                    Polyhedron::closed_box(&v(&[xs[j].clone()]), &v(&[xs[j + 1].clone()])),
                    affine_from(vec![vec![slope]], vec![off]),
                )
            })
            .collect();
        return Paf::new(1, pieces, DomainKind::Total).unwrap();
    }
    assert_eq!(d, 2, "dimension 1 or 2");
    let (o, i) = (Rational::zero(), Rational::one());
    match k {
        1 => loop {
            let v00 = point(rng, 2, den);
            let v10 = point(rng, 2, den);
            let v01 = point(rng, 2, den);
            let v11: Vec<Rational> = (0..2).map(|j| &v10[j] + &v01[j] - &v00[j]).collect();
            if v11.iter().all(|x| !x.is_negative() && *x <= i) {
                let p = Piece::new(
                    "all",
                    Polyhedron::unit_cube(2),
                    through([&[o.clone(), o.clone()], &[i.clone(), o.clone()], &[o.clone(), i.clone()]], [&v00, &v10, &v01]),
                );
                return Paf::new(2, vec![p], DomainKind::Total).unwrap();
            }
        },
        2 => {
            let vs: Vec<Vec<Rational>> = (0..4).map(|_| point(rng, 2, den)).collect();
            let pieces = triangles(&o, &i, [&vs[0], &vs[1], &vs[2], &vs[3]], "t").to_vec();
            Paf::new(2, pieces, DomainKind::Total).unwrap()
        }
        _ => {
            let c = q(rng.gen_range(1..4), 4);
            // vertices on x = 0, c, 1 at y = 0 and y = 1
            let mut vs: Vec<Vec<Rational>> = (0..6).map(|_| point(rng, 2, den)).collect();
            let mut pieces = Vec::new();
            if k == 3 {
                // left cell affine: its fourth vertex is forced
                loop {
                    let forced: Vec<Rational> = (0..2).map(|j| &vs[2][j] + &vs[1][j] - &vs[0][j]).collect();
                    if forced.iter().all(|x| !x.is_negative() && *x <= i) {
                        vs[3] = forced;
                        break;
                    }
                    vs[0] = point(rng, 2, den);
                    vs[1] = point(rng, 2, den);
                    vs[2] = point(rng, 2, den);
                }
                // vs: 0 (0,0), 1 (c,0), 2 (0,1), 3 (c,1)
                pieces.push(Piece::new(
                    "left",
                    Polyhedron::closed_box(&v(&[o.clone(), o.clone()]), &v(&[c.clone(), i.clone()])),
                    through([&[o.clone(), o.clone()], &[c.clone(), o.clone()], &[o.clone(), i.clone()]], [&vs[0], &vs[1], &vs[2]]),
                ));
            } else {
                pieces.extend(triangles(&o, &c, [&vs[0], &vs[1], &vs[2], &vs[3]], "l"));
            }
            pieces.extend(triangles(&c, &i, [&vs[1], &vs[4], &vs[3], &vs[5]], "r"));
            Paf::new(2, pieces, DomainKind::Total).unwrap()
        }
    }
}

/// A random closed box with corners on the `1/den` grid.
pub fn random_box<R: Rng>(rng: &mut R, d: usize, den: i64) -> Polyhedron {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for _ in 0..d {
        let a = rng.gen_range(0..den);
        let b = rng.gen_range(a + 1..=den);
        lo.push(q(a, den));
        hi.push(q(b, den));
    }
    Polyhedron::closed_box(&v(&lo), &v(&hi))
}
