//! SUBSET-SUM gadgets in dimension 2.
//!
//! A configuration `(i, sigma, eps_i..eps_n)` is encoded as the point
//! `(i 2^-p + sigma 2^-q, beta^-(n+1) + sum_j eps_j* beta^-j)`; the first
//! coordinate carries the position and the running sum, the second the
//! remaining choice bits in base 5 with digits `0* = 1` and `1* = 4`.

use crate::bounded::BoundedProblem;
use crate::paf::{AffineMap, DomainKind, FlowRule, Paf, Piece};
use crate::ratgeo::{Constraint, Polyhedron, RatMatrix, RatVector, Rational};

use super::ReductionError;

pub const BETA: i64 = 5;
/// Digit encoding a zero choice bit.
pub const ZERO_STAR: i64 = 1;
/// Digit encoding a one choice bit.
pub const ONE_STAR: i64 = 4;
pub const DEFAULT_BRUTEFORCE_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetSumInstance {
    pub b: u64,
    pub a: Vec<u64>,
}

impl SubsetSumInstance {
    /// Rejects weights above the target, which can never be chosen.
    pub fn new(b: u64, a: Vec<u64>) -> Result<Self, ReductionError> {
        if let Some((i, &ai)) = a.iter().enumerate().find(|(_, &ai)| ai > b) {
            return Err(ReductionError::InvalidInstance(format!("A_{} = {ai} exceeds B = {b}", i + 1)));
        }
        Ok(SubsetSumInstance { b, a })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// `(i, sigma, eps_i..eps_n)` with `1 <= i <= n+1` and `0 <= sigma <= B+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub i: usize,
    pub sigma: u64,
    pub eps: Vec<bool>,
}

impl Configuration {
    pub fn new(inst: &SubsetSumInstance, i: usize, sigma: u64, eps: Vec<bool>) -> Result<Self, ReductionError> {
        let n = inst.n();
        if i == 0 || i > n + 1 || sigma > inst.b + 1 || eps.len() != n + 1 - i {
            return Err(ReductionError::InvalidInstance(format!(
                "configuration ({i}, {sigma}, {} bits) out of range for n = {n}",
                eps.len()
            )));
        }
        Ok(Configuration { i, sigma, eps })
    }

    /// The start configuration for the choice vector `eps_1..eps_n`.
    pub fn start(eps: Vec<bool>) -> Self {
        Configuration { i: 1, sigma: 0, eps }
    }
}

/// One step of the sequential subset-sum machine; fixed once `i = n+1`.
pub fn subset_transition(inst: &SubsetSumInstance, c: &Configuration) -> Configuration {
    if c.i > inst.n() {
        return c.clone();
    }
    let add = if c.eps[0] { inst.a[c.i - 1] } else { 0 };
    Configuration { i: c.i + 1, sigma: (c.sigma + add).min(inst.b + 1), eps: c.eps[1..].to_vec() }
}

/// Derived encoding parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GadgetParams {
    pub n: usize,
    pub b: u64,
    pub p: u32,
    pub omega: u32,
    pub q: u32,
}

fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

impl GadgetParams {
    pub fn of(inst: &SubsetSumInstance) -> Self {
        let p = ceil_log2(inst.n() as u64 + 2);
        let omega = ceil_log2(inst.b + 2);
        GadgetParams { n: inst.n(), b: inst.b, p, omega, q: p + omega + 1 }
    }

    /// `2^-p`
    pub fn col(&self) -> Rational {
        Rational::pow2_neg(self.p)
    }

    /// `2^-(p+1)`, the width of every column.
    pub fn half_col(&self) -> Rational {
        Rational::pow2_neg(self.p + 1)
    }

    /// `2^-q`
    pub fn unit(&self) -> Rational {
        Rational::pow2_neg(self.q)
    }

    /// `beta^-k`
    pub fn beta_neg(&self, k: usize) -> Rational {
        Rational::one() / Rational::pow_int(BETA, k as u32)
    }

    /// Left edge `i 2^-p` of column `i`.
    pub fn col_left(&self, i: usize) -> Rational {
        Rational::from(i) * self.col()
    }
}

pub fn encode_config(inst: &SubsetSumInstance, c: &Configuration) -> RatVector {
    let g = GadgetParams::of(inst);
    let a = g.col_left(c.i) + Rational::from(c.sigma) * g.unit();
    let mut b = g.beta_neg(g.n + 1);
    for (k, &e) in c.eps.iter().enumerate() {
        let digit = if e { ONE_STAR } else { ZERO_STAR };
        b += Rational::from_int(digit) * g.beta_neg(c.i + k);
    }
    RatVector::new(vec![a, b])
}

/// First subset (1-based indices, in mask order) summing to `B`, if any.
pub fn subset_sum_bruteforce(inst: &SubsetSumInstance, limit: usize) -> Result<Option<Vec<usize>>, ReductionError> {
    let n = inst.n();
    if n > limit || n >= 64 {
        return Err(ReductionError::BruteForceBudget { n, limit });
    }
    for mask in 0u64..(1u64 << n) {
        let sum: u64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| inst.a[k]).sum();
        if sum == inst.b {
            return Ok(Some((0..n).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    Reach,
    Control,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedRegion {
    pub name: String,
    pub region: Polyhedron,
}

/// A generated instance together with the regions and flow that document it.
#[derive(Clone, Debug)]
pub struct SubsetSumReduction {
    pub instance: SubsetSumInstance,
    pub kind: GadgetKind,
    pub params: GadgetParams,
    pub paf: Paf,
    pub init: Polyhedron,
    pub target: Polyhedron,
    pub horizon: usize,
    pub regions: Vec<NamedRegion>,
    pub flow: Vec<FlowRule>,
}

impl SubsetSumReduction {
    pub fn problem(&self) -> BoundedProblem {
        BoundedProblem {
            paf: self.paf.clone(),
            init: self.init.clone(),
            target: self.target.clone(),
            horizon: self.horizon,
        }
    }

    pub fn region(&self, name: &str) -> Option<&Polyhedron> {
        self.regions.iter().find(|r| r.name == name).map(|r| &r.region)
    }
}

fn rect(a0: Rational, a1: Rational, b0: Rational, b1: Rational) -> Polyhedron {
    Polyhedron::closed_box(&RatVector::new(vec![a0, b0]), &RatVector::new(vec![a1, b1]))
}

/// `ca a + cb b <= rhs`
fn half(ca: Rational, cb: Rational, rhs: Rational) -> Constraint {
    Constraint::le(RatVector::new(vec![ca, cb]), rhs)
}

/// `(a, b) -> (m00 a + m01 b + c0, m10 a + m11 b + c1)`
fn map2(m: [[Rational; 2]; 2], c: [Rational; 2]) -> AffineMap {
    let [r0, r1] = m;
    let [c0, c1] = c;
    AffineMap::new(
        RatMatrix::from_rows(vec![r0.to_vec(), r1.to_vec()]).expect("2x2"),
        RatVector::new(vec![c0, c1]),
    )
    .expect("2x2 map")
}

fn z() -> Rational {
    Rational::zero()
}

fn o() -> Rational {
    Rational::one()
}

fn with(p: Polyhedron, c: Constraint) -> Polyhedron {
    p.with(c).expect("dimension 2")
}

/// Column `i` as a region: `[i 2^-p, i 2^-p + 2^-(p+1)] x [0, top]`.
fn column(g: &GadgetParams, i: usize, b0: Rational, b1: Rational) -> Polyhedron {
    let l = g.col_left(i);
    rect(l.clone(), l + g.half_col(), b0, b1)
}

/// `R_i`: column `i` up to `beta^-(i-1)`; `R_0` is the full-height strip.
pub fn stage_region(g: &GadgetParams, i: usize) -> Polyhedron {
    if i == 0 {
        rect(z(), g.half_col(), z(), o())
    } else {
        column(g, i, z(), g.beta_neg(i - 1))
    }
}

/// `R_fin`: the slice of `R_{n+1}` holding sums equal to `B` with no
/// choice digits left.
pub fn final_region(g: &GadgetParams) -> Polyhedron {
    let hi = g.col_left(g.n + 1) + Rational::from(g.b) * g.unit();
    let lo = &hi - Rational::pow2_neg(g.q + 1);
    let e = g.beta_neg(g.n + 1);
    rect(lo, hi, e.clone(), Rational::from_int(2) * e)
}

/// `R_i^unsat`: points of column `i` with an unsaturated sum and at least
/// the terminal digit in `b`.
pub fn unsat_region(g: &GadgetParams, i: usize) -> Polyhedron {
    let l = g.col_left(i);
    let e = g.beta_neg(g.n + 1);
    rect(l.clone(), l + Rational::from(g.b) * g.unit(), e.clone(), g.beta_neg(i - 1) - e)
}

/// The seven pieces of column `i` for `1 <= i <= n`.
fn stage_pieces(inst: &SubsetSumInstance, g: &GadgetParams, i: usize) -> Vec<Piece> {
    let u = g.beta_neg(i);
    let bi = Rational::pow_int(BETA, i as u32);
    let k = |m: i64| Rational::from_int(m) * &u;
    let col = g.col();
    let half_col = g.half_col();
    let unit = g.unit();
    let ai = Rational::from(inst.a[i - 1]) * &unit;
    let left = g.col_left(i);
    let right = &left + &half_col;
    let room = Rational::from(inst.b + 1 - inst.a[i - 1]) * &unit;
    let xsat = &left + &room;
    // width of the unsaturated part of the digit-3 band at its base
    let x = &half_col - &room;
    let sat_slope = &half_col - Rational::from(inst.b + 1) * &unit;

    let name = |s: &str| format!("R{i}.{s}");
    let shift = |dy: Rational| map2([[o(), z()], [z(), o()]], [col.clone(), dy]);
    let band = |lo: i64, hi: i64| column(g, i, k(lo), k(hi));
    let lin_cut = half(o(), &x * &bi, &right + Rational::from_int(3) * &x);
    let mut pieces = vec![
        Piece::new(name("0"), band(0, 1), map2([[o(), z()], [z(), z()]], [col.clone(), z()])),
        Piece::new(name("0*"), band(1, 2), shift(-k(1))),
        Piece::new(name("2"), band(2, 3), map2([[o(), z()], [z(), -o()]], [col.clone(), k(3)])),
    ];
    // a + 2^-p + A_i 2^-q (b beta^i - 3)
    pieces.push(Piece::new(
        name("3lin"),
        with(band(3, 4), lin_cut.clone()),
        map2([[o(), &ai * &bi], [z(), z()]], [&col - Rational::from_int(3) * &ai, z()]),
    ));
    // (i + 3/2) 2^-p - (b beta^i - 3)(2^-(p+1) - (B+1) 2^-q)
    pieces.push(Piece::new(
        name("3sat"),
        with(band(3, 4), lin_cut.negated().closure()),
        map2(
            [[z(), -(&sat_slope * &bi)], [z(), z()]],
            [&right + &col + Rational::from_int(3) * &sat_slope, z()],
        ),
    ));
    pieces.push(Piece::new(
        name("1*lin"),
        rect(left.clone(), xsat.clone(), k(4), k(5)),
        map2([[o(), z()], [z(), o()]], [&col + &ai, -k(4)]),
    ));
    pieces.push(Piece::new(
        name("1*sat"),
        rect(xsat, right, k(4), k(5)),
        map2(
            [[z(), z()], [z(), o()]],
            [g.col_left(i + 1) + Rational::from(inst.b + 1) * &unit, -k(4)],
        ),
    ));
    pieces
}

/// Builds the common part of both gadgets: `R_0` and the column pieces.
fn column_pieces(inst: &SubsetSumInstance, g: &GadgetParams) -> (Vec<Piece>, Vec<FlowRule>) {
    let mut pieces = vec![Piece::new(
        "R0",
        stage_region(g, 0),
        map2([[z(), z()], [z(), o()]], [g.col(), z()]),
    )];
    let mut flow = vec![FlowRule { sources: vec![0], target: stage_region(g, 1) }];
    for i in 1..=g.n {
        let first = pieces.len();
        pieces.extend(stage_pieces(inst, g, i));
        flow.push(FlowRule { sources: (first..pieces.len()).collect(), target: stage_region(g, i + 1) });
    }
    (pieces, flow)
}

fn named_regions(inst: &SubsetSumInstance, g: &GadgetParams) -> Vec<NamedRegion> {
    let mut out = Vec::new();
    let mut add = |name: String, region: Polyhedron| out.push(NamedRegion { name, region });
    for i in 0..=g.n + 1 {
        add(format!("R{i}"), stage_region(g, i));
    }
    for i in 1..=g.n {
        let u = g.beta_neg(i);
        for alpha in 0..BETA {
            add(
                format!("R{i}.band{alpha}"),
                column(g, i, Rational::from_int(alpha) * &u, Rational::from_int(alpha + 1) * &u),
            );
        }
    }
    for i in 1..=g.n + 1 {
        add(format!("R{i}.unsat"), unsat_region(g, i));
    }
    add("Rfin".to_string(), final_region(g));
    let _ = inst;
    out
}

/// The bounded-time reachability gadget: `R_0` reaches `R_fin` within
/// `n+1` steps iff the instance has a solution.
pub fn subset_sum_reach_instance(inst: &SubsetSumInstance) -> Result<SubsetSumReduction, ReductionError> {
    let g = GadgetParams::of(inst);
    let (mut pieces, mut flow) = column_pieces(inst, &g);
    let last = pieces.len();
    pieces.push(Piece::new(format!("R{}", g.n + 1), stage_region(&g, g.n + 1), AffineMap::identity(2)));
    flow.push(FlowRule { sources: vec![last], target: stage_region(&g, g.n + 1) });
    Ok(SubsetSumReduction {
        instance: inst.clone(),
        kind: GadgetKind::Reach,
        params: g,
        paf: Paf::new(2, pieces, DomainKind::Partial)?,
        init: stage_region(&g, 0),
        target: final_region(&g),
        horizon: g.n + 1,
        regions: named_regions(inst, &g),
        flow,
    })
}

/// Control target: the bottom of the last column, `b <= beta^-(n+1) / 2`.
pub fn control_target(g: &GadgetParams) -> Polyhedron {
    column(g, g.n + 1, z(), g.beta_neg(g.n + 1) / Rational::from_int(2))
}

/// Pieces of the last column for the control gadget.
///
/// The column is cut along `a` into a frozen slice around `R_fin`, two
/// transition zones of width `w = 2^-(q+2)` and two drift strips. On the
/// drift strips `b` drops by `delta = beta^-(n+1) / 2` per step (clamped at
/// 0); in a zone the drop is scaled by the distance to the slice so the map
/// stays continuous.
fn control_pieces(g: &GadgetParams) -> Vec<Piece> {
    let n1 = g.n + 1;
    let left = g.col_left(n1);
    let right = &left + g.half_col();
    let top = g.beta_neg(g.n);
    let delta = g.beta_neg(n1) / Rational::from_int(2);
    let w = Rational::pow2_neg(g.q + 2);
    let hi = &left + Rational::from(g.b) * g.unit();
    let lo = if g.b == 0 { left.clone() } else { &hi - Rational::pow2_neg(g.q + 1) };
    let slice_hi = if g.b == 0 { &left + &w } else { hi };
    let r = &delta / &w;
    let name = |s: &str| format!("R{n1}.{s}");
    let id = AffineMap::identity(2);
    let floor = map2([[o(), z()], [z(), z()]], [z(), z()]);
    let drop = map2([[o(), z()], [z(), o()]], [z(), -delta.clone()]);

    let mut pieces = Vec::new();
    let drift = |pieces: &mut Vec<Piece>, tag: &str, a0: Rational, a1: Rational| {
        pieces.push(Piece::new(name(&format!("{tag}.hi")), rect(a0.clone(), a1.clone(), delta.clone(), top.clone()), drop.clone()));
        pieces.push(Piece::new(name(&format!("{tag}.lo")), rect(a0, a1, z(), delta.clone()), floor.clone()));
    };
    if g.b > 0 {
        let zone_lo = &lo - &w;
        drift(&mut pieces, "left", left.clone(), zone_lo.clone());
        // s = (lo - a) / w; b' = b - s delta
        let zone = rect(zone_lo, lo.clone(), z(), top.clone());
        pieces.push(Piece::new(
            name("lzone.hi"),
            with(zone.clone(), half(-r.clone(), -o(), -(&lo * &r))),
            map2([[o(), z()], [r.clone(), o()]], [z(), -(&lo * &r)]),
        ));
        pieces.push(Piece::new(name("lzone.lo"), with(zone, half(r.clone(), o(), &lo * &r)), floor.clone()));
    }
    pieces.push(Piece::new(name("frozen"), rect(lo, slice_hi.clone(), z(), top.clone()), id));
    // s = (a - slice_hi) / w
    let zone_hi = &slice_hi + &w;
    let zone = rect(slice_hi.clone(), zone_hi.clone(), z(), top.clone());
    pieces.push(Piece::new(
        name("rzone.hi"),
        with(zone.clone(), half(r.clone(), -o(), &slice_hi * &r)),
        map2([[o(), z()], [-r.clone(), o()]], [z(), &slice_hi * &r]),
    ));
    pieces.push(Piece::new(name("rzone.lo"), with(zone, half(-r.clone(), o(), -(&slice_hi * &r))), floor.clone()));
    drift(&mut pieces, "right", zone_hi, right);
    pieces
}

/// The bounded-time control gadget: every point of `R_0` reaches the bottom
/// of the last column within `n+10` steps iff the instance has no solution.
pub fn subset_sum_control_instance(inst: &SubsetSumInstance) -> Result<SubsetSumReduction, ReductionError> {
    let g = GadgetParams::of(inst);
    let (mut pieces, mut flow) = column_pieces(inst, &g);
    let first = pieces.len();
    pieces.extend(control_pieces(&g));
    flow.push(FlowRule { sources: (first..pieces.len()).collect(), target: stage_region(&g, g.n + 1) });
    let mut regions = named_regions(inst, &g);
    regions.push(NamedRegion { name: "Rtarget".to_string(), region: control_target(&g) });
    Ok(SubsetSumReduction {
        instance: inst.clone(),
        kind: GadgetKind::Control,
        params: g,
        paf: Paf::new(2, pieces, DomainKind::Partial)?,
        init: stage_region(&g, 0),
        target: control_target(&g),
        horizon: g.n + 1 + (2 * BETA as usize - 1),
        regions,
        flow,
    })
}
