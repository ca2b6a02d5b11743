//! Linear bounded automata as fixed-precision dynamics on the unit square.
//!
//! A word `w` over `{0..beta}` is encoded as `<w> = sum 2 w_i 2^(-gamma i)`
//! with `2 beta + 1 <= 2^gamma`, and a configuration as `(<x>, <q sigma y>)`
//! where `x` is the tape left of the head read outward and `q` is the
//! state's `m`-digit code. On the box holding configurations with left
//! neighbour `alpha`, state `q` and scanned `sigma` the map is affine, and
//! every reachable encoding is a grid point of `eps = 2^(-gamma(|w|+m+1))`,
//! so rounding never disturbs the simulation.

use std::collections::HashMap;
use std::fmt;

use crate::paf::{AffineMap, Paf};
use crate::precision::PrecisionProblem;
use crate::ratgeo::{Polyhedron, RatMatrix, RatVector, Rational};

use super::extend::extend_to_total;
use super::subset_sum::NamedRegion;
use super::ReductionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Left,
    Stay,
    Right,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::Left => "L",
            Move::Stay => "S",
            Move::Right => "R",
        })
    }
}

/// A machine over `{0..beta}` with blank `0` and a total transition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmSpec {
    beta: u8,
    states: Vec<String>,
    start: usize,
    accept: usize,
    /// `delta[q][sigma] = (q', sigma', move)`
    delta: Vec<Vec<(usize, u8, Move)>>,
}

pub type TmRule<'a> = (&'a str, u8, &'a str, u8, Move);

impl TmSpec {
    /// Builds a machine from named rules; every `(state, symbol)` pair must
    /// have exactly one rule.
    pub fn new(beta: u8, states: &[&str], start: &str, accept: &str, rules: &[TmRule<'_>]) -> Result<Self, ReductionError> {
        let bad = |m: String| ReductionError::InvalidMachine(m);
        if beta == 0 || beta > 100 {
            return Err(bad(format!("symbol bound {beta} must be in 1..=100")));
        }
        let index: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        if index.len() != states.len() || states.is_empty() {
            return Err(bad("state names must be nonempty and distinct".into()));
        }
        let look = |s: &str| index.get(s).copied().ok_or_else(|| bad(format!("unknown state {s}")));
        let mut delta = vec![vec![None; beta as usize + 1]; states.len()];
        for &(q, s, q2, s2, mv) in rules {
            if s > beta || s2 > beta {
                return Err(bad(format!("symbol out of range in rule for ({q}, {s})")));
            }
            let slot = &mut delta[look(q)?][s as usize];
            if slot.is_some() {
                return Err(bad(format!("duplicate rule for ({q}, {s})")));
            }
            *slot = Some((look(q2)?, s2, mv));
        }
        let mut table = Vec::with_capacity(states.len());
        for (qi, row) in delta.into_iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (s, r) in row.into_iter().enumerate() {
                out.push(r.ok_or_else(|| bad(format!("no rule for ({}, {s})", states[qi])))?);
            }
            table.push(out);
        }
        Ok(TmSpec {
            beta,
            states: states.iter().map(|s| s.to_string()).collect(),
            start: look(start)?,
            accept: look(accept)?,
            delta: table,
        })
    }

    /// Parses the line format
    ///
    /// ```text
    /// symbols 2
    /// states scan done
    /// start scan
    /// accept done
    /// scan 1 -> scan 1 R
    /// ```
    ///
    /// `#` starts a comment. Errors cite the line number.
    pub fn parse(text: &str) -> Result<Self, ReductionError> {
        let mut beta = None;
        let mut states: Vec<String> = Vec::new();
        let (mut start, mut accept) = (None, None);
        let mut rules: Vec<(String, u8, String, u8, Move)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let err = |m: &str| ReductionError::InvalidMachine(format!("line {}: {m}", ln + 1));
            let line = raw.split('#').next().unwrap_or("").trim();
            let tok: Vec<&str> = line.split_whitespace().collect();
            let sym = |s: &str| s.parse::<u8>().map_err(|_| err(&format!("bad symbol {s:?}")));
            match tok.as_slice() {
                [] => {}
                ["symbols", b] => beta = Some(sym(b)?),
                ["states", rest @ ..] if !rest.is_empty() => states = rest.iter().map(|s| s.to_string()).collect(),
                ["start", s] => start = Some(s.to_string()),
                ["accept", s] => accept = Some(s.to_string()),
                [q, s, "->", q2, s2, mv] => {
                    let mv = match *mv {
                        "L" => Move::Left,
                        "S" => Move::Stay,
                        "R" => Move::Right,
                        other => return Err(err(&format!("bad move {other:?}, expected L, S or R"))),
                    };
                    rules.push((q.to_string(), sym(s)?, q2.to_string(), sym(s2)?, mv));
                }
                _ => return Err(err(&format!("cannot parse {line:?}"))),
            }
        }
        let missing = |k: &str| ReductionError::InvalidMachine(format!("missing {k} line"));
        let beta = beta.ok_or_else(|| missing("symbols"))?;
        let start = start.ok_or_else(|| missing("start"))?;
        let accept = accept.ok_or_else(|| missing("accept"))?;
        if states.is_empty() {
            return Err(missing("states"));
        }
        let names: Vec<&str> = states.iter().map(String::as_str).collect();
        let rules: Vec<TmRule<'_>> = rules.iter().map(|(q, s, q2, s2, m)| (q.as_str(), *s, q2.as_str(), *s2, *m)).collect();
        Self::new(beta, &names, &start, &accept, &rules)
    }

    /// Canonical text accepted by [`TmSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "symbols {}\nstates {}\nstart {}\naccept {}\n",
            self.beta,
            self.states.join(" "),
            self.states[self.start],
            self.states[self.accept]
        );
        for (q, row) in self.delta.iter().enumerate() {
            for (sym, (q2, s2, mv)) in row.iter().enumerate() {
                s += &format!("{} {sym} -> {} {s2} {mv}\n", self.states[q], self.states[*q2]);
            }
        }
        s
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accept(&self) -> usize {
        self.accept
    }

    pub fn rule(&self, q: usize, sigma: u8) -> (usize, u8, Move) {
        self.delta[q][sigma as usize]
    }

    /// Least `gamma` with `2 beta + 1 <= 2^gamma`.
    pub fn gamma(&self) -> u32 {
        let need = 2 * self.beta as u64 + 1;
        (0..).find(|g| 1u64 << g >= need).expect("small alphabet")
    }

    /// Digits per state code, the least `m` with `(beta+1)^m >= |Q|`.
    pub fn code_len(&self) -> usize {
        let base = self.beta as usize + 1;
        let mut m = 1;
        while base.pow(m as u32) < self.states.len() {
            m += 1;
        }
        m
    }

    /// The state's index written in base `beta+1` with `m` digits.
    pub fn code(&self, q: usize) -> Vec<u8> {
        let base = self.beta as usize + 1;
        let mut digits = vec![0u8; self.code_len()];
        let mut r = q;
        for d in digits.iter_mut().rev() {
            *d = (r % base) as u8;
            r /= base;
        }
        digits
    }
}

/// `x` is the tape left of the head, nearest cell first; `right` the tape
/// right of the head. `cells` is the number of usable cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TmConfig {
    pub left: Vec<u8>,
    pub sym: u8,
    pub state: usize,
    pub right: Vec<u8>,
    pub cells: usize,
}

impl TmConfig {
    /// Head on the first input cell in the start state. The machine may use
    /// the input cells and the blank cell right after them.
    pub fn initial(spec: &TmSpec, w: &[u8]) -> Self {
        TmConfig {
            left: Vec::new(),
            sym: w.first().copied().unwrap_or(0),
            state: spec.start,
            right: w.iter().skip(1).copied().collect(),
            cells: w.len() + 1,
        }
    }

    pub fn head(&self) -> usize {
        self.left.len()
    }
}

/// One transition. Reading past the written part of the tape yields blanks.
pub fn lba_step(spec: &TmSpec, c: &TmConfig) -> Result<TmConfig, ReductionError> {
    let (q2, s2, mv) = spec.rule(c.state, c.sym);
    let mut n = c.clone();
    n.state = q2;
    match mv {
        Move::Stay => n.sym = s2,
        Move::Right => {
            if c.head() + 1 >= c.cells {
                return Err(ReductionError::SpaceBound { cells: c.cells });
            }
            n.left.insert(0, s2);
            n.sym = if n.right.is_empty() { 0 } else { n.right.remove(0) };
        }
        Move::Left => {
            if c.left.is_empty() {
                return Err(ReductionError::SpaceBound { cells: c.cells });
            }
            n.sym = n.left.remove(0);
            n.right.insert(0, s2);
        }
    }
    Ok(n)
}

/// `sum 2 w_i 2^(-gamma i)`
pub fn encode_word(w: &[u8], gamma: u32) -> Rational {
    w.iter()
        .enumerate()
        .map(|(i, &s)| Rational::from_int(2 * s as i64) * Rational::pow2_neg(gamma * (i as u32 + 1)))
        .sum()
}

/// `(<x>, <q sigma y>)`
pub fn encode_tm_config(spec: &TmSpec, c: &TmConfig) -> RatVector {
    let g = spec.gamma();
    let mut b = spec.code(c.state);
    b.push(c.sym);
    b.extend_from_slice(&c.right);
    RatVector::new(vec![encode_word(&c.left, g), encode_word(&b, g)])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LbaOptions {
    /// Start from a small box above `<c0>` instead of the single point.
    pub ball: bool,
}

#[derive(Clone, Debug)]
pub struct LbaReduction {
    pub spec: TmSpec,
    pub word: Vec<u8>,
    pub gamma: u32,
    /// `eps = 2^-precision`
    pub precision: u32,
    pub paf: Paf,
    pub init: Polyhedron,
    pub target: Polyhedron,
    pub start: TmConfig,
    /// The boxes `R_{alpha,q,sigma}` where the map is a single case formula.
    pub boxes: Vec<NamedRegion>,
}

impl LbaReduction {
    pub fn problem(&self) -> Result<PrecisionProblem, crate::precision::PrecisionError> {
        PrecisionProblem::new(self.paf.clone(), self.init.clone(), self.target.clone(), self.precision)
    }
}

fn interval_box(a: &Rational, wa: &Rational, b: &Rational, wb: &Rational) -> Polyhedron {
    Polyhedron::closed_box(&RatVector::new(vec![a.clone(), b.clone()]), &RatVector::new(vec![a + wa, b + wb]))
}

fn diag_map(sa: Rational, ca: Rational, sb: Rational, cb: Rational) -> AffineMap {
    let m = RatMatrix::from_rows(vec![vec![sa, Rational::zero()], vec![Rational::zero(), sb]]).expect("2x2");
    AffineMap::new(m, RatVector::new(vec![ca, cb])).expect("2x2 map")
}

/// The fixed-precision instance deciding whether the machine accepts `w`.
pub fn lba_reach_instance(spec: &TmSpec, w: &[u8], opts: LbaOptions) -> Result<LbaReduction, ReductionError> {
    if let Some(&s) = w.iter().find(|&&s| s > spec.beta) {
        return Err(ReductionError::InvalidMachine(format!("input symbol {s} exceeds {}", spec.beta)));
    }
    let g = spec.gamma();
    let m = spec.code_len();
    let precision = g * (w.len() + m + 1) as u32;
    if precision > 62 {
        return Err(ReductionError::InvalidMachine(format!("precision 2^-{precision} is too fine")));
    }
    let up = Rational::pow_int(2, g);
    let down = Rational::pow2_neg(g);
    let wa = down.clone();
    let wb = Rational::pow2_neg(g * (m as u32 + 1));
    let one = Rational::one();

    let mut boxes = Vec::new();
    let mut pieces = Vec::new();
    for alpha in 0..=spec.beta {
        let ea = encode_word(&[alpha], g);
        for q in 0..spec.states.len() {
            for sigma in 0..=spec.beta {
                let mut qs = spec.code(q);
                qs.push(sigma);
                let eqs = encode_word(&qs, g);
                let (q2, s2, mv) = spec.rule(q, sigma);
                let map = match mv {
                    Move::Right => diag_map(down.clone(), encode_word(&[s2], g), up.clone(), encode_word(&spec.code(q2), g) - &eqs * &up),
                    Move::Stay => {
                        let mut q2s2 = spec.code(q2);
                        q2s2.push(s2);
                        diag_map(one.clone(), Rational::zero(), one.clone(), encode_word(&q2s2, g) - &eqs)
                    }
                    Move::Left => {
                        let mut tail = spec.code(q2);
                        tail.extend([alpha, s2]);
                        diag_map(up.clone(), -(&ea * &up), down.clone(), encode_word(&tail, g) - &eqs * &down)
                    }
                };
                let name = format!("B.{alpha}.{}.{sigma}", spec.states[q]);
                let region = interval_box(&ea, &wa, &eqs, &wb);
                boxes.push(NamedRegion { name: name.clone(), region: region.clone() });
                pieces.push((name, region, map));
            }
        }
    }
    let paf = extend_to_total(pieces)?;

    let start = TmConfig::initial(spec, w);
    let c0 = encode_tm_config(spec, &start);
    let init = if opts.ball {
        // one-sided: rounding down forgives errors above a grid point only
        let r = Rational::pow2_neg(precision + 2 * g + 1);
        let hi: RatVector = c0.iter().map(|x| x + &r).collect();
        Polyhedron::closed_box(&c0, &hi)
    } else {
        Polyhedron::closed_box(&c0, &c0)
    };
    let qf = encode_word(&spec.code(spec.accept), g);
    let target = Polyhedron::closed_box(
        &RatVector::new(vec![Rational::zero(), qf.clone()]),
        &RatVector::new(vec![one, &qf + Rational::pow2_neg(g * m as u32)]),
    );
    Ok(LbaReduction { spec: spec.clone(), word: w.to_vec(), gamma: g, precision, paf, init, target, start, boxes })
}
