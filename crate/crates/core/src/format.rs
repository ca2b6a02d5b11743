//! Line-oriented text formats for instances, certificates and generator
//! manifests.
//!
//! Rationals are written as `p/q` or integers; decimals are rejected. `#`
//! starts a comment, indentation is ignored on input, and the writers emit a
//! canonical form that parses back to the same value and prints identically.
//!
//! ```text
//! dim 2
//! domain partial
//! piece R0
//!   -1 0 <= 0
//!   1 0 <= 1/8
//!   map 0 0 1/4
//!   map 0 1 0
//! end
//! problem reach-time
//! horizon 3
//! init
//!   -1 0 <= 0
//! end
//! target
//!   1 0 <= 1
//! end
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::bounded::BoundedProblem;
use crate::paf::{AffineMap, DomainKind, Paf, Piece};
use crate::precision::{CellIndex, PrecisionError, PrecisionProblem};
use crate::ratgeo::{Constraint, Polyhedron, RatMatrix, RatVector, Rational, Relation};
use crate::reductions::NamedRegion;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn ferr(line: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    ReachTime,
    ControlTime,
    ReachPrecision,
    ControlPrecision,
}

impl ProblemKind {
    pub fn is_time(self) -> bool {
        matches!(self, ProblemKind::ReachTime | ProblemKind::ControlTime)
    }

    /// Keyword for the integer parameter: `horizon` or `precision`.
    pub fn parameter(self) -> &'static str {
        if self.is_time() {
            "horizon"
        } else {
            "precision"
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::ReachTime => "reach-time",
            ProblemKind::ControlTime => "control-time",
            ProblemKind::ReachPrecision => "reach-precision",
            ProblemKind::ControlPrecision => "control-precision",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "reach-time" => ProblemKind::ReachTime,
            "control-time" => ProblemKind::ControlTime,
            "reach-precision" => ProblemKind::ReachPrecision,
            "control-precision" => ProblemKind::ControlPrecision,
            _ => return Err(format!("unknown problem kind {s:?}")),
        })
    }
}

/// A PAF together with one decision problem about it. `param` is the
/// horizon `T` for time problems and the exponent `n` of `eps = 2^-n` for
/// precision problems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub paf: Paf,
    pub kind: ProblemKind,
    pub init: Polyhedron,
    pub target: Polyhedron,
    pub param: u32,
}

impl Instance {
    pub fn bounded_problem(&self) -> BoundedProblem {
        BoundedProblem {
            paf: self.paf.clone(),
            init: self.init.clone(),
            target: self.target.clone(),
            horizon: self.param as usize,
        }
    }

    pub fn precision_problem(&self) -> Result<PrecisionProblem, PrecisionError> {
        PrecisionProblem::new(self.paf.clone(), self.init.clone(), self.target.clone(), self.param)
    }
}

/// Significant lines: comments stripped, blanks dropped, 1-based numbers kept.
fn lines(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let tok: Vec<&str> = body.split_whitespace().collect();
            (!tok.is_empty()).then_some((i + 1, tok))
        })
        .collect()
}

struct Cursor<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let last_line = text.lines().count().max(1);
        Cursor { lines: lines(text), pos: 0, last_line }
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.lines.get(self.pos)
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let l = self.lines.get(self.pos).cloned();
        self.pos += 1;
        l
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        self.next().ok_or_else(|| ferr(self.last_line, format!("unexpected end of file, expected {what}")))
    }

    /// `keyword value` with exactly one value.
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), FormatError> {
        let (ln, tok) = self.expect(key)?;
        match tok.as_slice() {
            [k, v] if *k == key => Ok((ln, *v)),
            _ => Err(ferr(ln, format!("expected `{key} <value>`"))),
        }
    }
}

fn rat(ln: usize, s: &str) -> Result<Rational, FormatError> {
    s.parse().map_err(|_| ferr(ln, format!("bad rational {s:?} (use p/q or an integer)")))
}

fn rats(ln: usize, toks: &[&str]) -> Result<Vec<Rational>, FormatError> {
    toks.iter().map(|t| rat(ln, t)).collect()
}

fn int<T: FromStr>(ln: usize, s: &str) -> Result<T, FormatError> {
    s.parse().map_err(|_| ferr(ln, format!("bad integer {s:?}")))
}

/// Parses `c_1 .. c_d REL b`.
fn constraint_row(ln: usize, tok: &[&str], dim: usize) -> Result<Constraint, FormatError> {
    if tok.len() != dim + 2 {
        return Err(ferr(ln, format!("constraint rows need {dim} coefficients, a relation and a bound")));
    }
    let kind = match tok[dim] {
        "<=" => Relation::Le,
        "<" => Relation::Lt,
        other => return Err(ferr(ln, format!("bad relation {other:?}, expected <= or <"))),
    };
    let normal = RatVector::new(rats(ln, &tok[..dim])?);
    Ok(Constraint::new(normal, rat(ln, tok[dim + 1])?, kind))
}

/// Constraint rows up to `end`.
fn polyhedron_block(c: &mut Cursor<'_>, dim: usize) -> Result<Polyhedron, FormatError> {
    let mut rows = Vec::new();
    loop {
        let (ln, tok) = c.expect("constraint row or `end`")?;
        if tok == ["end"] {
            return Ok(Polyhedron::from_rows_unchecked(dim, rows));
        }
        rows.push(constraint_row(ln, &tok, dim)?);
    }
}

fn write_rational(out: &mut String, x: &Rational) {
    let _ = write!(out, "{x}");
}

fn write_rows(out: &mut String, p: &Polyhedron, indent: &str) {
    for c in p.constraints() {
        out.push_str(indent);
        for x in c.normal.iter() {
            write_rational(out, x);
            out.push(' ');
        }
        out.push_str(match c.kind {
            Relation::Le => "<= ",
            Relation::Lt => "< ",
        });
        write_rational(out, &c.bound);
        out.push('\n');
    }
}

fn write_point(out: &mut String, x: &RatVector) {
    for (i, v) in x.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_rational(out, v);
    }
}

pub fn parse_point(ln: usize, toks: &[&str], dim: usize) -> Result<RatVector, FormatError> {
    if toks.len() != dim {
        return Err(ferr(ln, format!("expected {dim} coordinates, found {}", toks.len())));
    }
    Ok(RatVector::new(rats(ln, toks)?))
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut c = Cursor::new(text);
    let (ln, d) = c.keyed("dim")?;
    let dim: usize = int(ln, d)?;
    if dim == 0 {
        return Err(ferr(ln, "dimension must be positive"));
    }
    let (ln, dk) = c.keyed("domain")?;
    let domain = match dk {
        "total" => DomainKind::Total,
        "partial" => DomainKind::Partial,
        _ => return Err(ferr(ln, "domain must be total or partial")),
    };
    let mut pieces = Vec::new();
    let mut piece_lines = Vec::new();
    while let Some((_, tok)) = c.peek() {
        if tok[0] != "piece" {
            break;
        }
        let (ln, tok) = c.next().expect("peeked");
        let [_, name] = tok.as_slice() else {
            return Err(ferr(ln, "expected `piece <name>`"));
        };
        let mut rows = Vec::new();
        let mut map_rows: Vec<Vec<Rational>> = Vec::new();
        loop {
            let (l2, t2) = c.expect("piece body or `end`")?;
            match t2.as_slice() {
                ["end"] => break,
                ["map", rest @ ..] => {
                    if rest.len() != dim + 1 {
                        return Err(ferr(l2, format!("map rows need {} entries (A row then offset)", dim + 1)));
                    }
                    map_rows.push(rats(l2, rest)?);
                }
                _ if !map_rows.is_empty() => return Err(ferr(l2, "constraint rows must precede map rows")),
                _ => rows.push(constraint_row(l2, &t2, dim)?),
            }
        }
        if map_rows.len() != dim {
            return Err(ferr(ln, format!("piece {name} needs {dim} map rows, found {}", map_rows.len())));
        }
        let offset: RatVector = map_rows.iter().map(|r| r[dim].clone()).collect();
        let matrix = RatMatrix::from_rows(map_rows.into_iter().map(|mut r| {
            r.pop();
            r
        }).collect())
        .map_err(|e| ferr(ln, e.to_string()))?;
        let map = AffineMap::new(matrix, offset).map_err(|e| ferr(ln, e.to_string()))?;
        pieces.push(Piece::new(*name, Polyhedron::from_rows_unchecked(dim, rows), map));
        piece_lines.push(ln);
    }
    let paf = Paf::new(dim, pieces, domain).map_err(|e| {
        let bad = match &e {
            crate::paf::PafError::DuplicateName(n)
            | crate::paf::PafError::OpenRegion(n)
            | crate::paf::PafError::EmptyInterior(n)
            | crate::paf::PafError::OutsideCube(n) => Some(n.clone()),
            crate::paf::PafError::PieceDimension { piece, .. } => Some(piece.clone()),
            _ => None,
        };
        let line = bad
            .and_then(|n| {
                // the last piece with this name is the offending one for duplicates
                text.lines().enumerate().filter(|(_, l)| l.split_whitespace().eq(["piece", n.as_str()])).last().map(|(i, _)| i + 1)
            })
            .or_else(|| piece_lines.first().copied())
            .unwrap_or(ln);
        ferr(line, e.to_string())
    })?;
    let (ln, k) = c.keyed("problem")?;
    let kind: ProblemKind = k.parse().map_err(|m: String| ferr(ln, m))?;
    let (ln, v) = c.keyed(kind.parameter())?;
    let param: u32 = int(ln, v)?;
    let (ln, t) = c.expect("init")?;
    if t != ["init"] {
        return Err(ferr(ln, "expected `init`"));
    }
    let init = polyhedron_block(&mut c, dim)?;
    let (ln, t) = c.expect("target")?;
    if t != ["target"] {
        return Err(ferr(ln, "expected `target`"));
    }
    let target = polyhedron_block(&mut c, dim)?;
    if let Some((ln, _)) = c.next() {
        return Err(ferr(ln, "trailing content after target block"));
    }
    Ok(Instance { paf, kind, init, target, param })
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = format!("dim {}\ndomain {}\n", inst.paf.dim(), inst.paf.domain());
    for p in inst.paf.pieces() {
        let _ = writeln!(out, "piece {}", p.name);
        write_rows(&mut out, &p.region, "  ");
        for k in 0..inst.paf.dim() {
            out.push_str("  map");
            for x in p.map.matrix().row_slice(k) {
                out.push(' ');
                write_rational(&mut out, x);
            }
            out.push(' ');
            write_rational(&mut out, &p.map.offset()[k]);
            out.push('\n');
        }
        out.push_str("end\n");
    }
    let _ = writeln!(out, "problem {}\n{} {}", inst.kind, inst.kind.parameter(), inst.param);
    out.push_str("init\n");
    write_rows(&mut out, &inst.init, "  ");
    out.push_str("end\ntarget\n");
    write_rows(&mut out, &inst.target, "  ");
    out.push_str("end\n");
    out
}

/// Solver evidence for a definite positive answer (reachable or refuted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Start point and piece names of a trajectory meeting the target at `t`.
    Reach { t: usize, signature: Vec<String>, witness: RatVector },
    /// Start point and piece names of a trajectory avoiding the target.
    ControlRefutation { signature: Vec<String>, witness: RatVector },
    /// Rounded trajectory, states `0..=t`, ending in the target.
    PrecisionReach { t: usize, states: Vec<RatVector> },
    /// Rounded trajectory avoiding the target whose next state is
    /// `states[entry]`; `cell` is the grid cell of the first rounded state.
    PrecisionRefutation { cell: CellIndex, entry: usize, states: Vec<RatVector> },
}

impl Certificate {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Certificate::Reach { .. } => ProblemKind::ReachTime,
            Certificate::ControlRefutation { .. } => ProblemKind::ControlTime,
            Certificate::PrecisionReach { .. } => ProblemKind::ReachPrecision,
            Certificate::PrecisionRefutation { .. } => ProblemKind::ControlPrecision,
        }
    }
}

fn write_states(out: &mut String, states: &[RatVector]) {
    out.push_str("trajectory\n");
    for (k, x) in states.iter().enumerate() {
        let _ = write!(out, "  {k} ");
        write_point(out, x);
        out.push('\n');
    }
    out.push_str("end\n");
}

pub fn write_certificate(c: &Certificate) -> String {
    let mut out = format!("kind {}\n", c.kind());
    match c {
        Certificate::Reach { t, signature, witness } => {
            let _ = writeln!(out, "verdict reachable\nt {t}\nsignature {}", signature.join(" "));
            out.push_str("witness ");
            write_point(&mut out, witness);
            out.push('\n');
        }
        Certificate::ControlRefutation { signature, witness } => {
            let _ = writeln!(out, "verdict refuted\nsignature {}", signature.join(" "));
            out.push_str("witness ");
            write_point(&mut out, witness);
            out.push('\n');
        }
        Certificate::PrecisionReach { t, states } => {
            let _ = writeln!(out, "verdict reachable\nt {t}");
            write_states(&mut out, states);
        }
        Certificate::PrecisionRefutation { cell, entry, states } => {
            let _ = writeln!(out, "verdict refuted\ncell {cell}\ncycle {entry}");
            write_states(&mut out, states);
        }
    }
    out
}

fn states_block(c: &mut Cursor<'_>) -> Result<Vec<RatVector>, FormatError> {
    let (ln, t) = c.expect("trajectory")?;
    if t != ["trajectory"] {
        return Err(ferr(ln, "expected `trajectory`"));
    }
    let mut states: Vec<RatVector> = Vec::new();
    loop {
        let (ln, tok) = c.expect("trajectory line or `end`")?;
        if tok == ["end"] {
            break;
        }
        let step: usize = int(ln, tok[0])?;
        if step != states.len() {
            return Err(ferr(ln, format!("expected step {}, found {step}", states.len())));
        }
        let dim = states.first().map_or(tok.len() - 1, |s| s.dim());
        states.push(parse_point(ln, &tok[1..], dim)?);
    }
    if states.is_empty() {
        return Err(ferr(c.last_line, "empty trajectory"));
    }
    Ok(states)
}

/// Parses a certificate; `dim` is the instance dimension.
pub fn parse_certificate(text: &str, dim: usize) -> Result<Certificate, FormatError> {
    let mut c = Cursor::new(text);
    let (ln, k) = c.keyed("kind")?;
    let kind: ProblemKind = k.parse().map_err(|m: String| ferr(ln, m))?;
    let (ln, v) = c.keyed("verdict")?;
    let expected = if matches!(kind, ProblemKind::ReachTime | ProblemKind::ReachPrecision) { "reachable" } else { "refuted" };
    if v != expected {
        return Err(ferr(ln, format!("a {kind} certificate must have verdict {expected}")));
    }
    let signature = |c: &mut Cursor<'_>| -> Result<Vec<String>, FormatError> {
        let (ln, tok) = c.expect("signature")?;
        match tok.split_first() {
            Some((&"signature", rest)) => Ok(rest.iter().map(|s| s.to_string()).collect()),
            _ => Err(ferr(ln, "expected `signature <names>`")),
        }
    };
    let witness = |c: &mut Cursor<'_>| -> Result<RatVector, FormatError> {
        let (ln, tok) = c.expect("witness")?;
        match tok.split_first() {
            Some((&"witness", rest)) => parse_point(ln, rest, dim),
            _ => Err(ferr(ln, "expected `witness <point>`")),
        }
    };
    let cert = match kind {
        ProblemKind::ReachTime => {
            let (ln, t) = c.keyed("t")?;
            let t = int(ln, t)?;
            Certificate::Reach { t, signature: signature(&mut c)?, witness: witness(&mut c)? }
        }
        ProblemKind::ControlTime => Certificate::ControlRefutation { signature: signature(&mut c)?, witness: witness(&mut c)? },
        ProblemKind::ReachPrecision => {
            let (ln, t) = c.keyed("t")?;
            let t = int(ln, t)?;
            Certificate::PrecisionReach { t, states: states_block(&mut c)? }
        }
        ProblemKind::ControlPrecision => {
            let (ln, tok) = c.expect("cell")?;
            let cell = match tok.split_first() {
                Some((&"cell", rest)) if rest.len() == dim => {
                    CellIndex(rest.iter().map(|s| int(ln, s)).collect::<Result<_, _>>()?)
                }
                _ => return Err(ferr(ln, format!("expected `cell` with {dim} indices"))),
            };
            let (ln, e) = c.keyed("cycle")?;
            Certificate::PrecisionRefutation { cell, entry: int(ln, e)?, states: states_block(&mut c)? }
        }
    };
    if let Some((ln, _)) = c.next() {
        return Err(ferr(ln, "trailing content"));
    }
    if let Certificate::PrecisionReach { states, .. } | Certificate::PrecisionRefutation { states, .. } = &cert {
        if states[0].dim() != dim {
            return Err(ferr(1, format!("trajectory points must have {dim} coordinates")));
        }
    }
    Ok(cert)
}

/// Sidecar description of a generated instance: parameters, named regions
/// and flow rules `target <- sources` for the stability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub generator: String,
    pub params: Vec<(String, String)>,
    pub regions: Vec<NamedRegion>,
    pub flow: Vec<(String, Vec<String>)>,
}

pub fn write_manifest(m: &Manifest) -> String {
    let mut out = format!("generator {}\n", m.generator);
    for (k, v) in &m.params {
        let _ = writeln!(out, "param {k} {v}");
    }
    for r in &m.regions {
        let _ = writeln!(out, "region {}", r.name);
        write_rows(&mut out, &r.region, "  ");
        out.push_str("end\n");
    }
    for (t, s) in &m.flow {
        let _ = writeln!(out, "flow {t} <- {}", s.join(" "));
    }
    out
}

pub fn parse_manifest(text: &str, dim: usize) -> Result<Manifest, FormatError> {
    let mut c = Cursor::new(text);
    let (_, g) = c.keyed("generator")?;
    let mut m = Manifest { generator: g.to_string(), params: vec![], regions: vec![], flow: vec![] };
    while let Some((ln, tok)) = c.next() {
        match tok.as_slice() {
            ["param", k, v] => m.params.push((k.to_string(), v.to_string())),
            ["param", k] => m.params.push((k.to_string(), String::new())),
            ["region", name] => {
                let region = polyhedron_block(&mut c, dim)?;
                m.regions.push(NamedRegion { name: name.to_string(), region });
            }
            ["flow", target, "<-", sources @ ..] if !sources.is_empty() => {
                m.flow.push((target.to_string(), sources.iter().map(|s| s.to_string()).collect()))
            }
            _ => return Err(ferr(ln, "expected param, region or flow line")),
        }
    }
    Ok(m)
}
