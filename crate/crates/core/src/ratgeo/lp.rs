//! Exact dense simplex over the rationals.
//!
//! Free variables are split as `x = x+ - x-`. Pivoting follows Bland's rule
//! on both the entering and the leaving variable, so the method terminates
//! without an anti-cycling perturbation. Strict rows are handled with a
//! uniform slack `t`: every strict row `a.x < b` becomes `a.x + t <= b`,
//! `t` is capped at 1 and maximized, and the system is strictly feasible
//! iff the optimum is positive.
//!
//! Returned points are made canonical by a lexicographic refinement on the
//! optimal face: among optimal basic solutions the one minimizing `x_1`,
//! then `x_2`, ... is reported.

use super::{GeoError, Polyhedron, RatVector, Rational, Relation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(RatVector),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&RatVector> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Optimum {
    Bounded { value: Rational, argpoint: RatVector },
    Unbounded,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
    allowed: Vec<bool>,
    nvars: usize,
    t_col: Option<usize>,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(p: &Polyhedron, with_slack_t: bool) -> Tableau {
        let d = p.dim();
        let m = p.constraints().len() + usize::from(with_slack_t);
        let t_col = with_slack_t.then_some(2 * d);
        let slack0 = 2 * d + usize::from(with_slack_t);
        let needs_art: Vec<bool> = p
            .constraints()
            .iter()
            .map(|c| c.bound.is_negative())
            .chain(with_slack_t.then_some(false))
            .collect();
        let nart = needs_art.iter().filter(|&&b| b).count();
        let ncols = slack0 + m + nart;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art = slack0 + m;
        for (r, c) in p.constraints().iter().enumerate() {
            let mut row = vec![Rational::zero(); ncols];
            for j in 0..d {
                row[2 * j] = c.normal[j].clone();
                row[2 * j + 1] = -&c.normal[j];
            }
            if let (Some(t), Relation::Lt) = (t_col, c.kind) {
                row[t] = Rational::one();
            }
            row[slack0 + r] = Rational::one();
            let mut b = c.bound.clone();
            if needs_art[r] {
                for x in row.iter_mut() {
                    if !x.is_zero() {
                        *x = -&*x;
                    }
                }
                b = -b;
                row[art] = Rational::one();
                basis.push(art);
                art += 1;
            } else {
                basis.push(slack0 + r);
            }
            rows.push(row);
            rhs.push(b);
        }
        if let Some(t) = t_col {
            let r = rows.len();
            let mut row = vec![Rational::zero(); ncols];
            row[t] = Rational::one();
            row[slack0 + r] = Rational::one();
            rows.push(row);
            rhs.push(Rational::one());
            basis.push(slack0 + r);
        }
        Tableau { rows, rhs, basis, ncols, allowed: vec![true; ncols], nvars: d, t_col }
    }

    fn first_artificial(&self) -> usize {
        2 * self.nvars + usize::from(self.t_col.is_some()) + self.rows.len()
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, x) in self.rows[i].iter().enumerate() {
                if !x.is_zero() {
                    r[j] -= &(cb * x);
                }
            }
        }
        r
    }

    fn pivot(&mut self, pr: usize, pc: usize, reduced: &mut [Rational]) {
        let inv = self.rows[pr][pc].recip().expect("pivot on zero");
        for x in self.rows[pr].iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        self.rhs[pr] = &self.rhs[pr] * &inv;
        let prow = self.rows[pr].clone();
        let prhs = self.rhs[pr].clone();
        for i in 0..self.rows.len() {
            if i == pr {
                continue;
            }
            let f = self.rows[i][pc].clone();
            if f.is_zero() {
                continue;
            }
            for (j, pj) in prow.iter().enumerate() {
                if !pj.is_zero() {
                    let v = &self.rows[i][j] - &(&f * pj);
                    self.rows[i][j] = v;
                }
            }
            self.rhs[i] = &self.rhs[i] - &(&f * &prhs);
        }
        let f = reduced[pc].clone();
        if !f.is_zero() {
            for (j, pj) in prow.iter().enumerate() {
                if !pj.is_zero() {
                    reduced[j] = &reduced[j] - &(&f * pj);
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Maximizes `cost` over the allowed columns. On return `reduced` holds
    /// the final reduced costs.
    fn maximize(&mut self, cost: &[Rational]) -> (Step, Vec<Rational>) {
        let mut reduced = self.reduced_costs(cost);
        loop {
            let mut is_basic = vec![false; self.ncols];
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let entering =
                (0..self.ncols).find(|&j| self.allowed[j] && !is_basic[j] && reduced[j].is_positive());
            let Some(e) = entering else {
                return (Step::Optimal, reduced);
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((pr, _)) = best else {
                return (Step::Unbounded, reduced);
            };
            self.pivot(pr, e, &mut reduced);
        }
    }

    fn value(&self, cost: &[Rational]) -> Rational {
        self.basis.iter().zip(&self.rhs).map(|(&b, v)| &cost[b] * v).sum()
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut vals = vec![Rational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            vals[b] = self.rhs[i].clone();
        }
        vals
    }

    fn point(&self) -> RatVector {
        let vals = self.column_values();
        (0..self.nvars).map(|j| &vals[2 * j] - &vals[2 * j + 1]).collect()
    }

    /// Phase one. Returns false when the closed system is infeasible.
    fn phase_one(&mut self) -> bool {
        let first_art = self.first_artificial();
        if first_art < self.ncols {
            let mut cost = vec![Rational::zero(); self.ncols];
            for c in cost.iter_mut().skip(first_art) {
                *c = -Rational::one();
            }
            let (_, _) = self.maximize(&cost);
            if self.value(&cost).is_negative() {
                return false;
            }
            // drive zero-level artificials out of the basis
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= first_art {
                    if let Some(j) = (0..first_art).find(|&j| !self.rows[i][j].is_zero()) {
                        let mut dummy = vec![Rational::zero(); self.ncols];
                        self.pivot(i, j, &mut dummy);
                    } else {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
                i += 1;
            }
            for a in self.allowed.iter_mut().skip(first_art) {
                *a = false;
            }
        }
        true
    }

    /// Forbids nonbasic columns whose reduced cost is strictly negative, so
    /// that later objectives stay on the current optimal face.
    fn freeze_face(&mut self, reduced: &[Rational]) {
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        for j in 0..self.ncols {
            if !is_basic[j] && reduced[j].is_negative() {
                self.allowed[j] = false;
            }
        }
    }

    fn lex_refine(&mut self) {
        for k in 0..self.nvars {
            let mut cost = vec![Rational::zero(); self.ncols];
            cost[2 * k] = -Rational::one();
            cost[2 * k + 1] = Rational::one();
            match self.maximize(&cost) {
                (Step::Optimal, reduced) => self.freeze_face(&reduced),
                (Step::Unbounded, _) => return,
            }
        }
    }
}

fn check_dims(p: &Polyhedron) -> Result<(), GeoError> {
    for c in p.constraints() {
        if c.normal.dim() != p.dim() {
            return Err(GeoError::DimensionMismatch { expected: p.dim(), found: c.normal.dim() });
        }
    }
    Ok(())
}

fn constant_rows_hold(p: &Polyhedron) -> bool {
    p.constraints().iter().all(|c| match c.kind {
        Relation::Le => !c.bound.is_negative(),
        Relation::Lt => c.bound.is_positive(),
    })
}

fn solve_feasible(p: &Polyhedron, canonical: bool) -> Result<Feasibility, GeoError> {
    check_dims(p)?;
    if p.dim() == 0 {
        return Ok(if constant_rows_hold(p) {
            Feasibility::Feasible(RatVector::zeros(0))
        } else {
            Feasibility::Infeasible
        });
    }
    let strict = p.constraints().iter().any(|c| c.kind == Relation::Lt);
    let mut tab = Tableau::build(p, strict);
    if !tab.phase_one() {
        return Ok(Feasibility::Infeasible);
    }
    if let Some(t) = tab.t_col {
        let mut cost = vec![Rational::zero(); tab.ncols];
        cost[t] = Rational::one();
        let (step, reduced) = tab.maximize(&cost);
        debug_assert!(matches!(step, Step::Optimal), "slack is capped");
        if !tab.value(&cost).is_positive() {
            return Ok(Feasibility::Infeasible);
        }
        if canonical {
            tab.freeze_face(&reduced);
        }
    }
    if canonical {
        tab.lex_refine();
    }
    Ok(Feasibility::Feasible(tab.point()))
}

/// Decides whether the (mixed strict/non-strict) constraint system has a
/// rational solution and returns one. The witness satisfies every row
/// exactly.
pub fn lp_feasible(p: &Polyhedron) -> Result<Feasibility, GeoError> {
    let out = solve_feasible(p, true)?;
    if let Feasibility::Feasible(w) = &out {
        debug_assert!(p.contains(w), "witness {w:?} violates {p:?}");
        debug_assert!(
            w.size() as f64 <= witness_size_bound(p) + 1e-9,
            "witness {w:?} of size {} exceeds bound {} for {p:?}",
            w.size(),
            witness_size_bound(p)
        );
    }
    Ok(out)
}

/// Feasibility without the canonical-witness refinement.
pub fn is_feasible(p: &Polyhedron) -> bool {
    solve_feasible(p, false).map(|f| f.is_feasible()).unwrap_or(false)
}

/// Optimizes a linear objective over a closed polyhedron.
pub fn lp_optimize(p: &Polyhedron, objective: &RatVector, sense: Sense) -> Result<Optimum, GeoError> {
    check_dims(p)?;
    if objective.dim() != p.dim() {
        return Err(GeoError::DimensionMismatch { expected: p.dim(), found: objective.dim() });
    }
    if !p.is_closed() {
        return Err(GeoError::StrictRowsInOptimization);
    }
    if p.dim() == 0 {
        return Ok(if constant_rows_hold(p) {
            Optimum::Bounded { value: Rational::zero(), argpoint: RatVector::zeros(0) }
        } else {
            Optimum::Infeasible
        });
    }
    let mut tab = Tableau::build(p, false);
    if !tab.phase_one() {
        return Ok(Optimum::Infeasible);
    }
    let sign = match sense {
        Sense::Max => Rational::one(),
        Sense::Min => -Rational::one(),
    };
    let mut cost = vec![Rational::zero(); tab.ncols];
    for j in 0..p.dim() {
        let c = &objective[j] * &sign;
        cost[2 * j + 1] = -&c;
        cost[2 * j] = c;
    }
    match tab.maximize(&cost) {
        (Step::Unbounded, _) => Ok(Optimum::Unbounded),
        (Step::Optimal, reduced) => {
            tab.freeze_face(&reduced);
            tab.lex_refine();
            let argpoint = tab.point();
            let value = objective.dot(&argpoint);
            Ok(Optimum::Bounded { value, argpoint })
        }
    }
}

/// Upper bound `(d+1)L + (2d+1)log2(2d+1)` on the size of a small solution,
/// where `L` is the largest entry size after scaling every row to a
/// primitive integer row.
pub fn witness_size_bound(p: &Polyhedron) -> f64 {
    let d = p.dim() as f64;
    let l = p.constraints().iter().map(|c| c.integer_row_size()).max().unwrap_or(1) as f64;
    (d + 1.0) * l + (2.0 * d + 1.0) * (2.0 * d + 1.0).log2()
}
