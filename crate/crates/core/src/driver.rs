//! Instance-level entry points shared by the command line and the bindings:
//! dispatch on the problem kind, solve, and check certificates.

use std::fmt;

use thiserror::Error;

use crate::bounded::{
    control_region_time, reach_region_time, verify_control_counterexample, verify_reach_certificate,
    BoundedError, ControlCounterexample, ControlOutcome, ReachCertificate, ReachOutcome, Verdict,
    DEFAULT_NODE_BUDGET,
};
use crate::format::{Certificate, Instance, ProblemKind};
use crate::paf::Signature;
use crate::precision::{PrecisionBudget, PrecisionControl, PrecisionError, PrecisionReach, Terminal};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Bounded(#[from] BoundedError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("certificate is for {certificate}, instance is {instance}")]
    KindMismatch { certificate: ProblemKind, instance: ProblemKind },
}

impl DriverError {
    /// True when a search budget ran out; the question stays open.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            DriverError::Bounded(BoundedError::BudgetExceeded { .. })
                | DriverError::Precision(PrecisionError::CellBudget { .. } | PrecisionError::CornerBudget { .. })
        )
    }
}

/// A definite answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Reachable { t: usize },
    Unreachable,
    Controlled,
    Refuted,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Reachable { t } => write!(f, "REACHABLE t={t}"),
            Answer::Unreachable => f.write_str("UNREACHABLE"),
            Answer::Controlled => f.write_str("CONTROLLED"),
            Answer::Refuted => f.write_str("REFUTED"),
        }
    }
}

/// An answer with its certificate; negative reach and positive control
/// answers carry none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub answer: Answer,
    pub certificate: Option<Certificate>,
}

fn names(inst: &Instance, sig: &Signature) -> Vec<String> {
    inst.paf.signature_names(sig).into_iter().map(str::to_string).collect()
}

/// Decides the instance. `budget` caps search nodes for time problems and
/// both cells and corners for precision problems.
pub fn solve_instance(inst: &Instance, budget: Option<usize>) -> Result<Solution, DriverError> {
    let (answer, certificate) = match inst.kind {
        ProblemKind::ReachTime => {
            match reach_region_time(&inst.bounded_problem(), budget.unwrap_or(DEFAULT_NODE_BUDGET))? {
                ReachOutcome::Reachable(c) => (
                    Answer::Reachable { t: c.t },
                    Some(Certificate::Reach { t: c.t, signature: names(inst, &c.signature), witness: c.witness }),
                ),
                ReachOutcome::Unreachable => (Answer::Unreachable, None),
            }
        }
        ProblemKind::ControlTime => {
            match control_region_time(&inst.bounded_problem(), budget.unwrap_or(DEFAULT_NODE_BUDGET))? {
                ControlOutcome::Controlled => (Answer::Controlled, None),
                ControlOutcome::Refuted(c) => (
                    Answer::Refuted,
                    Some(Certificate::ControlRefutation { signature: names(inst, &c.signature), witness: c.witness }),
                ),
            }
        }
        ProblemKind::ReachPrecision | ProblemKind::ControlPrecision => {
            let p = inst.precision_problem()?;
            let b = budget.map_or_else(PrecisionBudget::default, |n| PrecisionBudget { max_cells: n, max_corners: n });
            if inst.kind == ProblemKind::ReachPrecision {
                match p.reach_region_precision(&b)? {
                    PrecisionReach::Reachable { t, trajectory } => (
                        Answer::Reachable { t },
                        Some(Certificate::PrecisionReach { t, states: trajectory.states().cloned().collect() }),
                    ),
                    PrecisionReach::Unreachable => (Answer::Unreachable, None),
                }
            } else {
                match p.control_region_precision(&b)? {
                    PrecisionControl::Controlled => (Answer::Controlled, None),
                    PrecisionControl::Refuted { cell, trajectory } => {
                        let Terminal::Cycle { entry } = trajectory.terminal else {
                            unreachable!("refutations end in a cycle");
                        };
                        let states = trajectory.states().cloned().collect();
                        (Answer::Refuted, Some(Certificate::PrecisionRefutation { cell, entry, states }))
                    }
                }
            }
        }
    };
    Ok(Solution { answer, certificate })
}

fn to_signature(inst: &Instance, names: &[String]) -> Result<Signature, String> {
    names
        .iter()
        .map(|n| inst.paf.index_of(n).map_err(|_| format!("unknown piece {n}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Signature)
}

/// Replays a certificate against the instance it claims to answer.
pub fn verify_instance(inst: &Instance, cert: &Certificate) -> Result<Verdict, DriverError> {
    if cert.kind() != inst.kind {
        return Err(DriverError::KindMismatch { certificate: cert.kind(), instance: inst.kind });
    }
    Ok(match cert {
        Certificate::Reach { t, signature, witness } => match to_signature(inst, signature) {
            Ok(signature) => verify_reach_certificate(
                &inst.bounded_problem(),
                &ReachCertificate { t: *t, signature, witness: witness.clone() },
            ),
            Err(m) => Verdict::Invalid(m),
        },
        Certificate::ControlRefutation { signature, witness } => match to_signature(inst, signature) {
            Ok(signature) => verify_control_counterexample(
                &inst.bounded_problem(),
                &ControlCounterexample { signature, witness: witness.clone() },
            ),
            Err(m) => Verdict::Invalid(m),
        },
        Certificate::PrecisionReach { t, states } => {
            if states.len() != t + 1 {
                Verdict::Invalid("trajectory length".into())
            } else {
                inst.precision_problem()?.verify_reach_trajectory(states)
            }
        }
        Certificate::PrecisionRefutation { cell, entry, states } => {
            let p = inst.precision_problem()?;
            match p.verify_cycle_trajectory(states, *entry) {
                Verdict::Valid if states.len() > 1 && p.grid.cell_of(&states[1]) != *cell => {
                    Verdict::Invalid("cell mismatch".into())
                }
                v => v,
            }
        }
    })
}
