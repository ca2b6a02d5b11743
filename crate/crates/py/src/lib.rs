//! Python bindings. Instances and certificates travel as their text formats,
//! rationals as `"p/q"` strings.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pafreach::bounded::Verdict;
use pafreach::driver::{solve_instance, verify_instance};
use pafreach::format::{parse_certificate, parse_instance, parse_point, write_certificate, write_instance, Instance, ProblemKind};
use pafreach::ratgeo::RatVector;
use pafreach::reductions::{
    lba_reach_instance, subset_sum_bruteforce as bruteforce, subset_sum_control_instance, subset_sum_reach_instance,
    LbaOptions, SubsetSumInstance, TmSpec,
};

create_exception!(pafreach_py, BudgetExceeded, PyRuntimeError);

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(text: &str) -> PyResult<Instance> {
    parse_instance(text).map_err(value_err)
}

/// Instance text of the subset-sum reach gadget, or the control gadget.
#[pyfunction]
#[pyo3(signature = (b, a, control = false))]
fn generate_subset_sum(b: u64, a: Vec<u64>, control: bool) -> PyResult<String> {
    let ss = SubsetSumInstance::new(b, a).map_err(value_err)?;
    let (red, kind) = if control {
        (subset_sum_control_instance(&ss), ProblemKind::ControlTime)
    } else {
        (subset_sum_reach_instance(&ss), ProblemKind::ReachTime)
    };
    let red = red.map_err(value_err)?;
    Ok(write_instance(&Instance { paf: red.paf, kind, init: red.init, target: red.target, param: red.horizon as u32 }))
}

/// Instance text of the bounded automaton gadget for `word`, a digit string.
#[pyfunction]
#[pyo3(signature = (machine, word, ball = false))]
fn generate_lba(machine: &str, word: &str, ball: bool) -> PyResult<String> {
    let spec = TmSpec::parse(machine).map_err(value_err)?;
    let word = word
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| value_err(format!("bad symbol {c:?} in word"))))
        .collect::<PyResult<Vec<u8>>>()?;
    let red = lba_reach_instance(&spec, &word, LbaOptions { ball }).map_err(value_err)?;
    Ok(write_instance(&Instance {
        paf: red.paf,
        kind: ProblemKind::ReachPrecision,
        init: red.init,
        target: red.target,
        param: red.precision,
    }))
}

/// Returns `(answer, certificate_text)`; the certificate is `None` when the
/// answer carries none. Raises `BudgetExceeded` when the search gives up.
#[pyfunction]
#[pyo3(signature = (instance, budget = None))]
fn solve(py: Python<'_>, instance: &str, budget: Option<usize>) -> PyResult<(String, Option<String>)> {
    let inst = load(instance)?;
    let sol = py.detach(|| solve_instance(&inst, budget)).map_err(|e| {
        if e.is_budget() {
            BudgetExceeded::new_err(e.to_string())
        } else {
            value_err(e)
        }
    })?;
    Ok((sol.answer.to_string(), sol.certificate.as_ref().map(write_certificate)))
}

/// Returns `(valid, reason)`; `reason` is `None` for a valid certificate.
#[pyfunction]
fn verify(instance: &str, certificate: &str) -> PyResult<(bool, Option<String>)> {
    let inst = load(instance)?;
    let cert = parse_certificate(certificate, inst.paf.dim()).map_err(value_err)?;
    Ok(match verify_instance(&inst, &cert).map_err(value_err)? {
        Verdict::Valid => (true, None),
        Verdict::Invalid(reason) => (false, Some(reason)),
    })
}

/// States `x_0 .. x_steps`, each a list of rational strings. `rounded`
/// applies the grid rounding of a precision instance after every step.
#[pyfunction]
#[pyo3(signature = (instance, x0, steps, rounded = false))]
fn simulate(instance: &str, x0: Vec<String>, steps: usize, rounded: bool) -> PyResult<Vec<Vec<String>>> {
    let inst = load(instance)?;
    let toks: Vec<&str> = x0.iter().map(String::as_str).collect();
    let mut x: RatVector = parse_point(0, &toks, inst.paf.dim()).map_err(|e| value_err(e.message))?;
    let precision = if rounded {
        if inst.kind.is_time() {
            return Err(value_err("rounding needs a precision instance"));
        }
        Some(inst.precision_problem().map_err(value_err)?)
    } else {
        None
    };
    let show = |x: &RatVector| x.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    let mut states = vec![show(&x)];
    for k in 0..steps {
        let next = match &precision {
            Some(p) => p.step_rounded(&x).map_err(|e| e.to_string()),
            None => inst.paf.evaluate(&x).map_err(|e| e.to_string()),
        };
        x = next.map_err(|e| value_err(format!("domain error at step {k}: {e}")))?;
        states.push(show(&x));
    }
    Ok(states)
}

/// First subset (1-based indices) summing to `b`, or `None`.
#[pyfunction]
#[pyo3(signature = (b, a, limit = 24))]
fn subset_sum_bruteforce(b: u64, a: Vec<u64>, limit: usize) -> PyResult<Option<Vec<usize>>> {
    let ss = SubsetSumInstance::new(b, a).map_err(value_err)?;
    bruteforce(&ss, limit).map_err(value_err)
}

#[pymodule]
fn pafreach_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_function(wrap_pyfunction!(generate_subset_sum, m)?)?;
    m.add_function(wrap_pyfunction!(generate_lba, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(subset_sum_bruteforce, m)?)?;
    Ok(())
}
