//! Command-line front end: generators, solvers, verifiers, structural checks
//! and simulation over the text formats of [`crate::format`].
//!
//! Exit codes: 0 for a definite answer, 1 when verification or a structural
//! check fails, 2 for usage, parse and budget errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounded::Verdict;
use crate::driver::{solve_instance, verify_instance};
use crate::format::{
    parse_certificate, parse_instance, parse_manifest, parse_point, write_certificate, write_instance,
    write_manifest, Instance, Manifest, ProblemKind,
};
use crate::paf::FlowRule;
use crate::ratgeo::RatVector;
use crate::reductions::{
    lba_reach_instance, subset_sum_control_instance, subset_sum_reach_instance, LbaOptions, SubsetSumInstance,
    SubsetSumReduction, TmSpec,
};

/// Environment variable overriding the default search budget.
pub const BUDGET_ENV: &str = "PAFREACH_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pafreach", version, about = "Exact reachability for piecewise-affine maps on the unit cube")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a gadget instance and its manifest.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Decide an instance; writes a certificate for positive answers.
    Solve {
        instance: PathBuf,
        /// Certificate path, default `<instance>.cert`.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Search budget (nodes, cells and corners); default from the
        /// environment variable PAFREACH_BUDGET.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Replay a certificate against an instance.
    Verify { instance: PathBuf, certificate: PathBuf },
    /// Continuity, range, overlap, coverage and (with a manifest) stability.
    Check {
        instance: PathBuf,
        /// Manifest with flow rules, default `<instance>.manifest` if present.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Random points for the coverage sampler of total PAFs.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Print a trajectory, one `step x1 .. xd` line per step.
    Simulate {
        instance: PathBuf,
        /// Start point, coordinates separated by spaces or commas.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        steps: usize,
        /// Round every iterate down to the instance's grid.
        #[arg(long)]
        rounded: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Reachability gadget for a SUBSET-SUM instance.
    SubsetsumReach(SubsetArgs),
    /// Control gadget for a SUBSET-SUM instance.
    SubsetsumControl(SubsetArgs),
    /// Fixed-precision gadget for a linear bounded automaton and a word.
    Lba(LbaArgs),
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    /// Target sum B.
    #[arg(short = 'B', long = "sum")]
    pub b: u64,
    /// Comma-separated weights A_1..A_n (may be empty).
    #[arg(short = 'A', long = "weights", default_value = "")]
    pub a: String,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LbaArgs {
    /// Machine file.
    #[arg(long)]
    pub machine: PathBuf,
    /// Input word as a digit string (may be empty).
    #[arg(long, default_value = "")]
    pub word: String,
    /// Start from a small box above the initial encoding.
    #[arg(long)]
    pub ball: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

struct Fail(i32, String);

impl Fail {
    fn error(msg: impl Into<String>) -> Self {
        Fail(EXIT_ERROR, msg.into())
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::error(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Fail> {
    parse_instance(&read(path)?).map_err(|e| Fail::error(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Runs a parsed command line; returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Generate { kind } => generate(kind, out),
        Command::Solve { instance, certificate, budget } => solve(&instance, certificate, budget, out),
        Command::Verify { instance, certificate } => verify(&instance, &certificate, out),
        Command::Check { instance, manifest, samples } => check(&instance, manifest, samples, out),
        Command::Simulate { instance, x0, steps, rounded } => simulate(&instance, &x0, steps, rounded, out),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn parse_weights(s: &str) -> Result<Vec<u64>, Fail> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Fail::error(format!("bad weight {t:?}, expected a natural number"))))
        .collect()
}

fn parse_word(s: &str) -> Result<Vec<u8>, Fail> {
    s.chars()
        .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| Fail::error(format!("bad symbol {c:?} in word"))))
        .collect()
}

fn subset_manifest(red: &SubsetSumReduction, generator: &str) -> Manifest {
    let g = red.params;
    let a: Vec<String> = red.instance.a.iter().map(u64::to_string).collect();
    let params = vec![
        ("B".to_string(), g.b.to_string()),
        ("A".to_string(), a.join(",")),
        ("n".to_string(), g.n.to_string()),
        ("p".to_string(), g.p.to_string()),
        ("omega".to_string(), g.omega.to_string()),
        ("q".to_string(), g.q.to_string()),
        ("beta".to_string(), crate::reductions::subset_sum::BETA.to_string()),
        ("horizon".to_string(), red.horizon.to_string()),
    ];
    let flow = red
        .flow
        .iter()
        .enumerate()
        .map(|(r, rule)| {
            let target = format!("R{}", (r + 1).min(g.n + 1));
            (target, rule.sources.iter().map(|&s| red.paf.piece(s).name.clone()).collect())
        })
        .collect();
    Manifest { generator: generator.to_string(), params, regions: red.regions.clone(), flow }
}

fn generate(kind: GenerateKind, out: &mut dyn Write) -> Result<i32, Fail> {
    let (path, inst, manifest) = match kind {
        GenerateKind::SubsetsumReach(args) => {
            let ss = SubsetSumInstance::new(args.b, parse_weights(&args.a)?).map_err(|e| Fail::error(e.to_string()))?;
            let red = subset_sum_reach_instance(&ss).map_err(|e| Fail::error(e.to_string()))?;
            let inst = Instance {
                paf: red.paf.clone(),
                kind: ProblemKind::ReachTime,
                init: red.init.clone(),
                target: red.target.clone(),
                param: red.horizon as u32,
            };
            (args.out, inst, subset_manifest(&red, "subsetsum-reach"))
        }
        GenerateKind::SubsetsumControl(args) => {
            let ss = SubsetSumInstance::new(args.b, parse_weights(&args.a)?).map_err(|e| Fail::error(e.to_string()))?;
            let red = subset_sum_control_instance(&ss).map_err(|e| Fail::error(e.to_string()))?;
            let inst = Instance {
                paf: red.paf.clone(),
                kind: ProblemKind::ControlTime,
                init: red.init.clone(),
                target: red.target.clone(),
                param: red.horizon as u32,
            };
            (args.out, inst, subset_manifest(&red, "subsetsum-control"))
        }
        GenerateKind::Lba(args) => {
            let spec = TmSpec::parse(&read(&args.machine)?)
                .map_err(|e| Fail::error(format!("{}: {e}", args.machine.display())))?;
            let word = parse_word(&args.word)?;
            let red = lba_reach_instance(&spec, &word, LbaOptions { ball: args.ball })
                .map_err(|e| Fail::error(e.to_string()))?;
            let inst = Instance {
                paf: red.paf.clone(),
                kind: ProblemKind::ReachPrecision,
                init: red.init.clone(),
                target: red.target.clone(),
                param: red.precision,
            };
            let params = vec![
                ("word".to_string(), args.word.clone()),
                ("beta".to_string(), spec.beta().to_string()),
                ("gamma".to_string(), red.gamma.to_string()),
                ("m".to_string(), spec.code_len().to_string()),
                ("precision".to_string(), red.precision.to_string()),
                ("states".to_string(), spec.states().join(",")),
                ("ball".to_string(), args.ball.to_string()),
            ];
            let manifest = Manifest { generator: "lba".into(), params, regions: red.boxes.clone(), flow: vec![] };
            (args.out, inst, manifest)
        }
    };
    write_file(&path, &write_instance(&inst))?;
    let mpath = sidecar(&path, ".manifest");
    write_file(&mpath, &write_manifest(&manifest))?;
    let _ = writeln!(
        out,
        "wrote {} ({} pieces, {} {} {}) and {}",
        path.display(),
        inst.paf.len(),
        inst.kind,
        inst.kind.parameter(),
        inst.param,
        mpath.display()
    );
    Ok(EXIT_OK)
}

fn budget_from(flag: Option<usize>) -> Result<Option<usize>, Fail> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Fail::error(format!("{BUDGET_ENV}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

fn solve(path: &Path, cert_path: Option<PathBuf>, budget: Option<usize>, out: &mut dyn Write) -> Result<i32, Fail> {
    let inst = load_instance(path)?;
    let budget = budget_from(budget)?;
    let cert_path = cert_path.unwrap_or_else(|| sidecar(path, ".cert"));
    let sol = match solve_instance(&inst, budget) {
        Ok(sol) => sol,
        Err(e) if e.is_budget() => {
            let _ = writeln!(out, "BUDGET-EXCEEDED");
            return Err(Fail::error(e.to_string()));
        }
        Err(e) => return Err(Fail::error(e.to_string())),
    };
    let _ = writeln!(out, "{}", sol.answer);
    if let Some(c) = sol.certificate {
        write_file(&cert_path, &write_certificate(&c))?;
        let _ = writeln!(out, "certificate {}", cert_path.display());
    }
    Ok(EXIT_OK)
}

fn verify(path: &Path, cert_path: &Path, out: &mut dyn Write) -> Result<i32, Fail> {
    let inst = load_instance(path)?;
    let cert = parse_certificate(&read(cert_path)?, inst.paf.dim())
        .map_err(|e| Fail::error(format!("{}: {e}", cert_path.display())))?;
    let verdict = verify_instance(&inst, &cert).map_err(|e| Fail::error(e.to_string()))?;
    match verdict {
        Verdict::Valid => {
            let _ = writeln!(out, "VALID");
            Ok(EXIT_OK)
        }
        Verdict::Invalid(reason) => {
            let _ = writeln!(out, "INVALID: {reason}");
            Ok(EXIT_FAILED)
        }
    }
}

fn check(path: &Path, manifest: Option<PathBuf>, samples: usize, out: &mut dyn Write) -> Result<i32, Fail> {
    let inst = load_instance(path)?;
    let f = &inst.paf;
    let mut ok = true;
    let mut report = |label: &str, lines: Vec<String>, out: &mut dyn Write| {
        if lines.is_empty() {
            let _ = writeln!(out, "{label}: ok");
        } else {
            ok = false;
            let _ = writeln!(out, "{label}: {} violation(s)", lines.len());
            for l in lines {
                let _ = writeln!(out, "  {l}");
            }
        }
    };
    let name = |i: usize| f.piece(i).name.as_str();
    let cont = f.check_continuity();
    report(
        "continuity",
        cont.iter().map(|v| format!("{} {} at {}", name(v.piece_i), name(v.piece_j), v.witness)).collect(),
        out,
    );
    let range = f.check_range();
    report(
        "range",
        range
            .iter()
            .map(|v| format!("{} coordinate {} reaches {} at {}", name(v.piece), v.coordinate, v.extremum, v.point))
            .collect(),
        out,
    );
    let overlap = f.check_disjoint_interiors();
    report(
        "interiors",
        overlap.iter().map(|v| format!("{} {} at {}", name(v.piece_i), name(v.piece_j), v.witness)).collect(),
        out,
    );
    match f.domain() {
        crate::paf::DomainKind::Total => {
            let gaps = f.check_coverage(samples, 0);
            report("coverage", gaps.iter().map(|x| format!("uncovered {x}")).collect(), out);
        }
        crate::paf::DomainKind::Partial => {
            let _ = writeln!(out, "coverage: skipped (partial domain)");
        }
    }
    let mpath = manifest.or_else(|| Some(sidecar(path, ".manifest")).filter(|p| p.exists()));
    match mpath {
        None => {
            let _ = writeln!(out, "stability: skipped (no manifest)");
        }
        Some(mp) => {
            let m = parse_manifest(&read(&mp)?, f.dim()).map_err(|e| Fail::error(format!("{}: {e}", mp.display())))?;
            let mut rules = Vec::new();
            for (target, sources) in &m.flow {
                let region = m
                    .regions
                    .iter()
                    .find(|r| &r.name == target)
                    .ok_or_else(|| Fail::error(format!("flow target {target} is not a manifest region")))?;
                let sources = sources
                    .iter()
                    .map(|s| f.index_of(s))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Fail::error(e.to_string()))?;
                rules.push(FlowRule { sources, target: region.region.clone() });
            }
            if rules.is_empty() {
                let _ = writeln!(out, "stability: skipped (no flow rules)");
            } else {
                let v = f.check_stability(&rules).map_err(|e| Fail::error(e.to_string()))?;
                report(
                    "stability",
                    v.iter()
                        .map(|s| format!("{} leaves {} (row {}, value {}) at {}", name(s.piece), m.flow[s.rule].0, s.row, s.value, s.point))
                        .collect(),
                    out,
                );
            }
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn simulate(path: &Path, x0: &str, steps: usize, rounded: bool, out: &mut dyn Write) -> Result<i32, Fail> {
    let inst = load_instance(path)?;
    let toks: Vec<&str> = x0.split([' ', ',']).filter(|t| !t.is_empty()).collect();
    let x0: RatVector = parse_point(0, &toks, inst.paf.dim()).map_err(|e| Fail::error(format!("x0: {}", e.message)))?;
    let precision = if rounded {
        if inst.kind.is_time() {
            return Err(Fail::error("--rounded needs a precision instance"));
        }
        Some(inst.precision_problem().map_err(|e| Fail::error(e.to_string()))?)
    } else {
        None
    };
    let emit = |out: &mut dyn Write, k: usize, x: &RatVector| {
        let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{k} {}", coords.join(" "));
    };
    let mut x = x0;
    emit(out, 0, &x);
    for k in 1..=steps {
        let next = match &precision {
            Some(p) => p.step_rounded(&x).map_err(|e| e.to_string()),
            None => inst.paf.evaluate(&x).map_err(|e| e.to_string()),
        };
        x = next.map_err(|e| Fail::error(format!("domain error at step {}: {e}", k - 1)))?;
        emit(out, k, &x);
    }
    Ok(EXIT_OK)
}
