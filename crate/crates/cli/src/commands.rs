use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qiso_core::cqg::catalog::builtin_catalog;
use qiso_core::cqg::coaction::verify_coaction;
use qiso_core::cqg::quantum_group::verify_quantum_group;
use qiso_core::envelope::{envelope, verify_universal_property};
use qiso_core::hall::{decide_hall, HallInstance};
use qiso_core::io::{
    coaction_to_json, distribution_from_json, hall_from_json, metric_from_json, quantum_group_from_json,
    quantum_group_to_json, read_coaction, read_distribution, read_hall, read_json, read_metric, read_state,
    state_from_json, write_json,
};
use qiso_core::isometry::{
    check_d, check_lip_p_state, check_lip_p_universal, check_theorem_main, check_theorem_main_state,
    check_winf_universal, IsometryVerdict,
};
use qiso_core::metric::{sublevel_set, FiniteMetricSpace, PairSet};
use qiso_core::transport::{
    feasible_coupling_on, wasserstein_inf, wasserstein_p_cost, Coupling, CouplingOutcome, HallViolation, ProbVector,
    WassersteinOrder,
};
use qiso_core::{ArithmeticMode, Rational, Scalar, DEFAULT_TOL};
use serde_json::{json, Value};

use crate::config::SearchConfig;
use crate::error::{exit, CliError, Result};
use crate::report::{emit_report, render_report, ReportFormat, RunReport};
use crate::run::{run_catalog_verification, search_conjecture_span, search_conjecture_sublevel};

#[derive(Debug, Parser)]
#[command(name = "qiso", version, about = "Isometry checks for finite quantum group actions on finite metric spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Arithmetic for transport and Hall computations.
    #[arg(long, global = true, default_value = "rational")]
    pub mode: ArithmeticMode,

    /// Numerical tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Seed for sampling; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for batch runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Global {
    fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate an input file.
    Validate(ValidateArgs),
    /// W_p between two distributions, with plan and dual potentials.
    Wasserstein(TransportArgs),
    /// W_inf between two distributions, with the threshold certificate.
    Winf(WinfArgs),
    /// Decide whether a coupling supported on a pair set exists.
    CouplingOn(CouplingArgs),
    /// Decide a Hall instance {"mu", "nu", "pairs"}.
    Hall(HallArgs),
    /// Check an isometry condition for a coaction.
    Check(CheckArgs),
    /// The largest quotient on which a coaction satisfies (D).
    Envelope(EnvelopeArgs),
    /// The built-in catalog of actions.
    Catalog(CatalogArgs),
    /// Counterexample searches.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Metric,
    Distribution,
    Hall,
    Group,
    Coaction,
    State,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    /// Guessed from the fields when absent.
    #[arg(long)]
    pub kind: Option<FileKind>,
    /// Coaction or group file giving the algebra of a state file.
    #[arg(long)]
    pub algebra: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// A real p >= 1 or "inf".
    #[arg(long, default_value = "1")]
    pub p: WassersteinOrder,
}

#[derive(Debug, Args)]
pub struct WinfArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    /// File {"pairs": [[i, j], ...]}.
    #[arg(long, conflicts_with_all = ["space", "sublevel"])]
    pub pairs: Option<PathBuf>,
    /// Metric space whose sublevel set {d <= r} is the support.
    #[arg(long, requires = "sublevel")]
    pub space: Option<PathBuf>,
    #[arg(long, requires = "space")]
    pub sublevel: Option<String>,
}

#[derive(Debug, Args)]
pub struct HallArgs {
    pub file: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    D,
    Lip,
    Winf,
    ThmMain,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Coaction file.
    pub action: PathBuf,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    #[arg(long, default_value = "1")]
    pub p: WassersteinOrder,
    /// Decide for every state (the default).
    #[arg(long, conflicts_with = "state")]
    pub universal: bool,
    /// Decide for the state in this file.
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    /// Coaction file.
    pub action: PathBuf,
    /// Also write the quotient quantum group file here.
    #[arg(long)]
    pub group_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[command(subcommand)]
    pub action: CatalogAction,
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Names, kinds and sizes of the built-in entries.
    List,
    /// Check every condition on the catalog and tally implications.
    Verify(ReportArgs),
    /// Write every built-in entry as a coaction file.
    Export { dir: PathBuf },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// SearchConfig JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// json, csv or markdown; guessed from --out when absent.
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(subcommand)]
    pub which: SearchKind,
}

#[derive(Debug, Subcommand)]
pub enum SearchKind {
    /// Actions with the sublevel coupling property for every state but not (D).
    Sublevel(ReportArgs),
    /// States in the span of isometric states that are not isometric.
    Span(ReportArgs),
}

/// A scalar as JSON: exact values as "p/q" strings, floats as numbers.
fn num<S: Scalar>(x: &S) -> Value {
    if S::EXACT {
        Value::String(x.to_string())
    } else {
        json!(x.to_f64())
    }
}

fn nums<S: Scalar>(xs: &[S]) -> Value {
    Value::Array(xs.iter().map(num).collect())
}

fn plan_json<S: Scalar>(c: &Coupling<S>) -> Value {
    Value::Array(c.plan().iter().map(|r| nums(r)).collect())
}

fn violation_json<S: Scalar>(v: &HallViolation<S>) -> Value {
    json!({
        "subset": v.subset,
        "neighborhood": v.neighborhood,
        "mu_of_subset": num(&v.mu_of_subset),
        "nu_of_neighborhood": num(&v.nu_of_neighborhood),
    })
}

fn emit(global: &Global, v: &Value) -> Result<()> {
    match &global.out {
        Some(path) => write_json(path, v)?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
        }
    }
    Ok(())
}

/// Runs a command and returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    match cli.command {
        Command::Validate(a) => validate(g, &a),
        Command::Wasserstein(a) => match g.mode {
            ArithmeticMode::Rational => wasserstein::<Rational>(g, &a),
            ArithmeticMode::Float => wasserstein::<f64>(g, &a),
        },
        Command::Winf(a) => match g.mode {
            ArithmeticMode::Rational => winf::<Rational>(g, &a.space, &a.mu, &a.nu),
            ArithmeticMode::Float => winf::<f64>(g, &a.space, &a.mu, &a.nu),
        },
        Command::CouplingOn(a) => match g.mode {
            ArithmeticMode::Rational => coupling_on::<Rational>(g, &a),
            ArithmeticMode::Float => coupling_on::<f64>(g, &a),
        },
        Command::Hall(a) => match g.mode {
            ArithmeticMode::Rational => hall::<Rational>(g, &read_hall(&a.file, g.tol())?),
            ArithmeticMode::Float => hall::<f64>(g, &read_hall(&a.file, g.tol())?),
        },
        Command::Check(a) => check(g, &a),
        Command::Envelope(a) => envelope_cmd(g, &a),
        Command::Catalog(a) => catalog(g, a.action),
        Command::Search(a) => match a.which {
            SearchKind::Sublevel(r) => report_cmd(g, &r, search_conjecture_sublevel),
            SearchKind::Span(r) => report_cmd(g, &r, search_conjecture_span),
        },
    }
}

fn guess_kind(v: &Value) -> Result<FileKind> {
    let has = |k: &str| v.get(k).is_some();
    Ok(if has("u") {
        FileKind::Coaction
    } else if has("blocks") {
        FileKind::Group
    } else if has("pairs") {
        FileKind::Hall
    } else if has("mass") {
        FileKind::Distribution
    } else if has("dist") {
        FileKind::Metric
    } else if has("densities") {
        FileKind::State
    } else {
        return Err(CliError::Core(qiso_core::Error::Parse("cannot tell what kind of file this is".into())));
    })
}

fn validate(g: &Global, a: &ValidateArgs) -> Result<i32> {
    let tol = g.tol();
    let v = read_json(&a.file)?;
    let kind = match a.kind {
        Some(k) => k,
        None => guess_kind(&v)?,
    };
    let (label, details, ok) = match kind {
        FileKind::Metric => {
            let n = match g.mode {
                ArithmeticMode::Rational => metric_from_json::<Rational>(&v, tol)?.n(),
                ArithmeticMode::Float => metric_from_json::<f64>(&v, tol)?.n(),
            };
            ("metric", json!({"n": n}), true)
        }
        FileKind::Distribution => {
            let n = match g.mode {
                ArithmeticMode::Rational => distribution_from_json::<Rational>(&v, tol)?.len(),
                ArithmeticMode::Float => distribution_from_json::<f64>(&v, tol)?.len(),
            };
            ("distribution", json!({"n": n}), true)
        }
        FileKind::Hall => {
            let n = match g.mode {
                ArithmeticMode::Rational => hall_from_json::<Rational>(&v, tol)?.mu.len(),
                ArithmeticMode::Float => hall_from_json::<f64>(&v, tol)?.mu.len(),
            };
            ("hall", json!({"n": n}), true)
        }
        FileKind::Group => {
            let loaded = quantum_group_from_json(&v, tol)?;
            let rep = verify_quantum_group(&loaded.group, tol)?;
            let ok = rep.passed();
            ("group", json!({"blocks": loaded.group.algebra().sizes(), "verification": rep}), ok)
        }
        FileKind::Coaction => {
            let action = read_coaction(&a.file, tol)?;
            let qg = verify_quantum_group(action.group(), tol)?;
            let co = verify_coaction(&action, tol, true)?;
            let ok = qg.passed() && co.passed();
            ("coaction", json!({"n": action.n(), "group": qg, "coaction": co}), ok)
        }
        FileKind::State => {
            let Some(src) = &a.algebra else {
                return Err(CliError::Config("a state file needs --algebra <coaction or group file>".into()));
            };
            let sv = read_json(src)?;
            let group = if sv.get("u").is_some() {
                read_coaction(src, tol)?.group_arc().as_ref().clone()
            } else {
                quantum_group_from_json(&sv, tol)?.group
            };
            state_from_json(&v, group.algebra(), tol)?;
            ("state", json!({"blocks": group.algebra().sizes()}), true)
        }
    };
    emit(g, &json!({"kind": label, "valid": ok, "details": details}))?;
    Ok(if ok { exit::OK } else { exit::CONDITION_FAILED })
}

fn load_transport<S: Scalar>(
    g: &Global,
    space: &Path,
    mu: &Path,
    nu: &Path,
) -> Result<(FiniteMetricSpace<S>, ProbVector<S>, ProbVector<S>)> {
    let tol = if S::EXACT { 0.0 } else { g.tol() };
    Ok((read_metric(space, tol)?, read_distribution(mu, tol)?, read_distribution(nu, tol)?))
}

fn wasserstein<S: Scalar>(g: &Global, a: &TransportArgs) -> Result<i32> {
    let p = match a.p {
        WassersteinOrder::Infinite => return winf::<S>(g, &a.space, &a.mu, &a.nu),
        WassersteinOrder::Finite(p) => p,
    };
    let (space, mu, nu) = load_transport::<S>(g, &a.space, &a.mu, &a.nu)?;
    let res = wasserstein_p_cost(&space, &mu, &nu, p)?;
    let cost = space.cost_matrix(p);
    let dual_value = res.duals.evaluate(&mu, &nu);
    let feasible = res.duals.is_feasible(&cost, space.tol());
    emit(
        g,
        &json!({
            "p": p,
            "value": res.value.to_f64().max(0.0).powf(1.0 / p),
            "cost": num(&res.value),
            "plan": plan_json(&res.plan),
            "duals": {"f": nums(&res.duals.f), "g": nums(&res.duals.g)},
            "certificate": {
                "dual_objective": num(&dual_value),
                "dual_feasible": feasible,
                "gap": num(&(res.value.clone() - dual_value)),
                "pivots": res.pivots,
            },
        }),
    )?;
    Ok(exit::OK)
}

fn winf<S: Scalar>(g: &Global, space: &Path, mu: &Path, nu: &Path) -> Result<i32> {
    let (space, mu, nu) = load_transport::<S>(g, space, mu, nu)?;
    let res = wasserstein_inf(&space, &mu, &nu)?;
    emit(
        g,
        &json!({
            "p": "inf",
            "value": num(&res.r),
            "plan": plan_json(&res.plan),
            "certificate": {"below": res.below.as_ref().map(violation_json)},
        }),
    )?;
    Ok(exit::OK)
}

fn parse_pairs(v: &Value, n: usize) -> Result<PairSet> {
    let bad = || CliError::Core(qiso_core::Error::Parse("pairs are [[i, j], ...]".into()));
    let arr = v.get("pairs").and_then(Value::as_array).ok_or_else(bad)?;
    let pairs = arr
        .iter()
        .map(|p| match p.as_array().map(|a| a.as_slice()) {
            Some([i, j]) => Ok((i.as_u64().ok_or_else(bad)? as usize, j.as_u64().ok_or_else(bad)? as usize)),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairSet::from_pairs(n, &pairs)?)
}

fn coupling_on<S: Scalar>(g: &Global, a: &CouplingArgs) -> Result<i32> {
    let tol = if S::EXACT { 0.0 } else { g.tol() };
    let mu: ProbVector<S> = read_distribution(&a.mu, tol)?;
    let nu: ProbVector<S> = read_distribution(&a.nu, tol)?;
    let y = match (&a.pairs, &a.space, &a.sublevel) {
        (Some(p), _, _) => parse_pairs(&read_json(p)?, mu.len())?,
        (None, Some(space), Some(r)) => {
            let space: FiniteMetricSpace<S> = read_metric(space, tol)?;
            let r: S = qiso_core::io::parse_real(&Value::String(r.clone()))?;
            sublevel_set(&space, &r)
        }
        _ => return Err(CliError::Config("give --pairs, or --space with --sublevel".into())),
    };
    match feasible_coupling_on(&mu, &nu, &y, tol)? {
        CouplingOutcome::Feasible(c) => {
            emit(g, &json!({"feasible": true, "plan": plan_json(&c)}))?;
            Ok(exit::OK)
        }
        CouplingOutcome::Infeasible(v) => {
            emit(g, &json!({"feasible": false, "violator": violation_json(&v)}))?;
            Ok(exit::CONDITION_FAILED)
        }
    }
}

fn hall<S: Scalar>(g: &Global, inst: &HallInstance<S>) -> Result<i32> {
    let tol = if S::EXACT { 0.0 } else { g.tol() };
    let v = decide_hall(inst, tol)?;
    emit(
        g,
        &json!({
            "feasible": v.feasible,
            "coupling": v.coupling.as_ref().map(plan_json),
            "violator": v.violator.as_ref().map(violation_json),
        }),
    )?;
    Ok(if v.feasible { exit::OK } else { exit::CONDITION_FAILED })
}

fn check(g: &Global, a: &CheckArgs) -> Result<i32> {
    let tol = g.tol();
    let action = read_coaction(&a.action, tol)?;
    let verdict: IsometryVerdict = match &a.state {
        None => match a.condition {
            ConditionArg::D => check_d(&action, tol),
            ConditionArg::Lip => check_lip_p_universal(&action, a.p, tol)?,
            ConditionArg::Winf => check_winf_universal(&action, tol)?,
            ConditionArg::ThmMain => check_theorem_main(&action, tol)?,
        },
        Some(path) => {
            let psi = read_state(path, action.group().algebra(), tol)?;
            match a.condition {
                ConditionArg::D => {
                    return Err(CliError::Config("(D) is not a per-state condition; drop --state".into()));
                }
                ConditionArg::Lip => check_lip_p_state(&action, &psi, a.p, tol)?,
                ConditionArg::Winf => check_lip_p_state(&action, &psi, WassersteinOrder::Infinite, tol)?,
                ConditionArg::ThmMain => check_theorem_main_state(&action, &psi, tol)?,
            }
        }
    };
    emit(g, &serde_json::to_value(&verdict)?)?;
    Ok(if verdict.holds { exit::OK } else { exit::CONDITION_FAILED })
}

fn envelope_cmd(g: &Global, a: &EnvelopeArgs) -> Result<i32> {
    let tol = g.tol();
    let action = read_coaction(&a.action, tol)?;
    let env = envelope(&action, tol)?;
    let group = quantum_group_to_json(&env.quotient.group);
    let axioms = verify_quantum_group(&env.quotient.group, tol)?;
    let induced_d = check_d(&env.induced_action, tol);
    let universal = verify_universal_property(&action, &env, tol).ok();
    let ok = axioms.passed()
        && induced_d.holds
        && env.quotient.residual <= tol
        && env.intertwining_residual <= tol
        && universal.as_ref().is_none_or(|u| u.failures.is_empty());
    if let Some(path) = &a.group_out {
        write_json(path, &group)?;
    }
    emit(
        g,
        &json!({
            "quotient_group": group,
            "block_map": {
                "surviving": env.quotient.surviving,
                "killed": env.ideal.blocks,
                "generated": env.generated.blocks,
                "embedding": env.quotient.embedding,
            },
            "verification": {
                "passed": ok,
                "iterations": env.iterations,
                "ideal_residual": env.quotient.residual,
                "intertwining_residual": env.intertwining_residual,
                "axioms": axioms,
                "induced_action_d": induced_d,
                "universal_property": universal,
            },
        }),
    )?;
    Ok(if ok { exit::OK } else { exit::CONDITION_FAILED })
}

fn catalog(g: &Global, action: CatalogAction) -> Result<i32> {
    match action {
        CatalogAction::List => {
            let entries: Vec<Value> = builtin_catalog()?
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "kind": e.kind,
                        "n": e.action.n(),
                        "blocks": e.action.group().algebra().sizes(),
                    })
                })
                .collect();
            emit(g, &Value::Array(entries))?;
            Ok(exit::OK)
        }
        CatalogAction::Verify(r) => report_cmd(g, &r, run_catalog_verification),
        CatalogAction::Export { dir } => {
            std::fs::create_dir_all(&dir)?;
            let mut names = Vec::new();
            for (k, e) in builtin_catalog()?.iter().enumerate() {
                let file = format!("{k:02}-{}.json", slug(&e.name));
                write_json(&dir.join(&file), &coaction_to_json(&e.action))?;
                names.push(json!({"name": e.name, "file": file}));
            }
            emit(g, &Value::Array(names))?;
            Ok(exit::OK)
        }
    }
}

fn slug(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

/// Loads the config, applies the global overrides, runs and emits the report.
fn report_cmd(g: &Global, r: &ReportArgs, run: fn(&SearchConfig) -> Result<RunReport>) -> Result<i32> {
    let mut cfg = match &r.config {
        Some(path) => SearchConfig::from_file(path)?,
        None => SearchConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    if g.jobs.is_some() {
        cfg.jobs = g.jobs;
    }
    if g.out.is_some() {
        cfg.output = g.out.clone();
    }
    let report = run(&cfg)?;
    let format = r.format.unwrap_or_else(|| cfg.output.as_deref().map_or(ReportFormat::Json, ReportFormat::from_path));
    match &cfg.output {
        Some(path) => emit_report(&report, format, path)?,
        None => write!(std::io::stdout().lock(), "{}", render_report(&report, format)?)?,
    }
    Ok(if report.passed { exit::OK } else { exit::CONDITION_FAILED })
}
