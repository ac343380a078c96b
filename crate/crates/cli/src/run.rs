use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qiso_core::cqg::catalog::{builtin_catalog, random_action_in};
use qiso_core::cqg::coaction::{generated_dimension, verify_coaction};
use qiso_core::cqg::quantum_group::verify_quantum_group;
use qiso_core::cqg::state::{extreme_state, haar_state, random_state, Functional};
use qiso_core::cqg::algebra::reduce_against;
use qiso_core::cqg::{c, CoAction, StateFunctional, C64};
use qiso_core::envelope::envelope;
use qiso_core::io::{coaction_to_json, read_coaction, state_to_json};
use qiso_core::isometry::{
    check_d, check_injectivity, check_lip_p_state, check_lip_p_universal, check_theorem_main, check_theorem_main_state,
    check_winf_universal, Condition, IsometryVerdict,
};
use qiso_core::transport::WassersteinOrder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SearchConfig;
use crate::error::{CliError, Result};
use crate::report::{
    ConditionOutcome, Coverage, Decision, Dossier, EnvelopeSummary, Implication, ImplicationMatrix, InstanceReport,
    InstanceSource, ReportKind, RunReport, SampledCheck, SpanTrace, Timing,
};

pub const INJECTIVE: &str = "injective";

/// One action to examine, with where it came from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub source: InstanceSource,
    pub action: CoAction,
    /// Seed for per-instance sampling.
    pub seed: u64,
}

impl Instance {
    pub fn name(&self) -> &str {
        &self.action.name
    }
}

/// Rejects actions whose structure maps fail their axioms.
pub fn verify_instance(inst: &Instance, tol: f64) -> Result<()> {
    let invalid = |reason: String| CliError::CatalogEntryInvalid { name: inst.name().to_string(), reason };
    let qg = verify_quantum_group(inst.action.group(), tol).map_err(|e| invalid(e.to_string()))?;
    let co = verify_coaction(&inst.action, tol, false).map_err(|e| invalid(e.to_string()))?;
    for rep in [qg, co] {
        if let Some(f) = rep.failures().first() {
            return Err(invalid(format!("{} residual {:.3e}", f.axiom, f.residual)));
        }
    }
    Ok(())
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// The built-in entries, the listed files and the random actions, verified.
pub fn collect_instances(cfg: &SearchConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    if cfg.builtin {
        for e in builtin_catalog()? {
            if cfg.include.is_empty() || cfg.include.iter().any(|s| e.name.contains(s.as_str())) {
                let seed = mix_seed(cfg.seed, out.len() as u64);
                out.push(Instance { source: InstanceSource::Builtin { name: e.name.clone() }, action: e.action, seed });
            }
        }
    }
    for path in &cfg.files {
        let action = read_coaction(path, cfg.tol)?;
        let seed = mix_seed(cfg.seed, out.len() as u64);
        out.push(Instance { source: InstanceSource::File { path: path.clone() }, action, seed });
    }
    for k in 0..cfg.random_actions as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let e = random_action_in(seed, cfg.n_min, cfg.n_max, &cfg.models)?;
        out.push(Instance { source: InstanceSource::Random { seed }, action: e.action, seed: mix_seed(seed, k) });
    }
    for inst in &out {
        verify_instance(inst, cfg.tol)?;
    }
    Ok(out)
}

/// The counit, then alternating random mixed states and random pure states.
pub fn sample_states(action: &CoAction, count: usize, seed: u64) -> Vec<StateFunctional> {
    let alg = action.group().algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![StateFunctional::counit(action.group())];
    for k in 0..count {
        if k % 2 == 0 {
            out.push(random_state(alg, rng.random()));
        } else {
            let block = rng.random_range(0..alg.num_blocks());
            let d = alg.sizes()[block];
            let v = DVector::from_fn(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let norm = v.norm().max(f64::MIN_POSITIVE);
            let v = v / c(norm, 0.0);
            out.push(extreme_state(alg, block, &v, 1e-9).expect("unit vector on an existing block"));
        }
    }
    out
}

/// Outcome of one condition: exact, or a per-state fallback after a size guard.
struct Checked {
    outcome: ConditionOutcome,
    verdict: Option<IsometryVerdict>,
    sampled: Option<SampledCheck>,
}

fn check_or_sample(
    label: &str,
    exact: Result<IsometryVerdict>,
    states: &[StateFunctional],
    per_state: impl Fn(&StateFunctional) -> Result<IsometryVerdict>,
) -> Result<Checked> {
    match exact {
        Ok(v) => Ok(Checked {
            outcome: ConditionOutcome { label: label.into(), holds: Some(v.holds) },
            verdict: Some(v),
            sampled: None,
        }),
        Err(CliError::Core(qiso_core::Error::SizeGuardExceeded { .. })) => {
            let mut failures = 0;
            let mut first_failure = None;
            for psi in states {
                let v = per_state(psi)?;
                if !v.holds {
                    failures += 1;
                    first_failure.get_or_insert(v);
                }
            }
            // a failing state refutes the universal condition; passes decide nothing
            let holds = if failures > 0 { Some(false) } else { None };
            Ok(Checked {
                outcome: ConditionOutcome { label: label.into(), holds },
                verdict: first_failure,
                sampled: Some(SampledCheck { label: label.into(), states: states.len(), failures }),
            })
        }
        Err(e) => Err(e),
    }
}

fn lip_label(order: WassersteinOrder) -> String {
    Condition::lip(order).to_string()
}

#[derive(Default)]
struct Collected {
    outcomes: Vec<ConditionOutcome>,
    verdicts: Vec<IsometryVerdict>,
    sampled: Vec<SampledCheck>,
}

impl Collected {
    fn push(&mut self, c: Checked) {
        self.outcomes.push(c.outcome);
        self.verdicts.extend(c.verdict);
        self.sampled.extend(c.sampled);
    }

    fn push_exact(&mut self, v: IsometryVerdict) {
        self.outcomes.push(ConditionOutcome { label: v.condition.to_string(), holds: Some(v.holds) });
        self.verdicts.push(v);
    }

    fn decision(&self) -> Decision {
        if self.sampled.iter().any(|s| s.failures == 0) {
            Decision::UndecidedExactSampledOnly
        } else {
            Decision::Exact
        }
    }

    fn into_report(self, inst: &Instance) -> InstanceReport {
        let decision = self.decision();
        let alg = inst.action.group().algebra();
        InstanceReport {
            name: inst.name().to_string(),
            source: inst.source.clone(),
            n: inst.action.n(),
            algebra_dimension: alg.dim(),
            blocks: alg.sizes().to_vec(),
            decision,
            outcomes: self.outcomes,
            verdicts: self.verdicts,
            sampled: self.sampled,
            injective: None,
            envelope: None,
            span: Vec::new(),
        }
    }
}

fn lip_checked(inst: &Instance, order: WassersteinOrder, states: &[StateFunctional], tol: f64) -> Result<Checked> {
    let a = &inst.action;
    check_or_sample(
        &lip_label(order),
        check_lip_p_universal(a, order, tol).map_err(Into::into),
        states,
        |psi| check_lip_p_state(a, psi, order, tol).map_err(Into::into),
    )
}

fn theorem_main_checked(inst: &Instance, states: &[StateFunctional], tol: f64) -> Result<Checked> {
    let a = &inst.action;
    check_or_sample(
        &Condition::TheoremMain.to_string(),
        check_theorem_main(a, tol).map_err(Into::into),
        states,
        |psi| check_theorem_main_state(a, psi, tol).map_err(Into::into),
    )
}

fn verify_one(inst: &Instance, cfg: &SearchConfig, orders: &[WassersteinOrder]) -> Result<InstanceReport> {
    let tol = cfg.tol;
    let a = &inst.action;
    let states = sample_states(a, cfg.state_samples, inst.seed);
    let mut col = Collected::default();
    col.push_exact(check_d(a, tol));
    for &order in orders {
        col.push(lip_checked(inst, order, &states, tol)?);
    }
    col.push(theorem_main_checked(inst, &states, tol)?);
    let injective = check_injectivity(a, tol);
    col.outcomes.push(ConditionOutcome { label: INJECTIVE.into(), holds: Some(injective) });
    let env = envelope(a, tol).ok().map(|e| EnvelopeSummary {
        dimension: e.dimension(),
        algebra_dimension: a.group().dim(),
        generated_blocks: e.generated.blocks.iter().copied().collect(),
        killed_blocks: e.ideal.blocks.iter().copied().collect(),
        iterations: e.iterations,
        intertwining_residual: e.intertwining_residual,
    });
    let mut rep = col.into_report(inst);
    rep.injective = Some(injective);
    rep.envelope = env;
    Ok(rep)
}

fn imp(a: &str, b: &str) -> Implication {
    Implication { premise: a.into(), conclusion: b.into() }
}

/// The implications every finite-dimensional action must satisfy.
fn tower(orders: &[WassersteinOrder]) -> Vec<Implication> {
    let d = Condition::D.to_string();
    let tm = Condition::TheoremMain.to_string();
    let labels: Vec<String> = orders.iter().map(|&o| lip_label(o)).collect();
    let mut out: Vec<Implication> = labels.iter().map(|l| imp(&d, l)).collect();
    // orders are increasing, so Lip_p implies Lip_q for every earlier q
    for (i, hi) in labels.iter().enumerate() {
        for lo in &labels[..i] {
            out.push(imp(hi, lo));
        }
    }
    out.push(imp(&d, &tm));
    if orders.contains(&WassersteinOrder::Infinite) {
        out.push(imp(&tm, &lip_label(WassersteinOrder::Infinite)));
    }
    out.push(imp(&d, INJECTIVE));
    out
}

/// Runs `work` over instances in chunks on a pool of `cfg.jobs` threads,
/// stopping between chunks once the time budget is spent.
fn process<T: Send>(
    cfg: &SearchConfig,
    instances: &[Instance],
    work: impl Fn(&Instance) -> Result<T> + Sync,
) -> Result<(Vec<T>, Vec<u64>, bool)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let start = Instant::now();
    let mut results = Vec::with_capacity(instances.len());
    let mut times = Vec::with_capacity(instances.len());
    let mut truncated = false;
    for chunk in instances.chunks(cfg.chunk_size) {
        if cfg.time_budget_secs.is_some_and(|b| start.elapsed().as_secs_f64() >= b) {
            truncated = true;
            break;
        }
        let done: Vec<Result<(T, u64)>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|inst| {
                    let t = Instant::now();
                    work(inst).map(|r| (r, t.elapsed().as_millis() as u64))
                })
                .collect()
        });
        for r in done {
            let (r, ms) = r?;
            results.push(r);
            times.push(ms);
        }
    }
    Ok((results, times, truncated))
}

fn assemble(
    kind: ReportKind,
    cfg: &SearchConfig,
    conditions: &[String],
    expected: Vec<Implication>,
    instances: Vec<InstanceReport>,
    dossiers: Vec<Dossier>,
    truncated: bool,
    timing: Timing,
) -> RunReport {
    let matrix = ImplicationMatrix::build(conditions, expected, &instances);
    let exact = instances.iter().filter(|i| i.decision == Decision::Exact).count();
    let coverage = Coverage {
        instances: instances.len(),
        exact,
        sampled_only: instances.len() - exact,
        hits: dossiers.len(),
        truncated,
    };
    let passed = matrix.violations.is_empty();
    RunReport { kind, config: cfg.clone(), instances, matrix, dossiers, coverage, passed, timing }
}

fn conditions_for(orders: &[WassersteinOrder]) -> Vec<String> {
    let mut c = vec![Condition::D.to_string()];
    c.extend(orders.iter().map(|&o| lip_label(o)));
    c.push(Condition::TheoremMain.to_string());
    c.push(INJECTIVE.into());
    c
}

/// Every condition on every instance, tallied against the implication tower.
pub fn run_catalog_verification(cfg: &SearchConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let orders = cfg.orders()?;
    let instances = collect_instances(cfg)?;
    let (reports, per_instance_ms, truncated) = process(cfg, &instances, |inst| verify_one(inst, cfg, &orders))?;
    let timing = Timing { total_ms: start.elapsed().as_millis() as u64, per_instance_ms };
    Ok(assemble(
        ReportKind::CatalogVerification,
        cfg,
        &conditions_for(&orders),
        tower(&orders),
        reports,
        Vec::new(),
        truncated,
        timing,
    ))
}

fn dossier(inst: &Instance, reason: String, state: Option<serde_json::Value>, verdicts: Vec<IsometryVerdict>) -> Dossier {
    Dossier {
        instance: inst.name().to_string(),
        source: inst.source.clone(),
        reason,
        faithful: generated_dimension(&inst.action, 1e-9) == inst.action.group().dim(),
        seed: inst.seed,
        action: coaction_to_json(&inst.action),
        state,
        verdicts,
    }
}

/// Looks for actions whose sublevel-set coupling property holds for every
/// state while (D) fails.
pub fn search_conjecture_sublevel(cfg: &SearchConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let tol = cfg.tol;
    let instances = collect_instances(cfg)?;
    let inf = WassersteinOrder::Infinite;
    let (results, per_instance_ms, truncated) = process(cfg, &instances, |inst| {
        let a = &inst.action;
        let states = sample_states(a, cfg.state_samples, inst.seed);
        let mut col = Collected::default();
        let d = check_d(a, tol);
        let d_holds = d.holds;
        col.push_exact(d);
        col.push(check_or_sample(
            &lip_label(inf),
            check_winf_universal(a, tol).map_err(Into::into),
            &states,
            |psi| check_lip_p_state(a, psi, inf, tol).map_err(Into::into),
        )?);
        col.push(theorem_main_checked(inst, &states, tol)?);
        let winf_holds = col.outcomes[1].holds;
        let rep = col.into_report(inst);
        let hit = (winf_holds == Some(true) && !d_holds).then(|| {
            dossier(inst, "sublevel coupling property holds for every state but (D) fails".into(), None, rep.verdicts.clone())
        });
        Ok((rep, hit))
    })?;
    let (reports, hits): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let conditions =
        [Condition::D.to_string(), lip_label(inf), Condition::TheoremMain.to_string()].to_vec();
    let expected = vec![
        imp(&conditions[0], &conditions[1]),
        imp(&conditions[0], &conditions[2]),
        imp(&conditions[2], &conditions[1]),
    ];
    let timing = Timing { total_ms: start.elapsed().as_millis() as u64, per_instance_ms };
    Ok(assemble(
        ReportKind::SublevelSearch,
        cfg,
        &conditions,
        expected,
        reports,
        hits.into_iter().flatten().collect(),
        truncated,
        timing,
    ))
}

/// Relative residual below which a functional counts as inside the span.
const SPAN_TOL: f64 = 1e-8;

/// Label of the span-closure outcome at `order`.
pub fn span_label(order: WassersteinOrder) -> String {
    format!("span-closed {}", lip_label(order))
}

/// Candidate states: counit, Haar state, characters and pure states on
/// one-dimensional blocks, then random samples.
fn span_candidates(action: &CoAction, count: usize, seed: u64, tol: f64) -> Vec<StateFunctional> {
    let qg = action.group();
    let alg = qg.algebra();
    let mut out = sample_states(action, count, seed);
    if let Ok(h) = haar_state(qg, tol) {
        out.push(h.state);
    }
    let one = DVector::from_element(1, c(1.0, 0.0));
    for (k, &s) in alg.sizes().iter().enumerate() {
        if s == 1 {
            out.push(extreme_state(alg, k, &one, 1e-9).expect("unit vector"));
        }
    }
    out
}

fn state_of(alg: &qiso_core::cqg::BlockAlgebra, values: DVector<C64>, tol: f64) -> Option<StateFunctional> {
    let raw = StateFunctional::from_functional(Functional::new(values));
    let dens: Vec<DMatrix<C64>> = raw.densities(alg);
    StateFunctional::from_densities(alg, dens, tol).ok()
}

fn span_one(inst: &Instance, cfg: &SearchConfig, order: WassersteinOrder) -> Result<(SpanTrace, Option<Dossier>)> {
    let tol = cfg.tol;
    let a = &inst.action;
    let alg = a.group().algebra();
    let candidates = span_candidates(a, cfg.state_samples, inst.seed, tol);
    let mut isometric: Vec<StateFunctional> = Vec::new();
    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut dimension_trace = Vec::new();
    let mut rejected = Vec::new();
    for psi in &candidates {
        let verdict = check_lip_p_state(a, psi, order, tol)?;
        if verdict.holds {
            if let Some(b) = reduce_against(&basis, &psi.functional().values, SPAN_TOL) {
                basis.push(b);
            }
            dimension_trace.push(basis.len());
            isometric.push(psi.clone());
        } else {
            rejected.push((psi, verdict));
        }
    }
    let mut trace = SpanTrace {
        order: order.to_string(),
        sampled: candidates.len(),
        isometric: isometric.len(),
        dimension_trace,
        in_span_tested: 0,
        in_span_not_positive: 0,
        in_span_failures: 0,
    };
    let reason = format!("state in the span of {0}-isometric states fails {0}", lip_label(order));
    let mut hit = None;
    // a rejected candidate inside the span is already a failing in-span state
    for (psi, verdict) in rejected {
        if reduce_against(&basis, &psi.functional().values, SPAN_TOL).is_none() {
            trace.in_span_tested += 1;
            trace.in_span_failures += 1;
            if hit.is_none() {
                hit = Some(dossier(inst, reason.clone(), Some(state_to_json(psi, alg)), vec![verdict]));
            }
        }
    }
    if isometric.len() < 2 {
        return Ok((trace, hit));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x5151);
    for _ in 0..cfg.span_samples {
        // affine combination with some negative weights, normalized to mass 1
        let k = rng.random_range(2..=isometric.len().min(4));
        let picks: Vec<usize> = (0..k).map(|_| rng.random_range(0..isometric.len())).collect();
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(-0.5..1.0)).collect();
        let total: f64 = weights.iter().sum();
        if total.abs() < 0.1 {
            continue;
        }
        let mut v = DVector::<C64>::zeros(alg.dim());
        for (&i, &w) in picks.iter().zip(&weights) {
            v += &isometric[i].functional().values * c(w / total, 0.0);
        }
        let Some(phi) = state_of(alg, v, 1e-9) else {
            trace.in_span_not_positive += 1;
            continue;
        };
        trace.in_span_tested += 1;
        let verdict = check_lip_p_state(a, &phi, order, tol)?;
        if !verdict.holds {
            trace.in_span_failures += 1;
            if hit.is_none() {
                hit = Some(dossier(inst, reason.clone(), Some(state_to_json(&phi, alg)), vec![verdict]));
            }
        }
    }
    Ok((trace, hit))
}

/// Samples isometric states, traces the dimension of their span and tests
/// states inside that span.
pub fn search_conjecture_span(cfg: &SearchConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let orders = cfg.orders()?;
    let instances = collect_instances(cfg)?;
    let (results, per_instance_ms, truncated) = process(cfg, &instances, |inst| {
        let mut col = Collected::default();
        col.push_exact(check_d(&inst.action, cfg.tol));
        let mut traces = Vec::new();
        let mut hits = Vec::new();
        for &order in &orders {
            let (trace, hit) = span_one(inst, cfg, order)?;
            let holds = (trace.in_span_tested > 0).then_some(trace.in_span_failures == 0);
            col.outcomes.push(ConditionOutcome { label: span_label(order), holds });
            traces.push(trace);
            hits.extend(hit);
        }
        let mut rep = col.into_report(inst);
        rep.span = traces;
        Ok((rep, hits))
    })?;
    let (reports, hits): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut conditions = vec![Condition::D.to_string()];
    conditions.extend(orders.iter().map(|&o| span_label(o)));
    let timing = Timing { total_ms: start.elapsed().as_millis() as u64, per_instance_ms };
    Ok(assemble(
        ReportKind::SpanSearch,
        cfg,
        &conditions,
        Vec::new(),
        reports,
        hits.into_iter().flatten().collect(),
        truncated,
        timing,
    ))
}
