//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use qiso_core::cqg::catalog::{builtin_catalog, isometric_permutations, random_action, CatalogEntry, EntryKind};
use qiso_core::cqg::{verify_coaction, verify_quantum_group, CoAction, QuantumGroup};
use qiso_core::envelope::{annihilator_convolution_check, envelope, verify_universal_property};
use qiso_core::hall::{decide_hall, hall_condition, perfect_matching, HallInstance, MatchingOutcome};
use qiso_core::isometry::{
    check_d, check_d_commutant, check_injectivity, check_lip_p_universal, check_orthogonality,
    check_theorem_main,
};
use qiso_core::metric::{random_metric_space, MetricModel, PairSet};
use qiso_core::transport::{
    kantorovich_w1, solve_transport, wasserstein_inf, wasserstein_p, wasserstein_p_cost, ProbVector, WassersteinOrder,
};
use qiso_core::{Rational, Scalar};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{grid, matching_exists_exhaustive, random_prob, ratio, spanning_trees, transport_vertices};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn population(random: usize) -> Vec<CatalogEntry> {
    let mut all = builtin_catalog().expect("catalog builds");
    all.extend((0..random as u64).map(|s| random_action(s).expect("random action builds")));
    all
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut instances = 0usize;
    let mut mismatches = 0usize;
    for n in 1..=4 {
        let trees = spanning_trees(n);
        let marginals = grid(n, &[1, 2, 3, 4]);
        // costs a/b with b <= 6, kept as numerators over 60
        let costs: Vec<Vec<Vec<i64>>> = (0..25)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        (0..n)
                            .map(|_| {
                                let b = rng.random_range(1..=6i64);
                                rng.random_range(0..=3 * b) * (60 / b)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let cost_q: Vec<Vec<Vec<Rational>>> = costs
            .iter()
            .map(|c| c.iter().map(|row| row.iter().map(|&k| ratio(k, 60)).collect()).collect())
            .collect();
        let scaled = |m: &[Rational]| -> Vec<i64> {
            m.iter().map(|x| (x * Rational::from_integer(12.into())).to_integer().try_into().unwrap()).collect()
        };
        for mu in &marginals {
            for nu in &marginals {
                let verts = transport_vertices(n, &trees, &scaled(mu), &scaled(nu));
                let pm = ProbVector::new(mu.clone(), 0.0).unwrap();
                let pn = ProbVector::new(nu.clone(), 0.0).unwrap();
                for (c, cq) in costs.iter().zip(&cost_q) {
                    let best = verts
                        .iter()
                        .map(|v| (0..n * n).map(|k| v[k] * c[k / n][k % n]).sum::<i64>())
                        .min()
                        .expect("the polytope is non-empty");
                    let got = solve_transport(&pm, &pn, cq, 0.0).unwrap().value;
                    instances += 1;
                    if got != ratio(best, 720) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{instances} instances, {mismatches} mismatches"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for k in 0..500u64 {
        let n = rng.random_range(2..=6);
        let model = if k % 2 == 0 { MetricModel::ShortestPathGraph } else { MetricModel::EuclideanSample };
        let space = random_metric_space::<Rational>(n, rng.random(), model).unwrap();
        let mu = random_prob(&mut rng, n);
        let nu = random_prob(&mut rng, n);
        let res = wasserstein_p_cost(&space, &mu, &nu, 1.0).unwrap();
        let dual = res.duals.evaluate(&mu, &nu);
        let (kr, _) = kantorovich_w1(&space, &mu, &nu).unwrap();
        if !(res.value == dual && dual == kr && res.duals.is_feasible(&space.cost_matrix(1.0), 0.0)) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("500 instances, {bad} disagreements"))
}

fn criterion_3() -> Outcome {
    // exact costs: float potentials cannot resolve d^32 across a wide range of distances
    let orders = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 32.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    let mut worst_gap = f64::INFINITY;
    for k in 0..500u64 {
        let n = rng.random_range(2..=6);
        let model = if k % 2 == 0 { MetricModel::ShortestPathGraph } else { MetricModel::EuclideanSample };
        let space = random_metric_space::<Rational>(n, rng.random(), model).unwrap();
        let mu = random_prob(&mut rng, n);
        let nu = random_prob(&mut rng, n);
        let w: Vec<f64> = orders.iter().map(|&p| wasserstein_p(&space, &mu, &nu, p).unwrap()).collect();
        let winf = wasserstein_inf(&space, &mu, &nu).unwrap().r.to_f64();
        let scale = space.max_distance().to_f64().max(1.0);
        if w.windows(2).any(|p| p[0] > p[1] + TOL * scale) || w.iter().any(|&x| x > winf + TOL * scale) {
            bad += 1;
        }
        worst_gap = worst_gap.min(winf - w[w.len() - 1]);
    }
    outcome(
        bad == 0 && worst_gap >= -TOL,
        format!("500 instances, {bad} violations, min W_inf - W_32 = {worst_gap:.3e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut checked = 0usize;
    let mut bad = 0usize;
    for n in 2..=3usize {
        let marginals: Vec<ProbVector<Rational>> =
            grid(n, &[1, 2, 3]).into_iter().map(|m| ProbVector::new(m, 0.0).unwrap()).collect();
        for bits in 0..(1u64 << (n * n)) {
            let y = PairSet::from_bits(n, bits);
            for mu in &marginals {
                for nu in &marginals {
                    let inst = HallInstance::new(mu.clone(), nu.clone(), y.clone()).unwrap();
                    let (holds, _) = hall_condition(&inst, 0.0).unwrap();
                    let verdict = decide_hall(&inst, 0.0).unwrap();
                    let coupling_ok = verdict.coupling.as_ref().is_none_or(|c| {
                        c.is_supported_on(&y, 0.0) && c.mu() == mu.mass() && c.nu() == nu.mass()
                    });
                    checked += 1;
                    if holds != verdict.feasible || !coupling_ok {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} instances, {bad} disagreements"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    let mut perfect = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=7);
        let density = rng.random_range(0.1..0.9);
        let adj: Vec<Vec<bool>> = (0..n).map(|_| (0..n).map(|_| rng.random_bool(density)).collect()).collect();
        let expected = matching_exists_exhaustive(&adj);
        let ok = match perfect_matching(&adj).unwrap() {
            MatchingOutcome::Perfect(m) => {
                perfect += 1;
                let distinct: BTreeSet<usize> = m.iter().copied().collect();
                expected && distinct.len() == n && m.iter().enumerate().all(|(i, &j)| adj[i][j])
            }
            MatchingOutcome::Deficient { subset, neighborhood } => {
                let adj = &adj;
                let nb: BTreeSet<usize> =
                    subset.iter().flat_map(|&i| (0..n).filter(move |&j| adj[i][j])).collect();
                !expected && neighborhood.len() < subset.len() && nb == neighborhood.iter().copied().collect()
            }
        };
        if !ok {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 graphs ({perfect} with a perfect matching), {bad} disagreements"))
}

/// Every admissible `(x, y, S, T, delta)` with non-empty `S`, `T`.
fn admissible(action: &CoAction) -> Vec<(usize, usize, Vec<usize>, Vec<usize>, f64)> {
    let space = action.space();
    let n = space.n();
    let subsets: Vec<Vec<usize>> =
        (1u32..1 << n).map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect()).collect();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            for s in &subsets {
                for t in &subsets {
                    let delta = s
                        .iter()
                        .flat_map(|&a| t.iter().map(move |&b| (space.d(a, b) - space.d(x, y)).abs()))
                        .fold(f64::INFINITY, f64::min);
                    if delta > TOL {
                        out.push((x, y, s.clone(), t.clone(), delta));
                    }
                }
            }
        }
    }
    out
}

fn criterion_6(catalog: &[CatalogEntry]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut entries = 0;
    let mut samples = 0;
    let mut failures = Vec::new();
    for e in catalog {
        let act = &e.action;
        if !check_d(act, TOL).holds {
            continue;
        }
        entries += 1;
        let main = check_theorem_main(act, TOL).map(|v| v.holds).unwrap_or(false);
        let inj = check_injectivity(act, TOL);
        let pool = admissible(act);
        let mut orth = true;
        for _ in 0..1000 {
            if let Some((x, y, s, t, delta)) = pool.choose(&mut rng) {
                samples += 1;
                orth &= check_orthogonality(act, *x, *y, s, t, *delta, TOL).unwrap_or(false);
            }
        }
        if !(main && inj && orth) {
            failures.push(format!("{} (main {main}, injective {inj}, products {orth})", e.name));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{entries} (D)-isometric entries, {samples} orthogonality samples, failures: {failures:?}"),
    )
}

struct Verdicts {
    d: bool,
    lip: [bool; 4],
    commutant: Option<bool>,
}

fn verdicts(e: &CatalogEntry) -> Verdicts {
    let act = &e.action;
    let orders = [
        WassersteinOrder::Finite(1.0),
        WassersteinOrder::Finite(2.0),
        WassersteinOrder::Finite(3.0),
        WassersteinOrder::Infinite,
    ];
    let lip = orders.map(|o| check_lip_p_universal(act, o, TOL).expect("universal check runs").holds);
    let commutant = check_d_commutant(act, TOL).ok().map(|v| v.holds);
    Verdicts { d: check_d(act, TOL).holds, lip, commutant }
}

fn criterion_7(pop: &[(String, Verdicts)]) -> Outcome {
    let mut violations = Vec::new();
    // columns D, Lip_1, Lip_2, Lip_3, Lip_inf; Lip_p must imply Lip_q for q <= p
    let names = ["D", "Lip_1", "Lip_2", "Lip_3", "Lip_inf"];
    for (name, v) in pop {
        let row = [v.d, v.lip[0], v.lip[1], v.lip[2], v.lip[3]];
        for a in 0..5 {
            for b in 1..a.max(1) {
                if row[a] && !row[b] {
                    violations.push(format!("{name}: {} but not {}", names[a], names[b]));
                }
            }
            if a > 0 && row[0] && !row[a] {
                violations.push(format!("{name}: D but not {}", names[a]));
            }
        }
    }
    let count = |k: usize| pop.iter().filter(|(_, v)| [v.d, v.lip[0], v.lip[1], v.lip[2], v.lip[3]][k]).count();
    let counts: Vec<String> = (0..5).map(|k| format!("{}={}", names[k], count(k))).collect();
    outcome(
        violations.is_empty(),
        format!("{} actions, holds: {}, violations: {violations:?}", pop.len(), counts.join(" ")),
    )
}

fn criterion_8(pop: &[(String, Verdicts)]) -> Outcome {
    let lip = pop.iter().filter(|(_, v)| v.d != v.lip[0]).map(|(n, _)| n.clone()).collect::<Vec<_>>();
    let kac: Vec<&(String, Verdicts)> = pop.iter().filter(|(_, v)| v.commutant.is_some()).collect();
    let com = kac.iter().filter(|(_, v)| Some(v.d) != v.commutant).map(|(n, _)| n.clone()).collect::<Vec<_>>();
    outcome(
        lip.is_empty() && com.is_empty(),
        format!(
            "{} actions, D vs Lip_1 discrepancies {lip:?}; {} with kappa(u_ij) = u_ji, D vs commutant discrepancies {com:?}",
            pop.len(),
            kac.len()
        ),
    )
}

fn criterion_9(catalog: &[CatalogEntry]) -> Outcome {
    let mut failures = Vec::new();
    let mut entries = 0;
    for e in catalog.iter().filter(|e| e.kind == EntryKind::Classical) {
        entries += 1;
        let perms = e.permutations.as_ref().expect("classical entries carry their group");
        let expected = isometric_permutations(e.action.space(), perms, TOL).len();
        let env = match envelope(&e.action, TOL) {
            Ok(env) => env,
            Err(err) => {
                failures.push(format!("{}: {err}", e.name));
                continue;
            }
        };
        let again = envelope(&env.induced_action, TOL);
        let idempotent = again.as_ref().is_ok_and(|a| a.ideal.is_empty() && a.dimension() == env.dimension());
        let universal = verify_universal_property(&e.action, &env, TOL).map(|r| r.failures.len());
        let convolution = annihilator_convolution_check(e.action.group(), &env.ideal, 500, 9, TOL);
        if env.dimension() != expected || !idempotent || universal.as_ref().map_or(true, |&f| f > 0) || !convolution {
            failures.push(format!(
                "{}: dim {} vs {expected}, idempotent {idempotent}, universal {universal:?}, convolution {convolution}",
                e.name,
                env.dimension()
            ));
        }
    }
    outcome(failures.is_empty(), format!("{entries} classical entries, failures: {failures:?}"))
}

#[derive(Debug, Clone, Copy)]
enum Fault {
    Delta,
    Epsilon,
    Kappa,
    U,
}

fn perturbed_group(qg: &QuantumGroup, fault: Fault, rng: &mut ChaCha8Rng, size: f64) -> QuantumGroup {
    let mut delta = qg.delta_matrix().clone();
    let mut eps = qg.epsilon_vector().clone();
    let mut kappa = qg.kappa_matrix().clone();
    let bump = qiso_core::cqg::c(size, 0.0);
    match fault {
        Fault::Delta => {
            let (r, c) = (rng.random_range(0..delta.nrows()), rng.random_range(0..delta.ncols()));
            delta[(r, c)] += bump;
        }
        Fault::Epsilon => {
            let r = rng.random_range(0..eps.len());
            eps[r] += bump;
        }
        Fault::Kappa => {
            let (r, c) = (rng.random_range(0..kappa.nrows()), rng.random_range(0..kappa.ncols()));
            kappa[(r, c)] += bump;
        }
        Fault::U => unreachable!("magic unitary faults do not touch the group"),
    }
    QuantumGroup::from_parts(qg.name(), qg.algebra().clone(), delta, eps, kappa).expect("shapes are kept")
}

fn criterion_10(catalog: &[CatalogEntry]) -> Outcome {
    let strict = 1e-10;
    let mut clean_failures = Vec::new();
    for e in catalog {
        let g = verify_quantum_group(e.action.group(), strict).map(|r| r.passed()).unwrap_or(false);
        let a = verify_coaction(&e.action, strict, false).map(|r| r.passed()).unwrap_or(false);
        if !(g && a) {
            clean_failures.push(e.name.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let kinds = [Fault::Delta, Fault::Epsilon, Fault::Kappa, Fault::U];
    let mut missed = Vec::new();
    let mut least = f64::INFINITY;
    for k in 0..50 {
        let e = &catalog[rng.random_range(0..catalog.len())];
        let fault = kinds[k % kinds.len()];
        let worst = match fault {
            Fault::U => {
                let act = &e.action;
                let n = act.n();
                let mut u: Vec<Vec<_>> = act.entries().to_vec();
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                let alg = act.group().algebra();
                let mut v = alg.coords(&u[i][j]);
                v[rng.random_range(0..alg.dim())] += qiso_core::cqg::c(1e-3, 0.0);
                u[i][j] = alg.element(&v);
                let bad = CoAction::new("fault", act.group_arc(), act.space().clone(), u).expect("shapes are kept");
                verify_coaction(&bad, strict, false).map(|r| r.worst()).unwrap_or(f64::INFINITY)
            }
            _ => {
                let qg = perturbed_group(e.action.group(), fault, &mut rng, 1e-3);
                verify_quantum_group(&qg, strict).map(|r| r.worst()).unwrap_or(f64::INFINITY)
            }
        };
        least = least.min(worst);
        if worst < 1e-4 {
            missed.push(format!("{fault:?} on {}", e.name));
        }
    }
    outcome(
        clean_failures.is_empty() && missed.is_empty(),
        format!(
            "{} entries verified at 1e-10 (failures {clean_failures:?}); 50 faults, {} detected, least residual {least:.2e}",
            catalog.len(),
            50 - missed.len()
        ),
    )
}

fn main() {
    let catalog = builtin_catalog().expect("catalog builds");
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let mut run = |k: usize, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let dt = t.elapsed();
        println!("criterion {k:>2}: {} ({:.1}s) {}", if o.pass { "PASS" } else { "FAIL" }, dt.as_secs_f64(), o.detail);
        results.push((k, o, dt));
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    run(4, &criterion_4);
    run(5, &criterion_5);
    run(6, &|| criterion_6(&catalog));
    let t = Instant::now();
    let pop: Vec<(String, Verdicts)> = population(200).iter().map(|e| (e.name.clone(), verdicts(e))).collect();
    let shared = t.elapsed();
    run(7, &|| criterion_7(&pop));
    run(8, &|| criterion_8(&pop));
    println!("             (criteria 7 and 8 share {:.1}s of verdict computation)", shared.as_secs_f64());
    run(9, &|| criterion_9(&catalog));
    run(10, &|| criterion_10(&catalog));
    let failed: Vec<usize> = results.iter().filter(|(_, o, _)| !o.pass).map(|(k, _, _)| *k).collect();
    if failed.is_empty() {
        println!("all 10 criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
