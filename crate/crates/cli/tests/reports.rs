use std::sync::Arc;

use qiso_cli::report::{Decision, ReportKind};
use qiso_cli::run::{collect_instances, span_label, INJECTIVE};
use qiso_cli::{
    render_report, run_catalog_verification, search_conjecture_span, search_conjecture_sublevel, ReportFormat,
    RunReport, SearchConfig,
};
use qiso_core::cqg::catalog::{builtin_catalog, equilateral_space, isometric_permutations, trivial_action, trivial_group};
use qiso_core::io::{coaction_to_json, state_from_json, write_json};
use qiso_core::isometry::check_lip_p_state;
use qiso_core::metric::validate_metric;
use qiso_core::transport::{wasserstein_p_cost, ProbVector, WassersteinOrder};
use qiso_core::Rational;

fn only(include: &str) -> SearchConfig {
    SearchConfig { include: vec![include.into()], random_actions: 0, state_samples: 4, ..SearchConfig::default() }
}

fn all_hold(r: &RunReport) -> bool {
    r.instances.iter().all(|i| i.outcomes.iter().all(|o| o.holds == Some(true)))
}

#[test]
fn trivial_actions_satisfy_everything() {
    let r = run_catalog_verification(&only("acting trivially")).unwrap();
    assert_eq!(r.instances.len(), 3);
    assert!(all_hold(&r));
    assert!(r.passed);
    assert!(r.matrix.violations.is_empty());
}

#[test]
fn cycles_satisfy_everything() {
    let r = run_catalog_verification(&only("-cycle) on")).unwrap();
    assert_eq!(r.instances.len(), 4);
    // every rotation of a cycle is an isometry
    for e in builtin_catalog().unwrap().iter().filter(|e| e.name.contains("-cycle) on")) {
        let perms = e.permutations.as_ref().unwrap();
        assert_eq!(isometric_permutations(e.action.space(), perms, 1e-9).len(), perms.len());
    }
    assert!(all_hold(&r));
    assert!(r.passed);
}

#[test]
fn symmetric_group_on_isosceles_triangle_fails_consistently() {
    let r = run_catalog_verification(&only("C(S3@isosceles")).unwrap();
    assert_eq!(r.instances.len(), 1);
    let inst = &r.instances[0];
    assert_eq!(inst.outcome("D"), Some(false));
    assert_eq!(inst.outcome("Lip_1"), Some(false));
    assert_eq!(inst.outcome(INJECTIVE), Some(true));
    assert!(r.matrix.violations.is_empty());
    assert!(r.passed);
    let d = r.matrix.conditions.iter().position(|c| c == "D").unwrap();
    assert_eq!(r.matrix.failed[d], 1);
}

#[test]
fn whole_catalog_respects_the_tower() {
    let cfg = SearchConfig { random_actions: 6, state_samples: 4, ..SearchConfig::default() };
    let r = run_catalog_verification(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.matrix.violations);
    assert_eq!(r.coverage.instances, builtin_catalog().unwrap().len() + 6);
    assert_eq!(r.coverage.sampled_only, 0);
    for inst in &r.instances {
        if inst.outcome("D") == Some(true) {
            let env = inst.envelope.as_ref().unwrap();
            assert!(env.killed_blocks.is_empty(), "{}", inst.name);
        }
    }
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let base = SearchConfig { random_actions: 5, seed: 17, state_samples: 6, span_samples: 8, ..SearchConfig::default() };
    let one = SearchConfig { jobs: Some(1), chunk_size: 3, ..base.clone() };
    let four = SearchConfig { jobs: Some(4), ..base };
    for run in [run_catalog_verification, search_conjecture_sublevel, search_conjecture_span] {
        let a = run(&one).unwrap();
        let b = run(&four).unwrap();
        // the recorded config differs only in jobs and chunk size
        let strip = |r: &RunReport| RunReport { config: SearchConfig::default(), ..r.without_timing() };
        assert_eq!(strip(&a), strip(&b));
    }
}

#[test]
fn json_round_trip_is_identity() {
    let cfg = SearchConfig { random_actions: 3, state_samples: 4, span_samples: 6, ..only("KP") };
    for r in [run_catalog_verification(&cfg).unwrap(), search_conjecture_span(&cfg).unwrap()] {
        let text = render_report(&r, ReportFormat::Json).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn csv_has_one_row_per_instance() {
    let cfg = SearchConfig { random_actions: 4, state_samples: 2, ..only("isosceles") };
    let r = run_catalog_verification(&cfg).unwrap();
    let text = render_report(&r, ReportFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), 5 + r.matrix.conditions.len() + 3);
    let rows: Vec<_> = reader.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), r.instances.len());
    assert_eq!(&rows[0][0], r.instances[0].name.as_str());
}

#[test]
fn empty_report_renders_empty_tables() {
    let r = RunReport::empty(ReportKind::CatalogVerification, SearchConfig::default());
    let md = render_report(&r, ReportFormat::Markdown).unwrap();
    assert!(md.contains("## Implication matrix"));
    assert!(md.contains("| condition | holds | fails | undecided |"));
    assert!(md.contains("## Instances"));
    let csv_text = render_report(&r, ReportFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(reader.records().count(), 0);
    let back: RunReport = serde_json::from_str(&render_report(&r, ReportFormat::Json).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn markdown_lists_the_matrix() {
    let r = run_catalog_verification(&only("isosceles")).unwrap();
    let md = render_report(&r, ReportFormat::Markdown).unwrap();
    for c in &r.matrix.conditions {
        assert!(md.contains(&format!("| {c} |")), "{c}");
    }
    assert!(md.contains("D => Lip_1"));
}

#[test]
fn classical_actions_give_no_sublevel_hits() {
    let cfg = SearchConfig { include: vec!["C(".into()], random_actions: 10, ..SearchConfig::default() };
    let r = search_conjecture_sublevel(&cfg).unwrap();
    assert_eq!(r.coverage.hits, 0);
    assert!(r.passed);
    assert!(r.coverage.instances > 10);
}

#[test]
fn counit_is_always_isometric_in_the_span_search() {
    let cfg = SearchConfig { random_actions: 4, span_samples: 4, ..SearchConfig::default() };
    let r = search_conjecture_span(&cfg).unwrap();
    for inst in &r.instances {
        for t in &inst.span {
            assert!(t.isometric >= 1, "{} at {}", inst.name, t.order);
            assert_eq!(t.dimension_trace.first(), Some(&1));
        }
    }
}

/// Exact classical check: the measure `psi` on the group elements `perms`
/// satisfies `W_1(x <| psi, y <| psi) <= d(x, y)`, where `x <| psi` puts mass
/// `psi(g)` on `g^{-1}(x)`.
fn classical_lip1(dist: &[Vec<Rational>], perms: &[Vec<usize>], psi: &[Rational]) -> bool {
    let n = dist.len();
    let space = validate_metric(dist.to_vec(), 0.0).unwrap();
    let push = |x: usize| {
        let mut m = vec![Rational::from_integer(0.into()); n];
        for (g, w) in perms.iter().zip(psi) {
            let pre = g.iter().position(|&i| i == x).unwrap();
            m[pre] += w;
        }
        ProbVector::new(m, 0.0).unwrap()
    };
    (0..n).all(|x| (0..n).all(|y| wasserstein_p_cost(&space, &push(x), &push(y), 1.0).unwrap().value <= dist[x][y]))
}

#[test]
fn span_hits_on_classical_actions_are_genuine() {
    let cfg = SearchConfig { p_list: vec!["1".into()], ..only("C(Z4@broken square)") };
    let r = search_conjecture_span(&cfg).unwrap();
    assert_eq!(r.instances[0].outcome(&span_label(WassersteinOrder::Finite(1.0))), Some(false));
    let dossier = &r.dossiers[0];
    assert!(dossier.faithful);

    // replay the dossier
    let entry = builtin_catalog().unwrap().into_iter().find(|e| e.name.contains("Z4@broken square")).unwrap();
    let alg = entry.action.group().algebra();
    let psi = state_from_json(dossier.state.as_ref().unwrap(), alg, 1e-9).unwrap();
    assert!(!check_lip_p_state(&entry.action, &psi, WassersteinOrder::Finite(1.0), 1e-9).unwrap().holds);

    // an isometric measure charging a non-isometry puts that non-isometry in the span
    let dist: Vec<Vec<Rational>> = entry
        .action
        .space()
        .dist()
        .iter()
        .map(|row| row.iter().map(|&v| Rational::from_float(v).unwrap()).collect())
        .collect();
    let perms = entry.permutations.unwrap();
    let half = Rational::new(1.into(), 2.into());
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    let iso = isometric_permutations(entry.action.space(), &perms, 1e-9);
    let r1 = perms.iter().position(|g| !iso.contains(g)).unwrap();
    let mut mix = vec![zero.clone(); perms.len()];
    mix[0] = half.clone();
    mix[r1] = half;
    assert!(classical_lip1(&dist, &perms, &mix));
    let mut dirac = vec![zero; perms.len()];
    dirac[r1] = one;
    assert!(!classical_lip1(&dist, &perms, &dirac));
}

#[test]
fn size_guards_fall_back_to_sampling_and_say_so() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nine.json");
    let action = trivial_action("C on nine points", Arc::new(trivial_group()), equilateral_space(9)).unwrap();
    write_json(&path, &coaction_to_json(&action)).unwrap();
    let cfg = SearchConfig {
        builtin: false,
        files: vec![path],
        random_actions: 0,
        p_list: vec!["1".into(), "2".into()],
        ..SearchConfig::default()
    };
    let r = run_catalog_verification(&cfg).unwrap();
    let inst = &r.instances[0];
    assert_eq!(inst.decision, Decision::UndecidedExactSampledOnly);
    assert_eq!(inst.outcome("D"), Some(true));
    assert_eq!(inst.outcome("Lip_1"), None);
    assert_eq!(inst.outcome("Lip_2"), None);
    assert!(inst.sampled.iter().all(|s| s.failures == 0 && s.states > 0));
    assert_eq!(r.coverage.sampled_only, 1);
    let lip1 = r.matrix.conditions.iter().position(|c| c == "Lip_1").unwrap();
    assert_eq!(r.matrix.undecided[lip1], 1);
}

#[test]
fn time_budget_stops_between_chunks() {
    let cfg = SearchConfig { time_budget_secs: Some(1e-9), chunk_size: 1, ..SearchConfig::default() };
    let r = run_catalog_verification(&cfg).unwrap();
    assert!(r.coverage.truncated);
    assert!(r.instances.len() < collect_instances(&cfg).unwrap().len());
}

#[test]
fn bad_configs_are_rejected() {
    for text in [
        r#"{"n_min": 5, "n_max": 4}"#,
        r#"{"models": []}"#,
        r#"{"p_list": ["0.5"]}"#,
        r#"{"chunk_size": 0}"#,
        r#"{"builtin": false, "random_actions": 0}"#,
    ] {
        let cfg: SearchConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.validate().is_err(), "{text}");
    }
    assert!(serde_json::from_str::<SearchConfig>(r#"{"colour": 1}"#).is_err());
}

#[test]
fn random_actions_respect_the_size_range() {
    let cfg = SearchConfig { builtin: false, random_actions: 12, n_min: 4, n_max: 5, ..SearchConfig::default() };
    for inst in collect_instances(&cfg).unwrap() {
        assert!((4..=5).contains(&inst.action.n()), "{}", inst.name());
    }
}
