use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qiso_core::isometry::IsometryVerdict;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::SearchConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    CatalogVerification,
    SublevelSearch,
    SpanSearch,
}

impl std::fmt::Display for ReportKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportKind::CatalogVerification => "catalog verification",
            ReportKind::SublevelSearch => "sublevel-support conjecture search",
            ReportKind::SpanSearch => "isometric-state span conjecture search",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSource {
    Builtin { name: String },
    Random { seed: u64 },
    File { path: PathBuf },
}

impl std::fmt::Display for InstanceSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstanceSource::Builtin { name } => write!(f, "builtin:{name}"),
            InstanceSource::Random { seed } => write!(f, "random:{seed}"),
            InstanceSource::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}

/// Whether the universal checks ran exactly or fell back to sampled states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Exact,
    UndecidedExactSampledOnly,
}

/// A condition's outcome; `None` when no exact decision was possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub label: String,
    pub holds: Option<bool>,
}

/// Per-state fallback when an exact procedure hit a size guard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCheck {
    pub label: String,
    pub states: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub dimension: usize,
    pub algebra_dimension: usize,
    pub generated_blocks: Vec<usize>,
    pub killed_blocks: Vec<usize>,
    pub iterations: usize,
    pub intertwining_residual: f64,
}

/// Evidence for the span conjecture at one order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanTrace {
    pub order: String,
    pub sampled: usize,
    pub isometric: usize,
    /// Span dimension after each isometric state.
    pub dimension_trace: Vec<usize>,
    /// In-span states tested: rejected samples lying in the span, then
    /// affine combinations of isometric states that are positive.
    pub in_span_tested: usize,
    /// Affine combinations discarded because they were not positive.
    pub in_span_not_positive: usize,
    pub in_span_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub source: InstanceSource,
    pub n: usize,
    pub algebra_dimension: usize,
    pub blocks: Vec<usize>,
    pub decision: Decision,
    pub outcomes: Vec<ConditionOutcome>,
    pub verdicts: Vec<IsometryVerdict>,
    pub sampled: Vec<SampledCheck>,
    pub injective: Option<bool>,
    pub envelope: Option<EnvelopeSummary>,
    pub span: Vec<SpanTrace>,
}

impl InstanceReport {
    pub fn outcome(&self, label: &str) -> Option<bool> {
        self.outcomes.iter().find(|o| o.label == label).and_then(|o| o.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Implication {
    pub premise: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerViolation {
    pub instance: String,
    pub premise: String,
    pub conclusion: String,
}

/// Tallies of which conditions held together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationMatrix {
    pub conditions: Vec<String>,
    pub held: Vec<usize>,
    pub failed: Vec<usize>,
    pub undecided: Vec<usize>,
    /// `counterexamples[a][b]`: instances where condition `a` holds and `b` fails.
    pub counterexamples: Vec<Vec<usize>>,
    /// Observed outcome patterns, e.g. `"D+ Lip_1+ theorem-main-"`.
    pub patterns: BTreeMap<String, usize>,
    pub expected: Vec<Implication>,
    pub violations: Vec<TowerViolation>,
}

impl ImplicationMatrix {
    pub fn build(conditions: &[String], expected: Vec<Implication>, instances: &[InstanceReport]) -> Self {
        let k = conditions.len();
        let mut m = ImplicationMatrix {
            conditions: conditions.to_vec(),
            held: vec![0; k],
            failed: vec![0; k],
            undecided: vec![0; k],
            counterexamples: vec![vec![0; k]; k],
            patterns: BTreeMap::new(),
            expected,
            violations: Vec::new(),
        };
        for inst in instances {
            let row: Vec<Option<bool>> = conditions.iter().map(|c| inst.outcome(c)).collect();
            for (a, ra) in row.iter().enumerate() {
                match ra {
                    Some(true) => m.held[a] += 1,
                    Some(false) => m.failed[a] += 1,
                    None => m.undecided[a] += 1,
                }
                for (b, rb) in row.iter().enumerate() {
                    if *ra == Some(true) && *rb == Some(false) {
                        m.counterexamples[a][b] += 1;
                    }
                }
            }
            let pattern = conditions
                .iter()
                .zip(&row)
                .map(|(c, r)| format!("{c}{}", r.map_or("?", |h| if h { "+" } else { "-" })))
                .collect::<Vec<_>>()
                .join(" ");
            *m.patterns.entry(pattern).or_insert(0) += 1;
            for imp in &m.expected {
                if inst.outcome(&imp.premise) == Some(true) && inst.outcome(&imp.conclusion) == Some(false) {
                    m.violations.push(TowerViolation {
                        instance: inst.name.clone(),
                        premise: imp.premise.clone(),
                        conclusion: imp.conclusion.clone(),
                    });
                }
            }
        }
        m
    }
}

/// Everything needed to replay a hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dossier {
    pub instance: String,
    pub source: InstanceSource,
    pub reason: String,
    /// Whether the entries of `u` generate the algebra.
    pub faithful: bool,
    pub seed: u64,
    /// The coaction file, group and space inlined.
    pub action: Value,
    pub state: Option<Value>,
    pub verdicts: Vec<IsometryVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub instances: usize,
    pub exact: usize,
    pub sampled_only: usize,
    pub hits: usize,
    /// The time budget stopped the run early.
    pub truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: u64,
    pub per_instance_ms: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: ReportKind,
    pub config: SearchConfig,
    pub instances: Vec<InstanceReport>,
    pub matrix: ImplicationMatrix,
    pub dossiers: Vec<Dossier>,
    pub coverage: Coverage,
    /// False when an expected implication was violated.
    pub passed: bool,
    pub timing: Timing,
}

impl RunReport {
    pub fn empty(kind: ReportKind, config: SearchConfig) -> Self {
        RunReport {
            kind,
            config,
            instances: Vec::new(),
            matrix: ImplicationMatrix::build(&[], Vec::new(), &[]),
            dossiers: Vec::new(),
            coverage: Coverage { instances: 0, exact: 0, sampled_only: 0, hits: 0, truncated: false },
            passed: true,
            timing: Timing::default(),
        }
    }

    /// The report with timing cleared, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        RunReport { timing: Timing::default(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(CliError::Config(format!("unknown report format '{other}'"))),
        }
    }
}

impl ReportFormat {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ReportFormat::Csv,
            Some("md") | Some("markdown") => ReportFormat::Markdown,
            _ => ReportFormat::Json,
        }
    }
}

fn cell(h: Option<bool>) -> &'static str {
    match h {
        Some(true) => "holds",
        Some(false) => "fails",
        None => "undecided",
    }
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

fn render_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["name", "source", "n", "algebra_dimension", "decision"].iter().map(|s| s.to_string()).collect();
    header.extend(report.matrix.conditions.iter().cloned());
    header.extend(["injective", "envelope_dimension", "span_failures"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for inst in &report.instances {
        let mut row = vec![
            inst.name.clone(),
            inst.source.to_string(),
            inst.n.to_string(),
            inst.algebra_dimension.to_string(),
            serde_json::to_value(inst.decision)?.as_str().unwrap_or_default().to_string(),
        ];
        row.extend(report.matrix.conditions.iter().map(|c| cell(inst.outcome(c)).to_string()));
        row.push(inst.injective.map_or(String::new(), |b| b.to_string()));
        row.push(inst.envelope.as_ref().map_or(String::new(), |e| e.dimension.to_string()));
        row.push(inst.span.iter().map(|s| s.in_span_failures).sum::<usize>().to_string());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_markdown(report: &RunReport) -> String {
    let mut s = String::new();
    let m = &report.matrix;
    let c = &report.coverage;
    let _ = writeln!(s, "# {}\n", capitalize(&report.kind.to_string()));
    let _ = writeln!(s, "- result: {}", if report.passed { "passed" } else { "FAILED" });
    let _ = writeln!(
        s,
        "- instances: {} ({} exact, {} sampled only){}",
        c.instances,
        c.exact,
        c.sampled_only,
        if c.truncated { ", stopped by the time budget" } else { "" }
    );
    let _ = writeln!(s, "- hits: {}", c.hits);
    let _ = writeln!(s, "- seed: {}\n", report.config.seed);

    let _ = writeln!(s, "## Implication matrix\n");
    let _ = writeln!(s, "Entry (a, b) counts instances where the row condition holds and the column condition fails.\n");
    let _ = write!(s, "| condition | holds | fails | undecided |");
    for name in &m.conditions {
        let _ = write!(s, " {name} |");
    }
    let _ = write!(s, "\n|---|---|---|---|");
    for _ in &m.conditions {
        let _ = write!(s, "---|");
    }
    s.push('\n');
    for (a, name) in m.conditions.iter().enumerate() {
        let _ = write!(s, "| {name} | {} | {} | {} |", m.held[a], m.failed[a], m.undecided[a]);
        for b in 0..m.conditions.len() {
            let _ = write!(s, " {} |", m.counterexamples[a][b]);
        }
        s.push('\n');
    }
    if !m.expected.is_empty() {
        let _ = writeln!(s, "\nExpected implications:");
        for imp in &m.expected {
            let _ = writeln!(s, "- {} => {}", imp.premise, imp.conclusion);
        }
    }
    let _ = writeln!(s, "\nViolations: {}", m.violations.len());
    for v in &m.violations {
        let _ = writeln!(s, "- {}: {} holds but {} fails", v.instance, v.premise, v.conclusion);
    }
    let _ = writeln!(s, "\n## Patterns\n\n| pattern | count |\n|---|---|");
    for (p, k) in &m.patterns {
        let _ = writeln!(s, "| {p} | {k} |");
    }

    let _ = writeln!(s, "\n## Instances\n");
    let _ = write!(s, "| name | n | dim A | decision |");
    for name in &m.conditions {
        let _ = write!(s, " {name} |");
    }
    let _ = write!(s, "\n|---|---|---|---|");
    for _ in &m.conditions {
        let _ = write!(s, "---|");
    }
    s.push('\n');
    for inst in &report.instances {
        let decision = match inst.decision {
            Decision::Exact => "exact",
            Decision::UndecidedExactSampledOnly => "sampled only",
        };
        let _ = write!(s, "| {} | {} | {} | {decision} |", inst.name.replace('|', "\\|"), inst.n, inst.algebra_dimension);
        for name in &m.conditions {
            let _ = write!(s, " {} |", cell(inst.outcome(name)));
        }
        s.push('\n');
    }

    let _ = writeln!(s, "\n## Dossiers\n");
    if report.dossiers.is_empty() {
        let _ = writeln!(s, "None.");
    }
    for d in &report.dossiers {
        let faithful = if d.faithful { "faithful" } else { "not faithful" };
        let _ = writeln!(s, "- {} ({}, {faithful}): {}", d.instance, d.source, d.reason);
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    cs.next().map_or(String::new(), |f| f.to_uppercase().chain(cs).collect())
}

/// Writes the report to `path` in `format`.
pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}
