//! Aggregation of simulation rows into per-phase summaries and the
//! hypothesis table (one Kruskal-Wallis test per effort metric).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::simulate::SimulationRow;
use super::stats::{kruskal_wallis, KruskalWallis};
use crate::error::{Error, Result};
use crate::session::Phase;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Queries,
    Clicks,
    Hits,
    Urls,
    ElapsedMs,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Queries,
        Metric::Clicks,
        Metric::Hits,
        Metric::Urls,
        Metric::ElapsedMs,
    ];

    pub fn hypothesis(self) -> &'static str {
        match self {
            Metric::Queries => "H1.1",
            Metric::Clicks => "H1.2",
            Metric::Hits => "H1.3",
            Metric::Urls => "H1.4",
            Metric::ElapsedMs => "H1.5",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Queries => "queries",
            Metric::Clicks => "clicks",
            Metric::Hits => "hits",
            Metric::Urls => "urls",
            Metric::ElapsedMs => "elapsed_ms",
        }
    }

    pub fn value(self, row: &SimulationRow) -> f64 {
        let m = &row.metrics;
        (match self {
            Metric::Queries => m.queries,
            Metric::Clicks => m.clicks,
            Metric::Hits => m.hits,
            Metric::Urls => m.urls,
            Metric::ElapsedMs => m.elapsed_ms,
        }) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAggregate {
    pub rows: usize,
    pub subjects: usize,
    pub found: usize,
    /// Per-task statistics keyed by metric name.
    pub per_task: BTreeMap<String, Summary>,
    /// Statistics of per-subject totals keyed by metric name.
    pub per_subject: BTreeMap<String, Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTest {
    pub hypothesis: String,
    pub metric: Metric,
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub threshold: f64,
    pub rows: Vec<SimulationRow>,
    pub phases: BTreeMap<Phase, PhaseAggregate>,
    pub tests: Vec<HypothesisTest>,
    /// Same tests restricted to one task's rows.
    pub per_task_tests: BTreeMap<String, Vec<HypothesisTest>>,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

fn summary(values: &[f64]) -> Summary {
    Summary {
        mean: mean(values),
        median: median(values),
    }
}

/// Sum of `metric` per subject, in subject order.
pub fn subject_totals(rows: &[&SimulationRow], metric: Metric) -> Vec<f64> {
    let mut totals: BTreeMap<usize, f64> = BTreeMap::new();
    for r in rows {
        *totals.entry(r.subject).or_default() += metric.value(r);
    }
    totals.into_values().collect()
}

fn by_phase(rows: &[SimulationRow]) -> BTreeMap<Phase, Vec<&SimulationRow>> {
    let mut map: BTreeMap<Phase, Vec<&SimulationRow>> = BTreeMap::new();
    for r in rows {
        map.entry(r.phase).or_default().push(r);
    }
    map
}

fn run_tests(groups: &BTreeMap<Phase, Vec<&SimulationRow>>) -> Result<Vec<HypothesisTest>> {
    Metric::ALL
        .iter()
        .map(|&metric| {
            let samples: Vec<Vec<f64>> = groups.values().map(|rows| subject_totals(rows, metric)).collect();
            let KruskalWallis { h, df, p } = kruskal_wallis(&samples)?;
            Ok(HypothesisTest {
                hypothesis: metric.hypothesis().to_string(),
                metric,
                h,
                df,
                p,
                significant: p < SIGNIFICANCE,
            })
        })
        .collect()
}

/// Builds the report. All three phases must be present.
pub fn aggregate_report(rows: Vec<SimulationRow>) -> Result<RunReport> {
    let groups = by_phase(&rows);
    for phase in Phase::ALL {
        if !groups.contains_key(&phase) {
            return Err(Error::validation(format!("no rows for phase {phase}")));
        }
    }
    let mut phases = BTreeMap::new();
    for (&phase, rs) in &groups {
        let mut per_task = BTreeMap::new();
        let mut per_subject = BTreeMap::new();
        for metric in Metric::ALL {
            let values: Vec<f64> = rs.iter().map(|r| metric.value(r)).collect();
            per_task.insert(metric.name().to_string(), summary(&values));
            per_subject.insert(metric.name().to_string(), summary(&subject_totals(rs, metric)));
        }
        let mut subjects: Vec<usize> = rs.iter().map(|r| r.subject).collect();
        subjects.sort_unstable();
        subjects.dedup();
        phases.insert(
            phase,
            PhaseAggregate {
                rows: rs.len(),
                subjects: subjects.len(),
                found: rs.iter().filter(|r| r.found).count(),
                per_task,
                per_subject,
            },
        );
    }
    let tests = run_tests(&groups)?;

    let mut per_task_tests = BTreeMap::new();
    let task_ids: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.task_id.as_str()).collect();
    for task in task_ids {
        let subset: BTreeMap<Phase, Vec<&SimulationRow>> = groups
            .iter()
            .map(|(&p, rs)| (p, rs.iter().copied().filter(|r| r.task_id == task).collect::<Vec<_>>()))
            .collect();
        if subset.values().all(|v| !v.is_empty()) {
            per_task_tests.insert(task.to_string(), run_tests(&subset)?);
        }
    }

    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        threshold: SIGNIFICANCE,
        rows,
        phases,
        tests,
        per_task_tests,
    })
}

/// Plain-text table: one line per hypothesis with the statistic and p-value.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let phases: Vec<Phase> = report.phases.keys().copied().collect();
    let _ = write!(out, "{:<6} {:<11}", "hyp", "metric");
    for p in &phases {
        let _ = write!(out, " {:>10}", format!("{p} med"));
    }
    let _ = writeln!(out, " {:>9} {:>3} {:>9}  sig", "H", "df", "p");
    for t in &report.tests {
        let _ = write!(out, "{:<6} {:<11}", t.hypothesis, t.metric.name());
        for p in &phases {
            let med = report.phases[p].per_task[t.metric.name()].median;
            let _ = write!(out, " {med:>10.1}");
        }
        let _ = writeln!(
            out,
            " {:>9.4} {:>3} {:>9.4}  {}",
            t.h,
            t.df,
            t.p,
            if t.significant { "yes" } else { "no" }
        );
    }
    out
}
