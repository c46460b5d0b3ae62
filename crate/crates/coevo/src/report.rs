//! Batch aggregation by taxonomy category, score distributions, and the
//! statistical comparisons: Welch's t and Cohen's d.
//!
//! p-values are deliberately not computed (that would need a t-distribution
//! CDF); consumers get t and the Welch–Satterthwaite degrees of freedom and
//! can look the tail probability up. Quartiles use linear interpolation
//! between order statistics (the type-7 rule) so golden values stay stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astcmp::StaticScoreReport;
use crate::casepack::CoarseLabel;
use crate::looporch::AdaptationSession;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient data: both samples need at least two values")]
    InsufficientData,
    #[error("degenerate variance: both samples are constant")]
    DegenerateVariance,
}

/// Pipeline-stage counts for one category. The stages form a funnel:
/// generated >= gate_passed >= compiled >= runtime_validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub n_cases: usize,
    pub n_generated: usize,
    pub n_gate_passed: usize,
    pub n_compiled: usize,
    pub n_runtime_validated: usize,
}

impl CategoryCounts {
    pub fn compilation_rate(&self) -> f64 {
        if self.n_cases == 0 {
            0.0
        } else {
            self.n_compiled as f64 / self.n_cases as f64
        }
    }
}

/// Aggregated batch results: per-category funnel counts plus per-case scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchReport {
    pub per_category: BTreeMap<CoarseLabel, CategoryCounts>,
    pub scores: BTreeMap<String, StaticScoreReport>,
}

/// Group session outcomes by coarse category and attach static scores.
pub fn aggregate(
    sessions: &[AdaptationSession],
    scores: &[(String, StaticScoreReport)],
) -> BatchReport {
    let mut report = BatchReport::default();
    for session in sessions {
        let counts = report
            .per_category
            .entry(session.case.type_label.coarse)
            .or_default();
        counts.n_cases += 1;
        if session.any_generated() {
            counts.n_generated += 1;
        }
        if session.any_gate_passed() {
            counts.n_gate_passed += 1;
        }
        if session.compiled() {
            counts.n_compiled += 1;
        }
        if session.outcome == crate::looporch::SessionOutcome::RuntimeValidated {
            counts.n_runtime_validated += 1;
        }
    }
    for (hash, score) in scores {
        report.scores.insert(hash.clone(), score.clone());
    }
    report
}

/// Mean, median and quartiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub n: usize,
}

/// Type-7 quantile: linear interpolation between order statistics of the
/// sorted sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

/// Order-statistics summary of a non-empty sample.
pub fn distribution(values: &[f64]) -> Result<StatSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(StatSummary {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: quantile(&sorted, 0.5),
        p25: quantile(&sorted, 0.25),
        p75: quantile(&sorted, 0.75),
        n: sorted.len(),
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the n-1 denominator.
fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::InsufficientData);
    }
    let va = sample_variance(a);
    let vb = sample_variance(b);
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((va, vb))
}

/// Welch's unequal-variance t statistic and its Welch–Satterthwaite degrees
/// of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    let (va, vb) = check_samples(a, b)?;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let se_a = va / na;
    let se_b = vb / nb;
    let t = (mean(a) - mean(b)) / (se_a + se_b).sqrt();
    let dof = (se_a + se_b).powi(2)
        / (se_a.powi(2) / (na - 1.0) + se_b.powi(2) / (nb - 1.0));
    Ok((t, dof))
}

/// Cohen's d with the pooled standard deviation weighted by n-1.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let (va, vb) = check_samples(a, b)?;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt();
    Ok((mean(a) - mean(b)) / pooled)
}

/// Plain-text funnel table, one column block per category.
pub fn render_counts_table(report: &BatchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:>8} {:>10} {:>12} {:>10} {:>10} {:>9}\n",
        "category", "cases", "generated", "gate_passed", "compiled", "validated", "rate"
    ));
    let mut total = CategoryCounts::default();
    for (label, c) in &report.per_category {
        out.push_str(&format!(
            "{:<22} {:>8} {:>10} {:>12} {:>10} {:>10} {:>8.1}%\n",
            label.as_str(),
            c.n_cases,
            c.n_generated,
            c.n_gate_passed,
            c.n_compiled,
            c.n_runtime_validated,
            c.compilation_rate() * 100.0
        ));
        total.n_cases += c.n_cases;
        total.n_generated += c.n_generated;
        total.n_gate_passed += c.n_gate_passed;
        total.n_compiled += c.n_compiled;
        total.n_runtime_validated += c.n_runtime_validated;
    }
    out.push_str(&format!(
        "{:<22} {:>8} {:>10} {:>12} {:>10} {:>10} {:>8.1}%\n",
        "total",
        total.n_cases,
        total.n_generated,
        total.n_gate_passed,
        total.n_compiled,
        total.n_runtime_validated,
        total.compilation_rate() * 100.0
    ));
    out
}

/// Plain-text metric table: average of each static metric per category,
/// metrics as rows and categories as columns.
pub fn render_metric_table(report: &BatchReport, hash_category: &BTreeMap<String, CoarseLabel>) -> String {
    let mut by_category: BTreeMap<CoarseLabel, Vec<&StaticScoreReport>> = BTreeMap::new();
    for (hash, score) in &report.scores {
        if let Some(category) = hash_category.get(hash) {
            by_category.entry(*category).or_default().push(score);
        }
    }
    let categories: Vec<CoarseLabel> = by_category.keys().copied().collect();
    let mut out = String::new();
    out.push_str(&format!("{:<22}", "metric"));
    for c in &categories {
        out.push_str(&format!(" {:>18}", c.as_str()));
    }
    out.push('\n');
    type MetricGetter = fn(&StaticScoreReport) -> f64;
    let rows: [(&str, MetricGetter); 6] = [
        ("AST Similarity", |s| s.ast_sim),
        ("Function Accuracy", |s| s.func_acc),
        ("Call Accuracy", |s| s.call_acc),
        ("Node Accuracy", |s| s.node_acc),
        ("Variable Accuracy", |s| s.var_acc),
        ("Composite", |s| s.composite),
    ];
    for (name, get) in rows {
        out.push_str(&format!("{name:<22}"));
        for c in &categories {
            let values: Vec<f64> = by_category[c].iter().map(|s| get(s)).collect();
            let avg = values.iter().sum::<f64>() / values.len() as f64;
            out.push_str(&format!(" {avg:>18.3}"));
        }
        out.push('\n');
    }
    out
}
