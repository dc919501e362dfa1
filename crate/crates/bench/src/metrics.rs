//! Accuracy, applicability and executability over benchmark results.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use repro_core::Score;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::manifest::{BenchmarkInstance, Difficulty};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no result for instance {0:?}")]
    MissingResult(String),
    #[error("no instance has a ground-truth score in 2..=4")]
    NoEligibleInstances,
    #[error("best-of-two over different instances: {0:?} vs {1:?}")]
    InstanceMismatch(String, String),
    #[error("result {0:?} has a predicted score but is marked invalid, or the reverse")]
    InconsistentResult(String),
}

/// One assessment of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAttempt {
    pub run: u32,
    pub predicted_score: Option<Score>,
    pub output_valid: bool,
    #[serde(default)]
    pub assessment_incomplete: bool,
    pub cost_usd: Decimal,
    #[serde(default)]
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workspace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Package files changed outside modified copies and output dirs.
    #[serde(default)]
    pub intrusions: usize,
}

/// The final record for one instance. A result carries a predicted score
/// exactly when its score file was valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub predicted_score: Option<Score>,
    pub output_valid: bool,
    pub cost_usd: Decimal,
    #[serde(default)]
    pub runs: Vec<RunAttempt>,
    /// 1-based index into `runs` of the run whose prediction was kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_run: Option<u32>,
}

impl InstanceResult {
    pub fn valid(id: impl Into<String>, score: Score) -> Self {
        Self {
            id: id.into(),
            predicted_score: Some(score),
            output_valid: true,
            cost_usd: Decimal::ZERO,
            runs: Vec::new(),
            selected_run: None,
        }
    }

    pub fn invalid(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            predicted_score: None,
            output_valid: false,
            cost_usd: Decimal::ZERO,
            runs: Vec::new(),
            selected_run: None,
        }
    }

    pub fn from_run(id: impl Into<String>, run: RunAttempt) -> Self {
        Self {
            id: id.into(),
            predicted_score: run.predicted_score.filter(|_| run.output_valid),
            output_valid: run.output_valid && run.predicted_score.is_some(),
            cost_usd: run.cost_usd,
            runs: vec![run],
            selected_run: Some(1),
        }
    }

    pub fn check(&self) -> Result<(), MetricError> {
        if self.output_valid != self.predicted_score.is_some() {
            return Err(MetricError::InconsistentResult(self.id.clone()));
        }
        Ok(())
    }

    /// The prediction if the output was valid.
    pub fn prediction(&self) -> Option<Score> {
        self.predicted_score.filter(|_| self.output_valid)
    }

    pub fn matches(&self, gt: Score) -> bool {
        self.prediction() == Some(gt)
    }
}

fn pair<'a>(
    results: &'a [InstanceResult],
    instances: &'a [BenchmarkInstance],
) -> Result<Vec<(&'a BenchmarkInstance, &'a InstanceResult)>, MetricError> {
    let by_id: HashMap<&str, &InstanceResult> = results.iter().map(|r| (r.id.as_str(), r)).collect();
    instances
        .iter()
        .map(|inst| {
            by_id
                .get(inst.id.as_str())
                .map(|r| (inst, *r))
                .ok_or_else(|| MetricError::MissingResult(inst.id.clone()))
        })
        .collect()
}

fn fraction(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Share of instances whose valid prediction equals the ground truth.
pub fn accuracy(results: &[InstanceResult], instances: &[BenchmarkInstance]) -> Result<f64, MetricError> {
    let pairs = pair(results, instances)?;
    if pairs.is_empty() {
        warn!("accuracy over an empty instance set is reported as 0");
    }
    let hits = pairs.iter().filter(|(i, r)| r.matches(i.ground_truth_score)).count();
    Ok(fraction(hits, pairs.len()))
}

/// Share of results with a valid score file.
pub fn applicability(results: &[InstanceResult]) -> f64 {
    if results.is_empty() {
        warn!("applicability over an empty result set is reported as 0");
    }
    fraction(
        results.iter().filter(|r| r.prediction().is_some()).count(),
        results.len(),
    )
}

/// Among instances whose ground truth is 2..=4, the share predicted 2..=4.
pub fn executability(results: &[InstanceResult], instances: &[BenchmarkInstance]) -> Result<f64, MetricError> {
    let pairs = pair(results, instances)?;
    let eligible: Vec<_> = pairs
        .iter()
        .filter(|(i, _)| i.ground_truth_score.is_executed())
        .collect();
    if eligible.is_empty() {
        return Err(MetricError::NoEligibleInstances);
    }
    let hits = eligible
        .iter()
        .filter(|(_, r)| r.prediction().is_some_and(Score::is_executed))
        .count();
    Ok(fraction(hits, eligible.len()))
}

/// Keeps the first run that matches the ground truth, else the first run.
/// Costs of both runs are summed and their run records concatenated.
pub fn best_of_two(run1: &InstanceResult, run2: &InstanceResult, gt: Score) -> Result<InstanceResult, MetricError> {
    if run1.id != run2.id {
        return Err(MetricError::InstanceMismatch(run1.id.clone(), run2.id.clone()));
    }
    let (chosen, index) = if !run1.matches(gt) && run2.matches(gt) {
        (run2, 2)
    } else {
        (run1, 1)
    };
    let mut runs = run1.runs.clone();
    runs.extend(run2.runs.iter().cloned());
    let selected_run = if run1.runs.is_empty() && run2.runs.is_empty() {
        None
    } else if index == 1 {
        Some(1)
    } else {
        Some(run1.runs.len() as u32 + 1)
    };
    Ok(InstanceResult {
        id: run1.id.clone(),
        predicted_score: chosen.predicted_score,
        output_valid: chosen.output_valid,
        cost_usd: run1.cost_usd + run2.cost_usd,
        runs,
        selected_run,
    })
}

/// Rows are ground truth, columns the predicted score; invalid outputs get
/// their own column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u32; 4]; 4],
    pub invalid: [u32; 4],
}

impl Confusion {
    pub fn row_total(&self, gt: Score) -> u32 {
        self.counts[gt.index()].iter().sum::<u32>() + self.invalid[gt.index()]
    }

    pub fn diagonal(&self) -> u32 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u32 {
        Score::ALL.iter().map(|s| self.row_total(*s)).sum()
    }
}

pub fn confusion(results: &[InstanceResult], instances: &[BenchmarkInstance]) -> Result<Confusion, MetricError> {
    let mut m = Confusion::default();
    for (inst, r) in pair(results, instances)? {
        let row = inst.ground_truth_score.index();
        match r.prediction() {
            Some(p) => m.counts[row][p.index()] += 1,
            None => m.invalid[row] += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub n: usize,
    pub accuracy: f64,
    /// None when the level has no instance with ground truth 2..=4.
    pub executability: Option<f64>,
    /// Ground-truth instance counts for scores 1..=4.
    pub score_totals: [u32; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub n: usize,
    pub accuracy: f64,
    pub applicability: f64,
    pub executability: Option<f64>,
    pub mean_cost_usd: Decimal,
    pub confusion: Confusion,
    pub score_totals: [u32; 4],
    pub per_level: BTreeMap<Difficulty, LevelMetrics>,
    /// Instances with neither a difficulty label nor features.
    pub unlabeled: usize,
}

fn executability_or_none(
    results: &[InstanceResult],
    instances: &[BenchmarkInstance],
) -> Result<Option<f64>, MetricError> {
    match executability(results, instances) {
        Ok(v) => Ok(Some(v)),
        Err(MetricError::NoEligibleInstances) => Ok(None),
        Err(e) => Err(e),
    }
}

fn score_totals(instances: &[BenchmarkInstance]) -> [u32; 4] {
    let mut totals = [0; 4];
    for inst in instances {
        totals[inst.ground_truth_score.index()] += 1;
    }
    totals
}

/// All metrics plus the confusion matrix and per-level tables.
pub fn breakdown(results: &[InstanceResult], instances: &[BenchmarkInstance]) -> Result<MetricSet, MetricError> {
    let pairs = pair(results, instances)?;
    let matched: Vec<InstanceResult> = pairs.iter().map(|(_, r)| (*r).clone()).collect();
    let mean_cost_usd = if matched.is_empty() {
        Decimal::ZERO
    } else {
        (matched.iter().map(|r| r.cost_usd).sum::<Decimal>() / Decimal::from(matched.len())).round_dp(4)
    };

    let mut groups: BTreeMap<Difficulty, Vec<BenchmarkInstance>> = BTreeMap::new();
    let mut unlabeled = 0;
    for inst in instances {
        match inst.level() {
            Some(level) => groups.entry(level).or_default().push(inst.clone()),
            None => unlabeled += 1,
        }
    }
    let mut per_level = BTreeMap::new();
    for (level, group) in groups {
        per_level.insert(
            level,
            LevelMetrics {
                n: group.len(),
                accuracy: accuracy(results, &group)?,
                executability: executability_or_none(results, &group)?,
                score_totals: score_totals(&group),
            },
        );
    }

    Ok(MetricSet {
        n: instances.len(),
        accuracy: accuracy(results, instances)?,
        applicability: applicability(&matched),
        executability: executability_or_none(results, instances)?,
        mean_cost_usd,
        confusion: confusion(results, instances)?,
        score_totals: score_totals(instances),
        per_level,
        unlabeled,
    })
}
