//! Threshold/n grid search on tuning data and the sampled test protocol.

use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;
use crate::similarity::{round6, ClassifierConfig, Measure, Scorer};
use crate::weighting::WeightingConfig;

fn ser6<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*x))
}

/// Search space for the threshold and (top-n only) `n`. Endpoints are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_min: 0.3,
            t_max: 1.0,
            t_step: 0.005,
            n_min: 2,
            n_max: 30,
            n_step: 2,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.t_min < self.t_max && self.t_step > 0.0 && self.t_max.is_finite();
        if !ordered {
            return Err(Error::Config(format!(
                "threshold grid needs t_min < t_max and t_step > 0 (got {}..{} step {})",
                self.t_min, self.t_max, self.t_step
            )));
        }
        if self.n_min == 0 || self.n_step == 0 || self.n_min > self.n_max {
            return Err(Error::Config(
                "n grid needs 1 <= n_min <= n_max and n_step > 0".into(),
            ));
        }
        Ok(())
    }

    /// `t_min + k * t_step` for every integer `k` that stays within `t_max`.
    pub fn thresholds(&self) -> Vec<f64> {
        let steps = ((self.t_max - self.t_min) / self.t_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|k| self.t_min + k as f64 * self.t_step)
            .collect()
    }

    pub fn n_values(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.n_step).collect()
    }
}

/// Precision, recall and F1 with the underlying confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    #[serde(serialize_with = "ser6")]
    pub precision: f64,
    #[serde(serialize_with = "ser6")]
    pub recall: f64,
    #[serde(serialize_with = "ser6")]
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }
}

/// Metrics for the positive class (`true`).
pub fn prf(predictions: &[bool], labels: &[bool]) -> Result<Prf> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub label: bool,
    /// `None` when the pair could not be scored; it then counts as a negative.
    pub score: Option<f64>,
}

/// Scores for a fixed (measure, weighting, n), reused across thresholds.
#[derive(Debug, Clone, Default)]
pub struct ScoredSet {
    pub pairs: Vec<ScoredPair>,
    pub failures: Vec<String>,
}

impl ScoredSet {
    pub fn from_scores(pairs: Vec<ScoredPair>) -> Self {
        ScoredSet {
            pairs,
            failures: Vec::new(),
        }
    }

    pub fn score<F: Real>(
        ds: &Dataset,
        scorer: &Scorer<'_, F>,
        measure: Measure,
        weighting: &WeightingConfig,
        n: Option<usize>,
    ) -> Self {
        let results: Vec<_> = ds
            .pairs
            .par_iter()
            .map(|p| {
                scorer
                    .score(&p.concept, &p.project, measure, weighting, n)
                    .map(|(s, _)| s.to_f64_lossy())
                    .map_err(|e| format!("{}/{}: {e}", p.concept.id, p.project.id))
            })
            .collect();
        let mut set = ScoredSet::default();
        for (pair, r) in ds.pairs.iter().zip(results) {
            let score = match r {
                Ok(s) => Some(s),
                Err(msg) => {
                    set.failures.push(msg);
                    None
                }
            };
            set.pairs.push(ScoredPair {
                label: pair.label,
                score,
            });
        }
        set
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn predictions(&self, threshold: f64) -> Vec<bool> {
        self.pairs
            .iter()
            .map(|p| p.score.is_some_and(|s| s >= threshold))
            .collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    pub fn prf_at(&self, threshold: f64) -> Result<Prf> {
        prf(&self.predictions(threshold), &self.labels())
    }

    fn prf_at_indices(&self, threshold: f64, indices: &[usize]) -> Result<Prf> {
        let preds: Vec<bool> = indices
            .iter()
            .map(|&i| self.pairs[i].score.is_some_and(|s| s >= threshold))
            .collect();
        let labels: Vec<bool> = indices.iter().map(|&i| self.pairs[i].label).collect();
        prf(&preds, &labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub n: Option<usize>,
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub measure: Measure,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Tab-separated `TS, [N,] P, R, F` with three decimals.
    pub fn to_tsv(&self) -> String {
        let with_n = self.measure == Measure::TopN;
        let mut out = String::from(if with_n {
            "TS\tN\tP\tR\tF\n"
        } else {
            "TS\tP\tR\tF\n"
        });
        for r in &self.rows {
            out.push_str(&format!("{:.3}\t", r.threshold));
            if let (true, Some(n)) = (with_n, r.n) {
                out.push_str(&format!("{n}\t"));
            }
            out.push_str(&format!(
                "{:.3}\t{:.3}\t{:.3}\n",
                r.prf.precision, r.prf.recall, r.prf.f1
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub best_threshold: f64,
    pub best_n: Option<usize>,
    pub best: Prf,
    pub sweep: SweepTable,
    pub scoring_failures: usize,
}

/// Sweeps one scored set over all thresholds.
pub fn sweep_thresholds(
    scored: &ScoredSet,
    thresholds: &[f64],
    n: Option<usize>,
) -> Result<Vec<SweepRow>> {
    thresholds
        .iter()
        .map(|&t| {
            Ok(SweepRow {
                threshold: t,
                n,
                prf: scored.prf_at(t)?,
            })
        })
        .collect()
}

/// Best row by F, ties to the lower threshold then the lower `n`.
pub fn select_best(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().reduce(|best, r| {
        let better = r.prf.f1 > best.prf.f1
            || (r.prf.f1 == best.prf.f1
                && (r.threshold < best.threshold
                    || (r.threshold == best.threshold && r.n < best.n)));
        if better {
            r
        } else {
            best
        }
    })
}

/// Grid search over thresholds (and `n` for top-n). Pairs are scored once per
/// `n`; thresholds are applied to the stored scores.
pub fn tune<F: Real>(
    tuning_set: &Dataset,
    scorer: &Scorer<'_, F>,
    measure: Measure,
    weighting: &WeightingConfig,
    grid: &GridSpec,
) -> Result<TuneResult> {
    if tuning_set.is_empty() {
        return Err(Error::Empty("tuning set has no pairs".into()));
    }
    grid.validate()?;
    if measure == Measure::TopN && weighting.is_uniform() {
        return Err(Error::Config(
            "top-n measure needs TF and/or IDF weighting".into(),
        ));
    }
    let thresholds = grid.thresholds();
    let ns: Vec<Option<usize>> = match measure {
        Measure::AvgCos => vec![None],
        Measure::TopN => grid.n_values().into_iter().map(Some).collect(),
    };
    let mut rows = Vec::with_capacity(thresholds.len() * ns.len());
    let mut failures = 0;
    for &n in &ns {
        let scored = ScoredSet::score(tuning_set, scorer, measure, weighting, n);
        failures = failures.max(scored.failures.len());
        rows.extend(sweep_thresholds(&scored, &thresholds, n)?);
    }
    rows.sort_by(|a, b| a.threshold.total_cmp(&b.threshold).then(a.n.cmp(&b.n)));
    let best = *select_best(&rows).expect("grid is non-empty");
    Ok(TuneResult {
        best_threshold: best.threshold,
        best_n: best.n,
        best: best.prf,
        sweep: SweepTable { measure, rows },
        scoring_failures: failures,
    })
}

/// Indices drawn without replacement for evaluation run `run`.
pub fn sample_indices(len: usize, size: usize, seed: u64, run: usize) -> Vec<usize> {
    let mut rng = seed::sub_rng(seed, seed::EVAL_RUN, run as u64);
    let mut idx = index::sample(&mut rng, len, size).into_vec();
    idx.sort_unstable();
    idx
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ClassifierConfig,
    /// Free-form run metadata (embeddings, concept input, ...), echoed as given.
    pub meta: BTreeMap<String, String>,
    pub seed: u64,
    pub runs: usize,
    pub sample_fraction: f64,
    pub sample_size: usize,
    pub sampling: &'static str,
    pub test_pairs: usize,
    pub scoring_failures: Vec<String>,
    pub per_run: Vec<Prf>,
    #[serde(serialize_with = "ser6")]
    pub mean_p: f64,
    #[serde(serialize_with = "ser6")]
    pub mean_r: f64,
    #[serde(serialize_with = "ser6")]
    pub mean_f: f64,
    #[serde(serialize_with = "ser6")]
    pub std_p: f64,
    #[serde(serialize_with = "ser6")]
    pub std_r: f64,
    #[serde(serialize_with = "ser6")]
    pub std_f: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Aggregates runs over an already scored test set.
pub fn evaluate_scored(
    scored: &ScoredSet,
    config: &ClassifierConfig,
    runs: usize,
    sample_fraction: f64,
    seed: u64,
) -> Result<EvalReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "sample fraction must be in (0, 1], got {sample_fraction}"
        )));
    }
    let sample_size = (sample_fraction * scored.len() as f64).round() as usize;
    if sample_size == 0 {
        return Err(Error::Empty("sample size rounds to 0 pairs".into()));
    }
    let per_run = (0..runs)
        .map(|run| {
            scored.prf_at_indices(
                config.threshold,
                &sample_indices(scored.len(), sample_size, seed, run),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean_p, std_p) = mean_std(&per_run.iter().map(|r| r.precision).collect::<Vec<_>>());
    let (mean_r, std_r) = mean_std(&per_run.iter().map(|r| r.recall).collect::<Vec<_>>());
    let (mean_f, std_f) = mean_std(&per_run.iter().map(|r| r.f1).collect::<Vec<_>>());
    Ok(EvalReport {
        config: *config,
        meta: BTreeMap::new(),
        seed,
        runs,
        sample_fraction,
        sample_size,
        sampling: "without_replacement",
        test_pairs: scored.len(),
        scoring_failures: scored.failures.clone(),
        per_run,
        mean_p,
        mean_r,
        mean_f,
        std_p,
        std_r,
        std_f,
    })
}

/// Scores the test set once with a fixed configuration, then runs `runs`
/// independent subsamples of `round(sample_fraction * |test|)` pairs.
pub fn evaluate<F: Real>(
    test_set: &Dataset,
    scorer: &Scorer<'_, F>,
    config: &ClassifierConfig,
    runs: usize,
    sample_fraction: f64,
    seed: u64,
) -> Result<EvalReport> {
    config.validate()?;
    if test_set.is_empty() {
        return Err(Error::Empty("test set has no pairs".into()));
    }
    let scored = ScoredSet::score(
        test_set,
        scorer,
        config.measure,
        &config.weighting,
        config.n,
    );
    evaluate_scored(&scored, config, runs, sample_fraction, seed)
}
