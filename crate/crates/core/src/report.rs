//! Human-readable renderings: evidence tables, evaluation tables, tuning summaries.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{EvalReport, TuneResult};
use crate::scalar::Real;
use crate::similarity::{EvidenceTuple, MatchResult, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvidenceOrder {
    /// Descending similarity, the order the pairs were selected in.
    #[default]
    Sim,
    /// By concept word, then project word.
    Alpha,
}

impl FromStr for EvidenceOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(EvidenceOrder::Sim),
            "alpha" => Ok(EvidenceOrder::Alpha),
            _ => Err(Error::Config(format!(
                "unknown evidence order `{s}` (expected alpha|sim)"
            ))),
        }
    }
}

pub fn ordered_evidence<F: Real>(
    evidence: &[EvidenceTuple<F>],
    order: EvidenceOrder,
) -> Vec<&EvidenceTuple<F>> {
    let mut rows: Vec<_> = evidence.iter().collect();
    if order == EvidenceOrder::Alpha {
        rows.sort_by(|a, b| {
            a.concept_word
                .cmp(&b.concept_word)
                .then_with(|| a.project_word.cmp(&b.project_word))
        });
    }
    rows
}

/// `Avg. Sim  0.447  >  T=0.310  →  MATCH`
pub fn decision_line<F: Real>(result: &MatchResult<F>) -> String {
    let score = result.score.to_f64_lossy();
    let threshold = result.threshold.to_f64_lossy();
    let rel = if score > threshold {
        ">"
    } else if score < threshold {
        "<"
    } else {
        "="
    };
    let verdict = if result.decision { "MATCH" } else { "NO MATCH" };
    format!("Avg. Sim  {score:.3}  {rel}  T={threshold:.3}  \u{2192}  {verdict}")
}

/// One row per evidence pair followed by the decision line.
pub fn explain_table<F: Real>(result: &MatchResult<F>, order: EvidenceOrder) -> String {
    let rows = ordered_evidence(&result.evidence, order);
    let cw = rows
        .iter()
        .map(|e| e.concept_word.chars().count())
        .max()
        .unwrap_or(0)
        .max(12);
    let pw = rows
        .iter()
        .map(|e| e.project_word.chars().count())
        .max()
        .unwrap_or(0)
        .max(12);
    let mut out = format!("{:<cw$}  {:<pw$}  Sim\n", "Concept Word", "Project Word");
    for e in rows {
        out.push_str(&format!(
            "{:<cw$}  {:<pw$}  {:.6}\n",
            e.concept_word,
            e.project_word,
            e.sim.to_f64_lossy()
        ));
    }
    out.push_str(&decision_line(result));
    out.push('\n');
    out
}

pub fn tune_summary(result: &TuneResult) -> String {
    let mut s = format!("best_T={:.3}", result.best_threshold);
    if let Some(n) = result.best_n {
        s.push_str(&format!(" best_n={n}"));
    }
    s.push_str(&format!(
        " P={:.3} R={:.3} F={:.3}",
        result.best.precision, result.best.recall, result.best.f1
    ));
    s
}

fn flag(on: bool) -> char {
    if on {
        '+'
    } else {
        '-'
    }
}

/// Aggregate evaluation in a `method | embeddings | settings | T/n | input | P | R | F` layout.
pub fn eval_table(report: &EvalReport) -> String {
    let c = &report.config;
    let method = match c.measure {
        Measure::AvgCos => "AVG_COS_SIM",
        Measure::TopN => "TOP_n_COS_SIM_AVG",
    };
    let tn = match c.n {
        Some(n) => format!("{:.3}/{n}", c.threshold),
        None => format!("{:.3}", c.threshold),
    };
    let settings = format!(
        "{}TF {}IDF",
        flag(c.weighting.use_tf),
        flag(c.weighting.use_idf)
    );
    let meta = |k: &str| report.meta.get(k).map(String::as_str).unwrap_or("-");
    let header = format!(
        "{:<18} {:<12} {:<9} {:<9} {:<12} {:<13} {:<13} {:<13}",
        "Method", "Embeddings", "Settings", "T/n", "Conc. Input", "P", "R", "F"
    );
    let row = format!(
        "{:<18} {:<12} {:<9} {:<9} {:<12} {:<13} {:<13} {:<13}",
        method,
        meta("embeddings"),
        settings,
        tn,
        meta("concept_input"),
        format!("{:.3} \u{00b1}{:.3}", report.mean_p, report.std_p),
        format!("{:.3} \u{00b1}{:.3}", report.mean_r, report.std_r),
        format!("{:.3} \u{00b1}{:.3}", report.mean_f, report.std_f),
    );
    format!(
        "{}\n{}\n{}\nruns={} sample_size={} of {} ({}) seed={} scoring_failures={}\n",
        header.trim_end(),
        "-".repeat(header.trim_end().chars().count()),
        row.trim_end(),
        report.runs,
        report.sample_size,
        report.test_pairs,
        report.sampling,
        report.seed,
        report.scoring_failures.len()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(score: f64, threshold: f64) -> MatchResult<f64> {
        MatchResult {
            score,
            decision: score >= threshold,
            threshold,
            evidence: vec![
                EvidenceTuple {
                    concept_word: "molecules".into(),
                    project_word: "enzymes".into(),
                    sim: 0.533,
                },
                EvidenceTuple {
                    concept_word: "cells".into(),
                    project_word: "genes".into(),
                    sim: 0.427,
                },
                EvidenceTuple {
                    concept_word: "cells".into(),
                    project_word: "enzymes".into(),
                    sim: 0.438,
                },
            ],
            measure: Measure::TopN,
            n: Some(3),
        }
    }

    #[test]
    fn footer_formats() {
        assert_eq!(
            decision_line(&result(0.447, 0.31)),
            "Avg. Sim  0.447  >  T=0.310  \u{2192}  MATCH"
        );
        assert_eq!(
            decision_line(&result(0.278, 0.31)),
            "Avg. Sim  0.278  <  T=0.310  \u{2192}  NO MATCH"
        );
        assert!(decision_line(&result(0.31, 0.31)).ends_with(" MATCH"));
    }

    #[test]
    fn alpha_order() {
        let r = result(0.5, 0.3);
        let words: Vec<_> = ordered_evidence(&r.evidence, EvidenceOrder::Alpha)
            .iter()
            .map(|e| (e.concept_word.as_str(), e.project_word.as_str()))
            .collect();
        assert_eq!(
            words,
            [
                ("cells", "enzymes"),
                ("cells", "genes"),
                ("molecules", "enzymes")
            ]
        );
        let table = explain_table(&r, EvidenceOrder::Sim);
        let lines: Vec<_> = table.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("molecules") && lines[1].ends_with("0.533000"));
        assert!("nope".parse::<EvidenceOrder>().is_err());
    }
}
