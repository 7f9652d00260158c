//! The two document-pair measures and match decisions.
//!
//! `AVG_COS_SIM` averages first and compares once. `TOP_n_COS_SIM_AVG`
//! compares selected word pairs first and averages their similarities; the
//! selected pairs are returned as evidence.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabeledPair};
use crate::embeddings::{cosine, EmbeddingStore, PairSimCache};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weighting::{oov_words, rank_words, weight, Basis, IdfTable, WeightingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Measure {
    #[serde(alias = "avg", alias = "avg_cos_sim")]
    AvgCos,
    #[serde(alias = "topn", alias = "top_n_cos_sim_avg")]
    TopN,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::AvgCos => "avg_cos_sim",
            Measure::TopN => "top_n_cos_sim_avg",
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "avg" | "avg_cos_sim" | "avgcos" => Ok(Measure::AvgCos),
            "topn" | "top_n" | "top_n_cos_sim_avg" => Ok(Measure::TopN),
            _ => Err(Error::Config(format!("unknown measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceTuple<F> {
    pub concept_word: String,
    pub project_word: String,
    pub sim: F,
}

/// Rounds to 6 decimals for JSON output.
pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl<F: Real> Serialize for EvidenceTuple<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EvidenceTuple", 3)?;
        st.serialize_field("c_word", &self.concept_word)?;
        st.serialize_field("p_word", &self.project_word)?;
        st.serialize_field("sim", &round6(self.sim.to_f64_lossy()))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult<F> {
    pub score: F,
    pub decision: bool,
    pub threshold: F,
    pub evidence: Vec<EvidenceTuple<F>>,
    pub measure: Measure,
    pub n: Option<usize>,
}

impl<F: Real> Serialize for MatchResult<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MatchResult", 6)?;
        st.serialize_field("score", &round6(self.score.to_f64_lossy()))?;
        st.serialize_field("decision", &u8::from(self.decision))?;
        st.serialize_field("threshold", &round6(self.threshold.to_f64_lossy()))?;
        st.serialize_field("measure", &self.measure)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("evidence", &self.evidence)?;
        st.end()
    }
}

/// A pair matches iff its score reaches the threshold (inclusive).
pub fn classify<F: Real>(score: F, threshold: F) -> bool {
    score >= threshold
}

/// Weighted mean of a document's in-vocabulary word vectors.
fn document_vector<F: Real>(
    doc: &Document,
    cfg: &WeightingConfig,
    idf: &IdfTable<F>,
    store: &EmbeddingStore<F>,
) -> Result<Vec<F>> {
    let mut sum = vec![F::zero(); store.dimension()];
    let mut total = F::zero();
    let mut any = false;
    for (word, &count) in &doc.bag {
        let Some(v) = store.get(word) else {
            continue;
        };
        any = true;
        // under Tokens each occurrence contributes; with TF on that is already in the weight
        let factor = match cfg.basis {
            Basis::Tokens if !cfg.use_tf => F::from_count(count),
            _ => F::one(),
        };
        let w = weight(word, &doc.bag, cfg, idf) * factor;
        for (s, &x) in sum.iter_mut().zip(v) {
            *s = *s + w * x;
        }
        total = total + w;
    }
    if !any {
        return Err(Error::NoEmbeddableWords {
            doc: doc.id.clone(),
            oov: oov_words(&doc.bag, store),
        });
    }
    if total.is_zero() {
        return Err(Error::ZeroWeight(doc.id.clone()));
    }
    for s in &mut sum {
        *s = *s / total;
    }
    Ok(sum)
}

/// Cosine between the weighted mean vectors of `c` and `p`.
pub fn avg_cos_sim<F: Real>(
    c: &Document,
    p: &Document,
    cfg: &WeightingConfig,
    idf: &IdfTable<F>,
    store: &EmbeddingStore<F>,
) -> Result<F> {
    let vc = document_vector(c, cfg, idf, store)?;
    let vp = document_vector(p, cfg, idf, store)?;
    cosine(&vc, &vp)
}

fn evidence_order<F: Real>(a: &EvidenceTuple<F>, b: &EvidenceTuple<F>) -> Ordering {
    b.sim
        .partial_cmp(&a.sim)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.concept_word.cmp(&b.concept_word))
        .then_with(|| a.project_word.cmp(&b.project_word))
}

/// Mean of the `n` highest cosines among all pairs of the `n` top-ranked words
/// of each document.
///
/// Documents with fewer than `n` ranked words contribute all they have, and
/// at most `|C|*|P|` similarities are averaged. Evidence is returned in
/// descending similarity order.
pub fn top_n_cos_sim_avg<F: Real>(
    c: &Document,
    p: &Document,
    n: usize,
    cfg: &WeightingConfig,
    idf: &IdfTable<F>,
    store: &EmbeddingStore<F>,
    cache: Option<&PairSimCache<F>>,
) -> Result<(F, Vec<EvidenceTuple<F>>)> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let ranked_c = rank_words(c, cfg, idf, store)?;
    let ranked_p = rank_words(p, cfg, idf, store)?;
    let top_c = ranked_c.top(n);
    let top_p = ranked_p.top(n);

    let mut pairs = Vec::with_capacity(top_c.len() * top_p.len());
    for &cw in &top_c {
        for &pw in &top_p {
            let sim = match cache {
                Some(cache) => cache.cosine(store, cw, pw)?,
                None => store.similarity(cw, pw)?,
            };
            pairs.push(EvidenceTuple {
                concept_word: cw.to_string(),
                project_word: pw.to_string(),
                sim,
            });
        }
    }
    pairs.sort_by(evidence_order);
    pairs.truncate(n);
    let total: F = pairs.iter().map(|e| e.sim).sum();
    Ok((total / F::from_count(pairs.len()), pairs))
}

/// Everything needed to turn a pair into a decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierConfig {
    pub measure: Measure,
    pub weighting: WeightingConfig,
    pub threshold: f64,
    pub n: Option<usize>,
}

impl ClassifierConfig {
    pub fn avg(weighting: WeightingConfig, threshold: f64) -> Self {
        ClassifierConfig {
            measure: Measure::AvgCos,
            weighting,
            threshold,
            n: None,
        }
    }

    pub fn top_n(weighting: WeightingConfig, n: usize, threshold: f64) -> Self {
        ClassifierConfig {
            measure: Measure::TopN,
            weighting,
            threshold,
            n: Some(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        match (self.measure, self.n) {
            (Measure::TopN, Some(n)) if n >= 1 => {}
            (Measure::TopN, _) => return Err(Error::Config("top-n measure needs n >= 1".into())),
            (Measure::AvgCos, Some(_)) => {
                return Err(Error::Config(
                    "n is only valid for the top-n measure".into(),
                ))
            }
            (Measure::AvgCos, None) => {}
        }
        if self.measure == Measure::TopN && self.weighting.is_uniform() {
            return Err(Error::Config(
                "top-n measure needs TF and/or IDF weighting".into(),
            ));
        }
        Ok(())
    }
}

/// Scoring context over shared, immutable resources.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a, F> {
    pub store: &'a EmbeddingStore<F>,
    pub idf: &'a IdfTable<F>,
    pub cache: Option<&'a PairSimCache<F>>,
}

impl<'a, F: Real> Scorer<'a, F> {
    pub fn new(
        store: &'a EmbeddingStore<F>,
        idf: &'a IdfTable<F>,
        cache: Option<&'a PairSimCache<F>>,
    ) -> Self {
        Scorer { store, idf, cache }
    }

    /// Raw score (and evidence for top-n) of a document pair.
    pub fn score(
        &self,
        c: &Document,
        p: &Document,
        measure: Measure,
        weighting: &WeightingConfig,
        n: Option<usize>,
    ) -> Result<(F, Vec<EvidenceTuple<F>>)> {
        match measure {
            Measure::AvgCos => Ok((
                avg_cos_sim(c, p, weighting, self.idf, self.store)?,
                Vec::new(),
            )),
            Measure::TopN => {
                let n = n.ok_or_else(|| Error::Config("top-n measure needs n".into()))?;
                top_n_cos_sim_avg(c, p, n, weighting, self.idf, self.store, self.cache)
            }
        }
    }

    pub fn match_documents(
        &self,
        c: &Document,
        p: &Document,
        config: &ClassifierConfig,
    ) -> Result<MatchResult<F>> {
        config.validate()?;
        let (score, evidence) = self.score(c, p, config.measure, &config.weighting, config.n)?;
        let threshold = F::from_f64_lossy(config.threshold);
        Ok(MatchResult {
            score,
            decision: classify(score, threshold),
            threshold,
            evidence,
            measure: config.measure,
            n: config.n,
        })
    }

    pub fn score_pair(
        &self,
        pair: &LabeledPair,
        config: &ClassifierConfig,
    ) -> Result<MatchResult<F>> {
        self.match_documents(&pair.concept, &pair.project, config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Bag;

    fn store(entries: &[(&str, &[f64])]) -> EmbeddingStore<f64> {
        EmbeddingStore::from_entries("t", entries.iter().map(|(w, v)| (*w, v.to_vec()))).unwrap()
    }

    fn doc(id: &str, items: &[(&str, usize)]) -> Document {
        Document::from_bag(
            id,
            items
                .iter()
                .map(|(w, c)| (w.to_string(), *c))
                .collect::<Bag>(),
        )
    }

    fn no_idf() -> IdfTable<f64> {
        IdfTable::new(Default::default(), 1.0).unwrap()
    }

    const UNWEIGHTED: WeightingConfig = WeightingConfig {
        use_tf: false,
        use_idf: false,
        basis: Basis::Types,
    };
    const TF: WeightingConfig = WeightingConfig {
        use_tf: true,
        use_idf: false,
        basis: Basis::Types,
    };

    /// Enumerate all pairs, sort sims descending, average the top `n`.
    fn brute_force(top_c: &[&str], top_p: &[&str], n: usize, s: &EmbeddingStore<f64>) -> f64 {
        let mut sims = Vec::new();
        for c in top_c {
            for p in top_p {
                let (a, b) = (s.get(c).unwrap(), s.get(p).unwrap());
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                sims.push(dot / (na * nb));
            }
        }
        sims.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let k = n.min(sims.len());
        sims[..k].iter().sum::<f64>() / k as f64
    }

    #[test]
    fn avg_identical_and_orthogonal() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("c", &[0.3, 0.9])]);
        let d = doc("d", &[("a", 2), ("c", 1)]);
        assert!((avg_cos_sim(&d, &d, &TF, &no_idf(), &s).unwrap() - 1.0).abs() <= 1e-12);
        let sim = avg_cos_sim(
            &doc("c", &[("a", 1)]),
            &doc("p", &[("b", 1)]),
            &UNWEIGHTED,
            &no_idf(),
            &s,
        )
        .unwrap();
        assert_eq!(sim, 0.0);
    }

    #[test]
    fn avg_hand_computed_mean() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let sim = avg_cos_sim(
            &doc("c", &[("a", 1), ("b", 1)]),
            &doc("p", &[("a", 1)]),
            &UNWEIGHTED,
            &no_idf(),
            &s,
        )
        .unwrap();
        assert!((sim - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn avg_tokens_basis_counts_occurrences() {
        // c = {a:3, b:1}: tokens mean (0.75, 0.25), types mean (0.5, 0.5)
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let c = doc("c", &[("a", 3), ("b", 1)]);
        let p = doc("p", &[("a", 1)]);
        let tokens = WeightingConfig::new(false, false, Basis::Tokens);
        let sim = avg_cos_sim(&c, &p, &tokens, &no_idf(), &s).unwrap();
        assert!((sim - 0.75 / (0.75f64.powi(2) + 0.25f64.powi(2)).sqrt()).abs() < 1e-15);
        // with TF on, tokens and types coincide
        let a = avg_cos_sim(
            &c,
            &p,
            &WeightingConfig::new(true, false, Basis::Tokens),
            &no_idf(),
            &s,
        )
        .unwrap();
        let b = avg_cos_sim(&c, &p, &TF, &no_idf(), &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, sim);
    }

    #[test]
    fn avg_errors() {
        let s = store(&[("a", &[1.0, 0.0])]);
        let err = avg_cos_sim(
            &doc("c9", &[("zz", 1)]),
            &doc("p", &[("a", 1)]),
            &UNWEIGHTED,
            &no_idf(),
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoEmbeddableWords { doc, .. } if doc == "c9"));
        let zero_idf = IdfTable::new([("a".to_string(), 0.0)].into(), 0.0).unwrap();
        let idf_only = WeightingConfig::new(false, true, Basis::Types);
        let err = avg_cos_sim(
            &doc("c", &[("a", 1)]),
            &doc("p", &[("a", 1)]),
            &idf_only,
            &zero_idf,
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroWeight(_)));
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[-1.0, 0.0])]);
        let err = avg_cos_sim(
            &doc("c", &[("a", 1), ("b", 1)]),
            &doc("p", &[("a", 1)]),
            &UNWEIGHTED,
            &no_idf(),
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroVector));
    }

    #[test]
    fn top_n_self_pairs_dominate() {
        let s = store(&[("w1", &[1.0, 0.0]), ("w2", &[0.0, 1.0])]);
        let d = doc("d", &[("w1", 1), ("w2", 1)]);
        let (score, ev) = top_n_cos_sim_avg(&d, &d, 2, &TF, &no_idf(), &s, None).unwrap();
        assert_eq!(score, 1.0);
        let got: Vec<_> = ev
            .iter()
            .map(|e| (e.concept_word.as_str(), e.project_word.as_str(), e.sim))
            .collect();
        assert_eq!(got, [("w1", "w1", 1.0), ("w2", "w2", 1.0)]);
    }

    #[test]
    fn top_n_one_is_max_of_top_words() {
        let s = store(&[
            ("a", &[1.0, 0.2]),
            ("b", &[0.1, 1.0]),
            ("x", &[0.6, 0.8]),
            ("y", &[1.0, -1.0]),
        ]);
        let c = doc("c", &[("a", 3), ("b", 1)]);
        let p = doc("p", &[("x", 2), ("y", 1)]);
        let (score, ev) = top_n_cos_sim_avg(&c, &p, 1, &TF, &no_idf(), &s, None).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(
            (ev[0].concept_word.as_str(), ev[0].project_word.as_str()),
            ("a", "x")
        );
        assert_eq!(score, s.similarity("a", "x").unwrap());
    }

    #[test]
    fn top_n_matches_brute_force_on_three_word_documents() {
        let s = store(&[
            ("c1", &[1.0, 0.5]),
            ("c2", &[0.2, 1.0]),
            ("c3", &[-0.4, 0.9]),
            ("p1", &[0.9, 0.1]),
            ("p2", &[0.3, 0.3]),
            ("p3", &[-1.0, 0.2]),
        ]);
        let c = doc("c", &[("c1", 1), ("c2", 1), ("c3", 1)]);
        let p = doc("p", &[("p1", 1), ("p2", 1), ("p3", 1)]);
        let (score, ev) = top_n_cos_sim_avg(&c, &p, 2, &TF, &no_idf(), &s, None).unwrap();
        let expected = brute_force(&["c1", "c2"], &["p1", "p2"], 2, &s);
        assert!((score - expected).abs() <= 1e-12);
        assert_eq!(ev.len(), 2);
        assert!(ev[0].sim >= ev[1].sim);
    }

    #[test]
    fn top_n_short_documents_truncate() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8])]);
        let (score, ev) = top_n_cos_sim_avg(
            &doc("c", &[("a", 1)]),
            &doc("p", &[("b", 1)]),
            14,
            &TF,
            &no_idf(),
            &s,
            None,
        )
        .unwrap();
        assert_eq!(ev.len(), 1);
        assert!((score - 0.6).abs() < 1e-15);
    }

    #[test]
    fn top_n_rejects_zero_n_and_empty_docs() {
        let s = store(&[("a", &[1.0, 0.0])]);
        let d = doc("d", &[("a", 1)]);
        assert!(top_n_cos_sim_avg(&d, &d, 0, &TF, &no_idf(), &s, None).is_err());
        let e = doc("e", &[("zzz", 1)]);
        assert!(matches!(
            top_n_cos_sim_avg(&d, &e, 3, &TF, &no_idf(), &s, None),
            Err(Error::NoEmbeddableWords { .. })
        ));
    }

    #[test]
    fn top_n_uses_cache() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.6, 0.8]), ("c", &[0.0, 1.0])]);
        let cache = PairSimCache::new();
        let c = doc("c", &[("a", 1), ("b", 1)]);
        let p = doc("p", &[("b", 1), ("c", 1)]);
        let with = top_n_cos_sim_avg(&c, &p, 4, &TF, &no_idf(), &s, Some(&cache)).unwrap();
        let without = top_n_cos_sim_avg(&c, &p, 4, &TF, &no_idf(), &s, None).unwrap();
        assert_eq!(with, without);
        assert_eq!(cache.len(), 4);
    }

    #[test]
    fn classify_boundary() {
        assert!(classify(0.447, 0.310));
        assert!(!classify(0.278, 0.310));
        assert!(classify(0.31, 0.31));
    }

    #[test]
    fn score_pair_dispatch() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let idf = no_idf();
        let scorer = Scorer::new(&s, &idf, None);
        let d = doc("d", &[("a", 1), ("b", 2)]);
        let m = scorer
            .match_documents(&d, &d, &ClassifierConfig::top_n(TF, 2, 1.0))
            .unwrap();
        assert!(m.decision);
        assert_eq!(m.n, Some(2));
        let m = scorer
            .match_documents(
                &doc("c", &[("a", 1)]),
                &doc("p", &[("b", 1)]),
                &ClassifierConfig::avg(UNWEIGHTED, 0.5),
            )
            .unwrap();
        assert!(!m.decision);
        assert!(m.evidence.is_empty());
        assert!(ClassifierConfig {
            n: None,
            ..ClassifierConfig::top_n(TF, 1, 0.5)
        }
        .validate()
        .is_err());
        assert!(ClassifierConfig {
            n: Some(2),
            ..ClassifierConfig::avg(TF, 0.5)
        }
        .validate()
        .is_err());
        assert!(ClassifierConfig::top_n(UNWEIGHTED, 2, 0.5)
            .validate()
            .is_err());
    }

    #[test]
    fn match_result_json_shape() {
        let m = MatchResult {
            score: 0.4471234567,
            decision: true,
            threshold: 0.31,
            evidence: vec![EvidenceTuple {
                concept_word: "cells".into(),
                project_word: "enzymes".into(),
                sim: 0.43812345,
            }],
            measure: Measure::TopN,
            n: Some(14),
        };
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["score"], 0.447123);
        assert_eq!(v["decision"], 1);
        assert_eq!(v["measure"], "top_n_cos_sim_avg");
        assert_eq!(v["n"], 14);
        assert_eq!(v["evidence"][0]["c_word"], "cells");
        assert_eq!(v["evidence"][0]["sim"], 0.438123);
    }

    #[test]
    fn generic_over_f32() {
        let s = EmbeddingStore::<f32>::from_entries(
            "t",
            [("a", vec![1.0f32, 0.0]), ("b", vec![0.6, 0.8])],
        )
        .unwrap();
        let idf = IdfTable::<f32>::new(Default::default(), 1.0).unwrap();
        let c = doc("c", &[("a", 1)]);
        let p = doc("p", &[("b", 1)]);
        let (score, _) = top_n_cos_sim_avg(&c, &p, 2, &TF, &idf, &s, None).unwrap();
        assert!((score - 0.6).abs() < 1e-6);
        assert!((avg_cos_sim(&c, &p, &TF, &idf, &s).unwrap() - 0.6).abs() < 1e-6);
    }
}
