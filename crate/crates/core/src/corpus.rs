//! Dataset ingestion: tokenization, content-word bags and concept input modes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Word counts of a document's content words. Ordered for deterministic iteration.
pub type Bag = BTreeMap<String, usize>;

const DEFAULT_FUNCTION_WORDS: &str = include_str!("../data/function_words.txt");

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// Splits on Unicode whitespace and strips leading/trailing punctuation.
/// Case and token-internal punctuation are preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(is_edge_punct))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Stop list, matched case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct FunctionWords {
    words: HashSet<String>,
}

impl FunctionWords {
    /// The bundled English list (includes `cannot`).
    pub fn english() -> Self {
        Self::parse(DEFAULT_FUNCTION_WORDS)
    }

    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        FunctionWords { words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for FunctionWords {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        FunctionWords {
            words: iter.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }
}

pub fn build_bag<S: AsRef<str>>(tokens: &[S], function_words: &FunctionWords) -> Bag {
    let mut bag = Bag::new();
    for t in tokens {
        let t = t.as_ref();
        if !function_words.contains(t) {
            *bag.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    bag
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub surface_tokens: Vec<String>,
    pub bag: Bag,
}

impl Document {
    pub fn new(id: impl Into<String>, text: &str, function_words: &FunctionWords) -> Self {
        Self::from_tokens(id, tokenize(text), function_words)
    }

    pub fn from_tokens(
        id: impl Into<String>,
        surface_tokens: Vec<String>,
        function_words: &FunctionWords,
    ) -> Self {
        let bag = build_bag(&surface_tokens, function_words);
        Document {
            id: id.into(),
            surface_tokens,
            bag,
        }
    }

    /// Document directly from word counts.
    pub fn from_bag(id: impl Into<String>, bag: Bag) -> Self {
        let surface_tokens = bag
            .iter()
            .flat_map(|(w, &c)| std::iter::repeat_n(w.clone(), c))
            .collect();
        Document {
            id: id.into(),
            surface_tokens,
            bag,
        }
    }
}

impl AsRef<Document> for Document {
    fn as_ref(&self) -> &Document {
        self
    }
}

/// Which concept fields feed tokenization. Projects always use their full text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConceptInputMode {
    Label,
    Description,
    #[default]
    Both,
}

impl ConceptInputMode {
    pub fn tokens(self, label: &str, description: &str) -> Vec<String> {
        match self {
            ConceptInputMode::Label => tokenize(label),
            ConceptInputMode::Description => tokenize(description),
            ConceptInputMode::Both => {
                let mut t = tokenize(label);
                t.extend(tokenize(description));
                t
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptInputMode::Label => "label",
            ConceptInputMode::Description => "description",
            ConceptInputMode::Both => "both",
        }
    }
}

impl FromStr for ConceptInputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "label" => Ok(Self::Label),
            "description" => Ok(Self::Description),
            "both" => Ok(Self::Both),
            _ => Err(Error::Config(format!("unknown concept input mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub concept: Arc<Document>,
    pub project: Arc<Document>,
    pub label: bool,
}

impl LabeledPair {
    pub fn key(&self) -> (&str, &str) {
        (&self.concept.id, &self.project.id)
    }
}

/// One row of the JSON-lines pair file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub concept_id: String,
    pub concept_label: String,
    pub concept_description: String,
    pub project_id: String,
    pub project_text: String,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub pairs: usize,
    pub unique_concepts: usize,
    pub unique_projects: usize,
    pub positives: usize,
    pub positive_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub pairs: Vec<LabeledPair>,
    /// Exact duplicate rows dropped at load time.
    pub duplicates_removed: usize,
}

impl Dataset {
    pub fn new(pairs: Vec<LabeledPair>) -> Self {
        Dataset {
            pairs,
            duplicates_removed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn stats(&self) -> DatasetStats {
        let concepts: HashSet<&str> = self.pairs.iter().map(|p| p.concept.id.as_str()).collect();
        let projects: HashSet<&str> = self.pairs.iter().map(|p| p.project.id.as_str()).collect();
        let positives = self.pairs.iter().filter(|p| p.label).count();
        DatasetStats {
            pairs: self.pairs.len(),
            unique_concepts: concepts.len(),
            unique_projects: projects.len(),
            positives,
            positive_rate: if self.pairs.is_empty() {
                0.0
            } else {
                positives as f64 / self.pairs.len() as f64
            },
        }
    }

    /// Distinct documents (concepts first, then projects), by id.
    pub fn documents(&self) -> Vec<Arc<Document>> {
        let mut concepts = BTreeMap::new();
        let mut projects = BTreeMap::new();
        for p in &self.pairs {
            concepts
                .entry(p.concept.id.clone())
                .or_insert_with(|| p.concept.clone());
            projects
                .entry(p.project.id.clone())
                .or_insert_with(|| p.project.clone());
        }
        concepts
            .into_values()
            .chain(projects.into_values())
            .collect()
    }

    /// Every bag word of every document.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.pairs
            .iter()
            .flat_map(|p| p.concept.bag.keys().chain(p.project.bag.keys()))
            .cloned()
            .collect()
    }

    pub fn find(&self, concept_id: &str, project_id: &str) -> Option<&LabeledPair> {
        self.pairs
            .iter()
            .find(|p| p.key() == (concept_id, project_id))
    }

    pub fn from_records<I>(records: I, mode: ConceptInputMode, fw: &FunctionWords) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, PairRecord)>,
    {
        let mut concepts: HashMap<String, Arc<Document>> = HashMap::new();
        let mut projects: HashMap<String, Arc<Document>> = HashMap::new();
        let mut seen: HashMap<(String, String), bool> = HashMap::new();
        let mut pairs = Vec::new();
        let mut duplicates = 0;
        for (row, rec) in records {
            let label = match rec.label {
                0 => false,
                1 => true,
                other => {
                    return Err(Error::Row {
                        row,
                        msg: format!("label must be 0 or 1, got {other}"),
                    })
                }
            };
            let key = (rec.concept_id.clone(), rec.project_id.clone());
            if let Some(&prev) = seen.get(&key) {
                if prev != label {
                    return Err(Error::Row {
                        row,
                        msg: format!(
                            "conflicting labels for concept `{}` / project `{}`",
                            key.0, key.1
                        ),
                    });
                }
                duplicates += 1;
                continue;
            }
            seen.insert(key, label);
            let concept = concepts
                .entry(rec.concept_id.clone())
                .or_insert_with(|| {
                    Arc::new(Document::from_tokens(
                        rec.concept_id.clone(),
                        mode.tokens(&rec.concept_label, &rec.concept_description),
                        fw,
                    ))
                })
                .clone();
            let project = projects
                .entry(rec.project_id.clone())
                .or_insert_with(|| {
                    Arc::new(Document::new(rec.project_id.clone(), &rec.project_text, fw))
                })
                .clone();
            pairs.push(LabeledPair {
                concept,
                project,
                label,
            });
        }
        Ok(Dataset {
            pairs,
            duplicates_removed: duplicates,
        })
    }

    pub fn read_jsonl<R: BufRead>(
        reader: R,
        mode: ConceptInputMode,
        fw: &FunctionWords,
    ) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let row = i + 1;
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Row {
                row,
                msg: e.to_string(),
            })?;
            records.push((row, rec));
        }
        Self::from_records(records, mode, fw)
    }
}

pub fn load_dataset(
    path: impl AsRef<Path>,
    mode: ConceptInputMode,
    fw: &FunctionWords,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::read_jsonl(BufReader::new(file), mode, fw)
}

/// Random disjoint `(tuning, test)` partition with
/// `|tuning| = round(fraction * |pairs|)`. Input order is kept inside each part.
pub fn split_tuning_test(
    ds: &Dataset,
    tuning_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(tuning_fraction > 0.0 && tuning_fraction < 1.0) {
        return Err(Error::Config(format!(
            "tuning fraction must be in (0, 1), got {tuning_fraction}"
        )));
    }
    let n = ds.pairs.len();
    let k = (tuning_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::sub_rng(seed, seed::SPLIT, 0));
    let mut in_tuning = vec![false; n];
    for &i in &order[..k] {
        in_tuning[i] = true;
    }
    let (tuning, test): (Vec<_>, Vec<_>) = ds
        .pairs
        .iter()
        .cloned()
        .zip(in_tuning)
        .partition(|(_, t)| *t);
    Ok((
        Dataset::new(tuning.into_iter().map(|(p, _)| p).collect()),
        Dataset::new(test.into_iter().map(|(p, _)| p).collect()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(c: &str, p: &str, label: u8) -> PairRecord {
        PairRecord {
            concept_id: c.into(),
            concept_label: format!("{c} label"),
            concept_description: format!("{c} description text"),
            project_id: p.into(),
            project_text: format!("{p} project text"),
            label,
        }
    }

    fn jsonl(records: &[PairRecord]) -> String {
        records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Ecosystems have carrying capacities ,"),
            ["Ecosystems", "have", "carrying", "capacities"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("ls2.a: ecosystems"), ["ls2.a", "ecosystems"]);
        assert_eq!(
            tokenize("( number of individuals )"),
            ["number", "of", "individuals"]
        );
        assert_eq!(
            tokenize("earth's \"Dead Zone\""),
            ["earth's", "Dead", "Zone"]
        );
    }

    #[test]
    fn bag_removes_function_words_keeps_case() {
        let fw: FunctionWords = ["the"].into_iter().collect();
        let bag = build_bag(&["the", "Plankton", "plankton", "the"], &fw);
        assert_eq!(
            bag,
            Bag::from([("Plankton".into(), 1), ("plankton".into(), 1)])
        );
        assert!(build_bag(&["the", "The"], &fw).is_empty());
    }

    #[test]
    fn bundled_list_has_cannot() {
        let fw = FunctionWords::english();
        let bag = build_bag(&["cannot", "move"], &fw);
        assert_eq!(bag, Bag::from([("move".into(), 1)]));
    }

    #[test]
    fn function_word_file_comments() {
        let fw = FunctionWords::parse("# header\nthe\n\n  A \n");
        assert_eq!(fw.len(), 2);
        assert!(fw.contains("The") && fw.contains("a"));
    }

    #[test]
    fn dedup_and_stats() {
        let rows = [
            rec("c1", "p1", 1),
            rec("c1", "p1", 1),
            rec("c1", "p2", 0),
            rec("c2", "p1", 1),
            rec("c2", "p3", 0),
        ];
        let ds = Dataset::read_jsonl(
            jsonl(&rows).as_bytes(),
            ConceptInputMode::Both,
            &FunctionWords::english(),
        )
        .unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.duplicates_removed, 1);
        let s = ds.stats();
        assert_eq!(
            (s.unique_concepts, s.unique_projects, s.positives),
            (2, 3, 2)
        );
        assert_eq!(s.positive_rate, 0.5);
    }

    #[test]
    fn single_duplicated_row_retains_one() {
        let rows = [rec("c", "p", 1), rec("c", "p", 1)];
        let ds = Dataset::read_jsonl(
            jsonl(&rows).as_bytes(),
            ConceptInputMode::Both,
            &FunctionWords::english(),
        )
        .unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn conflicting_duplicate_is_error() {
        let rows = [rec("c", "p", 1), rec("c", "p", 0)];
        let err = Dataset::read_jsonl(
            jsonl(&rows).as_bytes(),
            ConceptInputMode::Both,
            &FunctionWords::english(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
    }

    #[test]
    fn bad_label_and_malformed_rows() {
        let err = Dataset::read_jsonl(
            jsonl(&[rec("c", "p", 2)]).as_bytes(),
            ConceptInputMode::Both,
            &FunctionWords::english(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }));
        let text = format!("{}\n{{\"concept_id\": 3}}\n", jsonl(&[rec("c", "p", 1)]));
        let err = Dataset::read_jsonl(
            text.as_bytes(),
            ConceptInputMode::Both,
            &FunctionWords::english(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
    }

    #[test]
    fn modes_select_fields() {
        let fw = FunctionWords::english();
        let r = PairRecord {
            concept_id: "c".into(),
            concept_label: "ecosystems: interdependent relationships".into(),
            concept_description: "Ecosystems have carrying capacities".into(),
            project_id: "p".into(),
            project_text: "plankton".into(),
            label: 1,
        };
        let bag = |mode| {
            Dataset::from_records([(1, r.clone())], mode, &fw)
                .unwrap()
                .pairs[0]
                .concept
                .bag
                .clone()
        };
        let label = bag(ConceptInputMode::Label);
        let desc = bag(ConceptInputMode::Description);
        let both = bag(ConceptInputMode::Both);
        assert!(label.contains_key("interdependent") && !label.contains_key("carrying"));
        assert!(desc.contains_key("carrying") && !desc.contains_key("interdependent"));
        let mut merged = label.clone();
        for (w, c) in desc {
            *merged.entry(w).or_insert(0) += c;
        }
        assert_eq!(both, merged);
    }

    fn synthetic(n: usize) -> Dataset {
        let rows: Vec<_> = (0..n)
            .map(|i| {
                (
                    i + 1,
                    rec(&format!("c{}", i % 7), &format!("p{i}"), (i % 2) as u8),
                )
            })
            .collect();
        Dataset::from_records(rows, ConceptInputMode::Both, &FunctionWords::english()).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (t, s) = split_tuning_test(&synthetic(510), 0.2, 42).unwrap();
        assert_eq!((t.len(), s.len()), (102, 408));
        let (t, s) = split_tuning_test(&synthetic(10), 0.5, 1).unwrap();
        assert_eq!((t.len(), s.len()), (5, 5));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(split_tuning_test(&synthetic(4), f, 0).is_err());
        }
    }

    proptest! {
        #[test]
        fn split_is_deterministic_partition(n in 2usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let ds = synthetic(n);
            let (t1, s1) = split_tuning_test(&ds, frac, seed).unwrap();
            let (t2, _) = split_tuning_test(&ds, frac, seed).unwrap();
            let keys = |d: &Dataset| d.pairs.iter().map(|p| p.project.id.clone()).collect::<Vec<_>>();
            prop_assert_eq!(keys(&t1), keys(&t2));
            let a: HashSet<_> = keys(&t1).into_iter().collect();
            let b: HashSet<_> = keys(&s1).into_iter().collect();
            prop_assert!(a.is_disjoint(&b));
            prop_assert_eq!(a.len() + b.len(), n);
        }

        #[test]
        fn bagging_is_deterministic(words in prop::collection::vec("[A-Za-z]{1,6}", 0..30)) {
            let text = words.join(" ");
            let fw = FunctionWords::english();
            prop_assert_eq!(build_bag(&tokenize(&text), &fw), build_bag(&tokenize(&text), &fw));
        }
    }
}
