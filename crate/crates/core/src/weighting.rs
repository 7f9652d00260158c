//! TF, IDF and TF*IDF word weights, and weight-ranked word lists.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Bag, Document};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverse document frequencies with a fallback for unlisted words.
#[derive(Debug, Clone)]
pub struct IdfTable<F> {
    entries: HashMap<String, F>,
    default_idf: F,
}

impl<F: Real> IdfTable<F> {
    pub fn new(entries: HashMap<String, F>, default_idf: F) -> Result<Self> {
        if let Some((w, _)) = entries
            .iter()
            .find(|(_, v)| !v.is_finite() || **v < F::zero())
        {
            return Err(Error::Config(format!(
                "idf for `{w}` must be finite and >= 0"
            )));
        }
        if !default_idf.is_finite() || default_idf < F::zero() {
            return Err(Error::Config("default idf must be finite and >= 0".into()));
        }
        Ok(IdfTable {
            entries,
            default_idf,
        })
    }

    /// Reads `word<TAB>idf` lines; `#` starts a comment line. First occurrence
    /// wins and the default is the largest retained value.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut max = None;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, value) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `word<TAB>idf`".into(),
            })?;
            let value: F = value.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid idf `{}`", value.trim()),
            })?;
            if !value.is_finite() || value < F::zero() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("idf must be finite and >= 0, got {value}"),
                });
            }
            if !entries.contains_key(word) {
                max = Some(max.map_or(value, |m: F| m.max(value)));
                entries.insert(word.to_string(), value);
            }
        }
        let default_idf = max.ok_or_else(|| Error::Empty("idf file has no entries".into()))?;
        Ok(IdfTable {
            entries,
            default_idf,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// `idf(w) = ln(N / df(w))` over the given documents. Unseen words get `ln N`.
    pub fn from_documents<D: AsRef<Document>>(docs: &[D]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Empty(
                "cannot compute idf over an empty corpus".into(),
            ));
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for d in docs {
            for w in d.as_ref().bag.keys() {
                *df.entry(w.as_str()).or_insert(0) += 1;
            }
        }
        let n = F::from_count(docs.len());
        let entries = df
            .into_iter()
            .map(|(w, c)| (w.to_string(), (n / F::from_count(c)).ln()))
            .collect();
        Ok(IdfTable {
            entries,
            default_idf: n.ln(),
        })
    }

    pub fn get(&self, word: &str) -> F {
        self.entries.get(word).copied().unwrap_or(self.default_idf)
    }

    pub fn default_idf(&self) -> F {
        self.default_idf
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every value (and the default) multiplied by `k`.
    pub fn scaled(&self, k: F) -> Self {
        IdfTable {
            entries: self
                .entries
                .iter()
                .map(|(w, v)| (w.clone(), *v * k))
                .collect(),
            default_idf: self.default_idf * k,
        }
    }
}

pub fn load_idf(path: impl AsRef<Path>) -> Result<IdfTable<f64>> {
    IdfTable::load(path)
}

pub fn compute_idf<D: AsRef<Document>>(docs: &[D]) -> Result<IdfTable<f64>> {
    IdfTable::from_documents(docs)
}

/// Whether repeated occurrences of a word count once (`Types`) or per occurrence (`Tokens`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Tokens,
    #[default]
    Types,
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tokens" => Ok(Basis::Tokens),
            "types" => Ok(Basis::Types),
            _ => Err(Error::Config(format!("unknown basis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightingConfig {
    pub use_tf: bool,
    pub use_idf: bool,
    pub basis: Basis,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        WeightingConfig {
            use_tf: true,
            use_idf: true,
            basis: Basis::Types,
        }
    }
}

impl WeightingConfig {
    pub fn new(use_tf: bool, use_idf: bool, basis: Basis) -> Self {
        WeightingConfig {
            use_tf,
            use_idf,
            basis,
        }
    }

    pub fn is_uniform(&self) -> bool {
        !self.use_tf && !self.use_idf
    }
}

/// `tf^[use_tf] * idf^[use_idf]`, with `tf` the raw count of `word` in `bag`.
pub fn weight<F: Real>(word: &str, bag: &Bag, cfg: &WeightingConfig, idf: &IdfTable<F>) -> F {
    let mut w = F::one();
    if cfg.use_tf {
        w = w * F::from_count(bag.get(word).copied().unwrap_or(0));
    }
    if cfg.use_idf {
        w = w * idf.get(word);
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedWord<F> {
    pub word: String,
    pub weight: F,
    pub count: usize,
}

/// In-vocabulary bag words, heaviest first, ties broken by ascending byte order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedWords<F> {
    pub items: Vec<RankedWord<F>>,
    pub basis: Basis,
}

impl<F: Real> RankedWords<F> {
    /// The first `n` selection slots. Under `Tokens` a word fills one slot per
    /// occurrence, under `Types` exactly one.
    pub fn top(&self, n: usize) -> Vec<&str> {
        let reps = |rw: &RankedWord<F>| match self.basis {
            Basis::Tokens => rw.count,
            Basis::Types => 1,
        };
        self.items
            .iter()
            .flat_map(|rw| std::iter::repeat_n(rw.word.as_str(), reps(rw)))
            .take(n)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Words of `bag` absent from `store`, in bag order.
pub fn oov_words<F: Real>(bag: &Bag, store: &EmbeddingStore<F>) -> Vec<String> {
    bag.keys().filter(|w| !store.contains(w)).cloned().collect()
}

pub fn rank_words<F: Real>(
    doc: &Document,
    cfg: &WeightingConfig,
    idf: &IdfTable<F>,
    store: &EmbeddingStore<F>,
) -> Result<RankedWords<F>> {
    if cfg.is_uniform() {
        return Err(Error::Config(
            "ranking needs TF and/or IDF weighting; uniform weights give an arbitrary order".into(),
        ));
    }
    let mut items: Vec<RankedWord<F>> = doc
        .bag
        .iter()
        .filter(|(w, _)| store.contains(w))
        .map(|(w, &count)| RankedWord {
            word: w.clone(),
            weight: weight(w, &doc.bag, cfg, idf),
            count,
        })
        .collect();
    if items.is_empty() {
        return Err(Error::NoEmbeddableWords {
            doc: doc.id.clone(),
            oov: oov_words(&doc.bag, store),
        });
    }
    items.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(RankedWords {
        items,
        basis: cfg.basis,
    })
}

/// Union of in-vocabulary words across ranked lists, for cache warm-up.
pub fn ranked_vocabulary<'a, F: Real + 'a>(
    lists: impl IntoIterator<Item = &'a RankedWords<F>>,
) -> HashSet<&'a str> {
    lists
        .into_iter()
        .flat_map(|r| r.items.iter().map(|rw| rw.word.as_str()))
        .collect()
}
