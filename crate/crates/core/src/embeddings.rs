//! Word vectors and cosine similarity.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Immutable case-sensitive map from surface word to a fixed-dimension vector.
///
/// Vectors live in one contiguous buffer; `index` maps a word to its row.
#[derive(Debug, Clone)]
pub struct EmbeddingStore<F> {
    name: String,
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<F>,
}

impl<F: Real> EmbeddingStore<F> {
    /// Builds a store from in-memory entries. First occurrence of a word wins.
    pub fn from_entries<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<F>)>,
        S: Into<String>,
    {
        let mut builder = Builder::new(name.into());
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            builder.push(i + 1, word.into(), vector)?;
        }
        builder.finish()
    }

    /// Loads a whitespace-separated text embedding file (`word v1 ... vD` per line).
    pub fn load_text(path: impl AsRef<Path>, name: impl Into<String>) -> Result<Self> {
        Self::load_text_filtered(path, name, None)
    }

    /// Like [`load_text`](Self::load_text) but keeps only words in `keep`.
    ///
    /// Dimension consistency is still checked on every line.
    pub fn load_text_filtered(
        path: impl AsRef<Path>,
        name: impl Into<String>,
        keep: Option<&HashSet<String>>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file), name, keep).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_text<R: BufRead>(
        reader: R,
        name: impl Into<String>,
        keep: Option<&HashSet<String>>,
    ) -> Result<Self> {
        let mut builder = Builder::new(name.into());
        let mut seen_content = false;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            let mut fields = line.split_ascii_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();
            // word2vec/fastText text files start with a "<count> <dim>" header.
            if !seen_content && rest.len() == 1 && is_count(word) && is_count(rest[0]) {
                seen_content = true;
                continue;
            }
            seen_content = true;
            if let Some(dim) = builder.dimension {
                if rest.len() != dim {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {dim} components, found {}", rest.len()),
                    });
                }
            }
            if keep.is_some_and(|k| !k.contains(word)) {
                if builder.dimension.is_none() {
                    builder.dimension = Some(rest.len());
                }
                continue;
            }
            let vector = rest
                .iter()
                .map(|s| {
                    s.parse::<F>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("invalid number `{s}`"),
                    })
                })
                .collect::<Result<Vec<F>>>()?;
            builder.push(lineno, word.to_string(), vector)?;
        }
        builder.finish()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[F]> {
        self.index.get(word).map(|&row| {
            let start = row * self.dimension;
            &self.data[start..start + self.dimension]
        })
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    /// Cosine between two stored words.
    pub fn similarity(&self, a: &str, b: &str) -> Result<F> {
        let va = self
            .get(a)
            .ok_or_else(|| Error::OutOfVocabulary(a.to_string()))?;
        let vb = self
            .get(b)
            .ok_or_else(|| Error::OutOfVocabulary(b.to_string()))?;
        cosine(va, vb)
    }
}

fn is_count(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

struct Builder<F> {
    name: String,
    dimension: Option<usize>,
    index: HashMap<String, usize>,
    data: Vec<F>,
}

impl<F: Real> Builder<F> {
    fn new(name: String) -> Self {
        Builder {
            name,
            dimension: None,
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, word: String, vector: Vec<F>) -> Result<()> {
        if vector.is_empty() {
            return Err(Error::Parse {
                line,
                msg: format!("`{word}` has no components"),
            });
        }
        match self.dimension {
            None => self.dimension = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {d} components, found {}", vector.len()),
                })
            }
            Some(_) => {}
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite component for `{word}`"),
            });
        }
        if vector.iter().all(|x| x.is_zero()) {
            return Err(Error::Parse {
                line,
                msg: format!("zero vector for `{word}`"),
            });
        }
        if self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word, self.index.len());
        self.data.extend(vector);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingStore<F>> {
        let dimension = match self.dimension {
            Some(d) => d,
            None => return Err(Error::Empty("embedding file has no entries".into())),
        };
        Ok(EmbeddingStore {
            name: self.name,
            dimension,
            index: self.index,
            data: self.data,
        })
    }
}

/// `dot(a, b) / (|a| |b|)`.
///
/// Exactly symmetric: swapping the arguments only swaps the operands of
/// commutative IEEE multiplications.
pub fn cosine<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na.is_zero() || nb.is_zero() {
        return Err(Error::ZeroVector);
    }
    let c = dot / (na.sqrt() * nb.sqrt());
    // rounding can push |c| a hair past 1 for parallel vectors
    Ok(c.max(-F::one()).min(F::one()))
}

/// Unbounded concurrent cache of word-pair cosines.
///
/// Keys are canonically ordered so `(a, b)` and `(b, a)` share an entry.
#[derive(Debug, Default)]
pub struct PairSimCache<F> {
    entries: DashMap<(String, String), F>,
}

const CACHE_FORMAT_VERSION: u8 = 1;

fn canonical(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl<F: Real> PairSimCache<F> {
    pub fn new() -> Self {
        PairSimCache {
            entries: DashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<F> {
        self.entries.get(&canonical(a, b)).map(|v| *v)
    }

    /// Cosine of two stored words, computed on a miss and memoized.
    pub fn cosine(&self, store: &EmbeddingStore<F>, a: &str, b: &str) -> Result<F> {
        let key = canonical(a, b);
        if let Some(v) = self.entries.get(&key) {
            return Ok(*v);
        }
        // compute with the canonical argument order so the cached value
        // never depends on which caller got there first
        let v = store.similarity(&key.0, &key.1)?;
        self.entries.insert(key, v);
        Ok(v)
    }

    /// Fills the cache with every unordered pair (including self-pairs) of `words`.
    pub fn warm_up<S: AsRef<str>>(&self, store: &EmbeddingStore<F>, words: &[S]) -> Result<()> {
        for (i, a) in words.iter().enumerate() {
            for b in &words[i..] {
                self.cosine(store, a.as_ref(), b.as_ref())?;
            }
        }
        Ok(())
    }

    /// Writes the cache as a version byte followed by
    /// `(u32 len, wordA, u32 len, wordB, f64)` little-endian records, sorted by key.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut records: Vec<((String, String), f64)> = self
            .entries
            .iter()
            .map(|e| (e.key().clone(), e.value().to_f64_lossy()))
            .collect();
        records.sort_by(|x, y| x.0.cmp(&y.0));
        w.write_all(&[CACHE_FORMAT_VERSION])?;
        for ((a, b), v) in records {
            for word in [a, b] {
                w.write_all(&(word.len() as u32).to_le_bytes())?;
                w.write_all(word.as_bytes())?;
            }
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (&version, mut rest) = bytes
            .split_first()
            .ok_or_else(|| Error::CacheFormat("missing version byte".into()))?;
        if version != CACHE_FORMAT_VERSION {
            return Err(Error::CacheFormat(format!("unsupported version {version}")));
        }
        let cache = Self::new();
        fn take<'a>(rest: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
            if rest.len() < n {
                return Err(Error::CacheFormat("truncated record".into()));
            }
            let (head, tail) = rest.split_at(n);
            *rest = tail;
            Ok(head)
        }
        fn word(rest: &mut &[u8]) -> Result<String> {
            let len = u32::from_le_bytes(take(rest, 4)?.try_into().unwrap()) as usize;
            String::from_utf8(take(rest, len)?.to_vec())
                .map_err(|_| Error::CacheFormat("word is not UTF-8".into()))
        }
        while !rest.is_empty() {
            let a = word(&mut rest)?;
            let b = word(&mut rest)?;
            let v = f64::from_le_bytes(take(&mut rest, 8)?.try_into().unwrap());
            cache
                .entries
                .insert(canonical(&a, &b), F::from_f64_lossy(v));
        }
        Ok(cache)
    }
}
