//! Tokenization, stop-word removal, vocabulary and binary bag-of-words vectors.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::QuestionRecord;
use crate::error::{QuillError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_html: bool,
    pub min_token_length: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_html: true,
            min_token_length: 1,
        }
    }
}

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^<>]*>").unwrap());
static ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(#[0-9]{1,7}|#[xX][0-9a-fA-F]{1,6}|[a-zA-Z]+);").unwrap());

/// Removes markup tags and decodes character entities. Text inside
/// `<code>` blocks stays as ordinary text.
pub fn strip_html(text: &str) -> String {
    let untagged = TAG.replace_all(text, " ");
    ENTITY
        .replace_all(&untagged, |caps: &regex::Captures<'_>| {
            let name = &caps[1];
            let decoded = if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
            } else if let Some(dec) = name.strip_prefix('#') {
                dec.parse().ok().and_then(char::from_u32)
            } else {
                match name {
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "amp" => Some('&'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => None,
                }
            };
            decoded.map_or_else(|| caps[0].to_string(), String::from)
        })
        .into_owned()
}

/// Splits text into maximal runs of alphanumeric characters.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let cleaned;
    let text = if config.strip_html {
        cleaned = strip_html(text);
        cleaned.as_str()
    } else {
        text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && t.chars().count() >= config.min_token_length)
        .map(|t| if config.lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

/// Version tag of the embedded stop-word list.
pub const STOPLIST_VERSION: &str = "en-v1";

const STOPWORDS_EN_V1: &str = include_str!("stopwords_en_v1.txt");

/// A set of words to drop before vectorizing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    /// The embedded English list (175 lowercase function words).
    pub fn english() -> Self {
        Self::from_text(STOPWORDS_EN_V1)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; `#` starts a comment line.
    pub fn from_text(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl FromIterator<String> for Stoplist {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self {
            words: iter.into_iter().collect(),
        }
    }
}

pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens.iter().filter(|t| !stoplist.contains(t)).cloned().collect()
}

/// Which record fields feed the bag of words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextFields {
    #[default]
    TitleBody,
    Title,
    Body,
}

impl TextFields {
    pub fn as_str(self) -> &'static str {
        match self {
            TextFields::TitleBody => "title-body",
            TextFields::Title => "title",
            TextFields::Body => "body",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "title-body" => Some(TextFields::TitleBody),
            "title" => Some(TextFields::Title),
            "body" => Some(TextFields::Body),
            _ => None,
        }
    }

    pub fn text_of(self, record: &QuestionRecord) -> String {
        match self {
            TextFields::TitleBody => format!("{}\n{}", record.title, record.body),
            TextFields::Title => record.title.clone(),
            TextFields::Body => record.body.clone(),
        }
    }
}

/// Text → token pipeline: field selection, tokenization, stop-word removal.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    pub tokenizer: TokenizerConfig,
    pub fields: TextFields,
    pub stoplist: Stoplist,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            tokenizer: TokenizerConfig::default(),
            fields: TextFields::default(),
            stoplist: Stoplist::english(),
        }
    }
}

impl Preprocessor {
    pub fn tokens(&self, text: &str) -> Vec<String> {
        remove_stopwords(&tokenize(text, &self.tokenizer), &self.stoplist)
    }

    pub fn record_tokens(&self, record: &QuestionRecord) -> Vec<String> {
        self.tokens(&self.fields.text_of(record))
    }
}

/// Word → feature index map. Indices follow sorted word order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    min_document_frequency: usize,
}

const VOCAB_MAGIC: &str = "#quill-vocab v1";

impl Vocabulary {
    /// Builds a vocabulary from already sorted, distinct words.
    fn from_sorted(words: Vec<String>, min_document_frequency: usize) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Self {
            words,
            index,
            min_document_frequency,
        }
    }

    /// Builds directly from a word list (sorted and deduplicated here).
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut words: Vec<String> = words.into_iter().collect();
        words.sort_unstable();
        words.dedup();
        Self::from_sorted(words, 1)
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_document_frequency(&self) -> usize {
        self.min_document_frequency
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| i as usize)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    /// `(word, index)` pairs in index (= sorted word) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.words.iter().enumerate().map(|(i, w)| (w.as_str(), i))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{VOCAB_MAGIC} size={} min_df={}\n",
            self.size(),
            self.min_document_frequency
        );
        for (word, i) in self.iter() {
            out.push_str(word);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| QuillError::Format(format!("vocabulary: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let rest = header
            .strip_prefix(VOCAB_MAGIC)
            .ok_or_else(|| bad(format!("bad header `{header}`")))?;
        let mut size = None;
        let mut min_df = None;
        for kv in rest.split_whitespace() {
            match kv.split_once('=') {
                Some(("size", v)) => size = v.parse::<usize>().ok(),
                Some(("min_df", v)) => min_df = v.parse::<usize>().ok(),
                _ => return Err(bad(format!("bad header field `{kv}`"))),
            }
        }
        let size = size.ok_or_else(|| bad("header lacks size".into()))?;
        let min_df = min_df.ok_or_else(|| bad("header lacks min_df".into()))?;
        let mut words = Vec::with_capacity(size);
        for (n, line) in lines.enumerate() {
            let (word, idx) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("line {} lacks a tab", n + 2)))?;
            if idx.parse::<usize>().ok() != Some(n) {
                return Err(bad(format!("line {}: index `{idx}` out of order", n + 2)));
            }
            if words.last().is_some_and(|prev: &String| prev.as_str() >= word) {
                return Err(bad(format!("line {}: words not strictly sorted", n + 2)));
            }
            words.push(word.to_string());
        }
        if words.len() != size {
            return Err(bad(format!("header says {size} words, found {}", words.len())));
        }
        Ok(Self::from_sorted(words, min_df))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| QuillError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| QuillError::io(path, e))?;
        Self::parse(&text)
    }

    /// SHA-256 (hex) of the canonical file form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Indexes every word found in at least `min_document_frequency` documents.
pub fn build_vocabulary<D: AsRef<[String]>>(documents: &[D], min_document_frequency: usize) -> Result<Vocabulary> {
    if documents.is_empty() {
        return Err(QuillError::Empty("no documents for vocabulary"));
    }
    if min_document_frequency == 0 {
        return Err(QuillError::InvalidParameter("min_document_frequency must be >= 1".into()));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        let distinct: HashSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for w in distinct {
            *df.entry(w).or_default() += 1;
        }
    }
    let mut words: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_document_frequency)
        .map(|(w, _)| w.to_string())
        .collect();
    words.sort_unstable();
    Ok(Vocabulary::from_sorted(words, min_document_frequency))
}

/// Binary bag-of-words: the set of feature indices present in a document.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SparseBinaryVector {
    indices: Vec<u32>,
    dimension: usize,
}

impl SparseBinaryVector {
    /// `indices` must be strictly increasing and below `dimension`.
    pub fn new(indices: Vec<u32>, dimension: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuillError::InvalidParameter("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dimension {
                return Err(QuillError::InvalidParameter(format!(
                    "index {last} out of range for dimension {dimension}"
                )));
            }
        }
        Ok(Self { indices, dimension })
    }

    /// Any order, duplicates allowed.
    pub fn from_unsorted(mut indices: Vec<u32>, dimension: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, dimension)
    }

    /// Treats every non-zero entry as present.
    pub fn from_dense(values: &[f64]) -> Self {
        let indices = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i as u32)
            .collect();
        Self {
            indices,
            dimension: values.len(),
        }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self {
            indices: Vec::new(),
            dimension,
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&(index as u32)).is_ok()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &i in &self.indices {
            out[i as usize] = 1.0;
        }
        out
    }

    pub(crate) fn check_dimension(&self, expected: usize) -> Result<()> {
        if self.dimension != expected {
            return Err(QuillError::DimensionMismatch {
                expected,
                actual: self.dimension,
            });
        }
        Ok(())
    }
}

/// Binary weighting: index `i` is present iff word `i` occurs at least once.
/// Out-of-vocabulary tokens are ignored.
pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseBinaryVector {
    let mut indices: Vec<u32> = tokens
        .iter()
        .filter_map(|t| vocab.index.get(t.as_ref()).copied())
        .collect();
    indices.sort_unstable();
    indices.dedup();
    SparseBinaryVector {
        indices,
        dimension: vocab.size(),
    }
}
