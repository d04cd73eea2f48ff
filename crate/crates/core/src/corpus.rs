//! Dataset loading, seeded splits and synthetic corpora.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QuillError, Result};

/// The three question-quality classes.
///
/// The integer encoding (`HQ=0`, `LQ_CLOSE=1`, `LQ_EDIT=2`) is frozen: model
/// files, score columns and confusion matrices all use it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityLabel {
    #[serde(rename = "HQ")]
    Hq,
    #[serde(rename = "LQ_CLOSE")]
    LqClose,
    #[serde(rename = "LQ_EDIT")]
    LqEdit,
}

impl QualityLabel {
    pub const COUNT: usize = 3;
    pub const ALL: [QualityLabel; 3] = [QualityLabel::Hq, QualityLabel::LqClose, QualityLabel::LqEdit];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::Hq => "HQ",
            QualityLabel::LqClose => "LQ_CLOSE",
            QualityLabel::LqEdit => "LQ_EDIT",
        }
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "HQ" => Ok(QualityLabel::Hq),
            "LQ_CLOSE" => Ok(QualityLabel::LqClose),
            "LQ_EDIT" => Ok(QualityLabel::LqEdit),
            other => Err(other.to_string()),
        }
    }
}

/// One dataset row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub title: String,
    pub body: String,
    pub tags: String,
    /// Kept verbatim; never parsed.
    pub creation_date: String,
    pub label: QualityLabel,
}

/// CSV column names for each record field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub id: String,
    pub title: String,
    pub body: String,
    pub tags: String,
    pub creation_date: String,
    pub label: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            id: "Id".into(),
            title: "Title".into(),
            body: "Body".into(),
            tags: "Tags".into(),
            creation_date: "CreationDate".into(),
            label: "Y".into(),
        }
    }
}

/// Loads the question CSV at `path`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Vec<QuestionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| QuillError::io(path, e))?;
    load_dataset_from_reader(file, schema)
}

/// Like [`load_dataset`] but reads from any byte source. Row numbers in errors
/// count data rows from 1 (the header is not counted).
pub fn load_dataset_from_reader<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Vec<QuestionRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| QuillError::Csv { row: 0, message: e.to_string() })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| QuillError::MissingColumn(name.to_string()))
    };
    let id_col = column(&schema.id)?;
    let title_col = column(&schema.title)?;
    let body_col = column(&schema.body)?;
    let tags_col = column(&schema.tags)?;
    let date_col = column(&schema.creation_date)?;
    let label_col = column(&schema.label)?;

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in csv.records().enumerate() {
        let row_no = i as u64 + 1;
        let row = row.map_err(|e| QuillError::Csv { row: row_no, message: e.to_string() })?;
        let field = |c: usize| row.get(c).unwrap_or_default().to_string();
        let raw_label = field(label_col);
        let label = raw_label
            .trim()
            .parse::<QualityLabel>()
            .map_err(|value| QuillError::UnknownLabel { row: row_no, value })?;
        let id = field(id_col);
        if id.is_empty() {
            return Err(QuillError::Csv { row: row_no, message: "empty id".into() });
        }
        if !seen.insert(id.clone()) {
            return Err(QuillError::DuplicateId { row: row_no, id });
        }
        records.push(QuestionRecord {
            id,
            title: field(title_col),
            body: field(body_col),
            tags: field(tags_col),
            creation_date: field(date_col),
            label,
        });
    }
    Ok(records)
}

/// SHA-256 (hex) of a file's bytes; binds split manifests to their dataset.
pub fn file_fingerprint(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| QuillError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// In-place Fisher–Yates shuffle, walking from the back.
pub fn fisher_yates<T, R: Rng>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Train / validation / test partition of a record set.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<QuestionRecord>,
    pub validation: Vec<QuestionRecord>,
    pub test: Vec<QuestionRecord>,
    pub seed: u64,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub stratified: bool,
}

impl DatasetSplit {
    /// `(train, validation, test)` fractions of the whole input.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let n = (self.train.len() + self.validation.len() + self.test.len()) as f64;
        if n == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        (
            self.train.len() as f64 / n,
            self.validation.len() as f64 / n,
            self.test.len() as f64 / n,
        )
    }

    /// Records outside the test part (train then validation).
    pub fn non_test(&self) -> impl Iterator<Item = &QuestionRecord> {
        self.train.iter().chain(self.validation.iter())
    }
}

fn check_fractions(test_fraction: f64, validation_fraction: f64) -> Result<()> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(QuillError::InvalidParameter(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(QuillError::InvalidParameter(format!(
            "validation_fraction must be in [0, 1), got {validation_fraction}"
        )));
    }
    Ok(())
}

/// Part sizes for `n` records: `(test, validation)`.
pub fn split_sizes(n: usize, test_fraction: f64, validation_fraction: f64) -> (usize, usize) {
    let test = ((test_fraction * n as f64).round() as usize).min(n);
    let validation = ((validation_fraction * (n - test) as f64).round() as usize).min(n - test);
    (test, validation)
}

fn slice_shuffled(
    mut records: Vec<QuestionRecord>,
    test_fraction: f64,
    validation_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<QuestionRecord>, Vec<QuestionRecord>, Vec<QuestionRecord>) {
    fisher_yates(&mut records, rng);
    let (n_test, n_val) = split_sizes(records.len(), test_fraction, validation_fraction);
    let train = records.split_off(n_test + n_val);
    let validation = records.split_off(n_test);
    (train, validation, records)
}

/// Seeded Fisher–Yates shuffle followed by contiguous slicing into
/// `[test | validation | train]`.
pub fn split_dataset(
    records: &[QuestionRecord],
    test_fraction: f64,
    validation_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if records.is_empty() {
        return Err(QuillError::Empty("no records to split"));
    }
    check_fractions(test_fraction, validation_fraction)?;
    let mut rng = seeded_rng(seed);
    let (train, validation, test) = slice_shuffled(records.to_vec(), test_fraction, validation_fraction, &mut rng);
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
        test_fraction,
        validation_fraction,
        stratified: false,
    })
}

/// Per-class version of [`split_dataset`]: each label's records are shuffled
/// and sliced on their own, classes taken in encoding order.
pub fn split_dataset_stratified(
    records: &[QuestionRecord],
    test_fraction: f64,
    validation_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if records.is_empty() {
        return Err(QuillError::Empty("no records to split"));
    }
    check_fractions(test_fraction, validation_fraction)?;
    let mut rng = seeded_rng(seed);
    let mut out = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
        test_fraction,
        validation_fraction,
        stratified: true,
    };
    for label in QualityLabel::ALL {
        let group: Vec<_> = records.iter().filter(|r| r.label == label).cloned().collect();
        let (train, validation, test) = slice_shuffled(group, test_fraction, validation_fraction, &mut rng);
        out.train.extend(train);
        out.validation.extend(validation);
        out.test.extend(test);
    }
    Ok(out)
}

/// Record ids of each split part, bound to a dataset fingerprint.
///
/// Text form:
///
/// ```text
/// #quill-split v1 dataset=<sha256> seed=<n> test_fraction=<f> validation_fraction=<f> stratified=<bool>
/// [train]
/// <id>
/// [validation]
/// [test]
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct SplitManifest {
    pub dataset_hash: String,
    pub seed: u64,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub stratified: bool,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

const MANIFEST_MAGIC: &str = "#quill-split v1";

impl SplitManifest {
    pub fn from_split(split: &DatasetSplit, dataset_hash: &str) -> Self {
        let ids = |part: &[QuestionRecord]| part.iter().map(|r| r.id.clone()).collect();
        Self {
            dataset_hash: dataset_hash.to_string(),
            seed: split.seed,
            test_fraction: split.test_fraction,
            validation_fraction: split.validation_fraction,
            stratified: split.stratified,
            train: ids(&split.train),
            validation: ids(&split.validation),
            test: ids(&split.test),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MANIFEST_MAGIC} dataset={} seed={} test_fraction={} validation_fraction={} stratified={}\n",
            self.dataset_hash, self.seed, self.test_fraction, self.validation_fraction, self.stratified
        );
        for (name, ids) in [("train", &self.train), ("validation", &self.validation), ("test", &self.test)] {
            out.push_str(&format!("[{name}]\n"));
            for id in ids {
                out.push_str(id);
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| QuillError::Format(format!("split manifest: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let rest = header
            .strip_prefix(MANIFEST_MAGIC)
            .ok_or_else(|| bad(format!("bad header `{header}`")))?;
        let fields: HashMap<&str, &str> = rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("header lacks `{k}`")));
        let parse_err = |k: &str| bad(format!("bad `{k}` value"));
        let mut manifest = SplitManifest {
            dataset_hash: get("dataset")?.to_string(),
            seed: get("seed")?.parse().map_err(|_| parse_err("seed"))?,
            test_fraction: get("test_fraction")?.parse().map_err(|_| parse_err("test_fraction"))?,
            validation_fraction: get("validation_fraction")?
                .parse()
                .map_err(|_| parse_err("validation_fraction"))?,
            stratified: get("stratified")?.parse().map_err(|_| parse_err("stratified"))?,
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        let mut current: Option<&mut Vec<String>> = None;
        for line in lines {
            match line {
                "[train]" => current = Some(&mut manifest.train),
                "[validation]" => current = Some(&mut manifest.validation),
                "[test]" => current = Some(&mut manifest.test),
                "" => {}
                id => match current.as_deref_mut() {
                    Some(part) => part.push(id.to_string()),
                    None => return Err(bad(format!("id `{id}` before any section"))),
                },
            }
        }
        Ok(manifest)
    }

    /// Rebuilds the split from `records`; every id must resolve exactly once.
    pub fn resolve(&self, records: &[QuestionRecord]) -> Result<DatasetSplit> {
        let by_id: HashMap<&str, &QuestionRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
        let pick = |ids: &[String]| -> Result<Vec<QuestionRecord>> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|r| (*r).clone())
                        .ok_or_else(|| QuillError::Format(format!("split manifest id `{id}` not in dataset")))
                })
                .collect()
        };
        let split = DatasetSplit {
            train: pick(&self.train)?,
            validation: pick(&self.validation)?,
            test: pick(&self.test)?,
            seed: self.seed,
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            stratified: self.stratified,
        };
        if split.train.len() + split.validation.len() + split.test.len() != records.len() {
            return Err(QuillError::Format(format!(
                "split manifest covers {} ids but dataset has {} records",
                split.train.len() + split.validation.len() + split.test.len(),
                records.len()
            )));
        }
        Ok(split)
    }
}

/// Parameters of a generated corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_records: usize,
    pub vocabulary_size: usize,
    pub n_classes: usize,
    /// Probability that a token is drawn from its class's own word block
    /// rather than from the whole vocabulary. `1.0` gives disjoint class
    /// word sets.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_records: 3000,
            vocabulary_size: 500,
            n_classes: QualityLabel::COUNT,
            class_separation: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn new(n_records: usize, vocabulary_size: usize, class_separation: f64, seed: u64) -> Self {
        Self {
            n_records,
            vocabulary_size,
            n_classes: QualityLabel::COUNT,
            class_separation,
            seed,
        }
    }

    /// Stable identity of the generated corpus, used where a file hash would be.
    pub fn fingerprint(&self) -> String {
        let desc = format!(
            "synthetic n={} vocab={} classes={} separation={} seed={}",
            self.n_records, self.vocabulary_size, self.n_classes, self.class_separation, self.seed
        );
        hex::encode(Sha256::digest(desc.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 || self.vocabulary_size == 0 {
            return Err(QuillError::InvalidParameter(
                "n_records and vocabulary_size must be positive".into(),
            ));
        }
        if self.n_classes != QualityLabel::COUNT {
            return Err(QuillError::InvalidParameter(format!(
                "n_classes must be {}, got {}",
                QualityLabel::COUNT,
                self.n_classes
            )));
        }
        if !(0.0..=1.0).contains(&self.class_separation) {
            return Err(QuillError::InvalidParameter(format!(
                "class_separation must be in [0, 1], got {}",
                self.class_separation
            )));
        }
        if self.class_separation == 1.0 && self.vocabulary_size < self.n_classes {
            return Err(QuillError::InvalidParameter(format!(
                "vocabulary_size {} cannot hold {} disjoint class word sets",
                self.vocabulary_size, self.n_classes
            )));
        }
        Ok(())
    }
}

/// Name of synthetic word `index`.
pub fn synthetic_word(index: usize) -> String {
    format!("w{index}")
}

/// Class `c` owns the words whose index is congruent to `c` modulo the class count.
pub fn synthetic_class_words(spec: &SyntheticSpec, class: usize) -> Vec<usize> {
    (class..spec.vocabulary_size).step_by(spec.n_classes).collect()
}

/// Generates a labelled corpus with class-conditional word distributions.
///
/// Labels are assigned round-robin (so class counts differ by at most one)
/// and then shuffled. Each record has 6 to 14 tokens; the first three form
/// the title and the rest an HTML paragraph body.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<QuestionRecord>> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let blocks: Vec<Vec<usize>> = (0..spec.n_classes).map(|c| synthetic_class_words(spec, c)).collect();

    let mut labels: Vec<usize> = (0..spec.n_records).map(|r| r % spec.n_classes).collect();
    fisher_yates(&mut labels, &mut rng);

    let records = labels
        .into_iter()
        .enumerate()
        .map(|(r, class)| {
            let len = rng.gen_range(6..=14);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let block = &blocks[class];
                    let own = !block.is_empty() && rng.gen_bool(spec.class_separation);
                    let index = if own {
                        block[rng.gen_range(0..block.len())]
                    } else {
                        rng.gen_range(0..spec.vocabulary_size)
                    };
                    synthetic_word(index)
                })
                .collect();
            QuestionRecord {
                id: format!("syn{r:06}"),
                title: words[..3].join(" "),
                body: format!("<p>{}</p>", words[3..].join(" ")),
                tags: String::new(),
                creation_date: String::new(),
                label: QualityLabel::from_index(class).expect("class < 3"),
            }
        })
        .collect();
    Ok(records)
}

/// Count of records per label, in encoding order.
pub fn class_distribution(records: &[QuestionRecord]) -> BTreeMap<QualityLabel, usize> {
    let mut counts: BTreeMap<QualityLabel, usize> = QualityLabel::ALL.iter().map(|&l| (l, 0)).collect();
    for r in records {
        *counts.entry(r.label).or_default() += 1;
    }
    counts
}
