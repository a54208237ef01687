//! Corpus ingestion, label codec, deduplication, and deterministic
//! stratified train/dev/test splits.
//!
//! Splits are reproducible byte-for-byte across runs and platforms: shuffling
//! uses a fixed SplitMix64 generator with Fisher–Yates (see [`stratified_split`]
//! for the exact procedure), and split counts come either from explicit
//! per-class quotas or from largest-remainder rounding of the configured
//! fractions.
//!
//! ```
//! use xspeech::corpus::{self, ClassLabel, Sample, SplitConfig};
//!
//! let samples: Vec<Sample> = (0..10)
//!     .map(|i| Sample::new(format!("post number {i}"), ClassLabel::from_code(i % 2).unwrap()))
//!     .collect();
//! let config = SplitConfig { fractions: [0.6, 0.2, 0.2], seed: 42, quotas: None };
//! let assignment = corpus::stratified_split(&samples, &config).unwrap();
//! let (train, dev, test) = assignment.totals();
//! assert_eq!((train, dev, test), (6, 2, 2));
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from corpus loading, label decoding, and splitting.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("row {row}: unknown label {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: empty text field")]
    EmptyText { row: usize },
    #[error("unknown class name {0:?}")]
    UnknownClassName(String),
    #[error("class code {0} out of range (expected 0, 1, or 2)")]
    CodeOutOfRange(u8),
    #[error("unknown split tag {0:?} (expected train, dev, or test)")]
    UnknownSplitTag(String),
    #[error("fractions {0:?} do not sum to 1")]
    BadFractions([f64; 3]),
    #[error("negative fraction in {0:?}")]
    NegativeFraction([f64; 3]),
    #[error("duplicate sample id {0} — run dedup before splitting")]
    DuplicateSample(SampleId),
    #[error(
        "quota for class {class} sums to {quota_sum} but the corpus has {corpus_count} samples of that class"
    )]
    QuotaMismatch {
        class: ClassLabel,
        quota_sum: usize,
        corpus_count: usize,
    },
    #[error(
        "class {class} has {count} samples, fewer than the {nonzero} splits with a non-zero fraction"
    )]
    ClassTooSmall {
        class: ClassLabel,
        count: usize,
        nonzero: usize,
    },
    #[error("quotas are required to name all three classes")]
    IncompleteQuotas,
}

/// The three target classes, encoded as 0, 1, and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Derogatory,
    Exclusionary,
    Dangerous,
}

impl ClassLabel {
    /// All classes in code order.
    pub const ALL: [ClassLabel; 3] = [
        ClassLabel::Derogatory,
        ClassLabel::Exclusionary,
        ClassLabel::Dangerous,
    ];

    /// Numeric code: derogatory = 0, exclusionary = 1, dangerous = 2.
    pub fn code(self) -> u8 {
        match self {
            ClassLabel::Derogatory => 0,
            ClassLabel::Exclusionary => 1,
            ClassLabel::Dangerous => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, CorpusError> {
        match code {
            0 => Ok(ClassLabel::Derogatory),
            1 => Ok(ClassLabel::Exclusionary),
            2 => Ok(ClassLabel::Dangerous),
            other => Err(CorpusError::CodeOutOfRange(other)),
        }
    }

    /// Short class name.
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Derogatory => "derogatory",
            ClassLabel::Exclusionary => "exclusionary",
            ClassLabel::Dangerous => "dangerous",
        }
    }

    /// The label digit as a string: `"0"`, `"1"`, or `"2"`.
    pub fn digit(self) -> &'static str {
        match self {
            ClassLabel::Derogatory => "0",
            ClassLabel::Exclusionary => "1",
            ClassLabel::Dangerous => "2",
        }
    }

    /// Parse a label cell: a code (`0`/`1`/`2`), a short class name, or one of
    /// the long forms (`"derogatory extreme speech"`, `"dangerous speech"`, …),
    /// case-insensitively.
    pub fn parse(value: &str) -> Result<Self, CorpusError> {
        let norm = value
            .trim()
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        match norm.as_str() {
            "0" => return Ok(ClassLabel::Derogatory),
            "1" => return Ok(ClassLabel::Exclusionary),
            "2" => return Ok(ClassLabel::Dangerous),
            _ => {}
        }
        let (head, tail) = match norm.split_once(' ') {
            Some((h, t)) => (h, t),
            None => (norm.as_str(), ""),
        };
        let label = match head {
            "derogatory" => ClassLabel::Derogatory,
            "exclusionary" => ClassLabel::Exclusionary,
            "dangerous" => ClassLabel::Dangerous,
            _ => return Err(CorpusError::UnknownClassName(value.to_string())),
        };
        match tail {
            "" | "speech" | "extreme speech" => Ok(label),
            _ => Err(CorpusError::UnknownClassName(value.to_string())),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(deserializer)?;
        ClassLabel::from_code(code).map_err(serde::de::Error::custom)
    }
}

/// Content-derived stable sample identifier.
///
/// Computed as the lowercase hex of the first 16 bytes of
/// `SHA-256(text || 0x1f || label digit)`, so identical `(text, gold)` pairs
/// always share an id and the id survives re-ingestion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(pub String);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl SampleId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// One corpus row: stable id, text, gold class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: SampleId,
    pub text: String,
    pub gold: ClassLabel,
}

impl Sample {
    /// Build a sample, deriving its id from `(text, gold)`.
    pub fn new(text: impl Into<String>, gold: ClassLabel) -> Self {
        let text = text.into();
        let id = sample_id(&text, gold);
        Sample { id, text, gold }
    }
}

/// Derive the content-based id for a `(text, gold)` pair.
pub fn sample_id(text: &str, gold: ClassLabel) -> SampleId {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update([0x1f]);
    hasher.update(gold.digit().as_bytes());
    let digest = hasher.finalize();
    SampleId(hex::encode(&digest[..16]))
}

/// Column mapping for [`load_corpus`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSchema {
    pub text_column: String,
    pub label_column: String,
    /// Field delimiter; defaults to `\t` for `.tsv` paths and `,` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<u8>,
}

impl CorpusSchema {
    pub fn new(text_column: impl Into<String>, label_column: impl Into<String>) -> Self {
        CorpusSchema {
            text_column: text_column.into(),
            label_column: label_column.into(),
            delimiter: None,
        }
    }
}

/// Load a delimited corpus file with a header row.
///
/// Returns one [`Sample`] per data row in file order; ids are content-derived.
/// Rows in error messages are 1-based data rows (the header is row 0).
pub fn load_corpus(path: impl AsRef<Path>, schema: &CorpusSchema) -> Result<Vec<Sample>, CorpusError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let delimiter = schema.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => b'\t',
            _ => b',',
        }
    });
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Unreadable {
        path: path_str.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|source| CorpusError::Csv {
            path: path_str.clone(),
            source,
        })?
        .clone();
    let col = |name: &str| -> Result<usize, CorpusError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let text_idx = col(&schema.text_column)?;
    let label_idx = col(&schema.label_column)?;

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|source| CorpusError::Csv {
            path: path_str.clone(),
            source,
        })?;
        let text = record.get(text_idx).unwrap_or("");
        if text.is_empty() {
            return Err(CorpusError::EmptyText { row });
        }
        let label_value = record.get(label_idx).unwrap_or("");
        let gold = ClassLabel::parse(label_value).map_err(|_| CorpusError::UnknownLabel {
            row,
            value: label_value.to_string(),
        })?;
        samples.push(Sample::new(text, gold));
    }
    Ok(samples)
}

/// Drop exact `(text, gold)` duplicates, keeping the first occurrence and
/// preserving relative order. Two rows with the same text but different gold
/// labels are both kept.
pub fn dedup(samples: &[Sample]) -> Vec<Sample> {
    let mut seen = HashSet::with_capacity(samples.len());
    samples
        .iter()
        .filter(|s| seen.insert(s.id.clone()))
        .cloned()
        .collect()
}

/// Split tag for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Dev,
    Test,
}

impl SplitTag {
    pub const ALL: [SplitTag; 3] = [SplitTag::Train, SplitTag::Dev, SplitTag::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Dev => "dev",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CorpusError> {
        match s.trim().to_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "dev" => Ok(SplitTag::Dev),
            "test" => Ok(SplitTag::Test),
            other => Err(CorpusError::UnknownSplitTag(other.to_string())),
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact per-split counts for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassQuota {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl ClassQuota {
    pub fn sum(self) -> usize {
        self.train + self.dev + self.test
    }

    fn counts(self) -> [usize; 3] {
        [self.train, self.dev, self.test]
    }
}

/// Optional per-class exact counts per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    pub derogatory: ClassQuota,
    pub exclusionary: ClassQuota,
    pub dangerous: ClassQuota,
}

impl Quotas {
    pub fn for_class(&self, label: ClassLabel) -> ClassQuota {
        match label {
            ClassLabel::Derogatory => self.derogatory,
            ClassLabel::Exclusionary => self.exclusionary,
            ClassLabel::Dangerous => self.dangerous,
        }
    }
}

/// Split configuration: fractions, RNG seed, optional quotas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// `(train, dev, test)` fractions; must be non-negative and sum to 1.
    pub fractions: [f64; 3],
    pub seed: u64,
    /// When present, per-class counts are taken verbatim (and validated
    /// against the corpus) instead of being derived from `fractions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotas: Option<Quotas>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fractions: [0.64, 0.16, 0.20],
            seed: 0,
            quotas: None,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.fractions.iter().any(|f| *f < 0.0) {
            return Err(CorpusError::NegativeFraction(self.fractions));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CorpusError::BadFractions(self.fractions));
        }
        Ok(())
    }
}

/// Map from sample id to split tag, stored in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    entries: Vec<(SampleId, SplitTag)>,
}

impl SplitAssignment {
    pub fn entries(&self) -> &[(SampleId, SplitTag)] {
        &self.entries
    }

    pub fn tag_of(&self, id: &SampleId) -> Option<SplitTag> {
        self.entries.iter().find(|(i, _)| i == id).map(|(_, t)| *t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(train, dev, test)` totals.
    pub fn totals(&self) -> (usize, usize, usize) {
        let mut t = (0, 0, 0);
        for (_, tag) in &self.entries {
            match tag {
                SplitTag::Train => t.0 += 1,
                SplitTag::Dev => t.1 += 1,
                SplitTag::Test => t.2 += 1,
            }
        }
        t
    }

    /// Per-class `(train, dev, test)` counts, joining against the samples the
    /// assignment was built from.
    pub fn class_counts(&self, samples: &[Sample]) -> BTreeMap<ClassLabel, [usize; 3]> {
        let by_id: HashMap<&SampleId, ClassLabel> =
            samples.iter().map(|s| (&s.id, s.gold)).collect();
        let mut counts: BTreeMap<ClassLabel, [usize; 3]> = BTreeMap::new();
        for (id, tag) in &self.entries {
            if let Some(label) = by_id.get(id) {
                let slot = counts.entry(*label).or_insert([0, 0, 0]);
                slot[*tag as usize] += 1;
            }
        }
        counts
    }

    /// Two-column CSV serialization: `sample_id,split`, LF line endings,
    /// rows in corpus order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sample_id,split\n");
        for (id, tag) in &self.entries {
            out.push_str(id.as_str());
            out.push(',');
            out.push_str(tag.as_str());
            out.push('\n');
        }
        out
    }
}

/// SplitMix64: a 64-bit counter-based generator (Steele, Lea & Flood 2014).
///
/// The state advances by the golden-gamma constant each step and the output is
/// a bijective mix of the counter. Fixed here so that split assignments are
/// byte-identical across platforms and releases.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, bound)` via modulo with rejection (unbiased).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        // Reject draws below 2^64 mod bound so every residue is equally likely.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % bound;
            }
        }
    }
}

/// In-place Fisher–Yates shuffle driven by [`SplitMix64`].
pub fn fisher_yates<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Deterministic stratified split.
///
/// Procedure, fixed for reproducibility:
/// 1. samples are grouped by class, preserving corpus order within a class;
/// 2. one [`SplitMix64`] stream seeded with `config.seed` shuffles each class
///    group with Fisher–Yates, classes processed in code order 0, 1, 2;
/// 3. per-class `(train, dev, test)` counts come from `config.quotas` when
///    present, otherwise from largest-remainder rounding of
///    `config.fractions` (ties broken in split order train, dev, test);
/// 4. the first `train` shuffled samples of a class go to Train, the next
///    `dev` to Dev, the rest to Test.
///
/// The result is a pure function of `(samples, config)`.
pub fn stratified_split(
    samples: &[Sample],
    config: &SplitConfig,
) -> Result<SplitAssignment, CorpusError> {
    config.validate()?;

    let mut seen = HashSet::with_capacity(samples.len());
    for s in samples {
        if !seen.insert(&s.id) {
            return Err(CorpusError::DuplicateSample(s.id.clone()));
        }
    }

    // Class groups hold indices into `samples`, in corpus order.
    let mut groups: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, s) in samples.iter().enumerate() {
        groups[s.gold.code() as usize].push(i);
    }

    let nonzero = config.fractions.iter().filter(|f| **f > 0.0).count();
    let mut rng = SplitMix64::new(config.seed);
    let mut tags: Vec<Option<SplitTag>> = vec![None; samples.len()];

    for label in ClassLabel::ALL {
        let group = &mut groups[label.code() as usize];
        fisher_yates(group, &mut rng);

        let counts = match &config.quotas {
            Some(quotas) => {
                let quota = quotas.for_class(label);
                if quota.sum() != group.len() {
                    return Err(CorpusError::QuotaMismatch {
                        class: label,
                        quota_sum: quota.sum(),
                        corpus_count: group.len(),
                    });
                }
                quota.counts()
            }
            None => {
                if !group.is_empty() && group.len() < nonzero {
                    return Err(CorpusError::ClassTooSmall {
                        class: label,
                        count: group.len(),
                        nonzero,
                    });
                }
                largest_remainder(group.len(), &config.fractions)
            }
        };

        let mut cursor = 0usize;
        for (tag, count) in SplitTag::ALL.iter().zip(counts) {
            for &sample_idx in &group[cursor..cursor + count] {
                tags[sample_idx] = Some(*tag);
            }
            cursor += count;
        }
    }

    let entries = samples
        .iter()
        .zip(&tags)
        .map(|(s, tag)| (s.id.clone(), tag.expect("every sample assigned")))
        .collect();
    Ok(SplitAssignment { entries })
}

/// Apportion `n` items across three splits by largest-remainder rounding.
///
/// Guarantees every count deviates from `n * fraction` by less than one.
fn largest_remainder(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let ideal: Vec<f64> = fractions.iter().map(|f| n as f64 * f).collect();
    let mut counts: [usize; 3] = [0; 3];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(3);
    let mut assigned = 0usize;
    for i in 0..3 {
        let base = ideal[i].floor() as usize;
        counts[i] = base;
        assigned += base;
        remainders.push((i, ideal[i] - base as f64));
    }
    // Largest fractional part first; ties fall back to split order.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = n - assigned;
    for (i, _) in remainders {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// One row of the split file written by `xspeech split`: id, split tag, and
/// gold label, so downstream stages never re-read the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRow {
    pub sample_id: SampleId,
    pub split: SplitTag,
    pub label: ClassLabel,
}

/// Serialize the three-column split file (`sample_id,split,label`).
pub fn split_file_string(samples: &[Sample], assignment: &SplitAssignment) -> String {
    let golds: HashMap<&SampleId, ClassLabel> = samples.iter().map(|s| (&s.id, s.gold)).collect();
    let mut out = String::from("sample_id,split,label\n");
    for (id, tag) in assignment.entries() {
        let gold = golds[id];
        out.push_str(id.as_str());
        out.push(',');
        out.push_str(tag.as_str());
        out.push(',');
        out.push_str(gold.digit());
        out.push('\n');
    }
    out
}

/// Read a three-column split file back.
pub fn read_split_file(path: impl AsRef<Path>) -> Result<Vec<SplitRow>, CorpusError> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Unreadable {
        path: path_str.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|source| CorpusError::Csv {
            path: path_str.clone(),
            source,
        })?;
        let id = SampleId(record.get(0).unwrap_or("").to_string());
        let split = SplitTag::parse(record.get(1).unwrap_or(""))?;
        let label_value = record.get(2).unwrap_or("");
        let label = ClassLabel::parse(label_value).map_err(|_| CorpusError::UnknownLabel {
            row,
            value: label_value.to_string(),
        })?;
        rows.push(SplitRow {
            sample_id: id,
            split,
            label,
        });
    }
    Ok(rows)
}
