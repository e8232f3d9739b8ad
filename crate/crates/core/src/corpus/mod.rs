//! Paragraph ingestion, preprocessing, and the group-label filters that turn
//! a raw article stream into the analysis corpus.

mod lemma;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lemma::lemmatize;

/// Sections excluded by default: non-news content.
pub const DEFAULT_SECTION_BLOCKLIST: &[&str] = &["Arts", "Theater", "Movies"];

/// Lowercases, removes numbers and punctuation.
///
/// Periods and apostrophes are deleted in place so that `L.G.B.T.` becomes
/// `lgbt` and `don't` becomes `dont`; digits are deleted (a purely numeric
/// token vanishes, `covid19` becomes `covid`); every other non-alphabetic
/// character separates tokens, so hyphenated compounds split.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() {
            current.extend(ch.to_lowercase());
        } else if matches!(ch, '.' | '\'' | '\u{2019}') || ch.is_numeric() {
            // deleted without splitting
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn strip_non_alphabetic(word: &str) -> String {
    word.chars().filter(|c| c.is_alphabetic()).collect()
}

/// A group label and its morphological surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub canonical: String,
    pub surface_forms: BTreeSet<String>,
    #[serde(default)]
    pub is_acronym: bool,
}

impl LabelSet {
    pub fn new<I, S>(canonical: &str, forms: I, is_acronym: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let canonical = canonical.to_lowercase();
        let mut surface_forms: BTreeSet<String> = forms
            .into_iter()
            .map(|f| f.as_ref().to_lowercase())
            .collect();
        if surface_forms.is_empty() {
            surface_forms.insert(canonical.clone());
        }
        LabelSet {
            canonical,
            surface_forms,
            is_acronym,
        }
    }

    /// A label with forms `{word, words}`.
    pub fn with_plural(word: &str) -> Self {
        LabelSet::new(word, [word.to_string(), format!("{word}s")], false)
    }

    /// Union of several labels under one name, e.g. "all LGBTQ terms".
    pub fn union<'a, I>(name: &str, labels: I) -> Self
    where
        I: IntoIterator<Item = &'a LabelSet>,
    {
        let mut forms = BTreeSet::new();
        let mut acronym = false;
        for l in labels {
            forms.extend(l.surface_forms.iter().cloned());
            acronym |= l.is_acronym;
        }
        LabelSet {
            canonical: name.to_lowercase(),
            surface_forms: forms,
            is_acronym: acronym,
        }
    }

    /// Whether a single lowercase word is one of this label's forms. Acronym
    /// labels ignore internal punctuation in the word.
    pub fn matches_word(&self, word: &str) -> bool {
        if self.surface_forms.contains(word) {
            return true;
        }
        if self.is_acronym && word.chars().any(|c| !c.is_alphabetic()) {
            return self.surface_forms.contains(&strip_non_alphabetic(word));
        }
        false
    }

    pub fn matches_any<S: AsRef<str>>(&self, words: &[S]) -> bool {
        words.iter().any(|w| self.matches_word(&w.as_ref().to_lowercase()))
    }
}

/// The 22-term LGBTQ label list used to select paragraphs.
pub fn default_labels() -> Vec<LabelSet> {
    let mut labels: Vec<LabelSet> = [
        "gay",
        "lesbian",
        "bisexual",
        "homosexual",
        "transgender",
        "transsexual",
        "transexual",
        "transvestite",
    ]
    .iter()
    .map(|w| LabelSet::with_plural(w))
    .collect();
    for w in [
        "transgendered",
        "asexual",
        "agender",
        "aromantic",
    ] {
        labels.push(LabelSet::new(w, [w], false));
    }
    for w in ["lgb", "lgbt", "lgbtq", "lgbtqia", "glbt", "lgbtqqia"] {
        labels.push(LabelSet::new(w, [w], true));
    }
    for w in ["genderqueer", "genderfluid", "intersex", "pansexual"] {
        labels.push(LabelSet::new(w, [w], false));
    }
    labels
}

/// The in-group comparison label.
pub fn comparison_label() -> LabelSet {
    LabelSet::with_plural("american")
}

/// Labels whose surface forms appear among `tokens`, in `labels` order.
pub fn match_label<'a, S: AsRef<str>>(tokens: &[S], labels: &'a [LabelSet]) -> Vec<&'a LabelSet> {
    labels.iter().filter(|l| l.matches_any(tokens)).collect()
}

/// One input record: a paragraph of an article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub year: i32,
    pub section: String,
    pub text: String,
}

/// The unit of analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub year: i32,
    pub section: String,
    #[serde(rename = "text")]
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
}

impl Paragraph {
    /// Preprocesses a record. Returns `None` when nothing survives
    /// tokenization.
    pub fn from_record(record: RawRecord) -> Option<Paragraph> {
        let tokens = tokenize(&record.text);
        if tokens.is_empty() {
            return None;
        }
        let lemmas = tokens.iter().map(|t| lemmatize(t)).collect();
        Some(Paragraph {
            id: record.id,
            year: record.year,
            section: record.section,
            raw_text: record.text,
            tokens,
            lemmas,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Deserialize)]
struct RecordFields {
    id: Option<serde_json::Value>,
    year: Option<i64>,
    section: Option<String>,
    text: Option<String>,
}

fn parse_record(line: &str, line_no: usize) -> Result<RawRecord> {
    let fields: RecordFields = serde_json::from_str(line)
        .map_err(|e| Error::parse(line_no, format!("malformed JSON record: {e}")))?;
    let missing = |name: &str| Error::parse(line_no, format!("missing field {name:?}"));
    let id = match fields.id.ok_or_else(|| missing("id"))? {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(Error::parse(line_no, format!("bad id {other}"))),
    };
    let year = fields.year.ok_or_else(|| missing("year"))?;
    let year = i32::try_from(year).map_err(|_| Error::parse(line_no, "year out of range"))?;
    Ok(RawRecord {
        id,
        year,
        section: fields.section.ok_or_else(|| missing("section"))?,
        text: fields.text.ok_or_else(|| missing("text"))?,
    })
}

/// Streaming reader over line-delimited JSON records. Paragraphs come out in
/// file order; records that are empty after preprocessing or outside the
/// year range are skipped with a log message.
pub struct Ingest<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    year_range: Option<(i32, i32)>,
    skipped_empty: usize,
}

impl<R: BufRead> Ingest<R> {
    pub fn new(reader: R) -> Self {
        Ingest {
            lines: reader.lines(),
            line_no: 0,
            year_range: None,
            skipped_empty: 0,
        }
    }

    pub fn with_year_range(mut self, range: Option<(i32, i32)>) -> Self {
        self.year_range = range;
        self
    }

    pub fn skipped_empty(&self) -> usize {
        self.skipped_empty
    }
}

impl<R: BufRead> Iterator for Ingest<R> {
    type Item = Result<Paragraph>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(Error::parse(self.line_no + 1, e.to_string()))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = match parse_record(&line, self.line_no) {
                Ok(r) => r,
                Err(e) => return Some(Err(e)),
            };
            if let Some((lo, hi)) = self.year_range {
                if record.year < lo || record.year > hi {
                    log::debug!("line {}: year {} outside range", self.line_no, record.year);
                    continue;
                }
            }
            let id = record.id.clone();
            match Paragraph::from_record(record) {
                Some(p) => return Some(Ok(p)),
                None => {
                    self.skipped_empty += 1;
                    log::warn!("line {}: paragraph {id:?} is empty after preprocessing", self.line_no);
                }
            }
        }
    }
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Ingest<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Ingest::new(BufReader::new(file)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub paragraphs: u64,
    pub tokens: u64,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.paragraphs += other.paragraphs;
        self.tokens += other.tokens;
    }
}

/// Corpus totals. Aggregation is order independent: `merge` is associative
/// and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub paragraph_count: u64,
    pub token_count: u64,
    pub per_year: BTreeMap<i32, Counts>,
    /// Paragraphs and tokens of paragraphs matching each label.
    pub per_label: BTreeMap<String, Counts>,
    pub per_year_label: BTreeMap<(i32, String), Counts>,
    /// Number of token occurrences of each label's surface forms.
    pub label_occurrences: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn add_paragraph(&mut self, p: &Paragraph, matched: &[&LabelSet]) {
        let c = Counts {
            paragraphs: 1,
            tokens: p.tokens.len() as u64,
        };
        self.paragraph_count += 1;
        self.token_count += c.tokens;
        self.per_year.entry(p.year).or_default().add(c);
        for label in matched {
            self.per_label.entry(label.canonical.clone()).or_default().add(c);
            self.per_year_label
                .entry((p.year, label.canonical.clone()))
                .or_default()
                .add(c);
            let occ = p.tokens.iter().filter(|t| label.matches_word(t)).count() as u64;
            *self.label_occurrences.entry(label.canonical.clone()).or_default() += occ;
        }
    }

    pub fn merge(&mut self, other: &CorpusStats) {
        self.paragraph_count += other.paragraph_count;
        self.token_count += other.token_count;
        for (k, v) in &other.per_year {
            self.per_year.entry(*k).or_default().add(*v);
        }
        for (k, v) in &other.per_label {
            self.per_label.entry(k.clone()).or_default().add(*v);
        }
        for (k, v) in &other.per_year_label {
            self.per_year_label.entry(k.clone()).or_default().add(*v);
        }
        for (k, v) in &other.label_occurrences {
            *self.label_occurrences.entry(k.clone()).or_default() += v;
        }
    }

    /// `year,label,paragraphs,tokens`, with `*` rows for per-year totals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "year,label,paragraphs,tokens")?;
        for (year, c) in &self.per_year {
            writeln!(w, "{year},*,{},{}", c.paragraphs, c.tokens)?;
            let span = (*year, String::new())..(*year + 1, String::new());
            for ((_, label), c) in self.per_year_label.range(span) {
                writeln!(w, "{year},{label},{},{}", c.paragraphs, c.tokens)?;
            }
        }
        Ok(())
    }

    /// `label,count` occurrence totals.
    pub fn write_label_counts<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "label,count")?;
        for (label, count) in &self.label_occurrences {
            writeln!(w, "{label},{count}")?;
        }
        Ok(())
    }

    /// The one-line corpus summary, e.g. `93977 paragraphs and 7.36 million tokens`.
    pub fn summary(&self) -> String {
        format!(
            "{} paragraphs and {:.2} million tokens",
            self.paragraph_count,
            self.token_count as f64 / 1e6
        )
    }
}

fn section_blocked(section: &str, blocklist: &HashSet<String>) -> bool {
    blocklist.contains(&section.trim().to_lowercase())
}

/// Keeps paragraphs that match at least one label and are not in a blocked
/// section (compared case-insensitively).
pub fn filter_corpus<I, S>(
    paragraphs: I,
    labels: &[LabelSet],
    section_blocklist: &[S],
) -> (Vec<Paragraph>, CorpusStats)
where
    I: IntoIterator<Item = Paragraph>,
    S: AsRef<str>,
{
    let blocklist: HashSet<String> = section_blocklist
        .iter()
        .map(|s| s.as_ref().trim().to_lowercase())
        .collect();
    let mut stats = CorpusStats::default();
    let mut kept = Vec::new();
    for p in paragraphs {
        if section_blocked(&p.section, &blocklist) {
            continue;
        }
        let matched = match_label(&p.tokens, labels);
        if matched.is_empty() {
            continue;
        }
        stats.add_paragraph(&p, &matched);
        kept.push(p);
    }
    (kept, stats)
}

/// A cached paragraph with its filter outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedParagraph {
    #[serde(flatten)]
    pub paragraph: Paragraph,
    pub labels: Vec<String>,
    pub retained: bool,
}

pub fn write_cache<'a, I>(path: impl AsRef<Path>, records: I) -> Result<()>
where
    I: IntoIterator<Item = &'a CachedParagraph>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<Vec<CachedParagraph>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::parse(idx + 1, format!("bad cache record: {e}")))?,
        );
    }
    Ok(out)
}
