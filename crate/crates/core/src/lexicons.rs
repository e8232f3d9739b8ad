//! Affect and connotation lexicons.
//!
//! All lexicon files are UTF-8, tab separated, one entry per line. A first
//! line whose leading field starts with `word` (or `verb`) and whose second
//! field is not numeric is treated as a header and skipped. Words are
//! lowercased at load time and lookups lowercase their argument.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds of the perspective scores in the connotation frames lexicon.
pub const PERSPECTIVE_MIN: f64 = -0.87;
pub const PERSPECTIVE_MAX: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Valence,
    Dominance,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Dominance => "dominance",
        }
    }
}

/// One dimension of the NRC VAD lexicon: word to score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectLexicon {
    dimension: Dimension,
    entries: HashMap<String, f64>,
}

impl AffectLexicon {
    /// Builds a lexicon from in-memory entries, validating the same
    /// invariants the loader enforces.
    pub fn from_entries<I, S>(dimension: Dimension, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (idx, (word, score)) in entries.into_iter().enumerate() {
            let word = normalize_word(word.as_ref(), idx + 1)?;
            check_range(idx + 1, &word, score, 0.0, 1.0)?;
            if map.insert(word.clone(), score).is_some() {
                return Err(Error::Duplicate {
                    line: idx + 1,
                    word,
                });
            }
        }
        Ok(AffectLexicon {
            dimension,
            entries: map,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(lowercase(word).as_ref()).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(w, &s)| (w.as_str(), s))
    }

    /// Entries sorted by word, for reproducible iteration.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        entries
    }

    /// Returns a copy without any word from `words`.
    pub fn strip_words<I, S>(&self, words: I) -> AffectLexicon
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let drop: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        AffectLexicon {
            dimension: self.dimension,
            entries: self
                .entries
                .iter()
                .filter(|(w, _)| !drop.contains(w.as_str()))
                .map(|(w, &s)| (w.clone(), s))
                .collect(),
        }
    }

    /// Restricts the lexicon to `words`, e.g. the nearest neighbors of a
    /// label vector.
    pub fn subset<I, S>(&self, words: I) -> AffectLexicon
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = HashMap::new();
        for w in words {
            if let Some(score) = self.get(w.as_ref()) {
                entries.insert(w.as_ref().to_lowercase(), score);
            }
        }
        AffectLexicon {
            dimension: self.dimension,
            entries,
        }
    }
}

/// Loads both the valence and dominance dimensions from one NRC VAD file.
pub fn load_vad(path: impl AsRef<Path>) -> Result<(AffectLexicon, AffectLexicon)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_vad_rows(BufReader::new(file))?;
    let valence = AffectLexicon {
        dimension: Dimension::Valence,
        entries: rows.iter().map(|r| (r.word.clone(), r.valence)).collect(),
    };
    let dominance = AffectLexicon {
        dimension: Dimension::Dominance,
        entries: rows.into_iter().map(|r| (r.word, r.dominance)).collect(),
    };
    Ok((valence, dominance))
}

pub fn load_affect_lexicon(path: impl AsRef<Path>, dimension: Dimension) -> Result<AffectLexicon> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_affect_lexicon(BufReader::new(file), dimension)
}

/// Reads the official NRC VAD layout: `word, valence, arousal, dominance`.
/// Arousal is validated and discarded.
pub fn read_affect_lexicon<R: BufRead>(reader: R, dimension: Dimension) -> Result<AffectLexicon> {
    let entries = read_vad_rows(reader)?
        .into_iter()
        .map(|r| {
            let score = match dimension {
                Dimension::Valence => r.valence,
                Dimension::Dominance => r.dominance,
            };
            (r.word, score)
        })
        .collect();
    Ok(AffectLexicon { dimension, entries })
}

struct VadRow {
    word: String,
    valence: f64,
    dominance: f64,
}

fn read_vad_rows<R: BufRead>(reader: R) -> Result<Vec<VadRow>> {
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut multiword = 0usize;
    for (line_no, fields) in tsv_lines(reader)? {
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 tab-separated columns, found {}", fields.len()),
            ));
        }
        if fields[0].trim().contains(char::is_whitespace) {
            multiword += 1;
            continue;
        }
        let word = normalize_word(&fields[0], line_no)?;
        let mut scores = [0.0; 3];
        for (slot, raw) in scores.iter_mut().zip(&fields[1..]) {
            *slot = parse_score(raw, line_no)?;
            check_range(line_no, &word, *slot, 0.0, 1.0)?;
        }
        if !seen.insert(word.clone()) {
            return Err(Error::Duplicate {
                line: line_no,
                word,
            });
        }
        rows.push(VadRow {
            word,
            valence: scores[0],
            dominance: scores[2],
        });
    }
    if multiword > 0 {
        log::warn!("skipped {multiword} multi-word lexicon entries");
    }
    Ok(rows)
}

/// Writer's perspective toward a verb's subject and object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perspective {
    pub subject: f64,
    pub object: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerspectiveLexicon {
    entries: HashMap<String, Perspective>,
}

impl PerspectiveLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Perspective)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (idx, (verb, p)) in entries.into_iter().enumerate() {
            let verb = normalize_word(verb.as_ref(), idx + 1)?;
            check_range(idx + 1, &verb, p.subject, PERSPECTIVE_MIN, PERSPECTIVE_MAX)?;
            check_range(idx + 1, &verb, p.object, PERSPECTIVE_MIN, PERSPECTIVE_MAX)?;
            if map.insert(verb.clone(), p).is_some() {
                return Err(Error::Duplicate {
                    line: idx + 1,
                    word: verb,
                });
            }
        }
        Ok(PerspectiveLexicon { entries: map })
    }

    pub fn get(&self, verb: &str) -> Option<Perspective> {
        self.entries.get(lowercase(verb).as_ref()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_perspective_lexicon(path: impl AsRef<Path>) -> Result<PerspectiveLexicon> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_perspective_lexicon(BufReader::new(file))
}

/// Reads `verb, perspective(writer->subject), perspective(writer->object)`.
///
/// A wider table is accepted when its header names the two columns
/// `Perspective(ws)` and `Perspective(wo)`, as in the released frames file.
pub fn read_perspective_lexicon<R: BufRead>(reader: R) -> Result<PerspectiveLexicon> {
    let (header, rows) = tsv_table(reader)?;
    let named = header.as_deref().and_then(|h| {
        let col = |name: &str| h.iter().position(|f| f.trim().eq_ignore_ascii_case(name));
        Some((col("perspective(ws)")?, col("perspective(wo)")?))
    });
    let mut entries = HashMap::new();
    for (line_no, fields) in rows {
        let (si, oi) = match named {
            Some(cols) => cols,
            None if fields.len() == 3 => (1, 2),
            None => {
                return Err(Error::parse(
                    line_no,
                    format!("expected 3 tab-separated columns, found {}", fields.len()),
                ))
            }
        };
        let (Some(subject), Some(object)) = (fields.get(si), fields.get(oi)) else {
            return Err(Error::parse(line_no, "row is shorter than the header"));
        };
        let verb = normalize_word(&fields[0], line_no)?;
        let subject = parse_score(subject, line_no)?;
        let object = parse_score(object, line_no)?;
        check_range(line_no, &verb, subject, PERSPECTIVE_MIN, PERSPECTIVE_MAX)?;
        check_range(line_no, &verb, object, PERSPECTIVE_MIN, PERSPECTIVE_MAX)?;
        if entries
            .insert(verb.clone(), Perspective { subject, object })
            .is_some()
        {
            return Err(Error::Duplicate {
                line: line_no,
                word: verb,
            });
        }
    }
    Ok(PerspectiveLexicon { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agency {
    Positive,
    NonPositive,
}

impl Agency {
    /// Collapses the released ternary labels: only `agency_pos` is high agency.
    pub fn from_label(label: &str) -> Option<Agency> {
        match label.trim().to_ascii_lowercase().as_str() {
            "agency_pos" | "pos" | "positive" => Some(Agency::Positive),
            "agency_neg" | "agency_equal" | "neg" | "equal" | "negative" | "non_positive" => {
                Some(Agency::NonPositive)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AgencyLexicon {
    entries: HashMap<String, Agency>,
}

impl AgencyLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Agency)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (idx, (verb, label)) in entries.into_iter().enumerate() {
            let verb = normalize_word(verb.as_ref(), idx + 1)?;
            if map.insert(verb.clone(), label).is_some() {
                return Err(Error::Duplicate {
                    line: idx + 1,
                    word: verb,
                });
            }
        }
        Ok(AgencyLexicon { entries: map })
    }

    pub fn get(&self, verb: &str) -> Option<Agency> {
        self.entries.get(lowercase(verb).as_ref()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_agency_lexicon(path: impl AsRef<Path>) -> Result<AgencyLexicon> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_agency_lexicon(BufReader::new(file))
}

/// Reads `verb, label`. Extra trailing columns (such as a power label) are
/// ignored.
pub fn read_agency_lexicon<R: BufRead>(reader: R) -> Result<AgencyLexicon> {
    let mut entries = HashMap::new();
    for (line_no, fields) in tsv_lines(reader)? {
        if fields.len() < 2 {
            return Err(Error::parse(
                line_no,
                format!("expected verb and label columns, found {}", fields.len()),
            ));
        }
        let verb = normalize_word(&fields[0], line_no)?;
        let label = Agency::from_label(&fields[1]).ok_or_else(|| {
            Error::parse(line_no, format!("unknown agency label {:?}", fields[1]))
        })?;
        if entries.insert(verb.clone(), label).is_some() {
            return Err(Error::Duplicate {
                line: line_no,
                word: verb,
            });
        }
    }
    Ok(AgencyLexicon { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemPattern {
    pub pattern: String,
    pub is_prefix: bool,
}

impl StemPattern {
    pub fn parse(raw: &str) -> Option<StemPattern> {
        let raw = raw.trim().to_lowercase();
        let (pattern, is_prefix) = match raw.strip_suffix('*') {
            Some(stem) => (stem.to_string(), true),
            None => (raw, false),
        };
        if pattern.is_empty() {
            None
        } else {
            Some(StemPattern { pattern, is_prefix })
        }
    }

    pub fn matches(&self, word: &str) -> bool {
        if self.is_prefix {
            word.starts_with(&self.pattern)
        } else {
            word == self.pattern
        }
    }
}

/// A dictionary of exact words and `prefix*` stems, such as a moral
/// foundations category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemDictionary {
    pub category: String,
    pub entries: Vec<StemPattern>,
}

impl StemDictionary {
    pub fn new<I, S>(category: impl Into<String>, patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StemDictionary {
            category: category.into(),
            entries: patterns
                .into_iter()
                .filter_map(|p| StemPattern::parse(p.as_ref()))
                .collect(),
        }
    }

    /// Every vocabulary word equal to an exact entry or starting with a
    /// prefix entry.
    pub fn expand<'a, I>(&self, vocabulary: I) -> BTreeSet<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let exact: HashSet<&str> = self
            .entries
            .iter()
            .filter(|e| !e.is_prefix)
            .map(|e| e.pattern.as_str())
            .collect();
        let prefixes: Vec<&str> = self
            .entries
            .iter()
            .filter(|e| e.is_prefix)
            .map(|e| e.pattern.as_str())
            .collect();
        vocabulary
            .into_iter()
            .filter(|w| exact.contains(w) || prefixes.iter().any(|p| w.starts_with(p)))
            .map(str::to_string)
            .collect()
    }
}

pub fn load_stem_dictionary(
    path: impl AsRef<Path>,
    category: impl Into<String>,
) -> Result<StemDictionary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let patterns = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Ok(StemDictionary::new(category, patterns))
}

fn lowercase(word: &str) -> Cow<'_, str> {
    if word.chars().any(char::is_uppercase) {
        Cow::Owned(word.to_lowercase())
    } else {
        Cow::Borrowed(word)
    }
}

fn normalize_word(raw: &str, line: usize) -> Result<String> {
    let word = raw.trim();
    if word.is_empty() {
        return Err(Error::parse(line, "empty word"));
    }
    if word.contains(char::is_whitespace) {
        return Err(Error::parse(line, format!("word {word:?} contains whitespace")));
    }
    Ok(word.to_lowercase())
}

fn parse_score(raw: &str, line: usize) -> Result<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse score {raw:?}")))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::parse(line, format!("non-finite score {raw:?}")))
    }
}

fn check_range(line: usize, word: &str, value: f64, min: f64, max: f64) -> Result<()> {
    if (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            line,
            word: word.to_string(),
            value,
            min,
            max,
        })
    }
}

/// Splits a TSV stream into `(line number, fields)`, skipping blank lines and
/// an optional header.
fn tsv_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<String>)>> {
    Ok(tsv_table(reader)?.1)
}

/// Non-empty rows split on tabs, with a leading header row split off.
fn tsv_table<R: BufRead>(reader: R) -> Result<(Option<Vec<String>>, Vec<(usize, Vec<String>)>)> {
    let mut header = None;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if out.is_empty() && header.is_none() && is_header(&fields) {
            header = Some(fields);
            continue;
        }
        out.push((line_no, fields));
    }
    Ok((header, out))
}

fn is_header(fields: &[String]) -> bool {
    let first = fields[0].trim().to_ascii_lowercase();
    let numeric_second = fields
        .get(1)
        .map(|f| f.trim().parse::<f64>().is_ok())
        .unwrap_or(false);
    (first.starts_with("word") || first.starts_with("verb")) && !numeric_second
        && !fields
            .get(1)
            .map(|f| Agency::from_label(f).is_some())
            .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vad(text: &str) -> Result<AffectLexicon> {
        read_affect_lexicon(text.as_bytes(), Dimension::Valence)
    }

    #[test]
    fn two_row_valence() {
        let lex = vad("good\t0.9\t0.5\t0.6\nbad\t0.1\t0.5\t0.4\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("good"), Some(0.9));
        assert_eq!(lex.get("bad"), Some(0.1));
        assert_eq!(lex.get("GOOD"), Some(0.9));
    }

    #[test]
    fn dominance_column() {
        let lex = read_affect_lexicon(
            "good\t0.9\t0.5\t0.6\n".as_bytes(),
            Dimension::Dominance,
        )
        .unwrap();
        assert_eq!(lex.get("good"), Some(0.6));
    }

    #[test]
    fn header_skipped() {
        let lex = vad("Word\tValence\tArousal\tDominance\nlove\t1.0\t0.5\t0.5\n").unwrap();
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn malformed_row_names_line() {
        let err = vad("good\t0.9\t0.5\t0.6\nbad\t0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = vad("good\t0.9\tx\t0.6\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn out_of_range_and_duplicate() {
        assert!(matches!(
            vad("good\t1.2\t0.5\t0.6\n"),
            Err(Error::OutOfRange { line: 1, .. })
        ));
        // Arousal is validated too even though it is discarded.
        assert!(matches!(
            vad("good\t0.2\t-0.5\t0.6\n"),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            vad("good\t0.2\t0.5\t0.6\nGood\t0.3\t0.5\t0.6\n"),
            Err(Error::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn strip() {
        let lex = AffectLexicon::from_entries(Dimension::Valence, [("a", 0.2), ("b", 0.8)]).unwrap();
        let stripped = lex.strip_words(["a"]);
        assert_eq!(stripped.len(), 1);
        assert_eq!(stripped.get("b"), Some(0.8));
        assert_eq!(stripped.get("a"), None);
        assert_eq!(lex.strip_words(Vec::<String>::new()), lex);
        assert_eq!(lex.strip_words(["zzz"]), lex);
    }

    #[test]
    fn perspective_rows() {
        let lex = read_perspective_lexicon("praise\t0.5\t0.7\nattack\t-0.6\t0.23\n".as_bytes()).unwrap();
        assert_eq!(
            lex.get("attack"),
            Some(Perspective {
                subject: -0.6,
                object: 0.23
            })
        );
        assert_eq!(lex.get("praise").unwrap().object, 0.7);
        assert!(matches!(
            read_perspective_lexicon("praise\t0.95\t0.7\n".as_bytes()),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            read_perspective_lexicon("praise\t0.1\t0.7\npraise\t0.1\t0.7\n".as_bytes()),
            Err(Error::Duplicate { .. })
        ));
        // Boundary values are inclusive.
        assert!(read_perspective_lexicon("x\t-0.87\t0.8\n".as_bytes()).is_ok());
    }

    #[test]
    fn perspective_columns_by_header_name() {
        let text = "verb\tPerspective(wo)\tPerspective(ws)\tEffect(o)\n\
                    attack\t0.23\t-0.6\t-0.5\n\
                    praise\t0.7\t0.5\t0.4\n";
        let lex = read_perspective_lexicon(text.as_bytes()).unwrap();
        assert_eq!(lex.get("attack"), Some(Perspective { subject: -0.6, object: 0.23 }));
        assert_eq!(lex.len(), 2);
        // without the named columns the strict three-column layout applies
        assert!(read_perspective_lexicon("verb\ta\tb\tc\nattack\t0.1\t0.2\t0.3\n".as_bytes()).is_err());
        assert!(read_perspective_lexicon("verb\tPerspective(wo)\tPerspective(ws)\nattack\t0.1\n".as_bytes()).is_err());
    }

    #[test]
    fn agency_collapse() {
        let lex = read_agency_lexicon(
            "attack\tagency_pos\ndoubt\tagency_neg\nwait\tagency_equal\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(lex.get("attack"), Some(Agency::Positive));
        assert_eq!(lex.get("doubt"), Some(Agency::NonPositive));
        assert_eq!(lex.get("wait"), Some(Agency::NonPositive));
        assert!(matches!(
            read_agency_lexicon("attack\tsometimes\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn stems() {
        let vocab = ["disgusting", "disgusted", "dish"];
        let dict = StemDictionary::new("moral_disgust", ["disgust*"]);
        assert_eq!(
            dict.expand(vocab),
            ["disgusted", "disgusting"].iter().map(|s| s.to_string()).collect()
        );
        let dict = StemDictionary::new("d", ["sin"]);
        assert_eq!(dict.expand(["sin", "sinister"]).len(), 1);
        let dict = StemDictionary::new("d", ["obscen*", "pervert"]);
        let got = dict.expand(["obscene", "obscenity", "perverts"]);
        assert_eq!(
            got,
            ["obscene", "obscenity"].iter().map(|s| s.to_string()).collect()
        );
        assert!(dict.entries[0].is_prefix && dict.entries[0].pattern == "obscen");
    }
}
