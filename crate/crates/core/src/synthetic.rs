//! Generator for corpora with planted associations, used by the test suites
//! and the committed fixture.
//!
//! Two labels are planted: `labelneg` co-occurs with low-valence,
//! low-dominance, disgust and vermin words, with a share that grows every
//! year and negative words drawn from a window that slides toward the
//! harshest end of the pool; `labelpos` co-occurs with high-valence words at
//! a constant share.
//! A dependency-parsed clause heads each labelled paragraph, routing the
//! label's verbs between positive and non-positive agency at fixed odds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConceptConfig, GroupConfig, PipelineConfig};
use crate::corpus::{LabelSet, RawRecord};
use crate::error::{Error, Result};
use crate::lexicons::Agency;
use crate::syntax::{write_conllu, ParsedSentence, Token};

pub const LABEL_NEG: &str = "labelneg";
pub const LABEL_POS: &str = "labelpos";
pub const DISGUST_STEM: &str = "filth";

const SYLLABLES: &[&str] = &[
    "ba", "ke", "mi", "no", "pu", "ra", "se", "ti", "vo", "zu", "la", "de", "fo", "gi", "hu", "jo",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub first_year: i32,
    pub years: usize,
    pub paragraphs_per_year: usize,
    /// Inclusive bounds on context words per paragraph.
    pub context_words: (usize, usize),
    pub neutral_words: usize,
    pub cluster_words: usize,
    pub verbs_per_class: usize,
    /// Share of planted words around `labelneg` in the first and last year.
    pub neg_share: (f64, f64),
    pub pos_share: f64,
    /// Non-positive : positive verb odds for `labelneg` subjects.
    pub neg_agency_odds: f64,
    /// Non-positive : positive verb odds for `labelpos` subjects.
    pub pos_agency_odds: f64,
    /// Fraction of paragraphs in a blocked section.
    pub blocked_share: f64,
}

impl Default for SyntheticSpec {
    /// Roughly one million tokens over fifteen years.
    fn default() -> Self {
        SyntheticSpec {
            seed: 7,
            first_year: 2001,
            years: 15,
            paragraphs_per_year: 1400,
            context_words: (30, 60),
            neutral_words: 800,
            cluster_words: 60,
            verbs_per_class: 10,
            neg_share: (0.15, 0.45),
            pos_share: 0.3,
            neg_agency_odds: 3.0,
            pos_agency_odds: 1.0 / 3.0,
            blocked_share: 0.02,
        }
    }
}

impl SyntheticSpec {
    /// A small corpus for fast end-to-end runs.
    pub fn small() -> Self {
        SyntheticSpec {
            years: 6,
            paragraphs_per_year: 100,
            context_words: (12, 70),
            neutral_words: 150,
            cluster_words: 20,
            verbs_per_class: 6,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Neutral,
    Negative,
    Positive,
    Disgust,
    Vermin,
    Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VadEntry {
    pub word: String,
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub class: WordClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVerb {
    pub lemma: String,
    pub agency: Agency,
    pub subject: f64,
    pub object: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub records: Vec<RawRecord>,
    pub sentences: Vec<ParsedSentence>,
    pub vad: Vec<VadEntry>,
    pub verbs: Vec<SyntheticVerb>,
    pub disgust_words: Vec<String>,
    pub vermin_words: Vec<String>,
}

/// Paths written by [`SyntheticCorpus::write_to`], relative to its directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFiles {
    pub corpus: PathBuf,
    pub conllu: PathBuf,
    pub vad: PathBuf,
    pub perspective: PathBuf,
    pub agency: PathBuf,
    pub disgust: PathBuf,
}

impl Default for SyntheticFiles {
    fn default() -> Self {
        SyntheticFiles {
            corpus: "corpus.jsonl".into(),
            conllu: "parses.conllu".into(),
            vad: "vad.tsv".into(),
            perspective: "perspective.tsv".into(),
            agency: "agency.tsv".into(),
            disgust: "disgust.txt".into(),
        }
    }
}

fn pseudo_word(prefix: &str, index: usize, syllables: usize) -> String {
    let mut w = prefix.to_string();
    let mut i = index;
    for _ in 0..syllables {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    w
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    // Lexicon scores carry three decimals, as in the NRC files.
    (rng.random_range(lo..hi) * 1000.0).round() / 1000.0
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vad = Vec::new();
    let mut class_words = |prefix: &str, n: usize, offset: usize, class, v: (f64, f64), d: (f64, f64), rng: &mut ChaCha8Rng| {
        let syllables = if offset == 0 { 3 } else { 4 };
        let words: Vec<String> = (0..n).map(|i| pseudo_word(prefix, i + offset, syllables)).collect();
        for w in &words {
            vad.push(VadEntry {
                word: w.clone(),
                valence: uniform(rng, v.0, v.1),
                arousal: uniform(rng, 0.3, 0.7),
                dominance: uniform(rng, d.0, d.1),
                class,
            });
        }
        words
    };
    let neutral = class_words("", spec.neutral_words, 0, WordClass::Neutral, (0.4, 0.6), (0.4, 0.6), &mut rng);
    let negative = class_words("", spec.cluster_words, 4096, WordClass::Negative, (0.05, 0.35), (0.1, 0.3), &mut rng);
    let positive = class_words("", spec.cluster_words, 8192, WordClass::Positive, (0.75, 0.95), (0.7, 0.9), &mut rng);
    let disgust = class_words(
        DISGUST_STEM,
        (spec.cluster_words / 3).max(3),
        0,
        WordClass::Disgust,
        (0.1, 0.3),
        (0.3, 0.5),
        &mut rng,
    );
    let vermin: Vec<String> = crate::config::DEFAULT_VERMIN_WORDS.iter().map(|s| s.to_string()).collect();
    for w in &vermin {
        vad.push(VadEntry {
            word: w.clone(),
            valence: uniform(&mut rng, 0.15, 0.35),
            arousal: uniform(&mut rng, 0.3, 0.7),
            dominance: uniform(&mut rng, 0.2, 0.4),
            class: WordClass::Vermin,
        });
    }
    for w in [LABEL_NEG, LABEL_POS] {
        vad.push(VadEntry {
            word: w.into(),
            valence: 0.5,
            arousal: 0.5,
            dominance: 0.5,
            class: WordClass::Label,
        });
    }

    let mut verbs = Vec::new();
    for (agency, prefix, sign) in [(Agency::Positive, "vp", 1.0), (Agency::NonPositive, "vn", -1.0)] {
        for i in 0..spec.verbs_per_class {
            verbs.push(SyntheticVerb {
                lemma: pseudo_word(prefix, i, 2),
                agency,
                subject: sign * uniform(&mut rng, 0.1, 0.6),
                object: sign * uniform(&mut rng, 0.1, 0.6),
            });
        }
    }
    // negative words from mildest to harshest
    let mut by_valence: Vec<(f64, &String)> = vad
        .iter()
        .filter(|e| e.class == WordClass::Negative)
        .map(|e| e.valence)
        .zip(&negative)
        .collect();
    by_valence.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let by_valence: Vec<String> = by_valence.into_iter().map(|(_, w)| w.clone()).collect();
    let window = (by_valence.len() / 2).max(1);

    let pos_verbs: Vec<&SyntheticVerb> = verbs.iter().filter(|v| v.agency == Agency::Positive).collect();
    let neg_verbs: Vec<&SyntheticVerb> = verbs.iter().filter(|v| v.agency == Agency::NonPositive).collect();

    let mut records = Vec::new();
    let mut sentences = Vec::new();
    for t in 0..spec.years {
        let year = spec.first_year + t as i32;
        let progress = if spec.years > 1 { t as f64 / (spec.years - 1) as f64 } else { 0.0 };
        let neg_share = spec.neg_share.0 + (spec.neg_share.1 - spec.neg_share.0) * progress;
        let offset = (progress * (by_valence.len() - window) as f64).round() as usize;
        let harsh = &by_valence[offset..offset + window];
        for i in 0..spec.paragraphs_per_year {
            let id = format!("p{year}-{i:05}");
            let section = if rng.random_bool(spec.blocked_share) { "Arts" } else { "News" };
            let len = rng.random_range(spec.context_words.0..=spec.context_words.1);
            let kind: f64 = rng.random();
            let (label, share, odds) = if kind < 0.25 {
                (Some(LABEL_NEG), neg_share, spec.neg_agency_odds)
            } else if kind < 0.5 {
                (Some(LABEL_POS), spec.pos_share, spec.pos_agency_odds)
            } else {
                (None, 0.4, 1.0)
            };
            let topic = rng.random_range(0..5);
            let mut context: Vec<String> = Vec::with_capacity(len + 3);
            for _ in 0..len {
                let planted = rng.random_bool(share);
                let pool: &[String] = match (label, planted) {
                    (_, false) => &neutral,
                    (Some(LABEL_NEG), true) => match rng.random_range(0..4) {
                        0 | 1 => harsh,
                        2 => &disgust,
                        _ => &vermin,
                    },
                    (Some(_), true) => &positive,
                    (None, true) => match topic {
                        0 => &negative,
                        1 => &positive,
                        2 => &disgust,
                        3 => &vermin,
                        _ => &neutral,
                    },
                };
                context.push(pool.choose(&mut rng).unwrap().clone());
            }
            let mut text = String::new();
            if let Some(label) = label {
                for _ in 0..2 {
                    let at = rng.random_range(0..=context.len());
                    context.insert(at, label.to_string());
                }
                let p_nonpos = odds / (1.0 + odds);
                let class = if rng.random_bool(p_nonpos) { &neg_verbs } else { &pos_verbs };
                let verb = *class.choose(&mut rng).unwrap();
                let object = neutral.choose(&mut rng).unwrap();
                let variant = rng.random_range(0..10);
                let sentence = clause(label, verb, object, variant, &id, year);
                let words: Vec<&str> = sentence.tokens.iter().map(|t| t.form.as_str()).collect();
                text.push_str(&words.join(" "));
                text.push_str(". ");
                sentences.push(sentence);
            }
            text.push_str(&context.join(" "));
            text.push('.');
            records.push(RawRecord {
                id,
                year,
                section: section.into(),
                text,
            });
        }
    }
    SyntheticCorpus {
        spec: spec.clone(),
        records,
        sentences,
        vad,
        verbs,
        disgust_words: disgust,
        vermin_words: vermin,
    }
}

fn token(id: usize, form: &str, lemma: &str, upos: &str, head: usize, deprel: &str) -> Token {
    Token {
        id,
        form: form.into(),
        lemma: lemma.into(),
        upos: upos.into(),
        xpos: "_".into(),
        feats: "_".into(),
        head,
        deprel: deprel.into(),
        deps: "_".into(),
        misc: "_".into(),
    }
}

/// Variants 0-7 active, 8 negated active, 9 passive with the label as agent.
fn clause(label: &str, verb: &SyntheticVerb, object: &str, variant: u32, id: &str, year: i32) -> ParsedSentence {
    let v = &verb.lemma;
    let tokens = match variant {
        8 => vec![
            token(1, label, label, "NOUN", 3, "nsubj"),
            token(2, "not", "not", "PART", 3, "advmod"),
            token(3, &format!("{v}s"), v, "VERB", 0, "root"),
            token(4, object, object, "NOUN", 3, "obj"),
        ],
        9 => vec![
            token(1, object, object, "NOUN", 3, "nsubj:pass"),
            token(2, "was", "be", "AUX", 3, "aux:pass"),
            token(3, &format!("{v}ed"), v, "VERB", 0, "root"),
            token(4, "by", "by", "ADP", 5, "case"),
            token(5, label, label, "NOUN", 3, "obl:agent"),
        ],
        _ => vec![
            token(1, label, label, "NOUN", 2, "nsubj"),
            token(2, &format!("{v}s"), v, "VERB", 0, "root"),
            token(3, object, object, "NOUN", 2, "obj"),
        ],
    };
    ParsedSentence {
        comments: vec![
            format!(" sent_id = {id}-s1"),
            format!(" paragraph_id = {id}"),
            format!(" year = {year}"),
        ],
        sent_id: Some(format!("{id}-s1")),
        paragraph_id: Some(id.into()),
        year: Some(year),
        tokens,
    }
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(p, e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

impl SyntheticCorpus {
    pub fn token_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| crate::corpus::tokenize(&r.text).len())
            .sum()
    }

    /// Writes the corpus, parses and lexicons under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<SyntheticFiles> {
        let files = SyntheticFiles::default();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join(&files.corpus);
        let mut w = create(&path)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(io(&path))?;
        }
        w.flush().map_err(io(&path))?;

        let path = dir.join(&files.conllu);
        let mut w = create(&path)?;
        write_conllu(&mut w, &self.sentences).map_err(io(&path))?;
        w.flush().map_err(io(&path))?;

        let path = dir.join(&files.vad);
        let mut w = create(&path)?;
        let mut body = String::from("Word\tValence\tArousal\tDominance\n");
        for e in &self.vad {
            body.push_str(&format!("{}\t{:.3}\t{:.3}\t{:.3}\n", e.word, e.valence, e.arousal, e.dominance));
        }
        w.write_all(body.as_bytes()).map_err(io(&path))?;
        w.flush().map_err(io(&path))?;

        let path = dir.join(&files.perspective);
        let mut body = String::from("verb\tperspective(writer->subject)\tperspective(writer->object)\n");
        for v in &self.verbs {
            body.push_str(&format!("{}\t{:.3}\t{:.3}\n", v.lemma, v.subject, v.object));
        }
        std::fs::write(&path, body).map_err(io(&path))?;

        let path = dir.join(&files.agency);
        let mut body = String::from("verb\tagency\n");
        for v in &self.verbs {
            let label = match v.agency {
                Agency::Positive => "agency_pos",
                Agency::NonPositive => "agency_neg",
            };
            body.push_str(&format!("{}\t{label}\n", v.lemma));
        }
        std::fs::write(&path, body).map_err(io(&path))?;

        let path = dir.join(&files.disgust);
        std::fs::write(&path, format!("# planted disgust stems\n{DISGUST_STEM}*\n")).map_err(io(&path))?;
        Ok(files)
    }
}

/// A pipeline config over files written by [`SyntheticCorpus::write_to`],
/// with paths relative to the same directory.
pub fn pipeline_config(spec: &SyntheticSpec, files: &SyntheticFiles) -> PipelineConfig {
    let mut c = PipelineConfig {
        year_range: Some((spec.first_year, spec.first_year + spec.years as i32 - 1)),
        labels: vec![LabelSet::with_plural(LABEL_NEG), LabelSet::with_plural(LABEL_POS)],
        comparison: Vec::new(),
        groups: vec![
            GroupConfig::new(LABEL_NEG, &[LABEL_NEG]),
            GroupConfig::new(LABEL_POS, &[LABEL_POS]),
            GroupConfig::new("all", &[crate::config::ALL_LABELS]),
        ],
        ..Default::default()
    };
    c.out = "out".into();
    c.corpus.paths = vec![files.corpus.clone()];
    c.corpus.conllu = vec![files.conllu.clone()];
    c.lexicons.vad = Some(files.vad.clone());
    c.lexicons.perspective = Some(files.perspective.clone());
    c.lexicons.agency = Some(files.agency.clone());
    c.concepts.disgust = ConceptConfig {
        stems: Some(files.disgust.clone()),
        words: Vec::new(),
    };
    let (first, last) = (spec.first_year, spec.first_year + spec.years as i32 - 1);
    c.report.trend_ranges = vec![(first, last), ((first + last + 1) / 2, last)];
    c.extremes.required_labels = c.labels.clone();
    c.extremes.group = "all".into();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let spec = SyntheticSpec::small();
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), spec.years * spec.paragraphs_per_year);
        let labelled = a
            .records
            .iter()
            .filter(|r| r.text.contains(LABEL_NEG) || r.text.contains(LABEL_POS))
            .count();
        assert_eq!(labelled, a.sentences.len());
        for s in &a.sentences {
            assert_eq!(s.tokens.iter().filter(|t| t.head == 0).count(), 1);
        }
    }

    #[test]
    fn pseudo_words_are_distinct() {
        let spec = SyntheticSpec::default();
        let c = generate(&spec);
        let mut words: Vec<&str> = c.vad.iter().map(|e| e.word.as_str()).collect();
        let n = words.len();
        words.sort_unstable();
        words.dedup();
        assert_eq!(words.len(), n);
        assert!(words.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }
}
