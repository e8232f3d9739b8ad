//! Declarative pipeline configuration (TOML). Every default reproduces the
//! original protocol; relative paths resolve against the config file's
//! directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{comparison_label, default_labels, LabelSet, DEFAULT_SECTION_BLOCKLIST};
use crate::embeddings::TrainConfig;
use crate::error::{Error, Result};
use crate::measures::MeasureKind;
use crate::stats::CiMethod;

/// Group name that stands for the union of every filter label.
pub const ALL_LABELS: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub runs: usize,
    pub out: PathBuf,
    /// Inclusive; paragraphs outside are dropped at ingest.
    pub year_range: Option<(i32, i32)>,
    pub corpus: CorpusConfig,
    pub lexicons: LexiconConfig,
    /// Labels that select paragraphs for the lexicon measures.
    pub labels: Vec<LabelSet>,
    /// In-group labels measured alongside the groups but not used to filter.
    pub comparison: Vec<LabelSet>,
    /// The series reported in every measure.
    pub groups: Vec<GroupConfig>,
    pub train: TrainConfig,
    pub concepts: ConceptsConfig,
    pub measures: MeasuresConfig,
    pub report: ReportConfig,
    pub extremes: ExtremesConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            runs: 10,
            out: PathBuf::from("out"),
            year_range: Some((1986, 2015)),
            corpus: CorpusConfig::default(),
            lexicons: LexiconConfig::default(),
            labels: default_labels(),
            comparison: vec![comparison_label()],
            groups: vec![
                GroupConfig::new("gay", &["gay"]),
                GroupConfig::new("homosexual", &["homosexual"]),
                GroupConfig::new("all_lgbtq", &[ALL_LABELS]),
                GroupConfig::new("american", &["american"]),
            ],
            train: TrainConfig::default(),
            concepts: ConceptsConfig::default(),
            measures: MeasuresConfig::default(),
            report: ReportConfig::default(),
            extremes: ExtremesConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// JSON-lines files of `{id, year, section, text}` records.
    pub paths: Vec<PathBuf>,
    /// Pre-parsed CoNLL-U files for the tuple measures.
    pub conllu: Vec<PathBuf>,
    /// Optional `sent_id<TAB>paragraph_id` file.
    pub sentence_map: Option<PathBuf>,
    pub section_blocklist: Vec<String>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            paths: Vec::new(),
            conllu: Vec::new(),
            sentence_map: None,
            section_blocklist: DEFAULT_SECTION_BLOCKLIST.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconConfig {
    /// NRC VAD file (`word valence arousal dominance`).
    pub vad: Option<PathBuf>,
    pub perspective: Option<PathBuf>,
    pub agency: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub name: String,
    /// Canonical names from `labels` or `comparison`; `"*"` means all of `labels`.
    pub members: Vec<String>,
}

impl GroupConfig {
    pub fn new(name: &str, members: &[&str]) -> Self {
        GroupConfig {
            name: name.to_string(),
            members: members.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptConfig {
    /// File of words and `prefix*` stems, one per line.
    pub stems: Option<PathBuf>,
    #[serde(default)]
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConceptsConfig {
    pub disgust: ConceptConfig,
    pub vermin: ConceptConfig,
}

/// Vermin words; singular "mouse" and "flea" are left out on purpose since
/// their other senses dominate.
pub const DEFAULT_VERMIN_WORDS: &[&str] = &[
    "vermin",
    "rodent",
    "rodents",
    "rat",
    "rats",
    "mice",
    "cockroaches",
    "termite",
    "termites",
    "bedbug",
    "bedbugs",
    "fleas",
];

impl Default for ConceptsConfig {
    fn default() -> Self {
        ConceptsConfig {
            disgust: ConceptConfig {
                stems: None,
                words: Vec::new(),
            },
            vermin: ConceptConfig {
                stems: None,
                words: DEFAULT_VERMIN_WORDS.iter().map(|s| s.to_string()).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    Bootstrap,
    StudentT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasuresConfig {
    pub enabled: Vec<MeasureKind>,
    pub k: usize,
    /// Extra neighbor counts for the sensitivity sweep.
    pub k_sweep: Vec<usize>,
    pub sweep: bool,
    /// Drop the measured group's own surface forms from its neighbors.
    pub exclude_own_forms: bool,
    /// Also drop every other label's forms.
    pub exclude_other_labels: bool,
    pub exclude_heterosexual: bool,
    pub flip_negated: bool,
    pub ridge_alpha: f64,
    pub ci_level: f64,
    pub ci_method: CiKind,
    pub bootstrap_resamples: usize,
    /// Width in years of the pooled intervals for the paragraph and tuple measures.
    pub interval_years: i32,
}

impl Default for MeasuresConfig {
    fn default() -> Self {
        MeasuresConfig {
            enabled: MeasureKind::ALL.to_vec(),
            k: 500,
            k_sweep: vec![25, 50, 100, 250, 500, 1000],
            sweep: true,
            exclude_own_forms: true,
            exclude_other_labels: false,
            exclude_heterosexual: false,
            flip_negated: false,
            ridge_alpha: 1.0,
            ci_level: 0.95,
            ci_method: CiKind::Bootstrap,
            bootstrap_resamples: 2000,
            interval_years: 5,
        }
    }
}

impl MeasuresConfig {
    pub fn is_enabled(&self, m: MeasureKind) -> bool {
        self.enabled.contains(&m)
    }

    pub fn ci(&self, seed: u64) -> CiMethod {
        match self.ci_method {
            CiKind::Bootstrap => CiMethod::Bootstrap {
                resamples: self.bootstrap_resamples,
                seed,
            },
            CiKind::StudentT => CiMethod::StudentT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub lowess_frac: f64,
    pub lowess_iterations: usize,
    /// Inclusive year ranges tested for a linear trend.
    pub trend_ranges: Vec<(i32, i32)>,
    /// Fewest shared years for a pairwise comparison.
    pub min_paired_years: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            lowess_frac: 0.3,
            lowess_iterations: 3,
            trend_ranges: vec![(1986, 2015), (2001, 2015)],
            min_paired_years: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtremesConfig {
    pub top: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub required_labels: Vec<LabelSet>,
    pub k: usize,
    /// Group whose neighbors form the subset lexicons.
    pub group: String,
}

impl Default for ExtremesConfig {
    fn default() -> Self {
        ExtremesConfig {
            top: 20,
            min_words: 15,
            max_words: 75,
            required_labels: vec![LabelSet::with_plural("gay"), LabelSet::with_plural("homosexual")],
            k: 500,
            group: "all_lgbtq".into(),
        }
    }
}

/// A measured group resolved to a single label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub label: LabelSet,
    /// Members, kept separate for label-vector aggregation.
    pub members: Vec<LabelSet>,
}

impl PipelineConfig {
    /// Reads, resolves relative paths and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        self.corpus.paths.iter_mut().for_each(fix);
        self.corpus.conllu.iter_mut().for_each(fix);
        for p in [
            &mut self.corpus.sentence_map,
            &mut self.lexicons.vad,
            &mut self.lexicons.perspective,
            &mut self.lexicons.agency,
            &mut self.concepts.disgust.stems,
            &mut self.concepts.vermin.stems,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks value ranges, group references and that every configured file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs < 1 {
            return bad("runs must be at least 1".into());
        }
        self.train
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some((lo, hi)) = self.year_range {
            if lo > hi {
                return bad(format!("year_range ({lo}, {hi}) is empty"));
            }
        }
        let m = &self.measures;
        if m.k < 1 || m.k_sweep.iter().any(|&k| k < 1) || self.extremes.k < 1 {
            return bad("k values must be at least 1".into());
        }
        if !(m.ci_level > 0.0 && m.ci_level < 1.0) {
            return bad(format!("ci_level {} is not in (0, 1)", m.ci_level));
        }
        if m.ci_method == CiKind::Bootstrap && m.bootstrap_resamples < 1 {
            return bad("bootstrap_resamples must be at least 1".into());
        }
        if !(m.ridge_alpha >= 0.0) {
            return bad("ridge_alpha must be non-negative".into());
        }
        if m.interval_years < 1 {
            return bad("interval_years must be at least 1".into());
        }
        let r = &self.report;
        if !(r.lowess_frac > 0.0 && r.lowess_frac <= 1.0) {
            return bad(format!("lowess_frac {} is not in (0, 1]", r.lowess_frac));
        }
        if r.min_paired_years < 1 {
            return bad("min_paired_years must be at least 1".into());
        }
        if self.extremes.min_words > self.extremes.max_words {
            return bad("extremes.min_words exceeds max_words".into());
        }
        if self.labels.is_empty() {
            return bad("no labels configured".into());
        }
        let groups = self.resolve_groups()?;
        if !groups.iter().any(|g| g.name == self.extremes.group) {
            return bad(format!("extremes.group {:?} is not a configured group", self.extremes.group));
        }
        let mut files: Vec<&PathBuf> = Vec::new();
        files.extend(&self.corpus.paths);
        files.extend(&self.corpus.conllu);
        files.extend(self.corpus.sentence_map.iter());
        files.extend(self.lexicons.vad.iter());
        files.extend(self.lexicons.perspective.iter());
        files.extend(self.lexicons.agency.iter());
        files.extend(self.concepts.disgust.stems.iter());
        files.extend(self.concepts.vermin.stems.iter());
        for f in files {
            if !f.is_file() {
                return bad(format!("file not found: {}", f.display()));
            }
        }
        Ok(())
    }

    /// Resolves each group's members against `labels` and `comparison`.
    pub fn resolve_groups(&self) -> Result<Vec<Group>> {
        if self.groups.is_empty() {
            return Err(Error::Config("no groups configured".into()));
        }
        let mut names = BTreeSet::new();
        let mut out = Vec::new();
        for g in &self.groups {
            if !names.insert(g.name.as_str()) {
                return Err(Error::Config(format!("duplicate group {:?}", g.name)));
            }
            if g.name.is_empty() || g.name.contains([',', '"', '\n']) {
                return Err(Error::Config(format!("invalid group name {:?}", g.name)));
            }
            let mut members = Vec::new();
            for m in &g.members {
                if m == ALL_LABELS {
                    members.extend(self.labels.iter().cloned());
                    continue;
                }
                let found = self
                    .labels
                    .iter()
                    .chain(&self.comparison)
                    .find(|l| l.canonical == m.to_lowercase())
                    .ok_or_else(|| Error::Config(format!("group {:?}: unknown label {m:?}", g.name)))?;
                members.push(found.clone());
            }
            if members.is_empty() {
                return Err(Error::Config(format!("group {:?} has no members", g.name)));
            }
            out.push(Group {
                name: g.name.clone(),
                label: LabelSet::union(&g.name, &members),
                members,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_the_default() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.train.window, 10);
        assert_eq!(c.train.epochs, 10);
        assert_eq!(c.measures.k, 500);
        assert_eq!(c.runs, 10);
        assert_eq!(c.year_range, Some((1986, 2015)));
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let c = PipelineConfig::default();
        let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(PipelineConfig::from_toml("windw = 3"), Err(Error::Config(_))));
        let c = PipelineConfig::from_toml("runs = 0").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::from_toml("[measures]\nk_sweep = [0]").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::from_toml("[corpus]\npaths = [\"/nonexistent/x.jsonl\"]").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("not found"));
    }

    #[test]
    fn groups_resolve() {
        let c = PipelineConfig::default();
        let g = c.resolve_groups().unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[2].members.len(), c.labels.len());
        assert!(g[3].label.matches_word("americans"));
        let mut c = c;
        c.groups.push(GroupConfig::new("x", &["martian"]));
        assert!(c.resolve_groups().is_err());
    }
}
