//! The five pipeline steps. Steps hand off through files under the output
//! directory, indexed by `manifest.json`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ConceptConfig, Group, PipelineConfig};
use crate::corpus::{ingest, match_label, read_cache, write_cache, CachedParagraph, CorpusStats, Paragraph};
use crate::embeddings::{
    aggregate_label_vector, concept_vector, derive_seed, nearest_neighbors, paragraph_embeddings, read_model,
    train_diachronic_with, write_model, ConceptMembers, ConceptVector, EmbeddingModel, ModelKey, TfIdf, TrainConfig,
};
use crate::error::{Error, Result};
use crate::lexicons::{
    load_agency_lexicon, load_perspective_lexicon, load_stem_dictionary, load_vad, AffectLexicon, StemDictionary,
};
use crate::measures::{
    agency_fraction, concept_distance, fit_ridge, induced_affect, neighbor_affect_multi, paragraph_affect,
    perspective_score, rank_extreme_paragraphs, subset_lexicon, ExtremeFilter, ExtremeMode, ExtremeScorer,
    MeasureKind, MeasureSeries, RankedParagraph,
};
use crate::report::{render_svg, Chart, ChartPoint, ChartSeries};
use crate::stats::{linear_trend_range, lowess, wilcoxon_signed_rank};
use crate::syntax::{assign_paragraphs, extract_subject_verb, extract_svo, read_conllu, read_sentence_map, ParsedSentence};

const SALT_CI: u64 = 0x6369;
const SALT_RIDGE: u64 = 0x7269_6467_65;
const HETEROSEXUAL_FORMS: &[&str] = &["heterosexual", "heterosexuals"];

/// Where every artifact lives, relative to the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub const CACHE: &'static str = "corpus/cache.jsonl";
    pub const CORPUS_STATS: &'static str = "corpus/stats.csv";
    pub const LABEL_COUNTS: &'static str = "corpus/label_counts.csv";
    pub const SERIES: &'static str = "series.csv";
    pub const RIDGE: &'static str = "measures/ridge.csv";
    pub const STATS: &'static str = "stats.csv";
    pub const EXTREMES: &'static str = "extremes.json";
    pub const MANIFEST: &'static str = "manifest.json";

    pub fn full_model(run: usize) -> String {
        format!("models/full_run{run}.dhem")
    }

    pub fn year_model(year: i32, run: usize) -> String {
        format!("models/{year}_run{run}.dhem")
    }

    pub fn measure_csv(name: &str) -> String {
        format!("measures/{name}.csv")
    }

    pub fn figure(name: &str) -> String {
        format!("figures/{name}.svg")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub step: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<TrainConfig>,
    /// Data file a figure is drawn from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl ManifestEntry {
    fn new(step: &str, kind: &str) -> Self {
        ManifestEntry {
            step: step.into(),
            kind: kind.into(),
            run: None,
            year: None,
            seed: None,
            hyperparameters: None,
            source: None,
        }
    }
}

/// Index of every output file keyed by its path relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn load(out: &Path) -> Result<Manifest> {
        let path = out.join(Layout::MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::in_file(&path, e.into()))
    }

    fn save(&self, out: &Path) -> Result<()> {
        let path = out.join(Layout::MANIFEST);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Replaces every entry written by `step`.
    fn replace_step(out: &Path, step: &str, entries: BTreeMap<String, ManifestEntry>) -> Result<()> {
        let mut m = Manifest::load(out)?;
        m.files.retain(|_, e| e.step != step);
        m.files.extend(entries);
        m.save(out)
    }
}

/// One row of a per-measure CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub measure: String,
    pub label: String,
    pub year: i32,
    /// Run index, `mean` for the across-run summary, `all` for measures pooled over the corpus.
    pub run: String,
    pub value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub measure: String,
    pub label: String,
    /// `year` or `interval`.
    pub granularity: String,
    pub start: i32,
    pub end: i32,
    pub value: f64,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    /// `trend` or `wilcoxon`.
    pub test: String,
    pub measure: String,
    pub label: String,
    /// The second label of a paired comparison.
    pub other: String,
    pub from: i32,
    pub to: i32,
    /// Slope for trends, the signed-rank statistic for comparisons.
    pub statistic: f64,
    pub std_error: Option<f64>,
    pub p_value: f64,
    pub n: usize,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeRow {
    pub measure: String,
    pub year: i32,
    pub run: usize,
    pub alpha: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_pearson: f64,
    pub train_r2: f64,
    pub test_pearson: f64,
    pub test_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeParagraph {
    pub rank: usize,
    pub id: String,
    pub year: i32,
    pub score: f64,
    pub words: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeList {
    pub qualifying: usize,
    pub highest: Vec<ExtremeParagraph>,
    pub lowest: Vec<ExtremeParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremesReport {
    pub group: String,
    pub k: usize,
    pub neighbors: Vec<String>,
    pub valence_subset: usize,
    pub dominance_subset: usize,
    pub modes: BTreeMap<String, ExtremeList>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub total: CorpusStats,
    pub retained: CorpusStats,
    pub skipped_empty: usize,
}

fn mkdirs(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    mkdirs(path)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::in_file(path, Error::Format(format!("{other:?}"))),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    mkdirs(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

fn require(path: &Path, what: &str, step: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            what: what.into(),
            path: path.to_path_buf(),
            step: step.into(),
        })
    }
}

fn is_blocked(section: &str, blocklist: &HashSet<String>) -> bool {
    blocklist.contains(&section.trim().to_lowercase())
}

/// A configured pipeline bound to its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub layout: Layout,
    groups: Vec<Group>,
    blocklist: HashSet<String>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let groups = config.resolve_groups()?;
        let blocklist = config
            .corpus
            .section_blocklist
            .iter()
            .map(|s| s.trim().to_lowercase())
            .collect();
        Ok(Pipeline {
            layout: Layout::new(config.out.clone()),
            config,
            groups,
            blocklist,
        })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    fn out(&self) -> &Path {
        &self.layout.root
    }

    fn load_cache(&self) -> Result<Vec<CachedParagraph>> {
        let path = self.layout.path(Layout::CACHE);
        require(&path, "corpus cache", "ingest")?;
        read_cache(&path).map_err(|e| Error::in_file(&path, e))
    }

    /// Reads the corpus files, writes the cache and the count tables.
    pub fn ingest(&self) -> Result<IngestSummary> {
        let cfg = &self.config;
        if cfg.corpus.paths.is_empty() {
            return Err(Error::Config("corpus.paths is empty".into()));
        }
        let mut cached = Vec::new();
        let mut total = CorpusStats::default();
        let mut retained = CorpusStats::default();
        let mut skipped_empty = 0;
        let mut ids = HashSet::new();
        for path in &cfg.corpus.paths {
            let mut reader = ingest(path)?.with_year_range(cfg.year_range);
            for p in reader.by_ref() {
                let p = p.map_err(|e| Error::in_file(path, e))?;
                if !ids.insert(p.id.clone()) {
                    log::warn!("{}: duplicate paragraph id {}", path.display(), p.id);
                }
                let matched = match_label(&p.tokens, &cfg.labels);
                total.add_paragraph(&p, &matched);
                let keep = !matched.is_empty() && !is_blocked(&p.section, &self.blocklist);
                if keep {
                    retained.add_paragraph(&p, &matched);
                }
                cached.push(CachedParagraph {
                    labels: matched.iter().map(|l| l.canonical.clone()).collect(),
                    retained: keep,
                    paragraph: p,
                });
            }
            skipped_empty += reader.skipped_empty();
        }
        if cached.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if retained.paragraph_count == 0 {
            log::warn!("no paragraph mentions a configured label");
        }
        let cache = self.layout.path(Layout::CACHE);
        mkdirs(&cache)?;
        write_cache(&cache, &cached)?;
        let mut stats = Vec::new();
        retained.write_csv(&mut stats).map_err(|e| Error::io(Layout::CORPUS_STATS, e))?;
        write_file(&self.layout.path(Layout::CORPUS_STATS), stats)?;
        let mut counts = Vec::new();
        retained
            .write_label_counts(&mut counts)
            .map_err(|e| Error::io(Layout::LABEL_COUNTS, e))?;
        write_file(&self.layout.path(Layout::LABEL_COUNTS), counts)?;

        let entries = [
            (Layout::CACHE, "corpus_cache"),
            (Layout::CORPUS_STATS, "csv"),
            (Layout::LABEL_COUNTS, "csv"),
        ]
        .into_iter()
        .map(|(p, k)| (p.to_string(), ManifestEntry::new("ingest", k)))
        .collect();
        Manifest::replace_step(self.out(), "ingest", entries)?;
        Ok(IngestSummary {
            total,
            retained,
            skipped_empty,
        })
    }

    /// Training sentences by year: every paragraph outside blocked sections.
    fn training_corpus(&self, cache: &[CachedParagraph]) -> BTreeMap<i32, Vec<Vec<String>>> {
        let mut by_year: BTreeMap<i32, Vec<Vec<String>>> = BTreeMap::new();
        for c in cache {
            let p = &c.paragraph;
            if !is_blocked(&p.section, &self.blocklist) {
                by_year.entry(p.year).or_default().push(p.tokens.clone());
            }
        }
        by_year
    }

    /// Trains the full-corpus and per-year models of every run.
    pub fn train(&self) -> Result<usize> {
        let cache = self.load_cache()?;
        let corpus = self.training_corpus(&cache);
        drop(cache);
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut entries = BTreeMap::new();
        let mut config = self.config.train.clone();
        config.seed = self.config.seed;
        train_diachronic_with(&corpus, &config, self.config.runs, |key, model, used| {
            let (rel, mut entry) = match key {
                ModelKey::Full { run } => {
                    let mut e = ManifestEntry::new("train", "full_model");
                    e.run = Some(run);
                    (Layout::full_model(run), e)
                }
                ModelKey::Year { year, run } => {
                    let mut e = ManifestEntry::new("train", "year_model");
                    e.run = Some(run);
                    e.year = Some(year);
                    (Layout::year_model(year, run), e)
                }
            };
            let path = self.layout.path(&rel);
            mkdirs(&path)?;
            write_model(model, &path)?;
            entry.seed = Some(used.seed);
            entry.hyperparameters = Some(used.clone());
            entries.insert(rel, entry);
            Ok(())
        })?;
        let n = entries.len();
        Manifest::replace_step(self.out(), "train", entries)?;
        Ok(n)
    }

    fn load_model(&self, rel: &str) -> Result<EmbeddingModel> {
        let path = self.layout.path(rel);
        require(&path, "embedding model", "train")?;
        read_model(&path)
            .and_then(EmbeddingModel::postprocessed)
            .map_err(|e| Error::in_file(&path, e))
    }

    fn vad(&self, needed_by: MeasureKind) -> Result<(AffectLexicon, AffectLexicon)> {
        let path = self
            .config
            .lexicons
            .vad
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{needed_by} needs lexicons.vad")))?;
        let (v, d) = load_vad(path).map_err(|e| Error::in_file(path, e))?;
        let forms = self.all_label_forms();
        Ok((v.strip_words(&forms), d.strip_words(&forms)))
    }

    fn all_label_forms(&self) -> Vec<String> {
        self.config
            .labels
            .iter()
            .chain(&self.config.comparison)
            .flat_map(|l| l.surface_forms.iter().cloned())
            .collect()
    }

    fn concept(&self, name: &str, c: &ConceptConfig, needed_by: MeasureKind) -> Result<StemDictionary> {
        let mut dict = match &c.stems {
            Some(path) => load_stem_dictionary(path, name).map_err(|e| Error::in_file(path, e))?,
            None => StemDictionary::new(name, std::iter::empty::<&str>()),
        };
        dict.entries
            .extend(StemDictionary::new(name, &c.words).entries);
        if dict.entries.is_empty() {
            return Err(Error::Config(format!("{needed_by} needs concepts.{name} stems or words")));
        }
        Ok(dict)
    }

    fn exclusions(&self, group: &Group) -> Vec<String> {
        let m = &self.config.measures;
        let mut out: BTreeSet<String> = BTreeSet::new();
        if m.exclude_own_forms {
            out.extend(group.label.surface_forms.iter().cloned());
        }
        if m.exclude_other_labels {
            out.extend(self.all_label_forms());
        }
        if m.exclude_heterosexual {
            out.extend(HETEROSEXUAL_FORMS.iter().map(|s| s.to_string()));
        }
        out.into_iter().collect()
    }

    fn ci_seed(&self) -> u64 {
        derive_seed(self.config.seed, SALT_CI)
    }

    fn interval_of(&self, year: i32) -> (i32, i32) {
        let w = self.config.measures.interval_years;
        let base = self.config.year_range.map(|r| r.0).unwrap_or(0);
        let start = base + (year - base).div_euclid(w) * w;
        (start, start + w - 1)
    }

    /// Year and pooled-interval series from raw observations.
    fn observation_series(
        &self,
        kind: MeasureKind,
        obs: &BTreeMap<String, BTreeMap<i32, Vec<f64>>>,
        rows: &mut Vec<MeasureRow>,
        series: &mut Vec<SeriesRow>,
    ) -> Result<()> {
        let m = &self.config.measures;
        let method = m.ci(self.ci_seed());
        let name = kind.name();
        for g in &self.groups {
            let Some(by_year) = obs.get(&g.name) else { continue };
            let s = MeasureSeries::from_observations(kind, &g.name, by_year, m.ci_level, method)?;
            for p in &s.points {
                rows.push(MeasureRow {
                    measure: name.into(),
                    label: g.name.clone(),
                    year: p.year,
                    run: "all".into(),
                    value: p.value,
                    n: p.n,
                });
                series.push(SeriesRow {
                    measure: name.into(),
                    label: g.name.clone(),
                    granularity: "year".into(),
                    start: p.year,
                    end: p.year,
                    value: p.value,
                    n: p.n,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                });
            }
            let mut pooled: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
            for (&year, v) in by_year {
                pooled.entry(self.interval_of(year)).or_default().extend(v);
            }
            let keyed: BTreeMap<i32, Vec<f64>> = pooled.iter().map(|(k, v)| (k.0, v.clone())).collect();
            let s = MeasureSeries::from_observations(kind, &g.name, &keyed, m.ci_level, method)?;
            for p in &s.points {
                series.push(SeriesRow {
                    measure: name.into(),
                    label: g.name.clone(),
                    granularity: "interval".into(),
                    start: p.year,
                    end: self.interval_of(p.year).1,
                    value: p.value,
                    n: p.n,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                });
            }
        }
        Ok(())
    }

    fn parsed_sentences(&self, cache: &[CachedParagraph]) -> Result<Vec<ParsedSentence>> {
        let cfg = &self.config.corpus;
        if cfg.conllu.is_empty() {
            return Err(Error::Config("tuple measures need corpus.conllu".into()));
        }
        let map = match &cfg.sentence_map {
            Some(p) => read_sentence_map(p).map_err(|e| Error::in_file(p, e))?,
            None => HashMap::new(),
        };
        let index: HashMap<&str, &Paragraph> = cache.iter().map(|c| (c.paragraph.id.as_str(), &c.paragraph)).collect();
        let mut out = Vec::new();
        for path in &cfg.conllu {
            let mut reader = read_conllu(path)?;
            let mut sentences = Vec::new();
            for s in reader.by_ref() {
                sentences.push(s.map_err(|e| Error::in_file(path, e))?);
            }
            if reader.skipped() > 0 {
                log::warn!("{}: skipped {} malformed sentences", path.display(), reader.skipped());
            }
            assign_paragraphs(&mut sentences, &map);
            for mut s in sentences {
                if let Some(pid) = &s.paragraph_id {
                    match index.get(pid.as_str()) {
                        Some(p) if is_blocked(&p.section, &self.blocklist) => continue,
                        Some(p) => {
                            s.year.get_or_insert(p.year);
                        }
                        None => continue,
                    }
                }
                match (s.year, self.config.year_range) {
                    (None, _) => continue,
                    (Some(y), Some((lo, hi))) if y < lo || y > hi => continue,
                    _ => out.push(s),
                }
            }
        }
        Ok(out)
    }

    /// Computes every enabled measure and writes one CSV per measure plus the
    /// merged series.
    pub fn measure(&self) -> Result<Vec<String>> {
        let cfg = &self.config;
        let m = &cfg.measures;
        let cache = self.load_cache()?;
        let mut entries = BTreeMap::new();
        let mut series = Vec::new();
        let mut written = Vec::new();
        let mut emit = |name: &str, rows: Vec<MeasureRow>, entries: &mut BTreeMap<String, ManifestEntry>| -> Result<()> {
            let rel = Layout::measure_csv(name);
            write_csv(&self.layout.path(&rel), &rows)?;
            entries.insert(rel, ManifestEntry::new("measure", "csv"));
            written.push(name.to_string());
            Ok(())
        };

        if m.is_enabled(MeasureKind::ParagraphValence) {
            let (valence, _) = self.vad(MeasureKind::ParagraphValence)?;
            let mut obs: BTreeMap<String, BTreeMap<i32, Vec<f64>>> = BTreeMap::new();
            for c in &cache {
                let p = &c.paragraph;
                if is_blocked(&p.section, &self.blocklist) {
                    continue;
                }
                let mut score = None;
                for g in &self.groups {
                    if !g.label.matches_any(&p.tokens) {
                        continue;
                    }
                    let Some(v) = *score.get_or_insert_with(|| paragraph_affect(&p.tokens, &p.lemmas, &valence)) else {
                        break;
                    };
                    obs.entry(g.name.clone()).or_default().entry(p.year).or_default().push(v);
                }
            }
            let mut rows = Vec::new();
            self.observation_series(MeasureKind::ParagraphValence, &obs, &mut rows, &mut series)?;
            emit(MeasureKind::ParagraphValence.name(), rows, &mut entries)?;
        }

        let wants_tuples = m.is_enabled(MeasureKind::Perspective) || m.is_enabled(MeasureKind::Agency);
        if wants_tuples {
            let sentences = self.parsed_sentences(&cache)?;
            let group_labels: Vec<_> = self.groups.iter().map(|g| g.label.clone()).collect();
            if m.is_enabled(MeasureKind::Perspective) {
                let path = cfg
                    .lexicons
                    .perspective
                    .as_ref()
                    .ok_or_else(|| Error::Config("perspective needs lexicons.perspective".into()))?;
                let lex = load_perspective_lexicon(path).map_err(|e| Error::in_file(path, e))?;
                let tuples: Vec<_> = sentences.iter().flat_map(extract_svo).collect();
                let o = perspective_score(&tuples, &lex, &group_labels, m.flip_negated);
                log::info!(
                    "perspective: {} tuples, {} with an unlexiconed verb",
                    tuples.len(),
                    o.unlexiconed
                );
                let obs = self.groups.iter().map(|g| (g.name.clone(), o.for_label(&g.name))).collect();
                let mut rows = Vec::new();
                self.observation_series(MeasureKind::Perspective, &obs, &mut rows, &mut series)?;
                emit(MeasureKind::Perspective.name(), rows, &mut entries)?;
            }
            if m.is_enabled(MeasureKind::Agency) {
                let path = cfg
                    .lexicons
                    .agency
                    .as_ref()
                    .ok_or_else(|| Error::Config("agency needs lexicons.agency".into()))?;
                let lex = load_agency_lexicon(path).map_err(|e| Error::in_file(path, e))?;
                let pairs: Vec<_> = sentences.iter().flat_map(extract_subject_verb).collect();
                let counts = agency_fraction(&pairs, &lex, &group_labels);
                let mut obs: BTreeMap<String, BTreeMap<i32, Vec<f64>>> = BTreeMap::new();
                for ((year, label), c) in counts {
                    let v = obs.entry(label).or_default().entry(year).or_default();
                    v.extend(std::iter::repeat_n(1.0, c.positive));
                    v.extend(std::iter::repeat_n(0.0, c.total - c.positive));
                }
                let mut rows = Vec::new();
                self.observation_series(MeasureKind::Agency, &obs, &mut rows, &mut series)?;
                emit(MeasureKind::Agency.name(), rows, &mut entries)?;
            }
        }

        if MeasureKind::ALL.iter().any(|k| k.is_embedding() && m.is_enabled(*k)) {
            let (values, ridge) = self.embedding_measures()?;
            let ci = m.ci(self.ci_seed());
            for (name, by_label) in &values {
                let mut rows = Vec::new();
                for g in &self.groups {
                    let Some(by_year) = by_label.get(&g.name) else { continue };
                    let mut obs = BTreeMap::new();
                    for (&year, runs) in by_year {
                        for (&run, &(value, n)) in runs {
                            rows.push(MeasureRow {
                                measure: name.clone(),
                                label: g.name.clone(),
                                year,
                                run: run.to_string(),
                                value,
                                n,
                            });
                        }
                        let v: Vec<f64> = runs.values().map(|x| x.0).collect();
                        rows.push(MeasureRow {
                            measure: name.clone(),
                            label: g.name.clone(),
                            year,
                            run: "mean".into(),
                            value: v.iter().sum::<f64>() / v.len() as f64,
                            n: v.len(),
                        });
                        obs.insert(year, v);
                    }
                    let kind = name
                        .split("_k")
                        .next()
                        .and_then(MeasureKind::from_name)
                        .ok_or_else(|| Error::invalid(format!("unknown measure {name}")))?;
                    let s = MeasureSeries::from_observations(kind, &g.name, &obs, m.ci_level, ci)?;
                    for p in s.points {
                        series.push(SeriesRow {
                            measure: name.clone(),
                            label: g.name.clone(),
                            granularity: "year".into(),
                            start: p.year,
                            end: p.year,
                            value: p.value,
                            n: p.n,
                            ci_low: p.ci_low,
                            ci_high: p.ci_high,
                        });
                    }
                }
                emit(name, rows, &mut entries)?;
            }
            if !ridge.is_empty() {
                write_csv(&self.layout.path(Layout::RIDGE), &ridge)?;
                entries.insert(Layout::RIDGE.into(), ManifestEntry::new("measure", "csv"));
            }
        }

        write_csv(&self.layout.path(Layout::SERIES), &series)?;
        entries.insert(Layout::SERIES.into(), ManifestEntry::new("measure", "csv"));
        Manifest::replace_step(self.out(), "measure", entries)?;
        Ok(written)
    }

    fn year_models(&self) -> Result<Vec<(i32, usize, String)>> {
        let manifest = Manifest::load(self.out())?;
        let models: Vec<(i32, usize, String)> = manifest
            .files
            .iter()
            .filter(|(_, e)| e.kind == "year_model")
            .filter_map(|(p, e)| Some((e.year?, e.run?, p.clone())))
            .collect();
        if models.is_empty() {
            return Err(Error::MissingArtifact {
                what: "per-year embedding models".into(),
                path: self.layout.path("models"),
                step: "train".into(),
            });
        }
        Ok(models)
    }

    /// Per measure name, label, year and run: (value, n).
    #[allow(clippy::type_complexity)]
    fn embedding_measures(
        &self,
    ) -> Result<(BTreeMap<String, BTreeMap<String, BTreeMap<i32, BTreeMap<usize, (f64, usize)>>>>, Vec<RidgeRow>)> {
        let m = &self.config.measures;
        let on = |k: MeasureKind| m.is_enabled(k);
        let needs_vad = [
            MeasureKind::NeighborValence,
            MeasureKind::NeighborDominance,
            MeasureKind::InducedValence,
            MeasureKind::InducedDominance,
        ]
        .into_iter()
        .find(|k| on(*k));
        let vad = needs_vad.map(|k| self.vad(k)).transpose()?;
        let disgust = on(MeasureKind::DisgustDistance)
            .then(|| self.concept("disgust", &self.config.concepts.disgust, MeasureKind::DisgustDistance))
            .transpose()?;
        let vermin = on(MeasureKind::VerminDistance)
            .then(|| self.concept("vermin", &self.config.concepts.vermin, MeasureKind::VerminDistance))
            .transpose()?;
        let mut ks: Vec<usize> = vec![m.k];
        if m.sweep {
            ks.extend(&m.k_sweep);
        }
        ks.sort_unstable();
        ks.dedup();
        let split_seed = derive_seed(self.config.seed, SALT_RIDGE);

        let mut out: BTreeMap<String, BTreeMap<String, BTreeMap<i32, BTreeMap<usize, (f64, usize)>>>> = BTreeMap::new();
        let mut put = |measure: String, label: &str, year: i32, run: usize, v: (f64, usize)| {
            out.entry(measure)
                .or_default()
                .entry(label.to_string())
                .or_default()
                .entry(year)
                .or_default()
                .insert(run, v);
        };
        let mut ridge_rows = Vec::new();
        let mut smallest_vocab = usize::MAX;
        for (year, run, rel) in self.year_models()? {
            let model = self.load_model(&rel)?;
            log::debug!("measuring {rel}");
            smallest_vocab = smallest_vocab.min(model.len());
            let concept = |dict: &Option<StemDictionary>, name: &str| -> Option<ConceptVector> {
                let dict = dict.as_ref()?;
                match concept_vector(&model, name, ConceptMembers::Stems(dict)) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        log::warn!("{rel}: {e}");
                        None
                    }
                }
            };
            let disgust_vec = concept(&disgust, "disgust");
            let vermin_vec = concept(&vermin, "vermin");
            let mut ridges = Vec::new();
            if let Some((val, dom)) = &vad {
                for (kind, lex) in [(MeasureKind::InducedValence, val), (MeasureKind::InducedDominance, dom)] {
                    if !on(kind) {
                        continue;
                    }
                    match fit_ridge(&model, lex, m.ridge_alpha, split_seed) {
                        Ok(r) => {
                            ridge_rows.push(RidgeRow {
                                measure: kind.name().into(),
                                year,
                                run,
                                alpha: r.alpha,
                                n_train: r.n_train,
                                n_test: r.n_test,
                                train_pearson: r.train_pearson,
                                train_r2: r.train_r2,
                                test_pearson: r.test_pearson,
                                test_r2: r.test_r2,
                            });
                            ridges.push((kind, r));
                        }
                        Err(e) if e.is_user_error() => log::warn!("{rel}: {kind}: {e}"),
                        Err(e) => return Err(e),
                    }
                }
            }
            for g in &self.groups {
                let vec = match aggregate_label_vector(&model, &g.members) {
                    Ok(v) => v,
                    Err(Error::LabelNotInVocabulary(_)) => {
                        log::debug!("{rel}: {} not in vocabulary", g.name);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if let Some((val, dom)) = &vad {
                    let exclude = self.exclusions(g);
                    for (kind, lex) in [(MeasureKind::NeighborValence, val), (MeasureKind::NeighborDominance, dom)] {
                        if !on(kind) {
                            continue;
                        }
                        let found = neighbor_affect_multi(&model, &vec, &ks, lex, &exclude)?;
                        for (&k, r) in ks.iter().zip(found) {
                            let Some(r) = r else {
                                log::warn!("{rel}: {kind} k={k}: no neighbor of {} in the lexicon", g.name);
                                continue;
                            };
                            if k == m.k {
                                put(kind.name().into(), &g.name, year, run, (r.value, r.n));
                            }
                            if m.sweep && m.k_sweep.contains(&k) {
                                put(format!("{}_k{k}", kind.name()), &g.name, year, run, (r.value, r.n));
                            }
                        }
                    }
                }
                for (kind, c) in [
                    (MeasureKind::DisgustDistance, &disgust_vec),
                    (MeasureKind::VerminDistance, &vermin_vec),
                ] {
                    if let Some(c) = c {
                        put(kind.name().into(), &g.name, year, run, (concept_distance(&vec, c), c.member_words.len()));
                    }
                }
                for (kind, r) in &ridges {
                    put(kind.name().into(), &g.name, year, run, (induced_affect(r, &vec), r.n_train));
                }
            }
        }
        if let Some(&k) = ks.iter().max().filter(|&&k| k > smallest_vocab && smallest_vocab > 0) {
            log::warn!("k={k} exceeds the smallest year vocabulary ({smallest_vocab} words); neighbor lists were truncated");
        }
        Ok((out, ridge_rows))
    }

    /// Ranks paragraphs in each extreme mode with the first run's full-corpus model.
    pub fn extremes(&self) -> Result<ExtremesReport> {
        let cfg = &self.config;
        let ex = &cfg.extremes;
        let cache = self.load_cache()?;
        let paragraphs: Vec<Paragraph> = cache.into_iter().filter(|c| c.retained).map(|c| c.paragraph).collect();
        if paragraphs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let model = self.load_model(&Layout::full_model(0))?;
        let group = self
            .groups
            .iter()
            .find(|g| g.name == ex.group)
            .ok_or_else(|| Error::Config(format!("unknown extremes.group {:?}", ex.group)))?;
        let (valence, dominance) = self.vad(MeasureKind::NeighborValence)?;
        let query = aggregate_label_vector(&model, &group.members)?;
        let neighbors: Vec<String> = nearest_neighbors(&model, &query, ex.k, &self.exclusions(group))?
            .into_iter()
            .map(|n| n.word)
            .collect();
        let v_s = subset_lexicon(&valence, &neighbors);
        let d_s = subset_lexicon(&dominance, &neighbors);
        let filter = ExtremeFilter {
            min_words: ex.min_words,
            max_words: ex.max_words,
            required_labels: ex.required_labels.clone(),
        };
        let tokens: Vec<Vec<String>> = paragraphs.iter().map(|p| p.tokens.clone()).collect();
        let tfidf = TfIdf::fit(&tokens);
        let embeddings = paragraph_embeddings(&model, &tokens, &tfidf)?;
        let disgust = concept_vector(
            &model,
            "disgust",
            ConceptMembers::Stems(&self.concept("disgust", &cfg.concepts.disgust, MeasureKind::DisgustDistance)?),
        )?;
        let vermin = concept_vector(
            &model,
            "vermin",
            ConceptMembers::Stems(&self.concept("vermin", &cfg.concepts.vermin, MeasureKind::VerminDistance)?),
        )?;

        let mut modes = BTreeMap::new();
        for mode in ExtremeMode::ALL {
            let scorer = match mode {
                ExtremeMode::NeighborValence => ExtremeScorer::SubsetLexicon(&v_s),
                ExtremeMode::NeighborDominance => ExtremeScorer::SubsetLexicon(&d_s),
                ExtremeMode::DisgustCosine => ExtremeScorer::Concept {
                    embeddings: &embeddings,
                    concept: &disgust.vector,
                },
                ExtremeMode::VerminCosine => ExtremeScorer::Concept {
                    embeddings: &embeddings,
                    concept: &vermin.vector,
                },
            };
            let ranked = rank_extreme_paragraphs(&paragraphs, scorer, &filter)?;
            if ranked.len() < 2 * ex.top {
                log::warn!(
                    "{}: only {} paragraphs qualify, fewer than {}",
                    mode.name(),
                    ranked.len(),
                    2 * ex.top
                );
            }
            let entry = |rank: usize, r: &RankedParagraph| {
                let p = &paragraphs[r.index];
                ExtremeParagraph {
                    rank,
                    id: r.id.clone(),
                    year: r.year,
                    score: r.score,
                    words: p.tokens.len(),
                    text: p.raw_text.clone(),
                }
            };
            let n_high = ex.top.min(ranked.len());
            let n_low = ex.top.min(ranked.len() - n_high);
            let highest = ranked[..n_high].iter().enumerate().map(|(i, r)| entry(i + 1, r)).collect();
            let lowest = ranked
                .iter()
                .rev()
                .take(n_low)
                .enumerate()
                .map(|(i, r)| entry(i + 1, r))
                .collect();
            modes.insert(
                mode.name().to_string(),
                ExtremeList {
                    qualifying: ranked.len(),
                    highest,
                    lowest,
                },
            );
        }
        let report = ExtremesReport {
            group: group.name.clone(),
            k: ex.k,
            neighbors,
            valence_subset: v_s.len(),
            dominance_subset: d_s.len(),
            modes,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_file(&self.layout.path(Layout::EXTREMES), text)?;
        Manifest::replace_step(
            self.out(),
            "extremes",
            [(Layout::EXTREMES.to_string(), ManifestEntry::new("extremes", "json"))].into(),
        )?;
        Ok(report)
    }

    /// Draws one figure per measure and writes the trend and pairwise tests.
    pub fn report(&self) -> Result<Vec<StatsRow>> {
        let path = self.layout.path(Layout::SERIES);
        require(&path, "measure series", "measure")?;
        let rows: Vec<SeriesRow> = read_csv(&path)?;
        let mut by_measure: BTreeMap<&str, Vec<&SeriesRow>> = BTreeMap::new();
        for r in &rows {
            by_measure.entry(r.measure.as_str()).or_default().push(r);
        }
        let rc = &self.config.report;
        let mut entries = BTreeMap::new();
        let mut stats = Vec::new();
        for (measure, rows) in &by_measure {
            let embedding = !rows.iter().any(|r| r.granularity == "interval");
            let plotted = if embedding { "year" } else { "interval" };
            let mut chart = Chart {
                title: measure.replace('_', " "),
                x_label: "year".into(),
                y_label: measure.to_string(),
                source: Layout::SERIES.into(),
                series: Vec::new(),
            };
            let yearly = self.by_label(rows, "year");
            for g in &self.groups {
                let Some(points) = self.by_label(rows, plotted).remove(g.name.as_str()) else {
                    continue;
                };
                let chart_points: Vec<ChartPoint> = points
                    .iter()
                    .map(|r| ChartPoint {
                        x: (r.start + r.end) as f64 / 2.0,
                        y: r.value,
                        low: r.ci_low,
                        high: r.ci_high,
                    })
                    .collect();
                let smooth = if embedding {
                    let x: Vec<f64> = chart_points.iter().map(|p| p.x).collect();
                    let y: Vec<f64> = chart_points.iter().map(|p| p.y).collect();
                    // short series cannot be smoothed at this span; plot them raw
                    lowess(&x, &y, rc.lowess_frac, rc.lowess_iterations)
                        .map_err(|e| log::info!("{measure}/{}: no smoothed curve: {e}", g.name))
                        .ok()
                } else {
                    None
                };
                chart.series.push(ChartSeries {
                    label: g.name.clone(),
                    points: chart_points,
                    smooth,
                });
            }
            let rel = Layout::figure(measure);
            write_file(&self.layout.path(&rel), render_svg(&chart))?;
            let mut e = ManifestEntry::new("report", "figure");
            e.source = Some(Layout::SERIES.into());
            entries.insert(rel, e);

            for g in &self.groups {
                let Some(points) = yearly.get(g.name.as_str()) else { continue };
                let years: Vec<i32> = points.iter().map(|r| r.start).collect();
                let values: Vec<f64> = points.iter().map(|r| r.value).collect();
                for &(from, to) in &rc.trend_ranges {
                    let inside = years.iter().filter(|y| (from..=to).contains(*y)).count();
                    if inside < 3 {
                        continue;
                    }
                    match linear_trend_range(&years, &values, from, to) {
                        Ok(t) => stats.push(StatsRow {
                            test: "trend".into(),
                            measure: measure.to_string(),
                            label: g.name.clone(),
                            other: String::new(),
                            from: t.range.0,
                            to: t.range.1,
                            statistic: t.slope,
                            std_error: Some(t.slope_se),
                            p_value: t.p_value,
                            n: t.n,
                            method: "ols".into(),
                        }),
                        Err(e) => log::warn!("{measure}/{}: trend {from}-{to}: {e}", g.name),
                    }
                }
            }
            for (i, a) in self.groups.iter().enumerate() {
                for b in &self.groups[i + 1..] {
                    let (Some(pa), Some(pb)) = (yearly.get(a.name.as_str()), yearly.get(b.name.as_str())) else {
                        continue;
                    };
                    let mb: BTreeMap<i32, f64> = pb.iter().map(|r| (r.start, r.value)).collect();
                    let (mut x, mut y, mut years) = (Vec::new(), Vec::new(), Vec::new());
                    for r in pa {
                        if let Some(v) = mb.get(&r.start) {
                            x.push(r.value);
                            y.push(*v);
                            years.push(r.start);
                        }
                    }
                    if x.len() < rc.min_paired_years {
                        continue;
                    }
                    match wilcoxon_signed_rank(&x, &y) {
                        Ok(w) => stats.push(StatsRow {
                            test: "wilcoxon".into(),
                            measure: measure.to_string(),
                            label: a.name.clone(),
                            other: b.name.clone(),
                            from: years[0],
                            to: years[years.len() - 1],
                            statistic: w.statistic,
                            std_error: None,
                            p_value: w.p_value,
                            n: w.n,
                            method: w.method.name().into(),
                        }),
                        Err(e) => log::warn!("{measure}: {} vs {}: {e}", a.name, b.name),
                    }
                }
            }
        }
        write_csv(&self.layout.path(Layout::STATS), &stats)?;
        entries.insert(Layout::STATS.into(), ManifestEntry::new("report", "csv"));
        Manifest::replace_step(self.out(), "report", entries)?;
        Ok(stats)
    }

    fn by_label<'a>(&self, rows: &[&'a SeriesRow], granularity: &str) -> HashMap<&'a str, Vec<&'a SeriesRow>> {
        let mut out: HashMap<&str, Vec<&SeriesRow>> = HashMap::new();
        for r in rows.iter().filter(|r| r.granularity == granularity) {
            out.entry(r.label.as_str()).or_default().push(r);
        }
        for v in out.values_mut() {
            v.sort_by_key(|r| r.start);
        }
        out
    }
}
