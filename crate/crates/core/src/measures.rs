//! Dehumanization measures: lexicon averages over paragraphs, connotation
//! frames over extracted tuples, and embedding-space associations.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, Paragraph};
use crate::embeddings::{dot, nearest_neighbors, ConceptVector, EmbeddingModel, ParagraphEmbeddings};
use crate::error::{Error, Result};
use crate::lexicons::{AffectLexicon, Agency, AgencyLexicon, PerspectiveLexicon};
use crate::stats::{mean_ci, CiMethod};
use crate::syntax::{np_contains_label, SvPair, SvoTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    ParagraphValence,
    Perspective,
    Agency,
    NeighborValence,
    NeighborDominance,
    DisgustDistance,
    VerminDistance,
    InducedValence,
    InducedDominance,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 9] = [
        MeasureKind::ParagraphValence,
        MeasureKind::Perspective,
        MeasureKind::Agency,
        MeasureKind::NeighborValence,
        MeasureKind::NeighborDominance,
        MeasureKind::DisgustDistance,
        MeasureKind::VerminDistance,
        MeasureKind::InducedValence,
        MeasureKind::InducedDominance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::ParagraphValence => "paragraph_valence",
            MeasureKind::Perspective => "perspective",
            MeasureKind::Agency => "agency",
            MeasureKind::NeighborValence => "neighbor_valence",
            MeasureKind::NeighborDominance => "neighbor_dominance",
            MeasureKind::DisgustDistance => "disgust_distance",
            MeasureKind::VerminDistance => "vermin_distance",
            MeasureKind::InducedValence => "induced_valence",
            MeasureKind::InducedDominance => "induced_dominance",
        }
    }

    pub fn from_name(name: &str) -> Option<MeasureKind> {
        MeasureKind::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Measures computed from embedding models, one value per run.
    pub fn is_embedding(self) -> bool {
        !matches!(
            self,
            MeasureKind::ParagraphValence | MeasureKind::Perspective | MeasureKind::Agency
        )
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub value: f64,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub measure: MeasureKind,
    pub label: String,
    pub points: Vec<SeriesPoint>,
}

impl MeasureSeries {
    /// One point per year: the mean of that year's observations with a
    /// confidence interval. A single observation gives a zero-width interval.
    pub fn from_observations(
        measure: MeasureKind,
        label: &str,
        observations: &BTreeMap<i32, Vec<f64>>,
        level: f64,
        method: CiMethod,
    ) -> Result<Self> {
        let mut points = Vec::new();
        for (&year, values) in observations {
            let point = match values.len() {
                0 => continue,
                1 => SeriesPoint {
                    year,
                    value: values[0],
                    n: 1,
                    ci_low: values[0],
                    ci_high: values[0],
                },
                n => {
                    let ci = mean_ci(values, level, method)?;
                    SeriesPoint {
                        year,
                        value: ci.mean,
                        n,
                        ci_low: ci.low,
                        ci_high: ci.high,
                    }
                }
            };
            points.push(point);
        }
        Ok(MeasureSeries {
            measure,
            label: label.to_string(),
            points,
        })
    }

    pub fn years(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.year).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Mean lexicon score over the paragraph's tokens found in the lexicon,
/// looking up the lemma when the surface token is absent.
pub fn paragraph_affect<S: AsRef<str>>(tokens: &[S], lemmas: &[S], lexicon: &AffectLexicon) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        let score = lexicon
            .get(t.as_ref())
            .or_else(|| lemmas.get(i).and_then(|l| lexicon.get(l.as_ref())));
        if let Some(s) = score {
            sum += s;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-(year, label) observations plus coverage counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observations {
    pub values: BTreeMap<(i32, String), Vec<f64>>,
    /// Tuples mentioning a label whose verb is not in the lexicon.
    pub unlexiconed: usize,
    /// Tuples mentioning a label but carrying no year.
    pub undated: usize,
}

impl Observations {
    /// Observations of one label keyed by year.
    pub fn for_label(&self, label: &str) -> BTreeMap<i32, Vec<f64>> {
        self.values
            .iter()
            .filter(|((_, l), _)| l == label)
            .map(|((y, _), v)| (*y, v.clone()))
            .collect()
    }

    pub fn mean(&self, year: i32, label: &str) -> Option<f64> {
        let v = self.values.get(&(year, label.to_string()))?;
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Writer perspective toward group labels. A label in the subject NP
/// contributes the verb's subject score, in the object NP its object score,
/// and both when it appears in both. With `flip_negated`, scores of negated
/// verbs change sign.
pub fn perspective_score(
    tuples: &[SvoTuple],
    lexicon: &PerspectiveLexicon,
    labels: &[LabelSet],
    flip_negated: bool,
) -> Observations {
    let mut out = Observations::default();
    for t in tuples {
        let in_subject = np_contains_label(&t.subject, labels);
        let in_object = t
            .object
            .as_ref()
            .map(|o| np_contains_label(o, labels))
            .unwrap_or_default();
        if in_subject.is_empty() && in_object.is_empty() {
            continue;
        }
        let Some(p) = lexicon.get(&t.verb) else {
            out.unlexiconed += 1;
            continue;
        };
        let Some(year) = t.year else {
            out.undated += 1;
            continue;
        };
        let sign = if flip_negated && t.negated { -1.0 } else { 1.0 };
        for l in in_subject {
            out.values
                .entry((year, l.canonical.clone()))
                .or_default()
                .push(sign * p.subject);
        }
        for l in in_object {
            out.values
                .entry((year, l.canonical.clone()))
                .or_default()
                .push(sign * p.object);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgencyCount {
    pub positive: usize,
    pub total: usize,
}

impl AgencyCount {
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.positive as f64 / self.total as f64)
    }
}

/// Counts of labelled subjects whose verb has positive agency, among those
/// with a lexicon verb. Pairs without a year are ignored.
pub fn agency_fraction(
    pairs: &[SvPair],
    lexicon: &AgencyLexicon,
    labels: &[LabelSet],
) -> BTreeMap<(i32, String), AgencyCount> {
    let mut out: BTreeMap<(i32, String), AgencyCount> = BTreeMap::new();
    for p in pairs {
        let (Some(year), Some(agency)) = (p.year, lexicon.get(&p.verb)) else {
            continue;
        };
        for l in np_contains_label(&p.subject, labels) {
            let c = out.entry((year, l.canonical.clone())).or_default();
            c.total += 1;
            if agency == Agency::Positive {
                c.positive += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborAffect {
    pub value: f64,
    /// Neighbors found in the lexicon.
    pub n: usize,
}

/// Mean lexicon score of the `k` nearest neighbors of `query` that appear in
/// the lexicon.
pub fn neighbor_affect<S: AsRef<str>>(
    model: &EmbeddingModel,
    query: &[f64],
    k: usize,
    lexicon: &AffectLexicon,
    exclude: &[S],
) -> Result<NeighborAffect> {
    neighbor_affect_multi(model, query, &[k], lexicon, exclude)?
        .pop()
        .flatten()
        .ok_or(Error::NoLexiconNeighbors)
}

/// [`neighbor_affect`] for several `k` from one ranking; each top-`k` list
/// is a prefix of the longest. `None` where no neighbor is in the lexicon.
pub fn neighbor_affect_multi<S: AsRef<str>>(
    model: &EmbeddingModel,
    query: &[f64],
    ks: &[usize],
    lexicon: &AffectLexicon,
    exclude: &[S],
) -> Result<Vec<Option<NeighborAffect>>> {
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    if ks.contains(&0) {
        return Err(Error::invalid("k must be at least 1"));
    }
    let neighbors = nearest_neighbors(model, query, k_max, exclude)?;
    let scores: Vec<Option<f64>> = neighbors.iter().map(|n| lexicon.get(&n.word)).collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let found: Vec<f64> = scores[..k.min(scores.len())].iter().flatten().copied().collect();
            (!found.is_empty()).then(|| NeighborAffect {
                value: found.iter().sum::<f64>() / found.len() as f64,
                n: found.len(),
            })
        })
        .collect())
}

/// Cosine distance between unit vectors, clamped to `[0, 2]`.
pub fn concept_distance(label_vec: &[f64], concept: &ConceptVector) -> f64 {
    cosine_distance(label_vec, &concept.vector)
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub train_pearson: f64,
    pub train_r2: f64,
    pub test_pearson: f64,
    pub test_r2: f64,
    pub n_train: usize,
    pub n_test: usize,
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }
}

/// Ridge regression on centered features: solves
/// `(XcᵀXc + αI) w = Xcᵀ(y − ȳ)` and sets the intercept to `ȳ − x̄ᵀw`.
/// `x` is row-major with `dim` columns.
pub fn ridge_solve(x: &[f64], dim: usize, y: &[f64], alpha: f64) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if dim == 0 || x.len() != n * dim {
        return Err(Error::invalid("feature matrix does not match targets"));
    }
    if n == 0 {
        return Err(Error::invalid("no training rows"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha must be non-negative"));
    }
    let xm = DMatrix::from_row_slice(n, dim, x);
    let mean_x = xm.row_mean();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut xc = xm.clone();
    for mut row in xc.row_iter_mut() {
        row -= &mean_x;
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - mean_y));
    let mut a = xc.transpose() * &xc;
    for i in 0..dim {
        a[(i, i)] += alpha;
    }
    let b = xc.transpose() * yc;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("ridge system with alpha {alpha} is not positive definite")))?;
    let w = chol.solve(&b);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("ridge weights are not finite".into()));
    }
    let intercept = mean_y - mean_x.transpose().dot(&w);
    Ok((w.iter().copied().collect(), intercept))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        f64::NAN
    } else {
        cov / (va * vb).sqrt()
    }
}

fn r_squared(y: &[f64], pred: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        f64::NAN
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Fits lexicon scores from word vectors with a seeded 85/15 train/test
/// split of the lexicon words present in the model.
pub fn fit_ridge(model: &EmbeddingModel, lexicon: &AffectLexicon, alpha: f64, split_seed: u64) -> Result<RidgeModel> {
    model.require_postprocessed()?;
    let dim = model.dim();
    let mut rows: Vec<(usize, f64)> = lexicon
        .sorted_entries()
        .into_iter()
        .filter_map(|(w, s)| model.index_of(w).map(|i| (i, s)))
        .collect();
    if rows.len() < dim + 1 {
        return Err(Error::invalid(format!(
            "ridge needs at least {} lexicon words in the vocabulary, found {}",
            dim + 1,
            rows.len()
        )));
    }
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_test = ((rows.len() as f64) * 0.15).round().max(1.0) as usize;
    let (test, train) = rows.split_at(n_test);
    let gather = |set: &[(usize, f64)]| -> (Vec<f64>, Vec<f64>) {
        (
            set.iter().flat_map(|&(i, _)| model.row(i).iter().copied()).collect(),
            set.iter().map(|&(_, s)| s).collect(),
        )
    };
    let (x_train, y_train) = gather(train);
    let (x_test, y_test) = gather(test);
    let (weights, intercept) = ridge_solve(&x_train, dim, &y_train, alpha)?;
    let predict = |x: &[f64]| -> Vec<f64> {
        x.chunks_exact(dim)
            .map(|r| intercept + dot(&weights, r))
            .collect()
    };
    let (p_train, p_test) = (predict(&x_train), predict(&x_test));
    Ok(RidgeModel {
        train_pearson: pearson(&y_train, &p_train),
        train_r2: r_squared(&y_train, &p_train),
        test_pearson: pearson(&y_test, &p_test),
        test_r2: r_squared(&y_test, &p_test),
        n_train: train.len(),
        n_test,
        weights,
        intercept,
        alpha,
    })
}

pub fn induced_affect(ridge: &RidgeModel, label_vec: &[f64]) -> f64 {
    ridge.predict(label_vec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeMode {
    NeighborValence,
    NeighborDominance,
    DisgustCosine,
    VerminCosine,
}

impl ExtremeMode {
    pub const ALL: [ExtremeMode; 4] = [
        ExtremeMode::NeighborValence,
        ExtremeMode::NeighborDominance,
        ExtremeMode::DisgustCosine,
        ExtremeMode::VerminCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExtremeMode::NeighborValence => "neighbor_valence",
            ExtremeMode::NeighborDominance => "neighbor_dominance",
            ExtremeMode::DisgustCosine => "disgust_cosine",
            ExtremeMode::VerminCosine => "vermin_cosine",
        }
    }
}

/// How candidate paragraphs are scored.
#[derive(Debug, Clone, Copy)]
pub enum ExtremeScorer<'a> {
    /// Sum of subset-lexicon scores over all tokens divided by token count.
    SubsetLexicon(&'a AffectLexicon),
    /// Cosine between each paragraph embedding and a unit concept vector.
    Concept {
        embeddings: &'a ParagraphEmbeddings,
        concept: &'a [f64],
    },
}

#[derive(Debug, Clone)]
pub struct ExtremeFilter {
    pub min_words: usize,
    pub max_words: usize,
    /// A paragraph must mention at least one of these; empty disables the check.
    pub required_labels: Vec<LabelSet>,
}

impl Default for ExtremeFilter {
    fn default() -> Self {
        ExtremeFilter {
            min_words: 15,
            max_words: 75,
            required_labels: vec![LabelSet::with_plural("gay"), LabelSet::with_plural("homosexual")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedParagraph {
    pub index: usize,
    pub id: String,
    pub year: i32,
    pub score: f64,
}

/// Lexicon restricted to `words`, the subset used for paragraph ranking.
pub fn subset_lexicon<S: AsRef<str>>(lexicon: &AffectLexicon, words: &[S]) -> AffectLexicon {
    lexicon.subset(words.iter().map(|w| w.as_ref()))
}

/// Scores the paragraphs passing `filter` and returns them by descending
/// score, ties by position. For concept scoring, `paragraphs` must be the
/// collection the embeddings were built from.
pub fn rank_extreme_paragraphs(
    paragraphs: &[Paragraph],
    scorer: ExtremeScorer<'_>,
    filter: &ExtremeFilter,
) -> Result<Vec<RankedParagraph>> {
    if let ExtremeScorer::Concept { embeddings, concept } = scorer {
        if embeddings.len() != paragraphs.len() {
            return Err(Error::invalid("paragraph embeddings do not match paragraphs"));
        }
        if concept.len() != embeddings.dim {
            return Err(Error::invalid("concept dimension does not match embeddings"));
        }
    }
    let mut ranked = Vec::new();
    for (i, p) in paragraphs.iter().enumerate() {
        let len = p.tokens.len();
        if len < filter.min_words || len > filter.max_words {
            continue;
        }
        if !filter.required_labels.is_empty()
            && !filter.required_labels.iter().any(|l| l.matches_any(&p.tokens))
        {
            continue;
        }
        let score = match scorer {
            ExtremeScorer::SubsetLexicon(lex) => {
                p.tokens.iter().filter_map(|t| lex.get(t)).sum::<f64>() / len as f64
            }
            ExtremeScorer::Concept { embeddings, concept } => {
                if embeddings.zero_rows[i] {
                    continue;
                }
                let row = embeddings.row(i);
                let norm = dot(row, row).sqrt();
                if norm == 0.0 {
                    continue;
                }
                dot(row, concept) / norm
            }
        };
        ranked.push(RankedParagraph {
            index: i,
            id: p.id.clone(),
            year: p.year,
            score,
        });
    }
    if ranked.is_empty() {
        return Err(Error::invalid("no paragraph passed the extreme-paragraph filters"));
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::{Dimension, Perspective};

    fn lex(entries: &[(&str, f64)]) -> AffectLexicon {
        AffectLexicon::from_entries(Dimension::Valence, entries.iter().copied()).unwrap()
    }

    #[test]
    fn paragraph_affect_by_hand() {
        let l = lex(&[("love", 0.9), ("war", 0.1), ("family", 0.7)]);
        assert_eq!(paragraph_affect(&["love", "war", "the"], &["love", "war", "the"], &l), Some(0.5));
        assert_eq!(paragraph_affect(&["families"], &["family"], &l), Some(0.7));
        assert_eq!(paragraph_affect(&["zz"], &["zz"], &l), None);
    }

    fn tuple(subject: &[&str], verb: &str, object: Option<&[&str]>) -> SvoTuple {
        SvoTuple {
            subject: subject.iter().map(|s| s.to_string()).collect(),
            verb: verb.into(),
            object: object.map(|o| o.iter().map(|s| s.to_string()).collect()),
            negated: false,
            passive: false,
            paragraph_id: None,
            year: Some(2000),
        }
    }

    #[test]
    fn perspective_roles() {
        let lexicon = PerspectiveLexicon::from_entries([
            ("praise", Perspective { subject: 0.5, object: 0.8 }),
            ("commit", Perspective { subject: -0.5, object: -0.83 }),
        ])
        .unwrap();
        let labels = vec![LabelSet::with_plural("gay"), LabelSet::with_plural("homosexual")];
        let tuples = vec![
            tuple(&["he"], "praise", Some(&["gay", "right", "advocate"])),
            tuple(&["he"], "commit", Some(&["any", "homosexual", "act"])),
            tuple(&["gay", "man"], "zorch", None),
            tuple(&["gay"], "praise", Some(&["gays"])),
        ];
        let obs = perspective_score(&tuples, &lexicon, &labels, false);
        assert_eq!(obs.values[&(2000, "gay".to_string())], vec![0.8, 0.5, 0.8]);
        assert_eq!(obs.values[&(2000, "homosexual".to_string())], vec![-0.83]);
        assert_eq!(obs.unlexiconed, 1);
    }

    #[test]
    fn agency_half() {
        let lexicon = AgencyLexicon::from_entries([("develop", Agency::Positive), ("face", Agency::NonPositive)]).unwrap();
        let labels = vec![LabelSet::with_plural("gay")];
        let pair = |s: &[&str], v: &str| SvPair {
            subject: s.iter().map(|x| x.to_string()).collect(),
            verb: v.into(),
            paragraph_id: None,
            year: Some(1990),
        };
        let pairs = vec![pair(&["gay", "couple"], "develop"), pair(&["gay", "man"], "face"), pair(&["gay"], "zorch")];
        let c = agency_fraction(&pairs, &lexicon, &labels);
        assert_eq!(c[&(1990, "gay".to_string())].fraction(), Some(0.5));
    }

    #[test]
    fn distance_identity_and_orthogonal() {
        let c = ConceptVector {
            name: "c".into(),
            vector: vec![1.0, 0.0],
            member_words: vec![],
        };
        assert_eq!(concept_distance(&[1.0, 0.0], &c), 0.0);
        assert_eq!(concept_distance(&[0.0, 1.0], &c), 1.0);
    }

    #[test]
    fn subset_score_divides_by_length() {
        let l = lex(&[("good", 0.8), ("bad", 0.4)]);
        let p = Paragraph {
            id: "p".into(),
            year: 2000,
            section: String::new(),
            raw_text: String::new(),
            tokens: ["good", "bad", "x", "y"].map(String::from).to_vec(),
            lemmas: vec![],
        };
        let filter = ExtremeFilter {
            min_words: 1,
            max_words: 75,
            required_labels: vec![],
        };
        let r = rank_extreme_paragraphs(&[p], ExtremeScorer::SubsetLexicon(&l), &filter).unwrap();
        assert!((r[0].score - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ridge_zero_weights_at_huge_alpha() {
        let x = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 0.5];
        let y = [1.0, 2.0, 3.0, 2.5];
        let (w, b) = ridge_solve(&x, 2, &y, 1e12).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-9));
        assert!((b - 2.125).abs() < 1e-9);
    }
}
