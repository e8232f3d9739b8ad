use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::{dot, normalize, EmbeddingModel};
use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::lexicons::StemDictionary;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub word: String,
    pub index: usize,
    pub cosine: f64,
}

fn by_rank(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top-`k` words by cosine similarity to `query` (assumed unit length),
/// descending, ties broken by vocabulary index. Asking for more words than
/// are available returns all of them.
pub fn nearest_neighbors<S: AsRef<str>>(
    model: &EmbeddingModel,
    query: &[f64],
    k: usize,
    exclude: &[S],
) -> Result<Vec<Neighbor>> {
    model.require_postprocessed()?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if query.len() != model.dim() {
        return Err(Error::invalid(format!(
            "query has dimension {}, model has {}",
            query.len(),
            model.dim()
        )));
    }
    let excluded: HashSet<usize> = exclude
        .iter()
        .filter_map(|w| model.index_of(w.as_ref()))
        .collect();
    let mut scored: Vec<(usize, f64)> = (0..model.len())
        .filter(|i| !excluded.contains(i))
        .map(|i| (i, dot(model.row(i), query)))
        .collect();
    if k > scored.len() {
        log::debug!(
            "asked for {k} neighbors but only {} words are available",
            scored.len()
        );
    } else if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_rank);
    Ok(scored
        .into_iter()
        .map(|(index, cosine)| Neighbor {
            word: model.word(index).to_string(),
            index,
            cosine,
        })
        .collect())
}

/// Frequency-weighted centroid of the given rows, normalized. Rows are
/// accumulated in vocabulary order so the result does not depend on the
/// order members were listed in.
fn weighted_centroid(model: &EmbeddingModel, indices: &BTreeSet<usize>) -> Result<Vec<f64>> {
    let mut acc = vec![0.0f64; model.dim()];
    let mut total = 0.0f64;
    for &i in indices {
        let c = model.counts()[i] as f64;
        for (a, x) in acc.iter_mut().zip(model.row(i)) {
            *a += c * x;
        }
        total += c;
    }
    if total > 0.0 {
        for a in &mut acc {
            *a /= total;
        }
    }
    normalize(&mut acc)?;
    Ok(acc)
}

fn label_indices(model: &EmbeddingModel, label: &LabelSet) -> BTreeSet<usize> {
    label
        .surface_forms
        .iter()
        .filter_map(|f| model.index_of(f))
        .collect()
}

/// Frequency-weighted centroid of a label's in-vocabulary surface forms.
pub fn label_vector(model: &EmbeddingModel, label: &LabelSet) -> Result<Vec<f64>> {
    model.require_postprocessed()?;
    let idx = label_indices(model, label);
    if idx.is_empty() {
        return Err(Error::LabelNotInVocabulary(label.canonical.clone()));
    }
    weighted_centroid(model, &idx)
}

/// Weighted centroid over every surface form of every label.
pub fn aggregate_label_vector(model: &EmbeddingModel, labels: &[LabelSet]) -> Result<Vec<f64>> {
    model.require_postprocessed()?;
    let idx: BTreeSet<usize> = labels.iter().flat_map(|l| label_indices(model, l)).collect();
    if idx.is_empty() {
        let names: Vec<&str> = labels.iter().map(|l| l.canonical.as_str()).collect();
        return Err(Error::LabelNotInVocabulary(names.join(", ")));
    }
    weighted_centroid(model, &idx)
}

/// Members of a concept: a stem dictionary expanded against the model's
/// vocabulary, or a literal word list.
#[derive(Debug, Clone, Copy)]
pub enum ConceptMembers<'a> {
    Stems(&'a StemDictionary),
    Words(&'a [String]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptVector {
    pub name: String,
    pub vector: Vec<f64>,
    /// Realized members with their corpus counts, in vocabulary order.
    pub member_words: Vec<(String, u64)>,
}

pub fn concept_vector(
    model: &EmbeddingModel,
    name: &str,
    members: ConceptMembers<'_>,
) -> Result<ConceptVector> {
    model.require_postprocessed()?;
    let idx: BTreeSet<usize> = match members {
        ConceptMembers::Stems(dict) => dict
            .expand(model.words().iter().map(String::as_str))
            .iter()
            .filter_map(|w| model.index_of(w))
            .collect(),
        ConceptMembers::Words(words) => words.iter().filter_map(|w| model.index_of(w)).collect(),
    };
    if idx.is_empty() {
        return Err(Error::EmptyConcept(name.to_string()));
    }
    let vector = weighted_centroid(model, &idx)?;
    Ok(ConceptVector {
        name: name.to_string(),
        vector,
        member_words: idx
            .iter()
            .map(|&i| (model.word(i).to_string(), model.counts()[i]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EmbeddingModel {
        let words = ["gay", "gays", "rat", "rats", "x"].map(String::from).to_vec();
        let input = vec![1.0, 0.1, 0.9, 0.4, -1.0, 0.2, -0.8, -0.3, 0.1, 1.0];
        EmbeddingModel::from_parts(2, words, vec![90, 10, 5, 5, 1], input.clone(), input)
            .unwrap()
            .postprocessed()
            .unwrap()
    }

    #[test]
    fn label_vector_weights_by_count() {
        let m = model();
        let label = LabelSet::with_plural("gay");
        let v = label_vector(&m, &label).unwrap();
        let (u, w) = (m.vector("gay").unwrap(), m.vector("gays").unwrap());
        let mut expect = vec![0.9 * u[0] + 0.1 * w[0], 0.9 * u[1] + 0.1 * w[1]];
        normalize(&mut expect).unwrap();
        assert!((v[0] - expect[0]).abs() < 1e-12 && (v[1] - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn missing_label_errors() {
        let m = model();
        let label = LabelSet::with_plural("lesbian");
        assert!(matches!(label_vector(&m, &label), Err(Error::LabelNotInVocabulary(l)) if l == "lesbian"));
    }

    #[test]
    fn neighbors_self_first() {
        let m = model();
        let q = m.vector("rat").unwrap().to_vec();
        let none: [&str; 0] = [];
        let n = nearest_neighbors(&m, &q, 2, &none).unwrap();
        assert_eq!(n[0].word, "rat");
        assert!((n[0].cosine - 1.0).abs() < 1e-9);
        let n = nearest_neighbors(&m, &q, 10, &["rat"]).unwrap();
        assert_eq!(n.len(), 4);
        assert_eq!(n[0].word, "rats");
    }

    #[test]
    fn concept_equal_counts() {
        let m = model();
        let words = vec!["rat".to_string(), "rats".to_string(), "absent".to_string()];
        let c = concept_vector(&m, "vermin", ConceptMembers::Words(&words)).unwrap();
        let (u, w) = (m.vector("rat").unwrap(), m.vector("rats").unwrap());
        let mut expect = vec![(u[0] + w[0]) / 2.0, (u[1] + w[1]) / 2.0];
        normalize(&mut expect).unwrap();
        assert!((c.vector[0] - expect[0]).abs() < 1e-12);
        assert_eq!(c.member_words, vec![("rat".into(), 5), ("rats".into(), 5)]);
        let empty = vec!["zzz".to_string()];
        assert!(concept_vector(&m, "none", ConceptMembers::Words(&empty)).is_err());
    }
}
