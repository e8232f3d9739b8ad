//! Skip-gram word embeddings: training (full corpus and warm-started per
//! year), post-processing, persistence, and vector queries.

mod io;
mod paragraph;
mod query;
mod train;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use io::{read_model, read_model_from, write_model, write_model_to, write_text, MAGIC};
pub use paragraph::{
    first_principal_component, paragraph_embeddings, remove_component, ParagraphEmbeddings, TfIdf,
};
pub use query::{
    aggregate_label_vector, concept_vector, label_vector, nearest_neighbors, ConceptMembers,
    ConceptVector, Neighbor,
};
pub use train::{
    derive_seed, run_seed, train_diachronic, train_diachronic_with, train_skipgram, train_warm_start,
    DiachronicModels, ModelKey, TrainConfig,
};

/// Diagnostics recorded when a model is post-processed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostprocessReport {
    /// Largest absolute column mean of the centered, not yet normalized matrix.
    pub max_abs_centered_column_mean: f64,
    /// Largest `| ||row|| - 1 |` after normalization.
    pub max_row_norm_deviation: f64,
}

/// A trained embedding space.
///
/// Raw input and context matrices are kept in `f32` exactly as training left
/// them (warm-starting continues from these). Post-processing produces a
/// separate zero-centered, row-normalized `f64` matrix used by every
/// measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u64>,
    input: Vec<f32>,
    context: Vec<f32>,
    unit: Option<Vec<f64>>,
    epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    /// Assembles a model from raw parts. Matrices are row-major
    /// `words.len() x dim`.
    pub fn from_parts(
        dim: usize,
        words: Vec<String>,
        counts: Vec<u64>,
        input: Vec<f32>,
        context: Vec<f32>,
    ) -> Result<Self> {
        let n = words.len();
        if dim == 0 || counts.len() != n || input.len() != n * dim || context.len() != n * dim {
            return Err(Error::invalid(format!(
                "inconsistent model parts: dim {dim}, {n} words, {} counts, {} input, {} context",
                counts.len(),
                input.len(),
                context.len()
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(EmbeddingModel {
            dim,
            words,
            index,
            counts,
            input,
            context,
            unit: None,
            epoch_losses: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.index_of(word).map(|i| self.counts[i])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn raw_input(&self, idx: usize) -> &[f32] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn raw_context(&self, idx: usize) -> &[f32] {
        &self.context[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn raw_input_matrix(&self) -> &[f32] {
        &self.input
    }

    pub fn raw_context_matrix(&self) -> &[f32] {
        &self.context
    }

    /// Mean negative-sampling loss per training pair, one entry per epoch.
    /// Empty unless training ran with `compute_loss`.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub(crate) fn set_epoch_losses(&mut self, losses: Vec<f64>) {
        self.epoch_losses = losses;
    }

    pub fn is_postprocessed(&self) -> bool {
        self.unit.is_some()
    }

    /// Post-processed vector of row `idx`.
    ///
    /// Panics if the model has not been post-processed.
    pub fn row(&self, idx: usize) -> &[f64] {
        let unit = self.unit.as_ref().expect("model is not postprocessed");
        &unit[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Post-processed vector of `word`, if the model is post-processed and
    /// the word is in the vocabulary.
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        let idx = self.index_of(word)?;
        self.unit.as_ref()?;
        Some(self.row(idx))
    }

    pub(crate) fn require_postprocessed(&self) -> Result<()> {
        if self.is_postprocessed() {
            Ok(())
        } else {
            Err(Error::NotPostprocessed)
        }
    }

    /// Zero-centers the input vectors, then L2-normalizes every row.
    pub fn postprocess(&mut self) -> Result<PostprocessReport> {
        if self.unit.is_some() {
            return Err(Error::AlreadyPostprocessed);
        }
        let (n, dim) = (self.len(), self.dim);
        if n == 0 {
            return Err(Error::invalid("cannot postprocess an empty model"));
        }
        let mut mean = vec![0.0f64; dim];
        for row in self.input.chunks_exact(dim) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += f64::from(x);
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let mut unit: Vec<f64> = self
            .input
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(&mean).map(|(&x, m)| f64::from(x) - m))
            .collect();

        let mut col_sum = vec![0.0f64; dim];
        for row in unit.chunks_exact(dim) {
            for (s, x) in col_sum.iter_mut().zip(row) {
                *s += x;
            }
        }
        let max_abs_centered_column_mean = col_sum
            .iter()
            .map(|s| (s / n as f64).abs())
            .fold(0.0, f64::max);

        let scale = self
            .input
            .chunks_exact(dim)
            .map(|r| r.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let mut max_row_norm_deviation = 0.0f64;
        for (i, row) in unit.chunks_exact_mut(dim).enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > scale * 1e-9) {
                return Err(Error::DegenerateVector(self.words[i].clone()));
            }
            for x in row.iter_mut() {
                *x /= norm;
            }
            let after = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            max_row_norm_deviation = max_row_norm_deviation.max((after - 1.0).abs());
        }
        self.unit = Some(unit);
        Ok(PostprocessReport {
            max_abs_centered_column_mean,
            max_row_norm_deviation,
        })
    }

    /// Consuming variant of [`EmbeddingModel::postprocess`].
    pub fn postprocessed(mut self) -> Result<Self> {
        self.postprocess()?;
        Ok(self)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid("cannot normalize a zero vector"));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: &[[f32; 2]]) -> EmbeddingModel {
        let words = (0..rows.len()).map(|i| format!("w{i}")).collect();
        let input: Vec<f32> = rows.iter().flatten().copied().collect();
        EmbeddingModel::from_parts(2, words, vec![1; rows.len()], input.clone(), input).unwrap()
    }

    #[test]
    fn postprocess_by_hand() {
        let mut m = model(&[[1.0, 0.0], [3.0, 0.0]]);
        let report = m.postprocess().unwrap();
        assert_eq!(m.row(0), &[-1.0, 0.0]);
        assert_eq!(m.row(1), &[1.0, 0.0]);
        assert!(report.max_abs_centered_column_mean <= 1e-9);
        assert!(report.max_row_norm_deviation <= 1e-9);
        // raw vectors untouched
        assert_eq!(m.raw_input(1), &[3.0, 0.0]);
    }

    #[test]
    fn double_postprocess_fails() {
        let mut m = model(&[[1.0, 0.0], [3.0, 0.0]]);
        m.postprocess().unwrap();
        assert!(matches!(m.postprocess(), Err(Error::AlreadyPostprocessed)));
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let mut m = model(&[[0.3, 0.1], [0.3, 0.1], [0.3, 0.1]]);
        assert!(matches!(m.postprocess(), Err(Error::DegenerateVector(_))));
    }
}
