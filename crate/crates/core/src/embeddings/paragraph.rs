use std::collections::{HashMap, HashSet};

use super::{dot, EmbeddingModel};
use crate::error::{Error, Result};

const PC_TOLERANCE: f64 = 1e-10;
const PC_MAX_ITER: usize = 1000;

/// Document frequencies over a paragraph collection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdf {
    n_docs: usize,
    df: HashMap<String, usize>,
}

impl TfIdf {
    pub fn fit<S: AsRef<str>>(paragraphs: &[Vec<S>]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for p in paragraphs {
            let unique: HashSet<&str> = p.iter().map(|w| w.as_ref()).collect();
            for w in unique {
                *df.entry(w.to_string()).or_default() += 1;
            }
        }
        TfIdf {
            n_docs: paragraphs.len(),
            df,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn doc_freq(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// `ln(N / (1 + df)) + 1`
    pub fn idf(&self, word: &str) -> f64 {
        (self.n_docs as f64 / (1.0 + self.doc_freq(word) as f64)).ln() + 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphEmbeddings {
    pub dim: usize,
    /// tf-idf weighted means before the first component is removed.
    pub weighted: Vec<f64>,
    /// Final rows, row-major.
    pub rows: Vec<f64>,
    /// Paragraphs with no in-vocabulary word; their rows are zero.
    pub zero_rows: Vec<bool>,
    pub component: Vec<f64>,
}

impl ParagraphEmbeddings {
    pub fn len(&self) -> usize {
        self.zero_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero_rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

/// tf-idf weighted mean of each paragraph's in-vocabulary word vectors, with
/// the first principal component of the non-zero rows projected out.
pub fn paragraph_embeddings<S: AsRef<str>>(
    model: &EmbeddingModel,
    paragraphs: &[Vec<S>],
    tfidf: &TfIdf,
) -> Result<ParagraphEmbeddings> {
    model.require_postprocessed()?;
    let dim = model.dim();
    let mut weighted = vec![0.0f64; paragraphs.len() * dim];
    let mut zero_rows = vec![false; paragraphs.len()];
    for (p, (row, zero)) in paragraphs
        .iter()
        .zip(weighted.chunks_exact_mut(dim).zip(zero_rows.iter_mut()))
    {
        let mut tf: HashMap<usize, usize> = HashMap::new();
        for w in p {
            if let Some(i) = model.index_of(w.as_ref()) {
                *tf.entry(i).or_default() += 1;
            }
        }
        let mut terms: Vec<(usize, usize)> = tf.into_iter().collect();
        terms.sort_unstable();
        let mut total = 0.0;
        for (i, count) in terms {
            let weight = count as f64 * tfidf.idf(model.word(i));
            for (r, x) in row.iter_mut().zip(model.row(i)) {
                *r += weight * x;
            }
            total += weight;
        }
        if total == 0.0 {
            *zero = true;
            row.iter_mut().for_each(|x| *x = 0.0);
        } else {
            row.iter_mut().for_each(|x| *x /= total);
        }
    }
    let nonzero: Vec<f64> = weighted
        .chunks_exact(dim)
        .zip(&zero_rows)
        .filter(|(_, &z)| !z)
        .flat_map(|(r, _)| r.iter().copied())
        .collect();
    let component = first_principal_component(&nonzero, dim)?;
    let mut rows = weighted.clone();
    remove_component(&mut rows, dim, &component);
    Ok(ParagraphEmbeddings {
        dim,
        weighted,
        rows,
        zero_rows,
        component,
    })
}

/// First principal component (unit length) of a row-major `n x dim` matrix,
/// by power iteration on the covariance of the mean-centered rows. The sign
/// is fixed so the largest-magnitude coordinate is positive.
pub fn first_principal_component(matrix: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !matrix.len().is_multiple_of(dim) {
        return Err(Error::invalid("matrix length is not a multiple of dim"));
    }
    let n = matrix.len() / dim;
    if n < 2 {
        return Err(Error::invalid("principal component needs at least two rows"));
    }
    let mut mean = vec![0.0; dim];
    for row in matrix.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut cov = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for row in matrix.chunks_exact(dim) {
        for ((c, x), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = x - m;
        }
        for a in 0..dim {
            let ca = centered[a];
            for b in a..dim {
                cov[a * dim + b] += ca * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov[a * dim + b] = cov[b * dim + a];
        }
    }
    if cov.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("rows have no variance"));
    }

    let mut v: Vec<f64> = (0..dim).map(|j| 1.0 / ((j + 1) as f64).sqrt()).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut next = vec![0.0; dim];
    let mut converged = false;
    for _ in 0..PC_MAX_ITER {
        for (a, out) in next.iter_mut().enumerate() {
            *out = dot(&cov[a * dim..(a + 1) * dim], &v);
        }
        let norm = dot(&next, &next).sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("power iteration collapsed to zero"));
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut next);
        if delta < PC_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("power iteration did not converge in {PC_MAX_ITER} iterations");
    }
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

/// Subtracts each row's projection onto the unit vector `component`.
pub fn remove_component(rows: &mut [f64], dim: usize, component: &[f64]) {
    for row in rows.chunks_exact_mut(dim) {
        let p = dot(row, component);
        for (x, c) in row.iter_mut().zip(component) {
            *x -= p * c;
        }
    }
}
