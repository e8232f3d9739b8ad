//! Python bindings for the core measures and statistics.

use std::collections::HashMap;

use dehum::embeddings::{nearest_neighbors, read_model, train_skipgram, write_model, EmbeddingModel, TrainConfig};
use dehum::lexicons::{AffectLexicon, Dimension};
use dehum::{measures, stats};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: dehum::Error) -> PyErr {
    match e {
        dehum::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn lexicon(scores: HashMap<String, f64>) -> PyResult<AffectLexicon> {
    AffectLexicon::from_entries(Dimension::Valence, scores).map_err(to_py)
}

/// Mean lexicon score of the tokens found in `lexicon`, falling back to the
/// lemma at the same position. None when nothing matches.
#[pyfunction]
#[pyo3(signature = (tokens, lexicon, lemmas = None))]
fn paragraph_affect(tokens: Vec<String>, lexicon: HashMap<String, f64>, lemmas: Option<Vec<String>>) -> PyResult<Option<f64>> {
    let lex = self::lexicon(lexicon)?;
    Ok(measures::paragraph_affect(&tokens, &lemmas.unwrap_or_default(), &lex))
}

/// Two-sided Wilcoxon signed-rank test: (statistic, p_value, n, method).
#[pyfunction]
fn wilcoxon(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64, usize, &'static str)> {
    let r = stats::wilcoxon_signed_rank(&x, &y).map_err(to_py)?;
    Ok((r.statistic, r.p_value, r.n, r.method.name()))
}

/// OLS slope of values on years: (slope, std_error, intercept, p_value).
#[pyfunction]
fn linear_trend(years: Vec<i32>, values: Vec<f64>) -> PyResult<(f64, f64, f64, f64)> {
    let r = stats::linear_trend(&years, &values).map_err(to_py)?;
    Ok((r.slope, r.slope_se, r.intercept, r.p_value))
}

#[pyfunction]
#[pyo3(signature = (x, y, frac = 2.0 / 3.0, iterations = 3))]
fn lowess(x: Vec<f64>, y: Vec<f64>, frac: f64, iterations: usize) -> PyResult<Vec<f64>> {
    stats::lowess(&x, &y, frac, iterations).map_err(to_py)
}

/// Ridge regression on a row-major design matrix: (weights, intercept).
#[pyfunction]
fn ridge_solve(x: Vec<Vec<f64>>, y: Vec<f64>, alpha: f64) -> PyResult<(Vec<f64>, f64)> {
    let dim = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    let flat: Vec<f64> = x.into_iter().flatten().collect();
    measures::ridge_solve(&flat, dim, &y, alpha).map_err(to_py)
}

/// A trained embedding model, post-processed on load.
#[pyclass(name = "Model", frozen)]
struct PyModel(EmbeddingModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let mut m = read_model(path).map_err(to_py)?;
        m.postprocess().map_err(to_py)?;
        Ok(PyModel(m))
    }

    /// Trains skip-gram vectors on tokenized sentences.
    #[staticmethod]
    #[pyo3(signature = (sentences, dim = 100, window = 10, epochs = 10, min_count = 1, seed = 0))]
    fn train(sentences: Vec<Vec<String>>, dim: usize, window: usize, epochs: usize, min_count: u64, seed: u64) -> PyResult<Self> {
        let config = TrainConfig {
            dim,
            window,
            epochs,
            min_count,
            seed,
            workers: 1,
            ..TrainConfig::default()
        };
        let mut m = train_skipgram(&sentences, &config).map_err(to_py)?;
        m.postprocess().map_err(to_py)?;
        Ok(PyModel(m))
    }

    /// Writes the raw vectors; [`PyModel::load`] post-processes them again.
    fn save(&self, path: &str) -> PyResult<()> {
        write_model(&self.0, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.0.vector(word).map(<[f64]>::to_vec)
    }

    /// Nearest words to `word` as (word, cosine), excluding `exclude`.
    #[pyo3(signature = (word, k, exclude = Vec::new()))]
    fn neighbors(&self, word: &str, k: usize, exclude: Vec<String>) -> PyResult<Vec<(String, f64)>> {
        let q = self.query(word)?;
        let found = nearest_neighbors(&self.0, &q, k, &exclude).map_err(to_py)?;
        Ok(found.into_iter().map(|n| (n.word, n.cosine)).collect())
    }

    /// Mean lexicon score of the lexiconed words among the `k` nearest
    /// neighbors of `word`: (value, neighbors scored).
    #[pyo3(signature = (word, k, lexicon, exclude = Vec::new()))]
    fn neighbor_affect(
        &self,
        word: &str,
        k: usize,
        lexicon: HashMap<String, f64>,
        exclude: Vec<String>,
    ) -> PyResult<(f64, usize)> {
        let q = self.query(word)?;
        let lex = self::lexicon(lexicon)?;
        let r = measures::neighbor_affect(&self.0, &q, k, &lex, &exclude).map_err(to_py)?;
        Ok((r.value, r.n))
    }

    fn cosine_distance(&self, a: &str, b: &str) -> PyResult<f64> {
        Ok(measures::cosine_distance(&self.query(a)?, &self.query(b)?))
    }
}

impl PyModel {
    fn query(&self, word: &str) -> PyResult<Vec<f64>> {
        self.0
            .vector(word)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| PyValueError::new_err(format!("{word:?} is not in the vocabulary")))
    }
}

#[pymodule]
pub fn pydehum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(paragraph_affect, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(linear_trend, m)?)?;
    m.add_function(wrap_pyfunction!(lowess, m)?)?;
    m.add_function(wrap_pyfunction!(ridge_solve, m)?)?;
    Ok(())
}
