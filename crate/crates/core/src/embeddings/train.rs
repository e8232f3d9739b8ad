//! Skip-gram with negative sampling.
//!
//! Follows the reference word2vec recipe: per-position window radius drawn
//! uniformly from `1..=window`, frequent-word subsampling, negatives drawn
//! from the unigram distribution raised to 3/4, and a learning rate decayed
//! linearly over all training words. With `workers > 1` sentences are
//! sharded across threads that update shared matrices without locking
//! (relaxed atomics), so results are only reproducible for `workers == 1`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use super::EmbeddingModel;
use crate::error::{Error, Result};

const NEGATIVE_EXPONENT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negative_samples: usize,
    pub min_count: u64,
    pub subsample_threshold: f64,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub seed: u64,
    pub workers: usize,
    /// Track the mean training loss of every epoch.
    pub compute_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 10,
            epochs: 10,
            negative_samples: 5,
            min_count: 5,
            subsample_threshold: 1e-3,
            initial_lr: 0.025,
            min_lr: 1e-4,
            seed: 1,
            workers: 1,
            compute_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("train config: {m}")));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.negative_samples < 1 {
            return bad("negative_samples must be at least 1");
        }
        if self.workers < 1 {
            return bad("workers must be at least 1");
        }
        if !(self.initial_lr > 0.0) || self.min_lr < 0.0 {
            return bad("learning rates must be positive");
        }
        if self.subsample_threshold < 0.0 {
            return bad("subsample_threshold must be non-negative");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from a base seed and a salt.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}

struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
}

fn build_vocab<S: AsRef<str>>(sentences: &[Vec<S>], min_count: u64) -> Vocab {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for w in s {
            *counts.entry(w.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocab {
        words: kept.iter().map(|(w, _)| w.to_string()).collect(),
        counts: kept.iter().map(|&(_, c)| c).collect(),
    }
}

fn encode<S: AsRef<str>>(sentences: &[Vec<S>], words: &[String]) -> Vec<Vec<u32>> {
    let index: HashMap<&str, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();
    sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| index.get(w.as_ref()).copied()).collect::<Vec<_>>())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect()
}

/// Row-major matrix access used by the SGD kernel.
trait Store {
    fn read(&self, row: usize, out: &mut [f32]);
    fn add(&mut self, row: usize, delta: &[f32], scale: f32);
}

struct Plain<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl Store for Plain<'_> {
    fn read(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, delta: &[f32], scale: f32) {
        for (x, d) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(delta) {
            *x += scale * d;
        }
    }
}

/// Shared matrix for lock-free multi-threaded updates.
struct Shared {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl Shared {
    fn new(values: &[f32], dim: usize) -> Self {
        Shared {
            data: values.iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
            dim,
        }
    }

    fn into_vec(self) -> Vec<f32> {
        self.data.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

impl Store for &Shared {
    fn read(&self, row: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, delta: &[f32], scale: f32) {
        for (a, d) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(delta) {
            let x = f32::from_bits(a.load(Ordering::Relaxed)) + scale * d;
            a.store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Dot product with eight independent accumulators so it vectorizes.
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f32>() + tail
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Trainer<'a> {
    config: &'a TrainConfig,
    keep_prob: Vec<f32>,
    negatives: WeightedAliasIndex<f64>,
    words_per_epoch: u64,
}

#[derive(Default, Clone, Copy)]
struct EpochLoss {
    sum: f64,
    pairs: u64,
}

impl<'a> Trainer<'a> {
    fn new(config: &'a TrainConfig, counts: &[u64], corpus: &[Vec<u32>]) -> Self {
        let words_per_epoch: u64 = corpus.iter().map(|s| s.len() as u64).sum();
        let total: u64 = counts.iter().sum();
        let threshold = config.subsample_threshold * total as f64;
        let keep_prob = counts
            .iter()
            .map(|&c| {
                if threshold <= 0.0 {
                    1.0
                } else {
                    let c = c as f64;
                    (((c / threshold).sqrt() + 1.0) * threshold / c) as f32
                }
            })
            .collect();
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NEGATIVE_EXPONENT)).collect();
        let negatives = WeightedAliasIndex::new(weights).expect("vocabulary counts are positive");
        Trainer {
            config,
            keep_prob,
            negatives,
            words_per_epoch,
        }
    }

    fn lr(&self, words_done: u64) -> f32 {
        let total = (self.config.epochs as u64 * self.words_per_epoch).max(1) as f64;
        let progress = (words_done as f64 / total).min(1.0);
        let lr = self.config.initial_lr - (self.config.initial_lr - self.config.min_lr) * progress;
        lr.max(self.config.min_lr) as f32
    }

    fn sample_negative(&self, rng: &mut ChaCha8Rng) -> usize {
        self.negatives.sample(rng)
    }

    /// One pass over `shard`. `words_before` is the global word count at the
    /// start of the shard and `stride` scales local progress when several
    /// workers advance concurrently.
    fn run_shard<S: Store>(
        &self,
        shard: &[Vec<u32>],
        input: &mut S,
        context: &mut S,
        rng: &mut ChaCha8Rng,
        words_before: u64,
        stride: u64,
    ) -> EpochLoss {
        let dim = self.config.dim;
        let window = self.config.window;
        let mut l1 = vec![0.0f32; dim];
        let mut out = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let mut kept: Vec<u32> = Vec::new();
        let mut loss = EpochLoss::default();
        let mut local_done = 0u64;

        for sentence in shard {
            let lr = self.lr(words_before + local_done * stride);
            local_done += sentence.len() as u64;
            kept.clear();
            for &w in sentence {
                let p = self.keep_prob[w as usize];
                if p >= 1.0 || rng.random::<f32>() < p {
                    kept.push(w);
                }
            }
            let len = kept.len();
            for pos in 0..len {
                let center = kept[pos] as usize;
                let radius = window - rng.random_range(0..window);
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(len - 1);
                for c in lo..=hi {
                    if c == pos {
                        continue;
                    }
                    let source = kept[c] as usize;
                    input.read(source, &mut l1);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=self.config.negative_samples {
                        let (target, label) = if d == 0 {
                            (center, 1.0f32)
                        } else {
                            let t = self.sample_negative(rng);
                            if t == center {
                                continue;
                            }
                            (t, 0.0f32)
                        };
                        context.read(target, &mut out);
                        let f = dot(&l1, &out);
                        if self.config.compute_loss {
                            let f = f64::from(f);
                            loss.sum += if label > 0.5 { softplus(-f) } else { softplus(f) };
                        }
                        let g = (label - sigmoid(f)) * lr;
                        for (gr, o) in grad.iter_mut().zip(&out) {
                            *gr += g * o;
                        }
                        context.add(target, &l1, g);
                    }
                    input.add(source, &grad, 1.0);
                    loss.pairs += 1;
                }
            }
        }
        loss
    }

    fn train(&self, corpus: &[Vec<u32>], input: &mut Vec<f32>, context: &mut Vec<f32>) -> Vec<f64> {
        let dim = self.config.dim;
        let workers = self.config.workers.max(1).min(corpus.len().max(1));
        let mut losses = Vec::with_capacity(self.config.epochs);
        if workers == 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, 0x7472_6169_6e));
            for epoch in 0..self.config.epochs {
                let mut inp = Plain { data: input, dim };
                let mut ctx = Plain { data: context, dim };
                let before = epoch as u64 * self.words_per_epoch;
                let l = self.run_shard(corpus, &mut inp, &mut ctx, &mut rng, before, 1);
                losses.push(l.sum / l.pairs.max(1) as f64);
            }
        } else {
            let shared_in = Shared::new(input, dim);
            let shared_ctx = Shared::new(context, dim);
            let chunk = corpus.len().div_ceil(workers);
            let mut rngs: Vec<ChaCha8Rng> = (0..workers)
                .map(|w| ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, 0x7472_6169_6e + w as u64)))
                .collect();
            for epoch in 0..self.config.epochs {
                let before = epoch as u64 * self.words_per_epoch;
                let results: Vec<EpochLoss> = std::thread::scope(|scope| {
                    let handles: Vec<_> = corpus
                        .chunks(chunk)
                        .zip(rngs.iter_mut())
                        .map(|(shard, rng)| {
                            let (si, sc) = (&shared_in, &shared_ctx);
                            scope.spawn(move || {
                                let (mut a, mut b) = (si, sc);
                                self.run_shard(shard, &mut a, &mut b, rng, before, workers as u64)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("training worker panicked"))
                        .collect()
                });
                let sum: f64 = results.iter().map(|l| l.sum).sum();
                let pairs: u64 = results.iter().map(|l| l.pairs).sum();
                losses.push(sum / pairs.max(1) as f64);
            }
            *input = shared_in.into_vec();
            *context = shared_ctx.into_vec();
        }
        if self.config.compute_loss {
            losses
        } else {
            Vec::new()
        }
    }
}

fn random_input(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f32]) {
    let half = 0.5 / dim as f32;
    for x in out {
        *x = rng.random_range(-half..half);
    }
}

fn train_from<S: AsRef<str>>(
    sentences: &[Vec<S>],
    config: &TrainConfig,
    parent: Option<&EmbeddingModel>,
) -> Result<EmbeddingModel> {
    if parent.is_some() && config.epochs == 0 {
        // A warm start with no epochs is a plain copy of the parent rows.
        TrainConfig { epochs: 1, ..config.clone() }.validate()?;
    } else {
        config.validate()?;
    }
    let vocab = build_vocab(sentences, config.min_count);
    if vocab.words.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_count: config.min_count as usize,
        });
    }
    let dim = config.dim;
    if let Some(p) = parent {
        if p.dim() != dim {
            return Err(Error::invalid(format!(
                "warm-start parent has dim {}, config has {dim}",
                p.dim()
            )));
        }
    }
    let n = vocab.words.len();
    let mut input = vec![0.0f32; n * dim];
    let mut context = vec![0.0f32; n * dim];
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x696e_6974));
    for (i, word) in vocab.words.iter().enumerate() {
        let rows = i * dim..(i + 1) * dim;
        match parent.and_then(|p| p.index_of(word).map(|j| (p, j))) {
            Some((p, j)) => {
                input[rows.clone()].copy_from_slice(p.raw_input(j));
                context[rows].copy_from_slice(p.raw_context(j));
            }
            None => random_input(&mut init_rng, dim, &mut input[rows]),
        }
    }

    let corpus = encode(sentences, &vocab.words);
    let trainer = Trainer::new(config, &vocab.counts, &corpus);
    let losses = trainer.train(&corpus, &mut input, &mut context);
    let mut model = EmbeddingModel::from_parts(dim, vocab.words, vocab.counts, input, context)?;
    model.set_epoch_losses(losses);
    Ok(model)
}

/// Trains a skip-gram model from scratch. Sentences are token lists; words
/// below `min_count` are dropped from the vocabulary.
pub fn train_skipgram<S: AsRef<str>>(sentences: &[Vec<S>], config: &TrainConfig) -> Result<EmbeddingModel> {
    train_from(sentences, config, None)
}

/// Trains a model whose shared-vocabulary input and context vectors start
/// from `parent`'s raw vectors. New words get the standard initialization.
/// Unlike [`train_skipgram`], `epochs == 0` is accepted and yields the
/// initialized matrices untouched.
pub fn train_warm_start<S: AsRef<str>>(
    sentences: &[Vec<S>],
    config: &TrainConfig,
    parent: &EmbeddingModel,
) -> Result<EmbeddingModel> {
    train_from(sentences, config, Some(parent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKey {
    Full { run: usize },
    Year { year: i32, run: usize },
}

/// One full-corpus model per run plus the per-year models warm-started from it.
#[derive(Debug, Default)]
pub struct DiachronicModels {
    pub full: BTreeMap<usize, EmbeddingModel>,
    pub years: BTreeMap<(i32, usize), EmbeddingModel>,
}

/// Seed of run `run` derived from the configured base seed.
pub fn run_seed(base: u64, run: usize) -> u64 {
    derive_seed(base, run as u64 + 1)
}

fn year_seed(run_seed: u64, year: i32) -> u64 {
    derive_seed(run_seed, 0x7965_6172_0000_0000 ^ (year as u32 as u64))
}

/// Trains `runs` independent diachronic chains, handing each finished model
/// to `sink` together with the exact config (including derived seed) used.
/// Years with no usable data are skipped with a warning.
pub fn train_diachronic_with<S, F>(
    corpus: &BTreeMap<i32, Vec<Vec<S>>>,
    config: &TrainConfig,
    runs: usize,
    mut sink: F,
) -> Result<()>
where
    S: AsRef<str>,
    F: FnMut(ModelKey, &EmbeddingModel, &TrainConfig) -> Result<()>,
{
    if runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let all: Vec<&Vec<S>> = corpus.values().flatten().collect();
    if all.is_empty() {
        return Err(Error::invalid("diachronic corpus has no sentences"));
    }
    let all: Vec<Vec<&str>> = all
        .into_iter()
        .map(|s| s.iter().map(|w| w.as_ref()).collect())
        .collect();
    for run in 0..runs {
        let seed = run_seed(config.seed, run);
        let full_config = config.with_seed(seed);
        log::info!("run {run}: training full-corpus model");
        let full = train_skipgram(&all, &full_config)?;
        for (&year, sentences) in corpus {
            if sentences.iter().all(|s| s.is_empty()) {
                log::warn!("year {year}: no data, skipped");
                continue;
            }
            let year_config = config.with_seed(year_seed(seed, year));
            match train_warm_start(sentences, &year_config, &full) {
                Ok(model) => sink(ModelKey::Year { year, run }, &model, &year_config)?,
                Err(Error::EmptyVocabulary { .. }) => {
                    log::warn!("year {year}: empty vocabulary after min_count, skipped");
                }
                Err(e) => return Err(e),
            }
        }
        sink(ModelKey::Full { run }, &full, &full_config)?;
    }
    Ok(())
}

/// Collecting variant of [`train_diachronic_with`].
pub fn train_diachronic<S: AsRef<str>>(
    corpus: &BTreeMap<i32, Vec<Vec<S>>>,
    config: &TrainConfig,
    runs: usize,
) -> Result<DiachronicModels> {
    let mut out = DiachronicModels::default();
    train_diachronic_with(corpus, config, runs, |key, model, _| {
        match key {
            ModelKey::Full { run } => out.full.insert(run, model.clone()),
            ModelKey::Year { year, run } => out.years.insert((year, run), model.clone()),
        };
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repeat(sentence: &[&str], times: usize) -> Vec<Vec<String>> {
        (0..times)
            .map(|_| sentence.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            dim: 8,
            window: 2,
            epochs: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn min_count_vocab() {
        let corpus = repeat(&["x", "y"], 100);
        let mut s = corpus.clone();
        s.push(vec!["rare".into()]);
        let m = train_skipgram(&s, &small_config()).unwrap();
        let mut words = m.words().to_vec();
        words.sort();
        assert_eq!(words, ["x", "y"]);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let corpus = repeat(&["x", "y"], 2);
        assert!(matches!(
            train_skipgram(&corpus, &small_config()),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn deterministic_single_worker() {
        let corpus = repeat(&["a", "b", "c", "d", "a", "c"], 50);
        let a = train_skipgram(&corpus, &small_config()).unwrap();
        let b = train_skipgram(&corpus, &small_config()).unwrap();
        assert_eq!(a.raw_input_matrix(), b.raw_input_matrix());
        assert_eq!(a.raw_context_matrix(), b.raw_context_matrix());
        let c = train_skipgram(&corpus, &small_config().with_seed(99)).unwrap();
        assert_ne!(a.raw_input_matrix(), c.raw_input_matrix());
    }

    #[test]
    fn multi_worker_trains() {
        let corpus = repeat(&["a", "b", "c", "d", "a", "c"], 200);
        let config = TrainConfig {
            workers: 3,
            ..small_config()
        };
        let m = train_skipgram(&corpus, &config).unwrap();
        assert!(m.raw_input_matrix().iter().all(|x| x.is_finite()));
        assert!(m.raw_context_matrix().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn warm_start_identity_at_zero_epochs() {
        let corpus = repeat(&["a", "b", "c", "d"], 50);
        let parent = train_skipgram(&corpus, &small_config()).unwrap();
        let mut year = repeat(&["a", "b", "new"], 20);
        year.extend(repeat(&["c"], 5));
        let config = TrainConfig {
            epochs: 0,
            ..small_config().with_seed(5)
        };
        let child = train_warm_start(&year, &config, &parent).unwrap();
        for w in ["a", "b", "c"] {
            let (i, j) = (child.index_of(w).unwrap(), parent.index_of(w).unwrap());
            assert_eq!(child.raw_input(i), parent.raw_input(j));
            assert_eq!(child.raw_context(i), parent.raw_context(j));
        }
        let k = child.index_of("new").unwrap();
        assert!(child.raw_context(k).iter().all(|&x| x == 0.0));
        assert!(child.raw_input(k).iter().all(|x| x.abs() <= 0.5 / 8.0));
    }

    #[test]
    fn validate_rejects_bad_config() {
        let c = TrainConfig {
            dim: 1,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            window: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
