//! LDA via collapsed Gibbs sampling, fold-in inference, and topic clustering.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::is_stopword;
use crate::error::{Error, Result};

const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained LDA parameters. `topic_word` rows are probability vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicModel {
    pub version: u32,
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub vocab: Vec<String>,
    pub topic_word: Vec<Vec<f64>>,
}

/// Per-sentence topic distribution (theta).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistribution {
    pub theta: Vec<f64>,
}

impl TopicDistribution {
    pub fn uniform(k: usize) -> TopicDistribution {
        TopicDistribution {
            theta: vec![1.0 / k as f64; k],
        }
    }
}

fn strip_stopwords(tokens: &[String]) -> Vec<&str> {
    tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !is_stopword(t))
        .collect()
}

/// Conventional symmetric-alpha default, 50/K.
pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

pub fn train_lda(
    docs: &[Vec<String>],
    k: usize,
    iters: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<TopicModel> {
    if docs.is_empty() {
        return Err(Error::InvalidInput("no documents for LDA training".into()));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "LDA needs at least 2 topics, got {k}"
        )));
    }
    if iters < 1 {
        return Err(Error::InvalidInput("LDA needs at least 1 sweep".into()));
    }

    let mut vocab_index: HashMap<String, usize> = HashMap::new();
    let mut vocab: Vec<String> = Vec::new();
    let corpus: Vec<Vec<usize>> = docs
        .iter()
        .map(|doc| {
            strip_stopwords(doc)
                .into_iter()
                .map(|t| {
                    *vocab_index.entry(t.to_string()).or_insert_with(|| {
                        vocab.push(t.to_string());
                        vocab.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let v = vocab.len();
    if v == 0 {
        return Err(Error::InvalidInput(
            "vocabulary empty after stopword removal".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_dk = vec![vec![0usize; k]; corpus.len()];
    let mut n_kw = vec![vec![0usize; v]; k];
    let mut n_k = vec![0usize; k];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(corpus.len());
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();

    for (d, doc) in corpus.iter().enumerate() {
        let mut zs = Vec::with_capacity(doc.len());
        for &w in doc {
            let z = rng.gen_range(0..k);
            n_dk[d][z] += 1;
            n_kw[z][w] += 1;
            n_k[z] += 1;
            zs.push(z);
        }
        assignments.push(zs);
    }

    let vbeta = v as f64 * beta;
    let mut probs = vec![0.0f64; k];
    for _sweep in 0..iters {
        for (d, doc) in corpus.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = assignments[d][i];
                n_dk[d][old] -= 1;
                n_kw[old][w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (n_dk[d][t] as f64 + alpha)
                        * (n_kw[t][w] as f64 + beta)
                        / (n_k[t] as f64 + vbeta);
                    probs[t] = p;
                    total += p;
                }
                let mut target = rng.gen::<f64>() * total;
                let mut z = k - 1;
                for (t, &p) in probs.iter().enumerate() {
                    if target < p {
                        z = t;
                        break;
                    }
                    target -= p;
                }

                n_dk[d][z] += 1;
                n_kw[z][w] += 1;
                n_k[z] += 1;
                assignments[d][i] = z;
            }
        }
        debug_assert_eq!(n_k.iter().sum::<usize>(), total_tokens);
    }

    let topic_word = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + vbeta;
            (0..v)
                .map(|w| (n_kw[t][w] as f64 + beta) / denom)
                .collect()
        })
        .collect();

    Ok(TopicModel {
        version: MODEL_FORMAT_VERSION,
        n_topics: k,
        alpha,
        beta,
        seed,
        vocab,
        topic_word,
    })
}

impl TopicModel {
    fn vocab_index(&self) -> HashMap<&str, usize> {
        self.vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }

    /// Top-`n` most probable words of one topic, for inspection.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.vocab.len()).collect();
        idx.sort_by(|&a, &b| {
            self.topic_word[topic][b]
                .partial_cmp(&self.topic_word[topic][a])
                .unwrap()
                .then(a.cmp(&b))
        });
        idx.into_iter().take(n).map(|i| self.vocab[i].as_str()).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)
            .map_err(|e| Error::InvalidInput(format!("serialize topic model: {e}")))?;
        fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TopicModel> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: TopicModel = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("parse topic model: {e}")))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported topic model version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Fold-in Gibbs sampling with topic-word probabilities held fixed.
/// Deterministic given the model seed and the caller-supplied salt
/// (callers pass the sentence id).
pub fn infer_theta(
    model: &TopicModel,
    tokens: &[String],
    iters: usize,
    salt: u64,
) -> TopicDistribution {
    let k = model.n_topics;
    let index = model.vocab_index();
    let words: Vec<usize> = strip_stopwords(tokens)
        .into_iter()
        .filter_map(|t| index.get(t).copied())
        .collect();
    if words.is_empty() {
        return TopicDistribution::uniform(k);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15));
    let mut n_t = vec![0usize; k];
    let mut zs: Vec<usize> = Vec::with_capacity(words.len());
    for _ in &words {
        let z = rng.gen_range(0..k);
        n_t[z] += 1;
        zs.push(z);
    }
    let mut probs = vec![0.0f64; k];
    for _sweep in 0..iters.max(1) {
        for (i, &w) in words.iter().enumerate() {
            let old = zs[i];
            n_t[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let p = (n_t[t] as f64 + model.alpha) * model.topic_word[t][w];
                probs[t] = p;
                total += p;
            }
            let mut target = rng.gen::<f64>() * total;
            let mut z = k - 1;
            for (t, &p) in probs.iter().enumerate() {
                if target < p {
                    z = t;
                    break;
                }
                target -= p;
            }
            n_t[z] += 1;
            zs[i] = z;
        }
    }
    let denom = words.len() as f64 + k as f64 * model.alpha;
    TopicDistribution {
        theta: n_t
            .iter()
            .map(|&c| (c as f64 + model.alpha) / denom)
            .collect(),
    }
}

/// Mode of the distribution; ties broken by lowest index.
pub fn assign_cluster(dist: &TopicDistribution) -> usize {
    let mut best = 0;
    for (i, &p) in dist.theta.iter().enumerate() {
        if p > dist.theta[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn two_topic_corpus() -> Vec<Vec<String>> {
        // Disjoint vocabularies {apple banana cherry} vs {xylo yarrow zinnia}
        let mut docs = Vec::new();
        for i in 0..30 {
            if i % 2 == 0 {
                docs.push(toks("apple banana cherry apple banana cherry apple"));
            } else {
                docs.push(toks("xylo yarrow zinnia xylo yarrow zinnia zinnia"));
            }
        }
        docs
    }

    #[test]
    fn recovers_disjoint_vocabulary_blocks() {
        let model = train_lda(&two_topic_corpus(), 2, 200, default_alpha(2), 0.01, 7).unwrap();
        let block_a = ["apple", "banana", "cherry"];
        let block_b = ["xylo", "yarrow", "zinnia"];
        let top0 = model.top_words(0, 3);
        let top1 = model.top_words(1, 3);
        let in_block = |top: &[&str], block: &[&str]| top.iter().all(|w| block.contains(w));
        assert!(
            (in_block(&top0, &block_a) && in_block(&top1, &block_b))
                || (in_block(&top0, &block_b) && in_block(&top1, &block_a)),
            "topics did not separate: {top0:?} vs {top1:?}"
        );
    }

    #[test]
    fn k_below_two_is_an_error() {
        assert!(train_lda(&[toks("a b")], 1, 10, 1.0, 0.01, 0).is_err());
    }

    #[test]
    fn all_stopwords_is_an_error() {
        assert!(train_lda(&[toks("the and of")], 2, 10, 1.0, 0.01, 0).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let docus = two_topic_corpus();
        let a = train_lda(&docus, 2, 50, 25.0, 0.01, 42).unwrap();
        let b = train_lda(&docus, 2, 50, 25.0, 0.01, 42).unwrap();
        assert_eq!(a.topic_word, b.topic_word);
    }

    #[test]
    fn topic_word_rows_are_distributions() {
        let model = train_lda(&two_topic_corpus(), 2, 20, 25.0, 0.01, 3).unwrap();
        for row in &model.topic_word {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn inference_prefers_matching_topic() {
        let model = train_lda(&two_topic_corpus(), 2, 200, default_alpha(2), 0.01, 7).unwrap();
        let ta = infer_theta(&model, &toks("apple banana apple cherry"), 50, 0);
        let tb = infer_theta(&model, &toks("zinnia xylo yarrow xylo"), 50, 1);
        assert_ne!(assign_cluster(&ta), assign_cluster(&tb));
    }

    #[test]
    fn empty_tokens_give_uniform_theta() {
        let model = train_lda(&two_topic_corpus(), 2, 10, 25.0, 0.01, 7).unwrap();
        let dist = infer_theta(&model, &[], 10, 0);
        assert_eq!(dist, TopicDistribution::uniform(2));
        let oov = infer_theta(&model, &toks("unseen wording"), 10, 0);
        assert_eq!(oov, TopicDistribution::uniform(2));
    }

    #[test]
    fn theta_sums_to_one() {
        let model = train_lda(&two_topic_corpus(), 2, 20, 25.0, 0.01, 7).unwrap();
        for (i, doc) in two_topic_corpus().iter().enumerate() {
            let dist = infer_theta(&model, doc, 20, i as u64);
            let sum: f64 = dist.theta.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn assign_cluster_argmax_and_ties() {
        let d = |v: &[f64]| TopicDistribution { theta: v.to_vec() };
        assert_eq!(assign_cluster(&d(&[0.1, 0.7, 0.2])), 1);
        assert_eq!(assign_cluster(&d(&[0.5, 0.5])), 0);
        assert_eq!(assign_cluster(&d(&[0.25, 0.25, 0.25, 0.25])), 0);
    }

    #[test]
    fn model_round_trips_through_file() {
        let model = train_lda(&two_topic_corpus(), 2, 10, 25.0, 0.01, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lda.json");
        model.save(&path).unwrap();
        let loaded = TopicModel::load(&path).unwrap();
        assert_eq!(model.topic_word, loaded.topic_word);
        assert_eq!(model.seed, loaded.seed);
    }
}
