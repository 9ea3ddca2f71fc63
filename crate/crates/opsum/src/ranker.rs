//! Candidate ranking: feature extraction, a linear listwise (ListNet-style)
//! ranker, ranking baselines, and best-answer prediction metrics.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    is_stopword, tfidf_vector, CorpusStats, Ngram, TermVector, WeightScheme,
};
use crate::error::{Error, Result};
use crate::lexicon::{sentence_polarity, PolarityValue, SentimentLexicon};
use crate::similarity::{cosine_tfidf, jsd};
use crate::topics::{assign_cluster, infer_theta, TopicModel};

pub const N_FEATURES: usize = 16;

/// Fixed feature registry; order is part of the model format.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "position",
    "length_words",
    "length_lt_5",
    "query_cosine_uni_tf",
    "query_cosine_uni_tfidf",
    "query_cosine_bi_tf",
    "query_cosine_bi_tfidf",
    "query_content_word_overlap",
    "sentiment_word_count",
    "sentiment_word_portion",
    "query_polarity_agreement",
    "centroid_cosine_uni_tfidf",
    "centroid_cosine_bi_tfidf",
    "sumbasic",
    "topic_signature_count",
    "jsd_with_thread",
];

/// Chi-squared cutoff at p = 0.001 for the topic-signature log-likelihood
/// ratio.
pub const TOPIC_SIGNATURE_THRESHOLD: f64 = 10.83;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

/// One ranking candidate: a whole answer (qa) or a sentence (blog).
#[derive(Debug, Clone)]
pub struct Candidate {
    pub tokens: Vec<String>,
    pub raw: String,
    pub position: usize,
    pub author: String,
}

impl Candidate {
    pub fn word_count(&self) -> usize {
        self.raw.split_whitespace().count()
    }
}

fn log_likelihood(k: f64, n: f64, p: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let mut ll = 0.0;
    if k > 0.0 && p > 0.0 {
        ll += k * p.ln();
    }
    if n - k > 0.0 && p < 1.0 {
        ll += (n - k) * (1.0 - p).ln();
    }
    ll
}

/// Terms whose thread frequency is elevated against the background corpus
/// by log-likelihood ratio above `TOPIC_SIGNATURE_THRESHOLD`.
pub fn topic_signature_terms(
    thread_counts: &HashMap<String, f64>,
    thread_total: f64,
    stats: &CorpusStats,
) -> HashSet<String> {
    let mut out = HashSet::new();
    if thread_total == 0.0 || stats.background_tokens == 0.0 {
        return out;
    }
    for (term, &k1) in thread_counts {
        if is_stopword(term) {
            continue;
        }
        let bg = stats.background_unigram.get(term).copied().unwrap_or(0.0)
            * stats.background_tokens;
        let k2 = (bg - k1).max(0.0);
        let n1 = thread_total;
        let n2 = (stats.background_tokens - thread_total).max(0.0);
        let p1 = k1 / n1;
        let p2 = if n2 > 0.0 { k2 / n2 } else { 0.0 };
        if p1 <= p2 {
            continue;
        }
        let p = (k1 + k2) / (n1 + n2);
        let llr = 2.0
            * (log_likelihood(k1, n1, p1) + log_likelihood(k2, n2, p2)
                - log_likelihood(k1, n1, p)
                - log_likelihood(k2, n2, p));
        if llr > TOPIC_SIGNATURE_THRESHOLD {
            out.insert(term.clone());
        }
    }
    out
}

/// Per-thread artifacts shared across candidate feature extractions.
pub struct FeatureExtractor<'a> {
    candidates: &'a [Candidate],
    lexicon: &'a SentimentLexicon,
    query_content: HashSet<&'a str>,
    query_polarity: PolarityValue,
    uni_tf: Vec<TermVector>,
    uni_tfidf: Vec<TermVector>,
    bi_tf: Vec<TermVector>,
    bi_tfidf: Vec<TermVector>,
    query_uni_tf: TermVector,
    query_uni_tfidf: TermVector,
    query_bi_tf: TermVector,
    query_bi_tfidf: TermVector,
    centroid_uni: Vec<TermVector>,
    centroid_bi: Vec<TermVector>,
    cluster_of: Vec<usize>,
    thread_dist: HashMap<String, f64>,
    thread_total: f64,
    signatures: HashSet<String>,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(
        query_tokens: &'a [String],
        candidates: &'a [Candidate],
        stats: &CorpusStats,
        lexicon: &'a SentimentLexicon,
        model: &TopicModel,
        infer_iters: usize,
    ) -> FeatureExtractor<'a> {
        let clusters: Vec<usize> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                assign_cluster(&infer_theta(model, &c.tokens, infer_iters, i as u64))
            })
            .collect();
        Self::with_clusters(query_tokens, candidates, stats, lexicon, clusters)
    }

    /// Variant taking precomputed cluster assignments (one per candidate).
    pub fn with_clusters(
        query_tokens: &'a [String],
        candidates: &'a [Candidate],
        stats: &CorpusStats,
        lexicon: &'a SentimentLexicon,
        cluster_of: Vec<usize>,
    ) -> FeatureExtractor<'a> {
        assert_eq!(cluster_of.len(), candidates.len());
        let vecs = |ngram, scheme| -> Vec<TermVector> {
            candidates
                .iter()
                .map(|c| tfidf_vector(&c.tokens, stats, ngram, scheme))
                .collect()
        };
        let uni_tf = vecs(Ngram::Uni, WeightScheme::Tf);
        let uni_tfidf = vecs(Ngram::Uni, WeightScheme::Tfidf);
        let bi_tf = vecs(Ngram::Bi, WeightScheme::Tf);
        let bi_tfidf = vecs(Ngram::Bi, WeightScheme::Tfidf);

        let n_clusters = cluster_of.iter().copied().max().map_or(0, |m| m + 1);
        let centroid = |vectors: &[TermVector]| -> Vec<TermVector> {
            (0..n_clusters)
                .map(|k| {
                    let members: Vec<&TermVector> = cluster_of
                        .iter()
                        .zip(vectors)
                        .filter(|(c, _)| **c == k)
                        .map(|(_, v)| v)
                        .collect();
                    TermVector::centroid(&members)
                })
                .collect()
        };
        let centroid_uni = centroid(&uni_tfidf);
        let centroid_bi = centroid(&bi_tfidf);

        let mut thread_dist: HashMap<String, f64> = HashMap::new();
        let mut thread_total = 0.0;
        for c in candidates {
            for t in &c.tokens {
                *thread_dist.entry(t.clone()).or_insert(0.0) += 1.0;
                thread_total += 1.0;
            }
        }
        let signatures = topic_signature_terms(&thread_dist, thread_total, stats);

        FeatureExtractor {
            candidates,
            lexicon,
            query_content: query_tokens
                .iter()
                .map(String::as_str)
                .filter(|t| !is_stopword(t))
                .collect(),
            query_polarity: sentence_polarity(query_tokens, lexicon, 5).value,
            uni_tf,
            uni_tfidf,
            bi_tf,
            bi_tfidf,
            query_uni_tf: tfidf_vector(query_tokens, stats, Ngram::Uni, WeightScheme::Tf),
            query_uni_tfidf: tfidf_vector(query_tokens, stats, Ngram::Uni, WeightScheme::Tfidf),
            query_bi_tf: tfidf_vector(query_tokens, stats, Ngram::Bi, WeightScheme::Tf),
            query_bi_tfidf: tfidf_vector(query_tokens, stats, Ngram::Bi, WeightScheme::Tfidf),
            centroid_uni,
            centroid_bi,
            cluster_of,
            thread_dist,
            thread_total,
            signatures,
        }
    }

    pub fn features(&self, i: usize) -> FeatureVector {
        let c = &self.candidates[i];
        let n_tokens = c.tokens.len();
        let pol = sentence_polarity(&c.tokens, self.lexicon, 5);
        let sentiment_count = (pol.pos_count + pol.neg_count) as f64;
        let agreement = match (self.query_polarity, pol.value) {
            (PolarityValue::Neutral, _) | (_, PolarityValue::Neutral) => 0.0,
            (q, s) if q == s => 1.0,
            _ => 0.0,
        };

        let cluster = self.cluster_of[i];
        let content: Vec<&String> =
            c.tokens.iter().filter(|t| !is_stopword(t)).collect();
        let sumbasic = if content.is_empty() || self.thread_total == 0.0 {
            0.0
        } else {
            content
                .iter()
                .map(|t| self.thread_dist.get(t.as_str()).copied().unwrap_or(0.0))
                .sum::<f64>()
                / self.thread_total
                / content.len() as f64
        };
        let signature_count = c
            .tokens
            .iter()
            .filter(|t| self.signatures.contains(t.as_str()))
            .count() as f64;

        // JSD between candidate and thread unigram distributions over the
        // union vocabulary.
        let jsd_with_thread = if n_tokens == 0 || self.thread_total == 0.0 {
            0.0
        } else {
            let mut cand: HashMap<&str, f64> = HashMap::new();
            for t in &c.tokens {
                *cand.entry(t.as_str()).or_insert(0.0) += 1.0;
            }
            let mut vocab: Vec<&str> = self
                .thread_dist
                .keys()
                .map(String::as_str)
                .chain(cand.keys().copied())
                .collect::<HashSet<_>>()
                .into_iter()
                .collect();
            vocab.sort_unstable();
            let p: Vec<f64> = vocab
                .iter()
                .map(|t| cand.get(*t).copied().unwrap_or(0.0) / n_tokens as f64)
                .collect();
            let q: Vec<f64> = vocab
                .iter()
                .map(|t| self.thread_dist.get(*t).copied().unwrap_or(0.0)
                    / self.thread_total)
                .collect();
            jsd(&p, &q)
        };

        FeatureVector([
            c.position as f64,
            n_tokens as f64,
            if n_tokens < 5 { 1.0 } else { 0.0 },
            cosine_tfidf(&self.uni_tf[i], &self.query_uni_tf),
            cosine_tfidf(&self.uni_tfidf[i], &self.query_uni_tfidf),
            cosine_tfidf(&self.bi_tf[i], &self.query_bi_tf),
            cosine_tfidf(&self.bi_tfidf[i], &self.query_bi_tfidf),
            self.query_content
                .iter()
                .filter(|t| c.tokens.iter().any(|ct| ct == **t))
                .count() as f64,
            sentiment_count,
            if n_tokens == 0 { 0.0 } else { sentiment_count / n_tokens as f64 },
            agreement,
            cosine_tfidf(&self.uni_tfidf[i], &self.centroid_uni[cluster]),
            cosine_tfidf(&self.bi_tfidf[i], &self.centroid_bi[cluster]),
            sumbasic,
            signature_count,
            jsd_with_thread,
        ])
    }

    pub fn all_features(&self) -> Vec<FeatureVector> {
        (0..self.candidates.len()).map(|i| self.features(i)).collect()
    }
}

/// Linear listwise ranking model with stored standardization statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankModel {
    pub version: String,
    pub registry_hash: String,
    pub weights: [f64; N_FEATURES],
    pub feature_means: [f64; N_FEATURES],
    pub feature_stds: [f64; N_FEATURES],
}

pub fn feature_registry_hash() -> String {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    FEATURE_NAMES.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

impl RankModel {
    pub fn score(&self, fv: &FeatureVector) -> f64 {
        let mut s = 0.0;
        for j in 0..N_FEATURES {
            s += self.weights[j] * (fv.0[j] - self.feature_means[j]) / self.feature_stds[j];
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("serialize rank model: {e}")))?;
        fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RankModel> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: RankModel = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("parse rank model: {e}")))?;
        if model.registry_hash != feature_registry_hash() {
            return Err(Error::InvalidInput(
                "rank model was trained with a different feature registry".into(),
            ));
        }
        Ok(model)
    }
}

/// Per-feature z-score statistics; zero-variance features get std = 1.
pub fn standardize(
    vectors: &[FeatureVector],
) -> ([f64; N_FEATURES], [f64; N_FEATURES], Vec<FeatureVector>) {
    let n = vectors.len().max(1) as f64;
    let mut means = [0.0; N_FEATURES];
    for v in vectors {
        for j in 0..N_FEATURES {
            means[j] += v.0[j];
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = [0.0; N_FEATURES];
    for v in vectors {
        for j in 0..N_FEATURES {
            let d = v.0[j] - means[j];
            stds[j] += d * d;
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let transformed = vectors
        .iter()
        .map(|v| {
            let mut out = [0.0; N_FEATURES];
            for j in 0..N_FEATURES {
                out[j] = (v.0[j] - means[j]) / stds[j];
            }
            FeatureVector(out)
        })
        .collect();
    (means, stds, transformed)
}

fn top_one_softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy between the top-one probability distributions induced by
/// model scores and by relevance labels.
pub fn listnet_loss(scores: &[f64], labels: &[f64]) -> f64 {
    let p_label = top_one_softmax(labels);
    let p_score = top_one_softmax(scores);
    -p_label
        .iter()
        .zip(&p_score)
        .map(|(py, ps)| py * ps.max(1e-300).ln())
        .sum::<f64>()
}

pub struct ListnetOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ListnetOptions {
    fn default() -> Self {
        ListnetOptions {
            epochs: 1500,
            learning_rate: 1e-5,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the ListNet top-one loss with a linear
/// scoring function. Weights start at zero, so training is deterministic.
pub fn listnet_train_traced(
    lists: &[(Vec<FeatureVector>, Vec<f64>)],
    opts: &ListnetOptions,
) -> Result<(RankModel, Vec<f64>)> {
    if lists.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    for (vectors, labels) in lists {
        if vectors.len() < 2 {
            return Err(Error::InvalidInput(
                "each training list needs at least 2 candidates".into(),
            ));
        }
        if vectors.len() != labels.len() {
            return Err(Error::InvalidInput(
                "feature/label length mismatch in training list".into(),
            ));
        }
        if !labels.iter().any(|&l| l > 0.0) {
            return Err(Error::InvalidInput(
                "each training list needs at least one positive label".into(),
            ));
        }
    }

    let pooled: Vec<FeatureVector> = lists
        .iter()
        .flat_map(|(v, _)| v.iter().copied())
        .collect();
    let (means, stds, _) = standardize(&pooled);
    let std_lists: Vec<(Vec<FeatureVector>, &[f64])> = lists
        .iter()
        .map(|(vectors, labels)| {
            let std_vs = vectors
                .iter()
                .map(|v| {
                    let mut out = [0.0; N_FEATURES];
                    for j in 0..N_FEATURES {
                        out[j] = (v.0[j] - means[j]) / stds[j];
                    }
                    FeatureVector(out)
                })
                .collect();
            (std_vs, labels.as_slice())
        })
        .collect();

    let mut weights = [0.0; N_FEATURES];
    let mut history = Vec::with_capacity(opts.epochs);
    for _epoch in 0..opts.epochs {
        let mut grad = [0.0; N_FEATURES];
        let mut loss = 0.0;
        for (vectors, labels) in &std_lists {
            let scores: Vec<f64> = vectors
                .iter()
                .map(|v| (0..N_FEATURES).map(|j| weights[j] * v.0[j]).sum())
                .collect();
            loss += listnet_loss(&scores, labels);
            let p_score = top_one_softmax(&scores);
            let p_label = top_one_softmax(labels);
            for (i, v) in vectors.iter().enumerate() {
                let coeff = p_score[i] - p_label[i];
                for j in 0..N_FEATURES {
                    grad[j] += coeff * v.0[j];
                }
            }
        }
        for j in 0..N_FEATURES {
            weights[j] -= opts.learning_rate * grad[j];
        }
        history.push(loss);
    }

    Ok((
        RankModel {
            version: "1".into(),
            registry_hash: feature_registry_hash(),
            weights,
            feature_means: means,
            feature_stds: stds,
        },
        history,
    ))
}

pub fn listnet_train(
    lists: &[(Vec<FeatureVector>, Vec<f64>)],
    opts: &ListnetOptions,
) -> Result<RankModel> {
    listnet_train_traced(lists, opts).map(|(model, _)| model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankItem {
    pub id: usize,
    pub score: f64,
    pub rank: usize,
}

/// Items in original candidate order; ranks are 1-based, descending by
/// score with ties broken by original order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub items: Vec<RankItem>,
}

impl RankedList {
    pub fn rank_of(&self, id: usize) -> usize {
        self.items[id].rank
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Ranks from raw scores, descending; ties keep input order.
pub fn rank_by_scores(scores: &[f64]) -> RankedList {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut items: Vec<RankItem> = scores
        .iter()
        .enumerate()
        .map(|(id, &score)| RankItem { id, score, rank: 0 })
        .collect();
    for (pos, &id) in order.iter().enumerate() {
        items[id].rank = pos + 1;
    }
    RankedList { items }
}

/// Score candidates with the trained model and rank them.
pub fn rank_with_model(model: &RankModel, features: &[FeatureVector]) -> RankedList {
    let scores: Vec<f64> = features.iter().map(|f| model.score(f)).collect();
    rank_by_scores(&scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random(u64),
    Length,
    Jsd,
}

/// The three ranking baselines: seeded shuffle, descending word count, and
/// ascending JSD against the all-candidates unigram distribution.
pub fn baseline_rank(candidates: &[Candidate], kind: BaselineKind) -> RankedList {
    match kind {
        BaselineKind::Random(seed) => {
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let mut items: Vec<RankItem> = (0..candidates.len())
                .map(|id| RankItem { id, score: 0.0, rank: 0 })
                .collect();
            for (pos, &id) in order.iter().enumerate() {
                items[id].rank = pos + 1;
                items[id].score = -(pos as f64);
            }
            RankedList { items }
        }
        BaselineKind::Length => {
            let scores: Vec<f64> =
                candidates.iter().map(|c| c.word_count() as f64).collect();
            rank_by_scores(&scores)
        }
        BaselineKind::Jsd => {
            let mut union: HashMap<&str, f64> = HashMap::new();
            let mut total = 0.0f64;
            for c in candidates {
                for t in &c.tokens {
                    *union.entry(t.as_str()).or_insert(0.0) += 1.0;
                    total += 1.0;
                }
            }
            let mut vocab: Vec<&str> = union.keys().copied().collect();
            vocab.sort_unstable();
            let q: Vec<f64> = vocab.iter().map(|t| union[t] / total.max(1.0)).collect();
            let scores: Vec<f64> = candidates
                .iter()
                .map(|c| {
                    if c.tokens.is_empty() {
                        return -1.0; // empty candidates rank last
                    }
                    let mut counts: HashMap<&str, f64> = HashMap::new();
                    for t in &c.tokens {
                        *counts.entry(t.as_str()).or_insert(0.0) += 1.0;
                    }
                    let p: Vec<f64> = vocab
                        .iter()
                        .map(|t| counts.get(t).copied().unwrap_or(0.0) / c.tokens.len() as f64)
                        .collect();
                    -jsd(&p, &q) // ascending JSD = descending negative JSD
                })
                .collect();
            rank_by_scores(&scores)
        }
    }
}

/// Precision-at-1 and mean reciprocal rank over lists with exactly one
/// best-answer label (given as the candidate id).
pub fn ranking_metrics(lists: &[(RankedList, Option<usize>)]) -> Result<(f64, f64)> {
    if lists.is_empty() {
        return Err(Error::InvalidInput("no ranked lists to score".into()));
    }
    let mut hits = 0usize;
    let mut rr = 0.0;
    for (list, best) in lists {
        let best = best.ok_or_else(|| {
            Error::InvalidInput("ranked list lacks a best-answer label".into())
        })?;
        let rank = list.rank_of(best);
        if rank == 1 {
            hits += 1;
        }
        rr += 1.0 / rank as f64;
    }
    Ok((hits as f64 / lists.len() as f64, rr / lists.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::lexicon::{merge_lexicons, Polarity};

    fn lex() -> SentimentLexicon {
        let table = vec![
            ("good".to_string(), Polarity::Positive),
            ("bad".to_string(), Polarity::Negative),
        ];
        merge_lexicons(&[table], ["not"].iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn cand(text: &str, position: usize, author: &str) -> Candidate {
        Candidate {
            tokens: tokenize(text),
            raw: text.to_string(),
            position,
            author: author.to_string(),
        }
    }

    fn fixture() -> (Vec<String>, Vec<Candidate>, CorpusStats) {
        let candidates = vec![
            cand("piracy is good", 0, "u0"),
            cand("piracy is bad", 1, "u1"),
            cand("music cost rises", 2, "u2"),
        ];
        let docs: Vec<Vec<String>> = candidates.iter().map(|c| c.tokens.clone()).collect();
        let stats = CorpusStats::build(&docs);
        (tokenize("is piracy good"), candidates, stats)
    }

    #[test]
    fn full_feature_vector_matches_hand_computation() {
        let (query, candidates, stats) = fixture();
        let lex = lex();
        let fx = FeatureExtractor::with_clusters(
            &query,
            &candidates,
            &stats,
            &lex,
            vec![0, 0, 1],
        );
        let f = fx.features(0).0;

        assert_eq!(f[0], 0.0); // position
        assert_eq!(f[1], 3.0); // length
        assert_eq!(f[2], 1.0); // length < 5
        assert!((f[3] - 1.0).abs() < 1e-12); // uni TF cosine, same multiset as query
        assert!((f[4] - 1.0).abs() < 1e-12); // uni TFIDF cosine
        assert_eq!(f[5], 0.0); // bigrams "is piracy"/"piracy good" vs "piracy is"/"is good"
        assert_eq!(f[6], 0.0);
        assert_eq!(f[7], 2.0); // query content words {piracy, good}
        assert_eq!(f[8], 1.0); // "good"
        assert!((f[9] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(f[10], 1.0); // both positive

        // Centroid cosines, hand-derived closed forms with a = ln(4/3),
        // b = ln 2 (see tfidf weights of the 3-document fixture).
        let a = (4.0_f64 / 3.0).ln();
        let b = 2.0_f64.ln();
        let f12 = (2.0 * a * a + b * b / 2.0).sqrt() / (2.0 * a * a + b * b).sqrt();
        let f13 = (a * a + b * b / 2.0).sqrt() / (a * a + b * b).sqrt();
        assert!((f[11] - f12).abs() < 1e-12, "centroid uni: {} vs {f12}", f[11]);
        assert!((f[12] - f13).abs() < 1e-12, "centroid bi: {} vs {f13}", f[12]);

        // sumBasic: content words piracy (2/9) and good (1/9), mean 1/6
        assert!((f[13] - 1.0 / 6.0).abs() < 1e-12);
        // background equals the thread, so nothing is elevated
        assert_eq!(f[14], 0.0);

        // JSD between candidate and thread unigram distributions
        let p = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 0.0];
        let q = [2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0];
        assert!((f[15] - jsd(&p, &q)).abs() < 1e-12);
    }

    #[test]
    fn candidate_identical_to_query_has_unit_query_cosines() {
        let candidates = vec![cand("piracy is good", 0, "u0"), cand("other words", 1, "u1")];
        let docs: Vec<Vec<String>> = candidates.iter().map(|c| c.tokens.clone()).collect();
        let stats = CorpusStats::build(&docs);
        let lexicon = lex();
        let query = tokenize("piracy is good");
        let fx =
            FeatureExtractor::with_clusters(&query, &candidates, &stats, &lexicon, vec![0, 0]);
        let f = fx.features(0).0;
        for j in 3..7 {
            assert!((f[j] - 1.0).abs() < 1e-12, "feature {j} = {}", f[j]);
        }
    }

    #[test]
    fn short_candidate_sets_length_indicator() {
        let (query, candidates, stats) = fixture();
        let lexicon = lex();
        let fx = FeatureExtractor::with_clusters(
            &query,
            &candidates,
            &stats,
            &lexicon,
            vec![0, 0, 1],
        );
        assert_eq!(fx.features(1).0[2], 1.0); // 3 words < 5
    }

    #[test]
    fn standardize_degenerate_and_closed_form() {
        let mk = |v: f64| {
            let mut a = [3.0; N_FEATURES];
            a[0] = v;
            FeatureVector(a)
        };
        let (means, stds, transformed) = standardize(&[mk(0.0), mk(2.0)]);
        assert_eq!(means[0], 1.0);
        assert_eq!(stds[0], 1.0); // population std of {0,2}
        assert_eq!(transformed[0].0[0], -1.0);
        assert_eq!(transformed[1].0[0], 1.0);
        // constant feature: std forced to 1, values 0
        assert_eq!(stds[1], 1.0);
        assert_eq!(transformed[0].0[1], 0.0);
    }

    #[test]
    fn standardized_columns_have_zero_mean() {
        let vs: Vec<FeatureVector> = (0..7)
            .map(|i| {
                let mut a = [0.0; N_FEATURES];
                for (j, slot) in a.iter_mut().enumerate() {
                    *slot = (i * 31 + j * 7) as f64 % 13.0;
                }
                FeatureVector(a)
            })
            .collect();
        let (_, _, transformed) = standardize(&vs);
        for j in 0..N_FEATURES {
            let mean: f64 =
                transformed.iter().map(|v| v.0[j]).sum::<f64>() / transformed.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_features_leaves_standardization_unchanged() {
        let vs: Vec<FeatureVector> = (0..5)
            .map(|i| {
                let mut a = [0.0; N_FEATURES];
                for (j, slot) in a.iter_mut().enumerate() {
                    *slot = (i + j) as f64;
                }
                FeatureVector(a)
            })
            .collect();
        let scaled: Vec<FeatureVector> = vs
            .iter()
            .map(|v| {
                let mut a = v.0;
                for slot in &mut a {
                    *slot *= 3.5;
                }
                FeatureVector(a)
            })
            .collect();
        let (_, _, t1) = standardize(&vs);
        let (_, _, t2) = standardize(&scaled);
        for (a, b) in t1.iter().zip(&t2) {
            for j in 0..N_FEATURES {
                assert!((a.0[j] - b.0[j]).abs() < 1e-9);
            }
        }
    }

    fn separable_lists(n: usize) -> Vec<(Vec<FeatureVector>, Vec<f64>)> {
        // label-1 items dominate on feature 3
        let mut rng_state = 12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64
        };
        (0..n)
            .map(|_| {
                let len = 4 + (next() * 4.0) as usize;
                let best = (next() * len as f64) as usize % len;
                let vectors = (0..len)
                    .map(|i| {
                        let mut a = [0.0; N_FEATURES];
                        a[3] = if i == best { 0.8 + 0.2 * next() } else { 0.3 * next() };
                        a[1] = next() * 10.0;
                        FeatureVector(a)
                    })
                    .collect();
                let labels = (0..len).map(|i| if i == best { 1.0 } else { 0.0 }).collect();
                (vectors, labels)
            })
            .collect()
    }

    #[test]

    fn listnet_learns_separable_lists() {
        let lists = separable_lists(40);
        let opts = ListnetOptions {
            epochs: 200,
            learning_rate: 0.01,
            seed: 0,
        };
        let (model, history) = listnet_train_traced(&lists, &opts).unwrap();
        assert!(
            history.last().unwrap() < history.first().unwrap(),
            "loss did not decrease"
        );
        let mut top1 = 0;
        for (vectors, labels) in &lists {
            let ranked = rank_with_model(&model, vectors);
            let best = labels.iter().position(|&l| l == 1.0).unwrap();
            if ranked.rank_of(best) == 1 {
                top1 += 1;
            }
        }
        assert!(top1 as f64 / lists.len() as f64 >= 0.95);
    }

    #[test]
    fn zero_epochs_keep_input_order() {
        let lists = separable_lists(5);
        let opts = ListnetOptions {
            epochs: 0,
            learning_rate: 0.1,
            seed: 0,
        };
        let model = listnet_train(&lists, &opts).unwrap();
        assert_eq!(model.weights, [0.0; N_FEATURES]);
        let ranked = rank_with_model(&model, &lists[0].0);
        for (i, item) in ranked.items.iter().enumerate() {
            assert_eq!(item.rank, i + 1);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let lists = separable_lists(10);
        let opts = ListnetOptions {
            epochs: 50,
            learning_rate: 0.01,
            seed: 7,
        };
        let a = listnet_train(&lists, &opts).unwrap();
        let b = listnet_train(&lists, &opts).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn empty_training_set_errors() {
        assert!(listnet_train(&[], &ListnetOptions::default()).is_err());
    }

    #[test]
    fn listnet_loss_shift_invariant() {
        let labels = [1.0, 0.0, 0.0];
        let scores = [0.3, -0.2, 1.1];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 42.0).collect();
        assert!((listnet_loss(&scores, &labels) - listnet_loss(&shifted, &labels)).abs() < 1e-9);
    }

    #[test]
    fn rank_by_scores_tie_break() {
        let list = rank_by_scores(&[0.5, 0.9, 0.5]);
        assert_eq!(list.rank_of(1), 1);
        assert_eq!(list.rank_of(0), 2); // tie with id 2, earlier wins
        assert_eq!(list.rank_of(2), 3);
    }

    #[test]
    fn length_baseline_orders_by_word_count() {
        let cands = vec![
            cand(&vec!["w"; 30].join(" "), 0, "a"),
            cand(&vec!["w"; 20].join(" "), 1, "b"),
            cand(&vec!["w"; 10].join(" "), 2, "c"),
        ];
        let list = baseline_rank(&cands, BaselineKind::Length);
        assert_eq!(list.rank_of(0), 1);
        assert_eq!(list.rank_of(1), 2);
        assert_eq!(list.rank_of(2), 3);
    }

    #[test]
    fn jsd_baseline_prefers_union_like_candidate() {
        let cands = vec![
            cand("alpha beta gamma delta", 0, "a"),
            cand("alpha alpha alpha alpha", 1, "b"),
            cand("beta gamma delta alpha", 2, "c"),
        ];
        let list = baseline_rank(&cands, BaselineKind::Jsd);
        // candidates 0 and 2 have the union distribution exactly; tie-break
        // puts candidate 0 first
        assert_eq!(list.rank_of(0), 1);
        assert_eq!(list.rank_of(2), 2);
        assert_eq!(list.rank_of(1), 3);
    }

    #[test]
    fn random_baseline_is_reproducible_and_a_permutation() {
        let cands: Vec<Candidate> =
            (0..9).map(|i| cand("w x y", i, &format!("u{i}"))).collect();
        let a = baseline_rank(&cands, BaselineKind::Random(99));
        let b = baseline_rank(&cands, BaselineKind::Random(99));
        assert_eq!(a, b);
        let mut ranks: Vec<usize> = a.items.iter().map(|i| i.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn metrics_perfect_and_rank_two() {
        let perfect = rank_by_scores(&[3.0, 2.0, 1.0]);
        let (p1, mrr) = ranking_metrics(&[(perfect, Some(0))]).unwrap();
        assert_eq!((p1, mrr), (1.0, 1.0));

        let second = rank_by_scores(&[3.0, 2.0, 1.0]);
        let (p1, mrr) = ranking_metrics(&[(second, Some(1))]).unwrap();
        assert_eq!((p1, mrr), (0.0, 0.5));
    }

    #[test]
    fn metrics_require_labels() {
        let list = rank_by_scores(&[1.0, 0.0]);
        assert!(ranking_metrics(&[(list, None)]).is_err());
    }

    #[test]
    fn mrr_bounds_p_at_1() {
        let lists: Vec<(RankedList, Option<usize>)> = (0..6)
            .map(|i| (rank_by_scores(&[3.0, 2.0, 1.0]), Some(i % 3)))
            .collect();
        let (p1, mrr) = ranking_metrics(&lists).unwrap();
        assert!(mrr >= p1);
        assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&mrr));
    }

    #[test]
    fn model_file_round_trip() {
        let lists = separable_lists(5);
        let opts = ListnetOptions {
            epochs: 10,
            learning_rate: 0.01,
            seed: 0,
        };
        let model = listnet_train(&lists, &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranker.json");
        model.save(&path).unwrap();
        let loaded = RankModel::load(&path).unwrap();
        assert_eq!(model.weights, loaded.weights);
    }
}
