//! Similarity kernels and the three dissimilarity functions used by content
//! coverage and dispersion.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use crate::corpus::{is_stopword, TermVector};
use crate::error::{Error, Result};
use crate::topics::TopicDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissimilarityKind {
    Lexical,
    Semantic,
    Topical,
}

impl std::str::FromStr for DissimilarityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexical" => Ok(DissimilarityKind::Lexical),
            "semantic" => Ok(DissimilarityKind::Semantic),
            "topical" => Ok(DissimilarityKind::Topical),
            other => Err(Error::Config(format!("unknown dissimilarity: {other}"))),
        }
    }
}

impl std::fmt::Display for DissimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DissimilarityKind::Lexical => "lexical",
            DissimilarityKind::Semantic => "semantic",
            DissimilarityKind::Topical => "topical",
        };
        f.write_str(s)
    }
}

/// Undirected synonym/hypernym word graph backing the WordNet-style
/// shortest-path similarity.
#[derive(Debug, Clone)]
pub struct SynsetGraph {
    adjacency: HashMap<String, HashSet<String>>,
    pub max_path: usize,
}

pub const DEFAULT_MAX_PATH: usize = 6;

impl SynsetGraph {
    pub fn new(max_path: usize) -> SynsetGraph {
        assert!(max_path >= 1);
        SynsetGraph {
            adjacency: HashMap::new(),
            max_path,
        }
    }

    pub fn add_edge(&mut self, a: &str, b: &str) {
        let a = a.to_lowercase();
        let b = b.to_lowercase();
        self.adjacency
            .entry(a.clone())
            .or_default()
            .insert(b.clone());
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.adjacency.contains_key(word)
    }

    /// Load a `term<TAB>term` undirected edge list.
    pub fn load(path: impl AsRef<Path>, max_path: usize) -> Result<SynsetGraph> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut graph = SynsetGraph::new(max_path);
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let a = parts.next().unwrap_or("");
            let b = parts.next().ok_or_else(|| Error::MalformedRecord {
                line: idx + 1,
                message: format!("{}: expected term<TAB>term", path.display()),
            })?;
            graph.add_edge(a.trim(), b.trim());
        }
        Ok(graph)
    }

    /// BFS shortest path length, capped at `max_path`.
    pub fn path_len(&self, from: &str, to: &str) -> Option<usize> {
        if from == to {
            return if self.contains(from) { Some(0) } else { None };
        }
        if !self.contains(from) || !self.contains(to) {
            return None;
        }
        let mut seen: HashSet<&str> = HashSet::new();
        let mut queue: VecDeque<(&str, usize)> = VecDeque::new();
        seen.insert(from);
        queue.push_back((from, 0));
        while let Some((node, dist)) = queue.pop_front() {
            if dist >= self.max_path {
                continue;
            }
            if let Some(neighbors) = self.adjacency.get(node) {
                for next in neighbors {
                    if next == to {
                        return Some(dist + 1);
                    }
                    if seen.insert(next) {
                        queue.push_back((next, dist + 1));
                    }
                }
            }
        }
        None
    }
}

/// Cosine similarity of TFIDF vectors; 0 when either norm is 0.
pub fn cosine_tfidf(u: &TermVector, v: &TermVector) -> f64 {
    if u.is_zero() || v.is_zero() {
        return 0.0;
    }
    let (small, large) = if u.weights.len() <= v.weights.len() {
        (u, v)
    } else {
        (v, u)
    };
    let mut dot = 0.0;
    for (t, w) in &small.weights {
        if let Some(w2) = large.weights.get(t) {
            dot += w * w2;
        }
    }
    (dot / (u.norm * v.norm)).clamp(0.0, 1.0)
}

/// Shortest-path word similarity scaled onto [0,1] as 1/(1+L);
/// 0 when either word is absent or no path exists within `max_path`.
pub fn wn_word_sim(graph: &SynsetGraph, w1: &str, w2: &str) -> f64 {
    match graph.path_len(w1, w2) {
        Some(len) => 1.0 / (1.0 + len as f64),
        None => 0.0,
    }
}

/// (head, modifier) pairs approximated as adjacent content-word bigrams
/// after stopword removal.
pub fn extract_relations(tokens: &[String]) -> Vec<(String, String)> {
    let content: Vec<&String> = tokens.iter().filter(|t| !is_stopword(t)).collect();
    content
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

/// Mean over relation pairs of WN(head,head) * WN(mod,mod);
/// 0 when either sentence yields no relations.
pub fn semantic_sim(u_tokens: &[String], v_tokens: &[String], graph: &SynsetGraph) -> f64 {
    let rel_u = extract_relations(u_tokens);
    let rel_v = extract_relations(v_tokens);
    if rel_u.is_empty() || rel_v.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (a_i, b_i) in &rel_u {
        for (a_j, b_j) in &rel_v {
            sum += wn_word_sim(graph, a_i, a_j) * wn_word_sim(graph, b_i, b_j);
        }
    }
    (sum / (rel_u.len() * rel_v.len()) as f64).clamp(0.0, 1.0)
}

/// Jensen-Shannon divergence with log base 2 over two aligned probability
/// vectors; in [0,1], with 0*log0 taken as 0.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut div = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            div += 0.5 * pi * (pi / mi).log2();
        }
        if qi > 0.0 {
            div += 0.5 * qi * (qi / mi).log2();
        }
    }
    div.clamp(0.0, 1.0)
}

/// Per-sentence artifacts the selected dissimilarity kind draws on.
pub struct DissimilarityContext<'a> {
    pub term_vectors: Option<&'a [TermVector]>,
    pub token_lists: Option<&'a [Vec<String>]>,
    pub graph: Option<&'a SynsetGraph>,
    pub thetas: Option<&'a [TopicDistribution]>,
}

/// Pairwise dissimilarity d'(u,v) in [0,1] for sentence indices u, v.
pub fn dissimilarity(
    u: usize,
    v: usize,
    kind: DissimilarityKind,
    ctx: &DissimilarityContext,
) -> Result<f64> {
    match kind {
        DissimilarityKind::Lexical => {
            let vectors = ctx.term_vectors.ok_or_else(|| {
                Error::Config("lexical dissimilarity needs TFIDF vectors".into())
            })?;
            Ok(1.0 - cosine_tfidf(&vectors[u], &vectors[v]))
        }
        DissimilarityKind::Semantic => {
            let tokens = ctx.token_lists.ok_or_else(|| {
                Error::Config("semantic dissimilarity needs token lists".into())
            })?;
            let graph = ctx
                .graph
                .ok_or_else(|| Error::Config("semantic dissimilarity needs a synset graph".into()))?;
            Ok(1.0 - semantic_sim(&tokens[u], &tokens[v], graph))
        }
        DissimilarityKind::Topical => {
            let thetas = ctx.thetas.ok_or_else(|| {
                Error::Config("topical dissimilarity needs topic distributions".into())
            })?;
            Ok(jsd(&thetas[u].theta, &thetas[v].theta))
        }
    }
}
