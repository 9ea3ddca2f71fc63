//! Thread ingestion, sentence splitting, tokenization, and TFIDF statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopwords shared by the features that call for content words
/// (sumBasic, topic signatures, centroid) and by LDA preprocessing.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
    "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "just", "me", "more", "most", "my", "of", "off",
    "on", "once", "only", "or", "other", "our", "out", "over", "own", "s", "same", "she", "so",
    "some", "such", "t", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would",
    "you", "your", "yours",
];

pub fn is_stopword(term: &str) -> bool {
    STOPWORDS.binary_search(&term).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Qa,
    Blog,
}

impl std::str::FromStr for Genre {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qa" => Ok(Genre::Qa),
            "blog" => Ok(Genre::Blog),
            other => Err(Error::Config(format!("unknown genre: {other}"))),
        }
    }
}

/// One posted answer (qa) or input document sentence block (blog).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub author: String,
    /// Order of posting, 0-based.
    pub position: usize,
    /// User-voted best answer marker; meaningful for qa threads only.
    pub is_best: bool,
    pub text: String,
}

/// A question thread (qa) or topic document set (blog).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub id: String,
    pub query: String,
    pub genre: Genre,
    pub answers: Vec<Answer>,
}

impl Thread {
    /// Index of the best answer, if one is marked.
    pub fn best_answer(&self) -> Option<usize> {
        self.answers.iter().position(|a| a.is_best)
    }

    fn validate(&self, line: usize) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                message: "empty thread id".into(),
            });
        }
        if self.answers.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                message: format!("thread {} has no answers", self.id),
            });
        }
        if self.answers.iter().filter(|a| a.is_best).count() > 1 {
            return Err(Error::MalformedRecord {
                line,
                message: format!("thread {} has multiple best answers", self.id),
            });
        }
        let mut seen = HashSet::new();
        for a in &self.answers {
            if a.author != "anonymous" && !seen.insert(a.author.as_str()) {
                return Err(Error::MalformedRecord {
                    line,
                    message: format!("thread {} repeats author {}", self.id, a.author),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct AnswerRecord {
    author: String,
    text: String,
    #[serde(default, skip_serializing_if = "is_false")]
    is_best: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

#[derive(Serialize, Deserialize)]
struct ThreadRecord {
    id: String,
    query: String,
    #[serde(default)]
    genre: Option<Genre>,
    answers: Vec<AnswerRecord>,
}

/// One candidate unit for summary selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub thread_id: String,
    pub answer_index: usize,
    pub author: String,
    pub tokens: Vec<String>,
    pub raw: String,
    /// Token count before stopword removal.
    pub word_count: usize,
    pub char_count_nonwhite: usize,
}

/// Lowercase, split on non-alphanumerics, keep tokens of length >= 1.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

const ABBREVIATIONS: &[&str] = &[
    "co", "dr", "etc", "fig", "inc", "jr", "ltd", "mr", "mrs", "ms", "prof", "sr", "st", "vs",
];

fn is_abbreviation(prefix: &[char]) -> bool {
    let word: String = prefix
        .iter()
        .rev()
        .take_while(|c| c.is_alphabetic())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if word.chars().count() == 1 {
        // Initials such as "J. Smith" and dotted abbreviations like "e.g."
        return true;
    }
    ABBREVIATIONS
        .binary_search(&word.to_lowercase().as_str())
        .is_ok()
}

/// Rule-based splitter: break on [.?!] runs followed by whitespace and an
/// uppercase letter or digit, unless the preceding token is an abbreviation.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c == '?' || c == '!' {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '.' | '?' | '!' | '"' | '\'' | ')') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            let saw_ws = k > j;
            let next_ok = k < chars.len() && (chars[k].is_uppercase() || chars[k].is_ascii_digit());
            let abbrev = c == '.' && is_abbreviation(&chars[..i]);
            if saw_ws && next_ok && !abbrev {
                let piece: String = chars[start..j].iter().collect();
                let piece = piece.trim().to_string();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = k;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim().to_string();
    if !tail.is_empty() {
        out.push(tail);
    }
    out.retain(|s| s.chars().any(|c| c.is_alphanumeric()));
    out
}

/// Split a thread into its candidate sentence set V, preserving
/// (answer position, in-answer position) order.
pub fn sentence_split(thread: &Thread) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    for answer in &thread.answers {
        for raw in split_sentences(&answer.text) {
            let tokens = tokenize(&raw);
            if tokens.is_empty() {
                continue;
            }
            sentences.push(Sentence {
                id: sentences.len(),
                thread_id: thread.id.clone(),
                answer_index: answer.position,
                author: answer.author.clone(),
                word_count: tokens.len(),
                char_count_nonwhite: raw.chars().filter(|c| !c.is_whitespace()).count(),
                tokens,
                raw,
            });
        }
    }
    sentences
}

fn mean_answer_words(thread: &Thread) -> f64 {
    let total: usize = thread
        .answers
        .iter()
        .map(|a| a.text.split_whitespace().count())
        .sum();
    total as f64 / thread.answers.len() as f64
}

/// Keep threads with at least 5 answers whose mean length exceeds 20 words.
pub fn passes_qa_filter(thread: &Thread) -> bool {
    thread.answers.len() >= 5 && mean_answer_words(thread) > 20.0
}

/// Read line-delimited thread records. Malformed lines fail fast with the
/// offending line number; an empty file yields an empty sequence.
pub fn ingest(path: impl AsRef<Path>, genre: Genre, filter_qa: bool) -> Result<Vec<Thread>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut threads = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ThreadRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let thread = Thread {
            id: record.id,
            query: record.query,
            genre: record.genre.unwrap_or(genre),
            answers: record
                .answers
                .into_iter()
                .enumerate()
                .map(|(position, a)| Answer {
                    author: a.author,
                    position,
                    is_best: a.is_best,
                    text: a.text,
                })
                .collect(),
        };
        thread.validate(line_no)?;
        if filter_qa && !passes_qa_filter(&thread) {
            continue;
        }
        threads.push(thread);
    }
    Ok(threads)
}

/// Serialize threads in the same line-delimited format `ingest` reads.
pub fn write_threads(threads: &[Thread], mut out: impl Write) -> Result<()> {
    for t in threads {
        let record = ThreadRecord {
            id: t.id.clone(),
            query: t.query.clone(),
            genre: Some(t.genre),
            answers: t
                .answers
                .iter()
                .map(|a| AnswerRecord {
                    author: a.author.clone(),
                    text: a.text.clone(),
                    is_best: a.is_best,
                })
                .collect(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::InvalidInput(format!("serialize thread {}: {e}", t.id)))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

/// Sparse weighted bag of unigrams or bigrams. Weights live in a BTreeMap
/// so every float accumulation over them has a stable order (bit-for-bit
/// reproducible runs).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermVector {
    pub weights: BTreeMap<String, f64>,
    pub norm: f64,
}

impl TermVector {
    pub fn new(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        let weights: BTreeMap<String, f64> =
            weights.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    /// Mean of a set of vectors (used for cluster centroids).
    pub fn centroid(vectors: &[&TermVector]) -> TermVector {
        let mut sums: HashMap<String, f64> = HashMap::new();
        for v in vectors {
            for (t, w) in &v.weights {
                *sums.entry(t.clone()).or_insert(0.0) += w;
            }
        }
        let n = vectors.len().max(1) as f64;
        TermVector::new(sums.into_iter().map(|(t, w)| (t, w / n)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ngram {
    Uni,
    Bi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Tf,
    Tfidf,
}

pub fn bigrams(tokens: &[String]) -> Vec<String> {
    tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect()
}

/// Vocabulary, document frequencies (unigram and bigram), and the background
/// unigram distribution of a document collection.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    pub vocabulary: HashMap<String, usize>,
    pub document_frequency: HashMap<String, usize>,
    pub n_documents: usize,
    pub background_unigram: HashMap<String, f64>,
    /// Total unigram token count behind `background_unigram`; kept so the
    /// topic-signature log-likelihood ratio can recover counts.
    pub background_tokens: f64,
}

impl CorpusStats {
    pub fn build(docs: &[Vec<String>]) -> CorpusStats {
        let mut vocabulary = HashMap::new();
        let mut document_frequency: HashMap<String, usize> = HashMap::new();
        let mut counts: HashMap<String, f64> = HashMap::new();
        let mut total = 0.0;
        for doc in docs {
            let mut seen: HashSet<String> = HashSet::new();
            for t in doc {
                let next = vocabulary.len();
                vocabulary.entry(t.clone()).or_insert(next);
                *counts.entry(t.clone()).or_insert(0.0) += 1.0;
                total += 1.0;
                seen.insert(t.clone());
            }
            for b in bigrams(doc) {
                seen.insert(b);
            }
            for t in seen {
                *document_frequency.entry(t).or_insert(0) += 1;
            }
        }
        let background_unigram = counts
            .iter()
            .map(|(t, c)| (t.clone(), if total > 0.0 { c / total } else { 0.0 }))
            .collect();
        CorpusStats {
            vocabulary,
            document_frequency,
            n_documents: docs.len(),
            background_unigram,
            background_tokens: total,
        }
    }

    /// Replace the background distribution with one estimated over a wider
    /// collection (e.g. the whole training corpus instead of one thread).
    pub fn with_background(mut self, counts: &HashMap<String, f64>) -> CorpusStats {
        let total: f64 = counts.values().sum();
        if total > 0.0 {
            self.background_unigram = counts
                .iter()
                .map(|(t, c)| (t.clone(), c / total))
                .collect();
            self.background_tokens = total;
        }
        self
    }

    /// Smoothed inverse document frequency, ln((1+N)/(1+df)).
    pub fn idf(&self, term: &str) -> f64 {
        let df = *self.document_frequency.get(term).unwrap_or(&0) as f64;
        ((1.0 + self.n_documents as f64) / (1.0 + df)).ln()
    }
}

/// Build a TF or TFIDF term vector over unigrams or bigrams.
pub fn tfidf_vector(
    tokens: &[String],
    stats: &CorpusStats,
    ngram: Ngram,
    scheme: WeightScheme,
) -> TermVector {
    let terms: Vec<String> = match ngram {
        Ngram::Uni => tokens.to_vec(),
        Ngram::Bi => bigrams(tokens),
    };
    let mut tf: HashMap<String, f64> = HashMap::new();
    for t in terms {
        *tf.entry(t).or_insert(0.0) += 1.0;
    }
    let weights = match scheme {
        WeightScheme::Tf => tf,
        WeightScheme::Tfidf => tf
            .into_iter()
            .map(|(t, f)| {
                let idf = stats.idf(&t);
                (t, f * idf)
            })
            .collect(),
    };
    TermVector::new(weights)
}
