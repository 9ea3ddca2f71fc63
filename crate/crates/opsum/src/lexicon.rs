//! Sentiment lexicon loading/merging and sentence polarity with negation.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// Merged sentiment lexicon; terms with conflicting polarity across the
/// source tables are removed at merge time.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    polarity: HashMap<String, Polarity>,
    negators: HashSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarityValue {
    Positive,
    Negative,
    Neutral,
}

/// Sentence-level polarity label from sentiment-word counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarityLabel {
    pub value: PolarityValue,
    pub pos_count: usize,
    pub neg_count: usize,
}

pub fn merge_lexicons(
    sources: &[Vec<(String, Polarity)>],
    negators: HashSet<String>,
) -> Result<SentimentLexicon> {
    let mut polarity: HashMap<String, Polarity> = HashMap::new();
    let mut conflicted: HashSet<String> = HashSet::new();
    for source in sources {
        for (term, pol) in source {
            let term = term.to_lowercase();
            match polarity.get(&term) {
                Some(existing) if *existing != *pol => {
                    conflicted.insert(term);
                }
                Some(_) => {}
                None => {
                    polarity.insert(term, *pol);
                }
            }
        }
    }
    for term in &conflicted {
        polarity.remove(term);
    }
    if polarity.is_empty() {
        return Err(Error::InvalidInput(
            "merged sentiment lexicon is empty".into(),
        ));
    }
    Ok(SentimentLexicon { polarity, negators })
}

impl SentimentLexicon {
    pub fn polarity_of(&self, term: &str) -> Option<Polarity> {
        self.polarity.get(term).copied()
    }

    pub fn is_negator(&self, term: &str) -> bool {
        self.negators.contains(term)
    }

    pub fn is_sentiment_word(&self, term: &str) -> bool {
        self.polarity.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }

    /// Load all lexicon tables in a directory. `negators.txt` holds one
    /// negator per line; every other file is a `term<TAB>pos|neg` table.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<SentimentLexicon> {
        let dir = dir.as_ref();
        let mut sources = Vec::new();
        let mut negators = HashSet::new();
        let entries =
            fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            if path.file_name().and_then(|n| n.to_str()) == Some("negators.txt") {
                negators.extend(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(|l| l.to_lowercase()),
                );
            } else {
                let mut table = Vec::new();
                for (idx, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    let mut parts = line.splitn(2, '\t');
                    let term = parts.next().unwrap_or("");
                    let pol = parts.next().ok_or_else(|| Error::MalformedRecord {
                        line: idx + 1,
                        message: format!("{}: expected term<TAB>pos|neg", path.display()),
                    })?;
                    let pol = match pol.trim() {
                        "pos" => Polarity::Positive,
                        "neg" => Polarity::Negative,
                        other => {
                            return Err(Error::MalformedRecord {
                                line: idx + 1,
                                message: format!("{}: unknown polarity {other}", path.display()),
                            })
                        }
                    };
                    table.push((term.to_string(), pol));
                }
                sources.push(table);
            }
        }
        merge_lexicons(&sources, negators)
    }
}

/// Count sentiment tokens. Each negator reverses the nearest sentiment
/// token within `window` tokens to its right; a sentiment token is flipped
/// at most once.
pub fn sentence_polarity(
    tokens: &[String],
    lex: &SentimentLexicon,
    window: usize,
) -> PolarityLabel {
    assert!(window >= 1, "negation window must be >= 1");
    let mut flipped = vec![false; tokens.len()];
    for (i, tok) in tokens.iter().enumerate() {
        if lex.is_negator(tok) {
            let hi = tokens.len().min(i + window + 1);
            for j in (i + 1)..hi {
                if lex.polarity_of(&tokens[j]).is_some() {
                    flipped[j] = true;
                    break;
                }
            }
        }
    }
    let mut pos_count = 0;
    let mut neg_count = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(pol) = lex.polarity_of(tok) {
            let effective = if flipped[i] { pol.flipped() } else { pol };
            match effective {
                Polarity::Positive => pos_count += 1,
                Polarity::Negative => neg_count += 1,
            }
        }
    }
    let value = match pos_count.cmp(&neg_count) {
        std::cmp::Ordering::Greater => PolarityValue::Positive,
        std::cmp::Ordering::Less => PolarityValue::Negative,
        std::cmp::Ordering::Equal => PolarityValue::Neutral,
    };
    PolarityLabel {
        value,
        pos_count,
        neg_count,
    }
}
