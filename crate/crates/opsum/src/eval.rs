//! Automatic evaluation: JSD against the reference collection and native
//! ROUGE-2 / ROUGE-SU4 scorers (no stemming, no stopword removal).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::jsd;

/// JSD (log base 2, no smoothing) between the unigram distributions of the
/// summary and the reference collection over their union vocabulary.
pub fn jsd_eval(summary_tokens: &[String], reference_tokens: &[String]) -> Result<f64> {
    if summary_tokens.is_empty() {
        return Err(Error::InvalidInput(
            "empty summary has no unigram distribution".into(),
        ));
    }
    if reference_tokens.is_empty() {
        return Err(Error::InvalidInput(
            "empty reference collection has no unigram distribution".into(),
        ));
    }
    let mut p_counts: HashMap<&str, f64> = HashMap::new();
    for t in summary_tokens {
        *p_counts.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    let mut q_counts: HashMap<&str, f64> = HashMap::new();
    for t in reference_tokens {
        *q_counts.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    let mut vocab: Vec<&str> = p_counts
        .keys()
        .chain(q_counts.keys())
        .copied()
        .collect::<HashSet<&str>>()
        .into_iter()
        .collect();
    vocab.sort_unstable();
    let np = summary_tokens.len() as f64;
    let nq = reference_tokens.len() as f64;
    let mut p = Vec::with_capacity(vocab.len());
    let mut q = Vec::with_capacity(vocab.len());
    for t in vocab {
        p.push(p_counts.get(t).copied().unwrap_or(0.0) / np);
        q.push(q_counts.get(t).copied().unwrap_or(0.0) / nq);
    }
    Ok(jsd(&p, &q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rouge {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Rouge {
    fn from_counts(matches: f64, candidate_total: f64, reference_total: f64) -> Rouge {
        let precision = if candidate_total > 0.0 { matches / candidate_total } else { 0.0 };
        let recall = if reference_total > 0.0 { matches / reference_total } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Rouge { precision, recall, f1 }
    }
}

fn count_grams<'a>(grams: impl Iterator<Item = (&'a str, &'a str)>) -> HashMap<(&'a str, &'a str), f64> {
    let mut counts = HashMap::new();
    for g in grams {
        *counts.entry(g).or_insert(0.0) += 1.0;
    }
    counts
}

fn bigram_pairs(tokens: &[String]) -> impl Iterator<Item = (&str, &str)> {
    tokens.windows(2).map(|w| (w[0].as_str(), w[1].as_str()))
}

fn clipped_matches(
    candidate: &HashMap<(&str, &str), f64>,
    reference: &HashMap<(&str, &str), f64>,
) -> f64 {
    candidate
        .iter()
        .map(|(g, c)| c.min(reference.get(g).copied().unwrap_or(0.0)))
        .sum()
}

/// ROUGE-2: clipped bigram matches micro-averaged over the references.
pub fn rouge2(candidate: &[String], references: &[Vec<String>]) -> Result<Rouge> {
    if references.is_empty() {
        return Err(Error::InvalidInput("ROUGE needs at least one reference".into()));
    }
    let cand = count_grams(bigram_pairs(candidate));
    let cand_total: f64 = cand.values().sum();
    let mut matches = 0.0;
    let mut ref_total = 0.0;
    for reference in references {
        let rf = count_grams(bigram_pairs(reference));
        ref_total += rf.values().sum::<f64>();
        matches += clipped_matches(&cand, &rf);
    }
    Ok(Rouge::from_counts(
        matches,
        cand_total * references.len() as f64,
        ref_total,
    ))
}

/// Skip-bigrams with gap <= 4 pooled with unigrams. Unigrams are encoded
/// as pairs with an empty second component so the two count spaces stay
/// distinct.
fn su4_grams(tokens: &[String]) -> HashMap<(&str, &str), f64> {
    let mut counts: HashMap<(&str, &str), f64> = HashMap::new();
    for (i, a) in tokens.iter().enumerate() {
        *counts.entry((a.as_str(), "")).or_insert(0.0) += 1.0;
        for j in (i + 1)..tokens.len().min(i + 5) {
            *counts.entry((a.as_str(), tokens[j].as_str())).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// ROUGE-SU4: skip-bigram (gap <= 4) plus unigram overlap.
pub fn rouge_su4(candidate: &[String], references: &[Vec<String>]) -> Result<Rouge> {
    if references.is_empty() {
        return Err(Error::InvalidInput("ROUGE needs at least one reference".into()));
    }
    let cand = su4_grams(candidate);
    let cand_total: f64 = cand.values().sum();
    let mut matches = 0.0;
    let mut ref_total = 0.0;
    for reference in references {
        let rf = su4_grams(reference);
        ref_total += rf.values().sum::<f64>();
        matches += clipped_matches(&cand, &rf);
    }
    Ok(Rouge::from_counts(
        matches,
        cand_total * references.len() as f64,
        ref_total,
    ))
}

/// Per-thread or aggregate metric values; ROUGE and ranking metrics are
/// present only when references / labels exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub jsd: f64,
    pub rouge2: Option<Rouge>,
    pub rouge_su4: Option<Rouge>,
    pub p_at_1: Option<f64>,
    pub mrr: Option<f64>,
}

impl MetricsReport {
    /// Macro-average across per-thread reports.
    pub fn aggregate(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let mean_rouge = |f: &dyn Fn(&MetricsReport) -> Option<Rouge>| {
            let values: Vec<Rouge> = reports.iter().filter_map(f).collect();
            if values.len() == reports.len() {
                let k = values.len() as f64;
                Some(Rouge {
                    precision: values.iter().map(|r| r.precision).sum::<f64>() / k,
                    recall: values.iter().map(|r| r.recall).sum::<f64>() / k,
                    f1: values.iter().map(|r| r.f1).sum::<f64>() / k,
                })
            } else {
                None
            }
        };
        Some(MetricsReport {
            jsd: mean(&|r| r.jsd),
            rouge2: mean_rouge(&|r| r.rouge2),
            rouge_su4: mean_rouge(&|r| r.rouge_su4),
            p_at_1: None,
            mrr: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn jsd_eval_identity_and_disjoint() {
        let all = toks("a b c a");
        assert_eq!(jsd_eval(&all, &all).unwrap(), 0.0);
        let d = jsd_eval(&toks("a b"), &toks("c d")).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jsd_eval_hand_fixture() {
        // P = [.5, .5, 0], Q = [0, .5, .5] over vocab {a, b, c}
        let d = jsd_eval(&toks("a b"), &toks("b c")).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jsd_eval_empty_errors() {
        assert!(jsd_eval(&[], &toks("a")).is_err());
        assert!(jsd_eval(&toks("a"), &[]).is_err());
    }

    #[test]
    fn jsd_eval_symmetric() {
        let a = toks("x y z x");
        let b = toks("y z w");
        let d1 = jsd_eval(&a, &b).unwrap();
        let d2 = jsd_eval(&b, &a).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn rouge2_hand_count() {
        // candidate "the cat sat" vs reference "the cat ran": overlap {the cat}
        let r = rouge2(&toks("the cat sat"), &[toks("the cat ran")]).unwrap();
        assert!((r.precision - 0.5).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
        assert!((r.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rouge2_identity_and_disjoint() {
        let c = toks("a b c d");
        let r = rouge2(&c, &[c.clone()]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        let z = rouge2(&toks("a b"), &[toks("x y")]).unwrap();
        assert_eq!((z.precision, z.recall, z.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge2_short_reference_contributes_zero_bigrams() {
        let r = rouge2(&toks("a b"), &[toks("a")]).unwrap();
        assert_eq!(r.recall, 0.0);
    }

    #[test]
    fn su4_gram_enumeration() {
        let tokens = toks("a b c");
        let grams = su4_grams(&tokens);
        // unigrams {a, b, c} plus skip-bigrams {(a,b), (a,c), (b,c)}
        assert_eq!(grams.len(), 6);
        assert_eq!(grams[&("a", "")], 1.0);
        assert_eq!(grams[&("a", "c")], 1.0);
        let total: f64 = grams.values().sum();
        assert_eq!(total, 6.0);
    }

    #[test]
    fn su4_gap_is_capped_at_four() {
        let tokens = toks("a b c d e f");
        let grams = su4_grams(&tokens);
        assert!(grams.contains_key(&("a", "e"))); // gap 4
        assert!(!grams.contains_key(&("a", "f"))); // gap 5
    }

    #[test]
    fn rouge_su4_identity() {
        let c = toks("one two three four five");
        let r = rouge_su4(&c, &[c.clone()]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge_references_required() {
        assert!(rouge2(&toks("a"), &[]).is_err());
        assert!(rouge_su4(&toks("a"), &[]).is_err());
    }

    #[test]
    fn aggregate_is_macro_average() {
        let mk = |jsd: f64| MetricsReport {
            jsd,
            rouge2: Some(Rouge { precision: jsd, recall: jsd, f1: jsd }),
            rouge_su4: None,
            p_at_1: None,
            mrr: None,
        };
        let agg = MetricsReport::aggregate(&[mk(0.2), mk(0.4)]).unwrap();
        assert!((agg.jsd - 0.3).abs() < 1e-12);
        assert!((agg.rouge2.unwrap().f1 - 0.3).abs() < 1e-12);
        assert!(agg.rouge_su4.is_none());
    }
}
