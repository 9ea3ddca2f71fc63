//! Budgeted greedy maximization of the summary objective, plus the
//! TFIDF + lexicon baseline summarizer.

use serde::{Deserialize, Serialize};

use crate::corpus::{tfidf_vector, CorpusStats, Ngram, Sentence, WeightScheme};
use crate::error::{Error, Result};
use crate::lexicon::SentimentLexicon;
use crate::objective::{full_objective, ObjectiveContext, ObjectiveSpec};
use crate::similarity::cosine_tfidf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Words,
    NonwhiteChars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub kind: BudgetKind,
    pub limit: usize,
}

impl Budget {
    pub fn new(kind: BudgetKind, limit: usize) -> Result<Budget> {
        if limit == 0 {
            return Err(Error::Config("budget limit must be positive".into()));
        }
        Ok(Budget { kind, limit })
    }

    /// Cost of one sentence under this budget: whitespace-delimited tokens
    /// of the raw text, or non-whitespace characters.
    pub fn cost(&self, sentence: &Sentence) -> usize {
        match self.kind {
            BudgetKind::Words => sentence.raw.split_whitespace().count(),
            BudgetKind::NonwhiteChars => sentence.char_count_nonwhite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub candidate: usize,
    pub gain: f64,
}

/// Greedy selection output: sentence ids in selection order plus the
/// per-step gain trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sentence_ids: Vec<usize>,
    pub total_cost: usize,
    pub objective_value: f64,
    pub trace: Vec<TraceStep>,
}

impl Summary {
    pub fn empty() -> Summary {
        Summary {
            sentence_ids: Vec::new(),
            total_cost: 0,
            objective_value: 0.0,
            trace: Vec::new(),
        }
    }
}

/// Render the selected sentences in selection order, grouped by source
/// answer with bullet separators.
pub fn render_summary(summary: &Summary, sentences: &[Sentence]) -> String {
    let mut out = String::new();
    let mut last_answer: Option<usize> = None;
    for &id in &summary.sentence_ids {
        let s = &sentences[id];
        if last_answer == Some(s.answer_index) {
            out.push(' ');
        } else {
            if last_answer.is_some() {
                out.push('\n');
            }
            out.push_str("- ");
            last_answer = Some(s.answer_index);
        }
        out.push_str(&s.raw);
    }
    out
}

/// Budgeted greedy: at each step add the feasible sentence maximizing
/// F(S ∪ {s}); ties go to the better (lower) rank, then the lower id.
/// Sentences too costly for the remaining budget are skipped, not
/// terminal.
pub fn greedy_summarize(
    sentences: &[Sentence],
    ctx: &ObjectiveContext,
    spec: &ObjectiveSpec,
    budget: Budget,
) -> Result<Summary> {
    spec.validate()?;
    if sentences.is_empty() {
        return Ok(Summary::empty());
    }
    if sentences.len() != ctx.len() {
        return Err(Error::InvalidInput(format!(
            "context covers {} sentences but V has {}",
            ctx.len(),
            sentences.len()
        )));
    }

    let costs: Vec<usize> = sentences.iter().map(|s| budget.cost(s)).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut in_summary = vec![false; sentences.len()];
    let mut total_cost = 0usize;
    let mut current_value = 0.0;
    let mut trace = Vec::new();

    loop {
        let mut best: Option<(usize, f64)> = None;
        for id in 0..sentences.len() {
            if in_summary[id] || total_cost + costs[id] > budget.limit {
                continue;
            }
            selected.push(id);
            let value = full_objective(&selected, ctx, spec)?;
            selected.pop();
            let better = match best {
                None => true,
                Some((best_id, best_value)) => {
                    value > best_value
                        || (value == best_value
                            && (ctx.ranks[id], id) < (ctx.ranks[best_id], best_id))
                }
            };
            if better {
                best = Some((id, value));
            }
        }
        match best {
            Some((id, value)) => {
                selected.push(id);
                in_summary[id] = true;
                total_cost += costs[id];
                trace.push(TraceStep {
                    candidate: id,
                    gain: value - current_value,
                });
                current_value = value;
            }
            None => break,
        }
    }

    Ok(Summary {
        sentence_ids: selected,
        total_cost,
        objective_value: current_value,
        trace,
    })
}

/// Rank sentences by unigram-TFIDF cosine with the query, then select the
/// ones containing at least one sentiment word, in order, under the budget.
pub fn tfidf_lexicon_baseline(
    sentences: &[Sentence],
    query_tokens: &[String],
    lex: &SentimentLexicon,
    stats: &CorpusStats,
    budget: Budget,
) -> Summary {
    let query_vec = tfidf_vector(query_tokens, stats, Ngram::Uni, WeightScheme::Tfidf);
    let mut scored: Vec<(usize, f64)> = sentences
        .iter()
        .map(|s| {
            let v = tfidf_vector(&s.tokens, stats, Ngram::Uni, WeightScheme::Tfidf);
            (s.id, cosine_tfidf(&v, &query_vec))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut summary = Summary::empty();
    for (id, score) in scored {
        let s = &sentences[id];
        if !s.tokens.iter().any(|t| lex.is_sentiment_word(t)) {
            continue;
        }
        let cost = budget.cost(s);
        if summary.total_cost + cost > budget.limit {
            continue;
        }
        summary.total_cost += cost;
        summary.sentence_ids.push(id);
        summary.trace.push(TraceStep {
            candidate: id,
            gain: score,
        });
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::lexicon::{merge_lexicons, Polarity};
    use crate::objective::{DispersionForm, Partition};
    use crate::similarity::DissimilarityKind;
    use std::collections::HashSet;

    fn sentence(id: usize, text: &str) -> Sentence {
        let tokens = tokenize(text);
        Sentence {
            id,
            thread_id: "t".into(),
            answer_index: id,
            author: format!("u{id}"),
            word_count: tokens.len(),
            char_count_nonwhite: text.chars().filter(|c| !c.is_whitespace()).count(),
            tokens,
            raw: text.to_string(),
        }
    }

    fn ctx_for(n: usize, dissim: Vec<Vec<f64>>) -> ObjectiveContext {
        let sim = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.3 }).collect())
            .collect();
        ObjectiveContext::new(
            (1..=n).collect(),
            Partition::from_assignments((0..n).map(|i| (i, i % 2))),
            Partition::from_assignments((0..n).map(|i| (i, i))),
            Partition::default(),
            sim,
            dissim,
        )
    }

    fn uniform_dissim(n: usize, d: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { d }).collect())
            .collect()
    }

    #[test]
    fn exhausts_v_when_budget_allows() {
        let sentences: Vec<Sentence> =
            (0..4).map(|i| sentence(i, "three word sentence")).collect();
        let ctx = ctx_for(4, uniform_dissim(4, 0.5));
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::Words, 1000).unwrap();
        let summary = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        let ids: HashSet<usize> = summary.sentence_ids.iter().copied().collect();
        assert_eq!(ids.len(), 4);
        assert_eq!(summary.total_cost, 12);
    }

    #[test]
    fn empty_v_gives_empty_summary() {
        let ctx = ctx_for(0, vec![]);
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::Words, 10).unwrap();
        let summary = greedy_summarize(&[], &ctx, &spec, budget).unwrap();
        assert_eq!(summary, Summary::empty());
    }

    #[test]
    fn never_exceeds_budget() {
        let sentences: Vec<Sentence> =
            (0..6).map(|i| sentence(i, "one two three four five")).collect();
        let ctx = ctx_for(6, uniform_dissim(6, 0.4));
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::Words, 12).unwrap();
        let summary = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        assert!(summary.total_cost <= 12);
        assert_eq!(summary.sentence_ids.len(), 2);
    }

    #[test]
    fn char_budget_counts_nonwhite() {
        let sentences = vec![sentence(0, "ab cd"), sentence(1, "efg h")];
        let ctx = ctx_for(2, uniform_dissim(2, 0.4));
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::NonwhiteChars, 4).unwrap();
        let summary = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        assert_eq!(summary.sentence_ids.len(), 1);
        assert_eq!(summary.total_cost, 4);
    }

    #[test]
    fn duplicate_sentence_deferred_under_min_dispersion() {
        // ids 0 and 1 are duplicates (d' = 0); with delta > 0 and h_min,
        // selecting both zeroes the dispersion term, so a distinct sentence
        // is preferred after the first duplicate.
        let mut dissim = uniform_dissim(3, 0.8);
        dissim[0][1] = 0.0;
        dissim[1][0] = 0.0;
        let sentences: Vec<Sentence> = (0..3).map(|i| sentence(i, "w w w")).collect();
        let mut ctx = ctx_for(3, dissim);
        ctx.sim = vec![
            vec![1.0, 1.0, 0.2],
            vec![1.0, 1.0, 0.2],
            vec![0.2, 0.2, 1.0],
        ];
        ctx.total_cov = ctx.sim.iter().map(|r| r.iter().sum()).collect();
        let spec = ObjectiveSpec {
            dispersion_form: DispersionForm::Min,
            dissimilarity: DissimilarityKind::Lexical,
            ..ObjectiveSpec::default()
        };
        let budget = Budget::new(BudgetKind::Words, 6).unwrap();
        let summary = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        let first_two: HashSet<usize> = summary.sentence_ids[..2].iter().copied().collect();
        assert!(
            first_two.contains(&2),
            "distinct sentence not picked before both duplicates: {:?}",
            summary.sentence_ids
        );
    }

    #[test]
    fn greedy_is_deterministic_with_trace_consistency() {
        let sentences: Vec<Sentence> =
            (0..5).map(|i| sentence(i, "alpha beta gamma")).collect();
        let ctx = ctx_for(5, uniform_dissim(5, 0.6));
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::Words, 9).unwrap();
        let a = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        let b = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        assert_eq!(a, b);

        // each trace gain equals the from-scratch objective difference
        let mut prefix: Vec<usize> = Vec::new();
        let mut prev = 0.0;
        for step in &a.trace {
            prefix.push(step.candidate);
            let value = full_objective(&prefix, &ctx, &spec).unwrap();
            assert!((step.gain - (value - prev)).abs() < 1e-9);
            prev = value;
        }
        assert!((prev - a.objective_value).abs() < 1e-9);
    }

    #[test]
    fn removing_last_selection_recovers_previous_value() {
        let sentences: Vec<Sentence> =
            (0..5).map(|i| sentence(i, "alpha beta gamma")).collect();
        let ctx = ctx_for(5, uniform_dissim(5, 0.6));
        let spec = ObjectiveSpec::default();
        let budget = Budget::new(BudgetKind::Words, 9).unwrap();
        let summary = greedy_summarize(&sentences, &ctx, &spec, budget).unwrap();
        assert!(summary.sentence_ids.len() >= 2);
        let without_last = &summary.sentence_ids[..summary.sentence_ids.len() - 1];
        let value = full_objective(without_last, &ctx, &spec).unwrap();
        let last_gain = summary.trace.last().unwrap().gain;
        assert!((summary.objective_value - last_gain - value).abs() < 1e-9);
    }

    fn baseline_lex() -> SentimentLexicon {
        let table = vec![
            ("good".to_string(), Polarity::Positive),
            ("bad".to_string(), Polarity::Negative),
        ];
        merge_lexicons(&[table], HashSet::new()).unwrap()
    }

    #[test]
    fn baseline_empty_without_sentiment_words() {
        let sentences = vec![sentence(0, "plain words"), sentence(1, "more words")];
        let docs: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
        let stats = CorpusStats::build(&docs);
        let budget = Budget::new(BudgetKind::Words, 100).unwrap();
        let summary = tfidf_lexicon_baseline(
            &sentences,
            &tokenize("plain"),
            &baseline_lex(),
            &stats,
            budget,
        );
        assert!(summary.sentence_ids.is_empty());
    }

    #[test]
    fn baseline_takes_most_query_similar_sentimental_sentence() {
        let sentences = vec![
            sentence(0, "piracy good thing"),
            sentence(1, "weather bad today"),
        ];
        let docs: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
        let stats = CorpusStats::build(&docs);
        let budget = Budget::new(BudgetKind::Words, 3).unwrap();
        let summary = tfidf_lexicon_baseline(
            &sentences,
            &tokenize("piracy"),
            &baseline_lex(),
            &stats,
            budget,
        );
        assert_eq!(summary.sentence_ids, vec![0]);
    }

    #[test]
    fn baseline_hand_traced_mixed_fixture() {
        // Six sentences; hand trace of sort-by-query-cosine then
        // sentiment filter under a 9-word budget:
        //   0 "piracy hurts sales"        sim>0, no sentiment  -> skipped
        //   1 "piracy is good"            sim>0, sentiment     -> kept (3)
        //   2 "music industry whines"     sim=0                -> skipped (no sentiment)
        //   3 "piracy piracy bad effects" highest sim, kept first (4)
        //   4 "nothing relevant"          sim=0, no sentiment  -> skipped
        //   5 "bad weather"               sim=0, sentiment     -> kept last (2)
        let texts = [
            "piracy hurts sales",
            "piracy is good",
            "music industry whines",
            "piracy piracy bad effects",
            "nothing relevant",
            "bad weather",
        ];
        let sentences: Vec<Sentence> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| sentence(i, t))
            .collect();
        let docs: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
        let stats = CorpusStats::build(&docs);
        let budget = Budget::new(BudgetKind::Words, 9).unwrap();
        let summary = tfidf_lexicon_baseline(
            &sentences,
            &tokenize("piracy"),
            &baseline_lex(),
            &stats,
            budget,
        );
        assert_eq!(summary.sentence_ids, vec![3, 1, 5]);
        assert_eq!(summary.total_cost, 9);
    }

    #[test]
    fn render_groups_by_answer() {
        let mut sentences = vec![
            sentence(0, "First."),
            sentence(1, "Second."),
            sentence(2, "Third."),
        ];
        sentences[1].answer_index = 0;
        let summary = Summary {
            sentence_ids: vec![0, 1, 2],
            total_cost: 3,
            objective_value: 0.0,
            trace: vec![],
        };
        let text = render_summary(&summary, &sentences);
        assert_eq!(text, "- First. Second.\n- Third.");
    }
}
