//! End-to-end glue: per-thread precomputation, answer/sentence ranking,
//! objective contexts, summarization runs, and the ablation grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    sentence_split, tokenize, CorpusStats, Genre, Ngram, Sentence, TermVector, Thread,
    WeightScheme,
};
use crate::error::{Error, Result};
use crate::eval::{jsd_eval, rouge2, rouge_su4, MetricsReport};
use crate::lexicon::{sentence_polarity, PolarityValue, SentimentLexicon};
use crate::objective::{ContentSim, DispersionForm, ObjectiveContext, ObjectiveSpec, Partition};
use crate::ranker::{
    baseline_rank, listnet_train, ranking_metrics, rank_with_model, BaselineKind, Candidate,
    FeatureExtractor, ListnetOptions, RankModel, RankedList,
};
use crate::similarity::{
    cosine_tfidf, dissimilarity, semantic_sim, DissimilarityContext, DissimilarityKind,
    SynsetGraph,
};
use crate::summarizer::{greedy_summarize, render_summary, Budget, Summary};
use crate::topics::{assign_cluster, infer_theta, TopicDistribution, TopicModel};
use crate::corpus::tfidf_vector;

/// Negation scope used everywhere sentence polarity is computed.
pub const NEGATION_WINDOW: usize = 5;

/// Where candidate relevance ranks come from.
#[derive(Debug, Clone, Copy)]
pub enum RankSource<'a> {
    Model(&'a RankModel),
    Baseline(BaselineKind),
}

/// Ranking units for a qa thread: one candidate per answer, in posting
/// order.
pub fn answer_candidates(thread: &Thread) -> Vec<Candidate> {
    thread
        .answers
        .iter()
        .map(|a| Candidate {
            tokens: tokenize(&a.text),
            raw: a.text.clone(),
            position: a.position,
            author: a.author.clone(),
        })
        .collect()
}

/// Ranking units for a blog thread: one candidate per sentence.
pub fn sentence_candidates(sentences: &[Sentence]) -> Vec<Candidate> {
    sentences
        .iter()
        .map(|s| Candidate {
            tokens: s.tokens.clone(),
            raw: s.raw.clone(),
            position: s.id,
            author: s.author.clone(),
        })
        .collect()
}

/// TFIDF document units for one thread: whole answers for qa, sentences
/// for blog.
pub fn thread_docs(thread: &Thread, sentences: &[Sentence]) -> Vec<Vec<String>> {
    match thread.genre {
        Genre::Qa => thread.answers.iter().map(|a| tokenize(&a.text)).collect(),
        Genre::Blog => sentences.iter().map(|s| s.tokens.clone()).collect(),
    }
}

/// Document collection for LDA training over a whole corpus.
pub fn corpus_docs(threads: &[Thread]) -> Vec<Vec<String>> {
    let mut docs = Vec::new();
    for thread in threads {
        let sentences = sentence_split(thread);
        docs.extend(thread_docs(thread, &sentences));
    }
    docs
}

/// Corpus-wide unigram counts used as the background distribution for
/// topic-signature detection.
pub fn global_unigram_counts(threads: &[Thread]) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for thread in threads {
        for answer in &thread.answers {
            for t in tokenize(&answer.text) {
                *counts.entry(t).or_insert(0.0) += 1.0;
            }
        }
    }
    counts
}

/// Everything objective construction needs for one thread, computed once
/// and shared across ablation cells.
pub struct ThreadInputs {
    pub thread: Thread,
    pub sentences: Vec<Sentence>,
    pub stats: CorpusStats,
    /// Unigram TFIDF vector per sentence.
    pub uni_tfidf: Vec<TermVector>,
    /// Sentence token lists (kept separately so dissimilarity contexts can
    /// borrow a contiguous slice).
    pub token_lists: Vec<Vec<String>>,
    /// Topic distribution per sentence.
    pub thetas: Vec<TopicDistribution>,
    /// 1-based relevance rank per sentence.
    pub ranks: Vec<usize>,
    pub topic: Partition,
    pub author: Partition,
    pub polarity: Partition,
}

fn rank_candidates(
    query_tokens: &[String],
    candidates: &[Candidate],
    stats: &CorpusStats,
    lex: &SentimentLexicon,
    model: &TopicModel,
    infer_iters: usize,
    source: RankSource,
) -> RankedList {
    match source {
        RankSource::Model(rank_model) => {
            let extractor =
                FeatureExtractor::new(query_tokens, candidates, stats, lex, model, infer_iters);
            rank_with_model(rank_model, &extractor.all_features())
        }
        RankSource::Baseline(kind) => baseline_rank(candidates, kind),
    }
}

impl ThreadInputs {
    /// Precompute per-thread state. `background` substitutes corpus-wide
    /// counts for the thread-local background distribution when given.
    pub fn build(
        thread: &Thread,
        lex: &SentimentLexicon,
        model: &TopicModel,
        source: RankSource,
        infer_iters: usize,
        background: Option<&HashMap<String, f64>>,
    ) -> Result<ThreadInputs> {
        let sentences = sentence_split(thread);
        let docs = thread_docs(thread, &sentences);
        let mut stats = CorpusStats::build(&docs);
        if let Some(counts) = background {
            stats = stats.with_background(counts);
        }
        let query_tokens = tokenize(&thread.query);

        // Relevance ranks: qa threads rank whole answers and each sentence
        // inherits its answer's rank; blog threads rank sentences directly.
        let ranks: Vec<usize> = match thread.genre {
            Genre::Qa => {
                let candidates = answer_candidates(thread);
                let list = rank_candidates(
                    &query_tokens,
                    &candidates,
                    &stats,
                    lex,
                    model,
                    infer_iters,
                    source,
                );
                sentences.iter().map(|s| list.rank_of(s.answer_index)).collect()
            }
            Genre::Blog => {
                let candidates = sentence_candidates(&sentences);
                let list = rank_candidates(
                    &query_tokens,
                    &candidates,
                    &stats,
                    lex,
                    model,
                    infer_iters,
                    source,
                );
                sentences.iter().map(|s| list.rank_of(s.id)).collect()
            }
        };

        let uni_tfidf: Vec<TermVector> = sentences
            .iter()
            .map(|s| tfidf_vector(&s.tokens, &stats, Ngram::Uni, WeightScheme::Tfidf))
            .collect();
        let token_lists: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
        let thetas: Vec<TopicDistribution> = sentences
            .iter()
            .map(|s| infer_theta(model, &s.tokens, infer_iters, s.id as u64))
            .collect();

        let topic = Partition::from_assignments(
            thetas
                .iter()
                .enumerate()
                .map(|(i, theta)| (i, assign_cluster(theta))),
        );
        let mut author_index: HashMap<&str, usize> = HashMap::new();
        let author = Partition::from_assignments(sentences.iter().enumerate().map(|(i, s)| {
            let next = author_index.len();
            (i, *author_index.entry(s.author.as_str()).or_insert(next))
        }));
        // Neutral sentences stay outside the polarity partition.
        let polarity =
            Partition::from_assignments(sentences.iter().enumerate().filter_map(|(i, s)| {
                match sentence_polarity(&s.tokens, lex, NEGATION_WINDOW).value {
                    PolarityValue::Positive => Some((i, 0)),
                    PolarityValue::Negative => Some((i, 1)),
                    PolarityValue::Neutral => None,
                }
            }));

        Ok(ThreadInputs {
            thread: thread.clone(),
            sentences,
            stats,
            uni_tfidf,
            token_lists,
            thetas,
            ranks,
            topic,
            author,
            polarity,
        })
    }

    /// Assemble the objective context for one (content sim, dissimilarity)
    /// configuration.
    pub fn context(
        &self,
        spec: &ObjectiveSpec,
        graph: Option<&SynsetGraph>,
    ) -> Result<ObjectiveContext> {
        let n = self.sentences.len();
        let mut sim = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let value = match spec.content_sim {
                    ContentSim::Tfidf => cosine_tfidf(&self.uni_tfidf[i], &self.uni_tfidf[j]),
                    ContentSim::Semantic => {
                        let graph = graph.ok_or_else(|| {
                            Error::Config(
                                "semantic content coverage needs a synset graph".into(),
                            )
                        })?;
                        semantic_sim(&self.token_lists[i], &self.token_lists[j], graph)
                    }
                };
                sim[i][j] = value;
                sim[j][i] = value;
            }
        }

        let dctx = DissimilarityContext {
            term_vectors: Some(&self.uni_tfidf),
            token_lists: Some(&self.token_lists),
            graph,
            thetas: Some(&self.thetas),
        };
        let mut dissim = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dissimilarity(i, j, spec.dissimilarity, &dctx)?;
                dissim[i][j] = d;
                dissim[j][i] = d;
            }
        }

        Ok(ObjectiveContext::new(
            self.ranks.clone(),
            self.topic.clone(),
            self.author.clone(),
            self.polarity.clone(),
            sim,
            dissim,
        ))
    }

    /// All candidate tokens, pooled: the reference collection for JSD.
    pub fn reference_tokens(&self) -> Vec<String> {
        self.token_lists.iter().flatten().cloned().collect()
    }
}

/// Train the listwise ranker on every qa thread carrying a best-answer
/// label and at least two answers.
pub fn train_ranker(
    threads: &[Thread],
    lex: &SentimentLexicon,
    model: &TopicModel,
    opts: &ListnetOptions,
    infer_iters: usize,
    background: Option<&HashMap<String, f64>>,
) -> Result<RankModel> {
    let mut lists = Vec::new();
    for thread in threads {
        let best = match thread.best_answer() {
            Some(best) if thread.answers.len() >= 2 => best,
            _ => continue,
        };
        let sentences = sentence_split(thread);
        let docs = thread_docs(thread, &sentences);
        let mut stats = CorpusStats::build(&docs);
        if let Some(counts) = background {
            stats = stats.with_background(counts);
        }
        let query_tokens = tokenize(&thread.query);
        let candidates = answer_candidates(thread);
        let extractor =
            FeatureExtractor::new(&query_tokens, &candidates, &stats, lex, model, infer_iters);
        let labels: Vec<f64> = (0..candidates.len())
            .map(|i| if i == best { 1.0 } else { 0.0 })
            .collect();
        lists.push((extractor.all_features(), labels));
    }
    if lists.is_empty() {
        return Err(Error::InvalidInput(
            "no thread has a labeled best answer and at least two answers".into(),
        ));
    }
    listnet_train(&lists, opts)
}

/// p@1 and MRR for a rank source over the labeled qa threads.
pub fn eval_ranker(
    threads: &[Thread],
    lex: &SentimentLexicon,
    model: &TopicModel,
    source: RankSource,
    infer_iters: usize,
    background: Option<&HashMap<String, f64>>,
) -> Result<(f64, f64)> {
    let mut lists = Vec::new();
    for thread in threads {
        let best = match thread.best_answer() {
            Some(best) if thread.answers.len() >= 2 => best,
            _ => continue,
        };
        let sentences = sentence_split(thread);
        let docs = thread_docs(thread, &sentences);
        let mut stats = CorpusStats::build(&docs);
        if let Some(counts) = background {
            stats = stats.with_background(counts);
        }
        let query_tokens = tokenize(&thread.query);
        let candidates = answer_candidates(thread);
        let list = rank_candidates(
            &query_tokens,
            &candidates,
            &stats,
            lex,
            model,
            infer_iters,
            source,
        );
        lists.push((list, Some(best)));
    }
    ranking_metrics(&lists)
}

/// One summarized thread as emitted by the `summarize` verb.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreadSummary {
    pub thread_id: String,
    pub sentence_ids: Vec<usize>,
    pub text: String,
    pub objective_value: f64,
    pub total_cost: usize,
}

/// Run the greedy summarizer on precomputed thread inputs.
pub fn summarize_thread(
    inputs: &ThreadInputs,
    spec: &ObjectiveSpec,
    budget: Budget,
    graph: Option<&SynsetGraph>,
) -> Result<(Summary, ThreadSummary)> {
    let ctx = inputs.context(spec, graph)?;
    let summary = greedy_summarize(&inputs.sentences, &ctx, spec, budget)?;
    let record = ThreadSummary {
        thread_id: inputs.thread.id.clone(),
        sentence_ids: summary.sentence_ids.clone(),
        text: render_summary(&summary, &inputs.sentences),
        objective_value: summary.objective_value,
        total_cost: summary.total_cost,
    };
    Ok((summary, record))
}

/// Tokens of the selected sentences, pooled for evaluation.
pub fn summary_tokens(summary: &Summary, sentences: &[Sentence]) -> Vec<String> {
    summary
        .sentence_ids
        .iter()
        .flat_map(|&id| sentences[id].tokens.iter().cloned())
        .collect()
}

/// JSD against the thread's own answer set, plus ROUGE against gold
/// references when any exist.
pub fn evaluate_summary(
    summary: &Summary,
    inputs: &ThreadInputs,
    references: &[Vec<String>],
) -> Result<MetricsReport> {
    let tokens = summary_tokens(summary, &inputs.sentences);
    let jsd = jsd_eval(&tokens, &inputs.reference_tokens())?;
    let (r2, su4) = if references.is_empty() {
        (None, None)
    } else {
        (
            Some(rouge2(&tokens, references)?),
            Some(rouge_su4(&tokens, references)?),
        )
    };
    Ok(MetricsReport {
        jsd,
        rouge2: r2,
        rouge_su4: su4,
        p_at_1: None,
        mrr: None,
    })
}

/// One cell of the ablation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationCell {
    pub dispersion: String,
    pub content_sim: String,
    pub dissimilarity: String,
    pub mean_jsd: f64,
    pub n_threads: usize,
}

/// Cross product of the configured dispersion forms, content similarities,
/// and dissimilarity metrics; one macro-averaged JSD per cell. Any cell
/// failure aborts with the cell identifier.
pub fn run_ablation(
    inputs: &[ThreadInputs],
    base: &ObjectiveSpec,
    budget: Budget,
    graph: Option<&SynsetGraph>,
    dispersions: &[DispersionForm],
    contents: &[ContentSim],
    dissimilarities: &[DissimilarityKind],
) -> Result<Vec<AblationCell>> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no threads to ablate over".into()));
    }
    let mut cells = Vec::new();
    for &dispersion_form in dispersions {
        for &content_sim in contents {
            for &dissim in dissimilarities {
                let spec = ObjectiveSpec {
                    dispersion_form,
                    content_sim,
                    dissimilarity: dissim,
                    ..*base
                };
                let cell_id =
                    format!("dispersion={dispersion_form} content={content_sim} dissimilarity={dissim}");
                let mut total = 0.0;
                for thread_inputs in inputs {
                    let (summary, _) = summarize_thread(thread_inputs, &spec, budget, graph)
                        .map_err(|e| {
                            Error::InvalidInput(format!("ablation cell [{cell_id}] failed: {e}"))
                        })?;
                    let tokens = summary_tokens(&summary, &thread_inputs.sentences);
                    let jsd = jsd_eval(&tokens, &thread_inputs.reference_tokens())
                        .map_err(|e| {
                            Error::InvalidInput(format!("ablation cell [{cell_id}] failed: {e}"))
                        })?;
                    total += jsd;
                }
                cells.push(AblationCell {
                    dispersion: dispersion_form.to_string(),
                    content_sim: content_sim.to_string(),
                    dissimilarity: dissim.to_string(),
                    mean_jsd: total / inputs.len() as f64,
                    n_threads: inputs.len(),
                });
            }
        }
    }
    Ok(cells)
}
