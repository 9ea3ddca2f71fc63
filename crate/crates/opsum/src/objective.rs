//! The summary objective: relevance, topic/author/polarity coverage,
//! saturated content coverage, and the dispersion term over metric-closure
//! distances.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::similarity::DissimilarityKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionForm {
    Sum,
    Min,
}

impl std::str::FromStr for DispersionForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(DispersionForm::Sum),
            "min" => Ok(DispersionForm::Min),
            other => Err(Error::Config(format!("unknown dispersion form: {other}"))),
        }
    }
}

impl std::fmt::Display for DispersionForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DispersionForm::Sum => "sum",
            DispersionForm::Min => "min",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentSim {
    Tfidf,
    Semantic,
}

impl std::str::FromStr for ContentSim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(ContentSim::Tfidf),
            "semantic" => Ok(ContentSim::Semantic),
            other => Err(Error::Config(format!("unknown content similarity: {other}"))),
        }
    }
}

impl std::fmt::Display for ContentSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ContentSim::Tfidf => "tfidf",
            ContentSim::Semantic => "semantic",
        })
    }
}

/// Objective coefficients and term configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub delta: f64,
    /// Content-coverage saturation coefficient, in (0, 1].
    pub theta: f64,
    pub dispersion_form: DispersionForm,
    pub dissimilarity: DissimilarityKind,
    pub content_sim: ContentSim,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            alpha: 5.0,
            beta: 1.0,
            gamma: 10.0,
            eta: 5.0,
            delta: 10.0,
            theta: 0.1,
            dispersion_form: DispersionForm::Sum,
            dissimilarity: DissimilarityKind::Lexical,
            content_sim: ContentSim::Tfidf,
        }
    }
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("delta", self.delta),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!(
                "theta must be in (0,1], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Sentence id -> cluster id; possibly partial (neutral sentences are
/// outside the polarity partition).
#[derive(Debug, Clone, Default)]
pub struct Partition {
    pub cluster_of: HashMap<usize, usize>,
}

impl Partition {
    pub fn from_assignments(assignments: impl IntoIterator<Item = (usize, usize)>) -> Partition {
        Partition {
            cluster_of: assignments.into_iter().collect(),
        }
    }
}

/// Precomputed per-thread state the objective terms read.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    /// 1-based rank per sentence id; 0 marks a missing rank.
    pub ranks: Vec<usize>,
    pub topic: Partition,
    pub author: Partition,
    pub polarity: Partition,
    /// Symmetric content-similarity matrix over V.
    pub sim: Vec<Vec<f64>>,
    /// Symmetric dissimilarity matrix over V (dispersion input d').
    pub dissim: Vec<Vec<f64>>,
    /// cov(v, V) per sentence.
    pub total_cov: Vec<f64>,
}

impl ObjectiveContext {
    pub fn new(
        ranks: Vec<usize>,
        topic: Partition,
        author: Partition,
        polarity: Partition,
        sim: Vec<Vec<f64>>,
        dissim: Vec<Vec<f64>>,
    ) -> ObjectiveContext {
        let total_cov = sim.iter().map(|row| row.iter().sum()).collect();
        ObjectiveContext {
            ranks,
            topic,
            author,
            polarity,
            sim,
            dissim,
            total_cov,
        }
    }

    pub fn len(&self) -> usize {
        self.sim.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sim.is_empty()
    }
}

/// r(S) = sum over s in S of sqrt(1 / rank(s)).
pub fn relevance_term(selection: &[usize], ranks: &[usize]) -> Result<f64> {
    let mut sum = 0.0;
    for &s in selection {
        let rank = ranks.get(s).copied().unwrap_or(0);
        if rank == 0 {
            return Err(Error::InvalidInput(format!("sentence {s} has no rank")));
        }
        sum += (1.0 / rank as f64).sqrt();
    }
    Ok(sum)
}

/// Sum over clusters of sqrt(|S ∩ cluster|); unassigned sentences
/// contribute nothing.
pub fn partition_coverage(selection: &[usize], partition: &Partition) -> f64 {
    // BTreeMap keeps the sqrt summation order stable across runs.
    let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
    for s in selection {
        if let Some(&c) = partition.cluster_of.get(s) {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts.values().map(|&c| (c as f64).sqrt()).sum()
}

/// c(S) = sum over v in V of min(cov(v,S), theta * cov(v,V)).
pub fn content_coverage(selection: &[usize], ctx: &ObjectiveContext, theta: f64) -> f64 {
    (0..ctx.len())
        .map(|v| {
            let cov_s: f64 = selection.iter().map(|&u| ctx.sim[v][u]).sum();
            cov_s.min(theta * ctx.total_cov[v])
        })
        .sum()
}

/// All-pairs shortest-path distances (metric closure) of the complete graph
/// on `nodes` with edge weights taken from the dissimilarity matrix.
pub fn metric_closure(nodes: &[usize], dissim: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = nodes.len();
    let mut dist = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                dist[i][j] = dissim[nodes[i]][nodes[j]];
            }
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                let via = dist[i][m] + dist[m][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist
}

/// Dispersion over the metric closure of S: sum or min over unordered
/// pairs; 0 when |S| < 2.
pub fn dispersion(selection: &[usize], ctx: &ObjectiveContext, form: DispersionForm) -> f64 {
    if selection.len() < 2 {
        return 0.0;
    }
    let dist = metric_closure(selection, &ctx.dissim);
    let k = selection.len();
    match form {
        DispersionForm::Sum => {
            let mut sum = 0.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    sum += dist[i][j];
                }
            }
            sum
        }
        DispersionForm::Min => {
            let mut min = f64::INFINITY;
            for i in 0..k {
                for j in (i + 1)..k {
                    min = min.min(dist[i][j]);
                }
            }
            min
        }
    }
}

/// The monotone submodular part: r + alpha*t + beta*a + gamma*p + eta*c.
pub fn submodular_part(
    selection: &[usize],
    ctx: &ObjectiveContext,
    spec: &ObjectiveSpec,
) -> Result<f64> {
    Ok(relevance_term(selection, &ctx.ranks)?
        + spec.alpha * partition_coverage(selection, &ctx.topic)
        + spec.beta * partition_coverage(selection, &ctx.author)
        + spec.gamma * partition_coverage(selection, &ctx.polarity)
        + spec.eta * content_coverage(selection, ctx, spec.theta))
}

/// F(S) = r + alpha*t + beta*a + gamma*p + eta*c + delta*h.
pub fn full_objective(
    selection: &[usize],
    ctx: &ObjectiveContext,
    spec: &ObjectiveSpec,
) -> Result<f64> {
    Ok(submodular_part(selection, ctx, spec)?
        + spec.delta * dispersion(selection, ctx, spec.dispersion_form))
}
