//! Flat key = value run configuration with strict key checking.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use crate::corpus::Genre;
use crate::error::{Error, Result};
use crate::objective::{ContentSim, DispersionForm, ObjectiveSpec};
use crate::similarity::DissimilarityKind;
use crate::summarizer::{Budget, BudgetKind};

/// Resolved run configuration. Unknown keys are rejected at parse time and
/// every run logs the resolved configuration verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub genre: Genre,
    pub lexicon_dir: Option<PathBuf>,
    pub synsets: Option<PathBuf>,
    pub lda_model: Option<PathBuf>,
    pub ranker_model: Option<PathBuf>,
    pub topics: usize,
    pub lda_iters: usize,
    pub infer_iters: usize,
    pub lda_alpha: Option<f64>,
    pub lda_beta: f64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub delta: f64,
    pub theta: f64,
    pub dispersion: DispersionForm,
    pub dissimilarity: DissimilarityKind,
    pub content_sim: ContentSim,
    pub budget_kind: BudgetKind,
    pub budget_limit: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub ablation_dispersion: Vec<DispersionForm>,
    pub ablation_content: Vec<ContentSim>,
    pub ablation_dissimilarity: Vec<DissimilarityKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ObjectiveSpec::default();
        RunConfig {
            corpus: None,
            genre: Genre::Qa,
            lexicon_dir: None,
            synsets: None,
            lda_model: None,
            ranker_model: None,
            topics: 40,
            lda_iters: 1000,
            infer_iters: 50,
            lda_alpha: None,
            lda_beta: 0.01,
            seed: 42,
            alpha: spec.alpha,
            beta: spec.beta,
            gamma: spec.gamma,
            eta: spec.eta,
            delta: spec.delta,
            theta: spec.theta,
            dispersion: DispersionForm::Sum,
            dissimilarity: DissimilarityKind::Lexical,
            content_sim: ContentSim::Tfidf,
            budget_kind: BudgetKind::Words,
            budget_limit: 100,
            epochs: 1500,
            learning_rate: 1e-5,
            ablation_dispersion: vec![DispersionForm::Sum, DispersionForm::Min],
            ablation_content: vec![ContentSim::Tfidf, ContentSim::Semantic],
            ablation_dissimilarity: vec![
                DissimilarityKind::Lexical,
                DissimilarityKind::Topical,
                DissimilarityKind::Semantic,
            ],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value for {key}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = Some(PathBuf::from(value)),
            "genre" => self.genre = parse(key, value)?,
            "lexicon_dir" => self.lexicon_dir = Some(PathBuf::from(value)),
            "synsets" => self.synsets = Some(PathBuf::from(value)),
            "lda_model" => self.lda_model = Some(PathBuf::from(value)),
            "ranker_model" => self.ranker_model = Some(PathBuf::from(value)),
            "topics" => self.topics = parse(key, value)?,
            "lda_iters" => self.lda_iters = parse(key, value)?,
            "infer_iters" => self.infer_iters = parse(key, value)?,
            "lda_alpha" => self.lda_alpha = Some(parse(key, value)?),
            "lda_beta" => self.lda_beta = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "dispersion" => self.dispersion = parse(key, value)?,
            "dissimilarity" => self.dissimilarity = parse(key, value)?,
            "content_sim" => self.content_sim = parse(key, value)?,
            "budget_kind" => {
                self.budget_kind = match value {
                    "words" => BudgetKind::Words,
                    "nonwhite_chars" => BudgetKind::NonwhiteChars,
                    other => {
                        return Err(Error::Config(format!("unknown budget kind: {other}")))
                    }
                }
            }
            "budget_limit" => self.budget_limit = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "ablation_dispersion" => self.ablation_dispersion = parse_list(key, value)?,
            "ablation_content" => self.ablation_content = parse_list(key, value)?,
            "ablation_dissimilarity" => self.ablation_dissimilarity = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown config key: {other}"))),
        }
        Ok(())
    }

    pub fn from_str(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedRecord {
                line: idx + 1,
                message: format!("expected key = value, got: {line}"),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        RunConfig::from_str(&text)
    }

    pub fn objective_spec(&self) -> ObjectiveSpec {
        ObjectiveSpec {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            eta: self.eta,
            delta: self.delta,
            theta: self.theta,
            dispersion_form: self.dispersion,
            dissimilarity: self.dissimilarity,
            content_sim: self.content_sim,
        }
    }

    pub fn budget(&self) -> Result<Budget> {
        Budget::new(self.budget_kind, self.budget_limit)
    }

    pub fn lda_alpha(&self) -> f64 {
        self.lda_alpha
            .unwrap_or_else(|| crate::topics::default_alpha(self.topics))
    }

    /// Resolved configuration as sorted key = value lines, logged with
    /// every run.
    pub fn resolved(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "<unset>".into())
        };
        let genre = match self.genre {
            Genre::Qa => "qa",
            Genre::Blog => "blog",
        };
        let budget_kind = match self.budget_kind {
            BudgetKind::Words => "words",
            BudgetKind::NonwhiteChars => "nonwhite_chars",
        };
        let join = |items: &[String]| items.join(",");
        let mut lines = vec![
            format!("ablation_content = {}", join(&self.ablation_content.iter().map(|v| v.to_string()).collect::<Vec<_>>())),
            format!("ablation_dispersion = {}", join(&self.ablation_dispersion.iter().map(|v| v.to_string()).collect::<Vec<_>>())),
            format!("ablation_dissimilarity = {}", join(&self.ablation_dissimilarity.iter().map(|v| v.to_string()).collect::<Vec<_>>())),
            format!("alpha = {}", self.alpha),
            format!("beta = {}", self.beta),
            format!("budget_kind = {budget_kind}"),
            format!("budget_limit = {}", self.budget_limit),
            format!("content_sim = {}", self.content_sim),
            format!("corpus = {}", path(&self.corpus)),
            format!("delta = {}", self.delta),
            format!("dispersion = {}", self.dispersion),
            format!("dissimilarity = {}", self.dissimilarity),
            format!("epochs = {}", self.epochs),
            format!("eta = {}", self.eta),
            format!("gamma = {}", self.gamma),
            format!("genre = {genre}"),
            format!("infer_iters = {}", self.infer_iters),
            format!("lda_alpha = {}", self.lda_alpha()),
            format!("lda_beta = {}", self.lda_beta),
            format!("lda_iters = {}", self.lda_iters),
            format!("lda_model = {}", path(&self.lda_model)),
            format!("learning_rate = {}", self.learning_rate),
            format!("lexicon_dir = {}", path(&self.lexicon_dir)),
            format!("ranker_model = {}", path(&self.ranker_model)),
            format!("seed = {}", self.seed),
            format!("synsets = {}", path(&self.synsets)),
            format!("theta = {}", self.theta),
            format!("topics = {}", self.topics),
        ];
        lines.sort();
        lines.join("\n")
    }

    /// Stable hash of the resolved configuration for report provenance.
    pub fn config_hash(&self) -> String {
        let mut hasher = DefaultHasher::new();
        self.resolved().hash(&mut hasher);
        format!("{:016x}", hasher.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let cfg = RunConfig::from_str(
            "topics = 10\nseed = 7\ndispersion = min\ndissimilarity = topical\nbudget_limit = 200\n# comment\n",
        )
        .unwrap();
        assert_eq!(cfg.topics, 10);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dispersion, DispersionForm::Min);
        assert_eq!(cfg.dissimilarity, DissimilarityKind::Topical);
        assert_eq!(cfg.budget_limit, 200);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_str("no_such_key = 1\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_str("dispersion = banana\n").is_err());
        assert!(RunConfig::from_str("topics = many\n").is_err());
    }

    #[test]
    fn ablation_lists_parse() {
        let cfg = RunConfig::from_str("ablation_dissimilarity = lexical, topical\n").unwrap();
        assert_eq!(
            cfg.ablation_dissimilarity,
            vec![DissimilarityKind::Lexical, DissimilarityKind::Topical]
        );
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = RunConfig::default();
        c.seed = 1;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn lda_alpha_defaults_to_50_over_k() {
        let mut cfg = RunConfig::default();
        cfg.topics = 25;
        assert_eq!(cfg.lda_alpha(), 2.0);
        cfg.lda_alpha = Some(0.5);
        assert_eq!(cfg.lda_alpha(), 0.5);
    }
}
