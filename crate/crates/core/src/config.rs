//! One document holding every stage's parameters.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::embedding::HashingProvider;
use crate::error::{Error, Result};
use crate::matching::MatchConfig;
use crate::postprocess::PostConfig;
use crate::prompt::PromptTemplates;
use crate::segment::SegmenterConfig;
use crate::sentiment::SentimentConfig;
use crate::taxonomy_builder::{CleanConfig, ClusterConfig};

/// Where embeddings come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    Builtin {
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    Precomputed { path: String },
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Builtin { dim: 256, seed: 0 }
    }
}

/// Where sentiment scores come from. A lexicon without a path uses the
/// bundled word list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Lexicon {
        #[serde(default)]
        path: Option<String>,
        #[serde(default = "default_gain")]
        gain: f64,
    },
    Scores { path: String },
}

fn default_gain() -> f64 {
    2.0
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Lexicon {
            path: None,
            gain: default_gain(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sim_floor: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { sim_floor: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenConfig {
    /// Shuffled variants per labelled review; 0 disables augmentation.
    pub augment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub embedder: EmbedderConfig,
    pub classifier: ClassifierConfig,
    pub segmenter: SegmenterConfig,
    pub sentiment: SentimentConfig,
    pub matching: MatchConfig,
    pub cluster: ClusterConfig,
    pub clean: CleanConfig,
    pub post: PostConfig,
    pub templates: PromptTemplates,
    pub datagen: DatagenConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 17,
            embedder: EmbedderConfig::default(),
            classifier: ClassifierConfig::default(),
            segmenter: SegmenterConfig::default(),
            sentiment: SentimentConfig::default(),
            matching: MatchConfig::default(),
            cluster: ClusterConfig::default(),
            clean: CleanConfig::default(),
            post: PostConfig::default(),
            templates: PromptTemplates::default(),
            datagen: DatagenConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn bad(field: &str, message: impl ToString) -> Error {
    Error::Config {
        field: field.into(),
        message: message.to_string(),
    }
}

impl PipelineConfig {
    /// Checks every section; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        self.segmenter.validate()?;
        self.sentiment.validate()?;
        self.matching.validate()?;
        self.cluster.validate()?;
        self.clean.validate()?;
        self.post.validate()?;
        self.templates.validate().map_err(|e| match e {
            Error::TemplateSlot { name, .. } => bad(&format!("templates.{name}"), &e),
            other => other,
        })?;
        match &self.embedder {
            EmbedderConfig::Builtin { dim, .. } if *dim < HashingProvider::MIN_DIM => {
                return Err(bad(
                    "embedder.dim",
                    format!("must be at least {}, got {dim}", HashingProvider::MIN_DIM),
                ));
            }
            EmbedderConfig::Precomputed { path } if path.is_empty() => {
                return Err(bad("embedder.path", "must not be empty"));
            }
            _ => {}
        }
        match &self.classifier {
            ClassifierConfig::Lexicon { gain, .. } if !(gain.is_finite() && *gain > 0.0) => {
                return Err(bad("classifier.gain", format!("must be a positive number, got {gain}")));
            }
            ClassifierConfig::Scores { path } if path.is_empty() => {
                return Err(bad("classifier.path", "must not be empty"));
            }
            _ => {}
        }
        let f = self.eval.sim_floor;
        if !(f > 0.0 && f <= 1.0) {
            return Err(bad("eval.sim_floor", format!("must be in (0, 1], got {f}")));
        }
        Ok(())
    }
}
