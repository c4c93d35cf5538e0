//! Builds embedders and sentiment classifiers from configuration.

use std::io::Cursor;
use std::path::Path;

use reviewlens_core::config::{ClassifierConfig, EmbedderConfig, PipelineConfig};
use reviewlens_core::datagen::SegmentNet;
use reviewlens_core::embedding::{EmbeddingCache, EmbeddingProvider, HashingProvider, PrecomputedProvider, Similarity};
use reviewlens_core::model::Taxonomy;
use reviewlens_core::sentiment::{LexiconClassifier, PrecomputedScores, SentimentClassifier};

use crate::error::{CliError, CliResult};
use crate::io::{parse_jsonl, read_jsonl, EmbeddingRow, LexiconRow, ScoreRow};

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.jsonl");

pub fn embedder(cfg: &EmbedderConfig) -> CliResult<Box<dyn EmbeddingProvider>> {
    match cfg {
        EmbedderConfig::Builtin { dim, seed } => Ok(Box::new(HashingProvider::new(*dim, *seed)?)),
        EmbedderConfig::Precomputed { path } => {
            let path = Path::new(path);
            let rows: Vec<EmbeddingRow> = read_jsonl(path)?;
            let p = PrecomputedProvider::from_rows(rows.into_iter().map(|r| (r.text, r.vec)))
                .map_err(|e| CliError::data_at(path, e))?;
            Ok(Box::new(p))
        }
    }
}

fn lexicon(rows: Vec<LexiconRow>, gain: f64, path: &Path) -> CliResult<LexiconClassifier> {
    LexiconClassifier::new(rows.into_iter().map(|r| (r.token, r.weight)))
        .map_err(|e| CliError::data_at(path, e))?
        .with_gain(gain)
        .map_err(CliError::from)
}

pub fn builtin_lexicon(gain: f64) -> CliResult<LexiconClassifier> {
    let path = Path::new("<builtin lexicon>");
    lexicon(parse_jsonl(Cursor::new(BUILTIN_LEXICON), path)?, gain, path)
}

pub fn classifier(cfg: &ClassifierConfig) -> CliResult<Box<dyn SentimentClassifier>> {
    match cfg {
        ClassifierConfig::Lexicon { path: None, gain } => Ok(Box::new(builtin_lexicon(*gain)?)),
        ClassifierConfig::Lexicon { path: Some(p), gain } => {
            let path = Path::new(p);
            Ok(Box::new(lexicon(read_jsonl(path)?, *gain, path)?))
        }
        ClassifierConfig::Scores { path } => {
            let path = Path::new(path);
            let rows: Vec<ScoreRow> = read_jsonl(path)?;
            let s = PrecomputedScores::new(rows.into_iter().map(|r| (r.text, r.p, r.n)))
                .map_err(|e| CliError::data_at(path, e))?;
            Ok(Box::new(s))
        }
    }
}

/// Validated configuration with the providers a command needs.
pub struct Runtime {
    pub config: PipelineConfig,
    embedder: Option<Box<dyn EmbeddingProvider>>,
    classifier: Option<Box<dyn SentimentClassifier>>,
    pub cache: EmbeddingCache,
}

impl Runtime {
    pub fn new(config: PipelineConfig) -> CliResult<Self> {
        config.validate()?;
        Ok(Self {
            config,
            embedder: None,
            classifier: None,
            cache: EmbeddingCache::new(),
        })
    }

    pub fn with_embedder(mut self) -> CliResult<Self> {
        self.embedder = Some(embedder(&self.config.embedder)?);
        Ok(self)
    }

    pub fn with_classifier(mut self) -> CliResult<Self> {
        self.classifier = Some(classifier(&self.config.classifier)?);
        Ok(self)
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_deref().expect("runtime built without an embedder")
    }

    pub fn classifier(&self) -> &dyn SentimentClassifier {
        self.classifier.as_deref().expect("runtime built without a classifier")
    }

    pub fn sim(&self) -> Similarity<'_> {
        Similarity::new(self.embedder(), &self.cache)
    }

    pub fn net<'a>(&'a self, taxonomy: &'a Taxonomy) -> SegmentNet<'a> {
        SegmentNet {
            taxonomy,
            segmenter: &self.config.segmenter,
            sentiment: &self.config.sentiment,
            matching: &self.config.matching,
            classifier: self.classifier(),
            sim: self.sim(),
        }
    }
}
