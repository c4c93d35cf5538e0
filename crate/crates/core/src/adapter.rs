//! Generative-model contract, the three-phase inference loop and a
//! rule-based model that answers prompts by running SegmentNet.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;
use core::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::datagen::SegmentNet;
use crate::error::{Error, Result};
use crate::model::{fold_name, LabelledRecord, Polarity, Review};
use crate::prompt::{
    format_topic_list, format_verbatims, parse_polarity, parse_topic_list, parse_verbatims, Phase,
    PromptTemplates,
};

/// A text-to-text model. Implementations must be deterministic.
pub trait GenerativeModel {
    fn generate(&self, prompt: &str) -> Result<String>;
}

impl<M: GenerativeModel + ?Sized> GenerativeModel for &M {
    fn generate(&self, prompt: &str) -> Result<String> {
        (**self).generate(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTopic {
    pub name: String,
    pub polarity: Polarity,
    pub verbatims: Vec<String>,
}

/// Parsed model answers for one review, before post-processing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBundle {
    pub review: Review,
    pub topics: Vec<RawTopic>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Topic list, then one polarity and one verbatim prompt per topic. A topic
/// whose polarity or verbatim answer cannot be parsed is dropped with a
/// warning.
pub fn run_inference(review: &Review, model: &dyn GenerativeModel, tpl: &PromptTemplates) -> Result<RawBundle> {
    let text = &review.text;
    let mut bundle = RawBundle {
        review: review.clone(),
        topics: Vec::new(),
        warnings: Vec::new(),
    };
    let answer = model.generate(&tpl.topic_prompt(text))?;
    let Some(names) = parse_topic_list(&answer) else {
        bundle.warnings.push(format!("unparseable topic list: {answer:?}"));
        return Ok(bundle);
    };
    if names.lenient {
        bundle.warnings.push(format!("topic list parsed leniently: {answer:?}"));
    }
    for name in names.value {
        let answer = model.generate(&tpl.polarity_prompt(text, &name))?;
        let Some(polarity) = parse_polarity(&answer) else {
            bundle.warnings.push(format!("dropped `{name}`: unparseable polarity {answer:?}"));
            continue;
        };
        let answer = model.generate(&tpl.verbatim_prompt(text, &name, polarity.value))?;
        let Some(verbatims) = parse_verbatims(&answer) else {
            bundle.warnings.push(format!("dropped `{name}`: unparseable verbatims {answer:?}"));
            continue;
        };
        bundle.topics.push(RawTopic {
            name,
            polarity: polarity.value,
            verbatims: verbatims.value,
        });
    }
    Ok(bundle)
}

/// Counts `generate` calls on the wrapped model.
#[derive(Debug, Default)]
pub struct Counting<M> {
    pub inner: M,
    calls: AtomicUsize,
}

impl<M> Counting<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<M: GenerativeModel> GenerativeModel for Counting<M> {
    fn generate(&self, prompt: &str) -> Result<String> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.generate(prompt)
    }
}

/// Answers prompts in the canonical target format by labelling the embedded
/// review with SegmentNet. The last labelled review is memoized since the
/// prompts of one review arrive back to back.
pub struct RuleBasedAdapter<'a> {
    net: SegmentNet<'a>,
    templates: PromptTemplates,
    last: spin::RwLock<Option<(String, LabelledRecord)>>,
}

impl<'a> RuleBasedAdapter<'a> {
    pub fn new(net: SegmentNet<'a>, templates: PromptTemplates) -> Result<Self> {
        templates.validate()?;
        Ok(Self {
            net,
            templates,
            last: spin::RwLock::new(None),
        })
    }

    fn record(&self, text: &str) -> Result<LabelledRecord> {
        if let Some((t, rec)) = self.last.read().as_ref() {
            if t == text {
                return Ok(rec.clone());
            }
        }
        let (rec, _) = self.net.label(&Review::new("prompt", text))?;
        *self.last.write() = Some((text.to_string(), rec.clone()));
        Ok(rec)
    }
}

impl GenerativeModel for RuleBasedAdapter<'_> {
    /// Unknown topics get an empty answer.
    fn generate(&self, prompt: &str) -> Result<String> {
        let parsed = self.templates.parse(prompt).ok_or(Error::UnknownPrompt)?;
        let rec = self.record(&parsed.review)?;
        let topic = parsed.topic.as_deref().map(fold_name);
        let polarity = parsed.polarity.as_deref().and_then(Polarity::parse);
        let find = |p: Option<Polarity>| {
            rec.insights
                .iter()
                .find(|i| Some(fold_name(i.topic.name())) == topic && p.is_none_or(|p| p == i.polarity))
        };
        Ok(match parsed.phase {
            Phase::Topic => {
                let names: Vec<&str> = rec.insights.iter().map(|i| i.topic.name()).collect();
                format_topic_list(&names)
            }
            Phase::Polarity => find(None).map(|i| i.polarity.as_str().to_string()).unwrap_or_default(),
            Phase::Verbatim => match polarity {
                Some(p) => find(Some(p)).map(|i| format_verbatims(&i.verbatims)).unwrap_or_default(),
                None => String::new(),
            },
        })
    }
}
