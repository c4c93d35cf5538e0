use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use reviewlens_core::adapter::{run_inference, Counting, GenerativeModel, RawBundle, RuleBasedAdapter};
use reviewlens_core::config::{ClassifierConfig, EmbedderConfig, PipelineConfig};
use reviewlens_core::datagen::{serialize_training_pairs, shuffle_augment, LabelStats, SegmentTrace, TrainingPair};
use reviewlens_core::eval::{metric_report, pair_records, topic_distribution};
use reviewlens_core::matching::match_candidates;
use reviewlens_core::model::{LabelledRecord, Polarity, Review, Segment};
use reviewlens_core::postprocess::{collect_delta, hierarchical, postprocess_bundle, HierRow, Outcome};
use reviewlens_core::prompt::PromptTemplates;
use reviewlens_core::segment::segment_review;
use reviewlens_core::sentiment::classify_segment;
use reviewlens_core::taxonomy_builder::{
    clean_taxonomy, export_review_file, fast_cluster, import_review_file, taxonomy_quality_report, Cluster,
    ReviewFile,
};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::exec::ExecPool;
use crate::io::{load_taxonomy, read_json, read_jsonl, write_json, write_jsonl};
use crate::logging;
use crate::par::{ordered_map, resolve_jobs};
use crate::providers::Runtime;

#[derive(Debug, Parser)]
#[command(
    name = "reviewlens",
    version,
    about = "Extract (topic, polarity, verbatim) insights from customer reviews"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Pipeline configuration (JSON); flags override its keys
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores); output order never depends on it
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Built-in hashing embedder, `builtin:<dim>:<seed>`
    #[arg(long, global = true)]
    pub embedder: Option<String>,
    /// Precomputed embeddings, JSON Lines of {"text","vec"}
    #[arg(long, global = true, conflicts_with = "embedder")]
    pub embeddings: Option<PathBuf>,
    /// Sentiment lexicon, JSON Lines of {"token","weight"}
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Precomputed sentiment scores, JSON Lines of {"text","p","n"}
    #[arg(long, global = true, conflicts_with = "lexicon")]
    pub scores: Option<PathBuf>,
    /// Suppress progress records on stderr
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Split reviews into segments
    Segment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score segments and assign polarity
    Sentiment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        delta_p: Option<f64>,
    },
    /// Match polarized segments to taxonomy topics
    Match {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster, annotate, import, clean and inspect taxonomies
    #[command(subcommand)]
    BuildTaxonomy(BuildCmd),
    /// Label reviews and write prompt/target training pairs
    GenerateData {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the labelled records
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Label reviews end to end (segment, sentiment, match, aggregate)
    Pipeline {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write training pairs
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Also write every segment with its match outcome
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Run the three-phase prompt protocol against a model
    Infer {
        #[arg(long)]
        reviews: PathBuf,
        /// `rule` (needs --taxonomy) or `exec:<shell command>`
        #[arg(long, default_value = "rule")]
        adapter: String,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconcile generated topics with the taxonomy
    Postprocess {
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        /// Hierarchical insight rows
        #[arg(long)]
        out: PathBuf,
        /// Proposed L4 and new L3 topics
        #[arg(long)]
        delta: PathBuf,
        /// Labelled records, the input of `evaluate`
        #[arg(long)]
        records: Option<PathBuf>,
        /// Routing decision of every generated topic
        #[arg(long)]
        decisions: Option<PathBuf>,
    },
    /// Score predicted records against gold records
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "-")]
        report: PathBuf,
        #[arg(long)]
        sim_floor: Option<f64>,
    },
    /// Topic frequency and coverage of labelled records
    Stats {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Print the effective configuration
    Config,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub reviews: PathBuf,
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Prompt templates (JSON)
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Shuffled variants per review
    #[arg(long)]
    pub augment: Option<usize>,
    #[arg(long)]
    pub delta_p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Intra-topic near-duplicate threshold
    #[arg(long)]
    pub delta_intra: Option<f64>,
    /// Cross-topic ambiguity threshold
    #[arg(long)]
    pub delta_e: Option<f64>,
}

impl CleanArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.delta_intra {
            cfg.clean.delta_intra = v;
        }
        if let Some(v) = self.delta_e {
            cfg.clean.delta_e = v;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum BuildCmd {
    /// Group polarized segments into candidate topics
    Cluster {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sim_threshold: Option<f64>,
        #[arg(long)]
        min_cluster_size: Option<usize>,
    },
    /// Write the annotator review file for clusters
    Export {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a taxonomy from an annotated review file
    Import {
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove redundant and ambiguous keywords
    Clean {
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        thresholds: CleanArgs,
    },
    /// Taxonomy quality figures
    Report {
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[command(flatten)]
        thresholds: CleanArgs,
    },
}

fn parse_embedder(arg: &str) -> CliResult<EmbedderConfig> {
    let bad = || CliError::validation("embedder", format!("expected builtin:<dim>:<seed>, got `{arg}`"));
    let parts: Vec<&str> = arg.split(':').collect();
    match parts.as_slice() {
        ["builtin", dim, seed] => Ok(EmbedderConfig::Builtin {
            dim: dim.parse().map_err(|_| bad())?,
            seed: seed.parse().map_err(|_| bad())?,
        }),
        ["builtin", dim] => Ok(EmbedderConfig::Builtin {
            dim: dim.parse().map_err(|_| bad())?,
            seed: 0,
        }),
        _ => Err(bad()),
    }
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Config file (or defaults) with the global flags applied.
pub fn effective_config(g: &Global) -> CliResult<PipelineConfig> {
    let mut cfg = match &g.config {
        None => PipelineConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::data_at(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation {
                field: None,
                message: format!("{}: {e}", path.display()),
            })?
        }
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(arg) = &g.embedder {
        cfg.embedder = parse_embedder(arg)?;
    }
    if let Some(p) = &g.embeddings {
        cfg.embedder = EmbedderConfig::Precomputed { path: path_string(p) };
    }
    if let Some(p) = &g.lexicon {
        let gain = match cfg.classifier {
            ClassifierConfig::Lexicon { gain, .. } => gain,
            ClassifierConfig::Scores { .. } => 2.0,
        };
        cfg.classifier = ClassifierConfig::Lexicon {
            path: Some(path_string(p)),
            gain,
        };
    }
    if let Some(p) = &g.scores {
        cfg.classifier = ClassifierConfig::Scores { path: path_string(p) };
    }
    Ok(cfg)
}

fn load_templates(cfg: &mut PipelineConfig, path: &Option<PathBuf>) -> CliResult<()> {
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::data_at(p, e))?;
        cfg.templates = serde_json::from_str::<PromptTemplates>(&text).map_err(|e| CliError::Validation {
            field: Some("templates".into()),
            message: format!("{}: {e}", p.display()),
        })?;
    }
    Ok(())
}

fn read_reviews(path: &Path) -> CliResult<Vec<Review>> {
    read_jsonl(path)
}

pub fn run(cli: Cli) -> CliResult<()> {
    logging::set_quiet(cli.global.quiet);
    let jobs = resolve_jobs(cli.global.jobs)?;
    let mut cfg = effective_config(&cli.global)?;
    match cli.command {
        Cmd::Segment { input, out } => {
            let rt = Runtime::new(cfg)?;
            let reviews = read_reviews(&input)?;
            let per: Vec<Vec<Segment>> = ordered_map(jobs, &reviews, |r| -> CliResult<_> {
                r.ensure_text()?;
                Ok(segment_review(r, &rt.config.segmenter))
            })?;
            let segments: Vec<Segment> = per.into_iter().flatten().collect();
            write_jsonl(&out, &segments)?;
            logging::info("segment", json!({ "reviews": reviews.len(), "segments": segments.len() }));
        }
        Cmd::Sentiment { input, out, delta_p } => {
            if let Some(d) = delta_p {
                cfg.sentiment.delta_p = d;
            }
            let rt = Runtime::new(cfg)?.with_classifier()?;
            let segments: Vec<Segment> = read_jsonl(&input)?;
            let scored = ordered_map(jobs, &segments, |s| -> CliResult<_> {
                Ok(classify_segment(s, rt.classifier(), &rt.config.sentiment)?)
            })?;
            write_jsonl(&out, &scored)?;
            let count = |p| scored.iter().filter(|s| s.polarity == Some(p)).count();
            logging::info(
                "sentiment",
                json!({
                    "segments": scored.len(),
                    "positive": count(Polarity::Positive),
                    "negative": count(Polarity::Negative),
                    "neutral_dropped": count(Polarity::Neutral),
                }),
            );
        }
        Cmd::Match { segments, taxonomy, out } => {
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let tax = load_taxonomy(&taxonomy)?;
            let segments: Vec<Segment> = read_jsonl(&segments)?;
            let polarized: Vec<&Segment> = segments
                .iter()
                .filter(|s| s.polarity != Some(Polarity::Neutral))
                .collect();
            let rows = ordered_map(jobs, &polarized, |s| -> CliResult<_> {
                let p = s.polarity.ok_or_else(|| reviewlens_core::Error::Unpolarized {
                    review_id: s.review_id.clone(),
                })?;
                let candidates = tax.l3_of(p);
                let outcome = if candidates.is_empty() {
                    None
                } else {
                    Some(match_candidates(&s.text, &candidates, &rt.config.matching, &rt.sim())?)
                };
                Ok(SegmentTrace {
                    segment: (*s).clone(),
                    outcome,
                })
            })?;
            write_jsonl(&out, &rows)?;
            let matched = rows
                .iter()
                .filter(|r| r.outcome.as_ref().is_some_and(|o| o.matched.is_some()))
                .count();
            logging::info(
                "match",
                json!({
                    "segments": segments.len(),
                    "neutral_dropped": segments.len() - polarized.len(),
                    "matched": matched,
                    "no_match_dropped": rows.len() - matched,
                }),
            );
        }
        Cmd::BuildTaxonomy(cmd) => build_taxonomy(cmd, cfg)?,
        Cmd::GenerateData { data, out, records } => {
            label(cfg, jobs, &data, Some(&out), records.as_deref(), None)?;
        }
        Cmd::Pipeline {
            data,
            out,
            pairs,
            traces,
        } => {
            label(cfg, jobs, &data, pairs.as_deref(), Some(&out), traces.as_deref())?;
        }
        Cmd::Infer {
            reviews,
            adapter,
            taxonomy,
            templates,
            out,
        } => {
            load_templates(&mut cfg, &templates)?;
            infer(cfg, jobs, &reviews, &adapter, taxonomy.as_deref(), &out)?;
        }
        Cmd::Postprocess {
            bundles,
            taxonomy,
            out,
            delta,
            records,
            decisions,
        } => {
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let tax = load_taxonomy(&taxonomy)?;
            let bundles: Vec<RawBundle> = read_jsonl(&bundles)?;
            let results = ordered_map(jobs, &bundles, |b| -> CliResult<_> {
                Ok(postprocess_bundle(b, &tax, &rt.config.post, &rt.sim())?)
            })?;
            let d = collect_delta(tax.version, &results);

            #[derive(Serialize)]
            struct Row<'a> {
                review_id: &'a str,
                #[serde(flatten)]
                row: HierRow,
            }
            let rows: Vec<Row> = results
                .iter()
                .flat_map(|r| {
                    r.record.insights.iter().map(|i| Row {
                        review_id: &r.record.review.id,
                        row: hierarchical(i, &tax),
                    })
                })
                .collect();
            write_jsonl(&out, &rows)?;
            write_json(&delta, &d)?;
            if let Some(p) = records {
                write_jsonl(&p, results.iter().map(|r| &r.record))?;
            }
            if let Some(p) = decisions {
                let rows: Vec<_> = results
                    .iter()
                    .map(|r| json!({ "review_id": r.record.review.id, "decisions": r.decisions }))
                    .collect();
                write_jsonl(&p, &rows)?;
            }
            let mut outcomes: BTreeMap<&str, usize> = BTreeMap::new();
            for dec in results.iter().flat_map(|r| &r.decisions) {
                let k = match dec.outcome {
                    Outcome::SyntacticExact { .. } => "syntactic_exact",
                    Outcome::SyntacticPartial { .. } => "syntactic_partial",
                    Outcome::ReplacedSemantic { .. } => "replaced_semantic",
                    Outcome::SurfacedL4 { .. } => "surfaced_l4",
                    Outcome::SurfacedNewL3 => "surfaced_new_l3",
                };
                *outcomes.entry(k).or_default() += 1;
            }
            let warnings: usize = results.iter().map(|r| r.warnings.len()).sum();
            logging::info(
                "postprocess",
                json!({
                    "bundles": bundles.len(),
                    "outcomes": outcomes,
                    "warnings": warnings,
                    "delta_l4": d.l4.len(),
                    "delta_new_l3": d.new_l3.len(),
                }),
            );
        }
        Cmd::Evaluate {
            gold,
            pred,
            report,
            sim_floor,
        } => {
            if let Some(f) = sim_floor {
                cfg.eval.sim_floor = f;
            }
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let gold: Vec<LabelledRecord> = read_jsonl(&gold)?;
            let pred: Vec<LabelledRecord> = read_jsonl(&pred)?;
            let pairs = pair_records(gold, pred)?;
            let metrics = metric_report(&pairs, &rt.sim(), rt.config.eval.sim_floor)?;
            logging::info(
                "evaluate",
                json!({ "reviews": metrics.reviews, "micro_f1": metrics.micro.f1, "macro_f1": metrics.macro_.f1 }),
            );
            write_json(&report, &json!({ "metrics": metrics, "config": rt.config }))?;
        }
        Cmd::Stats { records, out } => {
            let records: Vec<LabelledRecord> = read_jsonl(&records)?;
            let d = topic_distribution(&records);
            logging::info(
                "stats",
                json!({ "records": records.len(), "topics": d.topics.len(), "mentions": d.mentions }),
            );
            write_json(&out, &d)?;
        }
        Cmd::Config => {
            let rt = Runtime::new(cfg)?;
            write_json(Path::new("-"), &rt.config)?;
        }
    }
    Ok(())
}

fn build_taxonomy(cmd: BuildCmd, mut cfg: PipelineConfig) -> CliResult<()> {
    match cmd {
        BuildCmd::Cluster {
            segments,
            out,
            sim_threshold,
            min_cluster_size,
        } => {
            if let Some(v) = sim_threshold {
                cfg.cluster.sim_threshold = v;
            }
            if let Some(v) = min_cluster_size {
                cfg.cluster.min_cluster_size = v;
            }
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let segments: Vec<Segment> = read_jsonl(&segments)?;
            let mut clusters = Vec::new();
            for p in [Polarity::Positive, Polarity::Negative] {
                clusters.extend(fast_cluster(&segments, p, &rt.config.cluster, &rt.sim())?);
            }
            write_json(&out, &clusters)?;
            let members: usize = clusters.iter().map(|c| c.members.len()).sum();
            logging::info(
                "cluster",
                json!({ "segments": segments.len(), "clusters": clusters.len(), "clustered": members }),
            );
        }
        BuildCmd::Export { clusters, out } => {
            let clusters: Vec<Cluster> = read_json(&clusters)?;
            write_json(&out, &export_review_file(&clusters))?;
        }
        BuildCmd::Import { review, out } => {
            let file: ReviewFile = read_json(&review)?;
            let tax = import_review_file(&file).map_err(|e| CliError::data_at(&review, e))?;
            logging::info("import", json!({ "topics": tax.topics.len() }));
            write_json(&out, &tax)?;
        }
        BuildCmd::Clean {
            taxonomy,
            out,
            summary,
            thresholds,
        } => {
            thresholds.apply(&mut cfg);
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let tax = load_taxonomy(&taxonomy)?;
            let (cleaned, s) = clean_taxonomy(&tax, &rt.config.clean, &rt.sim())?;
            write_json(&out, &cleaned)?;
            if let Some(p) = summary {
                write_json(&p, &s)?;
            }
            logging::info(
                "clean",
                json!({
                    "removed_intra": s.removed_intra,
                    "removed_inter": s.removed_inter,
                    "emptied": s.emptied.len(),
                    "version": cleaned.version,
                }),
            );
        }
        BuildCmd::Report { taxonomy, out, thresholds } => {
            thresholds.apply(&mut cfg);
            let rt = Runtime::new(cfg)?.with_embedder()?;
            let tax = load_taxonomy(&taxonomy)?;
            write_json(&out, &taxonomy_quality_report(&tax, &rt.config.clean, &rt.sim())?)?;
        }
    }
    Ok(())
}

/// SegmentNet labelling shared by `generate-data` and `pipeline`.
fn label(
    mut cfg: PipelineConfig,
    jobs: usize,
    data: &DataArgs,
    pairs_out: Option<&Path>,
    records_out: Option<&Path>,
    traces_out: Option<&Path>,
) -> CliResult<()> {
    load_templates(&mut cfg, &data.templates)?;
    if let Some(a) = data.augment {
        cfg.datagen.augment = a;
    }
    if let Some(d) = data.delta_p {
        cfg.sentiment.delta_p = d;
    }
    let rt = Runtime::new(cfg)?.with_embedder()?.with_classifier()?;
    let tax = load_taxonomy(&data.taxonomy)?;
    let reviews = read_reviews(&data.reviews)?;
    let net = rt.net(&tax);
    let labelled = ordered_map(jobs, &reviews, |r| -> CliResult<_> {
        let traces = if traces_out.is_some() { net.trace(r)? } else { Vec::new() };
        let (rec, stats) = net.label(r)?;
        Ok((rec, stats, traces))
    })?;
    let mut stats = LabelStats::default();
    let mut records = Vec::with_capacity(labelled.len());
    let mut traces = Vec::new();
    for (rec, s, t) in labelled {
        stats += s;
        records.push(rec);
        traces.extend(t);
    }
    logging::info(
        "segment",
        json!({ "reviews": stats.reviews, "segments": stats.segments }),
    );
    logging::info(
        "sentiment",
        json!({ "segments": stats.segments, "neutral_dropped": stats.neutral_dropped }),
    );
    logging::info(
        "match",
        json!({
            "segments": stats.segments - stats.neutral_dropped,
            "no_match_dropped": stats.no_match_dropped,
        }),
    );

    let augment = rt.config.datagen.augment;
    let seed = rt.config.seed;
    let expanded: Vec<LabelledRecord> = records
        .iter()
        .flat_map(|r| std::iter::once(r.clone()).chain(shuffle_augment(r, augment, seed)))
        .collect();
    let pairs: Vec<Vec<TrainingPair>> = ordered_map(jobs, &expanded, |r| -> CliResult<_> {
        Ok(serialize_training_pairs(r, &rt.config.templates)?)
    })?;
    let pairs: Vec<TrainingPair> = pairs.into_iter().flatten().collect();
    logging::info(
        "generate-data",
        json!({
            "records": records.len(),
            "insights": stats.insights,
            "augmented_records": expanded.len() - records.len(),
            "pairs": pairs.len(),
        }),
    );
    if let Some(p) = records_out {
        write_jsonl(p, &expanded)?;
    }
    if let Some(p) = pairs_out {
        write_jsonl(p, &pairs)?;
    }
    if let Some(p) = traces_out {
        write_jsonl(p, &traces)?;
    }
    Ok(())
}

fn infer(
    cfg: PipelineConfig,
    jobs: usize,
    reviews: &Path,
    adapter: &str,
    taxonomy: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let reviews = read_reviews(reviews)?;
    let tpl = cfg.templates.clone();
    let results: Vec<(RawBundle, usize)> = if adapter == "rule" {
        let taxonomy =
            taxonomy.ok_or_else(|| CliError::validation("taxonomy", "the rule adapter needs --taxonomy"))?;
        let rt = Runtime::new(cfg)?.with_embedder()?.with_classifier()?;
        let tax = load_taxonomy(taxonomy)?;
        let net = rt.net(&tax);
        ordered_map(jobs, &reviews, |r| -> CliResult<_> {
            let model = Counting::new(RuleBasedAdapter::new(net, tpl.clone())?);
            let b = run_inference(r, &model as &dyn GenerativeModel, &tpl)?;
            Ok((b, model.calls()))
        })?
    } else if let Some(command) = adapter.strip_prefix("exec:") {
        Runtime::new(cfg)?;
        let pool = ExecPool::new(command);
        ordered_map(jobs, &reviews, |r| -> CliResult<_> {
            Ok(pool.with_model(|m| {
                let model = Counting::new(m);
                let b = run_inference(r, &model, &tpl)?;
                Ok((b, model.calls()))
            })?)
        })?
    } else {
        return Err(CliError::validation(
            "adapter",
            format!("expected `rule` or `exec:<command>`, got `{adapter}`"),
        ));
    };
    let calls: usize = results.iter().map(|r| r.1).sum();
    let bundles: Vec<RawBundle> = results.into_iter().map(|r| r.0).collect();
    write_jsonl(out, &bundles)?;
    logging::info(
        "infer",
        json!({
            "reviews": bundles.len(),
            "topics": bundles.iter().map(|b| b.topics.len()).sum::<usize>(),
            "warnings": bundles.iter().map(|b| b.warnings.len()).sum::<usize>(),
            "prompts": calls,
        }),
    );
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit status; errors go
/// to stderr as one JSON object.
pub fn main_exit() -> i32 {
    use clap::error::ErrorKind;
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => {
                    let err = CliError::Validation {
                        field: None,
                        message: e.kind().to_string(),
                    };
                    eprintln!("{}", err.to_json());
                    1
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
