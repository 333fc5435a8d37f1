//! `cner` command line.
//!
//! Exit codes: 0 success, 1 runtime failure (e.g. remote extractor down),
//! 2 bad arguments, configuration or input files, 3 bind failure,
//! 4 unknown or unavailable extractor, 5 empty training corpus.

use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use cner_core::metrics::PrfCounts;
use cner_core::ner::{decode_bio, evaluate_mentions, tag_sentence, tag_sequence, train_tagger, EntityType, TrainError};
use cner_core::relex::{evaluate_relex, train_relex, RelationLabel, RelexHyperparameters, RelexTrainError};
use cner_core::text::{Abbreviations, Source};
use serde_json::json;

use crate::config::ServiceConfig;
use crate::corpus::{load_ner_corpus, load_re_corpus, GOLD};
use crate::extractor::{LEARNED_ID, RULE_ID};
use crate::formats::{
    load_abbreviations, load_relex_model, load_tagger_model, write_relex_model, write_tagger_model, write_text,
};
use crate::ingest::decode_plain;
use crate::pipeline::{AnalyzeOptions, Analyzer};
use crate::service::{serve, AppState};
use crate::wire::{self, AnalysisResult, ErrorCode};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BIND: u8 = 3;
pub const EXIT_EXTRACTOR: u8 = 4;
pub const EXIT_EMPTY_CORPUS: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "cner", version, about = "Spanish named-entity and relation extraction")]
pub struct Cli {
    /// Configuration file (`key = value`); `CNER_*` variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for training shuffles.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Ner,
    Re,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve,
    /// Analyze text given as an argument, a file or stdin.
    Analyze {
        /// Text to analyze; stdin is read when neither this nor --file is given.
        #[arg(conflicts_with = "file")]
        text: Option<String>,
        /// A .txt, .odt or .doc file.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value = RULE_ID)]
        extractor: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        #[arg(long)]
        include_non_rel: bool,
        #[arg(long)]
        max_token_distance: Option<usize>,
    },
    /// Train the sequence tagger on a two-column corpus.
    TrainNer {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: u32,
        #[arg(long)]
        out: PathBuf,
        /// Creation time recorded in the model; defaults to
        /// SOURCE_DATE_EPOCH, else 0, so that runs are reproducible.
        #[arg(long)]
        created_at: Option<u64>,
    },
    /// Train the relation classifier on a JSON-lines corpus.
    TrainRe {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        epochs: u32,
        #[arg(long)]
        max_token_distance: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        created_at: Option<u64>,
    },
    /// Score a model against a gold corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        /// Print machine-readable JSON instead of a table.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        max_token_distance: Option<usize>,
    },
}

/// Diagnostic on stderr plus the exit code to return.
struct Failure(u8, String);

type Outcome = Result<(), Failure>;

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure(code, message.into())
}

pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Serve => cmd_serve(cli.config.as_deref()),
        Command::Analyze {
            text,
            file,
            extractor,
            format,
            include_non_rel,
            max_token_distance,
        } => cmd_analyze(
            cli.config.as_deref(),
            text,
            file,
            AnalyzeOptions {
                extractor_id: extractor,
                include_non_rel,
                max_token_distance,
            },
            format,
        ),
        Command::TrainNer {
            corpus,
            epochs,
            out,
            created_at,
        } => cmd_train_ner(&corpus, epochs, cli.seed, &out, created_at),
        Command::TrainRe {
            corpus,
            lambda,
            epochs,
            max_token_distance,
            out,
            created_at,
        } => cmd_train_re(
            cli.config.as_deref(),
            &corpus,
            RelexHyperparameters {
                lambda,
                epochs,
                seed: cli.seed,
            },
            max_token_distance,
            &out,
            created_at,
        ),
        Command::Evaluate {
            model,
            corpus,
            task,
            json,
            max_token_distance,
        } => cmd_evaluate(cli.config.as_deref(), &model, &corpus, task, json, max_token_distance),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure(code, message)) => {
            eprintln!("cner: {message}");
            code
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Failure> {
    match path {
        Some(p) => ServiceConfig::load(p),
        None => ServiceConfig::from_env(),
    }
    .map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

fn build_analyzer(config: &ServiceConfig) -> Result<Analyzer, Failure> {
    let analyzer = Analyzer::from_config(config).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    for w in &analyzer.startup_warnings {
        eprintln!("cner: warning: {w}");
    }
    Ok(analyzer)
}

fn abbreviations(config: &ServiceConfig) -> Result<Abbreviations, Failure> {
    match &config.abbreviations {
        Some(p) => load_abbreviations(p).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", p.display()))),
        None => Ok(Abbreviations::default()),
    }
}

fn created_at(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| fail(EXIT_USAGE, format!("SOURCE_DATE_EPOCH `{v}` is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn cmd_serve(config_path: Option<&Path>) -> Outcome {
    let config = load_config(config_path)?;
    let analyzer = build_analyzer(&config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| fail(EXIT_RUNTIME, e.to_string()))?;
    runtime.block_on(async move {
        let address = format!("{}:{}", config.bind, config.port);
        let listener = tokio::net::TcpListener::bind(&address)
            .await
            .map_err(|e| fail(EXIT_BIND, format!("cannot bind {address}: {e}")))?;
        let local: SocketAddr = listener.local_addr().map_err(|e| fail(EXIT_BIND, e.to_string()))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        serve(listener, AppState::new(analyzer), shutdown_signal())
            .await
            .map_err(|e| fail(EXIT_RUNTIME, e.to_string()))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    {
        let mut term = match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => return ctrl_c.await,
        };
        tokio::select! {
            _ = ctrl_c => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    ctrl_c.await;
}

fn cmd_analyze(
    config_path: Option<&Path>,
    text: Option<String>,
    file: Option<PathBuf>,
    options: AnalyzeOptions,
    format: OutputFormat,
) -> Outcome {
    let config = load_config(config_path)?;
    let analyzer = build_analyzer(&config)?;
    let result = match (text, file) {
        (Some(text), _) => analyzer.analyze(&text, Source::Manual, &options),
        (None, Some(path)) => {
            let bytes = std::fs::read(&path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            analyzer.analyze_file(&name, &bytes, &options)
        }
        (None, None) => {
            let mut bytes = Vec::new();
            std::io::stdin()
                .read_to_end(&mut bytes)
                .map_err(|e| fail(EXIT_USAGE, format!("cannot read stdin: {e}")))?;
            let decoded = decode_plain(&bytes);
            analyzer.analyze(&decoded.text, Source::Manual, &options).map(|mut r| {
                let mut warnings = decoded.warnings;
                warnings.append(&mut r.warnings);
                r.warnings = warnings;
                r
            })
        }
    };
    let result = result.map_err(|e| {
        let code = match e.code {
            ErrorCode::UnknownExtractor | ErrorCode::ExtractorNotReady => EXIT_EXTRACTOR,
            ErrorCode::RemoteUnavailable => EXIT_RUNTIME,
            _ => EXIT_USAGE,
        };
        fail(code, e.message)
    })?;
    let out = match format {
        OutputFormat::Json => wire::to_json(&result),
        OutputFormat::Tsv => relation_tsv(&result),
    };
    print_stdout(&out)
}

fn print_stdout(text: &str) -> Outcome {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| fail(EXIT_RUNTIME, format!("cannot write output: {e}")))
}

/// One relation per line:
/// `sentence_index, arg1 surface, arg1 type, arg2 surface, arg2 type, label, score`.
pub fn relation_tsv(result: &AnalysisResult) -> String {
    let chars: Vec<char> = result.document.text.chars().collect();
    let surface = |i: usize| -> String {
        let span = result.mentions[i].span;
        chars[span.start..span.end].iter().collect()
    };
    let mut out = String::new();
    for r in &result.relations {
        let label = RelationLabel::from_code(&r.label).expect("labels on the wire are canonical");
        let (a, b) = (&result.mentions[r.pair.arg1], &result.mentions[r.pair.arg2]);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\n",
            r.pair.sentence_index,
            surface(r.pair.arg1),
            a.entity_type,
            surface(r.pair.arg2),
            b.entity_type,
            r.label,
            r.scores[label.index()]
        ));
    }
    out
}

fn cmd_train_ner(corpus: &Path, epochs: u32, seed: u64, out: &Path, created: Option<u64>) -> Outcome {
    let created = created_at(created)?;
    let corpus = load_ner_corpus(corpus).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    if corpus.is_empty() {
        return Err(fail(EXIT_EMPTY_CORPUS, "empty corpus"));
    }
    let pairs = corpus.training_pairs();
    let model = train_tagger(&pairs, epochs, seed, created).map_err(|e| match e {
        TrainError::EmptyCorpus => fail(EXIT_EMPTY_CORPUS, "empty corpus"),
        other => fail(EXIT_USAGE, other.to_string()),
    })?;
    write_text(out, &write_tagger_model(&model)).map_err(|e| fail(EXIT_RUNTIME, e.to_string()))?;

    let (mut correct, mut total) = (0usize, 0usize);
    for (sentence, gold) in &pairs {
        let predicted = tag_sequence(&model, sentence);
        correct += predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
        total += gold.len();
    }
    let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    print_stdout(&format!("token accuracy {accuracy:.3}\n"))
}

fn cmd_train_re(
    config_path: Option<&Path>,
    corpus: &Path,
    hp: RelexHyperparameters,
    max_token_distance: Option<usize>,
    out: &Path,
    created: Option<u64>,
) -> Outcome {
    let config = load_config(config_path)?;
    let created = created_at(created)?;
    let max_distance = max_token_distance.unwrap_or(config.max_token_distance);
    let corpus = load_re_corpus(corpus, &abbreviations(&config)?).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    if corpus.is_empty() {
        return Err(fail(EXIT_EMPTY_CORPUS, "empty corpus"));
    }
    let instances = corpus.instances(max_distance);
    let (model, _) = train_relex(&instances, hp, created).map_err(|e| match e {
        RelexTrainError::EmptyTrainingSet => fail(EXIT_EMPTY_CORPUS, "corpus yields no mention pairs"),
        other => fail(EXIT_USAGE, other.to_string()),
    })?;
    write_text(out, &write_relex_model(&model)).map_err(|e| fail(EXIT_RUNTIME, e.to_string()))?;
    let accuracy = evaluate_relex(&model, &instances).map(|m| m.accuracy()).unwrap_or(0.0);
    print_stdout(&format!("training accuracy {accuracy:.3}\n"))
}

fn prf_json(c: &PrfCounts) -> serde_json::Value {
    json!({
        "precision": c.precision(),
        "recall": c.recall(),
        "f1": c.f1(),
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn_,
        "support": c.support(),
    })
}

fn prf_line(name: &str, c: &PrfCounts) -> String {
    format!(
        "{name:<8} P={:.3} R={:.3} F1={:.3} support={}\n",
        c.precision(),
        c.recall(),
        c.f1(),
        c.support()
    )
}

fn cmd_evaluate(
    config_path: Option<&Path>,
    model: &Path,
    corpus: &Path,
    task: Task,
    as_json: bool,
    max_token_distance: Option<usize>,
) -> Outcome {
    let report = match task {
        Task::Ner => {
            let model = load_tagger_model(model).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", model.display())))?;
            let corpus = load_ner_corpus(corpus).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            if corpus.is_empty() {
                return Err(fail(EXIT_USAGE, "empty corpus"));
            }
            let mut gold = Vec::new();
            let mut predicted = Vec::new();
            for (sentence, tags) in corpus.training_pairs() {
                gold.push(decode_bio(&tags, &sentence, GOLD, 1.0).map_err(|e| fail(EXIT_USAGE, e.to_string()))?);
                predicted.push(tag_sentence(&model, &sentence, LEARNED_ID));
            }
            let metrics = evaluate_mentions(gold.iter().map(Vec::as_slice).zip(predicted.iter().map(Vec::as_slice)));
            if as_json {
                let per_type: serde_json::Map<String, serde_json::Value> = EntityType::ALL
                    .iter()
                    .map(|t| (t.code().to_string(), prf_json(metrics.for_type(*t))))
                    .collect();
                let body = json!({"task": "ner", "per_type": per_type, "micro": prf_json(&metrics.micro)});
                format!("{body}\n")
            } else {
                let mut out = String::new();
                for t in EntityType::ALL {
                    out.push_str(&prf_line(t.code(), metrics.for_type(t)));
                }
                out.push_str(&prf_line("micro", &metrics.micro));
                out
            }
        }
        Task::Re => {
            let config = load_config(config_path)?;
            let max_distance = max_token_distance.unwrap_or(config.max_token_distance);
            let model = load_relex_model(model).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", model.display())))?;
            let corpus =
                load_re_corpus(corpus, &abbreviations(&config)?).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let metrics = evaluate_relex(&model, &corpus.instances(max_distance))
                .map_err(|_| fail(EXIT_USAGE, "empty corpus"))?;
            if as_json {
                let per_label: serde_json::Map<String, serde_json::Value> = RelationLabel::ALL
                    .iter()
                    .map(|l| (l.code().to_string(), prf_json(metrics.for_label(*l))))
                    .collect();
                let body = json!({
                    "task": "re",
                    "per_label": per_label,
                    "micro": prf_json(&metrics.micro),
                    "micro_undefined": metrics.micro_undefined,
                    "macro_f1": metrics.macro_f1,
                    "accuracy": metrics.accuracy(),
                    "confusion": metrics.confusion,
                });
                format!("{body}\n")
            } else {
                let mut out = String::new();
                for l in RelationLabel::ALL {
                    out.push_str(&prf_line(l.code(), metrics.for_label(l)));
                }
                out.push_str(&prf_line("micro", &metrics.micro));
                out.push_str(&format!("macro    F1={:.3}\n", metrics.macro_f1));
                out.push_str(&format!("accuracy {:.3}\n", metrics.accuracy()));
                out
            }
        }
    };
    print_stdout(&report)
}
