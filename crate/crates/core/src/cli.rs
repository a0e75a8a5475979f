//! Batch command-line front end.
//!
//! Prediction directories hold `.ann` files only; their texts come from a
//! texts or gold directory. Report files are deterministic; run metadata
//! (including a timestamp) goes to a separate manifest.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::brat::{corpus_stats, load_corpus, load_predictions, load_texts, stats_tsv, write_corpus, Corpus, Document};
use crate::crf::{self, CrfModel, TrainConfig};
use crate::ensemble::{
    composition_tsv, majority_vote, search_composition, tally_votes, EnsembleConfig, PredictionSet, Quorum,
};
use crate::error::{Error, Result};
use crate::eval::{confusion, evaluate, metrics_tsv, span_errors, MatchMode};

#[derive(Debug, Clone, Parser)]
#[command(name = "chempat", version, about = "Chemical patent NER: CRF baseline, voting ensembles, span evaluation")]
pub struct Cli {
    /// Worker threads for per-document work (0 = all cores). Output does not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Relaxed,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<MatchMode> {
        match self {
            ModeArg::Exact => vec![MatchMode::Exact],
            ModeArg::Relaxed => vec![MatchMode::Relaxed],
            ModeArg::Both => vec![MatchMode::Exact, MatchMode::Relaxed],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Entity counts and percentages per type.
    Stats { corpus: PathBuf },

    /// Train a CRF on a BRAT corpus.
    CrfTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },

    /// Tag every text of a directory with a trained CRF.
    CrfTag {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        texts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// Majority-vote several prediction directories.
    Vote {
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        texts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "strict-majority")]
        quorum: Quorum,
    },

    /// Score every ensemble composition against gold.
    Search {
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        texts: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = 2)]
        min: usize,
        /// Clamped to the number of prediction directories.
        #[arg(long, default_value_t = 7)]
        max: usize,
        #[arg(long)]
        out: PathBuf,
    },

    /// Precision, recall and F1 per type and overall.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Metrics, confusion matrices and span-error histogram.
    Analyze {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses arguments without the program name. Usage errors carry exit code 2.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(std::iter::once(OsString::from("chempat")).chain(argv.into_iter().map(Into::into)))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a [String],
    inputs: Vec<String>,
    outputs: Vec<String>,
    created_unix: u64,
}

fn write_manifest(path: &Path, command: &str, argv: &[String], inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let manifest = Manifest {
        tool: "chempat",
        version: env!("CARGO_PKG_VERSION"),
        command,
        args: argv,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Manifest path for a single output file: `<file>.manifest.json`.
fn file_manifest(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn model_name(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string())
}

fn prediction_sets(dirs: &[PathBuf], texts: &Corpus) -> Result<Vec<PredictionSet>> {
    dirs.iter().map(|d| Ok(PredictionSet::new(model_name(d), load_predictions(d, texts)?))).collect()
}

/// Runs a parsed command inside a thread pool sized by `--jobs`.
pub fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| execute(&cli.command, argv))
}

fn execute(command: &Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Stats { corpus } => {
            let corpus = load_corpus(corpus)?;
            print!("{}", stats_tsv(&corpus_stats(&corpus)));
        }

        Command::CrfTrain { corpus, model, l2, max_iter, tol } => {
            let data = load_corpus(corpus)?;
            let config = TrainConfig { l2: *l2, max_iterations: *max_iter, tolerance: *tol, seed: 0 };
            let (trained, log) = crf::train(&data, &config)?;
            write_file(model, &trained.to_model_text()?)?;
            let mut log_name = model.file_name().map(OsString::from).unwrap_or_default();
            log_name.push(".trainlog.tsv");
            let log_path = model.with_file_name(log_name);
            let mut tsv = String::from("iteration\tobjective\tstep_size\n");
            for s in &log.steps {
                tsv.push_str(&format!("{}\t{:.10e}\t{:.6e}\n", s.iteration, s.objective, s.step_size));
            }
            write_file(&log_path, &tsv)?;
            log::info!(
                "trained {} features x {} labels in {} iterations (converged: {})",
                trained.features().len(),
                trained.num_labels(),
                log.steps.len() - 1,
                log.converged
            );
            write_manifest(&file_manifest(model), "crf-train", argv, &[corpus], &[model, &log_path])?;
        }

        Command::CrfTag { model, texts, out } => {
            let crf_model = CrfModel::load(model)?;
            let texts_corpus = load_texts(texts)?;
            let tagged: Vec<Document> = {
                use rayon::prelude::*;
                let docs: Vec<&Document> = texts_corpus.documents().collect();
                docs.par_iter()
                    .map(|d| d.with_entities(crf::tag_document(&crf_model, &d.text)))
                    .collect::<Result<_>>()?
            };
            let corpus: Corpus = tagged.into_iter().collect();
            write_corpus(&corpus, out, false)?;
            write_manifest(&out.join("manifest.json"), "crf-tag", argv, &[model, texts], &[out])?;
        }

        Command::Vote { pred, texts, out, quorum } => {
            let texts_corpus = load_texts(texts)?;
            let sets = prediction_sets(pred, &texts_corpus)?;
            let tally = tally_votes(&sets)?;
            let config = EnsembleConfig::new(*quorum, tally.models().to_vec())?;
            let voted = majority_vote(&tally, &config)?;
            write_corpus(&voted, out, false)?;
            let mut inputs: Vec<&Path> = pred.iter().map(PathBuf::as_path).collect();
            inputs.push(texts);
            write_manifest(&out.join("manifest.json"), "vote", argv, &inputs, &[out])?;
        }

        Command::Search { pred, texts, gold, min, max, out } => {
            let texts_corpus = load_texts(texts)?;
            let gold_corpus = load_corpus(gold)?;
            let sets = prediction_sets(pred, &texts_corpus)?;
            let rows = search_composition(&sets, &gold_corpus, *min, (*max).min(sets.len()))?;
            write_file(out, &composition_tsv(&rows))?;
            if let Some(best) = rows.first() {
                log::info!("best composition: {} (exact F1 {:.4})", best.members.join(","), best.exact.f1);
            }
            let mut inputs: Vec<&Path> = pred.iter().map(PathBuf::as_path).collect();
            inputs.extend([texts.as_path(), gold.as_path()]);
            write_manifest(&file_manifest(out), "search", argv, &inputs, &[out])?;
        }

        Command::Evaluate { gold, pred, mode, out } => {
            let gold_corpus = load_corpus(gold)?;
            let pred_corpus = load_predictions(pred, &gold_corpus)?;
            let scores: Vec<_> = mode.modes().into_iter().map(|m| evaluate(&gold_corpus, &pred_corpus, m)).collect();
            let report = metrics_tsv(&scores);
            match out {
                Some(path) => {
                    write_file(path, &report)?;
                    write_manifest(&file_manifest(path), "evaluate", argv, &[gold, pred], &[path])?;
                }
                None => print!("{report}"),
            }
        }

        Command::Analyze { gold, pred, out } => {
            let gold_corpus = load_corpus(gold)?;
            let pred_corpus = load_predictions(pred, &gold_corpus)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let scores: Vec<_> = [MatchMode::Exact, MatchMode::Relaxed]
                .into_iter()
                .map(|m| evaluate(&gold_corpus, &pred_corpus, m))
                .collect();
            let matrix = confusion(&gold_corpus, &pred_corpus);
            let errors = span_errors(&gold_corpus, &pred_corpus);
            write_file(&out.join("metrics.tsv"), &metrics_tsv(&scores))?;
            write_file(&out.join("confusion_counts.csv"), &matrix.counts_csv())?;
            write_file(&out.join("confusion_normalized.csv"), &matrix.normalized_csv())?;
            write_file(&out.join("span_errors.tsv"), &errors.to_tsv())?;
            write_manifest(&out.join("manifest.json"), "analyze", argv, &[gold, pred], &[out])?;
        }
    }
    Ok(())
}
