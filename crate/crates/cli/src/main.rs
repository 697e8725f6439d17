mod commands;
mod config;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgdtm::gaussian::CovarianceMode;
use mgdtm::{Error, Result};

use config::{ModelChoice, RunConfig};

/// Topic modelling with Gaussian mixtures over TF-IDF vectors, with an LDA
/// baseline and coherence-based comparison.
#[derive(Parser)]
#[command(name = "mgdtm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working directory for every input and output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a corpus and write corpus.jsonl and vocab.txt.
    Preprocess {
        /// A .jsonl or .csv file, or a directory of .txt files.
        #[arg(long, conflicts_with = "bundled")]
        input: Option<PathBuf>,
        /// txt-dir, jsonl or csv (guessed from the path by default).
        #[arg(long)]
        format: Option<String>,
        /// Use the bundled 18-document corpus.
        #[arg(long)]
        bundled: bool,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        lemmas: Option<PathBuf>,
        #[arg(long)]
        min_df: Option<usize>,
        #[arg(long)]
        min_token_length: Option<usize>,
        /// Keep documents left without tokens.
        #[arg(long)]
        allow_empty: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the selected model(s) and write model and keyword files.
    Fit {
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        covariance: Option<Covariance>,
        /// EM iteration cap.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Gibbs sweeps.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        top_n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the keywords of stored models.
    Keywords {
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score both models with Cv coherence and run the one-tailed t-test.
    Compare {
        /// Skip the models: `mean1,sd1,n1,mean2,sd2,n2`.
        #[arg(long)]
        stats_only: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        window_size: Option<usize>,
        #[arg(long)]
        top_n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep K and pick the one where coherence and normalized perplexity meet.
    SelectK {
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, hide = true)]
        fail_at: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Covariance {
    Diagonal,
    FullShrinkage,
}

fn base(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if common.out.is_some() {
        cfg.out.clone_from(&common.out);
    }
    cfg.set_seed(common.seed);
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            format,
            bundled,
            stopwords,
            lemmas,
            min_df,
            min_token_length,
            allow_empty,
            common,
        } => {
            let mut cfg = base(&common)?;
            if input.is_some() || bundled {
                cfg.input.source = input;
                cfg.input.bundled = bundled;
            }
            if format.is_some() {
                cfg.input.format = format;
            }
            if stopwords.is_some() {
                cfg.pipeline.stopwords = stopwords;
            }
            if lemmas.is_some() {
                cfg.pipeline.lemmas = lemmas;
            }
            set(&mut cfg.pipeline.min_document_frequency, min_df);
            set(&mut cfg.pipeline.min_token_length, min_token_length);
            cfg.pipeline.allow_empty |= allow_empty;
            cfg.validate()?;
            commands::preprocess(&cfg)
        }
        Command::Fit {
            model,
            k,
            covariance,
            max_iterations,
            iterations,
            burn_in,
            top_n,
            common,
        } => {
            let mut cfg = base(&common)?;
            set(&mut cfg.model, model);
            cfg.set_k(k);
            set(
                &mut cfg.em.covariance,
                covariance.map(|c| match c {
                    Covariance::Diagonal => CovarianceMode::Diagonal,
                    Covariance::FullShrinkage => CovarianceMode::FullShrinkage,
                }),
            );
            set(&mut cfg.em.max_iterations, max_iterations);
            set(&mut cfg.lda.iterations, iterations);
            set(&mut cfg.lda.burn_in, burn_in);
            set(&mut cfg.top_n, top_n);
            cfg.validate()?;
            commands::fit(&cfg)
        }
        Command::Keywords {
            model,
            top_n,
            json,
            common,
        } => {
            let mut cfg = base(&common)?;
            set(&mut cfg.model, model);
            set(&mut cfg.top_n, top_n);
            cfg.validate()?;
            commands::keywords(&cfg, json)
        }
        Command::Compare {
            stats_only,
            alpha,
            window_size,
            top_n,
            common,
        } => {
            let mut cfg = base(&common)?;
            set(&mut cfg.alpha, alpha);
            set(&mut cfg.coherence.window_size, window_size);
            set(&mut cfg.coherence.top_n, top_n);
            cfg.validate()?;
            commands::compare(&cfg, stats_only.as_deref())
        }
        Command::SelectK {
            model,
            k_min,
            k_max,
            iterations,
            burn_in,
            fail_at,
            common,
        } => {
            let mut cfg = base(&common)?;
            set(&mut cfg.model, model);
            match (k_min, k_max, cfg.k_range) {
                (Some(lo), Some(hi), _) => cfg.k_range = Some([lo, hi]),
                (Some(lo), None, Some([_, hi])) | (None, Some(hi), Some([lo, _])) => cfg.k_range = Some([lo, hi]),
                (None, None, _) => {}
                _ => return Err(Error::Config("give both --k-min and --k-max".into())),
            }
            set(&mut cfg.lda.iterations, iterations);
            set(&mut cfg.lda.burn_in, burn_in);
            cfg.validate()?;
            commands::select_k(&cfg, fail_at)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. }
        | Error::MalformedRecord { .. }
        | Error::DuplicateId(_)
        | Error::Data(_)
        | Error::EmptyVocabulary { .. }
        | Error::EmptyCorpus(_)
        | Error::EmptyCluster { .. } => 3,
        Error::Mismatch(_) => 4,
        Error::Numerical(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
