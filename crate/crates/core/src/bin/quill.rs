use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quill::config::RunConfig;
use quill::eval::MetricsReport;
use quill::pipeline::{self, EvaluateArgs, Predictor};
use quill::{QuillError, Result};

#[derive(Parser, Debug)]
#[command(name = "quill", version, about = "StackOverflow question-quality classifiers")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for splits, initialization and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override `section.key=value`; repeatable, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split the dataset and build the vocabulary.
    Prepare {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train one model family.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// nb, dt, svm, lr, model1 or model2.
        #[arg(long)]
        family: Option<String>,
    },
    /// Score a model on the test part of the split.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Predict one label per input line.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Input file; standard input when omitted or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Merge curve CSVs (`path` or `name=path`) into one table.
    Curves {
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn config_for(cli: &Cli, dataset: Option<&PathBuf>, family: Option<&String>) -> Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    let quote = |s: &str| toml::Value::String(s.to_string()).to_string();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("out={}", quote(&out.to_string_lossy())));
    }
    if let Some(d) = dataset {
        overrides.push(format!("data.dataset={}", quote(&d.to_string_lossy())));
    }
    if let Some(f) = family {
        overrides.push(format!("model.family={}", quote(f)));
    }
    RunConfig::load(cli.config.as_deref(), &overrides)
}

fn print_metrics(name: &str, report: &MetricsReport) {
    println!("{}", MetricsReport::csv_header());
    println!("{}", report.csv_row(name));
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Prepare { dataset } => {
            let config = config_for(cli, dataset.as_ref(), None)?;
            print!("{}", pipeline::cmd_prepare(&config)?.to_text());
        }
        Command::Train { dataset, family } => {
            let config = config_for(cli, dataset.as_ref(), family.as_ref())?;
            let outcome = pipeline::cmd_train(&config)?;
            println!("artifact={}", outcome.artifact_path.display());
            println!("param_count={}", outcome.param_count);
            if let Some(epoch) = outcome.overfitting_epoch {
                println!("overfitting_from_epoch={epoch}");
            }
            if let Some(r) = &outcome.validation_metrics {
                print_metrics(config.model.family.tag(), r);
            }
        }
        Command::Evaluate {
            dataset,
            family,
            model,
            split,
            vocab,
        } => {
            let config = config_for(cli, dataset.as_ref(), family.as_ref())?;
            let args = EvaluateArgs {
                model: model.clone(),
                split: split.clone(),
                vocab: vocab.clone(),
            };
            let outcome = pipeline::cmd_evaluate(&config, &args)?;
            print_metrics(outcome.family.tag(), &outcome.report);
        }
        Command::Predict { model, vocab, input } => {
            let predictor = Predictor::load(model, vocab.as_deref())?;
            let reader = pipeline::open_input(input.as_deref())?;
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            pipeline::cmd_predict(&predictor, reader, &mut out)?;
            out.flush().map_err(|e| QuillError::Format(format!("cannot write output: {e}")))?;
        }
        Command::Curves { inputs, output } => {
            let merged = pipeline::cmd_curves(inputs)?;
            match output {
                Some(path) => std::fs::write(path, merged)
                    .map_err(|e| QuillError::Format(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{merged}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("quill-error[{}]: {message}", e.code());
            ExitCode::FAILURE
        }
    }
}
