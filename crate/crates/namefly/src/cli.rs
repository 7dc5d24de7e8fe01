//! Command-line front end. Each subcommand is one pipeline stage; every
//! stage reads its inputs from and writes its outputs to `--out`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use namefly_core::corpus::TargetPair;
use namefly_core::matcher::Variant;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::pipeline::{self, Run};

#[derive(Debug, Parser)]
#[command(
    name = "namefly",
    version,
    about = "Continuous author name disambiguation"
)]
pub struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Matcher variant: bp, mfp, mfmi or combined.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Run directory for inputs and outputs.
    #[arg(long, global = true, default_value = "run")]
    pub out: PathBuf,
    /// Configuration override, `section.key=value`. Repeatable.
    #[arg(long = "set", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the planted synthetic corpus.
    GenSynth,
    /// Pre-train skip-gram embeddings for both fields.
    TrainEmbed,
    /// Sample training triplets.
    SampleTriplets,
    /// Train the matcher on the triplets.
    TrainMatch,
    /// Rank the decider samples and write their φ vectors.
    BuildDecision,
    /// Train the NIL decider.
    TrainDecide,
    /// Reward-weighted joint fine-tuning.
    JointFinetune,
    /// Test-set evaluation.
    Evaluate,
    /// Rank candidates for one paper/author slot and decide.
    Predict {
        #[arg(long)]
        paper: String,
        /// Zero-based author slot.
        #[arg(long)]
        author: usize,
    },
    /// Write the 22 baseline features per candidate as CSV.
    Features,
    /// Boosted-tree ranking and score-threshold NIL baselines.
    Baseline,
    /// Every stage from corpus to evaluation.
    Pipeline,
}

pub fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(v) = &cli.variant {
        let v =
            Variant::parse(v).ok_or_else(|| AppError::usage(format!("unknown variant {v:?}")))?;
        cfg.set_variant(v);
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<String> {
    let cfg = build_config(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| AppError::from(e).at(&cli.out))?;
    let run = Run::new(&cfg, &cli.out);
    let value = match &cli.command {
        Command::GenSynth => serde_json::to_value(pipeline::gen_synth(&run)?)?,
        Command::TrainEmbed => serde_json::to_value(pipeline::train_embed(&run)?)?,
        Command::SampleTriplets => serde_json::to_value(pipeline::sample_triplets_stage(&run)?)?,
        Command::TrainMatch => serde_json::to_value(pipeline::train_match(&run)?)?,
        Command::BuildDecision => serde_json::to_value(pipeline::build_decision(&run)?)?,
        Command::TrainDecide => serde_json::to_value(pipeline::train_decide(&run)?)?,
        Command::JointFinetune => serde_json::to_value(pipeline::joint_finetune(&run)?)?,
        Command::Evaluate => serde_json::to_value(pipeline::evaluate(&run)?)?,
        Command::Predict { paper, author } => {
            let target = TargetPair {
                paper: paper.clone().into(),
                author: *author,
            };
            serde_json::to_value(pipeline::predict_target(&run, &target)?)?
        }
        Command::Features => serde_json::to_value(pipeline::features(&run)?)?,
        Command::Baseline => serde_json::to_value(pipeline::baseline(&run)?)?,
        Command::Pipeline => {
            let synth = cfg.corpus.is_none() && !run.path(pipeline::CORPUS).exists();
            serde_json::to_value(pipeline::run_all(&run, synth)?)?
        }
    };
    Ok(serde_json::to_string_pretty(&value)?)
}

/// Parse arguments, run, print the result on stdout or one error line on
/// stderr, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let reason = e.to_string();
            let first = reason.lines().next().unwrap_or("invalid arguments");
            eprintln!(
                "{}",
                AppError::usage(first.trim_start_matches("error: ")).line()
            );
            return 1;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            use std::io::Write;
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout(), "{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
