//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use convo_affect_core::encoder::EmbedderKind;
use convo_affect_core::frontend::extract_patches;
use convo_affect_core::model::DialogueModel;
use convo_affect_core::synthetic::SyntheticSpec;
use convo_affect_core::train::{train, Checkpoint};
use serde::Serialize;

use crate::ablation::run_ablations;
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{Overrides, RunConfig};
use crate::container::{write_container, Payload};
use crate::dataset::build_dialogues;
use crate::error::{Error, Result};
use crate::eval::{evaluate, predict_all};
use crate::manifest::load_manifest;
use crate::parallel::par_map;
use crate::report::{ablation_table, f1_table, report_json};
use crate::synth::write_synthetic;
use crate::wav::read_wav;

#[derive(Debug, Parser)]
#[command(name = "convo-affect", version, about = "Emotion recognition for spoken conversations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; omitted keys take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for initialization, shuffling and the stub embedder.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub embedder: Option<EmbedderArg>,
    /// Worker threads for feature extraction and evaluation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EmbedderArg {
    Precomputed,
    Stub,
    Linear,
}

impl From<EmbedderArg> for EmbedderKind {
    fn from(e: EmbedderArg) -> Self {
        match e {
            EmbedderArg::Precomputed => EmbedderKind::Precomputed,
            EmbedderArg::Stub => EmbedderKind::Stub,
            EmbedderArg::Linear => EmbedderKind::Linear,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert WAV files into patch containers, one per file.
    ExtractFeatures {
        /// WAV file or directory (searched recursively).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Report unreadable files and carry on.
        #[arg(long)]
        keep_going: bool,
    },
    /// Train on a manifest and write the best checkpoint.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Validation manifest for checkpoint selection and early stopping.
        #[arg(long)]
        val_manifest: Option<PathBuf>,
        #[arg(long)]
        out_checkpoint: PathBuf,
        /// Training log (JSON); defaults to the checkpoint path plus `.log.json`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Print the per-class F1 table for a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write per-utterance class probabilities as JSON lines.
    Predict {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write attention weights over the context history as JSON lines.
    ExportAttention {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and test the full model and each single-component ablation.
    Ablate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        val_manifest: Option<PathBuf>,
        #[arg(long)]
        test_manifest: PathBuf,
    },
    /// Write the synthetic corpus (containers, manifest, config) to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Show the effective configuration.
    Config {
        /// Print every key with its value as TOML.
        #[arg(long)]
        dump: bool,
    },
}

fn run_config(g: &GlobalArgs) -> Result<RunConfig> {
    RunConfig::load(g.config.as_deref())?.finalize(&Overrides {
        seed: g.seed,
        embedder: g.embedder.map(Into::into),
        workers: g.workers,
    })
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    create_parent(path)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn collect_files(root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if root.is_file() {
        out.push(root.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(root, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn extract_features(cfg: &RunConfig, input: &Path, out: &Path, keep_going: bool) -> Result<()> {
    let mut files = Vec::new();
    collect_files(input, &mut files)?;
    let results = par_map(&files, cfg.workers, |f| -> Result<Payload> {
        let wave = read_wav(f)?;
        Payload::from_patches(&extract_patches(&wave, &cfg.frontend)?)
    });
    let (mut ok, mut segments, mut failed) = (0usize, 0usize, 0usize);
    for (file, res) in files.iter().zip(results) {
        let rel = if input.is_file() {
            PathBuf::from(file.file_name().unwrap_or_default())
        } else {
            file.strip_prefix(input).unwrap_or(file).to_path_buf()
        };
        let res = res.and_then(|payload| {
            let dest = out.join(rel).with_extension("cafe");
            create_parent(&dest)?;
            write_container(&dest, &payload)?;
            Ok(payload.count())
        });
        match res {
            Ok(n) => {
                ok += 1;
                segments += n;
            }
            Err(e) => {
                eprintln!("error: {}: {e}", file.display());
                if !keep_going {
                    return Err(e);
                }
                failed += 1;
            }
        }
    }
    println!("{ok} files, {segments} segments");
    if failed > 0 {
        eprintln!("{failed} files failed");
    }
    Ok(())
}

fn default_log_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".log.json");
    PathBuf::from(s)
}

fn cmd_train(cfg: &RunConfig, manifest: &Path, val: Option<&Path>, out: &Path, log: Option<&Path>) -> Result<()> {
    let tr = build_dialogues(&load_manifest(manifest)?, &cfg.frontend, &cfg.model, cfg.workers)?;
    let va = match val {
        Some(v) => build_dialogues(&load_manifest(v)?, &cfg.frontend, &cfg.model, cfg.workers)?,
        None => Vec::new(),
    };
    let model = DialogueModel::new(cfg.model.clone(), cfg.seed)?;
    let outcome = train(&tr, &va, model, &cfg.train)?;
    for e in &outcome.log.epochs {
        eprintln!(
            "epoch {:>4}  loss {:.6}  train acc {:.3}  train wF1 {:.3}{}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            e.train_weighted_f1,
            e.val_weighted_f1.map(|v| format!("  val wF1 {v:.3}")).unwrap_or_default()
        );
    }
    create_parent(out)?;
    save_checkpoint(out, &outcome.best)?;
    let log_path = log.map(Path::to_path_buf).unwrap_or_else(|| default_log_path(out));
    let json = serde_json::to_string_pretty(&outcome.log).expect("log serializes");
    write_file(&log_path, json.as_bytes())?;
    println!(
        "best epoch {} (weighted F1 {:.3}); checkpoint {}",
        outcome.best.epoch,
        outcome.best.metric,
        out.display()
    );
    Ok(())
}

fn load_for_inference(cfg: &RunConfig, manifest: &Path, ckpt: &Path) -> Result<(Checkpoint, Vec<convo_affect_core::dialogue::Dialogue>)> {
    let ckpt = load_checkpoint(ckpt)?;
    let ds = build_dialogues(&load_manifest(manifest)?, &cfg.frontend, &ckpt.model.config, cfg.workers)?;
    Ok((ckpt, ds))
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    dialogue_id: &'a str,
    turn: usize,
    probs: &'a [f64],
    argmax: usize,
}

#[derive(Serialize)]
struct AttentionRow<'a> {
    dialogue_id: &'a str,
    t: usize,
    weights: &'a [f64],
}

fn jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for r in rows {
        s += &serde_json::to_string(&r).expect("row serializes");
        s.push('\n');
    }
    s
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = run_config(&cli.global)?;
    match cli.command {
        Command::Config { dump } => {
            if dump {
                print!("{}", cfg.to_toml());
            } else {
                println!("configuration is valid; use --dump to print it");
            }
        }
        Command::ExtractFeatures { input, out, keep_going } => extract_features(&cfg, &input, &out, keep_going)?,
        Command::Train {
            manifest,
            val_manifest,
            out_checkpoint,
            log,
        } => cmd_train(&cfg, &manifest, val_manifest.as_deref(), &out_checkpoint, log.as_deref())?,
        Command::Evaluate {
            manifest,
            checkpoint,
            report,
        } => {
            let (ckpt, ds) = load_for_inference(&cfg, &manifest, &checkpoint)?;
            let r = evaluate(&ds, &ckpt.model, cfg.workers)?;
            print!("{}", f1_table(&[("model", &r)]));
            if let Some(p) = report {
                write_file(&p, report_json(&r).as_bytes())?;
            }
        }
        Command::Predict {
            manifest,
            checkpoint,
            out,
        } => {
            let (ckpt, ds) = load_for_inference(&cfg, &manifest, &checkpoint)?;
            let preds = predict_all(&ds, &ckpt.model, cfg.workers)?;
            let rows = ds.iter().zip(&preds).flat_map(|(d, p)| {
                p.probs.iter().zip(p.argmax()).enumerate().map(|(turn, (probs, argmax))| PredictionRow {
                    dialogue_id: &d.id,
                    turn,
                    probs,
                    argmax,
                })
            });
            write_file(&out, jsonl(rows).as_bytes())?;
        }
        Command::ExportAttention {
            manifest,
            checkpoint,
            out,
        } => {
            let (ckpt, ds) = load_for_inference(&cfg, &manifest, &checkpoint)?;
            let preds = predict_all(&ds, &ckpt.model, cfg.workers)?;
            let rows = ds.iter().zip(&preds).flat_map(|(d, p)| {
                p.trace.weights.iter().enumerate().map(|(t, weights)| AttentionRow {
                    dialogue_id: &d.id,
                    t,
                    weights,
                })
            });
            write_file(&out, jsonl(rows).as_bytes())?;
        }
        Command::Ablate {
            manifest,
            val_manifest,
            test_manifest,
        } => {
            let tr = load_manifest(&manifest)?;
            let va = match val_manifest {
                Some(v) => load_manifest(&v)?,
                None => Vec::new(),
            };
            let te = load_manifest(&test_manifest)?;
            let results = run_ablations(&tr, &va, &te, &cfg)?;
            let rows: Vec<(String, Option<f64>)> =
                results.iter().map(|(n, r)| (n.clone(), r.as_ref().map(|r| r.weighted_f1))).collect();
            print!("{}", ablation_table(&rows));
        }
        Command::Synth { out } => {
            let spec = SyntheticSpec {
                seed: cli.global.seed.unwrap_or(SyntheticSpec::default().seed),
                ..SyntheticSpec::default()
            };
            let corpus = write_synthetic(&out, &spec)?;
            let n: usize = corpus.dialogues.iter().map(|d| d.len()).sum();
            println!("{} dialogues, {n} utterances", corpus.dialogues.len());
        }
    }
    std::io::stdout().flush().ok();
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
