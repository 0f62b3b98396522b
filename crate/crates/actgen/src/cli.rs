//! Command-line pipeline: dataset generation, the three training
//! phases, classifier pre-training, evaluation, decoding, and simulated
//! execution. Every run directory receives the effective config and a
//! manifest of inputs/outputs, so any artifact can be reproduced from
//! what sits next to it.

use crate::data::{self, Dataset, GenConfig, WorldSpec};
use crate::decode::{
    decode_sequence, detokenize_actions, read_decoded, write_decoded, DecodeConfig, DecodedRecord,
    TaskKnowledge,
};
use crate::dmp::{align_and_execute, builtin_library, builtin_task, write_trajectory_csv, DmpLibrary, TaskSpec};
use crate::metrics::{build_report, format_quality_table, format_task_table, EvalReport};
use crate::model::{encode, Checkpoint, DecoderHead, ModelConfig};
use crate::numerics::{Graph, RngState};
use crate::training::{self, pretrain_classifier, Phase, TrainConfig};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Full run configuration. Every field has a default; a `--config` file
/// overrides the defaults and command-line flags override the file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// World specification; absent means the stock kitchen world.
    pub world: Option<WorldSpec>,
    pub gen: GenConfig,
    /// Model architecture; absent means desk-scale defaults sized to
    /// the dataset vocabulary.
    pub model: Option<ModelConfig>,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
}

#[derive(Parser, Debug)]
#[command(name = "actgen", version, about = "Action-sequence generation pipeline")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override applied to generation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct OutDir {
    /// Output directory (default: $ACTGEN_OUT_ROOT/<command>).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a synthetic kitchen dataset.
    GenData {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        n_videos: Option<usize>,
        #[arg(long)]
        segments_per_video: Option<usize>,
        #[arg(long)]
        actions_frac: Option<f64>,
        #[arg(long)]
        captions_frac: Option<f64>,
        #[arg(long)]
        subtitles_frac: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train one phase (baseline | multitask | finetune-weak).
    Train {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        phase: String,
        /// Training dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Validation dataset directory for best-epoch selection.
        #[arg(long)]
        val: Option<PathBuf>,
        /// Warm-start checkpoint.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Pre-train the semantic classifier on paired records.
    PretrainClassifier {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint providing the model whose classifier to train.
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Weakly-supervised fine-tuning (train --phase finetune-weak).
    FinetuneWeak {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Evaluate decoded action sequences against references, or compare
    /// previously written reports.
    Eval {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Existing eval_report.json files to tabulate side by side.
        #[arg(long, num_args = 1..)]
        compare: Vec<PathBuf>,
        /// Row labels for --compare, comma separated.
        #[arg(long)]
        labels: Option<String>,
        /// Restrict decoding to bench objects, comma separated.
        #[arg(long)]
        bench: Option<String>,
    },
    /// Decode action sequences for every segment of a dataset.
    Decode {
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Task-knowledge JSON file masking the vocabulary.
        #[arg(long)]
        knowledge: Option<PathBuf>,
        /// Shorthand mask: allowed bench objects, comma separated.
        #[arg(long)]
        bench: Option<String>,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Execute action sequences in the simulated kitchen.
    ExecSim {
        #[command(flatten)]
        out: OutDir,
        /// Built-in task name (cereal | coffee | drinks).
        #[arg(long)]
        task: Option<String>,
        /// Task specification file (overrides --task).
        #[arg(long)]
        task_spec: Option<PathBuf>,
        /// Primitive library file (default: built-in library).
        #[arg(long)]
        library: Option<PathBuf>,
        /// Decoded sequences to execute, one episode per record
        /// (default: the task's own subtasks, once).
        #[arg(long)]
        actions: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

macro_rules! from_error {
    ($ty:ty, $($config:pat),+) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                match &e {
                    $($config => CliError::Config(e.to_string()),)+
                    _ => CliError::Runtime(e.to_string()),
                }
            }
        }
    };
}

from_error!(data::DataError, data::DataError::Config(_), data::DataError::Schema(_), data::DataError::Parse { .. }, data::DataError::UnknownClass(_));
from_error!(crate::model::ModelError, crate::model::ModelError::Config(_));
from_error!(training::TrainError, training::TrainError::Config(_));
from_error!(crate::decode::DecodeError, crate::decode::DecodeError::Config(_));
from_error!(crate::dmp::DmpError, crate::dmp::DmpError::Config(_));
from_error!(crate::metrics::MetricsError, crate::metrics::MetricsError::Report(_));

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.gen.seed = s;
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn out_dir(requested: &OutDir, command: &str) -> PathBuf {
    match &requested.out {
        Some(p) => p.clone(),
        None => {
            let root = std::env::var("ACTGEN_OUT_ROOT").unwrap_or_else(|_| "runs".to_string());
            Path::new(&root).join(command)
        }
    }
}

fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let mut h = Sha256::new();
    h.update(&bytes);
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_hash: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

/// Persist the effective config and the run manifest beside the
/// artifacts; reruns from that config are bit-identical.
fn write_run_records(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    inputs: &[&Path],
    outputs: &[&Path],
) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let cfg_text =
        serde_json::to_string_pretty(cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join("config.json"), cfg_text)?;
    let manifest = RunManifest {
        command,
        config_hash: config_hash(cfg),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(dir.join("run_manifest.json"), text)?;
    Ok(())
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(data::load_manifest(path)?)
}

fn parse_bench(s: &str) -> TaskKnowledge {
    TaskKnowledge::from_bench(s.split(',').map(|x| x.trim().to_string()))
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(cli.config.as_deref(), cli.seed)?;
    match cli.cmd {
        Cmd::GenData {
            out,
            n_videos,
            segments_per_video,
            actions_frac,
            captions_frac,
            subtitles_frac,
            noise,
        } => {
            let dir = out_dir(&out, "gen-data");
            if let Some(v) = n_videos {
                cfg.gen.n_videos = v;
            }
            if let Some(v) = segments_per_video {
                cfg.gen.segments_per_video = v;
            }
            if let Some(v) = actions_frac {
                cfg.gen.actions_frac = v;
            }
            if let Some(v) = captions_frac {
                cfg.gen.captions_frac = v;
            }
            if let Some(v) = subtitles_frac {
                cfg.gen.subtitles_frac = v;
            }
            let mut world = cfg.world.clone().unwrap_or_else(data::default_world);
            if let Some(n) = noise {
                world.noise_scale = n;
            }
            cfg.world = Some(world.clone());
            let ds = data::generate_dataset(&world, &cfg.gen)?;
            std::fs::create_dir_all(&dir)?;
            data::write_dataset(&ds, &dir)?;
            write_run_records(&dir, "gen-data", &cfg, &[], &[&dir.join("manifest.jsonl")])?;
            println!(
                "wrote {} segments across {} videos to {}",
                ds.len(),
                cfg.gen.n_videos,
                dir.display()
            );
            Ok(())
        }

        Cmd::Train {
            out,
            phase,
            data,
            val,
            init,
            steps,
            batch_size,
            lr,
        } => {
            let phase: Phase = phase.parse()?;
            run_training(
                &mut cfg, out, phase, &data, val.as_deref(), init.as_deref(), steps, batch_size, lr,
            )
        }

        Cmd::FinetuneWeak {
            out,
            data,
            val,
            init,
            steps,
            batch_size,
            lr,
        } => run_training(
            &mut cfg,
            out,
            Phase::FinetuneWeak,
            &data,
            val.as_deref(),
            Some(&init),
            steps,
            batch_size,
            lr,
        ),

        Cmd::PretrainClassifier {
            out,
            data,
            init,
            steps,
            lr,
        } => {
            let dir = out_dir(&out, "pretrain-classifier");
            if let Some(s) = steps {
                cfg.train.classifier_steps = s;
            }
            if let Some(l) = lr {
                cfg.train.lr = l;
            }
            let ds = load_dataset(&data)?;
            let mut ckpt = Checkpoint::load(&init)?;
            if ckpt.vocab != ds.header.vocab {
                return Err(CliError::Config(
                    "checkpoint vocabulary does not match the dataset".into(),
                ));
            }
            let mut rng = RngState::new(cfg.train.seed).derive(0xc1a55);
            let (report, log) = pretrain_classifier(&ds, &mut ckpt.params, &cfg.train, &mut rng)?;
            ckpt.meta.classifier_pretrained = true;
            std::fs::create_dir_all(&dir)?;
            let ckpt_path = dir.join("checkpoint.json");
            ckpt.save(&ckpt_path)?;
            let log_path = dir.join("classifier_log.jsonl");
            write_jsonl(&log_path, &log)?;
            let report_path = dir.join("pretrain_report.json");
            std::fs::write(
                &report_path,
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?,
            )?;
            write_run_records(
                &dir,
                "pretrain-classifier",
                &cfg,
                &[&data, &init],
                &[&ckpt_path, &log_path, &report_path],
            )?;
            println!(
                "classifier pre-trained on {} pairs: loss {:.4} -> {:.4}",
                report.pairs, report.first_loss, report.final_loss
            );
            Ok(())
        }

        Cmd::Eval {
            out,
            checkpoint,
            data,
            compare,
            labels,
            bench,
        } => {
            let dir = out_dir(&out, "eval");
            if !compare.is_empty() {
                return compare_reports(&dir, &cfg, &compare, labels.as_deref());
            }
            let (Some(ckpt_path), Some(data_path)) = (checkpoint, data) else {
                return Err(CliError::Config(
                    "eval needs --checkpoint and --data (or --compare)".into(),
                ));
            };
            if let Some(b) = bench {
                cfg.decode.mask = Some(parse_bench(&b));
            }
            let ds = load_dataset(&data_path)?;
            let ckpt = Checkpoint::load(&ckpt_path)?;
            let decoded = decode_dataset(&ckpt, &ds, &cfg.decode)?;
            let report = report_from_decoded(&ds, &decoded)?;
            std::fs::create_dir_all(&dir)?;
            let report_path = dir.join("eval_report.json");
            std::fs::write(
                &report_path,
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?,
            )?;
            let table_path = dir.join("eval_tables.txt");
            let mut tables = format_quality_table(&[("model", &report)]);
            tables.push('\n');
            tables.push_str(&format_task_table(&[("model", &report)]));
            std::fs::write(&table_path, &tables)?;
            write_run_records(
                &dir,
                "eval",
                &cfg,
                &[&ckpt_path, &data_path],
                &[&report_path, &table_path],
            )?;
            print!("{tables}");
            Ok(())
        }

        Cmd::Decode {
            out,
            checkpoint,
            data,
            knowledge,
            bench,
            beam_width,
            max_len,
        } => {
            let dir = out_dir(&out, "decode");
            if let Some(w) = beam_width {
                cfg.decode.beam_width = w;
            }
            if let Some(m) = max_len {
                cfg.decode.max_len = m;
            }
            if let Some(path) = knowledge {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                cfg.decode.mask = Some(
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
                );
            } else if let Some(b) = bench {
                cfg.decode.mask = Some(parse_bench(&b));
            }
            let ds = load_dataset(&data)?;
            let ckpt = Checkpoint::load(&checkpoint)?;
            let decoded = decode_dataset(&ckpt, &ds, &cfg.decode)?;
            std::fs::create_dir_all(&dir)?;
            let out_path = dir.join("decoded.jsonl");
            write_decoded(&out_path, &decoded)?;
            write_run_records(&dir, "decode", &cfg, &[&checkpoint, &data], &[&out_path])?;
            println!("decoded {} segments to {}", decoded.len(), out_path.display());
            Ok(())
        }

        Cmd::ExecSim {
            out,
            task,
            task_spec,
            library,
            actions,
        } => {
            let dir = out_dir(&out, "exec-sim");
            let lib = match &library {
                Some(p) => DmpLibrary::load(p)?,
                None => builtin_library(),
            };
            let (spec, scene) = match (&task_spec, &task) {
                (Some(p), _) => {
                    let spec = TaskSpec::load(p)?;
                    let scene = builtin_task(&spec.name)
                        .map(|(_, s)| s)
                        .ok_or_else(|| {
                            CliError::Config(format!(
                                "no built-in scene for task `{}`; use a built-in task name",
                                spec.name
                            ))
                        })?;
                    (spec, scene)
                }
                (None, Some(name)) => builtin_task(name).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown task `{name}` (expected cereal | coffee | drinks)"
                    ))
                })?,
                (None, None) => {
                    return Err(CliError::Config("exec-sim needs --task or --task-spec".into()))
                }
            };
            let episodes: Vec<crate::data::ActionSequence> = match &actions {
                Some(path) => read_decoded(path)?.into_iter().map(|r| r.steps).collect(),
                None => vec![spec.subtasks.clone()],
            };
            if episodes.is_empty() {
                return Err(CliError::Config("no action sequences to execute".into()));
            }
            std::fs::create_dir_all(&dir)?;
            let mut successes = 0usize;
            let mut logs: Vec<Vec<String>> = Vec::new();
            for (i, ep) in episodes.iter().enumerate() {
                let report = align_and_execute(ep, &lib, &scene, &spec, 0.01)?;
                if report.success {
                    successes += 1;
                }
                if i == 0 {
                    for (j, (name, traj)) in report.trajectories.iter().enumerate() {
                        write_trajectory_csv(&dir.join(format!("traj_{j:02}_{name}.csv")), traj)?;
                    }
                }
                logs.push(report.log);
            }
            let rate = 100.0 * successes as f64 / episodes.len() as f64;
            let summary = serde_json::json!({
                "task": spec.name,
                "episodes": episodes.len(),
                "successes": successes,
                "success_rate": rate,
                "logs": logs,
            });
            let report_path = dir.join("exec_report.json");
            std::fs::write(
                &report_path,
                serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?,
            )?;
            let mut inputs: Vec<&Path> = Vec::new();
            if let Some(p) = &actions {
                inputs.push(p);
            }
            if let Some(p) = &library {
                inputs.push(p);
            }
            write_run_records(&dir, "exec-sim", &cfg, &inputs, &[&report_path])?;
            println!(
                "task `{}`: {successes}/{} episodes succeeded ({rate:.1}%)",
                spec.name,
                episodes.len()
            );
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_training(
    cfg: &mut RunConfig,
    out: OutDir,
    phase: Phase,
    data: &Path,
    val: Option<&Path>,
    init: Option<&Path>,
    steps: Option<u64>,
    batch_size: Option<usize>,
    lr: Option<f64>,
) -> CliResult<()> {
    let dir = out_dir(&out, &format!("train-{}", phase.as_str()));
    if let Some(s) = steps {
        cfg.train.steps = s;
    }
    if let Some(b) = batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(l) = lr {
        cfg.train.lr = l;
    }
    let train_ds = load_dataset(data)?;
    let val_ds = val.map(load_dataset).transpose()?;
    let init_ckpt = init.map(Checkpoint::load).transpose()?;
    std::fs::create_dir_all(&dir)?;
    let log_path = dir.join("train_log.jsonl");
    let outcome = training::train(
        &train_ds,
        val_ds.as_ref(),
        phase,
        init_ckpt,
        cfg.model.clone(),
        &cfg.train,
        Some(&log_path),
        Some(&dir),
    )?;
    let ckpt_path = dir.join("checkpoint.json");
    outcome.checkpoint.save(&ckpt_path)?;
    let mut inputs: Vec<&Path> = vec![data];
    if let Some(v) = val {
        inputs.push(v);
    }
    if let Some(i) = init {
        inputs.push(i);
    }
    write_run_records(
        &dir,
        &format!("train --phase {}", phase.as_str()),
        cfg,
        &inputs,
        &[&ckpt_path, &log_path],
    )?;
    let last = outcome.log.last();
    println!(
        "{} finished: {} steps, final loss {:.4}{}",
        phase.as_str(),
        outcome.log.len(),
        last.map(|r| r.total).unwrap_or(0.0),
        outcome
            .checkpoint
            .meta
            .best_val_meteor
            .map(|m| format!(", best val METEOR {m:.3}"))
            .unwrap_or_default()
    );
    Ok(())
}

/// Decode every segment of a dataset with the checkpoint's model.
pub fn decode_dataset(
    ckpt: &Checkpoint,
    ds: &Dataset,
    dcfg: &DecodeConfig,
) -> CliResult<Vec<DecodedRecord>> {
    if ckpt.vocab != ds.header.vocab {
        return Err(CliError::Config(
            "checkpoint vocabulary does not match the dataset".into(),
        ));
    }
    let vocab = &ckpt.vocab;
    let mut out = Vec::with_capacity(ds.len());
    for (rec, feats) in ds.records.iter().zip(&ds.features) {
        let mut g = Graph::new();
        let p = ckpt.params.insert_into(&mut g);
        let enc = encode(&mut g, &p, &ckpt.params.config, feats)?;
        let decoded = decode_sequence(
            &mut g,
            &p,
            &ckpt.params.config,
            DecoderHead::Action,
            &enc,
            dcfg,
            vocab,
        )?;
        let (steps, _warnings) = detokenize_actions(&decoded.tokens, vocab);
        out.push(DecodedRecord {
            video_id: rec.video_id.clone(),
            segment_index: rec.segment_index,
            tokens: decoded
                .tokens
                .iter()
                .map(|t| vocab.action_token_name(*t).to_string())
                .collect(),
            steps,
            score: decoded.score,
            truncated: decoded.truncated,
            mask_id: dcfg.mask.as_ref().and_then(|m| m.id.clone()),
        });
    }
    Ok(out)
}

/// Evaluation report for decoded records against the dataset's
/// action-annotated references.
pub fn report_from_decoded(ds: &Dataset, decoded: &[DecodedRecord]) -> CliResult<EvalReport> {
    use crate::metrics::EvalEntry;
    let mut entries = Vec::new();
    for (rec, dec) in ds.records.iter().zip(decoded) {
        if let Some(reference) = &rec.actions {
            entries.push(EvalEntry {
                video_id: &rec.video_id,
                segment_index: rec.segment_index,
                hyp: &dec.steps,
                reference,
            });
        }
    }
    if entries.is_empty() {
        return Err(CliError::Config(
            "no action-annotated segments to evaluate against".into(),
        ));
    }
    Ok(build_report(&entries)?)
}

fn compare_reports(
    dir: &Path,
    cfg: &RunConfig,
    paths: &[PathBuf],
    labels: Option<&str>,
) -> CliResult<()> {
    let labels: Vec<String> = match labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => paths
            .iter()
            .map(|p| {
                p.parent()
                    .and_then(|d| d.file_name())
                    .map(|n| n.to_string_lossy().to_string())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect(),
    };
    if labels.len() != paths.len() {
        return Err(CliError::Config(format!(
            "{} labels for {} reports",
            labels.len(),
            paths.len()
        )));
    }
    let mut reports = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let r: EvalReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    let rows: Vec<(&str, &EvalReport)> = labels
        .iter()
        .map(|l| l.as_str())
        .zip(reports.iter())
        .collect();
    let mut tables = format_quality_table(&rows);
    tables.push('\n');
    tables.push_str(&format_task_table(&rows));
    std::fs::create_dir_all(dir)?;
    let table_path = dir.join("comparison.txt");
    std::fs::write(&table_path, &tables)?;
    let inputs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    write_run_records(dir, "eval --compare", cfg, &inputs, &[&table_path])?;
    print!("{tables}");
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| CliError::Runtime(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
