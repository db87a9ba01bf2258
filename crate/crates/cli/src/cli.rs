//! Command-line verbs. Every command writes its outputs atomically and is a
//! pure function of its inputs and seed.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use reactmix::datasets::{
    generate_synthetic, import_2c, import_sbu, make_splits, ClassMap, DatasetManifest, Fold, SplitProtocol,
    SplitSpec, SyntheticConfig, TwoCharacterConfig, SBU_ID, TWO_CHARACTER_ID,
};
use reactmix::embedding::parse_label_spec;
use reactmix::metrics::{
    augmentation_experiment, embeddings_csv, evaluate, export_embeddings, nn_baseline_scores, per_class_mean,
    synthesize_augmented, AugmentationConfig, ClassifierConfig, FeatureExtractor, PairScore,
    AUGMENTED_DATASET_ID,
};
use reactmix::model::Checkpoint;
use reactmix::motion::{write_atomic, SequenceFile};
use reactmix::training::{train_to_dir, TrainingConfig};

use crate::synthesis::{synthesize, ManifestRef, Snapshot, SynthesisOptions, SynthesisRequest};

/// Default checkpoint location for commands that take `--checkpoint`.
pub const CHECKPOINT_ENV: &str = "REACTMIX_CHECKPOINT_DIR";

const DEFAULT_2C_CONFIG: &str = include_str!("../../../configs/2c_import.json");

#[derive(Debug, Parser)]
#[command(name = "reactmix", version, about = "Label-controlled reactive motion synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import or generate datasets.
    #[command(subcommand)]
    Data(DataCommand),
    /// Train a generator and discriminator on one fold.
    Train(TrainArgs),
    /// Score a checkpoint on a fold.
    Eval(EvalArgs),
    /// Generate character B's reaction for one input motion.
    Synthesize(SynthesizeArgs),
    /// Write a manifest of generated pairs, `per_class` per class.
    ExportAugmented(ExportAugmentedArgs),
    /// Export pooled generator embeddings as CSV.
    Embeddings(EmbeddingsArgs),
    /// Run the HTTP synthesis service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    Import(ImportArgs),
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Sbu,
    #[value(name = "2c")]
    TwoCharacter,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// leave_one_subject_out (loso), ratio_3_1 or half_half; defaults to the
    /// manifest's split descriptor.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetKind,
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Class map (SBU) or import config (2C) as JSON; built-in defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 2)]
    pub per_class: usize,
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    #[arg(long, default_value_t = 6)]
    pub joints: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub subjects: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Manifest path.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fold index; all pairs are used when omitted.
    #[arg(long)]
    pub fold: Option<usize>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// YAML whose fields mirror the training configuration; missing fields
    /// take the preset of the manifest's dataset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMetric {
    Afd,
    Fid,
    Nn,
    Augmentation,
}

#[derive(Debug, Args)]
pub struct CheckpointArg {
    /// Checkpoint file, or a training output directory holding `final.json`.
    #[arg(long, env = CHECKPOINT_ENV)]
    pub checkpoint: PathBuf,
}

impl CheckpointArg {
    pub fn path(&self) -> PathBuf {
        resolve_checkpoint(&self.checkpoint)
    }

    fn load(&self) -> Result<Checkpoint> {
        let path = self.path();
        Checkpoint::load(&path).with_context(|| format!("loading checkpoint {}", path.display()))
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub metric: EvalMetric,
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fold index; every pair is a test pair when omitted.
    #[arg(long)]
    pub fold: Option<usize>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Frozen FID feature extractor; one is trained on the fold's real
    /// training pairs and saved next to the report when absent.
    #[arg(long)]
    pub extractor: Option<PathBuf>,
    /// YAML classifier config (fid) or augmentation config (augmentation).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    /// Canonical sequence file for character A.
    #[arg(long, conflicts_with_all = ["manifest", "pair"])]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "pair")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub pair: Option<String>,
    /// `class=value` entries, e.g. "hug=+1,kick=-1"; empty is the neutral label.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub label: String,
    /// Pass label values outside [-1, 1] through unchanged.
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportAugmentedArgs {
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbeddingsArgs {
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub checkpoint: CheckpointArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
}

/// A directory stands for its `final.json`.
pub fn resolve_checkpoint(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("final.json")
    } else {
        path.to_path_buf()
    }
}

/// `out.json` → `out.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.meta.json"))
}

fn read_yaml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = serde_yaml::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("{}: field '{field}': {}", path.display(), e.into_inner())
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())?;
    Ok(())
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

fn default_protocol(dataset_id: &str) -> SplitProtocol {
    match dataset_id {
        SBU_ID => SplitProtocol::LeaveOneSubjectOut,
        TWO_CHARACTER_ID => SplitProtocol::Ratio3To1,
        _ => SplitProtocol::HalfHalf,
    }
}

fn split_spec(args: &SplitArgs, manifest: &DatasetManifest) -> Result<SplitSpec> {
    let stored = manifest.split_spec;
    let protocol = match &args.protocol {
        Some(p) => SplitProtocol::parse(p)?,
        None => stored.map_or_else(|| default_protocol(&manifest.dataset_id), |s| s.protocol),
    };
    let seed = args.split_seed.or(stored.map(|s| s.seed)).unwrap_or(0);
    Ok(SplitSpec { protocol, seed })
}

/// The requested fold, or a fold with every pair on both sides.
fn resolve_fold(manifest: &DatasetManifest, fold: Option<usize>, split: &SplitArgs) -> Result<Fold> {
    let Some(k) = fold else {
        let all: Vec<usize> = (0..manifest.pairs.len()).collect();
        return Ok(Fold {
            name: "all".into(),
            train: all.clone(),
            test: all,
        });
    };
    let spec = split_spec(split, manifest)?;
    let mut folds = make_splits(manifest, spec.protocol, spec.seed)?;
    if k >= folds.len() {
        bail!("fold {k} out of range; {:?} gives {} fold(s)", spec.protocol, folds.len());
    }
    Ok(folds.swap_remove(k))
}

fn finish_manifest(mut manifest: DatasetManifest, split: &SplitArgs, out: &Path) -> Result<()> {
    manifest.split_spec = Some(split_spec(split, &manifest)?);
    manifest.save(out)?;
    println!(
        "wrote {} pairs in {} classes to {} ({} skipped)",
        manifest.pairs.len(),
        manifest.class_names.len(),
        out.display(),
        manifest.skipped.len()
    );
    Ok(())
}

fn cmd_import(args: &ImportArgs) -> Result<()> {
    let manifest = match args.dataset {
        DatasetKind::Sbu => {
            let map = match &args.config {
                Some(p) => ClassMap::load(p)?,
                None => ClassMap::sbu(),
            };
            import_sbu(&args.root, &map)?
        }
        DatasetKind::TwoCharacter => {
            let config = match &args.config {
                Some(p) => TwoCharacterConfig::load(p)?,
                None => {
                    let c: TwoCharacterConfig = serde_json::from_str(DEFAULT_2C_CONFIG)?;
                    c.classes.validate()?;
                    c
                }
            };
            import_2c(&args.root, &config)?
        }
    };
    finish_manifest(manifest, &args.split, &args.out)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = SyntheticConfig {
        classes: args.classes,
        per_class: args.per_class,
        frames: args.frames,
        joints: args.joints,
        noise: args.noise,
        seed: args.seed,
        subjects: args.subjects,
        ..SyntheticConfig::default()
    };
    finish_manifest(generate_synthetic(&config)?, &args.split, &args.out)
}

#[derive(Serialize)]
struct FoldRecord<'a> {
    fold: &'a str,
    train: Vec<&'a str>,
    test: Vec<&'a str>,
}

fn fold_record<'a>(manifest: &'a DatasetManifest, fold: &'a Fold) -> FoldRecord<'a> {
    let ids = |ix: &[usize]| ix.iter().map(|&i| manifest.pairs[i].id.as_str()).collect();
    FoldRecord {
        fold: &fold.name,
        train: ids(&fold.train),
        test: ids(&fold.test),
    }
}

fn training_preset(dataset_id: &str) -> TrainingConfig {
    match dataset_id {
        TWO_CHARACTER_ID => TrainingConfig::two_character(),
        _ => TrainingConfig::sbu(),
    }
}

/// Fields absent from the YAML keep the dataset preset's values.
fn merge_config(preset: &TrainingConfig, path: &Path) -> Result<TrainingConfig> {
    let overrides: serde_yaml::Value = read_yaml(path)?;
    let mut base = serde_yaml::to_value(preset)?;
    merge_yaml(&mut base, overrides);
    let text = serde_yaml::to_string(&base)?;
    serde_path_to_error::deserialize(serde_yaml::Deserializer::from_str(&text)).map_err(|e| {
        let field = e.path().to_string();
        anyhow::anyhow!("{}: field '{field}': {}", path.display(), e.into_inner())
    })
}

fn merge_yaml(base: &mut serde_yaml::Value, over: serde_yaml::Value) {
    match (base, over) {
        (serde_yaml::Value::Mapping(b), serde_yaml::Value::Mapping(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_yaml(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let manifest = load_manifest(&args.dataset)?;
    let preset = training_preset(&manifest.dataset_id);
    let config = match &args.config {
        Some(p) => merge_config(&preset, p)?,
        None => preset,
    };
    config.validate()?;
    let fold = resolve_fold(&manifest, args.fold, &args.split)?;
    let pairs = manifest.select(&fold.train);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(&args.out.join("fold.json"), &fold_record(&manifest, &fold))?;
    write_atomic(&args.out.join("config.yaml"), serde_yaml::to_string(&config)?.as_bytes())?;
    let outcome = train_to_dir(&pairs, &manifest.skeleton, &manifest.class_names, &manifest.dataset_id, &config, &args.out)?;
    if let (Some(first), Some(last)) = (outcome.reports.first(), outcome.reports.last()) {
        println!("l1 {:.5} -> {:.5} over {} epochs", first.l1, last.l1, outcome.reports.len());
    }
    println!("wrote {}", outcome.final_checkpoint.display());
    Ok(())
}

#[derive(Serialize)]
struct NnReport {
    fold_id: String,
    per_class_afd: BTreeMap<String, f64>,
    per_pair: Vec<PairScore>,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let fold = resolve_fold(&manifest, args.fold, &args.split)?;
    match args.metric {
        EvalMetric::Nn => {
            let scores = nn_baseline_scores(&manifest, &fold)?;
            let report = NnReport {
                fold_id: fold.name.clone(),
                per_class_afd: per_class_mean(&scores),
                per_pair: scores,
            };
            write_json(&args.out, &report)?;
        }
        EvalMetric::Afd => {
            let report = evaluate(&args.checkpoint.load()?, &manifest, &fold, None)?;
            write_json(&args.out, &report)?;
        }
        EvalMetric::Fid => {
            let checkpoint = args.checkpoint.load()?;
            let extractor = match &args.extractor {
                Some(p) => FeatureExtractor::load(p)?,
                None => {
                    let config: ClassifierConfig = match &args.config {
                        Some(p) => read_yaml(p)?,
                        None => ClassifierConfig::default(),
                    };
                    let e = FeatureExtractor::train(&manifest.select(&fold.train), manifest.class_names.len(), &config)?;
                    let path = args.out.with_file_name(format!(
                        "{}.extractor.json",
                        args.out.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
                    ));
                    e.save(&path)?;
                    println!("wrote extractor {}", path.display());
                    e
                }
            };
            let report = evaluate(&checkpoint, &manifest, &fold, Some(&extractor))?;
            write_json(&args.out, &report)?;
        }
        EvalMetric::Augmentation => {
            let config: AugmentationConfig = match &args.config {
                Some(p) => read_yaml(p)?,
                None => AugmentationConfig::default(),
            };
            let report = augmentation_experiment(&args.checkpoint.load()?, &manifest, &config)?;
            println!(
                "accuracy original {:.3} augmented {:.3}",
                report.original.overall_accuracy, report.augmented.overall_accuracy
            );
            write_json(&args.out, &report)?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthesisMetadata {
    pub id: String,
    pub checkpoint_path: PathBuf,
    pub checkpoint_hash: String,
    pub class_names: Vec<String>,
    pub label_spec: String,
    pub label_vector: Vec<f64>,
    pub clamp_labels: bool,
    pub seed: u64,
    pub input: String,
    pub frames: usize,
    pub timing_ms: Timing,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Timing {
    pub load: f64,
    pub generate: f64,
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Writes the reaction to `--out` and the metadata to the `.meta.json`
/// sidecar. The sequence bytes depend only on the inputs; the sidecar also
/// records wall-clock timing.
fn cmd_synthesize(args: &SynthesizeArgs) -> Result<()> {
    let started = Instant::now();
    let path = args.checkpoint.path();
    let snapshot = Snapshot::load(&path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let load_ms = millis(started);
    let names = &snapshot.checkpoint.class_names;
    let label_spec = parse_label_spec(&args.label, names)?
        .into_iter()
        .map(|(i, v)| (names[i].clone(), v))
        .collect();
    let (motion_a, manifest_ref, input) = match (&args.input, &args.manifest, &args.pair) {
        (Some(p), None, None) => (Some(SequenceFile::read(p)?), None, p.display().to_string()),
        (None, Some(m), Some(pair)) => (
            None,
            Some(ManifestRef {
                manifest: m.clone(),
                pair_id: pair.clone(),
            }),
            format!("{}#{pair}", m.display()),
        ),
        _ => bail!("give --input, or --manifest together with --pair"),
    };
    let request = SynthesisRequest {
        motion_a,
        manifest_ref,
        label_spec,
        checkpoint_id: None,
        options: SynthesisOptions {
            seed: args.seed,
            clamp_labels: !args.no_clamp,
        },
    };
    let generating = Instant::now();
    let output = synthesize(&snapshot, &request)?;
    let generate_ms = millis(generating);
    output.sequence.write(&args.out)?;
    let meta = SynthesisMetadata {
        id: output.id.clone(),
        checkpoint_path: path,
        checkpoint_hash: output.checkpoint_id.clone(),
        class_names: output.class_names.clone(),
        label_spec: args.label.clone(),
        label_vector: output.label_vector.clone(),
        clamp_labels: !args.no_clamp,
        seed: args.seed,
        input,
        frames: output.sequence.frames.len(),
        timing_ms: Timing {
            load: load_ms,
            generate: generate_ms,
        },
    };
    write_json(&sidecar_path(&args.out), &meta)?;
    println!("wrote {} ({} frames, label {:?})", args.out.display(), meta.frames, meta.label_vector);
    Ok(())
}

fn cmd_export_augmented(args: &ExportAugmentedArgs) -> Result<()> {
    let checkpoint = args.checkpoint.load()?;
    let manifest = load_manifest(&args.manifest)?;
    let pairs = synthesize_augmented(&checkpoint, &manifest, args.per_class, args.seed)?;
    let out = DatasetManifest {
        dataset_id: AUGMENTED_DATASET_ID.into(),
        class_names: manifest.class_names.clone(),
        skeleton: manifest.skeleton.clone(),
        pairs,
        split_spec: None,
        skipped: Vec::new(),
    };
    out.save(&args.out)?;
    println!("wrote {} generated pairs to {}", out.pairs.len(), args.out.display());
    Ok(())
}

fn cmd_embeddings(args: &EmbeddingsArgs) -> Result<()> {
    let rows = export_embeddings(&args.checkpoint.load()?, &load_manifest(&args.manifest)?)?;
    write_atomic(&args.out, embeddings_csv(&rows).as_bytes())?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let path = args.checkpoint.path();
    let snapshot = Snapshot::load(&path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::service::serve(snapshot, args.bind))?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Data(DataCommand::Import(a)) => cmd_import(a),
        Command::Data(DataCommand::Synth(a)) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::ExportAugmented(a) => cmd_export_augmented(a),
        Command::Embeddings(a) => cmd_embeddings(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_directory_resolves_to_final() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(resolve_checkpoint(dir.path()), dir.path().join("final.json"));
        let file = dir.path().join("epoch_00010.json");
        assert_eq!(resolve_checkpoint(&file), file);
    }

    #[test]
    fn sidecar_sits_next_to_output() {
        assert_eq!(sidecar_path(Path::new("out/b.json")), Path::new("out/b.meta.json"));
    }

    #[test]
    fn partial_yaml_keeps_preset_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("train.yaml");
        fs::write(&p, "epochs: 3\nwidths:\n  fc: 8\n").unwrap();
        let preset = TrainingConfig::two_character();
        let c = merge_config(&preset, &p).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.widths.fc, Some(8));
        assert_eq!(c.widths.slice, preset.widths.slice);
        assert_eq!(c.learning_rate, preset.learning_rate);
    }

    #[test]
    fn unknown_yaml_field_names_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("train.yaml");
        fs::write(&p, "ablations:\n  no_gan: true\n").unwrap();
        let err = merge_config(&TrainingConfig::sbu(), &p).unwrap_err().to_string();
        assert!(err.contains("ablations"), "{err}");
    }

    #[test]
    fn bundled_two_character_config_parses() {
        let c: TwoCharacterConfig = serde_json::from_str(DEFAULT_2C_CONFIG).unwrap();
        c.classes.validate().unwrap();
    }

    #[test]
    fn parses_every_verb() {
        for argv in [
            "reactmix data synth --out m.json",
            "reactmix data import --dataset 2c --root r --out m.json",
            "reactmix train --dataset m.json --fold 0 --out ck",
            "reactmix eval fid --checkpoint c --manifest m.json --out r.json",
            "reactmix synthesize --checkpoint c --input a.json --label hug=+1,kick=-1 --out b.json",
            "reactmix export-augmented --checkpoint c --manifest m.json --out g.json",
            "reactmix embeddings --checkpoint c --manifest m.json --out e.csv",
            "reactmix serve --checkpoint c --bind 127.0.0.1:0",
        ] {
            Cli::try_parse_from(argv.split(' ')).unwrap_or_else(|e| panic!("{argv}: {e}"));
        }
    }
}
