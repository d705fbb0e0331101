//! Pipeline entry points behind the `hgr` binary: synth, train, fuse, report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::config::ExperimentConfig;
use crate::dataset::{generate_synthetic, scan_dataset, split_loso, ClassMode, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_folds, decompose_drop, grain_table_csv, render_grain_table, render_summary, FoldPredictions, OverallReport,
};
use crate::nn::{fuse_scores_average, fuse_scores_max, predict, Checkpoint, Network, NetworkKind, ScoreVector};
use crate::training::{
    checkpoint_path, fold_dir, load_clips, predict_clips, prediction_path, run_loso_with, Experiment, FoldOutput,
    Prediction, PredictionFile,
};

pub const SYNTH_MANIFEST: &str = "synthetic.json";
pub const RUN_MANIFEST: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<V: Serialize>(path: &Path, v: &V) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_json<V: for<'de> Deserialize<'de>>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Hash of every file under `root` (relative path and contents, sorted),
/// ignoring top-level files named in `exclude`.
pub fn tree_hash(root: &Path, exclude: &[&str]) -> Result<String> {
    let mut h = Sha256::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Dataset(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        if rel.components().count() == 1 && exclude.iter().any(|x| rel == Path::new(x)) {
            continue;
        }
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0u8]);
        h.update(std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: SyntheticSpec,
    pub n_sequences: usize,
    pub tree_sha256: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthReport {
    pub n_sequences: usize,
    pub tree_sha256: String,
    /// Whether an earlier generation with the same spec produced the same
    /// tree; `None` if there was no earlier generation.
    pub identical_to_previous: Option<bool>,
}

pub fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<SynthReport> {
    spec.validate()?;
    let manifest_path = out.join(SYNTH_MANIFEST);
    let previous: Option<SynthManifest> = if manifest_path.is_file() { read_json(&manifest_path).ok() } else { None };
    let seqs = generate_synthetic(spec, out)?;
    let tree = tree_hash(out, &[SYNTH_MANIFEST])?;
    let identical = previous.filter(|p| p.spec == *spec).map(|p| p.tree_sha256 == tree);
    write_json(
        &manifest_path,
        &SynthManifest {
            spec: spec.clone(),
            n_sequences: seqs.len(),
            tree_sha256: tree.clone(),
        },
    )?;
    Ok(SynthReport {
        n_sequences: seqs.len(),
        tree_sha256: tree,
        identical_to_previous: identical,
    })
}

/// Everything needed to reproduce and verify a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub run_id: String,
    pub config: ExperimentConfig,
    /// Resolved plans, widths and seeds actually used.
    pub experiment: Experiment,
    pub fingerprints: BTreeMap<NetworkKind, String>,
    pub folds: Vec<u32>,
    pub n_sequences: usize,
    /// Per completed fold: artifact path (relative to the run dir) -> sha256.
    pub completed: BTreeMap<u32, BTreeMap<String, String>>,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        read_json(&run_dir.join(RUN_MANIFEST))
    }

    fn fold_verified(&self, run_dir: &Path, fold: u32) -> bool {
        let Some(files) = self.completed.get(&fold) else { return false };
        !files.is_empty()
            && files
                .iter()
                .all(|(rel, hash)| file_hash(&run_dir.join(rel)).map(|h| &h == hash).unwrap_or(false))
    }
}

/// Run directory name: a hash of the config without its output location.
pub fn run_id(cfg: &ExperimentConfig) -> Result<String> {
    if let Some(id) = &cfg.run_id {
        return Ok(id.clone());
    }
    let mut c = cfg.clone();
    c.out = PathBuf::new();
    let text = serde_json::to_string(&c).map_err(|e| Error::Format(e.to_string()))?;
    Ok(format!("run-{}", &sha256_hex(text.as_bytes())[..12]))
}

/// Human-readable echo of the resolved plans.
pub fn plan_echo(exp: &Experiment) -> String {
    let mut s = String::new();
    let w = exp.arch.widths;
    let _ = writeln!(
        s,
        "widths: conv {:?}, projection {}, depth lstm {}, skeleton lstm {}, fc {}; timestep {}; image {}x{}",
        w.conv, w.projection, w.depth_lstm, w.skeleton_lstm, w.fc, exp.arch.timestep, exp.arch.image_size, exp.arch.image_size
    );
    for k in NetworkKind::ALL {
        let p = exp.plans.get(k);
        let opt = serde_json::to_string(&p.optimizer).unwrap_or_default();
        let _ = writeln!(
            s,
            "{k}: epochs {}, batch {}, timestep {}, init {:?}, optimizer {opt}",
            p.epochs, p.batch_size, p.timestep, p.init
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub run_dir: PathBuf,
    pub trained_folds: Vec<u32>,
    pub skipped_folds: Vec<u32>,
    pub manifest: RunManifest,
}

fn write_fold(run_dir: &Path, exp: &Experiment, folds: &[u32], out: &FoldOutput) -> Result<BTreeMap<String, String>> {
    let s = out.fold.test_subject;
    let dir = fold_dir(run_dir, s);
    create_dir(&dir)?;
    let mut files = Vec::new();
    for t in &out.trained {
        let p = checkpoint_path(&dir, t.spec.kind);
        t.checkpoint().save(&p)?;
        files.push(p);
    }
    for r in &out.results {
        let p = prediction_path(&dir, r.network.as_str());
        r.to_file(exp.class_mode, folds).write(&p)?;
        files.push(p);
        let h = dir.join(format!("{}.history.json", r.network));
        write_json(
            &h,
            &serde_json::json!({
                "epoch_losses": r.history.epoch_losses,
                "epoch_accuracy": r.history.epoch_accuracy,
                "steps_per_epoch": r.history.steps_per_epoch,
                "samples_per_epoch": r.history.samples_per_epoch,
                "subjects_seen": r.history.subjects_seen,
                "train_accuracy": r.train_accuracy,
                "test_accuracy": r.test_accuracy(),
            }),
        )?;
        files.push(h);
    }
    let mut hashes = BTreeMap::new();
    for f in files {
        let rel = f.strip_prefix(run_dir).expect("under run dir").to_string_lossy().replace('\\', "/");
        hashes.insert(rel, file_hash(&f)?);
    }
    Ok(hashes)
}

/// Train every selected network with LOSO and persist checkpoints and
/// prediction files under `<out>/<run-id>/fold_<s>/`. Folds whose recorded
/// artifacts still verify are skipped. With `dry_run`, only the manifest
/// (config snapshot, resolved plans, fingerprints) is written.
pub fn cmd_train(cfg: &ExperimentConfig, dry_run: bool) -> Result<TrainReport> {
    cfg.validate()?;
    let exp = cfg.experiment()?;
    let id = run_id(cfg)?;
    let run_dir = cfg.out.join(&id);
    create_dir(&run_dir)?;
    let manifest_path = run_dir.join(RUN_MANIFEST);

    let mut fingerprints = BTreeMap::new();
    for k in &exp.networks {
        fingerprints.insert(*k, exp.spec(*k)?.fingerprint());
    }
    let (folds, n_sequences, index) = if dry_run {
        (Vec::new(), 0, None)
    } else {
        let index = scan_dataset(&cfg.dataset, cfg.class_mode)?;
        let folds: Vec<u32> = split_loso(&index)?.iter().map(|f| f.test_subject).collect();
        (folds, index.len(), Some(index))
    };
    let mut manifest = RunManifest {
        version: MANIFEST_VERSION,
        run_id: id.clone(),
        config: cfg.clone(),
        experiment: exp.clone(),
        fingerprints,
        folds: folds.clone(),
        n_sequences,
        completed: BTreeMap::new(),
    };
    if manifest_path.is_file() {
        let old = RunManifest::load(&run_dir)?;
        let same = |m: &RunManifest| (m.experiment.clone(), m.fingerprints.clone(), m.config.dataset.clone());
        if same(&old) != same(&manifest) {
            return Err(Error::Config(format!(
                "{} already holds a run with a different configuration",
                run_dir.display()
            )));
        }
        if old.folds == manifest.folds && old.n_sequences == manifest.n_sequences {
            manifest.completed = old.completed;
        }
    }
    log::info!("run {id}");
    for line in plan_echo(&exp).lines() {
        log::info!("{line}");
    }
    let Some(index) = index else {
        write_json(&manifest_path, &manifest)?;
        return Ok(TrainReport {
            run_dir,
            trained_folds: Vec::new(),
            skipped_folds: Vec::new(),
            manifest,
        });
    };

    let skipped: Vec<u32> = folds.iter().copied().filter(|&f| manifest.fold_verified(&run_dir, f)).collect();
    manifest.completed.retain(|f, _| skipped.contains(f));
    write_json(&manifest_path, &manifest)?;
    let mut trained = Vec::new();
    if skipped.len() < folds.len() {
        let clips = load_clips::<f32>(&index.entries, &exp.clip_config())?;
        run_loso_with(
            &index,
            &clips,
            &exp,
            |f| skipped.contains(&f.test_subject),
            |out| {
                let s = out.fold.test_subject;
                let hashes = write_fold(&run_dir, &exp, &folds, &out).map_err(|e| Error::Fold {
                    fold: s,
                    source: Box::new(e),
                })?;
                manifest.completed.insert(s, hashes);
                write_json(&manifest_path, &manifest)?;
                trained.push(s);
                Ok(())
            },
        )?;
    }
    Ok(TrainReport {
        run_dir,
        trained_folds: trained,
        skipped_folds: skipped,
        manifest,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuseMode {
    Average,
    Max,
    /// Evaluate the trained feature-level fusion checkpoints.
    FlConcat,
}

impl FuseMode {
    pub fn output_name(self) -> &'static str {
        match self {
            FuseMode::Average => "sl_average",
            FuseMode::Max => "sl_max",
            FuseMode::FlConcat => "fl_concat",
        }
    }
}

impl FromStr for FuseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(FuseMode::Average),
            "max" => Ok(FuseMode::Max),
            "fl_concat" => Ok(FuseMode::FlConcat),
            other => Err(Error::Invalid(format!("unknown fusion mode '{other}' (average, max, fl_concat)"))),
        }
    }
}

/// Score-level fusion of two prediction files covering the same sequences.
pub fn fuse_files(a: &PredictionFile, b: &PredictionFile, mode: FuseMode) -> Result<PredictionFile> {
    let combine = match mode {
        FuseMode::Average => fuse_scores_average,
        FuseMode::Max => fuse_scores_max,
        FuseMode::FlConcat => return Err(Error::Invalid("fl_concat is not a score-level mode".into())),
    };
    if a.class_mode != b.class_mode || a.fold != b.fold || a.folds != b.folds {
        return Err(Error::Invalid(format!(
            "cannot fuse {} (fold {}, {} classes) with {} (fold {}, {} classes)",
            a.network, a.fold, a.class_mode, b.network, b.fold, b.class_mode
        )));
    }
    let n = a.rows.len().max(b.rows.len());
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (ra, rb) = match (a.rows.get(i), b.rows.get(i)) {
            (Some(x), Some(y)) if x.sequence_id == y.sequence_id && x.truth == y.truth => (x, y),
            (x, y) => {
                let id = |r: Option<&Prediction>| r.map(|r| r.sequence_id.clone()).unwrap_or_else(|| "<end>".into());
                return Err(Error::Invalid(format!(
                    "sequence sets diverge at row {}: {} has {} but {} has {}",
                    i + 1,
                    a.network,
                    id(x),
                    b.network,
                    id(y)
                )));
            }
        };
        let fused = combine(&ScoreVector(ra.scores.clone()), &ScoreVector(rb.scores.clone()))?;
        rows.push(Prediction {
            sequence_id: ra.sequence_id.clone(),
            subject: ra.subject,
            truth: ra.truth,
            predicted: predict(&fused.0)?,
            scores: fused.0,
        });
    }
    Ok(PredictionFile {
        class_mode: a.class_mode,
        network: mode.output_name().into(),
        fingerprint: format!("{}+{}", a.fingerprint, b.fingerprint),
        fold: a.fold,
        folds: a.folds.clone(),
        rows,
    })
}

fn fold_dirs(run_dir: &Path) -> Result<Vec<(u32, PathBuf)>> {
    let mut out = Vec::new();
    let rd = std::fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))?;
    for e in rd {
        let e = e.map_err(|e| Error::io(run_dir, e))?;
        let name = e.file_name().to_string_lossy().to_string();
        if let Some(s) = name.strip_prefix("fold_").and_then(|s| s.parse::<u32>().ok()) {
            if e.path().is_dir() {
                out.push((s, e.path()));
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Invalid(format!("{}: no fold_<s> directories", run_dir.display())));
    }
    Ok(out)
}

/// Fuse per fold. Score-level modes combine the prediction files of
/// networks `a` and `b`; `fl_concat` re-evaluates the stored fusion
/// checkpoints on each held-out subject. Outputs go to `out` (default: the
/// run directory) under the same `fold_<s>` layout.
pub fn cmd_fuse(run_dir: &Path, a: &str, b: &str, mode: FuseMode, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let out_root = out.unwrap_or(run_dir);
    let mut written = Vec::new();
    let folds = fold_dirs(run_dir)?;
    if mode == FuseMode::FlConcat {
        let manifest = RunManifest::load(run_dir)?;
        let exp = &manifest.experiment;
        let spec = exp.spec(NetworkKind::FlConcat)?;
        let index = scan_dataset(&manifest.config.dataset, exp.class_mode)?;
        let mut cc = exp.clip_config();
        cc.with_depth = true;
        let clips = load_clips::<f32>(&index.entries, &cc)?;
        let net = Network::new(spec.clone())?;
        for (s, dir) in folds {
            let ck = Checkpoint::<f32>::load(&checkpoint_path(&dir, NetworkKind::FlConcat), &spec)?;
            let test: Vec<_> = clips.iter().filter(|c| c.subject_id() == s).collect();
            let rows = predict_clips(&net, &ck.params, &test, exp.class_mode, exp.eval_batch)?;
            let f = PredictionFile {
                class_mode: exp.class_mode,
                network: mode.output_name().into(),
                fingerprint: spec.fingerprint(),
                fold: s,
                folds: manifest.folds.clone(),
                rows,
            };
            let d = fold_dir(out_root, s);
            create_dir(&d)?;
            let p = prediction_path(&d, mode.output_name());
            if p.is_file() {
                let stored = PredictionFile::read(&p)?;
                if stored.rows != f.rows {
                    return Err(Error::Fold {
                        fold: s,
                        source: Box::new(Error::Invalid(format!(
                            "{} disagrees with the checkpoint's predictions",
                            p.display()
                        ))),
                    });
                }
            } else {
                f.write(&p)?;
            }
            written.push(p);
        }
        return Ok(written);
    }
    for (s, dir) in folds {
        let fa = PredictionFile::read(&prediction_path(&dir, a))?;
        let fb = PredictionFile::read(&prediction_path(&dir, b))?;
        let fused = fuse_files(&fa, &fb, mode).map_err(|e| Error::Fold {
            fold: s,
            source: Box::new(e),
        })?;
        let d = fold_dir(out_root, s);
        create_dir(&d)?;
        let p = prediction_path(&d, mode.output_name());
        fused.write(&p)?;
        written.push(p);
    }
    Ok(written)
}

/// Method name shown in report tables for a prediction-file network tag.
pub fn display_name(network: &str) -> String {
    match network {
        "depth_cnn" => "Depth CNN".into(),
        "depth_cnn_lstm" => "Depth CNN+LSTM".into(),
        "skeleton_lstm" => "Skeleton LSTM".into(),
        "fl_concat" => "FL-fusion-Concat".into(),
        "sl_average" => "SL-fusion-Average".into(),
        "sl_max" => "SL-fusion-Maximum".into(),
        other => other.into(),
    }
}

fn network_rank(network: &str) -> usize {
    ["depth_cnn", "depth_cnn_lstm", "skeleton_lstm", "fl_concat", "sl_average", "sl_max"]
        .iter()
        .position(|n| *n == network)
        .unwrap_or(usize::MAX)
}

/// Prediction files named directly or found below directories.
pub fn collect_prediction_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for e in WalkDir::new(p).sort_by_file_name() {
                let e = e.map_err(|e| Error::Dataset(e.to_string()))?;
                if e.file_type().is_file() && e.file_name().to_string_lossy().ends_with(".pred.csv") {
                    out.push(e.into_path());
                }
            }
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(Error::Invalid(format!("{}: no such file or directory", p.display())));
        }
    }
    if out.is_empty() {
        return Err(Error::Invalid("no prediction files found".into()));
    }
    Ok(out)
}

fn group_files(paths: &[PathBuf]) -> Result<(ClassMode, BTreeMap<String, Vec<PredictionFile>>)> {
    let mut mode = None;
    let mut groups: BTreeMap<String, Vec<PredictionFile>> = BTreeMap::new();
    for p in paths {
        let f = PredictionFile::read(p)?;
        match mode {
            None => mode = Some(f.class_mode),
            Some(m) if m != f.class_mode => {
                return Err(Error::Invalid(format!(
                    "mixed class modes: {} is {}-class, earlier files are {m}-class",
                    p.display(),
                    f.class_mode
                )))
            }
            _ => {}
        }
        groups.entry(f.network.clone()).or_default().push(f);
    }
    Ok((mode.expect("at least one file"), groups))
}

fn aggregate_group(network: &str, mode: ClassMode, files: &[PredictionFile]) -> Result<OverallReport> {
    let expected = files[0].folds.clone();
    if files.iter().any(|f| f.folds != expected) {
        return Err(Error::Invalid(format!("{network}: files disagree on the fold list")));
    }
    let folds: Vec<FoldPredictions> = files
        .iter()
        .map(|f| FoldPredictions {
            fold: f.fold,
            predictions: f.rows.clone(),
        })
        .collect();
    aggregate_folds(network, mode, &folds, &expected)
}

#[derive(Clone, Debug)]
pub struct ReportOutput {
    pub text: String,
    pub reports: Vec<OverallReport>,
    pub files: Vec<PathBuf>,
}

/// Aggregate prediction files per network and write:
/// `report.txt`, `report.json`, `grain_folds.csv`, `grain_gestures.csv`
/// and per network `<name>/confusion_counts.csv`, `confusion_percent.csv`,
/// `confusion.png` (plus collapsed versions for 28-class runs).
/// `compare_14` adds the 14-vs-28 drop decomposition for networks present
/// in both sets.
pub fn cmd_report(inputs: &[PathBuf], out_dir: &Path, compare_14: &[PathBuf]) -> Result<ReportOutput> {
    let paths = collect_prediction_files(inputs)?;
    let (mode, groups) = group_files(&paths)?;
    let mut names: Vec<&String> = groups.keys().collect();
    names.sort_by_key(|n| (network_rank(n), n.to_string()));
    let mut reports = Vec::new();
    for n in names {
        reports.push(aggregate_group(n, mode, &groups[n])?);
    }

    let baseline: BTreeMap<String, f64> = if compare_14.is_empty() {
        BTreeMap::new()
    } else {
        if mode != ClassMode::C28 {
            return Err(Error::Invalid("--compare-14 needs 28-class inputs".into()));
        }
        let (m14, g14) = group_files(&collect_prediction_files(compare_14)?)?;
        if m14 != ClassMode::C14 {
            return Err(Error::Invalid("--compare-14 inputs must be 14-class".into()));
        }
        g14.iter()
            .map(|(n, files)| Ok((n.clone(), aggregate_group(n, m14, files)?.pooled_accuracy)))
            .collect::<Result<_>>()?
    };

    let fold_rows: Vec<(String, &_)> = reports.iter().map(|r| (display_name(&r.network), &r.fold_grain)).collect();
    let gesture_rows: Vec<(String, &_)> = reports.iter().map(|r| (display_name(&r.network), &r.gesture_grain)).collect();
    let as_refs = |v: &[(String, &crate::metrics::GrainReport)]| -> Vec<(String, crate::metrics::GrainReport)> {
        v.iter().map(|(n, g)| (n.clone(), **g)).collect()
    };
    let fr = as_refs(&fold_rows);
    let gr = as_refs(&gesture_rows);
    let fr_ref: Vec<(&str, &_)> = fr.iter().map(|(n, g)| (n.as_str(), g)).collect();
    let gr_ref: Vec<(&str, &_)> = gr.iter().map(|(n, g)| (n.as_str(), g)).collect();

    let mut text = String::new();
    let _ = writeln!(text, "Recognition rates (%) of the {}-class problem", mode);
    let _ = writeln!(text, "Unit: held-out subject (LOSO fold)");
    text.push_str(&render_grain_table(&fr_ref));
    text.push('\n');
    let _ = writeln!(text, "Unit: gesture class (pooled confusion matrix)");
    text.push_str(&render_grain_table(&gr_ref));
    let mut decompositions = BTreeMap::new();
    for r in &reports {
        text.push('\n');
        text.push_str(&render_summary(r));
        if let Some(&a14) = baseline.get(&r.network) {
            let d = decompose_drop(a14, r)?;
            let _ = writeln!(
                text,
                "14 -> 28 drop: {:.2} points = {:.2} intra-gesture + {:.2} residual",
                100.0 * d.total_drop,
                100.0 * d.intra_gesture,
                100.0 * d.residual
            );
            decompositions.insert(r.network.clone(), d);
        }
    }

    create_dir(out_dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, body: &str| -> Result<()> {
        let p = out_dir.join(name);
        if let Some(parent) = p.parent() {
            create_dir(parent)?;
        }
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        files.push(p);
        Ok(())
    };
    put("report.txt", &text)?;
    put("grain_folds.csv", &grain_table_csv(&fr_ref))?;
    put("grain_gestures.csv", &grain_table_csv(&gr_ref))?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "class_mode": mode,
        "reports": reports,
        "drop_decomposition": decompositions,
    }))
    .map_err(|e| Error::Format(e.to_string()))?;
    put("report.json", &(json + "\n"))?;
    for r in &reports {
        put(&format!("{}/confusion_counts.csv", r.network), &r.pooled.to_counts_csv())?;
        put(&format!("{}/confusion_percent.csv", r.network), &r.pooled.to_percent_csv())?;
        if let Some(c) = &r.collapse {
            put(&format!("{}/collapsed_counts.csv", r.network), &c.collapsed.to_counts_csv())?;
            put(&format!("{}/collapsed_percent.csv", r.network), &c.collapsed.to_percent_csv())?;
        }
    }
    for r in &reports {
        let p = out_dir.join(&r.network).join("confusion.png");
        r.pooled.write_heatmap(&p, 16)?;
        files.push(p);
    }
    Ok(ReportOutput { text, reports, files })
}
