//! Leave-one-subject-out experiment driver.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::optim::Optimizer;
use super::plan::{InitMode, PlanSet, TrainPlan};
use super::predictions::{accuracy, Prediction, PredictionFile};
use super::trainer::{derive_seed, predict_clips, train_network, TrainHistory, TrainSet};
use crate::dataset::{split_loso, ClassMode, DatasetIndex, LosoFold};
use crate::error::{Error, Result};
use crate::nn::{
    build_network, init_parameters, transfer_conv_weights, warm_start_28, warm_start_fl, ArchConfig, Checkpoint, Network,
    NetworkKind, NetworkSpec, Parameters, TrainingMeta,
};
use crate::preprocess::{Clip, ClipConfig};

/// Everything that determines a LOSO run besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub networks: Vec<NetworkKind>,
    pub plans: PlanSet,
    pub arch: ArchConfig,
    pub class_mode: ClassMode,
    pub seed: u64,
    /// Batch size for evaluation passes.
    pub eval_batch: usize,
    /// Output directory of a finished 14-class run; when set, 28-class
    /// networks start from its per-fold checkpoints.
    pub warm_28_from: Option<PathBuf>,
}

impl Experiment {
    pub fn clip_config(&self) -> ClipConfig {
        ClipConfig {
            timestep: self.arch.timestep,
            image_size: self.arch.image_size,
            with_depth: self.networks.iter().any(|k| k.uses_depth()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.networks.is_empty() {
            return Err(Error::Config("no networks selected".into()));
        }
        self.plans.validate()?;
        for k in &self.networks {
            let p = self.plans.get(*k);
            if p.timestep != self.arch.timestep {
                return Err(Error::Config(format!(
                    "{k}: plan timestep {} differs from architecture timestep {}",
                    p.timestep, self.arch.timestep
                )));
            }
        }
        if self.warm_28_from.is_some() && self.class_mode != ClassMode::C28 {
            return Err(Error::Config("warm_28_from only applies to 28-class runs".into()));
        }
        Ok(())
    }

    pub fn spec(&self, kind: NetworkKind) -> Result<NetworkSpec> {
        build_network(kind, self.class_mode.n_classes(), &self.arch)
    }
}

pub fn fold_dir(root: &Path, subject: u32) -> PathBuf {
    root.join(format!("fold_{subject:02}"))
}

pub fn checkpoint_path(fold_dir: &Path, kind: NetworkKind) -> PathBuf {
    fold_dir.join(format!("{kind}.ckpt"))
}

pub fn prediction_path(fold_dir: &Path, network: &str) -> PathBuf {
    fold_dir.join(format!("{network}.pred.csv"))
}

/// Final state of one trained network.
#[derive(Clone, Debug)]
pub struct TrainedNetwork {
    pub spec: NetworkSpec,
    pub params: Parameters<f32>,
    pub optimizer: Optimizer<f32>,
    pub plan: TrainPlan,
    pub seed: u64,
}

impl TrainedNetwork {
    pub fn checkpoint(&self) -> Checkpoint<f32> {
        Checkpoint {
            spec: self.spec.clone(),
            params: self.params.clone(),
            optimizer_state: self.optimizer.state.to_slots(),
            meta: TrainingMeta {
                epoch: self.plan.epochs,
                seed: self.seed,
                optimizer: serde_json::json!({
                    "config": self.optimizer.config,
                    "step": self.optimizer.state.step,
                }),
            },
        }
    }
}

/// One network evaluated on one held-out subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub network: NetworkKind,
    pub fold: u32,
    pub fingerprint: String,
    pub predictions: Vec<Prediction>,
    pub history: TrainHistory,
    /// Accuracy of the final parameters on the fold's training clips.
    pub train_accuracy: f64,
}

impl FoldResult {
    pub fn test_accuracy(&self) -> f64 {
        accuracy(&self.predictions)
    }

    pub fn to_file(&self, mode: ClassMode, folds: &[u32]) -> PredictionFile {
        PredictionFile {
            class_mode: mode,
            network: self.network.to_string(),
            fingerprint: self.fingerprint.clone(),
            fold: self.fold,
            folds: folds.to_vec(),
            rows: self.predictions.clone(),
        }
    }
}

pub struct FoldOutput {
    pub fold: LosoFold,
    pub results: Vec<FoldResult>,
    pub trained: Vec<TrainedNetwork>,
}

impl FoldOutput {
    pub fn result(&self, kind: NetworkKind) -> Option<&FoldResult> {
        self.results.iter().find(|r| r.network == kind)
    }
}

fn load_warm_28(exp: &Experiment, fold: u32, spec: &NetworkSpec, seed: u64) -> Result<Option<Parameters<f32>>> {
    let Some(dir) = &exp.warm_28_from else { return Ok(None) };
    let path = checkpoint_path(&fold_dir(dir, fold), spec.kind);
    let ck = Checkpoint::<f32>::load_any(&path)?;
    if ck.spec.n_classes != 14 || ck.spec.kind != spec.kind {
        return Err(Error::Config(format!("{}: not a 14-class {} checkpoint", path.display(), spec.kind)));
    }
    log::info!("fold {fold}: {} warm-started from {}", spec.kind, path.display());
    Ok(Some(warm_start_28(&ck.params, spec, seed)?))
}

/// Train every selected network on one fold and evaluate it on the
/// held-out subject. `clips` must be aligned with `index.entries`.
pub fn run_fold(index: &DatasetIndex, clips: &[Clip<f32>], fold: &LosoFold, exp: &Experiment) -> Result<FoldOutput> {
    let s = fold.test_subject;
    let wrap = |e: Error| Error::Fold {
        fold: s,
        source: Box::new(e),
    };
    run_fold_inner(index, clips, fold, exp).map_err(wrap)
}

fn run_fold_inner(index: &DatasetIndex, clips: &[Clip<f32>], fold: &LosoFold, exp: &Experiment) -> Result<FoldOutput> {
    if clips.len() != index.entries.len() {
        return Err(Error::Invalid(format!("{} clips for {} index entries", clips.len(), index.entries.len())));
    }
    let s = fold.test_subject;
    let train: Vec<&Clip<f32>> = clips.iter().filter(|c| c.subject_id() != s).collect();
    let test: Vec<&Clip<f32>> = clips.iter().filter(|c| c.subject_id() == s).collect();
    if test.is_empty() {
        return Err(Error::Dataset(format!("no sequences for held-out subject {s}")));
    }
    let set = TrainSet {
        clips: train.clone(),
        mode: exp.class_mode,
        held_out: Some(s),
    };

    let mut out = FoldOutput {
        fold: fold.clone(),
        results: Vec::new(),
        trained: Vec::new(),
    };
    let wants = |k: NetworkKind| exp.networks.contains(&k);
    let need_cnn = wants(NetworkKind::DepthCnn)
        || (wants(NetworkKind::DepthCnnLstm) && exp.plans.depth_cnn_lstm.init == InitMode::Transfer && exp.warm_28_from.is_none());

    let mut order = Vec::new();
    if need_cnn {
        order.push(NetworkKind::DepthCnn);
    }
    order.extend(
        [NetworkKind::DepthCnnLstm, NetworkKind::SkeletonLstm, NetworkKind::FlConcat]
            .into_iter()
            .filter(|k| wants(*k)),
    );

    for kind in order {
        let spec = exp.spec(kind)?;
        let plan = *exp.plans.get(kind);
        let init_seed = derive_seed(exp.seed, &format!("init/{kind}"), s as u64);
        let train_seed = derive_seed(exp.seed, &format!("train/{kind}"), s as u64);
        let cold: Parameters<f32> = init_parameters(&spec, init_seed)?;
        let find = |k: NetworkKind| out.trained.iter().find(|t| t.spec.kind == k).map(|t| &t.params);

        let mut params = if let Some(p) = load_warm_28(exp, s, &spec, init_seed)? {
            p
        } else {
            match (kind, plan.init) {
                (NetworkKind::DepthCnnLstm, InitMode::Transfer) => {
                    let cnn = find(NetworkKind::DepthCnn).expect("pretrained first");
                    transfer_conv_weights(cnn, &cold)?
                }
                (NetworkKind::FlConcat, InitMode::Warm) => {
                    let (d, k) = (find(NetworkKind::DepthCnnLstm), find(NetworkKind::SkeletonLstm));
                    if d.is_none() || k.is_none() {
                        log::warn!("fold {s}: fl_concat warm start without trained depth_cnn_lstm/skeleton_lstm; missing branches start cold");
                    }
                    warm_start_fl(&spec, &cold, d, k)?
                }
                _ => cold,
            }
        };

        let net = Network::new(spec.clone())?;
        let mut opt = Optimizer::new(plan.optimizer);
        log::info!("fold {s}: training {kind} ({} epochs, batch {})", plan.epochs, plan.batch_size);
        let history = train_network(&net, &mut params, &mut opt, &set, &plan, train_seed)?;
        if !wants(kind) {
            log::info!("fold {s}: depth_cnn pretrained (final loss {:.4})", history.epoch_losses.last().copied().unwrap_or(f64::NAN));
        } else {
            let train_acc = accuracy(&predict_clips(&net, &params, &train, exp.class_mode, exp.eval_batch)?);
            let predictions = predict_clips(&net, &params, &test, exp.class_mode, exp.eval_batch)?;
            let r = FoldResult {
                network: kind,
                fold: s,
                fingerprint: spec.fingerprint(),
                predictions,
                history,
                train_accuracy: train_acc,
            };
            log::info!(
                "fold {s}: {kind} train acc {:.3}, held-out acc {:.3}",
                r.train_accuracy,
                r.test_accuracy()
            );
            out.results.push(r);
        }
        out.trained.push(TrainedNetwork {
            spec,
            params,
            optimizer: opt,
            plan,
            seed: init_seed,
        });
    }
    Ok(out)
}

/// Run every fold in ascending subject order. `skip` lets callers resume;
/// `on_fold` receives each finished fold (e.g. to persist it).
pub fn run_loso_with(
    index: &DatasetIndex,
    clips: &[Clip<f32>],
    exp: &Experiment,
    mut skip: impl FnMut(&LosoFold) -> bool,
    mut on_fold: impl FnMut(FoldOutput) -> Result<()>,
) -> Result<()> {
    exp.validate()?;
    for fold in split_loso(index)? {
        if skip(&fold) {
            log::info!("fold {}: already complete, skipping", fold.test_subject);
            continue;
        }
        let r = run_fold(index, clips, &fold, exp)?;
        on_fold(r)?;
    }
    Ok(())
}

/// Load clips and run every fold, keeping all results in memory.
pub fn run_loso(index: &DatasetIndex, exp: &Experiment) -> Result<Vec<FoldOutput>> {
    exp.validate()?;
    let clips = super::data::load_clips::<f32>(&index.entries, &exp.clip_config())?;
    let mut out = Vec::new();
    run_loso_with(index, &clips, exp, |_| false, |f| {
        out.push(f);
        Ok(())
    })?;
    Ok(out)
}
