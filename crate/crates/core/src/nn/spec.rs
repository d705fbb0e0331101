//! Declarative network descriptions and static shape inference.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::SKELETON_DIM;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    DepthCnn,
    DepthCnnLstm,
    SkeletonLstm,
    FlConcat,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 4] = [
        NetworkKind::DepthCnn,
        NetworkKind::DepthCnnLstm,
        NetworkKind::SkeletonLstm,
        NetworkKind::FlConcat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::DepthCnn => "depth_cnn",
            NetworkKind::DepthCnnLstm => "depth_cnn_lstm",
            NetworkKind::SkeletonLstm => "skeleton_lstm",
            NetworkKind::FlConcat => "fl_concat",
        }
    }

    pub fn uses_depth(self) -> bool {
        !matches!(self, NetworkKind::SkeletonLstm)
    }

    pub fn uses_skeleton(self) -> bool {
        matches!(self, NetworkKind::SkeletonLstm | NetworkKind::FlConcat)
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetworkKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown network '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv3x3,
    MaxPool2x2,
    Flatten,
    ProjectFc,
    Lstm,
    LastStep,
    Fc,
    Concat,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Filters (conv) or units (fc, lstm); 0 for parameterless layers.
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    fn new(name: &str, kind: LayerKind, width: usize, activation: Activation) -> Self {
        Self {
            name: name.to_string(),
            kind,
            width,
            activation,
        }
    }

    pub fn conv(name: &str, filters: usize) -> Self {
        Self::new(name, LayerKind::Conv3x3, filters, Activation::Relu)
    }

    pub fn pool(name: &str) -> Self {
        Self::new(name, LayerKind::MaxPool2x2, 0, Activation::Identity)
    }

    pub fn flatten(name: &str) -> Self {
        Self::new(name, LayerKind::Flatten, 0, Activation::Identity)
    }

    pub fn project(name: &str, units: usize) -> Self {
        Self::new(name, LayerKind::ProjectFc, units, Activation::Relu)
    }

    pub fn lstm(name: &str, units: usize) -> Self {
        Self::new(name, LayerKind::Lstm, units, Activation::Identity)
    }

    pub fn last_step(name: &str) -> Self {
        Self::new(name, LayerKind::LastStep, 0, Activation::Identity)
    }

    pub fn fc(name: &str, units: usize) -> Self {
        Self::new(name, LayerKind::Fc, units, Activation::Relu)
    }

    /// Final classification layer (logits).
    pub fn logits(name: &str, units: usize) -> Self {
        Self::new(name, LayerKind::Fc, units, Activation::Identity)
    }

    pub fn softmax(name: &str) -> Self {
        Self::new(name, LayerKind::Softmax, 0, Activation::Identity)
    }

    pub fn has_params(&self) -> bool {
        matches!(self.kind, LayerKind::Conv3x3 | LayerKind::ProjectFc | LayerKind::Lstm | LayerKind::Fc)
    }
}

/// Per-sample feature shape: optional time axis plus feature dims.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatShape {
    pub time: Option<usize>,
    pub dims: Vec<usize>,
}

impl fmt::Display for FeatShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time {
            Some(t) => write!(f, "(T={t}, {:?})", self.dims),
            None => write!(f, "{:?}", self.dims),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// One depth image per sample: `[N, S, S, 1]`.
    DepthFrame,
    /// Depth clip: `[B, T, S, S, 1]`.
    DepthSequence,
    /// Skeleton clip: `[B, T, 44]`.
    SkeletonSequence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub name: String,
    pub input: InputKind,
    pub layers: Vec<LayerSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    /// Feature extractors; more than one only for feature-level fusion.
    pub branches: Vec<BranchSpec>,
    /// Layers after the branch outputs (concatenated if several).
    pub head: Vec<LayerSpec>,
    pub n_classes: usize,
    pub timestep: usize,
    pub image_size: usize,
}

/// Layer widths. Defaults are the full-size architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    pub conv: [usize; 3],
    pub projection: usize,
    pub depth_lstm: usize,
    pub skeleton_lstm: usize,
    pub fc: usize,
}

impl Default for Widths {
    fn default() -> Self {
        Self {
            conv: [32, 64, 128],
            projection: 512,
            depth_lstm: 256,
            skeleton_lstm: 512,
            fc: 256,
        }
    }
}

impl Widths {
    /// Multiply every width by `scale`, rounding, minimum 1.
    pub fn scaled(&self, scale: f64) -> Self {
        let s = |w: usize| ((w as f64 * scale).round() as usize).max(1);
        Self {
            conv: self.conv.map(s),
            projection: s(self.projection),
            depth_lstm: s(self.depth_lstm),
            skeleton_lstm: s(self.skeleton_lstm),
            fc: s(self.fc),
        }
    }
}

/// Everything a builder needs besides the class count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub widths: Widths,
    pub timestep: usize,
    pub image_size: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            widths: Widths::default(),
            timestep: 32,
            image_size: 227,
        }
    }
}

fn check_classes(n_classes: usize) -> Result<()> {
    if n_classes == 14 || n_classes == 28 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("n_classes must be 14 or 28, got {n_classes}")))
    }
}

fn conv_trunk(w: &Widths) -> Vec<LayerSpec> {
    let [f1, f2, f3] = w.conv;
    vec![
        LayerSpec::conv("conv1", f1),
        LayerSpec::conv("conv2", f1),
        LayerSpec::pool("pool1"),
        LayerSpec::conv("conv3", f2),
        LayerSpec::conv("conv4", f2),
        LayerSpec::pool("pool2"),
        LayerSpec::conv("conv5", f3),
        LayerSpec::conv("conv6", f3),
        LayerSpec::pool("pool3"),
        LayerSpec::flatten("flatten"),
    ]
}

fn mlp_head(fc: usize, n_fc: usize, n_classes: usize) -> Vec<LayerSpec> {
    let mut head: Vec<LayerSpec> = (1..=n_fc).map(|i| LayerSpec::fc(&format!("fc{i}"), fc)).collect();
    head.push(LayerSpec::logits("out", n_classes));
    head.push(LayerSpec::softmax("softmax"));
    head
}

/// Per-frame depth CNN: six convs with a pool after every second, then the MLP.
pub fn build_depth_cnn(n_classes: usize, arch: &ArchConfig) -> Result<NetworkSpec> {
    check_classes(n_classes)?;
    let spec = NetworkSpec {
        kind: NetworkKind::DepthCnn,
        branches: vec![BranchSpec {
            name: String::new(),
            input: InputKind::DepthFrame,
            layers: conv_trunk(&arch.widths),
        }],
        head: mlp_head(arch.widths.fc, 2, n_classes),
        n_classes,
        timestep: 1,
        image_size: arch.image_size,
    };
    spec.infer_shapes()?;
    Ok(spec)
}

fn depth_sequence_trunk(w: &Widths) -> Vec<LayerSpec> {
    let mut layers = conv_trunk(w);
    layers.push(LayerSpec::project("proj", w.projection));
    layers.push(LayerSpec::lstm("lstm1", w.depth_lstm));
    layers.push(LayerSpec::lstm("lstm2", w.depth_lstm));
    layers.push(LayerSpec::last_step("last"));
    layers
}

fn skeleton_trunk(w: &Widths) -> Vec<LayerSpec> {
    vec![
        LayerSpec::lstm("lstm1", w.skeleton_lstm),
        LayerSpec::lstm("lstm2", w.skeleton_lstm),
        LayerSpec::last_step("last"),
    ]
}

/// Shared per-frame CNN, projection, two LSTMs, last valid step, MLP.
pub fn build_depth_cnn_lstm(n_classes: usize, arch: &ArchConfig) -> Result<NetworkSpec> {
    check_classes(n_classes)?;
    let spec = NetworkSpec {
        kind: NetworkKind::DepthCnnLstm,
        branches: vec![BranchSpec {
            name: String::new(),
            input: InputKind::DepthSequence,
            layers: depth_sequence_trunk(&arch.widths),
        }],
        head: mlp_head(arch.widths.fc, 2, n_classes),
        n_classes,
        timestep: arch.timestep,
        image_size: arch.image_size,
    };
    spec.infer_shapes()?;
    Ok(spec)
}

/// Two LSTMs over the 44-d joint stream and a four-layer MLP.
pub fn build_skeleton_lstm(n_classes: usize, arch: &ArchConfig) -> Result<NetworkSpec> {
    check_classes(n_classes)?;
    let spec = NetworkSpec {
        kind: NetworkKind::SkeletonLstm,
        branches: vec![BranchSpec {
            name: String::new(),
            input: InputKind::SkeletonSequence,
            layers: skeleton_trunk(&arch.widths),
        }],
        head: mlp_head(arch.widths.fc, 3, n_classes),
        n_classes,
        timestep: arch.timestep,
        image_size: arch.image_size,
    };
    spec.infer_shapes()?;
    Ok(spec)
}

fn prefixed(prefix: &str, layers: &[LayerSpec]) -> Vec<LayerSpec> {
    layers
        .iter()
        .map(|l| LayerSpec {
            name: format!("{prefix}.{}", l.name),
            ..l.clone()
        })
        .collect()
}

/// Feature-level fusion: the depth and skeleton trunks up to their final
/// LSTM output, concatenated, then a shared MLP.
pub fn build_fl_concat(depth: &NetworkSpec, skeleton: &NetworkSpec, n_classes: usize) -> Result<NetworkSpec> {
    check_classes(n_classes)?;
    if depth.kind != NetworkKind::DepthCnnLstm || skeleton.kind != NetworkKind::SkeletonLstm {
        return Err(Error::Invalid("fl_concat needs a depth_cnn_lstm and a skeleton_lstm spec".into()));
    }
    if depth.timestep != skeleton.timestep {
        return Err(Error::Invalid(format!(
            "timestep mismatch: depth branch {} vs skeleton branch {}",
            depth.timestep, skeleton.timestep
        )));
    }
    let fc = depth
        .head
        .iter()
        .find(|l| l.kind == LayerKind::Fc)
        .map(|l| l.width)
        .unwrap_or(256);
    let spec = NetworkSpec {
        kind: NetworkKind::FlConcat,
        branches: vec![
            BranchSpec {
                name: "depth".into(),
                input: InputKind::DepthSequence,
                layers: prefixed("depth", &depth.branches[0].layers),
            },
            BranchSpec {
                name: "skeleton".into(),
                input: InputKind::SkeletonSequence,
                layers: prefixed("skeleton", &skeleton.branches[0].layers),
            },
        ],
        head: mlp_head(fc, 2, n_classes),
        n_classes,
        timestep: depth.timestep,
        image_size: depth.image_size,
    };
    spec.infer_shapes()?;
    Ok(spec)
}

/// Build a named network from an architecture config.
pub fn build_network(kind: NetworkKind, n_classes: usize, arch: &ArchConfig) -> Result<NetworkSpec> {
    match kind {
        NetworkKind::DepthCnn => build_depth_cnn(n_classes, arch),
        NetworkKind::DepthCnnLstm => build_depth_cnn_lstm(n_classes, arch),
        NetworkKind::SkeletonLstm => build_skeleton_lstm(n_classes, arch),
        NetworkKind::FlConcat => build_fl_concat(
            &build_depth_cnn_lstm(n_classes, arch)?,
            &build_skeleton_lstm(n_classes, arch)?,
            n_classes,
        ),
    }
}

/// Result of static shape inference for one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub layer: LayerSpec,
    pub input: FeatShape,
    pub output: FeatShape,
}

impl NetworkSpec {
    pub fn input_shape(&self, input: InputKind) -> FeatShape {
        let s = self.image_size;
        match input {
            InputKind::DepthFrame => FeatShape {
                time: None,
                dims: vec![s, s, 1],
            },
            InputKind::DepthSequence => FeatShape {
                time: Some(self.timestep),
                dims: vec![s, s, 1],
            },
            InputKind::SkeletonSequence => FeatShape {
                time: Some(self.timestep),
                dims: vec![SKELETON_DIM],
            },
        }
    }

    /// Every layer in evaluation order, with a `concat` entry between the
    /// branches and the head when there are several branches.
    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut out: Vec<LayerSpec> = self.branches.iter().flat_map(|b| b.layers.iter().cloned()).collect();
        if self.branches.len() > 1 {
            out.push(LayerSpec::new("concat", LayerKind::Concat, 0, Activation::Identity));
        }
        out.extend(self.head.iter().cloned());
        out
    }

    /// Chain-check every layer; returns per-branch and head shape lists.
    pub fn infer_shapes(&self) -> Result<(Vec<Vec<LayerShape>>, Vec<LayerShape>)> {
        if self.branches.is_empty() {
            return Err(Error::shape("network", "no branches"));
        }
        let mut branch_shapes = Vec::new();
        let mut outputs = Vec::new();
        for b in &self.branches {
            let mut shape = self.input_shape(b.input);
            let mut list = Vec::new();
            for l in &b.layers {
                let out = layer_output(l, &shape)?;
                list.push(LayerShape {
                    layer: l.clone(),
                    input: shape,
                    output: out.clone(),
                });
                shape = out;
            }
            outputs.push(shape);
            branch_shapes.push(list);
        }
        let mut shape = if outputs.len() == 1 {
            outputs.pop().unwrap()
        } else {
            let mut width = 0;
            for (o, b) in outputs.iter().zip(&self.branches) {
                if o.time.is_some() || o.dims.len() != 1 {
                    return Err(Error::shape("concat", format!("branch {} yields {o}, expected a vector", b.name)));
                }
                width += o.dims[0];
            }
            FeatShape {
                time: None,
                dims: vec![width],
            }
        };
        let mut head = Vec::new();
        for l in &self.head {
            let out = layer_output(l, &shape)?;
            head.push(LayerShape {
                layer: l.clone(),
                input: shape,
                output: out.clone(),
            });
            shape = out;
        }
        if shape.time.is_some() || shape.dims != [self.n_classes] {
            return Err(Error::shape("output", format!("network yields {shape}, expected [{}]", self.n_classes)));
        }
        Ok((branch_shapes, head))
    }

    /// Width of the concatenated feature vector (fusion networks).
    pub fn concat_width(&self) -> Option<usize> {
        let (_, head) = self.infer_shapes().ok()?;
        (self.branches.len() > 1).then(|| head.first().map(|h| h.input.dims[0])).flatten()
    }

    /// Canonical description used for checkpoint compatibility.
    pub fn fingerprint_text(&self) -> String {
        let mut s = format!(
            "{}|classes={}|T={}|image={}",
            self.kind, self.n_classes, self.timestep, self.image_size
        );
        for b in &self.branches {
            s.push_str(&format!("|branch:{}:{:?}", b.name, b.input));
            for l in &b.layers {
                s.push_str(&format!("|{}:{:?}:{}:{:?}", l.name, l.kind, l.width, l.activation));
            }
        }
        s.push_str("|head");
        for l in &self.head {
            s.push_str(&format!("|{}:{:?}:{}:{:?}", l.name, l.kind, l.width, l.activation));
        }
        s
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.fingerprint_text().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Name of the final classification layer.
    pub fn output_layer(&self) -> &str {
        self.head
            .iter()
            .rev()
            .find(|l| l.has_params())
            .map(|l| l.name.as_str())
            .unwrap_or("out")
    }
}

fn layer_output(l: &LayerSpec, input: &FeatShape) -> Result<FeatShape> {
    let err = |msg: String| Err(Error::shape(&l.name, msg));
    match l.kind {
        LayerKind::Conv3x3 => match input.dims.as_slice() {
            [h, w, _] if l.width > 0 => Ok(FeatShape {
                time: input.time,
                dims: vec![*h, *w, l.width],
            }),
            _ => err(format!("conv3x3 needs an image input, got {input}")),
        },
        LayerKind::MaxPool2x2 => match input.dims.as_slice() {
            [h, w, c] if *h >= 2 && *w >= 2 => Ok(FeatShape {
                time: input.time,
                dims: vec![h / 2, w / 2, *c],
            }),
            _ => err(format!("maxpool2x2 needs an image of at least 2x2, got {input}")),
        },
        LayerKind::Flatten => Ok(FeatShape {
            time: input.time,
            dims: vec![input.dims.iter().product()],
        }),
        LayerKind::ProjectFc | LayerKind::Fc => match input.dims.as_slice() {
            [_] if l.width > 0 => Ok(FeatShape {
                time: input.time,
                dims: vec![l.width],
            }),
            _ => err(format!("fully connected layer needs a vector input, got {input}")),
        },
        LayerKind::Lstm => match (input.time, input.dims.as_slice()) {
            (Some(t), [_]) if l.width > 0 => Ok(FeatShape {
                time: Some(t),
                dims: vec![l.width],
            }),
            _ => err(format!("lstm needs a vector sequence, got {input}")),
        },
        LayerKind::LastStep => match input.time {
            Some(_) => Ok(FeatShape {
                time: None,
                dims: input.dims.clone(),
            }),
            None => err(format!("last_step needs a sequence, got {input}")),
        },
        LayerKind::Softmax => match (input.time, input.dims.as_slice()) {
            (None, [_]) => Ok(input.clone()),
            _ => err(format!("softmax needs a vector, got {input}")),
        },
        LayerKind::Concat => err("concat may only join branches".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_cnn_pre_flatten_is_28x28() {
        let spec = build_depth_cnn(14, &ArchConfig::default()).unwrap();
        let (branches, _) = spec.infer_shapes().unwrap();
        let pools: Vec<_> = branches[0]
            .iter()
            .filter(|s| s.layer.kind == LayerKind::MaxPool2x2)
            .map(|s| s.output.dims[0])
            .collect();
        assert_eq!(pools, vec![113, 56, 28]);
        let flat = branches[0].iter().find(|s| s.layer.kind == LayerKind::Flatten).unwrap();
        assert_eq!(flat.input.dims, vec![28, 28, 128]);
        assert_eq!(flat.output.dims, vec![100_352]);
    }

    #[test]
    fn head_widths() {
        let arch = ArchConfig::default();
        let d = build_depth_cnn_lstm(14, &arch).unwrap();
        let s = build_skeleton_lstm(14, &arch).unwrap();
        let fcs = |n: &NetworkSpec| n.head.iter().filter(|l| l.kind == LayerKind::Fc).map(|l| l.width).collect::<Vec<_>>();
        assert_eq!(fcs(&d), vec![256, 256, 14]);
        assert_eq!(fcs(&s), vec![256, 256, 256, 14]);
        let lstm = |n: &NetworkSpec| n.layers().iter().filter(|l| l.kind == LayerKind::Lstm).map(|l| l.width).collect::<Vec<_>>();
        assert_eq!(lstm(&d), vec![256, 256]);
        assert_eq!(lstm(&s), vec![512, 512]);
        assert_eq!(fcs(&build_depth_cnn(28, &arch).unwrap()).last(), Some(&28));
    }

    #[test]
    fn fl_concat_width_is_sum_of_branches() {
        let arch = ArchConfig::default();
        let fl = build_network(NetworkKind::FlConcat, 14, &arch).unwrap();
        assert_eq!(fl.concat_width(), Some(768));
        assert!(fl.layers().iter().any(|l| l.kind == LayerKind::Concat));
    }

    #[test]
    fn fl_concat_rejects_timestep_mismatch() {
        let a = build_depth_cnn_lstm(14, &ArchConfig::default()).unwrap();
        let b = build_skeleton_lstm(14, &ArchConfig { timestep: 16, ..ArchConfig::default() }).unwrap();
        assert!(build_fl_concat(&a, &b, 14).is_err());
    }

    #[test]
    fn bad_class_count() {
        assert!(build_depth_cnn(10, &ArchConfig::default()).is_err());
    }

    #[test]
    fn fingerprint_tracks_widths() {
        let a = build_skeleton_lstm(14, &ArchConfig::default()).unwrap();
        let scaled = ArchConfig {
            widths: Widths::default().scaled(0.1),
            ..ArchConfig::default()
        };
        let b = build_skeleton_lstm(14, &scaled).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), build_skeleton_lstm(14, &ArchConfig::default()).unwrap().fingerprint());
    }

    #[test]
    fn broken_chain_is_caught() {
        let mut spec = build_skeleton_lstm(14, &ArchConfig::default()).unwrap();
        spec.branches[0].layers.retain(|l| l.kind != LayerKind::LastStep);
        assert!(spec.infer_shapes().is_err());
    }
}
