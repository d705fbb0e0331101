//! Weight transfer between networks.

use super::params::{init_tensor, param_shapes, Parameters};
use super::spec::{LayerKind, NetworkKind, NetworkSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Conv layer names shared by the per-frame CNN and the CNN+LSTM trunk.
pub const CONV_LAYERS: [&str; 6] = ["conv1", "conv2", "conv3", "conv4", "conv5", "conv6"];

/// Salt mixed into the seed for re-initialized output layers, so a warm
/// start never reproduces the cold-start initialization.
const WARM_SALT: u64 = 0x57A2_11CE_28C1_A55E;

/// Copy every tensor of `src_layer` in `source` onto `dst_layer` in `target`.
pub fn copy_layer<T: Scalar>(source: &Parameters<T>, src_layer: &str, target: &mut Parameters<T>, dst_layer: &str) -> Result<()> {
    let tensors: Vec<(String, _)> = source
        .layer_tensors(src_layer)
        .map(|(k, v)| (k[src_layer.len()..].to_string(), v.clone()))
        .collect();
    if tensors.is_empty() {
        return Err(Error::shape(src_layer, "source has no tensors for this layer"));
    }
    for (suffix, t) in tensors {
        let name = format!("{dst_layer}{suffix}");
        let dst = target
            .get_mut(&name)
            .ok_or_else(|| Error::shape(dst_layer, format!("target has no tensor {name}")))?;
        if dst.shape() != t.shape() {
            return Err(Error::shape(
                dst_layer,
                format!("cannot copy {:?} onto {:?} ({name})", t.shape(), dst.shape()),
            ));
        }
        *dst = t;
    }
    Ok(())
}

/// Initialize the CNN+LSTM's six conv layers from a pretrained per-frame CNN.
/// Every other target tensor is left untouched.
pub fn transfer_conv_weights<T: Scalar>(source: &Parameters<T>, target: &Parameters<T>) -> Result<Parameters<T>> {
    let mut out = target.clone();
    for l in CONV_LAYERS {
        copy_layer(source, l, &mut out, l)?;
    }
    Ok(out)
}

/// Reuse 14-class weights for a 28-class network: everything except the
/// final classification layer is copied; that layer is freshly initialized.
pub fn warm_start_28<T: Scalar>(params_14: &Parameters<T>, spec_28: &NetworkSpec, seed: u64) -> Result<Parameters<T>> {
    if spec_28.n_classes != 28 {
        return Err(Error::Invalid(format!("warm start target has {} classes, expected 28", spec_28.n_classes)));
    }
    let out_layer = spec_28.output_layer().to_string();
    let mut out = Parameters::new();
    for info in param_shapes(spec_28)? {
        if info.layer == out_layer {
            out.insert(info.name.clone(), init_tensor::<T>(&info, seed ^ WARM_SALT));
            continue;
        }
        let src = params_14.get(&info.name)?;
        if src.shape() != info.shape.as_slice() {
            return Err(Error::shape(
                &info.layer,
                format!("{} is {:?} in the source but {:?} in the target", info.name, src.shape(), info.shape),
            ));
        }
        out.insert(info.name.clone(), src.clone());
    }
    Ok(out)
}

/// Warm-start a feature-level fusion network from trained single-modality
/// networks: each branch trunk is copied, the fusion head stays as in `fl`.
pub fn warm_start_fl<T: Scalar>(
    fl_spec: &NetworkSpec,
    fl: &Parameters<T>,
    depth: Option<&Parameters<T>>,
    skeleton: Option<&Parameters<T>>,
) -> Result<Parameters<T>> {
    if fl_spec.kind != NetworkKind::FlConcat {
        return Err(Error::Invalid("warm_start_fl needs an fl_concat spec".into()));
    }
    let mut out = fl.clone();
    for branch in &fl_spec.branches {
        let source = match branch.name.as_str() {
            "depth" => depth,
            "skeleton" => skeleton,
            _ => None,
        };
        let Some(source) = source else { continue };
        for l in branch.layers.iter().filter(|l| l.has_params()) {
            let src_name = l.name.strip_prefix(&format!("{}.", branch.name)).unwrap_or(&l.name);
            copy_layer(source, src_name, &mut out, &l.name)?;
        }
    }
    Ok(out)
}

/// Names of the LSTM layers in a spec (used to audit transfers).
pub fn lstm_layers(spec: &NetworkSpec) -> Vec<String> {
    spec.layers()
        .into_iter()
        .filter(|l| l.kind == LayerKind::Lstm)
        .map(|l| l.name)
        .collect()
}
