mod common;

use common::*;
use hgr_core::nn::layers::{conv3x3_forward, maxpool2x2_forward, relu_forward};
use hgr_core::nn::*;
use hgr_core::{Error, Tensor};

const fn pooled(mut s: usize, pools: usize) -> usize {
    let mut i = 0;
    while i < pools {
        s /= 2;
        i += 1;
    }
    s
}

// the floor chain 227 -> 113 -> 56 -> 28, checked at compile time
const _: () = assert!(pooled(227, 1) == 113 && pooled(227, 2) == 56 && pooled(227, 3) == 28);

#[test]
fn depth_cnn_pre_flatten_shape_static() {
    let spec = build_depth_cnn(14, &ArchConfig::default()).unwrap();
    let net = Network::new(spec).unwrap();
    let (branches, _) = net.shapes();
    let flat = branches[0].iter().find(|s| s.layer.kind == LayerKind::Flatten).unwrap();
    assert_eq!(flat.input.dims, vec![pooled(227, 3), pooled(227, 3), 128]);
}

#[test]
fn depth_cnn_pre_flatten_shape_dynamic() {
    // narrow filters keep this quick; spatial sizes do not depend on them
    let arch = ArchConfig {
        widths: Widths::default().scaled(0.125),
        ..ArchConfig::default()
    };
    let spec = build_depth_cnn(14, &arch).unwrap();
    let params: Parameters<f32> = init_parameters(&spec, 0).unwrap();
    let mut x = Tensor::<f32>::filled(&[1, 227, 227, 1], 0.5);
    let mut sizes = Vec::new();
    for l in &spec.branches[0].layers {
        match l.kind {
            LayerKind::Conv3x3 => {
                let w = params.get(&format!("{}.weight", l.name)).unwrap();
                let b = params.get(&format!("{}.bias", l.name)).unwrap();
                x = relu_forward(&conv3x3_forward(&x, w, b).unwrap());
            }
            LayerKind::MaxPool2x2 => {
                x = maxpool2x2_forward(&x).unwrap().0;
                sizes.push(x.shape()[1]);
            }
            _ => break,
        }
    }
    assert_eq!(sizes, vec![113, 56, 28]);
    assert_eq!(x.shape(), &[1, 28, 28, arch.widths.conv[2]]);
    let net = Network::new(spec).unwrap();
    let feats = net.features(&params, &Batch::frames(Tensor::filled(&[1, 227, 227, 1], 0.5))).unwrap();
    assert_eq!(feats.shape(), &[1, 28 * 28 * arch.widths.conv[2]]);
}

fn tiny_graph() -> NetworkSpec {
    NetworkSpec {
        kind: NetworkKind::DepthCnnLstm,
        branches: vec![BranchSpec {
            name: String::new(),
            input: InputKind::DepthSequence,
            layers: vec![
                LayerSpec::conv("conv1", 2),
                LayerSpec::conv("conv2", 3),
                LayerSpec::pool("pool1"),
                LayerSpec::flatten("flatten"),
                LayerSpec::lstm("lstm1", 4),
                LayerSpec::last_step("last"),
            ],
        }],
        head: vec![LayerSpec::logits("out", 14), LayerSpec::softmax("softmax")],
        n_classes: 14,
        timestep: 3,
        image_size: 4,
    }
}

#[test]
fn tiny_graph_matches_direct_computation() {
    let spec = tiny_graph();
    let net = Network::new(spec.clone()).unwrap();
    for seed in 0..20 {
        let mut r = rng(seed);
        let mut params: Parameters<f64> = init_parameters(&spec, seed).unwrap();
        randomize(&mut params, &mut r, 0.7);
        let lengths = [3, 1, 2];
        let batch = random_batch(&mut r, NetworkKind::DepthCnnLstm, &ArchConfig { timestep: 3, image_size: 4, ..tiny_arch() }, &lengths);
        let probs = net.forward(&params, &batch).unwrap();
        let d = batch.depth.as_ref().unwrap().data();
        for (b, &len) in lengths.iter().enumerate() {
            let clip: Vec<Vec<Vec<f64>>> = (0..3)
                .map(|t| (0..4).map(|y| (0..4).map(|x| d[((b * 3 + t) * 4 + y) * 4 + x]).collect()).collect())
                .collect();
            let oracle = tiny_graph_oracle(&params, &clip, len);
            for (a, o) in probs.row(b).iter().zip(&oracle) {
                assert!((a - o).abs() < 1e-6, "seed {seed} sample {b}: {a} vs {o}");
            }
        }
    }
}

fn small(kind: NetworkKind) -> (NetworkSpec, Parameters<f64>) {
    let spec = build_network(kind, 14, &tiny_arch()).unwrap();
    let mut params = init_parameters(&spec, 3).unwrap();
    randomize(&mut params, &mut rng(3), 0.5);
    (spec, params)
}

fn batch_for(kind: NetworkKind, seed: u64, lengths: &[usize]) -> Batch<f64> {
    let mut r = rng(seed);
    if kind == NetworkKind::DepthCnn {
        Batch::frames(uniform(&mut r, &[lengths.len(), 8, 8, 1], 1.0))
    } else {
        random_batch(&mut r, kind, &tiny_arch(), lengths)
    }
}

fn select(batch: &Batch<f64>, rows: &[usize]) -> Batch<f64> {
    let pick = |t: &Tensor<f64>| {
        let per = t.row_len();
        let parts: Vec<&[f64]> = rows.iter().map(|&r| &t.data()[r * per..(r + 1) * per]).collect();
        Tensor::stack(&parts, &t.shape()[1..]).unwrap()
    };
    Batch {
        depth: batch.depth.as_ref().map(pick),
        skeleton: batch.skeleton.as_ref().map(pick),
        lengths: if batch.lengths.is_empty() { Vec::new() } else { rows.iter().map(|&r| batch.lengths[r]).collect() },
    }
}

#[test]
fn outputs_are_probabilities_and_deterministic() {
    for kind in NetworkKind::ALL {
        let (spec, params) = small(kind);
        let net = Network::new(spec).unwrap();
        let batch = batch_for(kind, 1, &[3, 1, 2, 3]);
        let before = params.clone();
        let a = net.forward(&params, &batch).unwrap();
        let b = net.forward(&params, &batch).unwrap();
        assert_eq!(a, b, "{kind}: repeated forward differs");
        assert_eq!(params, before, "{kind}: forward mutated parameters");
        for r in 0..a.rows() {
            let row = a.row(r);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        }
    }
}

#[test]
fn batch_rows_are_independent_and_permutation_equivariant() {
    for kind in NetworkKind::ALL {
        let (spec, params) = small(kind);
        let net = Network::new(spec).unwrap();
        let lengths: Vec<usize> = (0..16).map(|i| 1 + i % 3).collect();
        let batch = batch_for(kind, 2, &lengths);
        let all = net.forward(&params, &batch).unwrap();
        let one = net.forward(&params, &select(&batch, &[5])).unwrap();
        assert_eq!(one.row(0), all.row(5), "{kind}: batch of one differs from its row");
        let perm: Vec<usize> = (0..16).rev().collect();
        let permuted = net.forward(&params, &select(&batch, &perm)).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(permuted.row(i), all.row(p), "{kind}: permutation");
        }
    }
}

#[test]
fn zero_output_layer_gives_uniform_scores() {
    let (spec, mut params) = small(NetworkKind::SkeletonLstm);
    for n in ["out.weight", "out.bias"] {
        params.get_mut(n).unwrap().data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let out = forward(&spec, &params, &batch_for(NetworkKind::SkeletonLstm, 4, &[2, 3])).unwrap();
    assert!(out.data().iter().all(|&v| (v - 1.0 / 14.0).abs() < 1e-15));
}

#[test]
fn padded_steps_do_not_change_loss_or_gradients() {
    for kind in [NetworkKind::DepthCnnLstm, NetworkKind::SkeletonLstm, NetworkKind::FlConcat] {
        let (spec, params) = small(kind);
        let net = Network::new(spec).unwrap();
        let lengths = [1, 2, 3];
        let clean = batch_for(kind, 5, &lengths);
        let mut noisy = clean.clone();
        let mut r = rng(99);
        let t = tiny_arch().timestep;
        for stream in [noisy.depth.as_mut(), noisy.skeleton.as_mut()].into_iter().flatten() {
            let per = stream.row_len() / t;
            let garbage = uniform(&mut r, stream.shape(), 50.0);
            for (b, &len) in lengths.iter().enumerate() {
                let range = (b * t + len) * per..(b + 1) * t * per;
                stream.data_mut()[range.clone()].copy_from_slice(&garbage.data()[range]);
            }
        }
        assert_ne!(clean, noisy);
        let targets = [0, 3, 7];
        let a = net.loss_and_grad(&params, &clean, &targets).unwrap();
        let b = net.loss_and_grad(&params, &noisy, &targets).unwrap();
        assert_eq!(a.loss, b.loss, "{kind}");
        assert_eq!(a.grads, b.grads, "{kind}");
    }
}

#[test]
fn shape_errors_name_the_input_or_layer() {
    let (spec, params) = small(NetworkKind::SkeletonLstm);
    let net = Network::new(spec).unwrap();
    let bad = Batch {
        depth: None,
        skeleton: Some(Tensor::<f64>::zeros(&[2, 3, 40])),
        lengths: vec![3, 3],
    };
    match net.forward(&params, &bad) {
        Err(Error::Shape { layer, .. }) => assert_eq!(layer, "input"),
        other => panic!("expected a shape error, got {other:?}"),
    }
    let mut wrong = params.clone();
    wrong.insert("fc1.weight", Tensor::zeros(&[2, 2]));
    match net.forward(&wrong, &batch_for(NetworkKind::SkeletonLstm, 1, &[2])) {
        Err(Error::Shape { layer, .. }) => assert_eq!(layer, "fc1"),
        other => panic!("expected a shape error, got {other:?}"),
    }
}

#[test]
fn checkpoint_round_trip_and_fingerprint_guard() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, params) = small(NetworkKind::FlConcat);
    let params = params.cast::<f32>();
    let ck = Checkpoint {
        spec: spec.clone(),
        params: params.clone(),
        optimizer_state: params.zeros_like(),
        meta: TrainingMeta {
            epoch: 4,
            seed: 9,
            optimizer: serde_json::json!({"kind": "adadelta"}),
        },
    };
    let path = dir.path().join("fl.ckpt");
    ck.save(&path).unwrap();
    let back = Checkpoint::<f32>::load(&path, &spec).unwrap();
    assert_eq!(back.params, params);
    assert_eq!(back.meta, ck.meta);
    let other = build_network(NetworkKind::FlConcat, 28, &tiny_arch()).unwrap();
    assert!(Checkpoint::<f32>::load(&path, &other).is_err());
}

#[test]
fn transfer_from_28_class_cnn_into_14_class_cnn_lstm() {
    let arch = tiny_arch();
    let cnn = build_depth_cnn(28, &arch).unwrap();
    let seq = build_depth_cnn_lstm(14, &arch).unwrap();
    let src: Parameters<f32> = init_parameters(&cnn, 1).unwrap();
    let dst: Parameters<f32> = init_parameters(&seq, 2).unwrap();
    let out = transfer_conv_weights(&src, &dst).unwrap();
    for n in out.names() {
        if n.starts_with("conv") {
            assert_eq!(out.get(n).unwrap(), src.get(n).unwrap());
        } else {
            assert_eq!(out.get(n).unwrap(), dst.get(n).unwrap());
        }
    }
}
