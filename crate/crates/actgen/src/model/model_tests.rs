use super::*;
use crate::data::{default_world, generate_dataset, FeatureBundle, GenConfig, SOS};
use crate::numerics::{Graph, Matrix, RngState};

fn setup() -> (ModelConfig, ModelParams, crate::data::Dataset) {
    let world = default_world();
    let ds = generate_dataset(
        &world,
        &GenConfig {
            n_videos: 2,
            segments_per_video: 3,
            subtitles_frac: 0.5,
            seed: 21,
            ..GenConfig::default()
        },
    )
    .unwrap();
    let cfg = ModelConfig::desk(&ds.header.vocab);
    let params = ModelParams::init(&cfg, 7).unwrap();
    (cfg, params, ds)
}

fn random_bundle(seed: u64, t: usize, cfg: &ModelConfig, with_text: bool) -> FeatureBundle {
    let mut rng = RngState::new(seed);
    let mut mk = |rows: usize, cols: usize| {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data.iter_mut() {
            *v = rng.normal();
        }
        m
    };
    FeatureBundle {
        x_a: mk(t, cfg.d_audio),
        x_v: mk(t, cfg.d_visual),
        x_t: with_text.then(|| mk(3, cfg.d_text)),
    }
}

#[test]
fn encode_handles_single_pad_frame() {
    let (cfg, params, _) = setup();
    let bundle = FeatureBundle {
        x_a: Matrix::zeros(1, cfg.d_audio),
        x_v: Matrix::zeros(1, cfg.d_visual),
        x_t: None,
    };
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encode(&mut g, &p, &cfg, &bundle).unwrap();
    assert_eq!(g.shape(enc.h_a), &[1, cfg.d_model_av]);
    assert!(g.values(enc.h_a).iter().all(|v| v.is_finite()));
}

#[test]
fn encode_is_deterministic() {
    let (cfg, params, ds) = setup();
    let run = || {
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let enc = encode(&mut g, &p, &cfg, &ds.features[0]).unwrap();
        (
            g.values(enc.h_a).to_vec(),
            g.values(enc.h_v).to_vec(),
            g.values(enc.h_t).to_vec(),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
}

#[test]
fn encode_rejects_wrong_feature_dims() {
    let (cfg, params, _) = setup();
    let bundle = FeatureBundle {
        x_a: Matrix::zeros(2, cfg.d_audio + 1),
        x_v: Matrix::zeros(2, cfg.d_visual),
        x_t: None,
    };
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    assert!(matches!(
        encode(&mut g, &p, &cfg, &bundle),
        Err(ModelError::Config(_))
    ));
}

/// Every encoder parameter must sit on the gradient path: cross-entropy
/// through both heads on a subtitle-present and a subtitle-absent
/// record reaches the whole of E and T.
#[test]
fn gradients_reach_every_encoder_parameter() {
    let (cfg, params, _) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let mut losses = Vec::new();
    for (seed, with_text) in [(1u64, true), (2, false)] {
        let bundle = random_bundle(seed, 4, &cfg, with_text);
        let enc = encode(&mut g, &p, &cfg, &bundle).unwrap();
        let cap = decoder_logits(&mut g, &p, &cfg, DecoderHead::Caption, &enc, &[SOS, 5, 6]).unwrap();
        let act = decoder_logits(&mut g, &p, &cfg, DecoderHead::Action, &enc, &[SOS, 4]).unwrap();
        let (l1, _) = g.cross_entropy(cap, &[5, 6, 2], None).unwrap();
        let (l2, _) = g.cross_entropy(act, &[4, 2], None).unwrap();
        losses.push(g.add(l1, l2).unwrap());
    }
    let total = g.add(losses[0], losses[1]).unwrap();
    let grads = g.backward(total);
    for (name, t) in p.leaves() {
        if name.starts_with("enc.") || name.starts_with("text.") {
            let gv = grads.get_or_zeros(&g, *t);
            let max = gv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max > 0.0, "parameter `{name}` received no gradient");
        }
    }
}

#[test]
fn decoder_is_causal_under_prefix_extension() {
    let (cfg, params, ds) = setup();
    let logits_for = |prefix: &[usize]| {
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let enc = encode(&mut g, &p, &cfg, &ds.features[1]).unwrap();
        let l = decoder_logits(&mut g, &p, &cfg, DecoderHead::Action, &enc, prefix).unwrap();
        g.values(l).to_vec()
    };
    let short = logits_for(&[SOS, 4, 5]);
    let long = logits_for(&[SOS, 4, 5, 6, 7]);
    assert_eq!(
        short,
        long[..short.len()],
        "extending the prefix changed logits at earlier positions"
    );
}

#[test]
fn heads_project_to_their_own_vocabularies() {
    let (cfg, params, ds) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encode(&mut g, &p, &cfg, &ds.features[0]).unwrap();
    let cap = decode_step(&mut g, &p, &cfg, DecoderHead::Caption, &enc, &[SOS]).unwrap();
    let act = decode_step(&mut g, &p, &cfg, DecoderHead::Action, &enc, &[SOS]).unwrap();
    assert_eq!(g.shape(cap), &[1, cfg.word_vocab]);
    assert_eq!(g.shape(act), &[1, cfg.action_vocab]);
    assert_ne!(cfg.word_vocab, cfg.action_vocab);
}

#[test]
fn permuting_audio_frames_changes_logits() {
    let (cfg, params, _) = setup();
    let bundle = random_bundle(33, 5, &cfg, true);
    let mut permuted = bundle.clone();
    // swap audio frames 0 and 3
    for c in 0..cfg.d_audio {
        let tmp = permuted.x_a.row(0)[c];
        permuted.x_a.row_mut(0)[c] = permuted.x_a.row(3)[c];
        permuted.x_a.row_mut(3)[c] = tmp;
    }
    let logits_for = |b: &FeatureBundle| {
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let enc = encode(&mut g, &p, &cfg, b).unwrap();
        let l = decode_step(&mut g, &p, &cfg, DecoderHead::Action, &enc, &[SOS]).unwrap();
        g.values(l).to_vec()
    };
    let a = logits_for(&bundle);
    let b = logits_for(&permuted);
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    assert!(diff > 1e-9, "no positional sensitivity to audio frame order");
}

#[test]
fn prefix_must_start_with_sos() {
    let (cfg, params, ds) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encode(&mut g, &p, &cfg, &ds.features[0]).unwrap();
    assert!(decode_step(&mut g, &p, &cfg, DecoderHead::Action, &enc, &[4, 5]).is_err());
}

#[test]
fn over_long_prefix_is_a_sequence_length_error() {
    let (cfg, params, ds) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encode(&mut g, &p, &cfg, &ds.features[0]).unwrap();
    let mut prefix = vec![SOS];
    prefix.extend(std::iter::repeat(4).take(cfg.max_len));
    assert!(matches!(
        decoder_logits(&mut g, &p, &cfg, DecoderHead::Action, &enc, &prefix),
        Err(ModelError::SequenceTooLong { .. })
    ));
}

// ── classifier ──────────────────────────────────────────────────────

#[test]
fn classifier_output_is_a_probability() {
    let (cfg, params, _) = setup();
    for seed in 0..10 {
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let mut rng = RngState::new(seed);
        let y = g
            .leaf(&[4, cfg.d_model_dec], (0..4 * cfg.d_model_dec).map(|_| rng.normal()).collect())
            .unwrap();
        let c = g
            .leaf(&[6, cfg.d_model_dec], (0..6 * cfg.d_model_dec).map(|_| rng.normal()).collect())
            .unwrap();
        let prob = classify_semantic(&mut g, &p, y, c).unwrap();
        let v = g.scalar(prob);
        assert!(v > 0.0 && v < 1.0);
        // argument order matters structurally; both directions must run
        let rev = classify_semantic(&mut g, &p, c, y).unwrap();
        assert!(g.scalar(rev) > 0.0 && g.scalar(rev) < 1.0);
    }
}

#[test]
fn classifier_rejects_empty_sequences() {
    let (cfg, params, _) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let y = g.leaf(&[0, cfg.d_model_dec], vec![]).unwrap();
    let c = g.leaf(&[2, cfg.d_model_dec], vec![0.0; 2 * cfg.d_model_dec]).unwrap();
    assert!(matches!(
        classify_semantic(&mut g, &p, y, c),
        Err(ModelError::EmptyInput(_))
    ));
}

/// Expected embedding of an exactly one-hot weight row equals the hard
/// token's embedding row bit for bit.
#[test]
fn one_hot_soft_embedding_equals_hard_row() {
    let (cfg, params, _) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let table = p.get("dec_act.embed");
    let v = cfg.action_vocab;
    let mut onehot = vec![0.0; v];
    onehot[6] = 1.0;
    let w = g.leaf(&[1, v], onehot).unwrap();
    let soft = g.matmul(w, table).unwrap();
    let hard = g.embed(table, &[6]).unwrap();
    let s = g.values(soft).to_vec();
    let h = g.values(hard).to_vec();
    for (a, b) in s.iter().zip(&h) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

// ── proposal generator ──────────────────────────────────────────────

fn encodings_leaf(g: &mut Graph, t: usize, d: usize, vals: Vec<f64>) -> Encodings {
    let h = g.leaf(&[t, d], vals).unwrap();
    Encodings {
        h_a: h,
        h_v: h,
        h_t: h,
    }
}

#[test]
fn threshold_one_yields_no_proposals() {
    let (cfg, params, ds) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encode(&mut g, &p, &cfg, &ds.features[0]).unwrap();
    let props = propose_segments(&mut g, &p, &cfg, &enc, 1.0).unwrap();
    assert!(props.is_empty());
}

#[test]
fn untrained_proposals_are_well_formed() {
    let (cfg, params, _) = setup();
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let mut rng = RngState::new(17);
    let t = 20;
    let vals: Vec<f64> = (0..t * cfg.d_model_av).map(|_| rng.normal()).collect();
    let enc = encodings_leaf(&mut g, t, cfg.d_model_av, vals);
    let props = propose_segments(&mut g, &p, &cfg, &enc, 0.0).unwrap();
    assert!(!props.is_empty());
    for pr in &props {
        assert!(pr.onset < pr.offset, "proposal {pr:?}");
        assert!(pr.onset >= 0.0 && pr.offset <= t as f64);
        assert!((0.0..1.0).contains(&pr.confidence));
    }
    // sorted best-first
    for w in props.windows(2) {
        assert!(w[0].confidence >= w[1].confidence);
    }
}

/// A hand-set edge-detector kernel must fire exactly at an energy step
/// in the encodings, and the top proposal must cover that step.
#[test]
fn hand_set_kernel_detects_energy_step() {
    let (cfg, mut params, _) = setup();
    let d = cfg.d_model_av;
    // zero all generator params, then make scale 0 (k=3) detect a rise
    // in the first visual channel: kernel taps [-1, 0, +1]
    for name in ["gen.s0.conv", "gen.s0.bias", "gen.s0.head.w", "gen.s0.head.b"] {
        let p = params.get_mut(name).unwrap();
        p.values.iter_mut().for_each(|v| *v = 0.0);
    }
    for (s, _) in cfg.proposal_kernels.iter().enumerate().skip(1) {
        let p = params.get_mut(&format!("gen.s{s}.head.w")).unwrap();
        p.values.iter_mut().for_each(|v| *v = 0.0);
        let p = params.get_mut(&format!("gen.s{s}.head.b")).unwrap();
        // push other scales' confidence far down
        p.values[0] = -10.0;
    }
    {
        let conv = params.get_mut("gen.s0.conv").unwrap();
        // shape [3, 2d, hidden]: tap j, channel 0 (visual), hidden unit 0
        let hidden = cfg.proposal_hidden;
        conv.values[hidden * 0] = -1.0;
        conv.values[2 * (2 * d) * hidden] = 1.0;
        let head = params.get_mut("gen.s0.head.w").unwrap();
        head.values[0] = 4.0; // hidden unit 0 -> confidence
        let hb = params.get_mut("gen.s0.head.b").unwrap();
        hb.values[0] = -6.0; // quiet anchors stay below threshold
    }
    let t = 16;
    let step_at = 8;
    let mut vals = vec![0.0; t * d];
    for row in step_at..t {
        vals[row * d] = 2.0; // energy step in channel 0
    }
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let enc = encodings_leaf(&mut g, t, d, vals);
    let props = propose_segments(&mut g, &p, &cfg, &enc, 0.5).unwrap();
    assert!(!props.is_empty(), "edge detector did not fire");
    let top = &props[0];
    assert!(
        top.onset <= step_at as f64 && step_at as f64 <= top.offset,
        "top proposal {top:?} does not cover the step at {step_at}"
    );
}
