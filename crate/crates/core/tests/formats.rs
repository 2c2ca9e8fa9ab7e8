//! On-disk formats: dataset directories, checkpoints, config snapshots.

use std::fs;

use quark::checkpoint;
use quark::config::{parse_pairs, RunConfig};
use quark::data::mindbigdata::{parse_source, CHANNELS};
use quark::data::{generate_synthetic, Dataset, SyntheticConfig};
use quark::model::{ModelConfig, ModelParams};

fn small_dataset() -> Dataset {
    generate_synthetic(&SyntheticConfig {
        classes: 3,
        per_class: 4,
        electrodes: 2,
        samples: 30,
        embedding: 5,
        image_size: 8,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

#[test]
fn dataset_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = small_dataset();
    data.save(tmp.path()).unwrap();
    let back = Dataset::load(tmp.path()).unwrap();
    assert_eq!(back.recordings, data.recordings);
    assert_eq!(back.viewed, data.viewed);
    assert_eq!(back.catalog.len(), data.catalog.len());
    for (a, b) in data.catalog.items().iter().zip(back.catalog.items()) {
        assert_eq!((a.id, a.label), (b.id, b.label));
        assert_eq!(a.embedding, b.embedding);
        let (ia, ib) = (a.image.as_ref().unwrap(), b.image.as_ref().unwrap());
        assert_eq!(ia.dim(), ib.dim());
        // PNG stores 8-bit pixels.
        assert!(ia.iter().zip(ib).all(|(x, y)| (x - y).abs() <= 0.5));
    }

    // Saving what was loaded reproduces the text files byte for byte.
    let again = tempfile::tempdir().unwrap();
    back.save(again.path()).unwrap();
    for f in ["recordings.txt", "embeddings.tsv", "viewed.tsv"] {
        assert_eq!(fs::read(tmp.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ckpt.txt");
    let cfg = ModelConfig {
        electrodes: 2,
        samples: 40,
        hidden: 8,
        embedding: 6,
        ..ModelConfig::long_tail()
    };
    let params = ModelParams::init(&cfg, 3).unwrap();
    checkpoint::save(&path, &cfg, &params).unwrap();
    let (c2, p2) = checkpoint::load(&path).unwrap();
    assert_eq!(c2, cfg);
    assert_eq!(p2, params);
}

#[test]
fn config_snapshot_reloads_to_same_config() {
    let mut cfg = RunConfig::resolve(&[], &[("preset".into(), "long-tail".into()), ("alpha".into(), "0.65".into())]).unwrap();
    cfg.synthetic = Some((4, 9));
    let text = cfg.to_text();
    let back = RunConfig::resolve(&parse_pairs(&text).unwrap(), &[]).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_config_key_is_rejected() {
    let err = RunConfig::resolve(&[("alhpa".into(), "0.5".into())], &[]).unwrap_err();
    assert!(err.is_user_error());
}

#[test]
fn eeg_source_groups_channels_into_recordings() {
    let mut text = String::new();
    for (event, code) in [("100", 3), ("101", 5)] {
        for ch in CHANNELS {
            let values: Vec<String> = (0..6).map(|t| format!("{}", 4000 + t)).collect();
            text.push_str(&format!("1\t{event}\tEP\t{ch}\t{code}\t6\t{}\n", values.join(",")));
        }
    }
    let parsed = parse_source(text.as_bytes(), 6).unwrap();
    assert_eq!(parsed.recordings.len(), 2);
    assert_eq!(parsed.recordings[0].signal.dim(), (CHANNELS.len(), 6));
    assert_eq!(parsed.recordings[1].label.0, 5);
}
