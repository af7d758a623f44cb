use std::fs;

use xrsched::config::{ConfigError, ExperimentConfig, Preset, SchedulerKind};
use xrsched::scenario::Phasing;

#[test]
fn load_reads_a_file_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "preset = desk\nsim.devices = 3\nscheduler = pfi\neval.devices = 1, 3\ntrain.device_set = 1,3\n")
        .unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.scenario.devices, 3);
    assert_eq!(cfg.scheduler, SchedulerKind::PfI);
    assert_eq!(cfg.eval.devices, vec![1, 3]);
    assert_eq!(cfg.train.device_set, vec![1, 3]);
    assert_eq!(cfg.scenario.rb_per_slot, 12);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = ExperimentConfig::load(&dir.path().join("absent.cfg")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }), "{err:?}");
}

#[test]
fn canonical_text_reloads_to_the_same_config() {
    for preset in [Preset::Full, Preset::Desk] {
        let mut cfg = ExperimentConfig::preset(preset);
        cfg.scenario.phasing = Phasing::Equal;
        cfg.eval.seed = 12345;
        cfg.validate().unwrap();
        let text = cfg.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), text);
    }
}

#[test]
fn fdb_derives_from_slot_length() {
    let cfg = ExperimentConfig::parse("sim.slot_ms = 0.125\n").unwrap();
    assert_eq!(cfg.scenario.fdb_slots, 80);
    assert!((cfg.scenario.channel.slot_s - 0.125e-3).abs() < 1e-15);
}

#[test]
fn invalid_values_are_rejected() {
    for bad in [
        "sim.devices = 0",
        "sim.rb_per_slot = many",
        "scheduler = fifo",
        "train.gamma = 1.5",
        "channel.fading = rician",
        "sim.phasing = staggered",
        "no_equals_sign",
    ] {
        assert!(ExperimentConfig::parse(bad).is_err(), "{bad} was accepted");
    }
}
