use vortex_core::experiment::{continue_pair, run_pair, PairRunConfig};
use vortex_core::io::{read_snapshot, snapshot_stem, write_snapshot, SnapshotMeta};
use vortex_core::{ModelParams, WhiteNoise};

#[test]
fn restart_from_checkpoint_is_bit_identical() {
    let cfg = PairRunConfig {
        params: ModelParams::reconnection(0.05, 5e-3).unwrap(),
        n_nodes: 96,
        noise: Some(WhiteNoise { amplitude: 1e-4, seed: 11, max_mode: 16 }),
        t_end: 0.01,
        snapshot_times: vec![0.004],
        ..PairRunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut saved = None;
    let full = run_pair(&cfg, |state, report| {
        let meta =
            SnapshotMeta::new(state, &cfg.params).with_integrator(&cfg.integrator, report.tau_next).with_run(&cfg);
        let stem = snapshot_stem(state.time);
        write_snapshot(dir.path(), &stem, state, &meta).unwrap();
        saved = Some(stem);
    })
    .unwrap();
    let (state, meta) = read_snapshot(dir.path(), &saved.unwrap()).unwrap();
    assert_eq!(state.time, 0.004);
    let stored: PairRunConfig = serde_json::from_value(meta.run.unwrap()).unwrap();
    assert_eq!(stored, cfg);
    let resumed = continue_pair(&stored, &state, meta.tau_next, |_, _| {}).unwrap();
    assert_eq!(resumed.final_state, full.final_state);
    assert!(full.summary.steps > resumed.summary.steps);
}
