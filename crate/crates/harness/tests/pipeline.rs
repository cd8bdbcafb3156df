use proptest::prelude::*;
use retroplan_harness::experiments::{SeedRun, VariantRuns};
use retroplan_harness::metrics::{normalize_aucs, rmsve, CurveStats};
use retroplan_harness::output::{read_curves, write_curves};
use retroplan_harness::{
    analyze, run_experiment, write_experiment, ExperimentConfig, ExperimentKind, MetricKind, Scale,
    SettingRuns,
};
use std::collections::HashSet;
use std::process::Command;

fn synthetic(curves: &[Vec<f64>]) -> SettingRuns {
    SettingRuns {
        label: "synthetic".into(),
        metric: MetricKind::Rmsve,
        optimal_path: None,
        variants: vec![VariantRuns {
            name: "only".into(),
            runs: curves
                .iter()
                .enumerate()
                .map(|(i, c)| SeedRun {
                    seed: i as u64,
                    curve: c.clone(),
                    returns: Vec::new(),
                    first_optimal_episode: None,
                    final_greedy_path: None,
                    wall_time: 0.0,
                })
                .collect(),
        }],
    }
}

#[test]
fn three_seed_aggregate_matches_hand_computation() {
    let s = synthetic(&[vec![1.0, 4.0], vec![2.0, 6.0], vec![6.0, 8.0]])
        .summarize()
        .unwrap();
    // Index 0: mean 3, sample variance 7, stderr sqrt(7/3).
    // Index 1: mean 6, sample variance 4, stderr sqrt(4/3).
    assert_eq!(s.stats[0].mean, vec![3.0, 6.0]);
    assert!((s.stats[0].stderr[0] - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((s.rows[0].final_stderr - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(s.rows[0].auc, 9.0);
    assert_eq!(s.rows[0].final_mean, 6.0);
}

#[test]
fn rmsve_matches_naive_loop() {
    let v: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin()).collect();
    let w: Vec<f64> = (0..17).map(|i| (i as f64 * 1.3).cos()).collect();
    let mut total = 0.0;
    for i in 0..17 {
        total += (v[i] - w[i]) * (v[i] - w[i]);
    }
    assert!((rmsve(&v, &w).unwrap() - total.sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn normalized_auc_ordering_survives_affine_rescaling(
        aucs in prop::collection::vec(-100.0..100.0f64, 2..8),
        scale in 0.01..50.0f64,
        shift in -100.0..100.0f64,
    ) {
        let moved: Vec<f64> = aucs.iter().map(|a| scale * a + shift).collect();
        let (n1, n2) = (normalize_aucs(&aucs), normalize_aucs(&moved));
        for (a, b) in n1.iter().zip(&n2) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn curve_stats_bounds(curves in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 1..6)) {
        let s = CurveStats::from_curves(&curves).unwrap();
        for i in 0..4 {
            let lo = curves.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
            let hi = curves.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s.mean[i] >= lo - 1e-12 && s.mean[i] <= hi + 1e-12);
            prop_assert!(s.stderr[i] >= 0.0);
        }
    }
}

#[test]
fn curves_round_trip_and_rows_are_unique() {
    let mut c = ExperimentConfig::default_for(ExperimentKind::StochasticityAblation, Scale::Desk);
    c.seeds = vec![4, 9];
    c.horizon = 6;
    let result = run_experiment(&c, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_experiment(&result, dir.path()).unwrap();
    for setting in &result.settings {
        let path = dir.path().join(format!("{}_curves.csv", setting.label));
        let back = read_curves(&path).unwrap();
        assert_eq!(back.variants.len(), setting.variants.len());
        for (a, b) in back.variants.iter().zip(&setting.variants) {
            assert_eq!(a.name, b.name);
            for (x, y) in a.runs.iter().zip(&b.runs) {
                assert_eq!(
                    (x.seed, &x.curve, &x.returns),
                    (y.seed, &y.curve, &y.returns)
                );
            }
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let mut keys = HashSet::new();
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            assert!(keys.insert((f[0].to_string(), f[1].to_string(), f[2].to_string())));
        }
        assert_eq!(keys.len(), 2 * 6 * setting.variants.len());
    }
    let rebuilt = analyze(dir.path()).unwrap();
    let mut labels: Vec<_> = written.iter().map(|s| s.label.clone()).collect();
    labels.sort();
    assert_eq!(
        rebuilt.iter().map(|s| s.label.clone()).collect::<Vec<_>>(),
        labels
    );
    for s in &rebuilt {
        let original = written.iter().find(|w| w.label == s.label).unwrap();
        assert_eq!(s.rows, original.rows);
    }
}

#[test]
fn prediction_curves_have_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x_curves.csv");
    write_curves(&synthetic(&[vec![0.5, 0.25]]), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "seed,step,variant,rmsve\n0,1,only,0.5\n0,2,only,0.25\n"
    );
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_retroplan"))
}

#[test]
fn cli_runs_and_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = cli()
        .args(["control-maze", "--seeds", "2", "--parallel", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    for f in [
        "deterministic_curves.csv",
        "deterministic_summary.csv",
        "deterministic.svg",
        "metadata.json",
        "config.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }

    // The written configuration reproduces the run.
    let again = dir.path().join("again");
    let status = cli()
        .args(["control-maze", "--config"])
        .arg(out.join("config.json"))
        .arg("--out")
        .arg(&again)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(out.join("deterministic_curves.csv")).unwrap(),
        std::fs::read(again.join("deterministic_curves.csv")).unwrap()
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "ControlMaze", "surprise": true}"#).unwrap();
    let code = cli()
        .args(["control-maze", "--config"])
        .arg(&bad)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));

    let code = cli()
        .args(["predict-chain", "--config"])
        .arg(out.join("config.json"))
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));

    let code = cli()
        .args(["control-maze", "--seeds", "none"])
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(2));

    let status = cli().args(["analyze", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
}

#[test]
fn shipped_configs_match_builtin_defaults() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = ExperimentConfig::load(&path).unwrap();
        config.validate().unwrap();
        let scale = if path.to_string_lossy().ends_with("_full.json") {
            Scale::Full
        } else {
            Scale::Desk
        };
        assert_eq!(
            config.to_json(),
            ExperimentConfig::default_for(config.kind, scale).to_json(),
            "{}",
            path.display()
        );
        seen += 1;
    }
    assert_eq!(seen, 10);
}
