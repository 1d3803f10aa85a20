mod common;

use std::fs;

use distscore::{DatasetRole, FeatureTable, ScoreReport};

use common::*;

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn noise_writes_four_corpora() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&["noise", "--kind", "all", "--out", s(tmp.path()), "--n", "10", "--seed", "1"]);
    let listed: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(listed.as_array().unwrap().len(), 4);
    for kind in ["uniform", "gaussian", "ones", "zeros"] {
        let dir = tmp.path().join(kind);
        let wavs = fs::read_dir(&dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"));
        assert_eq!(wavs.count(), 10, "{kind}");
        assert!(dir.join("manifest.jsonl").is_file());
    }
}

#[test]
fn single_kind() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["noise", "--kind", "ones", "--out", s(tmp.path()), "--n", "2", "--seed", "1"]);
    assert!(tmp.path().join("ones/manifest.jsonl").is_file());
    assert!(!tmp.path().join("zeros").exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let n0 = run(&["noise", "--kind", "all", "--out", s(tmp.path()), "--n", "0", "--seed", "1"]);
    assert_eq!(n0.status.code(), Some(2));
    let no_seed = run(&["noise", "--kind", "all", "--out", s(tmp.path()), "--n", "3"]);
    assert_eq!(no_seed.status.code(), Some(2));
    let bad_kind = run(&["noise", "--kind", "pink", "--out", s(tmp.path()), "--n", "3", "--seed", "1"]);
    assert_eq!(bad_kind.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_input_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.jsonl");
    let noise = noise_refs(&tmp.path().join("noise"), 2, 1);
    let out = run(&["score", "--real", s(&missing), "--synthetic", s(&missing), "--noise", s(&noise)]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["distance", s(&missing), s(&missing)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_feature_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let noise = noise_refs(&tmp.path().join("noise"), 2, 1);
    let real = speechlike_corpus(&tmp.path().join("real"), "real", DatasetRole::Real, 4, 1);
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        r#"{"factors": [{"name": "Generic", "features": [{"id": "hubert:mean", "source": "external_file", "mode": "vector"}]}]}"#,
    )
    .unwrap();
    let out = run(&[
        "score", "--config", s(&config), "--real", s(&real), "--synthetic", s(&real), "--noise", s(&noise),
        "--features", s(&tmp.path().join("features")),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn distance_of_identical_files_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("a.ttsf");
    FeatureTable::from_rows("emb", &[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]]).unwrap().write(&p).unwrap();
    let out: serde_json::Value = serde_json::from_str(&run_ok(&["distance", s(&p), s(&p)])).unwrap();
    assert_eq!(out["w2"].as_f64(), Some(0.0));
}

#[test]
fn score_limits_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let noise = noise_refs(&tmp.path().join("noise"), 4, 2);
    let real = speechlike_corpus(&tmp.path().join("real"), "real", DatasetRole::Real, 8, 3);
    let zeros = noise.join("zeros/manifest.jsonl");
    let csv = tmp.path().join("report.csv");
    let out = run_ok(&[
        "score", "--real", s(&real), "--synthetic", s(&real), s(&zeros), "--noise", s(&noise), "--out", s(&csv),
    ]);
    let reports: Vec<ScoreReport> = serde_json::from_str(&out).unwrap();
    assert_eq!(reports[0].overall, 100.0);
    assert_eq!(reports[1].overall, 0.0);
    assert!(tmp.path().join("report_real.csv").is_file());
    assert!(tmp.path().join("report_zeros.csv").is_file());
}

#[test]
fn extract_then_score_external() {
    let tmp = tempfile::tempdir().unwrap();
    let real = speechlike_corpus(&tmp.path().join("real"), "real", DatasetRole::Real, 6, 4);
    let features = tmp.path().join("features");
    let out: serde_json::Value = serde_json::from_str(&run_ok(&["extract", "--manifest", s(&real), "--out", s(&features)])).unwrap();
    assert_eq!(out.as_array().unwrap().len(), 2);
    let f0 = FeatureTable::read(features.join("real/f0.ttsf")).unwrap();
    assert!(f0.rows() > 100);
    let rate = FeatureTable::read(features.join("real/syllable_rate.ttsf")).unwrap();
    assert_eq!(rate.rows(), 6);
}

#[test]
fn correlate_self_gives_unit_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let ratings = tmp.path().join("ratings.csv");
    let mut csv = String::from("system,MOS,SMOS\n");
    for i in 0..20 {
        csv.push_str(&format!("sys{i},{},{}\n", (i * 7 % 20) as f64 / 4.0, (i * 3 % 20) as f64 / 5.0));
    }
    fs::write(&ratings, csv).unwrap();
    let grid_csv = tmp.path().join("grid.csv");
    let out = run_ok(&["correlate", "--ratings", s(&ratings), "--scores", s(&ratings), "--seed", "1", "--csv", s(&grid_csv)]);
    let grid: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(grid.len(), 4);
    for cell in grid.iter().filter(|c| c["score_metric"] == c["rating_metric"]) {
        assert_eq!(cell["rho"].as_f64(), Some(1.0));
        assert!(cell["p_value"].as_f64().unwrap() < 0.001);
    }
    assert_eq!(fs::read_to_string(grid_csv).unwrap().lines().count(), 5);
}

#[test]
fn correlate_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let reports: Vec<ScoreReport> = (0..5)
        .map(|i| ScoreReport {
            dataset_id: format!("sys{i}"),
            per_feature: Vec::new(),
            per_factor: vec![distscore::FactorScore { name: "Prosody".into(), score: 50.0 + i as f64 }],
            overall: 50.0 + i as f64,
        })
        .collect();
    let path = tmp.path().join("reports.json");
    fs::write(&path, serde_json::to_string(&reports).unwrap()).unwrap();
    let ratings = tmp.path().join("ratings.csv");
    fs::write(&ratings, "system,MOS\nsys0,1\nsys1,2\nsys2,3\nsys3,4\nsys4,5\n").unwrap();
    let grid: Vec<serde_json::Value> =
        serde_json::from_str(&run_ok(&["correlate", "--ratings", s(&ratings), "--reports", s(&path), "--seed", "2"])).unwrap();
    assert_eq!(grid.len(), 2);
    assert!(grid.iter().all(|c| c["rho"].as_f64() == Some(1.0)));
}

#[test]
fn pairs_writes_aligned_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("pool.jsonl");
    fs::write(tmp.path().join("a.wav"), b"").unwrap();
    let mut lines = String::new();
    for spk in 0..60 {
        for (u, dur) in [2.0, 5.0, 12.0].iter().enumerate() {
            lines.push_str(&format!(
                "{{\"id\":\"s{spk}_{u}\",\"audio_path\":\"a.wav\",\"speaker\":\"s{spk}\",\"duration_s\":{dur}}}\n"
            ));
        }
    }
    fs::write(&src, lines).unwrap();
    let out_dir = tmp.path().join("out");
    let out: serde_json::Value = serde_json::from_str(&run_ok(&[
        "pairs", "--manifest", s(&src), "--out", s(&out_dir), "--seed", "5", "--exclude-speaker", "s0",
    ]))
    .unwrap();
    assert_eq!(out["pairs"].as_u64(), Some(50));
    assert_eq!(out["duration_rejected"].as_u64(), Some(60));
    let r = distscore::DatasetManifest::read(out_dir.join("reference.jsonl")).unwrap();
    let y = distscore::DatasetManifest::read(out_dir.join("synthesis.jsonl")).unwrap();
    assert_eq!(r.role, DatasetRole::Real);
    for (a, b) in r.entries().iter().zip(y.entries()) {
        assert_eq!(a.speaker, b.speaker);
        assert_ne!(a.speaker, "s0");
        assert!(a.duration_s >= 3.0 && b.duration_s <= 30.0);
    }
    assert_eq!(fs::read_to_string(out_dir.join("audit.csv")).unwrap(), "hook,rejected\nduration,60\nexclude_speaker,2\n");

    let too_many = run(&["pairs", "--manifest", s(&src), "--out", s(&out_dir), "--seed", "5", "--count", "100"]);
    assert_eq!(too_many.status.code(), Some(2));
}

#[test]
fn selfcheck_small_sample_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let noise = noise_refs(&tmp.path().join("noise"), 3, 1);
    let real = speechlike_corpus(&tmp.path().join("real"), "real", DatasetRole::Real, 10, 9);
    let report: serde_json::Value =
        serde_json::from_str(&run_ok(&["selfcheck", "--manifest", s(&real), "--noise", s(&noise), "--seed", "1"])).unwrap();
    assert_eq!(report["n_utterances"].as_u64(), Some(10));
    assert!(report["warnings"][0].as_str().unwrap().contains("small sample"));
    assert_eq!(report["half_a"].as_array().unwrap().len(), 5);
}

#[test]
fn loocv_csv_output() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    let mut csv = String::from("system,domain,A,B,MOS\n");
    for (d, domain) in ["X", "Y", "Z"].iter().enumerate() {
        for i in 0..6 {
            let (a, b) = ((i * 5 % 7) as f64 + d as f64, (i * 3 % 5) as f64);
            csv.push_str(&format!("s{i},{domain},{a},{b},{}\n", 0.3 * a - 0.2 * b + 1.0));
        }
    }
    fs::write(&table, csv).unwrap();
    let out_csv = tmp.path().join("folds.csv");
    let folds: Vec<serde_json::Value> = serde_json::from_str(&run_ok(&[
        "loocv", "--table", s(&table), "--factors", "A,B", "--target", "MOS", "--csv", s(&out_csv),
    ]))
    .unwrap();
    assert_eq!(folds.len(), 3);
    let header = fs::read_to_string(out_csv).unwrap();
    assert!(header.starts_with("held_out,baseline_rho,learned_rho,intercept,A,B\n"));
}
