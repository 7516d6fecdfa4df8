mod common;

use common::{cli, workspace};

#[test]
fn cli_and_service_agree() {
    let dir = tempfile::tempdir().unwrap();
    let worst = common::cli_service_equivalence(dir.path()).unwrap();
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn train_evaluate_predict_report() {
    let dir = tempfile::tempdir().unwrap();
    let (data, cfg) = workspace(dir.path());
    let model = dir.path().join("enlr.cwm");
    let model = model.to_str().unwrap();
    let (code, out, err) = cli(&["--config", &cfg, "train", &data, "--model", "enlr", "--out", model]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("f1\t"));

    let (code, out, _) = cli(&["--json", "evaluate", "--model-file", model, "--test", &data]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["metrics"]["f1"].as_f64().unwrap() > 0.9);

    let text = dir.path().join("draft.txt");
    std::fs::write(&text, "The cells were measured previously. The data show strong signal.").unwrap();
    let (code, out, _) = cli(&["predict", "--model-file", model, "--in", text.to_str().unwrap(), "--section", "results"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with("\tresults\tThe cells were measured previously."));
    let p: f64 = lines[0].split('\t').next().unwrap().parse().unwrap();
    assert_eq!(lines[0].split('\t').nth(1).unwrap() == "1", p >= 0.5);

    let (code, out, _) = cli(&["report", "--model-file", model, "--test", &data, "--top-k", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    assert!(out.starts_with("rank,id,section_type,probability,label,text\n"));

    let (code, out, err) = cli(&["--config", &cfg, "--json", "report", "--kind", "features", "--test", &data, "--top-k", "5"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let feats = v["features"].as_array().unwrap();
    assert_eq!(feats.len(), 5);
    let total: f64 = v["categories"].as_array().unwrap().iter().map(|c| c["importance"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn predict_threshold_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (data, cfg) = workspace(dir.path());
    let model = dir.path().join("m.cwm");
    let model = model.to_str().unwrap();
    assert_eq!(cli(&["--config", &cfg, "train", &data, "--model", "enlr", "--out", model]).0, 0);
    let (_, out, _) = cli(&["--json", "--threshold", "0.99", "predict", "--model-file", model, "--text", "Cells grew previously. Cells grew."]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for s in v["sentences"].as_array().unwrap() {
        assert_eq!(s["worthy"].as_bool().unwrap(), s["probability"].as_f64().unwrap() >= 0.99);
    }
    assert_eq!(cli(&["predict", "--model-file", "/nonexistent.cwm", "--text", "A b c."]).0, 2);
    let bogus = dir.path().join("bogus.cwm");
    std::fs::write(&bogus, b"not a model").unwrap();
    let (code, _, err) = cli(&["predict", "--model-file", bogus.to_str().unwrap(), "--text", "A b c."]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid model file"), "{err}");
    assert_eq!(cli(&["train", &data, "--out", model]).0, 1);
    assert_eq!(cli(&["train", &data, "--model", "svm", "--out", model]).0, 1);
}

#[test]
fn training_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (data, cfg) = workspace(dir.path());
    for family in ["enlr", "rf", "neural"] {
        let files: Vec<Vec<u8>> = ["a", "b"]
            .iter()
            .map(|n| {
                let p = dir.path().join(format!("{family}-{n}.cwm"));
                let (code, _, err) = cli(&["--config", &cfg, "--seed", "9", "train", &data, "--model", family, "--out", p.to_str().unwrap()]);
                assert_eq!(code, 0, "{err}");
                std::fs::read(p).unwrap()
            })
            .collect();
        assert_eq!(files[0], files[1], "{family}");
    }
}

#[test]
fn sweep_and_cross_corpus_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (data, cfg) = workspace(dir.path());
    let skewed = dir.path().join("skewed");
    let mut split = citeworth::synthetic::keyword_split(300, 4);
    let mut seen = 0;
    for s in split.train.iter_mut().filter(|s| s.label) {
        s.label = seen % 4 == 0;
        seen += 1;
    }
    citeworth::corpus::write_split(&skewed, &split, &citeworth::corpus::split_stats(&split)).unwrap();
    let csv = dir.path().join("sweep.csv");
    let (code, _, err) = cli(&[
        "--config", &cfg, "downsample-sweep", skewed.to_str().unwrap(), "--model", "enlr", "--ratios", "1,2,50", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("ratio 50 exceeds"));
    let table = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (r, row) in [1usize, 2].iter().zip(&rows) {
        let citing: usize = row[1].parse().unwrap();
        assert_eq!(row[2].parse::<usize>().unwrap(), r * citing);
    }
    assert_eq!(rows[2][3], "true");

    let other = dir.path().join("other");
    let split = citeworth::synthetic::keyword_split(150, 11);
    citeworth::corpus::write_split(&other, &split, &citeworth::corpus::split_stats(&split)).unwrap();
    let spec_a = format!("pmoa={data}");
    let spec_b = format!("acl={}", other.display());
    let (code, out, err) = cli(&["--config", &cfg, "cross-corpus", "--corpus", &spec_a, "--corpus", &spec_b, "--model", "enlr"]);
    assert_eq!(code, 0, "{err}");
    let pairs: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    for p in ["pmoa->pmoa", "pmoa->acl", "acl->pmoa", "acl->acl", "combined->pmoa", "combined->acl"] {
        assert!(pairs.contains(&p), "{p} missing from {pairs:?}");
    }
    assert_eq!(cli(&["cross-corpus", "--corpus", &spec_a, "--model", "enlr"]).0, 1);
}
