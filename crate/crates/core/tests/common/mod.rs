#![allow(dead_code)]

use std::path::PathBuf;

use citeworth::corpus::{
    build_dataset, label_articles, read_article_dir, tree_stats, CorpusConfig, SegmenterConfig, DEFAULT_FRACTIONS,
};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/jats")
}

pub const LONG_275: &str = "The responsess responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses responses.";

pub fn words(n: usize) -> String {
    format!("Cells {} slowly.", vec!["grew"; n - 2].join(" "))
}

/// Hand-labeled kept sentences per article: (text, citing, section type).
pub fn expected() -> Vec<(&'static str, Vec<(String, bool, &'static str)>)> {
    let s = |t: &str, l: bool, sec: &'static str| (t.to_owned(), l, sec);
    vec![
        (
            "PMC1001",
            vec![
                s("Protein folding has been studied for decades .", true, "intro"),
                s("The folding pathway of small domains remains poorly understood.", false, "intro"),
                s("Several groups reported fast folding kinetics .", true, "intro"),
                s("Here we describe a new assay for E. coli proteins.", false, "intro"),
                s("Cells grow in vivo.", false, "intro"),
                s("Samples were prepared as shown in Figure 1 and stored at four degrees.", false, "methods"),
                s("Mitochondria produce energy.", false, "methods"),
            ],
        ),
        (
            "9990002",
            vec![
                s("Loose paragraphs directly under the body form their own section.", false, "body"),
                s(LONG_275, false, "Results"),
                s("Expression was higher in older patients .", true, "Results"),
                s("Older patients also showed a stronger response to treatment.", false, "Results"),
                s("An untitled section still contributes its sentences to the corpus.", false, "untitled"),
            ],
        ),
        (
            "PMC1003",
            vec![
                (words(42), false, "discussion"),
                s("Our findings agree with earlier reports .", true, "discussion"),
                s("This pattern was described by Jones in a larger cohort.", true, "discussion"),
                s("Reagents were obtained from commercial suppliers.", false, "discussion"),
            ],
        ),
    ]
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Compiles the fixture and compares it with the hand labels.
pub fn check_golden() -> Result<(), String> {
    let (mut trees, failures) = read_article_dir(&fixture_dir(), &SegmenterConfig::default()).map_err(|e| e.to_string())?;
    ensure(failures.is_empty(), || format!("parse failures: {failures:?}"))?;
    trees.sort_by(|a, b| a.article_id.cmp(&b.article_id));
    let order = ["9990002", "PMC1001", "PMC1003"];
    ensure(trees.iter().map(|t| t.article_id.as_str()).eq(order), || "article ids".into())?;
    let raw: Vec<usize> = trees.iter().map(|t| t.sentences().count()).collect();
    ensure(raw == [6, 9, 6], || format!("raw sentence counts {raw:?}"))?;

    let groups = label_articles(&trees, &CorpusConfig::default());
    for (tree, group) in trees.iter().zip(&groups) {
        let (_, want) = expected().into_iter().find(|(id, _)| *id == tree.article_id).unwrap();
        ensure(group.len() == want.len(), || {
            format!("{}: kept {} sentences, expected {}: {:#?}", tree.article_id, group.len(), want.len(), group)
        })?;
        for (i, (got, (text, label, section))) in group.iter().zip(&want).enumerate() {
            let id = format!("{}#{i}", tree.article_id);
            ensure(got.id == id, || format!("id {} != {id}", got.id))?;
            ensure(&got.text == text, || format!("{id}: text {:?} != {text:?}", got.text))?;
            ensure(got.label == *label, || format!("{id}: label {}", got.label))?;
            ensure(got.section_type == *section, || format!("{id}: section {}", got.section_type))?;
            ensure(got.char_len == text.chars().count() && got.word_len == text.split_whitespace().count(), || {
                format!("{id}: lengths")
            })?;
            let prev = (i > 0).then(|| format!("{}#{}", tree.article_id, i - 1));
            let next = (i + 1 < want.len()).then(|| format!("{}#{}", tree.article_id, i + 1));
            ensure(got.prev_id == prev && got.next_id == next, || format!("{id}: links"))?;
            ensure(got.prev_has_citation == (i > 0 && want[i - 1].1), || format!("{id}: prev flag"))?;
            ensure(got.next_has_citation == (i + 1 < want.len() && want[i + 1].1), || format!("{id}: next flag"))?;
        }
    }
    let lens: Vec<usize> = groups.iter().flatten().map(|s| s.char_len).collect();
    ensure(lens.contains(&19) && lens.contains(&275), || "char boundaries kept".into())?;
    let wl: Vec<usize> = groups.iter().flatten().map(|s| s.word_len).collect();
    ensure(wl.contains(&3) && wl.contains(&42), || "word boundaries kept".into())?;

    let split = build_dataset(&trees, DEFAULT_FRACTIONS, 7, &CorpusConfig::default()).map_err(|e| e.to_string())?;
    for part in [&split.train, &split.validation, &split.test] {
        let arts: std::collections::BTreeSet<&str> = part.iter().map(|s| s.article_id.as_str()).collect();
        ensure(arts.len() == 1, || format!("each part holds one article, got {arts:?}"))?;
    }
    let stats = tree_stats(&trees, split.all());
    let got = (stats.articles, stats.sections, stats.paragraphs, stats.sentences, stats.sentences_with_citations);
    ensure(got == (3, Some(6), Some(12), 16, 5), || format!("stats {got:?}"))?;
    Ok(())
}

use std::path::Path;

use axum::body::Body;
use axum::http::Request;
use citeworth::artifact::ModelArtifact;
use citeworth::cli::run;
use citeworth::corpus::{split_stats, write_split};
use citeworth::service::{router, PredictResponse, ServiceConfig};
use citeworth::synthetic::keyword_split;
use http_body_util::BodyExt;
use tower::ServiceExt;

/// Small settings so that every family trains in seconds.
pub const SMALL_CONFIG: &str = "\
min_df = 1
trees = 10
alphas = 0.5
lambdas = 0.001
cv_folds = 3
hidden = 8
word_dim = 8
char_dim = 4
char_hidden = 3
mlp_hidden = 8
epochs = 3
learning_rate = 0.01
";

/// Runs the command line and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("citeworth").chain(args.iter().copied()), &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

/// Writes a synthetic dataset directory and the small config file.
pub fn workspace(dir: &Path) -> (String, String) {
    let data = dir.join("data");
    let split = keyword_split(200, 5);
    write_split(&data, &split, &split_stats(&split)).unwrap();
    let cfg = dir.join("small.conf");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    (data.to_str().unwrap().to_owned(), cfg.to_str().unwrap().to_owned())
}

pub fn post(model: Option<ModelArtifact>, uri: &str, body: Vec<u8>) -> (u16, Vec<u8>) {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let app = router(model, &ServiceConfig::default()).unwrap();
        let req = Request::post(uri).header("content-type", "application/json").body(Body::from(body)).unwrap();
        let resp = app.oneshot(req).await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    })
}

pub const EQUIVALENCE_TEXT: &str = "The folding of these proteins was described previously [4]. \
We measured the kinetics at four temperatures. Similar rates were reported previously (Lee et al., 2012). \
The data show a clear trend. Cells grow faster at higher temperature.";

/// Trains one model per family through the command line, scores the same
/// request through `predict` and the service, and returns the largest
/// absolute probability difference.
pub fn cli_service_equivalence(dir: &Path) -> Result<f64, String> {
    let (data, cfg) = workspace(dir);
    let request = dir.join("request.json");
    let mut worst = 0.0f64;
    for family in ["enlr", "rf", "neural"] {
        let model = dir.join(format!("{family}.cwm"));
        let model = model.to_str().unwrap();
        let (code, _, err) = cli(&["--config", &cfg, "train", &data, "--model", family, "--out", model]);
        if code != 0 {
            return Err(format!("train {family}: {err}"));
        }
        for contextual in [true, false] {
            let body = serde_json::json!({ "raw_text": EQUIVALENCE_TEXT, "contextual": contextual, "threshold": 0.4 });
            std::fs::write(&request, serde_json::to_vec(&body).unwrap()).unwrap();
            let (code, out, err) = cli(&["--json", "predict", "--model-file", model, "--in", request.to_str().unwrap()]);
            if code != 0 {
                return Err(format!("predict {family}: {err}"));
            }
            let from_cli: PredictResponse = serde_json::from_str(&out).map_err(|e| e.to_string())?;
            let artifact = ModelArtifact::load(Path::new(model)).map_err(|e| e.to_string())?;
            let (status, bytes) = post(Some(artifact), "/api/predict", serde_json::to_vec(&body).unwrap());
            if status != 200 {
                return Err(format!("service {family}: status {status}"));
            }
            let from_service: PredictResponse = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            if from_cli.sentences.len() != 5 || from_service.sentences.len() != 5 {
                return Err(format!("{family}: expected 5 sentences"));
            }
            for (a, b) in from_cli.sentences.iter().zip(&from_service.sentences) {
                if a.text != b.text || a.worthy != b.worthy {
                    return Err(format!("{family}: sentence mismatch {a:?} vs {b:?}"));
                }
                worst = worst.max((a.probability - b.probability).abs());
            }
        }
    }
    Ok(worst)
}

use citeworth::eval::prf1_at;
use citeworth::features::{bundles_of, ContextBundle};
use citeworth::neural::{predict_examples, train, AttentionVariant, NeuralConfig, NeuralModel, TrainConfig};

fn small_net(contextual: bool) -> NeuralConfig {
    NeuralConfig {
        char_dim: 4,
        char_hidden: 3,
        word_dim: 16,
        hidden: 8,
        mlp_hidden: 8,
        dropout: 0.1,
        attention: AttentionVariant::Cos,
        contextual,
        seed: 3,
        ..Default::default()
    }
}

fn fit_and_score(contextual: bool, train_b: &[ContextBundle], eval_b: &[ContextBundle], cfg: &TrainConfig) -> (f64, usize) {
    let mut model = NeuralModel::build(small_net(contextual), train_b, None).unwrap();
    let (tr, _) = model.encode_all(train_b);
    let (ev, _) = model.encode_all(eval_b);
    let history = train(&mut model, cfg, &tr, &ev).unwrap();
    let labels: Vec<bool> = ev.iter().map(|e| e.label).collect();
    let f1 = prf1_at(&predict_examples(&model, &ev), &labels, 0.5).unwrap().f1;
    (f1, history.epochs.len())
}

pub const OVERFIT_EPOCHS: usize = 30;

/// Training F1 and epochs used on the 200-sentence keyword set at hidden size 8.
pub fn overfit_run() -> (f64, usize) {
    let bundles = bundles_of(&citeworth::synthetic::keyword_corpus(200, 1));
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 16,
        max_epochs: OVERFIT_EPOCHS,
        patience: OVERFIT_EPOCHS,
        seed: 3,
        ..Default::default()
    };
    fit_and_score(true, &bundles, &bundles, &cfg)
}

/// Held-out F1 of the contextual and the non-contextual model on bundles
/// whose only signal is the previous sentence's citation flag.
pub fn contextual_gain_run() -> (f64, f64) {
    let train_b = citeworth::synthetic::flag_signal_bundles(300, 0.3, 1);
    let test_b = citeworth::synthetic::flag_signal_bundles(200, 0.3, 2);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 16,
        max_epochs: 15,
        patience: 15,
        seed: 3,
        ..Default::default()
    };
    let (ctx, _) = fit_and_score(true, &train_b, &test_b, &cfg);
    let (iso, _) = fit_and_score(false, &train_b, &test_b, &cfg);
    (ctx, iso)
}
