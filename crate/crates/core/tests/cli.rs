mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixture_kb::{oracle_mining, FixtureKb};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tabsema::synthetic::{generate, SyntheticConfig};

fn tabsema(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabsema"))
        .args(args)
        .current_dir(dir)
        .env_remove("TABSEMA_KB_ENDPOINT")
        .env_remove("TABSEMA_CACHE_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_corpus(dir: &Path) {
    let cfg = SyntheticConfig {
        columns: 40,
        entities_per_class: 40,
        word_dim: 8,
        ..SyntheticConfig::default()
    };
    generate(&cfg).unwrap().write_to(dir).unwrap();
    fs::write(dir.join("run.toml"), "epochs = 2\nhidden = 6\nattention = 4\nbase_epochs = 5\n").unwrap();
    assert_eq!(code(&tabsema(dir, &["snapshot-build", "kb.nt", "kb.snap"])), 0);
}

const TRAIN: &[&str] = &[
    "train",
    "--tables",
    "tables",
    "--gold",
    "gold.csv",
    "--catalog",
    "catalog.csv",
    "--embeddings",
    "embeddings.txt",
    "--config",
    "run.toml",
    "--kb",
    "snapshot:kb.snap",
    "--out",
];

fn predict(dir: &Path, model: &str, scorer: &str, out: &str) -> Output {
    tabsema(
        dir,
        &[
            "predict", "--tables", "tables", "--model", model, "--embeddings", "embeddings.txt", "--kb",
            "snapshot:kb.snap", "--targets", "gold.csv", "--scorer", scorer, "--out", out,
        ],
    )
}

#[test]
fn snapshot_build_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("ok.nt"), "<http://a> <http://b> \"c\"@en .\n").unwrap();
    fs::write(d.join("bad.nt"), "<http://a> <http://b> <http://c> .\n\n<http://a> <http://b> \"c .\n").unwrap();
    fs::write(d.join("empty.nt"), "").unwrap();
    assert_eq!(code(&tabsema(d, &["snapshot-build", "ok.nt", "ok.snap"])), 0);
    let bad = tabsema(d, &["snapshot-build", "bad.nt", "bad.snap"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.nt:3"));
    assert!(!d.join("bad.snap").exists());
    assert_eq!(code(&tabsema(d, &["snapshot-build", "empty.nt", "empty.snap"])), 0);
    assert!(stdout(&tabsema(d, &["snapshot-build", "empty.nt", "empty.snap"])).starts_with("0 entities"));
}

#[test]
fn mine_properties_prints_oracle_size_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fx = FixtureKb::generate(&mut ChaCha8Rng::seed_from_u64(8));
    fs::write(d.join("kb.nt"), fx.ntriples()).unwrap();
    let mut csv = String::from("class_id,kb_iri\n");
    for (i, c) in fx.classes.iter().enumerate() {
        csv += &format!("c{i},{c}\n");
    }
    fs::write(d.join("catalog.csv"), csv).unwrap();
    assert_eq!(code(&tabsema(d, &["snapshot-build", "kb.nt", "kb.snap"])), 0);
    for sigma in ["0", "0.5", "1.0"] {
        let args = [
            "mine-properties", "--catalog", "catalog.csv", "--kb", "snapshot:kb.snap", "--sigma", sigma, "--out",
        ];
        let first = tabsema(d, &[&args[..], &["p1.json"]].concat());
        assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
        let merged: std::collections::BTreeSet<String> =
            oracle_mining(&fx, sigma.parse().unwrap()).into_values().flatten().collect();
        assert_eq!(stdout(&first).trim(), merged.len().to_string());
        assert_eq!(code(&tabsema(d, &[&args[..], &["p2.json"]].concat())), 0);
        assert_eq!(fs::read(d.join("p1.json")).unwrap(), fs::read(d.join("p2.json")).unwrap());
    }
    let no_kb = tabsema(d, &["mine-properties", "--catalog", "catalog.csv"]);
    assert_eq!(code(&no_kb), 3);
}

#[test]
fn train_predict_evaluate_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let train = tabsema(d, &[TRAIN, &["model"]].concat());
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));
    for f in ["hnn.ckpt", "properties.json", "ensemble1.json", "ensemble2.json", "p2vec.json", "run.toml", "train.json"] {
        assert!(d.join("model").join(f).exists(), "{f}");
    }
    for scorer in ["hnn", "ensemble1", "ensemble2", "p2vec", "lookup-vote"] {
        let out = format!("{scorer}.csv");
        let p = predict(d, "model", scorer, &out);
        assert_eq!(code(&p), 0, "{scorer}: {}", String::from_utf8_lossy(&p.stderr));
        let ev = tabsema(
            d,
            &["evaluate", "--predictions", &out, "--gold", "gold.csv", "--catalog", "catalog.csv", "--model", "model"],
        );
        assert_eq!(code(&ev), 0, "{scorer}: {}", String::from_utf8_lossy(&ev.stderr));
        assert!(stdout(&ev).starts_with("accuracy"));
    }
    // fingerprint mismatch unless forced
    let plain = ["evaluate", "--predictions", "hnn.csv", "--gold", "gold.csv", "--catalog", "catalog.csv"];
    assert_eq!(code(&tabsema(d, &plain)), 3);
    assert_eq!(code(&tabsema(d, &[&plain[..], &["--force"]].concat())), 0);
    // changing a hyperparameter at prediction time contradicts the model
    let changed = tabsema(
        d,
        &["predict", "--tables", "tables", "--model", "model", "--embeddings", "embeddings.txt", "--m", "4", "--out", "x.csv"],
    );
    assert_eq!(code(&changed), 3);
}

#[test]
fn same_seed_gives_identical_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    for model in ["a", "b"] {
        assert_eq!(code(&tabsema(d, &[TRAIN, &[model, "--seed", "3"]].concat())), 0);
        assert_eq!(code(&predict(d, model, "ensemble2", &format!("{model}.csv"))), 0);
    }
    assert_eq!(fs::read(d.join("a/hnn.ckpt")).unwrap(), fs::read(d.join("b/hnn.ckpt")).unwrap());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn missing_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let p = predict(d, "nowhere", "hnn", "p.csv");
    assert_eq!(code(&p), 3);
    assert!(String::from_utf8_lossy(&p.stderr).contains("missing checkpoint"));
}

#[test]
fn catalog_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    assert_eq!(code(&tabsema(d, &[TRAIN, &["model"]].concat())), 0);
    let text = fs::read_to_string(d.join("catalog.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    fs::write(d.join("reordered.csv"), lines.join("\n")).unwrap();
    let p = tabsema(
        d,
        &[
            "predict", "--tables", "tables", "--model", "model", "--embeddings", "embeddings.txt", "--catalog",
            "reordered.csv", "--out", "p.csv",
        ],
    );
    assert_eq!(code(&p), 3);
}

#[test]
fn usage_errors_do_not_panic() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tabsema(dir.path(), &["predict"])), 2);
    assert_eq!(code(&tabsema(dir.path(), &["train", "--ablation", "rnn"])), 2);
    assert_eq!(code(&tabsema(dir.path(), &["--help"])), 0);
}
