mod kb_snapshot {
    include!("../examples/kb_snapshot.rs");
}
mod micro_tables {
    include!("../examples/micro_tables.rs");
}
mod cell_attention {
    include!("../examples/cell_attention.rs");
}
mod train_hnn {
    include!("../examples/train_hnn.rs");
}
mod mine_properties {
    include!("../examples/mine_properties.rs");
}
mod p2vec_vectors {
    include!("../examples/p2vec_vectors.rs");
}
mod ensembles {
    include!("../examples/ensembles.rs");
}
mod lookup_vote {
    include!("../examples/lookup_vote.rs");
}
mod evaluate_predictions {
    include!("../examples/evaluate_predictions.rs");
}
mod remote_kb {
    include!("../examples/remote_kb.rs");
}
mod run_config {
    include!("../examples/run_config.rs");
}
mod generate_corpus {
    include!("../examples/generate_corpus.rs");
}

#[test]
fn kb_snapshot_resolves_subclasses_and_typos() {
    let kb = kb_snapshot::run_example().unwrap();
    assert!(!kb.is_empty());
}

#[test]
fn micro_tables_slide_over_rows() {
    let w = micro_tables::run_example().unwrap();
    assert_eq!(w.len(), 3);
    assert!(w.iter().all(|mt| mt.surrounding.len() == 4));
}

#[test]
fn cell_attention_weights_sum_to_one() {
    let out = cell_attention::run_example().unwrap();
    assert!((out.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn train_hnn_predicts_entity_columns() {
    let preds = train_hnn::run_example(2).unwrap();
    assert!(!preds.is_empty());
    assert!(preds.iter().all(|p| p.predicted.is_some()));
}

#[test]
fn mine_properties_finds_class_properties() {
    assert!(mine_properties::run_example().unwrap().d1() > 0);
}

#[test]
fn p2vec_vectors_are_unit_or_zero() {
    for v in p2vec_vectors::run_example().unwrap() {
        let n = v.0.iter().map(|x| x * x).sum::<f64>();
        assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ensembles_report_all_scorers() {
    let r = ensembles::run_example(2).unwrap();
    for acc in [r.hnn, r.ensemble1, r.ensemble2, r.p2vec] {
        assert!((0.0..=1.0).contains(&acc));
    }
}

#[test]
fn lookup_vote_scores_synthetic_gold() {
    assert!(lookup_vote::run_example().unwrap().accuracy > 0.5);
}

#[test]
fn evaluate_predictions_counts_abstention_as_wrong() {
    let r = evaluate_predictions::run_example().unwrap();
    assert!((r.accuracy - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn remote_kb_replays_offline() {
    assert_eq!(remote_kb::run_example().unwrap(), 2);
}

#[test]
fn run_config_parses() {
    assert_eq!(run_config::run_example().unwrap().m, 5);
}

#[test]
fn generate_corpus_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_corpus::run_example(dir.path()).unwrap();
    assert!(files.tables.exists());
}
