// Trains the hybrid network on a small generated corpus, predicts column
// types and reloads the checkpoint.

use tabsema::config::RunConfig;
use tabsema::eval::ColumnPrediction;
use tabsema::hnn::checkpoint::{load_checkpoint, save_checkpoint};
use tabsema::pipeline::{entity_columns, labeled_samples, predict_hnn, train_hnn};
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example(epochs: usize) -> anyhow::Result<Vec<ColumnPrediction>> {
    let data = generate(&SyntheticConfig {
        columns: 60,
        word_dim: 16,
        ..SyntheticConfig::default()
    })?;
    let cfg = RunConfig {
        hidden: 16,
        attention: 8,
        epochs,
        ..RunConfig::default()
    };
    let samples = labeled_samples(&data.tables, &data.gold, &data.catalog, cfg.m, cfg.l)?;
    let (model, report) = train_hnn(&cfg, &samples, &data.catalog, &data.embeddings)?;
    println!(
        "{} micro tables, loss {:.3} -> {:.3}",
        samples.len(),
        report.loss_curve[0],
        report.loss_curve.last().unwrap()
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("hnn.ckpt");
    save_checkpoint(&model, &path)?;
    let model = load_checkpoint(&path)?;

    let predictions = predict_hnn(&model, &data.embeddings, &data.tables, &entity_columns(&data.tables))?;
    for p in predictions.iter().take(5) {
        let class = p.predicted.and_then(|i| model.catalog().get(i)).map(|c| c.class_id.as_str());
        println!("{}#{} -> {:?}", p.table_id, p.column_index, class);
    }
    Ok(predictions)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example(10).map(|_| ())
}
