// Trains every scorer on a generated corpus and prints held-out accuracies.

use std::time::Instant;

use tabsema::config::RunConfig;
use tabsema::pipeline::{holdout_experiment, ExperimentReport};
use tabsema::sampler::SplitSpec;
use tabsema::synthetic::{generate, SyntheticConfig};

/// Scaled-down network sizes used by the synthetic experiment.
pub fn experiment_config() -> RunConfig {
    RunConfig {
        hidden: 32,
        attention: 16,
        epochs: 30,
        ..RunConfig::default()
    }
}

pub fn run_example() -> anyhow::Result<ExperimentReport> {
    let data = generate(&SyntheticConfig::default())?;
    let split = SplitSpec {
        seed: 0,
        train_fraction: 0.7,
    };
    let report = holdout_experiment(
        &experiment_config(),
        &data.tables,
        &data.gold,
        &data.catalog,
        &data.embeddings,
        &data.kb,
        split,
    )?;
    Ok(report)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    let start = Instant::now();
    let r = run_example()?;
    println!("train/test columns: {}/{}", r.train_columns, r.test_columns);
    println!("majority     {:.3}", r.majority);
    println!("lookup-vote  {:.3}", r.lookup_vote);
    println!("hnn          {:.3}", r.hnn);
    println!("ensemble I   {:.3}", r.ensemble1);
    println!("ensemble II  {:.3}", r.ensemble2);
    println!("p2vec only   {:.3}", r.p2vec);
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
