// Combines the network with P2Vec: Ensemble I averages scores, Ensemble II
// classifies the concatenated features, and the P2Vec-only classifier uses
// the property vector alone.

use tabsema::config::RunConfig;
use tabsema::pipeline::{holdout_experiment, ExperimentReport};
use tabsema::sampler::SplitSpec;
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example(epochs: usize) -> anyhow::Result<ExperimentReport> {
    let data = generate(&SyntheticConfig {
        columns: 80,
        word_dim: 16,
        ..SyntheticConfig::default()
    })?;
    let cfg = RunConfig {
        hidden: 16,
        attention: 8,
        epochs,
        base_epochs: 60,
        ..RunConfig::default()
    };
    let split = SplitSpec {
        seed: 1,
        train_fraction: 0.7,
    };
    let r = holdout_experiment(&cfg, &data.tables, &data.gold, &data.catalog, &data.embeddings, &data.kb, split)?;
    println!("hnn {:.3}  ensemble I {:.3}  ensemble II {:.3}  p2vec {:.3}", r.hnn, r.ensemble1, r.ensemble2, r.p2vec);
    Ok(r)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example(15).map(|_| ())
}
