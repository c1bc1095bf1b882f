// Embeds one entity cell with the attention-pooled bidirectional GRU and
// shows how much weight each word receives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabsema::encoder::{embed_entity_cell, tokenize_and_crop, EmbeddingTable};
use tabsema::hnn::{AttentionOutput, HnnConfig, HnnModel};
use tabsema::table::ClassCatalog;

pub fn run_example() -> anyhow::Result<AttentionOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut emb = EmbeddingTable::new(8);
    for w in ["bank", "of", "america", "national", "trust"] {
        emb.insert(w, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    }
    let mut cfg = HnnConfig::defaults(8, 2);
    cfg.hidden = 6;
    cfg.attention = 4;
    let catalog = ClassCatalog::from_pairs(&[("bank", "http://ex.org/Bank"), ("city", "http://ex.org/City")])?;
    let mut model = HnnModel::new(cfg, catalog, 0)?;
    // untrained attention is nearly uniform; sharpen it for display
    for t in model.params_mut().tensors_mut() {
        t.iter_mut().for_each(|v| *v *= 8.0);
    }

    let phrase = "Bank of America";
    let words = tokenize_and_crop(phrase, model.config().seq_len);
    let matrix = embed_entity_cell(phrase, &emb, words.len());
    let out = model.birnn_attention_embed(matrix.view())?;
    for (w, a) in words.iter().zip(out.weights.iter()) {
        println!("{w:>8}  α = {a:.3}");
    }
    println!("cell vector has {} dimensions", out.embedding.len());
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
