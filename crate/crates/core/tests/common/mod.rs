#![allow(dead_code, clippy::needless_range_loop)]

pub mod fixture_kb;
pub mod hnn_oracle;
pub mod jaro_ref;

use rand::Rng;
use tabsema::encoder::EmbeddingTable;
use tabsema::hnn::{Ablation, HnnConfig};
use tabsema::table::{Cell, ClassCatalog, Column, ColumnKind, MicroTable};

pub fn catalog(k: usize) -> ClassCatalog {
    let pairs: Vec<(String, String)> = (0..k).map(|i| (format!("c{i}"), format!("http://ex.org/C{i}"))).collect();
    ClassCatalog::from_pairs(&pairs).unwrap()
}

/// m=3, l=1, T=3, H=4, d_w=4, K=3.
pub fn tiny_config(ablation: Ablation) -> HnnConfig {
    HnnConfig {
        rows: 3,
        surrounding: 1,
        seq_len: 3,
        word_dim: 4,
        hidden: 4,
        attention: 3,
        column_widths: vec![2, 3],
        row_widths: vec![2],
        column_filters: 2,
        row_filters: 2,
        fc_equals_logits: true,
        fc_size: 5,
        num_classes: 3,
        ablation,
    }
}

pub const WORDS: [&str; 8] = ["red", "green", "blue", "cyan", "amber", "ivory", "olive", "pearl"];

pub fn random_embeddings<R: Rng>(rng: &mut R, dim: usize) -> EmbeddingTable {
    let mut e = EmbeddingTable::new(dim);
    for w in WORDS {
        e.insert(w, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    }
    e
}

fn random_phrase<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(0..=4);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.15) {
                "unknownword"
            } else {
                WORDS[rng.gen_range(0..WORDS.len())]
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_column<R: Rng>(rng: &mut R, m: usize, kind: ColumnKind) -> Column {
    let cells = (0..m)
        .map(|_| match kind {
            ColumnKind::Entity => Cell::new(random_phrase(rng)),
            ColumnKind::Number => Cell::new(format!("{:.2}", rng.gen_range(-5000.0..5000.0))),
            ColumnKind::Date => Cell::new(format!(
                "{}-{:02}-{:02}",
                rng.gen_range(1800..2030),
                rng.gen_range(1..13),
                rng.gen_range(1..29)
            )),
        })
        .collect();
    Column::new(cells, kind)
}

/// Random micro table whose main cell is never empty.
pub fn random_micro_table<R: Rng>(rng: &mut R, m: usize, l: usize) -> MicroTable {
    let mut target = random_column(rng, m, ColumnKind::Entity);
    target.cells[0] = Cell::new(WORDS[rng.gen_range(0..WORDS.len())]);
    let kinds = [ColumnKind::Entity, ColumnKind::Number, ColumnKind::Date];
    MicroTable {
        target,
        surrounding: (0..l)
            .map(|_| {
                let kind = kinds[rng.gen_range(0..3)];
                random_column(rng, m, kind)
            })
            .collect(),
    }
}
