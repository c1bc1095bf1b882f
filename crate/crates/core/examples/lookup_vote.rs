// Baseline without learning: each cell votes for the classes of the
// entities it finds in the KB.

use tabsema::eval::{evaluate, lookup_vote_columns, ColumnRef, EvalReport};
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> anyhow::Result<EvalReport> {
    let data = generate(&SyntheticConfig::default())?;
    let targets: Vec<ColumnRef> = data
        .gold
        .iter()
        .map(|g| ColumnRef {
            table_id: g.table_id.clone(),
            column_index: g.column_index,
        })
        .collect();
    let preds = lookup_vote_columns(&data.tables, &targets, &data.catalog, &data.kb, 0.85, 5)?;
    let records: Vec<_> = preds.iter().map(|p| p.to_record(&data.catalog)).collect();
    let report = evaluate(&records, &data.gold, &data.catalog, "")?;
    print!("{}", report.render_text());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
