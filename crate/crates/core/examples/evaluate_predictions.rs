// Round-trips a predictions file and scores it against gold labels.

use tabsema::eval::{evaluate, read_predictions, write_predictions, EvalReport, PredictionRecord};
use tabsema::table::{ClassCatalog, GoldLabel};

pub fn run_example() -> anyhow::Result<EvalReport> {
    let catalog = ClassCatalog::from_pairs(&[("film", "http://ex.org/Film"), ("city", "http://ex.org/City")])?;
    let record = |t: &str, class: Option<&str>, s: [f64; 2]| PredictionRecord {
        table_id: t.into(),
        column_index: 0,
        predicted_class: class.map(String::from),
        scores: s.to_vec(),
    };
    let records = vec![
        record("t1", Some("film"), [0.9, 0.1]),
        record("t2", Some("film"), [0.6, 0.4]),
        record("t3", None, [0.5, 0.5]),
    ];
    let mut csv = Vec::new();
    write_predictions(&records, catalog.len(), "demo", &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    let file = read_predictions(csv.as_slice(), "memory")?;

    let gold = |t: &str, c: &str| GoldLabel {
        table_id: t.into(),
        column_index: 0,
        class_id: c.into(),
    };
    let report = evaluate(
        &file.records,
        &[gold("t1", "film"), gold("t2", "city"), gold("t3", "city")],
        &catalog,
        "demo",
    )?;
    print!("{}", report.render_text());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
