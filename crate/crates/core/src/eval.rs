//! Column-level prediction by averaging micro-table scores, the
//! Lookup-Vote baseline, accuracy reports and the predictions file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::EmbeddingTable;
use crate::ensemble::{EnsembleModel, FeatureContext};
use crate::error::{Error, Result};
use crate::hnn::HnnModel;
use crate::kb::KnowledgeBase;
use crate::sampler::extract_micro_tables;
use crate::table::{ClassCatalog, Column, GoldLabel, MicroTable, ScoreVector, Table};

/// Anything that maps a micro table to class scores.
pub trait MicroTableScorer: Sync {
    fn score(&self, mt: &MicroTable) -> Result<ScoreVector>;
}

pub struct HnnScorer<'a> {
    pub model: &'a HnnModel,
    pub emb: &'a EmbeddingTable,
}

impl MicroTableScorer for HnnScorer<'_> {
    fn score(&self, mt: &MicroTable) -> Result<ScoreVector> {
        Ok(self.model.score(mt, self.emb)?.scores)
    }
}

pub struct EnsembleScorer<'a> {
    model: &'a EnsembleModel,
    ctx: &'a FeatureContext<'a>,
}

impl<'a> EnsembleScorer<'a> {
    /// Checks once that the context carries the network the ensemble was
    /// trained against.
    pub fn new(model: &'a EnsembleModel, ctx: &'a FeatureContext<'a>) -> Result<Self> {
        model.check(ctx)?;
        Ok(EnsembleScorer { model, ctx })
    }
}

impl MicroTableScorer for EnsembleScorer<'_> {
    fn score(&self, mt: &MicroTable) -> Result<ScoreVector> {
        self.model.score(mt, self.ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPrediction {
    pub table_id: String,
    pub column_index: usize,
    pub score: ScoreVector,
    /// catalog index of the predicted class; `None` when the scorer abstained
    pub predicted: Option<usize>,
    pub window_scores: Vec<ScoreVector>,
}

impl ColumnPrediction {
    pub fn from_windows(table_id: &str, column_index: usize, window_scores: Vec<ScoreVector>) -> Self {
        let score = ScoreVector::mean(&window_scores);
        ColumnPrediction {
            table_id: table_id.to_string(),
            column_index,
            predicted: Some(score.argmax()),
            score,
            window_scores,
        }
    }

    pub fn to_record(&self, catalog: &ClassCatalog) -> PredictionRecord {
        PredictionRecord {
            table_id: self.table_id.clone(),
            column_index: self.column_index,
            predicted_class: self
                .predicted
                .and_then(|i| catalog.get(i))
                .map(|c| c.class_id.clone()),
            scores: self.score.0.clone(),
        }
    }
}

/// Scores every micro table of a column and averages the window scores.
pub fn score_column(
    table: &Table,
    target_index: usize,
    scorer: &dyn MicroTableScorer,
    m: usize,
    l: usize,
) -> Result<ColumnPrediction> {
    let windows = extract_micro_tables(table, target_index, m, l)?;
    let scores = windows.iter().map(|mt| scorer.score(mt)).collect::<Result<Vec<_>>>()?;
    Ok(ColumnPrediction::from_windows(&table.id, target_index, scores))
}

/// Target columns addressed by table id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table_id: String,
    pub column_index: usize,
}

fn find_table<'t>(tables: &'t [Table], id: &str) -> Result<&'t Table> {
    tables
        .iter()
        .find(|t| t.id == id)
        .ok_or_else(|| Error::Config(format!("no table with id `{id}`")))
}

/// Scores many columns in parallel; output order follows `targets`.
pub fn predict_columns(
    tables: &[Table],
    targets: &[ColumnRef],
    scorer: &dyn MicroTableScorer,
    m: usize,
    l: usize,
) -> Result<Vec<ColumnPrediction>> {
    targets
        .par_iter()
        .map(|t| score_column(find_table(tables, &t.table_id)?, t.column_index, scorer, m, l))
        .collect()
}

/// Baseline: every cell votes for the catalog classes of the entities it
/// looks up. Scores are vote shares; without any vote the column gets a
/// uniform score and no prediction.
pub fn lookup_vote(
    table_id: &str,
    column_index: usize,
    column: &Column,
    catalog: &ClassCatalog,
    kb: &dyn KnowledgeBase,
    alpha: f64,
    n_lookup: usize,
) -> Result<ColumnPrediction> {
    let mut votes = vec![0usize; catalog.len()];
    for cell in column.cells.iter().filter(|c| !c.is_empty()) {
        for hit in kb.entity_lookup(&cell.raw_text, alpha, n_lookup)? {
            for class in kb.classes_of(&hit.iri)? {
                if let Some(i) = catalog.index_of_iri(&class) {
                    votes[i] += 1;
                }
            }
        }
    }
    let total: usize = votes.iter().sum();
    let (score, predicted) = if total == 0 {
        (ScoreVector::uniform(catalog.len()), None)
    } else {
        let s = ScoreVector(votes.iter().map(|&v| v as f64 / total as f64).collect());
        let p = s.argmax();
        (s, Some(p))
    };
    Ok(ColumnPrediction {
        table_id: table_id.to_string(),
        column_index,
        score,
        predicted,
        window_scores: Vec::new(),
    })
}

pub fn lookup_vote_columns(
    tables: &[Table],
    targets: &[ColumnRef],
    catalog: &ClassCatalog,
    kb: &dyn KnowledgeBase,
    alpha: f64,
    n_lookup: usize,
) -> Result<Vec<ColumnPrediction>> {
    targets
        .par_iter()
        .map(|t| {
            let table = find_table(tables, &t.table_id)?;
            lookup_vote(&t.table_id, t.column_index, table.column(t.column_index)?, catalog, kb, alpha, n_lookup)
        })
        .collect()
}

/// One row of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub table_id: String,
    pub column_index: usize,
    /// empty in the file when the scorer abstained
    pub predicted_class: Option<String>,
    pub scores: Vec<f64>,
}

const FINGERPRINT_PREFIX: &str = "# fingerprint: ";

/// Writes `# fingerprint: …` and then the CSV
/// `table_id,column_index,predicted_class,score_0..score_{K-1}`.
pub fn write_predictions<W: Write>(records: &[PredictionRecord], k: usize, fingerprint: &str, mut writer: W) -> Result<()> {
    writeln!(writer, "{FINGERPRINT_PREFIX}{fingerprint}").map_err(|e| Error::io("<predictions>", e))?;
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["table_id".to_string(), "column_index".into(), "predicted_class".into()];
    header.extend((0..k).map(|i| format!("score_{i}")));
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.table_id.clone(),
            r.column_index.to_string(),
            r.predicted_class.clone().unwrap_or_default(),
        ];
        row.extend(r.scores.iter().map(|s| s.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionsFile {
    pub fingerprint: Option<String>,
    pub records: Vec<PredictionRecord>,
}

pub fn read_predictions<R: Read>(mut reader: R, source: &str) -> Result<PredictionsFile> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::io(source, e))?;
    let (fingerprint, body, offset) = match text.split_once('\n') {
        Some((first, rest)) if first.starts_with(FINGERPRINT_PREFIX) => {
            (Some(first[FINGERPRINT_PREFIX.len()..].trim().to_string()), rest, 1)
        }
        _ => (None, text.as_str(), 0),
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let syntax = |message: String| Error::Syntax {
            path: source.to_string(),
            line: i + 2 + offset,
            message,
        };
        if row.len() < 3 {
            return Err(syntax(format!("expected at least 3 fields, found {}", row.len())));
        }
        let column_index = row[1].parse().map_err(|_| syntax(format!("bad column index `{}`", &row[1])))?;
        let scores = row
            .iter()
            .skip(3)
            .map(|s| s.parse::<f64>().map_err(|_| syntax(format!("bad score `{s}`"))))
            .collect::<Result<_>>()?;
        records.push(PredictionRecord {
            table_id: row[0].to_string(),
            column_index,
            predicted_class: (!row[2].is_empty()).then(|| row[2].to_string()),
            scores,
        });
    }
    Ok(PredictionsFile { fingerprint, records })
}

pub fn load_predictions(path: &Path) -> Result<PredictionsFile> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: String,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// gold columns for which the scorer abstained; counted as wrong
    pub abstained: usize,
    pub per_class: Vec<ClassReport>,
    /// `confusion[gold][predicted]`, abstentions excluded
    pub confusion: Vec<Vec<usize>>,
    pub fingerprint: String,
}

/// Column accuracy of predictions against gold labels. Predictions for
/// columns without a gold label are ignored.
pub fn evaluate(
    predictions: &[PredictionRecord],
    gold: &[GoldLabel],
    catalog: &ClassCatalog,
    fingerprint: &str,
) -> Result<EvalReport> {
    let by_column: BTreeMap<(&str, usize), &PredictionRecord> = predictions
        .iter()
        .map(|p| ((p.table_id.as_str(), p.column_index), p))
        .collect();
    let k = catalog.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut totals = vec![0usize; k];
    let mut hits = vec![0usize; k];
    let mut abstained = 0;
    for g in gold {
        let truth = catalog.index_of(&g.class_id)?;
        let p = by_column
            .get(&(g.table_id.as_str(), g.column_index))
            .ok_or_else(|| Error::MissingPrediction {
                table_id: g.table_id.clone(),
                column_index: g.column_index,
            })?;
        totals[truth] += 1;
        match &p.predicted_class {
            None => abstained += 1,
            Some(c) => {
                let pred = catalog.index_of(c)?;
                confusion[truth][pred] += 1;
                if pred == truth {
                    hits[truth] += 1;
                }
            }
        }
    }
    let correct: usize = hits.iter().sum();
    let total = gold.len();
    let ratio = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    Ok(EvalReport {
        accuracy: ratio(correct, total),
        correct,
        total,
        abstained,
        per_class: catalog
            .classes()
            .iter()
            .enumerate()
            .map(|(i, c)| ClassReport {
                class_id: c.class_id.clone(),
                total: totals[i],
                correct: hits[i],
                accuracy: ratio(hits[i], totals[i]),
            })
            .collect(),
        confusion,
        fingerprint: fingerprint.to_string(),
    })
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "accuracy {:.4} ({}/{})", self.accuracy, self.correct, self.total);
        if self.abstained > 0 {
            let _ = writeln!(s, "abstained {}", self.abstained);
        }
        let width = self.per_class.iter().map(|c| c.class_id.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(s, "{:<width$}  {:>8}  {:>5}  {:>5}", "class", "accuracy", "right", "total");
        for c in &self.per_class {
            let _ = writeln!(
                s,
                "{:<width$}  {:>8.4}  {:>5}  {:>5}",
                c.class_id, c.accuracy, c.correct, c.total
            );
        }
        let _ = writeln!(s, "confusion (rows gold, columns predicted)");
        for (c, row) in self.per_class.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
            let _ = writeln!(s, "{:<width$}  {}", c.class_id, cells.join(" "));
        }
        let _ = writeln!(s, "fingerprint {}", self.fingerprint);
        s
    }
}
