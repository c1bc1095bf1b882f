//! Tables, columns, micro tables and the class catalog.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::literal::{parse_date, parse_number};

/// Share of non-empty cells that must parse as numbers (or dates) for a
/// column to be classified as a number (or date) column.
pub const KIND_RATIO_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cell {
    pub raw_text: String,
}

impl Cell {
    pub fn new(raw_text: impl Into<String>) -> Self {
        Cell {
            raw_text: raw_text.into(),
        }
    }

    pub fn empty() -> Self {
        Cell::new("")
    }

    pub fn is_empty(&self) -> bool {
        self.raw_text.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Entity,
    Number,
    Date,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Entity => "entity",
            ColumnKind::Number => "number",
            ColumnKind::Date => "date",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub cells: Vec<Cell>,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(cells: Vec<Cell>, kind: ColumnKind) -> Self {
        Column { cells, kind }
    }

    /// Builds a column and detects its kind. All-empty columns are treated
    /// as entity columns; they embed to zeros either way.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        let cells: Vec<Cell> = texts.iter().map(|t| Cell::new(t.as_ref())).collect();
        let kind = detect_column_kind(&cells).unwrap_or(ColumnKind::Entity);
        Column { cells, kind }
    }

    pub fn empty(len: usize) -> Self {
        Column::new(vec![Cell::empty(); len], ColumnKind::Entity)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Classifies a column as number, date or entity by the share of its
/// non-empty cells that parse as each literal type.
pub fn detect_column_kind(cells: &[Cell]) -> Result<ColumnKind> {
    let filled: Vec<&str> = cells
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.raw_text.as_str())
        .collect();
    if filled.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let total = filled.len() as f64;
    let ratio = |pred: fn(&str) -> bool| filled.iter().filter(|t| pred(t)).count() as f64 / total;
    if ratio(|t| parse_number(t).is_some()) >= KIND_RATIO_THRESHOLD {
        Ok(ColumnKind::Number)
    } else if ratio(|t| parse_date(t).is_some()) >= KIND_RATIO_THRESHOLD {
        Ok(ColumnKind::Date)
    } else {
        Ok(ColumnKind::Entity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: String,
    pub columns: Vec<Column>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    id: String,
    columns: Vec<Vec<String>>,
}

impl Table {
    /// Builds a table from column-major texts, padding short columns with
    /// empty cells and detecting each column's kind.
    pub fn from_columns<S: AsRef<str>>(id: impl Into<String>, columns: &[Vec<S>]) -> Self {
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        let columns = columns
            .iter()
            .map(|col| {
                let mut texts: Vec<&str> = col.iter().map(AsRef::as_ref).collect();
                texts.resize(rows, "");
                Column::from_texts(&texts)
            })
            .collect();
        Table {
            id: id.into(),
            columns,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn column(&self, index: usize) -> Result<&Column> {
        self.columns.get(index).ok_or_else(|| Error::ColumnOutOfRange {
            table: self.id.clone(),
            index,
            columns: self.columns.len(),
        })
    }

    /// Reads a headerless RFC-4180 CSV table, row-major on disk.
    pub fn read_csv<R: Read>(id: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut columns: Vec<Vec<String>> = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, field) in record.iter().enumerate() {
                if columns.len() <= c {
                    columns.push(vec![String::new(); row]);
                }
                columns[c].push(field.to_string());
            }
            for col in columns.iter_mut().skip(record.len()) {
                col.push(String::new());
            }
        }
        Ok(Table::from_columns(id, &columns))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_writer(writer);
        for r in 0..self.num_rows() {
            wtr.write_record(self.columns.iter().map(|c| c.cells[r].raw_text.as_str()))?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the column-major JSON form `{ "id": .., "columns": [[..], ..] }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TableJson = serde_json::from_str(text)?;
        Ok(Table::from_columns(raw.id, &raw.columns))
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = TableJson {
            id: self.id.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c.cells.iter().map(|x| x.raw_text.clone()).collect())
                .collect(),
        };
        Ok(serde_json::to_string(&raw)?)
    }

    /// Loads a `.json` or `.csv` table. CSV tables take the file stem as id.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Table::from_json(&text),
            _ => {
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                Table::read_csv(id, text.as_bytes())
            }
        }
    }

    /// Loads every `.csv`/`.json` table in a directory, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
            .collect();
        paths.sort();
        paths.iter().map(|p| Table::load(p)).collect()
    }
}

/// Fixed-shape sample: `m` target cells plus `l` surrounding columns of
/// `m` cells each. The first target cell is the main cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroTable {
    pub target: Column,
    pub surrounding: Vec<Column>,
}

impl MicroTable {
    pub fn main_cell(&self) -> &Cell {
        &self.target.cells[0]
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    /// Column `0` is the target, `1..=l` the surrounding columns.
    pub fn column(&self, index: usize) -> &Column {
        if index == 0 {
            &self.target
        } else {
            &self.surrounding[index - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TargetSize { expected: usize, found: usize },
    SurroundingCount { expected: usize, found: usize },
    SurroundingSize { column: usize, expected: usize, found: usize },
    TargetKind(ColumnKind),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TargetSize { expected, found } => {
                write!(f, "target size: expected {expected} cells, found {found}")
            }
            Violation::SurroundingCount { expected, found } => {
                write!(f, "surrounding count: expected {expected} columns, found {found}")
            }
            Violation::SurroundingSize { column, expected, found } => write!(
                f,
                "surrounding size: column {column} has {found} cells, expected {expected}"
            ),
            Violation::TargetKind(kind) => write!(f, "target kind: {kind} is not entity"),
        }
    }
}

pub fn validate_micro_table(mt: &MicroTable, m: usize, l: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if mt.target.len() != m {
        out.push(Violation::TargetSize {
            expected: m,
            found: mt.target.len(),
        });
    }
    if mt.target.kind != ColumnKind::Entity {
        out.push(Violation::TargetKind(mt.target.kind));
    }
    if mt.surrounding.len() != l {
        out.push(Violation::SurroundingCount {
            expected: l,
            found: mt.surrounding.len(),
        });
    }
    for (i, col) in mt.surrounding.iter().enumerate() {
        if col.len() != m {
            out.push(Violation::SurroundingSize {
                column: i,
                expected: m,
                found: col.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class_id: String,
    pub kb_iri: String,
}

/// Ordered set of candidate classes. Every score vector follows this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCatalog {
    classes: Vec<ClassEntry>,
}

impl ClassCatalog {
    pub fn new(classes: Vec<ClassEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &classes {
            if !seen.insert(c.class_id.as_str()) {
                return Err(Error::DuplicateClass(c.class_id.clone()));
            }
        }
        Ok(ClassCatalog { classes })
    }

    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(pairs: &[(A, B)]) -> Result<Self> {
        ClassCatalog::new(
            pairs
                .iter()
                .map(|(id, iri)| ClassEntry {
                    class_id: id.as_ref().to_string(),
                    kb_iri: iri.as_ref().to_string(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn get(&self, index: usize) -> Option<&ClassEntry> {
        self.classes.get(index)
    }

    pub fn index_of(&self, class_id: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c.class_id == class_id)
            .ok_or_else(|| Error::UnknownClass(class_id.to_string()))
    }

    pub fn index_of_iri(&self, iri: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.kb_iri == iri)
    }

    /// SHA-256 over the ordered `(class_id, kb_iri)` pairs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.classes {
            h.update(c.class_id.as_bytes());
            h.update([0u8]);
            h.update(c.kb_iri.as_bytes());
            h.update(*b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Reads `class_id,kb_iri` rows; a leading `class_id` header is skipped.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut classes = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() < 2 || record.get(0) == Some("class_id") {
                continue;
            }
            classes.push(ClassEntry {
                class_id: record[0].trim().to_string(),
                kb_iri: record[1].trim().to_string(),
            });
        }
        ClassCatalog::new(classes)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["class_id", "kb_iri"])?;
        for c in &self.classes {
            wtr.write_record([&c.class_id, &c.kb_iri])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        ClassCatalog::read_csv(file)
    }
}

/// `K` scores aligned with the class catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn uniform(k: usize) -> Self {
        ScoreVector(vec![1.0 / k as f64; k])
    }

    pub fn softmax(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        ScoreVector(exps.into_iter().map(|e| e / sum).collect())
    }

    /// Element-wise mean of equally long score vectors.
    pub fn mean(scores: &[ScoreVector]) -> Self {
        let k = scores.first().map_or(0, ScoreVector::len);
        let mut out = vec![0.0; k];
        for s in scores {
            for (o, v) in out.iter_mut().zip(&s.0) {
                *o += v;
            }
        }
        let n = scores.len() as f64;
        ScoreVector(out.into_iter().map(|v| v / n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Index of the highest score; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub table_id: String,
    pub column_index: usize,
    pub class_id: String,
}

/// Reads `table_id,column_index,class_id` rows (optional header).
pub fn read_gold<R: Read>(reader: R) -> Result<Vec<GoldLabel>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.get(0) == Some("table_id") {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Syntax {
                path: "<gold>".into(),
                line: line + 1,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let column_index = record[1].trim().parse().map_err(|_| Error::Syntax {
            path: "<gold>".into(),
            line: line + 1,
            message: format!("bad column index `{}`", &record[1]),
        })?;
        out.push(GoldLabel {
            table_id: record[0].to_string(),
            column_index,
            class_id: record[2].trim().to_string(),
        });
    }
    Ok(out)
}

pub fn write_gold<W: Write>(labels: &[GoldLabel], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["table_id", "column_index", "class_id"])?;
    for g in labels {
        wtr.write_record([&g.table_id, &g.column_index.to_string(), &g.class_id])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldLabel>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_gold(file)
}
