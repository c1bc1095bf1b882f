//! Turns micro-table cells into numeric inputs: tokenization, word-vector
//! lookup for entity cells and fixed vectors for number and date cells.

use std::collections::HashMap;
use std::fs;
use std::io::BufRead;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::literal::{parse_date, parse_number};
use crate::table::{ColumnKind, MicroTable};

/// Pretrained word vectors. Unknown words map to zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "word vector has {} entries, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Reads the word2vec text format: `word v1 .. vd` per line, with an
    /// optional `count dim` header line.
    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let syntax = |message: String| Error::Syntax {
                path: source.to_string(),
                line: i + 1,
                message,
            };
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                table = Some(EmbeddingTable::new(fields[1].parse().unwrap_or_default()));
                continue;
            }
            let values: Vec<f64> = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| syntax(format!("bad vector component: {e}")))?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            t.insert(fields[0], values).map_err(|e| syntax(e.to_string()))?;
        }
        table.ok_or_else(|| Error::Syntax {
            path: source.to_string(),
            line: 0,
            message: "no word vectors".into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        EmbeddingTable::read(std::io::BufReader::new(file), &path.display().to_string())
    }

    /// Writes the text format with a header line, words sorted.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = format!("{} {}\n", words.len(), self.dim);
        for w in words {
            out.push_str(w);
            for v in &self.vectors[w] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Lowercased tokens split at whitespace and punctuation.
pub fn tokenize(phrase: &str) -> Vec<String> {
    phrase
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Exactly `t` tokens: cropped, then padded with empty tokens at the tail.
pub fn tokenize_and_crop(phrase: &str, t: usize) -> Vec<String> {
    let mut tokens = tokenize(phrase);
    tokens.resize(t, String::new());
    tokens
}

/// `t × d_w` matrix whose row `i` is the vector of token `i` (zeros for
/// padding and unknown words).
pub fn embed_entity_cell(phrase: &str, emb: &EmbeddingTable, t: usize) -> Array2<f64> {
    let mut out = Array2::zeros((t, emb.dim()));
    for (i, tok) in tokenize_and_crop(phrase, t).iter().enumerate() {
        if let Some(v) = emb.get(tok) {
            out.row_mut(i).assign(&ndarray::ArrayView1::from(v));
        }
    }
    out
}

/// Mean of the word vectors of a phrase's first `t` tokens.
pub fn mean_word_vector(phrase: &str, emb: &EmbeddingTable, t: usize) -> Array1<f64> {
    let tokens: Vec<String> = tokenize(phrase).into_iter().take(t).collect();
    let mut out = Array1::zeros(emb.dim());
    if tokens.is_empty() {
        return out;
    }
    for tok in &tokens {
        if let Some(v) = emb.get(tok) {
            out += &ndarray::ArrayView1::from(v);
        }
    }
    out / tokens.len() as f64
}

/// Slot 0 holds `tanh(value / 1000)`; unparseable text gives zeros.
pub fn encode_number_cell(text: &str, d0: usize) -> Array1<f64> {
    let mut out = Array1::zeros(d0);
    if let Some(v) = parse_number(text) {
        out[0] = (v / 1000.0).tanh();
    }
    out
}

/// Slots 0..3 hold `(year/3000, month/12, day/31)`; unparseable gives zeros.
pub fn encode_date_cell(text: &str, d0: usize) -> Array1<f64> {
    let mut out = Array1::zeros(d0);
    if let Some(d) = parse_date(text) {
        out[0] = (d.year as f64 / 3000.0).clamp(-1.0, 1.0);
        out[1] = d.month as f64 / 12.0;
        out[2] = d.day as f64 / 31.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncodedCell {
    /// `tokens` is `T × d_w`; `len` counts the non-padding tokens.
    Entity { tokens: Array2<f64>, len: usize },
    Deterministic(Array1<f64>),
}

/// Encoded cells of a micro table, `grid[row][col]` with column 0 the target.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMicroTable {
    pub grid: Vec<Vec<EncodedCell>>,
}

impl EncodedMicroTable {
    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.first().map_or(0, Vec::len)
    }
}

pub fn encode_cell(
    text: &str,
    kind: ColumnKind,
    emb: &EmbeddingTable,
    t: usize,
    d0: usize,
) -> EncodedCell {
    match kind {
        ColumnKind::Entity => EncodedCell::Entity {
            tokens: embed_entity_cell(text, emb, t),
            len: tokenize(text).len().min(t),
        },
        ColumnKind::Number => EncodedCell::Deterministic(encode_number_cell(text, d0)),
        ColumnKind::Date => {
            if d0 < 3 {
                EncodedCell::Deterministic(Array1::zeros(d0))
            } else {
                EncodedCell::Deterministic(encode_date_cell(text, d0))
            }
        }
    }
}

pub fn encode_micro_table(
    mt: &MicroTable,
    emb: &EmbeddingTable,
    t: usize,
    d0: usize,
) -> EncodedMicroTable {
    let cols = 1 + mt.surrounding.len();
    let grid = (0..mt.rows())
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let col = mt.column(c);
                    encode_cell(&col.cells[r].raw_text, col.kind, emb, t, d0)
                })
                .collect()
        })
        .collect();
    EncodedMicroTable { grid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb() -> EmbeddingTable {
        let mut e = EmbeddingTable::new(3);
        e.insert("apple", vec![1.0, 2.0, 3.0]).unwrap();
        e.insert("inc", vec![-1.0, 0.5, 0.0]).unwrap();
        e
    }

    #[test]
    fn tokenization_examples() {
        assert_eq!(tokenize_and_crop("Apple Inc.", 4), ["apple", "inc", "", ""]);
        assert_eq!(tokenize_and_crop("", 3), ["", "", ""]);
        assert_eq!(tokenize_and_crop("a b c d e", 3), ["a", "b", "c"]);
    }

    #[test]
    fn entity_cell_embedding() {
        let e = emb();
        assert!(embed_entity_cell("unknown words", &e, 4).iter().all(|&v| v == 0.0));
        let m = embed_entity_cell("Apple", &e, 2);
        assert_eq!(m.row(0).to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(m.row(1).to_vec(), vec![0.0; 3]);
        assert_eq!(embed_entity_cell("Apple Inc", &e, 5), embed_entity_cell("Apple Inc", &e, 5));
        assert_eq!(embed_entity_cell("Apple Inc", &e, 5).dim(), (5, 3));
    }

    #[test]
    fn mean_vector() {
        let e = emb();
        assert_eq!(mean_word_vector("Apple Inc.", &e, 10).to_vec(), vec![0.0, 1.25, 1.5]);
        assert_eq!(mean_word_vector("", &e, 10).to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn number_cells() {
        assert!(encode_number_cell("0", 4).iter().all(|&v| v == 0.0));
        assert!(encode_number_cell("abc", 4).iter().all(|&v| v == 0.0));
        let v = encode_number_cell("1000", 4);
        assert!((v[0] - 1.0f64.tanh()).abs() < 1e-15);
        assert!((v[0] - 0.761_594_155_955_764_9).abs() < 1e-12);
        assert_eq!(&v.to_vec()[1..], &[0.0; 3]);
    }

    #[test]
    fn date_cells() {
        let v = encode_date_cell("1997-05-12", 5);
        assert_eq!(v.to_vec(), vec![1997.0 / 3000.0, 5.0 / 12.0, 12.0 / 31.0, 0.0, 0.0]);
        let v = encode_date_cell("1997", 4);
        assert_eq!(v.to_vec(), vec![1997.0 / 3000.0, 0.0, 0.0, 0.0]);
        assert!(encode_date_cell("not a date", 4).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn embedding_file_with_and_without_header() {
        let text = "2 3\napple 1 2 3\ninc -1 0.5 0\n";
        let e = EmbeddingTable::read(text.as_bytes(), "mem").unwrap();
        assert_eq!(e, emb());
        let e = EmbeddingTable::read("apple 1 2 3\ninc -1 0.5 0\n".as_bytes(), "mem").unwrap();
        assert_eq!(e, emb());
        let back = EmbeddingTable::read(e.to_text().as_bytes(), "mem").unwrap();
        assert_eq!(back, e);
        let err = EmbeddingTable::read("apple 1 2 3\ninc 1 x 0\n".as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("mem:2"));
        let err = EmbeddingTable::read("apple 1 2 3\ninc 1 0\n".as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("mem:2"));
    }

    proptest! {
        #[test]
        fn deterministic_vectors_bounded(text in "(-?[0-9]{1,9}(\\.[0-9]{1,3})?|[0-9]{4}-[01][0-9]-[0-3][0-9]|[0-9]{4}|[a-z ]{0,6})") {
            for v in encode_number_cell(&text, 6).iter().chain(encode_date_cell(&text, 6).iter()) {
                prop_assert!((-1.0..=1.0).contains(v));
            }
        }

        #[test]
        fn entity_shape_is_fixed(phrase in "[a-z ]{0,80}", t in 1usize..12) {
            prop_assert_eq!(embed_entity_cell(&phrase, &emb(), t).dim(), (t, 3));
        }
    }
}
