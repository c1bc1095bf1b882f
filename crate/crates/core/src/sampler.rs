//! Micro-table extraction by sliding window, training-set assembly and
//! column-level dataset splits.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Cell, ClassCatalog, Column, ColumnKind, MicroTable, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub micro_table: MicroTable,
    pub label: usize,
}

/// A labeled target column of some table.
#[derive(Debug, Clone, Copy)]
pub struct LabeledColumn<'a> {
    pub table: &'a Table,
    pub column_index: usize,
    pub class_id: &'a str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraction: f64,
}

fn window(column: &Column, start: usize, m: usize) -> Column {
    let mut cells: Vec<Cell> = column.cells.iter().skip(start).take(m).cloned().collect();
    cells.resize(m, Cell::empty());
    Column::new(cells, column.kind)
}

/// Slides an `m`-row window down the target column with step one. The
/// surrounding columns are the first `l` other columns, left to right,
/// padded with empty columns when the table is too narrow. A column shorter
/// than `m` yields a single padded micro table.
pub fn extract_micro_tables(
    table: &Table,
    target_index: usize,
    m: usize,
    l: usize,
) -> Result<Vec<MicroTable>> {
    if m == 0 {
        return Err(Error::Config("micro table needs m >= 1".into()));
    }
    let target = table.column(target_index)?;
    if target.kind != ColumnKind::Entity {
        return Err(Error::NotEntityColumn {
            table: table.id.clone(),
            index: target_index,
            kind: target.kind.to_string(),
        });
    }
    let mut others: Vec<&Column> = table
        .columns
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_index)
        .map(|(_, c)| c)
        .take(l)
        .collect();
    let padding = Column::empty(0);
    others.resize(l, &padding);

    let rows = target.len();
    let windows = if rows >= m { rows - m + 1 } else { 1 };
    Ok((0..windows)
        .map(|start| MicroTable {
            target: window(target, start, m),
            surrounding: others.iter().map(|c| window(c, start, m)).collect(),
        })
        .collect())
}

/// Concatenates the micro tables of every labeled column, in input order and
/// then window order.
pub fn build_training_set(
    labeled: &[LabeledColumn<'_>],
    catalog: &ClassCatalog,
    m: usize,
    l: usize,
) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for col in labeled {
        let label = catalog.index_of(col.class_id)?;
        for micro_table in extract_micro_tables(col.table, col.column_index, m, l)? {
            out.push(Sample { micro_table, label });
        }
    }
    Ok(out)
}

/// Seeded column-level split: `floor(fraction * n)` items go to training.
/// Both halves keep the input order.
pub fn split_dataset<T: Clone>(items: &[T], spec: SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let n = items.len();
    // the epsilon keeps 0.7 * 10 from flooring to 6 on representation error
    let n_train = ((spec.train_fraction * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        train_idx.into_iter().map(|i| items[i].clone()).collect(),
        test_idx.into_iter().map(|i| items[i].clone()).collect(),
    ))
}

#[derive(Serialize, Deserialize)]
struct ManifestColumn {
    kind: ColumnKind,
    cells: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    target: Vec<String>,
    surrounding: Vec<ManifestColumn>,
    label: usize,
}

fn texts(col: &Column) -> Vec<String> {
    col.cells.iter().map(|c| c.raw_text.clone()).collect()
}

/// Writes one JSON object per sample.
pub fn write_manifest<W: Write>(samples: &[Sample], mut writer: W) -> Result<()> {
    for s in samples {
        let line = ManifestLine {
            target: texts(&s.micro_table.target),
            surrounding: s
                .micro_table
                .surrounding
                .iter()
                .map(|c| ManifestColumn {
                    kind: c.kind,
                    cells: texts(c),
                })
                .collect(),
            label: s.label,
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
    }
    Ok(())
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<manifest>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: ManifestLine = serde_json::from_str(&line).map_err(|e| Error::Syntax {
            path: "<manifest>".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let cells = |v: Vec<String>| v.into_iter().map(Cell::new).collect();
        out.push(Sample {
            micro_table: MicroTable {
                target: Column::new(cells(raw.target), ColumnKind::Entity),
                surrounding: raw
                    .surrounding
                    .into_iter()
                    .map(|c| Column::new(cells(c.cells), c.kind))
                    .collect(),
            },
            label: raw.label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::validate_micro_table;
    use proptest::prelude::*;

    fn table(rows: usize, cols: usize) -> Table {
        let columns: Vec<Vec<String>> = (0..cols)
            .map(|c| (0..rows).map(|r| format!("name{c} row{r}")).collect())
            .collect();
        Table::from_columns("t", &columns)
    }

    #[test]
    fn window_count_and_surrounding() {
        let t = table(6, 5);
        let mts = extract_micro_tables(&t, 0, 5, 4).unwrap();
        assert_eq!(mts.len(), 2);
        assert_eq!(mts[1].target.cells[0].raw_text, "name0 row1");
        assert_eq!(mts[1].surrounding[3].cells[4].raw_text, "name4 row5");
        for mt in &mts {
            assert!(validate_micro_table(mt, 5, 4).is_empty());
        }
    }

    #[test]
    fn short_column_is_padded() {
        let mts = extract_micro_tables(&table(3, 2), 0, 5, 4).unwrap();
        assert_eq!(mts.len(), 1);
        assert!(mts[0].target.cells[3].is_empty() && mts[0].target.cells[4].is_empty());
        assert!(validate_micro_table(&mts[0], 5, 4).is_empty());
    }

    #[test]
    fn single_column_gets_empty_surroundings() {
        let mts = extract_micro_tables(&table(7, 1), 0, 5, 4).unwrap();
        assert_eq!(mts.len(), 3);
        for mt in &mts {
            assert_eq!(mt.surrounding.len(), 4);
            assert!(mt.surrounding.iter().all(|c| c.cells.iter().all(Cell::is_empty)));
        }
    }

    #[test]
    fn surrounding_skips_target_left_to_right() {
        let mts = extract_micro_tables(&table(5, 4), 2, 5, 2).unwrap();
        assert_eq!(mts[0].surrounding[0].cells[0].raw_text, "name0 row0");
        assert_eq!(mts[0].surrounding[1].cells[0].raw_text, "name1 row0");
    }

    #[test]
    fn extraction_errors() {
        let t = table(5, 2);
        assert!(matches!(
            extract_micro_tables(&t, 9, 5, 4),
            Err(Error::ColumnOutOfRange { .. })
        ));
        let numeric = Table::from_columns("n", &[vec!["1", "2", "3"]]);
        assert!(matches!(
            extract_micro_tables(&numeric, 0, 5, 4),
            Err(Error::NotEntityColumn { .. })
        ));
    }

    #[test]
    fn training_set_examples() {
        let cat = ClassCatalog::from_pairs(&[("a", ":A"), ("b", ":B")]).unwrap();
        let t6 = table(6, 3);
        let one = [LabeledColumn { table: &t6, column_index: 0, class_id: "b" }];
        let s = build_training_set(&one, &cat, 5, 4).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.label == 1));

        assert!(build_training_set(&[], &cat, 5, 4).unwrap().is_empty());

        let t5 = table(5, 2);
        let two = [
            LabeledColumn { table: &t5, column_index: 0, class_id: "a" },
            LabeledColumn { table: &t5, column_index: 1, class_id: "b" },
        ];
        assert_eq!(build_training_set(&two, &cat, 5, 4).unwrap().len(), 2);

        let bad = [LabeledColumn { table: &t5, column_index: 0, class_id: "zzz" }];
        assert!(matches!(build_training_set(&bad, &cat, 5, 4), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn split_sizes() {
        let items: Vec<usize> = (0..10).collect();
        let spec = SplitSpec { seed: 3, train_fraction: 0.7 };
        let (tr, te) = split_dataset(&items, spec).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        assert_eq!(split_dataset(&items, spec).unwrap(), (tr, te));

        let items: Vec<usize> = (0..411).collect();
        let (tr, te) = split_dataset(&items, spec).unwrap();
        assert_eq!((tr.len(), te.len()), (287, 124));

        assert!(split_dataset(&items, SplitSpec { seed: 0, train_fraction: 1.0 }).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let cat = ClassCatalog::from_pairs(&[("a", ":A")]).unwrap();
        let t = Table::from_columns("t", &[vec!["x", "y"], vec!["1", "2"]]);
        let s = build_training_set(
            &[LabeledColumn { table: &t, column_index: 0, class_id: "a" }],
            &cat,
            2,
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_manifest(&s, &mut buf).unwrap();
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn window_count_formula(rows in 0usize..20, m in 1usize..8, cols in 1usize..6, l in 0usize..5) {
            let t = table(rows, cols);
            let n = extract_micro_tables(&t, 0, m, l).unwrap().len();
            prop_assert_eq!(n, if rows >= m { rows - m + 1 } else { 1 });
        }

        #[test]
        fn split_is_a_partition(n in 0usize..60, seed in any::<u64>(), frac in 0.05f64..0.95) {
            let items: Vec<usize> = (0..n).collect();
            let (mut tr, te) = split_dataset(&items, SplitSpec { seed, train_fraction: frac }).unwrap();
            prop_assert!(tr.iter().all(|x| !te.contains(x)));
            tr.extend(te);
            tr.sort_unstable();
            prop_assert_eq!(tr, items);
        }
    }
}
