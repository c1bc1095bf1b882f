//! Seeded synthetic corpus: a small four-class KB, word vectors whose
//! geometry loosely follows the classes, and labeled web-style tables whose
//! surrounding columns hold KB facts about the row entity.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::kb::{KbSnapshot, SnapshotOptions, RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE, XSD};
use crate::table::{write_gold, ClassCatalog, GoldLabel, Table};

pub const NS: &str = "http://synth.example/";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub entities_per_class: usize,
    pub columns: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    pub word_dim: usize,
    /// share of table rows naming entities absent from the KB
    pub out_of_kb: f64,
    /// per-coordinate noise added to class centroids in the word vectors
    pub noise: f64,
    /// share of each class's name vocabulary drawn from a pool common to all classes
    pub shared_vocab: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            entities_per_class: 60,
            columns: 200,
            min_rows: 5,
            max_rows: 10,
            word_dim: 50,
            out_of_kb: 0.3,
            noise: 2.5,
            shared_vocab: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub ntriples: String,
    pub kb: KbSnapshot,
    pub catalog: ClassCatalog,
    pub embeddings: EmbeddingTable,
    pub tables: Vec<Table>,
    pub gold: Vec<GoldLabel>,
}

/// Locations written by [`SyntheticDataset::write_to`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub ntriples: PathBuf,
    pub catalog: PathBuf,
    pub embeddings: PathBuf,
    pub tables: PathBuf,
    pub gold: PathBuf,
}

const CLASSES: [(&str, &str); 4] = [("film", "Film"), ("book", "Book"), ("company", "Company"), ("city", "City")];
const CLASS_WEIGHTS: [f64; 4] = [0.3, 0.25, 0.25, 0.2];
const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

struct Words {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
}

impl Words {
    fn fresh(&mut self) -> String {
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(CONSONANTS[self.rng.gen_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[self.rng.gen_range(0..VOWELS.len())] as char);
            }
            if self.rng.gen_bool(0.5) {
                w.push(CONSONANTS[self.rng.gen_range(0..CONSONANTS.len())] as char);
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn pool(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.fresh()).collect()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn iri(kind: &str, label: &str) -> String {
    format!("{NS}{kind}/{}", label.replace(' ', "_"))
}

#[derive(Debug, Clone)]
struct Entity {
    label: String,
    /// surrounding-cell texts of a table row about this entity
    row: Vec<String>,
}

struct Builder {
    cfg: SyntheticConfig,
    rng: ChaCha8Rng,
    words: Words,
    nt: String,
    labels: BTreeSet<String>,
}

impl Builder {
    fn triple_iri(&mut self, s: &str, p: &str, o: &str) {
        let _ = writeln!(self.nt, "<{s}> <{p}> <{o}> .");
    }

    fn triple_lit(&mut self, s: &str, p: &str, value: &str, datatype: Option<&str>) {
        let value = value.replace('\\', "\\\\").replace('"', "\\\"");
        match datatype {
            Some(d) => {
                let _ = writeln!(self.nt, "<{s}> <{p}> \"{value}\"^^<{XSD}{d}> .");
            }
            None => {
                let _ = writeln!(self.nt, "<{s}> <{p}> \"{value}\"@en .");
            }
        }
    }

    fn name(&mut self, pool: &[String], words: usize) -> String {
        for attempt in 0.. {
            // a small pool runs out of short names; grow the name instead of spinning
            let words = words + attempt / 64;
            let parts: Vec<String> = (0..words).map(|_| capitalize(pool.choose(&mut self.rng).expect("pool"))).collect();
            let label = parts.join(" ");
            if self.labels.insert(label.clone()) {
                return label;
            }
        }
        unreachable!("unbounded attempts")
    }

    fn date(&mut self, lo: i32, hi: i32) -> String {
        format!(
            "{}-{:02}-{:02}",
            self.rng.gen_range(lo..hi),
            self.rng.gen_range(1..=12),
            self.rng.gen_range(1..=28)
        )
    }

    fn entity(&mut self, class: &str, label: &str) -> String {
        let e = iri("resource", label);
        self.triple_iri(&e, RDF_TYPE, &format!("{NS}ontology/{class}"));
        self.triple_lit(&e, RDFS_LABEL, label, None);
        let id = self.rng.gen_range(10_000..99_999).to_string();
        self.triple_lit(&e, &format!("{NS}ontology/wikiPageID"), &id, Some("integer"));
        e
    }
}

/// Generates the corpus. Every random draw comes from `cfg.seed`.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.min_rows == 0 || cfg.min_rows > cfg.max_rows || cfg.entities_per_class == 0 {
        return Err(Error::Config("synthetic corpus needs 1 <= min_rows <= max_rows and entities".into()));
    }
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        words: Words {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed),
            used: BTreeSet::new(),
        },
        cfg: cfg.clone(),
        nt: String::new(),
        labels: BTreeSet::new(),
    };
    let onto = |c: &str| format!("{NS}ontology/{c}");
    b.triple_iri(&onto("Bank"), RDFS_SUBCLASS_OF, &onto("Company"));
    b.triple_iri(&onto("Company"), RDFS_SUBCLASS_OF, &onto("Organisation"));

    // vocabularies: one pool per class plus people, countries and a common pool
    let shared = b.words.pool(30);
    let mut class_pools: Vec<Vec<String>> = Vec::new();
    for _ in 0..4 {
        let mut pool = b.words.pool(40);
        let n_shared = (40.0 * b.cfg.shared_vocab).round() as usize;
        pool.truncate(40 - n_shared);
        pool.extend(shared.choose_multiple(&mut b.rng, n_shared).cloned());
        class_pools.push(pool);
    }
    let person_pool = b.words.pool(50);
    let country_pool = b.words.pool(12);

    let n = cfg.entities_per_class;
    let people: Vec<String> = (0..n * 2).map(|_| b.name(&person_pool, 2)).collect();
    for p in &people {
        let e = b.entity("Person", p);
        let born = b.date(1900, 1990);
        b.triple_lit(&e, &format!("{NS}ontology/birthDate"), &born, Some("date"));
    }
    let countries: Vec<String> = (0..10).map(|_| b.name(&country_pool, 1)).collect();
    for c in &countries {
        b.entity("Country", c);
    }

    let mut by_class: Vec<Vec<Entity>> = vec![Vec::new(); 4];
    // cities first: companies point at them
    for _ in 0..n {
        let words = 1 + b.rng.gen_range(0..2);
        let label = b.name(&class_pools[3], words);
        let e = b.entity("City", &label);
        let country = countries.choose(&mut b.rng).expect("countries").clone();
        b.triple_iri(&e, &onto("country"), &iri("resource", &country));
        let pop = b.rng.gen_range(20_000..3_000_000).to_string();
        b.triple_lit(&e, &onto("populationTotal"), &pop, Some("integer"));
        by_class[3].push(Entity { label, row: vec![country, pop] });
    }
    let cities: Vec<String> = by_class[3].iter().map(|e| e.label.clone()).collect();
    for (k, (prop, date_prop, num_prop)) in [
        ("director", "releaseDate", "runtime"),
        ("author", "publicationDate", "numberOfPages"),
    ]
    .into_iter()
    .enumerate()
    {
        let class = CLASSES[k].1;
        for _ in 0..n {
            let label = b.name(&class_pools[k], 2);
            let e = b.entity(class, &label);
            let person = people.choose(&mut b.rng).expect("people").clone();
            b.triple_iri(&e, &onto(prop), &iri("resource", &person));
            let date = b.date(1920, 2020);
            b.triple_lit(&e, &onto(date_prop), &date, Some("date"));
            let num = b.rng.gen_range(80..900).to_string();
            b.triple_lit(&e, &onto(num_prop), &num, Some("integer"));
            // books show only the year of publication
            let shown = if k == 1 { date[..4].to_string() } else { date };
            by_class[k].push(Entity { label, row: vec![person, shown, num] });
        }
    }
    for i in 0..n {
        let words = 1 + b.rng.gen_range(1..3);
        let label = b.name(&class_pools[2], words);
        let class = if i % 5 == 0 { "Bank" } else { "Company" };
        let e = b.entity(class, &label);
        let city = cities.choose(&mut b.rng).expect("cities").clone();
        b.triple_iri(&e, &onto("headquarter"), &iri("resource", &city));
        let founded = b.date(1850, 2015);
        b.triple_lit(&e, &onto("foundingDate"), &founded, Some("date"));
        let staff = b.rng.gen_range(10..200_000).to_string();
        b.triple_lit(&e, &onto("numberOfEmployees"), &staff, Some("integer"));
        by_class[2].push(Entity { label, row: vec![city, founded, staff] });
    }

    let catalog = ClassCatalog::from_pairs(
        &CLASSES.iter().map(|(id, c)| (id.to_string(), onto(c))).collect::<Vec<_>>(),
    )?;

    let mut tables = Vec::new();
    let mut gold = Vec::new();
    for t in 0..cfg.columns {
        let r: f64 = b.rng.gen();
        let mut acc = 0.0;
        let k = CLASS_WEIGHTS
            .iter()
            .position(|w| {
                acc += w;
                r < acc
            })
            .unwrap_or(3);
        let rows = b.rng.gen_range(cfg.min_rows..=cfg.max_rows);
        let mut cols: Vec<Vec<String>> = vec![Vec::new(); 1 + by_class[k][0].row.len()];
        for _ in 0..rows {
            let ent = if b.rng.gen_bool(cfg.out_of_kb) {
                // unseen entity: plausible name and row, no KB facts
                let template = by_class[k].choose(&mut b.rng).expect("entities").clone();
                let words = template.label.split(' ').count();
                let label = b.name(&class_pools[k], words);
                let mut row = template.row;
                for cell in row.iter_mut().skip(1) {
                    if cell.parse::<u64>().is_ok() {
                        *cell = b.rng.gen_range(10..9_000).to_string();
                    }
                }
                Entity { label, row }
            } else {
                by_class[k].choose(&mut b.rng).expect("entities").clone()
            };
            cols[0].push(ent.label);
            for (c, v) in ent.row.into_iter().enumerate() {
                cols[c + 1].push(v);
            }
        }
        let id = format!("t{t:03}");
        tables.push(Table::from_columns(id.clone(), &cols));
        gold.push(GoldLabel {
            table_id: id,
            column_index: 0,
            class_id: CLASSES[k].0.to_string(),
        });
    }

    // word vectors: class words near their class centroid, other words near
    // a centroid of their own
    let dim = cfg.word_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe11b);
    let centroid = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let centroids: Vec<Vec<f64>> = (0..7).map(|_| centroid(&mut rng)).collect();
    let mut embeddings = EmbeddingTable::new(dim);
    let groups: Vec<(&[String], Vec<usize>)> = vec![
        (&shared, vec![0, 1, 2, 3]),
        (&class_pools[0], vec![0]),
        (&class_pools[1], vec![1]),
        (&class_pools[2], vec![2]),
        (&class_pools[3], vec![3]),
        (&person_pool, vec![4]),
        (&country_pool, vec![5]),
    ];
    let mut done = BTreeSet::new();
    for (pool, owners) in groups {
        for w in pool {
            if !done.insert(w.clone()) {
                continue;
            }
            let vector = (0..dim)
                .map(|j| {
                    let base = owners.iter().map(|&o| centroids[o][j]).sum::<f64>() / owners.len() as f64;
                    base + cfg.noise * rng.gen_range(-1.0..1.0)
                })
                .collect();
            embeddings.insert(w.clone(), vector)?;
        }
    }

    let kb = KbSnapshot::build(b.nt.as_bytes(), "synthetic", SnapshotOptions::default())?;
    Ok(SyntheticDataset {
        ntriples: b.nt,
        kb,
        catalog,
        embeddings,
        tables,
        gold,
    })
}

impl SyntheticDataset {
    /// Writes `kb.nt`, `catalog.csv`, `embeddings.txt`, `gold.csv` and one
    /// CSV per table under `tables/`.
    pub fn write_to(&self, dir: &Path) -> Result<SyntheticFiles> {
        let files = SyntheticFiles {
            ntriples: dir.join("kb.nt"),
            catalog: dir.join("catalog.csv"),
            embeddings: dir.join("embeddings.txt"),
            tables: dir.join("tables"),
            gold: dir.join("gold.csv"),
        };
        fs::create_dir_all(&files.tables).map_err(|e| Error::io(&files.tables, e))?;
        fs::write(&files.ntriples, &self.ntriples).map_err(|e| Error::io(&files.ntriples, e))?;
        let mut catalog = Vec::new();
        self.catalog.write_csv(&mut catalog)?;
        fs::write(&files.catalog, catalog).map_err(|e| Error::io(&files.catalog, e))?;
        fs::write(&files.embeddings, self.embeddings.to_text()).map_err(|e| Error::io(&files.embeddings, e))?;
        for t in &self.tables {
            let path = files.tables.join(format!("{}.csv", t.id));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            t.write_csv(file)?;
        }
        let mut gold = Vec::new();
        write_gold(&self.gold, &mut gold)?;
        fs::write(&files.gold, gold).map_err(|e| Error::io(&files.gold, e))?;
        Ok(files)
    }
}
