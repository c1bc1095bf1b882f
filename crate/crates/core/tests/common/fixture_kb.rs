//! Small random knowledge bases kept both as plain Rust facts (for the
//! oracles) and as N-Triples (for the code under test), plus brute-force
//! references for P2Vec extraction and property mining.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use tabsema::kb::{KbSnapshot, SnapshotOptions};
use tabsema::table::{Cell, ClassCatalog, Column, ColumnKind, MicroTable};

pub const NS: &str = "http://fx.example/";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
const RDFS_SUB: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

const SYLLABLES: [&str; 10] = ["ka", "lo", "mi", "ra", "te", "su", "no", "be", "ri", "da"];

#[derive(Debug, Clone, PartialEq)]
pub enum Obj {
    Entity(usize),
    Text(String),
    Int(i64),
    Date(i32, u32, u32),
}

#[derive(Debug, Clone)]
pub struct FxEntity {
    pub iri: String,
    pub labels: Vec<String>,
    pub class: usize,
    pub facts: Vec<(String, Obj)>,
}

#[derive(Debug, Clone)]
pub struct FixtureKb {
    /// class IRIs; class 1 is a subclass of class 0
    pub classes: Vec<String>,
    pub entities: Vec<FxEntity>,
    pub properties: Vec<String>,
}

fn word<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

impl FixtureKb {
    /// At most 200 triples in total.
    pub fn generate<R: Rng>(rng: &mut R) -> Self {
        let classes: Vec<String> = (0..4).map(|i| format!("{NS}class/C{i}")).collect();
        let properties: Vec<String> = (0..6).map(|i| format!("{NS}prop/p{i}")).collect();
        let n = rng.gen_range(6..=16);
        let mut entities: Vec<FxEntity> = Vec::new();
        let mut used = BTreeSet::new();
        for i in 0..n {
            let labels: Vec<String> = match rng.gen_range(0..6) {
                0 => Vec::new(),
                1 => vec![format!("{} {}", word(rng), word(rng)), word(rng)],
                _ => vec![if rng.gen_bool(0.5) {
                    word(rng)
                } else {
                    format!("{} {}", word(rng), word(rng))
                }],
            };
            let local = match labels.first() {
                Some(l) if used.insert(l.clone()) => l.replace(' ', "_"),
                _ => format!("E{i}"),
            };
            entities.push(FxEntity {
                iri: format!("{NS}e/{local}"),
                labels,
                class: rng.gen_range(0..classes.len()),
                facts: Vec::new(),
            });
        }
        for i in 0..n {
            let k = rng.gen_range(0..=6);
            for _ in 0..k {
                let p = properties.choose(rng).unwrap().clone();
                let o = match rng.gen_range(0..4) {
                    0 => Obj::Entity(rng.gen_range(0..n)),
                    1 => Obj::Text(word(rng)),
                    2 => Obj::Int(rng.gen_range(1..60)),
                    _ => Obj::Date(rng.gen_range(1990..2000), rng.gen_range(1..=12), rng.gen_range(1..=28)),
                };
                if !entities[i].facts.contains(&(p.clone(), o.clone())) {
                    entities[i].facts.push((p, o));
                }
            }
        }
        FixtureKb {
            classes,
            entities,
            properties,
        }
    }

    pub fn ntriples(&self) -> String {
        let mut out = format!("<{}> <{RDFS_SUB}> <{}> .\n", self.classes[1], self.classes[0]);
        for e in &self.entities {
            out += &format!("<{}> <{RDF_TYPE}> <{}> .\n", e.iri, self.classes[e.class]);
            for l in &e.labels {
                out += &format!("<{}> <{RDFS_LABEL}> \"{l}\"@en .\n", e.iri);
            }
            for (p, o) in &e.facts {
                let obj = match o {
                    Obj::Entity(j) => format!("<{}>", self.entities[*j].iri),
                    Obj::Text(t) => format!("\"{t}\"@en"),
                    Obj::Int(v) => format!("\"{v}\"^^<{XSD}integer>"),
                    Obj::Date(y, m, d) => format!("\"{y}-{m:02}-{d:02}\"^^<{XSD}date>"),
                };
                out += &format!("<{}> <{p}> {obj} .\n", e.iri);
            }
        }
        out
    }

    pub fn num_triples(&self) -> usize {
        1 + self
            .entities
            .iter()
            .map(|e| 1 + e.labels.len() + e.facts.len())
            .sum::<usize>()
    }

    pub fn snapshot(&self) -> KbSnapshot {
        KbSnapshot::build(self.ntriples().as_bytes(), "fixture", SnapshotOptions::default()).unwrap()
    }

    pub fn catalog(&self) -> ClassCatalog {
        let pairs: Vec<(String, String)> =
            self.classes.iter().enumerate().map(|(i, c)| (format!("c{i}"), c.clone())).collect();
        ClassCatalog::from_pairs(&pairs).unwrap()
    }

    /// Entities whose class is `class` or, for class 0, its subclass.
    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.entities.len())
            .filter(|&i| {
                let c = self.entities[i].class;
                c == class || (class == 0 && c == 1)
            })
            .collect()
    }

    /// Text a table cell would show for an object.
    pub fn render(&self, o: &Obj, year_only: bool) -> String {
        match o {
            Obj::Entity(j) => self.entities[*j].labels.first().cloned().unwrap_or_else(|| local_name(&self.entities[*j].iri)),
            Obj::Text(t) => t.clone(),
            Obj::Int(v) => v.to_string(),
            Obj::Date(y, m, d) if !year_only => format!("{y}-{m:02}-{d:02}"),
            Obj::Date(y, _, _) => y.to_string(),
        }
    }

    /// A 3×(1+3) micro table about a random entity, with typos and noise.
    pub fn micro_table<R: Rng>(&self, rng: &mut R) -> MicroTable {
        let e = &self.entities[rng.gen_range(0..self.entities.len())];
        let mut main = match e.labels.choose(rng) {
            Some(l) if rng.gen_bool(0.8) => l.clone(),
            _ => word(rng),
        };
        if rng.gen_bool(0.3) && main.len() > 3 {
            let mut chars: Vec<char> = main.chars().collect();
            let i = rng.gen_range(0..chars.len() - 1);
            chars.swap(i, i + 1);
            main = chars.into_iter().collect();
        }
        let surrounding = (0..3)
            .map(|_| {
                let first = match e.facts.choose(rng) {
                    Some((_, o)) if rng.gen_bool(0.7) => self.render(o, rng.gen_bool(0.3)),
                    _ => match rng.gen_range(0..3) {
                        0 => word(rng),
                        1 => rng.gen_range(1..60).to_string(),
                        _ => String::new(),
                    },
                };
                let kind = if first.parse::<f64>().is_ok() { ColumnKind::Number } else { ColumnKind::Entity };
                Column::new(vec![Cell::new(first), Cell::new(word(rng)), Cell::empty()], kind)
            })
            .collect();
        MicroTable {
            target: Column::new(vec![Cell::new(main), Cell::new(word(rng)), Cell::empty()], ColumnKind::Entity),
            surrounding,
        }
    }
}

pub fn local_name(iri: &str) -> String {
    iri.rsplit('/').next().unwrap().replace('_', " ")
}

/// Lowercase, split on anything that is not alphanumeric, single spaces.
pub fn norm(s: &str) -> String {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn jaro(a: &str, b: &str) -> f64 {
    super::jaro_ref::jaro(a, b)
}

fn cell_matches(fx: &FixtureKb, cell: &str, o: &Obj, alpha: f64) -> bool {
    let trimmed = cell.trim();
    match o {
        Obj::Int(v) => trimmed.parse::<f64>().ok() == Some(*v as f64),
        Obj::Date(y, _, _) => {
            let year = if trimmed.len() >= 10 && trimmed.as_bytes()[4] == b'-' {
                trimmed[..4].parse::<i32>().ok()
            } else {
                trimmed.parse::<i64>().ok().and_then(|n| i32::try_from(n).ok())
            };
            year == Some(*y)
        }
        Obj::Text(t) => {
            let c = norm(cell);
            !c.is_empty() && jaro(&c, &norm(t)) >= alpha
        }
        Obj::Entity(j) => {
            let c = norm(cell);
            let ent = &fx.entities[*j];
            let labels = if ent.labels.is_empty() { vec![local_name(&ent.iri)] } else { ent.labels.clone() };
            !c.is_empty() && labels.iter().any(|l| jaro(&c, &norm(l)) >= alpha)
        }
    }
}

/// Lookup by scanning every labeled entity.
pub fn oracle_lookup(fx: &FixtureKb, phrase: &str, alpha: f64, n: usize) -> Vec<usize> {
    let p = norm(phrase);
    if p.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<(f64, &str, usize)> = fx
        .entities
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.labels.is_empty())
        .map(|(i, e)| {
            let s = e.labels.iter().map(|l| jaro(&p, &norm(l))).fold(0.0, f64::max);
            (s, e.iri.as_str(), i)
        })
        .filter(|h| h.0 >= alpha)
        .collect();
    hits.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    hits.into_iter().take(n).map(|h| h.2).collect()
}

/// `v[p] = 1` iff some looked-up entity has a `p` fact matching some first
/// cell of a surrounding column; then L2-normalized.
pub fn oracle_p2vec(
    fx: &FixtureKb,
    properties: &[String],
    mt: &MicroTable,
    n: usize,
    alpha_lookup: f64,
    alpha_match: f64,
) -> Vec<f64> {
    let hits = oracle_lookup(fx, &mt.target.cells[0].raw_text, alpha_lookup, n);
    let row: Vec<&str> = mt.surrounding.iter().map(|c| c.cells[0].raw_text.as_str()).collect();
    let mut v: Vec<f64> = properties
        .iter()
        .map(|p| {
            let hit = hits.iter().any(|&e| {
                fx.entities[e]
                    .facts
                    .iter()
                    .filter(|(q, _)| q == p)
                    .any(|(_, o)| row.iter().any(|c| cell_matches(fx, c, o, alpha_match)))
            });
            if hit {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Per class id, the properties held by at least `sigma` of its entities,
/// by counting directly over the facts.
pub fn oracle_mining(fx: &FixtureKb, sigma: f64) -> BTreeMap<String, Vec<String>> {
    (0..fx.classes.len())
        .map(|c| {
            let members = fx.members(c);
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for &e in &members {
                let props: BTreeSet<&str> = fx.entities[e].facts.iter().map(|(p, _)| p.as_str()).collect();
                for p in props {
                    *counts.entry(p).or_default() += 1;
                }
            }
            let keep = counts
                .into_iter()
                .filter(|&(_, k)| !members.is_empty() && k as f64 / members.len() as f64 >= sigma)
                .map(|(p, _)| p.to_string())
                .collect();
            (format!("c{c}"), keep)
        })
        .collect()
}
