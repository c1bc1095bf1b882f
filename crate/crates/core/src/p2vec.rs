//! Candidate-property mining and property-vector (P2Vec) extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, ObjectValue};
use crate::literal::{cell_year, literal_year, normalize_label, parse_number};
use crate::table::{ClassCatalog, MicroTable};

pub use crate::similarity::jaro_similarity;

pub const DEFAULT_SIGMA: f64 = 0.005;
pub const DEFAULT_N_LOOKUP: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.85;

/// The merged frequent properties `P`, IRI-sorted so that slot `i` of every
/// property vector means the same property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePropertySet {
    pub sigma: f64,
    /// class id → that class's frequent properties, IRI-sorted
    #[serde(rename = "classes")]
    pub per_class: BTreeMap<String, Vec<String>>,
    pub properties: Vec<String>,
}

impl CandidatePropertySet {
    pub fn new(sigma: f64, per_class: BTreeMap<String, Vec<String>>) -> Self {
        let merged: BTreeSet<&String> = per_class.values().flatten().collect();
        let properties = merged.into_iter().cloned().collect();
        CandidatePropertySet {
            sigma,
            per_class,
            properties,
        }
    }

    pub fn d1(&self) -> usize {
        self.properties.len()
    }

    pub fn index_of(&self, property: &str) -> Option<usize> {
        self.properties.binary_search_by(|p| p.as_str().cmp(property)).ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut set: CandidatePropertySet = serde_json::from_str(text)?;
        set.properties.sort();
        set.properties.dedup();
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Finds, for every catalog class, the properties held by at least a
/// fraction `sigma` of its entities.
///
/// Issues one entities-of-class query per class and one triples query per
/// distinct entity across all classes.
pub fn mine_candidate_properties(
    catalog: &ClassCatalog,
    sigma: f64,
    kb: &dyn KnowledgeBase,
) -> Result<CandidatePropertySet> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Config(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    let members: Vec<Vec<String>> = catalog
        .classes()
        .iter()
        .map(|c| kb.entities_of_class(&c.kb_iri))
        .collect::<Result<_>>()?;
    let unique: BTreeSet<&String> = members.iter().flatten().collect();
    let unique: Vec<&String> = unique.into_iter().collect();
    let props: Vec<BTreeSet<String>> = unique
        .par_iter()
        .map(|e| {
            Ok(kb
                .triples_of_subject(e)?
                .into_iter()
                .map(|t| t.predicate)
                .collect())
        })
        .collect::<Result<_>>()?;
    let props_of: HashMap<&String, &BTreeSet<String>> = unique.iter().copied().zip(&props).collect();

    let mut per_class = BTreeMap::new();
    for (class, entities) in catalog.classes().iter().zip(&members) {
        if entities.is_empty() {
            log::warn!("class {} has no entities; it contributes no properties", class.kb_iri);
            per_class.insert(class.class_id.clone(), Vec::new());
            continue;
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for e in entities {
            for p in props_of[e] {
                *counts.entry(p.as_str()).or_default() += 1;
            }
        }
        let n = entities.len() as f64;
        let frequent = counts
            .into_iter()
            .filter(|&(_, c)| c as f64 / n >= sigma)
            .map(|(p, _)| p.to_string())
            .collect();
        per_class.insert(class.class_id.clone(), frequent);
    }
    Ok(CandidatePropertySet::new(sigma, per_class))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2VecParams {
    /// maximum number of entities looked up per main cell
    pub n_lookup: usize,
    /// similarity threshold of the main-cell lookup
    pub alpha_lookup: f64,
    /// similarity threshold of text and entity object matching
    pub alpha_match: f64,
}

impl Default for P2VecParams {
    fn default() -> Self {
        P2VecParams {
            n_lookup: DEFAULT_N_LOOKUP,
            alpha_lookup: DEFAULT_ALPHA,
            alpha_match: DEFAULT_ALPHA,
        }
    }
}

impl P2VecParams {
    /// Both thresholds set to the same `alpha`.
    pub fn with_alpha(n_lookup: usize, alpha: f64) -> Self {
        P2VecParams {
            n_lookup,
            alpha_lookup: alpha,
            alpha_match: alpha,
        }
    }
}

/// Local name of an IRI with underscores read as spaces, used as the label
/// of entities that carry no English label.
pub fn iri_local_name(iri: &str) -> String {
    let tail = iri.rsplit(['/', '#', ':']).next().unwrap_or(iri);
    tail.replace('_', " ")
}

fn text_match(cell: &str, other: &str, alpha: f64) -> bool {
    jaro_similarity(cell, &normalize_label(other)) >= alpha
}

/// Compares a cell against a triple object: entity labels and text by Jaro
/// over normalized strings, dates by year, numbers by exact value. A cell
/// that is empty after normalization never matches text or entities.
pub fn cell_object_match(cell_text: &str, object: &ObjectValue, alpha: f64, kb: &dyn KnowledgeBase) -> Result<bool> {
    let mut labels = HashMap::new();
    match_with_labels(cell_text, object, alpha, kb, &mut labels)
}

fn match_with_labels(
    cell_text: &str,
    object: &ObjectValue,
    alpha: f64,
    kb: &dyn KnowledgeBase,
    labels: &mut HashMap<String, Vec<String>>,
) -> Result<bool> {
    Ok(match object {
        ObjectValue::Number { value } => parse_number(cell_text) == Some(*value),
        ObjectValue::Date { value } => match (cell_year(cell_text), literal_year(value)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        },
        ObjectValue::Text { value, .. } => {
            let cell = normalize_label(cell_text);
            !cell.is_empty() && text_match(&cell, value, alpha)
        }
        ObjectValue::Entity { iri } => {
            let cell = normalize_label(cell_text);
            if cell.is_empty() {
                return Ok(false);
            }
            if !labels.contains_key(iri) {
                let mut found = kb.labels_of(iri)?;
                if found.is_empty() {
                    found.push(iri_local_name(iri));
                }
                labels.insert(iri.clone(), found);
            }
            labels[iri].iter().any(|l| text_match(&cell, l, alpha))
        }
    })
}

/// Binary property indicators, L2-normalized. All-zero when nothing matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyVector(pub Vec<f64>);

impl PropertyVector {
    pub fn zeros(d1: usize) -> Self {
        PropertyVector(vec![0.0; d1])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Indices of the set slots.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
    }

    fn normalize(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.0.iter_mut().for_each(|v| *v /= n);
        }
        self
    }
}

/// Work done by one extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub looked_up: usize,
    pub triple_queries: usize,
    pub match_calls: usize,
}

/// Property vector of a micro table: look up the main cell, fetch the
/// triples of each matched entity, and set the slot of every candidate
/// property whose object matches the first cell of some surrounding
/// column.
pub fn p2vec_extract(
    mt: &MicroTable,
    properties: &CandidatePropertySet,
    params: &P2VecParams,
    kb: &dyn KnowledgeBase,
) -> Result<PropertyVector> {
    p2vec_extract_with_stats(mt, properties, params, kb).map(|(v, _)| v)
}

pub fn p2vec_extract_with_stats(
    mt: &MicroTable,
    properties: &CandidatePropertySet,
    params: &P2VecParams,
    kb: &dyn KnowledgeBase,
) -> Result<(PropertyVector, ExtractStats)> {
    let mut v = PropertyVector::zeros(properties.d1());
    let mut stats = ExtractStats::default();
    if params.n_lookup == 0 || properties.d1() == 0 {
        return Ok((v, stats));
    }
    let row: Vec<&str> = mt
        .surrounding
        .iter()
        .filter_map(|c| c.cells.first().map(|c| c.raw_text.as_str()))
        .collect();
    let mut labels = HashMap::new();
    let hits = kb.entity_lookup(&mt.main_cell().raw_text, params.alpha_lookup, params.n_lookup)?;
    stats.looked_up = hits.len();
    for hit in hits.iter().take(params.n_lookup) {
        stats.triple_queries += 1;
        for triple in kb.triples_of_subject(&hit.iri)? {
            let Some(slot) = properties.index_of(&triple.predicate) else { continue };
            if v.0[slot] != 0.0 {
                continue;
            }
            for cell in &row {
                stats.match_calls += 1;
                if match_with_labels(cell, &triple.object, params.alpha_match, kb, &mut labels)? {
                    v.0[slot] = 1.0;
                    break;
                }
            }
        }
    }
    Ok((v.normalize(), stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub sample_id: String,
    pub v: PropertyVector,
}

/// Writes one `{"sample_id", "v"}` object per line.
pub fn write_vectors<W: Write>(records: &[VectorRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<vectors>", e))?;
    }
    Ok(())
}

pub fn read_vectors<R: BufRead>(reader: R, source: &str) -> Result<Vec<VectorRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Syntax {
            path: source.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
