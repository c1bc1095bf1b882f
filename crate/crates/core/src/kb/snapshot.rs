//! In-memory triple store with materialized class closure and a
//! length-bucketed label index.
//!
//! File format: the line `TABSEMA-KB-SNAPSHOT 1` followed by a JSON body
//! `{options, entities, triples, superclasses}`; the lookup index and class
//! membership are rebuilt on load.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ntriples::{self, Statement, Term};
use super::{canonical_order, rank_hits, EntityRecord, KnowledgeBase, LookupHit, ObjectValue, Triple};
use super::{RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE};
use crate::error::{Error, Result};
use crate::literal::normalize_label;
use crate::similarity::{jaro_similarity, jaro_upper_bound};

const MAGIC: &str = "TABSEMA-KB-SNAPSHOT";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotOptions {
    pub label_property: String,
    pub type_property: String,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        SnapshotOptions {
            label_property: RDFS_LABEL.to_string(),
            type_property: RDF_TYPE.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    options: SnapshotOptions,
    entities: Vec<EntityRecord>,
    triples: Vec<Triple>,
    superclasses: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default)]
struct LabelIndex {
    /// normalized label length in chars → (normalized label, entity IRI)
    by_len: BTreeMap<usize, Vec<(String, String)>>,
}

impl LabelIndex {
    fn build(entities: &BTreeMap<String, EntityRecord>) -> Self {
        let mut by_len: BTreeMap<usize, Vec<(String, String)>> = BTreeMap::new();
        for rec in entities.values() {
            for label in &rec.labels {
                let norm = normalize_label(label);
                by_len
                    .entry(norm.chars().count())
                    .or_default()
                    .push((norm, rec.iri.clone()));
            }
        }
        LabelIndex { by_len }
    }

    fn search(&self, phrase: &str, alpha: f64) -> Vec<LookupHit> {
        let len = phrase.chars().count();
        let mut best: HashMap<&str, f64> = HashMap::new();
        for (&label_len, labels) in &self.by_len {
            if jaro_upper_bound(len, label_len) + 1e-12 < alpha {
                continue;
            }
            for (label, iri) in labels {
                let s = jaro_similarity(phrase, label);
                let e = best.entry(iri).or_insert(s);
                *e = e.max(s);
            }
        }
        best.into_iter()
            .map(|(iri, similarity)| LookupHit {
                iri: iri.to_string(),
                similarity,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct KbSnapshot {
    options: SnapshotOptions,
    entities: BTreeMap<String, EntityRecord>,
    triples: BTreeMap<String, Vec<Triple>>,
    /// class → itself plus every transitive superclass
    superclasses: BTreeMap<String, Vec<String>>,
    members: BTreeMap<String, Vec<String>>,
    index: LabelIndex,
}

fn is_english(lang: &Option<String>) -> bool {
    match lang.as_deref() {
        None => true,
        Some(l) => l == "en" || l.starts_with("en-"),
    }
}

fn closure(parents: &BTreeMap<String, BTreeSet<String>>, class: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![class.to_string()];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            if let Some(ps) = parents.get(&c) {
                stack.extend(ps.iter().cloned());
            }
        }
    }
    seen.into_iter().collect()
}

impl KbSnapshot {
    /// Builds a snapshot from parsed statements. Type, label and subclass
    /// statements shape the entity records; every other statement is stored
    /// as a triple.
    pub fn from_statements(statements: &[Statement], options: SnapshotOptions) -> Self {
        let mut labels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut types: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut subjects: BTreeSet<String> = BTreeSet::new();
        let mut triples: BTreeMap<String, Vec<Triple>> = BTreeMap::new();
        for st in statements {
            let Some(subject) = st.subject.node_id() else { continue };
            if st.predicate == RDFS_SUBCLASS_OF {
                if let Some(parent) = st.object.node_id() {
                    parents.entry(subject.to_string()).or_default().insert(parent.to_string());
                    continue;
                }
            }
            if st.predicate == options.type_property {
                if let Some(class) = st.object.node_id() {
                    types.entry(subject.to_string()).or_default().insert(class.to_string());
                    subjects.insert(subject.to_string());
                    continue;
                }
            }
            if st.predicate == options.label_property {
                if let Term::Literal { value, lang, .. } = &st.object {
                    if is_english(lang) {
                        labels.entry(subject.to_string()).or_default().insert(value.clone());
                    }
                    subjects.insert(subject.to_string());
                    continue;
                }
            }
            subjects.insert(subject.to_string());
            let object = match &st.object {
                Term::Iri(i) | Term::Blank(i) => ObjectValue::Entity { iri: i.clone() },
                Term::Literal { value, lang, datatype } => {
                    ObjectValue::from_literal(value, lang.as_deref(), datatype.as_deref())
                }
            };
            triples.entry(subject.to_string()).or_default().push(Triple {
                subject: subject.to_string(),
                predicate: st.predicate.clone(),
                object,
            });
        }
        for list in triples.values_mut() {
            canonical_order(list);
        }

        let mut all_classes: BTreeSet<String> = parents.keys().cloned().collect();
        all_classes.extend(parents.values().flatten().cloned());
        all_classes.extend(types.values().flatten().cloned());
        let superclasses: BTreeMap<String, Vec<String>> =
            all_classes.iter().map(|c| (c.clone(), closure(&parents, c))).collect();

        let entities = subjects
            .into_iter()
            .map(|iri| {
                let mut classes = BTreeSet::new();
                for t in types.get(&iri).into_iter().flatten() {
                    classes.extend(superclasses[t].iter().cloned());
                }
                let rec = EntityRecord {
                    labels: labels.remove(&iri).map(|s| s.into_iter().collect()).unwrap_or_default(),
                    classes: classes.into_iter().collect(),
                    iri: iri.clone(),
                };
                (iri, rec)
            })
            .collect();
        Self::assemble(options, entities, triples, superclasses)
    }

    fn assemble(
        options: SnapshotOptions,
        entities: BTreeMap<String, EntityRecord>,
        triples: BTreeMap<String, Vec<Triple>>,
        superclasses: BTreeMap<String, Vec<String>>,
    ) -> Self {
        let mut members: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for rec in entities.values() {
            for c in &rec.classes {
                members.entry(c.clone()).or_default().push(rec.iri.clone());
            }
        }
        let index = LabelIndex::build(&entities);
        KbSnapshot {
            options,
            entities,
            triples,
            superclasses,
            members,
            index,
        }
    }

    /// Parses N-Triples and builds the snapshot.
    pub fn build<R: BufRead>(reader: R, source: &str, options: SnapshotOptions) -> Result<Self> {
        let statements = ntriples::read(reader, source)?;
        Ok(Self::from_statements(&statements, options))
    }

    pub fn build_file(path: &Path, options: SnapshotOptions) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::build(std::io::BufReader::new(file), &path.display().to_string(), options)
    }

    pub fn options(&self) -> &SnapshotOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.values().map(Vec::len).sum()
    }

    pub fn entity(&self, iri: &str) -> Option<&EntityRecord> {
        self.entities.get(iri)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    /// Every stored triple, grouped by subject in IRI order.
    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.values().flatten()
    }

    /// Classes known to the snapshot, each with its superclass closure.
    pub fn class_closure(&self) -> &BTreeMap<String, Vec<String>> {
        &self.superclasses
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let file = SnapshotFile {
            options: self.options.clone(),
            entities: self.entities.values().cloned().collect(),
            triples: self.triples().cloned().collect(),
            superclasses: self.superclasses.clone(),
        };
        let mut out = format!("{MAGIC} {SNAPSHOT_VERSION}\n").into_bytes();
        serde_json::to_writer(&mut out, &file)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::Corrupt {
            path: path.to_path_buf(),
            reason,
        };
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("missing snapshot header".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| corrupt("bad header".into()))?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| corrupt("not a KB snapshot".into()))?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let file: SnapshotFile =
            serde_json::from_slice(&bytes[nl + 1..]).map_err(|e| corrupt(e.to_string()))?;
        let mut triples: BTreeMap<String, Vec<Triple>> = BTreeMap::new();
        for t in file.triples {
            triples.entry(t.subject.clone()).or_default().push(t);
        }
        let entities = file.entities.into_iter().map(|e| (e.iri.clone(), e)).collect();
        Ok(Self::assemble(file.options, entities, triples, file.superclasses))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Lookup candidates at threshold `alpha`, unranked.
    pub(crate) fn lookup_candidates(&self, phrase: &str, alpha: f64) -> Vec<LookupHit> {
        let phrase = normalize_label(phrase);
        if phrase.is_empty() {
            return Vec::new();
        }
        self.index.search(&phrase, alpha)
    }
}

impl KnowledgeBase for KbSnapshot {
    fn entities_of_class(&self, class: &str) -> Result<Vec<String>> {
        Ok(match self.members.get(class) {
            Some(m) => m.clone(),
            None => {
                log::debug!("class {class} has no entities in the snapshot");
                Vec::new()
            }
        })
    }

    fn triples_of_subject(&self, entity: &str) -> Result<Vec<Triple>> {
        Ok(self.triples.get(entity).cloned().unwrap_or_default())
    }

    fn entity_lookup(&self, phrase: &str, alpha: f64, limit: usize) -> Result<Vec<LookupHit>> {
        Ok(rank_hits(self.lookup_candidates(phrase, alpha), alpha, limit))
    }

    fn labels_of(&self, entity: &str) -> Result<Vec<String>> {
        Ok(self.entities.get(entity).map(|e| e.labels.clone()).unwrap_or_default())
    }

    fn classes_of(&self, entity: &str) -> Result<Vec<String>> {
        Ok(self.entities.get(entity).map(|e| e.classes.clone()).unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::label_similarity;

    const FIXTURE: &str = r#"
<http://ex.org/Bank> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://ex.org/Company> .
<http://ex.org/Company> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://ex.org/Organisation> .
<http://ex.org/Google> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ex.org/Company> .
<http://ex.org/Google> <http://www.w3.org/2000/01/rdf-schema#label> "Google"@en .
<http://ex.org/Google> <http://www.w3.org/2000/01/rdf-schema#label> "Google LLC" .
<http://ex.org/Google> <http://www.w3.org/2000/01/rdf-schema#label> "Gugel"@de .
<http://ex.org/Google> <http://ex.org/founded> "1998-09-04"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://ex.org/Google> <http://ex.org/hq> <http://ex.org/MountainView> .
<http://ex.org/Google> <http://ex.org/employees> "190000"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://ex.org/Amazon> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ex.org/Company> .
<http://ex.org/Amazon> <http://www.w3.org/2000/01/rdf-schema#label> "Amazon"@en .
<http://ex.org/HSBC> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ex.org/Bank> .
<http://ex.org/HSBC> <http://www.w3.org/2000/01/rdf-schema#label> "HSBC"@en .
<http://ex.org/AppleA> <http://www.w3.org/2000/01/rdf-schema#label> "Apple Inc"@en .
<http://ex.org/AppleB> <http://www.w3.org/2000/01/rdf-schema#label> "Apple Inc."@en .
"#;

    fn fixture() -> KbSnapshot {
        KbSnapshot::build(FIXTURE.as_bytes(), "fixture", SnapshotOptions::default()).unwrap()
    }

    #[test]
    fn queries_on_fixture() {
        let kb = fixture();
        assert_eq!(
            kb.entities_of_class("http://ex.org/Company").unwrap(),
            ["http://ex.org/Amazon", "http://ex.org/Google", "http://ex.org/HSBC"]
        );
        assert_eq!(
            kb.entities_of_class("http://ex.org/Organisation").unwrap().len(),
            3,
            "two-level closure"
        );
        assert_eq!(kb.entities_of_class("http://ex.org/Bank").unwrap(), ["http://ex.org/HSBC"]);
        assert!(kb.entities_of_class("http://ex.org/Nothing").unwrap().is_empty());
        let g = kb.triples_of_subject("http://ex.org/Google").unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|t| t.predicate.starts_with("http://ex.org/")));
        assert!(kb.triples_of_subject("http://ex.org/Nobody").unwrap().is_empty());
        assert_eq!(kb.labels_of("http://ex.org/Google").unwrap(), ["Google", "Google LLC"]);
        assert_eq!(
            kb.classes_of("http://ex.org/HSBC").unwrap(),
            ["http://ex.org/Bank", "http://ex.org/Company", "http://ex.org/Organisation"]
        );
    }

    #[test]
    fn lookup_rules() {
        let kb = fixture();
        let hits = kb.entity_lookup("Amazon", 0.85, 5).unwrap();
        assert_eq!(hits[0].iri, "http://ex.org/Amazon");
        assert_eq!(hits[0].similarity, 1.0);
        // both Apple labels normalize to "apple inc"; the smaller IRI wins the tie
        let hits = kb.entity_lookup("apple inc", 0.85, 1).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].iri, "http://ex.org/AppleA");
        let hits = kb.entity_lookup("Aple Inc", 0.85, 5).unwrap();
        let keep = jaro_similarity("aple inc", "apple inc") >= 0.85;
        assert_eq!(hits.iter().any(|h| h.iri == "http://ex.org/AppleA"), keep);
        assert!(kb.entity_lookup("", 0.0, 5).unwrap().is_empty());
        assert!(kb.entity_lookup("...", 0.0, 5).unwrap().is_empty());
    }

    #[test]
    fn pruned_lookup_equals_full_scan() {
        let kb = fixture();
        for phrase in ["goog", "amazon", "hsbc bank", "apple", "x", "google llc"] {
            for alpha in [0.0, 0.5, 0.7, 0.85, 0.95] {
                let mut brute: Vec<LookupHit> = kb
                    .entities()
                    .filter(|e| !e.labels.is_empty())
                    .map(|e| LookupHit {
                        iri: e.iri.clone(),
                        similarity: label_similarity(&normalize_label(phrase), &e.labels),
                    })
                    .collect();
                brute = rank_hits(brute, alpha, 100);
                assert_eq!(kb.entity_lookup(phrase, alpha, 100).unwrap(), brute, "{phrase} {alpha}");
            }
        }
    }

    #[test]
    fn round_trip_and_empty() {
        let kb = fixture();
        let back = KbSnapshot::from_bytes(&kb.to_bytes().unwrap(), Path::new("mem")).unwrap();
        assert_eq!(back.to_bytes().unwrap(), kb.to_bytes().unwrap());
        assert_eq!(
            back.entity_lookup("google", 0.5, 5).unwrap(),
            kb.entity_lookup("google", 0.5, 5).unwrap()
        );
        let empty = KbSnapshot::build("".as_bytes(), "empty", SnapshotOptions::default()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.num_triples(), 0);
        let bad = b"TABSEMA-KB-SNAPSHOT 9\n{}";
        assert!(matches!(
            KbSnapshot::from_bytes(bad, Path::new("x")),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn rebuilding_is_idempotent() {
        let a = fixture().to_bytes().unwrap();
        let b = fixture().to_bytes().unwrap();
        assert_eq!(a, b);
    }
}
