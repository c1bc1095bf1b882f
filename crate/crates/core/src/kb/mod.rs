//! Knowledge-base access: an offline snapshot and a remote SPARQL/lookup
//! client behind one [`KnowledgeBase`] trait.

pub mod mirror;
pub mod ntriples;
mod remote;
mod snapshot;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use remote::{QueryCache, RemoteConfig, RemoteKb};
pub use snapshot::{KbSnapshot, SnapshotOptions};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ObjectValue {
    Entity { iri: String },
    Text { value: String, lang: Option<String> },
    Number { value: f64 },
    Date { value: String },
}

impl ObjectValue {
    /// Classifies an RDF literal by its datatype. Numeric datatypes whose
    /// lexical form does not parse fall back to text.
    pub fn from_literal(value: &str, lang: Option<&str>, datatype: Option<&str>) -> Self {
        let local = datatype.and_then(|d| d.strip_prefix(XSD));
        match local {
            Some(
                "integer" | "decimal" | "double" | "float" | "int" | "long" | "short" | "byte"
                | "nonNegativeInteger" | "positiveInteger" | "negativeInteger" | "nonPositiveInteger"
                | "unsignedInt" | "unsignedLong" | "unsignedShort" | "unsignedByte",
            ) => match value.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => ObjectValue::Number { value: v },
                _ => Self::text(value, lang),
            },
            Some("date" | "dateTime" | "gYear" | "gYearMonth") => ObjectValue::Date {
                value: value.to_string(),
            },
            _ => Self::text(value, lang),
        }
    }

    fn text(value: &str, lang: Option<&str>) -> Self {
        ObjectValue::Text {
            value: value.to_string(),
            lang: lang.map(str::to_string),
        }
    }

    fn sort_key(&self) -> (u8, String) {
        match self {
            ObjectValue::Entity { iri } => (0, iri.clone()),
            ObjectValue::Text { value, lang } => (1, format!("{value}\u{0}{}", lang.as_deref().unwrap_or(""))),
            ObjectValue::Number { value } => (2, format!("{value:e}")),
            ObjectValue::Date { value } => (3, value.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: ObjectValue,
}

/// Sorts by predicate then object and drops duplicates, the order every
/// backend returns.
pub(crate) fn canonical_order(triples: &mut Vec<Triple>) {
    triples.sort_by(|a, b| {
        (&a.predicate, a.object.sort_key()).cmp(&(&b.predicate, b.object.sort_key()))
    });
    triples.dedup();
}

/// Whether a predicate is schema-level and kept out of query results.
pub(crate) fn is_structural(predicate: &str, opts: &SnapshotOptions) -> bool {
    predicate == opts.type_property || predicate == opts.label_property || predicate == RDFS_SUBCLASS_OF
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub iri: String,
    /// English labels
    pub labels: Vec<String>,
    /// asserted and inferred classes, sorted
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupHit {
    pub iri: String,
    pub similarity: f64,
}

/// Ranks by similarity descending then IRI ascending, drops hits below
/// `alpha` and keeps at most `limit`.
pub(crate) fn rank_hits(mut hits: Vec<LookupHit>, alpha: f64, limit: usize) -> Vec<LookupHit> {
    hits.retain(|h| h.similarity >= alpha);
    hits.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.iri.cmp(&b.iri)));
    hits.truncate(limit);
    hits
}

/// Best Jaro similarity between a normalized phrase and any of the labels.
pub(crate) fn label_similarity(phrase: &str, labels: &[String]) -> f64 {
    labels
        .iter()
        .map(|l| crate::similarity::jaro_similarity(phrase, &crate::literal::normalize_label(l)))
        .fold(0.0, f64::max)
}

/// Query interface shared by the snapshot and the remote client.
pub trait KnowledgeBase: Send + Sync {
    /// Q1: entities whose class set includes `class`, IRI-sorted.
    fn entities_of_class(&self, class: &str) -> Result<Vec<String>>;

    /// Q2: the non-structural triples with subject `entity`.
    fn triples_of_subject(&self, entity: &str) -> Result<Vec<Triple>>;

    /// Entities with a label at Jaro similarity at least `alpha` to the
    /// normalized phrase, best first, at most `limit`.
    fn entity_lookup(&self, phrase: &str, alpha: f64, limit: usize) -> Result<Vec<LookupHit>>;

    /// English labels of an entity.
    fn labels_of(&self, entity: &str) -> Result<Vec<String>>;

    /// Materialized classes of an entity, sorted.
    fn classes_of(&self, entity: &str) -> Result<Vec<String>>;
}

impl<K: KnowledgeBase + ?Sized> KnowledgeBase for Arc<K> {
    fn entities_of_class(&self, class: &str) -> Result<Vec<String>> {
        (**self).entities_of_class(class)
    }
    fn triples_of_subject(&self, entity: &str) -> Result<Vec<Triple>> {
        (**self).triples_of_subject(entity)
    }
    fn entity_lookup(&self, phrase: &str, alpha: f64, limit: usize) -> Result<Vec<LookupHit>> {
        (**self).entity_lookup(phrase, alpha, limit)
    }
    fn labels_of(&self, entity: &str) -> Result<Vec<String>> {
        (**self).labels_of(entity)
    }
    fn classes_of(&self, entity: &str) -> Result<Vec<String>> {
        (**self).classes_of(entity)
    }
}

/// Query counts observed by [`CountingKb`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub q1: usize,
    pub q2: usize,
    pub lookup: usize,
    pub labels: usize,
    pub classes: usize,
}

/// Wraps a backend and counts the queries issued through it.
#[derive(Debug, Default)]
pub struct CountingKb<K> {
    inner: K,
    q1: AtomicUsize,
    q2: AtomicUsize,
    lookup: AtomicUsize,
    labels: AtomicUsize,
    classes: AtomicUsize,
}

impl<K> CountingKb<K> {
    pub fn new(inner: K) -> Self {
        CountingKb {
            inner,
            q1: AtomicUsize::new(0),
            q2: AtomicUsize::new(0),
            lookup: AtomicUsize::new(0),
            labels: AtomicUsize::new(0),
            classes: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            q1: self.q1.load(Ordering::SeqCst),
            q2: self.q2.load(Ordering::SeqCst),
            lookup: self.lookup.load(Ordering::SeqCst),
            labels: self.labels.load(Ordering::SeqCst),
            classes: self.classes.load(Ordering::SeqCst),
        }
    }

    pub fn into_inner(self) -> K {
        self.inner
    }
}

impl<K: KnowledgeBase> KnowledgeBase for CountingKb<K> {
    fn entities_of_class(&self, class: &str) -> Result<Vec<String>> {
        self.q1.fetch_add(1, Ordering::SeqCst);
        self.inner.entities_of_class(class)
    }
    fn triples_of_subject(&self, entity: &str) -> Result<Vec<Triple>> {
        self.q2.fetch_add(1, Ordering::SeqCst);
        self.inner.triples_of_subject(entity)
    }
    fn entity_lookup(&self, phrase: &str, alpha: f64, limit: usize) -> Result<Vec<LookupHit>> {
        self.lookup.fetch_add(1, Ordering::SeqCst);
        self.inner.entity_lookup(phrase, alpha, limit)
    }
    fn labels_of(&self, entity: &str) -> Result<Vec<String>> {
        self.labels.fetch_add(1, Ordering::SeqCst);
        self.inner.labels_of(entity)
    }
    fn classes_of(&self, entity: &str) -> Result<Vec<String>> {
        self.classes.fetch_add(1, Ordering::SeqCst);
        self.inner.classes_of(entity)
    }
}

/// Where the KB lives, as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KbSource {
    Snapshot(std::path::PathBuf),
    Endpoint(String),
}

impl std::str::FromStr for KbSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("snapshot:") {
            Ok(KbSource::Snapshot(path.into()))
        } else if let Some(url) = s.strip_prefix("endpoint:") {
            Ok(KbSource::Endpoint(url.to_string()))
        } else {
            Err(Error::Config(format!(
                "KB source `{s}` must be snapshot:PATH or endpoint:URL"
            )))
        }
    }
}

/// Opens a backend. Remote clients read their cache directory from
/// `remote.cache_dir`.
pub fn open(source: &KbSource, remote: RemoteConfig) -> Result<Arc<dyn KnowledgeBase>> {
    Ok(match source {
        KbSource::Snapshot(path) => Arc::new(KbSnapshot::load(path)?),
        KbSource::Endpoint(url) => Arc::new(RemoteKb::new(RemoteConfig {
            sparql_url: url.clone(),
            ..remote
        })?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_classification() {
        let int = format!("{XSD}integer");
        let date = format!("{XSD}date");
        assert_eq!(
            ObjectValue::from_literal("42", None, Some(&int)),
            ObjectValue::Number { value: 42.0 }
        );
        assert_eq!(
            ObjectValue::from_literal("n/a", None, Some(&int)),
            ObjectValue::Text { value: "n/a".into(), lang: None }
        );
        assert_eq!(
            ObjectValue::from_literal("1997-05-12", None, Some(&date)),
            ObjectValue::Date { value: "1997-05-12".into() }
        );
        assert_eq!(
            ObjectValue::from_literal("Paris", Some("fr"), None),
            ObjectValue::Text { value: "Paris".into(), lang: Some("fr".into()) }
        );
    }

    #[test]
    fn ranking_rules() {
        let hits = vec![
            LookupHit { iri: "b".into(), similarity: 1.0 },
            LookupHit { iri: "a".into(), similarity: 1.0 },
            LookupHit { iri: "c".into(), similarity: 0.9 },
            LookupHit { iri: "d".into(), similarity: 0.5 },
        ];
        let ranked = rank_hits(hits.clone(), 0.85, 5);
        let iris: Vec<&str> = ranked.iter().map(|h| h.iri.as_str()).collect();
        assert_eq!(iris, ["a", "b", "c"]);
        assert_eq!(rank_hits(hits, 0.0, 1)[0].iri, "a");
    }

    #[test]
    fn kb_source_parsing() {
        assert_eq!(
            "snapshot:kb.snap".parse::<KbSource>().unwrap(),
            KbSource::Snapshot("kb.snap".into())
        );
        assert_eq!(
            "endpoint:http://x/sparql".parse::<KbSource>().unwrap(),
            KbSource::Endpoint("http://x/sparql".into())
        );
        assert!("kb.snap".parse::<KbSource>().is_err());
    }
}
