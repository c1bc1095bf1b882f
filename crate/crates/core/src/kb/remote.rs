//! SPARQL endpoint and lookup-service client with a persistent on-disk
//! response cache.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{canonical_order, is_structural, label_similarity, rank_hits};
use super::{KnowledgeBase, LookupHit, ObjectValue, SnapshotOptions, Triple};
use super::{RDFS_LABEL, RDFS_SUBCLASS_OF, RDF_TYPE};
use crate::error::{Error, Result};
use crate::literal::normalize_label;

pub const ENDPOINT_ENV: &str = "TABSEMA_KB_ENDPOINT";
pub const CACHE_DIR_ENV: &str = "TABSEMA_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub sparql_url: String,
    /// defaults to `lookup` resolved against the SPARQL URL
    pub lookup_url: Option<String>,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
    pub cache_dir: Option<PathBuf>,
    /// answer from the cache only
    pub offline: bool,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            sparql_url: String::new(),
            lookup_url: None,
            timeout_secs: 30,
            max_concurrency: 4,
            cache_dir: None,
            offline: false,
        }
    }
}

impl RemoteConfig {
    /// Fills the endpoint and cache directory from the environment when unset.
    pub fn with_env(mut self) -> Self {
        if self.sparql_url.is_empty() {
            if let Ok(url) = std::env::var(ENDPOINT_ENV) {
                self.sparql_url = url;
            }
        }
        if self.cache_dir.is_none() {
            self.cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
        }
        self
    }

    fn resolved_lookup_url(&self) -> Result<String> {
        if let Some(u) = &self.lookup_url {
            return Ok(u.clone());
        }
        let base = url::Url::parse(&self.sparql_url)
            .map_err(|e| Error::Config(format!("endpoint URL `{}`: {e}", self.sparql_url)))?;
        Ok(base
            .join("lookup")
            .map_err(|e| Error::Config(e.to_string()))?
            .to_string())
    }
}

/// Directory of raw response bodies, one file per SHA-256 of the query
/// kind and arguments. Hits return the stored bytes unchanged.
#[derive(Debug, Clone)]
pub struct QueryCache {
    dir: PathBuf,
}

impl QueryCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(QueryCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(kind: &str, args: &[&str]) -> String {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        for a in args {
            h.update([0u8]);
            h.update(a.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn get(&self, kind: &str, args: &[&str]) -> Result<Option<Vec<u8>>> {
        let path = self.dir.join(Self::key(kind, args));
        match fs::read(&path) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Writes to a temporary file in the cache directory, then renames it
    /// into place.
    pub fn put(&self, kind: &str, args: &[&str], body: &[u8]) -> Result<()> {
        let path = self.dir.join(Self::key(kind, args));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        tmp.write_all(body).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }

    pub fn len(&self) -> Result<usize> {
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        Ok(entries
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().len() == 64)
            .count())
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }
}

/// SPARQL query shapes the client issues. Each renders as a fixed prefix,
/// one IRI, and a fixed suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SparqlKind {
    EntitiesOfClass,
    TriplesOfSubject,
    Labels,
    Classes,
}

impl SparqlKind {
    pub(crate) const ALL: [SparqlKind; 4] = [
        SparqlKind::EntitiesOfClass,
        SparqlKind::TriplesOfSubject,
        SparqlKind::Labels,
        SparqlKind::Classes,
    ];

    pub(crate) fn name(self) -> &'static str {
        match self {
            SparqlKind::EntitiesOfClass => "q1",
            SparqlKind::TriplesOfSubject => "q2",
            SparqlKind::Labels => "labels",
            SparqlKind::Classes => "classes",
        }
    }

    pub(crate) fn template(self) -> (String, String) {
        match self {
            SparqlKind::EntitiesOfClass => (
                format!("SELECT DISTINCT ?e WHERE {{ ?e <{RDF_TYPE}>/<{RDFS_SUBCLASS_OF}>* <"),
                "> }".into(),
            ),
            SparqlKind::TriplesOfSubject => ("SELECT ?p ?o WHERE { <".into(), "> ?p ?o }".into()),
            SparqlKind::Labels => ("SELECT ?l WHERE { <".into(), format!("> <{RDFS_LABEL}> ?l }}")),
            SparqlKind::Classes => (
                "SELECT DISTINCT ?c WHERE { <".into(),
                format!("> <{RDF_TYPE}>/<{RDFS_SUBCLASS_OF}>* ?c }}"),
            ),
        }
    }

    pub(crate) fn render(self, iri: &str) -> String {
        let (pre, post) = self.template();
        format!("{pre}{iri}{post}")
    }

    /// Recognizes a query produced by [`render`](Self::render).
    pub(crate) fn parse(query: &str) -> Option<(SparqlKind, String)> {
        Self::ALL.into_iter().find_map(|k| {
            let (pre, post) = k.template();
            let iri = query.strip_prefix(pre.as_str())?.strip_suffix(post.as_str())?;
            (!iri.is_empty() && !iri.contains(['<', '>', ' '])).then(|| (k, iri.to_string()))
        })
    }
}

#[derive(Debug, Deserialize)]
pub(crate) struct SparqlResults {
    pub results: SparqlBindings,
}

#[derive(Debug, Deserialize)]
pub(crate) struct SparqlBindings {
    pub bindings: Vec<BTreeMap<String, RdfTerm>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RdfTerm {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    #[serde(rename = "xml:lang", default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
}

impl RdfTerm {
    fn node(&self) -> Option<String> {
        match self.kind.as_str() {
            "uri" => Some(self.value.clone()),
            "bnode" => Some(format!("_:{}", self.value)),
            _ => None,
        }
    }

    fn object(&self) -> ObjectValue {
        match self.node() {
            Some(iri) => ObjectValue::Entity { iri },
            None => ObjectValue::from_literal(&self.value, self.lang.as_deref(), self.datatype.as_deref()),
        }
    }

    fn is_english(&self) -> bool {
        match self.lang.as_deref() {
            None | Some("") => true,
            Some(l) => {
                let l = l.to_ascii_lowercase();
                l == "en" || l.starts_with("en-")
            }
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct LookupResponse {
    pub docs: Vec<LookupDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct LookupDoc {
    #[serde(default)]
    pub resource: Vec<String>,
    #[serde(default)]
    pub label: Vec<String>,
}

/// Removes markup such as `<B>` highlighting that lookup services put
/// into labels.
fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

fn bindings(body: &[u8]) -> Result<Vec<BTreeMap<String, RdfTerm>>> {
    let parsed: SparqlResults =
        serde_json::from_slice(body).map_err(|e| Error::Response(format!("SPARQL results: {e}")))?;
    Ok(parsed.results.bindings)
}

fn var<'a>(row: &'a BTreeMap<String, RdfTerm>, name: &str) -> Result<&'a RdfTerm> {
    row.get(name)
        .ok_or_else(|| Error::Response(format!("binding without ?{name}")))
}

fn sorted_nodes(body: &[u8], name: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for row in bindings(body)? {
        if let Some(n) = var(&row, name)?.node() {
            out.push(n);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Remote KB backend. Every successful response is stored in the cache
/// before it is returned; in offline mode nothing goes over the network.
pub struct RemoteKb {
    config: RemoteConfig,
    lookup_url: Option<String>,
    client: reqwest::blocking::Client,
    cache: Option<QueryCache>,
    permits: Semaphore,
    network_calls: AtomicUsize,
}

impl std::fmt::Debug for RemoteKb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteKb").field("config", &self.config).finish()
    }
}

impl RemoteKb {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.offline && config.cache_dir.is_none() {
            return Err(Error::Config("offline mode needs a cache directory".into()));
        }
        if !config.offline && config.sparql_url.is_empty() {
            return Err(Error::Config(format!(
                "no KB endpoint configured (set --kb endpoint:URL or {ENDPOINT_ENV})"
            )));
        }
        let lookup_url = if config.sparql_url.is_empty() {
            config.lookup_url.clone()
        } else {
            Some(config.resolved_lookup_url()?)
        };
        let cache = config.cache_dir.as_ref().map(QueryCache::open).transpose()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| Error::Config(format!("HTTP client: {e}")))?;
        Ok(RemoteKb {
            permits: Semaphore {
                free: Mutex::new(config.max_concurrency.max(1)),
                cv: Condvar::new(),
            },
            config,
            lookup_url,
            client,
            cache,
            network_calls: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Requests that actually went over the network.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn get(&self, url: &str, params: &[(&str, &str)], accept: &str) -> Result<Vec<u8>> {
        let _permit = self.permits.acquire();
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let resp = self
            .client
            .get(url)
            .query(params)
            .header(reqwest::header::ACCEPT, accept)
            .send()
            .map_err(|e| Error::Network(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Error::Network(format!("{url} answered {status}")));
        }
        if !status.is_success() {
            return Err(Error::Response(format!("{url} answered {status}")));
        }
        Ok(resp.bytes().map_err(|e| Error::Network(e.to_string()))?.to_vec())
    }

    /// Cache lookup, then network. A body is cached only once `parse`
    /// accepts it.
    fn cached<T>(
        &self,
        kind: &str,
        args: &[&str],
        fetch: impl FnOnce() -> Result<Vec<u8>>,
        parse: impl Fn(&[u8]) -> Result<T>,
    ) -> Result<T> {
        if let Some(cache) = &self.cache {
            if let Some(body) = cache.get(kind, args)? {
                return parse(&body);
            }
        }
        if self.config.offline {
            return Err(Error::OfflineCacheMiss(format!("{kind} {}", args.join(" "))));
        }
        let body = fetch()?;
        let value = parse(&body)?;
        if let Some(cache) = &self.cache {
            cache.put(kind, args, &body)?;
        }
        Ok(value)
    }

    fn sparql<T>(&self, kind: SparqlKind, iri: &str, parse: impl Fn(&[u8]) -> Result<T>) -> Result<T> {
        let query = kind.render(iri);
        self.cached(
            kind.name(),
            &[iri],
            || {
                self.get(
                    &self.config.sparql_url,
                    &[("query", &query), ("format", "json")],
                    "application/sparql-results+json",
                )
            },
            parse,
        )
    }
}

impl KnowledgeBase for RemoteKb {
    fn entities_of_class(&self, class: &str) -> Result<Vec<String>> {
        self.sparql(SparqlKind::EntitiesOfClass, class, |b| sorted_nodes(b, "e"))
    }

    fn triples_of_subject(&self, entity: &str) -> Result<Vec<Triple>> {
        if entity.starts_with("_:") {
            return Ok(Vec::new());
        }
        let opts = SnapshotOptions::default();
        self.sparql(SparqlKind::TriplesOfSubject, entity, |body| {
            let mut out = Vec::new();
            for row in bindings(body)? {
                let p = var(&row, "p")?;
                if p.kind != "uri" {
                    return Err(Error::Response("non-IRI predicate".into()));
                }
                if is_structural(&p.value, &opts) {
                    continue;
                }
                out.push(Triple {
                    subject: entity.to_string(),
                    predicate: p.value.clone(),
                    object: var(&row, "o")?.object(),
                });
            }
            canonical_order(&mut out);
            Ok(out)
        })
    }

    fn entity_lookup(&self, phrase: &str, alpha: f64, limit: usize) -> Result<Vec<LookupHit>> {
        let phrase = normalize_label(phrase);
        if phrase.is_empty() || limit == 0 {
            return Ok(Vec::new());
        }
        let max = limit.to_string();
        let url = self.lookup_url.clone().unwrap_or_default();
        let docs = self.cached(
            "lookup",
            &[&phrase, &max],
            || {
                self.get(
                    &url,
                    &[("query", &phrase), ("maxResults", &max), ("format", "json")],
                    "application/json",
                )
            },
            |body| {
                serde_json::from_slice::<LookupResponse>(body)
                    .map_err(|e| Error::Response(format!("lookup response: {e}")))
            },
        )?;
        let hits = docs
            .docs
            .into_iter()
            .filter_map(|d| {
                let iri = d.resource.into_iter().next()?;
                let labels: Vec<String> = d.label.iter().map(|l| strip_tags(l)).collect();
                Some(LookupHit {
                    similarity: label_similarity(&phrase, &labels),
                    iri,
                })
            })
            .collect();
        Ok(rank_hits(hits, alpha, limit))
    }

    fn labels_of(&self, entity: &str) -> Result<Vec<String>> {
        if entity.starts_with("_:") {
            return Ok(Vec::new());
        }
        self.sparql(SparqlKind::Labels, entity, |body| {
            let mut out = Vec::new();
            for row in bindings(body)? {
                let l = var(&row, "l")?;
                if l.node().is_none() && l.is_english() {
                    out.push(l.value.clone());
                }
            }
            out.sort();
            out.dedup();
            Ok(out)
        })
    }

    fn classes_of(&self, entity: &str) -> Result<Vec<String>> {
        if entity.starts_with("_:") {
            return Ok(Vec::new());
        }
        self.sparql(SparqlKind::Classes, entity, |b| sorted_nodes(b, "c"))
    }
}
