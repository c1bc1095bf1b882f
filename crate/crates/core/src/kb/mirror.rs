//! Minimal HTTP server answering the client's SPARQL and lookup requests
//! from a snapshot. Lets the remote backend run against known data.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

use super::remote::{LookupDoc, LookupResponse, RdfTerm, SparqlKind};
use super::{rank_hits, KbSnapshot, KnowledgeBase, ObjectValue, XSD};
use super::{RDFS_LABEL, RDF_TYPE};
use crate::error::{Error, Result};

struct Shared {
    kb: Arc<KbSnapshot>,
    requests: AtomicUsize,
    failing: AtomicBool,
    stop: AtomicBool,
}

/// Serves `/sparql` and `/lookup` on a loopback port until dropped.
pub struct MirrorServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    handle: Option<JoinHandle<()>>,
}

impl MirrorServer {
    pub fn start(kb: Arc<KbSnapshot>) -> Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| Error::io("127.0.0.1:0", e))?;
        let addr = listener.local_addr().map_err(|e| Error::io("127.0.0.1:0", e))?;
        let shared = Arc::new(Shared {
            kb,
            requests: AtomicUsize::new(0),
            failing: AtomicBool::new(false),
            stop: AtomicBool::new(false),
        });
        let worker = Arc::clone(&shared);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if worker.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let shared = Arc::clone(&worker);
                std::thread::spawn(move || {
                    if let Err(e) = serve(stream, &shared) {
                        log::debug!("mirror connection: {e}");
                    }
                });
            }
        });
        Ok(MirrorServer {
            addr,
            shared,
            handle: Some(handle),
        })
    }

    pub fn sparql_url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }

    pub fn lookup_url(&self) -> String {
        format!("http://{}/lookup", self.addr)
    }

    /// Requests answered so far, including failed ones.
    pub fn requests(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// While set, every request gets a 503.
    pub fn set_failing(&self, failing: bool) {
        self.shared.failing.store(failing, Ordering::SeqCst);
    }
}

impl Drop for MirrorServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header.trim().is_empty() {
            break;
        }
    }
    if shared.stop.load(Ordering::SeqCst) {
        return Ok(());
    }
    shared.requests.fetch_add(1, Ordering::SeqCst);
    let (status, body) = if shared.failing.load(Ordering::SeqCst) {
        (503, json!({"error": "unavailable"}))
    } else {
        route(&request_line, &shared.kb)
    };
    let body = serde_json::to_vec(&body)?;
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Service Unavailable",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    out.write_all(&body)?;
    out.flush()
}

fn route(request_line: &str, kb: &KbSnapshot) -> (u16, Value) {
    let mut parts = request_line.split_whitespace();
    let (Some("GET"), Some(target)) = (parts.next(), parts.next()) else {
        return (400, json!({"error": "only GET is supported"}));
    };
    let (path, query) = target.split_once('?').unwrap_or((target, ""));
    let params: Vec<(String, String)> = url::form_urlencoded::parse(query.as_bytes()).into_owned().collect();
    let param = |name: &str| params.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
    match path {
        "/sparql" => match param("query").and_then(SparqlKind::parse) {
            Some((kind, iri)) => (200, sparql_answer(kind, &iri, kb)),
            None => (400, json!({"error": "unsupported query"})),
        },
        "/lookup" => {
            let max = param("maxResults").and_then(|m| m.parse().ok()).unwrap_or(5);
            let hits = rank_hits(kb.lookup_candidates(param("query").unwrap_or(""), 0.0), 0.0, max);
            let docs = hits
                .into_iter()
                .map(|h| LookupDoc {
                    label: kb.labels_of(&h.iri).unwrap_or_default(),
                    resource: vec![h.iri],
                })
                .collect();
            (200, serde_json::to_value(LookupResponse { docs }).unwrap_or(Value::Null))
        }
        _ => (404, json!({"error": "not found"})),
    }
}

fn node(iri: &str) -> RdfTerm {
    match iri.strip_prefix("_:") {
        Some(b) => RdfTerm {
            kind: "bnode".into(),
            value: b.into(),
            lang: None,
            datatype: None,
        },
        None => RdfTerm {
            kind: "uri".into(),
            value: iri.into(),
            lang: None,
            datatype: None,
        },
    }
}

fn literal(value: String, lang: Option<String>, datatype: Option<String>) -> RdfTerm {
    RdfTerm {
        kind: "literal".into(),
        value,
        lang,
        datatype,
    }
}

fn object_term(o: &ObjectValue) -> RdfTerm {
    match o {
        ObjectValue::Entity { iri } => node(iri),
        ObjectValue::Text { value, lang } => literal(value.clone(), lang.clone(), None),
        ObjectValue::Number { value } => literal(value.to_string(), None, Some(format!("{XSD}double"))),
        ObjectValue::Date { value } => literal(value.clone(), None, Some(format!("{XSD}date"))),
    }
}

fn results(vars: &[&str], rows: Vec<Vec<RdfTerm>>) -> Value {
    let bindings: Vec<Value> = rows
        .into_iter()
        .map(|row| {
            let map: serde_json::Map<String, Value> = vars
                .iter()
                .zip(row)
                .map(|(v, t)| (v.to_string(), serde_json::to_value(t).unwrap_or(Value::Null)))
                .collect();
            Value::Object(map)
        })
        .collect();
    json!({"head": {"vars": vars}, "results": {"bindings": bindings}})
}

fn sparql_answer(kind: SparqlKind, iri: &str, kb: &KbSnapshot) -> Value {
    let labels = || kb.labels_of(iri).unwrap_or_default();
    let classes = || kb.classes_of(iri).unwrap_or_default();
    match kind {
        SparqlKind::EntitiesOfClass => results(
            &["e"],
            kb.entities_of_class(iri).unwrap_or_default().iter().map(|e| vec![node(e)]).collect(),
        ),
        SparqlKind::TriplesOfSubject => {
            // a real endpoint also returns the schema-level statements
            let mut rows: Vec<Vec<RdfTerm>> = classes()
                .iter()
                .map(|c| vec![node(RDF_TYPE), node(c)])
                .collect();
            rows.extend(
                labels()
                    .into_iter()
                    .map(|l| vec![node(RDFS_LABEL), literal(l, Some("en".into()), None)]),
            );
            for t in kb.triples_of_subject(iri).unwrap_or_default() {
                rows.push(vec![node(&t.predicate), object_term(&t.object)]);
            }
            results(&["p", "o"], rows)
        }
        SparqlKind::Labels => results(
            &["l"],
            labels().into_iter().map(|l| vec![literal(l, Some("en".into()), None)]).collect(),
        ),
        SparqlKind::Classes => results(&["c"], classes().iter().map(|c| vec![node(c)]).collect()),
    }
}
