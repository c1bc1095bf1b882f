// Builds a KB snapshot from N-Triples and runs the three query kinds the
// pipeline relies on: entities of a class, triples of an entity, and fuzzy
// entity lookup.

use tabsema::kb::{KbSnapshot, KnowledgeBase, SnapshotOptions};

const NT: &str = r#"
<http://ex.org/Bank> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://ex.org/Company> .
<http://ex.org/Apple_Inc> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ex.org/Company> .
<http://ex.org/Apple_Inc> <http://www.w3.org/2000/01/rdf-schema#label> "Apple Inc."@en .
<http://ex.org/Apple_Inc> <http://ex.org/foundingYear> "1976"^^<http://www.w3.org/2001/XMLSchema#gYear> .
<http://ex.org/Apple_Inc> <http://ex.org/headquarter> <http://ex.org/Cupertino> .
<http://ex.org/Barclays> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://ex.org/Bank> .
<http://ex.org/Barclays> <http://www.w3.org/2000/01/rdf-schema#label> "Barclays"@en .
<http://ex.org/Cupertino> <http://www.w3.org/2000/01/rdf-schema#label> "Cupertino"@en .
"#;

pub fn run_example() -> anyhow::Result<KbSnapshot> {
    let kb = KbSnapshot::build(NT.as_bytes(), "inline", SnapshotOptions::default())?;
    let companies = kb.entities_of_class("http://ex.org/Company")?;
    println!("companies (subclasses included): {companies:?}");
    for t in kb.triples_of_subject("http://ex.org/Apple_Inc")? {
        println!("  {} -> {:?}", t.predicate, t.object);
    }
    for hit in kb.entity_lookup("Aple Inc", 0.85, 5)? {
        println!("lookup 'Aple Inc': {} ({:.3})", hit.iri, hit.similarity);
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("kb.snap");
    kb.save(&path)?;
    let reloaded = KbSnapshot::load(&path)?;
    assert_eq!(reloaded.len(), kb.len());
    Ok(kb)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
