// Talks to a SPARQL endpoint through the caching client. A local mirror
// stands in for the endpoint; the second client replays the recorded
// answers offline.

use std::sync::Arc;

use tabsema::kb::mirror::MirrorServer;
use tabsema::kb::{KnowledgeBase, RemoteConfig, RemoteKb};
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> anyhow::Result<usize> {
    let data = generate(&SyntheticConfig {
        entities_per_class: 40,
        columns: 10,
        ..SyntheticConfig::default()
    })?;
    let class = data.catalog.classes()[0].kb_iri.clone();
    let server = MirrorServer::start(Arc::new(data.kb))?;
    let cache = tempfile::tempdir()?;

    let online = RemoteKb::new(RemoteConfig {
        sparql_url: server.sparql_url(),
        cache_dir: Some(cache.path().to_path_buf()),
        ..RemoteConfig::default()
    })?;
    let members = online.entities_of_class(&class)?;
    let first = online.triples_of_subject(&members[0])?;
    println!("{} members of {class}; first has {} triples", members.len(), first.len());

    let offline = RemoteKb::new(RemoteConfig {
        cache_dir: Some(cache.path().to_path_buf()),
        offline: true,
        ..RemoteConfig::default()
    })?;
    assert_eq!(offline.entities_of_class(&class)?, members);
    println!("offline replay: {} network calls", offline.network_calls());
    Ok(server.requests())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
