mod common;

use std::sync::Arc;

use common::fixture_kb::FixtureKb;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tabsema::kb::mirror::MirrorServer;
use tabsema::kb::{KnowledgeBase, RemoteConfig, RemoteKb};
use tabsema::p2vec::{mine_candidate_properties, p2vec_extract, P2VecParams};
use tabsema::Error;

fn remote(server: &MirrorServer, cache: Option<&std::path::Path>, offline: bool) -> RemoteKb {
    RemoteKb::new(RemoteConfig {
        sparql_url: if offline { String::new() } else { server.sparql_url() },
        lookup_url: Some(server.lookup_url()),
        cache_dir: cache.map(|p| p.to_path_buf()),
        offline,
        ..RemoteConfig::default()
    })
    .unwrap()
}

fn assert_same_answers(fx: &FixtureKb, a: &dyn KnowledgeBase, b: &dyn KnowledgeBase) {
    for class in &fx.classes {
        assert_eq!(a.entities_of_class(class).unwrap(), b.entities_of_class(class).unwrap());
    }
    for e in &fx.entities {
        assert_eq!(a.triples_of_subject(&e.iri).unwrap(), b.triples_of_subject(&e.iri).unwrap());
        assert_eq!(a.labels_of(&e.iri).unwrap(), b.labels_of(&e.iri).unwrap());
        assert_eq!(a.classes_of(&e.iri).unwrap(), b.classes_of(&e.iri).unwrap());
        for label in &e.labels {
            for alpha in [0.7, 0.85] {
                assert_eq!(
                    a.entity_lookup(label, alpha, 5).unwrap(),
                    b.entity_lookup(label, alpha, 5).unwrap()
                );
            }
        }
    }
}

#[test]
fn snapshot_and_endpoint_agree() {
    for seed in 0..5 {
        let fx = FixtureKb::generate(&mut ChaCha8Rng::seed_from_u64(seed));
        let snap = Arc::new(fx.snapshot());
        let server = MirrorServer::start(snap.clone()).unwrap();
        let client = remote(&server, None, false);
        assert_same_answers(&fx, snap.as_ref(), &client);
    }
}

#[test]
fn pipelines_are_backend_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let fx = FixtureKb::generate(&mut rng);
    let snap = Arc::new(fx.snapshot());
    let server = MirrorServer::start(snap.clone()).unwrap();
    let client = remote(&server, None, false);
    let catalog = fx.catalog();
    let local = mine_candidate_properties(&catalog, 0.25, snap.as_ref()).unwrap();
    let over_http = mine_candidate_properties(&catalog, 0.25, &client).unwrap();
    assert_eq!(local, over_http);
    let params = P2VecParams::default();
    for _ in 0..20 {
        let mt = fx.micro_table(&mut rng);
        assert_eq!(
            p2vec_extract(&mt, &local, &params, snap.as_ref()).unwrap(),
            p2vec_extract(&mt, &local, &params, &client).unwrap()
        );
    }
}

#[test]
fn recorded_cache_replays_offline() {
    let fx = FixtureKb::generate(&mut ChaCha8Rng::seed_from_u64(2));
    let snap = Arc::new(fx.snapshot());
    let server = MirrorServer::start(snap.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let recorder = remote(&server, Some(dir.path()), false);
    assert_same_answers(&fx, snap.as_ref(), &recorder);
    let recorded = server.requests();
    assert!(recorded > 0);

    // a second online pass is served from the cache
    let again = remote(&server, Some(dir.path()), false);
    assert_same_answers(&fx, snap.as_ref(), &again);
    assert_eq!(again.network_calls(), 0);

    let replay = remote(&server, Some(dir.path()), true);
    assert_same_answers(&fx, snap.as_ref(), &replay);
    assert_eq!(replay.network_calls(), 0);
    assert_eq!(server.requests(), recorded);
}

#[test]
fn offline_miss_is_an_error_not_an_empty_answer() {
    let fx = FixtureKb::generate(&mut ChaCha8Rng::seed_from_u64(4));
    let server = MirrorServer::start(Arc::new(fx.snapshot())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let replay = remote(&server, Some(dir.path()), true);
    assert!(matches!(
        replay.entities_of_class(&fx.classes[0]),
        Err(Error::OfflineCacheMiss(_))
    ));
    assert!(RemoteKb::new(RemoteConfig {
        offline: true,
        ..RemoteConfig::default()
    })
    .is_err());
}

#[test]
fn server_errors_are_retryable_and_not_cached() {
    let fx = FixtureKb::generate(&mut ChaCha8Rng::seed_from_u64(6));
    let server = MirrorServer::start(Arc::new(fx.snapshot())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let client = remote(&server, Some(dir.path()), false);
    server.set_failing(true);
    let err = client.entities_of_class(&fx.classes[0]).unwrap_err();
    assert!(err.is_retryable(), "{err}");
    server.set_failing(false);
    assert_eq!(
        client.entities_of_class(&fx.classes[0]).unwrap(),
        fx.snapshot().entities_of_class(&fx.classes[0]).unwrap()
    );
}
