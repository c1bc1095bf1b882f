// Mines the frequent properties of each class from the KB and merges them
// into the property set that indexes P2Vec vectors.

use tabsema::kb::CountingKb;
use tabsema::p2vec::{mine_candidate_properties, CandidatePropertySet};
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> anyhow::Result<CandidatePropertySet> {
    let data = generate(&SyntheticConfig::default())?;
    let kb = CountingKb::new(data.kb);
    for sigma in [0.005, 0.5, 1.0] {
        let props = mine_candidate_properties(&data.catalog, sigma, &kb)?;
        println!("sigma {sigma}: {} properties", props.d1());
    }
    let counts = kb.counts();
    println!("queries: {} by class, {} by entity", counts.q1, counts.q2);
    let props = mine_candidate_properties(&data.catalog, 0.005, &kb)?;
    for (class, list) in &props.per_class {
        println!("{class}: {}", list.join(", "));
    }
    Ok(props)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
