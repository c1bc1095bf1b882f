// Extracts property vectors: the main cell is looked up in the KB and
// every property whose object matches a neighbouring cell is switched on.

use tabsema::p2vec::{mine_candidate_properties, p2vec_extract, P2VecParams, PropertyVector};
use tabsema::sampler::extract_micro_tables;
use tabsema::synthetic::{generate, SyntheticConfig};

pub fn run_example() -> anyhow::Result<Vec<PropertyVector>> {
    let data = generate(&SyntheticConfig::default())?;
    let props = mine_candidate_properties(&data.catalog, 0.005, &data.kb)?;
    let params = P2VecParams::default();
    let mut out = Vec::new();
    for (table, gold) in data.tables.iter().zip(&data.gold).take(6) {
        let mt = &extract_micro_tables(table, 0, 5, 4)?[0];
        let v = p2vec_extract(mt, &props, &params, &data.kb)?;
        let on: Vec<&str> = v
            .support()
            .into_iter()
            .map(|i| props.properties[i].rsplit('/').next().unwrap_or(""))
            .collect();
        println!("{:<8} {:<28} {on:?}", gold.class_id, mt.main_cell().raw_text);
        out.push(v);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
