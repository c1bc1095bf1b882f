// Writes a synthetic corpus (KB, catalog, word vectors, tables, gold labels)
// that the command line can consume.
//
// ```text
// cargo run --example generate_corpus -- /tmp/corpus
// ```

use std::path::Path;

use tabsema::synthetic::{generate, SyntheticConfig, SyntheticFiles};

pub fn run_example(dir: &Path) -> anyhow::Result<SyntheticFiles> {
    let data = generate(&SyntheticConfig::default())?;
    Ok(data.write_to(dir)?)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "corpus".into());
    let files = run_example(Path::new(&dir))?;
    println!("knowledge base  {}", files.ntriples.display());
    println!("catalog         {}", files.catalog.display());
    println!("embeddings      {}", files.embeddings.display());
    println!("tables          {}", files.tables.display());
    println!("gold labels     {}", files.gold.display());
    Ok(())
}
