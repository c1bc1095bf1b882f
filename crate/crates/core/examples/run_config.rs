// Reads a run configuration and shows which settings change its
// fingerprint.

use tabsema::config::RunConfig;

pub fn run_example() -> anyhow::Result<RunConfig> {
    let cfg = RunConfig::from_toml("m = 5\nl = 4\nhidden = 32\nablation = \"cnn-c\"\nsigma = 0.01\n")?;
    println!("{}", cfg.to_toml()?);
    let moved = RunConfig {
        kb: Some("snapshot:/data/kb.snap".into()),
        ..cfg.clone()
    };
    let changed = RunConfig { seed: 9, ..cfg.clone() };
    println!("fingerprint          {}", cfg.fingerprint());
    println!("other KB location    {}", moved.fingerprint());
    println!("other seed           {}", changed.fingerprint());
    Ok(cfg)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
