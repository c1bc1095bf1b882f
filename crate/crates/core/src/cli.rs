//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::encoder::EmbeddingTable;
use crate::eval::{evaluate, load_predictions, lookup_vote_columns, write_predictions, ColumnRef};
use crate::kb::{KbSnapshot, KnowledgeBase, SnapshotOptions};
use crate::p2vec::{mine_candidate_properties, CandidatePropertySet};
use crate::pipeline::{
    entity_columns, labeled_samples, open_kb, predict_ensemble, predict_hnn, save_models, train_hnn,
    train_kb_models, ModelDir, ScorerKind,
};
use crate::table::{load_gold, ClassCatalog, Table};
use crate::Error;

/// Exit code for malformed input files.
pub const EXIT_SYNTAX: i32 = 2;
/// Exit code for configuration, catalog, model or fingerprint mismatches.
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tabsema", version, about = "Column type prediction for tables without metadata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an N-Triples file into a KB snapshot.
    SnapshotBuild { ntriples: PathBuf, out: PathBuf },
    /// Mine the candidate properties of every class and print their number.
    MineProperties {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Train the network and, when a KB is configured, the ensembles.
    Train {
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// model directory to write
        #[arg(long)]
        out: PathBuf,
        /// previously mined candidate properties; mined afresh when absent
        #[arg(long)]
        properties: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Predict column classes and write a predictions CSV.
    Predict {
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "hnn")]
        scorer: ScorerKind,
        /// model directory written by `train`
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// catalog for `lookup-vote` without a model
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// gold-format file naming the columns to predict; every entity column otherwise
        #[arg(long)]
        targets: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Score a predictions file against gold labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        /// model directory whose configuration the predictions must match
        #[arg(long)]
        model: Option<PathBuf>,
        /// report even when the fingerprints differ
        #[arg(long)]
        force: bool,
        /// also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
}

/// Configuration file plus overrides; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `snapshot:PATH` or `endpoint:URL`
    #[arg(long)]
    pub kb: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub offline: bool,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_lookup: Option<usize>,
    #[arg(long, value_parser = ["fc", "cnn-c", "cnn-r", "cnn-cr"])]
    pub ablation: Option<String>,
    #[arg(long)]
    pub no_att_birnn: bool,
}

impl RunFlags {
    /// Starts from `--config`, else from `base`, and applies the flags.
    pub fn resolve(&self, base: Option<RunConfig>) -> crate::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => base.unwrap_or_default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.kb {
            cfg.kb = Some(v.clone());
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        if self.offline {
            cfg.offline = true;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.l {
            cfg.l = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.n_lookup {
            cfg.n_lookup = v;
        }
        if let Some(v) = &self.ablation {
            cfg.ablation = v.clone();
        }
        if self.no_att_birnn {
            cfg.att_birnn = false;
        }
        cfg.ablation()?;
        Ok(cfg)
    }
}

/// Exit code of a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Syntax { .. }) => EXIT_SYNTAX,
        Some(
            Error::Config(_)
            | Error::CatalogMismatch { .. }
            | Error::ModelMismatch { .. }
            | Error::FingerprintMismatch { .. }
            | Error::VersionMismatch { .. },
        ) => EXIT_MISMATCH,
        _ => 1,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut out = std::io::stdout().lock();
    match execute(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Runs one command, writing its report to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::SnapshotBuild { ntriples, out: dest } => {
            let snap = KbSnapshot::build_file(&ntriples, SnapshotOptions::default())?;
            snap.save(&dest)?;
            writeln!(out, "{} entities, {} triples", snap.len(), snap.num_triples())?;
        }
        Command::MineProperties { catalog, out: dest, run } => {
            let cfg = run.resolve(None)?;
            let catalog = ClassCatalog::load(&catalog)?;
            let kb = require_kb(&cfg)?;
            let props = mine_candidate_properties(&catalog, cfg.sigma, kb.as_ref())?;
            if let Some(dest) = dest {
                props.save(&dest)?;
            }
            writeln!(out, "{}", props.d1())?;
        }
        Command::Train {
            tables,
            gold,
            catalog,
            embeddings,
            out: dest,
            properties,
            run,
        } => {
            let cfg = run.resolve(None)?;
            let tables = Table::load_dir(&tables)?;
            let gold = load_gold(&gold)?;
            let catalog = ClassCatalog::load(&catalog)?;
            let emb = EmbeddingTable::load(&embeddings)?;
            let samples = labeled_samples(&tables, &gold, &catalog, cfg.m, cfg.l)?;
            let (hnn, report) = train_hnn(&cfg, &samples, &catalog, &emb)?;
            let kb_models = match open_kb(&cfg)? {
                Some(kb) => {
                    let props = properties.as_deref().map(CandidatePropertySet::load).transpose()?;
                    Some(train_kb_models(&cfg, &samples, &hnn, &emb, kb.as_ref(), props)?)
                }
                None => None,
            };
            let summary = save_models(&ModelDir::new(&dest), &cfg, &hnn, &report, samples.len(), kb_models.as_ref())?;
            writeln!(
                out,
                "{} samples, final loss {:.6}, config {}",
                summary.samples,
                summary.loss_curve.last().copied().unwrap_or(f64::NAN),
                summary.config_fingerprint
            )?;
        }
        Command::Predict {
            tables,
            out: dest,
            scorer,
            model,
            embeddings,
            catalog,
            targets,
            run,
        } => {
            let dir = model.map(ModelDir::new);
            let saved = match &dir {
                Some(d) if d.run_config().exists() => Some(RunConfig::load(&d.run_config())?),
                _ => None,
            };
            let cfg = run.resolve(saved.clone())?;
            if let Some(saved) = &saved {
                if saved.fingerprint() != cfg.fingerprint() {
                    return Err(Error::FingerprintMismatch {
                        expected: saved.fingerprint(),
                        found: cfg.fingerprint(),
                    }
                    .into());
                }
            }
            let tables = Table::load_dir(&tables)?;
            let targets: Vec<ColumnRef> = match &targets {
                Some(path) => load_gold(path)?
                    .into_iter()
                    .map(|g| ColumnRef {
                        table_id: g.table_id,
                        column_index: g.column_index,
                    })
                    .collect(),
                None => entity_columns(&tables),
            };
            let (predictions, catalog) = if scorer == ScorerKind::LookupVote {
                let catalog = match (&catalog, &dir) {
                    (Some(path), _) => ClassCatalog::load(path)?,
                    (None, Some(d)) => load_hnn(d)?.catalog().clone(),
                    (None, None) => bail!(Error::Config("lookup-vote needs --catalog or --model".into())),
                };
                let kb = require_kb(&cfg)?;
                let p = cfg.p2vec_params();
                let preds =
                    lookup_vote_columns(&tables, &targets, &catalog, kb.as_ref(), p.alpha_lookup, p.n_lookup)?;
                (preds, catalog)
            } else {
                let dir = dir.ok_or_else(|| Error::Config("scorer needs --model".to_string()))?;
                let emb_path = embeddings.ok_or_else(|| Error::Config("scorer needs --embeddings".into()))?;
                let emb = EmbeddingTable::load(&emb_path)?;
                let hnn = load_hnn(&dir)?;
                if let Some(path) = &catalog {
                    hnn.check_catalog(&ClassCatalog::load(path)?)?;
                }
                let preds = match scorer.ensemble_mode() {
                    None => predict_hnn(&hnn, &emb, &tables, &targets)?,
                    Some(mode) => {
                        let path = dir.ensemble(mode);
                        if !path.exists() {
                            bail!(Error::Config(format!(
                                "missing {}; train with a KB to build it",
                                path.display()
                            )));
                        }
                        let model = crate::ensemble::EnsembleModel::load(&path)?;
                        let kb = require_kb(&cfg)?;
                        predict_ensemble(&model, Some(&hnn), &emb, kb.as_ref(), &tables, &targets, cfg.m, cfg.l)?
                    }
                };
                (preds, hnn.catalog().clone())
            };
            let records: Vec<_> = predictions.iter().map(|p| p.to_record(&catalog)).collect();
            let mut buf = Vec::new();
            write_predictions(&records, catalog.len(), &cfg.fingerprint(), &mut buf)?;
            fs::write(&dest, buf).with_context(|| format!("writing {}", dest.display()))?;
            writeln!(out, "{} columns predicted", records.len())?;
        }
        Command::Evaluate {
            predictions,
            gold,
            catalog,
            model,
            force,
            json,
            run,
        } => {
            let saved = match &model {
                Some(d) => Some(RunConfig::load(&ModelDir::new(d).run_config())?),
                None => None,
            };
            let expected = run.resolve(saved)?.fingerprint();
            let preds = load_predictions(&predictions)?;
            let found = preds.fingerprint.clone().unwrap_or_default();
            if found != expected {
                if !force {
                    return Err(Error::FingerprintMismatch { expected, found }
                    .into());
                }
                log::warn!("fingerprint mismatch ignored (--force)");
            }
            let catalog = ClassCatalog::load(&catalog)?;
            let report = evaluate(&preds.records, &load_gold(&gold)?, &catalog, &found)?;
            if let Some(path) = json {
                fs::write(&path, serde_json::to_vec_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            write!(out, "{}", report.render_text())?;
        }
    }
    Ok(())
}

fn require_kb(cfg: &RunConfig) -> anyhow::Result<std::sync::Arc<dyn KnowledgeBase>> {
    open_kb(cfg)?.ok_or_else(|| anyhow!(Error::Config("no knowledge base: pass --kb or set TABSEMA_KB_ENDPOINT".into())))
}

fn load_hnn(dir: &ModelDir) -> anyhow::Result<crate::hnn::HnnModel> {
    let path = dir.hnn();
    if !path.exists() {
        bail!(Error::Config(format!("missing checkpoint {}", path.display())));
    }
    Ok(dir.load_hnn()?)
}
