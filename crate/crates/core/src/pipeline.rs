//! End-to-end training and prediction shared by the command line, the
//! examples and the tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::encoder::EmbeddingTable;
use crate::ensemble::{train_ensemble, EnsembleMode, EnsembleModel, FeatureContext};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, lookup_vote_columns, predict_columns, ColumnPrediction, ColumnRef, EnsembleScorer, HnnScorer,
};
use crate::hnn::{checkpoint, train, HnnModel, TrainReport};
use crate::kb::{self, KbSource, KnowledgeBase, RemoteKb};
use crate::p2vec::{mine_candidate_properties, CandidatePropertySet};
use crate::sampler::{build_training_set, split_dataset, LabeledColumn, SplitSpec};
use crate::table::{ClassCatalog, ColumnKind, GoldLabel, MicroTable, Table};

/// Micro tables of the labeled columns with their class indices.
pub fn labeled_samples(
    tables: &[Table],
    labels: &[GoldLabel],
    catalog: &ClassCatalog,
    m: usize,
    l: usize,
) -> Result<Vec<(MicroTable, usize)>> {
    let columns = labels
        .iter()
        .map(|g| {
            let table = tables
                .iter()
                .find(|t| t.id == g.table_id)
                .ok_or_else(|| Error::Config(format!("gold label refers to unknown table `{}`", g.table_id)))?;
            Ok(LabeledColumn {
                table,
                column_index: g.column_index,
                class_id: &g.class_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_training_set(&columns, catalog, m, l)?
        .into_iter()
        .map(|s| (s.micro_table, s.label))
        .collect())
}

/// Every entity column of every table.
pub fn entity_columns(tables: &[Table]) -> Vec<ColumnRef> {
    tables
        .iter()
        .flat_map(|t| {
            t.columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.kind == ColumnKind::Entity && c.cells.iter().any(|x| !x.is_empty()))
                .map(|(i, _)| ColumnRef {
                    table_id: t.id.clone(),
                    column_index: i,
                })
        })
        .collect()
}

pub fn train_hnn(
    cfg: &RunConfig,
    samples: &[(MicroTable, usize)],
    catalog: &ClassCatalog,
    emb: &EmbeddingTable,
) -> Result<(HnnModel, TrainReport)> {
    let mut model = HnnModel::new(cfg.hnn_config(emb.dim(), catalog.len())?, catalog.clone(), cfg.seed)?;
    let encoded = samples
        .par_iter()
        .map(|(mt, y)| Ok((model.encode(mt, emb)?, *y)))
        .collect::<Result<Vec<_>>>()?;
    let report = train(&mut model, &encoded, &cfg.train_config())?;
    Ok((model, report))
}

/// The KB-dependent classifiers trained on top of a network.
#[derive(Debug, Clone)]
pub struct KbModels {
    pub properties: CandidatePropertySet,
    pub ensemble1: EnsembleModel,
    pub ensemble2: EnsembleModel,
    pub p2vec: EnsembleModel,
}

impl KbModels {
    pub fn get(&self, mode: EnsembleMode) -> &EnsembleModel {
        match mode {
            EnsembleMode::One => &self.ensemble1,
            EnsembleMode::Two => &self.ensemble2,
            EnsembleMode::P2VecOnly => &self.p2vec,
        }
    }
}

/// Mines the candidate properties (unless given) and fits Ensemble I,
/// Ensemble II and the P2Vec-only classifier.
pub fn train_kb_models(
    cfg: &RunConfig,
    samples: &[(MicroTable, usize)],
    hnn: &HnnModel,
    emb: &EmbeddingTable,
    kb: &dyn KnowledgeBase,
    properties: Option<CandidatePropertySet>,
) -> Result<KbModels> {
    let catalog = hnn.catalog();
    let properties = match properties {
        Some(p) => p,
        None => mine_candidate_properties(catalog, cfg.sigma, kb)?,
    };
    let ctx = FeatureContext::new(Some(hnn), emb, kb);
    let fit = |mode| {
        train_ensemble(
            mode,
            samples,
            &properties,
            cfg.p2vec_params(),
            cfg.seq_len,
            &ctx,
            catalog.len(),
            &cfg.base_config(),
        )
    };
    Ok(KbModels {
        ensemble1: fit(EnsembleMode::One)?,
        ensemble2: fit(EnsembleMode::Two)?,
        p2vec: fit(EnsembleMode::P2VecOnly)?,
        properties,
    })
}

/// Scorer choices for column prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Hnn,
    Ensemble1,
    Ensemble2,
    P2Vec,
    LookupVote,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hnn" => ScorerKind::Hnn,
            "ensemble1" => ScorerKind::Ensemble1,
            "ensemble2" => ScorerKind::Ensemble2,
            "p2vec" => ScorerKind::P2Vec,
            "lookup-vote" => ScorerKind::LookupVote,
            other => return Err(Error::Config(format!("unknown scorer `{other}`"))),
        })
    }
}

impl ScorerKind {
    pub fn ensemble_mode(self) -> Option<EnsembleMode> {
        match self {
            ScorerKind::Ensemble1 => Some(EnsembleMode::One),
            ScorerKind::Ensemble2 => Some(EnsembleMode::Two),
            ScorerKind::P2Vec => Some(EnsembleMode::P2VecOnly),
            _ => None,
        }
    }
}

/// Column predictions of the network alone.
pub fn predict_hnn(
    hnn: &HnnModel,
    emb: &EmbeddingTable,
    tables: &[Table],
    targets: &[ColumnRef],
) -> Result<Vec<ColumnPrediction>> {
    let cfg = hnn.config();
    predict_columns(tables, targets, &HnnScorer { model: hnn, emb }, cfg.rows, cfg.surrounding)
}

/// Column predictions of an ensemble or the P2Vec-only classifier.
#[allow(clippy::too_many_arguments)]
pub fn predict_ensemble(
    model: &EnsembleModel,
    hnn: Option<&HnnModel>,
    emb: &EmbeddingTable,
    kb: &dyn KnowledgeBase,
    tables: &[Table],
    targets: &[ColumnRef],
    m: usize,
    l: usize,
) -> Result<Vec<ColumnPrediction>> {
    let ctx = FeatureContext::new(hnn, emb, kb);
    let scorer = EnsembleScorer::new(model, &ctx)?;
    predict_columns(tables, targets, &scorer, m, l)
}

/// Files of a trained model directory.
#[derive(Debug, Clone)]
pub struct ModelDir {
    pub root: PathBuf,
}

impl ModelDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ModelDir { root: root.into() }
    }

    pub fn hnn(&self) -> PathBuf {
        self.root.join("hnn.ckpt")
    }

    pub fn properties(&self) -> PathBuf {
        self.root.join("properties.json")
    }

    pub fn ensemble(&self, mode: EnsembleMode) -> PathBuf {
        self.root.join(match mode {
            EnsembleMode::One => "ensemble1.json",
            EnsembleMode::Two => "ensemble2.json",
            EnsembleMode::P2VecOnly => "p2vec.json",
        })
    }

    pub fn run_config(&self) -> PathBuf {
        self.root.join("run.toml")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("train.json")
    }

    pub fn load_hnn(&self) -> Result<HnnModel> {
        checkpoint::load_checkpoint(&self.hnn())
    }
}

/// What `train` records next to the checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_fingerprint: String,
    pub hnn_fingerprint: String,
    pub samples: usize,
    pub loss_curve: Vec<f64>,
}

/// Writes the network, the KB models when present, the resolved run
/// configuration and a summary.
pub fn save_models(
    dir: &ModelDir,
    cfg: &RunConfig,
    hnn: &HnnModel,
    report: &TrainReport,
    samples: usize,
    kb_models: Option<&KbModels>,
) -> Result<TrainSummary> {
    fs::create_dir_all(&dir.root).map_err(|e| Error::io(&dir.root, e))?;
    checkpoint::save_checkpoint(hnn, &dir.hnn())?;
    if let Some(k) = kb_models {
        k.properties.save(&dir.properties())?;
        for mode in [EnsembleMode::One, EnsembleMode::Two, EnsembleMode::P2VecOnly] {
            k.get(mode).save(&dir.ensemble(mode))?;
        }
    }
    write(&dir.run_config(), cfg.to_toml()?.as_bytes())?;
    let summary = TrainSummary {
        config_fingerprint: cfg.fingerprint(),
        hnn_fingerprint: hnn.fingerprint(),
        samples,
        loss_curve: report.loss_curve.clone(),
    };
    write(&dir.summary(), &serde_json::to_vec_pretty(&summary)?)?;
    Ok(summary)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Held-out column accuracies of every scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub train_columns: usize,
    pub test_columns: usize,
    pub majority: f64,
    pub lookup_vote: f64,
    pub hnn: f64,
    pub ensemble1: f64,
    pub ensemble2: f64,
    pub p2vec: f64,
}

/// Splits the labeled columns, trains every model on one part and reports
/// accuracies on the other.
pub fn holdout_experiment(
    cfg: &RunConfig,
    tables: &[Table],
    gold: &[GoldLabel],
    catalog: &ClassCatalog,
    emb: &EmbeddingTable,
    kb: &dyn KnowledgeBase,
    split: SplitSpec,
) -> Result<ExperimentReport> {
    let (train_gold, test_gold) = split_dataset(gold, split)?;
    let samples = labeled_samples(tables, &train_gold, catalog, cfg.m, cfg.l)?;
    let (hnn, _) = train_hnn(cfg, &samples, catalog, emb)?;
    let models = train_kb_models(cfg, &samples, &hnn, emb, kb, None)?;
    let targets: Vec<ColumnRef> = test_gold
        .iter()
        .map(|g| ColumnRef {
            table_id: g.table_id.clone(),
            column_index: g.column_index,
        })
        .collect();
    let accuracy = |preds: Vec<ColumnPrediction>| -> Result<f64> {
        let records: Vec<_> = preds.iter().map(|p| p.to_record(catalog)).collect();
        Ok(evaluate(&records, &test_gold, catalog, "")?.accuracy)
    };
    let ensemble = |mode| {
        predict_ensemble(models.get(mode), Some(&hnn), emb, kb, tables, &targets, cfg.m, cfg.l).and_then(accuracy)
    };
    let mut counts = vec![0usize; catalog.len()];
    for g in &train_gold {
        counts[catalog.index_of(&g.class_id)?] += 1;
    }
    let majority_class = (0..counts.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
    let majority_hits = test_gold
        .iter()
        .filter(|g| catalog.index_of(&g.class_id).ok() == Some(majority_class))
        .count();
    let params = cfg.p2vec_params();
    Ok(ExperimentReport {
        train_columns: train_gold.len(),
        test_columns: test_gold.len(),
        majority: majority_hits as f64 / test_gold.len().max(1) as f64,
        lookup_vote: accuracy(lookup_vote_columns(
            tables,
            &targets,
            catalog,
            kb,
            params.alpha_lookup,
            params.n_lookup,
        )?)?,
        hnn: accuracy(predict_hnn(&hnn, emb, tables, &targets)?)?,
        ensemble1: ensemble(EnsembleMode::One)?,
        ensemble2: ensemble(EnsembleMode::Two)?,
        p2vec: ensemble(EnsembleMode::P2VecOnly)?,
    })
}

/// The KB named by the configuration, falling back to the endpoint in the
/// environment. `None` when neither is set.
pub fn open_kb(cfg: &RunConfig) -> Result<Option<Arc<dyn KnowledgeBase>>> {
    let remote = cfg.remote_config();
    match &cfg.kb {
        Some(spec) => Ok(Some(kb::open(&spec.parse::<KbSource>()?, remote)?)),
        None if !remote.sparql_url.is_empty() => Ok(Some(Arc::new(RemoteKb::new(remote)?))),
        None => Ok(None),
    }
}
