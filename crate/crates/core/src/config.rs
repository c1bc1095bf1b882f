//! Run configuration: every hyperparameter of a run plus where its inputs
//! live, read from a flat TOML file. Flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{BaseConfig, BaseKind};
use crate::error::{Error, Result};
use crate::hnn::{Ablation, HnnConfig, TrainConfig};
use crate::kb::RemoteConfig;
use crate::p2vec::P2VecParams;

/// Keys describing locations or transport rather than the computation;
/// they do not enter the fingerprint.
const LOCATION_KEYS: &[&str] = &["kb", "cache_dir", "offline", "lookup_url", "timeout_secs", "max_concurrency"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub m: usize,
    pub l: usize,
    pub seq_len: usize,
    pub hidden: usize,
    pub attention: usize,
    pub column_widths: Vec<usize>,
    pub row_widths: Vec<usize>,
    pub column_filters: usize,
    pub row_filters: usize,
    pub fc_equals_logits: bool,
    pub fc_size: usize,
    /// `fc`, `cnn-c`, `cnn-r` or `cnn-cr`
    pub ablation: String,
    pub att_birnn: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub sigma: f64,
    pub n_lookup: usize,
    pub alpha: f64,
    /// overrides `alpha` for the main-cell lookup
    pub alpha_lookup: Option<f64>,
    /// overrides `alpha` for cell/object matching
    pub alpha_match: Option<f64>,
    pub base: BaseKind,
    pub base_hidden: usize,
    pub base_epochs: usize,
    pub base_learning_rate: f64,
    pub base_batch_size: usize,

    /// `snapshot:PATH` or `endpoint:URL`
    pub kb: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub lookup_url: Option<String>,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hnn = HnnConfig::defaults(0, 0);
        let train = TrainConfig::default();
        let base = BaseConfig::default();
        let p2vec = P2VecParams::default();
        let remote = RemoteConfig::default();
        RunConfig {
            seed: 0,
            m: hnn.rows,
            l: hnn.surrounding,
            seq_len: hnn.seq_len,
            hidden: hnn.hidden,
            attention: hnn.attention,
            column_widths: hnn.column_widths,
            row_widths: hnn.row_widths,
            column_filters: hnn.column_filters,
            row_filters: hnn.row_filters,
            fc_equals_logits: hnn.fc_equals_logits,
            fc_size: hnn.fc_size,
            ablation: "cnn-cr".into(),
            att_birnn: true,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            epochs: train.epochs,
            sigma: crate::p2vec::DEFAULT_SIGMA,
            n_lookup: p2vec.n_lookup,
            alpha: p2vec.alpha_lookup,
            alpha_lookup: None,
            alpha_match: None,
            base: base.kind,
            base_hidden: base.hidden,
            base_epochs: base.epochs,
            base_learning_rate: base.learning_rate,
            base_batch_size: base.batch_size,
            kb: None,
            cache_dir: None,
            offline: false,
            lookup_url: None,
            timeout_secs: remote.timeout_secs,
            max_concurrency: remote.max_concurrency,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 over the canonical JSON of every computational setting.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for k in LOCATION_KEYS {
                map.remove(*k);
            }
        }
        // serde_json maps are ordered by key, so this text is canonical
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn ablation(&self) -> Result<Ablation> {
        Ablation::from_preset(&self.ablation, self.att_birnn)
    }

    pub fn hnn_config(&self, word_dim: usize, num_classes: usize) -> Result<HnnConfig> {
        let cfg = HnnConfig {
            rows: self.m,
            surrounding: self.l,
            seq_len: self.seq_len,
            word_dim,
            hidden: self.hidden,
            attention: self.attention,
            column_widths: self.column_widths.clone(),
            row_widths: self.row_widths.clone(),
            column_filters: self.column_filters,
            row_filters: self.row_filters,
            fc_equals_logits: self.fc_equals_logits,
            fc_size: self.fc_size,
            num_classes,
            ablation: self.ablation()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn p2vec_params(&self) -> P2VecParams {
        P2VecParams {
            n_lookup: self.n_lookup,
            alpha_lookup: self.alpha_lookup.unwrap_or(self.alpha),
            alpha_match: self.alpha_match.unwrap_or(self.alpha),
        }
    }

    pub fn base_config(&self) -> BaseConfig {
        BaseConfig {
            kind: self.base,
            hidden: self.base_hidden,
            learning_rate: self.base_learning_rate,
            epochs: self.base_epochs,
            batch_size: self.base_batch_size,
            seed: self.seed,
        }
    }

    pub fn remote_config(&self) -> RemoteConfig {
        RemoteConfig {
            sparql_url: String::new(),
            lookup_url: self.lookup_url.clone(),
            timeout_secs: self.timeout_secs,
            max_concurrency: self.max_concurrency,
            cache_dir: self.cache_dir.clone(),
            offline: self.offline,
        }
        .with_env()
    }
}
