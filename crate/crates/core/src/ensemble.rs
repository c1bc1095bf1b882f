//! Base classifiers (softmax regression and a one-hidden-layer perceptron)
//! and the two ways of combining the network with property vectors.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{mean_word_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::hnn::HnnModel;
use crate::kb::KnowledgeBase;
use crate::optim::Adam;
use crate::p2vec::{p2vec_extract, CandidatePropertySet, P2VecParams, PropertyVector};
use crate::table::{MicroTable, ScoreVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Lr,
    Mlp,
}

impl std::str::FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(BaseKind::Lr),
            "mlp" => Ok(BaseKind::Mlp),
            other => Err(Error::Config(format!("unknown base classifier `{other}` (lr or mlp)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub kind: BaseKind,
    /// MLP hidden units; ignored by LR
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        BaseConfig {
            kind: BaseKind::Mlp,
            hidden: 64,
            learning_rate: 1e-2,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Softmax classifier over standardized inputs, optionally with one ReLU
/// hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseClassifier {
    pub kind: BaseKind,
    pub input_dim: usize,
    pub num_classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `input × hidden` for MLP, `input × K` for LR
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Option<Array2<f64>>,
    b2: Option<Array1<f64>>,
}

struct Activations {
    x: Array1<f64>,
    hidden: Option<Array1<f64>>,
    probs: Array1<f64>,
}

impl BaseClassifier {
    /// A classifier with every weight zero; it scores everything uniformly.
    pub fn zeros(kind: BaseKind, input_dim: usize, num_classes: usize, hidden: usize) -> Self {
        let width = if kind == BaseKind::Mlp { hidden } else { num_classes };
        BaseClassifier {
            kind,
            input_dim,
            num_classes,
            mean: vec![0.0; input_dim],
            scale: vec![1.0; input_dim],
            w1: Array2::zeros((input_dim, width)),
            b1: Array1::zeros(width),
            w2: (kind == BaseKind::Mlp).then(|| Array2::zeros((hidden, num_classes))),
            b2: (kind == BaseKind::Mlp).then(|| Array1::zeros(num_classes)),
        }
    }

    fn activations(&self, input: &[f64]) -> Activations {
        let x: Array1<f64> = input
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let z1 = x.dot(&self.w1) + &self.b1;
        let (hidden, logits) = match (&self.w2, &self.b2) {
            (Some(w2), Some(b2)) => {
                let h = z1.mapv(|v| v.max(0.0));
                let logits = h.dot(w2) + b2;
                (Some(h), logits)
            }
            _ => (None, z1),
        };
        let probs = Array1::from(ScoreVector::softmax(logits.as_slice().expect("contiguous")).0);
        Activations { x, hidden, probs }
    }

    pub fn predict(&self, input: &[f64]) -> Result<ScoreVector> {
        if input.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "classifier expects {} inputs, got {}",
                self.input_dim,
                input.len()
            )));
        }
        Ok(ScoreVector(self.activations(input).probs.to_vec()))
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![
            self.w1.as_slice_mut().expect("contiguous"),
            self.b1.as_slice_mut().expect("contiguous"),
        ];
        if let (Some(w2), Some(b2)) = (&mut self.w2, &mut self.b2) {
            out.push(w2.as_slice_mut().expect("contiguous"));
            out.push(b2.as_slice_mut().expect("contiguous"));
        }
        out
    }

    /// Mean cross-entropy gradient over a batch, as flat tensors in the
    /// order of `tensors_mut`.
    fn gradients(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<Vec<f64>>) {
        let mut g_w1 = Array2::<f64>::zeros(self.w1.raw_dim());
        let mut g_b1 = Array1::<f64>::zeros(self.b1.len());
        let mut g_w2 = self.w2.as_ref().map(|w| Array2::<f64>::zeros(w.raw_dim()));
        let mut g_b2 = self.b2.as_ref().map(|b| Array1::<f64>::zeros(b.len()));
        let mut loss = 0.0;
        for (input, label) in batch {
            let act = self.activations(input);
            loss -= act.probs[*label].max(f64::MIN_POSITIVE).ln();
            let mut d_logits = act.probs.clone();
            d_logits[*label] -= 1.0;
            let d_z1 = match (&act.hidden, &self.w2) {
                (Some(h), Some(w2)) => {
                    let gw2 = g_w2.as_mut().expect("mlp");
                    for i in 0..h.len() {
                        for k in 0..d_logits.len() {
                            gw2[[i, k]] += h[i] * d_logits[k];
                        }
                    }
                    *g_b2.as_mut().expect("mlp") += &d_logits;
                    let d_h = w2.dot(&d_logits);
                    Array1::from_iter(d_h.iter().zip(h).map(|(d, &hv)| if hv > 0.0 { *d } else { 0.0 }))
                }
                _ => d_logits,
            };
            for i in 0..act.x.len() {
                if act.x[i] != 0.0 {
                    for j in 0..d_z1.len() {
                        g_w1[[i, j]] += act.x[i] * d_z1[j];
                    }
                }
            }
            g_b1 += &d_z1;
        }
        let n = batch.len() as f64;
        let mut out = vec![g_w1.into_raw_vec_and_offset().0, g_b1.to_vec()];
        if let (Some(w), Some(b)) = (g_w2, g_b2) {
            out.push(w.into_raw_vec_and_offset().0);
            out.push(b.to_vec());
        }
        for g in &mut out {
            g.iter_mut().for_each(|v| *v /= n);
        }
        (loss / n, out)
    }
}

/// Trains a base classifier with Adam on softmax cross-entropy. Inputs are
/// standardized with statistics of the training set; MLP weights start from
/// a seeded Glorot-uniform draw and LR weights from zero.
pub fn train_base(inputs: &[(Vec<f64>, usize)], num_classes: usize, cfg: &BaseConfig) -> Result<BaseClassifier> {
    let Some((first, _)) = inputs.first() else {
        return Err(Error::Config("no training inputs for the base classifier".into()));
    };
    let dim = first.len();
    if let Some((x, _)) = inputs.iter().find(|(x, _)| x.len() != dim) {
        return Err(Error::Shape(format!("input dimension {} differs from {dim}", x.len())));
    }
    if let Some((_, y)) = inputs.iter().find(|(_, y)| *y >= num_classes) {
        return Err(Error::Config(format!("label {y} out of range for {num_classes} classes")));
    }
    let mut model = BaseClassifier::zeros(cfg.kind, dim, num_classes, cfg.hidden.max(1));
    let n = inputs.len() as f64;
    for j in 0..dim {
        let mean = inputs.iter().map(|(x, _)| x[j]).sum::<f64>() / n;
        let var = inputs.iter().map(|(x, _)| (x[j] - mean).powi(2)).sum::<f64>() / n;
        model.mean[j] = mean;
        model.scale[j] = if var > 1e-12 { var.sqrt() } else { 1.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if cfg.kind == BaseKind::Mlp {
        let h = cfg.hidden.max(1);
        let r1 = (6.0 / (dim + h) as f64).sqrt();
        model.w1.iter_mut().for_each(|w| *w = rng.gen_range(-r1..=r1));
        let r2 = (6.0 / (h + num_classes) as f64).sqrt();
        if let Some(w2) = &mut model.w2 {
            w2.iter_mut().for_each(|w| *w = rng.gen_range(-r2..=r2));
        }
    }
    let mut adam = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| (inputs[i].0.as_slice(), inputs[i].1)).collect();
            let (loss, grads) = model.gradients(&batch);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            adam.step(model.tensors_mut(), grads.iter().map(Vec::as_slice).collect());
        }
    }
    Ok(model)
}

/// Averages the network and property-classifier scores.
pub fn ensemble1_combine(y_hnn: &ScoreVector, y_p2vec: &ScoreVector) -> ScoreVector {
    ScoreVector(y_hnn.0.iter().zip(&y_p2vec.0).map(|(a, b)| (a + b) / 2.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleMode {
    /// classifier on `[mean word vector of the main cell ∥ v]`, averaged with the network
    #[serde(rename = "I")]
    One,
    /// classifier on `[network FC output ∥ v]`
    #[serde(rename = "II")]
    Two,
    /// classifier on `v` alone
    #[serde(rename = "p2vec")]
    P2VecOnly,
}

impl EnsembleMode {
    pub fn needs_hnn(self) -> bool {
        self != EnsembleMode::P2VecOnly
    }
}

/// Everything needed to turn a micro table into classifier features.
pub struct FeatureContext<'a> {
    hnn: Option<&'a HnnModel>,
    hnn_fingerprint: Option<String>,
    pub emb: &'a EmbeddingTable,
    pub kb: &'a dyn KnowledgeBase,
}

impl<'a> FeatureContext<'a> {
    pub fn new(hnn: Option<&'a HnnModel>, emb: &'a EmbeddingTable, kb: &'a dyn KnowledgeBase) -> Self {
        FeatureContext {
            hnn_fingerprint: hnn.map(HnnModel::fingerprint),
            hnn,
            emb,
            kb,
        }
    }

    pub fn hnn(&self) -> Option<&'a HnnModel> {
        self.hnn
    }

    fn require_hnn(&self) -> Result<&'a HnnModel> {
        self.hnn
            .ok_or_else(|| Error::Config("this ensemble mode needs a trained HNN checkpoint".into()))
    }
}

/// Per-micro-table inputs of an ensemble: the classifier features and, for
/// Ensemble I, the network's own scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleFeatures {
    pub input: Vec<f64>,
    pub v: PropertyVector,
    pub y_hnn: Option<ScoreVector>,
}

/// A trained ensemble, bound to the mined properties and to the network
/// checkpoint whose features it consumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub mode: EnsembleMode,
    pub base: BaseClassifier,
    /// fingerprint of the HNN checkpoint; absent for the P2Vec-only mode
    pub hnn_ref: Option<String>,
    pub properties: CandidatePropertySet,
    pub p2vec: P2VecParams,
    /// token limit for the main-cell word average
    pub seq_len: usize,
}

pub fn features(
    mode: EnsembleMode,
    mt: &MicroTable,
    properties: &CandidatePropertySet,
    p2vec: &P2VecParams,
    seq_len: usize,
    ctx: &FeatureContext<'_>,
) -> Result<EnsembleFeatures> {
    let v = p2vec_extract(mt, properties, p2vec, ctx.kb)?;
    let (mut input, y_hnn) = match mode {
        EnsembleMode::One => {
            let hnn = ctx.require_hnn()?;
            let words = mean_word_vector(&mt.main_cell().raw_text, ctx.emb, seq_len).to_vec();
            (words, Some(hnn.score(mt, ctx.emb)?.scores))
        }
        EnsembleMode::Two => (ctx.require_hnn()?.score(mt, ctx.emb)?.features.to_vec(), None),
        EnsembleMode::P2VecOnly => (Vec::new(), None),
    };
    input.extend_from_slice(&v.0);
    Ok(EnsembleFeatures { input, v, y_hnn })
}

/// Extracts features for every sample in parallel (order preserved) and
/// fits the base classifier.
#[allow(clippy::too_many_arguments)]
pub fn train_ensemble(
    mode: EnsembleMode,
    samples: &[(MicroTable, usize)],
    properties: &CandidatePropertySet,
    p2vec: P2VecParams,
    seq_len: usize,
    ctx: &FeatureContext<'_>,
    num_classes: usize,
    cfg: &BaseConfig,
) -> Result<EnsembleModel> {
    let inputs: Vec<(Vec<f64>, usize)> = samples
        .par_iter()
        .map(|(mt, y)| Ok((features(mode, mt, properties, &p2vec, seq_len, ctx)?.input, *y)))
        .collect::<Result<_>>()?;
    let base = train_base(&inputs, num_classes, cfg)?;
    Ok(EnsembleModel {
        mode,
        base,
        hnn_ref: if mode.needs_hnn() { ctx.hnn_fingerprint.clone() } else { None },
        properties: properties.clone(),
        p2vec,
        seq_len,
    })
}

impl EnsembleModel {
    /// Fails when the context's network is not the one this ensemble was
    /// trained against.
    pub fn check(&self, ctx: &FeatureContext<'_>) -> Result<()> {
        if let Some(expected) = &self.hnn_ref {
            let found = ctx.require_hnn()?;
            let found = ctx.hnn_fingerprint.clone().unwrap_or_else(|| found.fingerprint());
            if &found != expected {
                return Err(Error::ModelMismatch {
                    expected: expected.clone(),
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn features(&self, mt: &MicroTable, ctx: &FeatureContext<'_>) -> Result<EnsembleFeatures> {
        features(self.mode, mt, &self.properties, &self.p2vec, self.seq_len, ctx)
    }

    pub fn score(&self, mt: &MicroTable, ctx: &FeatureContext<'_>) -> Result<ScoreVector> {
        self.check(ctx)?;
        let f = self.features(mt, ctx)?;
        let y = self.base.predict(&f.input)?;
        Ok(match f.y_hnn {
            Some(y_hnn) => ensemble1_combine(&y_hnn, &y),
            None => y,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}
