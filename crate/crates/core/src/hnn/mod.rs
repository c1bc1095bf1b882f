//! The hybrid neural network: attentive BiGRU cell embedding, convolution
//! down the target column and along the main-cell row, max pooling, a fully
//! connected layer and softmax.

mod attention;
pub mod checkpoint;
mod conv;
mod gru;
mod params;
mod train;

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode_micro_table, EmbeddingTable, EncodedCell, EncodedMicroTable};
use crate::error::{Error, Result};
use crate::table::{validate_micro_table, ClassCatalog, MicroTable, ScoreVector};

pub use attention::AttentionOutput;
pub use gru::gru_step;
pub use params::{
    AttentionParams, CellEncoderParams, ConvBank, GruParams, HnnParams, TensorRef, TensorSpec,
};
pub use train::{train, TrainConfig, TrainReport};

/// Half-width of the uniform distribution parameters are drawn from.
pub const INIT_SCALE: f64 = 0.08;

/// Which parts of the architecture are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    /// Att-BiRNN cell embedding; otherwise the mean word vector.
    pub use_att_birnn: bool,
    pub use_conv_column: bool,
    pub use_conv_row: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            use_att_birnn: true,
            use_conv_column: true,
            use_conv_row: true,
        }
    }
}

impl Ablation {
    /// Conv presets: `fc` (no convolution), `cnn-c`, `cnn-r`, `cnn-cr`.
    pub fn from_preset(name: &str, use_att_birnn: bool) -> Result<Self> {
        let (c, r) = match name {
            "fc" => (false, false),
            "cnn-c" => (true, false),
            "cnn-r" => (false, true),
            "cnn-cr" => (true, true),
            other => return Err(Error::Config(format!("unknown ablation `{other}`"))),
        };
        Ok(Ablation {
            use_att_birnn,
            use_conv_column: c,
            use_conv_row: r,
        })
    }

    /// The ColNet variant: averaged word vectors with column convolution.
    pub fn colnet() -> Self {
        Ablation {
            use_att_birnn: false,
            use_conv_column: true,
            use_conv_row: false,
        }
    }

    pub fn name(&self) -> String {
        let cell = if self.use_att_birnn { "att-birnn" } else { "word2vec-avg" };
        let conv = match (self.use_conv_column, self.use_conv_row) {
            (false, false) => "fc",
            (true, false) => "cnn-c",
            (false, true) => "cnn-r",
            (true, true) => "cnn-cr",
        };
        format!("{cell}+{conv}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HnnConfig {
    /// rows per micro table (m)
    pub rows: usize,
    /// surrounding columns per micro table (l)
    pub surrounding: usize,
    /// words per cell after cropping/padding (T)
    pub seq_len: usize,
    /// word-vector dimension (d_w)
    pub word_dim: usize,
    /// GRU hidden size per direction (H)
    pub hidden: usize,
    /// attention layer size (A)
    pub attention: usize,
    /// column filter heights (Θ1)
    pub column_widths: Vec<usize>,
    /// row filter widths (Θ2)
    pub row_widths: Vec<usize>,
    /// filters per column height (κ1)
    pub column_filters: usize,
    /// filters per row width (κ2)
    pub row_filters: usize,
    /// The FC layer output is the logit vector (F = K).
    pub fc_equals_logits: bool,
    /// F when `fc_equals_logits` is off
    pub fc_size: usize,
    pub num_classes: usize,
    pub ablation: Ablation,
}

impl HnnConfig {
    /// m=5, l=4, T=10, H=150, A=50, Θ1={2,3,4}, Θ2={2,3}, κ1=κ2=32, F=K.
    pub fn defaults(word_dim: usize, num_classes: usize) -> Self {
        HnnConfig {
            rows: 5,
            surrounding: 4,
            seq_len: 10,
            word_dim,
            hidden: 150,
            attention: 50,
            column_widths: vec![2, 3, 4],
            row_widths: vec![2, 3],
            column_filters: 32,
            row_filters: 32,
            fc_equals_logits: true,
            fc_size: 100,
            num_classes,
            ablation: Ablation::default(),
        }
    }

    /// Cell vector size `d0`: `2H` with Att-BiRNN, otherwise large enough to
    /// hold a word vector.
    pub fn cell_dim(&self) -> usize {
        if self.ablation.use_att_birnn {
            2 * self.hidden
        } else {
            (2 * self.hidden).max(self.word_dim)
        }
    }

    pub fn pooled_dim(&self) -> usize {
        let a = &self.ablation;
        if !a.use_conv_column && !a.use_conv_row {
            return self.cell_dim();
        }
        let mut n = 0;
        if a.use_conv_column {
            n += self.column_filters * self.column_widths.len();
        }
        if a.use_conv_row {
            n += self.row_filters * self.row_widths.len();
        }
        n
    }

    /// F
    pub fn fc_dim(&self) -> usize {
        if self.fc_equals_logits {
            self.num_classes
        } else {
            self.fc_size
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rows == 0 || self.seq_len == 0 || self.word_dim == 0 || self.num_classes == 0 {
            return bad("m, T, d_w and K must be positive".into());
        }
        if self.ablation.use_att_birnn && (self.hidden == 0 || self.attention == 0) {
            return bad("H and A must be positive".into());
        }
        if self.cell_dim() < 3 {
            return bad("cell dimension d0 must be at least 3 to hold dates".into());
        }
        if self.ablation.use_conv_column {
            if self.column_widths.is_empty() || self.column_filters == 0 {
                return bad("column convolution needs widths and filters".into());
            }
            if let Some(k) = self.column_widths.iter().find(|&&k| k < 2 || k > self.rows) {
                return bad(format!("column filter height {k} outside 2..={}", self.rows));
            }
        }
        if self.ablation.use_conv_row {
            if self.row_widths.is_empty() || self.row_filters == 0 {
                return bad("row convolution needs widths and filters".into());
            }
            if let Some(k) = self.row_widths.iter().find(|&&k| k < 2 || k > self.surrounding + 1) {
                return bad(format!("row filter width {k} outside 2..={}", self.surrounding + 1));
            }
        }
        if !self.fc_equals_logits && self.fc_size == 0 {
            return bad("F must be positive".into());
        }
        Ok(())
    }

    /// Cells whose embeddings reach the output: the target column for the
    /// column branch, the main-cell row for the row branch, the main cell
    /// alone when neither branch is on.
    fn used_cells(&self) -> Vec<(usize, usize)> {
        let a = &self.ablation;
        let mut cells = Vec::new();
        if a.use_conv_column {
            cells.extend((0..self.rows).map(|r| (r, 0)));
        }
        if a.use_conv_row {
            cells.extend((0..=self.surrounding).map(|c| (0, c)).filter(|&(_, c)| !(a.use_conv_column && c == 0)));
        }
        if cells.is_empty() {
            cells.push((0, 0));
        }
        cells
    }
}

/// Output of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// FC layer output `f^{hnn}`
    pub features: Array1<f64>,
    /// softmax scores `y^{hnn}`
    pub scores: ScoreVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnnModel {
    config: HnnConfig,
    params: HnnParams,
    catalog: ClassCatalog,
}

struct NetTrace {
    col_traces: Vec<conv::PoolTrace>,
    row_traces: Vec<conv::PoolTrace>,
    pooled: Array1<f64>,
    features: Array1<f64>,
    logits: Array1<f64>,
}

struct CellForward {
    pos: (usize, usize),
    trace: Option<attention::CellTrace>,
}

struct SampleTrace {
    cells: Vec<CellForward>,
    tensor: Array3<f64>,
    net: NetTrace,
}

impl HnnModel {
    /// Fresh model with parameters drawn uniformly from `±INIT_SCALE`.
    pub fn new(config: HnnConfig, catalog: ClassCatalog, seed: u64) -> Result<Self> {
        let mut model = HnnModel::zeroed(config, catalog)?;
        model
            .params
            .randomize(&mut ChaCha8Rng::seed_from_u64(seed), INIT_SCALE);
        Ok(model)
    }

    pub fn zeroed(config: HnnConfig, catalog: ClassCatalog) -> Result<Self> {
        config.validate()?;
        if catalog.len() != config.num_classes {
            return Err(Error::Config(format!(
                "catalog has {} classes, model expects {}",
                catalog.len(),
                config.num_classes
            )));
        }
        Ok(HnnModel {
            params: HnnParams::zeros(&config),
            config,
            catalog,
        })
    }

    pub fn config(&self) -> &HnnConfig {
        &self.config
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn params(&self) -> &HnnParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut HnnParams {
        &mut self.params
    }

    /// Fails when `catalog` is not the one the model was built against.
    pub fn check_catalog(&self, catalog: &ClassCatalog) -> Result<()> {
        if catalog.hash() != self.catalog.hash() {
            return Err(Error::CatalogMismatch {
                expected: self.catalog.hash(),
                found: catalog.hash(),
            });
        }
        Ok(())
    }

    pub fn encode(&self, mt: &MicroTable, emb: &EmbeddingTable) -> Result<EncodedMicroTable> {
        let violations = validate_micro_table(mt, self.config.rows, self.config.surrounding);
        if let Some(v) = violations.first() {
            return Err(Error::Shape(v.to_string()));
        }
        if emb.dim() != self.config.word_dim {
            return Err(Error::Shape(format!(
                "embedding dimension {} but model expects {}",
                emb.dim(),
                self.config.word_dim
            )));
        }
        Ok(encode_micro_table(mt, emb, self.config.seq_len, self.config.cell_dim()))
    }

    /// Attention-pooled BiGRU embedding of a `T × d_w` word matrix.
    pub fn birnn_attention_embed(&self, words: ArrayView2<f64>) -> Result<AttentionOutput> {
        let cell = self
            .params
            .cell
            .as_ref()
            .ok_or_else(|| Error::Config("Att-BiRNN is disabled in this model".into()))?;
        if words.ncols() != self.config.word_dim || words.nrows() == 0 {
            return Err(Error::Shape(format!(
                "expected T × {} word matrix, got {:?}",
                self.config.word_dim,
                words.shape()
            )));
        }
        Ok(attention::embed(cell, words))
    }

    fn embed_cell(&self, cell: &EncodedCell) -> (Array1<f64>, Option<attention::CellTrace>) {
        let d0 = self.config.cell_dim();
        match cell {
            EncodedCell::Deterministic(v) => (v.clone(), None),
            EncodedCell::Entity { len: 0, .. } => (Array1::zeros(d0), None),
            EncodedCell::Entity { tokens, len } => match &self.params.cell {
                Some(p) => {
                    let t = attention::forward(p, tokens.view());
                    (t.output.clone(), Some(t))
                }
                None => {
                    let mut out = Array1::zeros(d0);
                    let mean = tokens.slice(s![..*len, ..]).sum_axis(Axis(0)) / *len as f64;
                    out.slice_mut(s![..mean.len()]).assign(&mean);
                    (out, None)
                }
            },
        }
    }

    /// Cell vector as it enters the convolution layer.
    pub fn cell_embedding(&self, cell: &EncodedCell) -> Array1<f64> {
        self.embed_cell(cell).0
    }

    /// The full `m × (l+1) × d0` tensor `[𝓛, L_1, .., L_l]`.
    pub fn embed_encoded(&self, enc: &EncodedMicroTable) -> Array3<f64> {
        let mut tensor = Array3::zeros((enc.rows(), enc.cols(), self.config.cell_dim()));
        for (r, row) in enc.grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                tensor.slice_mut(s![r, c, ..]).assign(&self.cell_embedding(cell));
            }
        }
        tensor
    }

    pub fn embed_micro_table(&self, mt: &MicroTable, emb: &EmbeddingTable) -> Result<Array3<f64>> {
        Ok(self.embed_encoded(&self.encode(mt, emb)?))
    }

    fn net_forward(&self, tensor: &Array3<f64>) -> NetTrace {
        let p = &self.params;
        let mut pooled = Vec::with_capacity(self.config.pooled_dim());
        let mut col_traces = Vec::new();
        let mut row_traces = Vec::new();
        let column = tensor.slice(s![.., 0, ..]);
        for bank in &p.column_conv {
            let (v, t) = conv::forward(bank, column);
            pooled.extend(v.iter());
            col_traces.push(t);
        }
        let row = tensor.slice(s![0, .., ..]);
        for bank in &p.row_conv {
            let (v, t) = conv::forward(bank, row);
            pooled.extend(v.iter());
            row_traces.push(t);
        }
        if p.column_conv.is_empty() && p.row_conv.is_empty() {
            pooled.extend(tensor.slice(s![0, 0, ..]).iter());
        }
        let pooled = Array1::from(pooled);
        let features = pooled.dot(&p.fc_w) + &p.fc_b;
        let logits = match &p.head {
            Some(h) => features.dot(h),
            None => features.clone(),
        };
        NetTrace {
            col_traces,
            row_traces,
            pooled,
            features,
            logits,
        }
    }

    /// Convolution, pooling, FC and softmax over an embedded micro table.
    pub fn forward(&self, tensor: &Array3<f64>) -> Result<Forward> {
        let expected = (
            self.config.rows,
            self.config.surrounding + 1,
            self.config.cell_dim(),
        );
        if tensor.dim() != expected {
            return Err(Error::Shape(format!(
                "tensor is {:?}, model expects {:?}",
                tensor.dim(),
                expected
            )));
        }
        let net = self.net_forward(tensor);
        Ok(Forward {
            scores: ScoreVector::softmax(net.logits.as_slice().expect("contiguous")),
            features: net.features,
        })
    }

    fn trace(&self, enc: &EncodedMicroTable) -> SampleTrace {
        let mut tensor = Array3::zeros((enc.rows(), enc.cols(), self.config.cell_dim()));
        let cells = self
            .config
            .used_cells()
            .into_iter()
            .map(|(r, c)| {
                let (v, trace) = self.embed_cell(&enc.grid[r][c]);
                tensor.slice_mut(s![r, c, ..]).assign(&v);
                CellForward { pos: (r, c), trace }
            })
            .collect();
        let net = self.net_forward(&tensor);
        SampleTrace { cells, tensor, net }
    }

    /// Forward pass that only embeds the cells the enabled branches read.
    pub fn score_encoded(&self, enc: &EncodedMicroTable) -> Forward {
        let net = self.trace(enc).net;
        Forward {
            scores: ScoreVector::softmax(net.logits.as_slice().expect("contiguous")),
            features: net.features,
        }
    }

    pub fn score(&self, mt: &MicroTable, emb: &EmbeddingTable) -> Result<Forward> {
        Ok(self.score_encoded(&self.encode(mt, emb)?))
    }

    /// Cross-entropy of one sample and its gradient.
    fn sample_gradient(&self, enc: &EncodedMicroTable, label: usize) -> (f64, HnnParams) {
        let p = &self.params;
        let trace = self.trace(enc);
        let net = &trace.net;
        let max = net.logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + net.logits.mapv(|z| (z - max).exp()).sum().ln();
        let loss = lse - net.logits[label];

        let mut d_logits = net.logits.mapv(|z| (z - lse).exp());
        d_logits[label] -= 1.0;

        let mut grad = HnnParams::zeros(&self.config);
        let d_features = match (&p.head, &mut grad.head) {
            (Some(h), Some(gh)) => {
                *gh += &outer(&net.features, &d_logits);
                h.dot(&d_logits)
            }
            _ => d_logits,
        };
        grad.fc_w += &outer(&net.pooled, &d_features);
        grad.fc_b += &d_features;
        let d_pooled = p.fc_w.dot(&d_features);

        let (rows, cols, d0) = trace.tensor.dim();
        let mut d_tensor = Array3::<f64>::zeros((rows, cols, d0));
        let mut offset = 0;
        let mut d_column = Array2::zeros((rows, d0));
        let column = trace.tensor.slice(s![.., 0, ..]);
        for ((bank, gbank), t) in p.column_conv.iter().zip(grad.column_conv.iter_mut()).zip(&net.col_traces) {
            let n = bank.count();
            let dp = &d_pooled.as_slice().expect("contiguous")[offset..offset + n];
            conv::backward(bank, column, t, dp, gbank, &mut d_column);
            offset += n;
        }
        let mut d_row = Array2::zeros((cols, d0));
        let row = trace.tensor.slice(s![0, .., ..]);
        for ((bank, gbank), t) in p.row_conv.iter().zip(grad.row_conv.iter_mut()).zip(&net.row_traces) {
            let n = bank.count();
            let dp = &d_pooled.as_slice().expect("contiguous")[offset..offset + n];
            conv::backward(bank, row, t, dp, gbank, &mut d_row);
            offset += n;
        }
        if p.column_conv.is_empty() && p.row_conv.is_empty() {
            d_tensor.slice_mut(s![0, 0, ..]).assign(&d_pooled);
        } else {
            d_tensor.slice_mut(s![.., 0, ..]).assign(&d_column);
            let mut first_row = d_tensor.slice_mut(s![0, .., ..]);
            first_row += &d_row;
        }

        if let (Some(cp), Some(gc)) = (&p.cell, &mut grad.cell) {
            for cell in &trace.cells {
                if let Some(ct) = &cell.trace {
                    let (r, c) = cell.pos;
                    if let EncodedCell::Entity { tokens, .. } = &enc.grid[r][c] {
                        let d_out = d_tensor.slice(s![r, c, ..]).to_owned();
                        attention::backward(cp, ct, tokens.view(), &d_out, gc);
                    }
                }
            }
        }
        (loss, grad)
    }

    /// Mean softmax cross-entropy over the batch and its gradient with
    /// respect to every parameter. Per-sample gradients run in parallel and
    /// are summed in batch order.
    pub fn loss_and_gradients(&self, batch: &[(&EncodedMicroTable, usize)]) -> Result<(f64, HnnParams)> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        for (enc, label) in batch {
            if *label >= self.config.num_classes {
                return Err(Error::Config(format!("label {label} outside 0..{}", self.config.num_classes)));
            }
            if enc.rows() != self.config.rows || enc.cols() != self.config.surrounding + 1 {
                return Err(Error::Shape(format!(
                    "encoded micro table is {}×{}, model expects {}×{}",
                    enc.rows(),
                    enc.cols(),
                    self.config.rows,
                    self.config.surrounding + 1
                )));
            }
        }
        let parts: Vec<(f64, HnnParams)> = batch
            .par_iter()
            .map(|(enc, label)| self.sample_gradient(enc, *label))
            .collect();
        let scale = 1.0 / batch.len() as f64;
        let mut grad = HnnParams::zeros(&self.config);
        let mut loss = 0.0;
        for (l, g) in &parts {
            loss += l;
            grad.add_scaled(g, scale);
        }
        Ok((loss * scale, grad))
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    a.view()
        .insert_axis(Axis(1))
        .dot(&b.view().insert_axis(Axis(0)))
}
