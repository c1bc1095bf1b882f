use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HnnConfig;

/// Gate weights of one GRU direction: `W_* ∈ H×d_w`, `U_* ∈ H×H`, `b_* ∈ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_h: Array2<f64>,
    pub u_h: Array2<f64>,
    pub b_h: Array1<f64>,
    pub w_z: Array2<f64>,
    pub u_z: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_r: Array2<f64>,
    pub u_r: Array2<f64>,
    pub b_r: Array1<f64>,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Array2::zeros((hidden, input));
        let u = || Array2::zeros((hidden, hidden));
        let b = || Array1::zeros(hidden);
        GruParams {
            w_h: w(),
            u_h: u(),
            b_h: b(),
            w_z: w(),
            u_z: u(),
            b_z: b(),
            w_r: w(),
            u_r: u(),
            b_r: b(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_h.len()
    }

    pub fn input(&self) -> usize {
        self.w_h.ncols()
    }
}

/// `W_w ∈ A×d0`, `b_w ∈ A`, context vector `u_w ∈ A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub u: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellEncoderParams {
    pub forward: GruParams,
    pub backward: GruParams,
    pub attention: AttentionParams,
}

/// `κ` filters of one width, each `width × d0`, with one bias per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    pub width: usize,
    pub filters: Array3<f64>,
    pub bias: Array1<f64>,
}

impl ConvBank {
    pub fn zeros(width: usize, count: usize, dim: usize) -> Self {
        ConvBank {
            width,
            filters: Array3::zeros((count, width, dim)),
            bias: Array1::zeros(count),
        }
    }

    pub fn count(&self) -> usize {
        self.bias.len()
    }
}

/// Every learnable tensor of the network. Also used as the gradient type.
#[derive(Debug, Clone, PartialEq)]
pub struct HnnParams {
    pub cell: Option<CellEncoderParams>,
    pub column_conv: Vec<ConvBank>,
    pub row_conv: Vec<ConvBank>,
    /// pooled-feature dim × F
    pub fc_w: Array2<f64>,
    pub fc_b: Array1<f64>,
    /// F × K, only when F is not the logit layer itself
    pub head: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

fn contiguous<S, D>(a: &ndarray::ArrayBase<S, D>) -> &[f64]
where
    S: ndarray::Data<Elem = f64>,
    D: ndarray::Dimension,
{
    a.as_slice().expect("parameters are kept in standard layout")
}

fn contiguous_mut<S, D>(a: &mut ndarray::ArrayBase<S, D>) -> &mut [f64]
where
    S: ndarray::DataMut<Elem = f64>,
    D: ndarray::Dimension,
{
    a.as_slice_mut().expect("parameters are kept in standard layout")
}

macro_rules! gru_tensors {
    ($out:ident, $prefix:expr, $g:expr, $conv:ident) => {
        $out.push((format!("{}.w_h", $prefix), $g.w_h.shape().to_vec(), $conv(&$g.w_h)));
        $out.push((format!("{}.u_h", $prefix), $g.u_h.shape().to_vec(), $conv(&$g.u_h)));
        $out.push((format!("{}.b_h", $prefix), $g.b_h.shape().to_vec(), $conv(&$g.b_h)));
        $out.push((format!("{}.w_z", $prefix), $g.w_z.shape().to_vec(), $conv(&$g.w_z)));
        $out.push((format!("{}.u_z", $prefix), $g.u_z.shape().to_vec(), $conv(&$g.u_z)));
        $out.push((format!("{}.b_z", $prefix), $g.b_z.shape().to_vec(), $conv(&$g.b_z)));
        $out.push((format!("{}.w_r", $prefix), $g.w_r.shape().to_vec(), $conv(&$g.w_r)));
        $out.push((format!("{}.u_r", $prefix), $g.u_r.shape().to_vec(), $conv(&$g.u_r)));
        $out.push((format!("{}.b_r", $prefix), $g.b_r.shape().to_vec(), $conv(&$g.b_r)));
    };
}

impl HnnParams {
    pub fn zeros(config: &HnnConfig) -> Self {
        let d0 = config.cell_dim();
        let cell = config.ablation.use_att_birnn.then(|| CellEncoderParams {
            forward: GruParams::zeros(config.word_dim, config.hidden),
            backward: GruParams::zeros(config.word_dim, config.hidden),
            attention: AttentionParams {
                w: Array2::zeros((config.attention, d0)),
                b: Array1::zeros(config.attention),
                u: Array1::zeros(config.attention),
            },
        });
        let banks = |on: bool, widths: &[usize], count: usize| -> Vec<ConvBank> {
            if on {
                widths.iter().map(|&w| ConvBank::zeros(w, count, d0)).collect()
            } else {
                Vec::new()
            }
        };
        HnnParams {
            cell,
            column_conv: banks(config.ablation.use_conv_column, &config.column_widths, config.column_filters),
            row_conv: banks(config.ablation.use_conv_row, &config.row_widths, config.row_filters),
            fc_w: Array2::zeros((config.pooled_dim(), config.fc_dim())),
            fc_b: Array1::zeros(config.fc_dim()),
            head: (!config.fc_equals_logits)
                .then(|| Array2::zeros((config.fc_dim(), config.num_classes))),
        }
    }

    /// Uniform(-scale, scale) in the fixed tensor order.
    pub fn randomize<R: Rng>(&mut self, rng: &mut R, scale: f64) {
        for t in self.tensors_mut() {
            for v in t {
                *v = rng.gen_range(-scale..scale);
            }
        }
    }

    /// All tensors in their fixed declaration order.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        if let Some(c) = &self.cell {
            gru_tensors!(out, "gru_fwd", c.forward, contiguous);
            gru_tensors!(out, "gru_bwd", c.backward, contiguous);
            let a = &c.attention;
            out.push(("attn.w".into(), a.w.shape().to_vec(), contiguous(&a.w)));
            out.push(("attn.b".into(), a.b.shape().to_vec(), contiguous(&a.b)));
            out.push(("attn.u".into(), a.u.shape().to_vec(), contiguous(&a.u)));
        }
        for (prefix, banks) in [("conv_col", &self.column_conv), ("conv_row", &self.row_conv)] {
            for b in banks {
                out.push((format!("{prefix}{}.w", b.width), b.filters.shape().to_vec(), contiguous(&b.filters)));
                out.push((format!("{prefix}{}.b", b.width), b.bias.shape().to_vec(), contiguous(&b.bias)));
            }
        }
        out.push(("fc.w".into(), self.fc_w.shape().to_vec(), contiguous(&self.fc_w)));
        out.push(("fc.b".into(), self.fc_b.shape().to_vec(), contiguous(&self.fc_b)));
        if let Some(h) = &self.head {
            out.push(("head.w".into(), h.shape().to_vec(), contiguous(h)));
        }
        out.into_iter()
            .map(|(name, shape, data)| TensorRef { name, shape, data })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        if let Some(c) = &mut self.cell {
            for g in [&mut c.forward, &mut c.backward] {
                out.push(contiguous_mut(&mut g.w_h));
                out.push(contiguous_mut(&mut g.u_h));
                out.push(contiguous_mut(&mut g.b_h));
                out.push(contiguous_mut(&mut g.w_z));
                out.push(contiguous_mut(&mut g.u_z));
                out.push(contiguous_mut(&mut g.b_z));
                out.push(contiguous_mut(&mut g.w_r));
                out.push(contiguous_mut(&mut g.u_r));
                out.push(contiguous_mut(&mut g.b_r));
            }
            out.push(contiguous_mut(&mut c.attention.w));
            out.push(contiguous_mut(&mut c.attention.b));
            out.push(contiguous_mut(&mut c.attention.u));
        }
        for b in self.column_conv.iter_mut().chain(self.row_conv.iter_mut()) {
            out.push(contiguous_mut(&mut b.filters));
            out.push(contiguous_mut(&mut b.bias));
        }
        out.push(contiguous_mut(&mut self.fc_w));
        out.push(contiguous_mut(&mut self.fc_b));
        if let Some(h) = &mut self.head {
            out.push(contiguous_mut(h));
        }
        out
    }

    pub fn specs(&self) -> Vec<TensorSpec> {
        self.tensors()
            .into_iter()
            .map(|t| TensorSpec { name: t.name, shape: t.shape })
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &HnnParams, scale: f64) {
        let src: Vec<&[f64]> = other.tensors().into_iter().map(|t| t.data).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}
