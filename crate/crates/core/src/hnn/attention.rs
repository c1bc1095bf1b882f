//! Bidirectional GRU over a cell's words followed by an attention layer that
//! pools the per-word states into one cell vector.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use super::gru::{self, GruTrace};
use super::params::CellEncoderParams;

#[derive(Debug, Clone)]
pub(crate) struct CellTrace {
    pub forward: GruTrace,
    pub backward: GruTrace,
    /// `T × 2H` word states `e_t`
    pub states: Array2<f64>,
    /// `T × A` values `u_t = tanh(W_w e_t + b_w)`
    pub projected: Array2<f64>,
    pub weights: Array1<f64>,
    pub output: Array1<f64>,
}

/// Output of the attention layer for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// `a = Σ_t α_t e_t`
    pub embedding: Array1<f64>,
    /// `α_t`, one per word position
    pub weights: Array1<f64>,
}

pub(crate) fn softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps = scores.mapv(|s| (s - max).exp());
    let sum = exps.sum();
    exps / sum
}

pub(crate) fn forward(p: &CellEncoderParams, words: ArrayView2<f64>) -> CellTrace {
    let fwd = gru::run(&p.forward, words, false);
    let bwd = gru::run(&p.backward, words, true);
    let states = concatenate(Axis(1), &[fwd.states().view(), bwd.states().view()])
        .expect("both directions have T rows");
    let att = &p.attention;
    let projected = (states.dot(&att.w.t()) + &att.b).mapv(f64::tanh);
    let weights = softmax(&projected.dot(&att.u));
    let output = weights.dot(&states);
    CellTrace {
        forward: fwd,
        backward: bwd,
        states,
        projected,
        weights,
        output,
    }
}

pub(crate) fn embed(p: &CellEncoderParams, words: ArrayView2<f64>) -> AttentionOutput {
    let t = forward(p, words);
    AttentionOutput {
        embedding: t.output,
        weights: t.weights,
    }
}

/// Accumulates the gradients of `d_out · a` into `grad`.
pub(crate) fn backward(
    p: &CellEncoderParams,
    trace: &CellTrace,
    words: ArrayView2<f64>,
    d_out: &Array1<f64>,
    grad: &mut CellEncoderParams,
) {
    let att = &p.attention;
    let alpha = &trace.weights;
    let e = &trace.states;

    let d_alpha = e.dot(d_out);
    let mean = alpha.dot(&d_alpha);
    let d_score = alpha * &(d_alpha - mean);

    // a = Σ α_t e_t
    let mut d_states = alpha
        .view()
        .insert_axis(Axis(1))
        .dot(&d_out.view().insert_axis(Axis(0)));

    grad.attention.u += &trace.projected.t().dot(&d_score);
    let d_projected = d_score
        .view()
        .insert_axis(Axis(1))
        .dot(&att.u.view().insert_axis(Axis(0)));
    let d_pre = d_projected * &trace.projected.mapv(|u| 1.0 - u * u);
    grad.attention.w += &d_pre.t().dot(e);
    grad.attention.b += &d_pre.sum_axis(Axis(0));
    d_states += &d_pre.dot(&att.w);

    let hidden = p.forward.hidden();
    gru::backward(
        &p.forward,
        &trace.forward,
        words,
        d_states.slice(s![.., ..hidden]),
        &mut grad.forward,
    );
    gru::backward(
        &p.backward,
        &trace.backward,
        words,
        d_states.slice(s![.., hidden..]),
        &mut grad.backward,
    );
}
