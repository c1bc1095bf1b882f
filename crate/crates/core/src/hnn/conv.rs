//! Valid 1-D convolution over a stack of cell vectors with ReLU and
//! per-filter max pooling.

use ndarray::{Array1, Array2, ArrayView2};

use super::params::ConvBank;

#[derive(Debug, Clone)]
pub(crate) struct PoolTrace {
    /// window start of the maximal pre-activation, per filter
    pub argmax: Vec<usize>,
    /// maximal pre-activation, per filter
    pub max_pre: Vec<f64>,
}

/// Pooled output `max_p relu(W_j ⊗ X[p..p+k] + b_j)` for every filter `j`.
/// `input` is `n × d` with `n >= width`.
pub(crate) fn forward(bank: &ConvBank, input: ArrayView2<f64>) -> (Array1<f64>, PoolTrace) {
    let input = input.as_standard_layout();
    let flat = input.as_slice().expect("standard layout");
    let d = input.ncols();
    let k = bank.width;
    let span = k * d;
    let positions = input.nrows() + 1 - k;
    let filters = bank.filters.as_slice().expect("standard layout");
    let mut argmax = Vec::with_capacity(bank.count());
    let mut max_pre = Vec::with_capacity(bank.count());
    for j in 0..bank.count() {
        let w = &filters[j * span..(j + 1) * span];
        let pre: Vec<f64> = (0..positions)
            .map(|p| {
                let x = &flat[p * d..p * d + span];
                bank.bias[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let (best, _) = relu_max_pool(&pre);
        argmax.push(best);
        max_pre.push(pre[best]);
    }
    let pooled = max_pre.iter().map(|&v| v.max(0.0)).collect();
    (pooled, PoolTrace { argmax, max_pre })
}

/// Position of the first maximum and `max(relu(pre))`; relu is monotone so
/// this equals `relu(max(pre))`.
pub(crate) fn relu_max_pool(pre: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (p, &v) in pre.iter().enumerate() {
        if v > pre[best] {
            best = p;
        }
    }
    (best, pre[best].max(0.0))
}

/// Routes `d_pooled` to the winning window of each active filter.
pub(crate) fn backward(
    bank: &ConvBank,
    input: ArrayView2<f64>,
    trace: &PoolTrace,
    d_pooled: &[f64],
    grad: &mut ConvBank,
    d_input: &mut Array2<f64>,
) {
    let k = bank.width;
    for (j, &g) in d_pooled.iter().enumerate().take(bank.count()) {
        if trace.max_pre[j] <= 0.0 || g == 0.0 {
            continue;
        }
        let p = trace.argmax[j];
        grad.bias[j] += g;
        for i in 0..k {
            let x = input.row(p + i);
            let mut gw = grad.filters.slice_mut(ndarray::s![j, i, ..]);
            gw.scaled_add(g, &x);
            let w = bank.filters.slice(ndarray::s![j, i, ..]);
            d_input.row_mut(p + i).scaled_add(g, &w);
        }
    }
}
