//! Scalar-loop reference of the network forward pass and a central
//! finite-difference gradient checker. Nothing here calls into the model's
//! own forward code; only parameters and encoded inputs are shared.

use tabsema::encoder::{EncodedCell, EncodedMicroTable};
use tabsema::hnn::{ConvBank, GruParams, HnnModel};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mat_vec(m: &ndarray::Array2<f64>, v: &[f64], row: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..v.len() {
        s += m[[row, j]] * v[j];
    }
    s
}

fn gru_pass(p: &GruParams, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
    let hidden = p.b_h.len();
    let t_len = xs.len();
    let mut out = vec![vec![0.0; hidden]; t_len];
    let mut h = vec![0.0; hidden];
    let positions: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
    for t in positions {
        let x = &xs[t];
        let mut next = vec![0.0; hidden];
        for i in 0..hidden {
            let z = sigmoid(mat_vec(&p.w_z, x, i) + mat_vec(&p.u_z, &h, i) + p.b_z[i]);
            let r = sigmoid(mat_vec(&p.w_r, x, i) + mat_vec(&p.u_r, &h, i) + p.b_r[i]);
            let cand = (mat_vec(&p.w_h, x, i) + r * mat_vec(&p.u_h, &h, i) + p.b_h[i]).tanh();
            next[i] = (1.0 - z) * h[i] + z * cand;
        }
        h = next;
        out[t] = h.clone();
    }
    out
}

/// Attention weights and pooled vector of one entity cell.
pub fn att_birnn(model: &HnnModel, words: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let cell = model.params().cell.as_ref().expect("att-birnn on");
    let f = gru_pass(&cell.forward, words, false);
    let b = gru_pass(&cell.backward, words, true);
    let t_len = words.len();
    let e: Vec<Vec<f64>> = (0..t_len).map(|t| f[t].iter().chain(&b[t]).copied().collect()).collect();
    let att = &cell.attention;
    let a_dim = att.b.len();
    let mut scores = vec![0.0; t_len];
    for t in 0..t_len {
        for k in 0..a_dim {
            let u = (mat_vec(&att.w, &e[t], k) + att.b[k]).tanh();
            scores[t] += u * att.u[k];
        }
    }
    let mut denom = 0.0;
    for s in &scores {
        denom += s.exp();
    }
    let alpha: Vec<f64> = scores.iter().map(|s| s.exp() / denom).collect();
    let d0 = e[0].len();
    let mut a = vec![0.0; d0];
    for t in 0..t_len {
        for j in 0..d0 {
            a[j] += alpha[t] * e[t][j];
        }
    }
    (alpha, a)
}

fn cell_vector(model: &HnnModel, cell: &EncodedCell) -> Vec<f64> {
    let d0 = model.config().cell_dim();
    match cell {
        EncodedCell::Deterministic(v) => v.to_vec(),
        EncodedCell::Entity { tokens, len } => {
            if *len == 0 {
                return vec![0.0; d0];
            }
            let words: Vec<Vec<f64>> = tokens.rows().into_iter().map(|r| r.to_vec()).collect();
            if model.config().ablation.use_att_birnn {
                att_birnn(model, &words).1
            } else {
                let mut v = vec![0.0; d0];
                for w in words.iter().take(*len) {
                    for (j, x) in w.iter().enumerate() {
                        v[j] += x / *len as f64;
                    }
                }
                v
            }
        }
    }
}

fn conv_pool(bank: &ConvBank, rows: &[Vec<f64>]) -> Vec<f64> {
    let k = bank.width;
    let d = rows[0].len();
    let mut out = Vec::new();
    for j in 0..bank.bias.len() {
        let mut best = f64::NEG_INFINITY;
        for p in 0..=rows.len() - k {
            let mut s = bank.bias[j];
            for i in 0..k {
                for c in 0..d {
                    s += bank.filters[[j, i, c]] * rows[p + i][c];
                }
            }
            let act = if s > 0.0 { s } else { 0.0 };
            if act > best {
                best = act;
            }
        }
        out.push(best);
    }
    out
}

/// `(f_hnn, y)` computed with plain loops.
pub fn forward(model: &HnnModel, enc: &EncodedMicroTable) -> (Vec<f64>, Vec<f64>) {
    let cfg = model.config();
    let p = model.params();
    let column: Vec<Vec<f64>> = (0..cfg.rows).map(|r| cell_vector(model, &enc.grid[r][0])).collect();
    let row: Vec<Vec<f64>> = (0..=cfg.surrounding).map(|c| cell_vector(model, &enc.grid[0][c])).collect();
    let mut pooled = Vec::new();
    for bank in &p.column_conv {
        pooled.extend(conv_pool(bank, &column));
    }
    for bank in &p.row_conv {
        pooled.extend(conv_pool(bank, &row));
    }
    if p.column_conv.is_empty() && p.row_conv.is_empty() {
        pooled = column[0].clone();
    }
    let f_dim = p.fc_b.len();
    let mut f = vec![0.0; f_dim];
    for o in 0..f_dim {
        f[o] = p.fc_b[o];
        for i in 0..pooled.len() {
            f[o] += pooled[i] * p.fc_w[[i, o]];
        }
    }
    let logits = match &p.head {
        Some(h) => (0..h.ncols())
            .map(|c| (0..f_dim).map(|o| f[o] * h[[o, c]]).sum())
            .collect(),
        None => f.clone(),
    };
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z: &f64| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    (f, exps.iter().map(|e| e / total).collect())
}

fn batch_loss(model: &HnnModel, batch: &[(&EncodedMicroTable, usize)]) -> f64 {
    let mut total = 0.0;
    for (enc, label) in batch {
        let (_, y) = forward(model, enc);
        total -= y[*label].ln();
    }
    total / batch.len() as f64
}

/// Worst gradient discrepancy of a parameter tensor.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub tensor: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences on every scalar parameter, comparing against the
/// model's analytic gradient.
pub fn check_gradients(
    model: &HnnModel,
    batch: &[(&EncodedMicroTable, usize)],
    eps: f64,
    floor: f64,
) -> Vec<GradCheck> {
    let (_, grad) = model.loss_and_gradients(batch).unwrap();
    let analytic: Vec<(String, Vec<f64>)> =
        grad.tensors().into_iter().map(|t| (t.name, t.data.to_vec())).collect();
    let mut probe = model.clone();
    let mut out = Vec::new();
    for (ti, (name, a)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for i in 0..a.len() {
            let orig = probe.params().tensors()[ti].data[i];
            probe.params_mut().tensors_mut()[ti][i] = orig + eps;
            let plus = batch_loss(&probe, batch);
            probe.params_mut().tensors_mut()[ti][i] = orig - eps;
            let minus = batch_loss(&probe, batch);
            probe.params_mut().tensors_mut()[ti][i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(relative_error(a[i], numeric, floor));
        }
        out.push(GradCheck {
            tensor: name.clone(),
            checked: a.len(),
            max_rel_error: worst,
        });
    }
    out
}
