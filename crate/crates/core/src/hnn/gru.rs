//! GRU recurrence with reset and update gates, plus its backward pass.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::GruParams;
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values of one step, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub z: Array1<f64>,
    pub r: Array1<f64>,
    pub candidate: Array1<f64>,
    /// `U_h h_{t-1}` before the reset gate is applied
    pub recurrent: Array1<f64>,
    pub h: Array1<f64>,
}

fn step_from_projections(
    p: &GruParams,
    wx_h: ArrayView1<f64>,
    wx_z: ArrayView1<f64>,
    wx_r: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
) -> Step {
    let z = (&wx_z + &p.u_z.dot(&h_prev) + &p.b_z).mapv(sigmoid);
    let r = (&wx_r + &p.u_r.dot(&h_prev) + &p.b_r).mapv(sigmoid);
    let recurrent = p.u_h.dot(&h_prev);
    let candidate = (&wx_h + &(&r * &recurrent) + &p.b_h).mapv(f64::tanh);
    let h = &(1.0 - &z) * &h_prev + &z * &candidate;
    Step {
        z,
        r,
        candidate,
        recurrent,
        h,
    }
}

/// One GRU step: gates `z`, `r`, candidate state, then
/// `h_t = (1 - z) ⊙ h_{t-1} + z ⊙ h̃_t`.
pub fn gru_step(x: ArrayView1<f64>, h_prev: ArrayView1<f64>, p: &GruParams) -> Result<Array1<f64>> {
    if x.len() != p.input() || h_prev.len() != p.hidden() {
        return Err(Error::Shape(format!(
            "gru step expects input {} and state {}, got {} and {}",
            p.input(),
            p.hidden(),
            x.len(),
            h_prev.len()
        )));
    }
    let (wx_h, wx_z, wx_r) = (p.w_h.dot(&x), p.w_z.dot(&x), p.w_r.dot(&x));
    Ok(step_from_projections(p, wx_h.view(), wx_z.view(), wx_r.view(), h_prev).h)
}

/// A full pass of one direction over a `T × d_w` sequence.
#[derive(Debug, Clone)]
pub(crate) struct GruTrace {
    pub reverse: bool,
    /// per position, in position order
    pub steps: Vec<Step>,
    /// state before each position, in position order
    pub h_prev: Array2<f64>,
}

impl GruTrace {
    /// `T × H` hidden states in position order.
    pub fn states(&self) -> Array2<f64> {
        let rows: Vec<ArrayView1<f64>> = self.steps.iter().map(|s| s.h.view()).collect();
        ndarray::stack(Axis(0), &rows).expect("equal state sizes")
    }
}

fn order(len: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    }
}

pub(crate) fn run(p: &GruParams, xs: ArrayView2<f64>, reverse: bool) -> GruTrace {
    let t_len = xs.nrows();
    let hidden = p.hidden();
    let wx_h = xs.dot(&p.w_h.t());
    let wx_z = xs.dot(&p.w_z.t());
    let wx_r = xs.dot(&p.w_r.t());
    let mut steps: Vec<Option<Step>> = vec![None; t_len];
    let mut h_prev = Array2::zeros((t_len, hidden));
    let mut h = Array1::zeros(hidden);
    for t in order(t_len, reverse) {
        h_prev.row_mut(t).assign(&h);
        let step = step_from_projections(p, wx_h.row(t), wx_z.row(t), wx_r.row(t), h.view());
        h = step.h.clone();
        steps[t] = Some(step);
    }
    GruTrace {
        reverse,
        steps: steps.into_iter().map(|s| s.expect("every position visited")).collect(),
        h_prev,
    }
}

/// Backpropagation through time. `d_states` is `∂L/∂h_t` per position from
/// the layer above; gradients are accumulated into `grad`.
pub(crate) fn backward(
    p: &GruParams,
    trace: &GruTrace,
    xs: ArrayView2<f64>,
    d_states: ArrayView2<f64>,
    grad: &mut GruParams,
) {
    let t_len = xs.nrows();
    let hidden = p.hidden();
    let mut da_h = Array2::zeros((t_len, hidden));
    let mut da_z = Array2::zeros((t_len, hidden));
    let mut da_r = Array2::zeros((t_len, hidden));
    let mut d_rec = Array2::zeros((t_len, hidden));
    let mut carry = Array1::<f64>::zeros(hidden);
    // reverse of the processing order
    for t in order(t_len, !trace.reverse) {
        let st = &trace.steps[t];
        let hp = trace.h_prev.row(t);
        let dh = &d_states.row(t) + &carry;
        let dz = &dh * &(&st.candidate - &hp);
        let dcand = &dh * &st.z;
        let mut dhp = &dh * &(1.0 - &st.z);

        let a_h = &dcand * &(1.0 - &st.candidate * &st.candidate);
        let dr = &a_h * &st.recurrent;
        let drec = &a_h * &st.r;
        let a_z = &dz * &(&st.z * &(1.0 - &st.z));
        let a_r = &dr * &(&st.r * &(1.0 - &st.r));

        dhp += &p.u_h.t().dot(&drec);
        dhp += &p.u_z.t().dot(&a_z);
        dhp += &p.u_r.t().dot(&a_r);
        carry = dhp;

        da_h.row_mut(t).assign(&a_h);
        da_z.row_mut(t).assign(&a_z);
        da_r.row_mut(t).assign(&a_r);
        d_rec.row_mut(t).assign(&drec);
    }
    grad.w_h += &da_h.t().dot(&xs);
    grad.w_z += &da_z.t().dot(&xs);
    grad.w_r += &da_r.t().dot(&xs);
    grad.u_h += &d_rec.t().dot(&trace.h_prev);
    grad.u_z += &da_z.t().dot(&trace.h_prev);
    grad.u_r += &da_r.t().dot(&trace.h_prev);
    grad.b_h += &da_h.sum_axis(Axis(0));
    grad.b_z += &da_z.sum_axis(Axis(0));
    grad.b_r += &da_r.sum_axis(Axis(0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn random_params(input: usize, hidden: usize, seed: u64) -> GruParams {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = GruParams::zeros(input, hidden);
        for a in [&mut p.w_h, &mut p.u_h, &mut p.w_z, &mut p.u_z, &mut p.w_r, &mut p.u_r] {
            a.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        }
        for b in [&mut p.b_h, &mut p.b_z, &mut p.b_r] {
            b.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        }
        p
    }

    #[test]
    fn closed_update_gate_keeps_state() {
        let mut p = random_params(3, 4, 1);
        p.b_z.fill(-50.0);
        let x = array![0.3, -0.2, 0.9];
        let h_prev = array![0.1, -0.4, 0.25, 0.8];
        let h = gru_step(x.view(), h_prev.view(), &p).unwrap();
        let dev = (&h - &h_prev).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn open_update_gate_takes_candidate() {
        let mut p = random_params(3, 4, 2);
        p.b_z.fill(50.0);
        let x = array![0.3, -0.2, 0.9];
        let h_prev = array![0.1, -0.4, 0.25, 0.8];
        let h = gru_step(x.view(), h_prev.view(), &p).unwrap();
        let r = (p.w_r.dot(&x) + p.u_r.dot(&h_prev) + &p.b_r).mapv(sigmoid);
        let cand = (p.w_h.dot(&x) + &r * &p.u_h.dot(&h_prev) + &p.b_h).mapv(f64::tanh);
        let dev = (&h - &cand).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn matches_scalar_evaluation() {
        // H = 2, d_w = 2, every product written out by hand
        let p = random_params(2, 2, 7);
        let x = [0.5, -1.25];
        let hp = [0.2, -0.7];
        let lin = |w: &Array2<f64>, u: &Array2<f64>, b: &Array1<f64>, i: usize, reset: Option<f64>| {
            let wx = w[[i, 0]] * x[0] + w[[i, 1]] * x[1];
            let uh = u[[i, 0]] * hp[0] + u[[i, 1]] * hp[1];
            wx + reset.unwrap_or(1.0) * uh + b[i]
        };
        let mut expected = [0.0; 2];
        for i in 0..2 {
            let z = sigmoid(lin(&p.w_z, &p.u_z, &p.b_z, i, None));
            let r = sigmoid(lin(&p.w_r, &p.u_r, &p.b_r, i, None));
            let cand = lin(&p.w_h, &p.u_h, &p.b_h, i, Some(r)).tanh();
            expected[i] = (1.0 - z) * hp[i] + z * cand;
        }
        let h = gru_step(array![x[0], x[1]].view(), array![hp[0], hp[1]].view(), &p).unwrap();
        for i in 0..2 {
            assert!((h[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = random_params(3, 4, 3);
        assert!(gru_step(array![1.0, 2.0].view(), Array1::zeros(4).view(), &p).is_err());
        assert!(gru_step(array![1.0, 2.0, 3.0].view(), Array1::zeros(2).view(), &p).is_err());
    }

    #[test]
    fn sequence_run_agrees_with_single_steps() {
        let p = random_params(3, 4, 5);
        let xs = array![[0.1, 0.2, 0.3], [0.0, -0.5, 1.0], [0.7, 0.7, -0.7]];
        for reverse in [false, true] {
            let trace = run(&p, xs.view(), reverse);
            let mut h = Array1::zeros(4);
            let idx: Vec<usize> = if reverse { vec![2, 1, 0] } else { vec![0, 1, 2] };
            for t in idx {
                h = gru_step(xs.row(t), h.view(), &p).unwrap();
                let dev = (&h - &trace.steps[t].h).mapv(f64::abs).sum();
                assert!(dev < 1e-14);
            }
        }
    }
}
