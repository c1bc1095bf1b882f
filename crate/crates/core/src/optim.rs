//! Adam over flat parameter slices.

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update. `params` and `grads` must list the same tensors in
    /// the same order on every call.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient count");
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2 on the first step, so the update is lr * sign(g)
        let mut p = vec![1.0, -2.0];
        let mut adam = Adam::new(0.1);
        adam.step(vec![&mut p], vec![&[3.0, -0.5]]);
        assert!((p[0] - 0.9).abs() < 1e-8);
        assert!((p[1] + 1.9).abs() < 1e-8);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut x = vec![5.0];
        let mut adam = Adam::new(0.1);
        for _ in 0..500 {
            let g = [2.0 * (x[0] - 1.5)];
            adam.step(vec![&mut x], vec![&g]);
        }
        assert!((x[0] - 1.5).abs() < 1e-2);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut p = vec![0.3, 0.7];
        let mut adam = Adam::new(0.0);
        for _ in 0..5 {
            adam.step(vec![&mut p], vec![&[1.0, -1.0]]);
        }
        assert_eq!(p, vec![0.3, 0.7]);
    }
}
