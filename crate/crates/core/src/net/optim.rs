//! Nadam: Adam with Nesterov momentum and Dozat's momentum schedule.
//!
//! With `mu_t = beta1 * (1 - 0.5 * 0.96^(t * psi))` and `prod_t = mu_1 * ... * mu_t`:
//!
//! ```text
//! m_t = beta1 * m + (1 - beta1) * g
//! v_t = beta2 * v + (1 - beta2) * g^2
//! v_hat = v_t / (1 - beta2^t)
//! p -= lr * (1 - mu_t) / (1 - prod_t) * g / (sqrt(v_hat) + eps)
//! p -= lr * mu_{t+1} / (1 - prod_t * mu_{t+1}) * m_t / (sqrt(v_hat) + eps)
//! ```

use super::config::TrainConfig;
use crate::error::{shape_err, Result};
use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// `psi` in the momentum schedule.
    pub momentum_decay: f64,
}

impl Default for NadamHyper {
    fn default() -> Self {
        NadamHyper {
            learning_rate: 2e-6,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 0.004,
        }
    }
}

impl From<&TrainConfig> for NadamHyper {
    fn from(t: &TrainConfig) -> Self {
        NadamHyper {
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            momentum_decay: t.momentum_decay,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimState<T> {
    pub hyper: NadamHyper,
    pub step: u64,
    mu_product: f64,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Real> OptimState<T> {
    /// Zero moments shaped like `params`.
    pub fn new(hyper: NadamHyper, params: &[Tensor<T>]) -> Self {
        OptimState {
            hyper,
            step: 0,
            mu_product: 1.0,
            first: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            second: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    fn mu(&self, t: u64) -> f64 {
        self.hyper.beta1 * (1.0 - 0.5 * 0.96f64.powf(t as f64 * self.hyper.momentum_decay))
    }

    /// One update of every parameter from its gradient.
    pub fn step(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return shape_err(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.first.len(),
                params.len(),
                grads.len()
            ));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return shape_err(format!(
                    "parameter {:?} / gradient {:?} / moment {:?} disagree",
                    p.shape(),
                    g.shape(),
                    m.shape()
                ));
            }
        }
        self.step += 1;
        let t = self.step;
        let h = self.hyper;
        let mu_t = self.mu(t);
        let mu_next = self.mu(t + 1);
        self.mu_product *= mu_t;
        let grad_coef = T::lit(h.learning_rate * (1.0 - mu_t) / (1.0 - self.mu_product));
        let mom_coef = T::lit(h.learning_rate * mu_next / (1.0 - self.mu_product * mu_next));
        let v_corr = T::lit(1.0 - h.beta2.powf(t as f64));
        let (b1, b2) = (T::lit(h.beta1), T::lit(h.beta2));
        let (one, eps) = (T::one(), T::lit(h.epsilon));

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let denom = (*vv / v_corr).sqrt() + eps;
                *pv -= grad_coef * gv / denom + mom_coef * *mv / denom;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::vector(vec![v])]
    }

    #[test]
    fn zero_gradient_first_step_is_noop() {
        let mut p = vec![Tensor::vector(vec![0.3, -1.2])];
        let mut s = OptimState::new(NadamHyper::default(), &p);
        s.step(&mut p, &[Tensor::zeros(&[2])]).unwrap();
        assert_eq!(p[0].data(), &[0.3, -1.2]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn descends_on_half_square() {
        let hyper = NadamHyper {
            learning_rate: 0.1,
            ..NadamHyper::default()
        };
        let mut p = scalar(1.0);
        let mut s = OptimState::new(hyper, &p);
        let g = scalar(p[0].data()[0]);
        s.step(&mut p, &g).unwrap();
        assert!(p[0].data()[0] < 1.0);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut p = vec![Tensor::<f64>::zeros(&[3])];
        let mut s = OptimState::new(NadamHyper::default(), &p);
        assert!(s.step(&mut p, &[Tensor::zeros(&[2])]).is_err());
    }

    /// f(x, y) = (x^2 + 4 y^2) / 2 from (1, -1.5), lr 0.05. The reference
    /// trace was computed by an independent scalar script from the update
    /// equations in the module docs.
    #[test]
    fn quadratic_trace_and_convergence() {
        let hyper = NadamHyper {
            learning_rate: 0.05,
            ..NadamHyper::default()
        };
        let mut p = vec![Tensor::vector(vec![1.0, -1.5])];
        let mut s = OptimState::new(hyper, &p);
        let grad = |p: &[Tensor<f64>]| {
            let d = p[0].data();
            vec![Tensor::vector(vec![d[0], 4.0 * d[1]])]
        };
        let trace = [
            (0.9471774116104564, -1.4471774111702682),
            (0.9089487660857839, -1.4086214297844983),
            (0.8737542515838621, -1.3729380010532237),
        ];
        for &(x, y) in &trace {
            let g = grad(&p);
            s.step(&mut p, &g).unwrap();
            assert!((p[0].data()[0] - x).abs() < 1e-12);
            assert!((p[0].data()[1] - y).abs() < 1e-12);
        }
        for _ in 3..200 {
            let g = grad(&p);
            s.step(&mut p, &g).unwrap();
        }
        let g = grad(&p);
        let norm = g[0].data().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "{norm}");
    }
}
