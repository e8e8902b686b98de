use serde::{Deserialize, Serialize};

use crate::nn::mlp::{Mlp, MlpGrads};
use crate::{Error, Result};

/// Learning rate shared by critics, actor and temperature.
pub const DEFAULT_LR: f64 = 3.0e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: DEFAULT_LR,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adaptive moment estimation state over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Adam {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        Self {
            config,
            step: 0,
            first: vec![0.0; num_params],
            second: vec![0.0; num_params],
        }
    }

    pub fn for_net(config: AdamConfig, net: &Mlp) -> Self {
        Self::new(config, net.num_params())
    }

    pub fn reset(&mut self) {
        self.step = 0;
        self.first.iter_mut().for_each(|v| *v = 0.0);
        self.second.iter_mut().for_each(|v| *v = 0.0);
    }

    /// One update over parameter and gradient slices visited in the same
    /// order. Gradients are of a loss to be minimised.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        let gtotal: usize = grads.iter().map(|g| g.len()).sum();
        if total != self.first.len() || gtotal != total || params.len() != grads.len() {
            return Err(Error::config(format!(
                "optimizer holds {} moments, got {total} params / {gtotal} grads",
                self.first.len()
            )));
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::numerical("non-finite gradient"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let mut offset = 0;
        for (p, g) in params.into_iter().zip(grads) {
            let m = &mut self.first[offset..offset + p.len()];
            let v = &mut self.second[offset..offset + p.len()];
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                if !p[i].is_finite() {
                    return Err(Error::numerical("parameter became non-finite"));
                }
            }
            offset += p.len();
        }
        Ok(())
    }

    pub fn step_net(&mut self, net: &mut Mlp, grads: &MlpGrads) -> Result<()> {
        self.update(net.param_slices_mut(), grads.slices())
    }

    pub fn step_scalar(&mut self, value: &mut f64, grad: f64) -> Result<()> {
        self.update(vec![std::slice::from_mut(value)], vec![std::slice::from_ref(&grad)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = Adam::new(AdamConfig::default(), 3);
        let mut p = [1.0, -2.0, 0.5];
        opt.update(vec![&mut p[..]], vec![&[0.0; 3][..]]).unwrap();
        assert_eq!(p, [1.0, -2.0, 0.5]);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction, m_hat = g and v_hat = g^2 after one step, so
        // the update is lr * g / (|g| + eps).
        for g in [0.3, -7.0, 1e-3] {
            let mut opt = Adam::new(AdamConfig::default(), 1);
            let mut p = 2.0;
            opt.step_scalar(&mut p, g).unwrap();
            let expected = 2.0 - 3.0e-4 * g / (g.abs() + 1e-8);
            assert!((p - expected).abs() < 1e-15, "{p} vs {expected}");
        }
    }

    #[test]
    fn constant_gradient_moves_against_sign() {
        let mut opt = Adam::new(AdamConfig::default(), 2);
        let mut p = [0.0, 0.0];
        for _ in 0..100 {
            opt.update(vec![&mut p[..]], vec![&[2.0, -0.5][..]]).unwrap();
        }
        assert!(p[0] < 0.0 && p[1] > 0.0);
        assert!(opt.second.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut opt = Adam::new(AdamConfig::default(), 1);
        let mut p = 0.0;
        assert!(matches!(opt.step_scalar(&mut p, f64::INFINITY), Err(Error::Numerical(_))));
    }
}
