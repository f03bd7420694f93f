//! Gradient-ascent updates. Updates carrying non-finite values are refused
//! and leave the parameters untouched.

use alloc::vec::Vec;

use crate::error::PolicyError;
use crate::policy::params::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// `params += lr * grads`.
pub fn apply_update(params: &mut PolicyParams, grads: &[f64], lr: f64) -> Result<(), PolicyError> {
    check(params, grads, lr)?;
    let next: Vec<f32> = params.data.iter().zip(grads).map(|(&p, &g)| (p as f64 + lr * g) as f32).collect();
    commit(params, next)
}

fn check(params: &PolicyParams, grads: &[f64], lr: f64) -> Result<(), PolicyError> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(PolicyError::BadLearningRate);
    }
    if grads.len() != params.len() {
        return Err(PolicyError::ShapeMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(PolicyError::NonFinite("gradient"));
    }
    Ok(())
}

fn commit(params: &mut PolicyParams, next: Vec<f32>) -> Result<(), PolicyError> {
    if next.iter().any(|v| !v.is_finite()) {
        return Err(PolicyError::NonFinite("updated parameters"));
    }
    params.data = next;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        Optimizer {
            kind,
            lr,
            m: alloc::vec![0.0; n],
            v: alloc::vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    /// One ascent step along `grads`.
    pub fn step(&mut self, params: &mut PolicyParams, grads: &[f64]) -> Result<(), PolicyError> {
        match self.kind {
            OptimizerKind::Sgd => {
                apply_update(params, grads, self.lr)?;
                self.t += 1;
                Ok(())
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                check(params, grads, self.lr)?;
                let t = self.t + 1;
                let mut m = self.m.clone();
                let mut v = self.v.clone();
                let c1 = 1.0 - libm::pow(beta1, t as f64);
                let c2 = 1.0 - libm::pow(beta2, t as f64);
                let mut next = Vec::with_capacity(params.len());
                for i in 0..params.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
                    let step = self.lr * (m[i] / c1) / (libm::sqrt(v[i] / c2) + eps);
                    next.push((params.data[i] as f64 + step) as f32);
                }
                commit(params, next)?;
                self.m = m;
                self.v = v;
                self.t = t;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> PolicyParams {
        PolicyParams::init_uniform(2, 0.05, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn zero_grad_or_zero_lr_is_identity() {
        let mut p = params();
        let before = p.clone();
        let n = p.len();
        apply_update(&mut p, &alloc::vec![0.0; n], 0.1).unwrap();
        assert_eq!(p, before);
        apply_update(&mut p, &alloc::vec![1.0; n], 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_update_is_refused() {
        let mut p = params();
        let before = p.clone();
        let mut g = alloc::vec![0.1; p.len()];
        g[7] = f64::NAN;
        assert_eq!(apply_update(&mut p, &g, 0.1), Err(PolicyError::NonFinite("gradient")));
        assert_eq!(p, before);
        let mut opt = Optimizer::new(OptimizerKind::adam(), 0.1, p.len());
        assert!(opt.step(&mut p, &g).is_err());
        assert_eq!(p, before);
        assert_eq!(opt.steps(), 0);
        let zeros = alloc::vec![0.0; p.len()];
        assert_eq!(apply_update(&mut p, &zeros, -1.0), Err(PolicyError::BadLearningRate));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = params();
        let before = p.clone();
        let mut opt = Optimizer::new(OptimizerKind::adam(), 1e-3, p.len());
        let g: Vec<f64> = (0..p.len()).map(|i| if i % 2 == 0 { 2.0 } else { -0.5 }).collect();
        opt.step(&mut p, &g).unwrap();
        for ((a, b), gi) in p.data.iter().zip(&before.data).zip(&g) {
            let d = *a as f64 - *b as f64;
            assert!((d.abs() - 1e-3).abs() < 1e-6 && d.signum() == gi.signum());
        }
    }
}
