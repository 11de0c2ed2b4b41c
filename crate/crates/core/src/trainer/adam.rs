use crate::error::{Error, Result};
use crate::nn::ParamTensor;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

/// Adam moments for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new(params: &[&ParamTensor]) -> Self {
        AdamState {
            learning_rate: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Re-creates the moments of any tensor whose size no longer matches,
    /// e.g. after the architecture changed between runs.
    pub fn track_shapes(&mut self, params: &[&ParamTensor]) {
        self.m.resize(params.len(), Vec::new());
        self.v.resize(params.len(), Vec::new());
        for ((m, v), p) in self.m.iter_mut().zip(&mut self.v).zip(params) {
            if m.len() != p.len() {
                *m = vec![0.0; p.len()];
                *v = vec![0.0; p.len()];
            }
        }
    }

    /// One update from the gradients stored in `params`. `step` is only used
    /// to label a non-finite-gradient error; nothing is modified in that case.
    pub fn step(&mut self, params: &mut [&mut ParamTensor], step: usize) -> Result<()> {
        if params.len() != self.m.len() || params.iter().zip(&self.m).any(|(p, m)| p.len() != m.len()) {
            return Err(Error::ContractViolation(
                "parameter shapes differ from the optimizer state".into(),
            ));
        }
        if params.iter().any(|p| p.grad.iter().any(|g| !g.is_finite())) {
            return Err(Error::NonFiniteGradient { step });
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let ParamTensor { value, grad, .. } = &mut **p;
            for (((theta, &g), m), v) in value.iter_mut().zip(grad.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *theta -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
