use crate::error::{FdtnError, Result};
use crate::nn::param::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamSettings {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub settings: AdamSettings,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(params: &ParamSet, settings: AdamSettings) -> Self {
        let zeros = || {
            params
                .tensors()
                .iter()
                .map(|t| vec![0.0; t.len()])
                .collect()
        };
        Adam {
            settings,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected update using each tensor's accumulated `grad`.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        adam_step(params, &mut self.m, &mut self.v, &self.settings, self.t + 1)?;
        self.t += 1;
        Ok(())
    }
}

/// Adam update at step index `t` (1-based) with explicit moment state.
pub fn adam_step(
    params: &mut ParamSet,
    m: &mut [Vec<f64>],
    v: &mut [Vec<f64>],
    s: &AdamSettings,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(FdtnError::InvalidArgument(
            "adam step index starts at 1".into(),
        ));
    }
    if m.len() != params.len() || v.len() != params.len() {
        return Err(FdtnError::dims(
            format!("{} moment buffers", params.len()),
            format!("m {} / v {}", m.len(), v.len()),
        ));
    }
    for ((p, m), v) in params.tensors().iter().zip(m.iter()).zip(v.iter()) {
        if m.len() != p.len() || v.len() != p.len() {
            return Err(FdtnError::dims(
                format!("moments of length {} for {}", p.len(), p.name),
                format!("m {} / v {}", m.len(), v.len()),
            ));
        }
    }
    let bc1 = 1.0 - s.beta1.powf(t as f64);
    let bc2 = 1.0 - s.beta2.powf(t as f64);
    for ((p, m), v) in params
        .tensors_mut()
        .iter_mut()
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        for i in 0..p.value.len() {
            let g = p.grad[i];
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
            if s.lr != 0.0 {
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value[i] -= s.lr * m_hat / (v_hat.sqrt() + s.eps);
            }
        }
    }
    Ok(())
}
