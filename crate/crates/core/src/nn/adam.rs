use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Bias-corrected adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self {
            step_count: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Applies one update to `segments`, which together hold the parameters
    /// in the same order as `grads`.
    pub fn step(&mut self, segments: &mut [&mut [f64]], grads: &[f64]) -> Result<()> {
        let total: usize = segments.iter().map(|s| s.len()).sum();
        if total != grads.len() || total != self.first_moment.len() {
            return Err(Error::Config(alloc::format!(
                "optimizer shape mismatch: {total} params, {} grads, {} accumulators",
                grads.len(),
                self.first_moment.len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        let step_size = self.learning_rate / bc1;
        let bc2_sqrt = libm::sqrt(bc2);
        let mut k = 0;
        for seg in segments.iter_mut() {
            for p in seg.iter_mut() {
                let g = grads[k];
                let m = &mut self.first_moment[k];
                let v = &mut self.second_moment[k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= step_size * *m / (libm::sqrt(*v) / bc2_sqrt + self.epsilon);
                k += 1;
            }
        }
        Ok(())
    }
}

/// Free-function form over a single flat parameter slice.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    state.step(&mut [params], grads)
}
