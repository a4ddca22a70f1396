//! Adam with bias correction and an L2 term added to the gradients before
//! the update.

use std::collections::HashMap;

use super::matrix::{Matrix, Parameter};

#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub timestep: usize,
    pub first_moment: HashMap<String, Matrix>,
    pub second_moment: HashMap<String, Matrix>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            timestep: 0,
            first_moment: HashMap::new(),
            second_moment: HashMap::new(),
        }
    }
}

/// One optimizer step over all parameters. `weight_decay * value` is added
/// to each gradient first, then the bias-corrected Adam update is applied.
pub fn adam_step(params: &mut [&mut Parameter], state: &mut AdamState, weight_decay: f64) {
    state.timestep += 1;
    let t = state.timestep as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    for p in params.iter_mut() {
        let m = state
            .first_moment
            .entry(p.name.clone())
            .or_insert_with(|| Matrix::zeros(p.value.rows, p.value.cols));
        let v = state
            .second_moment
            .entry(p.name.clone())
            .or_insert_with(|| Matrix::zeros(p.value.rows, p.value.cols));

        for idx in 0..p.value.data.len() {
            let g = p.grad.data[idx] + weight_decay * p.value.data[idx];
            m.data[idx] = state.beta1 * m.data[idx] + (1.0 - state.beta1) * g;
            v.data[idx] = state.beta2 * v.data[idx] + (1.0 - state.beta2) * g * g;
            let m_hat = m.data[idx] / bc1;
            let v_hat = v.data[idx] / bc2;
            p.value.data[idx] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_no_decay_leave_params() {
        let mut p = Parameter::new("w", Matrix::from_vec(1, 2, vec![1.0, -2.0]));
        let mut state = AdamState::new(0.0075);
        adam_step(&mut [&mut p], &mut state, 0.0);
        assert_eq!(p.value.data, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_on_unit_grad_moves_by_lr() {
        // At t = 1 bias correction cancels, so the update is
        // -lr * g / (|g| + eps) = -lr / (1 + eps) for g = 1.
        let mut p = Parameter::new("w", Matrix::from_vec(1, 1, vec![0.0]));
        p.grad.data[0] = 1.0;
        let mut state = AdamState::new(0.0075);
        adam_step(&mut [&mut p], &mut state, 0.0);
        assert!((p.value.data[0] + 0.0075).abs() < 1e-9);
    }

    #[test]
    fn weight_decay_shrinks_toward_zero() {
        let mut p = Parameter::new("w", Matrix::from_vec(1, 2, vec![3.0, -3.0]));
        let mut state = AdamState::new(0.01);
        adam_step(&mut [&mut p], &mut state, 1e-2);
        assert!(p.value.data[0] < 3.0);
        assert!(p.value.data[1] > -3.0);
    }

    #[test]
    fn timestep_advances() {
        let mut p = Parameter::new("w", Matrix::zeros(1, 1));
        let mut state = AdamState::new(0.0075);
        adam_step(&mut [&mut p], &mut state, 0.0);
        adam_step(&mut [&mut p], &mut state, 0.0);
        assert_eq!(state.timestep, 2);
    }
}
