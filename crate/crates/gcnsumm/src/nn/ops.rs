//! Elementwise activations, softmax, dropout, cosine similarity, and
//! gradient clipping.

use rand::Rng;

use super::matrix::{Matrix, Parameter};
use super::NnError;

/// ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise.
pub fn elu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Derivative of ELU at the pre-activation x: 1 for x > 0, exp(x) otherwise.
pub fn elu_prime_scalar(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn elu(x: &Matrix) -> Matrix {
    x.map(elu_scalar)
}

/// Backward through ELU given the pre-activation z and the upstream gradient.
pub fn elu_backward(z: &Matrix, upstream: &Matrix) -> Matrix {
    z.map(elu_prime_scalar).hadamard(upstream)
}

/// Max-subtracted softmax over a vector. Errors on empty input.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>, NnError> {
    if v.is_empty() {
        return Err(NnError::EmptySoftmax);
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / sum).collect())
}

/// Cosine similarity; zero whenever either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine length mismatch");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Inverted dropout. Returns the output together with the scaled keep mask so
/// the backward pass can reuse it; at inference (or p = 0) the mask is all
/// ones and no randomness is consumed.
pub fn dropout(
    x: &Matrix,
    p: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Result<(Matrix, Matrix), NnError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NnError::InvalidDropout(p));
    }
    if !training || p == 0.0 {
        let mask = Matrix::from_vec(x.rows, x.cols, vec![1.0; x.rows * x.cols]);
        return Ok((x.clone(), mask));
    }
    let keep = 1.0 - p;
    let scale = 1.0 / keep;
    let mask_data: Vec<f64> = (0..x.rows * x.cols)
        .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
        .collect();
    let mask = Matrix::from_vec(x.rows, x.cols, mask_data);
    Ok((x.hadamard(&mask), mask))
}

/// Scales every gradient by max_norm / norm when the global L2 norm of all
/// gradients exceeds max_norm.
pub fn clip_global_norm(params: &mut [&mut Parameter], max_norm: f64) {
    let total: f64 = params.iter().map(|p| p.grad.sq_sum()).sum();
    let norm = total.sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.scale_assign(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn elu_values() {
        assert_eq!(elu_scalar(0.0), 0.0);
        assert_eq!(elu_scalar(1.0), 1.0);
        let e = elu_scalar(-1.0);
        assert!((e - ((-1.0_f64).exp() - 1.0)).abs() < 1e-15);
        assert!((e + 0.6321205588285577).abs() < 1e-12);
    }

    #[test]
    fn elu_prime_values() {
        assert_eq!(elu_prime_scalar(2.0), 1.0);
        assert!((elu_prime_scalar(-1.0) - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn softmax_uniform_and_shift() {
        let s = softmax(&[0.0, 0.0]).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
        let s = softmax(&[3.0, 3.0, 3.0]).unwrap();
        for v in &s {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_hand_value() {
        let s = softmax(&[1.0, 0.0]).unwrap();
        assert!((s[0] - 0.7310585786300049).abs() < 1e-12);
        assert!((s[1] - 0.2689414213699951).abs() < 1e-12);
        assert!((s[0] + s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_empty_errors() {
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = softmax(&[0.1, -0.7, 2.3]).unwrap();
        let b = softmax(&[100.1, 99.3, 102.3]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_values() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let c = cosine(&[1.0, 0.0], &[inv_sqrt2, inv_sqrt2]);
        assert!((c - 0.7071067811865475).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn dropout_identity_cases() {
        let x = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, _) = dropout(&x, 0.0, true, &mut rng).unwrap();
        assert_eq!(y, x);
        let (y, _) = dropout(&x, 0.5, false, &mut rng).unwrap();
        assert_eq!(y, x);
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());
        assert!(dropout(&x, -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_expectation() {
        // Monte Carlo: mean of the inverted-dropout output over many trials
        // approaches the input.
        let x = Matrix::from_vec(1, 4, vec![1.0, -2.0, 0.5, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let mut acc = [0.0; 4];
        for _ in 0..trials {
            let (y, _) = dropout(&x, 0.2, true, &mut rng).unwrap();
            for (a, v) in acc.iter_mut().zip(&y.data) {
                *a += v;
            }
        }
        for (a, v) in acc.iter().zip(&x.data) {
            let mean = a / trials as f64;
            assert!(
                (mean - v).abs() <= 0.02 * v.abs(),
                "mean {mean} vs {v}"
            );
        }
    }

    #[test]
    fn clip_scales_when_above() {
        let mut p = Parameter::new("w", Matrix::zeros(1, 2));
        p.grad = Matrix::from_vec(1, 2, vec![3.0, 4.0]);
        clip_global_norm(&mut [&mut p], 1.0);
        assert!((p.grad.data[0] - 0.6).abs() < 1e-12);
        assert!((p.grad.data[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn clip_leaves_small_and_zero_grads() {
        let mut p = Parameter::new("w", Matrix::zeros(1, 2));
        p.grad = Matrix::from_vec(1, 2, vec![0.3, 0.4]);
        clip_global_norm(&mut [&mut p], 1.0);
        assert_eq!(p.grad.data, vec![0.3, 0.4]);

        let mut z = Parameter::new("z", Matrix::zeros(1, 2));
        clip_global_norm(&mut [&mut z], 1.0);
        assert_eq!(z.grad.data, vec![0.0, 0.0]);
    }
}
