//! Per-feature normalization over the sentence rows of one cluster, with
//! running statistics for inference. A single-row input skips normalization
//! (its variance is undefined) and passes straight through gain and bias.

use super::matrix::Matrix;

pub const NORM_EPS: f64 = 1e-5;
pub const NORM_MOMENTUM: f64 = 0.9;

/// Exponentially-averaged feature statistics used at inference time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Matrix,
    pub var: Matrix,
}

impl RunningStats {
    pub fn new(features: usize) -> Self {
        RunningStats {
            mean: Matrix::zeros(1, features),
            var: Matrix::from_vec(1, features, vec![1.0; features]),
        }
    }
}

#[derive(Debug, Clone)]
pub enum NormCache {
    /// Batch statistics were used; the backward pass must account for the
    /// dependence of mean and variance on the inputs.
    Batch { x_hat: Matrix, inv_std: Vec<f64> },
    /// Statistics were constants (running stats or single-row passthrough).
    Frozen { x_hat: Matrix, inv_std: Vec<f64> },
}

pub fn feature_norm_forward(
    x: &Matrix,
    gain: &Matrix,
    bias: &Matrix,
    training: bool,
    running: &mut RunningStats,
    update_running: bool,
) -> (Matrix, NormCache) {
    assert_eq!(gain.cols, x.cols, "gain width mismatch");
    assert_eq!(bias.cols, x.cols, "bias width mismatch");
    let n = x.rows;
    let c = x.cols;

    let affine = |x_hat: &Matrix| -> Matrix {
        let mut y = x_hat.clone();
        for i in 0..n {
            for j in 0..c {
                y.data[i * c + j] = gain.data[j] * x_hat.data[i * c + j] + bias.data[j];
            }
        }
        y
    };

    if training && n > 1 {
        let mut mean = vec![0.0; c];
        for i in 0..n {
            for j in 0..c {
                mean[j] += x.data[i * c + j];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; c];
        for i in 0..n {
            for j in 0..c {
                let d = x.data[i * c + j] - mean[j];
                var[j] += d * d;
            }
        }
        for v in &mut var {
            *v /= n as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + NORM_EPS).sqrt()).collect();

        let mut x_hat = Matrix::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                x_hat.data[i * c + j] = (x.data[i * c + j] - mean[j]) * inv_std[j];
            }
        }

        if update_running {
            for j in 0..c {
                running.mean.data[j] =
                    NORM_MOMENTUM * running.mean.data[j] + (1.0 - NORM_MOMENTUM) * mean[j];
                running.var.data[j] =
                    NORM_MOMENTUM * running.var.data[j] + (1.0 - NORM_MOMENTUM) * var[j];
            }
        }

        let y = affine(&x_hat);
        (y, NormCache::Batch { x_hat, inv_std })
    } else if training {
        // single row: variance undefined, pass through gain/bias
        let x_hat = x.clone();
        let inv_std = vec![1.0; c];
        let y = affine(&x_hat);
        (y, NormCache::Frozen { x_hat, inv_std })
    } else {
        let inv_std: Vec<f64> = running
            .var
            .data
            .iter()
            .map(|v| 1.0 / (v + NORM_EPS).sqrt())
            .collect();
        let mut x_hat = Matrix::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                x_hat.data[i * c + j] = (x.data[i * c + j] - running.mean.data[j]) * inv_std[j];
            }
        }
        let y = affine(&x_hat);
        (y, NormCache::Frozen { x_hat, inv_std })
    }
}

/// Returns dx and accumulates dgain/dbias.
pub fn feature_norm_backward(
    dy: &Matrix,
    gain: &Matrix,
    cache: &NormCache,
    dgain: &mut Matrix,
    dbias: &mut Matrix,
) -> Matrix {
    let n = dy.rows;
    let c = dy.cols;
    let (x_hat, inv_std, batch) = match cache {
        NormCache::Batch { x_hat, inv_std } => (x_hat, inv_std, true),
        NormCache::Frozen { x_hat, inv_std } => (x_hat, inv_std, false),
    };

    for i in 0..n {
        for j in 0..c {
            dgain.data[j] += dy.data[i * c + j] * x_hat.data[i * c + j];
            dbias.data[j] += dy.data[i * c + j];
        }
    }

    let mut dx = Matrix::zeros(n, c);
    if !batch {
        for i in 0..n {
            for j in 0..c {
                dx.data[i * c + j] = dy.data[i * c + j] * gain.data[j] * inv_std[j];
            }
        }
        return dx;
    }

    // dx_i = inv_std * (dxh_i - mean(dxh) - x_hat_i * mean(dxh .* x_hat))
    for j in 0..c {
        let mut sum_dxh = 0.0;
        let mut sum_dxh_xhat = 0.0;
        for i in 0..n {
            let dxh = dy.data[i * c + j] * gain.data[j];
            sum_dxh += dxh;
            sum_dxh_xhat += dxh * x_hat.data[i * c + j];
        }
        let mean_dxh = sum_dxh / n as f64;
        let mean_dxh_xhat = sum_dxh_xhat / n as f64;
        for i in 0..n {
            let dxh = dy.data[i * c + j] * gain.data[j];
            dx.data[i * c + j] =
                inv_std[j] * (dxh - mean_dxh - x_hat.data[i * c + j] * mean_dxh_xhat);
        }
    }
    dx
}
