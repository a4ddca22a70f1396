//! Single-layer forward LSTM: step/sequence forward passes and
//! backpropagation through time from the last hidden state.
//!
//! Weight layout: `w_ih` is DxG, `w_hh` is HxG and `b` is 1xG with
//! G = 4H and gates stacked as `[input | forget | candidate | output]`.

use super::matrix::Matrix;
use super::NnError;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
}

/// Gradient accumulators for the three LSTM parameter tensors.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_ih: Matrix,
    pub w_hh: Matrix,
    pub b: Matrix,
}

impl LstmGrads {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmGrads {
            w_ih: Matrix::zeros(input_dim, 4 * hidden),
            w_hh: Matrix::zeros(hidden, 4 * hidden),
            b: Matrix::zeros(1, 4 * hidden),
        }
    }
}

/// row-vector times matrix: out[j] = sum_k v[k] * m[k][j]
fn vecmat(v: &[f64], m: &Matrix) -> Vec<f64> {
    debug_assert_eq!(v.len(), m.rows);
    let mut out = vec![0.0; m.cols];
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        let row = m.row(k);
        for j in 0..m.cols {
            out[j] += vk * row[j];
        }
    }
    out
}

/// row-vector times transposed matrix: out[k] = dot(v, m.row(k))
fn vecmat_t(v: &[f64], m: &Matrix) -> Vec<f64> {
    debug_assert_eq!(v.len(), m.cols);
    (0..m.rows)
        .map(|k| m.row(k).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// grad += a^T * b (outer product of two row vectors)
fn outer_add(grad: &mut Matrix, a: &[f64], b: &[f64]) {
    debug_assert_eq!(grad.rows, a.len());
    debug_assert_eq!(grad.cols, b.len());
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        let row = grad.row_mut(k);
        for (j, &bj) in b.iter().enumerate() {
            row[j] += ak * bj;
        }
    }
}

/// One LSTM cell step. Returns (h_t, c_t, cache).
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w_ih: &Matrix,
    w_hh: &Matrix,
    b: &Matrix,
) -> Result<(Vec<f64>, Vec<f64>, LstmStepCache), NnError> {
    let hidden = h_prev.len();
    let gates = 4 * hidden;
    if x.len() != w_ih.rows
        || w_ih.cols != gates
        || w_hh.rows != hidden
        || w_hh.cols != gates
        || b.rows != 1
        || b.cols != gates
        || c_prev.len() != hidden
    {
        return Err(NnError::ShapeMismatch {
            op: "lstm_step",
            detail: format!(
                "x={} h={} c={} w_ih={}x{} w_hh={}x{} b={}x{}",
                x.len(),
                h_prev.len(),
                c_prev.len(),
                w_ih.rows,
                w_ih.cols,
                w_hh.rows,
                w_hh.cols,
                b.rows,
                b.cols
            ),
        });
    }

    let mut z = vecmat(x, w_ih);
    let zh = vecmat(h_prev, w_hh);
    for j in 0..gates {
        z[j] += zh[j] + b.data[j];
    }

    let i: Vec<f64> = (0..hidden).map(|k| sigmoid(z[k])).collect();
    let f: Vec<f64> = (0..hidden).map(|k| sigmoid(z[hidden + k])).collect();
    let g: Vec<f64> = (0..hidden).map(|k| z[2 * hidden + k].tanh()).collect();
    let o: Vec<f64> = (0..hidden).map(|k| sigmoid(z[3 * hidden + k])).collect();

    let c: Vec<f64> = (0..hidden)
        .map(|k| f[k] * c_prev[k] + i[k] * g[k])
        .collect();
    let h: Vec<f64> = (0..hidden).map(|k| o[k] * c[k].tanh()).collect();

    let cache = LstmStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        c: c.clone(),
    };
    Ok((h, c, cache))
}

/// Runs the cell over a token sequence from zero initial state and returns
/// the last hidden state plus the per-step caches.
pub fn lstm_sequence(
    xs: &[Vec<f64>],
    w_ih: &Matrix,
    w_hh: &Matrix,
    b: &Matrix,
) -> Result<(Vec<f64>, Vec<LstmStepCache>), NnError> {
    let hidden = w_hh.rows;
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (nh, nc, cache) = lstm_step(x, &h, &c, w_ih, w_hh, b)?;
        h = nh;
        c = nc;
        caches.push(cache);
    }
    Ok((h, caches))
}

/// Backpropagation through time given the gradient of the loss with respect
/// to the last hidden state. Accumulates parameter gradients into `grads`.
pub fn lstm_backward(
    d_h_last: &[f64],
    caches: &[LstmStepCache],
    w_hh: &Matrix,
    grads: &mut LstmGrads,
) {
    let hidden = w_hh.rows;
    let mut dh = d_h_last.to_vec();
    let mut dc = vec![0.0; hidden];

    for cache in caches.iter().rev() {
        let tanh_c: Vec<f64> = cache.c.iter().map(|v| v.tanh()).collect();

        // dz for the four gates, laid out [i|f|g|o]
        let mut dz = vec![0.0; 4 * hidden];
        for k in 0..hidden {
            let do_k = dh[k] * tanh_c[k];
            dc[k] += dh[k] * cache.o[k] * (1.0 - tanh_c[k] * tanh_c[k]);

            let di_k = dc[k] * cache.g[k];
            let df_k = dc[k] * cache.c_prev[k];
            let dg_k = dc[k] * cache.i[k];

            dz[k] = di_k * cache.i[k] * (1.0 - cache.i[k]);
            dz[hidden + k] = df_k * cache.f[k] * (1.0 - cache.f[k]);
            dz[2 * hidden + k] = dg_k * (1.0 - cache.g[k] * cache.g[k]);
            dz[3 * hidden + k] = do_k * cache.o[k] * (1.0 - cache.o[k]);
        }

        outer_add(&mut grads.w_ih, &cache.x, &dz);
        outer_add(&mut grads.w_hh, &cache.h_prev, &dz);
        for (j, &d) in dz.iter().enumerate() {
            grads.b.data[j] += d;
        }

        dh = vecmat_t(&dz, w_hh);
        for k in 0..hidden {
            dc[k] *= cache.f[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }

    #[test]
    fn zero_params_and_inputs_give_zero_state() {
        let (h, c, _) = lstm_step(
            &[0.0, 0.0],
            &[0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
            &Matrix::zeros(2, 12),
            &Matrix::zeros(3, 12),
            &Matrix::zeros(1, 12),
        )
        .unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(c, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_carries_cell_state() {
        // Large forget bias pushes f to 1; large negative input bias pushes
        // i to 0, so c_t must track c_prev.
        let hidden = 2;
        let mut b = Matrix::zeros(1, 4 * hidden);
        for k in 0..hidden {
            b.data[k] = -25.0; // input gate ~ 0
            b.data[hidden + k] = 25.0; // forget gate ~ 1
        }
        let c_prev = vec![0.37, -1.2];
        let (_, c, _) = lstm_step(
            &[0.0],
            &[0.0; 2],
            &c_prev,
            &Matrix::zeros(1, 8),
            &Matrix::zeros(2, 8),
            &b,
        )
        .unwrap();
        for (a, e) in c.iter().zip(&c_prev) {
            assert!((a - e).abs() < 1e-8, "{a} vs {e}");
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let r = lstm_step(
            &[0.0, 0.0],
            &[0.0],
            &[0.0],
            &Matrix::zeros(3, 4),
            &Matrix::zeros(1, 4),
            &Matrix::zeros(1, 4),
        );
        assert!(r.is_err());
    }

    #[test]
    fn backward_matches_finite_differences_over_many_seeds() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(2..5);
            let hidden = rng.random_range(2..5);
            let steps = rng.random_range(1..4);
            check_backward_against_fd(seed, d, hidden, steps);
        }
    }

    fn check_backward_against_fd(seed: u64, d: usize, hidden: usize, steps: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919).wrapping_add(1));
        let w_ih = rand_matrix(d, 4 * hidden, &mut rng);
        let w_hh = rand_matrix(hidden, 4 * hidden, &mut rng);
        let b = rand_matrix(1, 4 * hidden, &mut rng);
        let xs: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();

        let loss = |w_ih: &Matrix, w_hh: &Matrix, b: &Matrix| -> f64 {
            let (h, _) = lstm_sequence(&xs, w_ih, w_hh, b).unwrap();
            h.iter().sum()
        };

        let (h, caches) = lstm_sequence(&xs, &w_ih, &w_hh, &b).unwrap();
        let mut grads = LstmGrads::zeros(d, hidden);
        lstm_backward(&vec![1.0; h.len()], &caches, &w_hh, &mut grads);

        let h_step = 1e-5;
        let check = |value: &Matrix, grad: &Matrix, which: usize| {
            for idx in 0..value.data.len() {
                let mut wp = value.clone();
                let mut wm = value.clone();
                wp.data[idx] += h_step;
                wm.data[idx] -= h_step;
                let (lp, lm) = match which {
                    0 => (loss(&wp, &w_hh, &b), loss(&wm, &w_hh, &b)),
                    1 => (loss(&w_ih, &wp, &b), loss(&w_ih, &wm, &b)),
                    _ => (loss(&w_ih, &w_hh, &wp), loss(&w_ih, &w_hh, &wm)),
                };
                let numeric = (lp - lm) / (2.0 * h_step);
                let analytic = grad.data[idx];
                let rel = (analytic - numeric).abs()
                    / (analytic.abs() + numeric.abs()).max(1e-8);
                assert!(
                    rel < 1e-4,
                    "seed {seed} ({d}x{hidden}, {steps} steps) idx {idx}: {analytic} vs {numeric}"
                );
            }
        };
        check(&w_ih, &grads.w_ih, 0);
        check(&w_hh, &grads.w_hh, 1);
        check(&b, &grads.b, 2);
    }
}
