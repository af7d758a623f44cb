//! Q-network for variable-size frame sets.
//!
//! The network sees a state as a `(rows, 5)` matrix and is built only from
//! per-row operations and a symmetric pool, so it accepts any row count:
//!
//! ```text
//! rows ─ conv(1x5 → H) ─ relu ─ conv 1x1 ─ relu ─ conv 1x1 ─ relu ─┬─ conv 1x1 (H → 1) ── A_j
//!                                                                 └─ mean over rows ─ dense ─ relu ─ dense ── V
//! Q_j = V + A_j - mean(A)
//! ```
//!
//! Gradients are written out by hand for exactly these operations.

mod checkpoint;
mod layers;
mod optim;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use layers::{mean_rows, relu, relu_backward, RowConv};
pub use optim::Adam;
pub use tensor::{Param, Tensor};

use rand::Rng;
use thiserror::Error;

use crate::rlenv::{StateMatrix, FEATURES};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("state has no rows")]
    EmptyState,
    #[error("non-finite input at row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },
    #[error("action row {action} out of range for {rows} rows")]
    BadAction { action: usize, rows: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QOutput {
    pub value: f64,
    pub advantage: Vec<f64>,
    pub q: Vec<f64>,
}

impl QOutput {
    /// Index of the largest Q value; ties go to the lowest row.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &q) in self.q.iter().enumerate() {
            if q > self.q[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.q[self.argmax()]
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    rows: usize,
    x: Vec<f64>,
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    z3: Vec<f64>,
    h3: Vec<f64>,
    pooled: Vec<f64>,
    zv: Vec<f64>,
    hv: Vec<f64>,
    pub output: QOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    /// Per-feature divisors applied to raw state rows.
    pub scale: [f64; FEATURES],
    pub hidden: usize,
    pub embed: RowConv,
    pub conv2: RowConv,
    pub conv3: RowConv,
    pub advantage: RowConv,
    pub value_hidden: RowConv,
    pub value_out: RowConv,
}

/// One regression sample: the state, the action taken and its TD target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub rows: &'a [[f64; FEATURES]],
    pub action: usize,
    pub target: f64,
}

pub const DEFAULT_HIDDEN: usize = 32;

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(hidden: usize, scale: [f64; FEATURES], rng: &mut R) -> Self {
        Self {
            scale,
            hidden,
            embed: RowConv::new(FEATURES, hidden, rng),
            conv2: RowConv::new(hidden, hidden, rng),
            conv3: RowConv::new(hidden, hidden, rng),
            advantage: RowConv::new(hidden, 1, rng),
            value_hidden: RowConv::new(hidden, hidden, rng),
            value_out: RowConv::new(hidden, 1, rng),
        }
    }

    /// Parameters in a fixed order, with stable names.
    pub fn named_params(&self) -> Vec<(&'static str, &Param)> {
        let layers: [(&str, &str, &RowConv); 6] = [
            ("feature.conv1.weight", "feature.conv1.bias", &self.embed),
            ("feature.conv2.weight", "feature.conv2.bias", &self.conv2),
            ("feature.conv3.weight", "feature.conv3.bias", &self.conv3),
            ("advantage.out.weight", "advantage.out.bias", &self.advantage),
            ("value.hidden.weight", "value.hidden.bias", &self.value_hidden),
            ("value.out.weight", "value.out.bias", &self.value_out),
        ];
        layers.into_iter().flat_map(|(w, b, l)| [(w, &l.weight), (b, &l.bias)]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::with_capacity(12);
        for l in [
            &mut self.embed,
            &mut self.conv2,
            &mut self.conv3,
            &mut self.advantage,
            &mut self.value_hidden,
            &mut self.value_out,
        ] {
            out.extend(l.params_mut());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    /// Hard copy of all parameters and input scaling from `other`.
    pub fn copy_from(&mut self, other: &QNetwork) {
        self.clone_from(other);
    }

    fn normalize(&self, rows: &[[f64; FEATURES]]) -> Result<Vec<f64>, NetError> {
        if rows.is_empty() {
            return Err(NetError::EmptyState);
        }
        let mut x = Vec::with_capacity(rows.len() * FEATURES);
        for (r, row) in rows.iter().enumerate() {
            for (f, (&v, &s)) in row.iter().zip(&self.scale).enumerate() {
                if !v.is_finite() {
                    return Err(NetError::NonFinite { row: r, feature: f });
                }
                x.push(v / s);
            }
        }
        Ok(x)
    }

    pub fn forward_cached(&self, rows: &[[f64; FEATURES]]) -> Result<ForwardCache, NetError> {
        let x = self.normalize(rows)?;
        let n = rows.len();
        let h = self.hidden;
        let z1 = self.embed.forward(&x, n);
        let h1 = relu(&z1);
        let z2 = self.conv2.forward(&h1, n);
        let h2 = relu(&z2);
        let z3 = self.conv3.forward(&h2, n);
        let h3 = relu(&z3);
        let advantage = self.advantage.forward(&h3, n);
        let pooled = mean_rows(&h3, n, h);
        let zv = self.value_hidden.forward(&pooled, 1);
        let hv = relu(&zv);
        let value = self.value_out.forward(&hv, 1)[0];
        let mean_a = advantage.iter().sum::<f64>() / n as f64;
        let q = advantage.iter().map(|&a| value + (a - mean_a)).collect();
        Ok(ForwardCache { rows: n, x, z1, h1, z2, h2, z3, h3, pooled, zv, hv, output: QOutput { value, advantage, q } })
    }

    pub fn forward(&self, rows: &[[f64; FEATURES]]) -> Result<QOutput, NetError> {
        Ok(self.forward_cached(rows)?.output)
    }

    pub fn forward_state(&self, state: &StateMatrix) -> Result<QOutput, NetError> {
        self.forward(&state.rows)
    }

    /// Accumulates `dL/dθ` given `dL/dQ_j` for every row.
    pub fn backward(&mut self, cache: &ForwardCache, grad_q: &[f64]) {
        let n = cache.rows;
        let h = self.hidden;
        debug_assert_eq!(grad_q.len(), n);
        // Q_j = V + A_j - mean(A)
        let grad_v: f64 = grad_q.iter().sum();
        let mean_g = grad_v / n as f64;
        let grad_a: Vec<f64> = grad_q.iter().map(|&g| g - mean_g).collect();

        let mut grad_h3 = self.advantage.backward(&cache.h3, n, &grad_a);

        let grad_hv = self.value_out.backward(&cache.hv, 1, &[grad_v]);
        let grad_zv = relu_backward(&cache.zv, &grad_hv);
        let grad_pooled = self.value_hidden.backward(&cache.pooled, 1, &grad_zv);
        let inv = 1.0 / n as f64;
        for r in 0..n {
            for c in 0..h {
                grad_h3[r * h + c] += grad_pooled[c] * inv;
            }
        }

        let g = relu_backward(&cache.z3, &grad_h3);
        let g = self.conv3.backward(&cache.h2, n, &g);
        let g = relu_backward(&cache.z2, &g);
        let g = self.conv2.backward(&cache.h1, n, &g);
        let g = relu_backward(&cache.z1, &g);
        self.embed.backward(&cache.x, n, &g);
    }

    /// Mean squared TD error over the batch.
    pub fn loss(&self, batch: &[Sample<'_>]) -> Result<f64, NetError> {
        let mut total = 0.0;
        for s in batch {
            let out = self.forward(s.rows)?;
            let q = *out.q.get(s.action).ok_or(NetError::BadAction { action: s.action, rows: s.rows.len() })?;
            total += (s.target - q).powi(2);
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Computes the batch loss and accumulates its gradient.
    pub fn loss_backward(&mut self, batch: &[Sample<'_>]) -> Result<f64, NetError> {
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        for s in batch {
            let cache = self.forward_cached(s.rows)?;
            let q =
                *cache.output.q.get(s.action).ok_or(NetError::BadAction { action: s.action, rows: s.rows.len() })?;
            let err = s.target - q;
            total += err * err;
            let mut grad_q = vec![0.0; cache.rows];
            grad_q[s.action] = -2.0 * err * scale;
            self.backward(&cache, &grad_q);
        }
        Ok(total * scale)
    }
}

/// `r + γ max_a' Q_target(s', a')`, with the bootstrap term fixed at zero
/// when the next frame set is empty.
pub fn td_target(reward: f64, next_state: &StateMatrix, target_net: &QNetwork, gamma: f64) -> Result<f64, NetError> {
    if next_state.is_empty() {
        return Ok(reward);
    }
    Ok(reward + gamma * target_net.forward_state(next_state)?.max())
}
