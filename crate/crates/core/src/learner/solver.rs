//! Seeded stochastic subgradient solver for the two linear objectives:
//!
//! pointwise:  F(w, b) = 0.5 ||w||^2 + C * sum_i max(0, |y_i - (w.x_i + b)| - eps)
//! pairwise:   F(w)    = 0.5 ||w||^2 + C * sum_p max(0, 1 - l_p * (w.d_p))
//!
//! One pass per epoch over a seeded shuffle, with the regularizer applied as
//! a per-sample scale factor so updates stay sparse, subsampled iterate
//! averaging, and a best-objective snapshot. The per-epoch step size is
//! halved whenever the best objective plateaus, so late epochs polish the
//! solution instead of oscillating. Recorded objective history is the best
//! value so far, hence non-increasing by construction.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding::substream_rng;
use crate::sparse::SparseVector;

/// Loss applied to the per-sample score.
#[derive(Debug, Clone, Copy)]
pub enum Loss<S> {
    /// max(0, |y - s| - eps), for regression targets y.
    EpsInsensitive { epsilon: S },
    /// max(0, 1 - y * s), for labels y in {-1, +1}.
    Hinge,
}

impl<S: Scalar> Loss<S> {
    fn value(&self, score: S, target: S) -> S {
        match *self {
            Loss::EpsInsensitive { epsilon } => ((score - target).abs() - epsilon).max(S::zero()),
            Loss::Hinge => (S::one() - target * score).max(S::zero()),
        }
    }

    /// d loss / d score (a subgradient at kinks).
    fn slope(&self, score: S, target: S) -> S {
        match *self {
            Loss::EpsInsensitive { epsilon } => {
                let r = score - target;
                if r.abs() <= epsilon {
                    S::zero()
                } else if r > S::zero() {
                    S::one()
                } else {
                    -S::one()
                }
            }
            Loss::Hinge => {
                if target * score < S::one() {
                    -target
                } else {
                    S::zero()
                }
            }
        }
    }
}

pub struct SolveOptions<S> {
    pub c: S,
    pub loss: Loss<S>,
    pub use_bias: bool,
    pub max_epochs: usize,
    /// Relative best-objective improvement below which an epoch counts as a
    /// plateau.
    pub tolerance: S,
    pub seed: u64,
    /// Substream label so pointwise/pairwise runs under one master seed stay
    /// independent.
    pub stream: &'static str,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<S> {
    pub weights: Vec<S>,
    pub bias: S,
    /// Best objective after each epoch; non-increasing.
    pub objective_history: Vec<S>,
    pub epochs_run: usize,
    pub converged: bool,
}

/// Full objective at (w, b).
pub fn objective<S: Scalar>(
    weights: &[S],
    bias: S,
    examples: &[(SparseVector<S>, S)],
    c: S,
    loss: Loss<S>,
) -> S {
    let reg = weights.iter().map(|&w| w * w).fold(S::zero(), |a, b| a + b)
        * S::from_f64_lossy(0.5);
    let total_loss = examples
        .iter()
        .map(|(x, y)| loss.value(x.dot_dense(weights) + bias, *y))
        .fold(S::zero(), |a, b| a + b);
    reg + c * total_loss
}

/// Analytic subgradient of the objective at (w, b).
pub fn subgradient<S: Scalar>(
    weights: &[S],
    bias: S,
    examples: &[(SparseVector<S>, S)],
    c: S,
    loss: Loss<S>,
    use_bias: bool,
) -> (Vec<S>, S) {
    let mut grad_w: Vec<S> = weights.to_vec();
    let mut grad_b = S::zero();
    for (x, y) in examples {
        let slope = loss.slope(x.dot_dense(weights) + bias, *y);
        if slope != S::zero() {
            x.axpy_into(c * slope, &mut grad_w);
            if use_bias {
                grad_b += c * slope;
            }
        }
    }
    (grad_w, grad_b)
}

/// Weight vector kept as scale * values so the per-sample shrink from the
/// regularizer stays O(1).
struct ScaledVec<S> {
    values: Vec<S>,
    scale: S,
}

impl<S: Scalar> ScaledVec<S> {
    fn zeros(dim: usize) -> Self {
        ScaledVec { values: vec![S::zero(); dim], scale: S::one() }
    }

    fn shrink(&mut self, factor: S) {
        self.scale *= factor;
        if self.scale < S::from_f64_lossy(1e-6) {
            self.rescale();
        }
    }

    fn rescale(&mut self) {
        for v in &mut self.values {
            *v *= self.scale;
        }
        self.scale = S::one();
    }

    fn add_sparse(&mut self, alpha: S, x: &SparseVector<S>) {
        let a = alpha / self.scale;
        for (i, v) in x.iter() {
            self.values[i as usize] += a * v;
        }
    }

    fn score(&self, x: &SparseVector<S>) -> S {
        x.dot_dense(&self.values) * self.scale
    }

    fn materialize(&self) -> Vec<S> {
        self.values.iter().map(|&v| v * self.scale).collect()
    }
}

const PLATEAU_PATIENCE: usize = 5;
const MAX_HALVINGS: usize = 14;
const AVG_SNAPSHOTS: usize = 32;

/// Minimize the regularized objective over the examples. `dim` is the
/// feature-space width; every example index must be below it.
pub fn solve<S: Scalar>(
    examples: &[(SparseVector<S>, S)],
    dim: usize,
    opts: &SolveOptions<S>,
) -> Result<SolveOutcome<S>> {
    if examples.is_empty() {
        return Err(Error::Solver("no training examples".into()));
    }
    for (x, _) in examples {
        if let Some(max) = x.max_index() {
            if max as usize >= dim {
                return Err(Error::Solver(format!(
                    "example index {max} exceeds feature space width {dim}"
                )));
            }
        }
    }
    let n = examples.len();
    let n_s = S::from_usize(n).unwrap();

    // Step scale: one update should move a score by O(1).
    let mean_sq_norm = examples
        .iter()
        .map(|(x, _)| x.iter().map(|(_, v)| v * v).fold(S::zero(), |a, b| a + b))
        .fold(S::zero(), |a, b| a + b)
        / n_s;
    let eta0 = S::one() / (opts.c * (mean_sq_norm + S::one()));

    let mut w = ScaledVec::zeros(dim);
    let mut bias = S::zero();
    let mut rng = substream_rng(opts.seed, opts.stream);
    let mut order: Vec<usize> = (0..n).collect();

    let mut best_w = vec![S::zero(); dim];
    let mut best_b = S::zero();
    let mut best_obj = objective(&best_w, best_b, examples, opts.c, opts.loss);
    let mut history: Vec<S> = Vec::new();
    let mut eta = eta0;
    let mut plateau = 0usize;
    let mut halvings = 0usize;
    let mut converged = false;
    let mut epochs_run = 0usize;

    let snapshot_every = n.div_ceil(AVG_SNAPSHOTS);

    for epoch in 0..opts.max_epochs {
        epochs_run = epoch + 1;
        order.shuffle(&mut rng);

        let mut avg: Vec<S> = vec![S::zero(); dim];
        let mut avg_b = S::zero();
        let mut snapshots = 0usize;
        for (step, &i) in order.iter().enumerate() {
            let (x, y) = &examples[i];
            let score = w.score(x) + bias;
            let slope = opts.loss.slope(score, *y);
            // split objective: per-sample reg gradient is w / n
            w.shrink(S::one() - eta / n_s);
            if slope != S::zero() {
                w.add_sparse(-eta * opts.c * slope, x);
                if opts.use_bias {
                    bias -= eta * opts.c * slope;
                }
            }
            if (step + 1) % snapshot_every == 0 {
                let m = w.materialize();
                for (a, v) in avg.iter_mut().zip(&m) {
                    *a += *v;
                }
                avg_b += bias;
                snapshots += 1;
            }
        }

        let current = w.materialize();
        let obj_current = objective(&current, bias, examples, opts.c, opts.loss);
        if !obj_current.is_finite() {
            return Err(Error::Solver(format!(
                "objective became non-finite at epoch {epoch} (eta {eta}, c {})",
                opts.c
            )));
        }
        let mut improved = false;
        if obj_current < best_obj {
            best_obj = obj_current;
            best_w.copy_from_slice(&current);
            best_b = bias;
            improved = true;
        }
        if snapshots > 0 {
            let inv = S::one() / S::from_usize(snapshots).unwrap();
            let avg_w: Vec<S> = avg.iter().map(|&a| a * inv).collect();
            let avg_bias = avg_b * inv;
            let obj_avg = objective(&avg_w, avg_bias, examples, opts.c, opts.loss);
            if obj_avg.is_finite() && obj_avg < best_obj {
                best_obj = obj_avg;
                best_w.copy_from_slice(&avg_w);
                best_b = avg_bias;
                improved = true;
            }
        }

        let rel_gain = if history.is_empty() {
            S::infinity()
        } else {
            let prev = *history.last().unwrap();
            if prev == S::zero() {
                S::zero()
            } else {
                (prev - best_obj) / prev.abs()
            }
        };
        history.push(best_obj);

        if improved && rel_gain > opts.tolerance {
            plateau = 0;
        } else {
            plateau += 1;
            if plateau >= PLATEAU_PATIENCE {
                plateau = 0;
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    converged = true;
                    break;
                }
                eta *= S::from_f64_lossy(0.5);
                // restart from the best point seen so far
                w = ScaledVec::zeros(dim);
                w.values.copy_from_slice(&best_w);
                bias = best_b;
            }
        }
    }

    Ok(SolveOutcome {
        weights: best_w,
        bias: best_b,
        objective_history: history,
        epochs_run,
        converged,
    })
}
