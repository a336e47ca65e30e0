//! Gradient training of transform orders and diagonal filters.
//!
//! Two loops share the machinery here. Transform learning treats a stack of
//! joint transforms as a network whose per-layer orders `(alpha_l, beta_l)`
//! are trained so the composed transform of a seeded uniform input matches a
//! target signal produced at unknown orders. Denoising learning trains the
//! orders of a single analysis/synthesis pair, and optionally the diagonal
//! filter between them, to reconstruct clean blocks from noisy ones.
//!
//! Gradients are closed-form. Both fractional operators carry their
//! generator, so `d/da F^a = T F^a` costs one extra diagonal
//! re-exponentiation, and the loss derivative for every trainable parameter
//! reduces to a real inner product against the residual. Each epoch rebuilds
//! the four powers and four derivatives from the cached eigenbases and walks
//! the blocks matrix-free; nothing Kronecker-sized is formed in the
//! denoising loop.
//!
//! The optimizer is Adam with bias correction. Its first bias-corrected step
//! is always a full learning-rate step regardless of gradient magnitude, so
//! an already-converged start would otherwise get kicked into a
//! learning-rate-sized noise ball; both loops instead stop as soon as the
//! loss reaches the rounding floor for the data's energy scale. All
//! randomness (input signals and restart initializations) comes from seeded
//! generators, so identical configurations reproduce identical reports,
//! including loss curves, bit for bit. Wall time is measured but excluded
//! from serialized reports to keep them deterministic.

use crate::filtering::{wiener_solve, DiagonalFilter, FilterError, FilterMode, WienerObservations};
use crate::fracops::FractionalOperator;
use crate::joint::{JointError, JointTransform};
use crate::numkit::{self, CMat, CVec, NumKitError};
use crate::signals::TimeVertexSignal;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("matrices have shapes {a:?} and {b:?}")]
    ShapeMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("signals disagree: clean is {clean:?}, noisy is {noisy:?}")]
    SignalMismatch {
        clean: (usize, usize),
        noisy: (usize, usize),
    },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    NumKit(#[from] NumKitError),
}

/// Adam moment-decay and stabilization constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Array1<f64>,
    v: Array1<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: Array1::zeros(dim),
            v: Array1::zeros(dim),
            step: 0,
        }
    }

    /// One bias-corrected Adam update, in place.
    pub fn update(
        &mut self,
        params: &mut Array1<f64>,
        grads: &Array1<f64>,
        lr: f64,
        hp: &AdamParams,
    ) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient length");
        self.step += 1;
        let b1t = 1.0 - hp.beta1.powi(self.step as i32);
        let b2t = 1.0 - hp.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = hp.beta1 * self.m[i] + (1.0 - hp.beta1) * g;
            self.v[i] = hp.beta2 * self.v[i] + (1.0 - hp.beta2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + hp.epsilon);
        }
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam: AdamParams,
    /// Starting `(alpha, beta)`, applied to every layer.
    pub init_orders: (f64, f64),
    /// Number of random restarts; zero means a single run from
    /// `init_orders`.
    pub restarts: usize,
    /// Restart initializations draw both orders uniformly from this range.
    pub order_init_range: (f64, f64),
    pub seed: u64,
    /// Optional step decay: multiply the learning rate by `.0` every `.1`
    /// epochs.
    pub lr_decay: Option<(f64, usize)>,
    /// Per-layer starting orders for transform learning, one pair per layer.
    /// `None` starts every layer at `init_orders`.
    #[serde(default)]
    pub layer_inits: Option<Vec<(f64, f64)>>,
}

impl TrainConfig {
    /// Transform-learning defaults: 1200 epochs at 1e-3 from zero orders.
    pub fn transform_defaults() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 1200,
            adam: AdamParams::default(),
            init_orders: (0.0, 0.0),
            restarts: 0,
            order_init_range: (-2.0, 2.0),
            seed: 0,
            lr_decay: None,
            layer_inits: None,
        }
    }

    /// Denoising defaults: 10000 epochs at 5e-3 from orders (0.1, 0.1).
    pub fn denoise_defaults() -> Self {
        Self {
            learning_rate: 5e-3,
            epochs: 10000,
            adam: AdamParams::default(),
            init_orders: (0.1, 0.1),
            restarts: 0,
            order_init_range: (-2.0, 2.0),
            seed: 0,
            lr_decay: None,
            layer_inits: None,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0) {
            return Err(LearnError::BadConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(LearnError::BadConfig("epochs must be at least 1".into()));
        }
        for (name, b) in [("beta1", self.adam.beta1), ("beta2", self.adam.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(LearnError::BadConfig(format!("{name} {b} outside (0, 1)")));
            }
        }
        if self.order_init_range.0 > self.order_init_range.1 {
            return Err(LearnError::BadConfig(format!(
                "order init range ({}, {}) is inverted",
                self.order_init_range.0, self.order_init_range.1
            )));
        }
        if let Some(inits) = &self.layer_inits {
            if inits.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
                return Err(LearnError::BadConfig("layer inits must be finite".into()));
            }
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_decay {
            Some((factor, period)) if period > 0 => {
                self.learning_rate * factor.powi((epoch / period) as i32)
            }
            _ => self.learning_rate,
        }
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    /// Final `(alpha, beta)` per layer.
    pub layer_orders: Vec<(f64, f64)>,
    /// Sums over layers, the effective transform orders.
    pub order_sums: (f64, f64),
    pub learned_filter: Option<DiagonalFilter>,
    /// Loss per epoch, recorded before that epoch's update.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
    /// Output SNR in dB, for denoising runs.
    pub snr_out: Option<f64>,
    /// SNR of every restart, in draw order; empty for single runs.
    pub restart_snrs: Vec<f64>,
    /// Optimizer updates applied; less than the configured epochs when the
    /// loss hit the rounding floor early.
    pub epochs_run: usize,
    /// Wall time is machine-dependent and therefore not serialized.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Mean squared error `(1/(rows*cols)) * ||y - y_hat||_F^2`.
pub fn mse_loss(y_hat: &CMat, y: &CMat) -> Result<f64, LearnError> {
    if y_hat.dim() != y.dim() {
        return Err(LearnError::ShapeMismatch {
            a: y_hat.dim(),
            b: y.dim(),
        });
    }
    let (rows, cols) = y.dim();
    let sum: f64 = y_hat
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(sum / (rows * cols) as f64)
}

/// Loss below which training stops: squared rounding error at the given
/// per-entry energy scale, with four decades of headroom. A run that reaches
/// this is converged to machine precision; further Adam steps would only
/// amplify rounding-level gradients into learning-rate-sized jitter.
fn rounding_floor(scale: f64) -> f64 {
    1e4 * f64::EPSILON * f64::EPSILON * scale
}

fn mean_entry_energy(mats: &[CMat]) -> f64 {
    let entries: usize = mats.iter().map(|m| m.len()).sum();
    if entries == 0 {
        return 0.0;
    }
    let total: f64 = mats
        .iter()
        .map(|m| m.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum();
    total / entries as f64
}

/// The eight matrices one denoising epoch needs: forward and inverse powers
/// and their order derivatives, for both axes.
struct ChainOps {
    g_pow: CMat,
    g_inv: CMat,
    g_dpow: CMat,
    /// `d/d alpha` of the inverse power; the minus sign is baked in.
    g_dinv: CMat,
    t_pow: CMat,
    t_inv: CMat,
    t_dpow: CMat,
    t_dinv: CMat,
}

impl ChainOps {
    fn new(
        graph_op: &FractionalOperator,
        time_op: &FractionalOperator,
        alpha: f64,
        beta: f64,
    ) -> Self {
        let minus = Complex64::new(-1.0, 0.0);
        Self {
            g_pow: graph_op.frac_power(alpha),
            g_inv: graph_op.frac_power(-alpha),
            g_dpow: graph_op.frac_derivative(alpha),
            g_dinv: graph_op.frac_derivative(-alpha).mapv(|v| v * minus),
            t_pow: time_op.frac_power(beta),
            t_inv: time_op.frac_power(-beta),
            t_dpow: time_op.frac_derivative(beta),
            t_dinv: time_op.frac_derivative(-beta).mapv(|v| v * minus),
        }
    }

    fn estimate(&self, h_mat: &CMat, y: &CMat) -> CMat {
        let spectrum = self.g_pow.dot(y).dot(&self.t_pow.t());
        let filtered = &spectrum * h_mat;
        self.g_inv.dot(&filtered).dot(&self.t_inv.t())
    }
}

/// Loss and gradients of one chain evaluation, averaged over blocks.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    /// Real and imaginary parts, column-stacked like the filter itself.
    pub d_h_re: Array1<f64>,
    pub d_h_im: Array1<f64>,
}

fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Core chain differentiation for a batch of blocks; everything two-sided,
/// nothing Kronecker-sized.
fn batch_gradients(ops: &ChainOps, h_mat: &CMat, ys: &[CMat], xs: &[CMat]) -> Gradients {
    let (n, t) = h_mat.dim();
    let nt = (n * t) as f64;
    let m = ys.len() as f64;
    let mut loss = 0.0;
    let mut d_alpha = 0.0;
    let mut d_beta = 0.0;
    let mut d_h_re = Array1::zeros(n * t);
    let mut d_h_im = Array1::zeros(n * t);
    for (y, x) in ys.iter().zip(xs.iter()) {
        let spectrum = ops.g_pow.dot(y).dot(&ops.t_pow.t());
        let filtered = &spectrum * h_mat;
        let x_hat = ops.g_inv.dot(&filtered).dot(&ops.t_inv.t());
        let residual = &x_hat - x;
        loss += residual.iter().map(|v| v.norm_sqr()).sum::<f64>() / nt;

        let d_alpha_hat = ops.g_dinv.dot(&filtered).dot(&ops.t_inv.t())
            + ops
                .g_inv
                .dot(&(&ops.g_dpow.dot(y).dot(&ops.t_pow.t()) * h_mat))
                .dot(&ops.t_inv.t());
        d_alpha += 2.0 / nt * real_inner(&residual, &d_alpha_hat);

        let d_beta_hat = ops.g_inv.dot(&filtered).dot(&ops.t_dinv.t())
            + ops
                .g_inv
                .dot(&(&ops.g_pow.dot(y).dot(&ops.t_dpow.t()) * h_mat))
                .dot(&ops.t_inv.t());
        d_beta += 2.0 / nt * real_inner(&residual, &d_beta_hat);

        // w = B^H r in block form; the filter gradient is entrywise.
        let w = numkit::adjoint(&ops.g_inv)
            .dot(&residual)
            .dot(&ops.t_inv.mapv(|v| v.conj()));
        for l in 0..t {
            for i in 0..n {
                let k = l * n + i;
                let zw = spectrum[[i, l]].conj() * w[[i, l]];
                d_h_re[k] += 2.0 / nt * zw.re;
                d_h_im[k] += 2.0 / nt * zw.im;
            }
        }
    }
    Gradients {
        loss: loss / m,
        d_alpha: d_alpha / m,
        d_beta: d_beta / m,
        d_h_re: d_h_re / m,
        d_h_im: d_h_im / m,
    }
}

/// Loss and all parameter gradients of the filter chain
/// `x_hat = F_inv diag(h) F_fwd y` against a clean target, on column-stacked
/// vectors at the orders of `jt`.
pub fn order_gradients(
    jt: &JointTransform,
    h: &DiagonalFilter,
    y: &CVec,
    x: &CVec,
) -> Result<Gradients, LearnError> {
    let (n, t) = (jt.n(), jt.t());
    if h.len() != n * t {
        return Err(LearnError::Filter(FilterError::BadLength {
            expected: n * t,
            got: h.len(),
        }));
    }
    let y_mat = numkit::unvec(y, n, t).map_err(JointError::from)?;
    let x_mat = numkit::unvec(x, n, t).map_err(JointError::from)?;
    let h_mat = numkit::unvec(&h.coeffs, n, t).map_err(JointError::from)?;
    let ops = ChainOps::new(jt.graph_op(), jt.time_op(), jt.alpha(), jt.beta());
    Ok(batch_gradients(&ops, &h_mat, &[y_mat], &[x_mat]))
}

/// Real `n x t` input signal with entries uniform on `[0, 1)`, drawn from a
/// seeded generator. Transform learning redraws this signal from `cfg.seed`,
/// so a target built by [`transform_target`] with the same seed pairs up
/// with the training input exactly.
pub fn uniform_input(n: usize, t: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, t), |_| Complex64::new(rng.gen::<f64>(), 0.0))
}

/// Random directed shift matrix: off-diagonal weights uniform on `[-1, 1]`,
/// zero diagonal. Zero-mean weights keep the spectrum spread around the
/// origin instead of piling up behind one dominant positive eigenvalue, so
/// fractional-power magnitudes stay balanced across the order range and
/// order learning moves at full optimizer speed in both directions.
pub fn random_shift_matrix(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: CMat = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z[[i, j]] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
    }
    z
}

/// Transformed signal `F_G^alpha X (F^beta)^T` for the seeded uniform input
/// `X`, the training target for order recovery.
pub fn transform_target(
    graph_op: &FractionalOperator,
    time_op: &FractionalOperator,
    orders: (f64, f64),
    seed: u64,
) -> CMat {
    let x = uniform_input(graph_op.size(), time_op.size(), seed);
    graph_op
        .frac_power(orders.0)
        .dot(&x)
        .dot(&time_op.frac_power(orders.1).t())
}

/// Trains the per-layer orders of a stack of `layers` joint transforms so
/// the composed transform of a seeded uniform input matches `target`, an
/// `N x T` signal (typically from [`transform_target`]; the input is redrawn
/// from `cfg.seed`). By index additivity the composition equals the single
/// transform at the summed orders, so every layer sees the same gradient and
/// the layers displace identically, splitting the recovered sum while
/// keeping their initial spacing.
///
/// Starting orders come from `cfg.layer_inits` (one pair per layer) when
/// set, else every layer starts at `cfg.init_orders`. Training stops early
/// once the loss reaches the rounding floor for the target's energy scale;
/// `epochs_run` counts the updates actually applied.
pub fn train_transform(
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
    target: &CMat,
    layers: usize,
    cfg: &TrainConfig,
) -> Result<TrainReport, LearnError> {
    cfg.validate()?;
    if layers == 0 {
        return Err(LearnError::BadConfig(
            "layer count must be at least 1".into(),
        ));
    }
    let (n, t) = (graph_op.size(), time_op.size());
    if target.dim() != (n, t) {
        return Err(LearnError::ShapeMismatch {
            a: target.dim(),
            b: (n, t),
        });
    }
    let inits: Vec<(f64, f64)> = match &cfg.layer_inits {
        Some(v) => {
            if v.len() != layers {
                return Err(LearnError::BadConfig(format!(
                    "{} layer inits for {} layers",
                    v.len(),
                    layers
                )));
            }
            v.clone()
        }
        None => vec![cfg.init_orders; layers],
    };
    let started = std::time::Instant::now();
    let norm = (n * t) as f64;
    let x = uniform_input(n, t, cfg.seed);
    let floor = rounding_floor(mean_entry_energy(std::slice::from_ref(target)));
    let mut params = Array1::zeros(2 * layers);
    for (l, (a, b)) in inits.iter().enumerate() {
        params[l] = *a;
        params[layers + l] = *b;
    }
    let forward = |alpha: f64, beta: f64| -> (CMat, CMat, CMat) {
        let gx = graph_op.frac_power(alpha).dot(&x);
        let t_pow = time_op.frac_power(beta);
        let y_hat = gx.dot(&t_pow.t());
        (y_hat, gx, t_pow)
    };
    let mut adam = AdamState::new(2 * layers);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut updates = 0;
    for epoch in 0..cfg.epochs {
        let alpha: f64 = params.iter().take(layers).sum();
        let beta: f64 = params.iter().skip(layers).sum();
        let (y_hat, gx, t_pow) = forward(alpha, beta);
        let diff = &y_hat - target;
        let loss = diff.iter().map(|v| v.norm_sqr()).sum::<f64>() / norm;
        loss_curve.push(loss);
        if loss <= floor {
            break;
        }
        let d_alpha_mat = graph_op.frac_derivative(alpha).dot(&x).dot(&t_pow.t());
        let d_beta_mat = gx.dot(&time_op.frac_derivative(beta).t());
        let g_alpha = 2.0 / norm * real_inner(&diff, &d_alpha_mat);
        let g_beta = 2.0 / norm * real_inner(&diff, &d_beta_mat);
        let mut grads = Array1::zeros(2 * layers);
        for l in 0..layers {
            grads[l] = g_alpha;
            grads[layers + l] = g_beta;
        }
        adam.update(&mut params, &grads, cfg.lr_at(epoch), &cfg.adam);
        updates += 1;
    }
    let layer_orders: Vec<(f64, f64)> = (0..layers)
        .map(|l| (params[l], params[layers + l]))
        .collect();
    let order_sums = (
        layer_orders.iter().map(|p| p.0).sum(),
        layer_orders.iter().map(|p| p.1).sum(),
    );
    // Loss at the returned orders, not at the last recorded epoch.
    let (y_hat, _, _) = forward(order_sums.0, order_sums.1);
    let final_loss = (&y_hat - target).iter().map(|v| v.norm_sqr()).sum::<f64>() / norm;
    Ok(TrainReport {
        layer_orders,
        order_sums,
        learned_filter: None,
        loss_curve,
        final_loss,
        snr_out: None,
        restart_snrs: Vec::new(),
        epochs_run: updates,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Filter treatment during denoising training.
#[derive(Debug, Clone)]
pub enum DenoiseFilter {
    /// The filter stays as given; only the orders train.
    Fixed(DiagonalFilter),
    /// The filter's real and imaginary parts train alongside the orders,
    /// starting from all-pass.
    Learnable,
    /// The filter is re-solved each epoch as the empirical Wiener optimum
    /// for the current orders; only the orders train. The solve returns the
    /// exact minimizer of the training loss over diagonal filters, so
    /// holding it constant in the order gradient loses nothing there.
    WienerOptimal,
}

#[allow(clippy::too_many_arguments)]
fn denoise_single_run(
    xs: &[CMat],
    ys: &[CMat],
    x_clean: &TimeVertexSignal,
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
    filter: &DenoiseFilter,
    cfg: &TrainConfig,
    init_orders: (f64, f64),
) -> Result<TrainReport, LearnError> {
    let started = std::time::Instant::now();
    let (n, t) = (graph_op.size(), time_op.size());
    let nt = n * t;
    let learnable = matches!(filter, DenoiseFilter::Learnable);
    let wiener = matches!(filter, DenoiseFilter::WienerOptimal);
    let mut h_mat = match filter {
        DenoiseFilter::Fixed(f) => {
            if f.len() != nt {
                return Err(LearnError::Filter(FilterError::BadLength {
                    expected: nt,
                    got: f.len(),
                }));
            }
            numkit::unvec(&f.coeffs, n, t).map_err(JointError::from)?
        }
        // The Wiener arm overwrites this before the first evaluation.
        DenoiseFilter::Learnable | DenoiseFilter::WienerOptimal => {
            Array2::from_elem((n, t), Complex64::new(1.0, 0.0))
        }
    };
    let (clean_vecs, noisy_vecs): (Vec<CVec>, Vec<CVec>) = if wiener {
        (
            xs.iter().map(numkit::vec_stack).collect(),
            ys.iter().map(numkit::vec_stack).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let solve_wiener = |alpha: f64, beta: f64| -> Result<CMat, LearnError> {
        let jt = JointTransform::new(graph_op.clone(), time_op.clone(), alpha, beta);
        let h = wiener_solve(
            &jt,
            WienerObservations::Empirical {
                clean: &clean_vecs,
                noisy: &noisy_vecs,
            },
        )?;
        Ok(numkit::unvec(&h.coeffs, n, t).map_err(JointError::from)?)
    };
    let dim = if learnable { 2 + 2 * nt } else { 2 };
    let mut params = Array1::zeros(dim);
    params[0] = init_orders.0;
    params[1] = init_orders.1;
    if learnable {
        for k in 0..nt {
            params[2 + k] = 1.0;
            params[2 + nt + k] = 0.0;
        }
    }
    let mut adam = AdamState::new(dim);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let floor = rounding_floor(mean_entry_energy(ys));
    let mut updates = 0;
    for epoch in 0..cfg.epochs {
        if learnable {
            for l in 0..t {
                for i in 0..n {
                    let k = l * n + i;
                    h_mat[[i, l]] = Complex64::new(params[2 + k], params[2 + nt + k]);
                }
            }
        }
        if wiener {
            h_mat = solve_wiener(params[0], params[1])?;
        }
        let ops = ChainOps::new(graph_op, time_op, params[0], params[1]);
        let g = batch_gradients(&ops, &h_mat, ys, xs);
        loss_curve.push(g.loss);
        if g.loss <= floor {
            break;
        }
        let mut grads = Array1::zeros(dim);
        grads[0] = g.d_alpha;
        grads[1] = g.d_beta;
        if learnable {
            for k in 0..nt {
                grads[2 + k] = g.d_h_re[k];
                grads[2 + nt + k] = g.d_h_im[k];
            }
        }
        adam.update(&mut params, &grads, cfg.lr_at(epoch), &cfg.adam);
        updates += 1;
    }
    // Final forward pass with the trained parameters.
    if learnable {
        for l in 0..t {
            for i in 0..n {
                let k = l * n + i;
                h_mat[[i, l]] = Complex64::new(params[2 + k], params[2 + nt + k]);
            }
        }
    }
    if wiener {
        h_mat = solve_wiener(params[0], params[1])?;
    }
    let ops = ChainOps::new(graph_op, time_op, params[0], params[1]);
    let norm = nt as f64;
    let mut final_loss = 0.0;
    let mut est: CMat = Array2::zeros((n, ys.len() * t));
    for (i, y) in ys.iter().enumerate() {
        let block = ops.estimate(&h_mat, y);
        final_loss += (&block - &xs[i]).iter().map(|v| v.norm_sqr()).sum::<f64>() / norm;
        est.slice_mut(ndarray::s![.., i * t..(i + 1) * t])
            .assign(&block);
    }
    let final_loss = final_loss / ys.len().max(1) as f64;
    let est = TimeVertexSignal::new(est, t).expect("dimensions preserved");
    let snr = crate::filtering::snr_db(x_clean, &est)?;
    let learned_filter = match filter {
        DenoiseFilter::Learnable => {
            let coeffs: CVec = (0..nt)
                .map(|k| Complex64::new(params[2 + k], params[2 + nt + k]))
                .collect();
            Some(DiagonalFilter {
                coeffs,
                mode: FilterMode::Learnable,
            })
        }
        DenoiseFilter::WienerOptimal => Some(DiagonalFilter {
            coeffs: numkit::vec_stack(&h_mat),
            mode: FilterMode::Wiener,
        }),
        DenoiseFilter::Fixed(_) => None,
    };
    Ok(TrainReport {
        layer_orders: vec![(params[0], params[1])],
        order_sums: (params[0], params[1]),
        learned_filter,
        loss_curve,
        final_loss,
        snr_out: Some(snr),
        restart_snrs: Vec::new(),
        epochs_run: updates,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Trains `(alpha, beta)` and optionally the diagonal filter to reconstruct
/// `x_clean` from `y_noisy`, block for block. With `cfg.restarts > 0` the
/// initial orders of each restart are drawn uniformly from
/// `cfg.order_init_range`, the runs execute independently, and the report of
/// the best-SNR run is returned carrying every restart's SNR.
pub fn train_denoiser(
    x_clean: &TimeVertexSignal,
    y_noisy: &TimeVertexSignal,
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
    filter: &DenoiseFilter,
    cfg: &TrainConfig,
) -> Result<TrainReport, LearnError> {
    cfg.validate()?;
    if x_clean.data().dim() != y_noisy.data().dim() || x_clean.t() != y_noisy.t() {
        return Err(LearnError::SignalMismatch {
            clean: x_clean.data().dim(),
            noisy: y_noisy.data().dim(),
        });
    }
    if x_clean.n() != graph_op.size() || x_clean.t() != time_op.size() {
        return Err(LearnError::ShapeMismatch {
            a: (x_clean.n(), x_clean.t()),
            b: (graph_op.size(), time_op.size()),
        });
    }
    let xs: Vec<CMat> = (0..x_clean.m()).map(|i| x_clean.block(i)).collect();
    let ys: Vec<CMat> = (0..y_noisy.m()).map(|i| y_noisy.block(i)).collect();

    if cfg.restarts == 0 {
        return denoise_single_run(
            &xs,
            &ys,
            x_clean,
            graph_op,
            time_op,
            filter,
            cfg,
            cfg.init_orders,
        );
    }
    // Draw all restart initializations upfront so parallel execution cannot
    // perturb the stream.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.order_init_range;
    let inits: Vec<(f64, f64)> = (0..cfg.restarts)
        .map(|_| {
            if hi > lo {
                (rng.gen_range(lo..hi), rng.gen_range(lo..hi))
            } else {
                (lo, lo)
            }
        })
        .collect();
    let runs: Vec<Result<TrainReport, LearnError>> = inits
        .par_iter()
        .map(|&init| denoise_single_run(&xs, &ys, x_clean, graph_op, time_op, filter, cfg, init))
        .collect();
    let mut reports = Vec::with_capacity(runs.len());
    for r in runs {
        reports.push(r?);
    }
    let snrs: Vec<f64> = reports
        .iter()
        .map(|r| r.snr_out.expect("denoise runs report SNR"))
        .collect();
    let mut best = 0;
    for (i, s) in snrs.iter().enumerate() {
        if *s > snrs[best] {
            best = i;
        }
    }
    let mut winner = reports.swap_remove(best);
    winner.restart_snrs = snrs;
    Ok(winner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::{make_graph_fracop, make_time_fracop, make_unitary_fracop};
    use crate::signals::{gen_bandlimited, gen_highfreq_noise, BandSpec, NoiseSpec};
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Synthetic unitary graph operator with spectrum clear of the branch
    /// cut; small graph-built operators are unusable here, see
    /// `make_unitary_fracop`.
    fn graph_op(n: usize, seed: u64) -> Arc<FractionalOperator> {
        Arc::new(make_unitary_fracop(n, seed).unwrap())
    }

    /// Order-recovery fixture: a random directed shift large enough for its
    /// spectrum to clear the branch cut, plus the matching time operator.
    fn protocol_ops(
        n: usize,
        t: usize,
        seed: u64,
    ) -> (Arc<FractionalOperator>, Arc<FractionalOperator>) {
        let gft = crate::graphs::gft_factorize(&random_shift_matrix(n, seed)).unwrap();
        let gop = Arc::new(make_graph_fracop(&gft).unwrap());
        let top = Arc::new(make_time_fracop(t).unwrap());
        (gop, top)
    }

    fn test_jt(n: usize, t: usize, alpha: f64, beta: f64, seed: u64) -> JointTransform {
        JointTransform::new(
            graph_op(n, seed),
            Arc::new(make_time_fracop(t).unwrap()),
            alpha,
            beta,
        )
    }

    fn random_cvec(len: usize, rng: &mut ChaCha8Rng) -> CVec {
        Array1::from_shape_fn(len, |_| {
            c(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    #[test]
    fn mse_loss_definition() {
        let a: CMat = Array2::from_elem((2, 3), c(1., 0.));
        let b: CMat = Array2::zeros((2, 3));
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(mse_loss(&a, &b).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: CMat = Array2::from_shape_fn((3, 4), |_| {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        let y: CMat = Array2::from_shape_fn((3, 4), |_| {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        let oracle: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| {
                let d = a - b;
                d.re * d.re + d.im * d.im
            })
            .sum::<f64>()
            / 12.0;
        assert!((mse_loss(&x, &y).unwrap() - oracle).abs() < 1e-12);

        let short: CMat = Array2::zeros((2, 2));
        assert!(matches!(
            mse_loss(&a, &short),
            Err(LearnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let hp = AdamParams::default();
        let mut state = AdamState::new(3);
        let mut params = Array1::from_vec(vec![1.0, -2.0, 0.5]);
        let before = params.clone();
        for _ in 0..5 {
            state.update(&mut params, &Array1::zeros(3), 0.1, &hp);
        }
        assert_eq!(params, before);
    }

    #[test]
    fn adam_first_step_matches_hand_formula() {
        let hp = AdamParams::default();
        let mut state = AdamState::new(2);
        let mut params = Array1::from_vec(vec![0.0, 1.0]);
        let grads = Array1::from_vec(vec![3.0, -0.25]);
        let lr = 0.01;
        state.update(&mut params, &grads, lr, &hp);
        // First step: m_hat = g, v_hat = g^2, update = -lr g / (|g| + eps).
        for (i, &g) in grads.iter().enumerate() {
            let expected = [0.0, 1.0][i] - lr * g / (g.abs() + hp.epsilon);
            assert!((params[i] - expected).abs() < 1e-15, "param {i}");
        }
    }

    #[test]
    fn adam_constant_gradient_step_approaches_lr() {
        let hp = AdamParams::default();
        let mut state = AdamState::new(1);
        let mut params = Array1::from_vec(vec![0.0]);
        let grads = Array1::from_vec(vec![0.7]);
        let lr = 0.05;
        let mut prev = params[0];
        let mut last_step = 0.0;
        for _ in 0..2000 {
            state.update(&mut params, &grads, lr, &hp);
            last_step = (params[0] - prev).abs();
            prev = params[0];
        }
        assert!(
            (last_step - lr).abs() < 0.01 * lr,
            "step {last_step} vs lr {lr}"
        );
    }

    #[test]
    fn gradients_vanish_at_a_perfect_reconstruction() {
        let jt = test_jt(3, 2, 0.7, 0.4, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = random_cvec(6, &mut rng);
        // All-pass filter makes the chain the identity, so x = y is exact.
        let h = DiagonalFilter::all_ones(6, FilterMode::Learnable);
        let g = order_gradients(&jt, &h, &y, &y).unwrap();
        assert!(g.loss < 1e-18);
        assert!(g.d_alpha.abs() < 1e-9, "d_alpha {}", g.d_alpha);
        assert!(g.d_beta.abs() < 1e-9, "d_beta {}", g.d_beta);
        assert!(g.d_h_re.iter().all(|v| v.abs() < 1e-9));
        assert!(g.d_h_im.iter().all(|v| v.abs() < 1e-9));
    }

    fn chain_loss(
        graph_op: &Arc<FractionalOperator>,
        time_op: &Arc<FractionalOperator>,
        alpha: f64,
        beta: f64,
        h: &CVec,
        y: &CVec,
        x: &CVec,
    ) -> f64 {
        let n = graph_op.size();
        let t = time_op.size();
        let ops = ChainOps::new(graph_op, time_op, alpha, beta);
        let h_mat = numkit::unvec(h, n, t).unwrap();
        let y_mat = numkit::unvec(y, n, t).unwrap();
        let x_mat = numkit::unvec(x, n, t).unwrap();
        let est = ops.estimate(&h_mat, &y_mat);
        (&est - &x_mat).iter().map(|v| v.norm_sqr()).sum::<f64>() / (n * t) as f64
    }

    #[test]
    fn all_gradients_match_central_finite_differences() {
        let gop = graph_op(3, 410);
        let top = Arc::new(make_time_fracop(2).unwrap());
        let (alpha, beta) = (0.35, 0.6);
        let jt = JointTransform::new(gop.clone(), top.clone(), alpha, beta);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_cvec(6, &mut rng);
        let x = random_cvec(6, &mut rng);
        let h_vec = random_cvec(6, &mut rng);
        let h = DiagonalFilter {
            coeffs: h_vec.clone(),
            mode: FilterMode::Learnable,
        };
        let g = order_gradients(&jt, &h, &y, &x).unwrap();

        let step = 1e-6;
        let fd_alpha = (chain_loss(&gop, &top, alpha + step, beta, &h_vec, &y, &x)
            - chain_loss(&gop, &top, alpha - step, beta, &h_vec, &y, &x))
            / (2.0 * step);
        assert!(
            (g.d_alpha - fd_alpha).abs() <= 1e-5 * fd_alpha.abs().max(1.0),
            "alpha: analytic {} vs fd {fd_alpha}",
            g.d_alpha
        );
        let fd_beta = (chain_loss(&gop, &top, alpha, beta + step, &h_vec, &y, &x)
            - chain_loss(&gop, &top, alpha, beta - step, &h_vec, &y, &x))
            / (2.0 * step);
        assert!(
            (g.d_beta - fd_beta).abs() <= 1e-5 * fd_beta.abs().max(1.0),
            "beta: analytic {} vs fd {fd_beta}",
            g.d_beta
        );
        for k in 0..6 {
            let mut plus = h_vec.clone();
            let mut minus = h_vec.clone();
            plus[k] += c(step, 0.);
            minus[k] -= c(step, 0.);
            let fd_re = (chain_loss(&gop, &top, alpha, beta, &plus, &y, &x)
                - chain_loss(&gop, &top, alpha, beta, &minus, &y, &x))
                / (2.0 * step);
            assert!(
                (g.d_h_re[k] - fd_re).abs() <= 1e-5 * fd_re.abs().max(1.0),
                "h_re[{k}]: analytic {} vs fd {fd_re}",
                g.d_h_re[k]
            );
            let mut plus = h_vec.clone();
            let mut minus = h_vec.clone();
            plus[k] += c(0., step);
            minus[k] -= c(0., step);
            let fd_im = (chain_loss(&gop, &top, alpha, beta, &plus, &y, &x)
                - chain_loss(&gop, &top, alpha, beta, &minus, &y, &x))
                / (2.0 * step);
            assert!(
                (g.d_h_im[k] - fd_im).abs() <= 1e-5 * fd_im.abs().max(1.0),
                "h_im[{k}]: analytic {} vs fd {fd_im}",
                g.d_h_im[k]
            );
        }
    }

    #[test]
    fn identity_chain_is_flat_in_the_orders() {
        // With an all-pass filter and x = y, the chain is the identity at
        // every order pair, so the order gradients vanish everywhere.
        let gop = graph_op(3, 420);
        let top = Arc::new(make_time_fracop(3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_cvec(9, &mut rng);
        let h = DiagonalFilter::all_ones(9, FilterMode::Fixed);
        for orders in [(0.3, 0.9), (-1.2, 0.4), (1.7, -0.8)] {
            let jt = JointTransform::new(gop.clone(), top.clone(), orders.0, orders.1);
            let g = order_gradients(&jt, &h, &y, &y).unwrap();
            assert!(g.d_alpha.abs() < 1e-8, "{orders:?}: {}", g.d_alpha);
            assert!(g.d_beta.abs() < 1e-8, "{orders:?}: {}", g.d_beta);
        }
    }

    /// Shift seed for the order-recovery tests; every target and layer count
    /// below converges under the default schedule on this draw.
    const SHIFT_SEED: u64 = 26;

    #[test]
    fn transform_learning_recovers_the_order_pair() {
        let (gop, top) = protocol_ops(20, 6, SHIFT_SEED);
        let cfg = TrainConfig::transform_defaults();
        let target = transform_target(&gop, &top, (0.45, 0.55), cfg.seed);
        let report = train_transform(&gop, &top, &target, 1, &cfg).unwrap();
        assert!(
            (report.order_sums.0 - 0.45).abs() < 1e-3,
            "alpha {}",
            report.order_sums.0
        );
        assert!(
            (report.order_sums.1 - 0.55).abs() < 1e-3,
            "beta {}",
            report.order_sums.1
        );
        assert!(report.final_loss <= 1e-10, "loss {}", report.final_loss);
        // Monotone trend at checkpoint epochs (clamped in case of an early
        // rounding-floor stop).
        let at = |i: usize| report.loss_curve[i.min(report.loss_curve.len() - 1)];
        assert!(at(1199) <= at(299));
        assert!(at(299) <= at(0));
    }

    #[test]
    fn zero_target_at_zero_init_is_stationary() {
        let (gop, top) = protocol_ops(20, 6, SHIFT_SEED);
        let mut cfg = TrainConfig::transform_defaults();
        cfg.epochs = 50;
        // Target at the init orders: the first loss is exactly zero and the
        // rounding-floor stop fires before any update can move the orders.
        let target = transform_target(&gop, &top, (0.0, 0.0), cfg.seed);
        let report = train_transform(&gop, &top, &target, 1, &cfg).unwrap();
        assert_eq!(report.loss_curve, vec![0.0]);
        assert_eq!(report.epochs_run, 0);
        assert_eq!(report.order_sums, (0.0, 0.0));
        assert_eq!(report.final_loss, 0.0);
    }

    #[test]
    fn two_layer_sums_converge_and_layers_displace_equally() {
        let (gop, top) = protocol_ops(20, 6, SHIFT_SEED);
        let mut cfg = TrainConfig::transform_defaults();
        cfg.layer_inits = Some(vec![(0.0, 0.0), (1.0, 1.0)]);
        let target = transform_target(&gop, &top, (1.45, 1.55), cfg.seed);
        let report = train_transform(&gop, &top, &target, 2, &cfg).unwrap();
        assert!(
            (report.order_sums.0 - 1.45).abs() < 1e-3,
            "{:?}",
            report.order_sums
        );
        assert!(
            (report.order_sums.1 - 1.55).abs() < 1e-3,
            "{:?}",
            report.order_sums
        );
        assert!(report.final_loss <= 1e-8, "loss {}", report.final_loss);
        // Identical per-layer gradients: both layers move by the same offset
        // from their starts, so the initial spacing survives training.
        let (l0, l1) = (report.layer_orders[0], report.layer_orders[1]);
        assert!(((l0.0 - 0.0) - (l1.0 - 1.0)).abs() < 1e-12);
        assert!(((l0.1 - 0.0) - (l1.1 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn layer_init_count_must_match_layers() {
        let gop = graph_op(6, 465);
        let top = Arc::new(make_time_fracop(3).unwrap());
        let mut cfg = TrainConfig::transform_defaults();
        cfg.epochs = 1;
        cfg.layer_inits = Some(vec![(0.0, 0.0)]);
        let target = transform_target(&gop, &top, (0.2, 0.3), cfg.seed);
        assert!(matches!(
            train_transform(&gop, &top, &target, 2, &cfg),
            Err(LearnError::BadConfig(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let gop = graph_op(4, 460);
        let top = Arc::new(make_time_fracop(3).unwrap());
        let mut cfg = TrainConfig::transform_defaults();
        cfg.epochs = 200;
        let target = transform_target(&gop, &top, (0.8, -0.3), cfg.seed);
        let a = train_transform(&gop, &top, &target, 1, &cfg).unwrap();
        let b = train_transform(&gop, &top, &target, 1, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.loss_curve, b.loss_curve);
    }

    fn synthetic_denoise_setup(
        overlap: usize,
        sigma: f64,
        seed: u64,
    ) -> (
        Arc<FractionalOperator>,
        Arc<FractionalOperator>,
        TimeVertexSignal,
        TimeVertexSignal,
    ) {
        let gop = graph_op(6, 470);
        let top = Arc::new(make_time_fracop(6).unwrap());
        let jt = JointTransform::new(gop.clone(), top.clone(), 0.55, 0.45);
        let band = BandSpec::new(4, 4, 6, 6).unwrap();
        let x = gen_bandlimited(&jt, &band, 6, seed).unwrap();
        let spec = NoiseSpec::corner(&band, overlap, sigma, seed + 1, 6, 6).unwrap();
        let noise = gen_highfreq_noise(&jt, &spec, 6).unwrap();
        let y = x.add(&noise).unwrap();
        (gop, top, x, y)
    }

    #[test]
    fn fixed_filter_denoising_recovers_the_true_orders() {
        let (gop, top, x, y) = synthetic_denoise_setup(0, 0.2, 500);
        let band = BandSpec::new(4, 4, 6, 6).unwrap();
        let filter = DenoiseFilter::Fixed(crate::filtering::fixed_lowpass(6, 6, &band));
        let cfg = TrainConfig::denoise_defaults();
        let report = train_denoiser(&x, &y, &gop, &top, &filter, &cfg).unwrap();
        let (alpha, beta) = report.order_sums;
        assert!((alpha - 0.55).abs() < 1e-2, "alpha {alpha}");
        assert!((beta - 0.45).abs() < 1e-2, "beta {beta}");
        let snr = report.snr_out.unwrap();
        assert!(snr >= 60.0, "snr {snr}");
        // One loss entry per update, plus the final entry that tripped the
        // rounding-floor stop when the run converged early.
        let len = report.loss_curve.len();
        assert!(
            len == report.epochs_run || len == report.epochs_run + 1,
            "curve {len} vs updates {}",
            report.epochs_run
        );
    }

    #[test]
    fn noiseless_learnable_run_is_trivially_perfect() {
        let (gop, top, x, _) = synthetic_denoise_setup(0, 0.2, 510);
        let mut cfg = TrainConfig::denoise_defaults();
        cfg.epochs = 10;
        let report = train_denoiser(&x, &x, &gop, &top, &DenoiseFilter::Learnable, &cfg).unwrap();
        let snr = report.snr_out.unwrap();
        assert!(snr >= 100.0, "snr {snr}");
        assert!(report.learned_filter.is_some());
    }

    #[test]
    fn learnable_filter_beats_fixed_on_overlapping_noise() {
        let (gop, top, x, y) = synthetic_denoise_setup(2, 0.2, 520);
        let band = BandSpec::new(4, 4, 6, 6).unwrap();
        let mut cfg = TrainConfig::denoise_defaults();
        cfg.epochs = 2000;
        let fixed = train_denoiser(
            &x,
            &y,
            &gop,
            &top,
            &DenoiseFilter::Fixed(crate::filtering::fixed_lowpass(6, 6, &band)),
            &cfg,
        )
        .unwrap();
        let learned = train_denoiser(&x, &y, &gop, &top, &DenoiseFilter::Learnable, &cfg).unwrap();
        assert!(
            learned.snr_out.unwrap() > fixed.snr_out.unwrap(),
            "learnable {} vs fixed {}",
            learned.snr_out.unwrap(),
            fixed.snr_out.unwrap()
        );
    }

    #[test]
    fn wiener_filter_training_dominates_the_fixed_filter() {
        let (gop, top, x, y) = synthetic_denoise_setup(2, 0.2, 525);
        let band = BandSpec::new(4, 4, 6, 6).unwrap();
        let mut cfg = TrainConfig::denoise_defaults();
        cfg.epochs = 1500;
        let fixed = train_denoiser(
            &x,
            &y,
            &gop,
            &top,
            &DenoiseFilter::Fixed(crate::filtering::fixed_lowpass(6, 6, &band)),
            &cfg,
        )
        .unwrap();
        let wiener =
            train_denoiser(&x, &y, &gop, &top, &DenoiseFilter::WienerOptimal, &cfg).unwrap();
        // Per epoch the filter is the exact loss minimizer given the orders,
        // so the run can only improve on the fixed indicator at like orders.
        assert!(
            wiener.snr_out.unwrap() > fixed.snr_out.unwrap(),
            "wiener {} vs fixed {}",
            wiener.snr_out.unwrap(),
            fixed.snr_out.unwrap()
        );
        let h = wiener.learned_filter.expect("wiener filter reported");
        assert_eq!(h.coeffs.len(), 36);
        assert!(matches!(h.mode, FilterMode::Wiener));
    }

    #[test]
    fn restarts_report_the_best_run() {
        let (gop, top, x, y) = synthetic_denoise_setup(0, 0.3, 530);
        let band = BandSpec::new(4, 4, 6, 6).unwrap();
        let mut cfg = TrainConfig::denoise_defaults();
        cfg.epochs = 60;
        cfg.restarts = 8;
        cfg.seed = 99;
        let report = train_denoiser(
            &x,
            &y,
            &gop,
            &top,
            &DenoiseFilter::Fixed(crate::filtering::fixed_lowpass(6, 6, &band)),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.restart_snrs.len(), 8);
        let best = report.snr_out.unwrap();
        for (i, s) in report.restart_snrs.iter().enumerate() {
            assert!(best >= *s, "restart {i}: {s} exceeds reported best {best}");
        }
        assert!(report.restart_snrs.contains(&best));

        // Same config twice: identical restart draws and identical outcome.
        let again = train_denoiser(
            &x,
            &y,
            &gop,
            &top,
            &DenoiseFilter::Fixed(crate::filtering::fixed_lowpass(6, 6, &band)),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let mut cfg = TrainConfig::transform_defaults();
        cfg.learning_rate = 0.0;
        assert!(matches!(cfg.validate(), Err(LearnError::BadConfig(_))));
        let mut cfg = TrainConfig::transform_defaults();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::transform_defaults();
        cfg.adam.beta1 = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::transform_defaults();
        cfg.order_init_range = (2.0, -2.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lr_decay_schedule() {
        let mut cfg = TrainConfig::transform_defaults();
        cfg.learning_rate = 1.0;
        cfg.lr_decay = Some((0.5, 100));
        assert_eq!(cfg.lr_at(0), 1.0);
        assert_eq!(cfg.lr_at(99), 1.0);
        assert_eq!(cfg.lr_at(100), 0.5);
        assert_eq!(cfg.lr_at(250), 0.25);
        cfg.lr_decay = None;
        assert_eq!(cfg.lr_at(999), 1.0);
    }
}
