//! Grid-search baseline over order pairs and runtime scaling measurement.
//!
//! Grid search is the procedure the trainable orders replace: evaluate every
//! `(alpha, beta)` on a lattice, filter at each cell, keep the cell with the
//! best output SNR. Cells are independent and evaluate in parallel; the
//! reduction walks the lattice in a fixed order with a fixed tie-break
//! (higher SNR wins, ties go to the smaller alpha, then the smaller beta),
//! so parallel execution cannot change the argmax.
//!
//! Runtime measurement times both strategies on seeded synthetic instances
//! across problem sizes. Timings are wall-clock medians over repeated runs
//! and the timed runs execute serially to avoid contention skew; absolute
//! seconds are machine-specific, so reports are meant to be read as
//! orderings and growth ratios, not reproduced exactly.

use crate::filtering::{snr_db, wiener_solve, DiagonalFilter, FilterChain, WienerObservations};
use crate::fracops::{make_time_fracop, make_unitary_fracop, FracOpError, FractionalOperator};
use crate::joint::JointTransform;
use crate::learn::{train_denoiser, DenoiseFilter, LearnError, TrainConfig};
use crate::signals::{
    blockify, gen_bandlimited, gen_highfreq_noise, BandSpec, NoiseSpec, SignalError,
    TimeVertexSignal,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid range: {0}")]
    BadRange(String),
    #[error("signals have shapes {a:?} and {b:?}")]
    ShapeMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("signal is {n} x {t} per block but operators are {op_n} x {op_t}")]
    OperatorMismatch {
        n: usize,
        t: usize,
        op_n: usize,
        op_t: usize,
    },
    #[error("every grid cell failed; first error: {0}")]
    AllCellsFailed(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    FracOp(#[from] FracOpError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Sampled closed interval `lo, lo+step, ...` up to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, BenchError> {
        if !lo.is_finite() || !hi.is_finite() || !step.is_finite() {
            return Err(BenchError::BadRange(format!(
                "bounds ({lo}, {hi}, {step}) must be finite"
            )));
        }
        if lo > hi {
            return Err(BenchError::BadRange(format!("lo {lo} exceeds hi {hi}")));
        }
        if !(step > 0.0) {
            return Err(BenchError::BadRange(format!(
                "step {step} must be positive"
            )));
        }
        Ok(Self { lo, hi, step })
    }

    /// Number of lattice points; `lo == hi` yields one.
    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The lattice points, computed by index so rounding never accumulates;
    /// the last point snaps to `hi` when it lands there up to rounding.
    pub fn values(&self) -> Vec<f64> {
        let count = self.len();
        (0..count)
            .map(|k| {
                let v = self.lo + k as f64 * self.step;
                if (v - self.hi).abs() < 1e-6 * self.step {
                    self.hi
                } else {
                    v
                }
            })
            .collect()
    }
}

/// The order lattice a grid search sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha: RangeSpec,
    pub beta: RangeSpec,
}

impl GridSpec {
    pub fn new(alpha: RangeSpec, beta: RangeSpec) -> Self {
        Self { alpha, beta }
    }

    /// Same range on both orders.
    pub fn square(lo: f64, hi: f64, step: f64) -> Result<Self, BenchError> {
        let r = RangeSpec::new(lo, hi, step)?;
        Ok(Self { alpha: r, beta: r })
    }

    /// The conventional fine search lattice: both orders over `[-2, 2]` in
    /// steps of 0.01.
    pub fn fine() -> Self {
        Self::square(-2.0, 2.0, 0.01).expect("constant range is valid")
    }

    /// The coarse lattice used for runtime comparisons: both orders over
    /// `[-2, 2]` in steps of 0.1.
    pub fn coarse() -> Self {
        Self::square(-2.0, 2.0, 0.1).expect("constant range is valid")
    }

    pub fn cells(&self) -> usize {
        self.alpha.len() * self.beta.len()
    }
}

/// How each grid cell obtains its diagonal filter.
#[derive(Debug, Clone)]
pub enum FilterPolicy {
    /// The same filter at every cell; only the orders vary.
    Fixed(DiagonalFilter),
    /// A fresh Wiener solve per cell from block sample statistics of the
    /// clean/noisy pair.
    Wiener,
}

/// One evaluated lattice cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub alpha: f64,
    pub beta: f64,
    /// Output SNR in dB; absent when the cell failed.
    pub snr_db: Option<f64>,
    /// Failure reason for skipped cells.
    pub error: Option<String>,
    /// Machine-dependent and therefore not serialized.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Outcome of one grid search.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    /// Method tag, e.g. `JFRFT-search`.
    pub method: String,
    /// Every cell in lattice order: alpha outer, beta inner, both ascending.
    pub cells: Vec<CellRecord>,
    /// The winning cell under the SNR-then-smallest-orders rule.
    pub best: CellRecord,
    /// Machine-dependent and therefore not serialized.
    #[serde(skip)]
    pub total_time_s: f64,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn check_pair(
    x_clean: &TimeVertexSignal,
    y_noisy: &TimeVertexSignal,
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
) -> Result<(), BenchError> {
    if x_clean.data().dim() != y_noisy.data().dim() || x_clean.t() != y_noisy.t() {
        return Err(BenchError::ShapeMismatch {
            a: x_clean.data().dim(),
            b: y_noisy.data().dim(),
        });
    }
    if x_clean.n() != graph_op.size() || x_clean.t() != time_op.size() {
        return Err(BenchError::OperatorMismatch {
            n: x_clean.n(),
            t: x_clean.t(),
            op_n: graph_op.size(),
            op_t: time_op.size(),
        });
    }
    Ok(())
}

/// Exhaustive search over the order lattice: filter `y_noisy` at every
/// `(alpha, beta)` cell under `policy`, score against `x_clean`, and return
/// the argmax. Per-cell failures are recorded on the cell and skipped; the
/// search only errors when every cell fails. Ties break to the smaller
/// alpha, then the smaller beta, independent of evaluation order.
pub fn grid_search(
    x_clean: &TimeVertexSignal,
    y_noisy: &TimeVertexSignal,
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
    grid: &GridSpec,
    policy: &FilterPolicy,
) -> Result<BenchReport, BenchError> {
    check_pair(x_clean, y_noisy, graph_op, time_op)?;
    let started = Instant::now();
    let clean_blocks = blockify(x_clean);
    let noisy_blocks = blockify(y_noisy);
    let mut lattice = Vec::with_capacity(grid.cells());
    for a in grid.alpha.values() {
        for b in grid.beta.values() {
            lattice.push((a, b));
        }
    }
    let cells: Vec<CellRecord> = lattice
        .par_iter()
        .map(|&(alpha, beta)| {
            let cell_start = Instant::now();
            let outcome = evaluate_cell(
                alpha,
                beta,
                x_clean,
                y_noisy,
                graph_op,
                time_op,
                &clean_blocks,
                &noisy_blocks,
                policy,
            );
            let (snr_db, error) = match outcome {
                Ok(snr) => (Some(snr), None),
                Err(reason) => (None, Some(reason)),
            };
            CellRecord {
                alpha,
                beta,
                snr_db,
                error,
                wall_time_s: cell_start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    // Lattice order plus strict improvement keeps the first of any tie,
    // which is the smallest alpha, then the smallest beta.
    let mut best: Option<&CellRecord> = None;
    for cell in &cells {
        if let Some(snr) = cell.snr_db {
            if best.and_then(|b| b.snr_db).is_none_or(|bs| snr > bs) {
                best = Some(cell);
            }
        }
    }
    let best = match best {
        Some(cell) => cell.clone(),
        None => {
            let first = cells
                .iter()
                .find_map(|c| c.error.clone())
                .unwrap_or_else(|| "empty grid".into());
            return Err(BenchError::AllCellsFailed(first));
        }
    };
    Ok(BenchReport {
        method: if time_op.size() == 1 {
            Method::GfrftSearch.tag().to_string()
        } else {
            Method::JfrftSearch.tag().to_string()
        },
        cells,
        best,
        total_time_s: started.elapsed().as_secs_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    alpha: f64,
    beta: f64,
    x_clean: &TimeVertexSignal,
    y_noisy: &TimeVertexSignal,
    graph_op: &Arc<FractionalOperator>,
    time_op: &Arc<FractionalOperator>,
    clean_blocks: &[crate::numkit::CVec],
    noisy_blocks: &[crate::numkit::CVec],
    policy: &FilterPolicy,
) -> Result<f64, String> {
    let jt = JointTransform::new(graph_op.clone(), time_op.clone(), alpha, beta);
    let h = match policy {
        FilterPolicy::Fixed(f) => f.clone(),
        FilterPolicy::Wiener => wiener_solve(
            &jt,
            WienerObservations::Empirical {
                clean: clean_blocks,
                noisy: noisy_blocks,
            },
        )
        .map_err(|e| e.to_string())?,
    };
    let chain = FilterChain::new(&jt, &h).map_err(|e| e.to_string())?;
    let est = chain.apply_signal(y_noisy).map_err(|e| e.to_string())?;
    snr_db(x_clean, &est).map_err(|e| e.to_string())
}

/// Strategies compared by the runtime benchmark. The graph-only variants run
/// the same pipeline with the time axis collapsed to a single step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    JfrftSearch,
    JfrftLearn,
    GfrftSearch,
    GfrftLearn,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::JfrftSearch => "JFRFT-search",
            Method::JfrftLearn => "JFRFT-learn",
            Method::GfrftSearch => "GFRFT-search",
            Method::GfrftLearn => "GFRFT-learn",
        }
    }

    /// Parses the tag form, e.g. `JFRFT-learn`; matching ignores case.
    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            Method::JfrftSearch,
            Method::JfrftLearn,
            Method::GfrftSearch,
            Method::GfrftLearn,
        ]
        .into_iter()
        .find(|m| m.tag().eq_ignore_ascii_case(tag))
    }

    pub fn is_learn(self) -> bool {
        matches!(self, Method::JfrftLearn | Method::GfrftLearn)
    }

    pub fn is_graph_only(self) -> bool {
        matches!(self, Method::GfrftSearch | Method::GfrftLearn)
    }
}

/// Knobs for the runtime benchmark; the defaults mirror the experiment
/// protocol (coarse `[-2, 2]` step-0.1 search, 1200 training epochs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeOptions {
    pub grid: GridSpec,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Blocks per synthetic instance.
    pub blocks: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Runs per measurement; the median is reported.
    pub runs: usize,
}

impl Default for RuntimeOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::coarse(),
            epochs: 1200,
            learning_rate: 1e-3,
            blocks: 2,
            sigma: 0.3,
            seed: 0,
            runs: 3,
        }
    }
}

/// One timed measurement: a method at one problem size.
#[derive(Debug, Clone, Serialize)]
pub struct RuntimeRecord {
    pub method: String,
    pub n: usize,
    pub t: usize,
    /// Median wall-clock seconds over the configured runs.
    pub total_time_s: f64,
    /// Median seconds per optimizer update, for learn methods.
    pub per_epoch_s: Option<f64>,
    /// Lattice size, for search methods.
    pub cells: Option<usize>,
    /// Optimizer updates applied, for learn methods.
    pub epochs_run: Option<usize>,
    /// Output SNR of the last run, as a sanity anchor.
    pub snr_db: f64,
}

/// Synthetic denoising instance at one size: unitary graph operator, time
/// operator, and a half-band signal with trailing-corner noise.
fn synth_instance(
    n: usize,
    t: usize,
    sigma: f64,
    blocks: usize,
    seed: u64,
) -> Result<
    (
        Arc<FractionalOperator>,
        Arc<FractionalOperator>,
        TimeVertexSignal,
        TimeVertexSignal,
    ),
    BenchError,
> {
    let gop = Arc::new(make_unitary_fracop(n, seed)?);
    let top = Arc::new(make_time_fracop(t)?);
    let jt = JointTransform::new(
        gop.clone(),
        top.clone(),
        0.55,
        if t > 1 { 0.45 } else { 0.0 },
    );
    let k_band = n.div_ceil(2);
    let l_band = t.div_ceil(2);
    let band = BandSpec::new(k_band, l_band, n, t)?;
    let x = gen_bandlimited(&jt, &band, blocks, seed + 1)?;
    // Noise on the trailing spectral corner; with a single time step the
    // corner degenerates to the trailing graph frequencies.
    let support: Vec<(usize, usize)> = if t > 1 {
        (k_band..n)
            .flat_map(|row| (l_band..t).map(move |col| (row, col)))
            .collect()
    } else {
        (k_band..n).map(|row| (row, 0)).collect()
    };
    let spec = NoiseSpec::new(sigma, support, seed + 2, n, t)?;
    let noise = gen_highfreq_noise(&jt, &spec, blocks)?;
    let y = x.add(&noise)?;
    Ok((gop, top, x, y))
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    samples[samples.len() / 2]
}

/// Times each method on a fresh synthetic instance at every size. Runs
/// execute serially; each measurement repeats `opts.runs` times and reports
/// the median. Learn methods additionally report seconds per optimizer
/// update.
pub fn runtime_bench(
    sizes: &[(usize, usize)],
    methods: &[Method],
    opts: &RuntimeOptions,
) -> Result<Vec<RuntimeRecord>, BenchError> {
    let mut records = Vec::with_capacity(sizes.len() * methods.len());
    for &(n, t) in sizes {
        for &method in methods {
            let t_eff = if method.is_graph_only() { 1 } else { t };
            let (gop, top, x, y) = synth_instance(n, t_eff, opts.sigma, opts.blocks, opts.seed)?;
            let mut times = Vec::with_capacity(opts.runs);
            let mut per_epoch = Vec::with_capacity(opts.runs);
            let mut snr = 0.0;
            let mut cells = None;
            let mut epochs_run = None;
            for _ in 0..opts.runs.max(1) {
                if method.is_learn() {
                    let mut cfg = TrainConfig::denoise_defaults();
                    cfg.epochs = opts.epochs;
                    cfg.learning_rate = opts.learning_rate;
                    cfg.seed = opts.seed;
                    let run_start = Instant::now();
                    let report =
                        train_denoiser(&x, &y, &gop, &top, &DenoiseFilter::Learnable, &cfg)?;
                    let elapsed = run_start.elapsed().as_secs_f64();
                    times.push(elapsed);
                    per_epoch.push(elapsed / report.epochs_run.max(1) as f64);
                    snr = report.snr_out.unwrap_or(f64::NAN);
                    epochs_run = Some(report.epochs_run);
                } else {
                    let grid = if method.is_graph_only() {
                        GridSpec::new(opts.grid.alpha, RangeSpec::new(0.0, 0.0, 1.0)?)
                    } else {
                        opts.grid
                    };
                    let run_start = Instant::now();
                    let report = grid_search(&x, &y, &gop, &top, &grid, &FilterPolicy::Wiener)?;
                    times.push(run_start.elapsed().as_secs_f64());
                    snr = report.best.snr_db.unwrap_or(f64::NAN);
                    cells = Some(report.cells.len());
                }
            }
            records.push(RuntimeRecord {
                method: method.tag().to_string(),
                n,
                t: t_eff,
                total_time_s: median(times),
                per_epoch_s: if per_epoch.is_empty() {
                    None
                } else {
                    Some(median(per_epoch))
                },
                cells,
                epochs_run,
                snr_db: snr,
            });
        }
    }
    Ok(records)
}
