//! Subcommand implementations. Each resolves its config, builds the
//! experiment, delegates the computation to the library, and writes
//! `report.json` plus the command's CSV outputs under the output directory.
//!
//! Error classification follows the exit-code contract: anything wrong with
//! flags, config files, or input data is a configuration error; failures
//! inside the numerics (defective operators, singular solves, diverged
//! runs) are numerical failures.

use crate::config::{
    parse_shift_kind, BenchRuntimeConfig, DenoiseFileConfig, DenoiseSynthConfig, FilterTreatment,
    GridSearchConfig, TransformLearnConfig,
};
use crate::output;
use crate::{
    BenchRuntimeArgs, CliError, DenoiseFileArgs, DenoiseSynthArgs, GridSearchArgs,
    TransformLearnArgs,
};
use jfrft::bench::{self, FilterPolicy, GridSpec, RuntimeOptions};
use jfrft::filtering::{fixed_lowpass, snr_db, FilterChain};
use jfrft::fracops::{
    make_graph_fracop, make_time_fracop, make_unitary_fracop, FractionalOperator,
};
use jfrft::graphs::{gft_factorize, read_edge_list_csv, shift_operator};
use jfrft::joint::JointTransform;
use jfrft::learn::{
    random_shift_matrix, train_denoiser, train_transform, transform_target, DenoiseFilter,
    LearnError, TrainConfig,
};
use jfrft::signals::{
    gen_bandlimited, gen_highfreq_noise, load_timeseries_csv, save_timeseries_csv, BandSpec,
    NoiseSpec, TimeVertexSignal,
};
use std::sync::Arc;

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn classify_learn(e: LearnError) -> CliError {
    match e {
        LearnError::BadConfig(msg) => CliError::Config(msg),
        other => CliError::Numerical(other.to_string()),
    }
}

pub fn transform_learn(args: &TransformLearnArgs) -> Result<(), CliError> {
    let cfg = TransformLearnConfig::resolve(args)?;
    output::ensure_dir(&cfg.out)?;
    let shift = random_shift_matrix(cfg.vertices, cfg.seed);
    let gft = gft_factorize(&shift).map_err(numerical)?;
    let gop = Arc::new(make_graph_fracop(&gft).map_err(numerical)?);
    let top = Arc::new(make_time_fracop(cfg.steps).map_err(numerical)?);
    let target = transform_target(&gop, &top, (cfg.alpha, cfg.beta), cfg.seed);

    let mut tc = TrainConfig::transform_defaults();
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.lr;
    tc.seed = cfg.seed;
    tc.layer_inits = cfg.layer_inits.clone();
    let report = train_transform(&gop, &top, &target, cfg.layers, &tc).map_err(classify_learn)?;

    output::write_report(&cfg.out, "transform-learn", &cfg, &report)?;
    output::write_loss_csv(&cfg.out, &report.loss_curve)?;
    let (a, b) = report.order_sums;
    println!(
        "transform-learn: target ({}, {}), {} layer(s), {} vertices x {} steps",
        cfg.alpha, cfg.beta, cfg.layers, cfg.vertices, cfg.steps
    );
    println!("  learned order sums ({a:.6}, {b:.6})");
    println!(
        "  final loss {:.3e} after {} update(s), {:.2}s",
        report.final_loss, report.epochs_run, report.wall_time_s
    );
    println!("  reports in {}", cfg.out.display());
    Ok(())
}

/// Synthetic denoising instance shared by denoise-synth and grid-search: a
/// seeded unitary graph operator, band-limited blocks at the true orders,
/// and corner noise, drawn from consecutive sub-seeds.
struct SynthInstance {
    gop: Arc<FractionalOperator>,
    top: Arc<FractionalOperator>,
    band: BandSpec,
    x: TimeVertexSignal,
    y: TimeVertexSignal,
}

#[allow(clippy::too_many_arguments)]
fn synth_instance(
    n: usize,
    t: usize,
    blocks: usize,
    orders: (f64, f64),
    band_vertex: usize,
    band_time: usize,
    overlap: usize,
    sigma: f64,
    seed: u64,
) -> Result<SynthInstance, CliError> {
    let band = BandSpec::new(band_vertex, band_time, n, t).map_err(config_err)?;
    let gop = Arc::new(make_unitary_fracop(n, seed).map_err(numerical)?);
    let top = Arc::new(make_time_fracop(t).map_err(numerical)?);
    let jt = JointTransform::new(gop.clone(), top.clone(), orders.0, orders.1);
    let x = gen_bandlimited(&jt, &band, blocks, seed.wrapping_add(1)).map_err(numerical)?;
    let spec =
        NoiseSpec::corner(&band, overlap, sigma, seed.wrapping_add(2), n, t).map_err(config_err)?;
    let noise = gen_highfreq_noise(&jt, &spec, blocks).map_err(numerical)?;
    let y = x.add(&noise).map_err(numerical)?;
    Ok(SynthInstance {
        gop,
        top,
        band,
        x,
        y,
    })
}

fn to_denoise_filter(
    treatment: FilterTreatment,
    n: usize,
    t: usize,
    band: &BandSpec,
) -> DenoiseFilter {
    match treatment {
        FilterTreatment::Fixed => DenoiseFilter::Fixed(fixed_lowpass(n, t, band)),
        FilterTreatment::Learnable => DenoiseFilter::Learnable,
        FilterTreatment::Wiener => DenoiseFilter::WienerOptimal,
    }
}

pub fn denoise_synth(args: &DenoiseSynthArgs) -> Result<(), CliError> {
    let cfg = DenoiseSynthConfig::resolve(args)?;
    output::ensure_dir(&cfg.out)?;
    let inst = synth_instance(
        cfg.vertices,
        cfg.steps,
        cfg.blocks,
        (cfg.alpha, cfg.beta),
        cfg.band_vertex,
        cfg.band_time,
        cfg.overlap,
        cfg.sigma,
        cfg.seed,
    )?;
    let filter = to_denoise_filter(cfg.filter, cfg.vertices, cfg.steps, &inst.band);
    let mut tc = TrainConfig::denoise_defaults();
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.lr;
    tc.seed = cfg.seed;
    tc.restarts = cfg.restarts;
    let report = train_denoiser(&inst.x, &inst.y, &inst.gop, &inst.top, &filter, &tc)
        .map_err(classify_learn)?;

    output::write_report(&cfg.out, "denoise-synth", &cfg, &report)?;
    output::write_loss_csv(&cfg.out, &report.loss_curve)?;
    let (a, b) = report.order_sums;
    let input_snr = snr_db(&inst.x, &inst.y).map_err(numerical)?;
    println!(
        "denoise-synth: filter {}, overlap {}, sigma {}, true orders ({}, {})",
        cfg.filter.name(),
        cfg.overlap,
        cfg.sigma,
        cfg.alpha,
        cfg.beta
    );
    println!("  learned orders ({a:.4}, {b:.4})");
    println!(
        "  SNR {:.2} dB (noisy input {input_snr:.2} dB), {} update(s), {:.2}s",
        report.snr_out.unwrap_or(f64::NAN),
        report.epochs_run,
        report.wall_time_s
    );
    println!("  reports in {}", cfg.out.display());
    Ok(())
}

pub fn denoise_file(args: &DenoiseFileArgs) -> Result<(), CliError> {
    let cfg = DenoiseFileConfig::resolve(args)?;
    output::ensure_dir(&cfg.out)?;
    // Without a block length the whole file is one block; probe the width
    // with a single-column pass first.
    let block_len = match cfg.block_len {
        Some(b) => b,
        None => load_timeseries_csv(&cfg.input, 1, None, false)
            .map_err(config_err)?
            .data()
            .ncols(),
    };
    let x = load_timeseries_csv(&cfg.input, block_len, cfg.expect, cfg.normalize)
        .map_err(config_err)?;
    let (n, t, m) = (x.n(), x.t(), x.m());

    let gop = match &cfg.edges {
        Some(path) => {
            let graph = read_edge_list_csv(path, Some(n), cfg.directed).map_err(config_err)?;
            let kind = parse_shift_kind(&cfg.shift_kind)?;
            let shift = shift_operator(&graph, kind).map_err(config_err)?;
            let gft = gft_factorize(&shift).map_err(numerical)?;
            Arc::new(make_graph_fracop(&gft).map_err(numerical)?)
        }
        None => Arc::new(make_unitary_fracop(n, cfg.graph_seed).map_err(numerical)?),
    };
    let top = Arc::new(make_time_fracop(t).map_err(numerical)?);

    let band = BandSpec::new(
        cfg.band_vertex.unwrap_or(n.div_ceil(2)),
        cfg.band_time.unwrap_or(t.div_ceil(2)),
        n,
        t,
    )
    .map_err(config_err)?;
    let jt_true = JointTransform::new(gop.clone(), top.clone(), cfg.noise_alpha, cfg.noise_beta);
    let spec = NoiseSpec::corner(&band, cfg.overlap, cfg.sigma, cfg.noise_seed, n, t)
        .map_err(config_err)?;
    let noise = gen_highfreq_noise(&jt_true, &spec, m).map_err(numerical)?;
    let y = x.add(&noise).map_err(numerical)?;

    let filter = to_denoise_filter(cfg.filter, n, t, &band);
    let mut tc = TrainConfig::denoise_defaults();
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.lr;
    tc.seed = cfg.seed;
    let report = train_denoiser(&x, &y, &gop, &top, &filter, &tc).map_err(classify_learn)?;

    // Rebuild the trained chain to emit the denoised signal itself.
    let jt_hat = JointTransform::new(
        gop.clone(),
        top.clone(),
        report.order_sums.0,
        report.order_sums.1,
    );
    let h = match (&filter, &report.learned_filter) {
        (DenoiseFilter::Fixed(f), _) => f.clone(),
        (_, Some(h)) => h.clone(),
        _ => unreachable!("non-fixed treatments always report a filter"),
    };
    let chain = FilterChain::new(&jt_hat, &h).map_err(numerical)?;
    let est = chain.apply_signal(&y).map_err(numerical)?;
    save_timeseries_csv(&cfg.out.join("denoised.csv"), &est).map_err(config_err)?;

    output::write_report(&cfg.out, "denoise-file", &cfg, &report)?;
    output::write_loss_csv(&cfg.out, &report.loss_curve)?;
    let (a, b) = report.order_sums;
    let input_snr = snr_db(&x, &y).map_err(numerical)?;
    println!(
        "denoise-file: {} ({n} vertices x {} columns, {m} block(s) of {t})",
        cfg.input.display(),
        m * t
    );
    println!(
        "  filter {}, noise sigma {} at orders ({}, {}), overlap {}",
        cfg.filter.name(),
        cfg.sigma,
        cfg.noise_alpha,
        cfg.noise_beta,
        cfg.overlap
    );
    println!("  learned orders ({a:.4}, {b:.4})");
    println!(
        "  SNR {:.2} dB (noisy input {input_snr:.2} dB), {} update(s), {:.2}s",
        report.snr_out.unwrap_or(f64::NAN),
        report.epochs_run,
        report.wall_time_s
    );
    println!("  denoised signal and reports in {}", cfg.out.display());
    Ok(())
}

pub fn grid_search_cmd(args: &GridSearchArgs) -> Result<(), CliError> {
    let cfg = GridSearchConfig::resolve(args)?;
    output::ensure_dir(&cfg.out)?;
    let inst = synth_instance(
        cfg.vertices,
        cfg.steps,
        cfg.blocks,
        (cfg.alpha, cfg.beta),
        cfg.band_vertex,
        cfg.band_time,
        cfg.overlap,
        cfg.sigma,
        cfg.seed,
    )?;
    let policy = match cfg.policy {
        FilterTreatment::Fixed => {
            FilterPolicy::Fixed(fixed_lowpass(cfg.vertices, cfg.steps, &inst.band))
        }
        FilterTreatment::Wiener => FilterPolicy::Wiener,
        FilterTreatment::Learnable => unreachable!("rejected at resolution"),
    };
    let report = bench::grid_search(&inst.x, &inst.y, &inst.gop, &inst.top, &cfg.grid, &policy)
        .map_err(numerical)?;

    output::write_report(&cfg.out, "grid-search", &cfg, &report)?;
    output::write_cells_csv(&cfg.out, &report.cells)?;
    println!(
        "grid-search: {} cells, {} policy, true orders ({}, {})",
        cfg.grid.cells(),
        cfg.policy.name(),
        cfg.alpha,
        cfg.beta
    );
    println!(
        "  best cell ({:.4}, {:.4}) at {:.2} dB, {:.2}s total",
        report.best.alpha,
        report.best.beta,
        report.best.snr_db.unwrap_or(f64::NAN),
        report.total_time_s
    );
    println!("  reports in {}", cfg.out.display());
    Ok(())
}

pub fn bench_runtime(args: &BenchRuntimeArgs) -> Result<(), CliError> {
    let cfg = BenchRuntimeConfig::resolve(args)?;
    output::ensure_dir(&cfg.out)?;
    let grid = GridSpec::square(-2.0, 2.0, cfg.step).map_err(config_err)?;
    let opts = RuntimeOptions {
        grid,
        epochs: cfg.epochs,
        learning_rate: cfg.lr,
        blocks: cfg.blocks,
        sigma: cfg.sigma,
        seed: cfg.seed,
        runs: cfg.runs,
    };
    let records = bench::runtime_bench(&cfg.sizes, &cfg.methods(), &opts).map_err(numerical)?;

    output::write_report(&cfg.out, "bench-runtime", &cfg, &records)?;
    output::write_runtime_csv(&cfg.out, &records)?;
    println!(
        "bench-runtime: {} size(s) x {} method(s), median of {} run(s)",
        cfg.sizes.len(),
        cfg.methods.len(),
        cfg.runs
    );
    for r in &records {
        let detail = match (r.per_epoch_s, r.cells) {
            (Some(pe), _) => format!(", {pe:.3e} s/epoch"),
            (None, Some(c)) => format!(", {c} cells"),
            _ => String::new(),
        };
        println!(
            "  {} at {}x{}: {:.3}s{detail}, {:.2} dB",
            r.method, r.n, r.t, r.total_time_s, r.snr_db
        );
    }
    println!("  reports in {}", cfg.out.display());
    Ok(())
}
