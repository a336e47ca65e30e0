//! Parameter resolution: CLI flags override JSON config file values, which
//! override the experiment-protocol defaults.
//!
//! Each subcommand has a file-config struct mirroring its flags (every field
//! optional, unknown keys rejected) and a resolved struct holding the final
//! values. The resolved structs serialize into `report.json`, so every
//! report carries the exact configuration that produced it. Compound values
//! use the same syntax in files as on the command line: order pairs `a:b`,
//! ranges `lo:hi:step`, sizes `NxT`, comma-separated lists.

use crate::{
    BenchRuntimeArgs, CliError, DenoiseFileArgs, DenoiseSynthArgs, GridSearchArgs,
    TransformLearnArgs,
};
use jfrft::bench::{GridSpec, Method, RangeSpec};
use jfrft::graphs::ShiftKind;
use jfrft::signals::NoiseSidecar;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Filter treatment named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterTreatment {
    Fixed,
    Learnable,
    Wiener,
}

impl FilterTreatment {
    pub fn name(self) -> &'static str {
        match self {
            FilterTreatment::Fixed => "fixed",
            FilterTreatment::Learnable => "learnable",
            FilterTreatment::Wiener => "wiener",
        }
    }
}

pub fn parse_filter(s: &str) -> Result<FilterTreatment, CliError> {
    match s {
        "fixed" => Ok(FilterTreatment::Fixed),
        "learnable" => Ok(FilterTreatment::Learnable),
        "wiener" => Ok(FilterTreatment::Wiener),
        other => Err(CliError::Config(format!(
            "filter '{other}' is not one of fixed, learnable, wiener"
        ))),
    }
}

pub fn parse_shift_kind(s: &str) -> Result<ShiftKind, CliError> {
    ShiftKind::ALL
        .into_iter()
        .find(|k| k.to_string() == s)
        .ok_or_else(|| {
            let names: Vec<String> = ShiftKind::ALL.iter().map(|k| k.to_string()).collect();
            CliError::Config(format!(
                "shift kind '{s}' is not one of {}",
                names.join(", ")
            ))
        })
}

fn parse_f64(field: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{field}: '{s}' is not a number")))
}

/// `a:b` order pair.
pub fn parse_pair(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "order pair '{s}' must look like a:b"
        )));
    }
    Ok((parse_f64("pair", parts[0])?, parse_f64("pair", parts[1])?))
}

/// Comma-separated `a:b` pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(',').map(parse_pair).collect()
}

/// `lo:hi:step` sampled range.
pub fn parse_range(s: &str) -> Result<RangeSpec, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "range '{s}' must look like lo:hi:step"
        )));
    }
    RangeSpec::new(
        parse_f64("range", parts[0])?,
        parse_f64("range", parts[1])?,
        parse_f64("range", parts[2])?,
    )
    .map_err(|e| CliError::Config(e.to_string()))
}

/// Comma-separated `NxT` problem sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>, CliError> {
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split('x').collect();
            let bad = || CliError::Config(format!("size '{item}' must look like NxT"));
            if parts.len() != 2 {
                return Err(bad());
            }
            let n: usize = parts[0].parse().map_err(|_| bad())?;
            let t: usize = parts[1].parse().map_err(|_| bad())?;
            if n == 0 || t == 0 {
                return Err(bad());
            }
            Ok((n, t))
        })
        .collect()
}

/// Comma-separated method tags.
pub fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    s.split(',')
        .map(|tag| {
            let tag = tag.trim();
            Method::from_tag(tag).ok_or_else(|| {
                CliError::Config(format!(
                    "method '{tag}' is not one of JFRFT-search, JFRFT-learn, GFRFT-search, GFRFT-learn"
                ))
            })
        })
        .collect()
}

/// Loads a JSON config file, or the all-unset default when no path is given.
fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

fn require_positive(field: &str, value: usize) -> Result<usize, CliError> {
    if value == 0 {
        return Err(CliError::Config(format!("{field} must be at least 1")));
    }
    Ok(value)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TransformLearnFile {
    alpha: Option<f64>,
    beta: Option<f64>,
    layers: Option<usize>,
    epochs: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    vertices: Option<usize>,
    steps: Option<usize>,
    layer_inits: Option<String>,
    out: Option<PathBuf>,
}

/// Resolved transform-learn parameters.
#[derive(Debug, Clone, Serialize)]
pub struct TransformLearnConfig {
    pub alpha: f64,
    pub beta: f64,
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub vertices: usize,
    pub steps: usize,
    pub layer_inits: Option<Vec<(f64, f64)>>,
    /// Report directory; not serialized, so identical experiments
    /// produce identical reports wherever they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl TransformLearnConfig {
    pub fn resolve(args: &TransformLearnArgs) -> Result<Self, CliError> {
        let file: TransformLearnFile = load_file(args.config.as_deref())?;
        let layer_inits = args
            .layer_inits
            .clone()
            .or(file.layer_inits)
            .map(|s| parse_pairs(&s))
            .transpose()?;
        Ok(Self {
            alpha: args.alpha.or(file.alpha).unwrap_or(0.45),
            beta: args.beta.or(file.beta).unwrap_or(0.55),
            layers: require_positive("layers", args.layers.or(file.layers).unwrap_or(1))?,
            epochs: args.epochs.or(file.epochs).unwrap_or(1200),
            lr: args.lr.or(file.lr).unwrap_or(1e-3),
            seed: args.seed.or(file.seed).unwrap_or(0),
            vertices: require_positive("vertices", args.vertices.or(file.vertices).unwrap_or(20))?,
            steps: require_positive("steps", args.steps.or(file.steps).unwrap_or(6))?,
            layer_inits,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DenoiseSynthFile {
    overlap: Option<usize>,
    sigma: Option<f64>,
    filter: Option<String>,
    epochs: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    vertices: Option<usize>,
    steps: Option<usize>,
    blocks: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    band_vertex: Option<usize>,
    band_time: Option<usize>,
    restarts: Option<usize>,
    out: Option<PathBuf>,
}

/// Resolved denoise-synth parameters.
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseSynthConfig {
    pub overlap: usize,
    pub sigma: f64,
    pub filter: FilterTreatment,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub vertices: usize,
    pub steps: usize,
    pub blocks: usize,
    pub alpha: f64,
    pub beta: f64,
    pub band_vertex: usize,
    pub band_time: usize,
    pub restarts: usize,
    /// Report directory; not serialized, so identical experiments
    /// produce identical reports wherever they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl DenoiseSynthConfig {
    pub fn resolve(args: &DenoiseSynthArgs) -> Result<Self, CliError> {
        let file: DenoiseSynthFile = load_file(args.config.as_deref())?;
        let filter = args.filter.clone().or(file.filter);
        let filter = match filter.as_deref() {
            Some(s) => parse_filter(s)?,
            None => FilterTreatment::Fixed,
        };
        Ok(Self {
            overlap: args.overlap.or(file.overlap).unwrap_or(0),
            sigma: args.sigma.or(file.sigma).unwrap_or(0.2),
            filter,
            epochs: args.epochs.or(file.epochs).unwrap_or(10000),
            lr: args.lr.or(file.lr).unwrap_or(5e-3),
            seed: args.seed.or(file.seed).unwrap_or(0),
            vertices: require_positive("vertices", args.vertices.or(file.vertices).unwrap_or(6))?,
            steps: require_positive("steps", args.steps.or(file.steps).unwrap_or(6))?,
            blocks: require_positive("blocks", args.blocks.or(file.blocks).unwrap_or(6))?,
            alpha: args.alpha.or(file.alpha).unwrap_or(0.55),
            beta: args.beta.or(file.beta).unwrap_or(0.45),
            band_vertex: args.band_vertex.or(file.band_vertex).unwrap_or(4),
            band_time: args.band_time.or(file.band_time).unwrap_or(4),
            restarts: args.restarts.or(file.restarts).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DenoiseFileFile {
    block_len: Option<usize>,
    normalize: Option<bool>,
    edges: Option<PathBuf>,
    shift_kind: Option<String>,
    directed: Option<bool>,
    graph_seed: Option<u64>,
    sigma: Option<f64>,
    overlap: Option<usize>,
    band_vertex: Option<usize>,
    band_time: Option<usize>,
    noise_orders: Option<String>,
    filter: Option<String>,
    epochs: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    expect: Option<String>,
    out: Option<PathBuf>,
}

/// Resolved denoise-file parameters. Band sizes stay optional here because
/// their defaults depend on the loaded signal's dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseFileConfig {
    pub input: PathBuf,
    pub block_len: Option<usize>,
    pub normalize: bool,
    pub edges: Option<PathBuf>,
    pub shift_kind: String,
    pub directed: bool,
    pub graph_seed: u64,
    pub sigma: f64,
    pub overlap: usize,
    pub band_vertex: Option<usize>,
    pub band_time: Option<usize>,
    pub noise_alpha: f64,
    pub noise_beta: f64,
    pub noise_seed: u64,
    pub filter: FilterTreatment,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub expect: Option<(usize, usize)>,
    /// Report directory; not serialized, so identical experiments
    /// produce identical reports wherever they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl DenoiseFileConfig {
    /// Resolution order for the noise parameters: flags, then the config
    /// file, then the sidecar shipped next to the data, then defaults.
    pub fn resolve(args: &DenoiseFileArgs) -> Result<Self, CliError> {
        let file: DenoiseFileFile = load_file(args.config.as_deref())?;
        let sidecar: Option<NoiseSidecar> =
            match &args.sidecar {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Config(format!("cannot read sidecar {}: {e}", path.display()))
                    })?;
                    Some(serde_json::from_str(&text).map_err(|e| {
                        CliError::Config(format!("sidecar {}: {e}", path.display()))
                    })?)
                }
                None => None,
            };
        let sc = sidecar.as_ref();
        let (noise_alpha, noise_beta) = match args.noise_orders.clone().or(file.noise_orders) {
            Some(s) => parse_pair(&s)?,
            None => (0.55, 0.45),
        };
        let seed = args.seed.or(file.seed).unwrap_or(0);
        let shift_kind = args
            .shift_kind
            .clone()
            .or(file.shift_kind)
            .unwrap_or_else(|| "adjacency".into());
        parse_shift_kind(&shift_kind)?;
        let filter = match args.filter.clone().or(file.filter).as_deref() {
            Some(s) => parse_filter(s)?,
            None => FilterTreatment::Fixed,
        };
        let expect = args
            .expect
            .clone()
            .or(file.expect)
            .map(|s| {
                let sizes = parse_sizes(&s)?;
                if sizes.len() != 1 {
                    return Err(CliError::Config(format!(
                        "expect '{s}' must be a single NxC shape"
                    )));
                }
                Ok(sizes[0])
            })
            .transpose()?;
        Ok(Self {
            input: args.input.clone(),
            block_len: args.block_len.or(file.block_len).map(|b| b.max(1)),
            normalize: args.normalize || file.normalize.unwrap_or(false),
            edges: args.edges.clone().or(file.edges),
            shift_kind,
            directed: args.directed || file.directed.unwrap_or(false),
            graph_seed: args.graph_seed.or(file.graph_seed).unwrap_or(0),
            sigma: args
                .sigma
                .or(file.sigma)
                .or(sc.map(|s| s.sigma))
                .unwrap_or(0.2),
            overlap: args
                .overlap
                .or(file.overlap)
                .or(sc.map(|s| s.overlap))
                .unwrap_or(0),
            band_vertex: args
                .band_vertex
                .or(file.band_vertex)
                .or(sc.map(|s| s.k_band)),
            band_time: args.band_time.or(file.band_time).or(sc.map(|s| s.l_band)),
            noise_alpha,
            noise_beta,
            // The noise draw reuses the sidecar's seed when one is given, so
            // a shipped clean/noisy pair reproduces exactly.
            noise_seed: sc.map(|s| s.seed).unwrap_or(seed.wrapping_add(2)),
            filter,
            epochs: args.epochs.or(file.epochs).unwrap_or(10000),
            lr: args.lr.or(file.lr).unwrap_or(5e-3),
            seed,
            expect,
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GridSearchFile {
    alpha_range: Option<String>,
    beta_range: Option<String>,
    policy: Option<String>,
    overlap: Option<usize>,
    sigma: Option<f64>,
    seed: Option<u64>,
    vertices: Option<usize>,
    steps: Option<usize>,
    blocks: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    band_vertex: Option<usize>,
    band_time: Option<usize>,
    out: Option<PathBuf>,
}

/// Resolved grid-search parameters.
#[derive(Debug, Clone, Serialize)]
pub struct GridSearchConfig {
    pub grid: GridSpec,
    pub policy: FilterTreatment,
    pub overlap: usize,
    pub sigma: f64,
    pub seed: u64,
    pub vertices: usize,
    pub steps: usize,
    pub blocks: usize,
    pub alpha: f64,
    pub beta: f64,
    pub band_vertex: usize,
    pub band_time: usize,
    /// Report directory; not serialized, so identical experiments
    /// produce identical reports wherever they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl GridSearchConfig {
    pub fn resolve(args: &GridSearchArgs) -> Result<Self, CliError> {
        let file: GridSearchFile = load_file(args.config.as_deref())?;
        let alpha_range = match args.alpha_range.clone().or(file.alpha_range) {
            Some(s) => parse_range(&s)?,
            None => RangeSpec::new(-2.0, 2.0, 0.01).expect("default range is valid"),
        };
        let beta_range = match args.beta_range.clone().or(file.beta_range) {
            Some(s) => parse_range(&s)?,
            None => RangeSpec::new(-2.0, 2.0, 0.01).expect("default range is valid"),
        };
        let policy = match args.policy.clone().or(file.policy).as_deref() {
            Some(s) => {
                let p = parse_filter(s)?;
                if p == FilterTreatment::Learnable {
                    return Err(CliError::Config(
                        "grid search evaluates fixed or wiener filters; learnable has no per-cell meaning"
                            .into(),
                    ));
                }
                p
            }
            None => FilterTreatment::Wiener,
        };
        Ok(Self {
            grid: GridSpec::new(alpha_range, beta_range),
            policy,
            overlap: args.overlap.or(file.overlap).unwrap_or(0),
            sigma: args.sigma.or(file.sigma).unwrap_or(0.2),
            seed: args.seed.or(file.seed).unwrap_or(0),
            vertices: require_positive("vertices", args.vertices.or(file.vertices).unwrap_or(6))?,
            steps: require_positive("steps", args.steps.or(file.steps).unwrap_or(6))?,
            blocks: require_positive("blocks", args.blocks.or(file.blocks).unwrap_or(6))?,
            alpha: args.alpha.or(file.alpha).unwrap_or(0.55),
            beta: args.beta.or(file.beta).unwrap_or(0.45),
            band_vertex: args.band_vertex.or(file.band_vertex).unwrap_or(4),
            band_time: args.band_time.or(file.band_time).unwrap_or(4),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BenchRuntimeFile {
    sizes: Option<String>,
    methods: Option<String>,
    epochs: Option<usize>,
    lr: Option<f64>,
    step: Option<f64>,
    blocks: Option<usize>,
    sigma: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// Resolved bench-runtime parameters. Methods are stored as their tags so
/// the config serializes to plain strings.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRuntimeConfig {
    pub sizes: Vec<(usize, usize)>,
    pub methods: Vec<String>,
    pub epochs: usize,
    pub lr: f64,
    pub step: f64,
    pub blocks: usize,
    pub sigma: f64,
    pub runs: usize,
    pub seed: u64,
    /// Report directory; not serialized, so identical experiments
    /// produce identical reports wherever they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl BenchRuntimeConfig {
    pub fn resolve(args: &BenchRuntimeArgs) -> Result<Self, CliError> {
        let file: BenchRuntimeFile = load_file(args.config.as_deref())?;
        let sizes = match args.sizes.clone().or(file.sizes) {
            Some(s) => parse_sizes(&s)?,
            None => vec![(10, 10), (15, 15), (20, 20)],
        };
        let methods = match args.methods.clone().or(file.methods) {
            Some(s) => parse_methods(&s)?,
            None => vec![
                Method::JfrftSearch,
                Method::JfrftLearn,
                Method::GfrftSearch,
                Method::GfrftLearn,
            ],
        };
        let step = args.step.or(file.step).unwrap_or(0.1);
        if !(step > 0.0) {
            return Err(CliError::Config(format!("step {step} must be positive")));
        }
        Ok(Self {
            sizes,
            methods: methods.iter().map(|m| m.tag().to_string()).collect(),
            epochs: args.epochs.or(file.epochs).unwrap_or(1200),
            lr: args.lr.or(file.lr).unwrap_or(1e-3),
            step,
            blocks: require_positive("blocks", args.blocks.or(file.blocks).unwrap_or(2))?,
            sigma: args.sigma.or(file.sigma).unwrap_or(0.3),
            runs: require_positive("runs", args.runs.or(file.runs).unwrap_or(3))?,
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| "out".into()),
        })
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods
            .iter()
            .map(|tag| Method::from_tag(tag).expect("tags were validated at resolution"))
            .collect()
    }
}
