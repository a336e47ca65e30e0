//! Regenerates the bundled synthetic dataset: a 10-vertex signal over 60
//! time steps (10 blocks of 6), band-limited on the leading 6 x 4 spectral
//! corner of the joint transform at orders (0.55, 0.45), plus a noise
//! sidecar describing a disjoint trailing-corner contamination. The graph
//! operator is the seeded unitary construction, so the denoise-file command
//! rebuilds it from the seed alone.
//!
//! Usage: cargo run --example make_synthetic_data [-- OUT_DIR]

use jfrft::fracops::{make_time_fracop, make_unitary_fracop};
use jfrft::joint::JointTransform;
use jfrft::signals::{
    gen_bandlimited, load_timeseries_csv, save_timeseries_csv, BandSpec, NoiseSidecar,
};
use std::path::PathBuf;
use std::sync::Arc;

const GRAPH_SEED: u64 = 9001;
const SIGNAL_SEED: u64 = 9002;
const NOISE_SEED: u64 = 9003;

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data".into())
        .into();
    std::fs::create_dir_all(&out).expect("output directory");

    let (n, t, m) = (10, 6, 10);
    let gop = Arc::new(make_unitary_fracop(n, GRAPH_SEED).unwrap());
    let top = Arc::new(make_time_fracop(t).unwrap());
    let jt = JointTransform::new(gop, top, 0.55, 0.45);
    let band = BandSpec::new(6, 4, n, t).unwrap();
    let x = gen_bandlimited(&jt, &band, m, SIGNAL_SEED).unwrap();

    let csv = out.join("synthetic_10x60.csv");
    save_timeseries_csv(&csv, &x).unwrap();

    // The saved text must reproduce the generated values exactly.
    let back = load_timeseries_csv(&csv, t, Some((n, m * t)), false).unwrap();
    for (got, want) in back.data().iter().zip(x.data().iter()) {
        assert_eq!(got.re.to_bits(), want.re.to_bits());
        assert_eq!(got.im.to_bits(), want.im.to_bits());
    }

    let sidecar = NoiseSidecar {
        sigma: 0.2,
        overlap: 0,
        k_band: band.k_band,
        l_band: band.l_band,
        seed: NOISE_SEED,
    };
    let sidecar_path = out.join("synthetic_10x60.noise.json");
    let text = serde_json::to_string_pretty(&sidecar).unwrap();
    std::fs::write(&sidecar_path, format!("{text}\n")).unwrap();

    println!("wrote {} ({n} vertices x {} columns)", csv.display(), m * t);
    println!("wrote {}", sidecar_path.display());
    println!("graph operator: unitary construction with seed {GRAPH_SEED}");
}
