//! Built-in invariant checks: one ok/FAIL line per check on stdout. Any
//! failure turns into a numerical-failure exit code. The checks are small
//! seeded instances of the same invariants the library's test suite covers,
//! so a built binary can vouch for itself on the machine it runs on.

use crate::{CliError, SelftestArgs};
use jfrft::filtering::{snr_db, wiener_solve, DiagonalFilter, FilterMode, WienerObservations};
use jfrft::fracops::{make_time_fracop, make_unitary_fracop};
use jfrft::joint::JointTransform;
use jfrft::learn::order_gradients;
use jfrft::numkit::{self, CMat, CVec};
use jfrft::signals::{load_timeseries_csv, save_timeseries_csv, TimeVertexSignal};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const N: usize = 5;
const T: usize = 4;

fn random_signal(n: usize, t: usize, rng: &mut ChaCha8Rng) -> CMat {
    Array2::from_shape_fn((n, t), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn rel_err(got: &CMat, want: &CMat) -> f64 {
    numkit::frob_dist(got, want) / numkit::frob_norm(want).max(1e-300)
}

fn ops(
    seed: u64,
) -> Result<
    (
        Arc<jfrft::fracops::FractionalOperator>,
        Arc<jfrft::fracops::FractionalOperator>,
    ),
    String,
> {
    let gop = make_unitary_fracop(N, seed).map_err(|e| e.to_string())?;
    let top = make_time_fracop(T).map_err(|e| e.to_string())?;
    Ok((Arc::new(gop), Arc::new(top)))
}

fn chk_identity(seed: u64) -> Result<(), String> {
    let (gop, top) = ops(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1d);
    let x = random_signal(N, T, &mut rng);
    let jt = JointTransform::new(gop, top, 0.0, 0.0);
    let y = jt.apply(&x).map_err(|e| e.to_string())?;
    let err = rel_err(&y, &x);
    if err > 1e-10 {
        return Err(format!(
            "zero-order transform moved the signal by {err:.2e}"
        ));
    }
    Ok(())
}

fn chk_additivity(seed: u64) -> Result<(), String> {
    let (gop, top) = ops(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2d);
    let x = random_signal(N, T, &mut rng);
    for _ in 0..5 {
        let (a1, b1) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (a2, b2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let step1 = JointTransform::new(gop.clone(), top.clone(), a1, b1);
        let step2 = JointTransform::new(gop.clone(), top.clone(), a2, b2);
        let sum = JointTransform::new(gop.clone(), top.clone(), a1 + a2, b1 + b2);
        let chained = step2
            .apply(&step1.apply(&x).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let direct = sum.apply(&x).map_err(|e| e.to_string())?;
        let err = rel_err(&chained, &direct);
        if err > 1e-8 {
            return Err(format!(
                "composing ({a1:.3}, {b1:.3}) then ({a2:.3}, {b2:.3}) differs from the sum by {err:.2e}"
            ));
        }
    }
    Ok(())
}

fn chk_reversibility(seed: u64) -> Result<(), String> {
    let (gop, top) = ops(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3d);
    let x = random_signal(N, T, &mut rng);
    for _ in 0..5 {
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let jt = JointTransform::new(gop.clone(), top.clone(), a, b);
        let back = jt
            .inverse()
            .apply(&jt.apply(&x).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let err = rel_err(&back, &x);
        if err > 1e-8 {
            return Err(format!(
                "orders ({a:.3}, {b:.3}) round-trip error {err:.2e}"
            ));
        }
    }
    Ok(())
}

fn chk_vec_compat(seed: u64) -> Result<(), String> {
    let (gop, top) = ops(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d);
    let x = random_signal(N, T, &mut rng);
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let jt = JointTransform::new(gop, top, a, b);
    let two_sided = numkit::vec_stack(&jt.apply(&x).map_err(|e| e.to_string())?);
    let assembled = jt.assemble().map_err(|e| e.to_string())?;
    let stacked = assembled.dot(&numkit::vec_stack(&x));
    let num = (&two_sided - &stacked)
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = stacked.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let err = num / den.max(1e-300);
    if err > 1e-10 {
        return Err(format!(
            "matrix-free and assembled applications differ by {err:.2e}"
        ));
    }
    Ok(())
}

fn chk_time_unitarity(seed: u64) -> Result<(), String> {
    let top = make_time_fracop(T).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5d);
    let eye = numkit::identity(T);
    for _ in 0..5 {
        let b: f64 = rng.gen_range(-2.0..2.0);
        let pow = top.frac_power(b);
        let prod = pow.dot(&numkit::adjoint(&pow));
        let err = numkit::frob_dist(&prod, &eye);
        if err > 1e-8 {
            return Err(format!(
                "time power at order {b:.3} departs unitarity by {err:.2e}"
            ));
        }
    }
    Ok(())
}

fn chk_gradients(seed: u64) -> Result<(), String> {
    let (gop, top) = ops(seed.wrapping_add(7))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d);
    let x = random_signal(N, T, &mut rng);
    let y = random_signal(N, T, &mut rng);
    let (xv, yv) = (numkit::vec_stack(&x), numkit::vec_stack(&y));
    let (a, b) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    let h = DiagonalFilter {
        coeffs: CVec::from_shape_fn(N * T, |_| {
            Complex64::new(rng.gen_range(0.2..1.0), rng.gen_range(-0.5..0.5))
        }),
        mode: FilterMode::Learnable,
    };
    let loss_at = |alpha: f64, beta: f64| -> Result<f64, String> {
        let jt = JointTransform::new(gop.clone(), top.clone(), alpha, beta);
        Ok(order_gradients(&jt, &h, &yv, &xv)
            .map_err(|e| e.to_string())?
            .loss)
    };
    let jt = JointTransform::new(gop.clone(), top.clone(), a, b);
    let grads = order_gradients(&jt, &h, &yv, &xv).map_err(|e| e.to_string())?;
    let step = 1e-6;
    let fd_alpha = (loss_at(a + step, b)? - loss_at(a - step, b)?) / (2.0 * step);
    let fd_beta = (loss_at(a, b + step)? - loss_at(a, b - step)?) / (2.0 * step);
    for (name, got, want) in [
        ("alpha", grads.d_alpha, fd_alpha),
        ("beta", grads.d_beta, fd_beta),
    ] {
        let err = (got - want).abs() / want.abs().max(1e-8);
        if err > 1e-5 {
            return Err(format!(
                "{name} gradient {got:.6e} vs finite difference {want:.6e} (relative {err:.2e})"
            ));
        }
    }
    Ok(())
}

fn chk_wiener_optimality(seed: u64) -> Result<(), String> {
    let gop = Arc::new(make_unitary_fracop(2, seed.wrapping_add(3)).map_err(|e| e.to_string())?);
    let top = Arc::new(make_time_fracop(2).map_err(|e| e.to_string())?);
    let jt = JointTransform::new(gop, top, 0.7, -0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7d);
    let clean: Vec<CVec> = (0..6)
        .map(|_| numkit::vec_stack(&random_signal(2, 2, &mut rng)))
        .collect();
    let noisy: Vec<CVec> = clean
        .iter()
        .map(|x| {
            x + &CVec::from_shape_fn(4, |_| {
                Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
            })
        })
        .collect();
    let h = wiener_solve(
        &jt,
        WienerObservations::Empirical {
            clean: &clean,
            noisy: &noisy,
        },
    )
    .map_err(|e| e.to_string())?;
    let fwd = jt.assemble().map_err(|e| e.to_string())?;
    let inv = jt.inverse().assemble().map_err(|e| e.to_string())?;
    let mse = |coeffs: &CVec| -> f64 {
        let mut total = 0.0;
        for (x, y) in clean.iter().zip(&noisy) {
            let spectrum = fwd.dot(y);
            let filtered: CVec = &spectrum * coeffs;
            let est = inv.dot(&filtered);
            total += (&est - x).iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        total / clean.len() as f64
    };
    let base = mse(&h.coeffs);
    for _ in 0..10 {
        let mut delta = CVec::from_shape_fn(4, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let norm = delta.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        delta.mapv_inplace(|v| v * Complex64::new(1e-3 / norm, 0.0));
        let perturbed = mse(&(&h.coeffs + &delta));
        if perturbed < base - 1e-9 {
            return Err(format!(
                "perturbed filter beats the solve: {perturbed:.9e} < {base:.9e}"
            ));
        }
    }
    Ok(())
}

fn chk_csv_roundtrip(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8d);
    let data = random_signal(6, 8, &mut rng);
    let signal = TimeVertexSignal::new(data, 4).map_err(|e| e.to_string())?;
    let path = std::env::temp_dir().join(format!("jfrft-selftest-{}.csv", std::process::id()));
    let outcome = (|| -> Result<(), String> {
        save_timeseries_csv(&path, &signal).map_err(|e| e.to_string())?;
        let back = load_timeseries_csv(&path, 4, Some((6, 8)), false).map_err(|e| e.to_string())?;
        for (got, want) in back.data().iter().zip(signal.data().iter()) {
            if got.re.to_bits() != want.re.to_bits() || got.im.to_bits() != want.im.to_bits() {
                return Err(format!("entry {want} came back as {got}"));
            }
        }
        Ok(())
    })();
    let _ = std::fs::remove_file(&path);
    outcome
}

fn chk_denoise_sanity(seed: u64) -> Result<(), String> {
    // Noise-free filtering with the all-pass chain must reproduce the input.
    let (gop, top) = ops(seed.wrapping_add(11))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9d);
    let data = random_signal(N, 2 * T, &mut rng);
    let x = TimeVertexSignal::new(data, T).map_err(|e| e.to_string())?;
    let jt = JointTransform::new(gop, top, 0.55, 0.45);
    let h = DiagonalFilter::all_ones(N * T, FilterMode::Fixed);
    let chain = jfrft::filtering::FilterChain::new(&jt, &h).map_err(|e| e.to_string())?;
    let est = chain.apply_signal(&x).map_err(|e| e.to_string())?;
    let snr = snr_db(&x, &est).map_err(|e| e.to_string())?;
    if snr < 200.0 {
        return Err(format!("all-pass chain lost signal: {snr:.2} dB"));
    }
    Ok(())
}

type Check = fn(u64) -> Result<(), String>;

pub fn run(args: &SelftestArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(0);
    let checks: [(&str, Check); 9] = [
        ("zero orders give the identity", chk_identity),
        ("orders add under composition", chk_additivity),
        ("inverse orders undo the transform", chk_reversibility),
        (
            "matrix-free application matches the assembled operator",
            chk_vec_compat,
        ),
        (
            "the time transform is unitary at every order",
            chk_time_unitarity,
        ),
        (
            "closed-form gradients match finite differences",
            chk_gradients,
        ),
        ("the wiener solve is a local optimum", chk_wiener_optimality),
        ("signal CSV round-trips bit-exactly", chk_csv_roundtrip),
        ("the all-pass filter chain is lossless", chk_denoise_sanity),
    ];
    let mut failures = 0usize;
    for (name, check) in checks {
        match check(seed) {
            Ok(()) => println!("ok - {name}"),
            Err(why) => {
                failures += 1;
                println!("FAIL - {name}: {why}");
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} selftest check(s) failed"
        )));
    }
    println!("selftest: {} checks passed", checks.len());
    Ok(())
}
