//! Dense complex linear algebra kernels shared by the whole transform stack.
//!
//! Graph spectra, fractional powers, and Wiener solves all funnel through the
//! few routines here, so ordering, normalization, and failure behavior get
//! decided in exactly one place. LAPACK does the heavy lifting through
//! `ndarray-linalg`; the wrappers add the guarantees the rest of the crate
//! leans on:
//!
//! * eigenvector phase is canonicalized (the first significant component of
//!   each vector is rotated onto the positive real axis), so repeated runs
//!   produce identical factorizations,
//! * near-defective eigenvector bases are rejected up front instead of
//!   silently amplifying roundoff in later fractional powers,
//! * `vec`/`unvec` pin down the column-stacking convention used everywhere.
//!
//! Matrices are `ndarray` arrays in their default row-major layout.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Factorize, Solve, SVD, UPLO};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix (row-major).
pub type CMat = Array2<Complex64>;
/// Dense complex vector.
pub type CVec = Array1<Complex64>;

/// Relative residual `||m v - lambda v|| <= tol * ||m||_F` required of every
/// eigenpair returned by [`eig_decompose`].
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;
/// Eigenvector-basis condition number above which the input is treated as
/// defective and rejected.
pub const NEAR_DEFECTIVE_COND: f64 = 1e10;
/// Reciprocal condition number (smallest over largest singular value) below
/// which [`solve_linear`] refuses to solve.
pub const SINGULAR_RCOND: f64 = 1e-14;
/// Hard cap on the number of elements a [`kron`] result may hold.
pub const KRON_ELEMENT_CAP: u128 = 1 << 26;

#[derive(Debug, Error)]
pub enum NumKitError {
    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),
    #[error("eigenvector basis is near defective (cond {cond:.3e} exceeds 1e10)")]
    NearDefective { cond: f64 },
    #[error("matrix is singular to working precision (rcond {rcond:.3e})")]
    Singular { rcond: f64 },
    #[error("result would hold {elements} elements, over the 2^26 cap")]
    DimensionOverflow { elements: u128 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Eigendecomposition `m = vectors * diag(values) * vectors^-1` with a
/// phase-canonical, residual-checked eigenvector basis.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Eigenvalues, in the order LAPACK produced them (callers that need a
    /// specific order sort the pairs themselves).
    pub values: CVec,
    /// Unit-norm eigenvectors as columns, phases canonicalized.
    pub vectors: CMat,
    /// 2-norm condition number of the eigenvector matrix.
    pub cond_v: f64,
}

/// Rejects matrices containing NaN or infinite entries.
pub fn ensure_finite(m: &CMat) -> Result<(), NumKitError> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(NumKitError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Complex identity matrix of size `n`.
pub fn identity(n: usize) -> CMat {
    Array2::eye(n).mapv(|v: f64| Complex64::new(v, 0.0))
}

/// Conjugate transpose.
pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|v| v.conj())
}

/// Frobenius norm.
pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance `||a - b||_F`.
pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `m * diag(d)`: scales column `j` by `d[j]`.
pub fn scale_columns(m: &CMat, d: &CVec) -> CMat {
    debug_assert_eq!(m.ncols(), d.len());
    let mut out = m.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let s = d[j];
        col.map_inplace(|v| *v *= s);
    }
    out
}

/// Column-stacks an `n x t` matrix into a length `n*t` vector: column 0
/// first, then column 1, and so on.
pub fn vec_stack(x: &CMat) -> CVec {
    let (n, t) = x.dim();
    let mut out = Array1::zeros(n * t);
    for c in 0..t {
        for r in 0..n {
            out[c * n + r] = x[[r, c]];
        }
    }
    out
}

/// Inverse of [`vec_stack`]: reshapes a length `n*t` vector back into an
/// `n x t` matrix, column by column.
pub fn unvec(v: &CVec, n: usize, t: usize) -> Result<CMat, NumKitError> {
    if v.len() != n * t {
        return Err(NumKitError::ShapeMismatch(format!(
            "cannot reshape length {} into {} x {}",
            v.len(),
            n,
            t
        )));
    }
    let mut out = Array2::zeros((n, t));
    for c in 0..t {
        for r in 0..n {
            out[[r, c]] = v[c * n + r];
        }
    }
    Ok(out)
}

/// Kronecker product `a (x) b`, capped at [`KRON_ELEMENT_CAP`] elements.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat, NumKitError> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let elements = (ar as u128) * (ac as u128) * (br as u128) * (bc as u128);
    if elements > KRON_ELEMENT_CAP {
        return Err(NumKitError::DimensionOverflow { elements });
    }
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.assign(b);
            block.map_inplace(|v| *v *= aij);
        }
    }
    Ok(out)
}

fn require_square(m: &CMat) -> Result<usize, NumKitError> {
    let (r, c) = m.dim();
    if r != c {
        return Err(NumKitError::ShapeMismatch(format!(
            "expected a square matrix, got {} x {}",
            r, c
        )));
    }
    Ok(r)
}

/// Rotates each column so its first significant component (relative magnitude
/// above 1e-8) lies on the positive real axis. Unit norms are preserved.
fn canonicalize_phases(vectors: &mut CMat) {
    let (rows, cols) = vectors.dim();
    for j in 0..cols {
        let mut max_abs = 0.0f64;
        for i in 0..rows {
            max_abs = max_abs.max(vectors[[i, j]].norm());
        }
        if max_abs == 0.0 {
            continue;
        }
        let mut phase = None;
        for i in 0..rows {
            let v = vectors[[i, j]];
            if v.norm() > 1e-8 * max_abs {
                phase = Some(v / v.norm());
                break;
            }
        }
        if let Some(p) = phase {
            let rot = p.conj();
            for i in 0..rows {
                vectors[[i, j]] *= rot;
            }
        }
    }
}

fn svd_cond(m: &CMat) -> Result<f64, NumKitError> {
    let (_, sigma, _) = m
        .svd(false, false)
        .map_err(|e| NumKitError::NonConvergence(format!("svd failed: {e}")))?;
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = m[[i, j]] - m[[j, i]].conj();
            dev += d.norm_sqr();
            if i != j {
                let d2 = m[[j, i]] - m[[i, j]].conj();
                dev += d2.norm_sqr();
            }
        }
    }
    dev.sqrt()
}

/// Diagonalizes a square complex matrix.
///
/// Hermitian inputs (deviation below `1e-12 * ||m||_F`) take the symmetric
/// eigensolver path, which keeps eigenvectors orthonormal even across
/// repeated eigenvalues; everything else goes through the general solver.
/// Either way the result satisfies, for every pair `(lambda_k, v_k)`,
/// `||m v_k - lambda_k v_k||_2 <= EIG_RESIDUAL_TOL * ||m||_F`, and the
/// eigenvector basis passes the [`NEAR_DEFECTIVE_COND`] gate.
pub fn eig_decompose(m: &CMat) -> Result<EigResult, NumKitError> {
    let n = require_square(m)?;
    ensure_finite(m)?;
    if n == 0 {
        return Err(NumKitError::ShapeMismatch("empty matrix".into()));
    }
    let norm = frob_norm(m);

    let (values, mut vectors) = if hermitian_deviation(m) <= 1e-12 * norm {
        let (vals, vecs) = m
            .eigh(UPLO::Lower)
            .map_err(|e| NumKitError::NonConvergence(format!("eigh failed: {e}")))?;
        (vals.mapv(|v| Complex64::new(v, 0.0)), vecs)
    } else {
        m.eig()
            .map_err(|e| NumKitError::NonConvergence(format!("eig failed: {e}")))?
    };

    canonicalize_phases(&mut vectors);

    let cond_v = svd_cond(&vectors)?;
    if !cond_v.is_finite() || cond_v > NEAR_DEFECTIVE_COND {
        return Err(NumKitError::NearDefective { cond: cond_v });
    }

    // Residual check: one matrix product covers every eigenpair at once.
    let mv = m.dot(&vectors);
    let vd = scale_columns(&vectors, &values);
    for k in 0..n {
        let mut res = 0.0f64;
        for i in 0..n {
            res += (mv[[i, k]] - vd[[i, k]]).norm_sqr();
        }
        if res.sqrt() > EIG_RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(NumKitError::NonConvergence(format!(
                "eigenpair {k} residual {:.3e} exceeds tolerance",
                res.sqrt()
            )));
        }
    }

    Ok(EigResult {
        values,
        vectors,
        cond_v,
    })
}

/// Solves `a x = b` for a matrix right-hand side by LU factorization,
/// refusing inputs whose reciprocal condition number (from the SVD) falls
/// below [`SINGULAR_RCOND`].
pub fn solve_linear(a: &CMat, b: &CMat) -> Result<CMat, NumKitError> {
    let n = require_square(a)?;
    ensure_finite(a)?;
    ensure_finite(b)?;
    if b.nrows() != n {
        return Err(NumKitError::ShapeMismatch(format!(
            "lhs is {n} x {n} but rhs has {} rows",
            b.nrows()
        )));
    }
    let (_, sigma, _) = a
        .svd(false, false)
        .map_err(|e| NumKitError::NonConvergence(format!("svd failed: {e}")))?;
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond > SINGULAR_RCOND) {
        return Err(NumKitError::Singular { rcond });
    }

    let lu = a
        .factorize()
        .map_err(|e| NumKitError::NonConvergence(format!("lu factorization failed: {e}")))?;
    let mut out = Array2::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let x = lu
            .solve(&col.to_owned())
            .map_err(|e| NumKitError::NonConvergence(format!("lu solve failed: {e}")))?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Matrix inverse via [`solve_linear`] against the identity.
pub fn inv(a: &CMat) -> Result<CMat, NumKitError> {
    let n = require_square(a)?;
    solve_linear(a, &identity(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmat(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_eig_is_trivial() {
        let r = eig_decompose(&identity(4)).unwrap();
        for v in r.values.iter() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(r.cond_v < 1.0 + 1e-10);
    }

    #[test]
    fn cycle_graph_adjacency_spectrum() {
        // 4-cycle adjacency; eigenvalues are 2 cos(2 pi k / 4) = {2, 0, 0, -2}.
        let z = array![
            [c(0., 0.), c(1., 0.), c(0., 0.), c(1., 0.)],
            [c(1., 0.), c(0., 0.), c(1., 0.), c(0., 0.)],
            [c(0., 0.), c(1., 0.), c(0., 0.), c(1., 0.)],
            [c(1., 0.), c(0., 0.), c(1., 0.), c(0., 0.)],
        ];
        let r = eig_decompose(&z).unwrap();
        let mut got: Vec<f64> = r.values.iter().map(|v| v.re).collect();
        got.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expected = [2.0, 0.0, 0.0, -2.0];
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12, "got {got:?}");
        }
        for v in r.values.iter() {
            assert!(v.im.abs() < 1e-12);
        }
        // Symmetric input takes the orthonormal path even with the repeated 0.
        let vvh = r.vectors.dot(&adjoint(&r.vectors));
        assert!(frob_dist(&vvh, &identity(4)) < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_complex_matrix() {
        let m = random_cmat(5, 7);
        let r = eig_decompose(&m).unwrap();
        let vinv = inv(&r.vectors).unwrap();
        let rebuilt = scale_columns(&r.vectors, &r.values).dot(&vinv);
        assert!(frob_dist(&rebuilt, &m) <= 1e-10 * frob_norm(&m));
    }

    #[test]
    fn eig_phase_is_canonical() {
        let m = random_cmat(6, 11);
        let r = eig_decompose(&m).unwrap();
        for col in r.vectors.columns() {
            let max_abs = col.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            let first = col.iter().find(|v| v.norm() > 1e-8 * max_abs).unwrap();
            assert!(first.im.abs() < 1e-12 * max_abs);
            assert!(first.re > 0.0);
        }
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let m = array![[c(1., 0.), c(1., 0.)], [c(0., 0.), c(1., 0.)]];
        match eig_decompose(&m) {
            Err(NumKitError::NearDefective { .. }) => {}
            other => panic!("expected NearDefective, got {other:?}"),
        }
    }

    #[test]
    fn nonfinite_entries_are_rejected() {
        let mut m = identity(3);
        m[[1, 2]] = c(f64::NAN, 0.0);
        assert!(matches!(
            eig_decompose(&m),
            Err(NumKitError::NonFinite { row: 1, col: 2 })
        ));
    }

    #[test]
    fn nonsquare_is_rejected() {
        let m: CMat = Array2::zeros((2, 3));
        assert!(matches!(
            eig_decompose(&m),
            Err(NumKitError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = random_cmat(4, 3);
        let x = random_cmat(4, 19);
        let b = a.dot(&x);
        let got = solve_linear(&a, &b).unwrap();
        assert!(frob_dist(&got, &x) <= 1e-10 * frob_norm(&x));
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = array![[c(1., 0.), c(1., 0.)], [c(1., 0.), c(1., 0.)]];
        let b = identity(2);
        assert!(matches!(
            solve_linear(&a, &b),
            Err(NumKitError::Singular { .. })
        ));
    }

    #[test]
    fn kron_matches_hand_expansion() {
        let a = array![[c(1., 0.), c(2., 0.)], [c(3., 0.), c(4., 0.)]];
        let b = array![[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]];
        let k = kron(&a, &b).unwrap();
        let expected = array![
            [c(0., 0.), c(1., 0.), c(0., 0.), c(2., 0.)],
            [c(1., 0.), c(0., 0.), c(2., 0.), c(0., 0.)],
            [c(0., 0.), c(3., 0.), c(0., 0.), c(4., 0.)],
            [c(3., 0.), c(0., 0.), c(4., 0.), c(0., 0.)],
        ];
        assert!(frob_dist(&k, &expected) < 1e-15);
    }

    #[test]
    fn kron_mixed_product_property() {
        let a = random_cmat(3, 21);
        let b = random_cmat(2, 22);
        let cm = random_cmat(3, 23);
        let d = random_cmat(2, 24);
        let lhs = kron(&a, &b).unwrap().dot(&kron(&cm, &d).unwrap());
        let rhs = kron(&a.dot(&cm), &b.dot(&d)).unwrap();
        assert!(frob_dist(&lhs, &rhs) <= 1e-12 * frob_norm(&rhs));
    }

    #[test]
    fn kron_size_cap_is_enforced() {
        let a: CMat = Array2::zeros((1 << 13, 1));
        let b: CMat = Array2::zeros((1 << 14, 1));
        assert!(matches!(
            kron(&a, &b),
            Err(NumKitError::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn vec_stack_is_column_major() {
        let m = array![[c(1., 0.), c(3., 0.)], [c(2., 0.), c(4., 0.)]];
        let v = vec_stack(&m);
        for (i, expected) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            assert_eq!(v[i], c(*expected, 0.0));
        }
        let back = unvec(&v, 2, 2).unwrap();
        assert!(frob_dist(&back, &m) == 0.0);
    }

    #[test]
    fn unvec_rejects_bad_length() {
        let v: CVec = Array1::zeros(5);
        assert!(matches!(
            unvec(&v, 2, 3),
            Err(NumKitError::ShapeMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Any matrix that passes the defectiveness gate must reconstruct and
        // satisfy the per-pair residual bound.
        #[test]
        fn eig_invariants_hold_on_random_inputs(seed in 0u64..1_000, n in 2usize..7) {
            let m = random_cmat(n, seed);
            let r = match eig_decompose(&m) {
                Ok(r) => r,
                // Randomly drawn near-defective inputs are legitimately refused.
                Err(NumKitError::NearDefective { .. }) => return Ok(()),
                Err(e) => panic!("unexpected failure: {e}"),
            };
            prop_assert!(r.cond_v <= NEAR_DEFECTIVE_COND);
            let vinv = inv(&r.vectors).unwrap();
            let rebuilt = scale_columns(&r.vectors, &r.values).dot(&vinv);
            prop_assert!(frob_dist(&rebuilt, &m) <= 1e-8 * frob_norm(&m));
        }

        #[test]
        fn vec_unvec_roundtrip(seed in 0u64..1_000, n in 1usize..6, t in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m: CMat = Array2::from_shape_fn((n, t), |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let back = unvec(&vec_stack(&m), n, t).unwrap();
            prop_assert!(frob_dist(&back, &m) == 0.0);
        }
    }
}
