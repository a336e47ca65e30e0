//! The joint time-vertex fractional transform `F_J = F^beta (x) F_G^alpha`.
//!
//! A [`JointTransform`] pairs a graph-axis and a time-axis fractional
//! operator with a concrete order pair `(alpha, beta)`. Construction
//! materializes the two small fractional powers once; application to an
//! `N x T` block is then the two-sided product `F_G^alpha X (F^beta)^T`,
//! which equals the Kronecker operator acting on the column-stacked signal.
//! Training loops rebuild transforms every epoch, so construction stays
//! cheap: two diagonal scalings and two small matrix products per axis.
//!
//! The dense `NT x NT` operator (needed by the Wiener solver) and the dense
//! order partials (needed by gradient checks) are assembled on demand and
//! inherit the element cap from `numkit::kron`.

use crate::fracops::FractionalOperator;
use crate::numkit::{self, CMat, CVec, NumKitError};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JointError {
    #[error("expected an {expected_rows} x {expected_cols} signal block, got {rows} x {cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    NumKit(#[from] NumKitError),
}

/// A joint transform at a fixed order pair, sharing its axis operators.
#[derive(Debug, Clone)]
pub struct JointTransform {
    alpha: f64,
    beta: f64,
    graph_op: Arc<FractionalOperator>,
    time_op: Arc<FractionalOperator>,
    g_pow: CMat,
    t_pow: CMat,
}

impl JointTransform {
    pub fn new(
        graph_op: Arc<FractionalOperator>,
        time_op: Arc<FractionalOperator>,
        alpha: f64,
        beta: f64,
    ) -> Self {
        let g_pow = graph_op.frac_power(alpha);
        let t_pow = time_op.frac_power(beta);
        Self {
            alpha,
            beta,
            graph_op,
            time_op,
            g_pow,
            t_pow,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Vertex count of a compatible signal block.
    pub fn n(&self) -> usize {
        self.graph_op.size()
    }

    /// Time length of a compatible signal block.
    pub fn t(&self) -> usize {
        self.time_op.size()
    }

    /// Materialized `F_G^alpha`.
    pub fn graph_power(&self) -> &CMat {
        &self.g_pow
    }

    /// Materialized `F^beta`.
    pub fn time_power(&self) -> &CMat {
        &self.t_pow
    }

    pub fn graph_op(&self) -> &Arc<FractionalOperator> {
        &self.graph_op
    }

    pub fn time_op(&self) -> &Arc<FractionalOperator> {
        &self.time_op
    }

    /// The transform at `(-alpha, -beta)`, which inverts this one.
    pub fn inverse(&self) -> JointTransform {
        JointTransform::new(
            Arc::clone(&self.graph_op),
            Arc::clone(&self.time_op),
            -self.alpha,
            -self.beta,
        )
    }

    /// Dense `NT x NT` operator `F^beta (x) F_G^alpha`.
    pub fn assemble(&self) -> Result<CMat, NumKitError> {
        numkit::kron(&self.t_pow, &self.g_pow)
    }

    /// Matrix-free application `F_G^alpha X (F^beta)^T` to one block.
    pub fn apply(&self, x: &CMat) -> Result<CMat, JointError> {
        let (rows, cols) = x.dim();
        if rows != self.n() || cols != self.t() {
            return Err(JointError::ShapeMismatch {
                expected_rows: self.n(),
                expected_cols: self.t(),
                rows,
                cols,
            });
        }
        Ok(self.g_pow.dot(x).dot(&self.t_pow.t()))
    }

    /// Application to a column-stacked block vector of length `N*T`.
    pub fn apply_vec(&self, v: &CVec) -> Result<CVec, JointError> {
        let x = numkit::unvec(v, self.n(), self.t())?;
        Ok(numkit::vec_stack(&self.apply(&x)?))
    }

    /// Dense order partials `(dF_J/dalpha, dF_J/dbeta)`:
    /// `(F^beta (x) T~ F_G^alpha, T. F^beta (x) F_G^alpha)`.
    pub fn partials(&self) -> Result<(CMat, CMat), NumKitError> {
        let dg = self.graph_op.frac_derivative(self.alpha);
        let dt = self.time_op.frac_derivative(self.beta);
        let d_alpha = numkit::kron(&self.t_pow, &dg)?;
        let d_beta = numkit::kron(&dt, &self.g_pow)?;
        Ok((d_alpha, d_beta))
    }
}
