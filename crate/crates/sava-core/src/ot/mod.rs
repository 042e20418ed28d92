//! Discrete optimal transport: entropic solver with dual potentials, an exact
//! small-instance solver, plan recovery, calibrated gradients, and the
//! consistency diagnostic for batched gradient differences.

mod calibrate;
mod consistency;
mod exact;
mod sinkhorn;

pub use calibrate::calibrated_gradient;
pub use consistency::{
    score_difference_residual, shared_support_column, ConsistencyContext, PairGradientContext,
};
pub use exact::{exact_ot, exact_ot_with_cap, ExactSolution, DEFAULT_ORACLE_CAP};
pub use sinkhorn::{sinkhorn, SinkhornOptions, SinkhornResult};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::Float;

/// Dense nonnegative ground-cost matrix with provenance tags.
#[derive(Debug, Clone)]
pub struct CostMatrix<F: Float> {
    values: Array2<F>,
    row_tag: String,
    col_tag: String,
}

impl<F: Float> CostMatrix<F> {
    /// Validates finiteness and nonnegativity of every entry.
    pub fn new(values: Array2<F>, row_tag: &str, col_tag: &str) -> Result<Self> {
        for &v in values.iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteIntermediate("cost matrix entry"));
            }
            if v < F::zero() {
                return Err(Error::InvalidConfig(format!(
                    "cost matrix ({row_tag} x {col_tag}) has a negative entry"
                )));
            }
        }
        Ok(Self {
            values,
            row_tag: row_tag.to_string(),
            col_tag: col_tag.to_string(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, F> {
        self.values.view()
    }

    pub fn row_tag(&self) -> &str {
        &self.row_tag
    }

    pub fn col_tag(&self) -> &str {
        &self.col_tag
    }

    /// Mean entry; the reference scale for the regularization policy.
    pub fn mean(&self) -> F {
        let total: F = self.values.iter().copied().sum();
        total / F::cast((self.n() * self.m()) as f64)
    }

    /// Contiguous row-major entries.
    pub(crate) fn as_slice(&self) -> &[F] {
        self.values
            .as_slice()
            .expect("cost matrices are built in standard layout")
    }
}

/// Sinkhorn dual vectors for one entropic problem, plus the marginals it was
/// solved against and convergence metadata.
#[derive(Debug, Clone)]
pub struct DualPotentials<F: Float> {
    pub f: Vec<F>,
    pub g: Vec<F>,
    pub a: Vec<F>,
    pub b: Vec<F>,
    pub epsilon: F,
    pub iterations: usize,
    pub marginal_err: F,
    pub converged: bool,
}

impl<F: Float> DualPotentials<F> {
    /// Dual objective `<f, a> + <g, b>`.
    pub fn objective(&self) -> F {
        let fa: F = self.f.iter().zip(&self.a).map(|(&f, &a)| f * a).sum();
        let gb: F = self.g.iter().zip(&self.b).map(|(&g, &b)| g * b).sum();
        fa + gb
    }
}

/// Nonnegative coupling with (approximately) prescribed marginals.
#[derive(Debug, Clone)]
pub struct TransportPlan<F: Float> {
    pub pi: Array2<F>,
    pub epsilon: F,
}

impl<F: Float> TransportPlan<F> {
    /// Max-norm violation of the plan's marginals against `(a, b)`.
    pub fn marginal_error(&self, a: &[F], b: &[F]) -> F {
        let mut worst = F::zero();
        for (i, row) in self.pi.outer_iter().enumerate() {
            let s: F = row.iter().copied().sum();
            worst = worst.max((s - a[i]).abs());
        }
        for (j, col) in self.pi.axis_iter(ndarray::Axis(1)).enumerate() {
            let s: F = col.iter().copied().sum();
            worst = worst.max((s - b[j]).abs());
        }
        worst
    }

    /// Transport cost `<C, pi>` of this plan.
    pub fn cost(&self, c: &CostMatrix<F>) -> F {
        self.pi
            .iter()
            .zip(c.values.iter())
            .map(|(&p, &c)| p * c)
            .sum()
    }
}

/// Coupling implied by entropic duals, with the marginal weights folded in:
/// `pi_ij = a_i * b_j * exp((f_i + g_j - C_ij)/eps)`.
pub fn recover_plan<F: Float>(duals: &DualPotentials<F>, c: &CostMatrix<F>) -> Result<TransportPlan<F>> {
    let density = plan_density(duals, c)?;
    let mut pi = density;
    for (i, mut row) in pi.outer_iter_mut().enumerate() {
        for (j, p) in row.iter_mut().enumerate() {
            *p = *p * duals.a[i] * duals.b[j];
        }
    }
    Ok(TransportPlan {
        pi,
        epsilon: duals.epsilon,
    })
}

/// Relative density of the entropic coupling against the product measure:
/// `exp((f_i + g_j - C_ij)/eps)`, i.e. `pi / (a (x) b)`.
pub fn plan_density<F: Float>(duals: &DualPotentials<F>, c: &CostMatrix<F>) -> Result<Array2<F>> {
    let (n, m) = (c.n(), c.m());
    if duals.f.len() != n || duals.g.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "duals ({}, {}) do not match cost matrix ({n}, {m})",
            duals.f.len(),
            duals.g.len()
        )));
    }
    let inv_eps = F::one() / duals.epsilon;
    let mut out = Array2::zeros((n, m));
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        let fi = duals.f[i];
        for (j, o) in row.iter_mut().enumerate() {
            let e = ((fi + duals.g[j] - c.values[(i, j)]) * inv_eps).exp();
            if !e.is_finite() {
                return Err(Error::NonFiniteIntermediate("plan density"));
            }
            *o = e;
        }
    }
    Ok(out)
}

/// Uniform probability vector of length `n`.
pub fn uniform_weights<F: Float>(n: usize) -> Vec<F> {
    vec![F::one() / F::cast(n as f64); n]
}

/// Checks that `w` is a strictly positive probability vector of length `n`.
pub(crate) fn validate_weights<F: Float>(w: &[F], n: usize, side: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{side} weights have length {} but the cost matrix has {n}",
            w.len()
        )));
    }
    let mut total = F::zero();
    for &x in w {
        if !x.is_finite() || x <= F::zero() {
            return Err(Error::InvalidConfig(format!(
                "{side} weights must be finite and > 0"
            )));
        }
        total += x;
    }
    if (total - F::one()).abs() > F::cast(1e-9) {
        return Err(Error::InvalidConfig(format!(
            "{side} weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}
