//! Consistency diagnostic for batched gradient differences.
//!
//! For two training points `z_k`, `z_l` in the same batch, the difference of
//! their batch-level calibrated gradients can be computed two ways:
//!
//! - from exact per-pair duals, weighted by the outer plan row (the
//!   definition of the hierarchical gradient), and
//! - from entropic per-pair duals with a correction of
//!   `eps * N_i/(N_i - 1) * (1/rho_l - 1/rho_k)`, where `rho` is the entropic
//!   plan density `pi / (a (x) b)` evaluated at one reference column per
//!   validation batch.
//!
//! The residual between the two shrinks with the regularization strength; the
//! diagnostic returns `|LHS - RHS|` so tests can pin both the small-epsilon
//! agreement and the trend. The reference column for a pair is the column
//! where both rows of the exact plan carry the most shared mass; when the
//! exact rows share no support the identity has no small-epsilon limit, which
//! the caller can detect through [`shared_support_column`].

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::Float;

/// Per-validation-batch ingredients for the diagnostic, all restricted to one
/// training batch of size `N_i`.
#[derive(Debug, Clone)]
pub struct PairGradientContext<F: Float> {
    /// Training-side duals of the exact per-pair solve.
    pub exact_f: Vec<F>,
    /// Training-side duals of the entropic per-pair solve.
    pub entropic_f: Vec<F>,
    /// Entropic plan density `exp((f + g - C)/eps)` of the pair.
    pub density: ndarray::Array2<F>,
    /// Exact per-pair plan; selects the reference column.
    pub exact_plan: ndarray::Array2<F>,
}

/// A completed batched run's view of one training batch.
#[derive(Debug, Clone)]
pub struct ConsistencyContext<F: Float> {
    /// Outer-plan row for the training batch (one weight per validation batch).
    pub outer_weights: Vec<F>,
    pub pairs: Vec<PairGradientContext<F>>,
    /// Regularization strength shared by the entropic per-pair solves.
    pub epsilon: F,
}

/// Column where rows `k` and `l` share the most mass, or `None` when they
/// share none.
pub fn shared_support_column<F: Float>(
    plan: &ArrayView2<'_, F>,
    k: usize,
    l: usize,
) -> Option<usize> {
    let mut best = F::zero();
    let mut pick = None;
    for j in 0..plan.ncols() {
        let shared = plan[(k, j)].min(plan[(l, j)]);
        if shared > best {
            best = shared;
            pick = Some(j);
        }
    }
    pick
}

/// `|LHS - RHS|` of the two gradient-difference computations for points
/// `k` and `l` of the batch described by `ctx`.
pub fn score_difference_residual<F: Float>(
    ctx: &ConsistencyContext<F>,
    k: usize,
    l: usize,
) -> Result<F> {
    if ctx.pairs.is_empty() {
        return Err(Error::InvalidConfig(
            "consistency context has no batch pairs".into(),
        ));
    }
    if ctx.pairs.len() != ctx.outer_weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pairs vs {} outer weights",
            ctx.pairs.len(),
            ctx.outer_weights.len()
        )));
    }
    let n_i = ctx.pairs[0].exact_f.len();
    if n_i < 2 {
        return Err(Error::DegenerateSize(n_i));
    }
    if k >= n_i || l >= n_i {
        return Err(Error::DimensionMismatch(format!(
            "point indices ({k}, {l}) out of range for batch of {n_i}"
        )));
    }
    if k == l {
        return Ok(F::zero());
    }
    let scale = F::cast(n_i as f64) / F::cast((n_i - 1) as f64);

    let mut lhs = F::zero();
    let mut rhs = F::zero();
    for (pair, &w) in ctx.pairs.iter().zip(&ctx.outer_weights) {
        if pair.exact_f.len() != n_i || pair.entropic_f.len() != n_i {
            return Err(Error::DimensionMismatch(
                "pair dual lengths disagree within one training batch".into(),
            ));
        }
        lhs += w * scale * (pair.exact_f[k] - pair.exact_f[l]);

        let m = shared_support_column(&pair.exact_plan.view(), k, l)
            .or_else(|| shared_support_column(&pair.density.view(), k, l))
            .expect("density is strictly positive unless it underflowed");
        let rho_k = pair.density[(k, m)];
        let rho_l = pair.density[(l, m)];
        if rho_k <= F::zero() {
            return Err(Error::ZeroPlanEntry { row: k, col: m });
        }
        if rho_l <= F::zero() {
            return Err(Error::ZeroPlanEntry { row: l, col: m });
        }
        let correction = ctx.epsilon * scale * (F::one() / rho_l - F::one() / rho_k);
        rhs += w * (scale * (pair.entropic_f[k] - pair.entropic_f[l]) - correction);
    }
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_context() -> ConsistencyContext<f64> {
        ConsistencyContext {
            outer_weights: vec![1.0],
            pairs: vec![PairGradientContext {
                exact_f: vec![0.1, 0.4, -0.2],
                entropic_f: vec![0.1, 0.4, -0.2],
                density: array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]],
                exact_plan: array![
                    [0.2, 0.2 / 2.0],
                    [0.1, 0.3 / 2.0],
                    [0.0, 0.15]
                ],
            }],
            epsilon: 0.5,
        }
    }

    #[test]
    fn identical_points_give_zero() {
        let ctx = toy_context();
        assert_eq!(score_difference_residual(&ctx, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn matching_duals_and_flat_density_give_zero() {
        // Equal exact and entropic duals with a product-plan density make both
        // sides coincide exactly.
        let ctx = toy_context();
        let r = score_difference_residual(&ctx, 0, 1).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn underflowed_entry_is_reported() {
        let mut ctx = toy_context();
        ctx.pairs[0].density = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        // Rows 0 and 1 share column 0 of the exact plan, where row 0's
        // density underflowed.
        assert!(matches!(
            score_difference_residual(&ctx, 0, 1),
            Err(Error::ZeroPlanEntry { row: 0, col: 0 })
        ));
    }

    #[test]
    fn shared_column_picks_largest_joint_mass() {
        let plan = array![[0.2, 0.05], [0.1, 0.3], [0.0, 0.1]];
        assert_eq!(shared_support_column(&plan.view(), 0, 1), Some(0));
        assert_eq!(shared_support_column(&plan.view(), 1, 2), Some(1));
        // Rows 0 and 2 share only column 1 (row 2 has nothing in column 0).
        assert_eq!(shared_support_column(&plan.view(), 0, 2), Some(1));
    }
}
