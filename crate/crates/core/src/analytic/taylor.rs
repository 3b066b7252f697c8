//! Directional Taylor expansions `f(a + ζt) = Σ Aₘ ζᵐ`.

use super::contour::{
    evaluate_series, radius_of_convergence, taylor_coefficients, CauchyValue, RadiusEstimate,
};
use super::family::Direction;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorOptions {
    /// Radius of the sampling circle in ζ.
    pub radius: f64,
    /// Highest coefficient `M`.
    pub order: usize,
    /// Trapezoidal nodes on the sampling circle.
    pub nodes: usize,
    /// Accepted reconstruction error on `|ζ| = r/2`, relative to the largest
    /// sampled value.
    pub tolerance: f64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        TaylorOptions {
            radius: 0.3,
            order: 16,
            nodes: 128,
            tolerance: 1e-8,
        }
    }
}

/// Test points on the reconstruction circle, rotated away from the sampling
/// nodes.
pub const RECONSTRUCTION_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries<V> {
    pub coefficients: Vec<V>,
    /// `(ζⱼ, f(a + ζⱼt))` on the sampling circle.
    pub samples: Vec<(C64, V)>,
    pub radius: f64,
    pub reconstruction_error: f64,
}

impl<V: CauchyValue> TaylorSeries<V> {
    pub fn norms(&self) -> Vec<f64> {
        self.coefficients.iter().map(CauchyValue::norm).collect()
    }

    pub fn radius_estimate(&self) -> Result<RadiusEstimate> {
        radius_of_convergence(&self.norms())
    }

    pub fn evaluate(&self, zeta: C64) -> V {
        evaluate_series(&self.coefficients, zeta)
    }
}

/// Taylor coefficients of `ζ ↦ f(a + ζt)` at `ζ = 0`, checked by
/// reconstructing `f` on `|ζ| = r/2`.
pub fn taylor_along<V: CauchyValue>(
    f: &(impl Fn(&[C64]) -> Result<V> + Sync),
    base: &[C64],
    direction: &Direction,
    opts: &TaylorOptions,
) -> Result<TaylorSeries<V>> {
    let g = |zeta: C64| f(&direction.point(base, zeta));
    let (coefficients, values, contour) =
        taylor_coefficients(&g, C64::new(0.0, 0.0), opts.radius, opts.order, opts.nodes)?;
    let scale = values.iter().map(CauchyValue::norm).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for k in 0..RECONSTRUCTION_POINTS {
        let zeta = C64::from_polar(
            0.5 * opts.radius,
            2.0 * PI * (k as f64 + 0.25) / RECONSTRUCTION_POINTS as f64,
        );
        let mut diff = g(zeta)?;
        diff.add_assign(&evaluate_series(&coefficients, zeta).scale(C64::new(-1.0, 0.0)));
        worst = worst.max(diff.norm());
    }
    let reconstruction_error = if scale > 0.0 { worst / scale } else { worst };
    if !(reconstruction_error <= opts.tolerance) {
        return Err(Error::Reconstruction {
            error: reconstruction_error,
            tolerance: opts.tolerance,
        });
    }
    let samples = (0..contour.nodes)
        .map(|j| contour.point(j))
        .zip(values)
        .collect();
    Ok(TaylorSeries {
        coefficients,
        samples,
        radius: opts.radius,
        reconstruction_error,
    })
}
