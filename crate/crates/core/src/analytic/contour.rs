//! Circles with trapezoidal nodes, the Cauchy integral formula and the
//! Cauchy–Hadamard radius estimate.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fewest nodes accepted on a contour.
pub const MIN_NODES: usize = 16;

/// Positively oriented circle `|λ − center| = radius` with `nodes` equally
/// spaced trapezoidal points at angles `2π(j + ½)/q`. The half-step offset
/// keeps nodes off the real axis when the center is real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

impl Contour {
    pub fn new(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "contour radius {radius} must be positive"
            )));
        }
        if nodes < MIN_NODES {
            return Err(Error::InvalidInput(format!(
                "contour needs ≥ {MIN_NODES} nodes, got {nodes}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::NonFinite("contour center".into()));
        }
        Ok(Contour {
            center,
            radius,
            nodes,
        })
    }

    /// Unit-circle point `z_j`.
    pub fn unit(&self, j: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / self.nodes as f64)
    }

    pub fn point(&self, j: usize) -> C64 {
        self.center + self.radius * self.unit(j)
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.nodes).map(|j| self.point(j)).collect()
    }

    pub fn encloses(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// What the discrete projector does to an eigenvalue `μ` of a normal
    /// operator: `1 / (1 + w^q)` with `w = (μ − center)/radius`.
    pub fn filter(&self, mu: C64) -> C64 {
        let w = (mu - self.center) / self.radius;
        let wq = w.powu(self.nodes as u32);
        if !wq.is_finite() {
            return C64::new(0.0, 0.0);
        }
        1.0 / (1.0 + wq)
    }

    /// Predicted `‖P² − P‖` for a normal operator with the given spectrum:
    /// `max |f(μ)(1 − f(μ))|`.
    pub fn model_defect(&self, spectrum: &[C64]) -> f64 {
        spectrum
            .iter()
            .map(|&mu| {
                let f = self.filter(mu);
                (f * (1.0 - f)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Values that can be sampled along a contour: scalars, vectors, matrices.
pub trait CauchyValue: Clone + Send + Sync {
    fn scale(&self, s: C64) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn zero_like(&self) -> Self {
        self.scale(C64::new(0.0, 0.0))
    }
}

impl CauchyValue for C64 {
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn norm(&self) -> f64 {
        num_complex::Complex::norm(*self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl CauchyValue for Vec<C64> {
    fn scale(&self, s: C64) -> Self {
        self.iter().map(|v| v * s).collect()
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
    fn norm(&self) -> f64 {
        crate::dense::norm2(self)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl CauchyValue for DMatrix<C64> {
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    /// Frobenius norm.
    fn norm(&self) -> f64 {
        DMatrix::norm(self)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `f` at every contour node, evaluated in parallel and returned in node
/// order.
pub fn sample<V: CauchyValue>(
    f: &(impl Fn(C64) -> Result<V> + Sync),
    contour: &Contour,
) -> Result<Vec<V>> {
    let values: Vec<V> = (0..contour.nodes)
        .into_par_iter()
        .map(|j| f(contour.point(j)))
        .collect::<Result<_>>()?;
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("sample at contour node {j}")));
    }
    Ok(values)
}

/// `Aₘ = (1/q) Σⱼ f(λⱼ) / (r zⱼ)^m` for `m = 0..=order` from samples taken
/// at the nodes of `contour`.
pub fn coefficients_from_samples<V: CauchyValue>(
    samples: &[V],
    contour: &Contour,
    order: usize,
) -> Vec<V> {
    let q = contour.nodes as f64;
    (0..=order)
        .map(|m| {
            let mut acc = samples[0].zero_like();
            for (j, s) in samples.iter().enumerate() {
                let w = (contour.radius * contour.unit(j)).powi(-(m as i32)) / q;
                acc.add_assign(&s.scale(w));
            }
            acc
        })
        .collect()
}

/// `f⁽ⁿ⁾(center)` by the Cauchy integral formula on `|λ − center| = r`.
pub fn cauchy_derivative<V: CauchyValue>(
    f: &(impl Fn(C64) -> Result<V> + Sync),
    center: C64,
    r: f64,
    order: usize,
    nodes: usize,
) -> Result<V> {
    let contour = Contour::new(center, r, nodes)?;
    let samples = sample(f, &contour)?;
    let a = coefficients_from_samples(&samples, &contour, order)
        .pop()
        .expect("order + 1 coefficients");
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    Ok(a.scale(C64::new(factorial, 0.0)))
}

/// Coefficients whose contribution on the sampling circle falls below this
/// fraction of the sampled maximum are rounding noise and set to zero.
pub const COEFFICIENT_NOISE: f64 = 1e-11;

/// Taylor coefficients `A₀..A_M` of `f` at `center`, with noise-level
/// coefficients zeroed.
pub fn taylor_coefficients<V: CauchyValue>(
    f: &(impl Fn(C64) -> Result<V> + Sync),
    center: C64,
    r: f64,
    order: usize,
    nodes: usize,
) -> Result<(Vec<V>, Vec<V>, Contour)> {
    let contour = Contour::new(center, r, nodes)?;
    if order >= nodes {
        return Err(Error::InvalidInput(format!(
            "order {order} needs more than {nodes} nodes"
        )));
    }
    let samples = sample(f, &contour)?;
    let scale = samples.iter().map(CauchyValue::norm).fold(0.0, f64::max);
    let mut coeffs = coefficients_from_samples(&samples, &contour, order);
    for (m, a) in coeffs.iter_mut().enumerate() {
        if a.norm() * r.powi(m as i32) < COEFFICIENT_NOISE * scale {
            *a = a.zero_like();
        }
    }
    Ok((coeffs, samples, contour))
}

/// `Σ Aₘ ζᵐ`.
pub fn evaluate_series<V: CauchyValue>(coeffs: &[V], zeta: C64) -> V {
    let mut acc = coeffs[0].zero_like();
    let mut p = C64::new(1.0, 0.0);
    for a in coeffs {
        acc.add_assign(&a.scale(p));
        p *= zeta;
    }
    acc
}

/// Coefficients below this magnitude are ignored by the radius estimate.
pub const NEGLIGIBLE_COEFFICIENT: f64 = 1e-14;

/// RMS misfit in `log‖Aₘ‖` above which the log-fit is not trusted.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    /// `None` when every tail coefficient is negligible.
    pub radius: Option<f64>,
    /// `1 / max ‖Aₘ‖^{1/m}` over the tail window.
    pub root_test: Option<f64>,
    /// Number of tail coefficients used by the fit.
    pub fit_points: usize,
    /// RMS of the fit in `log‖Aₘ‖`; `None` when no fit was made.
    #[serde(default)]
    pub fit_residual: Option<f64>,
    pub entire: bool,
}

/// Cauchy–Hadamard radius from `‖A₀‖..‖A_M‖`, `M ≥ 8`.
///
/// On the window `m ∈ [M/2, M]` the non-negligible coefficients are fitted
/// by `log‖Aₘ‖ = c + γ log m − m log R`. The power `m^γ` absorbs the
/// algebraic prefactor of a branch point, which the plain root test
/// mistakes for a smaller radius at moderate `M`. With fewer than three
/// usable points, or when the fit misses the data by more than
/// [`FIT_RESIDUAL_LIMIT`] (oscillating coefficients from a conjugate pair of
/// singularities), the root test is reported as the radius.
pub fn radius_of_convergence(norms: &[f64]) -> Result<RadiusEstimate> {
    if norms.len() < 9 {
        return Err(Error::InvalidInput(format!(
            "need M ≥ 8, got M = {}",
            norms.len().saturating_sub(1)
        )));
    }
    let m_max = norms.len() - 1;
    let tail: Vec<(f64, f64)> = ((m_max / 2).max(1)..=m_max)
        .filter(|&m| norms[m] >= NEGLIGIBLE_COEFFICIENT && norms[m].is_finite())
        .map(|m| (m as f64, norms[m].ln()))
        .collect();
    if tail.is_empty() {
        return Ok(RadiusEstimate {
            radius: None,
            root_test: None,
            fit_points: 0,
            fit_residual: None,
            entire: true,
        });
    }
    let root = 1.0 / tail.iter().map(|&(m, l)| (l / m).exp()).fold(0.0, f64::max);
    if tail.len() < 3 {
        return Ok(RadiusEstimate {
            radius: Some(root),
            root_test: Some(root),
            fit_points: tail.len(),
            fit_residual: None,
            entire: false,
        });
    }
    let a = DMatrix::from_fn(tail.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => tail[i].0.ln(),
        _ => tail[i].0,
    });
    let b = DVector::from_iterator(tail.len(), tail.iter().map(|p| p.1));
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidInput(format!("radius fit failed: {e}")))?;
    let misfit = ((&a * &sol - &b).norm_squared() / tail.len() as f64).sqrt();
    let radius = if misfit <= FIT_RESIDUAL_LIMIT && sol[2].is_finite() {
        (-sol[2]).exp()
    } else {
        root
    };
    Ok(RadiusEstimate {
        radius: Some(radius),
        root_test: Some(root),
        fit_points: tail.len(),
        fit_residual: Some(misfit),
        entire: false,
    })
}
