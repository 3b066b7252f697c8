//! Gauss rules (Golub–Welsch), product rules on spheres and a graded radial
//! rule that absorbs the weight `r^α` exactly near the origin.

use crate::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Jacobi rule for `∫₀¹ f(r) r^α dr`, `α > −1`, exact for polynomials
/// of degree `2n − 1`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> Result<Rule> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "quadrature needs at least one node".into(),
        ));
    }
    if !(alpha > -1.0) {
        return Err(Error::InvalidInput(format!(
            "weight exponent {alpha} must exceed −1"
        )));
    }
    // Monic Jacobi recurrence for (1 − t)^0 (1 + t)^α on [−1, 1].
    let b = alpha;
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                b / (b + 2.0)
            } else {
                let s = 2.0 * k as f64 + b;
                b * b / (s * (s + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            let s = 2.0 * k + b;
            (4.0 * k * k * (k + b) * (k + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
        })
        .collect();
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mu0 = 2f64.powf(b + 1.0) / (b + 1.0);
    let scale = 2f64.powf(-b - 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let t = eig.eigenvalues[j];
            let v0 = eig.eigenvectors[(0, j)];
            (0.5 * (1.0 + t), mu0 * v0 * v0 * scale)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Rule> {
    let unit = gauss_jacobi_unit(n, 0.0)?;
    let len = b - a;
    Ok(Rule {
        nodes: unit.nodes.iter().map(|&x| a + len * x).collect(),
        weights: unit.weights.iter().map(|&w| w * len).collect(),
    })
}

/// Volume `c_m` of the unit ball in `ℝᵐ`.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(m - 2) * 2.0 * PI / m as f64,
    }
}

/// Directions on the unit sphere `S^{m−1}` with weights summing to its area
/// `m·c_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// `nodes` sets the angular resolution: points on the circle for `m = 2`,
/// polar Gauss nodes for `m = 3` (with twice as many azimuthal points).
pub fn sphere_rule(m: usize, nodes: usize) -> Result<SphereRule> {
    match m {
        1 => Ok(SphereRule {
            directions: vec![vec![-1.0], vec![1.0]],
            weights: vec![1.0, 1.0],
        }),
        2 => {
            if nodes < 4 {
                return Err(Error::InvalidInput("circle rule needs ≥ 4 nodes".into()));
            }
            let w = 2.0 * PI / nodes as f64;
            Ok(SphereRule {
                directions: (0..nodes)
                    .map(|j| {
                        let t = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect(),
                weights: vec![w; nodes],
            })
        }
        3 => {
            if nodes < 2 {
                return Err(Error::InvalidInput(
                    "sphere rule needs ≥ 2 polar nodes".into(),
                ));
            }
            let polar = gauss_legendre(nodes, -1.0, 1.0)?;
            let n_phi = 2 * nodes;
            let w_phi = 2.0 * PI / n_phi as f64;
            let mut directions = Vec::with_capacity(nodes * n_phi);
            let mut weights = Vec::with_capacity(nodes * n_phi);
            for (&u, &wu) in polar.nodes.iter().zip(&polar.weights) {
                let s = (1.0 - u * u).max(0.0).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                    directions.push(vec![s * phi.cos(), s * phi.sin(), u]);
                    weights.push(wu * w_phi);
                }
            }
            Ok(SphereRule {
                directions,
                weights,
            })
        }
        _ => Err(Error::InvalidInput(format!("dimension {m} not in 1..=3"))),
    }
}

/// Composite rule for `∫₀¹ g(r) r^α dr`.
///
/// `[0, 1/panels]` is split geometrically (ratio ½, `grading` levels); the
/// innermost piece uses Gauss–Jacobi with the weight built in, every other
/// piece Gauss–Legendre with `r^α` evaluated at the nodes.
pub fn radial_rule(alpha: f64, order: usize, panels: usize, grading: usize) -> Result<Rule> {
    if panels == 0 {
        return Err(Error::InvalidInput("radial rule needs ≥ 1 panel".into()));
    }
    let h = 1.0 / panels as f64;
    let mut breaks: Vec<f64> = (0..=grading)
        .rev()
        .map(|l| h * 0.5f64.powi(l as i32))
        .collect();
    breaks.extend((2..=panels).map(|k| k as f64 * h));

    let inner = gauss_jacobi_unit(order, alpha)?;
    let r0 = breaks[0];
    let mut nodes: Vec<f64> = inner.nodes.iter().map(|&s| r0 * s).collect();
    let mut weights: Vec<f64> = inner
        .weights
        .iter()
        .map(|&w| w * r0.powf(alpha + 1.0))
        .collect();
    let unit = gauss_jacobi_unit(order, 0.0)?;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (&s, &w) in unit.nodes.iter().zip(&unit.weights) {
            let r = a + (b - a) * s;
            nodes.push(r);
            weights.push(w * (b - a) * r.powf(alpha));
        }
    }
    Ok(Rule { nodes, weights })
}
