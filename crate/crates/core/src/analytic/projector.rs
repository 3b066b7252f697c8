//! Riesz projectors `P = −(2πi)⁻¹ ∮ (H − λ)⁻¹ dλ` by trapezoidal quadrature.

use super::contour::Contour;
use super::solve::ShiftedSolver;
use crate::dense::{max_abs, spectral_norm};
use crate::lattice::DiscreteOperator;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn is_real_symmetric(op: &DiscreteOperator) -> bool {
    op.is_hermitian() && op.triplets().all(|(_, _, v)| v.im == 0.0)
}

/// `P·B`, one shifted factorization per node. For a real symmetric `H`, a
/// real center and a real block, conjugate node pairs give conjugate terms
/// and only the upper half circle is solved.
pub fn apply_projector(
    op: &DiscreteOperator,
    contour: &Contour,
    block: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    if block.nrows() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: block.nrows(),
        });
    }
    let q = contour.nodes;
    let mirrored = q.is_multiple_of(2)
        && contour.center.im == 0.0
        && block.iter().all(|z| z.im == 0.0)
        && is_real_symmetric(op);
    let solved = if mirrored { q / 2 } else { q };
    let terms: Vec<DMatrix<C64>> = (0..solved)
        .into_par_iter()
        .map(|j| {
            let x = ShiftedSolver::new(op, contour.point(j))?.solve_matrix(block)?;
            let w = -(contour.radius * contour.unit(j)) / q as f64;
            let mut t = x * w;
            if mirrored {
                t.iter_mut().for_each(|z| *z = C64::new(2.0 * z.re, 0.0));
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let mut acc = DMatrix::zeros(block.nrows(), block.ncols());
    for t in &terms {
        acc += t;
    }
    Ok(acc)
}

/// Tolerances for accepting a projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorTolerance {
    /// Bound on `‖P² − P‖`.
    pub idempotency: f64,
    /// Bound on the distance of the trace to an integer and on its imaginary part.
    pub trace: f64,
}

impl Default for ProjectorTolerance {
    fn default() -> Self {
        ProjectorTolerance {
            idempotency: 1e-8,
            trace: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszProjector {
    pub matrix: DMatrix<C64>,
    pub contour: Contour,
    pub trace: C64,
    /// `‖P² − P‖₂`.
    pub defect: f64,
}

impl RieszProjector {
    /// Number of enclosed eigenvalues, counted with algebraic multiplicity.
    pub fn rank(&self) -> usize {
        self.trace.re.round().max(0.0) as usize
    }

    /// `‖PH − HP‖₂ / ‖H‖₂`.
    pub fn commutator_defect(&self, op: &DiscreteOperator) -> f64 {
        let h = op.to_dense();
        let c = &self.matrix * &h - &h * &self.matrix;
        spectral_norm(&c) / spectral_norm(&h).max(f64::MIN_POSITIVE)
    }
}

/// Dense projector for the part of the spectrum inside `contour`.
pub fn riesz_projector(
    op: &DiscreteOperator,
    contour: &Contour,
    tol: &ProjectorTolerance,
) -> Result<RieszProjector> {
    let p = projector_unchecked(op, contour)?;
    if !(p.defect <= tol.idempotency) {
        return Err(Error::UnderResolved(format!(
            "‖P² − P‖ = {:.3e} exceeds {:.1e}: eigenvalue near the contour or too few nodes",
            p.defect, tol.idempotency
        )));
    }
    let t = p.trace;
    if (t.re - t.re.round()).abs() > tol.trace || t.im.abs() > tol.trace {
        return Err(Error::UnderResolved(format!("trace {t} is not an integer")));
    }
    Ok(p)
}

/// Dense projector with its defect measured but not enforced.
pub fn projector_unchecked(op: &DiscreteOperator, contour: &Contour) -> Result<RieszProjector> {
    let n = op.dim();
    let matrix = apply_projector(op, contour, &DMatrix::identity(n, n))?;
    let trace = matrix.trace();
    let sq = &matrix * &matrix - &matrix;
    let defect = if max_abs(&sq) == 0.0 {
        0.0
    } else {
        spectral_norm(&sq)
    };
    Ok(RieszProjector {
        matrix,
        contour: *contour,
        trace,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::hermitian_eigen;
    use crate::rng::seeded;
    use rand::Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn diag(values: &[f64]) -> DiscreteOperator {
        DiscreteOperator::diagonal(&values.iter().map(|&v| c(v)).collect::<Vec<_>>())
    }

    #[test]
    fn isolates_one_eigenvalue() {
        let p = riesz_projector(
            &diag(&[0.0, 10.0]),
            &Contour::new(c(0.0), 1.0, 64).unwrap(),
            &Default::default(),
        )
        .unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(max_abs(&(&p.matrix - expect)) < 1e-10);
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn empty_and_double() {
        let tol = ProjectorTolerance::default();
        let p = riesz_projector(
            &diag(&[5.0, 10.0]),
            &Contour::new(c(0.0), 1.0, 64).unwrap(),
            &tol,
        )
        .unwrap();
        assert!(max_abs(&p.matrix) < 1e-12);
        assert_eq!(p.rank(), 0);
        let p = riesz_projector(
            &diag(&[0.0, 0.5, 10.0]),
            &Contour::new(c(0.25), 1.0, 64).unwrap(),
            &tol,
        )
        .unwrap();
        assert!((p.trace - 2.0).norm() < 1e-10);
    }

    #[test]
    fn too_close_is_under_resolved() {
        let err = riesz_projector(
            &diag(&[0.0, 1.02]),
            &Contour::new(c(0.0), 1.0, 16).unwrap(),
            &Default::default(),
        );
        assert!(matches!(err, Err(Error::UnderResolved(_))));
    }

    #[test]
    fn mirrored_and_full_sums_agree() {
        let mut rng = seeded(3);
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(i as f64)));
            if i + 1 < n {
                let v = c(rng.random_range(-0.3..0.3));
                t.push((i, i + 1, v));
                t.push((i + 1, i, v));
            }
        }
        let h = DiscreteOperator::from_triplets(n, t).unwrap();
        let contour = Contour::new(c(3.0), 1.5, 64).unwrap();
        let mirrored = apply_projector(&h, &contour, &DMatrix::identity(n, n)).unwrap();
        let shifted = Contour::new(C64::new(3.0, 1e-300), 1.5, 64).unwrap();
        let full = apply_projector(&h, &shifted, &DMatrix::identity(n, n)).unwrap();
        assert!(max_abs(&(mirrored - full)) < 1e-12);
    }

    #[test]
    fn spectral_decomposition_oracle() {
        let mut rng = seeded(9);
        let n = 20;
        let m = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = (&m + m.adjoint()) * c(0.5);
        let (ev, vecs) = hermitian_eigen(&h);
        let gap_at = |k: usize| (ev[k + 1] - ev[k]).min(ev[k] - ev[k - 1]);
        let k = (1..n - 1)
            .max_by(|&a, &b| gap_at(a).total_cmp(&gap_at(b)))
            .unwrap();
        let op = DiscreteOperator::from_dense(&h).unwrap();
        let contour = Contour::new(c(ev[k]), 0.5 * gap_at(k), 64).unwrap();
        let p = riesz_projector(&op, &contour, &Default::default()).unwrap();
        let v = vecs.column(k);
        let oracle = v * v.adjoint();
        assert!(max_abs(&(&p.matrix - oracle)) < 1e-9);
        assert!(p.commutator_defect(&op) < 1e-8);
        // E = tr(PHP)/tr(P)
        let e = (&p.matrix * &h * &p.matrix).trace() / p.trace;
        assert!((e - ev[k]).norm() < 1e-10);
    }
}
