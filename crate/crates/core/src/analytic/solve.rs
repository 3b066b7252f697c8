//! Shifted solves `(H − λ)X = B` through a banded LU factorization with
//! partial pivoting.

use crate::dense::norm2;
use crate::lattice::DiscreteOperator;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// Pivots below this fraction of the largest entry count as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;
/// Accepted relative residual `‖(H − λ)X − B‖ / ‖B‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// LU factors of a banded matrix with `kl` sub- and `ku` super-diagonals.
/// Row `i` stores columns `i − kl ..= i + ku + kl`; the extra `kl` columns
/// take the fill from row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn upper_reach(&self, k: usize) -> usize {
        (k + self.width - 1 - self.kl).min(self.n - 1)
    }

    /// Factors `op − λ`.
    pub fn factor(op: &DiscreteOperator, lambda: C64) -> Result<Self> {
        let n = op.dim();
        let band = op.bandwidth();
        let (kl, ku) = (band, band);
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            width,
            data: vec![C64::new(0.0, 0.0); n * width],
            pivots: vec![0; n],
        };
        let mut scale = 0.0f64;
        for (i, j, v) in op.triplets() {
            let idx = lu.at(i, j);
            lu.data[idx] += v;
        }
        for i in 0..n {
            let idx = lu.at(i, i);
            lu.data[idx] -= lambda;
        }
        for z in &lu.data {
            scale = scale.max(z.norm());
        }
        let floor = PIVOT_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.at(k, k)].norm();
            for i in k + 1..=last {
                let v = lu.data[lu.at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= floor {
                return Err(Error::NearSpectrum {
                    pivot: best / scale.max(f64::MIN_POSITIVE),
                });
            }
            lu.pivots[k] = p;
            let reach = lu.upper_reach(k);
            if p != k {
                for j in k..=reach {
                    let (a, b) = (lu.at(k, j), lu.at(p, j));
                    lu.data.swap(a, b);
                }
            }
            let inv = 1.0 / lu.data[lu.at(k, k)];
            for i in k + 1..=last {
                let ik = lu.at(i, k);
                let l = lu.data[ik] * inv;
                lu.data[ik] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                let (row_k, row_i) = (lu.at(k, k), lu.at(i, k));
                for off in 1..=reach - k {
                    let u = lu.data[row_k + off];
                    lu.data[row_i + off] -= l * u;
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == C64::new(0.0, 0.0) {
                continue;
            }
            for i in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                b[i] -= self.data[self.at(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let row = self.at(k, k);
            let mut s = b[k];
            for off in 1..=self.upper_reach(k) - k {
                s -= self.data[row + off] * b[k + off];
            }
            b[k] = s / self.data[row];
        }
    }
}

/// Residual-checked solver for one shift.
#[derive(Debug, Clone)]
pub struct ShiftedSolver<'a> {
    op: &'a DiscreteOperator,
    lambda: C64,
    lu: BandedLu,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(op: &'a DiscreteOperator, lambda: C64) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::NonFinite("shift λ".into()));
        }
        Ok(ShiftedSolver {
            op,
            lambda,
            lu: BandedLu::factor(op, lambda)?,
        })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        if b.len() != self.lu.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lu.dim(),
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.lu.solve_in_place(&mut x);
        let mut r = self.op.apply(&x)?;
        for ((ri, xi), bi) in r.iter_mut().zip(&x).zip(b) {
            *ri -= self.lambda * xi + bi;
        }
        let (res, nb) = (norm2(&r), norm2(b));
        if !(res <= RESIDUAL_TOLERANCE * nb) {
            if !res.is_finite() {
                return Err(Error::NearSpectrum { pivot: 0.0 });
            }
            return Err(Error::Residual {
                residual: res / nb.max(f64::MIN_POSITIVE),
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for (j, col) in b.column_iter().enumerate() {
            let x = self.solve(col.as_slice())?;
            out.column_mut(j).copy_from_slice(&x);
        }
        Ok(out)
    }
}

/// `(H − λ)⁻¹ b`.
pub fn resolvent_apply(op: &DiscreteOperator, lambda: C64, b: &[C64]) -> Result<Vec<C64>> {
    ShiftedSolver::new(op, lambda)?.solve(b)
}

/// `(H − λ)⁻¹ B` for a block of right-hand sides.
pub fn resolvent_apply_matrix(
    op: &DiscreteOperator,
    lambda: C64,
    b: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    if b.nrows() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: b.nrows(),
        });
    }
    ShiftedSolver::new(op, lambda)?.solve_matrix(b)
}
