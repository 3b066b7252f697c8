//! Regular grids, the Dirichlet finite-difference Laplacian and assembly of
//! `H(β) = H₀ + Σᵢ βᵢVᵢ` as sparse operators.
//!
//! Every grid node is an unknown. The Dirichlet condition is imposed on the
//! ghost nodes one spacing outside `[aₖ, bₖ]`, so a 1D grid of `N` nodes has the
//! spectrum `(2/h²)(1 − cos(kπ/(N+1)))`, `k = 1..N`.

use crate::dense::norm2;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default cap on the number of grid nodes.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// `[aₖ, bₖ]` per axis, length units.
    pub extent: Vec<[f64; 2]>,
    /// Nodes per axis.
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(&spec.extent, &spec.points)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            extent: g
                .lower
                .iter()
                .zip(&g.upper)
                .map(|(&a, &b)| [a, b])
                .collect(),
            points: g.points,
        }
    }
}

impl Grid {
    pub fn new(extent: &[[f64; 2]], points: &[usize]) -> Result<Self> {
        Self::with_budget(extent, points, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(extent: &[[f64; 2]], points: &[usize], budget: usize) -> Result<Self> {
        let dim = extent.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} extents but {} point counts",
                dim,
                points.len()
            )));
        }
        for (k, (&[a, b], &n)) in extent.iter().zip(points).enumerate() {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: empty extent [{a}, {b}]"
                )));
            }
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: {n} points, need ≥ 3"
                )));
            }
        }
        let total = points
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if total > budget {
            return Err(Error::Budget {
                what: "grid points",
                needed: total,
                budget,
            });
        }
        Ok(Grid {
            lower: extent.iter().map(|e| e[0]).collect(),
            upper: extent.iter().map(|e| e[1]).collect(),
            points: points.to_vec(),
        })
    }

    /// Uniform grid on `[a, b]^dim` with `n` nodes per axis.
    pub fn cube(dim: usize, a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(&vec![[a, b]; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn extent(&self, axis: usize) -> [f64; 2] {
        [self.lower[axis], self.upper[axis]]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points[axis] - 1) as f64
    }

    /// Total node count, which is also the operator dimension.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis 0 varies fastest.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.points
            .iter()
            .map(|&n| {
                let i = idx % n;
                idx /= n;
                i
            })
            .collect()
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.points)
            .rev()
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.lower[k] + i as f64 * self.spacing(k))
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}

/// Sparse complex operator in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl DiscreteOperator {
    /// Duplicate entries are summed, exact zeros dropped. The Hermitian flag
    /// is set when the assembled matrix is exactly Hermitian.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.max(c) + 1,
                });
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(format!("entry ({r}, {c})")));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = DiscreteOperator {
            dim,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        op.prune_zeros();
        op.hermitian = op.hermitian_defect() == 0.0;
        Ok(op)
    }

    fn prune_zeros(&mut self) {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != C64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.values = values;
    }

    pub fn zero(dim: usize) -> Self {
        DiscreteOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
            .expect("diagonal entries are in range")
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c, m[(r, c)]))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `max |a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets()
            .map(|(r, c, _)| r.abs_diff(c))
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * x[self.cols[k]])
                    .sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// `self + s·other`. The result is flagged Hermitian only if both inputs
    /// are and `s` is real.
    pub fn add_scaled(&self, s: C64, other: &DiscreteOperator) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut out = Self::from_triplets(
            self.dim,
            self.triplets()
                .chain(other.triplets().map(|(r, c, v)| (r, c, s * v))),
        )?;
        out.hermitian = self.hermitian && other.hermitian && s.im == 0.0;
        Ok(out)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out.prune_zeros();
        out
    }

    /// `self − λ·I`.
    pub fn shifted(&self, lambda: C64) -> Self {
        let mut out = Self::from_triplets(
            self.dim,
            self.triplets()
                .chain((0..self.dim).map(|i| (i, i, -lambda))),
        )
        .expect("shift keeps entries finite");
        out.hermitian = self.hermitian && lambda.im == 0.0;
        out
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm for
    /// Hermitian operators.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Coordinate text form: a header comment and one `row col re im` line per
    /// stored entry, zero-based indices.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema: {}", crate::SCHEMA_VERSION);
        let _ = writeln!(
            s,
            "# dim: {} nnz: {} hermitian: {}",
            self.dim,
            self.nnz(),
            self.hermitian
        );
        let _ = writeln!(s, "# row col re im");
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {:e} {:e}", v.re, v.im);
        }
        s
    }

    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut triplets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                while let Some(w) = words.next() {
                    if w == "dim:" {
                        dim = words.next().and_then(|d| d.parse::<usize>().ok());
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidInput(format!("coordinate line {}: {line:?}", lineno + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            let r: usize = fields[0].parse().map_err(|_| bad())?;
            let c: usize = fields[1].parse().map_err(|_| bad())?;
            let re: f64 = fields[2].parse().map_err(|_| bad())?;
            let im: f64 = fields[3].parse().map_err(|_| bad())?;
            triplets.push((r, c, C64::new(re, im)));
        }
        let dim = dim.ok_or_else(|| Error::InvalidInput("missing `# dim:` header".into()))?;
        Self::from_triplets(dim, triplets)
    }
}

/// The coupling sequence `β ∈ ℓᵖ`, truncated to `n` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSeq {
    values: Vec<C64>,
    p: f64,
    declared_norm: f64,
}

pub fn lp_norm(values: &[C64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else if p == 1.0 {
        values.iter().map(|z| z.norm()).sum()
    } else if p == 2.0 {
        norm2(values)
    } else {
        values
            .iter()
            .map(|z| z.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

impl CouplingSeq {
    pub fn new(values: Vec<C64>, p: f64) -> Result<Self> {
        let norm = if values.is_empty() {
            0.0
        } else {
            lp_norm(&values, p)
        };
        Self::with_declared_norm(values, p, norm)
    }

    pub fn real(values: &[f64], p: f64) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect(), p)
    }

    pub fn with_declared_norm(values: Vec<C64>, p: f64, declared: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("coupling sequence needs n ≥ 1".into()));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!("p = {p} not in [1, ∞]")));
        }
        if values
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("coupling value".into()));
        }
        let norm = lp_norm(&values, p);
        if norm > declared + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "ℓ^{p} norm {norm} exceeds declared {declared}"
            )));
        }
        Ok(CouplingSeq {
            values,
            p,
            declared_norm: declared,
        })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn declared_norm(&self) -> f64 {
        self.declared_norm
    }

    pub fn norm(&self) -> f64 {
        lp_norm(&self.values, self.p)
    }

    pub fn sup_norm(&self) -> f64 {
        lp_norm(&self.values, f64::INFINITY)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// `βᵢ`, zero past the truncation.
    pub fn get(&self, i: usize) -> C64 {
        self.values.get(i).copied().unwrap_or_default()
    }
}

/// A potential family evaluated at the nodes of one grid: column `i` holds
/// `vᵢ(x)` for every node `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFamily {
    grid: Grid,
    columns: Vec<Vec<C64>>,
}

impl SampledFamily {
    pub fn new(grid: Grid, columns: Vec<Vec<C64>>) -> Result<Self> {
        for (i, col) in columns.iter().enumerate() {
            if col.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "term {i} has {} samples for a grid of {} nodes",
                    col.len(),
                    grid.len()
                )));
            }
            if let Some(k) = col
                .iter()
                .position(|z| !(z.re.is_finite() && z.im.is_finite()))
            {
                return Err(Error::NonFinite(format!(
                    "term {i} at node {:?}",
                    grid.node(k)
                )));
            }
        }
        Ok(SampledFamily { grid, columns })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &[C64] {
        &self.columns[i]
    }

    pub fn is_real(&self) -> bool {
        self.columns.iter().flatten().all(|z| z.im == 0.0)
    }

    /// `Vᵢ` as a diagonal operator.
    pub fn term_operator(&self, i: usize) -> DiscreteOperator {
        DiscreteOperator::diagonal(&self.columns[i])
    }

    /// Pointwise `Σᵢ βᵢ vᵢ(x)`.
    pub fn weighted_sum(&self, beta: &CouplingSeq) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.grid.len()];
        for (i, col) in self.columns.iter().enumerate() {
            let b = beta.get(i);
            if b != C64::new(0.0, 0.0) {
                for (o, v) in out.iter_mut().zip(col) {
                    *o += b * v;
                }
            }
        }
        out
    }
}

/// Standard `2m+1`-point Laplacian `−Δ` with Dirichlet ghost nodes.
pub fn build_laplacian(grid: &Grid) -> DiscreteOperator {
    let n = grid.len();
    let inv_h2: Vec<f64> = (0..grid.dim()).map(|k| grid.spacing(k).powi(-2)).collect();
    let diag: f64 = 2.0 * inv_h2.iter().sum::<f64>();
    let mut triplets = Vec::with_capacity(n * (2 * grid.dim() + 1));
    for idx in 0..n {
        triplets.push((idx, idx, C64::new(diag, 0.0)));
        let multi = grid.multi_index(idx);
        let mut stride = 1;
        for k in 0..grid.dim() {
            let off = C64::new(-inv_h2[k], 0.0);
            if multi[k] > 0 {
                triplets.push((idx, idx - stride, off));
            }
            if multi[k] + 1 < grid.points()[k] {
                triplets.push((idx, idx + stride, off));
            }
            stride *= grid.points()[k];
        }
    }
    DiscreteOperator::from_triplets(n, triplets).expect("stencil indices are in range")
}

/// `H(β) = H₀ + Σᵢ βᵢVᵢ`. Missing trailing `βᵢ` count as zero; surplus `βᵢ`
/// beyond the family length are rejected.
pub fn assemble_hamiltonian(
    h0: &DiscreteOperator,
    family: &SampledFamily,
    beta: &CouplingSeq,
) -> Result<DiscreteOperator> {
    if family.grid().len() != h0.dim() {
        return Err(Error::GridMismatch(format!(
            "family sampled on {} nodes, operator has dimension {}",
            family.grid().len(),
            h0.dim()
        )));
    }
    if beta.len() > family.len() {
        return Err(Error::InvalidInput(format!(
            "{} couplings for a family of {} terms",
            beta.len(),
            family.len()
        )));
    }
    let potential = family.weighted_sum(beta);
    let mut h = DiscreteOperator::from_triplets(
        h0.dim(),
        h0.triplets()
            .chain(potential.iter().enumerate().map(|(i, &v)| (i, i, v))),
    )?;
    h.hermitian = h0.is_hermitian() && beta.is_real() && family.is_real();
    Ok(h)
}

/// `‖ψ‖ + ‖H₀ψ‖`.
pub fn graph_norm(h0: &DiscreteOperator, psi: &[C64]) -> Result<f64> {
    let h_psi = h0.apply(psi)?;
    Ok(norm2(psi) + norm2(&h_psi))
}
