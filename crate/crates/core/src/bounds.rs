//! Relative bounds, the overlap norm bound for `Σ|Vᵢ|`, the `a < 1`
//! stability test and resolvent-set certification.

use crate::dense::{hermitian_eigen, inner, norm2};
use crate::lattice::{DiscreteOperator, SampledFamily};
use crate::rng::{gaussian_vector, seeded};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// Smallest grid `a` whose `b(a)` stays under the cap.
    Empirical,
    /// No grid `a` met the cap; the largest grid point is reported.
    TradeoffOnly,
    /// Supplied by the caller.
    Declared,
}

/// Norms of one probe vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeNorms {
    pub psi: f64,
    pub h0_psi: f64,
    pub v_psi: f64,
}

/// `‖Vψ‖ ≤ a‖H₀ψ‖ + b‖ψ‖`. Estimated values are lower estimates of the true
/// infimal `a`: only finitely many probes are tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeBound {
    pub a: f64,
    pub b: f64,
    pub probe_count: usize,
    pub method: BoundMethod,
    /// `(a, b(a))` for every grid point.
    pub curve: Vec<(f64, f64)>,
    #[serde(skip)]
    pub probes: Vec<ProbeNorms>,
}

impl RelativeBound {
    pub fn declared(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "relative bound needs finite a, b ≥ 0, got ({a}, {b})"
            )));
        }
        Ok(RelativeBound {
            a,
            b,
            probe_count: 0,
            method: BoundMethod::Declared,
            curve: vec![(a, b)],
            probes: Vec::new(),
        })
    }

    /// Largest violation `‖Vψ‖ − a‖H₀ψ‖ − b‖ψ‖` over the recorded probes.
    pub fn worst_slack(&self) -> f64 {
        self.probes
            .iter()
            .map(|p| p.v_psi - self.a * p.h0_psi - self.b * p.psi)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeBoundOptions {
    pub probes: usize,
    pub a_grid: Vec<f64>,
    pub b_cap: f64,
    pub seed: u64,
}

impl Default for RelativeBoundOptions {
    fn default() -> Self {
        RelativeBoundOptions {
            probes: 64,
            a_grid: vec![
                0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0,
            ],
            b_cap: 1e6,
            seed: 0,
        }
    }
}

/// Dimension up to which low eigenvectors of `H₀` come from a dense solve.
pub const DENSE_PROBE_LIMIT: usize = 1500;

fn low_energy_probes(
    h0: &DiscreteOperator,
    count: usize,
    rng: &mut crate::rng::Rng,
) -> Result<Vec<Vec<C64>>> {
    let n = h0.dim();
    if count == 0 {
        return Ok(Vec::new());
    }
    if h0.is_hermitian() && n <= DENSE_PROBE_LIMIT {
        let (_, vecs) = hermitian_eigen(&h0.to_dense());
        return Ok((0..count.min(n))
            .map(|j| vecs.column(j).iter().copied().collect())
            .collect());
    }
    // Damped smoothing sweeps suppress the high end of the spectrum.
    let scale = h0.norm_inf().max(f64::MIN_POSITIVE);
    (0..count)
        .map(|_| {
            let mut psi = gaussian_vector(rng, n);
            for _ in 0..64 {
                let h = h0.apply(&psi)?;
                for (p, q) in psi.iter_mut().zip(&h) {
                    *p -= *q / scale;
                }
            }
            Ok(psi)
        })
        .collect()
}

pub fn estimate_relative_bound(
    v: &DiscreteOperator,
    h0: &DiscreteOperator,
    opts: &RelativeBoundOptions,
) -> Result<RelativeBound> {
    if v.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            got: v.dim(),
        });
    }
    if opts.probes < 32 {
        return Err(Error::InvalidInput(format!(
            "need at least 32 probes, got {}",
            opts.probes
        )));
    }
    if opts.a_grid.is_empty() || opts.a_grid.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidInput(
            "a_grid must be non-empty with finite a ≥ 0".into(),
        ));
    }
    let mut rng = seeded(opts.seed);
    let n = h0.dim();
    let mut vectors = low_energy_probes(h0, opts.probes / 2, &mut rng)?;
    while vectors.len() < opts.probes {
        vectors.push(gaussian_vector(&mut rng, n));
    }
    let probes: Vec<ProbeNorms> = vectors
        .par_iter()
        .map(|psi| {
            Ok(ProbeNorms {
                psi: norm2(psi),
                h0_psi: norm2(&h0.apply(psi)?),
                v_psi: norm2(&v.apply(psi)?),
            })
        })
        .collect::<Result<_>>()?;
    let probes: Vec<ProbeNorms> = probes.into_iter().filter(|p| p.psi > 0.0).collect();

    let mut grid = opts.a_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let curve: Vec<(f64, f64)> = grid
        .iter()
        .map(|&a| {
            let b = probes
                .iter()
                .map(|p| ((p.v_psi - a * p.h0_psi) / p.psi).max(0.0))
                .fold(0.0, f64::max);
            (a, b)
        })
        .collect();
    let (a, b, method) = match curve.iter().find(|(_, b)| *b <= opts.b_cap) {
        Some(&(a, b)) => (a, b, BoundMethod::Empirical),
        None => {
            let &(a, b) = curve.last().expect("non-empty grid");
            (a, b, BoundMethod::TradeoffOnly)
        }
    };
    Ok(RelativeBound {
        a,
        b,
        probe_count: probes.len(),
        method,
        curve,
        probes,
    })
}

/// Interval `[E_min, E_max]` containing the spectrum of a Hermitian `H₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBox {
    pub e_min: f64,
    pub e_max: f64,
}

impl SpectrumBox {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self> {
        if !(e_min <= e_max && e_min.is_finite() && e_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "invalid spectrum box [{e_min}, {e_max}]"
            )));
        }
        Ok(SpectrumBox { e_min, e_max })
    }

    /// Gershgorin enclosure.
    pub fn gershgorin(op: &DiscreteOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::InvalidInput(
                "spectrum box needs a Hermitian operator".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut radius = vec![0.0; op.dim()];
        for (i, j, v) in op.triplets() {
            if i != j {
                radius[i] += v.norm();
            }
        }
        for (i, d) in op.diagonal_entries().into_iter().enumerate() {
            lo = lo.min(d.re - radius[i]);
            hi = hi.max(d.re + radius[i]);
        }
        if op.dim() == 0 {
            return SpectrumBox::new(0.0, 0.0);
        }
        SpectrumBox::new(lo, hi)
    }

    pub fn contains(&self, e: f64) -> bool {
        self.e_min <= e && e <= self.e_max
    }
}

/// `a < 1`, the condition under which `H₀ + V` stays closed (selfadjoint for
/// symmetric `V`) on the domain of `H₀`.
pub fn kato_stability_check(rb: &RelativeBound) -> bool {
    rb.a < 1.0
}

/// `sup_{E ∈ box} |E − λ|⁻¹` and `sup_{E ∈ box} |E| / |E − λ|`.
fn resolvent_sups(bx: &SpectrumBox, lambda: C64) -> (f64, f64) {
    let (x, y) = (lambda.re, lambda.im);
    let nearest = x.clamp(bx.e_min, bx.e_max);
    let s1 = 1.0 / C64::new(nearest - x, y).norm();
    let ratio = |e: f64| e.abs() / C64::new(e - x, y).norm();
    let mut s2 = ratio(bx.e_min).max(ratio(bx.e_max));
    if x != 0.0 {
        // Interior critical point of E² / ((E − x)² + y²).
        let e_star = (x * x + y * y) / x;
        if bx.contains(e_star) {
            s2 = s2.max(ratio(e_star));
        }
    }
    (s1, s2)
}

/// `1 − (b·sup|E − λ|⁻¹ + a·sup|E|/|E − λ|)`. A positive margin bounds
/// `‖V(H₀ − λ)⁻¹‖ < 1`, so `λ` lies in the resolvent set of `H₀ + V`.
pub fn resolvent_margin(rb: &RelativeBound, bx: &SpectrumBox, lambda: C64) -> Result<f64> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::NonFinite("λ".into()));
    }
    if lambda.im == 0.0 && bx.contains(lambda.re) {
        return Err(Error::InvalidInput(format!(
            "λ = {lambda} lies inside the spectrum box"
        )));
    }
    let (s1, s2) = resolvent_sups(bx, lambda);
    Ok(1.0 - (rb.b * s1 + rb.a * s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSearch {
    pub y_min: f64,
    pub y_cap: f64,
}

impl Default for ResolventSearch {
    fn default() -> Self {
        ResolventSearch {
            y_min: 1e-3,
            y_cap: 1e12,
        }
    }
}

/// Smallest certified `λ = i·y` (to bisection accuracy) with positive margin.
pub fn find_resolvent_point(
    rb: &RelativeBound,
    bx: &SpectrumBox,
    search: &ResolventSearch,
) -> Result<C64> {
    if rb.a >= 1.0 {
        // For an unbounded H₀ the a-term tends to a as y → ∞; certification
        // on a finite box alone would not carry over.
        return Err(Error::Certification(format!(
            "relative bound a = {} ≥ 1 cannot certify a resolvent point",
            rb.a
        )));
    }
    if !(search.y_min > 0.0 && search.y_cap >= search.y_min) {
        return Err(Error::InvalidInput("need 0 < y_min ≤ y_cap".into()));
    }
    let margin = |y: f64| resolvent_margin(rb, bx, C64::new(0.0, y));
    if margin(search.y_min)? > 0.0 {
        return Ok(C64::new(0.0, search.y_min));
    }
    let mut lo = search.y_min;
    let mut hi = search.y_min;
    loop {
        hi = (2.0 * hi).min(search.y_cap);
        if margin(hi)? > 0.0 {
            break;
        }
        if hi >= search.y_cap {
            return Err(Error::Certification(format!(
                "no positive margin for y ≤ {}",
                search.y_cap
            )));
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(C64::new(0.0, hi))
}

/// Largest singular value. Diagonal operators are read off exactly, others
/// use power iteration on `A*A`.
pub fn operator_norm(op: &DiscreteOperator, seed: u64) -> Result<f64> {
    if op.triplets().all(|(i, j, _)| i == j) {
        return Ok(op
            .diagonal_entries()
            .iter()
            .map(|d| d.norm())
            .fold(0.0, f64::max));
    }
    let n = op.dim();
    let adjoint =
        DiscreteOperator::from_triplets(n, op.triplets().map(|(i, j, v)| (j, i, v.conj())))?;
    let mut rng = seeded(seed);
    let mut x = gaussian_vector(&mut rng, n);
    let mut estimate = 0.0;
    for _ in 0..500 {
        let nx = norm2(&x);
        if nx == 0.0 {
            return Ok(0.0);
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = op.apply(&x)?;
        let next = norm2(&ax);
        x = adjoint.apply(&ax)?;
        if (next - estimate).abs() <= 1e-14 * next {
            return Ok(next);
        }
        estimate = next;
    }
    Ok(estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormChain {
    /// `v = supᵢ ‖Vᵢ‖`.
    pub v: f64,
    pub n0: usize,
    /// `v·max(n0, 1)`.
    pub bound: f64,
    /// `v·(n0 + 1)`: a point can lie in one support and all its neighbors.
    pub overlap_bound: f64,
    /// `‖Σ_{i≤n}|Vᵢ|‖` for `n = 1..len`.
    pub partial_norms: Vec<f64>,
    /// Norm of the full truncated sum.
    pub norm: f64,
    pub monotone: bool,
    pub holds: bool,
    pub holds_overlap: bool,
}

/// Norm of the truncated `Σ|Vᵢ|` against the overlap bound, given the
/// family's intersection number `n0`.
pub fn uniform_sum_norm_bound(family: &SampledFamily, n0: Option<usize>) -> Result<NormChain> {
    let n0 =
        n0.ok_or_else(|| Error::HypothesesViolated("intersection number n0 unavailable".into()))?;
    let len = family.grid().len();
    let mut acc = vec![0.0f64; len];
    let mut v = 0.0f64;
    let mut partial_norms = Vec::with_capacity(family.len());
    for i in 0..family.len() {
        let mut col_max = 0.0f64;
        for (a, z) in acc.iter_mut().zip(family.column(i)) {
            let m = z.norm();
            *a += m;
            col_max = col_max.max(m);
        }
        v = v.max(col_max);
        let op =
            DiscreteOperator::diagonal(&acc.iter().map(|&a| C64::new(a, 0.0)).collect::<Vec<_>>());
        partial_norms.push(operator_norm(&op, 0)?);
    }
    let norm = partial_norms.last().copied().unwrap_or(0.0);
    let bound = v * n0.max(1) as f64;
    let overlap_bound = v * (n0 + 1) as f64;
    Ok(NormChain {
        v,
        n0,
        bound,
        overlap_bound,
        monotone: partial_norms.windows(2).all(|w| w[0] <= w[1]),
        holds: norm <= bound + 1e-8,
        holds_overlap: norm <= overlap_bound + 1e-8,
        partial_norms,
        norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakSumCheck {
    /// `(ψ | Σ_{i≤n} Vᵢ ψ)`.
    pub partial_sums: Vec<C64>,
    /// `max_{m<n} |s_n − s_m|`.
    pub max_increment: f64,
    /// `v·max(n0, 1)·‖ψ‖²`.
    pub bound: f64,
    /// `v·(n0 + 1)·‖ψ‖²`.
    pub overlap_bound: f64,
    pub holds: bool,
    pub holds_overlap: bool,
}

/// Partial sums of the quadratic form `(ψ | Σ Vᵢ ψ)`; every block of
/// consecutive terms is bounded by the overlap bound times `‖ψ‖²`.
pub fn weak_sum_check(family: &SampledFamily, n0: usize, psi: &[C64]) -> Result<WeakSumCheck> {
    if psi.len() != family.grid().len() {
        return Err(Error::DimensionMismatch {
            expected: family.grid().len(),
            got: psi.len(),
        });
    }
    let mut v = 0.0f64;
    let mut s = C64::new(0.0, 0.0);
    let mut partial_sums = Vec::with_capacity(family.len());
    for i in 0..family.len() {
        let col = family.column(i);
        v = v.max(col.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let vpsi: Vec<C64> = col.iter().zip(psi).map(|(a, b)| a * b).collect();
        s += inner(psi, &vpsi);
        partial_sums.push(s);
    }
    let mut max_increment = 0.0f64;
    let start = std::iter::once(C64::new(0.0, 0.0)).chain(partial_sums.iter().copied());
    for (m, sm) in start.enumerate() {
        for sn in &partial_sums[m..] {
            max_increment = max_increment.max((sn - sm).norm());
        }
    }
    let psi2 = norm2(psi).powi(2);
    let bound = v * n0.max(1) as f64 * psi2;
    let overlap_bound = v * (n0 + 1) as f64 * psi2;
    Ok(WeakSumCheck {
        partial_sums,
        max_increment,
        bound,
        overlap_bound,
        holds: max_increment <= bound * (1.0 + 1e-12) + 1e-12,
        holds_overlap: max_increment <= overlap_bound * (1.0 + 1e-12) + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::smallest_singular_value;
    use crate::lattice::{build_laplacian, Grid};
    use nalgebra::DMatrix;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn laplacian(n: usize) -> DiscreteOperator {
        build_laplacian(&Grid::cube(1, 0.0, 1.0, n).unwrap())
    }

    #[test]
    fn zero_and_constant_perturbations() {
        let h0 = laplacian(40);
        let opts = RelativeBoundOptions::default();
        let rb = estimate_relative_bound(&DiscreteOperator::zero(40), &h0, &opts).unwrap();
        assert_eq!((rb.a, rb.b), (0.0, 0.0));
        let rb =
            estimate_relative_bound(&DiscreteOperator::identity(40).scaled(c(-2.5)), &h0, &opts)
                .unwrap();
        assert_eq!(rb.a, 0.0);
        assert!((rb.b - 2.5).abs() < 1e-10);
        assert!(rb.worst_slack() <= 1e-10);
        assert!(estimate_relative_bound(&DiscreteOperator::zero(3), &h0, &opts).is_err());
        let few = RelativeBoundOptions { probes: 8, ..opts };
        assert!(estimate_relative_bound(&DiscreteOperator::zero(40), &h0, &few).is_err());
    }

    #[test]
    fn bounded_potential_tradeoff() {
        let h0 = laplacian(60);
        let diag: Vec<C64> = (0..60).map(|i| c(3.0 * ((i as f64) * 0.3).sin())).collect();
        let v = DiscreteOperator::diagonal(&diag);
        let sup = diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let opts = RelativeBoundOptions {
            b_cap: sup,
            ..Default::default()
        };
        let rb = estimate_relative_bound(&v, &h0, &opts).unwrap();
        assert_eq!(rb.method, BoundMethod::Empirical);
        assert_eq!(rb.a, 0.0);
        assert!(rb.b <= sup + 1e-12);
        assert!(rb.worst_slack() <= 1e-10);
        // b(a) is nonincreasing in a.
        assert!(rb.curve.windows(2).all(|w| w[1].1 <= w[0].1));
        // Tight cap: a strictly positive a is needed.
        let tight = RelativeBoundOptions {
            b_cap: 0.1 * rb.b,
            ..Default::default()
        };
        let rb2 = estimate_relative_bound(&v, &h0, &tight).unwrap();
        assert!(rb2.a > 0.0);
        assert!(rb2.worst_slack() <= 1e-10);
    }

    #[test]
    fn stability_check_is_strict() {
        assert!(kato_stability_check(
            &RelativeBound::declared(0.0, 5.0).unwrap()
        ));
        assert!(!kato_stability_check(
            &RelativeBound::declared(1.0, 0.0).unwrap()
        ));
        assert!(kato_stability_check(
            &RelativeBound::declared(0.3, 100.0).unwrap()
        ));
        assert!(RelativeBound::declared(-0.1, 0.0).is_err());
    }

    #[test]
    fn gershgorin_contains_spectrum() {
        let h0 = laplacian(30);
        let bx = SpectrumBox::gershgorin(&h0).unwrap();
        let (ev, _) = hermitian_eigen(&h0.to_dense());
        assert!(ev.iter().all(|&e| bx.contains(e)));
    }

    fn grid_margin(rb: &RelativeBound, bx: &SpectrumBox, lambda: C64) -> f64 {
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for k in 0..=200_000 {
            let e = bx.e_min + (bx.e_max - bx.e_min) * k as f64 / 200_000.0;
            let d = (c(e) - lambda).norm();
            s1 = s1.max(1.0 / d);
            s2 = s2.max(e.abs() / d);
        }
        1.0 - (rb.b * s1 + rb.a * s2)
    }

    #[test]
    fn margin_closed_form_matches_dense_grid() {
        let rb = RelativeBound::declared(0.1, 0.1).unwrap();
        let bx = SpectrumBox::new(0.0, 1.0).unwrap();
        let lam = C64::new(0.0, 10.0);
        let m = resolvent_margin(&rb, &bx, lam).unwrap();
        assert!(m > 0.0);
        assert!((m - grid_margin(&rb, &bx, lam)).abs() < 1e-9);
        // Interior critical point of |E|/|E − λ|.
        let bx = SpectrumBox::new(-3.0, 5.0).unwrap();
        for lam in [
            C64::new(1.0, 1.0),
            C64::new(-2.0, 0.5),
            C64::new(6.0, 0.0),
            C64::new(0.0, 2.0),
        ] {
            let m = resolvent_margin(&rb, &bx, lam).unwrap();
            assert!((m - grid_margin(&rb, &bx, lam)).abs() < 1e-6, "{lam}");
        }
        assert_eq!(
            resolvent_margin(&RelativeBound::declared(0.0, 0.0).unwrap(), &bx, lam).unwrap(),
            1.0
        );
        assert!(resolvent_margin(&rb, &bx, c(1.0)).is_err());
    }

    #[test]
    fn margin_diverges_near_spectrum() {
        let rb = RelativeBound::declared(0.0, 0.5).unwrap();
        let bx = SpectrumBox::new(0.0, 1.0).unwrap();
        let margins: Vec<f64> = [1.0, 0.1, 0.01, 1e-4]
            .iter()
            .map(|d| resolvent_margin(&rb, &bx, c(1.0 + d)).unwrap())
            .collect();
        assert!(margins.windows(2).all(|w| w[1] < w[0]));
        assert!(margins[3] < -1000.0);
    }

    #[test]
    fn resolvent_point_search() {
        let bx = SpectrumBox::new(-1.0, 1.0).unwrap();
        let search = ResolventSearch::default();
        let zero = RelativeBound::declared(0.0, 0.0).unwrap();
        assert_eq!(
            find_resolvent_point(&zero, &bx, &search).unwrap(),
            C64::new(0.0, search.y_min)
        );
        let rb = RelativeBound::declared(0.2, 0.3).unwrap();
        let lam = find_resolvent_point(&rb, &bx, &search).unwrap();
        assert!(resolvent_margin(&rb, &bx, lam).unwrap() > 0.0);
        assert!(resolvent_margin(&rb, &bx, lam * 0.999).unwrap() <= 1e-6);
        assert!(
            find_resolvent_point(&RelativeBound::declared(1.0, 0.0).unwrap(), &bx, &search)
                .is_err()
        );
        let capped = ResolventSearch {
            y_min: 1e-3,
            y_cap: 0.01,
        };
        assert!(find_resolvent_point(&rb, &bx, &capped).is_err());
    }

    #[test]
    fn positive_margin_means_invertible() {
        let h0 = laplacian(20);
        let bx = SpectrumBox::gershgorin(&h0).unwrap();
        let v = DiscreteOperator::diagonal(
            &(0..20)
                .map(|i| c(if i % 3 == 0 { 4.0 } else { -1.0 }))
                .collect::<Vec<_>>(),
        );
        let rb = RelativeBound::declared(0.0, 4.0).unwrap();
        let lam = find_resolvent_point(&rb, &bx, &ResolventSearch::default()).unwrap();
        let h = h0.add_scaled(c(1.0), &v).unwrap().shifted(lam);
        assert!(smallest_singular_value(&h.to_dense()) > 1e-10);
    }

    fn family(cols: Vec<Vec<f64>>) -> SampledFamily {
        let n = cols[0].len();
        let grid = Grid::cube(1, 0.0, 1.0, n).unwrap();
        SampledFamily::new(
            grid,
            cols.into_iter()
                .map(|c| c.into_iter().map(C64::from).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn norm_chain_cases() {
        let single = family(vec![vec![0.0, 2.0, 2.0, 0.0]]);
        let ch = uniform_sum_norm_bound(&single, Some(0)).unwrap();
        assert_eq!((ch.bound, ch.norm), (2.0, 2.0));
        assert!(ch.holds);
        assert!(uniform_sum_norm_bound(&single, None).is_err());

        let disjoint = family(
            (0..10)
                .map(|i| (0..10).map(|k| if k == i { 1.5 } else { 0.0 }).collect())
                .collect(),
        );
        let ch = uniform_sum_norm_bound(&disjoint, Some(0)).unwrap();
        assert_eq!(ch.norm, 1.5);
        assert!(ch.holds && ch.monotone);

        // Chain where each support meets its two neighbors but no point lies
        // in three supports.
        let chain = family(
            (0..6)
                .map(|i| {
                    (0..14)
                        .map(|k| {
                            if k >= 2 * i && k <= 2 * i + 2 {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect(),
        );
        let ch = uniform_sum_norm_bound(&chain, Some(2)).unwrap();
        let dense: DMatrix<C64> = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            14,
            (0..14).map(|k| c((0..6).filter(|i| k >= 2 * i && k <= 2 * i + 2).count() as f64)),
        ));
        assert_eq!(ch.norm, crate::dense::spectral_norm(&dense));
        assert!(ch.norm <= 2.0);
        assert!(ch.holds && ch.monotone);
    }

    #[test]
    fn two_overlapping_terms_exceed_v_n0() {
        // n0 = 1 but the common point carries both terms.
        let pair = family(vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let ch = uniform_sum_norm_bound(&pair, Some(1)).unwrap();
        assert_eq!(ch.norm, 2.0);
        assert!(!ch.holds);
        assert!(ch.holds_overlap);
    }

    #[test]
    fn weak_sums_are_cauchy() {
        let chain = family(
            (0..8)
                .map(|i| {
                    (0..18)
                        .map(|k| {
                            if k >= 2 * i && k <= 2 * i + 2 {
                                0.7
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect(),
        );
        let psi = gaussian_vector(&mut seeded(4), 18);
        let w = weak_sum_check(&chain, 2, &psi).unwrap();
        assert_eq!(w.partial_sums.len(), 8);
        assert!(w.holds);
        assert!(w.max_increment > 0.0);
    }

    #[test]
    fn operator_norm_power_iteration() {
        let m = DMatrix::from_fn(7, 7, |i, j| c(((i * 3 + j * 5) % 7) as f64 - 3.0));
        let op = DiscreteOperator::from_dense(&m).unwrap();
        let exact = crate::dense::spectral_norm(&m);
        assert!((operator_norm(&op, 1).unwrap() - exact).abs() < 1e-9 * exact);
    }
}
