//! Tracking one simple eigenvalue `E(β)` through the projector `P(β)`.

use super::contour::{radius_of_convergence, Contour, RadiusEstimate};
use super::family::{Direction, OperatorFamily};
use super::projector::apply_projector;
use super::taylor::{taylor_along, TaylorOptions};
use crate::dense::{hermitian_eigen, inner, norm2};
use crate::lattice::DiscreteOperator;
use crate::rng::{gaussian_vector, real_gaussian_vector, seeded};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackOptions {
    pub nodes: usize,
    /// Accepted `|tr P − 1|`.
    pub trace_tolerance: f64,
    /// Accepted `‖Hψ − Eψ‖ / (‖ψ‖ max(‖H‖∞, 1))`.
    pub residual_tolerance: f64,
    /// Smallest accepted `‖Pψ₀‖ / ‖ψ₀‖`.
    pub min_overlap: f64,
    /// Random vectors added to `ψ₀` when probing the rank of `P`.
    pub probes: usize,
    pub max_halvings: usize,
    pub seed: u64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            nodes: 64,
            trace_tolerance: 1e-6,
            residual_tolerance: 1e-10,
            min_overlap: 1e-3,
            probes: 4,
            max_halvings: 20,
            seed: 0,
        }
    }
}

/// Pivots `|R_kk|` of the pivoted QR of `PΩ` above this count toward the
/// rank of `P`.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Below this `|φ(ψ)| / (‖φ‖‖ψ‖)` the reference functional is replaced.
pub const FUNCTIONAL_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `φ = (ψ₀ | ·)`.
    Reference,
    /// A seeded Gaussian functional.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedState {
    pub energy: C64,
    /// `P ψ₀`.
    pub vector: Vec<C64>,
    pub trace: C64,
    /// `‖PQ − Q‖` on an orthonormal basis `Q` of the range.
    pub defect: f64,
    pub residual: f64,
    pub contour: Contour,
    pub functional: Functional,
}

fn real_block(v: &[C64]) -> bool {
    v.iter().all(|z| z.im == 0.0)
}

/// `E(β)` inside `contour`, which must enclose exactly one simple eigenvalue
/// of `op`. `E = φ(Hψ)/φ(ψ)` with `ψ = Pψ₀`.
pub fn track_eigenvalue(
    op: &DiscreteOperator,
    contour: &Contour,
    psi0: &[C64],
    opts: &TrackOptions,
) -> Result<TrackedState> {
    let n = op.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let n0 = norm2(psi0);
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidInput(
            "reference vector must be nonzero and finite".into(),
        ));
    }
    let mut rng = seeded(opts.seed);
    let real = real_block(psi0);
    let mut block = DMatrix::zeros(n, 1 + opts.probes);
    block
        .column_mut(0)
        .copy_from_slice(&psi0.iter().map(|z| z / n0).collect::<Vec<_>>());
    for k in 1..=opts.probes {
        let v: Vec<C64> = if real {
            real_gaussian_vector(&mut rng, n)
                .into_iter()
                .map(C64::from)
                .collect()
        } else {
            gaussian_vector(&mut rng, n)
        };
        let nv = norm2(&v);
        block
            .column_mut(k)
            .copy_from_slice(&v.iter().map(|z| z / nv).collect::<Vec<_>>());
    }
    let y = apply_projector(op, contour, &block)?;
    // Column-pivoted QR rather than a left-only SVD: nalgebra's U-only SVD
    // path loses accuracy on these rank-deficient blocks.
    let qr = y.clone().col_piv_qr();
    let r = qr.r();
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&k| r[(k, k)].norm() > RANK_THRESHOLD)
        .count();
    if rank == 0 {
        return Err(Error::TraceNotOne { trace: 0.0 });
    }
    let q = qr.q().columns(0, rank).into_owned();
    let pq = apply_projector(op, contour, &q)?;
    let trace = (q.adjoint() * &pq).trace();
    let defect = crate::dense::spectral_norm(&(&pq - &q));
    if (trace - 1.0).norm() > opts.trace_tolerance {
        return Err(Error::TraceNotOne { trace: trace.re });
    }
    let psi: Vec<C64> = y.column(0).iter().map(|z| z * n0).collect();
    let npsi = norm2(&psi);
    if npsi < opts.min_overlap * n0 {
        return Err(Error::LeftNeighborhood { overlap: npsi / n0 });
    }
    let hpsi = op.apply(&psi)?;
    let mut functional = Functional::Reference;
    let mut phi: Vec<C64> = psi0.to_vec();
    if inner(&phi, &psi).norm() < FUNCTIONAL_FLOOR * n0 * npsi {
        functional = Functional::Random;
        phi = gaussian_vector(&mut seeded(opts.seed ^ 0x9e37_79b9_7f4a_7c15), n);
    }
    let energy = inner(&phi, &hpsi) / inner(&phi, &psi);
    let r: Vec<C64> = hpsi.iter().zip(&psi).map(|(h, p)| h - energy * p).collect();
    let residual = norm2(&r) / (npsi * op.norm_inf().max(1.0));
    if !(residual <= opts.residual_tolerance) {
        return Err(Error::Residual {
            residual,
            tolerance: opts.residual_tolerance,
        });
    }
    Ok(TrackedState {
        energy,
        vector: psi,
        trace,
        defect,
        residual,
        contour: *contour,
        functional,
    })
}

/// Dimension up to which a start level is located by a dense eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrackStart {
    /// The `k`-th lowest eigenvalue (from 0) of a Hermitian `H(β₀)`.
    Level(usize),
    /// A contour chosen by the caller.
    Target {
        energy: [f64; 2],
        radius: f64,
        #[serde(default)]
        vector: Option<Vec<[f64; 2]>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub energy: C64,
    pub vector: Vec<C64>,
    /// Half the distance to the nearest other eigenvalue for `Level`.
    pub radius: f64,
}

pub fn resolve_start(op: &DiscreteOperator, start: &TrackStart, seed: u64) -> Result<StartPoint> {
    let n = op.dim();
    match start {
        TrackStart::Level(k) => {
            if !op.is_hermitian() {
                return Err(Error::InvalidInput(
                    "level start needs a Hermitian operator".into(),
                ));
            }
            if n > DENSE_EIGEN_LIMIT {
                return Err(Error::Budget {
                    what: "dense eigensolver dimension",
                    needed: n,
                    budget: DENSE_EIGEN_LIMIT,
                });
            }
            if *k >= n {
                return Err(Error::InvalidInput(format!(
                    "level {k} of a {n}-dimensional operator"
                )));
            }
            let (ev, vecs) = hermitian_eigen(&op.to_dense());
            let below = if *k > 0 {
                ev[*k] - ev[k - 1]
            } else {
                f64::INFINITY
            };
            let above = if k + 1 < n {
                ev[k + 1] - ev[*k]
            } else {
                f64::INFINITY
            };
            let gap = below.min(above);
            if gap <= 1e-10 * ev.iter().fold(1.0f64, |a, e| a.max(e.abs())) {
                return Err(Error::InvalidInput(format!("level {k} is degenerate")));
            }
            let radius = if gap.is_finite() {
                0.5 * gap
            } else {
                ev[*k].abs().max(1.0)
            };
            let mut vector: Vec<C64> = vecs.column(*k).iter().copied().collect();
            // Real symmetric input has real eigenvectors up to a phase.
            if op.triplets().all(|(_, _, v)| v.im == 0.0) {
                let pivot = vector
                    .iter()
                    .copied()
                    .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                    .unwrap_or_default();
                let phase = pivot.conj() / pivot.norm();
                vector
                    .iter_mut()
                    .for_each(|z| *z = C64::new((*z * phase).re, 0.0));
            }
            Ok(StartPoint {
                energy: C64::new(ev[*k], 0.0),
                vector,
                radius,
            })
        }
        TrackStart::Target {
            energy,
            radius,
            vector,
        } => {
            let vector = match vector {
                Some(v) if v.len() == n => v.iter().map(|z| C64::new(z[0], z[1])).collect(),
                Some(v) => {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    })
                }
                None => gaussian_vector(&mut seeded(seed), n),
            };
            Ok(StartPoint {
                energy: C64::new(energy[0], energy[1]),
                vector,
                radius: *radius,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub zeta: C64,
    pub energy: C64,
    pub residual: f64,
    pub trace_defect: f64,
    pub center: C64,
    pub radius: f64,
    /// Step halvings spent reaching this sample.
    #[serde(default)]
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPath {
    pub base: Vec<C64>,
    pub direction: Vec<C64>,
    pub samples: Vec<PathSample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<RadiusEstimate>,
    pub rank_one: bool,
    pub contour_respected: bool,
    pub halvings: usize,
}

impl EigenPath {
    /// `zeta_re, zeta_im, energy_re, energy_im, residual, trace_defect`
    /// under `#` header lines.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema: {}\n", crate::SCHEMA_VERSION);
        out.push_str("# zeta: offset along the direction, beta = base + zeta*t\n");
        out.push_str("# energy: tracked eigenvalue E(beta), same units as H\n");
        out.push_str("# residual: |H psi - E psi| / (|psi| max(|H|_inf, 1)), dimensionless\n");
        out.push_str("# trace_defect: |tr P - 1| of the Riesz projector, dimensionless\n");
        out.push_str("zeta_re,zeta_im,energy_re,energy_im,residual,trace_defect\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                s.zeta.re, s.zeta.im, s.energy.re, s.energy.im, s.residual, s.trace_defect
            );
        }
        out
    }
}

fn sample_of(zeta: C64, st: &TrackedState) -> PathSample {
    PathSample {
        zeta,
        energy: st.energy,
        residual: st.residual,
        trace_defect: (st.trace - 1.0).norm(),
        center: st.contour.center,
        radius: st.contour.radius,
        halvings: 0,
    }
}

fn unit(v: &[C64]) -> Vec<C64> {
    let n = norm2(v);
    v.iter().map(|z| z / n).collect()
}

/// Follows `E(β₀ + s t)` for real `s` from `from` to `to`, recording `steps`
/// equally spaced samples. Each step re-centers the contour at the last
/// accepted energy and uses the last eigenvector as reference; a failed
/// step is retried at half length, and a contour that captured a second
/// eigenvalue is also halved in radius.
#[allow(clippy::too_many_arguments)]
pub fn sweep_eigenvalue(
    family: &dyn OperatorFamily,
    base: &[C64],
    direction: &Direction,
    from: f64,
    to: f64,
    steps: usize,
    start: &TrackStart,
    opts: &TrackOptions,
) -> Result<EigenPath> {
    let (path, failure) =
        sweep_eigenvalue_partial(family, base, direction, from, to, steps, start, opts)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(path),
    }
}

/// Like [`sweep_eigenvalue`], but a failure after the first sample returns
/// the samples accepted so far together with the error.
#[allow(clippy::too_many_arguments)]
pub fn sweep_eigenvalue_partial(
    family: &dyn OperatorFamily,
    base: &[C64],
    direction: &Direction,
    from: f64,
    to: f64,
    steps: usize,
    start: &TrackStart,
    opts: &TrackOptions,
) -> Result<(EigenPath, Option<Error>)> {
    if steps == 0 || (steps == 1 && from != to) {
        return Err(Error::InvalidInput(
            "a sweep over a nonzero range needs at least 2 samples".into(),
        ));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::NonFinite("sweep range".into()));
    }
    let at = |s: f64| family.at(&direction.point(base, C64::new(s, 0.0)));
    let h = at(from)?;
    let sp = resolve_start(&h, start, opts.seed)?;
    let mut radius = sp.radius;
    let first = track_eigenvalue(
        &h,
        &Contour::new(sp.energy, radius, opts.nodes)?,
        &sp.vector,
        opts,
    )?;
    let mut samples = vec![sample_of(C64::new(from, 0.0), &first)];
    let mut energy = first.energy;
    let mut psi = unit(&first.vector);
    if real_block(&sp.vector) {
        // Keep the reference real so the mirrored node sum stays usable.
        let re: Vec<C64> = psi.iter().map(|z| C64::new(z.re, 0.0)).collect();
        if norm2(&re) > 0.5 {
            psi = unit(&re);
        }
    }
    let mut s = from;
    let mut halvings = 0usize;
    let mut failure = None;
    'steps: for i in 1..steps {
        let target = from + (to - from) * i as f64 / (steps - 1) as f64;
        let mut step = target - s;
        let before = halvings;
        loop {
            let next = if (target - s).abs() <= step.abs() {
                target
            } else {
                s + step
            };
            let attempt = at(next).and_then(|hn| {
                let center = if hn.is_hermitian() {
                    C64::new(energy.re, 0.0)
                } else {
                    energy
                };
                track_eigenvalue(&hn, &Contour::new(center, radius, opts.nodes)?, &psi, opts)
            });
            match attempt {
                Ok(st) => {
                    s = next;
                    energy = st.energy;
                    let v = unit(&st.vector);
                    psi = if real_block(&psi)
                        && v.iter().all(|z| z.im.abs() <= 1e-12 * z.norm().max(1e-300))
                    {
                        v.iter().map(|z| C64::new(z.re, 0.0)).collect()
                    } else {
                        v
                    };
                    if s == target {
                        let mut sample = sample_of(C64::new(s, 0.0), &st);
                        sample.halvings = halvings - before;
                        samples.push(sample);
                        break;
                    }
                }
                Err(
                    e @ (Error::TraceNotOne { .. }
                    | Error::LeftNeighborhood { .. }
                    | Error::NearSpectrum { .. }
                    | Error::Residual { .. }),
                ) => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        failure = Some(Error::Tracking(format!(
                            "step control exhausted near s = {s}: {e}; shrink the step or re-center"
                        )));
                        break 'steps;
                    }
                    if let Error::TraceNotOne { trace } = e {
                        if trace > 1.5 {
                            radius *= 0.5;
                        }
                    }
                    step *= 0.5;
                }
                Err(e) => {
                    failure = Some(e);
                    break 'steps;
                }
            }
        }
    }
    let path = EigenPath {
        base: base.to_vec(),
        direction: direction.values().to_vec(),
        samples,
        coefficients: Vec::new(),
        radius: None,
        rank_one: true,
        contour_respected: true,
        halvings,
    };
    Ok((path, failure))
}

/// Taylor coefficients of `ζ ↦ E(β₀ + ζt)` with the contour and reference
/// vector frozen at `β₀`, so every sample is the same analytic branch.
pub fn eigen_taylor(
    family: &dyn OperatorFamily,
    base: &[C64],
    direction: &Direction,
    start: &TrackStart,
    taylor: &TaylorOptions,
    opts: &TrackOptions,
) -> Result<EigenPath> {
    let h = family.at(base)?;
    let sp = resolve_start(&h, start, opts.seed)?;
    let contour = Contour::new(sp.energy, sp.radius, opts.nodes)?;
    let psi0 = sp.vector;
    let f = |beta: &[C64]| -> Result<C64> {
        let hb = family.at(beta)?;
        Ok(track_eigenvalue(&hb, &contour, &psi0, opts)?.energy)
    };
    let series = taylor_along(&f, base, direction, taylor)?;
    let samples = series
        .samples
        .iter()
        .map(|&(zeta, energy)| PathSample {
            zeta,
            energy,
            residual: f64::NAN,
            trace_defect: f64::NAN,
            center: contour.center,
            radius: contour.radius,
            halvings: 0,
        })
        .collect();
    let radius = radius_of_convergence(&series.norms())?;
    Ok(EigenPath {
        base: base.to_vec(),
        direction: direction.values().to_vec(),
        samples,
        coefficients: series.coefficients,
        radius: Some(radius),
        rank_one: true,
        contour_respected: true,
        halvings: 0,
    })
}
