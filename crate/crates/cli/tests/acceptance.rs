//! Acceptance run. Prints one line per criterion and exits nonzero when any
//! criterion fails.
//!
//! The one known red is criterion 6: the `v·max(n0, 1)` norm bound is off by
//! one overlap (a point can sit in a set and all `n0` of its neighbours), so
//! random families violate it. The line also reports the `v·(n0 + 1)` bound,
//! which must never fail.

use couplings::analytic::gamma_membership;
use couplings::analytic::projector::projector_unchecked;
use couplings::analytic::{
    eigen_taylor, riesz_projector, sweep_eigenvalue, verify_analytic_family, AffineFamily, Contour,
    Direction, FnFamily, OperatorFamily, ProjectorTolerance, TaylorOptions, TrackOptions,
    TrackStart, VerifyOptions, VerifySamples,
};
use couplings::bounds::{resolvent_margin, uniform_sum_norm_bound, RelativeBound, SpectrumBox};
use couplings::dense::{hermitian_eigen, hermitian_eigenvalues, inner};
use couplings::geometry::{
    count_in_ball, count_in_shell, disjoint_refinement, distance, intersection_stats,
    packing_count_bound, shell_count_bound, Aabb, PackingConfig, SupportFamily, SupportSet,
};
use couplings::lattice::{build_laplacian, CouplingSeq, DiscreteOperator, Grid};
use couplings::potentials::{
    generators, probe_grid, stummel_local_norm, tail_sum_bound, weighted_sum_stummel_bound,
    PotentialFamily, PotentialTerm, Profile, StummelParams,
};
use couplings::rng::{seeded, Rng};
use couplings::{Error, C64};
use rand::Rng as _;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    passed: bool,
    /// Failure explained by a known defect of the stated bound.
    known: bool,
    detail: String,
}

fn pass(passed: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome {
        passed,
        known: false,
        detail,
    })
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

type Criterion = (&'static str, fn() -> Res<Outcome>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("refinement soundness", c1),
        ("packing bounds", c2),
        ("Stummel closed forms", c3),
        ("Stummel domination of weighted sums", c4),
        ("tail bound and k = m divergence", c5),
        ("norm-bound chain", c6),
        ("projector quality", c7),
        ("eigenvalue tracking vs oracles", c8),
        ("Taylor coefficients and radius", c9),
        ("analytic-family verification", c10),
        ("resolvent certification", c11),
        ("determinism of shipped scenarios", c12),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (n, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match std::panic::catch_unwind(f) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome {
                passed: false,
                known: false,
                detail: format!("error: {e}"),
            },
            Err(_) => Outcome {
                passed: false,
                known: false,
                detail: "panicked".into(),
            },
        };
        let status = match (outcome.passed, outcome.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {:>2}: {status} [{:.1} s] {title}: {}",
            n + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.passed {
            failed += 1;
            unexpected += usize::from(!outcome.known);
        }
    }
    if failed > 0 {
        println!("{failed} failure(s), {unexpected} unexplained");
        std::process::exit(1);
    }
}

/// Box coordinate in `[0, 10]`, either continuous or on the quarter lattice
/// so that mesh points land exactly on faces.
fn coordinate(rng: &mut Rng, snapped: bool) -> f64 {
    if snapped {
        rng.random_range(0..=40) as f64 * 0.25
    } else {
        rng.random_range(0.0..10.0)
    }
}

fn random_box_family(rng: &mut Rng, m: usize, snapped: bool) -> Res<SupportFamily> {
    let count = rng.random_range(1..=20);
    let boxes = (0..count)
        .map(|_| {
            let (lo, hi): (Vec<f64>, Vec<f64>) = (0..m)
                .map(|_| {
                    let (a, b) = (coordinate(rng, snapped), coordinate(rng, snapped));
                    let (a, b) = (a.min(b), a.max(b));
                    (a, if b > a { b } else { a + 0.25 })
                })
                .unzip();
            Aabb::new(lo, hi)
        })
        .collect::<couplings::Result<Vec<_>>>()?;
    Ok(SupportFamily::from_boxes(boxes)?)
}

fn c1() -> Res<Outcome> {
    let mut rng = seeded(1);
    let (mut points, mut mismatches, mut excess) = (0usize, 0usize, 0usize);
    for trial in 0..500 {
        let m = 1 + trial % 2;
        let snapped = trial % 4 < 2;
        let family = random_box_family(&mut rng, m, snapped)?;
        let part = disjoint_refinement(&family)?;
        let n0 = intersection_stats(&family).n0;
        excess += (0..family.len())
            .filter(|&i| part.cells_containing(i) > 1usize << n0)
            .count();
        // Mesh over [-0.5, 10.5] with spacing 1/(4j), so the quarter lattice
        // is hit exactly: x = i/(4j) − 0.5.
        let j: usize = if m == 1 { 2273 } else { 8 };
        let per_axis = 44 * j + 1;
        let coord = |i: usize| i as f64 / (4 * j) as f64 - 0.5;
        let total = per_axis.pow(m as u32);
        let mut x = vec![0.0; m];
        for flat in 0..total {
            let mut rest = flat;
            for v in x.iter_mut() {
                *v = coord(rest % per_axis);
                rest /= per_axis;
            }
            let located = part
                .locate(&x)
                .map(|c| c.indices.clone())
                .unwrap_or_default();
            if located != family.membership(&x) {
                mismatches += 1;
            }
        }
        points += total;
    }
    pass(
        mismatches == 0 && excess == 0,
        format!("{points} mesh points, {mismatches} misclassified; {excess} sets above 2^n0 cells"),
    )
}

fn c2() -> Res<Outcome> {
    let mut rng = seeded(2);
    let (mut ball_bad, mut shell_bad) = (0usize, 0usize);
    let (mut ball_ratio, mut shell_ratio) = (0.0f64, 0.0f64);
    for trial in 0..100_000 {
        let m = 1 + trial % 3;
        let a = rng.random_range(0.1..1.0);
        let r = a + rng.random_range(0.01..3.0);
        let d = rng.random_range(0.0..2.0);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let reach = r + d + a;
        let mut centers: Vec<Vec<f64>> = Vec::new();
        for _ in 0..60 {
            let c: Vec<f64> = x
                .iter()
                .map(|v| v + rng.random_range(-reach..reach))
                .collect();
            if centers.iter().all(|o| distance(o, &c) > 2.0 * a) {
                centers.push(c);
            }
        }
        let config = PackingConfig::new(centers, a)?;
        let ball = count_in_ball(&config, &x, r) as f64;
        let ball_bound = packing_count_bound(m, r, a)?;
        let shell = count_in_shell(&config, &x, r, d) as f64;
        let shell_bound = shell_count_bound(m, r, d, a)?;
        ball_bad += usize::from(ball > ball_bound);
        shell_bad += usize::from(shell > shell_bound);
        ball_ratio = ball_ratio.max(ball / ball_bound);
        shell_ratio = shell_ratio.max(shell / shell_bound);
    }
    pass(
        ball_bad == 0 && shell_bad == 0,
        format!(
            "100000 configurations, {ball_bad} ball and {shell_bad} shell violations \
             (max count/bound {ball_ratio:.3}, {shell_ratio:.3})"
        ),
    )
}

fn c3() -> Res<Outcome> {
    let volumes = [2.0, PI, 4.0 * PI / 3.0];
    let mut worst = 0.0f64;
    for m in 1..=3usize {
        let cm = volumes[m - 1];
        let x = vec![0.3; m];
        for rho in [0.5, 1.5, 2.5, m as f64, m as f64 + 1.0] {
            let params = StummelParams::new(rho, m, vec![x.clone()]);
            let got = stummel_local_norm(&|_: &[f64]| c(1.0), &x, &params)?;
            let want = if rho >= m as f64 {
                cm.sqrt()
            } else {
                (m as f64 * cm / rho).sqrt()
            };
            worst = worst.max((got - want).abs() / want);
        }
    }
    pass(
        worst <= 1e-6,
        format!("15 cases, worst relative error {worst:.2e}"),
    )
}

fn random_profile(rng: &mut Rng, m: usize, rho: f64) -> Profile {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let amp = c(sign * rng.random_range(0.2..2.0));
    match rng.random_range(0..3) {
        0 => Profile::Constant { value: amp },
        1 => Profile::Gaussian {
            amplitude: amp,
            width: rng.random_range(0.2..1.0),
        },
        _ => Profile::PowerSpike {
            amplitude: amp,
            exponent: rng.random_range(0.0..0.4 * rho.min(m as f64)),
        },
    }
}

fn c4() -> Res<Outcome> {
    let mut rng = seeded(4);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..100 {
        let m = 1 + trial % 3;
        let p = [1.0, 2.0, f64::INFINITY][(trial / 3) % 3];
        let rho = rng.random_range(0.5..3.5);
        let count = if m == 3 {
            rng.random_range(2..=3)
        } else {
            rng.random_range(2..=8)
        };
        let terms = (0..count)
            .map(|_| {
                let center: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..4.0)).collect();
                let half = rng.random_range(0.2..1.0);
                let b = Aabb::new(
                    center.iter().map(|v| v - half).collect(),
                    center.iter().map(|v| v + half).collect(),
                )?;
                PotentialTerm::new(
                    center,
                    random_profile(&mut rng, m, rho),
                    SupportSet::single(b),
                    None,
                )
            })
            .collect::<couplings::Result<Vec<_>>>()?;
        let family = PotentialFamily::new(terms)?;
        let raw: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = CouplingSeq::real(&raw, p)?.norm();
        let scale = rng.random_range(0.05..1.0) / norm;
        let beta = CouplingSeq::real(&raw.iter().map(|b| b * scale).collect::<Vec<_>>(), p)?;
        let params = StummelParams {
            order: 6,
            radial_panels: 4,
            grading: 8,
            angular: if m == 3 { 6 } else { 12 },
            ..StummelParams::new(rho, m, probe_grid(&family.supports().bounds(), 1.0))
        };
        let s = weighted_sum_stummel_bound(&family, &beta, &params)?;
        worst = worst.max(s.direct - s.bound);
        violations += usize::from(s.direct > s.bound + 1e-6);
    }
    pass(
        violations == 0,
        format!("100 families, {violations} violations (max direct − bound {worst:.3e})"),
    )
}

/// About 10⁵ centers on a unit lattice around the origin, each jittered by
/// at most 0.05 per axis.
fn jittered_lattice(rng: &mut Rng, m: usize) -> Vec<Vec<f64>> {
    let side: i64 = [100_000, 316, 46][m - 1];
    let total = (side as usize).pow(m as u32);
    (0..total)
        .map(|flat| {
            let mut rest = flat as i64;
            (0..m)
                .map(|_| {
                    let i = rest % side - side / 2;
                    rest /= side;
                    i as f64 + rng.random_range(-0.05..0.05)
                })
                .collect()
        })
        .collect()
}

/// Increments of `Σ (1 + |R|)^{−k}` over lattice points `R ∈ ℤᵐ` in the
/// dyadic shells `2^{j−1} < |R| ≤ 2^j`, `j = 1..=levels`.
fn dyadic_increments(m: usize, k: f64, levels: u32) -> Vec<f64> {
    let reach = 1i64 << levels;
    let mut inc = vec![0.0; levels as usize + 1];
    let mut idx = vec![-reach; m];
    loop {
        let r = idx.iter().map(|&i| (i * i) as f64).sum::<f64>().sqrt();
        if r > 0.0 && r <= reach as f64 {
            let j = r.log2().ceil().max(0.0) as usize;
            inc[j] += (1.0 + r).powf(-k);
        }
        let mut axis = 0;
        loop {
            if axis == m {
                return inc[1..].to_vec();
            }
            idx[axis] += 1;
            if idx[axis] <= reach {
                break;
            }
            idx[axis] = -reach;
            axis += 1;
        }
    }
}

fn c5() -> Res<Outcome> {
    let mut rng = seeded(5);
    let a = 0.44;
    let (mut checked, mut violations) = (0usize, 0usize);
    let mut tightest = 0.0f64;
    for m in 1..=3usize {
        let centers = jittered_lattice(&mut rng, m);
        for k in [m as f64 + 0.5, m as f64 + 1.0, m as f64 + 2.0] {
            let terms = centers
                .iter()
                .map(|c| {
                    let b = Aabb::new(
                        c.iter().map(|v| v - a).collect(),
                        c.iter().map(|v| v + a).collect(),
                    )?;
                    PotentialTerm::new(
                        c.clone(),
                        Profile::DecayingTail {
                            amplitude: 1.0,
                            decay: k,
                        },
                        SupportSet::single(b),
                        None,
                    )
                })
                .collect::<couplings::Result<Vec<_>>>()?;
            for _ in 0..10 {
                let x: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
                let bound = tail_sum_bound(&terms, &x, a, 1)?.total;
                let direct: f64 = centers
                    .iter()
                    .map(|c| (1.0 + distance(c, &x)).powf(-k))
                    .sum();
                checked += 1;
                violations += usize::from(direct > bound);
                tightest = tightest.max(direct / bound);
            }
        }
    }
    // k = m: equal increments per doubling (logarithmic growth), against
    // geometric decay for k = m + 1/2.
    let mut divergent = true;
    let mut ratios = Vec::new();
    for (m, levels) in [(1usize, 16u32), (2, 9), (3, 7)] {
        let at_m = dyadic_increments(m, m as f64, levels);
        let above = dyadic_increments(m, m as f64 + 0.5, levels);
        let mid = levels as usize / 2;
        let r_m = at_m[at_m.len() - 1] / at_m[mid];
        let r_above = above[above.len() - 1] / above[mid];
        let sums: f64 = at_m.iter().sum();
        divergent &=
            r_m > 0.7 && r_above < 0.5 * r_m && at_m.iter().all(|&i| i > 0.0) && sums.is_finite();
        let one = PotentialTerm::new(
            vec![0.0; m],
            Profile::DecayingTail {
                amplitude: 1.0,
                decay: m as f64,
            },
            SupportSet::single(Aabb::new(vec![-a; m], vec![a; m])?),
            None,
        )?;
        divergent &= matches!(
            tail_sum_bound(&[one], &vec![0.0; m], a, 1),
            Err(Error::DivergentTail { .. })
        );
        ratios.push(format!("m={m}: {r_m:.2} vs {r_above:.3}"));
    }
    pass(
        violations == 0 && divergent,
        format!(
            "{checked} sums, {violations} above the bound (max direct/bound {tightest:.3}); \
             last/middle shell increment at k=m vs k=m+1/2: {}",
            ratios.join(", ")
        ),
    )
}

fn c6() -> Res<Outcome> {
    let mut rng = seeded(6);
    let (mut spec_bad, mut overlap_bad, mut not_monotone) = (0usize, 0usize, 0usize);
    for trial in 0..100 {
        let m = 1 + trial % 2;
        let grid = if m == 1 {
            Grid::new(&[[0.0, 10.0]], &[201])?
        } else {
            Grid::new(&[[0.0, 10.0], [0.0, 10.0]], &[41, 41])?
        };
        let count = rng.random_range(3..=12);
        let terms: Vec<PotentialTerm> = (0..count)
            .map(|_| {
                let lo: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..8.0)).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + rng.random_range(0.5..3.0)).collect();
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Ok(PotentialTerm::constant_box(
                    Aabb::new(lo, hi)?,
                    sign * rng.random_range(0.3..1.0),
                ))
            })
            .collect::<couplings::Result<_>>()?;
        let family = PotentialFamily::new(terms)?;
        let chain = uniform_sum_norm_bound(&family.sample(&grid)?, Some(family.n0()))?;
        spec_bad += usize::from(!chain.holds);
        overlap_bad += usize::from(!chain.holds_overlap);
        not_monotone += usize::from(!chain.monotone);
    }
    let detail = format!(
        "v·max(n0,1) exceeded on {spec_bad}/100 families; v·(n0+1) exceeded on {overlap_bad}/100; \
         partial sums non-monotone on {not_monotone}/100"
    );
    let passed = spec_bad == 0 && overlap_bad == 0 && not_monotone == 0;
    Ok(Outcome {
        passed,
        known: !passed && overlap_bad == 0 && not_monotone == 0,
        detail,
    })
}

/// Random Hermitian operator: banded tight-binding for `kind < 3`, small
/// dense otherwise.
fn random_hermitian(rng: &mut Rng, kind: usize) -> Res<DiscreteOperator> {
    if kind < 3 {
        let d = rng.random_range(8..=200);
        let band = rng.random_range(1..=3);
        banded_hermitian(rng, d, band)
    } else {
        let d = rng.random_range(4..=40);
        banded_hermitian(rng, d, d - 1)
    }
}

fn banded_hermitian(rng: &mut Rng, d: usize, band: usize) -> Res<DiscreteOperator> {
    let mut t = Vec::new();
    for i in 0..d {
        t.push((i, i, c(rng.random_range(-2.0..2.0))));
        for off in 1..=band {
            if i + off < d {
                let z =
                    C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI));
                t.push((i, i + off, z));
                t.push((i + off, i, z.conj()));
            }
        }
    }
    Ok(DiscreteOperator::from_triplets(d, t)?)
}

fn c7() -> Res<Outcome> {
    let mut rng = seeded(7);
    let (mut operators, mut bad64, mut bad32) = (0usize, 0usize, 0usize);
    let mut worst64 = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    while operators < 200 {
        let op = random_hermitian(&mut rng, operators % 4)?;
        let ev = hermitian_eigenvalues(&op.to_dense());
        let spectrum: Vec<C64> = ev.iter().map(|&e| c(e)).collect();
        let n = ev.len();
        // A window of 1–3 consecutive eigenvalues whose contour the
        // convergence model resolves to 1e-10 at q = 64.
        let mut choice = None;
        for _ in 0..50 {
            let width = rng.random_range(1..=3usize).min(n);
            let k = rng.random_range(0..=n - width);
            let (lo, hi) = (ev[k], ev[k + width - 1]);
            let below = if k > 0 { lo - ev[k - 1] } else { f64::INFINITY };
            let above = if k + width < n {
                ev[k + width] - hi
            } else {
                f64::INFINITY
            };
            let gap = below.min(above);
            let half = 0.5 * (hi - lo);
            let radius = if gap.is_infinite() {
                half + 1.0
            } else if half > 0.0 {
                (half * (half + gap)).sqrt()
            } else {
                0.5 * gap
            };
            let contour = Contour::new(c(0.5 * (lo + hi)), radius, 64)?;
            if contour.model_defect(&spectrum) <= 1e-10 {
                choice = Some((contour, width));
                break;
            }
        }
        let Some((contour, width)) = choice else {
            continue;
        };
        operators += 1;
        match riesz_projector(&op, &contour, &ProjectorTolerance::default()) {
            Ok(p) => {
                worst64 = worst64.max(p.defect);
                if (p.trace - c(width as f64)).norm() > 1e-8 {
                    bad64 += 1;
                }
            }
            Err(_) => bad64 += 1,
        }
        let half = Contour::new(contour.center, contour.radius, 32)?;
        let p32 = projector_unchecked(&op, &half)?;
        let allowed = half.model_defect(&spectrum) * (1.0 + 1e-3) + 1e-10;
        worst_excess = worst_excess.max(p32.defect - allowed);
        bad32 += usize::from(p32.defect > allowed);
    }
    pass(
        bad64 == 0 && bad32 == 0,
        format!(
            "200 operators; q=64: {bad64} failures (max defect {worst64:.1e}); \
             q=32: {bad32} above the model (max excess {worst_excess:.1e})"
        ),
    )
}

fn two_by_two() -> Res<AffineFamily> {
    let h0 = DiscreteOperator::diagonal(&[c(0.0), c(1.0)]);
    let v = DiscreteOperator::from_triplets(2, [(0, 1, c(1.0)), (1, 0, c(1.0))])?;
    Ok(AffineFamily::new(h0, vec![v])?)
}

fn c8() -> Res<Outcome> {
    let fam = two_by_two()?;
    let path = sweep_eigenvalue(
        &fam,
        &[c(0.0)],
        &Direction::coordinate(0, 1)?,
        0.0,
        0.45,
        46,
        &TrackStart::Level(0),
        &TrackOptions::default(),
    )?;
    let closed = path
        .samples
        .iter()
        .map(|s| {
            let b = s.zeta.re;
            (s.energy - c((1.0 - (1.0 + 4.0 * b * b).sqrt()) / 2.0)).norm()
        })
        .fold(0.0, f64::max);

    let grid = Grid::new(&[[0.0, 10.0]], &[128])?;
    let bumps = PotentialFamily::new(generators::periodic_bumps(1, 3, 2.5, 2.5, 20.0, 0.4, 2.0)?)?;
    let chain = AffineFamily::from_sampled(build_laplacian(&grid), &bumps.sample(&grid)?)?;
    let dir = Direction::new(vec![c(1.0), c(0.5), c(-0.25)], 2.0)?;
    let base = vec![c(0.0); 3];
    let path = sweep_eigenvalue(
        &chain,
        &base,
        &dir,
        0.0,
        1.0,
        21,
        &TrackStart::Level(0),
        &TrackOptions::default(),
    )?;
    let mut dense = 0.0f64;
    for s in &path.samples {
        let h = chain.at(&dir.point(&base, s.zeta))?;
        let e0 = hermitian_eigenvalues(&h.to_dense())[0];
        dense = dense.max((s.energy - c(e0)).norm());
    }
    pass(
        closed <= 1e-10 && dense <= 1e-8 && path.samples.len() == 21,
        format!("2×2 max error {closed:.1e} at 46 points; bump chain max error {dense:.1e} at 21 points"),
    )
}

/// Random real tight-binding family with three diagonal potentials.
fn random_affine(rng: &mut Rng, d: usize) -> Res<AffineFamily> {
    let mut t = Vec::new();
    for i in 0..d {
        t.push((i, i, c(rng.random_range(-2.0..2.0))));
        if i + 1 < d {
            t.push((i, i + 1, c(-1.0)));
            t.push((i + 1, i, c(-1.0)));
        }
    }
    let h0 = DiscreteOperator::from_triplets(d, t)?;
    let terms = (0..3)
        .map(|_| {
            DiscreteOperator::diagonal(
                &(0..d)
                    .map(|_| c(rng.random_range(-1.0..1.0)))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    Ok(AffineFamily::new(h0, terms)?)
}

fn c9() -> Res<Outcome> {
    let fam = two_by_two()?;
    let taylor = TaylorOptions {
        radius: 0.3,
        order: 16,
        nodes: 128,
        tolerance: 1e-8,
    };
    let path = eigen_taylor(
        &fam,
        &[c(0.0)],
        &Direction::coordinate(0, 1)?,
        &TrackStart::Level(0),
        &taylor,
        &TrackOptions::default(),
    )?;
    let a = &path.coefficients;
    let coeff_err = (a[2] - c(-1.0)).norm().max((a[4] - c(1.0)).norm());
    let radius = path
        .radius
        .as_ref()
        .and_then(|r| r.radius)
        .unwrap_or(f64::NAN);

    let mut rng = seeded(9);
    let mut rayleigh = 0.0f64;
    let mut families = 0;
    while families < 20 {
        let d = rng.random_range(10..=60);
        let fam = random_affine(&mut rng, d)?;
        let base: Vec<C64> = (0..3).map(|_| c(rng.random_range(-0.5..0.5))).collect();
        let t: Vec<C64> = (0..3).map(|_| c(rng.random_range(-1.0..1.0))).collect();
        let h = fam.at(&base)?;
        let (ev, vecs) = hermitian_eigen(&h.to_dense());
        let k = rng.random_range(0..d);
        let gap = [
            k.checked_sub(1).map(|j| ev[k] - ev[j]),
            ev.get(k + 1).map(|e| e - ev[k]),
        ]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
        if gap < 1e-3 {
            continue;
        }
        families += 1;
        let psi: Vec<C64> = vecs.column(k).iter().copied().collect();
        let vt = fam.direction_operator(&t)?;
        let quotient = inner(&psi, &vt.apply(&psi)?) / inner(&psi, &psi);
        let opts = TaylorOptions {
            radius: 0.2 * gap / vt.norm_inf().max(1e-12),
            order: 16,
            nodes: 64,
            tolerance: 1e-8,
        };
        let path = eigen_taylor(
            &fam,
            &base,
            &Direction::new(t, 2.0)?,
            &TrackStart::Level(k),
            &opts,
            &TrackOptions::default(),
        )?;
        rayleigh = rayleigh.max((path.coefficients[1] - quotient).norm());
    }
    pass(
        coeff_err <= 1e-8 && (radius - 0.5).abs() <= 0.05 && rayleigh <= 1e-8,
        format!(
            "A2 = {:.10}, A4 = {:.10} (error {coeff_err:.1e}); R = {radius:.4}; \
             first coefficient vs Rayleigh quotient on 20 families: max error {rayleigh:.1e}",
            a[2].re, a[4].re
        ),
    )
}

fn c10() -> Res<Outcome> {
    let mut rng = seeded(10);
    let mut affine_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let d = rng.random_range(12..=30);
        let fam = random_affine(&mut rng, d)?;
        let bases = vec![
            vec![c(0.0); 3],
            (0..3).map(|_| c(rng.random_range(-0.5..0.5))).collect(),
        ];
        let dirs = (0..2)
            .map(|_| {
                Direction::new(
                    (0..3)
                        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect(),
                    2.0,
                )
            })
            .collect::<couplings::Result<Vec<_>>>()?;
        let samples = VerifySamples::with_random_vectors(bases, dirs, d, 2, rng.random());
        let report = verify_analytic_family(&fam, &samples, &VerifyOptions::default())?;
        affine_ok &= report.consistent() && report.max_residual < 1e-9;
        worst = worst.max(report.max_residual);
    }

    let d = 16;
    let fam = random_affine(&mut rng, d)?;
    let (h0, v) = (fam.h0().clone(), fam.terms()[0].clone());
    let modulus = FnFamily::new(d, 1, move |b: &[C64]| h0.add_scaled(c(b[0].norm()), &v));
    let samples = VerifySamples::with_random_vectors(
        vec![vec![c(0.0)], vec![c(0.5)]],
        vec![Direction::coordinate(0, 1)?],
        d,
        2,
        11,
    );
    let report = verify_analytic_family(&modulus, &samples, &VerifyOptions::default())?;
    let flagged = !report.consistent();
    pass(
        affine_ok && flagged,
        format!(
            "3 affine families consistent: {affine_ok} (max residual {worst:.1e}); \
             modulus family flagged: {flagged} ({})",
            report.verdict
        ),
    )
}

fn c11() -> Res<Outcome> {
    let mut rng = seeded(11);
    let (mut certified, mut violations) = (0usize, 0usize);
    let mut smallest = f64::INFINITY;
    for trial in 0..200 {
        let h0 = random_hermitian(&mut rng, trial % 4)?;
        let d = h0.dim();
        let ev0 = hermitian_eigenvalues(&h0.to_dense());
        // V = ±a₀H₀ + W with ‖W‖ ≤ b₀ satisfies ‖Vψ‖ ≤ a₀‖H₀ψ‖ + b₀‖ψ‖.
        let a0 = rng.random_range(0.0..0.9);
        let b0 = rng.random_range(0.0..3.0);
        let w = banded_hermitian(&mut rng, d, 2)?;
        let wnorm = hermitian_eigenvalues(&w.to_dense())
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        let w = w.scaled(c(b0 * rng.random_range(0.0..1.0) / wnorm.max(1e-300)));
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let h = h0.add_scaled(c(sign * a0), &h0)?.add_scaled(c(1.0), &w)?;
        let rb = RelativeBound::declared(a0 + rng.random_range(0.0..0.3), b0)?;
        let bx = if rng.random_bool(0.5) {
            SpectrumBox::gershgorin(&h0)?
        } else {
            SpectrumBox::new(ev0[0], ev0[d - 1])?
        };
        let x = rng.random_range(bx.e_min - 3.0..bx.e_max + 3.0);
        let lambda = if rng.random_bool(0.2) && !bx.contains(x) {
            c(x)
        } else {
            C64::new(x, 10f64.powf(rng.random_range(-2.0..1.5)))
        };
        if resolvent_margin(&rb, &bx, lambda)? > 0.0 {
            certified += 1;
            let sigma = gamma_membership(&h, lambda, 1e-10)?.margin;
            smallest = smallest.min(sigma);
            violations += usize::from(sigma <= 1e-10);
        }
    }
    pass(
        violations == 0 && certified >= 20,
        format!("200 trials, {certified} certified, {violations} with σ_min ≤ 1e-10 (smallest σ_min {smallest:.2e})"),
    )
}

fn snapshot(dir: &Path) -> Res<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        files.push((
            path.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
            std::fs::read(&path)?,
        ));
    }
    files.sort();
    Ok(files)
}

fn c12() -> Res<Outcome> {
    let scenarios = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&scenarios)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    names.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    names.sort();
    let tmp = tempfile::tempdir()?;
    let (mut files, mut differing) = (0usize, Vec::new());
    for scenario in &names {
        let stem = scenario
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let mut runs = Vec::new();
        for run in ["a", "b"] {
            let out = tmp.path().join(run).join(&stem);
            let status = Command::new(env!("CARGO_BIN_EXE_couplings"))
                .args(["run", "--scenario"])
                .arg(scenario)
                .arg("--out")
                .arg(&out)
                .env_remove("COUPLINGS_OUT_DIR")
                .output()?
                .status;
            runs.push((status.code(), snapshot(&out)?));
        }
        files += runs[0].1.len();
        if runs[0] != runs[1] {
            differing.push(stem);
        }
    }
    pass(
        differing.is_empty() && !names.is_empty(),
        format!(
            "{} scenarios, {files} output files compared; differing: {}",
            names.len(),
            if differing.is_empty() {
                "none".to_string()
            } else {
                differing.join(", ")
            }
        ),
    )
}
