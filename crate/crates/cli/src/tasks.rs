//! Task execution. Every task yields a JSON result, named invariant checks
//! and optional CSV files.

use crate::model::Model;
use crate::scenario::{Monotone, PathSpec, TaskSpec};
use couplings::analytic::{
    eigen_taylor, sweep_eigenvalue_partial, verify_analytic_family, Direction, EigenPath,
    TaylorOptions, TrackOptions, TrackStart, VerifyOptions, VerifySamples,
};
use couplings::bounds::{
    estimate_relative_bound, find_resolvent_point, kato_stability_check, resolvent_margin,
    uniform_sum_norm_bound, RelativeBoundOptions, ResolventSearch, SpectrumBox,
};
use couplings::dense::hermitian_eigenvalues;
use couplings::geometry::{disjoint_refinement, intersection_stats, max_overlap_depth, Aabb};
use couplings::lattice::CouplingSeq;
use couplings::potentials::{
    esssup_sum_norm, probe_grid, tail_sum_bound, weighted_sum_stummel_bound, Profile, StummelParams,
};
use couplings::{analytic::gamma_membership, Error, Result, C64};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// What a task produced. `failure` is set when the task stopped early but
/// still has partial output to keep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Done {
    pub result: Value,
    pub checks: Vec<Check>,
    pub files: Vec<OutputFile>,
    pub failure: Option<String>,
}

pub struct Context<'a> {
    pub model: &'a Model,
    pub seed: u64,
    pub tolerance: f64,
    /// Prefix for output files, the task name.
    pub name: &'a str,
}

pub fn run_task(task: &TaskSpec, cx: &Context) -> Result<Done> {
    match task {
        TaskSpec::Geometry { refinement, .. } => geometry(cx, *refinement),
        TaskSpec::Stummel {
            rho,
            spacing,
            order,
            ..
        } => stummel(cx, *rho, *spacing, *order),
        TaskSpec::Bounds {
            probes,
            tail_shells,
            ..
        } => bounds(cx, *probes, *tail_shells),
        TaskSpec::Track(path) => track(cx, path, false),
        TaskSpec::Sweep(path) => track(cx, path, true),
        TaskSpec::Taylor {
            axis,
            direction,
            start,
            radius,
            order,
            nodes,
            ..
        } => taylor(
            cx,
            *axis,
            direction.as_deref(),
            start,
            *radius,
            *order,
            *nodes,
        ),
        TaskSpec::Verify {
            directions,
            vectors,
            radius,
            ..
        } => verify(cx, *directions, *vectors, *radius),
    }
}

fn csv_header(out: &mut String, comments: &[&str], columns: &str) {
    let _ = writeln!(out, "# schema: {}", couplings::SCHEMA_VERSION);
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(columns);
    out.push('\n');
}

fn file(cx: &Context, suffix: &str, contents: String) -> OutputFile {
    OutputFile {
        name: format!("{}{suffix}.csv", cx.name),
        contents,
    }
}

fn beta_seq(values: &[C64], p: f64) -> Result<CouplingSeq> {
    CouplingSeq::new(values.to_vec(), p)
}

fn geometry(cx: &Context, refinement: bool) -> Result<Done> {
    let fam = cx
        .model
        .potentials
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("geometry needs a family".into()))?;
    let supports = fam.supports();
    let stats = intersection_stats(supports);
    let labelled: Vec<(usize, Aabb)> = supports
        .sets()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.boxes().iter().map(move |b| (i, b.clone())))
        .collect();
    let depth = max_overlap_depth(&labelled, 0);
    let mut checks = vec![check(
        "overlap_depth",
        depth <= stats.n0 + 1,
        format!(
            "deepest point lies in {depth} supports, n0 + 1 = {}",
            stats.n0 + 1
        ),
    )];
    let mut result = json!({
        "sets": supports.len(),
        "n0": stats.n0,
        "n1": fam.n1(),
        "overlap_depth": depth,
        "neighbors": stats.neighbors,
    });
    let mut files = Vec::new();
    if refinement {
        let part = disjoint_refinement(supports)?;
        let cap = 1usize.checked_shl(stats.n0 as u32).unwrap_or(usize::MAX);
        let per_set: Vec<usize> = (0..supports.len())
            .map(|i| part.cells_containing(i))
            .collect();
        let worst = per_set.iter().copied().max().unwrap_or(0);
        checks.push(check(
            "refinement_cell_count",
            worst <= cap,
            format!("at most {worst} cells per set, 2^n0 = {cap}"),
        ));
        let identity =
            part.cells.len() == supports.len() && part.cells.iter().all(|c| c.indices.len() == 1);
        result["refinement"] = json!({
            "cells": part.cells.len(),
            "cells_per_set": per_set,
            "identity": identity,
        });
        let mut csv = String::new();
        csv_header(
            &mut csv,
            &[
                "cell: index of the refinement cell",
                "indices: supports containing the cell, space separated",
                "boxes: number of boxes forming the cell",
                "volume: cell measure in grid units^m",
            ],
            "cell,indices,boxes,volume",
        );
        for (k, c) in part.cells.iter().enumerate() {
            let idx: Vec<String> = c.indices.iter().map(usize::to_string).collect();
            let _ = writeln!(
                csv,
                "{k},{},{},{:e}",
                idx.join(" "),
                c.region.len(),
                c.volume()
            );
        }
        files.push(file(cx, "_cells", csv));
    }
    Ok(Done {
        result,
        checks,
        files,
        failure: None,
    })
}

fn stummel(cx: &Context, rho: f64, spacing: f64, order: usize) -> Result<Done> {
    let fam = cx
        .model
        .potentials
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("stummel needs a family".into()))?;
    let probes = probe_grid(&fam.supports().bounds(), spacing);
    let mut params = StummelParams::new(rho, fam.dim(), probes);
    params.order = order;
    let beta = beta_seq(&cx.model.effective_beta(), cx.model.p)?;
    let sb = weighted_sum_stummel_bound(fam, &beta, &params)?;
    let checks = vec![check(
        "stummel_domination",
        sb.direct <= sb.bound + cx.tolerance,
        format!(
            "direct {:e} vs |beta|_p n1 max M = {:e}",
            sb.direct, sb.bound
        ),
    )];
    let mut csv = String::new();
    csv_header(
        &mut csv,
        &[
            "term: potential index i",
            "stummel_norm: max over probes of M_(v_i,rho)(x), units of |v|",
        ],
        "term,stummel_norm",
    );
    for (i, m) in sb.term_norms.iter().enumerate() {
        let _ = writeln!(csv, "{i},{m:e}");
    }
    Ok(Done {
        result: json!({
            "rho": rho,
            "probes": params.probes.len(),
            "bound": sb.bound,
            "direct": sb.direct,
            "n1": sb.n1,
            "beta_norm": sb.beta_norm,
            "max_term_norm": sb.term_norms.iter().copied().fold(0.0, f64::max),
        }),
        checks,
        files: vec![file(cx, "_terms", csv)],
        failure: None,
    })
}

fn bounds(cx: &Context, probes: usize, tail_shells: Option<usize>) -> Result<Done> {
    let model = cx.model;
    let family = model.family();
    let h = family.at(&model.beta)?;
    let v = h.add_scaled(C64::new(-1.0, 0.0), &model.h0)?;
    let rb = estimate_relative_bound(
        &v,
        &model.h0,
        &RelativeBoundOptions {
            probes,
            seed: cx.seed,
            ..RelativeBoundOptions::default()
        },
    )?;
    let scale = 1.0 + v.norm_inf() + model.h0.norm_inf();
    let mut checks = vec![
        check(
            "relative_bound_on_probes",
            rb.worst_slack() <= 1e-9 * scale,
            format!(
                "worst slack {:e} over {} probes",
                rb.worst_slack(),
                rb.probe_count
            ),
        ),
        check(
            "kato_a_below_one",
            kato_stability_check(&rb),
            format!("a = {:e}, b = {:e}", rb.a, rb.b),
        ),
    ];
    let mut result = json!({
        "relative_bound": { "a": rb.a, "b": rb.b, "probes": rb.probe_count, "method": rb.method },
    });
    if model.h0.is_hermitian() && kato_stability_check(&rb) {
        let bx = SpectrumBox::gershgorin(&model.h0)?;
        let lambda = find_resolvent_point(&rb, &bx, &ResolventSearch::default())?;
        let margin = resolvent_margin(&rb, &bx, lambda)?;
        let member = gamma_membership(&h, lambda, 1e-10)?;
        checks.push(check(
            "resolvent_certificate",
            !(margin > 0.0) || member.member,
            format!(
                "margin {margin:e}, smallest singular value {:e}",
                member.margin
            ),
        ));
        result["resolvent"] = json!({
            "lambda": [lambda.re, lambda.im],
            "margin": margin,
            "sigma_min": member.margin,
            "box": [bx.e_min, bx.e_max],
        });
    }
    if let (Some(fam), Some(sampled), Some(grid)) = (&model.potentials, &model.sampled, &model.grid)
    {
        if fam.uniform_bound().is_some() && fam.has_finite_range() {
            let chain = uniform_sum_norm_bound(sampled, Some(fam.n0()))?;
            checks.push(check(
                "sum_norm_overlap_bound",
                chain.holds_overlap,
                format!(
                    "|sum |V_i|| = {:e}, v (n0 + 1) = {:e}",
                    chain.norm, chain.overlap_bound
                ),
            ));
            checks.push(check(
                "partial_sums_monotone",
                chain.monotone,
                format!("{} partial sums", chain.partial_norms.len()),
            ));
            result["norm_chain"] = json!({
                "v": chain.v,
                "n0": chain.n0,
                "norm": chain.norm,
                "v_max_n0_1": chain.bound,
                "v_max_n0_1_holds": chain.holds,
                "v_n0_plus_1": chain.overlap_bound,
            });
        }
        let beta = beta_seq(&model.effective_beta(), model.p)?;
        let ess = esssup_sum_norm(fam, &beta, grid)?;
        if ess.bound.is_some() {
            checks.push(check(
                "esssup_bound",
                ess.holds,
                format!(
                    "max |sum beta_i v_i| = {:e}, bound {:?}",
                    ess.value, ess.bound
                ),
            ));
        }
        result["esssup"] = json!({ "value": ess.value, "bound": ess.bound });
        if let Some(l) = tail_shells {
            let a = model.separation.ok_or_else(|| {
                Error::InvalidInput("tail_shells needs a disordered family".into())
            })?;
            let center = grid.nodes().nth(grid.len() / 2).expect("grid is non-empty");
            let tb = tail_sum_bound(fam.terms(), &center, a, l)?;
            // Direct Σ|vᵢ| over every grid node.
            let direct = grid
                .nodes()
                .map(|x| {
                    fam.terms()
                        .iter()
                        .map(|t| t.evaluate(&x).norm())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            checks.push(check(
                "tail_bound",
                direct <= tb.total * (1.0 + 1e-12),
                format!(
                    "max over grid of sum |v_i| = {direct:e}, certified {:e}",
                    tb.total
                ),
            ));
            result["tail"] = json!({
                "direct": direct,
                "bound": tb,
                "decay": fam.terms().iter().find_map(|t| match t.profile() {
                    Profile::DecayingTail { decay, .. } => Some(*decay),
                    _ => None,
                }),
            });
        }
    }
    Ok(Done {
        result,
        checks,
        files: Vec::new(),
        failure: None,
    })
}

fn direction(cx: &Context, axis: Option<usize>, values: Option<&[f64]>) -> Result<Direction> {
    let n = cx.model.params();
    if n == 0 {
        return Err(Error::InvalidInput(
            "the operator has no couplings to vary".into(),
        ));
    }
    match values {
        Some(v) => {
            if v.len() > n {
                return Err(Error::InvalidInput(format!(
                    "direction has {} entries for {n} couplings",
                    v.len()
                )));
            }
            let mut t: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
            t.resize(n, C64::new(0.0, 0.0));
            Direction::new(t, cx.model.p)
        }
        None => Direction::coordinate(axis.unwrap_or(0), n),
    }
}

fn track_options(cx: &Context, nodes: usize) -> TrackOptions {
    TrackOptions {
        nodes,
        seed: cx.seed,
        ..TrackOptions::default()
    }
}

fn track(cx: &Context, spec: &PathSpec, diagnostics: bool) -> Result<Done> {
    let dir = direction(cx, spec.axis, spec.direction.as_deref())?;
    let family = cx.model.family();
    let base = cx.model.beta.clone();
    let (path, failure) = sweep_eigenvalue_partial(
        family.as_ref(),
        &base,
        &dir,
        spec.from,
        spec.to,
        spec.steps,
        &spec.start,
        &track_options(cx, spec.nodes),
    )?;
    let active: Vec<usize> = (0..dir.values().len())
        .filter(|&i| dir.values()[i] != C64::new(0.0, 0.0))
        .collect();

    let mut checks = Vec::new();
    let worst_trace = path
        .samples
        .iter()
        .map(|s| s.trace_defect)
        .fold(0.0, f64::max);
    checks.push(check(
        "projector_trace",
        worst_trace <= TrackOptions::default().trace_tolerance,
        format!("max |tr P - 1| = {worst_trace:e}"),
    ));
    if spec.dense_checks > 0 && !path.samples.is_empty() {
        let rows = path.samples.len();
        let k = spec.dense_checks.min(rows);
        let mut idx: Vec<usize> = (0..k)
            .map(|j| {
                if k == 1 {
                    0
                } else {
                    (j * (rows - 1) + (k - 1) / 2) / (k - 1)
                }
            })
            .collect();
        idx.dedup();
        let mut worst = 0.0f64;
        for &i in &idx {
            let s = &path.samples[i];
            let h = family.at(&dir.point(&base, s.zeta))?;
            if !h.is_hermitian() {
                return Err(Error::InvalidInput(
                    "dense_checks needs a Hermitian family".into(),
                ));
            }
            let nearest = hermitian_eigenvalues(&h.to_dense())
                .into_iter()
                .map(|e| (C64::new(e, 0.0) - s.energy).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest / s.energy.norm().max(1.0));
        }
        checks.push(check(
            "dense_agreement",
            worst <= cx.tolerance,
            format!("max relative distance to the dense spectrum {worst:e} at rows {idx:?}"),
        ));
    }
    if let Some(m) = spec.monotone {
        let slack = cx.tolerance;
        let ok = path.samples.windows(2).all(|w| {
            let d = w[1].energy.re - w[0].energy.re;
            match m {
                Monotone::Increasing => d >= -slack,
                Monotone::Decreasing => d <= slack,
            }
        });
        checks.push(check(
            "monotone_energy",
            ok,
            format!("{m:?} over {} rows", path.samples.len()),
        ));
    }

    let csv = path_table(&path, &base, &dir, &active, diagnostics, failure.as_ref());
    let last = path.samples.last();
    Ok(Done {
        result: json!({
            "rows": path.samples.len(),
            "halvings": path.halvings,
            "active_couplings": active,
            "final_energy": last.map(|s| [s.energy.re, s.energy.im]),
            "max_residual": path.samples.iter().map(|s| s.residual).fold(0.0, f64::max),
        }),
        checks,
        files: vec![file(cx, "", csv)],
        failure: failure.map(|e| e.to_string()),
    })
}

fn path_table(
    path: &EigenPath,
    base: &[C64],
    dir: &Direction,
    active: &[usize],
    diagnostics: bool,
    failure: Option<&Error>,
) -> String {
    let mut comments = vec![
        "s: path parameter, beta = beta0 + s t".to_string(),
        "beta_i: real part of coupling i along the path (only varying couplings)".to_string(),
        "energy_re, energy_im: tracked eigenvalue E(beta), units of H".to_string(),
        "residual: |H psi - E psi| / (|psi| max(|H|_inf, 1)), dimensionless".to_string(),
        "trace_defect: |tr P - 1|, dimensionless".to_string(),
    ];
    if diagnostics {
        comments.push("center_re, center_im, radius: contour used for the row, units of H".into());
        comments
            .push("margin: 1 - |E - center| / radius, distance of E from the contour edge".into());
        comments.push("halvings: step halvings spent reaching the row".into());
    }
    comments.push("status: ok, or failed for the row where tracking stopped".into());
    let mut columns = vec!["s".to_string()];
    columns.extend(active.iter().map(|i| format!("beta_{i}")));
    columns.extend(["energy_re", "energy_im", "residual", "trace_defect"].map(String::from));
    if diagnostics {
        columns
            .extend(["center_re", "center_im", "radius", "margin", "halvings"].map(String::from));
    }
    columns.push("status".into());
    let mut out = String::new();
    let refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    csv_header(&mut out, &refs, &columns.join(","));
    for s in &path.samples {
        let beta = dir.point(base, s.zeta);
        let _ = write!(out, "{:e}", s.zeta.re);
        for &i in active {
            let _ = write!(out, ",{:e}", beta[i].re);
        }
        let _ = write!(
            out,
            ",{:e},{:e},{:e},{:e}",
            s.energy.re, s.energy.im, s.residual, s.trace_defect
        );
        if diagnostics {
            let margin = 1.0 - (s.energy - s.center).norm() / s.radius;
            let _ = write!(
                out,
                ",{:e},{:e},{:e},{:e},{}",
                s.center.re, s.center.im, s.radius, margin, s.halvings
            );
        }
        out.push_str(",ok\n");
    }
    if let Some(e) = failure {
        let blanks = columns.len() - 1;
        let _ = writeln!(out, "# failure: {e}");
        out.push_str(&",".repeat(blanks));
        out.push_str("failed\n");
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn taylor(
    cx: &Context,
    axis: Option<usize>,
    values: Option<&[f64]>,
    start: &TrackStart,
    radius: f64,
    order: usize,
    nodes: usize,
) -> Result<Done> {
    let dir = direction(cx, axis, values)?;
    let family = cx.model.family();
    let opts = TaylorOptions {
        radius,
        order,
        nodes,
        tolerance: cx.tolerance,
    };
    let path = eigen_taylor(
        family.as_ref(),
        &cx.model.beta,
        &dir,
        start,
        &opts,
        &track_options(cx, 64),
    )?;
    let mut csv = String::new();
    csv_header(
        &mut csv,
        &[
            "m: order of the coefficient",
            "coeff_re, coeff_im: A_m in E(beta0 + z t) = sum A_m z^m, units of H",
            "abs: |A_m|",
        ],
        "m,coeff_re,coeff_im,abs",
    );
    for (m, a) in path.coefficients.iter().enumerate() {
        let _ = writeln!(csv, "{m},{:e},{:e},{:e}", a.re, a.im, a.norm());
    }
    Ok(Done {
        result: json!({
            "radius": radius,
            "order": order,
            "coefficients": path.coefficients.iter().map(|a| [a.re, a.im]).collect::<Vec<_>>(),
            "radius_of_convergence": path.radius,
        }),
        checks: Vec::new(),
        files: vec![file(cx, "", csv)],
        failure: None,
    })
}

fn verify(cx: &Context, directions: usize, vectors: usize, radius: f64) -> Result<Done> {
    let n = cx.model.params();
    if n == 0 {
        return Err(Error::InvalidInput(
            "verify needs at least one coupling".into(),
        ));
    }
    let family = cx.model.family();
    let dirs = (0..directions.clamp(1, n))
        .map(|i| Direction::coordinate(i, n))
        .collect::<Result<Vec<_>>>()?;
    let samples = VerifySamples::with_random_vectors(
        vec![cx.model.beta.clone()],
        dirs,
        family.dim(),
        vectors,
        cx.seed,
    );
    let mut opts = VerifyOptions::default();
    opts.taylor.radius = radius;
    let report = verify_analytic_family(family.as_ref(), &samples, &opts)?;
    let mut csv = String::new();
    csv_header(
        &mut csv,
        &[
            "kind: type_a, kato, g_analytic or weak",
            "base, direction, vector, functional: sample indices (functional blank when unused)",
            "residual: relative reconstruction or Cauchy-Riemann residual, dimensionless",
        ],
        "kind,base,direction,vector,functional,residual,passed",
    );
    for c in &report.checks {
        let kind = serde_json::to_value(c.kind).expect("enum serializes");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{:e},{}",
            kind.as_str().unwrap_or_default(),
            c.base,
            c.direction,
            c.vector,
            c.functional.map(|f| f.to_string()).unwrap_or_default(),
            c.residual,
            c.passed
        );
    }
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{:?} dir {} vec {}", c.kind, c.direction, c.vector))
        .collect();
    Ok(Done {
        result: json!({
            "type_a": report.type_a,
            "kato": report.kato,
            "g_analytic": report.g_analytic,
            "weak": report.weak,
            "max_residual": report.max_residual,
            "verdict": report.verdict,
            "checks": report.checks.len(),
        }),
        checks: vec![check(
            "analytic_family",
            report.consistent(),
            if failed.is_empty() {
                format!("all {} checks passed", report.checks.len())
            } else {
                format!("{} failed: {}", failed.len(), failed.join("; "))
            },
        )],
        files: vec![file(cx, "_checks", csv)],
        failure: None,
    })
}
