//! Potential families, Stummel norms, the weighted-sum closure bound and
//! certified tail sums for decaying potentials.

use crate::geometry::{
    check_fip_variant, distance, intersection_stats, packing_count_bound, shell_count_bound, Aabb,
    PackingConfig, SupportFamily, SupportSet,
};
use crate::lattice::{CouplingSeq, Grid, SampledFamily};
use crate::quadrature::{radial_rule, sphere_rule};
use crate::rng::seeded;
use crate::{Error, Result, C64};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Complex numbers in documents: either a bare real or `[re, im]`.
pub mod complex_serde {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        if z.im == 0.0 {
            Repr::Real(z.re).serialize(s)
        } else {
            Repr::Pair([z.re, z.im]).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => C64::new(x, 0.0),
            Repr::Pair([re, im]) => C64::new(re, im),
        })
    }
}

/// Shape of one potential. All kinds except `DecayingTail` vanish outside
/// the term's support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        #[serde(with = "complex_serde")]
        value: C64,
    },
    /// `a·exp(−|x − R|² / 2w²)`.
    Gaussian {
        #[serde(with = "complex_serde")]
        amplitude: C64,
        width: f64,
    },
    /// `a·|x − R|^{−α}`.
    PowerSpike {
        #[serde(with = "complex_serde")]
        amplitude: C64,
        exponent: f64,
    },
    /// `C / (1 + |x − R|)^k` on all of space.
    DecayingTail { amplitude: f64, decay: f64 },
}

impl Profile {
    fn validate(&self) -> Result<()> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        let ok = match *self {
            Profile::Constant { value } => finite(value),
            Profile::Gaussian { amplitude, width } => {
                finite(amplitude) && width > 0.0 && width.is_finite()
            }
            Profile::PowerSpike {
                amplitude,
                exponent,
            } => finite(amplitude) && exponent >= 0.0 && exponent.is_finite(),
            Profile::DecayingTail { amplitude, decay } => {
                amplitude.is_finite() && decay > 0.0 && decay.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid profile parameters: {self:?}"
            )))
        }
    }

    fn is_real(&self) -> bool {
        match *self {
            Profile::Constant { value } => value.im == 0.0,
            Profile::Gaussian { amplitude, .. } | Profile::PowerSpike { amplitude, .. } => {
                amplitude.im == 0.0
            }
            Profile::DecayingTail { .. } => true,
        }
    }
}

/// Decay certificate `|v(x)| ≤ C / (1 + |R − x|)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decay {
    pub constant: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialTermSpec {
    pub center: Vec<f64>,
    pub profile: Profile,
    pub support: SupportSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<Decay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialTermSpec", into = "PotentialTermSpec")]
pub struct PotentialTerm {
    center: Vec<f64>,
    profile: Profile,
    support: SupportSet,
    decay: Option<Decay>,
}

impl TryFrom<PotentialTermSpec> for PotentialTerm {
    type Error = Error;
    fn try_from(s: PotentialTermSpec) -> Result<Self> {
        PotentialTerm::new(s.center, s.profile, s.support, s.decay)
    }
}

impl From<PotentialTerm> for PotentialTermSpec {
    fn from(t: PotentialTerm) -> Self {
        PotentialTermSpec {
            center: t.center,
            profile: t.profile,
            support: t.support,
            decay: t.decay,
        }
    }
}

/// Number of random points used to spot-check a decay certificate.
pub const DECAY_SPOT_CHECKS: usize = 1000;

impl PotentialTerm {
    pub fn new(
        center: Vec<f64>,
        profile: Profile,
        support: SupportSet,
        decay: Option<Decay>,
    ) -> Result<Self> {
        profile.validate()?;
        if center.len() != support.dim() {
            return Err(Error::InvalidInput(format!(
                "center has dimension {}, support {}",
                center.len(),
                support.dim()
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("potential center".into()));
        }
        let declared = decay.is_some();
        let decay = match (decay, &profile) {
            (Some(d), _) => Some(d),
            (None, Profile::DecayingTail { amplitude, decay }) => Some(Decay {
                constant: amplitude.abs(),
                exponent: *decay,
            }),
            (None, _) => None,
        };
        if let Some(d) = decay {
            if !(d.constant >= 0.0 && d.exponent > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "invalid decay certificate {d:?}"
                )));
            }
        }
        let term = PotentialTerm {
            center,
            profile,
            support,
            decay,
        };
        // A certificate read off a tail profile holds by construction.
        if declared {
            term.spot_check_decay()?;
        }
        Ok(term)
    }

    /// Constant value on a single box.
    pub fn constant_box(b: Aabb, value: f64) -> Self {
        let center = b.center();
        PotentialTerm::new(
            center,
            Profile::Constant {
                value: C64::new(value, 0.0),
            },
            SupportSet::single(b),
            None,
        )
        .expect("finite constant profile")
    }

    fn spot_check_decay(&self) -> Result<()> {
        let Some(d) = self.decay else { return Ok(()) };
        let b = self.support.bounds();
        let m = self.center.len();
        let reach: f64 = 2.0
            + b.lo
                .iter()
                .zip(&b.hi)
                .map(|(a, c)| c - a)
                .fold(0.0, f64::max);
        let mut rng = seeded(0x5eed_dec0);
        for _ in 0..DECAY_SPOT_CHECKS {
            let x: Vec<f64> = (0..m)
                .map(|k| rng.random_range((b.lo[k] - reach)..(b.hi[k] + reach)))
                .collect();
            let v = self.evaluate(&x).norm();
            let cap = d.constant / (1.0 + distance(&self.center, &x)).powf(d.exponent);
            if v.is_finite() && v > cap * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::InvalidInput(format!(
                    "decay certificate fails at {x:?}: |v| = {v} > {cap}"
                )));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn decay(&self) -> Option<Decay> {
        self.decay
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_real(&self) -> bool {
        self.profile.is_real()
    }

    /// Whether the term vanishes outside its support.
    pub fn has_finite_range(&self) -> bool {
        !matches!(self.profile, Profile::DecayingTail { .. })
    }

    pub fn evaluate(&self, x: &[f64]) -> C64 {
        if let Profile::DecayingTail { amplitude, decay } = self.profile {
            return C64::new(
                amplitude / (1.0 + distance(&self.center, x)).powf(decay),
                0.0,
            );
        }
        if !self.support.contains(x) {
            return C64::new(0.0, 0.0);
        }
        match self.profile {
            Profile::Constant { value } => value,
            Profile::Gaussian { amplitude, width } => {
                let r = distance(&self.center, x);
                amplitude * (-r * r / (2.0 * width * width)).exp()
            }
            Profile::PowerSpike {
                amplitude,
                exponent,
            } => {
                let r = distance(&self.center, x);
                if exponent == 0.0 {
                    amplitude
                } else if r == 0.0 {
                    C64::new(f64::INFINITY, 0.0)
                } else {
                    amplitude * r.powf(-exponent)
                }
            }
            Profile::DecayingTail { .. } => unreachable!(),
        }
    }

    /// `ess sup |v|`, `None` when unbounded.
    pub fn sup_abs(&self) -> Option<f64> {
        let gap = || {
            self.support
                .boxes()
                .iter()
                .map(|b| box_distance(b, &self.center))
                .fold(f64::INFINITY, f64::min)
        };
        match self.profile {
            Profile::Constant { value } => Some(value.norm()),
            Profile::Gaussian { amplitude, width } => {
                let d = gap();
                Some(amplitude.norm() * (-d * d / (2.0 * width * width)).exp())
            }
            Profile::PowerSpike {
                amplitude,
                exponent,
            } => {
                let d = gap();
                if exponent == 0.0 {
                    Some(amplitude.norm())
                } else if d == 0.0 {
                    None
                } else {
                    Some(amplitude.norm() * d.powf(-exponent))
                }
            }
            Profile::DecayingTail { amplitude, .. } => Some(amplitude.abs()),
        }
    }
}

fn box_distance(b: &Aabb, x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(k, &v)| {
            let d = (b.lo[k] - v).max(0.0).max(v - b.hi[k]);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The indexed family `{vᵢ}` with its cached intersection statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    terms: Vec<PotentialTerm>,
    supports: SupportFamily,
    uniform_bound: Option<f64>,
    n0: usize,
    n1: usize,
}

impl PotentialFamily {
    pub fn new(terms: Vec<PotentialTerm>) -> Result<Self> {
        let supports = SupportFamily::new(terms.iter().map(|t| t.support.clone()).collect())?;
        let uniform_bound = terms
            .iter()
            .map(PotentialTerm::sup_abs)
            .try_fold(0.0f64, |acc, s| s.map(|s| acc.max(s)));
        let n0 = intersection_stats(&supports).n0;
        let n1 = check_fip_variant(&supports, 1.0)?;
        Ok(PotentialFamily {
            terms,
            supports,
            uniform_bound,
            n0,
            n1,
        })
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.supports.dim()
    }

    pub fn supports(&self) -> &SupportFamily {
        &self.supports
    }

    /// `v = supᵢ ess sup |vᵢ|`, `None` if some term is unbounded.
    pub fn uniform_bound(&self) -> Option<f64> {
        self.uniform_bound
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Unit-ball overlap count.
    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(PotentialTerm::is_real)
    }

    pub fn has_finite_range(&self) -> bool {
        self.terms.iter().all(PotentialTerm::has_finite_range)
    }

    /// Pointwise `Σᵢ βᵢ vᵢ(x)` over the truncation.
    pub fn weighted_value(&self, beta: &CouplingSeq, x: &[f64]) -> C64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let b = beta.get(i);
                if b == C64::new(0.0, 0.0) {
                    C64::new(0.0, 0.0)
                } else {
                    b * t.evaluate(x)
                }
            })
            .sum()
    }

    /// Samples every term at the nodes of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<SampledFamily> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs family dimension {}",
                grid.dim(),
                self.dim()
            )));
        }
        let nodes: Vec<Vec<f64>> = grid.nodes().collect();
        let columns = self
            .terms
            .iter()
            .map(|t| nodes.iter().map(|x| t.evaluate(x)).collect())
            .collect();
        SampledFamily::new(grid.clone(), columns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StummelParams {
    pub rho: f64,
    pub dim: usize,
    /// Gauss nodes per radial panel.
    pub order: usize,
    #[serde(default = "default_panels")]
    pub radial_panels: usize,
    /// Geometric refinement levels toward the kernel singularity.
    #[serde(default = "default_grading")]
    pub grading: usize,
    /// Angular resolution, see [`sphere_rule`].
    #[serde(default = "default_angular")]
    pub angular: usize,
    /// Points `x` at which `M_{v,ρ}(x)` is evaluated for the supremum.
    pub probes: Vec<Vec<f64>>,
}

fn default_panels() -> usize {
    8
}
fn default_grading() -> usize {
    16
}
fn default_angular() -> usize {
    32
}

impl StummelParams {
    pub fn new(rho: f64, dim: usize, probes: Vec<Vec<f64>>) -> Self {
        StummelParams {
            rho,
            dim,
            order: 10,
            radial_panels: default_panels(),
            grading: default_grading(),
            angular: default_angular(),
            probes,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidInput(format!(
                "dimension {} not in 1..=3",
                self.dim
            )));
        }
        if self.order < 4 {
            return Err(Error::InvalidInput(format!(
                "quadrature order {} < 4",
                self.order
            )));
        }
        if self.probes.is_empty() {
            return Err(Error::InvalidInput("probe grid is empty".into()));
        }
        if self.probes.iter().any(|p| p.len() != self.dim) {
            return Err(Error::InvalidInput("probe of wrong dimension".into()));
        }
        if !self.rho.is_finite() {
            return Err(Error::InvalidInput("ρ must be finite".into()));
        }
        if self.rho <= 0.0 {
            return Err(Error::NotInClass(format!(
                "ρ = {} ≤ 0: the kernel r^(ρ−1) is not integrable at the origin",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Probe points on a lattice of the given spacing covering `bounds` plus a
/// unit margin.
pub fn probe_grid(bounds: &Aabb, spacing: f64) -> Vec<Vec<f64>> {
    let m = bounds.dim();
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let (a, b) = (bounds.lo[k] - 1.0, bounds.hi[k] + 1.0);
            let n = ((b - a) / spacing).ceil().max(1.0) as usize;
            (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Precomputed offsets `y − x` and weights for the weighted unit-ball
/// integral. For `ρ < m` the radial weight is `r^{ρ−1}`, otherwise `r^{m−1}`.
#[derive(Debug, Clone)]
pub struct StummelQuadrature {
    offsets: Vec<Vec<f64>>,
    weights: Vec<f64>,
    params: StummelParams,
}

impl StummelQuadrature {
    pub fn new(params: &StummelParams) -> Result<Self> {
        params.validate()?;
        let m = params.dim;
        let alpha = if params.rho < m as f64 {
            params.rho - 1.0
        } else {
            m as f64 - 1.0
        };
        let radial = radial_rule(alpha, params.order, params.radial_panels, params.grading)?;
        let sphere = sphere_rule(m, params.angular)?;
        let mut offsets = Vec::with_capacity(radial.nodes.len() * sphere.weights.len());
        let mut weights = Vec::with_capacity(offsets.capacity());
        for (&r, &wr) in radial.nodes.iter().zip(&radial.weights) {
            for (dir, &wd) in sphere.directions.iter().zip(&sphere.weights) {
                offsets.push(dir.iter().map(|d| r * d).collect());
                weights.push(wr * wd);
            }
        }
        Ok(StummelQuadrature {
            offsets,
            weights,
            params: params.clone(),
        })
    }

    pub fn params(&self) -> &StummelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `M_{v,ρ}(x)`.
    pub fn local_norm(&self, v: &(impl Fn(&[f64]) -> C64 + ?Sized), x: &[f64]) -> Result<f64> {
        let mut y = vec![0.0; x.len()];
        let mut acc = 0.0;
        for (off, &w) in self.offsets.iter().zip(&self.weights) {
            for k in 0..x.len() {
                y[k] = x[k] + off[k];
            }
            let val = v(&y);
            if val == C64::new(0.0, 0.0) {
                continue;
            }
            acc += w * val.norm_sqr();
        }
        if !acc.is_finite() {
            return Err(Error::NotInClass(format!(
                "non-finite quadrature at {x:?}: profile singularity too strong"
            )));
        }
        Ok(acc.sqrt())
    }

    /// `M_{v,ρ}(x)` at every probe, in probe order.
    pub fn probe_norms(&self, v: &(impl Fn(&[f64]) -> C64 + Sync + ?Sized)) -> Result<Vec<f64>> {
        self.params
            .probes
            .par_iter()
            .map(|x| self.local_norm(v, x))
            .collect()
    }

    /// Max of [`Self::local_norm`] over the probe grid. This is a lower
    /// estimate of the supremum over all of space.
    pub fn class_norm(&self, v: &(impl Fn(&[f64]) -> C64 + Sync + ?Sized)) -> Result<f64> {
        Ok(self.probe_norms(v)?.into_iter().fold(0.0, f64::max))
    }
}

pub fn stummel_local_norm(
    v: &(impl Fn(&[f64]) -> C64 + ?Sized),
    x: &[f64],
    params: &StummelParams,
) -> Result<f64> {
    StummelQuadrature::new(params)?.local_norm(v, x)
}

pub fn stummel_class_norm(
    v: &(impl Fn(&[f64]) -> C64 + Sync + ?Sized),
    params: &StummelParams,
) -> Result<f64> {
    StummelQuadrature::new(params)?.class_norm(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StummelSumBound {
    /// `‖β‖ₚ · n1 · maxᵢ M_{vᵢ,ρ}`.
    pub bound: f64,
    /// Stummel norm of `Σ βᵢ vᵢ` on the same probes and quadrature.
    pub direct: f64,
    pub n1: usize,
    pub beta_norm: f64,
    pub term_norms: Vec<f64>,
    pub dominated: bool,
}

/// Slack allowed between the direct norm and the certified bound.
pub const STUMMEL_QUADRATURE_TOLERANCE: f64 = 1e-8;

pub fn weighted_sum_stummel_bound(
    family: &PotentialFamily,
    beta: &CouplingSeq,
    params: &StummelParams,
) -> Result<StummelSumBound> {
    if let Some(i) = family.terms.iter().position(|t| !t.has_finite_range()) {
        return Err(Error::HypothesesViolated(format!(
            "term {i} has infinite range, so the unit-ball overlap count is unbounded"
        )));
    }
    let quad = StummelQuadrature::new(params)?;
    let term_norms: Vec<f64> = family
        .terms
        .iter()
        .map(|t| quad.class_norm(&|x: &[f64]| t.evaluate(x)))
        .collect::<Result<_>>()?;
    if let Some(i) = term_norms.iter().position(|m| !m.is_finite()) {
        return Err(Error::HypothesesViolated(format!(
            "M_(v_{i},ρ) is not finite"
        )));
    }
    let max_m = term_norms.iter().copied().fold(0.0, f64::max);
    let n1 = family.n1;
    let beta_norm = beta.norm();
    let bound = beta_norm * n1 as f64 * max_m;
    let direct = quad.class_norm(&|x: &[f64]| family.weighted_value(beta, x))?;
    Ok(StummelSumBound {
        bound,
        direct,
        n1,
        beta_norm,
        term_norms,
        dominated: direct <= bound + STUMMEL_QUADRATURE_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// Inner-ball contribution `C · ⌊(l + A)^m / A^m⌋`.
    pub inner: f64,
    /// Shells `l ≤ n < cutoff`, summed explicitly.
    pub shells: f64,
    /// Certified remainder for the shells `n ≥ cutoff`.
    pub remainder: f64,
    /// Coefficient of the leading `n^{m−1−k}` term of the shell sum.
    pub leading_coefficient: f64,
    pub cutoff: usize,
    pub total: f64,
}

/// Explicit shells summed before switching to the integral remainder.
pub const TAIL_EXPLICIT_SHELLS: usize = 4096;

/// Uniform bound on `Σᵢ |vᵢ(x)|` for decaying potentials on separated
/// centers, built from the ball and shell packing counts.
pub fn tail_sum_bound(
    family: &[PotentialTerm],
    x: &[f64],
    separation: f64,
    l: usize,
) -> Result<TailBound> {
    let zero = TailBound {
        inner: 0.0,
        shells: 0.0,
        remainder: 0.0,
        leading_coefficient: 0.0,
        cutoff: l,
        total: 0.0,
    };
    if family.is_empty() {
        return Ok(zero);
    }
    let m = family[0].dim();
    if x.len() != m || family.iter().any(|t| t.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x.len(),
        });
    }
    let mut c = 0.0f64;
    let mut k = f64::INFINITY;
    for (i, t) in family.iter().enumerate() {
        let d = t
            .decay()
            .ok_or_else(|| Error::InvalidInput(format!("term {i} has no decay certificate")))?;
        c = c.max(d.constant);
        k = k.min(d.exponent);
    }
    if k <= m as f64 {
        return Err(Error::DivergentTail { k, m });
    }
    if !(l as f64 > separation) {
        return Err(Error::InvalidInput(format!(
            "shell start l = {l} must exceed A = {separation}"
        )));
    }
    PackingConfig::new(
        family.iter().map(|t| t.center().to_vec()).collect(),
        separation,
    )?;

    let a = separation;
    let inner = c * (packing_count_bound(m, l as f64, a)? + 1e-9).floor();
    let cutoff = l.max(TAIL_EXPLICIT_SHELLS);
    let mut shells = 0.0;
    for n in l..cutoff {
        let count = (shell_count_bound(m, n as f64, 1.0, a)? + 1e-9).floor();
        shells += c / (1.0 + n as f64).powf(k) * count;
    }
    // (n+1+A)^m − (n−A)^m = Σ_{j≥1} C(m,j) n^{m−j} [(1+A)^j − (−A)^j]
    let mut remainder = 0.0;
    let mut leading = 0.0;
    for j in 1..=m {
        let coeff =
            binomial(m, j) * ((1.0 + a).powi(j as i32) - (-a).powi(j as i32)) / a.powi(m as i32);
        let s = k + j as f64 - m as f64;
        remainder += c * coeff * (cutoff as f64).powf(1.0 - s) / (s - 1.0);
        if j == 1 {
            leading = c * coeff;
        }
    }
    Ok(TailBound {
        inner,
        shells,
        remainder,
        leading_coefficient: leading,
        cutoff,
        total: inner + shells + remainder,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssSupCheck {
    /// `max_x |Σ βᵢ vᵢ(x)|` over the grid nodes.
    pub value: f64,
    /// `‖β‖_∞ · v · n1`, when `v` is finite and the family has finite range.
    pub bound: Option<f64>,
    pub holds: bool,
}

pub fn esssup_sum_norm(
    family: &PotentialFamily,
    beta: &CouplingSeq,
    grid: &Grid,
) -> Result<EssSupCheck> {
    if grid.dim() != family.dim() {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs family dimension {}",
            grid.dim(),
            family.dim()
        )));
    }
    let value = grid
        .nodes()
        .map(|x| family.weighted_value(beta, &x).norm())
        .fold(0.0, f64::max);
    let bound = match (family.uniform_bound, family.has_finite_range()) {
        (Some(v), true) => Some(beta.sup_norm() * v * family.n1.max(1) as f64),
        _ => None,
    };
    Ok(EssSupCheck {
        value,
        bound,
        holds: bound.is_none_or(|b| value <= b * (1.0 + 1e-12)),
    })
}

/// Ready-made families for scenarios and tests.
pub mod generators {
    use super::*;

    /// Gaussian bumps on a cubic lattice; each support is the cube of side
    /// `support` around its center.
    pub fn periodic_bumps(
        dim: usize,
        per_axis: usize,
        spacing: f64,
        origin: f64,
        height: f64,
        width: f64,
        support: f64,
    ) -> Result<Vec<PotentialTerm>> {
        let total = per_axis.pow(dim as u32);
        (0..total)
            .map(|flat| {
                let mut rest = flat;
                let center: Vec<f64> = (0..dim)
                    .map(|_| {
                        let i = rest % per_axis;
                        rest /= per_axis;
                        origin + spacing * i as f64
                    })
                    .collect();
                let half = 0.5 * support;
                let b = Aabb::new(
                    center.iter().map(|c| c - half).collect(),
                    center.iter().map(|c| c + half).collect(),
                )?;
                PotentialTerm::new(
                    center,
                    Profile::Gaussian {
                        amplitude: C64::new(height, 0.0),
                        width,
                    },
                    SupportSet::single(b),
                    None,
                )
            })
            .collect()
    }

    /// Random centers in `[lo, hi]^dim` with pairwise distance `> 2A`
    /// (rejection sampling), each carrying the tail `C / (1 + |x − R|)^k`.
    #[allow(clippy::too_many_arguments)]
    pub fn disordered_tails(
        dim: usize,
        count: usize,
        lo: f64,
        hi: f64,
        separation: f64,
        constant: f64,
        decay: f64,
        seed: u64,
    ) -> Result<Vec<PotentialTerm>> {
        let centers = separated_centers(dim, count, lo, hi, separation, seed)?;
        centers
            .into_iter()
            .map(|c| {
                let b = Aabb::new(
                    c.iter().map(|v| v - separation).collect(),
                    c.iter().map(|v| v + separation).collect(),
                )?;
                PotentialTerm::new(
                    c,
                    Profile::DecayingTail {
                        amplitude: constant,
                        decay,
                    },
                    SupportSet::single(b),
                    None,
                )
            })
            .collect()
    }

    pub fn separated_centers(
        dim: usize,
        count: usize,
        lo: f64,
        hi: f64,
        separation: f64,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let mut rng = seeded(seed);
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while centers.len() < count {
            attempts += 1;
            if attempts > 1000 * count.max(1) {
                return Err(Error::InvalidInput(format!(
                    "could not place {count} centers with separation 2A = {} in [{lo}, {hi}]^{dim}",
                    2.0 * separation
                )));
            }
            let c: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
            if centers.iter().all(|o| distance(o, &c) > 2.0 * separation) {
                centers.push(c);
            }
        }
        Ok(centers)
    }
}
