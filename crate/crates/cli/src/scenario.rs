//! Scenario files: one TOML document describing the operator, the potential
//! family, the couplings and the tasks to run.

use couplings::analytic::TrackStart;
use couplings::potentials::PotentialTermSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario schema violation: {0}")]
    Schema(String),
    #[error("bad override {0:?}: {1}")]
    Override(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Slack used by invariant checks and Taylor reconstructions.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub beta: BetaSpec,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Dirichlet Laplacian on a grid; the potentials come from `family`.
    Grid {
        extent: Vec<[f64; 2]>,
        points: Vec<usize>,
    },
    /// Explicit sparse matrices. Entries are `[row, col, re]` or
    /// `[row, col, re, im]`.
    Matrix {
        dim: usize,
        #[serde(default)]
        h0: Vec<Vec<f64>>,
        #[serde(default)]
        terms: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    PeriodicBumps {
        per_axis: usize,
        spacing: f64,
        origin: f64,
        height: f64,
        width: f64,
        support: f64,
    },
    Disordered {
        count: usize,
        lo: f64,
        hi: f64,
        /// `A`: centers are more than `2A` apart.
        separation: f64,
        constant: f64,
        decay: f64,
    },
    Explicit {
        terms: Vec<PotentialTermSpec>,
    },
}

/// How `β` enters `H(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `H₀ + Σ βᵢVᵢ`.
    #[default]
    Affine,
    /// `H₀ + Σ |βᵢ|Vᵢ`, not analytic in `β`.
    Modulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    /// Explicit real couplings; missing trailing entries are zero.
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Draw `β` uniformly in direction from the ℓᵖ sphere of this radius.
    #[serde(default)]
    pub sample_radius: Option<f64>,
}

fn default_p() -> f64 {
    2.0
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec {
            values: Vec::new(),
            p: default_p(),
            sample_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Geometry {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "yes")]
        refinement: bool,
    },
    Stummel {
        #[serde(default)]
        name: Option<String>,
        rho: f64,
        #[serde(default = "default_spacing")]
        spacing: f64,
        #[serde(default = "default_order")]
        order: usize,
    },
    Bounds {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_probes")]
        probes: usize,
        /// Inner shell index `l` of the certified tail sum.
        #[serde(default)]
        tail_shells: Option<usize>,
    },
    Track(PathSpec),
    Sweep(PathSpec),
    Taylor {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        axis: Option<usize>,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default = "level_zero")]
        start: TrackStart,
        #[serde(default = "default_taylor_radius")]
        radius: f64,
        #[serde(default = "default_taylor_order")]
        order: usize,
        #[serde(default = "default_taylor_nodes")]
        nodes: usize,
    },
    Verify {
        #[serde(default)]
        name: Option<String>,
        /// Coordinate directions tested, starting from axis 0.
        #[serde(default = "default_directions")]
        directions: usize,
        #[serde(default = "default_vectors")]
        vectors: usize,
        #[serde(default = "default_verify_radius")]
        radius: f64,
    },
}

/// A real path `β₀ + s·t`, `s ∈ [from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default = "level_zero")]
    pub start: TrackStart,
    #[serde(default = "default_track_nodes")]
    pub nodes: usize,
    /// Rows compared against a dense eigensolver, evenly spread.
    #[serde(default)]
    pub dense_checks: usize,
    #[serde(default)]
    pub monotone: Option<Monotone>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

fn yes() -> bool {
    true
}
fn default_spacing() -> f64 {
    0.5
}
fn default_order() -> usize {
    10
}
fn default_probes() -> usize {
    64
}
fn level_zero() -> TrackStart {
    TrackStart::Level(0)
}
fn default_track_nodes() -> usize {
    64
}
fn default_taylor_radius() -> f64 {
    0.3
}
fn default_taylor_order() -> usize {
    16
}
fn default_taylor_nodes() -> usize {
    128
}
fn default_directions() -> usize {
    3
}
fn default_vectors() -> usize {
    2
}
fn default_verify_radius() -> f64 {
    0.25
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::Geometry { .. } => "geometry",
            TaskSpec::Stummel { .. } => "stummel",
            TaskSpec::Bounds { .. } => "bounds",
            TaskSpec::Track(_) => "track",
            TaskSpec::Sweep(_) => "sweep",
            TaskSpec::Taylor { .. } => "taylor",
            TaskSpec::Verify { .. } => "verify",
        }
    }

    fn explicit_name(&self) -> Option<&str> {
        match self {
            TaskSpec::Geometry { name, .. }
            | TaskSpec::Stummel { name, .. }
            | TaskSpec::Bounds { name, .. }
            | TaskSpec::Track(PathSpec { name, .. })
            | TaskSpec::Sweep(PathSpec { name, .. })
            | TaskSpec::Taylor { name, .. }
            | TaskSpec::Verify { name, .. } => name.as_deref(),
        }
    }
}

/// Task names, unique within the scenario: the explicit name, or the kind
/// with a position suffix when the kind repeats.
pub fn task_names(tasks: &[TaskSpec]) -> Result<Vec<String>, ScenarioError> {
    let mut names = Vec::with_capacity(tasks.len());
    for (i, t) in tasks.iter().enumerate() {
        let name = match t.explicit_name() {
            Some(n) => n.to_string(),
            None if tasks.iter().filter(|o| o.kind() == t.kind()).count() > 1 => {
                format!("{}-{i}", t.kind())
            }
            None => t.kind().to_string(),
        };
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ScenarioError::Schema(format!(
                "tasks[{i}].name {name:?} must be non-empty ASCII letters, digits, '-' or '_'"
            )));
        }
        if names.contains(&name) {
            return Err(ScenarioError::Schema(format!(
                "tasks[{i}].name {name:?} is used twice"
            )));
        }
        names.push(name);
    }
    Ok(names)
}

/// Reads a scenario, applies `key=value` overrides and validates it.
pub fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?
    } else {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ScenarioError::Schema(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| ScenarioError::Schema(e.to_string()))?
    };
    validate(&scenario)?;
    Ok(scenario)
}

/// `a.b.0.c=value`; the value is read as a TOML value, falling back to a
/// bare string.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), ScenarioError> {
    let bad = |msg: String| ScenarioError::Override(spec.to_string(), msg);
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| bad("expected key=value".into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment".into()));
    }
    let mut root = toml::Value::Table(std::mem::take(doc));
    let result = set_path(&mut root, &parts, parse_value(raw.trim())).map_err(bad);
    if let toml::Value::Table(t) = root {
        *doc = t;
    }
    result
}

fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value) -> Result<(), String> {
    let (head, rest) = parts.split_first().expect("non-empty path");
    let child = match node {
        toml::Value::Table(t) if rest.is_empty() => {
            t.insert(head.to_string(), value);
            return Ok(());
        }
        toml::Value::Table(t) => t
            .entry(head.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new())),
        toml::Value::Array(a) => {
            let i: usize = head
                .parse()
                .map_err(|_| format!("{head:?} is not an array index"))?;
            let len = a.len();
            let slot = a
                .get_mut(i)
                .ok_or_else(|| format!("index {i} out of range (len {len})"))?;
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        _ => return Err(format!("path runs through a scalar at {head:?}")),
    };
    set_path(child, rest, value)
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key is present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    let err = |m: String| Err(ScenarioError::Schema(m));
    if s.schema != couplings::SCHEMA_VERSION {
        return err(format!(
            "schema = {} is not supported (expected {})",
            s.schema,
            couplings::SCHEMA_VERSION
        ));
    }
    if !(s.tolerance > 0.0 && s.tolerance.is_finite()) {
        return err(format!("tolerance = {} must be positive", s.tolerance));
    }
    match (&s.operator, &s.family) {
        (OperatorSpec::Grid { extent, points }, _) => {
            if extent.len() != points.len() || extent.is_empty() {
                return err("operator.extent and operator.points need one entry per axis".into());
            }
        }
        (OperatorSpec::Matrix { .. }, Some(_)) => {
            return err("family requires operator.kind = \"grid\"".into());
        }
        (OperatorSpec::Matrix { dim, h0, terms }, None) => {
            if *dim == 0 {
                return err("operator.dim must be positive".into());
            }
            let entries = h0.iter().map(|e| ("operator.h0".to_string(), e)).chain(
                terms
                    .iter()
                    .enumerate()
                    .flat_map(|(i, t)| t.iter().map(move |e| (format!("operator.terms[{i}]"), e))),
            );
            for (field, e) in entries {
                if !(e.len() == 3 || e.len() == 4) {
                    return err(format!(
                        "{field}: entry {e:?} must be [row, col, re] or [row, col, re, im]"
                    ));
                }
                let ok_index = |x: f64| x >= 0.0 && x.fract() == 0.0 && (x as usize) < *dim;
                if !(ok_index(e[0]) && ok_index(e[1])) {
                    return err(format!(
                        "{field}: entry {e:?} has an index outside 0..{dim}"
                    ));
                }
            }
        }
    }
    if !(s.beta.p >= 1.0) {
        return err(format!("beta.p = {} must be ≥ 1", s.beta.p));
    }
    if let Some(r) = s.beta.sample_radius {
        if !s.beta.values.is_empty() {
            return err("beta.values and beta.sample_radius are mutually exclusive".into());
        }
        if !(r >= 0.0 && r.is_finite()) {
            return err(format!("beta.sample_radius = {r} must be finite and ≥ 0"));
        }
    }
    for (i, t) in s.tasks.iter().enumerate() {
        let needs_family = matches!(t, TaskSpec::Geometry { .. } | TaskSpec::Stummel { .. });
        if needs_family && s.family.is_none() {
            return err(format!(
                "tasks[{i}] ({}) needs a [family] section",
                t.kind()
            ));
        }
        match t {
            TaskSpec::Track(path) | TaskSpec::Sweep(path) => {
                if path.steps == 0 {
                    return err(format!("tasks[{i}].steps must be ≥ 1"));
                }
                if path.steps == 1 && path.from != path.to {
                    return err(format!("tasks[{i}].steps = 1 needs from == to"));
                }
                if path.axis.is_some() && path.direction.is_some() {
                    return err(format!("tasks[{i}]: give axis or direction, not both"));
                }
            }
            TaskSpec::Taylor {
                axis, direction, ..
            } if axis.is_some() && direction.is_some() => {
                return err(format!("tasks[{i}]: give axis or direction, not both"));
            }
            _ => {}
        }
    }
    task_names(&s.tasks)?;
    Ok(())
}

/// Annotated reference scenario printed by `show-schema`.
pub const SCHEMA_TEXT: &str = r#"# Scenario schema, version 1. Unknown keys are rejected.
schema = 1                 # required
name = "example"           # free text, copied into the report
seed = 7                   # drives every random choice; --seed overrides
tolerance = 1e-8           # invariant slack; --tol overrides
coupling = "affine"        # or "modulus": H0 + sum |beta_i| V_i

# Operator: either a grid Laplacian ...
[operator]
kind = "grid"
extent = [[0.0, 10.0]]     # one [lo, hi] per axis, Dirichlet walls outside
points = [128]             # interior nodes per axis
# ... or explicit sparse matrices (no [family] then):
# kind = "matrix"
# dim = 2
# h0 = [[1, 1, 1.0]]                     # [row, col, re] or [row, col, re, im]
# terms = [[[0, 1, 1.0], [1, 0, 1.0]]]   # one entry list per V_i

# Potential family on the grid (one of three generators).
[family]
kind = "periodic_bumps"    # Gaussian bumps on a cubic lattice
per_axis = 3
spacing = 2.5
origin = 2.5
height = 20.0
width = 0.4
support = 1.5              # side of the support cube
# kind = "disordered": count, lo, hi, separation (A), constant (C), decay (k)
# kind = "explicit": terms = [{ center, profile = { kind, ... }, support = [{ lo, hi }], decay? }]
#   profile kinds: constant{value}, gaussian{amplitude, width},
#                  power_spike{amplitude, exponent}, decaying_tail{amplitude, decay}

[beta]
values = [0.0, 0.0, 0.0]   # missing trailing entries are zero
p = 2.0                    # l^p exponent, inf allowed
# sample_radius = 0.5      # instead of values: random point on the l^p sphere

# Tasks run in order of appearance; results keyed by name.
[[tasks]]
kind = "geometry"          # n0, n1, overlap depth, disjoint refinement
# refinement = true

[[tasks]]
kind = "stummel"           # weighted-sum Stummel bound vs direct norm
rho = 0.5
# spacing = 0.5            # probe grid spacing
# order = 10               # Gauss points per radial panel

[[tasks]]
kind = "bounds"            # relative bound, Kato check, resolvent point, norm chain
# probes = 64
# tail_shells = 2          # certified tail sum (decaying families)

[[tasks]]
kind = "track"             # E along beta0 + s t, s in [from, to]
axis = 0                   # or direction = [..]
from = 0.0
to = 1.0
steps = 21
# start = { level = 0 }    # or { target = { energy = [re, im], radius = r } }
# nodes = 64
# dense_checks = 5         # rows compared with a dense eigensolver
# monotone = "increasing"

[[tasks]]
kind = "sweep"             # like track; keeps a partial table on failure
axis = 0
to = 1.0
steps = 21

[[tasks]]
kind = "taylor"            # Taylor coefficients of E and radius of convergence
axis = 0
# radius = 0.3
# order = 16
# nodes = 128

[[tasks]]
kind = "verify"            # Type-A / Kato / G-analytic / weak checks
# directions = 3
# vectors = 2
# radius = 0.25
"#;
