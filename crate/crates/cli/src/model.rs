//! Turns a scenario into operators: `H₀`, the term operators `Vᵢ`, the
//! coupling point `β` and, for grid scenarios, the potential family.

use crate::scenario::{BetaSpec, Coupling, FamilySpec, OperatorSpec, Scenario};
use couplings::analytic::{AffineFamily, OperatorFamily};
use couplings::lattice::{build_laplacian, lp_norm, DiscreteOperator, Grid, SampledFamily};
use couplings::potentials::{generators, PotentialFamily, PotentialTerm};
use couplings::rng::{real_gaussian_vector, seeded};
use couplings::{Error, Result, C64};

pub struct Model {
    pub h0: DiscreteOperator,
    pub affine: AffineFamily,
    pub coupling: Coupling,
    pub beta: Vec<C64>,
    pub p: f64,
    pub grid: Option<Grid>,
    pub potentials: Option<PotentialFamily>,
    pub sampled: Option<SampledFamily>,
    /// `A` of a disordered family.
    pub separation: Option<f64>,
}

/// `H₀ + Σ |βᵢ|Vᵢ`.
struct ModulusFamily<'a>(&'a AffineFamily);

impl OperatorFamily for ModulusFamily<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn params(&self) -> usize {
        self.0.params()
    }

    fn at(&self, beta: &[C64]) -> Result<DiscreteOperator> {
        let abs: Vec<C64> = beta.iter().map(|b| C64::new(b.norm(), 0.0)).collect();
        self.0.at(&abs)
    }
}

impl Model {
    pub fn build(s: &Scenario) -> Result<Model> {
        let (h0, terms, grid, potentials, sampled, separation) = match &s.operator {
            OperatorSpec::Matrix { dim, h0, terms } => {
                let h0 = matrix(*dim, h0)?;
                let terms = terms
                    .iter()
                    .map(|t| matrix(*dim, t))
                    .collect::<Result<Vec<_>>>()?;
                (h0, terms, None, None, None, None)
            }
            OperatorSpec::Grid { extent, points } => {
                let grid = Grid::new(extent, points)?;
                let h0 = build_laplacian(&grid);
                match &s.family {
                    None => (h0, Vec::new(), Some(grid), None, None, None),
                    Some(spec) => {
                        let (terms, separation) = family_terms(spec, grid.dim(), s.seed)?;
                        let potentials = PotentialFamily::new(terms)?;
                        let sampled = potentials.sample(&grid)?;
                        let ops = (0..sampled.len())
                            .map(|i| sampled.term_operator(i))
                            .collect();
                        (
                            h0,
                            ops,
                            Some(grid),
                            Some(potentials),
                            Some(sampled),
                            separation,
                        )
                    }
                }
            }
        };
        let beta = coupling_point(&s.beta, terms.len(), s.seed)?;
        let affine = AffineFamily::new(h0.clone(), terms)?;
        Ok(Model {
            h0,
            affine,
            coupling: s.coupling,
            beta,
            p: s.beta.p,
            grid,
            potentials,
            sampled,
            separation,
        })
    }

    pub fn family(&self) -> Box<dyn OperatorFamily + '_> {
        match self.coupling {
            Coupling::Affine => Box::new(AffineRef(&self.affine)),
            Coupling::Modulus => Box::new(ModulusFamily(&self.affine)),
        }
    }

    pub fn params(&self) -> usize {
        self.affine.params()
    }

    /// Effective couplings as they enter the affine form.
    pub fn effective_beta(&self) -> Vec<C64> {
        match self.coupling {
            Coupling::Affine => self.beta.clone(),
            Coupling::Modulus => self.beta.iter().map(|b| C64::new(b.norm(), 0.0)).collect(),
        }
    }
}

struct AffineRef<'a>(&'a AffineFamily);

impl OperatorFamily for AffineRef<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn params(&self) -> usize {
        self.0.params()
    }

    fn at(&self, beta: &[C64]) -> Result<DiscreteOperator> {
        self.0.at(beta)
    }
}

fn matrix(dim: usize, entries: &[Vec<f64>]) -> Result<DiscreteOperator> {
    DiscreteOperator::from_triplets(
        dim,
        entries.iter().map(|e| {
            let im = e.get(3).copied().unwrap_or(0.0);
            (e[0] as usize, e[1] as usize, C64::new(e[2], im))
        }),
    )
}

fn family_terms(
    spec: &FamilySpec,
    dim: usize,
    seed: u64,
) -> Result<(Vec<PotentialTerm>, Option<f64>)> {
    match spec {
        FamilySpec::PeriodicBumps {
            per_axis,
            spacing,
            origin,
            height,
            width,
            support,
        } => Ok((
            generators::periodic_bumps(
                dim, *per_axis, *spacing, *origin, *height, *width, *support,
            )?,
            None,
        )),
        FamilySpec::Disordered {
            count,
            lo,
            hi,
            separation,
            constant,
            decay,
        } => Ok((
            generators::disordered_tails(
                dim,
                *count,
                *lo,
                *hi,
                *separation,
                *constant,
                *decay,
                seed,
            )?,
            Some(*separation),
        )),
        FamilySpec::Explicit { terms } => {
            let terms = terms
                .iter()
                .cloned()
                .map(PotentialTerm::try_from)
                .collect::<Result<Vec<_>>>()?;
            if let Some(t) = terms.iter().find(|t| t.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.dim(),
                });
            }
            Ok((terms, None))
        }
    }
}

fn coupling_point(spec: &BetaSpec, len: usize, seed: u64) -> Result<Vec<C64>> {
    if spec.values.len() > len {
        return Err(Error::InvalidInput(format!(
            "beta.values has {} entries for {len} couplings",
            spec.values.len()
        )));
    }
    let mut beta: Vec<C64> = spec.values.iter().map(|&b| C64::new(b, 0.0)).collect();
    beta.resize(len, C64::new(0.0, 0.0));
    if let Some(r) = spec.sample_radius {
        if len > 0 {
            // Separate stream from the one the tasks draw from.
            let mut rng = seeded(seed ^ 0xbe7a);
            let g: Vec<C64> = real_gaussian_vector(&mut rng, len)
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect();
            let n = lp_norm(&g, spec.p);
            beta = g.iter().map(|z| z * (r / n)).collect();
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse;

    #[test]
    fn modulus_family_uses_absolute_values() {
        let s = parse(
            r#"
schema = 1
coupling = "modulus"
[operator]
kind = "matrix"
dim = 1
terms = [[[0, 0, 1.0]]]
"#,
            &[],
        )
        .unwrap();
        let m = Model::build(&s).unwrap();
        let h = m.family().at(&[C64::new(-2.0, 0.0)]).unwrap();
        assert_eq!(h.get(0, 0), C64::new(2.0, 0.0));
    }

    #[test]
    fn sampled_beta_has_requested_norm() {
        let s = parse(
            r#"
schema = 1
seed = 3
[operator]
kind = "grid"
extent = [[0.0, 6.0]]
points = [30]
[family]
kind = "periodic_bumps"
per_axis = 4
spacing = 1.5
origin = 0.75
height = 1.0
width = 0.2
support = 1.0
[beta]
p = 1.0
sample_radius = 0.5
"#,
            &[],
        )
        .unwrap();
        let m = Model::build(&s).unwrap();
        assert_eq!(m.beta.len(), 4);
        assert!((lp_norm(&m.beta, 1.0) - 0.5).abs() < 1e-12);
    }
}
