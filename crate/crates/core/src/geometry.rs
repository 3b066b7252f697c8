//! Admissibility geometry of support families.
//!
//! Supports are finite unions of closed axis-aligned boxes. Boxes that merely
//! touch along a face or at a corner count as intersecting.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Default cap on elementary cells visited by [`disjoint_refinement`].
pub const DEFAULT_REFINEMENT_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Aabb { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Aabb::new(vec![lo], vec![hi]).expect("valid interval")
    }

    fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(Error::InvalidInput(
                "box corners differ in dimension".into(),
            ));
        }
        for (k, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidInput(format!(
                    "box has non-positive extent [{a}, {b}] on axis {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| a <= v && v <= b)
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|k| self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
    }

    pub fn inflated(&self, r: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|a| a - r).collect(),
            hi: self.hi.iter().map(|b| b + r).collect(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// A support set `Ωᵢ`: a union of boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Aabb>", into = "Vec<Aabb>")]
pub struct SupportSet {
    boxes: Vec<Aabb>,
}

impl TryFrom<Vec<Aabb>> for SupportSet {
    type Error = Error;
    fn try_from(boxes: Vec<Aabb>) -> Result<Self> {
        SupportSet::new(boxes)
    }
}

impl From<SupportSet> for Vec<Aabb> {
    fn from(s: SupportSet) -> Self {
        s.boxes
    }
}

impl SupportSet {
    pub fn new(boxes: Vec<Aabb>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::InvalidInput("support set needs at least one box".into()))?;
        let m = first.dim();
        for b in &boxes {
            b.validate()?;
            if b.dim() != m {
                return Err(Error::InvalidInput("boxes of mixed dimension".into()));
            }
        }
        Ok(SupportSet { boxes })
    }

    pub fn single(b: Aabb) -> Self {
        SupportSet { boxes: vec![b] }
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn intersects(&self, other: &SupportSet) -> bool {
        self.boxes
            .iter()
            .any(|a| other.boxes.iter().any(|b| a.intersects(b)))
    }

    /// Bounding box of the union.
    pub fn bounds(&self) -> Aabb {
        let m = self.dim();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for b in &self.boxes {
            for k in 0..m {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        Aabb { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SupportSet>", into = "Vec<SupportSet>")]
pub struct SupportFamily {
    sets: Vec<SupportSet>,
}

impl TryFrom<Vec<SupportSet>> for SupportFamily {
    type Error = Error;
    fn try_from(sets: Vec<SupportSet>) -> Result<Self> {
        SupportFamily::new(sets)
    }
}

impl From<SupportFamily> for Vec<SupportSet> {
    fn from(f: SupportFamily) -> Self {
        f.sets
    }
}

impl SupportFamily {
    pub fn new(sets: Vec<SupportSet>) -> Result<Self> {
        let m = sets
            .first()
            .ok_or_else(|| Error::InvalidInput("support family is empty".into()))?
            .dim();
        if sets.iter().any(|s| s.dim() != m) {
            return Err(Error::InvalidInput(
                "support sets of mixed dimension".into(),
            ));
        }
        Ok(SupportFamily { sets })
    }

    /// One box per set.
    pub fn from_boxes(boxes: Vec<Aabb>) -> Result<Self> {
        Self::new(boxes.into_iter().map(SupportSet::single).collect())
    }

    pub fn sets(&self) -> &[SupportSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    /// Indices of the sets containing `x`, ascending.
    pub fn membership(&self, x: &[f64]) -> Vec<usize> {
        (0..self.sets.len())
            .filter(|&i| self.sets[i].contains(x))
            .collect()
    }

    pub fn bounds(&self) -> Aabb {
        let m = self.dim();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for s in &self.sets {
            let b = s.bounds();
            for k in 0..m {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        Aabb { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionStats {
    /// `neighbors[i]` is `Iᵢ = { j ≠ i : Ωᵢ ∩ Ωⱼ ≠ ∅ }`, ascending.
    pub neighbors: Vec<Vec<usize>>,
    /// `maxᵢ #Iᵢ`.
    pub n0: usize,
}

pub fn intersection_stats(family: &SupportFamily) -> IntersectionStats {
    let n = family.len();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if family.sets[i].intersects(&family.sets[j]) {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    neighbors.iter_mut().for_each(|v| v.sort_unstable());
    let n0 = neighbors.iter().map(Vec::len).max().unwrap_or(0);
    IntersectionStats { neighbors, n0 }
}

/// `n1`: the largest number of sets meeting one ball of the given radius.
///
/// The ball is replaced by the enclosing cube, so this is an upper bound on
/// the Euclidean count (exact in one dimension).
pub fn check_fip_variant(family: &SupportFamily, radius: f64) -> Result<usize> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "radius {radius} must be positive"
        )));
    }
    let boxes: Vec<(usize, Aabb)> = family
        .sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.boxes.iter().map(move |b| (i, b.inflated(radius))))
        .collect();
    Ok(max_overlap_depth(&boxes, 0))
}

/// Largest number of distinct labels whose closed boxes share a point.
///
/// A deepest point can always be moved, axis by axis, onto the largest lower
/// face among its witnesses, so lower faces are the only candidates.
pub fn max_overlap_depth(boxes: &[(usize, Aabb)], axis: usize) -> usize {
    if boxes.is_empty() {
        return 0;
    }
    let m = boxes[0].1.dim();
    if axis + 1 == m {
        return sweep_depth(boxes, axis);
    }
    let mut candidates: Vec<f64> = boxes.iter().map(|(_, b)| b.lo[axis]).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = 0;
    for c in candidates {
        let slab: Vec<(usize, Aabb)> = boxes
            .iter()
            .filter(|(_, b)| b.lo[axis] <= c && c <= b.hi[axis])
            .cloned()
            .collect();
        let labels: BTreeSet<usize> = slab.iter().map(|(i, _)| *i).collect();
        if labels.len() <= best {
            continue;
        }
        best = best.max(max_overlap_depth(&slab, axis + 1));
    }
    best
}

fn sweep_depth(boxes: &[(usize, Aabb)], axis: usize) -> usize {
    // Merge each label's intervals first so a label is counted once.
    let mut per_label: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, b) in boxes {
        per_label
            .entry(*i)
            .or_default()
            .push((b.lo[axis], b.hi[axis]));
    }
    let mut events: Vec<(f64, i32)> = Vec::new();
    for (_, mut ivs) in per_label {
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in ivs {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        for (a, b) in merged {
            events.push((a, 1));
            events.push((b, -1));
        }
    }
    // Closed intervals: at equal coordinates, openings come first.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut depth = 0i32;
    let mut best = 0i32;
    for (_, d) in events {
        depth += d;
        best = best.max(depth);
    }
    best as usize
}

/// One cell of the disjoint refinement: the region where the maximal index
/// set equals `indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCell {
    pub region: Vec<Aabb>,
    pub indices: Vec<usize>,
}

impl RefinementCell {
    pub fn volume(&self) -> f64 {
        self.region.iter().map(Aabb::volume).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementPartition {
    pub cells: Vec<RefinementCell>,
    /// Arrangement coordinates per axis.
    #[serde(skip)]
    coords: Vec<Vec<f64>>,
    /// Cell id of every elementary box of the arrangement (axis 0 fastest).
    #[serde(skip)]
    lookup: Vec<Option<usize>>,
}

impl RefinementPartition {
    /// Number of cells whose index set contains `i`.
    pub fn cells_containing(&self, i: usize) -> usize {
        self.cells
            .iter()
            .filter(|c| c.indices.binary_search(&i).is_ok())
            .count()
    }

    /// The cell a point belongs to, `None` outside the union. Its index set
    /// is exactly the set of supports containing `x`.
    pub fn locate(&self, x: &[f64]) -> Option<&RefinementCell> {
        let mut flat = 0;
        let mut stride = 1;
        for (k, axis) in self.coords.iter().enumerate() {
            let slot = slot_of(axis, x[k])?;
            flat += slot * stride;
            stride *= 2 * axis.len() - 1;
        }
        self.lookup[flat].map(|id| &self.cells[id])
    }
}

/// Slot `2i` is the coordinate `cᵢ` itself, slot `2i + 1` the open interval
/// `(cᵢ, cᵢ₊₁)`.
fn slot_of(axis: &[f64], v: f64) -> Option<usize> {
    if !(v >= axis[0] && v <= axis[axis.len() - 1]) {
        return None;
    }
    let pos = axis.partition_point(|&c| c < v);
    Some(if axis[pos] == v { 2 * pos } else { 2 * pos - 1 })
}

pub fn disjoint_refinement(family: &SupportFamily) -> Result<RefinementPartition> {
    disjoint_refinement_with_budget(family, DEFAULT_REFINEMENT_BUDGET)
}

/// Splits the union of the supports into cells of constant maximal index set,
/// using the arrangement spanned by all box faces. Supports are closed, so
/// the arrangement includes its faces, edges and vertices: where two boxes
/// only touch, the contact is a cell of zero volume.
pub fn disjoint_refinement_with_budget(
    family: &SupportFamily,
    budget: usize,
) -> Result<RefinementPartition> {
    let m = family.dim();
    let all_boxes: Vec<(usize, &Aabb)> = family
        .sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.boxes.iter().map(move |b| (i, b)))
        .collect();
    let coords: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut c: Vec<f64> = all_boxes
                .iter()
                .flat_map(|(_, b)| [b.lo[k], b.hi[k]])
                .collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let slots: Vec<usize> = coords.iter().map(|c| 2 * c.len() - 1).collect();
    let total = slots
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if total > budget {
        return Err(Error::Budget {
            what: "refinement cells",
            needed: total,
            budget,
        });
    }
    let extent = |k: usize, s: usize| (coords[k][s / 2], coords[k][s.div_ceil(2)]);

    // Per axis and slot, which boxes cover that slot.
    let covers: Vec<Vec<Vec<bool>>> = (0..m)
        .map(|k| {
            (0..slots[k])
                .map(|s| {
                    let (a, c) = extent(k, s);
                    all_boxes
                        .iter()
                        .map(|(_, b)| b.lo[k] <= a && c <= b.hi[k])
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut multi = vec![0usize; m];
    for flat in 0..total {
        let mut rest = flat;
        for k in 0..m {
            multi[k] = rest % slots[k];
            rest /= slots[k];
        }
        let mut indices: Vec<usize> = all_boxes
            .iter()
            .enumerate()
            .filter(|(bi, _)| (0..m).all(|k| covers[k][multi[k]][*bi]))
            .map(|(_, (set, _))| *set)
            .collect();
        if indices.is_empty() {
            continue;
        }
        indices.sort_unstable();
        indices.dedup();
        groups.entry(indices).or_default().push(flat);
    }

    let mut lookup = vec![None; total];
    let mut cells = Vec::with_capacity(groups.len());
    for (id, (indices, flats)) in groups.into_iter().enumerate() {
        let mut boxes = Vec::with_capacity(flats.len());
        for flat in flats {
            lookup[flat] = Some(id);
            let mut rest = flat;
            let mut lo = Vec::with_capacity(m);
            let mut hi = Vec::with_capacity(m);
            for (k, &n) in slots.iter().enumerate() {
                let (a, c) = extent(k, rest % n);
                rest /= n;
                lo.push(a);
                hi.push(c);
            }
            boxes.push(Aabb { lo, hi });
        }
        cells.push(RefinementCell {
            region: merge_boxes(boxes),
            indices,
        });
    }
    Ok(RefinementPartition {
        cells,
        coords,
        lookup,
    })
}

/// Greedy face merging, one pass per axis.
fn merge_boxes(mut boxes: Vec<Aabb>) -> Vec<Aabb> {
    if boxes.is_empty() {
        return boxes;
    }
    let m = boxes[0].dim();
    for k in 0..m {
        let key = |b: &Aabb| -> Vec<f64> {
            (0..m)
                .filter(|&j| j != k)
                .flat_map(|j| [b.lo[j], b.hi[j]])
                .collect()
        };
        boxes.sort_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.lo[k].total_cmp(&b.lo[k]))
        });
        let mut merged: Vec<Aabb> = Vec::with_capacity(boxes.len());
        for b in boxes {
            match merged.last_mut() {
                Some(last) if key(last) == key(&b) && last.hi[k] == b.lo[k] => last.hi[k] = b.hi[k],
                _ => merged.push(b),
            }
        }
        boxes = merged;
    }
    boxes
}

/// Centers `Rᵢ` with pairwise distance `> 2A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PackingSpec", into = "PackingSpec")]
pub struct PackingConfig {
    centers: Vec<Vec<f64>>,
    separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingSpec {
    pub centers: Vec<Vec<f64>>,
    /// The half-separation `A`.
    pub separation: f64,
}

impl TryFrom<PackingSpec> for PackingConfig {
    type Error = Error;
    fn try_from(s: PackingSpec) -> Result<Self> {
        PackingConfig::new(s.centers, s.separation)
    }
}

impl From<PackingConfig> for PackingSpec {
    fn from(c: PackingConfig) -> Self {
        PackingSpec {
            centers: c.centers,
            separation: c.separation,
        }
    }
}

impl PackingConfig {
    pub fn new(centers: Vec<Vec<f64>>, separation: f64) -> Result<Self> {
        if !(separation > 0.0) {
            return Err(Error::InvalidInput(format!(
                "separation A = {separation} must be positive"
            )));
        }
        if let Some(first) = centers.first() {
            let m = first.len();
            if centers
                .iter()
                .any(|c| c.len() != m || c.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::InvalidInput(
                    "centers of mixed dimension or non-finite".into(),
                ));
            }
        }
        if let Some((i, j)) = closest_violation(&centers, 2.0 * separation) {
            return Err(Error::InvalidInput(format!(
                "centers {i} and {j} are within 2A = {}",
                2.0 * separation
            )));
        }
        Ok(PackingConfig {
            centers,
            separation,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }
}

/// First pair closer than or equal to `min_dist`, found with a hash grid.
fn closest_violation(centers: &[Vec<f64>], min_dist: f64) -> Option<(usize, usize)> {
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let cell_of =
        |c: &[f64]| -> Vec<i64> { c.iter().map(|v| (v / min_dist).floor() as i64).collect() };
    for (i, c) in centers.iter().enumerate() {
        cells.entry(cell_of(c)).or_default().push(i);
    }
    for (i, c) in centers.iter().enumerate() {
        let home = cell_of(c);
        let m = home.len();
        for offset in 0..3usize.pow(m as u32) {
            let mut key = home.clone();
            let mut o = offset;
            for v in key.iter_mut() {
                *v += (o % 3) as i64 - 1;
                o /= 3;
            }
            if let Some(list) = cells.get(&key) {
                for &j in list {
                    if j > i && distance(c, &centers[j]) <= min_dist {
                        return Some((i, j));
                    }
                }
            }
        }
    }
    None
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(R + A)^m / A^m`.
pub fn packing_count_bound(m: usize, radius: f64, separation: f64) -> Result<f64> {
    if radius < 0.0 || !(separation > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need R ≥ 0 and A > 0, got R = {radius}, A = {separation}"
        )));
    }
    Ok(((radius + separation) / separation).powi(m as i32))
}

/// `[(R + d + A)^m − (R − A)^m] / A^m`, valid for `R > A`.
pub fn shell_count_bound(m: usize, radius: f64, width: f64, separation: f64) -> Result<f64> {
    if !(separation > 0.0) || width < 0.0 {
        return Err(Error::InvalidInput(format!(
            "need A > 0 and d ≥ 0, got A = {separation}, d = {width}"
        )));
    }
    if radius <= separation {
        return Err(Error::InvalidInput(format!(
            "shell bound requires R > A (R = {radius}, A = {separation})"
        )));
    }
    let m = m as i32;
    Ok(
        ((radius + width + separation).powi(m) - (radius - separation).powi(m))
            / separation.powi(m),
    )
}

/// Centers in the closed ball `|Rᵢ − x| ≤ R`.
pub fn count_in_ball(config: &PackingConfig, x: &[f64], radius: f64) -> usize {
    config
        .centers
        .iter()
        .filter(|c| distance(c, x) <= radius)
        .count()
}

/// Centers in the shell `R ≤ |Rᵢ − x| < R + d`.
pub fn count_in_shell(config: &PackingConfig, x: &[f64], radius: f64, width: f64) -> usize {
    config
        .centers
        .iter()
        .filter(|c| {
            let d = distance(c, x);
            radius <= d && d < radius + width
        })
        .count()
}
