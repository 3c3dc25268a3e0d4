//! Face lattice of the closed standard simplex.
//!
//! A face is identified by the set of allele labels that are still present.
//! Every face carries a canonical chart: the smallest label is the dependent
//! coordinate (`x^dep = 1 - Σ x^free`) and the remaining labels, ascending,
//! are the chart coordinates. Densities are always stored with respect to the
//! Lebesgue measure of that chart; [`FaceChart::measure_factor`] records how
//! the chart measure relates to the measure induced from the ambient space.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 12;

/// Set of allele labels `I_k ⊆ {0, …, n}`, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaceId(u16);

impl FaceId {
    pub fn new(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Face("a face needs at least one label".into()));
        }
        let mut mask = 0u16;
        for &l in labels {
            if l > MAX_DIM {
                return Err(Error::Face(format!("label {l} exceeds {MAX_DIM}")));
            }
            if mask & (1 << l) != 0 {
                return Err(Error::Face(format!("duplicate label {l}")));
            }
            mask |= 1 << l;
        }
        Ok(FaceId(mask))
    }

    /// The top face `{0, …, n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        FaceId(((1u32 << (n + 1)) - 1) as u16)
    }

    pub fn vertex(label: usize) -> Self {
        assert!(label <= MAX_DIM);
        FaceId(1 << label)
    }

    pub fn mask(&self) -> u16 {
        self.0
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=MAX_DIM).filter(move |&l| self.0 & (1 << l) != 0)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.labels().collect()
    }

    pub fn dim(&self) -> usize {
        self.0.count_ones() as usize - 1
    }

    pub fn contains(&self, label: usize) -> bool {
        label <= MAX_DIM && self.0 & (1 << label) != 0
    }

    pub fn min_label(&self) -> usize {
        self.0.trailing_zeros() as usize
    }

    pub fn max_label(&self) -> usize {
        15 - self.0.leading_zeros() as usize
    }

    /// Face with `label` removed, if the result is still a face.
    pub fn without(&self, label: usize) -> Option<FaceId> {
        if !self.contains(label) || self.dim() == 0 {
            return None;
        }
        Some(FaceId(self.0 & !(1 << label)))
    }

    pub fn with(&self, label: usize) -> FaceId {
        assert!(label <= MAX_DIM);
        FaceId(self.0 | (1 << label))
    }

    pub fn is_subface_of(&self, other: &FaceId) -> bool {
        self.0 & !other.0 == 0
    }

    /// For a facet of `parent`, the single label that `self` lacks.
    pub fn removed_label(&self, parent: &FaceId) -> Option<usize> {
        if !self.is_subface_of(parent) || self.dim() + 1 != parent.dim() {
            return None;
        }
        Some((parent.0 & !self.0).trailing_zeros() as usize)
    }

    /// Image of the face under a relabeling of alleles.
    pub fn permuted(&self, perm: &[usize]) -> FaceId {
        let labels: Vec<usize> = self.labels().map(|l| perm[l]).collect();
        FaceId::new(&labels).expect("permutation images are distinct")
    }
}

impl Ord for FaceId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim()
            .cmp(&other.dim())
            .then_with(|| self.labels().cmp(other.labels()))
    }
}

impl PartialOrd for FaceId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.labels().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FaceId{self}")
    }
}

impl Serialize for FaceId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FaceId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        let face = FaceId::new(&labels).map_err(serde::de::Error::custom)?;
        if face.indices() != labels {
            return Err(serde::de::Error::custom("face labels must be sorted"));
        }
        Ok(face)
    }
}

/// Canonical coordinate chart of a face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceChart {
    pub face: FaceId,
    pub dependent: usize,
    pub free: Vec<usize>,
    /// Ratio of the induced measure to the chart's coordinate Lebesgue measure.
    pub measure_factor: f64,
}

impl FaceChart {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn slot_of(&self, label: usize) -> Option<usize> {
        self.free.iter().position(|&l| l == label)
    }
}

pub fn chart_of(face: FaceId) -> FaceChart {
    let dependent = face.min_label();
    let free: Vec<usize> = face.labels().skip(1).collect();
    let measure_factor = if face.contains(0) {
        1.0
    } else {
        ((face.dim() + 1) as f64).sqrt()
    };
    FaceChart {
        face,
        dependent,
        free,
        measure_factor,
    }
}

/// How one chart coordinate of a face reads on a subface chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordImage {
    /// The allele is absent on the subface.
    Zero,
    /// Equal to the given coordinate slot of the subface chart.
    Slot(usize),
    /// Equal to `1 - Σ` of all subface chart coordinates.
    Complement,
}

/// Expresses each chart coordinate of `from` on the chart of `to ⊆ from`.
pub fn chart_map(from: &FaceChart, to: &FaceChart) -> Result<Vec<CoordImage>> {
    if !to.face.is_subface_of(&from.face) {
        return Err(Error::Face(format!("{} is not a subface of {}", to.face, from.face)));
    }
    Ok(from
        .free
        .iter()
        .map(|&label| {
            if label == to.dependent {
                CoordImage::Complement
            } else if let Some(slot) = to.slot_of(label) {
                CoordImage::Slot(slot)
            } else {
                CoordImage::Zero
            }
        })
        .collect())
}

/// Maps chart coordinates of `face` to ambient coordinates `x^1..x^n`.
pub fn embed_point(n: usize, face: FaceId, coords: &[f64]) -> Result<Vec<f64>> {
    if face.max_label() > n {
        return Err(Error::Face(format!("{face} is not a face of the {n}-simplex")));
    }
    if coords.len() != face.dim() {
        return Err(Error::Shape(format!(
            "face {face} has {} coordinates, got {}",
            face.dim(),
            coords.len()
        )));
    }
    let sum: f64 = coords.iter().sum();
    if coords.iter().any(|c| !c.is_finite() || *c < 0.0) || sum > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("{coords:?} lies outside the closed simplex")));
    }
    let chart = chart_of(face);
    let mut bary = vec![0.0; n + 1];
    for (slot, &label) in chart.free.iter().enumerate() {
        bary[label] = coords[slot];
    }
    bary[chart.dependent] = (1.0 - sum).max(0.0);
    Ok(bary[1..].to_vec())
}

/// All faces of the closed `n`-simplex with their adjacency.
#[derive(Clone, Debug)]
pub struct FaceLattice {
    n: usize,
    by_dim: Vec<Vec<FaceId>>,
    parents: BTreeMap<FaceId, Vec<FaceId>>,
    children: BTreeMap<FaceId, Vec<FaceId>>,
}

pub fn build_lattice(n: usize) -> Result<FaceLattice> {
    if !(1..=MAX_DIM).contains(&n) {
        return Err(Error::Size(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    let mut by_dim = vec![Vec::new(); n + 1];
    for mask in 1u32..(1 << (n + 1)) {
        let face = FaceId(mask as u16);
        by_dim[face.dim()].push(face);
    }
    for faces in &mut by_dim {
        faces.sort();
    }
    let mut parents = BTreeMap::new();
    let mut children = BTreeMap::new();
    for face in by_dim.iter().flatten() {
        let ps: Vec<FaceId> = (0..=n).filter(|l| !face.contains(*l)).map(|l| face.with(l)).collect();
        let cs: Vec<FaceId> = face.labels().filter_map(|l| face.without(l)).collect();
        let mut ps = ps;
        let mut cs = cs;
        ps.sort();
        cs.sort();
        parents.insert(*face, ps);
        children.insert(*face, cs);
    }
    Ok(FaceLattice {
        n,
        by_dim,
        parents,
        children,
    })
}

impl FaceLattice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn top(&self) -> FaceId {
        FaceId::full(self.n)
    }

    /// Faces of dimension `k`, in canonical order.
    pub fn faces_of_dim(&self, k: usize) -> &[FaceId] {
        &self.by_dim[k]
    }

    /// All faces, by dimension then label order.
    pub fn faces(&self) -> impl Iterator<Item = &FaceId> {
        self.by_dim.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_dim.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, face: &FaceId) -> bool {
        face.max_label() <= self.n
    }

    /// Faces obtained by adding one unused label.
    pub fn parents(&self, face: &FaceId) -> &[FaceId] {
        self.parents.get(face).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Faces obtained by deleting one label.
    pub fn children(&self, face: &FaceId) -> &[FaceId] {
        self.children.get(face).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn lattice_counts() {
        let l2 = build_lattice(2).unwrap();
        assert_eq!(l2.faces_of_dim(0).len(), 3);
        assert_eq!(l2.faces_of_dim(1).len(), 3);
        assert_eq!(l2.faces_of_dim(2).len(), 1);

        let l1 = build_lattice(1).unwrap();
        let all: Vec<String> = l1.faces().map(|f| f.to_string()).collect();
        assert_eq!(all, ["[0]", "[1]", "[0,1]"]);

        // brute force over subsets of {0,1,2,3}
        let l3 = build_lattice(3).unwrap();
        let mut brute = 0;
        for mask in 0u32..16 {
            if mask != 0 {
                brute += 1;
            }
        }
        assert_eq!(l3.len(), brute);
        assert_eq!(l3.len(), 15);

        for n in 1..=6 {
            let lat = build_lattice(n).unwrap();
            for k in 0..=n {
                assert_eq!(lat.faces_of_dim(k).len(), binomial(n + 1, k + 1));
                for face in lat.faces_of_dim(k) {
                    assert_eq!(lat.parents(face).len(), n - k);
                    let expected_children = if k == 0 { 0 } else { k + 1 };
                    assert_eq!(lat.children(face).len(), expected_children);
                    for c in lat.children(face) {
                        assert!(c.is_subface_of(face));
                        assert_eq!(c.dim() + 1, face.dim());
                        assert!(lat.parents(c).contains(face));
                    }
                }
            }
            assert_eq!(lat.faces_of_dim(n), &[FaceId::full(n)]);
        }
    }

    #[test]
    fn size_limits() {
        assert!(matches!(build_lattice(0), Err(Error::Size(_))));
        assert!(matches!(build_lattice(13), Err(Error::Size(_))));
        assert!(build_lattice(12).is_ok());
    }

    #[test]
    fn face_validation() {
        assert!(FaceId::new(&[]).is_err());
        assert!(FaceId::new(&[1, 1]).is_err());
        let f = FaceId::new(&[3, 0, 2]).unwrap();
        assert_eq!(f.indices(), vec![0, 2, 3]);
        assert_eq!(f.dim(), 2);
        assert_eq!(f.to_string(), "[0,2,3]");
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "[0,2,3]");
        assert_eq!(serde_json::from_str::<FaceId>(&json).unwrap(), f);
        assert!(serde_json::from_str::<FaceId>("[2,0]").is_err());
    }

    #[test]
    fn charts() {
        let c = chart_of(FaceId::new(&[0, 1, 2]).unwrap());
        assert_eq!((c.dependent, c.free.clone(), c.measure_factor), (0, vec![1, 2], 1.0));

        let c = chart_of(FaceId::new(&[1, 2]).unwrap());
        assert_eq!((c.dependent, c.free.clone()), (1, vec![2]));
        // the segment (1,0)-(0,1) has length √2 against a unit coordinate range
        let seg = ((1.0f64 - 0.0).powi(2) + (0.0f64 - 1.0).powi(2)).sqrt();
        assert!((c.measure_factor - seg).abs() < 1e-15);

        let c = chart_of(FaceId::vertex(3));
        assert_eq!((c.dependent, c.free.len(), c.measure_factor), (3, 0, 1.0));
    }

    #[test]
    fn embedding() {
        let e = embed_point(2, FaceId::new(&[1, 2]).unwrap(), &[0.3]).unwrap();
        assert!((e[0] - 0.7).abs() < 1e-15 && (e[1] - 0.3).abs() < 1e-15);
        assert_eq!(
            embed_point(2, FaceId::new(&[0, 1]).unwrap(), &[0.4]).unwrap(),
            vec![0.4, 0.0]
        );
        assert_eq!(embed_point(2, FaceId::vertex(2), &[]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(embed_point(2, FaceId::vertex(0), &[]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            embed_point(2, FaceId::new(&[0, 1, 2]).unwrap(), &[0.7, 0.5]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            embed_point(2, FaceId::new(&[0, 1]).unwrap(), &[-0.1]),
            Err(Error::Domain(_))
        ));
        assert!(embed_point(1, FaceId::new(&[1, 2]).unwrap(), &[0.3]).is_err());
    }

    #[test]
    fn chart_maps() {
        let top = chart_of(FaceId::full(3));
        let diag = chart_of(FaceId::new(&[1, 2, 3]).unwrap());
        assert_eq!(
            chart_map(&top, &diag).unwrap(),
            vec![CoordImage::Complement, CoordImage::Slot(0), CoordImage::Slot(1)]
        );
        let coord = chart_of(FaceId::new(&[0, 1, 3]).unwrap());
        assert_eq!(
            chart_map(&top, &coord).unwrap(),
            vec![CoordImage::Slot(0), CoordImage::Zero, CoordImage::Slot(1)]
        );
        assert!(chart_map(&diag, &top).is_err());
    }

    #[test]
    fn relabeling_is_an_automorphism() {
        let n = 3;
        let lat = build_lattice(n).unwrap();
        let perms: [[usize; 4]; 3] = [[1, 0, 2, 3], [3, 2, 1, 0], [0, 3, 1, 2]];
        for perm in perms {
            for face in lat.faces() {
                let img = face.permuted(&perm);
                assert!(lat.contains(&img));
                assert_eq!(img.dim(), face.dim());
                let mut mapped: Vec<FaceId> = lat.children(face).iter().map(|c| c.permuted(&perm)).collect();
                mapped.sort();
                assert_eq!(mapped, lat.children(&img));
                if perm[0] == 0 {
                    assert_eq!(chart_of(*face).measure_factor, chart_of(img).measure_factor);
                }
            }
        }
    }
}
