//! Finite boxes, regions and matrix realizations of lattice Hamiltonians.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionRelation, HoppingTerm};
use crate::error::{LightconeError, Result};
use crate::linalg::{CsrMatrix, C64};

/// Axis-aligned box `Π_j [l_j, u_j] ⊂ ℤⁿ` with open boundary. Sites are
/// indexed in row-major order, so index order equals lexicographic order of
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[i64; 2]>", into = "Vec<[i64; 2]>")]
pub struct LatticeBox {
    ranges: Vec<[i64; 2]>,
}

impl TryFrom<Vec<[i64; 2]>> for LatticeBox {
    type Error = LightconeError;

    fn try_from(ranges: Vec<[i64; 2]>) -> Result<Self> {
        LatticeBox::new(ranges)
    }
}

impl From<LatticeBox> for Vec<[i64; 2]> {
    fn from(b: LatticeBox) -> Self {
        b.ranges
    }
}

impl LatticeBox {
    pub fn new(ranges: Vec<[i64; 2]>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(LightconeError::domain("box needs at least one axis"));
        }
        if let Some(r) = ranges.iter().find(|r| r[0] > r[1]) {
            return Err(LightconeError::domain(format!("empty axis range [{}, {}]", r[0], r[1])));
        }
        Ok(LatticeBox { ranges })
    }

    /// The chain `[lo, hi] ⊂ ℤ`.
    pub fn chain(lo: i64, hi: i64) -> Result<Self> {
        LatticeBox::new(vec![[lo, hi]])
    }

    /// Chain of `len` sites centred at the origin (`len` odd) or starting at
    /// `-(len/2)`.
    pub fn centered_chain(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(LightconeError::domain("chain length must be positive"));
        }
        let lo = -((len / 2) as i64);
        LatticeBox::chain(lo, lo + len as i64 - 1)
    }

    pub fn dimension(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[[i64; 2]] {
        &self.ranges
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.ranges[axis][1] - self.ranges[axis][0] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dimension()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dimension() && x.iter().zip(&self.ranges).all(|(v, r)| *v >= r[0] && *v <= r[1])
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for (axis, v) in x.iter().enumerate() {
            idx = idx * self.extent(axis) + (v - self.ranges[axis][0]) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut index: usize) -> Vec<i64> {
        let n = self.dimension();
        let mut x = vec![0; n];
        for axis in (0..n).rev() {
            let e = self.extent(axis);
            x[axis] = self.ranges[axis][0] + (index % e) as i64;
            index /= e;
        }
        x
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        self.ranges.iter().map(|r| ((r[1] - r[0]) as f64).powi(2)).sum::<f64>().sqrt()
    }
}

/// A set of box sites, stored as sorted, duplicate-free site indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    sites: Vec<usize>,
}

impl Region {
    pub fn from_indices(label: impl Into<String>, lattice: &LatticeBox, mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if let Some(&s) = sites.last() {
            if s >= lattice.len() {
                return Err(LightconeError::domain(format!("site index {s} outside box of {} sites", lattice.len())));
            }
        }
        Ok(Region { label: label.into(), sites })
    }

    pub fn from_coords(label: impl Into<String>, lattice: &LatticeBox, coords: &[Vec<i64>]) -> Result<Self> {
        let label = label.into();
        let mut sites = Vec::with_capacity(coords.len());
        for x in coords {
            match lattice.index_of(x) {
                Some(i) => sites.push(i),
                None => return Err(LightconeError::domain(format!("site {x:?} of region '{label}' outside box"))),
            }
        }
        Region::from_indices(label, lattice, sites)
    }

    /// Axis-aligned sub-box `Π_j [lo_j, hi_j]`, which must lie inside the box.
    pub fn cuboid(label: impl Into<String>, lattice: &LatticeBox, ranges: &[[i64; 2]]) -> Result<Self> {
        let label = label.into();
        if ranges.len() != lattice.dimension() {
            return Err(LightconeError::Dimension { expected: lattice.dimension(), found: ranges.len() });
        }
        for (r, b) in ranges.iter().zip(lattice.ranges()) {
            if r[0] > r[1] {
                return Err(LightconeError::domain(format!("empty interval in region '{label}'")));
            }
            if r[0] < b[0] || r[1] > b[1] {
                return Err(LightconeError::domain(format!("region '{label}' extends outside the box")));
            }
        }
        let sub = LatticeBox::new(ranges.to_vec())?;
        let sites = sub.sites().map(|x| lattice.index_of(&x).expect("inside box")).collect();
        Region::from_indices(label, lattice, sites)
    }

    /// 1-D interval `[lo, hi]`.
    pub fn interval(label: impl Into<String>, lattice: &LatticeBox, lo: i64, hi: i64) -> Result<Self> {
        Region::cuboid(label, lattice, &[[lo, hi]])
    }

    pub fn whole(lattice: &LatticeBox) -> Self {
        Region { label: "box".into(), sites: (0..lattice.len()).collect() }
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Region { label: label.into(), sites: Vec::new() }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn intersects(&self, other: &Region) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.sites.len() && j < other.sites.len() {
            match self.sites[i].cmp(&other.sites[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn complement(&self, lattice: &LatticeBox) -> Region {
        let sites = (0..lattice.len()).filter(|s| !self.contains(*s)).collect();
        Region { label: format!("{}^c", self.label), sites }
    }

    /// Indicator vector of length `n` (the diagonal of χ).
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.sites {
            m[s] = true;
        }
        m
    }

    pub fn coords(&self, lattice: &LatticeBox) -> Vec<Vec<i64>> {
        self.sites.iter().map(|&s| lattice.site(s)).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

fn dist2(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `min_{x∈X, y∈Y} |x - y|`.
pub fn region_distance(lattice: &LatticeBox, x: &Region, y: &Region) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(LightconeError::domain("distance to an empty region is undefined"));
    }
    let yc = y.coords(lattice);
    let mut best = i64::MAX;
    for &s in x.sites() {
        let xs = lattice.site(s);
        for q in &yc {
            best = best.min(dist2(&xs, q));
            if best == 0 {
                return Ok(0.0);
            }
        }
    }
    Ok((best as f64).sqrt())
}

/// `X_η = X ∪ {x ∈ box : d_X(x) < η}`.
pub fn neighborhood(x: &Region, eta: f64, lattice: &LatticeBox) -> Result<Region> {
    if !(eta >= 0.0) {
        return Err(LightconeError::domain(format!("neighbourhood radius must be non-negative, got {eta}")));
    }
    let label = format!("{}_eta", x.label);
    if eta == 0.0 || x.is_empty() {
        return Ok(x.clone().with_label(label));
    }
    if eta > lattice.diameter() {
        return Ok(Region::whole(lattice).with_label(label));
    }
    let xc = x.coords(lattice);
    let eta2 = eta * eta;
    let sites = (0..lattice.len())
        .filter(|&s| {
            x.contains(s) || {
                let p = lattice.site(s);
                xc.iter().any(|q| (dist2(&p, q) as f64) < eta2)
            }
        })
        .collect();
    Ok(Region { label, sites })
}

/// A unit direction `b` and the gap `inf_X b·x - sup_Y b·y` it realizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceSeparation {
    pub direction: Vec<f64>,
    pub gap: f64,
}

/// Best axis direction separating X from Y by a half-space, if any.
///
/// With deformation direction `b`, conjugation by `e^{μ b·x}` gives
/// `‖χ_X U_t χ_Y‖ ≤ e^{-μ gap} ‖U_{t,iμb}‖`.
pub fn half_space_gap(lattice: &LatticeBox, x: &Region, y: &Region) -> Result<Option<HalfSpaceSeparation>> {
    if x.is_empty() || y.is_empty() {
        return Err(LightconeError::domain("half-space gap of an empty region is undefined"));
    }
    let xc = x.coords(lattice);
    let yc = y.coords(lattice);
    let mut best: Option<HalfSpaceSeparation> = None;
    for axis in 0..lattice.dimension() {
        for sign in [1i64, -1] {
            let rx = xc.iter().map(|p| sign * p[axis]).min().expect("nonempty");
            let ry = yc.iter().map(|p| sign * p[axis]).max().expect("nonempty");
            let gap = (rx - ry) as f64;
            if gap > 0.0 && best.as_ref().map_or(true, |b| gap > b.gap) {
                let mut direction = vec![0.0; lattice.dimension()];
                direction[axis] = sign as f64;
                best = Some(HalfSpaceSeparation { direction, gap });
            }
        }
    }
    Ok(best)
}

/// Minimal margin kept between a ballistic front and the box faces.
pub const BOUNDARY_MARGIN: f64 = 5.0;

/// Check that a front leaving `source` at `speed` for time `t_max` stays at
/// least [`BOUNDARY_MARGIN`] sites from every face the region does not touch.
pub fn check_boundary_window(lattice: &LatticeBox, source: &Region, speed: f64, t_max: f64) -> Result<()> {
    if source.is_empty() {
        return Ok(());
    }
    let coords = source.coords(lattice);
    let reach = speed.max(0.0) * t_max.abs();
    for (axis, r) in lattice.ranges().iter().enumerate() {
        let lo = coords.iter().map(|p| p[axis]).min().expect("nonempty");
        let hi = coords.iter().map(|p| p[axis]).max().expect("nonempty");
        for (touch, room) in [(lo == r[0], (lo - r[0]) as f64), (hi == r[1], (r[1] - hi) as f64)] {
            if !touch && room - reach < BOUNDARY_MARGIN {
                return Err(LightconeError::domain(format!(
                    "front from region '{}' reaches within {:.1} sites of the box boundary on axis {axis} \
                     (speed {speed:.4}, t_max {t_max})",
                    source.label,
                    room - reach
                )));
            }
        }
    }
    Ok(())
}

/// Real external potential `v(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    Constant { value: f64 },
    /// `v(x) = slope · x`.
    Linear { slope: Vec<f64> },
    /// `v(x) = strength · δ_{x, site}`.
    Delta { site: Vec<i64>, strength: f64 },
    /// One value per box site in index order.
    Values { values: Vec<f64> },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Zero
    }
}

impl Potential {
    /// Values on every box site.
    pub fn sample(&self, lattice: &LatticeBox) -> Result<Vec<f64>> {
        let n = lattice.len();
        let values = match self {
            Potential::Zero => vec![0.0; n],
            Potential::Constant { value } => vec![*value; n],
            Potential::Linear { slope } => {
                if slope.len() != lattice.dimension() {
                    return Err(LightconeError::Dimension { expected: lattice.dimension(), found: slope.len() });
                }
                lattice.sites().map(|x| x.iter().zip(slope).map(|(&a, s)| a as f64 * s).sum()).collect()
            }
            Potential::Delta { site, strength } => {
                let idx = lattice
                    .index_of(site)
                    .ok_or_else(|| LightconeError::domain(format!("delta site {site:?} outside box")))?;
                let mut v = vec![0.0; n];
                v[idx] = *strength;
                v
            }
            Potential::Values { values } => {
                if values.len() != n {
                    return Err(LightconeError::Dimension { expected: n, found: values.len() });
                }
                values.clone()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LightconeError::domain("potential must be real and finite"));
        }
        Ok(values)
    }
}

/// Finite-box matrix of `H = T + V`, optionally deformed to `H_ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeHamiltonian {
    lattice: LatticeBox,
    hopping: Vec<HoppingTerm>,
    potential: Vec<f64>,
    strip: f64,
    deformation: Option<Vec<C64>>,
    matrix: CsrMatrix,
}

impl LatticeHamiltonian {
    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn hopping(&self) -> &[HoppingTerm] {
        &self.hopping
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn deformation(&self) -> Option<&[C64]> {
        self.deformation.as_deref()
    }

    pub fn is_deformed(&self) -> bool {
        self.deformation.is_some()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        self.matrix.to_dense()
    }

    /// Max entry of `|H - H*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// True when the matrix is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.matrix.triplets().all(|(i, j, _)| i == j)
    }
}

/// `(T)_{xy} = t_{x-y}` restricted to the box, plus `V = diag v`.
pub fn build_hamiltonian(disp: &DispersionRelation, potential: &Potential, lattice: &LatticeBox) -> Result<LatticeHamiltonian> {
    if disp.dimension() != lattice.dimension() {
        return Err(LightconeError::Dimension { expected: lattice.dimension(), found: disp.dimension() });
    }
    let hopping = disp.hopping_terms()?;
    let v = potential.sample(lattice)?;
    let n = lattice.len();
    let mut triplets = Vec::with_capacity(n * (hopping.len() + 1));
    for col in 0..n {
        let y = lattice.site(col);
        for term in &hopping {
            let x: Vec<i64> = y.iter().zip(&term.displacement).map(|(a, d)| a + d).collect();
            if let Some(row) = lattice.index_of(&x) {
                triplets.push((row, col, C64::new(term.amplitude, 0.0)));
            }
        }
        if v[col] != 0.0 {
            triplets.push((col, col, C64::new(v[col], 0.0)));
        }
    }
    let matrix = CsrMatrix::from_triplets(n, triplets);
    Ok(LatticeHamiltonian {
        lattice: lattice.clone(),
        hopping,
        potential: v,
        strip: disp.strip(),
        deformation: None,
        matrix,
    })
}

/// `H_ζ = T_ζ H T_ζ^{-1}` with `T_ζ = e^{-iζ·x}`:
/// `(H_ζ)_{xy} = e^{-iζ·(x-y)} h_{xy}`.
pub fn build_deformed_hamiltonian(h: &LatticeHamiltonian, zeta: &[C64]) -> Result<LatticeHamiltonian> {
    if h.is_deformed() {
        return Err(LightconeError::domain("Hamiltonian is already deformed"));
    }
    if zeta.len() != h.lattice.dimension() {
        return Err(LightconeError::Dimension { expected: h.lattice.dimension(), found: zeta.len() });
    }
    if let Some(z) = zeta.iter().find(|z| z.im.abs() >= h.strip) {
        return Err(LightconeError::domain(format!(
            "|Im ζ| = {} outside the strip of half-width {}",
            z.im.abs(),
            h.strip
        )));
    }
    let lattice = &h.lattice;
    let matrix = h.matrix.map_entries(|i, j, v| {
        if i == j {
            return v;
        }
        let (x, y) = (lattice.site(i), lattice.site(j));
        let phase: C64 = zeta.iter().zip(x.iter().zip(&y)).map(|(z, (a, b))| z * (a - b) as f64).sum();
        v * (-C64::i() * phase).exp()
    });
    Ok(LatticeHamiltonian { deformation: Some(zeta.to_vec()), matrix, ..h.clone() })
}

/// Diagonal of `T_ζ = e^{-iζ·x}` on the box.
pub fn conjugation_diagonal(lattice: &LatticeBox, zeta: &[C64]) -> Vec<C64> {
    lattice
        .sites()
        .map(|x| {
            let phase: C64 = zeta.iter().zip(&x).map(|(z, &a)| z * a as f64).sum();
            (-C64::i() * phase).exp()
        })
        .collect()
}

/// Symmetry sector of an N-particle space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    #[default]
    Distinguishable,
    Bosonic,
}

/// Pair interaction `w(x_i - x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairInteraction {
    #[default]
    None,
    /// `w(0) = strength`, zero otherwise.
    OnSite { strength: f64 },
    /// Explicit table; missing displacements are zero.
    Table { entries: Vec<(Vec<i64>, f64)> },
}

impl PairInteraction {
    fn table(&self) -> BTreeMap<Vec<i64>, f64> {
        match self {
            PairInteraction::None | PairInteraction::OnSite { .. } => BTreeMap::new(),
            PairInteraction::Table { entries } => entries.iter().cloned().collect(),
        }
    }

    fn value(&self, table: &BTreeMap<Vec<i64>, f64>, d: &[i64]) -> f64 {
        match self {
            PairInteraction::None => 0.0,
            PairInteraction::OnSite { strength } => {
                if d.iter().all(|&v| v == 0) {
                    *strength
                } else {
                    0.0
                }
            }
            PairInteraction::Table { .. } => table.get(d).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, dimension: usize) -> Result<()> {
        match self {
            PairInteraction::None => Ok(()),
            PairInteraction::OnSite { strength } if strength.is_finite() => Ok(()),
            PairInteraction::OnSite { .. } => Err(LightconeError::domain("interaction strength must be finite")),
            PairInteraction::Table { entries } => {
                for (d, w) in entries {
                    if d.len() != dimension {
                        return Err(LightconeError::Dimension { expected: dimension, found: d.len() });
                    }
                    if !w.is_finite() {
                        return Err(LightconeError::domain("interaction value must be finite"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Default cap on the sector dimension.
pub const MANY_BODY_DIMENSION_CAP: usize = 20_000;

/// Sector dimension without building the basis.
pub fn sector_dimension(sites: usize, particles: usize, sector: Sector) -> f64 {
    match sector {
        Sector::Distinguishable => (sites as f64).powi(particles as i32),
        Sector::Bosonic => {
            // C(L + N - 1, N)
            let mut v = 1.0;
            for k in 0..particles {
                v *= (sites + k) as f64 / (k + 1) as f64;
            }
            v.round()
        }
    }
}

/// `H_N = Σ_j (T + V)_j + ½ Σ_{i≠j} w(x_i - x_j)` on a sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyHamiltonian {
    particles: usize,
    sector: Sector,
    lattice: LatticeBox,
    single: LatticeHamiltonian,
    interaction: PairInteraction,
    /// Particle positions (site indices) per basis state. Bosonic states are
    /// stored nondecreasing and the list is sorted.
    basis: Vec<Vec<usize>>,
    matrix: CsrMatrix,
}

#[allow(clippy::too_many_arguments)]
pub fn build_n_particle_hamiltonian(
    disp: &DispersionRelation,
    potential: &Potential,
    interaction: &PairInteraction,
    particles: usize,
    lattice: &LatticeBox,
    sector: Sector,
    dimension_cap: usize,
) -> Result<ManyBodyHamiltonian> {
    if particles == 0 {
        return Err(LightconeError::domain("particle number must be at least 1"));
    }
    interaction.validate(lattice.dimension())?;
    let dim = sector_dimension(lattice.len(), particles, sector);
    if dim > dimension_cap as f64 {
        return Err(LightconeError::resource(format!(
            "sector dimension {dim} exceeds the cap {dimension_cap}"
        )));
    }
    let single = build_hamiltonian(disp, potential, lattice)?;
    let l = lattice.len();
    let basis: Vec<Vec<usize>> = match sector {
        Sector::Distinguishable => (0..dim as usize)
            .map(|mut k| {
                let mut c = vec![0; particles];
                for p in (0..particles).rev() {
                    c[p] = k % l;
                    k /= l;
                }
                c
            })
            .collect(),
        Sector::Bosonic => {
            let mut out = Vec::with_capacity(dim as usize);
            let mut c = vec![0usize; particles];
            loop {
                out.push(c.clone());
                // next nondecreasing tuple
                let mut p = particles;
                while p > 0 && c[p - 1] == l - 1 {
                    p -= 1;
                }
                if p == 0 {
                    break;
                }
                let v = c[p - 1] + 1;
                for q in (p - 1)..particles {
                    c[q] = v;
                }
            }
            out
        }
    };
    let index_of = |c: &[usize]| -> usize {
        match sector {
            Sector::Distinguishable => c.iter().fold(0, |acc, &s| acc * l + s),
            Sector::Bosonic => basis.binary_search_by(|b| b.as_slice().cmp(c)).expect("basis state"),
        }
    };

    let h1 = single.matrix();
    let table = interaction.table();
    let coords: Vec<Vec<i64>> = lattice.sites().collect();
    let mut triplets = Vec::new();
    for (col, conf) in basis.iter().enumerate() {
        let mut diag = C64::new(0.0, 0.0);
        for i in 0..particles {
            for j in 0..particles {
                if i != j {
                    let d: Vec<i64> = coords[conf[i]].iter().zip(&coords[conf[j]]).map(|(a, b)| a - b).collect();
                    diag += 0.5 * interaction.value(&table, &d);
                }
            }
        }
        match sector {
            Sector::Distinguishable => {
                for p in 0..particles {
                    let y = conf[p];
                    for (x, h) in column(h1, y) {
                        if x == y {
                            diag += h;
                        } else {
                            let mut next = conf.clone();
                            next[p] = x;
                            triplets.push((index_of(&next), col, h));
                        }
                    }
                }
            }
            Sector::Bosonic => {
                let mut p = 0;
                while p < particles {
                    let y = conf[p];
                    let ny = conf.iter().filter(|&&s| s == y).count();
                    for (x, h) in column(h1, y) {
                        if x == y {
                            diag += h * ny as f64;
                        } else {
                            let nx = conf.iter().filter(|&&s| s == x).count();
                            let mut next = conf.clone();
                            next[p] = x;
                            next.sort_unstable();
                            let amp = ((ny * (nx + 1)) as f64).sqrt();
                            triplets.push((index_of(&next), col, h * amp));
                        }
                    }
                    p += ny;
                }
            }
        }
        if diag != C64::new(0.0, 0.0) {
            triplets.push((col, col, diag));
        }
    }
    let matrix = CsrMatrix::from_triplets(basis.len(), triplets);
    Ok(ManyBodyHamiltonian { particles, sector, lattice: lattice.clone(), single, interaction: interaction.clone(), basis, matrix })
}

/// Nonzeros `(row, value)` of column `y` of a Hermitian CSR matrix, read from
/// row `y` of the adjoint relation `h_{xy} = conj(h_{yx})`.
fn column(h: &CsrMatrix, y: usize) -> Vec<(usize, C64)> {
    h.row(y).map(|(x, v)| (x, v.conj())).collect()
}

impl ManyBodyHamiltonian {
    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn single_particle(&self) -> &LatticeHamiltonian {
        &self.single
    }

    pub fn interaction(&self) -> &PairInteraction {
        &self.interaction
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis states with every particle in `x` (the diagonal of `χ_{X^N}`).
    pub fn product_cutoff(&self, x: &Region) -> Region {
        let sites = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().all(|&s| x.contains(s)))
            .map(|(k, _)| k)
            .collect();
        Region { label: format!("{}^N", x.label), sites }
    }

    /// Basis permutation swapping particles `i` and `j` (distinguishable sector).
    pub fn transposition(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        if self.sector != Sector::Distinguishable {
            return Err(LightconeError::domain("transpositions act trivially on the bosonic sector"));
        }
        if i >= self.particles || j >= self.particles {
            return Err(LightconeError::domain("particle index out of range"));
        }
        let l = self.lattice.len();
        Ok(self
            .basis
            .iter()
            .map(|c| {
                let mut s = c.clone();
                s.swap(i, j);
                s.iter().fold(0, |acc, &v| acc * l + v)
            })
            .collect())
    }
}
