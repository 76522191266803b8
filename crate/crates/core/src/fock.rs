//! Hard-core Fock spaces over lattice regions.
//!
//! Each site carries the same local factor: an x-species with states
//! `{empty, up, down}` and, for interacting models, a spinless y-species
//! `{empty, occupied}`. The local index is `x + 3·y`. A region state is a
//! dense amplitude vector indexed mixed-radix little-endian over the
//! region's sites in increasing order, so site `sites[j]` contributes
//! `local · d^j`.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::events::{Configuration, Event};
use crate::geometry::SiteSet;
use crate::linalg::{self, CMatrix};
use crate::{limits, tol, Error, Result, C64};

/// Local x-species states.
pub const X_EMPTY: usize = 0;
pub const X_UP: usize = 1;
pub const X_DOWN: usize = 2;

/// The per-site factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalSpace {
    pub with_y: bool,
}

impl LocalSpace {
    pub const FREE: LocalSpace = LocalSpace { with_y: false };
    pub const INTERACTING: LocalSpace = LocalSpace { with_y: true };

    pub fn dim(self) -> usize {
        if self.with_y {
            6
        } else {
            3
        }
    }

    pub fn index(self, x: usize, y: usize) -> usize {
        debug_assert!(x < 3 && y < 2 && (self.with_y || y == 0));
        x + 3 * y
    }

    pub fn x_of(self, local: usize) -> usize {
        local % 3
    }

    pub fn y_of(self, local: usize) -> usize {
        local / 3
    }

    /// Species-merged occupation of a local state.
    pub fn occupied(self, local: usize) -> bool {
        local != 0
    }

    /// Hilbert-space dimension of an `n`-site region.
    pub fn region_dim(self, n: usize) -> Option<usize> {
        self.dim().checked_pow(n as u32)
    }

    pub fn check_dim(self, n: usize, limit: usize, what: &'static str) -> Result<usize> {
        match self.region_dim(n) {
            Some(dim) if dim <= limit => Ok(dim),
            dim => Err(Error::Capacity { what, dim: dim.unwrap_or(usize::MAX), limit }),
        }
    }
}

/// Species-merged configuration of basis state `idx` of a region.
pub fn configuration_of(local: LocalSpace, sites: SiteSet, mut idx: usize) -> Configuration {
    let d = local.dim();
    let mut q = SiteSet::EMPTY;
    for s in sites.iter() {
        if local.occupied(idx % d) {
            q.insert(s);
        }
        idx /= d;
    }
    q
}

/// Diagonal of the PVM projector `P(S)` on a region.
///
/// `event` is read as a cylinder: a basis state belongs to `S` iff its
/// configuration (with every site outside the region empty) does.
pub fn projector_mask(local: LocalSpace, sites: SiteSet, event: &Event) -> Vec<bool> {
    let dim = local.region_dim(sites.len()).expect("dimension checked by caller");
    (0..dim).map(|i| event.contains(configuration_of(local, sites, i))).collect()
}

/// Mask of basis states whose sites in `region` are all empty.
pub fn vacuum_mask(local: LocalSpace, sites: SiteSet, region: SiteSet) -> Vec<bool> {
    let dim = local.region_dim(sites.len()).expect("dimension checked by caller");
    (0..dim).map(|i| configuration_of(local, sites, i).is_disjoint(region)).collect()
}

/// Index map between a region and a split `A ⊔ B` of it.
///
/// `index(a, b)` is the region index whose `A`-digits encode `a` and whose
/// `B`-digits encode `b`.
#[derive(Clone, Debug)]
pub struct SplitIndex {
    pub dim_a: usize,
    pub dim_b: usize,
    table: Vec<usize>,
}

impl SplitIndex {
    pub fn new(local: LocalSpace, sites: SiteSet, a: SiteSet) -> Self {
        debug_assert!(a.is_subset(sites));
        let d = local.dim();
        let b = sites.difference(a);
        let dim_a = d.pow(a.len() as u32);
        let dim_b = d.pow(b.len() as u32);
        let position = |s: usize| sites.iter().position(|t| t == s).unwrap();
        let stride = |s: usize| d.pow(position(s) as u32);
        let a_strides: Vec<usize> = a.iter().map(stride).collect();
        let b_strides: Vec<usize> = b.iter().map(stride).collect();
        let offsets = |n: usize, strides: &[usize]| -> Vec<usize> {
            (0..n)
                .map(|mut i| {
                    strides.iter().fold(0, |acc, &st| {
                        let digit = i % d;
                        i /= d;
                        acc + digit * st
                    })
                })
                .collect()
        };
        let oa = offsets(dim_a, &a_strides);
        let ob = offsets(dim_b, &b_strides);
        let mut table = Vec::with_capacity(dim_a * dim_b);
        for &fb in &ob {
            for &fa in &oa {
                table.push(fa + fb);
            }
        }
        Self { dim_a, dim_b, table }
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        self.table[a + b * self.dim_a]
    }
}

/// A pure state on a region of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    pub local: LocalSpace,
    pub sites: SiteSet,
    pub amps: Vec<C64>,
}

impl StateVec {
    pub fn from_amps(local: LocalSpace, sites: SiteSet, amps: Vec<C64>) -> Result<Self> {
        let dim = local.check_dim(sites.len(), limits::MAX_STATE_DIM, "state vector")?;
        if amps.len() != dim {
            return Err(Error::RegionMismatch(format!(
                "{} amplitudes for a region of dimension {dim}",
                amps.len()
            )));
        }
        Ok(Self { local, sites, amps })
    }

    /// The vacuum with phase `+1`.
    pub fn vacuum(local: LocalSpace, sites: SiteSet) -> Result<Self> {
        let dim = local.check_dim(sites.len(), limits::MAX_STATE_DIM, "state vector")?;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { local, sites, amps })
    }

    /// Basis state with the given `(site, local index)` occupations.
    pub fn basis(local: LocalSpace, sites: SiteSet, occupations: &[(usize, usize)]) -> Result<Self> {
        let mut psi = Self::vacuum(local, sites)?;
        psi.amps[0] = C64::new(0.0, 0.0);
        let d = local.dim();
        let mut idx = 0;
        for &(site, value) in occupations {
            if !sites.contains(site) {
                return Err(Error::SiteOutOfBounds { site, lattice: sites.len() });
            }
            let pos = sites.iter().position(|s| s == site).unwrap();
            idx += value * d.pow(pos as u32);
        }
        psi.amps[idx] = C64::new(1.0, 0.0);
        Ok(psi)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        self.amps.iter_mut().for_each(|z| *z /= n);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVec) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn distance(&self, other: &StateVec) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_mask(&mut self, mask: &[bool]) {
        for (z, &keep) in self.amps.iter_mut().zip(mask) {
            if !keep {
                *z = C64::new(0.0, 0.0);
            }
        }
    }

    /// `P(S) ψ`.
    pub fn project(&self, event: &Event) -> StateVec {
        let mut out = self.clone();
        out.apply_mask(&projector_mask(self.local, self.sites, event));
        out
    }

    /// `⟨ψ|P(S)|ψ⟩`.
    pub fn probability(&self, event: &Event) -> f64 {
        self.mask_probability(&projector_mask(self.local, self.sites, event))
    }

    pub fn mask_probability(&self, mask: &[bool]) -> f64 {
        self.amps.iter().zip(mask).filter(|(_, &m)| m).map(|(z, _)| z.norm_sqr()).sum()
    }

    /// Distribution of the species-merged configuration (index = bitmask
    /// over the whole lattice).
    pub fn configuration_distribution(&self, lattice: usize) -> Vec<f64> {
        let mut p = vec![0.0; 1 << lattice];
        for (i, z) in self.amps.iter().enumerate() {
            p[configuration_of(self.local, self.sites, i).0 as usize] += z.norm_sqr();
        }
        p
    }

    /// `‖P(∀(A))ψ - ψ‖ ≤ 1e-10`.
    pub fn is_concentrated(&self, a: SiteSet) -> bool {
        let outside = vacuum_mask(self.local, self.sites, self.sites.difference(a));
        let leak: f64 = self
            .amps
            .iter()
            .zip(&outside)
            .filter(|(_, &inside)| !inside)
            .map(|(z, _)| z.norm_sqr())
            .sum();
        leak.sqrt() <= 1e-10
    }

    /// `ψ_A ⊗ ψ_B` on `A ∪ B`.
    pub fn tensor(&self, other: &StateVec) -> Result<StateVec> {
        if !self.sites.is_disjoint(other.sites) || self.local != other.local {
            return Err(Error::RegionMismatch("tensor factors must be disjoint".into()));
        }
        let sites = self.sites.union(other.sites);
        self.local.check_dim(sites.len(), limits::MAX_STATE_DIM, "state vector")?;
        let split = SplitIndex::new(self.local, sites, self.sites);
        let mut amps = vec![C64::new(0.0, 0.0); split.dim_a * split.dim_b];
        for (b, zb) in other.amps.iter().enumerate() {
            for (a, za) in self.amps.iter().enumerate() {
                amps[split.index(a, b)] = za * zb;
            }
        }
        Ok(StateVec { local: self.local, sites, amps })
    }

    /// `ψ ⊗ |∅⟩` on the extra sites.
    pub fn embed_vacuum(&self, extra: SiteSet) -> Result<StateVec> {
        self.tensor(&StateVec::vacuum(self.local, extra)?)
    }

    /// Amplitudes as a `d^|A| × d^|B|` matrix, `B` the rest of the region.
    pub fn split(&self, a: SiteSet) -> CMatrix {
        let split = SplitIndex::new(self.local, self.sites, a);
        CMatrix::from_fn(split.dim_a, split.dim_b, |i, j| self.amps[split.index(i, j)])
    }

    /// Inverse of [`StateVec::split`].
    pub fn join(local: LocalSpace, a: SiteSet, b: SiteSet, m: &CMatrix) -> Result<StateVec> {
        let sites = a.union(b);
        let split = SplitIndex::new(local, sites, a);
        let mut amps = vec![C64::new(0.0, 0.0); split.dim_a * split.dim_b];
        for j in 0..split.dim_b {
            for i in 0..split.dim_a {
                amps[split.index(i, j)] = m[(i, j)];
            }
        }
        StateVec::from_amps(local, sites, amps)
    }

    /// Partial inner product with the vacuum on `region`: `⟨∅(region)|ψ⟩`.
    pub fn vacuum_component(&self, region: SiteSet) -> StateVec {
        let kept = self.sites.difference(region);
        let split = SplitIndex::new(self.local, self.sites, kept);
        let amps = (0..split.dim_a).map(|i| self.amps[split.index(i, 0)]).collect();
        StateVec { local: self.local, sites: kept, amps }
    }

    /// Apply an operator on the sub-region `region` (`I` elsewhere).
    pub fn apply_on(&self, region: SiteSet, op: &CMatrix) -> Result<StateVec> {
        let m = self.split(region);
        if op.ncols() != m.nrows() || op.nrows() != m.nrows() {
            return Err(Error::RegionMismatch("operator does not match the sub-region".into()));
        }
        StateVec::join(self.local, region, self.sites.difference(region), &(op * m))
    }

    pub fn to_density(&self) -> Result<DensityOp> {
        DensityOp::from_state(self)
    }
}

impl Serialize for StateVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|z| [z.re, z.im]).collect();
        let mut st = s.serialize_struct("StateVec", 3)?;
        st.serialize_field("sites", &self.sites.to_vec())?;
        st.serialize_field("local_dim", &self.local.dim())?;
        st.serialize_field("amplitudes", &pairs)?;
        st.end()
    }
}

/// A density operator on a region of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    pub local: LocalSpace,
    pub sites: SiteSet,
    pub mat: CMatrix,
}

impl DensityOp {
    pub fn from_matrix(local: LocalSpace, sites: SiteSet, mat: CMatrix) -> Result<Self> {
        let dim = local.check_dim(sites.len(), limits::MAX_DENSITY_DIM, "density operator")?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::RegionMismatch(format!(
                "{}x{} matrix for a region of dimension {dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { local, sites, mat })
    }

    pub fn from_state(psi: &StateVec) -> Result<Self> {
        psi.local.check_dim(psi.sites.len(), limits::MAX_DENSITY_DIM, "density operator")?;
        let v = nalgebra::DVector::from_column_slice(&psi.amps);
        Ok(Self { local: psi.local, sites: psi.sites, mat: &v * v.adjoint() })
    }

    pub fn vacuum(local: LocalSpace, sites: SiteSet) -> Result<Self> {
        Self::from_state(&StateVec::vacuum(local, sites)?)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scale(&mut self, factor: f64) {
        self.mat *= C64::new(factor, 0.0);
    }

    pub fn apply_mask(&mut self, mask: &[bool]) {
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                if !(mask[i] && mask[j]) {
                    self.mat[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
    }

    /// `P(S) ρ P(S)`.
    pub fn project(&self, event: &Event) -> DensityOp {
        let mut out = self.clone();
        out.apply_mask(&projector_mask(self.local, self.sites, event));
        out
    }

    /// `tr(P(S) ρ)`.
    pub fn probability(&self, event: &Event) -> f64 {
        self.mask_probability(&projector_mask(self.local, self.sites, event))
    }

    pub fn mask_probability(&self, mask: &[bool]) -> f64 {
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| self.mat[(i, i)].re).sum()
    }

    /// Trace out `traced ⊆ sites`.
    pub fn partial_trace(&self, traced: SiteSet) -> Result<DensityOp> {
        if !traced.is_subset(self.sites) {
            return Err(Error::RegionMismatch("traced sites outside the region".into()));
        }
        let kept = self.sites.difference(traced);
        let split = SplitIndex::new(self.local, self.sites, kept);
        let n = split.dim_a;
        let mut mat = CMatrix::zeros(n, n);
        for t in 0..split.dim_b {
            for j in 0..n {
                let jj = split.index(j, t);
                for i in 0..n {
                    mat[(i, j)] += self.mat[(split.index(i, t), jj)];
                }
            }
        }
        Ok(DensityOp { local: self.local, sites: kept, mat })
    }

    /// `ρ ⊗ |∅⟩⟨∅|` on the extra sites.
    pub fn embed_vacuum(&self, extra: SiteSet) -> Result<DensityOp> {
        if !extra.is_disjoint(self.sites) {
            return Err(Error::RegionMismatch("vacuum sites overlap the region".into()));
        }
        let sites = self.sites.union(extra);
        let dim = self.local.check_dim(sites.len(), limits::MAX_DENSITY_DIM, "density operator")?;
        let split = SplitIndex::new(self.local, sites, self.sites);
        let mut mat = CMatrix::zeros(dim, dim);
        let n = self.dim();
        for j in 0..n {
            let jj = split.index(j, 0);
            for i in 0..n {
                mat[(split.index(i, 0), jj)] = self.mat[(i, j)];
            }
        }
        Ok(DensityOp { local: self.local, sites, mat })
    }

    /// Replace the state on `region` by the vacuum: `tr_region ρ ⊗ |∅⟩⟨∅|`.
    pub fn reset_to_vacuum(&self, region: SiteSet) -> Result<DensityOp> {
        if region.is_empty() {
            return Ok(self.clone());
        }
        self.partial_trace(region)?.embed_vacuum(region)
    }

    /// `ρ_A ⊗ ρ_B` on `A ∪ B`.
    pub fn tensor(&self, other: &DensityOp) -> Result<DensityOp> {
        if !self.sites.is_disjoint(other.sites) {
            return Err(Error::RegionMismatch("tensor factors must be disjoint".into()));
        }
        let sites = self.sites.union(other.sites);
        let dim = self.local.check_dim(sites.len(), limits::MAX_DENSITY_DIM, "density operator")?;
        let split = SplitIndex::new(self.local, sites, self.sites);
        let mut mat = CMatrix::zeros(dim, dim);
        for jb in 0..split.dim_b {
            for ja in 0..split.dim_a {
                let jj = split.index(ja, jb);
                for ib in 0..split.dim_b {
                    let zb = other.mat[(ib, jb)];
                    for ia in 0..split.dim_a {
                        mat[(split.index(ia, ib), jj)] = self.mat[(ia, ja)] * zb;
                    }
                }
            }
        }
        Ok(DensityOp { local: self.local, sites, mat })
    }

    /// `(O ⊗ I) ρ` for an operator `O` on the sub-region `region`.
    pub fn apply_left_on(&self, region: SiteSet, op: &CMatrix) -> Result<DensityOp> {
        let mut mat = CMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.dim() {
            let col = StateVec { local: self.local, sites: self.sites, amps: self.mat.column(j).iter().copied().collect() };
            let out = col.apply_on(region, op)?;
            for (i, z) in out.amps.into_iter().enumerate() {
                mat[(i, j)] = z;
            }
        }
        Ok(DensityOp { local: self.local, sites: self.sites, mat })
    }

    /// `W ρ W†` for a map `W` from this region to `target`.
    pub fn conjugate(&self, w: &CMatrix, target: SiteSet) -> Result<DensityOp> {
        if w.ncols() != self.dim() {
            return Err(Error::RegionMismatch("map does not match the region".into()));
        }
        DensityOp::from_matrix(self.local, target, linalg::matmul(&linalg::matmul(w, &self.mat), &w.adjoint()))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.mat)
    }

    /// Hermitian to 1e-12, positive to -1e-10, trace within 1e-10 of `trace`.
    pub fn is_valid_state(&self, trace: f64) -> bool {
        self.hermiticity_residual() <= tol::UNITARY
            && self.min_eigenvalue() >= tol::PSD
            && (self.trace() - trace).abs() <= 1e-10
    }
}
