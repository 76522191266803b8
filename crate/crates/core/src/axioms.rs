//! Numerical checks of the hypersurface-evolution axioms for a [`Dynamics`].
//!
//! Each check returns a [`Check`] carrying its residual, so callers can
//! both assert and report.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::events::Event;
use crate::fock::{projector_mask, vacuum_mask, SplitIndex, StateVec};
use crate::geometry::{grown_sites, shrunk_sites, LatticeSurface, SiteSet, SliceDecomposition};
use crate::linalg::{self, diagonal_projector, CMatrix};
use crate::{Error, Result, C64};

/// Tolerance of the axiom checks.
pub const AXIOM_TOL: f64 = 1e-11;

/// How a residual is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Passes when `residual <= tolerance`.
    AtMost,
    /// Passes when `residual >= -tolerance`; the residual is a smallest
    /// eigenvalue or a slack.
    AtLeastZero,
}

/// Outcome of one numerical check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub bound: Bound,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// A check whose residual must not exceed `tolerance`.
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let passed = residual <= tolerance;
        Self { name: name.into(), bound: Bound::AtMost, residual, tolerance, passed, detail: detail.into() }
    }

    /// A lower-bound check: passes when `value >= -tolerance`.
    pub fn at_least_zero(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let passed = value >= -tolerance;
        Self { name: name.into(), bound: Bound::AtLeastZero, residual: value, tolerance, passed, detail: detail.into() }
    }

    /// Whether `self` is a worse outcome than `other` of the same kind.
    pub fn worse_than(&self, other: &Check) -> bool {
        match self.bound {
            Bound::AtMost => self.residual > other.residual,
            Bound::AtLeastZero => self.residual < other.residual,
        }
    }
}

fn describe(from: &LatticeSurface, to: &LatticeSurface) -> String {
    format!("{:?} -> {:?}", from.layers(), to.layers())
}

/// `U = I_A ⊗ V` split of a dense operator; returns `V` and the residual
/// `‖U - I_A ⊗ V‖_F`.
pub fn identity_factor(dynamics: &Dynamics, u: &CMatrix, a: SiteSet) -> (CMatrix, f64) {
    let local = dynamics.local();
    let split = SplitIndex::new(local, dynamics.all_sites(), a);
    let (da, db) = (split.dim_a, split.dim_b);
    let mut v = CMatrix::zeros(db, db);
    for bj in 0..db {
        for bi in 0..db {
            let s: C64 = (0..da).map(|x| u[(split.index(x, bi), split.index(x, bj))]).sum();
            v[(bi, bj)] = s / da as f64;
        }
    }
    let mut res = 0.0;
    for bj in 0..db {
        for aj in 0..da {
            let col = split.index(aj, bj);
            for bi in 0..db {
                for ai in 0..da {
                    let expect = if ai == aj { v[(bi, bj)] } else { C64::new(0.0, 0.0) };
                    res += (u[(split.index(ai, bi), col)] - expect).norm_sqr();
                }
            }
        }
    }
    (v, res.sqrt())
}

/// Interaction locality on the sites shared by both surfaces.
///
/// Returns the check and the reduced factor `U_{Σ\A}^{Σ'\A}`.
pub fn verify_il(dynamics: &Dynamics, from: &LatticeSurface, to: &LatticeSurface) -> Result<(Check, CMatrix)> {
    let a = from.shared_sites(to);
    let u = dynamics.unitary(from, to)?;
    let (v, residual) = identity_factor(dynamics, &u, a);
    let check = Check::at_most("IL", residual, AXIOM_TOL, format!("{} shared {:?}", describe(from, to), a));
    Ok((check, v))
}

/// `‖U |∅⟩⟨∅| U† - |∅⟩⟨∅|‖_F` for a dense operator on any region.
pub fn vacuum_residual(u: &CMatrix) -> f64 {
    let col = u.column(0);
    let mut res = 0.0;
    for j in 0..col.len() {
        for i in 0..col.len() {
            let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
            res += (col[i] * col[j].conj() - C64::new(expect, 0.0)).norm_sqr();
        }
    }
    res.sqrt()
}

/// Global no-creation-from-vacuum.
pub fn verify_ncfv(dynamics: &Dynamics, from: &LatticeSurface, to: &LatticeSurface) -> Result<Check> {
    let vac = StateVec::vacuum(dynamics.local(), dynamics.all_sites())?;
    let out = dynamics.evolve_state(&vac, from, to)?;
    let v = nalgebra::DVector::from_column_slice(&out.amps);
    let residual = vacuum_residual(&CMatrix::from_columns(&[v]));
    Ok(Check::at_most("NCFV", residual, AXIOM_TOL, describe(from, to)))
}

/// No creation from the vacuum for the reduced factor off the shared sites.
pub fn verify_local_ncfv(reduced: &CMatrix, from: &LatticeSurface, to: &LatticeSurface) -> Check {
    Check::at_most("NCFV-local", vacuum_residual(reduced), AXIOM_TOL, describe(from, to))
}

/// Finite propagation speed on random states concentrated in `a`:
/// the largest norm of `U ψ` outside `Gr(A, to)`.
pub fn verify_fs<R: Rng + ?Sized>(
    dynamics: &Dynamics,
    from: &LatticeSurface,
    a: SiteSet,
    to: &LatticeSurface,
    trials: usize,
    rng: &mut R,
) -> Result<Check> {
    let local = dynamics.local();
    let all = dynamics.all_sites();
    let grown = grown_sites(from, a, to);
    let inside = vacuum_mask(local, all, all.difference(grown));
    let dim_a = local.check_dim(a.len(), crate::limits::MAX_STATE_DIM, "state vector")?;
    let rest = StateVec::vacuum(local, all.difference(a))?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let psi_a = StateVec::from_amps(local, a, linalg::random_unit_vector(rng, dim_a))?;
        let out = dynamics.evolve_state(&psi_a.tensor(&rest)?, from, to)?;
        let leak = out.norm_sqr() - out.mask_probability(&inside);
        worst = worst.max(leak.max(0.0).sqrt());
    }
    Ok(Check::at_most("FS", worst, AXIOM_TOL, format!("{} A={a:?}", describe(from, to))))
}

/// Projector form of finite propagation speed:
/// `U P(∅(R)) U† ≤ P(∅(Sr(R, to)))` for every `R`, via eigenvalues.
pub fn verify_fs_operator(dynamics: &Dynamics, from: &LatticeSurface, to: &LatticeSurface) -> Result<Check> {
    let local = dynamics.local();
    let all = dynamics.all_sites();
    let l = dynamics.lattice();
    let u = dynamics.unitary(from, to)?;
    let mut worst = f64::INFINITY;
    for r in all.subsets() {
        let p = diagonal_projector(&projector_mask(local, all, &Event::empty_in(l, r)));
        let q = diagonal_projector(&projector_mask(local, all, &Event::empty_in(l, shrunk_sites(from, r, to))));
        let gap = q - &u * p * u.adjoint();
        worst = worst.min(linalg::min_eigenvalue(&gap));
    }
    Ok(Check::at_least_zero("FS-operator", worst, 1e-10, describe(from, to)))
}

/// `W†W = I` and `U(ψ_A ⊗ ∅) = (Wψ_A) ⊗ ∅` for `W = W_A^{Gr(A,to)}`.
pub fn verify_reduced_evolution<R: Rng + ?Sized>(
    dynamics: &Dynamics,
    from: &LatticeSurface,
    a: SiteSet,
    to: &LatticeSurface,
    rng: &mut R,
) -> Result<[Check; 2]> {
    let local = dynamics.local();
    let all = dynamics.all_sites();
    let detail = format!("{} A={a:?}", describe(from, to));
    let w = match dynamics.reduced_evolution(from, a, to) {
        Ok(w) => w,
        Err(Error::FsViolation { defect }) => {
            return Ok([
                Check::at_most("W-isometry", defect, AXIOM_TOL, detail.clone()),
                Check::at_most("W-embedding", defect, AXIOM_TOL, detail),
            ])
        }
        Err(e) => return Err(e),
    };
    let isometry = Check::at_most("W-isometry", linalg::isometry_residual(&w), AXIOM_TOL, detail.clone());
    let grown = grown_sites(from, a, to);
    let psi_a = StateVec::from_amps(local, a, linalg::random_unit_vector(rng, w.ncols()))?;
    let direct = dynamics.evolve_state(&psi_a.embed_vacuum(all.difference(a))?, from, to)?;
    let wpsi: Vec<C64> = (&w * nalgebra::DVector::from_column_slice(&psi_a.amps)).iter().copied().collect();
    let via_w = StateVec::from_amps(local, grown, wpsi)?.embed_vacuum(all.difference(grown))?;
    let embedding = Check::at_most("W-embedding", direct.distance(&via_w), AXIOM_TOL, detail);
    Ok([isometry, embedding])
}

/// Apply `W_C^B` to the `C` digits of each column of `u` (rows over
/// `a ∪ c`), giving rows over `a ∪ b`.
fn apply_on_factor(
    dynamics: &Dynamics,
    u: &CMatrix,
    a: SiteSet,
    c: SiteSet,
    b: SiteSet,
    w: &CMatrix,
) -> Result<CMatrix> {
    let local = dynamics.local();
    let dim_out = local.check_dim(a.len() + b.len(), crate::limits::MAX_STATE_DIM, "state vector")?;
    // split every column on `c` and stack the blocks side by side, so `w`
    // is applied in a single product
    let blocks: Vec<CMatrix> = (0..u.ncols())
        .map(|j| Ok(StateVec::from_amps(local, a.union(c), u.column(j).iter().copied().collect())?.split(c)))
        .collect::<Result<_>>()?;
    let width = blocks.first().map_or(0, |m| m.ncols());
    let mut stacked = CMatrix::zeros(w.ncols(), width * blocks.len());
    for (j, m) in blocks.iter().enumerate() {
        stacked.columns_mut(j * width, width).copy_from(m);
    }
    let image = linalg::matmul(w, &stacked);
    let mut out = CMatrix::zeros(dim_out, u.ncols());
    for j in 0..u.ncols() {
        let joined = StateVec::join(local, b, a, &image.columns(j * width, width).into_owned())?;
        out.set_column(j, &nalgebra::DVector::from_vec(joined.amps));
    }
    Ok(out)
}

/// `W_{A_k}^{A_{k+1}∪B_{k+1}} = (I ⊗ W_{C_{k+1}}^{B_{k+1}}) U_{A_k}^{A_{k+1}∪C_{k+1}}`.
pub fn verify_w_composition(dynamics: &Dynamics, dec: &SliceDecomposition, k: i64) -> Result<Check> {
    let (rk, rn) = (dec.round(k), dec.round(k + 1));
    let upsilon_k = rk.upsilon(dec.lattice());
    let upsilon_n = rn.upsilon(dec.lattice());
    let xi = dec.xi(k, k + 1);
    let lhs = dynamics.reduced_evolution_to(&upsilon_k, rk.a, &upsilon_n, rn.a.union(rn.b))?;
    let u = dynamics.reduced_evolution_to(&upsilon_k, rk.a, &xi, rk.a)?;
    let w_cb = dynamics.reduced_evolution_to(&dec.sigma, rn.c, &upsilon_n, rn.b)?;
    let rhs = apply_on_factor(dynamics, &u, rn.a, rn.c, rn.b, &w_cb)?;
    let residual = linalg::distance(&lhs, &rhs);
    Ok(Check::at_most(
        "W-composition",
        residual,
        AXIOM_TOL,
        format!("Σ={:?} m={} k={k}", dec.sigma.layers(), dec.m),
    ))
}
