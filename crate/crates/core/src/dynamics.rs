//! Brickwork quantum cellular automaton and surface-to-surface evolution.
//!
//! Every micro-layer `t` consists of, in order:
//!
//! 1. single-site cells on every site: the coin, then (interacting models)
//!    the emission–absorption rotation, then (vacuum-creation control) the
//!    creation rotation;
//! 2. pair cells on `(x, x+1)` for every `x ≡ t (mod 2)`: the shift;
//! 3. for the nonlocal control, one phase cell coupling sites `0` and `L-1`.
//!
//! A cell lies below a surface when its layer is below the surface at each
//! of its sites. `U_Σ^{Σ'}` applies the cells below `Σ'` but not `Σ` in
//! causal order, after undoing the cells below `Σ` but not `Σ'`.

use serde::{Deserialize, Serialize};

use crate::fock::{DensityOp, LocalSpace, StateVec, X_DOWN, X_EMPTY, X_UP};
use crate::geometry::{grown_sites, pair_gate_at, LatticeSurface, SiteSet};
use crate::linalg::CMatrix;
use crate::{limits, tol, Error, Result, C64};

/// Deliberately broken ingredients used as negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    #[default]
    None,
    /// A phase between the two boundary sites, applied every layer.
    NonlocalPhase,
    /// A local rotation mixing the empty site with an x-up particle.
    VacuumCreation,
}

/// Rotation angle (radians) of both negative-control gates.
pub const CONTROL_ANGLE: f64 = 0.7;

/// Gate parameters of the automaton.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Coin angle of the x-species walk.
    pub theta: f64,
    /// Hopping angle of the y-species.
    pub theta_y: f64,
    /// Emission–absorption rotation angle.
    pub lambda: f64,
    /// Phase of the coupling constant.
    pub arg_g: f64,
    pub interacting: bool,
    pub control: Control,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { theta: 0.0, theta_y: 0.0, lambda: 0.0, arg_g: 0.0, interacting: false, control: Control::None }
    }
}

impl ModelParams {
    pub fn free(theta: f64) -> Self {
        Self { theta, ..Self::default() }
    }

    pub fn interacting(theta: f64, theta_y: f64, lambda: f64, arg_g: f64) -> Self {
        Self { theta, theta_y, lambda, arg_g, interacting: true, control: Control::None }
    }

    pub fn with_control(self, control: Control) -> Self {
        Self { control, ..self }
    }

    pub fn local_space(&self) -> LocalSpace {
        LocalSpace { with_y: self.interacting }
    }
}

/// A sparse square matrix stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGate {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseGate {
    pub fn from_dense(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)].norm() > 1e-15)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self { dim: m.nrows(), rows }
    }

    pub fn dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dense(&self.dense().adjoint())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply to the index digit group of size `dim` at `stride`, for every
    /// value of the other digits. With `conj` the entries are conjugated.
    fn apply(&self, data: &mut [C64], stride: usize, conj: bool) {
        let g = self.dim;
        let span = stride * g;
        debug_assert_eq!(data.len() % span, 0);
        let mut input = vec![C64::new(0.0, 0.0); g];
        for chunk in data.chunks_exact_mut(span) {
            for inner in 0..stride {
                for (a, slot) in input.iter_mut().enumerate() {
                    *slot = chunk[inner + a * stride];
                }
                for (i, row) in self.rows.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for &(j, v) in row {
                        acc += if conj { v.conj() } else { v } * input[j];
                    }
                    chunk[inner + i * stride] = acc;
                }
            }
        }
    }
}

/// Single-qutrit coin: an SU(2) rotation on `{up, down}`.
pub fn coin_matrix(local: LocalSpace, theta: f64) -> CMatrix {
    let d = local.dim();
    let (s, c) = theta.sin_cos();
    let mut m = CMatrix::identity(d, d);
    for y in 0..d / 3 {
        let up = local.index(X_UP, y);
        let down = local.index(X_DOWN, y);
        m[(up, up)] = C64::new(c, 0.0);
        m[(up, down)] = C64::new(-s, 0.0);
        m[(down, up)] = C64::new(s, 0.0);
        m[(down, down)] = C64::new(c, 0.0);
    }
    m
}

/// Two-site shift on `(left, right)`, index `left + d·right`.
///
/// x-species: an up particle swaps across the pair, a down particle stays,
/// two particles exchange places. y-species: partial swap by `theta_y`.
pub fn shift_matrix(local: LocalSpace, theta_y: f64) -> CMatrix {
    let d = local.dim();
    let x_target = |xa: usize, xb: usize| match (xa, xb) {
        (X_UP, X_EMPTY) => (X_EMPTY, X_UP),
        (X_EMPTY, X_UP) => (X_UP, X_EMPTY),
        (a, b) if a != X_EMPTY && b != X_EMPTY => (b, a),
        other => other,
    };
    let (s, c) = theta_y.sin_cos();
    // y amplitudes for (ya, yb) -> list of ((ya', yb'), amplitude)
    let y_map = |ya: usize, yb: usize| -> Vec<((usize, usize), C64)> {
        match (ya, yb) {
            (1, 0) => vec![((1, 0), C64::new(c, 0.0)), ((0, 1), C64::new(0.0, -s))],
            (0, 1) => vec![((0, 1), C64::new(c, 0.0)), ((1, 0), C64::new(0.0, -s))],
            other => vec![(other, C64::new(1.0, 0.0))],
        }
    };
    let ny = d / 3;
    let mut m = CMatrix::zeros(d * d, d * d);
    for ya in 0..ny {
        for yb in 0..ny {
            for xa in 0..3 {
                for xb in 0..3 {
                    let col = local.index(xa, ya) + d * local.index(xb, yb);
                    let (xa2, xb2) = x_target(xa, xb);
                    for ((ya2, yb2), amp) in y_map(ya, yb) {
                        let row = local.index(xa2, ya2) + d * local.index(xb2, yb2);
                        m[(row, col)] += amp;
                    }
                }
            }
        }
    }
    m
}

/// Emission–absorption rotation between `(x, y=0)` and `(x, y=1)` for an
/// occupied x-species; identity when the x-species is absent.
pub fn interaction_matrix(lambda: f64, arg_g: f64) -> CMatrix {
    let local = LocalSpace::INTERACTING;
    let (s, c) = lambda.sin_cos();
    let phase = C64::from_polar(1.0, arg_g);
    let mut m = CMatrix::identity(6, 6);
    for x in [X_UP, X_DOWN] {
        let a = local.index(x, 0);
        let b = local.index(x, 1);
        m[(a, a)] = C64::new(c, 0.0);
        m[(a, b)] = -phase.conj() * s;
        m[(b, a)] = phase * s;
        m[(b, b)] = C64::new(c, 0.0);
    }
    m
}

/// Rotation mixing the empty state with an x-up particle (y empty).
pub fn creation_matrix(local: LocalSpace) -> CMatrix {
    let (s, c) = CONTROL_ANGLE.sin_cos();
    let mut m = CMatrix::identity(local.dim(), local.dim());
    let up = local.index(X_UP, 0);
    m[(0, 0)] = C64::new(c, 0.0);
    m[(0, up)] = C64::new(-s, 0.0);
    m[(up, 0)] = C64::new(s, 0.0);
    m[(up, up)] = C64::new(c, 0.0);
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Coin,
    Interaction,
    Creation,
    Shift,
    NonlocalPhase,
}

/// One gate application in spacetime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Cell {
    pub kind: CellKind,
    /// Site of a single-site cell, left site of a pair cell.
    pub site: usize,
    pub layer: i64,
}

impl Cell {
    pub fn sites(&self, lattice: usize) -> SiteSet {
        match self.kind {
            CellKind::Shift => SiteSet::range(self.site, self.site + 1),
            CellKind::NonlocalPhase => SiteSet::from_sites([0, lattice - 1]),
            _ => SiteSet::single(self.site),
        }
    }

    pub fn is_below(&self, surface: &LatticeSurface) -> bool {
        self.sites(surface.lattice()).iter().all(|x| self.layer < surface.layer(x))
    }
}

/// Order of cells inside a layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellOrder {
    #[default]
    Canonical,
    /// Sites visited right to left; causally equivalent to `Canonical`.
    Reversed,
}

/// Cells to undo and cells to apply when moving between two surfaces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Below `from` but not `to`, to be inverted in this order.
    pub backward: Vec<Cell>,
    /// Below `to` but not `from`, to be applied in this order.
    pub forward: Vec<Cell>,
}

struct GatePair {
    forward: SparseGate,
    inverse: SparseGate,
}

impl GatePair {
    fn new(m: &CMatrix) -> Self {
        let forward = SparseGate::from_dense(m);
        let inverse = forward.adjoint();
        Self { forward, inverse }
    }
}

/// The automaton on a lattice of fixed size.
pub struct Dynamics {
    params: ModelParams,
    lattice: usize,
    local: LocalSpace,
    coin: GatePair,
    shift: GatePair,
    interaction: Option<GatePair>,
    creation: Option<GatePair>,
    nonlocal_phase: Option<C64>,
}

impl std::fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dynamics").field("params", &self.params).field("lattice", &self.lattice).finish()
    }
}

impl Dynamics {
    pub fn new(params: ModelParams, lattice: usize) -> Result<Self> {
        if lattice == 0 || lattice > crate::geometry::MAX_SITES {
            return Err(Error::LatticeSize(lattice));
        }
        let local = params.local_space();
        Ok(Self {
            params,
            lattice,
            local,
            coin: GatePair::new(&coin_matrix(local, params.theta)),
            shift: GatePair::new(&shift_matrix(local, params.theta_y)),
            interaction: params
                .interacting
                .then(|| GatePair::new(&interaction_matrix(params.lambda, params.arg_g))),
            creation: (params.control == Control::VacuumCreation)
                .then(|| GatePair::new(&creation_matrix(local))),
            nonlocal_phase: (params.control == Control::NonlocalPhase && lattice > 1)
                .then(|| C64::from_polar(1.0, CONTROL_ANGLE)),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> usize {
        self.lattice
    }

    pub fn local(&self) -> LocalSpace {
        self.local
    }

    pub fn all_sites(&self) -> SiteSet {
        SiteSet::full(self.lattice)
    }

    /// Dense local gates `(kind, matrix)` of this model.
    pub fn local_gates(&self) -> Vec<(CellKind, CMatrix)> {
        let mut out = vec![(CellKind::Coin, self.coin.forward.dense()), (CellKind::Shift, self.shift.forward.dense())];
        if let Some(g) = &self.interaction {
            out.push((CellKind::Interaction, g.forward.dense()));
        }
        if let Some(g) = &self.creation {
            out.push((CellKind::Creation, g.forward.dense()));
        }
        out
    }

    /// Cells of one layer in the given order.
    pub fn layer_cells(&self, layer: i64, order: CellOrder) -> Vec<Cell> {
        let mut singles = vec![CellKind::Coin];
        if self.interaction.is_some() {
            singles.push(CellKind::Interaction);
        }
        if self.creation.is_some() {
            singles.push(CellKind::Creation);
        }
        let mut sites: Vec<usize> = (0..self.lattice).collect();
        if order == CellOrder::Reversed {
            sites.reverse();
        }
        let mut cells = Vec::new();
        for &x in &sites {
            cells.extend(singles.iter().map(|&kind| Cell { kind, site: x, layer }));
        }
        for &x in &sites {
            if x + 1 < self.lattice && pair_gate_at(x, layer) {
                cells.push(Cell { kind: CellKind::Shift, site: x, layer });
            }
        }
        if self.nonlocal_phase.is_some() {
            cells.push(Cell { kind: CellKind::NonlocalPhase, site: 0, layer });
        }
        cells
    }

    fn check_surface(&self, s: &LatticeSurface) -> Result<()> {
        if s.lattice() != self.lattice {
            return Err(Error::LatticeMismatch(s.lattice(), self.lattice));
        }
        s.check_cut_compatible()
    }

    pub fn schedule(&self, from: &LatticeSurface, to: &LatticeSurface, order: CellOrder) -> Result<Schedule> {
        self.check_surface(from)?;
        self.check_surface(to)?;
        let lo = from.min_layer().min(to.min_layer());
        let hi = from.max_layer().max(to.max_layer());
        let mut sched = Schedule::default();
        for t in lo..hi {
            for cell in self.layer_cells(t, order) {
                match (cell.is_below(from), cell.is_below(to)) {
                    (true, false) => sched.backward.push(cell),
                    (false, true) => sched.forward.push(cell),
                    _ => {}
                }
            }
        }
        sched.backward.reverse();
        Ok(sched)
    }

    /// Apply a cell to a vector of dimension `D · extra` whose low digits
    /// are the lattice sites (`block` = `D` for the column index of a
    /// column-major matrix, `1` otherwise).
    fn apply_cell(&self, data: &mut [C64], cell: Cell, inverse: bool, block: usize, conj: bool) {
        let d = self.local.dim();
        let stride = d.pow(cell.site as u32) * block;
        fn pick(g: &GatePair, inverse: bool) -> &SparseGate {
            if inverse {
                &g.inverse
            } else {
                &g.forward
            }
        }
        let gate = match cell.kind {
            CellKind::Coin => pick(&self.coin, inverse),
            CellKind::Shift => pick(&self.shift, inverse),
            CellKind::Interaction => pick(self.interaction.as_ref().expect("interacting model"), inverse),
            CellKind::Creation => pick(self.creation.as_ref().expect("creation control"), inverse),
            CellKind::NonlocalPhase => {
                let mut phase = self.nonlocal_phase.expect("nonlocal control");
                if inverse != conj {
                    phase = phase.conj();
                }
                let high = d.pow(self.lattice as u32 - 1);
                let dim = high * d;
                for (i, z) in data.iter_mut().enumerate() {
                    let idx = (i / block) % dim;
                    if !idx.is_multiple_of(d) && idx / high != 0 {
                        *z *= phase;
                    }
                }
                return;
            }
        };
        gate.apply(data, stride, conj);
    }

    fn run_schedule(&self, data: &mut [C64], sched: &Schedule, block: usize, conj: bool) {
        for &cell in &sched.backward {
            self.apply_cell(data, cell, true, block, conj);
        }
        for &cell in &sched.forward {
            self.apply_cell(data, cell, false, block, conj);
        }
    }

    fn check_full(&self, sites: SiteSet) -> Result<()> {
        if sites != self.all_sites() {
            return Err(Error::RegionMismatch(format!(
                "evolution acts on the whole lattice, got sites {sites:?}"
            )));
        }
        Ok(())
    }

    /// `U_Σ^{Σ'} ψ` for a state on the whole lattice.
    pub fn evolve_state(&self, psi: &StateVec, from: &LatticeSurface, to: &LatticeSurface) -> Result<StateVec> {
        self.evolve_state_ordered(psi, from, to, CellOrder::Canonical)
    }

    pub fn evolve_state_ordered(
        &self,
        psi: &StateVec,
        from: &LatticeSurface,
        to: &LatticeSurface,
        order: CellOrder,
    ) -> Result<StateVec> {
        self.check_full(psi.sites)?;
        let sched = self.schedule(from, to, order)?;
        let mut out = psi.clone();
        self.run_schedule(&mut out.amps, &sched, 1, false);
        Ok(out)
    }

    /// `U ρ U†` for a density operator on the whole lattice.
    pub fn evolve_density(&self, rho: &DensityOp, from: &LatticeSurface, to: &LatticeSurface) -> Result<DensityOp> {
        self.check_full(rho.sites)?;
        let sched = self.schedule(from, to, CellOrder::Canonical)?;
        let mut out = rho.clone();
        let dim = out.dim();
        let data = out.mat.as_mut_slice();
        self.run_schedule(data, &sched, 1, false);
        self.run_schedule(data, &sched, dim, true);
        Ok(out)
    }

    /// Dense `U_Σ^{Σ'}`.
    pub fn unitary(&self, from: &LatticeSurface, to: &LatticeSurface) -> Result<CMatrix> {
        let dim = self.local.check_dim(self.lattice, limits::MAX_DENSITY_DIM, "dense evolution operator")?;
        let sched = self.schedule(from, to, CellOrder::Canonical)?;
        let mut u = CMatrix::identity(dim, dim);
        self.run_schedule(u.as_mut_slice(), &sched, 1, false);
        Ok(u)
    }

    /// Reduced evolution `W_A^{target}` from `from` to `to`, as a
    /// `d^|target| × d^|A|` matrix:
    /// `W ψ_A = ⟨∅(target^c)| U |ψ_A ⊗ ∅(A^c)⟩`.
    ///
    /// Fails with [`Error::FsViolation`] when the result is not an isometry,
    /// i.e. when part of the evolved state leaks outside `target`.
    pub fn reduced_evolution_to(
        &self,
        from: &LatticeSurface,
        a: SiteSet,
        to: &LatticeSurface,
        target: SiteSet,
    ) -> Result<CMatrix> {
        let all = self.all_sites();
        if !a.is_subset(all) || !target.is_subset(all) {
            return Err(Error::RegionMismatch("region outside the lattice".into()));
        }
        let sched = self.schedule(from, to, CellOrder::Canonical)?;
        let dim_a = self.local.check_dim(a.len(), limits::MAX_DENSITY_DIM, "reduced evolution domain")?;
        let dim_t = self.local.check_dim(target.len(), limits::MAX_DENSITY_DIM, "reduced evolution range")?;
        let vac_rest = StateVec::vacuum(self.local, all.difference(a))?;
        let mut w = CMatrix::zeros(dim_t, dim_a);
        let mut worst: f64 = 0.0;
        for i in 0..dim_a {
            let mut e = StateVec::vacuum(self.local, a)?;
            e.amps[0] = C64::new(0.0, 0.0);
            e.amps[i] = C64::new(1.0, 0.0);
            let mut full = e.tensor(&vac_rest)?;
            self.run_schedule(&mut full.amps, &sched, 1, false);
            let column = full.vacuum_component(all.difference(target));
            worst = worst.max((1.0 - column.norm_sqr()).abs());
            for (r, z) in column.amps.into_iter().enumerate() {
                w[(r, i)] = z;
            }
        }
        // Columns are images of orthonormal vectors under a unitary, so the
        // leaked weight also bounds the overlaps: |<w_i, w_j>| <= sqrt(e_i e_j).
        if worst > tol::ISOMETRY {
            return Err(Error::FsViolation { defect: worst });
        }
        Ok(w)
    }

    /// `W_A^{Gr(A, to)}`.
    pub fn reduced_evolution(&self, from: &LatticeSurface, a: SiteSet, to: &LatticeSurface) -> Result<CMatrix> {
        self.reduced_evolution_to(from, a, to, grown_sites(from, a, to))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::X_UP;
    use crate::linalg::{distance, random_unit_vector, unitarity_residual};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, local: LocalSpace, lattice: usize) -> StateVec {
        let sites = SiteSet::full(lattice);
        let dim = local.region_dim(lattice).unwrap();
        StateVec::from_amps(local, sites, random_unit_vector(rng, dim)).unwrap()
    }

    #[test]
    fn massless_shift_moves_up_particle_right() {
        let dynamics = Dynamics::new(ModelParams::free(0.0), 8).unwrap();
        let sites = SiteSet::full(8);
        let psi = StateVec::basis(LocalSpace::FREE, sites, &[(2, X_UP)]).unwrap();
        let one = dynamics.evolve_state(&psi, &LatticeSurface::flat(8, 0), &LatticeSurface::flat(8, 1)).unwrap();
        assert_eq!(one, StateVec::basis(LocalSpace::FREE, sites, &[(3, X_UP)]).unwrap());
        let three = dynamics.evolve_state(&psi, &LatticeSurface::flat(8, 0), &LatticeSurface::flat(8, 3)).unwrap();
        assert_eq!(three, StateVec::basis(LocalSpace::FREE, sites, &[(5, X_UP)]).unwrap());
    }

    #[test]
    fn interaction_is_identity_without_x_particle() {
        let m = interaction_matrix(0.9, 0.4);
        let local = LocalSpace::INTERACTING;
        for y in 0..2 {
            let i = local.index(X_EMPTY, y);
            for j in 0..6 {
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                assert_eq!(m[(i, j)], expect);
                assert_eq!(m[(j, i)], expect);
            }
        }
    }

    #[test]
    fn local_gates_are_unitary_and_fix_the_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let params = ModelParams::interacting(rng.gen(), rng.gen(), rng.gen(), rng.gen());
            for (_, g) in Dynamics::new(params, 3).unwrap().local_gates() {
                assert!(unitarity_residual(&g) < 1e-13);
                assert_eq!(g[(0, 0)], C64::new(1.0, 0.0));
            }
            let free = Dynamics::new(ModelParams::free(rng.gen()), 3).unwrap();
            for (_, g) in free.local_gates() {
                assert!(unitarity_residual(&g) < 1e-13);
            }
        }
        let creation = creation_matrix(LocalSpace::FREE);
        assert!(unitarity_residual(&creation) < 1e-13);
        assert!(creation[(0, 0)].re < 1.0);
    }

    #[test]
    fn same_surface_is_identity() {
        let dynamics = Dynamics::new(ModelParams::interacting(0.3, 0.5, 0.7, 0.2), 3).unwrap();
        let s = LatticeSurface::staircase(3, 1, 3).unwrap();
        let u = dynamics.unitary(&s, &s).unwrap();
        assert!(distance(&u, &CMatrix::identity(u.nrows(), u.ncols())) == 0.0);
    }

    #[test]
    fn vacuum_evolves_to_vacuum() {
        let dynamics = Dynamics::new(ModelParams::interacting(0.3, 0.5, 0.7, 0.2), 4).unwrap();
        let vac = StateVec::vacuum(LocalSpace::INTERACTING, SiteSet::full(4)).unwrap();
        let to = LatticeSurface::vee(4, 1, 3).unwrap();
        let out = dynamics.evolve_state(&vac, &LatticeSurface::flat(4, 0), &to).unwrap();
        assert_eq!(out, vac);
    }

    fn cut_compatible(lattice: usize, hi: i64) -> Vec<LatticeSurface> {
        crate::geometry::all_surfaces(lattice, 0, hi).into_iter().filter(|s| s.cut_violation().is_none()).collect()
    }

    #[test]
    fn composition_law_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dynamics = Dynamics::new(ModelParams::interacting(0.4, 0.6, 0.9, 1.1), 4).unwrap();
        let valid = cut_compatible(4, 3);
        for _ in 0..10 {
            let a = &valid[rng.gen_range(0..valid.len())];
            let b = &valid[rng.gen_range(0..valid.len())];
            let c = &valid[rng.gen_range(0..valid.len())];
            let psi = random_state(&mut rng, LocalSpace::INTERACTING, 4);
            let two_step = dynamics.evolve_state(&dynamics.evolve_state(&psi, a, b).unwrap(), b, c).unwrap();
            let direct = dynamics.evolve_state(&psi, a, c).unwrap();
            assert!(two_step.distance(&direct) < 1e-12);
        }
    }

    #[test]
    fn composition_law_on_dense_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for (params, lattice) in
            [(ModelParams::free(0.3), 4), (ModelParams::interacting(0.4, 0.6, 0.9, 1.1), 3)]
        {
            let dynamics = Dynamics::new(params, lattice).unwrap();
            let valid = cut_compatible(lattice, 3);
            for _ in 0..5 {
                let a = &valid[rng.gen_range(0..valid.len())];
                let b = &valid[rng.gen_range(0..valid.len())];
                let c = &valid[rng.gen_range(0..valid.len())];
                let u_ab = dynamics.unitary(a, b).unwrap();
                let u_bc = dynamics.unitary(b, c).unwrap();
                assert!(unitarity_residual(&u_ab) < 1e-11);
                assert!(distance(&(u_bc * u_ab), &dynamics.unitary(a, c).unwrap()) < 1e-11);
            }
        }
    }

    #[test]
    fn schedule_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let dynamics = Dynamics::new(ModelParams::interacting(0.4, 0.6, 0.9, 1.1), 4).unwrap();
        let from = LatticeSurface::flat(4, 0);
        let to = LatticeSurface::staircase(4, 1, 4).unwrap();
        let psi = random_state(&mut rng, LocalSpace::INTERACTING, 4);
        let a = dynamics.evolve_state_ordered(&psi, &from, &to, CellOrder::Canonical).unwrap();
        let b = dynamics.evolve_state_ordered(&psi, &from, &to, CellOrder::Reversed).unwrap();
        assert!(a.distance(&b) < 1e-13);
    }

    #[test]
    fn density_evolution_matches_state_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let dynamics = Dynamics::new(ModelParams::free(0.35), 5).unwrap();
        let from = LatticeSurface::flat(5, 0);
        let to = LatticeSurface::vee(5, 2, 2).unwrap();
        let psi = random_state(&mut rng, LocalSpace::FREE, 5);
        let rho = dynamics.evolve_density(&psi.to_density().unwrap(), &from, &to).unwrap();
        let expect = dynamics.evolve_state(&psi, &from, &to).unwrap().to_density().unwrap();
        assert!(distance(&rho.mat, &expect.mat) < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_rejects_cut_surfaces() {
        let dynamics = Dynamics::new(ModelParams::free(0.1), 3).unwrap();
        let bad = LatticeSurface::new(vec![0, 1, 1]).unwrap();
        let vac = StateVec::vacuum(LocalSpace::FREE, SiteSet::full(3)).unwrap();
        let err = dynamics.evolve_state(&vac, &LatticeSurface::flat(3, 0), &bad).unwrap_err();
        assert!(matches!(err, Error::NotCutCompatible { site: 0 }));
    }

    #[test]
    fn reduced_evolution_trivial_cases() {
        let dynamics = Dynamics::new(ModelParams::free(0.4), 4).unwrap();
        let s = LatticeSurface::flat(4, 1);
        let a = SiteSet::from_sites([1, 2]);
        let w = dynamics.reduced_evolution(&s, a, &s).unwrap();
        assert_eq!(w, CMatrix::identity(9, 9));
        let to = LatticeSurface::flat(4, 3);
        let w = dynamics.reduced_evolution(&s, SiteSet::full(4), &to).unwrap();
        assert!(distance(&w, &dynamics.unitary(&s, &to).unwrap()) < 1e-14);
    }

    #[test]
    fn vacuum_creation_breaks_reduced_isometry() {
        let dynamics = Dynamics::new(ModelParams::free(0.4).with_control(Control::VacuumCreation), 4).unwrap();
        let err = dynamics
            .reduced_evolution(&LatticeSurface::flat(4, 0), SiteSet::single(1), &LatticeSurface::flat(4, 1))
            .unwrap_err();
        assert!(matches!(err, Error::FsViolation { .. }));
    }
}
