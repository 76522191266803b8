//! The sequential detection protocol and the quantities compared with it.
//!
//! A run starts from `ψ_0` on the flat surface at layer 0. Every `m`
//! layers the detectors above the patches are read out on the flat surface
//! `Υ_k`, after which the detector strip `B_k ∪ R_k` is replaced by the
//! vacuum so no particle is counted twice. The same probabilities are then
//! obtained from `ψ_Σ` alone through the closed expression, and bracketed
//! by PVM expectations of shrunk and grown configuration sets.

use std::collections::HashMap;

use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::events::{
    compatible_outcomes, event_mb, event_mc_limits, event_mp, event_mp_limits, outcome_count, Event,
    OutcomePattern, OutcomeSeq,
};
use crate::fock::{projector_mask, DensityOp, StateVec};
use crate::geometry::{patch_shrink_grow, LatticeSurface, SiteSet, SliceDecomposition};
use crate::linalg::{self, diagonal_projector, CMatrix};
use crate::{tol, Error, Result, C64};

/// Options of the sequential protocol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    /// Exploratory: keep the detector strip instead of resetting it to the
    /// vacuum after each round. Not part of the protocol proper.
    pub skip_vacuum_reset: bool,
}

/// Everything a detection run needs.
#[derive(Debug)]
pub struct DetectionRun<'a> {
    pub dynamics: &'a Dynamics,
    /// Initial state on the flat surface at layer 0.
    pub psi0: StateVec,
    pub dec: SliceDecomposition,
    pub options: RunOptions,
}

/// Probabilities of every joint outcome `s`, indexed by `s.bits`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeTable {
    pub kappa: i64,
    pub rounds: usize,
    pub r: usize,
    pub probs: Vec<f64>,
}

impl OutcomeTable {
    fn new(dec: &SliceDecomposition) -> Result<Self> {
        Ok(Self {
            kappa: dec.kappa,
            rounds: dec.detection_rounds(),
            r: dec.r(),
            probs: vec![0.0; outcome_count(dec)?],
        })
    }

    pub fn seq(&self, bits: u64) -> OutcomeSeq {
        OutcomeSeq { kappa: self.kappa, rounds: self.rounds, r: self.r, bits }
    }

    pub fn prob(&self, s: OutcomeSeq) -> f64 {
        self.probs[s.bits as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P_det(L) = Σ_{s:L} P(s)`, indexed by the pattern bits.
    pub fn coarse_grain(&self) -> Vec<f64> {
        OutcomePattern::all(self.r)
            .map(|pat| {
                compatible_outcomes(pat, self.kappa, self.rounds).iter().map(|&s| self.prob(s)).sum()
            })
            .collect()
    }

    /// Largest absolute difference from another table.
    pub fn max_difference(&self, other: &OutcomeTable) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Nonzero entries as `(s, P(s))`, in increasing `s`.
    pub fn support(&self) -> Vec<(OutcomeSeq, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(b, &p)| (self.seq(b as u64), p))
            .collect()
    }
}

/// Output of the sequential protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequentialResult {
    pub table: OutcomeTable,
    /// `P_det(L)` accumulated directly during the branch enumeration.
    pub by_pattern: Vec<f64>,
    /// Branches explored (including pruned ones).
    pub branches: usize,
}

impl<'a> DetectionRun<'a> {
    pub fn new(dynamics: &'a Dynamics, psi0: StateVec, dec: SliceDecomposition) -> Result<Self> {
        if psi0.sites != dynamics.all_sites() || dec.lattice() != dynamics.lattice() {
            return Err(Error::LatticeMismatch(dec.lattice(), dynamics.lattice()));
        }
        outcome_count(&dec)?;
        Ok(Self { dynamics, psi0, dec, options: RunOptions::default() })
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    fn lattice(&self) -> usize {
        self.dec.lattice()
    }

    fn upsilon(&self, k: i64) -> LatticeSurface {
        self.dec.round(k).upsilon(self.lattice())
    }

    /// `ψ_Σ = U_{Σ_0}^{Σ} ψ_0`.
    pub fn psi_sigma(&self) -> Result<StateVec> {
        let flat0 = LatticeSurface::flat(self.lattice(), 0);
        self.dynamics.evolve_state(&self.psi0, &flat0, &self.dec.sigma)
    }

    /// Evolve `|ψ_0⟩⟨ψ_0|` to `Υ_{κ-1}` and remove whatever already crossed
    /// `Σ` by resetting `B_{κ-1} ∪ R_{κ-1}` to the vacuum.
    pub fn first_surface_prepare(&self) -> Result<DensityOp> {
        self.dynamics.local().check_dim(self.lattice(), crate::limits::MAX_DENSITY_DIM, "density operator")?;
        let k = self.dec.kappa - 1;
        let flat0 = LatticeSurface::flat(self.lattice(), 0);
        let rho = self.dynamics.evolve_density(&self.psi0.to_density()?, &flat0, &self.upsilon(k))?;
        rho.reset_to_vacuum(self.dec.round(k).detector_side())
    }

    /// Detection map `D_k`: returns the post-detection state on `Υ_k` and
    /// the conditional probability `𝓝_k`, or `None` for a null outcome.
    pub fn detection_map(&self, rho: &DensityOp, k: i64, row: u64) -> Result<Option<(DensityOp, f64)>> {
        let mask = projector_mask(rho.local, rho.sites, &event_mb(&self.dec, k, row));
        let norm = rho.mask_probability(&mask);
        if norm < tol::PRUNE {
            return Ok(None);
        }
        let mut out = rho.clone();
        out.apply_mask(&mask);
        if !self.options.skip_vacuum_reset {
            out = out.reset_to_vacuum(self.dec.round(k).detector_side())?;
        }
        out.scale(1.0 / norm);
        Ok(Some((out, norm)))
    }

    /// Depth-first enumeration of all detection branches.
    pub fn run_sequential(&self) -> Result<SequentialResult> {
        let mut result = SequentialResult {
            table: OutcomeTable::new(&self.dec)?,
            by_pattern: vec![0.0; 1 << self.dec.r()],
            branches: 0,
        };
        let start = self.first_surface_prepare()?;
        let seq = OutcomeSeq::for_decomposition(&self.dec, 0);
        self.sequential_branch(&start, self.dec.kappa, seq, 1.0, &mut result)?;
        Ok(result)
    }

    fn sequential_branch(
        &self,
        rho_prev: &DensityOp,
        k: i64,
        seq: OutcomeSeq,
        prob: f64,
        out: &mut SequentialResult,
    ) -> Result<()> {
        if k > self.dec.big_k {
            out.table.probs[seq.bits as usize] = prob;
            out.by_pattern[seq.pattern().bits as usize] += prob;
            return Ok(());
        }
        let rho = self.dynamics.evolve_density(rho_prev, &self.upsilon(k - 1), &self.upsilon(k))?;
        for row in 0..1u64 << self.dec.r() {
            out.branches += 1;
            if let Some((next, norm)) = self.detection_map(&rho, k, row)? {
                self.sequential_branch(&next, k + 1, seq.with_row(k, row), prob * norm, out)?;
            }
        }
        Ok(())
    }

    /// `W_{C_k}^{B_k}` from `Σ` to `Υ_k`.
    pub fn w_cb(&self, k: i64) -> Result<CMatrix> {
        let round = self.dec.round(k);
        self.dynamics.reduced_evolution_to(&self.dec.sigma, round.c, &self.upsilon(k), round.b)
    }

    /// The rows of `W` kept by `P_{B_k}(N_B(s_k))`, so that `P̃ = W_s† W_s`.
    fn masked_rows(&self, k: i64, row: u64, w: &CMatrix) -> CMatrix {
        let round = self.dec.round(k);
        let mask = projector_mask(self.dynamics.local(), round.b, &event_mb(&self.dec, k, row));
        let kept: Vec<usize> = mask.iter().enumerate().filter(|(_, &on)| on).map(|(i, _)| i).collect();
        w.select_rows(&kept)
    }

    /// `P̃_{C_k}(s_k) = W† P_{B_k}(N_B(s_k)) W` on `H_{C_k}`.
    pub fn p_tilde(&self, k: i64, row: u64, w: &CMatrix) -> CMatrix {
        let ws = self.masked_rows(k, row, w);
        linalg::matmul(&ws.adjoint(), &ws)
    }

    /// All `P̃_{C_k}(s_k)`, keyed by `(k, s_k)`.
    pub fn p_tildes(&self) -> Result<HashMap<(i64, u64), CMatrix>> {
        let mut out = HashMap::new();
        for k in self.dec.kappa..=self.dec.big_k {
            let w = self.w_cb(k)?;
            for row in 0..1u64 << self.dec.r() {
                out.insert((k, row), self.p_tilde(k, row, &w));
            }
        }
        Ok(out)
    }

    /// `⟨ψ_Σ| ⊗_k P̃_{C_k}(s_k) |ψ_Σ⟩` for every `s`.
    ///
    /// `P̃` is applied as `W_s† (W_s φ)` and never formed.
    pub fn closed_expression(&self) -> Result<OutcomeTable> {
        let psi = self.psi_sigma()?;
        let mut factors = HashMap::new();
        for k in self.dec.kappa..=self.dec.big_k {
            let w = self.w_cb(k)?;
            for row in 0..1u64 << self.dec.r() {
                factors.insert((k, row), self.masked_rows(k, row, &w));
            }
        }
        let mut table = OutcomeTable::new(&self.dec)?;
        let seq = OutcomeSeq::for_decomposition(&self.dec, 0);
        self.closed_branch(&psi, &psi, &factors, self.dec.kappa, seq, &mut table)?;
        Ok(table)
    }

    fn closed_branch(
        &self,
        psi: &StateVec,
        phi: &StateVec,
        factors: &HashMap<(i64, u64), CMatrix>,
        k: i64,
        seq: OutcomeSeq,
        table: &mut OutcomeTable,
    ) -> Result<()> {
        if k > self.dec.big_k {
            table.probs[seq.bits as usize] = psi.inner(phi).re;
            return Ok(());
        }
        let c = self.dec.round(k).c;
        let rest = phi.sites.difference(c);
        let m = phi.split(c);
        for row in 0..1u64 << self.dec.r() {
            let ws = &factors[&(k, row)];
            if ws.nrows() == 0 {
                continue;
            }
            let image = linalg::matmul(ws, &m);
            if image.norm() < tol::PRUNE {
                continue;
            }
            let next = StateVec::join(phi.local, c, rest, &linalg::matmul(&ws.adjoint(), &image))?;
            self.closed_branch(psi, &next, factors, k + 1, seq.with_row(k, row), table)?;
        }
        Ok(())
    }

    /// Auxiliary states `ρ_{A_k}` along the branch `s`, checked against the
    /// sequential states.
    pub fn auxiliary_trail(&self, s: OutcomeSeq) -> Result<Vec<TrailStep>> {
        let dec = &self.dec;
        let dynamics = self.dynamics;
        let kappa = dec.kappa;
        let flat0 = LatticeSurface::flat(self.lattice(), 0);
        let first = dec.round(kappa - 1);
        let evolved = dynamics.evolve_density(&self.psi0.to_density()?, &flat0, &self.upsilon(kappa - 1))?;
        let mut rho_a = evolved.partial_trace(first.detector_side())?;
        let mut rho_seq = evolved.reset_to_vacuum(first.detector_side())?;
        let mut steps = vec![TrailStep {
            k: kappa - 1,
            norm_sequential: 1.0,
            norm_auxiliary: rho_a.trace(),
            conditional: 1.0,
            property1: linalg::distance(&rho_seq.mat, &rho_a.embed_vacuum(first.detector_side())?.mat),
            property2: None,
            property3: (1.0 - rho_a.trace()).abs(),
            property4: 0.0,
        }];
        let mut tildes = HashMap::new();
        for k in kappa..=dec.big_k {
            let (prev, round) = (dec.round(k - 1), dec.round(k));
            let row = s.row(k);
            let before = dynamics.evolve_density(&rho_seq, &self.upsilon(k - 1), &self.upsilon(k))?;

            let target = round.a.union(round.b);
            let w = dynamics.reduced_evolution_to(&self.upsilon(k - 1), prev.a, &self.upsilon(k), target)?;
            let predicted = rho_a.conjugate(&w, target)?.embed_vacuum(round.r)?;
            steps.last_mut().expect("nonempty").property2 = Some(linalg::distance(&before.mat, &predicted.mat));

            let conditional = before.probability(&event_mb(dec, k, row));
            let Some((after, norm)) = self.detection_map(&before, k, row)? else {
                return Err(Error::Config(format!("branch {} has probability zero", s.label())));
            };

            if let std::collections::hash_map::Entry::Vacant(e) = tildes.entry(k) {
                e.insert(self.w_cb(k)?);
            }
            let p_tilde = self.p_tilde(k, row, &tildes[&k]);
            let spread = rho_a.embed_vacuum(prev.detector_side())?;
            let on_xi = dynamics.evolve_density(&spread, &self.upsilon(k - 1), &dec.xi(k - 1, k))?;
            let mut next_a = on_xi.apply_left_on(round.c, &p_tilde)?.partial_trace(round.c.union(prev.detector_side()))?;
            let norm_a = next_a.trace();
            next_a.scale(1.0 / norm_a);
            // drop the anti-Hermitian rounding noise of the non-projector product
            next_a.mat = (&next_a.mat + next_a.mat.adjoint()) * C64::new(0.5, 0.0);

            steps.push(TrailStep {
                k,
                norm_sequential: norm,
                norm_auxiliary: norm_a,
                conditional,
                property1: linalg::distance(&after.mat, &next_a.embed_vacuum(round.detector_side())?.mat),
                property2: None,
                property3: (norm - norm_a).abs(),
                property4: (conditional - norm_a).abs(),
            });
            rho_a = next_a;
            rho_seq = after;
        }
        Ok(steps)
    }
}

/// One round of the auxiliary-state trail with the residuals of its four
/// properties.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrailStep {
    pub k: i64,
    pub norm_sequential: f64,
    pub norm_auxiliary: f64,
    pub conditional: f64,
    /// `‖ρ'_{Υ_k} - ρ_{A_k} ⊗ |∅⟩⟨∅|‖`.
    pub property1: f64,
    /// `‖ρ_{Υ_{k+1}} - (W ρ_{A_k} W†) ⊗ |∅⟩⟨∅|‖`; absent for the last round.
    pub property2: Option<f64>,
    /// `|𝓝_k - 𝓝_{A_k}|`.
    pub property3: f64,
    /// `|P(s_k | ρ_{Υ_k}) - 𝓝_{A_k}|`.
    pub property4: f64,
}

impl TrailStep {
    pub fn worst(&self) -> f64 {
        [self.property1, self.property2.unwrap_or(0.0), self.property3, self.property4]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Probability of `event` under a configuration distribution.
pub fn event_probability(dist: &[f64], event: &Event) -> f64 {
    // fold from +0.0: an empty `sum` would give -0.0
    event.iter().map(|q| dist[q.0 as usize]).fold(0.0, |a, p| a + p)
}

/// Curved Born probabilities `⟨ψ_Σ|P(M_P(L))|ψ_Σ⟩`, indexed by pattern bits.
pub fn curved_born(dist: &[f64], part: &crate::geometry::Partition) -> Vec<f64> {
    OutcomePattern::all(part.r()).map(|pat| event_probability(dist, &event_mp(part, pat))).collect()
}

/// Lower and upper probability bounds for one pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// How far `value` lies outside the bracket (negative when outside).
    pub fn slack(&self, value: f64) -> f64 {
        (value - self.lower).min(self.upper - value)
    }
}

/// `⟨P(M̌_C^ε(L))⟩ ≤ P_det(L) ≤ ⟨P(M̂_C^ε(L))⟩`.
pub fn tight_bounds(dist: &[f64], dec: &SliceDecomposition) -> Vec<Bracket> {
    OutcomePattern::all(dec.r())
        .map(|pat| {
            let fam = event_mc_limits(dec, pat);
            Bracket { lower: event_probability(dist, &fam.shrunk), upper: event_probability(dist, &fam.grown) }
        })
        .collect()
}

/// Looser bounds from patches eroded and dilated by `m` sites:
/// `⟨P(M̌_P^m(L) ∩ ∅(∂P^m))⟩` and `⟨P(M̂_P^m(L))⟩`. They are monotone in `m`.
pub fn patch_bounds(dist: &[f64], part: &crate::geometry::Partition, m: i64) -> Vec<Bracket> {
    let growth = patch_shrink_grow(part, m);
    let guard = Event::empty_in(part.lattice(), growth.boundary);
    OutcomePattern::all(part.r())
        .map(|pat| {
            let (shrunk, grown) = event_mp_limits(&growth, part.lattice(), pat);
            Bracket {
                lower: event_probability(dist, &shrunk.intersection(&guard)),
                upper: event_probability(dist, &grown),
            }
        })
        .collect()
}

/// All vacuum-event probabilities `P(∅(A))`, indexed by `A`.
pub fn vacuum_probabilities(dist: &[f64]) -> Vec<f64> {
    let n = dist.len();
    // superset sums: P(∅(A)) = Σ_{q ∩ A = ∅} p(q) = Σ_{q ⊆ A^c} p(q)
    let mut subset_sums = dist.to_vec();
    let lattice = n.trailing_zeros();
    for bit in 0..lattice {
        let b = 1usize << bit;
        for q in 0..n {
            if q & b != 0 {
                subset_sums[q] += subset_sums[q ^ b];
            }
        }
    }
    (0..n).map(|a| subset_sums[(n - 1) & !a]).collect()
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: i64,
    pub pattern: OutcomePattern,
    pub lower: f64,
    pub sequential: f64,
    pub upper: f64,
    pub born: f64,
    pub patch_lower: f64,
    pub patch_upper: f64,
}

/// Run the protocol for each `m` and tabulate brackets against the
/// sequential and curved Born values.
pub fn convergence_sweep(dynamics: &Dynamics, psi0: &StateVec, sigma: &LatticeSurface, part: &crate::geometry::Partition, ms: &[i64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    let mut dist = None;
    for &m in ms {
        let dec = crate::geometry::slice_decompose(sigma, part, m)?;
        let run = DetectionRun::new(dynamics, psi0.clone(), dec)?;
        let dist = match &dist {
            Some(d) => d,
            None => dist.insert(run.psi_sigma()?.configuration_distribution(sigma.lattice())),
        };
        let seq = run.run_sequential()?.table.coarse_grain();
        let born = curved_born(dist, part);
        let tight = tight_bounds(dist, &run.dec);
        let patch = patch_bounds(dist, part, m);
        for pat in OutcomePattern::all(part.r()) {
            let i = pat.bits as usize;
            rows.push(SweepRow {
                m,
                pattern: pat,
                lower: tight[i].lower,
                sequential: seq[i],
                upper: tight[i].upper,
                born: born[i],
                patch_lower: patch[i].lower,
                patch_upper: patch[i].upper,
            });
        }
    }
    Ok(rows)
}

/// Dense operator-inequality checks for one round and patch:
/// `P(∅(Ĉ∪D)) ≤ U P(∅(B)) U† ≤ P(∅(Č))` and the `∃` duals, as the smallest
/// eigenvalue over the four gaps.
pub fn projector_inequality_gap(dynamics: &Dynamics, dec: &SliceDecomposition, k: i64, l: usize) -> Result<f64> {
    let local = dynamics.local();
    let lattice = dec.lattice();
    let all = SiteSet::full(lattice);
    let round = dec.round(k);
    let p = &round.patches[l];
    let upsilon = round.upsilon(lattice);
    let u = dynamics.unitary(&upsilon, &dec.sigma)?;
    let proj = |e: Event| diagonal_projector(&projector_mask(local, all, &e));
    let grown = p.c_hat.union(p.d);
    let transported = |e: Event| &u * proj(e) * u.adjoint();
    let empty_b = transported(Event::empty_in(lattice, p.b));
    let exists_b = transported(Event::exists_in(lattice, p.b));
    let gaps = [
        &empty_b - proj(Event::empty_in(lattice, grown)),
        proj(Event::empty_in(lattice, p.c_check)) - &empty_b,
        &exists_b - proj(Event::exists_in(lattice, p.c_check)),
        proj(Event::exists_in(lattice, grown)) - &exists_b,
    ];
    Ok(gaps.iter().map(linalg::min_eigenvalue).fold(f64::INFINITY, f64::min))
}
