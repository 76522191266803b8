//! Configuration space and the event algebra generated by `∅`, `∃`, `∀`.
//!
//! A configuration is the set of occupied sites of a surface (species are
//! merged), stored as a [`SiteSet`]. Events are materialized as membership
//! tables over all `2^L` configurations of an `L`-site surface; an event
//! on a sub-region `R` is represented by its cylinder `S × Γ(Σ \ R)`.

use std::fmt;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::geometry::{PatchGrowth, Partition, SiteSet, SliceDecomposition};
use crate::{limits, tol, Error, Result};

/// Occupied sites of a surface.
pub type Configuration = SiteSet;

/// Largest surface whose configuration space gets materialized.
pub const MAX_EVENT_SITES: usize = 24;

/// A set of configurations of an `L`-site surface.
#[derive(Clone, PartialEq, Eq)]
pub struct Event {
    lattice: usize,
    members: Vec<bool>,
}

impl Event {
    /// Materialize `{q ∈ Γ : pred(q)}`.
    ///
    /// # Panics
    /// If `lattice` exceeds [`MAX_EVENT_SITES`].
    pub fn from_predicate(lattice: usize, pred: impl Fn(Configuration) -> bool) -> Self {
        assert!(lattice <= MAX_EVENT_SITES, "event on {lattice} sites is too large to materialize");
        let members = (0..1u64 << lattice).map(|q| pred(SiteSet(q))).collect();
        Self { lattice, members }
    }

    /// The whole configuration space `Γ(Σ)`.
    pub fn full(lattice: usize) -> Self {
        Self::from_predicate(lattice, |_| true)
    }

    pub fn nothing(lattice: usize) -> Self {
        Self::from_predicate(lattice, |_| false)
    }

    /// `∅(R)`: no particle in `R`.
    pub fn empty_in(lattice: usize, region: SiteSet) -> Self {
        Self::from_predicate(lattice, |q| q.is_disjoint(region))
    }

    /// `∃(R)`: at least one particle in `R`.
    pub fn exists_in(lattice: usize, region: SiteSet) -> Self {
        Self::from_predicate(lattice, |q| !q.is_disjoint(region))
    }

    /// `∀(R) = ∅(R^c)`: every particle in `R`.
    pub fn all_in(lattice: usize, region: SiteSet) -> Self {
        Self::from_predicate(lattice, |q| q.is_subset(region))
    }

    /// `∅(R)` if `hit` is false, `∃(R)` otherwise.
    pub fn detector(lattice: usize, region: SiteSet, hit: bool) -> Self {
        if hit {
            Self::exists_in(lattice, region)
        } else {
            Self::empty_in(lattice, region)
        }
    }

    /// Intersection of detector clauses `(region, hit)`.
    pub fn detectors(lattice: usize, clauses: &[(SiteSet, bool)]) -> Self {
        Self::from_predicate(lattice, |q| clause_holds(q, clauses))
    }

    pub fn lattice(&self) -> usize {
        self.lattice
    }

    pub fn contains(&self, q: Configuration) -> bool {
        self.members[q.0 as usize]
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(q, _)| SiteSet(q as u64))
    }

    fn zip(&self, other: &Event, f: impl Fn(bool, bool) -> bool) -> Event {
        assert_eq!(self.lattice, other.lattice, "events on different surfaces");
        Event {
            lattice: self.lattice,
            members: self.members.iter().zip(&other.members).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union(&self, other: &Event) -> Event {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Event) -> Event {
        self.zip(other, |a, b| a && b)
    }

    pub fn complement(&self) -> Event {
        Event { lattice: self.lattice, members: self.members.iter().map(|b| !b).collect() }
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Event) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !(a && b))
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Event")
            .field("lattice", &self.lattice)
            .field("members", &self.iter().collect::<Vec<_>>())
            .finish()
    }
}

struct Members<'a>(&'a Event);

impl Serialize for Members<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for q in self.0.iter() {
            seq.serialize_element(&q.0)?;
        }
        seq.end()
    }
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Event", 2)?;
        st.serialize_field("lattice", &self.lattice)?;
        st.serialize_field("members", &Members(self))?;
        st.end()
    }
}

fn clause_holds(q: Configuration, clauses: &[(SiteSet, bool)]) -> bool {
    clauses.iter().all(|&(region, hit)| q.is_disjoint(region) != hit)
}

/// `Γ(A ∪ B) ≅ Γ(A) × Γ(B)` for disjoint `A`, `B`: `q ↦ (q ∩ A, q \ A)`.
pub fn split_configuration(q: Configuration, a: SiteSet) -> (Configuration, Configuration) {
    (q.intersection(a), q.difference(a))
}

/// Inverse of [`split_configuration`].
pub fn join_configuration(qa: Configuration, qb: Configuration) -> Configuration {
    debug_assert!(qa.is_disjoint(qb));
    qa.union(qb)
}

/// Size of the `n`-particle sector `Γ_n(R)` for `|R| = sites`.
pub fn sector_size(sites: usize, n: usize) -> u64 {
    if n > sites {
        return 0;
    }
    (0..n as u64).fold(1u64, |acc, i| acc * (sites as u64 - i) / (i + 1))
}

/// Coarse detection results `L_1..L_r`, bit `ℓ` set iff patch `ℓ` fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomePattern {
    pub r: usize,
    pub bits: u64,
}

impl OutcomePattern {
    pub fn new(r: usize, bits: u64) -> Self {
        debug_assert!(r < 64 && bits >> r == 0);
        Self { r, bits }
    }

    pub fn hit(&self, l: usize) -> bool {
        self.bits >> l & 1 == 1
    }

    /// All `2^r` patterns in increasing order.
    pub fn all(r: usize) -> impl Iterator<Item = OutcomePattern> {
        (0..1u64 << r).map(move |bits| OutcomePattern { r, bits })
    }

    /// Digits `L_1 L_2 ... L_r`.
    pub fn label(&self) -> String {
        (0..self.r).map(|l| if self.hit(l) { '1' } else { '0' }).collect()
    }
}

impl Serialize for OutcomePattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Round-resolved detection results `s_{kℓ}`, `k = κ..=K`, `ℓ = 1..=r`.
///
/// Bit `(k - κ)·r + ℓ` holds `s_{kℓ}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeSeq {
    pub kappa: i64,
    pub rounds: usize,
    pub r: usize,
    pub bits: u64,
}

impl OutcomeSeq {
    pub fn zeros(kappa: i64, rounds: usize, r: usize) -> Self {
        Self { kappa, rounds, r, bits: 0 }
    }

    pub fn for_decomposition(dec: &SliceDecomposition, bits: u64) -> Self {
        Self { kappa: dec.kappa, rounds: dec.detection_rounds(), r: dec.r(), bits }
    }

    /// Row `s_k` as an `r`-bit word.
    pub fn row(&self, k: i64) -> u64 {
        let shift = (k - self.kappa) as usize * self.r;
        (self.bits >> shift) & ((1u64 << self.r) - 1)
    }

    pub fn get(&self, k: i64, l: usize) -> bool {
        self.row(k) >> l & 1 == 1
    }

    pub fn with_row(mut self, k: i64, row: u64) -> Self {
        let shift = (k - self.kappa) as usize * self.r;
        let mask = ((1u64 << self.r) - 1) << shift;
        self.bits = (self.bits & !mask) | (row << shift);
        self
    }

    /// The coarse pattern this sequence is compatible with.
    pub fn pattern(&self) -> OutcomePattern {
        let bits = (0..self.rounds as i64).fold(0, |acc, i| acc | self.row(self.kappa + i));
        OutcomePattern::new(self.r, bits)
    }

    /// Rows separated by `|`, e.g. `01|10`.
    pub fn label(&self) -> String {
        (0..self.rounds as i64)
            .map(|i| {
                let row = self.row(self.kappa + i);
                (0..self.r).map(|l| if row >> l & 1 == 1 { '1' } else { '0' }).collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

impl Serialize for OutcomeSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Number of joint outcomes `2^{r(K-κ+1)}`, rejecting oversized runs.
pub fn outcome_count(dec: &SliceDecomposition) -> Result<usize> {
    let bits = dec.r() * dec.detection_rounds();
    if bits >= 63 || 1usize << bits > limits::MAX_OUTCOMES {
        return Err(Error::TooManyOutcomes(bits));
    }
    Ok(1usize << bits)
}

/// Every `s` compatible with `L`: patches with `L_ℓ = 0` never fire,
/// patches with `L_ℓ = 1` fire in at least one round.
pub fn compatible_outcomes(pattern: OutcomePattern, kappa: i64, rounds: usize) -> Vec<OutcomeSeq> {
    let r = pattern.r;
    let mut out = vec![OutcomeSeq::zeros(kappa, rounds, r)];
    for l in 0..r {
        if !pattern.hit(l) {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() << rounds);
        for s in &out {
            for column in 1..1u64 << rounds {
                let bits = (0..rounds).fold(s.bits, |acc, i| acc | ((column >> i & 1) << (i * r + l)));
                next.push(OutcomeSeq { bits, ..*s });
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// `M_B(s_k)` on `Γ(Υ_k)`: per patch `∅(B_kℓ)` or `∃(B_kℓ)`.
///
/// It only constrains `B_k`, so it doubles as the cylinder of `N_B(s_k)`.
pub fn event_mb(dec: &SliceDecomposition, k: i64, row: u64) -> Event {
    Event::detectors(dec.lattice(), &mb_clauses(dec, k, row))
}

pub(crate) fn mb_clauses(dec: &SliceDecomposition, k: i64, row: u64) -> Vec<(SiteSet, bool)> {
    dec.round(k).patches.iter().enumerate().map(|(l, p)| (p.b, row >> l & 1 == 1)).collect()
}

/// `M_P(L)` on `Γ(Σ)`.
pub fn event_mp(part: &Partition, pattern: OutcomePattern) -> Event {
    let clauses: Vec<_> =
        part.patches().iter().enumerate().map(|(l, &p)| (p, pattern.hit(l))).collect();
    Event::detectors(part.lattice(), &clauses)
}

/// `M_C(s)`, `M̌_C(s)` and `M̂_C(s)` on `Γ(Σ)`.
#[derive(Clone, Debug)]
pub struct McFamily {
    pub exact: Event,
    pub shrunk: Event,
    pub grown: Event,
}

fn mc_clauses(dec: &SliceDecomposition, s: OutcomeSeq) -> [Vec<(SiteSet, bool)>; 3] {
    let mut exact = Vec::new();
    let mut shrunk = Vec::new();
    let mut grown = Vec::new();
    for k in dec.kappa..=dec.big_k {
        for (l, p) in dec.round(k).patches.iter().enumerate() {
            let hit = s.get(k, l);
            exact.push((p.c, hit));
            shrunk.push((if hit { p.c_check } else { p.c_hat }, hit));
            grown.push((if hit { p.c_hat } else { p.c_check }, hit));
        }
    }
    [exact, shrunk, grown]
}

pub fn event_mc_family(dec: &SliceDecomposition, s: OutcomeSeq) -> McFamily {
    let [exact, shrunk, grown] = mc_clauses(dec, s);
    let l = dec.lattice();
    McFamily {
        exact: Event::detectors(l, &exact),
        shrunk: Event::detectors(l, &shrunk),
        grown: Event::detectors(l, &grown),
    }
}

/// `M_C^ε(L)`, `M̌_C^ε(L)`, `M̂_C^ε(L)`: unions over all `s` compatible with `L`.
pub fn event_mc_limits(dec: &SliceDecomposition, pattern: OutcomePattern) -> McFamily {
    let l = dec.lattice();
    let seqs = compatible_outcomes(pattern, dec.kappa, dec.detection_rounds());
    let clauses: Vec<_> = seqs.iter().map(|&s| mc_clauses(dec, s)).collect();
    let any = |i: usize| Event::from_predicate(l, |q| clauses.iter().any(|c| clause_holds(q, &c[i])));
    McFamily { exact: any(0), shrunk: any(1), grown: any(2) }
}

/// `M̌_P^m(L)` and `M̂_P^m(L)` built from eroded and dilated patches.
pub fn event_mp_limits(growth: &PatchGrowth, lattice: usize, pattern: OutcomePattern) -> (Event, Event) {
    let mut shrunk = Vec::new();
    let mut grown = Vec::new();
    for (l, (&inner, &outer)) in growth.shrunk.iter().zip(&growth.grown).enumerate() {
        let hit = pattern.hit(l);
        shrunk.push((if hit { inner } else { outer }, hit));
        grown.push((if hit { outer } else { inner }, hit));
    }
    (Event::detectors(lattice, &shrunk), Event::detectors(lattice, &grown))
}

/// Recover a distribution on `Γ(Σ)` from the probabilities of `∅(A)`.
///
/// `vacuum_probs[A]` is `P(∅(A))` for every `A ⊆ Σ` (index = bitmask).
/// With `g(C) = P(∅(C^c))`, the mass of `q` is the Möbius inverse
/// `Σ_{C ⊆ q} (-1)^{|q|-|C|} g(C)`.
pub fn reconstruct_distribution(lattice: usize, vacuum_probs: &[f64]) -> Result<Vec<f64>> {
    let n = 1usize << lattice;
    if vacuum_probs.len() != n {
        return Err(Error::Config(format!(
            "expected {n} vacuum probabilities for {lattice} sites, got {}",
            vacuum_probs.len()
        )));
    }
    let full = n - 1;
    let mut p: Vec<f64> = (0..n).map(|c| vacuum_probs[full & !c]).collect();
    for bit in 0..lattice {
        let b = 1usize << bit;
        for q in 0..n {
            if q & b != 0 {
                p[q] -= p[q ^ b];
            }
        }
    }
    if let Some((q, &mass)) = p.iter().enumerate().find(|(_, &m)| m < tol::MASS) {
        return Err(Error::InconsistentDistribution { config: SiteSet(q as u64), mass });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{patch_shrink_grow, slice_decompose, LatticeSurface};
    use proptest::prelude::*;

    #[test]
    fn generator_identities() {
        let l = 5;
        assert_eq!(Event::empty_in(l, SiteSet::EMPTY), Event::full(l));
        for r in SiteSet::full(l).subsets() {
            let e = Event::empty_in(l, r);
            let x = Event::exists_in(l, r);
            assert_eq!(x, e.complement());
            assert!(x.is_disjoint(&e));
            assert_eq!(x.union(&e), Event::full(l));
            assert_eq!(Event::all_in(l, r), Event::empty_in(l, r.complement(l)));
        }
    }

    #[test]
    fn all_events_intersect_exhaustive() {
        let l = 6;
        for a in SiteSet::full(l).subsets() {
            for b in SiteSet::full(l).subsets().step_by(7) {
                let lhs = Event::all_in(l, a).intersection(&Event::all_in(l, b));
                assert_eq!(lhs, Event::all_in(l, a.intersection(b)));
            }
        }
    }

    #[test]
    fn configuration_space_sizes() {
        let l = 7;
        assert_eq!(Event::full(l).len(), 1 << l);
        for n in 0..=l {
            let count = Event::full(l).iter().filter(|q| q.len() == n).count() as u64;
            assert_eq!(count, sector_size(l, n));
        }
    }

    #[test]
    fn factorization_round_trip() {
        let a = SiteSet::from_sites([0, 2, 3]);
        for q in SiteSet::full(6).subsets() {
            let (qa, qb) = split_configuration(q, a);
            assert!(qa.is_subset(a) && qb.is_disjoint(a));
            assert_eq!(join_configuration(qa, qb), q);
        }
    }

    #[test]
    fn compatible_outcome_examples() {
        let zero = compatible_outcomes(OutcomePattern::new(1, 0), 0, 2);
        assert_eq!(zero.iter().map(|s| s.bits).collect::<Vec<_>>(), vec![0]);
        let one = compatible_outcomes(OutcomePattern::new(1, 1), 0, 2);
        assert_eq!(one.iter().map(|s| s.bits).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn compatible_outcome_counts_match_enumeration() {
        for r in 1..=3usize {
            for rounds in 1..=3usize {
                let total = 1u64 << (r * rounds);
                let mut seen = 0;
                for pat in OutcomePattern::all(r) {
                    let seqs = compatible_outcomes(pat, 2, rounds);
                    let expect: usize = (0..r)
                        .map(|l| if pat.hit(l) { (1usize << rounds) - 1 } else { 1 })
                        .product();
                    assert_eq!(seqs.len(), expect);
                    assert!(seqs.iter().all(|s| s.pattern() == pat));
                    seen += seqs.len() as u64;
                }
                assert_eq!(seen, total);
            }
        }
    }

    #[test]
    fn mp_events_partition_configuration_space() {
        let part = Partition::new(6, vec![SiteSet::range(0, 1), SiteSet::range(3, 4)]).unwrap();
        let mut covered = Event::nothing(6);
        for pat in OutcomePattern::all(2) {
            let e = event_mp(&part, pat);
            assert!(e.is_disjoint(&covered));
            covered = covered.union(&e);
        }
        assert_eq!(covered, Event::full(6));
        let zero = event_mp(&part, OutcomePattern::new(2, 0));
        assert_eq!(zero, Event::empty_in(6, part.covered()));
        let whole = Partition::new(4, vec![SiteSet::full(4)]).unwrap();
        let fired = event_mp(&whole, OutcomePattern::new(1, 1));
        assert_eq!(fired.len(), 15);
        assert!(!fired.contains(SiteSet::EMPTY));
    }

    fn staircase_decomposition() -> SliceDecomposition {
        let sigma = LatticeSurface::staircase(6, 1, 4).unwrap();
        let part = Partition::new(6, vec![SiteSet::range(0, 2), SiteSet::range(4, 5)]).unwrap();
        slice_decompose(&sigma, &part, 1).unwrap()
    }

    #[test]
    fn mb_membership_matches_patchwise_predicate() {
        let dec = staircase_decomposition();
        for k in dec.kappa..=dec.big_k {
            for row in 0..4u64 {
                let e = event_mb(&dec, k, row);
                for q in SiteSet::full(6).subsets() {
                    let expect = dec.round(k).patches.iter().enumerate().all(|(l, p)| {
                        let occupied = !q.intersection(p.b).is_empty();
                        occupied == (row >> l & 1 == 1)
                    });
                    assert_eq!(e.contains(q), expect);
                }
            }
        }
    }

    #[test]
    fn mc_families_nest_and_shrunk_sets_are_disjoint() {
        let dec = staircase_decomposition();
        let n = outcome_count(&dec).unwrap() as u64;
        let fams: Vec<_> =
            (0..n).map(|b| event_mc_family(&dec, OutcomeSeq::for_decomposition(&dec, b))).collect();
        for (i, f) in fams.iter().enumerate() {
            assert!(f.shrunk.is_subset(&f.exact));
            assert!(f.exact.is_subset(&f.grown));
            for g in &fams[..i] {
                assert!(f.shrunk.is_disjoint(&g.shrunk));
            }
        }
        let zero = &fams[0];
        let hat_union = (dec.kappa..=dec.big_k)
            .flat_map(|k| dec.round(k).patches.iter().map(|p| p.c_hat))
            .fold(SiteSet::EMPTY, SiteSet::union);
        let check_union = (dec.kappa..=dec.big_k)
            .flat_map(|k| dec.round(k).patches.iter().map(|p| p.c_check))
            .fold(SiteSet::EMPTY, SiteSet::union);
        assert_eq!(zero.shrunk, Event::empty_in(6, hat_union));
        assert_eq!(zero.grown, Event::empty_in(6, check_union));
    }

    #[test]
    fn limit_sets_nest_inside_patch_sets() {
        let dec = staircase_decomposition();
        for m in 1..=2 {
            let growth = patch_shrink_grow(&dec.partition, m);
            let dec = slice_decompose(&dec.sigma, &dec.partition, m).unwrap();
            for pat in OutcomePattern::all(2) {
                let lim = event_mc_limits(&dec, pat);
                assert!(lim.shrunk.is_subset(&lim.exact) && lim.exact.is_subset(&lim.grown));
                let (mp_shrunk, mp_grown) = event_mp_limits(&growth, 6, pat);
                let guarded = mp_shrunk.intersection(&Event::empty_in(6, growth.boundary));
                assert!(guarded.is_subset(&lim.shrunk));
                assert!(lim.grown.is_subset(&mp_grown));
            }
        }
    }

    #[test]
    fn reconstruct_uniform_two_sites() {
        let p = reconstruct_distribution(2, &[1.0, 0.5, 0.5, 0.25]).unwrap();
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruct_rejects_inconsistent_input() {
        let err = reconstruct_distribution(1, &[1.0, 1.5]).unwrap_err();
        assert!(matches!(err, Error::InconsistentDistribution { .. }));
    }

    fn naive_reconstruction(lattice: usize, vac: &[f64]) -> Vec<f64> {
        let full = (1u64 << lattice) - 1;
        (0..1u64 << lattice)
            .map(|q| {
                SiteSet(q)
                    .subsets()
                    .map(|c| {
                        let sign = if (q.count_ones() - c.0.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * vac[(full & !c.0) as usize]
                    })
                    .sum()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn reconstruction_inverts_vacuum_probabilities(
            lattice in 1usize..=6,
            weights in proptest::collection::vec(0.0f64..1.0, 64),
        ) {
            let n = 1usize << lattice;
            let total: f64 = weights[..n].iter().sum::<f64>() + 1e-9;
            let dist: Vec<f64> = weights[..n].iter().map(|w| w / total).collect();
            let vac: Vec<f64> = (0..n)
                .map(|a| (0..n).filter(|q| q & a == 0).map(|q| dist[q]).sum())
                .collect();
            let fast = reconstruct_distribution(lattice, &vac).unwrap();
            let naive = naive_reconstruction(lattice, &vac);
            for q in 0..n {
                prop_assert!((fast[q] - dist[q]).abs() < 1e-12);
                prop_assert!((naive[q] - dist[q]).abs() < 1e-12);
            }
        }

        #[test]
        fn point_mass_reconstructs(lattice in 1usize..=6, seed in 0u64..64) {
            let n = 1u64 << lattice;
            let q0 = seed % n;
            let vac: Vec<f64> = (0..n).map(|a| if a & q0 == 0 { 1.0 } else { 0.0 }).collect();
            let p = reconstruct_distribution(lattice, &vac).unwrap();
            for q in 0..n {
                prop_assert_eq!(p[q as usize], if q == q0 { 1.0 } else { 0.0 });
            }
        }
    }
}
