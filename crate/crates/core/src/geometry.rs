//! Discrete causal geometry of a 1+1 dimensional lattice.
//!
//! Sites live in `[0, L)` with open boundaries. A spacetime point is a
//! `(site, layer)` pair and the lattice light cone has unit speed:
//! `p ≼ q` iff `|q.site - p.site| <= q.layer - p.layer`. Cones are simply
//! truncated at the lattice edges.
//!
//! Everything in here is pure set arithmetic over [`SiteSet`] bitmasks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest lattice the bitmask representation supports.
pub const MAX_SITES: usize = 63;

/// A point of the lattice spacetime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub site: usize,
    pub layer: i64,
}

impl SpacetimePoint {
    pub fn new(site: usize, layer: i64) -> Self {
        Self { site, layer }
    }
}

/// Causal order: `q` lies in the (non-strict) causal future of `p`.
pub fn causal_leq(p: SpacetimePoint, q: SpacetimePoint) -> bool {
    let dx = (q.site as i64 - p.site as i64).abs();
    dx <= q.layer - p.layer
}

/// `p` and `q` are causally related in either direction.
fn causally_related(p: SpacetimePoint, q: SpacetimePoint) -> bool {
    causal_leq(p, q) || causal_leq(q, p)
}

/// A set of lattice sites, bit `x` standing for site `x`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteSet(pub u64);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub fn full(lattice: usize) -> Self {
        debug_assert!(lattice <= MAX_SITES);
        SiteSet((1u64 << lattice) - 1)
    }

    pub fn single(site: usize) -> Self {
        SiteSet(1u64 << site)
    }

    /// Sites `lo..=hi`.
    pub fn range(lo: usize, hi: usize) -> Self {
        if lo > hi {
            return Self::EMPTY;
        }
        SiteSet(((1u64 << (hi + 1)) - 1) & !((1u64 << lo) - 1))
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        SiteSet(sites.into_iter().fold(0, |acc, s| acc | (1u64 << s)))
    }

    pub fn contains(self, site: usize) -> bool {
        site < 64 && self.0 >> site & 1 == 1
    }

    pub fn insert(&mut self, site: usize) {
        self.0 |= 1u64 << site;
    }

    pub fn union(self, other: SiteSet) -> Self {
        SiteSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SiteSet) -> Self {
        SiteSet(self.0 & other.0)
    }

    pub fn difference(self, other: SiteSet) -> Self {
        SiteSet(self.0 & !other.0)
    }

    /// Complement inside `[0, lattice)`.
    pub fn complement(self, lattice: usize) -> Self {
        SiteSet::full(lattice).difference(self)
    }

    pub fn is_subset(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: SiteSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Sites in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let s = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(s)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of this set, in increasing order of their bitmask.
    pub fn subsets(self) -> impl Iterator<Item = SiteSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(SiteSet(cur))
        })
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Parity rule of the brickwork: a two-site gate acts on `(x, x+1)` at
/// layer `t` iff `x ≡ t (mod 2)`.
pub fn pair_gate_at(left_site: usize, layer: i64) -> bool {
    (left_site as i64 - layer).rem_euclid(2) == 0
}

/// A lattice Cauchy surface: one integer layer per site, with neighbouring
/// layers differing by at most one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct LatticeSurface {
    layers: Vec<i64>,
}

impl TryFrom<Vec<i64>> for LatticeSurface {
    type Error = Error;
    fn try_from(layers: Vec<i64>) -> Result<Self> {
        LatticeSurface::new(layers)
    }
}

impl From<LatticeSurface> for Vec<i64> {
    fn from(s: LatticeSurface) -> Self {
        s.layers
    }
}

impl LatticeSurface {
    pub fn new(layers: Vec<i64>) -> Result<Self> {
        if layers.is_empty() || layers.len() > MAX_SITES {
            return Err(Error::LatticeSize(layers.len()));
        }
        for (x, w) in layers.windows(2).enumerate() {
            let jump = (w[1] - w[0]).abs();
            if jump > 1 {
                return Err(Error::NotSpacelike { site: x, jump });
            }
        }
        Ok(Self { layers })
    }

    pub fn flat(lattice: usize, layer: i64) -> Self {
        Self::new(vec![layer; lattice]).expect("flat surface")
    }

    /// Rises one layer per site: `layers[x] = clamp(x + 1, lo, hi)`.
    ///
    /// The offset puts every step between brickwork pairs.
    pub fn staircase(lattice: usize, lo: i64, hi: i64) -> Result<Self> {
        Self::new((0..lattice as i64).map(|x| (x + 1).clamp(lo, hi.max(lo))).collect())
    }

    /// A valley of the given depth with a two-site flat bottom at
    /// `apex, apex + 1`, rising with unit slope on both sides.
    ///
    /// It is cut-compatible iff `depth + apex` is even.
    pub fn vee(lattice: usize, apex: usize, depth: i64) -> Result<Self> {
        let a = apex as i64;
        Self::new(
            (0..lattice as i64)
                .map(|x| depth + (a - x).max(x - a - 1).max(0))
                .collect(),
        )
    }

    pub fn layers(&self) -> &[i64] {
        &self.layers
    }

    pub fn lattice(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, site: usize) -> i64 {
        self.layers[site]
    }

    pub fn point(&self, site: usize) -> SpacetimePoint {
        SpacetimePoint::new(site, self.layers[site])
    }

    pub fn all_sites(&self) -> SiteSet {
        SiteSet::full(self.lattice())
    }

    pub fn min_layer(&self) -> i64 {
        *self.layers.iter().min().expect("nonempty")
    }

    pub fn max_layer(&self) -> i64 {
        *self.layers.iter().max().expect("nonempty")
    }

    pub fn is_flat(&self) -> bool {
        self.min_layer() == self.max_layer()
    }

    /// Pointwise `clamp(layer, lo, hi)`; stays spacelike and cut-compatible.
    pub fn clamp(&self, lo: i64, hi: i64) -> Self {
        Self { layers: self.layers.iter().map(|&t| t.clamp(lo, hi)).collect() }
    }

    /// Replace the layers of `sites` by those of `other`.
    pub fn splice(&self, other: &LatticeSurface, sites: SiteSet) -> Result<Self> {
        let layers = (0..self.lattice())
            .map(|x| if sites.contains(x) { other.layer(x) } else { self.layer(x) })
            .collect();
        Self::new(layers)
    }

    /// Sites where both surfaces pass through the same spacetime point.
    pub fn shared_sites(&self, other: &LatticeSurface) -> SiteSet {
        SiteSet::from_sites((0..self.lattice()).filter(|&x| self.layer(x) == other.layer(x)))
    }

    /// First step that cuts through a brickwork pair gate, if any.
    ///
    /// A step between `x` and `x + 1` whose lower side sits at layer `t`
    /// is only allowed when no pair gate acts on `(x, x+1)` at layer `t`.
    pub fn cut_violation(&self) -> Option<usize> {
        self.layers.windows(2).enumerate().find_map(|(x, w)| {
            (w[0] != w[1] && pair_gate_at(x, w[0].min(w[1]))).then_some(x)
        })
    }

    pub fn check_cut_compatible(&self) -> Result<()> {
        match self.cut_violation() {
            Some(site) => Err(Error::NotCutCompatible { site }),
            None => Ok(()),
        }
    }

    /// Point `p` lies in the causal future of the surface.
    pub fn in_future(&self, p: SpacetimePoint) -> bool {
        (0..self.lattice()).any(|y| causal_leq(self.point(y), p))
    }

    /// Point `p` lies in the causal past of the surface.
    pub fn in_past(&self, p: SpacetimePoint) -> bool {
        (0..self.lattice()).any(|y| causal_leq(p, self.point(y)))
    }
}

/// A subset of a surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub surface: LatticeSurface,
    pub sites: SiteSet,
}

impl Region {
    pub fn new(surface: LatticeSurface, sites: SiteSet) -> Self {
        debug_assert!(sites.is_subset(surface.all_sites()));
        Self { surface, sites }
    }

    pub fn complement(&self) -> Region {
        Region::new(self.surface.clone(), self.sites.complement(self.surface.lattice()))
    }
}

/// Sites of `target` causally related to some site of `sites` on `surface`.
pub fn grown_sites(surface: &LatticeSurface, sites: SiteSet, target: &LatticeSurface) -> SiteSet {
    SiteSet::from_sites((0..target.lattice()).filter(|&x| {
        let q = target.point(x);
        sites.iter().any(|a| causally_related(surface.point(a), q))
    }))
}

/// Sites of `target` whose whole domain of influence on `surface` lies in `sites`.
pub fn shrunk_sites(surface: &LatticeSurface, sites: SiteSet, target: &LatticeSurface) -> SiteSet {
    SiteSet::from_sites((0..target.lattice()).filter(|&x| {
        grown_sites(target, SiteSet::single(x), surface).is_subset(sites)
    }))
}

/// The grown set of `a` in `target`.
pub fn grown_set(a: &Region, target: &LatticeSurface) -> Region {
    Region::new(target.clone(), grown_sites(&a.surface, a.sites, target))
}

/// The shrunk set of `a` in `target`.
pub fn shrunk_set(a: &Region, target: &LatticeSurface) -> Region {
    Region::new(target.clone(), shrunk_sites(&a.surface, a.sites, target))
}

/// Detector patches `P_1..P_r`; the remainder `P_{r+1}` is implicit.
///
/// On the counting measure every boundary is null, so admissibility
/// reduces to nonempty, pairwise disjoint patches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    lattice: usize,
    patches: Vec<SiteSet>,
}

impl Partition {
    pub fn new(lattice: usize, patches: Vec<SiteSet>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Config("partition needs at least one patch".into()));
        }
        let all = SiteSet::full(lattice);
        for (i, p) in patches.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::EmptyPatch(i));
            }
            if !p.is_subset(all) {
                let site = p.difference(all).iter().next().unwrap_or(lattice);
                return Err(Error::SiteOutOfBounds { site, lattice });
            }
            for (j, q) in patches.iter().enumerate().take(i) {
                if !p.is_disjoint(*q) {
                    return Err(Error::PartitionOverlap(j, i));
                }
            }
        }
        Ok(Self { lattice, patches })
    }

    pub fn lattice(&self) -> usize {
        self.lattice
    }

    pub fn patches(&self) -> &[SiteSet] {
        &self.patches
    }

    pub fn patch(&self, l: usize) -> SiteSet {
        self.patches[l]
    }

    pub fn r(&self) -> usize {
        self.patches.len()
    }

    pub fn covered(&self) -> SiteSet {
        self.patches.iter().fold(SiteSet::EMPTY, |a, &p| a.union(p))
    }

    /// `P_{r+1}`.
    pub fn remainder(&self) -> SiteSet {
        self.covered().complement(self.lattice)
    }
}

/// Per-patch pieces of one detection round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatchSlice {
    /// Detector strip above the patch, on `Υ_k`.
    pub b: SiteSet,
    /// Part of the patch crossed during the round, on `Σ`.
    pub c: SiteSet,
    /// Shrunk piece: `Sr(B_kℓ, Σ) ∩ C_k`.
    pub c_check: SiteSet,
    /// Grown piece: `past(B_kℓ) ∩ C_k`.
    pub c_hat: SiteSet,
    /// `Gr(B_kℓ, Σ) \ C_k`.
    pub d: SiteSet,
}

/// Geometry of one detection round `k` (flat surface `Υ_k` at layer `k·m`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Round {
    pub k: i64,
    pub layer: i64,
    /// `Υ_k` minus the future of `Σ`.
    pub a: SiteSet,
    /// `Gr(C_k, Υ_k)`.
    pub b: SiteSet,
    /// Part of `Σ` between `Υ_{k-1}` (exclusive) and `Υ_k` (inclusive).
    pub c: SiteSet,
    pub r: SiteSet,
    pub patches: Vec<PatchSlice>,
}

impl Round {
    pub fn upsilon(&self, lattice: usize) -> LatticeSurface {
        LatticeSurface::flat(lattice, self.layer)
    }

    /// `B_k ∪ R_k`, the sites that get reset to the vacuum after detection.
    pub fn detector_side(&self) -> SiteSet {
        self.b.union(self.r)
    }
}

/// Slicing of `Σ` by the flat surfaces `Υ_k`, `k = first..=K`.
///
/// `first` is `κ - 1`, or `-1` when `κ = 0`, so the rounds cover every
/// `C_k` with `k >= 0` as well as the first-surface round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceDecomposition {
    pub sigma: LatticeSurface,
    pub partition: Partition,
    pub m: i64,
    pub kappa: i64,
    #[serde(rename = "K")]
    pub big_k: i64,
    pub rounds: Vec<Round>,
    /// `Σ \ past(Υ_K)`.
    pub s: SiteSet,
}

impl SliceDecomposition {
    pub fn lattice(&self) -> usize {
        self.sigma.lattice()
    }

    pub fn first_round(&self) -> i64 {
        self.rounds[0].k
    }

    pub fn round(&self, k: i64) -> &Round {
        &self.rounds[(k - self.first_round()) as usize]
    }

    /// Number of detection rounds `K - κ + 1`.
    pub fn detection_rounds(&self) -> usize {
        (self.big_k - self.kappa + 1) as usize
    }

    pub fn r(&self) -> usize {
        self.partition.r()
    }

    /// `Ξ_{a,b}`: follows `Υ_a` above `Σ`, `Υ_b` below it, `Σ` in between.
    pub fn xi(&self, from_k: i64, to_k: i64) -> LatticeSurface {
        self.sigma.clamp(from_k * self.m, to_k * self.m)
    }

    /// `C = ∪_{κ≤k≤K} C_k`.
    pub fn detected_sites(&self) -> SiteSet {
        (self.kappa..=self.big_k).fold(SiteSet::EMPTY, |acc, k| acc.union(self.round(k).c))
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Decompose `Σ` into detection rounds of `m` micro-layers each.
pub fn slice_decompose(sigma: &LatticeSurface, part: &Partition, m: i64) -> Result<SliceDecomposition> {
    if m <= 0 {
        return Err(Error::InvalidM(m));
    }
    let lattice = sigma.lattice();
    if part.lattice() != lattice {
        return Err(Error::LatticeMismatch(part.lattice(), lattice));
    }
    if let Some(x) = (0..lattice).find(|&x| sigma.layer(x) < 0) {
        return Err(Error::BelowInitialSurface(x));
    }
    let covered = part.covered();
    let rounds_of: Vec<i64> = covered.iter().map(|x| ceil_div(sigma.layer(x), m)).collect();
    let kappa = *rounds_of.iter().min().expect("partition nonempty");
    let big_k = *rounds_of.iter().max().expect("partition nonempty");
    let first = if kappa == 0 { -1 } else { 0 };

    let all = sigma.all_sites();
    let rounds = (first..=big_k)
        .map(|k| {
            let layer = k * m;
            let upsilon = LatticeSurface::flat(lattice, layer);
            let below_prev = LatticeSurface::flat(lattice, layer - m);
            let a = SiteSet::from_sites(
                (0..lattice).filter(|&x| !sigma.in_future(upsilon.point(x))),
            );
            let c = SiteSet::from_sites((0..lattice).filter(|&x| {
                let p = sigma.point(x);
                upsilon.in_past(p) && !below_prev.in_past(p)
            }));
            let b = grown_sites(sigma, c, &upsilon);
            let r = all.difference(a.union(b));
            let patches = part
                .patches()
                .iter()
                .map(|&p| {
                    let bl = b.intersection(p);
                    let cl = c.intersection(p);
                    let grown = grown_sites(&upsilon, bl, sigma);
                    let c_hat = SiteSet::from_sites(c.iter().filter(|&x| {
                        bl.iter().any(|y| causal_leq(sigma.point(x), upsilon.point(y)))
                    }));
                    PatchSlice {
                        b: bl,
                        c: cl,
                        c_check: shrunk_sites(&upsilon, bl, sigma).intersection(c),
                        c_hat,
                        d: grown.difference(c),
                    }
                })
                .collect();
            Round { k, layer, a, b, c, r, patches }
        })
        .collect();
    let top = LatticeSurface::flat(lattice, big_k * m);
    let s = SiteSet::from_sites((0..lattice).filter(|&x| !top.in_past(sigma.point(x))));
    Ok(SliceDecomposition {
        sigma: sigma.clone(),
        partition: part.clone(),
        m,
        kappa,
        big_k,
        rounds,
        s,
    })
}

/// Eroded and dilated patches for a slicing parameter `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatchGrowth {
    pub m: i64,
    pub shrunk: Vec<SiteSet>,
    pub grown: Vec<SiteSet>,
    /// `∪_ℓ (grown_ℓ \ shrunk_ℓ)`.
    pub boundary: SiteSet,
}

/// Erode and dilate every patch by a ball of radius `m` (in sites).
pub fn patch_shrink_grow(part: &Partition, m: i64) -> PatchGrowth {
    let lattice = part.lattice();
    let ball = |x: usize| {
        let lo = (x as i64 - m).max(0) as usize;
        let hi = ((x as i64 + m) as usize).min(lattice - 1);
        SiteSet::range(lo, hi)
    };
    let shrunk: Vec<SiteSet> = part
        .patches()
        .iter()
        .map(|&p| SiteSet::from_sites(p.iter().filter(|&x| ball(x).is_subset(p))))
        .collect();
    let grown: Vec<SiteSet> = part
        .patches()
        .iter()
        .map(|&p| p.iter().fold(SiteSet::EMPTY, |acc, x| acc.union(ball(x))))
        .collect();
    let boundary = shrunk
        .iter()
        .zip(&grown)
        .fold(SiteSet::EMPTY, |acc, (s, g)| acc.union(g.difference(*s)));
    PatchGrowth { m, shrunk, grown, boundary }
}

/// Every lattice-spacelike surface on `lattice` sites with layers in `lo..=hi`.
pub fn all_surfaces(lattice: usize, lo: i64, hi: i64) -> Vec<LatticeSurface> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(lattice);
    fn rec(lattice: usize, lo: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<LatticeSurface>) {
        if cur.len() == lattice {
            out.push(LatticeSurface { layers: cur.clone() });
            return;
        }
        let (a, b) = match cur.last() {
            Some(&t) => ((t - 1).max(lo), (t + 1).min(hi)),
            None => (lo, hi),
        };
        for t in a..=b {
            cur.push(t);
            rec(lattice, lo, hi, cur, out);
            cur.pop();
        }
    }
    rec(lattice, lo, hi, &mut cur, &mut out);
    out
}
