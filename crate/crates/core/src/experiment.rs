//! Experiment configuration files, random instances and the check suites.
//!
//! A configuration is a single TOML document:
//!
//! ```toml
//! lattice = 5
//! seed = 7
//! m = [4, 2, 1]
//!
//! [model]
//! theta = 0.4
//!
//! [initial]
//! kind = "single-particle"
//! site = 2
//! spin = "up"
//!
//! [surface]
//! kind = "staircase"
//! lo = 1
//! hi = 4
//!
//! [partition]
//! patches = [[0, 1], [3, 4]]
//! ```

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::axioms::{self, Check, AXIOM_TOL};
use crate::dynamics::{Dynamics, ModelParams};
use crate::events::{compatible_outcomes, event_mc_family, reconstruct_distribution, OutcomePattern};
use crate::fock::{LocalSpace, StateVec, X_DOWN, X_EMPTY, X_UP};
use crate::geometry::{all_surfaces, slice_decompose, LatticeSurface, Partition, SiteSet, MAX_SITES};
use crate::linalg;
use crate::protocol::{
    curved_born, event_probability, patch_bounds, projector_inequality_gap, tight_bounds, vacuum_probabilities,
    DetectionRun, RunOptions,
};
use crate::{limits, Error, Result};

/// Tolerance of the protocol identities.
pub const THEOREM_TOL: f64 = 1e-10;
/// Tolerance of the curved Born pinch at `m = 1`.
pub const PINCH_TOL: f64 = 1e-9;
/// Tolerance of the distribution reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spin {
    #[default]
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Species {
    #[default]
    X,
    Y,
}

/// One particle of a product initial state. `spin` only applies to the
/// x-species; y-particles are spinless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<Spin>,
    #[serde(default)]
    pub species: Species,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Vacuum,
    SingleParticle {
        site: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spin: Option<Spin>,
        #[serde(default)]
        species: Species,
    },
    Product {
        particles: Vec<Particle>,
    },
    /// Haar-random pure state on the whole lattice, drawn from the
    /// experiment seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Layers { layers: Vec<i64> },
    Flat { layer: i64 },
    Staircase { lo: i64, hi: i64 },
    Vee { apex: usize, depth: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    /// Inclusive site ranges `[lo, hi]`.
    pub patches: Vec<[usize; 2]>,
}

/// A single slicing parameter or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSpec {
    One(i64),
    Many(Vec<i64>),
}

impl Default for MSpec {
    fn default() -> Self {
        MSpec::One(1)
    }
}

impl MSpec {
    pub fn values(&self) -> Vec<i64> {
        match self {
            MSpec::One(m) => vec![*m],
            MSpec::Many(ms) => ms.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Exploratory: skip the vacuum replacement of the detector strip.
    pub skip_vacuum_reset: bool,
    /// Random states per region in the finite-speed check.
    pub fs_trials: usize,
    /// Highest layer of the surfaces enumerated by the axiom suite.
    pub axiom_max_layer: i64,
    /// Largest number of branches followed by the auxiliary-state check.
    pub trail_branches: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { skip_vacuum_reset: false, fs_trials: 2, axiom_max_layer: 2, trail_branches: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub initial: InitialSpec,
    pub surface: SurfaceSpec,
    pub partition: PartitionSpec,
    #[serde(default)]
    pub m: MSpec,
    #[serde(default)]
    pub options: Options,
}

fn field(name: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Config(format!("{name}: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check every invariant; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.lattice == 0 || self.lattice > MAX_SITES {
            return Err(field("lattice")(Error::LatticeSize(self.lattice)));
        }
        self.model.local_space().check_dim(self.lattice, limits::MAX_STATE_DIM, "state vector").map_err(field("lattice"))?;
        let sigma = self.sigma()?;
        self.partition()?;
        for m in self.ms() {
            if m < 1 {
                return Err(field("m")(Error::InvalidM(m)));
            }
            slice_decompose(&sigma, &self.partition()?, m).map_err(field("m"))?;
        }
        if self.ms().is_empty() {
            return Err(Error::Config("m: at least one value is required".into()));
        }
        self.initial_state()?;
        Ok(())
    }

    pub fn ms(&self) -> Vec<i64> {
        self.m.values()
    }

    pub fn sigma(&self) -> Result<LatticeSurface> {
        let l = self.lattice;
        let surface = match &self.surface {
            SurfaceSpec::Layers { layers } => {
                if layers.len() != l {
                    return Err(field("surface.layers")(Error::LatticeMismatch(layers.len(), l)));
                }
                LatticeSurface::new(layers.clone())
            }
            SurfaceSpec::Flat { layer } => Ok(LatticeSurface::flat(l, *layer)),
            SurfaceSpec::Staircase { lo, hi } => LatticeSurface::staircase(l, *lo, *hi),
            SurfaceSpec::Vee { apex, depth } => {
                if *apex >= l {
                    return Err(field("surface.apex")(Error::SiteOutOfBounds { site: *apex, lattice: l }));
                }
                LatticeSurface::vee(l, *apex, *depth)
            }
        }
        .map_err(field("surface"))?;
        if let Some(site) = (0..l).find(|&x| surface.layer(x) < 0) {
            return Err(field("surface")(Error::BelowInitialSurface(site)));
        }
        surface.check_cut_compatible().map_err(field("surface"))?;
        Ok(surface)
    }

    pub fn partition(&self) -> Result<Partition> {
        let l = self.lattice;
        let mut patches = Vec::new();
        for (i, &[lo, hi]) in self.partition.patches.iter().enumerate() {
            let name = format!("partition.patches[{i}]");
            if lo > hi {
                return Err(Error::Config(format!("{name}: range [{lo}, {hi}] is reversed")));
            }
            if hi >= l {
                return Err(field(&name)(Error::SiteOutOfBounds { site: hi, lattice: l }));
            }
            patches.push(SiteSet::range(lo, hi));
        }
        if patches.is_empty() {
            return Err(Error::Config("partition.patches: at least one patch is required".into()));
        }
        Partition::new(l, patches).map_err(field("partition"))
    }

    pub fn initial_state(&self) -> Result<StateVec> {
        let local = self.model.local_space();
        let sites = SiteSet::full(self.lattice);
        match &self.initial {
            InitialSpec::Vacuum => StateVec::vacuum(local, sites),
            InitialSpec::SingleParticle { site, spin, species } => {
                let p = Particle { site: *site, spin: *spin, species: *species };
                product_state(local, self.lattice, &[p]).map_err(field("initial"))
            }
            InitialSpec::Product { particles } => product_state(local, self.lattice, particles).map_err(field("initial")),
            InitialSpec::Random => {
                let dim = local.check_dim(self.lattice, limits::MAX_STATE_DIM, "state vector")?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                StateVec::from_amps(local, sites, linalg::random_unit_vector(&mut rng, dim))
            }
        }
    }

    /// Resolve into the objects the protocol works with.
    pub fn instance(&self) -> Result<Instance> {
        self.validate()?;
        Ok(Instance {
            dynamics: Dynamics::new(self.model, self.lattice)?,
            psi0: self.initial_state()?,
            sigma: self.sigma()?,
            partition: self.partition()?,
            ms: self.ms(),
            options: self.options.clone(),
            seed: self.seed,
        })
    }
}

fn product_state(local: LocalSpace, lattice: usize, particles: &[Particle]) -> Result<StateVec> {
    let mut x = vec![X_EMPTY; lattice];
    let mut y = vec![0; lattice];
    for p in particles {
        if p.site >= lattice {
            return Err(Error::SiteOutOfBounds { site: p.site, lattice });
        }
        let taken = match p.species {
            Species::X => std::mem::replace(&mut x[p.site], if p.spin == Some(Spin::Down) { X_DOWN } else { X_UP }) != X_EMPTY,
            Species::Y => {
                if !local.with_y {
                    return Err(Error::Config("y-particles need an interacting model".into()));
                }
                if p.spin.is_some() {
                    return Err(Error::Config(format!("y-particle at site {} is spinless", p.site)));
                }
                std::mem::replace(&mut y[p.site], 1) != 0
            }
        };
        if taken {
            return Err(Error::Config(format!("site {} already holds a {:?}-particle", p.site, p.species)));
        }
    }
    let occupations: Vec<(usize, usize)> =
        (0..lattice).map(|s| (s, local.index(x[s], y[s]))).filter(|&(_, v)| v != 0).collect();
    StateVec::basis(local, SiteSet::full(lattice), &occupations)
}

/// A resolved experiment.
#[derive(Debug)]
pub struct Instance {
    pub dynamics: Dynamics,
    pub psi0: StateVec,
    pub sigma: LatticeSurface,
    pub partition: Partition,
    pub ms: Vec<i64>,
    pub options: Options,
    pub seed: u64,
}

impl Instance {
    pub fn run(&self, m: i64) -> Result<DetectionRun<'_>> {
        let dec = slice_decompose(&self.sigma, &self.partition, m)?;
        let options = RunOptions { skip_vacuum_reset: self.options.skip_vacuum_reset };
        Ok(DetectionRun::new(&self.dynamics, self.psi0.clone(), dec)?.with_options(options))
    }

    /// Configuration distribution of `ψ_Σ`.
    pub fn distribution(&self) -> Result<Vec<f64>> {
        let flat0 = LatticeSurface::flat(self.sigma.lattice(), 0);
        let psi = self.dynamics.evolve_state(&self.psi0, &flat0, &self.sigma)?;
        Ok(psi.configuration_distribution(self.sigma.lattice()))
    }
}

/// Uniformly random cut-compatible surface with layers in `lo..=hi`.
pub fn random_surface<R: Rng + ?Sized>(rng: &mut R, lattice: usize, lo: i64, hi: i64) -> LatticeSurface {
    let surfaces: Vec<_> =
        all_surfaces(lattice, lo, hi).into_iter().filter(|s| s.cut_violation().is_none()).collect();
    surfaces.choose(rng).expect("flat surfaces are always compatible").clone()
}

/// Random partition into `1..=max_patches` disjoint site intervals.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, lattice: usize, max_patches: usize) -> Partition {
    let r = rng.gen_range(1..=max_patches.min(lattice).max(1));
    let mut cuts: Vec<usize> = (0..=lattice).collect();
    cuts.shuffle(rng);
    let mut cuts = cuts[..=r].to_vec();
    cuts.sort_unstable();
    // each consecutive cut pair bounds a patch; drop a random tail so
    // patches do not always cover the lattice
    let patches = cuts
        .windows(2)
        .map(|w| {
            let hi = rng.gen_range(w[0]..w[1]);
            SiteSet::range(w[0], hi)
        })
        .collect();
    Partition::new(lattice, patches).expect("intervals are disjoint")
}

/// A random instance: Haar-random `ψ_0`, surface with layers in
/// `1..=max_layer`, and a random partition.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    model: ModelParams,
    lattice: usize,
    max_layer: i64,
    ms: Vec<i64>,
) -> Result<Instance> {
    let local = model.local_space();
    let dim = local.check_dim(lattice, limits::MAX_STATE_DIM, "state vector")?;
    let psi0 = StateVec::from_amps(local, SiteSet::full(lattice), linalg::random_unit_vector(rng, dim))?;
    Ok(Instance {
        dynamics: Dynamics::new(model, lattice)?,
        psi0,
        sigma: random_surface(rng, lattice, 1, max_layer),
        partition: random_partition(rng, lattice, 3),
        ms,
        options: Options::default(),
        seed: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    Theorem,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axioms" => Ok(Suite::Axioms),
            "theorem" => Ok(Suite::Theorem),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!("unknown suite {other:?} (expected axioms, theorem or all)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub lattice: usize,
    pub seed: u64,
    pub passed: bool,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(suite: Suite, instance: &Instance, checks: Vec<Check>) -> Self {
        let failed = checks.iter().filter(|c| !c.passed).count();
        Self { suite, lattice: instance.sigma.lattice(), seed: instance.seed, passed: failed == 0, failed, checks }
    }

    /// Names of the failed checks, deduplicated, in first-seen order.
    pub fn failed_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for c in self.checks.iter().filter(|c| !c.passed) {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
        names
    }
}

pub fn run_suite(instance: &Instance, suite: Suite) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance.seed);
    let mut checks = Vec::new();
    if matches!(suite, Suite::Axioms | Suite::All) {
        checks.extend(axiom_checks(&instance.dynamics, instance.options.axiom_max_layer, instance.options.fs_trials, &mut rng)?);
    }
    if matches!(suite, Suite::Theorem | Suite::All) {
        checks.extend(theorem_checks(instance)?);
    }
    Ok(SuiteReport::new(suite, instance, checks))
}

/// Dense operators up to this dimension get the eigenvalue-based checks.
const DENSE_CHECK_DIM: usize = 216;
/// The projector form of FS diagonalizes `2^L` operators per surface pair,
/// so it is kept to smaller spaces.
const FS_OPERATOR_DIM: usize = 81;

/// IL, global and local NCFV, and FS over every ordered pair of
/// cut-compatible surfaces with layers in `0..=max_layer`; plus `W`
/// isometry and embedding for single-site regions.
pub fn axiom_checks<R: Rng + ?Sized>(dynamics: &Dynamics, max_layer: i64, fs_trials: usize, rng: &mut R) -> Result<Vec<Check>> {
    let l = dynamics.lattice();
    let dim = dynamics.local().check_dim(l, limits::MAX_DENSITY_DIM, "dense evolution operator")?;
    let surfaces: Vec<_> =
        all_surfaces(l, 0, max_layer).into_iter().filter(|s| s.cut_violation().is_none()).collect();
    let all = dynamics.all_sites();
    let mut checks = Vec::new();
    for from in &surfaces {
        for to in &surfaces {
            if from == to {
                continue;
            }
            let (il, v) = axioms::verify_il(dynamics, from, to)?;
            checks.push(il);
            checks.push(axioms::verify_local_ncfv(&v, from, to));
            checks.push(axioms::verify_ncfv(dynamics, from, to)?);
            let mut worst_fs: Option<Check> = None;
            for a in all.subsets() {
                let c = axioms::verify_fs(dynamics, from, a, to, fs_trials, rng)?;
                if worst_fs.as_ref().is_none_or(|w| c.worse_than(w)) {
                    worst_fs = Some(c);
                }
            }
            checks.extend(worst_fs);
            if dim <= FS_OPERATOR_DIM {
                checks.push(axioms::verify_fs_operator(dynamics, from, to)?);
            }
            for site in 0..l {
                checks.extend(axioms::verify_reduced_evolution(dynamics, from, SiteSet::single(site), to, rng)?);
            }
        }
    }
    Ok(checks)
}

fn theorem_checks(instance: &Instance) -> Result<Vec<Check>> {
    let dist = instance.distribution()?;
    let mut checks = vec![reconstruction_check(&dist)?];
    let born = curved_born(&dist, &instance.partition);
    checks.push(Check::at_most("born-normalization", (born.iter().sum::<f64>() - 1.0).abs(), THEOREM_TOL, ""));
    let mut ms = instance.ms.clone();
    ms.sort_unstable_by(|a, b| b.cmp(a));
    ms.dedup();
    let mut previous: Option<(i64, Vec<crate::protocol::Bracket>, Vec<crate::protocol::Bracket>)> = None;
    for &m in &ms {
        let run = instance.run(m)?;
        checks.extend(run_checks(&run, &dist, instance.options.trail_branches)?);
        let tight = tight_bounds(&dist, &run.dec);
        let patch = patch_bounds(&dist, &instance.partition, m);
        if let Some((pm, pt, pp)) = &previous {
            let detail = format!("m={pm} -> m={m}");
            let tight_growth = tight.iter().zip(pt).map(|(a, b)| a.width() - b.width()).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::at_most("bracket-width-monotone", tight_growth, THEOREM_TOL, detail.clone()));
            let patch_lower = patch.iter().zip(pp).map(|(a, b)| b.lower - a.lower).fold(f64::NEG_INFINITY, f64::max);
            let patch_upper = patch.iter().zip(pp).map(|(a, b)| a.upper - b.upper).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::at_most("patch-bracket-monotone", patch_lower.max(patch_upper), THEOREM_TOL, detail));
        }
        previous = Some((m, tight, patch));
    }
    Ok(checks)
}

/// Inclusion–exclusion over the vacuum-event probabilities reproduces the
/// configuration distribution.
pub fn reconstruction_check(dist: &[f64]) -> Result<Check> {
    let lattice = dist.len().trailing_zeros() as usize;
    let rebuilt = reconstruct_distribution(lattice, &vacuum_probabilities(dist))?;
    let residual = rebuilt.iter().zip(dist).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Check::at_most("reconstruction", residual, RECONSTRUCTION_TOL, format!("L={lattice}")))
}

/// Every identity that holds for one slicing parameter.
///
/// The auxiliary-state check follows the `trail_branches` most likely
/// branches.
pub fn run_checks(run: &DetectionRun, dist: &[f64], trail_branches: usize) -> Result<Vec<Check>> {
    let dec = &run.dec;
    let m = dec.m;
    let tag = |extra: &str| format!("m={m}{extra}");
    let mut checks = Vec::new();

    let seq = run.run_sequential()?;
    let closed = run.closed_expression()?;
    checks.push(Check::at_most("sequential=closed", seq.table.max_difference(&closed), THEOREM_TOL, tag("")));
    checks.push(Check::at_most("normalization-s", (seq.table.total() - 1.0).abs(), THEOREM_TOL, tag("")));
    let coarse = seq.table.coarse_grain();
    checks.push(Check::at_most("normalization-L", (coarse.iter().sum::<f64>() - 1.0).abs(), THEOREM_TOL, tag("")));
    let two_path = coarse.iter().zip(&seq.by_pattern).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("coarse-grain-two-path", two_path, THEOREM_TOL, tag("")));

    let tight = tight_bounds(dist, dec);
    let slack = tight.iter().zip(&coarse).map(|(b, p)| b.slack(*p)).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least_zero("bounds", slack, THEOREM_TOL, tag("")));

    // lower bound as a disjoint union over compatible outcomes
    let mut disjoint = 0.0f64;
    for pat in OutcomePattern::all(dec.r()) {
        let sum: f64 = compatible_outcomes(pat, dec.kappa, dec.detection_rounds())
            .into_iter()
            .map(|s| event_probability(dist, &event_mc_family(dec, s).shrunk))
            .sum();
        disjoint = disjoint.max((sum - tight[pat.bits as usize].lower).abs());
    }
    checks.push(Check::at_most("lower-bound-disjoint-union", disjoint, THEOREM_TOL, tag("")));

    let born = curved_born(dist, &dec.partition);
    let exact = m == 1 || (dec.sigma.is_flat() && dec.sigma.layer(0) % m == 0);
    if exact {
        let gap = coarse.iter().zip(&born).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tol = if dec.sigma.is_flat() { THEOREM_TOL } else { PINCH_TOL };
        checks.push(Check::at_most("curved-born-pinch", gap, tol, tag("")));
    }

    for k in dec.kappa..=dec.big_k {
        let w = run.w_cb(k)?;
        checks.push(Check::at_most("W-isometry", linalg::isometry_residual(&w), AXIOM_TOL, tag(&format!(" k={k}"))));
    }
    for k in dec.kappa - 1..dec.big_k {
        checks.push(axioms::verify_w_composition(run.dynamics, dec, k)?);
    }

    if run.dynamics.local().region_dim(dec.lattice()).is_some_and(|d| d <= DENSE_CHECK_DIM) {
        let mut gap = f64::INFINITY;
        for k in dec.kappa..=dec.big_k {
            for l in 0..dec.r() {
                gap = gap.min(projector_inequality_gap(run.dynamics, dec, k, l)?);
            }
        }
        checks.push(Check::at_least_zero("projector-inequalities", gap, THEOREM_TOL, tag("")));
    }

    if !run.options.skip_vacuum_reset {
        let mut worst = 0.0f64;
        let mut branches: Vec<_> = seq.table.support();
        branches.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.bits.cmp(&b.0.bits)));
        for (s, _) in branches.iter().take(trail_branches) {
            for step in run.auxiliary_trail(*s)? {
                worst = worst.max(step.worst());
            }
        }
        checks.push(Check::at_most("auxiliary-properties", worst, THEOREM_TOL, tag("")));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
lattice = 4
seed = 3
m = [2, 1]

[model]
theta = 0.4

[initial]
kind = "single-particle"
site = 1

[surface]
kind = "staircase"
lo = 1
hi = 3

[partition]
patches = [[0, 1], [3, 3]]
"#;

    #[test]
    fn demo_config_loads() {
        let cfg = ExperimentConfig::from_toml_str(DEMO).unwrap();
        assert_eq!(cfg.ms(), vec![2, 1]);
        assert_eq!(cfg.sigma().unwrap().layers(), &[1, 2, 3, 3]);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn minimal_vacuum_config_loads() {
        let cfg = ExperimentConfig::from_toml_str(
            "lattice = 3\n[surface]\nkind = \"flat\"\nlayer = 2\n[partition]\npatches = [[0, 2]]\n",
        )
        .unwrap();
        assert_eq!(cfg.initial, InitialSpec::Vacuum);
        assert_eq!(cfg.ms(), vec![1]);
    }

    #[test]
    fn steep_surface_is_rejected() {
        let text = DEMO.replace("kind = \"staircase\"\nlo = 1\nhi = 3", "kind = \"layers\"\nlayers = [1, 3, 3, 3]");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("not lattice-spacelike"), "{err}");
        assert!(err.starts_with("invalid configuration: surface"), "{err}");
    }

    #[test]
    fn overlapping_patches_are_rejected() {
        let text = DEMO.replace("[[0, 1], [3, 3]]", "[[0, 2], [2, 3]]");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("partition not disjoint"), "{err}");
    }

    #[test]
    fn other_invariants_name_their_field() {
        let cases = [
            (DEMO.replace("[[0, 1], [3, 3]]", "[[0, 1], [3, 4]]"), "partition.patches[1]"),
            (DEMO.replace("[[0, 1], [3, 3]]", "[[1, 0]]"), "reversed"),
            (DEMO.replace("m = [2, 1]", "m = [2, 0]"), "m:"),
            (DEMO.replace("site = 1", "site = 9"), "initial"),
            (DEMO.replace("kind = \"staircase\"\nlo = 1\nhi = 3", "kind = \"layers\"\nlayers = [1, 1, 2, 2]"), "cut-compatible"),
            (DEMO.replace("lattice = 4", "lattice = 40"), "lattice"),
            (DEMO.replace("theta = 0.4", "theta = 0.4\nbogus = 1"), "bogus"),
        ];
        for (text, needle) in cases {
            match ExperimentConfig::from_toml_str(&text) {
                Err(e) => assert!(e.to_string().contains(needle), "{needle}: {e}"),
                Ok(_) => panic!("{needle} accepted"),
            }
        }
    }

    #[test]
    fn product_states_place_particles() {
        let local = LocalSpace::INTERACTING;
        let psi = product_state(
            local,
            3,
            &[
                Particle { site: 0, spin: Some(Spin::Down), species: Species::X },
                Particle { site: 0, spin: None, species: Species::Y },
                Particle { site: 2, spin: None, species: Species::X },
            ],
        )
        .unwrap();
        let idx = local.index(X_DOWN, 1) + local.index(X_UP, 0) * 36;
        assert_eq!(psi.amps[idx].re, 1.0);
        assert!(product_state(local, 3, &[Particle { site: 1, spin: Some(Spin::Up), species: Species::Y }]).is_err());
        assert!(product_state(LocalSpace::FREE, 3, &[Particle { site: 1, spin: None, species: Species::Y }]).is_err());
    }

    #[test]
    fn random_partitions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let l = rng.gen_range(1..=6);
            let part = random_partition(&mut rng, l, 3);
            assert!(part.r() >= 1 && part.r() <= 3);
            let s = random_surface(&mut rng, l, 1, 4);
            assert!(s.check_cut_compatible().is_ok());
        }
    }

    #[test]
    fn theorem_suite_passes_on_demo() {
        let cfg = ExperimentConfig::from_toml_str(DEMO).unwrap();
        let report = run_suite(&cfg.instance().unwrap(), Suite::Theorem).unwrap();
        assert!(report.passed, "{:?}", report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn nonlocal_control_fails_il_only() {
        let mut cfg = ExperimentConfig::from_toml_str(DEMO).unwrap();
        cfg.lattice = 3;
        cfg.partition.patches = vec![[0, 2]];
        cfg.surface = SurfaceSpec::Flat { layer: 2 };
        cfg.model.control = crate::dynamics::Control::NonlocalPhase;
        let report = run_suite(&cfg.instance().unwrap(), Suite::Axioms).unwrap();
        assert_eq!(report.failed_names(), vec!["IL"]);
    }
}
