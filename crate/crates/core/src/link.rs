//! Midpoint entanglement swap between two spin-photon sources.
//!
//! Each node emits a photonic qubit entangled with its spin; the photons
//! cross `L/2` of fiber each, interfere pairwise on balanced beamsplitters at
//! the midpoint and are counted. A heralding pattern projects the spins onto
//! an entangled state, which keeps decohering while the photons are in
//! flight and while the heralding signal travels back.
//!
//! Conventions: every photonic mode is truncated at one photon; the
//! beamsplitter maps `a+ -> (c+ + d+)/sqrt2` and `b+ -> (c+ - d+)/sqrt2`;
//! heralded states are rotated into the `(|1,2> + |2,1>)/sqrt2` branch by
//! applying `diag(1, -1, 1, -1)` to spin B whenever an odd number of
//! `d` detectors fire. That correction commutes with the phonon channel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::g4v::ModelConstants;
use crate::lindblad::{
    apply_kraus_on_factor, build_generator, evolve_each_factor, multi_spin_propagator, KrausSet, Propagator,
    SpectralDecomposition,
};
use crate::metrics::hashing_bound;
use crate::qstate::{c, CMatrix, CVector, DensityOperator, PureState, SystemShape};

pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_C_MEDIUM: f64 = 2.0e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// Vacuum / one photon in a single mode.
    SingleRail,
    /// One photon shared between two modes.
    DualRail,
}

impl Encoding {
    pub fn name(&self) -> &'static str {
        match self {
            Encoding::SingleRail => "single_rail",
            Encoding::DualRail => "dual_rail",
        }
    }

    fn n_modes(&self) -> usize {
        match self {
            Encoding::SingleRail => 1,
            Encoding::DualRail => 2,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_rail" => Ok(Encoding::SingleRail),
            "dual_rail" => Ok(Encoding::DualRail),
            other => Err(Error::Domain(format!(
                "unknown encoding {other:?} (expected single_rail or dual_rail)"
            ))),
        }
    }
}

/// Detector response at the midpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DetectorModel {
    /// Resolves photon number; a herald requires exactly one photon per
    /// heralded rail group.
    #[default]
    NumberResolving,
    /// Click / no-click only; multi-photon events can herald.
    Threshold,
}

impl DetectorModel {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorModel::NumberResolving => "number_resolving",
            DetectorModel::Threshold => "threshold",
        }
    }
}

impl FromStr for DetectorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "number_resolving" => Ok(DetectorModel::NumberResolving),
            "threshold" => Ok(DetectorModel::Threshold),
            other => Err(Error::Domain(format!(
                "unknown detector model {other:?} (expected number_resolving or threshold)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkConfig {
    /// End-to-end node separation (km).
    pub length_km: f64,
    pub alpha_db_per_km: f64,
    /// Group velocity in the fiber (m/s).
    pub c_medium: f64,
    pub encoding: Encoding,
    pub dark_count_prob: f64,
    pub visibility: f64,
    pub detector: DetectorModel,
}

impl LinkConfig {
    pub fn new(length_km: f64, encoding: Encoding) -> Self {
        Self {
            length_km,
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
            c_medium: DEFAULT_C_MEDIUM,
            encoding,
            dark_count_prob: 0.0,
            visibility: 1.0,
            detector: DetectorModel::NumberResolving,
        }
    }

    pub fn with_length(mut self, length_km: f64) -> Self {
        self.length_km = length_km;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0) || !self.length_km.is_finite() {
            return Err(Error::Domain(format!(
                "length must be finite and >= 0 km, got {}",
                self.length_km
            )));
        }
        if !(self.alpha_db_per_km >= 0.0) || !self.alpha_db_per_km.is_finite() {
            return Err(Error::Domain(format!(
                "attenuation must be >= 0 dB/km, got {}",
                self.alpha_db_per_km
            )));
        }
        if !(self.c_medium > 0.0) || !self.c_medium.is_finite() {
            return Err(Error::Domain(format!(
                "fiber light speed must be > 0 m/s, got {}",
                self.c_medium
            )));
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(Error::Domain(format!(
                "dark count probability must lie in [0, 1), got {}",
                self.dark_count_prob
            )));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Domain(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            )));
        }
        Ok(())
    }

    fn check_supported(&self) -> Result<()> {
        self.validate()?;
        if self.dark_count_prob != 0.0 {
            return Err(Error::Unsupported(format!(
                "dark_count_prob = {} (only 0 is modeled)",
                self.dark_count_prob
            )));
        }
        if self.visibility != 1.0 {
            return Err(Error::Unsupported(format!(
                "visibility = {} (only 1 is modeled)",
                self.visibility
            )));
        }
        Ok(())
    }

    pub fn timeline(&self) -> Timeline {
        let t_swap = self.length_km * 1e3 / (2.0 * self.c_medium);
        Timeline {
            t_emit: 0.0,
            t_swap,
            t_herald: 2.0 * t_swap,
        }
    }
}

/// Event times in seconds, measured from photon emission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timeline {
    pub t_emit: f64,
    /// Photons reach the midpoint.
    pub t_swap: f64,
    /// The heralding result reaches the nodes.
    pub t_herald: f64,
}

#[derive(Clone, Debug)]
pub struct HeraldedLinkState {
    /// Two-spin state on shape `[4, 4]`.
    pub rho: DensityOperator,
    pub success_prob: f64,
    pub timeline: Timeline,
    pub evaluated_at: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum When {
    AtSwap,
    AtHerald,
}

/// Per-arm transmissivity `10^(-alpha (L/2) / 10)`.
pub fn arm_transmissivity(cfg: &LinkConfig) -> f64 {
    10f64.powf(-cfg.alpha_db_per_km * (cfg.length_km / 2.0) / 10.0)
}

/// Source state on spin(4) ⊗ rails (one photon at most per rail).
pub fn spin_photon_source(encoding: Encoding) -> PureState {
    let (shape, a, b) = match encoding {
        // |1>|0> + |2>|1>
        Encoding::SingleRail => (SystemShape::new(vec![4, 2]).unwrap(), vec![0, 0], vec![1, 1]),
        // |1>|0,1> + |2>|1,0>
        Encoding::DualRail => (SystemShape::new(vec![4, 2, 2]).unwrap(), vec![0, 0, 1], vec![1, 1, 0]),
    };
    let mut v = CVector::zeros(shape.total_dim());
    v[shape.join_index(&a)] = c(1.0, 0.0);
    v[shape.join_index(&b)] = c(1.0, 0.0);
    PureState::normalized(shape, v).expect("nonzero source amplitudes")
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `<n_c, n_d| U |n_a, n_b>` for the balanced beamsplitter above.
pub fn beamsplitter_amplitude(n_c: usize, n_d: usize, n_a: usize, n_b: usize) -> f64 {
    if n_c + n_d != n_a + n_b {
        return 0.0;
    }
    let mut sum = 0.0;
    // choose j of the a photons and k of the b photons to exit through c
    for j in 0..=n_a {
        if j > n_c {
            break;
        }
        let k = n_c - j;
        if k > n_b {
            continue;
        }
        let sign = if (n_b - k) % 2 == 1 { -1.0 } else { 1.0 };
        sum += binomial(n_a, j) * binomial(n_b, k) * sign;
    }
    let norm = (factorial(n_c) * factorial(n_d) / (factorial(n_a) * factorial(n_b))).sqrt();
    sum * norm / 2f64.powf((n_a + n_b) as f64 / 2.0)
}

/// Two sources side by side, factors `[spin A, rails A.., spin B, rails B..]`.
fn joint_source(encoding: Encoding) -> DensityOperator {
    let src = spin_photon_source(encoding);
    src.tensor(&src).to_density()
}

fn loss_channel(eta: f64) -> KrausSet {
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(eta.sqrt(), 0.0)]);
    let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c((1.0 - eta).sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    KrausSet::from_ops(0.0, vec![k0, k1]).expect("2x2 loss operators")
}

fn photon_factors(encoding: Encoding) -> Vec<usize> {
    let m = encoding.n_modes();
    (1..=m).chain(m + 2..=2 * m + 1).collect()
}

fn spin_factors(encoding: Encoding) -> [usize; 2] {
    [0, encoding.n_modes() + 1]
}

/// Photon counts `(n_c, n_d)` for each interfering rail pair.
type Pattern = Vec<(usize, usize)>;

fn heralds(pattern: &Pattern, encoding: Encoding, detector: DetectorModel) -> bool {
    let clicks = |n: usize| match detector {
        DetectorModel::NumberResolving => n,
        DetectorModel::Threshold => usize::from(n > 0),
    };
    let per_pair: Vec<usize> = pattern.iter().map(|&(nc, nd)| clicks(nc) + clicks(nd)).collect();
    match encoding {
        Encoding::SingleRail => per_pair.iter().sum::<usize>() == 1,
        Encoding::DualRail => per_pair.iter().all(|&k| k == 1),
    }
}

fn all_patterns(n_pairs: usize) -> Vec<Pattern> {
    let single: Vec<(usize, usize)> = (0..=2).flat_map(|nc| (0..=2 - nc).map(move |nd| (nc, nd))).collect();
    let mut out: Vec<Pattern> = vec![Vec::new()];
    for _ in 0..n_pairs {
        out = out
            .into_iter()
            .flat_map(|p| {
                single.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Conditions the full spin⊗photon state on every heralding pattern and
/// returns the frame-corrected two-spin state (unnormalized) summed over
/// patterns.
fn herald(full: &DensityOperator, encoding: Encoding, detector: DetectorModel) -> CMatrix {
    let m = encoding.n_modes();
    let p = 1usize << m;
    let idx = |sa: usize, xa: usize, sb: usize, xb: usize| ((sa * p + xa) * 4 + sb) * p + xb;
    let bit = |x: usize, i: usize| (x >> (m - 1 - i)) & 1;
    let rho = full.matrix();
    let frame = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]));
    let flip = CMatrix::identity(4, 4).kronecker(&frame);
    let mut total = CMatrix::zeros(16, 16);
    for pattern in all_patterns(m) {
        if !heralds(&pattern, encoding, detector) {
            continue;
        }
        // amplitude <pattern| U |xa, xb> on the photonic input basis
        let weight = |xa: usize, xb: usize| -> f64 {
            pattern
                .iter()
                .enumerate()
                .map(|(i, &(nc, nd))| beamsplitter_amplitude(nc, nd, bit(xa, i), bit(xb, i)))
                .product()
        };
        let w: Vec<(usize, usize, f64)> = (0..p)
            .flat_map(|xa| (0..p).map(move |xb| (xa, xb)))
            .map(|(xa, xb)| (xa, xb, weight(xa, xb)))
            .filter(|&(_, _, v)| v != 0.0)
            .collect();
        let mut sigma = CMatrix::zeros(16, 16);
        for sa in 0..4 {
            for sb in 0..4 {
                for ta in 0..4 {
                    for tb in 0..4 {
                        let mut acc = c(0.0, 0.0);
                        for &(xa, xb, wx) in &w {
                            for &(ya, yb, wy) in &w {
                                acc += rho[(idx(sa, xa, sb, xb), idx(ta, ya, tb, yb))] * (wx * wy);
                            }
                        }
                        sigma[(sa * 4 + sb, ta * 4 + tb)] = acc;
                    }
                }
            }
        }
        let d_clicks = pattern.iter().filter(|&&(_, nd)| nd > 0).count();
        if d_clicks % 2 == 1 {
            sigma = &flip * sigma * &flip;
        }
        total += sigma;
    }
    total
}

fn lossy_joint_state(cfg: &LinkConfig) -> Result<DensityOperator> {
    let loss = loss_channel(arm_transmissivity(cfg));
    let mut rho = joint_source(cfg.encoding);
    for f in photon_factors(cfg.encoding) {
        rho = apply_kraus_on_factor(&loss, f, &rho)?;
    }
    Ok(rho)
}

fn normalize(sigma: CMatrix, cfg: &LinkConfig, evaluated_at: f64) -> Result<HeraldedLinkState> {
    let success_prob = sigma.trace().re;
    if !(success_prob > 0.0) {
        return Err(Error::Numerical(format!(
            "no heralding events at L = {} km (success probability {success_prob:e})",
            cfg.length_km
        )));
    }
    let rho = DensityOperator::from_raw(SystemShape::repeated(4, 2), sigma.unscale(success_prob))?;
    Ok(HeraldedLinkState {
        rho,
        success_prob,
        timeline: cfg.timeline(),
        evaluated_at,
    })
}

/// Heralded two-spin state at the moment of the swap, before decoherence.
pub fn heralded_swap(cfg: &LinkConfig) -> Result<HeraldedLinkState> {
    cfg.check_supported()?;
    let full = lossy_joint_state(cfg)?;
    let sigma = herald(&full, cfg.encoding, cfg.detector);
    normalize(sigma, cfg, cfg.timeline().t_swap)
}

fn single_spin_propagator(consts: &ModelConstants, t: f64) -> Result<Propagator> {
    Ok(SpectralDecomposition::new(&build_generator(consts))?.propagator(t))
}

/// Heralded state with the spins decohered for `t_swap` (photon flight) and,
/// for [`When::AtHerald`], a further `t_swap` while the result travels back.
pub fn link_state_at(cfg: &LinkConfig, consts: &ModelConstants, when: When) -> Result<HeraldedLinkState> {
    let swapped = heralded_swap(cfg)?;
    let timeline = swapped.timeline;
    let e = single_spin_propagator(consts, timeline.t_swap)?;
    let mut rho = evolve_each_factor(&e, &[0, 1], &swapped.rho)?;
    let mut evaluated_at = timeline.t_swap;
    if when == When::AtHerald {
        rho = multi_spin_propagator(&e, 2)?.apply(&rho)?;
        evaluated_at = timeline.t_herald;
    }
    Ok(HeraldedLinkState {
        rho,
        success_prob: swapped.success_prob,
        timeline,
        evaluated_at,
    })
}

/// The same state as `link_state_at(.., AtSwap)`, computed in the opposite
/// order: the spins decohere on the full spin⊗photon state, then the
/// photons are measured.
pub fn decohere_then_herald(cfg: &LinkConfig, consts: &ModelConstants) -> Result<HeraldedLinkState> {
    cfg.check_supported()?;
    let t_swap = cfg.timeline().t_swap;
    let e = single_spin_propagator(consts, t_swap)?;
    let full = evolve_each_factor(&e, &spin_factors(cfg.encoding), &lossy_joint_state(cfg)?)?;
    let sigma = herald(&full, cfg.encoding, cfg.detector);
    normalize(sigma, cfg, t_swap)
}

#[derive(Clone, Debug)]
pub struct LinkSweepRow {
    pub length_km: f64,
    pub i_at_swap: f64,
    pub i_at_herald: f64,
    pub success_prob: f64,
    pub at_swap: HeraldedLinkState,
    pub at_herald: HeraldedLinkState,
}

/// Evaluates the link at every length of `lengths_km`, in grid order.
pub fn sweep_length(template: &LinkConfig, consts: &ModelConstants, lengths_km: &[f64]) -> Result<Vec<LinkSweepRow>> {
    lengths_km
        .par_iter()
        .map(|&length_km| {
            let cfg = template.with_length(length_km);
            let at_swap = link_state_at(&cfg, consts, When::AtSwap)?;
            let at_herald = link_state_at(&cfg, consts, When::AtHerald)?;
            Ok(LinkSweepRow {
                length_km,
                i_at_swap: hashing_bound(&at_swap.rho, 4, 4)?,
                i_at_herald: hashing_bound(&at_herald.rho, 4, 4)?,
                success_prob: at_swap.success_prob,
                at_swap,
                at_herald,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{fidelity, partial_trace};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bell() -> DensityOperator {
        let shape = SystemShape::repeated(4, 2);
        let mut v = CVector::zeros(16);
        v[shape.join_index(&[0, 1])] = c(1.0, 0.0);
        v[shape.join_index(&[1, 0])] = c(1.0, 0.0);
        PureState::normalized(shape, v).unwrap().to_density()
    }

    #[test]
    fn transmissivity_in_decibels() {
        let cfg = LinkConfig::new(0.0, Encoding::DualRail);
        assert_eq!(arm_transmissivity(&cfg), 1.0);
        assert_relative_eq!(
            arm_transmissivity(&cfg.with_length(50.0)),
            10f64.powf(-0.5),
            max_relative = 1e-14
        );
        let (a, b) = (
            arm_transmissivity(&cfg.with_length(12.0)),
            arm_transmissivity(&cfg.with_length(30.0)),
        );
        assert_relative_eq!(arm_transmissivity(&cfg.with_length(42.0)), a * b, max_relative = 1e-14);
    }

    #[test]
    fn timeline_doubles() {
        let t = LinkConfig::new(40.0, Encoding::SingleRail).timeline();
        assert_relative_eq!(t.t_swap, 1e-4, max_relative = 1e-14);
        assert_eq!(t.t_herald, 2.0 * t.t_swap);
    }

    #[test]
    fn sources() {
        for (enc, n_mean) in [(Encoding::SingleRail, 0.5), (Encoding::DualRail, 1.0)] {
            let rho = spin_photon_source(enc).to_density();
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
            let spin = partial_trace(&rho, &[0]).unwrap();
            let want = DensityOperator::diagonal(SystemShape::single(4), &[0.5, 0.5, 0.0, 0.0]).unwrap();
            assert!((spin.matrix() - want.matrix()).norm() < 1e-14);
            let photons: f64 = (1..rho.shape().n_factors())
                .map(|f| partial_trace(&rho, &[f]).unwrap().element(1, 1).re)
                .sum();
            assert_abs_diff_eq!(photons, n_mean, epsilon = 1e-14);
        }
    }

    #[test]
    fn beamsplitter_is_unitary_on_two_photon_sector() {
        let inputs = [(2, 0), (1, 1), (0, 2)];
        for &(a1, b1) in &inputs {
            for &(a2, b2) in &inputs {
                let overlap: f64 = inputs
                    .iter()
                    .map(|&(nc, nd)| beamsplitter_amplitude(nc, nd, a1, b1) * beamsplitter_amplitude(nc, nd, a2, b2))
                    .sum();
                let want = if (a1, b1) == (a2, b2) { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(overlap, want, epsilon = 1e-14);
            }
        }
        // Hong-Ou-Mandel: no coincidences
        assert_eq!(beamsplitter_amplitude(1, 1, 1, 1), 0.0);
    }

    #[test]
    fn dual_rail_is_bell_at_any_loss() {
        for length in [0.0, 25.0, 80.0] {
            let cfg = LinkConfig::new(length, Encoding::DualRail);
            let out = heralded_swap(&cfg).unwrap();
            assert!(fidelity(&out.rho, &bell()).unwrap() > 1.0 - 1e-12);
            let eta = arm_transmissivity(&cfg);
            assert_relative_eq!(out.success_prob, eta * eta / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_rail_mixture() {
        let cfg = LinkConfig::new(30.0, Encoding::SingleRail);
        let eta = arm_transmissivity(&cfg);
        let out = heralded_swap(&cfg).unwrap();
        assert_relative_eq!(out.success_prob, eta * (2.0 - eta) / 2.0, max_relative = 1e-12);
        let want = (bell().matrix().clone()
            + CMatrix::from_fn(16, 16, |i, j| c(if i == 5 && j == 5 { 1.0 - eta } else { 0.0 }, 0.0)))
        .unscale(2.0 - eta);
        assert!((out.rho.matrix() - want).norm() < 1e-12);
        assert!(out.rho.element(5, 5).re > 0.0);
        let ideal = heralded_swap(&cfg.with_length(0.0)).unwrap();
        assert!(fidelity(&ideal.rho, &bell()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn threshold_detectors_admit_bunched_events() {
        let mut cfg = LinkConfig::new(0.0, Encoding::SingleRail);
        cfg.detector = DetectorModel::Threshold;
        let out = heralded_swap(&cfg).unwrap();
        assert!(out.rho.element(5, 5).re > 0.1);
        assert_relative_eq!(out.success_prob, 0.75, max_relative = 1e-12);
    }

    #[test]
    fn rejects_nonideal_detectors() {
        let mut cfg = LinkConfig::new(10.0, Encoding::DualRail);
        cfg.visibility = 0.9;
        assert!(matches!(heralded_swap(&cfg), Err(Error::Unsupported(_))));
        cfg.visibility = 1.0;
        cfg.dark_count_prob = 1e-3;
        assert!(matches!(heralded_swap(&cfg), Err(Error::Unsupported(_))));
        cfg.dark_count_prob = 0.0;
        cfg.length_km = -1.0;
        assert!(matches!(heralded_swap(&cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn encoding_names_roundtrip() {
        for e in [Encoding::SingleRail, Encoding::DualRail] {
            assert_eq!(e.name().parse::<Encoding>().unwrap(), e);
        }
        assert!("triple_rail".parse::<Encoding>().is_err());
        assert_eq!("threshold".parse::<DetectorModel>().unwrap(), DetectorModel::Threshold);
    }
}
