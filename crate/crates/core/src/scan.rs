//! Temperature sweeps: evolve a state under the phonon channel, sample an
//! observable and fit its decay constant at every grid point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, DecayCurve, FitResult, FIT_FLOOR};
use crate::g4v::ModelConstants;
use crate::lindblad::{build_generator, evolve_each_factor, SpectralDecomposition};
use crate::metrics::{coherence_element, hashing_bound};
use crate::qstate::DensityOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    /// `|<bra|rho|ket>|` for 1-based labels on the full space.
    Coherence { bra: usize, ket: usize },
    /// Hashing bound across the first spin versus the rest.
    HashingBound,
}

impl Observable {
    pub fn evaluate(&self, rho: &DensityOperator) -> Result<f64> {
        match *self {
            Observable::Coherence { bra, ket } => Ok(coherence_element(rho, bra, ket)?.norm()),
            Observable::HashingBound => {
                let first = rho.shape().dims()[0];
                hashing_bound(rho, first, rho.dim() / first)
            }
        }
    }
}

/// Length of the sampled window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// Seconds.
    Fixed(f64),
    /// Multiples of the single-spin coherence time `1/(gamma nbar)`, so that
    /// temperatures with very different rates are sampled comparably.
    CoherenceTimes(f64),
}

impl Horizon {
    pub fn resolve(&self, consts: &ModelConstants) -> Result<f64> {
        let t = match *self {
            Horizon::Fixed(t) => t,
            Horizon::CoherenceTimes(k) => k / (consts.gamma * consts.nbar),
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "sampling horizon must be finite and > 0, got {t:e} s (gamma nbar = {:e})",
                consts.gamma * consts.nbar
            )));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub constants: ModelConstants,
    pub states: Vec<DensityOperator>,
    pub curve: DecayCurve,
    pub fit: FitResult,
}

/// Evolves `initial` (a register of four-level spins) on a uniform grid of
/// `n_samples` times in `[0, horizon]` at each grid point and fits the
/// observable's decay; results are in grid order.
pub fn decoherence_scan(
    grid: &[ModelConstants],
    initial: &DensityOperator,
    observable: Observable,
    horizon: Horizon,
    n_samples: usize,
    amplitude_fixed: Option<f64>,
) -> Result<Vec<ScanPoint>> {
    if n_samples < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {n_samples}")));
    }
    let dims = initial.shape().dims();
    if dims.iter().any(|&d| d != 4) {
        return Err(Error::InvalidShape(format!("expected four-level spins, got {dims:?}")));
    }
    let spins: Vec<usize> = (0..dims.len()).collect();
    grid.par_iter()
        .map(|consts| {
            let t_max = horizon.resolve(consts)?;
            let decomposition = SpectralDecomposition::new(&build_generator(consts))?;
            let times: Vec<f64> = (0..n_samples).map(|k| t_max * k as f64 / (n_samples - 1) as f64).collect();
            let states = times
                .iter()
                .map(|&t| evolve_each_factor(&decomposition.propagator(t), &spins, initial))
                .collect::<Result<Vec<_>>>()?;
            let values = states
                .iter()
                .map(|rho| observable.evaluate(rho))
                .collect::<Result<Vec<_>>>()?;
            let curve = DecayCurve::new(times, values)?;
            let floor = FIT_FLOOR * curve.values()[0];
            let fit = fit_exponential(&curve.truncate_above(floor), amplitude_fixed)?;
            Ok(ScanPoint {
                constants: *consts,
                states,
                curve,
                fit,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{c, CVector, PureState, SystemShape};
    use approx::assert_relative_eq;

    fn plus() -> DensityOperator {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        PureState::normalized(SystemShape::single(4), v).unwrap().to_density()
    }

    #[test]
    fn coherence_time_follows_rate() {
        let grid: Vec<_> = [0.25, 0.5]
            .iter()
            .map(|&t| ModelConstants::from_gamma(50e9, t, 1e7).unwrap())
            .collect();
        let out = decoherence_scan(
            &grid,
            &plus(),
            Observable::Coherence { bra: 1, ket: 2 },
            Horizon::CoherenceTimes(5.0),
            60,
            Some(0.5),
        )
        .unwrap();
        assert!(out[0].fit.tau > out[1].fit.tau);
        for p in &out {
            assert_relative_eq!(p.fit.tau * p.constants.gamma * p.constants.nbar, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = [ModelConstants::from_gamma(50e9, 0.25, 1e7).unwrap()];
        let obs = Observable::Coherence { bra: 1, ket: 2 };
        assert!(decoherence_scan(&grid, &plus(), obs, Horizon::Fixed(1.0), 2, None).is_err());
        assert!(decoherence_scan(&grid, &plus(), obs, Horizon::Fixed(-1.0), 5, None).is_err());
        let qubit = DensityOperator::maximally_mixed(SystemShape::single(2));
        assert!(decoherence_scan(&grid, &qubit, obs, Horizon::Fixed(1.0), 5, None).is_err());
    }
}
