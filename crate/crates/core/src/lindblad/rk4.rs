//! Fixed-step classical Runge-Kutta integration of `d rho/dt = L[rho]`.

use super::{phonon_spec, LindbladSpec};
use crate::error::{Error, Result};
use crate::g4v::ModelConstants;
use crate::qstate::{hermitian_eigen, CMatrix, DensityOperator};

/// Largest `rate * dt` accepted; RK4's stability region reaches about 2.8
/// along both the real and imaginary axes.
pub const RK4_STABILITY_LIMIT: f64 = 2.5;

const RK4_STEP_WARN: f64 = 0.01;

/// Bound on the generator's spectral radius: the width of the Hamiltonian
/// spectrum plus the summed dissipative weights.
fn stiffness(spec: &LindbladSpec) -> f64 {
    let (evals, _) = hermitian_eigen(spec.hamiltonian());
    let width = evals.last().copied().unwrap_or(0.0) - evals.first().copied().unwrap_or(0.0);
    let dissipation: f64 = spec.jumps().iter().map(|(op, rate)| rate * (op.adjoint() * op).norm()).sum();
    width + dissipation
}

/// Integrates from 0 to `t` in `ceil(t/dt)` equal steps of size `<= dt`.
pub fn rk4_evolve(rho: &DensityOperator, spec: &LindbladSpec, t: f64, dt: f64) -> Result<DensityOperator> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: rho.dim(),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("evolution time must be finite and >= 0, got {t}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be finite and > 0, got {dt}")));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let product = stiffness(spec) * h;
    if product > RK4_STABILITY_LIMIT {
        return Err(Error::StepTooLarge {
            dt: h,
            product,
            limit: RK4_STABILITY_LIMIT,
        });
    }
    if product > RK4_STEP_WARN {
        log::warn!("rk4 step {h:e} s gives rate*dt = {product:.3e}; accuracy may suffer");
    }
    let mut m: CMatrix = rho.matrix().clone();
    for _ in 0..steps {
        let k1 = spec.rhs(&m);
        let k2 = spec.rhs(&(&m + k1.scale(h / 2.0)));
        let k3 = spec.rhs(&(&m + k2.scale(h / 2.0)));
        let k4 = spec.rhs(&(&m + k3.scale(h)));
        m += (k1 + (k2 + k3).scale(2.0) + k4).scale(h / 6.0);
    }
    DensityOperator::from_raw(rho.shape().clone(), m)
}

/// [`rk4_evolve`] on the single-vacancy phonon generator.
pub fn rk4_evolve_phonon(rho: &DensityOperator, consts: &ModelConstants, t: f64, dt: f64) -> Result<DensityOperator> {
    rk4_evolve(rho, &phonon_spec(consts), t, dt)
}
