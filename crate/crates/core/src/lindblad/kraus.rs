//! First-order operator-sum stepping `rho -> sum_k M_k rho M_k^dagger`.

use super::{phonon_spec, Propagator, PropagatorMethod};
use crate::error::{Error, Result};
use crate::g4v::ModelConstants;
use crate::qstate::{c, CMatrix, DensityOperator};

/// Largest `gamma (2 nbar + 1) dt` accepted by [`kraus_set`].
pub const KRAUS_STEP_LIMIT: f64 = 0.1;
/// Above this `gamma (2 nbar + 1) dt` a warning is logged.
pub const KRAUS_STEP_WARN: f64 = 0.01;

/// Discrete-time channel for one step of length `dt`.
///
/// `M_0 = I + (K - iH) dt` and `M_k = sqrt(g_k dt) L_k`, where
/// `K = -1/2 sum_k g_k L_k^dagger L_k`. The set is complete only to first
/// order: `sum M^dagger M - I = (K^2 + H^2) dt^2` for the diagonal `K`, `H`
/// of the phonon model.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    dt: f64,
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn from_ops(dt: f64, ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Domain("a Kraus set needs at least one operator".into()))?;
        let d = first.nrows();
        for op in &ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.nrows(),
                });
            }
        }
        Ok(Self { dt, ops })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// `max |(sum_k M_k^dagger M_k - I)_ij|`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for m in &self.ops {
            sum += m.adjoint() * m;
        }
        sum -= CMatrix::identity(d, d);
        sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for m in &self.ops {
            out += m * rho * m.adjoint();
        }
        out
    }

    /// Superoperator `sum_k M_k ⊗ conj(M_k)` of one step.
    pub fn to_propagator(&self) -> Propagator {
        let d = self.dim();
        let mut sup = CMatrix::zeros(d * d, d * d);
        for m in &self.ops {
            sup += m.kronecker(&m.conjugate());
        }
        Propagator::from_matrix(d, sup, self.dt, PropagatorMethod::Kraus).expect("square Kraus operators")
    }

    /// Product-form set `{M_a ⊗ M_b ⊗ ..}` for `n` independent copies.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("tensor power needs n >= 1".into()));
        }
        let mut ops = self.ops.clone();
        for _ in 1..n {
            ops = ops
                .iter()
                .flat_map(|a| self.ops.iter().map(move |b| a.kronecker(b)))
                .collect();
        }
        Ok(Self { dt: self.dt, ops })
    }
}

/// Documented completeness constant `c` with
/// `||sum M^dagger M - I||_max = c (gamma (2 nbar + 1) dt)^2`:
/// `c = (gamma^2 (nbar+1)^2 + w'^2) / (4 gamma^2 (2 nbar + 1)^2)`.
pub fn completeness_constant(consts: &ModelConstants) -> f64 {
    let g = consts.emission_rate();
    let w = consts.omega_a_prime;
    let total = consts.total_rate();
    (g * g + w * w) / (4.0 * total * total)
}

pub fn kraus_set(consts: &ModelConstants, dt: f64) -> Result<KrausSet> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be finite and >= 0, got {dt}")));
    }
    let product = consts.total_rate() * dt;
    if product >= KRAUS_STEP_LIMIT {
        return Err(Error::StepTooLarge {
            dt,
            product,
            limit: KRAUS_STEP_LIMIT,
        });
    }
    if product > KRAUS_STEP_WARN {
        log::warn!("kraus step gamma(2n+1)dt = {product:.3e} exceeds {KRAUS_STEP_WARN}");
    }
    let spec = phonon_spec(consts);
    let d = spec.dim();
    let mut k = CMatrix::zeros(d, d);
    for (op, rate) in spec.jumps() {
        k -= (op.adjoint() * op).scale(0.5 * rate);
    }
    let generator = k - spec.hamiltonian() * c(0.0, 1.0);
    let mut ops = vec![CMatrix::identity(d, d) + generator.scale(dt)];
    for (op, rate) in spec.jumps() {
        ops.push(op.scale((rate * dt).sqrt()));
    }
    KrausSet::from_ops(dt, ops)
}

/// `n_steps` applications of the set, without trace renormalization.
pub fn kraus_evolve(rho: &DensityOperator, ks: &KrausSet, n_steps: usize) -> Result<DensityOperator> {
    if rho.dim() != ks.dim() {
        return Err(Error::DimensionMismatch {
            expected: ks.dim(),
            found: rho.dim(),
        });
    }
    let mut m = rho.matrix().clone();
    for _ in 0..n_steps {
        m = ks.apply_matrix(&m);
    }
    DensityOperator::from_raw(rho.shape().clone(), m)
}
