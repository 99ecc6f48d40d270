//! Phonon-coupling Lindblad generator and its evolution backends.
//!
//! Density matrices are vectorized row-major, so that
//! `vec(A rho B) = (A ⊗ B^T) vec(rho)`.

mod compose;
mod kraus;
mod rk4;
mod spectral;

pub use compose::{
    apply_kraus_on_factor, apply_on_factor, evolve_each_factor, multi_spin_propagator, multi_spin_propagator_capped,
    DEFAULT_COMPOSITE_CAP,
};
pub use kraus::{completeness_constant, kraus_evolve, kraus_set, KrausSet, KRAUS_STEP_LIMIT, KRAUS_STEP_WARN};
pub use rk4::{rk4_evolve, rk4_evolve_phonon, RK4_STABILITY_LIMIT};
pub use spectral::{expm_propagator, spectral_propagator, Propagator, PropagatorMethod, SpectralDecomposition, CONDITION_LIMIT};

use crate::error::{Error, Result};
use crate::g4v::ModelConstants;
use crate::qstate::{c, hermiticity_defect, CMatrix, CVector};

/// `|row><col|` on a `dim`-dimensional space (0-based indices).
pub fn ketbra(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(row, col)] = c(1.0, 0.0);
    m
}

/// `|k><k|` for level label `k` in `1..=4`.
fn level_projector(k: usize) -> CMatrix {
    ketbra(4, k - 1, k - 1)
}

/// `|to><from|` between level labels in `1..=4`.
fn level_transition(to: usize, from: usize) -> CMatrix {
    ketbra(4, to - 1, from - 1)
}

/// Hamiltonian plus weighted jump operators of a Markovian generator.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSpec {
    hamiltonian: CMatrix,
    jumps: Vec<(CMatrix, f64)>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<(CMatrix, f64)>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: hamiltonian.ncols(),
            });
        }
        let scale = hamiltonian.norm().max(1.0);
        let defect = hermiticity_defect(&hamiltonian);
        if defect > 1e-12 * scale {
            return Err(Error::NotHermitian { defect });
        }
        for (op, rate) in &jumps {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.nrows(),
                });
            }
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(Error::Domain(format!("jump rate must be finite and >= 0, got {rate}")));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(CMatrix, f64)] {
        &self.jumps
    }

    /// `L[rho]` in matrix form.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let i = c(0.0, 1.0);
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-i);
        for (op, rate) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let dag = op.adjoint();
            let n = &dag * op;
            out += (op * rho * &dag - (&n * rho + rho * &n).scale(0.5)).scale(*rate);
        }
        out
    }

    /// Vectorized generator.
    pub fn liouvillian(&self) -> Liouvillian {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let i = c(0.0, 1.0);
        let h = &self.hamiltonian;
        let mut m = (h.kronecker(&id) - id.kronecker(&h.transpose())) * (-i);
        for (op, rate) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let n = op.adjoint() * op;
            let jump = op.kronecker(&op.conjugate());
            let anti = n.kronecker(&id) + id.kronecker(&n.transpose());
            m += (jump - anti.scale(0.5)).scale(*rate);
        }
        Liouvillian { dim: d, matrix: m }
    }

    /// Generator of `n` independent copies: `sum_k I ⊗ .. ⊗ L ⊗ .. ⊗ I`.
    pub fn composite(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("composite needs at least one subsystem".into()));
        }
        let d = self.dim();
        let embed = |op: &CMatrix, k: usize| -> CMatrix {
            let left = CMatrix::identity(d.pow(k as u32), d.pow(k as u32));
            let right = CMatrix::identity(d.pow((n - k - 1) as u32), d.pow((n - k - 1) as u32));
            left.kronecker(op).kronecker(&right)
        };
        let total = d.pow(n as u32);
        let mut h = CMatrix::zeros(total, total);
        let mut jumps = Vec::with_capacity(n * self.jumps.len());
        for k in 0..n {
            h += embed(&self.hamiltonian, k);
            for (op, rate) in &self.jumps {
                jumps.push((embed(op, k), *rate));
            }
        }
        Self::new(h, jumps)
    }
}

/// Spin-phonon generator of a single vacancy in the level basis `|1>..|4>`:
/// `H = (w'/2)(|4><4| - |2><2| + |3><3| - |1><1|)` with jumps
/// `|2><4|`, `|4><2|`, `|1><3|`, `|3><1|` at rates
/// `g(n+1)`, `g n`, `g(n+1)`, `g n`.
pub fn phonon_spec(consts: &ModelConstants) -> LindbladSpec {
    let half = consts.omega_a_prime / 2.0;
    let h = (level_projector(4) - level_projector(2) + level_projector(3) - level_projector(1)).scale(half);
    let down = consts.emission_rate();
    let up = consts.absorption_rate();
    let jumps = vec![
        (level_transition(2, 4), down),
        (level_transition(4, 2), up),
        (level_transition(1, 3), down),
        (level_transition(3, 1), up),
    ];
    LindbladSpec::new(h, jumps).expect("phonon generator is well formed")
}

/// Vectorized Lindblad generator (`d^2 x d^2`, units s^-1).
#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    matrix: CMatrix,
}

impl Liouvillian {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self { dim, matrix })
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Entry coupling `rho[from]` into `d/dt rho[to]` (0-based matrix indices).
    pub fn coefficient(&self, to: (usize, usize), from: (usize, usize)) -> num_complex::Complex64 {
        self.matrix[(to.0 * self.dim + to.1, from.0 * self.dim + from.1)]
    }

    /// `max_col |sum_i L[(i,i), col]|`; zero for a trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| {
                (0..d)
                    .map(|i| self.matrix[(i * d + i, col)])
                    .sum::<num_complex::Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_generator(consts: &ModelConstants) -> Liouvillian {
    phonon_spec(consts).liouvillian()
}

/// Row-major flattening `rho_11, rho_12, .., rho_dd`.
pub fn vectorize(rho: &CMatrix) -> CVector {
    let (r, cols) = rho.shape();
    CVector::from_fn(r * cols, |k, _| rho[(k / cols, k % cols)])
}

pub fn devectorize(v: &CVector) -> Result<CMatrix> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: n,
        });
    }
    Ok(CMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}
