//! Dense density-operator algebra over labeled tensor-product spaces.
//!
//! Flat basis indices are row-major over the factor dimensions with the
//! leftmost factor most significant, matching [`nalgebra::Matrix::kronecker`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest tolerated entry of `|rho - rho^dagger|`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Largest tolerated `|Tr rho - 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[MIN_EIGENVALUE, 0)` are rounding noise and get clipped.
pub const MIN_EIGENVALUE: f64 = -1e-9;
/// Eigenvalues below this count as exactly zero in entropies.
pub const ENTROPY_ZERO: f64 = 1e-12;
/// Largest tolerated deviation of a state vector norm from one.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Ordered list of subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("no factors".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidShape(format!("factor dimension {d}")));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Self {
        Self::new(vec![dim]).expect("dimension must be positive")
    }

    /// `n` copies of a `dim`-dimensional factor.
    pub fn repeated(dim: usize, n: usize) -> Self {
        Self::new(vec![dim; n]).expect("dimension and count must be positive")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &SystemShape) -> SystemShape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SystemShape { dims }
    }

    /// Row-major strides, leftmost factor most significant.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn split_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        out
    }

    pub fn join_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub(crate) fn check_factor(&self, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::InvalidFactor {
                index,
                n_factors: self.dims.len(),
            });
        }
        Ok(())
    }
}

/// Validity diagnostics of a candidate density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityReport {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERMITIAN_TOL,
            trace: TRACE_TOL,
            min_eigenvalue: MIN_EIGENVALUE,
        }
    }
}

impl ValidityReport {
    pub fn hermiticity_flagged(&self) -> bool {
        self.hermiticity_defect > self.tolerances.hermiticity
    }

    pub fn trace_flagged(&self) -> bool {
        self.trace_defect > self.tolerances.trace
    }

    pub fn positivity_flagged(&self) -> bool {
        self.min_eigenvalue < self.tolerances.min_eigenvalue
    }

    pub fn is_valid(&self) -> bool {
        !(self.hermiticity_flagged() || self.trace_flagged() || self.positivity_flagged())
    }
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let roots = CVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)));
    &vecs * CMatrix::from_diagonal(&roots) * vecs.adjoint()
}

pub fn validate_matrix(m: &CMatrix, tol: Tolerances) -> ValidityReport {
    let (vals, _) = hermitian_eigen(m);
    ValidityReport {
        hermiticity_defect: hermiticity_defect(m),
        trace_defect: (m.trace() - c(1.0, 0.0)).norm(),
        min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        tolerances: tol,
    }
}

/// Normalized state vector over a [`SystemShape`].
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(shape: SystemShape, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Normalizes `amplitudes` before construction.
    pub fn normalized(shape: SystemShape, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(shape, amplitudes.unscale(norm))
    }

    /// Computational basis state at the given per-factor indices.
    pub fn basis(shape: SystemShape, multi: &[usize]) -> Result<Self> {
        if multi.len() != shape.n_factors() {
            return Err(Error::DimensionMismatch {
                expected: shape.n_factors(),
                found: multi.len(),
            });
        }
        for (k, (&i, &d)) in multi.iter().zip(shape.dims()).enumerate() {
            if i >= d {
                return Err(Error::InvalidState(format!(
                    "index {i} out of range for factor {k} (dim {d})"
                )));
            }
        }
        let mut amps = CVector::zeros(shape.total_dim());
        amps[shape.join_index(multi)] = c(1.0, 0.0);
        Ok(Self { shape, amplitudes: amps })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            shape: self.shape.concat(&other.shape),
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            shape: self.shape.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Density operator over a [`SystemShape`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    shape: SystemShape,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Checked constructor; rejects matrices failing the default tolerances.
    pub fn new(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(shape, matrix)?;
        let report = rho.validate(Tolerances::default());
        if !report.is_valid() {
            return Err(Error::InvalidState(format!(
                "hermiticity defect {:e}, trace defect {:e}, min eigenvalue {:e}",
                report.hermiticity_defect, report.trace_defect, report.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Unchecked constructor for propagated states whose defects are
    /// measured rather than enforced. Only the dimensions are checked.
    pub fn from_raw(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        let d = shape.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { shape, matrix })
    }

    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total_dim();
        let matrix = CMatrix::identity(d, d).unscale(d as f64);
        Self { shape, matrix }
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(shape: SystemShape, populations: &[f64]) -> Result<Self> {
        let diag = CVector::from_iterator(populations.len(), populations.iter().map(|&p| c(p, 0.0)));
        Self::new(shape, CMatrix::from_diagonal(&diag))
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn validate(&self, tol: Tolerances) -> ValidityReport {
        validate_matrix(&self.matrix, tol)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Conjugation `U rho U^dagger` by a unitary on the full space.
    pub fn conjugate(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            matrix: unitary * &self.matrix * unitary.adjoint(),
        })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            shape: self.shape.concat(&other.shape),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

/// Kronecker product of two states; the left operand is most significant.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    a.tensor(b)
}

/// Reduced state on the `keep` factors (kept in their original order).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let shape = rho.shape();
    if keep.is_empty() {
        return Err(Error::InvalidShape("partial trace must keep at least one factor".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidShape("duplicate factor in partial trace".into()));
    }
    for &k in &kept {
        shape.check_factor(k)?;
    }
    let traced: Vec<usize> = (0..shape.n_factors()).filter(|k| !kept.contains(k)).collect();
    let reduced_shape = SystemShape::new(kept.iter().map(|&k| shape.dims()[k]).collect())?;
    let traced_shape_dims: Vec<usize> = traced.iter().map(|&k| shape.dims()[k]).collect();
    let n_traced: usize = traced_shape_dims.iter().product();
    let dr = reduced_shape.total_dim();
    let strides = shape.strides();

    // Flat offsets contributed by kept and traced multi-indices.
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let dims: Vec<usize> = factors.iter().map(|&k| shape.dims()[k]).collect();
        let n: usize = dims.iter().product();
        (0..n)
            .map(|mut flat| {
                let mut off = 0;
                for pos in (0..factors.len()).rev() {
                    off += (flat % dims[pos]) * strides[factors[pos]];
                    flat /= dims[pos];
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept);
    let traced_off = if traced.is_empty() { vec![0] } else { offsets(&traced) };
    debug_assert_eq!(traced_off.len(), n_traced.max(1));

    let m = rho.matrix();
    let reduced = CMatrix::from_fn(dr, dr, |i, j| {
        traced_off.iter().map(|&t| m[(kept_off[i] + t, kept_off[j] + t)]).sum()
    });
    DensityOperator::from_raw(reduced_shape, reduced)
}

fn clipped_spectrum(rho: &DensityOperator) -> Result<Vec<f64>> {
    let defect = hermiticity_defect(rho.matrix());
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let (vals, _) = hermitian_eigen(rho.matrix());
    vals.into_iter()
        .map(|v| {
            if v < MIN_EIGENVALUE {
                Err(Error::NegativeEigenvalue { value: v })
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let spectrum = clipped_spectrum(rho)?;
    Ok(spectrum
        .into_iter()
        .filter(|&v| v >= ENTROPY_ZERO)
        .map(|v| -v * v.log2())
        .sum())
}

/// Principal eigenvector if `rho` is rank one to within `1e-12`.
fn pure_component(rho: &DensityOperator) -> Option<CVector> {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let top = *vals.last()?;
    let trace = rho.trace().re;
    if (top - trace).abs() < 1e-12 && top > 0.0 {
        Some(vecs.column(vals.len() - 1).into_owned().scale(top.sqrt()))
    } else {
        None
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2`.
pub fn fidelity(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let overlap = |psi: &CVector, other: &CMatrix| (psi.adjoint() * other * psi)[(0, 0)].re;
    let f = if let Some(psi) = pure_component(rho2) {
        overlap(&psi, rho1.matrix())
    } else if let Some(psi) = pure_component(rho1) {
        overlap(&psi, rho2.matrix())
    } else {
        let s = psd_sqrt(rho1.matrix());
        let inner = &s * rho2.matrix() * &s;
        let (vals, _) = hermitian_eigen(&inner);
        let root_trace: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
        root_trace * root_trace
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Trace distance `||a - b||_1 / 2`.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    let (vals, _) = hermitian_eigen(&diff);
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn validate(rho: &DensityOperator, tol: Tolerances) -> ValidityReport {
    rho.validate(tol)
}
