//! Eigendecomposition propagator `E(t) = V exp(Λ t) V^-1`.
//!
//! The generator is first split into the connected components of its
//! sparsity graph; each block is diagonalized independently (complex Schur
//! form followed by triangular back-substitution). A block whose eigenvector
//! matrix is too ill-conditioned falls back to a Padé matrix exponential.

use nalgebra::linalg::Schur;

use super::Liouvillian;
use crate::error::{Error, Result};
use crate::qstate::{c, CMatrix, DensityOperator, C64};

/// Eigenvector condition number above which a block is exponentiated directly.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorMethod {
    Identity,
    Spectral,
    /// At least one generator block used the matrix-exponential fallback.
    MatrixExponential,
    Kraus,
    Composite,
}

/// Vectorized channel over a `dim`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    dim: usize,
    matrix: CMatrix,
    elapsed: f64,
    method: PropagatorMethod,
}

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
            elapsed: 0.0,
            method: PropagatorMethod::Identity,
        }
    }

    pub fn from_matrix(dim: usize, matrix: CMatrix, elapsed: f64, method: PropagatorMethod) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            dim,
            matrix,
            elapsed,
            method,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn method(&self) -> PropagatorMethod {
        self.method
    }

    /// Raw action on a `dim x dim` matrix.
    pub fn apply_matrix(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        let d = self.dim;
        let out = &self.matrix * super::vectorize(rho);
        Ok(CMatrix::from_fn(d, d, |i, j| out[i * d + j]))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityOperator::from_raw(rho.shape().clone(), out)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Propagator) -> Result<Propagator> {
        if self.dim != first.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: first.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix * &first.matrix,
            elapsed: self.elapsed + first.elapsed,
            method: PropagatorMethod::Composite,
        })
    }
}

#[derive(Clone, Debug)]
enum BlockKind {
    Spectral {
        eigenvalues: Vec<C64>,
        vectors: CMatrix,
        inverse: CMatrix,
    },
    Exponential {
        generator: CMatrix,
    },
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    kind: BlockKind,
}

/// Reusable block eigendecomposition of a [`Liouvillian`].
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    dim: usize,
    size: usize,
    blocks: Vec<Block>,
    condition: f64,
}

fn components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != c(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// Eigenvectors of an upper-triangular matrix by back-substitution,
/// perturbing near-zero pivots the way LAPACK's `ztrevc` does.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = c(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = c(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut pivot = t[(i, i)] - lambda;
            if pivot.norm() < smin {
                pivot = c(smin, 0.0);
            }
            y[(i, k)] = -acc / pivot;
        }
    }
    y
}

fn condition_number(m: &CMatrix) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

impl SpectralDecomposition {
    pub fn new(lv: &Liouvillian) -> Result<Self> {
        let m = lv.matrix();
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("generator has non-finite entries".into()));
        }
        let mut blocks = Vec::new();
        let (mut smax, mut smin) = (0.0f64, f64::INFINITY);
        for indices in components(m) {
            let k = indices.len();
            let sub = CMatrix::from_fn(k, k, |i, j| m[(indices[i], indices[j])]);
            if k == 1 {
                smax = smax.max(1.0);
                smin = smin.min(1.0);
                blocks.push(Block {
                    indices,
                    kind: BlockKind::Spectral {
                        eigenvalues: vec![sub[(0, 0)]],
                        vectors: CMatrix::identity(1, 1),
                        inverse: CMatrix::identity(1, 1),
                    },
                });
                continue;
            }
            let (q, t) = Schur::new(sub.clone()).unpack();
            let y = triangular_eigenvectors(&t);
            let mut v = q * y;
            for mut col in v.column_iter_mut() {
                let n = col.norm();
                col.unscale_mut(n);
            }
            let (hi, lo) = condition_number(&v);
            let inverse = if lo > 0.0 && hi / lo <= CONDITION_LIMIT {
                v.clone().try_inverse()
            } else {
                None
            };
            match inverse {
                Some(inverse) => {
                    smax = smax.max(hi);
                    smin = smin.min(lo);
                    // Real parts within roundoff of zero are the stationary modes;
                    // a positive residue would blow up at large t.
                    let noise = 64.0 * f64::EPSILON * sub.norm();
                    let eigenvalues = (0..k)
                        .map(|i| {
                            let l = t[(i, i)];
                            if l.re.abs() <= noise {
                                C64::new(0.0, l.im)
                            } else {
                                l
                            }
                        })
                        .collect();
                    blocks.push(Block {
                        indices,
                        kind: BlockKind::Spectral {
                            eigenvalues,
                            vectors: v,
                            inverse,
                        },
                    });
                }
                None => {
                    log::debug!(
                        "block of size {k} is defective (cond {:e}); using matrix exponential",
                        hi / lo
                    );
                    blocks.push(Block {
                        indices,
                        kind: BlockKind::Exponential { generator: sub },
                    });
                }
            }
        }
        Ok(Self {
            dim: lv.dim(),
            size: m.nrows(),
            blocks,
            condition: if smin.is_finite() && smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            },
        })
    }

    /// Condition number of the spectrally treated eigenvector blocks.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn used_fallback(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b.kind, BlockKind::Exponential { .. }))
    }

    /// Eigenvalues of every spectrally treated block.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.blocks
            .iter()
            .flat_map(|b| match &b.kind {
                BlockKind::Spectral { eigenvalues, .. } => eigenvalues.clone(),
                BlockKind::Exponential { .. } => Vec::new(),
            })
            .collect()
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        let mut out = CMatrix::zeros(self.size, self.size);
        for block in &self.blocks {
            let local = match &block.kind {
                BlockKind::Spectral {
                    eigenvalues,
                    vectors,
                    inverse,
                } => {
                    let mut scaled = inverse.clone();
                    for (r, lambda) in eigenvalues.iter().enumerate() {
                        let f = (lambda * t).exp();
                        for col in 0..scaled.ncols() {
                            scaled[(r, col)] *= f;
                        }
                    }
                    vectors * scaled
                }
                BlockKind::Exponential { generator } => (generator * c(t, 0.0)).exp(),
            };
            for (a, &i) in block.indices.iter().enumerate() {
                for (b, &j) in block.indices.iter().enumerate() {
                    out[(i, j)] = local[(a, b)];
                }
            }
        }
        let method = if t == 0.0 {
            PropagatorMethod::Identity
        } else if self.used_fallback() {
            PropagatorMethod::MatrixExponential
        } else {
            PropagatorMethod::Spectral
        };
        if t == 0.0 {
            out = CMatrix::identity(self.size, self.size);
        }
        Propagator {
            dim: self.dim,
            matrix: out,
            elapsed: t,
            method,
        }
    }
}

pub fn spectral_propagator(lv: &Liouvillian, t: f64) -> Result<Propagator> {
    Ok(SpectralDecomposition::new(lv)?.propagator(t))
}

/// Direct Padé scaling-and-squaring exponential of the full generator.
pub fn expm_propagator(lv: &Liouvillian, t: f64) -> Propagator {
    Propagator {
        dim: lv.dim(),
        matrix: (lv.matrix() * c(t, 0.0)).exp(),
        elapsed: t,
        method: PropagatorMethod::MatrixExponential,
    }
}
