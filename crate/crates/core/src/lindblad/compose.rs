//! Channels on composite systems: superoperator tensor powers and
//! single-factor embedding.

use super::{KrausSet, Propagator, PropagatorMethod};
use crate::error::{Error, Result};
use crate::qstate::{CMatrix, DensityOperator, SystemShape};

/// Largest total Hilbert dimension accepted by [`multi_spin_propagator`]
/// (three four-level spins).
pub const DEFAULT_COMPOSITE_CAP: usize = 64;

/// Superoperator of `A ⊗ B` acting on `rho_A ⊗ rho_B`, in the row-major
/// vectorization of the joint space.
fn superop_tensor(a: &CMatrix, da: usize, b: &CMatrix, db: usize) -> CMatrix {
    let d = da * db;
    let mut out = CMatrix::zeros(d * d, d * d);
    let joint = |i: usize, j: usize, ib: usize, jb: usize| (i * db + ib) * d + (j * db + jb);
    for ra in 0..da * da {
        let (ia, ja) = (ra / da, ra % da);
        for ca in 0..da * da {
            let x = a[(ra, ca)];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            let (ka, la) = (ca / da, ca % da);
            for rb in 0..db * db {
                let (ib, jb) = (rb / db, rb % db);
                for cb in 0..db * db {
                    let y = b[(rb, cb)];
                    if y.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (kb, lb) = (cb / db, cb % db);
                    out[(joint(ia, ja, ib, jb), joint(ka, la, kb, lb))] = x * y;
                }
            }
        }
    }
    out
}

/// `E ⊗ .. ⊗ E` (`n` copies) on `n` independent subsystems, equal to the
/// exponential of the summed per-subsystem generators.
pub fn multi_spin_propagator(e: &Propagator, n: usize) -> Result<Propagator> {
    multi_spin_propagator_capped(e, n, DEFAULT_COMPOSITE_CAP)
}

pub fn multi_spin_propagator_capped(e: &Propagator, n: usize, cap: usize) -> Result<Propagator> {
    if n == 0 {
        return Err(Error::Domain("composite channel needs n >= 1".into()));
    }
    let d = e.dim();
    let total = d
        .checked_pow(n as u32)
        .filter(|&t| t <= cap)
        .ok_or(Error::CompositeTooLarge {
            dim: d.saturating_pow(n as u32),
            cap,
        })?;
    if n == 1 {
        return Ok(e.clone());
    }
    let mut acc = e.matrix().clone();
    let mut acc_dim = d;
    for _ in 1..n {
        acc = superop_tensor(&acc, acc_dim, e.matrix(), d);
        acc_dim *= d;
    }
    debug_assert_eq!(acc_dim, total);
    Propagator::from_matrix(total, acc, e.elapsed(), PropagatorMethod::Composite)
}

fn check_factor(shape: &SystemShape, factor: usize, dim: usize) -> Result<(usize, usize)> {
    let dims = shape.dims();
    if factor >= dims.len() {
        return Err(Error::InvalidFactor {
            index: factor,
            n_factors: dims.len(),
        });
    }
    if dims[factor] != dim {
        return Err(Error::DimensionMismatch {
            expected: dims[factor],
            found: dim,
        });
    }
    let inner: usize = dims[factor + 1..].iter().product();
    Ok((inner, shape.total_dim()))
}

/// Applies `E` to tensor factor `factor` of `rho` and the identity elsewhere.
pub fn apply_on_factor(e: &Propagator, factor: usize, rho: &DensityOperator) -> Result<DensityOperator> {
    let d = e.dim();
    let (stride, total) = check_factor(rho.shape(), factor, d)?;
    let m = rho.matrix();
    let em = e.matrix();
    let block = d * stride;
    let mut out = CMatrix::zeros(total, total);
    // Each flat index splits as hi * block + f * stride + lo.
    for hr in 0..total / block {
        for lr in 0..stride {
            let base_r = hr * block + lr;
            for hc in 0..total / block {
                for lc in 0..stride {
                    let base_c = hc * block + lc;
                    for i in 0..d {
                        for j in 0..d {
                            let mut acc = num_complex::Complex64::new(0.0, 0.0);
                            for k in 0..d {
                                for l in 0..d {
                                    acc += em[(i * d + j, k * d + l)] * m[(base_r + k * stride, base_c + l * stride)];
                                }
                            }
                            out[(base_r + i * stride, base_c + j * stride)] = acc;
                        }
                    }
                }
            }
        }
    }
    DensityOperator::from_raw(rho.shape().clone(), out)
}

/// Applies `E` independently to each listed factor.
pub fn evolve_each_factor(e: &Propagator, factors: &[usize], rho: &DensityOperator) -> Result<DensityOperator> {
    let mut out = rho.clone();
    for &f in factors {
        out = apply_on_factor(e, f, &out)?;
    }
    Ok(out)
}

/// One step of a Kraus set on factor `factor`, identity elsewhere.
pub fn apply_kraus_on_factor(ks: &KrausSet, factor: usize, rho: &DensityOperator) -> Result<DensityOperator> {
    apply_on_factor(&ks.to_propagator(), factor, rho)
}
