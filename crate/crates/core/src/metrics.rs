//! Coherence and entanglement figures of merit.

use crate::error::{Error, Result};
use crate::qstate::{partial_trace, von_neumann_entropy, DensityOperator, SystemShape, C64};

/// `<bra|rho|ket>` for 1-based level labels.
pub fn coherence_element(rho: &DensityOperator, bra: usize, ket: usize) -> Result<C64> {
    let d = rho.dim();
    for level in [bra, ket] {
        if level == 0 || level > d {
            return Err(Error::Domain(format!("level {level} is outside 1..={d}")));
        }
    }
    Ok(rho.element(bra - 1, ket - 1))
}

/// Hashing bound `min(S(A) - S(AB), S(B) - S(AB))` in bits, unclamped.
///
/// The state is regrouped as a bipartite `dim_a x dim_b` system regardless
/// of its finer factor structure.
pub fn hashing_bound(rho: &DensityOperator, dim_a: usize, dim_b: usize) -> Result<f64> {
    if dim_a * dim_b != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: dim_a * dim_b,
        });
    }
    let shape = SystemShape::new(vec![dim_a, dim_b])?;
    let rho = DensityOperator::from_raw(shape, rho.matrix().clone())?;
    let s_ab = von_neumann_entropy(&rho)?;
    let s_a = von_neumann_entropy(&partial_trace(&rho, &[0])?)?;
    let s_b = von_neumann_entropy(&partial_trace(&rho, &[1])?)?;
    Ok((s_a - s_ab).min(s_b - s_ab))
}
