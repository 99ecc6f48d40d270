#![allow(dead_code)]

use g4v_core::qstate::{CMatrix, CVector, DensityOperator, PureState, SystemShape, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn z(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Full-rank random state `A A^dagger / Tr`.
pub fn random_density(rng: &mut StdRng, shape: SystemShape) -> DensityOperator {
    let a = random_matrix(rng, shape.total_dim());
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(shape, m.unscale(tr)).unwrap()
}

pub fn random_pure(rng: &mut StdRng, shape: SystemShape) -> PureState {
    let v = CVector::from_fn(shape.total_dim(), |_, _| {
        z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    PureState::normalized(shape, v).unwrap()
}

/// Haar-like unitary from the QR factor of a random complex matrix.
pub fn random_unitary(rng: &mut StdRng, d: usize) -> CMatrix {
    random_matrix(rng, d).qr().q()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `(|1>+|2>)/sqrt2` on a four-level spin.
pub fn plus_state() -> DensityOperator {
    let v = CVector::from_vec(vec![z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0)]);
    PureState::normalized(SystemShape::single(4), v).unwrap().to_density()
}

/// `(|1,2>+|2,1>)/sqrt2` on two four-level spins.
pub fn bell_state() -> DensityOperator {
    let shape = SystemShape::repeated(4, 2);
    let mut v = CVector::zeros(16);
    v[shape.join_index(&[0, 1])] = z(1.0, 0.0);
    v[shape.join_index(&[1, 0])] = z(1.0, 0.0);
    PureState::normalized(shape, v).unwrap().to_density()
}
