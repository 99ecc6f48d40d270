//! Ground-manifold electronic structure of a group-IV vacancy and the
//! physical constants feeding the phonon master equation.
//!
//! Hamiltonians are returned in the orbital ⊗ spin product basis
//! `{e+↑, e+↓, e-↑, e-↓}` (orbital most significant), in angular frequency
//! units (rad/s). The level labels used by the master equation are
//!
//! | level | product state | product index |
//! |-------|---------------|---------------|
//! | `|1>` | `e+ ⊗ ↓`      | 1             |
//! | `|2>` | `e- ⊗ ↑`      | 2             |
//! | `|3>` | `e- ⊗ ↓`      | 3             |
//! | `|4>` | `e+ ⊗ ↑`      | 0             |

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qstate::{c, hermitian_eigen, CMatrix, CVector};

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// `2 mu_B / h` in Hz/T.
pub const GAMMA_E_HZ_PER_T: f64 = 2.0 * BOHR_MAGNETON / PLANCK;

/// Product-basis index of each level `|1>..|4>`.
pub const LEVEL_TO_PRODUCT: [usize; 4] = [1, 2, 3, 0];

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VacancyParams {
    /// Spin-orbit strength (Hz).
    pub lambda_so: f64,
    /// Jahn-Teller energies (Hz).
    pub upsilon_x: f64,
    pub upsilon_y: f64,
    /// Magnetic field components (T); `b_parallel` is along the symmetry axis.
    pub b_parallel: f64,
    pub b_x: f64,
    pub b_y: f64,
    /// Gyromagnetic factor (Hz/T).
    pub gamma_e: f64,
}

impl Default for VacancyParams {
    fn default() -> Self {
        Self {
            lambda_so: 50e9,
            upsilon_x: 0.0,
            upsilon_y: 0.0,
            b_parallel: 0.0,
            b_x: 0.0,
            b_y: 0.0,
            gamma_e: GAMMA_E_HZ_PER_T,
        }
    }
}

impl VacancyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_so >= 0.0) || !self.lambda_so.is_finite() {
            return Err(Error::Domain(format!(
                "lambda_so must be finite and >= 0, got {}",
                self.lambda_so
            )));
        }
        let fields = [
            self.upsilon_x,
            self.upsilon_y,
            self.b_parallel,
            self.b_x,
            self.b_y,
            self.gamma_e,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("vacancy parameters must be finite".into()));
        }
        Ok(())
    }
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// `i|0><1| - i|1><0|`, the sign convention used for both the orbital and
/// spin `Y` operators.
fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)])
}

fn id2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn h_spin_orbit(p: &VacancyParams) -> CMatrix {
    pauli_z().kronecker(&pauli_z()).scale(TWO_PI * p.lambda_so / 2.0)
}

pub fn h_jahn_teller(p: &VacancyParams) -> CMatrix {
    let orbital = pauli_y().scale(p.upsilon_x) - pauli_x().scale(p.upsilon_y);
    orbital.kronecker(&id2()).scale(TWO_PI)
}

pub fn h_zeeman_parallel(p: &VacancyParams) -> CMatrix {
    id2().kronecker(&pauli_z()).scale(TWO_PI * p.gamma_e * p.b_parallel / 2.0)
}

pub fn h_zeeman_perpendicular(p: &VacancyParams) -> CMatrix {
    let spin = pauli_x().scale(p.b_x) + pauli_y().scale(p.b_y);
    id2().kronecker(&spin).scale(TWO_PI * p.gamma_e / 2.0)
}

pub fn h_zeeman(p: &VacancyParams) -> CMatrix {
    h_zeeman_parallel(p) + h_zeeman_perpendicular(p)
}

pub fn h_total(p: &VacancyParams) -> CMatrix {
    h_spin_orbit(p) + h_jahn_teller(p) + h_zeeman(p)
}

/// Unitary whose k-th column is level `|k+1>` in the product basis.
pub fn level_basis() -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    for (level, &prod) in LEVEL_TO_PRODUCT.iter().enumerate() {
        u[(prod, level)] = c(1.0, 0.0);
    }
    u
}

/// Re-express a product-basis operator in the level basis `|1>..|4>`.
pub fn to_level_basis(op: &CMatrix) -> CMatrix {
    let u = level_basis();
    u.adjoint() * op * u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    /// Closed-form spin-mixed eigenvectors (no Jahn-Teller term).
    ClosedForm,
    /// Dense Hermitian eigensolver on the full Hamiltonian.
    Numerical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    /// Energy in rad/s.
    pub energy: f64,
    /// Normalized eigenvector in the product basis.
    pub vector: CVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigensystem {
    pub method: EigenMethod,
    /// Closed form: ordered as levels `|1>..|4>`. Numerical: ascending energy.
    pub pairs: Vec<EigenPair>,
}

fn product_vector(orbital: usize, up: num_complex::Complex64, down: num_complex::Complex64) -> CVector {
    let mut v = CVector::zeros(4);
    v[2 * orbital] = up;
    v[2 * orbital + 1] = down;
    let n = v.norm();
    v.unscale(n)
}

/// Eigenstates of the ground manifold Hamiltonian.
///
/// Without a Jahn-Teller term and with `lambda_so > gamma_e |b_parallel|`
/// the four eigenvectors are built in closed form. A perpendicular field
/// `B+ = b_x + i b_y` mixes the spin within each orbital branch; with the
/// `Y = i|↑><↓| - i|↓><↑|` convention the mixing amplitudes are
///
/// * `e+`, mostly `↑`: `|↑> + g B+* / (λ + g Bz + R+) |↓>`
/// * `e+`, mostly `↓`: `|↓> - g B+  / (λ + g Bz + R+) |↑>`
/// * `e-`, mostly `↑`: `|↑> - g B+* / (λ - g Bz + R-) |↓>`
/// * `e-`, mostly `↓`: `|↓> + g B+  / (λ - g Bz + R-) |↑>`
///
/// with `R± = sqrt(|g B+|² + (λ ± g Bz)²)`. Otherwise the full Hamiltonian
/// is diagonalized numerically.
pub fn ground_manifold_eigensystem(p: &VacancyParams) -> Result<Eigensystem> {
    p.validate()?;
    let g = p.gamma_e;
    let bz = g * p.b_parallel;
    let closed_form = p.upsilon_x == 0.0 && p.upsilon_y == 0.0 && p.lambda_so > bz.abs();
    if !closed_form {
        let (vals, vecs) = hermitian_eigen(&h_total(p));
        let pairs = vals
            .into_iter()
            .enumerate()
            .map(|(k, energy)| EigenPair {
                energy,
                vector: vecs.column(k).into_owned(),
            })
            .collect();
        return Ok(Eigensystem {
            method: EigenMethod::Numerical,
            pairs,
        });
    }

    let lam = p.lambda_so;
    let bplus = c(g * p.b_x, g * p.b_y);
    let r_plus = (bplus.norm_sqr() + (lam + bz).powi(2)).sqrt();
    let r_minus = (bplus.norm_sqr() + (lam - bz).powi(2)).sqrt();
    let den_plus = lam + bz + r_plus;
    let den_minus = lam - bz + r_minus;
    let one = c(1.0, 0.0);

    let e_plus_up = product_vector(0, one, bplus.conj() / den_plus);
    let e_plus_down = product_vector(0, -bplus / den_plus, one);
    let e_minus_up = product_vector(1, one, -bplus.conj() / den_minus);
    let e_minus_down = product_vector(1, bplus / den_minus, one);

    let vectors = [e_plus_down, e_minus_up, e_minus_down, e_plus_up];
    let energies = [-r_plus / 2.0, -r_minus / 2.0, r_minus / 2.0, r_plus / 2.0];
    let pairs = vectors
        .into_iter()
        .zip(energies)
        .map(|(vector, e)| EigenPair {
            energy: TWO_PI * e,
            vector,
        })
        .collect();
    Ok(Eigensystem {
        method: EigenMethod::ClosedForm,
        pairs,
    })
}

/// Bose-Einstein occupation at ordinary frequency `delta` (Hz).
pub fn thermal_occupation(delta: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!("temperature must be > 0 K, got {temperature}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("splitting must be > 0 Hz, got {delta}")));
    }
    let x = PLANCK * delta / (BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

/// `2 pi g0chi0 delta^3` (s^-1).
pub fn coupling_rate(g0chi0: f64, delta: f64) -> Result<f64> {
    if !(g0chi0 >= 0.0) || !g0chi0.is_finite() {
        return Err(Error::Domain(format!("g0chi0 must be finite and >= 0, got {g0chi0}")));
    }
    Ok(TWO_PI * g0chi0 * delta.powi(3))
}

/// Inverse of [`coupling_rate`].
pub fn calibrate_g0chi0(gamma: f64, delta: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("splitting must be > 0 Hz, got {delta}")));
    }
    Ok(gamma / (TWO_PI * delta.powi(3)))
}

/// Physical constants of the phonon master equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConstants {
    /// Splitting (Hz).
    pub delta: f64,
    /// Bath temperature (K); zero means the explicit `nbar = 0` limit.
    pub temperature: f64,
    /// `g0 chi0` (s^2).
    pub g0chi0: f64,
    pub nbar: f64,
    /// Phonon coupling rate (s^-1).
    pub gamma: f64,
    /// Renormalized splitting (rad/s).
    pub omega_a_prime: f64,
}

impl ModelConstants {
    pub fn new(delta: f64, temperature: f64, g0chi0: f64) -> Result<Self> {
        let nbar = thermal_occupation(delta, temperature)?;
        let gamma = coupling_rate(g0chi0, delta)?;
        Ok(Self {
            delta,
            temperature,
            g0chi0,
            nbar,
            gamma,
            omega_a_prime: TWO_PI * delta,
        })
    }

    pub fn from_gamma(delta: f64, temperature: f64, gamma: f64) -> Result<Self> {
        Self::new(delta, temperature, calibrate_g0chi0(gamma, delta)?)
    }

    /// The `T -> 0` limit with `nbar = 0`.
    pub fn zero_temperature(delta: f64, g0chi0: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("splitting must be > 0 Hz, got {delta}")));
        }
        Ok(Self {
            delta,
            temperature: 0.0,
            g0chi0,
            nbar: 0.0,
            gamma: coupling_rate(g0chi0, delta)?,
            omega_a_prime: TWO_PI * delta,
        })
    }

    pub fn with_omega_a_prime(mut self, omega: f64) -> Self {
        self.omega_a_prime = omega;
        self
    }

    /// Downward rate `gamma (nbar + 1)`.
    pub fn emission_rate(&self) -> f64 {
        self.gamma * (self.nbar + 1.0)
    }

    /// Upward rate `gamma nbar`.
    pub fn absorption_rate(&self) -> f64 {
        self.gamma * self.nbar
    }

    /// `gamma (2 nbar + 1)`.
    pub fn total_rate(&self) -> f64 {
        self.gamma * (2.0 * self.nbar + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
        (a * b - b * a).norm()
    }

    fn sorted_eigs(m: &CMatrix) -> Vec<f64> {
        hermitian_eigen(m).0
    }

    fn params(lambda: f64) -> VacancyParams {
        VacancyParams {
            lambda_so: lambda,
            ..VacancyParams::default()
        }
    }

    #[test]
    fn spin_orbit_levels() {
        assert_eq!(h_spin_orbit(&params(0.0)).norm(), 0.0);
        let p = params(48e9);
        let h = h_spin_orbit(&p);
        let level = to_level_basis(&h);
        let half = PI * p.lambda_so;
        // |1>,|2> at -lambda/2 and |3>,|4> at +lambda/2 (times 2 pi)
        let expected = [-half, -half, half, half];
        for (k, &e) in expected.iter().enumerate() {
            assert_relative_eq!(level[(k, k)].re, e, max_relative = 1e-15);
        }
        assert!((level.clone() - CMatrix::from_diagonal(&level.diagonal())).norm() == 0.0);
        // e+ up is product index 0, e+ down is index 1
        assert_relative_eq!(h[(0, 0)].re, half);
        assert_relative_eq!(h[(1, 1)].re, -half);
    }

    #[test]
    fn jahn_teller_structure() {
        let mut p = params(50e9);
        assert_eq!(h_jahn_teller(&p).norm(), 0.0);
        p.upsilon_x = 3e9;
        let h = h_jahn_teller(&p);
        let eigs = sorted_eigs(&h);
        let u = TWO_PI * 3e9;
        for (got, want) in eigs.iter().zip([-u, -u, u, u]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        p.upsilon_y = -1.5e9;
        assert_abs_diff_eq!(h_jahn_teller(&p).trace().norm(), 0.0);
    }

    #[test]
    fn zeeman_structure() {
        let mut p = params(50e9);
        assert_eq!(h_zeeman(&p).norm(), 0.0);
        p.b_parallel = 0.2;
        let h = h_zeeman(&p);
        let s = PI * p.gamma_e * 0.2;
        for (got, want) in sorted_eigs(&h).iter().zip([-s, -s, s, s]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        assert_eq!(commutator_norm(&h, &h_spin_orbit(&p)), 0.0);
        p.b_x = 0.05;
        assert!(commutator_norm(&h_zeeman(&p), &h_spin_orbit(&p)) > 0.0);
    }

    #[test]
    fn builders_are_hermitian() {
        let p = VacancyParams {
            lambda_so: 50e9,
            upsilon_x: 1e9,
            upsilon_y: 2e9,
            b_parallel: 0.3,
            b_x: 0.1,
            b_y: -0.2,
            gamma_e: GAMMA_E_HZ_PER_T,
        };
        for h in [h_spin_orbit(&p), h_jahn_teller(&p), h_zeeman(&p), h_total(&p)] {
            let scale = h.norm().max(1.0);
            assert!(crate::qstate::hermiticity_defect(&h) / scale < 1e-14);
        }
    }

    #[test]
    fn unmixed_eigenbasis_is_level_basis() {
        let mut p = params(50e9);
        p.b_parallel = 0.1;
        let sys = ground_manifold_eigensystem(&p).unwrap();
        assert_eq!(sys.method, EigenMethod::ClosedForm);
        let u = level_basis();
        for (k, pair) in sys.pairs.iter().enumerate() {
            let overlap = u.column(k).dotc(&pair.vector).norm();
            assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn spin_mixing_amplitude_matches_closed_form() {
        let p = VacancyParams {
            lambda_so: 50e9,
            b_parallel: 0.5,
            b_x: 0.3,
            ..VacancyParams::default()
        };
        let sys = ground_manifold_eigensystem(&p).unwrap();
        let g = p.gamma_e;
        let bplus = g * p.b_x;
        let expected =
            bplus / (g * p.b_parallel + p.lambda_so + (bplus * bplus + (p.lambda_so + g * p.b_parallel).powi(2)).sqrt());
        // level |4> is the e+ branch dominated by spin up
        let v = &sys.pairs[3].vector;
        let ratio = v[1] / v[0];
        assert_relative_eq!(ratio.re, expected, max_relative = 1e-12);
        assert_abs_diff_eq!(ratio.im, 0.0);
    }

    #[test]
    fn closed_form_matches_numerical_diagonalization() {
        let fields = [(0.1, 0.2, -0.3), (-0.4, 0.05, 0.7), (0.0, -0.6, 0.25), (1.0, 0.9, -0.8)];
        for (bz, bx, by) in fields {
            let p = VacancyParams {
                lambda_so: 50e9,
                b_parallel: bz,
                b_x: bx,
                b_y: by,
                ..VacancyParams::default()
            };
            let sys = ground_manifold_eigensystem(&p).unwrap();
            let h = h_total(&p);
            let scale = h.norm();
            for pair in &sys.pairs {
                let residual = (&h * &pair.vector - pair.vector.scale(pair.energy)).norm();
                assert!(residual / scale < 1e-10, "residual {residual:e}");
            }
            let (vals, vecs) = hermitian_eigen(&h);
            let mut closed: Vec<f64> = sys.pairs.iter().map(|p| p.energy).collect();
            closed.sort_by(f64::total_cmp);
            for (a, b) in closed.iter().zip(&vals) {
                assert!((a - b).abs() / scale < 1e-12);
            }
            // each closed-form vector is parallel to one numerical eigenvector
            for pair in &sys.pairs {
                let best = (0..4).map(|k| vecs.column(k).dotc(&pair.vector).norm()).fold(0.0, f64::max);
                assert_abs_diff_eq!(best, 1.0, epsilon = 1e-10);
            }
            // orthonormality
            for (i, a) in sys.pairs.iter().enumerate() {
                for (j, b) in sys.pairs.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(a.vector.dotc(&b.vector).norm(), want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn jahn_teller_falls_back_to_numerical() {
        let p = VacancyParams {
            lambda_so: 50e9,
            upsilon_x: 1e9,
            b_x: 0.1,
            ..VacancyParams::default()
        };
        let sys = ground_manifold_eigensystem(&p).unwrap();
        assert_eq!(sys.method, EigenMethod::Numerical);
        assert!(sys.pairs.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn thermal_occupation_values() {
        let n = thermal_occupation(50e9, 0.25).unwrap();
        // direct Bose-Einstein evaluation with E = h * delta
        let x: f64 = 6.626_070_15e-34 * 50e9 / (1.380_649e-23 * 0.25);
        let direct = (-x).exp() / (1.0 - (-x).exp());
        assert_relative_eq!(n, direct, max_relative = 1e-12);
        assert_relative_eq!(n, 6.8e-5, max_relative = 0.01);
        assert!(thermal_occupation(50e9, 1e-3).unwrap() < 1e-300);
        assert!(thermal_occupation(50e9, 0.1).unwrap() < thermal_occupation(50e9, 0.2).unwrap());
        assert!(thermal_occupation(40e9, 1.0).unwrap() > thermal_occupation(50e9, 1.0).unwrap());
        assert!(thermal_occupation(50e9, 0.0).is_err());
        assert!(thermal_occupation(50e9, -1.0).is_err());
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn detailed_balance_identity() {
        for t in [0.05, 0.1, 0.25, 0.5, 1.0, 4.0, 20.0] {
            let n = thermal_occupation(50e9, t).unwrap();
            let boltzmann = (-PLANCK * 50e9 / (BOLTZMANN * t)).exp();
            assert_relative_eq!(n / (n + 1.0), boltzmann, max_relative = 1e-12);
        }
    }

    #[test]
    fn coupling_rate_scaling_and_calibration() {
        assert_eq!(coupling_rate(0.0, 50e9).unwrap(), 0.0);
        let g1 = coupling_rate(1e-30, 50e9).unwrap();
        let g2 = coupling_rate(1e-30, 100e9).unwrap();
        assert_relative_eq!(g2 / g1, 8.0, max_relative = 1e-14);

        let nbar = thermal_occupation(50e9, 4.0).unwrap();
        let target_gamma = 1e3 / nbar;
        let g0chi0 = calibrate_g0chi0(target_gamma, 50e9).unwrap();
        let c = ModelConstants::new(50e9, 4.0, g0chi0).unwrap();
        assert_relative_eq!(c.gamma * c.nbar, 1e3, max_relative = 1e-12);
        assert_relative_eq!(calibrate_g0chi0(c.gamma, 50e9).unwrap(), g0chi0, max_relative = 1e-14);
        assert!(coupling_rate(-1.0, 50e9).is_err());
    }

    #[test]
    fn model_constant_defaults() {
        let c = ModelConstants::from_gamma(50e9, 0.5, 1e6).unwrap();
        assert_relative_eq!(c.omega_a_prime, TWO_PI * 50e9);
        assert_relative_eq!(c.total_rate(), c.emission_rate() + c.absorption_rate(), max_relative = 1e-14);
        let z = ModelConstants::zero_temperature(50e9, 1e-30).unwrap();
        assert_eq!(z.nbar, 0.0);
        assert_eq!(z.with_omega_a_prime(3.0).omega_a_prime, 3.0);
    }
}
