//! Fock-space simulation of the two-node link with explicit loss and
//! environment modes, compared against the truncated heralding model.

mod common;

use std::collections::BTreeMap;

use common::*;
use g4v_core::g4v::ModelConstants;
use g4v_core::link::{
    arm_transmissivity, decohere_then_herald, heralded_swap, link_state_at, sweep_length, DetectorModel, Encoding, LinkConfig,
    When,
};
use g4v_core::qstate::{CMatrix, CVector, C64};

const CUTOFF: usize = 3;

/// Pure state over registers with the given dimensions, row-major.
struct Register {
    dims: Vec<usize>,
    amps: CVector,
}

impl Register {
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len() - 1).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        out
    }

    /// Applies a unitary on registers `(i, j)` in the basis `|n_i, n_j>`.
    fn apply_two(&mut self, u: &CMatrix, i: usize, j: usize) {
        let (di, dj) = (self.dims[i], self.dims[j]);
        let s = self.strides();
        let mut out = CVector::zeros(self.amps.len());
        for flat in 0..self.amps.len() {
            let a = self.amps[flat];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let d = self.digits(flat);
            let col = d[i] * dj + d[j];
            let base = flat - d[i] * s[i] - d[j] * s[j];
            for ni in 0..di {
                for nj in 0..dj {
                    let x = u[(ni * dj + nj, col)];
                    if x.norm_sqr() != 0.0 {
                        out[base + ni * s[i] + nj * s[j]] += x * a;
                    }
                }
            }
        }
        self.amps = out;
    }
}

fn annihilator() -> CMatrix {
    CMatrix::from_fn(CUTOFF, CUTOFF, |r, col| {
        if col == r + 1 {
            C64::new((col as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `exp(theta (a+ b - a b+))` on two truncated modes.
fn mixer(theta: f64) -> CMatrix {
    let a = annihilator();
    let id = CMatrix::identity(CUTOFF, CUTOFF);
    let ab = a.adjoint().kronecker(&a) - a.kronecker(&a.adjoint());
    (ab * C64::new(theta, 0.0)).exp() * id.kronecker(&id)
}

fn midpoint_beamsplitter() -> CMatrix {
    let phase = CMatrix::from_fn(CUTOFF, CUTOFF, |r, col| {
        if r == col {
            C64::new((-1f64).powi(r as i32), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    mixer(-std::f64::consts::FRAC_PI_4) * CMatrix::identity(CUTOFF, CUTOFF).kronecker(&phase)
}

fn loss(eta: f64) -> CMatrix {
    mixer(eta.sqrt().acos())
}

struct Layout {
    n_rails: usize,
}

impl Layout {
    // registers: spin A, spin B, rails A, rails B, env A, env B
    fn dims(&self) -> Vec<usize> {
        let mut d = vec![4, 4];
        d.extend(std::iter::repeat_n(CUTOFF, 4 * self.n_rails));
        d
    }
    fn rail_a(&self, r: usize) -> usize {
        2 + r
    }
    fn rail_b(&self, r: usize) -> usize {
        2 + self.n_rails + r
    }
    fn env(&self, mode: usize) -> usize {
        2 + 2 * self.n_rails + mode
    }
}

fn oracle(encoding: Encoding, detector: DetectorModel, eta: f64) -> (CMatrix, f64) {
    let layout = Layout {
        n_rails: match encoding {
            Encoding::SingleRail => 1,
            Encoding::DualRail => 2,
        },
    };
    let n = layout.n_rails;
    let mut reg = Register {
        dims: layout.dims(),
        amps: CVector::zeros(layout.dims().iter().product()),
    };
    // each node: |1>|rails for 0> + |2>|rails for 1>
    let rails_for = |level: usize| -> Vec<usize> {
        match encoding {
            Encoding::SingleRail => vec![level],
            Encoding::DualRail => vec![level, 1 - level],
        }
    };
    let s = reg.strides();
    for la in 0..2 {
        for lb in 0..2 {
            let mut flat = la * s[0] + lb * s[1];
            for r in 0..n {
                flat += rails_for(la)[r] * s[layout.rail_a(r)] + rails_for(lb)[r] * s[layout.rail_b(r)];
            }
            reg.amps[flat] = C64::new(0.5, 0.0);
        }
    }
    let u_loss = loss(eta);
    for r in 0..n {
        reg.apply_two(&u_loss, layout.rail_a(r), layout.env(r));
        reg.apply_two(&u_loss, layout.rail_b(r), layout.env(n + r));
    }
    let bs = midpoint_beamsplitter();
    for r in 0..n {
        reg.apply_two(&bs, layout.rail_a(r), layout.rail_b(r));
    }

    let clicks = |k: usize| match detector {
        DetectorModel::NumberResolving => k,
        DetectorModel::Threshold => usize::from(k > 0),
    };
    // (photon counts, env counts) -> conditional spin amplitudes
    let mut branches: BTreeMap<(Vec<usize>, Vec<usize>), CVector> = BTreeMap::new();
    for flat in 0..reg.amps.len() {
        let a = reg.amps[flat];
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let d = reg.digits(flat);
        let photons = d[2..2 + 2 * n].to_vec();
        let env = d[2 + 2 * n..].to_vec();
        branches.entry((photons, env)).or_insert_with(|| CVector::zeros(16))[d[0] * 4 + d[1]] += a;
    }
    let z_b = CMatrix::from_diagonal(&CVector::from_fn(16, |k, _| {
        C64::new(if k % 2 == 1 { -1.0 } else { 1.0 }, 0.0)
    }));
    let mut sigma = CMatrix::zeros(16, 16);
    for ((photons, _), psi) in branches {
        let (c_counts, d_counts) = (&photons[..n], &photons[n..]);
        let per_pair: Vec<usize> = (0..n).map(|r| clicks(c_counts[r]) + clicks(d_counts[r])).collect();
        let heralded = match encoding {
            Encoding::SingleRail => per_pair[0] == 1,
            Encoding::DualRail => per_pair.iter().all(|&k| k == 1),
        };
        if !heralded {
            continue;
        }
        let odd = d_counts.iter().filter(|&&k| k > 0).count() % 2 == 1;
        let psi = if odd { &z_b * psi } else { psi };
        sigma += &psi * psi.adjoint();
    }
    let p = sigma.trace().re;
    (sigma.unscale(p), p)
}

#[test]
fn beamsplitter_convention() {
    let bs = midpoint_beamsplitter();
    let ket = |na: usize, nb: usize| na * CUTOFF + nb;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (input, c_amp, d_amp) in [(ket(1, 0), h, h), (ket(0, 1), h, -h)] {
        assert!((bs[(ket(1, 0), input)] - C64::new(c_amp, 0.0)).norm() < 1e-14);
        assert!((bs[(ket(0, 1), input)] - C64::new(d_amp, 0.0)).norm() < 1e-14);
    }
    // Hong-Ou-Mandel: no coincidences
    assert!(bs[(ket(1, 1), ket(1, 1))].norm() < 1e-14);
}

#[test]
fn heralded_state_matches_fock_simulation() {
    for encoding in [Encoding::SingleRail, Encoding::DualRail] {
        for detector in [DetectorModel::NumberResolving, DetectorModel::Threshold] {
            for length in [0.0, 10.0, 50.0, 150.0] {
                let mut cfg = LinkConfig::new(length, encoding);
                cfg.detector = detector;
                let got = heralded_swap(&cfg).unwrap();
                let (want, p) = oracle(encoding, detector, arm_transmissivity(&cfg));
                assert!(
                    (got.success_prob - p).abs() < 1e-12,
                    "{encoding} {detector:?} L={length}: {} vs {p}",
                    got.success_prob
                );
                assert!(
                    max_abs(&(got.rho.matrix() - &want)) < 1e-12,
                    "{encoding} {detector:?} L={length}"
                );
            }
        }
    }
}

#[test]
fn closed_form_success_probabilities() {
    for length in [0.0, 20.0, 80.0] {
        let eta = arm_transmissivity(&LinkConfig::new(length, Encoding::SingleRail));
        let single = heralded_swap(&LinkConfig::new(length, Encoding::SingleRail)).unwrap();
        let dual = heralded_swap(&LinkConfig::new(length, Encoding::DualRail)).unwrap();
        assert!((single.success_prob - eta * (2.0 - eta) / 2.0).abs() < 1e-14);
        assert!((dual.success_prob - eta * eta / 2.0).abs() < 1e-14);
        assert!(max_abs(&(dual.rho.matrix() - bell_state().matrix())) < 1e-12);
    }
}

/// Coherence time of 100 us, comparable to the photon flight times.
fn moderate() -> ModelConstants {
    let nbar = g4v_core::g4v::thermal_occupation(50e9, 1.0).unwrap();
    ModelConstants::from_gamma(50e9, 1.0, 1e4 / nbar).unwrap()
}

#[test]
fn decoherence_commutes_with_heralding() {
    // the second coupling thermalizes the spins almost instantly
    for consts in [moderate(), ModelConstants::new(50e9, 1.0, 1e-8).unwrap()] {
        for encoding in [Encoding::SingleRail, Encoding::DualRail] {
            for length in [5.0, 40.0] {
                let cfg = LinkConfig::new(length, encoding);
                let a = link_state_at(&cfg, &consts, When::AtSwap).unwrap();
                let b = decohere_then_herald(&cfg, &consts).unwrap();
                assert!(max_abs(&(a.rho.matrix() - b.rho.matrix())) < 1e-12);
                assert!((a.success_prob - b.success_prob).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn longer_links_are_worse() {
    // fully decohered single-rail states are not ordered by length, so stay
    // well inside the coherence time
    let nbar = g4v_core::g4v::thermal_occupation(50e9, 1.0).unwrap();
    let consts = ModelConstants::from_gamma(50e9, 1.0, 1e2 / nbar).unwrap();
    let lengths: Vec<f64> = (0..10).map(|k| k as f64 * 5.0).collect();
    for encoding in [Encoding::SingleRail, Encoding::DualRail] {
        let rows = sweep_length(&LinkConfig::new(0.0, encoding), &consts, &lengths).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].success_prob < w[0].success_prob);
            assert!(w[1].i_at_swap <= w[0].i_at_swap + 1e-12);
            assert!(w[1].i_at_herald <= w[0].i_at_herald + 1e-12);
        }
        for r in &rows {
            assert!(r.i_at_herald <= r.i_at_swap + 1e-12);
            assert_eq!(r.at_herald.evaluated_at, 2.0 * r.at_swap.evaluated_at);
        }
    }
}
