//! Phonon-induced decoherence of group-IV vacancy spin qubits: state
//! algebra, the four-level ground-manifold model, Lindblad evolution
//! backends, entanglement metrics and a midpoint-swap link model.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod g4v;
pub mod lindblad;
pub mod link;
pub mod metrics;
pub mod qstate;
pub mod scan;

pub use error::{Error, Result};
