//! Entanglement swapping between remote qubits using multi-time-bin photonic
//! states sent through Gaussian thermal-loss channels.
//!
//! Every fidelity is available two ways: the closed forms in [`analytic`] and
//! [`states::state_fidelity_analytic`], and a brute-force truncated Fock-space
//! oracle built from [`fock`], [`channel`], [`states`] and [`swap`].

pub mod analytic;
pub mod channel;
pub mod error;
pub mod fock;
pub mod states;
pub mod swap;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
