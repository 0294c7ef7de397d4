//! Engineering workbench for two kinds of quantum-gate hardware models:
//!
//! * **Measurement-induced nonlinearities in linear optics** — truncated
//!   Fock-space states ([`fock`]), beam-splitter networks and their
//!   triangular factorization ([`interferometer`]), permanent-based
//!   multi-photon amplitudes ([`permanent`]), conditional operators from
//!   ancilla preparation + projective detection ([`conditional`]),
//!   synthesis of nonlinear-sign and controlled-phase gates by
//!   success-probability optimization ([`gates`]), and decoherence from
//!   absorbing elements, inefficient detectors and imperfect photon
//!   sources ([`decoherence`]).
//!
//! * **Bose–Hubbard lattice registers** — sparse fixed-particle-number
//!   Hamiltonians, ground states across the superfluid/Mott crossover,
//!   and two-qubit gate dynamics against adiabatic phase formulas
//!   ([`lattice`]).
//!
//! The crate is a library first: each major capability has a runnable
//! program under `examples/`. A thin `gateforge` binary exposes the same
//! capabilities as subcommands (`synth-ns`, `fidelity-sweep`,
//! `lattice-ground`, ...); see [`cli`].
//!
//! ```
//! use gateforge::fock::FockBasis;
//! use gateforge::interferometer::{BeamSplitterParams, NetworkDescription};
//!
//! // Hong-Ou-Mandel: two photons meeting at a 50:50 beam splitter bunch.
//! let basis = FockBasis::max_total(2, 2).unwrap();
//! let bs = BeamSplitterParams::fifty_fifty();
//! let net = NetworkDescription::single_bs(2, 0, 1, bs).unwrap();
//! let u = net.compose().unwrap().lift_to_fock(&basis).unwrap();
//! let one_one = basis.index_of(&[1, 1].into()).unwrap();
//! assert!(u[(one_one, one_one)].norm() < 1e-12);
//! ```

pub mod cli;
pub mod conditional;
pub mod decoherence;
pub mod fock;
pub mod gates;
pub mod interferometer;
pub mod lattice;
pub mod linalg;
pub mod optim;
pub mod permanent;

pub use num_complex::Complex64;

/// Version string embedded in every report and output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
