//! Cold atoms and a Bose–Einstein condensate in a vertically shaken
//! harmonic trap: drive signals and their spectra, perturbative heating of
//! the trap oscillator, Thomas–Fermi density response and a 1D
//! Gross–Pitaevskii solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod drive;
pub mod gpe;
pub mod lamb_shift;
pub mod numerics;
pub mod ode;
pub mod perturbation;
pub mod spectrum;
pub mod thomas_fermi;
pub mod units;
