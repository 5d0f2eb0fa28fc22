//! Qudit-level simulator and analyzer for quantum secret sharing.
//!
//! The crate builds secret-sharing schemes (logical-basis encodings over
//! qudits), computes their exact access structures from information-theoretic
//! criteria, synthesizes decoders for authorised player sets, runs the
//! quantum-secret and classical-key protocols end to end, and checks the
//! correspondence with erasure-correcting codes.

pub mod access;
pub mod decoder;
pub mod error;
pub mod protocol;
pub mod qecc;
pub mod qudit;
pub mod report;
pub mod scheme;

pub use error::{Error, Result};
