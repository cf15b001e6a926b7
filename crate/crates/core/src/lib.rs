//! Fock-basis simulation of linear-optical multiphoton Dicke-state generation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod error;
pub mod fock;
pub mod optim;
pub mod pipeline;
pub mod postselect;
pub mod qubits;
pub mod sources;
pub mod tomography;

pub use error::{Error, Result};
