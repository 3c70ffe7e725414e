//! Equational axiom systems over product, left division and right division:
//! parsing, finite models, derivations, and comparison by consequences.

pub mod audit;
pub mod axioms;
pub mod cli;
pub mod consequence;
pub mod models;
pub mod power;
pub mod structure;
pub mod terms;
