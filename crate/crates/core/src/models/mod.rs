//! Exemplar forward models.

pub mod lattice;
pub mod ou;
