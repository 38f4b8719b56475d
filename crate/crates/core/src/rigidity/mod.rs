//! Commensurability of subgroups, joinings of two covers, and
//! polynomial goodness checks.

pub mod joining;
pub mod lattice;
pub mod orbit;
pub mod poly;
pub mod subgroup;
