pub mod lattice;
pub mod linalg;
pub mod group_ring;
pub mod multilinear;
pub mod numeric;
pub mod arithmetic_q;
pub mod lseries;
pub mod verifier;
pub mod suites;
pub mod cli;
