pub mod error;
pub mod linalg;
pub mod scalar;
pub mod weights;
pub mod clifford;
pub mod opalgebra;
pub mod polyspace;
pub mod repthy;
pub mod hsd;
pub mod cli;
