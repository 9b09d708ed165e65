pub mod cli;
pub mod coaction;
pub mod error;
pub mod linalg;
pub mod models;
pub mod ncpoly;
pub mod partitions;
pub mod probspace;
pub mod report;
pub mod semigroup;
pub mod suite;
