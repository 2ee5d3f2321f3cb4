pub mod file;
pub mod fixtures;
pub mod generator;
pub mod random;
