pub mod construction;
pub mod decomposition;
pub mod error;
pub mod model;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod tree;
pub mod theory;
pub mod montecarlo;
pub mod cli;
