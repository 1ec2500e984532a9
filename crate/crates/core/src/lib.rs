pub mod error;
pub mod experiments;
pub mod metrics;
pub mod numerics;
pub mod potentials;
pub mod samplers;
pub mod smoothing;
