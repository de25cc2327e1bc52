//! Simulation core for multi-site tabletop proxy coordination.

pub mod canonical;
pub mod gesture;
pub mod mapping;
pub mod model;
pub mod motion;
pub mod par;
pub mod relay;
pub mod retarget;
pub mod scenario;
