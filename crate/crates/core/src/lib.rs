//! Broadcast-error control of a SISO plant by a network of switching agents.

pub mod agents;
pub mod analysis;
pub mod error;
pub mod lti;
pub mod poly;
pub mod reference;
pub mod simulator;

pub use error::{Error, Result};
