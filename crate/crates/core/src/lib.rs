//! Joint placement and bandwidth allocation for a two-tier
//! satellite/terrestrial edge network.
//!
//! Each frame, every satellite terminal (ST) uploads one task to a LEO
//! satellite, which either computes it on board or relays it to a
//! terrestrial cloud. [`agent::DrtoAgent`] learns the placement online;
//! [`alloc`] gives the optimal bandwidth split for any placement in closed
//! form. [`baselines`] holds the reference algorithms and [`harness`] runs
//! them all on shared channel traces.

pub mod agent;
pub mod alloc;
pub mod baselines;
pub mod channel;
mod error;
pub mod harness;
pub mod nn;
pub mod quantizer;
pub mod system;

pub use error::{Error, Result};
