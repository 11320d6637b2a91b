//! Minimum energy-per-bit bounds for the Gaussian relay channel under rank-1
//! linear relaying.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bound;
pub mod channel;
pub mod code;
pub mod error;
pub mod numerics;
pub mod sweep;
pub mod trajectory;

pub use channel::ChannelParams;
pub use error::{Error, Result};
