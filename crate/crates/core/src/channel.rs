use serde::Serialize;

use crate::error::{Error, Result};

/// Gains of the Gaussian relay channel `Y_r = aX + Z_r`, `Y = X + bX_r + Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    /// Source to relay amplitude gain.
    pub a: f64,
    /// Relay to destination amplitude gain.
    pub b: f64,
}

impl ChannelParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let channel = Self { a, b };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "channel gains must be finite and strictly positive, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}
