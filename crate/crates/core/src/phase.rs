//! The canonical system `tau * ds/dt = -alpha * s`, evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSystem {
    alpha: f64,
    tau: f64,
}

impl CanonicalSystem {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "phase decay alpha must be positive, got {alpha}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!(
                "temporal scaling tau must be positive, got {tau}"
            )));
        }
        Ok(Self { alpha, tau })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Phase `s(t) = exp(-alpha t / tau)`, in `(0, 1]` for `t >= 0`.
    ///
    /// Large `t` underflows to zero in floating point; callers that divide by
    /// the phase must handle that themselves.
    pub fn phase_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "phase requested at negative time {t}");
        (-self.alpha * t / self.tau).exp()
    }
}
