//! Gaussian radial basis functions over the phase variable and the
//! normalized, phase-gated forcing term built on top of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N + 1` Gaussian kernels `psi_i(s) = exp(-h_i (s - c_i)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRecord")]
pub struct BasisSet {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisRecord {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl TryFrom<BasisRecord> for BasisSet {
    type Error = Error;

    fn try_from(r: BasisRecord) -> Result<Self> {
        Self::from_parts(r.centers, r.widths)
    }
}

impl BasisSet {
    /// Builds `n + 1` kernels with centers `c_i = exp(-alpha i T / n)` and
    /// widths `h_i = 1 / (c_{i+1} - c_i)^2`, the last width repeating the
    /// previous one.
    ///
    /// `duration` is `T` measured in units of the temporal scaling, i.e. the
    /// span of `t / tau` the basis has to cover.
    pub fn new(n: usize, alpha: f64, duration: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("basis needs n >= 1 (at least two centers)"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "basis alpha must be positive, got {alpha}"
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!(
                "basis duration must be positive, got {duration}"
            )));
        }
        let centers: Vec<f64> = (0..=n)
            .map(|i| (-alpha * i as f64 * duration / n as f64).exp())
            .collect();
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|w| 1.0 / (w[1] - w[0]).powi(2))
            .collect();
        widths.push(widths[n - 1]);
        if let Some(bad) = widths.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::invalid(format!(
                "basis width {bad} is not finite; alpha * duration is too large for n = {n}"
            )));
        }
        if centers[n] <= 0.0 {
            return Err(Error::invalid("last basis center underflowed to zero"));
        }
        Ok(Self { centers, widths })
    }

    /// Rebuilds a basis from stored centers and widths, checking the
    /// ordering and positivity invariants.
    pub fn from_parts(centers: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if centers.len() < 2 || centers.len() != widths.len() {
            return Err(Error::invalid(format!(
                "basis needs matching center/width lists of length >= 2, got {} and {}",
                centers.len(),
                widths.len()
            )));
        }
        if !centers.windows(2).all(|w| w[0] > w[1]) || !(centers[centers.len() - 1] > 0.0) {
            return Err(Error::invalid(
                "basis centers must be strictly decreasing and positive",
            ));
        }
        if !widths.iter().all(|h| h.is_finite() && *h > 0.0) {
            return Err(Error::invalid("basis widths must be positive and finite"));
        }
        Ok(Self { centers, widths })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-h * (s - c).powi(2)).exp())
            .collect()
    }

    /// Regressor row for phase `s`: `psi_i(s) * s / sum_j psi_j(s)`.
    ///
    /// The forcing value is the dot product of this row with the weights.
    pub fn regressor(&self, s: f64) -> Result<Vec<f64>> {
        let mut psi = self.eval(s);
        let total: f64 = psi.iter().sum();
        if !(total >= f64::MIN_POSITIVE) {
            return Err(Error::DegenerateNormalization { s });
        }
        let scale = s / total;
        psi.iter_mut().for_each(|p| *p *= scale);
        Ok(psi)
    }

    /// `f(s) = (sum_i w_i psi_i(s) / sum_i psi_i(s)) * s` for one dimension.
    pub fn forcing(&self, weights: &[f64], s: f64) -> Result<f64> {
        if weights.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} basis functions",
                weights.len(),
                self.len()
            )));
        }
        let psi = self.eval(s);
        let total: f64 = psi.iter().sum();
        if !(total >= f64::MIN_POSITIVE) {
            return Err(Error::DegenerateNormalization { s });
        }
        let weighted: f64 = psi.iter().zip(weights).map(|(p, w)| p * w).sum();
        Ok(weighted / total * s)
    }
}
