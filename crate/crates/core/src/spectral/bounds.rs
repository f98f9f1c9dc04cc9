use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Multipliers of the three confidence widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfidenceConstants {
    #[serde(rename = "C_O", alias = "c_o")]
    pub c_o: f64,
    #[serde(rename = "C_R", alias = "c_r")]
    pub c_r: f64,
    #[serde(rename = "C_T", alias = "c_t")]
    pub c_t: f64,
}

impl Default for ConfidenceConstants {
    fn default() -> Self {
        Self { c_o: 1.0, c_r: 1.0, c_t: 1.0 }
    }
}

/// Widths for one action. Infinite widths mark an action without a usable
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub b_o: f64,
    pub b_r: f64,
    pub b_t: f64,
    pub n_l: usize,
}

impl ActionBounds {
    pub fn infinite(n_l: usize) -> Self {
        Self {
            b_o: f64::INFINITY,
            b_r: f64::INFINITY,
            b_t: f64::INFINITY,
            n_l,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.b_o.is_infinite() || self.b_r.is_infinite() || self.b_t.is_infinite()
    }

    pub fn total(&self) -> f64 {
        self.b_o + self.b_r + self.b_t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBounds {
    pub per_action: Vec<ActionBounds>,
    pub constants: ConfidenceConstants,
    pub delta: f64,
}

/// `B_O = C_O √(Y log(1/δ)/N)`, `B_R = C_R √(log(1/δ)/N)`,
/// `B_T = C_T √(Y X² log(1/δ)/N)`. Zero samples give infinite widths.
pub fn confidence_widths(
    n_l: usize,
    x: usize,
    y: usize,
    delta: f64,
    constants: &ConfidenceConstants,
) -> Result<ActionBounds, SpectralError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SpectralError::InvalidDelta(delta));
    }
    if n_l == 0 {
        return Ok(ActionBounds::infinite(0));
    }
    let base = (1.0 / delta).ln() / n_l as f64;
    Ok(ActionBounds {
        b_o: constants.c_o * (y as f64 * base).sqrt(),
        b_r: constants.c_r * base.sqrt(),
        b_t: constants.c_t * (y as f64 * (x * x) as f64 * base).sqrt(),
        n_l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_width_arithmetic() {
        let b = confidence_widths(10_000, 2, 4, 0.01, &ConfidenceConstants::default()).unwrap();
        assert!((b.b_r - (100f64.ln() / 1e4).sqrt()).abs() < 1e-15);
        assert!((b.b_r - 0.021459).abs() < 1e-6);
        assert!((b.b_o - 2.0 * b.b_r).abs() < 1e-15);
        assert!((b.b_t - 4.0 * b.b_r).abs() < 1e-15);
    }

    #[test]
    fn zero_samples_and_bad_delta() {
        let c = ConfidenceConstants::default();
        assert!(confidence_widths(0, 2, 4, 0.1, &c).unwrap().is_infinite());
        assert!(matches!(confidence_widths(5, 2, 4, 1.0, &c), Err(SpectralError::InvalidDelta(_))));
        assert!(matches!(confidence_widths(5, 2, 4, 0.0, &c), Err(SpectralError::InvalidDelta(_))));
    }

    #[test]
    fn quadrupling_samples_halves_widths() {
        let c = ConfidenceConstants { c_o: 0.3, c_r: 2.0, c_t: 1.5 };
        let a = confidence_widths(1234, 3, 5, 0.05, &c).unwrap();
        let b = confidence_widths(4 * 1234, 3, 5, 0.05, &c).unwrap();
        assert!((a.b_o / b.b_o - 2.0).abs() < 1e-12);
        assert!((a.b_r / b.b_r - 2.0).abs() < 1e-12);
        assert!((a.b_t / b.b_t - 2.0).abs() < 1e-12);
    }
}
