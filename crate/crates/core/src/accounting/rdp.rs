//! Rényi-DP curves: composition and conversion to `(ε, δ)`.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// `(α, ρ)` points with `α > 1` strictly increasing and `ρ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct RdpCurve {
    points: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct RawCurve {
    points: Vec<(f64, f64)>,
}

impl TryFrom<RawCurve> for RdpCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        RdpCurve::new(raw.points)
    }
}

impl RdpCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("RDP curve needs at least one point"));
        }
        let mut prev = 1.0;
        for &(alpha, rho) in &points {
            if !(alpha > prev) || !alpha.is_finite() {
                return Err(invalid(format!("RDP orders must be finite, > 1 and strictly increasing; got {alpha} after {prev}")));
            }
            if !(rho >= 0.0) {
                return Err(invalid(format!("RDP value at α = {alpha} must be ≥ 0, got {rho}")));
            }
            prev = alpha;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// ρ at an order present on the curve.
    pub fn rho_at(&self, alpha: f64) -> Option<f64> {
        self.points.iter().find(|(a, _)| (a - alpha).abs() <= 1e-12 * alpha).map(|&(_, r)| r)
    }

    /// `T`-fold self-composition: pointwise `T·ρ`.
    pub fn compose(&self, iterations: u64) -> Result<Self> {
        if iterations == 0 {
            return Err(invalid("composition needs T ≥ 1"));
        }
        let t = iterations as f64;
        Ok(Self { points: self.points.iter().map(|&(a, r)| (a, r * t)).collect() })
    }

    /// Replaces `ρ(α)` by `min_{α′ ≥ α} ρ(α′)`, valid since Rényi divergences
    /// are nondecreasing in the order.
    pub fn monotone_repaired(&self) -> Self {
        let mut points = self.points.clone();
        let mut running = f64::INFINITY;
        for p in points.iter_mut().rev() {
            running = running.min(p.1);
            p.1 = running;
        }
        Self { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionFormula {
    /// `ε = ρ + log(1/δ)/(α − 1)`.
    Standard,
    /// `ε = ρ + log((α − 1)/α) − (log δ + log α)/(α − 1)`.
    Improved,
}

pub fn rdp_compose(curve: &RdpCurve, iterations: u64) -> Result<RdpCurve> {
    curve.compose(iterations)
}

/// Smallest `ε ≥ 0` over the curve's points for which `(ε, δ_target)`-ADP holds.
pub fn rdp_to_adp(curve: &RdpCurve, delta_target: f64, formula: ConversionFormula) -> Result<f64> {
    if !(delta_target > 0.0 && delta_target < 1.0) {
        return Err(invalid(format!("δ target must lie in (0, 1), got {delta_target}")));
    }
    let ln_delta = delta_target.ln();
    let eps = curve
        .points
        .iter()
        .map(|&(a, rho)| match formula {
            ConversionFormula::Standard => rho - ln_delta / (a - 1.0),
            ConversionFormula::Improved => rho + ((a - 1.0) / a).ln() - (ln_delta + a.ln()) / (a - 1.0),
        })
        .fold(f64::INFINITY, f64::min);
    Ok(eps.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian(sigma: f64) -> RdpCurve {
        RdpCurve::new((2..=64).map(|a| (a as f64, a as f64 / (2.0 * sigma * sigma))).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(RdpCurve::new(vec![]).is_err());
        assert!(RdpCurve::new(vec![(1.0, 0.0)]).is_err());
        assert!(RdpCurve::new(vec![(2.0, 0.1), (2.0, 0.2)]).is_err());
        assert!(RdpCurve::new(vec![(2.0, -0.1)]).is_err());
        assert!(RdpCurve::new(vec![(2.0, f64::INFINITY)]).is_ok());
    }

    #[test]
    fn compose_examples() {
        let c = gaussian(1.3);
        assert_eq!(rdp_compose(&c, 1).unwrap(), c);
        let ten = rdp_compose(&c, 10).unwrap();
        for &(a, r) in ten.points() {
            assert_relative_eq!(r, 10.0 * a / (2.0 * 1.69), max_relative = 1e-15);
        }
        let zero = RdpCurve::new(vec![(2.0, 0.0), (3.0, 0.0)]).unwrap();
        assert_eq!(zero.compose(7).unwrap(), zero);
        assert!(c.compose(0).is_err());
    }

    #[test]
    fn conversion_examples() {
        let single = RdpCurve::new(vec![(2.0, 0.0)]).unwrap();
        assert_relative_eq!(rdp_to_adp(&single, 0.5, ConversionFormula::Standard).unwrap(), 2f64.ln(), epsilon = 1e-15);
        let c = RdpCurve::new(vec![(5.0, 0.3)]).unwrap();
        let near_one = rdp_to_adp(&c, 1.0 - 1e-12, ConversionFormula::Standard).unwrap();
        assert_relative_eq!(near_one, 0.3, epsilon = 1e-11);
        assert!(rdp_to_adp(&c, 0.0, ConversionFormula::Standard).is_err());
        assert!(rdp_to_adp(&c, 1.0, ConversionFormula::Improved).is_err());
    }

    #[test]
    fn improved_not_worse_when_delta_small() {
        let c = gaussian(0.8);
        for &delta in &[1e-10, 1e-6, 1e-3, 0.01] {
            for &(a, r) in c.points() {
                let single = RdpCurve::new(vec![(a, r)]).unwrap();
                let s = rdp_to_adp(&single, delta, ConversionFormula::Standard).unwrap();
                let i = rdp_to_adp(&single, delta, ConversionFormula::Improved).unwrap();
                assert!(i <= s + 1e-12, "α = {a}, δ = {delta}: {i} > {s}");
            }
        }
    }

    #[test]
    fn repair_is_monotone_and_idempotent() {
        let c = RdpCurve::new(vec![(2.0, 0.5), (3.0, 0.2), (4.0, 0.4), (5.0, 0.3)]).unwrap();
        let r = c.monotone_repaired();
        assert_eq!(r.points(), &[(2.0, 0.2), (3.0, 0.2), (4.0, 0.3), (5.0, 0.3)]);
        assert_eq!(r.monotone_repaired(), r);
    }

    #[test]
    fn json_round_trip_validates() {
        let c = gaussian(2.0);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RdpCurve>(&s).unwrap(), c);
        assert!(serde_json::from_str::<RdpCurve>(r#"{"points":[[0.5,1.0]]}"#).is_err());
    }
}
