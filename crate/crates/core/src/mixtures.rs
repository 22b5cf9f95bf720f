//! Finite univariate mixtures of Gaussian, Laplace or Bernoulli components.
//!
//! Continuous mixtures are stored in unit-sensitivity coordinates: every
//! component shares one scale and locations are already divided by it.
//! Bernoulli locations are success probabilities.

use crate::error::{invalid, Error, Result};
use crate::special::{laplace_cdf, laplace_logpdf, laplace_sf, log_sum_exp, norm_cdf, norm_logpdf, norm_sf};
use serde::{Deserialize, Serialize};

/// Default width to which [`loss_invert`] narrows its bracket.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ComponentFamily {
    /// Normal components with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Laplace components with scale `scale`.
    Laplace { scale: f64 },
    Bernoulli,
}

impl ComponentFamily {
    pub fn is_continuous(&self) -> bool {
        !matches!(self, ComponentFamily::Bernoulli)
    }

    /// Component scale; `None` for Bernoulli.
    pub fn scale(&self) -> Option<f64> {
        match *self {
            ComponentFamily::Gaussian { sigma } => Some(sigma),
            ComponentFamily::Laplace { scale } => Some(scale),
            ComponentFamily::Bernoulli => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.scale() {
            Some(s) if !(s > 0.0 && s.is_finite()) => Err(invalid(format!("component scale must be positive, got {s}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub location: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture")]
pub struct MixtureDistribution {
    family: ComponentFamily,
    components: Vec<Component>,
}

#[derive(Deserialize)]
struct RawMixture {
    family: ComponentFamily,
    components: Vec<Component>,
}

impl TryFrom<RawMixture> for MixtureDistribution {
    type Error = Error;
    fn try_from(raw: RawMixture) -> Result<Self> {
        MixtureDistribution::new(raw.family, raw.components.into_iter().map(|c| (c.weight, c.location)).collect())
    }
}

impl MixtureDistribution {
    /// Validates and builds a mixture from `(weight, location)` pairs.
    pub fn new(family: ComponentFamily, components: Vec<(f64, f64)>) -> Result<Self> {
        family.validate()?;
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        let mut total = 0.0;
        for &(w, loc) in &components {
            if !(w >= 0.0 && w <= 1.0) {
                return Err(invalid(format!("mixture weight {w} outside [0, 1]")));
            }
            if !loc.is_finite() {
                return Err(invalid(format!("mixture location {loc} is not finite")));
            }
            if family == ComponentFamily::Bernoulli && !(0.0..=1.0).contains(&loc) {
                return Err(invalid(format!("Bernoulli success probability {loc} outside [0, 1]")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("mixture weights sum to {total}, expected 1")));
        }
        let components = components.into_iter().map(|(weight, location)| Component { weight, location }).collect();
        Ok(Self { family, components })
    }

    /// Single-component distribution.
    pub fn point(family: ComponentFamily, location: f64) -> Result<Self> {
        Self::new(family, vec![(1.0, location)])
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::point(ComponentFamily::Bernoulli, p)
    }

    pub fn family(&self) -> ComponentFamily {
        self.family
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Components with positive weight.
    pub fn support(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.weight > 0.0)
    }

    /// Effective success probability `Σ w_k θ_k` of a Bernoulli mixture.
    pub fn success_probability(&self) -> Result<f64> {
        if self.family != ComponentFamily::Bernoulli {
            return Err(Error::UnsupportedFamily("success probability of a continuous mixture".into()));
        }
        Ok(self.components.iter().map(|c| c.weight * c.location).sum::<f64>().clamp(0.0, 1.0))
    }

    /// Smallest and largest location among components with positive weight.
    pub fn location_range(&self) -> (f64, f64) {
        self.support().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.location), hi.max(c.location)))
    }

    pub fn log_density(&self, z: f64) -> Result<f64> {
        match self.family {
            ComponentFamily::Bernoulli => {
                let p = self.success_probability()?;
                if z == 1.0 {
                    Ok(p.ln())
                } else if z == 0.0 {
                    Ok((1.0 - p).ln())
                } else {
                    Err(Error::Domain(format!("Bernoulli outcome must be 0 or 1, got {z}")))
                }
            }
            ComponentFamily::Gaussian { sigma } => {
                let terms: Vec<f64> = self
                    .support()
                    .map(|c| c.weight.ln() + norm_logpdf((z - c.location) / sigma) - sigma.ln())
                    .collect();
                Ok(log_sum_exp(&terms))
            }
            ComponentFamily::Laplace { scale } => {
                let terms: Vec<f64> = self
                    .support()
                    .map(|c| c.weight.ln() + laplace_logpdf((z - c.location) / scale) - scale.ln())
                    .collect();
                Ok(log_sum_exp(&terms))
            }
        }
    }

    pub fn density(&self, z: f64) -> Result<f64> {
        Ok(self.log_density(z)?.exp())
    }

    fn unit_tails(&self) -> Result<(fn(f64) -> f64, fn(f64) -> f64, f64)> {
        match self.family {
            ComponentFamily::Gaussian { sigma } => Ok((norm_cdf, norm_sf, sigma)),
            ComponentFamily::Laplace { scale } => Ok((laplace_cdf, laplace_sf, scale)),
            ComponentFamily::Bernoulli => Err(Error::UnsupportedFamily("CDF of a Bernoulli mixture".into())),
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        let (cdf, _, s) = self.unit_tails()?;
        Ok(self.support().map(|c| c.weight * cdf((z - c.location) / s)).sum::<f64>().min(1.0))
    }

    /// `Pr[Z > z]`, summed from component upper tails.
    pub fn sf(&self, z: f64) -> Result<f64> {
        let (_, sf, s) = self.unit_tails()?;
        Ok(self.support().map(|c| c.weight * sf((z - c.location) / s)).sum::<f64>().min(1.0))
    }

    /// `Pr[a < Z ≤ b]`, choosing per component the tail that avoids cancellation.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        let (cdf, sf, s) = self.unit_tails()?;
        if !(b > a) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for c in self.support() {
            let (u, v) = ((a - c.location) / s, (b - c.location) / s);
            let m = if u > 0.0 { sf(u) - sf(v) } else { cdf(v) - cdf(u) };
            total += c.weight * m.max(0.0);
        }
        Ok(total)
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.family != other.family {
            return Err(Error::Precondition(format!(
                "mixtures must share family and scale: {:?} vs {:?}",
                self.family, other.family
            )));
        }
        Ok(())
    }
}

/// Mixture density `Σ w_k f_k(z)`.
pub fn density(m: &MixtureDistribution, z: f64) -> Result<f64> {
    m.density(z)
}

pub fn cdf(m: &MixtureDistribution, z: f64) -> Result<f64> {
    m.cdf(z)
}

/// `log(p(z) / q(z))`, with `±inf` when exactly one density vanishes.
pub fn privacy_loss(p: &MixtureDistribution, q: &MixtureDistribution, z: f64) -> Result<f64> {
    p.same_space(q)?;
    let (lp, lq) = (p.log_density(z)?, q.log_density(z)?);
    match (lp == f64::NEG_INFINITY, lq == f64::NEG_INFINITY) {
        (true, true) => Err(Error::UndefinedLoss(z)),
        (false, true) => Ok(f64::INFINITY),
        (true, false) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok(lp - lq),
    }
}

/// Bisection bracket `(lo, hi)` of width at most `tol` across which the
/// privacy loss crosses `target`. The loss must be monotone on `bracket`;
/// its orientation is read from the endpoints.
pub fn loss_bracket(
    p: &MixtureDistribution,
    q: &MixtureDistribution,
    target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Bracket { lo, hi });
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("bisection tolerance must be positive, got {tol}")));
    }
    let (l_lo, l_hi) = (privacy_loss(p, q, lo)?, privacy_loss(p, q, hi)?);
    if !(l_lo.min(l_hi) <= target && target <= l_lo.max(l_hi)) {
        return Err(Error::OutOfRange { target, lo: l_lo, hi: l_hi });
    }
    let increasing = l_lo <= l_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (privacy_loss(p, q, mid)? < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Location where the privacy loss crosses `target`, to within `tol`.
pub fn loss_invert(
    p: &MixtureDistribution,
    q: &MixtureDistribution,
    target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (lo, hi) = loss_bracket(p, q, target, bracket, tol)?;
    Ok(0.5 * (lo + hi))
}

/// Default bisection bracket for a continuous pair: the location hull of both
/// mixtures widened by one unit and ten component scales.
pub fn default_bracket(p: &MixtureDistribution, q: &MixtureDistribution) -> Result<(f64, f64)> {
    p.same_space(q)?;
    let s = p.family.scale().ok_or_else(|| Error::UnsupportedFamily("bracket for Bernoulli pair".into()))?;
    let (plo, phi) = p.location_range();
    let (qlo, qhi) = q.location_range();
    Ok((plo.min(qlo) - 1.0 - 10.0 * s, phi.max(qhi) + 1.0 + 10.0 * s))
}
