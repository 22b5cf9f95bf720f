//! `(ε, δ)` privacy curves and group-profile sweeps.

use crate::amplification::{
    balle_group_delta, group_bound, posthoc_group_adp_unclipped, wor_substitution_profile, wr_substitution_pair,
    BaseMechanismSpec, SubsamplingScheme,
};
use crate::divergence::{divergence_of_candidates, DivergenceKind, EvalOptions};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyPoint {
    pub epsilon: f64,
    pub delta: f64,
    /// The raw δ exceeded 1 and was clipped.
    pub clipped: bool,
}

impl PrivacyPoint {
    /// Clips `raw_delta` into `[0, 1]`, flagging values above 1.
    pub fn new(epsilon: f64, raw_delta: f64) -> Self {
        Self { epsilon, delta: raw_delta.clamp(0.0, 1.0), clipped: raw_delta > 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub scheme: Option<SubsamplingScheme>,
    pub mechanism: Option<BaseMechanismSpec>,
    pub group_size: Option<u64>,
    pub iterations: Option<u64>,
}

/// δ as a function of ε on a sorted grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCurve {
    pub points: Vec<PrivacyPoint>,
    pub method: String,
    pub metadata: CurveMetadata,
}

impl PrivacyCurve {
    pub fn new(points: Vec<PrivacyPoint>, method: impl Into<String>, metadata: CurveMetadata) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].epsilon > w[0].epsilon) {
                return Err(invalid("privacy curve ε values must be strictly increasing"));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.epsilon >= 0.0) || !(0.0..=1.0).contains(&p.delta)) {
            return Err(invalid(format!("invalid curve point (ε = {}, δ = {})", p.epsilon, p.delta)));
        }
        Ok(Self { points, method: method.into(), metadata })
    }

    /// Running minimum of δ from the smallest ε upward. A profile is
    /// nonincreasing, so each δ(ε) also bounds every larger ε.
    pub fn monotone_repaired(&self) -> Self {
        let mut out = self.clone();
        let mut running = f64::INFINITY;
        for p in out.points.iter_mut() {
            if p.delta < running {
                running = p.delta;
            } else {
                p.delta = running;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMethod {
    /// Tight mechanism-specific bound for the whole group.
    Specific,
    /// Bound from the base mechanism's profile at each group distance.
    Agnostic,
    /// Single-record tight bound followed by generic group privacy.
    Posthoc,
}

/// Mechanism, subsampling scheme and divergence evaluation settings.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSetting {
    pub mechanism: BaseMechanismSpec,
    pub scheme: SubsamplingScheme,
    pub eval: EvalOptions,
}

impl ProfileSetting {
    pub fn new(mechanism: BaseMechanismSpec, scheme: SubsamplingScheme) -> Self {
        Self { mechanism, scheme, eval: EvalOptions::default() }
    }

    /// Tight δ at `ε` for a group of `group_size`.
    fn specific_delta(&self, group_size: u64, epsilon: f64) -> Result<f64> {
        let alpha = epsilon.exp();
        match self.scheme {
            SubsamplingScheme::Poisson { rate } => {
                Ok(group_bound(&self.mechanism, rate, group_size, alpha, DivergenceKind::HockeyStick, &self.eval)?.value)
            }
            SubsamplingScheme::WithoutReplacement { dataset_size, batch_size } if group_size == 1 => {
                wor_substitution_profile(&self.mechanism, dataset_size, batch_size, epsilon, &self.eval)
            }
            SubsamplingScheme::WithReplacement { dataset_size, batch_size } if group_size == 1 => {
                let set = wr_substitution_pair(&self.mechanism, dataset_size, batch_size)?;
                Ok(divergence_of_candidates(&set, alpha, DivergenceKind::HockeyStick, &self.eval)?.value)
            }
            SubsamplingScheme::PermutePartition { .. } => {
                Err(Error::UnsupportedMechanism("no ADP profile for permute-and-partition".into()))
            }
            _ => Err(Error::UnsupportedMechanism(
                "mechanism-specific group bounds for this scheme cover single records; use posthoc".into(),
            )),
        }
    }
}

/// Privacy curve of `method` on `eps_grid` (sorted, ≥ 0), monotone-repaired.
pub fn group_profile(setting: &ProfileSetting, group_size: u64, method: GroupMethod, eps_grid: &[f64]) -> Result<PrivacyCurve> {
    setting.mechanism.validate()?;
    setting.scheme.validate()?;
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    if eps_grid.is_empty() {
        return Err(invalid("ε grid is empty"));
    }
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid(format!("ε grid values must be finite and ≥ 0, got {eps}")));
        }
        let raw = match method {
            GroupMethod::Specific => setting.specific_delta(group_size, eps)?,
            GroupMethod::Agnostic => match setting.scheme {
                SubsamplingScheme::Poisson { rate } => balle_group_delta(&setting.mechanism, rate, group_size, eps)?,
                _ => return Err(Error::UnsupportedMechanism("agnostic group bound needs Poisson subsampling".into())),
            },
            GroupMethod::Posthoc => {
                let per_record = eps / group_size as f64;
                let d1 = setting.specific_delta(1, per_record)?;
                posthoc_group_adp_unclipped(per_record, d1, group_size)?.1
            }
        };
        points.push(PrivacyPoint::new(eps, raw));
    }
    let metadata = CurveMetadata {
        scheme: Some(setting.scheme),
        mechanism: Some(setting.mechanism),
        group_size: Some(group_size),
        iterations: None,
    };
    let tag = serde_json::to_value(method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Ok(PrivacyCurve::new(points, tag, metadata)?.monotone_repaired())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, hi: f64) -> Vec<f64> {
        (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn repair_examples() {
        let pts = vec![PrivacyPoint::new(0.0, 0.5), PrivacyPoint::new(1.0, 0.6), PrivacyPoint::new(2.0, 0.1)];
        let c = PrivacyCurve::new(pts, "x", CurveMetadata::default()).unwrap();
        let r = c.monotone_repaired();
        let ds: Vec<f64> = r.points.iter().map(|p| p.delta).collect();
        assert_eq!(ds, vec![0.5, 0.5, 0.1]);
        assert_eq!(r.monotone_repaired(), r);
    }

    #[test]
    fn clipping_flag() {
        let p = PrivacyPoint::new(1.0, 1.7);
        assert_eq!((p.delta, p.clipped), (1.0, true));
        assert!(!PrivacyPoint::new(1.0, 1.0).clipped);
    }

    #[test]
    fn specific_matches_agnostic_for_single_records() {
        let s = ProfileSetting::new(BaseMechanismSpec::gaussian(1.0), SubsamplingScheme::Poisson { rate: 0.1 });
        let g = grid(9, 4.0);
        let a = group_profile(&s, 1, GroupMethod::Specific, &g).unwrap();
        let b = group_profile(&s, 1, GroupMethod::Agnostic, &g).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.delta - y.delta).abs() <= 2e-6, "ε = {}: {} vs {}", x.epsilon, x.delta, y.delta);
        }
        assert_eq!(a.method, "specific");
    }

    #[test]
    fn specific_below_posthoc() {
        let s = ProfileSetting::new(BaseMechanismSpec::gaussian(2.0), SubsamplingScheme::Poisson { rate: 0.2 });
        let g = grid(17, 4.0);
        let a = group_profile(&s, 4, GroupMethod::Specific, &g).unwrap();
        let b = group_profile(&s, 4, GroupMethod::Posthoc, &g).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!(x.delta <= y.delta + 1e-9, "ε = {}: {} > {}", x.epsilon, x.delta, y.delta);
        }
    }

    #[test]
    fn invalid_inputs() {
        let s = ProfileSetting::new(BaseMechanismSpec::gaussian(1.0), SubsamplingScheme::Poisson { rate: 0.1 });
        assert!(group_profile(&s, 0, GroupMethod::Specific, &[0.0]).is_err());
        assert!(group_profile(&s, 1, GroupMethod::Specific, &[]).is_err());
        assert!(group_profile(&s, 1, GroupMethod::Specific, &[1.0, 0.5]).is_err());
        let wor = ProfileSetting::new(
            BaseMechanismSpec::gaussian(1.0),
            SubsamplingScheme::WithoutReplacement { dataset_size: 100, batch_size: 10 },
        );
        assert!(group_profile(&wor, 2, GroupMethod::Specific, &[1.0]).is_err());
        assert!(group_profile(&wor, 1, GroupMethod::Agnostic, &[1.0]).is_err());
        assert!(group_profile(&wor, 2, GroupMethod::Posthoc, &[1.0]).is_ok());
    }
}
