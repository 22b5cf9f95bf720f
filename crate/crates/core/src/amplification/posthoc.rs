//! Generic group privacy applied after the fact to a single-record guarantee.

use crate::accounting::RdpCurve;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// `(Kε, Σ_{k<K} e^{kε}·δ)`, with `δ′` clipped to 1.
pub fn posthoc_group_adp(epsilon: f64, delta: f64, group_size: u64) -> Result<(f64, f64)> {
    let (e, d) = posthoc_group_adp_unclipped(epsilon, delta, group_size)?;
    Ok((e, d.min(1.0)))
}

pub(crate) fn posthoc_group_adp_unclipped(epsilon: f64, delta: f64, group_size: u64) -> Result<(f64, f64)> {
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    if !(epsilon >= 0.0) || !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("need ε ≥ 0 and δ ∈ [0, 1], got ({epsilon}, {delta})")));
    }
    let k = group_size as f64;
    // Σ_{k<K} e^{kε} = (e^{Kε} − 1)/(e^ε − 1).
    let factor = if epsilon == 0.0 { k } else { (k * epsilon).exp_m1() / epsilon.exp_m1() };
    Ok((k * epsilon, delta * factor))
}

/// RDP curve with possibly missing points: `None` where the orders needed
/// by the group transform were not covered by the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRdpCurve {
    pub points: Vec<(f64, Option<f64>)>,
}

impl GroupRdpCurve {
    /// The covered points as an ordinary curve.
    pub fn available(&self) -> Result<RdpCurve> {
        RdpCurve::new(self.points.iter().filter_map(|&(a, r)| r.map(|r| (a, r))).collect())
    }
}

/// Group of `group_size = 2^m` records from a single-record curve by `m`
/// applications of
/// `D_α ≤ (α − ½)/(α − 1)·D_{2α} + α/(α − 1)·D_{2α−1}`.
pub fn posthoc_group_rdp(curve: &RdpCurve, group_size: u64) -> Result<GroupRdpCurve> {
    if group_size == 0 || !group_size.is_power_of_two() {
        return Err(invalid(format!("group size must be a power of two, got {group_size}")));
    }
    let mut current: Vec<(f64, Option<f64>)> = curve.points().iter().map(|&(a, r)| (a, Some(r))).collect();
    for _ in 0..group_size.trailing_zeros() {
        let lookup = |alpha: f64| -> Option<f64> {
            current
                .iter()
                .find(|(a, _)| (a - alpha).abs() <= 1e-9 * alpha.max(1.0))
                .and_then(|&(_, r)| r)
        };
        let next = current
            .iter()
            .map(|&(alpha, _)| {
                let doubled = match (lookup(2.0 * alpha), lookup(2.0 * alpha - 1.0)) {
                    (Some(d2), Some(d1)) => {
                        Some((alpha - 0.5) / (alpha - 1.0) * d2 + alpha / (alpha - 1.0) * d1)
                    }
                    _ => None,
                };
                (alpha, doubled)
            })
            .collect();
        current = next;
    }
    Ok(GroupRdpCurve { points: current })
}
