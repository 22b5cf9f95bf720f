//! Closed-form RDP moment bounds for subsampled mechanisms.

use super::{batch_ratio, require_integer_order, require_order, require_rate, BaseMechanismSpec, RenyiBound};
use crate::divergence::bernoulli_ln_renyi;
use crate::error::{invalid, Result};
use crate::special::{ln_binom_pmf, ln_choose, ln_hypergeom_pmf, log_add_exp, log_sum_exp};
use std::f64::consts::LN_2;

/// Poisson insertion/removal: `Σ_{l=0}^{α} Binom(l|α, r)·Λ_l`, with `Λ_l`
/// the base moment at distance 1 (`Λ_0 = Λ_1 = 1`).
pub fn zhu_poisson_rdp(mech: &BaseMechanismSpec, r: f64, alpha: f64, include_factor2: bool) -> Result<RenyiBound> {
    mech.validate()?;
    require_rate(r)?;
    let a = require_integer_order(alpha)?;
    let terms: Vec<f64> = (0..=a).map(|l| ln_binom_pmf(l, a, r) + mech.ln_renyi_at_distance(1, l as f64)).collect();
    let factor = if include_factor2 { LN_2 } else { 0.0 };
    Ok(RenyiBound { alpha, ln_moment: factor + log_sum_exp(&terms) })
}

/// `ln(1 + 2·Σ_{l=2}^{α} C(α,l)·w^l·Λ_l)` with `Λ_l` at `distance`.
fn ternary_bound(mech: &BaseMechanismSpec, w: f64, a: u64, distance: u64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = (2..=a)
        .map(|l| ln_choose(a, l) + l as f64 * w.ln() + mech.ln_renyi_at_distance(distance, l as f64))
        .collect();
    log_add_exp(0.0, LN_2 + log_sum_exp(&terms))
}

/// WOR substitution baseline with `w = q/N` and the base moment at
/// substitution distance 1.
pub fn wang_wor_rdp(mech: &BaseMechanismSpec, dataset_size: u64, batch_size: u64, alpha: f64) -> Result<RenyiBound> {
    mech.validate()?;
    let a = require_integer_order(alpha)?;
    let w = batch_ratio(dataset_size, batch_size)?;
    Ok(RenyiBound { alpha, ln_moment: ternary_bound(mech, w, a, 1) })
}

/// WOR substitution via the hybrid relation: the ternary bound with the
/// base moment at insertion/removal distance 2.
pub fn hybrid_wor_substitution_rdp(
    mech: &BaseMechanismSpec,
    dataset_size: u64,
    batch_size: u64,
    alpha: f64,
) -> Result<RenyiBound> {
    mech.validate()?;
    let a = require_integer_order(alpha)?;
    let w = batch_ratio(dataset_size, batch_size)?;
    Ok(RenyiBound { alpha, ln_moment: ternary_bound(mech, w, a, 2) })
}

/// Tight randomized response under WOR substitution, `w = q/N`:
/// `max_τ Λ_α((1−w)Bern(θ) + w·Bern(τ) ‖ (1−w)Bern(θ) + w·Bern(1−τ))`.
pub fn rr_wor_tight_rdp(theta: f64, dataset_size: u64, batch_size: u64, alpha: f64) -> Result<RenyiBound> {
    BaseMechanismSpec::randomized_response(theta).validate()?;
    require_order(alpha)?;
    let w = batch_ratio(dataset_size, batch_size)?;
    let ln_moment = [theta, 1.0 - theta]
        .into_iter()
        .map(|tau| {
            let p = (1.0 - w) * theta + w * tau;
            let q = (1.0 - w) * theta + w * (1.0 - tau);
            bernoulli_ln_renyi(p, q, alpha)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RenyiBound { alpha, ln_moment })
}

/// WOR with batch size `q` under insertion/removal: the maximum over
/// `N ∈ [min_dataset_size + 1, max_dataset_size]` of
/// `2·Σ_l Binom(l|α, q/N)·Λ_l` with `Λ_l` at distance 2.
/// `max_dataset_size` defaults to `min_dataset_size + 10⁴`.
pub fn wor_insertion_removal_rdp(
    mech: &BaseMechanismSpec,
    min_dataset_size: u64,
    batch_size: u64,
    alpha: f64,
    max_dataset_size: Option<u64>,
) -> Result<RenyiBound> {
    mech.validate()?;
    let a = require_integer_order(alpha)?;
    let lo = (min_dataset_size + 1).max(batch_size.max(1));
    let hi = max_dataset_size.unwrap_or(min_dataset_size + 10_000);
    if hi < lo {
        return Err(invalid(format!("empty dataset-size scan range [{lo}, {hi}]")));
    }
    let moments: Vec<f64> = (0..=a).map(|l| mech.ln_renyi_at_distance(2, l as f64)).collect();
    let mut best = f64::NEG_INFINITY;
    for n in lo..=hi {
        let w = batch_size as f64 / n as f64;
        let terms: Vec<f64> = (0..=a).map(|l| ln_binom_pmf(l, a, w) + moments[l as usize]).collect();
        best = best.max(LN_2 + log_sum_exp(&terms));
    }
    Ok(RenyiBound { alpha, ln_moment: best })
}

/// Node-level (group of `K` records) WOR substitution:
/// `Σ_k HyperGeom(k|N, K, q)·Λ_α` with `Λ_α` at substitution distance `k`.
pub fn node_group_wor_rdp(
    mech: &BaseMechanismSpec,
    dataset_size: u64,
    group_size: u64,
    batch_size: u64,
    alpha: f64,
) -> Result<RenyiBound> {
    mech.validate()?;
    require_order(alpha)?;
    if group_size > dataset_size || batch_size > dataset_size {
        return Err(invalid(format!(
            "hypergeometric parameters need K ≤ N and q ≤ N, got N = {dataset_size}, K = {group_size}, q = {batch_size}"
        )));
    }
    let terms: Vec<f64> = (0..=group_size.min(batch_size))
        .map(|k| ln_hypergeom_pmf(k, dataset_size, group_size, batch_size) + mech.ln_renyi_at_distance(k, alpha))
        .collect();
    Ok(RenyiBound { alpha, ln_moment: log_sum_exp(&terms) })
}
