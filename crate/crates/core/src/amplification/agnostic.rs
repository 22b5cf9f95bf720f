//! Mechanism-agnostic group bounds for Poisson subsampling, driven only by
//! the base mechanism's profile at each group distance.

use super::{require_integer_order, require_rate, BaseMechanismSpec, RenyiBound};
use crate::error::{invalid, Result};
use crate::special::{inclusion_prob, ln_binom_pmf, log_sum_exp};

/// `(ε′, δ′)` with `ε′ = log(1 + w(e^ε − 1))`, `w = 1 − (1−r)^K` and
/// `δ′ = Σ_{k=1}^{K} Binom(k|K, r)·δ_k(ε)`, clipped to `[0, 1]`.
pub fn balle_group_adp(mech: &BaseMechanismSpec, r: f64, group_size: u64, epsilon: f64) -> Result<(f64, f64)> {
    mech.validate()?;
    require_rate(r)?;
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid(format!("ε must be ≥ 0, got {epsilon}")));
    }
    let w = inclusion_prob(r, group_size);
    let eps_prime = (w * epsilon.exp_m1()).ln_1p();
    let alpha = epsilon.exp();
    let delta: f64 = (1..=group_size)
        .map(|k| ln_binom_pmf(k, group_size, r).exp() * mech.hockey_stick_at_distance(k, alpha))
        .sum();
    Ok((eps_prime, delta.clamp(0.0, 1.0)))
}

/// [`balle_group_adp`] evaluated at a target `ε′` by inverting the ε map.
pub fn balle_group_delta(mech: &BaseMechanismSpec, r: f64, group_size: u64, eps_prime: f64) -> Result<f64> {
    require_rate(r)?;
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    let w = inclusion_prob(r, group_size);
    if w == 0.0 {
        mech.validate()?;
        return Ok(0.0);
    }
    let eps = (eps_prime.max(0.0).exp_m1() / w).ln_1p();
    Ok(balle_group_adp(mech, r, group_size, eps)?.1)
}

/// Agnostic group RDP moment for integer `α`:
/// `Σ_k (1/w)·Binom(k|K, r)·Σ_l Binom(l|α, w)·ζ_k(l)`, `w = 1 − (1−r)^K`,
/// with `ζ_k(l)` the base moment at distance `k`. `include_factor2` doubles it.
pub fn agnostic_group_rdp(
    mech: &BaseMechanismSpec,
    r: f64,
    group_size: u64,
    alpha: f64,
    include_factor2: bool,
) -> Result<RenyiBound> {
    mech.validate()?;
    require_rate(r)?;
    let a = require_integer_order(alpha)?;
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    let w = inclusion_prob(r, group_size);
    let factor = if include_factor2 { std::f64::consts::LN_2 } else { 0.0 };
    if w == 0.0 {
        return Ok(RenyiBound { alpha, ln_moment: factor });
    }
    let outer: Vec<f64> = (1..=group_size)
        .map(|k| {
            let inner: Vec<f64> = (0..=a)
                .map(|l| ln_binom_pmf(l, a, w) + mech.ln_renyi_at_distance(k, l as f64))
                .collect();
            ln_binom_pmf(k, group_size, r) - w.ln() + log_sum_exp(&inner)
        })
        .collect();
    Ok(RenyiBound { alpha, ln_moment: factor + log_sum_exp(&outer) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::zhu_poisson_rdp;
    use approx::assert_relative_eq;

    #[test]
    fn balle_epsilon_example() {
        let (e, _) = balle_group_adp(&BaseMechanismSpec::gaussian(1.0), 0.5, 2, 1.0).unwrap();
        assert_relative_eq!(e, (1.0 + 0.75 * (1f64.exp() - 1.0)).ln(), epsilon = 1e-15);
        assert_relative_eq!(e, 0.827_988_94, epsilon = 1e-8);
    }

    #[test]
    fn balle_zero_rate() {
        assert_eq!(balle_group_adp(&BaseMechanismSpec::gaussian(1.0), 0.0, 3, 1.0).unwrap(), (0.0, 0.0));
        assert_eq!(balle_group_delta(&BaseMechanismSpec::gaussian(1.0), 0.0, 3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn balle_rr_uses_unit_profile() {
        let rr = BaseMechanismSpec::randomized_response(0.8);
        let (_, d) = balle_group_adp(&rr, 0.3, 3, 0.5).unwrap();
        let d1 = rr.hockey_stick_at_distance(1, 0.5f64.exp());
        assert_relative_eq!(d, (1.0 - 0.7f64.powi(3)) * d1, epsilon = 1e-15);
    }

    #[test]
    fn balle_delta_inverts_epsilon_map() {
        let g = BaseMechanismSpec::gaussian(2.0);
        let (e, d) = balle_group_adp(&g, 0.2, 3, 0.7).unwrap();
        assert_relative_eq!(balle_group_delta(&g, 0.2, 3, e).unwrap(), d, epsilon = 1e-12);
    }

    #[test]
    fn agnostic_rdp_examples() {
        let g = BaseMechanismSpec::gaussian(1.0);
        let v = agnostic_group_rdp(&g, 0.1, 1, 2.0, false).unwrap();
        assert_relative_eq!(v.moment(), 0.81 + 0.18 + 0.01 * std::f64::consts::E, epsilon = 1e-14);
        assert_relative_eq!(v.moment(), 1.017_182_8, epsilon = 1e-7);
        for alpha in [2.0, 5.0, 17.0] {
            let z = zhu_poisson_rdp(&g, 0.13, alpha, false).unwrap();
            let a = agnostic_group_rdp(&g, 0.13, 1, alpha, false).unwrap();
            assert_relative_eq!(a.ln_moment, z.ln_moment, max_relative = 1e-12);
        }
        assert_eq!(agnostic_group_rdp(&g, 0.0, 4, 3.0, false).unwrap().ln_moment, 0.0);
        assert!(agnostic_group_rdp(&g, 0.1, 2, 2.5, false).is_err());
    }

    #[test]
    fn agnostic_rdp_factor_two() {
        let g = BaseMechanismSpec::gaussian(1.0);
        let a = agnostic_group_rdp(&g, 0.1, 2, 3.0, false).unwrap();
        let b = agnostic_group_rdp(&g, 0.1, 2, 3.0, true).unwrap();
        assert_relative_eq!(b.moment(), 2.0 * a.moment(), max_relative = 1e-14);
    }
}
