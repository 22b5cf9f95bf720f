//! Epoch-level bounds for permute-and-partition subsampling with two batches.
//!
//! Conditioning on which batch holds the modified record gives the moment of
//! the symmetrised products `½b₁⊗b₂ + ½b₂⊗b₁` vs `½b₁′⊗b₂ + ½b₂⊗b₁′`,
//! maximised over base outputs with `b₁ ≠ b₁′`. Gaussian bases release a
//! `{0, 1}`-valued function.

use super::{require_order, BaseMechanismSpec, RenyiBound};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_log_line, QuadOptions};
use crate::special::{log_add_exp, log_sum_exp, norm_logpdf};
use std::f64::consts::LN_2;

/// Conditional epoch bound `Λ_α` for a Gaussian or randomized-response base.
pub fn epoch_permute_partition_rdp(base: &BaseMechanismSpec, alpha: f64) -> Result<RenyiBound> {
    base.validate()?;
    require_order(alpha)?;
    let ln_moment = match *base {
        BaseMechanismSpec::RandomizedResponse { theta } => {
            let outputs = [theta, 1.0 - theta];
            let mut best = f64::NEG_INFINITY;
            for &b1 in &outputs {
                for &b1p in &outputs {
                    for &b2 in &outputs {
                        if b1 != b1p {
                            best = best.max(bernoulli_product_ln_renyi(b1, b1p, b2, alpha));
                        }
                    }
                }
            }
            if best == f64::NEG_INFINITY {
                // θ = ½: every base output is identical.
                0.0
            } else {
                best
            }
        }
        BaseMechanismSpec::Gaussian { sigma, l2 } => {
            let s = sigma / l2;
            let mut best = f64::NEG_INFINITY;
            for (m1, m1p) in [(0.0, 1.0), (1.0, 0.0)] {
                for m2 in [0.0, 1.0] {
                    best = best.max(gaussian_product_ln_renyi(m1, m1p, m2, s, alpha)?);
                }
            }
            best
        }
        BaseMechanismSpec::Laplace { .. } => {
            return Err(Error::UnsupportedMechanism("epoch bound supports Gaussian and randomized response".into()))
        }
    };
    Ok(RenyiBound { alpha, ln_moment })
}

/// Unconditional epoch bound: the base mechanism's own moment at distance 1.
pub fn epoch_unconditional_rdp(base: &BaseMechanismSpec, alpha: f64) -> Result<RenyiBound> {
    base.validate()?;
    require_order(alpha)?;
    if let BaseMechanismSpec::Laplace { .. } = base {
        return Err(Error::UnsupportedMechanism("epoch bound supports Gaussian and randomized response".into()));
    }
    Ok(RenyiBound { alpha, ln_moment: base.ln_renyi_at_distance(1, alpha) })
}

/// Exact `ln Λ_α` over `{0,1}²` for success probabilities `b₁, b₁′, b₂`.
fn bernoulli_product_ln_renyi(b1: f64, b1p: f64, b2: f64, alpha: f64) -> f64 {
    if b1 == b1p {
        return 0.0;
    }
    let pmf = |b: f64, z: usize| if z == 1 { b } else { 1.0 - b };
    let mix = |a: f64, c: f64, z1: usize, z2: usize| 0.5 * pmf(a, z1) * pmf(c, z2) + 0.5 * pmf(c, z1) * pmf(a, z2);
    let mut terms = Vec::with_capacity(4);
    for z1 in 0..2 {
        for z2 in 0..2 {
            let p = mix(b1, b2, z1, z2);
            let q = mix(b1p, b2, z1, z2);
            if p == 0.0 {
                continue;
            }
            if q == 0.0 {
                return f64::INFINITY;
            }
            terms.push(alpha * p.ln() + (1.0 - alpha) * q.ln());
        }
    }
    log_sum_exp(&terms)
}

/// `ln Λ_α` of the symmetrised Gaussian products by nested quadrature.
fn gaussian_product_ln_renyi(m1: f64, m1p: f64, m2: f64, s: f64, alpha: f64) -> Result<f64> {
    let lphi = |z: f64, m: f64| norm_logpdf((z - m) / s) - s.ln();
    let ln_mix = move |a: f64, c: f64, z1: f64, z2: f64| {
        -LN_2 + log_add_exp(lphi(z1, a) + lphi(z2, c), lphi(z1, c) + lphi(z2, a))
    };
    let mut anchors = vec![0.0, 1.0];
    for x in [0.0, 1.0] {
        for y in [0.0, 1.0] {
            anchors.push(alpha * x - (alpha - 1.0) * y);
        }
    }
    let inner_opts = QuadOptions { rel_tol: 1e-12, ..QuadOptions::default() };
    let inner = |z1: f64| -> f64 {
        integrate_log_line(
            |z2| alpha * ln_mix(m1, m2, z1, z2) + (1.0 - alpha) * ln_mix(m1p, m2, z1, z2),
            &anchors,
            s,
            &[],
            inner_opts,
        )
        .unwrap_or(f64::NAN)
    };
    let v = integrate_log_line(inner, &anchors, s, &[], QuadOptions::default())?;
    if v.is_nan() {
        return Err(Error::Numerical("inner epoch quadrature failed".into()));
    }
    Ok(v)
}
