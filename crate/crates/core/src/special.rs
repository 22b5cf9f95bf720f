//! Scalar special functions: normal and Laplace tails, log-space sums,
//! binomial and hypergeometric weights.

use statrs::function::erf::erfc;
use std::f64::consts::{LN_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF, accurate in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn norm_logpdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// CDF of the unit-scale Laplace distribution centred at 0.
pub fn laplace_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

pub fn laplace_sf(x: f64) -> f64 {
    laplace_cdf(-x)
}

pub fn laplace_logpdf(x: f64) -> f64 {
    -x.abs() - LN_2
}

/// `log(Σ exp(x_i))`; `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln C(n, k)` by a product of ratios; relative error O(min(k, n-k)·eps).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).ln())
        .sum()
}

/// `ln Binom(k | n, p)`.
pub fn ln_binom_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let head = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let tail = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    ln_choose(n, k) + head + tail
}

pub fn binom_pmf(k: u64, n: u64, p: f64) -> f64 {
    ln_binom_pmf(k, n, p).exp()
}

/// `Binom(0..=n | n, p)`.
pub fn binom_weights(n: u64, p: f64) -> Vec<f64> {
    (0..=n).map(|k| binom_pmf(k, n, p)).collect()
}

/// `ln HyperGeom(k | population, successes, draws)`: the probability that
/// `k` of `draws` items taken without replacement are among `successes`.
pub fn ln_hypergeom_pmf(k: u64, population: u64, successes: u64, draws: u64) -> f64 {
    if k > successes || k > draws || draws - k > population - successes {
        return f64::NEG_INFINITY;
    }
    ln_choose(successes, k) + ln_choose(population - successes, draws - k)
        - ln_choose(population, draws)
}

/// `1 - (1 - r)^k`, accurate for small `r`.
pub fn inclusion_prob(r: f64, k: u64) -> f64 {
    if r >= 1.0 {
        return if k == 0 { 0.0 } else { 1.0 };
    }
    -(k as f64 * (-r).ln_1p()).exp_m1()
}
