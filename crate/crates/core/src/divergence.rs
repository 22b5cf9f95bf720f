//! Hockey-stick divergence `H_α(p‖q) = ∫ max(p − αq, 0)` and Rényi moment
//! `Λ_α(p‖q) = ∫ p^α q^{1−α}` of mixture pairs.
//!
//! Bernoulli pairs are summed exactly. Continuous pairs use adaptive
//! quadrature, bisection on a monotone privacy loss, or closed forms for
//! single-component pairs.

use crate::amplification::BoundCandidateSet;
use crate::error::{Error, Result};
use crate::mixtures::{default_bracket, loss_bracket, privacy_loss, ComponentFamily, MixtureDistribution, DEFAULT_BISECTION_TOL};
use crate::quadrature::{integrate, integrate_log_line, log_window, panel_points, QuadOptions};
use crate::special::{log_add_exp, norm_cdf};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// `H_α`, with `δ(ε) = H_{e^ε}`.
    HockeyStick,
    /// `Λ_α`, with `ρ = log Λ_α / (α − 1)`.
    Renyi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact for Bernoulli, closed form for single-component pairs, otherwise
    /// loss bisection (`H`) or quadrature (`Λ`). `H` falls back to quadrature
    /// when the privacy loss is not monotone.
    Auto,
    Exact,
    Quadrature,
    LossBisection,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Never below the true value.
    Pessimistic,
    /// Never above the true value.
    Optimistic,
    Point,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub method: Method,
    /// Only loss bisection distinguishes directions.
    pub direction: Direction,
    pub bisection_tol: f64,
    pub quad: QuadOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            direction: Direction::Pessimistic,
            bisection_tol: DEFAULT_BISECTION_TOL,
            quad: QuadOptions::default(),
        }
    }
}

impl EvalOptions {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub value: f64,
    /// `ln(value)`; finite where `value` would overflow.
    pub ln_value: f64,
    pub method: Method,
    pub direction: Direction,
}

impl DivergenceValue {
    fn hockey(value: f64, method: Method, direction: Direction) -> Self {
        let value = value.clamp(0.0, 1.0);
        Self { value, ln_value: value.ln(), method, direction }
    }

    fn renyi(ln_value: f64, method: Method, direction: Direction) -> Self {
        Self { value: ln_value.exp(), ln_value, method, direction }
    }

    /// Rényi divergence `ln Λ_α / (α − 1)`.
    pub fn rho(&self, alpha: f64) -> f64 {
        self.ln_value / (alpha - 1.0)
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// `H_α(N(Δ, 1) ‖ N(0, 1))` for `t = Δ/σ ≥ 0`.
pub fn gaussian_hockey_stick(t: f64, alpha: f64) -> f64 {
    let t = t.abs();
    if alpha == 0.0 {
        return 1.0;
    }
    if t == 0.0 {
        return (1.0 - alpha).max(0.0);
    }
    let la = alpha.ln();
    let v = norm_cdf(t / 2.0 - la / t) - alpha * norm_cdf(-t / 2.0 - la / t);
    v.clamp(0.0, 1.0)
}

/// `H_α(Lap(Δ, 1) ‖ Lap(0, 1))` for `t = Δ/λ ≥ 0`.
pub fn laplace_hockey_stick(t: f64, alpha: f64) -> f64 {
    let t = t.abs();
    if alpha == 0.0 {
        return 1.0;
    }
    if alpha >= 1.0 {
        let eps = alpha.ln();
        if eps >= t {
            0.0
        } else {
            -((eps - t) / 2.0).exp_m1()
        }
    } else {
        // H_α(P‖Q) = 1 − α + α·H_{1/α}(Q‖P); the pair is symmetric.
        1.0 - alpha + alpha * laplace_hockey_stick(t, 1.0 / alpha)
    }
}

/// `ln Λ_α(N(Δ, 1) ‖ N(0, 1)) = α(α−1)t²/2` for `t = Δ/σ`.
pub fn gaussian_ln_renyi(t: f64, alpha: f64) -> f64 {
    alpha * (alpha - 1.0) * t * t / 2.0
}

/// `ln Λ_α(Lap(Δ, 1) ‖ Lap(0, 1))` for `t = Δ/λ`.
pub fn laplace_ln_renyi(t: f64, alpha: f64) -> f64 {
    let t = t.abs();
    (alpha / (2.0 * alpha - 1.0)).ln()
        + (alpha - 1.0) * t
        + ((alpha - 1.0) / alpha * (-(2.0 * alpha - 1.0) * t).exp()).ln_1p()
}

/// `H_α(Bern(p) ‖ Bern(q))`.
pub fn bernoulli_hockey_stick(p: f64, q: f64, alpha: f64) -> f64 {
    ((p - alpha * q).max(0.0) + ((1.0 - p) - alpha * (1.0 - q)).max(0.0)).clamp(0.0, 1.0)
}

/// `ln Λ_α(Bern(p) ‖ Bern(q))`; `+inf` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn bernoulli_ln_renyi(p: f64, q: f64, alpha: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    let term = |pz: f64, qz: f64| -> f64 {
        if pz == 0.0 {
            f64::NEG_INFINITY
        } else if qz == 0.0 {
            f64::INFINITY
        } else {
            alpha * pz.ln() + (1.0 - alpha) * qz.ln()
        }
    };
    log_add_exp(term(p, q), term(1.0 - p, 1.0 - q))
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn same_family(p: &MixtureDistribution, q: &MixtureDistribution) -> Result<ComponentFamily> {
    if p.family() != q.family() {
        return Err(Error::Precondition(format!(
            "divergence needs a common family: {:?} vs {:?}",
            p.family(),
            q.family()
        )));
    }
    Ok(p.family())
}

/// Location of a single effective component, if the mixture has one.
fn single_location(m: &MixtureDistribution) -> Option<f64> {
    let mut it = m.support();
    let first = it.next()?;
    if it.all(|c| c.location == first.location) {
        Some(first.location)
    } else {
        None
    }
}

fn resolve(method: Method, family: ComponentFamily, p: &MixtureDistribution, q: &MixtureDistribution, kind: DivergenceKind) -> Method {
    if method != Method::Auto {
        return method;
    }
    if !family.is_continuous() {
        return Method::Exact;
    }
    if single_location(p).is_some() && single_location(q).is_some() {
        return Method::ClosedForm;
    }
    match kind {
        DivergenceKind::HockeyStick => Method::LossBisection,
        DivergenceKind::Renyi => Method::Quadrature,
    }
}

/// `H_α(p‖q)`.
pub fn hockey_stick(p: &MixtureDistribution, q: &MixtureDistribution, alpha: f64, opts: &EvalOptions) -> Result<DivergenceValue> {
    if !(alpha >= 0.0) || alpha.is_nan() {
        return Err(Error::UnsupportedOrder(format!("hockey-stick order must be ≥ 0, got {alpha}")));
    }
    let family = same_family(p, q)?;
    let method = resolve(opts.method, family, p, q, DivergenceKind::HockeyStick);
    match (method, family) {
        (Method::Exact, ComponentFamily::Bernoulli) => {
            let v = bernoulli_hockey_stick(p.success_probability()?, q.success_probability()?, alpha);
            Ok(DivergenceValue::hockey(v, Method::Exact, Direction::Point))
        }
        (_, ComponentFamily::Bernoulli) => {
            Err(Error::UnsupportedFamily("Bernoulli divergences are evaluated exactly only".into()))
        }
        (Method::Exact, _) => Err(Error::UnsupportedFamily("exact evaluation of a continuous pair".into())),
        (Method::ClosedForm, fam) => {
            let (mp, mq) = match (single_location(p), single_location(q)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::UnsupportedFamily("closed form needs single-component mixtures".into())),
            };
            let s = fam.scale().expect("continuous family");
            let t = (mp - mq).abs() / s;
            let v = match fam {
                ComponentFamily::Gaussian { .. } => gaussian_hockey_stick(t, alpha),
                _ => laplace_hockey_stick(t, alpha),
            };
            Ok(DivergenceValue::hockey(v, Method::ClosedForm, Direction::Point))
        }
        (Method::Quadrature, fam) => {
            let v = hockey_quadrature(p, q, alpha, fam, opts.quad)?;
            Ok(DivergenceValue::hockey(v, Method::Quadrature, Direction::Point))
        }
        (Method::LossBisection, fam) => match hockey_bisection(p, q, alpha, fam, opts.direction, opts.bisection_tol) {
            Ok(v) => Ok(DivergenceValue::hockey(v, Method::LossBisection, opts.direction)),
            Err(Error::Precondition(_)) if opts.method == Method::Auto => {
                let v = hockey_quadrature(p, q, alpha, fam, opts.quad)?;
                Ok(DivergenceValue::hockey(v, Method::Quadrature, Direction::Point))
            }
            Err(e) => Err(e),
        },
        (Method::Auto, _) => unreachable!("resolved above"),
    }
}

/// `Λ_α(p‖q)` for `α > 1`.
pub fn renyi_moment(p: &MixtureDistribution, q: &MixtureDistribution, alpha: f64, opts: &EvalOptions) -> Result<DivergenceValue> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::UnsupportedOrder(format!("Rényi order must be finite and > 1, got {alpha}")));
    }
    let family = same_family(p, q)?;
    let method = resolve(opts.method, family, p, q, DivergenceKind::Renyi);
    match (method, family) {
        (Method::Exact, ComponentFamily::Bernoulli) => {
            let lv = bernoulli_ln_renyi(p.success_probability()?, q.success_probability()?, alpha);
            Ok(DivergenceValue::renyi(lv, Method::Exact, Direction::Point))
        }
        (_, ComponentFamily::Bernoulli) => {
            Err(Error::UnsupportedFamily("Bernoulli divergences are evaluated exactly only".into()))
        }
        (Method::ClosedForm, fam) => {
            let (mp, mq) = match (single_location(p), single_location(q)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::UnsupportedFamily("closed form needs single-component mixtures".into())),
            };
            let t = (mp - mq).abs() / fam.scale().expect("continuous family");
            let lv = match fam {
                ComponentFamily::Gaussian { .. } => gaussian_ln_renyi(t, alpha),
                _ => laplace_ln_renyi(t, alpha),
            };
            Ok(DivergenceValue::renyi(lv, Method::ClosedForm, Direction::Point))
        }
        (Method::Quadrature, fam) => {
            let lv = renyi_quadrature(p, q, alpha, fam, opts.quad)?;
            Ok(DivergenceValue::renyi(lv, Method::Quadrature, Direction::Point))
        }
        (Method::Exact, _) => Err(Error::UnsupportedFamily("exact evaluation of a continuous pair".into())),
        (Method::LossBisection, _) => {
            Err(Error::UnsupportedFamily("loss bisection applies to hockey-stick divergences only".into()))
        }
        (Method::Auto, _) => unreachable!("resolved above"),
    }
}

pub fn divergence(
    p: &MixtureDistribution,
    q: &MixtureDistribution,
    alpha: f64,
    kind: DivergenceKind,
    opts: &EvalOptions,
) -> Result<DivergenceValue> {
    match kind {
        DivergenceKind::HockeyStick => hockey_stick(p, q, alpha, opts),
        DivergenceKind::Renyi => renyi_moment(p, q, alpha, opts),
    }
}

/// Pointwise maximum of the divergence over all candidate pairs.
pub fn divergence_of_candidates(
    candidates: &BoundCandidateSet,
    alpha: f64,
    kind: DivergenceKind,
    opts: &EvalOptions,
) -> Result<DivergenceValue> {
    let mut best: Option<DivergenceValue> = None;
    for (p, q) in candidates.pairs() {
        let v = divergence(p, q, alpha, kind, opts)?;
        if best.map_or(true, |b| v.ln_value > b.ln_value) {
            best = Some(v);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty candidate set".into()))
}

// ---------------------------------------------------------------------------
// Numerical routes
// ---------------------------------------------------------------------------

fn anchors_and_kinks(p: &MixtureDistribution, q: &MixtureDistribution, fam: ComponentFamily) -> (Vec<f64>, Vec<f64>) {
    let anchors: Vec<f64> = p.support().chain(q.support()).map(|c| c.location).collect();
    let kinks = match fam {
        ComponentFamily::Laplace { .. } => anchors.clone(),
        _ => Vec::new(),
    };
    (anchors, kinks)
}

fn hockey_quadrature(p: &MixtureDistribution, q: &MixtureDistribution, alpha: f64, fam: ComponentFamily, opts: QuadOptions) -> Result<f64> {
    let s = fam.scale().expect("continuous family");
    let (anchors, kinks) = anchors_and_kinks(p, q, fam);
    let log_p = |z: f64| p.log_density(z).unwrap_or(f64::NEG_INFINITY);
    let (lo, hi, _) = log_window(&log_p, &anchors, s, 75.0)?;
    let pts = panel_points(lo, hi, s, &kinks, 4000);
    let f = |z: f64| (p.density(z).unwrap_or(0.0) - alpha * q.density(z).unwrap_or(0.0)).max(0.0);
    Ok(integrate(f, &pts, opts)?.value)
}

fn renyi_quadrature(p: &MixtureDistribution, q: &MixtureDistribution, alpha: f64, fam: ComponentFamily, opts: QuadOptions) -> Result<f64> {
    let s = fam.scale().expect("continuous family");
    let (mut anchors, kinks) = anchors_and_kinks(p, q, fam);
    if let ComponentFamily::Gaussian { .. } = fam {
        // Peaks of p_i^α q_j^{1−α} for each component pair.
        for ci in p.support() {
            for cj in q.support() {
                anchors.push(alpha * ci.location - (alpha - 1.0) * cj.location);
            }
        }
    }
    let log_f = |z: f64| {
        let lp = p.log_density(z).unwrap_or(f64::NEG_INFINITY);
        let lq = q.log_density(z).unwrap_or(f64::NEG_INFINITY);
        if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            alpha * lp + (1.0 - alpha) * lq
        }
    };
    integrate_log_line(log_f, &anchors, s, &kinks, opts)
}

/// Checks that the privacy loss is nondecreasing on a uniform sample of `[lo, hi]`.
fn check_monotone(p: &MixtureDistribution, q: &MixtureDistribution, lo: f64, hi: f64) -> Result<()> {
    const SAMPLES: usize = 256;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=SAMPLES {
        let z = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let l = privacy_loss(p, q, z)?;
        if l < prev - 1e-9 * (1.0 + prev.abs()) {
            return Err(Error::Precondition(format!("privacy loss decreases near z = {z}")));
        }
        prev = prev.max(l);
    }
    Ok(())
}

/// `Pr_P[L > log α] − α·Pr_Q[L > log α]` bracketed by bisection on `L`.
///
/// With `L` nondecreasing, `g(t) = P(Z > t) − α·Q(Z > t)` peaks at the
/// crossing `z*`. For `z* ∈ [a, b]`: `max(g(a), g(b)) ≤ H ≤ P(Z > a) − α·Q(Z > b)`.
fn hockey_bisection(
    p: &MixtureDistribution,
    q: &MixtureDistribution,
    alpha: f64,
    fam: ComponentFamily,
    direction: Direction,
    tol: f64,
) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let target = alpha.ln();
    let (mut lo, mut hi) = default_bracket(p, q)?;
    check_monotone(p, q, lo, hi)?;
    let g = |t: f64| -> Result<f64> { Ok(p.sf(t)? - alpha * q.sf(t)?) };
    let flat_tails = matches!(fam, ComponentFamily::Laplace { .. });
    let width = hi - lo;

    if !flat_tails {
        let mut step = width;
        while privacy_loss(p, q, hi)? <= target && p.sf(hi)? > 0.0 {
            hi += step;
            step *= 2.0;
        }
        step = width;
        while privacy_loss(p, q, lo)? > target && q.cdf(lo)? > 0.0 {
            lo -= step;
            step *= 2.0;
        }
    }

    if privacy_loss(p, q, hi)? <= target {
        // {L > log α} lies right of `hi`: empty for flat tails, P-negligible otherwise.
        if flat_tails {
            return Ok(0.0);
        }
        return Ok(match direction {
            Direction::Pessimistic => p.sf(hi)?,
            _ => g(hi)?.max(0.0),
        });
    }
    if privacy_loss(p, q, lo)? > target {
        if flat_tails {
            return Ok((1.0 - alpha).max(0.0));
        }
        return Ok(match direction {
            Direction::Pessimistic => 1.0 - alpha * q.sf(lo)?,
            _ => g(lo)?,
        }
        .max(0.0));
    }
    let (a, b) = loss_bracket(p, q, target, (lo, hi), tol)?;
    let v = match direction {
        Direction::Pessimistic => p.sf(a)? - alpha * q.sf(b)?,
        Direction::Optimistic => g(a)?.max(g(b)?),
        Direction::Point => g(0.5 * (a + b))?,
    };
    Ok(v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss(sigma: f64, comps: Vec<(f64, f64)>) -> MixtureDistribution {
        MixtureDistribution::new(ComponentFamily::Gaussian { sigma }, comps).unwrap()
    }

    fn bern(p: f64) -> MixtureDistribution {
        MixtureDistribution::bernoulli(p).unwrap()
    }

    fn quad() -> EvalOptions {
        EvalOptions::with_method(Method::Quadrature)
    }

    #[test]
    fn hockey_stick_examples() {
        let opts = EvalOptions::default();
        assert_relative_eq!(hockey_stick(&bern(0.75), &bern(0.25), 1.0, &opts).unwrap().value, 0.5, epsilon = 1e-15);
        assert_eq!(hockey_stick(&bern(0.3), &bern(0.3), 1.0, &opts).unwrap().value, 0.0);
        let (p, q) = (gauss(1.0, vec![(1.0, 0.0)]), gauss(1.0, vec![(1.0, 1.0)]));
        let expected = 2.0 * norm_cdf(0.5) - 1.0;
        assert_relative_eq!(expected, 0.382_924_922_548_026, epsilon = 1e-12);
        assert_relative_eq!(hockey_stick(&p, &q, 1.0, &quad()).unwrap().value, expected, epsilon = 1e-10);
        assert_relative_eq!(hockey_stick(&p, &q, 1.0, &opts).unwrap().value, expected, epsilon = 1e-14);
    }

    #[test]
    fn renyi_examples() {
        let opts = EvalOptions::default();
        assert_relative_eq!(renyi_moment(&bern(0.75), &bern(0.25), 2.0, &opts).unwrap().value, 7.0 / 3.0, epsilon = 1e-14);
        let (p, q) = (gauss(1.0, vec![(1.0, 0.0)]), gauss(1.0, vec![(1.0, 1.0)]));
        assert_relative_eq!(renyi_moment(&p, &q, 2.0, &opts).unwrap().value, std::f64::consts::E, epsilon = 1e-14);
        assert_relative_eq!(renyi_moment(&p, &q, 2.0, &quad()).unwrap().value, std::f64::consts::E, max_relative = 1e-10);
        assert_relative_eq!(renyi_moment(&p, &p, 3.5, &quad()).unwrap().value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn renyi_quadrature_at_large_order() {
        let (p, q) = (gauss(2.0, vec![(1.0, 1.0)]), gauss(2.0, vec![(1.0, 0.0)]));
        let lv = renyi_moment(&p, &q, 200.0, &quad()).unwrap().ln_value;
        assert_relative_eq!(lv, gaussian_ln_renyi(0.5, 200.0), max_relative = 1e-9);
    }

    #[test]
    fn laplace_closed_forms_match_quadrature() {
        let fam = ComponentFamily::Laplace { scale: 0.7 };
        let p = MixtureDistribution::point(fam, 1.0).unwrap();
        let q = MixtureDistribution::point(fam, 0.0).unwrap();
        for &alpha in &[0.0, 0.3, 1.0, 1.5, 3.0, 10.0] {
            let cf = hockey_stick(&p, &q, alpha, &EvalOptions::default()).unwrap().value;
            let qd = hockey_stick(&p, &q, alpha, &quad()).unwrap().value;
            assert_relative_eq!(cf, qd, epsilon = 1e-10);
        }
        for &alpha in &[1.5, 2.0, 7.0] {
            let cf = renyi_moment(&p, &q, alpha, &EvalOptions::default()).unwrap().ln_value;
            let qd = renyi_moment(&p, &q, alpha, &quad()).unwrap().ln_value;
            assert_relative_eq!(cf, qd, max_relative = 1e-9);
        }
    }

    #[test]
    fn gaussian_closed_form_hockey_matches_quadrature() {
        let p = gauss(1.3, vec![(1.0, 2.0)]);
        let q = gauss(1.3, vec![(1.0, 0.0)]);
        for &alpha in &[0.0, 0.2, 1.0, 2.0, 20.0] {
            let cf = hockey_stick(&p, &q, alpha, &EvalOptions::default()).unwrap().value;
            let qd = hockey_stick(&p, &q, alpha, &quad()).unwrap().value;
            assert_relative_eq!(cf, qd, epsilon = 1e-10);
        }
    }

    #[test]
    fn bisection_brackets_quadrature_on_group_pair() {
        let p = gauss(2.0, vec![(0.64, 0.0), (0.32, 1.0), (0.04, 2.0)]);
        let q = gauss(2.0, vec![(1.0, 0.0)]);
        for &eps in &[0.0, 0.1, 0.5, 1.0, 2.0] {
            let alpha = f64::exp(eps);
            let truth = hockey_stick(&p, &q, alpha, &quad()).unwrap().value;
            let base = EvalOptions::with_method(Method::LossBisection);
            let pess = hockey_stick(&p, &q, alpha, &base).unwrap().value;
            let opt = hockey_stick(&p, &q, alpha, &base.with_direction(Direction::Optimistic)).unwrap().value;
            assert!(opt <= truth + 1e-10 && truth <= pess + 1e-10, "eps={eps}: {opt} {truth} {pess}");
            assert!(pess - opt <= 2e-6);
        }
    }

    #[test]
    fn bisection_on_laplace_group_pair() {
        let fam = ComponentFamily::Laplace { scale: 1.0 };
        let p = MixtureDistribution::new(fam, vec![(0.64, 0.0), (0.32, 1.0), (0.04, 2.0)]).unwrap();
        let q = MixtureDistribution::new(fam, vec![(0.8, 0.0), (0.2, -1.0)]).unwrap();
        for &alpha in &[0.5, 1.0, 1.3, 2.0, 5.0] {
            let truth = hockey_stick(&p, &q, alpha, &quad()).unwrap().value;
            let base = EvalOptions::with_method(Method::LossBisection);
            let pess = hockey_stick(&p, &q, alpha, &base).unwrap().value;
            let opt = hockey_stick(&p, &q, alpha, &base.with_direction(Direction::Optimistic)).unwrap().value;
            assert!(opt <= truth + 1e-10 && truth <= pess + 1e-10, "alpha={alpha}: {opt} {truth} {pess}");
        }
    }

    #[test]
    fn bisection_rejects_decreasing_loss() {
        let (p, q) = (gauss(1.0, vec![(1.0, 0.0)]), gauss(1.0, vec![(1.0, 1.0)]));
        let opts = EvalOptions::with_method(Method::LossBisection);
        assert!(matches!(hockey_stick(&p, &q, 1.0, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn method_family_mismatches_are_errors() {
        let g = gauss(1.0, vec![(1.0, 0.0)]);
        assert!(matches!(
            hockey_stick(&g, &g, 1.0, &EvalOptions::with_method(Method::Exact)),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(matches!(
            hockey_stick(&bern(0.5), &bern(0.5), 1.0, &quad()),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(renyi_moment(&g, &g, 1.0, &EvalOptions::default()).is_err());
        assert!(hockey_stick(&g, &g, -1.0, &EvalOptions::default()).is_err());
    }

    #[test]
    fn bernoulli_renyi_infinite_when_not_absolutely_continuous() {
        assert_eq!(bernoulli_ln_renyi(0.5, 1.0, 2.0), f64::INFINITY);
        assert_eq!(bernoulli_ln_renyi(1.0, 1.0, 2.0), 0.0);
    }
}
