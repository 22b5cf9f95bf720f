//! Grid-discretised privacy loss distributions.
//!
//! A PLD stores the law of `L = log(p(Z)/q(Z))`, `Z ~ P`, on the grid
//! `{i·h}` plus an atom at `+∞`. Pessimistic PLDs round losses up and send
//! discarded upper tails to `+∞`; optimistic ones round down and drop mass.
//! Either way `pld_delta` brackets the true profile, and the bracket survives
//! composition because `(1 − e^{ε−x})₊` is nondecreasing in `x`.

use crate::amplification::{group_splits, poisson_group_pair, posthoc_group_adp_unclipped, BaseMechanismSpec, BoundCandidateSet};
use crate::error::{invalid, Error, Result};
use crate::mixtures::{loss_bracket, privacy_loss, ComponentFamily, MixtureDistribution};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Discretisation settings for [`pld_from_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PldOptions {
    pub grid_step: f64,
    /// P-mass cut from the distribution's tails before discretising.
    pub tail_mass_cutoff: f64,
    pub pessimistic: bool,
    /// Largest admissible number of grid buckets.
    pub max_support: usize,
}

impl Default for PldOptions {
    fn default() -> Self {
        Self { grid_step: 1e-3, tail_mass_cutoff: (-50f64).exp(), pessimistic: true, max_support: 1 << 24 }
    }
}

impl PldOptions {
    pub fn optimistic() -> Self {
        Self { pessimistic: false, ..Self::default() }
    }
}

/// Settings for convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeOptions {
    /// Mass removed from the tails after every convolution, half per side.
    pub truncation_mass: f64,
    pub max_support: usize,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        Self { truncation_mass: 1e-15, max_support: 1 << 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPld")]
pub struct PrivacyLossDistribution {
    grid_step: f64,
    /// Grid index of `masses[0]`.
    min_index: i64,
    masses: Vec<f64>,
    inf_mass: f64,
    pessimistic: bool,
    /// Total mass moved or dropped by tail truncation so far.
    truncated_mass: f64,
}

#[derive(Deserialize)]
struct RawPld {
    grid_step: f64,
    min_index: i64,
    masses: Vec<f64>,
    inf_mass: f64,
    pessimistic: bool,
    #[serde(default)]
    truncated_mass: f64,
}

impl TryFrom<RawPld> for PrivacyLossDistribution {
    type Error = Error;
    fn try_from(raw: RawPld) -> Result<Self> {
        let mut pld = Self::new(raw.grid_step, raw.min_index, raw.masses, raw.inf_mass, raw.pessimistic)?;
        pld.truncated_mass = raw.truncated_mass;
        Ok(pld)
    }
}

impl PrivacyLossDistribution {
    /// Validates masses and trims zero buckets from both ends.
    pub fn new(grid_step: f64, min_index: i64, masses: Vec<f64>, inf_mass: f64, pessimistic: bool) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(invalid(format!("grid step must be positive, got {grid_step}")));
        }
        if !(0.0..=1.0).contains(&inf_mass) {
            return Err(invalid(format!("infinite-loss mass {inf_mass} outside [0, 1]")));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(invalid(format!("PLD mass {m} is not a finite nonnegative number")));
        }
        let total: f64 = masses.iter().sum::<f64>() + inf_mass;
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("PLD masses sum to {total}, expected 1")));
        }
        let mut pld = Self { grid_step, min_index, masses, inf_mass, pessimistic, truncated_mass: 0.0 };
        pld.trim();
        Ok(pld)
    }

    /// Atom at loss 0: the PLD of identical distributions.
    pub fn identity(grid_step: f64, pessimistic: bool) -> Result<Self> {
        Self::new(grid_step, 0, vec![1.0], 0.0, pessimistic)
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn min_index(&self) -> i64 {
        self.min_index
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn inf_mass(&self) -> f64 {
        self.inf_mass
    }

    pub fn is_pessimistic(&self) -> bool {
        self.pessimistic
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Loss value of bucket `k` of [`masses`](Self::masses).
    pub fn loss(&self, k: usize) -> f64 {
        (self.min_index + k as i64) as f64 * self.grid_step
    }

    /// `(loss, mass)` for every bucket with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.masses.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(k, &m)| (self.loss(k), m))
    }

    pub fn delta(&self, epsilon: f64) -> f64 {
        pld_delta(self, epsilon)
    }

    fn trim(&mut self) {
        let first = self.masses.iter().position(|&m| m > 0.0);
        match first {
            None => {
                self.masses.clear();
                self.min_index = 0;
            }
            Some(first) => {
                let last = self.masses.iter().rposition(|&m| m > 0.0).expect("nonempty");
                self.masses.truncate(last + 1);
                self.masses.drain(..first);
                self.min_index += first as i64;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Discretises the privacy loss of `(p, q)`.
///
/// Continuous pairs need a monotone loss. Bucket edges are loss crossings
/// found by bisection; the bracket end is chosen so that rounding never
/// understates (pessimistic) or overstates (optimistic) a loss.
pub fn pld_from_pair(p: &MixtureDistribution, q: &MixtureDistribution, opts: &PldOptions) -> Result<PrivacyLossDistribution> {
    if !(opts.grid_step > 0.0 && opts.grid_step.is_finite()) {
        return Err(invalid(format!("grid step must be positive, got {}", opts.grid_step)));
    }
    if !(0.0..1.0).contains(&opts.tail_mass_cutoff) {
        return Err(invalid(format!("tail cutoff must lie in [0, 1), got {}", opts.tail_mass_cutoff)));
    }
    if p.family() != q.family() {
        return Err(Error::Precondition(format!("PLD needs a common family: {:?} vs {:?}", p.family(), q.family())));
    }
    match p.family() {
        ComponentFamily::Bernoulli => bernoulli_pld(p.success_probability()?, q.success_probability()?, opts),
        _ => continuous_pld(p, q, opts),
    }
}

fn bucket(loss: f64, opts: &PldOptions) -> i64 {
    let x = loss / opts.grid_step;
    (if opts.pessimistic { x.ceil() } else { x.floor() }) as i64
}

fn bernoulli_pld(p: f64, q: f64, opts: &PldOptions) -> Result<PrivacyLossDistribution> {
    let mut atoms = Vec::with_capacity(2);
    let mut inf_mass = 0.0;
    for (pz, qz) in [(p, q), (1.0 - p, 1.0 - q)] {
        if pz == 0.0 {
            continue;
        }
        if qz == 0.0 {
            inf_mass += pz;
        } else {
            atoms.push((bucket(pz.ln() - qz.ln(), opts), pz));
        }
    }
    from_atoms(atoms, inf_mass, opts)
}

fn from_atoms(atoms: Vec<(i64, f64)>, inf_mass: f64, opts: &PldOptions) -> Result<PrivacyLossDistribution> {
    if atoms.is_empty() {
        return PrivacyLossDistribution::new(opts.grid_step, 0, Vec::new(), inf_mass, opts.pessimistic);
    }
    let lo = atoms.iter().map(|a| a.0).min().expect("nonempty");
    let hi = atoms.iter().map(|a| a.0).max().expect("nonempty");
    let len = (hi - lo + 1) as usize;
    if len > opts.max_support {
        return Err(Error::MaxSupport(len));
    }
    let mut masses = vec![0.0; len];
    for (i, m) in atoms {
        masses[(i - lo) as usize] += m;
    }
    PrivacyLossDistribution::new(opts.grid_step, lo, masses, inf_mass, opts.pessimistic)
}

/// Same mixture with every location negated.
fn mirrored(m: &MixtureDistribution) -> Result<MixtureDistribution> {
    MixtureDistribution::new(m.family(), m.components().iter().map(|c| (c.weight, -c.location)).collect())
}

/// `z` with `Pr_P[Z ≤ z] ≈ mass` (`upper = false`) or `Pr_P[Z > z] ≈ mass`.
fn tail_quantile(p: &MixtureDistribution, mass: f64, upper: bool, s: f64) -> Result<f64> {
    let (lo_loc, hi_loc) = p.location_range();
    let (mut lo, mut hi) = (lo_loc - 60.0 * s, hi_loc + 60.0 * s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let beyond = if upper { p.sf(mid)? <= mass } else { p.cdf(mid)? > mass };
        if beyond {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * s {
            break;
        }
    }
    Ok(if upper { hi } else { lo })
}

fn continuous_pld(p: &MixtureDistribution, q: &MixtureDistribution, opts: &PldOptions) -> Result<PrivacyLossDistribution> {
    let fam = p.family();
    let s = fam.scale().expect("continuous family");
    let flat_tails = matches!(fam, ComponentFamily::Laplace { .. });
    let (plo, phi) = p.location_range();
    let (qlo, qhi) = q.location_range();
    let (hull_lo, hull_hi) = (plo.min(qlo), phi.max(qhi));

    // Orient so that the loss is nondecreasing.
    let (probe_lo, probe_hi) = (hull_lo - 2.0 * s, hull_hi + 2.0 * s);
    let (p, q) = if privacy_loss(p, q, probe_lo)? > privacy_loss(p, q, probe_hi)? {
        (mirrored(p)?, mirrored(q)?)
    } else {
        (p.clone(), q.clone())
    };
    let (p, q) = (&p, &q);

    // Outside the location hull Laplace losses are constant, so the hull
    // carries every loss value and no mass is truncated.
    let (z_lo, z_hi) = if flat_tails {
        let (a, b) = (p.location_range(), q.location_range());
        (a.0.min(b.0), a.1.max(b.1))
    } else {
        let half = 0.5 * opts.tail_mass_cutoff;
        (tail_quantile(p, half, false, s)?, tail_quantile(p, half, true, s)?)
    };
    let (l_lo, l_hi) = (privacy_loss(p, q, z_lo)?, privacy_loss(p, q, z_hi)?);
    if !(l_lo.is_finite() && l_hi.is_finite()) {
        return Err(Error::Numerical(format!("non-finite loss on [{z_lo}, {z_hi}]")));
    }
    if z_hi > z_lo {
        check_monotone(p, q, z_lo, z_hi)?;
    }
    let (i_lo, i_hi) = (bucket(l_lo, opts), bucket(l_hi, opts));
    let nb = (i_hi - i_lo + 1) as usize;
    if nb > opts.max_support {
        return Err(Error::MaxSupport(nb));
    }

    // edges[k]..edges[k+1] maps to bucket i_lo + k. An interior edge is the
    // crossing of the loss level bounding bucket i_lo + k − 1 from above
    // (pessimistic) or bucket i_lo + k from below (optimistic).
    let lower_tail_kept = flat_tails || opts.pessimistic;
    let upper_tail_kept = flat_tails || !opts.pessimistic;
    let mut edges = Vec::with_capacity(nb + 1);
    edges.push(if lower_tail_kept { f64::NEG_INFINITY } else { z_lo });
    let tol = 1e-13 * (1.0 + z_hi.abs().max(z_lo.abs()));
    let mut start = z_lo;
    for k in 1..nb {
        let level_index = if opts.pessimistic { i_lo + k as i64 - 1 } else { i_lo + k as i64 };
        let level = level_index as f64 * opts.grid_step;
        let (a, b) = loss_bracket(p, q, level, (start, z_hi), tol)?;
        edges.push(if opts.pessimistic { a } else { b });
        start = a;
    }
    edges.push(if upper_tail_kept { f64::INFINITY } else { z_hi });

    let mut masses = Vec::with_capacity(nb);
    for k in 0..nb {
        masses.push(mass_between(p, edges[k], edges[k + 1])?);
    }
    let lower_tail = if lower_tail_kept { 0.0 } else { p.cdf(z_lo)? };
    let upper_tail = if upper_tail_kept { 0.0 } else { p.sf(z_hi)? };
    let inf_mass = upper_tail;
    let finite_total: f64 = masses.iter().sum();
    if opts.pessimistic {
        // A round-off deficit goes to the top bucket so that δ never drops.
        let deficit = 1.0 - inf_mass - finite_total;
        if deficit > 0.0 {
            masses[nb - 1] += deficit;
        }
    }
    let mut pld = PrivacyLossDistribution::new(opts.grid_step, i_lo, masses, inf_mass.min(1.0), opts.pessimistic)?;
    pld.truncated_mass = lower_tail + upper_tail;
    Ok(pld)
}

fn mass_between(p: &MixtureDistribution, a: f64, b: f64) -> Result<f64> {
    Ok(match (a.is_finite(), b.is_finite()) {
        (false, false) => 1.0,
        (false, true) => p.cdf(b)?,
        (true, false) => p.sf(a)?,
        (true, true) => p.interval_mass(a, b)?,
    })
}

fn check_monotone(p: &MixtureDistribution, q: &MixtureDistribution, lo: f64, hi: f64) -> Result<()> {
    const SAMPLES: usize = 512;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=SAMPLES {
        let z = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let l = privacy_loss(p, q, z)?;
        if l < prev - 1e-9 * (1.0 + prev.abs()) {
            return Err(Error::Precondition(format!("privacy loss is not monotone near z = {z}")));
        }
        prev = prev.max(l);
    }
    Ok(())
}

/// One PLD per candidate pair of `set`.
pub fn plds_from_candidates(set: &BoundCandidateSet, opts: &PldOptions) -> Result<Vec<PrivacyLossDistribution>> {
    set.pairs().iter().map(|(p, q)| pld_from_pair(p, q, opts)).collect()
}

/// PLDs of every relation split and candidate of a Poisson group of
/// `group_size` records, to be composed separately and maximised at readout.
pub fn group_plds(
    mech: &BaseMechanismSpec,
    r: f64,
    group_size: u64,
    opts: &PldOptions,
) -> Result<Vec<PrivacyLossDistribution>> {
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    let mut out = Vec::new();
    for rel in group_splits(group_size) {
        out.extend(plds_from_candidates(&poisson_group_pair(mech, r, rel)?, opts)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// Below this many multiply-adds, convolution is done directly.
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 18;

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let nonzero = a.iter().filter(|&&x| x != 0.0).count();
    if nonzero.saturating_mul(b.len()) <= DIRECT_CONVOLUTION_LIMIT {
        let mut out = vec![0.0; n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let lift = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let (mut fa, mut fb) = (lift(a), lift(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..n].iter().map(|c| c.re * scale).collect()
}

/// PLD of the composition of two independent mechanisms.
pub fn pld_convolve(
    a: &PrivacyLossDistribution,
    b: &PrivacyLossDistribution,
    opts: &ComposeOptions,
) -> Result<PrivacyLossDistribution> {
    if a.grid_step != b.grid_step {
        return Err(Error::Precondition(format!("grid steps differ: {} vs {}", a.grid_step, b.grid_step)));
    }
    if a.pessimistic != b.pessimistic {
        return Err(Error::Precondition("cannot mix pessimistic and optimistic PLDs".into()));
    }
    let pessimistic = a.pessimistic;
    let inf_mass = (a.inf_mass + b.inf_mass - a.inf_mass * b.inf_mass).min(1.0);
    let mut out = PrivacyLossDistribution {
        grid_step: a.grid_step,
        min_index: a.min_index + b.min_index,
        masses: Vec::new(),
        inf_mass,
        pessimistic,
        truncated_mass: a.truncated_mass + b.truncated_mass,
    };
    if a.masses.is_empty() || b.masses.is_empty() {
        return Ok(out);
    }
    let n = a.masses.len() + b.masses.len() - 1;
    if n > opts.max_support {
        return Err(Error::MaxSupport(n));
    }
    let expected: f64 = a.masses.iter().sum::<f64>() * b.masses.iter().sum::<f64>();
    let mut masses = convolve(&a.masses, &b.masses);
    for m in masses.iter_mut() {
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    if pessimistic {
        let deficit = expected - masses.iter().sum::<f64>();
        if deficit > 0.0 {
            out.inf_mass = (out.inf_mass + deficit).min(1.0);
        }
    }
    out.masses = masses;
    truncate_tails(&mut out, opts.truncation_mass);
    out.trim();
    Ok(out)
}

/// Removes up to `budget/2` of mass from each end of the finite support.
fn truncate_tails(pld: &mut PrivacyLossDistribution, budget: f64) {
    let half = 0.5 * budget;
    let len = pld.masses.len();
    if len < 2 || half <= 0.0 {
        return;
    }
    let (mut lo, mut cut_lo) = (0usize, 0.0);
    while lo + 1 < len && cut_lo + pld.masses[lo] <= half {
        cut_lo += pld.masses[lo];
        lo += 1;
    }
    let (mut hi, mut cut_hi) = (len - 1, 0.0);
    while hi > lo && cut_hi + pld.masses[hi] <= half {
        cut_hi += pld.masses[hi];
        hi -= 1;
    }
    for m in &mut pld.masses[..lo] {
        *m = 0.0;
    }
    for m in &mut pld.masses[hi + 1..] {
        *m = 0.0;
    }
    if pld.pessimistic {
        pld.masses[lo] += cut_lo;
        pld.inf_mass = (pld.inf_mass + cut_hi).min(1.0);
    } else {
        pld.masses[hi] += cut_hi;
    }
    pld.truncated_mass += cut_lo + cut_hi;
}

/// `T`-fold self-composition with default [`ComposeOptions`].
pub fn pld_compose(pld: &PrivacyLossDistribution, iterations: u64) -> Result<PrivacyLossDistribution> {
    pld_compose_with(pld, iterations, &ComposeOptions::default())
}

/// `T`-fold self-composition by repeated squaring.
pub fn pld_compose_with(
    pld: &PrivacyLossDistribution,
    iterations: u64,
    opts: &ComposeOptions,
) -> Result<PrivacyLossDistribution> {
    if iterations == 0 {
        return Err(invalid("composition needs T ≥ 1"));
    }
    let mut result: Option<PrivacyLossDistribution> = None;
    let mut base = pld.clone();
    let mut t = iterations;
    loop {
        if t & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => pld_convolve(&r, &base, opts)?,
            });
        }
        t >>= 1;
        if t == 0 {
            break;
        }
        base = pld_convolve(&base, &base, opts)?;
    }
    Ok(result.expect("T ≥ 1"))
}

// ---------------------------------------------------------------------------
// Readout
// ---------------------------------------------------------------------------

/// `δ(ε) = inf_mass + Σ_{L > ε} m_L·(1 − e^{ε − L})`, clipped to `[0, 1]`.
pub fn pld_delta(pld: &PrivacyLossDistribution, epsilon: f64) -> f64 {
    let finite: f64 = pld
        .atoms()
        .filter(|&(l, _)| l > epsilon)
        .map(|(l, m)| -m * (epsilon - l).exp_m1())
        .sum();
    (pld.inf_mass + finite).clamp(0.0, 1.0)
}

/// Smallest `ε` with `pld_delta(ε) ≤ δ_target`, solved exactly on the
/// segment between adjacent atoms.
///
/// Returns `+∞` when `inf_mass > δ_target` and `−∞` when `δ_target ≥ 1`,
/// since every `ε` then qualifies.
pub fn pld_epsilon(pld: &PrivacyLossDistribution, delta_target: f64) -> Result<f64> {
    if !(delta_target > 0.0) || delta_target.is_nan() {
        return Err(invalid(format!("δ target must be positive, got {delta_target}")));
    }
    if delta_target >= 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if pld.inf_mass > delta_target {
        return Ok(f64::INFINITY);
    }
    let atoms: Vec<(f64, f64)> = pld.atoms().collect();
    // On ε ∈ [L_{j−1}, L_j): δ(ε) = a − e^ε·b with sums over atoms above ε.
    let (mut a, mut b) = (pld.inf_mass, 0.0);
    for j in (0..atoms.len()).rev() {
        let (l, m) = atoms[j];
        a += m;
        b += m * (-l).exp();
        let below = if j > 0 { atoms[j - 1].0 } else { f64::NEG_INFINITY };
        let delta_below = if below == f64::NEG_INFINITY { a } else { a - below.exp() * b };
        if delta_below > delta_target {
            let eps = ((a - delta_target) / b).ln();
            return Ok(eps.clamp(below, l));
        }
    }
    Ok(f64::NEG_INFINITY)
}

/// Readout over PLDs composed separately: the largest `δ(ε)`.
pub fn max_pld_delta(plds: &[PrivacyLossDistribution], epsilon: f64) -> f64 {
    plds.iter().map(|p| pld_delta(p, epsilon)).fold(0.0, f64::max)
}

/// Readout over PLDs composed separately: the largest `ε(δ)`.
pub fn max_pld_epsilon(plds: &[PrivacyLossDistribution], delta_target: f64) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for p in plds {
        best = best.max(pld_epsilon(p, delta_target)?);
    }
    Ok(best)
}

/// Group privacy applied after composition to single-record PLDs:
/// `δ_T(ε/K)·Σ_{k<K} e^{kε/K}`. Not clipped: values above 1 are vacuous.
pub fn posthoc_pld_delta(plds: &[PrivacyLossDistribution], epsilon: f64, group_size: u64) -> Result<f64> {
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    let per_record = epsilon.max(0.0) / group_size as f64;
    Ok(posthoc_group_adp_unclipped(per_record, max_pld_delta(plds, per_record), group_size)?.1)
}
