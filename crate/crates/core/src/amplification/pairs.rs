//! Dominating mixture pairs for Poisson group relations, WOR substitution
//! and subsampling with replacement.

use super::{batch_ratio, require_rate, BaseMechanismSpec, BoundCandidateSet, BoundSource, GroupRelation};
use crate::divergence::{divergence_of_candidates, hockey_stick, DivergenceKind, DivergenceValue, EvalOptions};
use crate::error::{invalid, Error, Result};
use crate::mixtures::{ComponentFamily, MixtureDistribution};
use crate::special::{binom_weights, inclusion_prob};

/// Candidate pairs for Poisson subsampling with rate `r` under `rel`.
///
/// Continuous mechanisms yield one pair: the first mixture has components at
/// `0..=K₋` weighted by `Binom(·|K₋, r)`, the second at `0, −1, …, −K₊`
/// weighted by `Binom(·|K₊, r)`. Randomized response yields two Bernoulli
/// candidates, one per `τ ∈ {θ, 1−θ}`.
pub fn poisson_group_pair(mech: &BaseMechanismSpec, r: f64, rel: GroupRelation) -> Result<BoundCandidateSet> {
    mech.validate()?;
    require_rate(r)?;
    if rel.group_size() == 0 {
        return Err(Error::DegenerateRelation);
    }
    let family = mech.family();
    let pairs = match *mech {
        BaseMechanismSpec::RandomizedResponse { theta } => {
            let w1 = inclusion_prob(r, rel.k_minus);
            let w2 = inclusion_prob(r, rel.k_plus);
            let mut pairs = Vec::with_capacity(2);
            for tau in [theta, 1.0 - theta] {
                let p = MixtureDistribution::new(family, vec![(1.0 - w1, theta), (w1, tau)])?;
                let q = MixtureDistribution::new(family, vec![(1.0 - w2, theta), (w2, 1.0 - tau)])?;
                pairs.push((p, q));
            }
            pairs
        }
        _ => {
            let p = binomial_mixture(family, rel.k_minus, r, 1.0)?;
            let q = binomial_mixture(family, rel.k_plus, r, -1.0)?;
            vec![(p, q)]
        }
    };
    BoundCandidateSet::new(pairs, BoundSource::PoissonGroup, vec![rel])
}

/// `Σ_i Binom(i|n, p)·f(· − sign·i)`.
fn binomial_mixture(family: ComponentFamily, n: u64, p: f64, sign: f64) -> Result<MixtureDistribution> {
    let comps = binom_weights(n, p).into_iter().enumerate().map(|(i, w)| (w, sign * i as f64)).collect();
    MixtureDistribution::new(family, comps)
}

/// All `(K₊, K₋)` with `K₊ + K₋ = group_size`.
pub fn group_splits(group_size: u64) -> Vec<GroupRelation> {
    (0..=group_size).map(|k_plus| GroupRelation::new(k_plus, group_size - k_plus)).collect()
}

/// Tight group bound for Poisson subsampling: the maximum over every split of
/// a group of `group_size` into insertions and removals.
pub fn group_bound(
    mech: &BaseMechanismSpec,
    r: f64,
    group_size: u64,
    alpha: f64,
    kind: DivergenceKind,
    opts: &EvalOptions,
) -> Result<DivergenceValue> {
    if group_size == 0 {
        return Err(invalid("group size must be at least 1"));
    }
    let mut best: Option<DivergenceValue> = None;
    for rel in group_splits(group_size) {
        let set = poisson_group_pair(mech, r, rel)?;
        let v = divergence_of_candidates(&set, alpha, kind, opts)?;
        if best.map_or(true, |b| v.ln_value > b.ln_value) {
            best = Some(v);
        }
    }
    Ok(best.expect("at least one split"))
}

/// WOR substitution with batch ratio `w = q/N`: the Poisson group pair with
/// `K₊ = K₋ = 1` at rate `w`.
pub fn wor_substitution_pair(mech: &BaseMechanismSpec, dataset_size: u64, batch_size: u64) -> Result<BoundCandidateSet> {
    let w = batch_ratio(dataset_size, batch_size)?;
    let mut set = poisson_group_pair(mech, w, GroupRelation::new(1, 1))?;
    set.source = BoundSource::WorSubstitution;
    Ok(set)
}

/// WOR substitution privacy profile at `α = e^ε`, with `w = q/N` and base
/// substitution pair `(p, q)`:
/// `H_α((1−w)q + w·p ‖ q)` for `α ≥ 1`, `H_α(p ‖ (1−w)p + w·q)` below.
pub fn wor_substitution_profile(
    mech: &BaseMechanismSpec,
    dataset_size: u64,
    batch_size: u64,
    epsilon: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    mech.validate()?;
    let w = batch_ratio(dataset_size, batch_size)?;
    let family = mech.family();
    let (hi, lo) = match *mech {
        BaseMechanismSpec::RandomizedResponse { theta } => (theta, 1.0 - theta),
        _ => (1.0, 0.0),
    };
    let alpha = epsilon.exp();
    let (p, q) = if alpha >= 1.0 {
        (
            MixtureDistribution::new(family, vec![(1.0 - w, lo), (w, hi)])?,
            MixtureDistribution::point(family, lo)?,
        )
    } else {
        (
            MixtureDistribution::point(family, hi)?,
            MixtureDistribution::new(family, vec![(1.0 - w, hi), (w, lo)])?,
        )
    };
    Ok(hockey_stick(&p, &q, alpha, opts)?.value)
}

/// Subsampling with replacement, `q` draws out of `N`, substitution relation:
/// components at `±i` for `i = 0..=q`, weighted by `Binom(i|q, 1/N)`.
pub fn wr_substitution_pair(mech: &BaseMechanismSpec, dataset_size: u64, batch_size: u64) -> Result<BoundCandidateSet> {
    mech.validate()?;
    if let BaseMechanismSpec::RandomizedResponse { .. } = mech {
        return Err(Error::UnsupportedMechanism("with-replacement pair needs a continuous mechanism".into()));
    }
    if dataset_size < 2 || batch_size == 0 {
        return Err(invalid(format!("need N ≥ 2 and q ≥ 1, got N = {dataset_size}, q = {batch_size}")));
    }
    let family = mech.family();
    let r = 1.0 / dataset_size as f64;
    let p = binomial_mixture(family, batch_size, r, 1.0)?;
    let q = binomial_mixture(family, batch_size, r, -1.0)?;
    BoundCandidateSet::new(vec![(p, q)], BoundSource::WithReplacement, Vec::new())
}
