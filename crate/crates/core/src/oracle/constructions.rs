//! Worst-case randomized-response instances and seeded random instances.

use super::coupling::{unconditional_coupling, Coupling};
use super::{subsets, Batch, BatchPmf, Condition, DiscreteBaseMechanism, DiscreteInstance, MAX_UNIVERSE};
use crate::amplification::SubsamplingScheme;
use crate::error::{invalid, Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which candidate `τ` a randomized-response instance realises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RrBranch {
    /// `τ = θ`: sampling an inserted element flips the response.
    Theta,
    /// `τ = 1 − θ`: sampling a removed element flips the response.
    OneMinusTheta,
}

impl RrBranch {
    pub fn tau(self, theta: f64) -> f64 {
        match self {
            RrBranch::Theta => theta,
            RrBranch::OneMinusTheta => 1.0 - theta,
        }
    }
}

fn element_names(prefix: &str, k: u64) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Poisson instance whose output mixtures equal the randomized-response
/// candidate pair for `branch`: `x = {m1..mK₋}`, `x′ = {p1..pK₊}`, and the
/// binary function is 0 exactly when the batch meets the flipping group.
pub fn rr_worst_case_instance(r: f64, theta: f64, k_plus: u64, k_minus: u64, branch: RrBranch) -> Result<DiscreteInstance> {
    if k_plus + k_minus == 0 {
        return Err(Error::DegenerateRelation);
    }
    if (k_plus + k_minus) as usize > MAX_UNIVERSE {
        return Err(Error::SizeLimit(format!("group of {} exceeds the oracle universe", k_plus + k_minus)));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(invalid(format!("true response probability {theta} outside [0, 1]")));
    }
    let mut universe = element_names("m", k_minus);
    universe.extend(element_names("p", k_plus));
    let g_minus: u16 = (1u16 << k_minus) - 1;
    let g_plus: u16 = ((1u16 << k_plus) - 1) << k_minus;
    let flip = match branch {
        RrBranch::OneMinusTheta => g_minus,
        RrBranch::Theta => g_plus,
    };
    let base = DiscreteBaseMechanism::binary(theta, vec![(Condition::ContainsAny(flip), false)], true)?;
    DiscreteInstance::new(universe, g_minus, g_plus, SubsamplingScheme::Poisson { rate: r }, base)
}

/// WOR substitution instance `x = {a, c1..}`, `x′ = {a′, c1..}` of size
/// `dataset_size`. The response flips when the batch holds `a′` (branch
/// `Theta`) or `a` (branch `OneMinusTheta`).
pub fn wor_tightness_instance(theta: f64, dataset_size: u64, batch_size: u64, branch: RrBranch) -> Result<DiscreteInstance> {
    if dataset_size == 0 || dataset_size as usize + 1 > MAX_UNIVERSE {
        return Err(Error::SizeLimit(format!("dataset of {dataset_size} records; at most {}", MAX_UNIVERSE - 1)));
    }
    let mut universe = vec!["a".to_string(), "a′".to_string()];
    universe.extend(element_names("c", dataset_size - 1));
    let common: u16 = ((1u16 << (dataset_size - 1)) - 1) << 2;
    let flip = match branch {
        RrBranch::Theta => 0b10,
        RrBranch::OneMinusTheta => 0b01,
    };
    let base = DiscreteBaseMechanism::binary(theta, vec![(Condition::ContainsAny(flip), false)], true)?;
    let scheme = SubsamplingScheme::WithoutReplacement { dataset_size, batch_size };
    DiscreteInstance::new(universe, 0b01 | common, 0b10 | common, scheme, base)
}

fn random_pmf<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut pmf: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // Absorb rounding so the entries sum to 1 within an ulp.
    let head: f64 = pmf[1..].iter().sum();
    pmf[0] = 1.0 - head;
    pmf
}

/// Random Poisson group instance: up to `max_elements` records split into a
/// shared part, at most two removals and at most two insertions (at least
/// one of either), a rate in `[0.05, 0.95]` and an arbitrary positive output
/// table over `2..=max_alphabet` symbols.
pub fn random_group_instance<R: Rng + ?Sized>(rng: &mut R, max_elements: usize, max_alphabet: usize) -> Result<DiscreteInstance> {
    if max_elements == 0 || max_elements > MAX_UNIVERSE || !(2..=super::MAX_ALPHABET).contains(&max_alphabet) {
        return Err(invalid(format!("need 1 ≤ elements ≤ {MAX_UNIVERSE} and 2 ≤ alphabet ≤ {}", super::MAX_ALPHABET)));
    }
    let n = rng.gen_range(1..=max_elements);
    let mut k_minus = rng.gen_range(0..=n.min(2));
    let k_plus = rng.gen_range(0..=(n - k_minus).min(2));
    if k_minus + k_plus == 0 {
        k_minus = 1;
    }
    let shared = n - k_minus - k_plus;
    let mut universe = element_names("s", shared as u64);
    universe.extend(element_names("m", k_minus as u64));
    universe.extend(element_names("p", k_plus as u64));
    let s_mask: u16 = (1u16 << shared) - 1;
    let m_mask: u16 = ((1u16 << k_minus) - 1) << shared;
    let p_mask: u16 = ((1u16 << k_plus) - 1) << (shared + k_minus);
    let alphabet = rng.gen_range(2..=max_alphabet);
    let rules = subsets(s_mask | m_mask | p_mask).map(|y| (Condition::Exact(y), random_pmf(rng, alphabet))).collect();
    let base = DiscreteBaseMechanism {
        alphabet: (0..alphabet).map(|i| format!("z{i}")).collect(),
        rules,
        default: random_pmf(rng, alphabet),
    };
    let rate = rng.gen_range(0.05..0.95);
    DiscreteInstance::new(universe, s_mask | m_mask, s_mask | p_mask, SubsamplingScheme::Poisson { rate }, base)
}

/// North-west-corner coupling of `p` and `q` after shuffling both supports.
fn corner_coupling<R: Rng + ?Sized>(p: &BatchPmf, q: &BatchPmf, rng: &mut R) -> Vec<((Batch, Batch), f64)> {
    let mut a: Vec<(Batch, f64)> = p.iter().map(|(b, w)| (*b, *w)).collect();
    let mut b: Vec<(Batch, f64)> = q.iter().map(|(b, w)| (*b, *w)).collect();
    a.shuffle(rng);
    b.shuffle(rng);
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let m = a[i].1.min(b[j].1);
        if m > 0.0 {
            out.push(((a[i].0, b[j].0), m));
        }
        a[i].1 -= m;
        b[j].1 -= m;
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Random unconditional coupling of two batch pmfs: a random convex
/// combination of two shuffled north-west-corner couplings.
pub fn random_coupling<R: Rng + ?Sized>(p: &BatchPmf, q: &BatchPmf, rng: &mut R) -> Coupling {
    let lambda: f64 = rng.gen();
    let mut joint: std::collections::BTreeMap<(Batch, Batch), f64> = Default::default();
    for (pair, w) in corner_coupling(p, q, rng) {
        *joint.entry(pair).or_insert(0.0) += lambda * w;
    }
    for (pair, w) in corner_coupling(p, q, rng) {
        *joint.entry(pair).or_insert(0.0) += (1.0 - lambda) * w;
    }
    unconditional_coupling(joint.into_iter().collect())
}
