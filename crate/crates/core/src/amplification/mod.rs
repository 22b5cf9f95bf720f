//! Guarantee constructors for subsampled mechanisms.
//!
//! Mechanism-specific bounds are expressed as candidate mixture pairs whose
//! pointwise maximum divergence is the guarantee. Closed-form RDP bounds
//! return [`RenyiBound`]s in log space, since moments overflow quickly.

mod agnostic;
mod epoch;
mod pairs;
mod posthoc;
mod rdp;

pub use agnostic::{agnostic_group_rdp, balle_group_adp, balle_group_delta};
pub use epoch::{epoch_permute_partition_rdp, epoch_unconditional_rdp};
pub use pairs::{
    group_bound, group_splits, poisson_group_pair, wor_substitution_pair, wor_substitution_profile,
    wr_substitution_pair,
};
pub use posthoc::{posthoc_group_adp, posthoc_group_rdp, GroupRdpCurve};
pub(crate) use posthoc::posthoc_group_adp_unclipped;
pub use rdp::{
    hybrid_wor_substitution_rdp, node_group_wor_rdp, rr_wor_tight_rdp, wang_wor_rdp, wor_insertion_removal_rdp,
    zhu_poisson_rdp,
};

use crate::divergence::{
    bernoulli_hockey_stick, bernoulli_ln_renyi, gaussian_hockey_stick, gaussian_ln_renyi, laplace_hockey_stick,
    laplace_ln_renyi,
};
use crate::error::{invalid, Error, Result};
use crate::mixtures::{ComponentFamily, MixtureDistribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SubsamplingScheme {
    /// Each record included independently with probability `rate`.
    Poisson { rate: f64 },
    /// Uniform batch of `batch_size` distinct records out of `dataset_size`.
    WithoutReplacement { dataset_size: u64, batch_size: u64 },
    /// `batch_size` independent uniform draws out of `dataset_size`.
    WithReplacement { dataset_size: u64, batch_size: u64 },
    /// Random split of a `2·half_size` dataset into two batches of `half_size`.
    PermutePartition { half_size: u64 },
}

impl SubsamplingScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SubsamplingScheme::Poisson { rate } if !(0.0..=1.0).contains(&rate) => {
                Err(invalid(format!("Poisson rate {rate} outside [0, 1]")))
            }
            SubsamplingScheme::WithoutReplacement { dataset_size, batch_size }
                if dataset_size == 0 || batch_size == 0 || batch_size > dataset_size =>
            {
                Err(invalid(format!("need 0 < q ≤ N, got N = {dataset_size}, q = {batch_size}")))
            }
            SubsamplingScheme::WithReplacement { dataset_size, batch_size } if dataset_size == 0 || batch_size == 0 => {
                Err(invalid(format!("need N ≥ 1 and q ≥ 1, got N = {dataset_size}, q = {batch_size}")))
            }
            SubsamplingScheme::PermutePartition { half_size: 0 } => Err(invalid("permute-and-partition needs N ≥ 1")),
            _ => Ok(()),
        }
    }
}

/// Datasets differing by `k_plus` insertions and `k_minus` removals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupRelation {
    pub k_plus: u64,
    pub k_minus: u64,
}

impl GroupRelation {
    pub fn new(k_plus: u64, k_minus: u64) -> Self {
        Self { k_plus, k_minus }
    }

    pub fn group_size(&self) -> u64 {
        self.k_plus + self.k_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "snake_case")]
pub enum BaseMechanismSpec {
    /// Gaussian noise with standard deviation `sigma` on an ℓ₂-sensitivity `l2` function.
    Gaussian { sigma: f64, l2: f64 },
    /// Laplace noise with scale `scale` on an ℓ₁-sensitivity `l1` function.
    Laplace { scale: f64, l1: f64 },
    /// `|h − (1 − V)|` with binary `h` and `V ~ Bern(theta)`.
    RandomizedResponse { theta: f64 },
}

impl BaseMechanismSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self::Gaussian { sigma, l2: 1.0 }
    }

    pub fn laplace(scale: f64) -> Self {
        Self::Laplace { scale, l1: 1.0 }
    }

    pub fn randomized_response(theta: f64) -> Self {
        Self::RandomizedResponse { theta }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            Self::Gaussian { sigma, l2 } if !(ok(sigma) && ok(l2)) => {
                Err(invalid(format!("Gaussian needs σ > 0 and L2 > 0, got σ = {sigma}, L2 = {l2}")))
            }
            Self::Laplace { scale, l1 } if !(ok(scale) && ok(l1)) => {
                Err(invalid(format!("Laplace needs λ > 0 and L1 > 0, got λ = {scale}, L1 = {l1}")))
            }
            Self::RandomizedResponse { theta } if !(0.0..=1.0).contains(&theta) => {
                Err(invalid(format!("true response probability {theta} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Component family in unit-sensitivity coordinates.
    pub fn family(&self) -> ComponentFamily {
        match *self {
            Self::Gaussian { sigma, l2 } => ComponentFamily::Gaussian { sigma: sigma / l2 },
            Self::Laplace { scale, l1 } => ComponentFamily::Laplace { scale: scale / l1 },
            Self::RandomizedResponse { .. } => ComponentFamily::Bernoulli,
        }
    }

    /// White-box profile `H_α` of the base mechanism between batches at
    /// distance `k`.
    pub fn hockey_stick_at_distance(&self, k: u64, alpha: f64) -> f64 {
        match (*self, self.family()) {
            (_, _) if k == 0 => (1.0 - alpha).max(0.0),
            (Self::RandomizedResponse { theta }, _) => bernoulli_hockey_stick(theta, 1.0 - theta, alpha),
            (Self::Gaussian { .. }, ComponentFamily::Gaussian { sigma }) => gaussian_hockey_stick(k as f64 / sigma, alpha),
            (_, fam) => laplace_hockey_stick(k as f64 / fam.scale().expect("continuous"), alpha),
        }
    }

    /// `ln Λ_α` of the base mechanism between batches at distance `k`.
    pub fn ln_renyi_at_distance(&self, k: u64, alpha: f64) -> f64 {
        if k == 0 || alpha == 1.0 {
            return 0.0;
        }
        match (*self, self.family()) {
            (Self::RandomizedResponse { theta }, _) => bernoulli_ln_renyi(theta, 1.0 - theta, alpha),
            (Self::Gaussian { .. }, ComponentFamily::Gaussian { sigma }) => gaussian_ln_renyi(k as f64 / sigma, alpha),
            (_, fam) => laplace_ln_renyi(k as f64 / fam.scale().expect("continuous"), alpha),
        }
    }
}

/// Which construction produced a [`BoundCandidateSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    PoissonGroup,
    WorSubstitution,
    WithReplacement,
}

/// Candidate dominating pairs; the guarantee is the maximum divergence over pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCandidateSet {
    pairs: Vec<(MixtureDistribution, MixtureDistribution)>,
    pub source: BoundSource,
    pub relation_splits: Vec<GroupRelation>,
}

impl BoundCandidateSet {
    pub fn new(
        pairs: Vec<(MixtureDistribution, MixtureDistribution)>,
        source: BoundSource,
        relation_splits: Vec<GroupRelation>,
    ) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| invalid("candidate set must be nonempty"))?.0.family();
        if pairs.iter().any(|(p, q)| p.family() != first || q.family() != first) {
            return Err(Error::Precondition("candidate pairs must share one family".into()));
        }
        Ok(Self { pairs, source, relation_splits })
    }

    pub fn pairs(&self) -> &[(MixtureDistribution, MixtureDistribution)] {
        &self.pairs
    }

    pub fn family(&self) -> ComponentFamily {
        self.pairs[0].0.family()
    }
}

/// A Rényi moment bound `Λ_α`, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiBound {
    pub alpha: f64,
    pub ln_moment: f64,
}

impl RenyiBound {
    pub fn moment(&self) -> f64 {
        self.ln_moment.exp()
    }

    /// `ρ = ln Λ_α / (α − 1)`.
    pub fn rho(&self) -> f64 {
        self.ln_moment / (self.alpha - 1.0)
    }
}

pub(crate) fn require_integer_order(alpha: f64) -> Result<u64> {
    if alpha >= 2.0 && alpha.fract() == 0.0 && alpha <= 1e7 {
        Ok(alpha as u64)
    } else {
        Err(Error::UnsupportedOrder(format!("binomial expansion needs an integer order ≥ 2, got {alpha}")))
    }
}

pub(crate) fn require_order(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(format!("Rényi order must be finite and > 1, got {alpha}")))
    }
}

pub(crate) fn require_rate(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(invalid(format!("subsampling rate {r} outside [0, 1]")))
    }
}

pub(crate) fn batch_ratio(dataset_size: u64, batch_size: u64) -> Result<f64> {
    if dataset_size == 0 || batch_size > dataset_size {
        return Err(invalid(format!("need q ≤ N and N ≥ 1, got N = {dataset_size}, q = {batch_size}")));
    }
    Ok(batch_size as f64 / dataset_size as f64)
}
