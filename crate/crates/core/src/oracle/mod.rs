//! Exhaustive ground truth on small discrete instances.
//!
//! Batches are bitmasks over a universe of at most 12 elements, so every
//! subsampling distribution and output mixture is an exact finite sum.
//! Size caps are hard errors: the oracle never approximates.

mod constructions;
mod coupling;
mod fixture;

pub use constructions::{
    random_coupling, random_group_instance, rr_worst_case_instance, wor_tightness_instance, RrBranch,
};
pub use coupling::{
    canonical_group_coupling, check_coupling_valid, check_distance_compatible, check_events_partition,
    conditional_marginals, per_batch_coupling, transport_bound_value, unconditional_coupling, BatchRelation,
    CheckReport, Coupling, Event, Violation, COUPLING_TOL,
};
pub use fixture::{
    verify_fixture, Check, CheckOutcome, ClosedForm, Comparison, CouplingSpec, EventSpec, Fixture, FixtureReport,
    TupleSpec,
};

use crate::amplification::SubsamplingScheme;
use crate::divergence::DivergenceKind;
use crate::error::{invalid, Error, Result};
use crate::special::ln_choose;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest universe the oracle enumerates.
pub const MAX_UNIVERSE: usize = 12;
/// Largest base-mechanism output alphabet.
pub const MAX_ALPHABET: usize = 8;
/// Largest dataset for permute-and-partition enumeration.
pub const MAX_PARTITION_DATASET: usize = 8;

/// A subsampled batch: a subset of the universe, or the ordered pair of
/// batches produced by permute-and-partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Batch {
    Set(u16),
    Split(u16, u16),
}

impl Batch {
    pub fn as_set(&self) -> Option<u16> {
        match *self {
            Batch::Set(m) => Some(m),
            Batch::Split(..) => None,
        }
    }
}

/// Exact pmf over batches.
pub type BatchPmf = BTreeMap<Batch, f64>;

// ---------------------------------------------------------------------------
// Base mechanism
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionSpec {
    /// The batch contains at least one of `elements`.
    ContainsAny { elements: Vec<String> },
    /// The batch contains exactly `count` of `elements`.
    CountEquals { elements: Vec<String>, count: u32 },
    /// The batch equals `elements`.
    Exact { elements: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub when: ConditionSpec,
    pub pmf: Vec<f64>,
}

/// Serialized base mechanism: first matching rule wins, else `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub alphabet: Vec<String>,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
    pub default: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Condition {
    ContainsAny(u16),
    CountEquals(u16, u32),
    Exact(u16),
}

impl Condition {
    fn matches(&self, y: u16) -> bool {
        match *self {
            Condition::ContainsAny(m) => y & m != 0,
            Condition::CountEquals(m, c) => (y & m).count_ones() == c,
            Condition::Exact(m) => y == m,
        }
    }
}

/// Finite-output base mechanism `y ↦ b_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBaseMechanism {
    alphabet: Vec<String>,
    rules: Vec<(Condition, Vec<f64>)>,
    default: Vec<f64>,
}

fn validate_pmf(pmf: &[f64], len: usize) -> Result<()> {
    if pmf.len() != len {
        return Err(invalid(format!("pmf has {} entries, alphabet has {len}", pmf.len())));
    }
    if pmf.iter().any(|p| !(*p >= 0.0)) {
        return Err(invalid(format!("pmf {pmf:?} has a negative entry")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-15 {
        return Err(invalid(format!("pmf {pmf:?} sums to {total}")));
    }
    Ok(())
}

impl DiscreteBaseMechanism {
    /// Binary randomized response keyed on a set of elements: `Bern(θ)` for
    /// batches with `h(y) = 1`, `Bern(1 − θ)` otherwise. Symbols are `0`, `1`.
    pub(crate) fn binary(theta: f64, rules: Vec<(Condition, bool)>, default_h: bool) -> Result<Self> {
        let pmf = |h: bool| if h { vec![1.0 - theta, theta] } else { vec![theta, 1.0 - theta] };
        let m = Self {
            alphabet: vec!["0".into(), "1".into()],
            rules: rules.into_iter().map(|(c, h)| (c, pmf(h))).collect(),
            default: pmf(default_h),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.alphabet.len();
        if n == 0 || n > MAX_ALPHABET {
            return Err(Error::SizeLimit(format!("alphabet of {n} symbols; allowed 1..={MAX_ALPHABET}")));
        }
        validate_pmf(&self.default, n)?;
        for (_, pmf) in &self.rules {
            validate_pmf(pmf, n)?;
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// `b_y` for a set batch.
    pub fn pmf(&self, y: u16) -> &[f64] {
        self.rules.iter().find(|(c, _)| c.matches(y)).map(|(_, p)| p.as_slice()).unwrap_or(&self.default)
    }

    /// `b_y` for any batch; split batches release both halves.
    pub fn batch_pmf(&self, batch: Batch) -> Vec<f64> {
        match batch {
            Batch::Set(y) => self.pmf(y).to_vec(),
            Batch::Split(a, b) => {
                let (pa, pb) = (self.pmf(a), self.pmf(b));
                pa.iter().flat_map(|&u| pb.iter().map(move |&v| u * v)).collect()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// Serialized instance `{universe, x, x′, scheme, table}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub universe: Vec<String>,
    pub x: Vec<String>,
    #[serde(rename = "x′", alias = "x_prime")]
    pub x_prime: Vec<String>,
    pub scheme: SubsamplingScheme,
    pub table: TableSpec,
}

/// Two datasets over a small universe, a subsampling scheme and a base mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct DiscreteInstance {
    universe: Vec<String>,
    x: u16,
    x_prime: u16,
    scheme: SubsamplingScheme,
    base: DiscreteBaseMechanism,
}

impl TryFrom<InstanceSpec> for DiscreteInstance {
    type Error = Error;
    fn try_from(spec: InstanceSpec) -> Result<Self> {
        DiscreteInstance::from_spec(&spec)
    }
}

impl From<DiscreteInstance> for InstanceSpec {
    fn from(inst: DiscreteInstance) -> Self {
        inst.to_spec()
    }
}

impl DiscreteInstance {
    pub(crate) fn new(
        universe: Vec<String>,
        x: u16,
        x_prime: u16,
        scheme: SubsamplingScheme,
        base: DiscreteBaseMechanism,
    ) -> Result<Self> {
        if universe.len() > MAX_UNIVERSE {
            return Err(Error::SizeLimit(format!("universe of {} elements; at most {MAX_UNIVERSE}", universe.len())));
        }
        for (i, a) in universe.iter().enumerate() {
            if universe[..i].contains(a) {
                return Err(invalid(format!("duplicate universe element {a:?}")));
            }
        }
        let full: u16 = if universe.len() == 16 { u16::MAX } else { (1u16 << universe.len()) - 1 };
        if x & !full != 0 || x_prime & !full != 0 {
            return Err(invalid("datasets must be subsets of the universe"));
        }
        scheme.validate()?;
        base.validate()?;
        let inst = Self { universe, x, x_prime, scheme, base };
        for d in [x, x_prime] {
            inst.check_enumerable(d)?;
        }
        Ok(inst)
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self> {
        let universe = spec.universe.clone();
        if universe.len() > MAX_UNIVERSE {
            return Err(Error::SizeLimit(format!("universe of {} elements; at most {MAX_UNIVERSE}", universe.len())));
        }
        let mask = |names: &[String]| -> Result<u16> { mask_of(&universe, names) };
        let mut rules = Vec::with_capacity(spec.table.rules.len());
        for r in &spec.table.rules {
            let c = match &r.when {
                ConditionSpec::ContainsAny { elements } => Condition::ContainsAny(mask(elements)?),
                ConditionSpec::CountEquals { elements, count } => Condition::CountEquals(mask(elements)?, *count),
                ConditionSpec::Exact { elements } => Condition::Exact(mask(elements)?),
            };
            rules.push((c, r.pmf.clone()));
        }
        let base = DiscreteBaseMechanism { alphabet: spec.table.alphabet.clone(), rules, default: spec.table.default.clone() };
        Self::new(universe.clone(), mask(&spec.x)?, mask(&spec.x_prime)?, spec.scheme, base)
    }

    pub fn to_spec(&self) -> InstanceSpec {
        let names = |m: u16| self.names(m);
        let rules = self
            .base
            .rules
            .iter()
            .map(|(c, pmf)| RuleSpec {
                when: match *c {
                    Condition::ContainsAny(m) => ConditionSpec::ContainsAny { elements: names(m) },
                    Condition::CountEquals(m, count) => ConditionSpec::CountEquals { elements: names(m), count },
                    Condition::Exact(m) => ConditionSpec::Exact { elements: names(m) },
                },
                pmf: pmf.clone(),
            })
            .collect();
        InstanceSpec {
            universe: self.universe.clone(),
            x: names(self.x),
            x_prime: names(self.x_prime),
            scheme: self.scheme,
            table: TableSpec { alphabet: self.base.alphabet.clone(), rules, default: self.base.default.clone() },
        }
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn x(&self) -> u16 {
        self.x
    }

    pub fn x_prime(&self) -> u16 {
        self.x_prime
    }

    pub fn scheme(&self) -> SubsamplingScheme {
        self.scheme
    }

    pub fn base(&self) -> &DiscreteBaseMechanism {
        &self.base
    }

    /// Element names of a bitmask, in universe order.
    pub fn names(&self, m: u16) -> Vec<String> {
        (0..self.universe.len()).filter(|i| m >> i & 1 == 1).map(|i| self.universe[i].clone()).collect()
    }

    pub fn mask(&self, names: &[String]) -> Result<u16> {
        mask_of(&self.universe, names)
    }

    fn check_enumerable(&self, dataset: u16) -> Result<()> {
        let n = dataset.count_ones() as usize;
        match self.scheme {
            SubsamplingScheme::Poisson { .. } => Ok(()),
            SubsamplingScheme::WithoutReplacement { batch_size, .. } if batch_size as usize > n => {
                Err(invalid(format!("batch size {batch_size} exceeds dataset size {n}")))
            }
            SubsamplingScheme::WithoutReplacement { .. } => Ok(()),
            SubsamplingScheme::PermutePartition { half_size } => {
                if n > MAX_PARTITION_DATASET {
                    Err(Error::SizeLimit(format!("permute-and-partition over {n} records; at most {MAX_PARTITION_DATASET}")))
                } else if n != 2 * half_size as usize {
                    Err(invalid(format!("permute-and-partition needs |x| = 2N = {}, got {n}", 2 * half_size)))
                } else {
                    Ok(())
                }
            }
            SubsamplingScheme::WithReplacement { .. } => {
                Err(Error::UnsupportedMechanism("the oracle enumerates set-valued batches only".into()))
            }
        }
    }
}

fn mask_of(universe: &[String], names: &[String]) -> Result<u16> {
    let mut m = 0u16;
    for n in names {
        let i = universe.iter().position(|u| u == n).ok_or_else(|| invalid(format!("unknown element {n:?}")))?;
        m |= 1 << i;
    }
    Ok(m)
}

/// Subsets of `mask`, in increasing numeric order.
pub(crate) fn subsets(mask: u16) -> impl Iterator<Item = u16> {
    let mut next = Some(0u16);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask { None } else { Some((cur.wrapping_sub(mask)) & mask) };
        Some(cur)
    })
}

/// `r^k (1 − r)^{n−k}` with `0^0 = 1`.
fn poisson_weight(r: f64, k: u32, n: u32) -> f64 {
    let pow = |b: f64, e: u32| if e == 0 { 1.0 } else { b.powi(e as i32) };
    pow(r, k) * pow(1.0 - r, n - k)
}

/// Exact subsampling pmf of `dataset`.
pub fn subsample_distribution(inst: &DiscreteInstance, dataset: u16) -> Result<BatchPmf> {
    inst.check_enumerable(dataset)?;
    let n = dataset.count_ones();
    let mut out = BatchPmf::new();
    match inst.scheme {
        SubsamplingScheme::Poisson { rate } => {
            for y in subsets(dataset) {
                let w = poisson_weight(rate, y.count_ones(), n);
                if w > 0.0 {
                    out.insert(Batch::Set(y), w);
                }
            }
        }
        SubsamplingScheme::WithoutReplacement { batch_size, .. } => {
            let w = (-ln_choose(n as u64, batch_size)).exp();
            for y in subsets(dataset).filter(|y| y.count_ones() == batch_size as u32) {
                out.insert(Batch::Set(y), w);
            }
        }
        SubsamplingScheme::PermutePartition { half_size } => {
            let w = (-ln_choose(n as u64, half_size)).exp();
            for y in subsets(dataset).filter(|y| y.count_ones() == half_size as u32) {
                out.insert(Batch::Split(y, dataset & !y), w);
            }
        }
        SubsamplingScheme::WithReplacement { .. } => unreachable!("rejected by check_enumerable"),
    }
    Ok(out)
}

/// Output alphabet size of the subsampled mechanism.
pub fn output_size(inst: &DiscreteInstance) -> usize {
    let n = inst.base.alphabet.len();
    match inst.scheme {
        SubsamplingScheme::PermutePartition { .. } => n * n,
        _ => n,
    }
}

/// `Σ_y b_y · weights(y)` over an arbitrary batch pmf.
pub(crate) fn mixture_of(inst: &DiscreteInstance, weights: impl IntoIterator<Item = (Batch, f64)>) -> Vec<f64> {
    let mut out = vec![0.0; output_size(inst)];
    for (y, w) in weights {
        for (o, p) in out.iter_mut().zip(inst.base.batch_pmf(y)) {
            *o += w * p;
        }
    }
    out
}

/// `m_x(z) = Σ_y b_y(z)·s_x(y)`.
pub fn mixture_output_distribution(inst: &DiscreteInstance, dataset: u16) -> Result<Vec<f64>> {
    Ok(mixture_of(inst, subsample_distribution(inst, dataset)?))
}

/// Hockey-stick `Σ (p − αq)₊` or Rényi moment `Σ p^α q^{1−α}` of two pmfs.
pub fn discrete_divergence(p: &[f64], q: &[f64], alpha: f64, kind: DivergenceKind) -> Result<f64> {
    match kind {
        DivergenceKind::HockeyStick => {
            if !(alpha >= 0.0) {
                return Err(Error::UnsupportedOrder(format!("hockey-stick order must be ≥ 0, got {alpha}")));
            }
            Ok(p.iter().zip(q).map(|(&a, &b)| (a - alpha * b).max(0.0)).sum())
        }
        DivergenceKind::Renyi => {
            if !(alpha > 1.0) || !alpha.is_finite() {
                return Err(Error::UnsupportedOrder(format!("Rényi order must be finite and > 1, got {alpha}")));
            }
            let mut total = 0.0;
            for (&a, &b) in p.iter().zip(q) {
                if a == 0.0 {
                    continue;
                }
                if b == 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += a.powf(alpha) * b.powf(1.0 - alpha);
            }
            Ok(total)
        }
    }
}

/// Divergence between the exact output mixtures of `x` and `x′`.
pub fn exact_divergence(inst: &DiscreteInstance, alpha: f64, kind: DivergenceKind) -> Result<f64> {
    let p = mixture_output_distribution(inst, inst.x)?;
    let q = mixture_output_distribution(inst, inst.x_prime)?;
    discrete_divergence(&p, &q, alpha, kind)
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;

    /// Poisson instance with a fixed asymmetric ternary table keyed on batch size
    /// parity and membership of the first element.
    pub fn group_instance(universe: &[&str], x: &[&str], xp: &[&str], rate: f64) -> DiscreteInstance {
        let s = |v: &[&str]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        let first = s(&universe[..1]);
        let spec = InstanceSpec {
            universe: s(universe),
            x: s(x),
            x_prime: s(xp),
            scheme: SubsamplingScheme::Poisson { rate },
            table: TableSpec {
                alphabet: s(&["u", "v", "w"]),
                rules: vec![
                    RuleSpec { when: ConditionSpec::ContainsAny { elements: first }, pmf: vec![0.5, 0.25, 0.25] },
                    RuleSpec { when: ConditionSpec::CountEquals { elements: s(universe), count: 1 }, pmf: vec![0.125, 0.625, 0.25] },
                    RuleSpec { when: ConditionSpec::CountEquals { elements: s(universe), count: 2 }, pmf: vec![0.0625, 0.1875, 0.75] },
                ],
                default: vec![0.25, 0.25, 0.5],
            },
        };
        DiscreteInstance::from_spec(&spec).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn instance(x: &[&str], xp: &[&str], scheme: SubsamplingScheme, table: TableSpec) -> DiscreteInstance {
        DiscreteInstance::from_spec(&InstanceSpec {
            universe: names(&["a", "b", "c"]),
            x: names(x),
            x_prime: names(xp),
            scheme,
            table,
        })
        .unwrap()
    }

    fn rr_table() -> TableSpec {
        TableSpec {
            alphabet: names(&["0", "1"]),
            rules: vec![RuleSpec { when: ConditionSpec::ContainsAny { elements: names(&["a"]) }, pmf: vec![0.25, 0.75] }],
            default: vec![0.75, 0.25],
        }
    }

    #[test]
    fn subsets_enumerates_all() {
        let all: Vec<u16> = subsets(0b1011).collect();
        assert_eq!(all, vec![0, 1, 2, 3, 8, 9, 10, 11]);
        assert_eq!(subsets(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn subsampling_examples() {
        let p = SubsamplingScheme::Poisson { rate: 0.5 };
        let inst = instance(&["a"], &[], p, rr_table());
        let s = subsample_distribution(&inst, inst.x()).unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![(Batch::Set(0), 0.5), (Batch::Set(1), 0.5)]);

        let wor = SubsamplingScheme::WithoutReplacement { dataset_size: 2, batch_size: 1 };
        let inst = instance(&["a", "b"], &["a", "b"], wor, rr_table());
        let s = subsample_distribution(&inst, inst.x()).unwrap();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![(Batch::Set(1), 0.5), (Batch::Set(2), 0.5)]);

        let inst = instance(&["a", "b"], &[], SubsamplingScheme::Poisson { rate: 0.2 }, rr_table());
        let s = subsample_distribution(&inst, inst.x()).unwrap();
        let v: Vec<f64> = s.values().copied().collect();
        for (a, b) in v.iter().zip([0.64, 0.16, 0.16, 0.04]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn mixture_examples() {
        let inst = instance(&["a"], &[], SubsamplingScheme::Poisson { rate: 0.5 }, rr_table());
        assert_eq!(mixture_output_distribution(&inst, inst.x()).unwrap(), vec![0.5, 0.5]);
        let zero = instance(&["a"], &[], SubsamplingScheme::Poisson { rate: 0.0 }, rr_table());
        assert_eq!(mixture_output_distribution(&zero, zero.x()).unwrap(), vec![0.75, 0.25]);
        // Deterministic base: pushforward of the batch pmf.
        let det = TableSpec {
            alphabet: names(&["none", "some"]),
            rules: vec![RuleSpec { when: ConditionSpec::CountEquals { elements: names(&["a", "b"]), count: 0 }, pmf: vec![1.0, 0.0] }],
            default: vec![0.0, 1.0],
        };
        let inst = instance(&["a", "b"], &[], SubsamplingScheme::Poisson { rate: 0.2 }, det);
        let m = mixture_output_distribution(&inst, inst.x()).unwrap();
        assert_relative_eq!(m[0], 0.64, epsilon = 1e-15);
        assert_relative_eq!(m[1], 0.36, epsilon = 1e-15);
    }

    #[test]
    fn divergence_examples() {
        let inst = instance(&["a"], &[], SubsamplingScheme::Poisson { rate: 0.5 }, rr_table());
        assert_relative_eq!(exact_divergence(&inst, 2.0, DivergenceKind::Renyi).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        let same = instance(&["a", "b"], &["a", "b"], SubsamplingScheme::Poisson { rate: 0.3 }, rr_table());
        assert_eq!(exact_divergence(&same, 1.0, DivergenceKind::HockeyStick).unwrap(), 0.0);
        assert_relative_eq!(exact_divergence(&same, 3.0, DivergenceKind::Renyi).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(exact_divergence(&inst, 1e300, DivergenceKind::HockeyStick).unwrap(), 0.0);
    }

    #[test]
    fn permute_partition_product_alphabet() {
        let scheme = SubsamplingScheme::PermutePartition { half_size: 1 };
        let inst = instance(&["a", "b"], &["b", "c"], scheme, rr_table());
        let s = subsample_distribution(&inst, inst.x()).unwrap();
        assert_eq!(s.len(), 2);
        let m = mixture_output_distribution(&inst, inst.x()).unwrap();
        assert_eq!(m.len(), 4);
        assert_relative_eq!(m.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn permute_partition_meets_epoch_bound() {
        use crate::amplification::{epoch_permute_partition_rdp, BaseMechanismSpec};
        let theta = 0.8;
        let pmf = |b: f64| vec![1.0 - b, b];
        for half in [1u64, 2] {
            let mut universe = names(&["a", "a′"]);
            universe.extend((1..2 * half).map(|i| format!("c{i}")));
            let common: Vec<String> = universe[2..].to_vec();
            let with = |first: &str| std::iter::once(first.to_string()).chain(common.iter().cloned()).collect();
            for alpha in [2.0, 3.0, 6.5] {
                let bound = epoch_permute_partition_rdp(&BaseMechanismSpec::randomized_response(theta), alpha).unwrap().moment();
                let mut best: f64 = 0.0;
                // Outputs of the batch holding a, the batch holding a′, and the other batch.
                for (b1, b1p, b2) in [(theta, 1.0 - theta), (1.0 - theta, theta)]
                    .into_iter()
                    .flat_map(|(u, v)| [(u, v, theta), (u, v, 1.0 - theta)])
                {
                    let spec = InstanceSpec {
                        universe: universe.clone(),
                        x: with("a"),
                        x_prime: with("a′"),
                        scheme: SubsamplingScheme::PermutePartition { half_size: half },
                        table: TableSpec {
                            alphabet: names(&["0", "1"]),
                            rules: vec![
                                RuleSpec { when: ConditionSpec::ContainsAny { elements: names(&["a"]) }, pmf: pmf(b1) },
                                RuleSpec { when: ConditionSpec::ContainsAny { elements: names(&["a′"]) }, pmf: pmf(b1p) },
                            ],
                            default: pmf(b2),
                        },
                    };
                    let inst = DiscreteInstance::from_spec(&spec).unwrap();
                    let exact = exact_divergence(&inst, alpha, DivergenceKind::Renyi).unwrap();
                    assert!(exact <= bound * (1.0 + 1e-12));
                    best = best.max(exact);
                }
                assert_relative_eq!(best, bound, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn size_limits_are_errors() {
        let universe: Vec<String> = (0..13).map(|i| format!("e{i}")).collect();
        let spec = InstanceSpec {
            universe,
            x: vec![],
            x_prime: vec![],
            scheme: SubsamplingScheme::Poisson { rate: 0.5 },
            table: rr_table(),
        };
        assert!(matches!(DiscreteInstance::from_spec(&spec), Err(Error::SizeLimit(_))));
        let mut big = rr_table();
        big.alphabet = (0..9).map(|i| i.to_string()).collect();
        big.rules.clear();
        big.default = vec![1.0 / 9.0; 9];
        let spec = InstanceSpec { universe: names(&["a"]), x: vec![], x_prime: vec![], scheme: SubsamplingScheme::Poisson { rate: 0.5 }, table: big };
        assert!(DiscreteInstance::from_spec(&spec).is_err());
    }

    #[test]
    fn json_round_trip() {
        let inst = instance(&["a", "b"], &["b"], SubsamplingScheme::Poisson { rate: 0.3 }, rr_table());
        let s = serde_json::to_string(&inst).unwrap();
        assert!(s.contains("\"x′\""));
        assert_eq!(serde_json::from_str::<DiscreteInstance>(&s).unwrap(), inst);
    }
}
