//! Conditional couplings, their validity and distance checks, and the
//! transport bound they certify.

use super::{discrete_divergence, mixture_of, poisson_weight, subsample_distribution, subsets, Batch, BatchPmf, DiscreteInstance};
use crate::amplification::SubsamplingScheme;
use crate::divergence::DivergenceKind;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};

/// Coupling tolerance on marginals and total mass.
pub const COUPLING_TOL: f64 = 1e-12;
/// Largest coupling support the canonical construction materialises.
pub const MAX_COUPLING_SUPPORT: usize = 1 << 20;

/// An event over batches used to condition a subsampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    All,
    /// Exactly `count` of the elements in the mask were sampled.
    CountIn { elements: u16, count: u32 },
    Exactly(Batch),
}

impl Event {
    pub fn contains(&self, batch: Batch) -> bool {
        match *self {
            Event::All => true,
            Event::CountIn { elements, count } => batch.as_set().is_some_and(|y| (y & elements).count_ones() == count),
            Event::Exactly(b) => b == batch,
        }
    }
}

/// Joint distribution over tuples `(y⁽¹⁾_1..y⁽¹⁾_I, y⁽²⁾_1..y⁽²⁾_J)`, whose
/// first `I` coordinates couple `s_x(·|A_i)` and last `J` couple `s_x′(·|E_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub first_events: Vec<Event>,
    pub second_events: Vec<Event>,
    pub support: Vec<(Vec<Batch>, f64)>,
}

impl Coupling {
    pub fn arity(&self) -> usize {
        self.first_events.len() + self.second_events.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub message: String,
    /// Offending support tuple, if the violation concerns one.
    pub tuple: Option<Vec<Batch>>,
    /// Offending batch, for marginal and partition violations.
    pub batch: Option<Batch>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, message: String, tuple: Option<&[Batch]>) {
        self.violations.push(Violation { message, tuple: tuple.map(<[Batch]>::to_vec), batch: None });
    }

    fn push_batch(&mut self, message: String, batch: Batch) {
        self.violations.push(Violation { message, tuple: None, batch: Some(batch) });
    }
}

/// Event probabilities and conditional pmfs: `(P(A_i), s_x(·|A_i))` followed
/// by `(P(E_j), s_x′(·|E_j))`. Events of zero probability are errors.
pub fn conditional_marginals(inst: &DiscreteInstance, c: &Coupling) -> Result<Vec<(f64, BatchPmf)>> {
    let sx = subsample_distribution(inst, inst.x())?;
    let sxp = subsample_distribution(inst, inst.x_prime())?;
    let mut out = Vec::with_capacity(c.arity());
    for (events, s, tag) in [(&c.first_events, &sx, "A"), (&c.second_events, &sxp, "E")] {
        for (i, e) in events.iter().enumerate() {
            let restricted: BatchPmf = s.iter().filter(|(b, _)| e.contains(**b)).map(|(b, w)| (*b, *w)).collect();
            let mass: f64 = restricted.values().sum();
            if !(mass > 0.0) {
                return Err(Error::Precondition(format!("event {tag}_{} has probability 0", i + 1)));
            }
            out.push((mass, restricted.into_iter().map(|(b, w)| (b, w / mass)).collect()));
        }
    }
    Ok(out)
}

/// Every batch in the support of `s_x` (resp. `s_x′`) lies in exactly one event.
pub fn check_events_partition(inst: &DiscreteInstance, c: &Coupling) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for (events, dataset, tag) in [(&c.first_events, inst.x(), "A"), (&c.second_events, inst.x_prime(), "E")] {
        if events.is_empty() {
            report.push(format!("no {tag} events"), None);
            continue;
        }
        for b in subsample_distribution(inst, dataset)?.keys() {
            let hits = events.iter().filter(|e| e.contains(*b)).count();
            if hits != 1 {
                report.push_batch(format!("batch lies in {hits} {tag} events"), *b);
            }
        }
    }
    Ok(report)
}

/// Nonnegative weights of total mass 1 whose coordinate marginals match
/// `marginals` to within [`COUPLING_TOL`].
pub fn check_coupling_valid(c: &Coupling, marginals: &[BatchPmf]) -> CheckReport {
    let mut report = CheckReport::default();
    if marginals.len() != c.arity() {
        report.push(format!("coupling has arity {} but {} marginals were given", c.arity(), marginals.len()), None);
        return report;
    }
    let mut total = 0.0;
    let mut induced = vec![BatchPmf::new(); c.arity()];
    for (tuple, w) in &c.support {
        if tuple.len() != c.arity() {
            report.push(format!("tuple of length {} in a coupling of arity {}", tuple.len(), c.arity()), Some(tuple));
            continue;
        }
        if !(*w >= 0.0) || !w.is_finite() {
            report.push(format!("weight {w} is not a probability"), Some(tuple));
        }
        total += w;
        for (m, b) in induced.iter_mut().zip(tuple) {
            *m.entry(*b).or_insert(0.0) += w;
        }
    }
    if (total - 1.0).abs() > COUPLING_TOL {
        report.push(format!("total mass {total}"), None);
    }
    for (k, (got, want)) in induced.iter().zip(marginals).enumerate() {
        let keys: std::collections::BTreeSet<&Batch> = got.keys().chain(want.keys()).collect();
        for b in keys {
            let (g, w) = (got.get(b).copied().unwrap_or(0.0), want.get(b).copied().unwrap_or(0.0));
            if (g - w).abs() > COUPLING_TOL {
                report.push_batch(format!("coordinate {}: coupling mass {g}, marginal mass {w}", k + 1), *b);
            }
        }
    }
    report
}

/// Neighbourhood structure on set batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchRelation {
    /// Insert or remove one element.
    InsertionRemoval,
    /// Replace one element by another.
    Substitution,
    /// Either move.
    Hybrid,
}

/// Graph distances from a set of sources, by breadth-first search over all
/// subsets of an `n`-element universe. Unreachable nodes hold `u32::MAX`.
pub(crate) fn bfs_distances(n: usize, relation: BatchRelation, sources: &[u16]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; 1 << n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
    }
    let flips = matches!(relation, BatchRelation::InsertionRemoval | BatchRelation::Hybrid);
    let swaps = matches!(relation, BatchRelation::Substitution | BatchRelation::Hybrid);
    while let Some(y) = queue.pop_front() {
        let d = dist[y as usize] + 1;
        let mut visit = |z: u16| {
            if dist[z as usize] == u32::MAX {
                dist[z as usize] = d;
                queue.push_back(z);
            }
        };
        for i in 0..n {
            let bi = 1u16 << i;
            if flips {
                visit(y ^ bi);
            }
            if swaps && y & bi != 0 {
                for j in (0..n).filter(|j| y >> j & 1 == 0) {
                    visit(y ^ bi ^ (1 << j));
                }
            }
        }
    }
    dist
}

fn set_batches<'a>(items: impl IntoIterator<Item = &'a Batch>) -> Result<Vec<u16>> {
    items
        .into_iter()
        .map(|b| b.as_set().ok_or_else(|| Error::UnsupportedMechanism("distances are defined on set batches only".into())))
        .collect()
}

/// Checks that every support tuple realises the set distances of the
/// marginal supports, taking the first coordinate as reference:
/// `d(y_1, y_u) = d({y_1}, supp p_u)` and `d(y_t, y_u) = d(supp p_t, supp p_u)`
/// for `1 < t < u`. Violating tuples are cited in the report.
pub fn check_distance_compatible(c: &Coupling, marginals: &[BatchPmf], relation: BatchRelation) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let arity = c.arity();
    if marginals.len() != arity {
        report.push(format!("coupling has arity {arity} but {} marginals were given", marginals.len()), None);
        return Ok(report);
    }
    let supports: Vec<Vec<u16>> = marginals
        .iter()
        .map(|m| set_batches(m.iter().filter(|(_, w)| **w > 0.0).map(|(b, _)| b)))
        .collect::<Result<_>>()?;
    let mut all = 0u16;
    for (tuple, _) in &c.support {
        for y in set_batches(tuple)? {
            all |= y;
        }
    }
    for s in &supports {
        all |= s.iter().fold(0, |a, b| a | b);
    }
    let n = 16 - all.leading_zeros() as usize;
    if n > super::MAX_UNIVERSE {
        return Err(Error::SizeLimit(format!("distance table over {n} elements")));
    }
    let min_over = |dist: &[u32], s: &[u16]| s.iter().map(|&y| dist[y as usize]).min().unwrap_or(u32::MAX);

    // d(supp p_t, supp p_u) for t, u ≥ 2.
    let mut between = vec![vec![0u32; arity]; arity];
    for t in 1..arity {
        let from = bfs_distances(n, relation, &supports[t]);
        for u in (t + 1)..arity {
            between[t][u] = min_over(&from, &supports[u]);
        }
    }
    let mut cache: HashMap<u16, Vec<u32>> = HashMap::new();
    for (tuple, w) in &c.support {
        if !(*w > 0.0) || tuple.len() != arity {
            continue;
        }
        let ys = set_batches(tuple)?;
        let d1 = cache.entry(ys[0]).or_insert_with(|| bfs_distances(n, relation, &[ys[0]])).clone();
        for u in 1..arity {
            let want = min_over(&d1, &supports[u]);
            let got = d1[ys[u] as usize];
            if got != want {
                report.push(format!("d(y_1, y_{}) = {got} but d(y_1, supp p_{}) = {want}", u + 1, u + 1), Some(tuple));
            }
        }
        for t in 1..arity {
            let dt = cache.entry(ys[t]).or_insert_with(|| bfs_distances(n, relation, &[ys[t]])).clone();
            for u in (t + 1)..arity {
                let got = dt[ys[u] as usize];
                if got != between[t][u] {
                    report.push(
                        format!("d(y_{}, y_{}) = {got} but the supports are at distance {}", t + 1, u + 1, between[t][u]),
                        Some(tuple),
                    );
                }
            }
        }
    }
    Ok(report)
}

/// `Σ_y γ(y)·Ψ(Σ_i P(A_i)·b_{y_i} ‖ Σ_j P(E_j)·b_{y_{I+j}})` for a valid coupling.
///
/// `Ψ` is `H_α` or the Rényi moment `Λ_α`; both are jointly convex, so the
/// value upper-bounds `Ψ(m_x ‖ m_x′)`.
pub fn transport_bound_value(c: &Coupling, inst: &DiscreteInstance, alpha: f64, kind: DivergenceKind) -> Result<f64> {
    let marg = conditional_marginals(inst, c)?;
    let partition = check_events_partition(inst, c)?;
    let pmfs: Vec<BatchPmf> = marg.iter().map(|(_, m)| m.clone()).collect();
    let validity = check_coupling_valid(c, &pmfs);
    if let Some(v) = partition.violations.iter().chain(&validity.violations).next() {
        return Err(Error::Precondition(format!("invalid coupling: {}", v.message)));
    }
    let i = c.first_events.len();
    let mut total = 0.0;
    for (tuple, w) in &c.support {
        if *w == 0.0 {
            continue;
        }
        let p = mixture_of(inst, tuple[..i].iter().zip(&marg[..i]).map(|(b, (pa, _))| (*b, *pa)));
        let q = mixture_of(inst, tuple[i..].iter().zip(&marg[i..]).map(|(b, (pe, _))| (*b, *pe)));
        total += w * discrete_divergence(&p, &q, alpha, kind)?;
    }
    Ok(total)
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let rest: Vec<u8> = items.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &v)| v).collect();
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// `y₀` followed by `y₀` plus each prefix of `perm`.
fn chain(y0: u16, perm: &[u8]) -> impl Iterator<Item = Batch> + '_ {
    (0..=perm.len()).map(move |i| Batch::Set(perm[..i].iter().fold(y0, |y, &e| y | 1 << e)))
}

fn bits(mask: u16) -> Vec<u8> {
    (0..16).filter(|i| mask >> i & 1 == 1).collect()
}

/// Canonical coupling for Poisson subsampling between `x` and
/// `x′ = x ∖ g₋ ∪ g₊`, with events `A_i = {|y ∩ g₋| = i}` and
/// `E_j = {|y ∩ g₊| = j}`.
///
/// A shared batch `y₀ ⊆ x ∩ x′` is drawn by Poisson subsampling; uniformly
/// random orders of `g₋` and `g₊` then add their first `i` (resp. `j`)
/// elements to `y₀`. Coordinates satisfy `d(y⁽ˡ⁾_t, y⁽ˡ⁾_u) = |t − u|` and
/// `d(y⁽¹⁾_t, y⁽²⁾_u) = t + u` under insertion/removal.
pub fn canonical_group_coupling(inst: &DiscreteInstance) -> Result<Coupling> {
    let SubsamplingScheme::Poisson { rate } = inst.scheme() else {
        return Err(Error::UnsupportedMechanism("the canonical group coupling needs Poisson subsampling".into()));
    };
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Precondition(format!("rate {rate} gives zero-probability conditioning events")));
    }
    let (x, xp) = (inst.x(), inst.x_prime());
    let (g_minus, g_plus, shared) = (x & !xp, xp & !x, x & xp);
    let perms_minus = permutations(&bits(g_minus));
    let perms_plus = permutations(&bits(g_plus));
    let n_shared = shared.count_ones();
    let size = (1usize << n_shared).saturating_mul(perms_minus.len()).saturating_mul(perms_plus.len());
    if size > MAX_COUPLING_SUPPORT {
        return Err(Error::SizeLimit(format!("canonical coupling with {size} tuples")));
    }
    let order_weight = 1.0 / (perms_minus.len() * perms_plus.len()) as f64;
    let mut support: BTreeMap<Vec<Batch>, f64> = BTreeMap::new();
    for y0 in subsets(shared) {
        let w0 = poisson_weight(rate, y0.count_ones(), n_shared) * order_weight;
        for pm in &perms_minus {
            for pp in &perms_plus {
                let tuple: Vec<Batch> = chain(y0, pm).chain(chain(y0, pp)).collect();
                *support.entry(tuple).or_insert(0.0) += w0;
            }
        }
    }
    let events = |mask: u16| (0..=mask.count_ones()).map(move |count| Event::CountIn { elements: mask, count });
    Ok(Coupling {
        first_events: events(g_minus).collect(),
        second_events: events(g_plus).collect(),
        support: support.into_iter().collect(),
    })
}

/// One event per batch: each conditional law is a point mass, so the
/// coupling is a single tuple and the transport bound is exact.
pub fn per_batch_coupling(inst: &DiscreteInstance) -> Result<Coupling> {
    let sx = subsample_distribution(inst, inst.x())?;
    let sxp = subsample_distribution(inst, inst.x_prime())?;
    let tuple: Vec<Batch> = sx.keys().chain(sxp.keys()).copied().collect();
    Ok(Coupling {
        first_events: sx.keys().map(|b| Event::Exactly(*b)).collect(),
        second_events: sxp.keys().map(|b| Event::Exactly(*b)).collect(),
        support: vec![(tuple, 1.0)],
    })
}

/// Single-event coupling `[All] × [All]` with the given joint over `(y, y′)`.
pub fn unconditional_coupling(joint: Vec<((Batch, Batch), f64)>) -> Coupling {
    Coupling {
        first_events: vec![Event::All],
        second_events: vec![Event::All],
        support: joint.into_iter().map(|((a, b), w)| (vec![a, b], w)).collect(),
    }
}
