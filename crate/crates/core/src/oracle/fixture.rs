//! JSON verification fixtures: an instance, an optional coupling and a list
//! of checks, each reported as pass or fail.

use super::constructions::RrBranch;
use super::coupling::{
    canonical_group_coupling, check_coupling_valid, check_distance_compatible, check_events_partition,
    conditional_marginals, per_batch_coupling, transport_bound_value, BatchRelation, CheckReport, Coupling, Event,
};
use super::{exact_divergence, Batch, BatchPmf, DiscreteInstance};
use crate::amplification::{epoch_permute_partition_rdp, poisson_group_pair, wor_substitution_pair, BaseMechanismSpec, GroupRelation};
use crate::divergence::{divergence, DivergenceKind, EvalOptions};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventSpec {
    All,
    CountIn { elements: Vec<String>, count: u32 },
    Exactly { elements: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleSpec {
    pub batches: Vec<Vec<String>>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    /// The canonical Poisson group coupling.
    Canonical,
    /// One conditioning event per batch.
    PerBatch,
    Explicit { first_events: Vec<EventSpec>, second_events: Vec<EventSpec>, support: Vec<TupleSpec> },
}

impl CouplingSpec {
    pub fn build(&self, inst: &DiscreteInstance) -> Result<Coupling> {
        match self {
            CouplingSpec::Canonical => canonical_group_coupling(inst),
            CouplingSpec::PerBatch => per_batch_coupling(inst),
            CouplingSpec::Explicit { first_events, second_events, support } => {
                let event = |e: &EventSpec| -> Result<Event> {
                    Ok(match e {
                        EventSpec::All => Event::All,
                        EventSpec::CountIn { elements, count } => Event::CountIn { elements: inst.mask(elements)?, count: *count },
                        EventSpec::Exactly { elements } => Event::Exactly(Batch::Set(inst.mask(elements)?)),
                    })
                };
                let support = support
                    .iter()
                    .map(|t| {
                        let batches = t.batches.iter().map(|b| inst.mask(b).map(Batch::Set)).collect::<Result<_>>()?;
                        Ok((batches, t.weight))
                    })
                    .collect::<Result<_>>()?;
                Ok(Coupling {
                    first_events: first_events.iter().map(event).collect::<Result<_>>()?,
                    second_events: second_events.iter().map(event).collect::<Result<_>>()?,
                    support,
                })
            }
        }
    }
}

/// Closed-form value a fixture compares the exact divergence against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case")]
pub enum ClosedForm {
    /// Randomized-response candidate for a Poisson group relation.
    RrPoissonGroup { r: f64, theta: f64, k_plus: u64, k_minus: u64, branch: RrBranch },
    /// Randomized-response candidate for WOR substitution.
    RrWorSubstitution { theta: f64, dataset_size: u64, batch_size: u64, branch: RrBranch },
    /// Conditional epoch bound for permute-and-partition (Rényi only).
    RrEpoch { theta: f64 },
}

impl ClosedForm {
    pub fn value(&self, alpha: f64, kind: DivergenceKind) -> Result<f64> {
        let candidate = |set: crate::amplification::BoundCandidateSet, branch: RrBranch| -> Result<f64> {
            let (p, q) = &set.pairs()[match branch {
                RrBranch::Theta => 0,
                RrBranch::OneMinusTheta => 1,
            }];
            Ok(divergence(p, q, alpha, kind, &EvalOptions::default())?.value)
        };
        match *self {
            ClosedForm::RrPoissonGroup { r, theta, k_plus, k_minus, branch } => candidate(
                poisson_group_pair(&BaseMechanismSpec::randomized_response(theta), r, GroupRelation::new(k_plus, k_minus))?,
                branch,
            ),
            ClosedForm::RrWorSubstitution { theta, dataset_size, batch_size, branch } => candidate(
                wor_substitution_pair(&BaseMechanismSpec::randomized_response(theta), dataset_size, batch_size)?,
                branch,
            ),
            ClosedForm::RrEpoch { theta } => match kind {
                DivergenceKind::Renyi => Ok(epoch_permute_partition_rdp(&BaseMechanismSpec::randomized_response(theta), alpha)?.moment()),
                DivergenceKind::HockeyStick => {
                    Err(Error::UnsupportedMechanism("the epoch bound is stated for Rényi divergences".into()))
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Exact divergence equals the reference.
    #[default]
    Equal,
    /// Exact divergence does not exceed the reference.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    ExactDivergence {
        divergence: DivergenceKind,
        alpha: f64,
        expected: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Events partition the batch supports and the coupling has the
    /// conditional marginals.
    CouplingValid,
    DistanceCompatible { relation: BatchRelation },
    /// Transport bound is at least the exact divergence.
    TransportSound { divergence: DivergenceKind, alphas: Vec<f64> },
    /// Transport bound equals the exact divergence.
    TransportTight { divergence: DivergenceKind, alphas: Vec<f64> },
    ClosedForm {
        bound: ClosedForm,
        divergence: DivergenceKind,
        alphas: Vec<f64>,
        #[serde(default)]
        comparison: Comparison,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub instance: DiscreteInstance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub passed: bool,
    pub outcomes: Vec<CheckOutcome>,
}

fn render_batch(inst: &DiscreteInstance, b: &Batch) -> String {
    let set = |m: u16| format!("{{{}}}", inst.names(m).join(","));
    match *b {
        Batch::Set(m) => set(m),
        Batch::Split(a, c) => format!("{}|{}", set(a), set(c)),
    }
}

fn render_report(inst: &DiscreteInstance, report: &CheckReport) -> String {
    if report.ok() {
        return "ok".into();
    }
    let first = &report.violations[0];
    let tuple = first
        .tuple
        .as_ref()
        .map(|t| format!(" at tuple ({})", t.iter().map(|b| render_batch(inst, b)).collect::<Vec<_>>().join(", ")))
        .unwrap_or_default();
    let batch = first.batch.map(|b| format!(" on batch {}", render_batch(inst, &b))).unwrap_or_default();
    format!("{} violation(s); first: {}{batch}{tuple}", report.violations.len(), first.message)
}

fn marginal_pmfs(inst: &DiscreteInstance, c: &Coupling) -> Result<Vec<BatchPmf>> {
    Ok(conditional_marginals(inst, c)?.into_iter().map(|(_, m)| m).collect())
}

/// `(passed, detail)` over a list of orders.
fn compare_all(
    alphas: &[f64],
    mut each: impl FnMut(f64) -> Result<(bool, String)>,
) -> Result<(bool, String)> {
    let mut details = Vec::with_capacity(alphas.len());
    let mut passed = true;
    for &a in alphas {
        let (ok, d) = each(a)?;
        passed &= ok;
        details.push(format!("α={a}: {d}"));
    }
    Ok((passed, details.join("; ")))
}

fn run_check(fixture: &Fixture, coupling: Option<&Result<Coupling>>, check: &Check) -> Result<(bool, String)> {
    let inst = &fixture.instance;
    let need_coupling = || -> Result<&Coupling> {
        match coupling {
            Some(Ok(c)) => Ok(c),
            Some(Err(e)) => Err(e.clone()),
            None => Err(Error::Precondition("fixture has no coupling".into())),
        }
    };
    match check {
        Check::ExactDivergence { divergence, alpha, expected, tol } => {
            let got = exact_divergence(inst, *alpha, *divergence)?;
            Ok(((got - expected).abs() <= *tol, format!("exact {got:.15e}, expected {expected:.15e}")))
        }
        Check::CouplingValid => {
            let c = need_coupling()?;
            let mut report = check_events_partition(inst, c)?;
            report.violations.extend(check_coupling_valid(c, &marginal_pmfs(inst, c)?).violations);
            Ok((report.ok(), render_report(inst, &report)))
        }
        Check::DistanceCompatible { relation } => {
            let c = need_coupling()?;
            let report = check_distance_compatible(c, &marginal_pmfs(inst, c)?, *relation)?;
            Ok((report.ok(), render_report(inst, &report)))
        }
        Check::TransportSound { divergence, alphas } => {
            let c = need_coupling()?;
            compare_all(alphas, |a| {
                let exact = exact_divergence(inst, a, *divergence)?;
                let bound = transport_bound_value(c, inst, a, *divergence)?;
                Ok((exact <= bound + 1e-12, format!("exact {exact:.12e} ≤ bound {bound:.12e}")))
            })
        }
        Check::TransportTight { divergence, alphas } => {
            let c = need_coupling()?;
            compare_all(alphas, |a| {
                let exact = exact_divergence(inst, a, *divergence)?;
                let bound = transport_bound_value(c, inst, a, *divergence)?;
                Ok(((exact - bound).abs() <= 1e-12, format!("exact {exact:.12e}, bound {bound:.12e}")))
            })
        }
        Check::ClosedForm { bound, divergence, alphas, comparison } => compare_all(alphas, |a| {
            let exact = exact_divergence(inst, a, *divergence)?;
            let reference = bound.value(a, *divergence)?;
            let ok = match comparison {
                Comparison::Equal => (exact - reference).abs() <= 1e-12 * reference.abs().max(1.0),
                Comparison::UpperBound => exact <= reference + 1e-12 * reference.abs().max(1.0),
            };
            Ok((ok, format!("exact {exact:.12e}, closed form {reference:.12e}")))
        }),
    }
}

/// Runs every check; errors inside a check count as failures.
pub fn verify_fixture(fixture: &Fixture) -> FixtureReport {
    let coupling = fixture.coupling.as_ref().map(|spec| spec.build(&fixture.instance));
    let outcomes: Vec<CheckOutcome> = fixture
        .checks
        .iter()
        .map(|check| {
            let label = serde_json::to_value(check)
                .ok()
                .and_then(|v| v.get("check").and_then(|c| c.as_str()).map(String::from))
                .unwrap_or_default();
            match run_check(fixture, coupling.as_ref(), check) {
                Ok((passed, detail)) => CheckOutcome { check: label, passed, detail },
                Err(e) => CheckOutcome { check: label, passed: false, detail: e.to_string() },
            }
        })
        .collect();
    FixtureReport { name: fixture.name.clone(), passed: outcomes.iter().all(|o| o.passed), outcomes }
}

#[cfg(test)]
mod tests {
    use super::super::constructions::rr_worst_case_instance;
    use super::*;

    #[test]
    fn canonical_fixture_passes() {
        let inst = rr_worst_case_instance(0.4, 0.8, 1, 2, RrBranch::OneMinusTheta).unwrap();
        let fixture = Fixture {
            name: "rr-group".into(),
            description: None,
            instance: inst,
            coupling: Some(CouplingSpec::Canonical),
            checks: vec![
                Check::CouplingValid,
                Check::DistanceCompatible { relation: BatchRelation::InsertionRemoval },
                Check::TransportSound { divergence: DivergenceKind::HockeyStick, alphas: vec![1.0, 2.0] },
                Check::ClosedForm {
                    bound: ClosedForm::RrPoissonGroup { r: 0.4, theta: 0.8, k_plus: 1, k_minus: 2, branch: RrBranch::OneMinusTheta },
                    divergence: DivergenceKind::Renyi,
                    alphas: vec![2.0, 5.0],
                    comparison: Comparison::Equal,
                },
            ],
        };
        let json = serde_json::to_string_pretty(&fixture).unwrap();
        let back: Fixture = serde_json::from_str(&json).unwrap();
        let report = verify_fixture(&back);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn broken_coupling_fails_with_tuple() {
        let inst = rr_worst_case_instance(0.5, 0.7, 0, 1, RrBranch::OneMinusTheta).unwrap();
        let fixture = Fixture {
            name: "bad".into(),
            description: None,
            instance: inst,
            coupling: Some(CouplingSpec::Explicit {
                first_events: vec![EventSpec::All],
                second_events: vec![EventSpec::All],
                support: vec![TupleSpec { batches: vec![vec!["m1".into()], vec![]], weight: 1.0 }],
            }),
            checks: vec![Check::CouplingValid, Check::TransportSound { divergence: DivergenceKind::Renyi, alphas: vec![2.0] }],
        };
        let report = verify_fixture(&fixture);
        assert!(!report.passed);
        assert!(report.outcomes.iter().all(|o| !o.passed));
    }
}
