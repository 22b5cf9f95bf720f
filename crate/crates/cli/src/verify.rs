//! `oracle-verify`: bundled, user-supplied or seeded random fixtures.

use crate::error::CliError;
use crate::output::SCHEMA_VERSION;
use privamp::divergence::DivergenceKind;
use privamp::oracle::{random_group_instance, verify_fixture, BatchRelation, Check, CouplingSpec, Fixture, FixtureReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::PathBuf;

/// Tightness and coupling fixtures shipped with the binary; all must pass.
pub const BUNDLED: &[(&str, &str)] = &[
    ("rr-single-removal.json", include_str!("../fixtures/rr-single-removal.json")),
    ("rr-group-canonical.json", include_str!("../fixtures/rr-group-canonical.json")),
    ("rr-group-insertions.json", include_str!("../fixtures/rr-group-insertions.json")),
    ("wor-substitution-tight.json", include_str!("../fixtures/wor-substitution-tight.json")),
    ("epoch-partition-tight.json", include_str!("../fixtures/epoch-partition-tight.json")),
    ("per-batch-exact.json", include_str!("../fixtures/per-batch-exact.json")),
];

const ORDERS: [f64; 4] = [1.0, std::f64::consts::E, 2.0, 4.0];

/// Canonical-coupling checks on a random Poisson group instance.
fn random_fixture(name: String, rng: &mut ChaCha8Rng) -> Result<(Fixture, Fixture), CliError> {
    let instance = random_group_instance(rng, 6, 3)?;
    let canonical = Fixture {
        name: format!("{name}-canonical"),
        description: None,
        instance: instance.clone(),
        coupling: Some(CouplingSpec::Canonical),
        checks: vec![
            Check::CouplingValid,
            Check::DistanceCompatible { relation: BatchRelation::InsertionRemoval },
            Check::TransportSound { divergence: DivergenceKind::HockeyStick, alphas: ORDERS.to_vec() },
            Check::TransportSound { divergence: DivergenceKind::Renyi, alphas: ORDERS[1..].to_vec() },
        ],
    };
    let per_batch = Fixture {
        name: format!("{name}-per-batch"),
        description: None,
        instance,
        coupling: Some(CouplingSpec::PerBatch),
        checks: vec![
            Check::TransportTight { divergence: DivergenceKind::HockeyStick, alphas: ORDERS.to_vec() },
            Check::TransportTight { divergence: DivergenceKind::Renyi, alphas: ORDERS[1..].to_vec() },
        ],
    };
    Ok((canonical, per_batch))
}

fn parse_fixture(label: &str, text: &str) -> Result<Fixture, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("fixture {label}: {e}")))
}

pub struct VerifyArgs {
    pub fixtures: Vec<PathBuf>,
    pub bundled: bool,
    pub random: Option<usize>,
    pub seed: u64,
}

/// Report document and whether every check passed. Failed fixtures carry
/// their serialized instance.
pub fn oracle_verify(args: &VerifyArgs, pool: &rayon::ThreadPool) -> Result<(Value, bool), CliError> {
    let mut fixtures = Vec::new();
    let run_bundled = args.bundled || (args.fixtures.is_empty() && args.random.is_none());
    if run_bundled {
        for (name, text) in BUNDLED {
            fixtures.push(parse_fixture(name, text)?);
        }
    }
    for path in &args.fixtures {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        fixtures.push(parse_fixture(&path.display().to_string(), &text)?);
    }
    if let Some(count) = args.random {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        for i in 0..count {
            let (a, b) = random_fixture(format!("random-{}-{i}", args.seed), &mut rng)?;
            fixtures.push(a);
            fixtures.push(b);
        }
    }
    let reports: Vec<FixtureReport> = pool.install(|| fixtures.par_iter().map(verify_fixture).collect());
    let passed = reports.iter().all(|r| r.passed);
    let entries: Vec<Value> = reports
        .iter()
        .zip(&fixtures)
        .map(|(r, f)| {
            let mut v = json!(r);
            if !r.passed {
                v["instance"] = json!(f.instance);
            }
            v
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "oracle-verify",
        "passed": passed,
        "fixtures": entries,
    });
    Ok((doc, passed))
}
