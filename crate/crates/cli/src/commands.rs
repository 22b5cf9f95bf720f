//! `profile`, `rdp` and `compose`: grid sweeps over methods.

use crate::config::{AccountingKind, ExperimentArgs};
use crate::error::CliError;
use crate::output::{Cell, Table};
use privamp::accounting::{
    group_plds, group_profile, max_pld_delta, max_pld_epsilon, pld_compose, plds_from_candidates, posthoc_pld_delta,
    rdp_to_adp, ConversionFormula, CurveMetadata, GroupMethod, PldOptions, PrivacyCurve, PrivacyLossDistribution,
    PrivacyPoint, ProfileSetting, RdpCurve,
};
use privamp::amplification::{
    agnostic_group_rdp, epoch_permute_partition_rdp, group_bound, poisson_group_pair, posthoc_group_rdp,
    rr_wor_tight_rdp, wang_wor_rdp, wor_substitution_pair, wr_substitution_pair, zhu_poisson_rdp, BaseMechanismSpec,
    GroupRelation, SubsamplingScheme,
};
use privamp::divergence::{divergence_of_candidates, DivergenceKind, EvalOptions};
use rayon::prelude::*;

pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))
}

/// Evaluates `f` over `tasks` on the pool; results keep the task order.
fn par_map<T: Sync, R: Send>(
    pool: &rayon::ThreadPool,
    tasks: &[T],
    f: impl Fn(&T) -> Result<R, CliError> + Sync,
) -> Result<Vec<R>, CliError> {
    pool.install(|| tasks.par_iter().map(&f).collect())
}

/// Resolved mechanism, scheme and group.
struct Setting {
    mech: BaseMechanismSpec,
    scheme: SubsamplingScheme,
    group_size: u64,
    split: Option<GroupRelation>,
    eval: EvalOptions,
}

impl Setting {
    fn from_args(args: &ExperimentArgs) -> Result<Self, CliError> {
        let s = Setting {
            mech: args.mechanism()?,
            scheme: args.scheme()?,
            group_size: args.group_size()?,
            split: args.split()?,
            eval: EvalOptions::default(),
        };
        if s.split.is_some() && !matches!(s.scheme, SubsamplingScheme::Poisson { .. }) {
            return Err(CliError::usage("--split applies to Poisson subsampling only"));
        }
        Ok(s)
    }

    fn rate(&self, method: &str) -> Result<f64, CliError> {
        match self.scheme {
            SubsamplingScheme::Poisson { rate } => Ok(rate),
            _ => Err(CliError::usage(format!("method {method} needs --scheme poisson"))),
        }
    }

    fn single_record(&self, method: &str) -> Result<(), CliError> {
        if self.group_size != 1 {
            return Err(CliError::usage(format!("method {method} covers single records; use --group 1")));
        }
        Ok(())
    }

    /// ρ of the tight single-group bound at order `alpha`.
    fn specific_rho(&self, alpha: f64) -> Result<f64, CliError> {
        let ln = match (self.scheme, self.split) {
            (SubsamplingScheme::Poisson { rate }, Some(rel)) => {
                let set = poisson_group_pair(&self.mech, rate, rel)?;
                divergence_of_candidates(&set, alpha, DivergenceKind::Renyi, &self.eval)?.ln_value
            }
            (SubsamplingScheme::Poisson { rate }, None) => {
                group_bound(&self.mech, rate, self.group_size, alpha, DivergenceKind::Renyi, &self.eval)?.ln_value
            }
            (SubsamplingScheme::WithoutReplacement { dataset_size, batch_size }, _) => {
                self.single_record("specific")?;
                let set = wor_substitution_pair(&self.mech, dataset_size, batch_size)?;
                divergence_of_candidates(&set, alpha, DivergenceKind::Renyi, &self.eval)?.ln_value
            }
            (SubsamplingScheme::WithReplacement { dataset_size, batch_size }, _) => {
                self.single_record("specific")?;
                let set = wr_substitution_pair(&self.mech, dataset_size, batch_size)?;
                divergence_of_candidates(&set, alpha, DivergenceKind::Renyi, &self.eval)?.ln_value
            }
            (SubsamplingScheme::PermutePartition { .. }, _) => {
                self.single_record("specific")?;
                epoch_permute_partition_rdp(&self.mech, alpha)?.ln_moment
            }
        };
        Ok(ln / (alpha - 1.0))
    }
}

fn metadata(s: &Setting, iterations: Option<u64>) -> CurveMetadata {
    CurveMetadata { scheme: Some(s.scheme), mechanism: Some(s.mech), group_size: Some(s.group_size), iterations }
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

const PROFILE_METHODS: &[&str] = &["specific", "agnostic", "posthoc", "wor-profile", "wr"];

fn profile_point(s: &Setting, method: &str, eps: f64) -> Result<PrivacyPoint, CliError> {
    let setting = ProfileSetting { mechanism: s.mech, scheme: s.scheme, eval: s.eval };
    let via = |m: GroupMethod| -> Result<PrivacyPoint, CliError> { Ok(group_profile(&setting, s.group_size, m, &[eps])?.points[0]) };
    match method {
        "specific" | "wor-profile" | "wr" => match (s.scheme, s.split) {
            (SubsamplingScheme::Poisson { rate }, Some(rel)) => {
                let set = poisson_group_pair(&s.mech, rate, rel)?;
                let raw = divergence_of_candidates(&set, eps.exp(), DivergenceKind::HockeyStick, &s.eval)?.value;
                Ok(PrivacyPoint::new(eps, raw))
            }
            _ => via(GroupMethod::Specific),
        },
        "agnostic" => via(GroupMethod::Agnostic),
        "posthoc" => via(GroupMethod::Posthoc),
        _ => unreachable!("methods are validated before evaluation"),
    }
}

pub fn profile(args: &ExperimentArgs) -> Result<Table, CliError> {
    let s = Setting::from_args(args)?;
    let methods = args.methods()?;
    let grid = args.eps_grid()?;
    for m in &methods {
        match m.as_str() {
            "wor-profile" if !matches!(s.scheme, SubsamplingScheme::WithoutReplacement { .. }) => {
                return Err(CliError::usage("method wor-profile needs --scheme wor"))
            }
            "wr" if !matches!(s.scheme, SubsamplingScheme::WithReplacement { .. }) => {
                return Err(CliError::usage("method wr needs --scheme wr"))
            }
            m if !PROFILE_METHODS.contains(&m) => {
                return Err(CliError::usage(format!("unknown profile method {m:?}; choose from {}", PROFILE_METHODS.join(","))))
            }
            _ => {}
        }
    }
    let tasks: Vec<(usize, f64)> = (0..methods.len()).flat_map(|m| grid.iter().map(move |&e| (m, e))).collect();
    let pool = thread_pool(args.workers)?;
    let points = par_map(&pool, &tasks, |&(m, eps)| profile_point(&s, &methods[m], eps))?;
    let mut table = Table::new("profile", vec!["epsilon", "delta", "clipped", "method", "group_size"]);
    for (m, chunk) in methods.iter().zip(points.chunks(grid.len())) {
        let curve = PrivacyCurve::new(chunk.to_vec(), m.clone(), metadata(&s, None))?.monotone_repaired();
        for p in curve.points {
            table.rows.push(vec![
                Cell::Num(p.epsilon),
                Cell::Num(p.delta),
                Cell::Bool(p.clipped),
                Cell::Text(m.clone()),
                Cell::Int(s.group_size),
            ]);
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// rdp
// ---------------------------------------------------------------------------

const RDP_METHODS: &[&str] = &["specific", "agnostic", "posthoc", "zhu", "wang", "rr-tight", "wr", "epoch"];

fn rdp_point(s: &Setting, method: &str, alpha: f64, factor2: bool) -> Result<f64, CliError> {
    let sizes = || match s.scheme {
        SubsamplingScheme::WithoutReplacement { dataset_size, batch_size } => Ok((dataset_size, batch_size)),
        _ => Err(CliError::usage(format!("method {method} needs --scheme wor"))),
    };
    Ok(match method {
        "specific" => s.specific_rho(alpha)?,
        "agnostic" => agnostic_group_rdp(&s.mech, s.rate(method)?, s.group_size, alpha, factor2)?.rho(),
        "zhu" => {
            s.single_record(method)?;
            zhu_poisson_rdp(&s.mech, s.rate(method)?, alpha, factor2)?.rho()
        }
        "wang" => {
            s.single_record(method)?;
            let (n, q) = sizes()?;
            wang_wor_rdp(&s.mech, n, q, alpha)?.rho()
        }
        "rr-tight" => {
            s.single_record(method)?;
            let (n, q) = sizes()?;
            let BaseMechanismSpec::RandomizedResponse { theta } = s.mech else {
                return Err(CliError::usage("method rr-tight needs --mech rr"));
            };
            rr_wor_tight_rdp(theta, n, q, alpha)?.rho()
        }
        "wr" => match s.scheme {
            SubsamplingScheme::WithReplacement { .. } => s.specific_rho(alpha)?,
            _ => return Err(CliError::usage("method wr needs --scheme wr")),
        },
        "epoch" => match s.scheme {
            SubsamplingScheme::PermutePartition { .. } => s.specific_rho(alpha)?,
            _ => return Err(CliError::usage("method epoch needs --scheme epoch")),
        },
        _ => unreachable!("methods are validated before evaluation"),
    })
}

/// Orders needed to apply the doubling transform `log₂ K` times to `grid`.
fn posthoc_orders(grid: &[f64], group_size: u64) -> Vec<f64> {
    let mut orders: Vec<f64> = grid.to_vec();
    let mut frontier = orders.clone();
    for _ in 0..group_size.trailing_zeros() {
        frontier = frontier.iter().flat_map(|&a| [2.0 * a, 2.0 * a - 1.0]).collect();
        orders.extend(&frontier);
    }
    orders.sort_by(f64::total_cmp);
    orders.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    orders
}

/// Post-hoc group RDP on `grid`: the single-record specific curve on the
/// closure of needed orders, transformed.
fn posthoc_rdp_curve(s: &Setting, grid: &[f64], pool: &rayon::ThreadPool) -> Result<RdpCurve, CliError> {
    if !s.group_size.is_power_of_two() {
        return Err(CliError::usage("posthoc RDP needs a power-of-two group size"));
    }
    let single = Setting { group_size: 1, split: None, ..*s };
    let orders = posthoc_orders(grid, s.group_size);
    let rhos = par_map(pool, &orders, |&a| single.specific_rho(a))?;
    let base = RdpCurve::new(orders.iter().copied().zip(rhos).collect())?;
    let grouped = posthoc_group_rdp(&base, s.group_size)?;
    let points = grid
        .iter()
        .map(|&a| {
            grouped
                .points
                .iter()
                .find(|(b, _)| (a - b).abs() <= 1e-12 * a)
                .and_then(|&(_, r)| r)
                .map(|r| (a, r))
                .ok_or_else(|| CliError::Numerical(format!("posthoc transform left α = {a} uncovered")))
        })
        .collect::<Result<_, _>>()?;
    Ok(RdpCurve::new(points)?)
}

fn specific_rdp_curve(s: &Setting, grid: &[f64], pool: &rayon::ThreadPool) -> Result<RdpCurve, CliError> {
    let rhos = par_map(pool, grid, |&a| s.specific_rho(a))?;
    Ok(RdpCurve::new(grid.iter().copied().zip(rhos).collect())?)
}

pub fn rdp(args: &ExperimentArgs) -> Result<Table, CliError> {
    let s = Setting::from_args(args)?;
    let methods = args.methods()?;
    let grid = args.alpha_grid("2:1000")?;
    if let Some(m) = methods.iter().find(|m| !RDP_METHODS.contains(&m.as_str())) {
        return Err(CliError::usage(format!("unknown rdp method {m:?}; choose from {}", RDP_METHODS.join(","))));
    }
    let factor2 = args.include_factor2.unwrap_or(false);
    let pool = thread_pool(args.workers)?;
    let mut table = Table::new("rdp", vec!["alpha", "rho", "method", "group_size"]);
    for m in &methods {
        let rhos: Vec<f64> = if m == "posthoc" {
            posthoc_rdp_curve(&s, &grid, &pool)?.points().iter().map(|p| p.1).collect()
        } else {
            par_map(&pool, &grid, |&a| rdp_point(&s, m, a, factor2))?
        };
        for (&a, rho) in grid.iter().zip(rhos) {
            // Rounding can leave ρ a hair below zero when the pair coincides.
            table.rows.push(vec![Cell::Num(a), Cell::Num(rho.max(0.0)), Cell::Text(m.clone()), Cell::Int(s.group_size)]);
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum Readout {
    DeltaAt(f64),
    EpsilonAt(f64),
}

/// Smallest ε in `[0, hi]` with `delta(ε) ≤ target`, by bisection on the
/// bracket `delta(lo) > target ≥ delta(hi)`. The returned ε always meets
/// the target even if `delta` is not monotone.
fn solve_epsilon(target: f64, delta: impl Fn(f64) -> Result<f64, CliError>) -> Result<f64, CliError> {
    if delta(0.0)? <= target {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while delta(hi)? > target {
        hi *= 2.0;
        if hi > 1e4 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if delta(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `ln δ` from an RDP point at `ε` under `formula`.
fn ln_delta_from_rdp(alpha: f64, rho: f64, eps: f64, formula: ConversionFormula) -> f64 {
    match formula {
        ConversionFormula::Standard => (alpha - 1.0) * (rho - eps),
        ConversionFormula::Improved => (alpha - 1.0) * (rho + ((alpha - 1.0) / alpha).ln() - eps) - alpha.ln(),
    }
}

fn rdp_readout(curve: &RdpCurve, readout: Readout, formula: ConversionFormula) -> Result<PrivacyPoint, CliError> {
    Ok(match readout {
        Readout::DeltaAt(eps) => {
            let ln = curve
                .points()
                .iter()
                .map(|&(a, r)| ln_delta_from_rdp(a, r, eps, formula))
                .fold(f64::INFINITY, f64::min);
            PrivacyPoint::new(eps, ln.exp())
        }
        Readout::EpsilonAt(delta) => PrivacyPoint::new(rdp_to_adp(curve, delta, formula)?, delta),
    })
}

fn pld_readout(
    composed: &[PrivacyLossDistribution],
    posthoc_group: Option<u64>,
    readout: Readout,
) -> Result<PrivacyPoint, CliError> {
    let delta_at = |eps: f64| -> Result<f64, CliError> {
        Ok(match posthoc_group {
            Some(k) => posthoc_pld_delta(composed, eps, k)?,
            None => max_pld_delta(composed, eps),
        })
    };
    Ok(match readout {
        Readout::DeltaAt(eps) => PrivacyPoint::new(eps, delta_at(eps)?),
        Readout::EpsilonAt(delta) => {
            let eps = match posthoc_group {
                None | Some(1) => max_pld_epsilon(composed, delta)?.max(0.0),
                Some(_) => solve_epsilon(delta, delta_at)?,
            };
            PrivacyPoint::new(eps, delta)
        }
    })
}

pub fn compose(args: &ExperimentArgs) -> Result<Table, CliError> {
    let s = Setting::from_args(args)?;
    let methods = args.methods()?;
    if let Some(m) = methods.iter().find(|m| !["specific", "posthoc"].contains(&m.as_str())) {
        return Err(CliError::usage(format!("unknown compose method {m:?}; choose from specific,posthoc")));
    }
    let iterations = args.iterations.clone().unwrap_or_default();
    if iterations.is_empty() || iterations.contains(&0) {
        return Err(CliError::usage("compose needs --iterations with counts ≥ 1"));
    }
    let readout = match (args.epsilon, args.delta_target) {
        (Some(e), None) if e >= 0.0 && e.is_finite() => Readout::DeltaAt(e),
        (None, Some(d)) if d > 0.0 && d < 1.0 => Readout::EpsilonAt(d),
        (Some(_), Some(_)) => return Err(CliError::usage("give exactly one of --epsilon and --delta-target")),
        (None, None) => return Err(CliError::usage("compose needs --epsilon or --delta-target")),
        _ => return Err(CliError::usage("--epsilon must be ≥ 0 and --delta-target must lie in (0, 1)")),
    };
    let pool = thread_pool(args.workers)?;
    let tasks: Vec<(usize, u64)> =
        (0..methods.len()).flat_map(|m| iterations.iter().map(move |&t| (m, t))).collect();
    let points: Vec<PrivacyPoint> = match args.accounting.unwrap_or(AccountingKind::Pld) {
        AccountingKind::Pld => {
            let rate = s.rate("PLD accounting")?;
            let opts = PldOptions { grid_step: args.grid_step.unwrap_or(1e-3), ..PldOptions::default() };
            let mut bases = Vec::with_capacity(methods.len());
            for m in &methods {
                bases.push(match (m.as_str(), s.split) {
                    ("specific", Some(rel)) => plds_from_candidates(&poisson_group_pair(&s.mech, rate, rel)?, &opts)?,
                    ("specific", None) => group_plds(&s.mech, rate, s.group_size, &opts)?,
                    _ => group_plds(&s.mech, rate, 1, &opts)?,
                });
            }
            par_map(&pool, &tasks, |&(m, t)| {
                let composed = bases[m].iter().map(|p| pld_compose(p, t)).collect::<Result<Vec<_>, _>>()?;
                let group = (methods[m] == "posthoc").then_some(s.group_size);
                pld_readout(&composed, group, readout)
            })?
        }
        AccountingKind::Rdp => {
            let grid = args.alpha_grid("2:128")?;
            let formula = args.conversion();
            let mut curves = Vec::with_capacity(methods.len());
            for m in &methods {
                curves.push(match m.as_str() {
                    "specific" => specific_rdp_curve(&s, &grid, &pool)?,
                    _ => posthoc_rdp_curve(&s, &grid, &pool)?,
                });
            }
            par_map(&pool, &tasks, |&(m, t)| rdp_readout(&curves[m].compose(t)?, readout, formula))?
        }
    };
    let mut table = Table::new("compose", vec!["iterations", "epsilon", "delta", "clipped", "method", "group_size"]);
    for (&(m, t), p) in tasks.iter().zip(points) {
        table.rows.push(vec![
            Cell::Int(t),
            Cell::Num(p.epsilon),
            Cell::Num(p.delta),
            Cell::Bool(p.clipped),
            Cell::Text(methods[m].clone()),
            Cell::Int(s.group_size),
        ]);
    }
    Ok(table)
}
