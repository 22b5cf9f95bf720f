//! Command-line flags, config files and their merge into a validated experiment.
//!
//! Config files (TOML or JSON, chosen by extension) use the long flag names
//! as keys. A flag given on the command line overrides the file.

use crate::error::CliError;
use clap::{Args, ValueEnum};
use privamp::accounting::ConversionFormula;
use privamp::amplification::{BaseMechanismSpec, GroupRelation, SubsamplingScheme};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechKind {
    Gaussian,
    Laplace,
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Poisson,
    Wor,
    Wr,
    Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccountingKind {
    Pld,
    Rdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionKind {
    Standard,
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every experiment setting, optional so that flags and files can be merged.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentArgs {
    /// TOML or JSON file with default values for these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mech: Option<MechKind>,
    /// Gaussian noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Laplace noise scale.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Randomized-response probability of a truthful answer.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    /// Poisson subsampling rate.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub dataset_size: Option<u64>,
    /// Batch size; for `epoch`, the size of each of the two batches.
    #[arg(long)]
    pub batch_size: Option<u64>,
    /// Group size K (every split into insertions and removals).
    #[arg(long)]
    pub group: Option<u64>,
    /// A single split `K+,K-`.
    #[arg(long)]
    pub split: Option<String>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Comma-separated iteration counts.
    #[arg(long, value_delimiter = ',')]
    pub iterations: Option<Vec<u64>>,
    /// `lo:hi:n` equidistant points, or a comma-separated list.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// `lo:hi` integers, `lo:hi:n` equidistant points, or a comma-separated list.
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// PLD loss discretization interval.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Report ε at this δ (compose).
    #[arg(long)]
    pub delta_target: Option<f64>,
    /// Report δ at this ε (compose).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub accounting: Option<AccountingKind>,
    /// RDP to ADP conversion.
    #[arg(long, value_enum)]
    pub conversion: Option<ConversionKind>,
    /// Double the Zhu and agnostic RDP moments.
    #[arg(long)]
    pub include_factor2: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid evaluation (output order is fixed).
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! prefer {
    ($flags:ident, $file:ident, $($field:ident),*) => {
        ExperimentArgs { config: $flags.config, out: $flags.out.or($file.out), workers: $flags.workers.or($file.workers), $($field: $flags.$field.or($file.$field)),* }
    };
}

impl ExperimentArgs {
    /// Flags over the config file named by `--config`, if any.
    pub fn resolved(self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        let flags = self;
        Ok(prefer!(
            flags, file, mech, sigma, lambda, theta, scheme, rate, dataset_size, batch_size, group, split, methods,
            iterations, eps_grid, alpha_grid, grid_step, delta_target, epsilon, accounting, conversion,
            include_factor2, format, seed
        ))
    }

    pub fn mechanism(&self) -> Result<BaseMechanismSpec, CliError> {
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::usage(format!("--{flag} is required for this mechanism")));
        let mech = match self.mech.ok_or_else(|| CliError::usage("--mech is required"))? {
            MechKind::Gaussian => BaseMechanismSpec::gaussian(need(self.sigma, "sigma")?),
            MechKind::Laplace => BaseMechanismSpec::laplace(need(self.lambda, "lambda")?),
            MechKind::Rr => BaseMechanismSpec::randomized_response(need(self.theta, "theta")?),
        };
        mech.validate()?;
        Ok(mech)
    }

    pub fn scheme(&self) -> Result<SubsamplingScheme, CliError> {
        let sizes = || -> Result<(u64, u64), CliError> {
            match (self.dataset_size, self.batch_size) {
                (Some(n), Some(q)) => Ok((n, q)),
                _ => Err(CliError::usage("--dataset-size and --batch-size are required for this scheme")),
            }
        };
        let scheme = match self.scheme.unwrap_or(SchemeKind::Poisson) {
            SchemeKind::Poisson => SubsamplingScheme::Poisson {
                rate: self.rate.ok_or_else(|| CliError::usage("--rate is required for Poisson subsampling"))?,
            },
            SchemeKind::Wor => {
                let (dataset_size, batch_size) = sizes()?;
                SubsamplingScheme::WithoutReplacement { dataset_size, batch_size }
            }
            SchemeKind::Wr => {
                let (dataset_size, batch_size) = sizes()?;
                SubsamplingScheme::WithReplacement { dataset_size, batch_size }
            }
            SchemeKind::Epoch => SubsamplingScheme::PermutePartition { half_size: self.batch_size.unwrap_or(1) },
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// The explicit split, if given.
    pub fn split(&self) -> Result<Option<GroupRelation>, CliError> {
        let Some(s) = &self.split else { return Ok(None) };
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let parse = |p: &str| p.parse::<u64>().map_err(|_| CliError::usage(format!("--split expects K+,K-; got {s:?}")));
        match parts.as_slice() {
            [a, b] => {
                let rel = GroupRelation::new(parse(a)?, parse(b)?);
                if rel.group_size() == 0 {
                    return Err(CliError::usage("--split must contain at least one record"));
                }
                if self.group.is_some_and(|k| k != rel.group_size()) {
                    return Err(CliError::usage("--group disagrees with --split"));
                }
                Ok(Some(rel))
            }
            _ => Err(CliError::usage(format!("--split expects K+,K-; got {s:?}"))),
        }
    }

    pub fn group_size(&self) -> Result<u64, CliError> {
        match (self.split()?, self.group) {
            (Some(rel), _) => Ok(rel.group_size()),
            (None, Some(0)) => Err(CliError::usage("--group must be at least 1")),
            (None, k) => Ok(k.unwrap_or(1)),
        }
    }

    /// Defaults to `specific` when absent; an explicit empty list is an error.
    pub fn methods(&self) -> Result<Vec<String>, CliError> {
        let methods: Vec<String> = self
            .methods
            .clone()
            .unwrap_or_else(|| vec!["specific".into()])
            .into_iter()
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
        if methods.is_empty() {
            return Err(CliError::usage("--methods must name at least one method"));
        }
        Ok(methods)
    }

    pub fn eps_grid(&self) -> Result<Vec<f64>, CliError> {
        let grid = parse_grid(self.eps_grid.as_deref().unwrap_or("0:4:121"), "--eps-grid")?;
        if grid.iter().any(|e| *e < 0.0) {
            return Err(CliError::usage("--eps-grid values must be ≥ 0"));
        }
        Ok(grid)
    }

    pub fn alpha_grid(&self, default: &str) -> Result<Vec<f64>, CliError> {
        let grid = parse_grid(self.alpha_grid.as_deref().unwrap_or(default), "--alpha-grid")?;
        if grid.iter().any(|a| *a <= 1.0) {
            return Err(CliError::usage("--alpha-grid values must exceed 1"));
        }
        Ok(grid)
    }

    pub fn conversion(&self) -> ConversionFormula {
        match self.conversion.unwrap_or(ConversionKind::Standard) {
            ConversionKind::Standard => ConversionFormula::Standard,
            ConversionKind::Improved => ConversionFormula::Improved,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn read_config(path: &Path) -> Result<ExperimentArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

/// `lo:hi:n` (n equidistant points), `lo:hi` (integers), or `a,b,c`.
/// The result must be nonempty and strictly increasing.
pub fn parse_grid(spec: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("{flag}: cannot parse {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => vec![],
                1 => vec![lo],
                _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [lo, hi] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo.fract() != 0.0 || hi.fract() != 0.0 {
                return Err(bad());
            }
            (lo as i64..=hi as i64).map(|v| v as f64).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(CliError::usage(format!("{flag} is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::usage(format!("{flag} must be finite and strictly increasing")));
    }
    Ok(grid)
}
