//! File plumbing shared by the subcommands: JSON loading, output writing, and
//! the flag/config merge rules.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use kme_core::rkhs::KernelFamily;
use kme_core::KernelSpec;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Flags every subcommand accepts.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Seed for every random choice the command makes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys shared by every config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommonConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

/// Resolved values of the shared flags.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: f64,
}

impl Common {
    pub fn resolve(&self, cfg: &CommonConfig, default_tol: f64) -> CliResult<Resolved> {
        let tol = self.tol.or(cfg.tol).unwrap_or(default_tol);
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Usage(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(Resolved {
            seed: self.seed.or(cfg.seed).unwrap_or(0),
            out: self.out.clone().or_else(|| cfg.out.clone()),
            tol,
        })
    }
}

/// Kernel selection flags.
#[derive(Debug, Clone, Default, Args)]
pub struct KernelArgs {
    /// Kernel family: gaussian or laplacian.
    #[arg(long, value_parser = parse_family)]
    pub kernel: Option<KernelFamily>,
    /// Kernel bandwidth.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct KernelConfig {
    pub family: Option<KernelFamily>,
    pub sigma: Option<f64>,
}

impl KernelArgs {
    /// Gaussian with bandwidth 1 unless overridden.
    pub fn resolve(&self, cfg: Option<&KernelConfig>, dim: usize) -> CliResult<KernelSpec> {
        let family = self
            .kernel
            .or(cfg.and_then(|c| c.family))
            .unwrap_or(KernelFamily::Gaussian);
        let sigma = self.sigma.or(cfg.and_then(|c| c.sigma)).unwrap_or(1.0);
        Ok(KernelSpec::new(family, sigma, dim)?)
    }
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    match s {
        "gaussian" => Ok(KernelFamily::Gaussian),
        "laplacian" => Ok(KernelFamily::Laplacian),
        other => Err(format!(
            "unknown kernel family '{other}' (gaussian, laplacian)"
        )),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        what: path.display().to_string(),
        source,
    })
}

/// Loads the `--config` file, or the default config when none is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// A list of indices given as one flag value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexList(pub Vec<usize>);

/// Parses `1,2,4` or `1..16` (inclusive), or a mix such as `1..4,8,16`.
pub fn parse_index_list(s: &str) -> Result<IndexList, String> {
    parse_indices(s).map(IndexList)
}

pub fn parse_indices(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad index range '{part}'"))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad index range '{part}'"))?;
            if a > b {
                return Err(format!("empty index range '{part}'"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad index '{part}'"))?);
        }
    }
    if out.is_empty() {
        return Err("no indices given".into());
    }
    Ok(out)
}

/// Rejects index 0 and unsorted lists.
pub fn check_indices(indices: &[usize]) -> CliResult<()> {
    if indices.is_empty() || indices.contains(&0) {
        return Err(CliError::Usage("indices must be >= 1 and nonempty".into()));
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(
            "indices must be strictly increasing".into(),
        ));
    }
    Ok(())
}
