use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use kme_core::gallery::{self, GalleryName, MollifiedSpec};
use kme_core::mdp::{
    empirical_model, robustness_experiment, Estimator, MdpModel, MollifiedMdp, SolveOptions,
};
use kme_core::topology::{fmt_real, FamilyConfig, ReportOptions, DEFAULT_TOL};
use kme_core::{
    equivalence_report, mmd_norm, strong_kme_distance, tv_distance, Exponent, FiniteMeasure,
    StochasticKernel, TestFamilies,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::io::{
    check_indices, load_config, parse_index_list, read_json, write_file, Common, CommonConfig,
    IndexList, KernelArgs, KernelConfig,
};

macro_rules! common_config {
    ($cfg:expr) => {
        CommonConfig {
            seed: $cfg.seed,
            out: $cfg.out.clone(),
            tol: $cfg.tol,
        }
    };
}

fn print_or_write(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn to_pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

// ---------------------------------------------------------------- mmd

#[derive(Debug, Args)]
pub struct MmdArgs {
    /// First measure (JSON).
    pub first: PathBuf,
    /// Second measure (JSON).
    pub second: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MmdConfig {
    kernel: Option<KernelConfig>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

pub fn mmd(args: &MmdArgs) -> CliResult<()> {
    let cfg: MmdConfig = load_config(args.common.config.as_deref())?;
    let common = args.common.resolve(&common_config!(cfg), DEFAULT_TOL)?;
    let m1: FiniteMeasure = read_json(&args.first)?;
    let m2: FiniteMeasure = read_json(&args.second)?;
    let dim = m1.dim().or(m2.dim()).unwrap_or(1);
    let spec = args.kernel.resolve(cfg.kernel.as_ref(), dim)?;
    let d = mmd_norm(&spec, &m1, &m2)?;
    let tv = tv_distance(&m1, &m2)?;
    println!("mmd_norm {d}");
    println!("tv_distance {tv}");
    if let Some(out) = &common.out {
        let report = serde_json::json!({
            "kernel": spec,
            "mmdNorm": d,
            "tvDistance": tv,
            "withinTol": d <= common.tol,
        });
        write_file(out, &to_pretty(&report))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- diag

#[derive(Debug, Args)]
pub struct DiagArgs {
    /// Named gallery sequence: escaping_mass, square_wave, mollified.
    #[arg(long, conflicts_with_all = ["sequence", "limit"])]
    pub gallery: Option<String>,
    /// Sequence kernels (JSON), indexed 1, 2, ... in the order given.
    #[arg(long, num_args = 1..)]
    pub sequence: Vec<PathBuf>,
    /// Limit kernel (JSON) for --sequence.
    #[arg(long)]
    pub limit: Option<PathBuf>,
    /// Gallery indices, e.g. `1,2,4,8` or `1..16`.
    #[arg(long, value_parser = parse_index_list)]
    pub indices: Option<IndexList>,
    /// Gallery input grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Accept a limit whose rows are sub-probability measures.
    #[arg(long)]
    pub allow_subprobability: bool,
    /// Radius of the ball used for the tightness column.
    #[arg(long)]
    pub tightness_radius: Option<f64>,
    /// Lower corner (per coordinate) of the box test-function centers come from.
    #[arg(long, allow_hyphen_values = true)]
    pub center_lo: Option<f64>,
    /// Upper corner of that box.
    #[arg(long, allow_hyphen_values = true)]
    pub center_hi: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DiagConfig {
    gallery: Option<String>,
    #[serde(default)]
    sequence: Vec<PathBuf>,
    limit: Option<PathBuf>,
    indices: Option<Vec<usize>>,
    grid: Option<usize>,
    allow_subprobability: Option<bool>,
    tightness_radius: Option<f64>,
    center_lo: Option<f64>,
    center_hi: Option<f64>,
    mollified: Option<MollifiedSpec>,
    kernel: Option<KernelConfig>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

const POWERS_TO_64: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

fn gallery_sequence(
    name: GalleryName,
    indices: &[usize],
    grid: Option<usize>,
    mollified: Option<&MollifiedSpec>,
) -> CliResult<(Vec<(usize, StochasticKernel)>, StochasticKernel)> {
    let mut seq = Vec::with_capacity(indices.len());
    let mut limit = None;
    for &n in indices {
        let (g, lim) = match (name, mollified) {
            (GalleryName::Mollified, Some(spec)) => {
                let mut spec = spec.clone();
                if let Some(g) = grid {
                    spec.input_grid = g;
                }
                gallery::mollified_kernel_sequence(n, &spec)?
            }
            _ => gallery::build(name, n, grid)?,
        };
        seq.push((n, g));
        limit = Some(lim);
    }
    Ok((seq, limit.expect("indices are nonempty")))
}

pub fn diag(args: &DiagArgs) -> CliResult<()> {
    let cfg: DiagConfig = load_config(args.common.config.as_deref())?;
    let common = args.common.resolve(&common_config!(cfg), DEFAULT_TOL)?;
    let sequence_files = if args.sequence.is_empty() {
        cfg.sequence.clone()
    } else {
        args.sequence.clone()
    };
    let gallery_name = if args.sequence.is_empty() && args.limit.is_none() {
        args.gallery.clone().or(cfg.gallery.clone())
    } else {
        args.gallery.clone()
    };

    let (label, seq, limit) = match gallery_name {
        Some(name) => {
            let parsed: GalleryName = name.parse()?;
            let indices = args
                .indices
                .clone()
                .map(|l| l.0)
                .or(cfg.indices.clone())
                .unwrap_or_else(|| match parsed {
                    GalleryName::Mollified => (1..=16).collect(),
                    _ => POWERS_TO_64.to_vec(),
                });
            check_indices(&indices)?;
            let grid = args.grid.or(cfg.grid);
            let (seq, limit) = gallery_sequence(parsed, &indices, grid, cfg.mollified.as_ref())?;
            (name, seq, limit)
        }
        None => {
            if sequence_files.is_empty() {
                return Err(CliError::Usage(
                    "diag needs --gallery NAME or --sequence FILES... --limit FILE".into(),
                ));
            }
            let limit_path = args
                .limit
                .clone()
                .or(cfg.limit.clone())
                .ok_or_else(|| CliError::Usage("--sequence needs --limit".into()))?;
            let seq = sequence_files
                .iter()
                .enumerate()
                .map(|(i, p)| Ok((i + 1, read_json::<StochasticKernel>(p)?)))
                .collect::<CliResult<Vec<_>>>()?;
            let limit: StochasticKernel = read_json(&limit_path)?;
            ("sequence".to_string(), seq, limit)
        }
    };

    let dim = limit
        .rows()
        .iter()
        .chain(seq.iter().flat_map(|(_, g)| g.rows()))
        .find_map(FiniteMeasure::dim)
        .unwrap_or(1);
    let spec = args.kernel.resolve(cfg.kernel.as_ref(), dim)?;
    let lo = args.center_lo.or(cfg.center_lo).unwrap_or(0.0);
    let hi = args.center_hi.or(cfg.center_hi).unwrap_or(1.0);
    if !(hi >= lo) {
        return Err(CliError::Usage("center box is empty".into()));
    }
    let families = TestFamilies::random(
        &spec,
        limit.len(),
        &FamilyConfig::new(common.seed, dim, lo, hi),
    )?;
    let options = ReportOptions {
        tol: common.tol,
        tightness_radius: args
            .tightness_radius
            .or(cfg.tightness_radius)
            .unwrap_or(8.0),
        allow_sub_probability_limit: args.allow_subprobability
            || cfg.allow_subprobability.unwrap_or(false),
    };
    let report = equivalence_report(&label, &seq, &limit, &spec, &families, options)?;

    let v = report.verdicts;
    let summary = format!(
        "verdicts at n={}: weak_kme={} wstar={} young={} strong={}",
        report.per_index.last().map_or(0, |d| d.n),
        v.weak_kme,
        v.wstar,
        v.young,
        v.strong
    );
    match &common.out {
        Some(out) => {
            write_file(out, &report.to_csv())?;
            write_file(&out.with_extension("json"), &report.to_json())?;
            println!("{summary}");
        }
        None => {
            print_or_write(None, &report.to_csv())?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- gallery

#[derive(Debug, Args)]
pub struct GalleryArgs {
    /// escaping_mass, square_wave, or mollified.
    pub name: String,
    /// Index of the sequence element.
    #[arg(long)]
    pub n: Option<usize>,
    /// Input grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GalleryConfig {
    n: Option<usize>,
    grid: Option<usize>,
    mollified: Option<MollifiedSpec>,
    kernel: Option<KernelConfig>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

pub fn gallery(args: &GalleryArgs) -> CliResult<()> {
    let cfg: GalleryConfig = load_config(args.common.config.as_deref())?;
    let common = args.common.resolve(&common_config!(cfg), DEFAULT_TOL)?;
    let name: GalleryName = args.name.parse()?;
    let n = args.n.or(cfg.n).unwrap_or(1);
    check_indices(&[n])?;
    let (seq, limit) =
        gallery_sequence(name, &[n], args.grid.or(cfg.grid), cfg.mollified.as_ref())?;
    let kernel = &seq[0].1;
    let spec = args.kernel.resolve(cfg.kernel.as_ref(), 1)?;
    let strong = strong_kme_distance(kernel, &limit, &spec, Exponent::Finite(2.0))?;
    let doc = serde_json::json!({
        "name": args.name,
        "n": n,
        "kernel": kernel,
        "limit": limit,
    });
    print_or_write(common.out.as_deref(), &(to_pretty(&doc) + "\n"))?;
    eprintln!(
        "{} n={n}: {} input points, strong_q2 distance to limit {} (within tol: {})",
        args.name,
        kernel.len(),
        fmt_real(strong),
        strong <= common.tol
    );
    Ok(())
}

// ---------------------------------------------------------------- mdp

#[derive(Debug, Args)]
pub struct MdpArgs {
    /// Model file (JSON). Implies the empirical experiment.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// mollified (default) or empirical.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Mollified approximant indices, e.g. `1..16`.
    #[arg(long, value_parser = parse_index_list)]
    pub indices: Option<IndexList>,
    /// Samples per state-action pair for the empirical experiment, e.g. `100,1000,10000`.
    #[arg(long, value_parser = parse_index_list)]
    pub samples: Option<IndexList>,
    /// Smooth the empirical estimate with a Gaussian of this width.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Value-iteration budget.
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MdpConfig {
    experiment: Option<String>,
    model: Option<PathBuf>,
    mollified: Option<MollifiedMdp>,
    indices: Option<Vec<usize>>,
    samples_per_pair: Option<Vec<usize>>,
    estimator: Option<Estimator>,
    max_iter: Option<usize>,
    kernel: Option<KernelConfig>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    tol: Option<f64>,
}

pub fn mdp(args: &MdpArgs) -> CliResult<()> {
    let cfg: MdpConfig = load_config(args.common.config.as_deref())?;
    let common = args
        .common
        .resolve(&common_config!(cfg), SolveOptions::default().tol)?;
    let opts = SolveOptions {
        tol: common.tol,
        max_iter: args
            .max_iter
            .or(cfg.max_iter)
            .unwrap_or(SolveOptions::default().max_iter),
    };
    let model_path = args.model.clone().or(cfg.model.clone());
    let experiment = args
        .experiment
        .clone()
        .or(cfg.experiment.clone())
        .unwrap_or_else(|| {
            if model_path.is_some() {
                "empirical".into()
            } else {
                "mollified".into()
            }
        });
    let setup = cfg.mollified.clone().unwrap_or_default();

    let (truth, approximants) = match experiment.as_str() {
        "mollified" => {
            if model_path.is_some() {
                return Err(CliError::Usage(
                    "--model applies to the empirical experiment only".into(),
                ));
            }
            let indices = args
                .indices
                .clone()
                .map(|l| l.0)
                .or(cfg.indices.clone())
                .unwrap_or_else(|| (1..=16).collect());
            check_indices(&indices)?;
            let approx = indices
                .iter()
                .map(|&n| Ok((n, setup.approximant(n)?)))
                .collect::<CliResult<Vec<_>>>()?;
            (setup.true_model()?, approx)
        }
        "empirical" => {
            let truth: MdpModel = match &model_path {
                Some(p) => read_json(p)?,
                None => setup.true_model()?,
            };
            let samples = args
                .samples
                .clone()
                .map(|l| l.0)
                .or(cfg.samples_per_pair.clone())
                .unwrap_or_else(|| vec![100, 1_000, 10_000]);
            check_indices(&samples)?;
            let estimator = match args.bandwidth {
                Some(bandwidth) => Estimator::KernelSmoothed { bandwidth },
                None => cfg.estimator.unwrap_or(Estimator::Histogram),
            };
            let approx = samples
                .iter()
                .map(|&s| Ok((s, empirical_model(&truth, s, common.seed, estimator)?)))
                .collect::<CliResult<Vec<_>>>()?;
            (truth, approx)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment '{other}' (mollified, empirical)"
            )))
        }
    };

    let dim = truth.state_grid()[0].dim();
    let spec = args.kernel.resolve(cfg.kernel.as_ref(), dim)?;
    let coords = truth
        .state_grid()
        .iter()
        .flat_map(|p| p.coords().iter().copied());
    let (lo, hi) = coords.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| {
        (l.min(c), h.max(c))
    });
    let families = TestFamilies::random(
        &spec,
        truth.transition().len(),
        &FamilyConfig::new(common.seed, dim, lo, hi),
    )?;
    let run = robustness_experiment(&truth, &approximants, &spec, &families.kme, opts)?;
    let last = run.last().expect("at least one approximant");
    let summary = format!(
        "final gaps: value={} policy={}",
        fmt_real(last.gap_value),
        fmt_real(last.gap_policy)
    );
    match &common.out {
        Some(out) => {
            write_file(out, &run.to_csv())?;
            println!("{summary}");
        }
        None => {
            print_or_write(None, &run.to_csv())?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}
