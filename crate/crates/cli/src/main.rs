//! `mvcca`: fit, apply and evaluate multi-view reductions from the shell.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 bad data, 4 tensor too large
//! for the entry cap, 5 numerical failure.

use std::io::BufRead;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mvcca::cca::{fit_cca, fit_maxvar};
use mvcca::cp::AlsConfig;
use mvcca::dataset::MultiViewDataset;
use mvcca::harness::{
    make_synthetic, run_protocol, CcaCombine, Classifier, MethodSpec, Pool, ProtocolConfig, RlsConfig,
    SyntheticKind, SyntheticSpec,
};
use mvcca::io::{self, Labels, Model};
use mvcca::ktcca::{fit_ktcca, KernelSpec, KtccaOptions};
use mvcca::rng::stream_seed;
use mvcca::tcca::{fit_tcca, TccaModel, TccaOptions};
use mvcca::tensor::{EntryCap, DEFAULT_ENTRY_CAP};
use mvcca::{Error, ErrorCategory};

const CAP_ENV: &str = "MVCCA_MEMORY_CAP";

#[derive(Parser, Debug)]
#[command(name = "mvcca", version, about = "Tensor CCA and multi-view CCA baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Fit a reduction and save the model.
    Fit(FitArgs),
    /// Project a dataset with a saved model.
    Transform(TransformArgs),
    /// Run the labeled/validation/test protocol over a sweep of dimensions.
    Eval(EvalArgs),
    /// Write a synthetic multi-view dataset and print its manifest path.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Cca,
    Maxvar,
    Tcca,
    Ktcca,
    Bsf,
    Cat,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum ClassifierArg {
    Rls,
    Knn,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PoolArg {
    All,
    Unlabeled,
    NonValidation,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum CombineArg {
    Best,
    Average,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Shared,
    Triple,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tensor entry cap; overrides MVCCA_MEMORY_CAP.
    #[arg(long)]
    memory_cap: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct AlsArgs {
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Manifest path, or `-` to read the path from stdin.
    #[arg(long)]
    manifest: String,
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long)]
    rank: usize,
    /// Kernel per view (l2, chi_square); one value applies to every view.
    #[arg(long, value_delimiter = ',')]
    kernel: Vec<String>,
    /// View pair for cca.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1])]
    views: Vec<usize>,
    #[command(flatten)]
    als: AlsArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    manifest: String,
    /// Comma-separated regularization values, chosen on validation.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2])]
    eps: Vec<f64>,
    /// Dimensions as start:stop[:step] (inclusive).
    #[arg(long, conflicts_with = "rank")]
    sweep: Option<String>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Rls)]
    classifier: ClassifierArg,
    #[arg(long, default_value_t = 1e-2)]
    gamma: f64,
    /// Neighbor counts for knn as start:stop[:step].
    #[arg(long, default_value = "1:10")]
    k: String,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Labeled instances per run; defaults to a tenth of the data.
    #[arg(long)]
    labeled: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    validation_fraction: f64,
    /// Skip the validation split; needs a single eps and k.
    #[arg(long)]
    no_validate: bool,
    #[arg(long, value_enum, default_value_t = PoolArg::All)]
    pool: PoolArg,
    /// Pair combination for cca.
    #[arg(long, value_enum, default_value_t = CombineArg::Best)]
    combine: CombineArg,
    #[arg(long, value_delimiter = ',')]
    kernel: Vec<String>,
    #[command(flatten)]
    als: AlsArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Dimension of every view.
    #[arg(long, default_value_t = 6)]
    d: usize,
    /// Per-view dimensions; overrides --m and --d.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    latent_dim: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Shared)]
    kind: KindArg,
    #[arg(long, default_value_t = 0.3)]
    class_balance: f64,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.0)]
    spread: f64,
    #[command(flatten)]
    common: Common,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Fit(a) => &a.common,
            Command::Transform(a) => &a.common,
            Command::Eval(a) => &a.common,
            Command::Synth(a) => &a.common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Transform(_) => "transform",
            Command::Eval(_) => "eval",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    mvcca_version: &'a str,
    cli_version: &'a str,
    seed: u64,
    entry_cap: Option<usize>,
    config: &'a Command,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    outputs: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Argument => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Capacity => 4,
        ErrorCategory::Numerical => 5,
    }
}

fn entry_cap(flag: Option<usize>) -> mvcca::Result<EntryCap> {
    if let Some(c) = flag {
        return Ok(EntryCap(c));
    }
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(EntryCap)
            .map_err(|_| Error::InvalidArgument(format!("{CAP_ENV}='{v}' is not a positive integer"))),
        Err(_) => Ok(EntryCap(DEFAULT_ENTRY_CAP)),
    }
}

/// `start:stop[:step]`, inclusive; a bare integer is a one-element range.
fn parse_range(s: &str) -> mvcca::Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("'{s}' is not start:stop[:step]"));
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, stop, step) = match parts[..] {
        [a] => (a, a, 1),
        [a, b] => (a, b, 1),
        [a, b, c] => (a, b, c),
        _ => return Err(bad()),
    };
    if step == 0 || stop < start {
        return Err(bad());
    }
    Ok((start..=stop).step_by(step).collect())
}

fn manifest_path(arg: &str) -> mvcca::Result<PathBuf> {
    if arg != "-" {
        return Ok(PathBuf::from(arg));
    }
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    let line = line.trim();
    if line.is_empty() {
        return Err(Error::InvalidArgument("expected a manifest path on stdin".into()));
    }
    Ok(PathBuf::from(line))
}

fn load(arg: &str) -> mvcca::Result<(MultiViewDataset, Option<Labels>)> {
    let path = manifest_path(arg)?;
    io::load_dataset(&io::load_manifest(&path)?)
}

fn kernels(names: &[String], m: usize) -> mvcca::Result<Vec<KernelSpec>> {
    let specs = names.iter().map(|n| KernelSpec::parse(n)).collect::<mvcca::Result<Vec<_>>>()?;
    match specs.len() {
        0 => Ok(vec![KernelSpec::l2(); m]),
        1 => Ok(vec![specs[0]; m]),
        k if k == m => Ok(specs),
        k => Err(Error::InvalidArgument(format!("{k} kernels for {m} views"))),
    }
}

fn als_config(a: &AlsArgs, seed: u64) -> AlsConfig {
    AlsConfig {
        max_iters: a.max_iters,
        tol: a.tol,
        seed,
        ..AlsConfig::default()
    }
}

fn fit(a: &FitArgs, cap: EntryCap, outputs: &mut Vec<String>) -> mvcca::Result<()> {
    let (data, _) = load(&a.manifest)?;
    let als = als_config(&a.als, stream_seed(a.common.seed, "als", 0));
    let model = match a.method {
        Method::Tcca => {
            let opts = TccaOptions {
                eps: a.eps,
                rank: a.rank,
                als,
                entry_cap: cap,
            };
            Model::Linear {
                method: "tcca".into(),
                views: (0..data.n_views()).collect(),
                model: fit_tcca(&data, &opts)?,
            }
        }
        Method::Ktcca => {
            let opts = KtccaOptions {
                eps: a.eps,
                rank: a.rank,
                als,
                entry_cap: cap,
            };
            Model::Kernel(fit_ktcca(&data, &kernels(&a.kernel, data.n_views())?, &opts)?)
        }
        Method::Maxvar => {
            let c = data.centered();
            let mv = fit_maxvar(&c, a.eps, a.rank)?;
            Model::Linear {
                method: "maxvar".into(),
                views: (0..data.n_views()).collect(),
                model: TccaModel {
                    transforms: mv.projections,
                    correlations: mv.eigenvalues,
                    eps: a.eps,
                    means: c.means().to_vec(),
                },
            }
        }
        Method::Cca => {
            let [p, q] = a.views[..] else {
                return Err(Error::InvalidArgument("--views takes exactly two indices".into()));
            };
            if p == q || p.max(q) >= data.n_views() {
                return Err(Error::InvalidArgument(format!(
                    "view pair {p},{q} is invalid for {} views",
                    data.n_views()
                )));
            }
            let c = data.centered();
            let model = fit_cca(c.view(p), c.view(q), a.eps, a.rank)?;
            Model::Linear {
                method: "cca".into(),
                views: vec![p, q],
                model: TccaModel {
                    transforms: vec![model.projections.0, model.projections.1],
                    correlations: model.correlations,
                    eps: a.eps,
                    means: vec![c.means()[p].clone(), c.means()[q].clone()],
                },
            }
        }
        Method::Bsf | Method::Cat => {
            return Err(Error::InvalidArgument(
                "bsf and cat have no model to fit; use eval".into(),
            ))
        }
    };
    let path = a.common.out.join("model.txt");
    io::save_model(&model, &path)?;
    outputs.push(path.display().to_string());
    let corr = match &model {
        Model::Linear { model, .. } => &model.correlations,
        Model::Kernel(k) => &k.correlations,
    };
    for (k, c) in corr.iter().enumerate() {
        println!("component {k}: {c:.6}");
    }
    Ok(())
}

fn transform(a: &TransformArgs, outputs: &mut Vec<String>) -> mvcca::Result<()> {
    let model = io::load_model(&a.model)?;
    let (data, _) = load(&a.manifest)?;
    let z = model.transform(&data)?;
    let path = a.common.out.join("projection.csv");
    io::write_matrix(&path, &z, ',')?;
    outputs.push(path.display().to_string());
    println!("{}", path.display());
    Ok(())
}

fn method_spec(a: &EvalArgs, m: usize) -> mvcca::Result<MethodSpec> {
    Ok(match a.method {
        Method::Bsf => MethodSpec::Bsf,
        Method::Cat => MethodSpec::Cat,
        Method::Maxvar => MethodSpec::Maxvar,
        Method::Tcca => MethodSpec::Tcca,
        Method::Ktcca => MethodSpec::Ktcca {
            kernels: kernels(&a.kernel, m)?,
        },
        Method::Cca => MethodSpec::Cca {
            combine: match a.combine {
                CombineArg::Best => CcaCombine::Best,
                CombineArg::Average => CcaCombine::Average,
            },
        },
    })
}

fn eval(a: &EvalArgs, cap: EntryCap, outputs: &mut Vec<String>) -> mvcca::Result<()> {
    let (data, labels) = load(&a.manifest)?;
    let labels = labels.ok_or_else(|| Error::Parse {
        context: "manifest".into(),
        message: "eval needs a label file".into(),
    })?;
    let classifier = match a.classifier {
        ClassifierArg::Rls => Classifier::Rls(RlsConfig { gamma: a.gamma }),
        ClassifierArg::Knn => Classifier::Knn { ks: parse_range(&a.k)? },
    };
    let ranks = match (&a.sweep, a.rank) {
        (Some(s), _) => parse_range(s)?,
        (None, Some(r)) => vec![r],
        (None, None) => (1..=10).collect(),
    };
    if a.no_validate {
        let single_k = match &classifier {
            Classifier::Knn { ks } => ks.len() == 1,
            Classifier::Rls(_) => true,
        };
        if a.eps.len() != 1 || !single_k {
            return Err(Error::InvalidArgument(
                "--no-validate needs a single eps and a single k".into(),
            ));
        }
    }
    let n = data.n_instances();
    let mut cfg = ProtocolConfig::new(
        method_spec(a, data.n_views())?,
        classifier,
        a.labeled.unwrap_or((n / 10).max(1)),
    );
    cfg.ranks = ranks;
    cfg.eps = a.eps.clone();
    cfg.runs = a.runs;
    cfg.validation_fraction = if a.no_validate { 0.0 } else { a.validation_fraction };
    cfg.pool = match a.pool {
        PoolArg::All => Pool::All,
        PoolArg::Unlabeled => Pool::Unlabeled,
        PoolArg::NonValidation => Pool::NonValidation,
    };
    cfg.seed = a.common.seed;
    cfg.als = als_config(&a.als, 0);
    cfg.entry_cap = cap;
    let mut report = run_protocol(&data, &labels.indices, &cfg)?;
    if labels.names != Labels::from_indices(labels.indices.clone()).names {
        report.label_names = labels.names.clone();
    }
    let path = a.common.out.join("report.json");
    let tsv = io::save_report(&report, &path)?;
    outputs.push(path.display().to_string());
    outputs.push(tsv.display().to_string());
    println!(
        "{}: r = {}, accuracy {:.2} ± {:.2}",
        report.method, report.selected_rank, report.mean_accuracy, report.std_accuracy
    );
    Ok(())
}

fn synth_spec(a: &SynthArgs) -> SyntheticSpec {
    let dims = if a.dims.is_empty() { vec![a.d; a.m] } else { a.dims.clone() };
    SyntheticSpec {
        dims,
        n: a.n,
        latent_dim: a.latent_dim,
        sigma: a.sigma,
        seed: a.common.seed,
        kind: match a.kind {
            KindArg::Shared => SyntheticKind::SharedLatent,
            KindArg::Triple => SyntheticKind::TripleProduct,
        },
        class_balance: a.class_balance,
        separation: a.separation,
        spread: a.spread,
    }
}

fn synth(a: &SynthArgs, outputs: &mut Vec<String>) -> mvcca::Result<()> {
    let s = make_synthetic(&synth_spec(a))?;
    let names: Vec<String> = (0..s.data.n_views()).map(|p| format!("view{p}")).collect();
    let labels = Labels::from_indices(s.labels);
    let path = io::save_dataset(&a.common.out, &s.data, Some(&labels), &names)?;
    outputs.push(path.display().to_string());
    println!("{}", path.display());
    Ok(())
}

fn write_metadata(cmd: &Command, cap: Option<usize>, result: &mvcca::Result<()>, outputs: Vec<String>) -> mvcca::Result<()> {
    let common = cmd.common();
    let meta = RunMetadata {
        command: cmd.name(),
        mvcca_version: mvcca::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        seed: common.seed,
        entry_cap: cap,
        config: cmd,
        status: if result.is_ok() { "ok" } else { "error" },
        error: result.as_ref().err().map(|e| e.to_string()),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    io::write_atomic(&common.out.join("run.json"), text.as_bytes())
}

fn run(cmd: &Command) -> mvcca::Result<()> {
    let mut outputs = Vec::new();
    let cap = entry_cap(cmd.common().memory_cap);
    let result = cap.as_ref().map_err(|e| Error::InvalidArgument(e.to_string())).and_then(|&cap| match cmd {
        Command::Fit(a) => fit(a, cap, &mut outputs),
        Command::Transform(a) => transform(a, &mut outputs),
        Command::Eval(a) => eval(a, cap, &mut outputs),
        Command::Synth(a) => synth(a, &mut outputs),
    });
    let cap_value = cap.ok().map(|c| c.0);
    if let Err(e) = write_metadata(cmd, cap_value, &result, outputs) {
        log::warn!("could not write run metadata: {e}");
    }
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("2:10:4").unwrap(), vec![2, 6, 10]);
        assert_eq!(parse_range("3").unwrap(), vec![3]);
        for bad in ["", "4:1", "1:2:0", "a:b", "1:2:3:4"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn kernel_lists_expand() {
        assert_eq!(kernels(&[], 3).unwrap(), vec![KernelSpec::l2(); 3]);
        assert_eq!(kernels(&["chi2".into()], 2).unwrap(), vec![KernelSpec::chi_square(); 2]);
        assert!(kernels(&["l2".into(), "l2".into()], 3).is_err());
    }

    #[test]
    fn exit_codes_follow_categories() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse { context: "c".into(), message: "m".into() }), 3);
        assert_eq!(
            exit_code(&Error::Capacity { shape: vec![2], requested: 2, cap: 1 }),
            4
        );
        assert_eq!(exit_code(&Error::Numerical("x".into())), 5);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn missing_manifest_is_a_data_error() {
        let e = load("/nonexistent/manifest.json").unwrap_err();
        assert_eq!(exit_code(&e), 3);
    }
}
