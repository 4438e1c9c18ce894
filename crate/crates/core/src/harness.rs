//! Evaluation protocol: classifiers on reduced features, random
//! labeled/validation/test splits, validation-driven parameter selection,
//! and synthetic multi-view data.
//!
//! Feature matrices in this module hold instances as rows.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cca::{fit_cca, fit_maxvar};
use crate::cp::AlsConfig;
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::ktcca::{fit_ktcca, KernelSpec, KtccaOptions};
use crate::rng::{stream, stream_seed};
use crate::tcca::{concat_columns, fit_tcca, TccaOptions};
use crate::tensor::EntryCap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlsConfig {
    pub gamma: f64,
}

impl Default for RlsConfig {
    fn default() -> Self {
        RlsConfig { gamma: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

fn with_bias(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::from_element(x.nrows(), x.ncols() + 1, 1.0);
    a.columns_mut(0, x.ncols()).copy_from(x);
    a
}

/// Weights (bias last) minimizing `(1/N_l) Σ (wᵀx̃ - y)² + γ‖w‖²` for each
/// column of `targets`.
pub fn rls_fit(x: &DMatrix<f64>, targets: &DMatrix<f64>, cfg: &RlsConfig) -> Result<DMatrix<f64>> {
    if x.nrows() == 0 {
        return Err(Error::arg("RLS needs at least one training instance"));
    }
    if !(cfg.gamma > 0.0) {
        return Err(Error::arg(format!("RLS gamma must be positive, got {}", cfg.gamma)));
    }
    if targets.nrows() != x.nrows() {
        return Err(Error::dim(format!(
            "{} training rows but {} targets",
            x.nrows(),
            targets.nrows()
        )));
    }
    let a = with_bias(x);
    let n = x.nrows() as f64;
    let d = a.ncols();
    let lhs = a.transpose() * &a / n + DMatrix::identity(d, d) * cfg.gamma;
    let rhs = a.transpose() * targets / n;
    let chol = lhs
        .cholesky()
        .ok_or_else(|| Error::Numerical("RLS normal equations are not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

fn class_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

/// One-vs-rest RLS scores (`M × C`) for the rows of `test`.
pub fn rls_fit_predict(
    train: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    test: &DMatrix<f64>,
    cfg: &RlsConfig,
) -> Result<DMatrix<f64>> {
    if labels.len() != train.nrows() {
        return Err(Error::dim(format!(
            "{} labels for {} training rows",
            labels.len(),
            train.nrows()
        )));
    }
    if test.ncols() != train.ncols() {
        return Err(Error::dim(format!(
            "test has {} features, training has {}",
            test.ncols(),
            train.ncols()
        )));
    }
    let n_classes = n_classes.max(class_count(labels));
    let targets = DMatrix::from_fn(train.nrows(), n_classes, |i, c| {
        if labels[i] == c {
            1.0
        } else {
            -1.0
        }
    });
    let w = rls_fit(train, &targets, cfg)?;
    Ok(with_bias(test) * w)
}

/// Row-wise argmax; ties go to the lowest class.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..r.len() {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// For every test row, the `k_max` nearest training rows as
/// `(distance, index)`, sorted by distance then index.
pub fn nearest_neighbors(
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
    k_max: usize,
) -> Result<Vec<Vec<(f64, usize)>>> {
    if train.nrows() == 0 {
        return Err(Error::arg("kNN needs at least one training instance"));
    }
    if test.ncols() != train.ncols() {
        return Err(Error::dim(format!(
            "test has {} features, training has {}",
            test.ncols(),
            train.ncols()
        )));
    }
    let k_max = k_max.min(train.nrows());
    let train_t = train.transpose();
    let test_t = test.transpose();
    let mut out = Vec::with_capacity(test.nrows());
    for i in 0..test.nrows() {
        let q = test_t.column(i);
        let mut d: Vec<(f64, usize)> = (0..train.nrows())
            .map(|j| ((q - train_t.column(j)).norm(), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(k_max);
        out.push(d);
    }
    Ok(out)
}

/// Majority label among the first `k` neighbors. Ties go to the label with
/// the smallest summed distance, then to the lowest label.
pub fn vote(neighbors: &[(f64, usize)], labels: &[usize], k: usize) -> usize {
    let n_classes = class_count(labels);
    let mut count = vec![0usize; n_classes];
    let mut dist = vec![0.0f64; n_classes];
    for &(d, j) in neighbors.iter().take(k) {
        count[labels[j]] += 1;
        dist[labels[j]] += d;
    }
    let mut best = 0;
    for c in 1..n_classes {
        if count[c] > count[best] || (count[c] == count[best] && dist[c] < dist[best]) {
            best = c;
        }
    }
    best
}

pub fn knn_predict(
    train: &DMatrix<f64>,
    labels: &[usize],
    test: &DMatrix<f64>,
    cfg: &KnnConfig,
) -> Result<Vec<usize>> {
    if cfg.k == 0 {
        return Err(Error::arg("kNN needs k >= 1"));
    }
    if cfg.k > train.nrows() {
        return Err(Error::arg(format!(
            "k = {} exceeds the {} training instances",
            cfg.k,
            train.nrows()
        )));
    }
    if labels.len() != train.nrows() {
        return Err(Error::dim(format!(
            "{} labels for {} training rows",
            labels.len(),
            train.nrows()
        )));
    }
    let nn = nearest_neighbors(train, test, cfg.k)?;
    Ok(nn.iter().map(|n| vote(n, labels, cfg.k)).collect())
}

/// Majority across several predictions per instance; ties go to the lowest label.
fn majority(predictions: &[Vec<usize>]) -> Vec<usize> {
    let n = predictions.first().map_or(0, |p| p.len());
    let n_classes = predictions.iter().flatten().max().map_or(0, |&m| m + 1);
    (0..n)
        .map(|i| {
            let mut count = vec![0usize; n_classes];
            for p in predictions {
                count[p[i]] += 1;
            }
            let mut best = 0;
            for c in 1..n_classes {
                if count[c] > count[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcaCombine {
    /// Pick the best view pair on validation.
    Best,
    /// Average scores (RLS) or vote (kNN) over all pairs.
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    /// Best single raw view.
    Bsf,
    /// Concatenated views, each scaled to unit average L2 norm.
    Cat,
    Cca { combine: CcaCombine },
    Maxvar,
    Tcca,
    Ktcca { kernels: Vec<KernelSpec> },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Bsf => "bsf",
            MethodSpec::Cat => "cat",
            MethodSpec::Cca { combine: CcaCombine::Best } => "cca-bst",
            MethodSpec::Cca { combine: CcaCombine::Average } => "cca-avg",
            MethodSpec::Maxvar => "maxvar",
            MethodSpec::Tcca => "tcca",
            MethodSpec::Ktcca { .. } => "ktcca",
        }
    }

    fn reduces(&self) -> bool {
        !matches!(self, MethodSpec::Bsf | MethodSpec::Cat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Rls(RlsConfig),
    /// Candidate neighbor counts, chosen on validation.
    Knn { ks: Vec<usize> },
}

impl Classifier {
    pub fn knn_default() -> Self {
        Classifier::Knn { ks: (1..=10).collect() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Rls(_) => "rls",
            Classifier::Knn { .. } => "knn",
        }
    }
}

/// Instances the reduction is fitted on. Labels are never used by the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    #[default]
    All,
    Unlabeled,
    NonValidation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub method: MethodSpec,
    pub classifier: Classifier,
    pub ranks: Vec<usize>,
    pub eps: Vec<f64>,
    pub runs: usize,
    pub n_labeled: usize,
    pub validation_fraction: f64,
    pub pool: Pool,
    pub seed: u64,
    pub als: AlsConfig,
    pub entry_cap: EntryCap,
}

impl ProtocolConfig {
    pub fn new(method: MethodSpec, classifier: Classifier, n_labeled: usize) -> Self {
        ProtocolConfig {
            method,
            classifier,
            ranks: (1..=10).collect(),
            eps: vec![1e-2],
            runs: 5,
            n_labeled,
            validation_fraction: 0.2,
            pool: Pool::All,
            seed: 0,
            als: AlsConfig::default(),
            entry_cap: EntryCap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    /// Reduced dimension; 0 for methods without a reduction.
    pub rank: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_validation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub rank: usize,
    pub eps: Option<f64>,
    /// Which view, pair or combination produced the features.
    pub option: String,
    pub k: Option<usize>,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub classifier: String,
    pub runs: usize,
    pub seed: u64,
    pub n_labeled: usize,
    pub pool: Pool,
    pub curve: Vec<RankSummary>,
    pub selected_rank: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Per-run winners at the selected rank.
    pub selected: Vec<RunRecord>,
    pub warnings: Vec<String>,
    /// Original label text per class index, when labels were not integers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_names: Vec<String>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_split(n: usize, n_labeled: usize, validation_fraction: f64, seed: u64, run: usize) -> Result<Split> {
    if n_labeled == 0 || n_labeled >= n {
        return Err(Error::arg(format!(
            "labeled count must lie in 1..{n}, got {n_labeled}"
        )));
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::arg(format!(
            "validation fraction must lie in [0, 1), got {validation_fraction}"
        )));
    }
    let mut rng = stream(seed, "split", run as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let rest = n - n_labeled;
    // A zero fraction disables validation entirely.
    let n_val = if validation_fraction == 0.0 {
        0
    } else {
        ((rest as f64) * validation_fraction).round().max(1.0) as usize
    };
    if n_val >= rest {
        return Err(Error::arg(format!(
            "{rest} unlabeled instances leave nothing for testing"
        )));
    }
    let labeled = idx[..n_labeled].to_vec();
    let validation = idx[n_labeled..n_labeled + n_val].to_vec();
    let test = idx[n_labeled + n_val..].to_vec();
    Ok(Split {
        labeled,
        validation,
        test,
    })
}

fn assert_disjoint(s: &Split, n: usize) {
    let mut seen = vec![0u8; n];
    for (tag, set) in [(1u8, &s.labeled), (2, &s.validation), (4, &s.test)] {
        for &i in set.iter() {
            assert!(seen[i] == 0, "instance {i} appears in more than one split");
            seen[i] |= tag;
        }
    }
}

/// A feature source: one matrix, or several whose classifier outputs are combined.
struct Candidate {
    name: String,
    blocks: Vec<DMatrix<f64>>,
}

/// Reduction fitted once at the largest rank of the sweep.
enum Fitted {
    Raw(Vec<DMatrix<f64>>),
    Cat(DMatrix<f64>),
    Views(Vec<DMatrix<f64>>),
    Pairs(CcaCombine, Vec<((usize, usize), DMatrix<f64>, DMatrix<f64>)>),
}

impl Fitted {
    fn candidates(&self, r: usize) -> Vec<Candidate> {
        let cut = |z: &DMatrix<f64>| z.columns(0, r).into_owned();
        match self {
            Fitted::Raw(views) => views
                .iter()
                .enumerate()
                .map(|(p, v)| Candidate {
                    name: format!("view {p}"),
                    blocks: vec![v.clone()],
                })
                .collect(),
            Fitted::Cat(x) => vec![Candidate {
                name: "concat".into(),
                blocks: vec![x.clone()],
            }],
            Fitted::Views(zs) => {
                let parts: Vec<DMatrix<f64>> = zs.iter().map(cut).collect();
                vec![Candidate {
                    name: "all views".into(),
                    blocks: vec![concat_columns(&parts)],
                }]
            }
            Fitted::Pairs(combine, pairs) => {
                let feats: Vec<(String, DMatrix<f64>)> = pairs
                    .iter()
                    .map(|((p, q), a, b)| (format!("pair {p}-{q}"), concat_columns(&[cut(a), cut(b)])))
                    .collect();
                match combine {
                    CcaCombine::Best => feats
                        .into_iter()
                        .map(|(name, f)| Candidate { name, blocks: vec![f] })
                        .collect(),
                    CcaCombine::Average => vec![Candidate {
                        name: "all pairs".into(),
                        blocks: feats.into_iter().map(|(_, f)| f).collect(),
                    }],
                }
            }
        }
    }
}

fn row_major(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose()
}

/// Largest admissible rank for the method on this data.
fn rank_limit(method: &MethodSpec, dims: &[usize], n_pool: usize) -> usize {
    match method {
        MethodSpec::Bsf | MethodSpec::Cat => 0,
        MethodSpec::Tcca => dims.iter().copied().min().unwrap_or(0),
        // Every pair must support the rank, so the smallest view bounds it.
        MethodSpec::Cca { .. } if dims.len() >= 2 => dims.iter().copied().min().unwrap_or(0),
        MethodSpec::Cca { .. } => 0,
        MethodSpec::Maxvar => n_pool.min(dims.iter().sum()),
        MethodSpec::Ktcca { .. } => n_pool,
    }
}

fn fit_reduction(
    data: &MultiViewDataset,
    pool: &[usize],
    cfg: &ProtocolConfig,
    eps: f64,
    r: usize,
    run: usize,
) -> Result<Fitted> {
    let sub = data.select(pool)?;
    let mut als = cfg.als.clone();
    als.seed = stream_seed(cfg.seed ^ als.seed, "als", run as u64);
    match &cfg.method {
        MethodSpec::Bsf => Ok(Fitted::Raw(data.views().iter().map(row_major).collect())),
        MethodSpec::Cat => {
            let scaled: Vec<DMatrix<f64>> = data
                .views()
                .iter()
                .zip(sub.views())
                .map(|(v, pv)| {
                    let avg = pv.column_iter().map(|c| c.norm()).sum::<f64>() / pv.ncols() as f64;
                    let s = if avg > 0.0 { 1.0 / avg } else { 1.0 };
                    row_major(v) * s
                })
                .collect();
            Ok(Fitted::Cat(concat_columns(&scaled)))
        }
        MethodSpec::Tcca => {
            let opts = TccaOptions {
                eps,
                rank: r,
                als,
                entry_cap: cfg.entry_cap,
            };
            let model = fit_tcca(&sub, &opts)?;
            Ok(Fitted::Views(model.project_views(data)?))
        }
        MethodSpec::Ktcca { kernels } => {
            let opts = KtccaOptions {
                eps,
                rank: r,
                als,
                entry_cap: cfg.entry_cap,
            };
            let model = fit_ktcca(&sub, kernels, &opts)?;
            Ok(Fitted::Views(model.project_views(data)?))
        }
        MethodSpec::Maxvar => {
            let c = sub.centered();
            let model = fit_maxvar(&c, eps, r)?;
            let views = data.views_relative_to(c.means())?;
            Ok(Fitted::Views(
                views
                    .iter()
                    .zip(&model.projections)
                    .map(|(x, h)| x.transpose() * h)
                    .collect(),
            ))
        }
        MethodSpec::Cca { combine } => {
            let c = sub.centered();
            let views = data.views_relative_to(c.means())?;
            let m = data.n_views();
            let mut pairs = Vec::new();
            for p in 0..m {
                for q in p + 1..m {
                    let model = fit_cca(c.view(p), c.view(q), eps, r)?;
                    let (a, b) = model.variates(&views[p], &views[q]);
                    pairs.push(((p, q), a, b));
                }
            }
            Ok(Fitted::Pairs(*combine, pairs))
        }
    }
}

/// `(validation, test)` accuracy for each classifier option.
fn evaluate(
    cand: &Candidate,
    classifier: &Classifier,
    labels: &[usize],
    split: &Split,
) -> Result<Vec<(Option<usize>, f64, f64)>> {
    let train_labels: Vec<usize> = split.labeled.iter().map(|&i| labels[i]).collect();
    let eval_idx: Vec<usize> = split.validation.iter().chain(&split.test).copied().collect();
    let n_val = split.validation.len();
    let truth: Vec<usize> = eval_idx.iter().map(|&i| labels[i]).collect();
    let n_classes = class_count(labels);
    let score = |pred: &[usize]| (accuracy(&pred[..n_val], &truth[..n_val]), accuracy(&pred[n_val..], &truth[n_val..]));
    match classifier {
        Classifier::Rls(cfg) => {
            let mut total = DMatrix::zeros(eval_idx.len(), n_classes);
            for b in &cand.blocks {
                let train = b.select_rows(&split.labeled);
                let test = b.select_rows(&eval_idx);
                total += rls_fit_predict(&train, &train_labels, n_classes, &test, cfg)?;
            }
            let (v, t) = score(&argmax_rows(&total));
            Ok(vec![(None, v, t)])
        }
        Classifier::Knn { ks } => {
            let k_max = ks.iter().copied().max().unwrap_or(1);
            let neighbors = cand
                .blocks
                .iter()
                .map(|b| nearest_neighbors(&b.select_rows(&split.labeled), &b.select_rows(&eval_idx), k_max))
                .collect::<Result<Vec<_>>>()?;
            let mut out = Vec::new();
            for &k in ks {
                if k == 0 || k > split.labeled.len() {
                    continue;
                }
                let preds: Vec<Vec<usize>> = neighbors
                    .iter()
                    .map(|nn| nn.iter().map(|row| vote(row, &train_labels, k)).collect())
                    .collect();
                let combined = if preds.len() == 1 { preds[0].clone() } else { majority(&preds) };
                let (v, t) = score(&combined);
                out.push((Some(k), v, t));
            }
            Ok(out)
        }
    }
}

pub fn run_protocol(data: &MultiViewDataset, labels: &[usize], cfg: &ProtocolConfig) -> Result<EvalReport> {
    let n = data.n_instances();
    if labels.len() != n {
        return Err(Error::Inconsistent {
            first_name: "labels".into(),
            first: labels.len(),
            second_name: "instances".into(),
            second: n,
        });
    }
    if cfg.runs == 0 {
        return Err(Error::arg("at least one run is required"));
    }
    if let Classifier::Knn { ks } = &cfg.classifier {
        if ks.is_empty() || ks.contains(&0) {
            return Err(Error::arg("kNN candidate set must be nonempty and positive"));
        }
    }
    let mut warnings = Vec::new();
    let reduces = cfg.method.reduces();
    let eps_values: Vec<Option<f64>> = if reduces {
        if cfg.eps.is_empty() {
            return Err(Error::arg("at least one eps value is required"));
        }
        if let Some(e) = cfg.eps.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::arg(format!("eps must be nonnegative, got {e}")));
        }
        cfg.eps.iter().map(|&e| Some(e)).collect()
    } else {
        vec![None]
    };

    let splits = (0..cfg.runs)
        .map(|run| make_split(n, cfg.n_labeled, cfg.validation_fraction, cfg.seed, run))
        .collect::<Result<Vec<_>>>()?;
    let pool_of = |s: &Split| -> Vec<usize> {
        let mut p: Vec<usize> = match cfg.pool {
            Pool::All => (0..n).collect(),
            Pool::Unlabeled => s.validation.iter().chain(&s.test).copied().collect(),
            Pool::NonValidation => s.labeled.iter().chain(&s.test).copied().collect(),
        };
        p.sort_unstable();
        p
    };

    let ranks: Vec<usize> = if reduces {
        let n_pool = pool_of(&splits[0]).len();
        let limit = rank_limit(&cfg.method, &data.dims(), n_pool);
        let mut kept = Vec::new();
        for &r in &cfg.ranks {
            if r == 0 || r > limit {
                let w = format!("skipped r = {r}: {} supports ranks 1..={limit}", cfg.method.name());
                log::warn!("{w}");
                warnings.push(w);
            } else if !kept.contains(&r) {
                kept.push(r);
            }
        }
        if kept.is_empty() {
            return Err(Error::arg(format!(
                "no admissible rank in the sweep for {} (limit {limit})",
                cfg.method.name()
            )));
        }
        kept.sort_unstable();
        kept
    } else {
        vec![0]
    };
    let r_max = *ranks.last().unwrap();

    // best[run][rank index]
    let mut best: Vec<Vec<RunRecord>> = Vec::with_capacity(cfg.runs);
    for (run, split) in splits.iter().enumerate() {
        assert_disjoint(split, n);
        let pool = pool_of(split);
        let fitted: Vec<(Option<f64>, Fitted)> = eps_values
            .iter()
            .map(|&e| fit_reduction(data, &pool, cfg, e.unwrap_or(0.0), r_max, run).map(|f| (e, f)))
            .collect::<Result<Vec<_>>>()?;
        let mut per_rank = Vec::with_capacity(ranks.len());
        for &r in &ranks {
            let mut winner: Option<RunRecord> = None;
            for (eps, f) in &fitted {
                for cand in f.candidates(r) {
                    for (k, v, t) in evaluate(&cand, &cfg.classifier, labels, split)? {
                        if winner.as_ref().is_none_or(|w| v > w.validation_accuracy) {
                            winner = Some(RunRecord {
                                run,
                                rank: r,
                                eps: *eps,
                                option: cand.name.clone(),
                                k,
                                validation_accuracy: v,
                                test_accuracy: t,
                            });
                        }
                    }
                }
            }
            per_rank.push(winner.ok_or_else(|| Error::arg("no classifier option was admissible"))?);
        }
        best.push(per_rank);
    }

    let curve: Vec<RankSummary> = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let test: Vec<f64> = best.iter().map(|b| b[i].test_accuracy).collect();
            let val: Vec<f64> = best.iter().map(|b| b[i].validation_accuracy).collect();
            let (mean, std) = mean_std(&test);
            RankSummary {
                rank: r,
                mean_accuracy: mean,
                std_accuracy: std,
                mean_validation: mean_std(&val).0,
            }
        })
        .collect();
    // Without a validation set the largest swept rank is reported.
    let mut sel = if cfg.validation_fraction == 0.0 { curve.len() - 1 } else { 0 };
    if cfg.validation_fraction > 0.0 {
        for i in 1..curve.len() {
            if curve[i].mean_validation > curve[sel].mean_validation {
                sel = i;
            }
        }
    }
    Ok(EvalReport {
        method: cfg.method.name().into(),
        classifier: cfg.classifier.name().into(),
        runs: cfg.runs,
        seed: cfg.seed,
        n_labeled: cfg.n_labeled,
        pool: cfg.pool,
        selected_rank: curve[sel].rank,
        mean_accuracy: curve[sel].mean_accuracy,
        std_accuracy: curve[sel].std_accuracy,
        selected: best.iter().map(|b| b[sel].clone()).collect(),
        curve,
        warnings,
        label_names: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `x_p = A_p s + σ·noise`: every pair of views is correlated.
    #[default]
    SharedLatent,
    /// `x_p = ε_p A_p s + σ·noise` with random signs whose product over the
    /// views is +1: views are pairwise uncorrelated but jointly dependent.
    TripleProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dims: Vec<usize>,
    pub n: usize,
    pub latent_dim: usize,
    pub sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub kind: SyntheticKind,
    /// Probability of class 1. Away from 0.5 the latent is skewed, which
    /// gives it a nonzero third moment.
    pub class_balance: f64,
    /// Distance between the class means of the latent.
    pub separation: f64,
    /// Standard deviation of within-class latent variation.
    pub spread: f64,
}

impl SyntheticSpec {
    pub fn new(dims: Vec<usize>, n: usize, sigma: f64, seed: u64) -> Self {
        SyntheticSpec {
            dims,
            n,
            latent_dim: 1,
            sigma,
            seed,
            kind: SyntheticKind::SharedLatent,
            class_balance: 0.3,
            separation: 1.0,
            spread: 0.0,
        }
    }

    pub fn m(&self) -> usize {
        self.dims.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub data: MultiViewDataset,
    pub labels: Vec<usize>,
    /// `latent_dim × N`.
    pub latent: DMatrix<f64>,
}

pub fn make_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.dims.is_empty() || spec.dims.contains(&0) {
        return Err(Error::arg("every view needs a positive dimension"));
    }
    if spec.n < 2 || spec.latent_dim == 0 {
        return Err(Error::arg("need n >= 2 and latent_dim >= 1"));
    }
    if !(spec.sigma >= 0.0) || !(spec.spread >= 0.0) || !spec.separation.is_finite() {
        return Err(Error::arg("sigma and spread must be nonnegative, separation finite"));
    }
    if !(spec.class_balance > 0.0 && spec.class_balance < 1.0) {
        return Err(Error::arg(format!(
            "class balance must lie in (0, 1), got {}",
            spec.class_balance
        )));
    }
    let (n, l) = (spec.n, spec.latent_dim);
    let mut rng = stream(spec.seed, "synthetic-latent", 0);
    let labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random::<f64>() < spec.class_balance)).collect();
    let mut dir = DVector::from_fn(l, |_, _| rng.sample::<f64, _>(StandardNormal));
    dir /= dir.norm();
    let latent = DMatrix::from_fn(l, n, |i, j| {
        let y = labels[j] as f64 - spec.class_balance;
        spec.separation * y * dir[i]
    }) + DMatrix::from_fn(l, n, |_, _| spec.spread * rng.sample::<f64, _>(StandardNormal));

    let mut sign_rng = stream(spec.seed, "synthetic-signs", 0);
    let signs: Vec<Vec<f64>> = match spec.kind {
        SyntheticKind::SharedLatent => vec![vec![1.0; n]; spec.m()],
        SyntheticKind::TripleProduct => {
            let mut s: Vec<Vec<f64>> = (0..spec.m() - 1)
                .map(|_| (0..n).map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
                .collect();
            let last = (0..n).map(|j| s.iter().map(|v| v[j]).product()).collect();
            s.push(last);
            s
        }
    };

    let mut views = Vec::with_capacity(spec.m());
    for (p, &d) in spec.dims.iter().enumerate() {
        let mut map_rng = stream(spec.seed, "synthetic-map", p as u64);
        let mut a = DMatrix::from_fn(d, l, |_, _| map_rng.sample::<f64, _>(StandardNormal));
        for mut c in a.column_iter_mut() {
            let norm = c.norm();
            if norm > 0.0 {
                c /= norm;
            }
        }
        let mut noise_rng = stream(spec.seed, "synthetic-noise", p as u64);
        let mut x = &a * &latent;
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= signs[p][j];
        }
        x += DMatrix::from_fn(d, n, |_, _| spec.sigma * noise_rng.sample::<f64, _>(StandardNormal));
        views.push(x);
    }
    Ok(SyntheticData {
        data: MultiViewDataset::new(views)?,
        labels,
        latent,
    })
}
