//! Files: view manifests, CSV matrices, label lists, evaluation reports and
//! fitted models.
//!
//! Every float is written with 17 significant digits, so reading a file back
//! reproduces the in-memory doubles exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::harness::EvalReport;
use crate::ktcca::{KernelSpec, KtccaModel};
use crate::tcca::TccaModel;

pub const REPORT_SCHEMA: &str = "mvcca/1";
pub const MODEL_SCHEMA: &str = "mvcca-model/1";

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile {
            path: path.to_path_buf(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").unwrap();
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub name: String,
    pub path: PathBuf,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewManifest {
    pub views: Vec<ViewEntry>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl ViewManifest {
    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::Parse {
                context: "manifest".into(),
                message: "no views listed".into(),
            });
        }
        for (i, v) in self.views.iter().enumerate() {
            if v.dim == 0 {
                return Err(Error::Parse {
                    context: "manifest".into(),
                    message: format!("view '{}' has dimension 0", v.name),
                });
            }
            if self.views[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Parse {
                    context: "manifest".into(),
                    message: format!("view name '{}' is used twice", v.name),
                });
            }
        }
        Ok(())
    }
}

/// Reads a manifest; relative paths inside it are resolved against its directory.
pub fn load_manifest(path: &Path) -> Result<ViewManifest> {
    let text = read_text(path)?;
    let mut m: ViewManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    m.validate()?;
    let base = path.parent().unwrap_or(Path::new(""));
    for v in &mut m.views {
        if v.path.is_relative() {
            v.path = base.join(&v.path);
        }
    }
    if let Some(l) = &mut m.labels {
        if l.is_relative() {
            *l = base.join(&*l);
        }
    }
    Ok(m)
}

/// CSV with a `rows,cols` header and one instance per line.
pub fn read_matrix(path: &Path, delimiter: char, context: &str) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |message: String| Error::Parse {
        context: context.to_string(),
        message,
    };
    let (_, header) = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(format!("header '{header}' is not 'rows,cols'")))?;
    let [rows, cols] = dims[..] else {
        return Err(parse_err(format!("header '{header}' is not 'rows,cols'")));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line_no, line) in lines {
        if seen == rows {
            return Err(Error::Shape {
                context: context.to_string(),
                message: format!("more than the {rows} rows declared (line {})", line_no + 1),
            });
        }
        let start = data.len();
        for (c, tok) in line.split(delimiter).enumerate() {
            let v: f64 = tok.trim().parse().map_err(|_| {
                parse_err(format!("row {seen}, column {c}: '{}' is not a number", tok.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: context.to_string(),
                    row: seen,
                    col: c,
                });
            }
            data.push(v);
        }
        if data.len() - start != cols {
            return Err(Error::Shape {
                context: context.to_string(),
                message: format!("row {seen} has {} values, expected {cols}", data.len() - start),
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Shape {
            context: context.to_string(),
            message: format!("found {seen} rows, header declares {rows}"),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn matrix_to_csv(m: &DMatrix<f64>, delimiter: char) -> String {
    let mut s = format!("{},{}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                s.push(delimiter);
            }
            fmt_f64(&mut s, m[(r, c)]);
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, delimiter: char) -> Result<()> {
    write_atomic(path, matrix_to_csv(m, delimiter).as_bytes())
}

/// Class indices plus the original label text for each index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub indices: Vec<usize>,
    pub names: Vec<String>,
}

impl Labels {
    /// Maps distinct values to indices in sorted order (numeric when every
    /// value is an integer).
    pub fn from_strings(values: &[String]) -> Labels {
        let mut names: Vec<String> = values.to_vec();
        let all_int = values.iter().all(|v| v.parse::<i64>().is_ok());
        if all_int {
            names.sort_by_key(|v| v.parse::<i64>().unwrap());
        } else {
            names.sort();
        }
        names.dedup();
        let indices = values
            .iter()
            .map(|v| names.iter().position(|n| n == v).unwrap())
            .collect();
        Labels { indices, names }
    }

    pub fn from_indices(indices: Vec<usize>) -> Labels {
        let n = indices.iter().max().map_or(0, |&m| m + 1);
        Labels {
            indices,
            names: (0..n).map(|i| i.to_string()).collect(),
        }
    }
}

pub fn read_labels(path: &Path) -> Result<Labels> {
    let text = read_text(path)?;
    let values: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if values.is_empty() {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: "no labels".into(),
        });
    }
    Ok(Labels::from_strings(&values))
}

pub fn load_dataset(manifest: &ViewManifest) -> Result<(MultiViewDataset, Option<Labels>)> {
    manifest.validate()?;
    let mut views = Vec::with_capacity(manifest.views.len());
    for v in &manifest.views {
        let context = format!("view '{}'", v.name);
        let x = read_matrix(&v.path, manifest.delimiter, &context)?;
        if x.ncols() != v.dim {
            return Err(Error::Shape {
                context,
                message: format!("{} columns, manifest declares {}", x.ncols(), v.dim),
            });
        }
        if let Some(first) = views.first() {
            let first: &DMatrix<f64> = first;
            if first.nrows() != x.nrows() {
                return Err(Error::Inconsistent {
                    first_name: format!("view '{}'", manifest.views[0].name),
                    first: first.nrows(),
                    second_name: format!("view '{}'", v.name),
                    second: x.nrows(),
                });
            }
        }
        views.push(x);
    }
    let labels = match &manifest.labels {
        Some(p) => {
            let l = read_labels(p)?;
            if l.indices.len() != views[0].nrows() {
                return Err(Error::Inconsistent {
                    first_name: format!("view '{}'", manifest.views[0].name),
                    first: views[0].nrows(),
                    second_name: "labels".into(),
                    second: l.indices.len(),
                });
            }
            Some(l)
        }
        None => None,
    };
    Ok((MultiViewDataset::from_row_major(views)?, labels))
}

/// Writes one CSV per view, a label file and `manifest.json` into `dir`.
pub fn save_dataset(
    dir: &Path,
    data: &MultiViewDataset,
    labels: Option<&Labels>,
    names: &[String],
) -> Result<PathBuf> {
    if names.len() != data.n_views() {
        return Err(Error::arg(format!("{} names for {} views", names.len(), data.n_views())));
    }
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for ((x, name), dim) in data.raw_views().iter().zip(names).zip(data.dims()) {
        let file = format!("{name}.csv");
        write_matrix(&dir.join(&file), &x.transpose(), ',')?;
        entries.push(ViewEntry {
            name: name.clone(),
            path: PathBuf::from(file),
            dim,
        });
    }
    let label_path = match labels {
        Some(l) => {
            let mut s = String::new();
            for &i in &l.indices {
                s.push_str(&l.names[i]);
                s.push('\n');
            }
            write_atomic(&dir.join("labels.txt"), s.as_bytes())?;
            Some(PathBuf::from("labels.txt"))
        }
        None => None,
    };
    let manifest = ViewManifest {
        views: entries,
        labels: label_path,
        delimiter: ',',
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema: String,
    #[serde(flatten)]
    report: EvalReport,
}

pub fn report_tsv(report: &EvalReport) -> String {
    let mut s = String::from("r\tmean\tstd\n");
    for c in &report.curve {
        write!(s, "{}\t", c.rank).unwrap();
        fmt_f64(&mut s, c.mean_accuracy);
        s.push('\t');
        fmt_f64(&mut s, c.std_accuracy);
        s.push('\n');
    }
    s
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    let file = ReportFile {
        schema: REPORT_SCHEMA.into(),
        report: report.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

/// Writes `path` (JSON) and `<method>_acc_vs_dim.tsv` next to it; returns the TSV path.
pub fn save_report(report: &EvalReport, path: &Path) -> Result<PathBuf> {
    write_atomic(path, report_json(report)?.as_bytes())?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let tsv = dir.join(format!("{}_acc_vs_dim.tsv", report.method));
    write_atomic(&tsv, report_tsv(report).as_bytes())?;
    Ok(tsv)
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = read_text(path)?;
    let file: ReportFile = serde_json::from_str(&text)?;
    if file.schema != REPORT_SCHEMA {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: format!("schema '{}', expected '{REPORT_SCHEMA}'", file.schema),
        });
    }
    Ok(file.report)
}

/// A fitted reduction that can be saved and applied to new data.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Linear projections per view (`tcca`, `maxvar`, `cca`), applied to the
    /// dataset views listed in `views`.
    Linear {
        method: String,
        views: Vec<usize>,
        model: TccaModel,
    },
    Kernel(KtccaModel),
}

impl Model {
    pub fn method(&self) -> &str {
        match self {
            Model::Linear { method, .. } => method,
            Model::Kernel(_) => "ktcca",
        }
    }

    pub fn transform(&self, data: &MultiViewDataset) -> Result<DMatrix<f64>> {
        match self {
            Model::Linear { views, model, .. } => {
                if let Some(&bad) = views.iter().find(|&&v| v >= data.n_views()) {
                    return Err(Error::dim(format!(
                        "model uses view {bad}, data has {} views",
                        data.n_views()
                    )));
                }
                let raw = data.raw_views();
                let subset = MultiViewDataset::new(views.iter().map(|&v| raw[v].clone()).collect())?;
                model.transform(&subset)
            }
            Model::Kernel(k) => k.transform(data),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    schema: String,
    method: String,
    eps: f64,
    rank: usize,
    views: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    kernels: Vec<KernelSpec>,
}

fn push_block(s: &mut String, name: &str, m: &DMatrix<f64>) {
    writeln!(s, "#block {name} {},{}", m.nrows(), m.ncols()).unwrap();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                s.push(',');
            }
            fmt_f64(s, m[(r, c)]);
        }
        s.push('\n');
    }
}

fn row(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v)
}

pub fn model_to_string(model: &Model) -> Result<String> {
    let (header, blocks): (ModelHeader, Vec<(String, DMatrix<f64>)>) = match model {
        Model::Linear { method, views, model } => {
            let mut b = vec![("correlations".to_string(), row(&model.correlations))];
            for (p, (mu, t)) in model.means.iter().zip(&model.transforms).enumerate() {
                b.push((format!("mean{p}"), row(mu.as_slice())));
                b.push((format!("transform{p}"), t.clone()));
            }
            let h = ModelHeader {
                schema: MODEL_SCHEMA.into(),
                method: method.clone(),
                eps: model.eps,
                rank: model.rank(),
                views: views.clone(),
                kernels: Vec::new(),
            };
            (h, b)
        }
        Model::Kernel(k) => {
            let ids: Vec<f64> = k.training_ids.iter().map(|&i| i as f64).collect();
            let mut b = vec![
                ("correlations".to_string(), row(&k.correlations)),
                ("ids".to_string(), row(&ids)),
            ];
            for (p, (a, x)) in k.coefs.iter().zip(&k.training).enumerate() {
                b.push((format!("coef{p}"), a.clone()));
                b.push((format!("training{p}"), x.transpose()));
            }
            let h = ModelHeader {
                schema: MODEL_SCHEMA.into(),
                method: "ktcca".into(),
                eps: k.eps,
                rank: k.rank(),
                views: (0..k.n_views()).collect(),
                kernels: k.specs.clone(),
            };
            (h, b)
        }
    };
    let mut s = serde_json::to_string(&header)?;
    s.push('\n');
    for (name, m) in &blocks {
        push_block(&mut s, name, m);
    }
    Ok(s)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model)?.as_bytes())
}

pub fn model_from_str(text: &str, context: &str) -> Result<Model> {
    let parse_err = |message: String| Error::Parse {
        context: context.to_string(),
        message,
    };
    let mut lines = text.lines();
    let header: ModelHeader = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| parse_err(format!("header: {e}")))?;
    if header.schema != MODEL_SCHEMA {
        return Err(parse_err(format!("schema '{}', expected '{MODEL_SCHEMA}'", header.schema)));
    }
    let mut blocks: Vec<(String, DMatrix<f64>)> = Vec::new();
    let mut pending = lines.peekable();
    while let Some(line) = pending.next() {
        let spec = line
            .strip_prefix("#block ")
            .ok_or_else(|| parse_err(format!("expected a block header, found '{line}'")))?;
        let (name, shape) = spec
            .split_once(' ')
            .ok_or_else(|| parse_err(format!("bad block header '{line}'")))?;
        let (r, c) = shape
            .split_once(',')
            .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
            .ok_or_else(|| parse_err(format!("bad block shape '{shape}'")))?;
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            let l = pending
                .next()
                .ok_or_else(|| parse_err(format!("block {name} ends after {i} rows")))?;
            let before = data.len();
            for t in l.split(',').filter(|t| !t.is_empty()) {
                data.push(t.parse::<f64>().map_err(|_| parse_err(format!("block {name}: '{t}'")))?);
            }
            if data.len() - before != c {
                return Err(Error::Shape {
                    context: context.to_string(),
                    message: format!("block {name} row {i} has {} values, expected {c}", data.len() - before),
                });
            }
        }
        blocks.push((name.to_string(), DMatrix::from_row_slice(r, c, &data)));
    }
    let take = |name: &str| -> Result<DMatrix<f64>> {
        blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| parse_err(format!("missing block {name}")))
    };
    let correlations: Vec<f64> = take("correlations")?.iter().copied().collect();
    let m = header.views.len();
    if header.method == "ktcca" {
        let ids = take("ids")?.iter().map(|&v| v as usize).collect();
        let mut coefs = Vec::with_capacity(m);
        let mut training = Vec::with_capacity(m);
        for p in 0..m {
            coefs.push(take(&format!("coef{p}"))?);
            training.push(take(&format!("training{p}"))?.transpose());
        }
        let k = KtccaModel::from_parts(coefs, correlations, header.eps, header.kernels, training, ids)?;
        return Ok(Model::Kernel(k));
    }
    let mut means = Vec::with_capacity(m);
    let mut transforms = Vec::with_capacity(m);
    for p in 0..m {
        let mu = take(&format!("mean{p}"))?;
        means.push(DVector::from_column_slice(mu.as_slice()));
        let t = take(&format!("transform{p}"))?;
        if t.nrows() != mu.len() || t.ncols() != correlations.len() {
            return Err(Error::Shape {
                context: context.to_string(),
                message: format!("transform{p} is {}x{}", t.nrows(), t.ncols()),
            });
        }
        transforms.push(t);
    }
    Ok(Model::Linear {
        method: header.method,
        views: header.views,
        model: TccaModel {
            transforms,
            correlations,
            eps: header.eps,
            means,
        },
    })
}

pub fn load_model(path: &Path) -> Result<Model> {
    model_from_str(&read_text(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Pool, RankSummary, RunRecord};
    use crate::ktcca::{fit_ktcca, KtccaOptions};
    use crate::tcca::{fit_tcca, TccaOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = gaussian(5, 3, 1);
        m[(0, 0)] = 1.0 / 3.0;
        m[(1, 1)] = f64::MIN_POSITIVE;
        m[(2, 2)] = -1e300;
        let p = dir.path().join("m.csv");
        write_matrix(&p, &m, ',').unwrap();
        let back = read_matrix(&p, ',', "m").unwrap();
        assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("2,2\n1,2\n3\n", "ragged"),
            ("2,2\n1,2\n", "short"),
            ("1,2\n1,2\n3,4\n", "long"),
            ("1,2\n1,x\n", "parse"),
            ("1,2\n1,inf\n", "nonfinite"),
            ("12\n", "header"),
        ];
        for (text, tag) in cases {
            let p = dir.path().join(format!("{tag}.csv"));
            fs::write(&p, text).unwrap();
            let err = read_matrix(&p, ',', tag).unwrap_err();
            match tag {
                "ragged" | "short" | "long" => assert!(matches!(err, Error::Shape { .. }), "{tag}"),
                "nonfinite" => assert!(matches!(err, Error::NonFinite { row: 0, col: 1, .. })),
                _ => assert!(matches!(err, Error::Parse { .. }), "{tag}"),
            }
        }
        let missing = read_matrix(&dir.path().join("nope.csv"), ',', "x").unwrap_err();
        assert!(matches!(missing, Error::MissingFile { .. }));
    }

    #[test]
    fn dataset_round_trip_and_consistency() {
        let dir = tempfile::tempdir().unwrap();
        let data = MultiViewDataset::new(vec![gaussian(2, 3, 2), gaussian(4, 3, 3)]).unwrap();
        let labels = Labels::from_strings(&["b".into(), "a".into(), "b".into()]);
        assert_eq!(labels.indices, vec![1, 0, 1]);
        let path = save_dataset(dir.path(), &data, Some(&labels), &["lab".into(), "wt".into()]).unwrap();
        let (back, l) = load_dataset(&load_manifest(&path).unwrap()).unwrap();
        assert_eq!(back.n_instances(), 3);
        assert_eq!(back, data);
        assert_eq!(l.unwrap(), labels);

        write_matrix(&dir.path().join("wt.csv"), &gaussian(4, 4, 4), ',').unwrap();
        let err = load_dataset(&load_manifest(&path).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Inconsistent { first: 3, second: 4, .. }));
    }

    #[test]
    fn integer_labels_sort_numerically() {
        let l = Labels::from_strings(&["10".into(), "-1".into(), "2".into()]);
        assert_eq!(l.names, vec!["-1", "2", "10"]);
        assert_eq!(l.indices, vec![2, 0, 1]);
    }

    fn report(curve: Vec<RankSummary>) -> EvalReport {
        EvalReport {
            method: "tcca".into(),
            classifier: "rls".into(),
            runs: 5,
            seed: 7,
            n_labeled: 20,
            pool: Pool::All,
            selected_rank: 1,
            mean_accuracy: 91.25,
            std_accuracy: 0.1 + 0.2,
            selected: vec![RunRecord {
                run: 0,
                rank: 1,
                eps: Some(1e-2),
                option: "all views".into(),
                k: None,
                validation_accuracy: 100.0 / 3.0,
                test_accuracy: 2.0 / 3.0,
            }],
            curve,
            warnings: vec![],
            label_names: vec!["neg".into(), "pos".into()],
        }
    }

    #[test]
    fn report_round_trip_and_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(vec![RankSummary {
            rank: 1,
            mean_accuracy: 91.25,
            std_accuracy: 0.3,
            mean_validation: 90.0,
        }]);
        let p = dir.path().join("report.json");
        let tsv = save_report(&r, &p).unwrap();
        assert_eq!(load_report(&p).unwrap(), r);
        let text = fs::read_to_string(tsv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("r\tmean\tstd\n1\t"));
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(json["schema"], REPORT_SCHEMA);

        let empty = report(vec![]);
        save_report(&empty, &p).unwrap();
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(json["curve"], serde_json::json!([]));
    }

    #[test]
    fn tcca_model_round_trip_is_bit_exact() {
        let data = MultiViewDataset::new(vec![gaussian(3, 30, 5), gaussian(2, 30, 6), gaussian(3, 30, 7)]).unwrap();
        let model = fit_tcca(&data, &TccaOptions::new(0.1, 2)).unwrap();
        let m = Model::Linear {
            method: "tcca".into(),
            views: vec![0, 1, 2],
            model,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.txt");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.transform(&data).unwrap(), m.transform(&data).unwrap());
    }

    #[test]
    fn ktcca_model_round_trip_is_bit_exact() {
        let data = MultiViewDataset::new(vec![gaussian(2, 8, 8), gaussian(3, 8, 9)]).unwrap();
        let specs = [KernelSpec::l2(), KernelSpec::l2()];
        let model = fit_ktcca(&data, &specs, &KtccaOptions::new(0.1, 2)).unwrap();
        let m = Model::Kernel(model);
        let text = model_to_string(&m).unwrap();
        let back = model_from_str(&text, "mem").unwrap();
        assert_eq!(back, m);
        assert!(model_from_str("{}\n", "mem").is_err());
    }
}
