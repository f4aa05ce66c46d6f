//! On-disk formats: labelled CSV datasets, versioned text model files and
//! prediction tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bayes::{self, ClassDists, GenerativeModel};
use crate::dataset::LabeledDataset;
use crate::distributions::{MultivariateGaussian, UniformInterval, UnivariateGaussian};
use crate::error::Error;
use crate::logit::{self, FeatureKind, FeatureMap, LogitModel};
use crate::moments::Priors;
use crate::util::{fmt_f64, parse_f64};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Reads `y,x1,...,xd` CSV. Labels must be integers `>= 1`; the number of
/// classes is the largest label seen.
pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let width = header.len();
    if width < 2 || &header[0] != "y" {
        return Err(parse_err(1, "header must be `y,x1,...,xd`"));
    }
    for (j, name) in header.iter().enumerate().skip(1) {
        if name != format!("x{j}") {
            return Err(parse_err(1, format!("header column {} should be `x{j}`, found `{name}`", j + 1)));
        }
    }
    let dim = width - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", record.len())));
        }
        let y: usize = record[0]
            .parse()
            .ok()
            .filter(|&y| y >= 1)
            .ok_or_else(|| parse_err(line, format!("label `{}` is not an integer >= 1", &record[0])))?;
        labels.push(y);
        for cell in record.iter().skip(1) {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{cell}` is not a finite number")))?;
            features.push(v);
        }
    }
    if labels.is_empty() {
        return Err(parse_err(2, "dataset has no rows"));
    }
    let m = labels.iter().copied().max().unwrap_or(1);
    Ok(LabeledDataset::new(features, dim, &labels, m)?)
}

fn csv_err(e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FormatError::Io(io),
        other => parse_err(line, format!("{other:?}")),
    }
}

pub fn write_dataset<W: Write>(mut w: W, data: &LabeledDataset) -> std::io::Result<()> {
    let mut header = String::from("y");
    for j in 1..=data.dim() {
        let _ = write!(header, ",x{j}");
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for (x, y) in data.rows() {
        line.clear();
        let _ = write!(line, "{}", y + 1);
        for v in x {
            let _ = write!(line, ",{}", fmt_f64(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// A fitted model of either family, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Generative(GenerativeModel),
    Logit(LogitModel),
}

/// Class probabilities for one point, or `None` where the generative
/// posterior is undefined.
pub type Prediction = Option<Vec<f64>>;

impl SavedModel {
    pub fn num_classes(&self) -> usize {
        match self {
            SavedModel::Generative(m) => m.num_classes(),
            SavedModel::Logit(m) => m.num_classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SavedModel::Generative(m) => m.dim(),
            SavedModel::Logit(m) => m.feature_map().input_dim,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, Error> {
        match self {
            SavedModel::Generative(m) => match bayes::posterior_direct(m, x) {
                Ok(p) => Ok(Some(p)),
                Err(Error::UndefinedPosterior) => Ok(None),
                Err(e) => Err(e),
            },
            SavedModel::Logit(m) => logit::predict_proba(m, x).map(Some),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format_version: {MODEL_FORMAT_VERSION}");
        let join = |v: &mut dyn Iterator<Item = f64>| v.map(fmt_f64).collect::<Vec<_>>().join(" ");
        match self {
            SavedModel::Generative(m) => {
                let (model, kind) = match m.dists() {
                    ClassDists::Univariate(_) => ("bayes-gaussian", "univariate"),
                    ClassDists::Multivariate(_) => ("bayes-gaussian", "multivariate"),
                    ClassDists::Uniform(_) => ("bayes-uniform", "uniform"),
                };
                let _ = writeln!(s, "model: {model}");
                let _ = writeln!(s, "kind: {kind}");
                let _ = writeln!(s, "num_classes: {}", m.num_classes());
                let _ = writeln!(s, "dim: {}", m.dim());
                let counts: Vec<String> = m.priors().counts().iter().map(usize::to_string).collect();
                let _ = writeln!(s, "counts: {}", counts.join(" "));
                match m.dists() {
                    ClassDists::Univariate(v) => {
                        for (i, g) in v.iter().enumerate() {
                            let _ = writeln!(s, "class.{}.mean: {}", i + 1, fmt_f64(g.mean()));
                            let _ = writeln!(s, "class.{}.variance: {}", i + 1, fmt_f64(g.variance()));
                        }
                    }
                    ClassDists::Multivariate(v) => {
                        for (i, g) in v.iter().enumerate() {
                            let _ = writeln!(s, "class.{}.mean: {}", i + 1, join(&mut g.mean().iter().copied()));
                            // row-major; the matrix is symmetric so the order is immaterial
                            let cov = g.covariance().transpose();
                            let _ = writeln!(s, "class.{}.covariance: {}", i + 1, join(&mut cov.iter().copied()));
                        }
                    }
                    ClassDists::Uniform(v) => {
                        for (i, u) in v.iter().enumerate() {
                            let _ = writeln!(s, "class.{}.lo: {}", i + 1, fmt_f64(u.lo()));
                            let _ = writeln!(s, "class.{}.hi: {}", i + 1, fmt_f64(u.hi()));
                        }
                    }
                }
            }
            SavedModel::Logit(m) => {
                let _ = writeln!(s, "model: logit");
                let _ = writeln!(s, "features: {}", m.feature_map().kind);
                let _ = writeln!(s, "num_classes: {}", m.num_classes());
                let _ = writeln!(s, "dim: {}", m.feature_map().input_dim);
                let _ = writeln!(s, "reference_class: {}", m.num_classes());
                for s_idx in 0..m.num_classes() - 1 {
                    let _ = writeln!(s, "weights.{}: {}", s_idx + 1, join(&mut m.weights(s_idx).iter().copied()));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let kv = KeyValues::parse(text)?;
        let version: u32 = kv.parse_one("format_version")?;
        if version != MODEL_FORMAT_VERSION {
            return Err(parse_err(kv.line("format_version"), format!("unsupported format_version {version}")));
        }
        let m: usize = kv.parse_one("num_classes")?;
        let d: usize = kv.parse_one("dim")?;
        let model = kv.get("model")?;
        match model {
            "bayes-gaussian" | "bayes-uniform" => {
                let counts: Vec<usize> = kv.parse_list("counts")?;
                if counts.len() != m {
                    return Err(parse_err(kv.line("counts"), format!("expected {m} counts")));
                }
                let priors = Priors::from_counts(&counts)?;
                let kind = kv.get("kind")?;
                let dists = match (model, kind) {
                    ("bayes-gaussian", "univariate") => ClassDists::Univariate(
                        (1..=m)
                            .map(|s| {
                                Ok(UnivariateGaussian::new(
                                    kv.parse_float(&format!("class.{s}.mean"))?,
                                    kv.parse_float(&format!("class.{s}.variance"))?,
                                )?)
                            })
                            .collect::<Result<_, FormatError>>()?,
                    ),
                    ("bayes-gaussian", "multivariate") => ClassDists::Multivariate(
                        (1..=m)
                            .map(|s| {
                                let mean = kv.parse_floats(&format!("class.{s}.mean"), d)?;
                                let cov = kv.parse_floats(&format!("class.{s}.covariance"), d * d)?;
                                Ok(MultivariateGaussian::new(
                                    mean.into(),
                                    DMatrix::from_row_slice(d, d, &cov),
                                )?)
                            })
                            .collect::<Result<_, FormatError>>()?,
                    ),
                    ("bayes-uniform", "uniform") => ClassDists::Uniform(
                        (1..=m)
                            .map(|s| {
                                Ok(UniformInterval::new(
                                    kv.parse_float(&format!("class.{s}.lo"))?,
                                    kv.parse_float(&format!("class.{s}.hi"))?,
                                )?)
                            })
                            .collect::<Result<_, FormatError>>()?,
                    ),
                    _ => {
                        return Err(parse_err(
                            kv.line("kind"),
                            format!("kind `{kind}` does not match model `{model}`"),
                        ))
                    }
                };
                let g = GenerativeModel::new(priors, dists)?;
                if g.dim() != d {
                    return Err(parse_err(kv.line("dim"), format!("dim {d} but parameters have dimension {}", g.dim())));
                }
                Ok(SavedModel::Generative(g))
            }
            "logit" => {
                let kind: FeatureKind = kv.get("features")?.parse()?;
                let fm = FeatureMap::new(kind, d);
                let rows = (1..m)
                    .map(|s| kv.parse_floats(&format!("weights.{s}"), 1 + fm.output_dim()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SavedModel::Logit(LogitModel::from_weights(fm, m, &rows)?))
            }
            other => Err(parse_err(kv.line("model"), format!("unknown model `{other}`"))),
        }
    }
}

struct KeyValues<'a> {
    entries: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> KeyValues<'a> {
    fn parse(text: &'a str) -> Result<Self, FormatError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| parse_err(i + 1, "expected `key: value`"))?;
            if entries.insert(k.trim(), (i + 1, v.trim())).is_some() {
                return Err(parse_err(i + 1, format!("duplicate key `{}`", k.trim())));
            }
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn get(&self, key: &str) -> Result<&'a str, FormatError> {
        self.entries
            .get(key)
            .map(|e| e.1)
            .ok_or_else(|| parse_err(0, format!("missing key `{key}`")))
    }

    fn parse_one<T: std::str::FromStr>(&self, key: &str) -> Result<T, FormatError> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| parse_err(self.line(key), format!("invalid value `{v}` for `{key}`")))
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, FormatError> {
        self.get(key)?
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(self.line(key), format!("invalid value `{t}` for `{key}`")))
            })
            .collect()
    }

    fn parse_float(&self, key: &str) -> Result<f64, FormatError> {
        let v = self.get(key)?;
        parse_f64(v).ok_or_else(|| parse_err(self.line(key), format!("invalid number `{v}` for `{key}`")))
    }

    fn parse_floats(&self, key: &str, len: usize) -> Result<Vec<f64>, FormatError> {
        let values = self
            .get(key)?
            .split_whitespace()
            .map(|t| parse_f64(t).ok_or_else(|| parse_err(self.line(key), format!("invalid number `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != len {
            return Err(parse_err(
                self.line(key),
                format!("`{key}` has {} values, expected {len}", values.len()),
            ));
        }
        Ok(values)
    }
}

/// Writes `p1..pM,yhat`. Undefined posteriors become `nan` with an empty label.
pub fn write_predictions<W: Write>(mut w: W, num_classes: usize, preds: &[Prediction]) -> std::io::Result<()> {
    let header: Vec<String> = (1..=num_classes).map(|s| format!("p{s}")).chain(["yhat".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in preds {
        let line = match p {
            Some(p) => {
                let cells: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
                format!("{},{}", cells.join(","), bayes::argmax(p) + 1)
            }
            None => format!("{},", vec!["nan"; num_classes].join(",")),
        };
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_writes_datasets() {
        let text = "y,x1,x2\n1,0.5,1\n2,-3,2e-1\n";
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(1), &[-3.0, 0.2]);
        let mut out = Vec::new();
        write_dataset(&mut out, &ds).unwrap();
        assert_eq!(read_dataset(out.as_slice()).unwrap(), ds);
    }

    #[test]
    fn line_numbered_errors() {
        let ragged = "y,x1\n1,0.5\n2,1,3\n";
        match read_dataset(ragged.as_bytes()).unwrap_err() {
            FormatError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        let bad = "y,x1\n1,0.5\n2,1\n1,abc\n";
        match read_dataset(bad.as_bytes()).unwrap_err() {
            FormatError::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("abc"));
            }
            e => panic!("{e}"),
        }
        assert!(read_dataset("y,x1\n0,1\n".as_bytes()).is_err());
        assert!(read_dataset("label,x1\n1,1\n".as_bytes()).is_err());
        assert!(read_dataset("y,x1\n".as_bytes()).is_err());
    }

    #[test]
    fn model_text_roundtrip() {
        let g = GenerativeModel::new(
            Priors::from_counts(&[3, 4]).unwrap(),
            ClassDists::Multivariate(vec![
                MultivariateGaussian::from_slices(&[0.1, 0.2], &[1.0, 0.3, 0.3, 2.0 / 3.0]).unwrap(),
                MultivariateGaussian::from_slices(&[-1.0, 1e-300], &[0.7, -0.1, -0.1, 1.1]).unwrap(),
            ]),
        )
        .unwrap();
        let saved = SavedModel::Generative(g);
        let back = SavedModel::from_text(&saved.to_text()).unwrap();
        assert_eq!(back, saved);

        let l = LogitModel::from_weights(
            FeatureMap::new(FeatureKind::Quadratic, 1),
            3,
            &[vec![0.1, 1.0 / 3.0, -2.0], vec![7.0, 0.0, -1e-17]],
        )
        .unwrap();
        let saved = SavedModel::Logit(l);
        assert_eq!(SavedModel::from_text(&saved.to_text()).unwrap(), saved);
    }

    #[test]
    fn rejects_bad_model_files() {
        assert!(SavedModel::from_text("format_version: 2\nmodel: logit\n").is_err());
        assert!(SavedModel::from_text("format_version: 1\nmodel: logit\nfeatures: linear\nnum_classes: 2\ndim: 1\nweights.1: 1\n").is_err());
        assert!(SavedModel::from_text("nonsense").is_err());
    }

    #[test]
    fn prediction_table() {
        let mut out = Vec::new();
        write_predictions(&mut out, 2, &[Some(vec![0.5, 0.5]), None]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "p1,p2,yhat\n5.0000000000000000e-1,5.0000000000000000e-1,1\nnan,nan,\n"
        );
    }
}
