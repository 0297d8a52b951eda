use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Column order of every result CSV.
pub const COLUMNS: [&str; 13] =
    ["experiment", "dataset", "generator", "method", "delta", "attack", "n", "k", "n2", "metric", "value", "std_err", "count"];

/// One metric of one grid cell. Inapplicable parameters are written as `-`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub dataset: Option<String>,
    pub generator: Option<String>,
    pub method: Option<String>,
    pub delta: Option<f64>,
    pub attack: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub n2: Option<usize>,
    pub metric: String,
    pub value: f64,
    pub std_err: f64,
    pub count: usize,
}

impl ResultRow {
    pub fn new(experiment: impl Into<String>, metric: impl Into<String>, value: f64, std_err: f64, count: usize) -> Self {
        Self {
            experiment: experiment.into(),
            dataset: None,
            generator: None,
            method: None,
            delta: None,
            attack: None,
            n: None,
            k: None,
            n2: None,
            metric: metric.into(),
            value,
            std_err,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() || !(self.std_err >= 0.0) || !self.std_err.is_finite() {
            return Err(Error::Param(format!("row {}/{} has value {} and std_err {}", self.experiment, self.metric, self.value, self.std_err)));
        }
        Ok(())
    }

    fn fields(&self) -> [String; 13] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or("-".into(), |v| v.to_string())
        }
        [
            self.experiment.clone(),
            opt(&self.dataset),
            opt(&self.generator),
            opt(&self.method),
            opt(&self.delta),
            opt(&self.attack),
            opt(&self.n),
            opt(&self.k),
            opt(&self.n2),
            self.metric.clone(),
            self.value.to_string(),
            self.std_err.to_string(),
            self.count.to_string(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != COLUMNS.len() {
            return Err(Error::Dimension { expected: COLUMNS.len(), got: r.len() });
        }
        fn text(s: &str) -> Option<String> {
            (s != "-").then(|| s.to_string())
        }
        fn num<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
            if s == "-" {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Parse(format!("bad number {s:?}")))
        }
        let req = |s: &str| num::<f64>(s)?.ok_or_else(|| Error::Parse("missing value".into()));
        Ok(Self {
            experiment: r[0].to_string(),
            dataset: text(&r[1]),
            generator: text(&r[2]),
            method: text(&r[3]),
            delta: num(&r[4])?,
            attack: text(&r[5]),
            n: num(&r[6])?,
            k: num(&r[7])?,
            n2: num(&r[8])?,
            metric: r[9].to_string(),
            value: req(&r[10])?,
            std_err: req(&r[11])?,
            count: num(&r[12])?.ok_or_else(|| Error::Parse("missing count".into()))?,
        })
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        r.validate()?;
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if !r.headers()?.iter().eq(COLUMNS) {
        return Err(Error::Parse("unexpected result header".into()));
    }
    r.records().map(|rec| ResultRow::from_record(&rec?)).collect()
}

/// Proportion and its binomial standard error.
pub fn rate(hits: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (0.0, 0.0);
    }
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
