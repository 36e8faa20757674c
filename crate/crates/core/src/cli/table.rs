use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::training::EvalCurve;
use crate::{write_atomic, Error, Result};

const HEADER: &str = "variant,scenario,t,metric,value";
pub const MEDIAN: &str = "median_nmse_db";
pub const MEAN: &str = "mean_nmse_db";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub variant: String,
    pub scenario: String,
    pub t: usize,
    pub metric: String,
    pub value: f64,
}

/// Long-format results, one row per (variant, scenario, t, metric).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn clean(field: &str) -> String {
    field.replace([',', '\n', '\r'], ";")
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, variant: &str, scenario: &str, t: usize, metric: &str, value: f64) {
        self.rows.push(ResultRow { variant: clean(variant), scenario: clean(scenario), t, metric: metric.into(), value });
    }

    /// Mean and median curves, with the spectral initialization at `t = 0`.
    pub fn push_curve(&mut self, variant: &str, scenario: &str, curve: &EvalCurve) {
        self.push(variant, scenario, 0, MEDIAN, curve.init_median_db);
        for (i, (median, mean)) in curve.median_db.iter().zip(&curve.mean_db).enumerate() {
            self.push(variant, scenario, i + 1, MEDIAN, *median);
            self.push(variant, scenario, i + 1, MEAN, *mean);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.variant, r.scenario, r.t, r.metric, r.value).expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == HEADER => {}
            _ => return Err(Error::Format(format!("result table must start with the header {HEADER:?}"))),
        }
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("malformed table row {}: {line:?}", k + 2));
            if f.len() != 5 {
                return Err(bad());
            }
            let t = f[2].trim().parse().map_err(|_| bad())?;
            let value = f[4].trim().parse().map_err(|_| bad())?;
            if !seen.insert((f[0].to_string(), f[1].to_string(), t, f[3].to_string())) {
                return Err(Error::Format(format!("duplicate table row {}: {line:?}", k + 2)));
            }
            rows.push(ResultRow { variant: f[0].into(), scenario: f[1].into(), t, metric: f[3].into(), value });
        }
        Ok(Self { rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    pub fn value(&self, variant: &str, scenario: &str, t: usize, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.scenario == scenario && r.t == t && r.metric == metric)
            .map(|r| r.value)
    }
}
