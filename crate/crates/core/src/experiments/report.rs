use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

/// A named pass/fail check with a human-readable detail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Empirical band `[min, max]` of a set of ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Band {
    /// Band of the values, or `None` when there are none or one is not finite.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Band> {
        let mut band = Band { min: f64::INFINITY, max: f64::NEG_INFINITY, count: 0 };
        for v in values {
            if !v.is_finite() {
                return None;
            }
            band.min = band.min.min(v);
            band.max = band.max.max(v);
            band.count += 1;
        }
        (band.count > 0).then_some(band)
    }

    /// `C/c`.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    /// Largest relative move of either endpoint.
    pub fn relative_change(&self, other: &Band) -> f64 {
        let rel = |a: f64, b: f64| (b - a).abs() / a.abs();
        rel(self.min, other.min).max(rel(self.max, other.max))
    }
}

/// One corpus function in a ratio experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub id: String,
    pub norm: f64,
    pub components: Vec<f64>,
    /// `Σ components / norm`; `None` when the row failed.
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

/// Per-function ratios `Σ ‖component‖ / ‖f‖` and their band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub components: Vec<String>,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    /// Band over the successful rows; `None` if any ratio is missing or not finite.
    pub fn band(&self) -> Option<Band> {
        if self.rows.iter().any(|r| r.ratio.is_none()) {
            return None;
        }
        Band::from_values(self.rows.iter().filter_map(|r| r.ratio))
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// CSV contents: a header and rows of already formatted fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = csv::Writer::from_path(path)?;
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting, so CSV rows are reproducible bit for bit.
pub(crate) fn num(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Result of one experiment: the CSV table plus the JSON summary.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub bands: BTreeMap<String, Band>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    #[serde(skip)]
    pub table: Table,
}

impl Report {
    pub fn new(experiment: &str, config: &ExperimentConfig, header: &[&str]) -> Self {
        Report {
            experiment: experiment.into(),
            config: config.clone(),
            bands: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            assertions: Vec::new(),
            passed: true,
            table: Table::new(header),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    pub fn band(&mut self, name: impl Into<String>, band: Band) {
        self.bands.insert(name.into(), band);
    }

    pub fn diagnostic(&mut self, name: impl Into<String>, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.diagnostics.insert(name.into(), value);
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.experiment))
    }

    pub fn json_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", self.experiment))
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.table.write_csv(&self.csv_path(dir))?;
        fs::write(self.json_path(dir), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_basics() {
        let b = Band::from_values([2.0, 0.5, 1.0]).unwrap();
        assert_eq!((b.min, b.max, b.count), (0.5, 2.0, 3));
        assert_eq!(b.spread(), 4.0);
        let c = Band { min: 0.6, max: 2.0, count: 3 };
        assert!((b.relative_change(&c) - 0.2).abs() < 1e-12);
        assert!(Band::from_values([1.0, f64::NAN]).is_none());
        assert!(Band::from_values(std::iter::empty()).is_none());
    }

    #[test]
    fn ratio_report_band_needs_every_row() {
        let row = |ratio| RatioRow { id: "f".into(), norm: 1.0, components: vec![], ratio, error: None };
        let mut rep = RatioReport { components: vec![], rows: vec![row(Some(1.0)), row(Some(3.0))] };
        assert_eq!(rep.band().unwrap().spread(), 3.0);
        rep.rows.push(RatioRow { error: Some("bracket".into()), ..row(None) });
        assert!(rep.band().is_none());
        assert_eq!(rep.failures(), 1);
    }

    #[test]
    fn writes_csv_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = Report::new("demo", &ExperimentConfig::default(), &["id", "value"]);
        rep.table.push(vec!["a".into(), num(0.1)]);
        rep.check("ok", true, "fine");
        rep.check("bad", false, "broken");
        rep.band("r", Band { min: 1.0, max: 2.0, count: 2 });
        rep.write(dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("demo.csv")).unwrap();
        assert_eq!(csv, "id,value\na,0.1\n");
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("demo.json")).unwrap()).unwrap();
        assert_eq!(json["passed"], false);
        assert_eq!(json["config"]["L"], 4);
        assert_eq!(json["bands"]["r"]["max"], 2.0);
        assert!(!rep.passed);
        assert!(rep.assertion("ok").unwrap().passed);
    }
}
