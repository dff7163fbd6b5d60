use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{ExponentSpec, VariableExponent, Weight, WeightSpec};
use crate::grid::{make_grid, Grid};
use crate::operators::{LocalCzKernel, MIN_SAMPLE_BUDGET};
use crate::wavelets::{build_daubechies, WaveletSystem};

/// Exponents of the equivalence catalog.
pub const EXPONENT_CATALOG: [&str; 2] = ["const:2", "step:2:3:0:1"];

/// Weights of the equivalence catalog: `1`, `e^{|x|}`, `(1+|x|)^3`.
pub const WEIGHT_CATALOG: [&str; 3] = ["one", "exp:1", "pow:3"];

/// Parameters shared by all experiments.
///
/// `p` and `w` are optional: each experiment falls back to its own catalog
/// when they are absent. `j_max` defaults to `max(J, r - 5)` and `r_c` to
/// `max(12, r + 1 - J)`, enough for the `r → r+1` refinement runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L")]
    pub half_width: u32,
    pub r: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "J")]
    pub base_level: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_c: Option<u32>,
    pub seed: u64,
    pub corpus_size: usize,
    pub kernel: String,
    pub j_star: i32,
    pub sample_budget: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            half_width: 4,
            r: 10,
            p: None,
            w: None,
            order: 3,
            base_level: 0,
            j_max: None,
            r_c: None,
            seed: 42,
            corpus_size: 20,
            kernel: "hilbert-cut:1".into(),
            j_star: 0,
            sample_budget: 20_000,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.grid_at(self.r + 1)?;
        if let Some(p) = &self.p {
            p.parse::<ExponentSpec>()?;
        }
        if let Some(w) = &self.w {
            w.parse::<WeightSpec>()?;
        }
        if !(1..=4).contains(&self.order) {
            return Err(Error::Config(format!("wavelet order N = {} not in 1..=4", self.order)));
        }
        if let Some(j) = self.j_max {
            if j < self.base_level {
                return Err(Error::Config(format!("j_max = {j} below J = {}", self.base_level)));
            }
        }
        if self.corpus_size == 0 {
            return Err(Error::Config("corpus size must be positive".into()));
        }
        if self.sample_budget < MIN_SAMPLE_BUDGET {
            return Err(Error::Config(format!(
                "sample budget {} below {MIN_SAMPLE_BUDGET}",
                self.sample_budget
            )));
        }
        match self.kernel.strip_prefix("wavelet-proj:") {
            Some(level) => {
                level
                    .parse::<i32>()
                    .map_err(|_| Error::Config(format!("bad kernel parameter in '{}'", self.kernel)))?;
            }
            None => {
                LocalCzKernel::parse(&self.kernel, None)?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_at(self.r)
    }

    pub fn grid_at(&self, r: u32) -> Result<Grid> {
        make_grid(self.half_width, r)
    }

    /// Finest detail level used at resolution `r`.
    pub fn top_level(&self, r: u32) -> i32 {
        self.j_max.unwrap_or((r as i32 - 5).max(self.base_level))
    }

    pub fn cascade_resolution(&self) -> u32 {
        self.r_c.unwrap_or_else(|| 12.max((self.r as i32 + 1 - self.base_level).max(0) as u32))
    }

    pub fn wavelets(&self) -> Result<Arc<WaveletSystem>> {
        Ok(Arc::new(build_daubechies(self.order, self.cascade_resolution())?))
    }

    pub fn kernel(&self, system: Option<Arc<WaveletSystem>>) -> Result<LocalCzKernel> {
        LocalCzKernel::parse(&self.kernel, system)
    }

    /// `p` from the config, or `default` when unset.
    pub fn exponent_or(&self, default: &str) -> String {
        self.p.clone().unwrap_or_else(|| default.to_string())
    }

    pub fn weight_or(&self, default: &str) -> String {
        self.w.clone().unwrap_or_else(|| default.to_string())
    }

    /// `(p, w)` pairs to run: the configured pair, or the full catalog product.
    pub fn catalog_pairs(&self) -> Vec<(String, String)> {
        let ps: Vec<String> = match &self.p {
            Some(p) => vec![p.clone()],
            None => EXPONENT_CATALOG.iter().map(|s| s.to_string()).collect(),
        };
        let ws: Vec<String> = match &self.w {
            Some(w) => vec![w.clone()],
            None => WEIGHT_CATALOG.iter().map(|s| s.to_string()).collect(),
        };
        ps.iter().flat_map(|p| ws.iter().map(move |w| (p.clone(), w.clone()))).collect()
    }
}

/// Samples a catalog exponent on `grid`.
pub(crate) fn exponent(desc: &str, grid: Grid) -> Result<VariableExponent> {
    VariableExponent::from_spec(&desc.parse()?, grid)
}

/// Samples a catalog weight on `grid`.
pub(crate) fn weight(desc: &str, grid: Grid) -> Result<Weight> {
    Weight::from_spec(&desc.parse()?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.top_level(10), 5);
        assert_eq!(cfg.cascade_resolution(), 12);
        assert_eq!(cfg.catalog_pairs().len(), 6);
    }

    #[test]
    fn rejects_bad_fields() {
        let bad = [
            ExperimentConfig { p: Some("cubic:2".into()), ..Default::default() },
            ExperimentConfig { w: Some("exp".into()), ..Default::default() },
            ExperimentConfig { order: 7, ..Default::default() },
            ExperimentConfig { j_max: Some(-1), ..Default::default() },
            ExperimentConfig { corpus_size: 0, ..Default::default() },
            ExperimentConfig { kernel: "sinc:1".into(), ..Default::default() },
            ExperimentConfig { half_width: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn toml_and_json_round_trip() {
        let cfg = ExperimentConfig { p: Some("step:2:3:0:1".into()), j_max: Some(4), ..Default::default() };
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("L = 4"));
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
        let partial: ExperimentConfig = toml::from_str("r = 8\nseed = 7").unwrap();
        assert_eq!((partial.r, partial.seed, partial.half_width), (8, 7, 4));
        assert!(toml::from_str::<ExperimentConfig>("resolution = 8").is_err());
    }
}
