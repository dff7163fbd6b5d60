//! Experiment harness: configuration, the seeded function corpora, the
//! individual experiments and their CSV/JSON reports.

mod config;
mod corpus;
mod cz;
mod equivalence;
mod maximal;
mod modular;
mod report;
mod tools;

use std::path::Path;

pub use config::{ExperimentConfig, EXPONENT_CATALOG, WEIGHT_CATALOG};
pub use corpus::{equivalence_corpus, piecewise_smooth_corpus, random_smooth, CorpusFunction, CorpusKind};
pub use cz::run_cz_oscillation;
pub use equivalence::{equivalence_run, run_equivalence, EquivalenceRun};
pub use maximal::{run_maximal_comparison, run_vector_valued};
pub use modular::{modular_ratios, run_modular_failure, ModularCurve, SCALES};
pub use report::{Assertion, Band, RatioReport, RatioRow, Report, Table};
pub use tools::{run_aploc, run_norm};

use crate::error::Result;

/// The CLI experiments, in suite order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Equivalence,
    ModularFailure,
    Maximal,
    VectorValued,
    Cz,
    Aploc,
    Norm,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Equivalence,
        Experiment::ModularFailure,
        Experiment::Maximal,
        Experiment::VectorValued,
        Experiment::Cz,
        Experiment::Aploc,
        Experiment::Norm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Equivalence => "equivalence",
            Experiment::ModularFailure => "modular-failure",
            Experiment::Maximal => "maximal",
            Experiment::VectorValued => "vector-valued",
            Experiment::Cz => "cz",
            Experiment::Aploc => "aploc",
            Experiment::Norm => "norm",
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<Report> {
        cfg.validate()?;
        match self {
            Experiment::Equivalence => run_equivalence(cfg),
            Experiment::ModularFailure => run_modular_failure(cfg),
            Experiment::Maximal => run_maximal_comparison(cfg),
            Experiment::VectorValued => run_vector_valued(cfg),
            Experiment::Cz => run_cz_oscillation(cfg),
            Experiment::Aploc => run_aploc(cfg),
            Experiment::Norm => run_norm(cfg),
        }
    }
}

/// Runs every experiment and writes its CSV and JSON summary into `dir`.
pub fn run_suite(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<Report>> {
    Experiment::ALL
        .iter()
        .map(|e| {
            let report = e.run(cfg)?;
            report.write(dir)?;
            Ok(report)
        })
        .collect()
}
