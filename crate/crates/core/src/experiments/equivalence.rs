use rayon::prelude::*;
use serde::Serialize;

use super::config::{exponent, weight, ExperimentConfig};
use super::corpus::{equivalence_corpus, CorpusFunction};
use super::report::{num, opt, RatioReport, RatioRow, Report};
use crate::error::Result;
use crate::exponent::{VariableExponent, Weight};
use crate::grid::Grid;
use crate::norms::luxemburg_norm;
use crate::wavelets::{analyze, square_functions, WaveletSystem};

/// Largest accepted `C/c` for every catalog pair.
pub const SPREAD_LIMIT: f64 = 100.0;

/// Largest accepted `C/c` for `p ≡ 2`, `w ≡ 1`.
pub const PARSEVAL_SPREAD_LIMIT: f64 = 10.0;

/// Largest accepted endpoint move under `r → r+1`.
pub const STABILITY_LIMIT: f64 = 0.25;

/// Ratios `r₁ = (‖V‖ + ‖W₁‖)/‖f‖` and `r₂ = (‖V‖ + ‖W₂‖)/‖f‖` over a corpus at
/// one resolution.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRun {
    pub exponent: String,
    pub weight: String,
    pub resolution: u32,
    pub top_level: i32,
    pub first: RatioReport,
    pub second: RatioReport,
    /// `1 - Σ|coefficients|²/‖f‖₂²` per function: the energy above `j_max`
    /// plus quadrature error.
    pub parseval_defect: Vec<f64>,
}

struct Norms {
    f: f64,
    v: f64,
    w1: f64,
    w2: f64,
    defect: f64,
}

fn norms_of(
    f: &CorpusFunction,
    grid: Grid,
    sys: &WaveletSystem,
    base: i32,
    top: i32,
    p: &VariableExponent,
    w: &Weight,
) -> Result<Norms> {
    let s = f.sample(grid)?;
    let coeffs = analyze(&s, sys, base, top)?;
    let sq = square_functions(&coeffs, sys, grid)?;
    let l2 = s.l2_norm();
    Ok(Norms {
        f: luxemburg_norm(&s, p, w)?,
        v: luxemburg_norm(&sq.v, p, w)?,
        w1: luxemburg_norm(&sq.w1, p, w)?,
        w2: luxemburg_norm(&sq.w2, p, w)?,
        defect: 1.0 - coeffs.energy() / (l2 * l2),
    })
}

pub fn equivalence_run(
    cfg: &ExperimentConfig,
    corpus: &[CorpusFunction],
    sys: &WaveletSystem,
    exponent_desc: &str,
    weight_desc: &str,
    resolution: u32,
) -> Result<EquivalenceRun> {
    let grid = cfg.grid_at(resolution)?;
    let p = exponent(exponent_desc, grid)?;
    let w = weight(weight_desc, grid)?;
    let top = cfg.top_level(resolution);
    let results: Vec<Result<Norms>> =
        corpus.par_iter().map(|f| norms_of(f, grid, sys, cfg.base_level, top, &p, &w)).collect();
    let mut first = RatioReport { components: vec!["V".into(), "W1".into()], rows: Vec::new() };
    let mut second = RatioReport { components: vec!["V".into(), "W2".into()], rows: Vec::new() };
    let mut parseval_defect = Vec::new();
    for (f, res) in corpus.iter().zip(results) {
        match res {
            Ok(n) => {
                first.rows.push(RatioRow {
                    id: f.id.clone(),
                    norm: n.f,
                    components: vec![n.v, n.w1],
                    ratio: Some((n.v + n.w1) / n.f),
                    error: None,
                });
                second.rows.push(RatioRow {
                    id: f.id.clone(),
                    norm: n.f,
                    components: vec![n.v, n.w2],
                    ratio: Some((n.v + n.w2) / n.f),
                    error: None,
                });
                parseval_defect.push(n.defect);
            }
            Err(e) => {
                let failed = RatioRow {
                    id: f.id.clone(),
                    norm: f64::NAN,
                    components: vec![],
                    ratio: None,
                    error: Some(e.to_string()),
                };
                first.rows.push(failed.clone());
                second.rows.push(failed);
                parseval_defect.push(f64::NAN);
            }
        }
    }
    Ok(EquivalenceRun {
        exponent: exponent_desc.into(),
        weight: weight_desc.into(),
        resolution,
        top_level: top,
        first,
        second,
        parseval_defect,
    })
}

const HEADER: [&str; 15] = [
    "p",
    "w",
    "r",
    "j_max",
    "id",
    "kind",
    "norm_f",
    "norm_v",
    "norm_w1",
    "norm_w2",
    "r1",
    "r2",
    "parseval_defect",
    "error",
    "description",
];

fn push_rows(report: &mut Report, run: &EquivalenceRun, corpus: &[CorpusFunction]) {
    for (i, f) in corpus.iter().enumerate() {
        let (a, b) = (&run.first.rows[i], &run.second.rows[i]);
        let comp = |row: &RatioRow, j: usize| opt(row.components.get(j).copied());
        report.table.push(vec![
            run.exponent.clone(),
            run.weight.clone(),
            run.resolution.to_string(),
            run.top_level.to_string(),
            f.id.clone(),
            f.kind.to_string(),
            opt(a.error.is_none().then_some(a.norm)),
            comp(a, 0),
            comp(a, 1),
            comp(b, 1),
            opt(a.ratio),
            opt(b.ratio),
            opt(Some(run.parseval_defect[i]).filter(|v| v.is_finite())),
            a.error.clone().unwrap_or_default(),
            f.description.clone(),
        ]);
    }
}

/// Runs every requested `(p, w)` pair at `r` and `r + 1` over the seeded corpus.
///
/// Asserts finite ratios, `C/c ≤ 100` (`≤ 10` for `p ≡ 2`, `w ≡ 1`) and band
/// endpoints moving by at most 25% under refinement.
pub fn run_equivalence(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("equivalence", cfg, &HEADER);
    let sys = cfg.wavelets()?;
    let grid = cfg.grid()?;
    let top = cfg.top_level(cfg.r);
    let corpus = equivalence_corpus(cfg.seed, cfg.corpus_size, grid, sys.clone(), cfg.base_level, top)?;
    report.diagnostic("cascade_resolution", cfg.cascade_resolution());
    report.diagnostic("cascade_iterations", sys.cascade_iterations());
    report.diagnostic("cascade_change", sys.cascade_change());
    report.diagnostic(
        "corpus",
        corpus.iter().map(|f| (f.id.clone(), f.description.clone())).collect::<Vec<_>>(),
    );

    for (p, w) in cfg.catalog_pairs() {
        let pair = format!("{p}|{w}");
        let coarse = equivalence_run(cfg, &corpus, &sys, &p, &w, cfg.r)?;
        let fine = equivalence_run(cfg, &corpus, &sys, &p, &w, cfg.r + 1)?;
        push_rows(&mut report, &coarse, &corpus);
        push_rows(&mut report, &fine, &corpus);
        let max_defect = coarse.parseval_defect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.diagnostic(format!("max_parseval_defect:{pair}"), max_defect);

        let bands = [
            ("r1", coarse.first.band(), fine.first.band()),
            ("r2", coarse.second.band(), fine.second.band()),
        ];
        let finite = bands.iter().all(|(_, a, b)| a.is_some() && b.is_some());
        let failures = coarse.first.failures() + fine.first.failures();
        report.check(
            format!("finite:{pair}"),
            finite,
            format!("{failures} failed rows; all ratios finite: {finite}"),
        );
        let limit = if p == "const:2" && w == "one" { PARSEVAL_SPREAD_LIMIT } else { SPREAD_LIMIT };
        for (name, a, b) in bands {
            let (Some(a), Some(b)) = (a, b) else { continue };
            report.band(format!("{name}:{pair}:r{}", cfg.r), a);
            report.band(format!("{name}:{pair}:r{}", cfg.r + 1), b);
            report.check(
                format!("spread:{name}:{pair}"),
                a.spread() <= limit,
                format!("C/c = {} (limit {limit})", num(a.spread())),
            );
            let change = a.relative_change(&b);
            report.check(
                format!("stable:{name}:{pair}"),
                change <= STABILITY_LIMIT,
                format!("band [{}, {}] -> [{}, {}], change {}", a.min, a.max, b.min, b.max, num(change)),
            );
        }
    }
    Ok(report)
}
