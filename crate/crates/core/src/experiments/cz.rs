use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{exponent, weight, ExperimentConfig};
use super::corpus::{equivalence_corpus, CorpusFunction};
use super::report::{num, Band, Report};
use crate::error::Result;
use crate::grid::{DyadicCube, GridFunction};
use crate::norms::luxemburg_norm;
use crate::operators::{
    apply_local_cz, m_loc, mean_oscillation, verify_kernel_conditions, LocalCzKernel, DEFAULT_LEVEL,
};

/// Number of `(f, Q)` pairs.
pub const PAIRS: usize = 50;

/// Largest accepted relative move of the empirical constant under `r → r+1`.
pub const STABILITY_LIMIT: f64 = 0.25;

const HEADER: [&str; 9] = ["part", "r", "pair", "id", "q_level", "q_index", "lhs", "rhs", "ratio"];

/// Random dyadic cubes of side `1, 1/2, 1/4, 1/8` inside `[-2, 2] ∩ [-L, L]`.
fn random_cubes(rng: &mut ChaCha8Rng, count: usize, half_width: u32) -> Vec<DyadicCube> {
    let span = half_width.min(2) as i64;
    (0..count)
        .map(|_| {
            let level = rng.gen_range(0..=3);
            let per = 1i64 << level;
            DyadicCube::new(level, rng.gen_range(-span * per..span * per))
        })
        .collect()
}

/// `Tf` and `(M^loc)^{2γ+3} f` for every corpus function at resolution `r`.
fn images(
    kernel: &LocalCzKernel,
    corpus: &[CorpusFunction],
    cfg: &ExperimentConfig,
    r: u32,
) -> Result<Vec<(GridFunction, GridFunction)>> {
    let grid = cfg.grid_at(r)?;
    let iterations = 2 * kernel.gamma() as usize + 3;
    corpus
        .par_iter()
        .map(|f| {
            let s = f.sample(grid)?;
            Ok((apply_local_cz(kernel, &s)?, m_loc(&s, iterations)))
        })
        .collect()
}

/// `ω_{1/8}(Tf;Q) / min_Q (M^loc)^{2γ+3} f`; `None` when both vanish.
fn oscillation_ratio(tf: &GridFunction, big: &GridFunction, q: DyadicCube) -> Result<Option<(f64, f64)>> {
    let omega = mean_oscillation(tf, q, DEFAULT_LEVEL)?;
    let cells = q.cells(big.grid())?;
    let floor = big.samples()[cells].iter().copied().fold(f64::INFINITY, f64::min);
    Ok((omega > 0.0 || floor > 0.0).then_some((omega, floor)))
}

/// Empirical constants of the oscillation estimate and of `‖Tf‖/‖f‖`.
///
/// The kernel is checked first; if it fails, the report carries the
/// verification result and nothing else.
pub fn run_cz_oscillation(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("cz", cfg, &HEADER);
    let sys = cfg.wavelets()?;
    let kernel = cfg.kernel(Some(sys.clone()))?;
    let verify = verify_kernel_conditions(&kernel, cfg.sample_budget, cfg.seed)?;
    report.diagnostic("kernel_conditions", &verify);
    report.check(
        "kernel-conditions",
        verify.passed(),
        format!(
            "D1 {} (claimed {}), D2 {} (claimed {}), support violations {}",
            num(verify.empirical_d1),
            num(verify.claimed_d1),
            num(verify.empirical_d2),
            num(verify.claimed_d2),
            verify.support_violations
        ),
    );
    if !verify.passed() {
        return Ok(report);
    }

    let grid = cfg.grid()?;
    let top = cfg.top_level(cfg.r);
    let corpus = equivalence_corpus(cfg.seed, cfg.corpus_size, grid, sys, cfg.base_level, top)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cubes = random_cubes(&mut rng, PAIRS, cfg.half_width);

    let mut constants = BTreeMap::new();
    for r in [cfg.r, cfg.r + 1] {
        let imgs = images(&kernel, &corpus, cfg, r)?;
        let mut ratios = Vec::new();
        for (i, q) in cubes.iter().enumerate() {
            let fi = i % corpus.len();
            let (tf, big) = &imgs[fi];
            let Some((omega, floor)) = oscillation_ratio(tf, big, *q)? else { continue };
            let ratio = omega / floor;
            ratios.push(ratio);
            report.table.push(vec![
                "oscillation".into(),
                r.to_string(),
                i.to_string(),
                corpus[fi].id.clone(),
                q.level.to_string(),
                q.index.to_string(),
                num(omega),
                num(floor),
                num(ratio),
            ]);
        }
        match Band::from_values(ratios) {
            Some(b) => {
                report.band(format!("oscillation:r{r}"), b);
                constants.insert(r, b.max);
            }
            None => report.check(format!("oscillation-finite:r{r}"), false, "non-finite ratio"),
        }
    }
    if let (Some(a), Some(b)) = (constants.get(&cfg.r), constants.get(&(cfg.r + 1))) {
        let change = (b - a).abs() / a;
        report.check("oscillation-finite", true, format!("constant {} at r = {}", num(*a), cfg.r));
        report.check(
            "oscillation-stable",
            change <= STABILITY_LIMIT,
            format!("constant {} -> {}, change {}", num(*a), num(*b), num(change)),
        );
    }

    let p_desc = cfg.exponent_or("step:2:3:0:1");
    let w_desc = cfg.weight_or("exp:1");
    let p = exponent(&p_desc, grid)?;
    let w = weight(&w_desc, grid)?;
    let samples: Vec<GridFunction> = corpus.iter().map(|f| f.sample(grid)).collect::<Result<_>>()?;
    let norms: Vec<Result<(f64, f64)>> = samples
        .par_iter()
        .map(|s| Ok((luxemburg_norm(&apply_local_cz(&kernel, s)?, &p, &w)?, luxemburg_norm(s, &p, &w)?)))
        .collect();
    let mut ratios = Vec::new();
    for (f, n) in corpus.iter().zip(norms) {
        let (tf, nf) = n?;
        ratios.push(tf / nf);
        report.table.push(vec![
            "norm".into(),
            cfg.r.to_string(),
            String::new(),
            f.id.clone(),
            String::new(),
            String::new(),
            num(tf),
            num(nf),
            num(tf / nf),
        ]);
    }
    let band = Band::from_values(ratios);
    report.check(
        format!("norm-band-finite:{p_desc}|{w_desc}"),
        band.is_some(),
        band.map_or("non-finite ratio".into(), |b| format!("[{}, {}]", num(b.min), num(b.max))),
    );
    if let Some(b) = band {
        report.band(format!("norm:{p_desc}|{w_desc}"), b);
    }
    Ok(report)
}
