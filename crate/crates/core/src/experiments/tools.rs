use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{exponent, weight, ExperimentConfig};
use super::corpus::random_smooth;
use super::report::{num, Band, Report};
use crate::error::Result;
use crate::exponent::{a_loc_constant, conjugate_exponent, dual_weight, log_holder_constants, CubeFamily};
use crate::norms::{luxemburg_norm, modular, pairing};

const APLOC_HEADER: [&str; 7] = ["family", "L", "value", "left", "right", "intervals", "lh"];

/// `[w]_{A^loc}` over the aligned family and its subfamily of sides `≤ 1/4`,
/// at `L` and `L + 2`, with the log-Hölder constants of `p`.
pub fn run_aploc(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("aploc", cfg, &APLOC_HEADER);
    let p_desc = cfg.exponent_or("const:2");
    let w_desc = cfg.weight_or("exp:1");
    let families = [
        ("aligned", CubeFamily::default()),
        ("aligned-quarter", CubeFamily::Aligned { min_level: 2, max_level: None, stride: 1 }),
    ];
    for l in [cfg.half_width, cfg.half_width + 2] {
        let grid = crate::grid::make_grid(l, cfg.r)?;
        let p = exponent(&p_desc, grid)?;
        let w = weight(&w_desc, grid)?;
        let lh = log_holder_constants(&p)?;
        report.diagnostic(format!("log_holder:L{l}"), lh);
        let mut values = Vec::new();
        for (name, family) in &families {
            let est = a_loc_constant(&p, &w, family)?;
            report.table.push(vec![
                name.to_string(),
                l.to_string(),
                num(est.value),
                num(est.argmax.0),
                num(est.argmax.1),
                est.intervals_scanned.to_string(),
                format!("{}/{}", num(lh.c0), num(lh.c_inf)),
            ]);
            values.push(est.value);
        }
        report.check(
            format!("finite:L{l}"),
            values.iter().all(|v| v.is_finite() && *v > 0.0),
            format!("values {values:?}"),
        );
        report.check(
            format!("monotone-family:L{l}"),
            values[1] <= values[0],
            format!("sides <= 1/4: {}, all sides: {}", num(values[1]), num(values[0])),
        );
        if let Some(b) = Band::from_values([values[0]]) {
            report.band(format!("a_loc:L{l}"), b);
        }
    }
    Ok(report)
}

/// Functions per check and `(p, w)` pair.
pub const NORM_SAMPLES: usize = 10;

/// Largest accepted `|modular(f/‖f‖) - 1|`.
pub const UNIT_SPHERE_TOLERANCE: f64 = 1e-8;

/// Hölder constant of the Luxemburg norm pair.
pub const HOLDER_CONSTANT: f64 = 2.0;

const NORM_HEADER: [&str; 7] = ["p", "w", "check", "id", "norm_f", "norm_g", "value"];

/// Unit-sphere and Hölder checks on seeded random functions for every
/// requested `(p, w)` pair.
pub fn run_norm(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("norm", cfg, &NORM_HEADER);
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (p_desc, w_desc) in cfg.catalog_pairs() {
        let pair = format!("{p_desc}|{w_desc}");
        let p = exponent(&p_desc, grid)?;
        let w = weight(&w_desc, grid)?;
        let conj = conjugate_exponent(&p)?;
        let sigma = dual_weight(&p, &w)?;
        let fs: Vec<_> = (0..2 * NORM_SAMPLES)
            .map(|i| random_smooth(&mut rng, format!("h{i:02}"), cfg.half_width))
            .collect();
        let samples = fs.iter().map(|f| f.sample(grid)).collect::<Result<Vec<_>>>()?;

        let sphere: Vec<Result<(f64, f64)>> = samples[..NORM_SAMPLES]
            .par_iter()
            .map(|s| {
                let n = luxemburg_norm(s, &p, &w)?;
                Ok((n, modular(&s.scale(1.0 / n)?, &p, &w)?))
            })
            .collect();
        let mut worst = 0.0f64;
        for (f, res) in fs.iter().zip(sphere) {
            let (n, m) = res?;
            worst = worst.max((m - 1.0).abs());
            report.table.push(vec![
                p_desc.clone(),
                w_desc.clone(),
                "unit-sphere".into(),
                f.id.clone(),
                num(n),
                String::new(),
                num(m),
            ]);
        }
        report.check(
            format!("unit-sphere:{pair}"),
            worst <= UNIT_SPHERE_TOLERANCE,
            format!("max |modular(f/||f||) - 1| = {}", num(worst)),
        );

        let holder: Vec<Result<(f64, f64, f64)>> = (0..NORM_SAMPLES)
            .into_par_iter()
            .map(|i| {
                let (f, g) = (&samples[NORM_SAMPLES + i], &samples[i]);
                let nf = luxemburg_norm(f, &p, &w)?;
                let ng = luxemburg_norm(g, &conj, &sigma)?;
                Ok((nf, ng, pairing(f, g)?.abs() / (nf * ng)))
            })
            .collect();
        let mut largest = 0.0f64;
        for (i, res) in holder.into_iter().enumerate() {
            let (nf, ng, q) = res?;
            largest = largest.max(q);
            report.table.push(vec![
                p_desc.clone(),
                w_desc.clone(),
                "holder".into(),
                format!("{}*{}", fs[NORM_SAMPLES + i].id, fs[i].id),
                num(nf),
                num(ng),
                num(q),
            ]);
        }
        report.check(
            format!("holder:{pair}"),
            largest <= HOLDER_CONSTANT,
            format!("max quotient {}", num(largest)),
        );
    }
    Ok(report)
}
