use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{exponent, weight, ExperimentConfig};
use super::report::{num, Band, Report};
use crate::error::{Error, Result};
use crate::exponent::{VariableExponent, Weight, WeightSpec};
use crate::grid::{Grid, GridFunction};
use crate::norms::luxemburg_norm;
use crate::operators::{full_maximal, m_loc};
use crate::smooth::bump;

/// Largest accepted `max/min` of the `M^loc` ratio over translates.
pub const TRANSLATE_SPREAD_LIMIT: f64 = 3.0;

/// Largest accepted relative spread of the `M^loc` ratio over `L`.
pub const DOMAIN_STABILITY_LIMIT: f64 = 0.1;

/// Smallest accepted growth of the full-`M` ratio from the first to the last `L`.
pub const FULL_GROWTH_FACTOR: f64 = 2.0;

const MAXIMAL_HEADER: [&str; 8] = ["w", "L", "s", "norm_f", "norm_mloc", "norm_m", "ratio_loc", "ratio_full"];

struct Translate {
    half_width: u32,
    s: u32,
    f: GridFunction,
    local: GridFunction,
    full: GridFunction,
}

struct MaximalRow {
    weight: String,
    half_width: u32,
    s: u32,
    norms: [f64; 3],
}

impl MaximalRow {
    fn ratio_loc(&self) -> f64 {
        self.norms[1] / self.norms[0]
    }

    fn ratio_full(&self) -> f64 {
        self.norms[2] / self.norms[0]
    }
}

fn translates(grid: Grid, shifts: &[u32]) -> Vec<Translate> {
    shifts
        .iter()
        .map(|&s| {
            let f = GridFunction::indicator(grid, s as f64, s as f64 + 1.0);
            Translate { half_width: grid.half_width(), s, local: m_loc(&f, 1), full: full_maximal(&f), f }
        })
        .collect()
}

/// `‖M^loc f_s‖/‖f_s‖` against `‖M f_s‖/‖f_s‖` for `f_s = χ_[s, s+1]`.
///
/// Shifts `s = 0..=L-2` run at the configured `L`; `s = 0` is repeated at
/// `L + 2` and `L + 4`. Without `w` the weights `e^{|x|}`, `(1+|x|)^3` and
/// `1` are compared.
pub fn run_maximal_comparison(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("maximal", cfg, &MAXIMAL_HEADER);
    let p_desc = cfg.exponent_or("const:2");
    let weights: Vec<String> = match &cfg.w {
        Some(w) => vec![w.clone()],
        None => vec!["exp:1".into(), "pow:3".into(), "one".into()],
    };
    let base = cfg.half_width;
    let widths = [base, base + 2, base + 4];
    let mut rows = Vec::new();
    for &l in &widths {
        let grid = crate::grid::make_grid(l, cfg.r)?;
        let shifts: Vec<u32> = if l == base { (0..=base.saturating_sub(2)).collect() } else { vec![0] };
        let family = translates(grid, &shifts);
        let p = exponent(&p_desc, grid)?;
        for w_desc in &weights {
            let w = weight(w_desc, grid).map_err(|e| Error::Range(format!("L = {l}: {e}")))?;
            let norm = |g: &GridFunction| -> Result<f64> {
                luxemburg_norm(g, &p, &w).map_err(|e| Error::Range(format!("L = {l}: {e}")))
            };
            for t in &family {
                rows.push(MaximalRow {
                    weight: w_desc.clone(),
                    half_width: t.half_width,
                    s: t.s,
                    norms: [norm(&t.f)?, norm(&t.local)?, norm(&t.full)?],
                });
            }
        }
    }
    rows.sort_by(|a, b| (&a.weight, a.half_width, a.s).cmp(&(&b.weight, b.half_width, b.s)));
    for row in &rows {
        report.table.push(vec![
            row.weight.clone(),
            row.half_width.to_string(),
            row.s.to_string(),
            num(row.norms[0]),
            num(row.norms[1]),
            num(row.norms[2]),
            num(row.ratio_loc()),
            num(row.ratio_full()),
        ]);
    }

    for w_desc in &weights {
        let mine: Vec<&MaximalRow> = rows.iter().filter(|r| &r.weight == w_desc).collect();
        let over_s = Band::from_values(mine.iter().filter(|r| r.half_width == base).map(|r| r.ratio_loc()));
        let Some(over_s) = over_s else {
            report.check(format!("loc-bounded:{w_desc}"), false, "non-finite ratio");
            continue;
        };
        report.band(format!("ratio_loc:{w_desc}:L{base}"), over_s);
        report.check(
            format!("loc-bounded:{w_desc}"),
            over_s.spread() <= TRANSLATE_SPREAD_LIMIT,
            format!("max/min over s = {}", num(over_s.spread())),
        );
        let ordered = mine.iter().all(|r| r.ratio_loc() <= r.ratio_full() * (1.0 + 1e-9));
        report.check(format!("loc-below-full:{w_desc}"), ordered, "M^loc ratio <= M ratio on every row");

        if matches!(w_desc.parse::<WeightSpec>()?, WeightSpec::Exp { .. }) {
            let at_zero: Vec<&&MaximalRow> = mine.iter().filter(|r| r.s == 0).collect();
            let local = Band::from_values(at_zero.iter().map(|r| r.ratio_loc()));
            let full: Vec<f64> = at_zero.iter().map(|r| r.ratio_full()).collect();
            if let Some(local) = local {
                report.band(format!("ratio_loc:{w_desc}:s0"), local);
                report.check(
                    format!("loc-stable-in-L:{w_desc}"),
                    local.spread() - 1.0 <= DOMAIN_STABILITY_LIMIT,
                    format!("max/min over L {widths:?} = {}", num(local.spread())),
                );
            }
            let growth = full[full.len() - 1] / full[0];
            report.diagnostic(format!("full_growth:{w_desc}"), growth);
            report.check(
                format!("full-grows-in-L:{w_desc}"),
                full.windows(2).all(|w| w[1] > w[0]) && growth >= FULL_GROWTH_FACTOR,
                format!("full-M ratios over L {widths:?}: {full:?}, growth {}", num(growth)),
            );
        }
    }
    Ok(report)
}

/// Number of random families per `q`.
pub const TRIALS: usize = 20;

/// Largest family size.
pub const MAX_FAMILY: usize = 32;

const VECTOR_HEADER: [&str; 7] = ["trial", "kind", "q", "m", "norm_lhs", "norm_rhs", "ratio"];

/// `(Σ v_j^q)^{1/q}` pointwise; `q = None` is the supremum.
fn combine(parts: &[GridFunction], q: Option<f64>) -> Result<GridFunction> {
    let grid = parts[0].grid();
    let n = grid.len();
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let vals = parts.iter().map(|g| g.samples()[i].abs());
            match q {
                Some(q) => vals.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q),
                None => vals.fold(0.0, f64::max),
            }
        })
        .collect();
    GridFunction::new(grid, samples)
}

fn family_ratio(
    family: &[GridFunction],
    maximal: &[GridFunction],
    q: Option<f64>,
    p: &VariableExponent,
    w: &Weight,
) -> Result<(f64, f64)> {
    let lhs = luxemburg_norm(&combine(maximal, q)?, p, w)?;
    let rhs = luxemburg_norm(&combine(family, q)?, p, w)?;
    Ok((lhs, rhs))
}

fn random_bump(rng: &mut ChaCha8Rng, span: f64) -> (f64, f64, f64) {
    (rng.gen_range(-span..span), rng.gen_range(0.1..0.5), rng.gen_range(0.5..2.0))
}

/// Vector-valued `M^loc` ratio `‖(Σ (M^loc f_j)^q)^{1/q}‖ / ‖(Σ |f_j|^q)^{1/q}‖`
/// for `q ∈ {2, ∞}` over random families of translated bumps, plus the
/// one-member, all-equal and disjoint controls.
pub fn run_vector_valued(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new("vector-valued", cfg, &VECTOR_HEADER);
    let grid = cfg.grid()?;
    let p = exponent(&cfg.exponent_or("step:2:3:0:1"), grid)?;
    let w = weight(&cfg.weight_or("exp:1"), grid)?;
    let span = 0.5 * cfg.half_width as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sample = |(c, s, a): (f64, f64, f64)| GridFunction::from_fn(grid, |x| a * bump((x - c) / s));

    let mut families: Vec<(String, Vec<GridFunction>)> = Vec::new();
    for trial in 0..TRIALS {
        let m = rng.gen_range(1..=8usize.min(MAX_FAMILY));
        let members = (0..m).map(|_| sample(random_bump(&mut rng, span))).collect::<Result<_>>()?;
        families.push((format!("random-{trial:02}"), members));
    }
    let single = sample(random_bump(&mut rng, span))?;
    families.push(("single".into(), vec![single.clone()]));
    families.push(("equal".into(), vec![single.clone(); 4]));
    let disjoint = (0..4)
        .map(|j| sample((-span + (j as f64 + 0.5) * span / 2.0, 0.2, 1.0 + j as f64)))
        .collect::<Result<_>>()?;
    families.push(("disjoint".into(), disjoint));

    let qs = [("2", Some(2.0)), ("inf", None)];
    let results: Vec<Result<Vec<(f64, f64)>>> = families
        .par_iter()
        .map(|(_, fam)| {
            let maximal: Vec<GridFunction> = fam.iter().map(|f| m_loc(f, 1)).collect();
            qs.iter().map(|(_, q)| family_ratio(fam, &maximal, *q, &p, &w)).collect()
        })
        .collect();
    let scalar = luxemburg_norm(&m_loc(&single, 1), &p, &w)? / luxemburg_norm(&single, &p, &w)?;
    report.diagnostic("scalar_ratio", scalar);

    let mut per_q: Vec<Vec<f64>> = vec![Vec::new(); qs.len()];
    let mut controls = Vec::new();
    for ((name, fam), res) in families.iter().zip(results) {
        let pairs = res?;
        for (qi, ((qname, _), (lhs, rhs))) in qs.iter().zip(pairs).enumerate() {
            let ratio = lhs / rhs;
            report.table.push(vec![
                name.clone(),
                name.split('-').next().unwrap_or("").to_string(),
                qname.to_string(),
                fam.len().to_string(),
                num(lhs),
                num(rhs),
                num(ratio),
            ]);
            if name.starts_with("random") {
                per_q[qi].push(ratio);
            } else {
                controls.push((name.clone(), *qname, ratio));
            }
        }
    }
    for ((qname, _), ratios) in qs.iter().zip(&per_q) {
        match Band::from_values(ratios.iter().copied()) {
            Some(b) => {
                report.band(format!("ratio:q{qname}"), b);
                report.check(format!("finite:q{qname}"), true, format!("max ratio {}", num(b.max)));
            }
            None => report.check(format!("finite:q{qname}"), false, "non-finite ratio"),
        }
    }
    for (name, qname, ratio) in controls {
        let rel = (ratio - scalar).abs() / scalar;
        match name.as_str() {
            "single" => report.check(
                format!("single-member:q{qname}"),
                rel <= 1e-12,
                format!("ratio {} vs scalar {}", num(ratio), num(scalar)),
            ),
            "equal" => report.check(
                format!("equal-family:q{qname}"),
                rel <= 1e-8,
                format!("ratio {} vs scalar {}", num(ratio), num(scalar)),
            ),
            _ => {
                report.check(format!("disjoint:q{qname}"), ratio.is_finite(), format!("ratio {}", num(ratio)))
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn combine_examples() {
        let g = make_grid(1, 2).unwrap();
        let a = GridFunction::constant(g, 3.0);
        let b = GridFunction::constant(g, -4.0);
        let two = combine(&[a.clone(), b.clone()], Some(2.0)).unwrap();
        assert!(two.samples().iter().all(|&v| (v - 5.0).abs() < 1e-14));
        let sup = combine(&[a, b], None).unwrap();
        assert!(sup.samples().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn unit_weight_translates_are_equivalent() {
        let cfg = ExperimentConfig { r: 7, w: Some("one".into()), ..Default::default() };
        let rep = run_maximal_comparison(&cfg).unwrap();
        let rows: Vec<&Vec<String>> = rep.table.rows.iter().filter(|r| r[1] == "4").collect();
        assert_eq!(rows.len(), 3);
        // interior translates are congruent under w = 1
        let ratio = |i: usize| rows[i][6].parse::<f64>().unwrap();
        assert!((ratio(1) - ratio(2)).abs() < 1e-10);
        assert!(rep.assertion("loc-bounded:one").unwrap().passed);
        assert!(rep.assertion("loc-below-full:one").unwrap().passed);
    }
}
