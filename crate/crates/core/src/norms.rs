//! The modular `∫|f|^{p(x)} w dx`, the Luxemburg norm of `L^{p(·)}(w)` and the
//! `L²` pairing.
//!
//! The norm is the unique `λ` with `∫(|f|/λ)^{p(x)} w dx = 1`. The left side is
//! strictly decreasing in `λ`, so it is located by geometric bracketing from
//! `λ = 1` followed by plain bisection.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::exponent::{VariableExponent, Weight};
use crate::grid::{same_grid, GridFunction};

/// Absolute tolerance on `λ`; the relative tolerance below applies when tighter.
pub const NORM_ABS_TOLERANCE: f64 = 1e-10;
const NORM_REL_TOLERANCE: f64 = 1e-13;
const MAX_BRACKET_STEPS: usize = 200;

/// `∫|f(x)|^{p(x)} w(x) dx` by midpoint quadrature.
pub fn modular(f: &GridFunction, p: &VariableExponent, w: &Weight) -> Result<f64> {
    check_grids(f, p, w)?;
    let h = f.grid().step();
    let total: f64 = f
        .samples()
        .iter()
        .zip(p.samples())
        .zip(w.samples())
        .map(|((&v, &e), &wt)| if v == 0.0 { 0.0 } else { v.abs().powf(e) * wt })
        .sum();
    let total = h * total;
    if !total.is_finite() {
        return Err(Error::Range(format!(
            "modular overflows (max |f| = {}, p+ = {})",
            f.max_abs(),
            p.p_plus()
        )));
    }
    Ok(total)
}

/// Luxemburg norm `inf{λ > 0 : ∫(|f|/λ)^{p(x)} w dx ≤ 1}`.
pub fn luxemburg_norm(f: &GridFunction, p: &VariableExponent, w: &Weight) -> Result<f64> {
    check_grids(f, p, w)?;
    let terms: Vec<Term> = f
        .samples()
        .iter()
        .zip(p.samples())
        .zip(w.samples())
        .filter(|((v, _), _)| **v != 0.0)
        .map(|((&v, &e), &wt)| Term { log_coef: e * v.abs().ln() + wt.ln(), exponent: e })
        .collect();
    if terms.is_empty() {
        return Ok(0.0);
    }
    solve_unit_level(f.grid().step(), &terms)
}

/// Luxemburg norm of the indicator of a run of cells.
///
/// Uses the closed form `(∫_Q w)^{1/p}` when `p` is constant on the cells.
pub fn indicator_norm(p: &VariableExponent, w: &Weight, cells: Range<usize>) -> Result<f64> {
    same_grid(p.grid(), w.grid())?;
    if cells.is_empty() {
        return Ok(0.0);
    }
    let h = p.grid().step();
    let ps = &p.samples()[cells.clone()];
    let ws = &w.samples()[cells];
    let first = ps[0];
    if ps.iter().all(|&e| e == first) {
        let mass = h * ws.iter().sum::<f64>();
        let norm = mass.powf(1.0 / first);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Range(format!("indicator norm out of range (mass {mass})")));
        }
        return Ok(norm);
    }
    let terms: Vec<Term> =
        ps.iter().zip(ws).map(|(&e, &wt)| Term { log_coef: wt.ln(), exponent: e }).collect();
    solve_unit_level(h, &terms)
}

/// `⟨f, g⟩ = ∫ f g dx`.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.ensure_same_grid(g)?;
    Ok(f.grid().step() * f.samples().iter().zip(g.samples()).map(|(a, b)| a * b).sum::<f64>())
}

/// Hölder quotient `|⟨f,g⟩| / (‖f‖_{L^{p(·)}(w)} ‖g‖_{L^{p'(·)}(σ)})`.
///
/// Returns 0 when either norm vanishes.
pub fn holder_quotient(f: &GridFunction, g: &GridFunction, p: &VariableExponent, w: &Weight) -> Result<f64> {
    let conj = crate::exponent::conjugate_exponent(p)?;
    let sigma = crate::exponent::dual_weight(p, w)?;
    let nf = luxemburg_norm(f, p, w)?;
    let ng = luxemburg_norm(g, &conj, &sigma)?;
    if nf == 0.0 || ng == 0.0 {
        return Ok(0.0);
    }
    Ok(pairing(f, g)?.abs() / (nf * ng))
}

fn check_grids(f: &GridFunction, p: &VariableExponent, w: &Weight) -> Result<()> {
    same_grid(f.grid(), p.grid())?;
    same_grid(f.grid(), w.grid())
}

/// One cell's contribution `exp(log_coef - exponent·ln λ)` to the modular of `f/λ`.
struct Term {
    log_coef: f64,
    exponent: f64,
}

fn scaled_modular(h: f64, terms: &[Term], lambda: f64) -> f64 {
    let s = lambda.ln();
    h * terms.iter().map(|t| (t.log_coef - t.exponent * s).exp()).sum::<f64>()
}

/// Finds `λ` with `h·Σ exp(c_i - p_i ln λ) = 1`.
fn solve_unit_level(h: f64, terms: &[Term]) -> Result<f64> {
    let m = |lambda: f64| scaled_modular(h, terms, lambda);
    // invariant below: m(lo) > 1 >= m(hi)
    let (mut lo, mut hi);
    if m(1.0) > 1.0 {
        lo = 1.0;
        hi = 2.0;
        let mut steps = 0;
        while m(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::Range(format!(
                    "norm bracket not found after {MAX_BRACKET_STEPS} doublings"
                )));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut steps = 0;
        while m(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::Range(format!(
                    "norm bracket not found after {MAX_BRACKET_STEPS} halvings"
                )));
            }
        }
    }
    loop {
        let tol = NORM_ABS_TOLERANCE.min(NORM_REL_TOLERANCE * hi);
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
