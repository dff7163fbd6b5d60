use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Atom, WaveletSystem};
use crate::error::{Error, Result};
use crate::grid::{DyadicCube, Grid, GridFunction};

/// Relative threshold under which `f` counts as vanishing near the boundary.
const MARGIN_TOLERANCE: f64 = 1e-10;

/// Coefficients of one level, stored contiguously from `first_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelCoefficients {
    pub level: i32,
    pub first_index: i64,
    pub values: Vec<f64>,
}

impl LevelCoefficients {
    pub fn zeros(level: i32, first_index: i64, len: usize) -> Self {
        Self { level, first_index, values: vec![0.0; len] }
    }

    /// Coefficient of translate `k`; 0 outside the stored range.
    pub fn get(&self, index: i64) -> f64 {
        usize::try_from(index - self.first_index)
            .ok()
            .and_then(|i| self.values.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.first_index + i as i64, v))
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `a_{J,k} = ⟨f, φ_{J,k}⟩` and `d_{j,k} = ⟨f, ψ_{j,k}⟩` for `J ≤ j ≤ j_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCoefficients {
    pub base_level: i32,
    pub top_level: i32,
    pub scaling: LevelCoefficients,
    pub details: Vec<LevelCoefficients>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientDocument {
    #[serde(rename = "J")]
    base_level: i32,
    j_max: i32,
    a: Vec<(i64, f64)>,
    d: Vec<(i32, i64, f64)>,
}

impl WaveletCoefficients {
    /// All-zero coefficients for every translate meeting the domain of `grid`.
    pub fn zeros(sys: &WaveletSystem, grid: Grid, base_level: i32, top_level: i32) -> Self {
        let level = |j| {
            let ks = sys.translates(j, grid);
            LevelCoefficients::zeros(j, ks.start, (ks.end - ks.start) as usize)
        };
        Self {
            base_level,
            top_level,
            scaling: level(base_level),
            details: (base_level..=top_level).map(level).collect(),
        }
    }

    pub fn detail(&self, level: i32) -> Option<&LevelCoefficients> {
        self.details.get(usize::try_from(level - self.base_level).ok()?)
    }

    pub fn detail_mut(&mut self, level: i32) -> Option<&mut LevelCoefficients> {
        self.details.get_mut(usize::try_from(level - self.base_level).ok()?)
    }

    /// `Σ|a|² + Σ|d|²`.
    pub fn energy(&self) -> f64 {
        self.scaling.energy() + self.detail_energy()
    }

    /// `Σ|d|²`.
    pub fn detail_energy(&self) -> f64 {
        self.details.iter().map(LevelCoefficients::energy).sum()
    }

    /// Number of stored coefficients, zeros included.
    pub fn len(&self) -> usize {
        self.scaling.values.len() + self.details.iter().map(|d| d.values.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest coefficient difference over the union of both index sets.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let level_diff = |a: &LevelCoefficients, b: &LevelCoefficients| {
            a.iter()
                .map(|(k, v)| (v - b.get(k)).abs())
                .chain(b.iter().map(|(k, v)| (v - a.get(k)).abs()))
                .fold(0.0f64, f64::max)
        };
        let empty = |j| LevelCoefficients::zeros(j, 0, 0);
        let lo = self.base_level.min(other.base_level);
        let hi = self.top_level.max(other.top_level);
        let mut m = if self.base_level == other.base_level {
            level_diff(&self.scaling, &other.scaling)
        } else {
            f64::INFINITY
        };
        for j in lo..=hi {
            let a = self.detail(j).cloned().unwrap_or_else(|| empty(j));
            let b = other.detail(j).cloned().unwrap_or_else(|| empty(j));
            m = m.max(level_diff(&a, &b));
        }
        m
    }

    /// `{"J", "j_max", "a": [[k, val]], "d": [[j, k, val]]}`.
    pub fn to_json(&self) -> Result<String> {
        let doc = CoefficientDocument {
            base_level: self.base_level,
            j_max: self.top_level,
            a: self.scaling.iter().collect(),
            d: self.details.iter().flat_map(|lc| lc.iter().map(move |(k, v)| (lc.level, k, v))).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CoefficientDocument = serde_json::from_str(text)?;
        if doc.j_max < doc.base_level {
            return Err(Error::Config(format!("j_max = {} below J = {}", doc.j_max, doc.base_level)));
        }
        let pack = |level: i32, entries: Vec<(i64, f64)>| {
            let Some(first) = entries.iter().map(|e| e.0).min() else {
                return LevelCoefficients::zeros(level, 0, 0);
            };
            let last = entries.iter().map(|e| e.0).max().unwrap_or(first);
            let mut lc = LevelCoefficients::zeros(level, first, (last - first + 1) as usize);
            for (k, v) in entries {
                lc.values[(k - first) as usize] = v;
            }
            lc
        };
        let mut details = Vec::new();
        for j in doc.base_level..=doc.j_max {
            let entries = doc.d.iter().filter(|e| e.0 == j).map(|e| (e.1, e.2)).collect();
            details.push(pack(j, entries));
        }
        if let Some(e) = doc.d.iter().find(|e| e.0 < doc.base_level || e.0 > doc.j_max) {
            return Err(Error::Config(format!("detail level {} outside [J, j_max]", e.0)));
        }
        Ok(Self {
            base_level: doc.base_level,
            top_level: doc.j_max,
            scaling: pack(doc.base_level, doc.a),
            details,
        })
    }
}

/// Pointwise `ℓ²` aggregates `V`, `W₁`, `W₂`.
#[derive(Clone, Debug)]
pub struct SquareFunctions {
    pub v: GridFunction,
    pub w1: GridFunction,
    pub w2: GridFunction,
}

fn check_levels(sys: &WaveletSystem, grid: Grid, base: i32, top: i32) -> Result<()> {
    if top < base {
        return Err(Error::Config(format!("j_max = {top} below J = {base}")));
    }
    let r = grid.resolution() as i32;
    if top > r - 2 {
        return Err(Error::Resolution(format!(
            "j_max = {top} exceeds r - 2 = {} (two cells per finest oscillation)",
            r - 2
        )));
    }
    sys.check_level(base, grid)
}

fn project(f: &GridFunction, sys: &WaveletSystem, atom: Atom, level: i32) -> LevelCoefficients {
    let grid = f.grid();
    let h = grid.step();
    let ks = sys.translates(level, grid);
    let values = (ks.start..ks.end)
        .into_par_iter()
        .map(|k| {
            let (cells, atom) = sys.atom_samples(atom, level, k, grid);
            h * f.samples()[cells].iter().zip(&atom).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    LevelCoefficients { level, first_index: ks.start, values }
}

/// Expansion coefficients by quadrature against the sampled atoms.
///
/// `f` must vanish within `2^{-j_max}(2N-1)` of the boundary, the support of
/// the finest atoms.
pub fn analyze(
    f: &GridFunction,
    sys: &WaveletSystem,
    base_level: i32,
    top_level: i32,
) -> Result<WaveletCoefficients> {
    let grid = f.grid();
    check_levels(sys, grid, base_level, top_level)?;
    let margin = (-(top_level as f64)).exp2() * sys.support_length() as f64;
    let threshold = MARGIN_TOLERANCE * f.max_abs();
    let inner = grid.cells_in(grid.lower() + margin, grid.upper() - margin);
    let leak = f
        .samples()
        .iter()
        .enumerate()
        .filter(|(i, _)| !inner.contains(i))
        .map(|(_, v)| v.abs())
        .fold(0.0f64, f64::max);
    if leak > threshold {
        return Err(Error::Domain(format!("f reaches {leak:e} within the margin {margin} of the boundary")));
    }
    let scaling = project(f, sys, Atom::Scaling, base_level);
    let details =
        (base_level..=top_level).into_par_iter().map(|j| project(f, sys, Atom::Wavelet, j)).collect();
    Ok(WaveletCoefficients { base_level, top_level, scaling, details })
}

fn accumulate(
    out: &mut [f64],
    sys: &WaveletSystem,
    atom: Atom,
    coeffs: &LevelCoefficients,
    grid: Grid,
    term: impl Fn(f64, f64) -> f64,
) {
    for (k, c) in coeffs.iter() {
        if c == 0.0 {
            continue;
        }
        let (cells, values) = sys.atom_samples(atom, coeffs.level, k, grid);
        for (o, v) in out[cells].iter_mut().zip(values) {
            *o += term(c, v);
        }
    }
}

fn level_sums(
    c: &WaveletCoefficients,
    sys: &WaveletSystem,
    grid: Grid,
    term: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<Vec<f64>> {
    c.details
        .par_iter()
        .map(|lc| {
            let mut acc = vec![0.0; grid.len()];
            accumulate(&mut acc, sys, Atom::Wavelet, lc, grid, &term);
            acc
        })
        .collect()
}

fn add_levels(out: &mut [f64], levels: Vec<Vec<f64>>) {
    for level in levels {
        for (o, v) in out.iter_mut().zip(level) {
            *o += v;
        }
    }
}

/// `Σ a_{J,k} φ_{J,k} + Σ d_{j,k} ψ_{j,k}` on `grid`.
pub fn synthesize(c: &WaveletCoefficients, sys: &WaveletSystem, grid: Grid) -> Result<GridFunction> {
    check_levels(sys, grid, c.base_level, c.top_level)?;
    let mut out = vec![0.0; grid.len()];
    accumulate(&mut out, sys, Atom::Scaling, &c.scaling, grid, |c, v| c * v);
    add_levels(&mut out, level_sums(c, sys, grid, |c, v| c * v));
    GridFunction::new(grid, out)
}

/// `V`, `W₁` and `W₂` with `χ_{j,k} = 2^{j/2} χ_{Q_{j,k}}`.
pub fn square_functions(c: &WaveletCoefficients, sys: &WaveletSystem, grid: Grid) -> Result<SquareFunctions> {
    check_levels(sys, grid, c.base_level, c.top_level)?;
    let sq = |c: f64, v: f64| (c * v) * (c * v);
    let mut v = vec![0.0; grid.len()];
    accumulate(&mut v, sys, Atom::Scaling, &c.scaling, grid, sq);
    let mut w1 = vec![0.0; grid.len()];
    add_levels(&mut w1, level_sums(c, sys, grid, sq));

    let w2_levels: Vec<Vec<f64>> = c
        .details
        .par_iter()
        .map(|lc| {
            let mut acc = vec![0.0; grid.len()];
            let height = (lc.level as f64).exp2();
            for (k, d) in lc.iter() {
                if d == 0.0 {
                    continue;
                }
                let q = DyadicCube::new(lc.level, k);
                for o in &mut acc[grid.cells_in(q.left(), q.right())] {
                    *o += d * d * height;
                }
            }
            acc
        })
        .collect();
    let mut w2 = vec![0.0; grid.len()];
    add_levels(&mut w2, w2_levels);

    let root = |s: Vec<f64>| GridFunction::new(grid, s.into_iter().map(f64::sqrt).collect());
    Ok(SquareFunctions { v: root(v)?, w1: root(w1)?, w2: root(w2)? })
}

/// `Σ_k ⟨f, ψ_{j,k}⟩ ψ_{j,k}` over the translates meeting the domain.
///
/// No margin is required: atoms straddling the boundary see `f` extended by 0
/// and are themselves truncated to the domain.
pub fn detail_projection(f: &GridFunction, sys: &WaveletSystem, level: i32) -> Result<GridFunction> {
    let grid = f.grid();
    sys.check_level(level, grid)?;
    let coeffs = project(f, sys, Atom::Wavelet, level);
    let mut out = vec![0.0; grid.len()];
    accumulate(&mut out, sys, Atom::Wavelet, &coeffs, grid, |c, v| c * v);
    GridFunction::new(grid, out)
}

/// One filter-bank step `a_{j,k} = Σ_n h_n a_{j+1,2k+n}`, `d_{j,k} = Σ_n g_n a_{j+1,2k+n}`.
pub fn pyramid_step(fine: &LevelCoefficients, sys: &WaveletSystem) -> (LevelCoefficients, LevelCoefficients) {
    let taps = sys.lowpass().len() as i64;
    let last = fine.first_index + fine.values.len() as i64 - 1;
    let first = (fine.first_index - taps + 1).div_euclid(2);
    let end = last.div_euclid(2) + 1;
    let level = fine.level - 1;
    let filter = |taps_: &[f64], k: i64| {
        taps_.iter().enumerate().map(|(n, t)| t * fine.get(2 * k + n as i64)).sum::<f64>()
    };
    let coarse = |taps_: &[f64]| LevelCoefficients {
        level,
        first_index: first,
        values: (first..end).map(|k| filter(taps_, k)).collect(),
    };
    (coarse(sys.lowpass()), coarse(sys.highpass()))
}
