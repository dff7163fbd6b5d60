//! Uniform midpoint grids on `[-L, L]`, grid-sampled functions, dyadic
//! intervals and the midpoint quadrature every other module integrates with.
//!
//! A grid of half-width `L` and resolution `r` has `2L·2^r` cells of width
//! `h = 2^-r`; cell `i` covers `[-L + i·h, -L + (i+1)·h]` and is sampled at its
//! midpoint. Functions are taken to vanish outside `[-L, L]`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported resolution. `2^16` cells per unit length.
pub const MAX_RESOLUTION: u32 = 16;

/// Largest supported number of cells.
const MAX_CELLS: u64 = 1 << 26;

/// Uniform midpoint grid on `[-L, L]` with step `2^-r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    half_width: u32,
    resolution: u32,
}

impl Grid {
    pub fn new(half_width: u32, resolution: u32) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::Config("grid half-width L must be at least 1".into()));
        }
        if !(1..=MAX_RESOLUTION).contains(&resolution) {
            return Err(Error::Config(format!(
                "grid resolution r = {resolution} outside 1..={MAX_RESOLUTION}"
            )));
        }
        let cells = 2u64
            .checked_mul(half_width as u64)
            .and_then(|c| c.checked_mul(1u64 << resolution))
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| {
                Error::Config(format!("grid L = {half_width}, r = {resolution} exceeds {MAX_CELLS} cells"))
            })?;
        debug_assert!(cells > 0);
        Ok(Self { half_width, resolution })
    }

    pub fn half_width(&self) -> u32 {
        self.half_width
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of cells, `2L·2^r`.
    pub fn len(&self) -> usize {
        2 * self.half_width as usize * self.cells_per_unit()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells_per_unit(&self) -> usize {
        1usize << self.resolution
    }

    /// Cell width `h = 2^-r`.
    pub fn step(&self) -> f64 {
        (-(self.resolution as f64)).exp2()
    }

    pub fn lower(&self) -> f64 {
        -(self.half_width as f64)
    }

    pub fn upper(&self) -> f64 {
        self.half_width as f64
    }

    /// Midpoint of cell `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.lower() + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Index of the cell containing `x` (right-closed at the last cell).
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(self.lower()..=self.upper()).contains(&x) {
            return None;
        }
        let i = ((x - self.lower()) / self.step()).floor() as usize;
        Some(i.min(self.len() - 1))
    }

    /// Cells whose midpoints lie in `[a, b]`.
    pub fn cells_in(&self, a: f64, b: f64) -> Range<usize> {
        let h = self.step();
        let first = ((a - self.lower()) / h - 0.5).ceil().max(0.0) as usize;
        let last = (((b - self.lower()) / h - 0.5).floor() + 1.0).max(0.0) as usize;
        let last = last.min(self.len());
        first.min(last)..last
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[-{0}, {0}] @ 2^-{1}", self.half_width, self.resolution)
    }
}

/// Convenience wrapper around [`Grid::new`].
pub fn make_grid(half_width: u32, resolution: u32) -> Result<Grid> {
    Grid::new(half_width, resolution)
}

/// A real function sampled at the cell midpoints of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Config(format!(
                "{} samples for a grid of {} cells",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range(format!("non-finite sample {} at x = {}", samples[i], grid.point(i))));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, samples: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, samples: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    /// `χ_[a,b]` sampled at midpoints; exact for grid-aligned endpoints.
    pub fn indicator(grid: Grid, a: f64, b: f64) -> Self {
        let mut samples = vec![0.0; grid.len()];
        for i in grid.cells_in(a, b) {
            samples[i] = 1.0;
        }
        Self { grid, samples }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        same_grid(self.grid, other.grid)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid, samples)
    }

    pub fn abs(&self) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|v| v.abs()).collect() }
    }

    pub fn scale(&self, alpha: f64) -> Result<Self> {
        self.map(|v| alpha * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral `h·Σ f(x_i)`.
    pub fn integrate(&self) -> f64 {
        self.grid.step() * self.samples.iter().sum::<f64>()
    }

    /// `‖f‖₂` by midpoint quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.step() * self.samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Indices of cells where `|f| > 0`.
    pub fn support_cells(&self) -> Option<Range<usize>> {
        let first = self.samples.iter().position(|&v| v != 0.0)?;
        let last = self.samples.iter().rposition(|&v| v != 0.0)?;
        Some(first..last + 1)
    }
}

/// Midpoint quadrature of `f` over its grid.
pub fn integrate(f: &GridFunction) -> f64 {
    f.integrate()
}

pub(crate) fn same_grid(left: Grid, right: Grid) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::GridMismatch { left: left.to_string(), right: right.to_string() })
    }
}

/// Dyadic interval `Q_{j,k} = [2^-j k, 2^-j (k+1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: i64,
}

impl DyadicCube {
    pub fn new(level: i32, index: i64) -> Self {
        Self { level, index }
    }

    /// Side length `ℓ(Q) = 2^-j`.
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// `|Q|`, equal to the side length in dimension one.
    pub fn volume(&self) -> f64 {
        self.side()
    }

    pub fn left(&self) -> f64 {
        self.index as f64 * self.side()
    }

    pub fn right(&self) -> f64 {
        (self.index + 1) as f64 * self.side()
    }

    pub fn center(&self) -> f64 {
        (self.index as f64 + 0.5) * self.side()
    }

    pub fn contains_point(&self, x: f64) -> bool {
        self.left() <= x && x <= self.right()
    }

    pub fn children(&self) -> [DyadicCube; 2] {
        [DyadicCube::new(self.level + 1, 2 * self.index), DyadicCube::new(self.level + 1, 2 * self.index + 1)]
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube::new(self.level - 1, self.index.div_euclid(2))
    }

    /// Whether `self ⊆ other` (a cube is its own descendant).
    pub fn is_descendant_of(&self, other: &DyadicCube) -> bool {
        if self.level < other.level {
            return false;
        }
        let shift = (self.level - other.level) as u32;
        self.index >> shift == other.index
    }

    /// The cells of `grid` making up this cube.
    pub fn cells(&self, grid: Grid) -> Result<Range<usize>> {
        if self.level > grid.resolution() as i32 {
            return Err(Error::Resolution(format!(
                "cube at level {} is finer than grid resolution {}",
                self.level,
                grid.resolution()
            )));
        }
        let shift = grid.resolution() as i32 - self.level;
        if shift >= 62 {
            return Err(Error::Config(format!("cube level {} too coarse", self.level)));
        }
        let cells = 1i64 << shift;
        let offset = grid.half_width() as i64 * grid.cells_per_unit() as i64;
        let start = self.index * cells + offset;
        let end = start + cells;
        if start < 0 || end > grid.len() as i64 {
            return Err(Error::Domain(format!(
                "cube [{}, {}] is not inside {grid}",
                self.left(),
                self.right()
            )));
        }
        Ok(start as usize..end as usize)
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q({},{})", self.level, self.index)
    }
}

/// All cubes of `𝓓_j` contained in the grid domain, in index order.
pub fn dyadic_cubes(level: i32, grid: Grid) -> Result<Vec<DyadicCube>> {
    if level > grid.resolution() as i32 {
        return Err(Error::Resolution(format!(
            "level {level} is finer than grid resolution {}",
            grid.resolution()
        )));
    }
    let side = (-(level as f64)).exp2();
    let width = 2.0 * grid.half_width() as f64;
    if side > width {
        return Err(Error::Config(format!("cubes of side {side} do not fit in a domain of width {width}")));
    }
    let lo = (grid.lower() / side).ceil() as i64;
    let hi = (grid.upper() / side).floor() as i64 - 1;
    Ok((lo..=hi).map(|k| DyadicCube::new(level, k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_midpoints() {
        let g = make_grid(1, 1).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts, vec![-0.75, -0.25, 0.25, 0.75]);
        let g = make_grid(2, 3).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.step(), 0.125);
    }

    #[test]
    fn rejects_out_of_range_resolution() {
        assert!(matches!(make_grid(1, 17), Err(Error::Config(_))));
        assert!(matches!(make_grid(1, 0), Err(Error::Config(_))));
        assert!(matches!(make_grid(0, 4), Err(Error::Config(_))));
        assert!(matches!(make_grid(u32::MAX, 16), Err(Error::Config(_))));
    }

    #[test]
    fn integrates_aligned_indicator_exactly() {
        let g = make_grid(2, 8).unwrap();
        assert_eq!(GridFunction::indicator(g, 0.0, 1.0).integrate(), 1.0);
    }

    #[test]
    fn midpoint_rule_is_exact_for_linear_pieces() {
        let g = make_grid(2, 6).unwrap();
        let f = GridFunction::from_fn(g, |x| if (0.0..=1.0).contains(&x) { x } else { 0.0 }).unwrap();
        assert!((f.integrate() - 0.5).abs() <= g.step() * g.step());
    }

    #[test]
    fn gaussian_integral_matches_sqrt_pi() {
        let g = make_grid(8, 10).unwrap();
        let f = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        assert!((f.integrate() - std::f64::consts::PI.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn refinement_error_decays_quadratically() {
        let f = |x: f64| (3.0 * x).sin() * (-x * x).exp() + x * x * (-x * x).exp();
        let exact = {
            let g = make_grid(8, 14).unwrap();
            GridFunction::from_fn(g, f).unwrap().integrate()
        };
        for r in 2..8 {
            let a = GridFunction::from_fn(make_grid(8, r).unwrap(), f).unwrap().integrate();
            let b = GridFunction::from_fn(make_grid(8, r + 2).unwrap(), f).unwrap().integrate();
            let bound = 2.0 * (-2.0 * r as f64).exp2();
            assert!((a - b).abs() <= bound, "r = {r}: {}", (a - b).abs());
            assert!((b - exact).abs() <= bound);
        }
    }

    #[test]
    fn cubes_of_level_zero_and_one() {
        let g = make_grid(2, 4).unwrap();
        let q0 = dyadic_cubes(0, g).unwrap();
        assert_eq!(q0.iter().map(|q| q.index).collect::<Vec<_>>(), vec![-2, -1, 0, 1]);
        let q1 = dyadic_cubes(1, g).unwrap();
        assert_eq!(q1.len(), 8);
        let q = DyadicCube::new(1, 3);
        assert_eq!((q.left(), q.right(), q.center()), (1.5, 2.0, 1.75));
        assert!(q1.contains(&q));
    }

    #[test]
    fn cubes_finer_than_grid_are_rejected() {
        let g = make_grid(1, 5).unwrap();
        assert!(matches!(dyadic_cubes(6, g), Err(Error::Resolution(_))));
        assert!(matches!(DyadicCube::new(6, 0).cells(g), Err(Error::Resolution(_))));
    }

    #[test]
    fn cubes_tile_the_domain() {
        let g = make_grid(4, 6).unwrap();
        for j in -2..=6 {
            let cubes = dyadic_cubes(j, g).unwrap();
            let total: f64 = cubes.iter().map(|q| q.volume()).sum();
            assert_eq!(total, 8.0, "level {j}");
            let mut next = 0;
            for q in &cubes {
                let cells = q.cells(g).unwrap();
                assert_eq!(cells.start, next);
                next = cells.end;
            }
            assert_eq!(next, g.len());
        }
    }

    #[test]
    fn cubes_must_fit_inside_the_domain() {
        let g = make_grid(4, 6).unwrap();
        assert!(dyadic_cubes(-3, g).unwrap().is_empty());
        assert!(matches!(dyadic_cubes(-4, g), Err(Error::Config(_))));
        let g = make_grid(3, 6).unwrap();
        let q = dyadic_cubes(-1, g).unwrap();
        assert_eq!(q, vec![DyadicCube::new(-1, -1), DyadicCube::new(-1, 0)]);
    }

    #[test]
    fn descendant_relation() {
        let q = DyadicCube::new(0, -1);
        assert!(DyadicCube::new(3, -1).is_descendant_of(&q));
        assert!(DyadicCube::new(3, -8).is_descendant_of(&q));
        assert!(!DyadicCube::new(3, 0).is_descendant_of(&q));
        assert_eq!(DyadicCube::new(3, -1).parent(), DyadicCube::new(2, -1));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GridFunction::zeros(make_grid(1, 4).unwrap());
        let b = GridFunction::zeros(make_grid(1, 5).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = make_grid(1, 2).unwrap();
        assert!(GridFunction::from_fn(g, |x| 1.0 / x.max(0.0)).is_err());
    }
}
