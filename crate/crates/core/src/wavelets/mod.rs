//! Compactly supported Daubechies systems `φ`, `ψ` with `supp = [0, 2N-1]`,
//! their dilates `F_{j,k} = 2^{j/2} F(2^j · - k)` on a grid, the inhomogeneous
//! expansion from a base level `J`, and the square functions `V`, `W₁`, `W₂`.
//!
//! `φ` is computed by the cascade algorithm on the dyadic lattice of step
//! `2^{-r_c}`; grid samples of dilated atoms interpolate linearly between
//! lattice points, which is exact whenever the grid midpoints fall on the
//! lattice (`r_c ≥ r - j + 1`).

mod transform;

pub use transform::{
    analyze, detail_projection, pyramid_step, square_functions, synthesize, LevelCoefficients,
    SquareFunctions, WaveletCoefficients,
};

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

const CASCADE_TOLERANCE: f64 = 1e-10;
const CASCADE_MAX_ITERATIONS: usize = 60;

/// Minimal-phase Daubechies lowpass filters with `N` vanishing moments,
/// normalized to `Σ h = √2`.
#[allow(clippy::excessive_precision)]
const DAUBECHIES: [&[f64]; 4] = [
    &[FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    &[
        0.482_962_913_144_534_143_37,
        0.836_516_303_737_807_905_58,
        0.224_143_868_042_013_381_03,
        -0.129_409_522_551_260_381_17,
    ],
    &[
        0.332_670_552_950_082_616,
        0.806_891_509_311_092_576_49,
        0.459_877_502_118_491_570_1,
        -0.135_011_020_010_254_588_7,
        -0.085_441_273_882_026_661_693,
        0.035_226_291_885_709_536_603,
    ],
    &[
        0.230_377_813_308_896_500_86,
        0.714_846_570_552_915_647_09,
        0.630_880_767_929_858_907_88,
        -0.027_983_769_416_859_854_211,
        -0.187_034_811_719_093_084_08,
        0.030_841_381_835_560_763_627,
        0.032_883_011_666_885_199_735,
        -0.010_597_401_785_069_032_105,
    ],
];

/// Which generator of the system an atom is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// Scaling function `φ`.
    Scaling,
    /// Wavelet `ψ`.
    Wavelet,
}

/// A Daubechies scaling function and wavelet sampled on a dyadic lattice.
#[derive(Clone, Debug)]
pub struct WaveletSystem {
    order: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    cascade_resolution: u32,
    phi: Vec<f64>,
    psi: Vec<f64>,
    cascade_iterations: usize,
    cascade_change: f64,
}

impl WaveletSystem {
    /// Builds the order-`N` system (`N ∈ 1..=4`) with cascade resolution `r_c ≥ 8`.
    pub fn daubechies(order: usize, cascade_resolution: u32) -> Result<Self> {
        if !(1..=DAUBECHIES.len()).contains(&order) {
            return Err(Error::Config(format!(
                "Daubechies order N = {order} not in 1..={}",
                DAUBECHIES.len()
            )));
        }
        if !(8..=20).contains(&cascade_resolution) {
            return Err(Error::Config(format!("cascade resolution {cascade_resolution} not in 8..=20")));
        }
        let lowpass = DAUBECHIES[order - 1].to_vec();
        let taps = lowpass.len();
        let highpass: Vec<f64> =
            (0..taps).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * lowpass[taps - 1 - k]).collect();

        let per_unit = 1usize << cascade_resolution;
        let len = (2 * order - 1) * per_unit + 1;
        let mut phi: Vec<f64> = (0..len).map(|m| if m < per_unit { 1.0 } else { 0.0 }).collect();
        let mut iterations = 0;
        let mut change = f64::INFINITY;
        while iterations < CASCADE_MAX_ITERATIONS && change >= CASCADE_TOLERANCE {
            let next = refine(&phi, &lowpass, per_unit);
            change = next.iter().zip(&phi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            phi = next;
            iterations += 1;
        }
        if change.is_nan() || change >= 1e-6 {
            return Err(Error::Internal(format!(
                "cascade for N = {order} did not converge (last change {change:e})"
            )));
        }
        let psi = refine(&phi, &highpass, per_unit);
        Ok(Self {
            order,
            lowpass,
            highpass,
            cascade_resolution,
            phi,
            psi,
            cascade_iterations: iterations,
            cascade_change: change,
        })
    }

    /// `N`; the support of `φ` and `ψ` is `[0, 2N-1]`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `2N - 1`.
    pub fn support_length(&self) -> usize {
        2 * self.order - 1
    }

    /// `N ≥ 3` systems are C¹; `N = 1` (Haar) is discontinuous.
    pub fn is_c1(&self) -> bool {
        self.order >= 3
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn cascade_resolution(&self) -> u32 {
        self.cascade_resolution
    }

    pub fn cascade_iterations(&self) -> usize {
        self.cascade_iterations
    }

    /// Sup-norm change of the final cascade iteration.
    pub fn cascade_change(&self) -> f64 {
        self.cascade_change
    }

    /// Lattice samples of `φ` or `ψ` at `m·2^{-r_c}`, `m = 0..=(2N-1)·2^{r_c}`.
    pub fn lattice(&self, atom: Atom) -> &[f64] {
        match atom {
            Atom::Scaling => &self.phi,
            Atom::Wavelet => &self.psi,
        }
    }

    pub fn lattice_step(&self) -> f64 {
        (-(self.cascade_resolution as f64)).exp2()
    }

    /// `φ(t)` or `ψ(t)` by linear interpolation on the lattice; 0 off the support.
    pub fn eval(&self, atom: Atom, t: f64) -> f64 {
        let values = self.lattice(atom);
        if !(0.0..=self.support_length() as f64).contains(&t) {
            return 0.0;
        }
        let pos = t * (1u64 << self.cascade_resolution) as f64;
        let i = pos.floor() as usize;
        if i + 1 >= values.len() {
            return values[values.len() - 1];
        }
        let frac = pos - i as f64;
        if frac == 0.0 {
            values[i]
        } else {
            values[i] + frac * (values[i + 1] - values[i])
        }
    }

    /// `[2^-j k, 2^-j (k + 2N - 1)]`.
    pub fn atom_support(&self, level: i32, index: i64) -> (f64, f64) {
        let side = (-(level as f64)).exp2();
        (side * index as f64, side * (index + self.support_length() as i64) as f64)
    }

    /// Translates `k` whose atoms at `level` have grid cells in their support.
    pub fn translates(&self, level: i32, grid: Grid) -> Range<i64> {
        let scale = (level as f64).exp2();
        let lo = (grid.lower() * scale - self.support_length() as f64).floor() as i64;
        let hi = (grid.upper() * scale).ceil() as i64;
        let first = (lo..=hi).find(|&k| !self.atom_cells(level, k, grid).is_empty()).unwrap_or(hi);
        let last =
            (lo..=hi).rev().find(|&k| !self.atom_cells(level, k, grid).is_empty()).map_or(first, |k| k + 1);
        first..last
    }

    /// Translates whose whole support lies inside the grid domain.
    pub fn interior_translates(&self, level: i32, grid: Grid) -> Range<i64> {
        let scale = (level as f64).exp2();
        let first = (grid.lower() * scale).ceil() as i64;
        let last = (grid.upper() * scale - self.support_length() as f64).floor() as i64 + 1;
        first..last.max(first)
    }

    pub(crate) fn atom_cells(&self, level: i32, index: i64, grid: Grid) -> Range<usize> {
        let (a, b) = self.atom_support(level, index);
        grid.cells_in(a, b)
    }

    /// Grid samples of `F_{j,k}` on the cells of its support.
    pub(crate) fn atom_samples(
        &self,
        atom: Atom,
        level: i32,
        index: i64,
        grid: Grid,
    ) -> (Range<usize>, Vec<f64>) {
        let cells = self.atom_cells(level, index, grid);
        let scale = (level as f64).exp2();
        let amp = (0.5 * level as f64).exp2();
        let values =
            cells.clone().map(|i| amp * self.eval(atom, scale * grid.point(i) - index as f64)).collect();
        (cells, values)
    }

    /// Errors unless the lattice resolves level-`j` atoms on `grid`.
    pub(crate) fn check_level(&self, level: i32, grid: Grid) -> Result<()> {
        if (-(level as f64)).exp2() > 2.0 * grid.half_width() as f64 {
            return Err(Error::Config(format!("level {level} is coarser than the domain of {grid}")));
        }
        let r = grid.resolution() as i32;
        if (self.cascade_resolution as i32) < r - level {
            return Err(Error::Resolution(format!(
                "cascade resolution {} < r - j = {} (r = {r}, j = {level})",
                self.cascade_resolution,
                r - level
            )));
        }
        Ok(())
    }
}

/// One cascade step `F ↦ √2 Σ_k c_k F(2· - k)` on the lattice.
fn refine(values: &[f64], filter: &[f64], per_unit: usize) -> Vec<f64> {
    let len = values.len();
    (0..len)
        .map(|m| {
            filter
                .iter()
                .enumerate()
                .filter_map(|(k, c)| {
                    let idx = (2 * m).checked_sub(k * per_unit)?;
                    values.get(idx).map(|v| c * v)
                })
                .sum::<f64>()
                * SQRT_2
        })
        .collect()
}

/// Builds the order-`N` Daubechies system with cascade resolution `r_c`.
pub fn build_daubechies(order: usize, cascade_resolution: u32) -> Result<WaveletSystem> {
    WaveletSystem::daubechies(order, cascade_resolution)
}

/// `2^{j/2} F(2^j x - k)` sampled on `grid`.
pub fn dilate_translate(
    sys: &WaveletSystem,
    atom: Atom,
    level: i32,
    index: i64,
    grid: Grid,
) -> Result<GridFunction> {
    sys.check_level(level, grid)?;
    let (cells, values) = sys.atom_samples(atom, level, index, grid);
    let mut samples = vec![0.0; grid.len()];
    samples[cells].copy_from_slice(&values);
    GridFunction::new(grid, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::norms::pairing;

    fn lattice_integral(sys: &WaveletSystem, f: impl Fn(f64, f64) -> f64) -> f64 {
        let dt = sys.lattice_step();
        sys.lattice(Atom::Scaling).iter().zip(sys.lattice(Atom::Wavelet)).map(|(&a, &b)| f(a, b)).sum::<f64>()
            * dt
    }

    #[test]
    fn filter_identities() {
        for n in 1..=4 {
            let sys = build_daubechies(n, 8).unwrap();
            let h = sys.lowpass();
            assert_eq!(h.len(), 2 * n);
            assert!((h.iter().sum::<f64>() - SQRT_2).abs() < 1e-12, "N = {n}");
            assert!((h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            for shift in 1..n {
                let s: f64 = (0..2 * n - 2 * shift).map(|k| h[k] * h[k + 2 * shift]).sum();
                assert!(s.abs() < 1e-12, "N = {n}, shift {shift}: {s}");
            }
            // N vanishing moments of the highpass filter
            for p in 0..n as i32 {
                let m: f64 = sys.highpass().iter().enumerate().map(|(k, g)| g * (k as f64).powi(p)).sum();
                assert!(m.abs() < 1e-10, "N = {n}, moment {p}: {m}");
            }
        }
    }

    #[test]
    fn haar_is_the_box() {
        let sys = build_daubechies(1, 8).unwrap();
        assert_eq!(sys.lowpass(), &[std::f64::consts::FRAC_1_SQRT_2; 2]);
        assert!(!sys.is_c1());
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(sys.eval(Atom::Scaling, 0.3), 1.0));
        assert_eq!(sys.eval(Atom::Scaling, 1.5), 0.0);
        assert!(close(sys.eval(Atom::Wavelet, 0.25), 1.0));
        assert!(close(sys.eval(Atom::Wavelet, 0.75), -1.0));
    }

    #[test]
    fn db3_cascade_normalization() {
        let sys = build_daubechies(3, 12).unwrap();
        assert!(sys.is_c1());
        assert_eq!(sys.lowpass().len(), 6);
        assert!(sys.cascade_change() < 1e-10);
        assert!((lattice_integral(&sys, |a, _| a) - 1.0).abs() < 1e-4);
        assert!((lattice_integral(&sys, |a, _| a * a) - 1.0).abs() < 1e-4);
        assert!((lattice_integral(&sys, |_, b| b * b) - 1.0).abs() < 1e-4);
        assert!(lattice_integral(&sys, |a, b| a * b).abs() < 1e-4);
        // ⟨φ, φ(· - 1)⟩
        let dt = sys.lattice_step();
        let phi = sys.lattice(Atom::Scaling);
        let shift = 1usize << 12;
        let cross: f64 = phi.iter().zip(&phi[shift..]).map(|(a, b)| a * b).sum::<f64>() * dt;
        assert!(cross.abs() < 1e-4, "{cross}");
        assert!(phi.first().unwrap().abs() < 1e-10);
        assert!(phi.last().unwrap().abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid_orders() {
        assert!(matches!(build_daubechies(0, 10), Err(Error::Config(_))));
        assert!(matches!(build_daubechies(5, 10), Err(Error::Config(_))));
        assert!(matches!(build_daubechies(3, 4), Err(Error::Config(_))));
    }

    #[test]
    fn level_zero_scaling_atom_is_phi() {
        let sys = build_daubechies(3, 12).unwrap();
        let g = make_grid(8, 8).unwrap();
        let f = dilate_translate(&sys, Atom::Scaling, 0, 0, g).unwrap();
        for (x, v) in g.points().zip(f.samples()) {
            assert_eq!(*v, sys.eval(Atom::Scaling, x));
        }
    }

    #[test]
    fn dilates_have_unit_norm_and_the_expected_support() {
        let sys = build_daubechies(3, 12).unwrap();
        let g = make_grid(4, 10).unwrap();
        for j in 0..=4 {
            for k in sys.interior_translates(j, g).step_by(3) {
                for atom in [Atom::Scaling, Atom::Wavelet] {
                    let f = dilate_translate(&sys, atom, j, k, g).unwrap();
                    assert!((f.l2_norm() - 1.0).abs() < 1e-4, "{atom:?} j={j} k={k}");
                    let (a, b) = sys.atom_support(j, k);
                    assert_eq!(b - a, (-(j as f64)).exp2() * 5.0);
                    let cells = f.support_cells().unwrap();
                    assert!(g.point(cells.start) >= a && g.point(cells.end - 1) <= b);
                }
            }
        }
    }

    #[test]
    fn scaling_and_wavelet_atoms_are_orthogonal() {
        let sys = build_daubechies(3, 12).unwrap();
        let g = make_grid(4, 10).unwrap();
        let phi = dilate_translate(&sys, Atom::Scaling, 0, 0, g).unwrap();
        let psi = dilate_translate(&sys, Atom::Wavelet, 0, 0, g).unwrap();
        assert!(pairing(&phi, &psi).unwrap().abs() < 1e-4);
    }

    #[test]
    fn under_resolved_cascade_is_rejected() {
        let sys = build_daubechies(3, 8).unwrap();
        let g = make_grid(4, 10).unwrap();
        assert!(matches!(dilate_translate(&sys, Atom::Wavelet, 1, 0, g), Err(Error::Resolution(_))));
        assert!(dilate_translate(&sys, Atom::Wavelet, 2, 0, g).is_ok());
    }

    #[test]
    fn translate_ranges() {
        let sys = build_daubechies(3, 12).unwrap();
        let g = make_grid(4, 10).unwrap();
        assert_eq!(sys.translates(0, g), -8..4);
        assert_eq!(sys.interior_translates(0, g), -4..0);
        assert_eq!(sys.translates(1, g), -12..8);
    }
}
