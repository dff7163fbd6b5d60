use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::smooth::cutoff;
use crate::wavelets::{Atom, WaveletSystem};

/// Bound on `|smooth_step'|`; the cutoff derivative is at most twice this.
const STEP_SLOPE_BOUND: f64 = 2.5;

/// Smallest admissible sample budget for [`verify_kernel_conditions`].
pub const MIN_SAMPLE_BUDGET: usize = 10_000;

const GAUSS_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

type Convolution = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type General = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// How a kernel is evaluated.
#[derive(Clone)]
pub enum KernelRule {
    /// `K(x, y) = k(x - y)`.
    Convolution(Convolution),
    /// `K(x, y) = Σ_k ψ_{j,k}(x) ψ_{j,k}(y)`.
    WaveletProjection {
        system: Arc<WaveletSystem>,
        level: i32,
    },
    General(General),
}

/// A kernel `K` with claimed support radius `γ` and claimed constants `D₁`, `D₂`
/// of the local size and Hörmander conditions.
#[derive(Clone)]
pub struct LocalCzKernel {
    name: String,
    rule: KernelRule,
    gamma: u32,
    d1: f64,
    d2: f64,
}

impl fmt::Debug for LocalCzKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalCzKernel")
            .field("name", &self.name)
            .field("gamma", &self.gamma)
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .finish()
    }
}

fn check_claims(gamma: u32, d1: f64, d2: f64) -> Result<()> {
    if gamma == 0 {
        return Err(Error::Config("kernel support radius must be positive".into()));
    }
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::Config(format!("kernel constants must be positive, got {d1}, {d2}")));
    }
    Ok(())
}

impl LocalCzKernel {
    /// `ρ((x-y)/γ)/(x-y)` with the even cutoff `ρ`.
    pub fn hilbert_cut(gamma: u32) -> Result<Self> {
        check_claims(gamma, 1.0, 1.0)?;
        let g = gamma as f64;
        Ok(Self {
            name: format!("hilbert-cut:{gamma}"),
            rule: KernelRule::Convolution(Arc::new(move |t| if t == 0.0 { 0.0 } else { cutoff(t / g) / t })),
            gamma,
            d1: 1.0,
            d2: 8.0 * (1.0 + 2.0 * STEP_SLOPE_BOUND),
        })
    }

    /// The level-`j` wavelet projection `f ↦ Σ_k ⟨f, ψ_{j,k}⟩ ψ_{j,k}` as a kernel.
    pub fn wavelet_projection(system: Arc<WaveletSystem>, level: i32) -> Result<Self> {
        let s = system.support_length() as f64;
        let reach = s * (-(level as f64)).exp2();
        let gamma = reach.ceil().max(1.0) as u32;
        let psi = system.lattice(Atom::Wavelet);
        let sup = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lip = psi.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs())) / system.lattice_step();
        Ok(Self {
            name: format!("wavelet-proj:{level}"),
            rule: KernelRule::WaveletProjection { system, level },
            gamma,
            d1: s * s * sup * sup,
            d2: 8.0 * s * s * s * lip * sup,
        })
    }

    pub fn convolution(
        name: &str,
        gamma: u32,
        d1: f64,
        d2: f64,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_claims(gamma, d1, d2)?;
        Ok(Self { name: name.into(), rule: KernelRule::Convolution(Arc::new(k)), gamma, d1, d2 })
    }

    pub fn general(
        name: &str,
        gamma: u32,
        d1: f64,
        d2: f64,
        k: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_claims(gamma, d1, d2)?;
        Ok(Self { name: name.into(), rule: KernelRule::General(Arc::new(k)), gamma, d1, d2 })
    }

    /// Catalog lookup: `hilbert-cut:γ` or `wavelet-proj:j` (needs `system`).
    pub fn parse(descriptor: &str, system: Option<Arc<WaveletSystem>>) -> Result<Self> {
        let (kind, arg) = descriptor
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("kernel descriptor '{descriptor}' lacks ':'")))?;
        let bad = || Error::Config(format!("bad kernel parameter in '{descriptor}'"));
        match kind {
            "hilbert-cut" => Self::hilbert_cut(arg.parse().map_err(|_| bad())?),
            "wavelet-proj" => {
                let level = arg.parse().map_err(|_| bad())?;
                let system = system
                    .ok_or_else(|| Error::Config("wavelet-proj kernel needs a wavelet system".into()))?;
                Self::wavelet_projection(system, level)
            }
            _ => Err(Error::Config(format!("unknown kernel '{kind}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rule(&self) -> &KernelRule {
        &self.rule
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.rule {
            KernelRule::Convolution(k) => k(x - y),
            KernelRule::General(k) => k(x, y),
            KernelRule::WaveletProjection { system, level } => {
                let scale = (*level as f64).exp2();
                let (u, v) = (scale * x, scale * y);
                let s = system.support_length() as f64;
                let lo = (u.max(v) - s).floor() as i64;
                let hi = u.min(v).ceil() as i64;
                scale
                    * (lo..=hi)
                        .map(|k| {
                            system.eval(Atom::Wavelet, u - k as f64)
                                * system.eval(Atom::Wavelet, v - k as f64)
                        })
                        .sum::<f64>()
            }
        }
    }
}

/// `K(x_i, x_l)` for grid points, with per-rule precomputation.
enum GridKernel<'a> {
    Offsets { values: Vec<f64>, radius: usize },
    Atoms { first: Vec<i64>, values: Vec<Vec<f64>>, scale: f64 },
    Direct(&'a LocalCzKernel, Vec<f64>),
}

impl GridKernel<'_> {
    fn new<'a>(kernel: &'a LocalCzKernel, f: &GridFunction, radius: usize) -> GridKernel<'a> {
        let grid = f.grid();
        let h = grid.step();
        match &kernel.rule {
            KernelRule::Convolution(k) => GridKernel::Offsets {
                values: (0..=2 * radius).map(|d| k((d as f64 - radius as f64) * h)).collect(),
                radius,
            },
            KernelRule::WaveletProjection { system, level } => {
                let scale = (*level as f64).exp2();
                let s = system.support_length() as i64;
                let (first, values) = grid
                    .points()
                    .map(|x| {
                        let u = scale * x;
                        let lo = u.floor() as i64 - s;
                        let vals =
                            (lo..=lo + s + 1).map(|k| system.eval(Atom::Wavelet, u - k as f64)).collect();
                        (lo, vals)
                    })
                    .unzip();
                GridKernel::Atoms { first, values, scale }
            }
            KernelRule::General(_) => GridKernel::Direct(kernel, grid.points().collect()),
        }
    }

    fn at(&self, i: usize, l: usize) -> f64 {
        match self {
            GridKernel::Offsets { values, radius } => values[i + radius - l],
            GridKernel::Atoms { first, values, scale } => {
                let (a, b) = (first[i], first[l]);
                let (va, vb) = (&values[i], &values[l]);
                let lo = a.max(b);
                let hi = (a + va.len() as i64).min(b + vb.len() as i64);
                scale * (lo..hi).map(|k| va[(k - a) as usize] * vb[(k - b) as usize]).sum::<f64>()
            }
            GridKernel::Direct(k, points) => k.eval(points[i], points[l]),
        }
    }
}

/// `Tf(x_i) = h Σ_{l ≠ i} K(x_i, x_l) f_l` plus a diagonal term.
///
/// The diagonal cell contributes `m₀ f_i + m₁ (f_{i+1} - f_{i-1})/(2h)` with
/// `m₀ = ∫_0^{h/2} K(x,x+s) + K(x,x-s) ds` and
/// `m₁ = ∫_0^{h/2} s (K(x,x+s) - K(x,x-s)) ds` by Gauss–Legendre quadrature.
pub fn apply_local_cz(kernel: &LocalCzKernel, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    if kernel.gamma > 2 * grid.half_width() {
        return Err(Error::Config(format!("kernel radius {} does not fit in {grid}", kernel.gamma)));
    }
    let n = grid.len();
    let h = grid.step();
    let radius = (kernel.gamma as usize * grid.cells_per_unit()).min(n);
    let table = GridKernel::new(kernel, f, radius);
    let samples = f.samples();
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            let mut acc = 0.0;
            for (l, &v) in samples.iter().enumerate().take(hi + 1).skip(lo) {
                if l != i && v != 0.0 {
                    acc += table.at(i, l) * v;
                }
            }
            let x = grid.point(i);
            let (mut m0, mut m1) = (0.0, 0.0);
            for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = 0.25 * h * (1.0 + node);
                let wt = 0.25 * h * weight;
                let (plus, minus) = (kernel.eval(x, x + s), kernel.eval(x, x - s));
                m0 += wt * (plus + minus);
                m1 += wt * s * (plus - minus);
            }
            let left = if i > 0 { samples[i - 1] } else { 0.0 };
            let right = samples.get(i + 1).copied().unwrap_or(0.0);
            h * acc + m0 * samples[i] + m1 * (right - left) / (2.0 * h)
        })
        .collect();
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "kernel {} produced a non-finite value at x = {}",
            kernel.name,
            grid.point(i)
        )));
    }
    GridFunction::new(grid, out)
}

/// Empirical constants of the local size and Hörmander conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub kernel: String,
    pub gamma: u32,
    pub samples: usize,
    pub claimed_d1: f64,
    pub claimed_d2: f64,
    /// `max |K(x,y)|·|x-y|` over sampled `0 < |x-y| ≤ γ`.
    pub empirical_d1: f64,
    /// Sampled pairs with `|x-y| > γ` and `K(x,y) ≠ 0`.
    pub support_violations: usize,
    /// `max (|K(x,z)-K(y,z)| + |K(z,x)-K(z,y)|)·|x-z|²/|x-y|` over sampled
    /// triples with `0 < 2|x-y| < |z-x|`.
    pub empirical_d2: f64,
    pub size_pass: bool,
    pub support_pass: bool,
    pub hormander_pass: bool,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.size_pass && self.support_pass && self.hormander_pass
    }
}

#[derive(Clone, Copy)]
struct Triple {
    x: f64,
    y: f64,
    z: f64,
}

fn hormander_ratio(k: &LocalCzKernel, t: Triple) -> Option<f64> {
    let d = (t.x - t.y).abs();
    let r = (t.z - t.x).abs();
    if !(d > 0.0 && 2.0 * d < r) {
        return None;
    }
    let lhs = (k.eval(t.x, t.z) - k.eval(t.y, t.z)).abs() + (k.eval(t.z, t.x) - k.eval(t.z, t.y)).abs();
    Some(lhs * r * r / d)
}

/// Scans random pairs and triples against the size, support and Hörmander
/// conditions, then refines the worst Hörmander triples by halving `|x-y|`
/// toward the larger difference quotient, which exposes jumps.
pub fn verify_kernel_conditions(
    kernel: &LocalCzKernel,
    sample_budget: usize,
    seed: u64,
) -> Result<KernelReport> {
    if sample_budget < MIN_SAMPLE_BUDGET {
        return Err(Error::Config(format!("sample budget {sample_budget} below {MIN_SAMPLE_BUDGET}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = kernel.gamma as f64;
    let span = 4.0 * gamma;
    let log_uniform =
        |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp();
    let sign = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { 1.0 } else { -1.0 };

    let half = sample_budget / 2;
    let mut empirical_d1 = 0.0f64;
    let mut support_violations = 0;
    for _ in 0..half {
        let x = rng.gen_range(-span..span);
        let t = if rng.gen::<f64>() < 0.75 {
            log_uniform(&mut rng, 1e-6 * gamma, gamma)
        } else {
            rng.gen_range(gamma..3.0 * gamma)
        };
        let y = x + sign(&mut rng) * t;
        let value = kernel.eval(x, y).abs();
        if (x - y).abs() > gamma {
            if value != 0.0 {
                support_violations += 1;
            }
        } else {
            empirical_d1 = empirical_d1.max(value * (x - y).abs());
        }
    }

    let mut triples: Vec<(f64, Triple)> = Vec::with_capacity(sample_budget - half);
    for _ in half..sample_budget {
        let x = rng.gen_range(-span..span);
        let d = log_uniform(&mut rng, 1e-6 * gamma, 0.5 * gamma);
        let r = if rng.gen::<bool>() {
            rng.gen_range(2.0 * d..2.0 * d + 3.0 * gamma)
        } else {
            log_uniform(&mut rng, 2.0 * d, 2.0 * d + 3.0 * gamma)
        };
        let t = Triple { x, y: x + sign(&mut rng) * d, z: x + sign(&mut rng) * r };
        if let Some(q) = hormander_ratio(kernel, t) {
            triples.push((q, t));
        }
    }
    triples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut empirical_d2 = triples.first().map_or(0.0, |t| t.0);
    for &(_, mut t) in triples.iter().take(16) {
        for _ in 0..40 {
            let best;
            let mid = 0.5 * (t.x + t.y);
            let a = Triple { y: mid, ..t };
            let b = Triple { x: mid, ..t };
            let qa = hormander_ratio(kernel, a);
            let qb = hormander_ratio(kernel, b);
            match (qa, qb) {
                (Some(u), Some(v)) if v > u => (best, t) = (v, b),
                (Some(u), _) => (best, t) = (u, a),
                (None, Some(v)) => (best, t) = (v, b),
                (None, None) => break,
            }
            empirical_d2 = empirical_d2.max(best);
        }
    }
    Ok(KernelReport {
        kernel: kernel.name.clone(),
        gamma: kernel.gamma,
        samples: sample_budget,
        claimed_d1: kernel.d1,
        claimed_d2: kernel.d2,
        empirical_d1,
        support_violations,
        empirical_d2,
        size_pass: empirical_d1 <= kernel.d1,
        support_pass: support_violations == 0,
        hormander_pass: empirical_d2 <= kernel.d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::smooth::smooth_step;
    use crate::wavelets::{analyze, build_daubechies, synthesize, WaveletCoefficients};

    #[test]
    fn step_slope_bound_holds() {
        let dt = 1e-5;
        let worst = (1..100_000)
            .map(|i| (smooth_step(i as f64 * dt + dt) - smooth_step(i as f64 * dt)) / dt)
            .fold(0.0f64, f64::max);
        assert!(worst < STEP_SLOPE_BOUND, "{worst}");
    }

    #[test]
    fn catalog_parsing() {
        let k = LocalCzKernel::parse("hilbert-cut:2", None).unwrap();
        assert_eq!(k.gamma(), 2);
        assert_eq!(k.name(), "hilbert-cut:2");
        assert!((k.eval(0.5, 0.0) - 2.0).abs() < 1e-15);
        assert_eq!(k.eval(3.0, 0.0), 0.0);
        assert!(matches!(LocalCzKernel::parse("wavelet-proj:0", None), Err(Error::Config(_))));
        let sys = Arc::new(build_daubechies(3, 12).unwrap());
        let w = LocalCzKernel::parse("wavelet-proj:1", Some(sys)).unwrap();
        assert_eq!(w.gamma(), 3);
        assert!(LocalCzKernel::parse("riesz:1", None).is_err());
        assert!(LocalCzKernel::parse("hilbert-cut:0", None).is_err());
    }

    #[test]
    fn hilbert_cut_passes_the_scan() {
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        let rep = verify_kernel_conditions(&k, 20_000, 7).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.empirical_d1 > 0.9 && rep.empirical_d2 > 1.0);
    }

    #[test]
    fn uncut_kernel_fails_the_support_condition() {
        let k = LocalCzKernel::convolution("abs-inverse", 1, 1.0, 100.0, |t| 1.0 / t.abs()).unwrap();
        let rep = verify_kernel_conditions(&k, 10_000, 1).unwrap();
        assert!(!rep.support_pass);
        assert!(rep.size_pass);
    }

    #[test]
    fn sign_kernel_fails_the_hormander_scan() {
        let k = LocalCzKernel::convolution("sign-cut", 1, 1.0, 1e3, |t| {
            if t.abs() <= 1.0 {
                t.signum()
            } else {
                0.0
            }
        })
        .unwrap();
        let rep = verify_kernel_conditions(&k, 10_000, 3).unwrap();
        assert!(!rep.hormander_pass, "{rep:?}");
        assert!(rep.empirical_d2 > 1e6);
    }

    #[test]
    fn budget_floor() {
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        assert!(matches!(verify_kernel_conditions(&k, 100, 0), Err(Error::Config(_))));
    }

    #[test]
    fn wavelet_projection_kernel_passes_the_scan() {
        let sys = Arc::new(build_daubechies(3, 12).unwrap());
        let k = LocalCzKernel::wavelet_projection(sys, 0).unwrap();
        assert_eq!(k.gamma(), 5);
        let rep = verify_kernel_conditions(&k, 10_000, 5).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn odd_kernel_annihilates_constants_in_the_interior() {
        let g = make_grid(4, 8).unwrap();
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let tf = apply_local_cz(&k, &f).unwrap();
        for (x, v) in g.points().zip(tf.samples()) {
            if x.abs() < 2.5 {
                assert!(v.abs() < 1e-12, "x = {x}: {v}");
            }
        }
    }

    #[test]
    fn application_is_linear() {
        let g = make_grid(2, 7).unwrap();
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        let f = GridFunction::from_fn(g, |x| (-3.0 * x * x).exp() * (1.0 + x)).unwrap();
        let a = apply_local_cz(&k, &f).unwrap();
        let b = apply_local_cz(&k, &f.scale(2.0).unwrap()).unwrap();
        for (u, v) in a.samples().iter().zip(b.samples()) {
            assert_eq!(2.0 * u, *v);
        }
    }

    #[test]
    fn hilbert_values_converge_under_refinement() {
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        let gauss = |x: f64| (-4.0 * x * x).exp();
        let coarse_grid = make_grid(4, 9).unwrap();
        let fine_grid = make_grid(4, 10).unwrap();
        let coarse = apply_local_cz(&k, &GridFunction::from_fn(coarse_grid, gauss).unwrap()).unwrap();
        let fine = apply_local_cz(&k, &GridFunction::from_fn(fine_grid, gauss).unwrap()).unwrap();
        // coarse cell i is the union of fine cells 2i, 2i+1
        let scale = coarse.max_abs();
        let worst = coarse
            .samples()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let f = 0.5 * (fine.samples()[2 * i] + fine.samples()[2 * i + 1]);
                (c - f).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(worst / scale < 1e-3, "{}", worst / scale);
    }

    #[test]
    fn hilbert_values_match_a_principal_value_oracle() {
        let k = LocalCzKernel::hilbert_cut(1).unwrap();
        let gauss = |x: f64| (-4.0 * x * x).exp();
        let g = make_grid(4, 9).unwrap();
        let tf = apply_local_cz(&k, &GridFunction::from_fn(g, gauss).unwrap()).unwrap();
        // p.v. integral folded onto (0, 1) and resolved by a fine midpoint rule
        let n = 100_000;
        let ds = 1.0 / n as f64;
        for i in (0..g.len()).step_by(97) {
            let x = g.point(i);
            let exact = ds
                * (0..n)
                    .map(|m| {
                        let s = (m as f64 + 0.5) * ds;
                        cutoff(s) * (gauss(x - s) - gauss(x + s)) / s
                    })
                    .sum::<f64>();
            assert!((tf.samples()[i] - exact).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn projection_kernel_matches_synthesized_projection() {
        let sys = Arc::new(build_daubechies(3, 12).unwrap());
        let g = make_grid(4, 9).unwrap();
        let f = GridFunction::from_fn(g, |x| (-20.0 * (x - 0.2) * (x - 0.2)).exp()).unwrap();
        let c = analyze(&f, &sys, 0, 1).unwrap();
        let mut only = WaveletCoefficients::zeros(&sys, g, 0, 1);
        only.details[1] = c.details[1].clone();
        let projected = synthesize(&only, &sys, g).unwrap();
        let k = LocalCzKernel::wavelet_projection(sys, 1).unwrap();
        let tf = apply_local_cz(&k, &f).unwrap();
        let err = tf.sub(&projected).unwrap().max_abs();
        assert!(err < 1e-4 * projected.max_abs().max(1e-3), "{err}");
    }
}
