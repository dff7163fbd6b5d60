use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::smooth::{bump, smooth_step};
use crate::wavelets::{Atom, WaveletSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    Gaussian,
    Bump,
    Atom,
    Expansion,
    MollifiedIndicator,
    PiecewiseSmooth,
    Random,
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CorpusKind::Gaussian => "gaussian",
            CorpusKind::Bump => "bump",
            CorpusKind::Atom => "atom",
            CorpusKind::Expansion => "expansion",
            CorpusKind::MollifiedIndicator => "mollified-indicator",
            CorpusKind::PiecewiseSmooth => "piecewise-smooth",
            CorpusKind::Random => "random",
        };
        f.write_str(s)
    }
}

type Shape = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A seeded test function, defined pointwise so it can be sampled on any grid.
#[derive(Clone)]
pub struct CorpusFunction {
    pub id: String,
    pub kind: CorpusKind,
    pub description: String,
    shape: Shape,
}

impl fmt::Debug for CorpusFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusFunction")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

impl CorpusFunction {
    pub fn new(
        id: impl Into<String>,
        kind: CorpusKind,
        description: impl Into<String>,
        shape: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CorpusFunction { id: id.into(), kind, description: description.into(), shape: Arc::new(shape) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.shape)(x)
    }

    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

const KIND_CYCLE: [CorpusKind; 5] = [
    CorpusKind::Atom,
    CorpusKind::Gaussian,
    CorpusKind::Bump,
    CorpusKind::Expansion,
    CorpusKind::MollifiedIndicator,
];

/// Translates `k` at level `j` whose atom support lies in `[lo, hi]`.
fn admissible(sys: &WaveletSystem, level: i32, lo: f64, hi: f64) -> Option<(i64, i64)> {
    let scale = (level as f64).exp2();
    let first = (lo * scale).ceil() as i64;
    let last = (hi * scale - sys.support_length() as f64).floor() as i64;
    (first <= last).then_some((first, last))
}

/// `2^{j/2} F(2^j x - k)`.
fn atom_shape(sys: Arc<WaveletSystem>, atom: Atom, level: i32, index: i64) -> impl Fn(f64) -> f64 {
    let scale = (level as f64).exp2();
    let amp = scale.sqrt();
    move |x| amp * sys.eval(atom, scale * x - index as f64)
}

/// The equivalence corpus: wavelet atoms (the first is `φ_{J,k}`), Gaussians
/// `e^{-a(x-b)^2}`, smooth bumps, random finite expansions on levels
/// `J..=J+3`, and indicators whose edges are smoothed over `[a - 4h, a + 4h]`,
/// cycled in that order.
///
/// Atoms and expansions only use translates supported at least the analysis
/// margin `2^{-j_max}(2N-1)` away from the boundary, so every function can be
/// analyzed up to `top_level`.
pub fn equivalence_corpus(
    seed: u64,
    size: usize,
    grid: Grid,
    sys: Arc<WaveletSystem>,
    base_level: i32,
    top_level: i32,
) -> Result<Vec<CorpusFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = (-(top_level as f64)).exp2() * sys.support_length() as f64;
    let (lo, hi) = (grid.lower() + margin, grid.upper() - margin);
    let center_span = (0.25 * grid.upper()).min(1.0);
    let h = grid.step();
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let id = format!("f{i:02}");
        let f = match KIND_CYCLE[i % KIND_CYCLE.len()] {
            CorpusKind::Atom => {
                let (atom, level) = if i == 0 {
                    (Atom::Scaling, base_level)
                } else {
                    (Atom::Wavelet, base_level + rng.gen_range(0..=2))
                };
                let highest = if atom == Atom::Scaling { base_level } else { base_level + 3 };
                let (level, (first, last)) = (level..=highest)
                    .find_map(|j| admissible(&sys, j, lo, hi).map(|r| (j, r)))
                    .ok_or_else(|| Error::Config(format!("no atom fits inside [{lo}, {hi}]")))?;
                let k = rng.gen_range(first..=last);
                let name = if atom == Atom::Scaling { "phi" } else { "psi" };
                CorpusFunction::new(
                    id,
                    CorpusKind::Atom,
                    format!("{name}_{{{level},{k}}}"),
                    atom_shape(sys.clone(), atom, level, k),
                )
            }
            CorpusKind::Gaussian => {
                let a = rng.gen_range(4.0..16.0);
                let b = rng.gen_range(-center_span..center_span);
                CorpusFunction::new(id, CorpusKind::Gaussian, format!("exp(-{a}(x-{b})^2)"), move |x| {
                    (-a * (x - b) * (x - b)).exp()
                })
            }
            CorpusKind::Bump => {
                let c = rng.gen_range(0.5..2.0);
                let b = rng.gen_range(-center_span..center_span);
                let s = rng.gen_range(0.5..1.5f64).min(hi - b).min(b - lo);
                CorpusFunction::new(id, CorpusKind::Bump, format!("{c}*bump((x-{b})/{s})"), move |x| {
                    c * bump((x - b) / s)
                })
            }
            CorpusKind::Expansion => {
                let mut terms = Vec::new();
                for _ in 0..6 {
                    let level = base_level + rng.gen_range(0..=3);
                    let coef = rng.gen_range(-1.0..1.0);
                    if let Some((first, last)) = admissible(&sys, level, lo, hi) {
                        let k = rng.gen_range(first..=last);
                        terms.push((level, k, coef));
                    }
                }
                if terms.is_empty() {
                    return Err(Error::Config(format!("no expansion term fits inside [{lo}, {hi}]")));
                }
                let description = terms
                    .iter()
                    .map(|(j, k, c)| format!("{c}*psi_{{{j},{k}}}"))
                    .collect::<Vec<_>>()
                    .join(" + ");
                let shapes: Vec<_> = terms
                    .iter()
                    .map(|&(j, k, c)| (c, atom_shape(sys.clone(), Atom::Wavelet, j, k)))
                    .collect();
                CorpusFunction::new(id, CorpusKind::Expansion, description, move |x| {
                    shapes.iter().map(|(c, s)| c * s(x)).sum()
                })
            }
            CorpusKind::MollifiedIndicator => {
                let a = rng.gen_range(-center_span..0.0);
                let b = a + rng.gen_range(0.5..2.0f64).min(hi - a);
                let width = 8.0 * h;
                CorpusFunction::new(
                    id,
                    CorpusKind::MollifiedIndicator,
                    format!("chi_[{a},{b}] smoothed over {width}"),
                    move |x| smooth_step((x - a) / width + 0.5) * (1.0 - smooth_step((x - b) / width + 0.5)),
                )
            }
            _ => unreachable!(),
        };
        out.push(f);
    }
    Ok(out)
}

/// Functions on `[0, 1]` with four random sine terms, up to three jumps and a
/// quadratic drift, for the sparse-domination checks.
pub fn piecewise_smooth_corpus(seed: u64, count: usize) -> Vec<CorpusFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let terms: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..12.0), rng.gen_range(0.0..TAU)))
                .collect();
            let jumps: Vec<(f64, f64)> = (0..rng.gen_range(0..=3))
                .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let q = rng.gen_range(-1.0..1.0);
            let description = format!("sines {terms:?}, jumps {jumps:?}, {q}x^2");
            CorpusFunction::new(format!("g{i:02}"), CorpusKind::PiecewiseSmooth, description, move |x| {
                let mut v: f64 = terms.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum();
                for &(s, height) in &jumps {
                    if x > s {
                        v += height;
                    }
                }
                v + q * x * x
            })
        })
        .collect()
}

/// Sum of three signed Gaussians centered in `[-L/2, L/2]`.
pub fn random_smooth(rng: &mut impl Rng, id: impl Into<String>, half_width: u32) -> CorpusFunction {
    let span = 0.5 * half_width as f64;
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(1.0..8.0), rng.gen_range(-span..span)))
        .collect();
    CorpusFunction::new(id, CorpusKind::Random, format!("gaussians {terms:?}"), move |x| {
        terms.iter().map(|(c, a, b)| c * (-a * (x - b) * (x - b)).exp()).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::wavelets::{analyze, build_daubechies, dilate_translate};

    fn setup() -> (Grid, Arc<WaveletSystem>) {
        (make_grid(4, 10).unwrap(), Arc::new(build_daubechies(3, 12).unwrap()))
    }

    #[test]
    fn seeded_and_reproducible() {
        let (g, sys) = setup();
        let a = equivalence_corpus(42, 20, g, sys.clone(), 0, 5).unwrap();
        let b = equivalence_corpus(42, 20, g, sys.clone(), 0, 5).unwrap();
        let c = equivalence_corpus(43, 20, g, sys, 0, 5).unwrap();
        assert_eq!(a.len(), 20);
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(x.description, y.description);
            assert_eq!(x.sample(g).unwrap(), y.sample(g).unwrap());
            assert_eq!(x.kind, z.kind);
        }
        assert!(a.iter().zip(&c).any(|(x, z)| x.description != z.description));
        for kind in KIND_CYCLE {
            assert_eq!(a.iter().filter(|f| f.kind == kind).count(), 4);
        }
    }

    #[test]
    fn first_function_is_a_scaling_atom() {
        let (g, sys) = setup();
        let corpus = equivalence_corpus(7, 5, g, sys.clone(), 0, 5).unwrap();
        let k: i64 = corpus[0].description.trim_end_matches('}').rsplit(',').next().unwrap().parse().unwrap();
        let direct = dilate_translate(&sys, Atom::Scaling, 0, k, g).unwrap();
        let sampled = corpus[0].sample(g).unwrap();
        assert!(sampled.sub(&direct).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn every_function_passes_the_analysis_margin() {
        let (g, sys) = setup();
        for f in equivalence_corpus(42, 20, g, sys.clone(), 0, 5).unwrap() {
            let s = f.sample(g).unwrap();
            assert!(s.max_abs() > 0.1, "{}", f.description);
            analyze(&s, &sys, 0, 5).unwrap_or_else(|e| panic!("{}: {e}", f.description));
        }
    }

    #[test]
    fn mollified_edges_span_eight_cells() {
        let (g, sys) = setup();
        let corpus = equivalence_corpus(42, 5, g, sys, 0, 5).unwrap();
        let f = corpus[4].sample(g).unwrap();
        let ramp = f.samples().iter().filter(|&&v| v > 1e-12 && v < 1.0 - 1e-12).count();
        assert_eq!(ramp, 16);
    }

    #[test]
    fn piecewise_corpus_has_jumps() {
        let corpus = piecewise_smooth_corpus(42, 50);
        assert_eq!(corpus.len(), 50);
        assert!(corpus.iter().filter(|f| !f.description.contains("jumps []")).count() > 25);
        let again = piecewise_smooth_corpus(42, 50);
        assert_eq!(corpus[17].eval(0.3), again[17].eval(0.3));
    }
}
