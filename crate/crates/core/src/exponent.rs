//! Variable exponents, weights, dual weights, log-Hölder diagnostics and the
//! local Muckenhoupt constant over a finite interval family.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::norms::indicator_norm;
use crate::smooth::smooth_step;

/// Catalog description of an exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExponentSpec {
    /// `p ≡ c`.
    Constant(f64),
    /// C^∞ transition from `p1` to `p2` over `[x0 - delta/2, x0 + delta/2]`.
    SmoothStep { p1: f64, p2: f64, x0: f64, delta: f64 },
    /// Piecewise linear through `(x, p)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl ExponentSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ExponentSpec::Constant(c) => *c,
            ExponentSpec::SmoothStep { p1, p2, x0, delta } => {
                p1 + (p2 - p1) * smooth_step((x - x0) / delta + 0.5)
            }
            ExponentSpec::Table(knots) => {
                let (first, last) = (knots[0], knots[knots.len() - 1]);
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= x);
                let (a, b) = (knots[i - 1], knots[i]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ExponentSpec::Constant(_) => true,
            ExponentSpec::SmoothStep { p1, p2, .. } => p1 == p2,
            ExponentSpec::Table(k) => k.iter().all(|(_, p)| *p == k[0].1),
        }
    }
}

impl FromStr for ExponentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized exponent descriptor {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let mut parts = s.splitn(2, ':');
        let kind = parts.next().ok_or_else(bad)?;
        let rest = parts.next().unwrap_or("");
        match kind {
            "const" => Ok(ExponentSpec::Constant(num(rest)?)),
            "step" => {
                let v: Vec<f64> = rest.split(':').map(num).collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(bad());
                }
                if v[3] <= 0.0 {
                    return Err(Error::Config(format!("step width must be positive in {s:?}")));
                }
                Ok(ExponentSpec::SmoothStep { p1: v[0], p2: v[1], x0: v[2], delta: v[3] })
            }
            "table" => {
                let mut knots = Vec::new();
                for item in rest.split(',') {
                    let (x, p) = item.split_once('=').ok_or_else(bad)?;
                    knots.push((num(x)?, num(p)?));
                }
                knots.sort_by(|a, b| a.0.total_cmp(&b.0));
                if knots.is_empty() || knots.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(bad());
                }
                Ok(ExponentSpec::Table(knots))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ExponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentSpec::Constant(c) => write!(f, "const:{c}"),
            ExponentSpec::SmoothStep { p1, p2, x0, delta } => {
                write!(f, "step:{p1}:{p2}:{x0}:{delta}")
            }
            ExponentSpec::Table(k) => {
                let items: Vec<String> = k.iter().map(|(x, p)| format!("{x}={p}")).collect();
                write!(f, "table:{}", items.join(","))
            }
        }
    }
}

/// Catalog description of a weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    One,
    /// `e^{α|x|}`.
    Exp {
        alpha: f64,
    },
    /// `(1+|x|)^A`.
    Pow {
        a: f64,
    },
}

impl WeightSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightSpec::One => 1.0,
            WeightSpec::Exp { alpha } => (alpha * x.abs()).exp(),
            WeightSpec::Pow { a } => (1.0 + x.abs()).powf(a),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized weight descriptor {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match s.split_once(':') {
            None if s == "one" => Ok(WeightSpec::One),
            Some(("exp", a)) => Ok(WeightSpec::Exp { alpha: num(a)? }),
            Some(("pow", a)) => Ok(WeightSpec::Pow { a: num(a)? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::One => write!(f, "one"),
            WeightSpec::Exp { alpha } => write!(f, "exp:{alpha}"),
            WeightSpec::Pow { a } => write!(f, "pow:{a}"),
        }
    }
}

/// Grid-sampled exponent `p(·) ≥ 1` with cached `p₋`, `p₊`.
#[derive(Clone, Debug)]
pub struct VariableExponent {
    values: GridFunction,
    p_minus: f64,
    p_plus: f64,
    p_infinity: Option<f64>,
}

impl VariableExponent {
    pub fn new(values: GridFunction) -> Result<Self> {
        let mut p_minus = f64::INFINITY;
        let mut p_plus = f64::NEG_INFINITY;
        for (i, &p) in values.samples().iter().enumerate() {
            if p < 1.0 {
                return Err(Error::Exponent(format!("p = {p} < 1 at x = {}", values.grid().point(i))));
            }
            p_minus = p_minus.min(p);
            p_plus = p_plus.max(p);
        }
        Ok(Self { values, p_minus, p_plus, p_infinity: None })
    }

    pub fn from_fn(grid: Grid, p: impl Fn(f64) -> f64) -> Result<Self> {
        let values = GridFunction::from_fn(grid, p)
            .map_err(|e| Error::Exponent(format!("exponent must be finite: {e}")))?;
        Self::new(values)
    }

    pub fn from_spec(spec: &ExponentSpec, grid: Grid) -> Result<Self> {
        Self::from_fn(grid, |x| spec.eval(x))
    }

    /// Sets `p_∞` used by the log-Hölder diagnostic at infinity.
    pub fn with_p_infinity(mut self, p_inf: f64) -> Self {
        self.p_infinity = Some(p_inf);
        self
    }

    pub fn grid(&self) -> Grid {
        self.values.grid()
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn samples(&self) -> &[f64] {
        self.values.samples()
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_infinity(&self) -> Option<f64> {
        self.p_infinity
    }

    /// `p_∞` if set, else the sample at the right domain edge.
    pub fn p_infinity_or_edge(&self) -> f64 {
        self.p_infinity.unwrap_or_else(|| *self.samples().last().expect("grid is never empty"))
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Checks `1 < p₋ ≤ p₊ < ∞`.
    pub fn require_class_p(&self) -> Result<()> {
        if self.p_minus > 1.0 && self.p_plus.is_finite() {
            Ok(())
        } else {
            Err(Error::Exponent(format!(
                "need 1 < p- <= p+ < inf, have p- = {}, p+ = {}",
                self.p_minus, self.p_plus
            )))
        }
    }
}

/// Builds an exponent from a catalog descriptor.
pub fn make_exponent(spec: &ExponentSpec, grid: Grid) -> Result<VariableExponent> {
    VariableExponent::from_spec(spec, grid)
}

/// `p'(x) = p(x)/(p(x)-1)`.
pub fn conjugate_exponent(p: &VariableExponent) -> Result<VariableExponent> {
    if p.p_minus() <= 1.0 {
        return Err(Error::Exponent(format!("conjugate exponent unbounded: p- = {}", p.p_minus())));
    }
    let values = p.values().map(|e| e / (e - 1.0))?;
    let mut conj = VariableExponent::new(values)?;
    conj.p_infinity = p.p_infinity.map(|e| e / (e - 1.0));
    Ok(conj)
}

/// Grid-sampled weight, strictly positive and finite.
#[derive(Clone, Debug)]
pub struct Weight {
    values: GridFunction,
}

impl Weight {
    pub fn new(values: GridFunction) -> Result<Self> {
        if let Some(i) = values.samples().iter().position(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::Range(format!(
                "weight must be positive, got {} at x = {}",
                values.samples()[i],
                values.grid().point(i)
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(grid: Grid, w: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(GridFunction::from_fn(grid, w)?)
    }

    pub fn from_spec(spec: &WeightSpec, grid: Grid) -> Result<Self> {
        Self::from_fn(grid, |x| spec.eval(x))
    }

    pub fn grid(&self) -> Grid {
        self.values.grid()
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn samples(&self) -> &[f64] {
        self.values.samples()
    }
}

/// Builds a weight from a catalog descriptor.
pub fn make_weight(spec: &WeightSpec, grid: Grid) -> Result<Weight> {
    Weight::from_spec(spec, grid)
}

/// `σ = w^{-1/(p(·)-1)}`.
pub fn dual_weight(p: &VariableExponent, w: &Weight) -> Result<Weight> {
    same_grid(p.grid(), w.grid())?;
    if p.p_minus() <= 1.0 {
        return Err(Error::Exponent(format!("dual weight needs p- > 1, have {}", p.p_minus())));
    }
    let grid = w.grid();
    let mut out = Vec::with_capacity(grid.len());
    for (i, (&e, &wt)) in p.samples().iter().zip(w.samples()).enumerate() {
        let s = (-wt.ln() / (e - 1.0)).exp();
        if !s.is_finite() || s == 0.0 {
            return Err(Error::Range(format!(
                "dual weight w^(-1/(p-1)) leaves the representable range at x = {} (w = {wt}, p = {e})",
                grid.point(i)
            )));
        }
        out.push(s);
    }
    Weight::new(GridFunction::new(grid, out)?)
}

/// Estimated constants of the local and at-infinity log-Hölder conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHolderReport {
    /// `sup |p(x)-p(y)|·(-log|x-y|)` over sampled pairs with `0 < |x-y| ≤ 1/2`.
    pub c0: f64,
    /// `sup |p(x)-p_∞|·log(e+|x|)` over samples.
    pub c_inf: f64,
    pub p_infinity_used: f64,
}

pub fn log_holder_constants(p: &VariableExponent) -> Result<LogHolderReport> {
    let grid = p.grid();
    if grid.resolution() < 2 {
        return Err(Error::Resolution("log-Hölder scan needs h <= 1/4 (r >= 2)".into()));
    }
    let h = grid.step();
    let s = p.samples();
    let max_offset = (grid.cells_per_unit() / 2).min(s.len() - 1);
    let c0 = (1..=max_offset)
        .into_par_iter()
        .map(|d| {
            let factor = -(d as f64 * h).ln();
            let spread = s.iter().zip(&s[d..]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            spread * factor
        })
        .reduce(|| 0.0, f64::max);
    let p_inf = p.p_infinity_or_edge();
    let c_inf = s
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - p_inf).abs() * (std::f64::consts::E + grid.point(i).abs()).ln())
        .fold(0.0, f64::max);
    Ok(LogHolderReport { c0, c_inf, p_infinity_used: p_inf })
}

/// Run of cells `[start, start + len)` standing for a grid-aligned interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellInterval {
    pub start: usize,
    pub len: usize,
}

/// Finite family of intervals over which the local Muckenhoupt supremum is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CubeFamily {
    /// Intervals of side `2^-m`, `min_level ≤ m ≤ max_level`, starting every
    /// `stride` cells. `max_level = None` means the grid resolution.
    Aligned {
        min_level: u32,
        max_level: Option<u32>,
        stride: usize,
    },
    Explicit(Vec<CellInterval>),
}

impl Default for CubeFamily {
    fn default() -> Self {
        CubeFamily::Aligned { min_level: 0, max_level: None, stride: 1 }
    }
}

impl CubeFamily {
    pub fn intervals(&self, grid: Grid) -> Result<Vec<CellInterval>> {
        let n = grid.len();
        match self {
            CubeFamily::Aligned { min_level, max_level, stride } => {
                let r = grid.resolution();
                let max_level = max_level.unwrap_or(r).min(r);
                if *stride == 0 {
                    return Err(Error::Config("cube family stride must be positive".into()));
                }
                let mut out = Vec::new();
                for m in *min_level..=max_level {
                    let len = 1usize << (r - m);
                    if len > n {
                        continue;
                    }
                    out.extend((0..=n - len).step_by(*stride).map(|start| CellInterval { start, len }));
                }
                Ok(out)
            }
            CubeFamily::Explicit(list) => {
                let unit = grid.cells_per_unit();
                for q in list {
                    if q.len == 0 || q.start + q.len > n {
                        return Err(Error::Domain(format!("interval {q:?} outside the grid")));
                    }
                    if q.len > unit {
                        return Err(Error::Domain(format!(
                            "interval of length {} exceeds |Q| <= 1",
                            q.len as f64 / unit as f64
                        )));
                    }
                }
                Ok(list.clone())
            }
        }
    }
}

/// Lower bound for `[w]_{A^loc_{p(·)}}` over a finite family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlocEstimate {
    pub value: f64,
    /// Interval attaining the maximum, as `[left, right]`.
    pub argmax: (f64, f64),
    pub intervals_scanned: usize,
}

/// `|Q|^{-1}·‖χ_Q‖_{L^{p(·)}(w)}·‖χ_Q‖_{L^{p'(·)}(σ)}` on one interval.
pub fn a_loc_quantity(
    p: &VariableExponent,
    w: &Weight,
    conj: &VariableExponent,
    sigma: &Weight,
    q: CellInterval,
) -> Result<f64> {
    let cells = q.start..q.start + q.len;
    let a = indicator_norm(p, w, cells.clone())?;
    let b = indicator_norm(conj, sigma, cells)?;
    Ok(a * b / (q.len as f64 * p.grid().step()))
}

pub fn a_loc_constant(p: &VariableExponent, w: &Weight, family: &CubeFamily) -> Result<AlocEstimate> {
    p.require_class_p()?;
    same_grid(p.grid(), w.grid())?;
    let grid = p.grid();
    let conj = conjugate_exponent(p)?;
    let sigma = dual_weight(p, w)?;
    let intervals = family.intervals(grid)?;
    if intervals.is_empty() {
        return Err(Error::Config("empty cube family".into()));
    }
    let values: Vec<f64> =
        intervals.par_iter().map(|&q| a_loc_quantity(p, w, &conj, &sigma, q)).collect::<Result<_>>()?;
    let (best, value) =
        values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let q = intervals[best];
    let h = grid.step();
    Ok(AlocEstimate {
        value,
        argmax: (grid.lower() + q.start as f64 * h, grid.lower() + (q.start + q.len) as f64 * h),
        intervals_scanned: intervals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn step23() -> ExponentSpec {
        ExponentSpec::SmoothStep { p1: 2.0, p2: 3.0, x0: 0.0, delta: 1.0 }
    }

    #[test]
    fn parses_catalog_names() {
        assert_eq!("const:2".parse::<ExponentSpec>().unwrap(), ExponentSpec::Constant(2.0));
        assert_eq!("step:2:3:0:1".parse::<ExponentSpec>().unwrap(), step23());
        assert_eq!(
            "table:1=3,-1=2".parse::<ExponentSpec>().unwrap(),
            ExponentSpec::Table(vec![(-1.0, 2.0), (1.0, 3.0)])
        );
        assert!("step:2:3:0".parse::<ExponentSpec>().is_err());
        assert!("cubic:2".parse::<ExponentSpec>().is_err());
        assert_eq!("one".parse::<WeightSpec>().unwrap(), WeightSpec::One);
        assert_eq!("exp:1".parse::<WeightSpec>().unwrap(), WeightSpec::Exp { alpha: 1.0 });
        assert_eq!("pow:3".parse::<WeightSpec>().unwrap(), WeightSpec::Pow { a: 3.0 });
        assert!("pow".parse::<WeightSpec>().is_err());
        for s in ["const:2.5", "step:2:3:0:1", "table:-1=2,0=2.5"] {
            assert_eq!(s.parse::<ExponentSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn constant_exponent_extrema() {
        let g = make_grid(2, 6).unwrap();
        let p = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        assert_eq!((p.p_minus(), p.p_plus()), (2.0, 2.0));
        let lh = log_holder_constants(&p).unwrap();
        assert_eq!((lh.c0, lh.c_inf), (0.0, 0.0));
    }

    #[test]
    fn smooth_step_extrema_and_edge_value() {
        let g = make_grid(2, 6).unwrap();
        let p = make_exponent(&step23(), g).unwrap();
        assert_eq!((p.p_minus(), p.p_plus()), (2.0, 3.0));
        assert_eq!(p.p_infinity_or_edge(), 3.0);
        let lh = log_holder_constants(&p).unwrap();
        assert!(lh.c0.is_finite() && lh.c0 > 0.0);
        assert_eq!(lh.p_infinity_used, 3.0);
    }

    #[test]
    fn rejects_exponents_below_one() {
        let g = make_grid(1, 4).unwrap();
        let spec: ExponentSpec = "table:-1=2,0=0.9,1=2".parse().unwrap();
        assert!(matches!(make_exponent(&spec, g), Err(Error::Exponent(_))));
        assert!(matches!(VariableExponent::from_fn(g, |_| f64::INFINITY), Err(Error::Exponent(_))));
    }

    #[test]
    fn conjugates() {
        let g = make_grid(2, 6).unwrap();
        let p2 = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        assert!(conjugate_exponent(&p2).unwrap().samples().iter().all(|&v| v == 2.0));
        let p = make_exponent(&ExponentSpec::Constant(1.5), g).unwrap();
        let c = conjugate_exponent(&p).unwrap();
        assert!(c.samples().iter().all(|&v| (v - 3.0).abs() < 1e-15));
        let c = conjugate_exponent(&make_exponent(&step23(), g).unwrap()).unwrap();
        assert_eq!((c.p_minus(), c.p_plus()), (1.5, 2.0));
        let one = make_exponent(&ExponentSpec::Constant(1.0), g).unwrap();
        assert!(matches!(conjugate_exponent(&one), Err(Error::Exponent(_))));
    }

    #[test]
    fn dual_weight_examples() {
        let g = make_grid(2, 6).unwrap();
        let p2 = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        let one = make_weight(&WeightSpec::One, g).unwrap();
        assert!(dual_weight(&p2, &one).unwrap().samples().iter().all(|&v| v == 1.0));
        let ex = Weight::from_fn(g, f64::exp).unwrap();
        let s = dual_weight(&p2, &ex).unwrap();
        for (x, v) in g.points().zip(s.samples()) {
            assert!((v / (-x).exp() - 1.0).abs() < 1e-14);
        }
        let p3 = make_exponent(&ExponentSpec::Constant(3.0), g).unwrap();
        let w = make_weight(&WeightSpec::Pow { a: 2.0 }, g).unwrap();
        let s = dual_weight(&p3, &w).unwrap();
        for (x, v) in g.points().zip(s.samples()) {
            assert!((v * (1.0 + x.abs()) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_weight_range_guard() {
        let g = make_grid(8, 4).unwrap();
        let p = make_exponent(&ExponentSpec::Constant(1.001), g).unwrap();
        let w = make_weight(&WeightSpec::Exp { alpha: 1.0 }, g).unwrap();
        assert!(matches!(dual_weight(&p, &w), Err(Error::Range(_))));
    }

    #[test]
    fn dual_weight_is_an_involution() {
        let g = make_grid(3, 6).unwrap();
        let p = make_exponent(&step23(), g).unwrap();
        for spec in [WeightSpec::One, WeightSpec::Exp { alpha: 1.0 }, WeightSpec::Pow { a: 3.0 }] {
            let w = make_weight(&spec, g).unwrap();
            let sigma = dual_weight(&p, &w).unwrap();
            let back = dual_weight(&conjugate_exponent(&p).unwrap(), &sigma).unwrap();
            for (a, b) in w.samples().iter().zip(back.samples()) {
                assert!((a - b).abs() <= 1e-12 * a, "{spec}: {a} vs {b}");
            }
        }
    }

    /// `t·(-ln t)` peaks at `t = 1/e`.
    #[test]
    fn lipschitz_exponent_constant_below_inverse_e() {
        let oracle = (1..=100_000)
            .map(|i| {
                let t = 0.5 * i as f64 / 100_000.0;
                -t * t.ln()
            })
            .fold(0.0, f64::max);
        assert!((oracle - (-1.0f64).exp()).abs() < 1e-8);
        let g = make_grid(3, 8).unwrap();
        let p = VariableExponent::from_fn(g, |x| 2.0 + x.abs().min(1.0)).unwrap();
        let lh = log_holder_constants(&p).unwrap();
        assert!(lh.c0 <= oracle + 1e-12, "{}", lh.c0);
        assert!(lh.c0 > 0.9 * oracle);
    }

    #[test]
    fn hard_step_constant_grows_with_resolution() {
        for r in 3..10 {
            let g = make_grid(1, r).unwrap();
            let p = VariableExponent::from_fn(g, |x| if x >= 0.0 { 3.0 } else { 2.0 }).unwrap();
            let lh = log_holder_constants(&p).unwrap();
            assert!((lh.c0 - r as f64 * std::f64::consts::LN_2).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn a_loc_unweighted_constant_is_one() {
        let g = make_grid(2, 6).unwrap();
        let p = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        let w = make_weight(&WeightSpec::One, g).unwrap();
        let est = a_loc_constant(&p, &w, &CubeFamily::default()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_loc_exponential_weight_matches_sinh_form() {
        let g = make_grid(2, 10).unwrap();
        let p = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        let w = Weight::from_fn(g, f64::exp).unwrap();
        let oracle = |t: f64| ((t.exp() - 1.0) * (1.0 - (-t).exp())).sqrt() / t;
        assert!((oracle(1.0) - 2.0 * 0.5f64.sinh()).abs() < 1e-14);
        let fam = CubeFamily::Explicit(vec![CellInterval { start: g.cells_in(0.0, 1.0).start, len: 1024 }]);
        let est = a_loc_constant(&p, &w, &fam).unwrap();
        assert!((est.value - oracle(1.0)).abs() < 1e-4);
        let all = a_loc_constant(&p, &w, &CubeFamily::default()).unwrap();
        assert!((all.value - oracle(1.0)).abs() < 1e-4);
        assert_eq!(all.argmax.1 - all.argmax.0, 1.0);
    }

    #[test]
    fn a_loc_rejects_large_cubes() {
        let g = make_grid(2, 4).unwrap();
        let p = make_exponent(&ExponentSpec::Constant(2.0), g).unwrap();
        let w = make_weight(&WeightSpec::One, g).unwrap();
        let fam = CubeFamily::Explicit(vec![CellInterval { start: 0, len: 32 }]);
        assert!(matches!(a_loc_constant(&p, &w, &fam), Err(Error::Domain(_))));
    }

    #[test]
    fn a_loc_is_symmetric_under_duality() {
        let g = make_grid(2, 6).unwrap();
        let p = make_exponent(&step23(), g).unwrap();
        let w = make_weight(&WeightSpec::Pow { a: 3.0 }, g).unwrap();
        let conj = conjugate_exponent(&p).unwrap();
        let sigma = dual_weight(&p, &w).unwrap();
        let fam = CubeFamily::Aligned { min_level: 0, max_level: None, stride: 5 };
        for q in fam.intervals(g).unwrap() {
            let a = a_loc_quantity(&p, &w, &conj, &sigma, q).unwrap();
            let b = a_loc_quantity(&conj, &sigma, &p, &w, q).unwrap();
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
