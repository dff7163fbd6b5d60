use crate::error::{Error, Result};
use crate::grid::{DyadicCube, GridFunction};

/// Level `λ = 2^{-n-2}` used throughout in dimension one.
pub const DEFAULT_LEVEL: f64 = 0.125;

/// `f*` on a cell set: the values `|f|` sorted nonincreasing, each of measure `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rearrangement {
    values: Vec<f64>,
    step: f64,
}

impl Rearrangement {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Total measure of the cell set.
    pub fn measure(&self) -> f64 {
        self.values.len() as f64 * self.step
    }

    /// `f*(t)`: the value on the cell containing `t`, 0 beyond the set.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        self.values.get((t / self.step).floor() as usize).copied().unwrap_or(0.0)
    }

    /// `Σ f* h`.
    pub fn integral(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }
}

pub fn decreasing_rearrangement(
    f: &GridFunction,
    cells: impl IntoIterator<Item = usize>,
) -> Result<Rearrangement> {
    let samples = f.samples();
    let mut values = Vec::new();
    for i in cells {
        let v = samples.get(i).ok_or_else(|| Error::Domain(format!("cell {i} outside the grid")))?;
        values.push(v.abs());
    }
    if values.is_empty() {
        return Err(Error::Domain("rearrangement over an empty cell set".into()));
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(Rearrangement { values, step: f.grid().step() })
}

fn sorted_on(f: &GridFunction, q: DyadicCube) -> Result<Vec<f64>> {
    let cells = q.cells(f.grid())?;
    let mut v = f.samples()[cells].to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Lower median of `f` on `Q`: the smallest sample value `a` with
/// `|{f > a}|, |{f < a}| ≤ |Q|/2`.
pub fn median(f: &GridFunction, q: DyadicCube) -> Result<f64> {
    Ok(lower_median_sorted(&sorted_on(f, q)?))
}

/// `ω_λ(f;Q) = inf_c ((f - c)χ_Q)*(λ|Q|)`.
pub fn mean_oscillation(f: &GridFunction, q: DyadicCube, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    Ok(oscillation_sorted(&sorted_on(f, q)?, lambda))
}

pub(crate) fn check_level(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Config(format!("oscillation level {lambda} not in (0, 1)")));
    }
    Ok(())
}

/// Lower median of ascending values.
pub(crate) fn lower_median_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let mut lo = 0;
    while lo < m {
        let a = sorted[lo];
        let mut hi = lo + 1;
        while hi < m && sorted[hi] == a {
            hi += 1;
        }
        if 2 * lo <= m && 2 * (m - hi) <= m {
            return a;
        }
        lo = hi;
    }
    f64::NAN
}

/// Mean oscillation of ascending values.
///
/// With `k = ⌊λm⌋`, `((f - c)χ_Q)*(λ|Q|)` is the `(k+1)`-th largest `|u_i - c|`,
/// so the infimum over `c` is half the narrowest spread of `m - k` consecutive
/// sorted values.
pub(crate) fn oscillation_sorted(sorted: &[f64], lambda: f64) -> f64 {
    let m = sorted.len();
    let k = ((lambda * m as f64) * (1.0 + 1e-12)).floor() as usize;
    let keep = m.saturating_sub(k);
    if keep <= 1 {
        return 0.0;
    }
    sorted.windows(keep).map(|w| 0.5 * (w[keep - 1] - w[0])).fold(f64::INFINITY, f64::min)
}
