//! Sparse families dominating `|g - Med(g;Q)|` by `Σ_S ω_{1/8}(g;S) χ_S`.
//!
//! For a dyadic family `𝓢`, disjoint nutshells with `|K(S)| ≥ |S|/2` exist iff
//! every member carries at most `|S|` cells of nutshell demand `⌈|S|/2⌉`
//! counted over its own subtree; nutshells are then assigned greedily from
//! the smallest cubes up. The family itself is chosen by an exact dynamic
//! program over the dyadic tree of `Q` that minimizes the demand subject to
//! pointwise domination.

use std::collections::HashMap;

use serde::Serialize;

use super::oscillation::{lower_median_sorted, oscillation_sorted, DEFAULT_LEVEL};
use crate::error::{Error, Result};
use crate::grid::{DyadicCube, GridFunction};

/// One member `S` of a sparse family with its nutshell `K(S)` and `ω_{1/8}(g;S)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseMember {
    pub cube: DyadicCube,
    pub nutshell: Vec<usize>,
    pub oscillation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseFamily {
    pub root: DyadicCube,
    pub root_median: f64,
    pub members: Vec<SparseMember>,
}

/// Outcome of checking the structural invariants and the domination inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseCheck {
    pub root_included: bool,
    pub descendants: bool,
    pub nutshells_disjoint: bool,
    pub nutshells_large: bool,
    pub domination_violations: usize,
    /// Largest `|g - Med| - Σ ω χ_S` over the root cells.
    pub worst_excess: f64,
}

impl SparseCheck {
    pub fn passed(&self) -> bool {
        self.root_included
            && self.descendants
            && self.nutshells_disjoint
            && self.nutshells_large
            && self.domination_violations == 0
    }
}

impl SparseFamily {
    /// `Σ_S ω(S) χ_S` on the cells of the root, in cell order.
    pub fn dominating_sum(&self, g: &GridFunction) -> Result<Vec<f64>> {
        let root_cells = self.root.cells(g.grid())?;
        let mut sum = vec![0.0; root_cells.len()];
        for m in &self.members {
            let cells = m.cube.cells(g.grid())?;
            for v in &mut sum[cells.start - root_cells.start..cells.end - root_cells.start] {
                *v += m.oscillation;
            }
        }
        Ok(sum)
    }

    /// Checks every invariant directly against `g`.
    pub fn verify(&self, g: &GridFunction) -> Result<SparseCheck> {
        let grid = g.grid();
        let root_cells = self.root.cells(grid)?;
        let root_included = self.members.iter().any(|m| m.cube == self.root);
        let descendants = self.members.iter().all(|m| m.cube.is_descendant_of(&self.root));
        let mut owner = vec![false; grid.len()];
        let mut nutshells_disjoint = true;
        let mut nutshells_large = true;
        for m in &self.members {
            let cells = m.cube.cells(grid)?;
            if 2 * m.nutshell.len() < cells.len() {
                nutshells_large = false;
            }
            for &c in &m.nutshell {
                if !cells.contains(&c) || owner[c] {
                    nutshells_disjoint = false;
                } else {
                    owner[c] = true;
                }
            }
        }
        let sum = self.dominating_sum(g)?;
        let tol = domination_tolerance(
            g.samples()[root_cells.clone()].iter().map(|v| (v - self.root_median).abs()),
        );
        let mut violations = 0;
        let mut worst = f64::NEG_INFINITY;
        for (s, v) in sum.iter().zip(&g.samples()[root_cells]) {
            let excess = (v - self.root_median).abs() - s;
            worst = worst.max(excess);
            if excess > tol {
                violations += 1;
            }
        }
        Ok(SparseCheck {
            root_included,
            descendants,
            nutshells_disjoint,
            nutshells_large,
            domination_violations: violations,
            worst_excess: worst,
        })
    }
}

fn domination_tolerance(needs: impl Iterator<Item = f64>) -> f64 {
    1e-12 * needs.fold(1.0f64, f64::max)
}

/// Per-node data of the dyadic tree below the root, level by level.
struct Tree {
    depth: usize,
    oscillation: Vec<Vec<f64>>,
    max_need: Vec<Vec<f64>>,
    tol: f64,
    memo: HashMap<(usize, usize, u64), Option<usize>>,
}

impl Tree {
    fn cells(&self, d: usize) -> usize {
        1 << (self.depth - d)
    }

    fn demand(&self, d: usize) -> usize {
        self.cells(d).div_ceil(2)
    }

    /// Least nutshell demand of a family inside node `(d, i)` that raises the
    /// inherited credit `credit` to the need at every cell; `None` if impossible.
    fn load(&mut self, d: usize, i: usize, credit: f64) -> Option<usize> {
        if self.max_need[d][i] <= credit + self.tol {
            return Some(0);
        }
        if d == self.depth {
            return None;
        }
        let key = (d, i, credit.to_bits());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let exclude = self.children_load(d, i, credit);
        let include = self.include_load(d, i, credit);
        let best = match (exclude, include) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.memo.insert(key, best);
        best
    }

    fn children_load(&mut self, d: usize, i: usize, credit: f64) -> Option<usize> {
        let a = self.load(d + 1, 2 * i, credit)?;
        let b = self.load(d + 1, 2 * i + 1, credit)?;
        Some(a + b)
    }

    fn include_load(&mut self, d: usize, i: usize, credit: f64) -> Option<usize> {
        let omega = self.oscillation[d][i];
        if omega <= 0.0 {
            return None;
        }
        let below = if d == self.depth { 0 } else { self.children_load(d, i, credit + omega)? };
        let demand = self.demand(d);
        (below + demand <= self.cells(d)).then_some(below + demand)
    }

    /// Replays the optimal choices, collecting included nodes.
    fn collect(&mut self, d: usize, i: usize, credit: f64, out: &mut Vec<(usize, usize)>) {
        if self.max_need[d][i] <= credit + self.tol || d == self.depth {
            return;
        }
        let exclude = self.children_load(d, i, credit);
        let include = self.include_load(d, i, credit);
        let take = match (exclude, include) {
            (Some(a), Some(b)) => b < a,
            (None, Some(_)) => true,
            _ => false,
        };
        let next = if take {
            out.push((d, i));
            credit + self.oscillation[d][i]
        } else {
            credit
        };
        self.collect(d + 1, 2 * i, next, out);
        self.collect(d + 1, 2 * i + 1, next, out);
    }

    /// Whether the root, always a member, admits a dominating family when it
    /// contributes `credit`.
    fn root_feasible(&mut self, credit: f64) -> bool {
        if self.depth == 0 || self.max_need[0][0] <= credit + self.tol {
            return true;
        }
        self.children_load(0, 0, credit).is_some_and(|below| below + self.demand(0) <= self.cells(0))
    }
}

/// Sparse family for `g` on `Q` such that
/// `|g(x) - Med(g;Q)| ≤ Σ_{S ∈ 𝓢} ω_{1/8}(g;S) χ_S(x)` at every cell of `Q`.
///
/// Returns [`Error::DominationInfeasible`] with the root contribution that
/// would be required when no dyadic family satisfies the inequality.
pub fn sparse_decompose(g: &GridFunction, q: DyadicCube) -> Result<SparseFamily> {
    let grid = g.grid();
    let root_cells = q.cells(grid)?;
    let values = &g.samples()[root_cells.clone()];
    let depth = (grid.resolution() as i32 - q.level) as usize;

    // bottom-up sorted runs give ω and the median of every node
    let mut level_sorted: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let mut oscillation = vec![Vec::new(); depth + 1];
    let mut sorted_root = Vec::new();
    for d in (0..=depth).rev() {
        oscillation[d] = level_sorted.iter().map(|s| oscillation_sorted(s, DEFAULT_LEVEL)).collect();
        if d == 0 {
            sorted_root = level_sorted.pop().expect("root run");
            break;
        }
        level_sorted = level_sorted.chunks(2).map(|pair| merge_sorted(&pair[0], &pair[1])).collect();
    }
    let root_median = lower_median_sorted(&sorted_root);
    let needs: Vec<f64> = values.iter().map(|v| (v - root_median).abs()).collect();
    let mut max_need = vec![Vec::new(); depth + 1];
    max_need[depth] = needs.clone();
    for d in (0..depth).rev() {
        max_need[d] = max_need[d + 1].chunks(2).map(|p| p[0].max(p[1])).collect();
    }

    let mut tree = Tree {
        depth,
        oscillation,
        max_need,
        tol: domination_tolerance(needs.iter().copied()),
        memo: HashMap::new(),
    };
    let omega_root = tree.oscillation[0][0];
    if !tree.root_feasible(omega_root) {
        let (mut lo, mut hi) = (omega_root, tree.max_need[0][0]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tree.root_feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Err(Error::DominationInfeasible { required: hi, available: omega_root });
    }

    let mut chosen = vec![(0usize, 0usize)];
    if depth > 0 {
        tree.collect(1, 0, omega_root, &mut chosen);
        tree.collect(1, 1, omega_root, &mut chosen);
    }
    // smallest cubes claim their nutshells first
    chosen.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut used = vec![false; values.len()];
    let mut members = Vec::with_capacity(chosen.len());
    for (d, i) in chosen {
        let size = tree.cells(d);
        let start = i * size;
        let nutshell: Vec<usize> = (start..start + size).filter(|&c| !used[c]).take(tree.demand(d)).collect();
        if nutshell.len() < tree.demand(d) {
            return Err(Error::Internal(format!("nutshell of level-{d} node {i} is short")));
        }
        for &c in &nutshell {
            used[c] = true;
        }
        let shift = d as u32;
        members.push(SparseMember {
            cube: DyadicCube::new(q.level + d as i32, (q.index << shift) + i as i64),
            nutshell: nutshell.into_iter().map(|c| c + root_cells.start).collect(),
            oscillation: tree.oscillation[d][i],
        });
    }
    members.sort_by_key(|m| m.cube);
    Ok(SparseFamily { root: q, root_median, members })
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
