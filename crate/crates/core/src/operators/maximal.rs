use rayon::prelude::*;

use crate::grid::GridFunction;

/// Local maximal operator `M^loc` applied `iterations` times.
///
/// At each cell, the largest average of `|f|` over grid-aligned windows of
/// length at most 1 that contain the cell. Zero iterations return `|f|`.
pub fn m_loc(f: &GridFunction, iterations: usize) -> GridFunction {
    let grid = f.grid();
    let mut g = f.abs();
    for _ in 0..iterations {
        let samples = window_max(g.samples(), grid.cells_per_unit());
        g = GridFunction::new(grid, samples).expect("averages of finite samples are finite");
    }
    g
}

/// Hardy–Littlewood maximal function over all windows inside the domain.
pub fn full_maximal(f: &GridFunction) -> GridFunction {
    let grid = f.grid();
    let samples = window_max(f.abs().samples(), grid.len());
    GridFunction::new(grid, samples).expect("averages of finite samples are finite")
}

/// For every cell, the maximum over windows of `1..=max_len` cells that
/// contain it of the window average of `a` (nonnegative).
fn window_max(a: &[f64], max_len: usize) -> Vec<f64> {
    let n = a.len();
    let max_len = max_len.min(n);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in a {
        acc += v;
        prefix.push(acc);
    }
    let merge = |mut x: Scratch, y: Scratch| {
        for (u, v) in x.best.iter_mut().zip(y.best) {
            if v > *u {
                *u = v;
            }
        }
        x
    };
    (2..=max_len)
        .into_par_iter()
        .fold(
            || Scratch::new(a),
            |mut scratch, len| {
                scratch.update(&prefix, len);
                scratch
            },
        )
        .reduce(|| Scratch::new(a), merge)
        .best
}

/// Running maxima plus buffers reused across window lengths.
struct Scratch {
    best: Vec<f64>,
    avg: Vec<f64>,
    pre: Vec<f64>,
    suf: Vec<f64>,
}

impl Scratch {
    fn new(a: &[f64]) -> Self {
        let n = a.len();
        Scratch { best: a.to_vec(), avg: vec![0.0; n], pre: vec![0.0; n], suf: vec![0.0; n] }
    }

    /// `best[i] = max(best[i], max avg[s] for s ∈ [i+1-len, i])`, by maxima
    /// over blocks of `len` starts: any such range meets at most two blocks.
    fn update(&mut self, prefix: &[f64], len: usize) {
        let n = self.best.len();
        let m = n - len + 1;
        let (avg, pre, suf) = (&mut self.avg[..m], &mut self.pre[..m], &mut self.suf[..m]);
        let width = len as f64;
        for ((v, hi), lo) in avg.iter_mut().zip(&prefix[len..]).zip(prefix) {
            *v = (hi - lo) / width;
        }
        for ((block, p), q) in avg.chunks(len).zip(pre.chunks_mut(len)).zip(suf.chunks_mut(len)) {
            let mut run = f64::NEG_INFINITY;
            for (v, p) in block.iter().zip(p.iter_mut()) {
                run = larger(run, *v);
                *p = run;
            }
            run = f64::NEG_INFINITY;
            for (v, q) in block.iter().zip(q.iter_mut()).rev() {
                run = larger(run, *v);
                *q = run;
            }
        }
        let best = &mut self.best;
        let head = (len - 1).min(n);
        for (i, b) in best[..head].iter_mut().enumerate() {
            *b = larger(*b, pre[i.min(m - 1)]);
        }
        if head < m {
            for ((b, q), p) in best[head..m].iter_mut().zip(&suf[..]).zip(&pre[head..]) {
                *b = larger(*b, larger(*q, *p));
            }
        }
        let last_block = (m - 1) / len * len;
        let tail = head.max(m);
        for (i, b) in best.iter_mut().enumerate().skip(tail) {
            let lo = i + 1 - len;
            let v = if lo >= last_block { suf[lo] } else { larger(suf[lo], pre[m - 1]) };
            *b = larger(*b, v);
        }
    }
}

#[inline]
fn larger(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}
