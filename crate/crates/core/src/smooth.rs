//! C^∞ transition and bump profiles shared by the exponent catalog, the
//! kernel cutoff and the function corpus.

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, strictly increasing in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = flat(t);
        a / (a + flat(1.0 - t))
    }
}

/// Even C^∞ cutoff equal to 1 on `[-1/2, 1/2]` and 0 outside `(-1, 1)`.
pub fn cutoff(t: f64) -> f64 {
    1.0 - smooth_step(2.0 * t.abs() - 1.0)
}

/// Standard bump `exp(-1/(1-u²))` on `(-1, 1)`, normalized to peak 1.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}
