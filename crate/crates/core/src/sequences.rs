//! Fractional-part sequences, circular gap statistics, and the directions of
//! a shifted lattice as seen from an observer.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Sorted points on the circle ℝ/ℤ with their consecutive gaps.
///
/// `gaps[i]` is the distance from `values[i]` to the next value, and the last
/// gap wraps around to `1 + values[0]`. Repeated values are kept and give
/// zero gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSample {
    pub values: Vec<f64>,
    pub gaps: Vec<f64>,
    pub scaled_gaps: Vec<f64>,
    pub n_points: usize,
}

fn isqrt(n: u64) -> u64 {
    let mut k = (n as f64).sqrt() as u64;
    while k * k > n {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= n {
        k += 1;
    }
    k
}

/// `√n mod 1` computed without cancellation: `(n − k²)/(√n + k)` with
/// `k = ⌊√n⌋`. Perfect squares give exactly `0.0`.
pub fn frac_sqrt_one(n: u64) -> f64 {
    let k = isqrt(n);
    let r = n - k * k;
    if r == 0 {
        return 0.0;
    }
    r as f64 / ((n as f64).sqrt() + k as f64)
}

/// `√n mod 1` for `n = 1..=n_max`, in index order.
pub fn frac_sqrt(n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::pre("n_max must be at least 1"));
    }
    Ok((1..=n_max as u64)
        .into_par_iter()
        .map(frac_sqrt_one)
        .collect())
}

/// `n^β mod 1` for `n = 1..=n_max`, `0 < β < 1`.
pub fn frac_power(n_max: usize, beta: f64) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::pre("n_max must be at least 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::pre(format!("beta must lie in (0, 1), got {beta}")));
    }
    if beta == 0.5 {
        return frac_sqrt(n_max);
    }
    Ok((1..=n_max as u64)
        .into_par_iter()
        .map(|n| {
            let v = (n as f64).powf(beta);
            let f = v - v.floor();
            if f >= 1.0 {
                0.0
            } else {
                f
            }
        })
        .collect())
}

/// Sorts `values` on the circle and computes consecutive gaps, including the
/// wrap-around gap `1 + ξ₁ − ξ_N`.
pub fn circular_gaps(values: &[f64]) -> Result<GapSample> {
    if values.is_empty() {
        return Err(Error::pre("circular_gaps needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
        return Err(Error::pre(format!("value {v} outside [0, 1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(1.0 + sorted[0] - sorted[n - 1]);
    let scaled_gaps = gaps.iter().map(|g| g * n as f64).collect();
    Ok(GapSample {
        values: sorted,
        gaps,
        scaled_gaps,
        n_points: n,
    })
}

/// Directions of the vectors `(m, n) − q`, `(m, n) ∈ ℤ²`, shorter than
/// `radius`, as fractions of a turn.
///
/// With `half_plane_only` only lattice rows `n ≥ 0` are used and angles are
/// divided by π (directions of lines through the origin); otherwise the full
/// circle is used and angles are divided by 2π. The output lists vectors by
/// increasing length, ties broken by angle.
pub fn direction_fracs(q: Vec2, radius: f64, half_plane_only: bool) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::pre(format!("radius must be positive, got {radius}")));
    }
    if q.x == q.x.round() && q.y == q.y.round() {
        return Err(Error::pre(
            "observer on a lattice point: the zero vector has no direction",
        ));
    }
    let r2 = radius * radius;
    let n_lo = if half_plane_only {
        0
    } else {
        (q.y - radius).floor() as i64
    };
    let n_hi = (q.y + radius).ceil() as i64;
    let mut vecs: Vec<(f64, f64)> = Vec::new();
    for n in n_lo..=n_hi {
        let dy = n as f64 - q.y;
        let rem = r2 - dy * dy;
        if rem <= 0.0 {
            continue;
        }
        let w = rem.sqrt();
        let (m_lo, m_hi) = ((q.x - w).floor() as i64, (q.x + w).ceil() as i64);
        for m in m_lo..=m_hi {
            let v = Vec2::new(m as f64 - q.x, dy);
            let len2 = v.norm_sq();
            if len2 < r2 {
                let angle = v.y.atan2(v.x);
                let frac = if half_plane_only {
                    (angle / PI).rem_euclid(1.0)
                } else {
                    (angle / TAU).rem_euclid(1.0)
                };
                // rem_euclid can round up to exactly 1.0 for tiny negatives.
                let frac = if frac >= 1.0 { 0.0 } else { frac };
                vecs.push((len2, frac));
            }
        }
    }
    vecs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(vecs.into_iter().map(|(_, f)| f).collect())
}
