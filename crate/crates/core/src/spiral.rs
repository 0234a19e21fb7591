//! The spiral set 𝒫 = {√(n/π)·(cos 2π√n, sin 2π√n)}, its rotated and
//! stretched images 𝒫k(θ)D(T), and point matching against the affine
//! lattices that approximate those images in either half plane.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{enumerate_affine_lattice, AffineMap, LatticeHit, Region, Vec2};
use crate::sequences::frac_sqrt_one;

/// Half planes handed to the matchers must keep this distance from `x = 0`.
pub const MATCH_MARGIN: f64 = 0.05;

/// Matching is refused for shears `ξ` this close to an integer.
pub const XI_EXCLUSION: f64 = 1e-3;

/// Offset of the shifted lattice glued into the left half plane.
pub const HALF_SHIFT: Vec2 = Vec2::new(0.5, -0.25);

/// A point of 𝒫 (or of one of its images) with its index `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralPoint {
    pub n: u64,
    pub p: Vec2,
}

/// The untransformed point with index `n`.
pub fn spiral_point(n: u64) -> Vec2 {
    let r = (n as f64 / PI).sqrt();
    let (s, c) = (TAU * frac_sqrt_one(n)).sin_cos();
    Vec2::new(r * c, r * s)
}

/// All points of 𝒫 in the closed disk of the given radius, by index.
pub fn spiral_points(radius: f64) -> Result<Vec<SpiralPoint>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::pre(format!("radius must be positive, got {radius}")));
    }
    let n_max = (PI * radius * radius).floor() as u64;
    Ok((1..=n_max)
        .map(|n| SpiralPoint {
            n,
            p: spiral_point(n),
        })
        .collect())
}

/// The map `n ↦ p_n k(θ) D(T)`, with the angle `2π√n − θ` reduced before the
/// trigonometric calls so that it stays accurate for large `n`.
#[derive(Debug, Clone, Copy)]
struct StretchedSpiral {
    /// `−θ/2π mod 1`
    xi: f64,
    sqrt_t: f64,
}

impl StretchedSpiral {
    fn new(t: f64, theta: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::pre(format!("T must be positive, got {t}")));
        }
        let xi = (-theta / TAU).rem_euclid(1.0);
        Ok(StretchedSpiral {
            xi: if xi >= 1.0 { 0.0 } else { xi },
            sqrt_t: t.sqrt(),
        })
    }

    fn point(&self, n: u64) -> Vec2 {
        let r = (n as f64 / PI).sqrt();
        let mut frac = frac_sqrt_one(n) + self.xi;
        if frac >= 0.5 {
            frac -= 1.0;
        }
        if frac >= 0.5 {
            frac -= 1.0;
        }
        let (s, c) = (TAU * frac).sin_cos();
        Vec2::new(r * c / self.sqrt_t, r * self.sqrt_t * s)
    }

    /// Largest index that can land in `region`: the image of index `n` has
    /// `T x² + y²/T = n/π`.
    fn n_bound(&self, region: &Region) -> Option<u64> {
        let b = region.bbox()?;
        let (x, y) = (b.max_abs_x(), b.max_abs_y());
        let t = self.sqrt_t * self.sqrt_t;
        let by_box = t * x * x + y * y / t;
        let by_norm = region.max_norm()?.powi(2) * t.max(1.0 / t);
        Some((PI * by_box.min(by_norm)).ceil() as u64)
    }
}

/// Points of `𝒫 k(θ) D(T)` lying in `region`, by increasing index.
///
/// Only indices whose angle `2π√n − θ` is close enough to `0` or `π` for the
/// stretched point to fit the region's vertical extent are examined; every
/// candidate is then tested against the region exactly.
pub fn theta_t_points(t: f64, theta: f64, region: &Region) -> Result<Vec<SpiralPoint>> {
    let map = StretchedSpiral::new(t, theta)?;
    let Some(n_max) = map.n_bound(region) else {
        return Ok(Vec::new());
    };
    let b = region.bbox().expect("bounded region");
    let rho = b.max_abs_y() / map.sqrt_t;
    let n0 = ((4.0 * PI * rho * rho).ceil() as u64).min(n_max);

    let mut out = Vec::new();
    let push = |n: u64, out: &mut Vec<SpiralPoint>| {
        let p = map.point(n);
        if region.contains(p) {
            out.push(SpiralPoint { n, p });
        }
    };
    for n in 1..=n0 {
        push(n, &mut out);
    }
    if n0 == n_max {
        return Ok(out);
    }

    // Beyond n0 the radius exceeds 2ρ, so |sin(2π(√n + ξ))| ≤ ½ and √n + ξ
    // must lie within ρ/(4r) of a half-integer j/2.
    let mut next = n0 + 1;
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let j_hi = (2.0 * ((n_max as f64).sqrt() + map.xi)).ceil() as i64 + 1;
    for j in 1..=j_hi {
        let c = j as f64 / 2.0 - map.xi;
        if c + 0.125 < (n0 as f64).sqrt() {
            continue;
        }
        let r_lo = (2.0 * rho).max((c - 0.125) * inv_sqrt_pi);
        let w = if r_lo > 0.0 { rho / (4.0 * r_lo) } else { 0.125 };
        let lo_s = (c - w).max(0.0);
        let hi_s = c + w;
        let lo = ((lo_s * lo_s).floor() as u64).saturating_sub(1).max(next);
        let hi = ((hi_s * hi_s).ceil() as u64 + 1).min(n_max);
        for n in lo..=hi {
            push(n, &mut out);
        }
        next = next.max(hi + 1);
        if next > n_max {
            break;
        }
    }
    Ok(out)
}

/// Reference for [`theta_t_points`]: tests every index up to the search bound.
pub fn theta_t_points_scan(t: f64, theta: f64, region: &Region) -> Result<Vec<SpiralPoint>> {
    let map = StretchedSpiral::new(t, theta)?;
    let Some(n_max) = map.n_bound(region) else {
        return Ok(Vec::new());
    };
    Ok((1..=n_max)
        .filter_map(|n| {
            let p = map.point(n);
            region.contains(p).then_some(SpiralPoint { n, p })
        })
        .collect())
}

/// Outcome of pairing `Θ_T` points in a region with the points of the
/// approximating affine lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub n_matched: usize,
    pub n_unmatched_spiral: usize,
    pub n_unmatched_lattice: usize,
    pub max_displacement: f64,
    pub n_spiral: usize,
    pub n_lattice: usize,
    pub region: Region,
    #[serde(rename = "T")]
    pub t: f64,
    pub xi: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    Right,
    Left,
}

/// The approximating lattice `ℤ²N(ξ)D(πT)` used in the right half plane.
pub fn right_lattice(t: f64, xi: f64) -> Result<AffineMap> {
    Ok(AffineMap::shear(xi).compose(&AffineMap::dilation(PI * t)?))
}

/// Pairs `Θ_T` (with `θ = −2πξ`) against `ℤ²N(ξ)D(πT)` in a region of the
/// right half plane.
///
/// A spiral point with index `n` is paired with the lattice label
/// `(−m, n − m²)`, where `−½ ≤ √n + ξ + m < ½`.
pub fn match_right(t: f64, xi: f64, region: &Region) -> Result<MatchReport> {
    match_side(t, xi, region, Side::Right)
}

/// Pairs `Θ_T` against `Ξ̃_T = −[(ℤ² + (½,−¼))N(ξ)D(πT)]` in a region of the
/// left half plane.
///
/// With `ζ = ξ − ½` and `−½ ≤ √n + ζ + m < ½`, the paired point is
/// `(m, −(n − m²))(U(ζ), (ζ, ζ²))D(πT)`, whose label in the shifted lattice
/// is `(−m, n − m² + m)`.
pub fn match_left(t: f64, xi: f64, region: &Region) -> Result<MatchReport> {
    match_side(t, xi, region, Side::Left)
}

fn match_side(t: f64, xi: f64, region: &Region, side: Side) -> Result<MatchReport> {
    let dist = (xi - xi.round()).abs();
    if !(dist >= XI_EXCLUSION) {
        return Err(Error::pre(format!(
            "xi = {xi} lies within {XI_EXCLUSION} of an integer"
        )));
    }
    let mut report = MatchReport {
        n_matched: 0,
        n_unmatched_spiral: 0,
        n_unmatched_lattice: 0,
        max_displacement: 0.0,
        n_spiral: 0,
        n_lattice: 0,
        region: region.clone(),
        t,
        xi,
    };
    let Some(b) = region.bbox() else {
        return Ok(report);
    };
    match side {
        Side::Right if b.xmin < MATCH_MARGIN => {
            return Err(Error::pre(format!(
                "right-half-plane matching needs x ≥ {MATCH_MARGIN} on the region"
            )))
        }
        Side::Left if b.xmax > -MATCH_MARGIN => {
            return Err(Error::pre(format!(
                "left-half-plane matching needs x ≤ −{MATCH_MARGIN} on the region"
            )))
        }
        _ => {}
    }

    let g = right_lattice(t, xi)?;
    let (offset, negate, shift) = match side {
        Side::Right => (Vec2::ZERO, false, xi),
        Side::Left => (HALF_SHIFT, true, xi - 0.5),
    };
    let lattice_point = |label: [i64; 2]| -> Vec2 {
        let k = Vec2::new(label[0] as f64, label[1] as f64) + offset;
        let p = g.act(k);
        if negate {
            -p
        } else {
            p
        }
    };

    let spiral = theta_t_points(t, -TAU * xi, region)?;
    let lattice: Vec<LatticeHit> = enumerate_affine_lattice(&g, offset, region, negate)?;

    let partners: Vec<([i64; 2], Vec2)> = spiral
        .iter()
        .map(|sp| {
            let root = (sp.n as f64).sqrt();
            let m = (-0.5 - (root + shift)).ceil() as i64;
            let reduced = sp.n as i64 - m * m;
            let label = match side {
                Side::Right => [-m, reduced],
                Side::Left => [-m, reduced + m],
            };
            (label, lattice_point(label))
        })
        .collect();

    let max_disp = spiral
        .iter()
        .zip(&partners)
        .map(|(sp, (_, q))| sp.p.dist(*q))
        .fold(0.0_f64, f64::max);
    let band = 2.0 * max_disp;

    let lattice_labels: HashSet<[i64; 2]> = lattice.iter().map(|h| h.label).collect();
    let mut matched_labels = HashSet::new();
    for (sp, (label, _)) in spiral.iter().zip(&partners) {
        if lattice_labels.contains(label) {
            matched_labels.insert(*label);
            report.n_matched += 1;
        } else if region.boundary_distance(sp.p) > band {
            report.n_unmatched_spiral += 1;
        }
    }
    report.n_unmatched_lattice = lattice
        .iter()
        .filter(|h| !matched_labels.contains(&h.label) && region.boundary_distance(h.point) > band)
        .count();
    report.max_displacement = max_disp;
    report.n_spiral = spiral.len();
    report.n_lattice = lattice.len();
    Ok(report)
}
