use super::{AffineMap, BBox, Region, Vec2};
use crate::error::{Error, Result};

/// Slack, in lattice coordinates, added to every integer range before the
/// exact membership test.
const SLACK: f64 = 1e-7;

/// A point of an affine lattice together with its integer label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeHit {
    pub label: [i64; 2],
    pub point: Vec2,
}

/// Sign and linear data of `k ↦ s·((k + offset)M + t)`, written as
/// `k ↦ k·A + c`.
struct LatticeChart {
    a: [Vec2; 2],
    c: Vec2,
}

impl LatticeChart {
    fn new(g: &AffineMap, offset: Vec2, negate: bool) -> Result<Self> {
        let m = g.matrix();
        let det = m.det();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::Degenerate { det });
        }
        let sign = if negate { -1.0 } else { 1.0 };
        Ok(LatticeChart {
            a: [m.row1() * sign, m.row2() * sign],
            c: (offset.mul_mat(m) + g.translation_part()) * sign,
        })
    }

    fn point(&self, k: [i64; 2]) -> Vec2 {
        self.a[0] * k[0] as f64 + self.a[1] * k[1] as f64 + self.c
    }

    /// Ranges of the two lattice coordinates over the preimage of `b`.
    fn preimage_ranges(&self, b: &BBox) -> [(f64, f64); 2] {
        let det = self.a[0].x * self.a[1].y - self.a[0].y * self.a[1].x;
        let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        for corner in b.corners() {
            let q = corner - self.c;
            // Solve k·A = q for the row vector k.
            let k0 = (q.x * self.a[1].y - q.y * self.a[1].x) / det;
            let k1 = (q.y * self.a[0].x - q.x * self.a[0].y) / det;
            for (r, k) in ranges.iter_mut().zip([k0, k1]) {
                r.0 = r.0.min(k);
                r.1 = r.1.max(k);
            }
        }
        ranges
    }
}

/// Integer solutions `k` of `lo ≤ base + k·step ≤ hi`.
fn line_interval(base: f64, step: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if step.abs() < 1e-300 {
        return (base >= lo && base <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (a, b) = ((lo - base) / step, (hi - base) / step);
    Some(if a <= b { (a, b) } else { (b, a) })
}

fn int_range(lo: f64, hi: f64) -> Option<(i64, i64)> {
    let (lo, hi) = ((lo - SLACK).ceil(), (hi + SLACK).floor());
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    Some((lo as i64, hi as i64))
}

/// All points of `s·((ℤ² + offset)M + ξ)` inside `region`, where `g = (M, ξ)`
/// and `s = −1` when `negate` is set. Results are sorted by label.
///
/// The coordinate with the narrower preimage span is iterated; for each of its
/// values the feasible interval of the other coordinate is solved exactly from
/// the bounding-box inequalities, and every candidate is then tested against
/// the region itself.
pub fn enumerate_affine_lattice(
    g: &AffineMap,
    offset: Vec2,
    region: &Region,
    negate: bool,
) -> Result<Vec<LatticeHit>> {
    let chart = LatticeChart::new(g, offset, negate)?;
    let Some(b) = region.bbox() else {
        return Ok(Vec::new());
    };
    let ranges = chart.preimage_ranges(&b);
    let outer = if ranges[0].1 - ranges[0].0 <= ranges[1].1 - ranges[1].0 {
        0
    } else {
        1
    };
    let inner = 1 - outer;
    let Some((olo, ohi)) = int_range(ranges[outer].0, ranges[outer].1) else {
        return Ok(Vec::new());
    };

    let mut hits = Vec::new();
    let step = chart.a[inner];
    for ko in olo..=ohi {
        let base = chart.a[outer] * ko as f64 + chart.c;
        let Some((xl, xh)) = line_interval(base.x, step.x, b.xmin, b.xmax) else {
            continue;
        };
        let Some((yl, yh)) = line_interval(base.y, step.y, b.ymin, b.ymax) else {
            continue;
        };
        let (lo, hi) = (
            xl.max(yl).max(ranges[inner].0 - 1.0),
            xh.min(yh).min(ranges[inner].1 + 1.0),
        );
        let Some((ilo, ihi)) = int_range(lo, hi) else {
            continue;
        };
        for ki in ilo..=ihi {
            let mut label = [0i64; 2];
            label[outer] = ko;
            label[inner] = ki;
            let point = chart.point(label);
            if region.contains(point) {
                hits.push(LatticeHit { label, point });
            }
        }
    }
    if outer == 1 {
        hits.sort_by_key(|h| h.label);
    }
    Ok(hits)
}

/// Brute-force reference for [`enumerate_affine_lattice`]: scans the whole
/// padded integer box of the preimage.
pub fn enumerate_affine_lattice_scan(
    g: &AffineMap,
    offset: Vec2,
    region: &Region,
    negate: bool,
) -> Result<Vec<LatticeHit>> {
    let chart = LatticeChart::new(g, offset, negate)?;
    let Some(b) = region.bbox() else {
        return Ok(Vec::new());
    };
    let r = chart.preimage_ranges(&b);
    let mut hits = Vec::new();
    let (x0, x1) = (r[0].0.floor() as i64 - 1, r[0].1.ceil() as i64 + 1);
    let (y0, y1) = (r[1].0.floor() as i64 - 1, r[1].1.ceil() as i64 + 1);
    for k0 in x0..=x1 {
        for k1 in y0..=y1 {
            let point = chart.point([k0, k1]);
            if region.contains(point) {
                hits.push(LatticeHit {
                    label: [k0, k1],
                    point,
                });
            }
        }
    }
    Ok(hits)
}
