use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Vec2;
use crate::error::{Error, Result};

/// Which closed/open half plane a [`Region::HalfClip`] keeps.
///
/// The vertical axis `x = 0` belongs to the right half plane only, so the two
/// clips of one region partition it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    /// `x ≥ 0`
    Plus,
    /// `x < 0`
    Minus,
}

impl HalfPlane {
    pub fn contains(self, p: Vec2) -> bool {
        match self {
            HalfPlane::Plus => p.x >= 0.0,
            HalfPlane::Minus => p.x < 0.0,
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.xmin, self.ymin),
            Vec2::new(self.xmax, self.ymin),
            Vec2::new(self.xmin, self.ymax),
            Vec2::new(self.xmax, self.ymax),
        ]
    }

    pub fn max_abs_x(&self) -> f64 {
        self.xmin.abs().max(self.xmax.abs())
    }

    pub fn max_abs_y(&self) -> f64 {
        self.ymin.abs().max(self.ymax.abs())
    }

    /// Smallest box containing the images of the four corners.
    pub fn from_points(pts: &[Vec2]) -> Option<BBox> {
        let first = pts.first()?;
        let mut b = BBox {
            xmin: first.x,
            xmax: first.x,
            ymin: first.y,
            ymax: first.y,
        };
        for p in &pts[1..] {
            b.xmin = b.xmin.min(p.x);
            b.xmax = b.xmax.max(p.x);
            b.ymin = b.ymin.min(p.y);
            b.ymax = b.ymax.max(p.y);
        }
        Some(b)
    }
}

/// A bounded test set in the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Closed rectangle `[xmin, xmax] × [ymin, ymax]`.
    Rect {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    /// Closed disk.
    Disk { center: Vec2, radius: f64 },
    /// `{(x, y) | 0 < x < 1, |y| ≤ σx}`.
    EmTriangle { sigma: f64 },
    /// Intersection of `inner` with a half plane.
    HalfClip { side: HalfPlane, inner: Box<Region> },
}

impl Region {
    pub fn rect(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Region> {
        let finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !finite || !(xmin < xmax) || !(ymin < ymax) {
            return Err(Error::InvalidRegion(format!(
                "rect needs xmin < xmax and ymin < ymax, got [{xmin}, {xmax}] × [{ymin}, {ymax}]"
            )));
        }
        Ok(Region::Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    pub fn disk(center: Vec2, radius: f64) -> Result<Region> {
        if !(radius > 0.0 && radius.is_finite()) || !center.x.is_finite() || !center.y.is_finite()
        {
            return Err(Error::InvalidRegion(format!(
                "disk needs a positive radius, got {radius}"
            )));
        }
        Ok(Region::Disk { center, radius })
    }

    pub fn em_triangle(sigma: f64) -> Result<Region> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidRegion(format!(
                "triangle needs sigma > 0, got {sigma}"
            )));
        }
        Ok(Region::EmTriangle { sigma })
    }

    pub fn clip(self, side: HalfPlane) -> Region {
        Region::HalfClip {
            side,
            inner: Box::new(self),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => p.x >= *xmin && p.x <= *xmax && p.y >= *ymin && p.y <= *ymax,
            Region::Disk { center, radius } => (p - *center).norm_sq() <= radius * radius,
            Region::EmTriangle { sigma } => p.x > 0.0 && p.x < 1.0 && p.y.abs() <= sigma * p.x,
            Region::HalfClip { side, inner } => side.contains(p) && inner.contains(p),
        }
    }

    /// Bounding box, or `None` when the region is empty.
    pub fn bbox(&self) -> Option<BBox> {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => Some(BBox {
                xmin: *xmin,
                xmax: *xmax,
                ymin: *ymin,
                ymax: *ymax,
            }),
            Region::Disk { center, radius } => Some(BBox {
                xmin: center.x - radius,
                xmax: center.x + radius,
                ymin: center.y - radius,
                ymax: center.y + radius,
            }),
            Region::EmTriangle { sigma } => Some(BBox {
                xmin: 0.0,
                xmax: 1.0,
                ymin: -sigma,
                ymax: *sigma,
            }),
            Region::HalfClip { side, inner } => {
                let mut b = inner.bbox()?;
                match side {
                    HalfPlane::Plus => b.xmin = b.xmin.max(0.0),
                    HalfPlane::Minus => b.xmax = b.xmax.min(0.0),
                }
                match side {
                    HalfPlane::Plus if b.xmin > b.xmax => None,
                    HalfPlane::Minus if b.xmin >= b.xmax => None,
                    _ => Some(b),
                }
            }
        }
    }

    /// An upper bound for `|p|` over the region (exact for disks and
    /// rectangles), or `None` when the region is empty.
    pub fn max_norm(&self) -> Option<f64> {
        match self {
            Region::Disk { center, radius } => Some(center.norm() + radius),
            Region::HalfClip { inner, .. } => {
                self.bbox()?;
                inner.max_norm()
            }
            _ => {
                let b = self.bbox()?;
                Some(b.corners().iter().map(|c| c.norm()).fold(0.0, f64::max))
            }
        }
    }

    /// Lebesgue measure of the region.
    pub fn area(&self) -> f64 {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (xmax - xmin) * (ymax - ymin),
            Region::Disk { radius, .. } => PI * radius * radius,
            Region::EmTriangle { sigma } => *sigma,
            Region::HalfClip { side, inner } => inner.half_area(*side),
        }
    }

    fn half_area(&self, side: HalfPlane) -> f64 {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let (lo, hi) = match side {
                    HalfPlane::Plus => (xmin.max(0.0), *xmax),
                    HalfPlane::Minus => (*xmin, xmax.min(0.0)),
                };
                (hi - lo).max(0.0) * (ymax - ymin)
            }
            Region::Disk { center, radius } => {
                // Area of the part of the disk with x ≥ 0.
                let d = (-center.x / radius).clamp(-1.0, 1.0);
                let cap = radius * radius * (d.acos() - d * (1.0 - d * d).sqrt());
                match side {
                    HalfPlane::Plus => cap,
                    HalfPlane::Minus => PI * radius * radius - cap,
                }
            }
            Region::EmTriangle { sigma } => match side {
                HalfPlane::Plus => *sigma,
                HalfPlane::Minus => 0.0,
            },
            Region::HalfClip {
                side: inner_side,
                inner,
            } => {
                if *inner_side == side {
                    inner.half_area(side)
                } else {
                    0.0
                }
            }
        }
    }

    /// Euclidean distance from `p` to the boundary of the region. For
    /// half-plane clips this is a lower bound (the clipping line is counted
    /// even where it lies outside `inner`).
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                if self.contains(p) {
                    (p.x - xmin)
                        .min(xmax - p.x)
                        .min(p.y - ymin)
                        .min(ymax - p.y)
                } else {
                    let dx = (xmin - p.x).max(p.x - xmax).max(0.0);
                    let dy = (ymin - p.y).max(p.y - ymax).max(0.0);
                    dx.hypot(dy)
                }
            }
            Region::Disk { center, radius } => ((p - *center).norm() - radius).abs(),
            Region::EmTriangle { sigma } => {
                let o = Vec2::ZERO;
                let a = Vec2::new(1.0, *sigma);
                let b = Vec2::new(1.0, -*sigma);
                segment_distance(p, o, a)
                    .min(segment_distance(p, a, b))
                    .min(segment_distance(p, b, o))
            }
            Region::HalfClip { inner, .. } => inner.boundary_distance(p).min(p.x.abs()),
        }
    }
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).x * ab.x + (p - a).y * ab.y) / ab.norm_sq();
    let q = a + ab * t.clamp(0.0, 1.0);
    p.dist(q)
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Rect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => write!(f, "rect:{xmin},{xmax},{ymin},{ymax}"),
            Region::Disk { center, radius } => {
                write!(f, "disk:{},{},{}", center.x, center.y, radius)
            }
            Region::EmTriangle { sigma } => write!(f, "tri:{sigma}"),
            Region::HalfClip { side, inner } => match side {
                HalfPlane::Plus => write!(f, "half+:{inner}"),
                HalfPlane::Minus => write!(f, "half-:{inner}"),
            },
        }
    }
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("{what}: {e}")))?;
    if vals.len() != n {
        return Err(Error::Parse(format!(
            "{what}: expected {n} numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

/// Parses `rect:xmin,xmax,ymin,ymax`, `disk:cx,cy,r`, `tri:sigma`,
/// `half+:<region>` and `half-:<region>`.
impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Region> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("region `{s}` lacks a `kind:` prefix")))?;
        match kind {
            "rect" => {
                let v = parse_floats(rest, 4, "rect")?;
                Region::rect(v[0], v[1], v[2], v[3])
            }
            "disk" => {
                let v = parse_floats(rest, 3, "disk")?;
                Region::disk(Vec2::new(v[0], v[1]), v[2])
            }
            "tri" => {
                let v = parse_floats(rest, 1, "tri")?;
                Region::em_triangle(v[0])
            }
            "half+" => Ok(rest.parse::<Region>()?.clip(HalfPlane::Plus)),
            "half-" => Ok(rest.parse::<Region>()?.clip(HalfPlane::Minus)),
            other => Err(Error::Parse(format!("unknown region kind `{other}`"))),
        }
    }
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
