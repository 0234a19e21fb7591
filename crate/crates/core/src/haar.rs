//! Random affine lattices distributed by the invariant probability measure on
//! `Λ\G`, `Λ = Γ₂,₀(4) ⋉ ℤ²`, `G = ASL(2,ℝ)`, and realizations of the limit
//! process
//!
//! ```text
//! Θ = (ℤ²g ∩ H₊) ∪ (−([ℤ² + (½,−¼)]g) ∩ H₋).
//! ```
//!
//! The matrix part is drawn from Haar measure on the modular fundamental
//! domain, `(x, y, φ) ↦ (1 0; x 1)·diag(y^{-½}, y^{½})·k(φ)`, lifted to the
//! finite cover by a uniformly chosen coset representative of Γ₂,₀(4) in
//! SL(2,ℤ).

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{enumerate_affine_lattice, AffineMap, HalfPlane, Mat2, Region, Vec2};
use crate::spiral::HALF_SHIFT;

/// Integer 2×2 matrix, row-major.
pub type IntMat = [[i64; 2]; 2];

/// Samples with `y` above this are logged; they are legitimate but make
/// enumeration expensive.
pub const CUSP_WARN_Y: f64 = 1e4;

/// Tolerance on the integrality of preimages in [`ThetaRealization::verify`].
pub const MEMBERSHIP_TOL: f64 = 1e-6;

const IDENTITY: IntMat = [[1, 0], [0, 1]];
const U2: IntMat = [[1, 2], [0, 1]];

fn int_det(m: &IntMat) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn int_mul(a: &IntMat, b: &IntMat) -> IntMat {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Inverse of a determinant-one integer matrix.
fn int_inv(m: &IntMat) -> IntMat {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

fn residue(m: &IntMat) -> [i64; 4] {
    [m[0][0], m[0][1], m[1][0], m[1][1]].map(|e| e.rem_euclid(4))
}

fn to_mat2(m: &IntMat) -> Mat2 {
    Mat2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
}

/// Membership in Γ₂,₀(4): `M ≡ I` or `M ≡ (1 2; 0 1) mod 4`.
pub fn is_in_gamma(m: &IntMat) -> Result<bool> {
    let det = int_det(m);
    if det != 1 {
        return Err(Error::NotUnimodular { det: det as f64 });
    }
    let r = residue(m);
    Ok(r == residue(&IDENTITY) || r == residue(&U2))
}

/// Representatives `γ_i` with `SL(2,ℤ) = ⊔ Γ₂,₀(4)·γ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosetTable {
    pub reps: Vec<IntMat>,
}

impl CosetTable {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, i: usize) -> Mat2 {
        to_mat2(&self.reps[i])
    }

    /// The index `i` with `m ∈ Γ₂,₀(4)·γ_i`.
    pub fn index_of(&self, m: &IntMat) -> Result<usize> {
        if int_det(m) != 1 {
            return Err(Error::NotUnimodular {
                det: int_det(m) as f64,
            });
        }
        let hits: Vec<usize> = (0..self.reps.len())
            .filter(|&i| is_in_gamma(&int_mul(m, &int_inv(&self.reps[i]))).unwrap_or(false))
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            _ => Err(Error::pre(format!(
                "matrix lies in {} cosets of the table",
                hits.len()
            ))),
        }
    }
}

/// All elements of SL(2, ℤ/4), as residue tuples `(a, b, c, d)`.
pub fn sl2_mod4() -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for a in 0..4i64 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if (a * d - b * c).rem_euclid(4) == 1 {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Builds the right-coset table of Γ₂,₀(4) in SL(2,ℤ) from the reduction
/// mod 4: residues are grouped into classes `{r, (1 2; 0 1)·r}` and each
/// class is lifted to the integer matrix of determinant one with the smallest
/// entries (searched over `[−8, 8]`). The identity comes first.
pub fn build_coset_table() -> CosetTable {
    let u2 = residue(&U2);
    let mul4 = |a: [i64; 4], b: [i64; 4]| {
        [
            (a[0] * b[0] + a[1] * b[2]).rem_euclid(4),
            (a[0] * b[1] + a[1] * b[3]).rem_euclid(4),
            (a[2] * b[0] + a[3] * b[2]).rem_euclid(4),
            (a[2] * b[1] + a[3] * b[3]).rem_euclid(4),
        ]
    };
    let mut classes: BTreeMap<[i64; 4], ()> = BTreeMap::new();
    for r in sl2_mod4() {
        let key = r.min(mul4(u2, r));
        classes.insert(key, ());
    }

    let mut lifts: Vec<(i64, IntMat)> = Vec::new();
    for a in -8..=8i64 {
        for b in -8..=8i64 {
            for c in -8..=8i64 {
                for d in -8..=8i64 {
                    if a * d - b * c == 1 {
                        lifts.push((a.abs() + b.abs() + c.abs() + d.abs(), [[a, b], [c, d]]));
                    }
                }
            }
        }
    }
    lifts.sort();

    let mut reps: Vec<IntMat> = classes
        .keys()
        .map(|key| {
            let class = [*key, mul4(u2, *key)];
            lifts
                .iter()
                .find(|(_, m)| class.contains(&residue(m)))
                .map(|(_, m)| *m)
                .expect("every residue class of SL(2, Z/4) lifts within [-8, 8]")
        })
        .collect();
    reps.sort_by_key(|m| (*m != IDENTITY, residue(m)));
    CosetTable { reps }
}

/// The table of [`build_coset_table`], built once per process.
pub fn coset_table() -> &'static CosetTable {
    static TABLE: OnceLock<CosetTable> = OnceLock::new();
    TABLE.get_or_init(build_coset_table)
}

/// A point of the modular fundamental domain together with a rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularFrame {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

/// Maps three uniforms to a frame: `x = sin(π(2u−1)/6)`, `y = √(1−x²)/v`,
/// `φ = 2πw`. Requires `u, w ∈ [0, 1)` and `v ∈ (0, 1]`.
pub fn sample_frame_from_uniforms(u: f64, v: f64, w: f64) -> Result<ModularFrame> {
    if !(0.0..=1.0).contains(&u) || !(v > 0.0 && v <= 1.0) || !(0.0..1.0).contains(&w) {
        return Err(Error::pre(format!("uniforms out of range: ({u}, {v}, {w})")));
    }
    let x = (PI * (2.0 * u - 1.0) / 6.0).sin();
    Ok(ModularFrame {
        x,
        y: (1.0 - x * x).sqrt() / v,
        phi: TAU * w,
    })
}

/// Draws a frame from normalized Haar measure `dx dy dφ / y²`.
pub fn sample_frame<R: Rng + ?Sized>(rng: &mut R) -> ModularFrame {
    let u: f64 = rng.random();
    let v = 1.0 - rng.random::<f64>();
    let w: f64 = rng.random();
    sample_frame_from_uniforms(u, v, w).expect("uniforms in range")
}

/// Rows `(1/√y, 0)` and `(x/√y, √y)`, right-multiplied by `k(φ)`.
pub fn frame_to_matrix(f: &ModularFrame) -> Mat2 {
    let s = f.y.sqrt();
    let base = Mat2::new(1.0 / s, 0.0, f.x / s, s);
    base.mul(AffineMap::rotation(f.phi).matrix())
}

/// A representative of a point of `Λ\G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineSample {
    pub frame: ModularFrame,
    pub coset: usize,
    /// Translation in lattice coordinates: `g`'s translation is `trans·γM`.
    pub trans: Vec2,
    pub g: AffineMap,
}

impl AffineSample {
    /// Assembles `g = (γ M, trans·γM)` from its parameters.
    pub fn new(frame: ModularFrame, coset: usize, trans: Vec2, table: &CosetTable) -> Result<Self> {
        if coset >= table.len() {
            return Err(Error::pre(format!("coset index {coset} out of range")));
        }
        let m = table.rep(coset).mul(&frame_to_matrix(&frame));
        let g = AffineMap::new(m, trans.mul_mat(&m))?;
        Ok(AffineSample {
            frame,
            coset,
            trans,
            g,
        })
    }
}

/// Draws a representative of a μ-distributed point of `Λ\G`.
pub fn sample_y<R: Rng + ?Sized>(rng: &mut R, table: &CosetTable) -> AffineSample {
    let frame = sample_frame(rng);
    let coset = rng.random_range(0..table.len());
    let trans = Vec2::new(rng.random(), rng.random());
    if frame.y > CUSP_WARN_Y {
        log::warn!("sample deep in the cusp: y = {:.3e}", frame.y);
    }
    AffineSample::new(frame, coset, trans, table).expect("determinant one by construction")
}

/// Points of `Θ` for one sample inside a region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRealization {
    pub sample: AffineSample,
    pub points: Vec<Vec2>,
    pub region: Region,
}

impl ThetaRealization {
    /// Checks that every point with `x ≥ 0` lies in `ℤ²g` and every point
    /// with `x < 0` in `−([ℤ² + (½,−¼)]g)`.
    pub fn verify(&self) -> bool {
        let inv = self.sample.g.inverse();
        self.points.iter().all(|p| {
            if HalfPlane::Plus.contains(*p) {
                inv.act(*p).is_integral(MEMBERSHIP_TOL)
            } else {
                (inv.act(-*p) - HALF_SHIFT).is_integral(MEMBERSHIP_TOL)
            }
        })
    }
}

/// Realizes `Θ ∩ region` for the sample. Points on `x = 0` belong to `H₊`.
pub fn realize_theta(s: &AffineSample, region: &Region) -> Result<ThetaRealization> {
    let plus = region.clone().clip(HalfPlane::Plus);
    let minus = region.clone().clip(HalfPlane::Minus);
    let mut points: Vec<Vec2> = enumerate_affine_lattice(&s.g, Vec2::ZERO, &plus, false)?
        .into_iter()
        .map(|h| h.point)
        .collect();
    points.extend(
        enumerate_affine_lattice(&s.g, HALF_SHIFT, &minus, true)?
            .into_iter()
            .map(|h| h.point),
    );
    Ok(ThetaRealization {
        sample: *s,
        points,
        region: region.clone(),
    })
}

/// `Ξ = ℤ²g` (or `Ξ̃ = −([ℤ² + (½,−¼)]g)` when `shifted`) inside a region.
pub fn realize_xi(s: &AffineSample, region: &Region, shifted: bool) -> Result<Vec<Vec2>> {
    let (offset, negate) = if shifted {
        (HALF_SHIFT, true)
    } else {
        (Vec2::ZERO, false)
    };
    Ok(enumerate_affine_lattice(&s.g, offset, region, negate)?
        .into_iter()
        .map(|h| h.point)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{chi_square_goodness, chi_square_two_sample, pair_count, MeanEstimate};

    #[test]
    fn gamma_membership() {
        assert!(is_in_gamma(&IDENTITY).unwrap());
        assert!(is_in_gamma(&U2).unwrap());
        assert!(!is_in_gamma(&[[0, -1], [1, 0]]).unwrap());
        assert!(is_in_gamma(&[[5, 6], [4, 5]]).unwrap());
        assert!(!is_in_gamma(&[[-1, 0], [0, -1]]).unwrap());
        assert!(is_in_gamma(&[[2, 0], [0, 1]]).is_err());
    }

    #[test]
    fn coset_table() {
        assert_eq!(sl2_mod4().len(), 48);
        let t = build_coset_table();
        assert_eq!(t.len(), 24);
        assert_eq!(t.reps[0], IDENTITY);
        for r in &t.reps {
            assert_eq!(int_det(r), 1);
            assert!(r.iter().flatten().all(|e| e.abs() <= 8));
        }
        let mut n_identity = 0;
        for (i, a) in t.reps.iter().enumerate() {
            if is_in_gamma(a).unwrap() {
                n_identity += 1;
            }
            for (j, b) in t.reps.iter().enumerate() {
                let same = is_in_gamma(&int_mul(a, &int_inv(b))).unwrap();
                assert_eq!(same, i == j, "{a:?} {b:?}");
            }
        }
        assert_eq!(n_identity, 1);
        let gamma = [[5, 2], [12, 5]];
        assert!(is_in_gamma(&gamma).unwrap());
        for (i, r) in t.reps.iter().enumerate() {
            assert_eq!(t.index_of(&int_mul(&gamma, r)).unwrap(), i);
        }
    }

    #[test]
    fn frame_examples() {
        let f = sample_frame_from_uniforms(0.5, 1.0, 0.0).unwrap();
        assert_eq!(f.x, 0.0);
        assert_eq!(f.y, 1.0);
        assert_eq!(f.phi, 0.0);
        assert!(frame_to_matrix(&f).max_abs_diff(&Mat2::IDENTITY) < 1e-15);

        let m = frame_to_matrix(&ModularFrame {
            x: 0.5,
            y: 2.0,
            phi: 0.0,
        });
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(m.max_abs_diff(&Mat2::new(h, 0.0, 0.5 * h, 2f64.sqrt())) < 1e-15);

        assert!(sample_frame_from_uniforms(0.5, 0.0, 0.0).is_err());

        let mut rng = stream(11, 0);
        for _ in 0..10_000 {
            let f = sample_frame(&mut rng);
            assert!(f.x.abs() <= 0.5);
            assert!(f.x * f.x + f.y * f.y >= 1.0 - 1e-12);
            assert!((0.0..TAU).contains(&f.phi));
            assert!((frame_to_matrix(&f).det() - 1.0).abs() < 1e-12);
        }
    }

    /// Cells of a 10×10 grid in `(x, 1/y)` over the part of the domain with
    /// `y ≤ 50`; `1/y` is uniform under the measure `dy/y²`.
    fn frame_cell(x: f64, y: f64) -> Option<usize> {
        if y > 50.0 {
            return None;
        }
        let w_hi = 2.0 / 3f64.sqrt();
        let i = (((x + 0.5) * 10.0) as usize).min(9);
        let j = (((1.0 / y) / w_hi * 10.0) as usize).min(9);
        Some(10 * i + j)
    }

    #[test]
    fn frame_law_matches_rejection_oracle() {
        let n = 100_000;
        let mut direct = vec![0u64; 100];
        let mut rng = stream(12, 0);
        for _ in 0..n {
            let f = sample_frame(&mut rng);
            if let Some(c) = frame_cell(f.x, f.y) {
                direct[c] += 1;
            }
        }
        let mut oracle = vec![0u64; 100];
        let mut rng = stream(12, 1);
        let mut accepted = 0;
        while accepted < n {
            let x = rng.random::<f64>() - 0.5;
            let w = 1.0 / 50.0 + (2.0 - 1.0 / 50.0) * rng.random::<f64>();
            let y = 1.0 / w;
            if x * x + y * y < 1.0 {
                continue;
            }
            accepted += 1;
            oracle[frame_cell(x, y).expect("y ≤ 50")] += 1;
        }
        let t = chi_square_two_sample(&direct, &oracle, 20).unwrap();
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn translation_part_is_uniform_on_the_torus() {
        let table = build_coset_table();
        let mut rng = stream(13, 0);
        let mut counts = vec![0u64; 100];
        for _ in 0..100_000 {
            let s = sample_y(&mut rng, &table);
            let k = s.g.translation_part().mul_mat(&s.g.matrix().inverse().unwrap());
            let (a, b) = (k.x.rem_euclid(1.0), k.y.rem_euclid(1.0));
            counts[((a * 10.0) as usize).min(9) * 10 + ((b * 10.0) as usize).min(9)] += 1;
        }
        let t = chi_square_goodness(&counts, &[0.01; 100]).unwrap();
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let table = build_coset_table();
        let a = sample_y(&mut stream(3, 9), &table);
        let b = sample_y(&mut stream(3, 9), &table);
        assert_eq!(a, b);
        let mut rng = stream(3, 10);
        for _ in 0..1000 {
            let s = sample_y(&mut rng, &table);
            assert!((s.g.matrix().det() - 1.0).abs() < 1e-9);
            assert!(s.coset < 24);
        }
    }

    fn mean_count<F: Fn(&AffineSample) -> f64>(seed: u64, n: u64, f: F) -> MeanEstimate {
        let table = build_coset_table();
        let mut rng = stream(seed, 0);
        let xs: Vec<f64> = (0..n).map(|_| f(&sample_y(&mut rng, &table))).collect();
        MeanEstimate::from_samples(&xs).unwrap()
    }

    #[test]
    fn lattice_and_shifted_lattice_have_unit_density() {
        let sq2 = Region::rect(0.0, 2.0, 0.0, 2.0).unwrap();
        let e = mean_count(20, 20_000, |s| realize_xi(s, &sq2, false).unwrap().len() as f64);
        assert!(e.z(4.0) < 3.0, "{e:?}");
        let sq1 = Region::rect(0.0, 1.0, 0.0, 1.0).unwrap();
        let e = mean_count(21, 20_000, |s| realize_xi(s, &sq1, true).unwrap().len() as f64);
        assert!(e.z(1.0) < 3.0, "{e:?}");
    }

    #[test]
    fn intensity_is_lebesgue() {
        let regions = [
            Region::rect(-1.0, 1.0, -1.0, 1.0).unwrap(),
            Region::rect(-0.3, 0.9, 0.5, 2.0).unwrap(),
            Region::disk(Vec2::new(0.0, 0.4), 0.8).unwrap(),
            Region::rect(-2.0, -0.5, -1.0, 1.0).unwrap(),
            Region::em_triangle(1.0).unwrap(),
        ];
        for (k, r) in regions.iter().enumerate() {
            let n = if k == 0 { 10_000 } else { 5_000 };
            let e = mean_count(30 + k as u64, n, |s| {
                let th = realize_theta(s, r).unwrap();
                assert!(th.verify());
                th.points.len() as f64
            });
            assert!(e.z(r.area()) < 3.0, "{r}: {e:?}");
        }
    }

    #[test]
    fn pair_counts_across_the_axis_are_poisson() {
        let a = Region::rect(0.2, 1.2, -0.5, 0.5).unwrap();
        let b = Region::rect(-1.0, -0.2, 0.0, 1.5).unwrap();
        let both = Region::rect(-1.0, 1.2, -0.5, 1.5).unwrap();
        let e = mean_count(40, 20_000, |s| {
            let th = realize_theta(s, &both).unwrap();
            pair_count(&th.points, &a, &b) as f64
        });
        assert!(e.z(a.area() * b.area()) < 3.0, "{e:?}");
    }

    #[test]
    fn siegel_formula_for_the_shifted_lattice() {
        let r = Region::rect(0.0, 1.0, 0.0, 2.0).unwrap();
        let e = mean_count(41, 20_000, |s| {
            let linear = AffineMap::linear(*s.g.matrix()).unwrap();
            enumerate_affine_lattice(&linear, HALF_SHIFT, &r, false).unwrap().len() as f64
        });
        assert!(e.z(2.0) < 3.0, "{e:?}");
    }

    fn sorted(mut v: Vec<Vec2>) -> Vec<Vec2> {
        v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        v
    }

    fn same_points(a: Vec<Vec2>, b: Vec<Vec2>) -> bool {
        let (a, b) = (sorted(a), sorted(b));
        a.len() == b.len() && a.iter().zip(&b).all(|(p, q)| p.dist(*q) < 1e-9)
    }

    #[test]
    fn realization_is_independent_of_the_representative() {
        let table = build_coset_table();
        let region = Region::rect(-2.0, 2.0, -2.0, 2.0).unwrap();
        let gens: [IntMat; 3] = [U2, [[1, 0], [4, 1]], [[5, 2], [12, 5]]];
        let mut rng = stream(50, 0);
        for i in 0..20 {
            let s = sample_y(&mut rng, &table);
            let m = Vec2::new((i % 5) as f64 - 2.0, (i % 3) as f64 - 1.0);
            for gamma in &gens {
                let h = AffineMap::new(to_mat2(gamma), m).unwrap();
                let moved = AffineSample {
                    g: h.compose(&s.g),
                    ..s
                };
                assert!(same_points(
                    realize_theta(&s, &region).unwrap().points,
                    realize_theta(&moved, &region).unwrap().points
                ));
                for shifted in [false, true] {
                    assert!(same_points(
                        realize_xi(&s, &region, shifted).unwrap(),
                        realize_xi(&moved, &region, shifted).unwrap()
                    ));
                }
            }
            let not_gamma = AffineMap::new(Mat2::new(-1.0, 0.0, 0.0, -1.0), Vec2::ZERO).unwrap();
            let moved = AffineSample {
                g: not_gamma.compose(&s.g),
                ..s
            };
            assert!(!same_points(
                realize_xi(&s, &region, true).unwrap(),
                realize_xi(&moved, &region, true).unwrap()
            ));
        }
    }

    #[test]
    fn theta_restricts_to_xi_and_shifted_xi() {
        let table = build_coset_table();
        let mut rng = stream(51, 0);
        let right = Region::rect(0.0, 2.0, -1.0, 1.0).unwrap();
        let left = Region::rect(-2.0, -0.1, -1.0, 1.0).unwrap();
        for _ in 0..200 {
            let s = sample_y(&mut rng, &table);
            let th = realize_theta(&s, &right).unwrap();
            assert!(th.verify());
            assert_eq!(th.points, realize_xi(&s, &right, false).unwrap());
            let th = realize_theta(&s, &left).unwrap();
            assert_eq!(th.points, realize_xi(&s, &left, true).unwrap());
            let xi = realize_xi(&s, &left, false).unwrap();
            let shifted = realize_xi(&s, &left.clone(), true).unwrap();
            let off = HALF_SHIFT.mul_mat(s.g.matrix());
            let inv = s.g.inverse();
            for p in &shifted {
                assert!((inv.act(-*p - off)).is_integral(1e-6));
            }
            for p in &xi {
                assert!(inv.act(*p).is_integral(1e-6));
            }
        }
    }
}
