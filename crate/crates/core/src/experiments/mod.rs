//! Seeded Monte Carlo experiments. Each runner is a deterministic function of
//! its inputs and seed and returns an [`ExperimentReport`].

mod config;
pub mod output;
mod report;

pub use config::{ExperimentConfig, Lambda, OutputPaths};
pub use report::{Check, ExperimentReport, Metric, SCHEMA_VERSION};

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{enumerate_affine_lattice, AffineMap, BBox, Region, Vec2};
use crate::haar::{coset_table, realize_theta, realize_xi, sample_y, AffineSample};
use crate::rng::{stream, subseed, Stream};
use crate::sequences::{circular_gaps, direction_fracs, frac_sqrt};
use crate::spiral::{match_left, match_right, theta_t_points, HALF_SHIFT, XI_EXCLUSION};
use crate::stats::{
    covariance_estimate, ecdf_ks, make_histogram, tv_distance, variance_estimate, CountingPmf,
    JointPmf, MeanEstimate, Pmf,
};

pub const KS_MAX: f64 = 0.05;
pub const CONVERGENCE_TV_MAX: f64 = 0.05;
pub const EQUIDISTRIBUTION_TV_MAX: f64 = 0.05;
pub const INVARIANCE_TV_MAX: f64 = 0.02;
pub const SEPARATION_MIN: f64 = 3.0;
pub const SLOPE_RANGE: (f64, f64) = (-1.3, -0.7);

const TAG_LAMBDA: u64 = 1 << 20;
const TAG_MU: u64 = 2 << 20;
const TAG_ALT_LAMBDA: u64 = 3 << 20;
const TAG_IMAGE: u64 = 4 << 20;
const TAG_XI: u64 = 5 << 20;

/// Runs `f` once per replica on that replica's stream, in parallel, and
/// returns the results in replica order.
pub fn par_replicas<T, F>(seed: u64, tag: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Stream) -> Result<T> + Sync,
{
    let s = subseed(seed, tag);
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| f(&mut stream(s, r)))
        .collect()
}

/// `(outcome, probability)` pairs, for JSON output.
fn pmf_entries<K: Ord + Clone + Serialize>(p: &Pmf<K>) -> Vec<(K, f64)> {
    p.probs().map(|(k, q)| (k.clone(), q)).collect()
}

fn counts_pmf(counts: &[u64]) -> Result<CountingPmf> {
    Pmf::from_outcomes(counts.iter().copied())
}

/// Whether both coordinates are rationals with denominator at most 10⁴.
pub fn is_rational_point(q: Vec2) -> bool {
    let rational = |v: f64| (1..=10_000).any(|d| ((v * d as f64) - (v * d as f64).round()).abs() < 1e-9);
    rational(q.x) && rational(q.y)
}

#[derive(Serialize)]
struct Figure1Inputs {
    n_max: usize,
    q: Vec2,
    radius: f64,
}

/// Gap statistics of `√n mod 1`, `n ≤ n_max`, against the directions of
/// `ℤ² − q` seen in a half plane within `radius`.
pub fn run_figure1(n_max: usize, q: Vec2, radius: f64) -> Result<ExperimentReport> {
    if n_max < 2 {
        return Err(Error::pre("n_max must be at least 2"));
    }
    let mut rep = ExperimentReport::new("figure1", &Figure1Inputs { n_max, q, radius })?;
    let seq = circular_gaps(&frac_sqrt(n_max)?)?;
    let dirs = circular_gaps(&direction_fracs(q, radius, true)?)?;
    let ks = ecdf_ks(&seq.scaled_gaps, &dirs.scaled_gaps)?;
    let sizes = [seq.n_points as u64, dirs.n_points as u64];
    rep.metric("ks_scaled_gaps", None, ks, None, &sizes);
    rep.check("ks_at_most_0.05", ks <= KS_MAX, format!("KS = {ks:.6} (≤ {KS_MAX})"));
    rep.put("histogram_sqrt", &make_histogram(&seq.scaled_gaps, 50, 0.0, 3.0)?)?;
    rep.put("histogram_directions", &make_histogram(&dirs.scaled_gaps, 50, 0.0, 3.0)?)?;
    let rational = is_rational_point(q);
    rep.put("q_rational", &rational)?;
    if rational {
        rep.notes.push(format!(
            "q = {q} lies in QZ^2; the direction gaps need not follow the same limit law"
        ));
    }
    Ok(rep)
}

/// Number of points of `Θ·h` (each point `p` moved to `p h`) in `region`.
pub fn count_transformed(s: &AffineSample, h: &AffineMap, region: &Region) -> Result<u64> {
    let Some(b) = region.bbox() else {
        return Ok(0);
    };
    let inv = h.inverse();
    let pre: Vec<Vec2> = b.corners().iter().map(|c| inv.act(*c)).collect();
    let pb = BBox::from_points(&pre).expect("four corners");
    let search = Region::rect(pb.xmin, pb.xmax, pb.ymin, pb.ymax)?;
    let th = realize_theta(s, &search)?;
    Ok(th.points.iter().filter(|p| region.contains(h.act(**p))).count() as u64)
}

/// `#(Θ_T ∩ region)` for every `T` against `#(Θ ∩ region)`, compared by
/// total variation.
pub fn run_convergence(cfg: &ExperimentConfig, region: &Region) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new("convergence", &(cfg, region))?;
    let n = cfg.replicas;
    let table = coset_table();
    let reference: Vec<u64> = par_replicas(cfg.seed, TAG_MU, n, |rng| {
        Ok(realize_theta(&sample_y(rng, table), region)?.points.len() as u64)
    })?;
    let ref_pmf = counts_pmf(&reference)?;
    rep.put("reference_pmf", &pmf_entries(&ref_pmf))?;
    rep.metric("reference_mean", None, ref_pmf.mean(), None, &[n as u64]);

    let mut tvs = Vec::new();
    for (k, &t) in cfg.t_list.iter().enumerate() {
        let counts: Vec<u64> = par_replicas(cfg.seed, TAG_LAMBDA + k as u64, n, |rng| {
            let theta = TAU * cfg.lambda.sample_unit(rng);
            Ok(theta_t_points(t, theta, region)?.len() as u64)
        })?;
        let pmf = counts_pmf(&counts)?;
        let tv = tv_distance(&pmf, &ref_pmf);
        let noise = pmf.tv_noise(&ref_pmf);
        rep.metric("tv", Some(t), tv, Some(noise), &[n as u64, n as u64]);
        rep.metric("mean_count", Some(t), pmf.mean(), None, &[n as u64]);
        rep.put(&format!("pmf_T={t}"), &pmf_entries(&pmf))?;
        tvs.push((t, tv, noise));
    }
    let (t_last, tv_last, _) = *tvs.last().expect("nonempty T_list");
    rep.check(
        "tv_at_largest_T",
        tv_last <= CONVERGENCE_TV_MAX,
        format!("TV = {tv_last:.5} at T = {t_last} (≤ {CONVERGENCE_TV_MAX}, calibrated empirically)"),
    );
    let mut monotone = true;
    let mut detail = Vec::new();
    for w in tvs.windows(2) {
        let allow = 2.0 * w[0].2.max(w[1].2);
        let ok = w[1].1 <= w[0].1 + allow;
        monotone &= ok;
        detail.push(format!("T={}: {:.5} → T={}: {:.5} (slack {allow:.5})", w[0].0, w[0].1, w[1].0, w[1].1));
    }
    rep.check("tv_non_increasing", monotone, detail.join("; "));
    Ok(rep)
}

/// Joint counts `(#Ξ ∩ A, #Ξ̃ ∩ B)` for the lattices `ℤ²N(ξ)D(T)` and
/// `−[(ℤ² + (½,−¼))N(ξ)D(T)]` with `ξ ~ λ`, against the same functional of a
/// μ-random `g`.
pub fn run_equidistribution(
    cfg: &ExperimentConfig,
    regions: (&Region, &Region),
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (a, b) = regions;
    let mut rep = ExperimentReport::new("equidistribution", &(cfg, [a, b]))?;
    let n = cfg.replicas;
    let table = coset_table();
    let rhs: Vec<(u64, u64)> = par_replicas(cfg.seed, TAG_MU, n, |rng| {
        let s = sample_y(rng, table);
        Ok((
            realize_xi(&s, a, false)?.len() as u64,
            realize_xi(&s, b, true)?.len() as u64,
        ))
    })?;
    let rhs = JointPmf::from_outcomes(rhs)?;
    rep.put("rhs_pmf", &pmf_entries(&rhs))?;

    let lhs_counts = |t: f64, lambda: &Lambda, tag: u64| -> Result<JointPmf> {
        let counts: Vec<(u64, u64)> = par_replicas(cfg.seed, tag, n, |rng| {
            let xi = lambda.sample_unit(rng);
            let g = AffineMap::shear(xi).compose(&AffineMap::dilation(t)?);
            Ok((
                enumerate_affine_lattice(&g, Vec2::ZERO, a, false)?.len() as u64,
                enumerate_affine_lattice(&g, HALF_SHIFT, b, true)?.len() as u64,
            ))
        })?;
        JointPmf::from_outcomes(counts)
    };

    let mut last = None;
    for (k, &t) in cfg.t_list.iter().enumerate() {
        let lhs = lhs_counts(t, &cfg.lambda, TAG_LAMBDA + k as u64)?;
        let tv = tv_distance(&lhs, &rhs);
        rep.metric("tv_joint", Some(t), tv, Some(lhs.tv_noise(&rhs)), &[n as u64, n as u64]);
        rep.put(&format!("lhs_pmf_T={t}"), &pmf_entries(&lhs))?;
        last = Some((t, tv, lhs));
    }
    let (t, tv, lhs) = last.expect("nonempty T_list");
    rep.check(
        "tv_at_largest_T",
        tv <= EQUIDISTRIBUTION_TV_MAX,
        format!("TV = {tv:.5} at T = {t} (≤ {EQUIDISTRIBUTION_TV_MAX})"),
    );

    let alt = Lambda::triangular(100);
    let lhs_alt = lhs_counts(t, &alt, TAG_ALT_LAMBDA)?;
    let tv_alt = tv_distance(&lhs, &lhs_alt);
    let noise = lhs.tv_noise(&lhs_alt);
    rep.metric("tv_lambda_change", Some(t), tv_alt, Some(noise), &[n as u64, n as u64]);
    rep.check(
        "lambda_independent",
        tv_alt <= 2.0 * noise,
        format!("TV = {tv_alt:.5} between λ and the triangular law (≤ 2·{noise:.5})"),
    );
    Ok(rep)
}

/// Whether `h` lies in `P = {((a b; 0 1/a), (0, y))}` up to the sign `−I`.
pub fn in_p(h: &AffineMap) -> bool {
    h.matrix().a21.abs() < 1e-12 && h.translation_part().x.abs() < 1e-12
}

/// Regions of the statistics that separate `Θ` from `Θk(π/2)`.
pub fn battery_regions() -> [Region; 4] {
    [
        Region::rect(-1.0, 1.0, 0.0, 2.0).expect("valid"),
        Region::rect(0.1, 1.1, 0.1, 1.1).expect("valid"),
        Region::rect(0.1, 1.1, -1.1, -0.1).expect("valid"),
        Region::rect(-1.0, 1.0, 0.0, 0.2).expect("valid"),
    ]
}

/// Compares `#(Θ ∩ region)` with `#(Θh ∩ region)` on independent samples.
/// For `h ∉ P` it also runs a battery of statistics (count variance, the
/// covariance of counts in a square and its mirror image, and a void
/// probability) and reports the largest separation.
pub fn run_invariance(
    cfg: &ExperimentConfig,
    element: &AffineMap,
    region: &Region,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new("invariance", &(cfg, element, region))?;
    let n = cfg.replicas;
    let nn = [n as u64, n as u64];
    let table = coset_table();
    let base: Vec<u64> = par_replicas(cfg.seed, TAG_MU, n, |rng| {
        Ok(realize_theta(&sample_y(rng, table), region)?.points.len() as u64)
    })?;
    let moved: Vec<u64> = par_replicas(cfg.seed, TAG_IMAGE, n, |rng| {
        count_transformed(&sample_y(rng, table), element, region)
    })?;
    let (p, q) = (counts_pmf(&base)?, counts_pmf(&moved)?);
    let tv = tv_distance(&p, &q);
    rep.metric("tv", None, tv, Some(p.tv_noise(&q)), &nn);
    rep.put("pmf", &pmf_entries(&p))?;
    rep.put("pmf_transformed", &pmf_entries(&q))?;

    let member = in_p(element);
    rep.put("element_in_P", &member)?;
    if member {
        rep.check(
            "tv_within_threshold",
            tv <= INVARIANCE_TV_MAX,
            format!("TV = {tv:.5} (≤ {INVARIANCE_TV_MAX})"),
        );
        return Ok(rep);
    }

    let regs = battery_regions();
    let battery = |tag: u64, h: Option<&AffineMap>| -> Result<Vec<[u64; 4]>> {
        par_replicas(cfg.seed, tag, n, |rng| {
            let s = sample_y(rng, table);
            let mut out = [0u64; 4];
            for (o, r) in out.iter_mut().zip(&regs) {
                *o = match h {
                    Some(h) => count_transformed(&s, h, r)?,
                    None => realize_theta(&s, r)?.points.len() as u64,
                };
            }
            Ok(out)
        })
    };
    let plain = battery(TAG_MU + 1, None)?;
    let image = battery(TAG_IMAGE + 1, Some(element))?;
    let stats = |c: &[[u64; 4]]| -> Result<[MeanEstimate; 3]> {
        let col = |i: usize| c.iter().map(|v| v[i] as f64).collect::<Vec<f64>>();
        let void: Vec<f64> = c.iter().map(|v| (v[3] == 0) as u8 as f64).collect();
        Ok([
            variance_estimate(&col(0))?,
            covariance_estimate(&col(1), &col(2))?,
            MeanEstimate::from_samples(&void)?,
        ])
    };
    let (sa, sb) = (stats(&plain)?, stats(&image)?);
    let names = ["count_variance", "mirror_covariance", "void_probability"];
    let mut best: f64 = 0.0;
    for ((name, x), y) in names.iter().zip(&sa).zip(&sb) {
        let sep = x.separation(y);
        best = best.max(sep);
        rep.metric(&format!("{name}_plain"), None, x.mean, Some(x.se), &[n as u64]);
        rep.metric(&format!("{name}_transformed"), None, y.mean, Some(y.se), &[n as u64]);
        rep.metric(&format!("{name}_separation"), None, sep, None, &nn);
    }
    let joint = |c: &[[u64; 4]]| JointPmf::from_outcomes(c.iter().map(|v| (v[1], v[2])));
    let (ja, jb) = (joint(&plain)?, joint(&image)?);
    rep.metric("mirror_joint_tv", None, tv_distance(&ja, &jb), Some(ja.tv_noise(&jb)), &nn);
    rep.check(
        "battery_separates",
        best > SEPARATION_MIN,
        format!("largest separation {best:.2} combined SE (> {SEPARATION_MIN})"),
    );
    Ok(rep)
}

/// Regions used for the point matching: one on each side of the axis.
pub fn linearization_regions() -> (Region, Region) {
    (
        Region::rect(0.2, 1.2, -1.0, 1.0).expect("valid"),
        Region::rect(-1.2, -0.2, -1.0, 1.0).expect("valid"),
    )
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Matches `Θ_T` against its approximating lattices in both half planes for
/// every `T` (`cfg.replicas` shears each) and fits the decay of the mean
/// maximal displacement.
pub fn run_linearization(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ts = &cfg.t_list;
    if ts.len() < 3 {
        return Err(Error::pre("T_list needs at least three entries"));
    }
    let ratio = ts[1] / ts[0];
    if ts.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::pre("T_list must be a geometric progression"));
    }
    let (right, left) = linearization_regions();
    let mut rep = ExperimentReport::new("linearization", &(cfg, [&right, &left]))?;
    let n = cfg.replicas;
    let xis: Vec<f64> = par_replicas(cfg.seed, TAG_XI, n, |rng| loop {
        let xi = cfg.lambda.sample_unit(rng);
        if (xi - xi.round()).abs() >= XI_EXCLUSION {
            return Ok(xi);
        }
    })?;

    let mut means = [Vec::new(), Vec::new(), Vec::new()];
    let mut unmatched = 0usize;
    for &t in ts {
        let reports: Vec<_> = xis
            .par_iter()
            .map(|&xi| Ok((match_right(t, xi, &right)?, match_left(t, xi, &left)?)))
            .collect::<Result<_>>()?;
        let r: Vec<f64> = reports.iter().map(|(r, _)| r.max_displacement).collect();
        let l: Vec<f64> = reports.iter().map(|(_, l)| l.max_displacement).collect();
        let m_r = r.iter().sum::<f64>() / n as f64;
        let m_l = l.iter().sum::<f64>() / n as f64;
        let um: usize = reports
            .iter()
            .map(|(r, l)| {
                r.n_unmatched_spiral + r.n_unmatched_lattice + l.n_unmatched_spiral + l.n_unmatched_lattice
            })
            .sum();
        unmatched += um;
        rep.metric("mean_max_displacement_right", Some(t), m_r, None, &[n as u64]);
        rep.metric("mean_max_displacement_left", Some(t), m_l, None, &[n as u64]);
        rep.metric("unmatched", Some(t), um as f64, None, &[2 * n as u64]);
        means[0].push(m_r);
        means[1].push(m_l);
        means[2].push(0.5 * (m_r + m_l));
    }
    let slopes: Vec<f64> = means.iter().map(|m| log_log_slope(ts, m)).collect();
    rep.metric("slope_right", None, slopes[0], None, &[n as u64]);
    rep.metric("slope_left", None, slopes[1], None, &[n as u64]);
    rep.metric("slope", None, slopes[2], None, &[2 * n as u64]);
    rep.check(
        "no_unmatched_points",
        unmatched == 0,
        format!("{unmatched} unmatched points away from the boundary"),
    );
    let (lo, hi) = SLOPE_RANGE;
    rep.check(
        "slope_in_range",
        (lo..=hi).contains(&slopes[2]),
        format!("log-log slope {:.4} (expected in [{lo}, {hi}])", slopes[2]),
    );
    Ok(rep)
}
