//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use latstat::experiments::{
    run_convergence, run_equidistribution, run_figure1, run_invariance, run_linearization,
    ExperimentConfig, ExperimentReport,
};
use latstat::haar::{
    build_coset_table, coset_table, realize_theta, sample_frame, sample_y, sl2_mod4,
};
use latstat::rng::stream;
use latstat::spiral::{theta_t_points, HALF_SHIFT};
use latstat::stats::{chi_square_two_sample, pair_count, MeanEstimate};
use latstat::{AffineMap, Mat2, Region, Vec2};
use rand::Rng;

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn checks_detail(rep: &ExperimentReport) -> String {
    rep.checks
        .iter()
        .map(|c| format!("{}={} [{}]", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = out.passed && in_time;
    println!(
        "{} {id}. {name}: {} ({:.2}s of {}s)",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    passed
}

fn spiral_density() -> Outcome {
    let mut bad = Vec::new();
    for r in 1..=200 {
        let r = r as f64;
        let disk = Region::disk(Vec2::ZERO, r).unwrap();
        let n = theta_t_points(1.0, 0.0, &disk).unwrap().len() as u64;
        if n != (PI * r * r).floor() as u64 {
            bad.push(r);
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: format!("{} of 200 radii exact", 200 - bad.len()),
    }
}

fn figure1() -> Outcome {
    let rep = run_figure1(7765, Vec2::new(2f64.sqrt(), 0.0), 70.0).unwrap();
    let ks = rep.find_metric("ks_scaled_gaps", None).unwrap().value;
    let hists = ["histogram_sqrt", "histogram_directions"].iter().all(|k| {
        rep.data
            .get(*k)
            .and_then(|h| h["counts"].as_array().map(|c| c.len() == 50))
            .unwrap_or(false)
    });
    Outcome {
        passed: ks <= 0.05 && hists,
        detail: format!("KS = {ks:.4} (≤ 0.05), histograms emitted: {hists}"),
    }
}

fn theta_mean(seed: u64, n: usize, f: impl Fn(&[Vec2]) -> f64 + Sync, region: &Region) -> MeanEstimate {
    let table = coset_table();
    let xs = latstat::experiments::par_replicas(seed, 0, n, |rng| {
        Ok(f(&realize_theta(&sample_y(rng, table), region)?.points))
    })
    .unwrap();
    MeanEstimate::from_samples(&xs).unwrap()
}

fn intensity() -> Outcome {
    let regions = [
        Region::rect(-1.0, 1.0, -1.0, 1.0).unwrap(),
        Region::rect(0.2, 1.2, 0.0, 1.0).unwrap(),
        Region::rect(-1.2, -0.2, 0.0, 1.0).unwrap(),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, r) in regions.iter().enumerate() {
        let e = theta_mean(SEED + 10 + i as u64, 20_000, |p| p.len() as f64, r);
        let z = e.z(r.area());
        passed &= z < 3.0;
        parts.push(format!("{r}: {:.4}±{:.4} vs {} (z={z:.2})", e.mean, e.se, r.area()));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn two_point() -> Outcome {
    let a = Region::rect(0.2, 1.2, 0.0, 1.0).unwrap();
    let b = Region::rect(-1.2, -0.2, 0.0, 1.0).unwrap();
    let hull = Region::rect(-1.2, 1.2, 0.0, 1.0).unwrap();
    let e = theta_mean(SEED + 20, 20_000, |p| pair_count(p, &a, &b) as f64, &hull);
    let z = e.z(1.0);
    Outcome {
        passed: z < 3.0,
        detail: format!("mean pairs {:.4}±{:.4} vs 1 (z={z:.2})", e.mean, e.se),
    }
}

fn convergence() -> Outcome {
    let cfg = ExperimentConfig {
        seed: SEED,
        replicas: 10_000,
        t_list: vec![1e2, 1e3, 1e4],
        ..Default::default()
    };
    let region = Region::rect(-1.0, 1.0, -1.0, 1.0).unwrap();
    let rep = run_convergence(&cfg, &region).unwrap();
    Outcome {
        passed: rep.all_passed(),
        detail: checks_detail(&rep),
    }
}

fn linearization() -> Outcome {
    let cfg = ExperimentConfig {
        seed: SEED,
        replicas: 20,
        t_list: vec![1e3, 2e3, 4e3],
        ..Default::default()
    };
    let rep = run_linearization(&cfg).unwrap();
    Outcome {
        passed: rep.all_passed(),
        detail: checks_detail(&rep),
    }
}

fn invariance() -> Outcome {
    let cfg = ExperimentConfig {
        seed: SEED,
        replicas: 20_000,
        ..Default::default()
    };
    let region = Region::rect(-1.0, 1.0, 0.0, 2.0).unwrap();
    let elements = [
        ("shear(0.3)", AffineMap::linear(Mat2::new(1.0, 0.3, 0.0, 1.0)).unwrap()),
        ("scale(2)", AffineMap::linear(Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap()),
        ("translation(0,0.37)", AffineMap::translation(Vec2::new(0.0, 0.37))),
        ("-I", AffineMap::negation()),
        ("k(pi/2)", AffineMap::rotation(FRAC_PI_2)),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, h) in &elements {
        let rep = run_invariance(&cfg, h, &region).unwrap();
        passed &= rep.all_passed();
        parts.push(format!("{name}: {}", checks_detail(&rep)));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn equidistribution() -> Outcome {
    let cfg = ExperimentConfig {
        seed: SEED,
        replicas: 10_000,
        t_list: vec![1e4],
        lambda: latstat::experiments::Lambda::UniformCircle,
        ..Default::default()
    };
    let a = Region::rect(0.1, 1.1, -1.0, 1.0).unwrap();
    let b = Region::rect(-1.1, -0.1, -1.0, 1.0).unwrap();
    let rep = run_equidistribution(&cfg, (&a, &b)).unwrap();
    Outcome {
        passed: rep.all_passed(),
        detail: checks_detail(&rep),
    }
}

fn frame_cell(x: f64, y: f64) -> Option<usize> {
    if y > 50.0 {
        return None;
    }
    let i = (((x + 0.5) * 10.0) as usize).min(9);
    let j = (((1.0 / y) * 3f64.sqrt() / 2.0 * 10.0) as usize).min(9);
    Some(10 * i + j)
}

fn group_oracles() -> Outcome {
    let n_sl = sl2_mod4().len();
    let n_cos = build_coset_table().len();

    let mut rng = stream(SEED, 90);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let xi = rng.random_range(-2.0..2.0);
        let eta = rng.random_range(-2.0..2.0);
        let hom = AffineMap::shear(xi)
            .compose(&AffineMap::shear(eta))
            .max_abs_diff(&AffineMap::shear(xi + eta));
        let zeta = xi - 0.5;
        let b = AffineMap::shear(zeta).compose(
            &AffineMap::translation(HALF_SHIFT)
                .compose(&AffineMap::shear(xi))
                .inverse(),
        );
        let (m, t) = (b.matrix(), b.translation_part());
        let off = [m.a11, m.a12, m.a21, m.a22, t.x, t.y]
            .iter()
            .map(|v| (v - v.round()).abs())
            .fold(0.0, f64::max);
        worst = worst.max(hom).max(off);
    }

    let n = 100_000;
    let mut direct = vec![0u64; 100];
    let mut rng = stream(SEED, 91);
    for _ in 0..n {
        let f = sample_frame(&mut rng);
        if let Some(c) = frame_cell(f.x, f.y) {
            direct[c] += 1;
        }
    }
    let mut oracle = vec![0u64; 100];
    let mut rng = stream(SEED, 92);
    let mut acc = 0;
    while acc < n {
        let x = rng.random::<f64>() - 0.5;
        let y = 1.0 / (0.02 + 1.98 * rng.random::<f64>());
        if x * x + y * y >= 1.0 {
            acc += 1;
            oracle[frame_cell(x, y).unwrap()] += 1;
        }
    }
    let chi = chi_square_two_sample(&direct, &oracle, 20).unwrap();

    Outcome {
        passed: n_sl == 48 && n_cos == 24 && worst <= 1e-9 && chi.p_value > 0.01,
        detail: format!(
            "|SL(2,Z/4)| = {n_sl}, cosets = {n_cos}, identity error {worst:.1e}, chi2 p = {:.3}",
            chi.p_value
        ),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "exact spiral density", s(1), spiral_density),
        criterion(2, "gap statistics reproduction", s(10), figure1),
        criterion(3, "Lebesgue intensity", s(120), intensity),
        criterion(4, "Poisson two-point function", s(120), two_point),
        criterion(5, "convergence of counting distributions", s(300), convergence),
        criterion(6, "linearization decay", s(120), linearization),
        criterion(7, "P-invariance and non-invariance", s(300), invariance),
        criterion(8, "equidistribution", s(300), equidistribution),
        criterion(9, "group and coset oracles", s(60), group_oracles),
    ];
    let n_pass = results.iter().filter(|p| **p).count();
    println!("acceptance: {n_pass}/{} criteria passed", results.len());
    if n_pass != results.len() {
        std::process::exit(1);
    }
}
