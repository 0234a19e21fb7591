use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use latstat::experiments::output::{
    histogram_svg, read_csv_column, scatter_svg, write_counts_csv, write_gaps_csv,
    write_points_csv,
};
use latstat::experiments::{
    par_replicas, run_convergence, run_equidistribution, run_figure1, run_invariance,
    run_linearization, ExperimentConfig, ExperimentReport, Lambda,
};
use latstat::geometry::BBox;
use latstat::haar::{coset_table, realize_theta, sample_y};
use latstat::sequences::{circular_gaps, direction_fracs, frac_power, frac_sqrt};
use latstat::stats::make_histogram;
use latstat::{AffineMap, Error, Mat2, Region, Result, Vec2};

#[derive(Parser, Debug)]
#[command(name = "latstat", version, about = "Spiral point sets, random affine lattices and their statistics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with an experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Comma-separated list of stretch factors.
    #[arg(long = "T", global = true, value_delimiter = ',')]
    t_list: Option<Vec<f64>>,
    /// Test region, e.g. `rect:-1,1,-1,1`, `disk:0,0,1`, `tri:0.5`; repeatable.
    #[arg(long = "region", global = true)]
    regions: Vec<Region>,
    /// `uniform_circle`, `uniform_interval:LO,HI` or `triangular`.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Main output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optional SVG rendering.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// JSON report for commands whose main output is CSV.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaps of √n mod 1 (or n^β mod 1).
    GapsSqrt {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Gaps between directions of ℤ² − q.
    GapsDirections {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        q: Vec2,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        full_circle: bool,
    },
    /// Compares the two gap statistics at the given parameters.
    Figure1 {
        #[arg(long, default_value_t = 7765)]
        n: usize,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        q: Option<Vec2>,
        #[arg(long, default_value_t = 70.0)]
        radius: f64,
    },
    /// Realizations of the limit process in the first region.
    SampleTheta,
    /// Counting distributions of the stretched spiral against the limit.
    Converge,
    /// Joint counts of the sheared lattices against the invariant measure.
    Equidist,
    /// Counting distribution of the limit process against its image.
    Invariance {
        /// `shear:B`, `scale:A`, `translate:Y`, `neg`, `rotate:THETA` or
        /// `affine:A11,A12,A21,A22,TX,TY`.
        #[arg(long)]
        element: String,
    },
    /// Matching displacement against the stretch factor.
    Linearize,
    /// Histogram of one CSV column.
    Hist {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "scaled_gap")]
        column: String,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 3.0)]
        hi: f64,
    },
}

fn parse_lambda(s: &str) -> Result<Lambda> {
    let l = match s.split_once(':') {
        None if s == "uniform_circle" => Lambda::UniformCircle,
        None if s == "triangular" => Lambda::triangular(100),
        Some(("uniform_interval", rest)) => {
            let v = parse_floats(rest, 2)?;
            Lambda::UniformInterval { lo: v[0], hi: v[1] }
        }
        _ => return Err(Error::Parse(format!("unknown lambda `{s}`"))),
    };
    l.validate()?;
    Ok(l)
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} numbers in `{s}`")));
    }
    Ok(v)
}

fn parse_point(s: &str) -> Result<Vec2> {
    let v = parse_floats(s, 2)?;
    Ok(Vec2::new(v[0], v[1]))
}

fn parse_element(s: &str) -> Result<AffineMap> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "shear" => AffineMap::linear(Mat2::new(1.0, parse_floats(rest, 1)?[0], 0.0, 1.0)),
        "scale" => {
            let a = parse_floats(rest, 1)?[0];
            if a == 0.0 {
                return Err(Error::pre("scale factor must be nonzero"));
            }
            AffineMap::linear(Mat2::new(a, 0.0, 0.0, 1.0 / a))
        }
        "translate" => Ok(AffineMap::translation(Vec2::new(0.0, parse_floats(rest, 1)?[0]))),
        "neg" => Ok(AffineMap::negation()),
        "rotate" => Ok(AffineMap::rotation(parse_floats(rest, 1)?[0])),
        "affine" => {
            let v = parse_floats(rest, 6)?;
            AffineMap::new(Mat2::new(v[0], v[1], v[2], v[3]), Vec2::new(v[4], v[5]))
        }
        _ => Err(Error::Parse(format!("unknown element `{s}`"))),
    }
}

fn resolve_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.replicas {
        cfg.replicas = r;
    }
    if let Some(t) = &c.t_list {
        cfg.t_list = t.clone();
    }
    if !c.regions.is_empty() {
        cfg.regions = c.regions.clone();
    }
    if let Some(l) = &c.lambda {
        cfg.lambda = parse_lambda(l)?;
    }
    if c.out.is_some() {
        cfg.outputs.json = c.out.clone();
    }
    if c.svg.is_some() {
        cfg.outputs.svg = c.svg.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn emit_report(rep: &ExperimentReport, out: Option<&Path>) -> Result<()> {
    let text = rep.to_json()?;
    match out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require_out(c: &Common) -> Result<&Path> {
    c.out
        .as_deref()
        .ok_or_else(|| Error::pre("this command needs --out"))
}

fn region_at(cfg: &ExperimentConfig, i: usize) -> Result<&Region> {
    cfg.regions
        .get(i)
        .ok_or_else(|| Error::pre(format!("at least {} region(s) required", i + 1)))
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    args: T,
}

fn gaps_report<T: Serialize>(c: &Common, command: &str, seed: u64, args: T, n: usize) -> Result<()> {
    if let Some(p) = &c.report {
        let mut rep = ExperimentReport::new(command, &Echo { command, seed, args })?;
        rep.metric("n_points", None, n as f64, None, &[n as u64]);
        emit_report(&rep, Some(p))?;
    }
    Ok(())
}

fn gaps_svg(c: &Common, values: &[f64], title: &str) -> Result<()> {
    if let Some(p) = &c.svg {
        let g = circular_gaps(values)?;
        let h = make_histogram(&g.scaled_gaps, 50, 0.0, 3.0)?;
        write_text(p, &histogram_svg(&h, title))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.cmd {
        Command::GapsSqrt { n, beta } => {
            let cfg = resolve_config(c)?;
            let values = match beta {
                Some(b) => frac_power(*n, *b)?,
                None => frac_sqrt(*n)?,
            };
            write_gaps_csv(create(require_out(c)?)?, &values)?;
            gaps_svg(c, &values, "scaled gaps of n^beta mod 1")?;
            #[derive(Serialize)]
            struct A {
                n: usize,
                beta: f64,
            }
            let args = A {
                n: *n,
                beta: beta.unwrap_or(0.5),
            };
            gaps_report(c, "gaps-sqrt", cfg.seed, args, values.len())
        }
        Command::GapsDirections {
            q,
            radius,
            full_circle,
        } => {
            let cfg = resolve_config(c)?;
            let values = direction_fracs(*q, *radius, !*full_circle)?;
            write_gaps_csv(create(require_out(c)?)?, &values)?;
            gaps_svg(c, &values, "scaled gaps of lattice directions")?;
            #[derive(Serialize)]
            struct A {
                q: Vec2,
                radius: f64,
                half_plane_only: bool,
            }
            let args = A {
                q: *q,
                radius: *radius,
                half_plane_only: !*full_circle,
            };
            gaps_report(c, "gaps-directions", cfg.seed, args, values.len())
        }
        Command::Figure1 { n, q, radius } => {
            let q = q.unwrap_or(Vec2::new(2f64.sqrt(), 0.0));
            let rep = run_figure1(*n, q, *radius)?;
            if let Some(p) = &c.svg {
                let h: latstat::stats::Histogram =
                    serde_json::from_value(rep.data["histogram_sqrt"].clone())?;
                let d: latstat::stats::Histogram =
                    serde_json::from_value(rep.data["histogram_directions"].clone())?;
                write_text(p, &histogram_svg(&h, "scaled gaps of sqrt(n) mod 1"))?;
                write_text(
                    &p.with_extension("directions.svg"),
                    &histogram_svg(&d, "scaled gaps of lattice directions"),
                )?;
            }
            emit_report(&rep, c.out.as_deref())
        }
        Command::SampleTheta => {
            let cfg = resolve_config(c)?;
            let region = region_at(&cfg, 0)?.clone();
            let table = coset_table();
            let samples = par_replicas(cfg.seed, 0, cfg.replicas, |rng| {
                realize_theta(&sample_y(rng, table), &region)
            })?;
            let rows: Vec<(u64, Vec2)> = samples
                .iter()
                .enumerate()
                .flat_map(|(r, th)| th.points.iter().map(move |p| (r as u64, *p)))
                .collect();
            write_points_csv(create(require_out(c)?)?, &rows)?;
            if let Some(p) = &c.svg {
                let b = region.bbox().unwrap_or(BBox {
                    xmin: -1.0,
                    xmax: 1.0,
                    ymin: -1.0,
                    ymax: 1.0,
                });
                write_text(p, &scatter_svg(&samples[0].points, &b, "one realization"))?;
            }
            if let Some(p) = &c.report {
                let counts: Vec<(u64, usize, u64)> = samples
                    .iter()
                    .enumerate()
                    .map(|(r, th)| (r as u64, 0, th.points.len() as u64))
                    .collect();
                let mut rep = ExperimentReport::new("sample-theta", &cfg)?;
                let mean = counts.iter().map(|c| c.2 as f64).sum::<f64>() / counts.len() as f64;
                rep.metric("mean_count", None, mean, None, &[counts.len() as u64]);
                emit_report(&rep, Some(p))?;
                write_counts_csv(create(&p.with_extension("counts.csv"))?, &counts)?;
            }
            Ok(())
        }
        Command::Converge => {
            let cfg = resolve_config(c)?;
            let rep = run_convergence(&cfg, region_at(&cfg, 0)?)?;
            emit_report(&rep, c.out.as_deref())
        }
        Command::Equidist => {
            let cfg = resolve_config(c)?;
            let rep = run_equidistribution(&cfg, (region_at(&cfg, 0)?, region_at(&cfg, 1)?))?;
            emit_report(&rep, c.out.as_deref())
        }
        Command::Invariance { element } => {
            let cfg = resolve_config(c)?;
            let h = parse_element(element)?;
            let rep = run_invariance(&cfg, &h, region_at(&cfg, 0)?)?;
            emit_report(&rep, c.out.as_deref())
        }
        Command::Linearize => {
            let cfg = resolve_config(c)?;
            let rep = run_linearization(&cfg)?;
            emit_report(&rep, c.out.as_deref())
        }
        Command::Hist {
            input,
            column,
            bins,
            lo,
            hi,
        } => {
            let values = read_csv_column(File::open(input)?, column)?;
            let h = make_histogram(&values, *bins, *lo, *hi)?;
            if let Some(p) = &c.svg {
                write_text(p, &histogram_svg(&h, column))?;
            }
            #[derive(Serialize)]
            struct A<'a> {
                input: &'a Path,
                column: &'a str,
                bins: usize,
                lo: f64,
                hi: f64,
            }
            let args = A {
                input,
                column,
                bins: *bins,
                lo: *lo,
                hi: *hi,
            };
            let mut rep = ExperimentReport::new("hist", &args)?;
            rep.put("histogram", &h)?;
            rep.metric("n_values", None, values.len() as f64, None, &[values.len() as u64]);
            emit_report(&rep, c.out.as_deref())
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("LATSTAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("LATSTAT_THREADS=`{v}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::pre(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
