//! The six subcommands. Each returns the record it wrote.

use std::path::{Path, PathBuf};

use complace::balls::{empirical_measure, histogram_l1, wasserstein1_1d, BallConfig};
use complace::limit::{
    oned_g_exact, oned_limit_exact, oned_theta_exact, solve_limit_with, DensityMeasure, LimitSolution,
};
use complace::pde::io::{field_to_csv, SolveSummary};
use complace::pde::{
    compliance, dirichlet_energy, rasterize, solve_poisson, Grid, ObstacleMask, ScalarField, SolveOptions,
};
use complace::placement::{optimize, random_start, OptimizationTrace};
use complace::theta::{
    bounds::half_diagonal, build_g, diagnostics, lower_bound, sweep_theta, upper_bound_neumann, GFunction, ThetaTable,
};
use serde_json::{json, Value};

use crate::config::{LimitSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::record::{csv_text, RunDir, RunRecord};

/// A parsed config plus where it came from and where results go.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: RunConfig,
    /// The document exactly as read; copied into the run folder.
    pub raw: String,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: Option<PathBuf>,
    pub out: PathBuf,
}

impl Invocation {
    pub fn new(config: RunConfig, raw: String, base_dir: Option<PathBuf>, out: Option<PathBuf>) -> Self {
        let out = out
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs"));
        Self {
            config,
            raw,
            base_dir,
            out,
        }
    }

    /// For programmatic use: the raw copy is the pretty-printed config.
    pub fn from_config(config: RunConfig, out: impl Into<PathBuf>) -> CliResult<Self> {
        config.validate()?;
        let raw = serde_json::to_string_pretty(&config)? + "\n";
        Ok(Self::new(config, raw, None, Some(out.into())))
    }

    fn base(&self) -> Option<&Path> {
        self.base_dir.as_deref()
    }

    fn open(&self) -> CliResult<RunDir> {
        RunDir::create(&self.out, &self.raw)
    }

    fn finish(&self, dir: RunDir, command: &str, summary: Value) -> CliResult<RunRecord> {
        dir.finish(command, serde_json::to_value(&self.config)?, summary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Optimize,
    Theta,
    Limit,
    Compare,
    Exact1d,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Optimize => "optimize",
            Command::Theta => "theta",
            Command::Limit => "limit",
            Command::Compare => "compare",
            Command::Exact1d => "exact1d",
        }
    }
}

/// Runs `command` on a rayon pool sized by the thread budget.
pub fn run(command: Command, inv: &Invocation) -> CliResult<RunRecord> {
    let threads = inv.config.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Solve => cmd_solve(inv),
        Command::Optimize => cmd_optimize(inv),
        Command::Theta => cmd_theta(inv),
        Command::Limit => cmd_limit(inv),
        Command::Compare => cmd_compare(inv),
        Command::Exact1d => cmd_exact1d(inv),
    })
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn cmd_solve(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    let balls = cfg.ball_config()?;
    let radius = balls.as_ref().map_or(0.0, |b| b.radius());
    let grid = cfg.grid_for_radius(radius)?;
    let f = cfg.f.field(&grid, inv.base())?;
    let mask = match &balls {
        Some(b) => rasterize(b, &grid)?,
        None => ObstacleMask::empty(&grid),
    };
    let opts = SolveOptions {
        allow_negative_source: f.min_value() < 0.0,
        ..SolveOptions::default()
    };
    let sol = solve_poisson(&mask, &f, &opts)?;
    let summary = SolveSummary {
        compliance: compliance(&sol.u, &f)?,
        energy: dirichlet_energy(&sol.u, &mask)?,
        residual: sol.residual,
        iterations: sol.iterations,
    };

    let mut dir = inv.open()?;
    dir.write("u.csv", &field_to_csv(&sol.u))?;
    dir.write_json("summary.json", &summary)?;
    if let Some(b) = &balls {
        dir.write("balls.json", &(b.to_json()? + "\n"))?;
    }
    let metrics = json!({
        "compliance": summary.compliance,
        "energy": summary.energy,
        "residual": summary.residual,
        "iterations": summary.iterations,
        "h": grid.h_max(),
        "n": balls.as_ref().map_or(0, |b| b.n()),
        "radius": radius,
        "pinned_interior": mask.interior_pinned(),
    });
    inv.finish(dir, "solve", metrics)
}

fn histogram_bins(n: usize, d: usize, scale: f64) -> Vec<usize> {
    let per_axis = (scale * (n as f64).powf(1.0 / (d as f64 + 2.0))).ceil().max(1.0) as usize;
    vec![per_axis; d]
}

fn start_config(cfg: &RunConfig, n: usize) -> CliResult<BallConfig<f64>> {
    if let Some(b) = cfg.ball_config()? {
        return Ok(b);
    }
    let domain = cfg.domain()?;
    let mid: Vec<f64> = domain.extents().iter().map(|l| l / 2.0).collect();
    let placeholder = BallConfig::new(domain, cfg.alpha, vec![mid; n])?;
    Ok(random_start(&placeholder, cfg.seed, 0))
}

fn optimize_on_grid(
    cfg: &RunConfig,
    start: &BallConfig<f64>,
    base: Option<&Path>,
) -> CliResult<(OptimizationTrace<f64>, Grid<f64>)> {
    let grid = cfg.grid_for_radius(start.radius())?;
    let f = cfg.f.field(&grid, base)?;
    let trace = optimize(start, &f, &cfg.optimizer_settings())?;
    Ok((trace, grid))
}

pub fn cmd_optimize(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    let n = match (cfg.n, cfg.ball_config()?) {
        (Some(n), _) => n,
        (None, Some(b)) => b.n(),
        (None, None) => return Err(CliError::Config("optimize needs n or an explicit ball list".into())),
    };
    if n == 0 {
        return Err(CliError::Config("n must be positive".into()));
    }
    let start = start_config(cfg, n)?;
    if start.n() != n {
        return Err(CliError::Config(format!(
            "n = {n} but the ball list has {} balls",
            start.n()
        )));
    }
    let (trace, grid) = optimize_on_grid(cfg, &start, inv.base())?;
    let bins = histogram_bins(n, cfg.dimension, 1.0);
    let measure = empirical_measure(&trace.final_config, Some(&bins))?;

    let mut dir = inv.open()?;
    dir.write("trace.jsonl", &trace.to_json_lines()?)?;
    dir.write("final_config.json", &(trace.final_config.to_json()? + "\n"))?;
    if let Some(h) = &measure.histogram {
        dir.write("histogram.csv", &h.to_csv())?;
    }
    let metrics = json!({
        "n": n,
        "alpha": cfg.alpha,
        "h": grid.h_max(),
        "final_compliance": trace.final_compliance,
        "final_scaled": trace.final_scaled,
        "best_restart": trace.best_restart,
        "converged": trace.converged,
        "records": trace.records.len(),
        "final_centers": trace.final_config.centers(),
    });
    inv.finish(dir, "optimize", metrics)
}

/// `(lower, upper)` from the closed forms; `lower` is clamped at zero.
pub fn bound_pair(alpha: f64, d: usize, t1_cap: Option<f64>) -> CliResult<(f64, f64)> {
    let r0 = half_diagonal::<f64>(d);
    let lower = if d >= 2 {
        lower_bound(alpha, d, t1_cap)?.max(0.0)
    } else {
        0.0
    };
    let upper = if alpha >= r0 {
        0.0
    } else if alpha == 0.0 {
        if d == 1 {
            1.0 / 12.0
        } else {
            f64::INFINITY
        }
    } else {
        upper_bound_neumann(alpha, d)?
    };
    Ok((lower.min(upper), upper))
}

pub fn cmd_theta(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    let spec = cfg
        .theta
        .as_ref()
        .ok_or_else(|| CliError::Config("theta needs a `theta` section".into()))?;
    if spec.alphas.is_empty() || spec.k_list.is_empty() {
        return Err(CliError::Config(
            "theta.alphas and theta.k_list must be nonempty".into(),
        ));
    }
    let d = cfg.dimension;
    let mut options = spec.estimate.clone();
    options.optimizer.seed = cfg.seed;
    let (table, points) = sweep_theta(&spec.alphas, d, &spec.k_list, &spec.families, &spec.h_rule, &options);
    let table = table.ok_or_else(|| {
        let why: Vec<String> = points.iter().filter_map(|p| p.error.clone()).collect();
        CliError::Core(complace::Error::ResolutionInfeasible(format!(
            "no θ sample succeeded: {}",
            why.join("; ")
        )))
    })?;

    let mut rows = Vec::new();
    for s in &table.samples {
        let (lower, upper) = bound_pair(s.alpha, d, spec.t1_cap)?;
        rows.push((s.alpha, lower, s.theta, upper, s.err));
    }
    let bounds_csv = csv_text(
        &["alpha", "lower", "estimate", "upper", "err"],
        rows.iter()
            .map(|r| vec![num(r.0), num(r.1), num(r.2), num(r.3), num(r.4)]),
    )?;

    let mut dir = inv.open()?;
    dir.write("theta_table.json", &(table.to_json()? + "\n"))?;
    dir.write("theta_table.csv", &table.to_csv())?;
    dir.write("bounds.csv", &bounds_csv)?;
    dir.write_json("sweep.json", &points)?;
    let diag = diagnostics(&table, spec.g_alpha);
    let diag_summary = match &diag {
        Ok(dg) => {
            dir.write_json("diagnostics.json", dg)?;
            json!({
                "t1": dg.t1,
                "t1_not_reached": dg.t1_not_reached,
                "isotonic_ok": dg.isotonic.iter().all(|c| c.ok),
                "derivative_ok": dg.derivative.iter().all(|c| c.ok),
                "g_convex_ok": dg.g.as_ref().map(|g| g.convex_ok),
                "g_hull_ok": dg.g.as_ref().map(|g| g.hull_ok),
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    if let Some(ga) = spec.g_alpha {
        let x_max = table.alphas().last().map_or(1.0, |a| (a / ga).powi(d as i32)).max(1.0);
        let xs: Vec<f64> = (1..=400).map(|i| x_max * i as f64 / 400.0).collect();
        match build_g(&table, ga, &xs) {
            Ok(g) => dir.write("g.json", &(g.to_json()? + "\n"))?,
            Err(e) => log_skip("g.json", &e),
        }
    }
    let metrics = json!({
        "d": d,
        "samples": table.samples.iter().map(|s| json!({"alpha": s.alpha, "theta": s.theta, "err": s.err, "k_max": s.k_max, "h": s.h})).collect::<Vec<_>>(),
        "failures": points.iter().filter(|p| p.error.is_some()).map(|p| json!({"alpha": p.alpha, "error": p.error})).collect::<Vec<_>>(),
        "bounds_ordered": rows.iter().all(|r| r.1 <= r.3),
        "diagnostics": diag_summary,
    });
    inv.finish(dir, "theta", metrics)
}

fn log_skip(what: &str, e: &complace::Error) {
    eprintln!("skipping {what}: {e}");
}

fn limit_grid(cfg: &RunConfig, spec: &LimitSpec) -> CliResult<Grid<f64>> {
    let cells = spec.cells.unwrap_or(if cfg.dimension == 1 { 10_000 } else { 128 });
    Ok(Grid::new(cfg.domain()?, &vec![cells; cfg.dimension])?)
}

fn load_g(cfg: &RunConfig, spec: &LimitSpec, base: Option<&Path>) -> CliResult<GFunction<f64>> {
    if spec.exact_1d {
        if cfg.dimension != 1 {
            return Err(CliError::Config("limit.exact_1d needs dimension 1".into()));
        }
        return Ok(oned_g_exact(cfg.alpha, spec.g_min, spec.g_max, spec.g_spacing)?);
    }
    let path = spec
        .g_file
        .as_ref()
        .ok_or_else(|| CliError::Config("limit needs exact_1d or g_file".into()))?;
    let path = match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.clone(),
    };
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let g = GFunction::from_json(&text)?;
    if g.d != cfg.dimension {
        return Err(CliError::Config(format!(
            "g file is for d = {}, config has d = {}",
            g.d, cfg.dimension
        )));
    }
    Ok(g)
}

type LimitParts = (DensityMeasure<f64>, f64, Option<LimitSolution<f64>>, ScalarField<f64>);

/// The limit minimizer; the closed form is used for the exact point case.
fn limit_density(cfg: &RunConfig, spec: &LimitSpec, base: Option<&Path>) -> CliResult<LimitParts> {
    let grid = limit_grid(cfg, spec)?;
    let f = cfg.f.field(&grid, base)?;
    if spec.exact_1d && cfg.alpha == 0.0 {
        let (mu, objective) = oned_limit_exact(&f)?;
        return Ok((mu, objective, None, f));
    }
    let g = load_g(cfg, spec, base)?;
    let sol = solve_limit_with(&f, &g, &spec.options)?;
    Ok((sol.measure.clone(), sol.objective, Some(sol), f))
}

pub fn cmd_limit(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    let spec = cfg
        .limit
        .clone()
        .ok_or_else(|| CliError::Config("limit needs a `limit` section".into()))?;
    let grid = limit_grid(cfg, &spec)?;
    let f = cfg.f.field(&grid, inv.base())?;
    let g = load_g(cfg, &spec, inv.base())?;
    let sol = solve_limit_with(&f, &g, &spec.options)?;
    let summary = sol.summary();
    let mut metrics = serde_json::to_value(&summary)?;
    if spec.exact_1d && cfg.alpha == 0.0 {
        let (exact, objective) = oned_limit_exact(&f)?;
        let dev = sol
            .measure
            .density
            .values()
            .iter()
            .zip(exact.density.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        metrics["exact_max_deviation"] = json!(dev);
        metrics["exact_objective"] = json!(objective);
    }
    println!(
        "c = {:.9e}  objective = {:.9e}  mass error = {:.3e}  inclusion residual = {:.3e}",
        summary.c, summary.objective, summary.mass_error, summary.inclusion_residual
    );

    let mut dir = inv.open()?;
    dir.write_json("limit.json", &summary)?;
    dir.write("density.csv", &field_to_csv(&sol.measure.density))?;
    inv.finish(dir, "limit", metrics)
}

/// Resamples a sorted 1D configuration at `n` quantiles of its piecewise
/// linear CDF.
pub fn quantile_resample(sorted: &[f64], length: f64, n: usize) -> Vec<f64> {
    let m = sorted.len();
    let mut xs = vec![0.0];
    let mut ps = vec![0.0];
    for (i, &x) in sorted.iter().enumerate() {
        xs.push(x.clamp(0.0, length));
        ps.push((i as f64 + 0.5) / m as f64);
    }
    xs.push(length);
    ps.push(1.0);
    (0..n)
        .map(|j| {
            let p = (j as f64 + 0.5) / n as f64;
            let k = ps.partition_point(|&q| q < p).clamp(1, ps.len() - 1);
            let t = (p - ps[k - 1]) / (ps[k] - ps[k - 1]);
            xs[k - 1] + t * (xs[k] - xs[k - 1])
        })
        .collect()
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CompareRow {
    pub n: usize,
    pub distance: f64,
    pub scaled: f64,
    pub ratio: f64,
}

pub fn cmd_compare(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    let spec = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Config("compare needs a `compare` section".into()))?;
    if spec.n_list.is_empty() || spec.n_list.windows(2).any(|w| w[1] <= w[0]) || spec.n_list[0] == 0 {
        return Err(CliError::Config(
            "compare.n_list must be positive and strictly increasing".into(),
        ));
    }
    let d = cfg.dimension;
    let limit_spec = match &cfg.limit {
        Some(s) => s.clone(),
        None if d == 1 => LimitSpec::exact(),
        None => return Err(CliError::Config("compare in d >= 2 needs a `limit.g_file`".into())),
    };
    let (mu, inf_f, _, _) = limit_density(cfg, &limit_spec, inv.base())?;
    let domain = cfg.domain()?;

    let mut dir = inv.open()?;
    let mut rows = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    for &n in &spec.n_list {
        let start = match (&previous, d) {
            (Some(prev), 1) if spec.warm_start => {
                let xs = quantile_resample(prev, domain.extents()[0], n);
                BallConfig::new(domain.clone(), cfg.alpha, xs.into_iter().map(|x| vec![x]).collect())?
            }
            (_, 1) => {
                let l = domain.extents()[0];
                let xs = (0..n).map(|i| vec![l * (i as f64 + 0.5) / n as f64]).collect();
                BallConfig::new(domain.clone(), cfg.alpha, xs)?
            }
            _ => start_config(cfg, n)?,
        };
        let (trace, _) = optimize_on_grid(cfg, &start, inv.base())?;
        let measure = empirical_measure(&trace.final_config, None)?;
        let distance = if d == 1 {
            let mut xs: Vec<f64> = measure.atoms.iter().map(|a| a[0]).collect();
            xs.sort_by(f64::total_cmp);
            let w = wasserstein1_1d(&xs, &mu.density)?;
            previous = Some(xs);
            w
        } else {
            let bins = histogram_bins(n, d, spec.bin_scale);
            let hist = empirical_measure(&trace.final_config, Some(&bins))?
                .histogram
                .expect("bins given");
            histogram_l1(&hist, &mu.density, 8)?
        };
        dir.write(
            &format!("final_config_n{n}.json"),
            &(trace.final_config.to_json()? + "\n"),
        )?;
        rows.push(CompareRow {
            n,
            distance,
            scaled: trace.final_scaled,
            ratio: trace.final_scaled / inf_f,
        });
    }

    let table = csv_text(
        &["n", "distance", "scaled", "inf_f", "ratio"],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.distance),
                num(r.scaled),
                num(inf_f),
                num(r.ratio),
            ]
        }),
    )?;
    dir.write("compare.csv", &table)?;
    dir.write("limit_density.csv", &field_to_csv(&mu.density))?;
    let decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let metrics = json!({
        "distance_kind": if d == 1 { "wasserstein-1" } else { "histogram-l1-proxy" },
        "inf_f": inf_f,
        "rows": rows,
        "strictly_decreasing": decreasing,
        "last_distance": rows.last().map(|r| r.distance),
        "last_ratio": rows.last().map(|r| r.ratio),
    });
    inv.finish(dir, "compare", metrics)
}

/// One-dimensional closed forms: the θ table and the point-case limit for `f`.
pub fn cmd_exact1d(inv: &Invocation) -> CliResult<RunRecord> {
    let cfg = &inv.config;
    if cfg.dimension != 1 {
        return Err(CliError::Config("exact1d needs dimension 1".into()));
    }
    let alphas: Vec<f64> = match &cfg.theta {
        Some(t) => t.alphas.clone(),
        None => (0..=10).map(|i| i as f64 * 0.05).collect(),
    };
    let values: Vec<f64> = alphas.iter().map(|&a| oned_theta_exact(a)).collect();
    let table = ThetaTable::from_values(1, &alphas, &values)?;
    let spec = cfg.limit.clone().unwrap_or_else(LimitSpec::exact);
    let grid = limit_grid(cfg, &spec)?;
    let f = cfg.f.field(&grid, inv.base())?;
    let (mu, objective) = oned_limit_exact(&f)?;

    let mut dir = inv.open()?;
    dir.write("theta_exact.csv", &table.to_csv())?;
    dir.write("density.csv", &field_to_csv(&mu.density))?;
    let metrics = json!({
        "theta": alphas.iter().zip(&values).map(|(a, t)| json!({"alpha": a, "theta": t})).collect::<Vec<_>>(),
        "objective": objective,
        "c": f.map(|v| v.powf(2.0 / 3.0))?.integral().recip(),
    });
    inv.finish(dir, "exact1d", metrics)
}
