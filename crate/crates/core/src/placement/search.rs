use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::config::{inverse_root, BallConfig};
use crate::error::{Error, Result};
use crate::pde::field::ScalarField;
use crate::pde::solver::SolveOptions;
use crate::placement::objective::{
    config_compliance, default_samples, scale_factor, solve_config, translation_gradient_with,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    PatternSearch,
    ShapeGradient,
    /// Gradient steps first, then pattern search from the result.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct OptimizerSettings<T> {
    pub method: Method,
    /// Initial move length as a fraction of `n^(-1/d)`.
    pub initial_step: T,
    pub shrink: T,
    pub max_iterations: usize,
    /// Relative compliance decrease below which a sweep counts as stalled.
    pub tol: T,
    pub seed: u64,
    /// Total number of starts; the first is the supplied configuration.
    pub restarts: usize,
    pub samples_per_ball: Option<usize>,
}

impl<T: Real> Default for OptimizerSettings<T> {
    fn default() -> Self {
        Self {
            method: Method::PatternSearch,
            initial_step: T::lit(0.25),
            shrink: T::lit(0.5),
            max_iterations: 500,
            tol: T::lit(1e-6),
            seed: 0,
            restarts: 1,
            samples_per_ball: None,
        }
    }
}

impl<T: Real> OptimizerSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > T::zero() && self.initial_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "initial step must be positive, got {}",
                self.initial_step
            )));
        }
        if !(self.shrink > T::zero() && self.shrink < T::one()) {
            return Err(Error::InvalidInput(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.tol >= T::zero()) {
            return Err(Error::InvalidInput("tolerance must be nonnegative".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("need at least one start".into()));
        }
        Ok(())
    }
}

/// One sweep (pattern search) or one step (gradient) of one start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IterationRecord<T> {
    pub restart: usize,
    pub iteration: usize,
    /// Running index over all records of the run.
    pub snapshot: usize,
    pub compliance: T,
    pub scaled: T,
    pub step: T,
    pub accepted: usize,
    pub centers: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OptimizationTrace<T: Real> {
    pub records: Vec<IterationRecord<T>>,
    pub final_config: BallConfig<T>,
    pub final_compliance: T,
    pub final_scaled: T,
    pub best_restart: usize,
    /// False when the iteration cap stopped the best start.
    pub converged: bool,
}

impl<T: Real> OptimizationTrace<T> {
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn restart_records(&self, restart: usize) -> impl Iterator<Item = &IterationRecord<T>> {
        self.records.iter().filter(move |r| r.restart == restart)
    }
}

struct Run<T: Real> {
    records: Vec<IterationRecord<T>>,
    config: BallConfig<T>,
    value: T,
    converged: bool,
}

struct Problem<'a, T: Real> {
    f: &'a ScalarField<T>,
    opts: SolveOptions<T>,
    settings: &'a OptimizerSettings<T>,
    h: T,
    scale: T,
    restart: usize,
}

impl<T: Real> Problem<'_, T> {
    fn value(&self, config: &BallConfig<T>) -> T {
        config_compliance(config, self.f, &self.opts).unwrap_or(T::infinity())
    }

    fn record(&self, records: &mut Vec<IterationRecord<T>>, value: T, step: T, accepted: usize, c: &BallConfig<T>) {
        records.push(IterationRecord {
            restart: self.restart,
            iteration: records.len(),
            snapshot: 0,
            compliance: value,
            scaled: self.scale * value,
            step,
            accepted,
            centers: c.centers().to_vec(),
        });
    }

    fn moved(&self, config: &BallConfig<T>, i: usize, p: Vec<T>) -> BallConfig<T> {
        let r = config.radius();
        let mut centers = config.centers().to_vec();
        centers[i] = config.domain().project_to_neighbourhood(&p, r);
        config.with_centers(centers).expect("same shape")
    }

    fn pattern(
        &self,
        start: BallConfig<T>,
        value: T,
        step0: T,
        budget: usize,
        records: &mut Vec<IterationRecord<T>>,
    ) -> (BallConfig<T>, T, bool) {
        let mut config = start;
        let mut value = value;
        let mut step = step0;
        let d = config.dim();
        for _ in 0..budget {
            let before = value;
            let mut accepted = 0;
            for i in 0..config.n() {
                for a in 0..d {
                    for sign in [T::one(), -T::one()] {
                        let mut p = config.centers()[i].clone();
                        p[a] = p[a] + sign * step;
                        let trial = self.moved(&config, i, p);
                        if trial.centers()[i] == config.centers()[i] {
                            continue;
                        }
                        let v = self.value(&trial);
                        if v < value {
                            config = trial;
                            value = v;
                            accepted += 1;
                            break;
                        }
                    }
                }
            }
            self.record(records, value, step, accepted, &config);
            let gain = relative_gain(before, value);
            if gain < self.settings.tol {
                if step < self.h {
                    return (config, value, true);
                }
                step = step * self.settings.shrink;
            }
        }
        (config, value, false)
    }

    fn gradient(
        &self,
        start: BallConfig<T>,
        value: T,
        step0: T,
        budget: usize,
        records: &mut Vec<IterationRecord<T>>,
    ) -> (BallConfig<T>, T, bool) {
        let samples = self
            .settings
            .samples_per_ball
            .unwrap_or_else(|| default_samples(start.dim()));
        let mut config = start;
        let mut value = value;
        let mut step = step0;
        let floor = self.h * T::lit(0.25);
        for _ in 0..budget {
            let dir = match solve_config(&config, self.f, &self.opts)
                .and_then(|sol| translation_gradient_with(&config, &sol.u, samples))
            {
                Ok(g) => g,
                Err(_) => return (config, value, false),
            };
            let gmax = dir
                .iter()
                .map(|g| g.iter().map(|&x| x * x).sum::<T>().sqrt())
                .fold(T::zero(), T::max);
            if gmax == T::zero() {
                self.record(records, value, step, 0, &config);
                return (config, value, true);
            }
            let mut accepted = 0;
            loop {
                let t = step / gmax;
                let r = config.radius();
                let centers: Vec<Vec<T>> = config
                    .centers()
                    .iter()
                    .zip(&dir)
                    .map(|(c, g)| {
                        let p: Vec<T> = c.iter().zip(g).map(|(&x, &gx)| x + t * gx).collect();
                        config.domain().project_to_neighbourhood(&p, r)
                    })
                    .collect();
                let trial = config.with_centers(centers).expect("same shape");
                let v = self.value(&trial);
                if v < value {
                    config = trial;
                    value = v;
                    accepted = 1;
                    step = (step * T::lit(1.5)).min(step0);
                    break;
                }
                step = step * self.settings.shrink;
                if step < floor {
                    break;
                }
            }
            self.record(records, value, step, accepted, &config);
            if accepted == 0 {
                return (config, value, true);
            }
        }
        (config, value, false)
    }
}

fn relative_gain<T: Real>(before: T, after: T) -> T {
    if before == T::zero() || !before.is_finite() {
        return if after < before { T::infinity() } else { T::zero() };
    }
    (before - after) / before.abs()
}

/// Uniform start in the box, from stream `restart` of the seeded generator.
pub fn random_start<T: Real>(config: &BallConfig<T>, seed: u64, restart: usize) -> BallConfig<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let ext = config.domain().extents();
    let centers = (0..config.n())
        .map(|_| ext.iter().map(|&l| T::lit(rng.gen::<f64>()) * l).collect())
        .collect();
    config.with_centers(centers).expect("same shape")
}

/// Minimizes compliance over ball centers for fixed `α`, `n` and load.
///
/// Start 0 is `config0`; starts `1..restarts` are uniform in the box. The
/// best final value wins, ties going to the lower start index.
pub fn optimize<T: Real>(
    config0: &BallConfig<T>,
    f: &ScalarField<T>,
    settings: &OptimizerSettings<T>,
) -> Result<OptimizationTrace<T>> {
    settings.validate()?;
    let report = crate::balls::config::admissible(config0);
    if !report.admissible {
        return Err(Error::InvalidInput(format!(
            "initial configuration: {}",
            report.violations.join("; ")
        )));
    }
    let opts = SolveOptions::default();
    config_compliance(config0, f, &opts)?;
    let h = f.grid().h_max();
    let scale = scale_factor::<T>(config0.n(), config0.dim());
    let step0 = settings.initial_step * inverse_root::<T>(config0.n(), config0.dim());

    let runs: Vec<Run<T>> = (0..settings.restarts)
        .into_par_iter()
        .map(|restart| {
            let problem = Problem {
                f,
                opts,
                settings,
                h,
                scale,
                restart,
            };
            let start = if restart == 0 {
                config0.clone()
            } else {
                random_start(config0, settings.seed, restart)
            };
            let value = problem.value(&start);
            let mut records = Vec::new();
            problem.record(&mut records, value, step0, 0, &start);
            let budget = settings.max_iterations;
            let (config, value, converged) = match settings.method {
                Method::PatternSearch => problem.pattern(start, value, step0, budget, &mut records),
                Method::ShapeGradient => problem.gradient(start, value, step0, budget, &mut records),
                Method::Hybrid => {
                    let (c, v, _) = problem.gradient(start, value, step0, budget, &mut records);
                    let polish = (h * T::lit(4.0)).min(step0);
                    problem.pattern(c, v, polish, budget, &mut records)
                }
            };
            Run {
                records,
                config,
                value,
                converged,
            }
        })
        .collect();

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value < runs[best].value {
            best = i;
        }
    }
    let mut records = Vec::new();
    let (mut final_config, mut final_value, mut converged) = (config0.clone(), T::infinity(), false);
    for (i, run) in runs.into_iter().enumerate() {
        if i == best {
            final_config = run.config;
            final_value = run.value;
            converged = run.converged;
        }
        records.extend(run.records);
    }
    for (k, r) in records.iter_mut().enumerate() {
        r.snapshot = k;
    }
    Ok(OptimizationTrace {
        records,
        final_scaled: scale * final_value,
        final_compliance: final_value,
        final_config,
        best_restart: best,
        converged,
    })
}
