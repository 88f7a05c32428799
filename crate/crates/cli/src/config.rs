//! Typed run configuration. Everything the commands need is validated here,
//! before any output is written.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use fde_lab::mild_solver::{FdeProblem, Nonlinearity, SolverConfig, ZeroForcing};
use fde_lab::periodic_rd::DelayedLogistic;
use fde_lab::semigroups::{MatrixSemigroup, Semigroup, SpectralNeumannSemigroup};
use fde_lab::state_space::{HistorySegment, SegmentView, SpatialField, SpatialGrid};

use crate::ini::{self, Sections};

const KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "semigroup", "diffusivities", "length", "modes", "nodes", "matrix", "tau", "omega",
            "reaction", "a0", "b", "forcing", "coefficient", "initial",
        ],
    ),
    ("solver", &["step", "picard_tol", "picard_max_iters", "r"]),
    (
        "experiment",
        &[
            "t_end", "samples", "r_values", "t_values", "finite_set_size", "decomposition_samples",
            "epsilon", "equicontinuity_samples", "max_iters", "tol", "verify_tol", "steps",
            "order_floor", "seed", "sabotage_l_op",
        ],
    ),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Reaction {
    None,
    Logistic { a0: f64, b: f64, forcing: f64 },
    LinearDelay { coefficient: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SemigroupKind {
    Spectral { diffusivities: Vec<f64>, length: f64, modes: usize, nodes: Option<usize> },
    Matrix { entries: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub semigroup: SemigroupKind,
    pub tau: f64,
    pub omega: Option<f64>,
    pub reaction: Reaction,
    pub initial: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub t_end: f64,
    pub samples: usize,
    pub r_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub finite_set_size: usize,
    pub decomposition_samples: usize,
    pub epsilon: f64,
    pub equicontinuity_samples: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub verify_tol: f64,
    pub steps: Vec<f64>,
    pub order_floor: f64,
    pub seed: u64,
    pub sabotage_l_op: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig<f64>,
    pub experiment: ExperimentConfig,
    pub out_dir: PathBuf,
}

/// A validated model: the semigroup, the problem and the state grid.
pub struct Built {
    pub semigroup: Arc<dyn Semigroup<f64>>,
    pub problem: FdeProblem<f64>,
    pub grid: Arc<SpatialGrid<f64>>,
    pub components: usize,
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&ini::Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn get<V: FromStr>(&self, section: &str, key: &str) -> Result<Option<V>, String> {
        self.raw(section, key)
            .map(|e| {
                e.value
                    .parse()
                    .map_err(|_| format!("line {}: [{section}] {key} = `{}` is not valid", e.line, e.value))
            })
            .transpose()
    }

    fn or<V: FromStr>(&self, section: &str, key: &str, default: V) -> Result<V, String> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.raw(section, key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| format!("line {}: [{section}] {key} must be a comma-separated list of numbers", e.line))
            })
            .transpose()
    }
}

fn check_keys(sections: &Sections) -> Result<(), String> {
    for (name, table) in sections {
        let known = KEYS
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, k)| *k)
            .ok_or_else(|| format!("unknown section [{name}]"))?;
        for (key, entry) in table {
            if !known.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}` in [{name}]", entry.line));
            }
        }
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let sections = ini::parse(text).map_err(|e| e.to_string())?;
        check_keys(&sections)?;
        let rd = Reader { sections: &sections };

        let tau = positive("tau", rd.or("model", "tau", 1.0)?)?;
        let omega = rd.get::<f64>("model", "omega")?.map(|w| positive("omega", w)).transpose()?;
        let semigroup = match rd.or("model", "semigroup", "spectral".to_string())?.as_str() {
            "spectral" => SemigroupKind::Spectral {
                diffusivities: rd.list("model", "diffusivities")?.unwrap_or_else(|| vec![0.1]),
                length: rd.or("model", "length", 1.0)?,
                modes: rd.or("model", "modes", 16)?,
                nodes: rd.get("model", "nodes")?,
            },
            "matrix" => SemigroupKind::Matrix {
                entries: rd.list("model", "matrix")?.ok_or("semigroup = matrix needs a `matrix` entry")?,
            },
            other => return Err(format!("unknown semigroup `{other}` (expected spectral or matrix)")),
        };
        let reaction = match rd.or("model", "reaction", "logistic".to_string())?.as_str() {
            "none" => Reaction::None,
            "logistic" => {
                let b = rd.or("model", "b", 1.0)?;
                if !(b > 0.0) {
                    return Err(format!("b = {b} leaves the logistic reaction unconfined; b must be positive"));
                }
                let forcing: f64 = rd.or("model", "forcing", 0.0)?;
                if !(forcing >= 0.0 && forcing.is_finite()) {
                    return Err(format!("forcing must be >= 0, got {forcing}"));
                }
                Reaction::Logistic { a0: positive("a0", rd.or("model", "a0", 1.0)?)?, b, forcing }
            }
            "linear_delay" => Reaction::LinearDelay { coefficient: rd.or("model", "coefficient", 1.0)? },
            other => return Err(format!("unknown reaction `{other}` (expected none, logistic or linear_delay)")),
        };
        let default_initial = match reaction {
            Reaction::Logistic { a0, b, .. } => a0 / (2.0 * b),
            _ => 1.0,
        };
        let initial: f64 = rd.or("model", "initial", default_initial)?;
        if !initial.is_finite() {
            return Err("initial must be finite".into());
        }
        let model = ModelConfig { semigroup, tau, omega, reaction, initial };

        let step = positive("step", rd.or("solver", "step", tau / 64.0)?)?;
        let solver = SolverConfig::new(step)
            .with_r(rd.or("solver", "r", 0.0)?)
            .with_picard(rd.or("solver", "picard_tol", 1e-10)?, rd.or("solver", "picard_max_iters", 50)?);
        solver.intervals_for(tau).map_err(|e| e.to_string())?;

        let experiment = ExperimentConfig {
            t_end: positive("t_end", rd.or("experiment", "t_end", 4.0 * tau)?)?,
            samples: rd.or("experiment", "samples", 200)?,
            r_values: rd.list("experiment", "r_values")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
            t_values: rd.list("experiment", "t_values")?.unwrap_or_else(|| vec![tau / 2.0, tau, 2.0 * tau]),
            finite_set_size: rd.or("experiment", "finite_set_size", 20)?,
            decomposition_samples: rd.or("experiment", "decomposition_samples", 20)?,
            epsilon: positive("epsilon", rd.or("experiment", "epsilon", 0.05)?)?,
            equicontinuity_samples: rd.or("experiment", "equicontinuity_samples", 10)?,
            max_iters: rd.or("experiment", "max_iters", 200)?,
            tol: positive("tol", rd.or("experiment", "tol", 1e-6)?)?,
            verify_tol: positive("verify_tol", rd.or("experiment", "verify_tol", 1e-5)?)?,
            steps: rd.list("experiment", "steps")?.unwrap_or_else(|| {
                [16.0, 32.0, 64.0, 128.0, 1024.0].iter().map(|n| tau / n).collect()
            }),
            order_floor: rd.or("experiment", "order_floor", 1.5)?,
            seed: rd.or("experiment", "seed", 42)?,
            sabotage_l_op: rd.or("experiment", "sabotage_l_op", false)?,
        };
        let out_dir = PathBuf::from(rd.or("output", "dir", "fde-lab-out".to_string())?);
        let cfg = RunConfig { model, solver, experiment, out_dir };
        cfg.build()?;
        Ok(cfg)
    }

    pub fn build(&self) -> Result<Built, String> {
        let m = &self.model;
        let (semigroup, grid, components): (Arc<dyn Semigroup<f64>>, _, _) = match &m.semigroup {
            SemigroupKind::Spectral { diffusivities, length, modes, nodes } => {
                let s = SpectralNeumannSemigroup::new(diffusivities.clone(), *length, *modes, *nodes)
                    .map_err(|e| e.to_string())?;
                let grid = s.grid().clone();
                (Arc::new(s), grid, diffusivities.len())
            }
            SemigroupKind::Matrix { entries } => {
                let dim = (entries.len() as f64).sqrt().round() as usize;
                let s = MatrixSemigroup::new(dim, entries).map_err(|e| e.to_string())?;
                (Arc::new(s), Arc::new(SpatialGrid::point()), dim)
            }
        };
        let forcing: Arc<dyn Nonlinearity<f64>> = match m.reaction {
            Reaction::None => Arc::new(ZeroForcing),
            Reaction::Logistic { a0, b, forcing } => {
                Arc::new(DelayedLogistic { a0, b, forcing, omega: m.omega.unwrap_or(1.0) })
            }
            Reaction::LinearDelay { coefficient } => {
                Arc::new(move |_t: f64, u: &SegmentView<'_, f64>| u.tail().scaled(-coefficient))
            }
        };
        let start = SpatialField::constant(grid.clone(), components, m.initial);
        let initial = HistorySegment::constant(m.tau, 1, &start).map_err(|e| e.to_string())?;
        let mut problem = FdeProblem::new(semigroup.clone(), forcing, initial).map_err(|e| e.to_string())?;
        if let Some(omega) = m.omega {
            problem = problem.with_period(omega).map_err(|e| e.to_string())?;
        }
        Ok(Built { semigroup, problem, grid, components })
    }

    pub fn intervals(&self) -> usize {
        self.solver.intervals_for(self.model.tau).expect("validated at parse time")
    }

    fn on_grid(&self, name: &str, t: f64) -> Result<(), String> {
        self.solver
            .steps_to(t)
            .map(|_| ())
            .map_err(|_| format!("{name} = {t} is not a multiple of the step {}", self.solver.step))
    }

    pub fn check_simulate(&self) -> Result<(), String> {
        self.on_grid("t_end", self.experiment.t_end)
    }

    pub fn check_verify(&self) -> Result<(), String> {
        let e = &self.experiment;
        if e.samples == 0 || e.decomposition_samples == 0 || e.equicontinuity_samples == 0 {
            return Err("sample counts must be at least 1".into());
        }
        if e.finite_set_size < 2 {
            return Err("finite_set_size must be at least 2".into());
        }
        if e.r_values.is_empty() || e.t_values.is_empty() {
            return Err("r_values and t_values must not be empty".into());
        }
        if let Some(r) = e.r_values.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(format!("r_values must be >= 0, got {r}"));
        }
        for &t in &e.t_values {
            positive("t_values entry", t)?;
            self.on_grid("t_values entry", t)?;
        }
        Ok(())
    }

    pub fn check_periodic(&self) -> Result<f64, String> {
        let omega = self.model.omega.ok_or("find-periodic needs [model] omega")?;
        self.on_grid("omega", omega)?;
        if self.experiment.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        Ok(omega)
    }

    pub fn check_convergence(&self) -> Result<(), String> {
        let steps = &self.experiment.steps;
        if steps.len() < 3 {
            return Err(format!("convergence needs at least 3 steps, got {}", steps.len()));
        }
        if steps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err("steps must be strictly decreasing".into());
        }
        for &h in steps {
            SolverConfig::new(h)
                .intervals_for(self.model.tau)
                .map_err(|_| format!("step {h} does not divide tau = {}", self.model.tau))?;
            SolverConfig::new(h)
                .steps_to(self.experiment.t_end)
                .map_err(|_| format!("t_end = {} is not a multiple of step {h}", self.experiment.t_end))?;
        }
        Ok(())
    }
}
