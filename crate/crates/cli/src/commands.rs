use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use fde_lab::contraction_lab::*;
use fde_lab::mild_solver::{convergence_study, solve, SolverConfig};
use fde_lab::periodic_rd::{find_periodic, verify_periodicity};
use fde_lab::scalar::fmt17;
use fde_lab::state_space::{renorm, segment_sup_norm, RenormWeights};
use fde_lab::LabError;

use crate::config::{Built, RunConfig};

/// Process outcome, mapped one-to-one onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Property(String),
    NonConvergence(String),
    OrderFloor(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Solver(_) => 2,
            Failure::Property(_) => 3,
            Failure::NonConvergence(_) => 4,
            Failure::OrderFloor(_) => 5,
            Failure::Config(_) => 64,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::Solver(m)
            | Failure::Property(m)
            | Failure::NonConvergence(m)
            | Failure::OrderFloor(m) => m,
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::PropertyFailure { .. } | LabError::HypothesisViolation(_) => Failure::Property(e.to_string()),
            LabError::Stiffness { .. } | LabError::Model { .. } | LabError::Io(_) => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("i/o error: {e}"))
    }
}

/// Output directory, created on first write so that rejected configs leave nothing behind.
pub struct Output {
    dir: PathBuf,
    quiet: bool,
    summary: Vec<(String, String)>,
}

impl Output {
    pub fn new(dir: PathBuf, quiet: bool) -> Self {
        Self { dir, quiet, summary: Vec::new() }
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        fs::create_dir_all(&self.dir)?;
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> fde_lab::Result<()>) -> Result<(), Failure> {
        let mut w = self.file(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    /// Writes `summary.txt` and echoes it unless quiet.
    pub fn finish(&self) -> Result<(), Failure> {
        let mut w = self.file("summary.txt")?;
        for (k, v) in &self.summary {
            writeln!(w, "{k} = {v}")?;
            if !self.quiet {
                println!("{k} = {v}");
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn write_witness(out: &Output, e: &LabError) -> Result<(), Failure> {
    if let LabError::PropertyFailure { witness_csv: Some(csv), .. } = e {
        let mut w = out.file("witness.csv")?;
        w.write_all(csv.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    cfg.check_simulate().map_err(Failure::Config)?;
    let built = cfg.build().map_err(Failure::Config)?;
    let start = Instant::now();
    let t_end = cfg.experiment.t_end;
    let traj = solve(&built.problem, &cfg.solver, t_end);
    out.note("command", "simulate");
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            out.note("status", format!("solver failure: {e}"));
            out.finish()?;
            return Err(e.into());
        }
    };
    out.write("trajectory.csv", |w| traj.write_csv(w))?;
    let last = traj.segment(t_end)?;
    let w = RenormWeights::new(cfg.solver.r, cfg.model.tau)?;
    out.note("t_end", fmt17(t_end));
    out.note("steps", traj.steps());
    out.note("final_head_sup_norm", fmt17(last.head().norm()));
    out.note("final_segment_sup_norm", fmt17(segment_sup_norm(&last)));
    out.note("final_segment_renorm", fmt17(renorm(&last, &w)?));
    out.note("trajectory_sup_norm", fmt17(traj.sup_norm()));
    out.note("max_picard_iterations", traj.max_picard_iters());
    out.note("runtime_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    out.note("status", "ok");
    out.finish()
}

#[derive(Default)]
struct TheoremA {
    equivalence: Vec<NormEquivalenceReport<f64>>,
    contraction: Vec<DecompositionReport<f64>>,
    finite: Vec<FiniteSetReport<f64>>,
    consistency: Vec<DecompositionReport<f64>>,
    continuity: Vec<EquicontinuityReport<f64>>,
}

pub fn verify_theorem_a(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    cfg.check_verify().map_err(Failure::Config)?;
    let built = cfg.build().map_err(Failure::Config)?;
    out.note("command", "verify-theorem-a");
    out.note("seed", cfg.experiment.seed);
    let mut reports = TheoremA::default();
    let result = run_theorem_a(cfg, &built, &mut reports);

    out.write("norm_equivalence.csv", |w| write_norm_equivalence_csv(&reports.equivalence, w))?;
    out.write("l_contraction.csv", |w| write_decomposition_csv(&reports.contraction, w))?;
    out.write("finite_sets.csv", |w| write_finite_set_csv(&reports.finite, w))?;
    out.write("decomposition.csv", |w| write_decomposition_csv(&reports.consistency, w))?;
    out.write("equicontinuity.csv", |w| write_equicontinuity_csv(&reports.continuity, w))?;

    let margin = reports.contraction.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let residual = reports.consistency.iter().filter_map(|r| r.consistency_residual).fold(0.0, f64::max);
    out.note("l_contraction_checks", reports.contraction.len());
    if margin.is_finite() {
        out.note("l_contraction_min_margin", fmt17(margin));
    }
    out.note("decomposition_max_residual", fmt17(residual));
    out.note("equicontinuity_checks", reports.continuity.len());
    match &result {
        Ok(()) => out.note("status", "all properties hold"),
        Err(err) => {
            write_witness(out, err)?;
            out.note("status", format!("failed: {err}"));
        }
    }
    out.finish()?;
    result.map_err(Failure::from)
}

fn property(name: &str, detail: String) -> LabError {
    LabError::PropertyFailure { property: name.into(), detail, witness_csv: None }
}

fn run_theorem_a(cfg: &RunConfig, built: &Built, reports: &mut TheoremA) -> fde_lab::Result<()> {
    let e = &cfg.experiment;
    let spec = SampleSpec::new(cfg.model.tau, cfg.intervals(), built.grid.clone(), built.components, e.seed)?;
    let branch = if e.sabotage_l_op { HistoryBranch::OffByOneNode } else { HistoryBranch::Exact };
    let s = &built.semigroup;

    for &r in &e.r_values {
        let samples = spec.draw(e.samples, r);
        reports.equivalence.push(verify_norm_equivalence(r, &samples)?);
        reports.contraction.extend(verify_l_contraction(s, r, &e.t_values, &samples, branch)?);
        let set = &samples[..e.finite_set_size.min(samples.len())];
        if set.len() >= 2 {
            for &t in &e.t_values {
                reports.finite.push(finite_set_contraction(set, t, r, s, branch)?);
            }
        }
    }

    let limit = 2.0 * cfg.solver.picard_tol;
    let decomposition_set = spec.draw(e.decomposition_samples, 1.0);
    let continuity_set = spec.draw(e.equicontinuity_samples, 1.0);
    for &r in &e.r_values {
        let solver = cfg.solver.with_r(r);
        for rep in decomposition_consistency(&built.problem, &solver, &e.t_values, &decomposition_set)? {
            reports.consistency.push(rep);
            let residual = rep.consistency_residual.unwrap_or(0.0);
            if residual > limit {
                let detail = format!("t = {}, r = {r}: residual {residual:e} > {limit:e}", rep.t);
                return Err(property("decomposition identity", detail));
            }
        }
        for &t in e.t_values.iter().filter(|t| **t > e.epsilon) {
            let rep = match equicontinuity_report(t, &built.problem, &solver, &continuity_set, e.epsilon) {
                Ok(rep) => rep,
                // the identity flow has no continuity modulus to compare against
                Err(LabError::UnsupportedModel(_)) => continue,
                Err(err) => return Err(err),
            };
            reports.continuity.push(rep);
            if !rep.passed {
                let detail = format!("t = {t}, r = {r}: modulus {:e} > bound {:e}", rep.measured_modulus, rep.bound);
                return Err(property("equicontinuity", detail));
            }
        }
    }
    Ok(())
}

pub fn find_periodic_orbit(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let omega = cfg.check_periodic().map_err(Failure::Config)?;
    let built = cfg.build().map_err(Failure::Config)?;
    let e = &cfg.experiment;
    let start = Instant::now();
    out.note("command", "find-periodic");
    let phi0 = built.problem.initial().resample(cfg.intervals())?;
    let res = match find_periodic(&built.problem, &cfg.solver, &phi0, e.max_iters, e.tol) {
        Ok(r) => r,
        Err(err) => {
            out.note("status", format!("solver failure: {err}"));
            out.finish()?;
            return Err(err.into());
        }
    };
    out.write("orbit.csv", |w| res.segment.write_csv(w))?;
    out.write("orbit_meta.csv", |w| res.write_meta_csv(w))?;
    out.write("history.csv", |w| res.write_history_csv(w))?;
    out.note("omega", fmt17(omega));
    out.note("renorm_r", fmt17(res.renorm_r));
    out.note("residual", fmt17(res.residual));
    out.note("iterations", res.iterations);
    out.note("newton_steps", res.newton_steps);
    out.note("converged", res.converged);
    if !res.converged {
        out.note("runtime_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
        out.note("status", "not converged; best iterate saved");
        out.finish()?;
        return Err(Failure::NonConvergence(format!(
            "no periodic orbit within {} iterations (best residual {:e})",
            e.max_iters, res.residual
        )));
    }
    let check = verify_periodicity(&built.problem, &cfg.solver, &res.segment, e.verify_tol)?;
    out.write("periodicity.csv", |w| check.write_csv(w))?;
    out.note("periodicity_defect", fmt17(check.defect));
    out.note("periodicity_passed", check.passed);
    out.note("runtime_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    if !check.passed {
        out.note("status", "periodicity check failed");
        out.finish()?;
        return Err(Failure::Property(format!(
            "periodicity defect {:e} exceeds {:e} (1 + {:e})",
            check.defect, check.tolerance, check.magnitude
        )));
    }
    out.note("status", "ok");
    out.finish()
}

pub fn convergence(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    cfg.check_convergence().map_err(Failure::Config)?;
    let built = cfg.build().map_err(Failure::Config)?;
    let e = &cfg.experiment;
    out.note("command", "convergence");
    let base = SolverConfig { step: e.steps[0], ..cfg.solver };
    let table = match convergence_study(&built.problem, &base, &e.steps, e.t_end) {
        Ok(t) => t,
        Err(err) => {
            out.note("status", format!("solver failure: {err}"));
            out.finish()?;
            return Err(err.into());
        }
    };
    out.write("convergence.csv", |w| table.write_csv(w))?;
    let order = table.min_order().unwrap_or(f64::NAN);
    out.note("reference_step", fmt17(table.reference_step));
    out.note("min_observed_order", fmt17(order));
    out.note("order_floor", fmt17(e.order_floor));
    if !(order >= e.order_floor) {
        out.note("status", "observed order below floor");
        out.finish()?;
        return Err(Failure::OrderFloor(format!("observed order {order:.4} < floor {}", e.order_floor)));
    }
    out.note("status", "ok");
    out.finish()
}
