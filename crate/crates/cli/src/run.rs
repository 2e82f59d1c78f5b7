//! Runs a configured experiment and writes its outputs.
//!
//! Output directory layout:
//! - `summary.csv`: `strategy,iters,t_sol,t_fm`, one row per solve
//! - `residuals_<strategy>.csv`: relative residual history, both stages chained
//! - `u_<strategy>.f64`, `a_<strategy>.f64`: wavefield and amplitude dumps
//! - `tau1.f64`: travel-time correction factor
//! - `e_<strategy>.f64`, `accuracy.csv`: relative error maps and summaries (`compare`)
//!
//! Every `.f64` dump has a `.meta` sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use helmadr::eikonal::TravelTime;
use helmadr::io::{load_model_raw, meta_path, read_metadata, write_complex_field, write_real_field};
use helmadr::metrics::downsample;
use helmadr::model::{generate_model, Medium, ModelKind, SourceSpec};
use helmadr::solvers::{accuracy_compare, solve, Accuracy, Problem, Solution, Strategy, StrategyConfig};
use helmadr::{ComplexField, GridSpec};

use crate::config::{Command, ConfigError, ModelSource, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] helmadr::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub iters: usize,
    /// Krylov wall time over all stages, seconds.
    pub t_sol: f64,
    /// Fast Marching wall time, seconds; zero when no travel time was used.
    pub t_fm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rows: Vec<SummaryRow>,
    pub accuracy: Vec<(String, f64, f64, f64, usize)>,
    pub all_converged: bool,
}

pub const SUMMARY_HEADER: &str = "strategy,iters,t_sol,t_fm";
pub const ACCURACY_HEADER: &str = "strategy,median,p95,max,count";

/// Medium on the configured grid.
pub fn load_medium(cfg: &RunConfig) -> Result<Medium, RunError> {
    match &cfg.model {
        ModelSource::Analytic(kind) => Ok(generate_model(*kind, &cfg.grid()?)?),
        ModelSource::File(path) => {
            let grid = if meta_path(path).exists() {
                let g = read_metadata(path)?.grid()?;
                if let Some(n) = cfg.n {
                    if n != g.dims() {
                        return Err(ConfigError::Key {
                            key: "n".into(),
                            message: format!("{}x{} disagrees with the {}x{} sidecar of {}", n.0, n.1, g.n1, g.n2, path.display()),
                        }
                        .into());
                    }
                }
                match cfg.extent {
                    Some((l1, l2)) => GridSpec::new(g.n1, g.n2, l1, l2)?,
                    None => g,
                }
            } else {
                cfg.grid()?
            };
            cfg.check_grid(&grid)?;
            Ok(load_model_raw(&grid, path)?)
        }
    }
}

fn source_for(cfg: &RunConfig, grid: &GridSpec) -> Result<SourceSpec, RunError> {
    Ok(match cfg.source {
        Some((i1, i2)) => SourceSpec::from_frequency(grid, i1, i2, cfg.f)?,
        None => SourceSpec::top_center(grid, 2.0 * std::f64::consts::PI * cfg.f)?,
    })
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6},{:.6}", r.strategy, r.iters, r.t_sol, r.t_fm);
    }
    s
}

fn write_solution(out: &Path, s: &Solution) -> Result<(), RunError> {
    let name = s.strategy.name();
    let history = match &s.stage1 {
        Some(stage1) => stage1.clone().chain(s.report.clone()),
        None => s.report.clone(),
    };
    write_text(&out.join(format!("residuals_{name}.csv")), &history.history_csv())?;
    write_complex_field(&out.join(format!("u_{name}.f64")), &s.u)?;
    if let Some(a) = &s.a {
        write_complex_field(&out.join(format!("a_{name}.f64")), a)?;
    }
    Ok(())
}

fn timed_travel_time(medium: &Medium, source: &SourceSpec, cfg: &RunConfig) -> Result<(TravelTime, f64), RunError> {
    let start = Instant::now();
    let tt = TravelTime::compute(medium, source, cfg.order)?;
    Ok((tt, start.elapsed().as_secs_f64()))
}

fn solver_config(cfg: &RunConfig, strategy: Strategy) -> StrategyConfig {
    StrategyConfig { strategy, ..cfg.solver }
}

/// Runs the experiment, writing each output as soon as it exists so that a
/// failing solve leaves the earlier results in place.
pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome, RunError> {
    helmadr::sparse::set_sequential(cfg.sequential);
    create_dir(&cfg.out)?;
    let medium = load_medium(cfg)?;
    let grid = *medium.grid();
    let source = source_for(cfg, &grid)?;
    let mut rows = Vec::new();
    let mut accuracy = Vec::new();
    let mut all_converged = true;

    if cfg.command == Command::Eikonal {
        let (tt, t_fm) = timed_travel_time(&medium, &source, cfg)?;
        write_real_field(&cfg.out.join("tau1.f64"), &tt.tau1)?;
        rows.push(SummaryRow {
            strategy: "eikonal".into(),
            iters: 0,
            t_sol: 0.0,
            t_fm,
        });
        write_text(&cfg.out.join("summary.csv"), &summary_csv(&rows))?;
        return Ok(Outcome {
            rows,
            accuracy,
            all_converged,
        });
    }

    let strategies: Vec<Strategy> = match cfg.command {
        Command::Compare => Strategy::ALL.to_vec(),
        _ => cfg.strategies.clone(),
    };
    let problem = Problem::new(&medium, source, cfg.bc)?;
    let travel = if strategies.iter().any(|s| s.needs_travel_time()) {
        let (tt, t_fm) = timed_travel_time(&problem.medium, &source, cfg)?;
        write_real_field(&cfg.out.join("tau1.f64"), &tt.tau1)?;
        Some((tt, t_fm))
    } else {
        None
    };

    let mut solutions = Vec::new();
    for strategy in strategies {
        let s = solve(&problem, travel.as_ref().map(|t| &t.0), &solver_config(cfg, strategy))?;
        write_solution(&cfg.out, &s)?;
        all_converged &= s.converged();
        rows.push(SummaryRow {
            strategy: strategy.name().into(),
            iters: s.total_iterations(),
            t_sol: s.solve_time().as_secs_f64(),
            t_fm: if strategy.needs_travel_time() { travel.as_ref().map_or(0.0, |t| t.1) } else { 0.0 },
        });
        write_text(&cfg.out.join("summary.csv"), &summary_csv(&rows))?;
        solutions.push((strategy.name().to_string(), s.u));
    }

    if cfg.command == Command::Compare {
        let (reference, converged) = reference_solution(cfg, &grid)?;
        all_converged &= converged;
        let acc: Vec<Accuracy> = accuracy_compare(&solutions, &reference)?;
        let mut text = format!("{ACCURACY_HEADER}\n");
        for a in &acc {
            write_real_field(&cfg.out.join(format!("e_{}.f64", a.name)), &a.errors)?;
            let m = &a.summary;
            let _ = writeln!(text, "{},{:e},{:e},{:e},{}", a.name, m.median, m.p95, m.max, m.count);
            accuracy.push((a.name.clone(), m.median, m.p95, m.max, m.count));
        }
        write_text(&cfg.out.join("accuracy.csv"), &text)?;
    }

    Ok(Outcome {
        rows,
        accuracy,
        all_converged,
    })
}

/// Standard shifted-Laplacian solve on a grid refined by `ref_factor`,
/// injected back onto the working grid.
fn reference_solution(cfg: &RunConfig, grid: &GridSpec) -> Result<(ComplexField, bool), RunError> {
    let kind: ModelKind = match &cfg.model {
        ModelSource::Analytic(kind) => *kind,
        ModelSource::File(_) => {
            return Err(ConfigError::Key {
                key: "model-file".into(),
                message: "compare needs an analytic model to build the refined reference".into(),
            }
            .into())
        }
    };
    let r = cfg.ref_factor;
    let fine = GridSpec::new((grid.n1 - 1) * r + 1, (grid.n2 - 1) * r + 1, grid.l1, grid.l2)?;
    let medium = generate_model(kind, &fine)?;
    let coarse_source = source_for(cfg, grid)?;
    let source = SourceSpec::new(&fine, coarse_source.i1 * r, coarse_source.i2 * r, coarse_source.omega)?;
    let problem = Problem::new(&medium, source, cfg.bc)?;
    let mut scfg = solver_config(cfg, Strategy::StandardSl);
    scfg.tol = scfg.tol.min(1e-8);
    scfg.max_iters = scfg.max_iters.max(2000);
    let s = solve(&problem, None, &scfg)?;
    Ok((downsample(&s.u, r)?, s.converged()))
}

/// Human-readable summary for standard output.
pub fn render_outcome(o: &Outcome) -> String {
    let mut s = summary_csv(&o.rows);
    if !o.accuracy.is_empty() {
        let _ = writeln!(s, "{ACCURACY_HEADER}");
        for (name, median, p95, max, count) in &o.accuracy {
            let _ = writeln!(s, "{name},{median:e},{p95:e},{max:e},{count}");
        }
    }
    s
}
