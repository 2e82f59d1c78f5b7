//! End-to-end solution strategies for a point source.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::eikonal::TravelTime;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, RealField};
use crate::krylov::{fgmres, KrylovConfig, SolveReport};
use crate::metrics::{default_floor, relative_error_map, ErrorSummary};
use crate::model::{attenuation_layer, point_source, Medium, SourceSpec};
use crate::multigrid::{build_hierarchy, MGHierarchy};
use crate::operators::{
    assemble_adr, assemble_helmholtz, blend, rhs_transform, shift_operator, similarity_conjugate, BCSpec,
    Conjugation, DiagonalScaling, Scheme, Transform,
};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Shifted-Laplacian multigrid on the standard discretization.
    StandardSl,
    /// First-order upwind warm start, then the similarity-scaled central ADR
    /// system with a shifted preconditioner.
    AdrCentralTwoStage,
    /// Second-order upwind ADR preconditioned by a blend with first-order
    /// upwind.
    AdrUpwindBlend,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::StandardSl, Strategy::AdrCentralTwoStage, Strategy::AdrUpwindBlend];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::StandardSl => "standard",
            Strategy::AdrCentralTwoStage => "central",
            Strategy::AdrUpwindBlend => "upwind",
        }
    }

    pub fn needs_travel_time(self) -> bool {
        self != Strategy::StandardSl
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "standard" | "standard_sl" => Ok(Strategy::StandardSl),
            "central" | "adr_central_two_stage" => Ok(Strategy::AdrCentralTwoStage),
            "upwind" | "adr_upwind_blend" => Ok(Strategy::AdrUpwindBlend),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    /// Complex shift of the preconditioner.
    pub alpha: f64,
    /// Weight of the first-order upwind operator in the blended preconditioner.
    pub beta: f64,
    pub stage1_max_cycles: usize,
    pub stage1_tol: f64,
    pub restart: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub levels: usize,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy) -> Self {
        StrategyConfig {
            strategy,
            alpha: 0.2,
            beta: 0.25,
            stage1_max_cycles: 5,
            stage1_tol: 1e-2,
            restart: 5,
            tol: 1e-5,
            max_iters: 500,
            levels: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha", format!("must lie in [0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta", format!("must lie in [0, 1], got {}", self.beta));
        }
        if !(self.tol > 0.0) || !(self.stage1_tol > 0.0) {
            return bad("tol", "tolerances must be positive".into());
        }
        if self.restart == 0 {
            return bad("restart", "must be at least 1".into());
        }
        if self.levels < 2 {
            return bad("levels", format!("need at least 2, got {}", self.levels));
        }
        Ok(())
    }

    fn outer(&self) -> KrylovConfig {
        KrylovConfig {
            restart: self.restart,
            max_iters: self.max_iters,
            tol: self.tol,
            flexible: true,
            true_residual: true,
        }
    }

    fn expect(&self, strategy: Strategy) -> Result<()> {
        self.validate()?;
        if self.strategy != strategy {
            return Err(Error::InvalidParameter {
                name: "strategy",
                reason: format!("expected {}, got {}", strategy.name(), self.strategy.name()),
            });
        }
        Ok(())
    }
}

/// A medium, a source and boundary conditions, with absorbing bands on the
/// radiating sides.
#[derive(Debug, Clone)]
pub struct Problem {
    pub medium: Medium,
    pub source: SourceSpec,
    pub bc: BCSpec,
}

impl Problem {
    /// Adds the absorbing band on every radiating side of `bc`.
    pub fn new(medium: &Medium, source: SourceSpec, bc: BCSpec) -> Result<Self> {
        let medium = attenuation_layer(medium, &source, &bc.sommerfeld_sides())?;
        Ok(Problem { medium, source, bc })
    }

    /// Uses `medium` as given.
    pub fn without_layer(medium: Medium, source: SourceSpec, bc: BCSpec) -> Self {
        Problem { medium, source, bc }
    }

    pub fn grid(&self) -> &GridSpec {
        self.medium.grid()
    }

    pub fn omega(&self) -> f64 {
        self.source.omega
    }

    pub fn rhs(&self) -> ComplexField {
        point_source(self.grid(), &self.source)
    }

    pub fn helmholtz(&self) -> SparseOperator {
        assemble_helmholtz(&self.medium, self.omega(), &self.bc)
    }

    pub fn adr(&self, tt: &TravelTime, scheme: Scheme) -> Result<SparseOperator> {
        assemble_adr(&self.medium, self.omega(), tt, scheme, &self.bc)
    }
}

/// Grid of `n1 x n2` nodes whose spacing gives 17.5 points per wavelength
/// at `f = 3.5` for `kappa^2 = 0.4` when `n1 = 769`, scaled with `n1`.
pub fn benchmark_grid(n1: usize, n2: usize) -> Result<GridSpec> {
    let h = 768.0 / ((n1.max(2) - 1) as f64) / (0.4f64.sqrt() * 3.5 * 17.5);
    GridSpec::new(n1, n2, (n1.max(2) - 1) as f64 * h, (n2.max(2) - 1) as f64 * h)
}

/// Result of one strategy.
#[derive(Debug, Clone)]
pub struct Solution {
    pub strategy: Strategy,
    pub u: ComplexField,
    /// Amplitude for the ADR strategies.
    pub a: Option<ComplexField>,
    /// Final (or only) Krylov run.
    pub report: SolveReport,
    /// Warm-start run of the two-stage strategy.
    pub stage1: Option<SolveReport>,
    /// Assembly and hierarchy construction.
    pub setup_time: Duration,
}

impl Solution {
    /// Preconditioned iterations over all stages.
    pub fn total_iterations(&self) -> usize {
        self.report.iterations + self.stage1.as_ref().map_or(0, |r| r.iterations)
    }

    pub fn converged(&self) -> bool {
        self.report.converged
    }

    pub fn solve_time(&self) -> Duration {
        self.report.wall_time + self.stage1.as_ref().map_or(Duration::ZERO, |r| r.wall_time)
    }
}

fn run(
    a: &SparseOperator,
    b: &[Complex64],
    x0: &[Complex64],
    hierarchy: &MGHierarchy,
    cfg: &KrylovConfig,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let mut precond = |r: &[Complex64], z: &mut [Complex64]| hierarchy.precondition(r, z);
    fgmres(a, b, x0, &mut precond, cfg)
}

/// FGMRES on `H u = q` preconditioned by one K-cycle on the shifted
/// operator, from a zero guess.
pub fn solve_standard(h: &SparseOperator, q: &ComplexField, medium: &Medium, omega: f64, cfg: &StrategyConfig) -> Result<Solution> {
    cfg.expect(Strategy::StandardSl)?;
    let grid = *q.grid();
    grid.check_same(medium.grid())?;
    let t0 = Instant::now();
    let hs = shift_operator(h, cfg.alpha, omega, medium)?;
    let hierarchy = build_hierarchy(hs, &grid, cfg.levels)?;
    let setup_time = t0.elapsed();
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (u, report) = run(h, q.values(), &zero, &hierarchy, &cfg.outer())?;
    Ok(Solution {
        strategy: Strategy::StandardSl,
        u: ComplexField::from_values(grid, u)?,
        a: None,
        report,
        stage1: None,
        setup_time,
    })
}

/// Two-stage central ADR solve. Stage 1 runs a few cycles on the
/// first-order upwind system without shift; stage 2 solves
/// `M H_cen M^-1 u = q` from the stage-1 waveform.
pub fn solve_adr_central(problem: &Problem, tt: &TravelTime, cfg: &StrategyConfig) -> Result<Solution> {
    cfg.expect(Strategy::AdrCentralTwoStage)?;
    let grid = *problem.grid();
    let omega = problem.omega();
    let q = problem.rhs();
    let q_hat = rhs_transform(&q, tt, omega, Transform::ToAdr)?;
    let m = DiagonalScaling::new(tt, omega);

    let t0 = Instant::now();
    let h1 = problem.adr(tt, Scheme::Upwind1)?;
    let hier1 = build_hierarchy(h1.clone(), &grid, cfg.levels)?;
    let mut setup_time = t0.elapsed();
    let stage1_cfg = KrylovConfig {
        restart: cfg.restart,
        max_iters: cfg.stage1_max_cycles,
        tol: cfg.stage1_tol,
        flexible: true,
        true_residual: true,
    };
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (a1, stage1) = run(&h1, q_hat.values(), &zero, &hier1, &stage1_cfg)?;
    drop(hier1);
    let u1 = m.apply(&a1);

    let t1 = Instant::now();
    let hcen = similarity_conjugate(&problem.adr(tt, Scheme::Central)?, &m, Conjugation::MAMinv)?;
    let shifted = shift_operator(&hcen, cfg.alpha, omega, &problem.medium)?;
    let hier2 = build_hierarchy(shifted, &grid, cfg.levels)?;
    setup_time += t1.elapsed();
    let (u, report) = run(&hcen, q.values(), &u1, &hier2, &cfg.outer())?;
    let a = m.apply_inverse(&u);
    Ok(Solution {
        strategy: Strategy::AdrCentralTwoStage,
        u: ComplexField::from_values(grid, u)?,
        a: Some(ComplexField::from_values(grid, a)?),
        report,
        stage1: Some(stage1),
        setup_time,
    })
}

/// Second-order upwind ADR solve preconditioned by a K-cycle on
/// `(1 - beta) H_2up + beta H_1up`.
pub fn solve_adr_upwind(problem: &Problem, tt: &TravelTime, cfg: &StrategyConfig) -> Result<Solution> {
    cfg.expect(Strategy::AdrUpwindBlend)?;
    let grid = *problem.grid();
    let omega = problem.omega();
    let q_hat = rhs_transform(&problem.rhs(), tt, omega, Transform::ToAdr)?;

    let t0 = Instant::now();
    let h2 = problem.adr(tt, Scheme::Upwind2)?;
    let h1 = problem.adr(tt, Scheme::Upwind1)?;
    let b = blend(&h2, &h1, cfg.beta)?;
    drop(h1);
    let hierarchy = build_hierarchy(b, &grid, cfg.levels)?;
    let setup_time = t0.elapsed();
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (a, report) = run(&h2, q_hat.values(), &zero, &hierarchy, &cfg.outer())?;
    let a = ComplexField::from_values(grid, a)?;
    Ok(Solution {
        strategy: Strategy::AdrUpwindBlend,
        u: compose_waveform(&a, tt, omega)?,
        a: Some(a),
        report,
        stage1: None,
        setup_time,
    })
}

/// Dispatches on `cfg.strategy`. `tt` is required for the ADR strategies.
pub fn solve(problem: &Problem, tt: Option<&TravelTime>, cfg: &StrategyConfig) -> Result<Solution> {
    let need_tt = || {
        tt.ok_or(Error::InvalidParameter {
            name: "travel time",
            reason: format!("strategy {} needs a travel time", cfg.strategy.name()),
        })
    };
    match cfg.strategy {
        Strategy::StandardSl => solve_standard(&problem.helmholtz(), &problem.rhs(), &problem.medium, problem.omega(), cfg),
        Strategy::AdrCentralTwoStage => solve_adr_central(problem, need_tt()?, cfg),
        Strategy::AdrUpwindBlend => solve_adr_upwind(problem, need_tt()?, cfg),
    }
}

/// `u = a exp(-i omega tau)`
pub fn compose_waveform(a: &ComplexField, tt: &TravelTime, omega: f64) -> Result<ComplexField> {
    rhs_transform(a, tt, omega, Transform::ToHelmholtz)
}

/// `||u - v|| / ||v||` in the discrete 2-norm.
pub fn relative_l2(u: &ComplexField, v: &ComplexField) -> Result<f64> {
    u.grid().check_same(v.grid())?;
    let num: f64 = u.values().iter().zip(v.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = v.values().iter().map(|b| b.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone)]
pub struct Accuracy {
    pub name: String,
    pub errors: RealField,
    /// Statistics over nodes where `|u_ref|` reaches the floor.
    pub summary: ErrorSummary,
}

/// Pointwise relative errors against a reference on the same grid.
pub fn accuracy_compare(solutions: &[(String, ComplexField)], u_ref: &ComplexField) -> Result<Vec<Accuracy>> {
    let floor = default_floor(u_ref);
    solutions
        .iter()
        .map(|(name, u)| {
            let errors = relative_error_map(u, u_ref, floor)?;
            let samples = errors
                .values()
                .iter()
                .zip(u_ref.values())
                .filter(|(_, r)| r.norm() >= floor)
                .map(|(e, _)| *e)
                .collect();
            Ok(Accuracy {
                name: name.clone(),
                summary: ErrorSummary::from_samples(samples),
                errors,
            })
        })
        .collect()
}
