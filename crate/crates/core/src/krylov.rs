//! Restarted flexible GMRES and short Jacobi-preconditioned GMRES runs.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// `sum conj(a_i) b_i`, accumulated in index order.
pub fn dot(a: &[C], b: &[C]) -> C {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

pub fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha x`
pub fn axpy(alpha: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A square linear map.
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C], y: &mut [C]);
}

impl Operator for SparseOperator {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        self.spmv_into(x, y).expect("operator dimensions");
    }
}

/// Right preconditioner `z = P^-1 r`; may change between applications.
pub trait Preconditioner {
    fn apply(&mut self, r: &[C], z: &mut [C]);
}

impl<F: FnMut(&[C], &mut [C])> Preconditioner for F {
    fn apply(&mut self, r: &[C], z: &mut [C]) {
        self(r, z)
    }
}

/// `z = r`.
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&mut self, r: &[C], z: &mut [C]) {
        z.copy_from_slice(r);
    }
}

/// Reciprocal diagonal of an operator.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<C>,
}

impl Jacobi {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| if d == ZERO { Err(Error::ZeroDiagonal(i)) } else { Ok(d.inv()) })
            .collect::<Result<_>>()?;
        Ok(Jacobi { inv_diag })
    }

    pub fn inv_diag(&self) -> &[C] {
        &self.inv_diag
    }
}

impl Preconditioner for &Jacobi {
    fn apply(&mut self, r: &[C], z: &mut [C]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// `z_j = r_j / A_jj`.
pub fn jacobi_apply(a: &SparseOperator, r: &[C]) -> Result<Vec<C>> {
    if r.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: r.len(),
        });
    }
    let j = Jacobi::new(a)?;
    let mut z = vec![ZERO; r.len()];
    (&j).apply(r, &mut z);
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    /// Krylov vectors per cycle.
    pub restart: usize,
    /// Total preconditioned iterations over all cycles.
    pub max_iters: usize,
    /// Target for `||b - A x|| / ||b||`.
    pub tol: f64,
    /// Store the preconditioned vectors so that the preconditioner may vary.
    pub flexible: bool,
    /// Recompute `b - A x` after each cycle. When off, the solver trusts the
    /// Givens estimate, which saves one product per cycle.
    pub true_residual: bool,
}

impl KrylovConfig {
    pub fn new(restart: usize, max_iters: usize, tol: f64) -> Result<Self> {
        let cfg = KrylovConfig {
            restart,
            max_iters,
            tol,
            flexible: true,
            true_residual: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(Error::InvalidParameter {
                name: "restart",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must be positive, got {}", self.tol),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Preconditioned iterations over all cycles.
    pub iterations: usize,
    /// `||r|| / ||b||` before the first iteration and after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    /// Relative residual of the returned iterate.
    pub final_residual: f64,
    /// The Arnoldi process produced a zero vector before convergence.
    pub breakdown: bool,
    pub wall_time: Duration,
}

impl SolveReport {
    /// `iter,relative_residual` lines with a header.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iter,relative_residual\n");
        for (i, r) in self.history.iter().enumerate() {
            let _ = writeln!(s, "{i},{r:e}");
        }
        s
    }

    /// True when no history entry exceeds its predecessor by more than a
    /// relative `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    /// Appends another run's iterations, as for a multi-stage solve.
    pub fn chain(mut self, next: SolveReport) -> SolveReport {
        self.iterations += next.iterations;
        self.history.extend(next.history.into_iter().skip(1));
        self.converged = next.converged;
        self.final_residual = next.final_residual;
        self.breakdown |= next.breakdown;
        self.wall_time += next.wall_time;
        self
    }
}

struct Givens {
    c: f64,
    s: C,
}

impl Givens {
    /// Rotation zeroing `b` in `(a, b)`.
    fn new(a: C, b: C) -> (Self, C) {
        let na = a.norm();
        let nb = b.norm();
        if nb == 0.0 {
            return (Givens { c: 1.0, s: ZERO }, a);
        }
        if na == 0.0 {
            return (Givens { c: 0.0, s: (b.conj() / nb) }, C::new(nb, 0.0));
        }
        let r = na.hypot(nb);
        let phase = a / na;
        let c = na / r;
        let s = phase * b.conj() / r;
        (Givens { c, s }, phase * r)
    }

    /// `(a, b) -> (c a + s b, -conj(s) a + c b)`
    fn apply(&self, a: C, b: C) -> (C, C) {
        (self.c * a + self.s * b, -self.s.conj() * a + self.c * b)
    }
}

/// Outcome of one Arnoldi cycle.
struct Cycle {
    steps: usize,
    estimate: f64,
    breakdown: bool,
}

/// One restart cycle of right-preconditioned GMRES from the current `x`
/// with initial residual `r` of norm `beta > 0`. Stops after `m` steps or
/// once the estimated residual drops to `stop`. Updates `x` in place and
/// pushes `estimate / scale` per step into `history`.
#[allow(clippy::too_many_arguments)]
fn arnoldi_cycle(
    a: &dyn Operator,
    precond: &mut dyn Preconditioner,
    x: &mut [C],
    r: &[C],
    beta: f64,
    m: usize,
    stop: f64,
    flexible: bool,
    scale: f64,
    history: &mut Vec<f64>,
) -> Cycle {
    let n = x.len();
    let mut v: Vec<Vec<C>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<C>> = Vec::with_capacity(m);
    let mut hess: Vec<Vec<C>> = Vec::with_capacity(m);
    let mut rots: Vec<Givens> = Vec::with_capacity(m);
    let mut g = vec![ZERO; m + 1];
    g[0] = C::new(beta, 0.0);
    v.push(r.iter().map(|ri| ri / beta).collect());

    let mut steps = 0;
    let mut estimate = beta;
    let mut breakdown = false;
    for j in 0..m {
        let mut zj = vec![ZERO; n];
        precond.apply(&v[j], &mut zj);
        let mut w = vec![ZERO; n];
        a.apply(&zj, &mut w);
        z.push(zj);

        let mut col = vec![ZERO; j + 2];
        let before = norm(&w);
        for (i, vi) in v.iter().enumerate() {
            let hij = dot(vi, &w);
            axpy(-hij, vi, &mut w);
            col[i] = hij;
        }
        let mut after = norm(&w);
        if after < 0.7 * before {
            for (i, vi) in v.iter().enumerate() {
                let corr = dot(vi, &w);
                axpy(-corr, vi, &mut w);
                col[i] += corr;
            }
            after = norm(&w);
        }
        col[j + 1] = C::new(after, 0.0);

        for (i, rot) in rots.iter().enumerate() {
            let (p, q) = rot.apply(col[i], col[i + 1]);
            col[i] = p;
            col[i + 1] = q;
        }
        let (rot, diag) = Givens::new(col[j], col[j + 1]);
        col[j] = diag;
        col[j + 1] = ZERO;
        let (gj, gj1) = rot.apply(g[j], ZERO);
        g[j] = gj;
        g[j + 1] = gj1;
        rots.push(rot);
        hess.push(col);

        steps += 1;
        estimate = g[j + 1].norm();
        history.push(estimate / scale);

        if after <= f64::EPSILON * before.max(f64::MIN_POSITIVE) || after == 0.0 {
            breakdown = true;
            break;
        }
        if estimate <= stop {
            break;
        }
        if j + 1 < m {
            v.push(w.iter().map(|wi| wi / after).collect());
        }
    }

    // Back substitution on the triangular factor.
    let mut y = vec![ZERO; steps];
    for i in (0..steps).rev() {
        let mut acc = g[i];
        for k in i + 1..steps {
            acc -= hess[k][i] * y[k];
        }
        let d = hess[i][i];
        y[i] = if d == ZERO { ZERO } else { acc / d };
    }
    if flexible {
        for (k, yk) in y.iter().enumerate() {
            axpy(*yk, &z[k], x);
        }
    } else {
        let mut comb = vec![ZERO; n];
        for (k, yk) in y.iter().enumerate() {
            axpy(*yk, &v[k], &mut comb);
        }
        let mut pz = vec![ZERO; n];
        precond.apply(&comb, &mut pz);
        axpy(C::new(1.0, 0.0), &pz, x);
    }
    Cycle {
        steps,
        estimate,
        breakdown,
    }
}

fn residual(a: &dyn Operator, b: &[C], x: &[C]) -> Vec<C> {
    let mut ax = vec![ZERO; x.len()];
    a.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Restarted right-preconditioned GMRES, flexible when `cfg.flexible`.
///
/// Convergence means `||b - A x|| / ||b|| <= cfg.tol`; with
/// `cfg.true_residual` the check uses a recomputed residual.
pub fn fgmres(
    a: &dyn Operator,
    b: &[C],
    x0: &[C],
    precond: &mut dyn Preconditioner,
    cfg: &KrylovConfig,
) -> Result<(Vec<C>, SolveReport)> {
    cfg.validate()?;
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let start = Instant::now();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![ZERO; n],
            SolveReport {
                iterations: 0,
                history: vec![0.0],
                converged: true,
                final_residual: 0.0,
                breakdown: false,
                wall_time: start.elapsed(),
            },
        ));
    }

    let mut x = x0.to_vec();
    let mut r = if x.iter().all(|v| *v == ZERO) {
        b.to_vec()
    } else {
        residual(a, b, &x)
    };
    let mut beta = norm(&r);
    let mut history = vec![beta / bnorm];
    let mut iterations = 0;
    let mut breakdown = false;
    let stop = cfg.tol * bnorm;

    while beta > stop && iterations < cfg.max_iters {
        let m = cfg.restart.min(cfg.max_iters - iterations);
        let cycle = arnoldi_cycle(a, precond, &mut x, &r, beta, m, stop, cfg.flexible, bnorm, &mut history);
        iterations += cycle.steps;
        if cfg.true_residual {
            r = residual(a, b, &x);
            beta = norm(&r);
        } else {
            beta = cycle.estimate;
            if beta > stop && iterations < cfg.max_iters {
                r = residual(a, b, &x);
                beta = norm(&r);
            }
        }
        if cycle.breakdown {
            breakdown = beta > stop;
            break;
        }
    }

    Ok((
        x,
        SolveReport {
            iterations,
            history,
            converged: beta <= stop,
            final_residual: beta / bnorm,
            breakdown,
            wall_time: start.elapsed(),
        },
    ))
}

/// `steps` iterations of GMRES right-preconditioned by `jacobi`, in place.
/// The residual norm never increases.
pub fn gmres_relax_with(a: &SparseOperator, jacobi: &Jacobi, b: &[C], x: &mut [C], steps: usize) {
    if steps == 0 {
        return;
    }
    let r = residual(a, b, x);
    let beta = norm(&r);
    if beta == 0.0 {
        return;
    }
    let mut sink = Vec::with_capacity(steps);
    let mut p = jacobi;
    arnoldi_cycle(a, &mut p, x, &r, beta, steps, 0.0, true, 1.0, &mut sink);
}

/// Jacobi-preconditioned GMRES relaxation starting from `x`.
pub fn gmres_relax(a: &SparseOperator, b: &[C], x: &mut [C], steps: usize) -> Result<()> {
    let n = a.nrows();
    for len in [b.len(), x.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let j = Jacobi::new(a)?;
    gmres_relax_with(a, &j, b, x, steps);
    Ok(())
}
