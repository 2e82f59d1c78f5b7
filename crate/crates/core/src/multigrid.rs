//! Geometric multigrid with Galerkin coarse operators and the Krylov cycle.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::krylov::{axpy, fgmres, gmres_relax_with, Jacobi, KrylovConfig, Operator};
use crate::sparse::{CsrMatrix, RowBuilder, SparseOperator};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Jacobi-GMRES steps used as the coarsest-grid solve.
pub const COARSEST_STEPS: usize = 10;

/// Relative residual at which an inner coarse-grid FGMRES stops early.
pub const COARSE_TOL: f64 = 0.1;

/// Bilinear interpolation from the full-coarsened grid to `fine`.
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub fine: GridSpec,
    pub coarse: GridSpec,
    weights: CsrMatrix<f64>,
    p: SparseOperator,
    pt: SparseOperator,
}

/// Coarse indices and weights contributing to fine index `i` along a line.
fn line_weights(i: usize) -> [(usize, f64); 2] {
    if i % 2 == 0 {
        [(i / 2, 1.0), (i / 2, 0.0)]
    } else {
        [(i / 2, 0.5), (i / 2 + 1, 0.5)]
    }
}

impl Prolongation {
    pub fn new(fine: &GridSpec) -> Result<Self> {
        let coarse = fine.coarsened()?;
        let mut b = RowBuilder::with_capacity(fine.len(), coarse.len(), 4 * fine.len());
        for i2 in 0..fine.n2 {
            for i1 in 0..fine.n1 {
                for (c2, w2) in line_weights(i2) {
                    for (c1, w1) in line_weights(i1) {
                        if w1 * w2 != 0.0 {
                            b.add(coarse.index(c1, c2), w1 * w2);
                        }
                    }
                }
                b.finish_row();
            }
        }
        let weights = b.build();
        let p = weights.to_complex();
        let pt = p.transpose();
        Ok(Prolongation {
            fine: *fine,
            coarse,
            weights,
            p,
            pt,
        })
    }

    pub fn weights(&self) -> &CsrMatrix<f64> {
        &self.weights
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.p
    }

    /// `P^T`
    pub fn restriction(&self) -> &SparseOperator {
        &self.pt
    }

    pub fn prolong(&self, coarse: &[C]) -> Vec<C> {
        self.p.spmv(coarse).expect("coarse vector length")
    }

    pub fn restrict(&self, fine: &[C]) -> Vec<C> {
        self.pt.spmv(fine).expect("fine vector length")
    }
}

pub fn build_prolongation(fine: &GridSpec) -> Result<Prolongation> {
    Prolongation::new(fine)
}

/// `P^T A P`
pub fn galerkin_coarsen(a: &SparseOperator, p: &Prolongation) -> Result<SparseOperator> {
    if a.nrows() != p.fine.len() || a.ncols() != p.fine.len() {
        return Err(Error::DimensionMismatch {
            expected: p.fine.len(),
            found: a.nrows(),
        });
    }
    p.pt.matmul(&a.matmul(&p.p)?)
}

#[derive(Debug, Clone)]
pub struct Level {
    pub grid: GridSpec,
    pub a: SparseOperator,
    pub jacobi: Jacobi,
    /// Pre- and post-relaxation steps; the finest level is level 1 and level
    /// `l` relaxes `l + 1` times.
    pub relax_steps: usize,
    /// Interpolation from the next coarser level, absent on the coarsest.
    pub to_coarse: Option<Prolongation>,
}

/// Galerkin hierarchy, finest level first.
#[derive(Debug, Clone)]
pub struct MGHierarchy {
    levels: Vec<Level>,
    requested: usize,
}

/// Builds up to `max_levels` levels, fewer when the grid cannot be halved
/// further. At least two levels are required.
pub fn build_hierarchy(a0: SparseOperator, grid: &GridSpec, max_levels: usize) -> Result<MGHierarchy> {
    if a0.nrows() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: a0.nrows(),
        });
    }
    if max_levels < 2 || !grid.can_coarsen() {
        return Err(Error::TooFewLevels { n1: grid.n1, n2: grid.n2 });
    }
    let mut levels = Vec::new();
    let mut a = a0;
    let mut g = *grid;
    loop {
        let depth = levels.len() + 1;
        let jacobi = Jacobi::new(&a)?;
        let last = depth == max_levels || !g.can_coarsen();
        let to_coarse = if last { None } else { Some(Prolongation::new(&g)?) };
        let next = match &to_coarse {
            Some(p) => Some((galerkin_coarsen(&a, p)?, p.coarse)),
            None => None,
        };
        levels.push(Level {
            grid: g,
            a,
            jacobi,
            relax_steps: depth + 1,
            to_coarse,
        });
        match next {
            Some((ac, gc)) => {
                a = ac;
                g = gc;
            }
            None => break,
        }
    }
    Ok(MGHierarchy {
        levels,
        requested: max_levels,
    })
}

impl MGHierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn requested_depth(&self) -> usize {
        self.requested
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    /// One grid size, nonzero count and relaxation count per line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (l, lev) in self.levels.iter().enumerate() {
            let relax = if lev.to_coarse.is_none() {
                format!("coarsest solve {COARSEST_STEPS} Jacobi-GMRES steps")
            } else {
                format!("{0} pre / {0} post relaxations", lev.relax_steps)
            };
            let _ = writeln!(s, "level {}: {}x{}, nnz {}, {}", l + 1, lev.grid.n1, lev.grid.n2, lev.a.nnz(), relax);
        }
        s
    }

    /// One Krylov cycle on level `l` (0 is the finest) for `A_l x = b`,
    /// updating `x` in place.
    pub fn k_cycle(&self, l: usize, b: &[C], x: &mut [C]) {
        let lev = &self.levels[l];
        let Some(p) = &lev.to_coarse else {
            gmres_relax_with(&lev.a, &lev.jacobi, b, x, COARSEST_STEPS);
            return;
        };
        gmres_relax_with(&lev.a, &lev.jacobi, b, x, lev.relax_steps);

        let mut ax = vec![ZERO; x.len()];
        lev.a.apply(x, &mut ax);
        let r: Vec<C> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rc = p.restrict(&r);

        let coarse = &self.levels[l + 1];
        let ec = if coarse.to_coarse.is_none() {
            let mut ec = vec![ZERO; rc.len()];
            gmres_relax_with(&coarse.a, &coarse.jacobi, &rc, &mut ec, COARSEST_STEPS);
            ec
        } else {
            let cfg = KrylovConfig {
                restart: 2,
                max_iters: 2,
                tol: COARSE_TOL,
                flexible: true,
                true_residual: false,
            };
            let mut precond = |r: &[C], z: &mut [C]| {
                z.fill(ZERO);
                self.k_cycle(l + 1, r, z);
            };
            let zero = vec![ZERO; rc.len()];
            fgmres(&coarse.a, &rc, &zero, &mut precond, &cfg).expect("coarse dimensions").0
        };
        axpy(C::new(1.0, 0.0), &p.prolong(&ec), x);

        gmres_relax_with(&lev.a, &lev.jacobi, b, x, lev.relax_steps);
    }

    /// The cycle as a preconditioner: `z = K(r)` from a zero guess.
    pub fn precondition(&self, r: &[C], z: &mut [C]) {
        z.fill(ZERO);
        self.k_cycle(0, r, z);
    }
}
