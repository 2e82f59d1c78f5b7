//! Travel time from a point source.
//!
//! The travel time is factored as `tau = tau0 * tau1`, where `tau0` is the
//! distance to the source and `tau1` is computed by Fast Marching. The ADR
//! operators need `grad(tau)` and `lap(tau)`, which are assembled from the
//! analytic derivatives of `tau0` and finite differences of `tau1`.

mod fast_march;

pub use fast_march::{
    fast_march, fast_march_traced, gather_stencils, local_update, solve_subset, update_quadratic,
    AxisStencil, FmOrder, MarchTrace,
};

use crate::error::Result;
use crate::grid::{GridSpec, RealField};
use crate::model::{Medium, SourceSpec};

/// The distance factor `tau0 = |x - x0|` and its derivatives in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBase {
    pub x0: (f64, f64),
    pub source_index: usize,
}

impl AnalyticBase {
    pub fn new(grid: &GridSpec, source: &SourceSpec) -> Self {
        AnalyticBase {
            x0: source.coords(grid),
            source_index: source.index(grid),
        }
    }

    #[inline]
    pub fn tau0(&self, x1: f64, x2: f64) -> f64 {
        (x1 - self.x0.0).hypot(x2 - self.x0.1)
    }

    /// Unit vector away from the source; zero at the source itself.
    #[inline]
    pub fn grad_tau0(&self, x1: f64, x2: f64) -> [f64; 2] {
        let r = self.tau0(x1, x2);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        [(x1 - self.x0.0) / r, (x2 - self.x0.1) / r]
    }

    /// `(d - 1) / r` with `d = 2`; infinite at the source.
    #[inline]
    pub fn lap_tau0(&self, x1: f64, x2: f64) -> f64 {
        1.0 / self.tau0(x1, x2)
    }
}

/// Travel time and the coefficient fields derived from it.
#[derive(Debug, Clone)]
pub struct TravelTime {
    pub tau1: RealField,
    pub base: Option<AnalyticBase>,
    /// Full travel time `tau0 * tau1`.
    pub tau: RealField,
    pub grad_tau: [RealField; 2],
    pub lap_tau: RealField,
}

impl TravelTime {
    /// Fast Marching followed by [`tau_derivatives`].
    pub fn compute(medium: &Medium, source: &SourceSpec, order: FmOrder) -> Result<Self> {
        let tau1 = fast_march(medium, source, order)?;
        let base = AnalyticBase::new(medium.grid(), source);
        Ok(Self::from_tau1(tau1, base))
    }

    pub fn from_tau1(tau1: RealField, base: AnalyticBase) -> Self {
        let grid = *tau1.grid();
        let tau = RealField::from_values(
            grid,
            (0..grid.len())
                .map(|k| {
                    let (i1, i2) = grid.node(k);
                    let (x1, x2) = grid.coords(i1, i2);
                    base.tau0(x1, x2) * tau1.values()[k]
                })
                .collect(),
        )
        .expect("same grid");
        let (grad_tau, lap_tau) = tau_derivatives(&tau1, &base);
        TravelTime {
            tau1,
            base: Some(base),
            tau,
            grad_tau,
            lap_tau,
        }
    }

    /// `tau = 0` everywhere: the ADR operators reduce to the Helmholtz one.
    pub fn zero(grid: &GridSpec) -> Self {
        let z = RealField::zeros(*grid);
        TravelTime {
            tau1: z.clone(),
            base: None,
            tau: z.clone(),
            grad_tau: [z.clone(), z.clone()],
            lap_tau: z,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.tau.grid()
    }

    /// True for the node where the coefficients follow the source
    /// convention rather than finite differences.
    pub fn is_source(&self, index: usize) -> bool {
        self.base.is_some_and(|b| b.source_index == index)
    }
}

/// First derivative of nodal values along a line: central inside,
/// first-order one-sided at the two ends.
fn first_derivative(f: impl Fn(usize) -> f64, n: usize, j: usize, h: f64) -> f64 {
    if j == 0 {
        (f(1) - f(0)) / h
    } else if j == n - 1 {
        (f(n - 1) - f(n - 2)) / h
    } else {
        (f(j + 1) - f(j - 1)) / (2.0 * h)
    }
}

/// Second derivative: 3-point inside, second-order one-sided 4-point at
/// the ends.
fn second_derivative(f: impl Fn(usize) -> f64, n: usize, j: usize, h: f64) -> f64 {
    let h2 = h * h;
    if j == 0 {
        (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
    } else if j == n - 1 {
        (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2
    } else {
        (f(j + 1) - 2.0 * f(j) + f(j - 1)) / h2
    }
}

/// Gradient and Laplacian of `tau` via the chain rule
/// `grad(tau) = tau0 grad(tau1) + tau1 grad(tau0)` and
/// `lap(tau) = tau1 lap(tau0) + 2 grad(tau0).grad(tau1) + tau0 lap(tau1)`.
///
/// At the source, where the `tau0` derivatives blow up, `grad(tau) = 0` and
/// `lap(tau) = 2 kappa(x0)` with `kappa(x0) = tau1(x0)`.
pub fn tau_derivatives(tau1: &RealField, base: &AnalyticBase) -> ([RealField; 2], RealField) {
    let grid = *tau1.grid();
    let t = tau1.values();
    let (n1, n2) = grid.dims();
    let mut g1 = Vec::with_capacity(grid.len());
    let mut g2 = Vec::with_capacity(grid.len());
    let mut lap = Vec::with_capacity(grid.len());
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let k = grid.index(i1, i2);
            if k == base.source_index {
                g1.push(0.0);
                g2.push(0.0);
                lap.push(2.0 * t[k]);
                continue;
            }
            let row = |p: usize| t[grid.index(p, i2)];
            let col = |p: usize| t[grid.index(i1, p)];
            let d1 = first_derivative(row, n1, i1, grid.h1);
            let d2 = first_derivative(col, n2, i2, grid.h2);
            let dd = second_derivative(row, n1, i1, grid.h1) + second_derivative(col, n2, i2, grid.h2);

            let (x1, x2) = grid.coords(i1, i2);
            let tau0 = base.tau0(x1, x2);
            let [e1, e2] = base.grad_tau0(x1, x2);
            g1.push(tau0 * d1 + t[k] * e1);
            g2.push(tau0 * d2 + t[k] * e2);
            lap.push(t[k] * base.lap_tau0(x1, x2) + 2.0 * (e1 * d1 + e2 * d2) + tau0 * dd);
        }
    }
    let f = |v| RealField::from_values(grid, v).expect("grid sized");
    ([f(g1), f(g2)], f(lap))
}
