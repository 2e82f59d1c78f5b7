//! Sparse assembly of the Helmholtz and ADR operators and the diagonal
//! transforms that relate them.
//!
//! Axis 1 runs left to right (`i1`), axis 2 top to bottom (`i2`). Boundary
//! conditions are imposed through ghost nodes that are eliminated from the
//! Laplacian stencil:
//!
//! * Neumann: `n . grad(u) = 0`, the ghost mirrors the first interior node.
//! * Sommerfeld: `n . grad(u) + i omega kappa u = 0`, the radiation condition
//!   for the `exp(-i omega tau)` convention, discretized with a central
//!   difference across the boundary.
//!
//! For the amplitude `a = u exp(i omega tau)` the same conditions read
//! `n . grad(a) - i omega (n . grad(tau)) a (+ i omega kappa a) = 0`.

use num_complex::Complex64;

use crate::eikonal::TravelTime;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, Side};
use crate::model::Medium;
use crate::sparse::{CsrMatrix, RowBuilder, SparseOperator};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Neumann,
    Sommerfeld,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Sommerfeld => "sommerfeld",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "neumann" => Ok(BoundaryCondition::Neumann),
            "sommerfeld" => Ok(BoundaryCondition::Sommerfeld),
            other => Err(format!("unknown boundary condition `{other}`")),
        }
    }
}

/// One condition per side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BCSpec {
    pub top: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
}

impl BCSpec {
    pub fn uniform(bc: BoundaryCondition) -> Self {
        BCSpec {
            top: bc,
            bottom: bc,
            left: bc,
            right: bc,
        }
    }

    /// Free surface on top, radiating elsewhere.
    pub fn free_surface() -> Self {
        BCSpec {
            top: BoundaryCondition::Neumann,
            ..Self::uniform(BoundaryCondition::Sommerfeld)
        }
    }

    pub fn side(&self, side: Side) -> BoundaryCondition {
        match side {
            Side::Top => self.top,
            Side::Bottom => self.bottom,
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    pub fn with(mut self, side: Side, bc: BoundaryCondition) -> Self {
        match side {
            Side::Top => self.top = bc,
            Side::Bottom => self.bottom = bc,
            Side::Left => self.left = bc,
            Side::Right => self.right = bc,
        }
        self
    }

    /// Sides carrying the radiation condition.
    pub fn sommerfeld_sides(&self) -> Vec<Side> {
        Side::ALL
            .into_iter()
            .filter(|s| self.side(*s) == BoundaryCondition::Sommerfeld)
            .collect()
    }
}

/// Advection discretization for the ADR operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Central,
    Upwind1,
    Upwind2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Central => "central",
            Scheme::Upwind1 => "upwind1",
            Scheme::Upwind2 => "upwind2",
        }
    }
}

/// Geometry of one axis as seen from one node.
#[derive(Clone, Copy)]
struct Axis {
    /// Position along the axis.
    j: usize,
    n: usize,
    h: f64,
    stride: usize,
    low: BoundaryCondition,
    high: BoundaryCondition,
}

impl Axis {
    fn both(grid: &GridSpec, bc: &BCSpec, i1: usize, i2: usize) -> [Axis; 2] {
        [
            Axis {
                j: i1,
                n: grid.n1,
                h: grid.h1,
                stride: 1,
                low: bc.left,
                high: bc.right,
            },
            Axis {
                j: i2,
                n: grid.n2,
                h: grid.h2,
                stride: grid.n1,
                low: bc.top,
                high: bc.bottom,
            },
        ]
    }

    /// Node `offset` steps along the axis from `k`.
    #[inline]
    fn at(&self, k: usize, offset: isize) -> usize {
        (k as isize + offset * self.stride as isize) as usize
    }

    /// Boundary side the node sits on, with the outward unit sign.
    fn boundary(&self) -> Option<(BoundaryCondition, f64)> {
        if self.j == 0 {
            Some((self.low, -1.0))
        } else if self.j == self.n - 1 {
            Some((self.high, 1.0))
        } else {
            None
        }
    }
}

/// Adds the ghost-eliminated second difference along one axis. Returns the
/// diagonal contribution; `bc_diag` is the ghost coefficient `c` in
/// `a_ghost = a_inner + 2 h c a_node`.
fn laplacian_axis(row: &mut RowBuilder<Complex64>, k: usize, ax: &Axis, bc_diag: impl Fn(BoundaryCondition, f64) -> Complex64) -> Complex64 {
    let inv = 1.0 / (ax.h * ax.h);
    match ax.boundary() {
        Some((bc, sign)) => {
            let inner = ax.at(k, -sign as isize);
            row.add(inner, Complex64::new(2.0 * inv, 0.0));
            Complex64::new(-2.0 * inv, 0.0) + bc_diag(bc, sign) * (2.0 / ax.h)
        }
        None => {
            row.add(ax.at(k, -1), Complex64::new(inv, 0.0));
            row.add(ax.at(k, 1), Complex64::new(inv, 0.0));
            Complex64::new(-2.0 * inv, 0.0)
        }
    }
}

/// Standard second-order Helmholtz operator
/// `lap(u) + omega^2 kappa^2 u - i omega gamma kappa^2 u`.
pub fn assemble_helmholtz(medium: &Medium, omega: f64, bc: &BCSpec) -> SparseOperator {
    let grid = *medium.grid();
    let mut row = RowBuilder::with_capacity(grid.len(), grid.len(), 5 * grid.len());
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            helmholtz_row(&mut row, medium, omega, bc, i1, i2);
            row.finish_row();
        }
    }
    row.build()
}

fn helmholtz_row(row: &mut RowBuilder<Complex64>, medium: &Medium, omega: f64, bc: &BCSpec, i1: usize, i2: usize) {
    let grid = medium.grid();
    let k = grid.index(i1, i2);
    let ksq = medium.kappa_sq().values()[k];
    let gamma = medium.gamma().values()[k];
    let kappa = ksq.sqrt();
    let mut diag = Complex64::new(omega * omega * ksq, -omega * gamma * ksq);
    for ax in Axis::both(grid, bc, i1, i2) {
        diag += laplacian_axis(row, k, &ax, |bc, _| match bc {
            BoundaryCondition::Neumann => Complex64::new(0.0, 0.0),
            BoundaryCondition::Sommerfeld => -I * omega * kappa,
        });
    }
    row.add(k, diag);
}

/// First-derivative stencil as `(offset, weight)` pairs, weights in units
/// of `1/h`.
type Stencil = &'static [(isize, f64)];

const CENTRAL: Stencil = &[(-1, -0.5), (1, 0.5)];
const BACKWARD1: Stencil = &[(-1, -1.0), (0, 1.0)];
const FORWARD1: Stencil = &[(0, -1.0), (1, 1.0)];
const BACKWARD2: Stencil = &[(-2, 0.5), (-1, -2.0), (0, 1.5)];
const FORWARD2: Stencil = &[(0, -1.5), (1, 2.0), (2, -0.5)];

/// Advection stencil for one axis. Boundary nodes use the inward first
/// difference for every scheme, which pairs with the ghost-eliminated
/// boundary condition in the Laplacian.
fn advection_stencil(scheme: Scheme, ax: &Axis, slope: f64) -> Stencil {
    if ax.j == 0 {
        return FORWARD1;
    }
    if ax.j == ax.n - 1 {
        return BACKWARD1;
    }
    match scheme {
        Scheme::Central => CENTRAL,
        Scheme::Upwind1 => {
            if slope >= 0.0 {
                BACKWARD1
            } else {
                FORWARD1
            }
        }
        Scheme::Upwind2 => {
            if slope >= 0.0 {
                if ax.j >= 2 {
                    BACKWARD2
                } else {
                    BACKWARD1
                }
            } else if ax.j + 2 < ax.n {
                FORWARD2
            } else {
                FORWARD1
            }
        }
    }
}

/// Half-widths, in cells along each axis, of the box around the source
/// whose ADR rows are replaced by conjugated Helmholtz rows: an eighth of
/// the local wavelength, at least one cell.
pub fn source_zone(medium: &Medium, omega: f64, source_index: usize) -> (usize, usize) {
    let grid = medium.grid();
    let kappa = medium.kappa_sq().values()[source_index].sqrt();
    let radius = 2.0 * std::f64::consts::PI / (omega * kappa) / 8.0;
    let cells = |h: f64| ((radius / h).floor() as usize).max(1);
    (cells(grid.h1), cells(grid.h2))
}

/// Amplitude operator for `u = a exp(-i omega tau)`:
///
/// `lap(a) - 2 i omega grad(tau).grad(a) - i omega lap(tau) a
///  - omega^2 (|grad(tau)|^2 - kappa^2) a - i omega gamma kappa^2 a`.
///
/// The `lap(tau) a` term uses the neighbour average (weight 1/4 on each of
/// the four neighbours, mirrored across boundaries). Rows inside
/// [`source_zone`] are the Helmholtz rows conjugated by `exp(-i omega tau)`,
/// since the amplitude is singular there and the expanded form loses an
/// order of accuracy.
pub fn assemble_adr(medium: &Medium, omega: f64, tt: &TravelTime, scheme: Scheme, bc: &BCSpec) -> Result<SparseOperator> {
    let grid = *medium.grid();
    grid.check_same(tt.grid())?;
    let ksq = medium.kappa_sq().values();
    let gamma = medium.gamma().values();
    let g = [tt.grad_tau[0].values(), tt.grad_tau[1].values()];
    let lap = tt.lap_tau.values();
    let tau = tt.tau.values();
    let zone = tt.base.map(|b| (grid.node(b.source_index), source_zone(medium, omega, b.source_index)));

    let mut row = RowBuilder::with_capacity(grid.len(), grid.len(), 9 * grid.len());
    for i2 in 0..grid.n2 {
        for i1 in 0..grid.n1 {
            let k = grid.index(i1, i2);
            let kappa = ksq[k].sqrt();
            let grad = [g[0][k], g[1][k]];
            let in_zone = zone.is_some_and(|((s1, s2), (m1, m2))| i1.abs_diff(s1) <= m1 && i2.abs_diff(s2) <= m2);
            if in_zone {
                helmholtz_row(&mut row, medium, omega, bc, i1, i2);
                row.map_pending(|j, v| v * Complex64::from_polar(1.0, omega * (tau[k] - tau[j])));
                row.finish_row();
                continue;
            }

            let grad_sq = grad[0] * grad[0] + grad[1] * grad[1];
            let mut diag = Complex64::new(-omega * omega * (grad_sq - ksq[k]), -omega * gamma[k] * ksq[k]);
            let axes = Axis::both(&grid, bc, i1, i2);
            let lap_k = lap[k];
            let mass = -I * omega * lap_k * 0.25;
            for (d, ax) in axes.iter().enumerate() {
                diag += laplacian_axis(&mut row, k, ax, |bc, sign| {
                    let normal_slope = sign * grad[d];
                    match bc {
                        BoundaryCondition::Neumann => I * omega * normal_slope,
                        BoundaryCondition::Sommerfeld => I * omega * (normal_slope - kappa),
                    }
                });

                let coeff = -2.0 * I * omega * grad[d] / ax.h;
                if grad[d] != 0.0 {
                    for &(off, w) in advection_stencil(scheme, ax, grad[d]) {
                        if off == 0 {
                            diag += coeff * w;
                        } else {
                            row.add(ax.at(k, off), coeff * w);
                        }
                    }
                }

                if lap_k != 0.0 {
                    match ax.boundary() {
                        Some((_, sign)) => row.add(ax.at(k, -sign as isize), 2.0 * mass),
                        None => {
                            row.add(ax.at(k, -1), mass);
                            row.add(ax.at(k, 1), mass);
                        }
                    }
                }
            }
            row.add(k, diag);
            row.finish_row();
        }
    }
    Ok(row.build())
}

/// Shifted operator `A - i omega^2 alpha diag(kappa^2)`.
pub fn shift_operator(a: &SparseOperator, alpha: f64, omega: f64, medium: &Medium) -> Result<SparseOperator> {
    let ksq = medium.kappa_sq().values();
    if a.nrows() != ksq.len() || a.ncols() != ksq.len() {
        return Err(Error::DimensionMismatch {
            expected: ksq.len(),
            found: a.nrows(),
        });
    }
    let shift: Vec<_> = ksq
        .iter()
        .enumerate()
        .map(|(j, k)| (j, j, Complex64::new(0.0, -omega * omega * alpha * k)))
        .collect();
    let d = CsrMatrix::from_triplets(ksq.len(), ksq.len(), &shift)?;
    a.linear_combination(Complex64::new(1.0, 0.0), &d, Complex64::new(1.0, 0.0))
}

/// `(1 - beta) a + beta b` on the union pattern.
pub fn blend(a: &SparseOperator, b: &SparseOperator, beta: f64) -> Result<SparseOperator> {
    a.linear_combination(Complex64::new(1.0 - beta, 0.0), b, Complex64::new(beta, 0.0))
}

/// The unimodular diagonal `M_jj = exp(-i omega tau_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    diag: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conjugation {
    /// `M A M^-1`
    MAMinv,
    /// `M^-1 A M`
    MinvAM,
}

impl DiagonalScaling {
    pub fn new(tt: &TravelTime, omega: f64) -> Self {
        DiagonalScaling {
            diag: tt.tau.values().iter().map(|t| Complex64::from_polar(1.0, -omega * t)).collect(),
        }
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `M x`
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter().zip(&self.diag).map(|(a, m)| a * m).collect()
    }

    /// `M^-1 x`, using `M^-1 = conj(M)`.
    pub fn apply_inverse(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter().zip(&self.diag).map(|(a, m)| a * m.conj()).collect()
    }
}

/// Scales entry `(i, j)` by `M_ii / M_jj` or its inverse.
pub fn similarity_conjugate(a: &SparseOperator, m: &DiagonalScaling, direction: Conjugation) -> Result<SparseOperator> {
    if a.nrows() != m.len() || a.ncols() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: a.nrows(),
        });
    }
    let d = &m.diag;
    Ok(match direction {
        Conjugation::MAMinv => a.map_entries(|i, j, v| v * d[i] * d[j].conj()),
        Conjugation::MinvAM => a.map_entries(|i, j, v| v * d[i].conj() * d[j]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `q_hat = q exp(+i omega tau)`
    ToAdr,
    /// `u = a exp(-i omega tau)`
    ToHelmholtz,
}

pub fn rhs_transform(q: &ComplexField, tt: &TravelTime, omega: f64, direction: Transform) -> Result<ComplexField> {
    q.grid().check_same(tt.grid())?;
    let sign = match direction {
        Transform::ToAdr => 1.0,
        Transform::ToHelmholtz => -1.0,
    };
    let values = q
        .values()
        .iter()
        .zip(tt.tau.values())
        .map(|(v, t)| v * Complex64::from_polar(1.0, sign * omega * t))
        .collect();
    ComplexField::from_values(*q.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eikonal::FmOrder;
    use crate::model::{generate_model, ModelKind, SourceSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant(n1: usize, n2: usize, ksq: f64) -> Medium {
        let g = GridSpec::new(n1, n2, (n1 - 1) as f64, (n2 - 1) as f64).unwrap();
        generate_model(ModelKind::Constant { kappa_sq: ksq }, &g).unwrap()
    }

    #[test]
    fn interior_stencil_unit_spacing() {
        let m = constant(5, 5, 1.0);
        let h = assemble_helmholtz(&m, 1.0, &BCSpec::uniform(BoundaryCondition::Neumann));
        let k = m.grid().index(2, 2);
        assert_eq!(h.get(k, k), c(-4.0 + 1.0, 0.0));
        for nb in [k - 1, k + 1, k - 5, k + 5] {
            assert_eq!(h.get(k, nb), c(1.0, 0.0));
        }
        assert_eq!(h.row(k).0.len(), 5);
    }

    #[test]
    fn layer_node_attenuation() {
        let m = constant(5, 5, 1.0);
        let omega = 2.0;
        let mut gamma = crate::grid::RealField::zeros(*m.grid());
        let k = m.grid().index(2, 2);
        gamma.values_mut()[k] = omega;
        let lossy = m.with_gamma(gamma).unwrap();
        let bc = BCSpec::uniform(BoundaryCondition::Neumann);
        let d = assemble_helmholtz(&lossy, omega, &bc).get(k, k) - assemble_helmholtz(&m, omega, &bc).get(k, k);
        assert_eq!(d, c(0.0, -omega * omega));
    }

    #[test]
    fn boundary_ghosts() {
        let m = constant(5, 5, 4.0);
        let omega = 3.0;
        let h = assemble_helmholtz(&m, omega, &BCSpec::free_surface());
        // Top edge, Neumann: doubled inward neighbour only.
        let k = m.grid().index(2, 0);
        assert_eq!(h.get(k, k + 5), c(2.0, 0.0));
        assert_eq!(h.get(k, k), c(-4.0 + 36.0, 0.0));
        // Bottom-left corner: two radiating ghosts.
        let k = m.grid().index(0, 4);
        assert_eq!(h.get(k, k), c(-4.0 + 36.0, -2.0 * 2.0 * omega * 2.0));
    }

    #[test]
    fn neumann_operator_is_structurally_symmetric() {
        let m = constant(7, 6, 1.0);
        let h = assemble_helmholtz(&m, 1.0, &BCSpec::uniform(BoundaryCondition::Neumann));
        let t = h.transpose();
        assert_eq!(h.row_ptr(), t.row_ptr());
        assert_eq!(h.col_idx(), t.col_idx());
    }

    #[test]
    fn zero_travel_time_recovers_helmholtz() {
        let g = GridSpec::new(17, 9, 2.0, 1.0).unwrap();
        let m = generate_model(ModelKind::LINEAR, &g).unwrap();
        let bc = BCSpec::free_surface().with(Side::Left, BoundaryCondition::Neumann);
        let h = assemble_helmholtz(&m, 7.0, &bc);
        let tt = TravelTime::zero(&g);
        for scheme in [Scheme::Central, Scheme::Upwind1, Scheme::Upwind2] {
            let a = assemble_adr(&m, 7.0, &tt, scheme, &bc).unwrap();
            assert_eq!(a, h, "{scheme:?}");
        }
    }

    #[test]
    fn upwind2_interior_coefficients() {
        let g = GridSpec::new(9, 9, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::Constant { kappa_sq: 1.0 }, &g).unwrap();
        let s = SourceSpec::new(&g, 1, 4, 5.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        let omega = 5.0;
        let bc = BCSpec::uniform(BoundaryCondition::Sommerfeld);
        let a = assemble_adr(&m, omega, &tt, Scheme::Upwind2, &bc).unwrap();
        let k = g.index(5, 4);
        let slope = tt.grad_tau[0].values()[k];
        assert!(slope > 0.0);
        assert!(tt.grad_tau[1].values()[k].abs() < 1e-12);
        assert!(tt.lap_tau.values()[k] > 0.0);
        let scale = -2.0 * I * omega * slope / (2.0 * g.h1);
        assert!((a.get(k, k - 2) - scale).norm() < 1e-10);
        let mass = -I * omega * tt.lap_tau.values()[k] * 0.25;
        assert!((a.get(k, k - 1) - (-4.0 * scale + 1.0 / (g.h1 * g.h1) + mass)).norm() < 1e-9);
        assert!((a.get(k, k + 1) - (1.0 / (g.h1 * g.h1) + mass)).norm() < 1e-9);
        assert!(a.max_row_nnz() <= 13);
    }

    #[test]
    fn reaction_vanishes_for_exact_travel_time() {
        let g = GridSpec::new(33, 33, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::Constant { kappa_sq: 2.0 }, &g).unwrap();
        let s = SourceSpec::new(&g, 16, 16, 9.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        let bc = BCSpec::uniform(BoundaryCondition::Neumann);
        let a = assemble_adr(&m, 9.0, &tt, Scheme::Central, &bc).unwrap();
        let zero = TravelTime::zero(&g);
        let base = assemble_adr(&m, 9.0, &zero, Scheme::Central, &bc).unwrap();
        let (m1, m2) = source_zone(&m, 9.0, s.index(&g));
        for i2 in 1..32 {
            for i1 in 1..32 {
                let k = g.index(i1, i2);
                if i1.abs_diff(16) <= m1 && i2.abs_diff(16) <= m2 {
                    continue;
                }
                // Interior diagonal = Laplacian part + reaction, advection
                // and mass are off-diagonal away from the source.
                let reaction = a.get(k, k) - (base.get(k, k) - c(81.0 * 2.0, 0.0));
                assert!(reaction.norm() <= 1e-10, "{reaction}");
            }
        }
    }

    #[test]
    fn source_zone_rows_are_conjugated_helmholtz_rows() {
        let g = GridSpec::new(65, 33, 2.0, 1.0).unwrap();
        let m = generate_model(ModelKind::LINEAR, &g).unwrap();
        let s = SourceSpec::top_center(&g, 10.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        let bc = BCSpec::free_surface();
        let (m1, m2) = source_zone(&m, 10.0, s.index(&g));
        let kappa = m.kappa_sq().values()[s.index(&g)].sqrt();
        let eighth = 2.0 * std::f64::consts::PI / (10.0 * kappa) / 8.0;
        assert_eq!(m1, (eighth / g.h1).floor() as usize);
        assert!(m1 >= 2 && m2 >= 2);

        let h = assemble_helmholtz(&m, 10.0, &bc);
        let conj = similarity_conjugate(&h, &DiagonalScaling::new(&tt, 10.0), Conjugation::MinvAM).unwrap();
        for scheme in [Scheme::Central, Scheme::Upwind1, Scheme::Upwind2] {
            let a = assemble_adr(&m, 10.0, &tt, scheme, &bc).unwrap();
            for i2 in 0..=m2 {
                for i1 in 32 - m1..=32 + m1 {
                    let k = g.index(i1, i2);
                    let (cols, vals) = a.row(k);
                    assert_eq!(cols, conj.row(k).0);
                    for (v, w) in vals.iter().zip(conj.row(k).1) {
                        assert!((v - w).norm() <= 1e-12 * w.norm().max(1.0));
                    }
                }
            }
            let k = g.index(32 + m1 + 1, 1);
            assert_ne!(a.row(k).1, conj.row(k).1);
        }
    }

    #[test]
    fn pattern_bounds() {
        let g = GridSpec::new(17, 17, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::Gaussian, &g).unwrap();
        let s = SourceSpec::new(&g, 8, 0, 10.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        for (scheme, bound) in [(Scheme::Central, 9), (Scheme::Upwind1, 9), (Scheme::Upwind2, 13)] {
            let a = assemble_adr(&m, 10.0, &tt, scheme, &BCSpec::free_surface()).unwrap();
            assert!(a.max_row_nnz() <= bound);
            assert!(a.is_finite() && a.is_well_formed());
            assert!((0..a.nrows()).all(|i| !a.row(i).0.is_empty()));
        }
    }

    #[test]
    fn shifts_and_blends() {
        let m = constant(6, 5, 0.5);
        let h = assemble_helmholtz(&m, 2.0, &BCSpec::free_surface());
        assert_eq!(shift_operator(&h, 0.0, 2.0, &m).unwrap(), h);
        let once = shift_operator(&h, 0.2, 2.0, &m).unwrap();
        let twice = shift_operator(&shift_operator(&h, 0.1, 2.0, &m).unwrap(), 0.1, 2.0, &m).unwrap();
        assert!(once.max_relative_difference(&twice) < 1e-15);
        let d = once.get(7, 7) - h.get(7, 7);
        assert!((d - c(0.0, -0.2 * 4.0 * 0.5)).norm() < 1e-15);

        let b = blend(&h, &once, 1.0).unwrap();
        assert!(b.max_relative_difference(&once) < 1e-15);
    }

    #[test]
    fn conjugation_and_transforms() {
        let g = GridSpec::new(9, 9, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::LINEAR, &g).unwrap();
        let s = SourceSpec::top_center(&g, 12.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        let h = assemble_helmholtz(&m, 12.0, &BCSpec::free_surface());
        let mm = DiagonalScaling::new(&tt, 12.0);
        assert!(mm.diag().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        let there = similarity_conjugate(&h, &mm, Conjugation::MAMinv).unwrap();
        let back = similarity_conjugate(&there, &mm, Conjugation::MinvAM).unwrap();
        assert!(back.max_relative_difference(&h) < 1e-14);
        let id = DiagonalScaling::new(&TravelTime::zero(&g), 12.0);
        assert_eq!(similarity_conjugate(&h, &id, Conjugation::MAMinv).unwrap(), h);

        let q = crate::model::point_source(&g, &s);
        let qh = rhs_transform(&q, &tt, 12.0, Transform::ToAdr).unwrap();
        assert_eq!(qh.values()[s.index(&g)], q.values()[s.index(&g)]);
        let f = ComplexField::from_fn(g, |x, y| c(x.sin(), y));
        let rt = rhs_transform(&rhs_transform(&f, &tt, 12.0, Transform::ToAdr).unwrap(), &tt, 12.0, Transform::ToHelmholtz).unwrap();
        for (a, b) in rt.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
