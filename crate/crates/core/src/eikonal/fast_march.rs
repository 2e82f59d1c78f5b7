//! Fast Marching for the factored eikonal equation
//! `|tau0 grad(tau1) + tau1 grad(tau0)|^2 = kappa^2`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::AnalyticBase;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::model::{Medium, SourceSpec};

/// Accuracy of the one-sided differences used by the local solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmOrder {
    First,
    Second,
}

/// Upwind data along one axis for a local update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStencil {
    /// `+1` when the accepted neighbour sits at `j - 1` (backward
    /// difference), `-1` when it sits at `j + 1`.
    pub dir: f64,
    pub h: f64,
    /// `tau1` at the adjacent accepted neighbour.
    pub near: f64,
    /// `tau1` two nodes away in the same direction, for second order.
    pub far: Option<f64>,
    /// Full travel time `tau0 * tau1` of the adjacent neighbour.
    pub near_time: f64,
    /// Component of `grad(tau0)` along this axis at the updated node.
    pub grad_tau0: f64,
}

impl AxisStencil {
    /// Writes the one-sided derivative as `alpha * tau1 + beta`.
    fn linear_form(&self) -> (f64, f64) {
        let s = self.dir;
        match self.far {
            None => (s / self.h, -s * self.near / self.h),
            Some(far) => (
                1.5 * s / self.h,
                s * (-4.0 * self.near + far) / (2.0 * self.h),
            ),
        }
    }

    /// The first-order version of this stencil.
    pub fn first_order(mut self) -> Self {
        self.far = None;
        self
    }
}

/// Coefficients `(A, B, C)` of `A t^2 + B t + C = 0` obtained by substituting
/// the one-sided differences into the factored equation at a node with
/// distance factor `tau0` and slowness `kappa`.
pub fn update_quadratic(tau0: f64, kappa: f64, axes: &[AxisStencil]) -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (0.0, 0.0, -kappa * kappa);
    for ax in axes {
        let (alpha, beta) = ax.linear_form();
        let lin = tau0 * alpha + ax.grad_tau0;
        let cst = tau0 * beta;
        a += lin * lin;
        b += 2.0 * lin * cst;
        c += cst * cst;
    }
    (a, b, c)
}

/// Larger real root of the local quadratic for one neighbour subset, or
/// `None` when the discriminant is negative or the root is not causal
/// (its travel time is below a contributing neighbour's).
pub fn solve_subset(tau0: f64, kappa: f64, axes: &[AxisStencil]) -> Option<f64> {
    let (a, b, c) = update_quadratic(tau0, kappa, axes);
    if !(a > 0.0) {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let root = if b <= 0.0 {
        (-b + disc.sqrt()) / (2.0 * a)
    } else {
        // Cancellation-free form of the same root.
        (2.0 * c) / (-b - disc.sqrt())
    };
    if !root.is_finite() {
        return None;
    }
    let time = tau0 * root;
    if axes.iter().any(|ax| time < ax.near_time) {
        return None;
    }
    Some(root)
}

/// Candidate `tau1` at a node from its accepted neighbours (at most one per
/// axis).
///
/// Every non-empty axis subset is solved and the smallest admissible root is
/// kept, so a two-axis solution is only used when it undercuts the
/// single-axis ones. If no subset admits a causal root, the single-axis
/// first-order update is used (its discriminant is never negative).
pub fn local_update(tau0: f64, kappa: f64, axes: &[AxisStencil]) -> f64 {
    let mut best = f64::INFINITY;
    if axes.len() > 1 {
        if let Some(t) = solve_subset(tau0, kappa, axes) {
            best = best.min(t);
        }
    }
    for ax in axes {
        if let Some(t) = solve_subset(tau0, kappa, std::slice::from_ref(ax)) {
            best = best.min(t);
        }
    }
    if best.is_finite() {
        return best;
    }
    axes.iter()
        .filter_map(|ax| {
            let (a, b, c) = update_quadratic(tau0, kappa, &[ax.first_order()]);
            let disc = (b * b - 4.0 * a * c).max(0.0);
            (a > 0.0).then(|| (-b + disc.sqrt()) / (2.0 * a))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gathers the upwind stencils of node `(i1, i2)` from the values flagged in
/// `known`. Along each axis the neighbour with the smaller travel time is
/// used; the second-order extension requires the next node in the same
/// direction to be known with a travel time no larger than the neighbour's.
pub fn gather_stencils(
    grid: &GridSpec,
    base: &AnalyticBase,
    tau1: &[f64],
    time: &[f64],
    known: impl Fn(usize) -> bool,
    i1: usize,
    i2: usize,
    order: FmOrder,
) -> ([AxisStencil; 2], usize) {
    let (x1, x2) = grid.coords(i1, i2);
    let grad0 = base.grad_tau0(x1, x2);
    let pos = [i1, i2];
    let mut out = [AxisStencil {
        dir: 0.0,
        h: 0.0,
        near: 0.0,
        far: None,
        near_time: 0.0,
        grad_tau0: 0.0,
    }; 2];
    let mut count = 0;
    for axis in 0..2 {
        let n = grid.extent(axis);
        let at = |p: usize| {
            if axis == 0 {
                grid.index(p, i2)
            } else {
                grid.index(i1, p)
            }
        };
        let p = pos[axis];
        let mut pick: Option<(f64, usize, Option<usize>)> = None;
        // Backward neighbour (dir = +1), then forward (dir = -1).
        for (dir, nb, far) in [
            (1.0, p.checked_sub(1), p.checked_sub(2)),
            (-1.0, (p + 1 < n).then_some(p + 1), (p + 2 < n).then_some(p + 2)),
        ] {
            let Some(nb) = nb else { continue };
            let k = at(nb);
            if !known(k) {
                continue;
            }
            if pick.map_or(true, |(_, kk, _)| time[k] < time[kk]) {
                let far = far.map(at).filter(|&f| known(f) && time[f] <= time[k]);
                pick = Some((dir, k, far));
            }
        }
        if let Some((dir, k, far)) = pick {
            out[count] = AxisStencil {
                dir,
                h: grid.spacing(axis),
                near: tau1[k],
                far: match order {
                    FmOrder::First => None,
                    FmOrder::Second => far.map(|f| tau1[f]),
                },
                near_time: time[k],
                grad_tau0: grad0[axis],
            };
            count += 1;
        }
    }
    (out, count)
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Output of [`fast_march_traced`].
#[derive(Debug, Clone)]
pub struct MarchTrace {
    pub tau1: RealField,
    /// Node indices in acceptance order.
    pub accepted: Vec<usize>,
}

/// Solves the factored eikonal equation for `tau1`.
pub fn fast_march(medium: &Medium, source: &SourceSpec, order: FmOrder) -> Result<RealField> {
    fast_march_traced(medium, source, order).map(|t| t.tau1)
}

/// [`fast_march`] that also records the acceptance order.
///
/// The source node is seeded with `tau1 = kappa(x0)`. The heap is keyed on
/// the full travel time `tau0 * tau1` with ties broken by node index.
pub fn fast_march_traced(medium: &Medium, source: &SourceSpec, order: FmOrder) -> Result<MarchTrace> {
    let grid = *medium.grid();
    let kappa = medium.slowness();
    let kappa = kappa.values();
    let base = AnalyticBase::new(&grid, source);
    let n = grid.len();

    let mut tau1 = vec![f64::INFINITY; n];
    let mut time = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut trace = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    let s = source.index(&grid);
    tau1[s] = kappa[s];
    time[s] = 0.0;
    heap.push(Reverse(Key(0.0, s)));

    while let Some(Reverse(Key(t, k))) = heap.pop() {
        if accepted[k] || t != time[k] {
            continue;
        }
        accepted[k] = true;
        trace.push(k);
        let (i1, i2) = grid.node(k);
        let neighbours = [
            (i1 > 0).then(|| grid.index(i1 - 1, i2)),
            (i1 + 1 < grid.n1).then(|| grid.index(i1 + 1, i2)),
            (i2 > 0).then(|| grid.index(i1, i2 - 1)),
            (i2 + 1 < grid.n2).then(|| grid.index(i1, i2 + 1)),
        ];
        for m in neighbours.into_iter().flatten() {
            if accepted[m] {
                continue;
            }
            let (j1, j2) = grid.node(m);
            let (stencils, count) =
                gather_stencils(&grid, &base, &tau1, &time, |q| accepted[q], j1, j2, order);
            let (x1, x2) = grid.coords(j1, j2);
            let t0 = base.tau0(x1, x2);
            let cand = local_update(t0, kappa[m], &stencils[..count]);
            if cand < tau1[m] {
                tau1[m] = cand;
                time[m] = t0 * cand;
                heap.push(Reverse(Key(time[m], m)));
            }
        }
    }

    if trace.len() != n {
        return Err(Error::HeapExhausted {
            remaining: n - trace.len(),
        });
    }
    Ok(MarchTrace {
        tau1: RealField::from_values(grid, tau1)?,
        accepted: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn stencil(dir: f64, h: f64, near: f64, far: Option<f64>, near_time: f64, g: f64) -> AxisStencil {
        AxisStencil {
            dir,
            h,
            near,
            far,
            near_time,
            grad_tau0: g,
        }
    }

    #[test]
    fn one_dimensional_constant_medium() {
        // Node at distance 3h from the source, backward neighbour at 2h.
        let h = 0.1;
        let ax = stencil(1.0, h, 1.0, None, 2.0 * h, 1.0);
        let t = local_update(3.0 * h, 1.0, &[ax]);
        assert!((t - 1.0).abs() < 1e-14);
        let ax = stencil(1.0, h, 1.0, Some(1.0), 2.0 * h, 1.0);
        assert!((local_update(3.0 * h, 1.0, &[ax]) - 1.0).abs() < 1e-14);
        // Forward neighbour: the source lies on the other side.
        let ax = stencil(-1.0, h, 1.0, None, 2.0 * h, -1.0);
        assert!((local_update(3.0 * h, 1.0, &[ax]) - 1.0).abs() < 1e-14);
    }

    fn residual(t: f64, tau0: f64, kappa: f64, axes: &[AxisStencil]) -> f64 {
        let (a, b, c) = update_quadratic(tau0, kappa, axes);
        // Direct evaluation of sum_d (tau0 D_d tau1 + tau1 g_d)^2 - kappa^2.
        let direct: f64 = axes
            .iter()
            .map(|ax| {
                let d = match ax.far {
                    None => ax.dir * (t - ax.near) / ax.h,
                    Some(f) => ax.dir * (3.0 * t - 4.0 * ax.near + f) / (2.0 * ax.h),
                };
                (tau0 * d + t * ax.grad_tau0).powi(2)
            })
            .sum::<f64>()
            - kappa * kappa;
        let poly = a * t * t + b * t + c;
        assert!((direct - poly).abs() <= 1e-9 * (1.0 + direct.abs()));
        direct
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn root_matches_bisection_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let h = rng.gen_range(0.01..0.2);
            let tau0 = rng.gen_range(2.0..10.0) * h;
            let kappa = rng.gen_range(0.3..2.0);
            let g1: f64 = rng.gen_range(-1.0..1.0);
            let g2 = (1.0 - g1 * g1).sqrt() * if rng.gen() { 1.0 } else { -1.0 };
            let second = rng.gen::<bool>();
            let mk = |dir: f64, g: f64, rng: &mut rand_chacha::ChaCha8Rng| {
                let near = rng.gen_range(0.5 * kappa..1.5 * kappa);
                let far = second.then(|| near + rng.gen_range(-0.05..0.05));
                stencil(dir, h, near, far, 0.0, g)
            };
            let axes = [mk(1.0, g1, &mut rng), mk(-1.0, g2, &mut rng)];
            let Some(root) = solve_subset(tau0, kappa, &axes) else {
                continue;
            };
            // The residual is an upward parabola; the larger root is where it
            // crosses zero to the right of its vertex.
            let (a, b, _) = update_quadratic(tau0, kappa, &axes);
            let vertex = -b / (2.0 * a);
            let mut hi = vertex + 1.0;
            while residual(hi, tau0, kappa, &axes) < 0.0 {
                hi *= 2.0;
            }
            let oracle = bisect(vertex, hi, |t| residual(t, tau0, kappa, &axes));
            assert!((root - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "{root} vs {oracle}");
            checked += 1;
        }
    }

    #[test]
    fn two_axis_root_versus_single_axis_roots() {
        // Standard eikonal limit (tau0 factor frozen): neighbours a=1.0 and
        // b=1.05 with h*kappa = 0.5 give a two-axis root that is causal
        // (above both neighbour times) and below each single-axis root.
        let h = 0.5;
        let kappa = 1.0;
        let tau0 = 1.0;
        let axes = [
            stencil(1.0, h, 1.0, None, 1.0, 0.0),
            stencil(1.0, h, 1.05, None, 1.05, 0.0),
        ];
        let both = solve_subset(tau0, kappa, &axes).unwrap();
        let one_a = solve_subset(tau0, kappa, &axes[..1]).unwrap();
        let one_b = solve_subset(tau0, kappa, &axes[1..]).unwrap();
        assert!(both > 1.05);
        assert!(both < one_a && both < one_b);
        assert_eq!(local_update(tau0, kappa, &axes), both);

        // A far-away second neighbour makes the two-axis root non-causal
        // for the best subset, so the single-axis root is used.
        let axes = [
            stencil(1.0, h, 1.0, None, 1.0, 0.0),
            stencil(1.0, h, 3.0, None, 3.0, 0.0),
        ];
        assert_eq!(local_update(tau0, kappa, &axes), 1.5);
    }

    #[test]
    fn fallback_always_yields_a_root() {
        // Neighbour travel time far above anything reachable: no causal root.
        let ax = stencil(1.0, 0.1, 1.0, Some(0.2), 100.0, 1.0);
        let t = local_update(0.3, 1.0, &[ax]);
        assert!(t.is_finite() && t > 0.0);
    }
}
