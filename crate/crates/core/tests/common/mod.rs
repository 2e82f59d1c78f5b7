#![allow(dead_code)]

use helmadr::eikonal::{gather_stencils, local_update, AnalyticBase, FmOrder};
use helmadr::model::{Medium, SourceSpec};
use helmadr::sparse::SparseOperator;
use num_complex::Complex64;
use rand::Rng;

pub type C = Complex64;

/// Gauss-Seidel sweeping over four orderings with the same local update as
/// Fast Marching, using every finite neighbour, until no value moves by
/// more than `tol`. Each visit replaces the node value, so the result is a
/// fixed point of the local update rather than a running minimum.
pub fn sweeping_oracle(medium: &Medium, source: &SourceSpec, order: FmOrder, tol: f64) -> Vec<f64> {
    let grid = *medium.grid();
    let kappa: Vec<f64> = medium.kappa_sq().values().iter().map(|k| k.sqrt()).collect();
    let base = AnalyticBase::new(&grid, source);
    let s = source.index(&grid);
    let mut tau1 = vec![f64::INFINITY; grid.len()];
    let mut time = vec![f64::INFINITY; grid.len()];
    tau1[s] = kappa[s];
    time[s] = 0.0;
    let (n1, n2) = grid.dims();
    loop {
        let mut change: f64 = 0.0;
        for (rev1, rev2) in [(false, false), (true, false), (false, true), (true, true)] {
            for a in 0..n2 {
                let i2 = if rev2 { n2 - 1 - a } else { a };
                for b in 0..n1 {
                    let i1 = if rev1 { n1 - 1 - b } else { b };
                    let k = grid.index(i1, i2);
                    if k == s {
                        continue;
                    }
                    let (st, count) =
                        gather_stencils(&grid, &base, &tau1, &time, |q| time[q].is_finite(), i1, i2, order);
                    if count == 0 {
                        continue;
                    }
                    let (x1, x2) = grid.coords(i1, i2);
                    let t0 = base.tau0(x1, x2);
                    let cand = local_update(t0, kappa[k], &st[..count]);
                    let delta = if tau1[k].is_finite() { (tau1[k] - cand).abs() } else { f64::INFINITY };
                    change = change.max(delta);
                    tau1[k] = cand;
                    time[k] = t0 * cand;
                }
            }
        }
        if change <= tol {
            return tau1;
        }
    }
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(rows: &[Vec<C>], b: &[C]) -> Vec<C> {
    let n = b.len();
    let mut a: Vec<Vec<C>> = rows.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, piv);
        x.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f == C::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = x[col];
            x[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    x
}

pub fn dense_matvec(rows: &[Vec<C>], x: &[C]) -> Vec<C> {
    rows.iter()
        .map(|r| r.iter().zip(x).fold(C::new(0.0, 0.0), |acc, (a, b)| acc + a * b))
        .collect()
}

pub fn dense_of(a: &SparseOperator) -> Vec<Vec<C>> {
    a.to_dense()
}

pub fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<C> {
    (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
