mod common;

use common::{max_abs_diff, random_vec, C};
use helmadr::eikonal::{FmOrder, TravelTime};
use helmadr::grid::{ComplexField, GridSpec};
use helmadr::model::{generate_model, ModelKind, SourceSpec};
use helmadr::operators::{
    assemble_adr, assemble_helmholtz, blend, rhs_transform, shift_operator, similarity_conjugate, source_zone, BCSpec,
    BoundaryCondition, Conjugation, DiagonalScaling, Scheme, Transform,
};
use helmadr::sparse::SparseOperator;
use helmadr::Side;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn eigenvalues(a: &SparseOperator) -> Vec<C> {
    let n = a.nrows();
    let dense = a.to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let (_, t) = m.schur().unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Largest distance from an eigenvalue of one set to its nearest unused
/// partner in the other.
fn spectral_distance(a: &[C], b: &[C]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn bc_strategy() -> impl Strategy<Value = BCSpec> {
    let side = prop_oneof![Just(BoundaryCondition::Neumann), Just(BoundaryCondition::Sommerfeld)];
    (side.clone(), side.clone(), side.clone(), side).prop_map(|(t, b, l, r)| BCSpec {
        top: t,
        bottom: b,
        left: l,
        right: r,
    })
}

#[test]
fn similarity_preserves_eigenvalues() {
    let grid = GridSpec::new(20, 20, 1.0, 1.0).unwrap();
    let m = generate_model(ModelKind::Gaussian, &grid).unwrap();
    let s = SourceSpec::new(&grid, 7, 0, 25.0).unwrap();
    let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
    let mm = DiagonalScaling::new(&tt, s.omega);
    let h = assemble_helmholtz(&m, s.omega, &BCSpec::free_surface());
    let conj = similarity_conjugate(&h, &mm, Conjugation::MAMinv).unwrap();
    let (la, lb) = (eigenvalues(&h), eigenvalues(&conj));
    let radius = la.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(spectral_distance(&la, &lb) <= 1e-8 * radius);
    assert!(spectral_distance(&lb, &la) <= 1e-8 * radius);

    let adr = assemble_adr(&m, s.omega, &tt, Scheme::Upwind2, &BCSpec::free_surface()).unwrap();
    let back = similarity_conjugate(&adr, &mm, Conjugation::MinvAM).unwrap();
    let (la, lb) = (eigenvalues(&adr), eigenvalues(&back));
    let radius = la.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(spectral_distance(&la, &lb) <= 1e-8 * radius);
}

/// Applies the central operator to a smooth amplitude with the exact
/// constant-medium travel time and compares with the continuous operator.
fn manufactured_residual_error(n: usize, omega: f64) -> f64 {
    let grid = GridSpec::new(n, n, 1.0, 1.0).unwrap();
    let ksq = 1.7;
    let kappa = f64::sqrt(ksq);
    let m = generate_model(ModelKind::Constant { kappa_sq: ksq }, &grid).unwrap();
    let s = SourceSpec::new(&grid, n / 2, n / 2, omega).unwrap();
    let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
    let op = assemble_adr(&m, omega, &tt, Scheme::Central, &BCSpec::uniform(BoundaryCondition::Neumann)).unwrap();

    let a = |x: f64, y: f64| C::new(1.0 + x * y, x.sin());
    let grad_a = |x: f64, y: f64| [C::new(y, x.cos()), C::new(x, 0.0)];
    let lap_a = |x: f64, _y: f64| C::new(0.0, -x.sin());
    let field = ComplexField::from_fn(grid, a);
    let applied = op.spmv(field.values()).unwrap();

    let i = C::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for k in 0..grid.len() {
        let (i1, i2) = grid.node(k);
        let (x, y) = grid.coords(i1, i2);
        let (dx, dy) = (x - 0.5, y - 0.5);
        let r = dx.hypot(dy);
        if r < 0.25 || !(0.1..=0.9).contains(&x) || !(0.1..=0.9).contains(&y) {
            continue;
        }
        let g = grad_a(x, y);
        let advection = kappa * (dx * g[0] + dy * g[1]) / r;
        let exact = lap_a(x, y) - 2.0 * i * omega * advection - i * omega * (kappa / r) * a(x, y);
        worst = worst.max((applied[k] - exact).norm());
    }
    worst
}

#[test]
fn central_operator_is_second_order_consistent() {
    let e: Vec<f64> = [33, 65, 129].iter().map(|&n| manufactured_residual_error(n, 6.0)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "{e:?}");
    }
}

#[test]
fn source_zone_shrinks_in_cells_as_frequency_grows() {
    let grid = GridSpec::new(257, 129, 2.0, 1.0).unwrap();
    let m = generate_model(ModelKind::LINEAR, &grid).unwrap();
    let s = SourceSpec::top_center(&grid, 1.0).unwrap();
    let k = s.index(&grid);
    let widths: Vec<usize> = [10.0, 30.0, 60.0, 1e4].iter().map(|&w| source_zone(&m, w, k).0).collect();
    assert!(widths.windows(2).all(|p| p[0] >= p[1]));
    assert_eq!(*widths.last().unwrap(), 1);
}

#[test]
fn adr_rejects_travel_time_on_another_grid() {
    let g1 = GridSpec::new(9, 9, 1.0, 1.0).unwrap();
    let g2 = GridSpec::new(11, 9, 1.0, 1.0).unwrap();
    let m = generate_model(ModelKind::Constant { kappa_sq: 1.0 }, &g1).unwrap();
    assert!(assemble_adr(&m, 1.0, &TravelTime::zero(&g2), Scheme::Central, &BCSpec::free_surface()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_travel_time_gives_the_helmholtz_operator(n1 in 5usize..20, n2 in 5usize..20, omega in 0.5..40.0f64, bc in bc_strategy()) {
        let grid = GridSpec::new(n1, n2, 1.3, 0.9).unwrap();
        let m = generate_model(ModelKind::Waveguide, &grid).unwrap();
        let h = assemble_helmholtz(&m, omega, &bc);
        let zero = TravelTime::zero(&grid);
        for scheme in [Scheme::Central, Scheme::Upwind1, Scheme::Upwind2] {
            let a = assemble_adr(&m, omega, &zero, scheme, &bc).unwrap();
            prop_assert!(a.max_relative_difference(&h) <= 1e-14);
        }
    }

    #[test]
    fn operators_are_finite_with_bounded_stencils(n1 in 6usize..24, n2 in 6usize..24, omega in 1.0..60.0f64, bc in bc_strategy(), fs in 0.0..1.0f64) {
        let grid = GridSpec::new(n1, n2, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::Gaussian, &grid).unwrap();
        let i1 = ((fs * (n1 - 1) as f64) as usize).clamp(1, n1 - 2);
        let s = SourceSpec::new(&grid, i1, 0, omega).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        for (scheme, bound) in [(Scheme::Central, 9), (Scheme::Upwind1, 9), (Scheme::Upwind2, 13)] {
            let a = assemble_adr(&m, omega, &tt, scheme, &bc).unwrap();
            prop_assert!(a.is_finite() && a.is_well_formed());
            prop_assert!(a.max_row_nnz() <= bound);
        }
    }

    #[test]
    fn conjugation_round_trips(seed in any::<u64>(), omega in 0.5..50.0f64) {
        let grid = GridSpec::new(13, 11, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::LINEAR, &grid).unwrap();
        let s = SourceSpec::top_center(&grid, omega).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::First).unwrap();
        let mm = DiagonalScaling::new(&tt, omega);
        let h = assemble_helmholtz(&m, omega, &BCSpec::free_surface());
        let there = similarity_conjugate(&h, &mm, Conjugation::MAMinv).unwrap();
        let back = similarity_conjugate(&there, &mm, Conjugation::MinvAM).unwrap();
        prop_assert!(back.max_relative_difference(&h) <= 1e-14);
        prop_assert_eq!(there.col_idx(), h.col_idx());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_vec(grid.len(), &mut rng);
        let f = ComplexField::from_values(grid, v).unwrap();
        let rt = rhs_transform(&rhs_transform(&f, &tt, omega, Transform::ToAdr).unwrap(), &tt, omega, Transform::ToHelmholtz).unwrap();
        prop_assert!(max_abs_diff(rt.values(), f.values()) <= 1e-14);
    }

    #[test]
    fn shift_is_linear_in_alpha(alpha in 0.0..1.0f64, omega in 0.5..30.0f64) {
        let grid = GridSpec::new(9, 7, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::Gaussian, &grid).unwrap();
        let h = assemble_helmholtz(&m, omega, &BCSpec::free_surface());
        let once = shift_operator(&h, alpha, omega, &m).unwrap();
        let twice = shift_operator(&shift_operator(&h, alpha / 2.0, omega, &m).unwrap(), alpha / 2.0, omega, &m).unwrap();
        prop_assert!(once.max_relative_difference(&twice) <= 1e-14);
        for k in 0..grid.len() {
            let d = once.get(k, k) - h.get(k, k);
            let expected = -alpha * omega * omega * m.kappa_sq().values()[k];
            prop_assert!(d.re.abs() <= 1e-12 * h.get(k, k).norm() && (d.im - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn blend_weights_sum_to_one(beta in 0.0..1.0f64) {
        let grid = GridSpec::new(11, 9, 1.0, 1.0).unwrap();
        let m = generate_model(ModelKind::LINEAR, &grid).unwrap();
        let s = SourceSpec::top_center(&grid, 15.0).unwrap();
        let tt = TravelTime::compute(&m, &s, FmOrder::Second).unwrap();
        let bc = BCSpec::free_surface().with(Side::Left, BoundaryCondition::Neumann);
        let h1 = assemble_adr(&m, 15.0, &tt, Scheme::Upwind1, &bc).unwrap();
        let h2 = assemble_adr(&m, 15.0, &tt, Scheme::Upwind2, &bc).unwrap();
        let b = blend(&h2, &h1, beta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_vec(grid.len(), &mut rng);
        let (y, y1, y2) = (b.spmv(&v).unwrap(), h1.spmv(&v).unwrap(), h2.spmv(&v).unwrap());
        let expected: Vec<C> = y1.iter().zip(&y2).map(|(p, q)| q * (1.0 - beta) + p * beta).collect();
        let scale = y.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_abs_diff(&y, &expected) <= 1e-12 * scale);
    }
}
