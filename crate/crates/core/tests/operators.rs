use std::f64::consts::PI;

use chdyn_core::grid::{self, BoundaryField, FluxField, GridSpec, InteriorField};
use chdyn_core::operators::{self, Closure, InversePoissonSolver};
use proptest::prelude::*;

fn slab(n: usize) -> GridSpec {
    GridSpec::new(2.0 * PI, PI, n, n / 2 + 1).unwrap()
}

fn eigen_error(g: GridSpec, k: f64, m: f64) -> f64 {
    let u = InteriorField::from_fn(g, |x, y| (2.0 * PI * k * x / g.lx).cos() * (m * PI * y / g.ly).cos());
    let lam = (2.0 * PI * k / g.lx).powi(2) + (m * PI / g.ly).powi(2);
    let w = InversePoissonSolver::new(g).unwrap().solve(&u).unwrap();
    let exact = u.scale(1.0 / lam);
    grid::norm_l2(&w.axpy(-1.0, &exact).unwrap()) / grid::norm_l2(&exact)
}

#[test]
fn inverse_eigenfunction_is_second_order() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|n| eigen_error(slab(*n), 1.0, 1.0)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{e:?}");
    }
    // pure x and pure y modes
    for (k, m) in [(2.0, 0.0), (0.0, 2.0)] {
        let e1 = eigen_error(slab(32), k, m);
        let e2 = eigen_error(slab(64), k, m);
        assert!((e1 / e2).log2() >= 1.9, "({k},{m}): {e1} {e2}");
    }
}

#[test]
fn inverse_rejects_mean() {
    let g = slab(16);
    let s = InversePoissonSolver::new(g).unwrap();
    assert!(s.solve(&InteriorField::constant(g, 1.0)).is_err());
    let z = s.solve(&InteriorField::zeros(g)).unwrap();
    assert!(z.values().iter().all(|v| *v == 0.0));
}

#[test]
fn vstar_norm_of_constant_is_its_value() {
    let g = slab(16);
    let s = InversePoissonSolver::new(g).unwrap();
    let n = operators::vstar_norm(&s, &InteriorField::constant(g, -0.3)).unwrap();
    assert!((n - 0.3).abs() < 1e-15);
}

#[test]
fn laplacian_closures_agree() {
    let g = GridSpec::new(3.0, 2.0, 24, 13).unwrap();
    let u = InteriorField::from_fn(g, |x, y| (2.0 * PI * x / 3.0).sin() * (y * y - y) + 0.3 * y.powi(3));
    let neumann = operators::apply_a(&u, Closure::Neumann).unwrap();
    let tr = operators::trace(&u);
    let trace = operators::apply_a(&u, Closure::Trace(&tr)).unwrap();
    let dn = operators::normal_derivative(&u);
    let s = 2.0 / g.dy();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let extra = match j {
                0 => s * dn.bottom[i],
                j if j == g.ny - 1 => s * dn.top[i],
                _ => 0.0,
            };
            let d = neumann.at(i, j) - trace.at(i, j) - extra;
            assert!(d.abs() < 1e-9 * (1.0 + neumann.at(i, j).abs()), "({i},{j}) {d}");
        }
    }
}

#[test]
fn div_grad_and_curl_grad() {
    let g = GridSpec::new(2.0, 1.5, 16, 9).unwrap();
    let u = InteriorField::from_fn(g, |x, y| (PI * x).cos() * y.exp());
    let lap = operators::apply_a(&u, Closure::Neumann).unwrap();
    let dg = operators::div(&operators::grad(&u)).unwrap();
    for (a, b) in lap.values().iter().zip(dg.values()) {
        assert!((a + b).abs() < 1e-10 * (1.0 + a.abs()));
    }
    assert!(operators::curl_norm(&operators::grad(&u)).unwrap() < 1e-12);
}

#[test]
fn dirichlet_form_matches_gradient_norm() {
    let g = GridSpec::new(2.0, 1.5, 16, 9).unwrap();
    let u = InteriorField::from_fn(g, |x, y| (PI * x).sin() + y * y);
    let n = grid::norm_flux(&operators::grad(&u));
    assert!((operators::dirichlet_form(&u) - n * n).abs() < 1e-10 * n * n);
    let a = operators::apply_a(&u, Closure::Neumann).unwrap();
    assert!((grid::inner_l2(&a, &u).unwrap() - n * n).abs() < 1e-10 * n * n);
}

#[test]
fn surface_operators_on_a_mode() {
    let g = GridSpec::new(2.0, 1.0, 64, 5).unwrap();
    let b = BoundaryField::from_fn(g, |x| (PI * x).cos());
    let lb = operators::laplace_beltrami(&b);
    for (l, v) in lb.bottom.iter().zip(&b.bottom) {
        assert!((l + PI * PI * v).abs() < 2e-2);
    }
    let sd = operators::surface_dirichlet_form(&b);
    assert!((sd - PI * PI * grid::norm_gamma(&b).powi(2)).abs() < 1e-2 * sd);
}

fn field(g: GridSpec, vals: &[f64]) -> InteriorField {
    InteriorField::from_vec(g, vals[..g.len()].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_by_parts(
        nx in (2usize..8).prop_map(|k| 2 * k),
        ny in 4usize..10,
        lx in 0.5f64..8.0,
        ly in 0.5f64..8.0,
        vals in prop::collection::vec(-1.0f64..1.0, 3 * 16 * 10),
    ) {
        let g = GridSpec::new(lx, ly, nx, ny).unwrap();
        let n = g.len();
        let u = field(g, &vals);
        let mut qy = vals[2 * n..3 * n].to_vec();
        for v in &mut qy[g.idx(0, ny - 1)..] {
            *v = 0.0;
        }
        let q = FluxField::from_parts(g, vals[n..2 * n].to_vec(), qy).unwrap();
        let lhs = grid::inner_flux(&operators::grad(&u), &q).unwrap();
        let rhs = -grid::inner_l2(&u, &operators::div(&q).unwrap()).unwrap();
        let scale = grid::norm_flux(&q) * grid::norm_flux(&operators::grad(&u)) + 1e-300;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn inverse_round_trip_and_symmetry(
        nx in (2usize..8).prop_map(|k| 2 * k),
        ny in 4usize..10,
        lx in 0.5f64..8.0,
        ly in 0.5f64..8.0,
        vals in prop::collection::vec(-1.0f64..1.0, 2 * 16 * 10),
    ) {
        let g = GridSpec::new(lx, ly, nx, ny).unwrap();
        let f = field(g, &vals);
        let f = f.shift(-grid::mean(&f));
        let h = field(g, &vals[g.len()..]);
        let h = h.shift(-grid::mean(&h));
        let s = InversePoissonSolver::new(g).unwrap();
        let af = s.solve(&f).unwrap();
        prop_assert!(grid::mean(&af).abs() < 1e-12);
        let back = operators::apply_a(&af, Closure::Neumann).unwrap();
        let err = grid::norm_l2(&back.axpy(-1.0, &f).unwrap());
        prop_assert!(err <= 1e-10 * grid::norm_l2(&f));
        let (l, r) = (grid::inner_l2(&af, &h).unwrap(), s.dual_inner(&f, &h).unwrap());
        let r2 = grid::inner_l2(&f, &s.solve(&h).unwrap()).unwrap();
        prop_assert!((l - r2).abs() <= 1e-10 * (l.abs() + r2.abs() + 1e-12));
        prop_assert!((r - r2).abs() <= 1e-12 * (r.abs() + 1e-12));
        // positive definite on mean-free fields
        prop_assert!(s.dual_norm_sq(&f).unwrap() >= 0.0);
    }
}
