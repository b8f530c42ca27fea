mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use common::*;
use lattice_hydro::limits::FieldAxis;
use lattice_hydro::wigner::{
    transport_residual, wigner_exact, wigner_initial, wigner_initial_grid, wigner_limit_grid, wigner_relation_residual,
    WignerConvention, WignerQuery, WignerWindow,
};
use lattice_hydro::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

type C = Complex<f64>;

/// (V^{1/4} v0 + i V^{-1/4} v1) / sqrt 2 with dense matrix powers of the box potential.
fn dense_a(v: &InteractionMatrix, l: usize, x: &FieldState, sign: f64) -> Vec<C> {
    let pot = chain_potential(v, l);
    let up = symmetric_function(&pot, |e| e.powf(0.25));
    let down = symmetric_function(&pot, |e| e.powf(-0.25));
    let v0 = &up * DVector::from_iterator(l, (0..l).map(|i| x.displacement(i)[0]));
    let v1 = &down * DVector::from_iterator(l, (0..l).map(|i| x.velocity(i)[0]));
    (0..l).map(|i| C::new(v0[i], sign * v1[i]) * FRAC_1_SQRT_2).collect()
}

#[test]
fn a_field_matches_dense_matrix_powers() {
    let v = chain();
    let l = 64;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let x = random_state(&lbox, 1, 5);
    let a = a_field(&v, &x).unwrap();
    let expect = dense_a(&v, l, &x, 1.0);
    for i in 0..l {
        assert!((a.at_index(i)[0] - expect[i]).norm() <= 1e-12);
    }
    let conj = dense_a(&v, l, &x, -1.0);
    for i in 0..l {
        assert!((a.at_index(i)[0].conj() - conj[i]).norm() <= 1e-12);
    }
}

#[test]
fn a_field_of_pure_momentum() {
    let v = chain();
    let l = 32;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let mut x = random_state(&lbox, 1, 8);
    x = FieldState::new(lbox, 1, vec![0.0; l], (0..l).map(|i| x.velocity(i)[0]).collect(), false).unwrap();
    let a = a_field(&v, &x).unwrap();
    let down = symmetric_function(&chain_potential(&v, l), |e| e.powf(-0.25));
    let v1 = &down * DVector::from_iterator(l, (0..l).map(|i| x.velocity(i)[0]));
    for i in 0..l {
        assert!((a.at_index(i)[0] - C::new(0.0, v1[i] * FRAC_1_SQRT_2)).norm() <= 1e-12);
    }
}

#[test]
fn single_mode_action_identity() {
    let v = chain();
    let l = 64;
    let k = 5;
    let th = 2.0 * PI * k as f64 / l as f64;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let v0: Vec<f64> = (0..l).map(|z| (th * z as f64).cos()).collect();
    let v1: Vec<f64> = (0..l).map(|z| omega(th) * (th * z as f64).sin()).collect();
    let x = FieldState::new(lbox, 1, v0, v1, false).unwrap();
    let a = a_field(&v, &x).unwrap();
    assert_abs_diff_eq!(a.norm_sqr(), hamiltonian(&v, &x) / omega(th), epsilon = 1e-10);
}

#[test]
fn a_field_needs_a_massive_chain() {
    let v = build_nearest_neighbor(1, &[1.0], &[0.0]).unwrap();
    let x = FieldState::zeros(LatticeBox::cube(1, 16).unwrap(), 1, false);
    assert!(a_field(&v, &x).is_err());
}

#[test]
fn initial_wigner_of_gibbs_profile() {
    let v = chain();
    let p = bump_profile(&v);
    for (r, th) in [(0.0, 0.5), (0.7, FRAC_PI_2), (-1.2, 3.0)] {
        let w = wigner_initial(&v, &p, &[r], &[th]).unwrap();
        assert_abs_diff_eq!(w[(0, 0)].re, temperature(r) / omega(th), epsilon = 1e-12);
        assert_abs_diff_eq!(w[(0, 0)].im, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn limit_wigner_examples() {
    let v = chain();
    let p = bump_profile(&v);
    let w = wigner_limit(&v, &p, 1.0, &[0.0], &[FRAC_PI_2], false).unwrap();
    assert_abs_diff_eq!(w[(0, 0)].re, 0.784195, epsilon = 1e-6);
    assert_abs_diff_eq!(w[(0, 0)].re, temperature(-omega_prime(FRAC_PI_2)) / omega(FRAC_PI_2), epsilon = 1e-12);
    for (r, th) in [(0.3, 1.0), (-0.5, -2.0)] {
        let at0 = wigner_limit(&v, &p, 0.0, &[r], &[th], false).unwrap();
        assert!((at0 - wigner_initial(&v, &p, &[r], &[th]).unwrap()).iter().all(|x| x.norm() <= 1e-15));
    }
}

#[test]
fn half_space_limit_wigner_reflects_behind_the_front() {
    let v = chain();
    let p = bump_profile(&v);
    let th = 1.0;
    let speed = omega_prime(th);
    let ahead = wigner_limit(&v, &p, 1.0, &[speed + 0.4], &[th], true).unwrap();
    let full = wigner_limit(&v, &p, 1.0, &[speed + 0.4], &[th], false).unwrap();
    assert!((ahead - full).iter().all(|x| x.norm() <= 1e-15));
    // behind the front the packet came from the reflected angle at the mirrored point
    let r = 0.2;
    let behind = wigner_limit(&v, &p, 1.0, &[r], &[th], true).unwrap();
    assert_abs_diff_eq!(behind[(0, 0)].re, temperature(speed - r) / omega(th), epsilon = 1e-12);
    assert!(matches!(wigner_limit(&v, &p, 1.0, &[speed], &[th], true), Err(Error::CriticalSet { .. })));
    assert!(wigner_limit(&v, &p, 1.0, &[-0.1], &[th], true).is_err());
}

#[test]
fn limit_wigner_is_consistent_with_euler_covariance() {
    let v = chain();
    let p = bump_profile(&v);
    for (tau, r, th) in [(1.0, 0.5, 0.8), (0.4, -0.3, 2.5), (2.0, 1.0, -1.4)] {
        assert!(wigner_relation_residual(&v, &p, tau, &[r], &[th], false).unwrap() <= 1e-10);
    }
    for (tau, r, th) in [(1.0, 0.3, 0.8), (0.5, 1.2, -2.0)] {
        assert!(wigner_relation_residual(&v, &p, tau, &[r], &[th], true).unwrap() <= 1e-10);
    }
}

#[test]
fn limit_grid_is_hermitian() {
    let v = build_nearest_neighbor(1, &[1.0, 0.5], &[1.0, 0.8]).unwrap();
    let p = gibbs_spectral(&v, 1.0).unwrap().with_temperature(BUMP).unwrap();
    let thetas: Vec<Vec<f64>> = [0.3, 1.1, 2.4].iter().map(|&t| vec![t]).collect();
    let g = wigner_limit_grid(&v, &p, false, FieldAxis::new(0.0, 0.5, 3).unwrap(), vec![FieldAxis::new(-1.0, 0.5, 5).unwrap()], &thetas)
        .unwrap();
    assert!(g.hermitian_defect() <= 1e-12);
    let i = wigner_initial_grid(&v, &p, vec![FieldAxis::new(-1.0, 0.5, 5).unwrap()], &thetas).unwrap();
    assert!(i.hermitian_defect() <= 1e-12);
}

fn thetas() -> Vec<Vec<f64>> {
    [0.4, 1.3, 2.2].iter().map(|&t| vec![t]).collect()
}

fn full_residual(h: f64, p: &CovarianceProfile) -> f64 {
    let g = wigner_limit_grid(
        &chain(),
        p,
        false,
        FieldAxis::centered(1.0, h, 3).unwrap(),
        vec![FieldAxis::centered(0.2, h, 3).unwrap()],
        &thetas(),
    )
    .unwrap();
    transport_residual(&g).unwrap().interior
}

#[test]
fn transport_residual_is_second_order() {
    let p = bump_profile(&chain());
    let (a, b) = (full_residual(0.02, &p), full_residual(0.01, &p));
    assert!((3.5..=4.5).contains(&(a / b)), "{a:e} {b:e}");
}

#[test]
fn transport_residual_vanishes_for_constant_temperature() {
    let g = gibbs_spectral(&chain(), 1.0).unwrap();
    assert!(full_residual(0.05, &g) <= 1e-12);
}

#[test]
fn half_space_boundary_values_match() {
    let v = chain();
    let p = bump_profile(&v);
    let g = wigner_limit_grid(
        &v,
        &p,
        true,
        FieldAxis::new(0.5, 0.25, 4).unwrap(),
        vec![FieldAxis::new(0.0, 0.1, 4).unwrap()],
        &[vec![0.7], vec![-0.7], vec![2.0]],
    )
    .unwrap();
    let rep = transport_residual(&g).unwrap();
    let b = rep.boundary.unwrap();
    assert!(b.points > 0);
    assert!(b.mismatch <= 1e-10 && b.symmetric_mismatch <= 1e-10, "{b:?}");
}

#[test]
fn transport_residual_rejects_other_grids() {
    let v = chain();
    let p = bump_profile(&v);
    let i = wigner_initial_grid(&v, &p, vec![FieldAxis::new(0.0, 0.1, 5).unwrap()], &thetas()).unwrap();
    assert!(transport_residual(&i).is_err());
    let small = wigner_limit_grid(&v, &p, false, FieldAxis::new(0.0, 0.1, 2).unwrap(), vec![FieldAxis::new(0.0, 0.1, 5).unwrap()], &thetas())
        .unwrap();
    assert!(matches!(transport_residual(&small), Err(Error::GridTooSmall(_))));
}

fn exact_gap(eps: f64, tau: f64, convention: WignerConvention) -> f64 {
    let v = chain();
    let p = bump_profile(&v);
    let q = WignerQuery::new(eps, tau, vec![0.5], thetas()).with_convention(convention);
    let w = wigner_exact(&v, &p, &q).unwrap();
    thetas()
        .iter()
        .enumerate()
        .map(|(k, th)| (w.value(0, &[0], k) - wigner_limit(&v, &p, tau, &[0.5], th, false).unwrap()).iter().map(|x| x.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

#[test]
fn exact_wigner_converges_to_the_initial_matrix() {
    for conv in [WignerConvention::IntegerPart, WignerConvention::EvenLattice] {
        let gaps: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| exact_gap(e, 0.0, conv)).collect();
        assert!(strictly_decreasing(&gaps), "{conv:?} {gaps:?}");
    }
}

#[test]
fn exact_wigner_converges_to_the_limit() {
    for conv in [WignerConvention::IntegerPart, WignerConvention::EvenLattice] {
        let gaps: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| exact_gap(e, 1.0, conv)).collect();
        assert!(strictly_decreasing(&gaps), "{conv:?} {gaps:?}");
    }
}

#[test]
fn exact_wigner_is_homogeneous_for_constant_temperature() {
    let v = chain();
    let g = gibbs_spectral(&v, 1.0).unwrap();
    let at = |r: f64| wigner_exact(&v, &g, &WignerQuery::new(0.1, 0.5, vec![r], thetas())).unwrap();
    let (a, b) = (at(0.0), at(1.3));
    for k in 0..3 {
        assert!((a.value(0, &[0], k) - b.value(0, &[0], k)).iter().all(|x| x.norm() <= 1e-10));
        assert_abs_diff_eq!(a.value(0, &[0], k)[(0, 0)].re, 1.0 / omega(thetas()[k][0]), epsilon = 1e-6);
    }
}

#[test]
fn empirical_wigner_agrees_with_exact() {
    let v = chain();
    let p = bump_profile(&v);
    let q = WignerQuery::new(0.1, 0.5, vec![0.5], thetas());
    let exact = wigner_exact(&v, &p, &q).unwrap();
    let mc = wigner_empirical(&v, &p, &q, 400, 3).unwrap();
    let (mut ok, mut total) = (0, 0);
    for k in 0..3 {
        let (e, m, s) = (exact.value(0, &[0], k)[(0, 0)], mc.value(0, &[0], k)[(0, 0)], mc.stderr(0, &[0], k).unwrap()[(0, 0)]);
        total += 2;
        ok += usize::from((e.re - m.re).abs() <= 3.0 * s.re + 1e-12);
        ok += usize::from((e.im - m.im).abs() <= 3.0 * s.im + 1e-12);
    }
    assert!(ok + 1 >= total, "{ok}/{total}");
    let again = wigner_empirical(&v, &p, &q, 400, 3).unwrap();
    assert_eq!(mc.values(), again.values());
}

#[test]
fn empirical_wigner_rejects_unsupported_requests() {
    let v = chain();
    let p = bump_profile(&v);
    let q = WignerQuery::new(0.1, 0.5, vec![0.5], thetas());
    assert!(matches!(wigner_empirical(&v, &p, &q.clone().half_space(), 100, 1), Err(Error::Unsupported(_))));
    let tiny = WignerWindow { y_max: 4, taper: 0.1, tail_tol: 1e-6 };
    assert!(matches!(wigner_exact(&v, &p, &q.clone().with_window(tiny)), Err(Error::WindowTooSmall { .. })));
}

#[test]
fn half_space_exact_wigner_approaches_the_limit() {
    // single angles oscillate with the wall interference; the panel maximum shrinks
    let v = chain();
    let p = bump_profile(&v);
    let ths: Vec<Vec<f64>> = (0..32).map(|k| vec![-3.0 + 6.0 * (k as f64 + 0.5) / 32.0]).collect();
    let (tau, r) = (1.0, 0.3);
    let gaps: Vec<f64> = [0.025, 0.0125, 0.00625]
        .iter()
        .map(|&e| {
            let w = wigner_exact(&v, &p, &WignerQuery::new(e, tau, vec![r], ths.clone()).half_space()).unwrap();
            ths.iter()
                .enumerate()
                .map(|(k, th)| (w.value(0, &[0], k) - wigner_limit(&v, &p, tau, &[r], th, true).unwrap()).iter().map(|x| x.norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(strictly_decreasing(&gaps), "{gaps:?}");
}

#[test]
fn dense_potential_is_the_chain() {
    let pot: DMatrix<f64> = chain_potential(&chain(), 8);
    assert_abs_diff_eq!(pot[(0, 0)], 3.0);
    assert_abs_diff_eq!(pot[(0, 1)], -1.0);
    assert_abs_diff_eq!(pot[(0, 7)], -1.0);
}
