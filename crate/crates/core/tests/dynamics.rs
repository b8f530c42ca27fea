mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use common::*;
use lattice_hydro::dynamics::{propagator_symbol, sin_over_omega};
use lattice_hydro::*;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn propagator_is_identity_at_time_zero() {
    let sp = spectral_data(&chain(), &[1.1], &SpectralOptions::default()).unwrap();
    let g = propagator_symbol(&sp, 0.0).ghat;
    assert!((g - CMat::identity(2, 2)).iter().all(|x| x.norm() < 1e-15));
}

#[test]
fn propagator_half_period_flips_sign() {
    let sp = spectral_data(&chain(), &[FRAC_PI_2], &SpectralOptions::default()).unwrap();
    let g = propagator_symbol(&sp, PI / 3f64.sqrt()).ghat;
    let expect = CMat::identity(2, 2) * C64::new(-1.0, 0.0);
    assert!((g - expect).iter().all(|x| x.norm() < 1e-12));
}

#[test]
fn propagator_at_zero_frequency_uses_the_limit() {
    let v = build_nearest_neighbor(1, &[1.0], &[0.0]).unwrap();
    let opts = SpectralOptions { derivatives: false, ..SpectralOptions::default() };
    let sp = spectral_data(&v, &[0.0], &opts).unwrap();
    let g = propagator_symbol(&sp, 2.0).ghat;
    assert_abs_diff_eq!(g[(0, 1)].re, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sin_over_omega(1e-8, 2.0), 2.0, epsilon = 1e-12);
}

#[test]
fn propagator_is_symplectic() {
    let v = build_nearest_neighbor(1, &[1.0, 0.4], &[1.0, 2.0]).unwrap();
    let sp = spectral_data(&v, &[0.8], &SpectralOptions::default()).unwrap();
    let g = propagator_symbol(&sp, 3.3).ghat;
    assert_abs_diff_eq!(g.determinant().re, 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(g.determinant().im, 0.0, epsilon = 1e-10);
}

#[test]
fn green_function_at_time_zero_is_a_delta() {
    let lbox = LatticeBox::cube(1, 32).unwrap();
    let g = green_function(&chain(), 0.0, &lbox).unwrap();
    for z in -16..16 {
        let expect = if z == 0 { RMat::identity(2, 2) } else { RMat::zeros(2, 2) };
        assert!((g.at(&[z]) - expect).abs().max() < 1e-14);
    }
}

#[test]
fn green_function_satisfies_parseval() {
    let lbox = LatticeBox::cube(1, 1024).unwrap();
    let g = green_function(&chain(), 1.0, &lbox).unwrap();
    // closed-form symbol on the DFT grid
    let mut sum = 0.0;
    for k in 0..1024 {
        let th = 2.0 * PI * k as f64 / 1024.0;
        let (w, c, s) = (omega(th), omega(th).cos(), omega(th).sin());
        sum += c * c + (s / w).powi(2) + (w * s).powi(2) + c * c;
    }
    assert_abs_diff_eq!(g.l2_norm(), (sum / 1024.0).sqrt(), epsilon = 1e-10);
    assert!(g.max_imag() <= 1e-10);
}

#[test]
fn green_function_group_property() {
    let v = chain();
    let lbox = LatticeBox::cube(1, 1024).unwrap();
    let (g5, g3, g8) = (
        green_function(&v, 5.0, &lbox).unwrap(),
        green_function(&v, 3.0, &lbox).unwrap(),
        green_function(&v, 8.0, &lbox).unwrap(),
    );
    let l = 1024i64;
    let mut worst: f64 = 0.0;
    for x in -40..=40 {
        let mut acc = RMat::zeros(2, 2);
        for y in 0..l {
            acc += g5.at(&[(x - y).rem_euclid(l)]) * g3.at(&[y]);
        }
        worst = worst.max((acc - g8.at(&[x.rem_euclid(l)])).abs().max());
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn green_function_matches_matrix_exponential() {
    let v = chain();
    let l = 32;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let g = green_function(&v, 2.7, &lbox).unwrap();
    let e = flow_matrix(&v, l, 2.7);
    for x in 0..l {
        let blk = g.at(&[x as i64]);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(blk[(r, c)], e[(r * l + x, c * l)], epsilon = 1e-11);
        }
    }
}

#[test]
fn evolve_at_time_zero_returns_the_state() {
    let lbox = LatticeBox::cube(1, 64).unwrap();
    let x0 = random_state(&lbox, 1, 3);
    let x = evolve(&chain(), &x0, 0.0).unwrap();
    assert!(sup(&x.v0, &x0.v0) <= 1e-12 && sup(&x.v1, &x0.v1) <= 1e-12);
}

#[test]
fn evolve_matches_matrix_exponential() {
    let v = chain();
    let l = 32;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let x0 = random_state(&lbox, 1, 11);
    let x = evolve(&v, &x0, 3.7).unwrap();
    let mut s = nalgebra::DVector::zeros(2 * l);
    for k in 0..l {
        s[k] = x0.v0[k];
        s[l + k] = x0.v1[k];
    }
    let out = flow_matrix(&v, l, 3.7) * s;
    assert!(sup(&x.v0, &out.as_slice()[..l]) <= 1e-11);
    assert!(sup(&x.v1, &out.as_slice()[l..]) <= 1e-11);
}

#[test]
fn evolve_conserves_energy() {
    let v = chain();
    let lbox = LatticeBox::cube(1, 256).unwrap();
    let x0 = random_state(&lbox, 1, 5);
    let x = evolve(&v, &x0, 7.0).unwrap();
    let (h0, h1) = (hamiltonian(&v, &x0), hamiltonian(&v, &x));
    assert!((h1 - h0).abs() / h0.max(1.0) <= 1e-10);
}

#[test]
fn evolve_conserves_energy_in_two_dimensions_with_two_components() {
    let v = build_nearest_neighbor(2, &[1.0, 0.5], &[0.7, 1.3]).unwrap();
    let lbox = LatticeBox::cube(2, 16).unwrap();
    let x0 = random_state(&lbox, 2, 9);
    let x = evolve(&v, &x0, 12.5).unwrap();
    let (h0, h1) = (hamiltonian(&v, &x0), hamiltonian(&v, &x));
    assert!((h1 - h0).abs() / h0.max(1.0) <= 1e-10);
}

#[test]
fn plane_wave_oscillates_in_place() {
    let v = chain();
    let l = 64;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let th = 2.0 * PI * 5.0 / l as f64;
    let v0: Vec<f64> = (0..l).map(|z| (th * z as f64).cos()).collect();
    let x0 = FieldState::new(lbox, 1, v0.clone(), vec![0.0; l], false).unwrap();
    let t = 4.2;
    let x = evolve(&v, &x0, t).unwrap();
    let expect: Vec<f64> = v0.iter().map(|c| c * (omega(th) * t).cos()).collect();
    assert!(sup(&x.v0, &expect) <= 1e-12);
}

#[test]
fn box_smaller_than_interaction_is_rejected() {
    let lbox = LatticeBox::cube(1, 2).unwrap();
    let x0 = FieldState::zeros(lbox, 1, false);
    assert!(evolve(&chain(), &x0, 1.0).is_err());
}

fn half_state(l: usize, support: std::ops::Range<usize>, seed: u64) -> FieldState {
    let lbox = LatticeBox::cube(1, l).unwrap();
    let mut x = random_state(&lbox, 1, seed);
    for k in 0..l {
        if !support.contains(&k) {
            x.v0[k] = 0.0;
            x.v1[k] = 0.0;
        }
    }
    FieldState::new(lbox, 1, x.v0, x.v1, true).unwrap()
}

#[test]
fn half_space_state_must_vanish_on_the_boundary() {
    let lbox = LatticeBox::cube(1, 8).unwrap();
    assert!(FieldState::new(lbox, 1, vec![1.0; 8], vec![0.0; 8], true).is_err());
}

#[test]
fn half_space_boundary_stays_zero() {
    let y0 = half_state(64, 1..40, 2);
    for t in [0.5, 3.0, 40.0] {
        let y = evolve_halfspace(&chain(), &y0, t).unwrap();
        assert!(y.is_half_space());
        assert!(y.boundary_max() <= 1e-12);
    }
}

#[test]
fn half_space_evolution_at_time_zero() {
    let y0 = half_state(64, 1..64, 8);
    let y = evolve_halfspace(&chain(), &y0, 0.0).unwrap();
    assert!(sup(&y.v0, &y0.v0) <= 1e-12 && sup(&y.v1, &y0.v1) <= 1e-12);
}

#[test]
fn half_space_far_from_boundary_matches_full_space() {
    let v = chain();
    let y0 = half_state(128, 40..56, 4);
    let full = FieldState::new(y0.lattice().clone(), 1, y0.v0.clone(), y0.v1.clone(), false).unwrap();
    let (yh, yf) = (evolve_halfspace(&v, &y0, 2.0).unwrap(), evolve(&v, &full, 2.0).unwrap());
    assert!(sup(&yh.v0[20..80], &yf.v0[20..80]) <= 1e-10);
    assert!(sup(&yh.v1[20..80], &yf.v1[20..80]) <= 1e-10);
}

#[test]
fn half_space_matches_odd_extension_oracle() {
    // the image solution restricted to z >= 0 on a doubled periodic box
    let v = chain();
    let l = 16;
    let y0 = half_state(l, 1..l, 6);
    let big = 2 * l;
    let mut s = nalgebra::DVector::zeros(2 * big);
    for k in 1..l {
        s[k] = y0.v0[k];
        s[big - k] = -y0.v0[k];
        s[big + k] = y0.v1[k];
        s[2 * big - k] = -y0.v1[k];
    }
    let out = flow_matrix(&v, big, 1.9) * s;
    let y = evolve_halfspace(&v, &y0, 1.9).unwrap();
    assert!(sup(&y.v0, &out.as_slice()[..l]) <= 1e-11);
    assert!(sup(&y.v1, &out.as_slice()[big..big + l]) <= 1e-11);
}

#[test]
fn half_space_needs_reflection_symmetry() {
    let one = |x: f64| RMat::from_element(1, 1, x);
    let v = InteractionMatrix::new(1, 1, [(vec![0], one(3.0)), (vec![1], one(-1.0)), (vec![-1], one(-0.5))]).unwrap();
    let y0 = half_state(16, 1..8, 1);
    assert!(matches!(evolve_halfspace(&v, &y0, 1.0), Err(Error::ModelViolation)));
}

#[test]
fn hamiltonian_examples() {
    let v = chain();
    let lbox = LatticeBox::cube(1, 8).unwrap();
    assert_eq!(hamiltonian(&v, &FieldState::zeros(lbox.clone(), 1, false)), 0.0);
    let mut kick = FieldState::zeros(lbox.clone(), 1, false);
    kick.v1[3] = 1.0;
    assert_abs_diff_eq!(hamiltonian(&v, &kick), 0.5, epsilon = 1e-15);
    let mut shift = FieldState::zeros(lbox, 1, false);
    shift.v0[3] = 1.0;
    assert_abs_diff_eq!(hamiltonian(&v, &shift), 1.5, epsilon = 1e-15);
}

#[test]
fn hamiltonian_matches_position_space_quadratic_form() {
    let v = chain();
    let l = 32;
    let lbox = LatticeBox::cube(1, l).unwrap();
    let x = random_state(&lbox, 1, 21);
    let vm = chain_potential(&v, l);
    let u = nalgebra::DVector::from_column_slice(&x.v0);
    let p = nalgebra::DVector::from_column_slice(&x.v1);
    let expect = 0.5 * p.dot(&p) + 0.5 * u.dot(&(&vm * &u));
    assert_abs_diff_eq!(hamiltonian(&v, &x), expect, epsilon = 1e-12);
}
