mod common;

use common::*;
use lattice_hydro::covariance::{required_extent, OffsetPair};
use lattice_hydro::*;
use nalgebra::DMatrix;

/// Covariance of the periodic (or odd-extended) chain propagated with the matrix exponential.
fn box_oracle(v: &InteractionMatrix, t_of: impl Fn(f64) -> f64, eps: f64, l: usize, t: f64, half: bool) -> DMatrix<f64> {
    let lbox = LatticeBox::cube(1, l).unwrap();
    let c = |a: usize| lbox.centered_coord(a)[0];
    let s = |z: i64| t_of(eps * z as f64).sqrt();
    let mut q0 = DMatrix::zeros(2 * l, 2 * l);
    for a in 0..l {
        for b in 0..l {
            let (ca, cb) = (c(a), c(b));
            let (w, diff) = if half {
                if ca == 0 || cb == 0 {
                    continue;
                }
                let sign = (ca.signum() * cb.signum()) as f64;
                (sign * s(ca.abs()) * s(cb.abs()), ca.abs() - cb.abs())
            } else {
                (s(ca) * s(cb), lbox.centered_coord(lbox.index_of(&[ca - cb]))[0])
            };
            q0[(a, b)] = w * gibbs_q00(diff);
            q0[(l + a, l + b)] = if diff == 0 { w } else { 0.0 };
        }
    }
    let e = flow_matrix(v, l, t);
    &e * q0 * e.transpose()
}

fn oracle_block(m: &DMatrix<f64>, l: usize, x: i64, y: i64) -> [[f64; 2]; 2] {
    let (ix, iy) = (x.rem_euclid(l as i64) as usize, y.rem_euclid(l as i64) as usize);
    [[m[(ix, iy)], m[(ix, l + iy)]], [m[(l + ix, iy)], m[(l + ix, l + iy)]]]
}

fn oracle_gap(map: &CovarianceMap, query: &ScaledQuery, oracle: &DMatrix<f64>, l: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for ((z, zp), b) in map {
        let o = oracle_block(oracle, l, query.site(z)[0], query.site(zp)[0]);
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((b.entry(i, j).re - o[i][j]).abs());
            }
        }
    }
    worst
}

#[test]
fn time_zero_returns_the_initial_covariance() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(0.0, 1.0, vec![0.5], all_pairs(-2, 2), 0.1).unwrap();
    let map = propagate_covariance(&v, &p, &q).unwrap();
    for ((z, zp), b) in &map {
        let expect = covariance_q(&p, 0.1, &q.site(z), &q.site(zp));
        assert!(b.max_abs_diff(&expect) <= 1e-12);
    }
}

#[test]
fn propagation_matches_matrix_exponential() {
    let v = chain();
    let p = bump_profile(&v);
    let l = 128;
    let q = ScaledQuery::new(0.6, 1.0, vec![0.6], all_pairs(-2, 2), 0.2).unwrap().with_box(BoxPolicy::Fixed(vec![l]));
    let map = propagate_covariance(&v, &p, &q).unwrap();
    let oracle = box_oracle(&v, temperature, 0.2, l, q.time(), false);
    assert!(oracle_gap(&map, &q, &oracle, l) <= 1e-12);
}

#[test]
fn diffusive_scaling_matches_matrix_exponential() {
    let v = chain();
    let p = bump_profile(&v);
    let l = 256;
    let q = ScaledQuery::new(0.3, 2.0, vec![-0.4], all_pairs(-1, 1), 0.2).unwrap().with_box(BoxPolicy::Fixed(vec![l]));
    let map = propagate_covariance(&v, &p, &q).unwrap();
    let oracle = box_oracle(&v, temperature, 0.2, l, q.time(), false);
    assert!(oracle_gap(&map, &q, &oracle, l) <= 1e-12);
}

#[test]
fn equilibrium_is_flow_invariant() {
    let v = chain();
    let g = gibbs_spectral(&v, 1.0).unwrap();
    for t in [1.0, 10.0] {
        let q = ScaledQuery::new(t * 0.1, 1.0, vec![0.3], all_pairs(-2, 2), 0.1).unwrap();
        let map = propagate_covariance(&v, &g, &q).unwrap();
        for ((z, zp), b) in &map {
            assert!(b.max_abs_diff(&covariance_q(&g, 0.1, z, zp)) <= 1e-9);
        }
    }
}

#[test]
fn diagonal_blocks_stay_real_psd() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(1.0, 1.0, vec![0.5], vec![(vec![0], vec![0])], 0.1).unwrap();
    let b = &propagate_covariance(&v, &p, &q).unwrap()[&(vec![0], vec![0])];
    let m = b.matrix().map(|x| x.re);
    assert!(b.matrix().iter().all(|x| x.im == 0.0));
    assert!((&m - m.transpose()).abs().max() <= 1e-10);
    assert!(m.symmetric_eigen().eigenvalues.min() >= -1e-10);
}

#[test]
fn propagated_covariance_is_self_adjoint() {
    let v = build_nearest_neighbor(1, &[1.0, 0.5], &[1.0, 0.8]).unwrap();
    let p = gibbs_spectral(&v, 1.0).unwrap().with_temperature(BUMP).unwrap();
    let q = ScaledQuery::new(0.8, 1.0, vec![0.2], all_pairs(-1, 2), 0.1).unwrap();
    let map = propagate_covariance(&v, &p, &q).unwrap();
    for ((z, zp), b) in &map {
        assert!(b.max_abs_diff(&map[&(zp.clone(), z.clone())].transpose()) <= 1e-12);
    }
}

#[test]
fn explicit_box_must_cover_the_light_cone() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(1.0, 1.0, vec![0.5], all_pairs(0, 1), 0.05).unwrap();
    let need = required_extent(&v, &p, &q);
    let small = q.clone().with_box(BoxPolicy::Fixed(vec![need[0] / 2]));
    match propagate_covariance(&v, &p, &small) {
        Err(Error::BoxTooSmall { required, .. }) => assert_eq!(required, need),
        other => panic!("expected a box error, got {other:?}"),
    }
    assert!(need[0].is_power_of_two());
    // max |omega'| of this chain is the golden-ratio conjugate 0.618...
    assert!(need[0] as f64 >= 2.0 * 1.1 * 0.618 * q.time());
}

#[test]
fn bad_queries_are_rejected() {
    assert!(ScaledQuery::new(1.0, 0.5, vec![0.0], vec![], 0.1).is_err());
    assert!(ScaledQuery::new(1.0, 1.0, vec![0.0], vec![], 0.0).is_err());
    assert!(ScaledQuery::new(1.0, 1.0, vec![0.0], vec![(vec![0, 0], vec![0])], 0.1).is_err());
}

fn half_pairs(lo: i64, hi: i64) -> Vec<OffsetPair> {
    all_pairs(lo, hi)
}

#[test]
fn half_space_matches_odd_extension_oracle() {
    let v = chain();
    let p = bump_profile(&v);
    let l = 128;
    let q = ScaledQuery::new(0.4, 1.0, vec![0.2], half_pairs(-1, 2), 0.2).unwrap().with_box(BoxPolicy::Fixed(vec![l]));
    let map = halfspace_covariance(&v, &p, &q).unwrap();
    let oracle = box_oracle(&v, temperature, 0.2, l, q.time(), true);
    assert!(oracle_gap(&map, &q, &oracle, l) <= 1e-12);
}

#[test]
fn half_space_boundary_rows_vanish() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(1.0, 1.0, vec![0.0], half_pairs(0, 3), 0.1).unwrap();
    for ((z, zp), b) in &halfspace_covariance(&v, &p, &q).unwrap() {
        if z[0] == 0 || zp[0] == 0 {
            assert_eq!(b.max_abs(), 0.0);
        } else {
            assert!(b.max_abs() > 0.0);
        }
    }
}

#[test]
fn half_space_far_from_wall_is_full_space() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(0.5, 1.0, vec![3.0], all_pairs(-2, 2), 0.1).unwrap();
    let (h, f) = (halfspace_covariance(&v, &p, &q).unwrap(), propagate_covariance(&v, &p, &q).unwrap());
    assert!(max_map_diff(&h, &f) <= 1e-8);
}

#[test]
fn half_space_initial_covariance_is_restricted() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(0.0, 1.0, vec![0.0], half_pairs(0, 3), 0.1).unwrap();
    for ((z, zp), b) in &halfspace_covariance(&v, &p, &q).unwrap() {
        let expect = if z[0] == 0 || zp[0] == 0 { BlockCov::zeros(1) } else { covariance_q(&p, 0.1, z, zp) };
        assert!(b.max_abs_diff(&expect) <= 1e-12);
    }
}

#[test]
fn half_space_query_checks() {
    let v = chain();
    let p = bump_profile(&v);
    let neg = ScaledQuery::new(1.0, 1.0, vec![-0.1], all_pairs(0, 1), 0.1).unwrap();
    assert!(matches!(halfspace_covariance(&v, &p, &neg), Err(Error::InvalidQuery(_))));
    let outside = ScaledQuery::new(1.0, 1.0, vec![0.0], vec![(vec![-1], vec![0])], 0.1).unwrap();
    assert!(halfspace_covariance(&v, &p, &outside).is_err());
}

#[test]
fn monte_carlo_agrees_with_propagation() {
    let v = chain();
    let p = bump_profile(&v);
    let q = ScaledQuery::new(1.0, 1.0, vec![0.5], all_pairs(-1, 1), 0.1).unwrap();
    let exact = propagate_covariance(&v, &p, &q).unwrap();
    let mc = empirical_covariance(&v, &p, &q, 1000, 17).unwrap();
    let (mut ok, mut total) = (0, 0);
    for (k, e) in &mc {
        for i in 0..2 {
            for j in 0..2 {
                total += 1;
                let d = (e.estimate.entry(i, j).re - exact[k].entry(i, j).re).abs();
                if d <= 3.0 * e.stderr.entry(i, j).re + 1e-12 {
                    ok += 1;
                }
            }
        }
    }
    assert!(ok as f64 >= 0.95 * total as f64, "{ok}/{total}");
    let again = empirical_covariance(&v, &p, &q, 1000, 17).unwrap();
    assert_eq!(mc, again);
    assert!(empirical_covariance(&v, &p, &q, 50, 17).is_err());
}
