mod common;

use pivotal::linalg::{orthonormality_defect, trace_quadratic, Mat};
use pivotal::spectral::{laplacian, smallest_k_eigenvectors, sym_eig};
use proptest::prelude::*;

fn residual(a: &Mat<f64>, values: &[f64], v: &Mat<f64>) -> f64 {
    let av = a.matmul(v).unwrap();
    let vl = Mat::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * values[j]);
    av.sub(&vl).unwrap().frobenius_norm()
}

#[test]
fn random_symmetric_up_to_110() {
    let mut rng = common::rng(21);
    for t in 0..100 {
        let n = 1 + (t * 109) / 99;
        let a = common::random_symmetric(&mut rng, n);
        let e = sym_eig(&a).unwrap();
        let bound = 1e-8 * a.frobenius_norm().max(1.0);
        assert!(residual(&a, &e.values, &e.vectors) <= bound, "n = {n}");
        assert!(orthonormality_defect(&e.vectors) <= 1e-8);
        let sum: f64 = e.values.iter().sum();
        assert!(common::rel_err(sum, a.trace()) <= 1e-9, "n = {n}");
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn eigenvalues_match_jacobi_oracle() {
    let mut rng = common::rng(22);
    for n in [2, 5, 17, 40] {
        let a = common::random_symmetric(&mut rng, n);
        let (oracle, _) = common::jacobi_eigen(&a);
        let e = sym_eig(&a).unwrap();
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-9 * a.frobenius_norm().max(1.0));
        }
    }
}

#[test]
fn sign_convention_holds() {
    let mut rng = common::rng(23);
    let a = common::random_symmetric(&mut rng, 30);
    let e = sym_eig(&a).unwrap();
    for j in 0..30 {
        let col = e.vectors.col(j);
        let mut best = 0;
        for i in 1..30 {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        assert!(col[best] >= 0.0);
    }
}

#[test]
fn ky_fan_minimum_against_random_competitors() {
    let mut rng = common::rng(24);
    let n = 15;
    let k = 5;
    let a = common::random_symmetric(&mut rng, n);
    let w = smallest_k_eigenvectors(&a, k).unwrap();
    let e = sym_eig(&a).unwrap();
    let best = trace_quadratic(&a, &w).unwrap();
    let sum_k: f64 = e.values[..k].iter().sum();
    assert!(common::rel_err(best, sum_k) <= 1e-9);
    for _ in 0..100 {
        let q = common::random_orthonormal(&mut rng, n, k);
        assert!(best <= trace_quadratic(&a, &q).unwrap() + 1e-12);
    }
}

#[test]
fn ky_fan_on_larger_instances() {
    let mut rng = common::rng(25);
    for t in 0..100 {
        let n = 5 + t % 40;
        let k = 1 + t % 5;
        let a = common::random_symmetric(&mut rng, n);
        let w = smallest_k_eigenvectors(&a, k).unwrap();
        let best = trace_quadratic(&a, &w).unwrap();
        let q = common::random_orthonormal(&mut rng, n, k);
        assert!(best <= trace_quadratic(&a, &q).unwrap() + 1e-12);
    }
}

#[test]
fn laplacian_quadratic_form_has_factor_two() {
    let mut rng = common::rng(26);
    for _ in 0..50 {
        let n = 8;
        let k = 3;
        let s = common::random_symmetric(&mut rng, n);
        let l = laplacian(&s).unwrap();
        let w = Mat::from_fn(n, k, |_, _| common::normal(&mut rng));
        let mut lhs = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d2: f64 = (0..k).map(|c| (w[(i, c)] - w[(j, c)]).powi(2)).sum();
                lhs += s[(i, j)] * d2;
            }
        }
        let rhs = 2.0 * trace_quadratic(&l.matrix, &w).unwrap();
        assert!(common::rel_err(lhs, rhs) <= 1e-9);
    }
}

#[test]
fn laplacian_rows_sum_to_zero() {
    let mut rng = common::rng(27);
    let s = common::random_symmetric(&mut rng, 20);
    let l = laplacian(&s).unwrap();
    for i in 0..20 {
        let sum: f64 = l.matrix.row(i).iter().sum();
        assert!(sum.abs() <= 1e-9 * (1.0 + s.max_abs()));
    }
}

#[test]
fn f32_decomposition() {
    let a = Mat::<f32>::from_rows(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]])
        .unwrap();
    let e = sym_eig(&a).unwrap();
    let expect = [2.0 - 2f32.sqrt(), 2.0, 2.0 + 2f32.sqrt()];
    for (x, y) in e.values.iter().zip(expect) {
        assert!((x - y).abs() < 1e-5);
    }
}

proptest! {
    #[test]
    fn permutation_keeps_eigenvalues(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = common::rng(seed);
        let a = common::random_symmetric(&mut rng, n);
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..n).collect();
            p.rotate_left(seed as usize % n);
            p.swap(0, n - 1);
            p
        };
        let pa = Mat::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
        let e1 = sym_eig(&a).unwrap();
        let e2 = sym_eig(&pa).unwrap();
        for (x, y) in e1.values.iter().zip(&e2.values) {
            prop_assert!((x - y).abs() <= 1e-10 * a.frobenius_norm().max(1.0));
        }
    }
}
