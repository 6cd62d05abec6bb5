//! Graph Laplacians and a dense symmetric eigensolver.
//!
//! The eigensolver is Householder tridiagonalisation followed by implicit QL
//! with Wilkinson-style shifts (the classic `tred2`/`tql2` pair). Output is
//! normalised to a fixed contract: eigenvalues ascending, and every
//! eigenvector column signed so that its largest-magnitude entry is
//! non-negative (first such entry on ties). That makes results reproducible
//! bit-for-bit across runs for identical input.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Relative asymmetry accepted by [`laplacian`] and [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianMatrix<T> {
    pub matrix: Mat<T>,
}

/// `L = G − S` with `G_ii = Σ_j S_ij`; the sum includes the diagonal entry.
pub fn laplacian<T: Scalar>(s: &Mat<T>) -> Result<LaplacianMatrix<T>> {
    s.check_symmetric(SYMMETRY_TOL)?;
    let d = s.rows();
    let mut l = s.scaled(-T::one());
    for i in 0..d {
        let degree: T = s.row(i).iter().copied().sum();
        l[(i, i)] += degree;
    }
    Ok(LaplacianMatrix { matrix: l })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `j` pairs with `values[j]`.
    pub vectors: Mat<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    /// The first `k` eigenvector columns as a `d × k` matrix.
    pub fn smallest(&self, k: usize) -> Result<Mat<T>> {
        let d = self.values.len();
        if k > d {
            return Err(Error::KTooLarge { k, d });
        }
        Ok(Mat::from_fn(d, k, |i, j| self.vectors[(i, j)]))
    }

    /// Gap `λ_k − λ_{k−1}` between the last kept and first dropped eigenvalue,
    /// or `None` when nothing is dropped.
    pub fn gap_after(&self, k: usize) -> Option<T> {
        if k == 0 || k >= self.values.len() {
            return None;
        }
        Some(self.values[k] - self.values[k - 1])
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig<T: Scalar>(a: &Mat<T>) -> Result<EigenDecomposition<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if a.rows() == 0 {
        return Err(Error::Config("empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    a.check_symmetric(SYMMETRY_TOL)?;

    let n = a.rows();
    // tred2 reads only the lower triangle.
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap().then(x.cmp(&y)));

    let values: Vec<T> = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    canonicalize_signs(&mut vectors);
    Ok(EigenDecomposition { values, vectors })
}

/// `d × k` matrix of eigenvectors for the `k` smallest eigenvalues.
pub fn smallest_k_eigenvectors<T: Scalar>(a: &Mat<T>, k: usize) -> Result<Mat<T>> {
    if k > a.rows() {
        return Err(Error::KTooLarge { k, d: a.rows() });
    }
    sym_eig(a)?.smallest(k)
}

/// Flip each column so its largest-magnitude entry (first on ties) is non-negative.
pub fn canonicalize_signs<T: Scalar>(vectors: &mut Mat<T>) {
    for j in 0..vectors.cols() {
        let mut best = 0;
        let mut best_abs = T::neg_infinity();
        for i in 0..vectors.rows() {
            let a = vectors[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vectors[(best, j)] < T::zero() {
            for i in 0..vectors.rows() {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the subdiagonal and `v` the accumulated transform.
fn tred2<T: Scalar>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL on the tridiagonal form produced by [`tred2`].
fn tql2<T: Scalar>(v: &mut Mat<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let max_iter = 64 * n.max(8);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * hk;
                        v[(k, i)] = c * vk - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}
