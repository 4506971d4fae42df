//! Dense row-major matrices and the eigensolvers built on them.
//!
//! The solvers are ports of the classic Algol/EISPACK routines (tred2/tql2
//! for the symmetric path, orthes/hqr2 for the general real path), which
//! compute the full spectrum with eigenvectors. Complex conjugate pairs of
//! the general solver are returned as consecutive (real, imaginary) column
//! pairs, eigenvalue with positive imaginary part first.

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Mat { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rows * n_cols);
        Mat { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|&x| x * x).sum())
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(out.len(), self.n_rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n_cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n_cols + j]
    }
}

const EPS: f64 = 2.220_446_049_250_313e-16;

/// Eigendecomposition of a symmetric matrix: `a = V diag(d) V^T` with
/// orthonormal columns, eigenvalues ascending.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

pub fn sym_eigen(a: &Mat) -> SymEigen {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols());
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return SymEigen { values: vec![a[(0, 0)]], vectors: Mat::identity(1) };
    }
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    SymEigen { values: d, vectors: v }
}

// Householder reduction to tridiagonal form (Algol tred2, EISPACK).
fn tred2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow.
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += libm::fabs(*item);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            // Generate Householder vector.
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply similarity transformation to remaining columns.
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
            f = 0.0;
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
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Symmetric tridiagonal QL algorithm (Algol tql2, EISPACK).
fn tql2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        // Find small subdiagonal element.
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= EPS * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            loop {
                // Compute implicit shift.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // Implicit QL transformation.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if libm::fabs(e[l]) <= EPS * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort eigenvalues ascending, permuting vectors alongside.
    for i in 0..(n - 1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                let tmp = v[(j, i)];
                v[(j, i)] = v[(j, k)];
                v[(j, k)] = tmp;
            }
        }
    }
}

/// Eigendecomposition of a general real matrix. `re`/`im` hold the
/// eigenvalue parts in reduction order; complex pairs are adjacent with the
/// positive-imaginary member first. For a real eigenvalue at index `i`,
/// column `i` of `vectors` is its eigenvector; for a complex pair at
/// `(i, i+1)`, the eigenvector of `re[i] + i*im[i]` is
/// `column(i) + i * column(i+1)` and its conjugate pairs with the conjugate
/// eigenvalue.
pub struct RealEigen {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub vectors: Mat,
}

pub fn general_eigen(a: &Mat) -> Result<RealEigen> {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols());
    if n == 1 {
        return Ok(RealEigen { re: vec![a[(0, 0)]], im: vec![0.0], vectors: Mat::identity(1) });
    }
    let mut h = a.clone();
    let mut v = Mat::identity(n);
    orthes(&mut h, &mut v);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    hqr2(&mut h, &mut v, &mut re, &mut im)?;
    Ok(RealEigen { re, im, vectors: v })
}

// Householder reduction of a general matrix to Hessenberg form, with the
// orthogonal transform accumulated into `v` (Algol orthes/ortran, EISPACK).
fn orthes(h: &mut Mat, v: &mut Mat) {
    let n = h.n_rows();
    let low = 0usize;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        // Scale column below the subdiagonal.
        let mut scale = 0.0;
        for i in m..=high {
            scale += libm::fabs(h[(i, m - 1)]);
        }
        if scale != 0.0 {
            // Compute Householder transformation.
            let mut hsum = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[(i, m - 1)] / scale;
                hsum += ort[i] * ort[i];
            }
            let mut g = libm::sqrt(hsum);
            if ort[m] > 0.0 {
                g = -g;
            }
            hsum -= ort[m] * g;
            ort[m] -= g;

            // Apply Householder similarity transformation.
            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[(i, j)];
                }
                f /= hsum;
                for i in m..=high {
                    h[(i, j)] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[(i, j)];
                }
                f /= hsum;
                for j in m..=high {
                    h[(i, j)] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[(m, m - 1)] = scale * g;
        }
    }

    // Accumulate transformations.
    for m in ((low + 1)..high).rev() {
        if h[(m, m - 1)] != 0.0 {
            for i in (m + 1)..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                // Double division avoids possible underflow.
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    v[(i, j)] += g * ort[i];
                }
            }
        }
    }
}

// Complex scalar division.
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if libm::fabs(yr) > libm::fabs(yi) {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

// Reduction from Hessenberg to real Schur form with eigenvector
// back-substitution (Algol hqr2, EISPACK). Indices follow the original
// signed-loop structure.
#[allow(clippy::too_many_lines)]
fn hqr2(hm: &mut Mat, vm: &mut Mat, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let nn = d.len() as i64;
    let mut n = nn - 1;
    let low: i64 = 0;
    let high: i64 = nn - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t, mut w, mut x, mut y);

    macro_rules! h {
        ($i:expr, $j:expr) => {
            hm[($i as usize, $j as usize)]
        };
    }
    macro_rules! v {
        ($i:expr, $j:expr) => {
            vm[($i as usize, $j as usize)]
        };
    }

    // Compute matrix norm (no balancing step, so no isolated roots).
    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += libm::fabs(h![i, j]);
        }
    }

    let mut iter = 0i32;
    let mut total_iter = 0i64;
    while n >= low {
        // Look for single small sub-diagonal element.
        let mut l = n;
        while l > low {
            s = libm::fabs(h![l - 1, l - 1]) + libm::fabs(h![l, l]);
            if s == 0.0 {
                s = norm;
            }
            if libm::fabs(h![l, l - 1]) < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h![n, n] += exshift;
            d[n as usize] = h![n, n];
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h![n, n - 1] * h![n - 1, n];
            p = (h![n - 1, n - 1] - h![n, n]) / 2.0;
            q = p * p + w;
            z = libm::sqrt(libm::fabs(q));
            h![n, n] += exshift;
            h![n - 1, n - 1] += exshift;
            x = h![n, n];

            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = 0.0;
                e[n as usize] = 0.0;
                x = h![n, n - 1];
                s = libm::fabs(x) + libm::fabs(z);
                p = x / s;
                q = z / s;
                r = libm::sqrt(p * p + q * q);
                p /= r;
                q /= r;
                for j in (n - 1)..nn {
                    z = h![n - 1, j];
                    h![n - 1, j] = q * z + p * h![n, j];
                    h![n, j] = q * h![n, j] - p * z;
                }
                for i in 0..=n {
                    z = h![i, n - 1];
                    h![i, n - 1] = q * z + p * h![i, n];
                    h![i, n] = q * h![i, n] - p * z;
                }
                for i in low..=high {
                    z = v![i, n - 1];
                    v![i, n - 1] = q * z + p * v![i, n];
                    v![i, n] = q * v![i, n] - p * z;
                }
            } else {
                // Complex pair.
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; form shift.
            x = h![n, n];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h![n - 1, n - 1];
                w = h![n, n - 1] * h![n - 1, n];
            }

            // Wilkinson's original ad hoc shift.
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    h![i, i] -= x;
                }
                s = libm::fabs(h![n, n - 1]) + libm::fabs(h![n - 1, n - 2]);
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }

            // MATLAB's ad hoc shift.
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = libm::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h![i, i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total_iter += 1;
            if iter > 60 || total_iter > 40 * nn {
                return Err(Error::EigenNoConvergence(n as usize));
            }

            // Look for two consecutive small sub-diagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = h![m, m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h![m + 1, m] + h![m, m + 1];
                q = h![m + 1, m + 1] - z - r - s;
                r = h![m + 2, m + 1];
                s = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if libm::fabs(h![m, m - 1]) * (libm::fabs(q) + libm::fabs(r))
                    < EPS
                        * (libm::fabs(p)
                            * (libm::fabs(h![m - 1, m - 1]) + libm::fabs(z) + libm::fabs(h![m + 1, m + 1])))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h![i, i - 2] = 0.0;
                if i > m + 2 {
                    h![i, i - 3] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h![k, k - 1];
                    q = h![k + 1, k - 1];
                    r = if notlast { h![k + 2, k - 1] } else { 0.0 };
                    x = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = libm::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h![k, k - 1] = -s * x;
                    } else if l != m {
                        h![k, k - 1] = -h![k, k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h![k, j] + q * h![k + 1, j];
                        if notlast {
                            p += r * h![k + 2, j];
                            h![k + 2, j] -= p * z;
                        }
                        h![k, j] -= p * x;
                        h![k + 1, j] -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * h![i, k] + y * h![i, k + 1];
                        if notlast {
                            p += z * h![i, k + 2];
                            h![i, k + 2] -= p * r;
                        }
                        h![i, k] -= p;
                        h![i, k + 1] -= p * q;
                    }
                    for i in low..=high {
                        p = x * v![i, k] + y * v![i, k + 1];
                        if notlast {
                            p += z * v![i, k + 2];
                            v![i, k + 2] -= p * r;
                        }
                        v![i, k] -= p;
                        v![i, k + 1] -= p * q;
                    }
                }
            }
        }
    }

    // Backsubstitute to find vectors of the upper triangular form.
    if norm == 0.0 {
        return Ok(());
    }
    for n in (0..nn).rev() {
        p = d[n as usize];
        q = e[n as usize];

        if q == 0.0 {
            // Real vector.
            let mut l = n;
            h![n, n] = 1.0;
            for i in (0..n).rev() {
                w = h![i, i] - p;
                r = 0.0;
                for j in l..=n {
                    r += h![i, j] * h![j, n];
                }
                if e[i as usize] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        if w != 0.0 {
                            h![i, n] = -r / w;
                        } else {
                            h![i, n] = -r / (EPS * norm);
                        }
                    } else {
                        // Solve the 2x2 real block.
                        x = h![i, i + 1];
                        y = h![i + 1, i];
                        q = (d[i as usize] - p) * (d[i as usize] - p) + e[i as usize] * e[i as usize];
                        t = (x * s - z * r) / q;
                        h![i, n] = t;
                        if libm::fabs(x) > libm::fabs(z) {
                            h![i + 1, n] = (-r - w * t) / x;
                        } else {
                            h![i + 1, n] = (-s - y * t) / z;
                        }
                    }

                    // Overflow control.
                    t = libm::fabs(h![i, n]);
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h![j, n] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            // Complex vector (stored in columns n-1 and n).
            let mut l = n - 1;

            if libm::fabs(h![n, n - 1]) > libm::fabs(h![n - 1, n]) {
                h![n - 1, n - 1] = q / h![n, n - 1];
                h![n - 1, n] = -(h![n, n] - p) / h![n, n - 1];
            } else {
                let (cr, ci) = cdiv(0.0, -h![n - 1, n], h![n - 1, n - 1] - p, q);
                h![n - 1, n - 1] = cr;
                h![n - 1, n] = ci;
            }
            h![n, n - 1] = 0.0;
            h![n, n] = 1.0;
            for i in (0..=(n - 2)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h![i, j] * h![j, n - 1];
                    sa += h![i, j] * h![j, n];
                }
                w = h![i, i] - p;

                if e[i as usize] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h![i, n - 1] = cr;
                        h![i, n] = ci;
                    } else {
                        // Solve complex 2x2 block.
                        x = h![i, i + 1];
                        y = h![i + 1, i];
                        let mut vr =
                            (d[i as usize] - p) * (d[i as usize] - p) + e[i as usize] * e[i as usize] - q * q;
                        let vi = (d[i as usize] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS
                                * norm
                                * (libm::fabs(w) + libm::fabs(q) + libm::fabs(x) + libm::fabs(y) + libm::fabs(z));
                        }
                        let (cr, ci) = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h![i, n - 1] = cr;
                        h![i, n] = ci;
                        if libm::fabs(x) > libm::fabs(z) + libm::fabs(q) {
                            h![i + 1, n - 1] = (-ra - w * h![i, n - 1] + q * h![i, n]) / x;
                            h![i + 1, n] = (-sa - w * h![i, n] - q * h![i, n - 1]) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h![i, n - 1], -s - y * h![i, n], z, q);
                            h![i + 1, n - 1] = cr;
                            h![i + 1, n] = ci;
                        }
                    }

                    // Overflow control.
                    t = libm::fabs(h![i, n - 1]).max(libm::fabs(h![i, n]));
                    if (EPS * t) * t > 1.0 {
                        for j in i..=n {
                            h![j, n - 1] /= t;
                            h![j, n] /= t;
                        }
                    }
                }
            }
        }
    }

    // Back transformation to eigenvectors of the original matrix.
    for j in (low..nn).rev() {
        for i in low..=high {
            z = 0.0;
            for k in low..=j.min(high) {
                z += v![i, k] * h![k, j];
            }
            v![i, j] = z;
        }
    }
    Ok(())
}
