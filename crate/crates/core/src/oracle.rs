//! Independent reference routes used only by tests.
//!
//! Nothing here shares code with the production eigensolver or kernel
//! estimator: eigenvalues come from characteristic-polynomial root finding,
//! eigenvectors from Gaussian-elimination nullspaces of the doubled real
//! system, and the fan envelope from the closed-form arc geometry.

use alloc::vec;
use alloc::vec::Vec;

use crate::affinity::NormalizedAffinity;
use crate::linalg::Mat;
use crate::spectral::{apply_min_size, ClusterLabels, ClusterParams, Complex64};

/// Coefficients `c[0] + c[1] x + ... + c[n-1] x^(n-1) + x^n` of the
/// characteristic polynomial, via the Faddeev-LeVerrier recurrence.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let n = a.n_rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Mat::zeros(n, n); // M_0 = 0
    let mut c = 1.0; // c_n = 1
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += a[(i, l)] * m[(l, j)];
                }
                next[(i, j)] = acc;
            }
            next[(i, i)] += c;
        }
        // c_{n-k} = -tr(A M_k) / k
        let mut tr = 0.0;
        for i in 0..n {
            for l in 0..n {
                tr += a[(i, l)] * next[(l, i)];
            }
        }
        c = -tr / k as f64;
        coeffs[n - k] = c;
        m = next;
    }
    coeffs
}

fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    // Horner in complex arithmetic; coeffs are low-to-high with monic top.
    let mut re = 0.0;
    let mut im = 0.0;
    for &c in coeffs.iter().rev() {
        let nre = re * z.re - im * z.im + c;
        let nim = re * z.im + im * z.re;
        re = nre;
        im = nim;
    }
    Complex64::new(re, im)
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return vec![];
    }
    // Standard initialization on a non-real spiral.
    let mut roots: Vec<Complex64> = Vec::with_capacity(n);
    let (mut zr, mut zi) = (1.0, 0.0);
    for _ in 0..n {
        let (nr, ni) = (zr * 0.4 - zi * 0.9, zr * 0.9 + zi * 0.4);
        zr = nr;
        zi = ni;
        roots.push(Complex64::new(zr, zi));
    }
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let p = poly_eval(coeffs, roots[i]);
            // Denominator: product over j != i of (z_i - z_j).
            let (mut dr, mut di) = (1.0, 0.0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (er, ei) = (roots[i].re - roots[j].re, roots[i].im - roots[j].im);
                let (nr, ni) = (dr * er - di * ei, dr * ei + di * er);
                dr = nr;
                di = ni;
            }
            let denom = dr * dr + di * di;
            if denom == 0.0 {
                continue;
            }
            let sr = (p.re * dr + p.im * di) / denom;
            let si = (p.im * dr - p.re * di) / denom;
            roots[i] = Complex64::new(roots[i].re - sr, roots[i].im - si);
            max_step = max_step.max(libm::hypot(sr, si));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

/// Eigenvalues as characteristic-polynomial roots.
pub fn eigenvalues_by_char_poly(a: &Mat) -> Vec<Complex64> {
    durand_kerner(&char_poly(a))
}

/// Greedy multiset match: for every left value find the closest unused right
/// value; returns the largest pairing distance.
pub fn multiset_distance(left: &[Complex64], right: &[Complex64]) -> f64 {
    assert_eq!(left.len(), right.len());
    let mut used = vec![false; right.len()];
    let mut worst = 0.0f64;
    for l in left {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, r) in right.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = libm::hypot(l.re - r.re, l.im - r.im);
            if d < best {
                best = d;
                best_j = j;
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// One nullspace vector of a square matrix via Gaussian elimination with
/// partial pivoting; the most rank-deficient column becomes the free
/// variable.
pub fn nullspace_vector(m: &Mat) -> Vec<f64> {
    let n = m.n_rows();
    let mut a = m.clone();
    let mut pivot_of_col = vec![usize::MAX; n];
    let mut row = 0;
    for col in 0..n {
        // Partial pivot.
        let mut best = row;
        for r in (row + 1)..n {
            if libm::fabs(a[(r, col)]) > libm::fabs(a[(best, col)]) {
                best = r;
            }
        }
        if row >= n || libm::fabs(a[(best, col)]) < 1e-9 {
            continue; // free column
        }
        if best != row {
            for c in 0..n {
                let tmp = a[(row, c)];
                a[(row, c)] = a[(best, c)];
                a[(best, c)] = tmp;
            }
        }
        let piv = a[(row, col)];
        for r in 0..n {
            if r == row {
                continue;
            }
            let factor = a[(r, col)] / piv;
            if factor != 0.0 {
                for c in 0..n {
                    a[(r, c)] -= factor * a[(row, c)];
                }
            }
        }
        pivot_of_col[col] = row;
        row += 1;
    }
    // Pick the first free column, set it to 1, back out the pivots.
    let free = (0..n).find(|&c| pivot_of_col[c] == usize::MAX).expect("matrix has no nullspace");
    let mut x = vec![0.0; n];
    x[free] = 1.0;
    for col in 0..n {
        let r = pivot_of_col[col];
        if r != usize::MAX {
            x[col] = -a[(r, free)] / a[(r, col)];
        }
    }
    x
}

/// Cluster a directed normalized affinity through the explicit doubled real
/// system: eigenvalues from the characteristic polynomial, for each
/// eigenvalue `x + i y` a real nullspace vector of
/// `diag(P, P) - [[x, y], [-y, x]] (x) I`, clustering strength `|lambda|^2`
/// and argmax over the reconstructed, phase-fixed `u+` columns.
pub fn doubled_system_cluster(p: &NormalizedAffinity, params: &ClusterParams) -> ClusterLabels {
    let n = p.n();
    let mut lambdas = eigenvalues_by_char_poly(p.mat());
    // Order exactly like the production eigensystem sort.
    lambdas.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let threshold = libm::pow(1.0 - params.epsilon, 1.0 / params.tau as f64);
    let q = lambdas.iter().take_while(|l| l.abs_sq() > threshold).count();
    if q == 0 {
        return ClusterLabels::background(n);
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(q);
    for lambda in &lambdas[..q] {
        // T = diag(P, P) - Sigma_lambda, Sigma_lambda = [[x, y], [-y, x]] (x) I_n.
        let mut t = Mat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                t[(i, j)] = p.get(i, j);
                t[(n + i, n + j)] = p.get(i, j);
            }
            t[(i, i)] -= lambda.re;
            t[(i, n + i)] -= lambda.im;
            t[(n + i, i)] += lambda.im;
            t[(n + i, n + i)] -= lambda.re;
        }
        let v = nullspace_vector(&t);
        // v = (u+, u-): recover u = p + i q, fix phase like production code,
        // and re-form u+.
        let mut ur: Vec<f64> = (0..n).map(|i| 0.5 * (v[i] + v[n + i])).collect();
        let mut ui: Vec<f64> = (0..n).map(|i| 0.5 * (v[i] - v[n + i])).collect();
        let mut best = 0;
        let mut best_mod = -1.0;
        for i in 0..n {
            let m = ur[i] * ur[i] + ui[i] * ui[i];
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        let norm_all = libm::sqrt(ur.iter().chain(&ui).map(|x| x * x).sum());
        let amp = libm::sqrt(best_mod);
        let (cr, ci) = (ur[best] / amp, -ui[best] / amp);
        for i in 0..n {
            let (re, im) = (ur[i], ui[i]);
            ur[i] = (re * cr - im * ci) / norm_all;
            ui[i] = (re * ci + im * cr) / norm_all;
        }
        columns.push((0..n).map(|i| ur[i] + ui[i]).collect());
    }

    let pre: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (j, col) in columns.iter().enumerate() {
                if col[i] > best_val {
                    best_val = col[i];
                    best = j;
                }
            }
            best
        })
        .collect();
    apply_min_size(&pre, params.min_size)
}

/// Does the point lie on some horizontal curve from the origin (initial
/// tangent `+y`) with constant turning rate `|c| <= c_max` and arc length
/// `s <= s_max`? Closed form: the circle through the origin tangent to `+y`
/// passing through `(x, y)` has curvature `c = -2x / (x^2 + y^2)`.
pub fn fan_envelope_contains(x: f64, y: f64, c_max: f64, s_max: f64) -> bool {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return true;
    }
    let c = -2.0 * x / r2;
    if libm::fabs(c) > c_max * (1.0 + 1e-12) {
        return false;
    }
    if libm::fabs(c) < 1e-12 {
        return y >= 0.0 && y <= s_max;
    }
    let ang = libm::atan2(c * y, 1.0 + c * x);
    // Forward traversal: the turned angle has the sign of c.
    if ang * c < 0.0 && libm::fabs(ang) > 1e-12 {
        return false;
    }
    let s = libm::fabs(ang / c);
    s <= s_max
}
