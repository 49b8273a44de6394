//! Dense 4×4 complex-Hermitian eigensolver and helpers.
//!
//! Cyclic complex Jacobi: each sweep phase-aligns and rotates away every
//! off-diagonal pair. For the well-conditioned 4×4 matrices produced by the
//! gate pipeline this converges to machine precision in a handful of sweeps,
//! which is why no external linear-algebra backend is pulled in.

#![allow(clippy::needless_range_loop)] // explicit (i, j) indexing reads best here

use num_complex::Complex64;

pub type Mat4 = [[Complex64; 4]; 4];

pub fn zero_mat() -> Mat4 {
    [[Complex64::new(0.0, 0.0); 4]; 4]
}

pub fn identity_mat() -> Mat4 {
    let mut m = zero_mat();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = zero_mat();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn adjoint(a: &Mat4) -> Mat4 {
    let mut out = zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn mat_trace(a: &Mat4) -> Complex64 {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

fn off_diagonal_norm_sqr(a: &Mat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += a[i][j].norm_sqr();
            }
        }
    }
    s
}

/// Eigen-decomposition of a Hermitian 4×4 matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as the columns of
/// the returned matrix, so `A = V·diag(λ)·V†`. Eigenvalues are unsorted.
/// Only the Hermitian part of the input is consulted.
pub fn hermitian_eigen(a: &Mat4) -> ([f64; 4], Mat4) {
    let mut m = *a;
    // Work on the exact Hermitian part so tiny asymmetries cannot drift.
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = 0.5 * (m[i][j] + m[j][i].conj());
            m[i][j] = avg;
            m[j][i] = avg.conj();
        }
        m[i][i] = Complex64::new(m[i][i].re, 0.0);
    }

    let scale: f64 = (0..4).map(|i| m[i][i].re.abs()).sum::<f64>().max(1e-300);
    let tol = (scale * 1e-15).powi(2);
    let mut v = identity_mat();

    for _sweep in 0..60 {
        if off_diagonal_norm_sqr(&m) <= tol {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = m[p][q];
                let r = apq.norm();
                if r <= scale * 1e-18 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary on the (p,q) plane:
                //   U[p][p] = c, U[p][q] = s, U[q][p] = −s·e^{−iφ}, U[q][q] = c·e^{−iφ}.
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -s * phase.conj();
                let uqq = c * phase.conj();

                // Columns: A ← A·U on columns p, q.
                for i in 0..4 {
                    let aip = m[i][p];
                    let aiq = m[i][q];
                    m[i][p] = aip * upp + aiq * uqp;
                    m[i][q] = aip * upq + aiq * uqq;
                }
                // Rows: A ← U†·A on rows p, q.
                for j in 0..4 {
                    let apj = m[p][j];
                    let aqj = m[q][j];
                    m[p][j] = upp.conj() * apj + uqp.conj() * aqj;
                    m[q][j] = upq.conj() * apj + uqq.conj() * aqj;
                }
                // Exact zeros on the eliminated pair.
                m[p][q] = Complex64::new(0.0, 0.0);
                m[q][p] = Complex64::new(0.0, 0.0);
                m[p][p] = Complex64::new(m[p][p].re, 0.0);
                m[q][q] = Complex64::new(m[q][q].re, 0.0);

                // Accumulate eigenvectors: V ← V·U.
                for i in 0..4 {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = vip * upp + viq * uqp;
                    v[i][q] = vip * upq + viq * uqq;
                }
            }
        }
    }

    let vals = [m[0][0].re, m[1][1].re, m[2][2].re, m[3][3].re];
    (vals, v)
}

/// Eigenvalues only, sorted descending.
pub fn hermitian_eigenvalues(a: &Mat4) -> [f64; 4] {
    let (mut vals, _) = hermitian_eigen(a);
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    vals
}

/// Matrix square root of a positive-semidefinite Hermitian matrix; negative
/// eigenvalue dust is clamped to zero.
pub fn sqrt_psd(a: &Mat4) -> Mat4 {
    let (vals, v) = hermitian_eigen(a);
    let mut d = zero_mat();
    for (i, &lambda) in vals.iter().enumerate() {
        d[i][i] = Complex64::new(lambda.max(0.0).sqrt(), 0.0);
    }
    mat_mul(&mat_mul(&v, &d), &adjoint(&v))
}
