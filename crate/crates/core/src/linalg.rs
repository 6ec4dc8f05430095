//! Small dense complex matrices stored row-major in flat slices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn zeros(len: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); len]
}

pub fn identity(n: usize) -> Vec<Complex64> {
    let mut m = zeros(n * n);
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// `out += a · b` with `a` of shape `n×k` and `b` of shape `k×m`.
#[inline]
pub fn mul_acc(out: &mut [Complex64], a: &[Complex64], b: &[Complex64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            for j in 0..m {
                out[i * m + j] += ail * b[l * m + j];
            }
        }
    }
}

pub fn mul(a: &[Complex64], b: &[Complex64], n: usize, k: usize, m: usize) -> Vec<Complex64> {
    let mut out = zeros(n * m);
    mul_acc(&mut out, a, b, n, k, m);
    out
}

/// Conjugate transpose of a `rows×cols` matrix.
pub fn adjoint(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = zeros(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j].conj();
        }
    }
    out
}

pub fn trace(a: &[Complex64], n: usize) -> Complex64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Largest entry modulus.
pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest `|a_ij − conj(a_ji)|`.
pub fn hermitian_defect(a: &[Complex64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[i * n + j] - a[j * n + i].conj()).norm());
        }
    }
    worst
}

pub fn to_dmatrix(a: &[Complex64], rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(rows, cols, a)
}

pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Matrix exponential.
pub fn expm(a: &[Complex64], n: usize) -> Vec<Complex64> {
    if n == 1 {
        return vec![a[0].exp()];
    }
    from_dmatrix(&to_dmatrix(a, n, n).exp())
}

/// Inverse of a well-conditioned matrix, `None` if singular.
pub fn inverse(a: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    if n == 1 {
        return (a[0].norm() > 0.0).then(|| vec![a[0].inv()]);
    }
    to_dmatrix(a, n, n).try_inverse().map(|m| from_dmatrix(&m))
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &[Complex64], n: usize) -> Vec<f64> {
    let m = to_dmatrix(a, n, n);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn singular_values(a: &[Complex64], n: usize) -> Vec<f64> {
    to_dmatrix(a, n, n).singular_values().iter().copied().collect()
}

/// Solves `x · u = phi` for `x` by LU factorisation of `uᵀ`.
pub fn solve_right(phi: &[Complex64], u: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    if n == 1 {
        return (u[0].norm() > 0.0).then(|| vec![phi[0] / u[0]]);
    }
    let ut = to_dmatrix(u, n, n).transpose();
    let rhs = to_dmatrix(phi, n, n).transpose();
    let x = ut.lu().solve(&rhs)?;
    Some(from_dmatrix(&x.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn products_and_adjoints() {
        let a = [c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 2.0)];
        let b = [c(0.5, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(-1.0, 0.0)];
        let ab = mul(&a, &b, 2, 2, 2);
        let bh_ah = mul(&adjoint(&b, 2, 2), &adjoint(&a, 2, 2), 2, 2, 2);
        let abh = adjoint(&ab, 2, 2);
        assert!(max_abs(&sub(&abh, &bh_ah)) < 1e-15);
        assert_eq!(trace(&identity(3), 3), c(3.0, 0.0));
    }

    #[test]
    fn right_solve_inverts_multiplication() {
        let u = [c(1.0, 0.2), c(0.3, -0.1), c(-0.4, 0.0), c(0.9, 0.5)];
        let x = [c(0.1, 0.7), c(-2.0, 0.0), c(0.0, 1.0), c(1.5, -0.5)];
        let phi = mul(&x, &u, 2, 2, 2);
        let back = solve_right(&phi, &u, 2).unwrap();
        assert!(max_abs(&sub(&back, &x)) < 1e-14);
    }

    #[test]
    fn exponential_of_hermitian_generator_is_unitary() {
        let w = [c(10.0, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(9.0, 0.0)];
        let e = expm(&scale(&w, c(0.0, -0.01)), 2);
        let ee = mul(&e, &adjoint(&e, 2, 2), 2, 2, 2);
        assert!(max_abs(&sub(&ee, &identity(2))) < 1e-14);
        let ev = hermitian_eigenvalues(&w, 2);
        assert!((ev.iter().sum::<f64>() - 19.0).abs() < 1e-12);
    }
}
