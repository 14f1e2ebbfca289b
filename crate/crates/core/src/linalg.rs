//! Small dense complex matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn zeros(q: usize) -> CMat {
    CMat::zeros(q, q)
}

pub fn eye(q: usize) -> CMat {
    CMat::identity(q, q)
}

/// Builds a q×q matrix from real row-major entries.
pub fn from_real_rows(q: usize, rows: &[f64]) -> CMat {
    CMat::from_fn(q, q, |i, j| C64::new(rows[i * q + j], 0.0))
}

/// Largest singular value.
pub fn norm2(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn singular_values_sorted(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Spectral norm of the anti-Hermitian part.
pub fn asymmetry(m: &CMat) -> f64 {
    norm2(&((m - m.adjoint()) * C64::new(0.5, 0.0)))
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = herm_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_herm_eigenvalue(m: &CMat) -> f64 {
    herm_eigenvalues(m)[0]
}

fn check_hermitian(m: &CMat, what: &str) -> Result<()> {
    let scale = max_abs(m).max(1.0);
    if !m.is_square() || asymmetry(m) > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "{what}: matrix is not Hermitian (asymmetry {:e})",
            if m.is_square() { asymmetry(m) } else { f64::NAN }
        )));
    }
    Ok(())
}

fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let eig = herm_part(m).symmetric_eigen();
    let q = m.nrows();
    let mut out = CMat::zeros(q, q);
    for k in 0..q {
        let v = eig.eigenvectors.column(k);
        let w = C64::new(f(eig.eigenvalues[k]), 0.0);
        out += v * v.adjoint() * w;
    }
    herm_part(&out)
}

/// Principal square root of a Hermitian PSD matrix.
pub fn hermitian_sqrt(m: &CMat) -> Result<CMat> {
    check_hermitian(m, "hermitian_sqrt")?;
    let lo = min_herm_eigenvalue(m);
    if lo < -1e-12 * max_abs(m).max(1.0) {
        return Err(Error::Singular {
            context: "hermitian_sqrt: matrix not PSD".into(),
            smallest: lo,
        });
    }
    Ok(spectral_map(m, |x| x.max(0.0).sqrt()))
}

/// Inverse of the principal square root of a Hermitian PD matrix.
pub fn hermitian_inv_sqrt(m: &CMat) -> Result<CMat> {
    check_hermitian(m, "hermitian_inv_sqrt")?;
    let lo = min_herm_eigenvalue(m);
    if lo <= 1e-300 || lo <= 1e-14 * max_abs(m) {
        return Err(Error::Singular {
            context: "hermitian_inv_sqrt".into(),
            smallest: lo,
        });
    }
    Ok(spectral_map(m, |x| 1.0 / x.sqrt()))
}

pub fn inverse(m: &CMat, context: &str) -> Result<CMat> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: context.to_string(),
        smallest: m.clone().singular_values().min(),
    })
}

/// Condition number in the spectral norm.
pub fn cond(m: &CMat) -> f64 {
    let s = m.clone().singular_values();
    s.max() / s.min()
}

/// Polar factors m = P W with P Hermitian PSD and W unitary.
pub fn polar_left(m: &CMat) -> Result<(CMat, CMat)> {
    let p = hermitian_sqrt(&herm_part(&(m * m.adjoint())))?;
    let w = inverse(&p, "polar decomposition")? * m;
    Ok((p, w))
}

/// Roots of a polynomial with ascending coefficients (companion matrix eigenvalues).
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let c = trim_poly(coeffs);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    if deg == 1 {
        return vec![-c[0] / lead];
    }
    let mut comp = CMat::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::new(comp);
    let (_, t) = schur.unpack();
    (0..deg).map(|i| t[(i, i)]).collect()
}

/// Drops negligible leading coefficients.
pub fn trim_poly(coeffs: &[C64]) -> Vec<C64> {
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut n = coeffs.len();
    while n > 1 && coeffs[n - 1].norm() <= 1e-14 * scale {
        n -= 1;
    }
    coeffs[..n.max(1).min(coeffs.len())].to_vec()
}

pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_diag() {
        let m = from_real_rows(2, &[4.0, 0.0, 0.0, 9.0]);
        let s = hermitian_sqrt(&m).unwrap();
        assert!(max_abs_diff(&s, &from_real_rows(2, &[2.0, 0.0, 0.0, 3.0])) < 1e-14);
        let r = hermitian_inv_sqrt(&m).unwrap();
        assert!((r[(1, 1)].re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_identity_and_reconstruction() {
        assert!(max_abs_diff(&hermitian_sqrt(&eye(3)).unwrap(), &eye(3)) < 1e-15);
        let a = CMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 * 0.3 - 0.5, (i as f64) - j as f64 * 0.7));
        let m = &a * a.adjoint();
        let s = hermitian_sqrt(&m).unwrap();
        assert!(max_abs_diff(&(&s * &s), &m) < 1e-10);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let m = from_real_rows(2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(hermitian_inv_sqrt(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn roots_of_cubic() {
        // (z - 2)(z + 0.5)(z - i)
        let r = [C64::new(2.0, 0.0), C64::new(-0.5, 0.0), C64::new(0.0, 1.0)];
        let mut p = vec![C64::new(1.0, 0.0)];
        for root in r {
            let mut np = vec![C64::new(0.0, 0.0); p.len() + 1];
            for (k, c) in p.iter().enumerate() {
                np[k + 1] += c;
                np[k] -= c * root;
            }
            p = np;
        }
        let found = poly_roots(&p);
        for root in r {
            assert!(found.iter().any(|z| (z - root).norm() < 1e-12));
        }
    }

    #[test]
    fn polar_reconstructs() {
        let m = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        let (p, w) = polar_left(&m).unwrap();
        assert!(max_abs_diff(&(&p * &w), &m) < 1e-13);
        assert!(max_abs_diff(&(&w * w.adjoint()), &eye(2)) < 1e-13);
    }
}
