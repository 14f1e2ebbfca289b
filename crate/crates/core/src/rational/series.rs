use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cond, inverse, norm2, CMat};

/// A finite run of q×q matrix coefficients starting at index `offset`.
#[derive(Debug, Clone, Serialize)]
pub struct CoeffSeq {
    pub q: usize,
    pub offset: i64,
    #[serde(serialize_with = "crate::report::ser_mats")]
    pub coeffs: Vec<CMat>,
    /// Largest coefficient norm known to lie outside the stored window.
    pub tail_norm: f64,
}

impl CoeffSeq {
    pub fn power(q: usize, coeffs: Vec<CMat>) -> Self {
        CoeffSeq {
            q,
            offset: 0,
            coeffs,
            tail_norm: 0.0,
        }
    }

    pub fn get(&self, k: i64) -> Option<&CMat> {
        let i = k - self.offset;
        if i < 0 {
            return None;
        }
        self.coeffs.get(i as usize)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last stored coefficient.
    pub fn last_index(&self) -> i64 {
        self.offset + self.coeffs.len() as i64 - 1
    }

    /// Sum of all stored coefficients.
    pub fn total(&self) -> CMat {
        self.coeffs
            .iter()
            .fold(CMat::zeros(self.q, self.q), |acc, m| acc + m)
    }

    /// Drops leading and trailing coefficients whose norms are below `rel` times the
    /// largest one, folding the largest dropped norm into `tail_norm`.
    pub fn trimmed(&self, rel: f64) -> CoeffSeq {
        let norms: Vec<f64> = self.coeffs.iter().map(norm2).collect();
        let peak = norms.iter().cloned().fold(0.0, f64::max);
        let keep = |x: &f64| *x > rel * peak;
        let first = norms.iter().position(keep).unwrap_or(0);
        let last = norms.iter().rposition(keep).unwrap_or(0);
        let dropped = norms[..first]
            .iter()
            .chain(&norms[last + 1..])
            .cloned()
            .fold(0.0, f64::max);
        CoeffSeq {
            q: self.q,
            offset: self.offset + first as i64,
            coeffs: self.coeffs[first..=last].to_vec(),
            tail_norm: self.tail_norm.max(dropped),
        }
    }
}

/// Power series product truncated after index K.
pub fn convolve(a: &CoeffSeq, b: &CoeffSeq, k: usize) -> CoeffSeq {
    assert!(a.offset == 0 && b.offset == 0, "convolve expects power series");
    let q = a.q;
    let mut out = vec![CMat::zeros(q, q); k + 1];
    for (m, slot) in out.iter_mut().enumerate() {
        for i in 0..=m.min(a.len().saturating_sub(1)) {
            if m - i < b.len() {
                *slot += &a.coeffs[i] * &b.coeffs[m - i];
            }
        }
    }
    CoeffSeq::power(q, out)
}

/// Coefficients of the multiplicative inverse of a power series, and cond(s_0).
pub fn invert_series(s: &CoeffSeq, k: usize) -> Result<(CoeffSeq, f64)> {
    if s.offset != 0 || s.is_empty() {
        return Err(Error::InvalidInput("invert_series expects a nonempty power series".into()));
    }
    let kappa = cond(&s.coeffs[0]);
    if !kappa.is_finite() || kappa > 1e14 {
        return Err(Error::Singular {
            context: "invert_series: leading coefficient".into(),
            smallest: s.coeffs[0].clone().singular_values().min(),
        });
    }
    let inv0 = inverse(&s.coeffs[0], "invert_series")?;
    let q = s.q;
    let mut t: Vec<CMat> = Vec::with_capacity(k + 1);
    t.push(inv0.clone());
    for m in 1..=k {
        let mut acc = CMat::zeros(q, q);
        for j in 1..=m.min(s.len() - 1) {
            acc += &s.coeffs[j] * &t[m - j];
        }
        t.push(-(&inv0 * acc));
    }
    Ok((CoeffSeq::power(q, t), kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, from_real_rows, max_abs_diff, C64};

    #[test]
    fn inverse_of_identity() {
        let s = CoeffSeq::power(2, vec![eye(2)]);
        let (t, kappa) = invert_series(&s, 3).unwrap();
        assert!(max_abs_diff(&t.coeffs[0], &eye(2)) == 0.0);
        assert!(t.coeffs[1..].iter().all(|m| m.iter().all(|z| z.norm() == 0.0)));
        assert!((kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_geometric() {
        let c = 0.3;
        let s = CoeffSeq::power(1, vec![eye(1), eye(1) * C64::new(-c, 0.0)]);
        let (t, _) = invert_series(&s, 2).unwrap();
        for k in 0..3 {
            assert!((t.coeffs[k][(0, 0)].re - c.powi(k as i32)).abs() < 1e-16);
        }
    }

    #[test]
    fn leading_inverse_and_identity() {
        let s0 = from_real_rows(2, &[1.0, 0.0, 1.0, 1.0]);
        let s1 = from_real_rows(2, &[0.0, 0.0, 0.5, 0.0]);
        let s = CoeffSeq::power(2, vec![s0.clone(), s1]);
        let (t, _) = invert_series(&s, 50).unwrap();
        assert!(max_abs_diff(&t.coeffs[0], &from_real_rows(2, &[1.0, 0.0, -1.0, 1.0])) < 1e-16);
        assert!(max_abs_diff(&(&s0 * &t.coeffs[0]), &eye(2)) < 1e-16);
        let prod = convolve(&s, &t, 50);
        assert!(max_abs_diff(&prod.coeffs[0], &eye(2)) < 1e-14);
        assert!(prod.coeffs[1..].iter().all(|m| m.iter().all(|z| z.norm() < 1e-13)));
    }

    #[test]
    fn singular_leading_rejected() {
        let s = CoeffSeq::power(2, vec![from_real_rows(2, &[1.0, 1.0, 1.0, 1.0])]);
        assert!(invert_series(&s, 2).is_err());
    }

    #[test]
    fn trimming_records_tail() {
        let q = 1;
        let mk = |x: f64| eye(q) * C64::new(x, 0.0);
        let s = CoeffSeq {
            q,
            offset: -2,
            coeffs: vec![mk(1e-20), mk(1.0), mk(0.5), mk(1e-18), mk(0.0)],
            tail_norm: 0.0,
        };
        let t = s.trimmed(1e-16);
        assert_eq!(t.offset, -1);
        assert_eq!(t.len(), 2);
        assert!((t.tail_norm - 1e-18).abs() < 1e-30);
    }
}
