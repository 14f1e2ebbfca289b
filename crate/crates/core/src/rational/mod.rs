//! q×q matrices of complex rational functions, their series and spectral factors.

pub(crate) mod factor;
mod series;

pub use factor::{
    laurent_phase_ratio, spectral_factorize, spectral_factorize_with, FactorOptions, MatrixGridSamples, SpectralFactor,
};
pub use series::{convolve, invert_series, CoeffSeq};

pub use crate::linalg::{hermitian_inv_sqrt, hermitian_sqrt};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{poly_eval, poly_roots, trim_poly, CMat, C64};

/// Boundary tolerance for "in the closed unit disk".
pub const DISK_TOL: f64 = 1e-9;

/// One entry num(z)/den(z), coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalEntry {
    pub num: Vec<C64>,
    #[serde(default = "one_poly")]
    pub den: Vec<C64>,
}

fn one_poly() -> Vec<C64> {
    vec![C64::new(1.0, 0.0)]
}

impl RationalEntry {
    pub fn constant(c: C64) -> Self {
        RationalEntry {
            num: vec![c],
            den: one_poly(),
        }
    }

    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Self {
        RationalEntry { num, den }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let den = poly_eval(&self.den, z);
        if den.norm() < 1e-14 {
            return Err(Error::PoleAtPoint(z));
        }
        Ok(poly_eval(&self.num, z) / den)
    }

    fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.norm() == 0.0)
    }
}

#[derive(Debug, Deserialize)]
struct RawRational {
    q: usize,
    entries: Vec<RationalEntry>,
}

/// A q×q rational matrix function, entries stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRational")]
pub struct RationalMatrix {
    pub q: usize,
    pub entries: Vec<RationalEntry>,
}

impl TryFrom<RawRational> for RationalMatrix {
    type Error = Error;
    fn try_from(raw: RawRational) -> Result<Self> {
        RationalMatrix::new(raw.q, raw.entries)
    }
}

/// Outcome of the admissibility check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// Denominator roots with modulus ≤ 1 + DISK_TOL, as (row, col, root).
    pub poles_in_disk: Vec<(usize, usize, C64)>,
    /// Zeros of the determinant with modulus ≤ 1 + DISK_TOL.
    pub det_zeros_in_disk: Vec<C64>,
    /// Degree of the cleared determinant polynomial.
    pub det_degree: usize,
    pub passes: bool,
}

impl ConditionReport {
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (i, j, r) in &self.poles_in_disk {
            parts.push(format!("entry ({i},{j}) has a pole at {r} (|z| = {:.6})", r.norm()));
        }
        for r in &self.det_zeros_in_disk {
            parts.push(format!("det has a zero at {r} (|z| = {:.6})", r.norm()));
        }
        parts.join("; ")
    }
}

impl RationalMatrix {
    pub fn new(q: usize, entries: Vec<RationalEntry>) -> Result<Self> {
        if q == 0 || entries.len() != q * q {
            return Err(Error::InvalidInput(format!(
                "rational matrix of dimension {q} needs {} entries, got {}",
                q * q,
                entries.len()
            )));
        }
        for (k, e) in entries.iter().enumerate() {
            let finite = e.num.iter().chain(&e.den).all(|c| c.re.is_finite() && c.im.is_finite());
            if !finite || e.num.is_empty() || e.den.is_empty() {
                return Err(Error::InvalidInput(format!("entry {k} has empty or non-finite coefficients")));
            }
            if e.den.iter().all(|c| c.norm() == 0.0) {
                return Err(Error::InvalidInput(format!("entry {k} has a zero denominator")));
            }
        }
        Ok(RationalMatrix { q, entries })
    }

    pub fn identity(q: usize) -> Self {
        Self::constant(&CMat::identity(q, q))
    }

    /// The 2×2 lower-triangular g(z) = [[1, 0], [1/(1 − cz), 1]], admissible for |c| < 1.
    pub fn lower_geometric(c: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        RationalMatrix {
            q: 2,
            entries: vec![
                RationalEntry::constant(one),
                RationalEntry::constant(zero),
                RationalEntry::new(vec![one], vec![one, -c]),
                RationalEntry::constant(one),
            ],
        }
    }

    pub fn constant(m: &CMat) -> Self {
        let q = m.nrows();
        let entries = (0..q * q).map(|k| RationalEntry::constant(m[(k / q, k % q)])).collect();
        RationalMatrix { q, entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> &RationalEntry {
        &self.entries[i * self.q + j]
    }

    /// Entrywise evaluation at z.
    pub fn eval(&self, z: C64) -> Result<CMat> {
        let q = self.q;
        let mut m = CMat::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] = self.entry(i, j).eval(z)?;
            }
        }
        Ok(m)
    }

    /// Checks that no entry has a pole and det has no zero in the closed unit disk.
    pub fn check_condition_c(&self) -> Result<ConditionReport> {
        let q = self.q;
        let mut poles = Vec::new();
        for i in 0..q {
            for j in 0..q {
                for r in poly_roots(&self.entry(i, j).den) {
                    if r.norm() <= 1.0 + DISK_TOL {
                        poles.push((i, j, r));
                    }
                }
            }
        }
        let det = self.det_polynomial()?;
        let det_zeros: Vec<C64> = poly_roots(&det)
            .into_iter()
            .filter(|r| r.norm() <= 1.0 + DISK_TOL)
            .collect();
        let passes = poles.is_empty() && det_zeros.is_empty();
        Ok(ConditionReport {
            poles_in_disk: poles,
            det_zeros_in_disk: det_zeros,
            det_degree: det.len() - 1,
            passes,
        })
    }

    /// Like `check_condition_c` but turns a failing report into an error.
    pub fn require_condition_c(&self) -> Result<ConditionReport> {
        let rep = self.check_condition_c()?;
        if !rep.passes {
            return Err(Error::NotAdmissible(rep.describe()));
        }
        Ok(rep)
    }

    /// Coefficients of det(M(z)) where row i of M is row i of the matrix times
    /// the product of that row's denominators.
    fn det_polynomial(&self) -> Result<Vec<C64>> {
        let q = self.q;
        let mut degree = 0usize;
        for i in 0..q {
            let den_total: usize = (0..q).map(|j| trim_poly(&self.entry(i, j).den).len() - 1).sum();
            let row_max = (0..q)
                .map(|j| {
                    let e = self.entry(i, j);
                    trim_poly(&e.num).len() - 1 + den_total - (trim_poly(&e.den).len() - 1)
                })
                .max()
                .unwrap_or(0);
            degree += row_max;
        }
        let m = (degree + 1).next_power_of_two().max(8);
        let mut values = Vec::with_capacity(m);
        let mut scale: f64 = 0.0;
        for k in 0..m {
            let z = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let mut mat = CMat::zeros(q, q);
            for i in 0..q {
                for j in 0..q {
                    let mut v = poly_eval(&self.entry(i, j).num, z);
                    for jj in 0..q {
                        if jj != j {
                            v *= poly_eval(&self.entry(i, jj).den, z);
                        }
                    }
                    mat[(i, j)] = v;
                }
            }
            let row_scale: f64 = (0..q)
                .map(|i| (0..q).map(|j| mat[(i, j)].norm()).fold(0.0, f64::max))
                .product();
            scale = scale.max(row_scale);
            values.push(mat.determinant());
        }
        let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if self.entries.iter().all(|e| e.is_zero()) || peak <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotAdmissible("determinant vanishes identically".into()));
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut values);
        let coeffs: Vec<C64> = values.iter().map(|v| v / m as f64).collect();
        // drop interpolation noise, then trailing zeros
        let cleaned: Vec<C64> = coeffs
            .iter()
            .map(|c| if c.norm() <= 1e-13 * peak { C64::new(0.0, 0.0) } else { *c })
            .collect();
        Ok(trim_poly(&cleaned[..=degree.min(m - 1)]))
    }

    /// First K+1 power series coefficients.
    pub fn taylor_coeffs(&self, k: usize) -> Result<CoeffSeq> {
        let q = self.q;
        for i in 0..q {
            for j in 0..q {
                if poly_roots(&self.entry(i, j).den).iter().any(|r| r.norm() <= 1.0 + DISK_TOL) {
                    return Err(Error::NotAdmissible(format!(
                        "entry ({i},{j}) has a pole in the closed unit disk"
                    )));
                }
            }
        }
        let mut coeffs = vec![CMat::zeros(q, q); k + 1];
        for i in 0..q {
            for j in 0..q {
                let e = self.entry(i, j);
                for (m, t) in entry_series(&e.num, &e.den, k).into_iter().enumerate() {
                    coeffs[m][(i, j)] = t;
                }
            }
        }
        Ok(CoeffSeq::power(q, coeffs))
    }
}

/// Series of num/den by den_0 t_k = num_k − Σ_{i≥1} den_i t_{k−i}.
fn entry_series(num: &[C64], den: &[C64], k: usize) -> Vec<C64> {
    let zero = C64::new(0.0, 0.0);
    let mut t = vec![zero; k + 1];
    for m in 0..=k {
        let mut acc = num.get(m).copied().unwrap_or(zero);
        for i in 1..den.len().min(m + 1) {
            acc -= den[i] * t[m - i];
        }
        t[m] = acc / den[0];
    }
    t
}
