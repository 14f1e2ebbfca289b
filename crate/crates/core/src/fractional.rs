//! Exact quantities of the univariate fractional noise FARIMA(0,d,0).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Fractional differencing order, −1/2 < d < 1/2, d ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(d: f64) -> Result<Self> {
        if !d.is_finite() || d <= -0.5 || d >= 0.5 || d == 0.0 {
            return Err(Error::InvalidInput(format!(
                "differencing order d = {d} must lie in (-1/2, 1/2) and be nonzero"
            )));
        }
        Ok(FracOrder(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when |1/2 − |d|| < 1e-3; the series constants become very large there.
    pub fn near_boundary(self) -> bool {
        (0.5 - self.0.abs()) < 1e-3
    }

    /// sin(πd)/π, the scale of the scalar phase coefficients.
    pub fn sigma(self) -> f64 {
        (PI * self.0).sin() / PI
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(d: f64) -> Result<Self> {
        FracOrder::new(d)
    }
}

impl From<FracOrder> for f64 {
    fn from(d: FracOrder) -> f64 {
        d.0
    }
}

/// A finite run of reals starting at index `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSeq {
    pub values: Vec<f64>,
    pub offset: i64,
}

impl ScalarSeq {
    pub fn get(&self, k: i64) -> Option<f64> {
        let i = k - self.offset;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// ρ_n = sin(πd)/(π(n−d)).
pub fn rho(d: FracOrder, n: i64) -> f64 {
    rho_at(d, n as f64)
}

/// ρ extended to a real argument.
pub fn rho_at(d: FracOrder, y: f64) -> f64 {
    d.sigma() / (y - d.0)
}

/// Taylor coefficients C_0..C_K of (1−z)^{−d}.
pub fn frac_binomial(d: f64, k_max: usize) -> ScalarSeq {
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(1.0);
    for k in 1..=k_max {
        let prev = values[k - 1];
        values.push(prev * (k as f64 - 1.0 + d) / k as f64);
    }
    ScalarSeq { values, offset: 0 }
}

/// Γ(x+a)/Γ(x+b) for x ≥ 0 with x+a, x+b > 0, stable for any size of x.
pub fn gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    const SHIFT: f64 = 30.0;
    let mut prefactor = 1.0;
    let mut y = x;
    if y < SHIFT {
        let m = (SHIFT - y).ceil() as usize;
        for i in 0..m {
            let t = y + i as f64;
            prefactor *= (t + b) / (t + a);
        }
        y += m as f64;
    }
    prefactor * stirling_ratio(y, a, b)
}

fn stirling_series(z: f64) -> f64 {
    let z2 = z * z;
    let inv = 1.0 / z;
    let inv2 = 1.0 / z2;
    inv * (1.0 / 12.0
        + inv2 * (-1.0 / 360.0 + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 / 1188.0))))
}

fn stirling_ratio(x: f64, a: f64, b: f64) -> f64 {
    let lr = (a - b) * x.ln() + (x + a - 0.5) * (a / x).ln_1p() - (x + b - 0.5) * (b / x).ln_1p()
        - (a - b)
        + stirling_series(x + a)
        - stirling_series(x + b);
    lr.exp()
}

/// Coefficient of z^x in (1−z)^{−δ}, i.e. Γ(x+δ)/(Γ(δ)Γ(x+1)), for real x ≥ 0.
pub fn frac_binomial_at(delta: f64, x: f64) -> f64 {
    gamma_ratio(x, delta, 1.0) * inv_gamma(delta)
}

/// 1/Γ(x), using reflection for negative non-integer arguments.
pub fn inv_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        (PI * x).sin() * gamma(1.0 - x) / PI
    } else {
        1.0 / gamma(x)
    }
}

/// ∫_0^1 t^{p−1}/(1 + z t) dt for p > 0 and −1/2 ≤ z ≤ 3, i.e. ∫_X^∞ (x/X)^{−p}/(x + c) dx with z = c/X.
pub fn power_tail_pole(p: f64, z: f64) -> f64 {
    assert!(p > 0.0 && (-0.5..=3.0).contains(&z), "power_tail_pole outside its range: p={p}, z={z}");
    // (1+z)^{−1} 2F1(1, 1; p+1; z/(1+z)) / p, with |z/(1+z)| ≤ 3/4
    let w = z / (1.0 + z);
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..400 {
        term *= w * m as f64 / (p + m as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (p * (1.0 + z))
}

/// Closed-form one-step prediction error variance Γ(n+1−2d)Γ(n+1)/Γ(n+1−d)².
pub fn u_n(d: FracOrder, n: usize) -> f64 {
    let d = d.0;
    let mut u = gamma(1.0 - 2.0 * d) / gamma(1.0 - d).powi(2);
    for k in 1..=n {
        let k = k as f64;
        u *= k * (k - 2.0 * d) / ((k - d) * (k - d));
    }
    u
}

/// u_0..u_n by the same recurrence.
pub fn u_seq(d: FracOrder, n: usize) -> ScalarSeq {
    let dv = d.0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(gamma(1.0 - 2.0 * dv) / gamma(1.0 - dv).powi(2));
    for k in 1..=n {
        let kf = k as f64;
        let prev = values[k - 1];
        values.push(prev * kf * (kf - 2.0 * dv) / ((kf - dv) * (kf - dv)));
    }
    ScalarSeq { values, offset: 0 }
}

/// u_0·∏_{k≤n}(1−ψ_{k,k}²), the Durbin-Levinson product form.
pub fn u_n_product(d: FracOrder, n: usize) -> f64 {
    let mut u = gamma(1.0 - 2.0 * d.0) / gamma(1.0 - d.0).powi(2);
    for k in 1..=n {
        let p = psi_nn(d, k);
        u *= 1.0 - p * p;
    }
    u
}

/// Partial autocorrelation d/(n−d) of fractional noise.
pub fn psi_nn(d: FracOrder, n: usize) -> f64 {
    d.0 / (n as f64 - d.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Odd: τ_1, τ_3, …, τ_{2K−1} with Σ τ_{2k+1}x^{2k+1} = arcsin(x)/π.
/// Even: τ_2, …, τ_{2K} with Σ τ_{2k}x^{2k} = (arcsin(x)/π)².
pub fn tau_coeffs(parity: Parity, k: usize) -> ScalarSeq {
    let mut odd = Vec::with_capacity(k);
    let mut c = 1.0;
    for i in 0..k {
        if i > 0 {
            let m = i as f64;
            c *= (2.0 * m - 1.0).powi(2) / ((2.0 * m) * (2.0 * m + 1.0));
        }
        odd.push(c / PI);
    }
    match parity {
        Parity::Odd => ScalarSeq { values: odd, offset: 1 },
        Parity::Even => {
            let even = (1..=k)
                .map(|m| (0..m).map(|i| odd[i] * odd[m - 1 - i]).sum())
                .collect();
            ScalarSeq { values: even, offset: 2 }
        }
    }
}

/// τ_1..τ_kmax interleaved (index k holds τ_k; index 0 is unused and zero).
pub fn tau_all(kmax: usize) -> Vec<f64> {
    let half = kmax / 2 + 1;
    let odd = tau_coeffs(Parity::Odd, half);
    let even = tau_coeffs(Parity::Even, half);
    let mut out = vec![0.0; kmax + 1];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = if k % 2 == 1 {
            odd.values[(k - 1) / 2]
        } else {
            even.values[k / 2 - 1]
        };
    }
    out
}

/// k-th Fourier coefficient of |1−e^{iθ}|^{−2d}.
pub fn gamma_d_autocov(d: FracOrder, k: i64) -> f64 {
    let dv = d.0;
    let mut g = gamma(1.0 - 2.0 * dv) / gamma(1.0 - dv).powi(2);
    for m in 1..=k.unsigned_abs() {
        let m = m as f64;
        g *= (m - 1.0 + dv) / (m - dv);
    }
    g
}

/// γ_d(0)..γ_d(L).
pub fn gamma_d_autocov_seq(d: FracOrder, l: usize) -> ScalarSeq {
    let dv = d.0;
    let mut values = Vec::with_capacity(l + 1);
    values.push(gamma(1.0 - 2.0 * dv) / gamma(1.0 - dv).powi(2));
    for m in 1..=l {
        let mf = m as f64;
        let prev = values[m - 1];
        values.push(prev * ((mf - 1.0 + dv) / (mf - dv)));
    }
    ScalarSeq { values, offset: 0 }
}
