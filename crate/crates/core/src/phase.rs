//! Phase coefficients β_n = Σ_k ρ_{n−k} s_k and the limit matrices U and V.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::{power_tail_pole, rho, FracOrder};
use crate::linalg::{eye, hermitian_inv_sqrt, inverse, max_abs_diff, norm2, CMat, C64};
use crate::model::FarimaModel;

/// Anything that can produce β at real arguments y ≥ 1.
pub trait PhaseFunction: Sync {
    fn q(&self) -> usize;

    /// Writes β(y) as a row-major q×q block into `out`.
    fn beta_into(&self, y: f64, out: &mut [C64]);

    /// True when β is only defined at integers (the engine then sums lags exactly).
    fn integer_only(&self) -> bool {
        false
    }

    /// sin(π|d|) when known; drives the level-truncation envelope.
    fn contraction(&self) -> Option<f64> {
        None
    }

    /// Constant M with ‖β_n − ρ_n U‖ ≤ M|ρ_n|/n, when known.
    fn delta_constant(&self) -> Option<f64> {
        None
    }

    /// Arguments below this may be near singularities of the continuation.
    fn smooth_from(&self) -> f64 {
        0.0
    }

    /// Writes ∫_X^∞ (x/X)^{−p} β(y0 + x) dx into `out`; false when the continuation is unavailable.
    fn tail_integral(&self, _y0: f64, _x_end: f64, _p: f64, _out: &mut [C64]) -> bool {
        false
    }

    /// Exponent p with Σ-level lag profiles decaying like x^{−p}, when known.
    fn tail_exponent(&self) -> Option<f64> {
        None
    }

    fn beta(&self, y: f64) -> CMat {
        let q = self.q();
        let mut buf = vec![C64::new(0.0, 0.0); q * q];
        self.beta_into(y, &mut buf);
        CMat::from_row_slice(q, q, &buf)
    }
}

/// β of a FARIMA model, continued to real arguments by β(y) = (sin πd/π) Σ_k s_k/(y − k − d).
#[derive(Debug, Clone)]
pub struct FarimaPhase {
    pub d: FracOrder,
    q: usize,
    sigma: f64,
    /// k + d for each stored s_k
    shifts: Vec<f64>,
    /// s_k as row-major blocks
    s_flat: Vec<C64>,
    m_hat: Option<f64>,
    smooth: f64,
}

impl FarimaPhase {
    pub fn new(model: &FarimaModel) -> Self {
        let q = model.q;
        let d = model.d;
        let mut shifts = Vec::new();
        let mut s_flat = Vec::new();
        for (i, m) in model.s.coeffs.iter().enumerate() {
            let k = model.s.offset + i as i64;
            shifts.push(k as f64 + d.value());
            for r in 0..q {
                for c in 0..q {
                    s_flat.push(m[(r, c)]);
                }
            }
        }
        let smooth = model.s.last_index().max(0) as f64 + 1.0;
        let mut p = FarimaPhase {
            d,
            q,
            sigma: d.sigma(),
            shifts,
            s_flat,
            m_hat: None,
            smooth,
        };
        let ns: Vec<usize> = (1..=64).chain([96, 128, 192, 256, 512, 1024]).collect();
        p.m_hat = delta_diagnostics_with(&p, &model.u, &ns).ok().map(|d| d.m_hat);
        p
    }

    pub fn d(&self) -> f64 {
        self.d.value()
    }
}

impl PhaseFunction for FarimaPhase {
    fn q(&self) -> usize {
        self.q
    }

    fn beta_into(&self, y: f64, out: &mut [C64]) {
        let qq = self.q * self.q;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (idx, &shift) in self.shifts.iter().enumerate() {
            let w = self.sigma / (y - shift);
            let block = &self.s_flat[idx * qq..(idx + 1) * qq];
            for (o, s) in out.iter_mut().zip(block) {
                *o += s * w;
            }
        }
    }

    fn tail_integral(&self, y0: f64, x_end: f64, p: f64, out: &mut [C64]) -> bool {
        let qq = self.q * self.q;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (idx, &shift) in self.shifts.iter().enumerate() {
            let w = self.sigma * power_tail_pole(p, (y0 - shift) / x_end);
            let block = &self.s_flat[idx * qq..(idx + 1) * qq];
            for (o, s) in out.iter_mut().zip(block) {
                *o += s * w;
            }
        }
        true
    }

    fn tail_exponent(&self) -> Option<f64> {
        Some(1.0 - self.d().abs())
    }

    fn contraction(&self) -> Option<f64> {
        Some((std::f64::consts::PI * self.d().abs()).sin())
    }

    fn delta_constant(&self) -> Option<f64> {
        self.m_hat
    }

    fn smooth_from(&self) -> f64 {
        self.smooth
    }
}

/// A materialized window of β_n, n ∈ [n_min, n_max].
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSeq {
    pub q: usize,
    pub n_min: i64,
    pub n_max: i64,
    #[serde(serialize_with = "crate::report::ser_mats")]
    pub values: Vec<CMat>,
    /// Bound on the per-entry error from the truncated s window.
    pub tail_bound: f64,
}

impl PhaseSeq {
    pub fn get(&self, n: i64) -> Option<&CMat> {
        if n < self.n_min || n > self.n_max {
            return None;
        }
        self.values.get((n - self.n_min) as usize)
    }
}

impl PhaseFunction for PhaseSeq {
    fn q(&self) -> usize {
        self.q
    }

    fn beta_into(&self, y: f64, out: &mut [C64]) {
        let n = y.round() as i64;
        debug_assert!((y - n as f64).abs() < 1e-9, "raw phase sequences are integer-indexed");
        let q = self.q;
        match self.get(n) {
            Some(m) => {
                for r in 0..q {
                    for c in 0..q {
                        out[r * q + c] = m[(r, c)];
                    }
                }
            }
            None => out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0)),
        }
    }

    fn integer_only(&self) -> bool {
        true
    }
}

/// β_n for n in the window by the exact ρ⊛s convolution.
pub fn beta_from_model(model: &FarimaModel, n_min: i64, n_max: i64) -> Result<PhaseSeq> {
    if n_max < n_min {
        return Err(Error::InvalidInput(format!("empty window [{n_min}, {n_max}]")));
    }
    let q = model.q;
    let d = model.d;
    let values = (n_min..=n_max)
        .map(|n| {
            let mut acc = CMat::zeros(q, q);
            for (i, s) in model.s.coeffs.iter().enumerate() {
                let k = model.s.offset + i as i64;
                acc += s * C64::new(rho(d, n - k), 0.0);
            }
            acc
        })
        .collect();
    let rho_max = d.sigma().abs() / d.value().abs().min(1.0 - d.value().abs());
    let dropped_terms = 2.0 * model.s.len() as f64 + 1.0;
    Ok(PhaseSeq {
        q,
        n_min,
        n_max,
        values,
        tail_bound: model.s.tail_norm * rho_max * dropped_terms,
    })
}

/// U = g(1)* g_♯(1)^{−1}, checked for unitarity.
pub fn compute_u(model: &FarimaModel) -> Result<CMat> {
    let u = model.u.clone();
    let dev = max_abs_diff(&(u.adjoint() * &u), &eye(model.q));
    if dev > 1e-8 {
        return Err(Error::Truncation(format!("U is not unitary (deviation {dev:e})")));
    }
    Ok(u)
}

/// V = v_∞^{−1/2} c_0 U (ṽ_∞^{−1/2} c̃_0)*, checked for unitarity.
pub fn compute_v(model: &FarimaModel, v_inf: &CMat, v_tilde_inf: &CMat) -> Result<CMat> {
    let a = hermitian_inv_sqrt(v_inf)? * &model.c0;
    let b = hermitian_inv_sqrt(v_tilde_inf)? * &model.c0_tilde;
    let v = a * &model.u * b.adjoint();
    let dev = max_abs_diff(&(v.adjoint() * &v), &eye(model.q));
    if dev > 1e-8 {
        return Err(Error::Truncation(format!("V is not unitary (deviation {dev:e})")));
    }
    Ok(v)
}

/// max_{|m|≤W/4} ‖Σ_{|j|≤W/2} β_j β_{j+m}* − δ_{0m} I‖: unitarity of the phase function seen through a
/// window of half-width W.
pub fn parseval_defect(model: &FarimaModel, w: usize) -> Result<f64> {
    let half = (w / 2) as i64;
    let quarter = (w / 4) as i64;
    let b = beta_from_model(model, -half - quarter, half + quarter)?;
    let id = eye(model.q);
    let at = |j: i64| b.get(j).expect("index inside window");
    let mut worst: f64 = 0.0;
    for m in -quarter..=quarter {
        let mut acc = CMat::zeros(model.q, model.q);
        for j in -half..=half {
            acc += at(j) * at(j + m).adjoint();
        }
        if m == 0 {
            acc -= &id;
        }
        worst = worst.max(norm2(&acc));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub n: usize,
    /// ‖Δ_n‖ with β_n = ρ_n(I + Δ_n)U
    pub delta: f64,
    /// ‖Δ'_n‖ with β_n = ρ_n U(I + Δ'_n)
    pub delta_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaDiagnostics {
    pub rows: Vec<DeltaRow>,
    /// max_n n·max(‖Δ_n‖, ‖Δ'_n‖)
    pub m_hat: f64,
}

pub fn delta_diagnostics(model: &FarimaModel, n_list: &[usize]) -> Result<DeltaDiagnostics> {
    delta_diagnostics_with(&FarimaPhase::new(model), &model.u, n_list)
}

fn delta_diagnostics_with(p: &FarimaPhase, u: &CMat, n_list: &[usize]) -> Result<DeltaDiagnostics> {
    let u_inv = inverse(u, "U")?;
    let id = eye(p.q);
    let mut rows = Vec::with_capacity(n_list.len());
    let mut m_hat: f64 = 0.0;
    for &n in n_list {
        let r = rho(p.d, n as i64);
        let b = p.beta(n as f64) / C64::new(r, 0.0);
        let delta = norm2(&(&b * &u_inv - &id));
        let delta_prime = norm2(&(&u_inv * &b - &id));
        m_hat = m_hat.max(n as f64 * delta.max(delta_prime));
        rows.push(DeltaRow {
            n,
            delta,
            delta_prime,
        });
    }
    Ok(DeltaDiagnostics { rows, m_hat })
}
