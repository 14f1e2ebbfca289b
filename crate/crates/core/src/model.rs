//! The q-variate FARIMA model: spectral factors, phase-ratio coefficients and the
//! MA, AR and infinite-predictor coefficient sequences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::{frac_binomial, frac_binomial_at, inv_gamma, FracOrder};
use crate::linalg::{inverse, norm2, CMat, C64};
use crate::rational::factor::{phase_ratio_from_grids, sample_standard};
use crate::rational::{
    convolve, invert_series, spectral_factorize_with, CoeffSeq, FactorOptions, RationalMatrix, SpectralFactor,
};

/// Build options.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelOptions {
    pub factor: FactorOptions,
    /// Half-width of the phase-ratio Laurent window.
    pub window: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            factor: FactorOptions::default(),
            window: 512,
        }
    }
}

/// One spectral factor with grid samples at θ_m = 2πm/N and power series of it and its inverse.
#[derive(Debug, Clone)]
pub struct SideFactor {
    pub grid: Vec<CMat>,
    pub coeffs: CoeffSeq,
    pub inv_coeffs: CoeffSeq,
}

impl SideFactor {
    fn new(grid: Vec<CMat>, coeffs: CoeffSeq) -> Result<Self> {
        let coeffs = trim_power(&coeffs);
        let cap = grid.len() / 2;
        let inv_coeffs = decayed_inverse(&coeffs, cap)?;
        Ok(SideFactor {
            grid,
            coeffs,
            inv_coeffs,
        })
    }

    /// Value at z = 1.
    pub fn at_one(&self) -> &CMat {
        &self.grid[0]
    }

    /// Index beyond which the series of the inverse is below 1e-13 relative.
    pub fn inverse_support(&self) -> usize {
        effective_support(&self.inv_coeffs.coeffs, 1e-13)
    }
}

fn effective_support(c: &[CMat], rel: f64) -> usize {
    let norms: Vec<f64> = c.iter().map(norm2).collect();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    norms.iter().rposition(|&x| x > rel * peak).unwrap_or(0)
}

fn trim_power(c: &CoeffSeq) -> CoeffSeq {
    let last = effective_support(&c.coeffs, 1e-15);
    let dropped = c.coeffs[last + 1..].iter().map(norm2).fold(0.0, f64::max);
    CoeffSeq {
        q: c.q,
        offset: 0,
        coeffs: c.coeffs[..=last].to_vec(),
        tail_norm: c.tail_norm.max(dropped),
    }
}

/// Inverse series computed until it has decayed below 1e-14 relative for 16 consecutive terms.
fn decayed_inverse(c: &CoeffSeq, cap: usize) -> Result<CoeffSeq> {
    let mut k = 64.min(cap);
    loop {
        let (inv, _) = invert_series(c, k)?;
        let norms: Vec<f64> = inv.coeffs.iter().map(norm2).collect();
        let peak = norms.iter().cloned().fold(0.0, f64::max);
        let quiet = norms.len() > 16 && norms[norms.len() - 16..].iter().all(|&x| x <= 1e-14 * peak);
        if quiet {
            return Ok(trim_power(&inv));
        }
        if k >= cap {
            return Err(Error::Truncation(format!(
                "inverse factor series has not decayed after {k} terms"
            )));
        }
        k = (2 * k).min(cap);
    }
}

/// A q-variate FARIMA model with spectral density |1−e^{iθ}|^{−2d} g(e^{iθ}) g(e^{iθ})*.
#[derive(Debug, Clone)]
pub struct FarimaModel {
    pub d: FracOrder,
    pub q: usize,
    /// The rational g when the model was built from one.
    pub g: Option<RationalMatrix>,
    /// Forward factor g.
    pub fwd: SideFactor,
    /// Backward factor g̃.
    pub bwd: SideFactor,
    /// Factorization diagnostics when g̃ was computed here.
    pub factor: Option<SpectralFactor>,
    /// Laurent coefficients of G(z)g_♯(z)^{−1}, trimmed to their numerical support.
    pub s: CoeffSeq,
    pub u: CMat,
    pub c0: CMat,
    pub c0_tilde: CMat,
}

impl FarimaModel {
    pub fn new(d: f64, g: RationalMatrix, opts: &ModelOptions) -> Result<Self> {
        let d = FracOrder::new(d)?;
        g.require_condition_c()?;
        let mut fopts = opts.factor;
        loop {
            let factor = spectral_factorize_with(&g, &fopts)?;
            let n = factor.n();
            let fwd_grid = sample_standard(&g, n)?;
            let fwd_coeffs = g.taylor_coeffs(n / 4)?;
            let fwd = SideFactor::new(fwd_grid, fwd_coeffs)?;
            let bwd = SideFactor::new(factor.grid.to_standard(), factor.coeffs.clone())?;
            match Self::assemble(d, fwd, bwd, opts.window, fopts.tol) {
                Ok(mut m) => {
                    m.g = Some(g);
                    m.factor = Some(factor);
                    return Ok(m);
                }
                Err(Error::Truncation(_)) if n < fopts.max_grid => {
                    fopts.grid = 2 * n;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn assemble(d: FracOrder, fwd: SideFactor, bwd: SideFactor, window: usize, tol: f64) -> Result<Self> {
        let n = fwd.grid.len();
        let w = window.min(n / 2 - 1);
        let s = phase_ratio_from_grids(&fwd.grid, &bwd.grid, w, tol.max(1e-14))?.trimmed(1e-15);
        let q = fwd.coeffs.q;
        let sharp_one = bwd.at_one().adjoint();
        let u = fwd.at_one().adjoint() * inverse(&sharp_one, "g_sharp(1)")?;
        let c0 = fwd.coeffs.coeffs[0].clone();
        let c0_tilde = bwd.coeffs.coeffs[0].clone();
        inverse(&c0, "c0")?;
        inverse(&c0_tilde, "c0_tilde")?;
        Ok(FarimaModel {
            d,
            q,
            g: None,
            fwd,
            bwd,
            factor: None,
            s,
            u,
            c0,
            c0_tilde,
        })
    }

    /// Scalar fractional noise, g ≡ 1.
    pub fn fractional_noise(d: f64) -> Result<Self> {
        Self::new(d, RationalMatrix::identity(1), &ModelOptions {
            factor: FactorOptions {
                grid: 1 << 10,
                ..FactorOptions::default()
            },
            ..ModelOptions::default()
        })
    }

    /// The time-reversed model: forward and backward factors exchanged.
    pub fn reversed(&self) -> Result<Self> {
        let tol = self.factor.as_ref().map_or(1e-10, |f| f.residual.max(1e-12));
        let w = (self.fwd.grid.len() / 2 - 1).min(512);
        Self::assemble(self.d, self.bwd.clone(), self.fwd.clone(), w, tol.max(1e-10))
    }

    pub fn dv(&self) -> f64 {
        self.d.value()
    }

    /// v_∞ = c_0 c_0*.
    pub fn v_inf(&self) -> CMat {
        &self.c0 * self.c0.adjoint()
    }

    /// ṽ_∞ = c̃_0 c̃_0*.
    pub fn v_tilde_inf(&self) -> CMat {
        &self.c0_tilde * self.c0_tilde.adjoint()
    }

    /// Largest index at which the phase ratio or the inverse factors are still significant.
    pub fn smooth_offset(&self) -> usize {
        let s_hi = self.s.last_index().max(0) as usize;
        s_hi.max(self.fwd.inverse_support()).max(self.bwd.inverse_support())
    }

    pub fn ma_coeffs(&self, k: usize) -> CoeffSeq {
        ma_from(&self.fwd, self.dv(), k)
    }

    pub fn ma_coeffs_backward(&self, k: usize) -> CoeffSeq {
        ma_from(&self.bwd, self.dv(), k)
    }

    pub fn ar_coeffs(&self, k: usize) -> CoeffSeq {
        ar_from(&self.fwd, self.dv(), k)
    }

    pub fn ar_coeffs_backward(&self, k: usize) -> CoeffSeq {
        ar_from(&self.bwd, self.dv(), k)
    }

    /// (φ_1..φ_K, φ̃_1..φ̃_K) with φ_k = c_0 a_k and φ̃_k = c̃_0 ã_k.
    pub fn infinite_predictor_coeffs(&self, k: usize) -> (CoeffSeq, CoeffSeq) {
        let a = self.ar_coeffs(k);
        let at = self.ar_coeffs_backward(k);
        let mk = |c0: &CMat, seq: &CoeffSeq| CoeffSeq {
            q: self.q,
            offset: 1,
            coeffs: seq.coeffs[1..].iter().map(|x| c0 * x).collect(),
            tail_norm: 0.0,
        };
        (mk(&self.c0, &a), mk(&self.c0_tilde, &at))
    }

    /// max_{k≤K} ‖Σ_{j≤k} c_j a_{k−j} + δ_{k0} I‖ over both directions: the MA and AR series invert each other.
    pub fn series_inverse_defect(&self, k: usize) -> f64 {
        let id = CMat::identity(self.q, self.q);
        let one = |c: CoeffSeq, a: CoeffSeq| {
            let prod = convolve(&c, &a, k);
            prod.coeffs
                .iter()
                .enumerate()
                .map(|(i, m)| if i == 0 { norm2(&(m + &id)) } else { norm2(m) })
                .fold(0.0, f64::max)
        };
        one(self.ma_coeffs(k), self.ar_coeffs(k)).max(one(self.ma_coeffs_backward(k), self.ar_coeffs_backward(k)))
    }

    /// Limit of n^{1+d} a_n, namely −Γ(−d)^{−1} g(1)^{−1}, and its backward analogue.
    pub fn ar_limits(&self) -> Result<(CMat, CMat)> {
        let ig = C64::new(-inv_gamma(-self.dv()), 0.0);
        let f = inverse(self.fwd.at_one(), "g(1)")? * ig;
        let b = inverse(self.bwd.at_one(), "g_tilde(1)")? * ig;
        Ok((f, b))
    }

    /// n·‖n^{1+d}a_n + Γ(−d)^{−1}g(1)^{−1}‖ and the backward analogue, per n.
    pub fn ar_asymptotics_check(&self, n_list: &[usize]) -> Result<Vec<ArAsymptoticsRow>> {
        let kmax = n_list.iter().cloned().max().unwrap_or(0);
        let a = self.ar_coeffs(kmax);
        let at = self.ar_coeffs_backward(kmax);
        let (la, lat) = self.ar_limits()?;
        let d = self.dv();
        Ok(n_list
            .iter()
            .map(|&n| {
                let nf = n as f64;
                let scale = C64::new(nf.powf(1.0 + d), 0.0);
                ArAsymptoticsRow {
                    n,
                    forward: nf * norm2(&(&a.coeffs[n] * scale - &la)),
                    backward: nf * norm2(&(&at.coeffs[n] * scale - &lat)),
                }
            })
            .collect())
    }

    /// Σ_{j>n}‖φ_j‖ split into the computed part up to `phi`'s last index and an
    /// asymptotic remainder from the limit law of the AR coefficients.
    pub fn phi_tail_sum(&self, phi: &CoeffSeq, n: usize, backward: bool) -> Result<TailSum> {
        let d = self.dv();
        if d <= 0.0 {
            return Err(Error::InvalidInput(
                "the predictor tail sum needs 0 < d < 1/2".into(),
            ));
        }
        let k = phi.last_index().max(0) as usize;
        let mut partial = 0.0;
        for j in n + 1..=k {
            partial += norm2(phi.get(j as i64).expect("index inside sequence"));
        }
        let (la, lat) = self.ar_limits()?;
        let l = if backward {
            norm2(&(&self.c0_tilde * lat))
        } else {
            norm2(&(&self.c0 * la))
        };
        let remainder = l * hurwitz_tail(1.0 + d, k.max(n));
        Ok(TailSum {
            n,
            partial,
            remainder,
            total: partial + remainder,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArAsymptoticsRow {
    pub n: usize,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailSum {
    pub n: usize,
    pub partial: f64,
    pub remainder: f64,
    pub total: f64,
}

/// Σ_{j>K} j^{−s} by Euler-Maclaurin.
fn hurwitz_tail(s: f64, k: usize) -> f64 {
    let k = k as f64;
    k.powf(1.0 - s) / (s - 1.0) - 0.5 * k.powf(-s) + s * k.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * k.powf(-s - 3.0) / 720.0
}

fn ma_from(side: &SideFactor, d: f64, k: usize) -> CoeffSeq {
    let c = frac_binomial(d, k).values;
    let q = side.coeffs.q;
    let coeffs = (0..=k)
        .map(|m| {
            let mut acc = CMat::zeros(q, q);
            for (j, gj) in side.coeffs.coeffs.iter().enumerate().take(m + 1) {
                acc += gj * C64::new(c[m - j], 0.0);
            }
            acc
        })
        .collect();
    CoeffSeq::power(q, coeffs)
}

fn ar_from(side: &SideFactor, d: f64, k: usize) -> CoeffSeq {
    let p = frac_binomial(-d, k).values;
    let q = side.coeffs.q;
    let coeffs = (0..=k)
        .map(|m| {
            let mut acc = CMat::zeros(q, q);
            for (j, gj) in side.inv_coeffs.coeffs.iter().enumerate().take(m + 1) {
                acc -= gj * C64::new(p[m - j], 0.0);
            }
            acc
        })
        .collect();
    CoeffSeq::power(q, coeffs)
}

/// Values a(m + x) of the analytic continuation of the AR coefficients, for m = 1..=count,
/// at a real offset x > support of the inverse series; row-major q×q blocks.
pub(crate) fn ar_shifted(side: &SideFactor, d: f64, x: f64, count: usize) -> Vec<C64> {
    let q = side.coeffs.q;
    let inv = &side.inv_coeffs.coeffs;
    let jmax = inv.len() - 1;
    // π(y) for y = x + t, t = 1 − jmax ..= count
    let t0 = 1i64 - jmax as i64;
    let len = (count as i64 - t0 + 1) as usize;
    let mut pi = Vec::with_capacity(len);
    let mut y = x + t0 as f64;
    let mut v = frac_binomial_at(-d, y);
    for _ in 0..len {
        pi.push(v);
        // π(y+1) = π(y)·(y − d)/(y + 1)
        v *= (y - d) / (y + 1.0);
        y += 1.0;
    }
    let mut out = vec![C64::new(0.0, 0.0); count * q * q];
    for m in 1..=count {
        let block = &mut out[(m - 1) * q * q..m * q * q];
        for (j, gj) in inv.iter().enumerate() {
            let w = pi[(m as i64 - j as i64 - t0) as usize];
            for r in 0..q {
                for c in 0..q {
                    block[r * q + c] -= gj[(r, c)] * w;
                }
            }
        }
    }
    out
}
