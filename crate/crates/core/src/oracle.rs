//! Ground truth for the finite prediction problem: exact autocovariances and a block
//! Levinson-Whittle recursion on the block Toeplitz normal equations.

use serde::Serialize;

use crate::engine::PredictorSolution;
use crate::error::{Error, Result};
use crate::fractional::gamma_d_autocov_seq;
use crate::linalg::{hermitian_inv_sqrt, hermitian_sqrt, herm_part, inverse, norm2, CMat, C64};
use crate::model::FarimaModel;
use crate::rational::factor::coefficients_from_samples;

/// Γ(0..=L) with Γ(k) = ∫ e^{−ikθ} w(e^{iθ}) dθ/2π; negative lags follow from Γ(−k) = Γ(k)*.
#[derive(Debug, Clone, Serialize)]
pub struct AutocovSeq {
    pub q: usize,
    #[serde(serialize_with = "crate::report::ser_mats")]
    pub lags: Vec<CMat>,
    /// Largest Laurent coefficient of g g* left out of the convolution.
    pub tail: f64,
    pub method: &'static str,
}

impl AutocovSeq {
    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    /// Γ(k) for any integer k within ±L.
    pub fn get(&self, k: i64) -> CMat {
        if k >= 0 {
            self.lags[k as usize].clone()
        } else {
            self.lags[(-k) as usize].adjoint()
        }
    }
}

/// Γ(k) = Σ_m γ_d(k − m) G_m with G_m the Laurent coefficients of g g*.
pub fn autocov(model: &FarimaModel, l: usize) -> Result<AutocovSeq> {
    let grid = &model.fwd.grid;
    let n = grid.len();
    let density: Vec<CMat> = grid.iter().map(|g| g * g.adjoint()).collect();
    let coeffs = coefficients_from_samples(&density);
    let at = |m: i64| &coeffs[m.rem_euclid(n as i64) as usize];
    let norms: Vec<f64> = (0..n as i64 / 2).map(|m| norm2(at(m)).max(norm2(at(-m)))).collect();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    let width = norms.iter().rposition(|&x| x > 1e-15 * peak).unwrap_or(0);
    let tail = norms.get(width + 1..).map_or(0.0, |t| t.iter().cloned().fold(0.0, f64::max));
    if width + 8 >= n / 2 {
        return Err(Error::Truncation(format!(
            "g g* Laurent coefficients have not decayed within the grid of {n} points"
        )));
    }
    let w = width as i64;
    let gamma = gamma_d_autocov_seq(model.d, l + width).values;
    let gd = |k: i64| gamma[k.unsigned_abs() as usize];
    let lags = (0..=l as i64)
        .map(|k| {
            let mut acc = CMat::zeros(model.q, model.q);
            for m in -w..=w {
                acc += at(m) * C64::new(gd(k - m), 0.0);
            }
            acc
        })
        .collect::<Vec<_>>();
    let mut lags = lags;
    lags[0] = herm_part(&lags[0]);
    Ok(AutocovSeq {
        q: model.q,
        lags,
        tail,
        method: "fractional autocovariance convolved with Laurent coefficients of g g*",
    })
}

/// Forward and backward predictors for every order 0..=n.
#[derive(Debug, Clone, Serialize)]
pub struct LevinsonHistory {
    pub solutions: Vec<PredictorSolution>,
}

impl LevinsonHistory {
    pub fn at(&self, n: usize) -> &PredictorSolution {
        &self.solutions[n]
    }
}

/// Block Levinson-Whittle recursion up to order n.
pub fn block_levinson(acov: &AutocovSeq, n: usize) -> Result<LevinsonHistory> {
    if n > acov.max_lag() {
        return Err(Error::InvalidInput(format!(
            "order {n} exceeds the autocovariance window {}",
            acov.max_lag()
        )));
    }
    let q = acov.q;
    let g0 = acov.get(0);
    let mut phi: Vec<CMat> = Vec::new();
    let mut phi_t: Vec<CMat> = Vec::new();
    let mut v = g0.clone();
    let mut vt = g0.clone();
    let mut out = vec![PredictorSolution::order_zero(q, g0.clone())];
    // Δ_m = Γ(m) − Σ_{j<m} φ_{m−1,j} Γ(m − j)
    let delta_at = |m: usize, phi: &[CMat]| {
        let mut delta = acov.get(m as i64);
        for (j, p) in phi.iter().enumerate() {
            delta -= p * acov.get((m - j - 1) as i64);
        }
        delta
    };
    for m in 1..=n {
        let delta = delta_at(m, &phi);
        let vt_inv = inverse(&vt, &format!("backward innovation at order {m}"))?;
        let v_inv = inverse(&v, &format!("forward innovation at order {m}"))?;
        let a = &delta * &vt_inv;
        let at = delta.adjoint() * &v_inv;
        let alpha = hermitian_inv_sqrt(&v).map_err(|e| step_error(e, m))?
            * &delta
            * hermitian_inv_sqrt(&vt).map_err(|e| step_error(e, m))?;
        let mut new_phi = Vec::with_capacity(m);
        let mut new_phi_t = Vec::with_capacity(m);
        for j in 1..m {
            new_phi.push(&phi[j - 1] - &a * &phi_t[m - j - 1]);
            new_phi_t.push(&phi_t[j - 1] - &at * &phi[m - j - 1]);
        }
        new_phi.push(a.clone());
        new_phi_t.push(at.clone());
        let v_new = herm_part(&(&v - &a * delta.adjoint()));
        let vt_new = herm_part(&(&vt - &at * &delta));
        out[m - 1].cross_cov = delta.clone();
        let prev_v = v;
        let prev_vt = vt;
        phi = new_phi;
        phi_t = new_phi_t;
        v = v_new;
        vt = vt_new;
        // α_m = v_{m−1}^{−1/2} φ_{m,m} ṽ_{m−1}^{1/2} coincides with the symmetric form above.
        debug_assert!({
            let alt = hermitian_inv_sqrt(&prev_v).unwrap() * &a * hermitian_sqrt(&prev_vt).unwrap();
            norm2(&(alt - &alpha)) <= 1e-8 * (1.0 + norm2(&alpha))
        });
        out.push(PredictorSolution {
            n: m,
            phi: phi.clone(),
            phi_tilde: phi_t.clone(),
            v: v.clone(),
            v_tilde: vt.clone(),
            phi_nn: a,
            phi_tilde_nn: at,
            alpha,
            cross_cov: CMat::zeros(q, q),
            diagnostics: None,
        });
    }
    if n < acov.max_lag() {
        out[n].cross_cov = delta_at(n + 1, &phi);
    }
    Ok(LevinsonHistory { solutions: out })
}

fn step_error(e: Error, m: usize) -> Error {
    match e {
        Error::Singular { context, smallest } => Error::Singular {
            context: format!("{context} at Levinson step {m}"),
            smallest,
        },
        other => other,
    }
}

/// α_n from the oracle recursion.
pub fn oracle_pacf(acov: &AutocovSeq, n: usize) -> Result<CMat> {
    if n == 0 {
        return Err(Error::InvalidInput("the partial autocorrelation starts at n = 1".into()));
    }
    Ok(block_levinson(acov, n)?.at(n).alpha.clone())
}

/// Dense solve of the order-n normal equations, for small n.
pub fn dense_solve(acov: &AutocovSeq, n: usize) -> Result<PredictorSolution> {
    if n == 0 || n > acov.max_lag() {
        return Err(Error::InvalidInput(format!("dense solve needs 1 ≤ n ≤ {}", acov.max_lag())));
    }
    let q = acov.q;
    let dim = n * q;
    // Σ_j φ_j Γ(i − j) = Γ(i) and Σ_j φ̃_j Γ(j − i) = Γ(−i), i = 1..n
    let mut t_fwd = CMat::zeros(dim, dim);
    let mut t_bwd = CMat::zeros(dim, dim);
    let mut r_fwd = CMat::zeros(q, dim);
    let mut r_bwd = CMat::zeros(q, dim);
    for j in 1..=n {
        for i in 1..=n {
            let gf = acov.get(i as i64 - j as i64);
            let gb = acov.get(j as i64 - i as i64);
            for r in 0..q {
                for c in 0..q {
                    t_fwd[((j - 1) * q + r, (i - 1) * q + c)] = gf[(r, c)];
                    t_bwd[((j - 1) * q + r, (i - 1) * q + c)] = gb[(r, c)];
                }
            }
        }
        let a = acov.get(j as i64);
        let b = acov.get(-(j as i64));
        for r in 0..q {
            for c in 0..q {
                r_fwd[(r, (j - 1) * q + c)] = a[(r, c)];
                r_bwd[(r, (j - 1) * q + c)] = b[(r, c)];
            }
        }
    }
    let solve = |t: CMat, rhs: CMat| -> Result<CMat> {
        // X T = R  ⇔  Tᵀ Xᵀ = Rᵀ
        let lu = t.transpose().lu();
        lu.solve(&rhs.transpose())
            .map(|x| x.transpose())
            .ok_or_else(|| Error::Singular {
                context: "dense block Toeplitz system".into(),
                smallest: 0.0,
            })
    };
    let xf = solve(t_fwd, r_fwd)?;
    let xb = solve(t_bwd, r_bwd)?;
    let blocks = |x: &CMat| -> Vec<CMat> { (0..n).map(|j| x.columns(j * q, q).into_owned()).collect() };
    let phi = blocks(&xf);
    let phi_t = blocks(&xb);
    let g0 = acov.get(0);
    let mut v = g0.clone();
    let mut vt = g0.clone();
    for j in 1..=n {
        v -= &phi[j - 1] * acov.get(j as i64).adjoint();
        vt -= &phi_t[j - 1] * acov.get(j as i64);
    }
    let phi_nn = phi[n - 1].clone();
    let phi_tilde_nn = phi_t[n - 1].clone();
    Ok(PredictorSolution {
        n,
        phi,
        phi_tilde: phi_t,
        v: herm_part(&v),
        v_tilde: herm_part(&vt),
        phi_nn,
        phi_tilde_nn,
        alpha: CMat::zeros(q, q),
        cross_cov: CMat::zeros(q, q),
        diagnostics: None,
    })
}
