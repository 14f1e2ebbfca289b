//! Finite-past predictors from the Hankel recursions driven by the phase coefficients.
//!
//! Level k of the forward recursion is a row of q×q blocks b^k_{n,j}, j ≥ 0, with
//! b^0 = δ_{0j}I, b^{2k+1}_j = Σ_l b^{2k}_l β_{n+j+l+1} and b^{2k+2}_j = Σ_l b^{2k+1}_l β*_{n+j+l+1};
//! the backward recursion b̃ starts with β* instead. Lag sums run over a `LagQuadrature`: the
//! first lags exactly, the far tail through the real-argument continuation of β.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::tau_all;
use crate::linalg::{asymmetry, herm_part, hermitian_inv_sqrt, hermitian_sqrt, inverse, norm2, CMat, C64};
use crate::model::{ar_shifted, FarimaModel, SideFactor};
use crate::oracle::autocov;
use crate::phase::{compute_v, FarimaPhase, PhaseFunction, PhaseSeq};
use crate::quadrature::{LagQuadrature, QuadOptions};
use crate::rational::CoeffSeq;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EngineOptions {
    /// Target for the level-truncation certificate.
    pub tol: f64,
    /// Hard cap on the number of recursion levels.
    pub max_levels: usize,
    /// Keep every level (not only the j = 0 heads) in the recursion state.
    pub keep_levels: bool,
    /// Overrides the automatically chosen lag quadrature.
    pub quad: Option<QuadOptions>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            tol: 1e-11,
            max_levels: 5000,
            keep_levels: false,
            quad: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Levels computed, K_max + 1.
    pub levels: usize,
    /// Lag nodes, J_max.
    pub nodes: usize,
    pub last_node: f64,
    /// Bound on the level sums left out.
    pub tail_certificate: f64,
    /// Mass carried by the analytic tail beyond the last node (or, without one, the lag mass cut off).
    pub lag_tail: f64,
    /// Whether the τ envelope entered the certificate.
    pub envelope: bool,
}

/// Levels of the forward and backward recursions at one horizon.
#[derive(Debug, Clone)]
pub struct RecursionState {
    pub n: usize,
    pub q: usize,
    pub k_max: usize,
    pub j_max: usize,
    pub nodes: Vec<f64>,
    /// Node weights, the last one halved when a tail model is active.
    pub weights: Vec<f64>,
    /// Analytic lag tail beyond the last node.
    pub tail: Option<TailModel>,
    /// b^k_{n,0} for k = 0..=K_max.
    pub b_heads: Vec<CMat>,
    pub b_tilde_heads: Vec<CMat>,
    /// Every level over the lag nodes, when requested.
    pub b_levels: Option<Vec<Vec<CMat>>>,
    pub b_tilde_levels: Option<Vec<Vec<CMat>>>,
    /// Σ_k b^{2k}, Σ_k b^{2k+1} and the backward analogues, per node.
    pub even: Vec<CMat>,
    pub odd: Vec<CMat>,
    pub even_tilde: Vec<CMat>,
    pub odd_tilde: Vec<CMat>,
    pub tail_certificate: f64,
    pub lag_tail: f64,
    pub envelope: bool,
}

impl RecursionState {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            levels: self.k_max + 1,
            nodes: self.j_max,
            last_node: *self.nodes.last().unwrap_or(&0.0),
            tail_certificate: self.tail_certificate,
            lag_tail: self.lag_tail,
            envelope: self.envelope,
        }
    }
}

/// All order-n predictor quantities.
#[derive(Debug, Clone, Serialize)]
pub struct PredictorSolution {
    pub n: usize,
    /// φ_{n,1..n}
    #[serde(serialize_with = "crate::report::ser_mats")]
    pub phi: Vec<CMat>,
    /// φ̃_{n,1..n}
    #[serde(serialize_with = "crate::report::ser_mats")]
    pub phi_tilde: Vec<CMat>,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub v: CMat,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub v_tilde: CMat,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub phi_nn: CMat,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub phi_tilde_nn: CMat,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub alpha: CMat,
    /// Covariance of the order-n forward and backward errors, Δ_{n+1}; zero when not available.
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub cross_cov: CMat,
    pub diagnostics: Option<Diagnostics>,
}

impl PredictorSolution {
    /// The empty predictor: v_0 = ṽ_0 = Γ(0).
    pub fn order_zero(q: usize, gamma0: CMat) -> Self {
        PredictorSolution {
            n: 0,
            phi: Vec::new(),
            phi_tilde: Vec::new(),
            v: gamma0.clone(),
            v_tilde: gamma0,
            phi_nn: CMat::zeros(q, q),
            phi_tilde_nn: CMat::zeros(q, q),
            alpha: CMat::zeros(q, q),
            cross_cov: CMat::zeros(q, q),
            diagnostics: None,
        }
    }
}

/// j ↦ Σ_{l<J} s_l β_{n+j+l+1} (or β*) for j < J, on a materialized β window.
pub fn hankel_apply(beta: &PhaseSeq, n: usize, s: &CoeffSeq, conjugate: bool, j_max: usize) -> Result<CoeffSeq> {
    let need = n as i64 + 2 * j_max as i64 - 1;
    if beta.n_min > n as i64 + 1 || beta.n_max < need {
        return Err(Error::InvalidInput(format!(
            "β window [{}, {}] does not cover [{}, {need}]",
            beta.n_min,
            beta.n_max,
            n + 1
        )));
    }
    if s.offset != 0 {
        return Err(Error::InvalidInput("hankel_apply expects a sequence starting at lag 0".into()));
    }
    let q = beta.q;
    let out = (0..j_max)
        .map(|j| {
            let mut acc = CMat::zeros(q, q);
            for (l, sl) in s.coeffs.iter().enumerate().take(j_max) {
                let b = beta.get((n + j + l + 1) as i64).expect("inside window");
                if conjugate {
                    acc += sl * b.adjoint();
                } else {
                    acc += sl * b;
                }
            }
            acc
        })
        .collect();
    let dropped = s.coeffs.len().saturating_sub(j_max);
    let tail = if dropped > 0 {
        s.coeffs[j_max..].iter().map(norm2).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(CoeffSeq {
        q,
        offset: 0,
        coeffs: out,
        tail_norm: tail,
    })
}

/// q×dim row of blocks, row-major.
struct Row {
    q: usize,
    dim: usize,
    data: Vec<C64>,
}

impl Row {
    fn zeros(q: usize, dim: usize) -> Self {
        Row {
            q,
            dim,
            data: vec![ZERO; q * dim],
        }
    }

    fn delta(q: usize, dim: usize) -> Self {
        let mut r = Row::zeros(q, dim);
        for i in 0..q {
            r.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        r
    }

    fn block(&self, l: usize) -> CMat {
        let q = self.q;
        CMat::from_fn(q, q, |r, c| self.data[r * self.dim + l * q + c])
    }

    fn blocks(&self) -> Vec<CMat> {
        (0..self.dim / self.q).map(|l| self.block(l)).collect()
    }

    fn add(&mut self, other: &Row) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Largest block Frobenius norm.
    fn size(&self) -> f64 {
        let q = self.q;
        (0..self.dim / q)
            .map(|l| {
                let mut s = 0.0;
                for r in 0..q {
                    for c in 0..q {
                        s += self.data[r * self.dim + l * q + c].norm_sqr();
                    }
                }
                s
            })
            .fold(0.0, f64::max)
            .sqrt()
    }

    fn times(&self, k: &[C64]) -> Row {
        let dim = self.dim;
        let mut out = Row::zeros(self.q, dim);
        for r in 0..self.q {
            let src = &self.data[r * dim..(r + 1) * dim];
            let dst = &mut out.data[r * dim..(r + 1) * dim];
            for (m, &x) in src.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let krow = &k[m * dim..(m + 1) * dim];
                for (o, &kk) in dst.iter_mut().zip(krow) {
                    *o += x * kk;
                }
            }
        }
        out
    }
}

/// Lag rule actually used: node weights, with an analytic tail E(x) ≈ E(X)(x/X)^{−p} beyond the
/// last node X when the phase function supports it.
#[derive(Debug, Clone)]
struct LagRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    tail: Option<TailModel>,
}

/// Power-law continuation past the last node of a graded rule x = a + a·e^u with step h.
#[derive(Debug, Clone, Copy)]
pub struct TailModel {
    pub p: f64,
    pub a: f64,
    pub h: f64,
    pub x_end: f64,
}

impl TailModel {
    /// Decay rate in u, at the last node, of (x − a)·x^{−p}·(x + c)^{−e}.
    fn rate(&self, e: f64, c: f64) -> f64 {
        let x = self.x_end;
        (x - self.a) * (self.p / x + e / (x + c)) - 1.0
    }

    /// Extra weight on the last node's integrand value: the Euler-Maclaurin end correction of the
    /// trapezoid for an integrand decaying like e^{−μu} there, (h/2)coth(hμ/2) − 1/μ, in x-measure.
    fn end_weight(&self, mu: f64) -> f64 {
        let hm = 0.5 * self.h * mu;
        let corr = if hm.abs() < 1e-6 {
            self.h * hm / 6.0
        } else {
            0.5 * self.h / hm.tanh() - 1.0 / mu
        };
        (self.x_end - self.a) * corr
    }
}

impl LagRule {
    fn new(beta: &dyn PhaseFunction, quad: &LagQuadrature) -> Self {
        let mut weights = quad.weights.clone();
        let x_end = quad.last_node();
        let tail = match (quad.options, beta.tail_exponent()) {
            (Some(o), Some(p)) => {
                // trapezoid end weight; the rest is carried by the end correction and the tail model
                *weights.last_mut().expect("nonempty rule") *= 0.5;
                Some(TailModel {
                    p,
                    a: o.l1 as f64 - 0.5,
                    h: o.h,
                    x_end,
                })
            }
            _ => None,
        };
        LagRule {
            nodes: quad.nodes.clone(),
            weights,
            tail,
        }
    }

    /// Weight of the last node for an integrand E(x)·β(y0 + x).
    fn last_weight_beta(&self, y0: f64) -> f64 {
        let w = *self.weights.last().unwrap_or(&0.0);
        match self.tail {
            Some(t) => w + t.end_weight(t.rate(1.0, y0)),
            None => w,
        }
    }

    /// ∫_X^∞ (x/X)^{−p} β(y0 + x) dx, or None without a tail model.
    fn tail_beta(&self, beta: &dyn PhaseFunction, y0: f64) -> Option<CMat> {
        let t = self.tail?;
        let q = beta.q();
        let mut buf = vec![ZERO; q * q];
        beta.tail_integral(y0, t.x_end, t.p, &mut buf)
            .then(|| CMat::from_row_slice(q, q, &buf))
    }
}

/// Nyström kernels K_{lj} = ω_l β(n+1+x_l+x_j) and K'_{lj} = ω_l β(n+1+x_l+x_j)*, flattened;
/// the last row also carries the analytic tail.
fn kernels(beta: &dyn PhaseFunction, n: usize, rule: &LagRule) -> (Vec<C64>, Vec<C64>) {
    let q = beta.q();
    let m = rule.nodes.len();
    let dim = m * q;
    let rows: Vec<(Vec<C64>, Vec<C64>)> = (0..m)
        .into_par_iter()
        .map(|l| {
            let mut k = vec![ZERO; q * dim];
            let mut kc = vec![ZERO; q * dim];
            let mut buf = vec![ZERO; q * q];
            for j in 0..m {
                let wl = if l == m - 1 {
                    rule.last_weight_beta(n as f64 + 1.0 + rule.nodes[j])
                } else {
                    rule.weights[l]
                };
                beta.beta_into(n as f64 + 1.0 + rule.nodes[l] + rule.nodes[j], &mut buf);
                for r in 0..q {
                    for c in 0..q {
                        k[r * dim + j * q + c] = buf[r * q + c] * wl;
                        kc[r * dim + j * q + c] = buf[c * q + r].conj() * wl;
                    }
                }
                if l == m - 1 {
                    if let Some(t) = rule.tail_beta(beta, n as f64 + 1.0 + rule.nodes[j]) {
                        for r in 0..q {
                            for c in 0..q {
                                k[r * dim + j * q + c] += t[(r, c)];
                                kc[r * dim + j * q + c] += t[(c, r)].conj();
                            }
                        }
                    }
                }
            }
            (k, kc)
        })
        .collect();
    let mut k = Vec::with_capacity(dim * dim);
    let mut kc = Vec::with_capacity(dim * dim);
    for (a, b) in rows {
        k.extend(a);
        kc.extend(b);
    }
    (k, kc)
}

struct LevelRun {
    heads: Vec<CMat>,
    levels: Option<Vec<Vec<CMat>>>,
    even: Row,
    odd: Row,
    certificate: f64,
}

/// Σ_{k>K} τ_k x^k for K = 0..=cap.
fn envelope_tails(tau: &[f64], x: f64) -> Vec<f64> {
    let cap = tau.len() - 1;
    let mut tails = vec![0.0; cap + 1];
    let beyond = tau[cap] * x.powi(cap as i32 + 1) / (1.0 - x);
    let mut acc = beyond;
    for k in (0..cap).rev() {
        acc += tau[k + 1] * x.powi(k as i32 + 1);
        tails[k] = acc;
    }
    tails[cap] = beyond;
    tails
}

fn run_levels(
    first: &[C64],
    second: &[C64],
    q: usize,
    dim: usize,
    opts: &EngineOptions,
    envelope: Option<(&[f64], f64)>,
) -> Result<LevelRun> {
    let mut even = Row::delta(q, dim);
    let mut even_sum = Row::delta(q, dim);
    let mut odd_sum = Row::zeros(q, dim);
    let mut heads = vec![even.block(0)];
    let mut levels = opts.keep_levels.then(|| vec![even.blocks()]);
    let mut ratios: Vec<f64> = Vec::new();
    let mut prev_size = 1.0;
    let mut k = 0;
    loop {
        let odd = even.times(first);
        let next = odd.times(second);
        odd_sum.add(&odd);
        even_sum.add(&next);
        heads.push(odd.block(0));
        heads.push(next.block(0));
        if let Some(l) = levels.as_mut() {
            l.push(odd.blocks());
            l.push(next.blocks());
        }
        k += 2;
        let (s_odd, s_even) = (odd.size(), next.size());
        let r = if prev_size > 0.0 { s_even / prev_size } else { 0.0 };
        ratios.push(r);
        prev_size = s_even;
        let recent = ratios[ratios.len().saturating_sub(3)..]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let observed = if s_even == 0.0 && s_odd == 0.0 {
            0.0
        } else if recent < 1.0 {
            (s_odd + s_even) * recent / (1.0 - recent)
        } else {
            f64::INFINITY
        };
        let env = envelope.map_or(0.0, |(tails, scale)| {
            tails.get(k).map_or(f64::INFINITY, |t| t * scale)
        });
        let certificate = observed.max(env);
        if k >= 4 && certificate < opts.tol {
            return Ok(LevelRun {
                heads,
                levels,
                even: even_sum,
                odd: odd_sum,
                certificate,
            });
        }
        if k + 2 > opts.max_levels {
            return Err(Error::Truncation(format!(
                "level certificate {certificate:e} still above {:e} after {k} levels",
                opts.tol
            )));
        }
        even = next;
    }
}

/// Levels at horizon n on the given lag rule.
pub fn run_recursion(
    beta: &dyn PhaseFunction,
    n: usize,
    quad: &LagQuadrature,
    opts: &EngineOptions,
) -> Result<RecursionState> {
    if n == 0 {
        return Err(Error::InvalidInput("the recursion starts at n = 1".into()));
    }
    let q = beta.q();
    let dim = quad.len() * q;
    let rule = LagRule::new(beta, quad);
    let (k, kc) = kernels(beta, n, &rule);
    let (tau, env_scale, use_env) = envelope_setup(beta, n, opts.max_levels);
    let tails = use_env.then(|| envelope_tails(&tau.0, tau.1));
    let env = tails.as_deref().map(|t| (t, env_scale));
    let fwd = run_levels(&k, &kc, q, dim, opts, env)?;
    let bwd = if k == kc {
        LevelRun {
            heads: fwd.heads.clone(),
            levels: fwd.levels.clone(),
            even: Row {
                q,
                dim,
                data: fwd.even.data.clone(),
            },
            odd: Row {
                q,
                dim,
                data: fwd.odd.data.clone(),
            },
            certificate: fwd.certificate,
        }
    } else {
        run_levels(&kc, &k, q, dim, opts, env)?
    };
    let even0 = fwd.even.block(quad.len() - 1);
    let lag_tail = match rule.tail_beta(beta, n as f64 + 1.0) {
        Some(t) => norm2(&(even0 * t)),
        None => {
            let x_last = quad.last_node().max(1.0);
            norm2(&beta.beta(n as f64 + 1.0 + x_last)) * (n as f64 + 1.0 + x_last)
        }
    };
    Ok(RecursionState {
        n,
        q,
        k_max: fwd.heads.len().max(bwd.heads.len()) - 1,
        j_max: quad.len(),
        nodes: rule.nodes,
        weights: rule.weights,
        tail: rule.tail,
        b_heads: fwd.heads,
        b_tilde_heads: bwd.heads,
        b_levels: fwd.levels,
        b_tilde_levels: bwd.levels,
        even: fwd.even.blocks(),
        odd: fwd.odd.blocks(),
        even_tilde: bwd.even.blocks(),
        odd_tilde: bwd.odd.blocks(),
        tail_certificate: fwd.certificate.max(bwd.certificate),
        lag_tail,
        envelope: use_env,
    })
}

/// τ coefficients and the envelope parameters: levels are bounded by τ_k (t² sin π|d|)^k / n with
/// t halfway between 1 and (sin π|d|)^{−1/2}, valid once n ≥ M/(t − 1).
fn envelope_setup(beta: &dyn PhaseFunction, n: usize, cap: usize) -> ((Vec<f64>, f64), f64, bool) {
    let Some(s) = beta.contraction() else {
        return ((vec![0.0], 0.0), 0.0, false);
    };
    let t = 0.5 * (1.0 + 1.0 / s.sqrt());
    let x = t * t * s;
    let valid = match beta.delta_constant() {
        Some(m) => n as f64 * (t - 1.0) >= m,
        None => false,
    };
    ((tau_all(cap + 2), x), 1.0 / n as f64, valid && x < 1.0)
}

/// Finite-past predictor engine for one model.
pub struct Engine<'m> {
    pub model: &'m FarimaModel,
    pub phase: FarimaPhase,
    pub opts: EngineOptions,
    pub quad: LagQuadrature,
    gamma0: CMat,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m FarimaModel, opts: EngineOptions) -> Result<Self> {
        let phase = FarimaPhase::new(model);
        let quad_opts = opts.quad.unwrap_or_else(|| {
            let offset = model
                .smooth_offset()
                .max(model.fwd.inv_coeffs.len())
                .max(model.bwd.inv_coeffs.len());
            // with the power-law tail the lag error decays like 1e-5·e^{−(1−2|d|)u_max}
            let mu = 1.0 - 2.0 * model.dv().abs();
            QuadOptions {
                l1: 48.max(offset + 40),
                ..QuadOptions::default()
            }
            .with_decay(mu, opts.tol * 1e5)
        });
        let quad = LagQuadrature::graded(quad_opts);
        let gamma0 = autocov(model, 0)?.get(0);
        Ok(Engine {
            model,
            phase,
            opts,
            quad,
            gamma0,
        })
    }

    pub fn gamma0(&self) -> &CMat {
        &self.gamma0
    }

    pub fn run_recursion(&self, n: usize) -> Result<RecursionState> {
        run_recursion(&self.phase, n, &self.quad, &self.opts)
    }

    /// (v_n, ṽ_n) = (c_0 Σ_k b^{2k}_{n,0} c_0*, c̃_0 Σ_k b̃^{2k}_{n,0} c̃_0*).
    pub fn prediction_error_cov(&self, state: &RecursionState) -> Result<(CMat, CMat)> {
        let m = self.model;
        let v = &m.c0 * &state.even[0] * m.c0.adjoint();
        let vt = &m.c0_tilde * &state.even_tilde[0] * m.c0_tilde.adjoint();
        for (name, x) in [("v_n", &v), ("ṽ_n", &vt)] {
            let asym = asymmetry(x);
            let allowed = 10.0 * state.tail_certificate + 1e-13 * norm2(x);
            if asym > allowed {
                return Err(Error::Truncation(format!(
                    "{name} at n = {} has asymmetry {asym:e} above {allowed:e}",
                    state.n
                )));
            }
        }
        Ok((herm_part(&v), herm_part(&vt)))
    }

    /// φ_{n,n} = c_0 Σ_j E_j β_{n+j} c̃_0^{−1} and φ̃_{n,n} = c̃_0 Σ_j Ẽ_j β*_{n+j} c_0^{−1}.
    pub fn pacf_terms(&self, state: &RecursionState) -> Result<(CMat, CMat)> {
        let q = state.q;
        let mut f = CMat::zeros(q, q);
        let mut b = CMat::zeros(q, q);
        for (l, (&x, &w)) in state.nodes.iter().zip(&state.weights).enumerate() {
            let beta = self.phase.beta(state.n as f64 + x) * C64::new(w, 0.0);
            f += &state.even[l] * &beta;
            b += &state.even_tilde[l] * beta.adjoint();
        }
        if let Some(tm) = state.tail {
            let last = state.nodes.len() - 1;
            let mut buf = vec![ZERO; q * q];
            let mut t = if self.phase.tail_integral(state.n as f64, tm.x_end, tm.p, &mut buf) {
                CMat::from_row_slice(q, q, &buf)
            } else {
                CMat::zeros(q, q)
            };
            let y0 = state.n as f64 + tm.x_end;
            t += self.phase.beta(y0) * C64::new(tm.end_weight(tm.rate(1.0, state.n as f64)), 0.0);
            f += &state.even[last] * &t;
            b += &state.even_tilde[last] * t.adjoint();
        }
        let m = self.model;
        let phi = &m.c0 * f * inverse(&m.c0_tilde, "c̃_0")?;
        let phi_t = &m.c0_tilde * b * inverse(&m.c0, "c_0")?;
        Ok((phi, phi_t))
    }

    /// Δ_{n+1} = c_0 Σ_k b^{2k+1}_{n,0} c̃_0*.
    pub fn cross_cov(&self, state: &RecursionState) -> CMat {
        &self.model.c0 * &state.odd[0] * self.model.c0_tilde.adjoint()
    }

    /// AR values a(m + x_l), ã(m + x_l) for m = 1..=count at every node.
    pub fn ar_tables(&self, count: usize) -> ArTables {
        let m = self.model;
        let q = m.q;
        let ni = self.quad.n_integer;
        let a = m.ar_coeffs(count + ni);
        let at = m.ar_coeffs_backward(count + ni);
        let flat = |seq: &CoeffSeq, l: usize| -> Vec<C64> {
            let mut out = Vec::with_capacity(count * q * q);
            for k in 1..=count {
                let b = &seq.coeffs[k + l];
                for r in 0..q {
                    for c in 0..q {
                        out.push(b[(r, c)]);
                    }
                }
            }
            out
        };
        let side = |s: &SideFactor, seq: &CoeffSeq| -> Vec<Vec<C64>> {
            self.quad
                .nodes
                .par_iter()
                .enumerate()
                .map(|(l, &x)| {
                    if l < ni {
                        flat(seq, l)
                    } else {
                        ar_shifted(s, m.dv(), x, count)
                    }
                })
                .collect()
        };
        ArTables {
            q,
            count,
            fwd: side(&m.fwd, &a),
            bwd: side(&m.bwd, &at),
        }
    }

    /// φ_{n,j} = c_0 Σ_l [E_l a_{j+l} + O_l ã_{n−j+1+l}] and the backward analogue, j = 1..n.
    pub fn finite_predictor_coeffs(&self, state: &RecursionState, tables: &ArTables) -> Result<(Vec<CMat>, Vec<CMat>)> {
        let n = state.n;
        if tables.count < n {
            return Err(Error::InvalidInput(format!(
                "AR tables hold {} lags, horizon {n} needs {n}",
                tables.count
            )));
        }
        let q = state.q;
        let m = self.model;
        let blk = |t: &[C64], k: usize| CMat::from_row_slice(q, q, &t[(k - 1) * q * q..k * q * q]);
        // beyond X the AR values decay like x^{−1−d}, so the tail of E·a integrates to a(j+X)·X/(p+d)
        let mut weights = state.weights.clone();
        if let Some(tm) = state.tail {
            let end = tm.end_weight(tm.rate(1.0 + m.dv(), 0.0));
            *weights.last_mut().expect("nonempty rule") += tm.x_end / (tm.p + m.dv()) + end;
        }
        let phi = (1..=n)
            .map(|j| {
                let mut acc = CMat::zeros(q, q);
                let mut acc_t = CMat::zeros(q, q);
                for (l, &wl) in weights.iter().enumerate() {
                    let w = C64::new(wl, 0.0);
                    let a_j = blk(&tables.fwd[l], j);
                    let at_j = blk(&tables.bwd[l], j);
                    let a_r = blk(&tables.fwd[l], n - j + 1);
                    let at_r = blk(&tables.bwd[l], n - j + 1);
                    acc += (&state.even[l] * a_j + &state.odd[l] * at_r) * w;
                    acc_t += (&state.even_tilde[l] * at_j + &state.odd_tilde[l] * a_r) * w;
                }
                (&m.c0 * acc, &m.c0_tilde * acc_t)
            })
            .collect::<Vec<_>>();
        Ok(phi.into_iter().unzip())
    }

    fn assemble(
        &self,
        state: &RecursionState,
        prev: Option<&(CMat, CMat)>,
        tables: Option<&ArTables>,
    ) -> Result<PredictorSolution> {
        let (v, vt) = self.prediction_error_cov(state)?;
        let (phi_nn, phi_tilde_nn) = self.pacf_terms(state)?;
        let (vp, vtp) = match prev {
            Some(p) => p.clone(),
            None => (self.gamma0.clone(), self.gamma0.clone()),
        };
        let alpha = hermitian_inv_sqrt(&vp)? * &phi_nn * hermitian_sqrt(&vtp)?;
        let norm = norm2(&alpha);
        if norm > 1.0 + 1e-8 {
            return Err(Error::Truncation(format!(
                "‖α_{}‖ = {norm} exceeds 1; the recursion is not resolved",
                state.n
            )));
        }
        let (phi, phi_tilde) = match tables {
            Some(t) => self.finite_predictor_coeffs(state, t)?,
            None => (Vec::new(), Vec::new()),
        };
        Ok(PredictorSolution {
            n: state.n,
            phi,
            phi_tilde,
            v,
            v_tilde: vt,
            phi_nn,
            phi_tilde_nn,
            alpha,
            cross_cov: self.cross_cov(state),
            diagnostics: Some(state.diagnostics()),
        })
    }

    /// Everything at horizon n, including all φ_{n,j}.
    pub fn solve(&self, n: usize) -> Result<PredictorSolution> {
        Ok(self.sweep(&[n], true)?.remove(0))
    }

    /// Solutions at each horizon, computed in parallel; `coeffs` adds all φ_{n,j}, φ̃_{n,j}.
    pub fn sweep(&self, ns: &[usize], coeffs: bool) -> Result<Vec<PredictorSolution>> {
        let mut needed: Vec<usize> = ns.iter().flat_map(|&n| [n, n.saturating_sub(1)]).filter(|&n| n > 0).collect();
        needed.sort_unstable();
        needed.dedup();
        let pool = thread_pool()?;
        let states: Vec<RecursionState> =
            pool.install(|| needed.par_iter().map(|&n| self.run_recursion(n)).collect::<Result<_>>())?;
        let covs: Vec<(CMat, CMat)> = states
            .iter()
            .map(|s| self.prediction_error_cov(s))
            .collect::<Result<_>>()?;
        let tables = if coeffs {
            ns.iter().max().map(|&n| pool.install(|| self.ar_tables(n.max(1))))
        } else {
            None
        };
        let find = |n: usize| needed.binary_search(&n).expect("state computed");
        pool.install(|| {
            ns.par_iter()
                .map(|&n| {
                    if n == 0 {
                        return Ok(PredictorSolution::order_zero(self.model.q, self.gamma0.clone()));
                    }
                    let prev = (n > 1).then(|| &covs[find(n - 1)]);
                    self.assemble(&states[find(n)], prev, tables.as_ref())
                })
                .collect()
        })
    }

    /// Σ_{j≤n}‖φ_{n,j} − φ_j‖ against Σ_{j>n}‖φ_j‖, forward and backward.
    pub fn baxter_report(&self, n_list: &[usize]) -> Result<Vec<BaxterRow>> {
        let d = self.model.dv();
        if d <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "Baxter bounds need 0 < d < 1/2, got d = {d}"
            )));
        }
        let sols = self.sweep(n_list, true)?;
        let n_max = n_list.iter().cloned().max().unwrap_or(0);
        let (phi_inf, phi_inf_t) = self.model.infinite_predictor_coeffs((4 * n_max).max(2048));
        sols.iter()
            .map(|s| {
                let n = s.n;
                let lhs: f64 = (1..=n)
                    .map(|j| norm2(&(&s.phi[j - 1] - phi_inf.get(j as i64).unwrap())))
                    .sum();
                let lhs_t: f64 = (1..=n)
                    .map(|j| norm2(&(&s.phi_tilde[j - 1] - phi_inf_t.get(j as i64).unwrap())))
                    .sum();
                let rhs = self.model.phi_tail_sum(&phi_inf, n, false)?.total;
                let rhs_t = self.model.phi_tail_sum(&phi_inf_t, n, true)?.total;
                let nd = (n as f64).powf(d);
                Ok(BaxterRow {
                    n,
                    lhs,
                    nd_lhs: nd * lhs,
                    rhs,
                    ratio: lhs / rhs,
                    lhs_backward: lhs_t,
                    nd_lhs_backward: nd * lhs_t,
                    rhs_backward: rhs_t,
                    ratio_backward: lhs_t / rhs_t,
                    certificate: s.diagnostics.as_ref().map_or(0.0, |d| d.tail_certificate),
                })
            })
            .collect()
    }

    /// n²-scaled residuals of the v_n, ṽ_n expansions and n-scaled residuals of nφ_{n,n}, nα_n.
    pub fn asymptotics_report(&self, n_list: &[usize]) -> Result<AsymptoticsReport> {
        let m = self.model;
        let d = m.dv();
        let v_inf = m.v_inf();
        let vt_inf = m.v_tilde_inf();
        let v_mat = compute_v(m, &v_inf, &vt_inf)?;
        let phi_lim = &m.c0 * &m.u * inverse(&m.c0_tilde, "c̃_0")?;
        let sols = self.sweep(n_list, false)?;
        let rows = sols
            .iter()
            .map(|s| {
                let nf = s.n as f64;
                let dn = C64::new(d * d / nf, 0.0);
                let rv = norm2(&((&s.v - &v_inf - &v_inf * dn) * C64::new(nf * nf, 0.0))) / norm2(&v_inf);
                let rvt =
                    norm2(&((&s.v_tilde - &vt_inf - &vt_inf * dn) * C64::new(nf * nf, 0.0))) / norm2(&vt_inf);
                let rphi = nf * norm2(&(&s.phi_nn * C64::new(nf, 0.0) - &phi_lim * C64::new(d, 0.0)));
                let ralpha = nf * norm2(&(&s.alpha * C64::new(nf, 0.0) - &v_mat * C64::new(d, 0.0)));
                AsymptoticsRow {
                    n: s.n,
                    v_residual: rv,
                    v_tilde_residual: rvt,
                    phi_residual: rphi,
                    alpha_residual: ralpha,
                    certificate: s.diagnostics.as_ref().map_or(0.0, |d| d.tail_certificate),
                }
            })
            .collect();
        Ok(AsymptoticsReport {
            v_limit: v_mat,
            rows,
        })
    }
}

/// AR values on the lag nodes, row-major blocks per node.
pub struct ArTables {
    pub q: usize,
    pub count: usize,
    pub fwd: Vec<Vec<C64>>,
    pub bwd: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaxterRow {
    pub n: usize,
    pub lhs: f64,
    pub nd_lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub lhs_backward: f64,
    pub nd_lhs_backward: f64,
    pub rhs_backward: f64,
    pub ratio_backward: f64,
    pub certificate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsRow {
    pub n: usize,
    pub v_residual: f64,
    pub v_tilde_residual: f64,
    pub phi_residual: f64,
    pub alpha_residual: f64,
    pub certificate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub v_limit: CMat,
    pub rows: Vec<AsymptoticsRow>,
}

/// Thread pool capped by PHASEPREDICT_THREADS when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PHASEPREDICT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("PHASEPREDICT_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidInput("PHASEPREDICT_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::InvalidInput(format!("cannot start thread pool: {e}")))
}
