//! Quadrature rules for sums over a nonnegative integer lag index.
//!
//! A rule approximates Σ_{l≥0} F(l) for F that is smooth and slowly decaying in l.
//! The head l < L1 is summed exactly; the tail Σ_{l≥L1} F(l) is replaced by the
//! midpoint Euler-Maclaurin identity at a = L1 − 1/2, with the integral ∫_a^∞ F
//! evaluated by the trapezoid rule after the substitution x = a + a·e^u and the
//! endpoint derivatives taken from a backward interpolation stencil on the head.

use serde::Serialize;

/// Parameters of a graded rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    /// Number of exactly summed integer lags.
    pub l1: usize,
    /// Trapezoid step in the exponential variable.
    pub h: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Points in the endpoint-derivative stencil.
    pub stencil: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            l1: 48,
            h: 0.5,
            u_min: -34.0,
            u_max: 34.0,
            stencil: 10,
        }
    }
}

impl QuadOptions {
    /// Chooses the continuum cutoff so that a tail decaying like x^{−1−mu} is below `tol`.
    pub fn with_decay(mut self, mu: f64, tol: f64) -> Self {
        let mu = mu.max(0.05);
        self.u_max = ((-tol.ln()) / mu + 2.0).clamp(30.0, 240.0);
        self
    }
}

/// Nodes and weights; the first `n_integer` nodes are 0, 1, …, n_integer − 1.
#[derive(Debug, Clone, Serialize)]
pub struct LagQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_integer: usize,
    pub options: Option<QuadOptions>,
}

/// Midpoint Euler-Maclaurin coefficients: Σ_{l≥L1} F(l) = ∫_{L1−1/2}^∞ F + Σ_r e_r F^{(r)}(L1−1/2).
const MIDPOINT_EM: [(usize, f64); 5] = [
    (1, 1.0 / 24.0),
    (3, -7.0 / 5760.0),
    (5, 31.0 / 967680.0),
    (7, -127.0 / 154828800.0),
    (9, (511.0 / 512.0) * (5.0 / 66.0) / 3628800.0),
];

impl LagQuadrature {
    /// Plain truncated sum over 0..j.
    pub fn discrete(j: usize) -> Self {
        LagQuadrature {
            nodes: (0..j).map(|l| l as f64).collect(),
            weights: vec![1.0; j],
            n_integer: j,
            options: None,
        }
    }

    pub fn graded(opts: QuadOptions) -> Self {
        assert!(opts.stencil >= 2 && opts.l1 >= opts.stencil, "stencil must fit in the head");
        let l1 = opts.l1;
        let a = l1 as f64 - 0.5;
        let mut nodes: Vec<f64> = (0..l1).map(|l| l as f64).collect();
        let mut weights = vec![1.0; l1];

        for (i, w) in endpoint_weights(opts.stencil).into_iter().enumerate() {
            weights[l1 - 1 - i] += w;
        }

        let count = ((opts.u_max - opts.u_min) / opts.h).ceil() as usize;
        for i in 0..=count {
            let u = opts.u_min + i as f64 * opts.h;
            let e = a * u.exp();
            nodes.push(a + e);
            weights.push(opts.h * e);
        }
        LagQuadrature {
            nodes,
            weights,
            n_integer: l1,
            options: Some(opts),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn last_node(&self) -> f64 {
        *self.nodes.last().unwrap_or(&0.0)
    }
}

/// Weights on F(L1−1), F(L1−2), … that realize Σ_r e_r F^{(r)}(L1−1/2) for polynomials of degree < m.
fn endpoint_weights(m: usize) -> Vec<f64> {
    // offsets from the endpoint are −(i + 1/2); scaled by 2 they are odd integers,
    // so the Lagrange basis polynomials have exact integer numerators and denominators
    let s: Vec<i128> = (0..m as i128).map(|i| -(2 * i + 1)).collect();
    let mut factorial = vec![1.0; m + 1];
    for r in 1..=m {
        factorial[r] = factorial[r - 1] * r as f64;
    }
    (0..m)
        .map(|i| {
            let mut poly: Vec<i128> = vec![1];
            let mut denom: i128 = 1;
            for k in 0..m {
                if k == i {
                    continue;
                }
                let mut next = vec![0i128; poly.len() + 1];
                for (p, &c) in poly.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= c * s[k];
                }
                poly = next;
                denom *= s[i] - s[k];
            }
            // t = s/2, so [t^r]ℓ_i = 2^r [s^r]ℓ_i
            MIDPOINT_EM
                .iter()
                .filter(|(r, _)| *r < m)
                .map(|&(r, e)| {
                    e * factorial[r] * 2f64.powi(r as i32) * (poly[r] as f64 / denom as f64)
                })
                .sum()
        })
        .collect()
}
