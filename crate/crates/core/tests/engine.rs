#![allow(clippy::excessive_precision)]

mod common;

use common::*;
use phasepredict::engine::{run_recursion, EngineOptions};
use phasepredict::error::Error;
use phasepredict::fractional::{psi_nn, u_n};
use phasepredict::linalg::{max_abs_diff, CMat};
use phasepredict::oracle::{autocov, block_levinson, dense_solve};

/// Σ_{j≤n}|φ_{n,j} − φ_j| for fractional noise from the exact Gamma-function predictors (30 digits).
const BAXTER_LHS: [(f64, [(usize, f64); 4]); 3] = [
    (
        0.1,
        [
            (8, 0.0135720864666206342),
            (64, 0.011703362780172853888),
            (128, 0.010967171085742997821),
            (256, 0.010255022969604751146),
        ],
    ),
    (
        0.25,
        [
            (8, 0.070194944801306161955),
            (64, 0.043779620280853521309),
            (128, 0.036940821010036508747),
            (256, 0.031116844676332581368),
        ],
    ),
    (
        0.4,
        [
            (8, 0.14608209779405035476),
            (64, 0.065490848222575725057),
            (128, 0.049737435537080579707),
            (256, 0.037733639924343354789),
        ],
    ),
];

#[test]
fn baxter_lhs_matches_exact_scalar_predictors() {
    for (d, rows) in BAXTER_LHS {
        let m = fractional_noise(d);
        let ns: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let rep = engine(&m).baxter_report(&ns).unwrap();
        for (r, (n, exact)) in rep.iter().zip(rows) {
            assert_eq!(r.n, n);
            assert!(((r.lhs - exact) / exact).abs() < 1e-8, "d={d} n={n}: {} vs {exact}", r.lhs);
            assert!((r.lhs_backward - r.lhs).abs() < 1e-12 * exact);
        }
    }
}

#[test]
fn baxter_needs_positive_d() {
    let m = fractional_noise(-0.25);
    assert!(matches!(engine(&m).baxter_report(&[8]), Err(Error::InvalidInput(_))));
}

#[test]
fn scalar_predictors_match_levinson_and_closed_forms() {
    let m = fractional_noise(0.3);
    let ns: Vec<usize> = (0..=12).collect();
    let sols = engine(&m).sweep(&ns, true).unwrap();
    let hist = block_levinson(&autocov(&m, 16).unwrap(), 12).unwrap();
    for s in &sols {
        let o = hist.at(s.n);
        assert!(max_abs_diff(&s.v, &o.v) < 1e-11, "n={}", s.n);
        for j in 0..s.n {
            assert!(max_abs_diff(&s.phi[j], &o.phi[j]) < 1e-11, "n={} j={}", s.n, j + 1);
        }
        if s.n > 0 {
            assert!((s.alpha[(0, 0)].re - psi_nn(m.d, s.n)).abs() < 1e-11);
            assert!((s.v[(0, 0)].re - u_n(m.d, s.n)).abs() < 1e-11);
            assert!(max_abs_diff(&s.cross_cov, &o.cross_cov) < 1e-11, "n={}", s.n);
        }
    }
}

#[test]
fn q2_solution_matches_dense_solve() {
    let m = geometric(0.5, 0.3);
    let acov = autocov(&m, 20).unwrap();
    let sols = engine(&m).sweep(&[8, 16], true).unwrap();
    for s in &sols {
        let dense = dense_solve(&acov, s.n).unwrap();
        for j in 0..s.n {
            assert!(max_entry_diff(&s.phi[j], &dense.phi[j]) < 1e-9);
            assert!(max_entry_diff(&s.phi_tilde[j], &dense.phi_tilde[j]) < 1e-9);
        }
        assert!(max_entry_diff(&s.v, &dense.v) < 1e-9);
    }
}

#[test]
fn level_two_head_is_sum_of_beta_products() {
    let m = geometric(0.5, 0.25);
    let e = engine(&m);
    let n = 10;
    let st = e.run_recursion(n).unwrap();
    // b^2_{n,0} = Σ_l β_{n+l+1}β*_{n+l+1}, summed directly far into the tail
    let b = phasepredict::phase::beta_from_model(&m, n as i64 + 1, 400_000).unwrap();
    let mut direct = CMat::zeros(2, 2);
    for v in &b.values {
        direct += v * v.adjoint();
    }
    // remainder of Σ_{k>K}|ρ_k|² ≈ σ²/K bounds the cut
    assert!(max_entry_diff(&st.b_heads[2], &direct) < 1e-5, "{}", max_entry_diff(&st.b_heads[2], &direct));
}

#[test]
fn order_zero_is_the_variance() {
    let m = geometric(0.0, 0.3);
    let sols = engine(&m).sweep(&[0], false).unwrap();
    let g0 = autocov(&m, 0).unwrap().get(0);
    assert!(max_abs_diff(&sols[0].v, &g0) < 1e-14);
    assert!(sols[0].phi.is_empty());
}

#[test]
fn zero_horizon_recursion_is_rejected() {
    let m = fractional_noise(0.25);
    let e = engine(&m);
    assert!(run_recursion(&e.phase, 0, &e.quad, &EngineOptions::default()).is_err());
}

#[test]
fn level_cap_reports_truncation() {
    let m = fractional_noise(0.45);
    let e = phasepredict::engine::Engine::new(
        &m,
        EngineOptions {
            max_levels: 10,
            ..EngineOptions::default()
        },
    )
    .unwrap();
    assert!(matches!(e.run_recursion(5), Err(Error::Truncation(_))));
}
