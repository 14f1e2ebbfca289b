#![allow(dead_code)]

use phasepredict::engine::{Engine, EngineOptions, PredictorSolution};
use phasepredict::linalg::{min_herm_eigenvalue, norm2, singular_values_sorted, CMat, C64};
use phasepredict::model::{FarimaModel, ModelOptions};
use phasepredict::rational::{RationalEntry, RationalMatrix};

pub fn fractional_noise(d: f64) -> FarimaModel {
    FarimaModel::fractional_noise(d).expect("fractional noise model")
}

/// q = 2 model with g(z) = [[1, 0], [1/(1 − cz), 1]].
pub fn geometric(c: f64, d: f64) -> FarimaModel {
    FarimaModel::new(d, RationalMatrix::lower_geometric(C64::new(c, 0.0)), &ModelOptions::default())
        .expect("geometric model")
}

/// q = 2 model with g(0) = [[1, 1/2], [1/2, 1]] ≻ 0: g(z) = [[1, 1/2], [(1/2 + z/20)/(1 − z/2), 1]].
pub fn positive_at_zero(d: f64) -> FarimaModel {
    let r = |x: f64| C64::new(x, 0.0);
    let g = RationalMatrix::new(
        2,
        vec![
            RationalEntry::constant(r(1.0)),
            RationalEntry::constant(r(0.5)),
            RationalEntry::new(vec![r(0.5), r(0.05)], vec![r(1.0), r(-0.5)]),
            RationalEntry::constant(r(1.0)),
        ],
    )
    .expect("valid matrix");
    FarimaModel::new(d, g, &ModelOptions::default()).expect("positive model")
}

pub fn engine(m: &FarimaModel) -> Engine<'_> {
    Engine::new(m, EngineOptions::default()).expect("engine")
}

pub fn max_entry_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values_sorted(m).into_iter().fold(0.0, f64::max)
}

/// Most negative eigenvalue of the even heads b^{2k}_{n,0} relative to ‖b^0‖, forward and backward,
/// together with their largest asymmetry.
pub fn even_heads_defect(e: &Engine, n: usize) -> (f64, f64) {
    let st = e.run_recursion(n).expect("recursion");
    let scale = norm2(&st.b_heads[0]);
    let mut neg: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for heads in [&st.b_heads, &st.b_tilde_heads] {
        for h in heads.iter().step_by(2) {
            neg = neg.max(-min_herm_eigenvalue(&phasepredict::linalg::herm_part(h)) / scale);
            asym = asym.max(phasepredict::linalg::asymmetry(h) / scale);
        }
    }
    (neg, asym)
}

/// Worst violations of v_n ⪰ v_∞, v_n ⪰ v_{n+1} (relative to ‖v_∞‖) and of ‖α_n‖ ≤ 1, over consecutive
/// horizons; the same for the backward quantities.
pub fn covariance_order_defects(m: &FarimaModel, sols: &[PredictorSolution]) -> (f64, f64, f64) {
    let pairs = [(m.v_inf(), false), (m.v_tilde_inf(), true)];
    let mut below_limit: f64 = 0.0;
    let mut non_monotone: f64 = 0.0;
    for (lim, backward) in pairs {
        let scale = norm2(&lim);
        let pick = |s: &PredictorSolution| if backward { s.v_tilde.clone() } else { s.v.clone() };
        for w in sols.windows(2) {
            assert_eq!(w[0].n + 1, w[1].n, "consecutive horizons");
            non_monotone = non_monotone.max(-min_herm_eigenvalue(&(pick(&w[0]) - pick(&w[1]))) / scale);
        }
        for s in sols {
            below_limit = below_limit.max(-min_herm_eigenvalue(&(pick(s) - &lim)) / scale);
        }
    }
    let alpha_excess = sols
        .iter()
        .filter(|s| s.n > 0)
        .map(|s| spectral_norm(&s.alpha) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    (below_limit, non_monotone, alpha_excess)
}
