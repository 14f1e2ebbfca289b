use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::Serialize;

use super::series::CoeffSeq;
use super::RationalMatrix;
use crate::error::{Error, Result};
use crate::linalg::{inverse, norm2, polar_left, CMat, C64};

/// Values of a q×q matrix function at θ_j = 2πj/N − π, j = 0..N.
#[derive(Debug, Clone)]
pub struct MatrixGridSamples {
    pub q: usize,
    pub samples: Vec<CMat>,
}

impl MatrixGridSamples {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n() as f64 - PI
    }

    /// Builds from samples at θ_m = 2πm/N.
    pub fn from_standard(q: usize, std: &[CMat]) -> Self {
        let n = std.len();
        let samples = (0..n).map(|j| std[(j + n / 2) % n].clone()).collect();
        MatrixGridSamples { q, samples }
    }

    /// Sample at θ = 2πm/N.
    pub fn standard(&self, m: usize) -> &CMat {
        let n = self.n();
        &self.samples[(m + n / 2) % n]
    }

    pub fn to_standard(&self) -> Vec<CMat> {
        (0..self.n()).map(|m| self.standard(m).clone()).collect()
    }
}

/// Fourier coefficients f_k = N^{−1} Σ_m f(θ_m) e^{−ikθ_m} of samples at θ_m = 2πm/N;
/// index k is stored at k mod N.
pub(crate) fn coefficients_from_samples(std: &[CMat]) -> Vec<CMat> {
    transform(std, true)
}

/// Inverse of `coefficients_from_samples`.
pub(crate) fn samples_from_coefficients(coeffs: &[CMat]) -> Vec<CMat> {
    transform(coeffs, false)
}

fn transform(data: &[CMat], forward: bool) -> Vec<CMat> {
    let n = data.len();
    let (r, c) = (data[0].nrows(), data[0].ncols());
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    let scale = if forward { 1.0 / n as f64 } else { 1.0 };
    let mut out = vec![CMat::zeros(r, c); n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for i in 0..r {
        for j in 0..c {
            for (m, x) in data.iter().enumerate() {
                buf[m] = x[(i, j)];
            }
            fft.process(&mut buf);
            for (m, y) in out.iter_mut().enumerate() {
                y[(i, j)] = buf[m] * scale;
            }
        }
    }
    out
}

/// Samples of a rational matrix at θ_m = 2πm/N.
pub(crate) fn sample_standard(g: &RationalMatrix, n: usize) -> Result<Vec<CMat>> {
    (0..n)
        .map(|m| g.eval(C64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64)))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FactorOptions {
    /// Initial grid size (power of two, at least 2^10).
    pub grid: usize,
    /// Largest grid tried before giving up.
    pub max_grid: usize,
    /// Residual target in the spectral norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            grid: 1 << 14,
            max_grid: 1 << 20,
            tol: 1e-10,
            max_iter: 80,
        }
    }
}

/// Outer spectral factor g̃ with g(e^{−iθ})g(e^{−iθ})* = g̃(e^{iθ})g̃(e^{iθ})* and g̃(0) ≻ 0,
/// together with g_♯(z) = g̃(z̄)*.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    pub grid: MatrixGridSamples,
    pub coeffs: CoeffSeq,
    pub sharp_grid: MatrixGridSamples,
    pub sharp_coeffs: CoeffSeq,
    /// max over the grid of ‖g g* − g̃ g̃*‖.
    pub residual: f64,
    /// Same residual at grid midpoints, from the truncated coefficients.
    pub midpoint_residual: f64,
    pub iterations: usize,
    pub min_abs_det: f64,
    pub winding: i64,
    /// Largest negative-frequency coefficient norm (zero for an exact analytic factor).
    pub anti_causal_norm: f64,
}

impl SpectralFactor {
    /// g̃(0).
    pub fn c0(&self) -> &CMat {
        &self.coeffs.coeffs[0]
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }
}

/// Spectral factorization of the density g(e^{−iθ})g(e^{−iθ})* of a rational g on an N-point grid.
pub fn spectral_factorize(g: &RationalMatrix, n: usize, tol: f64) -> Result<SpectralFactor> {
    spectral_factorize_with(
        g,
        &FactorOptions {
            grid: n,
            max_grid: n,
            tol,
            ..FactorOptions::default()
        },
    )
}

/// Same as `spectral_factorize`, doubling the grid until coefficients decay within it.
pub fn spectral_factorize_with(g: &RationalMatrix, opts: &FactorOptions) -> Result<SpectralFactor> {
    g.require_condition_c()?;
    if !opts.grid.is_power_of_two() || opts.grid < 1 << 10 {
        return Err(Error::InvalidInput(format!(
            "grid size {} must be a power of two ≥ 1024",
            opts.grid
        )));
    }
    let mut n = opts.grid;
    loop {
        let g_std = sample_standard(g, n)?;
        let exact = |theta: f64| -> Result<CMat> {
            let v = g.eval(C64::from_polar(1.0, -theta))?;
            Ok(&v * v.adjoint())
        };
        match factor_from_standard(&g_std, &exact, opts.tol, opts.max_iter) {
            Ok(f) => return Ok(f),
            Err(Error::Truncation(_)) if n < opts.max_grid => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Factorizes the density built from samples of g at θ_m = 2πm/N; `exact` evaluates
/// the density off the grid.
pub(crate) fn factor_from_standard(
    g_std: &[CMat],
    exact: &dyn Fn(f64) -> Result<CMat>,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralFactor> {
    let n = g_std.len();
    let q = g_std[0].nrows();
    let density: Vec<CMat> = (0..n)
        .map(|m| {
            let v = &g_std[(n - m) % n];
            v * v.adjoint()
        })
        .collect();
    let (psi, iterations) = wilson(&density, tol, max_iter)?;

    let mut coeffs = coefficients_from_samples(&psi);
    let anti_causal_norm = coeffs[n / 2..].iter().map(norm2).fold(0.0, f64::max);
    let (_, w) = polar_left(&coeffs[0])?;
    let w_adj = w.adjoint();
    for c in coeffs.iter_mut() {
        *c = &*c * &w_adj;
    }
    let psi: Vec<CMat> = psi.iter().map(|p| p * &w_adj).collect();

    // decay check inside the causal half
    let causal = &coeffs[..n / 2];
    let norms: Vec<f64> = causal.iter().map(norm2).collect();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    let late = norms[n / 4..].iter().cloned().fold(0.0, f64::max);
    if late > 1e-14 * peak {
        return Err(Error::Truncation(format!(
            "factor coefficients not decayed on a grid of {n} (late/peak = {:e})",
            late / peak
        )));
    }
    let last = norms.iter().rposition(|&x| x > 1e-17 * peak).unwrap_or(0);
    let seq = CoeffSeq {
        q,
        offset: 0,
        coeffs: causal[..=last].to_vec(),
        tail_norm: norms[last + 1..].iter().cloned().fold(0.0, f64::max),
    };
    let residual = (0..n)
        .map(|m| norm2(&(&density[m] - &psi[m] * psi[m].adjoint())))
        .fold(0.0, f64::max);

    // midpoints θ_m + π/N from the truncated power series
    let mut shifted = vec![CMat::zeros(q, q); n];
    for (k, c) in seq.coeffs.iter().enumerate() {
        shifted[k] = c * C64::from_polar(1.0, PI * k as f64 / n as f64);
    }
    let mid = samples_from_coefficients(&shifted);
    let mut midpoint_residual: f64 = 0.0;
    for (m, p) in mid.iter().enumerate() {
        let v = exact(2.0 * PI * (m as f64 + 0.5) / n as f64)?;
        midpoint_residual = midpoint_residual.max(norm2(&(&v - p * p.adjoint())));
    }

    let dets: Vec<C64> = psi.iter().map(|p| p.determinant()).collect();
    let min_abs_det = dets.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let mut turn = 0.0;
    for m in 0..n {
        turn += (dets[(m + 1) % n] / dets[m]).arg();
    }
    let winding = (turn / (2.0 * PI)).round() as i64;
    if min_abs_det <= 1e-12 || winding != 0 {
        return Err(Error::NotAdmissible(format!(
            "computed factor is not outer (min |det| = {min_abs_det:e}, winding = {winding})"
        )));
    }

    let sharp_std: Vec<CMat> = (0..n).map(|m| psi[(n - m) % n].adjoint()).collect();
    let sharp_coeffs = CoeffSeq {
        q,
        offset: 0,
        coeffs: seq.coeffs.iter().map(|c| c.adjoint()).collect(),
        tail_norm: seq.tail_norm,
    };
    Ok(SpectralFactor {
        grid: MatrixGridSamples::from_standard(q, &psi),
        coeffs: seq,
        sharp_grid: MatrixGridSamples::from_standard(q, &sharp_std),
        sharp_coeffs,
        residual,
        midpoint_residual,
        iterations,
        min_abs_det,
        winding,
        anti_causal_norm,
    })
}

/// Wilson's Newton iteration for ψψ* = S with ψ analytic; returns grid samples of ψ.
fn wilson(density: &[CMat], tol: f64, max_iter: usize) -> Result<(Vec<CMat>, usize)> {
    let n = density.len();
    let q = density[0].nrows();
    let mean = density.iter().fold(CMat::zeros(q, q), |a, s| a + s) / C64::new(n as f64, 0.0);
    let chol = nalgebra::linalg::Cholesky::new(crate::linalg::herm_part(&mean)).ok_or_else(|| {
        Error::Singular {
            context: "spectral factorization: mean density".into(),
            smallest: crate::linalg::min_herm_eigenvalue(&mean),
        }
    })?;
    let l0 = chol.l();
    let mut psi = vec![l0; n];
    let eye = CMat::identity(q, q);
    let residual_of = |psi: &[CMat]| {
        (0..n)
            .map(|m| norm2(&(&density[m] - &psi[m] * psi[m].adjoint())))
            .fold(0.0, f64::max)
    };
    let mut res = residual_of(&psi);
    let mut best = res;
    let mut stall = 0;
    for it in 0..max_iter {
        if res <= tol * 1e-3 || (res <= tol && stall >= 2) {
            return Ok((psi, it));
        }
        let mut x = Vec::with_capacity(n);
        for m in 0..n {
            let inv = inverse(&psi[m], "spectral factorization step")?;
            x.push(&inv * &density[m] * inv.adjoint() + &eye);
        }
        let mut c = coefficients_from_samples(&x);
        for ck in &mut c[n / 2..] {
            ck.fill(C64::new(0.0, 0.0));
        }
        let c0 = &mut c[0];
        for i in 0..q {
            c0[(i, i)] *= 0.5;
            for j in i + 1..q {
                c0[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        let plus = samples_from_coefficients(&c);
        for m in 0..n {
            psi[m] = &psi[m] * &plus[m];
        }
        res = residual_of(&psi);
        if res < 0.5 * best {
            best = res;
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if res <= tol {
        return Ok((psi, max_iter));
    }
    Err(Error::NonConvergence {
        what: "spectral factorization".into(),
        residual: res,
    })
}

/// Laurent coefficients s_k, |k| ≤ W, of G(z)g_♯(z)^{−1} with G(z) = g(1/z̄)*, from grid samples.
pub fn laurent_phase_ratio(
    g: &RationalMatrix,
    factor: &SpectralFactor,
    w: usize,
    tol: f64,
) -> Result<CoeffSeq> {
    let g_std = sample_standard(g, factor.n())?;
    phase_ratio_from_grids(&g_std, &factor.grid.to_standard(), w, tol)
}

/// Same, from samples of the forward factor and the outer backward factor at θ_m = 2πm/N.
pub(crate) fn phase_ratio_from_grids(
    fwd_std: &[CMat],
    bwd_std: &[CMat],
    w: usize,
    tol: f64,
) -> Result<CoeffSeq> {
    let n = fwd_std.len();
    let q = fwd_std[0].nrows();
    if 2 * w + 1 > n {
        return Err(Error::InvalidInput(format!("window {w} too wide for grid {n}")));
    }
    let mut f = Vec::with_capacity(n);
    for m in 0..n {
        let sharp = bwd_std[(n - m) % n].adjoint();
        f.push(fwd_std[m].adjoint() * inverse(&sharp, "phase ratio")?);
    }
    let c = coefficients_from_samples(&f);
    let coeffs: Vec<CMat> = (-(w as i64)..=w as i64)
        .map(|k| c[k.rem_euclid(n as i64) as usize].clone())
        .collect();
    let tail = (w + 1..n - w)
        .map(|k| norm2(&c[k]))
        .fold(0.0, f64::max);
    if tail > tol {
        return Err(Error::Truncation(format!(
            "phase ratio coefficients beyond window {w} reach {tail:e}; enlarge the window or grid"
        )));
    }
    Ok(CoeffSeq {
        q,
        offset: -(w as i64),
        coeffs,
        tail_norm: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, from_real_rows, max_abs_diff, singular_values_sorted};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn lower_geometric(cc: f64) -> RationalMatrix {
        RationalMatrix::lower_geometric(C64::new(cc, 0.0))
    }

    #[test]
    fn grid_index_convention() {
        let std: Vec<CMat> = (0..8).map(|m| eye(1) * c(m as f64)).collect();
        let g = MatrixGridSamples::from_standard(1, &std);
        assert!((g.theta(0) + PI).abs() < 1e-15);
        assert_eq!(g.samples[0][(0, 0)].re, 4.0);
        assert_eq!(g.standard(3)[(0, 0)].re, 3.0);
        assert_eq!(g.to_standard(), std);
    }

    #[test]
    fn identity_factor() {
        let f = spectral_factorize(&RationalMatrix::identity(2), 1024, 1e-12).unwrap();
        assert!(max_abs_diff(f.c0(), &eye(2)) < 1e-13);
        assert_eq!(f.coeffs.len(), 1);
        assert!(f.residual < 1e-13);
    }

    #[test]
    fn polynomial_example_matches_closed_form() {
        let f = spectral_factorize(&lower_geometric(0.0), 1 << 12, 1e-12).unwrap();
        // density [[1,1],[1,2]] is constant, so g̃ is its positive square root
        let s = crate::linalg::hermitian_sqrt(&from_real_rows(2, &[1.0, 1.0, 1.0, 2.0])).unwrap();
        assert!(max_abs_diff(f.c0(), &s) < 1e-12);
        let paper_like = from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        for m in [0usize, 100, 2000] {
            let a = singular_values_sorted(f.sharp_grid.standard(m));
            let b = singular_values_sorted(&paper_like);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_example_residual() {
        let f = spectral_factorize(&lower_geometric(0.5), 1 << 14, 1e-10).unwrap();
        assert!(f.residual < 1e-10, "{}", f.residual);
        assert!(f.midpoint_residual < 1e-10, "{}", f.midpoint_residual);
        assert!(crate::linalg::asymmetry(f.c0()) < 1e-14);
        assert!(crate::linalg::min_herm_eigenvalue(f.c0()) > 0.0);
        assert_eq!(f.winding, 0);
        assert!(f.anti_causal_norm < 1e-12);
    }

    #[test]
    fn phase_ratio_of_identity() {
        let g = RationalMatrix::identity(2);
        let f = spectral_factorize(&g, 1024, 1e-12).unwrap();
        let s = laurent_phase_ratio(&g, &f, 16, 1e-12).unwrap();
        assert!(max_abs_diff(s.get(0).unwrap(), &eye(2)) < 1e-14);
        assert!(s.coeffs.iter().enumerate().all(|(i, m)| i == 16 || crate::linalg::max_abs(m) < 1e-14));
    }

    #[test]
    fn phase_ratio_sums_to_u() {
        let g = lower_geometric(0.5);
        let f = spectral_factorize(&g, 1 << 14, 1e-10).unwrap();
        let s = laurent_phase_ratio(&g, &f, 200, 1e-12).unwrap();
        let g1 = g.eval(c(1.0)).unwrap();
        let u = g1.adjoint() * inverse(f.sharp_grid.standard(0), "test").unwrap();
        assert!(max_abs_diff(&s.total(), &u) < 1e-8);
    }
}
