//! Command line front end: load a model config, run engine and oracle, write CSV/JSON reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::ModelConfig;
use crate::engine::{Engine, PredictorSolution};
use crate::error::{Error, Result};
use crate::fractional::{psi_nn, u_n};
use crate::linalg::{max_abs_diff, CMat, C64};
use crate::model::FarimaModel;
use crate::oracle::{autocov, block_levinson, LevinsonHistory};
use crate::phase::{beta_from_model, compute_u, compute_v};
use crate::rational::{spectral_factorize_with, CoeffSeq, RationalMatrix};
use crate::report::{boundedness_verdict, flatten_col_major, fmt_complex, mat_to_json, Verdict};

#[derive(Debug, Parser)]
#[command(name = "phasepredict", version, about = "Finite predictors and PACF of multivariate FARIMA processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral factorization g g* = g̃ g̃*: coefficients of g̃ and g_♯ plus residuals.
    Factorize(Common),
    /// MA, AR and infinite predictor coefficients.
    Coeffs(Common),
    /// Phase coefficients β_n.
    Beta(Common),
    /// Finite predictor coefficients, error covariances and PACF for every n in n_list.
    Predict(Common),
    /// PACF α_n with φ_{n,n} and φ̃_{n,n}.
    Pacf(Common),
    /// Boundedness checks of the asymptotic laws.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Claims to check; all applicable ones when omitted.
        #[arg(long, value_enum)]
        claim: Vec<Claim>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Add block-Levinson oracle values and differences.
    #[arg(long)]
    pub oracle: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Engine target accuracy, overriding the config.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Claim {
    Baxter,
    VAsymp,
    PacfAsymp,
}

impl Claim {
    fn name(self) -> &'static str {
        match self {
            Claim::Baxter => "baxter",
            Claim::VAsymp => "v-asymp",
            Claim::PacfAsymp => "pacf-asymp",
        }
    }
}

/// Result of a successful invocation: files written and whether every check passed.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub pass: bool,
    pub summary: Vec<String>,
}

impl Outcome {
    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            for line in &out.summary {
                let _ = writeln!(stdout, "{line}");
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    let common = match cmd {
        Command::Factorize(c) | Command::Coeffs(c) | Command::Beta(c) | Command::Predict(c) | Command::Pacf(c) => c,
        Command::Verify { common, .. } => common,
    };
    let mut cfg = ModelConfig::load(&common.config)?;
    if let Some(t) = common.tol {
        cfg.tol = t;
        cfg.validate()?;
    }
    fs::create_dir_all(&common.out)?;
    match cmd {
        Command::Factorize(c) => cmd_factorize(&cfg, &c.out),
        Command::Coeffs(c) => cmd_coeffs(&cfg, &c.out),
        Command::Beta(c) => cmd_beta(&cfg, &c.out),
        Command::Predict(c) => cmd_predict(&cfg, &c.out, c.oracle),
        Command::Pacf(c) => cmd_pacf(&cfg, &c.out, c.oracle),
        Command::Verify { common, claim } => cmd_verify(&cfg, &common.out, claim),
    }
}

fn seq_json(s: &CoeffSeq) -> serde_json::Value {
    json!({
        "offset": s.offset,
        "tail_norm": s.tail_norm,
        "coeffs": s.coeffs.iter().map(mat_to_json).collect::<Vec<_>>(),
    })
}

fn write_json(path: PathBuf, v: &serde_json::Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// g̃ and g_♯ coefficients with factorization residuals.
pub fn cmd_factorize(cfg: &ModelConfig, out: &Path) -> Result<Outcome> {
    let opts = cfg.model_options().factor;
    let f = spectral_factorize_with(&cfg.g, &opts)?;
    let g = cfg.g.taylor_coeffs(f.coeffs.coeffs.len().saturating_sub(1))?;
    let report = json!({
        "q": cfg.g.q,
        "grid": f.n(),
        "iterations": f.iterations,
        "residual": f.residual,
        "midpoint_residual": f.midpoint_residual,
        "min_abs_det": f.min_abs_det,
        "winding": f.winding,
        "anti_causal_norm": f.anti_causal_norm,
        "g": seq_json(&g),
        "g_tilde": seq_json(&f.coeffs),
        "g_sharp": seq_json(&f.sharp_coeffs),
    });
    let file = write_json(out.join("factor.json"), &report)?;
    Ok(Outcome {
        files: vec![file],
        pass: true,
        summary: vec![format!(
            "factorize: grid {} iterations {} residual {:e} midpoint residual {:e}",
            f.n(),
            f.iterations,
            f.residual,
            f.midpoint_residual
        )],
    })
}

fn coeff_count(cfg: &ModelConfig) -> usize {
    cfg.coeff_count.unwrap_or_else(|| cfg.max_n().max(64))
}

/// MA, AR and infinite predictor coefficients, forward and backward.
pub fn cmd_coeffs(cfg: &ModelConfig, out: &Path) -> Result<Outcome> {
    let m = cfg.build_model()?;
    let k = coeff_count(cfg);
    let (phi, phi_t) = m.infinite_predictor_coeffs(k);
    let report = json!({
        "d": cfg.d,
        "q": m.q,
        "count": k,
        "c0": mat_to_json(&m.c0),
        "c0_tilde": mat_to_json(&m.c0_tilde),
        "ma": seq_json(&m.ma_coeffs(k)),
        "ma_backward": seq_json(&m.ma_coeffs_backward(k)),
        "ar": seq_json(&m.ar_coeffs(k)),
        "ar_backward": seq_json(&m.ar_coeffs_backward(k)),
        "phi": seq_json(&phi),
        "phi_tilde": seq_json(&phi_t),
    });
    let file = write_json(out.join("coeffs.json"), &report)?;
    Ok(Outcome {
        files: vec![file],
        pass: true,
        summary: vec![format!("coeffs: {k} coefficients written")],
    })
}

/// Long-format table of matrix-valued quantities.
struct MatrixTable {
    q: usize,
    compare: bool,
    rows: Vec<Vec<String>>,
}

impl MatrixTable {
    fn new(q: usize, compare: bool) -> Self {
        MatrixTable {
            q,
            compare,
            rows: Vec::new(),
        }
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["n", "quantity", "j", "provenance", "certificate"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for c in 0..self.q {
            for r in 0..self.q {
                h.push(format!("e{}{}", r + 1, c + 1));
            }
        }
        if self.compare {
            h.push("max_abs_diff".into());
        }
        h
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, n: i64, quantity: &str, j: usize, provenance: &str, cert: f64, m: &CMat, diff: Option<f64>) {
        let mut row = vec![
            n.to_string(),
            quantity.to_string(),
            j.to_string(),
            provenance.to_string(),
            format!("{cert:e}"),
        ];
        row.extend(flatten_col_major(m).into_iter().map(fmt_complex));
        if self.compare {
            row.push(format!("{:e}", diff.unwrap_or(0.0)));
        }
        self.rows.push(row);
    }

    fn write(&self, path: PathBuf) -> Result<PathBuf> {
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(self.header())?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// β_n over the configured window.
pub fn cmd_beta(cfg: &ModelConfig, out: &Path) -> Result<Outcome> {
    let m = cfg.build_model()?;
    let [lo, hi] = cfg.beta_range.unwrap_or([0, cfg.max_n().max(64) as i64]);
    let b = beta_from_model(&m, lo, hi)?;
    let mut t = MatrixTable::new(m.q, false);
    for (i, v) in b.values.iter().enumerate() {
        let n = lo + i as i64;
        t.push(n, "beta", 0, "engine", b.tail_bound, v, None);
    }
    let file = t.write(out.join("beta.csv"))?;
    Ok(Outcome {
        files: vec![file],
        pass: true,
        summary: vec![format!("beta: n = {lo}..={hi}, truncation bound {:e}", b.tail_bound)],
    })
}

fn certificate(s: &PredictorSolution) -> f64 {
    s.diagnostics.as_ref().map_or(0.0, |d| d.tail_certificate)
}

fn oracle_history(m: &FarimaModel, n_max: usize) -> Result<LevinsonHistory> {
    let acov = autocov(m, n_max + 1)?;
    block_levinson(&acov, n_max)
}

fn is_fractional_noise(cfg: &ModelConfig) -> bool {
    cfg.g == RationalMatrix::identity(1)
}

/// Finite predictor coefficients, v_n, ṽ_n and α_n per horizon, optionally against the oracle.
pub fn cmd_predict(cfg: &ModelConfig, out: &Path, oracle: bool) -> Result<Outcome> {
    let m = cfg.build_model()?;
    let mut t = MatrixTable::new(m.q, oracle);
    let mut worst = 0.0f64;
    if !cfg.n_list.is_empty() {
        let engine = Engine::new(&m, cfg.engine_options())?;
        let sols = engine.sweep(&cfg.n_list, true)?;
        let hist = if oracle { Some(oracle_history(&m, cfg.max_n())?) } else { None };
        for s in &sols {
            let o = hist.as_ref().map(|h| h.at(s.n));
            let cert = certificate(s);
            let mut emit = |t: &mut MatrixTable, name: &str, j: usize, e: &CMat, ov: Option<&CMat>| {
                let diff = ov.map(|ov| max_abs_diff(e, ov));
                if let Some(dv) = diff {
                    worst = worst.max(dv);
                }
                t.push(s.n as i64, name, j, "engine", cert, e, diff);
                if let Some(ov) = ov {
                    t.push(s.n as i64, name, j, "oracle", 0.0, ov, diff);
                }
            };
            for j in 1..=s.n {
                emit(&mut t, "phi", j, &s.phi[j - 1], o.map(|o| &o.phi[j - 1]));
            }
            for j in 1..=s.n {
                emit(&mut t, "phi_tilde", j, &s.phi_tilde[j - 1], o.map(|o| &o.phi_tilde[j - 1]));
            }
            emit(&mut t, "v", 0, &s.v, o.map(|o| &o.v));
            emit(&mut t, "v_tilde", 0, &s.v_tilde, o.map(|o| &o.v_tilde));
            emit(&mut t, "alpha", 0, &s.alpha, o.map(|o| &o.alpha));
        }
    }
    let file = t.write(out.join("predict.csv"))?;
    let mut summary = vec![format!("predict: {} horizons", cfg.n_list.len())];
    let mut pass = true;
    if oracle && !cfg.n_list.is_empty() {
        pass = worst <= cfg.oracle_tol;
        summary.push(format!(
            "oracle agreement: max abs diff {worst:e} (tolerance {:e}) {}",
            cfg.oracle_tol,
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    Ok(Outcome {
        files: vec![file],
        pass,
        summary,
    })
}

/// α_n, φ_{n,n}, φ̃_{n,n}; closed forms for scalar fractional noise, oracle values on request.
pub fn cmd_pacf(cfg: &ModelConfig, out: &Path, oracle: bool) -> Result<Outcome> {
    let m = cfg.build_model()?;
    let closed = is_fractional_noise(cfg);
    let compare = oracle || closed;
    let mut t = MatrixTable::new(m.q, compare);
    let mut worst = 0.0f64;
    if !cfg.n_list.is_empty() {
        let engine = Engine::new(&m, cfg.engine_options())?;
        let sols = engine.sweep(&cfg.n_list, false)?;
        let hist = if oracle { Some(oracle_history(&m, cfg.max_n())?) } else { None };
        for s in &sols {
            let cert = certificate(s);
            let reference: Option<(&str, [CMat; 4])> = if closed {
                let a = if s.n == 0 { 0.0 } else { psi_nn(m.d, s.n) };
                let v = u_n(m.d, s.n);
                let sc = |x: f64| CMat::from_element(1, 1, C64::new(x, 0.0));
                Some(("closed_form", [sc(a), sc(a), sc(a), sc(v)]))
            } else {
                hist.as_ref().map(|h| {
                    let o = h.at(s.n);
                    ("oracle", [o.alpha.clone(), o.phi_nn.clone(), o.phi_tilde_nn.clone(), o.v.clone()])
                })
            };
            let engine_vals = [&s.alpha, &s.phi_nn, &s.phi_tilde_nn, &s.v];
            for (k, name) in ["alpha", "phi_nn", "phi_tilde_nn", "v"].iter().enumerate() {
                if s.n == 0 && k < 3 {
                    continue;
                }
                let diff = reference.as_ref().map(|(_, r)| max_abs_diff(engine_vals[k], &r[k]));
                if let Some(dv) = diff {
                    worst = worst.max(dv);
                }
                t.push(s.n as i64, name, 0, "engine", cert, engine_vals[k], diff);
                if let Some((prov, r)) = &reference {
                    t.push(s.n as i64, name, 0, prov, 0.0, &r[k], diff);
                }
            }
        }
    }
    let file = t.write(out.join("pacf.csv"))?;
    let mut summary = vec![format!("pacf: {} horizons", cfg.n_list.len())];
    let mut pass = true;
    if compare && !cfg.n_list.is_empty() {
        pass = worst <= cfg.oracle_tol;
        summary.push(format!(
            "{} agreement: max abs diff {worst:e} (tolerance {:e}) {}",
            if closed { "closed form" } else { "oracle" },
            cfg.oracle_tol,
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    Ok(Outcome {
        files: vec![file],
        pass,
        summary,
    })
}

fn verdict_line(claim: &str, column: &str, v: &Verdict) -> String {
    format!(
        "{claim} {column}: {} (upper-half max {:e}, median n = {} value {:e}, factor {})",
        if v.pass { "PASS" } else { "FAIL" },
        v.upper_max,
        v.median_n,
        v.median_value,
        v.factor
    )
}

/// Writes a numeric table with named columns.
fn write_numeric(path: PathBuf, header: &[&str], rows: &[Vec<f64>], provenance: &str) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(&path)?;
    let mut h: Vec<&str> = header.to_vec();
    h.push("provenance");
    w.write_record(&h)?;
    for r in rows {
        let mut rec: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
        rec[0] = format!("{}", r[0] as usize);
        rec.push(provenance.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

/// Boundedness verdicts for Baxter's inequality and the v_n and PACF asymptotics.
pub fn cmd_verify(cfg: &ModelConfig, out: &Path, claims: &[Claim]) -> Result<Outcome> {
    if cfg.n_list.is_empty() {
        return Err(Error::InvalidInput("verify needs a non-empty n_list".into()));
    }
    if cfg.n_list.contains(&0) {
        return Err(Error::InvalidInput("verify horizons must be positive".into()));
    }
    let claims: Vec<Claim> = if claims.is_empty() {
        let mut all = vec![Claim::VAsymp, Claim::PacfAsymp];
        if cfg.d > 0.0 {
            all.insert(0, Claim::Baxter);
        }
        all
    } else {
        claims.to_vec()
    };
    if claims.contains(&Claim::Baxter) && cfg.d <= 0.0 {
        return Err(Error::InvalidInput(format!("baxter needs 0 < d < 1/2, got d = {}", cfg.d)));
    }
    let m = cfg.build_model()?;
    let engine = Engine::new(&m, cfg.engine_options())?;
    let ns = &cfg.n_list;
    let f = cfg.verdict_factor;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    let mut pass = true;
    let mut record = |claim: &str, column: &str, vals: Vec<f64>, summary: &mut Vec<String>| {
        let v = boundedness_verdict(ns, &vals, f);
        pass &= v.pass;
        summary.push(verdict_line(claim, column, &v));
    };
    let needs_asymp = claims.iter().any(|c| matches!(c, Claim::VAsymp | Claim::PacfAsymp));
    let asymp = if needs_asymp { Some(engine.asymptotics_report(ns)?) } else { None };
    for claim in &claims {
        match claim {
            Claim::Baxter => {
                let rows = engine.baxter_report(ns)?;
                let table: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.n as f64,
                            r.lhs,
                            r.nd_lhs,
                            r.rhs,
                            r.ratio,
                            r.lhs_backward,
                            r.nd_lhs_backward,
                            r.rhs_backward,
                            r.ratio_backward,
                            r.certificate,
                        ]
                    })
                    .collect();
                files.push(write_numeric(
                    out.join("baxter.csv"),
                    &[
                        "n",
                        "lhs",
                        "nd_lhs",
                        "rhs",
                        "ratio",
                        "lhs_backward",
                        "nd_lhs_backward",
                        "rhs_backward",
                        "ratio_backward",
                        "certificate",
                    ],
                    &table,
                    "engine",
                )?);
                record("baxter", "ratio", rows.iter().map(|r| r.ratio).collect(), &mut summary);
                record("baxter", "ratio_backward", rows.iter().map(|r| r.ratio_backward).collect(), &mut summary);
            }
            Claim::VAsymp => {
                let rep = asymp.as_ref().expect("asymptotics computed");
                let table: Vec<Vec<f64>> = rep
                    .rows
                    .iter()
                    .map(|r| vec![r.n as f64, r.v_residual, r.v_tilde_residual, r.certificate])
                    .collect();
                files.push(write_numeric(
                    out.join("v_asymp.csv"),
                    &["n", "v_residual", "v_tilde_residual", "certificate"],
                    &table,
                    "engine",
                )?);
                record("v-asymp", "v_residual", rep.rows.iter().map(|r| r.v_residual).collect(), &mut summary);
                record(
                    "v-asymp",
                    "v_tilde_residual",
                    rep.rows.iter().map(|r| r.v_tilde_residual).collect(),
                    &mut summary,
                );
            }
            Claim::PacfAsymp => {
                let rep = asymp.as_ref().expect("asymptotics computed");
                let table: Vec<Vec<f64>> = rep
                    .rows
                    .iter()
                    .map(|r| vec![r.n as f64, r.alpha_residual, r.phi_residual, r.certificate])
                    .collect();
                files.push(write_numeric(
                    out.join("pacf_asymp.csv"),
                    &["n", "alpha_residual", "phi_residual", "certificate"],
                    &table,
                    "engine",
                )?);
                let v = &rep.v_limit;
                let unitary = max_abs_diff(&(v.adjoint() * v), &CMat::identity(m.q, m.q));
                summary.push(format!("pacf-asymp V unitarity defect {unitary:e}"));
                record(
                    "pacf-asymp",
                    "alpha_residual",
                    rep.rows.iter().map(|r| r.alpha_residual).collect(),
                    &mut summary,
                );
            }
        }
    }
    let u = compute_u(&m)?;
    let v = compute_v(&m, &m.v_inf(), &m.v_tilde_inf())?;
    let claims_json: Vec<&str> = claims.iter().map(|c| c.name()).collect();
    files.push(write_json(
        out.join("verify_summary.json"),
        &json!({
            "claims": claims_json,
            "n_list": ns,
            "verdict_factor": f,
            "pass": pass,
            "u": mat_to_json(&u),
            "v": mat_to_json(&v),
            "lines": summary,
        }),
    )?);
    Ok(Outcome { files, pass, summary })
}
