//! Serialization helpers and verdict rules shared by the CLI and tests.

use serde::ser::{SerializeSeq, Serializer};

use crate::linalg::{CMat, C64};

/// Complex number as "re+imj" with shortest round-trip exponents.
pub fn fmt_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:e}{}{:e}j", z.re, sign, z.im.abs())
}

/// Parses the output of `fmt_complex`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let body = s.strip_suffix('j')?;
    // split at the sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e' {
            split = Some(i);
            break;
        }
    }
    let i = split?;
    let re: f64 = body[..i].parse().ok()?;
    let im: f64 = body[i + 1..].parse().ok()?;
    Some(C64::new(re, if bytes[i] == b'-' { -im } else { im }))
}

/// Matrix as nested rows of [re, im] pairs.
pub fn mat_to_json(m: &CMat) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn ser_mat<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&mat_to_json(m), s)
}

pub fn ser_mats<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(ms.len()))?;
    for m in ms {
        seq.serialize_element(&mat_to_json(m))?;
    }
    seq.end()
}

/// Column-major flattening used in CSV rows.
pub fn flatten_col_major(m: &CMat) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Boundedness verdict: the running maximum over the upper half of the horizons must not
/// exceed `factor` times the value at the median horizon.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Verdict {
    pub median_n: usize,
    pub median_value: f64,
    pub upper_max: f64,
    pub factor: f64,
    pub pass: bool,
}

pub fn boundedness_verdict(ns: &[usize], values: &[f64], factor: f64) -> Verdict {
    assert_eq!(ns.len(), values.len());
    assert!(!ns.is_empty(), "verdict needs at least one horizon");
    let mut idx: Vec<usize> = (0..ns.len()).collect();
    idx.sort_by_key(|&i| ns[i]);
    let mid = idx[(idx.len() - 1) / 2];
    let upper = &idx[(idx.len() - 1) / 2..];
    let upper_max = upper.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let finite = values.iter().all(|v| v.is_finite());
    Verdict {
        median_n: ns[mid],
        median_value: values[mid],
        upper_max,
        factor,
        pass: finite && upper_max <= factor * values[mid],
    }
}
