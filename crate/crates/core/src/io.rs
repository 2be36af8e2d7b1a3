//! JSON problem files and witness reports.
//!
//! Ring elements are written `{"coeffs": [c0, c1, ...], "denom_exp": k}`
//! for `(c0 + c1·θ + ...) / m^k`. Coefficients are JSON integers, or decimal
//! strings when they do not fit in 64 bits. A bare integer is accepted as
//! an element. Floats are rejected.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::finite::{FiniteClosure, ResidueMatrix};
use crate::matrix::{Matrix, WordCertificate};
use crate::ring::{Ring, RingElement};
use crate::separator::{CertifiedBound, PAdjustment, SeparationMethod, SeparationWitness, Verdict};
use crate::subgroup::{Bounds, NonMemberReason};
use crate::units::{RingSpec, UnitGroupBasis};

/// Malformed input, located by line/column or by field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for InputError {}

fn err(path: &str, message: impl Into<String>) -> InputError {
    InputError { location: format!("field `{path}`"), message: message.into() }
}

pub fn parse_json(text: &str, source: &str) -> Result<Value, InputError> {
    serde_json::from_str(text).map_err(|e| InputError {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, InputError> {
    obj.get(key).ok_or_else(|| err(&join(path, key), "missing"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, InputError> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, InputError> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn as_u64(v: &Value, path: &str) -> Result<u64, InputError> {
    v.as_u64().ok_or_else(|| err(path, "expected a nonnegative integer"))
}

pub fn parse_integer(v: &Value, path: &str) -> Result<BigInt, InputError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(err(path, "decimal floats are not ring elements"))
            }
        }
        Value::String(s) => s.trim().parse::<BigInt>().map_err(|_| err(path, format!("`{s}` is not an integer"))),
        _ => Err(err(path, "expected an integer")),
    }
}

pub fn parse_element(ring: &Ring<BigInt>, v: &Value, path: &str) -> Result<RingElement<BigInt>, InputError> {
    let (coeffs, k) = match v {
        Value::Object(obj) => {
            let cs = as_array(field(obj, "coeffs", path)?, &join(path, "coeffs"))?;
            let coeffs = cs
                .iter()
                .enumerate()
                .map(|(i, c)| parse_integer(c, &format!("{}[{i}]", join(path, "coeffs"))))
                .collect::<Result<Vec<_>, _>>()?;
            let k = match obj.get("denom_exp") {
                None => 0,
                Some(d) => u32::try_from(as_u64(d, &join(path, "denom_exp"))?)
                    .map_err(|_| err(&join(path, "denom_exp"), "too large"))?,
            };
            (coeffs, k)
        }
        other => (vec![parse_integer(other, path)?], 0),
    };
    ring.element(coeffs, k).map_err(|e| err(path, e.to_string()))
}

pub fn element_json(e: &RingElement<BigInt>) -> Value {
    let coeffs: Vec<Value> = e
        .coeffs()
        .iter()
        .map(|c| match c.to_i64() {
            Some(i) => json!(i),
            None => json!(c.to_string()),
        })
        .collect();
    json!({ "coeffs": coeffs, "denom_exp": e.denom_exp() })
}

pub fn matrix_json(m: &Matrix<BigInt>) -> Value {
    Value::Array(m.rows().iter().map(|row| Value::Array(row.iter().map(element_json).collect())).collect())
}

pub fn parse_matrix(ring: &Ring<BigInt>, n: usize, v: &Value, path: &str) -> Result<Matrix<BigInt>, InputError> {
    let rows = as_array(v, path)?;
    if rows.len() != n {
        return Err(err(path, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = as_array(row, &rp)?;
        if row.len() != n {
            return Err(err(&rp, format!("expected {n} entries, found {}", row.len())));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, e)| parse_element(ring, e, &format!("{rp}[{j}]")))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Matrix::from_rows(out).map_err(|e| err(path, e.to_string()))
}

/// `Z`, `Z[1/m]`, `Z[i]`, `Z[sqrt2]`.
pub fn parse_ring_shorthand(s: &str) -> Option<RingSpec<BigInt>> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    match s.as_str() {
        "Z" => Some(RingSpec::integers()),
        "Z[i]" => Some(RingSpec::gaussian_integers()),
        "Z[sqrt2]" | "Z[√2]" => Some(RingSpec::real_quadratic_sqrt2()),
        _ => {
            let m: u64 = s.strip_prefix("Z[1/")?.strip_suffix(']')?.parse().ok()?;
            (m >= 1).then(|| RingSpec::integers_localized(m))
        }
    }
}

pub fn parse_ring(v: &Value, path: &str) -> Result<RingSpec<BigInt>, InputError> {
    if let Value::String(s) = v {
        return parse_ring_shorthand(s).ok_or_else(|| err(path, format!("unknown ring `{s}`")));
    }
    let obj = as_object(v, path)?;
    let poly_path = join(path, "min_poly");
    let min_poly = as_array(field(obj, "min_poly", path)?, &poly_path)?
        .iter()
        .enumerate()
        .map(|(i, c)| parse_integer(c, &format!("{poly_path}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let m = match obj.get("inverted_modulus") {
        None => 1,
        Some(v) => as_u64(v, &join(path, "inverted_modulus"))?,
    };
    let ring = Ring::new(min_poly.clone(), m).map_err(|e| err(&poly_path, e.to_string()))?;
    let units_path = join(path, "units");
    let Some(units) = obj.get("units") else {
        if min_poly.len() == 2 {
            return Ok(RingSpec::integers_localized(m));
        }
        return Err(err(&units_path, "a unit basis is required beyond degree 1"));
    };
    let units = as_object(units, &units_path)?;
    let tor_path = join(&units_path, "torsion");
    let (tgen, order) = match units.get("torsion") {
        None => (ring.int(-1), 2),
        Some(t) => {
            let t = as_object(t, &tor_path)?;
            let g = parse_element(&ring, field(t, "gen", &tor_path)?, &join(&tor_path, "gen"))?;
            (g, as_u64(field(t, "order", &tor_path)?, &join(&tor_path, "order"))?)
        }
    };
    let free_path = join(&units_path, "free");
    let free = match units.get("free") {
        None => vec![],
        Some(f) => as_array(f, &free_path)?
            .iter()
            .enumerate()
            .map(|(i, e)| parse_element(&ring, e, &format!("{free_path}[{i}]")))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let basis = UnitGroupBasis::new(&ring, tgen, order, free).map_err(|e| err(&units_path, e.to_string()))?;
    Ok(RingSpec::new(ring, basis))
}

pub fn parse_bounds(v: Option<&Value>) -> Result<Bounds, InputError> {
    match v {
        None => Ok(Bounds::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| err("bounds", e.to_string())),
    }
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub spec: RingSpec<BigInt>,
    pub n: usize,
    pub subgroup_generators: Vec<Matrix<BigInt>>,
    pub element_x: Option<Matrix<BigInt>>,
    pub bounds: Bounds,
}

impl ProblemFile {
    pub fn parse(text: &str, source: &str) -> Result<Self, InputError> {
        let v = parse_json(text, source)?;
        let obj = as_object(&v, "")?;
        let spec = parse_ring(field(obj, "ring", "")?, "ring")?;
        let n = usize::try_from(as_u64(field(obj, "n", "")?, "n")?).map_err(|_| err("n", "too large"))?;
        if n == 0 {
            return Err(err("n", "must be positive"));
        }
        let gens = as_array(field(obj, "subgroup_generators", "")?, "subgroup_generators")?
            .iter()
            .enumerate()
            .map(|(i, m)| parse_matrix(&spec.ring, n, m, &format!("subgroup_generators[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let element_x = obj.get("element_x").map(|m| parse_matrix(&spec.ring, n, m, "element_x")).transpose()?;
        let bounds = parse_bounds(obj.get("bounds"))?;
        Ok(ProblemFile { spec, n, subgroup_generators: gens, element_x, bounds })
    }

    pub fn require_x(&self) -> Result<&Matrix<BigInt>, InputError> {
        self.element_x.as_ref().ok_or_else(|| err("element_x", "missing"))
    }
}

pub fn residue_matrix_json(c: &FiniteClosure, a: &ResidueMatrix) -> Value {
    let arith = c.arith();
    let n = arith.dim();
    Value::Array((0..n).map(|i| Value::Array((0..n).map(|j| json!(arith.entry(a, i, j))).collect())).collect())
}

/// Serialized form of a separation outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<SeparationMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<WordCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonmember_reason: Option<NonMemberReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertifiedBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_adjustment: Option<Value>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default)]
    pub timing_ms: u64,
}

fn p_adjustment_json(p: &PAdjustment<BigInt>) -> Value {
    let mut v = json!({
        "p": p.p,
        "layer": p.layer,
        "layer_ranks": p.layer_ranks,
        "w_index": p.w_index,
        "level": p.level,
        "n_index": p.n_index,
    });
    if let Some(gens) = &p.h1_generators {
        v["h1_generators"] = Value::Array(gens.iter().map(matrix_json).collect());
    }
    if let Some(i) = p.h1_index {
        v["h1_index"] = json!(i);
    }
    v
}

impl WitnessReport {
    pub fn from_witness(w: &SeparationWitness<BigInt>, bounds: &Bounds, timing_ms: u64) -> Self {
        WitnessReport {
            verdict: w.verdict,
            level: w.level,
            method: w.method,
            word: w.word.clone(),
            nonmember_reason: w.nonmember_reason,
            certificate: w.certified_bound.clone(),
            closure_size: w.closure_size,
            p_adjustment: w.p_adjustment.as_ref().map(p_adjustment_json),
            diagnostics: w.diagnostics.clone(),
            bounds: bounds.clone(),
            timing_ms,
        }
    }

    /// The replayable part of the report.
    pub fn to_witness(&self) -> SeparationWitness<BigInt> {
        SeparationWitness {
            verdict: self.verdict,
            level: self.level,
            method: self.method,
            word: self.word.clone(),
            nonmember_reason: self.nonmember_reason,
            certified_bound: self.certificate.clone(),
            closure_size: self.closure_size,
            p_adjustment: None,
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, InputError> {
        let v = parse_json(text, source)?;
        serde_json::from_value(v).map_err(|e| InputError { location: source.to_string(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_literals() {
        let spec = RingSpec::<BigInt>::integers_localized(2);
        let r = &spec.ring;
        let v: Value = serde_json::from_str(r#"{"coeffs": [3], "denom_exp": 1}"#).unwrap();
        let e = parse_element(r, &v, "x").unwrap();
        assert_eq!(e, r.fraction(3, 1));
        assert_eq!(parse_element(r, &element_json(&e), "x").unwrap(), e);
        let big: Value = serde_json::from_str(r#"{"coeffs": ["123456789012345678901234567890"]}"#).unwrap();
        let e = parse_element(r, &big, "x").unwrap();
        assert_eq!(parse_element(r, &element_json(&e), "x").unwrap(), e);
        assert_eq!(parse_element(r, &json!(-4), "x").unwrap(), r.int(-4));
        let bad = parse_element(r, &json!(1.5), "m[0][1]").unwrap_err();
        assert_eq!(bad.location, "field `m[0][1]`");
    }

    #[test]
    fn ring_shorthands() {
        assert_eq!(parse_ring_shorthand("Z").unwrap().modulus(), 1);
        assert_eq!(parse_ring_shorthand("Z[1/6]").unwrap().modulus(), 6);
        assert_eq!(parse_ring_shorthand("Z[i]").unwrap().degree(), 2);
        assert_eq!(parse_ring_shorthand("Z[sqrt2]").unwrap().units.free_rank(), 1);
        assert!(parse_ring_shorthand("Q").is_none());
    }

    #[test]
    fn problem_errors_are_located() {
        let e = ProblemFile::parse("{\n \"ring\": \"Z\",\n \"n\": 2,\n", "p.json").unwrap_err();
        assert!(e.location.starts_with("p.json:4:"), "{e}");
        let text = r#"{"ring": "Z", "n": 2, "subgroup_generators": [[[1, 2], [0]]]}"#;
        let e = ProblemFile::parse(text, "p.json").unwrap_err();
        assert_eq!(e.location, "field `subgroup_generators[0][1]`");
        let text = r#"{"ring": {"min_poly": [1, 0, 1], "inverted_modulus": 1}, "n": 2, "subgroup_generators": []}"#;
        let e = ProblemFile::parse(text, "p.json").unwrap_err();
        assert_eq!(e.location, "field `ring.units`");
    }

    #[test]
    fn explicit_ring_block() {
        let text = r#"{
            "ring": {"min_poly": [1, 0, 1], "inverted_modulus": 1,
                     "units": {"torsion": {"gen": {"coeffs": [0, 1]}, "order": 4}, "free": []}},
            "n": 2,
            "subgroup_generators": [[[1, {"coeffs": [0, 2]}], [0, 1]]],
            "element_x": [[1, 1], [0, 1]],
            "bounds": {"search_level": 20}
        }"#;
        let p = ProblemFile::parse(text, "p.json").unwrap();
        assert_eq!((p.spec.degree(), p.bounds.search_level, p.bounds.closure_budget), (2, 20, 1_000_000));
        assert_eq!(p.subgroup_generators[0].get(0, 1).coeffs(), &[BigInt::from(0), BigInt::from(2)]);
    }
}
