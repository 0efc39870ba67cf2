//! Report envelopes and the CSV/JSON input formats.

use std::collections::HashSet;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::energy::{decompose_pair, pair_index, EnergyMeasure};
use crate::error::{Error, Result};
use crate::fractal::{FractalSpec, VertexId};
use crate::linalg::Matrix;
use crate::rational::{fmt_q, parse_q, sqrt_decimal, to_decimal, Q};

pub const SCHEMA: &str = "fraquad-report/1";

/// {"exact": "p/q", "decimal": "…"} with 15 significant digits.
pub fn num(x: &Q) -> Value {
    json!({ "exact": fmt_q(x), "decimal": to_decimal(x, 15) })
}

/// A square root kept as its exact square.
pub fn sqrt_num(square: &Q) -> Value {
    json!({ "square": fmt_q(square), "decimal": sqrt_decimal(square, 50) })
}

pub fn nums(xs: &[Q]) -> Value {
    Value::Array(xs.iter().map(num).collect())
}

pub fn matrix(m: &Matrix<Q>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| nums(r)).collect())
}

pub fn envelope(kind: &str, spec: &FractalSpec, body: Map<String, Value>) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.insert("kind".into(), json!(kind));
    out.insert("spec".into(), json!(spec.name));
    out.extend(body);
    Value::Object(out)
}

/// Reads back an exact value written by [`num`] (or a bare "p/q" string).
pub fn parse_num(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Object(o) => match o.get("exact") {
            Some(Value::String(s)) => parse_q(s),
            _ => Err(Error::Parse("expected an \"exact\" field".into())),
        },
        _ => Err(Error::Parse(format!("not an exact number: {v}"))),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("CSV is missing a {name:?} column")))
}

/// Sample-set CSV: a `vertex` column of "w:n" addresses, canonicalized on load.
pub fn read_set_csv(spec: &FractalSpec, text: &str) -> Result<Vec<VertexId>> {
    let mut rdr = reader(text);
    let col = column(rdr.headers()?, "vertex")?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v = spec.parse_vertex(rec.get(col).unwrap_or(""))?;
        if !seen.insert(v.clone()) {
            return Err(Error::Invalid(format!("sample set lists {v} twice")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Invalid("sample set is empty".into()));
    }
    Ok(out)
}

/// `vertex,<column>` pairs, values as "p/q" or decimals.
pub fn read_vertex_values(spec: &FractalSpec, text: &str, value_column: &str) -> Result<Vec<(VertexId, Q)>> {
    let mut rdr = reader(text);
    let headers = rdr.headers()?.clone();
    let vc = column(&headers, "vertex")?;
    let xc = column(&headers, value_column)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v = spec.parse_vertex(rec.get(vc).unwrap_or(""))?;
        let x = parse_q(rec.get(xc).unwrap_or(""))?;
        if !seen.insert(v.clone()) {
            return Err(Error::Invalid(format!("{v} listed twice")));
        }
        out.push((v, x));
    }
    Ok(out)
}

pub fn write_vertex_csv(spec: &FractalSpec, header: &str, rows: &[(VertexId, Q)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["vertex", header, "decimal"]).expect("in-memory write");
    for (v, x) in rows {
        w.write_record([spec.address(v), fmt_q(x), to_decimal(x, 15)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Decimal-only variant for float-mode output.
pub fn write_vertex_csv_decimal(spec: &FractalSpec, header: &str, rows: &[(VertexId, Q)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["vertex", header]).expect("in-memory write");
    for (v, x) in rows {
        w.write_record([spec.address(v), to_decimal(x, 15)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    basis: Option<String>,
    coeffs: Option<Vec<(usize, usize, String)>>,
    pair: Option<PairFile>,
    #[serde(default)]
    kusuoka: bool,
    #[serde(default)]
    normalize: bool,
}

#[derive(Deserialize)]
struct PairFile {
    h: Vec<String>,
    #[serde(rename = "H")]
    big_h: Vec<String>,
}

/// `{"basis":"jk","coeffs":[[j,k,"p/q"],…]}`, `{"pair":{"h":[…],"H":[…]}}` or `{"kusuoka":true}`;
/// `"normalize": true` rescales to total mass 1. Returns the measure and whether to normalize.
pub fn parse_energy_measure(text: &str, n0: usize) -> Result<(EnergyMeasure, bool)> {
    let f: MeasureFile = serde_json::from_str(text)?;
    let given = [f.coeffs.is_some(), f.pair.is_some(), f.kusuoka].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(Error::Parse("energy measure needs exactly one of coeffs, pair, kusuoka".into()));
    }
    let nu = if let Some(cs) = f.coeffs {
        if let Some(b) = &f.basis {
            if b != "jk" {
                return Err(Error::Unsupported(format!("basis {b:?}; only \"jk\" is accepted")));
            }
        }
        let mut c = vec![Q::from_integer(0.into()); n0 * (n0 - 1) / 2];
        for (j, k, v) in cs {
            if j == k || j >= n0 || k >= n0 {
                return Err(Error::OutOfRange(format!("pair ({j},{k}) for {n0} boundary points")));
            }
            c[pair_index(n0, j, k)] += parse_q(&v)?;
        }
        EnergyMeasure::from_coeffs(c)
    } else if let Some(p) = f.pair {
        let h = p.h.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let big_h = p.big_h.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        if h.len() != n0 || big_h.len() != n0 {
            return Err(Error::Invalid(format!("pair vectors must have {n0} entries")));
        }
        decompose_pair(&h, &big_h)
    } else {
        EnergyMeasure::kusuoka(n0)
    };
    Ok((nu, f.normalize))
}

pub fn energy_measure_json(nu: &EnergyMeasure, n0: usize) -> Value {
    let coeffs: Vec<Value> = crate::energy::pairs(n0)
        .into_iter()
        .zip(&nu.coeffs)
        .map(|((j, k), c)| json!([j, k, fmt_q(c)]))
        .collect();
    json!({ "basis": "jk", "coeffs": coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::sierpinski_gasket;
    use crate::rational::q;

    #[test]
    fn set_csv_canonicalizes() {
        let sg = sierpinski_gasket();
        let e = read_set_csv(&sg, "vertex\n:0\n0:1\n# comment\n").unwrap();
        assert_eq!(e[0], VertexId::boundary(0));
        assert!(read_set_csv(&sg, "vertex\n0:1\n1:0\n").is_err());
    }

    #[test]
    fn report_round_trip() {
        let x = q(-7, 27);
        assert_eq!(parse_num(&num(&x)).unwrap(), x);
        let v: Value = serde_json::from_str(&serde_json::to_string(&nums(&[q(1, 3), q(2, 1)])).unwrap()).unwrap();
        assert_eq!(parse_num(&v[1]).unwrap(), q(2, 1));
    }

    #[test]
    fn measure_files() {
        let (nu, norm) = parse_energy_measure(r#"{"pair":{"h":["1","0","0"],"H":["0","1","0"]}}"#, 3).unwrap();
        assert!(!norm);
        assert_eq!(nu.coeffs, vec![q(1, 1), q(0, 1), q(0, 1)]);
        let (nu, _) = parse_energy_measure(r#"{"basis":"jk","coeffs":[[1,2,"1/2"]]}"#, 3).unwrap();
        assert_eq!(nu.coeffs[2], q(1, 2));
        assert!(parse_energy_measure(r#"{"kusuoka":true,"pair":{"h":[],"H":[]}}"#, 3).is_err());
    }
}
