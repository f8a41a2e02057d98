//! JSON forms for matrices, setups, states, partitions and correlation
//! records.
//!
//! Complex numbers are `[re, im]` pairs and matrices are
//! `{"dim": d, "rows": [[[re, im], ...], ...]}` in row-major order. Parse
//! errors name the offending field with a path such as `sites[1].Aprime`.

use serde_json::{json, Map, Value};

use crate::bell::{BellPair, CorrelatorCoefficients, DichotomicObservable, MeasurementSetup, Setting, SitePair};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityOperator};
use crate::measurement::{CorrelationEntry, CorrelationRecord};
use crate::states::{self, Partition};

/// Prefix the field of a validation error with `path`.
fn at(path: &str, err: Error) -> Error {
    match err {
        Error::Invalid { field, reason } if !path.is_empty() => Error::Invalid {
            field: format!("{path}.{field}"),
            reason,
        },
        other => other,
    }
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::invalid("json", e.to_string()))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::invalid(if path.is_empty() { "json" } else { path }, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::invalid(join(path, name), "missing"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| Error::invalid(path, "expected a nonnegative integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::invalid(path, "expected a finite number"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::invalid(path, "expected an array"))
}

fn complex_from(v: &Value, path: &str) -> Result<num_complex::Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(as_f64(re, path)?, as_f64(im, path)?)),
        _ => Err(Error::invalid(path, "expected an [re, im] pair")),
    }
}

fn complex_to(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_from_value(v: &Value, path: &str) -> Result<CMatrix> {
    let obj = object(v, path)?;
    let dim_path = join(path, "dim");
    let dim = as_usize(field(obj, path, "dim")?, &dim_path)?;
    if dim == 0 {
        return Err(Error::invalid(dim_path, "must be at least 1"));
    }
    linalg::total_dim(&[dim])?;
    let rows_path = join(path, "rows");
    let rows = as_array(field(obj, path, "rows")?, &rows_path)?;
    if rows.len() != dim {
        return Err(Error::invalid(rows_path, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        let row_path = format!("{rows_path}[{i}]");
        let row = as_array(row, &row_path)?;
        if row.len() != dim {
            return Err(Error::invalid(row_path, format!("expected {dim} entries, found {}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            entries.push(complex_from(z, &format!("{row_path}[{j}]"))?);
        }
    }
    CMatrix::from_row_major(dim, &entries)
}

pub fn matrix_to_value(m: &CMatrix) -> Value {
    let rows: Vec<Value> = m
        .rows()
        .into_iter()
        .map(|row| Value::Array(row.into_iter().map(complex_to).collect()))
        .collect();
    json!({"dim": m.dim(), "rows": rows})
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    matrix_from_value(&parse_value(text)?, "")
}

fn bloch_from(v: &Value, path: &str) -> Result<[f64; 3]> {
    match v.as_array().map(Vec::as_slice) {
        Some([x, y, z]) => Ok([as_f64(x, path)?, as_f64(y, path)?, as_f64(z, path)?]),
        _ => Err(Error::invalid(path, "expected [x, y, z]")),
    }
}

/// A matrix or `{"bloch": [x, y, z]}` for `a·σ`.
pub fn observable_from_value(v: &Value, path: &str) -> Result<DichotomicObservable> {
    let obj = object(v, path)?;
    let obs = match obj.get("bloch") {
        Some(b) => DichotomicObservable::bloch(bloch_from(b, &join(path, "bloch"))?),
        None => DichotomicObservable::new(matrix_from_value(v, path)?),
    };
    obs.map_err(|e| match e {
        Error::Invalid { reason, .. } => Error::invalid(path, reason),
        other => other,
    })
}

pub fn setup_from_value(v: &Value) -> Result<MeasurementSetup> {
    let obj = object(v, "")?;
    let sites = as_array(field(obj, "", "sites")?, "sites")?;
    if sites.is_empty() {
        return Err(Error::invalid("sites", "need at least one site"));
    }
    let pairs = sites
        .iter()
        .enumerate()
        .map(|(j, site)| {
            let path = format!("sites[{j}]");
            let obj = object(site, &path)?;
            let a = observable_from_value(field(obj, &path, "A")?, &join(&path, "A"))?;
            let ap = observable_from_value(field(obj, &path, "Aprime")?, &join(&path, "Aprime"))?;
            if let Some(d) = obj.get("dim") {
                let dim_path = join(&path, "dim");
                let d = as_usize(d, &dim_path)?;
                if d != a.site_dim() || d != ap.site_dim() {
                    return Err(Error::invalid(
                        dim_path,
                        format!("{d} disagrees with the observables' dimensions"),
                    ));
                }
            }
            SitePair::new(a, ap).map_err(|e| at(&path, e))
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSetup::new(pairs)
}

pub fn parse_setup(text: &str) -> Result<MeasurementSetup> {
    setup_from_value(&parse_value(text)?)
}

pub fn setup_to_value(setup: &MeasurementSetup) -> Value {
    let sites: Vec<Value> = setup
        .sites()
        .iter()
        .map(|s| {
            json!({
                "dim": s.dim(),
                "A": matrix_to_value(s.a.matrix()),
                "Aprime": matrix_to_value(s.a_prime.matrix()),
            })
        })
        .collect();
    json!({ "sites": sites })
}

/// `{"dim": D, "density": <matrix>}`, `{"ghz": {"n": n}}` or
/// `{"ghz_noise": {"n": n, "x": x}}`.
pub fn state_from_value(v: &Value) -> Result<DensityOperator> {
    let obj = object(v, "")?;
    if let Some(g) = obj.get("ghz") {
        let g = object(g, "ghz")?;
        let n = as_usize(field(g, "ghz", "n")?, "ghz.n")?;
        return states::ghz(n).map_err(|e| at("ghz", e));
    }
    if let Some(g) = obj.get("ghz_noise") {
        let g = object(g, "ghz_noise")?;
        let n = as_usize(field(g, "ghz_noise", "n")?, "ghz_noise.n")?;
        let x = as_f64(field(g, "ghz_noise", "x")?, "ghz_noise.x")?;
        return states::ghz_noise(n, x).map_err(|e| at("ghz_noise", e));
    }
    let m = matrix_from_value(field(obj, "", "density")?, "density")?;
    if let Some(d) = obj.get("dim") {
        let d = as_usize(d, "dim")?;
        if d != m.dim() {
            return Err(Error::invalid("dim", format!("{d} disagrees with the density's {}", m.dim())));
        }
    }
    DensityOperator::new(m).map_err(|e| match e {
        Error::Invalid { reason, .. } => Error::invalid("density", reason),
        other => other,
    })
}

pub fn parse_state(text: &str) -> Result<DensityOperator> {
    state_from_value(&parse_value(text)?)
}

pub fn state_to_value(rho: &DensityOperator) -> Value {
    json!({"dim": rho.dim(), "density": matrix_to_value(rho.matrix())})
}

/// `{"n": n, "blocks": [[1], [2, 3]]}` with 1-based sites.
pub fn partition_from_value(v: &Value) -> Result<Partition> {
    let obj = object(v, "")?;
    let n = as_usize(field(obj, "", "n")?, "n")?;
    let blocks = as_array(field(obj, "", "blocks")?, "blocks")?
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let path = format!("blocks[{i}]");
            as_array(b, &path)?
                .iter()
                .map(|s| as_usize(s, &path))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_one_based(n, &blocks)
}

pub fn parse_partition(text: &str) -> Result<Partition> {
    partition_from_value(&parse_value(text)?)
}

pub fn partition_to_value(p: &Partition) -> Value {
    json!({"n": p.n(), "blocks": p.one_based_blocks()})
}

/// Standard error of a mean of `shots` outcomes in `{−1, 1}` with mean `e`.
pub fn sampled_se(e: f64, shots: u64) -> f64 {
    if shots == 0 {
        0.0
    } else {
        ((1.0 - e * e).max(0.0) / shots as f64).sqrt()
    }
}

/// `{"n": n, "records": [{"s": "010", "E": 0.98, "shots": 10000, "se": 0.002}]}`.
///
/// `shots` defaults to 0 (exact value). A missing `se` is derived from `E`
/// and `shots`.
pub fn correlations_from_value(v: &Value) -> Result<CorrelationRecord> {
    let obj = object(v, "")?;
    let n = as_usize(field(obj, "", "n")?, "n")?;
    if n == 0 || n > 30 {
        return Err(Error::invalid("n", "must be between 1 and 30"));
    }
    let entries = as_array(field(obj, "", "records")?, "records")?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let path = format!("records[{i}]");
            let r = object(r, &path)?;
            let s_path = join(&path, "s");
            let s = field(r, &path, "s")?
                .as_str()
                .ok_or_else(|| Error::invalid(&s_path, "expected a 0/1 string"))?;
            let setting: Setting = s.parse().map_err(|e: Error| match e {
                Error::Invalid { reason, .. } => Error::invalid(&s_path, reason),
                other => other,
            })?;
            if setting.n() != n {
                return Err(Error::invalid(s_path, format!("{s:?} does not have {n} sites")));
            }
            let estimate = as_f64(field(r, &path, "E")?, &join(&path, "E"))?;
            let shots = match r.get("shots") {
                Some(v) => v
                    .as_u64()
                    .ok_or_else(|| Error::invalid(join(&path, "shots"), "expected a nonnegative integer"))?,
                None => 0,
            };
            let se = match r.get("se") {
                Some(v) => as_f64(v, &join(&path, "se"))?,
                None => sampled_se(estimate, shots),
            };
            Ok(CorrelationEntry {
                setting,
                estimate,
                shots,
                se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationRecord::new(n, entries)
}

pub fn parse_correlations(text: &str) -> Result<CorrelationRecord> {
    correlations_from_value(&parse_value(text)?)
}

pub fn correlations_to_value(record: &CorrelationRecord) -> Value {
    let records: Vec<Value> = record
        .entries()
        .iter()
        .map(|e| json!({"s": e.setting.to_string(), "E": e.estimate, "shots": e.shots, "se": e.se}))
        .collect();
    json!({"n": record.n(), "records": records})
}

/// `B`, `B'` with 1-based subset and the coefficient table over the
/// subset's setting strings.
pub fn bell_pair_to_value(pair: &BellPair) -> Result<Value> {
    let coeffs = CorrelatorCoefficients::new(pair.subset().len())?;
    let table: Vec<Value> = coeffs
        .table()
        .into_iter()
        .map(|(s, cb, cbp)| json!({"s": s.to_string(), "c": cb, "cprime": cbp}))
        .collect();
    Ok(json!({
        "subset": pair.subset().iter().map(|j| j + 1).collect::<Vec<_>>(),
        "B": matrix_to_value(pair.b()),
        "Bprime": matrix_to_value(pair.b_prime()),
        "coefficients": table,
    }))
}

/// `"1,2,3"` to 0-based site indices.
pub fn parse_subset(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let j: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::invalid("subset", format!("{s:?} is not a site number")))?;
            j.checked_sub(1)
                .ok_or_else(|| Error::invalid("subset", "sites are numbered from 1"))
        })
        .collect()
}
