//! Point files and result writers.

use std::io::Write;
use std::path::Path;

use cubepu::bench::ExperimentResult;
use cubepu::{DataSite, Point3, UnitCube};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no data rows")]
    Empty,
}

/// Rows of a point file: positions only, or positions with values.
#[derive(Debug, Clone, PartialEq)]
pub enum PointFile {
    Points(Vec<Point3>),
    Sites(Vec<DataSite>),
}

impl PointFile {
    pub fn positions(&self) -> Vec<Point3> {
        match self {
            Self::Points(p) => p.clone(),
            Self::Sites(s) => s.iter().map(|s| s.position).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Points(p) => p.len(),
            Self::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_points(path: &Path) -> Result<PointFile, ReadError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_points(&text)
}

/// Parses rows `x y z [f]` separated by whitespace or commas; `#` starts a
/// comment line.
pub fn parse_points(text: &str) -> Result<PointFile, ReadError> {
    let cube = UnitCube::unit();
    let mut arity = None;
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fail = |message: String| ReadError::Parse { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(fail(format!("expected 3 or 4 fields, found {}", fields.len())));
        }
        match arity {
            None => arity = Some(fields.len()),
            Some(a) if a != fields.len() => {
                return Err(fail(format!("{} fields after rows of {a}", fields.len())));
            }
            _ => {}
        }
        let mut row = [0.0f64; 4];
        for (slot, field) in row.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| fail(format!("`{field}` is not a number")))?;
            if !slot.is_finite() {
                return Err(fail(format!("`{field}` is not finite")));
            }
        }
        let p = Point3::new(row[0], row[1], row[2]);
        if !cube.contains(&p) {
            return Err(fail(format!("({}, {}, {}) lies outside [0,1]³", p.x, p.y, p.z)));
        }
        rows.push(row);
    }
    match arity {
        None => Err(ReadError::Empty),
        Some(3) => Ok(PointFile::Points(
            rows.iter().map(|r| Point3::new(r[0], r[1], r[2])).collect(),
        )),
        Some(_) => Ok(PointFile::Sites(
            rows.iter()
                .map(|r| DataSite::new(Point3::new(r[0], r[1], r[2]), r[3]))
                .collect(),
        )),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub const RESULT_HEADER: &str =
    "n,d,q,kernel,shape,function,mmax,mode,rmse,max_err,fit_s,eval_s,total_s,warn_uncovered,warn_illcond,warn_empty";

pub fn result_csv_row(r: &ExperimentResult) -> String {
    [
        r.n.to_string(),
        r.d.to_string(),
        r.q.to_string(),
        r.kernel.to_string(),
        fmt_real(r.shape),
        r.function.to_string(),
        r.mmax.map(|m| m.to_string()).unwrap_or_default(),
        r.mode.to_string(),
        fmt_real(r.rmse),
        fmt_real(r.max_err),
        fmt_real(r.fit_s),
        fmt_real(r.eval_s),
        fmt_real(r.total_s),
        r.warnings.uncovered.to_string(),
        r.warnings.ill_conditioned.to_string(),
        r.warnings.empty.to_string(),
    ]
    .join(",")
}

fn real(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn result_json(r: &ExperimentResult) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), json!(r.n));
    m.insert("d".into(), json!(r.d));
    m.insert("q".into(), json!(r.q));
    m.insert("kernel".into(), json!(r.kernel));
    m.insert("shape".into(), real(r.shape));
    m.insert("function".into(), json!(r.function));
    m.insert("mmax".into(), json!(r.mmax));
    m.insert("mode".into(), json!(r.mode));
    m.insert("rmse".into(), real(r.rmse));
    m.insert("max_err".into(), real(r.max_err));
    m.insert("fit_s".into(), real(r.fit_s));
    m.insert("eval_s".into(), real(r.eval_s));
    m.insert("total_s".into(), real(r.total_s));
    m.insert("warn_uncovered".into(), json!(r.warnings.uncovered));
    m.insert("warn_illcond".into(), json!(r.warnings.ill_conditioned));
    m.insert("warn_empty".into(), json!(r.warnings.empty));
    Value::Object(m)
}

pub fn write_results_csv(w: &mut dyn Write, results: &[ExperimentResult]) -> std::io::Result<()> {
    writeln!(w, "{RESULT_HEADER}")?;
    for r in results {
        writeln!(w, "{}", result_csv_row(r))?;
    }
    Ok(())
}

/// One object for a single result, an array otherwise.
pub fn write_results_json(w: &mut dyn Write, results: &[ExperimentResult]) -> std::io::Result<()> {
    let value = match results {
        [one] => result_json(one),
        many => Value::Array(many.iter().map(result_json).collect()),
    };
    writeln!(w, "{}", serde_json::to_string_pretty(&value)?)
}

pub fn write_values_csv(w: &mut dyn Write, points: &[Point3], values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "x,y,z,value")?;
    for (p, v) in points.iter().zip(values) {
        writeln!(w, "{},{},{},{}", fmt_real(p.x), fmt_real(p.y), fmt_real(p.z), fmt_real(*v))?;
    }
    Ok(())
}

pub fn write_values_json(w: &mut dyn Write, points: &[Point3], values: &[f64]) -> std::io::Result<()> {
    let rows: Vec<Value> = points
        .iter()
        .zip(values)
        .map(|(p, v)| json!({ "x": real(p.x), "y": real(p.y), "z": real(p.z), "value": real(*v) }))
        .collect();
    writeln!(w, "{}", serde_json::to_string_pretty(&Value::Array(rows))?)
}

pub fn write_curve_csv(w: &mut dyn Write, curve: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "shape,rmse")?;
    for (s, e) in curve {
        writeln!(w, "{},{}", fmt_real(*s), fmt_real(*e))?;
    }
    Ok(())
}

pub fn write_curve_json(w: &mut dyn Write, curve: &[(f64, f64)], best: (f64, f64)) -> std::io::Result<()> {
    let points: Vec<Value> = curve
        .iter()
        .map(|(s, e)| json!({ "shape": real(*s), "rmse": real(*e) }))
        .collect();
    let value = json!({
        "curve": points,
        "best": { "shape": real(best.0), "rmse": real(best.1) },
    });
    writeln!(w, "{}", serde_json::to_string_pretty(&value)?)
}
