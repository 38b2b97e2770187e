//! Report and curve emission.
//!
//! `report.json` is pretty-printed with fixed field order. Curves are CSV
//! files with columns `abscissa,value,stderr_lo,stderr_hi`; numbers use the
//! shortest representation that parses back to the same `f64`, and missing
//! error bars are left empty.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::certify::CertReport;
use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "abscissa,value,stderr_lo,stderr_hi";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub value: f64,
    pub stderr_lo: Option<f64>,
    pub stderr_hi: Option<f64>,
}

impl CurvePoint {
    pub fn exact(abscissa: f64, value: f64) -> Self {
        Self {
            abscissa,
            value,
            stderr_lo: None,
            stderr_hi: None,
        }
    }
}

/// Named series written to `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn new(name: impl Into<String>, points: Vec<CurvePoint>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.abscissa,
                p.value,
                opt(p.stderr_lo),
                opt(p.stderr_hi)
            ));
        }
        out
    }
}

/// Parses a curve CSV written by [`Curve::to_csv`].
pub fn parse_curve(name: &str, text: &str) -> Result<Curve> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::Parse {
            row: 1,
            message: format!("curve header must be `{CURVE_HEADER}`"),
        });
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                row,
                message: "expected 4 fields".into(),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                row,
                message: format!("not a number: `{s}`"),
            })
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        points.push(CurvePoint {
            abscissa: num(f[0])?,
            value: num(f[1])?,
            stderr_lo: opt(f[2])?,
            stderr_hi: opt(f[3])?,
        });
    }
    Ok(Curve::new(name, points))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Serialised `report.json` contents.
pub fn report_json(report: &CertReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Validation(format!("report serialisation failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `report.json` (when given) and one CSV per curve into `out_dir`,
/// creating it if needed. Returns the written paths.
pub fn emit_report(
    report: Option<&CertReport>,
    curves: &[Curve],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(r) = report {
        let path = dir.join("report.json");
        write_file(&path, &report_json(r)?)?;
        written.push(path);
    }
    for c in curves {
        let path = dir.join(format!("{}.csv", c.name));
        write_file(&path, &c.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<CertReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        row: e.line(),
        message: e.to_string(),
    })
}
