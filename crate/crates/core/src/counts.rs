//! Count tables: CSV ingestion, conversion to frequencies and multinomial
//! (re)sampling.
//!
//! Observational files have the header `x,a,b,count`; interventional files
//! `do_a,x,b,count`. Duplicate rows are summed and zero cells are kept as
//! structural zeros without smoothing.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::process::{Behavior, DoTable};
use crate::scalar::Prob;

pub const OBSERVATIONAL_HEADER: [&str; 4] = ["x", "a", "b", "count"];
pub const INTERVENTIONAL_HEADER: [&str; 4] = ["do_a", "x", "b", "count"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountKind {
    Observational,
    /// The `a` index records the intervention `do(A=a)` rather than a
    /// measured outcome.
    Interventional,
}

/// One CSV record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRow {
    pub x: String,
    pub a: usize,
    pub b: usize,
    pub count: u64,
}

/// Aggregated counts `cells[x][a][b]` over a setting alphabet kept in order
/// of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    kind: CountKind,
    settings: Vec<String>,
    cells: Vec<[[u64; 2]; 2]>,
}

impl CountTable {
    pub fn new(kind: CountKind, settings: Vec<String>, cells: Vec<[[u64; 2]; 2]>) -> Result<Self> {
        if settings.is_empty() || settings.len() != cells.len() {
            return Err(Error::Validation(format!(
                "{} setting labels for {} count rows",
                settings.len(),
                cells.len()
            )));
        }
        for (i, s) in settings.iter().enumerate() {
            if settings[..i].contains(s) {
                return Err(Error::Validation(format!("duplicate setting label {s}")));
            }
        }
        let t = Self {
            kind,
            settings,
            cells,
        };
        t.check_totals()?;
        Ok(t)
    }

    /// Builds a table from records, summing duplicates.
    pub fn from_rows(kind: CountKind, rows: &[CountRow]) -> Result<Self> {
        let mut settings: Vec<String> = Vec::new();
        let mut cells: Vec<[[u64; 2]; 2]> = Vec::new();
        for r in rows {
            if r.a > 1 || r.b > 1 {
                return Err(Error::Validation(format!(
                    "outcomes must be 0 or 1, got a={} b={}",
                    r.a, r.b
                )));
            }
            let idx = match settings.iter().position(|s| *s == r.x) {
                Some(i) => i,
                None => {
                    settings.push(r.x.clone());
                    cells.push([[0; 2]; 2]);
                    settings.len() - 1
                }
            };
            cells[idx][r.a][r.b] = cells[idx][r.a][r.b]
                .checked_add(r.count)
                .ok_or_else(|| Error::Validation("count overflow".into()))?;
        }
        if settings.is_empty() {
            return Err(Error::Validation("count table is empty".into()));
        }
        Self::new(kind, settings, cells)
    }

    fn check_totals(&self) -> Result<()> {
        for (s, c) in self.settings.iter().zip(&self.cells) {
            match self.kind {
                CountKind::Observational => {
                    if c.iter().flatten().sum::<u64>() == 0 {
                        return Err(Error::Validation(format!("setting {s} has zero shots")));
                    }
                }
                CountKind::Interventional => {
                    for (a, row) in c.iter().enumerate() {
                        if row[0] + row[1] == 0 {
                            return Err(Error::Validation(format!(
                                "intervention do(a={a}) at setting {s} has zero shots"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> CountKind {
        self.kind
    }

    pub fn settings(&self) -> &[String] {
        &self.settings
    }

    pub fn cells(&self) -> &[[[u64; 2]; 2]] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<CountRow> {
        let mut out = Vec::with_capacity(4 * self.cells.len());
        for (s, c) in self.settings.iter().zip(&self.cells) {
            for a in 0..2 {
                for b in 0..2 {
                    out.push(CountRow {
                        x: s.clone(),
                        a,
                        b,
                        count: c[a][b],
                    });
                }
            }
        }
        out
    }

    /// Total shots per setting.
    pub fn totals(&self) -> Vec<u64> {
        self.cells.iter().map(|c| c.iter().flatten().sum()).collect()
    }

    /// Maximum-likelihood frequencies `count / total` per setting.
    pub fn to_behavior<P: Prob>(&self) -> Result<Behavior<P>> {
        if self.kind != CountKind::Observational {
            return Err(Error::KindMismatch {
                expected: "observational",
            });
        }
        let probs = self
            .cells
            .iter()
            .map(|c| {
                let n: u64 = c.iter().flatten().sum();
                c.map(|row| row.map(|k| P::from_ratio(k, n)))
            })
            .collect();
        Behavior::new(self.settings.clone(), probs)?.with_shots(self.totals())
    }

    /// Frequencies normalised per `(a, x)`.
    pub fn to_do_table<P: Prob>(&self) -> Result<DoTable<P>> {
        if self.kind != CountKind::Interventional {
            return Err(Error::KindMismatch {
                expected: "interventional",
            });
        }
        let probs = self
            .cells
            .iter()
            .map(|c| c.map(|row| row.map(|k| P::from_ratio(k, row[0] + row[1]))))
            .collect();
        let shots = self
            .cells
            .iter()
            .map(|c| [c[0][0] + c[0][1], c[1][0] + c[1][1]])
            .collect();
        DoTable::per_setting(self.settings.clone(), probs)?.with_shots(shots)
    }

    /// Writes the table as CSV with the schema header for its kind.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = match self.kind {
            CountKind::Observational => OBSERVATIONAL_HEADER,
            CountKind::Interventional => INTERVENTIONAL_HEADER,
        };
        let wrap = |e: csv::Error| Error::Validation(format!("CSV write failed: {e}"));
        w.write_record(header).map_err(wrap)?;
        for r in self.rows() {
            let rec = match self.kind {
                CountKind::Observational => [r.x, r.a.to_string(), r.b.to_string(), r.count.to_string()],
                CountKind::Interventional => [r.a.to_string(), r.x, r.b.to_string(), r.count.to_string()],
            };
            w.write_record(&rec).map_err(wrap)?;
        }
        w.flush()
            .map_err(|e| Error::Validation(format!("CSV write failed: {e}")))?;
        Ok(())
    }
}

/// Reads a count table; the header decides the kind.
pub fn ingest_counts(path: impl AsRef<Path>) -> Result<CountTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_counts(file)
}

/// Parses CSV count data. Errors carry the 1-based line number in the
/// input, comment lines included.
pub fn parse_counts<R: Read>(mut input: R) -> Result<CountTable> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    // the reader numbers lines without comments; map back to physical lines
    let physical: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#'))
        .map(|(i, _)| i + 1)
        .collect();
    let line_of = |pos: Option<&csv::Position>, fallback: usize| {
        pos.and_then(|p| physical.get((p.line() as usize).wrapping_sub(1)).copied())
            .unwrap_or(fallback)
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header_rec = rdr.headers().map_err(|e| Error::Parse {
        row: line_of(e.position(), 1),
        message: e.to_string(),
    })?;
    let header_row = line_of(header_rec.position(), 1);
    let header: Vec<String> = header_rec.iter().map(str::to_string).collect();
    let kind = if header == OBSERVATIONAL_HEADER {
        CountKind::Observational
    } else if header == INTERVENTIONAL_HEADER {
        CountKind::Interventional
    } else {
        return Err(Error::Parse {
            row: header_row,
            message: format!(
                "header must be `x,a,b,count` or `do_a,x,b,count`, got `{}`",
                header.join(",")
            ),
        });
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: line_of(e.position(), 0),
            message: e.to_string(),
        })?;
        let row = line_of(rec.position(), 0);
        if rec.len() != 4 {
            return Err(Error::Parse {
                row,
                message: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        let bit = |field: &str, name: &str| -> Result<usize> {
            match field {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(Error::Parse {
                    row,
                    message: format!("{name} must be 0 or 1, got `{field}`"),
                }),
            }
        };
        let count = rec[3].parse::<u64>().map_err(|_| Error::Parse {
            row,
            message: format!("count must be a nonnegative integer, got `{}`", &rec[3]),
        })?;
        let (x, a) = match kind {
            CountKind::Observational => (&rec[0], bit(&rec[1], "a")?),
            CountKind::Interventional => (&rec[1], bit(&rec[0], "do_a")?),
        };
        if x.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty setting label".into(),
            });
        }
        rows.push(CountRow {
            x: x.to_string(),
            a,
            b: bit(&rec[2], "b")?,
            count,
        });
    }
    CountTable::from_rows(kind, &rows)
}

/// `counts_to_behavior` in free-function form.
pub fn counts_to_behavior<P: Prob>(t: &CountTable) -> Result<Behavior<P>> {
    t.to_behavior()
}

pub fn counts_to_do_table<P: Prob>(t: &CountTable) -> Result<DoTable<P>> {
    t.to_do_table()
}

/// Draws `n` trials over categories with the given probabilities using
/// sequential binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng);
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

/// Redraws every setting (or every `(x, a)` block for interventional
/// tables) at its observed frequencies and totals.
pub fn resample_counts<R: Rng + ?Sized>(t: &CountTable, rng: &mut R) -> Result<CountTable> {
    let cells = t
        .cells
        .iter()
        .map(|c| match t.kind {
            CountKind::Observational => {
                let n: u64 = c.iter().flatten().sum();
                let p: Vec<f64> = c.iter().flatten().map(|&k| k as f64 / n as f64).collect();
                let k = multinomial(rng, n, &p);
                [[k[0], k[1]], [k[2], k[3]]]
            }
            CountKind::Interventional => c.map(|row| {
                let n = row[0] + row[1];
                let k = multinomial(rng, n, &[row[0] as f64 / n as f64, row[1] as f64 / n as f64]);
                [k[0], k[1]]
            }),
        })
        .collect();
    CountTable::new(t.kind, t.settings.clone(), cells)
}

/// Samples `shots` runs per setting from a behaviour.
pub fn sample_behavior<R: Rng + ?Sized>(
    b: &Behavior<f64>,
    shots: u64,
    rng: &mut R,
) -> Result<CountTable> {
    let cells = b
        .probs()
        .iter()
        .map(|r| {
            let p = [r[0][0], r[0][1], r[1][0], r[1][1]];
            let k = multinomial(rng, shots, &p);
            [[k[0], k[1]], [k[2], k[3]]]
        })
        .collect();
    CountTable::new(CountKind::Observational, b.settings().to_vec(), cells)
}

/// Samples `shots` runs per `(x, a)` from an interventional table over the
/// given setting labels.
pub fn sample_do_table<R: Rng + ?Sized>(
    d: &DoTable<f64>,
    settings: &[String],
    shots: u64,
    rng: &mut R,
) -> Result<CountTable> {
    if let Some(own) = d.settings() {
        if own != settings {
            return Err(Error::Validation("do-table settings differ from requested".into()));
        }
    }
    let cells = (0..settings.len())
        .map(|x| {
            let mut c = [[0; 2]; 2];
            for (a, slot) in c.iter_mut().enumerate() {
                let k = multinomial(rng, shots, &[d.p(0, a, x), d.p(1, a, x)]);
                *slot = [k[0], k[1]];
            }
            c
        })
        .collect();
    CountTable::new(CountKind::Interventional, settings.to_vec(), cells)
}
