//! File formats.
//!
//! JSON documents store complex numbers as `[re, im]` pairs of doubles and
//! round-trip bit-exactly. CSV files use shortest round-trip decimal
//! formatting.
//!
//! ```text
//! bank   {"N", "g", "filters": [{"offset", "taps": [[re, im], ...]}], "meta": {...}}
//! loop   {"N", "coeffs": [A_0, A_1, ...]}            A_d = N rows of N [re, im]
//! spins  {"N", "V": matrix, "factors": [{"vectors": [[[re, im], ...], ...]}]}
//! tree   {"N", "levels", "approx": [...], "details": [[channel, ...] per level]}
//! samples.csv   x,re,im
//! signal.csv    index,re,im
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::cascade::SampledFunction;
use crate::error::{Error, Result};
use crate::filters::{FilterBank, FilterCoeffs};
use crate::linalg::CMatrix;
use crate::loops::{PolyLoop, SpinFactor, SpinFactorization};
use crate::transform::CoeffTree;

type Pair = [f64; 2];

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pairs(v: &[Complex64]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

fn complexes(v: &[Pair]) -> Vec<Complex64> {
    v.iter().copied().map(complex).collect()
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    m.row_iter().map(|r| r.iter().copied().map(pair).collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<Pair>], n: usize, what: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            context: what.into(),
            message: format!("expected a {n}x{n} matrix"),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| complex(rows[i][j])))
}

#[derive(Debug, Serialize, Deserialize)]
struct FilterDoc {
    offset: i64,
    taps: Vec<Pair>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BankMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub lowpass_normalized: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankDoc {
    #[serde(rename = "N")]
    n: usize,
    g: usize,
    filters: Vec<FilterDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<BankMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LoopDoc {
    #[serde(rename = "N")]
    n: usize,
    coeffs: Vec<Vec<Vec<Pair>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpinFactorDoc {
    vectors: Vec<Vec<Pair>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpinsDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "V")]
    v: Vec<Vec<Pair>>,
    factors: Vec<SpinFactorDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    #[serde(rename = "N")]
    n: usize,
    levels: usize,
    approx: Vec<Pair>,
    details: Vec<Vec<Vec<Pair>>>,
}

fn from_json<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        context: context.into(),
        message: e.to_string(),
    })
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn bank_to_json(bank: &FilterBank, name: Option<&str>) -> String {
    to_json(&BankDoc {
        n: bank.scale(),
        g: bank.genus(),
        filters: bank
            .filters()
            .iter()
            .map(|f| FilterDoc {
                offset: f.offset(),
                taps: pairs(f.taps()),
            })
            .collect(),
        meta: Some(BankMeta {
            name: name.map(str::to_owned),
            lowpass_normalized: bank.is_lowpass_normalized(),
        }),
    })
}

pub fn bank_from_json(text: &str) -> Result<FilterBank> {
    let doc: BankDoc = from_json(text, "filter bank")?;
    let filters = doc
        .filters
        .iter()
        .enumerate()
        .map(|(j, f)| {
            FilterCoeffs::new(complexes(&f.taps), f.offset).map_err(|e| Error::Parse {
                context: format!("filter bank: filters[{j}]"),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(doc.n, doc.g, filters)
}

pub fn loop_to_json(lp: &PolyLoop) -> String {
    to_json(&LoopDoc {
        n: lp.size(),
        coeffs: lp.coeffs().iter().map(matrix_rows).collect(),
    })
}

pub fn loop_from_json(text: &str) -> Result<PolyLoop> {
    let doc: LoopDoc = from_json(text, "loop")?;
    let coeffs = doc
        .coeffs
        .iter()
        .enumerate()
        .map(|(d, rows)| matrix_from_rows(rows, doc.n, &format!("loop: coeffs[{d}]")))
        .collect::<Result<Vec<_>>>()?;
    PolyLoop::new(doc.n, coeffs)
}

pub fn spins_to_json(sf: &SpinFactorization) -> String {
    to_json(&SpinsDoc {
        n: sf.size,
        v: matrix_rows(&sf.unitary),
        factors: sf
            .factors
            .iter()
            .map(|f| SpinFactorDoc {
                vectors: f.vectors.iter().map(|v| pairs(v.as_slice())).collect(),
            })
            .collect(),
    })
}

pub fn spins_from_json(text: &str) -> Result<SpinFactorization> {
    let doc: SpinsDoc = from_json(text, "spins")?;
    let unitary = matrix_from_rows(&doc.v, doc.n, "spins: V")?;
    let factors = doc
        .factors
        .iter()
        .map(|f| SpinFactor {
            vectors: f.vectors.iter().map(|v| DVector::from_vec(complexes(v))).collect(),
        })
        .collect();
    let sf = SpinFactorization {
        size: doc.n,
        unitary,
        factors,
    };
    sf.validate().map_err(|e| Error::Parse {
        context: "spins".into(),
        message: e.to_string(),
    })?;
    Ok(sf)
}

pub fn tree_to_json(tree: &CoeffTree) -> String {
    to_json(&TreeDoc {
        n: tree.scale,
        levels: tree.levels,
        approx: pairs(&tree.approx),
        details: tree
            .details
            .iter()
            .map(|chans| chans.iter().map(|c| pairs(c)).collect())
            .collect(),
    })
}

pub fn tree_from_json(text: &str) -> Result<CoeffTree> {
    let doc: TreeDoc = from_json(text, "coefficient tree")?;
    if doc.details.len() != doc.levels {
        return Err(Error::Parse {
            context: "coefficient tree: details".into(),
            message: format!("{} levels listed, {} declared", doc.details.len(), doc.levels),
        });
    }
    Ok(CoeffTree {
        scale: doc.n,
        levels: doc.levels,
        approx: complexes(&doc.approx),
        details: doc
            .details
            .iter()
            .map(|chans| chans.iter().map(|c| complexes(c)).collect())
            .collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    x: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SignalRow {
    index: usize,
    re: f64,
    im: f64,
}

fn rows_to_csv<T: Serialize>(rows: impl Iterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
}

fn csv_error(e: csv::Error, columns: &[&str]) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => Error::Parse {
            context: match err.field() {
                Some(f) => format!("line {line}, column {}", columns.get(f as usize).unwrap_or(&"?")),
                None => format!("line {line}"),
            },
            message: err.kind().to_string(),
        },
        _ => Error::Parse {
            context: format!("line {line}"),
            message: e.to_string(),
        },
    }
}

/// Rows of a three-column CSV with the exact header `columns`, each paired
/// with its line number.
fn csv_rows<T: DeserializeOwned>(text: &str, columns: [&str; 3]) -> Result<Vec<(u64, T)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_error(e, &columns))?.clone();
    if header.iter().ne(columns) {
        return Err(Error::Parse {
            context: "line 1".into(),
            message: format!(
                "expected header {:?}, found {:?}",
                columns.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(e, &columns))?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = rec
                .deserialize(Some(&header))
                .map_err(|e| csv_error(e, &columns))?;
            Ok((line, row))
        })
        .collect()
}

pub fn samples_to_csv(f: &SampledFunction) -> String {
    rows_to_csv(f.samples().map(|(x, v)| SampleRow { x, re: v.re, im: v.im }))
}

/// Reads samples on the grid of scale `n`; the depth is recovered from
/// the spacing, which must be `N^{-d}`.
pub fn samples_from_csv(text: &str, n: usize) -> Result<SampledFunction> {
    let rows: Vec<(u64, SampleRow)> = csv_rows(text, ["x", "re", "im"])?;
    let depth = match rows.as_slice() {
        [(_, a), (line, b), ..] => {
            let step = b.x - a.x;
            (0..=40u32)
                .find(|&d| ((n as f64).powi(d as i32) * step - 1.0).abs() < 1e-9)
                .ok_or_else(|| Error::Parse {
                    context: format!("line {line}, column x"),
                    message: format!("spacing {step} is not a power of 1/{n}"),
                })?
        }
        _ => 0,
    };
    let unit = (n as f64).powi(depth as i32);
    let start = rows.first().map_or(0, |(_, r)| (r.x * unit).round() as i64);
    for (i, (line, r)) in rows.iter().enumerate() {
        if ((start + i as i64) as f64 / unit - r.x).abs() > 1e-9 / unit {
            return Err(Error::Parse {
                context: format!("line {line}, column x"),
                message: format!("x = {} is off the uniform grid", r.x),
            });
        }
    }
    let values = rows.iter().map(|(_, r)| Complex64::new(r.re, r.im)).collect();
    SampledFunction::new(n, depth, start, values)
}

pub fn signal_to_csv(signal: &[Complex64]) -> String {
    rows_to_csv(signal.iter().enumerate().map(|(index, v)| SignalRow {
        index,
        re: v.re,
        im: v.im,
    }))
}

pub fn signal_from_csv(text: &str) -> Result<Vec<Complex64>> {
    let rows: Vec<(u64, SignalRow)> = csv_rows(text, ["index", "re", "im"])?;
    rows.iter()
        .enumerate()
        .map(|(expected, (line, r))| {
            if r.index != expected {
                return Err(Error::Parse {
                    context: format!("line {line}, column index"),
                    message: format!("expected index {expected}, found {}", r.index),
                });
            }
            Ok(Complex64::new(r.re, r.im))
        })
        .collect()
}

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::from)
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{}: {context}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn load_bank(path: &Path) -> Result<FilterBank> {
    with_path(path, bank_from_json(&read(path)?))
}

pub fn load_loop(path: &Path) -> Result<PolyLoop> {
    with_path(path, loop_from_json(&read(path)?))
}

pub fn load_spins(path: &Path) -> Result<SpinFactorization> {
    with_path(path, spins_from_json(&read(path)?))
}

pub fn load_tree(path: &Path) -> Result<CoeffTree> {
    with_path(path, tree_from_json(&read(path)?))
}

pub fn load_signal(path: &Path) -> Result<Vec<Complex64>> {
    with_path(path, signal_from_csv(&read(path)?))
}

pub fn load_samples(path: &Path, n: usize) -> Result<SampledFunction> {
    with_path(path, samples_from_csv(&read(path)?, n))
}
