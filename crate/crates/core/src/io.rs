//! File formats: JSON complexes, Matrix Market operators and CSV tables.
//!
//! Every CSV written here starts with one `# prodtop <version> ...` line
//! recording the command and its parameters. No timestamp is written, so
//! identical runs give identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{sc_to_cc, AbstractCellComplex, CellSpec, ChainComplex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::interpolate::{FlowObservation, SpatiotemporalFlow};
use crate::product::ProductComplex;
use crate::sparse::{IndexSpace, Scalar, SparseOperator};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write to a file, or to stdout when `path` is `-`.
pub fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        return out.write_all(bytes).map_err(|e| Error::io(path, e));
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimplicialJson {
    top_simplices: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellsJson {
    cells: Vec<CellSpec>,
}

/// A complex read from JSON.
#[derive(Debug)]
pub enum ComplexFile {
    Simplicial(SimplicialComplex),
    Cell(AbstractCellComplex),
    Product(Box<ProductComplex>),
}

impl ComplexFile {
    pub fn counts(&self) -> Vec<usize> {
        match self {
            Self::Simplicial(c) => c.counts(),
            Self::Cell(c) => c.counts(),
            Self::Product(c) => c.counts(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Simplicial(_) => "simplicial",
            Self::Cell(_) => "cell",
            Self::Product(_) => "product",
        }
    }

    pub fn to_cell_complex(&self) -> AbstractCellComplex {
        match self {
            Self::Simplicial(c) => sc_to_cc(c),
            Self::Cell(c) => c.clone(),
            Self::Product(z) => z.to_cell_complex(),
        }
    }

    pub fn into_simplicial(self) -> Result<SimplicialComplex> {
        match self {
            Self::Simplicial(c) => Ok(c),
            other => Err(Error::Parse(format!(
                "expected a simplicial complex (top_simplices), found a {} complex",
                other.kind()
            ))),
        }
    }

    pub fn into_product(self) -> Result<ProductComplex> {
        match self {
            Self::Product(z) => Ok(*z),
            other => Err(Error::Parse(format!(
                "expected a product complex, found a {} complex",
                other.kind()
            ))),
        }
    }
}

fn complex_from_value(v: Value) -> Result<ComplexFile> {
    let Value::Object(map) = &v else {
        return Err(Error::Parse("complex JSON must be an object".into()));
    };
    if map.contains_key("top_simplices") {
        let s: SimplicialJson = serde_json::from_value(v)?;
        return Ok(ComplexFile::Simplicial(SimplicialComplex::new(
            s.top_simplices,
        )?));
    }
    if map.contains_key("cells") {
        let c: CellsJson = serde_json::from_value(v)?;
        return Ok(ComplexFile::Cell(AbstractCellComplex::from_cells(c.cells)?));
    }
    if let Some(p) = map.get("product") {
        if map.len() != 1 {
            return Err(Error::Parse("product object must be the only key".into()));
        }
        let (Some(x), Some(y)) = (p.get("x"), p.get("y")) else {
            return Err(Error::Parse("product needs \"x\" and \"y\" factors".into()));
        };
        let x = complex_from_value(x.clone())?;
        let y = complex_from_value(y.clone())?;
        if matches!(x, ComplexFile::Product(_)) || matches!(y, ComplexFile::Product(_)) {
            return Err(Error::Parse(
                "product factors must not themselves be products".into(),
            ));
        }
        return Ok(ComplexFile::Product(Box::new(ProductComplex::new(
            x.to_cell_complex(),
            y.to_cell_complex(),
        ))));
    }
    Err(Error::Parse(
        "complex JSON needs one of \"top_simplices\", \"cells\" or \"product\"".into(),
    ))
}

/// Parse `{"top_simplices": ...}`, `{"cells": ...}` or
/// `{"product": {"x": ..., "y": ...}}`.
pub fn parse_complex(text: &str) -> Result<ComplexFile> {
    complex_from_value(serde_json::from_str(text)?)
}

pub fn read_complex(path: &Path) -> Result<ComplexFile> {
    parse_complex(&read_to_string(path)?).map_err(|e| match e {
        Error::Json(j) => Error::Parse(format!("{}: {j}", path.display())),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// The `{"cells": [...]}` form of a complex.
pub fn cell_complex_json(c: &AbstractCellComplex) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&CellsJson {
        cells: c.to_specs(),
    })?;
    s.push('\n');
    Ok(s)
}

pub fn simplicial_json(tops: &[Vec<usize>]) -> Result<String> {
    Ok(serde_json::to_string(&SimplicialJson {
        top_simplices: tops.to_vec(),
    })?)
}

// ---------------------------------------------------------------- Matrix Market

/// Entry types with a Matrix Market field name.
pub trait MarketScalar: Scalar {
    const FIELD: &'static str;
    fn parse_entry(s: &str) -> Option<Self>;
    fn format_entry(self) -> String;
}

impl MarketScalar for i64 {
    const FIELD: &'static str = "integer";

    fn parse_entry(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    fn format_entry(self) -> String {
        self.to_string()
    }
}

impl MarketScalar for f64 {
    const FIELD: &'static str = "real";

    fn parse_entry(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    /// Shortest representation that parses back to the same value.
    fn format_entry(self) -> String {
        format!("{self:?}")
    }
}

/// Coordinate-format text: 1-based `row col value`, rows in order.
pub fn write_matrix_market<T: MarketScalar>(op: &SparseOperator<T>, comments: &[String]) -> String {
    let mut s = format!("%%MatrixMarket matrix coordinate {} general\n", T::FIELD);
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(s, "% {line}");
        }
    }
    let _ = writeln!(s, "{} {} {}", op.nrows(), op.ncols(), op.nnz());
    for (r, c, v) in op.iter() {
        let _ = writeln!(s, "{} {} {}", r + 1, c + 1, v.format_entry());
    }
    s
}

/// Read a coordinate-format matrix. `general` and `symmetric` layouts are
/// accepted; an `integer` file may be read as `f64` but not the reverse.
pub fn read_matrix_market<T: MarketScalar, R: Read>(
    reader: R,
    rows: impl FnOnce(usize) -> IndexSpace,
    cols: impl FnOnce(usize) -> IndexSpace,
) -> Result<SparseOperator<T>> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let bad = |n: usize, msg: &str| Error::Parse(format!("Matrix Market line {}: {msg}", n + 1));
    let (n0, banner) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market input".into()))?;
    let banner = banner.map_err(|e| Error::Parse(e.to_string()))?;
    let words: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5
        || words[0] != "%%matrixmarket"
        || words[1] != "matrix"
        || words[2] != "coordinate"
    {
        return Err(bad(
            n0,
            "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'",
        ));
    }
    let field_ok = words[3] == T::FIELD || (words[3] == "integer" && T::FIELD == "real");
    if !field_ok {
        return Err(bad(
            n0,
            &format!("cannot read a {} matrix as {}", words[3], T::FIELD),
        ));
    }
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(bad(n0, &format!("unsupported symmetry {other}"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                let nums: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(n, "bad size line"))?;
                let [r, c, nnz] = nums[..] else {
                    return Err(bad(n, "size line needs rows cols entries"));
                };
                size = Some((r, c, nnz));
            }
            Some((nr, nc, _)) => {
                let [i, j, v] = parts[..] else {
                    return Err(bad(n, "entry needs row col value"));
                };
                let i: usize = i.parse().map_err(|_| bad(n, "bad row index"))?;
                let j: usize = j.parse().map_err(|_| bad(n, "bad column index"))?;
                let v = T::parse_entry(v).ok_or_else(|| bad(n, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(bad(n, "index out of range"));
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) =
        size.ok_or_else(|| Error::Parse("Matrix Market input has no size line".into()))?;
    let stored = if symmetric {
        trip.iter().filter(|t| t.0 >= t.1).count()
    } else {
        trip.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!(
            "Matrix Market header promises {nnz} entries, found {stored}"
        )));
    }
    let (rs, cs) = (rows(nr), cols(nc));
    if rs.len != nr || cs.len != nc {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", rs.len, cs.len),
            actual: format!("{nr}x{nc}"),
        });
    }
    Ok(SparseOperator::from_triplets(rs, cs, trip))
}

// ---------------------------------------------------------------- CSV

/// `# prodtop <version> <command> key=value ...`
pub fn repro_header(command: &str, params: &[(&str, String)]) -> String {
    let mut s = format!("# prodtop {VERSION} {command}");
    for (k, v) in params {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

/// A CSV document: header comment, column names, then rows.
pub fn csv_document<I, R>(repro: &str, columns: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = repro.as_bytes().to_vec();
    out.extend(body);
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Shortest round-trip text for a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, want: &[&str]) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_ascii_lowercase).collect();
    if got != want {
        return Err(Error::Parse(format!(
            "expected columns {}, found {}",
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Observations `t,edge_u,edge_v,value`; `t` is 0-based, the edge is the
/// vertex pair and the value is signed along `u -> v`.
pub fn read_observations<R: Read>(
    reader: R,
    x: &SimplicialComplex,
    steps: usize,
) -> Result<FlowObservation> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &["t", "edge_u", "edge_v", "value"])?;
    let mut entries = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("observation row {}: {what}", n + 1));
        if rec.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let t: usize = rec[0].parse().map_err(|_| bad("bad t"))?;
        let u: usize = rec[1].parse().map_err(|_| bad("bad edge_u"))?;
        let v: usize = rec[2].parse().map_err(|_| bad("bad edge_v"))?;
        let value: f64 = rec[3].parse().map_err(|_| bad("bad value"))?;
        let (e, sign) = x
            .oriented_edge(u, v)
            .ok_or_else(|| bad(&format!("no edge {{{u}, {v}}} in the complex")))?;
        entries.push((t, e, sign as f64 * value));
    }
    FlowObservation::new(steps, x.count(1), entries)
}

/// Largest `t` in an observation file plus one, or 0 if it has no rows.
pub fn observed_steps<R: Read>(reader: R) -> Result<usize> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &["t", "edge_u", "edge_v", "value"])?;
    let mut steps = 0;
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let t: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("observation row {}: bad t", n + 1)))?;
        steps = steps.max(t + 1);
    }
    Ok(steps)
}

pub fn observations_csv(
    x: &SimplicialComplex,
    obs: &FlowObservation,
    repro: &str,
) -> Result<String> {
    let edges = x.simplices(1);
    let rows = obs.entries().iter().map(|&(t, e, v)| {
        vec![
            t.to_string(),
            edges[e][0].to_string(),
            edges[e][1].to_string(),
            fmt_f64(v),
        ]
    });
    csv_document(repro, &["t", "edge_u", "edge_v", "value"], rows)
}

/// Flow table `t,edge_u,edge_v,value` in time-major, edge order.
pub fn flow_csv(x: &SimplicialComplex, f: &SpatiotemporalFlow, repro: &str) -> Result<String> {
    let edges = x.simplices(1);
    let rows = (0..f.steps()).flat_map(|t| {
        edges.iter().enumerate().map(move |(e, s)| {
            vec![
                t.to_string(),
                s[0].to_string(),
                s[1].to_string(),
                fmt_f64(f.get(t, e)),
            ]
        })
    });
    csv_document(repro, &["t", "edge_u", "edge_v", "value"], rows)
}

pub fn read_flow<R: Read>(reader: R, x: &SimplicialComplex) -> Result<SpatiotemporalFlow> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &["t", "edge_u", "edge_v", "value"])?;
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Parse(format!("flow row {}", n + 1));
        let t: usize = rec[0].parse().map_err(|_| bad())?;
        let (e, s) = x
            .oriented_edge(
                rec[1].parse().map_err(|_| bad())?,
                rec[2].parse().map_err(|_| bad())?,
            )
            .ok_or_else(bad)?;
        let v: f64 = rec[3].parse().map_err(|_| bad())?;
        rows.push((t, e, s as f64 * v));
    }
    let steps = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut f = SpatiotemporalFlow::zeros(steps, x.count(1));
    for (t, e, v) in rows {
        f.set(t, e, v);
    }
    Ok(f)
}

/// Land mask: hexagon ids separated by whitespace or commas; `#` starts a comment.
pub fn parse_mask(text: &str) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let id = tok.parse().map_err(|_| {
                Error::Parse(format!("mask line {}: bad hexagon id {tok:?}", n + 1))
            })?;
            out.insert(id);
        }
    }
    Ok(out)
}
