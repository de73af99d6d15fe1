//! CSV point, correspondence and label files.
//!
//! Coordinates are written as `{:.16e}`, i.e. 17 significant digits, which
//! reads back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kscc::nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// Header of a two-view correspondence file.
pub const CORRESPONDENCE_COLUMNS: [&str; 4] = ["x1", "y1", "x2", "y2"];

/// Name of the optional ground-truth column.
pub const LABEL_COLUMN: &str = "label";

/// Points read from a CSV file, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub points: DMatrix<f64>,
    /// Present when the header declares a trailing `label` column.
    pub labels: Option<Vec<usize>>,
    pub header: Option<Vec<String>>,
}

impl PointTable {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// True when the header is the two-view `x1,y1,x2,y2[,label]` schema.
    pub fn is_correspondence(&self) -> bool {
        self.header.as_ref().is_some_and(|h| h.len() >= 4 && h[..4] == CORRESPONDENCE_COLUMNS)
    }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec);
    }
    Ok(records)
}

fn parse_label(cell: &str, path: &Path, line: usize) -> Result<usize> {
    cell.parse().map_err(|_| {
        CliError::Input(format!(
            "{}:{line}: label `{cell}` is not a nonnegative integer",
            path.display()
        ))
    })
}

/// Reads a point file. A first row with any non-numeric cell is a header;
/// a header whose last column is `label` marks that column as labels.
pub fn read_points(path: &Path) -> Result<PointTable> {
    let records = read_records(path)?;
    let Some(first) = records.first() else {
        return Err(CliError::Input(format!("{}: no data", path.display())));
    };
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> = has_header.then(|| first.iter().map(str::to_string).collect());
    let has_labels = header.as_ref().is_some_and(|h| h.last().map(String::as_str) == Some(LABEL_COLUMN));

    if let Some(h) = &header {
        if h.len() >= 2 && h[..2] == CORRESPONDENCE_COLUMNS[..2] {
            let plain = h.len() == 4 && h[..] == CORRESPONDENCE_COLUMNS;
            let labelled = h.len() == 5 && h[..4] == CORRESPONDENCE_COLUMNS && has_labels;
            if !(plain || labelled) {
                return Err(CliError::Input(format!(
                    "{}: correspondence header must be x1,y1,x2,y2[,label], got {}",
                    path.display(),
                    h.join(",")
                )));
            }
        }
    }

    let width = first.len();
    let dim = if has_labels { width - 1 } else { width };
    if dim == 0 {
        return Err(CliError::Input(format!("{}: no coordinate columns", path.display())));
    }
    let body = &records[usize::from(has_header)..];
    if body.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let mut values = Vec::with_capacity(body.len() * dim);
    let mut labels = Vec::new();
    for (r, rec) in body.iter().enumerate() {
        let line = r + 1 + usize::from(has_header);
        if rec.len() != width {
            return Err(CliError::Input(format!(
                "{}:{line}: expected {width} columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        for cell in rec.iter().take(dim) {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!("{}:{line}: `{cell}` is not a number", path.display()))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("{}:{line}: non-finite value `{cell}`", path.display())));
            }
            values.push(v);
        }
        if has_labels {
            labels.push(parse_label(&rec[dim], path, line)?);
        }
    }
    Ok(PointTable {
        points: DMatrix::from_row_slice(body.len(), dim, &values),
        labels: has_labels.then_some(labels),
        header,
    })
}

/// Reads labels from either a one-column file (header optional) or any
/// file whose header has a `label` column.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let records = read_records(path)?;
    let Some(first) = records.first() else {
        return Err(CliError::Input(format!("{}: no data", path.display())));
    };
    let has_header = first.iter().any(|c| c.parse::<usize>().is_err() && c.parse::<f64>().is_err());
    let column = if has_header {
        first.iter().position(|c| c == LABEL_COLUMN).ok_or_else(|| {
            CliError::Input(format!("{}: header has no `{LABEL_COLUMN}` column", path.display()))
        })?
    } else if first.len() == 1 {
        0
    } else {
        return Err(CliError::Input(format!(
            "{}: expected a single label column or a `{LABEL_COLUMN}` header",
            path.display()
        )));
    };
    let width = first.len();
    records[usize::from(has_header)..]
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            let line = r + 1 + usize::from(has_header);
            if rec.len() != width {
                return Err(CliError::Input(format!(
                    "{}:{line}: expected {width} columns, found {}",
                    path.display(),
                    rec.len()
                )));
            }
            parse_label(&rec[column], path, line)
        })
        .collect()
}

/// Default header `x0,x1,...` for `dim` coordinates.
pub fn coordinate_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes points (and labels, if given) with the supplied coordinate header.
pub fn write_points(path: &Path, points: &DMatrix<f64>, labels: Option<&[usize]>, header: &[String]) -> Result<()> {
    if header.len() != points.ncols() {
        return Err(CliError::Usage(format!(
            "header has {} names for {} columns",
            header.len(),
            points.ncols()
        )));
    }
    if labels.is_some_and(|l| l.len() != points.nrows()) {
        return Err(CliError::Usage("label count does not match point count".into()));
    }
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    let mut line = header.join(",");
    if labels.is_some() {
        line.push(',');
        line.push_str(LABEL_COLUMN);
    }
    writeln!(out, "{line}").map_err(io)?;
    for (i, row) in points.row_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        if let Some(l) = labels {
            cells.push(l[i].to_string());
        }
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes one label per line under a `label` header.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(out, "{LABEL_COLUMN}").map_err(io)?;
    for l in labels {
        writeln!(out, "{l}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes a text file in one go.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
