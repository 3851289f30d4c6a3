//! CSV and JSON files. Symmetric matrices are stored as their upper triangle
//! in row-major order (`m11,m12,m22` for 2×2); every float is written with
//! 17 significant digits so that files round-trip exactly.

use std::collections::HashMap;
use std::path::Path;

use rddmk::domain::{Point, Site, SiteSet};
use rddmk::manifold::{ManifoldKind, ManifoldPoint};

use crate::error::{CliError, CliResult};

/// Correlation diagonals may deviate from 1 by at most this much.
pub const UNIT_DIAGONAL_TOL: f64 = 1e-9;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Value column names for a manifold: `m{i}{j}` for `i ≤ j`, or `v1..vq`.
pub fn value_columns(kind: ManifoldKind) -> Vec<String> {
    match kind {
        ManifoldKind::Spd(p) | ManifoldKind::Cholesky(p) => {
            let mut cols = Vec::with_capacity(p * (p + 1) / 2);
            for i in 1..=p {
                for j in i..=p {
                    cols.push(format!("m{i}{j}"));
                }
            }
            cols
        }
        ManifoldKind::Sphere(q) => (1..=q).map(|i| format!("v{i}")).collect(),
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(|e| csv_error(path, e))?;
        Ok(Self { headers, rows })
    }

    fn column(&self, path: &Path, names: &[&str]) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| names.contains(&h.as_str()))
            .ok_or_else(|| CliError::input(path, format!("missing column `{}`", names[0])))
    }

    fn float(&self, path: &Path, row: usize, col: usize) -> CliResult<f64> {
        let s = &self.rows[row][col];
        s.parse().map_err(|_| {
            CliError::input(path, format!("row {}: `{}` = {s:?} is not a number", row + 1, self.headers[col]))
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::input(path, e.to_string())
}

/// `id,x,y` (the id column may also be named `target_id`; other columns are
/// ignored).
pub fn read_sites(path: &Path) -> CliResult<Vec<Site>> {
    let t = Table::read(path)?;
    let (ci, cx, cy) = (t.column(path, &["id", "target_id"])?, t.column(path, &["x"])?, t.column(path, &["y"])?);
    (0..t.rows.len())
        .map(|r| {
            Ok(Site {
                id: t.rows[r][ci].to_string(),
                point: Point::new(t.float(path, r, cx)?, t.float(path, r, cy)?),
            })
        })
        .collect()
}

/// Boundary ring `x,y` in traversal order.
pub fn read_boundary(path: &Path) -> CliResult<Vec<Point>> {
    let t = Table::read(path)?;
    let (cx, cy) = (t.column(path, &["x"])?, t.column(path, &["y"])?);
    (0..t.rows.len())
        .map(|r| Ok(Point::new(t.float(path, r, cx)?, t.float(path, r, cy)?)))
        .collect()
}

/// `(id, values)` per row.
pub fn read_matrix_rows(path: &Path, kind: ManifoldKind) -> CliResult<Vec<(String, Vec<f64>)>> {
    let t = Table::read(path)?;
    let ci = t.column(path, &["id", "target_id"])?;
    let cols = value_columns(kind)
        .iter()
        .map(|c| t.column(path, &[c.as_str()]))
        .collect::<CliResult<Vec<_>>>()?;
    (0..t.rows.len())
        .map(|r| {
            let values = cols.iter().map(|&c| t.float(path, r, c)).collect::<CliResult<Vec<_>>>()?;
            Ok((t.rows[r][ci].to_string(), values))
        })
        .collect()
}

/// Checks one row against the manifold's invariants.
pub fn parse_point(site_id: &str, kind: ManifoldKind, values: &[f64]) -> CliResult<ManifoldPoint> {
    let invalid = |reason: String| CliError::InvalidMatrix {
        site_id: site_id.to_string(),
        reason,
    };
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite entry {v}")));
    }
    if let ManifoldKind::Cholesky(p) = kind {
        let mut k = 0;
        for i in 0..p {
            if (values[k] - 1.0).abs() > UNIT_DIAGONAL_TOL {
                return Err(invalid(format!("diagonal entry m{0}{0} = {1} is not 1", i + 1, values[k])));
            }
            k += p - i;
        }
    }
    ManifoldPoint::import_values(kind, values).map_err(|e| invalid(e.to_string()))
}

/// Sites and their observations; matrix rows are bound to sites by id.
pub fn ingest_dataset(sites_path: &Path, matrices_path: &Path, kind: ManifoldKind) -> CliResult<(SiteSet, Vec<ManifoldPoint>)> {
    let sites = read_sites(sites_path)?;
    let rows = read_matrix_rows(matrices_path, kind)?;
    if sites.len() != rows.len() {
        return Err(CliError::RowCountMismatch {
            sites: sites.len(),
            matrices: rows.len(),
        });
    }
    let mut by_id: HashMap<&str, &[f64]> = HashMap::with_capacity(rows.len());
    for (id, v) in &rows {
        if by_id.insert(id.as_str(), v).is_some() {
            return Err(CliError::input(matrices_path, format!("duplicate id {id}")));
        }
    }
    let values = sites
        .iter()
        .map(|s| {
            let v = by_id
                .get(s.id.as_str())
                .ok_or_else(|| CliError::input(matrices_path, format!("no row for site id {}", s.id)))?;
            parse_point(&s.id, kind, v)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let set = SiteSet::new(sites).map_err(|e| CliError::input(sites_path, e.to_string()))?;
    Ok((set, values))
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::input(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
