//! CSV time series: one row per snapshot with the scalar diagnostics and,
//! while a saddle track is active, the tracked saddle's geometry.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::diagnostics::DiagRow;
use crate::saddle::SaddleRecord;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("column '{0}' not found")]
    MissingColumn(String),
}

/// Column names paired with their documentation.
pub const COLUMNS: &[(&str, &str)] = &[
    ("t", "snapshot time"),
    ("sup_grad", "max over the grid of |grad-perp theta| (clm1d: max |omega|)"),
    ("max_u", "max over the grid of |u| (clm1d: max |H omega|)"),
    ("l2_theta", "L2 norm of theta over the periodic box"),
    ("energy", "kinetic energy 0.5 * integral of |u|^2 (clm1d: 0.5 * L2 norm squared)"),
    ("bkm_accum", "trapezoidal time integral of sup_grad from the first snapshot"),
    ("sup_grad_xi_outside", "max |grad xi| outside the disc around the tracked saddle"),
    ("xi_coverage", "fraction of grid points where xi is defined"),
    ("saddle_x1", "tracked saddle x1 (empty without an active track)"),
    ("saddle_x2", "tracked saddle x2"),
    ("saddle_beta", "branch slope beta in the saddle frame"),
    ("saddle_delta", "branch slope delta in the saddle frame"),
    ("saddle_gamma", "opening angle gamma in radians"),
    ("saddle_frame_angle", "frame axis angle in radians"),
    ("saddle_quality", "relative misfit of the local quadratic model"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub diag: DiagRow,
    pub saddle: Option<SaddleColumns>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleColumns {
    pub x1: f64,
    pub x2: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub frame_angle: f64,
    pub quality: f64,
}

impl From<&SaddleRecord> for SaddleColumns {
    fn from(r: &SaddleRecord) -> Self {
        Self {
            x1: r.pos[0],
            x2: r.pos[1],
            beta: r.beta,
            delta: r.delta,
            gamma: r.gamma,
            frame_angle: r.frame_angle,
            quality: r.quality,
        }
    }
}

/// Header comment block plus the column line.
pub fn header() -> String {
    let mut s = String::from("# qgsaddle time series\n");
    for (name, doc) in COLUMNS {
        s.push_str(&format!("# {name}: {doc}\n"));
    }
    let names: Vec<&str> = COLUMNS.iter().map(|c| c.0).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    s
}

/// Formats with 17 significant digits, which round-trips every double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_row(row: &SeriesRow) -> String {
    let d = &row.diag;
    let mut cells: Vec<String> = [
        d.t,
        d.sup_grad,
        d.max_u,
        d.l2_theta,
        d.energy,
        d.bkm_accum,
        d.sup_grad_xi_outside,
        d.xi_coverage,
    ]
    .iter()
    .map(|v| fmt_f64(*v))
    .collect();
    match row.saddle {
        Some(s) => cells.extend(
            [s.x1, s.x2, s.beta, s.delta, s.gamma, s.frame_angle, s.quality]
                .iter()
                .map(|v| fmt_f64(*v)),
        ),
        None => cells.extend(std::iter::repeat_n(String::new(), 7)),
    }
    let mut line = cells.join(",");
    line.push('\n');
    line
}

/// Appends one row, writing the header first when the file is new or empty.
pub fn append_series_row(path: &Path, row: &SeriesRow) -> Result<(), SeriesError> {
    let io_err = |source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    };
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
    if fresh {
        f.write_all(header().as_bytes()).map_err(io_err)?;
    }
    f.write_all(format_row(row).as_bytes()).map_err(io_err)
}

/// Rewrites the series keeping only rows with `t <= t_keep` and returns them.
/// A missing file counts as empty.
pub fn truncate_series(path: &Path, t_keep: f64) -> Result<Vec<SeriesRow>, SeriesError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let rows: Vec<SeriesRow> = read_series(path)?.into_iter().filter(|r| r.diag.t <= t_keep).collect();
    let mut text = header();
    for r in &rows {
        text.push_str(&format_row(r));
    }
    fs::write(path, text).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(rows)
}

pub fn parse_series(text: &str) -> Result<Vec<SeriesRow>, SeriesError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.starts_with('#') || raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').collect();
        if !saw_header {
            let names: Vec<&str> = COLUMNS.iter().map(|c| c.0).collect();
            if cells != names {
                return Err(SeriesError::Parse {
                    line,
                    message: "unexpected column header".into(),
                });
            }
            saw_header = true;
            continue;
        }
        if cells.len() != COLUMNS.len() {
            return Err(SeriesError::Parse {
                line,
                message: format!("expected {} cells, found {}", COLUMNS.len(), cells.len()),
            });
        }
        let parse = |c: &str| -> Result<f64, SeriesError> {
            c.trim().parse().map_err(|_| SeriesError::Parse {
                line,
                message: format!("cannot parse '{c}'"),
            })
        };
        let mut v = [0.0; 8];
        for (slot, c) in v.iter_mut().zip(&cells[..8]) {
            *slot = parse(c)?;
        }
        let saddle = if cells[8..].iter().all(|c| c.trim().is_empty()) {
            None
        } else {
            let mut s = [0.0; 7];
            for (slot, c) in s.iter_mut().zip(&cells[8..]) {
                *slot = parse(c)?;
            }
            Some(SaddleColumns {
                x1: s[0],
                x2: s[1],
                beta: s[2],
                delta: s[3],
                gamma: s[4],
                frame_angle: s[5],
                quality: s[6],
            })
        };
        rows.push(SeriesRow {
            diag: DiagRow {
                t: v[0],
                sup_grad: v[1],
                max_u: v[2],
                l2_theta: v[3],
                energy: v[4],
                bkm_accum: v[5],
                sup_grad_xi_outside: v[6],
                xi_coverage: v[7],
            },
            saddle,
        });
    }
    Ok(rows)
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>, SeriesError> {
    let text = fs::read_to_string(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_series(&text)
}

/// Extracts `(t, column)` pairs for a diagnostic column by name.
pub fn column(rows: &[SeriesRow], name: &str) -> Result<Vec<(f64, f64)>, SeriesError> {
    let get: fn(&DiagRow) -> f64 = match name {
        "sup_grad" => |d| d.sup_grad,
        "max_u" => |d| d.max_u,
        "l2_theta" => |d| d.l2_theta,
        "energy" => |d| d.energy,
        "bkm_accum" => |d| d.bkm_accum,
        "sup_grad_xi_outside" => |d| d.sup_grad_xi_outside,
        "xi_coverage" => |d| d.xi_coverage,
        _ => return Err(SeriesError::MissingColumn(name.to_string())),
    };
    Ok(rows.iter().map(|r| (r.diag.t, get(&r.diag))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> SeriesRow {
        SeriesRow {
            diag: DiagRow {
                t,
                sup_grad: 1.0 / 3.0,
                max_u: 0.1,
                l2_theta: std::f64::consts::PI,
                energy: 1e-300,
                bkm_accum: 2.0,
                sup_grad_xi_outside: 0.0,
                xi_coverage: 1.0,
            },
            saddle: None,
        }
    }

    #[test]
    fn header_written_once_and_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let a = row(0.0);
        let mut b = row(0.1);
        b.saddle = Some(SaddleColumns {
            x1: -0.0,
            x2: 3.25,
            beta: 0.1,
            delta: 2.0,
            gamma: 1.0 / 7.0,
            frame_angle: 0.0,
            quality: 1e-3,
        });
        append_series_row(&path, &a).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
        append_series_row(&path, &b).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("t,sup_grad").count(), 1);
        let back = read_series(&path).unwrap();
        assert_eq!(back, vec![a, b]);
        assert_eq!(back[0].diag.sup_grad.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn every_column_is_documented() {
        let h = header();
        for (name, _) in COLUMNS {
            assert!(h.contains(&format!("# {name}: ")));
        }
    }
}
