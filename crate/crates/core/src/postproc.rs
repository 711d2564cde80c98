//! Zero-level-set extraction and the CSV output formats.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips f64 exactly; line endings are `\n`.
//! Output is deterministic, so files are byte-identical across reruns
//! with the same seed and configuration.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::FieldVector;
use crate::mesh::{Mesh, Point};
use crate::montecarlo::{ErrorTableRow, MomentSeries};

/// Zero level set of a P1 field at one time level: per sign-changing
/// triangle, the segment where the linear interpolant vanishes.
#[derive(Debug, Clone)]
pub struct LevelSetPolyline {
    pub segments: Vec<[Point; 2]>,
    pub step: usize,
    pub time: f64,
}

/// Nodal values exactly zero are nudged by this amount before sign
/// classification, avoiding degenerate point contacts.
const ZERO_NUDGE: f64 = 1e-14;

/// Extract the zero level set. Each triangle contributes at most one
/// segment whose endpoints lie on the triangle's edges.
pub fn zero_level_set(u: &FieldVector, mesh: &Mesh, step: usize, time: f64) -> Result<LevelSetPolyline> {
    if u.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: u.len(),
        });
    }
    if u.mesh_level() != mesh.level() {
        return Err(Error::LevelMismatch {
            expected: mesh.level(),
            got: u.mesh_level(),
        });
    }
    let value = |i: usize| {
        let v = u.values()[i];
        if v == 0.0 {
            ZERO_NUDGE
        } else {
            v
        }
    };

    let mut segments = Vec::new();
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let vals = [value(tri[0]), value(tri[1]), value(tri[2])];
        let mut crossings: Vec<Point> = Vec::with_capacity(2);
        for k in 0..3 {
            let (va, vb) = (vals[k], vals[(k + 1) % 3]);
            if va.signum() != vb.signum() {
                let pa = mesh.node(tri[k]);
                let pb = mesh.node(tri[(k + 1) % 3]);
                let s = va / (va - vb);
                crossings.push(Point::new(pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)));
            }
        }
        if crossings.len() == 2 {
            segments.push([crossings[0], crossings[1]]);
        }
    }
    Ok(LevelSetPolyline {
        segments,
        step,
        time,
    })
}

/// 17-significant-digit decimal form used everywhere in the CSV outputs.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_order(order: Option<f64>) -> String {
    match order {
        Some(v) => format_float(v),
        None => "NA".to_string(),
    }
}

/// `moments.csv` body:
/// `step,time,E_L2sq,E_H1sq,E_L2sq_se,E_H1sq_se,E_H1_4th,E_L2_4th,E_Lqp1`.
pub fn moment_csv(series: &MomentSeries) -> String {
    let mut out =
        String::from("step,time,E_L2sq,E_H1sq,E_L2sq_se,E_H1sq_se,E_H1_4th,E_L2_4th,E_Lqp1\n");
    for n in 0..series.e_l2_sq.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            n,
            format_float(n as f64 * series.tau),
            format_float(series.e_l2_sq[n]),
            format_float(series.e_h1_sq[n]),
            format_float(series.se_l2_sq[n]),
            format_float(series.se_h1_sq[n]),
            format_float(series.e_h1_4th[n]),
            format_float(series.e_l2_4th[n]),
            format_float(series.e_lqp1[n]),
        );
    }
    out
}

/// `errors.csv` body: `h,LinfEL2,order1,ELinfL2,order2,EL2H1,order3`
/// with `NA` for undefined orders (first row, or zero-error denominators).
pub fn error_csv(rows: &[ErrorTableRow]) -> String {
    let mut out = String::from("h,LinfEL2,order1,ELinfL2,order2,EL2H1,order3\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_float(r.h),
            format_float(r.err_linf_e_l2),
            format_order(r.order_linf_e_l2),
            format_float(r.err_e_linf_l2),
            format_order(r.order_e_linf_l2),
            format_float(r.err_e_l2_h1),
            format_order(r.order_e_l2_h1),
        );
    }
    out
}

/// Parse an `errors.csv` body back into rows (format inverse of
/// [`error_csv`]).
pub fn parse_error_csv(text: &str) -> Result<Vec<ErrorTableRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty error CSV".into()))?;
    if header != "h,LinfEL2,order1,ELinfL2,order2,EL2H1,order3" {
        return Err(Error::Parse(format!("unexpected error CSV header {header:?}")));
    }
    let parse_f = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad float {s:?}")))
    };
    let parse_order = |s: &str| -> Result<Option<f64>> {
        if s == "NA" {
            Ok(None)
        } else {
            parse_f(s).map(Some)
        }
    };
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!("expected 7 fields, got {}", fields.len())));
        }
        rows.push(ErrorTableRow {
            h: parse_f(fields[0])?,
            err_linf_e_l2: parse_f(fields[1])?,
            order_linf_e_l2: parse_order(fields[2])?,
            err_e_linf_l2: parse_f(fields[3])?,
            order_e_linf_l2: parse_order(fields[4])?,
            err_e_l2_h1: parse_f(fields[5])?,
            order_e_l2_h1: parse_order(fields[6])?,
        });
    }
    Ok(rows)
}

/// `levelset_<step>.csv` body: `x1,y1,x2,y2` per segment.
pub fn levelset_csv(poly: &LevelSetPolyline) -> String {
    let mut out = String::from("x1,y1,x2,y2\n");
    for [a, b] in &poly.segments {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_float(a.x),
            format_float(a.y),
            format_float(b.x),
            format_float(b.y),
        );
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_moment_csv(series: &MomentSeries, path: &Path) -> Result<()> {
    write_text(path, &moment_csv(series))
}

pub fn write_error_csv(rows: &[ErrorTableRow], path: &Path) -> Result<()> {
    write_text(path, &error_csv(rows))
}

pub fn write_levelset_csv(poly: &LevelSetPolyline, path: &Path) -> Result<()> {
    write_text(path, &levelset_csv(poly))
}

/// Conventional file name for a level-set snapshot.
pub fn levelset_file_name(step: usize) -> String {
    format!("levelset_{step}.csv")
}
