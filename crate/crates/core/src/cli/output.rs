//! CSV trajectories and JSON reports.
//!
//! Numbers are written as the shortest decimal that parses back to the same
//! value (plain notation, or exponent notation outside `[1e-5, 1e16)`), so
//! files round-trip exactly and reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::solver::Trajectory;

pub const SIMULATE_HEADER: &str = "t,x,y,z";
pub const SYNCHRONIZE_HEADER: &str = "t,x1,y1,z1,x2,y2,z2,e1,e2,e3,u1,u2,u3";

fn push_num(line: &mut String, v: f64) {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        write!(line, "{v}").unwrap();
    } else {
        write!(line, "{v:e}").unwrap();
    }
}

fn push_row(line: &mut String, t: f64, cols: &[&[f64]]) {
    line.clear();
    push_num(line, t);
    for part in cols {
        for &v in *part {
            line.push(',');
            push_num(line, v);
        }
    }
    line.push('\n');
}

/// Writes one row per grid point: time, state, then error and control
/// columns when present.
pub fn write_trajectory_csv(path: &Path, header: &str, traj: &Trajectory) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    let mut line = String::with_capacity(256);
    for (j, state) in traj.states().enumerate() {
        let t = traj.times[j];
        match (&traj.errors, &traj.controls) {
            (Some(e), Some(u)) => push_row(&mut line, t, &[state, &e[j], &u[j]]),
            _ => push_row(&mut line, t, &[state]),
        }
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

/// Pretty JSON with struct field order preserved and a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Parses a CSV written by [`write_trajectory_csv`] back into rows.
pub fn read_csv_rows(path: &Path) -> io::Result<(String, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
                .collect()
        })
        .collect::<io::Result<Vec<Vec<f64>>>>()?;
    Ok((header, rows))
}
