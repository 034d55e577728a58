//! Trajectory CSV, model and report JSON.
//!
//! Trajectory files have the header `t,x1..xd,v1..vd,a1..ad` and one row
//! per sample, every value written with 17 significant digits so files
//! round-trip exactly. The importer also accepts `t,x1..xd` (velocities and
//! accelerations by differentiation) and `t,x1..xd,v1..vd` (accelerations
//! by differentiating the velocities).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dmp::{differentiate, Dmp, Trajectory, Vector};
use crate::error::{Error, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents`, creating missing parent directories.
pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    fs::write(path, contents).map_err(io_err)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable values");
    s.push('\n');
    s
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        origin: origin.to_string(),
        line: e.line() as u64,
        column: e.column() as u64,
        message: e.to_string(),
    })
}

pub fn read_model(path: &Path) -> Result<Dmp> {
    parse_json(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_model(path: &Path, dmp: &Dmp) -> Result<()> {
    write(path, to_json(dmp))
}

pub fn trajectory_to_csv(tr: &Trajectory) -> String {
    let d = tr.dims();
    let mut out = String::with_capacity(tr.len() * (3 * d + 1) * 25);
    out.push('t');
    for prefix in ["x", "v", "a"] {
        for i in 1..=d {
            let _ = write!(out, ",{prefix}{i}");
        }
    }
    out.push('\n');
    for k in 0..tr.len() {
        let _ = write!(out, "{:.16e}", tr.times()[k]);
        for series in [tr.positions(), tr.velocities(), tr.accelerations()] {
            for value in series[k].iter() {
                let _ = write!(out, ",{value:.16e}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(path: &Path, tr: &Trajectory) -> Result<()> {
    write(path, trajectory_to_csv(tr))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(&read_to_string(path)?, &path.display().to_string())
}

pub fn parse_trajectory(text: &str, origin: &str) -> Result<Trajectory> {
    let parse_err = |line: u64, column: u64, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    let (d, blocks) = parse_header(&header).map_err(|(col, msg)| parse_err(1, col, msg))?;

    let width = 1 + blocks * d;
    let mut times = Vec::new();
    let mut columns: Vec<Vec<Vector>> = vec![Vec::new(); blocks];
    let mut values = vec![0.0; width];
    for record in reader.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                pos,
                expected_len,
                len,
            } => parse_err(
                pos.as_ref().map_or(0, |p| p.line()),
                *len.min(expected_len) + 1,
                format!("expected {expected_len} fields, found {len}"),
            ),
            _ => parse_err(e.position().map_or(0, |p| p.line()), 1, e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (i, field) in record.iter().enumerate() {
            values[i] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(
                        line,
                        i as u64 + 1,
                        format!("`{field}` is not a finite number"),
                    )
                })?;
        }
        times.push(values[0]);
        for (b, col) in columns.iter_mut().enumerate() {
            col.push(Vector::from_column_slice(
                &values[1 + b * d..1 + (b + 1) * d],
            ));
        }
    }
    if times.len() < 2 {
        return Err(parse_err(
            times.len() as u64 + 1,
            1,
            "a trajectory needs at least two samples".into(),
        ));
    }
    let mut columns = columns.into_iter();
    let positions = columns.next().expect("positions block");
    match (columns.next(), columns.next()) {
        (None, _) => Trajectory::from_positions(times, positions),
        (Some(velocities), None) => {
            let accelerations = differentiate(&times, &velocities);
            Trajectory::new(times, positions, velocities, accelerations)
        }
        (Some(velocities), Some(accelerations)) => {
            Trajectory::new(times, positions, velocities, accelerations)
        }
    }
}

/// Returns the dimension and the number of `x`/`v`/`a` blocks, or the
/// offending column.
fn parse_header(header: &csv::StringRecord) -> std::result::Result<(usize, usize), (u64, String)> {
    let names: Vec<&str> = header.iter().collect();
    if names.first() != Some(&"t") {
        return Err((
            1,
            format!(
                "first column must be `t`, found `{}`",
                names.first().unwrap_or(&"")
            ),
        ));
    }
    let d = names[1..].iter().take_while(|n| n.starts_with('x')).count();
    if d == 0 || !(names.len() - 1).is_multiple_of(d) || (names.len() - 1) / d > 3 {
        return Err((
            1,
            format!(
                "expected `t,x1..xd[,v1..vd[,a1..ad]]`, found `{}`",
                names.join(",")
            ),
        ));
    }
    let blocks = (names.len() - 1) / d;
    for (b, prefix) in ["x", "v", "a"].iter().take(blocks).enumerate() {
        for i in 0..d {
            let col = 1 + b * d + i;
            let want = format!("{prefix}{}", i + 1);
            if names[col] != want {
                return Err((
                    col as u64 + 1,
                    format!("expected column `{want}`, found `{}`", names[col]),
                ));
            }
        }
    }
    Ok((d, blocks))
}
