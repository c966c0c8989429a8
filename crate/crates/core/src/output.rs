//! CSV output of run series and field snapshots.

use crate::error::{Error, Result};
use crate::field::{CylinderGrid, Field, FieldKind};
use crate::sim::{RunRecord, Snapshot};
use num_complex::Complex64 as C64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn series_header(ring_indices: &[usize]) -> String {
    let mut h = String::from("t,Dhat,tau,err_u_L2,err_z_L2");
    for i in ring_indices {
        let _ = write!(h, ",err_ring_{i}");
    }
    h.push_str(",control_sup,h_bnd_residual");
    h
}

pub fn write_series(path: &Path, record: &RunRecord) -> Result<()> {
    let mut out = series_header(&record.ring_indices);
    out.push('\n');
    for r in &record.series {
        let mut cols = vec![num(r.t), num(r.dhat), num(r.tau), num(r.err_u), num(r.err_z)];
        cols.extend(r.err_ring.iter().map(|&v| num(v)));
        cols.push(num(r.control_sup));
        cols.push(num(r.h_boundary));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io(path))
}

fn matrix_csv(grid: &CylinderGrid, f: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for i in 0..grid.m {
        let row: Vec<String> = (0..grid.n).map(|j| num(f(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes x, y, z matrices (M rows by N columns) and a long-format positions
/// file; returns the paths written.
pub fn write_snapshot(dir: &Path, index: usize, snap: &Snapshot) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let g = snap.u.grid;
    let stem = format!("snapshot_{index:02}_t{}", snap.t);
    let mut paths = Vec::new();
    let parts: [(&str, Box<dyn Fn(usize, usize) -> f64>); 3] = [
        ("x", Box::new(|i, j| snap.u.at(i, j).re)),
        ("y", Box::new(|i, j| snap.u.at(i, j).im)),
        ("z", Box::new(|i, j| snap.z.at(i, j).re)),
    ];
    for (name, f) in parts.iter() {
        let p = dir.join(format!("{stem}_{name}.csv"));
        fs::write(&p, matrix_csv(&g, f)).map_err(io(&p))?;
        paths.push(p);
    }
    let mut pos = String::from("s_index,theta_index,x,y,z\n");
    for i in 0..g.m {
        for j in 0..g.n {
            let u = snap.u.at(i, j);
            let _ = writeln!(pos, "{i},{j},{},{},{}", num(u.re), num(u.im), num(snap.z.at(i, j).re));
        }
    }
    let p = dir.join(format!("{stem}_positions.csv"));
    fs::write(&p, pos).map_err(io(&p))?;
    paths.push(p);
    Ok(paths)
}

pub fn write_run(dir: &Path, record: &RunRecord) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let series = dir.join("series.csv");
    write_series(&series, record)?;
    let mut paths = vec![series];
    for (k, s) in record.snapshots.iter().enumerate() {
        paths.extend(write_snapshot(dir, k, s)?);
    }
    Ok(paths)
}

/// Reads a positions file back into (u, z) fields on the given grid.
pub fn read_positions(path: &Path, grid: CylinderGrid) -> Result<(Field, Field)> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut u = Field::zeros(grid, FieldKind::Complex);
    let mut z = Field::zeros(grid, FieldKind::Real);
    let bad = |line: usize, msg: &str| Error::Config(format!("{}:{line}: {msg}", path.display()));
    for (ln, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(ln + 1, "expected 5 columns"));
        }
        let i: usize = cols[0].parse().map_err(|_| bad(ln + 1, "bad s_index"))?;
        let j: usize = cols[1].parse().map_err(|_| bad(ln + 1, "bad theta_index"))?;
        if i >= grid.m || j >= grid.n {
            return Err(bad(ln + 1, "index outside grid"));
        }
        let v: Vec<f64> = cols[2..]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(ln + 1, "bad number"))?;
        u.values[i * grid.n + j] = C64::new(v[0], v[1]);
        z.values[i * grid.n + j] = C64::new(v[2], 0.0);
    }
    Ok((u, z))
}
