//! On-disk formats. Numbers are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{Conserved, Trajectory, TrajectoryMeta};
use crate::grid::{Field, GridSpec};
use crate::linop::EigenPair;
use crate::modulation::CoupledRun;
use crate::norms::NormReport;
use crate::scattering::ScatterReport;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{what}: `{s}`: {e}")))
}

/// Parses a CSV with the exact header `header`, returning numeric rows of that width.
fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    if first.trim() != header {
        return Err(Error::Parse(format!("{}: expected header `{header}`, found `{first}`", path.display())));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row = l.split(',').map(|c| parse_f64(c, &format!("{} line {}", path.display(), i + 2))).collect::<Result<Vec<_>>>()?;
            if row.len() != width {
                return Err(Error::Parse(format!("{} line {}: {} columns, expected {width}", path.display(), i + 2, row.len())));
            }
            Ok(row)
        })
        .collect()
}

fn write_table(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub length: f64,
    pub t: f64,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `x,value` rows to `path` and `{n, length, t}` to the `.json` sidecar.
pub fn write_snapshot(path: &Path, f: &Field, t: f64) -> Result<()> {
    let g = f.grid();
    write_table(path, "x,value", f.values().iter().enumerate().map(|(i, &v)| vec![g.x(i), v]))?;
    write_json(&sidecar(path), &SnapshotMeta { n: g.n(), length: g.length(), t })
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    let meta: SnapshotMeta = read_json(&sidecar(path))?;
    let grid = GridSpec::new(meta.n, meta.length)?;
    let rows = read_table(path, "x,value")?;
    if rows.len() != grid.n() {
        return Err(Error::Parse(format!("{}: {} rows for n = {}", path.display(), rows.len(), grid.n())));
    }
    Ok((Field::new(grid, rows.into_iter().map(|r| r[1]).collect())?, meta.t))
}

/// `meta.json`, `times.csv`, `state_%06d.csv` for every `stride`-th snapshot (the last
/// one always included), and `conserved.csv`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("meta.json"), traj.meta())?;
    let stride = stride.max(1);
    let n = traj.len();
    let keep: Vec<usize> = (0..n).filter(|&i| i % stride == 0 || i == n - 1).collect();
    write_table(&dir.join("times.csv"), "index,t", keep.iter().map(|&i| vec![i as f64, traj.times()[i]]))?;
    for &i in &keep {
        write_snapshot(&dir.join(format!("state_{i:06}.csv")), &traj.states()[i], traj.times()[i])?;
    }
    write_conserved(&dir.join("conserved.csv"), traj.conserved())
}

pub fn write_conserved(path: &Path, log: &[Conserved]) -> Result<()> {
    write_table(path, "t,mass,energy", log.iter().map(|c| vec![c.t, c.mass, c.energy]))
}

pub fn read_conserved(path: &Path) -> Result<Vec<Conserved>> {
    Ok(read_table(path, "t,mass,energy")?.into_iter().map(|r| Conserved { t: r[0], mass: r[1], energy: r[2] }).collect())
}

/// Reads a trajectory directory back; the conserved log is subsampled to the stored snapshots.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let meta: TrajectoryMeta = read_json(&dir.join("meta.json"))?;
    let index = read_table(&dir.join("times.csv"), "index,t")?;
    let full = read_conserved(&dir.join("conserved.csv"))?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut conserved = Vec::new();
    for r in index {
        let i = r[0] as usize;
        let (f, _) = read_snapshot(&dir.join(format!("state_{i:06}.csv")))?;
        times.push(r[1]);
        states.push(f);
        conserved.push(*full.get(i).ok_or_else(|| Error::Parse(format!("conserved.csv has no row {i}")))?);
    }
    Trajectory::new(times, states, meta, conserved)
}

pub fn write_spectrum(path: &Path, pairs: &[EigenPair]) -> Result<()> {
    write_table(path, "index,eigenvalue,residual", pairs.iter().enumerate().map(|(i, p)| vec![i as f64, p.value, p.residual]))
}

/// `(index, eigenvalue, residual)` rows.
pub fn read_spectrum(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    Ok(read_table(path, "index,eigenvalue,residual")?.into_iter().map(|r| (r[0] as usize, r[1], r[2])).collect())
}

pub const MODULATION_HEADER: &str = "t,c,y,cdot,ydot_minus_c2,ip_wQ,ip_wQp,mass,energy";

/// One row per snapshot of the coupled run.
pub fn write_modulation_log(path: &Path, run: &CoupledRun) -> Result<()> {
    let rows = run.states.iter().zip(&run.conserved).map(|(s, c)| {
        let log = run
            .log
            .iter()
            .min_by(|a, b| (a.t - s.t).abs().total_cmp(&(b.t - s.t).abs()))
            .expect("log has the initial entry");
        vec![s.t, s.c, s.y, log.c_dot, log.ydot_minus_c2, s.residuals.0, s.residuals.1, c.mass, c.energy]
    });
    write_table(path, MODULATION_HEADER, rows)
}

pub fn read_modulation_log(path: &Path) -> Result<Vec<[f64; 9]>> {
    Ok(read_table(path, MODULATION_HEADER)?
        .into_iter()
        .map(|r| r.try_into().expect("width checked"))
        .collect())
}

/// `<stem>.json` with the report and `<stem>_residual.csv` with the residual curve.
pub fn write_scatter_report(dir: &Path, stem: &str, rep: &ScatterReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join(format!("{stem}.json")), rep)?;
    write_table(
        &dir.join(format!("{stem}_residual.csv")),
        "t,l2,besov",
        rep.residual_curve.iter().map(|p| vec![p.t, p.l2, p.besov]),
    )
}

pub fn write_norm_report(path: &Path, rep: &NormReport) -> Result<()> {
    write_json(path, rep)
}
