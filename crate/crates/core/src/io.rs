//! CSV readers and writers. Floats are written with 17 significant digits
//! so that re-running a command reproduces the same bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::coords::{PoincareState, Regime};
use crate::error::{Error, Result};
use crate::foliation::DiscLeaf;
use crate::leaf::Leaf;
use crate::phase::{eval_integrals, PhaseState, Trajectory};

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("i/o: {e}"))
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<f64> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::Parse(format!("line {line}: short record")))?
        .trim();
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value `{raw}`")));
    }
    Ok(v)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

/// Reads phase states from a CSV with (at least) columns q1,q2,p1,p2.
pub fn read_state_csv<R: Read>(r: R) -> Result<Vec<PhaseState>> {
    let mut rd = reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    let idx = [column(&headers, "q1")?, column(&headers, "q2")?, column(&headers, "p1")?, column(&headers, "p2")?];
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i as u64 + 2;
        out.push(PhaseState::new(
            field(&rec, idx[0], line)?,
            field(&rec, idx[1], line)?,
            field(&rec, idx[2], line)?,
            field(&rec, idx[3], line)?,
        ));
    }
    Ok(out)
}

pub fn parse_state_csv(text: &str) -> Result<Vec<PhaseState>> {
    read_state_csv(text.as_bytes())
}

/// Reads Poincaré states from columns x1,x2,y1,y2 and an optional regime
/// column (direct when absent).
pub fn read_poincare_csv<R: Read>(r: R) -> Result<Vec<PoincareState>> {
    let mut rd = reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    let idx = [column(&headers, "x1")?, column(&headers, "x2")?, column(&headers, "y1")?, column(&headers, "y2")?];
    let regime_col = column(&headers, "regime").ok();
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i as u64 + 2;
        let regime = match regime_col {
            Some(k) => Regime::parse(rec.get(k).unwrap_or("").trim())?,
            None => Regime::Direct,
        };
        let y2 = field(&rec, idx[3], line)?;
        match regime {
            Regime::Retrograde if y2 >= 0.0 => {
                return Err(Error::Parse(format!("line {line}: retrograde state needs y2 < 0")))
            }
            Regime::Direct if y2 <= 0.0 => {
                return Err(Error::Parse(format!("line {line}: direct state needs y2 > 0")))
            }
            _ => {}
        }
        out.push(PoincareState::new(
            field(&rec, idx[0], line)?,
            field(&rec, idx[1], line)?,
            field(&rec, idx[2], line)?,
            y2,
            regime,
        ));
    }
    Ok(out)
}

pub fn parse_poincare_csv(text: &str) -> Result<Vec<PoincareState>> {
    read_poincare_csv(text.as_bytes())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn write_rows<W: Write, const N: usize>(w: W, header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for row in rows {
        wr.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    wr.flush().map_err(io_err)
}

pub fn write_state_csv<W: Write>(w: W, states: &[PhaseState]) -> Result<()> {
    write_rows(w, ["q1", "q2", "p1", "p2"], states.iter().map(|s| s.to_array()))
}

/// t,q1,q2,p1,p2,H,E,L per recorded step.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut rows = Vec::with_capacity(traj.states.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let i = eval_integrals(s)?;
        rows.push([*t, s.q1, s.q2, s.p1, s.p2, i.h, i.energy, i.l]);
    }
    write_rows(w, ["t", "q1", "q2", "p1", "p2", "H", "E", "L"], rows.into_iter())
}

pub fn write_poincare_csv<W: Write>(w: W, states: &[PoincareState]) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["x1", "x2", "y1", "y2", "regime"]).map_err(csv_err)?;
    for s in states {
        let mut rec: Vec<String> = s.to_array().iter().map(|v| fmt_f64(*v)).collect();
        rec.push(s.regime.as_str().to_string());
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush().map_err(io_err)
}

/// s,a,x2,y2,r. Annulus leaves have no x₂ profile; the column is written
/// as 0 there (x₂ = 2πt is the free circle coordinate).
pub fn write_leaf_csv<W: Write>(w: W, leaf: &Leaf) -> Result<()> {
    let rows = (0..leaf.len()).map(|k| {
        let x = if leaf.x2[k].is_nan() { 0.0 } else { leaf.x2[k] };
        [leaf.s[k], leaf.a[k], x, leaf.y2[k], leaf.r[k]]
    });
    write_rows(w, ["s", "a", "x2", "y2", "r"], rows)
}

/// theta_or_x2,s,x1,y1,y2 rows for a disc sampled on a polar grid.
pub fn write_disc_csv<W: Write>(w: W, disc: &DiscLeaf, n_r: usize, n_theta: usize) -> Result<()> {
    let rows = disc.samples(n_r, n_theta)?;
    write_rows(w, ["theta_or_x2", "s", "x1", "y1", "y2"], rows.into_iter())
}

/// theta_or_x2,s,x1,y1,y2 rows for an annulus w_θ (x₁ = r cos θ,
/// y₁ = r sin θ).
pub fn write_annulus_csv<W: Write>(w: W, leaf: &Leaf) -> Result<()> {
    let th = leaf
        .theta
        .ok_or_else(|| Error::param("leaf", "annulus CSV needs an annulus leaf"))?;
    let (s, c) = th.sin_cos();
    let rows = (0..leaf.len()).map(|k| [th, leaf.s[k], leaf.r[k] * c, leaf.r[k] * s, leaf.y2[k]]);
    write_rows(w, ["theta_or_x2", "s", "x1", "y1", "y2"], rows)
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::param("path", format!("`{}` has no file name", path.display())))?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(".{}.tmp", name.to_string_lossy()));
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let v = std::f64::consts::PI;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn state_columns_by_name() {
        let s = parse_state_csv("t,p2,p1,q2,q1\n0,4,3,2,1\n").unwrap();
        assert_eq!(s[0].to_array(), [1.0, 2.0, 3.0, 4.0]);
        assert!(parse_state_csv("q1,q2,p1\n1,2,3\n").is_err());
        assert!(parse_state_csv("q1,q2,p1,p2\n1,2,NaN,4\n").is_err());
    }
}
