//! Plain-text field files.
//!
//! First line `# grid L=<L> n=<n>`; further `#` lines are free-form metadata.
//! Box fields follow as one value per line (x fastest), radial fields as
//! `r,value` rows with `L` standing for `r_max`.

use super::field::{RadialField, ScalarField3D};
use super::grid::{Grid3D, RadialGrid};
use crate::error::{Error, Result};
use crate::Real;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldData<T> {
    Radial(RadialField<T>),
    Cartesian(ScalarField3D<T>),
}

pub fn write_radial<T: Real, W: Write>(mut w: W, f: &RadialField<T>, meta: &[String]) -> std::io::Result<()> {
    let g = f.grid();
    writeln!(w, "# grid L={} n={}", g.r_max(), g.n_nodes())?;
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    for (i, v) in f.values().iter().enumerate() {
        writeln!(w, "{},{}", g.node(i), v)?;
    }
    Ok(())
}

pub fn write_3d<T: Real, W: Write>(mut w: W, f: &ScalarField3D<T>, meta: &[String]) -> std::io::Result<()> {
    let g = f.grid();
    writeln!(w, "# grid L={} n={}", g.half_width(), g.n_per_axis())?;
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    for v in f.values() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

fn parse_num<T: Real>(s: &str, line: usize) -> Result<T> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))?;
    T::from_f64(x).ok_or_else(|| Error::Parse(format!("line {line}: {x} out of range")))
}

fn parse_header(line: &str) -> Result<(f64, usize)> {
    let rest = line
        .strip_prefix("# grid")
        .ok_or_else(|| Error::Parse("missing `# grid L=<L> n=<n>` header".into()))?;
    let mut l = None;
    let mut n = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("L=") {
            l = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        }
    }
    match (l, n) {
        (Some(l), Some(n)) => Ok((l, n)),
        _ => Err(Error::Parse(format!("bad grid header {line:?}"))),
    }
}

/// Reads a field file; returns the field and its metadata lines (without `# `).
pub fn read_field<T: Real, R: BufRead>(r: R) -> Result<(FieldData<T>, Vec<String>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let (l, n) = parse_header(header.trim())?;
    let mut meta = Vec::new();
    let mut xs: Vec<T> = Vec::new();
    let mut radial = None;
    for (ln, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(m) = t.strip_prefix('#') {
            meta.push(m.trim().to_string());
            continue;
        }
        let is_row = t.contains(',');
        if *radial.get_or_insert(is_row) != is_row {
            return Err(Error::Parse(format!("line {}: mixed row formats", ln + 2)));
        }
        let v = if is_row {
            t.split(',').nth(1).unwrap_or("")
        } else {
            t
        };
        xs.push(parse_num(v, ln + 2)?);
    }
    let l = T::from_f64(l).ok_or_else(|| Error::Parse("L out of range".into()))?;
    if radial.unwrap_or(false) {
        Ok((FieldData::Radial(RadialField::new(RadialGrid::new(l, n)?, xs)?), meta))
    } else {
        Ok((FieldData::Cartesian(ScalarField3D::new(Grid3D::new(l, n)?, xs)?), meta))
    }
}

pub fn save_field<T: Real>(path: &Path, f: &FieldData<T>, meta: &[String]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match f {
        FieldData::Radial(r) => write_radial(&mut w, r, meta),
        FieldData::Cartesian(c) => write_3d(&mut w, c, meta),
    }
    .and_then(|_| w.flush())
    .map_err(|e| Error::io(path, e))
}

pub fn load_field<T: Real>(path: &Path) -> Result<(FieldData<T>, Vec<String>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_field(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_round_trip() {
        let g = RadialGrid::new(5.0, 64).unwrap();
        let f = RadialField::from_fn(g, |r: f64| (-r).exp() / (1.0 + r)).unwrap();
        let mut buf = Vec::new();
        write_radial(&mut buf, &f, &["p=4".to_string()]).unwrap();
        let (back, meta) = read_field::<f64, _>(&buf[..]).unwrap();
        assert_eq!(back, FieldData::Radial(f));
        assert_eq!(meta, vec!["p=4".to_string()]);
    }

    #[test]
    fn box_round_trip() {
        let g = Grid3D::new(1.5, 33).unwrap();
        let f = ScalarField3D::from_fn(g, |x: [f64; 3]| x[0] - 0.1 * x[2]).unwrap();
        let mut buf = Vec::new();
        write_3d(&mut buf, &f, &[]).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("# grid L=1.5 n=33\n"));
        let (back, _) = read_field::<f64, _>(&buf[..]).unwrap();
        assert_eq!(back, FieldData::Cartesian(f));
    }

    #[test]
    fn bad_header() {
        assert!(read_field::<f64, _>(&b"1\n2\n"[..]).is_err());
    }
}
