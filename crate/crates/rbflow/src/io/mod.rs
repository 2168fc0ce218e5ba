//! Serialization: flat binary tensor fields, full-precision CSV tables and
//! fiber CSV dumps.

pub mod svg;

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{RbError, Result};
use crate::grid::{GridSpec, TensorField};
use crate::tensor::fiber::FourTensor;

const MAGIC: &[u8; 4] = b"RBTF";
const VERSION: u32 = 1;

/// Binary layout: magic, version, n, rank, ndims (all u32 LE), dims (u64 LE
/// each), then the payload doubles in storage order (point-major, components
/// row-major).
pub fn write_tensor_field(path: &Path, t: &TensorField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&(t.n as u32).to_le_bytes())?;
    f.write_all(&(t.rank as u32).to_le_bytes())?;
    f.write_all(&(t.grid.ndim() as u32).to_le_bytes())?;
    for &d in &t.grid.dims {
        f.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in &t.data {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor_field(path: &Path) -> Result<TensorField> {
    let mut f = std::fs::File::open(path)?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)?;
    if buf.len() < 20 || &buf[0..4] != MAGIC {
        return Err(RbError::InvalidParameter(format!("{}: not a tensor-field file", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(RbError::InvalidParameter(format!("unsupported tensor-field version {version}")));
    }
    let n = u32_at(8) as usize;
    let rank = u32_at(12) as usize;
    let ndims = u32_at(16) as usize;
    let mut off = 20;
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(u64::from_le_bytes(buf[off..off + 8].try_into().unwrap()) as usize);
        off += 8;
    }
    let grid = GridSpec::new(&dims);
    let expect = grid.len() * n.pow(rank as u32);
    let mut data = Vec::with_capacity(expect);
    for _ in 0..expect {
        if off + 8 > buf.len() {
            return Err(RbError::InvalidParameter("tensor-field payload truncated".into()));
        }
        data.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    Ok(TensorField { grid, n, rank, data })
}

/// Format with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Deterministic CSV table writer.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Parse a CSV produced by [`Csv::render`]: header plus float columns.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| RbError::InvalidParameter("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| RbError::InvalidParameter(format!("CSV line {}: bad number `{c}`", i + 2)))
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            return Err(RbError::InvalidParameter(format!("CSV line {}: wrong arity", i + 2)));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Small-fiber CSV: one row per component, i,j,k,l,value.
pub fn fiber_to_csv(t: &FourTensor) -> String {
    let mut csv = Csv::new(&["i", "j", "k", "l", "value"]);
    for i in 0..t.n {
        for j in 0..t.n {
            for k in 0..t.n {
                for l in 0..t.n {
                    csv.push_row(vec![
                        i.to_string(),
                        j.to_string(),
                        k.to_string(),
                        l.to_string(),
                        fmt_f64(t.get(i, j, k, l)),
                    ]);
                }
            }
        }
    }
    csv.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join("rbflow-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let grid = GridSpec::new(&[6, 5]);
        let mut t = TensorField::zeros(&grid, 2);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = (i as f64).sin() * 1e-3 + i as f64;
        }
        let path = dir.join("field.rbtf");
        write_tensor_field(&path, &t).unwrap();
        let back = read_tensor_field(&path).unwrap();
        assert_eq!(back.data, t.data);
        assert_eq!(back.grid.dims, t.grid.dims);
        assert_eq!(back.rank, 2);
    }

    #[test]
    fn f64_formatting_round_trips() {
        for &v in &[std::f64::consts::PI, 1.0 / 3.0, 6.02e23, -2.2250738585072014e-308] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn csv_render_and_parse() {
        let mut c = Csv::new(&["t", "x"]);
        c.push_row(vec![fmt_f64(0.0), fmt_f64(1.5)]);
        c.push_row(vec![fmt_f64(0.1), fmt_f64(-2.25)]);
        let (h, rows) = parse_csv(&c.render()).unwrap();
        assert_eq!(h, vec!["t", "x"]);
        assert_eq!(rows[1][1], -2.25);
    }
}
