//! Field CSV files: a JSON header line `{"n":..,"length":..}` followed by
//! `x,re,im` rows. Values are written with shortest round-trip formatting,
//! so write/read reproduces the samples bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    pub length: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub post_blowup: bool,
}

pub fn field_to_csv_string(f: &Field) -> String {
    let header = FieldHeader {
        n: f.grid().n(),
        length: f.grid().length(),
        post_blowup: f.is_post_blowup(),
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push_str("\nx,re,im\n");
    for (x, c) in f.grid().points().iter().zip(f.values()) {
        let _ = writeln!(out, "{:e},{:e},{:e}", x, c.re, c.im);
    }
    out
}

pub fn write_field_csv(f: &Field, w: &mut impl Write) -> Result<()> {
    w.write_all(field_to_csv_string(f).as_bytes())?;
    Ok(())
}

pub fn save_field_csv(f: &Field, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, field_to_csv_string(f))?;
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number `{s}`")))
}

/// Reads a field, rebuilding its grid from the header. The x column is
/// checked against the grid points.
pub fn read_field_csv(r: impl BufRead) -> Result<Field> {
    let mut lines = r.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))??;
    let header: FieldHeader = serde_json::from_str(header_line.trim())
        .map_err(|e| Error::Parse(format!("header: {e}")))?;
    let grid = Grid::new(header.n, header.length)?;
    let columns = lines
        .next()
        .ok_or_else(|| Error::Parse("missing column line".into()))??;
    if columns.trim() != "x,re,im" {
        return Err(Error::Parse(format!("unexpected columns `{}`", columns.trim())));
    }
    let mut values = Vec::with_capacity(header.n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 3;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("line {lineno}: expected 3 columns")));
        }
        let x = parse_f64(parts[0], lineno)?;
        let j = values.len();
        if j >= header.n {
            return Err(Error::LengthMismatch {
                expected: header.n,
                got: j + 1,
            });
        }
        if (x - grid.points()[j]).abs() > 1e-9 * grid.length() {
            return Err(Error::Parse(format!("line {lineno}: x = {x} is off the grid")));
        }
        values.push(Complex64::new(parse_f64(parts[1], lineno)?, parse_f64(parts[2], lineno)?));
    }
    if header.post_blowup {
        Field::new_post_blowup(&grid, values)
    } else {
        Field::new(&grid, values)
    }
}

pub fn load_field_csv(path: impl AsRef<Path>) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    read_field_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::two_param_soliton;

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::new(64, 20.0).unwrap();
        let u = two_param_soliton(1.0, 0.9, 0.4, &g).unwrap();
        let text = field_to_csv_string(&u);
        let back = read_field_csv(text.as_bytes()).unwrap();
        assert_eq!(back.values(), u.values());
        assert!(back.grid().same_as(&g) || back.grid().n() == 64);
    }

    #[test]
    fn rejects_short_and_malformed_files() {
        assert!(read_field_csv("".as_bytes()).is_err());
        let text = "{\"n\":16,\"length\":1.0}\nx,re,im\n-0.5,1,0\n";
        assert!(matches!(read_field_csv(text.as_bytes()), Err(Error::LengthMismatch { .. })));
        let text = "{\"n\":10,\"length\":1.0}\nx,re,im\n";
        assert!(matches!(read_field_csv(text.as_bytes()), Err(Error::InvalidGrid(_))));
    }
}
