//! The `CFLD/1` text format for complex fields.
//!
//! ```text
//! # cfld1 nx=<int> ny=<int> hx=<float> hy=<float> x0=<float> y0=<float>
//! i,j,re,im
//! ...
//! ```
//!
//! Nodes appear in row-major order (`j` outer). Floats carry 17 significant
//! digits so values survive a round trip bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ConformalGrid};

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_cfld_string(field: &ComplexField) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(64 * (g.len() + 1));
    let _ = writeln!(
        out,
        "# cfld1 nx={} ny={} hx={} hy={} x0={} y0={}",
        g.nx(),
        g.ny(),
        fmt17(g.hx()),
        fmt17(g.hy()),
        fmt17(g.origin().re),
        fmt17(g.origin().im)
    );
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let c = field.get(i, j);
            let _ = writeln!(out, "{i},{j},{},{}", fmt17(c.re), fmt17(c.im));
        }
    }
    out
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Parses the `key=value` pairs of a `# <tag> ...` header line.
pub(crate) fn parse_header<'a>(line: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("#") || tokens.next() != Some(tag) {
        return Err(parse_err(format!("expected `# {tag}` header")));
    }
    tokens
        .map(|t| {
            t.split_once('=')
                .ok_or_else(|| parse_err(format!("malformed header token `{t}`")))
        })
        .collect()
}

pub(crate) fn header_value<T: std::str::FromStr>(pairs: &[(&str, &str)], key: &str) -> Result<T> {
    let raw = pairs
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(format!("header is missing `{key}`")))?;
    raw.parse()
        .map_err(|_| parse_err(format!("bad value `{raw}` for `{key}`")))
}

pub(crate) fn grid_from_header(pairs: &[(&str, &str)]) -> Result<ConformalGrid> {
    ConformalGrid::new(
        Complex64::new(header_value(pairs, "x0")?, header_value(pairs, "y0")?),
        header_value(pairs, "nx")?,
        header_value(pairs, "ny")?,
        header_value(pairs, "hx")?,
        header_value(pairs, "hy")?,
    )
}

/// Parses one `i,j,a,b,...` record, checking the node indices.
pub(crate) fn parse_record(line: &str, i: usize, j: usize, width: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = line.trim().split(',').collect();
    if parts.len() != width + 2 {
        return Err(parse_err(format!(
            "record `{line}` has {} columns",
            parts.len()
        )));
    }
    let (pi, pj): (usize, usize) = (
        parts[0]
            .parse()
            .map_err(|_| parse_err(format!("bad index in `{line}`")))?,
        parts[1]
            .parse()
            .map_err(|_| parse_err(format!("bad index in `{line}`")))?,
    );
    if (pi, pj) != (i, j) {
        return Err(parse_err(format!(
            "expected node ({i}, {j}), found ({pi}, {pj})"
        )));
    }
    parts[2..]
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| parse_err(format!("bad float `{s}`")))
        })
        .collect()
}

pub fn parse_cfld(text: &str) -> Result<ComplexField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse_err("empty file"))?;
    let grid = grid_from_header(&parse_header(header, "cfld1")?)?;
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(format!("truncated at node ({i}, {j})")))?;
            let rec = parse_record(line, i, j, 2)?;
            values.push(Complex64::new(rec[0], rec[1]));
        }
    }
    if lines.next().is_some() {
        return Err(parse_err("trailing records after the last node"));
    }
    ComplexField::from_values(grid, values)
}

pub fn read_cfld(path: impl AsRef<Path>) -> Result<ComplexField> {
    parse_cfld(&std::fs::read_to_string(path)?)
}

pub fn write_cfld(path: impl AsRef<Path>, field: &ComplexField) -> Result<()> {
    std::fs::write(path, to_cfld_string(field))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = ConformalGrid::new(Complex64::new(-0.5, 0.25), 3, 4, 0.005, 0.01).unwrap();
        let f = ComplexField::from_fn(g, |z| z * z);
        let s = to_cfld_string(&f);
        let first = s.lines().next().unwrap();
        assert_eq!(
            first,
            "# cfld1 nx=3 ny=4 hx=5.0000000000000001e-3 hy=1.0000000000000000e-2 \
             x0=-5.0000000000000000e-1 y0=2.5000000000000000e-1"
        );
        assert_eq!(s.lines().count(), 13);
        assert!(s.lines().nth(2).unwrap().starts_with("1,0,"));
        assert!(s.lines().nth(4).unwrap().starts_with("0,1,"));
    }

    #[test]
    fn rejects_out_of_order_and_truncated() {
        let g = ConformalGrid::square(0.0, 0.0, 3, 0.1).unwrap();
        let s = to_cfld_string(&ComplexField::zeros(g));
        let swapped = s.replacen("1,0,", "0,1,", 1);
        assert!(matches!(parse_cfld(&swapped), Err(Error::Parse(_))));
        let truncated: String = s.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_cfld(&truncated), Err(Error::Parse(_))));
        assert!(matches!(parse_cfld("# cfld2 nx=3"), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            vals in proptest::collection::vec((-1e6f64..1e6, -1e-6f64..1e-6), 12),
            hx in 1e-4f64..1.0,
            x0 in -10.0f64..10.0,
        ) {
            let g = ConformalGrid::new(Complex64::new(x0, -x0 / 3.0), 4, 3, hx, hx * 1.5).unwrap();
            let f = ComplexField::from_values(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let back = parse_cfld(&to_cfld_string(&f)).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
