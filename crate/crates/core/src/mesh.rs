//! Quad-mesh export of immersions: Wavefront OBJ and legacy VTK 3.0
//! structured grids. Layouts are documented in `docs/formats.md`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cfld::fmt17;
use crate::error::{Error, Result};
use crate::immersion::NilImmersion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    #[default]
    Obj,
    Vtk,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Vtk => "vtk",
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obj" => Ok(MeshFormat::Obj),
            "vtk" => Ok(MeshFormat::Vtk),
            other => Err(Error::InvalidParameter(format!(
                "unknown mesh format `{other}`"
            ))),
        }
    }
}

fn check_dims(nx: usize, ny: usize, n: usize) -> Result<()> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!(
            "mesh needs at least 2x2 nodes, got {nx}x{ny}"
        )));
    }
    if n != nx * ny {
        return Err(Error::LengthMismatch {
            expected: nx * ny,
            got: n,
        });
    }
    Ok(())
}

/// OBJ text for a row-major `nx × ny` node lattice.
pub fn obj_string(nx: usize, ny: usize, points: &[[f64; 3]]) -> Result<String> {
    check_dims(nx, ny, points.len())?;
    let mut out = String::new();
    let _ = writeln!(out, "# nilcmc quad mesh nx={nx} ny={ny}");
    for p in points {
        let _ = writeln!(out, "v {} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]));
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i + 1;
            let _ = writeln!(out, "f {} {} {} {}", a, a + 1, a + nx + 1, a + nx);
        }
    }
    Ok(out)
}

/// Legacy VTK STRUCTURED_GRID; `scalars` are attached as POINT_DATA.
pub fn vtk_string(
    nx: usize,
    ny: usize,
    points: &[[f64; 3]],
    scalars: &[(&str, &[f64])],
) -> Result<String> {
    check_dims(nx, ny, points.len())?;
    let n = points.len();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nnilcmc immersion\nASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} 1");
    let _ = writeln!(out, "POINTS {n} double");
    for p in points {
        let _ = writeln!(out, "{} {} {}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]));
    }
    if !scalars.is_empty() {
        let _ = writeln!(out, "POINT_DATA {n}");
        for (name, vals) in scalars {
            if vals.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: vals.len(),
                });
            }
            let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *vals {
                let _ = writeln!(out, "{}", fmt17(*v));
            }
        }
    }
    Ok(out)
}

pub fn export_mesh(
    f: &NilImmersion,
    format: MeshFormat,
    scalars: &[(&str, &[f64])],
) -> Result<String> {
    let pts: Vec<[f64; 3]> = f.points().iter().map(|p| p.to_array()).collect();
    let (nx, ny) = (f.grid().nx(), f.grid().ny());
    match format {
        MeshFormat::Obj => obj_string(nx, ny, &pts),
        MeshFormat::Vtk => vtk_string(nx, ny, &pts, scalars),
    }
}

/// Vertex lines of an OBJ file, in order.
pub fn parse_obj_vertices(text: &str) -> Result<Vec<[f64; 3]>> {
    text.lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|rest| {
            let v: Vec<f64> = rest
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad vertex `{rest}`")))
                })
                .collect::<Result<_>>()?;
            <[f64; 3]>::try_from(v)
                .map_err(|_| Error::Parse(format!("vertex `{rest}` needs 3 coordinates")))
        })
        .collect()
}
