//! On-disk artifacts of a pipeline run.
//!
//! * `v.cfld` + `v.json`: the potential log and `{H, mode, branch_note}`
//! * `psi1.cfld`, `psi2.cfld` + `spinor.json`: `{H, anchor, psi0}`
//! * `immersion.nimm`: points, see below
//!
//! The immersion file mirrors CFLD/1:
//!
//! ```text
//! # nimm1 nx=<int> ny=<int> hx=<float> hy=<float> x0=<float> y0=<float> ai=<int> aj=<int>
//! i,j,x1,x2,x3
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cfld::{
    fmt17, grid_from_header, header_value, parse_header, parse_record, read_cfld, write_cfld,
};
use crate::error::{Error, Result};
use crate::immersion::NilImmersion;
use crate::nil::NilPoint;
use crate::sinh_gordon::{ConstraintMode, PotentialLog};
use crate::spinor::{SpinorField, SpinorMeta};

pub const POTENTIAL_FILE: &str = "v.cfld";
pub const POTENTIAL_META: &str = "v.json";
pub const PSI1_FILE: &str = "psi1.cfld";
pub const PSI2_FILE: &str = "psi2.cfld";
pub const SPINOR_META: &str = "spinor.json";
pub const IMMERSION_FILE: &str = "immersion.nimm";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialMeta {
    #[serde(rename = "H")]
    pub h: f64,
    pub mode: ConstraintMode,
    pub branch_note: String,
}

pub const BRANCH_NOTE: &str =
    "Im v is stored as a continuous field from the 1D generator; no wrapping into (-pi, pi] was applied";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_cfld_at(path: &Path) -> Result<crate::grid::ComplexField> {
    read_cfld(path).map_err(|e| match e {
        Error::Io(io) => Error::Parse(format!("cannot read {}: {io}", path.display())),
        other => other,
    })
}

pub fn write_potential(dir: &Path, v: &PotentialLog, mode: ConstraintMode) -> Result<()> {
    write_cfld(dir.join(POTENTIAL_FILE), v.v())?;
    write_json(
        &dir.join(POTENTIAL_META),
        &PotentialMeta {
            h: v.mean_curvature(),
            mode,
            branch_note: BRANCH_NOTE.into(),
        },
    )
}

pub fn read_potential(dir: &Path) -> Result<(PotentialLog, PotentialMeta)> {
    let meta: PotentialMeta = read_json(&dir.join(POTENTIAL_META))?;
    let field = read_cfld_at(&dir.join(POTENTIAL_FILE))?;
    Ok((PotentialLog::new(field, meta.h)?, meta))
}

pub fn write_spinor(dir: &Path, psi: &SpinorField, meta: &SpinorMeta) -> Result<()> {
    write_cfld(dir.join(PSI1_FILE), psi.psi1())?;
    write_cfld(dir.join(PSI2_FILE), psi.psi2())?;
    write_json(&dir.join(SPINOR_META), meta)
}

pub fn read_spinor(dir: &Path) -> Result<(SpinorField, SpinorMeta)> {
    let meta: SpinorMeta = read_json(&dir.join(SPINOR_META))?;
    let psi1 = read_cfld_at(&dir.join(PSI1_FILE))?;
    let psi2 = read_cfld_at(&dir.join(PSI2_FILE))?;
    Ok((SpinorField::new(psi1, psi2)?, meta))
}

pub fn immersion_string(f: &NilImmersion) -> String {
    let g = f.grid();
    let mut out = String::with_capacity(80 * (g.len() + 1));
    let _ = writeln!(
        out,
        "# nimm1 nx={} ny={} hx={} hy={} x0={} y0={} ai={} aj={}",
        g.nx(),
        g.ny(),
        fmt17(g.hx()),
        fmt17(g.hy()),
        fmt17(g.origin().re),
        fmt17(g.origin().im),
        f.anchor().0,
        f.anchor().1
    );
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let p = f.get(i, j);
            let _ = writeln!(
                out,
                "{i},{j},{},{},{}",
                fmt17(p.x1),
                fmt17(p.x2),
                fmt17(p.x3)
            );
        }
    }
    out
}

pub fn parse_immersion(text: &str) -> Result<NilImmersion> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty immersion file".into()))?;
    let pairs = parse_header(header, "nimm1")?;
    let grid = grid_from_header(&pairs)?;
    let anchor = (header_value(&pairs, "ai")?, header_value(&pairs, "aj")?);
    let mut pts = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("truncated at node ({i}, {j})")))?;
            let r = parse_record(line, i, j, 3)?;
            pts.push(NilPoint::new(r[0], r[1], r[2]));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing records after the last node".into()));
    }
    NilImmersion::from_points(grid, pts, anchor)
}

pub fn write_immersion(dir: &Path, f: &NilImmersion) -> Result<()> {
    std::fs::write(dir.join(IMMERSION_FILE), immersion_string(f))?;
    Ok(())
}

pub fn read_immersion(dir: &Path) -> Result<NilImmersion> {
    let path = dir.join(IMMERSION_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_immersion(&text)
}
