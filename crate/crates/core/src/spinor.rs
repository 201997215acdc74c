//! Generating spinors: the Dirac equation, the Abresch–Rosenberg
//! differential and transport by the Gauss–Weingarten system
//!
//! ```text
//! ψ_z = M1 ψ,  ψ_z̄ = M2 ψ,
//! M1 = [[v_z, B e^{−v}], [−e^v, 0]],  M2 = [[0, e^v], [−B̄ e^{−v}, v_z̄]].
//! ```
//!
//! Along grid lines this reads `ψx = (M1 + M2) ψ` and `ψy = i (M1 − M2) ψ`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ConformalGrid};
use crate::ode::transport_line;
use crate::report::{ResidualReport, Rim};
use crate::sinh_gordon::{compatibility_residual, PotentialLog};
use crate::stencil::{holomorphicity_residual, wirtinger_dz, wirtinger_dzbar};

pub type Mat2 = Matrix2<Complex64>;
pub type Spinor = Vector2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(ψ₁, ψ₂)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    psi1: ComplexField,
    psi2: ComplexField,
}

impl SpinorField {
    pub fn new(psi1: ComplexField, psi2: ComplexField) -> Result<Self> {
        psi1.grid().ensure_same(psi2.grid())?;
        psi1.ensure_finite("psi1")?;
        psi2.ensure_finite("psi2")?;
        Ok(Self { psi1, psi2 })
    }

    pub fn constant(grid: ConformalGrid, psi: [Complex64; 2]) -> Self {
        Self {
            psi1: ComplexField::constant(grid, psi[0]),
            psi2: ComplexField::constant(grid, psi[1]),
        }
    }

    pub(crate) fn from_spinors(grid: ConformalGrid, vals: &[Spinor]) -> Self {
        Self {
            psi1: ComplexField::from_raw(grid, vals.iter().map(|s| s[0]).collect()),
            psi2: ComplexField::from_raw(grid, vals.iter().map(|s| s[1]).collect()),
        }
    }

    pub fn psi1(&self) -> &ComplexField {
        &self.psi1
    }

    pub fn psi2(&self) -> &ComplexField {
        &self.psi2
    }

    pub fn grid(&self) -> &ConformalGrid {
        self.psi1.grid()
    }

    pub fn at(&self, idx: usize) -> Spinor {
        Spinor::new(self.psi1.at(idx), self.psi2.at(idx))
    }

    pub fn get(&self, i: usize, j: usize) -> Spinor {
        self.at(self.grid().index(i, j))
    }

    /// `ψ₁ψ̄₂` per node.
    pub fn cross_term(&self) -> ComplexField {
        self.psi1
            .zip_map(&self.psi2, |a, b| a * b.conj())
            .expect("shared grid")
    }

    /// Nodes with `|ψ₁ψ̄₂| ≤ tol`; the nonzero-H reconstruction needs
    /// `ψ₁ψ̄₂ ≠ 0`.
    pub fn degenerate_nodes(&self, tol: f64) -> Vec<bool> {
        self.cross_term()
            .values()
            .iter()
            .map(|c| c.norm() <= tol)
            .collect()
    }
}

/// A 2×2 complex matrix per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: ConformalGrid,
    values: Vec<Mat2>,
}

impl MatrixField {
    pub fn from_node_fn(grid: ConformalGrid, f: impl Fn(usize) -> Mat2) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(f).collect(),
        }
    }

    pub fn grid(&self) -> &ConformalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Mat2 {
        self.values[self.grid.index(i, j)]
    }

    /// Largest entry modulus over all nodes (excluding the rim).
    pub fn max_entry(&self, rim: Rim) -> f64 {
        let mags: Vec<f64> = self.values.iter().map(max_abs).collect();
        ResidualReport::from_magnitudes("", &self.grid, &mags, None, rim).max
    }

    /// Per-node entrywise max discrepancy against `other`.
    pub fn discrepancy(&self, other: &MatrixField, name: &str, rim: Rim) -> Result<ResidualReport> {
        self.grid.ensure_same(&other.grid)?;
        let mags: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| max_abs(&(a - b)))
            .collect();
        Ok(ResidualReport::from_magnitudes(
            name, &self.grid, &mags, None, rim,
        ))
    }
}

pub(crate) fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `U = (H/2)(|ψ₁|² + |ψ₂|²) + (i/4)(|ψ₂|² − |ψ₁|²)`.
pub fn dirac_potential(psi: &SpinorField, h: f64) -> ComplexField {
    psi.psi1
        .zip_map(&psi.psi2, |a, b| {
            let (p, q) = (a.norm_sqr(), b.norm_sqr());
            Complex64::new(0.5 * h * (p + q), 0.25 * (q - p))
        })
        .expect("shared grid")
}

/// Residual of `∂ψ₂ + Uψ₁ = 0`, `−∂̄ψ₁ + Uψ₂ = 0`; the report carries
/// `sqrt(|R₁|² + |R₂|²)`.
pub fn dirac_residual(psi: &SpinorField, u: &ComplexField, rim: Rim) -> Result<ResidualReport> {
    psi.grid().ensure_same(u.grid())?;
    u.ensure_finite("U")?;
    let d2 = wirtinger_dz(&psi.psi2)?;
    let db1 = wirtinger_dzbar(&psi.psi1)?;
    let mags: Vec<f64> = (0..u.values().len())
        .map(|k| {
            let r1 = d2.at(k) + u.at(k) * psi.psi1.at(k);
            let r2 = -db1.at(k) + u.at(k) * psi.psi2.at(k);
            (r1.norm_sqr() + r2.norm_sqr()).sqrt()
        })
        .collect();
    Ok(ResidualReport::from_magnitudes(
        "dirac",
        psi.grid(),
        &mags,
        None,
        rim,
    ))
}

/// The differential `ã` and its normalization `B = ¼(2H + i) ã`.
#[derive(Debug, Clone)]
pub struct ArDifferential {
    pub a_tilde: ComplexField,
    pub b: ComplexField,
}

/// `ã = ψ̄₂∂ψ₁ − ψ₁∂ψ̄₂ + (2Hi/(2H+i)) ψ₁²ψ̄₂²`.
pub fn ar_differential(psi: &SpinorField, h: f64) -> Result<ArDifferential> {
    let d1 = wirtinger_dz(&psi.psi1)?;
    let d2bar = wirtinger_dz(&psi.psi2.conj())?;
    let k = Complex64::new(0.0, 2.0 * h) / Complex64::new(2.0 * h, 1.0);
    let values: Vec<Complex64> = (0..psi.grid().len())
        .map(|n| {
            let (p1, p2b) = (psi.psi1.at(n), psi.psi2.at(n).conj());
            p2b * d1.at(n) - p1 * d2bar.at(n) + k * p1 * p1 * p2b * p2b
        })
        .collect();
    let a_tilde = ComplexField::from_raw(*psi.grid(), values);
    let b = a_tilde.scale(Complex64::new(2.0 * h, 1.0) * 0.25);
    Ok(ArDifferential { a_tilde, b })
}

/// Residuals of the derivative identities
/// `∂ψ₁ = v_z ψ₁ + ¼(2H+i) ã e^{−v} ψ₂` and
/// `∂̄ψ₂ = −¼(2H−i) e^{−v} ā ψ₁ + v_z̄ ψ₂`.
pub fn derivative_identity_residuals(
    psi: &SpinorField,
    v: &PotentialLog,
    a_tilde: &ComplexField,
    rim: Rim,
) -> Result<(ResidualReport, ResidualReport)> {
    let grid = psi.grid();
    grid.ensure_same(v.grid())?;
    grid.ensure_same(a_tilde.grid())?;
    let h = v.mean_curvature();
    let vz = wirtinger_dz(v.v())?;
    let vzb = wirtinger_dzbar(v.v())?;
    let d1 = wirtinger_dz(&psi.psi1)?;
    let db2 = wirtinger_dzbar(&psi.psi2)?;
    let (kp, km) = (
        Complex64::new(2.0 * h, 1.0) * 0.25,
        Complex64::new(2.0 * h, -1.0) * 0.25,
    );
    let mut r8 = Vec::with_capacity(grid.len());
    let mut r9 = Vec::with_capacity(grid.len());
    for n in 0..grid.len() {
        let (p1, p2) = (psi.psi1.at(n), psi.psi2.at(n));
        let emv = (-v.v().at(n)).exp();
        let a = a_tilde.at(n);
        r8.push((d1.at(n) - (vz.at(n) * p1 + kp * a * emv * p2)).norm());
        r9.push((db2.at(n) - (-km * emv * a.conj() * p1 + vzb.at(n) * p2)).norm());
    }
    Ok((
        ResidualReport::from_magnitudes("derivative_identity_dz_psi1", grid, &r8, None, rim),
        ResidualReport::from_magnitudes("derivative_identity_dzbar_psi2", grid, &r9, None, rim),
    ))
}

#[derive(Debug, Clone)]
pub struct GWMatrices {
    pub m1: MatrixField,
    pub m2: MatrixField,
}

pub fn gw_matrices(v: &PotentialLog, b: &ComplexField) -> Result<GWMatrices> {
    let grid = *v.grid();
    grid.ensure_same(b.grid())?;
    b.ensure_finite("B")?;
    let vz = wirtinger_dz(v.v())?;
    let vzb = wirtinger_dzbar(v.v())?;
    let zero = re(0.0);
    let m1 = MatrixField::from_node_fn(grid, |n| {
        let ev = v.v().at(n).exp();
        Mat2::new(vz.at(n), b.at(n) / ev, -ev, zero)
    });
    let m2 = MatrixField::from_node_fn(grid, |n| {
        let ev = v.v().at(n).exp();
        Mat2::new(zero, ev, -b.at(n).conj() / ev, vzb.at(n))
    });
    Ok(GWMatrices { m1, m2 })
}

#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    pub norm_guard: f64,
    /// Compatibility and holomorphicity gate; exceeding it only sets
    /// [`GwTransport::compat_warning`].
    pub compat_tol: f64,
    pub rim: Rim,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            norm_guard: 1e12,
            compat_tol: 1e-6,
            rim: Rim::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GwTransport {
    pub psi: SpinorField,
    /// `|ψ_row-first − ψ_column-first|` per node.
    pub loop_closure: ResidualReport,
    pub compatibility: ResidualReport,
    pub holomorphicity: ResidualReport,
    pub compat_warning: bool,
}

/// Row-first (`row_first = true`) or column-first transport of
/// `y_x = eval_x(a, y)`, `y_y = eval_y(c, y)` from the anchor, with node
/// coefficients `a = x_coeff[n]`, `c = y_coeff[n]`. Shared by the spinor and
/// the immersion so both follow the same paths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn transport_grid<Y, F>(
    grid: &ConformalGrid,
    x_coeff: &[F],
    y_coeff: &[F],
    anchor: (usize, usize),
    y0: Y,
    row_first: bool,
    eval_x: impl Fn(&F, Y) -> Y + Sync,
    eval_y: impl Fn(&F, Y) -> Y + Sync,
    check: impl Fn(usize, usize, &Y) -> Result<()> + Sync,
) -> Result<Vec<Y>>
where
    Y: Copy + Send + Sync + std::ops::Add<Output = Y> + std::ops::Mul<Complex64, Output = Y>,
    F: Copy + Send + Sync + std::ops::Add<Output = F> + std::ops::Mul<Complex64, Output = F>,
{
    let (nx, ny) = (grid.nx(), grid.ny());
    let (ai, aj) = anchor;
    let mut out = vec![y0; grid.len()];
    if row_first {
        let line: Vec<F> = (0..nx).map(|i| x_coeff[grid.index(i, aj)]).collect();
        let row = transport_line(&line, grid.hx(), ai, y0, &eval_x, |i, y| check(i, aj, y))?;
        let cols: Vec<Vec<Y>> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let line: Vec<F> = (0..ny).map(|j| y_coeff[grid.index(i, j)]).collect();
                transport_line(&line, grid.hy(), aj, row[i], &eval_y, |j, y| check(i, j, y))
            })
            .collect::<Result<_>>()?;
        for (i, col) in cols.iter().enumerate() {
            for (j, y) in col.iter().enumerate() {
                out[grid.index(i, j)] = *y;
            }
        }
    } else {
        let line: Vec<F> = (0..ny).map(|j| y_coeff[grid.index(ai, j)]).collect();
        let col = transport_line(&line, grid.hy(), aj, y0, &eval_y, |j, y| check(ai, j, y))?;
        let rows: Vec<Vec<Y>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                let line: Vec<F> = (0..nx).map(|i| x_coeff[grid.index(i, j)]).collect();
                transport_line(&line, grid.hx(), ai, col[j], &eval_x, |i, y| check(i, j, y))
            })
            .collect::<Result<_>>()?;
        for (j, row) in rows.iter().enumerate() {
            out[j * nx..(j + 1) * nx].copy_from_slice(row);
        }
    }
    Ok(out)
}

/// Integrates the Gauss–Weingarten system from `psi0` at `anchor`: along the
/// anchor row, then along every column. A second, column-first pass gives
/// the loop-closure defect.
pub fn integrate_gw(
    v: &PotentialLog,
    b: &ComplexField,
    psi0: [Complex64; 2],
    anchor: (usize, usize),
    opts: &TransportOptions,
) -> Result<GwTransport> {
    let grid = *v.grid();
    grid.check_node(anchor.0, anchor.1)?;
    if !psi0.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::InvalidParameter("psi0 must be finite".into()));
    }
    let compatibility = compatibility_residual(v, b, opts.rim)?.report;
    let holomorphicity = holomorphicity_residual(b, opts.rim)?;
    let compat_warning =
        !(compatibility.max <= opts.compat_tol && holomorphicity.max <= opts.compat_tol);

    let gw = gw_matrices(v, b)?;
    let ax: Vec<Mat2> = gw
        .m1
        .values
        .iter()
        .zip(&gw.m2.values)
        .map(|(a, b)| a + b)
        .collect();
    let ay: Vec<Mat2> = gw
        .m1
        .values
        .iter()
        .zip(&gw.m2.values)
        .map(|(a, b)| (a - b) * I)
        .collect();
    let y0 = Spinor::new(psi0[0], psi0[1]);
    let guard = opts.norm_guard;
    let check = |i: usize, j: usize, y: &Spinor| {
        let norm = y.norm();
        if norm.is_finite() && norm <= guard {
            Ok(())
        } else {
            Err(Error::NormGuard { norm, guard, i, j })
        }
    };
    let eval = |m: &Mat2, y: Spinor| m * y;
    let rows = transport_grid(&grid, &ax, &ay, anchor, y0, true, eval, eval, check)?;
    let cols = transport_grid(&grid, &ax, &ay, anchor, y0, false, eval, eval, check)?;
    let defect: Vec<f64> = rows
        .iter()
        .zip(&cols)
        .map(|(a, b)| (a - b).norm())
        .collect();
    Ok(GwTransport {
        psi: SpinorField::from_spinors(grid, &rows),
        loop_closure: ResidualReport::from_magnitudes(
            "gw_loop_closure",
            &grid,
            &defect,
            None,
            Rim::Include,
        ),
        compatibility,
        holomorphicity,
        compat_warning,
    })
}

/// Spinor sidecar metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorMeta {
    #[serde(rename = "H")]
    pub h: f64,
    pub anchor: [usize; 2],
    pub psi0: [[f64; 2]; 2],
}
