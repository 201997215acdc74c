//! Immersions into Nil built from a generating spinor, and extrinsic checks
//! on the result.
//!
//! The immersion solves `f⁻¹f_z = αe₁ + βe₂ + γe₃` with
//! `α = (i/2)(ψ̄₂² + ψ₁²)`, `β = ½(ψ̄₂² − ψ₁²)`, `γ = ψ₁ψ̄₂`, so that in
//! coordinates `f_x = 2 Re w`, `f_y = −2 Im w` for `w = αE₁ + βE₂ + γE₃`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ConformalGrid};
use crate::nil::{christoffel, christoffel_contract, from_frame, to_frame, NilPoint};
use crate::reality::tau_sigma_at;
use crate::report::{ResidualReport, Rim};
use crate::sinh_gordon::PotentialLog;
use crate::spinor::{transport_grid, Spinor, SpinorField};
use crate::stencil::{diff_x, diff_xx, diff_xy, diff_y, diff_yy, wirtinger_dz};

/// Orientation of `H` relative to `n = f_x ×_g f_y`. Calibrated on the
/// vertical cylinder `(R cos(x/R), R sin(x/R), y)`, where this normal gives
/// `H = −1/(2R)`, and on the graph `x3 = x1x2/2 + x1²/3` (see tests).
pub const MEAN_CURVATURE_SIGN: f64 = 1.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(α, β, γ)` at one node.
#[inline]
pub fn frame_components(psi1: Complex64, psi2: Complex64) -> [Complex64; 3] {
    let p2b = psi2.conj();
    let (a, b) = (p2b * p2b, psi1 * psi1);
    [I * 0.5 * (a + b), (a - b) * 0.5, psi1 * p2b]
}

/// Coordinate velocities `(f_x, f_y)` at position `x1`.
#[inline]
pub fn velocities(psi1: Complex64, psi2: Complex64, x1: f64) -> (Vector3<f64>, Vector3<f64>) {
    let [a, b, g] = frame_components(psi1, psi2);
    let w3 = b * x1 + g;
    (
        Vector3::new(2.0 * a.re, 2.0 * b.re, 2.0 * w3.re),
        Vector3::new(-2.0 * a.im, -2.0 * b.im, -2.0 * w3.im),
    )
}

#[derive(Debug, Clone, Copy)]
pub struct ImmersionOptions {
    /// Largest admissible coordinate modulus.
    pub coord_guard: f64,
}

impl Default for ImmersionOptions {
    fn default() -> Self {
        Self { coord_guard: 1e12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NilImmersion {
    grid: ConformalGrid,
    points: Vec<NilPoint>,
    anchor: (usize, usize),
    f0: NilPoint,
}

impl NilImmersion {
    /// Wraps sampled points, e.g. an analytic reference surface.
    pub fn from_points(
        grid: ConformalGrid,
        points: Vec<NilPoint>,
        anchor: (usize, usize),
    ) -> Result<Self> {
        if points.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: points.len(),
            });
        }
        grid.check_node(anchor.0, anchor.1)?;
        if let Some(k) = points.iter().position(|p| !p.is_finite()) {
            let (i, j) = grid.coords(k);
            return Err(Error::NonFinite {
                field: "immersion".into(),
                i,
                j,
            });
        }
        let f0 = points[grid.index(anchor.0, anchor.1)];
        Ok(Self {
            grid,
            points,
            anchor,
            f0,
        })
    }

    pub fn grid(&self) -> &ConformalGrid {
        &self.grid
    }

    pub fn points(&self) -> &[NilPoint] {
        &self.points
    }

    pub fn get(&self, i: usize, j: usize) -> NilPoint {
        self.points[self.grid.index(i, j)]
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn f0(&self) -> NilPoint {
        self.f0
    }
}

#[derive(Debug, Clone)]
pub struct ImmersionTransport {
    pub immersion: NilImmersion,
    /// Coordinate distance between the row-first and column-first results.
    pub loop_closure: ResidualReport,
}

// Positions ride along as complex vectors with zero imaginary part so the
// shared RK4 transport (written over complex scalars) applies unchanged.
type CPos = Vector3<Complex64>;

fn real_part(p: &CPos) -> Vector3<f64> {
    Vector3::new(p[0].re, p[1].re, p[2].re)
}

fn complexify(v: Vector3<f64>) -> CPos {
    v.map(|x| Complex64::new(x, 0.0))
}

pub fn integrate_immersion(
    psi: &SpinorField,
    f0: NilPoint,
    anchor: (usize, usize),
    opts: &ImmersionOptions,
) -> Result<ImmersionTransport> {
    let grid = *psi.grid();
    grid.check_node(anchor.0, anchor.1)?;
    if !f0.is_finite() {
        return Err(Error::InvalidParameter("f0 must be finite".into()));
    }
    let coeffs: Vec<Spinor> = (0..grid.len()).map(|n| psi.at(n)).collect();
    let y0 = complexify(f0.to_vector());
    let eval_x = |s: &Spinor, p: CPos| complexify(velocities(s[0], s[1], p[0].re).0);
    let eval_y = |s: &Spinor, p: CPos| complexify(velocities(s[0], s[1], p[0].re).1);
    let guard = opts.coord_guard;
    let check = |i: usize, j: usize, p: &CPos| {
        let norm = real_part(p).amax();
        if norm.is_finite() && norm <= guard {
            Ok(())
        } else {
            Err(Error::NormGuard { norm, guard, i, j })
        }
    };
    let rows = transport_grid(
        &grid, &coeffs, &coeffs, anchor, y0, true, eval_x, eval_y, check,
    )?;
    let cols = transport_grid(
        &grid, &coeffs, &coeffs, anchor, y0, false, eval_x, eval_y, check,
    )?;
    let defect: Vec<f64> = rows
        .iter()
        .zip(&cols)
        .map(|(a, b)| (real_part(a) - real_part(b)).norm())
        .collect();
    let mut points: Vec<NilPoint> = rows
        .iter()
        .map(|p| NilPoint::from_vector(&real_part(p)))
        .collect();
    // f(anchor) = f0 exactly
    points[grid.index(anchor.0, anchor.1)] = f0;
    Ok(ImmersionTransport {
        immersion: NilImmersion {
            grid,
            points,
            anchor,
            f0,
        },
        loop_closure: ResidualReport::from_magnitudes(
            "immersion_loop_closure",
            &grid,
            &defect,
            None,
            Rim::Include,
        ),
    })
}

#[derive(Debug, Clone)]
pub struct Conformality {
    /// `max |α² + β² + γ²|`.
    pub report: ResidualReport,
    /// Same, relative to `(|ψ₁|² + |ψ₂|²)²`.
    pub relative: ResidualReport,
    /// `|α|² + |β|² + |γ|²` per node.
    pub conformal_factor: Vec<f64>,
}

pub fn conformality_residual(psi: &SpinorField, rim: Rim) -> Conformality {
    let grid = psi.grid();
    let n = grid.len();
    let (mut abs, mut rel, mut factor) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for k in 0..n {
        let (p1, p2) = (psi.psi1().at(k), psi.psi2().at(k));
        let [a, b, g] = frame_components(p1, p2);
        let d = (a * a + b * b + g * g).norm();
        let scale = (p1.norm_sqr() + p2.norm_sqr()).powi(2);
        abs.push(d);
        rel.push(if scale > 0.0 { d / scale } else { 0.0 });
        factor.push(a.norm_sqr() + b.norm_sqr() + g.norm_sqr());
    }
    Conformality {
        report: ResidualReport::from_magnitudes("conformality", grid, &abs, None, rim),
        relative: ResidualReport::from_magnitudes("conformality_relative", grid, &rel, None, rim),
        conformal_factor: factor,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CurvatureOptions {
    /// Minimum admissible conformal factor.
    pub conformal_floor: f64,
    pub rim: Rim,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self {
            conformal_floor: 1e-8,
            rim: Rim::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanCurvature {
    /// `H` per node (one-sided stencils on the rim).
    pub h_est: Vec<f64>,
    /// `max |H_est − target|` over interior nodes.
    pub report: ResidualReport,
    /// Unit normal per node, coordinate components.
    pub normal: Vec<Vector3<f64>>,
}

/// Discrete mean curvature of `f`: finite-difference derivatives, analytic
/// Christoffel symbols for covariant second derivatives, and
/// `n = f_x ×_g f_y / |·|`.
///
/// When `psi` is given its conformal factor must stay above the floor;
/// the induced area element is checked in any case.
pub fn mean_curvature_estimate(
    f: &NilImmersion,
    psi: Option<&SpinorField>,
    target: f64,
    opts: &CurvatureOptions,
) -> Result<MeanCurvature> {
    let grid = f.grid;
    if let Some(psi) = psi {
        grid.ensure_same(psi.grid())?;
        let conf = conformality_residual(psi, Rim::Include).conformal_factor;
        check_floor(&grid, &conf, opts)?;
    }
    let pos: Vec<Vector3<f64>> = f.points.iter().map(|p| p.to_vector()).collect();
    let (fx, fy) = (diff_x(&grid, &pos), diff_y(&grid, &pos));
    let (fxx, fyy, fxy) = (
        diff_xx(&grid, &pos),
        diff_yy(&grid, &pos),
        diff_xy(&grid, &pos),
    );
    let mut h_est = Vec::with_capacity(grid.len());
    let mut normal = Vec::with_capacity(grid.len());
    let mut area = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let p = f.points[k];
        let x1 = p.x1;
        let (ux, uy) = (to_frame(x1, &fx[k]), to_frame(x1, &fy[k]));
        let (e, ff, g) = (ux.dot(&ux), ux.dot(&uy), uy.dot(&uy));
        let det = e * g - ff * ff;
        area.push(det.max(0.0).sqrt());
        let nf = ux.cross(&uy);
        let nf = nf / nf.norm();
        normal.push(from_frame(x1, &nf));
        let gam = christoffel(p);
        let second = |d2: &Vector3<f64>, u: &Vector3<f64>, w: &Vector3<f64>| {
            to_frame(x1, &(d2 + christoffel_contract(&gam, u, w))).dot(&nf)
        };
        let l = second(&fxx[k], &fx[k], &fx[k]);
        let m = second(&fxy[k], &fx[k], &fy[k]);
        let n = second(&fyy[k], &fy[k], &fy[k]);
        h_est.push(MEAN_CURVATURE_SIGN * (e * n - 2.0 * ff * m + g * l) / (2.0 * det));
    }
    check_floor(&grid, &area, opts)?;
    let err: Vec<f64> = h_est.iter().map(|h| (h - target).abs()).collect();
    Ok(MeanCurvature {
        report: ResidualReport::from_magnitudes("mean_curvature", &grid, &err, None, opts.rim),
        h_est,
        normal,
    })
}

fn check_floor(grid: &ConformalGrid, vals: &[f64], opts: &CurvatureOptions) -> Result<()> {
    let w = match opts.rim {
        Rim::Exclude(w) => w,
        Rim::Include => 0,
    };
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let value = vals[grid.index(i, j)];
            if grid.is_inside_rim(i, j, w) && !(value >= opts.conformal_floor) {
                return Err(Error::DegenerateConformalFactor {
                    value,
                    floor: opts.conformal_floor,
                    i,
                    j,
                });
            }
        }
    }
    Ok(())
}

/// Minimum and flag count of a nonnegative diagnostic field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub flagged_nodes: usize,
    pub evaluated_nodes: usize,
}

impl DiagnosticSummary {
    fn new(name: &str, grid: &ConformalGrid, vals: &[f64], tol: f64, rim: Rim) -> Self {
        let w = match rim {
            Rim::Exclude(w) => w,
            Rim::Include => 0,
        };
        let (mut min, mut max, mut flagged, mut evaluated) = (f64::INFINITY, 0.0_f64, 0, 0);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if !grid.is_inside_rim(i, j, w) {
                    continue;
                }
                let x = vals[grid.index(i, j)];
                evaluated += 1;
                min = min.min(x);
                max = max.max(x);
                if !(x > tol) {
                    flagged += 1;
                }
            }
        }
        Self {
            name: name.into(),
            min,
            max,
            flagged_nodes: flagged,
            evaluated_nodes: evaluated,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalDiagnostics {
    /// `⟨n, E₃⟩` from the extrinsic normal.
    pub n_e3: Vec<f64>,
    pub dz_n_e3: Vec<f64>,
    pub cross: Vec<f64>,
    pub summaries: Vec<DiagnosticSummary>,
    /// `max |⟨n, E₃⟩ − (|ψ₂|² − |ψ₁|²)/(|ψ₁|² + |ψ₂|²)|`; a correlation
    /// check, not an identity the construction relies on.
    pub spinor_normal_gap: ResidualReport,
}

#[derive(Debug, Clone, Copy)]
pub struct DiagnosticTolerances {
    pub cross: f64,
    pub dz_n_e3: f64,
    pub gap: f64,
    pub rim: Rim,
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self {
            cross: 1e-8,
            dz_n_e3: 1e-8,
            gap: 1e-8,
            rim: Rim::default(),
        }
    }
}

/// Non-degeneracy diagnostics: `⟨n, E₃⟩`, `|∂⟨n, E₃⟩|`, `|ψ₁ψ̄₂|` and, when
/// `v` is supplied, the two gaps `|e^{±(v̄−v)} − (2H−i)/(2H+i)|`.
pub fn normal_e3_diagnostics(
    normal: &[Vector3<f64>],
    f: &NilImmersion,
    psi: &SpinorField,
    v: Option<&PotentialLog>,
    tol: &DiagnosticTolerances,
) -> Result<NormalDiagnostics> {
    let grid = *f.grid();
    grid.ensure_same(psi.grid())?;
    if normal.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: normal.len(),
        });
    }
    let n_e3: Vec<f64> = normal
        .iter()
        .zip(f.points())
        .map(|(n, p)| to_frame(p.x1, n)[2])
        .collect();
    let nf =
        ComplexField::from_values(grid, n_e3.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    let dz: Vec<f64> = wirtinger_dz(&nf)?
        .values()
        .iter()
        .map(|c| c.norm())
        .collect();
    let cross: Vec<f64> = psi.cross_term().values().iter().map(|c| c.norm()).collect();
    let mut summaries = vec![
        DiagnosticSummary::new(
            "n_e3_abs_gap_to_pole",
            &grid,
            &n_e3.iter().map(|x| 1.0 - x.abs()).collect::<Vec<_>>(),
            0.0,
            tol.rim,
        ),
        DiagnosticSummary::new("dz_n_e3", &grid, &dz, tol.dz_n_e3, tol.rim),
        DiagnosticSummary::new("psi1_psi2bar", &grid, &cross, tol.cross, tol.rim),
    ];
    if let Some(v) = v {
        grid.ensure_same(v.grid())?;
        let h = v.mean_curvature();
        let target = Complex64::new(2.0 * h, -1.0) / Complex64::new(2.0 * h, 1.0);
        let gaps = |sign: f64| -> Vec<f64> {
            v.v()
                .values()
                .iter()
                .map(|z| ((z.conj() - z) * sign).exp() - target)
                .map(|d| d.norm())
                .collect()
        };
        summaries.push(DiagnosticSummary::new(
            "gap_plus",
            &grid,
            &gaps(1.0),
            tol.gap,
            tol.rim,
        ));
        summaries.push(DiagnosticSummary::new(
            "gap_minus",
            &grid,
            &gaps(-1.0),
            tol.gap,
            tol.rim,
        ));
        let sigma_min: Vec<f64> = v
            .v()
            .values()
            .iter()
            .map(|&z| tau_sigma_at(z, h).1.norm())
            .collect();
        summaries.push(DiagnosticSummary::new(
            "sigma_abs",
            &grid,
            &sigma_min,
            tol.gap,
            tol.rim,
        ));
    }
    let spinor_gap: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (a, b) = (psi.psi1().at(k).norm_sqr(), psi.psi2().at(k).norm_sqr());
            if a + b > 0.0 {
                (n_e3[k] - (b - a) / (a + b)).abs()
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(NormalDiagnostics {
        spinor_normal_gap: ResidualReport::from_magnitudes(
            "normal_e3_spinor_gap",
            &grid,
            &spinor_gap,
            None,
            tol.rim,
        ),
        n_e3,
        dz_n_e3: dz,
        cross,
        summaries,
    })
}
