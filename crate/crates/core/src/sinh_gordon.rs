//! The sinh-Gordon equation `Δv + 8 sinh 2v = 0` with its reality
//! constraints, and a one-dimensional generator of admissible data.
//!
//! For `H ≠ 0` the constraint on `v = ρ + iφ` is
//!
//! ```text
//! φx²/cosh²ρ + φy²/sinh²ρ = 8 (cos 2φ − c),   c = (4H² − 1)/(4H² + 1)
//! ```
//!
//! and for minimal surfaces it is `Re(e^v) = 0`.
//!
//! The generator restricts to `v = v(x)`. Along that flow the complex first
//! integral `K = v'² + 8 cosh 2v` is conserved, and the constraint `C` obeys
//! `C' = −(φ' tanh ρ / cosh²ρ) · Im K`. Choosing `ρ'(0)` so that `Im K = 0`
//! therefore keeps admissible data admissible; any other choice drifts.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ConformalGrid};
use crate::report::{ResidualReport, Rim};
use crate::stencil::{diff_x, diff_y, laplacian, LaplacianStencil};

/// `v = log U` for the Dirac potential `U`, together with the mean curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialLog {
    v: ComplexField,
    mean_curvature: f64,
    profile: Option<ProfileReport>,
}

impl PotentialLog {
    pub fn new(v: ComplexField, mean_curvature: f64) -> Result<Self> {
        v.ensure_finite("v")?;
        if !mean_curvature.is_finite() {
            return Err(Error::InvalidParameter(
                "mean curvature must be finite".into(),
            ));
        }
        Ok(Self {
            v,
            mean_curvature,
            profile: None,
        })
    }

    pub fn v(&self) -> &ComplexField {
        &self.v
    }

    pub fn grid(&self) -> &ConformalGrid {
        self.v.grid()
    }

    pub fn mean_curvature(&self) -> f64 {
        self.mean_curvature
    }

    /// `ρ = Re v`.
    pub fn rho(&self) -> Vec<f64> {
        self.v.re()
    }

    /// `φ = Im v`, on the stored (continuous) branch.
    pub fn phi(&self) -> Vec<f64> {
        self.v.im()
    }

    /// `e^v = U`.
    pub fn exp_v(&self) -> ComplexField {
        self.v.map(|c| c.exp())
    }

    /// Generator diagnostics, present when the data came from
    /// [`solve_constrained_profile`].
    pub fn profile_report(&self) -> Option<&ProfileReport> {
        self.profile.as_ref()
    }

    /// Same potential with `φ` shifted by `delta`; used to build
    /// deliberately inadmissible data.
    pub fn shift_phase(&self, delta: f64) -> Self {
        Self {
            v: self.v.map(|c| c + Complex64::new(0.0, delta)),
            mean_curvature: self.mean_curvature,
            profile: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintMode {
    #[serde(rename = "minimal")]
    Minimal,
    #[serde(rename = "nonzeroH")]
    NonzeroH,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    mode: ConstraintMode,
    mean_curvature: f64,
}

impl ConstraintSpec {
    pub fn minimal() -> Self {
        Self {
            mode: ConstraintMode::Minimal,
            mean_curvature: 0.0,
        }
    }

    pub fn nonzero_h(h: f64) -> Result<Self> {
        if h == 0.0 {
            return Err(Error::ZeroMeanCurvature);
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter(
                "mean curvature must be finite".into(),
            ));
        }
        Ok(Self {
            mode: ConstraintMode::NonzeroH,
            mean_curvature: h,
        })
    }

    pub fn new(mode: ConstraintMode, h: f64) -> Result<Self> {
        match mode {
            ConstraintMode::Minimal if h != 0.0 => Err(Error::InvalidParameter(
                "minimal mode requires H = 0".into(),
            )),
            ConstraintMode::Minimal => Ok(Self::minimal()),
            ConstraintMode::NonzeroH => Self::nonzero_h(h),
        }
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn mean_curvature(&self) -> f64 {
        self.mean_curvature
    }

    /// `c = Re((2H+i)/(2H−i)) = (4H²−1)/(4H²+1)`.
    pub fn c(&self) -> f64 {
        let h2 = 4.0 * self.mean_curvature * self.mean_curvature;
        (h2 - 1.0) / (h2 + 1.0)
    }
}

/// The normalized Abresch–Rosenberg coefficient `B = (2H+i)/(2H−i)`.
pub fn ar_coefficient_constant(h: f64) -> Complex64 {
    Complex64::new(2.0 * h, 1.0) / Complex64::new(2.0 * h, -1.0)
}

/// A residual field and its statistics.
#[derive(Debug, Clone)]
pub struct Residual {
    pub field: ComplexField,
    pub report: ResidualReport,
}

impl Residual {
    pub(crate) fn from_field(
        name: &str,
        field: ComplexField,
        flagged: Option<&[bool]>,
        rim: Rim,
    ) -> Self {
        let mags: Vec<f64> = field.values().iter().map(|c| c.norm()).collect();
        let report = ResidualReport::from_magnitudes(name, field.grid(), &mags, flagged, rim);
        Self { field, report }
    }
}

/// `Δv + 8 sinh 2v` with the composite Laplacian.
pub fn sinh_gordon_residual(v: &PotentialLog, rim: Rim) -> Result<Residual> {
    sinh_gordon_residual_with(v, LaplacianStencil::Composite, rim)
}

pub fn sinh_gordon_residual_with(
    v: &PotentialLog,
    stencil: LaplacianStencil,
    rim: Rim,
) -> Result<Residual> {
    let lap = laplacian(v.v(), stencil)?;
    let field = lap.zip_map(v.v(), |l, vv| l + (vv * 2.0).sinh() * 8.0)?;
    Ok(Residual::from_field("sinh_gordon", field, None, rim))
}

/// `v_zz̄ + e^{2v} − |B|² e^{−2v}` with `v_zz̄ = Δv/4` (composite stencil).
pub fn compatibility_residual(v: &PotentialLog, b: &ComplexField, rim: Rim) -> Result<Residual> {
    v.grid().ensure_same(b.grid())?;
    b.ensure_finite("B")?;
    let lap = laplacian(v.v(), LaplacianStencil::Composite)?;
    let values = lap
        .values()
        .iter()
        .zip(v.v().values())
        .zip(b.values())
        .map(|((&l, &vv), &bb)| l * 0.25 + (vv * 2.0).exp() - (-vv * 2.0).exp() * bb.norm_sqr())
        .collect();
    Ok(Residual::from_field(
        "compatibility",
        ComplexField::from_raw(*v.grid(), values),
        None,
        rim,
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct ConstraintOptions {
    /// Lower bound for `|sinh ρ|` where the `H ≠ 0` constraint divides by it.
    pub sinh_eps: f64,
    pub rim: Rim,
}

impl Default for ConstraintOptions {
    fn default() -> Self {
        Self {
            sinh_eps: 1e-8,
            rim: Rim::default(),
        }
    }
}

/// Reality-constraint residual: `Re(e^v)` in minimal mode, otherwise
/// `φx²/cosh²ρ + φy²/sinh²ρ − 8(cos 2φ − c)`.
pub fn constraint_residual(
    v: &PotentialLog,
    spec: &ConstraintSpec,
    opts: &ConstraintOptions,
) -> Result<Residual> {
    let grid = *v.grid();
    match spec.mode() {
        ConstraintMode::Minimal => {
            let field = v.v().map(|c| Complex64::new(c.exp().re, 0.0));
            Ok(Residual::from_field(
                "reality_minimal",
                field,
                None,
                opts.rim,
            ))
        }
        ConstraintMode::NonzeroH => {
            let rho = v.rho();
            let phi = v.phi();
            let nodes: Vec<(usize, usize)> = rho
                .iter()
                .enumerate()
                .filter(|(_, r)| r.sinh().abs() <= opts.sinh_eps)
                .map(|(k, _)| grid.coords(k))
                .collect();
            if let Some(&first) = nodes.first() {
                return Err(Error::SinhBelowGuard {
                    eps: opts.sinh_eps,
                    first,
                    nodes,
                });
            }
            let px = diff_x(&grid, &phi);
            let py = diff_y(&grid, &phi);
            let c = spec.c();
            let values = (0..grid.len())
                .map(|k| {
                    let (ch, sh) = (rho[k].cosh(), rho[k].sinh());
                    let r = px[k] * px[k] / (ch * ch) + py[k] * py[k] / (sh * sh)
                        - 8.0 * ((2.0 * phi[k]).cos() - c);
                    Complex64::new(r, 0.0)
                })
                .collect();
            Ok(Residual::from_field(
                "constraint",
                ComplexField::from_raw(grid, values),
                None,
                opts.rim,
            ))
        }
    }
}

/// Initial data of the one-dimensional generator at the anchor column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileInit {
    pub rho0: f64,
    pub phi0: f64,
    /// `ρ'(0)`. When absent: 0 in minimal mode, and in nonzero-H mode the
    /// value that makes `Im K = 0`.
    #[serde(default)]
    pub drho0: Option<f64>,
    /// Sign of `φ'(0)` in nonzero-H mode.
    #[serde(default = "default_sign")]
    pub sign: f64,
}

fn default_sign() -> f64 {
    1.0
}

impl ProfileInit {
    pub fn new(rho0: f64, phi0: f64) -> Self {
        Self {
            rho0,
            phi0,
            drho0: None,
            sign: 1.0,
        }
    }

    pub fn with_drho0(mut self, drho0: f64) -> Self {
        self.drho0 = Some(drho0);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub overflow_guard: f64,
    /// Constraint drift above this is flagged in the report (not an error).
    pub drift_budget: f64,
    /// Re-project `φ'` onto the constraint set after every step.
    pub project: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            overflow_guard: 20.0,
            drift_budget: 1e-6,
            project: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub x: f64,
    pub rho: f64,
    pub drho: f64,
    pub phi: f64,
    pub dphi: f64,
}

impl ProfileState {
    /// `K = v'² + 8 cosh 2v`, conserved by `v'' = −8 sinh 2v`.
    pub fn first_integral(&self) -> Complex64 {
        let v = Complex64::new(self.rho, self.phi);
        let dv = Complex64::new(self.drho, self.dphi);
        dv * dv + (v * 2.0).cosh() * 8.0
    }

    /// `φ'²/cosh²ρ − 8(cos 2φ − c)`; the one-dimensional constraint.
    pub fn constraint(&self, c: f64) -> f64 {
        let ch = self.rho.cosh();
        self.dphi * self.dphi / (ch * ch) - 8.0 * ((2.0 * self.phi).cos() - c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub mode: ConstraintMode,
    pub initial: ProfileState,
    /// `8(cos 2φ₀ − c)`, nonzero-H mode only.
    pub radicand: Option<f64>,
    /// `max |C(x)|` along the trajectory (nonzero-H mode; 0 otherwise).
    pub constraint_drift: f64,
    /// `max |K(x) − K(0)|`; in minimal mode this is the drift of
    /// `E = ρ'² − 8 cosh 2ρ`.
    pub energy_drift: f64,
    /// `Im K` of the initial data.
    pub first_integral_im: f64,
    pub drift_budget: f64,
    pub budget_exceeded: bool,
    pub steps: usize,
}

fn rhs(s: &[f64; 4], minimal: bool) -> [f64; 4] {
    let [rho, drho, phi, dphi] = *s;
    if minimal {
        [drho, 8.0 * (2.0 * rho).sinh(), 0.0, 0.0]
    } else {
        [
            drho,
            -8.0 * (2.0 * rho).sinh() * (2.0 * phi).cos(),
            dphi,
            -8.0 * (2.0 * rho).cosh() * (2.0 * phi).sin(),
        ]
    }
}

fn rk4_step(s: &[f64; 4], h: f64, minimal: bool) -> [f64; 4] {
    let add = |a: &[f64; 4], k: &[f64; 4], t: f64| -> [f64; 4] {
        [
            a[0] + t * k[0],
            a[1] + t * k[1],
            a[2] + t * k[2],
            a[3] + t * k[3],
        ]
    };
    let k1 = rhs(s, minimal);
    let k2 = rhs(&add(s, &k1, 0.5 * h), minimal);
    let k3 = rhs(&add(s, &k2, 0.5 * h), minimal);
    let k4 = rhs(&add(s, &k3, h), minimal);
    let mut out = *s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Initial state at the anchor, enforcing the constraint on `φ'(0)`.
pub fn initial_state(
    spec: &ConstraintSpec,
    init: &ProfileInit,
) -> Result<(ProfileState, Option<f64>)> {
    match spec.mode() {
        ConstraintMode::Minimal => Ok((
            ProfileState {
                x: 0.0,
                rho: init.rho0,
                drho: init.drho0.unwrap_or(0.0),
                phi: FRAC_PI_2,
                dphi: 0.0,
            },
            None,
        )),
        ConstraintMode::NonzeroH => {
            // φy vanishes under the one-dimensional ansatz
            let radicand = 8.0 * ((2.0 * init.phi0).cos() - spec.c());
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand { radicand });
            }
            let sign = if init.sign < 0.0 { -1.0 } else { 1.0 };
            let dphi = sign * init.rho0.cosh() * radicand.sqrt();
            let drho = match init.drho0 {
                Some(d) => d,
                None if dphi != 0.0 => {
                    -4.0 * (2.0 * init.rho0).sinh() * (2.0 * init.phi0).sin() / dphi
                }
                None => 0.0,
            };
            Ok((
                ProfileState {
                    x: 0.0,
                    rho: init.rho0,
                    drho,
                    phi: init.phi0,
                    dphi,
                },
                Some(radicand),
            ))
        }
    }
}

/// Integrates the one-dimensional reduction from the anchor `n_backward`
/// steps to the left and `n_forward` steps to the right. States come back
/// in ascending `x` (relative to the anchor), anchor at index `n_backward`.
pub fn integrate_profile(
    spec: &ConstraintSpec,
    init: &ProfileInit,
    h: f64,
    n_backward: usize,
    n_forward: usize,
    opts: &ProfileOptions,
) -> Result<(Vec<ProfileState>, ProfileReport)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} must be positive"
        )));
    }
    let (s0, radicand) = initial_state(spec, init)?;
    if s0.rho.abs() > opts.overflow_guard {
        return Err(Error::OverflowGuard {
            rho: s0.rho,
            guard: opts.overflow_guard,
            x: 0.0,
        });
    }
    let minimal = spec.mode() == ConstraintMode::Minimal;
    let c = spec.c();
    let k0 = s0.first_integral();
    let mut constraint_drift = if minimal { 0.0 } else { s0.constraint(c).abs() };
    let mut energy_drift = 0.0_f64;

    let mut sweep = |steps: usize, dir: f64| -> Result<Vec<ProfileState>> {
        let mut out = Vec::with_capacity(steps);
        let mut s = [s0.rho, s0.drho, s0.phi, s0.dphi];
        for k in 1..=steps {
            s = rk4_step(&s, dir * h, minimal);
            if minimal {
                s[2] = FRAC_PI_2;
                s[3] = 0.0;
            } else if opts.project {
                let ch = s[0].cosh();
                let rad = (8.0 * ((2.0 * s[2]).cos() - c)).max(0.0);
                let sign = if s[3] < 0.0 { -1.0 } else { 1.0 };
                s[3] = sign * ch * rad.sqrt();
            }
            let x = dir * k as f64 * h;
            if !(s[0].abs() <= opts.overflow_guard) {
                return Err(Error::OverflowGuard {
                    rho: s[0],
                    guard: opts.overflow_guard,
                    x,
                });
            }
            let st = ProfileState {
                x,
                rho: s[0],
                drho: s[1],
                phi: s[2],
                dphi: s[3],
            };
            energy_drift = energy_drift.max((st.first_integral() - k0).norm());
            if !minimal {
                constraint_drift = constraint_drift.max(st.constraint(c).abs());
            }
            out.push(st);
        }
        Ok(out)
    };
    let mut back = sweep(n_backward, -1.0)?;
    let fwd = sweep(n_forward, 1.0)?;
    back.reverse();
    back.push(s0);
    back.extend(fwd);

    let report = ProfileReport {
        mode: spec.mode(),
        initial: s0,
        radicand,
        constraint_drift,
        energy_drift,
        first_integral_im: k0.im,
        drift_budget: opts.drift_budget,
        budget_exceeded: !minimal && constraint_drift > opts.drift_budget,
        steps: n_backward + n_forward,
    };
    Ok((back, report))
}

/// Admissible `v(x, y) = v(x)` on `grid`, with the initial data placed at
/// `anchor_column` and the profile integrated at step `hx` in both
/// directions.
pub fn solve_constrained_profile(
    spec: &ConstraintSpec,
    init: &ProfileInit,
    grid: &ConformalGrid,
    anchor_column: usize,
    opts: &ProfileOptions,
) -> Result<PotentialLog> {
    grid.check_node(anchor_column, 0)?;
    let (states, report) = integrate_profile(
        spec,
        init,
        grid.hx(),
        anchor_column,
        grid.nx() - 1 - anchor_column,
        opts,
    )?;
    let v = ComplexField::from_node_fn(*grid, |i, _| Complex64::new(states[i].rho, states[i].phi));
    let mut log = PotentialLog::new(v, spec.mean_curvature())?;
    log.profile = Some(report);
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn grid() -> ConformalGrid {
        ConformalGrid::square(-0.2, -0.1, 9, 0.05).unwrap()
    }

    fn constant(c: Complex64, h: f64) -> PotentialLog {
        PotentialLog::new(ComplexField::constant(grid(), c), h).unwrap()
    }

    #[test]
    fn trivial_sinh_gordon_solutions() {
        let r =
            sinh_gordon_residual(&constant(Complex64::new(0.0, 0.0), 0.0), Rim::Include).unwrap();
        assert_eq!(r.report.max, 0.0);
        let r = sinh_gordon_residual(&constant(Complex64::new(0.0, FRAC_PI_2), 0.0), Rim::Include)
            .unwrap();
        // 8 sinh(iπ) = 8i sin π, zero up to the rounding of π
        assert!(r.report.max < 1e-14);
    }

    #[test]
    fn compatibility_constant_balances() {
        let g = grid();
        let r = compatibility_residual(
            &constant(Complex64::new(0.0, 0.0), 0.0),
            &ComplexField::constant(g, Complex64::new(1.0, 0.0)),
            Rim::Include,
        )
        .unwrap();
        assert_eq!(r.report.max, 0.0);
        let r = compatibility_residual(
            &constant(Complex64::new(2f64.ln() / 2.0, 0.0), 0.0),
            &ComplexField::constant(g, Complex64::new(2.0, 0.0)),
            Rim::Include,
        )
        .unwrap();
        assert!(r.report.max < 1e-11, "{}", r.report.max); // roundoff amplified by 1/h²
    }

    #[test]
    fn compatibility_rejects_grid_mismatch() {
        let other = ConformalGrid::square(0.0, 0.0, 9, 0.05).unwrap();
        let err = compatibility_residual(
            &constant(Complex64::new(0.0, 0.0), 0.0),
            &ComplexField::zeros(other),
            Rim::default(),
        );
        assert!(matches!(err, Err(Error::GridMismatch)));
    }

    #[test]
    fn minimal_constraint_on_imaginary_axis() {
        let r = constraint_residual(
            &constant(Complex64::new(0.7, FRAC_PI_2), 0.0),
            &ConstraintSpec::minimal(),
            &ConstraintOptions::default(),
        )
        .unwrap();
        // e^{ρ₀} cos(π/2) with cos(π/2) rounded to 6e-17
        assert!(r.report.max < 1e-15);
    }

    #[test]
    fn constant_constraint_values() {
        let spec = ConstraintSpec::nonzero_h(0.5).unwrap();
        assert_eq!(spec.c(), 0.0);
        let r = constraint_residual(
            &constant(Complex64::new(0.4, FRAC_PI_4), 0.5),
            &spec,
            &ConstraintOptions::default(),
        )
        .unwrap();
        assert!(r.report.max < 1e-14);
        let r = constraint_residual(
            &constant(Complex64::new(0.4, 0.3), 0.5),
            &spec,
            &ConstraintOptions::default(),
        )
        .unwrap();
        assert!((r.report.max - 8.0 * 0.6f64.cos()).abs() < 1e-13);

        let spec = ConstraintSpec::nonzero_h(1.0).unwrap();
        assert!((spec.c() - 0.6).abs() < 1e-15);
        let r = constraint_residual(
            &constant(Complex64::new(0.4, 0.0), 1.0),
            &spec,
            &ConstraintOptions::default(),
        )
        .unwrap();
        for v in r.field.values() {
            assert!((v.re + 16.0 / 5.0).abs() < 1e-13);
        }
    }

    #[test]
    fn sinh_guard_reports_nodes() {
        let g = grid();
        let v = ComplexField::from_node_fn(g, |i, _| {
            Complex64::new(if i == 4 { 0.0 } else { 0.3 }, 0.1)
        });
        let log = PotentialLog::new(v, 0.5).unwrap();
        let err = constraint_residual(
            &log,
            &ConstraintSpec::nonzero_h(0.5).unwrap(),
            &ConstraintOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::SinhBelowGuard { nodes, first, .. } => {
                assert_eq!(nodes.len(), 9);
                assert_eq!(first, (4, 0));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn constant_admissible_point_is_not_a_pde_solution() {
        // v ≡ ρ₀ + iπ/4 at H = 1/2 satisfies the constraint but not the PDE
        let rho0 = 0.35;
        let log = constant(Complex64::new(rho0, FRAC_PI_4), 0.5);
        let c = constraint_residual(
            &log,
            &ConstraintSpec::nonzero_h(0.5).unwrap(),
            &ConstraintOptions::default(),
        )
        .unwrap();
        assert!(c.report.max < 1e-14);
        let s = sinh_gordon_residual(&log, Rim::Include).unwrap();
        let expected = Complex64::new(0.0, 8.0 * (2.0 * rho0).cosh());
        for v in s.field.values() {
            assert!((v - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn ar_constant_values() {
        let i = ar_coefficient_constant(0.5);
        assert!((i - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(ar_coefficient_constant(0.0), Complex64::new(-1.0, 0.0));
        let b = ar_coefficient_constant(1.0);
        assert!((b - Complex64::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn minimal_fixed_point() {
        let g = grid();
        let log = solve_constrained_profile(
            &ConstraintSpec::minimal(),
            &ProfileInit::new(0.0, 0.0),
            &g,
            4,
            &ProfileOptions::default(),
        )
        .unwrap();
        for c in log.v().values() {
            assert_eq!(*c, Complex64::new(0.0, FRAC_PI_2));
        }
    }

    #[test]
    fn minimal_energy_drift_is_fourth_order() {
        let spec = ConstraintSpec::minimal();
        let init = ProfileInit::new(0.1, PI);
        let drift = |h: f64, n: usize| {
            integrate_profile(&spec, &init, h, 0, n, &ProfileOptions::default())
                .unwrap()
                .1
                .energy_drift
        };
        let e1 = drift(0.02, 25);
        let e2 = drift(0.01, 50);
        assert!(e1 > 0.0 && e1 < 1e-5, "{e1}");
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "order {order}");
    }

    #[test]
    fn nonzero_h_initial_data() {
        let spec = ConstraintSpec::nonzero_h(0.5).unwrap();
        let (s, radicand) = initial_state(&spec, &ProfileInit::new(0.3, 0.2)).unwrap();
        let expected = 8.0 * 0.3f64.cosh().powi(2) * 0.4f64.cos();
        assert!((s.dphi * s.dphi - expected).abs() < 1e-13);
        assert!(radicand.unwrap() > 0.0);
        assert!(s.constraint(0.0).abs() < 1e-13);
        assert!(s.first_integral().im.abs() < 1e-13);

        let err = initial_state(&spec, &ProfileInit::new(0.3, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NegativeRadicand { radicand } if radicand < 0.0));
    }

    #[test]
    fn constraint_is_propagated_only_when_im_k_vanishes() {
        let spec = ConstraintSpec::nonzero_h(0.5).unwrap();
        let opts = ProfileOptions::default();
        let (_, tuned) =
            integrate_profile(&spec, &ProfileInit::new(0.3, 0.2), 0.005, 60, 60, &opts).unwrap();
        assert!(tuned.constraint_drift < 1e-7, "{}", tuned.constraint_drift);
        assert!(!tuned.budget_exceeded);

        let (_, free) = integrate_profile(
            &spec,
            &ProfileInit::new(0.3, 0.2).with_drho0(0.0),
            0.005,
            60,
            60,
            &opts,
        )
        .unwrap();
        assert!(free.first_integral_im.abs() > 0.1);
        assert!(free.constraint_drift > 1e-3);
        assert!(free.budget_exceeded);

        let projected = ProfileOptions {
            project: true,
            ..opts
        };
        let (_, proj) = integrate_profile(
            &spec,
            &ProfileInit::new(0.3, 0.2).with_drho0(0.0),
            0.005,
            60,
            60,
            &projected,
        )
        .unwrap();
        assert!(proj.constraint_drift < 1e-12);
    }

    #[test]
    fn overflow_guard_trips() {
        let err = integrate_profile(
            &ConstraintSpec::minimal(),
            &ProfileInit::new(2.0, 0.0),
            0.01,
            0,
            400,
            &ProfileOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::OverflowGuard { .. }));
    }

    #[test]
    fn minimal_mode_rejects_nonzero_h() {
        assert!(ConstraintSpec::new(ConstraintMode::Minimal, 0.5).is_err());
        assert!(matches!(
            ConstraintSpec::nonzero_h(0.0),
            Err(Error::ZeroMeanCurvature)
        ));
    }
}
