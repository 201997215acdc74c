//! End-to-end construction: admissible `v` → spinor → immersion, with every
//! residual suite collected into one report.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ConformalGrid};
use crate::immersion::{
    conformality_residual, integrate_immersion, mean_curvature_estimate, normal_e3_diagnostics,
    CurvatureOptions, DiagnosticSummary, DiagnosticTolerances, ImmersionOptions, NilImmersion,
};
use crate::mesh::MeshFormat;
use crate::nil::NilPoint;
use crate::reality::{
    amplitude_recovery, quadratic_at, reality_coeffs, reality_derivative_matrices,
    reality_quadratic, xi_recovery, XiFlags, XiTolerances,
};
use crate::report::{empirical_order, ResidualReport, Rim};
use crate::sinh_gordon::{
    ar_coefficient_constant, compatibility_residual, constraint_residual, sinh_gordon_residual,
    solve_constrained_profile, ConstraintMode, ConstraintOptions, ConstraintSpec, PotentialLog,
    ProfileInit, ProfileOptions, ProfileReport,
};
use crate::spinor::{
    ar_differential, derivative_identity_residuals, dirac_residual, integrate_gw, SpinorField,
    TransportOptions,
};
use crate::stencil::holomorphicity_residual;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<ConformalGrid> {
        ConformalGrid::new(
            Complex64::new(self.x0, self.y0),
            self.nx,
            self.ny,
            self.hx,
            self.hy,
        )
    }
}

/// Numerical knobs that are not residual tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub overflow_guard: f64,
    pub drift_budget: f64,
    pub project: bool,
    pub norm_guard: f64,
    pub compat_tol: f64,
    pub sinh_eps: f64,
    pub conformal_floor: f64,
    pub coord_guard: f64,
    pub xi_gap: f64,
    pub xi_kappa: f64,
    pub xi_denominator: f64,
    /// Also run the problem at twice the spacing to estimate orders.
    pub order_companion: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = ProfileOptions::default();
        let t = TransportOptions::default();
        let x = XiTolerances::default();
        Self {
            overflow_guard: p.overflow_guard,
            drift_budget: p.drift_budget,
            project: p.project,
            norm_guard: t.norm_guard,
            compat_tol: t.compat_tol,
            sinh_eps: ConstraintOptions::default().sinh_eps,
            conformal_floor: CurvatureOptions::default().conformal_floor,
            coord_guard: ImmersionOptions::default().coord_guard,
            xi_gap: x.gap,
            xi_kappa: x.kappa,
            xi_denominator: x.denominator,
            order_companion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub mesh: MeshFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            mesh: MeshFormat::Obj,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: ConstraintMode,
    #[serde(rename = "H", default)]
    pub h: f64,
    pub grid: GridConfig,
    pub profile: ProfileInit,
    pub anchor: [usize; 2],
    #[serde(default)]
    pub f0: [f64; 3],
    /// Seed spinor at the anchor. Minimal mode rescales it so `Q = 1`; in
    /// nonzero-H mode only the phase of `ψ₁` is used.
    #[serde(default = "default_psi0")]
    pub psi0: [[f64; 2]; 2],
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_psi0() -> [[f64; 2]; 2] {
    [[0.5, 0.0], [1.0, 0.0]]
}

/// Residual tolerances used when the config does not override them.
///
/// Absolute values, sized with headroom for the desk-scale runs
/// (h between 0.005 and 0.01 on the unit square) of both modes.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("sinh_gordon", 2e-1),
        ("constraint", 5e-2),
        ("reality_minimal", 1e-12),
        ("compatibility", 5e-2),
        ("b_holomorphicity", 1e-10),
        ("dirac", 1e-1),
        ("q_drift", 1e-2),
        ("q_normalization", 1e-2),
        ("ar_holomorphicity", 1.0),
        ("ar_normalization", 5e-2),
        ("derivative_identity_dz_psi1", 1e-1),
        ("derivative_identity_dzbar_psi2", 1e-1),
        ("gw_loop_closure", 5e-2),
        ("immersion_loop_closure", 5e-1),
        ("conformality_relative", 1e-13),
        ("mean_curvature", 1e-2),
        ("xi_modulus", 1e-2),
        ("amplitude_im_defect", 1e-2),
        ("reality_derivative_discrepancy", 5e-2),
        ("tau_sigma_imag", 1e-12),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Fills default tolerances and checks mode/H consistency.
    pub fn resolved(&self) -> Result<Self> {
        self.spec()?;
        self.grid
            .to_grid()?
            .check_node(self.anchor[0], self.anchor[1])?;
        let mut out = self.clone();
        let mut tol = default_tolerances();
        tol.extend(self.tolerances.iter().map(|(k, v)| (k.clone(), *v)));
        out.tolerances = tol;
        Ok(out)
    }

    pub fn spec(&self) -> Result<ConstraintSpec> {
        ConstraintSpec::new(self.mode, self.h)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The same problem at twice the spacing, anchored at the same point.
    pub fn coarsened(&self) -> Result<Self> {
        if !self.anchor[0].is_multiple_of(2) || !self.anchor[1].is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "order companion needs even anchor indices".into(),
            ));
        }
        let mut c = self.clone();
        c.grid.nx = self.grid.nx.div_ceil(2);
        c.grid.ny = self.grid.ny.div_ceil(2);
        c.grid.hx *= 2.0;
        c.grid.hy *= 2.0;
        c.anchor = [self.anchor[0] / 2, self.anchor[1] / 2];
        c.solver.order_companion = false;
        Ok(c)
    }

    fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            overflow_guard: self.solver.overflow_guard,
            drift_budget: self.solver.drift_budget,
            project: self.solver.project,
        }
    }

    fn xi_tolerances(&self) -> XiTolerances {
        XiTolerances {
            gap: self.solver.xi_gap,
            kappa: self.solver.xi_kappa,
            denominator: self.solver.xi_denominator,
            rim: Rim::default(),
        }
    }

    fn anchor(&self) -> (usize, usize) {
        (self.anchor[0], self.anchor[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    #[serde(flatten)]
    pub residual: ResidualReport,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: PipelineConfig,
    pub config_sha256: String,
    pub profile: Option<ProfileReport>,
    pub entries: Vec<ReportEntry>,
    pub diagnostics: Vec<DiagnosticSummary>,
    pub xi_flags: Option<XiFlags>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl Report {
    fn new(command: &str, config: &PipelineConfig, residuals: Vec<ResidualReport>) -> Self {
        let entries: Vec<ReportEntry> = residuals
            .into_iter()
            .map(|r| {
                let tolerance = config.tolerances.get(&r.name).copied();
                let pass = tolerance.map(|t| r.max <= t);
                ReportEntry {
                    residual: r,
                    tolerance,
                    pass,
                }
            })
            .collect();
        let pass = entries.iter().all(|e| e.pass != Some(false));
        Self {
            command: command.into(),
            config: config.clone(),
            config_sha256: config.hash(),
            profile: None,
            entries,
            diagnostics: Vec::new(),
            xi_flags: None,
            warnings: Vec::new(),
            pass,
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.residual.name == name)
    }

    pub fn failures(&self) -> Vec<&ReportEntry> {
        self.entries
            .iter()
            .filter(|e| e.pass == Some(false))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Admissible `v` for the configuration.
pub fn generate_potential(cfg: &PipelineConfig) -> Result<PotentialLog> {
    let grid = cfg.grid.to_grid()?;
    solve_constrained_profile(
        &cfg.spec()?,
        &cfg.profile,
        &grid,
        cfg.anchor[0],
        &cfg.profile_options(),
    )
}

pub fn constant_b(grid: &ConformalGrid, h: f64) -> ComplexField {
    ComplexField::constant(*grid, ar_coefficient_constant(h))
}

/// `generate`: potential plus its PDE and constraint residuals.
pub fn generate(cfg: &PipelineConfig) -> Result<(PotentialLog, Report)> {
    let cfg = cfg.resolved()?;
    let v = generate_potential(&cfg)?;
    let spec = cfg.spec()?;
    let residuals = vec![
        sinh_gordon_residual(&v, Rim::default())?.report,
        constraint_residual(&v, &spec, &constraint_options(&cfg))?.report,
    ];
    let mut report = Report::new("generate", &cfg, residuals);
    report.profile = v.profile_report().cloned();
    if report.profile.as_ref().is_some_and(|p| p.budget_exceeded) {
        report
            .warnings
            .push("constraint drift exceeded the configured budget".into());
    }
    Ok((v, report))
}

fn constraint_options(cfg: &PipelineConfig) -> ConstraintOptions {
    ConstraintOptions {
        sinh_eps: cfg.solver.sinh_eps,
        rim: Rim::default(),
    }
}

/// Seed spinor at the anchor, normalized so that `Q(anchor) = 1`.
pub fn initial_spinor(
    cfg: &PipelineConfig,
    v: &PotentialLog,
    b: &ComplexField,
) -> Result<[Complex64; 2]> {
    let (ai, aj) = cfg.anchor();
    let h = v.mean_curvature();
    let seed = [
        Complex64::new(cfg.psi0[0][0], cfg.psi0[0][1]),
        Complex64::new(cfg.psi0[1][0], cfg.psi0[1][1]),
    ];
    let psi = match cfg.mode {
        ConstraintMode::Minimal => seed,
        ConstraintMode::NonzeroH => {
            let xi = xi_recovery(v, b, h, &cfg.xi_tolerances())?;
            let n = v.grid().index(ai, aj);
            if xi.flagged[n] {
                return Err(Error::InvalidParameter(format!(
                    "anchor ({ai}, {aj}) violates the non-degeneracy conditions of the recovery"
                )));
            }
            let mask: Vec<bool> = (0..v.grid().len()).map(|k| k != n).collect();
            let amp = amplitude_recovery(v, &xi.xi, h, Some(&mask), Rim::Include)?;
            let phase = if seed[0].norm() > 0.0 {
                seed[0] / seed[0].norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let psi1 = phase * amp.l[n].sqrt();
            [psi1, xi.xi.at(n) * psi1]
        }
    };
    let q = quadratic_at(psi[0], psi[1], v.v().get(ai, aj), h);
    if !(q.re > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Q(anchor) = {q} has no positive real part; cannot normalize psi0"
        )));
    }
    let s = q.sqrt();
    Ok([psi[0] / s, psi[1] / s])
}

/// Everything a build produces.
#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub v: PotentialLog,
    pub psi: SpinorField,
    pub psi0: [Complex64; 2],
    pub immersion: NilImmersion,
    pub report: Report,
    pub scalars: Scalars,
}

/// Per-node fields attached to VTK exports.
#[derive(Debug, Clone, Default)]
pub struct Scalars {
    pub h_est: Vec<f64>,
    pub q_drift: Vec<f64>,
    pub constraint: Vec<f64>,
}

impl Scalars {
    pub fn named(&self) -> Vec<(&str, &[f64])> {
        let mut out: Vec<(&str, &[f64])> = Vec::new();
        for (name, v) in [
            ("H_est", &self.h_est),
            ("Q_drift", &self.q_drift),
            ("constraint_residual", &self.constraint),
        ] {
            if !v.is_empty() {
                out.push((name, v.as_slice()));
            }
        }
        out
    }
}

struct Suite {
    residuals: Vec<ResidualReport>,
    diagnostics: Vec<DiagnosticSummary>,
    xi_flags: Option<XiFlags>,
    warnings: Vec<String>,
    scalars: Scalars,
}

fn transport_options(cfg: &PipelineConfig) -> TransportOptions {
    TransportOptions {
        norm_guard: cfg.solver.norm_guard,
        compat_tol: cfg.solver.compat_tol,
        rim: Rim::default(),
    }
}

/// Every residual check on a (v, ψ, f) triple. `loops` are the loop-closure
/// reports of the transports that produced (or re-produce) ψ and f.
fn residual_suite(
    cfg: &PipelineConfig,
    v: &PotentialLog,
    b: &ComplexField,
    psi: &SpinorField,
    f: &NilImmersion,
    loops: [ResidualReport; 2],
) -> Result<Suite> {
    let spec = cfg.spec()?;
    let h = spec.mean_curvature();
    let anchor = cfg.anchor();
    let rim = Rim::default();
    let mut out = Vec::new();
    let mut warnings = Vec::new();

    out.push(sinh_gordon_residual(v, rim)?.report);
    let constraint = match constraint_residual(v, &spec, &constraint_options(cfg)) {
        Ok(c) => c,
        // reported, not fatal: the downstream checks remain meaningful
        Err(Error::SinhBelowGuard { nodes, .. }) => {
            warnings.push(format!(
                "constraint not evaluated: |sinh Re v| below guard at {} node(s)",
                nodes.len()
            ));
            crate::sinh_gordon::Residual::from_field(
                "constraint",
                ComplexField::from_raw(
                    *v.grid(),
                    vec![Complex64::new(f64::NAN, 0.0); v.grid().len()],
                ),
                None,
                rim,
            )
        }
        Err(e) => return Err(e),
    };
    out.push(constraint.report.clone());
    let compat = compatibility_residual(v, b, rim)?.report;
    let b_holo = holomorphicity_residual(b, rim)?;
    if compat.max > cfg.solver.compat_tol || b_holo.max > cfg.solver.compat_tol {
        warnings.push(format!(
            "compatibility gate exceeded ({:.3e}, {:.3e} > {:.1e}); transport is path dependent",
            compat.max, b_holo.max, cfg.solver.compat_tol
        ));
    }
    out.push(compat);
    out.push(ResidualReport {
        name: "b_holomorphicity".into(),
        ..b_holo
    });

    let u = v.exp_v();
    out.push(dirac_residual(psi, &u, rim)?);
    let q = reality_quadratic(psi, v, h, anchor, rim)?;
    out.push(q.conservation.clone());
    out.push(q.normalization.clone());
    let q0 = q.q.get(anchor.0, anchor.1);
    let q_drift: Vec<f64> = q.q.values().iter().map(|z| (z - q0).norm()).collect();

    let ar = ar_differential(psi, h)?;
    out.push(ResidualReport {
        name: "ar_holomorphicity".into(),
        ..holomorphicity_residual(&ar.a_tilde, rim)?
    });
    let gap: Vec<f64> =
        ar.b.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .collect();
    out.push(ResidualReport::from_magnitudes(
        "ar_normalization",
        v.grid(),
        &gap,
        None,
        rim,
    ));
    let (d8, d9) = derivative_identity_residuals(psi, v, &ar.a_tilde, rim)?;
    out.push(d8);
    out.push(d9);
    let [gw_loop, imm_loop] = loops;
    out.push(gw_loop);
    out.push(imm_loop);

    out.push(conformality_residual(psi, rim).relative);
    let curvature = CurvatureOptions {
        conformal_floor: cfg.solver.conformal_floor,
        rim,
    };
    let mc = mean_curvature_estimate(f, Some(psi), h, &curvature)?;
    out.push(mc.report.clone());

    let mut xi_flags = None;
    if spec.mode() == ConstraintMode::NonzeroH {
        let xi = xi_recovery(v, b, h, &cfg.xi_tolerances())?;
        out.push(xi.modulus.clone());
        let amp = amplitude_recovery(v, &xi.xi, h, Some(&xi.flagged), rim)?;
        out.push(amp.im_defect);
        if xi.modulus.flagged_nodes > 0 {
            warnings.push(format!(
                "xi recovery skipped {} degenerate node(s)",
                xi.modulus.flagged_nodes
            ));
        }
        xi_flags = Some(xi.flags);
    }
    out.push(reality_derivative_matrices(v, b, h)?.discrepancy(rim)?);
    let coeffs = reality_coeffs(v, h)?;
    out.push(ResidualReport::scalar(
        "tau_sigma_imag",
        coeffs.max_imaginary(),
    ));

    let diag = normal_e3_diagnostics(
        &mc.normal,
        f,
        psi,
        (spec.mode() == ConstraintMode::NonzeroH).then_some(v),
        &DiagnosticTolerances::default(),
    )?;
    out.push(diag.spinor_normal_gap);

    Ok(Suite {
        residuals: out,
        diagnostics: diag.summaries,
        xi_flags,
        warnings,
        scalars: Scalars {
            h_est: mc.h_est,
            q_drift,
            constraint: constraint.field.values().iter().map(|c| c.re).collect(),
        },
    })
}

fn assemble(
    command: &str,
    cfg: &PipelineConfig,
    suite: Suite,
    profile: Option<ProfileReport>,
) -> Report {
    let mut report = Report::new(command, cfg, suite.residuals);
    report.diagnostics = suite.diagnostics;
    report.xi_flags = suite.xi_flags;
    report.warnings = suite.warnings;
    if profile.as_ref().is_some_and(|p| p.budget_exceeded) {
        report
            .warnings
            .push("generator constraint drift exceeded the configured budget".into());
    }
    report.profile = profile;
    report
}

fn build_once(cfg: &PipelineConfig) -> Result<BuildOutput> {
    let v = generate_potential(cfg)?;
    let b = constant_b(v.grid(), v.mean_curvature());
    let psi0 = initial_spinor(cfg, &v, &b)?;
    let gw = integrate_gw(&v, &b, psi0, cfg.anchor(), &transport_options(cfg))?;
    let f0 = NilPoint::new(cfg.f0[0], cfg.f0[1], cfg.f0[2]);
    let imm = integrate_immersion(
        &gw.psi,
        f0,
        cfg.anchor(),
        &ImmersionOptions {
            coord_guard: cfg.solver.coord_guard,
        },
    )?;
    let suite = residual_suite(
        cfg,
        &v,
        &b,
        &gw.psi,
        &imm.immersion,
        [gw.loop_closure, imm.loop_closure],
    )?;
    let scalars = suite.scalars.clone();
    let report = assemble("build", cfg, suite, v.profile_report().cloned());
    Ok(BuildOutput {
        psi: gw.psi,
        psi0,
        immersion: imm.immersion,
        v,
        report,
        scalars,
    })
}

impl Clone for Suite {
    fn clone(&self) -> Self {
        Self {
            residuals: self.residuals.clone(),
            diagnostics: self.diagnostics.clone(),
            xi_flags: self.xi_flags,
            warnings: self.warnings.clone(),
            scalars: self.scalars.clone(),
        }
    }
}

/// `build`: the full construction, with order estimates from a run at twice
/// the spacing when `solver.order_companion` is set.
pub fn build(cfg: &PipelineConfig) -> Result<BuildOutput> {
    let cfg = cfg.resolved()?;
    let mut out = build_once(&cfg)?;
    if cfg.solver.order_companion {
        let coarse_cfg = cfg.coarsened()?;
        let coarse = build_once(&coarse_cfg)?;
        attach_orders(
            &mut out.report,
            &coarse.report,
            coarse_cfg.grid.hx,
            cfg.grid.hx,
        );
    }
    Ok(out)
}

fn attach_orders(fine: &mut Report, coarse: &Report, h_coarse: f64, h_fine: f64) {
    for e in &mut fine.entries {
        if let Some(c) = coarse.entry(&e.residual.name) {
            e.residual.order_estimate =
                empirical_order(c.residual.max, e.residual.max, h_coarse, h_fine);
        }
    }
}

/// `verify`: re-runs the suites on stored artifacts. Loop closures come from
/// re-transporting the stored anchor values.
pub fn verify(
    cfg: &PipelineConfig,
    v: &PotentialLog,
    psi: &SpinorField,
    f: &NilImmersion,
) -> Result<Report> {
    let cfg = cfg.resolved()?;
    let grid = cfg.grid.to_grid()?;
    grid.ensure_same(v.grid())?;
    grid.ensure_same(psi.grid())?;
    grid.ensure_same(f.grid())?;
    let (ai, aj) = cfg.anchor();
    let b = constant_b(&grid, v.mean_curvature());
    let p0 = psi.get(ai, aj);
    let gw = integrate_gw(v, &b, [p0[0], p0[1]], (ai, aj), &transport_options(&cfg))?;
    let imm = integrate_immersion(
        psi,
        f.get(ai, aj),
        (ai, aj),
        &ImmersionOptions {
            coord_guard: cfg.solver.coord_guard,
        },
    )?;
    let suite = residual_suite(&cfg, v, &b, psi, f, [gw.loop_closure, imm.loop_closure])?;
    Ok(assemble("verify", &cfg, suite, None))
}
