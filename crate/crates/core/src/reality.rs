//! The reality condition for spinors produced by the Gauss–Weingarten
//! system, and recovery of `ξ = ψ₂/ψ₁` and `l = |ψ₁|²` from `v` alone.
//!
//! With `Ŵ = diag(¼(2H−i)e^{−v}, ¼(2H+i)e^{−v})` the quadratic
//! `Q = ψ̄ᵗŴψ` must be identically 1. Its derivatives are governed by
//! `D₁Ŵ = M̄₂ᵗŴ + ∂Ŵ + ŴM₁` and `D₂Ŵ = M̄₁ᵗŴ + ∂̄Ŵ + ŴM₂`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::report::{ResidualReport, Rim};
use crate::sinh_gordon::PotentialLog;
use crate::spinor::{gw_matrices, max_abs, Mat2, MatrixField, SpinorField};
use crate::stencil::{wirtinger_dz, wirtinger_dzbar};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const AMPLITUDE_FLOOR: f64 = 1e-12;

/// `Ŵ` per node.
pub fn reality_matrix(v: &PotentialLog, h: f64) -> MatrixField {
    let (wm, wp) = (
        Complex64::new(2.0 * h, -1.0) * 0.25,
        Complex64::new(2.0 * h, 1.0) * 0.25,
    );
    MatrixField::from_node_fn(*v.grid(), |n| {
        let emv = (-v.v().at(n)).exp();
        Mat2::new(wm * emv, ZERO, ZERO, wp * emv)
    })
}

#[derive(Debug, Clone)]
pub struct RealityQuadratic {
    pub q: ComplexField,
    /// `max |Q − Q(anchor)|`.
    pub conservation: ResidualReport,
    /// `max |Q − 1|`.
    pub normalization: ResidualReport,
}

/// `Q = ψ̄ᵗŴψ` with drift measured against the anchor value.
pub fn reality_quadratic(
    psi: &SpinorField,
    v: &PotentialLog,
    h: f64,
    anchor: (usize, usize),
    rim: Rim,
) -> Result<RealityQuadratic> {
    let grid = *psi.grid();
    grid.ensure_same(v.grid())?;
    grid.check_node(anchor.0, anchor.1)?;
    let q = ComplexField::from_node_fn(grid, |i, j| {
        let n = grid.index(i, j);
        quadratic_at(psi.psi1().at(n), psi.psi2().at(n), v.v().at(n), h)
    });
    let q0 = q.get(anchor.0, anchor.1);
    let drift: Vec<f64> = q.values().iter().map(|z| (z - q0).norm()).collect();
    let norm: Vec<f64> = q.values().iter().map(|z| (z - 1.0).norm()).collect();
    Ok(RealityQuadratic {
        conservation: ResidualReport::from_magnitudes("q_drift", &grid, &drift, None, rim),
        normalization: ResidualReport::from_magnitudes("q_normalization", &grid, &norm, None, rim),
        q,
    })
}

/// `Q` at a single node.
pub fn quadratic_at(psi1: Complex64, psi2: Complex64, v: Complex64, h: f64) -> Complex64 {
    (-v).exp()
        * 0.25
        * (Complex64::new(2.0 * h, -1.0) * psi1.norm_sqr()
            + Complex64::new(2.0 * h, 1.0) * psi2.norm_sqr())
}

/// `τ`, `σ` (real up to rounding) and `ϰ` from
/// `iτ = (2H−i)e^{v̄} − (2H+i)e^v`, `iσ = (2H−i)e^v − (2H+i)e^{v̄}`,
/// `ϰ = (2H+i)(v̄ − v)_z`.
#[derive(Debug, Clone)]
pub struct RealityCoeffs {
    pub tau: ComplexField,
    pub sigma: ComplexField,
    pub kappa: ComplexField,
}

impl RealityCoeffs {
    /// `max(|Im τ|, |Im σ|)`.
    pub fn max_imaginary(&self) -> f64 {
        self.tau
            .values()
            .iter()
            .chain(self.sigma.values())
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

pub fn tau_sigma_at(v: Complex64, h: f64) -> (Complex64, Complex64) {
    let (hm, hp) = (Complex64::new(2.0 * h, -1.0), Complex64::new(2.0 * h, 1.0));
    let (ev, evb) = (v.exp(), v.conj().exp());
    ((hm * evb - hp * ev) / I, (hm * ev - hp * evb) / I)
}

pub fn reality_coeffs(v: &PotentialLog, h: f64) -> Result<RealityCoeffs> {
    let vz = wirtinger_dz(v.v())?;
    let vbar_z = wirtinger_dz(&v.v().conj())?;
    let hp = Complex64::new(2.0 * h, 1.0);
    let kappa = vbar_z.zip_map(&vz, |a, b| hp * (a - b))?;
    let ts: Vec<(Complex64, Complex64)> =
        v.v().values().iter().map(|&z| tau_sigma_at(z, h)).collect();
    let tau = ComplexField::from_values(*v.grid(), ts.iter().map(|t| t.0).collect())?;
    let sigma = ComplexField::from_values(*v.grid(), ts.iter().map(|t| t.1).collect())?;
    Ok(RealityCoeffs { tau, sigma, kappa })
}

#[derive(Debug, Clone)]
pub struct RealityDerivatives {
    pub d1_explicit: MatrixField,
    pub d2_explicit: MatrixField,
    pub d1_defining: MatrixField,
    pub d2_defining: MatrixField,
}

impl RealityDerivatives {
    /// Largest entrywise gap between the explicit and defining forms.
    pub fn discrepancy(&self, rim: Rim) -> Result<ResidualReport> {
        self.d1_explicit
            .grid()
            .ensure_same(self.d1_defining.grid())?;
        let mags: Vec<f64> = (0..self.d1_explicit.values().len())
            .map(|k| {
                let d1 = max_abs(&(self.d1_explicit.values()[k] - self.d1_defining.values()[k]));
                let d2 = max_abs(&(self.d2_explicit.values()[k] - self.d2_defining.values()[k]));
                d1.max(d2)
            })
            .collect();
        Ok(ResidualReport::from_magnitudes(
            "reality_derivative_discrepancy",
            self.d1_explicit.grid(),
            &mags,
            None,
            rim,
        ))
    }
}

/// `D₁Ŵ`, `D₂Ŵ` by the closed forms
/// `¼e^{−v}[[0, iτB/|e^v|²], [iτ, ϰ]]` and `¼e^{−v}[[−ϰ̄, iσ], [iσB̄/|e^v|², 0]]`,
/// and by their defining products with a finite-difference `∂Ŵ`.
pub fn reality_derivative_matrices(
    v: &PotentialLog,
    b: &ComplexField,
    h: f64,
) -> Result<RealityDerivatives> {
    let grid = *v.grid();
    grid.ensure_same(b.grid())?;
    let coeffs = reality_coeffs(v, h)?;
    let d1_explicit = MatrixField::from_node_fn(grid, |n| {
        let vv = v.v().at(n);
        let (emv, m2) = ((-vv).exp(), (2.0 * vv.re).exp());
        let (it, k) = (I * coeffs.tau.at(n), coeffs.kappa.at(n));
        Mat2::new(ZERO, it * b.at(n) / m2, it, k) * (emv * 0.25)
    });
    let d2_explicit = MatrixField::from_node_fn(grid, |n| {
        let vv = v.v().at(n);
        let (emv, m2) = ((-vv).exp(), (2.0 * vv.re).exp());
        let (is, k) = (I * coeffs.sigma.at(n), coeffs.kappa.at(n));
        Mat2::new(-k.conj(), is, is * b.at(n).conj() / m2, ZERO) * (emv * 0.25)
    });

    let w = reality_matrix(v, h);
    let w11 = ComplexField::from_raw(grid, w.values().iter().map(|m| m[(0, 0)]).collect());
    let w22 = ComplexField::from_raw(grid, w.values().iter().map(|m| m[(1, 1)]).collect());
    let (dw11, dw22) = (wirtinger_dz(&w11)?, wirtinger_dz(&w22)?);
    let (dbw11, dbw22) = (wirtinger_dzbar(&w11)?, wirtinger_dzbar(&w22)?);
    let gw = gw_matrices(v, b)?;
    let d1_defining = MatrixField::from_node_fn(grid, |n| {
        let (m1, m2, wn) = (gw.m1.values()[n], gw.m2.values()[n], w.values()[n]);
        m2.adjoint() * wn + Mat2::new(dw11.at(n), ZERO, ZERO, dw22.at(n)) + wn * m1
    });
    let d2_defining = MatrixField::from_node_fn(grid, |n| {
        let (m1, m2, wn) = (gw.m1.values()[n], gw.m2.values()[n], w.values()[n]);
        m1.adjoint() * wn + Mat2::new(dbw11.at(n), ZERO, ZERO, dbw22.at(n)) + wn * m2
    });
    Ok(RealityDerivatives {
        d1_explicit,
        d2_explicit,
        d1_defining,
        d2_defining,
    })
}

/// Thresholds below which a node counts as violating a precondition of the
/// recovery.
#[derive(Debug, Clone, Copy)]
pub struct XiTolerances {
    /// Gap `|e^{±(v̄−v)} − (2H−i)/(2H+i)|`.
    pub gap: f64,
    /// `|ϰ|`.
    pub kappa: f64,
    /// `|1 − |B|²/|e^v|⁴|`.
    pub denominator: f64,
    pub rim: Rim,
}

impl Default for XiTolerances {
    fn default() -> Self {
        Self {
            gap: 0.2,
            kappa: 1e-6,
            denominator: 1e-2,
            rim: Rim::default(),
        }
    }
}

/// Counts of flagged nodes by reason (a node may fail several).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiFlags {
    pub gap_plus: usize,
    pub gap_minus: usize,
    pub kappa: usize,
    pub denominator: usize,
}

#[derive(Debug, Clone)]
pub struct XiRecovery {
    /// `ξ`, set to 0 at flagged nodes.
    pub xi: ComplexField,
    pub flagged: Vec<bool>,
    pub flags: XiFlags,
    /// `| |ξ|² − τ/σ |` over unflagged nodes.
    pub modulus: ResidualReport,
    pub min_gap_plus: f64,
    pub min_gap_minus: f64,
}

/// `ξ = (ϰ̄ + ϰB̄/|e^v|²) / (iσ(1 − |B|²/|e^v|⁴))` with the modulus check
/// `|ξ|² = τ/σ`. Nodes that violate a precondition are skipped and counted.
pub fn xi_recovery(
    v: &PotentialLog,
    b: &ComplexField,
    h: f64,
    tol: &XiTolerances,
) -> Result<XiRecovery> {
    if h == 0.0 {
        return Err(Error::ZeroMeanCurvature);
    }
    let grid = *v.grid();
    grid.ensure_same(b.grid())?;
    b.ensure_finite("B")?;
    let coeffs = reality_coeffs(v, h)?;
    let target = Complex64::new(2.0 * h, -1.0) / Complex64::new(2.0 * h, 1.0);
    let mut flags = XiFlags::default();
    let mut flagged = vec![false; grid.len()];
    let mut xi = vec![ZERO; grid.len()];
    let mut resid = vec![0.0; grid.len()];
    let (mut min_plus, mut min_minus) = (f64::INFINITY, f64::INFINITY);
    for n in 0..grid.len() {
        let vv = v.v().at(n);
        let d = vv.conj() - vv;
        let gap_plus = (d.exp() - target).norm();
        let gap_minus = ((-d).exp() - target).norm();
        min_plus = min_plus.min(gap_plus);
        min_minus = min_minus.min(gap_minus);
        let m2 = (2.0 * vv.re).exp();
        let k = coeffs.kappa.at(n);
        let bn = b.at(n);
        let den = 1.0 - bn.norm_sqr() / (m2 * m2);
        let mut bad = false;
        for (fails, count) in [
            (gap_plus < tol.gap, &mut flags.gap_plus),
            (gap_minus < tol.gap, &mut flags.gap_minus),
            (k.norm() < tol.kappa, &mut flags.kappa),
            (den.abs() < tol.denominator, &mut flags.denominator),
        ] {
            if fails {
                *count += 1;
                bad = true;
            }
        }
        if bad {
            flagged[n] = true;
            continue;
        }
        let (tau, sigma) = (coeffs.tau.at(n).re, coeffs.sigma.at(n).re);
        let x = (k.conj() + k * bn.conj() / m2) / (I * sigma * den);
        xi[n] = x;
        resid[n] = (x.norm_sqr() - tau / sigma).abs();
    }
    let modulus =
        ResidualReport::from_magnitudes("xi_modulus", &grid, &resid, Some(&flagged), tol.rim);
    Ok(XiRecovery {
        xi: ComplexField::from_raw(grid, xi),
        flagged,
        flags,
        modulus,
        min_gap_plus: min_plus,
        min_gap_minus: min_minus,
    })
}

#[derive(Debug, Clone)]
pub struct Amplitude {
    /// `l = |ψ₁|²`, 0 at masked nodes.
    pub l: Vec<f64>,
    /// `|Im(e^v) − (l/4)(|ξ|² − 1)|`.
    pub im_defect: ResidualReport,
}

/// `l = 2Re(e^v) / (H(1 + |ξ|²))` from the real part of the reality
/// identity; the imaginary part is reported as a consistency defect.
pub fn amplitude_recovery(
    v: &PotentialLog,
    xi: &ComplexField,
    h: f64,
    mask: Option<&[bool]>,
    rim: Rim,
) -> Result<Amplitude> {
    if h == 0.0 {
        return Err(Error::ZeroMeanCurvature);
    }
    let grid = *v.grid();
    grid.ensure_same(xi.grid())?;
    let mut l = vec![0.0; grid.len()];
    let mut defect = vec![0.0; grid.len()];
    let mut bad = Vec::new();
    for n in 0..grid.len() {
        if mask.is_some_and(|m| m[n]) {
            continue;
        }
        let ev = v.v().at(n).exp();
        let x2 = xi.at(n).norm_sqr();
        let ln = 2.0 * ev.re / (h * (1.0 + x2));
        // cos(π/2) rounds to 6e-17, so "positive" means above rounding level
        if !(ln > AMPLITUDE_FLOOR * ev.norm()) {
            bad.push(grid.coords(n));
            continue;
        }
        l[n] = ln;
        defect[n] = (ev.im - 0.25 * ln * (x2 - 1.0)).abs();
    }
    if let Some(&first) = bad.first() {
        return Err(Error::NonPositiveAmplitude { first, nodes: bad });
    }
    Ok(Amplitude {
        l,
        im_defect: ResidualReport::from_magnitudes(
            "amplitude_im_defect",
            &grid,
            &defect,
            mask,
            rim,
        ),
    })
}
