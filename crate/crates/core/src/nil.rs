//! The Heisenberg group with the left-invariant metric
//! `ds² = dx1² + dx2² + (dx3 − x1 dx2)²`.
//!
//! Points are identified with unipotent upper-triangular matrices
//! `[[1, x1, x3], [0, 1, x2], [0, 0, 1]]`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NilPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl NilPoint {
    pub const IDENTITY: NilPoint = NilPoint {
        x1: 0.0,
        x2: 0.0,
        x3: 0.0,
    };

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x1, self.x2, self.x3)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

pub fn group_mul(a: NilPoint, b: NilPoint) -> NilPoint {
    NilPoint::new(a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3 + a.x1 * b.x2)
}

pub fn group_inv(a: NilPoint) -> NilPoint {
    NilPoint::new(-a.x1, -a.x2, -a.x3 + a.x1 * a.x2)
}

impl std::ops::Mul for NilPoint {
    type Output = NilPoint;
    fn mul(self, rhs: NilPoint) -> NilPoint {
        group_mul(self, rhs)
    }
}

/// `E₁ = ∂x1`, `E₂ = ∂x2 + x1∂x3`, `E₃ = ∂x3` in coordinates.
pub fn left_frame(x: NilPoint) -> [Vector3<f64>; 3] {
    [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, x.x1),
        Vector3::new(0.0, 0.0, 1.0),
    ]
}

/// Components of a coordinate vector in the orthonormal frame.
#[inline]
pub fn to_frame(x1: f64, v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2] - x1 * v[1])
}

#[inline]
pub fn from_frame(x1: f64, v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2] + x1 * v[1])
}

pub fn metric(x1: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0 + x1 * x1, -x1, 0.0, -x1, 1.0)
}

pub fn metric_inverse(x1: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, x1, 0.0, x1, 1.0 + x1 * x1)
}

/// `∂g/∂x_l`; only `l = 0` (the `x1` direction) is nonzero.
pub fn metric_derivative(x1: f64, l: usize) -> Matrix3<f64> {
    if l == 0 {
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 2.0 * x1, -1.0, 0.0, -1.0, 0.0)
    } else {
        Matrix3::zeros()
    }
}

pub fn inner(x1: f64, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    to_frame(x1, a).dot(&to_frame(x1, b))
}

/// Levi-Civita symbols `Γ[k][i][j] = Γᵏᵢⱼ` from
/// `½ gᵏˡ (∂ᵢ g_lj + ∂ⱼ g_li − ∂ₗ g_ij)`.
pub fn christoffel(x: NilPoint) -> [[[f64; 3]; 3]; 3] {
    let gi = metric_inverse(x.x1);
    let dg: [Matrix3<f64>; 3] = std::array::from_fn(|l| metric_derivative(x.x1, l));
    let mut out = [[[0.0; 3]; 3]; 3];
    for (k, gk) in out.iter_mut().enumerate() {
        for (i, gki) in gk.iter_mut().enumerate() {
            for (j, gkij) in gki.iter_mut().enumerate() {
                *gkij = 0.5
                    * (0..3)
                        .map(|l| gi[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// `Γᵏᵢⱼ uⁱ wʲ`.
pub fn christoffel_contract(
    gamma: &[[[f64; 3]; 3]; 3],
    u: &Vector3<f64>,
    w: &Vector3<f64>,
) -> Vector3<f64> {
    Vector3::from_fn(|k, _| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += gamma[k][i][j] * u[i] * w[j];
            }
        }
        s
    })
}
