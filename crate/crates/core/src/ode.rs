//! Grid-line transport: classical RK4 where the coefficients are only known
//! at grid nodes and the half-step values come from cubic interpolation.

use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Values at the midpoints `k + 1/2` of a node sequence.
///
/// Interior midpoints use the centred four-point rule
/// `(−f[k−1] + 9f[k] + 9f[k+1] − f[k+2]) / 16`; the end intervals use the
/// one-sided cubic through the nearest four nodes. Three-node lines fall back
/// to the quadratic through all three.
pub fn cubic_midpoints<T>(vals: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<Complex64, Output = T>,
{
    let n = vals.len();
    let w = |x: f64| Complex64::new(x, 0.0);
    let comb = |idx: [usize; 4], c: [f64; 4]| {
        vals[idx[0]] * w(c[0])
            + vals[idx[1]] * w(c[1])
            + vals[idx[2]] * w(c[2])
            + vals[idx[3]] * w(c[3])
    };
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(vals[0] + vals[1]) * w(0.5)],
        3 => vec![
            vals[0] * w(0.375) + vals[1] * w(0.75) + vals[2] * w(-0.125),
            vals[0] * w(-0.125) + vals[1] * w(0.75) + vals[2] * w(0.375),
        ],
        _ => (0..n - 1)
            .map(|k| {
                if k == 0 {
                    comb(
                        [0, 1, 2, 3],
                        [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0],
                    )
                } else if k == n - 2 {
                    comb(
                        [n - 4, n - 3, n - 2, n - 1],
                        [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0],
                    )
                } else {
                    comb(
                        [k - 1, k, k + 1, k + 2],
                        [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
                    )
                }
            })
            .collect(),
    }
}

/// One RK4 step of `y' = F(t, y)` where the caller supplies `F` at the start,
/// middle and end of the step.
pub fn rk4_step<Y, F>(y: Y, h: f64, f0: F, fm: F, f1: F, eval: impl Fn(&F, Y) -> Y) -> Y
where
    Y: Copy + Add<Output = Y> + Mul<Complex64, Output = Y>,
{
    let c = |x: f64| Complex64::new(x, 0.0);
    let k1 = eval(&f0, y);
    let k2 = eval(&fm, y + k1 * c(0.5 * h));
    let k3 = eval(&fm, y + k2 * c(0.5 * h));
    let k4 = eval(&f1, y + k3 * c(h));
    y + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0)
}

/// Transports `y0` from node `start` to both ends of a line of `coeffs`
/// with spacing `h`. `eval(coeff, y)` is the right-hand side; `check` may
/// abort (returning the node index at which it tripped).
pub fn transport_line<Y, F, E>(
    coeffs: &[F],
    h: f64,
    start: usize,
    y0: Y,
    eval: impl Fn(&F, Y) -> Y,
    mut check: impl FnMut(usize, &Y) -> Result<(), E>,
) -> Result<Vec<Y>, E>
where
    Y: Copy + Add<Output = Y> + Mul<Complex64, Output = Y>,
    F: Copy + Add<Output = F> + Mul<Complex64, Output = F>,
{
    let n = coeffs.len();
    let mids = cubic_midpoints(coeffs);
    let mut out = vec![y0; n];
    let mut y = y0;
    for k in start..n.saturating_sub(1) {
        y = rk4_step(y, h, coeffs[k], mids[k], coeffs[k + 1], &eval);
        check(k + 1, &y)?;
        out[k + 1] = y;
    }
    y = y0;
    for k in (1..=start).rev() {
        y = rk4_step(y, -h, coeffs[k], mids[k - 1], coeffs[k - 1], &eval);
        check(k - 1, &y)?;
        out[k - 1] = y;
    }
    Ok(out)
}
