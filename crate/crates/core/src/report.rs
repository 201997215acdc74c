//! Named residual statistics shared by every verification routine.

use serde::{Deserialize, Serialize};

use crate::grid::ConformalGrid;

/// Which nodes a residual statistic runs over.
///
/// Boundary stencils have larger error constants, so reports skip a one-node
/// rim unless asked otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rim {
    Exclude(usize),
    Include,
}

impl Default for Rim {
    fn default() -> Self {
        Rim::Exclude(1)
    }
}

impl Rim {
    fn width(self) -> usize {
        match self {
            Rim::Exclude(w) => w,
            Rim::Include => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub max: f64,
    pub l2: f64,
    pub flagged_nodes: usize,
    pub evaluated_nodes: usize,
    pub order_estimate: Option<f64>,
}

impl ResidualReport {
    /// Builds a report from per-node magnitudes. `flagged` nodes are skipped
    /// and counted; non-finite magnitudes are treated as flagged.
    pub fn from_magnitudes(
        name: impl Into<String>,
        grid: &ConformalGrid,
        magnitudes: &[f64],
        flagged: Option<&[bool]>,
        rim: Rim,
    ) -> Self {
        let w = rim.width();
        let mut max = 0.0_f64;
        let mut sum_sq = 0.0;
        let mut flagged_nodes = 0;
        let mut evaluated_nodes = 0;
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if !grid.is_inside_rim(i, j, w) {
                    continue;
                }
                let idx = grid.index(i, j);
                let m = magnitudes[idx];
                if flagged.is_some_and(|f| f[idx]) || !m.is_finite() {
                    flagged_nodes += 1;
                    continue;
                }
                evaluated_nodes += 1;
                max = max.max(m);
                sum_sq += m * m;
            }
        }
        Self {
            name: name.into(),
            max,
            l2: (sum_sq * grid.cell_area()).sqrt(),
            flagged_nodes,
            evaluated_nodes,
            order_estimate: None,
        }
    }

    /// Report for a scalar quantity with no grid attached (e.g. a single
    /// endpoint defect).
    pub fn scalar(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            max: value.abs(),
            l2: value.abs(),
            flagged_nodes: 0,
            evaluated_nodes: 1,
            order_estimate: None,
        }
    }

    /// Attaches the order estimated against the same quantity on a grid with
    /// spacing `coarse_h` (this report being on spacing `fine_h`).
    pub fn with_order_from(mut self, coarse: &ResidualReport, coarse_h: f64, fine_h: f64) -> Self {
        self.order_estimate = empirical_order(coarse.max, self.max, coarse_h, fine_h);
        self
    }
}

/// `ln(e_coarse / e_fine) / ln(h_coarse / h_fine)`, or `None` when either
/// error is zero or the spacings coincide.
pub fn empirical_order(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if err_coarse > 0.0 && err_fine > 0.0 && h_coarse > h_fine && h_fine > 0.0 {
        Some((err_coarse / err_fine).ln() / (h_coarse / h_fine).ln())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn rim_and_flags_are_excluded() {
        let g = ConformalGrid::new(Complex64::new(0.0, 0.0), 4, 3, 0.5, 0.5).unwrap();
        let mut m = vec![100.0; 12];
        m[g.index(1, 1)] = 3.0;
        m[g.index(2, 1)] = 4.0;
        let r = ResidualReport::from_magnitudes("t", &g, &m, None, Rim::default());
        assert_eq!(r.evaluated_nodes, 2);
        assert_eq!(r.max, 4.0);
        assert!((r.l2 - (25.0f64 * 0.25).sqrt()).abs() < 1e-15);

        let mut flags = vec![false; 12];
        flags[g.index(2, 1)] = true;
        let r = ResidualReport::from_magnitudes("t", &g, &m, Some(&flags), Rim::default());
        assert_eq!((r.evaluated_nodes, r.flagged_nodes, r.max), (1, 1, 3.0));

        let r = ResidualReport::from_magnitudes("t", &g, &m, None, Rim::Include);
        assert_eq!(r.evaluated_nodes, 12);
        assert_eq!(r.max, 100.0);
    }

    #[test]
    fn order_of_quadratic_error() {
        let o = empirical_order(4.0e-4, 1.0e-4, 0.02, 0.01).unwrap();
        assert!((o - 2.0).abs() < 1e-12);
        assert!(empirical_order(0.0, 1.0, 0.2, 0.1).is_none());
    }
}
