use thiserror::Error;

/// Errors raised by the field, solver and geometry routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: nx={nx}, ny={ny} (need at least 3x3)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("grid spacing must be positive and finite: hx={hx}, hy={hy}")]
    InvalidSpacing { hx: f64, hy: f64 },

    #[error("grid origin must be finite")]
    InvalidOrigin,

    #[error("field has {got} values, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in `{field}` at node ({i}, {j})")]
    NonFinite { field: String, i: usize, j: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("node ({i}, {j}) is outside the {nx}x{ny} grid")]
    NodeOutOfRange {
        i: usize,
        j: usize,
        nx: usize,
        ny: usize,
    },

    #[error("|sinh(Re v)| below {eps:e} at {} node(s), first at {first:?}", nodes.len())]
    SinhBelowGuard {
        eps: f64,
        first: (usize, usize),
        nodes: Vec<(usize, usize)>,
    },

    #[error("inadmissible initial data: constraint radicand {radicand} is negative")]
    NegativeRadicand { radicand: f64 },

    #[error("mean curvature must be nonzero in nonzero-H mode")]
    ZeroMeanCurvature,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("|Re v| = {rho} exceeds overflow guard {guard} at x = {x}")]
    OverflowGuard { rho: f64, guard: f64, x: f64 },

    #[error("transport norm {norm:e} exceeds guard {guard:e} at node ({i}, {j})")]
    NormGuard {
        norm: f64,
        guard: f64,
        i: usize,
        j: usize,
    },

    #[error("amplitude l <= 0 at {} node(s), first at {first:?}", nodes.len())]
    NonPositiveAmplitude {
        first: (usize, usize),
        nodes: Vec<(usize, usize)>,
    },

    #[error("conformal factor {value:e} below {floor:e} at node ({i}, {j})")]
    DegenerateConformalFactor {
        value: f64,
        floor: f64,
        i: usize,
        j: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 inadmissible data, 3 transport norm guard, 4 unreadable input, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NegativeRadicand { .. }
            | Error::NonPositiveAmplitude { .. }
            | Error::SinhBelowGuard { .. }
            | Error::ZeroMeanCurvature
            | Error::OverflowGuard { .. }
            | Error::DegenerateConformalFactor { .. }
            | Error::InvalidParameter(_)
            | Error::GridTooSmall { .. }
            | Error::InvalidSpacing { .. }
            | Error::InvalidOrigin
            | Error::NodeOutOfRange { .. } => 2,
            Error::NormGuard { .. } => 3,
            Error::Parse(_)
            | Error::NonFinite { .. }
            | Error::LengthMismatch { .. }
            | Error::GridMismatch => 4,
            _ => 1,
        }
    }
}
