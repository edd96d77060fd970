//! Error type shared by all rowplan modules.

use thiserror::Error;

/// Errors produced by field construction, planning, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. Names the offending field.
    #[error("invalid {field}: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },

    /// An operation was called with arguments outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An edge or displacement was requested against the travel direction.
    #[error("target at x={to_x:.4} m is behind reference x={from_x:.4} m")]
    OrderingViolation { from_x: f64, to_x: f64 },

    /// A plant or observation lies behind the committed frontier.
    #[error("plant at x={x:.4} m already passed (frontier at {frontier:.4} m)")]
    AlreadyPassed { x: f64, frontier: f64 },

    /// A planning window holds more targets than the exhaustive-search cap.
    /// The caller must shrink the window.
    #[error(
        "axis {axis} window from x={start:.3} m holds {count} targets \
         (cap {cap}); shrink the planning window"
    )]
    WindowOverflow {
        axis: usize,
        start: f64,
        count: usize,
        cap: usize,
    },

    /// A plan demanded a lateral move faster than the axis limit. Valid
    /// plans can never trigger this; it signals a planner bug.
    #[error(
        "kinematic violation on axis {axis}: |dy|={dy:.4} m in {dt:.4} s \
         exceeds theta={theta} m/s"
    )]
    KinematicViolation {
        axis: usize,
        dy: f64,
        dt: f64,
        theta: f64,
    },

    /// A named-but-unimplemented assignment strategy was requested.
    #[error("assignment strategy '{0}' is not implemented")]
    UnimplementedStrategy(&'static str),

    /// The brute-force oracle refuses instances above its size bound.
    #[error("oracle limited to {cap} targets, got {got}")]
    OracleSize { cap: usize, got: usize },

    /// An aggregate was requested over an empty collection.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A field or plan file failed to parse.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// A metrics CSV row failed to parse.
    #[error("csv parse error at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
