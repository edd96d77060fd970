//! Tool geometry and motion limits, and the conversion of field coordinates
//! into per-axis timing quantities.
//!
//! The tool bar spans the row laterally and carries `heads` independently
//! actuated nozzles, one per contiguous lateral band. The robot advances at
//! `gamma` m/s while each axis slides laterally at up to `theta` m/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tool geometry and motion limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolConfig {
    /// Number of intervention heads (weeding axes).
    pub heads: usize,
    /// Total lateral coverage of the tool bar in meters. Must equal the
    /// field's weeding width; split into `heads` equal bands.
    pub coverage_m: f64,
    /// Along-travel depth of the working area in meters (geometry metadata;
    /// treatments fire on the tool line).
    pub work_depth_m: f64,
    /// Spray footprint diameter on the ground, meters.
    pub footprint_m: f64,
    /// Robot forward speed, m/s.
    pub gamma: f64,
    /// Axis maximum lateral speed, m/s.
    pub theta: f64,
    /// Per-treatment dwell time, seconds. Zero keeps the favorability score
    /// a pure travel-time slack; a positive dwell subtracts from it.
    pub dwell_s: f64,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            heads: 4,
            coverage_m: 1.39,
            work_depth_m: 0.36,
            footprint_m: 0.05,
            gamma: 0.5,
            theta: 5.0,
            dwell_s: 0.0,
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heads < 1 {
            return Err(Error::InvalidConfig {
                field: "heads",
                message: "must be >= 1".to_string(),
            });
        }
        for (name, v, min_exclusive) in [
            ("coverage_m", self.coverage_m, true),
            ("footprint_m", self.footprint_m, true),
            ("gamma", self.gamma, true),
            ("theta", self.theta, true),
            ("dwell_s", self.dwell_s, false),
            ("work_depth_m", self.work_depth_m, false),
        ] {
            let ok = v.is_finite() && if min_exclusive { v > 0.0 } else { v >= 0.0 };
            if !ok {
                return Err(Error::InvalidConfig {
                    field: name,
                    message: format!(
                        "must be finite and {} 0, got {v}",
                        if min_exclusive { ">" } else { ">=" }
                    ),
                });
            }
        }
        Ok(())
    }

    /// Width of one axis band: equal split of the lateral coverage.
    pub fn band_width(&self) -> f64 {
        self.coverage_m / self.heads as f64
    }

    /// Half-open lateral band `[lo, hi)` owned by the given axis.
    pub fn band(&self, axis: usize) -> (f64, f64) {
        let w = self.band_width();
        (axis as f64 * w, (axis + 1) as f64 * w)
    }

    pub fn band_center(&self, axis: usize) -> f64 {
        let (lo, hi) = self.band(axis);
        (lo + hi) / 2.0
    }

    /// Axis owning lateral position `y`, or `None` outside `[0, coverage)`.
    /// Band boundaries belong to the higher-index axis.
    pub fn axis_for(&self, y: f64) -> Option<usize> {
        if !y.is_finite() || y < 0.0 || y >= self.coverage_m {
            return None;
        }
        let idx = (y / self.band_width()) as usize;
        Some(idx.min(self.heads - 1))
    }
}

/// Non-negative separation between two positions, downstream along `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    /// Along-row separation, meters (>= 0).
    pub dx: f64,
    /// Absolute lateral separation, meters (>= 0).
    pub dy: f64,
}

/// Separation from one position to a downstream one.
///
/// Errors if `to` lies behind `from` along the travel direction; callers
/// must sort targets by `x` first.
pub fn displacement(from: (f64, f64), to: (f64, f64)) -> Result<Displacement> {
    if to.0 < from.0 {
        return Err(Error::OrderingViolation {
            from_x: from.0,
            to_x: to.0,
        });
    }
    Ok(Displacement {
        dx: to.0 - from.0,
        dy: (to.1 - from.1).abs(),
    })
}

/// Seconds until the tool line, currently at `tool_x` and advancing at
/// `gamma`, reaches a plant at `plant_x`.
pub fn entry_time(plant_x: f64, tool_x: f64, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    if plant_x < tool_x {
        return Err(Error::AlreadyPassed {
            x: plant_x,
            frontier: tool_x,
        });
    }
    Ok((plant_x - tool_x) / gamma)
}
