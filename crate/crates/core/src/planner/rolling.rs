//! Rolling-view planning: discrete camera observations are folded into one
//! continuous model of the row, and the plan suffix is re-optimized whenever
//! new plants appear. Nodes whose entry falls inside the commit horizon are
//! frozen so a nozzle is never retargeted mid-motion.

use crate::error::{Error, Result};
use crate::field::{FieldModel, Plant, PlantKind};
use crate::kinematics::ToolConfig;

use super::{
    build_graph_from_plants, chain_edges, check_field_tool_match, enumerate_notsp,
    select_with_crops, AxisPlan, HarmfulnessContext, ObservationMode, PlanStep, PlannedNode,
    PlannerConfig, RowPlan,
};

#[derive(Debug, Clone)]
struct AxisState {
    axis: usize,
    committed: Vec<PlannedNode>,
    /// Planned but uncommitted suffix of the current trajectory.
    tail: Vec<PlannedNode>,
    /// Every known, uncommitted candidate in this band (tail included);
    /// plants beyond the planning window stay here until it reaches them.
    known: Vec<Plant>,
    /// Upper edge of the window considered at the last replan.
    window_frontier: f64,
    dirty: bool,
}

/// Incremental receding-horizon planner for one row.
///
/// Feed it monotone tool positions and newly observed plants via
/// [`RollingPlanner::observe`]; collect the executable plan with
/// [`RollingPlanner::finish`]. The crop map is supplied up front (crops sit
/// on a known lattice); observations carry the weeds.
#[derive(Debug, Clone)]
pub struct RollingPlanner {
    tool: ToolConfig,
    cfg: PlannerConfig,
    ctx: HarmfulnessContext,
    crops: Vec<Plant>,
    axes: Vec<AxisState>,
    tool_x: f64,
    updates: usize,
    steps: Vec<PlanStep>,
}

impl RollingPlanner {
    pub fn new(
        tool: &ToolConfig,
        cfg: &PlannerConfig,
        ctx: &HarmfulnessContext,
        crops: Vec<Plant>,
    ) -> Result<Self> {
        tool.validate()?;
        cfg.validate()?;
        ctx.validate()?;
        let axes = (0..tool.heads)
            .map(|axis| AxisState {
                axis,
                committed: Vec::new(),
                tail: Vec::new(),
                known: Vec::new(),
                window_frontier: f64::NEG_INFINITY,
                dirty: false,
            })
            .collect();
        Ok(Self {
            tool: tool.clone(),
            cfg: cfg.clone(),
            ctx: ctx.clone(),
            crops,
            axes,
            tool_x: f64::NEG_INFINITY,
            updates: 0,
            steps: Vec::new(),
        })
    }

    /// Current per-axis planned suffixes (committed nodes excluded).
    pub fn tails(&self) -> Vec<Vec<u64>> {
        self.axes
            .iter()
            .map(|a| a.tail.iter().map(|n| n.id).collect())
            .collect()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// One rolling update: absorbs the new observations at the given tool
    /// position, freezes whatever enters the commit horizon, and replans the
    /// suffix of each axis whose planning window content changed. With no
    /// new plants the prior plan is kept untouched.
    ///
    /// The planning window is anchored at the commit frontier and spans one
    /// window length; known plants beyond it wait until it reaches them.
    pub fn observe(&mut self, tool_x: f64, new_plants: &[&Plant]) -> Result<()> {
        if tool_x < self.tool_x {
            return Err(Error::Domain(format!(
                "tool position must be non-decreasing (got {tool_x} after {})",
                self.tool_x
            )));
        }
        self.tool_x = tool_x;
        self.updates += 1;
        let commit_x = tool_x + self.tool.gamma * self.cfg.commit_horizon_s;
        let window_end = commit_x + self.cfg.window_m;

        for plant in new_plants {
            if plant.kind != PlantKind::Weed {
                continue;
            }
            let axis = self.tool.axis_for(plant.y).ok_or_else(|| {
                Error::Domain(format!(
                    "observed weed {} at y={} outside the workspace",
                    plant.id, plant.y
                ))
            })?;
            let st = &mut self.axes[axis];
            let frontier = st
                .committed
                .last()
                .map(|n| n.x)
                .unwrap_or(f64::NEG_INFINITY);
            if plant.x < frontier {
                return Err(Error::AlreadyPassed {
                    x: plant.x,
                    frontier,
                });
            }
            if st.known.iter().any(|k| k.id == plant.id) {
                continue;
            }
            if plant.x < window_end {
                st.dirty = true;
            }
            st.known.push((*plant).clone());
        }

        for st in &mut self.axes {
            // Freeze tail nodes whose entry crosses into the horizon.
            while st.tail.first().is_some_and(|n| n.x < commit_x) {
                st.committed.push(st.tail.remove(0));
            }
            // Candidates that slipped behind the horizon can no longer be
            // planned; committed ones are accounted for already.
            st.known.retain(|k| k.x >= commit_x);

            // Known plants the sliding window has reached since the last
            // replan also dirty the axis.
            if !st.dirty
                && st.window_frontier < window_end
                && st
                    .known
                    .iter()
                    .any(|k| k.x >= st.window_frontier && k.x < window_end)
            {
                st.dirty = true;
            }

            if !st.dirty {
                st.window_frontier = st.window_frontier.max(window_end);
                continue;
            }
            st.dirty = false;
            st.window_frontier = window_end;

            let start = st
                .committed
                .last()
                .map(|n| (n.x, n.y))
                .unwrap_or((0.0, self.tool.band_center(st.axis)));
            let refs: Vec<&Plant> = st.known.iter().filter(|k| k.x < window_end).collect();
            let graph = build_graph_from_plants(st.axis, &refs, &self.tool, &self.cfg, start)?;
            let candidates = enumerate_notsp(&graph, &self.cfg)?;
            let crop_refs: Vec<&Plant> = self.crops.iter().collect();
            let chosen =
                select_with_crops(&candidates, self.cfg.biodiv, &graph, &crop_refs, &self.ctx);

            st.tail = chosen
                .nodes
                .iter()
                .map(|id| {
                    let k = st
                        .known
                        .iter()
                        .find(|k| k.id == *id)
                        .expect("chosen from known");
                    PlannedNode {
                        id: k.id,
                        x: k.x,
                        y: k.y,
                        entry_s: k.x / self.tool.gamma,
                    }
                })
                .collect();
            self.steps.push(PlanStep {
                axis: st.axis,
                step: self.updates - 1,
                at_m: tool_x,
                nodes: chosen.nodes.clone(),
                c_score: chosen.c_score,
                k_score: chosen.k_score,
                candidates: candidates.len(),
            });
        }
        Ok(())
    }

    /// Commits whatever remains planned and returns the executable row plan.
    pub fn finish(mut self) -> RowPlan {
        for st in &mut self.axes {
            st.committed.append(&mut st.tail);
        }
        let axes = self
            .axes
            .into_iter()
            .map(|st| {
                let start = (0.0, self.tool.band_center(st.axis));
                let edges = chain_edges(start, &st.committed, &self.tool, self.cfg.omega);
                AxisPlan {
                    axis: st.axis,
                    start,
                    nodes: st.committed,
                    edges,
                    extra_travel_m: 0.0,
                }
            })
            .collect();
        RowPlan {
            mode: ObservationMode::Rolling,
            biodiv: self.cfg.biodiv,
            window_m: self.cfg.window_m,
            axes,
            steps: self.steps,
        }
    }
}

/// Plans a whole row under rolling observation: the view slides forward by
/// `stride_fraction * window_m`, delivering plants as the camera reaches
/// them. The camera frontier runs a commit horizon ahead of the planning
/// window so the window is always fully observed, and the run-in starts a
/// full window before the row so the first weeds get full lookahead.
pub fn plan_rolling_view(
    field: &FieldModel,
    tool: &ToolConfig,
    cfg: &PlannerConfig,
    ctx: &HarmfulnessContext,
) -> Result<RowPlan> {
    check_field_tool_match(field, tool)?;
    let mut planner = RollingPlanner::new(tool, cfg, ctx, field.crops().cloned().collect())?;

    let stride = cfg.stride_fraction * cfg.window_m;
    let lookahead = cfg.window_m + tool.gamma * cfg.commit_horizon_s;
    let length = field.spec().length;
    let plants = field.plants();
    let mut seen = 0.0f64;
    let mut p = -cfg.window_m;
    while p <= length {
        let view_end = p + lookahead;
        let new: Vec<&Plant> = if view_end > seen {
            let from = plants.partition_point(|q| q.x < seen);
            let to = plants.partition_point(|q| q.x < view_end);
            plants[from..to].iter().filter(|q| q.is_weed()).collect()
        } else {
            Vec::new()
        };
        planner.observe(p, &new)?;
        seen = seen.max(view_end);
        p += stride;
    }
    Ok(planner.finish())
}
