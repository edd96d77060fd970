//! Segment-view planning: the row is cut into disjoint windows of the
//! camera-view length; each window is assigned, planned, and frozen as an
//! independent query.
//!
//! By default every window is planned from the axis home position (the band
//! center), with the nozzle physically gliding home after its last
//! treatment; the home return consumes forward travel and lateral meters.
//! With `segment_carryover` the end position of one window becomes the
//! start of the next instead.

use crate::assignment::assign_static;
use crate::error::Result;
use crate::field::{FieldModel, Plant};
use crate::kinematics::ToolConfig;

use super::{
    build_graph_from_plants, chain_edges, check_field_tool_match, enumerate_notsp,
    select_with_crops, AxisPlan, HarmfulnessContext, PlanStep, PlannedNode, PlannerConfig, RowPlan,
};

/// Plans the whole row window by window. Window overflow (more targets than
/// the exhaustive cap) propagates as an error.
pub fn plan_segment_view(
    field: &FieldModel,
    tool: &ToolConfig,
    cfg: &PlannerConfig,
    ctx: &HarmfulnessContext,
) -> Result<RowPlan> {
    tool.validate()?;
    cfg.validate()?;
    ctx.validate()?;
    check_field_tool_match(field, tool)?;

    let crops: Vec<&Plant> = field.crops().collect();
    let length = field.spec().length;
    let n_windows = (length / cfg.window_m).ceil() as usize;

    let mut states: Vec<(f64, f64)> = (0..tool.heads)
        .map(|axis| (0.0, tool.band_center(axis)))
        .collect();
    let mut nodes_per_axis: Vec<Vec<PlannedNode>> = vec![Vec::new(); tool.heads];
    let mut extra_travel: Vec<f64> = vec![0.0; tool.heads];
    let mut steps: Vec<PlanStep> = Vec::new();

    let plants = field.plants();
    for w in 0..n_windows {
        let lo = w as f64 * cfg.window_m;
        let hi = lo + cfg.window_m;
        let from = plants.partition_point(|p| p.x < lo);
        let to = plants.partition_point(|p| p.x < hi);
        let window: Vec<&Plant> = plants[from..to].iter().collect();
        if window.is_empty() {
            continue;
        }

        for targets in assign_static(&window, tool)? {
            if targets.targets.is_empty() {
                continue;
            }
            let axis = targets.axis;
            // A target the nozzle passes while still gliding home cannot be
            // part of this window's query.
            let target_plants: Vec<&Plant> = targets
                .targets
                .iter()
                .filter_map(|id| field.plant(*id))
                .filter(|p| p.x >= states[axis].0)
                .collect();
            if target_plants.is_empty() {
                continue;
            }
            let graph = build_graph_from_plants(axis, &target_plants, tool, cfg, states[axis])?;
            let candidates = enumerate_notsp(&graph, cfg)?;
            let chosen = select_with_crops(&candidates, cfg.biodiv, &graph, &crops, ctx);

            let home = tool.band_center(axis);
            if !cfg.segment_carryover {
                if let (Some(prev), Some(first)) =
                    (nodes_per_axis[axis].last(), chosen.nodes.first())
                {
                    // The executed motion detours through home between
                    // windows; count the meters beyond the direct hop.
                    let first = field.plant(*first).expect("chosen from the field");
                    extra_travel[axis] +=
                        (prev.y - home).abs() + (first.y - home).abs() - (first.y - prev.y).abs();
                }
            }

            for id in &chosen.nodes {
                let node = field.plant(*id).expect("chosen node comes from the field");
                nodes_per_axis[axis].push(PlannedNode {
                    id: node.id,
                    x: node.x,
                    y: node.y,
                    entry_s: node.x / tool.gamma,
                });
                states[axis] = (node.x, node.y);
            }
            if !cfg.segment_carryover {
                // Glide home right after the last treatment; the return
                // completes a little forward of it.
                let (x_end, y_end) = states[axis];
                states[axis] = (x_end + tool.gamma * (y_end - home).abs() / tool.theta, home);
            }
            steps.push(PlanStep {
                axis,
                step: w,
                at_m: lo,
                nodes: chosen.nodes.clone(),
                c_score: chosen.c_score,
                k_score: chosen.k_score,
                candidates: candidates.len(),
            });
        }
    }

    let axes = nodes_per_axis
        .into_iter()
        .enumerate()
        .map(|(axis, nodes)| {
            let start = (0.0, tool.band_center(axis));
            let edges = chain_edges(start, &nodes, tool, cfg.omega);
            AxisPlan {
                axis,
                start,
                nodes,
                edges,
                extra_travel_m: extra_travel[axis],
            }
        })
        .collect();

    Ok(RowPlan {
        mode: super::ObservationMode::Segment,
        biodiv: cfg.biodiv,
        window_m: cfg.window_m,
        axes,
        steps,
    })
}
