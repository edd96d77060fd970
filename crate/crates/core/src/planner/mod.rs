//! Per-axis route planning: the feasibility graph, open-path trajectory
//! enumeration, trajectory scoring, and harmfulness-aware selection.
//!
//! Every pair of targets gets a favorability score `S` — the time slack an
//! axis has to slide laterally between them while the robot advances — and a
//! feasibility score `Gamma = logistic(omega * S)`. A trajectory counts only
//! if every edge clears the cutoff `rho`; its success score `C` is the mean
//! edge feasibility. Baseline selection maximizes (visit count, C); the
//! bio-diversity mode maximizes the summed harmfulness `K` of the visited
//! weeds instead.

mod rolling;
mod segment;

pub use rolling::{plan_rolling_view, RollingPlanner};
pub use segment::plan_segment_view;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::assignment::AxisTargets;
use crate::error::{Error, Result};
use crate::field::{FieldModel, Plant, PlantKind, Priority};
use crate::kinematics::{displacement, Displacement, ToolConfig};

/// How observations are delivered to the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// Plan each window independently and freeze it.
    Segment,
    /// Slide the window by a stride and update the uncommitted plan suffix
    /// whenever new plants appear.
    Rolling,
}

impl std::fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObservationMode::Segment => write!(f, "segment"),
            ObservationMode::Rolling => write!(f, "rolling"),
        }
    }
}

/// Planner tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Logistic steepness, 1/seconds. The default makes the 0.6 cutoff
    /// demand about 8 ms of slack per hop; shallower settings reject hops
    /// the axes can physically make and show up directly as lost weeds at
    /// low density.
    pub omega: f64,
    /// Per-edge feasibility cutoff. Below 0.5 it would never bind.
    pub rho: f64,
    pub mode: ObservationMode,
    /// Select by total harmfulness instead of (count, C).
    pub biodiv: bool,
    /// Observation window length, meters (the camera view).
    pub window_m: f64,
    /// Rolling stride as a fraction of the window, in (0, 1].
    pub stride_fraction: f64,
    /// Exhaustive-search cap per window; larger windows are an error.
    pub max_window_targets: usize,
    /// Planned nodes entering within this horizon are frozen during rolling
    /// updates, so a nozzle is never retargeted mid-motion.
    pub commit_horizon_s: f64,
    /// Segment mode only: plan each window from the previous window's end
    /// position instead of treating windows as independent queries from the
    /// axis home position (with a physical return move between windows).
    #[serde(default)]
    pub segment_carryover: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            omega: 50.0,
            rho: 0.6,
            mode: ObservationMode::Segment,
            biodiv: false,
            window_m: 1.0,
            stride_fraction: 0.5,
            max_window_targets: 12,
            commit_horizon_s: 0.2,
            segment_carryover: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || self.omega <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "omega",
                message: format!("must be finite and > 0, got {}", self.omega),
            });
        }
        if !(self.rho > 0.5 && self.rho < 1.0) {
            return Err(Error::InvalidConfig {
                field: "rho",
                message: format!("must lie in (0.5, 1), got {}", self.rho),
            });
        }
        if !self.window_m.is_finite() || self.window_m <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "window_m",
                message: format!("must be finite and > 0, got {}", self.window_m),
            });
        }
        if !(self.stride_fraction > 0.0 && self.stride_fraction <= 1.0) {
            return Err(Error::InvalidConfig {
                field: "stride_fraction",
                message: format!("must lie in (0, 1], got {}", self.stride_fraction),
            });
        }
        if self.max_window_targets == 0 {
            return Err(Error::InvalidConfig {
                field: "max_window_targets",
                message: "must be >= 1".to_string(),
            });
        }
        if !self.commit_horizon_s.is_finite() || self.commit_horizon_s < 0.0 {
            return Err(Error::InvalidConfig {
                field: "commit_horizon_s",
                message: format!("must be >= 0, got {}", self.commit_horizon_s),
            });
        }
        Ok(())
    }
}

/// Parameters of the harmfulness factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmfulnessContext {
    /// Fallback crop distance when the field has no crops, meters.
    pub reference_distance_m: f64,
    /// Fallback nominal crop area for weed-only fields, mm^2.
    pub nominal_crop_area_mm2: f64,
    pub low_priority_weight: f64,
    pub high_priority_weight: f64,
    /// Cap applied when a weed sits on a crop center.
    pub max_kappa: f64,
}

impl Default for HarmfulnessContext {
    fn default() -> Self {
        Self {
            reference_distance_m: 0.5,
            nominal_crop_area_mm2: 1000.0,
            low_priority_weight: 0.1,
            high_priority_weight: 1.0,
            max_kappa: 1e6,
        }
    }
}

impl HarmfulnessContext {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("reference_distance_m", self.reference_distance_m),
            ("nominal_crop_area_mm2", self.nominal_crop_area_mm2),
            ("low_priority_weight", self.low_priority_weight),
            ("high_priority_weight", self.high_priority_weight),
            ("max_kappa", self.max_kappa),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig {
                    field: name,
                    message: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn priority_weight(&self, p: Priority) -> f64 {
        match p {
            Priority::Low => self.low_priority_weight,
            Priority::High => self.high_priority_weight,
        }
    }
}

/// Harmfulness of one weed, with a degeneracy marker for the clamped case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmfulnessScore {
    pub kappa: f64,
    /// True when the raw value was clamped (weed at a crop center).
    pub degenerate: bool,
}

/// Favorability score in seconds: the slack an axis has for the lateral move
/// between two targets while the robot covers their along-row separation.
pub fn favorability(d: &Displacement, tool: &ToolConfig) -> f64 {
    d.dx / tool.gamma - d.dy / tool.theta - tool.dwell_s
}

/// Logistic feasibility of a favorability score: 0.5 at the exact
/// reachability boundary, approaching 1 with growing slack.
pub fn feasibility(s: f64, omega: f64) -> f64 {
    1.0 / (1.0 + (-omega * s).exp())
}

fn kappa_raw(
    x: f64,
    y: f64,
    area_mm2: f64,
    beta: f64,
    priority: Priority,
    crops: &[&Plant],
    ctx: &HarmfulnessContext,
) -> HarmfulnessScore {
    let weighted_beta = beta * ctx.priority_weight(priority);
    let raw = match nearest_crop(crops, x, y) {
        Some((crop, dist)) => (area_mm2 * weighted_beta) / (crop.area_mm2 * dist),
        None => (area_mm2 * weighted_beta) / (ctx.nominal_crop_area_mm2 * ctx.reference_distance_m),
    };
    if raw.is_finite() && raw <= ctx.max_kappa {
        HarmfulnessScore {
            kappa: raw,
            degenerate: false,
        }
    } else {
        HarmfulnessScore {
            kappa: ctx.max_kappa,
            degenerate: true,
        }
    }
}

fn nearest_crop<'a>(crops: &[&'a Plant], x: f64, y: f64) -> Option<(&'a Plant, f64)> {
    crops
        .iter()
        .map(|c| {
            let dx = c.x - x;
            let dy = c.y - y;
            (*c, (dx * dx + dy * dy).sqrt())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Harmfulness of a weed: its size and species weight against the size of,
/// and distance to, the nearest crop. Weed-only fields fall back to a
/// configured nominal crop at the reference distance.
pub fn harmfulness(
    weed: &Plant,
    crops: &[&Plant],
    ctx: &HarmfulnessContext,
) -> Result<HarmfulnessScore> {
    if weed.kind != PlantKind::Weed {
        return Err(Error::Domain(format!(
            "harmfulness is defined for weeds; plant {} is a crop",
            weed.id
        )));
    }
    ctx.validate()?;
    Ok(kappa_raw(
        weed.x,
        weed.y,
        weed.area_mm2,
        weed.beta,
        weed.priority,
        crops,
        ctx,
    ))
}

/// Directed edge between two targets (or from the virtual start node).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityEdge {
    /// `None` marks the virtual start node.
    pub from: Option<u64>,
    pub to: u64,
    /// Favorability, seconds.
    pub s: f64,
    /// Logistic feasibility in (0, 1).
    pub gamma_score: f64,
}

/// One target embedded in the graph, with the plant details selection needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub area_mm2: f64,
    pub beta: f64,
    pub priority: Priority,
}

/// Uni-directional feasibility graph over one axis's targets: a virtual
/// start node plus the targets, edges only from lower to strictly higher x.
#[derive(Debug, Clone)]
pub struct FeasibilityGraph {
    pub axis: usize,
    start: (f64, f64),
    nodes: Vec<GraphNode>,
    start_edges: Vec<FeasibilityEdge>,
    pair: Vec<Option<FeasibilityEdge>>,
    by_id: HashMap<u64, usize>,
}

impl FeasibilityGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> (f64, f64) {
        self.start
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn start_edge(&self, to: usize) -> &FeasibilityEdge {
        &self.start_edges[to]
    }

    /// Edge between two targets; `None` when they share the same x.
    pub fn edge(&self, from: usize, to: usize) -> Option<&FeasibilityEdge> {
        self.pair[from * self.nodes.len() + to].as_ref()
    }

    /// Number of directed edges, start edges included.
    pub fn edge_count(&self) -> usize {
        self.start_edges.len() + self.pair.iter().filter(|e| e.is_some()).count()
    }
}

pub(crate) fn build_graph_from_plants(
    axis: usize,
    plants: &[&Plant],
    tool: &ToolConfig,
    cfg: &PlannerConfig,
    start: (f64, f64),
) -> Result<FeasibilityGraph> {
    tool.validate()?;
    cfg.validate()?;
    let mut nodes: Vec<GraphNode> = plants
        .iter()
        .map(|p| GraphNode {
            id: p.id,
            x: p.x,
            y: p.y,
            area_mm2: p.area_mm2,
            beta: p.beta,
            priority: p.priority,
        })
        .collect();
    nodes.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.id.cmp(&b.id))
    });

    for n in &nodes {
        if n.x < start.0 {
            return Err(Error::OrderingViolation {
                from_x: start.0,
                to_x: n.x,
            });
        }
    }

    let n = nodes.len();
    let mut start_edges = Vec::with_capacity(n);
    for node in &nodes {
        let d = displacement(start, (node.x, node.y))?;
        let s = favorability(&d, tool);
        start_edges.push(FeasibilityEdge {
            from: None,
            to: node.id,
            s,
            gamma_score: feasibility(s, cfg.omega),
        });
    }

    let mut pair: Vec<Option<FeasibilityEdge>> = vec![None; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            // Strict ordering: no edge between targets at equal x.
            if nodes[j].x > nodes[i].x {
                let d = displacement((nodes[i].x, nodes[i].y), (nodes[j].x, nodes[j].y))?;
                let s = favorability(&d, tool);
                pair[i * n + j] = Some(FeasibilityEdge {
                    from: Some(nodes[i].id),
                    to: nodes[j].id,
                    s,
                    gamma_score: feasibility(s, cfg.omega),
                });
            }
        }
    }

    let by_id = nodes.iter().enumerate().map(|(i, nd)| (nd.id, i)).collect();
    Ok(FeasibilityGraph {
        axis,
        start,
        nodes,
        start_edges,
        pair,
        by_id,
    })
}

/// Builds the feasibility graph for one axis's assigned targets, with the
/// virtual start node at the nozzle's current position.
pub fn build_graph(
    targets: &AxisTargets,
    field: &FieldModel,
    tool: &ToolConfig,
    cfg: &PlannerConfig,
    start: (f64, f64),
) -> Result<FeasibilityGraph> {
    let plants: Vec<&Plant> = targets
        .targets
        .iter()
        .map(|id| {
            field.plant(*id).ok_or_else(|| {
                Error::Domain(format!("target id {id} not present in the field model"))
            })
        })
        .collect::<Result<_>>()?;
    build_graph_from_plants(targets.axis, &plants, tool, cfg, start)
}

/// An ordered visit list for one axis with its success score and total
/// harmfulness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCandidate {
    pub axis: usize,
    /// Visited weed ids, strictly increasing in x.
    pub nodes: Vec<u64>,
    /// Mean edge feasibility if every edge clears the cutoff, else 0.
    pub c_score: f64,
    /// Total harmfulness of the visited weeds.
    pub k_score: f64,
}

impl TrajectoryCandidate {
    pub fn empty(axis: usize) -> Self {
        Self {
            axis,
            nodes: Vec::new(),
            c_score: 0.0,
            k_score: 0.0,
        }
    }
}

/// Enumerates every feasible open trajectory over the graph: all ordered
/// subsets consistent with the edge direction, pruning any prefix that
/// contains an edge below the cutoff. Returns the feasible candidates plus
/// the empty trajectory.
pub fn enumerate_notsp(
    graph: &FeasibilityGraph,
    cfg: &PlannerConfig,
) -> Result<Vec<TrajectoryCandidate>> {
    cfg.validate()?;
    let n = graph.len();
    if n > cfg.max_window_targets {
        return Err(Error::WindowOverflow {
            axis: graph.axis,
            start: graph.start.0,
            count: n,
            cap: cfg.max_window_targets,
        });
    }

    let mut out = vec![TrajectoryCandidate::empty(graph.axis)];
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    fn extend(
        graph: &FeasibilityGraph,
        rho: f64,
        chain: &mut Vec<usize>,
        gamma_sum: f64,
        out: &mut Vec<TrajectoryCandidate>,
    ) {
        let last = chain.last().copied();
        let from = match last {
            Some(i) => i + 1,
            None => 0,
        };
        for next in from..graph.len() {
            let edge = match last {
                Some(i) => match graph.edge(i, next) {
                    Some(e) => e,
                    None => continue,
                },
                None => graph.start_edge(next),
            };
            if edge.gamma_score < rho {
                continue;
            }
            chain.push(next);
            let sum = gamma_sum + edge.gamma_score;
            out.push(TrajectoryCandidate {
                axis: graph.axis,
                nodes: chain.iter().map(|&i| graph.nodes()[i].id).collect(),
                c_score: sum / chain.len() as f64,
                k_score: 0.0,
            });
            extend(graph, rho, chain, sum, out);
            chain.pop();
        }
    }

    extend(graph, cfg.rho, &mut chain, 0.0, &mut out);
    Ok(out)
}

/// Success score of a trajectory: the mean feasibility of its edges (the
/// start edge included, so q nodes score q edges), or 0 when any edge falls
/// below the cutoff or is missing.
pub fn score_trajectory(t: &TrajectoryCandidate, graph: &FeasibilityGraph, rho: f64) -> f64 {
    if t.nodes.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut prev: Option<usize> = None;
    for id in &t.nodes {
        let idx = match graph.node_index(*id) {
            Some(i) => i,
            None => return 0.0,
        };
        let edge = match prev {
            Some(p) => match graph.edge(p, idx) {
                Some(e) => e,
                None => return 0.0,
            },
            None => graph.start_edge(idx),
        };
        if edge.gamma_score < rho {
            return 0.0;
        }
        sum += edge.gamma_score;
        prev = Some(idx);
    }
    sum / t.nodes.len() as f64
}

fn lateral_travel(t: &TrajectoryCandidate, graph: &FeasibilityGraph) -> f64 {
    let mut y = graph.start().1;
    let mut total = 0.0;
    for id in &t.nodes {
        if let Some(idx) = graph.node_index(*id) {
            let ny = graph.nodes()[idx].y;
            total += (ny - y).abs();
            y = ny;
        }
    }
    total
}

fn candidate_kappa(
    graph: &FeasibilityGraph,
    crops: &[&Plant],
    ctx: &HarmfulnessContext,
) -> Vec<f64> {
    graph
        .nodes()
        .iter()
        .map(|n| kappa_raw(n.x, n.y, n.area_mm2, n.beta, n.priority, crops, ctx).kappa)
        .collect()
}

pub(crate) fn select_with_crops(
    candidates: &[TrajectoryCandidate],
    biodiv: bool,
    graph: &FeasibilityGraph,
    crops: &[&Plant],
    ctx: &HarmfulnessContext,
) -> TrajectoryCandidate {
    let kappa = candidate_kappa(graph, crops, ctx);
    let k_of = |t: &TrajectoryCandidate| -> f64 {
        t.nodes
            .iter()
            .filter_map(|id| graph.node_index(*id))
            .map(|i| kappa[i])
            .sum()
    };

    // Shared tie chain: higher C, then less lateral travel, then lowest
    // first-node id.
    let tie = |a: &TrajectoryCandidate, b: &TrajectoryCandidate| -> std::cmp::Ordering {
        a.c_score
            .total_cmp(&b.c_score)
            .then_with(|| lateral_travel(b, graph).total_cmp(&lateral_travel(a, graph)))
            .then_with(|| {
                let fa = a.nodes.first().copied().unwrap_or(u64::MAX);
                let fb = b.nodes.first().copied().unwrap_or(u64::MAX);
                fb.cmp(&fa)
            })
    };

    let best = if biodiv {
        candidates
            .iter()
            .filter(|t| t.c_score > 0.0)
            .max_by(|a, b| k_of(a).total_cmp(&k_of(b)).then_with(|| tie(a, b)))
    } else {
        candidates
            .iter()
            .max_by(|a, b| a.nodes.len().cmp(&b.nodes.len()).then_with(|| tie(a, b)))
    };

    let mut chosen = best
        .cloned()
        .unwrap_or_else(|| TrajectoryCandidate::empty(graph.axis));
    chosen.k_score = k_of(&chosen);
    chosen
}

/// Picks the trajectory to execute. Baseline mode maximizes (node count, C);
/// bio-diversity mode maximizes total harmfulness `K` among candidates with
/// `C > 0`. The empty trajectory is returned when nothing is feasible.
pub fn select_trajectory(
    candidates: &[TrajectoryCandidate],
    biodiv: bool,
    graph: &FeasibilityGraph,
    field: &FieldModel,
    ctx: &HarmfulnessContext,
) -> TrajectoryCandidate {
    let crops: Vec<&Plant> = field.crops().collect();
    select_with_crops(candidates, biodiv, graph, &crops, ctx)
}

/// One treatment in an executable plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedNode {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    /// Seconds after the tool line crosses x = 0.
    pub entry_s: f64,
}

/// The executable route of one axis over the whole row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPlan {
    pub axis: usize,
    /// Nozzle position the route starts from.
    pub start: (f64, f64),
    pub nodes: Vec<PlannedNode>,
    /// Favorability and feasibility of each executed hop, start edge first.
    pub edges: Vec<FeasibilityEdge>,
    /// Lateral meters spent on non-treatment moves (home returns between
    /// independent windows).
    #[serde(default)]
    pub extra_travel_m: f64,
}

impl AxisPlan {
    /// Total lateral travel, meters, non-treatment moves included.
    pub fn lateral_distance(&self) -> f64 {
        let mut y = self.start.1;
        let mut total = self.extra_travel_m;
        for n in &self.nodes {
            total += (n.y - y).abs();
            y = n.y;
        }
        total
    }
}

/// One planning decision, kept for reporting: a window (segment mode) or a
/// replanning update (rolling mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub axis: usize,
    pub step: usize,
    /// Window start (segment) or tool position at the update (rolling).
    pub at_m: f64,
    pub nodes: Vec<u64>,
    pub c_score: f64,
    pub k_score: f64,
    pub candidates: usize,
}

/// Full per-axis plan set for a row, with the decision trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowPlan {
    pub mode: ObservationMode,
    pub biodiv: bool,
    pub window_m: f64,
    pub axes: Vec<AxisPlan>,
    pub steps: Vec<PlanStep>,
}

impl RowPlan {
    /// Ids of every planned weed across axes.
    pub fn planned_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.axes.iter().flat_map(|a| a.nodes.iter().map(|n| n.id))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            path: "<plan>".to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }
}

/// Recomputes the executed-edge scores for a finished chain of nodes.
pub(crate) fn chain_edges(
    start: (f64, f64),
    nodes: &[PlannedNode],
    tool: &ToolConfig,
    omega: f64,
) -> Vec<FeasibilityEdge> {
    let mut edges = Vec::with_capacity(nodes.len());
    let mut prev = start;
    let mut prev_id: Option<u64> = None;
    for n in nodes {
        let d = Displacement {
            dx: n.x - prev.0,
            dy: (n.y - prev.1).abs(),
        };
        let s = favorability(&d, tool);
        edges.push(FeasibilityEdge {
            from: prev_id,
            to: n.id,
            s,
            gamma_score: feasibility(s, omega),
        });
        prev = (n.x, n.y);
        prev_id = Some(n.id);
    }
    edges
}

pub(crate) fn check_field_tool_match(field: &FieldModel, tool: &ToolConfig) -> Result<()> {
    if (field.spec().width - tool.coverage_m).abs() > 1e-9 {
        return Err(Error::InvalidConfig {
            field: "coverage_m",
            message: format!(
                "tool coverage {} m must equal the field width {} m",
                tool.coverage_m,
                field.spec().width
            ),
        });
    }
    Ok(())
}
