//! Deterministic execution of per-axis plans against a field: kinematic
//! validation, optional lateral actuation noise, treatment-outcome
//! classification, and run metrics.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldModel, Plant, Priority};
use crate::kinematics::ToolConfig;
use crate::planner::RowPlan;

/// Simulation tolerances and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Lateral actuation noise sigma, meters.
    pub noise_sigma: f64,
    /// Offsets up to this count as accurate hits, meters.
    pub accurate_radius_m: f64,
    /// Offsets up to this count as partial hits, meters.
    pub partial_radius_m: f64,
    /// Sprays centered this close to a crop are false hits, meters.
    pub crop_safety_radius_m: f64,
    /// Per-weed probability of being withheld from the planner, emulating a
    /// detection failure. The weed stays in the ground truth.
    pub withhold_prob: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            accurate_radius_m: 0.01,
            partial_radius_m: 0.025,
            crop_safety_radius_m: 0.03,
            withhold_prob: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, tool: &ToolConfig) -> Result<()> {
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig {
                field: "noise_sigma",
                message: format!("must be >= 0, got {}", self.noise_sigma),
            });
        }
        if !(0.0 <= self.accurate_radius_m
            && self.accurate_radius_m <= self.partial_radius_m
            && self.partial_radius_m <= tool.footprint_m)
        {
            return Err(Error::InvalidConfig {
                field: "accurate_radius_m",
                message: format!(
                    "need 0 <= accurate ({}) <= partial ({}) <= footprint ({})",
                    self.accurate_radius_m, self.partial_radius_m, tool.footprint_m
                ),
            });
        }
        if !(0.0..=1.0).contains(&self.withhold_prob) {
            return Err(Error::InvalidConfig {
                field: "withhold_prob",
                message: format!("must lie in [0, 1], got {}", self.withhold_prob),
            });
        }
        if !self.crop_safety_radius_m.is_finite() || self.crop_safety_radius_m < 0.0 {
            return Err(Error::InvalidConfig {
                field: "crop_safety_radius_m",
                message: format!("must be >= 0, got {}", self.crop_safety_radius_m),
            });
        }
        Ok(())
    }
}

/// Outcome of one treatment attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitClass {
    Accurate,
    Partial,
    Missed,
}

/// Threshold classification of a spray's lateral offset.
pub fn classify_hit(offset: f64, sim: &SimConfig) -> HitClass {
    if offset <= sim.accurate_radius_m {
        HitClass::Accurate
    } else if offset <= sim.partial_radius_m {
        HitClass::Partial
    } else {
        HitClass::Missed
    }
}

/// Per-run treatment outcomes. Conservation holds on every run:
/// `accurate_hits + partial_hits + missed == total_weeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_weeds: usize,
    pub accurate_hits: usize,
    pub partial_hits: usize,
    pub missed: usize,
    /// Known to the planner but never planned (unreachable or sacrificed).
    pub missed_planning: usize,
    /// Withheld from the planner (emulated detection failure).
    pub missed_detection: usize,
    /// Sprays centered within the crop safety radius of a crop.
    pub crop_false_hits: usize,
    pub loss_pct: f64,
    pub per_axis_distance_m: Vec<f64>,
    pub high_total: usize,
    pub high_treated: usize,
    pub low_total: usize,
    pub low_treated: usize,
    /// Fastest lateral move the plan demanded, m/s.
    pub max_axis_speed: f64,
}

impl RunMetrics {
    pub fn axis_distance_mean(&self) -> f64 {
        if self.per_axis_distance_m.is_empty() {
            return 0.0;
        }
        self.per_axis_distance_m.iter().sum::<f64>() / self.per_axis_distance_m.len() as f64
    }

    pub fn axis_distance_std(&self) -> f64 {
        let n = self.per_axis_distance_m.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.axis_distance_mean();
        let var = self
            .per_axis_distance_m
            .iter()
            .map(|d| (d - mean) * (d - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        var.sqrt()
    }

    /// Treatment percentage of high-priority weeds.
    pub fn high_rate_pct(&self) -> f64 {
        if self.high_total == 0 {
            return 0.0;
        }
        100.0 * self.high_treated as f64 / self.high_total as f64
    }

    /// Treatment percentage of low-priority weeds.
    pub fn low_rate_pct(&self) -> f64 {
        if self.low_total == 0 {
            return 0.0;
        }
        100.0 * self.low_treated as f64 / self.low_total as f64
    }
}

/// Draws the set of weed ids withheld from the planner. Deterministic in
/// the seed; the draw order follows the field's x-sorted weeds.
pub fn withhold_weeds(field: &FieldModel, prob: f64, seed: u64) -> HashSet<u64> {
    if prob <= 0.0 {
        return HashSet::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77ee_d0de);
    field
        .weeds()
        .filter(|_| rand::Rng::random::<f64>(&mut rng) < prob)
        .map(|p| p.id)
        .collect()
}

/// Executes a plan set against the ground-truth field.
///
/// The robot advances at `gamma`; each axis tracks its plan laterally at up
/// to `theta`. At each planned node's entry time the nozzle's lateral offset
/// (plus noise) classifies the treatment. `withheld` lists weeds the planner
/// never saw, for the detection-loss accounting.
pub fn simulate_run(
    field: &FieldModel,
    plan: &RowPlan,
    tool: &ToolConfig,
    sim: &SimConfig,
    withheld: &HashSet<u64>,
) -> Result<RunMetrics> {
    tool.validate()?;
    sim.validate(tool)?;

    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let noise = if sim.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, sim.noise_sigma).map_err(|e| Error::InvalidConfig {
                field: "noise_sigma",
                message: e.to_string(),
            })?,
        )
    } else {
        None
    };

    let crops: Vec<&Plant> = field.crops().collect();
    let mut outcome: HashMap<u64, HitClass> = HashMap::new();
    let mut per_axis_distance = Vec::with_capacity(plan.axes.len());
    let mut crop_false_hits = 0usize;
    let mut max_axis_speed = 0.0f64;

    for axis_plan in &plan.axes {
        let (lo, hi) = tool.band(axis_plan.axis);
        let mut pos = axis_plan.start;
        let mut t_prev = 0.0f64;
        let mut distance = 0.0f64;

        for node in &axis_plan.nodes {
            let weed = field.plant(node.id).ok_or_else(|| {
                Error::Domain(format!("planned node {} not in the field", node.id))
            })?;
            if node.x < pos.0 {
                return Err(Error::OrderingViolation {
                    from_x: pos.0,
                    to_x: node.x,
                });
            }
            if node.y < lo || node.y >= hi {
                return Err(Error::Domain(format!(
                    "node {} at y={} leaves axis {} band [{}, {})",
                    node.id, node.y, axis_plan.axis, lo, hi
                )));
            }
            let t = node.x / tool.gamma;
            let dy = (node.y - pos.1).abs();
            let dt = t - t_prev;
            if dy > 0.0 {
                // A zero-slack hop would need infinite speed; anything above
                // theta means the planner emitted an impossible plan.
                let needed = if dt > 0.0 { dy / dt } else { f64::INFINITY };
                if needed > tool.theta * (1.0 + 1e-9) {
                    return Err(Error::KinematicViolation {
                        axis: axis_plan.axis,
                        dy,
                        dt,
                        theta: tool.theta,
                    });
                }
                max_axis_speed = max_axis_speed.max(needed);
            }

            let wobble = noise.as_ref().map(|n| n.sample(&mut rng)).unwrap_or(0.0);
            let offset = wobble.abs();
            outcome.insert(weed.id, classify_hit(offset, sim));

            let spray_y = node.y + wobble;
            let near_crop = crops.iter().any(|c| {
                let dx = c.x - node.x;
                let dy = c.y - spray_y;
                (dx * dx + dy * dy).sqrt() <= sim.crop_safety_radius_m
            });
            if near_crop {
                crop_false_hits += 1;
            }

            distance += dy;
            pos = (node.x, node.y);
            t_prev = t;
        }
        per_axis_distance.push(distance + axis_plan.extra_travel_m);
    }

    let mut m = RunMetrics {
        total_weeds: 0,
        accurate_hits: 0,
        partial_hits: 0,
        missed: 0,
        missed_planning: 0,
        missed_detection: 0,
        crop_false_hits,
        loss_pct: 0.0,
        per_axis_distance_m: per_axis_distance,
        high_total: 0,
        high_treated: 0,
        low_total: 0,
        low_treated: 0,
        max_axis_speed,
    };

    for weed in field.weeds() {
        m.total_weeds += 1;
        let treated = match outcome.get(&weed.id) {
            Some(HitClass::Accurate) => {
                m.accurate_hits += 1;
                true
            }
            Some(HitClass::Partial) => {
                m.partial_hits += 1;
                true
            }
            Some(HitClass::Missed) => {
                m.missed += 1;
                false
            }
            None => {
                m.missed += 1;
                if withheld.contains(&weed.id) {
                    m.missed_detection += 1;
                } else {
                    m.missed_planning += 1;
                }
                false
            }
        };
        match weed.priority {
            Priority::High => {
                m.high_total += 1;
                if treated {
                    m.high_treated += 1;
                }
            }
            Priority::Low => {
                m.low_total += 1;
                if treated {
                    m.low_treated += 1;
                }
            }
        }
    }
    m.loss_pct = if m.total_weeds == 0 {
        0.0
    } else {
        100.0 * m.missed as f64 / m.total_weeds as f64
    };

    debug_assert_eq!(
        m.accurate_hits + m.partial_hits + m.missed,
        m.total_weeds,
        "treatment outcome conservation"
    );
    Ok(m)
}

/// Nozzle lateral position sampled at a fixed rate, for plotting. Motion is
/// bang-bang just-in-time: hold position, then slide at full speed to arrive
/// exactly on the next entry.
pub fn trace_axis(
    start: (f64, f64),
    nodes: &[crate::planner::PlannedNode],
    tool: &ToolConfig,
    hz: f64,
) -> Vec<(f64, f64)> {
    let mut samples = Vec::new();
    if hz <= 0.0 {
        return samples;
    }
    let end_t = nodes.last().map(|n| n.entry_s).unwrap_or(0.0);
    let steps = (end_t * hz).ceil() as usize;
    let mut seg = 0usize;
    let mut from = (0.0f64, start.1);
    for k in 0..=steps {
        let t = k as f64 / hz;
        while seg < nodes.len() && nodes[seg].entry_s < t {
            from = (nodes[seg].entry_s, nodes[seg].y);
            seg += 1;
        }
        let y = if seg >= nodes.len() {
            from.1
        } else {
            let target = &nodes[seg];
            let travel = (target.y - from.1).abs();
            let depart = target.entry_s - travel / tool.theta;
            if t <= depart {
                from.1
            } else {
                from.1 + (target.y - from.1).signum() * tool.theta * (t - depart)
            }
        };
        samples.push((t, y));
    }
    samples
}

/// Aggregate over runs: means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub mean_loss_pct: f64,
    pub std_loss_pct: f64,
    pub mean_axis_distance_m: f64,
    pub std_axis_distance_m: f64,
    pub mean_crop_false_hits: f64,
    /// Pooled treatment percentage of high-priority weeds.
    pub high_rate_pct: f64,
    /// Pooled treatment percentage of low-priority weeds.
    pub low_rate_pct: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Summarizes a set of runs. Errors on an empty list.
pub fn aggregate_metrics(runs: &[RunMetrics]) -> Result<MetricsSummary> {
    if runs.is_empty() {
        return Err(Error::EmptyInput(
            "aggregate_metrics needs at least one run",
        ));
    }
    let losses: Vec<f64> = runs.iter().map(|r| r.loss_pct).collect();
    let dists: Vec<f64> = runs.iter().map(|r| r.axis_distance_mean()).collect();
    let (mean_loss, std_loss) = mean_std(&losses);
    let (mean_dist, std_dist) = mean_std(&dists);
    let high_total: usize = runs.iter().map(|r| r.high_total).sum();
    let high_treated: usize = runs.iter().map(|r| r.high_treated).sum();
    let low_total: usize = runs.iter().map(|r| r.low_total).sum();
    let low_treated: usize = runs.iter().map(|r| r.low_treated).sum();
    Ok(MetricsSummary {
        n: runs.len(),
        mean_loss_pct: mean_loss,
        std_loss_pct: std_loss,
        mean_axis_distance_m: mean_dist,
        std_axis_distance_m: std_dist,
        mean_crop_false_hits: runs.iter().map(|r| r.crop_false_hits as f64).sum::<f64>()
            / runs.len() as f64,
        high_rate_pct: if high_total == 0 {
            0.0
        } else {
            100.0 * high_treated as f64 / high_total as f64
        },
        low_rate_pct: if low_total == 0 {
            0.0
        } else {
            100.0 * low_treated as f64 / low_total as f64
        },
    })
}

/// Per-seed loss deltas `a - b` between two paired run sets.
pub fn paired_loss_deltas(a: &[RunMetrics], b: &[RunMetrics]) -> Result<Vec<f64>> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::EmptyInput(
            "paired deltas need two non-empty run sets of equal length",
        ));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.loss_pct - y.loss_pct)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{generate_field, FieldSpec};
    use crate::planner::{
        plan_segment_view, HarmfulnessContext, ObservationMode, PlannerConfig, RowPlan,
    };

    fn planned(field: &FieldModel, tool: &ToolConfig) -> RowPlan {
        plan_segment_view(
            field,
            tool,
            &PlannerConfig::default(),
            &HarmfulnessContext::default(),
        )
        .unwrap()
    }

    #[test]
    fn classify_thresholds() {
        let sim = SimConfig::default();
        assert_eq!(classify_hit(0.0, &sim), HitClass::Accurate);
        assert_eq!(classify_hit(0.02, &sim), HitClass::Partial);
        assert_eq!(classify_hit(0.04, &sim), HitClass::Missed);
    }

    #[test]
    fn exact_kinematics_hit_every_planned_node() {
        let field = generate_field(&FieldSpec::uniform(8.2, 1.39, 12.0, 21)).unwrap();
        let tool = ToolConfig::default();
        let plan = planned(&field, &tool);
        let planned_count = plan.planned_ids().count();
        let m = simulate_run(&field, &plan, &tool, &SimConfig::default(), &HashSet::new()).unwrap();
        assert_eq!(m.accurate_hits, planned_count);
        assert_eq!(m.partial_hits, 0, "sigma=0 leaves no partial hits");
        assert_eq!(m.missed, m.total_weeds - planned_count);
        assert_eq!(m.missed_planning, m.missed);
        assert_eq!(m.missed_detection, 0);
    }

    #[test]
    fn empty_plan_loses_everything() {
        let field = generate_field(&FieldSpec::uniform(5.0, 1.39, 8.0, 4)).unwrap();
        let tool = ToolConfig::default();
        let plan = RowPlan {
            mode: ObservationMode::Segment,
            biodiv: false,
            window_m: 1.0,
            axes: (0..4)
                .map(|axis| crate::planner::AxisPlan {
                    axis,
                    start: (0.0, tool.band_center(axis)),
                    nodes: vec![],
                    edges: vec![],
                    extra_travel_m: 0.0,
                })
                .collect(),
            steps: vec![],
        };
        let m = simulate_run(&field, &plan, &tool, &SimConfig::default(), &HashSet::new()).unwrap();
        assert_eq!(m.loss_pct, 100.0);
        assert!(m.per_axis_distance_m.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn conservation_and_speed_limit_hold() {
        let tool = ToolConfig::default();
        for seed in 0..15u64 {
            let field = generate_field(&FieldSpec::uniform(15.4, 1.39, 10.0, seed)).unwrap();
            let plan = planned(&field, &tool);
            let m =
                simulate_run(&field, &plan, &tool, &SimConfig::default(), &HashSet::new()).unwrap();
            assert_eq!(m.accurate_hits + m.partial_hits + m.missed, m.total_weeds);
            assert!(m.max_axis_speed <= tool.theta + 1e-9);
        }
    }

    #[test]
    fn simulation_is_deterministic_under_noise() {
        let field = generate_field(&FieldSpec::uniform(8.2, 1.39, 10.0, 3)).unwrap();
        let tool = ToolConfig::default();
        let plan = planned(&field, &tool);
        let sim = SimConfig {
            noise_sigma: 0.012,
            seed: 9,
            ..SimConfig::default()
        };
        let a = simulate_run(&field, &plan, &tool, &sim, &HashSet::new()).unwrap();
        let b = simulate_run(&field, &plan, &tool, &sim, &HashSet::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_produces_partials_and_keeps_conservation() {
        let field = generate_field(&FieldSpec::uniform(8.2, 1.39, 20.0, 5)).unwrap();
        let tool = ToolConfig::default();
        let plan = planned(&field, &tool);
        let sim = SimConfig {
            noise_sigma: 0.015,
            seed: 1,
            ..SimConfig::default()
        };
        let m = simulate_run(&field, &plan, &tool, &sim, &HashSet::new()).unwrap();
        assert!(m.partial_hits > 0, "1.5 cm sigma must offset some sprays");
        assert_eq!(m.accurate_hits + m.partial_hits + m.missed, m.total_weeds);
    }

    #[test]
    fn withheld_weeds_count_as_detection_misses() {
        let field = generate_field(&FieldSpec::uniform(8.2, 1.39, 15.0, 8)).unwrap();
        let tool = ToolConfig::default();
        let withheld = withhold_weeds(&field, 0.3, 8);
        assert!(!withheld.is_empty());
        let visible = field.without_weeds(&withheld);
        let plan = planned(&visible, &tool);
        let m = simulate_run(&field, &plan, &tool, &SimConfig::default(), &withheld).unwrap();
        assert_eq!(m.missed_detection, withheld.len());
        assert_eq!(m.accurate_hits + m.partial_hits + m.missed, m.total_weeds);
    }

    #[test]
    fn kinematic_violation_is_reported() {
        let field = generate_field(&FieldSpec::uniform(0.0, 1.39, 5.0, 0)).unwrap();
        let tool = ToolConfig::default();
        // Hand-build an impossible plan: full-band sweep in zero forward travel.
        let mut field_plants = vec![
            crate::field::Plant {
                id: 0,
                x: 1.0,
                y: 0.01,
                kind: crate::field::PlantKind::Weed,
                species: "weed".to_string(),
                area_mm2: 100.0,
                beta: 1.0,
                priority: Priority::High,
            },
            crate::field::Plant {
                id: 1,
                x: 1.0005,
                y: 0.34,
                kind: crate::field::PlantKind::Weed,
                species: "weed".to_string(),
                area_mm2: 100.0,
                beta: 1.0,
                priority: Priority::High,
            },
        ];
        field_plants.sort_by(|a, b| a.x.total_cmp(&b.x));
        let (field2, _) = FieldModel::from_parts(field.spec().clone(), field_plants).unwrap();
        let plan = RowPlan {
            mode: ObservationMode::Segment,
            biodiv: false,
            window_m: 1.0,
            axes: vec![crate::planner::AxisPlan {
                axis: 0,
                start: (0.0, tool.band_center(0)),
                nodes: vec![
                    crate::planner::PlannedNode {
                        id: 0,
                        x: 1.0,
                        y: 0.01,
                        entry_s: 2.0,
                    },
                    crate::planner::PlannedNode {
                        id: 1,
                        x: 1.0005,
                        y: 0.34,
                        entry_s: 2.001,
                    },
                ],
                edges: vec![],
                extra_travel_m: 0.0,
            }],
            steps: vec![],
        };
        let err = simulate_run(
            &field2,
            &plan,
            &tool,
            &SimConfig::default(),
            &HashSet::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::KinematicViolation { .. }));
    }

    #[test]
    fn trace_respects_speed_and_band() {
        let field = generate_field(&FieldSpec::uniform(12.0, 1.39, 8.0, 2)).unwrap();
        let tool = ToolConfig::default();
        let plan = planned(&field, &tool);
        for axis_plan in &plan.axes {
            let samples = trace_axis(axis_plan.start, &axis_plan.nodes, &tool, 1000.0);
            let (lo, hi) = tool.band(axis_plan.axis);
            for pair in samples.windows(2) {
                let ((t0, y0), (t1, y1)) = (pair[0], pair[1]);
                let v = (y1 - y0).abs() / (t1 - t0);
                assert!(v <= tool.theta * (1.0 + 1e-6), "trace speed {v} over limit");
                assert!(y1 >= lo - 1e-9 && y1 < hi + 1e-9, "trace leaves band");
            }
        }
    }

    #[test]
    fn aggregate_examples() {
        let run = |loss: f64| RunMetrics {
            total_weeds: 10,
            accurate_hits: 10,
            partial_hits: 0,
            missed: 0,
            missed_planning: 0,
            missed_detection: 0,
            crop_false_hits: 0,
            loss_pct: loss,
            per_axis_distance_m: vec![1.0, 2.0],
            high_total: 10,
            high_treated: 10,
            low_total: 0,
            low_treated: 0,
            max_axis_speed: 0.0,
        };
        let single = aggregate_metrics(&[run(12.5)]).unwrap();
        assert_eq!(single.mean_loss_pct, 12.5);
        assert_eq!(single.std_loss_pct, 0.0);
        let two = aggregate_metrics(&[run(10.0), run(20.0)]).unwrap();
        assert_eq!(two.mean_loss_pct, 15.0);
        assert!(aggregate_metrics(&[]).is_err());
        let deltas = paired_loss_deltas(&[run(10.0), run(20.0)], &[run(5.0), run(12.0)]).unwrap();
        assert_eq!(deltas, vec![5.0, 8.0]);
    }
}
