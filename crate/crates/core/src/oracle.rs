//! Independent brute-force references used by tests and the `verify`
//! subcommand: exhaustive optimal planning on small instances and
//! Monte-Carlo verification of the analytic reach probability.
//!
//! The oracle deliberately shares no scoring code with the planner; the
//! duplication is the point. Everything here is recomputed from raw plant
//! data with its own arithmetic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Plant, Priority};
use crate::kinematics::ToolConfig;
use crate::planner::HarmfulnessContext;

/// Upper bound on oracle instance size; enumeration is exponential.
pub const ORACLE_TARGET_CAP: usize = 8;

/// One target as the oracle sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTarget {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub area_mm2: f64,
    pub beta: f64,
    pub priority: Priority,
}

impl From<&Plant> for OracleTarget {
    fn from(p: &Plant) -> Self {
        Self {
            id: p.id,
            x: p.x,
            y: p.y,
            area_mm2: p.area_mm2,
            beta: p.beta,
            priority: p.priority,
        }
    }
}

/// Best trajectory found by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_count: usize,
    pub best_c: f64,
    pub best_k: f64,
    pub best_nodes: Vec<u64>,
}

struct Scored {
    nodes: Vec<u64>,
    count: usize,
    c: f64,
    k: f64,
    travel: f64,
    first: u64,
}

/// Exhaustively enumerates every ordered subset of at most
/// [`ORACLE_TARGET_CAP`] targets (no pruning) and returns the argmax under
/// the planner's selection rule for the requested mode.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_plan(
    start: (f64, f64),
    targets: &[OracleTarget],
    crops: &[(f64, f64, f64)],
    tool: &ToolConfig,
    omega: f64,
    rho: f64,
    biodiv: bool,
    ctx: &HarmfulnessContext,
) -> Result<OracleResult> {
    if targets.len() > ORACLE_TARGET_CAP {
        return Err(Error::OracleSize {
            cap: ORACLE_TARGET_CAP,
            got: targets.len(),
        });
    }

    // Same visit order the planner uses: x, then y, then id.
    let mut sorted: Vec<&OracleTarget> = targets.iter().collect();
    sorted.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.id.cmp(&b.id))
    });

    let logistic = |s: f64| 1.0 / (1.0 + (-omega * s).exp());
    let slack = |from: (f64, f64), to: (f64, f64)| -> f64 {
        (to.0 - from.0) / tool.gamma - (to.1 - from.1).abs() / tool.theta - tool.dwell_s
    };
    let kappa = |t: &OracleTarget| -> f64 {
        let weight = match t.priority {
            Priority::Low => ctx.low_priority_weight,
            Priority::High => ctx.high_priority_weight,
        };
        let raw = match crops
            .iter()
            .map(|(cx, cy, ca)| (((cx - t.x).powi(2) + (cy - t.y).powi(2)).sqrt(), *ca))
            .min_by(|a, b| a.0.total_cmp(&b.0))
        {
            Some((dist, crop_area)) => (t.area_mm2 * t.beta * weight) / (crop_area * dist),
            None => {
                (t.area_mm2 * t.beta * weight)
                    / (ctx.nominal_crop_area_mm2 * ctx.reference_distance_m)
            }
        };
        if raw.is_finite() && raw <= ctx.max_kappa {
            raw
        } else {
            ctx.max_kappa
        }
    };

    let n = sorted.len();
    let mut scored: Vec<Scored> = Vec::with_capacity(1 << n);
    scored.push(Scored {
        nodes: Vec::new(),
        count: 0,
        c: 0.0,
        k: 0.0,
        travel: 0.0,
        first: u64::MAX,
    });

    'mask: for mask in 1u32..(1 << n) {
        let picked: Vec<&OracleTarget> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| sorted[i])
            .collect();
        let mut prev = start;
        let mut from_start = true;
        let mut gamma_sum = 0.0;
        let mut travel = 0.0;
        let mut k = 0.0;
        for t in &picked {
            // A start edge tolerates dx = 0; between targets the ordering is
            // strict (equal-x targets have no edge).
            let reachable = if from_start {
                t.x >= prev.0
            } else {
                t.x > prev.0
            };
            if !reachable {
                continue 'mask;
            }
            let g = logistic(slack(prev, (t.x, t.y)));
            if g < rho {
                continue 'mask;
            }
            gamma_sum += g;
            travel += (t.y - prev.1).abs();
            k += kappa(t);
            prev = (t.x, t.y);
            from_start = false;
        }
        scored.push(Scored {
            nodes: picked.iter().map(|t| t.id).collect(),
            count: picked.len(),
            c: gamma_sum / picked.len() as f64,
            k,
            travel,
            first: picked.first().map(|t| t.id).unwrap_or(u64::MAX),
        });
    }

    // Argmax under the selection rule, with the shared tie chain:
    // higher C, then less lateral travel, then lowest first id.
    let better = |a: &Scored, b: &Scored| -> bool {
        let primary = if biodiv {
            a.k.total_cmp(&b.k)
        } else {
            a.count.cmp(&b.count)
        };
        primary
            .then(a.c.total_cmp(&b.c))
            .then(b.travel.total_cmp(&a.travel))
            .then(b.first.cmp(&a.first))
            == std::cmp::Ordering::Greater
    };

    let mut best = 0usize;
    for i in 1..scored.len() {
        let candidate_ok = !biodiv || scored[i].c > 0.0;
        if candidate_ok && better(&scored[i], &scored[best]) {
            best = i;
        }
    }
    let b = &scored[best];
    Ok(OracleResult {
        best_count: b.count,
        best_c: b.c,
        best_k: b.k,
        best_nodes: b.nodes.clone(),
    })
}

/// Result of a planner-vs-oracle random sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOutcome {
    pub instances: usize,
    /// Instance-mode combinations where the planner and the reference
    /// disagreed on the selected nodes or scores.
    pub mismatches: usize,
}

/// Runs random instances of at most `max_targets` weeds on one axis through
/// both the planner and the brute-force reference, in both selection modes,
/// and counts disagreements.
pub fn equivalence_sweep(instances: usize, max_targets: usize, seed: u64) -> Result<SweepOutcome> {
    use crate::assignment::assign_static;
    use crate::field::{FieldModel, FieldSpec, PlantKind};
    use crate::planner::{build_graph, enumerate_notsp, select_trajectory, PlannerConfig};

    if max_targets > ORACLE_TARGET_CAP {
        return Err(Error::OracleSize {
            cap: ORACLE_TARGET_CAP,
            got: max_targets,
        });
    }
    let tool = ToolConfig::default();
    let cfg = PlannerConfig::default();
    let ctx = HarmfulnessContext::default();
    let mut mismatches = 0usize;

    for i in 0..instances {
        let instance_seed = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
        let band = tool.band(0);
        let n = rng.random_range(0..=max_targets);
        let mut plants = Vec::new();
        for id in 0..n {
            plants.push(Plant {
                id: id as u64,
                x: rng.random_range(0.0..1.5),
                y: rng.random_range(band.0..band.1),
                kind: PlantKind::Weed,
                species: "weed".to_string(),
                area_mm2: rng.random_range(50.0..2000.0),
                beta: rng.random_range(0.1..3.0),
                priority: if rng.random_bool(0.3) {
                    Priority::High
                } else {
                    Priority::Low
                },
            });
        }
        plants.push(Plant {
            id: 1000,
            x: rng.random_range(0.2..1.3),
            y: rng.random_range(0.5..0.9),
            kind: PlantKind::Crop,
            species: "crop".to_string(),
            area_mm2: rng.random_range(800.0..2500.0),
            beta: 0.0,
            priority: Priority::Low,
        });
        plants.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let spec = FieldSpec::uniform(0.0, 1.39, 2.0, instance_seed);
        let (field, _) = FieldModel::from_parts(spec, plants)?;
        let start = (0.0, rng.random_range(band.0..band.1));

        let weeds: Vec<&Plant> = field.weeds().collect();
        let targets = assign_static(&weeds, &tool)?.remove(0);
        let graph = build_graph(&targets, &field, &tool, &cfg, start)?;
        let candidates = enumerate_notsp(&graph, &cfg)?;
        let oracle_targets: Vec<OracleTarget> = targets
            .targets
            .iter()
            .map(|id| OracleTarget::from(field.plant(*id).expect("assigned from field")))
            .collect();
        let crops: Vec<(f64, f64, f64)> = field.crops().map(|c| (c.x, c.y, c.area_mm2)).collect();

        for biodiv in [false, true] {
            let chosen = select_trajectory(&candidates, biodiv, &graph, &field, &ctx);
            let reference = brute_force_plan(
                start,
                &oracle_targets,
                &crops,
                &tool,
                cfg.omega,
                cfg.rho,
                biodiv,
                &ctx,
            )?;
            if chosen.nodes != reference.best_nodes
                || (chosen.c_score - reference.best_c).abs() > 1e-12
                || (chosen.k_score - reference.best_k).abs() > 1e-9
            {
                mismatches += 1;
            }
        }
    }
    Ok(SweepOutcome {
        instances,
        mismatches,
    })
}

/// Samples x-gaps from Exponential(eta) and returns the fraction for which
/// the gap-to-lateral ratio beats the speed ratio `gamma/theta`.
pub fn monte_carlo_reach(
    delta_y: f64,
    gamma: f64,
    theta: f64,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    for (name, v) in [
        ("delta_y", delta_y),
        ("gamma", gamma),
        ("theta", theta),
        ("eta", eta),
    ] {
        if !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite, got {v}")));
        }
    }
    if delta_y < 0.0 || gamma < 0.0 || eta < 0.0 || theta <= 0.0 {
        return Err(Error::Domain(
            "need delta_y, gamma, eta >= 0 and theta > 0".to_string(),
        ));
    }
    if samples < 10_000 {
        return Err(Error::Domain(format!(
            "need at least 10^4 samples for a meaningful frequency, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = gamma / theta;
    let mut hits = 0usize;
    for _ in 0..samples {
        let u: f64 = rng.random();
        let dx = -(1.0 - u).ln() / eta;
        let ratio = if delta_y > 0.0 {
            dx / delta_y
        } else {
            f64::INFINITY
        };
        if ratio > threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}
