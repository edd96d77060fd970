//! Experiment runner: generates or loads fields, runs planner variants over
//! seed lists in a worker pool, and emits the metrics CSV plus a summary
//! with paired per-seed comparisons.

use std::collections::HashSet;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{generate_field, FieldModel, FieldSpec, Priority, SpeciesSpec};
use crate::kinematics::ToolConfig;
use crate::planner::{
    plan_rolling_view, plan_segment_view, HarmfulnessContext, ObservationMode, PlannerConfig,
    RowPlan,
};
use crate::simulator::{
    aggregate_metrics, paired_loss_deltas, simulate_run, withhold_weeds, RunMetrics, SimConfig,
};

/// Where a field comes from: a generator spec or a saved field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Spec(FieldSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCase {
    pub label: String,
    pub source: FieldSource,
}

/// One planner configuration under comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub planner: PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub fields: Vec<FieldCase>,
    pub tool: ToolConfig,
    pub variants: Vec<Variant>,
    pub sim: SimConfig,
    #[serde(default)]
    pub harm: HarmfulnessContext,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Worker pool size; `None` uses the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// One (field, seed, variant) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub field_label: String,
    pub lambda: f64,
    pub variant: String,
    pub mode: ObservationMode,
    pub biodiv: bool,
    pub seed: u64,
    /// Effective planning window after density-based fitting, meters.
    pub window_m: f64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub n: usize,
    pub mean_loss_pct: f64,
    pub std_loss_pct: f64,
    pub mean_axis_distance_m: f64,
    pub std_axis_distance_m: f64,
    pub high_rate_pct: f64,
    pub low_rate_pct: f64,
}

/// Per-seed paired loss comparison `a - b` between two variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub a: String,
    pub b: String,
    pub mean_delta_loss_pct: f64,
    pub per_seed_delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub label: String,
    pub lambda: f64,
    pub variants: Vec<VariantSummary>,
    pub paired: Vec<PairedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub fields: Vec<FieldSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub csv: String,
    pub summary: ExperimentSummary,
    pub csv_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

/// Pinned metrics CSV column order.
pub const CSV_HEADER: &str = "run_id,field_model,mode,biodiv,seed,lambda,total_weeds,accurate,\
partial,missed,missed_planning,missed_detection,crop_false_hits,loss_pct,axis_dist_mean_m,\
axis_dist_std_m";

/// Shrinks the planning window until no sliding window holds more targets
/// than the exhaustive-search cap on any axis. Halving keeps segment grids
/// nested; gives up 64x below the configured window.
pub fn fit_window_length(
    field: &FieldModel,
    tool: &ToolConfig,
    cfg: &PlannerConfig,
) -> Result<f64> {
    let mut per_axis: Vec<Vec<f64>> = vec![Vec::new(); tool.heads];
    for w in field.weeds() {
        if let Some(axis) = tool.axis_for(w.y) {
            per_axis[axis].push(w.x);
        }
    }
    let max_count_at = |window: f64| -> usize {
        per_axis
            .iter()
            .map(|xs| {
                let mut best = 0usize;
                let mut j = 0usize;
                for i in 0..xs.len() {
                    if j < i {
                        j = i;
                    }
                    while j < xs.len() && xs[j] < xs[i] + window {
                        j += 1;
                    }
                    best = best.max(j - i);
                }
                best
            })
            .max()
            .unwrap_or(0)
    };

    let mut window = cfg.window_m;
    let floor = cfg.window_m / 64.0;
    while max_count_at(window) > cfg.max_window_targets {
        window /= 2.0;
        if window < floor {
            return Err(Error::WindowOverflow {
                axis: 0,
                start: 0.0,
                count: max_count_at(window * 2.0),
                cap: cfg.max_window_targets,
            });
        }
    }
    Ok(window)
}

/// Plans one field under the given configuration, dispatching on the
/// observation mode.
pub fn plan_field(
    field: &FieldModel,
    tool: &ToolConfig,
    cfg: &PlannerConfig,
    ctx: &HarmfulnessContext,
) -> Result<RowPlan> {
    match cfg.mode {
        ObservationMode::Segment => plan_segment_view(field, tool, cfg, ctx),
        ObservationMode::Rolling => plan_rolling_view(field, tool, cfg, ctx),
    }
}

fn resolve_field(case: &FieldCase, seed: u64) -> Result<FieldModel> {
    match &case.source {
        FieldSource::Spec(spec) => generate_field(&FieldSpec {
            seed,
            ..spec.clone()
        }),
        FieldSource::File(path) => {
            let (model, _warnings) = crate::field::load_field(path)?;
            Ok(model)
        }
    }
}

fn run_one(cfg: &ExperimentConfig, case: &FieldCase, seed: u64) -> Result<Vec<RunRecord>> {
    let field = resolve_field(case, seed)?;
    let withheld = if cfg.sim.withhold_prob > 0.0 {
        withhold_weeds(&field, cfg.sim.withhold_prob, seed)
    } else {
        HashSet::new()
    };
    let visible = if withheld.is_empty() {
        field.clone()
    } else {
        field.without_weeds(&withheld)
    };

    let mut records = Vec::with_capacity(cfg.variants.len());
    for variant in &cfg.variants {
        let window_m = fit_window_length(&visible, &cfg.tool, &variant.planner)?;
        let planner = PlannerConfig {
            window_m,
            ..variant.planner.clone()
        };
        let plan = plan_field(&visible, &cfg.tool, &planner, &cfg.harm)?;
        let sim = SimConfig {
            seed,
            ..cfg.sim.clone()
        };
        let metrics = simulate_run(&field, &plan, &cfg.tool, &sim, &withheld)?;
        records.push(RunRecord {
            run_id: format!("{}-{}-s{}", case.label, variant.label, seed),
            field_label: case.label.clone(),
            lambda: field.spec().lambda,
            variant: variant.label.clone(),
            mode: planner.mode,
            biodiv: planner.biodiv,
            seed,
            window_m,
            metrics,
        });
    }
    Ok(records)
}

/// Serializes records into the pinned CSV schema, enforcing the treatment
/// conservation invariant on every row.
pub fn metrics_csv(records: &[RunRecord]) -> Result<String> {
    let mut out = String::with_capacity(records.len() * 96 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let m = &r.metrics;
        if m.accurate_hits + m.partial_hits + m.missed != m.total_weeds {
            return Err(Error::Domain(format!(
                "run {} violates treatment conservation",
                r.run_id
            )));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4},{:.4},{:.4}\n",
            r.run_id,
            r.field_label,
            r.mode,
            r.biodiv,
            r.seed,
            r.lambda,
            m.total_weeds,
            m.accurate_hits,
            m.partial_hits,
            m.missed,
            m.missed_planning,
            m.missed_detection,
            m.crop_false_hits,
            m.loss_pct,
            m.axis_distance_mean(),
            m.axis_distance_std(),
        ));
    }
    Ok(out)
}

/// Aggregates records into per-field, per-variant summaries plus paired
/// per-seed deltas for every variant pair.
pub fn summarize(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<ExperimentSummary> {
    let mut fields = Vec::with_capacity(cfg.fields.len());
    for case in &cfg.fields {
        let mut variants = Vec::with_capacity(cfg.variants.len());
        let mut runs_by_variant: Vec<Vec<RunMetrics>> = Vec::with_capacity(cfg.variants.len());
        let mut lambda = 0.0;
        for variant in &cfg.variants {
            let runs: Vec<RunMetrics> = records
                .iter()
                .filter(|r| r.field_label == case.label && r.variant == variant.label)
                .map(|r| {
                    lambda = r.lambda;
                    r.metrics.clone()
                })
                .collect();
            let s = aggregate_metrics(&runs)?;
            variants.push(VariantSummary {
                variant: variant.label.clone(),
                n: s.n,
                mean_loss_pct: s.mean_loss_pct,
                std_loss_pct: s.std_loss_pct,
                mean_axis_distance_m: s.mean_axis_distance_m,
                std_axis_distance_m: s.std_axis_distance_m,
                high_rate_pct: s.high_rate_pct,
                low_rate_pct: s.low_rate_pct,
            });
            runs_by_variant.push(runs);
        }
        let mut paired = Vec::new();
        for i in 0..cfg.variants.len() {
            for j in (i + 1)..cfg.variants.len() {
                let deltas = paired_loss_deltas(&runs_by_variant[i], &runs_by_variant[j])?;
                let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
                paired.push(PairedSummary {
                    a: cfg.variants[i].label.clone(),
                    b: cfg.variants[j].label.clone(),
                    mean_delta_loss_pct: mean,
                    per_seed_delta: deltas,
                });
            }
        }
        fields.push(FieldSummary {
            label: case.label.clone(),
            lambda,
            variants,
            paired,
        });
    }
    Ok(ExperimentSummary { fields })
}

/// Runs the full experiment grid. Jobs fan out over a worker pool; records
/// keep a deterministic (field, seed, variant) order so re-running the same
/// config reproduces the CSV byte for byte.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.fields.is_empty() {
        return Err(Error::EmptyInput("experiment needs at least one field"));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::EmptyInput("experiment needs at least one seed"));
    }
    if cfg.variants.is_empty() {
        return Err(Error::EmptyInput("experiment needs at least one variant"));
    }
    cfg.tool.validate()?;
    cfg.sim.validate(&cfg.tool)?;
    cfg.harm.validate()?;
    for v in &cfg.variants {
        v.planner.validate()?;
    }

    let jobs: Vec<(&FieldCase, u64)> = cfg
        .fields
        .iter()
        .flat_map(|case| cfg.seeds.iter().map(move |s| (case, *s)))
        .collect();

    let run_all = || -> Result<Vec<Vec<RunRecord>>> {
        jobs.par_iter()
            .map(|(case, seed)| run_one(cfg, case, *seed))
            .collect()
    };
    let nested = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("worker pool: {e}")))?
            .install(run_all),
        None => run_all(),
    }?;
    let records: Vec<RunRecord> = nested.into_iter().flatten().collect();

    let csv = metrics_csv(&records)?;
    let summary = summarize(cfg, &records)?;

    let (csv_path, summary_path) = match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let csv_path = dir.join("metrics.csv");
            let summary_path = dir.join("summary.json");
            std::fs::write(&csv_path, &csv)?;
            let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse {
                path: summary_path.display().to_string(),
                message: e.to_string(),
            })?;
            std::fs::write(&summary_path, text)?;
            (Some(csv_path), Some(summary_path))
        }
        None => (None, None),
    };

    Ok(ExperimentOutput {
        records,
        csv,
        summary,
        csv_path,
        summary_path,
    })
}

/// The built-in density ladder, one field case per density.
pub const DENSITY_LADDER: [f64; 5] = [3.1, 8.2, 15.4, 22.3, 81.2];

/// Row length used by the built-in suites, meters.
pub const SUITE_ROW_LENGTH_M: f64 = 40.0;

fn density_case(lambda: f64, length: f64, crop_spacing: f64) -> FieldCase {
    FieldCase {
        label: format!("density-{lambda}"),
        source: FieldSource::Spec(FieldSpec {
            lambda,
            width: 1.39,
            length,
            species_mix: vec![SpeciesSpec::new("weed", 1.0, 1.0, Priority::High)],
            crop_spacing,
            crop_area_mm2: 1500.0,
            crop_jitter_sigma: 0.01,
            seed: 0,
        }),
    }
}

/// Built-in suite "paper-densities": segment vs rolling observation at the
/// published density ladder, default speeds.
pub fn paper_density_suite(seeds: Vec<u64>, out_dir: Option<PathBuf>) -> ExperimentConfig {
    let fields = DENSITY_LADDER
        .iter()
        .map(|&lambda| density_case(lambda, SUITE_ROW_LENGTH_M, 0.2))
        .collect();
    ExperimentConfig {
        fields,
        tool: ToolConfig::default(),
        variants: vec![
            Variant {
                label: "segment".to_string(),
                planner: PlannerConfig {
                    mode: ObservationMode::Segment,
                    ..PlannerConfig::default()
                },
            },
            Variant {
                label: "rolling".to_string(),
                planner: PlannerConfig {
                    mode: ObservationMode::Rolling,
                    ..PlannerConfig::default()
                },
            },
        ],
        sim: SimConfig::default(),
        harm: HarmfulnessContext::default(),
        seeds,
        out_dir,
        workers: None,
    }
}

/// Built-in suite "biodiv": doubled robot speed, a 10:1 low:high priority
/// mix, baseline vs bio-diversity selection under rolling observation.
pub fn biodiv_suite(seeds: Vec<u64>, out_dir: Option<PathBuf>) -> ExperimentConfig {
    let mix = vec![
        SpeciesSpec {
            name: "dicot".to_string(),
            fraction: 10.0 / 11.0,
            beta: 1.0,
            priority: Priority::Low,
            area_median_mm2: 600.0,
            area_sigma: 0.5,
        },
        SpeciesSpec {
            name: "grass-weed".to_string(),
            fraction: 1.0 / 11.0,
            beta: 1.0,
            priority: Priority::High,
            area_median_mm2: 600.0,
            area_sigma: 0.5,
        },
    ];
    let fields = [3.1, 15.4, 22.3]
        .iter()
        .map(|&lambda| FieldCase {
            label: format!("density-{lambda}"),
            source: FieldSource::Spec(FieldSpec {
                lambda,
                width: 1.39,
                length: SUITE_ROW_LENGTH_M,
                species_mix: mix.clone(),
                crop_spacing: 0.2,
                crop_area_mm2: 1500.0,
                crop_jitter_sigma: 0.01,
                seed: 0,
            }),
        })
        .collect();
    let rolling = PlannerConfig {
        mode: ObservationMode::Rolling,
        ..PlannerConfig::default()
    };
    ExperimentConfig {
        fields,
        tool: ToolConfig {
            gamma: 1.0,
            ..ToolConfig::default()
        },
        variants: vec![
            Variant {
                label: "baseline".to_string(),
                planner: rolling.clone(),
            },
            Variant {
                label: "biodiv".to_string(),
                planner: PlannerConfig {
                    biodiv: true,
                    ..rolling
                },
            },
        ],
        sim: SimConfig::default(),
        harm: HarmfulnessContext::default(),
        seeds,
        out_dir,
        workers: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            fields: vec![density_case(8.2, 10.0, 0.0)],
            tool: ToolConfig::default(),
            variants: vec![
                Variant {
                    label: "segment".to_string(),
                    planner: PlannerConfig::default(),
                },
                Variant {
                    label: "rolling".to_string(),
                    planner: PlannerConfig {
                        mode: ObservationMode::Rolling,
                        ..PlannerConfig::default()
                    },
                },
            ],
            sim: SimConfig::default(),
            harm: HarmfulnessContext::default(),
            seeds: vec![0, 1, 2],
            out_dir: None,
            workers: Some(2),
        }
    }

    #[test]
    fn csv_is_reproducible_byte_for_byte() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn records_follow_field_seed_variant_order() {
        let out = run_experiment(&tiny_config()).unwrap();
        let ids: Vec<&str> = out.records.iter().map(|r| r.run_id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "density-8.2-segment-s0",
                "density-8.2-rolling-s0",
                "density-8.2-segment-s1",
                "density-8.2-rolling-s1",
                "density-8.2-segment-s2",
                "density-8.2-rolling-s2",
            ]
        );
    }

    #[test]
    fn summary_has_paired_deltas() {
        let out = run_experiment(&tiny_config()).unwrap();
        assert_eq!(out.summary.fields.len(), 1);
        let f = &out.summary.fields[0];
        assert_eq!(f.variants.len(), 2);
        assert_eq!(f.paired.len(), 1);
        assert_eq!(f.paired[0].per_seed_delta.len(), 3);
    }

    #[test]
    fn empty_seed_list_is_a_config_error() {
        let mut cfg = tiny_config();
        cfg.seeds.clear();
        assert!(matches!(run_experiment(&cfg), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn window_fitting_shrinks_for_dense_fields() {
        let tool = ToolConfig::default();
        let cfg = PlannerConfig::default();
        let dense = generate_field(&FieldSpec::uniform(81.2, 1.39, 20.0, 1)).unwrap();
        let w = fit_window_length(&dense, &tool, &cfg).unwrap();
        assert!(
            w < 1.0,
            "81.2 weeds/m^2 cannot fit 12-target windows at 1 m"
        );
        let sparse = generate_field(&FieldSpec::uniform(3.1, 1.39, 20.0, 1)).unwrap();
        let w = fit_window_length(&sparse, &tool, &cfg).unwrap();
        assert_eq!(w, 1.0);
    }
}
