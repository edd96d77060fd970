//! Browser bindings: three interactive operations over the planning stack,
//! each taking and returning JSON strings so the page stays framework-free.
//!
//! Build with `wasm-pack build crates/wasm --target web` and serve `www/`.

use serde::Deserialize;
use wasm_bindgen::prelude::wasm_bindgen;

use rowplan_core::experiment::{fit_window_length, plan_field};
use rowplan_core::field::{generate_field, FieldSpec, Priority, SpeciesSpec};
use rowplan_core::kinematics::ToolConfig;
use rowplan_core::planner::{HarmfulnessContext, ObservationMode, PlannerConfig};
use rowplan_core::report::{line_chart_svg, trajectory_svg};
use rowplan_core::simulator::{simulate_run, SimConfig};

fn err_json(message: &str) -> String {
    format!(
        "{{\"ok\":false,\"error\":{}}}",
        serde_json::to_string(message).unwrap_or_else(|_| "\"?\"".to_string())
    )
}

fn default_length() -> f64 {
    10.0
}

fn default_gamma() -> f64 {
    0.5
}

fn default_theta() -> f64 {
    5.0
}

fn default_omega() -> f64 {
    50.0
}

fn default_rho() -> f64 {
    0.6
}

fn default_crop_spacing() -> f64 {
    0.2
}

#[derive(Deserialize)]
struct DemoConfig {
    lambda: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_length")]
    length: f64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_theta")]
    theta: f64,
    #[serde(default = "default_omega")]
    omega: f64,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default)]
    rolling: bool,
    #[serde(default)]
    biodiv: bool,
    /// Generate a 10:1 low:high priority mix instead of a single species.
    #[serde(default)]
    priority_mix: bool,
    #[serde(default = "default_crop_spacing")]
    crop_spacing: f64,
}

fn field_spec(cfg: &DemoConfig) -> FieldSpec {
    let species_mix = if cfg.priority_mix {
        vec![
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
        ]
    } else {
        vec![SpeciesSpec::new("weed", 1.0, 1.0, Priority::High)]
    };
    FieldSpec {
        lambda: cfg.lambda,
        width: 1.39,
        length: cfg.length,
        species_mix,
        crop_spacing: cfg.crop_spacing,
        crop_area_mm2: 1500.0,
        crop_jitter_sigma: 0.01,
        seed: cfg.seed,
    }
}

/// Generates a field, plans it, simulates the run, and returns the
/// trajectory SVG plus the run metrics as JSON.
#[wasm_bindgen]
pub fn plan_demo(config_json: &str) -> String {
    let cfg: DemoConfig = match serde_json::from_str(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(&format!("bad config: {e}")),
    };
    let tool = ToolConfig {
        gamma: cfg.gamma,
        theta: cfg.theta,
        ..ToolConfig::default()
    };
    let planner_base = PlannerConfig {
        omega: cfg.omega,
        rho: cfg.rho,
        mode: if cfg.rolling {
            ObservationMode::Rolling
        } else {
            ObservationMode::Segment
        },
        biodiv: cfg.biodiv,
        ..PlannerConfig::default()
    };
    let result = (|| -> Result<String, rowplan_core::Error> {
        let field = generate_field(&field_spec(&cfg))?;
        let window_m = fit_window_length(&field, &tool, &planner_base)?;
        let planner = PlannerConfig {
            window_m,
            ..planner_base
        };
        let ctx = HarmfulnessContext::default();
        let plan = plan_field(&field, &tool, &planner, &ctx)?;
        let metrics = simulate_run(
            &field,
            &plan,
            &tool,
            &SimConfig::default(),
            &Default::default(),
        )?;
        let svg = trajectory_svg(&field, Some(&plan), &tool);
        let planned: usize = plan.planned_ids().count();
        Ok(format!(
            "{{\"ok\":true,\"svg\":{},\"window_m\":{},\"total_weeds\":{},\"planned\":{},\
             \"accurate\":{},\"partial\":{},\"missed\":{},\"loss_pct\":{:.2},\
             \"high_rate_pct\":{:.1},\"low_rate_pct\":{:.1},\"axis_distance_m\":{:.2}}}",
            serde_json::to_string(&svg).unwrap(),
            window_m,
            metrics.total_weeds,
            planned,
            metrics.accurate_hits,
            metrics.partial_hits,
            metrics.missed,
            metrics.loss_pct,
            metrics.high_rate_pct(),
            metrics.low_rate_pct(),
            metrics.axis_distance_mean(),
        ))
    })();
    result.unwrap_or_else(|e| err_json(&e.to_string()))
}

/// Reach-probability curves against lateral offset for a family of weed
/// densities, at the given speed pair.
#[wasm_bindgen]
pub fn reach_curves(gamma: f64, theta: f64) -> String {
    let result = (|| -> Result<String, rowplan_core::Error> {
        let mut series = Vec::new();
        for lambda in [3.1, 8.2, 15.4, 22.3, 81.2] {
            let eta = lambda * 1.39;
            let mut points = Vec::new();
            for k in 0..=60 {
                let dy = 0.35 * k as f64 / 60.0;
                points.push((dy, rowplan_core::reach_probability(dy, gamma, theta, eta)?));
            }
            series.push((format!("{lambda} weeds/m^2"), points));
        }
        let svg = line_chart_svg(&series, "lateral offset (m)", "reach probability");
        Ok(format!(
            "{{\"ok\":true,\"svg\":{}}}",
            serde_json::to_string(&svg).unwrap()
        ))
    })();
    result.unwrap_or_else(|e| err_json(&e.to_string()))
}

#[derive(Deserialize)]
struct SweepConfig {
    #[serde(default = "default_sweep_seeds")]
    seeds: u64,
    #[serde(default = "default_length")]
    length: f64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_theta")]
    theta: f64,
}

fn default_sweep_seeds() -> u64 {
    3
}

/// Runs a small segment-vs-rolling comparison over the density ladder and
/// returns the loss curves plus per-density numbers.
#[wasm_bindgen]
pub fn density_sweep(config_json: &str) -> String {
    let cfg: SweepConfig = match serde_json::from_str(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(&format!("bad config: {e}")),
    };
    let tool = ToolConfig {
        gamma: cfg.gamma,
        theta: cfg.theta,
        ..ToolConfig::default()
    };
    let ctx = HarmfulnessContext::default();
    let result = (|| -> Result<String, rowplan_core::Error> {
        let mut seg_points = Vec::new();
        let mut roll_points = Vec::new();
        let mut rows = Vec::new();
        for lambda in [3.1, 8.2, 15.4, 22.3, 81.2] {
            let mut losses = [Vec::new(), Vec::new()];
            for seed in 0..cfg.seeds {
                let field = generate_field(&FieldSpec {
                    crop_spacing: 0.2,
                    ..FieldSpec::uniform(lambda, 1.39, cfg.length, seed)
                })?;
                let window_m = fit_window_length(&field, &tool, &PlannerConfig::default())?;
                for (i, mode) in [ObservationMode::Segment, ObservationMode::Rolling]
                    .into_iter()
                    .enumerate()
                {
                    let planner = PlannerConfig {
                        mode,
                        window_m,
                        ..PlannerConfig::default()
                    };
                    let plan = plan_field(&field, &tool, &planner, &ctx)?;
                    let m = simulate_run(
                        &field,
                        &plan,
                        &tool,
                        &SimConfig::default(),
                        &Default::default(),
                    )?;
                    losses[i].push(m.loss_pct);
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (seg, roll) = (mean(&losses[0]), mean(&losses[1]));
            seg_points.push((lambda, seg));
            roll_points.push((lambda, roll));
            rows.push(format!(
                "{{\"lambda\":{lambda},\"segment\":{seg:.2},\"rolling\":{roll:.2}}}"
            ));
        }
        let svg = line_chart_svg(
            &[
                ("segment".to_string(), seg_points),
                ("rolling".to_string(), roll_points),
            ],
            "weed density (1/m^2)",
            "loss (%)",
        );
        Ok(format!(
            "{{\"ok\":true,\"svg\":{},\"rows\":[{}]}}",
            serde_json::to_string(&svg).unwrap(),
            rows.join(",")
        ))
    })();
    result.unwrap_or_else(|e| err_json(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_demo_returns_svg_and_metrics() {
        let out = plan_demo(r#"{"lambda": 12.0, "seed": 3, "rolling": true}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true, "got {out}");
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        let total = v["total_weeds"].as_u64().unwrap();
        let acc = v["accurate"].as_u64().unwrap();
        let part = v["partial"].as_u64().unwrap();
        let missed = v["missed"].as_u64().unwrap();
        assert_eq!(acc + part + missed, total);
    }

    #[test]
    fn plan_demo_rejects_bad_config() {
        let out = plan_demo("{\"lambda\": \"x\"}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], false);
    }

    #[test]
    fn reach_curves_render() {
        let out = reach_curves(0.5, 5.0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true);
        assert!(v["svg"].as_str().unwrap().contains("polyline"));
    }

    #[test]
    fn density_sweep_orders_modes() {
        let out = density_sweep(r#"{"seeds": 2, "length": 8.0}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true, "got {out}");
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 5);
        for row in rows {
            assert!(row["segment"].as_f64().unwrap() >= 0.0);
            assert!(row["rolling"].as_f64().unwrap() >= 0.0);
        }
    }
}
