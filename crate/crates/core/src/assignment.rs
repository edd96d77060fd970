//! Distribution of observed weeds among the intervention heads.
//!
//! Only static work-space division is implemented: each axis owns a fixed
//! lateral band and receives exactly the weeds falling inside it. The
//! distance-based and dynamic division strategies are named but deliberately
//! unimplemented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Plant, PlantKind};
use crate::kinematics::ToolConfig;

/// Target assignment strategies. Only `StaticDivision` is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentStrategy {
    StaticDivision,
    DistanceBased,
    DynamicDivision,
}

/// The weeds one axis is responsible for, sorted by `x` ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisTargets {
    pub axis: usize,
    /// Half-open lateral band `[lo, hi)` owned by this axis.
    pub band: (f64, f64),
    /// Plant ids, sorted by x (ties by y, then id).
    pub targets: Vec<u64>,
}

/// Dispatches on strategy; non-static strategies return an error.
pub fn assign(
    strategy: AssignmentStrategy,
    window: &[&Plant],
    tool: &ToolConfig,
) -> Result<Vec<AxisTargets>> {
    match strategy {
        AssignmentStrategy::StaticDivision => assign_static(window, tool),
        AssignmentStrategy::DistanceBased => Err(Error::UnimplementedStrategy("distance-based")),
        AssignmentStrategy::DynamicDivision => {
            Err(Error::UnimplementedStrategy("dynamic-division"))
        }
    }
}

/// Static work-space division: partitions the window's weeds over the `H`
/// axis bands. Crops are never assigned. Every weed lands on exactly one
/// axis; a weed outside `[0, coverage)` is an error.
pub fn assign_static(window: &[&Plant], tool: &ToolConfig) -> Result<Vec<AxisTargets>> {
    tool.validate()?;
    let mut per_axis: Vec<Vec<&Plant>> = vec![Vec::new(); tool.heads];
    for plant in window {
        if plant.kind == PlantKind::Crop {
            continue;
        }
        let axis = tool.axis_for(plant.y).ok_or_else(|| {
            Error::Domain(format!(
                "weed {} at y={} lies outside the workspace [0, {})",
                plant.id, plant.y, tool.coverage_m
            ))
        })?;
        per_axis[axis].push(plant);
    }
    Ok(per_axis
        .into_iter()
        .enumerate()
        .map(|(axis, mut plants)| {
            plants.sort_by(|a, b| {
                a.x.total_cmp(&b.x)
                    .then(a.y.total_cmp(&b.y))
                    .then(a.id.cmp(&b.id))
            });
            AxisTargets {
                axis,
                band: tool.band(axis),
                targets: plants.into_iter().map(|p| p.id).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Priority;
    use proptest::prelude::*;

    fn weed(id: u64, x: f64, y: f64) -> Plant {
        Plant {
            id,
            x,
            y,
            kind: PlantKind::Weed,
            species: "weed".to_string(),
            area_mm2: 100.0,
            beta: 1.0,
            priority: Priority::High,
        }
    }

    #[test]
    fn lower_band_edge_goes_to_axis_zero() {
        let tool = ToolConfig::default();
        let p = weed(0, 1.0, 0.0);
        let out = assign_static(&[&p], &tool).unwrap();
        assert_eq!(out[0].targets, vec![0]);
    }

    #[test]
    fn band_boundary_goes_to_upper_axis() {
        let tool = ToolConfig::default();
        let p = weed(0, 1.0, tool.coverage_m / 4.0);
        let out = assign_static(&[&p], &tool).unwrap();
        assert!(out[0].targets.is_empty());
        assert_eq!(out[1].targets, vec![0]);
    }

    #[test]
    fn twelve_uniform_weeds_partition_over_four_axes() {
        let tool = ToolConfig::default();
        // Three weeds per quarter band, by direct enumeration.
        let bw = tool.band_width();
        let mut plants = Vec::new();
        let mut id = 0;
        for axis in 0..4 {
            for k in 0..3 {
                plants.push(weed(
                    id,
                    0.3 * id as f64,
                    axis as f64 * bw + (k as f64 + 0.5) * bw / 3.0,
                ));
                id += 1;
            }
        }
        let refs: Vec<&Plant> = plants.iter().collect();
        let out = assign_static(&refs, &tool).unwrap();
        let mut all: Vec<u64> = out.iter().flat_map(|a| a.targets.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<u64>>());
        for a in &out {
            assert_eq!(a.targets.len(), 3);
            for id in &a.targets {
                let p = &plants[*id as usize];
                assert!(p.y >= a.band.0 && p.y < a.band.1);
            }
        }
    }

    #[test]
    fn crops_are_never_assigned() {
        let tool = ToolConfig::default();
        let mut crop = weed(0, 1.0, 0.5);
        crop.kind = PlantKind::Crop;
        let out = assign_static(&[&crop], &tool).unwrap();
        assert!(out.iter().all(|a| a.targets.is_empty()));
    }

    #[test]
    fn out_of_workspace_weed_is_an_error() {
        let tool = ToolConfig::default();
        let p = weed(0, 1.0, 1.39);
        assert!(assign_static(&[&p], &tool).is_err());
    }

    #[test]
    fn unimplemented_strategies_error() {
        let tool = ToolConfig::default();
        for strategy in [
            AssignmentStrategy::DistanceBased,
            AssignmentStrategy::DynamicDivision,
        ] {
            assert!(matches!(
                assign(strategy, &[], &tool),
                Err(Error::UnimplementedStrategy(_))
            ));
        }
    }

    proptest! {
        // Partition property: no weed lost, none duplicated, independent of
        // input order.
        #[test]
        fn partition_holds_and_order_does_not_matter(
            seed in 0u64..200,
            n in 0usize..40,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let tool = ToolConfig::default();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let plants: Vec<Plant> = (0..n)
                .map(|i| {
                    use rand::Rng;
                    weed(i as u64, rng.random_range(0.0..10.0), rng.random_range(0.0..1.39))
                })
                .collect();
            let refs: Vec<&Plant> = plants.iter().collect();
            let out = assign_static(&refs, &tool).unwrap();

            let mut shuffled = refs.clone();
            shuffled.shuffle(&mut rng);
            let out_shuffled = assign_static(&shuffled, &tool).unwrap();
            prop_assert_eq!(&out, &out_shuffled);

            let mut all: Vec<u64> = out.iter().flat_map(|a| a.targets.iter().copied()).collect();
            all.sort_unstable();
            let mut expect: Vec<u64> = (0..n as u64).collect();
            expect.sort_unstable();
            prop_assert_eq!(all, expect);

            for a in &out {
                for w in a.targets.windows(2) {
                    let (p, q) = (&plants[w[0] as usize], &plants[w[1] as usize]);
                    prop_assert!(p.x <= q.x);
                }
            }
        }
    }
}
