//! Field modeling: plants, rows, synthetic Poisson fields, and the analytic
//! reach probability.
//!
//! A row is modeled in the tool frame: `x` runs along the travel direction,
//! `y` lies across the row in `[0, width)`. Weed positions follow a Poisson
//! process along `x` with arrival rate `eta = lambda * width`, so successive
//! x-gaps are i.i.d. exponential and `y` is uniform across the row. Crops,
//! when present, sit on a jittered lattice along the row center line.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two detections closer than this are one plant (nozzle resolution).
pub const DEDUP_TOLERANCE_M: f64 = 1e-3;

/// Crop or weed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    Crop,
    Weed,
}

/// Two-level treatment priority scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Low,
    High,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Priority::Low => write!(f, "low"),
            Priority::High => write!(f, "high"),
        }
    }
}

/// One crop or weed instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub id: u64,
    /// Meters along the travel direction.
    #[serde(rename = "x_m")]
    pub x: f64,
    /// Meters lateral, in `[0, width)`.
    #[serde(rename = "y_m")]
    pub y: f64,
    pub kind: PlantKind,
    pub species: String,
    /// Plant size in square millimeters.
    pub area_mm2: f64,
    /// Species harmfulness weight (dimensionless, non-negative).
    pub beta: f64,
    pub priority: Priority,
}

impl Plant {
    pub fn is_weed(&self) -> bool {
        self.kind == PlantKind::Weed
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// One entry of a species mix: how often a species occurs and what it
/// looks like when drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub name: String,
    /// Fraction of weeds belonging to this species. Fractions sum to 1.
    pub fraction: f64,
    pub beta: f64,
    pub priority: Priority,
    /// Median of the log-normal area distribution, mm^2.
    pub area_median_mm2: f64,
    /// Sigma of the log-normal area distribution (log scale).
    pub area_sigma: f64,
}

impl SpeciesSpec {
    pub fn new(name: &str, fraction: f64, beta: f64, priority: Priority) -> Self {
        Self {
            name: name.to_string(),
            fraction,
            beta,
            priority,
            area_median_mm2: 600.0,
            area_sigma: 0.5,
        }
    }
}

fn default_crop_area() -> f64 {
    1500.0
}

fn default_crop_jitter() -> f64 {
    0.01
}

/// Recipe for a synthetic field row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// Weeds per square meter.
    pub lambda: f64,
    /// Weeding width in meters (the lateral extent of the row).
    pub width: f64,
    /// Row length in meters.
    pub length: f64,
    pub species_mix: Vec<SpeciesSpec>,
    /// Meters between crops on the center-line lattice. 0 = weed-only field.
    pub crop_spacing: f64,
    /// Crop size in mm^2 (constant; crops are not drawn from a mix).
    #[serde(default = "default_crop_area")]
    pub crop_area_mm2: f64,
    /// Gaussian jitter applied to crop lattice positions, meters.
    #[serde(default = "default_crop_jitter")]
    pub crop_jitter_sigma: f64,
    pub seed: u64,
}

impl FieldSpec {
    /// Single-species weed field at the given density.
    pub fn uniform(lambda: f64, width: f64, length: f64, seed: u64) -> Self {
        Self {
            lambda,
            width,
            length,
            species_mix: vec![SpeciesSpec::new("weed", 1.0, 1.0, Priority::High)],
            crop_spacing: 0.0,
            crop_area_mm2: default_crop_area(),
            crop_jitter_sigma: default_crop_jitter(),
            seed,
        }
    }

    /// Poisson arrival rate along the travel direction: `eta = lambda * width`.
    pub fn arrival_rate(&self) -> f64 {
        self.lambda * self.width
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig {
                field: "lambda",
                message: format!("must be finite and >= 0, got {}", self.lambda),
            });
        }
        if !self.width.is_finite() || self.width <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "width",
                message: format!("must be finite and > 0, got {}", self.width),
            });
        }
        if !self.length.is_finite() || self.length <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "length",
                message: format!("must be finite and > 0, got {}", self.length),
            });
        }
        if self.crop_spacing < 0.0 {
            return Err(Error::InvalidConfig {
                field: "crop_spacing",
                message: format!("must be >= 0, got {}", self.crop_spacing),
            });
        }
        if self.lambda > 0.0 && self.species_mix.is_empty() {
            return Err(Error::InvalidConfig {
                field: "species_mix",
                message: "must not be empty when lambda > 0".to_string(),
            });
        }
        if !self.species_mix.is_empty() {
            let sum: f64 = self.species_mix.iter().map(|s| s.fraction).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig {
                    field: "species_mix",
                    message: format!("fractions must sum to 1, got {sum}"),
                });
            }
        }
        for s in &self.species_mix {
            if !s.fraction.is_finite() || s.fraction < 0.0 {
                return Err(Error::InvalidConfig {
                    field: "species_mix",
                    message: format!("species '{}' has negative fraction", s.name),
                });
            }
            if !s.beta.is_finite() || s.beta < 0.0 {
                return Err(Error::InvalidConfig {
                    field: "species_mix",
                    message: format!("species '{}' has negative beta", s.name),
                });
            }
            if !(s.area_median_mm2.is_finite() && s.area_median_mm2 > 0.0)
                || !(s.area_sigma.is_finite() && s.area_sigma >= 0.0)
            {
                return Err(Error::InvalidConfig {
                    field: "species_mix",
                    message: format!("species '{}' has invalid area parameters", s.name),
                });
            }
        }
        if !self.crop_area_mm2.is_finite() || self.crop_area_mm2 <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "crop_area_mm2",
                message: format!("must be > 0, got {}", self.crop_area_mm2),
            });
        }
        Ok(())
    }
}

/// An ordered row of plants plus the spec that produced it.
///
/// Plants are sorted by `x` ascending (ties by `y`, then id) and deduplicated
/// to [`DEDUP_TOLERANCE_M`]. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    spec: FieldSpec,
    plants: Vec<Plant>,
    by_id: HashMap<u64, usize>,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    spec: FieldSpec,
    plants: Vec<Plant>,
}

impl FieldModel {
    /// Builds a model from raw parts, enforcing the row invariants.
    ///
    /// Unsorted input is re-sorted and near-duplicate plants are merged;
    /// both produce warnings rather than errors. Out-of-range values are
    /// hard errors.
    pub fn from_parts(spec: FieldSpec, mut plants: Vec<Plant>) -> Result<(Self, Vec<String>)> {
        spec.validate()?;
        let mut warnings = Vec::new();

        for p in &plants {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidConfig {
                    field: "plants",
                    message: format!("plant {} has non-finite position", p.id),
                });
            }
            if p.y < 0.0 || p.y >= spec.width {
                return Err(Error::InvalidConfig {
                    field: "plants",
                    message: format!("plant {} has y={} outside [0, {})", p.id, p.y, spec.width),
                });
            }
            if !p.area_mm2.is_finite() || p.area_mm2 <= 0.0 {
                return Err(Error::InvalidConfig {
                    field: "plants",
                    message: format!("plant {} has non-positive area", p.id),
                });
            }
            if !p.beta.is_finite() || p.beta < 0.0 {
                return Err(Error::InvalidConfig {
                    field: "plants",
                    message: format!("plant {} has negative beta", p.id),
                });
            }
        }

        let sorted = plants
            .windows(2)
            .all(|w| plant_order(&w[0], &w[1]) != std::cmp::Ordering::Greater);
        if !sorted {
            plants.sort_by(plant_order);
            warnings.push("plants were not sorted by x; re-sorted".to_string());
        }

        // Merge detections closer than the dedup tolerance; keep the first.
        let mut kept: Vec<Plant> = Vec::with_capacity(plants.len());
        let mut dropped = 0usize;
        for p in plants {
            let dup = kept
                .iter()
                .rev()
                .take_while(|q| p.x - q.x < DEDUP_TOLERANCE_M)
                .any(|q| {
                    let dx = p.x - q.x;
                    let dy = p.y - q.y;
                    (dx * dx + dy * dy).sqrt() < DEDUP_TOLERANCE_M
                });
            if dup {
                dropped += 1;
            } else {
                kept.push(p);
            }
        }
        if dropped > 0 {
            warnings.push(format!(
                "merged {dropped} plants within the 1 mm dedup tolerance"
            ));
        }

        let mut by_id = HashMap::with_capacity(kept.len());
        for (i, p) in kept.iter().enumerate() {
            if by_id.insert(p.id, i).is_some() {
                return Err(Error::InvalidConfig {
                    field: "plants",
                    message: format!("duplicate plant id {}", p.id),
                });
            }
        }

        Ok((
            Self {
                spec,
                plants: kept,
                by_id,
            },
            warnings,
        ))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn plants(&self) -> &[Plant] {
        &self.plants
    }

    pub fn plant(&self, id: u64) -> Option<&Plant> {
        self.by_id.get(&id).map(|&i| &self.plants[i])
    }

    pub fn weeds(&self) -> impl Iterator<Item = &Plant> {
        self.plants.iter().filter(|p| p.kind == PlantKind::Weed)
    }

    pub fn crops(&self) -> impl Iterator<Item = &Plant> {
        self.plants.iter().filter(|p| p.kind == PlantKind::Crop)
    }

    pub fn weed_count(&self) -> usize {
        self.weeds().count()
    }

    /// A copy of this model with the given weed ids removed, leaving the
    /// spec untouched. Used to emulate detection failures.
    pub fn without_weeds(&self, hidden: &std::collections::HashSet<u64>) -> Self {
        let plants: Vec<Plant> = self
            .plants
            .iter()
            .filter(|p| !(p.kind == PlantKind::Weed && hidden.contains(&p.id)))
            .cloned()
            .collect();
        let by_id = plants.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        Self {
            spec: self.spec.clone(),
            plants,
            by_id,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = FieldFile {
            spec: self.spec.clone(),
            plants: self.plants.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Parse {
            path: "<memory>".to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<(Self, Vec<String>)> {
        let file: FieldFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Self::from_parts(file.spec, file.plants)
    }
}

fn plant_order(a: &Plant, b: &Plant) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.id.cmp(&b.id))
}

/// Generates a synthetic field. Deterministic for a fixed spec (incl. seed).
///
/// Weed x-gaps are i.i.d. exponential with rate `eta = lambda * width`; `y`
/// is uniform in `[0, width)`. Species, beta, priority, and area come from
/// the species mix. Crops (if `crop_spacing > 0`) sit on a center-line
/// lattice with Gaussian jitter.
pub fn generate_field(spec: &FieldSpec) -> Result<FieldModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plants: Vec<Plant> = Vec::new();

    if spec.crop_spacing > 0.0 {
        let jitter = Normal::new(0.0, spec.crop_jitter_sigma.max(0.0)).map_err(|e| {
            Error::InvalidConfig {
                field: "crop_jitter_sigma",
                message: e.to_string(),
            }
        })?;
        let mut cx = spec.crop_spacing / 2.0;
        while cx < spec.length {
            let x = (cx + jitter.sample(&mut rng)).clamp(0.0, spec.length);
            let y = (spec.width / 2.0 + jitter.sample(&mut rng))
                .clamp(0.0, spec.width - f64::EPSILON * spec.width);
            plants.push(Plant {
                id: 0,
                x,
                y,
                kind: PlantKind::Crop,
                species: "crop".to_string(),
                area_mm2: spec.crop_area_mm2,
                beta: 0.0,
                priority: Priority::Low,
            });
            cx += spec.crop_spacing;
        }
    }

    if spec.lambda > 0.0 {
        let eta = spec.arrival_rate();
        let cdf: Vec<f64> = spec
            .species_mix
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s.fraction;
                Some(*acc)
            })
            .collect();
        let areas: Vec<LogNormal<f64>> = spec
            .species_mix
            .iter()
            .map(|s| LogNormal::new(s.area_median_mm2.ln(), s.area_sigma))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidConfig {
                field: "species_mix",
                message: e.to_string(),
            })?;

        let mut x = 0.0;
        loop {
            // Inverse-CDF exponential gap; rng.random() is in [0, 1).
            let u: f64 = rng.random();
            x += -(1.0 - u).ln() / eta;
            if x >= spec.length {
                break;
            }
            let y = rng.random_range(0.0..spec.width);
            let pick: f64 = rng.random();
            let si = cdf.iter().position(|&c| pick < c).unwrap_or(cdf.len() - 1);
            let s = &spec.species_mix[si];
            let area = areas[si].sample(&mut rng);
            plants.push(Plant {
                id: 0,
                x,
                y,
                kind: PlantKind::Weed,
                species: s.name.clone(),
                area_mm2: area,
                beta: s.beta,
                priority: s.priority,
            });
        }
    }

    plants.sort_by(plant_order);
    for (i, p) in plants.iter_mut().enumerate() {
        p.id = i as u64;
    }
    let (model, _warnings) = FieldModel::from_parts(spec.clone(), plants)?;
    Ok(model)
}

/// Probability that an axis reaches a target `delta_y` meters aside before
/// the next Poisson arrival forces it onward.
///
/// With the x-gap exponential at rate `eta`, this is
/// `P(dx/dy > gamma/theta) = exp(-eta * (gamma/theta) * delta_y)`.
pub fn reach_probability(delta_y: f64, gamma: f64, theta: f64, eta: f64) -> Result<f64> {
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
    if delta_y < 0.0 || gamma < 0.0 || eta < 0.0 {
        return Err(Error::Domain(format!(
            "delta_y, gamma, eta must be >= 0 (got {delta_y}, {gamma}, {eta})"
        )));
    }
    if theta <= 0.0 {
        return Err(Error::Domain(format!("theta must be > 0, got {theta}")));
    }
    Ok((-eta * (gamma / theta) * delta_y).exp())
}

/// Loads a field file, returning the model and any normalization warnings.
pub fn load_field(path: &Path) -> Result<(FieldModel, Vec<String>)> {
    let text = std::fs::read_to_string(path)?;
    FieldModel::from_json_str(&text, &path.display().to_string())
}

/// Saves a field file. `save` then `load` round-trips all fields.
pub fn save_field(model: &FieldModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json_string()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn base_spec(lambda: f64, seed: u64) -> FieldSpec {
        FieldSpec::uniform(lambda, 1.39, 100.0, seed)
    }

    #[test]
    fn zero_lambda_yields_crops_only() {
        let spec = FieldSpec {
            crop_spacing: 0.5,
            ..FieldSpec::uniform(0.0, 1.39, 10.0, 7)
        };
        let field = generate_field(&spec).unwrap();
        assert_eq!(field.weed_count(), 0);
        assert_eq!(field.crops().count(), 20);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = base_spec(8.2, 42);
        let a = generate_field(&spec).unwrap();
        let b = generate_field(&spec).unwrap();
        assert_eq!(a.plants(), b.plants());
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_field(&base_spec(8.2, 1)).unwrap();
        let b = generate_field(&base_spec(8.2, 2)).unwrap();
        assert_ne!(a.plants(), b.plants());
    }

    #[test]
    fn plants_sorted_by_x() {
        let field = generate_field(&base_spec(15.4, 3)).unwrap();
        for w in field.plants().windows(2) {
            assert!(w[0].x <= w[1].x);
        }
    }

    // Sample-mean oracle: aggregate x-gaps over many seeds and compare the
    // mean against 1/eta within 3 sigma of the sample-mean distribution.
    #[test]
    fn gap_mean_matches_arrival_rate() {
        let lambda = 3.1;
        let width = 1.39;
        let eta = lambda * width;
        let mut gaps: Vec<f64> = Vec::new();
        for seed in 0..1000 {
            let spec = FieldSpec::uniform(lambda, width, 100.0, seed);
            let field = generate_field(&spec).unwrap();
            let xs: Vec<f64> = field.weeds().map(|p| p.x).collect();
            let mut prev = 0.0;
            for x in xs {
                gaps.push(x - prev);
                prev = x;
            }
        }
        let n = gaps.len() as f64;
        let mean: f64 = gaps.iter().sum::<f64>() / n;
        let expected = 1.0 / eta;
        // Exponential std equals its mean; the sample mean is tighter by sqrt(n).
        let bound = 3.0 * expected / n.sqrt();
        assert!(
            (mean - expected).abs() < bound,
            "gap mean {mean} vs expected {expected} (bound {bound}, n {n})"
        );
    }

    // One-sample Kolmogorov-Smirnov test of generated gaps against
    // Exponential(eta) at significance 0.01.
    #[test]
    fn gap_distribution_is_exponential() {
        let lambda = 8.2;
        let width = 1.39;
        let eta = lambda * width;
        let mut gaps: Vec<f64> = Vec::new();
        let mut seed = 0;
        while gaps.len() < 10_000 {
            let field = generate_field(&FieldSpec::uniform(lambda, width, 100.0, seed)).unwrap();
            let mut prev = 0.0;
            for p in field.weeds() {
                gaps.push(p.x - prev);
                prev = p.x;
            }
            seed += 1;
        }
        gaps.truncate(10_000);
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        let mut d: f64 = 0.0;
        for (i, g) in gaps.iter().enumerate() {
            let cdf = 1.0 - (-eta * g).exp();
            let hi = (i as f64 + 1.0) / n - cdf;
            let lo = cdf - i as f64 / n;
            d = d.max(hi.max(lo));
        }
        // Asymptotic critical value at alpha = 0.01: c(alpha)/sqrt(n).
        let crit = 1.628 / n.sqrt();
        assert!(d < crit, "KS statistic {d} exceeds critical value {crit}");
    }

    #[test]
    fn reach_probability_trivials() {
        assert_eq!(reach_probability(0.0, 0.5, 5.0, 4.309).unwrap(), 1.0);
        assert_eq!(reach_probability(0.36, 0.0, 5.0, 4.309).unwrap(), 1.0);
        assert_eq!(reach_probability(0.2, 0.5, 5.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn reach_probability_rejects_bad_domain() {
        assert!(reach_probability(-0.1, 0.5, 5.0, 4.0).is_err());
        assert!(reach_probability(0.1, -0.5, 5.0, 4.0).is_err());
        assert!(reach_probability(0.1, 0.5, 0.0, 4.0).is_err());
        assert!(reach_probability(0.1, 0.5, 5.0, -4.0).is_err());
        assert!(reach_probability(f64::NAN, 0.5, 5.0, 4.0).is_err());
    }

    // Monte-Carlo oracle for the closed form, at the gantry's operating point.
    #[test]
    fn reach_probability_matches_monte_carlo() {
        let (dy, gamma, theta, eta) = (0.36, 0.5, 5.0, 4.309);
        let n = 1_000_000;
        let p = reach_probability(dy, gamma, theta, eta).unwrap();
        let freq = oracle::monte_carlo_reach(dy, gamma, theta, eta, n, 99).unwrap();
        let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (p - freq).abs() < bound,
            "analytic {p} vs monte-carlo {freq} (bound {bound})"
        );
    }

    #[test]
    fn save_load_round_trip() {
        let field = generate_field(&FieldSpec {
            crop_spacing: 0.2,
            ..base_spec(5.0, 11)
        })
        .unwrap();
        let text = field.to_json_string().unwrap();
        let (loaded, warnings) = FieldModel::from_json_str(&text, "round-trip").unwrap();
        assert!(warnings.is_empty());
        assert_eq!(field.plants(), loaded.plants());
        assert_eq!(field.spec(), loaded.spec());
    }

    #[test]
    fn y_at_width_is_rejected() {
        let spec = FieldSpec::uniform(0.0, 1.39, 10.0, 0);
        let plants = vec![Plant {
            id: 0,
            x: 1.0,
            y: 1.39,
            kind: PlantKind::Weed,
            species: "weed".to_string(),
            area_mm2: 100.0,
            beta: 1.0,
            priority: Priority::High,
        }];
        let err = FieldModel::from_parts(spec, plants).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidConfig {
                field: "plants",
                ..
            }
        ));
    }

    #[test]
    fn unsorted_input_is_resorted_with_warning() {
        let spec = FieldSpec::uniform(0.0, 1.39, 10.0, 0);
        let mk = |id, x| Plant {
            id,
            x,
            y: 0.5,
            kind: PlantKind::Weed,
            species: "weed".to_string(),
            area_mm2: 100.0,
            beta: 1.0,
            priority: Priority::High,
        };
        let (model, warnings) =
            FieldModel::from_parts(spec, vec![mk(0, 3.0), mk(1, 1.0), mk(2, 2.0)]).unwrap();
        assert_eq!(warnings.len(), 1);
        let xs: Vec<f64> = model.plants().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0]);
    }

    // Hand-written three-plant file, checked by hand: x-order 0.5, 1.2, 2.0.
    #[test]
    fn hand_written_file_parses_in_x_order() {
        let text = r#"{
            "spec": {
                "lambda": 1.0, "width": 1.39, "length": 3.0,
                "species_mix": [
                    {"name": "thistle", "fraction": 1.0, "beta": 1.0,
                     "priority": "high", "area_median_mm2": 500.0, "area_sigma": 0.4}
                ],
                "crop_spacing": 0.0, "seed": 0
            },
            "plants": [
                {"id": 7, "x_m": 2.0, "y_m": 0.10, "kind": "weed", "species": "thistle",
                 "area_mm2": 400.0, "beta": 1.0, "priority": "high"},
                {"id": 3, "x_m": 0.5, "y_m": 0.90, "kind": "weed", "species": "thistle",
                 "area_mm2": 350.0, "beta": 1.0, "priority": "high"},
                {"id": 5, "x_m": 1.2, "y_m": 1.30, "kind": "crop", "species": "beet",
                 "area_mm2": 1500.0, "beta": 0.0, "priority": "low"}
            ]
        }"#;
        let (model, _warnings) = FieldModel::from_json_str(text, "fixture").unwrap();
        assert_eq!(model.plants().len(), 3);
        let ids: Vec<u64> = model.plants().iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![3, 5, 7]);
        assert_eq!(model.weed_count(), 2);
    }

    #[test]
    fn malformed_json_names_the_origin() {
        let err = FieldModel::from_json_str("{\"spec\": 3}", "bad.json").unwrap_err();
        match err {
            Error::Parse { path, .. } => assert_eq!(path, "bad.json"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn near_duplicates_are_merged() {
        let spec = FieldSpec::uniform(0.0, 1.39, 10.0, 0);
        let mk = |id, x: f64, y: f64| Plant {
            id,
            x,
            y,
            kind: PlantKind::Weed,
            species: "weed".to_string(),
            area_mm2: 100.0,
            beta: 1.0,
            priority: Priority::High,
        };
        let (model, warnings) = FieldModel::from_parts(
            spec,
            vec![mk(0, 1.0, 0.5), mk(1, 1.0004, 0.5005), mk(2, 1.5, 0.5)],
        )
        .unwrap();
        assert_eq!(model.plants().len(), 2);
        assert!(warnings.iter().any(|w| w.contains("dedup")));
    }

    #[test]
    fn species_fractions_must_sum_to_one() {
        let mut spec = base_spec(3.0, 0);
        spec.species_mix[0].fraction = 0.7;
        let err = generate_field(&spec).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidConfig {
                field: "species_mix",
                ..
            }
        ));
    }

    proptest! {
        // Monotone non-increasing in delta_y, gamma, eta; non-decreasing in theta.
        #[test]
        fn reach_probability_monotone(
            dy in 0.0..2.0f64,
            dy2 in 0.0..2.0f64,
            gamma in 0.0..3.0f64,
            theta in 0.1..10.0f64,
            eta in 0.0..50.0f64,
        ) {
            let p = reach_probability(dy, gamma, theta, eta).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let (lo, hi) = if dy <= dy2 { (dy, dy2) } else { (dy2, dy) };
            let p_lo = reach_probability(lo, gamma, theta, eta).unwrap();
            let p_hi = reach_probability(hi, gamma, theta, eta).unwrap();
            prop_assert!(p_lo >= p_hi);
            let p_fast = reach_probability(dy, gamma, theta * 1.5, eta).unwrap();
            prop_assert!(p_fast >= p);
            let p_faster_robot = reach_probability(dy, gamma + 0.5, theta, eta).unwrap();
            prop_assert!(p_faster_robot <= p);
            let p_denser = reach_probability(dy, gamma, theta, eta + 1.0).unwrap();
            prop_assert!(p_denser <= p);
        }

        #[test]
        fn generated_weeds_lie_in_row(seed in 0u64..50, lambda in 0.5..30.0f64) {
            let spec = FieldSpec::uniform(lambda, 1.39, 20.0, seed);
            let field = generate_field(&spec).unwrap();
            for p in field.weeds() {
                prop_assert!(p.x >= 0.0 && p.x < 20.0);
                prop_assert!(p.y >= 0.0 && p.y < 1.39);
                prop_assert!(p.area_mm2 > 0.0);
            }
        }
    }
}
