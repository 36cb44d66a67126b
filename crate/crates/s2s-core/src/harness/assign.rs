//! Sensor assignment policies.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::sim::{preset, sensor_presets, SensorModel};

/// How vehicles are assigned to sensor presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Each vehicle uses the sensor named in the map (or declared on its
    /// scene actor when the map omits it).
    Fixed {
        #[serde(default)]
        map: BTreeMap<String, String>,
    },
    /// Every vehicle uses the same preset.
    Uniform { sensor: String },
    /// Each vehicle draws uniformly from the three presets; deterministic
    /// for a seed and independent of vehicle ordering (ids are sorted before
    /// drawing).
    Random { seed: u64 },
}

/// Maps every vehicle id to a sensor preset.
pub fn assign_sensors(
    ids: &[String],
    policy: &AssignmentPolicy,
) -> Result<BTreeMap<String, SensorModel>, HarnessError> {
    let lookup = |name: &str| {
        preset(name).ok_or_else(|| HarnessError::UnknownSensor {
            name: name.to_string(),
        })
    };
    let mut assignment = BTreeMap::new();
    match policy {
        AssignmentPolicy::Fixed { map } => {
            for id in ids {
                let name = map
                    .get(id)
                    .ok_or_else(|| HarnessError::MissingAssignment { cav: id.clone() })?;
                assignment.insert(id.clone(), lookup(name)?);
            }
        }
        AssignmentPolicy::Uniform { sensor } => {
            let model = lookup(sensor)?;
            for id in ids {
                assignment.insert(id.clone(), model.clone());
            }
        }
        AssignmentPolicy::Random { seed } => {
            let presets = sensor_presets();
            let mut sorted: Vec<&String> = ids.iter().collect();
            sorted.sort();
            sorted.dedup();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for id in sorted {
                let pick = rng.random_range(0..presets.len());
                assignment.insert(id.clone(), presets[pick].clone());
            }
        }
    }
    Ok(assignment)
}
