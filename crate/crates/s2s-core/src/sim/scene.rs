//! Scenes: a ground plane at z = 0, yaw-rotated boxes, and the actors
//! (connected vehicles) among them.
//!
//! Scenes are described by a JSON file:
//!
//! ```json
//! {
//!   "boxes": [
//!     { "center": [10.0, 2.0, 0.75], "size": [4.5, 1.9, 1.5], "yaw": 0.0, "label": "Car" }
//!   ],
//!   "actors": [
//!     { "id": "cav0", "box": 0, "sensor": "HDL64" }
//!   ]
//! }
//! ```
//!
//! The ground plane is implicit. An actor references the box it embodies by
//! index; its optional `sensor` names a preset used by the fixed assignment
//! policy.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ray::Pose;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scene parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// A yaw-rotated box with a class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    /// Box center, meters.
    pub center: [f64; 3],
    /// Full edge lengths (length, width, height), meters.
    pub size: [f64; 3],
    /// Rotation about +z, radians.
    #[serde(default)]
    pub yaw: f64,
    pub label: String,
}

/// A connected vehicle: the box it embodies plus an optional sensor preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    /// Index into [`Scene::boxes`].
    #[serde(rename = "box")]
    pub box_index: usize,
    /// Sensor preset name, used by the fixed assignment policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
}

/// Ground plane at z = 0 plus boxes and actors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub boxes: Vec<SceneBox>,
    #[serde(default)]
    pub actors: Vec<Actor>,
}

impl Scene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| SceneError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (i, b) in self.boxes.iter().enumerate() {
            if !b.size.iter().all(|s| s.is_finite() && *s > 0.0) {
                return Err(SceneError::Invalid(format!(
                    "box {i} has non-positive size {:?}",
                    b.size
                )));
            }
            if !b.center.iter().all(|c| c.is_finite()) || !b.yaw.is_finite() {
                return Err(SceneError::Invalid(format!("box {i} has non-finite pose")));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for actor in &self.actors {
            if actor.box_index >= self.boxes.len() {
                return Err(SceneError::Invalid(format!(
                    "actor {:?} references box {} of {}",
                    actor.id,
                    actor.box_index,
                    self.boxes.len()
                )));
            }
            if !ids.insert(&actor.id) {
                return Err(SceneError::Invalid(format!(
                    "duplicate actor id {:?}",
                    actor.id
                )));
            }
        }
        Ok(())
    }

    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn actor_box(&self, actor: &Actor) -> &SceneBox {
        &self.boxes[actor.box_index]
    }

    /// Roof-center pose of an actor's box: where its sensor mount attaches.
    pub fn roof_pose(&self, actor: &Actor) -> Pose {
        let b = self.actor_box(actor);
        Pose::new(
            b.center[0],
            b.center[1],
            b.center[2] + b.size[2] / 2.0,
            b.yaw,
        )
    }

    /// Ground-level vehicle frame of an actor: x/y/yaw of its box, z = 0.
    /// Grids and evaluation ranges are expressed in the ego's vehicle frame.
    pub fn vehicle_frame(&self, actor: &Actor) -> Pose {
        let b = self.actor_box(actor);
        Pose::new(b.center[0], b.center[1], 0.0, b.yaw)
    }

    /// The scene as seen by one actor: every box except its own body.
    pub fn without_actor_box(&self, actor: &Actor) -> Scene {
        let mut scene = self.clone();
        scene.boxes.remove(actor.box_index);
        for other in scene.actors.iter_mut() {
            if other.box_index > actor.box_index {
                other.box_index -= 1;
            }
        }
        scene.actors.retain(|a| a.id != actor.id);
        scene
    }
}

/// Parses a scene file; alias for [`Scene::load`] matching the pipeline
/// vocabulary.
pub fn build_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    Scene::load(path)
}
