//! Organic growth: skeleton growers (recursive paths, space colonization),
//! tube skinning, differential growth, reaction-diffusion and phase-field
//! simulations, field projection between meshes, and spiral shell sweeps.
//!
//! Everything here is deterministic in its seed: random choices come from
//! per-entity hash streams, never from shared mutable RNG state, so results
//! are independent of iteration or traversal order.

pub mod colonize;
pub mod diffgrowth;
pub mod grayscott;
pub mod paths;
pub mod phasefield;
pub mod presets;
pub mod shell;
pub mod shrinkwrap;
pub mod skin;

pub use colonize::{scatter_cube, space_colonization, ColonizationOutcome};
pub use diffgrowth::{differential_growth, seed_disc, DifferentialGrowthParams};
pub use grayscott::{gray_scott, ReactionDiffusionState};
pub use paths::recursive_paths;
pub use phasefield::{dendritic_growth, PhaseFieldState};
pub use shell::{spiral_sweep, SpiralSweepParams};
pub use shrinkwrap::shrinkwrap_project;
pub use skin::{assign_radii, skin_skeleton, RadiusRule};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("invalid growth parameters: {0}")]
    InvalidParams(String),
    #[error("simulation diverged at step {step}: {what}")]
    Diverged { step: u32, what: String },
}

/// One node of a skeleton forest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub position: Point3<f64>,
    pub radius: f64,
    /// Index of the parent node; always smaller than this node's own index.
    pub parent: Option<u32>,
    /// Branching level: 0 for trunks, +1 per fork generation.
    pub level: u32,
}

/// Directed tree-graph skeleton (a forest: several roots allowed).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub nodes: Vec<SkeletonNode>,
    pub roots: Vec<u32>,
}

impl Skeleton {
    pub fn push_root(&mut self, position: Point3<f64>, level: u32) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(SkeletonNode { position, radius: 1.0, parent: None, level });
        self.roots.push(id);
        id
    }

    pub fn push_child(&mut self, parent: u32, position: Point3<f64>, level: u32) -> u32 {
        let id = self.nodes.len() as u32;
        assert!(parent < id, "parent must already exist");
        self.nodes.push(SkeletonNode { position, radius: 1.0, parent: Some(parent), level });
        id
    }

    /// Child lists per node, in index order.
    pub fn children(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                out[p as usize].push(i as u32);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.position.coords.iter().all(|v| v.is_finite()) {
                return Err(format!("node {i} has a non-finite position"));
            }
            if !(n.radius > 0.0) || !n.radius.is_finite() {
                return Err(format!("node {i} has radius {}", n.radius));
            }
            match n.parent {
                Some(p) if p as usize >= i => {
                    return Err(format!("node {i} has parent {p} >= itself"));
                }
                None if !self.roots.contains(&(i as u32)) => {
                    return Err(format!("parentless node {i} missing from roots"));
                }
                _ => {}
            }
        }
        for r in &self.roots {
            match self.nodes.get(*r as usize) {
                Some(n) if n.parent.is_none() => {}
                _ => return Err(format!("root list entry {r} is not a parentless node")),
            }
        }
        Ok(())
    }
}

/// How a recursive-path skeleton advances and branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Weight of the previous step direction.
    pub momentum: f64,
    /// Weight of the per-step random unit vector.
    pub randomness: f64,
    /// Optional bias direction (zero disables the pull term).
    pub pull: Vector3<f64>,
    pub pull_weight: f64,
    /// Distance per step, meters.
    pub step_length: f64,
    /// Per-level shape: trunk first, then each fork generation.
    pub levels: Vec<LevelSpec>,
    pub seed: u64,
}

/// Branch shape at one level of the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    /// Steps (nodes beyond the base) a branch of this level makes.
    pub steps: u32,
    /// Children spawned onto the next level, spread along the branch.
    pub children: u32,
    /// Fraction of the branch to skip before the first child.
    pub child_start: f64,
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, w) in
            [("momentum", self.momentum), ("randomness", self.randomness), ("pull", self.pull_weight)]
        {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(format!("{name} weight must be >= 0, got {w}"));
            }
        }
        if !(self.step_length > 0.0) || !self.step_length.is_finite() {
            return Err(format!("step length must be positive, got {}", self.step_length));
        }
        if self.levels.is_empty() {
            return Err("at least one level is required".into());
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.steps == 0 {
                return Err(format!("level {i} has zero steps"));
            }
            if !(0.0..=1.0).contains(&l.child_start) {
                return Err(format!("level {i} child_start out of [0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skeleton_validation_catches_broken_forests() {
        let mut s = Skeleton::default();
        let r = s.push_root(Point3::origin(), 0);
        s.push_child(r, Point3::new(0.0, 0.0, 1.0), 0);
        assert!(s.validate().is_ok());

        let mut broken = s.clone();
        broken.nodes[1].radius = 0.0;
        assert!(broken.validate().is_err());

        let mut broken = s.clone();
        broken.nodes[1].parent = None;
        assert!(broken.validate().is_err());

        let mut broken = s;
        broken.roots.push(1);
        assert!(broken.validate().is_err());
    }
}
