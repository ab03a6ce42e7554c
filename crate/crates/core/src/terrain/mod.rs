//! Terrain element library: heightfield rocks, Voronoi rock fields, tiled
//! landscapes, floating islands, cave carving, and boulder meshes.
//!
//! Every element wraps a distance-style [`FieldProgram`] in meters with
//! solid regions negative, the convention all downstream meshing assumes.
//! The world is z-up: heightfield elements compare `p.z` against a height
//! sampled over (x, y).

pub mod boulder;
pub mod caves;
pub mod rocks;
pub mod tiles;

pub use boulder::{generate_boulder, BoulderError, BoulderParams, ExtrusionLevel};
pub use caves::{carve_caves, generate_cave_skeleton, CavePassage, CaveRuleWeights, CaveSystemSpec};
pub use rocks::{eroded_rocks, floating_island, voronoi_rocks};
pub use tiles::{noise_tile, thermal_erode, tile_landscape};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::fields::FieldProgram;

/// What kind of generator produced an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementTag {
    Ground,
    ErodedRocks,
    VoronoiRocks,
    TiledLandscape,
    FloatingIsland,
}

/// One solid piece of the world, described implicitly.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TerrainElement {
    pub tag: ElementTag,
    pub sdf: FieldProgram,
    /// Solid region bound for bounded elements; None for heightfields that
    /// extend indefinitely in (x, y).
    pub bounds: Option<(Point3<f64>, Point3<f64>)>,
}

impl TerrainElement {
    pub fn eval(&self, p: Point3<f64>) -> f64 {
        self.sdf.eval_scalar(p)
    }
}

/// Flat ground at the given height.
pub fn ground_plane(height: f64) -> TerrainElement {
    TerrainElement {
        tag: ElementTag::Ground,
        sdf: crate::fields::sdf::half_space(nalgebra::Vector3::z(), height),
        bounds: None,
    }
}

#[cfg(test)]
pub(crate) fn assert_field_continuous(
    element: &TerrainElement,
    lo: Point3<f64>,
    hi: Point3<f64>,
    lipschitz: f64,
) {
    use rand::Rng;
    let mut rng = crate::rng::stream(0x71e5);
    let mut eval = crate::fields::Evaluator::new(&element.sdf);
    let delta = 1e-3;
    for _ in 0..10_000 {
        let p = Point3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
        let dir = nalgebra::Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if dir.norm() < 1e-6 {
            continue;
        }
        let q = p + dir.normalize() * delta;
        let dv = (eval.eval_scalar(p) - eval.eval_scalar(q)).abs();
        assert!(
            dv <= lipschitz * delta,
            "field jumps by {dv} over {delta} m near {p:?} (allowed slope {lipschitz})"
        );
    }
}
