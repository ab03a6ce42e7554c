//! Ready-made parameter sets for the stock generators: corals of several
//! kinds, tree/bush/pine skeletons, and spiral shells.

use nalgebra::Vector3;

use super::diffgrowth::DifferentialGrowthParams;
use super::grayscott::ReactionDiffusionState;
use super::phasefield::PhaseFieldState;
use super::shell::SpiralSweepParams;
use super::{GrowthConfig, LevelSpec};

/// Leather coral: free-rim differential growth until the face budget.
pub fn leather_coral(seed: u64) -> DifferentialGrowthParams {
    DifferentialGrowthParams {
        attraction: 1.0,
        repulsion: 0.8,
        growth: 0.5,
        noise: 0.2,
        step_size: 0.08,
        split_length: 0.25,
        max_faces: 1000,
        max_iterations: 400,
        boundary_factor: 1.0,
        seed,
    }
}

/// Table coral: like leather, but the rim is damped so the surface stays a
/// flat shelf, and it stops earlier.
pub fn table_coral(seed: u64) -> DifferentialGrowthParams {
    DifferentialGrowthParams {
        max_faces: 400,
        boundary_factor: 0.25,
        ..leather_coral(seed)
    }
}

/// Rate pair on the pattern-forming line f = √k/2 − k.
fn gray_scott_rates(k: f64, offset: f64) -> (f64, f64) {
    (k.sqrt() / 2.0 - k - offset, k)
}

/// Brain coral: Gray-Scott at k = 0.0625 on the folding line.
pub fn brain_coral(nx: usize, ny: usize) -> ReactionDiffusionState {
    let (f, k) = gray_scott_rates(0.0625, 0.0);
    ReactionDiffusionState::on_grid_torus(nx, ny, 0.8, 0.4, f, k)
}

/// Honeycomb coral: the same k, nudged just off the folding line.
pub fn honeycomb_coral(nx: usize, ny: usize) -> ReactionDiffusionState {
    let (f, k) = gray_scott_rates(0.0625, 0.001);
    ReactionDiffusionState::on_grid_torus(nx, ny, 0.8, 0.4, f, k)
}

/// Cauliflower coral: supercooled phase-field solidification.
pub fn cauliflower_coral(dims: [usize; 3]) -> PhaseFieldState {
    PhaseFieldState::new(dims, 0.03, 0.9, 10.0, 3.0e-4, 0.01, 1.6, 1.0)
}

/// Attraction-point settings for space-colonization corals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColonizationPreset {
    pub cube_size: f64,
    pub point_count: usize,
    pub influence_radius: f64,
    pub kill_radius: f64,
    pub step_length: f64,
    pub steps: u32,
}

/// Bush coral: dense attractor cloud, short steps — a compact crown.
pub fn bush_coral() -> ColonizationPreset {
    ColonizationPreset {
        cube_size: 2.0,
        point_count: 600,
        influence_radius: 0.9,
        kill_radius: 0.18,
        step_length: 0.09,
        steps: 80,
    }
}

/// Twig coral: sparser attractors and longer reach — open, spindly arms.
pub fn twig_coral() -> ColonizationPreset {
    ColonizationPreset {
        cube_size: 2.5,
        point_count: 180,
        influence_radius: 1.6,
        kill_radius: 0.22,
        step_length: 0.14,
        steps: 120,
    }
}

/// Broadleaf tree: strong trunk momentum, wide mid-height branching.
pub fn tree_config(seed: u64) -> GrowthConfig {
    GrowthConfig {
        momentum: 0.7,
        randomness: 0.25,
        pull: Vector3::z(),
        pull_weight: 0.15,
        step_length: 0.35,
        levels: vec![
            LevelSpec { steps: 14, children: 4, child_start: 0.35 },
            LevelSpec { steps: 10, children: 3, child_start: 0.3 },
            LevelSpec { steps: 7, children: 0, child_start: 0.5 },
        ],
        seed,
    }
}

/// Bush: weak momentum, forks start near the ground.
pub fn bush_config(seed: u64) -> GrowthConfig {
    GrowthConfig {
        momentum: 0.5,
        randomness: 0.4,
        pull: Vector3::z(),
        pull_weight: 0.05,
        step_length: 0.2,
        levels: vec![
            LevelSpec { steps: 8, children: 5, child_start: 0.1 },
            LevelSpec { steps: 6, children: 3, child_start: 0.2 },
            LevelSpec { steps: 5, children: 0, child_start: 0.5 },
        ],
        seed,
    }
}

/// Pine: a stiff straight leader with many short side branches.
pub fn pine_config(seed: u64) -> GrowthConfig {
    GrowthConfig {
        momentum: 0.85,
        randomness: 0.1,
        pull: Vector3::z(),
        pull_weight: 0.3,
        step_length: 0.3,
        levels: vec![
            LevelSpec { steps: 20, children: 6, child_start: 0.15 },
            LevelSpec { steps: 8, children: 2, child_start: 0.4 },
            LevelSpec { steps: 5, children: 0, child_start: 0.5 },
        ],
        seed,
    }
}

/// Regular `n`-gon of the given radius, centered at the section origin.
pub fn regular_section(radius: f64, n: usize) -> Vec<[f64; 2]> {
    assert!(n >= 3);
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

/// Circle section whose center sits `offset` away from the spiral axis.
fn offset_section(offset: f64, radius: f64, n: usize) -> Vec<[f64; 2]> {
    regular_section(radius, n).into_iter().map(|[u, v]| [u + offset, v]).collect()
}

/// Conch: moderate spire, whorls riding outward as they descend.
pub fn conch_shell() -> (Vec<[f64; 2]>, SpiralSweepParams) {
    (
        offset_section(1.0, 0.8, 14),
        SpiralSweepParams {
            rotation: std::f64::consts::TAU / 10.0,
            scale_ratio: 0.94,
            axial: 0.3,
            lateral: 0.02,
            loops: 40,
        },
    )
}

/// Auger: a long, tightly wound drill of a shell.
pub fn auger_shell() -> (Vec<[f64; 2]>, SpiralSweepParams) {
    (
        offset_section(0.7, 0.55, 12),
        SpiralSweepParams {
            rotation: std::f64::consts::TAU / 8.0,
            scale_ratio: 0.965,
            axial: 0.35,
            lateral: 0.0,
            loops: 64,
        },
    )
}

/// Volute: bulbous body whorl, shallow spire.
pub fn volute_shell() -> (Vec<[f64; 2]>, SpiralSweepParams) {
    (
        offset_section(1.0, 1.1, 16),
        SpiralSweepParams {
            rotation: std::f64::consts::TAU / 14.0,
            scale_ratio: 0.93,
            axial: 0.18,
            lateral: 0.03,
            loops: 42,
        },
    )
}

/// Nautilus: fast shrink and almost no rise — a planar spiral.
pub fn nautilus_shell() -> (Vec<[f64; 2]>, SpiralSweepParams) {
    (
        offset_section(1.2, 1.0, 16),
        SpiralSweepParams {
            rotation: std::f64::consts::TAU / 12.0,
            scale_ratio: 0.918,
            axial: 0.02,
            lateral: 0.0,
            loops: 36,
        },
    )
}
