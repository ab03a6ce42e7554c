//! Recursive-path skeleton growth: branches advance by blending momentum,
//! a seeded random direction, and an optional pull bias.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use super::{GrowthConfig, Skeleton};
use crate::rng::{stream, substream_index};

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    let d: [f64; 3] = UnitSphere.sample(rng);
    Vector3::new(d[0], d[1], d[2])
}

/// Grow a skeleton from `origin` along `initial_direction`.
///
/// Each step blends the previous direction, a random unit vector, and the
/// configured pull: `d' = normalize(w·d + w_r·u + w_p·p̂)`. The branching
/// schedule in `config.levels` decides how long branches are and where
/// children sprout; every branch draws from its own `(seed, branch)` stream.
pub fn recursive_paths(
    config: &GrowthConfig,
    origin: Point3<f64>,
    initial_direction: Vector3<f64>,
) -> Skeleton {
    config.validate().expect("invalid growth config");
    assert!(initial_direction.norm() > 1e-9, "initial direction must be nonzero");

    let pull = if config.pull.norm() > 1e-12 && config.pull_weight > 0.0 {
        Some(config.pull.normalize() * config.pull_weight)
    } else {
        None
    };

    let mut skeleton = Skeleton::default();
    let mut branch_counter = 0u64;
    // (base node, level, initial direction, branch id)
    let root = skeleton.push_root(origin, 0);
    let mut queue = vec![(root, 0u32, initial_direction.normalize(), branch_counter)];
    branch_counter += 1;

    while let Some((base, level, mut dir, branch)) = queue.pop() {
        let spec = config.levels[level as usize];
        let mut rng = stream(substream_index(config.seed, branch));

        // Decide child step indices up front so branch RNG usage stays
        // in lockstep regardless of schedule.
        let mut child_steps = Vec::new();
        if (level as usize + 1) < config.levels.len() && spec.children > 0 {
            let first = (spec.child_start * spec.steps as f64).ceil() as u32;
            let first = first.min(spec.steps);
            let span = spec.steps - first;
            for c in 0..spec.children {
                let at = if spec.children == 1 {
                    first
                } else {
                    first + (span * c) / (spec.children - 1).max(1)
                };
                child_steps.push(at.clamp(1, spec.steps));
            }
        }

        let mut node = base;
        for step in 1..=spec.steps {
            let mut blend = dir * config.momentum;
            if config.randomness > 0.0 {
                blend += random_unit(&mut rng) * config.randomness;
            }
            if let Some(p) = pull {
                blend += p;
            }
            if blend.norm() > 1e-12 {
                dir = blend.normalize();
            }
            let pos = skeleton.nodes[node as usize].position + dir * config.step_length;
            node = skeleton.push_child(node, pos, level);

            for _ in child_steps.iter().filter(|s| **s == step) {
                let tilt = random_unit(&mut rng);
                let mut side = tilt - dir * tilt.dot(&dir);
                if side.norm() < 1e-9 {
                    side = dir.cross(&Vector3::z());
                    if side.norm() < 1e-9 {
                        side = dir.cross(&Vector3::x());
                    }
                }
                let side = side.normalize();
                let child_dir = (dir * 0.5 + side).normalize();
                queue.push((node, level + 1, child_dir, branch_counter));
                branch_counter += 1;
            }
        }
    }
    skeleton
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::LevelSpec;

    fn straight_config(seed: u64) -> GrowthConfig {
        GrowthConfig {
            momentum: 1.0,
            randomness: 0.0,
            pull: Vector3::zeros(),
            pull_weight: 0.0,
            step_length: 0.5,
            levels: vec![LevelSpec { steps: 12, children: 0, child_start: 0.5 }],
            seed,
        }
    }

    #[test]
    fn pure_momentum_grows_a_collinear_chain() {
        let s = recursive_paths(&straight_config(1), Point3::origin(), Vector3::x());
        assert_eq!(s.nodes.len(), 13);
        for (i, n) in s.nodes.iter().enumerate() {
            let expected = Point3::new(0.5 * i as f64, 0.0, 0.0);
            assert!((n.position - expected).norm() < 1e-12, "node {i} strayed");
        }
    }

    #[test]
    fn dominant_pull_aligns_growth() {
        let config = GrowthConfig {
            momentum: 0.3,
            randomness: 0.2,
            pull: Vector3::z(),
            pull_weight: 5.0,
            step_length: 0.4,
            levels: vec![LevelSpec { steps: 30, children: 0, child_start: 0.0 }],
            seed: 5,
        };
        let s = recursive_paths(&config, Point3::origin(), Vector3::x());
        let mut mean_dot = 0.0;
        for pair in s.nodes.windows(2) {
            let d = (pair[1].position - pair[0].position).normalize();
            mean_dot += d.z;
        }
        mean_dot /= (s.nodes.len() - 1) as f64;
        assert!(mean_dot > 0.9, "mean direction dot z = {mean_dot}");
    }

    #[test]
    fn same_seed_repeats_and_seeds_differ() {
        let config = GrowthConfig {
            momentum: 0.6,
            randomness: 0.5,
            pull: Vector3::z(),
            pull_weight: 0.3,
            step_length: 0.5,
            levels: vec![
                LevelSpec { steps: 10, children: 3, child_start: 0.3 },
                LevelSpec { steps: 6, children: 2, child_start: 0.4 },
                LevelSpec { steps: 4, children: 0, child_start: 0.0 },
            ],
            seed: 9,
        };
        let a = recursive_paths(&config, Point3::origin(), Vector3::z());
        let b = recursive_paths(&config, Point3::origin(), Vector3::z());
        assert_eq!(a, b);
        let other = recursive_paths(
            &GrowthConfig { seed: 10, ..config.clone() },
            Point3::origin(),
            Vector3::z(),
        );
        assert_ne!(a, other);
        assert!(a.validate().is_ok());
        assert!(a.nodes.iter().any(|n| n.level == 2), "schedule never reached level 2");
    }

    #[test]
    fn branch_count_follows_the_schedule() {
        let config = GrowthConfig {
            momentum: 0.6,
            randomness: 0.4,
            pull: Vector3::zeros(),
            pull_weight: 0.0,
            step_length: 0.5,
            levels: vec![
                LevelSpec { steps: 8, children: 4, child_start: 0.25 },
                LevelSpec { steps: 5, children: 0, child_start: 0.0 },
            ],
            seed: 21,
        };
        let s = recursive_paths(&config, Point3::origin(), Vector3::z());
        let level1_starts = s
            .nodes
            .iter()
            .filter(|n| {
                n.level == 1
                    && n.parent.is_some_and(|p| s.nodes[p as usize].level == 0)
            })
            .count();
        assert_eq!(level1_starts, 4);
        assert_eq!(s.nodes.len(), 1 + 8 + 4 * 5);
    }
}
