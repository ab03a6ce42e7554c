//! Space colonization: attraction points pull the nearest skeleton node,
//! nodes grow toward the mean pull direction, and satisfied points are
//! removed.

use nalgebra::{Point3, Vector3};
use rand::Rng;

use super::Skeleton;
use crate::rng::stream;

/// Result of a colonization run: the grown skeleton plus the attraction
/// points that were never reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ColonizationOutcome {
    pub skeleton: Skeleton,
    pub remaining: Vec<Point3<f64>>,
}

/// Uniform attraction-point cloud in an axis-aligned cube.
pub fn scatter_cube(center: Point3<f64>, size: f64, count: usize, seed: u64) -> Vec<Point3<f64>> {
    assert!(size > 0.0, "cube size must be positive");
    let mut rng = stream(seed);
    let half = size / 2.0;
    (0..count)
        .map(|_| {
            Point3::new(
                center.x + rng.random_range(-half..half),
                center.y + rng.random_range(-half..half),
                center.z + rng.random_range(-half..half),
            )
        })
        .collect()
}

/// Run exactly `steps` colonization iterations.
///
/// Per iteration: every live point within `influence_radius` of its nearest
/// node votes for that node with a unit direction; each voted node spawns a
/// child one `step_length` toward the normalized vote mean; then every point
/// within `kill_radius` of any node is removed. Ties in the nearest-node
/// search go to the lower node index, so the run is deterministic.
pub fn space_colonization(
    skeleton: &Skeleton,
    points: &[Point3<f64>],
    influence_radius: f64,
    kill_radius: f64,
    step_length: f64,
    steps: u32,
) -> ColonizationOutcome {
    assert!(
        kill_radius > 0.0 && kill_radius < influence_radius,
        "need 0 < kill radius < influence radius"
    );
    assert!(step_length > 0.0, "step length must be positive");

    let mut skeleton = skeleton.clone();
    let mut live: Vec<Point3<f64>> = points.to_vec();
    live.retain(|p| {
        !skeleton.nodes.iter().any(|n| (p - n.position).norm() <= kill_radius)
    });

    for _ in 0..steps {
        if live.is_empty() {
            break;
        }
        let mut votes: Vec<Vector3<f64>> = vec![Vector3::zeros(); skeleton.nodes.len()];
        let mut counts = vec![0u32; skeleton.nodes.len()];
        for p in &live {
            let mut best: Option<(usize, f64)> = None;
            for (i, n) in skeleton.nodes.iter().enumerate() {
                let d = (p - n.position).norm();
                if d <= influence_radius && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            if let Some((i, d)) = best {
                if d > 1e-12 {
                    votes[i] += (p - skeleton.nodes[i].position) / d;
                    counts[i] += 1;
                }
            }
        }

        let grown_from = skeleton.nodes.len();
        for i in 0..grown_from {
            if counts[i] == 0 {
                continue;
            }
            let mean = votes[i] / counts[i] as f64;
            if mean.norm() < 1e-9 {
                continue;
            }
            let dir = mean.normalize();
            let pos = skeleton.nodes[i].position + dir * step_length;
            let level = skeleton.nodes[i].level;
            skeleton.push_child(i as u32, pos, level);
        }

        live.retain(|p| {
            !skeleton.nodes[grown_from..]
                .iter()
                .any(|n| (p - n.position).norm() <= kill_radius)
        });
    }

    ColonizationOutcome { skeleton, remaining: live }
}
