//! Skeleton skinning: sweep rings along every root→leaf chain and bridge
//! them into closed tubes.
//!
//! Chains through single-child nodes share their rings, so a straight run
//! of edges becomes one welded tube. At a fork, the first child continues
//! the parent's tube; remaining children start fresh tubes whose base rings
//! sit at the fork node and interpenetrate the parent geometry. Every tube
//! is capped at both ends, so the merged mesh is a union of closed
//! manifolds and every edge borders exactly two faces.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Skeleton;
use crate::mesh::Mesh;

/// Exponential radius profile: `radius = leaf_radius · baseᵈ` where `d` is
/// the node's longest step count down to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusRule {
    pub leaf_radius: f64,
    pub base: f64,
}

/// Write rule radii onto the skeleton nodes.
pub fn assign_radii(skeleton: &mut Skeleton, rule: &RadiusRule) {
    assert!(rule.leaf_radius > 0.0 && rule.base > 0.0, "radius rule must be positive");
    let children = skeleton.children();
    // Nodes are parent-before-child, so a reverse sweep sees every child
    // before its parent.
    let mut depth = vec![0u32; skeleton.nodes.len()];
    for i in (0..skeleton.nodes.len()).rev() {
        depth[i] = children[i].iter().map(|c| depth[*c as usize] + 1).max().unwrap_or(0);
    }
    for (node, d) in skeleton.nodes.iter_mut().zip(&depth) {
        node.radius = rule.leaf_radius * rule.base.powi(*d as i32);
    }
}

/// Ring orientation frame perpendicular to `dir`, transported from the
/// previous frame to avoid twist along a chain.
fn frame(dir: Vector3<f64>, prev: Option<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let mut u = match prev {
        Some(p) => p - dir * p.dot(&dir),
        None => Vector3::z().cross(&dir),
    };
    if u.norm() < 1e-9 {
        u = Vector3::x().cross(&dir);
    }
    if u.norm() < 1e-9 {
        u = Vector3::y().cross(&dir);
    }
    let u = u.normalize();
    (u, dir.cross(&u).normalize())
}

/// Sweep the skeleton into tubes. Radii are assigned from `rule` first.
/// Zero-length edges are skipped and reported in the warning list.
pub fn skin_skeleton(
    skeleton: &mut Skeleton,
    rule: &RadiusRule,
    sides: u32,
) -> (Mesh, Vec<String>) {
    assert!(sides >= 3, "a tube needs at least 3 sides");
    assign_radii(skeleton, rule);

    let children = skeleton.children();
    let mut warnings = Vec::new();
    let mut mesh = Mesh::default();

    // Chains: start at every root and at every fork's non-first children.
    let mut starts: Vec<(u32, u32)> = skeleton.roots.iter().map(|r| (*r, *r)).collect();
    for (i, kids) in children.iter().enumerate() {
        for k in kids.iter().skip(1) {
            starts.push((i as u32, *k));
        }
    }
    starts.sort_unstable();

    for (base, first) in starts {
        // Collect the chain node list: base, then follow first children.
        let mut chain = vec![base];
        if first != base {
            chain.push(first);
        }
        loop {
            let tail = *chain.last().unwrap() as usize;
            match children[tail].first() {
                Some(next) => chain.push(*next),
                None => break,
            }
        }
        // Collapse zero-length edges so ring directions stay well defined.
        let mut deduped: Vec<u32> = vec![chain[0]];
        for id in &chain[1..] {
            let prev = skeleton.nodes[*deduped.last().unwrap() as usize].position;
            let here = skeleton.nodes[*id as usize].position;
            if (here - prev).norm() < 1e-12 {
                warnings.push(format!(
                    "zero-length edge into node {id} skipped while skinning"
                ));
            } else {
                deduped.push(*id);
            }
        }
        let chain = deduped;
        if chain.len() < 2 {
            continue;
        }

        // Per-ring directions: average of adjacent edge directions.
        let pos = |i: usize| skeleton.nodes[chain[i] as usize].position;
        let edge_dirs: Vec<Vector3<f64>> =
            (0..chain.len() - 1).map(|w| (pos(w + 1) - pos(w)).normalize()).collect();

        let ring_dir = |i: usize| -> Vector3<f64> {
            if i == 0 {
                edge_dirs[0]
            } else if i == chain.len() - 1 {
                edge_dirs[i - 1]
            } else {
                let s = edge_dirs[i - 1] + edge_dirs[i];
                if s.norm() < 1e-9 {
                    edge_dirs[i]
                } else {
                    s.normalize()
                }
            }
        };

        // Rings.
        let ring_base = mesh.positions.len() as u32;
        let mut prev_u = None;
        for (i, id) in chain.iter().enumerate() {
            let node = skeleton.nodes[*id as usize];
            let (u, v) = frame(ring_dir(i), prev_u);
            prev_u = Some(u);
            for s in 0..sides {
                let a = std::f64::consts::TAU * s as f64 / sides as f64;
                mesh.positions.push(node.position + (u * a.cos() + v * a.sin()) * node.radius);
            }
        }

        // Bridge consecutive rings.
        for i in 0..chain.len() - 1 {
            let r0 = ring_base + (i as u32) * sides;
            let r1 = r0 + sides;
            for s in 0..sides {
                let t = (s + 1) % sides;
                mesh.faces.push([r0 + s, r0 + t, r1 + t]);
                mesh.faces.push([r0 + s, r1 + t, r1 + s]);
            }
        }

        // End caps: apex fans at the base and tip.
        let base_apex = mesh.positions.len() as u32;
        mesh.positions.push(pos(0));
        let tip_apex = mesh.positions.len() as u32;
        mesh.positions.push(pos(chain.len() - 1));
        let last_ring = ring_base + (chain.len() as u32 - 1) * sides;
        for s in 0..sides {
            let t = (s + 1) % sides;
            mesh.faces.push([ring_base + t, ring_base + s, base_apex]);
            mesh.faces.push([last_ring + s, last_ring + t, tip_apex]);
        }
    }

    mesh.face_instance = vec![0; mesh.faces.len()];
    (mesh, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use rand::Rng;

    fn two_node_skeleton() -> Skeleton {
        let mut s = Skeleton::default();
        let r = s.push_root(Point3::origin(), 0);
        s.push_child(r, Point3::new(0.0, 0.0, 2.0), 0);
        s
    }

    #[test]
    fn two_node_skeleton_is_a_capped_cylinder() {
        let mut s = two_node_skeleton();
        let (mesh, warnings) =
            skin_skeleton(&mut s, &RadiusRule { leaf_radius: 0.3, base: 1.5 }, 8);
        assert!(warnings.is_empty());
        assert_eq!(mesh.positions.len(), 8 * 2 + 2);
        assert!(mesh.validate().is_ok());
        assert!(mesh.is_closed_manifold());
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn base_one_gives_constant_radius() {
        let mut s = two_node_skeleton();
        let next = s.nodes.len() as u32 - 1;
        s.push_child(next, Point3::new(0.0, 0.5, 3.5), 0);
        assign_radii(&mut s, &RadiusRule { leaf_radius: 0.25, base: 1.0 });
        for n in &s.nodes {
            assert_eq!(n.radius, 0.25);
        }
    }

    fn random_forest(seed: u64, n: usize) -> Skeleton {
        let mut rng = crate::rng::stream(seed);
        let mut s = Skeleton::default();
        s.push_root(Point3::origin(), 0);
        for i in 1..n {
            let parent = rng.random_range(0..i) as u32;
            let base = s.nodes[parent as usize].position;
            let offset = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.2..1.2),
            );
            let level = s.nodes[parent as usize].level + 1;
            s.push_child(parent, base + offset, level);
        }
        s
    }

    #[test]
    fn radii_shrink_from_root_to_leaf() {
        let rule = RadiusRule { leaf_radius: 0.1, base: 1.4 };
        for seed in 0..20u64 {
            let mut s = random_forest(seed, 40);
            assign_radii(&mut s, &rule);

            // Oracle: recursive longest-path-to-leaf evaluation.
            let children = s.children();
            fn depth_of(i: usize, children: &[Vec<u32>]) -> u32 {
                children[i].iter().map(|c| depth_of(*c as usize, children) + 1).max().unwrap_or(0)
            }
            for (i, n) in s.nodes.iter().enumerate() {
                let expected = rule.leaf_radius * rule.base.powi(depth_of(i, &children) as i32);
                assert_eq!(n.radius, expected, "node {i}");
                if let Some(p) = n.parent {
                    assert!(
                        s.nodes[p as usize].radius >= n.radius,
                        "radius grew toward the leaf at node {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn hundred_random_skeletons_skin_to_manifolds() {
        let rule = RadiusRule { leaf_radius: 0.08, base: 1.3 };
        for seed in 0..100u64 {
            let mut s = random_forest(seed, 25);
            let (mesh, warnings) = skin_skeleton(&mut s, &rule, 6);
            assert!(warnings.is_empty(), "seed {seed}: {warnings:?}");
            assert!(mesh.validate().is_ok(), "seed {seed}");
            assert!(mesh.is_closed_manifold(), "seed {seed} produced an open mesh");
        }
    }

    #[test]
    fn zero_length_edges_warn_and_are_skipped() {
        let mut s = two_node_skeleton();
        let dup = s.nodes[1].position;
        s.push_child(1, dup, 0);
        let (mesh, warnings) =
            skin_skeleton(&mut s, &RadiusRule { leaf_radius: 0.2, base: 1.2 }, 6);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("zero-length"));
        assert!(mesh.validate().is_ok());
        assert!(mesh.is_closed_manifold());
    }
}
