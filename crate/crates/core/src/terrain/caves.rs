//! Cave systems: a probabilistic turtle walk grows a forest of passage
//! polylines, which are then swept as capsules and subtracted from a host
//! element.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TerrainElement;
use crate::fields::{sdf_combine, ProgramBuilder, RoundSegment, SdfOp};
use crate::rng::{stream, substream_index};

/// Relative weights of the turtle rules. Weights only need to be
/// non-negative and not all zero; they are normalized per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaveRuleWeights {
    /// Step straight ahead.
    pub advance: f64,
    /// Random yaw change, then step.
    pub turn: f64,
    /// Random pitch change, then step.
    pub elevation: f64,
    /// Step with the cross-section widened to half the cavern size.
    pub widen: f64,
    /// Spawn a side branch, then step. Scaled by `fork_frequency`.
    pub fork: f64,
    /// End the branch.
    pub terminate: f64,
}

impl Default for CaveRuleWeights {
    fn default() -> Self {
        CaveRuleWeights {
            advance: 4.0,
            turn: 2.0,
            elevation: 1.0,
            widen: 0.5,
            fork: 1.0,
            terminate: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaveSystemSpec {
    pub rules: CaveRuleWeights,
    /// Diameter of widened caverns, meters.
    pub cavern_size: f64,
    /// Passage vertices per meter; the turtle step is its reciprocal.
    pub tunnel_frequency: f64,
    /// Probability scale on the fork rule, per step.
    pub fork_frequency: f64,
    /// Tunnel cross-section radius range `(min, max)`, meters.
    pub radius_range: (f64, f64),
    /// Step budget for the entrance branch; children get one less than
    /// their parent's remainder.
    pub max_depth: u32,
    pub seed: u64,
}

impl CaveSystemSpec {
    pub fn validate(&self) -> Result<(), String> {
        let w = &self.rules;
        let weights = [w.advance, w.turn, w.elevation, w.widen, w.fork, w.terminate];
        if weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err("rule weights must be finite and >= 0".into());
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err("rule weights must not all be zero".into());
        }
        if !(self.cavern_size > 0.0) || !self.cavern_size.is_finite() {
            return Err(format!("cavern size must be positive, got {}", self.cavern_size));
        }
        if !(self.tunnel_frequency > 0.0) || !self.tunnel_frequency.is_finite() {
            return Err(format!(
                "tunnel frequency must be positive, got {}",
                self.tunnel_frequency
            ));
        }
        if !(0.0..=1.0).contains(&self.fork_frequency) {
            return Err(format!("fork frequency must be in [0, 1], got {}", self.fork_frequency));
        }
        let (rmin, rmax) = self.radius_range;
        if !(rmin > 0.0 && rmax >= rmin) || !rmax.is_finite() {
            return Err(format!("radius range must satisfy 0 < min <= max, got {rmin}..{rmax}"));
        }
        if self.max_depth == 0 {
            return Err("max depth must be >= 1".into());
        }
        Ok(())
    }
}

/// One passage: a polyline with a cross-section radius at every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavePassage {
    pub points: Vec<Point3<f64>>,
    pub radii: Vec<f64>,
}

impl CavePassage {
    pub fn segments(&self) -> impl Iterator<Item = RoundSegment> + '_ {
        self.points.windows(2).zip(self.radii.windows(2)).map(|(p, r)| RoundSegment {
            a: p[0],
            b: p[1],
            ra: r[0],
            rb: r[1],
        })
    }
}

/// One unexpanded branch. Heading is kept as yaw/pitch so turns and
/// elevation changes never degenerate.
struct Turtle {
    position: Point3<f64>,
    yaw: f64,
    pitch: f64,
    radius: f64,
    remaining: u32,
    branch_index: u64,
}

fn heading(yaw: f64, pitch: f64) -> Vector3<f64> {
    Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

const MAX_PITCH: f64 = std::f64::consts::FRAC_PI_3;

/// Grow the passage forest from `entrance` along `start_heading`.
///
/// Each branch consumes rules from its own RNG stream keyed on
/// `(spec.seed, branch index)`, so the output is deterministic and a
/// branch's geometry does not depend on how its siblings expand. Branches
/// that end before making a single step are dropped.
pub fn generate_cave_skeleton(
    spec: &CaveSystemSpec,
    entrance: Point3<f64>,
    start_heading: Vector3<f64>,
) -> Vec<CavePassage> {
    spec.validate().expect("invalid cave system spec");
    assert!(start_heading.norm() > 1e-9, "start heading must be nonzero");

    let step = 1.0 / spec.tunnel_frequency;
    let (rmin, rmax) = spec.radius_range;
    let dir = start_heading.normalize();
    let mut next_branch = 0u64;
    let mut spawn = |position, yaw, pitch, radius, remaining| {
        let t = Turtle { position, yaw, pitch, radius, remaining, branch_index: next_branch };
        next_branch += 1;
        t
    };

    let mut stack = vec![spawn(
        entrance,
        dir.y.atan2(dir.x),
        dir.z.clamp(-1.0, 1.0).asin().clamp(-MAX_PITCH, MAX_PITCH),
        0.5 * (rmin + rmax),
        spec.max_depth,
    )];
    let mut passages = Vec::new();

    while let Some(mut t) = stack.pop() {
        let mut rng = stream(substream_index(spec.seed, t.branch_index));
        let mut points = vec![t.position];
        let mut radii = vec![t.radius];

        while t.remaining > 0 {
            t.remaining -= 1;
            let w = &spec.rules;
            let weights = [
                w.advance,
                w.turn,
                w.elevation,
                w.widen,
                w.fork * spec.fork_frequency,
                w.terminate,
            ];
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                break;
            }
            let mut pick = rng.random_range(0.0..total);
            let mut rule = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if pick < *w {
                    rule = i;
                    break;
                }
                pick -= w;
            }

            let mut widened = false;
            match rule {
                0 => {}
                1 => {
                    let mag = rng
                        .random_range(std::f64::consts::FRAC_PI_6..std::f64::consts::FRAC_PI_2);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    t.yaw += sign * mag;
                }
                2 => {
                    let mag = rng.random_range(0.1..std::f64::consts::FRAC_PI_4);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    t.pitch = (t.pitch + sign * mag).clamp(-MAX_PITCH, MAX_PITCH);
                }
                3 => widened = true,
                4 => {
                    let mag = rng.random_range(std::f64::consts::FRAC_PI_4..2.3);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let child_pitch =
                        (t.pitch + rng.random_range(-0.3..0.3)).clamp(-MAX_PITCH, MAX_PITCH);
                    if t.remaining > 0 {
                        stack.push(spawn(
                            t.position,
                            t.yaw + sign * mag,
                            child_pitch,
                            rng.random_range(rmin..=rmax),
                            t.remaining,
                        ));
                    }
                }
                _ => break,
            }

            t.radius = (t.radius + rng.random_range(-0.15..0.15) * (rmax - rmin)).clamp(rmin, rmax);
            t.position += heading(t.yaw, t.pitch) * step;
            points.push(t.position);
            radii.push(if widened { 0.5 * spec.cavern_size } else { t.radius });
        }

        if points.len() >= 2 {
            passages.push(CavePassage { points, radii });
        }
    }
    passages
}

/// Subtract the swept passages from `base`. The result is air (positive)
/// inside every passage and identical to `base` out of reach of all of
/// them; an empty passage list returns `base` unchanged.
pub fn carve_caves(base: &TerrainElement, passages: &[CavePassage]) -> TerrainElement {
    let segments: Vec<RoundSegment> = passages.iter().flat_map(|p| p.segments()).collect();
    if segments.is_empty() {
        return base.clone();
    }
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let out = b.capsule_chain(p, std::sync::Arc::new(segments));
    let tube = b.finish(out);
    let sdf = sdf_combine(SdfOp::Subtract, &base.sdf, &tube).expect("scalar sdf programs");
    TerrainElement { tag: base.tag, sdf, bounds: base.bounds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::sdf::capsule_chain_distance;
    use crate::terrain::ground_plane;

    fn spec(seed: u64) -> CaveSystemSpec {
        CaveSystemSpec {
            rules: CaveRuleWeights::default(),
            cavern_size: 6.0,
            tunnel_frequency: 0.5,
            fork_frequency: 0.4,
            radius_range: (0.8, 1.6),
            max_depth: 40,
            seed,
        }
    }

    #[test]
    fn no_forking_gives_one_polyline() {
        let mut s = spec(3);
        s.rules.fork = 0.0;
        s.rules.terminate = 0.0;
        let passages = generate_cave_skeleton(&s, Point3::origin(), Vector3::x());
        assert_eq!(passages.len(), 1);
        assert_eq!(passages[0].points.len(), s.max_depth as usize + 1);
    }

    #[test]
    fn zero_fork_frequency_also_gives_one_polyline() {
        let mut s = spec(4);
        s.fork_frequency = 0.0;
        s.rules.terminate = 0.0;
        let passages = generate_cave_skeleton(&s, Point3::origin(), Vector3::x());
        assert_eq!(passages.len(), 1);
    }

    #[test]
    fn always_forking_builds_a_tree() {
        let mut s = spec(5);
        s.rules = CaveRuleWeights {
            advance: 0.0,
            turn: 0.0,
            elevation: 0.0,
            widen: 0.0,
            fork: 1.0,
            terminate: 0.0,
        };
        s.fork_frequency = 1.0;
        s.max_depth = 3;
        let passages = generate_cave_skeleton(&s, Point3::origin(), Vector3::x());
        assert!(passages.len() >= 4, "got {} passages", passages.len());
    }

    #[test]
    fn same_seed_gives_identical_skeletons() {
        let a = generate_cave_skeleton(&spec(11), Point3::new(1.0, 2.0, -3.0), Vector3::y());
        let b = generate_cave_skeleton(&spec(11), Point3::new(1.0, 2.0, -3.0), Vector3::y());
        assert_eq!(a, b);
        assert_ne!(
            a,
            generate_cave_skeleton(&spec(12), Point3::new(1.0, 2.0, -3.0), Vector3::y())
        );
    }

    #[test]
    fn branches_never_repeat_a_vertex() {
        let passages = generate_cave_skeleton(&spec(7), Point3::origin(), Vector3::x());
        for passage in &passages {
            for (i, p) in passage.points.iter().enumerate() {
                for q in passage.points.iter().skip(i + 1) {
                    assert!((p - q).norm() > 1e-9, "repeated vertex {p:?}");
                }
            }
        }
    }

    #[test]
    fn forest_is_rooted_at_the_entrance() {
        let entrance = Point3::new(0.0, 0.0, -5.0);
        let passages = generate_cave_skeleton(&spec(13), entrance, Vector3::x());
        // Every branch starts either at the entrance or on a vertex of an
        // earlier branch.
        for (i, passage) in passages.iter().enumerate() {
            let start = passage.points[0];
            let attached = start == entrance
                || passages
                    .iter()
                    .take(i)
                    .chain(passages.iter().skip(i + 1))
                    .any(|other| other.points.iter().any(|p| *p == start));
            assert!(attached, "branch {i} floats at {start:?}");
        }
    }

    #[test]
    fn centerline_becomes_air() {
        let base = ground_plane(0.0);
        let mut s = spec(17);
        s.rules.terminate = 0.0;
        let passages = generate_cave_skeleton(&s, Point3::new(0.0, 0.0, -30.0), Vector3::x());
        let carved = carve_caves(&base, &passages);
        let mut checked = 0;
        for v in passages.iter().flat_map(|p| &p.points) {
            if base.eval(*v) < -0.5 {
                assert!(carved.eval(*v) > 0.0, "passage interior is still solid at {v:?}");
                checked += 1;
            }
        }
        assert!(checked > 10, "skeleton barely enters the solid ({checked} vertices)");
    }

    #[test]
    fn far_points_keep_the_base_value() {
        let base = ground_plane(0.0);
        let passages =
            generate_cave_skeleton(&spec(19), Point3::new(0.0, 0.0, -10.0), Vector3::x());
        let carved = carve_caves(&base, &passages);
        let segments: Vec<RoundSegment> = passages.iter().flat_map(|p| p.segments()).collect();
        let mut rng = stream(23);
        let mut checked = 0;
        while checked < 200 {
            let p = Point3::new(
                rng.random_range(-300.0..300.0),
                rng.random_range(-300.0..300.0),
                rng.random_range(-40.0..5.0),
            );
            if capsule_chain_distance(p, &segments) > 0.5 {
                assert_eq!(carved.eval(p), base.eval(p));
                checked += 1;
            }
        }
    }

    #[test]
    fn empty_passage_list_is_identity() {
        let base = ground_plane(2.0);
        let carved = carve_caves(&base, &[]);
        assert_eq!(carved.sdf, base.sdf);
    }

    #[test]
    fn carving_never_adds_solid() {
        let base = ground_plane(0.0);
        let passages =
            generate_cave_skeleton(&spec(29), Point3::new(0.0, 0.0, -8.0), Vector3::x());
        let carved = carve_caves(&base, &passages);
        let mut rng = stream(31);
        for _ in 0..2000 {
            let p = Point3::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(-30.0..10.0),
            );
            assert!(carved.eval(p) >= base.eval(p));
        }
    }
}
