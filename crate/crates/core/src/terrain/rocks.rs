//! Rock-like elements: noise heightfields, Voronoi rock fields over a host
//! surface, and bounded floating islands.

use nalgebra::{Point3, Vector3};

use super::{ElementTag, TerrainElement};
use crate::fields::cellular::feature_for;
use crate::fields::{Evaluator, NoiseSpec, ProgramBuilder, VoronoiCellField};
use crate::rng::substream;

/// Heightfield element: solid below `base_height + amplitude · noise(x, y, z)`.
/// Warping, octaves, and the noise flavor all live in the spec.
pub fn eroded_rocks(noise: NoiseSpec, base_height: f64, amplitude: f64) -> TerrainElement {
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let z = b.split_z(p);
    let n = b.noise(p, noise);
    let amp = b.constant(amplitude);
    let relief = b.mul(n, amp);
    let base = b.constant(base_height);
    let surface = b.add(base, relief);
    let out = b.sub(z, surface);
    TerrainElement { tag: ElementTag::ErodedRocks, sdf: b.finish(out), bounds: None }
}

/// Activation shell half-width: a cell counts as "on the surface" when its
/// feature point is within half a cell diagonal of it.
fn surface_band(cell_size: f64) -> f64 {
    0.5 * 3f64.sqrt() * cell_size
}

/// Rock field grown on the surface shell of `parent`: Voronoi cells whose
/// feature point lies within [`surface_band`] of the parent surface become
/// solid rocks separated by noise-modulated crevices `gap` meters wide.
/// Cells are activated over `region` once, at construction. The element is
/// meant to be unioned with its parent — away from the shell it sits at a
/// positive clearance floor, so the parent value dominates the union.
pub fn voronoi_rocks(
    parent: &TerrainElement,
    cell_frequency: f64,
    gap: f64,
    region: (Point3<f64>, Point3<f64>),
    seed: u64,
) -> TerrainElement {
    assert!(
        cell_frequency > 0.0 && cell_frequency.is_finite(),
        "cell frequency must be positive"
    );
    let cell_size = 1.0 / cell_frequency;
    let band = surface_band(cell_size);
    let (lo, hi) = region;

    let mut eval = Evaluator::new(&parent.sdf);
    let mut active = Vec::new();
    let cell_range = |a: f64, b: f64| {
        let c0 = (a / cell_size).floor() as i64;
        let c1 = (b / cell_size).floor() as i64;
        c0..=c1
    };
    for cz in cell_range(lo.z, hi.z) {
        for cy in cell_range(lo.y, hi.y) {
            for cx in cell_range(lo.x, hi.x) {
                if eval.eval_scalar(feature_for(seed, cell_size, (cx, cy, cz))).abs() <= band {
                    let cell = (
                        i32::try_from(cx).expect("region cell index overflows i32"),
                        i32::try_from(cy).expect("region cell index overflows i32"),
                        i32::try_from(cz).expect("region cell index overflows i32"),
                    );
                    active.push(cell);
                }
            }
        }
    }

    let gap_noise = Some(NoiseSpec::perlin(substream(seed, "gap"), 2.0 * cell_frequency));
    let field = VoronoiCellField::new(cell_size, gap, gap_noise, seed, active)
        .expect("validated parameters");
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let out = b.voronoi_cells(p, std::sync::Arc::new(field));
    let pad = Vector3::repeat(cell_size);
    TerrainElement {
        tag: ElementTag::VoronoiRocks,
        sdf: b.finish(out),
        bounds: Some((lo - pad, hi + pad)),
    }
}

/// Bounded island: a noise-displaced top surface glued to a mirrored bottom
/// one, both pinched to nothing at `radius` from the axis. With
/// `bottom_noise` unset the two halves share the top noise and the island is
/// mirror-symmetric about the center plane.
pub fn floating_island(
    center: Point3<f64>,
    radius: f64,
    thickness: f64,
    top_noise: NoiseSpec,
    bottom_noise: Option<NoiseSpec>,
    amplitude: f64,
) -> TerrainElement {
    assert!(radius > 0.0 && thickness > 0.0, "island extents must be positive");
    let top_bound = thickness + amplitude.abs() * top_noise.amplitude_bound();
    let bottom_bound = thickness
        + amplitude.abs() * bottom_noise.as_ref().unwrap_or(&top_noise).amplitude_bound();

    let mut b = ProgramBuilder::new();
    let p = b.position();
    let cv = b.constant_vec(center.coords);
    let rel = b.vec_sub(p, cv);
    let x = b.split_x(rel);
    let y = b.split_y(rel);
    let z = b.split_z(rel);

    // Radial profile 1 − (ρ/radius)², negative outside the rim.
    let x2 = b.mul(x, x);
    let y2 = b.mul(y, y);
    let rho2 = b.add(x2, y2);
    let r2inv = b.constant(1.0 / (radius * radius));
    let frac = b.mul(rho2, r2inv);
    let one = b.constant(1.0);
    let profile = b.sub(one, frac);

    // Sample both relief fields on the center plane so the two surfaces
    // depend on (x, y) only.
    let zero = b.constant(0.0);
    let flat = b.combine_xyz(x, y, zero);
    let amp = b.constant(amplitude);
    let thick = b.constant(thickness);
    let half = |noise: NoiseSpec, b: &mut ProgramBuilder| {
        let n = b.noise(flat, noise);
        let relief = b.mul(n, amp);
        let h = b.add(thick, relief);
        b.mul(profile, h)
    };
    let top = half(top_noise.clone(), &mut b);
    let bottom = half(bottom_noise.unwrap_or(top_noise), &mut b);

    // Solid between −bottom and +top.
    let above = b.sub(z, top);
    let neg_bottom = b.neg(bottom);
    let below = b.sub(neg_bottom, z);
    let out = b.max(above, below);

    let ext = Vector3::new(radius, radius, top_bound.max(bottom_bound));
    TerrainElement {
        tag: ElementTag::FloatingIsland,
        sdf: b.finish(out),
        bounds: Some((center - ext, center + ext)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{assert_field_continuous, ground_plane};
    use rand::Rng;

    fn rocky_spec(seed: u64) -> NoiseSpec {
        NoiseSpec::fbm(seed, 0.4, 3)
    }

    #[test]
    fn zero_amplitude_is_a_plane() {
        let e = eroded_rocks(rocky_spec(5), 2.0, 0.0);
        assert_eq!(e.eval(Point3::new(0.0, 0.0, 3.0)), 1.0);
        assert_eq!(e.eval(Point3::new(17.0, -4.0, 1.0)), -1.0);
    }

    #[test]
    fn same_seed_repeats_exactly() {
        let a = eroded_rocks(rocky_spec(9).with_warp(2.0, NoiseSpec::perlin(10, 0.2)), 0.0, 3.0);
        let b = eroded_rocks(rocky_spec(9).with_warp(2.0, NoiseSpec::perlin(10, 0.2)), 0.0, 3.0);
        for i in 0..16 {
            for j in 0..16 {
                for k in 0..16 {
                    let p = Point3::new(i as f64 * 0.7, j as f64 * 0.7, k as f64 * 0.7 - 3.0);
                    assert_eq!(a.eval(p).to_bits(), b.eval(p).to_bits());
                }
            }
        }
    }

    #[test]
    fn warp_changes_most_samples() {
        let plain = eroded_rocks(rocky_spec(3), 0.0, 3.0);
        let warped =
            eroded_rocks(rocky_spec(3).with_warp(1.5, NoiseSpec::perlin(77, 0.3)), 0.0, 3.0);
        let mut rng = crate::rng::stream(41);
        let mut differing = 0;
        for _ in 0..1000 {
            let p = Point3::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-5.0..5.0),
            );
            if (plain.eval(p) - warped.eval(p)).abs() > 1e-9 {
                differing += 1;
            }
        }
        assert!(differing > 500, "warp only changed {differing} of 1000 samples");
    }

    #[test]
    fn eroded_rocks_field_is_continuous() {
        let e = eroded_rocks(rocky_spec(8).with_warp(1.0, NoiseSpec::perlin(5, 0.2)), 0.0, 4.0);
        assert_field_continuous(
            &e,
            Point3::new(-10.0, -10.0, -6.0),
            Point3::new(10.0, 10.0, 6.0),
            64.0,
        );
    }

    #[test]
    fn empty_parent_grows_no_rocks() {
        let mut b = ProgramBuilder::new();
        let one = b.constant(1.0);
        let parent = TerrainElement { tag: ElementTag::Ground, sdf: b.finish(one), bounds: None };
        let rocks = voronoi_rocks(
            &parent,
            1.25,
            0.1,
            (Point3::new(-6.0, -6.0, -6.0), Point3::new(6.0, 6.0, 6.0)),
            11,
        );
        let floor = 0.25 * 0.8 + 0.5 * 0.1;
        let mut rng = crate::rng::stream(12);
        for _ in 0..500 {
            let p = Point3::new(
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
            );
            assert!(rocks.eval(p) >= floor - 1e-9, "rock appeared at {p:?}");
        }
    }

    #[test]
    fn surface_band_cells_are_solid_inside() {
        let parent = ground_plane(0.0);
        let rocks = voronoi_rocks(
            &parent,
            1.0,
            0.05,
            (Point3::new(-5.0, -5.0, -2.0), Point3::new(5.0, 5.0, 2.0)),
            23,
        );
        let band = surface_band(1.0);
        let mut solid = 0;
        let mut total = 0;
        for cz in -2..2 {
            for cy in -4..4 {
                for cx in -4..4 {
                    let f = feature_for(23, 1.0, (cx, cy, cz));
                    if parent.eval(f).abs() <= band {
                        total += 1;
                        if rocks.eval(f) < 0.0 {
                            solid += 1;
                        }
                    }
                }
            }
        }
        assert!(total > 20);
        assert_eq!(solid, total, "{solid} of {total} banded cells are solid at the center");
    }

    #[test]
    fn zero_gap_cells_touch_on_the_bisector() {
        let parent = ground_plane(0.0);
        let seed = 29;
        let rocks = voronoi_rocks(
            &parent,
            1.0,
            0.0,
            (Point3::new(-5.0, -5.0, -2.0), Point3::new(5.0, 5.0, 2.0)),
            seed,
        );
        let band = surface_band(1.0);
        let is_active =
            |cell: (i64, i64, i64)| parent.eval(feature_for(seed, 1.0, cell)).abs() <= band;

        // For each adjacent active pair whose two features are the nearest
        // features to their midpoint, the cells meet exactly there.
        let mut checked = 0;
        for cx in -4..4i64 {
            let (ca, cb) = ((cx, 0, 0), (cx + 1, 0, 0));
            if !is_active(ca) || !is_active(cb) {
                continue;
            }
            let a = feature_for(seed, 1.0, ca);
            let b = feature_for(seed, 1.0, cb);
            let mid = nalgebra::center(&a, &b);
            let pair_dist = (mid - a).norm().max((mid - b).norm());
            let mut closest_elsewhere = f64::INFINITY;
            for dz in -2..=2i64 {
                for dy in -2..=2i64 {
                    for dx in -2..=2i64 {
                        let c = (cx + dx, dy, dz);
                        if c == ca || c == cb {
                            continue;
                        }
                        let d = (mid - feature_for(seed, 1.0, c)).norm();
                        closest_elsewhere = closest_elsewhere.min(d);
                    }
                }
            }
            if closest_elsewhere > pair_dist {
                let d = rocks.eval(mid);
                assert!(d <= 1e-9, "gap-free cells leave a crevice at {mid:?}: {d}");
                checked += 1;
            }
        }
        assert!(checked >= 1, "no adjacent active pair found for seed {seed}");
    }

    #[test]
    fn rock_field_is_continuous() {
        let parent = ground_plane(0.0);
        let rocks = voronoi_rocks(
            &parent,
            0.8,
            0.1,
            (Point3::new(-6.0, -6.0, -3.0), Point3::new(6.0, 6.0, 3.0)),
            31,
        );
        assert_field_continuous(
            &rocks,
            Point3::new(-5.0, -5.0, -2.0),
            Point3::new(5.0, 5.0, 2.0),
            24.0,
        );
    }

    #[test]
    fn island_is_solid_inside_and_air_above() {
        let island = floating_island(
            Point3::new(1.0, -2.0, 10.0),
            8.0,
            2.0,
            NoiseSpec::fbm(51, 0.3, 3),
            None,
            1.0,
        );
        assert!(island.eval(Point3::new(1.0, -2.0, 10.0)) < 0.0);
        let (lo, hi) = island.bounds.unwrap();
        assert!(island.eval(Point3::new(1.0, -2.0, hi.z + 0.5)) > 0.0);
        assert!(island.eval(Point3::new(1.0, -2.0, lo.z - 0.5)) > 0.0);
    }

    #[test]
    fn shared_noise_island_is_mirror_symmetric() {
        let island = floating_island(
            Point3::new(0.0, 0.0, 5.0),
            6.0,
            1.5,
            NoiseSpec::fbm(52, 0.4, 3),
            None,
            0.8,
        );
        let mut rng = crate::rng::stream(99);
        for _ in 0..300 {
            let x = rng.random_range(-7.0..7.0);
            let y = rng.random_range(-7.0..7.0);
            let d = rng.random_range(0.0..4.0);
            let above = island.eval(Point3::new(x, y, 5.0 + d));
            let below = island.eval(Point3::new(x, y, 5.0 - d));
            assert!((above - below).abs() < 1e-6, "island asymmetric at ({x}, {y}, ±{d})");
        }
    }

    #[test]
    fn island_is_positive_far_outside_bounds() {
        let island = floating_island(
            Point3::new(0.0, 0.0, 20.0),
            5.0,
            2.0,
            NoiseSpec::fbm(53, 0.5, 2),
            Some(NoiseSpec::fbm(54, 0.7, 2)),
            1.2,
        );
        let (lo, hi) = island.bounds.unwrap();
        let c = nalgebra::center(&lo, &hi);
        let half = (hi - lo) / 2.0;
        let mut rng = crate::rng::stream(7);
        for _ in 0..500 {
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0f64),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if dir.norm() < 1e-3 {
                continue;
            }
            let d = dir.normalize();
            let scale = rng.random_range(2.0..6.0);
            let p = c + Vector3::new(d.x * half.x, d.y * half.y, d.z * half.z) * scale;
            assert!(island.eval(p) > 0.0, "island leaks outside bounds at {p:?}");
        }
    }
}
