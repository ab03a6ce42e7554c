//! Tiled landscapes: build a primitive height tile, optionally erode it,
//! and repeat it over the plane with hashed rotations and seam blending.

use std::sync::Arc;

use super::{ElementTag, TerrainElement};
use crate::fields::{noise::noise_value, NoiseSpec, ProgramBuilder, TileField};

/// Sample a noise field into a primitive tile. The grid covers `[0, extent]²`
/// at `nx × ny` samples; `margin` is the seam blend half-width used when the
/// tile is repeated.
pub fn noise_tile(
    noise: &NoiseSpec,
    amplitude: f64,
    nx: usize,
    ny: usize,
    extent: f64,
    margin: f64,
    seed: u64,
) -> TileField {
    let mut heights = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = extent * ix as f64 / (nx - 1) as f64;
            let y = extent * iy as f64 / (ny - 1) as f64;
            heights.push(amplitude * noise_value(noise, nalgebra::Point3::new(x, y, 0.0)));
        }
    }
    TileField::new(heights, nx, ny, extent, margin, seed).expect("tile parameters validated")
}

/// Talus-angle relaxation: wherever the slope to the lowest 4-neighbor
/// exceeds `talus_angle`, a quarter of the excess height difference moves
/// downhill. Each move subtracts and adds the same amount, so total height
/// is conserved; repeated iterations relax every slope toward the talus
/// angle. Stands in for an external erosion simulator.
pub fn thermal_erode(tile: &mut TileField, iterations: u32, talus_angle: f64) {
    assert!(
        talus_angle > 0.0 && talus_angle < std::f64::consts::FRAC_PI_2,
        "talus angle must be in (0, pi/2)"
    );
    let (nx, ny) = (tile.nx, tile.ny);
    let dx = tile.extent / (nx - 1) as f64;
    let dy = tile.extent / (ny - 1) as f64;
    let mut delta = vec![0.0f64; nx * ny];

    for _ in 0..iterations {
        delta.fill(0.0);
        for iy in 0..ny {
            for ix in 0..nx {
                let i = iy * nx + ix;
                let h = tile.heights[i];
                let mut steepest: Option<(usize, f64)> = None;
                let mut consider = |j: usize, dist: f64| {
                    let drop = (h - tile.heights[j]) - dist * talus_angle.tan();
                    if drop > 0.0 && steepest.is_none_or(|(_, best)| drop > best) {
                        steepest = Some((j, drop));
                    }
                };
                if ix > 0 {
                    consider(i - 1, dx);
                }
                if ix + 1 < nx {
                    consider(i + 1, dx);
                }
                if iy > 0 {
                    consider(i - nx, dy);
                }
                if iy + 1 < ny {
                    consider(i + nx, dy);
                }
                if let Some((j, drop)) = steepest {
                    let moved = 0.25 * drop;
                    delta[i] -= moved;
                    delta[j] += moved;
                }
            }
        }
        for (h, d) in tile.heights.iter_mut().zip(&delta) {
            *h += d;
        }
    }
}

/// Infinite landscape element: solid below the repeated-tile height.
pub fn tile_landscape(tile: TileField) -> TerrainElement {
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let z = b.split_z(p);
    let h = b.tiled_height(p, Arc::new(tile));
    let out = b.sub(z, h);
    TerrainElement { tag: ElementTag::TiledLandscape, sdf: b.finish(out), bounds: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::assert_field_continuous;
    use nalgebra::Point3;
    use rand::Rng;

    #[test]
    fn constant_tile_gives_a_constant_landscape() {
        let tile = TileField::new(vec![3.0; 16], 4, 4, 8.0, 1.0, 5).unwrap();
        let land = tile_landscape(tile);
        let mut rng = crate::rng::stream(2);
        for _ in 0..200 {
            let x = rng.random_range(-50.0..50.0);
            let y = rng.random_range(-50.0..50.0);
            assert!((land.eval(Point3::new(x, y, 3.0))).abs() < 1e-12);
            assert!((land.eval(Point3::new(x, y, 5.5)) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn landscape_is_continuous_across_seams() {
        let tile = noise_tile(&NoiseSpec::fbm(6, 0.3, 3), 2.0, 24, 24, 10.0, 1.5, 6);
        let land = tile_landscape(tile);
        let mut rng = crate::rng::stream(3);
        for _ in 0..100 {
            let t = rng.random_range(-30.0..30.0);
            let seam = 10.0 * rng.random_range(-3..3i64) as f64;
            let a = land.eval(Point3::new(seam - 5e-7, t, 1.0));
            let b = land.eval(Point3::new(seam + 5e-7, t, 1.0));
            assert!((a - b).abs() < 1e-6, "x-seam jump {} at ({seam}, {t})", (a - b).abs());
            let c = land.eval(Point3::new(t, seam - 5e-7, 1.0));
            let d = land.eval(Point3::new(t, seam + 5e-7, 1.0));
            assert!((c - d).abs() < 1e-6, "y-seam jump {} at ({t}, {seam})", (c - d).abs());
        }
        assert_field_continuous(
            &land,
            Point3::new(-20.0, -20.0, -3.0),
            Point3::new(20.0, 20.0, 3.0),
            48.0,
        );
    }

    #[test]
    fn zero_margin_interior_matches_the_rotated_tile() {
        // Heights encode the grid index so every rotation is distinguishable.
        let n = 5usize;
        let extent = 4.0;
        let heights: Vec<f64> =
            (0..n * n).map(|i| (i % n) as f64 * 10.0 + (i / n) as f64).collect();
        let tile = TileField::new(heights.clone(), n, n, extent, 0.0, 9).unwrap();
        let land = tile_landscape(tile.clone());

        let bilinear = |u: f64, v: f64| {
            let s = (n - 1) as f64 / extent;
            let gx = (u * s).clamp(0.0, (n - 1) as f64);
            let gy = (v * s).clamp(0.0, (n - 1) as f64);
            let x0 = (gx.floor() as usize).min(n - 2);
            let y0 = (gy.floor() as usize).min(n - 2);
            let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
            let h = |x: usize, y: usize| heights[y * n + x];
            (h(x0, y0) * (1.0 - fx) + h(x0 + 1, y0) * fx) * (1.0 - fy)
                + (h(x0, y0 + 1) * (1.0 - fx) + h(x0 + 1, y0 + 1) * fx) * fy
        };

        let mut rng = crate::rng::stream(4);
        for _ in 0..200 {
            let cx = rng.random_range(-3..3i64);
            let cy = rng.random_range(-3..3i64);
            let lx = rng.random_range(0.2..extent - 0.2);
            let ly = rng.random_range(0.2..extent - 0.2);
            let (x, y) = (cx as f64 * extent + lx, cy as f64 * extent + ly);

            let half = extent / 2.0;
            let (mut du, mut dv) = (lx - half, ly - half);
            for _ in 0..tile.cell_rotation(cx, cy) {
                let t = du;
                du = -dv;
                dv = t;
            }
            let expected = bilinear(du + half, dv + half);
            let got = -land.eval(Point3::new(x, y, 0.0));
            assert!(
                (got - expected).abs() < 1e-12,
                "cell ({cx}, {cy}) rotation {}: {got} vs {expected}",
                tile.cell_rotation(cx, cy)
            );
        }
    }

    #[test]
    fn erosion_conserves_total_height() {
        let mut tile = noise_tile(&NoiseSpec::fbm(13, 0.5, 4), 5.0, 32, 32, 12.0, 1.0, 13);
        let before: f64 = tile.heights.iter().sum();
        thermal_erode(&mut tile, 50, 0.6);
        let after: f64 = tile.heights.iter().sum();
        assert!((before - after).abs() < 1e-9, "mass drifted by {}", before - after);
    }

    #[test]
    fn erosion_relaxes_slopes_toward_the_talus_angle() {
        let mut tile = noise_tile(&NoiseSpec::fbm(14, 0.6, 4), 6.0, 32, 32, 12.0, 1.0, 14);
        let max_slope = |t: &TileField| {
            let d = t.extent / (t.nx - 1) as f64;
            let mut m: f64 = 0.0;
            for iy in 0..t.ny {
                for ix in 0..t.nx - 1 {
                    let i = iy * t.nx + ix;
                    m = m.max((t.heights[i] - t.heights[i + 1]).abs() / d);
                }
            }
            for iy in 0..t.ny - 1 {
                for ix in 0..t.nx {
                    let i = iy * t.nx + ix;
                    m = m.max((t.heights[i] - t.heights[i + t.nx]).abs() / d);
                }
            }
            m
        };
        let talus = 0.5f64;
        let start = max_slope(&tile);
        assert!(start > talus.tan(), "tile starts below the talus slope");
        thermal_erode(&mut tile, 400, talus);
        let end = max_slope(&tile);
        assert!(end < start, "erosion did not reduce the steepest slope");
        assert!(end < talus.tan() * 1.2, "steepest slope {end} stayed far above talus");
    }

    #[test]
    fn same_inputs_give_identical_tiles() {
        let a = noise_tile(&NoiseSpec::fbm(15, 0.4, 3), 2.0, 16, 16, 8.0, 1.0, 15);
        let b = noise_tile(&NoiseSpec::fbm(15, 0.4, 3), 2.0, 16, 16, 8.0, 1.0, 15);
        assert_eq!(a, b);
    }
}
