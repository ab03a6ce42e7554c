//! Infinite heightfields from one square tile, with hashed per-cell
//! rotations and seam blending.
//!
//! The plane is partitioned into `extent`-sized cells. Each cell shows the
//! tile rotated by a hash-chosen multiple of 90°, so repetition is much less
//! apparent than plain tiling. Near cell boundaries, heights from the
//! adjacent cells are cross-blended over a `margin`-wide band with linear
//! partition-of-unity weights; the blended field is C⁰ across every seam.
//! With `margin = 0` the lookup degenerates to the exact rotated tile.

use serde::{Deserialize, Serialize};

use crate::rng::hash_cell;

/// One square height tile plus its tiling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileField {
    /// Row-major heights, `ny` rows of `nx` samples spanning `[0, extent]²`.
    pub heights: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    /// World size of the tile in meters.
    pub extent: f64,
    /// Half-width of the seam blend band, meters. Must be < extent/2.
    pub margin: f64,
    pub seed: u64,
}

impl TileField {
    pub fn new(
        heights: Vec<f64>,
        nx: usize,
        ny: usize,
        extent: f64,
        margin: f64,
        seed: u64,
    ) -> Result<Self, String> {
        if nx < 2 || ny < 2 {
            return Err(format!("tile grid must be at least 2x2, got {nx}x{ny}"));
        }
        if heights.len() != nx * ny {
            return Err(format!("expected {} heights, got {}", nx * ny, heights.len()));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(format!("tile extent must be positive, got {extent}"));
        }
        if !(0.0..extent / 2.0).contains(&margin) {
            return Err(format!("margin must be in [0, extent/2), got {margin}"));
        }
        Ok(TileField { heights, nx, ny, extent, margin, seed })
    }

    /// Rotation count (multiples of 90° counter-clockwise) for a cell.
    pub fn cell_rotation(&self, cx: i64, cy: i64) -> u8 {
        (hash_cell(self.seed, cx, cy, 0x7412) & 3) as u8
    }

    /// Bilinear sample of the raw tile at local coordinates, clamped to the
    /// tile domain.
    fn sample(&self, u: f64, v: f64) -> f64 {
        let sx = (self.nx - 1) as f64 / self.extent;
        let sy = (self.ny - 1) as f64 / self.extent;
        let gx = (u * sx).clamp(0.0, (self.nx - 1) as f64);
        let gy = (v * sy).clamp(0.0, (self.ny - 1) as f64);
        let x0 = (gx.floor() as usize).min(self.nx - 2);
        let y0 = (gy.floor() as usize).min(self.ny - 2);
        let fx = gx - x0 as f64;
        let fy = gy - y0 as f64;
        let h = |x: usize, y: usize| self.heights[y * self.nx + x];
        let h0 = h(x0, y0) * (1.0 - fx) + h(x0 + 1, y0) * fx;
        let h1 = h(x0, y0 + 1) * (1.0 - fx) + h(x0 + 1, y0 + 1) * fx;
        h0 * (1.0 - fy) + h1 * fy
    }

    /// Tile height for cell `(cx, cy)` at world `(x, y)`: local coordinates
    /// rotated about the cell center, then clamped-bilinear sampled.
    fn cell_height(&self, cx: i64, cy: i64, x: f64, y: f64) -> f64 {
        let half = self.extent / 2.0;
        let mut du = x - cx as f64 * self.extent - half;
        let mut dv = y - cy as f64 * self.extent - half;
        for _ in 0..self.cell_rotation(cx, cy) {
            let t = du;
            du = -dv;
            dv = t;
        }
        self.sample(du + half, dv + half)
    }

    /// Linear partition-of-unity weight of cell index `c` at coordinate `t`
    /// (1D): 1 deep inside the cell, ramping to 0 across the `margin` band
    /// centered on each seam. Adjacent cells' ramps sum to exactly 1.
    fn cell_weight(&self, c: i64, t: f64) -> f64 {
        if self.margin == 0.0 {
            let inside = t >= c as f64 * self.extent && t < (c + 1) as f64 * self.extent;
            return if inside { 1.0 } else { 0.0 };
        }
        let lo = c as f64 * self.extent;
        let hi = (c + 1) as f64 * self.extent;
        let up = ((t - (lo - self.margin)) / (2.0 * self.margin)).clamp(0.0, 1.0);
        let down = (((hi + self.margin) - t) / (2.0 * self.margin)).clamp(0.0, 1.0);
        up.min(down)
    }

    /// Blended, rotated height at a world position.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let cx = (x / self.extent).floor() as i64;
        let cy = (y / self.extent).floor() as i64;
        let mut sum = 0.0;
        let mut wsum = 0.0;
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let wx = self.cell_weight(cx + dx, x);
                if wx == 0.0 {
                    continue;
                }
                let wy = self.cell_weight(cy + dy, y);
                if wy == 0.0 {
                    continue;
                }
                let w = wx * wy;
                sum += w * self.cell_height(cx + dx, cy + dy, x, y);
                wsum += w;
            }
        }
        if wsum == 0.0 {
            // Unreachable for valid margins; safe fallback.
            self.cell_height(cx, cy, x, y)
        } else {
            sum / wsum
        }
    }
}
