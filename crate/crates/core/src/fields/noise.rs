//! Gradient-lattice noise, cellular noise, and domain warping.
//!
//! All noise is keyed on `(seed, lattice cell)` through the fixed integer
//! hash in [`crate::rng`], so values are reproducible across platforms with
//! no RNG state. Single-octave perlin output is rescaled to `[-1, 1]`: with
//! unit gradients the raw value is bounded by √3/2 (attained at the cell
//! center when every corner gradient points at it), so we multiply by 2/√3.
//!
//! fBM sums `octaves` copies at geometrically increasing frequency
//! (`lacunarity`) and decreasing amplitude (`gain`), which bounds the result
//! by the geometric series Σ gainⁱ.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::rng::{hash_cell, hash_to_unit, mix64};

/// Scale factor taking raw unit-gradient perlin output to `[-1, 1]`.
const PERLIN_SCALE: f64 = 1.154_700_538_379_251_5; // 2/√3

/// Base noise variant. `octaves`/`lacunarity`/`gain` in [`NoiseSpec`] apply
/// an fBM loop over any of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseKind {
    /// Gradient-lattice noise, output in `[-1, 1]` per octave.
    Perlin,
    /// Distance to the nearest jittered feature point, in cell units.
    VoronoiF1,
    /// Like `VoronoiF1` but candidate distances are folded with a polynomial
    /// smooth-min of the given width (in cell units).
    VoronoiF1Smooth { width: f64 },
    /// Bands along x: `sin(2π·x)` in the (warped, frequency-scaled) domain.
    Wave,
}

/// A complete noise field description: variant, frequency, fBM parameters,
/// and an optional domain warp applied before sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Spatial frequency in 1/meters.
    pub frequency: f64,
    pub octaves: u32,
    pub lacunarity: f64,
    /// Per-octave amplitude ratio, in (0, 1].
    pub gain: f64,
    pub seed: u64,
    /// Optional pre-warp: sample at `p + amplitude · noise3(p)`.
    pub warp: Option<Box<WarpSpec>>,
}

/// Domain warp: a vector offset field built from three decorrelated copies
/// of an inner noise spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpSpec {
    /// Maximum per-axis displacement in meters.
    pub amplitude: f64,
    pub noise: NoiseSpec,
}

impl NoiseSpec {
    pub fn perlin(seed: u64, frequency: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Perlin,
            frequency,
            octaves: 1,
            lacunarity: 2.0,
            gain: 0.5,
            seed,
            warp: None,
        }
    }

    pub fn fbm(seed: u64, frequency: f64, octaves: u32) -> Self {
        NoiseSpec { octaves, ..NoiseSpec::perlin(seed, frequency) }
    }

    pub fn with_warp(mut self, amplitude: f64, noise: NoiseSpec) -> Self {
        self.warp = Some(Box::new(WarpSpec { amplitude, noise }));
        self
    }

    /// fBM amplitude bound Σᵢ gainⁱ for i < octaves.
    pub fn amplitude_bound(&self) -> f64 {
        let mut sum = 0.0;
        let mut amp = 1.0;
        for _ in 0..self.octaves {
            sum += amp;
            amp *= self.gain;
        }
        sum
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.octaves < 1 {
            return Err("noise octaves must be >= 1".into());
        }
        if !(self.frequency > 0.0) || !self.frequency.is_finite() {
            return Err(format!("noise frequency must be positive, got {}", self.frequency));
        }
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(format!("noise gain must be in (0, 1], got {}", self.gain));
        }
        if !(self.lacunarity > 0.0) || !self.lacunarity.is_finite() {
            return Err(format!("noise lacunarity must be positive, got {}", self.lacunarity));
        }
        if let NoiseKind::VoronoiF1Smooth { width } = self.kind {
            if !(width > 0.0) || !width.is_finite() {
                return Err(format!("voronoi smooth width must be positive, got {width}"));
            }
        }
        if let Some(w) = &self.warp {
            if !(w.amplitude >= 0.0) || !w.amplitude.is_finite() {
                return Err(format!("warp amplitude must be >= 0, got {}", w.amplitude));
            }
            w.noise.validate()?;
        }
        Ok(())
    }
}

/// Unit gradient for a lattice corner, derived from the cell hash.
#[inline]
fn gradient(seed: u64, ix: i64, iy: i64, iz: i64) -> Vector3<f64> {
    let h = hash_cell(seed, ix, iy, iz);
    // z uniform in [-1, 1], azimuth uniform in [0, 2π): uniform on the sphere.
    let z = 2.0 * hash_to_unit(h) - 1.0;
    let phi = std::f64::consts::TAU * hash_to_unit(mix64(h ^ 0xd6e8_feb8_6659_fd93));
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Quintic fade 6t⁵ − 15t⁴ + 10t³: zero first and second derivative at 0, 1.
#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Single-octave gradient noise at `p` (already frequency-scaled), in `[-1, 1]`.
pub fn perlin3(seed: u64, p: Point3<f64>) -> f64 {
    let xf = p.x.floor();
    let yf = p.y.floor();
    let zf = p.z.floor();
    let (ix, iy, iz) = (xf as i64, yf as i64, zf as i64);
    let f = Vector3::new(p.x - xf, p.y - yf, p.z - zf);
    let u = fade(f.x);
    let v = fade(f.y);
    let w = fade(f.z);

    let corner = |dx: i64, dy: i64, dz: i64| -> f64 {
        let g = gradient(seed, ix + dx, iy + dy, iz + dz);
        let d = Vector3::new(f.x - dx as f64, f.y - dy as f64, f.z - dz as f64);
        g.dot(&d)
    };

    let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
    let x00 = lerp(corner(0, 0, 0), corner(1, 0, 0), u);
    let x10 = lerp(corner(0, 1, 0), corner(1, 1, 0), u);
    let x01 = lerp(corner(0, 0, 1), corner(1, 0, 1), u);
    let x11 = lerp(corner(0, 1, 1), corner(1, 1, 1), u);
    let y0 = lerp(x00, x10, v);
    let y1 = lerp(x01, x11, v);
    (lerp(y0, y1, w) * PERLIN_SCALE).clamp(-1.0, 1.0)
}

/// Jittered feature point of a lattice cell.
#[inline]
pub(crate) fn feature_point(seed: u64, ix: i64, iy: i64, iz: i64) -> Point3<f64> {
    let h = hash_cell(seed ^ 0x7f4a_7c15_9e37_79b9, ix, iy, iz);
    Point3::new(
        ix as f64 + hash_to_unit(h),
        iy as f64 + hash_to_unit(mix64(h ^ 1)),
        iz as f64 + hash_to_unit(mix64(h ^ 2)),
    )
}

/// Distance to the nearest feature point over the 3×3×3 cell neighborhood,
/// in cell units.
pub fn voronoi_f1(seed: u64, p: Point3<f64>) -> f64 {
    let (ix, iy, iz) = (p.x.floor() as i64, p.y.floor() as i64, p.z.floor() as i64);
    let mut best = f64::INFINITY;
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let fp = feature_point(seed, ix + dx, iy + dy, iz + dz);
                best = best.min((fp - p).norm());
            }
        }
    }
    best
}

/// Polynomial smooth minimum: equals `min(a, b)` when `|a−b| ≥ k`, rounds
/// the crease within a band of width `k`.
#[inline]
pub fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return a.min(b);
    }
    let h = (0.5 + 0.5 * (b - a) / k).clamp(0.0, 1.0);
    b + (a - b) * h - k * h * (1.0 - h)
}

/// Smooth maximum with the same band semantics as [`smooth_min`].
#[inline]
pub fn smooth_max(a: f64, b: f64, k: f64) -> f64 {
    -smooth_min(-a, -b, k)
}

/// F1 distance folded with smooth-min of `width` (cell units): matches
/// [`voronoi_f1`] away from cell boundaries, rounds the ridges near them.
pub fn voronoi_f1_smooth(seed: u64, p: Point3<f64>, width: f64) -> f64 {
    let (ix, iy, iz) = (p.x.floor() as i64, p.y.floor() as i64, p.z.floor() as i64);
    let mut acc = f64::INFINITY;
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let fp = feature_point(seed, ix + dx, iy + dy, iz + dz);
                let d = (fp - p).norm();
                acc = if acc.is_finite() { smooth_min(acc, d, width) } else { d };
            }
        }
    }
    acc
}

/// Per-kind single-octave evaluation at an already frequency-scaled point.
fn base_noise(kind: &NoiseKind, seed: u64, p: Point3<f64>) -> f64 {
    match kind {
        NoiseKind::Perlin => perlin3(seed, p),
        NoiseKind::VoronoiF1 => voronoi_f1(seed, p),
        NoiseKind::VoronoiF1Smooth { width } => voronoi_f1_smooth(seed, p, *width),
        NoiseKind::Wave => (std::f64::consts::TAU * p.x).sin(),
    }
}

/// Largest possible single-octave magnitude per kind, used to normalize
/// warp channels. Perlin and wave are exact; the F1 bound √3 is the farthest
/// a 3×3×3-window feature point can be from a query inside the center cell.
fn kind_bound(kind: &NoiseKind) -> f64 {
    match kind {
        NoiseKind::Perlin | NoiseKind::Wave => 1.0,
        NoiseKind::VoronoiF1 | NoiseKind::VoronoiF1Smooth { .. } => 3.0f64.sqrt(),
    }
}

/// Evaluate a noise spec at a world point: warp, scale by frequency, fBM.
pub fn noise_value(spec: &NoiseSpec, p: Point3<f64>) -> f64 {
    let p = match &spec.warp {
        Some(w) => warp_domain(p, w),
        None => p,
    };
    let mut value = 0.0;
    let mut amp = 1.0;
    let mut freq = spec.frequency;
    for octave in 0..spec.octaves {
        let seed = mix64(spec.seed ^ (octave as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let q = Point3::new(p.x * freq, p.y * freq, p.z * freq);
        value += amp * base_noise(&spec.kind, seed, q);
        amp *= spec.gain;
        freq *= spec.lacunarity;
    }
    value
}

/// Three decorrelated copies of a spec, each normalized to `[-1, 1]`.
fn noise3(spec: &NoiseSpec, p: Point3<f64>) -> Vector3<f64> {
    let norm = spec.amplitude_bound() * kind_bound(&spec.kind);
    let channel = |axis: u64| {
        let mut s = spec.clone();
        s.seed = mix64(spec.seed ^ axis.wrapping_add(0x5851_f42d_4c95_7f2d));
        (noise_value(&s, p) / norm).clamp(-1.0, 1.0)
    };
    Vector3::new(channel(1), channel(2), channel(3))
}

/// Warp a point: `p' = p + amplitude · noise3(p)`. Each channel is in
/// `[-1, 1]`, so `‖p' − p‖ ≤ amplitude · √3`.
pub fn warp_domain(p: Point3<f64>, warp: &WarpSpec) -> Point3<f64> {
    if warp.amplitude == 0.0 {
        return p;
    }
    p + noise3(&warp.noise, p) * warp.amplitude
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, substream};
    use rand::Rng;

    fn random_points(seed: u64, n: usize, scale: f64) -> Vec<Point3<f64>> {
        let mut rng = stream(substream(seed, "noise-test"));
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                )
            })
            .collect()
    }

    #[test]
    fn perlin_is_pure() {
        let p = Point3::new(1.3, 2.1, 0.4);
        assert_eq!(perlin3(7, p).to_bits(), perlin3(7, p).to_bits());
    }

    #[test]
    fn perlin_bounded_and_nonconstant() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in random_points(1, 20_000, 40.0) {
            let v = perlin3(3, p);
            assert!(v.is_finite());
            assert!((-1.0..=1.0).contains(&v), "out of range: {v}");
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi - lo > 0.5, "suspiciously flat noise: [{lo}, {hi}]");
    }

    #[test]
    fn perlin_raw_center_bound_holds() {
        // The 2/√3 rescale assumes the fade-weighted corner-distance sum
        // never exceeds √3/2. Maximize it numerically over the unit cell.
        let mut worst = 0.0f64;
        let n = 40;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let f =
                        Vector3::new(i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64);
                    let (u, v, w) = (fade(f.x), fade(f.y), fade(f.z));
                    let mut sum = 0.0;
                    for c in 0..8u32 {
                        let d = Vector3::new(
                            f.x - (c & 1) as f64,
                            f.y - ((c >> 1) & 1) as f64,
                            f.z - ((c >> 2) & 1) as f64,
                        );
                        let wu = if c & 1 == 1 { u } else { 1.0 - u };
                        let wv = if (c >> 1) & 1 == 1 { v } else { 1.0 - v };
                        let ww = if (c >> 2) & 1 == 1 { w } else { 1.0 - w };
                        sum += wu * wv * ww * d.norm();
                    }
                    worst = worst.max(sum);
                }
            }
        }
        assert!(worst <= 3.0f64.sqrt() / 2.0 + 1e-9, "bound violated: {worst}");
    }

    #[test]
    fn fbm_respects_geometric_amplitude_bound() {
        let spec = NoiseSpec::fbm(11, 0.7, 4);
        let bound = spec.amplitude_bound();
        assert!((bound - 1.875).abs() < 1e-12);
        for p in random_points(2, 10_000, 30.0) {
            let v = noise_value(&spec, p);
            assert!(v.abs() <= bound, "fbm {v} exceeds bound {bound}");
        }
    }

    #[test]
    fn autocorrelation_length_shrinks_with_frequency() {
        // Variogram at a fixed small lag: higher frequency decorrelates
        // faster, so the mean squared increment grows.
        let lag = Vector3::new(0.05, 0.0, 0.0);
        let gamma = |freq: f64| -> f64 {
            let spec = NoiseSpec::perlin(5, freq);
            random_points(3, 4000, 20.0)
                .iter()
                .map(|p| {
                    let d = noise_value(&spec, *p) - noise_value(&spec, *p + lag);
                    d * d
                })
                .sum::<f64>()
                / 4000.0
        };
        let g_low = gamma(0.5);
        let g_high = gamma(4.0);
        assert!(
            g_high > g_low * 2.0,
            "variogram did not grow with frequency: low={g_low}, high={g_high}"
        );
    }

    #[test]
    fn voronoi_f1_positive_and_within_window_bound() {
        for p in random_points(4, 5000, 25.0) {
            let v = voronoi_f1(9, p);
            assert!(v >= 0.0 && v <= 3.0f64.sqrt(), "f1 out of range: {v}");
        }
    }

    #[test]
    fn smooth_f1_lower_bounds_plain_f1() {
        let width = 0.1;
        let mut equal = 0usize;
        let pts = random_points(5, 10_000, 25.0);
        for p in &pts {
            let plain = voronoi_f1(13, *p);
            let smooth = voronoi_f1_smooth(13, *p, width);
            assert!(smooth <= plain + 1e-12, "smooth {smooth} > plain {plain}");
            if (smooth - plain).abs() < 1e-12 {
                equal += 1;
            }
        }
        // Smoothing only bites within `width` of a distance tie.
        assert!(equal as f64 / pts.len() as f64 > 0.5, "smooth-min active too often: {equal}");
    }

    #[test]
    fn warp_zero_amplitude_is_identity() {
        let w = WarpSpec { amplitude: 0.0, noise: NoiseSpec::perlin(1, 1.0) };
        let p = Point3::new(0.3, -4.5, 9.1);
        assert_eq!(warp_domain(p, &w), p);
    }

    #[test]
    fn warp_displacement_bounded() {
        for amp in [0.2, 1.5] {
            let w = WarpSpec { amplitude: amp, noise: NoiseSpec::fbm(21, 0.8, 3) };
            for p in random_points(6, 10_000, 15.0) {
                let q = warp_domain(p, &w);
                assert!(
                    (q - p).norm() <= amp * 3.0f64.sqrt() + 1e-12,
                    "warp moved too far: {}",
                    (q - p).norm()
                );
            }
        }
    }

    #[test]
    fn warp_is_pure() {
        let w = WarpSpec { amplitude: 0.7, noise: NoiseSpec::perlin(31, 1.3) };
        let p = Point3::new(2.0, 3.0, -1.0);
        let a = warp_domain(p, &w);
        let b = warp_domain(p, &w);
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        let mut s = NoiseSpec::perlin(1, 1.0);
        s.octaves = 0;
        assert!(s.validate().is_err());
        let mut s = NoiseSpec::perlin(1, 0.0);
        s.frequency = 0.0;
        assert!(s.validate().is_err());
        let mut s = NoiseSpec::perlin(1, 1.0);
        s.gain = 1.5;
        assert!(s.validate().is_err());
    }
}
