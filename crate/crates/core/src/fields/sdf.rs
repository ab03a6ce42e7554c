//! Analytic signed distances and stock program constructors.
//!
//! Sign convention everywhere: negative inside the solid, zero on the
//! surface, positive outside.

use nalgebra::{Point3, Vector3};

use super::{FieldProgram, ProgramBuilder, RoundSegment};

/// Exact distance to an axis-aligned box.
pub fn box_distance(p: Point3<f64>, center: Point3<f64>, half_extents: Vector3<f64>) -> f64 {
    let q = Vector3::new(
        (p.x - center.x).abs() - half_extents.x,
        (p.y - center.y).abs() - half_extents.y,
        (p.z - center.z).abs() - half_extents.z,
    );
    let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
    outside + q.x.max(q.y.max(q.z)).min(0.0)
}

/// Exact distance to a round cone: the convex hull of the sphere `(a, ra)`
/// and the sphere `(b, rb)`.
pub fn round_cone_distance(p: Point3<f64>, seg: &RoundSegment) -> f64 {
    let ba = seg.b - seg.a;
    let l2 = ba.dot(&ba);
    let rr = seg.ra - seg.rb;
    // Degenerate: zero-length segment or one sphere containing the other.
    if l2 <= rr * rr {
        return if seg.ra >= seg.rb {
            (p - seg.a).norm() - seg.ra
        } else {
            (p - seg.b).norm() - seg.rb
        };
    }
    let a2 = l2 - rr * rr;
    let il2 = 1.0 / l2;
    let pa = p - seg.a;
    let y = pa.dot(&ba);
    let z = y - l2;
    let xv = pa * l2 - ba * y;
    let x2 = xv.dot(&xv);
    let y2 = y * y * l2;
    let z2 = z * z * l2;
    let k = rr.signum() * rr * rr * x2;
    if z.signum() * a2 * z2 > k {
        (x2 + z2).sqrt() * il2 - seg.rb
    } else if y.signum() * a2 * y2 < k {
        (x2 + y2).sqrt() * il2 - seg.ra
    } else {
        ((x2 * a2 * il2).sqrt() + y * rr) * il2 - seg.ra
    }
}

/// Distance to the union of round segments.
pub fn capsule_chain_distance(p: Point3<f64>, segments: &[RoundSegment]) -> f64 {
    let mut best = f64::INFINITY;
    for seg in segments {
        best = best.min(round_cone_distance(p, seg));
    }
    best
}

/// Program: sphere of `radius` at `center`.
pub fn sphere(center: Point3<f64>, radius: f64) -> FieldProgram {
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let s = b.sdf_sphere(p, center, radius);
    b.finish(s)
}

/// Program: axis-aligned box.
pub fn aabb_box(center: Point3<f64>, half_extents: Vector3<f64>) -> FieldProgram {
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let s = b.sdf_box(p, center, half_extents);
    b.finish(s)
}

/// Program: half-space `dot(p, normal) ≤ offset` is solid.
pub fn half_space(normal: Vector3<f64>, offset: f64) -> FieldProgram {
    let n = normal.normalize();
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let s = b.sdf_plane(p, n, offset);
    b.finish(s)
}

/// Program: torus lying in the xz plane through `center`, ring radius `major`,
/// tube radius `minor`. Built from arithmetic nodes.
pub fn torus(center: Point3<f64>, major: f64, minor: f64) -> FieldProgram {
    let mut b = ProgramBuilder::new();
    let p = b.position();
    let cv = b.constant_vec(center.coords);
    let rel = b.vec_sub(p, cv);
    let x = b.split_x(rel);
    let y = b.split_y(rel);
    let z = b.split_z(rel);
    let x2 = b.mul(x, x);
    let z2 = b.mul(z, z);
    let xz2 = b.add(x2, z2);
    let ring = b.sqrt(xz2);
    let major_c = b.constant(major);
    let q = b.sub(ring, major_c);
    let q2 = b.mul(q, q);
    let y2 = b.mul(y, y);
    let qy2 = b.add(q2, y2);
    let d = b.sqrt(qy2);
    let minor_c = b.constant(minor);
    let out = b.sub(d, minor_c);
    b.finish(out)
}
