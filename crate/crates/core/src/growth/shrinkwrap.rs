//! Transfer a per-vertex scalar field from one mesh onto another by
//! closest-point projection.
//!
//! Every target vertex is projected to its nearest point on the source
//! surface and picks up the barycentrically interpolated field value there.
//! Vertices with no source point inside the search radius come back as
//! `None` so callers can mask them out.

use nalgebra::Point3;

use super::GrowthError;
use crate::mesh::Mesh;

/// Closest point on triangle `abc` to `p`, with barycentric coordinates.
fn closest_on_triangle(
    p: Point3<f64>,
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
) -> (Point3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Project each target vertex onto the source surface and interpolate the
/// source's per-vertex field there. Vertices farther than `search_radius`
/// from the source get `None`.
pub fn shrinkwrap_project(
    source: &Mesh,
    target: &Mesh,
    search_radius: f64,
) -> Result<Vec<Option<f64>>, GrowthError> {
    let field = source
        .vertex_field
        .as_ref()
        .ok_or_else(|| GrowthError::InvalidParams("source mesh carries no vertex field".into()))?;
    if field.len() != source.vertex_count() {
        return Err(GrowthError::InvalidParams("source field length != vertex count".into()));
    }
    if source.is_empty() {
        return Err(GrowthError::InvalidParams("source mesh has no faces".into()));
    }
    if !(search_radius > 0.0) {
        return Err(GrowthError::InvalidParams("search radius must be positive".into()));
    }

    let mut out = Vec::with_capacity(target.vertex_count());
    for p in &target.positions {
        let mut best: Option<(f64, f64)> = None;
        for face in &source.faces {
            let [ia, ib, ic] = face.map(|v| v as usize);
            let (q, bary) = closest_on_triangle(
                *p,
                source.positions[ia],
                source.positions[ib],
                source.positions[ic],
            );
            let d = (p - q).norm();
            if best.is_none_or(|(bd, _)| d < bd) {
                let value = bary[0] * field[ia] + bary[1] * field[ib] + bary[2] * field[ic];
                best = Some((d, value));
            }
        }
        out.push(best.filter(|(d, _)| *d <= search_radius).map(|(_, v)| v));
    }
    Ok(out)
}
