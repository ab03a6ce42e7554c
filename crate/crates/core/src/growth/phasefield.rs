//! Phase-field solidification on a 3D grid.
//!
//! Couples a phase variable A to a temperature field B: supercooling drives
//! the interface outward through the tilt term m = α·arctan(γ(T_eq − B))/π,
//! while released latent heat (κ·∂A/∂t) warms the front and throttles it.
//! Forward Euler with a 7-point Laplacian and zero-flux (mirrored) borders;
//! the solid region is meshed as the A = 0.5 isosurface.

use nalgebra::{Point3, Vector3};

use super::GrowthError;
use crate::mesh::Mesh;
use crate::meshing::marching_cubes_lattice;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFieldState {
    /// Lattice point counts, x fastest in the field vectors.
    pub dims: [usize; 3],
    /// Grid spacing, meters.
    pub spacing: f64,
    /// Phase: 1 solid, 0 melt.
    pub a: Vec<f64>,
    /// Temperature.
    pub b: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub t_eq: f64,
    pub dt: f64,
}

impl PhaseFieldState {
    /// Melt at temperature 0 with a stability-limited default step: the
    /// phase equation diffuses at ε²/τ and the temperature at 1, so dt is
    /// 0.2·h²·τ/max(τ, ε²) capped at h²/8.
    pub fn new(
        dims: [usize; 3],
        spacing: f64,
        alpha: f64,
        gamma: f64,
        tau: f64,
        epsilon: f64,
        kappa: f64,
        t_eq: f64,
    ) -> Self {
        assert!(spacing > 0.0 && tau > 0.0 && epsilon > 0.0);
        let h2 = spacing * spacing;
        let dt = (0.2 * h2 * tau / tau.max(epsilon * epsilon)).min(h2 / 8.0);
        let n = dims[0] * dims[1] * dims[2];
        PhaseFieldState {
            dims,
            spacing,
            a: vec![0.0; n],
            b: vec![0.0; n],
            alpha,
            gamma,
            tau,
            epsilon,
            kappa,
            t_eq,
            dt,
        }
    }

    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    /// Nucleate a solid ball, in lattice coordinates.
    pub fn seed_ball(&mut self, center: [f64; 3], radius_cells: f64) {
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    let d2 = (x as f64 - center[0]).powi(2)
                        + (y as f64 - center[1]).powi(2)
                        + (z as f64 - center[2]).powi(2);
                    if d2 <= radius_cells * radius_cells {
                        let i = self.index(x, y, z);
                        self.a[i] = 1.0;
                    }
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        if self.dims.iter().any(|d| *d < 8) {
            return Err(GrowthError::InvalidParams(format!(
                "grid must be at least 8³, got {:?}",
                self.dims
            )));
        }
        let n = self.dims[0] * self.dims[1] * self.dims[2];
        if self.a.len() != n || self.b.len() != n {
            return Err(GrowthError::InvalidParams("field length != grid size".into()));
        }
        if !(self.dt > 0.0) || !(self.spacing > 0.0) || !(self.tau > 0.0) {
            return Err(GrowthError::InvalidParams("dt, spacing, tau must be positive".into()));
        }
        Ok(())
    }
}

/// One forward-Euler update, writing into the scratch buffers and swapping.
/// Out-of-range neighbors mirror to the border sample (zero-flux walls).
fn euler_step(state: &mut PhaseFieldState, next_a: &mut [f64], next_b: &mut [f64]) {
    let [nx, ny, nz] = state.dims;
    let inv_h2 = 1.0 / (state.spacing * state.spacing);
    let eps2 = state.epsilon * state.epsilon;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = state.index(x, y, z);
                let lap = |f: &[f64]| -> f64 {
                    let c = f[i];
                    let xm = f[state.index(x.saturating_sub(1), y, z)];
                    let xp = f[state.index((x + 1).min(nx - 1), y, z)];
                    let ym = f[state.index(x, y.saturating_sub(1), z)];
                    let yp = f[state.index(x, (y + 1).min(ny - 1), z)];
                    let zm = f[state.index(x, y, z.saturating_sub(1))];
                    let zp = f[state.index(x, y, (z + 1).min(nz - 1))];
                    (xm + xp + ym + yp + zm + zp - 6.0 * c) * inv_h2
                };
                let a = state.a[i];
                let b = state.b[i];
                let m = state.alpha / std::f64::consts::PI
                    * (state.gamma * (state.t_eq - b)).atan();
                let da = state.dt / state.tau
                    * (eps2 * lap(&state.a) + a * (1.0 - a) * (a - 0.5 + m));
                let new_a = (a + da).clamp(-0.1, 1.1);
                next_a[i] = new_a;
                next_b[i] = b + state.dt * lap(&state.b) + state.kappa * (new_a - a);
            }
        }
    }
    state.a.copy_from_slice(next_a);
    state.b.copy_from_slice(next_b);
}

/// Integrate `steps` updates, then mesh the A = 0.5 isosurface of the solid.
pub fn dendritic_growth(state: &mut PhaseFieldState, steps: u32) -> Result<Mesh, GrowthError> {
    state.validate()?;
    let n = state.a.len();
    let mut next_a = vec![0.0; n];
    let mut next_b = vec![0.0; n];
    for step in 0..steps {
        euler_step(state, &mut next_a, &mut next_b);
        if state.a.iter().chain(state.b.iter()).any(|x| !x.is_finite()) {
            return Err(GrowthError::Diverged { step, what: "phase-field grid".into() });
        }
    }
    let negated: Vec<f64> = state.a.iter().map(|a| -a).collect();
    marching_cubes_lattice(
        &negated,
        state.dims,
        Point3::origin(),
        Vector3::repeat(state.spacing),
        -0.5,
    )
    .map_err(|e| GrowthError::InvalidParams(e.to_string()))
}
