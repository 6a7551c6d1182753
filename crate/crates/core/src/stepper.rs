//! One semi-implicit ALE step: domain velocity, explicit mesh update, then a
//! monolithic Stokes-like solve on the new mesh.

use crate::ale::solve_domain_velocity;
use crate::assembly::{assemble_state_system, solve};
use crate::error::{Result, SimError};
use crate::fields::{ScalarFieldP1, VectorFieldP1};
use crate::mesh::{AxiMesh, MeshQuality};
use crate::params::{NumParams, PhysParams};

/// Geometry and flow at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub mesh: AxiMesh,
    pub u: VectorFieldP1,
    pub p: ScalarFieldP1,
    pub t: f64,
}

impl FlowState {
    /// Fluid at rest in a flat column of the given height.
    pub fn at_rest(radius: f64, height: f64, num: &NumParams) -> Result<Self> {
        let mesh = AxiMesh::structured(radius, height, num.n1, num.n3)?;
        let n = mesh.num_nodes();
        Ok(FlowState { mesh, u: VectorFieldP1::zeros(n), p: ScalarFieldP1::zeros(n), t: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub residual: f64,
    pub u_max: f64,
    pub z_cl: f64,
    pub quality: MeshQuality,
}

/// Data of the time slab `[t^n, t^{n+1}]` that both the state and the
/// adjoint solves consume: old mesh and velocity, domain velocity and the
/// already displaced new mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub mesh_old: AxiMesh,
    pub u_old: VectorFieldP1,
    pub domain_velocity: VectorFieldP1,
    pub mesh_new: AxiMesh,
    pub t_new: f64,
}

impl Slab {
    /// Domain velocity and mesh update from the state at `t^n`.
    pub fn prepare(state: &FlowState, num: &NumParams) -> Result<Self> {
        Self::prepare_guarded(state, num, f64::NEG_INFINITY)
    }

    /// As [`Slab::prepare`], failing with `DomainEmptied` when the contact
    /// line would reach `min_height`. The check runs before the mesh is
    /// moved so it takes precedence over tangling.
    pub fn prepare_guarded(state: &FlowState, num: &NumParams, min_height: f64) -> Result<Self> {
        let v = solve_domain_velocity(&state.mesh, &state.u)?.field;
        let c = state.mesh.contact_node();
        let z = state.mesh.contact_line_height() + num.dt * v.at(c)[1];
        if z <= min_height {
            return Err(SimError::DomainEmptied { height: z, limit: min_height });
        }
        let mesh_new = state.mesh.displace(&v, num.dt)?;
        Ok(Slab {
            mesh_old: state.mesh.clone(),
            u_old: state.u.clone(),
            domain_velocity: v,
            mesh_new,
            t_new: state.t + num.dt,
        })
    }

    /// State solve on the new mesh with bottom control `zeta`.
    pub fn solve_state(&self, zeta: f64, phys: &PhysParams, num: &NumParams) -> Result<(FlowState, StepDiagnostics)> {
        let system =
            assemble_state_system(&self.mesh_new, &self.mesh_old, &self.u_old, &self.domain_velocity, zeta, phys, num)?;
        let sol = solve(&system)?;
        let diag = StepDiagnostics {
            residual: sol.residual,
            u_max: sol.velocity.max_norm(),
            z_cl: self.mesh_new.contact_line_height(),
            quality: self.mesh_new.quality(),
        };
        let state = FlowState { mesh: self.mesh_new.clone(), u: sol.velocity, p: sol.pressure, t: self.t_new };
        Ok((state, diag))
    }
}

pub fn step(state: &FlowState, zeta: f64, phys: &PhysParams, num: &NumParams) -> Result<(FlowState, StepDiagnostics)> {
    Slab::prepare(state, num)?.solve_state(zeta, phys, num)
}

/// Like [`step`], but refuses to move the contact line to or below
/// `min_height` (the domain would empty out).
pub fn step_with_guard(
    state: &FlowState,
    zeta: f64,
    phys: &PhysParams,
    num: &NumParams,
    min_height: f64,
) -> Result<(FlowState, StepDiagnostics)> {
    Slab::prepare_guarded(state, num, min_height)?.solve_state(zeta, phys, num)
}
