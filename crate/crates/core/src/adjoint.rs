//! Per-slab adjoint problem. The operator is the transpose of the state
//! operator of the same slab; the load is the kinetic-energy sensitivity
//! `M u^{n+1}`.

use crate::assembly::{
    bottom_flux, build_system, form_b, form_s_p, mass_matrix, solve, velocity_operator, LinearSystem, Orientation,
};
use crate::error::{Result, SimError};
use crate::fields::{ScalarFieldP1, VectorFieldP1};
use crate::mesh::AxiMesh;
use crate::params::{NumParams, PhysParams};
use crate::stepper::Slab;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub z: VectorFieldP1,
    pub q: ScalarFieldP1,
    pub slab_index: usize,
    /// `∫_{Σ_b} z·e_3 r dr`.
    pub bottom_integral: f64,
    pub residual: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn assemble_adjoint_system(
    mesh_new: &AxiMesh,
    mesh_old: &AxiMesh,
    u_old: &VectorFieldP1,
    v_old: &VectorFieldP1,
    u_new: &VectorFieldP1,
    phys: &PhysParams,
    num: &NumParams,
) -> Result<LinearSystem> {
    if mesh_new.topology() != mesh_old.topology() {
        return Err(SimError::DimensionMismatch("meshes do not share node numbering".into()));
    }
    if u_new.len() != mesh_new.num_nodes() {
        return Err(SimError::DimensionMismatch(format!(
            "u_new has {} nodes, mesh has {}",
            u_new.len(),
            mesh_new.num_nodes()
        )));
    }
    let k = velocity_operator(mesh_new, u_old, v_old, phys, num)?;
    let g = form_b(mesh_new);
    let sp = form_s_p(mesh_new, num.cs);
    let rhs_v = mass_matrix(mesh_new).mul_vec(&u_new.to_flat());
    let rhs_p = vec![0.0; mesh_new.num_nodes()];
    Ok(build_system(mesh_new, &k, &g, &sp, &rhs_v, &rhs_p, Orientation::Adjoint))
}

/// Assembles from a prepared slab and its computed new velocity.
pub fn assemble_for_slab(
    slab: &Slab,
    u_new: &VectorFieldP1,
    phys: &PhysParams,
    num: &NumParams,
) -> Result<LinearSystem> {
    assemble_adjoint_system(&slab.mesh_new, &slab.mesh_old, &slab.u_old, &slab.domain_velocity, u_new, phys, num)
}

pub fn solve_adjoint(system: &LinearSystem, mesh_new: &AxiMesh, slab_index: usize) -> Result<AdjointState> {
    let sol = solve(system)?;
    let bottom_integral = bottom_flux(mesh_new, &sol.velocity);
    Ok(AdjointState { z: sol.velocity, q: sol.pressure, slab_index, bottom_integral, residual: sol.residual })
}
