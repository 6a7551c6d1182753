//! Vertical-only harmonic extension of the free-surface motion.

use crate::assembly::Element;
use crate::error::{Result, SimError};
use crate::fields::VectorFieldP1;
use crate::linalg::{solve_direct, TripletBuilder};
use crate::mesh::{AxiMesh, BoundaryTag};
use crate::parallel::map_indexed;
use crate::quadrature::segment_gauss2;

/// Domain velocity `(0, V_z)`: zero on the bottom, harmonic (r-weighted)
/// inside, natural on wall and axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainVelocity {
    pub field: VectorFieldP1,
}

/// Vertical velocity each free-surface node must have so that the surface
/// follows the fluid.
///
/// Node `i` gets `u_z,i - (∫_Γ u_r s φ_i r dr) / (∫_Γ φ_i r dr)`, with `s` the
/// edge slope `dz/dr`. This is the `r dr`-weighted projection of
/// `(u·ν)/ν_3` onto nodal values, so the swept volume matches the normal flux
/// of `u` through Γ exactly.
pub fn surface_vertical_velocity(mesh: &AxiMesh, u: &VectorFieldP1) -> Result<Vec<(usize, f64)>> {
    mesh.surface_normals()?;
    let mut acc: Vec<(usize, f64, f64)> = Vec::new();
    for [a, b] in mesh.free_surface_edges() {
        let (p, q) = (mesh.nodes()[a], mesh.nodes()[b]);
        let dr = q[0] - p[0];
        let slope = (q[1] - p[1]) / dr;
        let (ua, ub) = (u.at(a)[0], u.at(b)[0]);
        for (node, end) in [(a, 0usize), (b, 1)] {
            let (mut m, mut flux) = (0.0, 0.0);
            for &(s, w) in &segment_gauss2() {
                let phi = if end == 0 { 1.0 - s } else { s };
                let r = p[0] + s * dr;
                let ur = (1.0 - s) * ua + s * ub;
                m += w * dr * phi * r;
                flux += w * dr * slope * ur * phi * r;
            }
            match acc.iter_mut().find(|e| e.0 == node) {
                Some(e) => {
                    e.1 += m;
                    e.2 += flux;
                }
                None => acc.push((node, m, flux)),
            }
        }
    }
    Ok(acc.into_iter().map(|(node, m, flux)| (node, u.at(node)[1] - flux / m)).collect())
}

pub fn solve_domain_velocity(mesh: &AxiMesh, u: &VectorFieldP1) -> Result<DomainVelocity> {
    if u.len() != mesh.num_nodes() {
        return Err(SimError::DimensionMismatch(format!(
            "velocity has {} nodes, mesh has {}",
            u.len(),
            mesh.num_nodes()
        )));
    }
    let n = mesh.num_nodes();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (node, vz) in surface_vertical_velocity(mesh, u)? {
        fixed[node] = Some(vz);
    }
    for node in 0..n {
        if mesh.has_tag(node, BoundaryTag::Bottom) {
            fixed[node] = Some(0.0);
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut free = 0;
    for node in 0..n {
        if fixed[node].is_none() {
            index[node] = free;
            free += 1;
        }
    }
    let mut vz: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if free > 0 {
        let locals = map_indexed(mesh.triangles().len(), |k| {
            let e = Element::new(mesh, k);
            let wr = e.area * (e.pts[0][0] + e.pts[1][0] + e.pts[2][0]) / 3.0;
            let m: [[f64; 3]; 3] = std::array::from_fn(|a| {
                std::array::from_fn(|c| wr * (e.grads[a][0] * e.grads[c][0] + e.grads[a][1] * e.grads[c][1]))
            });
            (e.nodes, m)
        });
        let mut builder = TripletBuilder::new(free, free);
        let mut rhs = vec![0.0; free];
        for (nodes, m) in locals {
            for a in 0..3 {
                let row = index[nodes[a]];
                if row == usize::MAX {
                    continue;
                }
                for c in 0..3 {
                    match fixed[nodes[c]] {
                        Some(val) => rhs[row] -= m[a][c] * val,
                        None => builder.push(row, index[nodes[c]], m[a][c]),
                    }
                }
            }
        }
        let (x, _) = solve_direct(&builder.build(), &rhs)?;
        for node in 0..n {
            if index[node] != usize::MAX {
                vz[node] = x[index[node]];
            }
        }
    }
    Ok(DomainVelocity { field: VectorFieldP1::from_fn(n, |i| [0.0, vz[i]]) })
}
