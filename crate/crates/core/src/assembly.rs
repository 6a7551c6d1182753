//! Axisymmetric P1 weak forms and monolithic system assembly.
//!
//! Every volume integral carries the weight `r` (the common `2π` is dropped).
//! Velocity blocks use the interleaved layout `2 * node + component` with
//! component 0 radial and 1 vertical; pressure blocks are indexed by node.
//! Element contributions are computed independently (in parallel with the
//! `parallel` feature) and accumulated in element order.

use std::sync::OnceLock;

use crate::error::{Result, SimError};
use crate::fields::{ScalarFieldP1, VectorFieldP1};
use crate::linalg::{solve_direct, SparseMatrix, TripletBuilder};
use crate::mesh::{AxiMesh, BoundaryTag};
use crate::parallel::map_indexed;
use crate::params::{beta_h, NumParams, PhysParams};
use crate::quadrature::{collapsed_rule, segment_gauss2, segment_gauss3, triangle_degree5, TriPoint};

/// Geometry of one triangle: vertices, area and constant basis gradients.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub nodes: [usize; 3],
    pub pts: [[f64; 2]; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn new(mesh: &AxiMesh, k: usize) -> Self {
        let nodes = mesh.triangles()[k];
        let pts = mesh.triangle_points(k);
        let [p0, p1, p2] = pts;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grads = [
            [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
            [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
            [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
        ];
        Element { nodes, pts, area: 0.5 * twice, grads }
    }

    pub fn radius_at(&self, bary: &[f64; 3]) -> f64 {
        bary[0] * self.pts[0][0] + bary[1] * self.pts[1][0] + bary[2] * self.pts[2][0]
    }

    /// Longest edge.
    pub fn diameter(&self) -> f64 {
        let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        d(self.pts[0], self.pts[1]).max(d(self.pts[1], self.pts[2])).max(d(self.pts[2], self.pts[0]))
    }

    fn gradient_of(&self, f: impl Fn(usize) -> f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..3 {
            let v = f(self.nodes[a]);
            g[0] += v * self.grads[a][0];
            g[1] += v * self.grads[a][1];
        }
        g
    }

    /// `r * div(w)` for a P1 vector field at a quadrature point, with
    /// `div w = dr w_r + w_r / r + dz w_z`.
    fn r_div(&self, w: &VectorFieldP1, bary: &[f64; 3]) -> f64 {
        let gr = self.gradient_of(|i| w.at(i)[0]);
        let gz = self.gradient_of(|i| w.at(i)[1]);
        let r = self.radius_at(bary);
        let wr: f64 = (0..3).map(|a| bary[a] * w.at(self.nodes[a])[0]).sum();
        r * gr[0] + wr + r * gz[1]
    }

    fn interpolate(&self, w: &VectorFieldP1, bary: &[f64; 3]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for a in 0..3 {
            let v = w.at(self.nodes[a]);
            out[0] += bary[a] * v[0];
            out[1] += bary[a] * v[1];
        }
        out
    }
}

type VelLocal = [[f64; 6]; 6];

fn check_len(mesh: &AxiMesh, field: &VectorFieldP1, name: &str) -> Result<()> {
    if field.len() != mesh.num_nodes() {
        return Err(SimError::DimensionMismatch(format!(
            "{name} has {} nodes, mesh has {}",
            field.len(),
            mesh.num_nodes()
        )));
    }
    Ok(())
}

fn assemble_velocity(mesh: &AxiMesh, local: impl Fn(&Element) -> VelLocal + Sync + Send) -> TripletBuilder {
    let n = 2 * mesh.num_nodes();
    let blocks = map_indexed(mesh.triangles().len(), |k| {
        let e = Element::new(mesh, k);
        (e.nodes, local(&e))
    });
    let mut b = TripletBuilder::new(n, n);
    for (nodes, m) in blocks {
        for i in 0..6 {
            for j in 0..6 {
                if m[i][j] != 0.0 {
                    b.push(2 * nodes[i / 2] + i % 2, 2 * nodes[j / 2] + j % 2, m[i][j]);
                }
            }
        }
    }
    b
}

/// `∫ u·v r` over the domain.
pub fn mass_matrix(mesh: &AxiMesh) -> SparseMatrix {
    let rule = triangle_degree5();
    assemble_velocity(mesh, |e| {
        let mut m = [[0.0; 6]; 6];
        for q in &rule {
            let w = q.weight * e.area * e.radius_at(&q.bary);
            for a in 0..3 {
                for b in 0..3 {
                    let v = w * q.bary[a] * q.bary[b];
                    m[2 * a][2 * b] += v;
                    m[2 * a + 1][2 * b + 1] += v;
                }
            }
        }
        m
    })
    .build()
}

/// `∫ φ_a φ_b / r` on one element; entries touching an axis node are zero
/// (those radial dofs are constrained).
fn hoop_integrals(e: &Element) -> [[f64; 3]; 3] {
    let on_axis = |a: usize| e.pts[a][0] == 0.0;
    let apex = (0..3).min_by(|&a, &b| e.pts[a][0].total_cmp(&e.pts[b][0])).expect("three vertices");
    static RULES: OnceLock<[Vec<TriPoint>; 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| std::array::from_fn(|apex| collapsed_rule(12, apex)));
    let mut h = [[0.0; 3]; 3];
    for q in &rules[apex] {
        let r = e.radius_at(&q.bary);
        if r <= 0.0 {
            continue;
        }
        let w = q.weight * e.area / r;
        for a in 0..3 {
            for b in 0..3 {
                if !on_axis(a) && !on_axis(b) {
                    h[a][b] += w * q.bary[a] * q.bary[b];
                }
            }
        }
    }
    h
}

/// Viscous form `(ν/2)(∇u+∇uᵀ, ∇v+∇vᵀ)` in cylindrical coordinates plus
/// wall friction `β ∫_Σ u·v`.
pub fn form_a(mesh: &AxiMesh, beta: f64, phys: &PhysParams) -> SparseMatrix {
    let nu = phys.nu;
    let mut b = assemble_velocity(mesh, |e| {
        let rbar = (e.pts[0][0] + e.pts[1][0] + e.pts[2][0]) / 3.0;
        let wr = e.area * rbar;
        let hoop = hoop_integrals(e);
        let g = &e.grads;
        let mut m = [[0.0; 6]; 6];
        for a in 0..3 {
            for c in 0..3 {
                // test a, trial c
                m[2 * a][2 * c] = 2.0 * nu * (g[c][0] * g[a][0] + 0.5 * g[c][1] * g[a][1]) * wr + 2.0 * nu * hoop[a][c];
                m[2 * a + 1][2 * c + 1] = 2.0 * nu * (g[c][1] * g[a][1] + 0.5 * g[c][0] * g[a][0]) * wr;
                m[2 * a][2 * c + 1] = nu * g[c][0] * g[a][1] * wr;
                m[2 * a + 1][2 * c] = nu * g[c][1] * g[a][0] * wr;
            }
        }
        m
    });
    if beta != 0.0 {
        for e in mesh.edges_with(BoundaryTag::Wall) {
            let [i, j] = e.nodes;
            let (p, q) = (mesh.nodes()[i], mesh.nodes()[j]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let gauss = segment_gauss2();
            for (na, ta) in [(i, 0usize), (j, 1)] {
                for (nb, tb) in [(i, 0usize), (j, 1)] {
                    let mut v = 0.0;
                    for &(s, w) in &gauss {
                        let phi = |t: usize| if t == 0 { 1.0 - s } else { s };
                        let r = p[0] + s * (q[0] - p[0]);
                        v += w * len * r * phi(ta) * phi(tb);
                    }
                    for comp in 0..2 {
                        b.push(2 * na + comp, 2 * nb + comp, beta * v);
                    }
                }
            }
        }
    }
    b.build()
}

/// `b(v, π) = -(div v, π)` as a `2N x N` matrix (rows: velocity test dofs).
pub fn form_b(mesh: &AxiMesh) -> SparseMatrix {
    let rule = triangle_degree5();
    let blocks = map_indexed(mesh.triangles().len(), |k| {
        let e = Element::new(mesh, k);
        let mut m = [[0.0; 3]; 6];
        for q in &rule {
            let r = e.radius_at(&q.bary);
            let w = q.weight * e.area;
            for a in 0..3 {
                let rdiv_r = r * e.grads[a][0] + q.bary[a];
                let rdiv_z = r * e.grads[a][1];
                for k in 0..3 {
                    m[2 * a][k] -= w * rdiv_r * q.bary[k];
                    m[2 * a + 1][k] -= w * rdiv_z * q.bary[k];
                }
            }
        }
        (e.nodes, m)
    });
    let mut b = TripletBuilder::new(2 * mesh.num_nodes(), mesh.num_nodes());
    for (nodes, m) in blocks {
        for (i, row) in m.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                b.push(2 * nodes[i / 2] + i % 2, nodes[k], *v);
            }
        }
    }
    b.build()
}

/// ALE transport `(((w - V)·∇) u, v) - (div(V) u, v)`.
pub fn form_c_ale(mesh: &AxiMesh, w: &VectorFieldP1, vel: &VectorFieldP1) -> Result<SparseMatrix> {
    check_len(mesh, w, "w")?;
    check_len(mesh, vel, "V")?;
    let rule = triangle_degree5();
    Ok(assemble_velocity(mesh, |e| {
        let mut m = [[0.0; 6]; 6];
        for q in &rule {
            let r = e.radius_at(&q.bary);
            let wq = e.interpolate(w, &q.bary);
            let vq = e.interpolate(vel, &q.bary);
            let rel = [wq[0] - vq[0], wq[1] - vq[1]];
            let r_div_v = e.r_div(vel, &q.bary);
            let weight = q.weight * e.area;
            for a in 0..3 {
                for c in 0..3 {
                    let adv = rel[0] * e.grads[c][0] + rel[1] * e.grads[c][1];
                    let v = weight * (r * adv * q.bary[a] - r_div_v * q.bary[c] * q.bary[a]);
                    m[2 * a][2 * c] += v;
                    m[2 * a + 1][2 * c + 1] += v;
                }
            }
        }
        m
    })
    .build())
}

/// Skew-symmetrising ALE stabilisation
/// `½(div(w) u, v) - ½∫_Γ (w - V)·ν u·v`.
pub fn form_s(mesh: &AxiMesh, w: &VectorFieldP1, vel: &VectorFieldP1) -> Result<SparseMatrix> {
    check_len(mesh, w, "w")?;
    check_len(mesh, vel, "V")?;
    let rule = triangle_degree5();
    let mut b = assemble_velocity(mesh, |e| {
        let mut m = [[0.0; 6]; 6];
        for q in &rule {
            let v0 = 0.5 * q.weight * e.area * e.r_div(w, &q.bary);
            for a in 0..3 {
                for c in 0..3 {
                    let v = v0 * q.bary[a] * q.bary[c];
                    m[2 * a][2 * c] += v;
                    m[2 * a + 1][2 * c + 1] += v;
                }
            }
        }
        m
    });
    let normals = mesh.surface_normals()?;
    for (edge, nu) in mesh.free_surface_edges().into_iter().zip(normals) {
        let (p, q) = (mesh.nodes()[edge[0]], mesh.nodes()[edge[1]]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for &(s, wt) in &segment_gauss3() {
            let phi = [1.0 - s, s];
            let r = p[0] + s * (q[0] - p[0]);
            let rel: [f64; 2] = std::array::from_fn(|c| {
                phi[0] * (w.at(edge[0])[c] - vel.at(edge[0])[c]) + phi[1] * (w.at(edge[1])[c] - vel.at(edge[1])[c])
            });
            let flux = rel[0] * nu[0] + rel[1] * nu[1];
            for a in 0..2 {
                for c in 0..2 {
                    let v = -0.5 * wt * len * r * flux * phi[a] * phi[c];
                    for comp in 0..2 {
                        b.push(2 * edge[a] + comp, 2 * edge[c] + comp, v);
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// Free-surface stabilisation
/// `½∫_Γ γ ν₃² ∂τ(u·ν/ν₃) ∂τ(v·ν/ν₃)` evaluated edge by edge.
pub fn form_s_gamma(mesh: &AxiMesh, phys: &PhysParams) -> Result<SparseMatrix> {
    let normals = mesh.surface_normals()?;
    let n = 2 * mesh.num_nodes();
    let mut b = TripletBuilder::new(n, n);
    for (edge, nu) in mesh.free_surface_edges().into_iter().zip(normals) {
        let (p, q) = (mesh.nodes()[edge[0]], mesh.nodes()[edge[1]]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let r_mean = 0.5 * (p[0] + q[0]);
        let sign = [-1.0, 1.0];
        for a in 0..2 {
            for c in 0..2 {
                for ca in 0..2 {
                    for cc in 0..2 {
                        // ν₃² (sa νca / (ν₃ len)) (sc νcc / (ν₃ len)) * len * r_mean
                        let v = 0.5 * phys.gamma * r_mean * sign[a] * sign[c] * nu[ca] * nu[cc] / len;
                        b.push(2 * edge[a] + ca, 2 * edge[c] + cc, v);
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// Brezzi–Pitkäranta pressure stabilisation `C_s Σ_K h_K² ∫_K ∇p·∇π`.
pub fn form_s_p(mesh: &AxiMesh, cs: f64) -> SparseMatrix {
    let n = mesh.num_nodes();
    let mut b = TripletBuilder::new(n, n);
    if cs == 0.0 {
        return b.build();
    }
    let blocks = map_indexed(mesh.triangles().len(), |k| {
        let e = Element::new(mesh, k);
        let h = e.diameter();
        let rbar = (e.pts[0][0] + e.pts[1][0] + e.pts[2][0]) / 3.0;
        let scale = cs * h * h * e.area * rbar;
        let m: [[f64; 3]; 3] = std::array::from_fn(|a| {
            std::array::from_fn(|c| scale * (e.grads[a][0] * e.grads[c][0] + e.grads[a][1] * e.grads[c][1]))
        });
        (e.nodes, m)
    });
    for (nodes, m) in blocks {
        for a in 0..3 {
            for c in 0..3 {
                b.push(nodes[a], nodes[c], m[a][c]);
            }
        }
    }
    b.build()
}

/// Consistency correction for the pressure stabilisation under gravity:
/// `-C_s Σ_K h_K² ∫_K g ∂_z π`, making the hydrostatic state exact.
pub fn rhs_pressure_gravity(mesh: &AxiMesh, cs: f64, g: f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.num_nodes()];
    if cs == 0.0 {
        return out;
    }
    let blocks = map_indexed(mesh.triangles().len(), |k| {
        let e = Element::new(mesh, k);
        let h = e.diameter();
        let rbar = (e.pts[0][0] + e.pts[1][0] + e.pts[2][0]) / 3.0;
        let scale = cs * h * h * e.area * rbar * g;
        (e.nodes, [-scale * e.grads[0][1], -scale * e.grads[1][1], -scale * e.grads[2][1]])
    });
    for (nodes, v) in blocks {
        for a in 0..3 {
            out[nodes[a]] += v[a];
        }
    }
    out
}

/// Load vector: gravity, bottom stress `(p̄ + ζ) e₃`, surface tension
/// `-∫_Γ γ div_Γ v` and the contact-line term `γ cos θ_s v·b_s` at the
/// contact node (weighted by the wall radius).
pub fn rhs_f(mesh: &AxiMesh, zeta: f64, phys: &PhysParams) -> Result<Vec<f64>> {
    let mut f = vec![0.0; 2 * mesh.num_nodes()];
    let rule = triangle_degree5();
    if phys.g != 0.0 {
        let blocks = map_indexed(mesh.triangles().len(), |k| {
            let e = Element::new(mesh, k);
            let mut v = [0.0; 3];
            for q in &rule {
                let w = q.weight * e.area * e.radius_at(&q.bary);
                for a in 0..3 {
                    v[a] -= phys.g * w * q.bary[a];
                }
            }
            (e.nodes, v)
        });
        for (nodes, v) in blocks {
            for a in 0..3 {
                f[2 * nodes[a] + 1] += v[a];
            }
        }
    }
    let traction = phys.p_bar + zeta;
    if traction != 0.0 {
        for (node, w) in bottom_weights(mesh) {
            f[2 * node + 1] += traction * w;
        }
    }
    if phys.gamma != 0.0 {
        mesh.surface_normals()?;
        for edge in mesh.free_surface_edges() {
            let (p, q) = (mesh.nodes()[edge[0]], mesh.nodes()[edge[1]]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let t = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
            let r_mean = 0.5 * (p[0] + q[0]);
            for (a, sign) in [(0usize, -1.0), (1, 1.0)] {
                // r t·∂s v integrates to t_c * sign * r_mean; the hoop part v_r to len/2
                f[2 * edge[a]] -= phys.gamma * (t[0] * sign * r_mean + 0.5 * len);
                f[2 * edge[a] + 1] -= phys.gamma * t[1] * sign * r_mean;
            }
        }
        let contact = mesh.contact_node();
        f[2 * contact + 1] += phys.gamma * phys.theta_s.cos() * mesh.nodes()[contact][0];
    }
    Ok(f)
}

/// `∫_{Σ_b} φ_i r dr` for every bottom node.
pub fn bottom_weights(mesh: &AxiMesh) -> Vec<(usize, f64)> {
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for e in mesh.edges_with(BoundaryTag::Bottom) {
        let [i, j] = e.nodes;
        let (p, q) = (mesh.nodes()[i], mesh.nodes()[j]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for (node, t) in [(i, 0usize), (j, 1)] {
            let mut v = 0.0;
            for &(s, w) in &segment_gauss2() {
                let phi = if t == 0 { 1.0 - s } else { s };
                v += w * len * (p[0] + s * (q[0] - p[0])) * phi;
            }
            match acc.iter_mut().find(|(n, _)| *n == node) {
                Some(slot) => slot.1 += v,
                None => acc.push((node, v)),
            }
        }
    }
    acc
}

/// `∫_{Σ_b} w·e₃ r dr` for a P1 vector field.
pub fn bottom_flux(mesh: &AxiMesh, w: &VectorFieldP1) -> f64 {
    bottom_weights(mesh).iter().map(|&(n, wt)| wt * w.at(n)[1]).sum()
}

/// Unknown of the monolithic system attached to one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    VelocityR = 0,
    VelocityZ = 1,
    Pressure = 2,
}

/// Maps `(node, field)` to a row of the reduced system. Radial velocity at
/// wall and axis nodes is constrained to zero and has no row.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    rows: Vec<Option<usize>>,
    num_free: usize,
}

impl DofMap {
    pub fn new(mesh: &AxiMesh) -> Self {
        let mut rows = Vec::with_capacity(3 * mesh.num_nodes());
        let mut next = 0;
        for node in 0..mesh.num_nodes() {
            let fixed = mesh.has_tag(node, BoundaryTag::Wall) || mesh.has_tag(node, BoundaryTag::Axis);
            for field in 0..3 {
                if field == 0 && fixed {
                    rows.push(None);
                } else {
                    rows.push(Some(next));
                    next += 1;
                }
            }
        }
        DofMap { rows, num_free: next }
    }

    pub fn row(&self, node: usize, field: Field) -> Option<usize> {
        self.rows[3 * node + field as usize]
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len() / 3
    }

    fn velocity_row(&self, dof: usize) -> Option<usize> {
        self.rows[3 * (dof / 2) + dof % 2]
    }
}

/// Assembled operator and right-hand side for one state or adjoint solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
}

/// Whether the blocks enter as assembled or as the transposed (adjoint)
/// operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    State,
    Adjoint,
}

/// Velocity–velocity operator `(1/Δt)M + A + C_ALE + S + Δt S_Γ` on the new
/// mesh with `w`, `V` transported from the old mesh by node identity.
pub fn velocity_operator(
    mesh_new: &AxiMesh,
    u_old: &VectorFieldP1,
    v_old: &VectorFieldP1,
    phys: &PhysParams,
    num: &NumParams,
) -> Result<SparseMatrix> {
    let dt = num.dt;
    let beta = beta_h(phys.chi, mesh_new.wall_element_height(), phys.nu);
    let mass = mass_matrix(mesh_new).scale(1.0 / dt);
    let a = form_a(mesh_new, beta, phys);
    let c = form_c_ale(mesh_new, u_old, v_old)?;
    let s = form_s(mesh_new, u_old, v_old)?;
    let sg = form_s_gamma(mesh_new, phys)?.scale(dt);
    Ok(SparseMatrix::sum(&[&mass, &a, &c, &s, &sg]))
}

/// Combines the blocks `[[K, G], [-Gᵀ, S_p]]` (or the transpose of the whole
/// operator) into the reduced system.
pub fn build_system(
    mesh: &AxiMesh,
    k: &SparseMatrix,
    g: &SparseMatrix,
    sp: &SparseMatrix,
    rhs_velocity: &[f64],
    rhs_pressure: &[f64],
    orientation: Orientation,
) -> LinearSystem {
    let dofs = DofMap::new(mesh);
    let n = dofs.num_free();
    let mut b = TripletBuilder::new(n, n);
    let mut push = |row: Option<usize>, col: Option<usize>, v: f64| {
        if let (Some(r), Some(c)) = (row, col) {
            match orientation {
                Orientation::State => b.push(r, c, v),
                Orientation::Adjoint => b.push(c, r, v),
            }
        }
    };
    for (r, c, v) in k.triplets() {
        push(dofs.velocity_row(r), dofs.velocity_row(c), v);
    }
    for (r, c, v) in g.triplets() {
        // velocity row, pressure column: b(v, p); pressure row: -b(u, π)
        push(dofs.velocity_row(r), dofs.row(c, Field::Pressure), v);
        push(dofs.row(c, Field::Pressure), dofs.velocity_row(r), -v);
    }
    for (r, c, v) in sp.triplets() {
        push(dofs.row(r, Field::Pressure), dofs.row(c, Field::Pressure), v);
    }
    let mut rhs = vec![0.0; n];
    for (dof, v) in rhs_velocity.iter().enumerate() {
        if let Some(r) = dofs.velocity_row(dof) {
            rhs[r] += v;
        }
    }
    for (node, v) in rhs_pressure.iter().enumerate() {
        if let Some(r) = dofs.row(node, Field::Pressure) {
            rhs[r] += v;
        }
    }
    LinearSystem { matrix: b.build(), rhs, dof_map: dofs }
}

/// Fully discrete state step on `mesh_new = mesh_old + Δt V_old`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_state_system(
    mesh_new: &AxiMesh,
    mesh_old: &AxiMesh,
    u_old: &VectorFieldP1,
    v_old: &VectorFieldP1,
    zeta: f64,
    phys: &PhysParams,
    num: &NumParams,
) -> Result<LinearSystem> {
    if mesh_new.topology() != mesh_old.topology() {
        return Err(SimError::DimensionMismatch("meshes do not share node numbering".into()));
    }
    check_len(mesh_old, u_old, "u_old")?;
    check_len(mesh_old, v_old, "V_old")?;
    let k = velocity_operator(mesh_new, u_old, v_old, phys, num)?;
    let g = form_b(mesh_new);
    let sp = form_s_p(mesh_new, num.cs);
    let mut rhs_v = mass_matrix(mesh_old).mul_vec(&u_old.to_flat());
    rhs_v.iter_mut().for_each(|v| *v /= num.dt);
    for (v, f) in rhs_v.iter_mut().zip(rhs_f(mesh_new, zeta, phys)?) {
        *v += f;
    }
    let rhs_p = rhs_pressure_gravity(mesh_new, num.cs, phys.g);
    Ok(build_system(mesh_new, &k, &g, &sp, &rhs_v, &rhs_p, Orientation::State))
}

/// Velocity, pressure and the achieved relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub velocity: VectorFieldP1,
    pub pressure: ScalarFieldP1,
    pub residual: f64,
}

/// Residual ceiling above which a solve is rejected.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

pub fn solve(system: &LinearSystem) -> Result<Solution> {
    let (x, residual) = solve_direct(&system.matrix, &system.rhs)?;
    if !(residual <= RESIDUAL_LIMIT) {
        return Err(SimError::ResidualTooLarge { residual, limit: RESIDUAL_LIMIT });
    }
    let dofs = &system.dof_map;
    let n = dofs.num_nodes();
    let get = |node: usize, field: Field| dofs.row(node, field).map_or(0.0, |r| x[r]);
    let velocity = VectorFieldP1::from_fn(n, |i| [get(i, Field::VelocityR), get(i, Field::VelocityZ)]);
    let pressure = ScalarFieldP1::from_fn(n, |i| get(i, Field::Pressure));
    Ok(Solution { velocity, pressure, residual })
}
