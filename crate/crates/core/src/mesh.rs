//! Triangulated half-section `{0 <= r <= R, 0 <= z <= Z(r)}` of the nozzle.
//!
//! Node coordinates are `(r, z)` pairs. The boundary is split into four arcs:
//! the symmetry axis (`r = 0`), the open bottom (`z = 0`), the solid wall
//! (`r = R`) and the free surface on top. The free surface and the wall meet
//! at the single contact node.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Result, SimError};
use crate::fields::VectorFieldP1;

/// Boundary arc an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    FreeSurface,
    Wall,
    Bottom,
    Axis,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] =
        [BoundaryTag::FreeSurface, BoundaryTag::Wall, BoundaryTag::Bottom, BoundaryTag::Axis];

    fn bit(self) -> u8 {
        match self {
            BoundaryTag::FreeSurface => 1,
            BoundaryTag::Wall => 2,
            BoundaryTag::Bottom => 4,
            BoundaryTag::Axis => 8,
        }
    }
}

/// A tagged boundary edge. Free-surface edges form a chain from the axis to
/// the wall, each oriented so that its outward normal is `(-dz, dr) / len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

static NEXT_TOPOLOGY: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq)]
pub struct AxiMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    node_tags: Vec<u8>,
    contact_node: usize,
    radius: f64,
    topology: u64,
}

/// Minimum signed area and maximum aspect ratio over all triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub min_area: f64,
    pub max_aspect_ratio: f64,
}

/// Signed area of the triangle `(a, b, c)`, positive when counter-clockwise
/// in the `(r, z)` plane.
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Longest edge over `2*sqrt(3)` times the inradius; 1 for an equilateral
/// triangle, growing without bound as the triangle degenerates.
pub fn aspect_ratio(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let len = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let (ab, bc, ca) = (len(a, b), len(b, c), len(c, a));
    let area = signed_area(a, b, c).abs();
    let inradius = 2.0 * area / (ab + bc + ca);
    ab.max(bc).max(ca) / (2.0 * 3f64.sqrt() * inradius)
}

impl AxiMesh {
    /// Assembles a mesh from raw parts and checks every structural invariant.
    ///
    /// `radius` is the wall radius; Axis nodes must sit at `r = 0` and Wall
    /// nodes at `r = radius`.
    pub fn from_parts(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        mut boundary_edges: Vec<BoundaryEdge>,
        contact_node: usize,
        radius: f64,
    ) -> Result<Self> {
        let n = nodes.len();
        if triangles.iter().flatten().chain(boundary_edges.iter().flat_map(|e| e.nodes.iter())).any(|&i| i >= n)
            || contact_node >= n
        {
            return Err(SimError::InvalidMesh("node index out of range".into()));
        }
        orient_free_surface(&mut boundary_edges, &triangles)?;
        let mut node_tags = vec![0u8; n];
        for e in &boundary_edges {
            for &i in &e.nodes {
                node_tags[i] |= e.tag.bit();
            }
        }
        let mesh = AxiMesh {
            nodes,
            triangles,
            boundary_edges,
            node_tags,
            contact_node,
            radius,
            topology: NEXT_TOPOLOGY.fetch_add(1, Ordering::Relaxed),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks every invariant; used after construction and displacement.
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(SimError::InvalidMesh("radius must be positive".into()));
        }
        for (i, p) in self.nodes.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) || p[0] < 0.0 {
                return Err(SimError::InvalidMesh(format!("node {i} at {p:?}")));
            }
            if self.has_tag(i, BoundaryTag::Axis) && p[0] != 0.0 {
                return Err(SimError::InvalidMesh(format!("axis node {i} off the axis")));
            }
            if self.has_tag(i, BoundaryTag::Wall) && p[0] != self.radius {
                return Err(SimError::WallViolation { node: i, r: p[0], radius: self.radius });
            }
        }
        for (k, t) in self.triangles.iter().enumerate() {
            let area = self.triangle_area(k);
            if !(area > 0.0) {
                return Err(SimError::MeshTangled { triangle: k, area: area.min(0.0) });
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(SimError::InvalidMesh(format!("degenerate triangle {k}")));
            }
        }
        if !(self.has_tag(self.contact_node, BoundaryTag::Wall)
            && self.has_tag(self.contact_node, BoundaryTag::FreeSurface))
        {
            return Err(SimError::InvalidMesh("contact node must lie on wall and free surface".into()));
        }
        let shared = (0..self.nodes.len())
            .filter(|&i| self.has_tag(i, BoundaryTag::Wall) && self.has_tag(i, BoundaryTag::FreeSurface))
            .count();
        if shared != 1 {
            return Err(SimError::InvalidMesh(format!("{shared} nodes shared by wall and free surface")));
        }
        self.surface_normals()?;
        Ok(())
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edges_with(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn contact_node(&self) -> usize {
        self.contact_node
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Identity of the node numbering; preserved by [`AxiMesh::displace`].
    pub fn topology(&self) -> u64 {
        self.topology
    }

    pub fn has_tag(&self, node: usize, tag: BoundaryTag) -> bool {
        self.node_tags[node] & tag.bit() != 0
    }

    pub fn triangle_points(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(a, b, c)
    }

    /// Structured `(n1 + 1) x (n3 + 1)` grid over `[0, radius] x [0, height]`.
    /// Each cell is split along its lower-left to upper-right diagonal.
    pub fn structured(radius: f64, height: f64, n1: usize, n3: usize) -> Result<Self> {
        if !(radius > 0.0 && height > 0.0) || !radius.is_finite() || !height.is_finite() {
            return Err(SimError::InvalidMesh(format!(
                "dimensions must be positive, got radius {radius:e}, height {height:e}"
            )));
        }
        if n1 < 2 || n3 < 2 {
            return Err(SimError::InvalidMesh(format!("need at least 2x2 cells, got {n1}x{n3}")));
        }
        let id = |i: usize, j: usize| j * (n1 + 1) + i;
        let mut nodes = Vec::with_capacity((n1 + 1) * (n3 + 1));
        for j in 0..=n3 {
            for i in 0..=n1 {
                // exact end values so that wall and surface sit where requested
                let r = if i == n1 { radius } else { radius * i as f64 / n1 as f64 };
                let z = if j == n3 { height } else { height * j as f64 / n3 as f64 };
                nodes.push([r, z]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n1 * n3);
        for j in 0..n3 {
            for i in 0..n1 {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut edges = Vec::with_capacity(2 * (n1 + n3));
        for i in 0..n1 {
            edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: BoundaryTag::Bottom });
        }
        for j in 0..n3 {
            edges.push(BoundaryEdge { nodes: [id(n1, j), id(n1, j + 1)], tag: BoundaryTag::Wall });
        }
        for i in 0..n1 {
            edges.push(BoundaryEdge { nodes: [id(i, n3), id(i + 1, n3)], tag: BoundaryTag::FreeSurface });
        }
        for j in 0..n3 {
            edges.push(BoundaryEdge { nodes: [id(0, j), id(0, j + 1)], tag: BoundaryTag::Axis });
        }
        AxiMesh::from_parts(nodes, triangles, edges, id(n1, n3), radius)
    }

    /// Moves every node by `dt * velocity`. Wall and axis radii and bottom
    /// heights are never written.
    pub fn displace(&self, velocity: &VectorFieldP1, dt: f64) -> Result<Self> {
        if velocity.len() != self.num_nodes() {
            return Err(SimError::DimensionMismatch(format!(
                "velocity has {} nodes, mesh has {}",
                velocity.len(),
                self.num_nodes()
            )));
        }
        let mut nodes = self.nodes.clone();
        for (i, p) in nodes.iter_mut().enumerate() {
            let [vr, vz] = velocity.at(i);
            if self.has_tag(i, BoundaryTag::Wall) {
                let moved = p[0] + dt * vr;
                if (moved - self.radius).abs() > 1e-12 * self.radius {
                    return Err(SimError::WallViolation { node: i, r: moved, radius: self.radius });
                }
            } else if !self.has_tag(i, BoundaryTag::Axis) {
                p[0] += dt * vr;
            }
            if !self.has_tag(i, BoundaryTag::Bottom) {
                p[1] += dt * vz;
            }
        }
        let moved = AxiMesh { nodes, ..self.clone() };
        moved.validate()?;
        Ok(moved)
    }

    /// Height of the contact line, i.e. of the tagged contact node.
    pub fn contact_line_height(&self) -> f64 {
        self.nodes[self.contact_node][1]
    }

    /// Vertical size of the wall elements: wall length over wall edge count.
    pub fn wall_element_height(&self) -> f64 {
        let (mut len, mut count) = (0.0, 0usize);
        for e in self.edges_with(BoundaryTag::Wall) {
            len += (self.nodes[e.nodes[1]][1] - self.nodes[e.nodes[0]][1]).abs();
            count += 1;
        }
        len / count.max(1) as f64
    }

    /// Free-surface edges in storage order (axis to wall).
    pub fn free_surface_edges(&self) -> Vec<[usize; 2]> {
        self.edges_with(BoundaryTag::FreeSurface).map(|e| e.nodes).collect()
    }

    /// Outward unit normal `(nu_r, nu_z)` of every free-surface edge, in
    /// [`AxiMesh::free_surface_edges`] order.
    pub fn surface_normals(&self) -> Result<Vec<[f64; 2]>> {
        self.edges_with(BoundaryTag::FreeSurface)
            .enumerate()
            .map(|(k, e)| {
                let [a, b] = [self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]];
                let (dr, dz) = (b[0] - a[0], b[1] - a[1]);
                let len = dr.hypot(dz);
                let nu = [-dz / len, dr / len];
                if !(nu[1] > 0.0) {
                    return Err(SimError::SurfaceFolded { edge: k, nu3: nu[1] });
                }
                Ok(nu)
            })
            .collect()
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality { min_area: f64::INFINITY, max_aspect_ratio: 0.0 };
        for k in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(k);
            q.min_area = q.min_area.min(signed_area(a, b, c));
            q.max_aspect_ratio = q.max_aspect_ratio.max(aspect_ratio(a, b, c));
        }
        q
    }

    /// `∫ r dr dz` over the domain (volume with the 2π factor dropped).
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|k| {
                let [a, b, c] = self.triangle_points(k);
                signed_area(a, b, c) * (a[0] + b[0] + c[0]) / 3.0
            })
            .sum()
    }

    /// `∫ r dr` over the bottom boundary.
    pub fn bottom_measure(&self) -> f64 {
        self.edges_with(BoundaryTag::Bottom)
            .map(|e| {
                let (r0, r1) = (self.nodes[e.nodes[0]][0], self.nodes[e.nodes[1]][0]);
                0.5 * (r1 * r1 - r0 * r0).abs()
            })
            .sum()
    }
}

/// Orients every free-surface edge so that `nodes[0] -> nodes[1]` runs
/// clockwise around its triangle (axis to wall for a graph surface) and
/// stores them as one chain starting at the axis end.
fn orient_free_surface(edges: &mut [BoundaryEdge], triangles: &[[usize; 3]]) -> Result<()> {
    let mut surface = Vec::new();
    for e in edges.iter().filter(|e| e.tag == BoundaryTag::FreeSurface) {
        let [a, b] = e.nodes;
        let ccw = triangles.iter().find_map(|t| {
            (0..3).find_map(|k| {
                let (p, q) = (t[k], t[(k + 1) % 3]);
                if (p, q) == (a, b) {
                    Some(true)
                } else if (p, q) == (b, a) {
                    Some(false)
                } else {
                    None
                }
            })
        });
        match ccw {
            Some(true) => surface.push([b, a]),
            Some(false) => surface.push([a, b]),
            None => return Err(SimError::InvalidMesh(format!("free-surface edge {a}-{b} has no triangle"))),
        }
    }
    let mut chain = Vec::with_capacity(surface.len());
    let mut current = surface.iter().position(|e| !surface.iter().any(|f| f[1] == e[0]));
    while let Some(k) = current {
        let e = surface[k];
        chain.push(e);
        if chain.len() > surface.len() {
            break;
        }
        current = surface.iter().position(|f| f[0] == e[1]);
    }
    if chain.len() != surface.len() {
        return Err(SimError::InvalidMesh("free surface is not a single open chain".into()));
    }
    let mut it = chain.into_iter();
    for e in edges.iter_mut().filter(|e| e.tag == BoundaryTag::FreeSurface) {
        e.nodes = it.next().expect("same count");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        let m = AxiMesh::structured(5e-4, 5e-5, 16, 32).unwrap();
        assert_eq!(m.num_nodes(), 561);
        assert_eq!(m.triangles().len(), 1024);
        let q = m.quality();
        let expected = (5e-4 / 16.0) * (5e-5 / 32.0) / 2.0;
        assert!((q.min_area - expected).abs() <= 1e-12 * expected);
        assert_eq!(m.contact_line_height(), 5e-5);
        assert_eq!(m.nodes()[m.contact_node()], [5e-4, 5e-5]);
    }

    #[test]
    fn unit_grid_tags() {
        let m = AxiMesh::structured(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.triangles().len(), 8);
        for tag in BoundaryTag::ALL {
            assert_eq!(m.edges_with(tag).count(), 2, "{tag:?}");
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(AxiMesh::structured(0.0, 1.0, 2, 2), Err(SimError::InvalidMesh(_))));
        assert!(matches!(AxiMesh::structured(1.0, -1.0, 2, 2), Err(SimError::InvalidMesh(_))));
        assert!(matches!(AxiMesh::structured(1.0, 1.0, 1, 2), Err(SimError::InvalidMesh(_))));
        assert!(matches!(AxiMesh::structured(1.0, 1.0, 2, 1), Err(SimError::InvalidMesh(_))));
    }

    #[test]
    fn zero_velocity_is_identity() {
        let m = AxiMesh::structured(1.0, 0.5, 3, 4).unwrap();
        let moved = m.displace(&VectorFieldP1::zeros(m.num_nodes()), 0.1).unwrap();
        assert_eq!(moved.nodes(), m.nodes());
        assert_eq!(moved.topology(), m.topology());
    }

    #[test]
    fn affine_stretch_keeps_wall() {
        let m = AxiMesh::structured(1.0, 0.5, 3, 4).unwrap();
        let c = 0.2;
        let v = VectorFieldP1::from_fn(m.num_nodes(), |i| [0.0, c * m.nodes()[i][1] / 0.5]);
        let moved = m.displace(&v, 1.0).unwrap();
        for (i, (p, q)) in m.nodes().iter().zip(moved.nodes()).enumerate() {
            assert_eq!(p[0], q[0]);
            assert!((q[1] - p[1] * 1.4).abs() < 1e-15, "node {i}");
        }
        assert!((moved.contact_line_height() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn inverting_velocity_tangles() {
        let m = AxiMesh::structured(1.0, 1.0, 2, 2).unwrap();
        // push the centre node below the bottom row of the upper cells
        let centre = 4;
        let v = VectorFieldP1::from_fn(m.num_nodes(), |i| if i == centre { [0.0, -2.0] } else { [0.0, 0.0] });
        assert!(matches!(m.displace(&v, 0.5), Err(SimError::MeshTangled { .. })));
    }

    #[test]
    fn radial_wall_motion_rejected() {
        let m = AxiMesh::structured(1.0, 1.0, 2, 2).unwrap();
        let v = VectorFieldP1::from_fn(m.num_nodes(), |i| if i == 5 { [1e-3, 0.0] } else { [0.0, 0.0] });
        assert!(matches!(m.displace(&v, 1.0), Err(SimError::WallViolation { node: 5, .. })));
    }

    #[test]
    fn flat_and_tilted_normals() {
        let m = AxiMesh::structured(1.0, 1.0, 4, 2).unwrap();
        for nu in m.surface_normals().unwrap() {
            assert_eq!(nu, [0.0, 1.0]);
        }
        let phi: f64 = 0.3;
        let v = VectorFieldP1::from_fn(m.num_nodes(), |i| {
            let [r, z] = m.nodes()[i];
            [0.0, z * r * phi.tan()]
        });
        let tilted = m.displace(&v, 1.0).unwrap();
        for nu in tilted.surface_normals().unwrap() {
            assert!((nu[0] + phi.sin()).abs() < 1e-14 && (nu[1] - phi.cos()).abs() < 1e-14, "{nu:?}");
        }
    }

    fn five_node_mesh(top: [f64; 2]) -> Result<AxiMesh> {
        // square with a free-surface node in the middle of the top side
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], top];
        AxiMesh::from_parts(
            nodes,
            vec![[0, 1, 2], [0, 2, 4], [0, 4, 3]],
            vec![
                BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Bottom },
                BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Wall },
                BoundaryEdge { nodes: [2, 4], tag: BoundaryTag::FreeSurface },
                BoundaryEdge { nodes: [4, 3], tag: BoundaryTag::FreeSurface },
                BoundaryEdge { nodes: [0, 3], tag: BoundaryTag::Axis },
            ],
            2,
            1.0,
        )
    }

    #[test]
    fn folded_surface_detected() {
        let ok = five_node_mesh([0.5, 1.2]).unwrap();
        assert_eq!(ok.free_surface_edges(), vec![[3, 4], [4, 2]]);
        // the middle surface node overhangs the wall-side edge
        let folded = five_node_mesh([1.0 + 1e-9, 1.5]);
        assert!(matches!(folded, Err(SimError::SurfaceFolded { .. }) | Err(SimError::MeshTangled { .. })));
        let overhang = five_node_mesh([0.9, 3.0]).unwrap();
        assert!(overhang.surface_normals().unwrap().iter().all(|nu| nu[1] > 0.0));
        let nodes_back = five_node_mesh([-0.1, 1.0]);
        assert!(nodes_back.is_err());
    }

    #[test]
    fn equilateral_aspect_is_one() {
        let a = [1.0, 0.0];
        let b = [2.0, 0.0];
        let c = [1.5, 3f64.sqrt() / 2.0];
        assert!((aspect_ratio(a, b, c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_and_bottom_measure() {
        let m = AxiMesh::structured(2.0, 3.0, 4, 5).unwrap();
        assert!((m.volume() - 3.0 * 2.0 * 2.0 / 2.0).abs() < 1e-12);
        assert!((m.bottom_measure() - 2.0).abs() < 1e-14);
    }
}
