//! Conforming tetrahedral meshes with face connectivity, affine geometry,
//! piecewise-constant materials and boundary classification.

mod io;
mod structured;

pub use io::{load_mesh, parse_mesh, write_mesh};
pub use structured::{build_structured_box_mesh, build_structured_cube_mesh, jitter_interior_vertices};

use std::collections::HashMap;

use log::warn;
use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::reference_element::FACE_VERTICES;
use crate::{Vec3, EPS0, MU0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    /// Perfect electric conductor, `E x n = 0`.
    Pec,
    /// First-order Silver-Muller absorbing boundary.
    Abc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Permittivity (F/m).
    pub eps: f64,
    /// Permeability (H/m).
    pub mu: f64,
}

impl Material {
    pub const VACUUM: Material = Material { eps: EPS0, mu: MU0 };

    pub fn relative(eps_rel: f64, mu_rel: f64) -> Self {
        Self {
            eps: eps_rel * EPS0,
            mu: mu_rel * MU0,
        }
    }

    /// `Z = sqrt(mu / eps)`
    pub fn impedance(&self) -> f64 {
        (self.mu / self.eps).sqrt()
    }

    pub fn admittance(&self) -> f64 {
        (self.eps / self.mu).sqrt()
    }

    pub fn wave_speed(&self) -> f64 {
        1.0 / (self.eps * self.mu).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Global vertex ids, ascending. Face quadrature points are laid out in
    /// barycentrics of these vertices, so both sides agree on them.
    pub vertices: [usize; 3],
    pub kind: FaceKind,
    /// Side the normal points away from (lower element index on interior
    /// faces).
    pub minus: FaceSide,
    pub plus: Option<FaceSide>,
    /// `n_F`: outward normal of `minus`, which is the domain's outward
    /// normal on boundary faces.
    pub normal: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// Columns `v1 - v0, v2 - v0, v3 - v0`: reference to physical.
    pub jacobian: Matrix3<f64>,
    pub jacobian_inv: Matrix3<f64>,
    /// `det(jacobian)`, positive for every stored element.
    pub det: f64,
    pub volume: f64,
    /// `A_K`: sum of the four face areas.
    pub surface_area: f64,
    /// Outward unit normal of each local face.
    pub normals: [Vec3; 4],
    pub face_areas: [f64; 4],
    pub centroid: Vec3,
}

/// Geometric data of a boundary triangle handed to tagging rules.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub centroid: Vec3,
    pub normal: Vec3,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    elements: Vec<[usize; 4]>,
    element_material: Vec<usize>,
    materials: Vec<Material>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 4]>,
    face_orders: Vec<[[u8; 3]; 4]>,
    geometry: Vec<ElementGeometry>,
    vertex_elements: Vec<Vec<usize>>,
}

fn element_geometry(v: [Vec3; 4]) -> ElementGeometry {
    let jacobian = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let det = jacobian.determinant();
    let jacobian_inv = jacobian.try_inverse().unwrap_or_else(Matrix3::zeros);
    let centroid = (v[0] + v[1] + v[2] + v[3]) / 4.0;
    let mut normals = [Vec3::zeros(); 4];
    let mut face_areas = [0.0; 4];
    for (f, fv) in FACE_VERTICES.iter().enumerate() {
        let (a, b, c) = (v[fv[0]], v[fv[1]], v[fv[2]]);
        let cross = (b - a).cross(&(c - a));
        face_areas[f] = 0.5 * cross.norm();
        let mut n = cross.normalize();
        if n.dot(&(a - v[f])) < 0.0 {
            n = -n;
        }
        normals[f] = n;
    }
    ElementGeometry {
        jacobian,
        jacobian_inv,
        det,
        volume: det.abs() / 6.0,
        surface_area: face_areas.iter().sum(),
        normals,
        face_areas,
        centroid,
    }
}

fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

impl Mesh {
    /// Assembles a mesh from raw connectivity.
    ///
    /// Elements with a negative Jacobian determinant are repaired by swapping
    /// their last two vertices (with a warning when `warn_on_repair`).
    /// `tag` classifies every boundary triangle; `None` is an error.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        mut elements: Vec<[usize; 4]>,
        element_material: Vec<usize>,
        materials: Vec<Material>,
        warn_on_repair: bool,
        tag: impl Fn(&BoundaryFace) -> Option<FaceKind>,
    ) -> Result<Mesh> {
        if element_material.len() != elements.len() {
            return Err(Error::InvalidInput(
                "one material id per element is required".into(),
            ));
        }
        for m in &materials {
            if !(m.eps > 0.0 && m.mu > 0.0 && m.eps.is_finite() && m.mu.is_finite()) {
                return Err(Error::InvalidInput(format!("non-positive material {m:?}")));
            }
        }
        if let Some(&bad) = element_material.iter().find(|&&m| m >= materials.len()) {
            return Err(Error::InvalidInput(format!("unknown material id {bad}")));
        }

        let scale = bounding_diagonal(&vertices).max(f64::MIN_POSITIVE);
        let mut geometry = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter_mut().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!("element {k} references a missing vertex")));
            }
            let mut g = element_geometry(el.map(|i| vertices[i]));
            if g.det.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::Orientation { element: k, det: g.det });
            }
            if g.det < 0.0 {
                if warn_on_repair {
                    warn!("element {k} is inverted; swapping its last two vertices");
                }
                el.swap(2, 3);
                g = element_geometry(el.map(|i| vertices[i]));
            }
            geometry.push(g);
        }

        let mut incidences: HashMap<[usize; 3], Vec<FaceSide>> = HashMap::new();
        let mut order: Vec<[usize; 3]> = Vec::new();
        for (k, el) in elements.iter().enumerate() {
            for (f, fv) in FACE_VERTICES.iter().enumerate() {
                let key = sorted3(fv.map(|l| el[l]));
                let entry = incidences.entry(key).or_default();
                if entry.is_empty() {
                    order.push(key);
                }
                entry.push(FaceSide {
                    element: k,
                    local_face: f,
                });
            }
        }

        let mut faces = Vec::with_capacity(order.len());
        let mut element_faces = vec![[usize::MAX; 4]; elements.len()];
        for key in order {
            let sides = &incidences[&key];
            let minus = sides[0];
            let g = &geometry[minus.element];
            let normal = g.normals[minus.local_face];
            let area = g.face_areas[minus.local_face];
            let (kind, plus) = match sides.len() {
                1 => {
                    let info = BoundaryFace {
                        vertices: key,
                        centroid: (vertices[key[0]] + vertices[key[1]] + vertices[key[2]]) / 3.0,
                        normal,
                    };
                    match tag(&info) {
                        Some(FaceKind::Interior) | None => {
                            return Err(Error::UntaggedBoundary { vertices: key })
                        }
                        Some(kind) => (kind, None),
                    }
                }
                2 => (FaceKind::Interior, Some(sides[1])),
                count => return Err(Error::Conformity { vertices: key, count }),
            };
            let id = faces.len();
            element_faces[minus.element][minus.local_face] = id;
            if let Some(p) = plus {
                element_faces[p.element][p.local_face] = id;
            }
            faces.push(Face {
                vertices: key,
                kind,
                minus,
                plus,
                normal,
                area,
            });
        }

        let face_orders = elements
            .iter()
            .map(|el| {
                let mut orders = [[0u8; 3]; 4];
                for (f, fv) in FACE_VERTICES.iter().enumerate() {
                    let mut local = *fv;
                    local.sort_by_key(|&l| el[l]);
                    orders[f] = local.map(|l| l as u8);
                }
                orders
            })
            .collect();

        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        for (k, el) in elements.iter().enumerate() {
            for &v in el {
                vertex_elements[v].push(k);
            }
        }

        Ok(Mesh {
            vertices,
            elements,
            element_material,
            materials,
            faces,
            element_faces,
            face_orders,
            geometry,
            vertex_elements,
        })
    }

    /// Same connectivity and boundary tags with new vertex positions and
    /// materials.
    pub fn rebuild(
        &self,
        vertices: Vec<Vec3>,
        element_material: Vec<usize>,
        materials: Vec<Material>,
    ) -> Result<Mesh> {
        let tags: HashMap<[usize; 3], FaceKind> = self
            .faces
            .iter()
            .filter(|f| f.kind != FaceKind::Interior)
            .map(|f| (f.vertices, f.kind))
            .collect();
        Mesh::from_parts(vertices, self.elements.clone(), element_material, materials, false, |f| {
            tags.get(&f.vertices).copied()
        })
    }

    /// Vertices that lie on no boundary face.
    pub fn interior_vertices(&self) -> Vec<bool> {
        let mut interior = vec![true; self.vertices.len()];
        for f in self.faces.iter().filter(|f| f.kind != FaceKind::Interior) {
            for &v in &f.vertices {
                interior[v] = false;
            }
        }
        interior
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, id: usize) -> &Face {
        &self.faces[id]
    }

    /// Global face ids of the four local faces of `element`.
    pub fn element_faces(&self, element: usize) -> [usize; 4] {
        self.element_faces[element]
    }

    /// Local vertex indices of `local_face` listed in the order of the
    /// global face's (ascending) vertex ids.
    pub fn face_order(&self, element: usize, local_face: usize) -> [u8; 3] {
        self.face_orders[element][local_face]
    }

    pub fn geometry(&self, element: usize) -> &ElementGeometry {
        &self.geometry[element]
    }

    pub fn material(&self, element: usize) -> Material {
        self.materials[self.element_material[element]]
    }

    pub fn material_id(&self, element: usize) -> usize {
        self.element_material[element]
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn count_faces(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    /// Affine image of a reference point in `element`.
    pub fn map_to_physical(&self, element: usize, r: &[f64; 3]) -> Vec3 {
        let g = &self.geometry[element];
        self.vertices[self.elements[element][0]] + g.jacobian * Vec3::new(r[0], r[1], r[2])
    }

    pub fn map_to_reference(&self, element: usize, x: &Vec3) -> [f64; 3] {
        let g = &self.geometry[element];
        let r = g.jacobian_inv * (x - self.vertices[self.elements[element][0]]);
        [r[0], r[1], r[2]]
    }

    /// Physical point of a face given by barycentrics of its sorted vertices.
    pub fn face_point(&self, face: usize, face_point: &[f64; 2]) -> Vec3 {
        let v = self.faces[face].vertices;
        (1.0 - face_point[0] - face_point[1]) * self.vertices[v[0]]
            + face_point[0] * self.vertices[v[1]]
            + face_point[1] * self.vertices[v[2]]
    }

    /// `K` together with every element sharing a face with it, ascending.
    pub fn neighbor_patch(&self, element: usize) -> Vec<usize> {
        let mut patch = vec![element];
        for &f in &self.element_faces[element] {
            let face = &self.faces[f];
            for side in std::iter::once(face.minus).chain(face.plus) {
                if side.element != element {
                    patch.push(side.element);
                }
            }
        }
        patch.sort_unstable();
        patch.dedup();
        patch
    }

    /// `min_K V_K / (c_K A_K)`, the geometric factor of the CFL rule.
    pub fn min_cfl_length_over_speed(&self) -> f64 {
        (0..self.num_elements())
            .map(|k| {
                let g = &self.geometry[k];
                g.volume / g.surface_area / self.material(k).wave_speed()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn barycentric(&self, element: usize, x: &Vec3) -> [f64; 4] {
        let r = self.map_to_reference(element, x);
        [1.0 - r[0] - r[1] - r[2], r[0], r[1], r[2]]
    }

    fn contains(&self, element: usize, x: &Vec3, tol: f64) -> bool {
        self.barycentric(element, x).iter().all(|&l| l >= -tol)
    }

    /// Element containing `x`, found by walking across faces from `start`.
    ///
    /// A point on an inter-element boundary resolves to the lowest-index
    /// element that contains it. Returns `None` outside the mesh.
    pub fn locate_point(&self, x: &Vec3, start: usize) -> Option<usize> {
        const TOL: f64 = 1e-12;
        let mut current = start.min(self.num_elements().saturating_sub(1));
        let mut found = None;
        for _ in 0..4 * self.num_elements().max(16) {
            let bary = self.barycentric(current, x);
            let (f, min) = bary
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
            if min >= -TOL {
                found = Some(current);
                break;
            }
            let face = &self.faces[self.element_faces[current][f]];
            let next = std::iter::once(face.minus)
                .chain(face.plus)
                .map(|s| s.element)
                .find(|&e| e != current);
            match next {
                Some(e) => current = e,
                None => break,
            }
        }
        let found = found.or_else(|| (0..self.num_elements()).find(|&k| self.contains(k, x, TOL)))?;
        let mut best = found;
        for &v in &self.elements[found] {
            for &k in &self.vertex_elements[v] {
                if k < best && self.contains(k, x, TOL) {
                    best = k;
                }
            }
        }
        Some(best)
    }
}

fn bounding_diagonal(vertices: &[Vec3]) -> f64 {
    if vertices.is_empty() {
        return 0.0;
    }
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_pec(_: &BoundaryFace) -> Option<FaceKind> {
        Some(FaceKind::Pec)
    }

    fn unit_tet() -> (Vec<Vec3>, Vec<[usize; 4]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
    }

    #[test]
    fn single_tet_geometry() {
        let (v, e) = unit_tet();
        let mesh = Mesh::from_parts(v, e, vec![0], vec![Material::VACUUM], true, all_pec).unwrap();
        let g = mesh.geometry(0);
        assert!((g.volume - 1.0 / 6.0).abs() < 1e-15);
        let area = 1.5 + 3f64.sqrt() / 2.0;
        assert!((g.surface_area - area).abs() < 1e-14);
        assert_eq!(mesh.count_faces(FaceKind::Pec), 4);
        assert_eq!(mesh.neighbor_patch(0), vec![0]);
    }

    #[test]
    fn element_with_three_boundary_faces_has_patch_of_two() {
        let (mut v, mut e) = unit_tet();
        v.push(Vec3::new(1.0, 1.0, 1.0));
        e.push([1, 2, 3, 4]);
        let mesh = Mesh::from_parts(v, e, vec![0, 0], vec![Material::VACUUM], false, all_pec).unwrap();
        assert_eq!(mesh.neighbor_patch(0), vec![0, 1]);
        assert_eq!(mesh.neighbor_patch(1), vec![0, 1]);
        assert_eq!(mesh.count_faces(FaceKind::Interior), 1);
    }

    #[test]
    fn locate_point_prefers_lowest_index_on_shared_faces() {
        let (mut v, mut e) = unit_tet();
        v.push(Vec3::new(1.0, 1.0, 1.0));
        e.push([1, 2, 3, 4]);
        let mesh = Mesh::from_parts(v, e, vec![0, 0], vec![Material::VACUUM], false, all_pec).unwrap();
        let on_face = Vec3::new(1.0, 1.0, 1.0) / 3.0;
        assert_eq!(mesh.locate_point(&on_face, 1), Some(0));
        assert_eq!(mesh.locate_point(&Vec3::new(0.1, 0.1, 0.1), 1), Some(0));
        assert_eq!(mesh.locate_point(&Vec3::new(0.6, 0.6, 0.6), 0), Some(1));
        assert_eq!(mesh.locate_point(&Vec3::new(-1.0, 0.0, 0.0), 0), None);
    }

    #[test]
    fn inverted_element_is_repaired() {
        let (v, _) = unit_tet();
        let mesh =
            Mesh::from_parts(v, vec![[0, 2, 1, 3]], vec![0], vec![Material::VACUUM], false, all_pec)
                .unwrap();
        assert!(mesh.geometry(0).det > 0.0);
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let err = Mesh::from_parts(v, vec![[0, 1, 2, 3]], vec![0], vec![Material::VACUUM], false, all_pec);
        assert!(matches!(err, Err(Error::Orientation { .. })));
    }

    #[test]
    fn untagged_boundary_is_an_error() {
        let (v, e) = unit_tet();
        let err = Mesh::from_parts(v, e, vec![0], vec![Material::VACUUM], false, |_| None);
        assert!(matches!(err, Err(Error::UntaggedBoundary { .. })));
    }

    #[test]
    fn nonpositive_material_is_rejected() {
        let (v, e) = unit_tet();
        let bad = Material { eps: 0.0, mu: MU0 };
        assert!(Mesh::from_parts(v, e, vec![0], vec![bad], false, all_pec).is_err());
    }
}
