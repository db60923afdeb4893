use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryFace, FaceKind, Material, Mesh};
use crate::error::{Error, Result};
use crate::Vec3;

/// Kuhn split of the unit cube: one tetrahedron per axis permutation, all
/// sharing the main diagonal from corner 0 to corner 7. Corner index bits
/// are (x, y, z) = (bit 0, bit 1, bit 2).
const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// `n^3` cubes of side `length / n` covering `origin + (0, length)^3`, each
/// split into 6 tetrahedra along its main diagonal.
pub fn build_structured_box_mesh(
    n: usize,
    origin: Vec3,
    length: f64,
    material: Material,
    boundary: impl Fn(&BoundaryFace) -> FaceKind,
) -> Result<Mesh> {
    if n == 0 || !(length > 0.0) {
        return Err(Error::InvalidInput(format!(
            "structured mesh needs n >= 1 and L > 0 (got n = {n}, L = {length})"
        )));
    }
    let h = length / n as f64;
    let stride = n + 1;
    let vid = |i: usize, j: usize, k: usize| (k * stride + j) * stride + i;
    let mut vertices = Vec::with_capacity(stride.pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(origin + Vec3::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    let mut elements = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner = |c: usize| vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                for tet in KUHN_TETS {
                    elements.push(tet.map(corner));
                }
            }
        }
    }
    let count = elements.len();
    Mesh::from_parts(vertices, elements, vec![0; count], vec![material], false, |f| {
        Some(boundary(f))
    })
}

/// Structured mesh of `(0, L)^3`.
pub fn build_structured_cube_mesh(
    n: usize,
    length: f64,
    material: Material,
    boundary: impl Fn(&BoundaryFace) -> FaceKind,
) -> Result<Mesh> {
    build_structured_box_mesh(n, Vec3::zeros(), length, material, boundary)
}

/// Moves every interior vertex by a uniform random offset in
/// `[-amplitude, amplitude]^3`. Deterministic for a given `seed`.
pub fn jitter_interior_vertices(mesh: &Mesh, amplitude: f64, seed: u64) -> Result<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = mesh.interior_vertices();
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&interior)
        .map(|(v, &inside)| {
            let d = Vec3::new(
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            );
            if inside { v + amplitude * d } else { *v }
        })
        .collect();
    let ids = (0..mesh.num_elements()).map(|k| mesh.material_id(k)).collect();
    mesh.rebuild(vertices, ids, mesh.materials().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::FaceKind;

    fn pec(_: &BoundaryFace) -> FaceKind {
        FaceKind::Pec
    }

    #[test]
    fn single_cube_counts() {
        let mesh = build_structured_cube_mesh(1, 1.0, Material::VACUUM, pec).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.num_elements(), 6);
        assert_eq!(mesh.count_faces(FaceKind::Pec), 12);
        assert_eq!(mesh.count_faces(FaceKind::Interior), 6);
        for k in 0..6 {
            // |det J| / 6 from the vertex coordinates.
            let v = mesh.elements()[k].map(|i| mesh.vertices()[i]);
            let det = (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0]));
            assert!((det.abs() / 6.0 - 1.0 / 6.0).abs() < 1e-15);
            assert!((mesh.geometry(k).volume - 1.0 / 6.0).abs() < 1e-15);
            assert!(mesh.neighbor_patch(k).len() <= 3);
        }
    }

    #[test]
    fn cavity_resolution_element_count() {
        let mesh = build_structured_cube_mesh(8, 1.0, Material::VACUUM, pec).unwrap();
        assert_eq!(mesh.num_elements(), 3072);
        assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_structured_cube_mesh(0, 1.0, Material::VACUUM, pec).is_err());
        assert!(build_structured_cube_mesh(2, -1.0, Material::VACUUM, pec).is_err());
    }

    #[test]
    fn patch_sizes_on_refined_mesh() {
        let mesh = build_structured_cube_mesh(4, 1.0, Material::VACUUM, pec).unwrap();
        let boundary_faces = |k: usize| {
            mesh.element_faces(k)
                .iter()
                .filter(|&&f| mesh.face(f).kind != FaceKind::Interior)
                .count()
        };
        let mut saw_interior = false;
        let mut saw_corner = false;
        for k in 0..mesh.num_elements() {
            let expected = 5 - boundary_faces(k);
            assert_eq!(mesh.neighbor_patch(k).len(), expected);
            saw_interior |= expected == 5;
            saw_corner |= boundary_faces(k) == 3;
        }
        assert!(saw_interior);
        // Kuhn tets touch at most two faces of a cube corner.
        assert!(!saw_corner);
        let corner = (0..mesh.num_elements()).find(|&k| boundary_faces(k) == 2).unwrap();
        assert_eq!(mesh.neighbor_patch(corner).len(), 3);
    }

    #[test]
    fn element_invariants_hold() {
        let n = 3;
        let mesh = build_structured_cube_mesh(n, 2.0, Material::VACUUM, pec).unwrap();
        let expected = 8.0 / (6.0 * 27.0);
        for k in 0..mesh.num_elements() {
            let g = mesh.geometry(k);
            assert!((g.volume - expected).abs() < 1e-12 * expected);
            let v = mesh.elements()[k].map(|i| mesh.vertices()[i]);
            for f in 0..4 {
                let fc = crate::reference_element::FACE_VERTICES[f]
                    .iter()
                    .fold(Vec3::zeros(), |acc, &l| acc + v[l])
                    / 3.0;
                assert!(g.normals[f].dot(&(fc - g.centroid)) > 0.0);
            }
        }
        for f in mesh.faces() {
            if let Some(p) = f.plus {
                let mut a = crate::reference_element::FACE_VERTICES[f.minus.local_face]
                    .map(|l| mesh.elements()[f.minus.element][l]);
                let mut b = crate::reference_element::FACE_VERTICES[p.local_face]
                    .map(|l| mesh.elements()[p.element][l]);
                a.sort_unstable();
                b.sort_unstable();
                assert_eq!(a, b);
                assert!(f.minus.element < p.element);
            }
        }
    }

    #[test]
    fn jitter_keeps_boundary_and_volume() {
        let mesh = build_structured_cube_mesh(3, 1.0, Material::VACUUM, pec).unwrap();
        let moved = jitter_interior_vertices(&mesh, 0.05, 7).unwrap();
        assert!((moved.total_volume() - 1.0).abs() < 1e-12);
        assert_eq!(moved.count_faces(FaceKind::Pec), mesh.count_faces(FaceKind::Pec));
        let again = jitter_interior_vertices(&mesh, 0.05, 7).unwrap();
        assert_eq!(moved.vertices(), again.vertices());
        assert_ne!(moved.vertices(), mesh.vertices());
    }
}
