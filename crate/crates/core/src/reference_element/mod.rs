//! Degree-k nodal polynomial machinery on the unit tetrahedron
//! `{x, y, z >= 0, x + y + z <= 1}`.

mod basis;
mod nodes;
mod quadrature;

pub use basis::ModalBasis;
pub use nodes::warp_blend_nodes;
pub use quadrature::{
    face_quadrature, volume_quadrature, QuadratureRule, TetRule, TriangleRule,
    MAX_QUADRATURE_DEGREE,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::ColMajor;

/// Highest degree the DG solver runs with.
pub const MAX_SOLVER_DEGREE: usize = 4;
/// Highest degree a reference element can be built for. The postprocessor
/// needs `k + 2` on top of the solver degree.
pub const MAX_DEGREE: usize = MAX_SOLVER_DEGREE + 2;

pub const REF_VERTICES: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Local face `f` is opposite local vertex `f`.
pub const FACE_VERTICES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub fn node_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) * (degree + 3) / 6
}

/// Index in `0..24` of a local face whose vertices are visited in `order`.
///
/// Panics if `order` is not a permutation of one face's vertices.
pub fn face_order_index(order: [u8; 3]) -> usize {
    let mut sorted = order;
    sorted.sort_unstable();
    let face = (0..4)
        .find(|&f| FACE_VERTICES[f].iter().zip(&sorted).all(|(a, b)| *a == *b as usize))
        .expect("order must list the vertices of one local face");
    face * 6 + permutation_rank(order, sorted)
}

fn permutation_rank(order: [u8; 3], sorted: [u8; 3]) -> usize {
    let pos = |v: u8| sorted.iter().position(|&s| s == v).unwrap();
    let (a, b, c) = (pos(order[0]), pos(order[1]), pos(order[2]));
    match (a, b, c) {
        (0, 1, 2) => 0,
        (0, 2, 1) => 1,
        (1, 0, 2) => 2,
        (1, 2, 0) => 3,
        (2, 0, 1) => 4,
        _ => 5,
    }
}

/// The 24 local face vertex orders, indexed by [`face_order_index`].
pub fn all_face_orders() -> Vec<[u8; 3]> {
    let mut out = vec![[0u8; 3]; 24];
    for (f, verts) in FACE_VERTICES.iter().enumerate() {
        let [a, b, c] = verts.map(|v| v as u8);
        for order in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            debug_assert_eq!(face_order_index(order) / 6, f);
            out[face_order_index(order)] = order;
        }
    }
    out
}

/// Maps a face-quadrature point given in barycentrics of the ordered face
/// vertices to reference-tetrahedron coordinates.
pub fn face_point_to_reference(order: [u8; 3], face_point: &[f64; 2]) -> [f64; 3] {
    let lambda = [1.0 - face_point[0] - face_point[1], face_point[0], face_point[1]];
    let mut out = [0.0; 3];
    for (l, v) in lambda.iter().zip(order) {
        for (o, c) in out.iter_mut().zip(REF_VERTICES[v as usize]) {
            *o += l * c;
        }
    }
    out
}

/// Trace and lifting operators of one local face visited in one vertex order.
#[derive(Debug, Clone)]
pub struct FaceOperator {
    pub order: [u8; 3],
    /// Face quadrature points in reference-tetrahedron coordinates.
    pub ref_points: Vec<[f64; 3]>,
    /// `nq x np`: nodal values to values at the face points.
    pub interp: ColMajor,
    /// `np x nq`: `M^-1 Phi^T W`, face quadrature weights of the unit
    /// triangle included (physical scaling `2 |F| / |det J|` excluded).
    pub lift: ColMajor,
}

/// Lagrange basis of `P_k` on warp-and-blend nodes with its mass, derivative,
/// face and projection operators.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<[f64; 3]>,
    modal: ModalBasis,
    /// Inverse of the modal Vandermonde matrix `V_{im} = psi_m(x_i)`.
    vinv: DMatrix<f64>,
    mass: DMatrix<f64>,
    mass_inv: DMatrix<f64>,
    diff: [ColMajor; 3],
    volume_rule: TetRule,
    face_rule: TriangleRule,
    /// `nq x np` nodal-to-quadrature interpolation for `volume_rule`.
    volume_interp: ColMajor,
    /// `np x nq`: `M^-1 Phi^T W` for L2 projection of sampled data.
    volume_projection: ColMajor,
    face_ops: Vec<FaceOperator>,
}

impl ReferenceElement {
    /// Builds the element with volume and face rules exact to degree `2k`.
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree {
                what: "reference element",
                degree,
                min: 1,
                max: MAX_DEGREE,
            });
        }
        let nodes = warp_blend_nodes(degree);
        let modal = ModalBasis::new(degree);
        let np = nodes.len();

        let mut vandermonde = DMatrix::zeros(np, np);
        let mut grads = [DMatrix::zeros(np, np), DMatrix::zeros(np, np), DMatrix::zeros(np, np)];
        for (i, p) in nodes.iter().enumerate() {
            let (v, g) = modal.eval_with_grad(p);
            for m in 0..np {
                vandermonde[(i, m)] = v[m];
                for a in 0..3 {
                    grads[a][(i, m)] = g[m][a];
                }
            }
        }
        let vinv = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput(format!("singular Vandermonde at degree {degree}")))?;
        let diff = grads.map(|g| ColMajor::from_dmatrix(&(g * &vinv)));

        let volume_rule = volume_quadrature(2 * degree)?;
        let face_rule = face_quadrature(2 * degree)?;

        let mut el = Self {
            degree,
            nodes,
            modal,
            vinv,
            mass: DMatrix::zeros(0, 0),
            mass_inv: DMatrix::zeros(0, 0),
            diff,
            volume_rule,
            face_rule,
            volume_interp: ColMajor::zeros(0, 0),
            volume_projection: ColMajor::zeros(0, 0),
            face_ops: Vec::new(),
        };

        let phi = el.interpolation_matrix(&el.volume_rule.points);
        let mut weighted = phi.clone();
        for (q, w) in el.volume_rule.weights.iter().enumerate() {
            weighted.row_mut(q).scale_mut(*w);
        }
        let mass = phi.transpose() * &weighted;
        let mass = 0.5 * (&mass + mass.transpose());
        let mass_inv = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("mass matrix is not positive definite".into()))?
            .inverse();
        el.volume_projection = ColMajor::from_dmatrix(&(&mass_inv * weighted.transpose()));
        el.volume_interp = ColMajor::from_dmatrix(&phi);
        el.mass = mass;
        el.mass_inv = mass_inv;

        el.face_ops = all_face_orders()
            .into_iter()
            .map(|order| el.build_face_operator(order))
            .collect();
        Ok(el)
    }

    fn build_face_operator(&self, order: [u8; 3]) -> FaceOperator {
        let ref_points: Vec<[f64; 3]> = self
            .face_rule
            .points
            .iter()
            .map(|p| face_point_to_reference(order, p))
            .collect();
        let phi = self.interpolation_matrix(&ref_points);
        let mut weighted_t = phi.transpose();
        for (q, w) in self.face_rule.weights.iter().enumerate() {
            weighted_t.column_mut(q).scale_mut(*w);
        }
        FaceOperator {
            order,
            interp: ColMajor::from_dmatrix(&phi),
            lift: ColMajor::from_dmatrix(&(&self.mass_inv * weighted_t)),
            ref_points,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `(k+1)(k+2)(k+3)/6`.
    pub fn np(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn modal_basis(&self) -> &ModalBasis {
        &self.modal
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn mass_inv(&self) -> &DMatrix<f64> {
        &self.mass_inv
    }

    /// Derivative operator along reference axis `axis` (nodal to nodal).
    pub fn diff(&self, axis: usize) -> &ColMajor {
        &self.diff[axis]
    }

    pub fn volume_rule(&self) -> &TetRule {
        &self.volume_rule
    }

    pub fn face_rule(&self) -> &TriangleRule {
        &self.face_rule
    }

    pub fn volume_interp(&self) -> &ColMajor {
        &self.volume_interp
    }

    pub fn volume_projection(&self) -> &ColMajor {
        &self.volume_projection
    }

    pub fn face_operator(&self, order: [u8; 3]) -> &FaceOperator {
        &self.face_ops[face_order_index(order)]
    }

    /// Lagrange basis values at a reference point.
    pub fn eval_basis(&self, p: &[f64; 3]) -> Vec<f64> {
        let psi = self.modal.eval(p);
        (0..self.np())
            .map(|j| psi.iter().enumerate().map(|(m, v)| v * self.vinv[(m, j)]).sum())
            .collect()
    }

    /// Lagrange basis gradients (reference coordinates) at a reference point.
    pub fn eval_basis_grad(&self, p: &[f64; 3]) -> Vec<[f64; 3]> {
        let (_, g) = self.modal.eval_with_grad(p);
        (0..self.np())
            .map(|j| {
                let mut out = [0.0; 3];
                for (m, gm) in g.iter().enumerate() {
                    let c = self.vinv[(m, j)];
                    for a in 0..3 {
                        out[a] += gm[a] * c;
                    }
                }
                out
            })
            .collect()
    }

    /// `points.len() x np` matrix of Lagrange basis values.
    pub fn interpolation_matrix(&self, points: &[[f64; 3]]) -> DMatrix<f64> {
        let mut psi = DMatrix::zeros(points.len(), self.np());
        for (q, p) in points.iter().enumerate() {
            for (m, v) in self.modal.eval(p).into_iter().enumerate() {
                psi[(q, m)] = v;
            }
        }
        psi * &self.vinv
    }

    /// Evaluates the nodal polynomial `coeffs` at a reference point.
    pub fn evaluate(&self, coeffs: &[f64], p: &[f64; 3]) -> f64 {
        self.eval_basis(p).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

pub fn build_reference_element(degree: usize) -> Result<ReferenceElement> {
    ReferenceElement::new(degree)
}
