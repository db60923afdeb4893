//! Element-local saddle-point postprocessing that lifts `E_h, H_h` in `P_k`
//! to `E*, H*` in `P_{k+1}` with one extra order of convergence of the curl.
//!
//! On each element `K` the pair `(E*, p)` in `P_{k+1}(K)^3 x P_{k+2}(K)/R`
//! solves
//!
//! ```text
//! (curl E*, curl w) + (grad p, w) = (curl E_h, curl w) + <E_h - Ê, n x curl w>
//! (E*, grad v)                    = (E_h, grad v)
//! ```
//!
//! and likewise for `H*`. The quotient by constants is realized with one
//! Lagrange multiplier enforcing `∫_K p = 0`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::dg_operator::{FieldState, FluxTrace, COMPONENTS};
use crate::error::{Error, Result};
use crate::linalg::ColMajor;
use crate::mesh::Mesh;
use crate::reference_element::{
    all_face_orders, face_order_index, volume_quadrature, ModalBasis, ReferenceElement, TetRule,
};
use crate::Vec3;

/// Reference-element data shared by all local systems of one degree `k`.
#[derive(Debug, Clone)]
pub struct PostprocessSpaces {
    degree: usize,
    star: ReferenceElement,
    pressure: ModalBasis,
    rule: TetRule,
    /// Values and reference gradients of the `P_k` Lagrange basis at `rule`.
    dg_val: ColMajor,
    dg_grad: [ColMajor; 3],
    /// Values and reference gradients of the `P_{k+1}` Lagrange basis.
    star_val: Vec<Vec<f64>>,
    star_grad: Vec<Vec<[f64; 3]>>,
    /// Reference gradients of the `P_{k+2}` modal basis.
    pressure_grad: Vec<Vec<[f64; 3]>>,
    /// `∫ psi_m` over the reference tetrahedron.
    pressure_mean: Vec<f64>,
    /// Reference gradients of the `P_{k+1}` basis at the DG face points,
    /// indexed like the DG face operators.
    face_star_grad: Vec<Vec<Vec<[f64; 3]>>>,
}

fn grad_matrix(re: &ReferenceElement, points: &[[f64; 3]], axis: usize) -> ColMajor {
    let mut m = DMatrix::zeros(points.len(), re.np());
    for (q, p) in points.iter().enumerate() {
        for (j, g) in re.eval_basis_grad(p).iter().enumerate() {
            m[(q, j)] = g[axis];
        }
    }
    ColMajor::from_dmatrix(&m)
}

impl PostprocessSpaces {
    /// Spaces for postprocessing a degree-`dg.degree()` solution.
    pub fn new(dg: &ReferenceElement) -> Result<Self> {
        let k = dg.degree();
        let star = ReferenceElement::new(k + 1)?;
        let pressure = ModalBasis::new(k + 2);
        let rule = volume_quadrature(2 * k + 4)?;
        let dg_val = ColMajor::from_dmatrix(&dg.interpolation_matrix(&rule.points));
        let dg_grad = [0, 1, 2].map(|a| grad_matrix(dg, &rule.points, a));
        let star_val = rule.points.iter().map(|p| star.eval_basis(p)).collect();
        let star_grad = rule.points.iter().map(|p| star.eval_basis_grad(p)).collect();
        let mut pressure_mean = vec![0.0; pressure.len()];
        let pressure_grad = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| {
                let (v, g) = pressure.eval_with_grad(p);
                for (m, vm) in v.iter().enumerate() {
                    pressure_mean[m] += w * vm;
                }
                g
            })
            .collect();
        let face_star_grad = all_face_orders()
            .into_iter()
            .map(|order| {
                let op = dg.face_operator(order);
                op.ref_points.iter().map(|p| star.eval_basis_grad(p)).collect()
            })
            .collect();
        Ok(Self {
            degree: k,
            star,
            pressure,
            rule,
            dg_val,
            dg_grad,
            star_val,
            star_grad,
            pressure_grad,
            pressure_mean,
            face_star_grad,
        })
    }

    /// Degree `k` of the input fields.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The `P_{k+1}` element the postprocessed fields live on.
    pub fn star_element(&self) -> &ReferenceElement {
        &self.star
    }

    /// `3 dim P_{k+1}`.
    pub fn field_dofs(&self) -> usize {
        3 * self.star.np()
    }

    /// `dim P_{k+2}`.
    pub fn pressure_dofs(&self) -> usize {
        self.pressure.len()
    }

    /// Size of the assembled system including the mean multiplier.
    pub fn system_size(&self) -> usize {
        self.field_dofs() + self.pressure_dofs() + 1
    }
}

/// Physical gradient from a reference gradient: `d/dx_a = sum_b J^-1_{ba} d/dr_b`.
fn physical(jinv: &nalgebra::Matrix3<f64>, g: &[f64; 3]) -> Vec3 {
    jinv.transpose() * Vec3::new(g[0], g[1], g[2])
}

/// Assembled and factorized saddle-point matrix of one element
///
/// ```text
/// [ A   B  0 ]
/// [ B^T 0  m ]
/// [ 0   m^T 0 ]
/// ```
///
/// with `A` the curl-curl Gram matrix on `P_{k+1}^3`, `B_{(b,j),m} = ∫ ∂_b psi_m phi_j`
/// and `m_m = ∫ psi_m`. One factorization serves both the E and H solves.
#[derive(Debug, Clone)]
pub struct LocalSaddleSystem {
    element: usize,
    field_dofs: usize,
    pressure_dofs: usize,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl LocalSaddleSystem {
    /// Element whose geometry the system was assembled on.
    pub fn element(&self) -> usize {
        self.element
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn field_dofs(&self) -> usize {
        self.field_dofs
    }

    pub fn pressure_dofs(&self) -> usize {
        self.pressure_dofs
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// The curl-curl block `A`.
    pub fn curl_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.field_dofs, self.field_dofs)).into_owned()
    }

    /// The gradient coupling block `B`.
    pub fn gradient_block(&self) -> DMatrix<f64> {
        self.matrix
            .view((0, self.field_dofs), (self.field_dofs, self.pressure_dofs))
            .into_owned()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        match self.lu.solve(rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
            _ => Err(Error::Factorization { element: self.element }),
        }
    }
}

/// Assembles and factorizes the local system on `element`.
pub fn build_local_system(mesh: &Mesh, element: usize, spaces: &PostprocessSpaces) -> Result<LocalSaddleSystem> {
    let g = mesh.geometry(element);
    let det = g.det.abs();
    let np1 = spaces.star.np();
    let nf = 3 * np1;
    let npp = spaces.pressure.len();
    let n = nf + npp + 1;
    let mut matrix = DMatrix::zeros(n, n);
    let mut grads = vec![Vec3::zeros(); np1];
    let mut pgrads = vec![Vec3::zeros(); npp];
    for (q, w) in spaces.rule.weights.iter().enumerate() {
        let wq = w * det;
        for (gi, rg) in grads.iter_mut().zip(&spaces.star_grad[q]) {
            *gi = physical(&g.jacobian_inv, rg);
        }
        for (gm, rg) in pgrads.iter_mut().zip(&spaces.pressure_grad[q]) {
            *gm = physical(&g.jacobian_inv, rg);
        }
        for i in 0..np1 {
            for j in 0..np1 {
                let gij = wq * grads[i].dot(&grads[j]);
                for a in 0..3 {
                    matrix[(a * np1 + i, a * np1 + j)] += gij;
                    for b in 0..3 {
                        // -∫ ∂_b phi_i ∂_a phi_j
                        matrix[(a * np1 + i, b * np1 + j)] -= wq * grads[i][b] * grads[j][a];
                    }
                }
            }
            let phi = wq * spaces.star_val[q][i];
            for (m, gm) in pgrads.iter().enumerate() {
                for b in 0..3 {
                    matrix[(b * np1 + i, nf + m)] += phi * gm[b];
                }
            }
        }
    }
    for m in 0..npp {
        for r in 0..nf {
            matrix[(nf + m, r)] = matrix[(r, nf + m)];
        }
        let mean = det * spaces.pressure_mean[m];
        matrix[(nf + m, n - 1)] = mean;
        matrix[(n - 1, nf + m)] = mean;
    }
    let lu = matrix.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::Factorization { element });
    }
    Ok(LocalSaddleSystem {
        element,
        field_dofs: nf,
        pressure_dofs: npp,
        matrix,
        lu,
    })
}

/// `E*` and `H*` on one element as nodal coefficients on the `P_{k+1}`
/// nodes, component-major like [`FieldState`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFields {
    pub e: Vec<f64>,
    pub h: Vec<f64>,
}

/// Postprocessed fields on a selection of elements, stored as a degree
/// `k+1` state (unselected elements hold zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessedState {
    pub state: FieldState,
    pub computed: Vec<bool>,
}

impl PostprocessedState {
    pub fn time(&self) -> f64 {
        self.state.time()
    }
}

/// Elements to postprocess.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'s> {
    All,
    Elements(&'s [usize]),
}

/// Per-mesh postprocessing driver. Elements whose Jacobians coincide share
/// one factorized system, computed on the lowest-index element of the group.
pub struct Postprocessor<'a> {
    mesh: &'a Mesh,
    dg: &'a ReferenceElement,
    spaces: PostprocessSpaces,
    group_of: Vec<Option<usize>>,
    groups: Vec<(usize, OnceLock<Arc<LocalSaddleSystem>>)>,
}

impl<'a> Postprocessor<'a> {
    pub fn new(mesh: &'a Mesh, dg: &'a ReferenceElement) -> Result<Self> {
        let spaces = PostprocessSpaces::new(dg)?;
        let scale = (0..mesh.num_elements())
            .map(|k| mesh.geometry(k).jacobian.amax())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let key = |k: usize| -> [i64; 9] {
            let j = &mesh.geometry(k).jacobian;
            std::array::from_fn(|i| (j[(i % 3, i / 3)] / scale * 1e12).round() as i64)
        };
        let mut members: HashMap<[i64; 9], Vec<usize>> = HashMap::new();
        for k in 0..mesh.num_elements() {
            members.entry(key(k)).or_default().push(k);
        }
        let mut shared: Vec<Vec<usize>> = members.into_values().filter(|m| m.len() > 1).collect();
        shared.sort_by_key(|m| m[0]);
        let mut group_of = vec![None; mesh.num_elements()];
        let mut groups = Vec::with_capacity(shared.len());
        for (gid, m) in shared.iter().enumerate() {
            for &k in m {
                group_of[k] = Some(gid);
            }
            groups.push((m[0], OnceLock::new()));
        }
        Ok(Self {
            mesh,
            dg,
            spaces,
            group_of,
            groups,
        })
    }

    pub fn spaces(&self) -> &PostprocessSpaces {
        &self.spaces
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    /// The factorized system used for `element`.
    pub fn local_system(&self, element: usize) -> Result<Arc<LocalSaddleSystem>> {
        match self.group_of[element] {
            Some(gid) => {
                let (rep, cell) = &self.groups[gid];
                if let Some(sys) = cell.get() {
                    return Ok(sys.clone());
                }
                let sys = Arc::new(build_local_system(self.mesh, *rep, &self.spaces)?);
                Ok(cell.get_or_init(|| sys).clone())
            }
            None => Ok(Arc::new(build_local_system(self.mesh, element, &self.spaces)?)),
        }
    }

    /// Right-hand sides of the E and H systems on `element`.
    fn local_rhs(&self, element: usize, state: &FieldState, fluxes: &FluxTrace) -> [DVector<f64>; 2] {
        let sp = &self.spaces;
        let mesh = self.mesh;
        let g = mesh.geometry(element);
        let det = g.det.abs();
        let np1 = sp.star.np();
        let nf = 3 * np1;
        let npp = sp.pressure.len();
        let n = nf + npp + 1;
        let nq = sp.rule.len();

        // Field values and reference derivatives at the volume points.
        let mut vals = vec![0.0; COMPONENTS * nq];
        let mut dref = vec![0.0; 3 * COMPONENTS * nq];
        for c in 0..COMPONENTS {
            let u = state.component(element, c);
            sp.dg_val.gemv(u, &mut vals[c * nq..(c + 1) * nq]);
            for b in 0..3 {
                sp.dg_grad[b].gemv(u, &mut dref[(c * 3 + b) * nq..(c * 3 + b + 1) * nq]);
            }
        }
        let grad = |c: usize, q: usize| {
            let r = [dref[(c * 3) * nq + q], dref[(c * 3 + 1) * nq + q], dref[(c * 3 + 2) * nq + q]];
            physical(&g.jacobian_inv, &r)
        };

        let mut rhs = [DVector::zeros(n), DVector::zeros(n)];
        for q in 0..nq {
            let wq = sp.rule.weights[q] * det;
            for (field, r) in rhs.iter_mut().enumerate() {
                let c0 = 3 * field;
                let (gx, gy, gz) = (grad(c0, q), grad(c0 + 1, q), grad(c0 + 2, q));
                let curl = Vec3::new(gz.y - gy.z, gx.z - gz.x, gy.x - gx.y);
                let value = Vec3::new(vals[c0 * nq + q], vals[(c0 + 1) * nq + q], vals[(c0 + 2) * nq + q]);
                for i in 0..np1 {
                    let gi = physical(&g.jacobian_inv, &sp.star_grad[q][i]);
                    let t = curl.cross(&gi) * wq;
                    for a in 0..3 {
                        r[a * np1 + i] += t[a];
                    }
                }
                for m in 0..npp {
                    let gm = physical(&g.jacobian_inv, &sp.pressure_grad[q][m]);
                    r[nf + m] += wq * value.dot(&gm);
                }
            }
        }

        let faces = mesh.element_faces(element);
        let face_rule = self.dg.face_rule();
        let nfq = face_rule.len();
        let mut trace = vec![0.0; COMPONENTS * nfq];
        for f in 0..4 {
            let order = mesh.face_order(element, f);
            let op = self.dg.face_operator(order);
            for c in 0..COMPONENTS {
                op.interp.gemv(state.component(element, c), &mut trace[c * nfq..(c + 1) * nfq]);
            }
            let star_grads = &sp.face_star_grad[face_order_index(order)];
            let normal = g.normals[f];
            let area2 = 2.0 * g.face_areas[f];
            for q in 0..nfq {
                let wq = face_rule.weights[q] * area2;
                let at = |c0: usize| Vec3::new(trace[c0 * nfq + q], trace[(c0 + 1) * nfq + q], trace[(c0 + 2) * nfq + q]);
                let diffs = [at(0) - fluxes.e_hat(faces[f], q), at(3) - fluxes.h_hat(faces[f], q)];
                for i in 0..np1 {
                    let gi = physical(&g.jacobian_inv, &star_grads[q][i]);
                    let ng = normal.dot(&gi);
                    for (r, d) in rhs.iter_mut().zip(&diffs) {
                        // <d, n x curl(phi_i e_a)> = d.g n_a - d_a (n.g)
                        let dg = d.dot(&gi);
                        for a in 0..3 {
                            r[a * np1 + i] += wq * (dg * normal[a] - d[a] * ng);
                        }
                    }
                }
            }
        }
        rhs
    }

    /// `(E*, H*)` on `element` from the state and the numerical fluxes of
    /// the same time level.
    pub fn postprocess_element(&self, element: usize, state: &FieldState, fluxes: &FluxTrace) -> Result<LocalFields> {
        let sys = self.local_system(element)?;
        let [re, rh] = self.local_rhs(element, state, fluxes);
        let nf = self.spaces.field_dofs();
        let e = sys.solve(&re)?;
        let h = sys.solve(&rh)?;
        Ok(LocalFields {
            e: e.as_slice()[..nf].to_vec(),
            h: h.as_slice()[..nf].to_vec(),
        })
    }

    /// Postprocesses the selected elements in parallel.
    pub fn postprocess_state(
        &self,
        state: &FieldState,
        fluxes: &FluxTrace,
        selection: Selection<'_>,
    ) -> Result<PostprocessedState> {
        let ne = self.mesh.num_elements();
        let np1 = self.spaces.star.np();
        let mut out = FieldState::zeros(ne, np1);
        out.set_time(state.time());
        let mut computed = vec![false; ne];
        match selection {
            Selection::All => computed.iter_mut().for_each(|c| *c = true),
            Selection::Elements(list) => {
                for &k in list {
                    if k >= ne {
                        return Err(Error::InvalidInput(format!("element {k} is not in the mesh")));
                    }
                    computed[k] = true;
                }
            }
        }
        out.data_mut()
            .par_chunks_mut(COMPONENTS * np1)
            .enumerate()
            .filter(|(k, _)| computed[*k])
            .try_for_each(|(k, chunk)| {
                let local = self.postprocess_element(k, state, fluxes)?;
                chunk[..3 * np1].copy_from_slice(&local.e);
                chunk[3 * np1..].copy_from_slice(&local.h);
                Ok::<_, Error>(())
            })?;
        Ok(PostprocessedState { state: out, computed })
    }

    /// Largest relative violation of `(E*, grad v) = (E_h, grad v)` (and the
    /// same for H) over the computed elements.
    pub fn gradient_moment_residual(&self, state: &FieldState, post: &PostprocessedState) -> f64 {
        let sp = &self.spaces;
        let nq = sp.rule.len();
        let npp = sp.pressure.len();
        (0..self.mesh.num_elements())
            .into_par_iter()
            .filter(|&k| post.computed[k])
            .map(|k| {
                let g = self.mesh.geometry(k);
                let det = g.det.abs();
                let mut worst: f64 = 0.0;
                for field in 0..2 {
                    let mut lhs = vec![0.0; npp];
                    let mut rhs = vec![0.0; npp];
                    let mut scale: f64 = 0.0;
                    let mut vals = vec![0.0; 3 * nq];
                    for c in 0..3 {
                        sp.dg_val.gemv(state.component(k, 3 * field + c), &mut vals[c * nq..(c + 1) * nq]);
                    }
                    for q in 0..nq {
                        let wq = sp.rule.weights[q] * det;
                        let mut star = Vec3::zeros();
                        for c in 0..3 {
                            let coeffs = post.state.component(k, 3 * field + c);
                            star[c] = coeffs.iter().zip(&sp.star_val[q]).map(|(a, b)| a * b).sum();
                        }
                        let dg = Vec3::new(vals[q], vals[nq + q], vals[2 * nq + q]);
                        for m in 0..npp {
                            let gm = physical(&g.jacobian_inv, &sp.pressure_grad[q][m]);
                            lhs[m] += wq * star.dot(&gm);
                            rhs[m] += wq * dg.dot(&gm);
                            scale = scale.max(wq * dg.norm() * gm.norm());
                        }
                    }
                    let norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let diff = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let denom = norm.max(scale * 1e-3);
                    if denom > 0.0 {
                        worst = worst.max(diff / denom);
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}
