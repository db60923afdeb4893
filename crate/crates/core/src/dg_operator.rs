//! Semi-discrete DG right-hand side: volume curls, upwind numerical fluxes on
//! interior, PEC and Silver-Muller faces, source terms and the block-diagonal
//! mass inverse.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ColMajor;
use crate::mesh::{FaceKind, Mesh};
use crate::reference_element::ReferenceElement;
use crate::time_integration::{OdeState, Rhs};
use crate::Vec3;

/// Number of scalar field components per node: `E_x, E_y, E_z, H_x, H_y, H_z`.
pub const COMPONENTS: usize = 6;

/// Nodal coefficients of `E_h` and `H_h` at one time.
///
/// Element `K` owns the contiguous block `[E_x | E_y | E_z | H_x | H_y | H_z]`
/// of `6 * np` values, one `np`-vector per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    time: f64,
    np: usize,
    data: Vec<f64>,
}

impl FieldState {
    pub fn zeros(num_elements: usize, np: usize) -> Self {
        Self {
            time: 0.0,
            np,
            data: vec![0.0; num_elements * COMPONENTS * np],
        }
    }

    pub fn from_data(np: usize, time: f64, data: Vec<f64>) -> Result<Self> {
        if np == 0 || data.len() % (COMPONENTS * np) != 0 {
            return Err(Error::InvalidInput(format!(
                "{} values do not form whole elements of {} nodes",
                data.len(),
                np
            )));
        }
        Ok(Self { time, np, data })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn num_elements(&self) -> usize {
        self.data.len() / (COMPONENTS * self.np)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn element(&self, k: usize) -> &[f64] {
        let n = COMPONENTS * self.np;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn element_mut(&mut self, k: usize) -> &mut [f64] {
        let n = COMPONENTS * self.np;
        &mut self.data[k * n..(k + 1) * n]
    }

    /// Component `c` (0..3 for E, 3..6 for H) of element `k`.
    pub fn component(&self, k: usize, c: usize) -> &[f64] {
        let start = (k * COMPONENTS + c) * self.np;
        &self.data[start..start + self.np]
    }

    pub fn component_mut(&mut self, k: usize, c: usize) -> &mut [f64] {
        let start = (k * COMPONENTS + c) * self.np;
        &mut self.data[start..start + self.np]
    }
}

impl OdeState for FieldState {
    fn zeros_like(&self) -> Self {
        Self {
            time: self.time,
            np: self.np,
            data: vec![0.0; self.data.len()],
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|a| *a *= alpha);
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn time(&self) -> f64 {
        FieldState::time(self)
    }

    fn set_time(&mut self, t: f64) {
        FieldState::set_time(self, t);
    }
}

/// Numerical fluxes `Ê^t`, `Ĥ^t` at the face quadrature points of every face.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTrace {
    nq: usize,
    data: Vec<f64>,
}

impl FluxTrace {
    pub fn zeros(num_faces: usize, nq: usize) -> Self {
        Self {
            nq,
            data: vec![0.0; num_faces * nq * COMPONENTS],
        }
    }

    /// Quadrature points per face.
    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn num_faces(&self) -> usize {
        self.data.len() / (self.nq * COMPONENTS)
    }

    pub fn e_hat(&self, face: usize, q: usize) -> Vec3 {
        let i = (face * self.nq + q) * COMPONENTS;
        Vec3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    pub fn h_hat(&self, face: usize, q: usize) -> Vec3 {
        let i = (face * self.nq + q) * COMPONENTS + 3;
        Vec3::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    pub fn set(&mut self, face: usize, q: usize, e_hat: Vec3, h_hat: Vec3) {
        let i = (face * self.nq + q) * COMPONENTS;
        self.data[i..i + 3].copy_from_slice(e_hat.as_slice());
        self.data[i + 3..i + 6].copy_from_slice(h_hat.as_slice());
    }
}

/// Volume current density `J(t, x)` in A/m².
pub type CurrentFn = dyn Fn(f64, &Vec3) -> Vec3 + Send + Sync;
/// Tangential boundary load `G(t, x, n, Z)` on absorbing faces, with `n` the
/// outward domain normal and `Z` the impedance of the adjacent element.
pub type BoundaryLoadFn = dyn Fn(f64, &Vec3, &Vec3, f64) -> Vec3 + Send + Sync;

/// Source data of `eps dE/dt - curl H = J` and of the absorbing boundary.
#[derive(Clone, Default)]
pub struct SourceSpec {
    pub current: Option<Arc<CurrentFn>>,
    pub boundary_load: Option<Arc<BoundaryLoadFn>>,
}

impl std::fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceSpec")
            .field("current", &self.current.is_some())
            .field("boundary_load", &self.boundary_load.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
struct ElementData {
    /// `jinv[b][a] = d r_b / d x_a`.
    jinv: [[f64; 3]; 3],
    inv_eps: f64,
    inv_mu: f64,
    /// `2 A_F / |det J|` per local face.
    face_scale: [f64; 4],
}

/// Matrix-free evaluation of `dU/dt = -M^-1 K U + M^-1 B(t)`.
pub struct DgOperator<'a> {
    mesh: &'a Mesh,
    reference: &'a ReferenceElement,
    source: SourceSpec,
    elements: Vec<ElementData>,
    /// `[D_r; D_s; D_t]`, `3 np x np`.
    diff_all: ColMajor,
    scratch: Mutex<Workspace>,
}

/// Buffers reused across right-hand-side evaluations.
struct Workspace {
    /// Traces of every element on its four faces, `[((k * 4 + f) * 6 + c) * nq + q]`.
    traces: Vec<f64>,
    fluxes: FluxTrace,
}

fn tangential(v: Vec3, n: &Vec3) -> Vec3 {
    v - n * v.dot(n)
}

impl<'a> DgOperator<'a> {
    pub fn new(mesh: &'a Mesh, reference: &'a ReferenceElement, source: SourceSpec) -> Self {
        let elements = (0..mesh.num_elements())
            .map(|k| {
                let g = mesh.geometry(k);
                let m = mesh.material(k);
                let mut jinv = [[0.0; 3]; 3];
                for (b, row) in jinv.iter_mut().enumerate() {
                    for (a, v) in row.iter_mut().enumerate() {
                        *v = g.jacobian_inv[(b, a)];
                    }
                }
                ElementData {
                    jinv,
                    inv_eps: 1.0 / m.eps,
                    inv_mu: 1.0 / m.mu,
                    face_scale: g.face_areas.map(|a| 2.0 * a / g.det.abs()),
                }
            })
            .collect();
        let nq = reference.face_rule().len();
        let diff_all = ColMajor::vstack(&[reference.diff(0), reference.diff(1), reference.diff(2)]);
        Self {
            mesh,
            reference,
            source,
            elements,
            diff_all,
            scratch: Mutex::new(Workspace {
                traces: vec![0.0; mesh.num_elements() * 4 * COMPONENTS * nq],
                fluxes: FluxTrace::zeros(mesh.num_faces(), nq),
            }),
        }
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn reference(&self) -> &'a ReferenceElement {
        self.reference
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    fn check_shape(&self, state: &FieldState) {
        assert_eq!(state.np(), self.reference.np(), "state degree does not match the operator");
        assert_eq!(
            state.num_elements(),
            self.mesh.num_elements(),
            "state size does not match the mesh"
        );
    }

    /// Traces of all six components of every element on its four faces.
    fn fill_traces(&self, state: &FieldState, traces: &mut [f64]) {
        self.check_shape(state);
        let block = traces.len() / (4 * self.mesh.num_elements().max(1));
        traces.par_chunks_mut(4 * block).enumerate().for_each(|(k, out)| {
            for (f, chunk) in out.chunks_exact_mut(block).enumerate() {
                let op = self.reference.face_operator(self.mesh.face_order(k, f));
                op.interp.gemm(1.0, state.element(k), COMPONENTS, 0.0, chunk);
            }
        });
    }

    /// Numerical fluxes for `state` at time `t`.
    pub fn compute_numerical_fluxes(&self, state: &FieldState, t: f64) -> FluxTrace {
        let nq = self.reference.face_rule().len();
        let mut traces = vec![0.0; self.mesh.num_elements() * 4 * COMPONENTS * nq];
        self.fill_traces(state, &mut traces);
        let mut trace = FluxTrace::zeros(self.mesh.num_faces(), nq);
        self.fill_fluxes(&traces, t, &mut trace);
        trace
    }

    fn fill_fluxes(&self, traces: &[f64], t: f64, trace: &mut FluxTrace) {
        let nq = trace.nq;
        let block = COMPONENTS * nq;
        let side = |k: usize, f: usize| &traces[(k * 4 + f) * block..(k * 4 + f + 1) * block];
        let rule = self.reference.face_rule();
        trace
            .data
            .par_chunks_mut(nq * COMPONENTS)
            .enumerate()
            .for_each(|(fid, out)| {
                    let face = self.mesh.face(fid);
                    let n = face.normal;
                    let km = face.minus.element;
                    let minus = side(km, face.minus.local_face);
                    let plus = face.plus.map_or(minus, |p| side(p.element, p.local_face));
                    let mat_m = self.mesh.material(km);
                    let at = |buf: &[f64], c0: usize, q: usize| {
                        Vec3::new(buf[c0 * nq + q], buf[(c0 + 1) * nq + q], buf[(c0 + 2) * nq + q])
                    };
                    for q in 0..nq {
                        let em = at(minus, 0, q);
                        let hm = at(minus, 3, q);
                        let (e_hat, h_hat) = match face.kind {
                            FaceKind::Interior => {
                                let p = face.plus.expect("interior face has two sides");
                                let mat_p = self.mesh.material(p.element);
                                let (ym, yp) = (mat_m.admittance(), mat_p.admittance());
                                let (zm, zp) = (mat_m.impedance(), mat_p.impedance());
                                let ep = at(plus, 0, q);
                                let hp = at(plus, 3, q);
                                let e_hat = (tangential(ym * em + yp * ep, &n) + (hm - hp).cross(&n))
                                    / (ym + yp);
                                let h_hat = (tangential(zm * hm + zp * hp, &n) - (em - ep).cross(&n))
                                    / (zm + zp);
                                (e_hat, h_hat)
                            }
                            FaceKind::Pec => {
                                let y = mat_m.admittance();
                                (Vec3::zeros(), -y * em.cross(&n) + tangential(hm, &n))
                            }
                            FaceKind::Abc => {
                                let (y, z) = (mat_m.admittance(), mat_m.impedance());
                                let g = match &self.source.boundary_load {
                                    Some(load) => {
                                        let x = self.mesh.face_point(fid, &rule.points[q]);
                                        tangential(load(t, &x, &n, z), &n)
                                    }
                                    None => Vec3::zeros(),
                                };
                                let e_hat = 0.5 * (tangential(em, &n) + z * hm.cross(&n) + g.cross(&n));
                                let h_hat = 0.5 * y * (z * tangential(hm, &n) - em.cross(&n) - g);
                                (e_hat, h_hat)
                            }
                        };
                        out[q * COMPONENTS..q * COMPONENTS + 3].copy_from_slice(e_hat.as_slice());
                        out[q * COMPONENTS + 3..(q + 1) * COMPONENTS].copy_from_slice(h_hat.as_slice());
                    }
                });
    }

    /// Writes `out = a * out + dt * f(t, state)` given precomputed fluxes.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_with_fluxes(
        &self,
        state: &FieldState,
        traces: &[f64],
        fluxes: &FluxTrace,
        t: f64,
        a: f64,
        dt: f64,
        out: &mut FieldState,
    ) {
        let np = self.reference.np();
        let nq = fluxes.nq;
        out.data
            .par_chunks_mut(COMPONENTS * np)
            .enumerate()
            .for_each_init(
                || {
                    (
                        vec![0.0; 3 * COMPONENTS * np],
                        vec![0.0; COMPONENTS * np],
                        vec![0.0; COMPONENTS * nq],
                    )
                },
                |(dref, rhs, jump), (k, out)| {
                    let el = &self.elements[k];
                    let u = state.element(k);
                    // dref[(c * 3 + b) * np + i] = d u_c / d r_b at node i.
                    self.diff_all.gemm(1.0, u, COMPONENTS, 0.0, dref);
                    let grad = |c: usize, axis: usize, i: usize| {
                        (0..3).map(|b| el.jinv[b][axis] * dref[(c * 3 + b) * np + i]).sum::<f64>()
                    };
                    for i in 0..np {
                        // curl H for the E rows, -curl E for the H rows.
                        rhs[i] = grad(5, 1, i) - grad(4, 2, i);
                        rhs[np + i] = grad(3, 2, i) - grad(5, 0, i);
                        rhs[2 * np + i] = grad(4, 0, i) - grad(3, 1, i);
                        rhs[3 * np + i] = -(grad(2, 1, i) - grad(1, 2, i));
                        rhs[4 * np + i] = -(grad(0, 2, i) - grad(2, 0, i));
                        rhs[5 * np + i] = -(grad(1, 0, i) - grad(0, 1, i));
                    }

                    let geom = self.mesh.geometry(k);
                    let faces = self.mesh.element_faces(k);
                    for f in 0..4 {
                        let op = self.reference.face_operator(self.mesh.face_order(k, f));
                        let block = COMPONENTS * nq;
                        let trace = &traces[(k * 4 + f) * block..(k * 4 + f + 1) * block];
                        let n = geom.normals[f];
                        for q in 0..nq {
                            let e = Vec3::new(trace[q], trace[nq + q], trace[2 * nq + q]);
                            let h = Vec3::new(trace[3 * nq + q], trace[4 * nq + q], trace[5 * nq + q]);
                            let de = n.cross(&(fluxes.h_hat(faces[f], q) - h));
                            let dh = -n.cross(&(fluxes.e_hat(faces[f], q) - e));
                            for c in 0..3 {
                                jump[c * nq + q] = de[c];
                                jump[(c + 3) * nq + q] = dh[c];
                            }
                        }
                        op.lift.gemm(el.face_scale[f], jump, COMPONENTS, 1.0, rhs);
                    }

                    if let Some(current) = &self.source.current {
                        let rule = self.reference.volume_rule();
                        let proj = self.reference.volume_projection();
                        let mut samples = vec![0.0; 3 * rule.len()];
                        for (q, p) in rule.points.iter().enumerate() {
                            let x = self.mesh.map_to_physical(k, p);
                            let j = current(t, &x);
                            for c in 0..3 {
                                samples[c * rule.len() + q] = j[c];
                            }
                        }
                        for c in 0..3 {
                            proj.gemv_acc(
                                1.0,
                                &samples[c * rule.len()..(c + 1) * rule.len()],
                                &mut rhs[c * np..(c + 1) * np],
                            );
                        }
                    }

                    for c in 0..COMPONENTS {
                        let coef = dt * if c < 3 { el.inv_eps } else { el.inv_mu };
                        let (o, r) = (&mut out[c * np..(c + 1) * np], &rhs[c * np..(c + 1) * np]);
                        if a == 0.0 {
                            o.iter_mut().zip(r).for_each(|(o, r)| *o = coef * r);
                        } else {
                            o.iter_mut().zip(r).for_each(|(o, r)| *o = a * *o + coef * r);
                        }
                    }
                },
            );
    }

    /// `dU/dt` at `(t, state)`.
    pub fn apply_rhs(&self, state: &FieldState, t: f64) -> FieldState {
        let mut out = state.zeros_like();
        self.accumulate(t, state, 0.0, 1.0, &mut out);
        out
    }
}

impl Rhs<FieldState> for DgOperator<'_> {
    fn accumulate(&self, t: f64, u: &FieldState, a: f64, dt: f64, out: &mut FieldState) {
        self.check_shape(out);
        let mut guard = self.scratch.lock().unwrap_or_else(|e| e.into_inner());
        let Workspace { traces, fluxes } = &mut *guard;
        self.fill_traces(u, traces);
        self.fill_fluxes(traces, t, fluxes);
        self.accumulate_with_fluxes(u, traces, fluxes, t, a, dt, out);
    }
}

/// Nodal interpolation of `(E0, H0)` on every element; the result has
/// `t = 0`.
pub fn project_initial_conditions(
    mesh: &Mesh,
    reference: &ReferenceElement,
    e0: impl Fn(&Vec3) -> Vec3 + Sync,
    h0: impl Fn(&Vec3) -> Vec3 + Sync,
) -> Result<FieldState> {
    interpolate_fields(mesh, reference, 0.0, |x| (e0(x), h0(x)))
}

/// Nodal interpolation of a field pair given as one closure.
pub fn interpolate_fields(
    mesh: &Mesh,
    reference: &ReferenceElement,
    time: f64,
    fields: impl Fn(&Vec3) -> (Vec3, Vec3) + Sync,
) -> Result<FieldState> {
    let np = reference.np();
    let mut state = FieldState::zeros(mesh.num_elements(), np);
    state.set_time(time);
    state
        .data
        .par_chunks_mut(COMPONENTS * np)
        .enumerate()
        .try_for_each(|(k, out)| {
            for (i, r) in reference.nodes().iter().enumerate() {
                let x = mesh.map_to_physical(k, r);
                let (e, h) = fields(&x);
                for c in 0..3 {
                    out[c * np + i] = e[c];
                    out[(c + 3) * np + i] = h[c];
                }
            }
            if out.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "initial condition is not finite on element {k}"
                )))
            }
        })?;
    Ok(state)
}
