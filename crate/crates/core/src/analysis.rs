//! Error norms, convergence orders, the discrete energy and probe-point
//! relative errors.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dg_operator::{FieldState, COMPONENTS};
use crate::error::{Error, Result};
use crate::linalg::ColMajor;
use crate::mesh::Mesh;
use crate::reference_element::{volume_quadrature, ReferenceElement, TetRule};
use crate::scenarios::AnalyticField;
use crate::Vec3;

/// Quadrature degree of the error integrals for a degree-`k` run.
pub const fn error_quadrature_degree(k: usize) -> usize {
    2 * k + 4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    E,
    H,
}

impl FieldKind {
    pub const BOTH: [FieldKind; 2] = [FieldKind::E, FieldKind::H];

    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::E => "E",
            FieldKind::H => "H",
        }
    }
}

/// Curl and L2 errors of both fields at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub curl_e: f64,
    pub curl_h: f64,
    pub l2_e: f64,
    pub l2_h: f64,
}

impl FieldErrors {
    pub fn curl(&self, field: FieldKind) -> f64 {
        match field {
            FieldKind::E => self.curl_e,
            FieldKind::H => self.curl_h,
        }
    }

    pub fn l2(&self, field: FieldKind) -> f64 {
        match field {
            FieldKind::E => self.l2_e,
            FieldKind::H => self.l2_h,
        }
    }
}

/// Values and reference gradients of a nodal basis at a volume rule.
#[derive(Debug, Clone)]
pub struct ErrorEvaluator {
    np: usize,
    rule: TetRule,
    val: ColMajor,
    grad: [ColMajor; 3],
}

impl ErrorEvaluator {
    /// Evaluator for fields on `reference` with a rule exact to `quad_degree`.
    pub fn new(reference: &ReferenceElement, quad_degree: usize) -> Result<Self> {
        let rule = volume_quadrature(quad_degree)?;
        let val = ColMajor::from_dmatrix(&reference.interpolation_matrix(&rule.points));
        let grad = [0, 1, 2].map(|axis| {
            let mut m = DMatrix::zeros(rule.len(), reference.np());
            for (q, p) in rule.points.iter().enumerate() {
                for (j, g) in reference.eval_basis_grad(p).iter().enumerate() {
                    m[(q, j)] = g[axis];
                }
            }
            ColMajor::from_dmatrix(&m)
        });
        Ok(Self {
            np: reference.np(),
            rule,
            val,
            grad,
        })
    }

    /// Per-element squared errors `[curl E, curl H, E, H]`.
    fn element_squares(&self, mesh: &Mesh, state: &FieldState, exact: &dyn AnalyticField, t: f64, k: usize) -> [f64; 4] {
        let g = mesh.geometry(k);
        let det = g.det.abs();
        let nq = self.rule.len();
        let mut vals = vec![0.0; COMPONENTS * nq];
        let mut dref = vec![0.0; 3 * COMPONENTS * nq];
        for c in 0..COMPONENTS {
            let u = state.component(k, c);
            self.val.gemv(u, &mut vals[c * nq..(c + 1) * nq]);
            for b in 0..3 {
                self.grad[b].gemv(u, &mut dref[(3 * c + b) * nq..(3 * c + b + 1) * nq]);
            }
        }
        let jt = g.jacobian_inv.transpose();
        let mut out = [0.0; 4];
        for (q, (p, w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
            let x = mesh.map_to_physical(k, p);
            let (e, h) = exact.fields(t, &x);
            let (ce, ch) = exact.curls(t, &x);
            for (f, (value, curl)) in [(e, ce), (h, ch)].into_iter().enumerate() {
                let c0 = 3 * f;
                let grad = |c: usize| {
                    let i = 3 * (c0 + c);
                    jt * Vec3::new(dref[i * nq + q], dref[(i + 1) * nq + q], dref[(i + 2) * nq + q])
                };
                let (gx, gy, gz) = (grad(0), grad(1), grad(2));
                let curl_h = Vec3::new(gz.y - gy.z, gx.z - gz.x, gy.x - gx.y);
                let value_h = Vec3::new(vals[c0 * nq + q], vals[(c0 + 1) * nq + q], vals[(c0 + 2) * nq + q]);
                out[f] += w * det * (curl - curl_h).norm_squared();
                out[2 + f] += w * det * (value - value_h).norm_squared();
            }
        }
        out
    }

    /// `‖curl(V - V_h)‖` and `‖V - V_h‖` over the mesh for both fields.
    ///
    /// Element contributions are summed in element order, so the result does
    /// not depend on the thread count.
    pub fn errors(&self, mesh: &Mesh, state: &FieldState, exact: &dyn AnalyticField, t: f64) -> Result<FieldErrors> {
        if state.np() != self.np || state.num_elements() != mesh.num_elements() {
            return Err(Error::InvalidInput(format!(
                "state has {} elements of {} nodes, expected {} of {}",
                state.num_elements(),
                state.np(),
                mesh.num_elements(),
                self.np
            )));
        }
        let parts: Vec<[f64; 4]> = (0..mesh.num_elements())
            .into_par_iter()
            .map(|k| self.element_squares(mesh, state, exact, t, k))
            .collect();
        let mut total = [0.0; 4];
        for p in &parts {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        let [ce, ch, le, lh] = total.map(f64::sqrt);
        Ok(FieldErrors {
            curl_e: ce,
            curl_h: ch,
            l2_e: le,
            l2_h: lh,
        })
    }
}

/// `‖curl(V(t) - V_h)‖_Omega` for one field, with the default error
/// quadrature of the state's degree.
pub fn hcurl_error(
    mesh: &Mesh,
    reference: &ReferenceElement,
    state: &FieldState,
    exact: &dyn AnalyticField,
    field: FieldKind,
) -> Result<f64> {
    let eval = ErrorEvaluator::new(reference, error_quadrature_degree(reference.degree()))?;
    Ok(eval.errors(mesh, state, exact, state.time())?.curl(field))
}

/// `‖V(t) - V_h‖_Omega` for one field.
pub fn l2_error(
    mesh: &Mesh,
    reference: &ReferenceElement,
    state: &FieldState,
    exact: &dyn AnalyticField,
    field: FieldKind,
) -> Result<f64> {
    let eval = ErrorEvaluator::new(reference, error_quadrature_degree(reference.degree()))?;
    Ok(eval.errors(mesh, state, exact, state.time())?.l2(field))
}

/// `1/2 sum_K ∫_K (eps |E_h|^2 + mu |H_h|^2)`.
pub fn discrete_energy(mesh: &Mesh, reference: &ReferenceElement, state: &FieldState) -> f64 {
    let mass = reference.mass();
    let np = reference.np();
    let parts: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let m = mesh.material(k);
            let det = mesh.geometry(k).det.abs();
            let mut e = 0.0;
            for c in 0..COMPONENTS {
                let u = nalgebra::DVectorView::from_slice(state.component(k, c), np);
                let coeff = if c < 3 { m.eps } else { m.mu };
                e += coeff * u.dot(&(mass * u));
            }
            0.5 * det * e
        })
        .collect();
    parts.iter().sum()
}

/// Curls `(curl E_h, curl H_h)` of the state at `x` inside `element`.
pub fn point_curls(mesh: &Mesh, reference: &ReferenceElement, state: &FieldState, element: usize, x: &Vec3) -> (Vec3, Vec3) {
    let r = mesh.map_to_reference(element, x);
    let jt = mesh.geometry(element).jacobian_inv.transpose();
    let grads: Vec<Vec3> = reference
        .eval_basis_grad(&r)
        .iter()
        .map(|g| jt * Vec3::new(g[0], g[1], g[2]))
        .collect();
    let curl = |offset: usize| {
        let d = |c: usize| -> Vec3 {
            state
                .component(element, offset + c)
                .iter()
                .zip(&grads)
                .map(|(u, g)| g * *u)
                .sum()
        };
        let (gx, gy, gz) = (d(0), d(1), d(2));
        Vec3::new(gz.y - gy.z, gx.z - gz.x, gy.x - gx.y)
    };
    (curl(0), curl(3))
}

/// Probe points resolved to the elements containing them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub points: Vec<Vec3>,
    pub elements: Vec<usize>,
}

impl ProbeSet {
    pub fn locate(mesh: &Mesh, points: &[Vec3]) -> Result<Self> {
        let elements = points
            .iter()
            .map(|p| {
                mesh.locate_point(p, 0)
                    .ok_or_else(|| Error::InvalidInput(format!("probe point {p:?} is outside the mesh")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points: points.to_vec(),
            elements,
        })
    }

    /// `[curl E, curl H]` at every probe.
    pub fn sample(&self, mesh: &Mesh, reference: &ReferenceElement, state: &FieldState) -> Vec<[Vec3; 2]> {
        self.points
            .iter()
            .zip(&self.elements)
            .map(|(p, &k)| {
                let (ce, ch) = point_curls(mesh, reference, state, k, p);
                [ce, ch]
            })
            .collect()
    }
}

/// Point curls of both fields at every probe over a time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeSeries {
    pub times: Vec<f64>,
    /// `curls[n][p]` is `[curl E, curl H]` at time `n`, probe `p`.
    pub curls: Vec<Vec<[Vec3; 2]>>,
}

impl ProbeSeries {
    pub fn push(&mut self, t: f64, sample: Vec<[Vec3; 2]>) {
        self.times.push(t);
        self.curls.push(sample);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Every `stride`-th entry starting from index `stride - 1`.
    pub fn every(&self, stride: usize) -> Self {
        let keep = |i: &usize| (i + 1) % stride == 0;
        Self {
            times: (0..self.len()).filter(keep).map(|i| self.times[i]).collect(),
            curls: (0..self.len()).filter(keep).map(|i| self.curls[i].clone()).collect(),
        }
    }
}

/// Relative probe errors of one field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeError {
    pub probe: usize,
    pub field: FieldKind,
    /// Error of the unprocessed solution.
    pub err: f64,
    /// Error of the postprocessed solution.
    pub err_post: f64,
}

fn check_grid(reference: &ProbeSeries, other: &ProbeSeries) -> Result<()> {
    let scale = reference.times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    for (n, (a, b)) in reference.times.iter().zip(&other.times).enumerate() {
        if (a - b).abs() > 1e-9 * scale {
            return Err(Error::TimeGridMisalignment { step: n + 1, time: *b });
        }
    }
    if reference.len() != other.len() {
        return Err(Error::TimeGridMisalignment {
            step: reference.len().min(other.len()) + 1,
            time: f64::NAN,
        });
    }
    Ok(())
}

/// `err(V)^2 = sum_n |curl(V_r - V_h)(t_n, A)|^2 / sum_n |curl V_r(t_n, A)|^2`
/// for every probe and field, and `err*` likewise for the postprocessed
/// series.
pub fn probe_relative_errors(
    reference: &ProbeSeries,
    primary: &ProbeSeries,
    postprocessed: &ProbeSeries,
) -> Result<Vec<ProbeError>> {
    check_grid(reference, primary)?;
    check_grid(reference, postprocessed)?;
    let probes = reference.curls.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(2 * probes);
    for p in 0..probes {
        for (f, field) in FieldKind::BOTH.into_iter().enumerate() {
            let mut den = 0.0;
            let mut num = 0.0;
            let mut num_post = 0.0;
            for n in 0..reference.len() {
                let r = reference.curls[n][p][f];
                den += r.norm_squared();
                num += (r - primary.curls[n][p][f]).norm_squared();
                num_post += (r - postprocessed.curls[n][p][f]).norm_squared();
            }
            if den == 0.0 || !den.is_finite() {
                return Err(Error::ZeroDenominator { probe: p });
            }
            out.push(ProbeError {
                probe: p,
                field,
                err: (num / den).sqrt(),
                err_post: (num_post / den).sqrt(),
            });
        }
    }
    Ok(out)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocRow {
    pub h: f64,
    pub error: f64,
    /// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`, absent on the first row.
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

impl EocTable {
    /// The orders from the second row on.
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.eoc).collect()
    }
}

/// Estimated orders of convergence of `errors` over decreasing mesh sizes.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<EocTable> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "eoc needs matching lists of at least two entries, got {} errors and {} sizes",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput(format!("eoc needs positive errors, got {e}")));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::InvalidInput("mesh sizes must be positive and strictly decreasing".into()));
    }
    let rows = (0..errors.len())
        .map(|i| EocRow {
            h: hs[i],
            error: errors[i],
            eoc: (i > 0).then(|| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln()),
        })
        .collect();
    Ok(EocTable { rows })
}

/// Errors of one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub step: usize,
    pub time: f64,
    pub raw: FieldErrors,
    /// Errors of the postprocessed fields, when computed at this step.
    pub post: Option<FieldErrors>,
}

/// Error history of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub degree: usize,
    /// Mesh size `L / n` (or the largest element diameter for file meshes).
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<ErrorSample>,
}

impl ErrorReport {
    /// The sample at the final time.
    pub fn final_sample(&self) -> Option<&ErrorSample> {
        self.samples.last()
    }

    /// Every recorded value is finite and nonnegative.
    pub fn is_valid(&self) -> bool {
        let ok = |e: &FieldErrors| [e.curl_e, e.curl_h, e.l2_e, e.l2_h].iter().all(|v| v.is_finite() && *v >= 0.0);
        self.samples.iter().all(|s| ok(&s.raw) && s.post.as_ref().is_none_or(ok))
    }
}
