//! Analytical fields, sources and configuration of the built-in test cases:
//! a standing wave in a PEC cavity, a plane wave in free space and plane-wave
//! scattering by a dielectric sphere.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dg_operator::{interpolate_fields, BoundaryLoadFn, FieldState, SourceSpec};
use crate::error::{Error, Result};
use crate::mesh::{build_structured_box_mesh, load_mesh, FaceKind, Material, Mesh};
use crate::reference_element::ReferenceElement;
use crate::{c0, Vec3, EPS0, MU0};

/// A closed-form solution of the source-free Maxwell system.
pub trait AnalyticField: Send + Sync {
    /// `(E, H)` at `(t, x)`.
    fn fields(&self, t: f64, x: &Vec3) -> (Vec3, Vec3);
    /// `(curl E, curl H)` at `(t, x)`.
    fn curls(&self, t: f64, x: &Vec3) -> (Vec3, Vec3);
}

/// Standing `TM`-type mode of the PEC cube `(0, L)^3` in vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    pub length: f64,
}

impl CavityMode {
    /// `omega = sqrt(3) pi c0 / L`.
    pub fn omega(&self) -> f64 {
        3f64.sqrt() * PI * c0() / self.length
    }

    fn trig(&self, x: &Vec3) -> ([f64; 3], [f64; 3]) {
        let k = PI / self.length;
        let a = [k * x.x, k * x.y, k * x.z];
        (a.map(f64::sin), a.map(f64::cos))
    }
}

impl AnalyticField for CavityMode {
    fn fields(&self, t: f64, x: &Vec3) -> (Vec3, Vec3) {
        let (s, c) = self.trig(x);
        let w = self.omega();
        let e = (w * t).cos() * Vec3::new(-c[0] * s[1] * s[2], 0.0, s[0] * s[1] * c[2]);
        let amp = PI / self.length / (MU0 * w) * (w * t).sin();
        let h = amp * Vec3::new(-s[0] * c[1] * c[2], 2.0 * c[0] * s[1] * c[2], -c[0] * c[1] * s[2]);
        (e, h)
    }

    fn curls(&self, t: f64, x: &Vec3) -> (Vec3, Vec3) {
        let (s, c) = self.trig(x);
        let w = self.omega();
        let k = PI / self.length;
        let curl_e = k * (w * t).cos() * Vec3::new(s[0] * c[1] * c[2], -2.0 * c[0] * s[1] * c[2], c[0] * c[1] * s[2]);
        let amp = 3.0 * k * k / (MU0 * w) * (w * t).sin();
        let curl_h = amp * Vec3::new(c[0] * s[1] * s[2], 0.0, -s[0] * s[1] * c[2]);
        (curl_e, curl_h)
    }
}

/// `E = p cos(omega (t - d.x / c0))`, `H = sqrt(eps0/mu0) d x E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub polarization: Vec3,
    pub direction: Vec3,
    pub omega: f64,
}

impl PlaneWave {
    /// The free-space wave `p = x`, `d = z`, `omega = 6 pi c0 / L`.
    pub fn standard(length: f64) -> Self {
        Self {
            polarization: Vec3::x(),
            direction: Vec3::z(),
            omega: 6.0 * PI * c0() / length,
        }
    }

    fn phase(&self, t: f64, x: &Vec3) -> f64 {
        self.omega * (t - self.direction.dot(x) / c0())
    }
}

impl AnalyticField for PlaneWave {
    fn fields(&self, t: f64, x: &Vec3) -> (Vec3, Vec3) {
        let e = self.polarization * self.phase(t, x).cos();
        let h = (EPS0 / MU0).sqrt() * self.direction.cross(&e);
        (e, h)
    }

    fn curls(&self, t: f64, x: &Vec3) -> (Vec3, Vec3) {
        let k = self.omega / c0();
        let s = self.phase(t, x).sin();
        let dxp = self.direction.cross(&self.polarization);
        let curl_e = k * s * dxp;
        let curl_h = (EPS0 / MU0).sqrt() * k * s * self.direction.cross(&dxp);
        (curl_e, curl_h)
    }
}

/// Cavity solution at `(t, x)` for `L = 1` m.
pub fn cavity_exact(t: f64, x: &Vec3) -> (Vec3, Vec3) {
    CavityMode { length: 1.0 }.fields(t, x)
}

/// Incident plane wave at `(t, x)` for `L = 1` m.
pub fn planewave_incident(t: f64, x: &Vec3) -> (Vec3, Vec3) {
    PlaneWave::standard(1.0).fields(t, x)
}

/// Tangential load injecting `(E_inc, H_inc)` through an absorbing face with
/// outward normal `n` and impedance `z`: `G = n x E_inc + z (H_inc x n) x n`.
pub fn silver_muller_g(e_inc: &Vec3, h_inc: &Vec3, n: &Vec3, z: f64) -> Vec3 {
    n.cross(e_inc) + z * h_inc.cross(n).cross(n)
}

/// Boundary load of an incident wave, in the form the DG operator consumes.
pub fn incident_load(wave: Arc<dyn AnalyticField>) -> Arc<BoundaryLoadFn> {
    Arc::new(move |t, x, n, z| {
        let (e, h) = wave.fields(t, x);
        silver_muller_g(&e, &h, n, z)
    })
}

/// Probe points `A1..A9` of the scattering experiment (m).
pub const SCATTERING_PROBES: [[f64; 3]; 9] = [
    [0.0, 0.0, 0.45],
    [0.2, -0.3, 0.8],
    [0.2, -0.3, 0.2],
    [0.2, 0.3, 0.2],
    [0.2, 0.3, 0.8],
    [-0.2, -0.3, 0.8],
    [-0.2, -0.3, 0.2],
    [-0.2, 0.3, 0.2],
    [-0.2, 0.3, 0.8],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Cavity,
    PlaneWave,
    Scattering,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Cavity => "cavity",
            ScenarioKind::PlaneWave => "planewave",
            ScenarioKind::Scattering => "scattering",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cavity" => Ok(ScenarioKind::Cavity),
            "planewave" | "plane-wave" => Ok(ScenarioKind::PlaneWave),
            "scattering" => Ok(ScenarioKind::Scattering),
            other => Err(Error::InvalidInput(format!(
                "unknown scenario `{other}` (expected cavity, planewave or scattering)"
            ))),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One experiment: domain, boundary split, sources, final time and the
/// available exact solution or probe set.
#[derive(Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Side of the cubic domain (m).
    pub length: f64,
    /// Lower corner of the domain.
    pub origin: Vec3,
    /// Tag of every boundary face of generated meshes.
    pub boundary: FaceKind,
    pub t_final: f64,
    /// Exact solution used for error reporting.
    pub exact: Option<Arc<dyn AnalyticField>>,
    /// Wave injected through absorbing faces.
    pub incident: Option<Arc<dyn AnalyticField>>,
    /// Start from the exact solution at `t = 0` (otherwise from rest).
    pub initial_from_exact: bool,
    /// The mesh must come from a file.
    pub requires_mesh_file: bool,
    pub probes: Vec<Vec3>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("length", &self.length)
            .field("t_final", &self.t_final)
            .field("has_exact", &self.exact.is_some())
            .field("probes", &self.probes.len())
            .finish()
    }
}

impl Scenario {
    pub fn cavity() -> Self {
        let mode = CavityMode { length: 1.0 };
        Self {
            kind: ScenarioKind::Cavity,
            length: 1.0,
            origin: Vec3::zeros(),
            boundary: FaceKind::Pec,
            t_final: 10e-9,
            exact: Some(Arc::new(mode)),
            incident: None,
            initial_from_exact: true,
            requires_mesh_file: false,
            probes: Vec::new(),
        }
    }

    pub fn planewave() -> Self {
        let wave: Arc<dyn AnalyticField> = Arc::new(PlaneWave::standard(1.0));
        Self {
            kind: ScenarioKind::PlaneWave,
            length: 1.0,
            origin: Vec3::zeros(),
            boundary: FaceKind::Abc,
            t_final: 10e-9,
            exact: Some(wave.clone()),
            incident: Some(wave),
            initial_from_exact: true,
            requires_mesh_file: false,
            probes: Vec::new(),
        }
    }

    pub fn scattering() -> Self {
        Self {
            kind: ScenarioKind::Scattering,
            length: 1.0,
            origin: Vec3::new(-0.5, -0.5, 0.0),
            boundary: FaceKind::Abc,
            t_final: 3e-9,
            exact: None,
            incident: Some(Arc::new(PlaneWave::standard(1.0))),
            initial_from_exact: false,
            requires_mesh_file: true,
            probes: SCATTERING_PROBES.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
        }
    }

    pub fn by_kind(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Cavity => Self::cavity(),
            ScenarioKind::PlaneWave => Self::planewave(),
            ScenarioKind::Scattering => Self::scattering(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Structured `n^3`-cube mesh of the domain, or the mesh in `mesh_file`.
    pub fn build_mesh(&self, n: Option<usize>, mesh_file: Option<&Path>) -> Result<Mesh> {
        match (mesh_file, n) {
            (Some(path), _) => load_mesh(path),
            (None, _) if self.requires_mesh_file => Err(Error::InvalidInput(format!(
                "scenario `{}` needs a mesh file",
                self.name()
            ))),
            (None, Some(n)) => {
                let kind = self.boundary;
                build_structured_box_mesh(n, self.origin, self.length, Material::VACUUM, |_| kind)
            }
            (None, None) => Err(Error::InvalidInput(format!(
                "scenario `{}` needs a mesh resolution n or a mesh file",
                self.name()
            ))),
        }
    }

    pub fn source(&self) -> SourceSpec {
        SourceSpec {
            current: None,
            boundary_load: self.incident.clone().map(incident_load),
        }
    }

    /// Nodal interpolation of the initial condition.
    pub fn initial_state(&self, mesh: &Mesh, reference: &ReferenceElement) -> Result<FieldState> {
        match (&self.exact, self.initial_from_exact) {
            (Some(exact), true) => interpolate_fields(mesh, reference, 0.0, |x| exact.fields(0.0, x)),
            _ => Ok(FieldState::zeros(mesh.num_elements(), reference.np())),
        }
    }
}

/// The three experiments with their default parameters.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![Scenario::cavity(), Scenario::planewave(), Scenario::scattering()]
}

/// Parameters of the dielectric-sphere stand-in mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMeshSpec {
    /// Cubes per side of the box `[-L/2, L/2]^2 x [0, L]`.
    pub n: usize,
    pub length: f64,
    pub center: Vec3,
    pub radius: f64,
    pub eps_rel: f64,
    /// Vertex jitter amplitude relative to the cube size.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SphereMeshSpec {
    fn default() -> Self {
        Self {
            n: 10,
            length: 1.0,
            center: Vec3::new(0.0, 0.0, 0.5),
            radius: 0.15,
            eps_rel: 2.0,
            jitter: 0.1,
            seed: 2024,
        }
    }
}

/// Jittered structured mesh of the scattering box with vertices near the
/// sphere snapped onto it; elements whose centroid lies inside the sphere
/// get permittivity `eps_rel * eps0`. All boundary faces are absorbing.
pub fn build_sphere_in_box_mesh(spec: &SphereMeshSpec) -> Result<Mesh> {
    let origin = Vec3::new(-0.5 * spec.length, -0.5 * spec.length, 0.0);
    let base = build_structured_box_mesh(spec.n, origin, spec.length, Material::VACUUM, |_| FaceKind::Abc)?;
    let h = spec.length / spec.n as f64;
    let interior = base.interior_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vertices: Vec<Vec3> = base
        .vertices()
        .iter()
        .zip(&interior)
        .map(|(v, &inside)| {
            let d = Vec3::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            if !inside {
                return *v;
            }
            let r = v - spec.center;
            if (r.norm() - spec.radius).abs() < 0.3 * h && r.norm() > 0.0 {
                spec.center + r * (spec.radius / r.norm())
            } else {
                v + spec.jitter * h * d
            }
        })
        .collect();

    let nominal = h.powi(3);
    for (k, el) in base.elements().iter().enumerate() {
        let p = el.map(|i| vertices[i]);
        let det = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0]));
        if det < 0.05 * nominal {
            return Err(Error::InvalidInput(format!(
                "sphere mesh element {k} degenerates (det = {det:e}); lower the jitter"
            )));
        }
    }
    let ids = base
        .elements()
        .iter()
        .map(|el| {
            let centroid = el.iter().fold(Vec3::zeros(), |acc, &i| acc + vertices[i]) / 4.0;
            usize::from((centroid - spec.center).norm() < spec.radius)
        })
        .collect();
    base.rebuild(vertices, ids, vec![Material::VACUUM, Material::relative(spec.eps_rel, 1.0)])
}
