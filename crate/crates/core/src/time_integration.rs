//! Five-stage fourth-order low-storage Runge-Kutta time marching and CFL
//! time-step selection.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::reference_element::MAX_SOLVER_DEGREE;

/// Vector-space operations the integrator needs from a state.
pub trait OdeState: Sized {
    /// A zero state of the same shape. The integrator calls this exactly
    /// once per run to create its second buffer.
    fn zeros_like(&self) -> Self;
    /// `self += alpha * other`.
    fn axpy(&mut self, alpha: f64, other: &Self);
    fn scale(&mut self, alpha: f64);
    fn is_finite(&self) -> bool;
    fn time(&self) -> f64;
    fn set_time(&mut self, t: f64);
}

/// Right-hand side `f(t, u)` of `u' = f(t, u)`.
pub trait Rhs<S> {
    /// `out = a * out + dt * f(t, u)`.
    fn accumulate(&self, t: f64, u: &S, a: f64, dt: f64, out: &mut S);
}

impl<S, F> Rhs<S> for F
where
    S: OdeState,
    F: Fn(f64, &S, &mut S),
{
    /// Closure form: the closure writes `f(t, u)` into its output; a scratch
    /// state is allocated per call, so this is meant for small systems.
    fn accumulate(&self, t: f64, u: &S, a: f64, dt: f64, out: &mut S) {
        let mut f = u.zeros_like();
        self(t, u, &mut f);
        out.scale(a);
        out.axpy(dt, &f);
    }
}

/// Coefficients `(a_i, b_i, c_i)` of a low-storage explicit Runge-Kutta
/// scheme in the 2N form.
#[derive(Debug, Clone, PartialEq)]
pub struct LsrkScheme {
    pub a: [f64; 5],
    pub b: [f64; 5],
    pub c: [f64; 5],
}

impl LsrkScheme {
    /// The Carpenter-Kennedy LSRK(5,4) coefficients.
    pub fn lsrk54() -> Self {
        Self {
            a: [
                0.0,
                -567301805773.0 / 1357537059087.0,
                -2404267990393.0 / 2016746695238.0,
                -3550918686646.0 / 2091501179385.0,
                -1275806237668.0 / 842570457699.0,
            ],
            b: [
                1432997174477.0 / 9575080441755.0,
                5161836677717.0 / 13612068293570.0,
                1720146321549.0 / 2090206949498.0,
                3134564353537.0 / 4481467310338.0,
                2277821191437.0 / 14882151754819.0,
            ],
            c: [
                0.0,
                1432997174477.0 / 9575080441755.0,
                2526269341429.0 / 6820363962896.0,
                2006345519317.0 / 3224310063776.0,
                2802321613138.0 / 2924317926251.0,
            ],
        }
    }
}

impl Default for LsrkScheme {
    fn default() -> Self {
        Self::lsrk54()
    }
}

/// `alpha_k` of the CFL rule for `k = 1..=4`.
pub const CFL_ALPHA: [f64; MAX_SOLVER_DEGREE] = [0.70, 0.46, 0.30, 0.21];

/// `dt = alpha_k min_K V_K / (c_K A_K)`.
pub fn cfl_time_step(mesh: &Mesh, degree: usize) -> Result<f64> {
    if !(1..=MAX_SOLVER_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree {
            what: "CFL table",
            degree,
            min: 1,
            max: MAX_SOLVER_DEGREE,
        });
    }
    Ok(CFL_ALPHA[degree - 1] * mesh.min_cfl_length_over_speed())
}

/// One step from `u.time()` to `u.time() + dt`, using `u` and `work` as the
/// two storage registers. `work` is overwritten.
pub fn lsrk_step<S: OdeState, R: Rhs<S> + ?Sized>(
    scheme: &LsrkScheme,
    rhs: &R,
    u: &mut S,
    work: &mut S,
    dt: f64,
) {
    let t0 = u.time();
    for i in 0..5 {
        rhs.accumulate(t0 + scheme.c[i] * dt, u, scheme.a[i], dt, work);
        u.axpy(scheme.b[i], work);
    }
    u.set_time(t0 + dt);
}

/// Called after every step with `(step, time, state)`; steps count from 1.
pub type Observer<'a, S> = dyn FnMut(usize, f64, &S) -> Result<()> + 'a;

/// Marches `initial` to `t_final` with `N = ceil((T - t0) / dt)` steps, the
/// last one shortened to land on `T`.
pub fn run_simulation<S: OdeState, R: Rhs<S> + ?Sized>(
    scheme: &LsrkScheme,
    rhs: &R,
    mut state: S,
    t_final: f64,
    dt: f64,
    observers: &mut [&mut Observer<'_, S>],
) -> Result<S> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let t0 = state.time();
    let span = t_final - t0;
    if !(span > 0.0) {
        return Err(Error::InvalidInput(format!(
            "final time {t_final} must exceed start time {t0}"
        )));
    }
    let steps = step_count(span, dt);
    let mut work = state.zeros_like();
    for n in 1..=steps {
        let t_next = if n == steps { t_final } else { t0 + n as f64 * dt };
        let h = t_next - state.time();
        lsrk_step(scheme, rhs, &mut state, &mut work, h);
        state.set_time(t_next);
        if !state.is_finite() {
            return Err(Error::NonFinite { step: n, time: t_next });
        }
        for obs in observers.iter_mut() {
            obs(n, t_next, &state)?;
        }
    }
    Ok(state)
}

/// `ceil(span / dt)`, ignoring round-off that would add a sliver step.
pub fn step_count(span: f64, dt: f64) -> usize {
    let ratio = span / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}
