//! Scenario runs, convergence sweeps and reference comparisons.

use std::path::Path;

use log::info;
use maxwell_dg::analysis::{
    eoc, error_quadrature_degree, probe_relative_errors, ErrorEvaluator, ErrorReport, ErrorSample, EocTable,
    FieldErrors, FieldKind, ProbeError, ProbeSeries, ProbeSet,
};
use maxwell_dg::dg_operator::{DgOperator, FieldState};
use maxwell_dg::mesh::Mesh;
use maxwell_dg::postprocess::{Postprocessor, Selection};
use maxwell_dg::reference_element::ReferenceElement;
use maxwell_dg::scenarios::Scenario;
use maxwell_dg::time_integration::{cfl_time_step, run_simulation, step_count, LsrkScheme, Observer};
use maxwell_dg::{analysis, Error, Vec3};

use crate::config::{PostprocessSteps, RunConfig};
use crate::CliError;

/// Observer settings of one simulation.
#[derive(Debug, Clone, Default)]
pub struct ObserverOptions {
    /// Record errors every `error_stride` steps (0: final step only).
    pub error_stride: usize,
    pub postprocess_steps: PostprocessSteps,
    /// Probe points at which point curls are recorded every step.
    pub probes: Vec<Vec3>,
    /// Also record the point curls of the postprocessed fields.
    pub probe_postprocessed: bool,
    pub record_energy: bool,
}

/// Probe curls recorded during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeRecords {
    pub points: Vec<Vec3>,
    pub raw: ProbeSeries,
    pub postprocessed: ProbeSeries,
}

/// Everything a single simulation produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: String,
    pub degree: usize,
    pub n: Option<usize>,
    pub num_elements: usize,
    pub t_final: f64,
    pub report: ErrorReport,
    /// `(step, t, energy)` after every step, when requested.
    pub energy: Vec<(usize, f64, f64)>,
    pub probes: ProbeRecords,
    /// Largest relative violation of the postprocessing gradient constraint.
    pub max_gradient_residual: f64,
    pub state: FieldState,
}

/// Largest element diameter.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.elements()
        .iter()
        .map(|el| {
            let v = el.map(|i| mesh.vertices()[i]);
            let mut d: f64 = 0.0;
            for a in 0..4 {
                for b in a + 1..4 {
                    d = d.max((v[a] - v[b]).norm());
                }
            }
            d
        })
        .fold(0.0, f64::max)
}

/// The time step: the override or the CFL step for `degree`.
pub fn time_step(mesh: &Mesh, degree: usize, dt: Option<f64>) -> Result<f64, CliError> {
    match dt {
        Some(dt) => Ok(dt),
        None => Ok(cfl_time_step(mesh, degree)?),
    }
}

fn wants_post(options: &ObserverOptions, step: usize, recorded: bool, last: bool) -> bool {
    last || match &options.postprocess_steps {
        PostprocessSteps::Recorded => recorded,
        PostprocessSteps::Final => false,
        PostprocessSteps::List(steps) => steps.contains(&step),
    }
}

/// Runs `scenario` on `mesh` at degree `degree` up to `t_final` with step
/// `dt` (the last step is shortened to land on `t_final`).
pub fn simulate(
    scenario: &Scenario,
    mesh: &Mesh,
    degree: usize,
    dt: f64,
    t_final: f64,
    options: &ObserverOptions,
) -> Result<RunOutcome, CliError> {
    let reference = ReferenceElement::new(degree)?;
    let op = DgOperator::new(mesh, &reference, scenario.source());
    let initial = scenario.initial_state(mesh, &reference)?;
    let steps = step_count(t_final - initial.time(), dt);
    let exact = scenario.exact.clone();
    let post = Postprocessor::new(mesh, &reference)?;
    let raw_eval = ErrorEvaluator::new(&reference, error_quadrature_degree(degree))?;
    let post_eval = ErrorEvaluator::new(post.spaces().star_element(), error_quadrature_degree(degree))?;
    let probe_set = ProbeSet::locate(mesh, &options.probes)?;
    info!(
        "{}: k={degree}, {} elements, dt={dt:e} s, {steps} steps",
        scenario.name(),
        mesh.num_elements()
    );

    let mut report = ErrorReport {
        degree,
        h: mesh_size(mesh),
        dt,
        steps,
        samples: Vec::new(),
    };
    let mut energy = Vec::new();
    let mut probes = ProbeRecords {
        points: options.probes.clone(),
        ..ProbeRecords::default()
    };
    let mut max_residual: f64 = 0.0;

    let mut observe = |step: usize, t: f64, state: &FieldState| -> maxwell_dg::Result<()> {
        let last = step == steps;
        if options.record_energy {
            energy.push((step, t, analysis::discrete_energy(mesh, &reference, state)));
        }
        if !probe_set.points.is_empty() {
            probes.raw.push(t, probe_set.sample(mesh, &reference, state));
            if options.probe_postprocessed {
                let fluxes = op.compute_numerical_fluxes(state, t);
                let pp = post.postprocess_state(state, &fluxes, Selection::Elements(&probe_set.elements))?;
                max_residual = max_residual.max(post.gradient_moment_residual(state, &pp));
                probes
                    .postprocessed
                    .push(t, probe_set.sample(mesh, post.spaces().star_element(), &pp.state));
            }
        }
        let Some(exact) = exact.as_deref() else {
            return Ok(());
        };
        let recorded = last || (options.error_stride > 0 && step % options.error_stride == 0);
        let with_post = wants_post(options, step, recorded, last);
        if !(recorded || with_post) {
            return Ok(());
        }
        let raw = raw_eval.errors(mesh, state, exact, t)?;
        let post_errors = if with_post {
            let fluxes = op.compute_numerical_fluxes(state, t);
            let pp = post.postprocess_state(state, &fluxes, Selection::All)?;
            max_residual = max_residual.max(post.gradient_moment_residual(state, &pp));
            Some(post_eval.errors(mesh, &pp.state, exact, t)?)
        } else {
            None
        };
        report.samples.push(ErrorSample {
            step,
            time: t,
            raw,
            post: post_errors,
        });
        if last {
            info!(
                "{}: final curl errors E {:.3e} (post {:.3e}), H {:.3e} (post {:.3e})",
                scenario.name(),
                raw.curl_e,
                post_errors.map_or(f64::NAN, |p| p.curl_e),
                raw.curl_h,
                post_errors.map_or(f64::NAN, |p| p.curl_h)
            );
        }
        Ok(())
    };
    let state = {
        let mut observers: [&mut Observer<FieldState>; 1] = [&mut observe];
        run_simulation(&LsrkScheme::lsrk54(), &op, initial, t_final, dt, &mut observers)?
    };
    Ok(RunOutcome {
        scenario: scenario.name().to_string(),
        degree,
        n: None,
        num_elements: mesh.num_elements(),
        t_final,
        report,
        energy,
        probes,
        max_gradient_residual: max_residual,
        state,
    })
}

fn observer_options(config: &RunConfig) -> ObserverOptions {
    ObserverOptions {
        error_stride: config.error_stride,
        postprocess_steps: config.postprocess_steps.clone(),
        probes: config.probes.clone(),
        probe_postprocessed: !config.probes.is_empty(),
        record_energy: config.record_energy,
    }
}

/// One run of the configured scenario.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let scenario = Scenario::by_kind(config.scenario);
    let mesh = scenario.build_mesh(config.n, config.mesh.as_deref())?;
    let dt = time_step(&mesh, config.degree, config.dt)?;
    let t_final = config.t_final.unwrap_or(scenario.t_final);
    let mut outcome = simulate(&scenario, &mesh, config.degree, dt, t_final, &observer_options(config))?;
    outcome.n = if config.mesh.is_some() { None } else { config.n };
    if config.mesh.is_none() {
        if let Some(n) = config.n {
            outcome.report.h = scenario.length / n as f64;
        }
    }
    Ok(outcome)
}

/// Final errors of one sweep entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub raw: FieldErrors,
    pub post: FieldErrors,
    pub max_gradient_residual: f64,
}

/// Final errors over the sweep and their convergence orders.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub degree: usize,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Convergence table of the curl error of `field`, raw or postprocessed.
    pub fn table(&self, field: FieldKind, postprocessed: bool) -> Result<EocTable, CliError> {
        let errors: Vec<f64> = self
            .entries
            .iter()
            .map(|e| if postprocessed { e.post.curl(field) } else { e.raw.curl(field) })
            .collect();
        let hs: Vec<f64> = self.entries.iter().map(|e| e.h).collect();
        Ok(eoc(&errors, &hs)?)
    }
}

/// Runs the configured scenario on every mesh of the sweep list, recording
/// only the final errors.
pub fn sweep(config: &RunConfig) -> Result<SweepResult, CliError> {
    config.validate()?;
    if config.sweep.len() < 2 {
        return Err(CliError::Config(crate::config::ConfigError::Invalid(
            "a sweep needs at least two mesh resolutions".into(),
        )));
    }
    let mut entries = Vec::with_capacity(config.sweep.len());
    for &n in &config.sweep {
        let cfg = RunConfig {
            n: Some(n),
            mesh: None,
            sweep: Vec::new(),
            error_stride: 0,
            postprocess_steps: PostprocessSteps::Final,
            probes: Vec::new(),
            record_energy: false,
            ..config.clone()
        };
        let outcome = run(&cfg)?;
        let last = *outcome
            .report
            .final_sample()
            .ok_or_else(|| Error::InvalidInput(format!("scenario `{}` has no exact solution", outcome.scenario)))?;
        entries.push(SweepEntry {
            n,
            h: outcome.report.h,
            dt: outcome.report.dt,
            steps: outcome.report.steps,
            raw: last.raw,
            post: last.post.expect("final step is always postprocessed"),
            max_gradient_residual: outcome.max_gradient_residual,
        });
    }
    Ok(SweepResult {
        degree: config.degree,
        entries,
    })
}

/// Probe errors of a primary run against a higher-order reference run.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub points: Vec<Vec3>,
    pub errors: Vec<ProbeError>,
    pub primary: RunOutcome,
    pub reference: RunOutcome,
}

/// Runs the primary configuration and a reference with degree
/// `reference_degree` (default `k + 2`) and step `dt / reference_substeps`
/// on the same mesh, then compares point curls at the probes on the common
/// time grid. The primary step is rounded down so that it divides the final
/// time.
pub fn compare_with_reference(config: &RunConfig, reference: &RunConfig) -> Result<Comparison, CliError> {
    config.validate()?;
    if config.mesh != reference.mesh || config.n != reference.n || config.scenario != reference.scenario {
        return Err(CliError::Config(crate::config::ConfigError::Invalid(
            "primary and reference runs must share the scenario and the mesh".into(),
        )));
    }
    let scenario = Scenario::by_kind(config.scenario);
    let mesh = scenario.build_mesh(config.n, config.mesh.as_deref())?;
    compare_on_mesh(&scenario, &mesh, config, reference)
}

/// [`compare_with_reference`] on an already built mesh.
pub fn compare_on_mesh(
    scenario: &Scenario,
    mesh: &Mesh,
    config: &RunConfig,
    reference: &RunConfig,
) -> Result<Comparison, CliError> {
    let points = if config.probes.is_empty() {
        scenario.probes.clone()
    } else {
        config.probes.clone()
    };
    if points.is_empty() {
        return Err(CliError::Config(crate::config::ConfigError::Invalid(
            "a comparison needs probe points".into(),
        )));
    }
    let t_final = config.t_final.unwrap_or(scenario.t_final);
    let dt_cfl = time_step(mesh, config.degree, config.dt)?;
    let dt = t_final / step_count(t_final, dt_cfl) as f64;
    let substeps = config.reference_substeps;
    let dt_ref = reference.dt.unwrap_or(dt / substeps as f64);
    let ref_degree = reference.degree;

    let options = ObserverOptions {
        error_stride: 0,
        postprocess_steps: PostprocessSteps::Final,
        probes: points.clone(),
        probe_postprocessed: true,
        record_energy: false,
    };
    let primary = simulate(scenario, mesh, config.degree, dt, t_final, &options)?;
    let ref_options = ObserverOptions {
        probe_postprocessed: false,
        ..options
    };
    let reference_run = simulate(scenario, mesh, ref_degree, dt_ref, t_final, &ref_options)?;
    let aligned = reference_run.probes.raw.every(substeps);
    let errors = probe_relative_errors(&aligned, &primary.probes.raw, &primary.probes.postprocessed)?;
    Ok(Comparison {
        points,
        errors,
        primary,
        reference: reference_run,
    })
}

/// Writes the run outputs into `dir`.
pub fn write_run(outcome: &RunOutcome, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for field in FieldKind::BOTH {
        crate::output::write_error_csv(&dir.join(format!("errors_{}.csv", field.name())), &outcome.report, field)?;
    }
    crate::output::write_summary(&dir.join("summary.json"), outcome)?;
    if !outcome.energy.is_empty() {
        crate::output::write_energy_csv(&dir.join("energy.csv"), &outcome.energy)?;
    }
    Ok(())
}
