//! Refinement study driver and the `verify-flux` / `mesh-info` commands.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use surface_fv::numflux::Axiom;
use surface_fv::{
    cfl_timestep, l1_error_vs_function, project_initial, verify_bound_fluxes, verify_flux_axioms, BoundFluxes,
    Diagnostics, DiagnosticRecord, DiagnosticsSummary, FaceFluxScheme, FluxAxiomReport, FluxKind, FluxModel, Mesh64,
    MeshKind, Point64, Solver, State64,
};

use crate::config::{ExperimentConfig, ManifoldSpec};
use crate::fit::{fit_rate, RateFit};
use crate::initial::exact_rotation_solution;
use crate::output::{write_convergence_csv, write_diagnostics_csv, write_json};
use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub tau: f64,
    pub l1_error: f64,
    pub wall_s: f64,
}

/// One solver run on one mesh.
pub struct LevelRun {
    pub level: u32,
    pub mesh: Mesh64,
    pub initial: State64,
    pub state: State64,
    pub tau: f64,
    pub last_tau: f64,
    pub steps: usize,
    pub lipschitz: f64,
    pub range_exits: usize,
    pub records: Vec<DiagnosticRecord>,
    pub diagnostics: DiagnosticsSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: u32,
    pub cells: usize,
    pub faces: usize,
    pub h: f64,
    pub tau: f64,
    /// τ/h with the nominal τ; the a-posteriori time-space ratio.
    pub tau_over_h: f64,
    pub last_tau: f64,
    pub steps: usize,
    pub l1_error: f64,
    pub wall_s: f64,
    pub lipschitz: f64,
    pub sup_perimeter_area_ratio: f64,
    pub gamma2: f64,
    pub range_exits: usize,
    pub diagnostics: DiagnosticsSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// "exact" or "reference"
    pub kind: &'static str,
    pub reference_level: Option<u32>,
    pub reference_diagnostics: Option<DiagnosticsSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    /// "ok" or "error"
    pub status: &'static str,
    pub error: Option<String>,
    pub config: BTreeMap<String, String>,
    pub flux: FluxKind,
    pub scheme: FaceFluxScheme,
    pub initial: crate::InitialCondition,
    pub final_time: f64,
    pub cfl_safety: f64,
    pub comparison: Option<Comparison>,
    pub levels: Vec<LevelSummary>,
    pub fit: Option<RateFit>,
    pub errors_strictly_decreasing: bool,
}

impl Summary {
    pub fn rows(&self) -> Vec<ConvergenceRow> {
        self.levels
            .iter()
            .map(|l| ConvergenceRow {
                level: l.level,
                h: l.h,
                tau: l.tau,
                l1_error: l.l1_error,
                wall_s: l.wall_s,
            })
            .collect()
    }

    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().and_then(|f| f.rate)
    }
}

/// Projects the configured initial data on `level`, picks the CFL step and
/// runs to the final time with all per-step diagnostics.
pub fn simulate(cfg: &ExperimentConfig, level: u32, c_grid_size: usize) -> Result<LevelRun, HarnessError> {
    let mesh = cfg.build_mesh(level)?;
    let m = cfg.manifold();
    let ic = cfg.initial;
    let s0 = project_initial(&mesh, |p| ic.eval(&m, p))?;
    let fm = FluxModel::with_data_range(cfg.flux, cfg.velocity, &s0.values)?;
    let tau = cfl_timestep(&mesh, &fm, cfg.cfl_safety)?;
    let mut solver = Solver::new(&mesh, fm, cfg.scheme)?;
    let lipschitz = solver.lipschitz();
    let mut diag = Diagnostics::new(&mesh, &s0, c_grid_size);
    let out = solver.run(s0.clone(), cfg.final_time, tau, &mut diag)?;
    let (records, diagnostics) = diag.into_parts();
    Ok(LevelRun {
        level,
        initial: s0,
        state: out.state,
        tau,
        last_tau: out.last_tau,
        steps: out.steps,
        lipschitz,
        range_exits: out.range_exits,
        records,
        diagnostics,
        mesh,
    })
}

/// The same scheme on a finer mesh, used in place of an exact solution.
pub fn reference_solution(cfg: &ExperimentConfig, fine_level: u32) -> Result<LevelRun, HarnessError> {
    if let Some(&top) = cfg.levels.iter().max() {
        if fine_level <= top {
            return Err(HarnessError::Precondition(format!(
                "reference level {fine_level} must exceed every study level (max {top})"
            )));
        }
    }
    simulate(cfg, fine_level, 0)
}

/// Piecewise-constant reference field sampled at the fine cell containing
/// each point.
pub fn sample_reference<'a>(reference: &'a LevelRun) -> impl Fn(&Point64) -> f64 + Sync + 'a {
    move |p: &Point64| reference.state.values[reference.mesh.locate(p, 0)]
}

fn level_summary(run: &LevelRun, l1_error: f64, wall_s: f64) -> LevelSummary {
    LevelSummary {
        level: run.level,
        cells: run.mesh.num_cells(),
        faces: run.mesh.num_faces(),
        h: run.mesh.h,
        tau: run.tau,
        tau_over_h: run.tau / run.mesh.h,
        last_tau: run.last_tau,
        steps: run.steps,
        l1_error,
        wall_s,
        lipschitz: run.lipschitz,
        sup_perimeter_area_ratio: run.mesh.sup_perimeter_area_ratio(),
        gamma2: run.mesh.audit_shape_regularity().gamma2,
        range_exits: run.range_exits,
        diagnostics: run.diagnostics.clone(),
    }
}

/// Runs every level, measures the L¹ error at the final time and writes
/// `convergence.csv`, `diagnostics-level<k>.csv`, `mesh-level<k>.json` and
/// `summary.json` into `out`. On failure the summary is still written with
/// `status = "error"` and the levels completed so far.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, HarnessError> {
    std::fs::create_dir_all(out)?;
    let mut summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        status: "ok",
        error: None,
        config: cfg.raw.clone(),
        flux: cfg.flux,
        scheme: cfg.scheme,
        initial: cfg.initial,
        final_time: cfg.final_time,
        cfl_safety: cfg.cfl_safety,
        comparison: None,
        levels: Vec::new(),
        fit: None,
        errors_strictly_decreasing: false,
    };
    let result = study(cfg, out, &mut summary);
    if let Err(e) = &result {
        summary.status = "error";
        summary.error = Some(e.to_string());
    }
    write_convergence_csv(&out.join("convergence.csv"), &summary.rows())?;
    write_json(&out.join("summary.json"), &summary)?;
    result.map(|_| summary)
}

fn study(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary) -> Result<(), HarnessError> {
    let m = cfg.manifold();
    let ic = cfg.initial;
    let reference = match cfg.flux {
        FluxKind::LinearAdvection => {
            summary.comparison = Some(Comparison {
                kind: "exact",
                reference_level: None,
                reference_diagnostics: None,
            });
            None
        }
        FluxKind::Burgers => {
            let fine = cfg.effective_reference_level();
            let r = reference_solution(cfg, fine)?;
            summary.comparison = Some(Comparison {
                kind: "reference",
                reference_level: Some(fine),
                reference_diagnostics: Some(r.diagnostics.clone()),
            });
            Some(r)
        }
    };

    for &level in &cfg.levels {
        let start = Instant::now();
        let run = simulate(cfg, level, cfg.c_grid_size)?;
        let l1_error = match &reference {
            None => {
                let fm = FluxModel::with_data_range(cfg.flux, cfg.velocity, &run.initial.values)?;
                let exact = exact_rotation_solution(&m, &fm, |p: &Point64| ic.eval(&m, p), cfg.final_time)?;
                l1_error_vs_function(&run.mesh, &run.state, exact)?
            }
            Some(r) => l1_error_vs_function(&run.mesh, &run.state, sample_reference(r))?,
        };
        let wall_s = start.elapsed().as_secs_f64();
        write_json(&out.join(format!("mesh-level{level}.json")), &run.mesh.to_export())?;
        write_diagnostics_csv(&out.join(format!("diagnostics-level{level}.csv")), &run.records)?;
        summary.levels.push(level_summary(&run, l1_error, wall_s));
    }

    let errors: Vec<f64> = summary.levels.iter().map(|l| l.l1_error).collect();
    summary.errors_strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    if summary.levels.len() >= 2 {
        let rows: Vec<(f64, f64)> = summary.levels.iter().map(|l| (l.h, l.l1_error)).collect();
        summary.fit = Some(fit_rate(&rows)?);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativeControl {
    pub scheme: FaceFluxScheme,
    pub samples: usize,
    pub monotonicity_violations: usize,
    pub consistency_violations: usize,
    pub conservation_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyFluxOutcome {
    pub schema_version: u32,
    pub level: u32,
    pub flux: FluxKind,
    pub seed: u64,
    pub u_range: (f64, f64),
    pub reports: Vec<FluxAxiomReport>,
    /// Rusanov with every wave speed forced to zero.
    pub negative_control: NegativeControl,
}

impl VerifyFluxOutcome {
    pub fn is_clean(&self) -> bool {
        self.reports.iter().all(FluxAxiomReport::is_clean)
    }
}

/// Flux axioms for both schemes on the configured model at `verify.level`,
/// plus the zero-wave-speed control that must fail monotonicity.
pub fn verify_flux(cfg: &ExperimentConfig, seed: u64) -> Result<VerifyFluxOutcome, HarnessError> {
    let mesh = cfg.build_mesh(cfg.verify_level)?;
    let m = cfg.manifold();
    let ic = cfg.initial;
    let s0 = project_initial(&mesh, |p| ic.eval(&m, p))?;
    let fm = FluxModel::with_data_range(cfg.flux, cfg.velocity, &s0.values)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    for scheme in [FaceFluxScheme::Rusanov, FaceFluxScheme::EngquistOsher] {
        reports.push(verify_flux_axioms(scheme, &mesh, &fm, cfg.verify_samples, &mut rng)?);
    }
    let mut broken = BoundFluxes::new(&mesh, &fm)?;
    for f in &mut broken.faces {
        f.speed = 0.0;
    }
    let control = verify_bound_fluxes(FaceFluxScheme::Rusanov, &mesh, &fm, &broken, cfg.verify_samples, &mut rng)?;
    let negative_control = NegativeControl {
        scheme: FaceFluxScheme::Rusanov,
        samples: cfg.verify_samples,
        monotonicity_violations: control.count(Axiom::NondecreasingInFirst) + control.count(Axiom::NonincreasingInSecond),
        consistency_violations: control.count(Axiom::Consistency),
        conservation_violations: control.count(Axiom::Conservation),
    };
    Ok(VerifyFluxOutcome {
        schema_version: SCHEMA_VERSION,
        level: cfg.verify_level,
        flux: cfg.flux,
        seed,
        u_range: fm.u_range,
        reports,
        negative_control,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub level: u32,
    pub kind: String,
    pub cells: usize,
    pub faces: usize,
    pub vertices: usize,
    pub euler_characteristic: i64,
    pub h: f64,
    pub total_area: f64,
    pub measure: f64,
    pub gamma2: f64,
    pub min_shape_ratio: f64,
    pub max_shape_ratio: f64,
    pub sup_perimeter_area_ratio: f64,
}

/// Shape audit of every configured level; writes `mesh-level<k>.json`.
pub fn mesh_info(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MeshInfo>, HarnessError> {
    std::fs::create_dir_all(out)?;
    let mut infos = Vec::new();
    for &level in &cfg.levels {
        let mesh = cfg.build_mesh(level)?;
        let audit = mesh.audit_shape_regularity();
        let (lo, hi) = audit
            .ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        let kind = match (cfg.manifold, mesh.kind) {
            (_, MeshKind::Torus { nx, ny }) => format!("torus {nx}x{ny}"),
            (ManifoldSpec::Sphere { .. }, _) => format!("icosphere level {level}"),
            _ => "triangulation".to_string(),
        };
        write_json(&out.join(format!("mesh-level{level}.json")), &mesh.to_export())?;
        infos.push(MeshInfo {
            level,
            kind,
            cells: mesh.num_cells(),
            faces: mesh.num_faces(),
            vertices: mesh.num_vertices(),
            euler_characteristic: mesh.euler_characteristic(),
            h: mesh.h,
            total_area: mesh.total_area(),
            measure: mesh.manifold.measure(),
            gamma2: audit.gamma2,
            min_shape_ratio: lo,
            max_shape_ratio: hi,
            sup_perimeter_area_ratio: mesh.sup_perimeter_area_ratio(),
        });
    }
    write_json(&out.join("mesh-info.json"), &infos)?;
    Ok(infos)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
        manifold = sphere
        mesh.levels = 1, 2
        velocity.axis = 0, 1, 1
        initial.kind = cosine_bell
        initial.radius = 0.8
        time.revolutions = 0.05
    ";

    #[test]
    fn small_study_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let s = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(s.status, "ok");
        assert_eq!(s.levels.len(), 2);
        assert!(s.levels[1].h < s.levels[0].h);
        for f in ["convergence.csv", "summary.json", "diagnostics-level1.csv", "mesh-level2.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        assert!(csv.starts_with("level,h,tau,l1_error,wall_s\n"));
        let diag = std::fs::read_to_string(dir.path().join("diagnostics-level1.csv")).unwrap();
        assert!(diag.starts_with("step,time,mass,min,max,tv,max_entropy_residual,cfl_number\n"));
        for l in &s.levels {
            assert_eq!(l.diagnostics.entropy_violations, 0);
        }
    }

    #[test]
    fn zero_velocity_rejected_at_cfl() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(&format!("{SMALL}\nvelocity.omega = 0\ntime.final = 1").replace("time.revolutions = 0.05", "")).unwrap();
        let err = run_experiment(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, HarnessError::Core(surface_fv::FvError::Config(_))), "{err}");
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(json["status"], "error");
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
    }

    #[test]
    fn reference_level_must_exceed_study_levels() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        assert!(matches!(reference_solution(&cfg, 2), Err(HarnessError::Precondition(_))));
        assert!(matches!(reference_solution(&cfg, 1), Err(HarnessError::Precondition(_))));
    }

    #[test]
    fn reference_is_deterministic_and_close_to_exact() {
        let text = "
            manifold = flat_torus
            mesh.levels = 0
            mesh.torus_base = 4
            velocity.vx = 1
            velocity.vy = 0.5
            initial.kind = column_step
            time.final = 0.1
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let a = reference_solution(&cfg, 3).unwrap();
        let b = reference_solution(&cfg, 3).unwrap();
        assert_eq!(a.state.values, b.state.values);
        // the reference and the exact solution differ by the fine mesh's own error
        let m = cfg.manifold();
        let ic = cfg.initial;
        let fm = FluxModel::new(FluxKind::LinearAdvection, cfg.velocity, (0.0, 1.0)).unwrap();
        let exact = exact_rotation_solution(&m, &fm, |p: &Point64| ic.eval(&m, p), cfg.final_time).unwrap();
        let fine_err = l1_error_vs_function(&a.mesh, &a.state, &exact).unwrap();
        let coarse = simulate(&cfg, 0, 0).unwrap();
        let vs_ref = l1_error_vs_function(&coarse.mesh, &coarse.state, sample_reference(&a)).unwrap();
        let vs_exact = l1_error_vs_function(&coarse.mesh, &coarse.state, &exact).unwrap();
        assert!((vs_ref - vs_exact).abs() <= 2.0 * fine_err, "{vs_ref} {vs_exact} {fine_err}");
    }

    #[test]
    fn verify_flux_reports_clean_axioms_and_failing_control() {
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.verify_samples = 500;
        let out = verify_flux(&cfg, 7).unwrap();
        assert!(out.is_clean());
        assert!(out.negative_control.monotonicity_violations >= 1);
    }

    #[test]
    fn mesh_info_audits_levels() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let info = mesh_info(&cfg, dir.path()).unwrap();
        assert_eq!(info[0].cells, 80);
        assert_eq!(info[1].euler_characteristic, 2);
        assert!(dir.path().join("mesh-level1.json").exists());
    }
}
