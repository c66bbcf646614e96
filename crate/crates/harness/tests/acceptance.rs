//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the shipped configs end to end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surface_fv::{
    cfl_timestep, Diagnostics, DiagnosticsSummary, FaceFluxScheme, FluxKind, FluxModel, Manifold, Mesh, Solver, State,
    VelocityField,
};
use surface_fv_harness::{run_experiment, verify_flux, ExperimentConfig, Summary};

const RUNTIME_BUDGET_S: f64 = 300.0;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn config(name: &str) -> ExperimentConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn study(cfg: &ExperimentConfig, root: &Path) -> (Summary, f64) {
    let start = Instant::now();
    let s = run_experiment(cfg, &root.join(&cfg.name)).unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
    (s, start.elapsed().as_secs_f64())
}

/// Every run a study performed, reference included.
fn all_diagnostics(s: &Summary) -> Vec<&DiagnosticsSummary> {
    let mut d: Vec<_> = s.levels.iter().map(|l| &l.diagnostics).collect();
    if let Some(r) = s.comparison.as_ref().and_then(|c| c.reference_diagnostics.as_ref()) {
        d.push(r);
    }
    d
}

fn errors(s: &Summary) -> String {
    s.levels.iter().map(|l| format!("{:.3e}", l.l1_error)).collect::<Vec<_>>().join(" > ")
}

fn rate_criterion(name: &'static str, s: &Summary, wall: f64) -> Outcome {
    let rate = s.rate().unwrap_or(f64::NAN);
    Outcome {
        name,
        pass: s.errors_strictly_decreasing && rate >= 0.25 && wall < RUNTIME_BUDGET_S,
        detail: format!("rate {rate:.4}, errors {}, {wall:.1} s", errors(s)),
    }
}

fn entropy_criterion(studies: &[&Summary]) -> Outcome {
    let d: Vec<_> = studies.iter().flat_map(|s| s.levels.iter().map(|l| &l.diagnostics)).collect();
    let evaluations: usize = d.iter().map(|x| x.entropy_evaluations).sum();
    let violations: usize = d.iter().map(|x| x.entropy_violations).sum();
    let worst = d.iter().map(|x| x.max_entropy_residual).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        name: "discrete entropy inequality on both sphere studies",
        pass: evaluations > 0 && violations == 0,
        detail: format!("{violations} violations in {evaluations} evaluations, max residual {worst:.3e}"),
    }
}

fn flux_axioms() -> Outcome {
    let base = config("sphere_cosine_bell.conf");
    let mut pass = true;
    let mut parts = Vec::new();
    for flux in [FluxKind::LinearAdvection, FluxKind::Burgers] {
        let cfg = ExperimentConfig { flux, verify_level: 2, verify_samples: 10_000, ..base.clone() };
        let o = verify_flux(&cfg, 7).expect("verify_flux");
        let clean = o.is_clean() && o.reports.len() == 2 && o.reports.iter().all(|r| r.samples == 10_000);
        let caught = o.negative_control.monotonicity_violations >= 1;
        pass &= clean && caught;
        let v: usize = o.reports.iter().map(|r| r.violations.len()).sum();
        parts.push(format!(
            "{}: {v} violations, control {}",
            flux.name(),
            o.negative_control.monotonicity_violations
        ));
    }
    Outcome {
        name: "flux axioms, both schemes and models, zero-speed control fails",
        pass,
        detail: parts.join("; "),
    }
}

fn conservation(studies: &[&Summary]) -> Outcome {
    let d: Vec<_> = studies.iter().flat_map(|s| all_diagnostics(s)).collect();
    let step = d.iter().map(|x| x.max_step_mass_drift / (x.value_scale * x.measure)).fold(0.0, f64::max);
    let cum = d.iter().map(|x| x.cumulative_mass_drift / (x.value_scale * x.measure)).fold(0.0, f64::max);
    Outcome {
        name: "mass conservation over every shipped run",
        pass: d.iter().all(|x| x.mass_ok(1e-12, 1e-8)),
        detail: format!("{} runs, relative drift per step {step:.2e}, cumulative {cum:.2e}", d.len()),
    }
}

fn max_principle(studies: &[&Summary]) -> Outcome {
    let d: Vec<_> = studies.iter().flat_map(|s| all_diagnostics(s)).collect();
    let worst = d.iter().map(|x| x.max_principle_excursion).fold(0.0, f64::max);
    Outcome {
        name: "discrete maximum principle over every shipped run",
        pass: d.iter().all(|x| x.max_principle_ok(1e-14)),
        detail: format!("{} runs, worst excursion {worst:.2e}", d.len()),
    }
}

/// Ids: lower-right triangle of square (i, j) is 2(j nx + i), upper-left is
/// the next one.
fn lower_right(nx: usize, i: usize, j: usize) -> usize {
    2 * (j * nx + i)
}

fn column_oracle() -> Outcome {
    let (nx, ny) = (8, 2);
    let mesh = Mesh::torus(Manifold::flat_torus(1.0).unwrap(), nx, ny).unwrap();
    let v = VelocityField::torus_constant(1.0, 0.0).unwrap();
    let columns = [0.0, 1.0, 1.0, 0.25, 0.0, 0.0, -0.5, 0.0];
    let mut u = vec![0.0; mesh.num_cells()];
    for j in 0..ny {
        for i in 0..nx {
            u[lower_right(nx, i, j)] = columns[i];
            u[lower_right(nx, i, j) + 1] = columns[i];
        }
    }
    // Along a row the cells form the ring B_0, A_0, B_1, A_1, ... and each one
    // takes its whole inflow from its predecessor.
    let mut ring: Vec<f64> = columns.iter().flat_map(|&c| [c, c]).collect();
    let fm = FluxModel::with_data_range(FluxKind::LinearAdvection, v, &u).unwrap();
    let tau = cfl_timestep(&mesh, &fm, 0.5).unwrap();
    let lambda = 2.0 * tau * nx as f64;
    let mut solver = Solver::new(&mesh, fm, FaceFluxScheme::Rusanov).unwrap();
    let mut s = State::new(u);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        s = solver.step(&s, tau).unwrap().0;
        let n = ring.len();
        ring = (0..n).map(|m| ring[m] - lambda * (ring[m] - ring[(m + n - 1) % n])).collect();
        for j in 0..ny {
            for i in 0..nx {
                let a = lower_right(nx, i, j);
                worst = worst.max((s.values[a + 1] - ring[2 * i]).abs());
                worst = worst.max((s.values[a] - ring[2 * i + 1]).abs());
            }
        }
    }
    Outcome {
        name: "torus 8x2 column transport equals 1D upwind oracle",
        pass: worst <= 1e-12,
        detail: format!("100 steps, max deviation {worst:.2e}"),
    }
}

/// Data constant on the bands x + y = const, transported along (1, 1): both
/// triangles of square (i, j) lie on band i + j and receive from band i + j - 1.
fn tvd_bands() -> Outcome {
    let n = 16;
    let mesh = Mesh::torus(Manifold::flat_torus(1.0).unwrap(), n, n).unwrap();
    let v = VelocityField::torus_constant(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bands: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut u = vec![0.0; mesh.num_cells()];
    for j in 0..n {
        for i in 0..n {
            let a = lower_right(n, i, j);
            u[a] = bands[(i + j) % n];
            u[a + 1] = bands[(i + j) % n];
        }
    }
    let s0 = State::new(u);
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [FluxKind::LinearAdvection, FluxKind::Burgers] {
        for scheme in [FaceFluxScheme::Rusanov, FaceFluxScheme::EngquistOsher] {
            let fm = FluxModel::with_data_range(kind, v, &s0.values).unwrap();
            let tau = cfl_timestep(&mesh, &fm, 0.9).unwrap();
            let mut solver = Solver::new(&mesh, fm, scheme).unwrap();
            let mut diag = Diagnostics::new(&mesh, &s0, 0);
            solver.run(s0.clone(), 200.0 * tau, tau, &mut diag).unwrap();
            let sm = diag.summary();
            pass &= sm.tvd_ok(1e-12) && sm.tv_final < sm.tv_initial;
            parts.push(format!("{}/{} {:.2e}", kind.name(), scheme.name(), sm.max_tv_increase));
        }
    }
    Outcome {
        name: "TV non-increasing on 1D-reducible torus transport",
        pass,
        detail: format!("200 steps, max TV increase {}", parts.join(", ")),
    }
}

fn geometry() -> Outcome {
    let sphere = Manifold::sphere(1.0).unwrap();
    let mut pass = true;
    let mut area_err: f64 = 0.0;
    let mut gammas = Vec::new();
    for level in 0..=4 {
        let m = Mesh::icosphere(sphere, level).unwrap();
        let rel = (m.total_area() - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        area_err = area_err.max(rel);
        pass &= rel <= 1e-10 && m.euler_characteristic() == 2;
        if level >= 1 {
            gammas.push(m.audit_shape_regularity().gamma2);
        }
    }
    let torus = Mesh::torus(Manifold::flat_torus(1.0).unwrap(), 8, 8).unwrap();
    pass &= torus.euler_characteristic() == 0;
    let spread = gammas.iter().cloned().fold(0.0, f64::max) / gammas.iter().cloned().fold(f64::INFINITY, f64::min);
    pass &= spread < 2.0;
    Outcome {
        name: "geometry: areas, Euler characteristics, shape regularity",
        pass,
        detail: format!(
            "area rel. error {area_err:.2e}, chi sphere 2 torus {}, gamma2 spread {spread:.3}",
            torus.euler_characteristic()
        ),
    }
}

fn burgers(s: &Summary, wall: f64) -> Outcome {
    let violations: usize = s.levels.iter().map(|l| l.diagnostics.entropy_violations).sum();
    let evaluations: usize = s.levels.iter().map(|l| l.diagnostics.entropy_evaluations).sum();
    let reference = s.comparison.as_ref().and_then(|c| c.reference_level);
    let top = s.levels.iter().map(|l| l.level).max();
    Outcome {
        name: "Burgers torus study against a reference three levels finer",
        pass: s.levels.len() == 3
            && s.errors_strictly_decreasing
            && reference == top.map(|t| t + 3)
            && evaluations > 0
            && violations == 0,
        detail: format!("errors {}, entropy violations {violations}, {wall:.1} s", errors(s)),
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (bell, bell_wall) = study(&config("sphere_cosine_bell.conf"), dir.path());
    let (cap, cap_wall) = study(&config("sphere_polar_cap.conf"), dir.path());
    let (burg, burg_wall) = study(&config("torus_burgers_column.conf"), dir.path());
    let shipped = [&bell, &cap, &burg];

    let outcomes = [
        rate_criterion("cosine bell convergence on the sphere", &bell, bell_wall),
        rate_criterion("polar cap convergence on the sphere", &cap, cap_wall),
        entropy_criterion(&[&bell, &cap]),
        flux_axioms(),
        conservation(&shipped),
        max_principle(&shipped),
        column_oracle(),
        tvd_bands(),
        geometry(),
        burgers(&burg, burg_wall),
    ];
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
