//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use surface_fv::{FaceFluxScheme, FluxKind, Manifold64, Mesh64, VelocityField};

use crate::initial::InitialCondition;
use crate::HarnessError;

/// Torus grids above this many cells are refused.
pub const MAX_TORUS_CELLS: usize = 1 << 22;

const KEYS: &[&str] = &[
    "name",
    "manifold",
    "manifold.radius",
    "manifold.period",
    "mesh.levels",
    "mesh.torus_base",
    "flux.kind",
    "velocity.axis",
    "velocity.omega",
    "velocity.vx",
    "velocity.vy",
    "numflux.kind",
    "initial.kind",
    "initial.center",
    "initial.radius",
    "initial.x_min",
    "initial.x_max",
    "time.final",
    "time.revolutions",
    "cfl.safety",
    "diagnostics.c_grid_size",
    "reference.level",
    "verify.level",
    "verify.samples",
    "output.dir",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldSpec {
    Sphere { radius: f64 },
    FlatTorus { period: f64 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub manifold: ManifoldSpec,
    pub levels: Vec<u32>,
    /// Torus level k uses an `n × n` grid with `n = torus_base · 2^k`.
    pub torus_base: usize,
    pub flux: FluxKind,
    pub velocity: VelocityField<f64>,
    pub scheme: FaceFluxScheme,
    pub initial: InitialCondition,
    pub final_time: f64,
    pub cfl_safety: f64,
    pub c_grid_size: usize,
    pub reference_level: Option<u32>,
    pub verify_level: u32,
    pub verify_samples: usize,
    pub output_dir: Option<PathBuf>,
    /// Parsed key-value pairs as written, echoed into the summary.
    pub raw: BTreeMap<String, String>,
}

fn err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, HarnessError> {
    let x: f64 = v.trim().parse().map_err(|_| err(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(err(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, HarnessError> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| err(format!("{key}: cannot parse list entry '{}'", s.trim())))
        })
        .collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize, HarnessError> {
    v.trim().parse().map_err(|_| err(format!("{key}: '{v}' is not a nonnegative integer")))
}

/// Splits `text` into key-value pairs.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected 'key = value'", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(err(format!("line {}: unknown key '{k}'", no + 1)));
        }
        if v.is_empty() {
            return Err(err(format!("line {}: empty value for '{k}'", no + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(err(format!("line {}: key '{k}' given twice", no + 1)));
        }
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("reading {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.name.is_empty() {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let raw = parse_pairs(text)?;
        let get = |k: &str| raw.get(k).map(String::as_str);
        let num = |k: &str| get(k).map(|v| parse_f64(k, v)).transpose();

        let manifold = match get("manifold").ok_or_else(|| err("missing key 'manifold'"))? {
            "sphere" => {
                if raw.contains_key("manifold.period") {
                    return Err(err("manifold.period applies to flat_torus only"));
                }
                ManifoldSpec::Sphere {
                    radius: num("manifold.radius")?.unwrap_or(1.0),
                }
            }
            "flat_torus" => {
                if raw.contains_key("manifold.radius") {
                    return Err(err("manifold.radius applies to sphere only"));
                }
                ManifoldSpec::FlatTorus {
                    period: num("manifold.period")?.unwrap_or(1.0),
                }
            }
            other => return Err(err(format!("unknown manifold '{other}' (expected sphere or flat_torus)"))),
        };
        let m = manifold.build()?;

        let levels: Vec<u32> = parse_list("mesh.levels", get("mesh.levels").ok_or_else(|| err("missing key 'mesh.levels'"))?)?;
        if levels.is_empty() {
            return Err(err("mesh.levels is empty"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err(format!("mesh.levels must be strictly increasing, got {levels:?}")));
        }
        let torus_base = match get("mesh.torus_base") {
            Some(v) => parse_usize("mesh.torus_base", v)?,
            None => 8,
        };
        if torus_base < 2 {
            return Err(err("mesh.torus_base must be at least 2"));
        }

        let flux = FluxKind::parse(get("flux.kind").unwrap_or("linear_advection"))?;
        let velocity = match manifold {
            ManifoldSpec::Sphere { .. } => {
                if raw.contains_key("velocity.vx") || raw.contains_key("velocity.vy") {
                    return Err(err("velocity.vx/vy apply to flat_torus only"));
                }
                let axis: Vec<f64> = match get("velocity.axis") {
                    Some(v) => parse_list("velocity.axis", v)?,
                    None => vec![0.0, 0.0, 1.0],
                };
                if axis.len() != 3 {
                    return Err(err("velocity.axis needs three components"));
                }
                VelocityField::sphere_rotation([axis[0], axis[1], axis[2]], num("velocity.omega")?.unwrap_or(1.0))?
            }
            ManifoldSpec::FlatTorus { .. } => {
                if raw.contains_key("velocity.axis") || raw.contains_key("velocity.omega") {
                    return Err(err("velocity.axis/omega apply to sphere only"));
                }
                VelocityField::torus_constant(num("velocity.vx")?.unwrap_or(1.0), num("velocity.vy")?.unwrap_or(0.0))?
            }
        };
        let scheme = FaceFluxScheme::parse(get("numflux.kind").unwrap_or("rusanov"))?;
        let initial = InitialCondition::from_pairs(&raw, &m)?;

        let final_time = match (num("time.final")?, num("time.revolutions")?) {
            (Some(_), Some(_)) => return Err(err("give either time.final or time.revolutions, not both")),
            (Some(t), None) => t,
            (None, Some(r)) => match velocity {
                VelocityField::SphereRotation { omega, .. } if omega != 0.0 => r * 2.0 * PI / omega.abs(),
                _ => return Err(err("time.revolutions needs a sphere rotation with nonzero omega")),
            },
            (None, None) => return Err(err("missing time.final or time.revolutions")),
        };
        if !(final_time > 0.0) {
            return Err(err(format!("final time must be positive, got {final_time}")));
        }
        let cfl_safety = num("cfl.safety")?.unwrap_or(0.5);
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(err(format!("cfl.safety must lie in (0, 1], got {cfl_safety}")));
        }
        let c_grid_size = match get("diagnostics.c_grid_size") {
            Some(v) => parse_usize("diagnostics.c_grid_size", v)?,
            None => 9,
        };
        let reference_level = get("reference.level")
            .map(|v| v.parse::<u32>().map_err(|_| err(format!("reference.level: '{v}' is not a level"))))
            .transpose()?;
        let verify_level = match get("verify.level") {
            Some(v) => v.parse().map_err(|_| err(format!("verify.level: '{v}' is not a level")))?,
            None => levels[0],
        };
        let verify_samples = match get("verify.samples") {
            Some(v) => parse_usize("verify.samples", v)?,
            None => 10_000,
        };

        let cfg = ExperimentConfig {
            name: get("name").unwrap_or("").to_string(),
            manifold,
            levels,
            torus_base,
            flux,
            velocity,
            scheme,
            initial,
            final_time,
            cfl_safety,
            c_grid_size,
            reference_level,
            verify_level,
            verify_samples,
            output_dir: get("output.dir").map(PathBuf::from),
            raw,
        };
        for &l in cfg.levels.iter().chain([cfg.verify_level].iter()) {
            cfg.check_level(l)?;
        }
        Ok(cfg)
    }

    pub fn manifold(&self) -> Manifold64 {
        self.manifold.build().expect("validated at parse time")
    }

    fn check_level(&self, level: u32) -> Result<(), HarnessError> {
        match self.manifold {
            ManifoldSpec::Sphere { .. } => {
                if level > surface_fv::MAX_ICOSPHERE_LEVEL {
                    return Err(err(format!(
                        "icosphere level {level} exceeds {}",
                        surface_fv::MAX_ICOSPHERE_LEVEL
                    )));
                }
            }
            ManifoldSpec::FlatTorus { .. } => {
                let n = self.torus_cells_per_side(level).ok_or_else(|| err(format!("torus level {level} is too large")))?;
                if 2 * n * n > MAX_TORUS_CELLS {
                    return Err(err(format!("torus level {level} would have {} cells", 2 * n * n)));
                }
            }
        }
        Ok(())
    }

    fn torus_cells_per_side(&self, level: u32) -> Option<usize> {
        1usize.checked_shl(level).and_then(|p| p.checked_mul(self.torus_base))
    }

    pub fn build_mesh(&self, level: u32) -> Result<Mesh64, HarnessError> {
        self.check_level(level)?;
        let m = self.manifold();
        Ok(match self.manifold {
            ManifoldSpec::Sphere { .. } => Mesh64::icosphere(m, level)?,
            ManifoldSpec::FlatTorus { .. } => {
                let n = self.torus_cells_per_side(level).expect("checked");
                Mesh64::torus(m, n, n)?
            }
        })
    }

    /// Level of the fine reference run when no exact solution exists.
    pub fn effective_reference_level(&self) -> u32 {
        self.reference_level
            .unwrap_or(self.levels.last().copied().unwrap_or(0) + 3)
    }
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Manifold64, HarnessError> {
        Ok(match *self {
            ManifoldSpec::Sphere { radius } => Manifold64::sphere(radius)?,
            ManifoldSpec::FlatTorus { period } => Manifold64::flat_torus(period)?,
        })
    }
}
