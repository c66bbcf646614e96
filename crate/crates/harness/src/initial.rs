//! Initial data and exact solutions of linear transport.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use surface_fv::{FluxKind, FluxModel64, Manifold64, Point64, VelocityField};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// ½(1 + cos(π min(d(x, x₀)/r₀, 1)))
    CosineBell { center: [f64; 3], radius: f64 },
    /// 1 inside the geodesic ball of radius r₀ about x₀, 0 outside.
    PolarCapIndicator { center: [f64; 3], radius: f64 },
    /// 1 on the band `x_min ≤ x < x_max` of the torus, 0 elsewhere.
    ColumnStep { x_min: f64, x_max: f64 },
}

fn err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl InitialCondition {
    pub fn from_pairs(raw: &BTreeMap<String, String>, m: &Manifold64) -> Result<Self, HarnessError> {
        let num = |k: &str, default: f64| -> Result<f64, HarnessError> {
            match raw.get(k) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(format!("{k}: '{v}' is not a finite number"))),
            }
        };
        let kind = raw.get("initial.kind").map(String::as_str).ok_or_else(|| err("missing key 'initial.kind'"))?;
        let center = || -> Result<[f64; 3], HarnessError> {
            let c: Vec<f64> = match raw.get("initial.center") {
                Some(v) => v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("initial.center: bad entry '{}'", s.trim()))))
                    .collect::<Result<_, _>>()?,
                None if m.is_sphere() => vec![1.0, 0.0, 0.0],
                None => vec![0.5, 0.5],
            };
            let p = match (m.is_sphere(), c.len()) {
                (true, 3) => m.point([c[0], c[1], c[2]])?,
                (false, 2) => m.point2(c[0], c[1])?,
                (true, _) => return Err(err("initial.center needs three components on the sphere")),
                (false, _) => return Err(err("initial.center needs two components on the torus")),
            };
            Ok(p.coords())
        };
        let radius = || -> Result<f64, HarnessError> {
            let r = num("initial.radius", 0.5 * m.length_scale())?;
            if r > 0.0 {
                Ok(r)
            } else {
                Err(err("initial.radius must be positive"))
            }
        };
        let ic = match kind {
            "cosine_bell" => InitialCondition::CosineBell {
                center: center()?,
                radius: radius()?,
            },
            "polar_cap_indicator" => InitialCondition::PolarCapIndicator {
                center: center()?,
                radius: radius()?,
            },
            "column_step" => {
                if m.is_sphere() {
                    return Err(err("column_step is defined on the flat torus only"));
                }
                let period = m.length_scale();
                let (x_min, x_max) = (num("initial.x_min", 0.25 * period)?, num("initial.x_max", 0.5 * period)?);
                if !(x_min < x_max && x_max - x_min < period) {
                    return Err(err("column_step needs x_min < x_max < x_min + period"));
                }
                InitialCondition::ColumnStep { x_min, x_max }
            }
            other => {
                return Err(err(format!(
                    "unknown initial.kind '{other}' (expected cosine_bell, polar_cap_indicator or column_step)"
                )))
            }
        };
        for k in ["initial.center", "initial.radius"] {
            if raw.contains_key(k) && matches!(ic, InitialCondition::ColumnStep { .. }) {
                return Err(err(format!("{k} does not apply to column_step")));
            }
        }
        for k in ["initial.x_min", "initial.x_max"] {
            if raw.contains_key(k) && !matches!(ic, InitialCondition::ColumnStep { .. }) {
                return Err(err(format!("{k} applies to column_step only")));
            }
        }
        Ok(ic)
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::CosineBell { .. } => "cosine_bell",
            InitialCondition::PolarCapIndicator { .. } => "polar_cap_indicator",
            InitialCondition::ColumnStep { .. } => "column_step",
        }
    }

    pub fn eval(&self, m: &Manifold64, p: &Point64) -> f64 {
        match *self {
            InitialCondition::CosineBell { center, radius } => {
                let d = m.geodesic_distance(p, &m.point(center).expect("validated center"));
                0.5 * (1.0 + (PI * (d / radius).min(1.0)).cos())
            }
            InitialCondition::PolarCapIndicator { center, radius } => {
                let d = m.geodesic_distance(p, &m.point(center).expect("validated center"));
                if d < radius {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::ColumnStep { x_min, x_max } => {
                let period = m.length_scale();
                let x = (p.x() - x_min).rem_euclid(period);
                if x < x_max - x_min {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Rotation of `x` by `angle` about the unit vector `k`.
fn rotate(x: [f64; 3], k: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let kx = [k[1] * x[2] - k[2] * x[1], k[2] * x[0] - k[0] * x[2], k[0] * x[1] - k[1] * x[0]];
    let kd = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
    [0, 1, 2].map(|i| x[i] * c + kx[i] * s + k[i] * kd * (1.0 - c))
}

/// `x ↦ u0(Φ_{−t}(x))` for linear advection along the model's velocity.
pub fn exact_rotation_solution<'a, F>(
    m: &Manifold64,
    fm: &FluxModel64,
    u0: F,
    t: f64,
) -> Result<impl Fn(&Point64) -> f64 + Sync + 'a, HarnessError>
where
    F: Fn(&Point64) -> f64 + Sync + 'a,
{
    if fm.kind != FluxKind::LinearAdvection {
        return Err(HarnessError::UnsupportedExactSolution(fm.kind.name().to_string()));
    }
    fm.check_manifold(m)?;
    let m = *m;
    let velocity = fm.velocity;
    Ok(move |p: &Point64| {
        let back = match velocity {
            VelocityField::SphereRotation { axis, omega } => {
                let angle = (-omega * t).rem_euclid(2.0 * PI);
                // renormalizing a unit vector is not idempotent in the last bit
                if angle == 0.0 {
                    return u0(p);
                }
                m.point(rotate(p.coords(), axis, angle)).expect("rotation keeps points finite")
            }
            VelocityField::TorusConstant { vx, vy } => m.point2(p.x() - t * vx, p.y() - t * vy).expect("finite translate"),
        };
        u0(&back)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use surface_fv::{FluxModel, Manifold};

    fn sphere_model(kind: FluxKind) -> FluxModel64 {
        let v = VelocityField::sphere_rotation([0.0, 1.0, 1.0], 2.0).unwrap();
        FluxModel::new(kind, v, (0.0, 1.0)).unwrap()
    }

    fn bell() -> InitialCondition {
        InitialCondition::CosineBell {
            center: [1.0, 0.0, 0.0],
            radius: 0.5,
        }
    }

    #[test]
    fn bell_profile() {
        let m = Manifold::sphere(1.0).unwrap();
        let ic = bell();
        assert_eq!(ic.eval(&m, &m.point([1.0, 0.0, 0.0]).unwrap()), 1.0);
        assert_eq!(ic.eval(&m, &m.point([0.0, 1.0, 0.0]).unwrap()), 0.0);
        let half = m.point([0.25f64.cos(), 0.25f64.sin(), 0.0]).unwrap();
        assert!((ic.eval(&m, &half) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_solution_at_zero_and_full_period() {
        let m = Manifold::sphere(1.0).unwrap();
        let fm = sphere_model(FluxKind::LinearAdvection);
        let ic = bell();
        let u0 = move |p: &Point64| ic.eval(&m, p);
        let at0 = exact_rotation_solution(&m, &fm, u0, 0.0).unwrap();
        let period = exact_rotation_solution(&m, &fm, u0, PI).unwrap();
        for x in [[1.0, 0.1, 0.0], [0.9, -0.2, 0.3], [0.0, 0.0, 1.0]] {
            let p = m.point(x).unwrap();
            assert_eq!(at0(&p), u0(&p));
            assert!((period(&p) - u0(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solution_follows_the_flow() {
        // a point carried by V = ω k × x for time t lands where the data came from
        let m = Manifold::sphere(1.0).unwrap();
        let fm = sphere_model(FluxKind::LinearAdvection);
        let ic = bell();
        let u0 = move |p: &Point64| ic.eval(&m, p);
        let t = 0.3;
        let sol = exact_rotation_solution(&m, &fm, u0, t).unwrap();
        let k = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let moved = m.point(rotate([1.0, 0.0, 0.0], k, 2.0 * t)).unwrap();
        assert!((sol(&moved) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_translation() {
        let m = Manifold::flat_torus(1.0).unwrap();
        let v = VelocityField::torus_constant(1.0, 0.0).unwrap();
        let fm = FluxModel::new(FluxKind::LinearAdvection, v, (0.0, 1.0)).unwrap();
        let u0 = |p: &Point64| if p.x() < 0.5 { 1.0 } else { 0.0 };
        let sol = exact_rotation_solution(&m, &fm, u0, 0.25).unwrap();
        for (x, want) in [(0.1, 0.0), (0.25, 1.0), (0.5, 1.0), (0.74, 1.0), (0.75, 0.0), (0.9, 0.0)] {
            assert_eq!(sol(&m.point2(x, 0.3).unwrap()), want, "x = {x}");
        }
    }

    #[test]
    fn burgers_has_no_exact_solution() {
        let m = Manifold::sphere(1.0).unwrap();
        let fm = sphere_model(FluxKind::Burgers);
        let r = exact_rotation_solution(&m, &fm, |_: &Point64| 0.0, 1.0);
        assert!(matches!(r, Err(HarnessError::UnsupportedExactSolution(_))));
    }

    #[test]
    fn column_step_wraps() {
        let m = Manifold::flat_torus(1.0).unwrap();
        let ic = InitialCondition::ColumnStep { x_min: 0.8, x_max: 1.1 };
        assert_eq!(ic.eval(&m, &m.point2(0.05, 0.0).unwrap()), 1.0);
        assert_eq!(ic.eval(&m, &m.point2(0.85, 0.0).unwrap()), 1.0);
        assert_eq!(ic.eval(&m, &m.point2(0.5, 0.0).unwrap()), 0.0);
    }
}
