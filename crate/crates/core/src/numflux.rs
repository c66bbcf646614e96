//! Two-point monotone face fluxes f_{e,K}(u, v) and the Kruzkov numerical
//! entropy flux built on top of them.

use rand::Rng;
use serde::Serialize;

use crate::error::{FvError, Result};
use crate::flux::{FluxKind, FluxModel};
use crate::geometry::Manifold;
use crate::mesh::Mesh;
use crate::scalar::{dot, norm, scale, Real, Vec3};

/// Face-averaged normal flux of one side of a face,
/// `a_{e,K}(w) = ⨍_e ⟨f(w, y), n_{e,K}(y)⟩ dΓ = φ(w) β_{e,K}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceNormalFlux<T> {
    pub face: usize,
    pub kind: FluxKind,
    /// β_{e,K} = ⨍_e ⟨V, n_{e,K}⟩ dΓ
    pub normal_velocity: T,
    /// s_e ≥ sup_w |a'_{e,K}(w)|, shared by both sides.
    pub speed: T,
}

impl<T: Real> FaceNormalFlux<T> {
    #[inline]
    fn profile(&self, w: T) -> T {
        match self.kind {
            FluxKind::LinearAdvection => w,
            FluxKind::Burgers => w * w * T::lit(0.5),
        }
    }

    /// a_{e,K}(w)
    #[inline]
    pub fn eval(&self, w: T) -> T {
        self.normal_velocity * self.profile(w)
    }

    /// a'_{e,K}(w)
    #[inline]
    pub fn derivative(&self, w: T) -> T {
        match self.kind {
            FluxKind::LinearAdvection => self.normal_velocity,
            FluxKind::Burgers => self.normal_velocity * w,
        }
    }

    /// The same face seen from the other side.
    #[inline]
    pub fn flipped(&self) -> Self {
        Self {
            normal_velocity: -self.normal_velocity,
            ..*self
        }
    }

    /// ∫_0^u max(a'(w), 0) dw
    #[inline]
    fn increasing_part(&self, u: T) -> T {
        let z = T::zero();
        let (bp, bm) = (self.normal_velocity.max(z), self.normal_velocity.min(z));
        match self.kind {
            FluxKind::LinearAdvection => bp * u,
            FluxKind::Burgers => {
                let (up, um) = (u.max(z), u.min(z));
                bp * (up * up * T::lit(0.5)) + bm * (um * um * T::lit(0.5))
            }
        }
    }

    /// ∫_0^v min(a'(w), 0) dw
    #[inline]
    fn decreasing_part(&self, v: T) -> T {
        let z = T::zero();
        let (bp, bm) = (self.normal_velocity.max(z), self.normal_velocity.min(z));
        match self.kind {
            FluxKind::LinearAdvection => bm * v,
            FluxKind::Burgers => {
                let (vp, vm) = (v.max(z), v.min(z));
                bp * (vm * vm * T::lit(0.5)) + bm * (vp * vp * T::lit(0.5))
            }
        }
    }
}

/// Per-face normal fluxes for a mesh and flux model, stored for the left
/// side of each face.
#[derive(Debug, Clone)]
pub struct BoundFluxes<T> {
    pub faces: Vec<FaceNormalFlux<T>>,
}

impl<T: Real> BoundFluxes<T> {
    pub fn new(mesh: &Mesh<T>, model: &FluxModel<T>) -> Result<Self> {
        model.check_manifold(&mesh.manifold)?;
        let slope = model.max_profile_slope();
        let faces = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(id, f)| {
                let beta = model.velocity.arc_normal_moment(
                    &mesh.manifold,
                    &f.points[0],
                    &f.points[1],
                    &f.conormals[0],
                    f.length,
                ) / f.length;
                let mut peak = beta.abs();
                for (i, (y, _)) in f.nodes.iter().enumerate() {
                    peak = peak.max(dot(&model.velocity.eval(y), &f.conormals[i]).abs());
                }
                for p in &f.points {
                    peak = peak.max(dot(&model.velocity.eval(p), &f.conormals[1]).abs());
                }
                FaceNormalFlux {
                    face: id,
                    kind: model.kind,
                    normal_velocity: beta,
                    speed: peak * slope,
                }
            })
            .collect();
        Ok(Self { faces })
    }

    /// Normal flux of `face` as seen from the side flagged by `is_left`.
    #[inline]
    pub fn side(&self, face: usize, is_left: bool) -> FaceNormalFlux<T> {
        let f = self.faces[face];
        if is_left {
            f
        } else {
            f.flipped()
        }
    }
}

/// ⨍_e ⟨V, n⟩ dΓ for the left side of `face` by the stored 3-node rule.
pub fn quadrature_normal_velocity<T: Real>(mesh: &Mesh<T>, model: &FluxModel<T>, face: usize) -> T {
    let f = &mesh.faces[face];
    let total = f
        .nodes
        .iter()
        .zip(&f.conormals)
        .map(|((y, w), n)| *w * dot(&model.velocity.eval(y), n))
        .fold(T::zero(), |a, b| a + b);
    total / f.length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceFluxScheme {
    Rusanov,
    EngquistOsher,
}

impl FaceFluxScheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rusanov" => Ok(Self::Rusanov),
            "engquist_osher" => Ok(Self::EngquistOsher),
            other => Err(FvError::Config(format!(
                "unknown numflux.kind '{other}' (expected rusanov or engquist_osher)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rusanov => "rusanov",
            Self::EngquistOsher => "engquist_osher",
        }
    }

    /// f_{e,K}(u, v)
    #[inline]
    pub fn flux<T: Real>(&self, a: &FaceNormalFlux<T>, u: T, v: T) -> T {
        match self {
            // ½(a(u) + a(v)) − ½ s (v − u), grouped into its nondecreasing
            // and nonincreasing parts
            Self::Rusanov => {
                let s = a.speed;
                ((a.eval(u) + s * u) + (a.eval(v) - s * v)) * T::lit(0.5)
            }
            Self::EngquistOsher => a.eval(T::zero()) + a.increasing_part(u) + a.decreasing_part(v),
        }
    }

    /// F_{e,K}(u, v, c) = f_{e,K}(u ∨ c, v ∨ c) − f_{e,K}(u ∧ c, v ∧ c)
    #[inline]
    pub fn kruzkov_flux<T: Real>(&self, a: &FaceNormalFlux<T>, u: T, v: T, c: T) -> T {
        self.flux(a, u.max(c), v.max(c)) - self.flux(a, u.min(c), v.min(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Consistency,
    Conservation,
    NondecreasingInFirst,
    NonincreasingInSecond,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomViolation {
    pub face: usize,
    pub u: f64,
    pub v: f64,
    pub axiom: Axiom,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxAxiomReport {
    pub scheme: FaceFluxScheme,
    pub samples: usize,
    pub scale: f64,
    pub max_consistency_error: f64,
    pub max_conservation_residual: f64,
    pub min_du: f64,
    pub max_dv: f64,
    pub violations: Vec<AxiomViolation>,
}

impl FluxAxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }
}

/// Samples random `(face, u, v)` triples and checks consistency against an
/// independent composite quadrature of ⟨f(u, ·), n⟩, exact conservation
/// across the two sides, and one-sided monotonicity.
pub fn verify_flux_axioms<T: Real, R: Rng + ?Sized>(
    scheme: FaceFluxScheme,
    mesh: &Mesh<T>,
    model: &FluxModel<T>,
    samples: usize,
    rng: &mut R,
) -> Result<FluxAxiomReport> {
    let bound = BoundFluxes::new(mesh, model)?;
    verify_bound_fluxes(scheme, mesh, model, &bound, samples, rng)
}

/// As [`verify_flux_axioms`] with caller-supplied per-face data, so that
/// deliberately broken wave speeds can be checked.
pub fn verify_bound_fluxes<T: Real, R: Rng + ?Sized>(
    scheme: FaceFluxScheme,
    mesh: &Mesh<T>,
    model: &FluxModel<T>,
    bound: &BoundFluxes<T>,
    samples: usize,
    rng: &mut R,
) -> Result<FluxAxiomReport> {
    if samples == 0 {
        return Err(FvError::Config("verify_flux_axioms needs samples >= 1".into()));
    }
    if mesh.num_faces() == 0 {
        return Err(FvError::InvalidInput("mesh has no faces".into()));
    }
    let scale = model.flux_scale(&mesh.manifold);
    let (lo, hi) = model.u_range;
    let span = hi - lo;
    let delta = if span > T::zero() { span * T::lit(1e-6) } else { T::lit(1e-6) };
    let draw = |rng: &mut R| {
        let t = T::lit(rng.gen::<f64>());
        if span > delta {
            lo + t * (span - delta)
        } else {
            lo
        }
    };
    let consistency_tol = T::lit(1e-12) * scale;
    let conservation_tol = T::lit(1e-14) * scale;
    let monotone_tol = T::lit(1e-12) * scale;

    let mut report = FluxAxiomReport {
        scheme,
        samples,
        scale: scale.as_f64(),
        max_consistency_error: 0.0,
        max_conservation_residual: 0.0,
        min_du: f64::INFINITY,
        max_dv: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for _ in 0..samples {
        let face = rng.gen_range(0..mesh.num_faces());
        let (u, v) = (draw(rng), draw(rng));
        let f = &mesh.faces[face];
        let left = bound.side(face, true);
        let right = bound.side(face, false);
        let mut flag = |axiom: Axiom, value: T| {
            report.violations.push(AxiomViolation {
                face,
                u: u.as_f64(),
                v: v.as_f64(),
                axiom,
                value: value.as_f64(),
            })
        };

        for (side, cell) in [(&left, f.left), (&right, f.right)] {
            let err = (scheme.flux(side, u, u) - oracle_face_average(mesh, model, face, cell, u)).abs();
            report.max_consistency_error = report.max_consistency_error.max(err.as_f64());
            if !(err <= consistency_tol) {
                flag(Axiom::Consistency, err);
            }
        }

        let residual = (scheme.flux(&left, u, v) + scheme.flux(&right, v, u)).abs();
        report.max_conservation_residual = report.max_conservation_residual.max(residual.as_f64());
        if !(residual <= conservation_tol) {
            flag(Axiom::Conservation, residual);
        }

        let base = scheme.flux(&left, u, v);
        let du = (scheme.flux(&left, u + delta, v) - base) / delta;
        let dv = (scheme.flux(&left, u, v + delta) - base) / delta;
        report.min_du = report.min_du.min(du.as_f64());
        report.max_dv = report.max_dv.max(dv.as_f64());
        if !(du >= -monotone_tol) {
            flag(Axiom::NondecreasingInFirst, du);
        }
        if !(dv <= monotone_tol) {
            flag(Axiom::NonincreasingInSecond, dv);
        }
    }
    Ok(report)
}

const ORACLE_PIECES: usize = 8;

/// ⨍_e ⟨f(u, y), n_{e,K}(y)⟩ dΓ by composite Gauss–Legendre over eight
/// sub-arcs, with conormals recomputed from `cell`'s own geometry.
pub fn oracle_face_average<T: Real>(mesh: &Mesh<T>, model: &FluxModel<T>, face: usize, cell: usize, u: T) -> T {
    let f = &mesh.faces[face];
    let c = &mesh.cells[cell];
    let k = if cell == f.left { f.left_edge } else { f.right_edge };
    let m = &mesh.manifold;
    let pieces = T::from_usize_lossy(ORACLE_PIECES);
    let mut total = T::zero();
    match (m, &c.lifted) {
        (Manifold::Sphere { radius }, _) => {
            let inv = T::one() / *radius;
            let a = scale(&c.points[k].coords(), inv);
            let b = scale(&c.points[(k + 1) % 3].coords(), inv);
            let theta = crate::geometry::angle_between(&a, &b);
            for j in 0..ORACLE_PIECES {
                let s0 = T::from_usize_lossy(j) / pieces;
                let s1 = T::from_usize_lossy(j + 1) / pieces;
                let p0 = m.point(slerp(&a, &b, theta, s0)).expect("arc point");
                let p1 = m.point(slerp(&a, &b, theta, s1)).expect("arc point");
                let sub = m.geodesic_edge(&p0, &p1).expect("sub-arc");
                for (y, w) in &sub.nodes {
                    let n = m.outward_conormal(&c.points, k, y).expect("node on edge");
                    total = total + *w * dot(&model.eval_flux(m, u, y).components, &n.components);
                }
            }
        }
        (Manifold::FlatTorus { .. }, Some(l)) => {
            let (la, lb) = (l[k], l[(k + 1) % 3]);
            let n = mesh.conormal_from_side(face, cell).expect("conormal");
            let len = (lb[0] - la[0]).hypot(lb[1] - la[1]);
            let rule = crate::geometry::gauss_legendre3::<T>();
            for j in 0..ORACLE_PIECES {
                for (s, w) in rule {
                    let t = (T::from_usize_lossy(j) + s) / pieces;
                    let y = m
                        .point2(la[0] + t * (lb[0] - la[0]), la[1] + t * (lb[1] - la[1]))
                        .expect("finite node");
                    total = total + w * len / pieces * dot(&model.eval_flux(m, u, &y).components, &n);
                }
            }
        }
        (Manifold::FlatTorus { .. }, None) => unreachable!("torus cells carry lifted coordinates"),
    }
    total / f.length
}

fn slerp<T: Real>(a: &Vec3<T>, b: &Vec3<T>, theta: T, s: T) -> Vec3<T> {
    let st = theta.sin();
    let wa = ((T::one() - s) * theta).sin() / st;
    let wb = (s * theta).sin() / st;
    let p = [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]];
    scale(&p, T::one() / norm(&p))
}
