//! Analytic flux fields `f(u, x) = φ(u) V(x)` with a divergence-free
//! velocity `V`.

use serde::Serialize;

use crate::error::{FvError, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::scalar::{cross, dot, norm, scale, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    /// φ(u) = u
    LinearAdvection,
    /// φ(u) = u²/2
    Burgers,
}

impl FluxKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear_advection" => Ok(Self::LinearAdvection),
            "burgers" => Ok(Self::Burgers),
            other => Err(FvError::Config(format!(
                "unknown flux.kind '{other}' (expected linear_advection or burgers)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LinearAdvection => "linear_advection",
            Self::Burgers => "burgers",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityField<T> {
    /// Solid-body rotation `ω a × x` about the unit axis `a`.
    SphereRotation { axis: Vec3<T>, omega: T },
    TorusConstant { vx: T, vy: T },
}

impl<T: Real> VelocityField<T> {
    pub fn sphere_rotation(axis: Vec3<T>, omega: T) -> Result<Self> {
        let n = norm(&axis);
        if !(n > T::zero()) || !n.is_finite() || !omega.is_finite() {
            return Err(FvError::Config("rotation axis must be a finite nonzero vector".into()));
        }
        Ok(VelocityField::SphereRotation {
            axis: scale(&axis, T::one() / n),
            omega,
        })
    }

    pub fn torus_constant(vx: T, vy: T) -> Result<Self> {
        if !vx.is_finite() || !vy.is_finite() {
            return Err(FvError::Config("torus velocity must be finite".into()));
        }
        Ok(VelocityField::TorusConstant { vx, vy })
    }

    pub fn eval(&self, x: &Point<T>) -> Vec3<T> {
        match *self {
            VelocityField::SphereRotation { axis, omega } => scale(&cross(&axis, &x.coords()), omega),
            VelocityField::TorusConstant { vx, vy } => [vx, vy, T::zero()],
        }
    }

    /// Pointwise divergence. Both shipped fields are divergence-free: the
    /// rotation is a Killing field and the torus field is constant.
    pub fn divergence(&self, _x: &Point<T>) -> T {
        T::zero()
    }

    /// sup_x |V(x)|
    pub fn max_speed(&self, m: &Manifold<T>) -> T {
        match *self {
            VelocityField::SphereRotation { omega, .. } => omega.abs() * m.length_scale(),
            VelocityField::TorusConstant { vx, vy } => vx.hypot(vy),
        }
    }

    fn check_manifold(&self, m: &Manifold<T>) -> Result<()> {
        match (self, m) {
            (VelocityField::SphereRotation { .. }, Manifold::Sphere { .. })
            | (VelocityField::TorusConstant { .. }, Manifold::FlatTorus { .. }) => Ok(()),
            _ => Err(FvError::Config(
                "velocity field does not live on the chosen manifold".into(),
            )),
        }
    }

    /// Exact ∫_e ⟨V, n⟩ dΓ over the geodesic edge `a → b`, where `n` is the
    /// (constant) unit conormal of the edge.
    ///
    /// For the rotation, `(ω k × y)·n = -ω R k·t(y)` along the great circle
    /// with `n = (a × b)/|a × b|`, so the integral is `R` times a difference
    /// of the stream function `ψ(y) = ω k·y` at the endpoints. Summed around
    /// a cell it telescopes to zero up to rounding.
    pub fn arc_normal_moment(&self, m: &Manifold<T>, a: &Point<T>, b: &Point<T>, n: &Vec3<T>, length: T) -> T {
        match *self {
            VelocityField::SphereRotation { axis, omega } => {
                let radius = m.length_scale();
                let orient = dot(n, &cross(&a.coords(), &b.coords()));
                let stream = |p: &Point<T>| dot(&axis, &p.coords()) * omega;
                let diff = (stream(b) - stream(a)) * radius;
                if orient > T::zero() {
                    -diff
                } else {
                    diff
                }
            }
            VelocityField::TorusConstant { vx, vy } => (vx * n[0] + vy * n[1]) * length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel<T> {
    pub kind: FluxKind,
    pub velocity: VelocityField<T>,
    /// Closed interval [u_min, u_max] over which Lipschitz bounds and wave
    /// speeds are taken.
    pub u_range: (T, T),
}

impl<T: Real> FluxModel<T> {
    pub fn new(kind: FluxKind, velocity: VelocityField<T>, u_range: (T, T)) -> Result<Self> {
        let fm = FluxModel { kind, velocity, u_range };
        fm.check_range()?;
        Ok(fm)
    }

    /// Model with `u_range = [min − 0.1 span, max + 0.1 span]` of `data`.
    pub fn with_data_range(kind: FluxKind, velocity: VelocityField<T>, data: &[T]) -> Result<Self> {
        let (lo, hi) = data_range(data)
            .ok_or_else(|| FvError::Config("cannot derive u_range from empty data".into()))?;
        let pad = (hi - lo) * T::lit(0.1);
        Self::new(kind, velocity, (lo - pad, hi + pad))
    }

    fn check_range(&self) -> Result<()> {
        let (lo, hi) = self.u_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(FvError::Config(format!("empty u_range [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn check_manifold(&self, m: &Manifold<T>) -> Result<()> {
        self.velocity.check_manifold(m)
    }

    /// φ(u)
    #[inline]
    pub fn profile(&self, u: T) -> T {
        match self.kind {
            FluxKind::LinearAdvection => u,
            FluxKind::Burgers => u * u * T::lit(0.5),
        }
    }

    /// φ'(u)
    #[inline]
    pub fn profile_derivative(&self, u: T) -> T {
        match self.kind {
            FluxKind::LinearAdvection => T::one(),
            FluxKind::Burgers => u,
        }
    }

    /// sup_{u ∈ u_range} |φ'(u)|
    pub fn max_profile_slope(&self) -> T {
        match self.kind {
            FluxKind::LinearAdvection => T::one(),
            FluxKind::Burgers => self.u_range.0.abs().max(self.u_range.1.abs()),
        }
    }

    pub fn eval_flux(&self, _m: &Manifold<T>, u: T, x: &Point<T>) -> TangentVector<T> {
        TangentVector {
            base: *x,
            components: scale(&self.velocity.eval(x), self.profile(u)),
        }
    }

    /// ∂_u f(u, x)
    pub fn eval_flux_derivative(&self, _m: &Manifold<T>, u: T, x: &Point<T>) -> TangentVector<T> {
        TangentVector {
            base: *x,
            components: scale(&self.velocity.eval(x), self.profile_derivative(u)),
        }
    }

    /// (div_g f)(u, x) at frozen u.
    pub fn eval_divergence(&self, _m: &Manifold<T>, u: T, x: &Point<T>) -> T {
        self.profile(u) * self.velocity.divergence(x)
    }

    /// Upper bound on |∂_u ⟨f(u, x), n⟩| over x, unit n and u ∈ u_range.
    pub fn lipschitz_bound(&self, m: &Manifold<T>) -> Result<T> {
        self.check_range()?;
        Ok(self.velocity.max_speed(m) * self.max_profile_slope())
    }

    /// max(1, sup |f|) over the range; the unit for absolute tolerances on
    /// flux values.
    pub fn flux_scale(&self, m: &Manifold<T>) -> T {
        let (lo, hi) = self.u_range;
        let phi = self.profile(lo).abs().max(self.profile(hi).abs());
        T::one().max(self.velocity.max_speed(m) * phi)
    }
}

/// (min, max) of finite data, or `None` if empty.
pub fn data_range<T: Real>(data: &[T]) -> Option<(T, T)> {
    if data.is_empty() {
        return None;
    }
    Some(
        data.iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Manifold<f64> {
        Manifold::sphere(1.0).unwrap()
    }

    fn rot(omega: f64) -> VelocityField<f64> {
        VelocityField::sphere_rotation([0.0, 0.0, 1.0], omega).unwrap()
    }

    #[test]
    fn flux_examples() {
        let m = unit();
        let x = m.point([1.0, 0.0, 0.0]).unwrap();
        let lin = FluxModel::new(FluxKind::LinearAdvection, rot(1.0), (-3.0, 3.0)).unwrap();
        assert_eq!(lin.eval_flux(&m, 2.0, &x).components, [0.0, 2.0, 0.0]);
        assert_eq!(lin.eval_flux(&m, 0.0, &x).components, [0.0; 3]);
        let bur = FluxModel { kind: FluxKind::Burgers, ..lin };
        assert_eq!(bur.eval_flux(&m, 0.0, &x).components, [0.0; 3]);
        assert_eq!(bur.eval_flux(&m, 2.0, &x).components, lin.eval_flux(&m, 2.0, &x).components);
    }

    #[test]
    fn divergence_vanishes() {
        let m = unit();
        let x = m.point([0.3, -0.2, 0.9]).unwrap();
        let fm = FluxModel::new(FluxKind::Burgers, rot(1.0), (-1.0, 1.0)).unwrap();
        let fm2 = FluxModel::new(FluxKind::Burgers, rot(2.0), (-1.0, 1.0)).unwrap();
        assert_eq!(fm.eval_divergence(&m, 0.7, &x), 0.0);
        assert_eq!(fm2.eval_divergence(&m, 0.7, &x), 0.0);
        let f1 = fm.eval_flux(&m, 0.7, &x).components;
        let f2 = fm2.eval_flux(&m, 0.7, &x).components;
        for k in 0..3 {
            assert!((f2[k] - 2.0 * f1[k]).abs() < 1e-15);
        }
        let t = Manifold::flat_torus(1.0).unwrap();
        let tv = FluxModel::new(FluxKind::LinearAdvection, VelocityField::torus_constant(1.0, 0.5).unwrap(), (0.0, 1.0)).unwrap();
        assert_eq!(tv.eval_divergence(&t, 3.0, &t.point2(0.2, 0.4).unwrap()), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        let m = unit();
        let lin = FluxModel::new(FluxKind::LinearAdvection, rot(1.0), (0.0, 1.0)).unwrap();
        assert_eq!(lin.lipschitz_bound(&m).unwrap(), 1.0);
        let t = Manifold::flat_torus(1.0).unwrap();
        let v = VelocityField::torus_constant(1.0, 0.0).unwrap();
        let tl = FluxModel::new(FluxKind::LinearAdvection, v, (0.0, 1.0)).unwrap();
        assert_eq!(tl.lipschitz_bound(&t).unwrap(), 1.0);
        let tb = FluxModel::new(FluxKind::Burgers, v, (-2.0, 1.0)).unwrap();
        assert_eq!(tb.lipschitz_bound(&t).unwrap(), 2.0);
        assert!(FluxModel::new(FluxKind::Burgers, v, (1.0, -1.0)).is_err());
        let mut bad = tb;
        bad.u_range = (2.0, 1.0);
        assert!(matches!(bad.lipschitz_bound(&t), Err(FvError::Config(_))));
    }

    #[test]
    fn default_range_pads_span() {
        let v = VelocityField::<f64>::torus_constant(1.0, 0.0).unwrap();
        let fm = FluxModel::with_data_range(FluxKind::LinearAdvection, v, &[0.0, 0.5, 1.0]).unwrap();
        assert!((fm.u_range.0 + 0.1).abs() < 1e-15 && (fm.u_range.1 - 1.1).abs() < 1e-15);
        assert!(FluxModel::with_data_range(FluxKind::LinearAdvection, v, &[]).is_err());
    }

    #[test]
    fn flux_is_tangent_and_derivative_matches() {
        let m = Manifold::<f64>::sphere(2.0).unwrap();
        let v = VelocityField::sphere_rotation([1.0, 2.0, -0.5], 0.7).unwrap();
        let fm = FluxModel::new(FluxKind::Burgers, v, (-1.0, 2.0)).unwrap();
        let x = m.point([0.4, -1.1, 0.3]).unwrap();
        let f = fm.eval_flux(&m, 1.3, &x);
        assert!(dot(&f.components, &x.coords()).abs() <= 1e-10 * norm(&f.components) * 2.0);
        let d = 1e-5;
        let fp = fm.eval_flux(&m, 1.3 + d, &x).components;
        let fmn = fm.eval_flux(&m, 1.3 - d, &x).components;
        let an = fm.eval_flux_derivative(&m, 1.3, &x).components;
        for k in 0..3 {
            let fd = (fp[k] - fmn[k]) / (2.0 * d);
            assert!((fd - an[k]).abs() <= 1e-8 * an[k].abs().max(1.0));
        }
    }

    #[test]
    fn manifold_mismatch_detected() {
        let fm = FluxModel::new(FluxKind::LinearAdvection, rot(1.0), (0.0, 1.0)).unwrap();
        assert!(fm.check_manifold(&Manifold::flat_torus(1.0).unwrap()).is_err());
        assert!(fm.check_manifold(&unit()).is_ok());
    }
}
