//! Exact geometric primitives on the round sphere and the flat square torus.
//!
//! Sphere points are stored as ambient coordinates with `|x| = radius`.
//! Torus points live in the `z = 0` plane with `x, y` reduced to
//! `[0, period)`. Torus edges and triangles are evaluated in the unwrapped
//! copy nearest to their first vertex (minimal image); the `planar_*`
//! helpers take already-unwrapped coordinates for callers that know the
//! lift, such as the structured torus mesh.

use crate::error::{FvError, Result};
use crate::scalar::{cross, dot, neg, norm, scale, sub, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manifold<T> {
    Sphere { radius: T },
    FlatTorus { period: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T> {
    coords: Vec3<T>,
}

impl<T: Real> Point<T> {
    #[inline]
    pub fn coords(&self) -> Vec3<T> {
        self.coords
    }

    #[inline]
    pub fn x(&self) -> T {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.coords[1]
    }

    #[inline]
    pub fn z(&self) -> T {
        self.coords[2]
    }
}

/// A tangent vector together with its base point. On the torus the third
/// component is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector<T> {
    pub base: Point<T>,
    pub components: Vec3<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn scaled(&self, s: T) -> Self {
        Self {
            base: self.base,
            components: scale(&self.components, s),
        }
    }
}

/// Geodesic edge with its fixed-order quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature<T> {
    pub length: T,
    pub nodes: [(Point<T>, T); 3],
}

/// Three-point Gauss–Legendre rule on `[0, 1]`: (abscissa, weight).
pub fn gauss_legendre3<T: Real>() -> [(T, T); 3] {
    let r = T::lit(0.6).sqrt() * T::lit(0.5);
    let half = T::lit(0.5);
    [
        (half - r, T::lit(5.0 / 18.0)),
        (half, T::lit(8.0 / 18.0)),
        (half + r, T::lit(5.0 / 18.0)),
    ]
}

#[inline]
fn tol<T: Real>() -> T {
    T::epsilon().sqrt() * T::lit(10.0)
}

/// Reduces `x` into `[0, period)`.
#[inline]
pub(crate) fn reduce_mod<T: Real>(x: T, period: T) -> T {
    let r = x - period * (x / period).floor();
    if r >= period || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// Minimal-image representative of a displacement.
#[inline]
pub(crate) fn wrap<T: Real>(d: T, period: T) -> T {
    d - period * (d / period).round()
}

/// Unit-sphere angle between two nonzero vectors, stable at both ends.
#[inline]
pub(crate) fn angle_between<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    norm(&cross(a, b)).atan2(dot(a, b))
}

impl<T: Real> Manifold<T> {
    pub fn sphere(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(FvError::InvalidManifold(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Manifold::Sphere { radius })
    }

    pub fn flat_torus(period: T) -> Result<Self> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(FvError::InvalidManifold(format!(
                "torus period must be positive, got {period}"
            )));
        }
        Ok(Manifold::FlatTorus { period })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Manifold::Sphere { .. })
    }

    /// Characteristic length: the radius or the period.
    pub fn length_scale(&self) -> T {
        match *self {
            Manifold::Sphere { radius } => radius,
            Manifold::FlatTorus { period } => period,
        }
    }

    /// Total surface measure |M|_g.
    pub fn measure(&self) -> T {
        match *self {
            Manifold::Sphere { radius } => T::lit(4.0) * T::PI() * radius * radius,
            Manifold::FlatTorus { period } => period * period,
        }
    }

    /// Builds a point from ambient coordinates. Sphere input is projected
    /// radially onto the sphere; torus input uses `x, y` modulo the period.
    pub fn point(&self, coords: Vec3<T>) -> Result<Point<T>> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(FvError::InvalidInput("non-finite point coordinates".into()));
        }
        match *self {
            Manifold::Sphere { radius } => {
                let n = norm(&coords);
                if n == T::zero() {
                    return Err(FvError::InvalidInput(
                        "cannot project the origin onto the sphere".into(),
                    ));
                }
                Ok(Point {
                    coords: scale(&coords, radius / n),
                })
            }
            Manifold::FlatTorus { period } => Ok(Point {
                coords: [
                    reduce_mod(coords[0], period),
                    reduce_mod(coords[1], period),
                    T::zero(),
                ],
            }),
        }
    }

    /// Torus shorthand for `point([x, y, 0])`.
    pub fn point2(&self, x: T, y: T) -> Result<Point<T>> {
        self.point([x, y, T::zero()])
    }

    /// Builds a tangent vector at `base`, projecting away any normal part.
    pub fn tangent(&self, base: Point<T>, components: Vec3<T>) -> TangentVector<T> {
        let components = match *self {
            Manifold::Sphere { radius } => {
                let n = scale(&base.coords, T::one() / radius);
                sub(&components, &scale(&n, dot(&components, &n)))
            }
            Manifold::FlatTorus { .. } => [components[0], components[1], T::zero()],
        };
        TangentVector { base, components }
    }

    pub fn geodesic_distance(&self, p: &Point<T>, q: &Point<T>) -> T {
        match *self {
            Manifold::Sphere { radius } => radius * angle_between(&p.coords, &q.coords),
            Manifold::FlatTorus { period } => {
                let dx = wrap(q.coords[0] - p.coords[0], period);
                let dy = wrap(q.coords[1] - p.coords[1], period);
                dx.hypot(dy)
            }
        }
    }

    pub fn tangent_inner(&self, x: &TangentVector<T>, y: &TangentVector<T>) -> Result<T> {
        let gap = sub(&x.base.coords, &y.base.coords)
            .iter()
            .fold(T::zero(), |m, d| m.max(d.abs()));
        if gap > T::lit(8.0) * T::epsilon() * self.length_scale() {
            return Err(FvError::MismatchedBase);
        }
        Ok(dot(&x.components, &y.components))
    }

    pub fn tangent_norm(&self, x: &TangentVector<T>) -> T {
        norm(&x.components)
    }

    /// Area of the geodesic triangle `abc`.
    pub fn spherical_triangle_area(&self, a: &Point<T>, b: &Point<T>, c: &Point<T>) -> Result<T> {
        match *self {
            Manifold::Sphere { radius } => {
                let inv = T::one() / radius;
                let (ua, ub, uc) = (
                    scale(&a.coords, inv),
                    scale(&b.coords, inv),
                    scale(&c.coords, inv),
                );
                Ok(radius * radius * unit_sphere_triangle_area(&ua, &ub, &uc)?)
            }
            Manifold::FlatTorus { period } => {
                let [la, lb, lc] = self.lift_triangle(a, b, c, period);
                planar_triangle_area(&la, &lb, &lc)
            }
        }
    }

    /// Geodesic arc from `a` to `b` with its 3-point Gauss–Legendre rule in
    /// arc length. Weights sum to the length.
    pub fn geodesic_edge(&self, a: &Point<T>, b: &Point<T>) -> Result<EdgeQuadrature<T>> {
        match *self {
            Manifold::Sphere { radius } => {
                let inv = T::one() / radius;
                let (ua, ub) = (scale(&a.coords, inv), scale(&b.coords, inv));
                let (theta, nodes) = unit_arc_nodes(&ua, &ub)?;
                let length = radius * theta;
                let rule = gauss_legendre3::<T>();
                let mk = |i: usize| {
                    (
                        Point {
                            coords: scale(&nodes[i], radius),
                        },
                        rule[i].1 * length,
                    )
                };
                Ok(EdgeQuadrature {
                    length,
                    nodes: [mk(0), mk(1), mk(2)],
                })
            }
            Manifold::FlatTorus { period } => {
                let la = [a.coords[0], a.coords[1]];
                let lb = [
                    la[0] + wrap(b.coords[0] - la[0], period),
                    la[1] + wrap(b.coords[1] - la[1], period),
                ];
                let (length, lifted) = planar_edge_nodes(&la, &lb)?;
                let mk = |i: usize| -> Result<(Point<T>, T)> {
                    Ok((self.point2(lifted[i].0[0], lifted[i].0[1])?, lifted[i].1))
                };
                Ok(EdgeQuadrature {
                    length,
                    nodes: [mk(0)?, mk(1)?, mk(2)?],
                })
            }
        }
    }

    /// Outward unit conormal of the triangle `cell` on its edge
    /// `(cell[k], cell[(k + 1) % 3])`, evaluated at `q` on that edge.
    pub fn outward_conormal(
        &self,
        cell: &[Point<T>; 3],
        local_edge: usize,
        q: &Point<T>,
    ) -> Result<TangentVector<T>> {
        let (a, b, c) = (
            &cell[local_edge % 3],
            &cell[(local_edge + 1) % 3],
            &cell[(local_edge + 2) % 3],
        );
        match *self {
            Manifold::Sphere { radius } => {
                let inv = T::one() / radius;
                let (ua, ub, uc, uq) = (
                    scale(&a.coords, inv),
                    scale(&b.coords, inv),
                    scale(&c.coords, inv),
                    scale(&q.coords, inv),
                );
                let n = unit_sphere_conormal(&ua, &ub, &uc)?;
                let off_plane = dot(&uq, &n).abs();
                let detour = angle_between(&ua, &uq) + angle_between(&uq, &ub) - angle_between(&ua, &ub);
                let offset = off_plane.max(detour.abs());
                if offset > tol() {
                    return Err(FvError::PointOffEdge {
                        offset: (offset * radius).as_f64(),
                    });
                }
                Ok(TangentVector {
                    base: *q,
                    components: n,
                })
            }
            Manifold::FlatTorus { period } => {
                let [la, lb, lc] = self.lift_triangle(a, b, c, period);
                let lq = [
                    la[0] + wrap(q.coords[0] - la[0], period),
                    la[1] + wrap(q.coords[1] - la[1], period),
                ];
                let d = [lb[0] - la[0], lb[1] - la[1]];
                let len = d[0].hypot(d[1]);
                let rel = [lq[0] - la[0], lq[1] - la[1]];
                let along = (rel[0] * d[0] + rel[1] * d[1]) / (len * len);
                let across = (rel[0] * d[1] - rel[1] * d[0]).abs() / len;
                let outside = (-along).max(along - T::one()).max(T::zero()) * len;
                let offset = across.max(outside);
                if offset > tol::<T>() * period {
                    return Err(FvError::PointOffEdge {
                        offset: offset.as_f64(),
                    });
                }
                let n = planar_conormal(&la, &lb, &lc)?;
                Ok(TangentVector {
                    base: *q,
                    components: [n[0], n[1], T::zero()],
                })
            }
        }
    }

    fn lift_triangle(&self, a: &Point<T>, b: &Point<T>, c: &Point<T>, period: T) -> [[T; 2]; 3] {
        let la = [a.coords[0], a.coords[1]];
        let lift = |p: &Point<T>| {
            [
                la[0] + wrap(p.coords[0] - la[0], period),
                la[1] + wrap(p.coords[1] - la[1], period),
            ]
        };
        [la, lift(b), lift(c)]
    }
}

/// Spherical excess of the unit-sphere triangle `abc` by L'Huilier's formula.
pub(crate) fn unit_sphere_triangle_area<T: Real>(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Result<T> {
    let det = dot(a, &cross(b, c)).abs();
    if det <= T::lit(64.0) * T::epsilon() {
        return Err(FvError::DegenerateCell(
            "vertices coincide or lie on one great circle".into(),
        ));
    }
    let (ab, bc, ca) = (angle_between(a, b), angle_between(b, c), angle_between(c, a));
    let half = T::lit(0.5);
    let s = (ab + bc + ca) * half;
    let t = (s * half).tan()
        * ((s - ab) * half).tan()
        * ((s - bc) * half).tan()
        * ((s - ca) * half).tan();
    Ok(T::lit(4.0) * t.max(T::zero()).sqrt().atan())
}

/// Outward conormal (constant along the arc) of the unit-sphere triangle
/// on edge `ab`, pointing away from `c`.
pub(crate) fn unit_sphere_conormal<T: Real>(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Result<Vec3<T>> {
    let axb = cross(a, b);
    let len = norm(&axb);
    if len <= T::lit(64.0) * T::epsilon() {
        return Err(if dot(a, b) < T::zero() {
            FvError::AmbiguousGeodesic
        } else {
            FvError::DegenerateCell("zero-length edge".into())
        });
    }
    let n = scale(&axb, T::one() / len);
    Ok(if dot(&n, c) > T::zero() { neg(&n) } else { n })
}

/// Arc angle and the three Gauss nodes (unit vectors) of the unit arc `ab`.
pub(crate) fn unit_arc_nodes<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Result<(T, [Vec3<T>; 3])> {
    let sin_theta = norm(&cross(a, b));
    let cos_theta = dot(a, b);
    if sin_theta <= T::lit(64.0) * T::epsilon() {
        return Err(if cos_theta < T::zero() {
            FvError::AmbiguousGeodesic
        } else {
            FvError::DegenerateCell("zero-length edge".into())
        });
    }
    let theta = sin_theta.atan2(cos_theta);
    let rule = gauss_legendre3::<T>();
    let node = |s: T| {
        let wa = ((T::one() - s) * theta).sin() / sin_theta;
        let wb = (s * theta).sin() / sin_theta;
        let p = [
            wa * a[0] + wb * b[0],
            wa * a[1] + wb * b[1],
            wa * a[2] + wb * b[2],
        ];
        scale(&p, T::one() / norm(&p))
    };
    Ok((theta, [node(rule[0].0), node(rule[1].0), node(rule[2].0)]))
}

pub fn planar_triangle_area<T: Real>(a: &[T; 2], b: &[T; 2], c: &[T; 2]) -> Result<T> {
    let cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let lmax = [
        (b[0] - a[0]).hypot(b[1] - a[1]),
        (c[0] - b[0]).hypot(c[1] - b[1]),
        (a[0] - c[0]).hypot(a[1] - c[1]),
    ]
    .into_iter()
    .fold(T::zero(), T::max);
    if cr.abs() <= T::lit(64.0) * T::epsilon() * lmax * lmax {
        return Err(FvError::DegenerateCell("collinear or repeated vertices".into()));
    }
    Ok(cr.abs() * T::lit(0.5))
}

/// Unit normal to segment `ab` pointing away from `c`.
pub fn planar_conormal<T: Real>(a: &[T; 2], b: &[T; 2], c: &[T; 2]) -> Result<[T; 2]> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if len == T::zero() {
        return Err(FvError::DegenerateCell("zero-length edge".into()));
    }
    let n = [d[1] / len, -d[0] / len];
    let side = n[0] * (c[0] - a[0]) + n[1] * (c[1] - a[1]);
    Ok(if side > T::zero() { [-n[0], -n[1]] } else { n })
}

/// Segment length and lifted Gauss nodes `(position, weight)`.
pub(crate) fn planar_edge_nodes<T: Real>(a: &[T; 2], b: &[T; 2]) -> Result<(T, [([T; 2], T); 3])> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let length = d[0].hypot(d[1]);
    if length == T::zero() {
        return Err(FvError::DegenerateCell("zero-length edge".into()));
    }
    let rule = gauss_legendre3::<T>();
    let mk = |i: usize| {
        let s = rule[i].0;
        ([a[0] + s * d[0], a[1] + s * d[1]], rule[i].1 * length)
    };
    Ok((length, [mk(0), mk(1), mk(2)]))
}
