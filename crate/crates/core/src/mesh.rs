//! Geodesic triangulations of the sphere and the flat torus.
//!
//! Every cell is a geodesic triangle; local edge `k` of a cell joins its
//! vertices `k` and `k + 1 (mod 3)`. Each face stores its quadrature nodes and
//! the outward conormal of its *left* cell at those nodes; the right cell sees
//! the exact negation.

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{FvError, Result};
use crate::geometry::{
    gauss_legendre3, planar_conormal, planar_edge_nodes, planar_triangle_area,
    unit_arc_nodes, unit_sphere_conormal, unit_sphere_triangle_area, Manifold, Point,
};
use crate::scalar::{dot, neg, norm, scale, Real, Vec3};

/// Largest icosphere subdivision level accepted by [`Mesh::icosphere`].
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Icosphere { level: u32 },
    Torus { nx: usize, ny: usize },
    /// Caller-supplied geodesic triangulation of the sphere.
    Spherical,
}

#[derive(Debug, Clone)]
pub struct Cell<T> {
    pub vertices: [usize; 3],
    pub points: [Point<T>; 3],
    /// |K|
    pub area: T,
    /// p_K
    pub perimeter: T,
    /// h_K
    pub diameter: T,
    /// Face on local edge `k`.
    pub faces: [usize; 3],
    /// Cell across local edge `k` (K_e).
    pub neighbors: [usize; 3],
    /// Whether this cell is the left (stored-conormal) side of `faces[k]`.
    pub is_left: [bool; 3],
    /// Unwrapped planar vertex coordinates; torus only.
    pub lifted: Option<[[T; 2]; 3]>,
}

#[derive(Debug, Clone)]
pub struct Face<T> {
    pub endpoints: [usize; 2],
    pub points: [Point<T>; 2],
    /// |e|
    pub length: T,
    pub left: usize,
    pub right: usize,
    pub left_edge: usize,
    pub right_edge: usize,
    /// Gauss nodes in arc length with weights summing to `length`.
    pub nodes: [(Point<T>, T); 3],
    /// Outward unit conormal of the left cell at each node.
    pub conormals: [Vec3<T>; 3],
}

impl<T: Real> Face<T> {
    /// Conormals as seen from `cell`, which must be one of the two sides.
    pub fn conormals_for(&self, cell: usize) -> [Vec3<T>; 3] {
        if cell == self.left {
            self.conormals
        } else {
            debug_assert_eq!(cell, self.right);
            [
                neg(&self.conormals[0]),
                neg(&self.conormals[1]),
                neg(&self.conormals[2]),
            ]
        }
    }

    pub fn other(&self, cell: usize) -> usize {
        if cell == self.left {
            self.right
        } else {
            self.left
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub manifold: Manifold<T>,
    pub kind: MeshKind,
    pub vertices: Vec<Point<T>>,
    pub cells: Vec<Cell<T>>,
    pub faces: Vec<Face<T>>,
    /// h = max_K h_K
    pub h: T,
    sup_ratio: T,
}

/// Result of [`Mesh::audit_shape_regularity`].
#[derive(Debug, Clone)]
pub struct ShapeAudit<T> {
    /// Smallest γ₂ with γ₂⁻¹|K| ≤ h_K p_K ≤ γ₂|K| on every cell.
    pub gamma2: T,
    /// h_K p_K / |K| per cell.
    pub ratios: Vec<T>,
}

struct RawCell<T> {
    vertices: [usize; 3],
    lifted: Option<[[T; 2]; 3]>,
}

impl<T: Real> Mesh<T> {
    /// Icosahedron refined `level` times by midpoint 4-split with
    /// reprojection onto the sphere.
    pub fn icosphere(manifold: Manifold<T>, level: u32) -> Result<Self> {
        if !manifold.is_sphere() {
            return Err(FvError::Config("icosphere requires a sphere manifold".into()));
        }
        if level > MAX_ICOSPHERE_LEVEL {
            return Err(FvError::Config(format!(
                "icosphere level {level} exceeds the limit {MAX_ICOSPHERE_LEVEL}"
            )));
        }
        let (unit, tris) = icosphere_topology::<T>(level);
        Self::sphere_from_triangles(manifold, MeshKind::Icosphere { level }, &unit, &tris)
    }

    /// Geodesic triangulation of the sphere with vertices given as directions
    /// (rescaled to the radius) and triangles as vertex triples.
    pub fn spherical(manifold: Manifold<T>, directions: &[Vec3<T>], triangles: &[[usize; 3]]) -> Result<Self> {
        if !manifold.is_sphere() {
            return Err(FvError::Config("spherical triangulation requires a sphere manifold".into()));
        }
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&v| v >= directions.len())) {
            return Err(FvError::InvalidInput(format!("triangle {t:?} references a missing vertex")));
        }
        let unit = directions
            .iter()
            .map(|d| {
                let r = norm(d);
                if r > T::zero() && r.is_finite() {
                    Ok(scale(d, T::one() / r))
                } else {
                    Err(FvError::InvalidInput("vertex direction must be a nonzero finite vector".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::sphere_from_triangles(manifold, MeshKind::Spherical, &unit, triangles)
    }

    fn sphere_from_triangles(manifold: Manifold<T>, kind: MeshKind, unit: &[Vec3<T>], tris: &[[usize; 3]]) -> Result<Self> {
        let radius = manifold.length_scale();
        let vertices = unit
            .iter()
            .map(|u| manifold.point(scale(u, radius)))
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<RawCell<T>> = tris
            .iter()
            .map(|&v| RawCell {
                vertices: v,
                lifted: None,
            })
            .collect();
        let keys: Vec<[(usize, usize); 3]> = tris
            .iter()
            .map(|v| {
                let k = |a: usize, b: usize| (a.min(b), a.max(b));
                [k(v[0], v[1]), k(v[1], v[2]), k(v[2], v[0])]
            })
            .collect();
        Self::assemble(manifold, kind, vertices, raw, &keys)
    }

    /// Structured `nx × ny` grid on the torus, each square split along its
    /// `(i, j)–(i+1, j+1)` diagonal.
    pub fn torus(manifold: Manifold<T>, nx: usize, ny: usize) -> Result<Self> {
        let period = match manifold {
            Manifold::FlatTorus { period } => period,
            _ => return Err(FvError::Config("torus mesh requires a flat torus".into())),
        };
        if nx < 2 || ny < 2 {
            return Err(FvError::Config(format!(
                "torus grid needs nx, ny >= 2, got {nx} x {ny}"
            )));
        }
        let dx = period / T::from_usize_lossy(nx);
        let dy = period / T::from_usize_lossy(ny);
        let vid = |i: usize, j: usize| (j % ny) * nx + (i % nx);
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                vertices.push(manifold.point2(T::from_usize_lossy(i) * dx, T::from_usize_lossy(j) * dy)?);
            }
        }
        let mut raw = Vec::with_capacity(2 * nx * ny);
        let mut keys = Vec::with_capacity(2 * nx * ny);
        let (mx, my) = (2 * nx, 2 * ny);
        for j in 0..ny {
            for i in 0..nx {
                let lower = [(i, j), (i + 1, j), (i + 1, j + 1)];
                let upper = [(i, j), (i + 1, j + 1), (i, j + 1)];
                for grid in [lower, upper] {
                    let lifted = grid.map(|(a, b)| [T::from_usize_lossy(a) * dx, T::from_usize_lossy(b) * dy]);
                    raw.push(RawCell {
                        vertices: grid.map(|(a, b)| vid(a, b)),
                        lifted: Some(lifted),
                    });
                    // twice the edge midpoint in grid units identifies the edge
                    let key = |p: (usize, usize), q: (usize, usize)| ((p.0 + q.0) % mx, (p.1 + q.1) % my);
                    keys.push([
                        key(grid[0], grid[1]),
                        key(grid[1], grid[2]),
                        key(grid[2], grid[0]),
                    ]);
                }
            }
        }
        Self::assemble(manifold, MeshKind::Torus { nx, ny }, vertices, raw, &keys)
    }

    fn assemble<K: Hash + Eq + Copy>(
        manifold: Manifold<T>,
        kind: MeshKind,
        vertices: Vec<Point<T>>,
        raw: Vec<RawCell<T>>,
        keys: &[[K; 3]],
    ) -> Result<Self> {
        let n_cells = raw.len();
        let mut half_edges: HashMap<K, (usize, usize)> = HashMap::with_capacity(3 * n_cells / 2);
        let mut faces: Vec<Face<T>> = Vec::with_capacity(3 * n_cells / 2);
        let mut cell_faces = vec![[usize::MAX; 3]; n_cells];
        let mut cell_left = vec![[false; 3]; n_cells];

        for (c, ks) in keys.iter().enumerate() {
            for (k, key) in ks.iter().enumerate() {
                match half_edges.remove(key) {
                    None => {
                        half_edges.insert(*key, (c, k));
                    }
                    Some((left, left_edge)) => {
                        if left == c {
                            return Err(FvError::DegenerateCell(format!(
                                "cell {c} meets itself across an edge"
                            )));
                        }
                        let fid = faces.len();
                        faces.push(Self::make_face(&manifold, &vertices, &raw[left], left, left_edge, c, k)?);
                        cell_faces[left][left_edge] = fid;
                        cell_left[left][left_edge] = true;
                        cell_faces[c][k] = fid;
                    }
                }
            }
        }
        if !half_edges.is_empty() {
            return Err(FvError::DegenerateCell(format!(
                "{} edges belong to a single cell; surface is not closed",
                half_edges.len()
            )));
        }

        let mut cells = Vec::with_capacity(n_cells);
        for (c, r) in raw.into_iter().enumerate() {
            let points = r.vertices.map(|v| vertices[v]);
            let area = match (&manifold, &r.lifted) {
                (Manifold::Sphere { radius }, _) => {
                    let u = points.map(|p| scale(&p.coords(), T::one() / *radius));
                    *radius * *radius * unit_sphere_triangle_area(&u[0], &u[1], &u[2])?
                }
                (Manifold::FlatTorus { .. }, Some(l)) => planar_triangle_area(&l[0], &l[1], &l[2])?,
                (Manifold::FlatTorus { .. }, None) => manifold.spherical_triangle_area(&points[0], &points[1], &points[2])?,
            };
            let fs = cell_faces[c];
            let lengths = fs.map(|f| faces[f].length);
            let perimeter = lengths[0] + lengths[1] + lengths[2];
            let diameter = lengths[0].max(lengths[1]).max(lengths[2]);
            let neighbors = [0, 1, 2].map(|k| faces[fs[k]].other(c));
            cells.push(Cell {
                vertices: r.vertices,
                points,
                area,
                perimeter,
                diameter,
                faces: fs,
                neighbors,
                is_left: cell_left[c],
                lifted: r.lifted,
            });
        }

        let h = cells.iter().map(|c| c.diameter).fold(T::zero(), T::max);
        let sup_ratio = cells
            .iter()
            .map(|c| c.perimeter / c.area)
            .fold(T::zero(), T::max);
        Ok(Mesh {
            manifold,
            kind,
            vertices,
            cells,
            faces,
            h,
            sup_ratio,
        })
    }

    fn make_face(
        manifold: &Manifold<T>,
        vertices: &[Point<T>],
        left: &RawCell<T>,
        left_id: usize,
        left_edge: usize,
        right_id: usize,
        right_edge: usize,
    ) -> Result<Face<T>> {
        let (ia, ib, ic) = (
            left.vertices[left_edge],
            left.vertices[(left_edge + 1) % 3],
            left.vertices[(left_edge + 2) % 3],
        );
        let (length, nodes, conormals) = match (manifold, &left.lifted) {
            (Manifold::Sphere { radius }, _) => {
                let inv = T::one() / *radius;
                let u = |i: usize| scale(&vertices[i].coords(), inv);
                let (ua, ub, uc) = (u(ia), u(ib), u(ic));
                let (theta, unit_nodes) = unit_arc_nodes(&ua, &ub)?;
                let n = unit_sphere_conormal(&ua, &ub, &uc)?;
                let length = *radius * theta;
                let rule = gauss_legendre3::<T>();
                let node = |i: usize| -> Result<(Point<T>, T)> {
                    Ok((manifold.point(scale(&unit_nodes[i], *radius))?, rule[i].1 * length))
                };
                (length, [node(0)?, node(1)?, node(2)?], [n, n, n])
            }
            (Manifold::FlatTorus { .. }, Some(l)) => {
                let (la, lb, lc) = (l[left_edge], l[(left_edge + 1) % 3], l[(left_edge + 2) % 3]);
                let (length, lifted) = planar_edge_nodes(&la, &lb)?;
                let n = planar_conormal(&la, &lb, &lc)?;
                let n3 = [n[0], n[1], T::zero()];
                let node = |i: usize| -> Result<(Point<T>, T)> {
                    Ok((manifold.point2(lifted[i].0[0], lifted[i].0[1])?, lifted[i].1))
                };
                (length, [node(0)?, node(1)?, node(2)?], [n3, n3, n3])
            }
            (Manifold::FlatTorus { .. }, None) => {
                return Err(FvError::Config("torus cells require lifted coordinates".into()))
            }
        };
        Ok(Face {
            endpoints: [ia, ib],
            points: [vertices[ia], vertices[ib]],
            length,
            left: left_id,
            right: right_id,
            left_edge,
            right_edge,
            nodes,
            conormals,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_faces() as i64 + self.num_cells() as i64
    }

    pub fn total_area(&self) -> T {
        crate::scalar::compensated_sum(self.cells.iter().map(|c| c.area))
    }

    /// sup_K p_K / |K|, the mesh factor of the CFL condition.
    pub fn sup_perimeter_area_ratio(&self) -> T {
        self.sup_ratio
    }

    pub fn audit_shape_regularity(&self) -> ShapeAudit<T> {
        let ratios: Vec<T> = self
            .cells
            .iter()
            .map(|c| c.diameter * c.perimeter / c.area)
            .collect();
        let gamma2 = ratios
            .iter()
            .map(|&r| r.max(T::one() / r))
            .fold(T::one(), T::max);
        ShapeAudit { gamma2, ratios }
    }

    /// Conormal of `face` recomputed from the geometry of `cell`'s side,
    /// independently of the stored left-side vectors.
    pub fn conormal_from_side(&self, face: usize, cell: usize) -> Result<Vec3<T>> {
        let f = &self.faces[face];
        let c = &self.cells[cell];
        let k = if cell == f.left { f.left_edge } else { f.right_edge };
        match (&self.manifold, &c.lifted) {
            (Manifold::FlatTorus { .. }, Some(l)) => {
                let n = planar_conormal(&l[k], &l[(k + 1) % 3], &l[(k + 2) % 3])?;
                Ok([n[0], n[1], T::zero()])
            }
            _ => Ok(self.manifold.outward_conormal(&c.points, k, &f.nodes[1].0)?.components),
        }
    }

    /// Cell containing `p`. `hint` seeds the walk on the sphere.
    pub fn locate(&self, p: &Point<T>, hint: usize) -> usize {
        match (self.manifold, self.kind) {
            (Manifold::FlatTorus { period }, MeshKind::Torus { nx, ny }) => {
                let fx = p.x() / period * T::from_usize_lossy(nx);
                let fy = p.y() / period * T::from_usize_lossy(ny);
                let i = fx.floor().to_usize().unwrap_or(0).min(nx - 1);
                let j = fy.floor().to_usize().unwrap_or(0).min(ny - 1);
                let (rx, ry) = (fx - T::from_usize_lossy(i), fy - T::from_usize_lossy(j));
                2 * (j * nx + i) + usize::from(ry > rx)
            }
            _ => self.walk(p, hint.min(self.cells.len() - 1)),
        }
    }

    fn walk(&self, p: &Point<T>, start: usize) -> usize {
        let x = p.coords();
        let mut cell = start;
        for _ in 0..self.cells.len() {
            let c = &self.cells[cell];
            let mut best = (T::zero(), usize::MAX);
            for k in 0..3 {
                let f = &self.faces[c.faces[k]];
                let n = if c.is_left[k] { f.conormals[0] } else { neg(&f.conormals[0]) };
                let side = dot(&n, &x);
                if side > best.0 {
                    best = (side, k);
                }
            }
            if best.1 == usize::MAX {
                return cell;
            }
            cell = c.neighbors[best.1];
        }
        // walk cycled on a degenerate configuration; fall back to a scan
        (0..self.cells.len())
            .min_by(|&a, &b| {
                let worst = |id: usize| {
                    let c = &self.cells[id];
                    (0..3)
                        .map(|k| {
                            let f = &self.faces[c.faces[k]];
                            let n = if c.is_left[k] { f.conormals[0] } else { neg(&f.conormals[0]) };
                            dot(&n, &x)
                        })
                        .fold(T::neg_infinity(), T::max)
                };
                worst(a).partial_cmp(&worst(b)).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0)
    }

    pub fn to_export(&self) -> MeshExport {
        let f = |x: T| x.as_f64();
        let manifold = match self.manifold {
            Manifold::Sphere { radius } => ManifoldExport {
                kind: "sphere",
                radius: Some(f(radius)),
                period: None,
            },
            Manifold::FlatTorus { period } => ManifoldExport {
                kind: "flat_torus",
                radius: None,
                period: Some(f(period)),
            },
        };
        MeshExport {
            schema_version: 1,
            manifold,
            h: f(self.h),
            vertices: self.vertices.iter().map(|p| p.coords().map(f)).collect(),
            cells: self
                .cells
                .iter()
                .map(|c| CellExport {
                    vertices: c.vertices,
                    area: f(c.area),
                    perimeter: f(c.perimeter),
                    diameter: f(c.diameter),
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|e| FaceExport {
                    endpoints: e.endpoints,
                    left: e.left,
                    right: e.right,
                    length: f(e.length),
                })
                .collect(),
        }
    }
}

/// JSON document written by `mesh-info`.
#[derive(Debug, Clone, Serialize)]
pub struct MeshExport {
    pub schema_version: u32,
    pub manifold: ManifoldExport,
    pub h: f64,
    pub vertices: Vec<[f64; 3]>,
    pub cells: Vec<CellExport>,
    pub faces: Vec<FaceExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldExport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellExport {
    pub vertices: [usize; 3],
    pub area: f64,
    pub perimeter: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceExport {
    pub endpoints: [usize; 2],
    pub left: usize,
    pub right: usize,
    pub length: f64,
}

fn icosphere_topology<T: Real>(level: u32) -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    let phi = (T::one() + T::lit(5.0).sqrt()) * T::lit(0.5);
    let (o, z) = (T::one(), T::zero());
    let raw = [
        [-o, phi, z], [o, phi, z], [-o, -phi, z], [o, -phi, z],
        [z, -o, phi], [z, o, phi], [z, -o, -phi], [z, o, -phi],
        [phi, z, -o], [phi, z, o], [-phi, z, -o], [-phi, z, o],
    ];
    let unit = |v: Vec3<T>| scale(&v, T::one() / crate::scalar::norm(&v));
    let mut vertices: Vec<Vec3<T>> = raw.into_iter().map(unit).collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::with_capacity(tris.len() * 3 / 2);
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut mid = |a: usize, b: usize, vs: &mut Vec<Vec3<T>>| {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = crate::scalar::add(&vs[a], &vs[b]);
                vs.push(unit(m));
                vs.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    (vertices, tris)
}
