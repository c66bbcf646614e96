//! Cell quadrature: recursive 4-split of each triangle with a one-point
//! (centroid) rule on the leaves, weighted by the exact leaf areas.

use rayon::prelude::*;

use crate::error::{FvError, Result};
use crate::geometry::{planar_triangle_area, unit_sphere_triangle_area, Manifold, Point};
use crate::mesh::Mesh;
use crate::scalar::{add, norm, scale, Real, Vec3};

/// Subdivision depth used for initial projection and L¹ errors
/// (64 leaves per cell).
pub const CELL_QUADRATURE_DEPTH: u32 = 3;

/// Calls `f(node, weight)` for every leaf of `cell`. Weights sum to |K|.
pub fn for_each_cell_node<T: Real, F: FnMut(&Point<T>, T)>(mesh: &Mesh<T>, cell: usize, depth: u32, mut f: F) {
    let c = &mesh.cells[cell];
    match (&mesh.manifold, &c.lifted) {
        (Manifold::Sphere { radius }, _) => {
            let inv = T::one() / *radius;
            let u = c.points.map(|p| scale(&p.coords(), inv));
            sphere_leaves(&u[0], &u[1], &u[2], depth, &mut |centroid, area| {
                let p = mesh.manifold.point(scale(&centroid, *radius)).expect("finite centroid");
                f(&p, area * *radius * *radius);
            });
        }
        (Manifold::FlatTorus { .. }, Some(l)) => {
            planar_leaves(&l[0], &l[1], &l[2], depth, &mut |centroid, area| {
                let p = mesh.manifold.point2(centroid[0], centroid[1]).expect("finite centroid");
                f(&p, area);
            });
        }
        (Manifold::FlatTorus { .. }, None) => unreachable!("torus cells carry lifted coordinates"),
    }
}

fn unit_mid<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    let m = add(a, b);
    scale(&m, T::one() / norm(&m))
}

fn sphere_leaves<T: Real>(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>, depth: u32, f: &mut dyn FnMut(Vec3<T>, T)) {
    if depth == 0 {
        let area = unit_sphere_triangle_area(a, b, c).expect("leaf of a valid cell");
        let g = add(&add(a, b), c);
        f(scale(&g, T::one() / norm(&g)), area);
        return;
    }
    let (ab, bc, ca) = (unit_mid(a, b), unit_mid(b, c), unit_mid(c, a));
    sphere_leaves(a, &ab, &ca, depth - 1, f);
    sphere_leaves(b, &bc, &ab, depth - 1, f);
    sphere_leaves(c, &ca, &bc, depth - 1, f);
    sphere_leaves(&ab, &bc, &ca, depth - 1, f);
}

fn planar_leaves<T: Real>(a: &[T; 2], b: &[T; 2], c: &[T; 2], depth: u32, f: &mut dyn FnMut([T; 2], T)) {
    if depth == 0 {
        let area = planar_triangle_area(a, b, c).expect("leaf of a valid cell");
        let third = T::one() / T::lit(3.0);
        f([(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third], area);
        return;
    }
    let h = T::lit(0.5);
    let mid = |p: &[T; 2], q: &[T; 2]| [(p[0] + q[0]) * h, (p[1] + q[1]) * h];
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    planar_leaves(a, &ab, &ca, depth - 1, f);
    planar_leaves(b, &bc, &ab, depth - 1, f);
    planar_leaves(c, &ca, &bc, depth - 1, f);
    planar_leaves(&ab, &bc, &ca, depth - 1, f);
}

/// ⨍_K g dv_g. Accumulated relative to the first sample so that constant
/// integrands are reproduced exactly.
pub fn cell_average<T: Real, G: Fn(&Point<T>) -> T>(mesh: &Mesh<T>, cell: usize, g: G) -> Result<T> {
    let mut first: Option<T> = None;
    let mut acc = T::zero();
    let mut weight = T::zero();
    let mut bad = false;
    for_each_cell_node(mesh, cell, CELL_QUADRATURE_DEPTH, |p, w| {
        let v = g(p);
        if !v.is_finite() {
            bad = true;
            return;
        }
        let r = *first.get_or_insert(v);
        acc = acc + w * (v - r);
        weight = weight + w;
    });
    if bad {
        return Err(FvError::InvalidInput(format!(
            "non-finite sample of the integrand in cell {cell}"
        )));
    }
    Ok(first.unwrap_or_else(T::zero) + acc / weight)
}

/// ∫_K g dv_g by the same rule.
pub fn cell_integral<T: Real, G: Fn(&Point<T>) -> T>(mesh: &Mesh<T>, cell: usize, g: G) -> T {
    let mut acc = T::zero();
    for_each_cell_node(mesh, cell, CELL_QUADRATURE_DEPTH, |p, w| acc = acc + w * g(p));
    acc
}

/// Cell averages of `g` over the whole mesh.
pub fn cell_averages<T: Real, G: Fn(&Point<T>) -> T + Sync>(mesh: &Mesh<T>, g: G) -> Result<Vec<T>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| cell_average(mesh, k, &g))
        .collect()
}
