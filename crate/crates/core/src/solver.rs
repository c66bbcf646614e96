//! Explicit finite volume update and its convex-combination breakdown.
//!
//! One step is
//! `u_K ← u_K − (τ/|K|) Σ_{e∈∂K} |e| f_{e,K}(u_K, u_{K_e})`,
//! computed in two phases: per-face fluxes into a face-indexed buffer, then
//! per-cell accumulation over faces in stored order. The result does not
//! depend on the number of threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FvError, Result};
use crate::flux::{data_range, FluxModel};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::numflux::{BoundFluxes, FaceFluxScheme, FaceNormalFlux};
use crate::quadrature::cell_averages;
use crate::scalar::Real;

/// Slack on the CFL test for the rounding in `safety / (ratio · Lip)`.
const CFL_SLACK: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct State<T> {
    pub n: usize,
    pub time: T,
    /// One value per cell, indexed like `Mesh::cells`.
    pub values: Vec<T>,
}

impl<T: Real> State<T> {
    pub fn new(values: Vec<T>) -> Self {
        State { n: 0, time: T::zero(), values }
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn check_against(&self, mesh: &Mesh<T>) -> Result<()> {
        if self.values.len() != mesh.num_cells() {
            return Err(FvError::MeshMismatch {
                state: self.values.len(),
                cells: mesh.num_cells(),
            });
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(FvError::InvalidInput(format!("non-finite value in cell {k}")));
        }
        Ok(())
    }
}

/// Per-face one-dimensional updates that the step is a convex combination of.
/// Face slots follow `Cell::faces`.
#[derive(Debug, Clone)]
pub struct StepBreakdown<T> {
    /// Index of the state the step started from.
    pub from_step: usize,
    pub tau: T,
    /// ũ_{K,e} = u_K − ϖ_K (f_{e,K}(u_K, u_{K_e}) − f_{e,K}(u_K, u_K))
    pub u_tilde: Vec<[T; 3]>,
    /// u_{K,e} = ũ_{K,e} − ϖ_K f_K
    pub u_ke: Vec<[T; 3]>,
    /// f_K = (1/p_K) Σ |e| f_{e,K}(u_K, u_K)
    pub f_k: Vec<T>,
    /// ϖ_K = τ p_K / |K|
    pub varpi: Vec<T>,
}

/// Initial cell averages of `u0`.
pub fn project_initial<T: Real, F: Fn(&Point<T>) -> T + Sync>(mesh: &Mesh<T>, u0: F) -> Result<State<T>> {
    Ok(State::new(cell_averages(mesh, u0)?))
}

/// `τ = safety / (sup p_K/|K| · Lip(f))`.
pub fn cfl_timestep<T: Real>(mesh: &Mesh<T>, model: &FluxModel<T>, safety: T) -> Result<T> {
    if !(safety > T::zero() && safety <= T::one()) {
        return Err(FvError::Config(format!("CFL safety {safety} outside (0, 1]")));
    }
    let lip = model.lipschitz_bound(&mesh.manifold)?;
    if !(lip > T::zero()) {
        return Err(FvError::Config(
            "Lipschitz bound of the flux is zero; no CFL time step exists".into(),
        ));
    }
    Ok(safety / (mesh.sup_perimeter_area_ratio() * lip))
}

/// Called after every step of [`Solver::run`].
pub trait StepObserver<T: Real> {
    fn observe(&mut self, solver: &Solver<'_, T>, prev: &State<T>, next: &State<T>, bd: &StepBreakdown<T>) -> Result<()>;
}

impl<T: Real> StepObserver<T> for () {
    fn observe(&mut self, _: &Solver<'_, T>, _: &State<T>, _: &State<T>, _: &StepBreakdown<T>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary<T> {
    pub state: State<T>,
    pub steps: usize,
    pub nominal_tau: T,
    pub last_tau: T,
    /// Number of times a value left `u_range` and the range was re-estimated.
    pub range_exits: usize,
}

#[derive(Clone, Copy)]
struct FaceEval<T> {
    /// f_{e,L}(u_L, u_R); the right side sees its exact negative.
    flux: T,
    self_left: T,
    self_right: T,
}

pub struct Solver<'m, T: Real> {
    mesh: &'m Mesh<T>,
    model: FluxModel<T>,
    scheme: FaceFluxScheme,
    bound: BoundFluxes<T>,
    ratio: T,
    lipschitz: T,
    range_exits: usize,
}

impl<'m, T: Real> Solver<'m, T> {
    pub fn new(mesh: &'m Mesh<T>, model: FluxModel<T>, scheme: FaceFluxScheme) -> Result<Self> {
        let bound = BoundFluxes::new(mesh, &model)?;
        let lipschitz = model.lipschitz_bound(&mesh.manifold)?;
        Ok(Solver {
            mesh,
            model,
            scheme,
            bound,
            ratio: mesh.sup_perimeter_area_ratio(),
            lipschitz,
            range_exits: 0,
        })
    }

    pub fn mesh(&self) -> &'m Mesh<T> {
        self.mesh
    }

    pub fn model(&self) -> &FluxModel<T> {
        &self.model
    }

    pub fn scheme(&self) -> FaceFluxScheme {
        self.scheme
    }

    pub fn fluxes(&self) -> &BoundFluxes<T> {
        &self.bound
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn range_exits(&self) -> usize {
        self.range_exits
    }

    /// τ · sup p_K/|K| · Lip(f) for the current `u_range`.
    pub fn cfl_number(&self, tau: T) -> T {
        tau * self.ratio * self.lipschitz
    }

    /// Normal flux on slot `slot` of `cell`, oriented outward from `cell`.
    #[inline]
    pub fn face_flux(&self, cell: usize, slot: usize) -> FaceNormalFlux<T> {
        let c = &self.mesh.cells[cell];
        self.bound.side(c.faces[slot], c.is_left[slot])
    }

    pub fn varpi(&self, cell: usize, tau: T) -> T {
        let c = &self.mesh.cells[cell];
        tau * c.perimeter / c.area
    }

    /// H_{e,K}(u, v) = u − ϖ_K (f_{e,K}(u, v) − f_{e,K}(u, u))
    pub fn one_dimensional_update(&self, cell: usize, slot: usize, tau: T, u: T, v: T) -> T {
        let a = self.face_flux(cell, slot);
        u - self.varpi(cell, tau) * (self.scheme.flux(&a, u, v) - self.scheme.flux(&a, u, u))
    }

    fn ensure_range(&mut self, s: &State<T>) -> Result<()> {
        let (lo, hi) = self.model.u_range;
        let (dmin, dmax) = data_range(&s.values).expect("non-empty state");
        if dmin >= lo && dmax <= hi {
            return Ok(());
        }
        let span = dmax.max(hi) - dmin.min(lo);
        let pad = span * T::lit(0.1);
        self.model.u_range = (dmin.min(lo) - pad, dmax.max(hi) + pad);
        self.bound = BoundFluxes::new(self.mesh, &self.model)?;
        self.lipschitz = self.model.lipschitz_bound(&self.mesh.manifold)?;
        self.range_exits += 1;
        Ok(())
    }

    pub fn step(&mut self, s: &State<T>, tau: T) -> Result<(State<T>, StepBreakdown<T>)> {
        s.check_against(self.mesh)?;
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(FvError::InvalidInput(format!("time step {tau} is not positive")));
        }
        self.ensure_range(s)?;
        let cfl = self.cfl_number(tau);
        if cfl > T::one() + T::lit(CFL_SLACK) {
            return Err(FvError::CflViolated { cfl_number: cfl.as_f64() });
        }

        let mesh = self.mesh;
        let scheme = self.scheme;
        let u = &s.values;
        let buffer: Vec<FaceEval<T>> = mesh
            .faces
            .par_iter()
            .zip(self.bound.faces.par_iter())
            .map(|(f, a)| {
                let (ul, ur) = (u[f.left], u[f.right]);
                let b = a.flipped();
                FaceEval {
                    flux: scheme.flux(a, ul, ur),
                    self_left: scheme.flux(a, ul, ul),
                    self_right: scheme.flux(&b, ur, ur),
                }
            })
            .collect();

        type CellOut<T> = (T, [T; 3], [T; 3], T, T);
        let out: Vec<CellOut<T>> = mesh
            .cells
            .par_iter()
            .enumerate()
            .map(|(k, c)| {
                let uk = u[k];
                let varpi = tau * c.perimeter / c.area;
                let mut net = T::zero();
                let mut own = T::zero();
                let mut tilde = [T::zero(); 3];
                for i in 0..3 {
                    let e = &buffer[c.faces[i]];
                    let len = mesh.faces[c.faces[i]].length;
                    let (g, g0) = if c.is_left[i] { (e.flux, e.self_left) } else { (-e.flux, e.self_right) };
                    net = net + len * g;
                    own = own + len * g0;
                    tilde[i] = uk - varpi * (g - g0);
                }
                let f_k = own / c.perimeter;
                let u_ke = tilde.map(|t| t - varpi * f_k);
                (uk - tau / c.area * net, tilde, u_ke, f_k, varpi)
            })
            .collect();

        let n = out.len();
        let mut values = Vec::with_capacity(n);
        let mut bd = StepBreakdown {
            from_step: s.n,
            tau,
            u_tilde: Vec::with_capacity(n),
            u_ke: Vec::with_capacity(n),
            f_k: Vec::with_capacity(n),
            varpi: Vec::with_capacity(n),
        };
        for (v, t, ke, fk, w) in out {
            values.push(v);
            bd.u_tilde.push(t);
            bd.u_ke.push(ke);
            bd.f_k.push(fk);
            bd.varpi.push(w);
        }
        let next = State {
            n: s.n + 1,
            time: s.time + tau,
            values,
        };
        Ok((next, bd))
    }

    /// Steps of size `tau` from `s0.time` to `t_final`, the last one
    /// shortened so that `t_final` is hit exactly.
    pub fn run(
        &mut self,
        s0: State<T>,
        t_final: T,
        tau: T,
        observer: &mut dyn StepObserver<T>,
    ) -> Result<RunSummary<T>> {
        let span = t_final - s0.time;
        if !(span > T::zero()) {
            return Err(FvError::InvalidInput(format!(
                "final time {t_final} does not exceed the start time {}",
                s0.time
            )));
        }
        let t0 = s0.time;
        let ratio = span / tau;
        let mut full = ratio.floor().to_usize().unwrap_or(usize::MAX);
        let mut rest = span - T::from_usize_lossy(full) * tau;
        // a remainder at rounding level is absorbed into the last full step
        if rest <= T::lit(1e-9) * tau {
            rest = T::zero();
        } else if tau - rest <= T::lit(1e-9) * tau {
            full += 1;
            rest = T::zero();
        }
        let total = full + usize::from(rest > T::zero());

        let mut s = s0;
        let mut last_tau = tau;
        for k in 0..total {
            let dt = if k < full { tau } else { rest };
            let (mut next, bd) = self.step(&s, dt)?;
            next.time = if k + 1 == total { t_final } else { t0 + T::from_usize_lossy(k + 1) * tau };
            observer.observe(self, &s, &next, &bd)?;
            s = next;
            last_tau = dt;
        }
        Ok(RunSummary {
            state: s,
            steps: total,
            nominal_tau: tau,
            last_tau,
            range_exits: self.range_exits,
        })
    }
}
