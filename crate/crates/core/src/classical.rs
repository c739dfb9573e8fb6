//! Classical side: the Vlasov mean field, Hamiltonian characteristics of
//! `H = xi^2 + V_eff(x, t)`, the self-consistent Vlasov solver and pullback
//! by the backward flow.

use ndarray::Axis;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SymbolField;
use crate::grid::{PhaseGrid, SpaceGrid};
use crate::potential::{PotentialSpec, TimePotential};
use crate::quantum::{snapshot_stride, step_count};
use crate::spline::{Spline1, Spline2};

pub const NEGATIVITY_FLOOR: f64 = -1e-9;
pub const MASS_ABORT: f64 = 1e-3;

/// `n(x_j) = \int v(x_j, xi) d xi`.
pub fn marginal(v: &SymbolField) -> Vec<f64> {
    let dxi = v.grid().xi.spacing();
    v.values()
        .axis_iter(Axis(0))
        .map(|row| row.iter().map(|c| c.re).sum::<f64>() * dxi)
        .collect()
}

/// `V_cl(x) = V(x) + \int W(x - y) v(y, eta) dy d eta`.
pub fn classical_mean_field(v: &SymbolField, pot: &PotentialSpec) -> Vec<f64> {
    pot.mean_field(&v.grid().x, &marginal(v), 0)
}

/// Force `-d_x V_eff(x, t)` and its derivative along characteristics.
pub trait ForcePath: Sync {
    fn force(&self, x: f64, t: f64) -> f64;
    /// `d_x` of [`ForcePath::force`].
    fn force_gradient(&self, x: f64, t: f64) -> f64;
}

/// Force of an analytic external potential.
pub struct AnalyticForce<'a, P: TimePotential>(pub &'a P);

impl<P: TimePotential> ForcePath for AnalyticForce<'_, P> {
    fn force(&self, x: f64, t: f64) -> f64 {
        -self.0.eval(x, t, 1)
    }

    fn force_gradient(&self, x: f64, t: f64) -> f64 {
        -self.0.eval(x, t, 2)
    }
}

/// Force sampled on the x-grid at stored times: cubic splines in `x`,
/// linear in `t`.
#[derive(Clone, Debug)]
pub struct SampledForcePath {
    times: Vec<f64>,
    force: Vec<Spline1>,
    gradient: Vec<Spline1>,
}

impl SampledForcePath {
    /// `forces[k]` and `gradients[k]` are samples at `times[k]`.
    pub fn new(grid: SpaceGrid, times: Vec<f64>, forces: &[Vec<f64>], gradients: &[Vec<f64>]) -> Result<Self> {
        if times.is_empty() || times.len() != forces.len() || times.len() != gradients.len() {
            return Err(Error::invalid("force path needs one sample per stored time"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("force path times must increase"));
        }
        let force = forces.iter().map(|f| Spline1::new(grid, f)).collect();
        let gradient = gradients.iter().map(|f| Spline1::new(grid, f)).collect();
        Ok(Self { times, force, gradient })
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, k + 1, w)
    }

    fn interp(&self, splines: &[Spline1], x: f64, t: f64) -> f64 {
        let (a, b, w) = self.bracket(t);
        let fa = splines[a].eval(x);
        if a == b {
            fa
        } else {
            (1.0 - w) * fa + w * splines[b].eval(x)
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

impl ForcePath for SampledForcePath {
    fn force(&self, x: f64, t: f64) -> f64 {
        self.interp(&self.force, x, t)
    }

    fn force_gradient(&self, x: f64, t: f64) -> f64 {
        self.interp(&self.gradient, x, t)
    }
}

/// Sampled flow `phi_t` from the start nodes, with the backward maps and
/// Jacobian matrices of the forward maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowMap {
    pub times: Vec<f64>,
    pub start: Vec<(f64, f64)>,
    /// `forward[k][i] = phi_{t_k, 0}(start[i])`
    pub forward: Vec<Vec<(f64, f64)>>,
    /// `backward[k][i] = phi_{0, t_k}(start[i])`
    pub backward: Vec<Vec<(f64, f64)>>,
    /// row-major `[dq/dx, dq/dxi, dp/dx, dp/dxi]` of the forward map
    pub jacobian: Vec<Vec<[f64; 4]>>,
    /// characteristics that left the box by more than the margin
    pub exits: usize,
}

impl FlowMap {
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() < 1e-9)
    }

    pub fn max_jacobian_defect(&self) -> f64 {
        self.jacobian
            .iter()
            .flatten()
            .map(|j| (j[0] * j[3] - j[1] * j[2] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

type State = [f64; 6];

fn rhs(force: &dyn ForcePath, s: &State, t: f64) -> State {
    let (q, p) = (s[0], s[1]);
    let g = force.force_gradient(q, t);
    // variational columns (dq, dp) for both initial directions
    [2.0 * p, force.force(q, t), 2.0 * s[3], g * s[2], 2.0 * s[5], g * s[4]]
}

fn rk4(force: &dyn ForcePath, s: &State, t: f64, dt: f64) -> State {
    let add = |a: &State, b: &State, w: f64| -> State {
        let mut o = *a;
        for i in 0..6 {
            o[i] += w * b[i];
        }
        o
    };
    let k1 = rhs(force, s, t);
    let k2 = rhs(force, &add(s, &k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = rhs(force, &add(s, &k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = rhs(force, &add(s, &k3, dt), t + dt);
    let mut o = *s;
    for i in 0..6 {
        o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

/// Integrates `q' = 2p, p' = force(q, t)` with RK4 from each start node,
/// recording the maps at `t_grid` (which must start at 0 and increase).
/// `substeps` RK4 steps are taken between consecutive slices. The backward
/// map at `t_k` integrates from the start nodes at time `t_k` back to 0 with
/// `k * substeps` steps.
pub fn integrate_characteristics(
    force: &dyn ForcePath,
    start: &[(f64, f64)],
    t_grid: &[f64],
    substeps: usize,
    bounds: Option<(f64, f64)>,
) -> Result<FlowMap> {
    if t_grid.first() != Some(&0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must start at 0 and increase"));
    }
    let substeps = substeps.max(1);
    let outside = |q: f64, p: f64| match bounds {
        Some((lx, lp)) => q.abs() > lx || p.abs() > lp,
        None => false,
    };
    let run = |x: f64, xi: f64, t0: f64, t1: f64, steps: usize| -> (State, bool) {
        let mut s: State = [x, xi, 1.0, 0.0, 0.0, 1.0];
        let dt = (t1 - t0) / steps as f64;
        let mut left = false;
        for k in 0..steps {
            s = rk4(force, &s, t0 + k as f64 * dt, dt);
            left |= outside(s[0], s[1]);
        }
        (s, left)
    };
    let n = start.len();
    let mut forward = vec![start.to_vec()];
    let mut jacobian = vec![vec![[1.0, 0.0, 0.0, 1.0]; n]];
    let mut backward = vec![start.to_vec()];
    let mut states: Vec<State> = start.iter().map(|&(x, xi)| [x, xi, 1.0, 0.0, 0.0, 1.0]).collect();
    let mut exits = 0usize;
    for (slice, w) in t_grid.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let dt = (t1 - t0) / substeps as f64;
        let stepped: Vec<(State, bool)> = states
            .par_iter()
            .map(|s| {
                let mut s = *s;
                let mut left = false;
                for k in 0..substeps {
                    s = rk4(force, &s, t0 + k as f64 * dt, dt);
                    left |= outside(s[0], s[1]);
                }
                (s, left)
            })
            .collect();
        exits += stepped.iter().filter(|(_, l)| *l).count();
        states = stepped.into_iter().map(|(s, _)| s).collect();
        forward.push(states.iter().map(|s| (s[0], s[1])).collect());
        jacobian.push(states.iter().map(|s| [s[2], s[4], s[3], s[5]]).collect());
        let back: Vec<((f64, f64), bool)> = start
            .par_iter()
            .map(|&(x, xi)| {
                let (s, l) = run(x, xi, t1, 0.0, substeps * (slice + 1));
                ((s[0], s[1]), l)
            })
            .collect();
        exits += back.iter().filter(|(_, l)| *l).count();
        backward.push(back.into_iter().map(|(p, _)| p).collect());
    }
    if exits > 0 {
        log::warn!("{exits} characteristics left the box");
    }
    Ok(FlowMap {
        times: t_grid.to_vec(),
        start: start.to_vec(),
        forward,
        backward,
        jacobian,
        exits,
    })
}

/// All nodes of a phase grid in row-major `(j, k)` order.
pub fn grid_nodes(grid: &PhaseGrid) -> Vec<(f64, f64)> {
    let (m, n) = grid.shape();
    let mut out = Vec::with_capacity(m * n);
    for j in 0..m {
        for k in 0..n {
            out.push((grid.x.node(j), grid.xi.node(k)));
        }
    }
    out
}

/// `Phi_{t,0}(G)(X) = G(phi_{0,t}(X))`, evaluated with a cubic spline.
/// The flow must start from the nodes of the grid of `G`.
pub fn transport_pullback(g: &SymbolField, flow: &FlowMap, t: f64) -> Result<SymbolField> {
    let grid = *g.grid();
    let (m, n) = grid.shape();
    if flow.start.len() != m * n {
        return Err(Error::GridMismatch("flow was not built on the nodes of this grid".into()));
    }
    let k = flow
        .index_of(t)
        .ok_or_else(|| Error::invalid(format!("flow has no slice at t = {t}")))?;
    if k == 0 {
        return Ok(g.clone());
    }
    let spline = Spline2::new(grid, g.values());
    let feet = &flow.backward[k];
    let values: Vec<Complex64> = feet.par_iter().map(|&(x, xi)| spline.eval(x, xi)).collect();
    SymbolField::new(grid, ndarray::Array2::from_shape_vec((m, n), values).expect("shape"))
}

#[derive(Clone, Debug)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<SymbolField>,
    /// `-d_x V_cl` at each snapshot
    pub forces: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    /// most negative value seen at each snapshot
    pub minima: Vec<f64>,
}

/// Self-consistent `-d_x V_cl` and its gradient from the x-marginal.
pub fn classical_force(v: &SymbolField, pot: &PotentialSpec) -> (Vec<f64>, Vec<f64>) {
    let n = marginal(v);
    let grid = &v.grid().x;
    let f = pot.mean_field(grid, &n, 1).into_iter().map(|d| -d).collect();
    let g = pot.mean_field(grid, &n, 2).into_iter().map(|d| -d).collect();
    (f, g)
}

/// Stepper holding the spectral shift tables for one phase grid and `dt`.
pub(crate) struct VlasovStepper {
    grid: PhaseGrid,
    dt: f64,
    drift: Vec<Vec<Complex64>>,
    xi_wavenumbers: Vec<f64>,
}

impl VlasovStepper {
    pub(crate) fn new(grid: PhaseGrid, dt: f64) -> Self {
        let kx = grid.x.wavenumbers();
        // per xi column: multiplier for v(x - 2 xi dt)
        let drift = (0..grid.xi.count())
            .map(|k| fft::shift_multiplier(&kx, -2.0 * grid.xi.node(k) * dt))
            .collect();
        Self {
            grid,
            dt,
            drift,
            xi_wavenumbers: grid.xi.wavenumbers(),
        }
    }

    /// `v(x, xi) -> v(x, xi - force(x) tau)`.
    pub(crate) fn kick(&self, v: &mut SymbolField, force: &[f64], tau: f64) {
        let kw = &self.xi_wavenumbers;
        let fwd = fft::forward(kw.len());
        let inv = fft::inverse(kw.len());
        v.values_mut()
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(j, mut row)| {
                let mult = fft::shift_multiplier(kw, -force[j] * tau);
                let mut buf = row.to_vec();
                fwd.process(&mut buf);
                let s = 1.0 / buf.len() as f64;
                buf.iter_mut().zip(&mult).for_each(|(b, m)| *b *= m * s);
                inv.process(&mut buf);
                row.iter_mut().zip(buf).for_each(|(r, b)| *r = b);
            });
    }

    /// `v(x, xi) -> v(x - 2 xi dt, xi)`.
    pub(crate) fn drift(&self, v: &mut SymbolField) {
        let m = self.grid.x.count();
        let fwd = fft::forward(m);
        let inv = fft::inverse(m);
        let drift = &self.drift;
        v.values_mut()
            .axis_iter_mut(Axis(1))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut col)| {
                let mut buf = col.to_vec();
                fwd.process(&mut buf);
                let s = 1.0 / m as f64;
                buf.iter_mut().zip(&drift[k]).for_each(|(b, mlt)| *b *= mlt * s);
                inv.process(&mut buf);
                col.iter_mut().zip(buf).for_each(|(c, b)| *c = b);
            });
    }

    pub(crate) fn dt(&self) -> f64 {
        self.dt
    }
}

fn mass(v: &SymbolField) -> f64 {
    v.values().iter().map(|c| c.re).sum::<f64>() * v.grid().cell_area()
}

/// Split-step spectral Vlasov solver: half kick with the current field,
/// exact free drift, half kick with the field of the drifted density. Kicks
/// leave the x-marginal unchanged, so the second field is the end-of-step
/// field. All shifts are trigonometric interpolations, i.e. the
/// semi-Lagrangian update along split characteristics.
pub fn solve_vlasov(
    v0: &SymbolField,
    pot: &PotentialSpec,
    t_end: f64,
    dt: f64,
    snapshot_every: f64,
) -> Result<ClassicalTrajectory> {
    let n = step_count(t_end, dt)?;
    let stride = snapshot_stride(snapshot_every, dt)?;
    let stepper = VlasovStepper::new(*v0.grid(), dt);
    let m0 = mass(v0);
    let mut v = v0.clone();
    let (mut force, _) = classical_force(&v, pot);
    let mut out = ClassicalTrajectory {
        times: vec![],
        snapshots: vec![],
        forces: vec![],
        masses: vec![],
        minima: vec![],
    };
    let record = |v: &SymbolField, f: &[f64], t: f64, out: &mut ClassicalTrajectory| -> Result<()> {
        let mv = mass(v);
        if (mv - m0).abs() > MASS_ABORT * m0.abs().max(1e-300) {
            return Err(Error::MassDrift { time: t, drift: mv - m0 });
        }
        out.times.push(t);
        out.snapshots.push(v.clone());
        out.forces.push(f.to_vec());
        out.masses.push(mv);
        out.minima.push(v.min_real());
        Ok(())
    };
    record(&v, &force, 0.0, &mut out)?;
    for step in 1..=n {
        stepper.kick(&mut v, &force, 0.5 * stepper.dt());
        stepper.drift(&mut v);
        force = classical_force(&v, pot).0;
        stepper.kick(&mut v, &force, 0.5 * stepper.dt());
        if step % stride == 0 || step == n {
            record(&v, &force, step as f64 * dt, &mut out)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{norm, NormKind};

    fn phase_grid() -> PhaseGrid {
        // x-box wide enough that the sheared blob does not wrap
        PhaseGrid::new(SpaceGrid::new(12.0, 192).unwrap(), SpaceGrid::new(6.0, 96).unwrap())
    }

    fn blob(g: PhaseGrid) -> SymbolField {
        SymbolField::from_real_fn(g, |x, xi| (-(x + 1.0).powi(2) - xi * xi).exp() / std::f64::consts::PI)
    }

    #[test]
    fn free_flow_is_exact() {
        let pot = PotentialSpec::free();
        let f = AnalyticForce(&pot);
        let start = vec![(0.0, 1.0), (-1.0, -0.5)];
        let flow = integrate_characteristics(&f, &start, &[0.0, 0.5, 1.0], 4, None).unwrap();
        for (i, &(x, xi)) in start.iter().enumerate() {
            let (q, p) = flow.forward[2][i];
            assert!((q - (x + 2.0 * xi)).abs() < 1e-14 && (p - xi).abs() < 1e-14);
        }
        assert_eq!(flow.exits, 0);
    }

    #[test]
    fn flow_is_volume_preserving_and_invertible() {
        let pot = PotentialSpec::gaussian_bumps(0.5, 0.0, 2.0).unwrap();
        let f = AnalyticForce(&pot);
        let start = vec![(0.3, 0.2), (-1.0, 0.8), (1.5, -0.4)];
        let flow = integrate_characteristics(&f, &start, &[0.0, 0.5, 1.0], 50, None).unwrap();
        assert!(flow.max_jacobian_defect() < 1e-5);
        // forward flow from the backward feet lands on the start nodes
        let feet = &flow.backward[2];
        let again = integrate_characteristics(&f, feet, &[0.0, 1.0], 50, None).unwrap();
        for (a, b) in again.forward[1].iter().zip(&start) {
            assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
        }
    }

    #[test]
    fn vlasov_free_transport_and_mass() {
        let g = phase_grid();
        let v0 = blob(g);
        let tr = solve_vlasov(&v0, &PotentialSpec::free(), 1.0, 0.05, 0.5).unwrap();
        let exact = SymbolField::from_real_fn(g, |x, xi| {
            (-(x - 2.0 * xi + 1.0).powi(2) - xi * xi).exp() / std::f64::consts::PI
        });
        let err = tr.snapshots.last().unwrap().sub(&exact).unwrap().sup();
        assert!(err < 1e-5, "{err} {:?}", tr.times);
        // finer grid: at t = 2 the hill top has stretched the blob sevenfold
        let fine = PhaseGrid::new(SpaceGrid::new(16.0, 1024).unwrap(), SpaceGrid::new(5.0, 400).unwrap());
        let self_consistent = solve_vlasov(&blob(fine), &PotentialSpec::gaussian_bumps(0.5, 0.5, 2.0).unwrap(), 2.0, 0.01, 0.5).unwrap();
        for m in &self_consistent.masses {
            assert!((m - self_consistent.masses[0]).abs() < 1e-5);
        }
        assert!(self_consistent.minima.iter().all(|&v| v > NEGATIVITY_FLOOR), "{:?}", self_consistent.minima);
    }

    #[test]
    fn pullback_identity_and_free_closed_form() {
        let g = phase_grid();
        let v0 = blob(g);
        let pot = PotentialSpec::free();
        let flow = integrate_characteristics(&AnalyticForce(&pot), &grid_nodes(&g), &[0.0, 0.5], 1, None).unwrap();
        let same = transport_pullback(&v0, &flow, 0.0).unwrap();
        assert_eq!(same.sub(&v0).unwrap().sup(), 0.0);
        let moved = transport_pullback(&v0, &flow, 0.5).unwrap();
        let exact = SymbolField::from_real_fn(g, |x, xi| {
            (-(x - xi + 1.0).powi(2) - xi * xi).exp() / std::f64::consts::PI
        });
        assert!(moved.sub(&exact).unwrap().sup() < 1e-4);
        let l1 = norm(&moved, NormKind::L1).unwrap();
        assert!((l1 - norm(&v0, NormKind::L1).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn mean_field_linearity() {
        let g = phase_grid();
        let v = blob(g);
        let pot = PotentialSpec::gaussian_bumps(0.5, 0.5, 2.0).unwrap();
        let a = classical_mean_field(&v, &pot);
        let b = classical_mean_field(&v.scaled(Complex64::new(2.0, 0.0)), &pot);
        let ext = pot.external_on(&g.x, 0);
        for j in 0..a.len() {
            assert!(((b[j] - ext[j]) - 2.0 * (a[j] - ext[j])).abs() < 1e-12);
        }
        assert_eq!(classical_mean_field(&v, &pot.without_interaction()), ext);
    }
}
