//! Order-N semiclassical expansion `F^(N) = sum_{j<N} h^j u_j` of the TDHF
//! symbol: `u_0` solves Vlasov, `u_j` (j >= 1) solve the linearized
//! transport equation with mean-field back-reaction and Moyal sources.

use ndarray::Axis;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{classical_force, marginal, solve_vlasov, ClassicalTrajectory, VlasovStepper, MASS_ABORT};
use crate::error::{Error, Result};
use crate::field::SymbolField;
use crate::moyal::{ck_term_potential, MAX_ORDER};
use crate::numerics::{integrate, norm, NormKind};
use crate::potential::PotentialSpec;
use crate::quantum::{snapshot_stride, step_count, QuantumTrajectory};
use crate::slope::{fit_loglog_slope, SlopeFit};
use crate::weyl::quantize_weyl;

pub const MAX_CASCADE_ORDER: usize = 3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `u_0` is the Vlasov solution started from `F_h`.
pub fn build_u0(
    f_h: &SymbolField,
    pot: &PotentialSpec,
    t_end: f64,
    dt: f64,
    snapshot_every: f64,
) -> Result<ClassicalTrajectory> {
    solve_vlasov(f_h, pot, t_end, dt, snapshot_every)
}

/// `d_x^order` of the potential felt at order `j`: `V + W * n_0` for
/// `j = 0`, `W * n_j` otherwise (the h^j coefficient of `V_cl(u_h)`).
pub fn order_potential(u_j: &SymbolField, j: usize, pot: &PotentialSpec, order: u32) -> Vec<f64> {
    let n = marginal(u_j);
    let grid = &u_j.grid().x;
    if j == 0 {
        pot.mean_field(grid, &n, order)
    } else {
        pot.convolve(grid, &n, order)
    }
}

/// `G_N = (1/i) sum_{j+k+l = N+1, j<N, l<N} C_k(V_j, u_l)` from the fields
/// `us = [u_0, ..., u_{N-1}]` at one time.
pub fn source_term(us: &[SymbolField], pot: &PotentialSpec, n: usize) -> Result<SymbolField> {
    if n == 0 {
        return Err(Error::invalid("source terms start at N = 1"));
    }
    if us.len() < n {
        return Err(Error::invalid(format!(
            "G_{n} needs u_0..u_{} but only {} fields were given",
            n - 1,
            us.len()
        )));
    }
    let grid = *us[0].grid();
    for u in &us[1..n] {
        grid.ensure_same(u.grid())?;
    }
    let mut acc = SymbolField::zeros(grid);
    for j in 0..n {
        if us[j].sup() == 0.0 {
            continue;
        }
        for l in 0..n {
            let Some(k) = (n + 1).checked_sub(j + l) else { continue };
            if k == 0 || us[l].sup() == 0.0 {
                continue;
            }
            if k as u32 > MAX_ORDER {
                return Err(Error::invalid(format!("C_{k} exceeds the supported Moyal order")));
            }
            // V_j depends on x only, so exact derivatives of the kernel
            // replace spectral differencing of a non-periodic profile
            let a_k = order_potential(&us[j], j, pot, k as u32);
            acc = acc.add(&ck_term_potential(&a_k, &us[l], k as u32)?)?;
        }
    }
    Ok(acc.scaled(-I))
}

/// L1 norms of `d_x^a d_xi^b u` for `a + b <= 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeL1 {
    pub entries: Vec<((u32, u32), f64)>,
}

impl DerivativeL1 {
    fn of(u: &SymbolField) -> Result<Self> {
        let mut entries = vec![];
        for a in 0..=2u32 {
            for b in 0..=(2 - a) {
                entries.push(((a, b), norm(&u.derivative(a, b), NormKind::L1)?));
            }
        }
        Ok(Self { entries })
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct ExpansionBundle {
    pub h: f64,
    pub order: usize,
    pub times: Vec<f64>,
    /// `fields[j][k] = u_j(., t_k)`
    pub fields: Vec<Vec<SymbolField>>,
    /// `assembled[k] = F^(N)(., t_k)`
    pub assembled: Vec<SymbolField>,
    /// `l1[j][k]`: derivative L1 norms of `u_j(., t_k)`
    pub l1: Vec<Vec<DerivativeL1>>,
    pub masses: Vec<f64>,
}

impl ExpansionBundle {
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() < 1e-9)
    }

    pub fn field(&self, j: usize, t: f64) -> Option<&SymbolField> {
        self.fields.get(j)?.get(self.index_of(t)?)
    }
}

fn real_part(u: &mut SymbolField) {
    u.values_mut().par_mapv_inplace(|c| Complex64::new(c.re, 0.0));
}

/// Right side of the `u_j` equation without the transport part:
/// `d_x(W * n_j) d_xi u_0 + G_j`.
fn rhs(u_j: &SymbolField, dxi_u0: &SymbolField, g_j: &SymbolField, pot: &PotentialSpec) -> Result<SymbolField> {
    if pot.interaction_is_zero() {
        return Ok(g_j.clone());
    }
    let back = pot.convolve(&u_j.grid().x, &marginal(u_j), 1);
    let mut out = dxi_u0.clone();
    out.values_mut()
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(back.par_iter())
        .for_each(|(mut row, &b)| row.mapv_inplace(|c| c * b));
    out.add(g_j)
}

/// Solves for `u_0..u_{N-1}` in lockstep. Each step is a Strang split: half
/// step of the source and back-reaction (explicit midpoint, sources frozen at
/// the start of the half step), transport along the `u_0` characteristics
/// with the Vlasov stepper, second half step of the source.
pub fn solve_cascade(
    f_h: &SymbolField,
    pot: &PotentialSpec,
    n: usize,
    t_end: f64,
    dt: f64,
    snapshot_every: f64,
) -> Result<ExpansionBundle> {
    if n == 0 || n > MAX_CASCADE_ORDER {
        return Err(Error::invalid(format!("expansion order must be in 1..={MAX_CASCADE_ORDER}, got {n}")));
    }
    let steps = step_count(t_end, dt)?;
    let stride = snapshot_stride(snapshot_every, dt)?;
    let grid = *f_h.grid();
    let h = grid.xi.spacing() * grid.x.half_width() / std::f64::consts::PI;
    let stepper = VlasovStepper::new(grid, dt);
    let mass0 = integrate(f_h)?.re;
    let mut us: Vec<SymbolField> = std::iter::once(f_h.clone())
        .chain((1..n).map(|_| SymbolField::zeros(grid)))
        .collect();
    let mut bundle = ExpansionBundle {
        h,
        order: n,
        times: vec![],
        fields: vec![vec![]; n],
        assembled: vec![],
        l1: vec![vec![]; n],
        masses: vec![],
    };
    let record = |us: &[SymbolField], t: f64, b: &mut ExpansionBundle| -> Result<()> {
        let mass = integrate(&us[0])?.re;
        if (mass - mass0).abs() > MASS_ABORT * mass0.abs().max(1e-300) {
            return Err(Error::MassDrift { time: t, drift: mass - mass0 });
        }
        let mut f = us[0].clone();
        for (j, u) in us.iter().enumerate() {
            if !u.is_finite() {
                return Err(Error::invalid(format!("u_{j} diverged at t = {t}")));
            }
            if j > 0 {
                f = f.axpy(Complex64::new(h.powi(j as i32), 0.0), u)?;
            }
            b.fields[j].push(u.clone());
            b.l1[j].push(DerivativeL1::of(u)?);
        }
        let edge = us.iter().map(|u| u.boundary_sup()).fold(0.0, f64::max);
        if edge > 1e-6 * f.sup().max(1e-300) {
            log::warn!("expansion fields reach the box edge at t = {t}: {edge:e}");
        }
        b.times.push(t);
        b.assembled.push(f);
        b.masses.push(mass);
        Ok(())
    };
    // half step of the linear source part for u_1..u_{N-1}
    let source_half = |us: &mut Vec<SymbolField>, tau: f64| -> Result<()> {
        if us.len() < 2 {
            return Ok(());
        }
        let dxi_u0 = us[0].derivative(0, 1);
        let sources: Vec<SymbolField> = (1..us.len())
            .map(|j| source_term(&us[..j], pot, j))
            .collect::<Result<_>>()?;
        for j in 1..us.len() {
            let g = &sources[j - 1];
            let k1 = rhs(&us[j], &dxi_u0, g, pot)?;
            let mid = us[j].axpy(Complex64::new(0.5 * tau, 0.0), &k1)?;
            let k2 = rhs(&mid, &dxi_u0, g, pot)?;
            us[j] = us[j].axpy(Complex64::new(tau, 0.0), &k2)?;
            real_part(&mut us[j]);
        }
        Ok(())
    };
    let (mut force, _) = classical_force(&us[0], pot);
    record(&us, 0.0, &mut bundle)?;
    for step in 1..=steps {
        source_half(&mut us, 0.5 * dt)?;
        for u in us.iter_mut() {
            stepper.kick(u, &force, 0.5 * dt);
            stepper.drift(u);
        }
        force = classical_force(&us[0], pot).0;
        for u in us.iter_mut() {
            stepper.kick(u, &force, 0.5 * dt);
        }
        source_half(&mut us, 0.5 * dt)?;
        if step % stride == 0 || step == steps {
            record(&us, step as f64 * dt, &mut bundle)?;
        }
    }
    Ok(bundle)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub h: f64,
    pub t: f64,
    /// `|| u_h - F^(N) ||_{L1}`
    pub symbol_error: f64,
    /// `|| rho_h - (2 pi h) Op(F^(N)) ||_tr`
    pub trace_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub order: usize,
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    pub fn at(&self, t: f64) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| (e.t - t).abs() < 1e-9)
    }
}

/// Errors at every time present in both the quantum run and the bundle.
pub fn compare(quantum: &QuantumTrajectory, bundle: &ExpansionBundle) -> Result<ComparisonReport> {
    if (quantum.h - bundle.h).abs() > 1e-12 * bundle.h {
        return Err(Error::GridMismatch(format!("h = {} vs {}", quantum.h, bundle.h)));
    }
    let mut entries = vec![];
    for (k, &t) in bundle.times.iter().enumerate() {
        let Some(q) = quantum.index_of(t) else { continue };
        let u_h = &quantum.symbols[q];
        let f = &bundle.assembled[k];
        u_h.grid().ensure_same(f.grid())?;
        let symbol_error = norm(&u_h.sub(f)?, NormKind::L1)?;
        let rho_n = quantize_weyl(f, quantum.h)?.scale(Complex64::new(2.0 * std::f64::consts::PI * quantum.h, 0.0));
        let trace_error = quantum.states[q].sub(&rho_n)?.trace_norm()?;
        entries.push(ComparisonEntry {
            h: quantum.h,
            t,
            symbol_error,
            trace_error,
        });
    }
    if entries.is_empty() {
        return Err(Error::invalid("quantum run and expansion share no snapshot times"));
    }
    Ok(ComparisonReport {
        order: bundle.order,
        entries,
    })
}

/// Log-log slopes of the symbol and trace-norm errors at time `t` across
/// one report per `h`.
pub fn ladder_slopes(reports: &[ComparisonReport], t: f64) -> Result<(SlopeFit, SlopeFit)> {
    let pick = |f: fn(&ComparisonEntry) -> f64| -> Result<Vec<(f64, f64)>> {
        reports
            .iter()
            .map(|r| {
                r.at(t)
                    .map(|e| (e.h, f(e)))
                    .ok_or_else(|| Error::invalid(format!("no comparison at t = {t}")))
            })
            .collect()
    };
    Ok((
        fit_loglog_slope(&pick(|e| e.symbol_error)?)?,
        fit_loglog_slope(&pick(|e| e.trace_error)?)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PhaseGrid, SpaceGrid};

    fn grid() -> PhaseGrid {
        PhaseGrid::new(SpaceGrid::new(8.0, 128).unwrap(), SpaceGrid::new(4.0, 128).unwrap())
    }

    fn blob(g: PhaseGrid) -> SymbolField {
        SymbolField::from_real_fn(g, |x, xi| (-(x + 1.0).powi(2) - xi * xi).exp() / std::f64::consts::PI)
    }

    #[test]
    fn source_bookkeeping() {
        let g = grid();
        let pot = PotentialSpec::gaussian_bumps(0.5, 0.5, 2.0).unwrap();
        let u0 = blob(g);
        assert!(source_term(&[u0.clone()], &pot, 1).unwrap().sup() < 1e-14);
        let zero = SymbolField::zeros(g);
        let g2 = source_term(&[u0.clone(), zero.clone()], &pot, 2).unwrap();
        let a3 = order_potential(&u0, 0, &pot, 3);
        let c3 = ck_term_potential(&a3, &u0, 3).unwrap().scaled(-I);
        let gap = g2.sub(&c3).unwrap().sup();
        assert!(gap < 1e-12, "gap {gap:e} sup {:e}", c3.sup());
        // explicit form -V''' d_xi^3 u / 24
        let d3 = u0.derivative(0, 3);
        for j in (0..128).step_by(7) {
            for k in (0..128).step_by(5) {
                let want = -a3[j] * d3.values()[[j, k]].re / 24.0;
                assert!((g2.values()[[j, k]] - want).norm() < 1e-12);
            }
        }
        assert_eq!(source_term(&[zero.clone(), zero.clone()], &pot, 2).unwrap().sup(), 0.0);
        assert!(source_term(&[u0], &pot, 2).is_err());
    }

    #[test]
    fn cascade_structure() {
        let g = grid();
        let pot = PotentialSpec::gaussian_bumps(0.5, 0.5, 2.0).unwrap();
        let f = blob(g);
        let b = solve_cascade(&f, &pot, 3, 0.5, 0.01, 0.25).unwrap();
        assert_eq!(b.times.len(), 3);
        assert!(b.fields[1].iter().all(|u| u.sup() < 1e-10));
        assert!(b.fields[2][0].sup() == 0.0 && b.fields[2][2].sup() > 1e-6);
        for m in &b.masses {
            assert!((m - b.masses[0]).abs() < 1e-5);
        }
        // u_0 is the Vlasov solution
        let v = build_u0(&f, &pot, 0.5, 0.01, 0.25).unwrap();
        assert!(v.snapshots[2].sub(&b.fields[0][2]).unwrap().sup() < 1e-14);
        let empty = solve_cascade(&SymbolField::zeros(g), &pot, 3, 0.2, 0.01, 0.1).unwrap();
        assert!(empty.assembled.iter().all(|u| u.sup() == 0.0));
        assert!(solve_cascade(&f, &pot, 4, 0.1, 0.01, 0.1).is_err());
    }

    #[test]
    fn without_interaction_u2_is_pure_moyal_drive() {
        // W = 0: u_2 solves transport with source -V''' d_xi^3 u_0 / 24 only;
        // over a short time u_2 ~ t G_2(0)
        let g = grid();
        let pot = PotentialSpec::gaussian_bumps(0.5, 0.0, 2.0).unwrap();
        let f = blob(g);
        let t = 0.02;
        let b = solve_cascade(&f, &pot, 3, t, 0.001, t).unwrap();
        let g2 = source_term(&[f.clone(), SymbolField::zeros(g)], &pot, 2).unwrap();
        let rel = b.fields[2][1].sub(&g2.scaled(Complex64::new(t, 0.0))).unwrap().sup() / (t * g2.sup());
        assert!(rel < 0.05, "{rel}");
    }
}
