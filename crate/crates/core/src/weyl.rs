//! Weyl quantization, Wigner-transform symbols and the commutator
//! seminorms built from position and momentum.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SymbolField;
use crate::grid::{check_h, PhaseGrid, SpaceGrid};
use crate::numerics::{integrate, norm, NormKind};
use crate::operator::OperatorMatrix;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Assemble `A[j, l]` from symbol rows on the half-step grid. `rows[c]`
/// holds `F(-L + c dx / 2, xi_k)` for `c = 0 .. 2M`.
fn assemble_weyl(rows: &Array2<Complex64>, grid: SpaceGrid, h: f64) -> Result<OperatorMatrix> {
    let m = grid.count();
    let half = m / 2;
    // s[c][d] = (-1)^d sum_k F(x'_c, xi_k) e^{2 pi i d k / M}, d taken mod M.
    let spectra: Vec<Vec<Complex64>> = rows
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            let mut buf: Vec<Complex64> = row.to_vec();
            fft::ifft_in_place(&mut buf);
            buf.iter_mut().enumerate().for_each(|(d, c)| {
                *c *= if d % 2 == 0 { m as f64 } else { -(m as f64) };
            });
            buf
        })
        .collect();
    let scale = 1.0 / m as f64;
    let mut data = Array2::<Complex64>::zeros((m, m));
    // Pairs further apart than half the box are the periodic images of
    // nearer pairs; their midpoint sits half a box away.
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut out)| {
            for l in 0..m {
                let d = j as isize - l as isize;
                let ad = d.unsigned_abs();
                let dm = d.rem_euclid(m as isize) as usize;
                let near = spectra[j + l][dm];
                let far = spectra[(j + l + m) % (2 * m)][dm];
                out[l] = scale
                    * if ad < half {
                        near
                    } else if ad > half {
                        far
                    } else {
                        0.5 * (near + far)
                    };
            }
        });
    OperatorMatrix::new(h, grid, data)
}

fn warn_on_boundary(f: &SymbolField) {
    let edge = f.boundary_sup();
    if edge > 1e-10 * f.sup().max(f64::MIN_POSITIVE) {
        log::warn!("symbol does not decay at the box edge (edge value {edge:e})");
    }
}

/// `Op_h^weyl(F)` for a tabulated symbol; midpoint values come from
/// trigonometric interpolation in `x`.
pub fn quantize_weyl(f: &SymbolField, h: f64) -> Result<OperatorMatrix> {
    check_h(h)?;
    let grid = *f.grid();
    grid.ensure_dual(h)?;
    warn_on_boundary(f);
    let (m, n) = grid.shape();
    let mut rows = Array2::<Complex64>::zeros((2 * m, n));
    let cols: Vec<Vec<Complex64>> = f
        .values()
        .axis_iter(Axis(1))
        .into_par_iter()
        .map(|col| fft::refine_double(&col.to_vec()))
        .collect();
    for (k, col) in cols.iter().enumerate() {
        for (c, v) in col.iter().enumerate() {
            rows[[c, k]] = *v;
        }
    }
    let mut op = assemble_weyl(&rows, grid.x, h)?;
    if f.is_real() {
        op.set_flags(true, false);
    }
    Ok(op)
}

/// `Op_h^weyl(F)` for an analytic symbol evaluated directly at midpoints.
pub fn quantize_weyl_fn<F>(grid: PhaseGrid, h: f64, f: F) -> Result<OperatorMatrix>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    check_h(h)?;
    grid.ensure_dual(h)?;
    let (m, n) = grid.shape();
    let dx = grid.x.spacing();
    let mut rows = Array2::<Complex64>::zeros((2 * m, n));
    rows.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut row)| {
            let x = -grid.x.half_width() + 0.5 * c as f64 * dx;
            for (k, v) in row.iter_mut().enumerate() {
                *v = f(x, grid.xi.node(k));
            }
        });
    let real = rows.iter().all(|c| c.im == 0.0);
    let mut op = assemble_weyl(&rows, grid.x, h)?;
    if real {
        op.set_flags(true, false);
    }
    Ok(op)
}

/// Weyl symbol `sigma(x, xi) = \int K(x + s/2, x - s/2) e^{-i s xi / h} ds`
/// on the h-dual phase grid.
pub fn symbol_weyl(a: &OperatorMatrix) -> Result<SymbolField> {
    let h = a.h();
    let grid = PhaseGrid::dual(*a.grid(), h)?;
    let m = grid.x.count();
    let dx = grid.x.spacing();
    let kernel = a.data().mapv(|c| c / dx);
    // K(x + dx/2, y + dx/2) as T K T^*, with T the unitary half-step
    // translation (Nyquist mode multiplied by i).
    let mut shifted = kernel.clone();
    let mut mult = fft::shift_multiplier(&grid.x.wavenumbers(), 0.5 * dx);
    mult[m / 2] = I;
    fft::apply_multiplier(&mut shifted, Axis(0), &mult);
    mult[m / 2] = -I;
    fft::apply_multiplier(&mut shifted, Axis(1), &mult);
    let half = (m / 2) as isize;
    let mi = m as isize;
    let mut values = Array2::<Complex64>::zeros((m, m));
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut out)| {
            let j = j as isize;
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for s in -half..half {
                let (r, c, src) = if s % 2 == 0 {
                    let p = s / 2;
                    (j + p, j - p, &kernel)
                } else {
                    let p = (s - 1).div_euclid(2);
                    (j + p, j - p - 1, &shifted)
                };
                let (r, c) = (r.rem_euclid(mi) as usize, c.rem_euclid(mi) as usize);
                buf[s.rem_euclid(mi) as usize] = src[[r, c]];
            }
            fft::fft_in_place(&mut buf);
            for (o, b) in out.iter_mut().zip(buf) {
                *o = b * dx;
            }
        });
    // the sum over k = -M/2 .. M/2-1 maps xi index k' = k + M/2 to FFT bin k mod M
    let mut reordered = Array2::<Complex64>::zeros((m, m));
    for j in 0..m {
        for kp in 0..m {
            let k = kp as isize - half;
            reordered[[j, kp]] = values[[j, k.rem_euclid(mi) as usize]];
        }
    }
    SymbolField::new(grid, reordered)
}

/// `(Tr(Op F Op G), (2 pi h)^{-1} \int F G)`.
pub fn trace_product_check(f: &SymbolField, g: &SymbolField, h: f64) -> Result<(Complex64, Complex64)> {
    f.grid().ensure_same(g.grid())?;
    let a = quantize_weyl(f, h)?;
    let b = quantize_weyl(g, h)?;
    let (ad, bd) = (a.data(), b.data());
    let m = a.dim();
    let lhs: Complex64 = (0..m)
        .into_par_iter()
        .map(|j| (0..m).map(|l| ad[[j, l]] * bd[[l, j]]).sum::<Complex64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let rhs = integrate(&f.mul(g)?)? / (2.0 * PI * h);
    Ok((lhs, rhs))
}

/// Position operator `Q(h)`: multiplication by `x`.
pub fn position_operator(grid: SpaceGrid, h: f64) -> Result<OperatorMatrix> {
    OperatorMatrix::multiplication(h, grid, grid.nodes().as_slice().unwrap())
}

/// Momentum operator `P(h) = (h/i) d/dx` by spectral differentiation.
pub fn momentum_operator(grid: SpaceGrid, h: f64) -> Result<OperatorMatrix> {
    let m = grid.count();
    let mut data = Array2::eye(m).mapv(|v: f64| Complex64::new(v, 0.0));
    let mult = fft::derivative_multiplier(&grid.wavenumbers(), 1);
    fft::apply_multiplier(&mut data, Axis(0), &mult);
    data.mapv_inplace(|c| c * (-I * h));
    let mut op = OperatorMatrix::new(h, grid, data)?;
    op.set_flags(true, false);
    Ok(op)
}

/// `[P(h), A]`, i.e. the kernel `(h/i)(d_x + d_y) K(x, y)`.
pub fn ad_p(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    let mult = fft::derivative_multiplier(&a.grid().wavenumbers(), 1);
    let mut dx = a.data().clone();
    fft::apply_multiplier(&mut dx, Axis(0), &mult);
    let mut dy = a.data().clone();
    fft::apply_multiplier(&mut dy, Axis(1), &mult);
    let data = (dx + dy).mapv(|c| c * (-I * a.h()));
    OperatorMatrix::new(a.h(), *a.grid(), data)
}

/// `[Q(h), A]`, i.e. the kernel `(x - y) K(x, y)`.
pub fn ad_q(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    let g = a.grid();
    let data = Array2::from_shape_fn((a.dim(), a.dim()), |(j, l)| a.data()[[j, l]] * (g.node(j) - g.node(l)));
    OperatorMatrix::new(a.h(), *g, data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormEntry {
    pub alpha: u32,
    pub beta: u32,
    pub trace_norm: f64,
    /// `h^{1 - alpha - beta} * trace_norm`
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub h: f64,
    pub order: u32,
    pub entries: Vec<SeminormEntry>,
}

impl SeminormReport {
    pub fn get(&self, alpha: u32, beta: u32) -> Option<&SeminormEntry> {
        self.entries.iter().find(|e| e.alpha == alpha && e.beta == beta)
    }
}

/// Trace norms of `(ad P)^alpha (ad Q)^beta A` for `alpha + beta <= m`.
pub fn rondeaux_seminorms(a: &OperatorMatrix, m: u32) -> Result<SeminormReport> {
    if m > 4 {
        return Err(Error::invalid(format!("seminorm order {m} exceeds the cap of 4")));
    }
    let h = a.h();
    let mut entries = Vec::new();
    let mut q_chain = a.clone();
    for beta in 0..=m {
        if beta > 0 {
            q_chain = ad_q(&q_chain)?;
        }
        let mut p_chain = q_chain.clone();
        for alpha in 0..=(m - beta) {
            if alpha > 0 {
                p_chain = ad_p(&p_chain)?;
            }
            let tn = p_chain.trace_norm()?;
            entries.push(SeminormEntry {
                alpha,
                beta,
                trace_norm: tn,
                weighted: h.powi(1 - (alpha + beta) as i32) * tn,
            });
        }
    }
    entries.sort_by_key(|e| (e.alpha + e.beta, e.alpha));
    Ok(SeminormReport { h, order: m, entries })
}

/// `sum_{a + b <= 4} h^{(a + b)/2} |d_x^a d_xi^b F|` in the given norm.
pub fn symbol_seminorm_sum(f: &SymbolField, h: f64, kind: NormKind) -> Result<f64> {
    let mut s = 0.0;
    for a in 0..=4u32 {
        for b in 0..=(4 - a) {
            s += h.powf(0.5 * (a + b) as f64) * norm(&f.derivative(a, b), kind)?;
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundMonitor {
    pub value: f64,
    pub bound_shape: f64,
    /// `value / bound_shape`: the smallest constant that makes the bound hold.
    pub ratio: f64,
}

/// Operator norm of `Op F` against the Calderon-Vaillancourt shape
/// `sum h^{(a+b)/2} |d^a d^b F|_sup`.
pub fn calderon_vaillancourt_monitor(f: &SymbolField, h: f64) -> Result<BoundMonitor> {
    let value = quantize_weyl(f, h)?.operator_norm()?;
    let bound_shape = symbol_seminorm_sum(f, h, NormKind::Sup)?;
    Ok(BoundMonitor {
        value,
        bound_shape,
        ratio: value / bound_shape,
    })
}

/// Trace norm of `Op F` against `h^{-1} sum h^{(a+b)/2} |d^a d^b F|_{L1}`.
pub fn trace_norm_monitor(f: &SymbolField, h: f64) -> Result<BoundMonitor> {
    let value = quantize_weyl(f, h)?.trace_norm()?;
    let bound_shape = symbol_seminorm_sum(f, h, NormKind::L1)? / h;
    Ok(BoundMonitor {
        value,
        bound_shape,
        ratio: value / bound_shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::inner;

    fn setup(h: f64, m: usize) -> PhaseGrid {
        PhaseGrid::dual(SpaceGrid::new(8.0, m).unwrap(), h).unwrap()
    }

    fn coherent(grid: &SpaceGrid, h: f64, x0: f64, xi0: f64) -> Vec<Complex64> {
        (0..grid.count())
            .map(|j| {
                let u = grid.node(j);
                let amp = (PI * h).powf(-0.25) * (-(u - x0).powi(2) / (2.0 * h)).exp();
                Complex64::from_polar(amp, (u * xi0 - 0.5 * x0 * xi0) / h)
            })
            .collect()
    }

    #[test]
    fn one_quantizes_to_identity() {
        let h = 0.2;
        let g = setup(h, 64);
        let a = quantize_weyl_fn(g, h, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let id = OperatorMatrix::identity(h, g.x).unwrap();
        assert!(a.max_abs_diff(&id).unwrap() < 1e-10);
        let s = symbol_weyl(&id).unwrap();
        assert!(s.values().iter().all(|c| (c - 1.0).norm() < 1e-10));
    }

    #[test]
    fn xi_acts_as_momentum_on_plane_waves() {
        let h = 0.25;
        let g = setup(h, 64);
        let a = quantize_weyl_fn(g, h, |_, xi| Complex64::new(xi, 0.0)).unwrap();
        let xi0 = g.xi.node(37);
        let wave: Vec<Complex64> = (0..64).map(|j| Complex64::from_polar(1.0, g.x.node(j) * xi0 / h)).collect();
        let out = a.apply(&wave).unwrap();
        for (o, w) in out.iter().zip(&wave) {
            assert!((o - w * xi0).norm() < 1e-10);
        }
    }

    #[test]
    fn projector_symbol() {
        let h = 0.2;
        let g = setup(h, 128);
        let (x0, xi0) = (0.5, -0.3);
        let sym = |x: f64, xi: f64| 2.0 * (-((x - x0).powi(2) + (xi - xi0).powi(2)) / h).exp();
        let a = quantize_weyl_fn(g, h, |x, xi| Complex64::new(sym(x, xi), 0.0)).unwrap();
        let psi = coherent(&g.x, h, x0, xi0);
        let p = OperatorMatrix::outer(h, g.x, &psi, &psi).unwrap();
        assert!(a.max_abs_diff(&p).unwrap() < 1e-8);
        let back = symbol_weyl(&p).unwrap();
        let exact = SymbolField::from_real_fn(g, sym);
        assert!(back.sub(&exact).unwrap().sup() < 1e-8);
        assert!((p.trace().re - 1.0).abs() < 1e-8);
        assert!((inner(&psi, &psi, &g.x).re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_round_trip() {
        let h = 0.1;
        let g = setup(h, 128);
        let f = SymbolField::from_fn(g, |x, xi| {
            Complex64::new((-(x - 0.4).powi(2) - 4.0 * xi * xi).exp() * (1.0 + 0.5 * x), 0.2 * xi * (-x * x - 3.0 * xi * xi).exp())
        });
        let a = quantize_weyl(&f, h).unwrap();
        let back = symbol_weyl(&a).unwrap();
        assert!(back.sub(&f).unwrap().sup() < 1e-8);
    }

    #[test]
    fn canonical_commutator_on_localized_vector() {
        let h = 0.1;
        let g = setup(h, 128);
        let q = position_operator(g.x, h).unwrap();
        let p = momentum_operator(g.x, h).unwrap();
        let c = q.commutator(&p).unwrap();
        let psi = coherent(&g.x, h, 0.3, 0.2);
        let out = c.apply(&psi).unwrap();
        for (o, v) in out.iter().zip(&psi) {
            assert!((o - I * h * v).norm() < 1e-10);
        }
        let id = OperatorMatrix::identity(h, g.x).unwrap();
        assert!(ad_p(&id).unwrap().sup() < 1e-12);
    }

    #[test]
    fn ad_p_differentiates_symbol() {
        let h = 0.2;
        let g = setup(h, 128);
        let f = SymbolField::from_real_fn(g, |x, xi| (-(x * x) - (xi - 0.3).powi(2)).exp());
        let a = quantize_weyl(&f, h).unwrap();
        let lhs = symbol_weyl(&ad_p(&a).unwrap()).unwrap();
        let rhs = f.derivative(1, 0).scaled(-I * h);
        assert!(lhs.sub(&rhs).unwrap().sup() < 1e-8);
        let a_ad_q = symbol_weyl(&ad_q(&a).unwrap()).unwrap();
        let rhs_q = f.derivative(0, 1).scaled(I * h);
        assert!(a_ad_q.sub(&rhs_q).unwrap().sup() < 1e-8);
    }

    #[test]
    fn seminorms_of_projector_and_zero() {
        let h = 0.25;
        let g = setup(h, 128);
        let psi = coherent(&g.x, h, 0.0, 0.0);
        let p = OperatorMatrix::outer(h, g.x, &psi, &psi).unwrap();
        let r = rondeaux_seminorms(&p, 2).unwrap();
        assert_eq!(r.entries.len(), 6);
        assert!((r.get(0, 0).unwrap().weighted - 0.25).abs() < 1e-8);
        let z = OperatorMatrix::zeros(h, g.x).unwrap();
        assert!(rondeaux_seminorms(&z, 2).unwrap().entries.iter().all(|e| e.trace_norm == 0.0));
        assert!(rondeaux_seminorms(&z, 5).is_err());
    }
}
