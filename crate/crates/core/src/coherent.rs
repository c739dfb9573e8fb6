//! Coherent states, anti-Wick quantization, the heat-semigroup bridge to
//! Weyl symbols, and the two-point Wick-type symbol `S_h(A)(X, Y)`.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SymbolField;
use crate::grid::{check_h, PhaseGrid, SpaceGrid};
use crate::numerics::{h_fourier, neumaier_sum, Direction};
use crate::operator::{inner, matmul, OperatorMatrix};

/// Phase point `X = (x, xi)` together with the semiclassical parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentIndex {
    pub x: f64,
    pub xi: f64,
    pub h: f64,
}

impl CoherentIndex {
    pub fn new(x: f64, xi: f64, h: f64) -> Result<Self> {
        check_h(h)?;
        Ok(Self { x, xi, h })
    }

    /// Distance to another phase point.
    pub fn distance(&self, other: &CoherentIndex) -> f64 {
        (self.x - other.x).hypot(self.xi - other.xi)
    }
}

/// Packets are required to sit this many widths `sqrt(h)` inside the box.
pub const BOUNDARY_WIDTHS: f64 = 6.0;

fn coherent_samples(c: &CoherentIndex, grid: &SpaceGrid) -> Vec<Complex64> {
    let h = c.h;
    let amp = (PI * h).powf(-0.25);
    (0..grid.count())
        .map(|j| {
            let u = grid.node(j);
            let a = amp * (-(u - c.x).powi(2) / (2.0 * h)).exp();
            Complex64::from_polar(a, (u * c.xi - 0.5 * c.x * c.xi) / h)
        })
        .collect()
}

/// Samples of `Psi_{X,h}(u) = (pi h)^{-1/4} e^{-(u-x)^2/2h} e^{i u xi/h - i x xi/2h}`.
pub fn coherent_vector(c: &CoherentIndex, grid: &SpaceGrid) -> Result<Vec<Complex64>> {
    let margin = BOUNDARY_WIDTHS * c.h.sqrt();
    let xi_width = grid.dual(c.h)?.half_width();
    if c.x.abs() > grid.half_width() - margin || c.xi.abs() > xi_width - margin {
        return Err(Error::NearBoundary {
            point: (c.x, c.xi),
            margin,
            half_width: grid.half_width(),
        });
    }
    Ok(coherent_samples(c, grid))
}

/// Rank-one projector `P_{X h}` onto the coherent state.
pub fn coherent_projector(c: &CoherentIndex, grid: &SpaceGrid) -> Result<OperatorMatrix> {
    let psi = coherent_vector(c, grid)?;
    let mut p = OperatorMatrix::outer(c.h, *grid, &psi, &psi)?;
    p.set_flags(true, true);
    Ok(p)
}

/// `T[j, k] = <f, Psi_{(x_j, xi_k)}>` over the h-dual phase grid.
pub fn coherent_transform(f: &[Complex64], grid: &SpaceGrid, h: f64) -> Result<Array2<Complex64>> {
    check_h(h)?;
    let m = grid.count();
    if f.len() != m {
        return Err(Error::GridMismatch("vector length".into()));
    }
    let dual = grid.dual(h)?;
    let pref = (PI * h).powf(-0.25) * (2.0 * PI * h).sqrt();
    let rows: Vec<Result<Vec<Complex64>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let x = grid.node(j);
            let windowed: Vec<Complex64> = (0..m)
                .map(|i| f[i] * (-(grid.node(i) - x).powi(2) / (2.0 * h)).exp())
                .collect();
            let spec = h_fourier(&windowed, grid, h, Direction::Forward)?;
            Ok(spec
                .iter()
                .enumerate()
                .map(|(k, s)| s * Complex64::from_polar(pref, x * dual.node(k) / (2.0 * h)))
                .collect())
        })
        .collect();
    let mut out = Array2::zeros((m, m));
    for (j, row) in rows.into_iter().enumerate() {
        for (k, v) in row?.into_iter().enumerate() {
            out[[j, k]] = v;
        }
    }
    Ok(out)
}

/// `(<f, g>, (2 pi h)^{-1} sum_X <f, Psi_X><Psi_X, g> dX)` with `X` running
/// over the h-dual phase grid.
pub fn resolution_of_identity_check(
    f: &[Complex64],
    g: &[Complex64],
    grid: &SpaceGrid,
    h: f64,
) -> Result<(Complex64, Complex64)> {
    let tf = coherent_transform(f, grid, h)?;
    let tg = coherent_transform(g, grid, h)?;
    let da = grid.spacing() * grid.dual(h)?.spacing();
    let re = neumaier_sum(tf.iter().zip(tg.iter()).map(|(a, b)| (a * b.conj()).re));
    let im = neumaier_sum(tf.iter().zip(tg.iter()).map(|(a, b)| (a * b.conj()).im));
    let rhs = Complex64::new(re, im) * da / (2.0 * PI * h);
    Ok((inner(f, g, grid), rhs))
}

/// `Op_h^AW(G) = (2 pi h)^{-1} \int G(X) P_{X h} dX` by quadrature over the
/// h-dual phase grid carrying `G`.
pub fn quantize_antiwick(g: &SymbolField, h: f64) -> Result<OperatorMatrix> {
    check_h(h)?;
    let grid = *g.grid();
    grid.ensure_dual(h)?;
    let m = grid.x.count();
    let dx = grid.x.spacing();
    // spectra[i][d] = sum_k G(x_i, xi_k) e^{i d dx xi_k / h}
    let spectra: Vec<Vec<Complex64>> = g
        .values()
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            let mut buf = row.to_vec();
            fft::ifft_in_place(&mut buf);
            buf.iter_mut().enumerate().for_each(|(d, c)| {
                *c *= if d % 2 == 0 { m as f64 } else { -(m as f64) };
            });
            buf
        })
        .collect();
    let reach = (9.0 * h.sqrt() / dx).ceil() as usize;
    let gauss: Vec<f64> = (0..=2 * reach + 1)
        .map(|s| (-(s as f64 * dx).powi(2) / (2.0 * h)).exp())
        .collect();
    let weight = |a: usize, b: usize| {
        let s = a.abs_diff(b);
        if s < gauss.len() {
            gauss[s]
        } else {
            0.0
        }
    };
    let pref = dx / m as f64 * (PI * h).powf(-0.5);
    let mut data = Array2::<Complex64>::zeros((m, m));
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut out)| {
            for l in 0..m {
                if j.abs_diff(l) > 2 * reach {
                    continue;
                }
                let d = (j as isize - l as isize).rem_euclid(m as isize) as usize;
                let lo = j.max(l).saturating_sub(reach);
                let hi = (j.min(l) + reach).min(m - 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in lo..=hi {
                    acc += spectra[i][d] * (weight(i, j) * weight(i, l));
                }
                out[l] = acc * pref;
            }
        });
    let mut op = OperatorMatrix::new(h, grid.x, data)?;
    if g.is_real() {
        op.set_flags(true, g.min_real() >= 0.0);
    }
    Ok(op)
}

/// `e^{(h/4) Delta} G`, computed spectrally on the grid of `G`.
pub fn heat_smooth(g: &SymbolField, h: f64) -> Result<SymbolField> {
    check_h(h)?;
    let grid = *g.grid();
    let mut values = g.values().clone();
    let multiplier = |kap: Vec<f64>| -> Vec<Complex64> {
        kap.iter()
            .map(|k| Complex64::new((-0.25 * h * k * k).exp(), 0.0))
            .collect()
    };
    fft::apply_multiplier(&mut values, Axis(0), &multiplier(grid.x.wavenumbers()));
    fft::apply_multiplier(&mut values, Axis(1), &multiplier(grid.xi.wavenumbers()));
    SymbolField::new(grid, values)
}

/// Default window for the Wick table: beyond `6 sqrt(h)` the coherent
/// overlap drops below `e^{-9}`.
pub fn default_wick_radius(h: f64) -> f64 {
    6.0 * h.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickEntry {
    pub x_index: usize,
    pub y_index: usize,
    pub value: Complex64,
}

/// `S_h(A)(X_a, Y_b)` on all node pairs with `|X - Y| <= radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickSymbolTable {
    pub h: f64,
    pub radius: f64,
    pub nodes: Vec<(f64, f64)>,
    pub entries: Vec<WickEntry>,
}

impl WickSymbolTable {
    pub fn get(&self, x_index: usize, y_index: usize) -> Option<Complex64> {
        self.entries
            .iter()
            .find(|e| e.x_index == x_index && e.y_index == y_index)
            .map(|e| e.value)
    }
}

/// Matrix whose columns are the coherent states at `nodes`.
fn coherent_columns(nodes: &[(f64, f64)], grid: &SpaceGrid, h: f64) -> Result<Array2<Complex64>> {
    let m = grid.count();
    let mut psi = Array2::zeros((m, nodes.len()));
    for (b, &(x, xi)) in nodes.iter().enumerate() {
        let v = coherent_vector(&CoherentIndex::new(x, xi, h)?, grid)?;
        for (i, c) in v.into_iter().enumerate() {
            psi[[i, b]] = c;
        }
    }
    Ok(psi)
}

/// `C[a, b] = <A Psi_{X_a}, Psi_{X_b}>` for all node pairs.
pub fn coherent_matrix_elements(a: &OperatorMatrix, nodes: &[(f64, f64)]) -> Result<Array2<Complex64>> {
    let psi = coherent_columns(nodes, a.grid(), a.h())?;
    let a_psi = matmul(a.data(), &psi);
    let psi_h = psi.t().mapv(|c| c.conj());
    // (Psi^* A Psi)[b, a] = <A Psi_a, Psi_b> / dx
    let c = matmul(&psi_h, &a_psi);
    let dx = a.grid().spacing();
    Ok(c.t().mapv(|v| v * dx))
}

/// Two-point Wick-type symbol of `A` on a list of phase points.
pub fn wick_type_symbol(a: &OperatorMatrix, nodes: &[(f64, f64)], radius: f64) -> Result<WickSymbolTable> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("window radius must be positive, got {radius}")));
    }
    let h = a.h();
    let num = coherent_matrix_elements(a, nodes)?;
    let id = OperatorMatrix::identity(h, *a.grid())?;
    let den = coherent_matrix_elements(&id, nodes)?;
    let mut entries = Vec::new();
    for (ia, &(xa, ka)) in nodes.iter().enumerate() {
        for (ib, &(xb, kb)) in nodes.iter().enumerate() {
            if (xa - xb).hypot(ka - kb) <= radius {
                entries.push(WickEntry {
                    x_index: ia,
                    y_index: ib,
                    value: num[[ia, ib]] / den[[ia, ib]],
                });
            }
        }
    }
    Ok(WickSymbolTable {
        h,
        radius,
        nodes: nodes.to_vec(),
        entries,
    })
}

fn as_complex(p: (f64, f64)) -> Complex64 {
    Complex64::new(p.0, p.1)
}

/// Right-hand side of the Bargmann-type transform
/// `(pi h)^{-1} \int e^{-(Z - X)(conj Z - conj Y)/h} sigma(Z) dZ` by quadrature
/// over the grid of `sigma`, with phase points written as `x + i xi`.
pub fn wick_from_weyl(sigma: &SymbolField, h: f64, x: (f64, f64), y: (f64, f64)) -> Complex64 {
    let grid = sigma.grid();
    let (zx, zy) = (as_complex(x), as_complex(y));
    let v = sigma.values();
    let (m, n) = grid.shape();
    let acc: Complex64 = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let z = Complex64::new(grid.x.node(j), grid.xi.node(k));
                let e = -(z - zx) * (z.conj() - zy.conj()) / h;
                if e.re > -700.0 {
                    row += e.exp() * v[[j, k]];
                }
            }
            row
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    acc * grid.cell_area() / (PI * h)
}

/// Square lattice of phase points with spacing `step` covering `[-r, r]^2`.
pub fn phase_lattice(r: f64, step: f64) -> Vec<(f64, f64)> {
    let n = (r / step).floor() as i64;
    let mut out = Vec::with_capacity(((2 * n + 1) * (2 * n + 1)) as usize);
    for a in -n..=n {
        for b in -n..=n {
            out.push((a as f64 * step, b as f64 * step));
        }
    }
    out
}

/// Weyl symbol at `z` recovered from the Wick-type symbol by the inverse
/// transform `2 (2 pi h)^{-2} \int S_h(A)(X, Y) K_h(X, Y, Z) dX dY`, using
/// lattice quadrature over pairs within `radius`. A spot check only: the
/// cost is quadratic in the number of lattice nodes. Along `X = -Y` the
/// integrand decays only like `e^{-|X-Y|^2/8h}`, so `radius` has to be about
/// twice the Wick-table default.
pub fn weyl_from_wick(
    a: &OperatorMatrix,
    nodes: &[(f64, f64)],
    cell_area: f64,
    radius: f64,
    z: (f64, f64),
) -> Result<Complex64> {
    let h = a.h();
    let table = wick_type_symbol(a, nodes, radius)?;
    let zc = as_complex(z);
    let acc: Complex64 = table
        .entries
        .iter()
        .map(|e| {
            let xa = as_complex(nodes[e.x_index]);
            let yb = as_complex(nodes[e.y_index]);
            let k = (-(zc.conj() - xa.conj()) * (zc - yb) / h - (xa - yb).norm_sqr() / (2.0 * h)).exp();
            e.value * k
        })
        .sum();
    Ok(acc * 2.0 * cell_area * cell_area / (2.0 * PI * h).powi(2))
}

/// Both sides of the two coherent-state trace-norm inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentInequalityReport {
    pub h: f64,
    pub trace_norm: f64,
    /// `(2 pi h)^{-2} \int |<A Psi_X, Psi_Y> G((X - Y)/sqrt h)| dX dY`
    pub weighted_lhs: f64,
    /// `(2 pi)^{-1} |G|_{L1} |A|_1`
    pub weighted_rhs: f64,
    /// `(2 pi h)^{-2} \int |<A Psi_X, Psi_Y>| dX dY`
    pub overlap_rhs: f64,
    pub weighted_holds: bool,
    pub overlap_holds: bool,
}

/// Evaluates both inequalities with lattice quadrature. `g` is the weight
/// function and `g_l1` its `L1` norm.
pub fn coherent_inequalities<G>(
    a: &OperatorMatrix,
    g: G,
    g_l1: f64,
    nodes: &[(f64, f64)],
    cell_area: f64,
) -> Result<CoherentInequalityReport>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    let h = a.h();
    let c = coherent_matrix_elements(a, nodes)?;
    let sh = h.sqrt();
    let norm = cell_area * cell_area / (2.0 * PI * h).powi(2);
    let (mut weighted, mut plain) = (0.0, 0.0);
    for (ia, &(xa, ka)) in nodes.iter().enumerate() {
        for (ib, &(xb, kb)) in nodes.iter().enumerate() {
            let v = c[[ia, ib]].norm();
            plain += v;
            weighted += v * g((xa - xb) / sh, (ka - kb) / sh).abs();
        }
    }
    let trace_norm = a.trace_norm()?;
    let weighted_lhs = weighted * norm;
    let weighted_rhs = g_l1 * trace_norm / (2.0 * PI);
    let overlap_rhs = plain * norm;
    Ok(CoherentInequalityReport {
        h,
        trace_norm,
        weighted_lhs,
        weighted_rhs,
        overlap_rhs,
        weighted_holds: weighted_lhs <= weighted_rhs * (1.0 + 1e-3) + 1e-12,
        overlap_holds: trace_norm <= overlap_rhs * (1.0 + 1e-3) + 1e-12,
    })
}

/// Phase grid on which anti-Wick data and Weyl symbols at `h` are compared.
pub fn dual_phase_grid(x: SpaceGrid, h: f64) -> Result<PhaseGrid> {
    PhaseGrid::dual(x, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::weyl::{quantize_weyl, symbol_weyl};

    fn grid() -> SpaceGrid {
        SpaceGrid::new(8.0, 256).unwrap()
    }

    #[test]
    fn coherent_norm_and_overlap() {
        let g = grid();
        let h = 0.1;
        let a = CoherentIndex::new(0.0, 0.0, h).unwrap();
        let b = CoherentIndex::new(4.0 * h.sqrt(), 0.0, h).unwrap();
        let pa = coherent_vector(&a, &g).unwrap();
        let pb = coherent_vector(&b, &g).unwrap();
        assert!((inner(&pa, &pa, &g).re - 1.0).abs() < 1e-10);
        assert!((inner(&pa, &pb, &g).norm() - (-4.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn near_boundary_is_rejected() {
        let c = CoherentIndex::new(7.5, 0.0, 0.1).unwrap();
        assert!(matches!(coherent_vector(&c, &grid()), Err(Error::NearBoundary { .. })));
    }

    #[test]
    fn heat_smooth_gaussian() {
        let h = 0.2;
        let p = PhaseGrid::dual(grid(), h).unwrap();
        let a = 0.7;
        let g = SymbolField::from_real_fn(p, |x, xi| (-(x * x + xi * xi) / a).exp());
        let s = heat_smooth(&g, h).unwrap();
        let exact = SymbolField::from_real_fn(p, |x, xi| a / (a + h) * (-(x * x + xi * xi) / (a + h)).exp());
        assert!(s.sub(&exact).unwrap().sup() < 1e-10);
        let tiny = heat_smooth(&g, 1e-6).unwrap();
        assert!(tiny.sub(&g).unwrap().sup() < 1e-5);
    }

    #[test]
    fn antiwick_matches_heat_smoothing() {
        let h = 0.2;
        let p = PhaseGrid::dual(grid(), h).unwrap();
        let g = SymbolField::from_real_fn(p, |x, xi| (-(x - 0.5).powi(2) - 2.0 * (xi + 0.2).powi(2)).exp());
        let a = quantize_antiwick(&g, h).unwrap();
        assert!(a.is_hermitian() && a.is_positive());
        let sigma = symbol_weyl(&a).unwrap();
        let smooth = heat_smooth(&g, h).unwrap();
        assert!(sigma.sub(&smooth).unwrap().sup() < 1e-6);
        let tr = integrate(&g).unwrap().re / (2.0 * PI * h);
        assert!((a.trace().re - tr).abs() < 1e-6);
        assert!(a.min_eigenvalue().unwrap() > -1e-8);
    }

    #[test]
    fn wick_symbol_of_identity_and_bargmann_transform() {
        let h = 0.25;
        let g = SpaceGrid::new(8.0, 128).unwrap();
        let nodes = vec![(0.0, 0.0), (0.5, -0.25), (-0.4, 0.6)];
        let id = OperatorMatrix::identity(h, g).unwrap();
        let t = wick_type_symbol(&id, &nodes, default_wick_radius(h)).unwrap();
        assert!(t.entries.iter().all(|e| (e.value - 1.0).norm() < 1e-10));
        let p = PhaseGrid::dual(g, h).unwrap();
        let f = SymbolField::from_real_fn(p, |x, xi| (-(x - 0.3).powi(2) - (xi + 0.1).powi(2)).exp() * (1.0 + 0.2 * xi));
        let a = quantize_weyl(&f, h).unwrap();
        let t = wick_type_symbol(&a, &nodes, default_wick_radius(h)).unwrap();
        for e in &t.entries {
            let direct = wick_from_weyl(&f, h, nodes[e.x_index], nodes[e.y_index]);
            assert!((direct - e.value).norm() < 1e-5, "{} vs {}", direct, e.value);
        }
    }

    #[test]
    fn inverse_wick_transform_spot_check() {
        let h = 0.25;
        let g = SpaceGrid::new(8.0, 256).unwrap();
        let c = CoherentIndex::new(0.2, -0.1, h).unwrap();
        let pr = coherent_projector(&c, &g).unwrap();
        let step = 0.5 * h.sqrt();
        let nodes = phase_lattice(3.5, step);
        for z in [(0.2, -0.1), (0.5, 0.1)] {
            let v = weyl_from_wick(&pr, &nodes, step * step, 2.0 * default_wick_radius(h), z).unwrap();
            let exact = 2.0 * (-((z.0 - 0.2f64).powi(2) + (z.1 + 0.1f64).powi(2)) / h).exp();
            assert!((v - exact).norm() < 1e-4, "{v} vs {exact}");
        }
    }
}
