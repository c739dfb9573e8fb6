//! Quadrature, norms and the discrete h-Fourier transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SymbolField;
use crate::grid::{check_h, SpaceGrid};

/// Compensated (Neumaier) accumulator. Summation order is the iteration
/// order, so results do not depend on thread scheduling.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

fn ensure_finite(field: &SymbolField) -> Result<()> {
    if field.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("field contains non-finite samples"))
    }
}

/// Rectangle-rule integral over the phase grid.
pub fn integrate(field: &SymbolField) -> Result<Complex64> {
    ensure_finite(field)?;
    let v = field.values();
    let re = neumaier_sum(v.iter().map(|c| c.re));
    let im = neumaier_sum(v.iter().map(|c| c.im));
    Ok(Complex64::new(re, im) * field.grid().cell_area())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    Sup,
}

pub fn norm(field: &SymbolField, kind: NormKind) -> Result<f64> {
    ensure_finite(field)?;
    let v = field.values();
    let da = field.grid().cell_area();
    Ok(match kind {
        NormKind::L1 => neumaier_sum(v.iter().map(|c| c.norm())) * da,
        NormKind::L2 => (neumaier_sum(v.iter().map(|c| c.norm_sqr())) * da).sqrt(),
        NormKind::Sup => field.sup(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Discrete version of `(2 pi h)^{-1/2} \int f(x) e^{-i x xi / h} dx` from
/// samples on `grid` to samples on `grid.dual(h)` (and back for
/// [`Direction::Inverse`]). Unitary for the `dx`/`dxi`-weighted inner products.
pub fn h_fourier(f: &[Complex64], grid: &SpaceGrid, h: f64, direction: Direction) -> Result<Vec<Complex64>> {
    check_h(h)?;
    let m = grid.count();
    if f.len() != m {
        return Err(Error::GridMismatch(format!(
            "sample length {} does not match grid size {m}",
            f.len()
        )));
    }
    let dual = grid.dual(h)?;
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let half = m / 2;
    let norm = (2.0 * PI * h).powf(-0.5);
    let mut buf: Vec<Complex64> = match direction {
        Direction::Forward => f.iter().enumerate().map(|(j, &v)| v * sign(j)).collect(),
        Direction::Inverse => f.iter().enumerate().map(|(k, &v)| v * sign(k + half)).collect(),
    };
    match direction {
        Direction::Forward => {
            fft::fft_in_place(&mut buf);
            let s = norm * grid.spacing();
            for (k, b) in buf.iter_mut().enumerate() {
                *b *= s * sign(k + half);
            }
        }
        Direction::Inverse => {
            fft::ifft_in_place(&mut buf);
            let s = norm * dual.spacing() * m as f64;
            for (j, b) in buf.iter_mut().enumerate() {
                *b *= s * sign(j);
            }
        }
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseGrid;
    use approx::assert_abs_diff_eq;

    fn box_grid(l: f64, m: usize) -> PhaseGrid {
        let g = SpaceGrid::new(l, m).unwrap();
        PhaseGrid::new(g, g)
    }

    #[test]
    fn constant_integrates_to_area() {
        let g = box_grid(8.0, 64);
        let f = SymbolField::from_real_fn(g, |_, _| 1.0);
        assert_abs_diff_eq!(integrate(&f).unwrap().re, 256.0, epsilon = 1e-10);
        assert_eq!(norm(&f, NormKind::Sup).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_integral_is_pi() {
        let g = box_grid(8.0, 128);
        let f = SymbolField::from_real_fn(g, |x, xi| (-x * x - xi * xi).exp());
        assert_abs_diff_eq!(integrate(&f).unwrap().re, PI, epsilon = 1e-10);
        let odd = SymbolField::from_real_fn(g, |x, xi| x * (-x * x - xi * xi).exp());
        assert!(integrate(&odd).unwrap().norm() < 1e-12);
    }

    #[test]
    fn normalized_gaussian_l1() {
        let h = 0.1;
        let g = box_grid(8.0, 256);
        let f = SymbolField::from_real_fn(g, |x, xi| (-(x * x + xi * xi) / h).exp() / (PI * h));
        assert_abs_diff_eq!(norm(&f, NormKind::L1).unwrap(), 1.0, epsilon = 1e-10);
        let z = SymbolField::zeros(g);
        for k in [NormKind::L1, NormKind::L2, NormKind::Sup] {
            assert_eq!(norm(&z, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        let g = box_grid(1.0, 4);
        let f = SymbolField::from_real_fn(g, |x, _| if x == 0.0 { f64::NAN } else { 0.0 });
        assert!(integrate(&f).is_err());
        assert!(norm(&f, NormKind::L1).is_err());
    }

    #[test]
    fn plane_wave_maps_to_spike() {
        let g = SpaceGrid::new(8.0, 64).unwrap();
        let h = 0.3;
        let dual = g.dual(h).unwrap();
        let k0 = 40;
        let xi0 = dual.node(k0);
        let f: Vec<Complex64> = (0..64)
            .map(|j| Complex64::from_polar(1.0, g.node(j) * xi0 / h))
            .collect();
        let fh = h_fourier(&f, &g, h, Direction::Forward).unwrap();
        for (k, v) in fh.iter().enumerate() {
            if k == k0 {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-10, "{k} {v}");
            }
        }
    }

    #[test]
    fn gaussian_pair() {
        let g = SpaceGrid::new(8.0, 256).unwrap();
        let h = 0.2;
        let f: Vec<Complex64> = (0..256)
            .map(|j| Complex64::new((-g.node(j).powi(2) / (2.0 * h)).exp(), 0.0))
            .collect();
        let fh = h_fourier(&f, &g, h, Direction::Forward).unwrap();
        let dual = g.dual(h).unwrap();
        for (k, v) in fh.iter().enumerate() {
            let xi = dual.node(k);
            let exact = (-xi * xi / (2.0 * h)).exp();
            assert!((v - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let g = SpaceGrid::new(8.0, 16).unwrap();
        assert!(h_fourier(&[Complex64::new(0.0, 0.0); 8], &g, 0.1, Direction::Forward).is_err());
    }
}
