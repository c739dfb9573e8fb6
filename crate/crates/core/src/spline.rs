//! Periodic cubic B-spline interpolation on uniform grids.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::fft;
use crate::grid::{PhaseGrid, SpaceGrid};

fn prefilter_multiplier(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let w = (4.0 + 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) / 6.0;
            Complex64::new(1.0 / w, 0.0)
        })
        .collect()
}

#[inline]
fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let u = 1.0 - t;
    [
        u * u * u / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Cubic spline through real samples on a periodic [`SpaceGrid`].
#[derive(Clone, Debug)]
pub struct Spline1 {
    grid: SpaceGrid,
    coeffs: Vec<f64>,
}

impl Spline1 {
    pub fn new(grid: SpaceGrid, samples: &[f64]) -> Self {
        assert_eq!(samples.len(), grid.count());
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mult = prefilter_multiplier(buf.len());
        fft::fft_in_place(&mut buf);
        buf.iter_mut().zip(&mult).for_each(|(b, m)| *b *= m);
        fft::ifft_in_place(&mut buf);
        Self {
            grid,
            coeffs: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Value at `x`; zero outside `[-L, L)`.
    pub fn eval(&self, x: f64) -> f64 {
        let Some((i, t)) = self.grid.locate(x) else {
            return 0.0;
        };
        let n = self.coeffs.len();
        let w = weights(t);
        (0..4)
            .map(|a| w[a] * self.coeffs[wrap(i as isize + a as isize - 1, n)])
            .sum()
    }
}

/// Tensor-product cubic spline through complex samples on a [`PhaseGrid`].
#[derive(Clone, Debug)]
pub struct Spline2 {
    grid: PhaseGrid,
    coeffs: Array2<Complex64>,
}

impl Spline2 {
    pub fn new(grid: PhaseGrid, samples: &Array2<Complex64>) -> Self {
        assert_eq!(samples.dim(), grid.shape());
        let mut coeffs = samples.clone();
        fft::apply_multiplier(&mut coeffs, Axis(0), &prefilter_multiplier(grid.x.count()));
        fft::apply_multiplier(&mut coeffs, Axis(1), &prefilter_multiplier(grid.xi.count()));
        Self { grid, coeffs }
    }

    /// Value at `(x, xi)`; zero outside the box.
    pub fn eval(&self, x: f64, xi: f64) -> Complex64 {
        let (Some((i, s)), Some((k, t))) = (self.grid.x.locate(x), self.grid.xi.locate(xi)) else {
            return Complex64::new(0.0, 0.0);
        };
        let (m, n) = self.coeffs.dim();
        let wx = weights(s);
        let wk = weights(t);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let row = wrap(i as isize + a as isize - 1, m);
            let mut r = Complex64::new(0.0, 0.0);
            for b in 0..4 {
                r += self.coeffs[[row, wrap(k as isize + b as isize - 1, n)]] * wk[b];
            }
            acc += r * wx[a];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let g = SpaceGrid::new(4.0, 32).unwrap();
        let f: Vec<f64> = (0..32).map(|j| (-(g.node(j)).powi(2)).exp()).collect();
        let s = Spline1::new(g, &f);
        for j in 0..32 {
            assert!((s.eval(g.node(j)) - f[j]).abs() < 1e-12);
        }
        assert_eq!(s.eval(4.5), 0.0);
    }

    #[test]
    fn fourth_order_accuracy() {
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&m| {
                let g = SpaceGrid::new(6.0, m).unwrap();
                let f: Vec<f64> = (0..m).map(|j| (-(g.node(j)).powi(2)).exp()).collect();
                let s = Spline1::new(g, &f);
                (0..200)
                    .map(|i| {
                        let x = -3.0 + 0.0301 * i as f64;
                        (s.eval(x) - (-x * x).exp()).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 3.7, "rate {rate}");
    }

    #[test]
    fn tensor_spline_matches_nodes_and_smooth_function() {
        let x = SpaceGrid::new(6.0, 96).unwrap();
        let g = PhaseGrid::new(x, SpaceGrid::new(5.0, 80).unwrap());
        let f = |x: f64, k: f64| (-(x - 0.3).powi(2) - 0.5 * k * k).exp();
        let v = Array2::from_shape_fn(g.shape(), |(j, k)| Complex64::new(f(g.x.node(j), g.xi.node(k)), 0.0));
        let s = Spline2::new(g, &v);
        assert!((s.eval(g.x.node(40), g.xi.node(33)) - v[[40, 33]]).norm() < 1e-12);
        assert!((s.eval(0.123, -0.77).re - f(0.123, -0.77)).abs() < 1e-4);
    }
}
