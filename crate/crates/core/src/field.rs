use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::PhaseGrid;

/// Samples of a phase-space function on a [`PhaseGrid`]; `values[[j, k]]`
/// is the value at `(x_j, xi_k)`.
#[derive(Clone, Debug)]
pub struct SymbolField {
    grid: PhaseGrid,
    values: Array2<Complex64>,
}

impl SymbolField {
    pub fn new(grid: PhaseGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::GridMismatch(format!(
                "value array {:?} does not match grid shape {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: PhaseGrid, values: Array2<f64>) -> Result<Self> {
        Self::new(grid, values.mapv(|v| Complex64::new(v, 0.0)))
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let (m, n) = grid.shape();
        let mut values = Array2::zeros((m, n));
        values
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(j, mut row)| {
                let x = grid.x.node(j);
                for (k, v) in row.iter_mut().enumerate() {
                    *v = f(x, grid.xi.node(k));
                }
            });
        Self { grid, values }
    }

    pub fn from_real_fn<F>(grid: PhaseGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        Self::from_fn(grid, |x, xi| Complex64::new(f(x, xi), 0.0))
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn real_part(&self) -> Array2<f64> {
        self.values.mapv(|c| c.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    /// Whether the imaginary part vanishes to within `1e-12` of the largest value.
    pub fn is_real(&self) -> bool {
        self.max_imag() <= 1e-12 * self.sup().max(1.0)
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, c| m.min(c.re))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(f),
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    pub fn add(&self, other: &SymbolField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymbolField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SymbolField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: Complex64, other: &SymbolField) -> Result<Self> {
        self.zip_with(other, |a, b| a + s * b)
    }

    fn zip_with(
        &self,
        other: &SymbolField,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut values = self.values.clone();
        Zip::from(&mut values)
            .and(&other.values)
            .for_each(|a, &b| *a = f(*a, b));
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Spectral partial derivative `d_x^a d_xi^b`.
    pub fn derivative(&self, x_order: u32, xi_order: u32) -> Self {
        let mut values = self.values.clone();
        if x_order > 0 {
            let mult = fft::derivative_multiplier(&self.grid.x.wavenumbers(), x_order);
            fft::apply_multiplier(&mut values, Axis(0), &mult);
        }
        if xi_order > 0 {
            let mult = fft::derivative_multiplier(&self.grid.xi.wavenumbers(), xi_order);
            fft::apply_multiplier(&mut values, Axis(1), &mult);
        }
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Largest modulus over the outermost ring of grid cells.
    pub fn boundary_sup(&self) -> f64 {
        let (m, n) = self.grid.shape();
        let mut s: f64 = 0.0;
        for j in 0..m {
            s = s.max(self.values[[j, 0]].norm()).max(self.values[[j, n - 1]].norm());
        }
        for k in 0..n {
            s = s.max(self.values[[0, k]].norm()).max(self.values[[m - 1, k]].norm());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;

    #[test]
    fn spectral_derivative_of_gaussian() {
        let x = SpaceGrid::new(8.0, 128).unwrap();
        let g = PhaseGrid::new(x, SpaceGrid::new(8.0, 128).unwrap());
        let f = SymbolField::from_real_fn(g, |x, xi| (-x * x - 0.5 * xi * xi).exp());
        let d = f.derivative(1, 2);
        let exact = SymbolField::from_real_fn(g, |x, xi| {
            let e = (-x * x - 0.5 * xi * xi).exp();
            -2.0 * x * (xi * xi - 1.0) * e
        });
        let err = d.sub(&exact).unwrap().sup();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = PhaseGrid::new(SpaceGrid::new(8.0, 16).unwrap(), SpaceGrid::new(8.0, 16).unwrap());
        let b = PhaseGrid::new(SpaceGrid::new(4.0, 16).unwrap(), SpaceGrid::new(8.0, 16).unwrap());
        assert!(SymbolField::zeros(a).add(&SymbolField::zeros(b)).is_err());
        assert!(SymbolField::new(a, Array2::zeros((16, 8))).is_err());
    }
}
