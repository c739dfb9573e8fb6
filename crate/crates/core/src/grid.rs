//! Uniform periodic grids in position space and phase space.

use std::f64::consts::PI;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[-L, L)` with an even number of nodes `x_j = -L + j dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    half_width: f64,
    count: usize,
}

impl SpaceGrid {
    pub fn new(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if count < 2 || count % 2 != 0 {
            return Err(Error::invalid(format!(
                "grid point count must be even and >= 2, got {count}"
            )));
        }
        Ok(Self { half_width, count })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.count as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.count, |j| self.node(j))
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let m = self.count as i64;
        let scale = 2.0 * PI / (self.count as f64 * self.spacing());
        (0..m)
            .map(|k| {
                let k = if k < m / 2 { k } else { k - m };
                k as f64 * scale
            })
            .collect()
    }

    /// The momentum grid `xi_k = (pi h / L) k`, `k = -M/2 .. M/2 - 1`, whose
    /// nodes are the h-Fourier dual of this grid.
    pub fn dual(&self, h: f64) -> Result<SpaceGrid> {
        check_h(h)?;
        SpaceGrid::new(PI * h * self.count as f64 / (2.0 * self.half_width), self.count)
    }

    pub fn approx_eq(&self, other: &SpaceGrid) -> bool {
        self.count == other.count
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width.max(1.0)
    }

    /// Index of the cell containing `x` together with the fractional offset,
    /// or `None` when `x` is outside `[-L, L)`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x + self.half_width) / self.spacing();
        if !(s >= 0.0 && s < self.count as f64) {
            return None;
        }
        let j = s.floor() as usize;
        Some((j, s - j as f64))
    }
}

pub(crate) fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("semiclassical parameter must be positive, got {h}")))
    }
}

/// Product grid over `(x, xi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x: SpaceGrid,
    pub xi: SpaceGrid,
}

impl PhaseGrid {
    pub fn new(x: SpaceGrid, xi: SpaceGrid) -> Self {
        Self { x, xi }
    }

    /// Phase grid whose momentum axis is the h-dual of `x`.
    pub fn dual(x: SpaceGrid, h: f64) -> Result<Self> {
        Ok(Self { x, xi: x.dual(h)? })
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.xi.spacing()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.count(), self.xi.count())
    }

    pub fn area(&self) -> f64 {
        4.0 * self.x.half_width() * self.xi.half_width()
    }

    pub fn is_dual_for(&self, h: f64) -> bool {
        self.x.dual(h).map(|d| d.approx_eq(&self.xi)).unwrap_or(false)
    }

    pub fn approx_eq(&self, other: &PhaseGrid) -> bool {
        self.x.approx_eq(&other.x) && self.xi.approx_eq(&other.xi)
    }

    pub(crate) fn ensure_same(&self, other: &PhaseGrid) -> Result<()> {
        if self.approx_eq(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    pub(crate) fn ensure_dual(&self, h: f64) -> Result<()> {
        if self.is_dual_for(h) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "momentum axis (half-width {}, {} points) is not the h-dual of the position axis for h = {h}",
                self.xi.half_width(),
                self.xi.count()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform() {
        let g = SpaceGrid::new(8.0, 256).unwrap();
        assert_eq!(g.spacing() * 256.0, 16.0);
        let n = g.nodes();
        assert_eq!(n[0], -8.0);
        for w in n.as_slice().unwrap().windows(2) {
            assert!((w[1] - w[0] - g.spacing()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_odd_counts_and_bad_widths() {
        assert!(SpaceGrid::new(8.0, 255).is_err());
        assert!(SpaceGrid::new(-1.0, 256).is_err());
        assert!(SpaceGrid::new(f64::NAN, 256).is_err());
    }

    #[test]
    fn dual_grid_spacing() {
        let g = SpaceGrid::new(8.0, 256).unwrap();
        let d = g.dual(0.2).unwrap();
        assert!((d.spacing() - PI * 0.2 / 8.0).abs() < 1e-15);
        assert!((d.node(128)).abs() < 1e-12);
        let p = PhaseGrid::dual(g, 0.2).unwrap();
        assert!(p.is_dual_for(0.2));
        assert!(!p.is_dual_for(0.1));
        // dx * dxi = 2 pi h / M
        assert!((p.cell_area() - 2.0 * PI * 0.2 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn locate_cells() {
        let g = SpaceGrid::new(1.0, 4).unwrap();
        assert_eq!(g.locate(-1.0), Some((0, 0.0)));
        let (j, f) = g.locate(0.25).unwrap();
        assert_eq!(j, 2);
        assert!((f - 0.5).abs() < 1e-14);
        assert!(g.locate(1.0).is_none());
    }
}
