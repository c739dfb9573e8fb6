//! Smooth bounded potentials built from Gaussian and cosine terms, with
//! analytic derivatives of every order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialTerm {
    /// `amplitude * exp(-(x - center)^2 / width)`
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `amplitude * cos(wavenumber * x + phase)`
    Cosine { amplitude: f64, wavenumber: f64, phase: f64 },
}

/// Physicists' Hermite polynomial `H_n(s)`.
fn hermite(n: u32, s: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * s);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * s * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

impl PotentialTerm {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PotentialTerm::Gaussian { amplitude, center, width } => {
                amplitude.is_finite() && center.is_finite() && width.is_finite() && width > 0.0
            }
            PotentialTerm::Cosine { amplitude, wavenumber, phase } => {
                amplitude.is_finite() && wavenumber.is_finite() && phase.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid potential term {self:?}")))
        }
    }

    /// `order`-th derivative at `x`.
    pub fn eval(&self, x: f64, order: u32) -> f64 {
        match *self {
            PotentialTerm::Gaussian { amplitude, center, width } => {
                let r = width.sqrt();
                let s = (x - center) / r;
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                amplitude * sign * hermite(order, s) * (-s * s).exp() / r.powi(order as i32)
            }
            PotentialTerm::Cosine { amplitude, wavenumber, phase } => {
                let arg = wavenumber * x + phase + order as f64 * std::f64::consts::FRAC_PI_2;
                amplitude * wavenumber.powi(order as i32) * arg.cos()
            }
        }
    }
}

/// External potential `V` and pair interaction `W`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub external: Vec<PotentialTerm>,
    #[serde(default)]
    pub interaction: Vec<PotentialTerm>,
}

impl PotentialSpec {
    pub fn new(external: Vec<PotentialTerm>, interaction: Vec<PotentialTerm>) -> Result<Self> {
        external.iter().chain(&interaction).try_for_each(|t| t.validate())?;
        Ok(Self { external, interaction })
    }

    pub fn free() -> Self {
        Self::default()
    }

    /// Single Gaussian bumps `a e^{-x^2/w}` for both `V` and `W`; either
    /// amplitude may be zero.
    pub fn gaussian_bumps(v_amplitude: f64, w_amplitude: f64, width: f64) -> Result<Self> {
        let bump = |a: f64| {
            if a == 0.0 {
                vec![]
            } else {
                vec![PotentialTerm::Gaussian { amplitude: a, center: 0.0, width }]
            }
        };
        Self::new(bump(v_amplitude), bump(w_amplitude))
    }

    pub fn interaction_is_zero(&self) -> bool {
        self.interaction.iter().all(|t| match *t {
            PotentialTerm::Gaussian { amplitude, .. } | PotentialTerm::Cosine { amplitude, .. } => amplitude == 0.0,
        })
    }

    pub fn without_interaction(&self) -> Self {
        Self {
            external: self.external.clone(),
            interaction: vec![],
        }
    }

    pub fn external(&self, x: f64, order: u32) -> f64 {
        self.external.iter().map(|t| t.eval(x, order)).sum()
    }

    pub fn interaction(&self, x: f64, order: u32) -> f64 {
        self.interaction.iter().map(|t| t.eval(x, order)).sum()
    }

    pub fn external_on(&self, grid: &SpaceGrid, order: u32) -> Vec<f64> {
        (0..grid.count()).map(|j| self.external(grid.node(j), order)).collect()
    }

    /// `(d^order W * n)(x_i) = sum_j W^{(order)}(x_i - x_j) n_j dx` by direct
    /// summation (`W` is not periodic on the box).
    pub fn convolve(&self, grid: &SpaceGrid, density: &[f64], order: u32) -> Vec<f64> {
        let m = grid.count();
        if self.interaction_is_zero() {
            return vec![0.0; m];
        }
        let dx = grid.spacing();
        // kernel[d + m - 1] = W^{(order)}(d dx)
        let kernel: Vec<f64> = (0..2 * m - 1)
            .map(|d| self.interaction((d as f64 - (m as f64 - 1.0)) * dx, order))
            .collect();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| kernel[i + m - 1 - j] * density[j])
                    .sum::<f64>()
                    * dx
            })
            .collect()
    }

    /// `d^order (V + W * n)` on the grid.
    pub fn mean_field(&self, grid: &SpaceGrid, density: &[f64], order: u32) -> Vec<f64> {
        let conv = self.convolve(grid, density, order);
        (0..grid.count())
            .map(|j| self.external(grid.node(j), order) + conv[j])
            .collect()
    }

    /// `sup |d^a V|` and `sup |d^a W|` for `a = 0..=max_order`, estimated on
    /// a fine sampling of `[-span, span]`.
    pub fn derivative_bounds(&self, max_order: u32, span: f64) -> Vec<(u32, f64, f64)> {
        let n = 4001;
        (0..=max_order)
            .map(|a| {
                let (mut sv, mut sw) = (0.0f64, 0.0f64);
                for i in 0..n {
                    let x = -span + 2.0 * span * i as f64 / (n - 1) as f64;
                    sv = sv.max(self.external(x, a).abs());
                    sw = sw.max(self.interaction(x, a).abs());
                }
                (a, sv, sw)
            })
            .collect()
    }
}

/// Time-dependent external potential for the linear (non-self-consistent)
/// propagators.
pub trait TimePotential: Sync {
    fn eval(&self, x: f64, t: f64, order: u32) -> f64;
}

impl TimePotential for PotentialSpec {
    fn eval(&self, x: f64, _t: f64, order: u32) -> f64 {
        self.external(x, order)
    }
}

/// `V(x) (1 + depth sin(omega t))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulatedPotential {
    pub base: PotentialSpec,
    pub depth: f64,
    pub omega: f64,
}

impl TimePotential for ModulatedPotential {
    fn eval(&self, x: f64, t: f64, order: u32) -> f64 {
        self.base.external(x, order) * (1.0 + self.depth * (self.omega * t).sin())
    }
}
