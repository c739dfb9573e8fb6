//! Experiment configuration, read from a sectioned `key = value` (TOML) file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coherent::heat_smooth;
use crate::error::{Error, Result};
use crate::expansion::MAX_CASCADE_ORDER;
use crate::field::SymbolField;
use crate::grid::{PhaseGrid, SpaceGrid};
use crate::potential::{PotentialSpec, PotentialTerm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// position box is `[-half_width, half_width)`
    pub half_width: f64,
    pub points: usize,
    /// momentum box for classical-only runs; quantum runs use the h-dual axis
    #[serde(default)]
    pub xi_half_width: Option<f64>,
    #[serde(default)]
    pub xi_points: Option<usize>,
}

/// `G(x, xi) = exp(-(x - x0)^2 / a - (xi - xi0)^2 / b) / (pi sqrt(a b))`,
/// a unit-mass phase-space Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x0: f64,
    pub xi0: f64,
    pub a: f64,
    pub b: f64,
}

impl InitialConfig {
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        (-(x - self.x0).powi(2) / self.a - (xi - self.xi0).powi(2) / self.b).exp()
            / (std::f64::consts::PI * (self.a * self.b).sqrt())
    }

    pub fn field(&self, grid: PhaseGrid) -> SymbolField {
        SymbolField::from_real_fn(grid, |x, xi| self.eval(x, xi))
    }

    /// `F_h = e^{(h/4) Delta} G`, the Weyl symbol of `Op^AW(G)`.
    pub fn smoothed(&self, grid: PhaseGrid, h: f64) -> Result<SymbolField> {
        heat_smooth(&self.field(grid), h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// strictly decreasing ladder in (0, 1]
    pub h: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_every: f64,
    /// expansion order N
    pub order: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    pub initial: InitialConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// also write MSF1 rasters of final fields
    #[serde(default)]
    pub rasters: bool,
}

pub(crate) fn check_ladder(h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::Config("h ladder is empty".into()));
    }
    for &v in h {
        if !(v.is_finite() && v > 0.0 && v <= 1.0) {
            return Err(Error::Config(format!("h = {v} is outside (0, 1]")));
        }
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("h ladder {h:?} must be strictly decreasing")));
    }
    Ok(())
}

impl Default for ExperimentConfig {
    /// The convergence setup: Gaussian bumps of amplitude 0.5 for `V` and
    /// `W`, unit Gaussian data at `x = -1`, ladder {0.4, 0.2, 0.1, 0.05}.
    fn default() -> Self {
        let bump = PotentialTerm::Gaussian {
            amplitude: 0.5,
            center: 0.0,
            width: 2.0,
        };
        Self {
            grid: GridConfig {
                half_width: 8.0,
                points: 512,
                xi_half_width: None,
                xi_points: None,
            },
            potential: PotentialSpec {
                external: vec![bump],
                interaction: vec![bump],
            },
            initial: InitialConfig {
                x0: -1.0,
                xi0: 0.0,
                a: 1.0,
                b: 1.0,
            },
            run: RunConfig {
                h: vec![0.4, 0.2, 0.1, 0.05],
                t_end: 1.0,
                dt: 0.01,
                snapshot_every: 0.5,
                order: 1,
                seed: 20240611,
            },
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.half_width.is_finite() && g.half_width > 0.0) || g.points < 8 || g.points % 2 != 0 {
            return Err(Error::Config(format!(
                "grid needs half_width > 0 and an even point count >= 8, got {} / {}",
                g.half_width, g.points
            )));
        }
        match (g.xi_half_width, g.xi_points) {
            (None, None) => {}
            (Some(w), Some(n)) if w.is_finite() && w > 0.0 && n >= 8 && n % 2 == 0 => {}
            _ => return Err(Error::Config("xi_half_width and xi_points must be given together and be valid".into())),
        }
        PotentialSpec::new(self.potential.external.clone(), self.potential.interaction.clone())
            .map_err(|e| Error::Config(e.to_string()))?;
        let i = &self.initial;
        if !(i.a > 0.0 && i.b > 0.0 && i.x0.is_finite() && i.xi0.is_finite()) {
            return Err(Error::Config("initial Gaussian needs a, b > 0".into()));
        }
        let r = &self.run;
        check_ladder(&r.h)?;
        if !(r.dt.is_finite() && r.dt > 0.0) || !(r.t_end.is_finite() && r.t_end >= 0.0) {
            return Err(Error::Config("run needs dt > 0 and t_end >= 0".into()));
        }
        if !(r.snapshot_every.is_finite() && r.snapshot_every > 0.0) {
            return Err(Error::Config("snapshot_every must be positive".into()));
        }
        if r.order == 0 || r.order > MAX_CASCADE_ORDER {
            return Err(Error::Config(format!("order must be in 1..={MAX_CASCADE_ORDER}, got {}", r.order)));
        }
        Ok(())
    }

    pub fn space_grid(&self) -> Result<SpaceGrid> {
        SpaceGrid::new(self.grid.half_width, self.grid.points)
    }

    /// Phase grid whose momentum axis is dual to `x` at this `h`.
    pub fn dual_grid(&self, h: f64) -> Result<PhaseGrid> {
        PhaseGrid::dual(self.space_grid()?, h)
    }

    /// Phase grid for classical-only runs.
    pub fn classical_grid(&self, h: f64) -> Result<PhaseGrid> {
        match (self.grid.xi_half_width, self.grid.xi_points) {
            (Some(w), Some(n)) => Ok(PhaseGrid::new(self.space_grid()?, SpaceGrid::new(w, n)?)),
            _ => self.dual_grid(h),
        }
    }

    pub fn with_ladder(mut self, h: Vec<f64>) -> Result<Self> {
        check_ladder(&h)?;
        self.run.h = h;
        Ok(self)
    }
}

/// Commented template of the default configuration.
pub fn config_template() -> String {
    let body = ExperimentConfig::default().to_toml();
    format!(
        "# Experiment configuration.\n\
         # [grid]       half_width L and even point count M of the x-box [-L, L).\n\
         #              Quantum runs use the h-dual momentum axis; xi_half_width and\n\
         #              xi_points (together) set the momentum box of classical runs.\n\
         # [potential]  external (V) and interaction (W) terms, each\n\
         #              {{ kind = \"gaussian\", amplitude, center, width }}  a exp(-(x-c)^2/w)\n\
         #              {{ kind = \"cosine\", amplitude, wavenumber, phase }}\n\
         # [initial]    G = exp(-(x-x0)^2/a - (xi-xi0)^2/b) / (pi sqrt(ab)); rho(0) = 2 pi h Op^AW(G)\n\
         # [run]        h ladder (strictly decreasing, in (0, 1]), t_end, dt, snapshot_every,\n\
         #              expansion order (1..=3) and seed for sampled test data.\n\
         # [output]     dir (overridden by --out) and rasters = true for MSF1 field dumps.\n\n{body}"
    )
}
