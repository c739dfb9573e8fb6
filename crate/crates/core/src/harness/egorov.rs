//! Egorov comparison with `W = 0`: the conjugated quantization of `F`
//! against `F` pulled back along the classical flow.

use rayon::prelude::*;

use crate::classical::{grid_nodes, integrate_characteristics, transport_pullback, AnalyticForce};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::results::ResultTable;
use crate::numerics::{norm, NormKind};
use crate::quantum::conjugate_flow;
use crate::slope::{fit_loglog_slope, SlopeFit};
use crate::weyl::{quantize_weyl, symbol_weyl};

pub struct EgorovCell {
    pub h: f64,
    pub error: f64,
    /// `|| F ||_L1`, the scale of `error`
    pub reference: f64,
    pub jacobian_defect: f64,
}

/// `|| sigma(G_h(t, 0) Op F) - F o phi_{-t} ||_L1` at `t = t_end` with the
/// external potential only, `F` the configured initial Gaussian.
pub fn run_egorov_cell(cfg: &ExperimentConfig, h: f64) -> Result<EgorovCell> {
    let pot = cfg.potential.without_interaction();
    let grid = cfg.dual_grid(h)?;
    let f = cfg.initial.field(grid);
    let (t, dt) = (cfg.run.t_end, cfg.run.dt);
    let (quantum, classical) = rayon::join(
        || -> Result<_> {
            let a = quantize_weyl(&f, h)?;
            symbol_weyl(&conjugate_flow(&a, &pot, h, t, 0.0, dt)?)
        },
        || -> Result<_> {
            let substeps = ((t / dt).round() as usize).max(1);
            let bounds = (grid.x.half_width(), grid.xi.half_width());
            let flow = integrate_characteristics(&AnalyticForce(&pot), &grid_nodes(&grid), &[0.0, t], substeps, Some(bounds))?;
            Ok((transport_pullback(&f, &flow, t)?, flow.max_jacobian_defect()))
        },
    );
    let (pulled, jacobian_defect) = classical?;
    let error = norm(&quantum?.sub(&pulled)?, NormKind::L1)?;
    Ok(EgorovCell {
        h,
        error,
        reference: norm(&f, NormKind::L1)?,
        jacobian_defect,
    })
}

pub fn run_egorov_study(cfg: &ExperimentConfig) -> Result<(ResultTable, Vec<EgorovCell>, Option<SlopeFit>)> {
    cfg.validate()?;
    let cells: Vec<EgorovCell> = cfg.run.h.par_iter().map(|&h| run_egorov_cell(cfg, h)).collect::<Result<_>>()?;
    let mut table = ResultTable::new();
    let t = cfg.run.t_end;
    for c in &cells {
        table.push("egorov", c.h, t, "egorov_l1_error", c.error);
        table.push("egorov", c.h, t, "jacobian_defect", c.jacobian_defect);
    }
    let fit = fit_loglog_slope(&cells.iter().map(|c| (c.h, c.error)).collect::<Vec<_>>()).ok();
    if let Some(s) = &fit {
        table.push("egorov", f64::NAN, t, "egorov_slope", s.slope);
    }
    Ok((table, cells, fit))
}
