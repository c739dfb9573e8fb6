//! The h-ladder convergence study: TDHF against the order-N expansion.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coherent::quantize_antiwick;
use crate::error::{Error, Result};
use crate::expansion::{compare, solve_cascade, ComparisonReport, ExpansionBundle};
use crate::harness::config::ExperimentConfig;
use crate::harness::results::ResultTable;
use crate::operator::OperatorMatrix;
use crate::quantum::{propagate_tdhf, QuantumTrajectory};
use crate::slope::{fit_loglog_slope, SlopeFit};

/// `rho_h(0) = 2 pi h Op^AW(G)`, rescaled to unit trace.
pub fn initial_state(cfg: &ExperimentConfig, h: f64, points: usize) -> Result<OperatorMatrix> {
    let mut c = cfg.clone();
    c.grid.points = points;
    let grid = c.dual_grid(h)?;
    let g = cfg.initial.field(grid);
    let rho = quantize_antiwick(&g, h)?;
    let tr = rho.trace().re * 2.0 * std::f64::consts::PI * h;
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "initial datum loses mass {:e} at h = {h}: box too small for the Gaussian",
            tr - 1.0
        )));
    }
    let mut out = rho.scale(Complex64::new(2.0 * std::f64::consts::PI * h / tr, 0.0));
    out.set_flags(true, true);
    Ok(out)
}

/// One `(h, M)` cell of the study.
pub struct ConvergenceCell {
    pub h: f64,
    pub points: usize,
    pub quantum: QuantumTrajectory,
    pub bundle: ExpansionBundle,
    pub report: ComparisonReport,
    pub seconds: f64,
}

pub fn run_cell(cfg: &ExperimentConfig, h: f64, points: usize) -> Result<ConvergenceCell> {
    let start = Instant::now();
    let mut c = cfg.clone();
    c.grid.points = points;
    let grid = c.dual_grid(h)?;
    let rho0 = initial_state(cfg, h, points)?;
    let f_h = cfg.initial.smoothed(grid, h)?;
    let r = &cfg.run;
    let (quantum, bundle) = rayon::join(
        || propagate_tdhf(&rho0, &cfg.potential, h, r.t_end, r.dt, r.snapshot_every),
        || solve_cascade(&f_h, &cfg.potential, r.order, r.t_end, r.dt, r.snapshot_every),
    );
    let (quantum, bundle) = (quantum?, bundle?);
    let report = compare(&quantum, &bundle)?;
    Ok(ConvergenceCell {
        h,
        points,
        quantum,
        bundle,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Cells for every `h` of the ladder at `points`, with rows appended under
/// `experiment`.
pub fn run_ladder(cfg: &ExperimentConfig, points: usize) -> Result<Vec<ConvergenceCell>> {
    cfg.run
        .h
        .par_iter()
        .map(|&h| run_cell(cfg, h, points).map_err(|e| annotate(e, h)))
        .collect()
}

fn annotate(e: Error, h: f64) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("h = {h}: {m}")),
        other => other,
    }
}

pub struct LadderFit {
    pub t: f64,
    pub symbol: Option<SlopeFit>,
    pub trace: Option<SlopeFit>,
}

pub fn fit_ladder(cells: &[ConvergenceCell], t: f64) -> LadderFit {
    let pick = |f: fn(&crate::expansion::ComparisonEntry) -> f64| -> Vec<(f64, f64)> {
        cells.iter().filter_map(|c| c.report.at(t).map(|e| (c.h, f(e)))).collect()
    };
    LadderFit {
        t,
        symbol: fit_loglog_slope(&pick(|e| e.symbol_error)).ok(),
        trace: fit_loglog_slope(&pick(|e| e.trace_error)).ok(),
    }
}

pub fn cell_rows(table: &mut ResultTable, experiment: &str, cells: &[ConvergenceCell]) {
    for c in cells {
        for e in &c.report.entries {
            table.push(experiment, c.h, e.t, "symbol_l1_error", e.symbol_error);
            table.push(experiment, c.h, e.t, "trace_norm_error", e.trace_error);
        }
        for d in &c.quantum.diagnostics {
            table.push(experiment, c.h, d.time, "trace_defect", (d.trace - 1.0).abs());
            table.push(experiment, c.h, d.time, "min_eigenvalue", d.min_eigenvalue);
            table.push(experiment, c.h, d.time, "symbol_l1", d.symbol_l1);
        }
        if c.bundle.order > 1 {
            for (k, u) in c.bundle.fields[1].iter().enumerate() {
                table.push(experiment, c.h, c.bundle.times[k], "u1_sup", u.sup());
            }
        }
        table.push(experiment, c.h, f64::NAN, "runtime_s", c.seconds);
    }
}

pub fn fit_rows(table: &mut ResultTable, experiment: &str, fit: &LadderFit) {
    if let Some(s) = &fit.symbol {
        table.push(experiment, f64::NAN, fit.t, "symbol_l1_slope", s.slope);
        table.push(experiment, f64::NAN, fit.t, "symbol_l1_constant", s.constant());
    }
    if let Some(s) = &fit.trace {
        table.push(experiment, f64::NAN, fit.t, "trace_norm_slope", s.slope);
        table.push(experiment, f64::NAN, fit.t, "trace_norm_constant", s.constant());
    }
}

/// Errors at `t_end` for each `h`, with slopes when the ladder has at least
/// three values.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<(ResultTable, Vec<ConvergenceCell>, LadderFit)> {
    cfg.validate()?;
    let cells = run_ladder(cfg, cfg.grid.points)?;
    let mut table = ResultTable::new();
    cell_rows(&mut table, "converge", &cells);
    let fit = fit_ladder(&cells, cfg.run.t_end);
    fit_rows(&mut table, "converge", &fit);
    Ok((table, cells, fit))
}
