//! Named check suites. Each acceptance criterion is one [`Outcome`] made of
//! threshold [`Check`]s plus the raw rows behind them.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classical::{
    grid_nodes, integrate_characteristics, solve_vlasov, AnalyticForce, SampledForcePath, NEGATIVITY_FLOOR,
};
use crate::coherent::{
    coherent_inequalities, coherent_projector, coherent_vector, default_wick_radius, heat_smooth,
    phase_lattice, quantize_antiwick, resolution_of_identity_check, wick_from_weyl, wick_type_symbol,
    CoherentIndex,
};
use crate::error::{Error, Result};
use crate::expansion::{compare, solve_cascade};
use crate::field::SymbolField;
use crate::grid::{PhaseGrid, SpaceGrid};
use crate::harness::config::ExperimentConfig;
use crate::harness::convergence::{cell_rows, fit_ladder, fit_rows, initial_state, run_ladder};
use crate::harness::egorov::run_egorov_study;
use crate::harness::results::ResultTable;
use crate::moyal::{ck_term, expand, remainder_operator_norms};
use crate::numerics::{integrate, norm, NormKind};
use crate::operator::inner;
use crate::potential::PotentialSpec;
use crate::quantum::propagate_tdhf;
use crate::slope::fit_loglog_slope;
use crate::weyl::{quantize_weyl, quantize_weyl_fn, rondeaux_seminorms, symbol_weyl, trace_product_check};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within { target: f64, tol: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        v.is_finite()
            && match *self {
                Bound::AtMost(t) => v <= t,
                Bound::AtLeast(t) => v >= t,
                Bound::Within { target, tol } => (v - target).abs() <= tol,
            }
    }

    fn threshold(&self) -> f64 {
        match *self {
            Bound::AtMost(t) | Bound::AtLeast(t) => t,
            Bound::Within { tol, .. } => tol,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Bound::AtMost(t) => write!(f, "<= {t:e}"),
            Bound::AtLeast(t) => write!(f, ">= {t}"),
            Bound::Within { target, tol } => write!(f, "in {target} +- {tol}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    /// `NaN` for checks spanning the ladder
    pub h: f64,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, h: f64, value: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            h,
            value,
            passed: bound.holds(value),
            bound,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// acceptance criterion number; `None` for auxiliary suites
    pub criterion: Option<u8>,
    pub title: String,
    pub checks: Vec<Check>,
    pub table: ResultTable,
    pub seconds: f64,
    /// set when the suite aborted
    pub failure: Option<String>,
}

impl Outcome {
    pub(crate) fn new(criterion: Option<u8>, title: &str) -> Self {
        Self {
            criterion,
            title: title.to_string(),
            checks: vec![],
            table: ResultTable::new(),
            seconds: 0.0,
            failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub(crate) fn check(&mut self, name: impl Into<String>, h: f64, value: f64, bound: Bound) {
        self.checks.push(Check::new(name, h, value, bound));
    }

    /// Writes one `check_*` row triple per check under `suite/name`.
    pub(crate) fn finish(mut self, suite: &str, start: Instant) -> Self {
        self.seconds = start.elapsed().as_secs_f64();
        for c in &self.checks {
            let exp = format!("{suite}/{}", c.name);
            self.table.push(&exp, c.h, f64::NAN, "check_error", c.value);
            self.table.push(&exp, c.h, f64::NAN, "check_tolerance", c.bound.threshold());
            self.table.push(&exp, c.h, f64::NAN, "check_pass", if c.passed { 1.0 } else { 0.0 });
        }
        self.table.push(suite, f64::NAN, f64::NAN, "runtime_s", self.seconds);
        self
    }

    /// One-line verdict, e.g. `criterion 5 (Moyal scaling): PASS 7/7 checks in 12.1 s`.
    pub fn summary(&self) -> String {
        let label = match self.criterion {
            Some(c) => format!("criterion {c}"),
            None => "auxiliary".to_string(),
        };
        let ok = self.checks.iter().filter(|c| c.passed).count();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{label} ({}): {verdict} {ok}/{} checks in {:.1} s",
            self.title,
            self.checks.len(),
            self.seconds
        );
        if let Some(f) = &self.failure {
            line.push_str(&format!("; aborted: {f}"));
        }
        for c in self.checks.iter().filter(|c| !c.passed) {
            line.push_str(&format!("; {} = {:e} not {}", c.name, c.value, c.bound));
        }
        line
    }

    pub fn details(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                let h = if c.h.is_nan() { String::new() } else { format!(" h={}", c.h) };
                format!("  [{}] {}{h}: {:e} ({})", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.bound)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Runs `body`, turning an error into an aborted outcome.
fn guarded(criterion: Option<u8>, title: &str, suite: &str, body: impl FnOnce(&mut Outcome) -> Result<()>) -> Outcome {
    let start = Instant::now();
    let mut out = Outcome::new(criterion, title);
    if let Err(e) = body(&mut out) {
        out.failure = Some(e.to_string());
    }
    out.finish(suite, start)
}

fn runtime_check(out: &mut Outcome, start: Instant, limit: f64) {
    out.check("runtime_s", f64::NAN, start.elapsed().as_secs_f64(), Bound::AtMost(limit));
}

/// Suites selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Coherent,
    Weyl,
    AntiWick,
    Rondeaux,
    Moyal,
    Inequalities,
    Quantum,
    Classical,
    Convergence,
    Cascade,
    /// criteria 1-5 plus the coherent-state inequalities
    Calculus,
    /// every criterion
    Acceptance,
}

impl Suite {
    pub const NAMES: &'static [&'static str] = &[
        "coherent",
        "weyl",
        "antiwick",
        "rondeaux",
        "moyal",
        "inequalities",
        "quantum",
        "classical",
        "convergence",
        "cascade",
        "calculus",
        "acceptance",
    ];

    /// Accepts suite names and criterion numbers `1`..`10`.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "coherent" | "1" => Suite::Coherent,
            "weyl" | "2" => Suite::Weyl,
            "antiwick" | "3" => Suite::AntiWick,
            "rondeaux" | "4" => Suite::Rondeaux,
            "moyal" | "5" => Suite::Moyal,
            "inequalities" => Suite::Inequalities,
            "quantum" | "6" => Suite::Quantum,
            "classical" | "7" => Suite::Classical,
            "convergence" | "8" | "9" => Suite::Convergence,
            "cascade" | "10" => Suite::Cascade,
            "calculus" => Suite::Calculus,
            "acceptance" | "all" => Suite::Acceptance,
            other => {
                return Err(Error::Config(format!(
                    "unknown suite {other:?}; expected one of {} or a criterion number",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Vec<Outcome> {
        match self {
            Suite::Coherent => vec![criterion_coherent(cfg)],
            Suite::Weyl => vec![criterion_weyl(cfg)],
            Suite::AntiWick => vec![criterion_antiwick(cfg)],
            Suite::Rondeaux => vec![criterion_rondeaux(cfg)],
            Suite::Moyal => vec![criterion_moyal(cfg)],
            Suite::Inequalities => vec![inequality_checks(cfg)],
            Suite::Quantum => vec![criterion_quantum(cfg)],
            Suite::Classical => vec![criterion_classical(cfg)],
            Suite::Convergence => criteria_convergence(cfg).to_vec(),
            Suite::Cascade => vec![criterion_cascade(cfg)],
            Suite::Calculus => [Suite::Coherent, Suite::Weyl, Suite::AntiWick, Suite::Rondeaux, Suite::Moyal, Suite::Inequalities]
                .iter()
                .flat_map(|s| s.run(cfg))
                .collect(),
            Suite::Acceptance => [
                Suite::Coherent,
                Suite::Weyl,
                Suite::AntiWick,
                Suite::Rondeaux,
                Suite::Moyal,
                Suite::Quantum,
                Suite::Classical,
                Suite::Convergence,
                Suite::Cascade,
            ]
            .iter()
            .flat_map(|s| s.run(cfg))
            .collect(),
        }
    }
}

fn rng(cfg: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.run.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Windowed random trigonometric polynomial with `modes` frequencies on
/// each side; its momentum content stays well inside the dual box.
fn random_packet(rng: &mut ChaCha8Rng, grid: &SpaceGrid, modes: i32) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = (-modes..=modes)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let base = PI / grid.half_width();
    (0..grid.count())
        .map(|j| {
            let u = grid.node(j);
            let w = (-u * u / 2.0).exp();
            coeffs
                .iter()
                .zip(-modes..=modes)
                .map(|(c, k)| c * Complex64::from_polar(w, base * k as f64 * u))
                .sum()
        })
        .collect()
}

/// Criterion 1: coherent-state overlaps and the resolution of the identity.
pub fn criterion_coherent(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(1), "coherent-state identities", "coherent", |out| {
        let start = Instant::now();
        let grid = cfg.space_grid()?;
        let mut r = rng(cfg, 1);
        let pairs_per_h = 120usize.div_ceil(cfg.run.h.len()).max(30);
        for &h in &cfg.run.h {
            let s = 3.0 * h.sqrt();
            let mut worst = 0.0f64;
            for _ in 0..pairs_per_h {
                let (x, xi) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
                let (dx, dxi) = (r.random_range(-s..s), r.random_range(-s..s));
                let a = coherent_vector(&CoherentIndex::new(x, xi, h)?, &grid)?;
                let b = coherent_vector(&CoherentIndex::new(x + dx, xi + dxi, h)?, &grid)?;
                let want = (-(dx * dx + dxi * dxi) / (4.0 * h)).exp();
                worst = worst.max((inner(&a, &b, &grid).norm() - want).abs());
            }
            out.check("overlap_modulus", h, worst, Bound::AtMost(1e-8));
            let mut worst = 0.0f64;
            for _ in 0..3 {
                let f = random_packet(&mut r, &grid, 6);
                let g = random_packet(&mut r, &grid, 6);
                let (lhs, rhs) = resolution_of_identity_check(&f, &g, &grid, h)?;
                let scale = (inner(&f, &f, &grid).re * inner(&g, &g, &grid).re).sqrt();
                worst = worst.max((lhs - rhs).norm() / scale);
            }
            out.check("resolution_of_identity", h, worst, Bound::AtMost(1e-6));
        }
        runtime_check(out, start, 10.0);
        Ok(())
    })
}

/// Gaussian test symbols `exp(-(x-a)^2/s - (xi-b)^2/r)`.
const GAUSSIANS: [(f64, f64, f64, f64); 3] = [(0.3, -0.2, 1.0, 0.5), (-0.8, 0.4, 0.6, 0.8), (0.0, 0.1, 2.0, 0.3)];

fn gaussian(p: (f64, f64, f64, f64)) -> impl Fn(f64, f64) -> f64 + Sync {
    move |x, xi| (-(x - p.0).powi(2) / p.2 - (xi - p.1).powi(2) / p.3).exp()
}

/// Criterion 2: trace and product-trace formulas, symbol round trip and the
/// coherent projector symbol.
pub fn criterion_weyl(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(2), "Weyl-calculus identities", "weyl", |out| {
        let start = Instant::now();
        for &h in &cfg.run.h {
            let grid = cfg.dual_grid(h)?;
            let fields: Vec<SymbolField> = GAUSSIANS.iter().map(|&p| SymbolField::from_real_fn(grid, gaussian(p))).collect();
            let ops: Vec<_> = GAUSSIANS
                .iter()
                .map(|&p| {
                    let g = gaussian(p);
                    quantize_weyl_fn(grid, h, move |x, xi| Complex64::new(g(x, xi), 0.0))
                })
                .collect::<Result<_>>()?;
            let (mut trace_rel, mut product_rel, mut round_trip) = (0.0f64, 0.0f64, 0.0f64);
            for (f, a) in fields.iter().zip(&ops) {
                let want = integrate(f)? / (2.0 * PI * h);
                trace_rel = trace_rel.max((a.trace() - want).norm() / want.norm());
                round_trip = round_trip.max(symbol_weyl(a)?.sub(f)?.sup() / f.sup());
            }
            for i in 0..fields.len() {
                for j in i..fields.len() {
                    let (lhs, rhs) = trace_product_check(&fields[i], &fields[j], h)?;
                    product_rel = product_rel.max((lhs - rhs).norm() / rhs.norm());
                }
            }
            out.check("trace_formula", h, trace_rel, Bound::AtMost(1e-6));
            out.check("product_trace_formula", h, product_rel, Bound::AtMost(1e-6));
            out.check("symbol_round_trip", h, round_trip, Bound::AtMost(1e-8));
            let (x0, xi0) = (0.5, -0.3);
            let p = coherent_projector(&CoherentIndex::new(x0, xi0, h)?, &grid.x)?;
            let exact = SymbolField::from_real_fn(grid, |x, xi| 2.0 * (-((x - x0).powi(2) + (xi - xi0).powi(2)) / h).exp());
            out.check("projector_symbol", h, symbol_weyl(&p)?.sub(&exact)?.sup(), Bound::AtMost(1e-8));
        }
        runtime_check(out, start, 30.0);
        Ok(())
    })
}

/// Criterion 3: anti-Wick symbol is the heat-smoothed symbol, positivity
/// and the trace identity.
pub fn criterion_antiwick(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(3), "anti-Wick bridge", "antiwick", |out| {
        let start = Instant::now();
        for &h in &cfg.run.h {
            let grid = cfg.dual_grid(h)?;
            let g = SymbolField::from_real_fn(grid, |x, xi| (-(x - 0.5).powi(2) - 2.0 * (xi + 0.2).powi(2)).exp());
            let a = quantize_antiwick(&g, h)?;
            let sigma = symbol_weyl(&a)?;
            out.check("weyl_symbol_is_heat_smoothing", h, sigma.sub(&heat_smooth(&g, h)?)?.sup(), Bound::AtMost(1e-6));
            out.check("min_eigenvalue", h, a.min_eigenvalue()?, Bound::AtLeast(-1e-8));
            let want = integrate(&g)?.re / (2.0 * PI * h);
            out.check("trace_identity", h, (a.trace().re - want).abs() / want, Bound::AtMost(1e-6));
        }
        runtime_check(out, start, 30.0);
        Ok(())
    })
}

/// Criterion 4: weighted commutator seminorms stay within a factor 10 across
/// the first three rungs of the ladder, for `2 pi h Op^AW(G)` and for
/// `Op^AW(G)` itself.
pub fn criterion_rondeaux(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(4), "Rondeaux seminorm monitor", "rondeaux", |out| {
        let start = Instant::now();
        let ladder: Vec<f64> = cfg.run.h.iter().copied().take(3).collect();
        if ladder.len() < 2 {
            return Err(Error::Config("seminorm monitor needs at least two h values".into()));
        }
        let reports: Vec<_> = ladder
            .par_iter()
            .map(|&h| -> Result<_> {
                let grid = cfg.dual_grid(h)?;
                let op = quantize_antiwick(&cfg.initial.field(grid), h)?;
                let rho = op.scale(Complex64::new(2.0 * PI * h, 0.0));
                Ok((h, rondeaux_seminorms(&rho, 2)?, rondeaux_seminorms(&op, 2)?))
            })
            .collect::<Result<_>>()?;
        for (variant, pick) in [("density", 0usize), ("antiwick", 1usize)] {
            let first = if pick == 0 { &reports[0].1 } else { &reports[0].2 };
            for e in &first.entries {
                let vals: Vec<f64> = reports
                    .iter()
                    .map(|(h, rho, op)| {
                        let rep = if pick == 0 { rho } else { op };
                        let v = rep.get(e.alpha, e.beta).map(|x| x.weighted).unwrap_or(f64::NAN);
                        out.table.push(&format!("rondeaux/{variant}/P{}Q{}", e.alpha, e.beta), *h, 0.0, "seminorm_weighted", v);
                        v
                    })
                    .collect();
                let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
                out.check(format!("{variant}_spread_P{}Q{}", e.alpha, e.beta), f64::NAN, hi / lo, Bound::AtMost(10.0));
            }
        }
        runtime_check(out, start, 120.0);
        Ok(())
    })
}

/// The fixed Gaussian pair of the Moyal scaling study.
pub fn moyal_pair(grid: PhaseGrid) -> (SymbolField, SymbolField) {
    let f = SymbolField::from_real_fn(grid, |x, xi| (-(x - 0.7).powi(2) / 4.0 - (xi - 0.2).powi(2) / 0.16).exp());
    let g = SymbolField::from_real_fn(grid, |x, xi| {
        (-(x + 0.5).powi(2) / 4.0 - (xi + 0.3).powi(2) / 0.16).exp() * (1.0 + 0.3 * x)
    });
    (f, g)
}

/// Criterion 5: `M_h` scales like `h`, `M_h - h C_1` like `h^3`, in L1 and
/// sup norms; `C_2` vanishes.
pub fn criterion_moyal(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(5), "Moyal expansion scaling", "moyal", |out| {
        let start = Instant::now();
        let rows: Vec<_> = cfg
            .run
            .h
            .par_iter()
            .map(|&h| -> Result<_> {
                let (f, g) = moyal_pair(cfg.dual_grid(h)?);
                let e = expand(&f, &g, h, 2)?;
                let c2 = ck_term(&f, &g, 2)?.sup();
                let bound = remainder_operator_norms(&e)?.ratio;
                Ok((h, norm(&e.exact, NormKind::L1)?, e.exact.sup(), e.remainder_l1, e.remainder_sup, c2, bound))
            })
            .collect::<Result<_>>()?;
        for &(h, l1, sup, rl1, rsup, c2, bound) in &rows {
            out.table.push("moyal", h, 0.0, "moyal_l1", l1);
            out.table.push("moyal", h, 0.0, "moyal_sup", sup);
            out.table.push("moyal", h, 0.0, "remainder_l1", rl1);
            out.table.push("moyal", h, 0.0, "remainder_sup", rsup);
            out.table.push("moyal", h, 0.0, "bound_ratio", bound);
            out.check("c2_vanishes", h, c2, Bound::AtMost(1e-12));
        }
        let series = [
            ("bracket_l1_slope", 1, 1.0),
            ("bracket_sup_slope", 2, 1.0),
            ("remainder_l1_slope", 3, 3.0),
            ("remainder_sup_slope", 4, 3.0),
        ];
        for (name, col, target) in series {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.0, [r.1, r.2, r.3, r.4][col - 1]))
                .collect();
            let fit = fit_loglog_slope(&pairs)?;
            out.table.push(&format!("moyal/{name}"), f64::NAN, 0.0, "slope", fit.slope);
            out.check(name, f64::NAN, fit.slope, Bound::Within { target, tol: 0.3 });
        }
        runtime_check(out, start, 120.0);
        Ok(())
    })
}

/// Bargmann-type transform of the Weyl symbol against direct coherent matrix
/// elements, and the two coherent-state trace-norm inequalities.
pub fn inequality_checks(cfg: &ExperimentConfig) -> Outcome {
    guarded(None, "coherent-state transforms and inequalities", "inequalities", |out| {
        let h = cfg.run.h.iter().copied().find(|&h| h <= 0.25).unwrap_or(cfg.run.h[cfg.run.h.len() - 1]);
        let grid = cfg.dual_grid(h)?;
        let f = SymbolField::from_real_fn(grid, |x, xi| (-(x - 0.3).powi(2) - (xi + 0.1).powi(2)).exp() * (1.0 + 0.2 * xi));
        let a = quantize_weyl(&f, h)?;
        let nodes = vec![(0.0, 0.0), (0.5, -0.25), (-0.4, 0.6)];
        let table = wick_type_symbol(&a, &nodes, default_wick_radius(h))?;
        let worst = table
            .entries
            .iter()
            .map(|e| (wick_from_weyl(&f, h, nodes[e.x_index], nodes[e.y_index]) - e.value).norm())
            .fold(0.0, f64::max);
        out.check("bargmann_transform", h, worst, Bound::AtMost(1e-5));
        let step = 0.5 * h.sqrt();
        let lattice = phase_lattice(3.5, step);
        let weight = |u: f64, v: f64| (-(u * u + v * v)).exp();
        let rep = coherent_inequalities(&a, weight, PI, &lattice, step * step)?;
        out.table.push("inequalities/weighted", h, 0.0, "bound_ratio", rep.weighted_lhs / rep.weighted_rhs);
        out.table.push("inequalities/overlap", h, 0.0, "bound_ratio", rep.trace_norm / rep.overlap_rhs);
        out.check("weighted_inequality", h, rep.weighted_lhs / rep.weighted_rhs, Bound::AtMost(1.0 + 1e-3));
        out.check("overlap_inequality", h, rep.trace_norm / rep.overlap_rhs, Bound::AtMost(1.0 + 1e-3));
        Ok(())
    })
}

/// Criterion 6: trace, positivity and hermiticity along TDHF trajectories
/// for the ladder, and a common bound on `|| u_h ||_L1` for `t <= 1`.
pub fn criterion_quantum(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(6), "quantum conservation", "quantum", |out| {
        let start = Instant::now();
        let t_end = cfg.run.t_end.min(1.0);
        let every = if (0.1 / cfg.run.dt).fract().abs() < 1e-9 { 0.1 } else { cfg.run.snapshot_every };
        let runs: Vec<_> = cfg
            .run
            .h
            .par_iter()
            .map(|&h| -> Result<_> {
                let rho0 = initial_state(cfg, h, cfg.grid.points)?;
                Ok((h, propagate_tdhf(&rho0, &cfg.potential, h, t_end, cfg.run.dt, every)?))
            })
            .collect::<Result<_>>()?;
        let mut l1_max = 0.0f64;
        for (h, tr) in &runs {
            let d = &tr.diagnostics;
            let herm0 = d[0].hermiticity_defect;
            let trace = d.iter().map(|s| (s.trace - 1.0).abs()).fold(0.0, f64::max);
            let eig = d.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min);
            let herm = d.iter().map(|s| s.hermiticity_defect - herm0).fold(0.0, f64::max);
            for s in d {
                out.table.push("quantum", *h, s.time, "trace_defect", (s.trace - 1.0).abs());
                out.table.push("quantum", *h, s.time, "min_eigenvalue", s.min_eigenvalue);
                out.table.push("quantum", *h, s.time, "hermiticity_defect", s.hermiticity_defect);
                out.table.push("quantum", *h, s.time, "symbol_l1", s.symbol_l1);
                l1_max = l1_max.max(s.symbol_l1);
            }
            out.check("trace_defect", *h, trace, Bound::AtMost(1e-8));
            out.check("min_eigenvalue", *h, eig, Bound::AtLeast(-1e-7));
            out.check("hermiticity_drift", *h, herm, Bound::AtMost(1e-10));
        }
        // unit-mass data: a common constant of 2 across the ladder
        out.check("symbol_l1_uniform_bound", f64::NAN, l1_max, Bound::AtMost(2.0));
        runtime_check(out, start, 300.0);
        Ok(())
    })
}

fn classical_blob(grid: PhaseGrid) -> SymbolField {
    SymbolField::from_real_fn(grid, |x, xi| (-(x + 1.0).powi(2) - xi * xi).exp() / PI)
}

/// Criterion 7: free transport, mass conservation and volume preservation
/// of the classical solver. Uses its own grids: the x-box must hold the
/// sheared data without wrap-around.
pub fn criterion_classical(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(7), "classical solver", "classical", |out| {
        let start = Instant::now();
        let free_grid = PhaseGrid::new(SpaceGrid::new(12.0, 192)?, SpaceGrid::new(6.0, 96)?);
        let v0 = classical_blob(free_grid);
        let free = solve_vlasov(&v0, &PotentialSpec::free(), 1.0, 0.05, 1.0)?;
        let exact = SymbolField::from_real_fn(free_grid, |x, xi| (-(x - 2.0 * xi + 1.0).powi(2) - xi * xi).exp() / PI);
        out.check("free_transport", f64::NAN, free.snapshots[1].sub(&exact)?.sup(), Bound::AtMost(1e-5));

        let grid = PhaseGrid::new(SpaceGrid::new(16.0, 1024)?, SpaceGrid::new(5.0, 400)?);
        let tr = solve_vlasov(&classical_blob(grid), &cfg.potential, 2.0, 0.01, 0.25)?;
        let drift = tr.masses.iter().map(|m| (m - tr.masses[0]).abs()).fold(0.0, f64::max);
        let min = tr.minima.iter().copied().fold(f64::INFINITY, f64::min);
        for (k, &t) in tr.times.iter().enumerate() {
            out.table.push("classical", f64::NAN, t, "mass", tr.masses[k]);
            out.table.push("classical", f64::NAN, t, "min_density", tr.minima[k]);
        }
        out.check("mass_conservation", f64::NAN, drift, Bound::AtMost(1e-5));
        out.check("min_density", f64::NAN, min, Bound::AtLeast(NEGATIVITY_FLOOR));

        // characteristics in the self-consistent field of the run above
        let gradients: Vec<Vec<f64>> = tr
            .snapshots
            .iter()
            .map(|v| crate::classical::classical_force(v, &cfg.potential).1)
            .collect();
        let path = SampledForcePath::new(grid.x, tr.times.clone(), &tr.forces, &gradients)?;
        let mut r = rng(cfg, 7);
        let start_pts: Vec<(f64, f64)> = (0..400).map(|_| (r.random_range(-3.0..1.0), r.random_range(-1.5..1.5))).collect();
        let flow = integrate_characteristics(&path, &start_pts, &tr.times, 25, None)?;
        out.check("jacobian_defect", f64::NAN, flow.max_jacobian_defect(), Bound::AtMost(1e-5));
        let last = tr.times.len() - 1;
        let back = integrate_characteristics(&path, &flow.backward[last], &[0.0, tr.times[last]], 25 * last, None)?;
        let undo = back.forward[1]
            .iter()
            .zip(&start_pts)
            .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
            .fold(0.0, f64::max);
        out.check("forward_of_backward_identity", f64::NAN, undo / grid.x.spacing(), Bound::AtMost(1e-6));
        let free_flow = integrate_characteristics(&AnalyticForce(&PotentialSpec::free()), &grid_nodes(&free_grid), &[0.0, 1.0], 1, None)?;
        out.check("free_flow_jacobian", f64::NAN, free_flow.max_jacobian_defect(), Bound::AtMost(1e-12));
        runtime_check(out, start, 60.0);
        Ok(())
    })
}

/// Criteria 8 and 9 from one ladder run at the configured `M` and one at
/// `2M` for the refinement gate.
pub fn criteria_convergence(cfg: &ExperimentConfig) -> [Outcome; 2] {
    let start = Instant::now();
    let t = cfg.run.t_end;
    let run = || -> Result<_> {
        let base = run_ladder(cfg, cfg.grid.points)?;
        let fine = run_ladder(cfg, 2 * cfg.grid.points)?;
        Ok((base, fine))
    };
    let mut c8 = Outcome::new(Some(8), "headline convergence");
    let mut c9 = Outcome::new(Some(9), "operator-level convergence");
    match run() {
        Err(e) => {
            c8.failure = Some(e.to_string());
            c9.failure = Some(e.to_string());
        }
        Ok((base, fine)) => {
            cell_rows(&mut c8.table, "convergence", &base);
            cell_rows(&mut c8.table, "convergence_refined", &fine);
            let fit = fit_ladder(&base, t);
            fit_rows(&mut c8.table, "convergence", &fit);
            fit_rows(&mut c8.table, "convergence_refined", &fit_ladder(&fine, t));
            let record_change = |o: &mut Outcome, name: &str, f: fn(&crate::expansion::ComparisonEntry) -> f64| {
                for (b, r) in base.iter().zip(&fine) {
                    if let (Some(eb), Some(er)) = (b.report.at(t), r.report.at(t)) {
                        let change = (f(er) - f(eb)).abs() / f(eb);
                        o.table.push(&format!("convergence/{name}"), b.h, t, "refinement_change", change);
                        o.check(format!("{name}_refinement_change"), b.h, change, Bound::AtMost(0.05));
                    }
                }
            };
            match &fit.symbol {
                Some(s) => c8.check("symbol_l1_slope", f64::NAN, s.slope, Bound::AtLeast(1.5)),
                None => c8.failure = Some("symbol slope needs at least three h values".into()),
            }
            record_change(&mut c8, "symbol_l1", |e| e.symbol_error);
            match &fit.trace {
                Some(s) => c9.check("trace_norm_slope", f64::NAN, s.slope, Bound::AtLeast(1.7)),
                None => c9.failure = Some("trace slope needs at least three h values".into()),
            }
            record_change(&mut c9, "trace_norm", |e| e.trace_error);
        }
    }
    runtime_check(&mut c8, start, 900.0);
    [c8.finish("convergence", start), c9.finish("convergence_trace", start)]
}

/// Criterion 10: `u_1` vanishes, initial conditions hold exactly, the
/// expansion reproduces `rho_h(0)` when it is a Weyl quantization, and the
/// Egorov comparison converges.
pub fn criterion_cascade(cfg: &ExperimentConfig) -> Outcome {
    guarded(Some(10), "cascade structure", "cascade", |out| {
        let start = Instant::now();
        let r = &cfg.run;
        let cells: Vec<_> = r
            .h
            .par_iter()
            .map(|&h| -> Result<_> {
                let grid = cfg.dual_grid(h)?;
                let f_h = cfg.initial.smoothed(grid, h)?;
                let b = solve_cascade(&f_h, &cfg.potential, 3, r.t_end, r.dt, r.snapshot_every)?;
                let u1 = b.fields[1].iter().map(|u| u.sup()).fold(0.0, f64::max);
                let init = b.fields[0][0]
                    .sub(&f_h)?
                    .sup()
                    .max(b.fields[1][0].sup())
                    .max(b.fields[2][0].sup());
                // t = 0 with rho(0) = 2 pi h Op(F_h): symbol error is pure round-off
                let rho = quantize_weyl(&f_h, h)?.scale(Complex64::new(2.0 * PI * h, 0.0));
                let mut rho = rho;
                rho.set_flags(true, true);
                let q = propagate_tdhf(&rho, &cfg.potential, h, 0.0, r.dt, r.dt)?;
                let rep = compare(&q, &b)?;
                Ok((h, u1, init, rep.entries[0].symbol_error, b))
            })
            .collect::<Result<_>>()?;
        for (h, u1, init, e0, b) in &cells {
            for (k, u) in b.fields[1].iter().enumerate() {
                out.table.push("cascade", *h, b.times[k], "u1_sup", u.sup());
            }
            out.table.push("cascade", *h, 0.0, "initial_defect", *init);
            out.check("u1_sup", *h, *u1, Bound::AtMost(1e-10));
            out.check("initial_conditions", *h, *init, Bound::AtMost(1e-15));
            out.check("weyl_initial_symbol_error", *h, *e0, Bound::AtMost(1e-8));
        }
        let mut egorov_cfg = cfg.clone();
        egorov_cfg.potential = cfg.potential.without_interaction();
        let (table, _, fit) = run_egorov_study(&egorov_cfg)?;
        out.table.extend(table);
        match fit {
            Some(s) => out.check("egorov_slope", f64::NAN, s.slope, Bound::AtLeast(1.5)),
            None => return Err(Error::Config("Egorov slope needs at least three h values".into())),
        }
        runtime_check(out, start, 600.0);
        Ok(())
    })
}
