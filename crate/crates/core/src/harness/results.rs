//! Result rows, the metric registry and CSV emission.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Registered metric names and what they measure.
pub const METRICS: &[(&str, &str)] = &[
    ("symbol_l1_error", "|| u_h - F^(N) ||_L1"),
    ("trace_norm_error", "|| rho_h - 2 pi h Op(F^(N)) ||_tr"),
    ("symbol_l1_slope", "fitted log-log slope of symbol_l1_error"),
    ("trace_norm_slope", "fitted log-log slope of trace_norm_error"),
    ("symbol_l1_constant", "fitted constant C in C h^slope of symbol_l1_error"),
    ("trace_norm_constant", "fitted constant C in C h^slope of trace_norm_error"),
    ("refinement_change", "relative change of an error under grid doubling"),
    ("egorov_l1_error", "|| sigma(G(t) Op F G(t)*) - F o phi_{-t} ||_L1"),
    ("egorov_slope", "fitted log-log slope of egorov_l1_error"),
    ("trace_defect", "| Tr rho - 1 |"),
    ("min_eigenvalue", "smallest eigenvalue of rho"),
    ("hermiticity_defect", "sup | rho - rho* |"),
    ("symbol_l1", "|| u_h ||_L1"),
    ("mass", "integral of the phase-space density"),
    ("mass_drift", "| mass(t) - mass(0) |"),
    ("min_density", "most negative value of the classical density"),
    ("jacobian_defect", "max | det D phi - 1 |"),
    ("u1_sup", "sup | u_1 |"),
    ("initial_defect", "sup | u_j(0) - initial datum |"),
    ("check_error", "measured error of a calculus check"),
    ("check_tolerance", "tolerance of a calculus check"),
    ("check_pass", "1 if the check passed, 0 otherwise"),
    ("moyal_l1", "|| M_h(F, G) ||_L1"),
    ("moyal_sup", "|| M_h(F, G) ||_sup"),
    ("remainder_l1", "|| M_h - h C_1 ||_L1"),
    ("remainder_sup", "|| M_h - h C_1 ||_sup"),
    ("bound_ratio", "measured value over the shape of its analytic bound"),
    ("seminorm_weighted", "h^{1-|a|-|b|} || ad_P^a ad_Q^b rho ||_tr"),
    ("seminorm_spread", "max over min of a weighted seminorm across h"),
    ("slope", "fitted log-log slope named by the experiment"),
    ("runtime_s", "wall-clock seconds"),
];

pub fn is_registered(metric: &str) -> bool {
    METRICS.iter().any(|(m, _)| *m == metric)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    /// `NaN` when the row is not tied to one `h`
    pub h: f64,
    pub t: f64,
    pub metric: String,
    pub value: f64,
}

/// Append-only table of result rows.
#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on an unregistered metric name: that is a programming error.
    pub fn push(&mut self, experiment: &str, h: f64, t: f64, metric: &str, value: f64) {
        assert!(is_registered(metric), "unregistered metric {metric}");
        self.rows.push(ResultRow {
            experiment: experiment.to_string(),
            h,
            t,
            metric: metric.to_string(),
            value,
        });
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn find(&self, experiment: &str, metric: &str) -> impl Iterator<Item = &ResultRow> {
        let (e, m) = (experiment.to_string(), metric.to_string());
        self.rows.iter().filter(move |r| r.experiment == e && r.metric == m)
    }

    /// Rows in a deterministic order: experiment, metric, h descending, t.
    pub fn sorted(&self) -> Vec<ResultRow> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            a.experiment
                .cmp(&b.experiment)
                .then_with(|| a.metric.cmp(&b.metric))
                .then_with(|| b.h.total_cmp(&a.h))
                .then_with(|| a.t.total_cmp(&b.t))
        });
        rows
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["experiment", "h", "t", "metric", "value"])
            .map_err(|e| Error::Config(e.to_string()))?;
        for r in self.sorted() {
            w.write_record([r.experiment.clone(), fmt(r.h), fmt(r.t), r.metric.clone(), fmt(r.value)])
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Shortest round-trip decimal; `NaN` and infinities spelled out.
fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_sorted_and_round_trips() {
        let mut t = ResultTable::new();
        t.push("b", 0.1, 1.0, "mass", 1.0);
        t.push("a", 0.1, 1.0, "mass", 0.5);
        t.push("a", 0.4, 1.0, "mass", 1.0 / 3.0);
        t.push("a", f64::NAN, 0.0, "symbol_l1_slope", 2.0);
        let text = t.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "experiment,h,t,metric,value");
        assert_eq!(lines[1], "a,0.4,1.0,mass,0.3333333333333333");
        assert_eq!(lines[2], "a,0.1,1.0,mass,0.5");
        assert_eq!(lines[3], "a,nan,0.0,symbol_l1_slope,2.0");
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<ResultRow> = r.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(back[0].value, 1.0 / 3.0);
        assert_eq!(t.to_csv().unwrap(), text);
    }

    #[test]
    #[should_panic]
    fn unknown_metric_panics() {
        ResultTable::new().push("a", 0.1, 0.0, "bogus", 1.0);
    }
}
