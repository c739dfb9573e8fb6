//! Log-log convergence slope fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `ln e`.
    pub residual: f64,
}

impl SlopeFit {
    /// Constant `C` in `e ~ C h^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Least-squares fit of `ln e = slope * ln h + intercept`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::invalid(format!(
            "slope fit needs at least 3 samples, got {}",
            pairs.len()
        )));
    }
    if let Some(bad) = pairs
        .iter()
        .find(|(h, e)| !(h.is_finite() && e.is_finite() && *h > 0.0 && *e > 0.0))
    {
        return Err(Error::invalid(format!(
            "slope fit needs positive finite samples, got {bad:?}"
        )));
    }
    let n = pairs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs at least two distinct h values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(SlopeFit {
        pairs: pairs.to_vec(),
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_quadratic() {
        let f = fit_loglog_slope(&[(1.0, 1.0), (0.5, 0.25), (0.25, 0.0625)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn constant_error() {
        let f = fit_loglog_slope(&[(1.0, 0.3), (0.5, 0.3), (0.25, 0.3)]).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_cubic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<_> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h: &f64| (h, h.powi(3) * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
            .collect();
        let f = fit_loglog_slope(&pairs).unwrap();
        assert!((f.slope - 3.0).abs() < 0.05);
    }

    #[test]
    fn guards() {
        assert!(fit_loglog_slope(&[(1.0, 1.0), (0.5, 0.5)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (0.5, 0.0), (0.2, 0.1)]).is_err());
        assert!(fit_loglog_slope(&[(-1.0, 1.0), (0.5, 0.1), (0.2, 0.1)]).is_err());
    }
}
