//! FFT plumbing shared by the spectral routines.

use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array2, ArrayViewMut1, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().expect("fft planner poisoned").plan_fft_forward(len)
}

pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().expect("fft planner poisoned").plan_fft_inverse(len)
}

/// Unnormalized forward transform of a buffer in place.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    forward(buf.len()).process(buf);
}

/// Normalized inverse transform of a buffer in place.
pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    inverse(n).process(buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
}

fn apply_to_lane(
    mut lane: ArrayViewMut1<'_, Complex64>,
    multiplier: &[Complex64],
    fwd: &Arc<dyn Fft<f64>>,
    inv: &Arc<dyn Fft<f64>>,
) {
    let n = multiplier.len();
    let mut buf: Vec<Complex64> = lane.iter().copied().collect();
    fwd.process(&mut buf);
    let s = 1.0 / n as f64;
    for (b, m) in buf.iter_mut().zip(multiplier) {
        *b *= m * s;
    }
    inv.process(&mut buf);
    for (dst, src) in lane.iter_mut().zip(buf) {
        *dst = src;
    }
}

/// Replaces every lane along `axis` by `IFFT(multiplier * FFT(lane))`.
/// `multiplier` is indexed in FFT order.
pub(crate) fn apply_multiplier(arr: &mut Array2<Complex64>, axis: Axis, multiplier: &[Complex64]) {
    let n = arr.len_of(axis);
    assert_eq!(n, multiplier.len(), "multiplier length must match axis length");
    let fwd = forward(n);
    let inv = inverse(n);
    arr.lanes_mut(axis)
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .for_each(|lane| apply_to_lane(lane, multiplier, &fwd, &inv));
}

/// Spectral multiplier for the `order`-th derivative on a periodic axis.
/// The Nyquist mode is dropped for odd orders so real data stays real.
pub(crate) fn derivative_multiplier(wavenumbers: &[f64], order: u32) -> Vec<Complex64> {
    let n = wavenumbers.len();
    wavenumbers
        .iter()
        .enumerate()
        .map(|(k, &kap)| {
            if order % 2 == 1 && n % 2 == 0 && k == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kap).powu(order)
            }
        })
        .collect()
}

/// Multiplier translating samples by `+shift` (value at `x + shift`); the
/// Nyquist mode is replaced by its real part.
pub(crate) fn shift_multiplier(wavenumbers: &[f64], shift: f64) -> Vec<Complex64> {
    let n = wavenumbers.len();
    wavenumbers
        .iter()
        .enumerate()
        .map(|(k, &kap)| {
            if n % 2 == 0 && k == n / 2 {
                Complex64::new((kap * shift).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, kap * shift)
            }
        })
        .collect()
}

/// Trigonometric interpolation of a periodic lane onto the grid with half the
/// spacing. Entry `2j` reproduces `lane[j]`.
pub(crate) fn refine_double(lane: &[Complex64]) -> Vec<Complex64> {
    let m = lane.len();
    let mut spec = lane.to_vec();
    fft_in_place(&mut spec);
    let mut wide = vec![Complex64::new(0.0, 0.0); 2 * m];
    for k in 0..m / 2 {
        wide[k] = spec[k];
    }
    for k in m / 2 + 1..m {
        wide[m + k] = spec[k];
    }
    wide[m / 2] = 0.5 * spec[m / 2];
    wide[m + m / 2] = 0.5 * spec[m / 2];
    ifft_in_place(&mut wide);
    wide.iter_mut().for_each(|c| *c *= 2.0);
    wide
}
