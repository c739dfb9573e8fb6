//! Moyal bracket: exact symbol of the commutator, the coefficients `C_k` of
//! its small-h expansion, and remainders measured as exact minus truncation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SymbolField;
use crate::numerics::{norm, NormKind};
use crate::weyl::{quantize_weyl, symbol_weyl};

pub const MAX_ORDER: u32 = 5;

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `1 / ((2i)^k k!)`
fn ck_prefactor(k: u32) -> Complex64 {
    Complex64::new(0.0, 2.0).powu(k).inv() / factorial(k)
}

fn check_order(k: u32) -> Result<()> {
    if (1..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("Moyal coefficient order must be in 1..={MAX_ORDER}, got {k}")))
    }
}

/// `M_h(F, G) = sigma(Op F Op G - Op G Op F)`.
pub fn moyal_exact(f: &SymbolField, g: &SymbolField, h: f64) -> Result<SymbolField> {
    f.grid().ensure_same(g.grid())?;
    let a = quantize_weyl(f, h)?;
    let b = quantize_weyl(g, h)?;
    symbol_weyl(&a.commutator(&b)?)
}

/// Coefficient `C_k(F, G)`, derivatives taken spectrally.
///
/// `C_1 = (1/i){F, G}` with `{F, G} = d_xi F d_x G - d_x F d_xi G`.
pub fn ck_term(f: &SymbolField, g: &SymbolField, k: u32) -> Result<SymbolField> {
    check_order(k)?;
    f.grid().ensure_same(g.grid())?;
    let mut acc = SymbolField::zeros(*f.grid());
    for m in 0..=k {
        let w = binom(k, m) * if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
        // (d_xi^m d_x^{k-m} F)(d_x^m d_xi^{k-m} G) - (F <-> G)
        let t1 = f.derivative(k - m, m).mul(&g.derivative(m, k - m))?;
        let t2 = g.derivative(k - m, m).mul(&f.derivative(m, k - m))?;
        acc = acc.axpy(Complex64::new(w, 0.0), &t1.sub(&t2)?)?;
    }
    Ok(acc.scaled(ck_prefactor(k)))
}

/// `C_k(A, u)` when `A` depends on `x` only; `a_k` holds `A^{(k)}` on the
/// x-nodes. Only odd `k` survive: `C_k = ((-1)^k - 1) A^{(k)} d_xi^k u / ((2i)^k k!)`.
pub fn ck_term_potential(a_k: &[f64], u: &SymbolField, k: u32) -> Result<SymbolField> {
    check_order(k)?;
    let (m, _) = u.grid().shape();
    if a_k.len() != m {
        return Err(Error::GridMismatch("potential derivative length".into()));
    }
    if k % 2 == 0 {
        return Ok(SymbolField::zeros(*u.grid()));
    }
    let mut d = u.derivative(0, k);
    let pre = ck_prefactor(k) * -2.0;
    for (j, mut row) in d.values_mut().rows_mut().into_iter().enumerate() {
        let s = pre * a_k[j];
        row.mapv_inplace(|c| c * s);
    }
    Ok(d)
}

#[derive(Clone, Debug)]
pub struct MoyalExpansion {
    pub h: f64,
    pub order: u32,
    pub f: SymbolField,
    pub g: SymbolField,
    /// `C_1 .. C_{N-1}`
    pub terms: Vec<SymbolField>,
    pub exact: SymbolField,
    /// `M_h - sum_{k < N} h^k C_k`
    pub remainder: SymbolField,
    pub remainder_l1: f64,
    pub remainder_sup: f64,
}

pub fn expand(f: &SymbolField, g: &SymbolField, h: f64, order: u32) -> Result<MoyalExpansion> {
    if order == 0 || order > MAX_ORDER + 1 {
        return Err(Error::invalid(format!("expansion order must be in 1..={}", MAX_ORDER + 1)));
    }
    let exact = moyal_exact(f, g, h)?;
    let mut terms = Vec::new();
    let mut remainder = exact.clone();
    for k in 1..order {
        let c = ck_term(f, g, k)?;
        remainder = remainder.axpy(Complex64::new(-h.powi(k as i32), 0.0), &c)?;
        terms.push(c);
    }
    Ok(MoyalExpansion {
        h,
        order,
        f: f.clone(),
        g: g.clone(),
        terms,
        remainder_l1: norm(&remainder, NormKind::L1)?,
        remainder_sup: norm(&remainder, NormKind::Sup)?,
        exact,
        remainder,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderNorms {
    pub trace_norm: f64,
    pub operator_norm: f64,
    /// `h^{-1} sum_{N <= a, b <= N+2} h^{(a+b)/2} |grad^a F|_{L1} |grad^b G|_{L1}`
    pub bound_shape: f64,
    pub ratio: f64,
}

fn gradient_norm(f: &SymbolField, order: u32) -> Result<f64> {
    let mut s = 0.0;
    for a in 0..=order {
        s += norm(&f.derivative(a, order - a), NormKind::L1)?;
    }
    Ok(s)
}

/// Trace and operator norms of the quantized remainder, with the bound shape.
pub fn remainder_operator_norms(e: &MoyalExpansion) -> Result<RemainderNorms> {
    let r = quantize_weyl(&e.remainder, e.h)?;
    let trace_norm = r.trace_norm()?;
    let operator_norm = r.operator_norm()?;
    let n = e.order;
    let mut bound_shape = 0.0;
    for a in n..=n + 2 {
        for b in n..=n + 2 {
            bound_shape += e.h.powf(0.5 * (a + b) as f64) * gradient_norm(&e.f, a)? * gradient_norm(&e.g, b)?;
        }
    }
    bound_shape /= e.h;
    Ok(RemainderNorms {
        trace_norm,
        operator_norm,
        bound_shape,
        ratio: if bound_shape > 0.0 { trace_norm / bound_shape } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PhaseGrid, SpaceGrid};

    fn pair(h: f64, m: usize) -> (SymbolField, SymbolField) {
        let g = PhaseGrid::dual(SpaceGrid::new(8.0, m).unwrap(), h).unwrap();
        let f = SymbolField::from_real_fn(g, |x, xi| (-(x - 0.7).powi(2) / 4.0 - (xi - 0.2).powi(2) / 0.16).exp());
        let q = SymbolField::from_real_fn(g, |x, xi| {
            (-(x + 0.5).powi(2) / 4.0 - (xi + 0.3).powi(2) / 0.16).exp() * (1.0 + 0.3 * x)
        });
        (f, q)
    }

    #[test]
    fn c1_is_poisson_bracket_over_i() {
        let (f, g) = pair(0.2, 128);
        let c1 = ck_term(&f, &g, 1).unwrap();
        let pb = f.derivative(0, 1).mul(&g.derivative(1, 0)).unwrap()
            .sub(&f.derivative(1, 0).mul(&g.derivative(0, 1)).unwrap()).unwrap();
        let expect = pb.scaled(Complex64::new(0.0, -1.0));
        assert!(c1.sub(&expect).unwrap().sup() < 1e-12);
    }

    #[test]
    fn even_terms_and_self_terms_vanish() {
        let (f, g) = pair(0.2, 128);
        for k in [2, 4] {
            assert!(ck_term(&f, &g, k).unwrap().sup() < 1e-12);
        }
        for k in 1..=5 {
            assert!(ck_term(&f, &f, k).unwrap().sup() < 1e-12);
        }
        assert!(ck_term(&f, &g, 6).is_err());
        assert!(ck_term(&f, &g, 0).is_err());
    }

    #[test]
    fn exact_bracket_is_antisymmetric_and_imaginary() {
        let h = 0.2;
        let (f, g) = pair(h, 128);
        let a = moyal_exact(&f, &g, h).unwrap();
        let b = moyal_exact(&g, &f, h).unwrap();
        assert!(a.add(&b).unwrap().sup() < 1e-12);
        let ia = a.scaled(Complex64::new(0.0, 1.0));
        assert!(ia.max_imag() < 1e-10);
        assert!(moyal_exact(&f, &f, h).unwrap().sup() < 1e-10);
    }

    #[test]
    fn potential_form_matches_general_form() {
        let h = 0.2;
        let (_, u) = pair(h, 128);
        let grid = *u.grid();
        let v = |x: f64| 0.5 * (-x * x / 2.0).exp();
        let a = SymbolField::from_real_fn(grid, |x, _| v(x));
        // third derivative of 0.5 e^{-x^2/2}
        let d3: Vec<f64> = (0..grid.x.count())
            .map(|j| {
                let x = grid.x.node(j);
                0.5 * (3.0 * x - x.powi(3)) * (-x * x / 2.0).exp()
            })
            .collect();
        let general = ck_term(&a, &u, 3).unwrap();
        let special = ck_term_potential(&d3, &u, 3).unwrap();
        assert!(general.sub(&special).unwrap().sup() < 1e-9);
    }

    #[test]
    fn remainder_identity_by_construction() {
        let h = 0.2;
        let (f, g) = pair(h, 128);
        let e = expand(&f, &g, h, 2).unwrap();
        let rebuilt = e.remainder.axpy(Complex64::new(h, 0.0), &e.terms[0]).unwrap();
        assert!(rebuilt.sub(&e.exact).unwrap().sup() < 1e-14);
        let same = expand(&f, &f, h, 2).unwrap();
        let n = remainder_operator_norms(&same).unwrap();
        assert!(n.trace_norm < 1e-10 && n.operator_norm <= n.trace_norm + 1e-14);
    }
}
