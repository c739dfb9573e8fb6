//! Dense kernel matrices standing in for operators on `L^2(R)`.

use faer::{Mat, Side};
use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{check_h, SpaceGrid};

const HERMITIAN_TOL: f64 = 1e-10;

/// Operator with kernel `K` stored as `A[j, l] = K(x_j, x_l) dx`.
///
/// With this weighting the discrete identity has `K(x, x) = 1/dx` and
/// `trace(I) = M`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    h: f64,
    grid: SpaceGrid,
    data: Array2<Complex64>,
    hermitian: bool,
    positive: bool,
}

fn to_faer(a: &Array2<Complex64>) -> Mat<Complex64> {
    let (m, n) = a.dim();
    Mat::from_fn(m, n, |i, j| a[[i, j]])
}

fn from_faer(a: &Mat<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

impl OperatorMatrix {
    pub fn new(h: f64, grid: SpaceGrid, data: Array2<Complex64>) -> Result<Self> {
        check_h(h)?;
        let m = grid.count();
        if data.dim() != (m, m) {
            return Err(Error::GridMismatch(format!(
                "operator matrix {:?} does not match grid size {m}",
                data.dim()
            )));
        }
        Ok(Self {
            h,
            grid,
            data,
            hermitian: false,
            positive: false,
        })
    }

    pub fn zeros(h: f64, grid: SpaceGrid) -> Result<Self> {
        let m = grid.count();
        Self::new(h, grid, Array2::zeros((m, m)))
    }

    pub fn identity(h: f64, grid: SpaceGrid) -> Result<Self> {
        let m = grid.count();
        let mut op = Self::new(h, grid, Array2::eye(m).mapv(|v: f64| Complex64::new(v, 0.0)))?;
        op.hermitian = true;
        op.positive = true;
        Ok(op)
    }

    /// Diagonal multiplication operator `f(x)`.
    pub fn multiplication(h: f64, grid: SpaceGrid, values: &[f64]) -> Result<Self> {
        let m = grid.count();
        if values.len() != m {
            return Err(Error::GridMismatch("multiplier length".into()));
        }
        let mut data = Array2::zeros((m, m));
        for (j, &v) in values.iter().enumerate() {
            data[[j, j]] = Complex64::new(v, 0.0);
        }
        let mut op = Self::new(h, grid, data)?;
        op.hermitian = true;
        Ok(op)
    }

    /// Rank-one operator `f -> <f, phi> psi`.
    pub fn outer(h: f64, grid: SpaceGrid, psi: &[Complex64], phi: &[Complex64]) -> Result<Self> {
        let m = grid.count();
        if psi.len() != m || phi.len() != m {
            return Err(Error::GridMismatch("state vector length".into()));
        }
        let dx = grid.spacing();
        let data = Array2::from_shape_fn((m, m), |(j, l)| psi[j] * phi[l].conj() * dx);
        Self::new(h, grid, data)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.count()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// Sets the hermitian flag after checking `|A - A^*|_sup < 1e-10`.
    pub fn mark_hermitian(mut self) -> Result<Self> {
        let d = self.hermiticity_defect();
        if d >= HERMITIAN_TOL {
            return Err(Error::invalid(format!("matrix is not hermitian (defect {d:e})")));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Sets the hermitian and positive flags after checking both.
    pub fn mark_positive(self) -> Result<Self> {
        let mut op = self.mark_hermitian()?;
        let floor = -1e-8 * op.operator_norm()?.max(f64::MIN_POSITIVE);
        let min = op.min_eigenvalue()?;
        if min < floor {
            return Err(Error::invalid(format!("matrix is not positive (min eigenvalue {min:e})")));
        }
        op.positive = true;
        Ok(op)
    }

    pub(crate) fn set_flags(&mut self, hermitian: bool, positive: bool) {
        self.hermitian = hermitian;
        self.positive = positive && hermitian;
    }

    fn same_space(&self, other: &OperatorMatrix) -> Result<()> {
        if self.grid.approx_eq(&other.grid) && (self.h - other.h).abs() <= 1e-14 * self.h {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "operators live on different spaces (h {} vs {}, {:?} vs {:?})",
                self.h, other.h, self.grid, other.grid
            )))
        }
    }

    fn with_data(&self, data: Array2<Complex64>) -> Self {
        Self {
            h: self.h,
            grid: self.grid,
            data,
            hermitian: false,
            positive: false,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.with_data(self.data.t().mapv(|c| c.conj()));
        out.set_flags(self.hermitian, self.positive);
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.with_data(self.data.mapv(|c| c * s));
        if s.im == 0.0 {
            out.set_flags(self.hermitian, self.positive && s.re >= 0.0);
        }
        out
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.with_data(&self.data + &other.data);
        out.set_flags(self.hermitian && other.hermitian, self.positive && other.positive);
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.with_data(&self.data - &other.data);
        out.set_flags(self.hermitian && other.hermitian, false);
        Ok(out)
    }

    /// Composition `self ∘ other`.
    pub fn matmul(&self, other: &OperatorMatrix) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.with_data(matmul(&self.data, &other.data)))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<Self> {
        self.same_space(other)?;
        let ab = matmul(&self.data, &other.data);
        let ba = matmul(&other.data, &self.data);
        Ok(self.with_data(ab - ba))
    }

    /// `(A f)(x_j) = sum_l K(x_j, x_l) f(x_l) dx`.
    pub fn apply(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        if f.len() != self.dim() {
            return Err(Error::GridMismatch("vector length".into()));
        }
        let v = Array1::from_vec(f.to_vec());
        Ok(self.data.dot(&v).to_vec())
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diag().sum()
    }

    /// `sup |A - A^*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        let n = self.dim();
        for j in 0..n {
            for l in j..n {
                d = d.max((self.data[[j, l]] - self.data[[l, j]].conj()).norm());
            }
        }
        d
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    fn is_numerically_hermitian(&self) -> bool {
        self.hermitian || self.hermiticity_defect() <= 1e-13 * self.sup().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues of the hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let a = Mat::from_fn(n, n, |i, j| 0.5 * (self.data[[i, j]] + self.data[[j, i]].conj()));
        a.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues_hermitian()?.first().copied().unwrap_or(0.0))
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        to_faer(&self.data)
            .singular_values()
            .map_err(|e| Error::Linalg(format!("{e:?}")))
    }

    /// Sum of singular values. Hermitian input goes through the cheaper
    /// eigenvalue path.
    pub fn trace_norm(&self) -> Result<f64> {
        if self.sup() == 0.0 {
            return Ok(0.0);
        }
        if self.is_numerically_hermitian() {
            return Ok(self.eigenvalues_hermitian()?.iter().map(|l| l.abs()).sum());
        }
        let anti = self.scale(Complex64::new(0.0, 1.0));
        if anti.is_numerically_hermitian() {
            return Ok(anti.eigenvalues_hermitian()?.iter().map(|l| l.abs()).sum());
        }
        Ok(self.singular_values()?.iter().sum())
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.sup() == 0.0 {
            return Ok(0.0);
        }
        if self.is_numerically_hermitian() {
            let ev = self.eigenvalues_hermitian()?;
            return Ok(ev.iter().fold(0.0, |m, l| m.max(l.abs())));
        }
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }

    /// Entrywise `sup |A - B|`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        self.same_space(other)?;
        let mut d: f64 = 0.0;
        Zip::from(&self.data).and(&other.data).for_each(|a, b| d = d.max((a - b).norm()));
        Ok(d)
    }
}

/// Dense complex product.
pub(crate) fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let c = to_faer(a) * to_faer(b);
    from_faer(&c)
}

/// Weighted inner product `<f, g> = sum f conj(g) dx`.
pub fn inner(f: &[Complex64], g: &[Complex64], grid: &SpaceGrid) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<Complex64>() * grid.spacing()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceGrid {
        SpaceGrid::new(4.0, 32).unwrap()
    }

    #[test]
    fn identity_trace_is_point_count() {
        let i = OperatorMatrix::identity(0.1, grid()).unwrap();
        assert_eq!(i.trace(), Complex64::new(32.0, 0.0));
        assert!((i.trace_norm().unwrap() - 32.0).abs() < 1e-10);
        assert!((i.operator_norm().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_projector() {
        let g = grid();
        let psi: Vec<Complex64> = (0..32)
            .map(|j| Complex64::new((-(g.node(j)).powi(2)).exp(), 0.3 * g.node(j)))
            .collect();
        let nrm = inner(&psi, &psi, &g).re.sqrt();
        let psi: Vec<_> = psi.iter().map(|c| c / nrm).collect();
        let p = OperatorMatrix::outer(0.1, g, &psi, &psi).unwrap().mark_positive().unwrap();
        assert!((p.trace().re - 1.0).abs() < 1e-12);
        assert!((p.trace_norm().unwrap() - 1.0).abs() < 1e-10);
        let p2 = p.matmul(&p).unwrap();
        assert!(p2.max_abs_diff(&p).unwrap() < 1e-12);
        assert!(p.apply(&psi).unwrap().iter().zip(&psi).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn non_hermitian_norms_use_svd() {
        let g = SpaceGrid::new(1.0, 4).unwrap();
        let mut d = Array2::zeros((4, 4));
        d[[0, 1]] = Complex64::new(3.0, 0.0);
        d[[2, 3]] = Complex64::new(0.0, 2.0);
        let a = OperatorMatrix::new(0.5, g, d).unwrap();
        assert!((a.trace_norm().unwrap() - 5.0).abs() < 1e-12);
        assert!((a.operator_norm().unwrap() - 3.0).abs() < 1e-12);
        assert!(a.clone().mark_hermitian().is_err());
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = OperatorMatrix::identity(0.1, grid()).unwrap();
        let b = OperatorMatrix::identity(0.2, grid()).unwrap();
        assert!(a.matmul(&b).is_err());
    }
}
