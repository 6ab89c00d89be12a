//! Dense complex matrices and the small amount of linear algebra the
//! simulation needs on top of `nalgebra`.

use faer::Side;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{RevivalError, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Tolerance used when validating Hermiticity of freshly built operators.
pub const HERMITIAN_TOL: f64 = 1e-12;


/// Whether an [`Operator`] is known to be Hermitian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    General,
}

/// Dense square operator with its dimension and symmetry class.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    symmetry: Symmetry,
}

impl Operator {
    /// Wraps a matrix, checking `m[i][j] == conj(m[j][i])` within
    /// [`HERMITIAN_TOL`].
    pub fn hermitian(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(RevivalError::InvariantViolation(format!(
                "matrix is not Hermitian (max deviation {dev:e})"
            )));
        }
        Ok(Self { matrix, symmetry: Symmetry::Hermitian })
    }

    pub fn general(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        Ok(Self { matrix, symmetry: Symmetry::General })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_hermitian(&self) -> bool {
        self.symmetry == Symmetry::Hermitian
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator { matrix: self.matrix.adjoint(), symmetry: self.symmetry }
    }

    /// `self * v` for a plain amplitude slice.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(RevivalError::DimensionMismatch { expected: self.dim(), actual: v.len() });
        }
        let x = DVector::from_column_slice(v);
        Ok((&self.matrix * x).as_slice().to_vec())
    }

    /// `<v|self|v>`.
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let w = self.apply(v)?;
        Ok(inner(v, &w))
    }

    /// Product of two operators; symmetry is not preserved in general.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(RevivalError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(Operator { matrix: &self.matrix * &other.matrix, symmetry: Symmetry::General })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(RevivalError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Operator { matrix: m, symmetry: Symmetry::General })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(RevivalError::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
    }
    Ok(())
}

pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `<a|b>` (conjugate-linear in the first argument).
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Euclidean distance between two amplitude vectors.
pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) -> f64 {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

/// Eigendecomposition of a Hermitian operator, `H = V diag(E) V^dagger`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn of(op: &Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(RevivalError::InvariantViolation(
                "eigendecomposition requested for a non-Hermitian operator".into(),
            ));
        }
        let m = op.matrix();
        let n = m.nrows();
        let eig = faer::Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)])
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| RevivalError::InvariantViolation(format!("eigendecomposition failed: {e:?}")))?;
        let u = eig.U();
        let values = eig.S().column_vector().iter().map(|x| x.re).collect();
        Ok(Self { values, vectors: DMatrix::from_fn(n, n, |i, j| u[(i, j)]) })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i t H) v`.
    pub fn propagate(&self, v: &[C64], t: f64) -> Vec<C64> {
        self.apply_phase(v, -t)
    }

    /// `exp(i theta H) v`.
    pub fn exp_i(&self, v: &[C64], theta: f64) -> Vec<C64> {
        self.apply_phase(v, theta)
    }

    fn apply_phase(&self, v: &[C64], s: f64) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        let mut c = self.vectors.ad_mul(&x);
        for (ck, &e) in c.iter_mut().zip(&self.values) {
            *ck *= C64::from_polar(1.0, s * e);
        }
        (&self.vectors * c).as_slice().to_vec()
    }

    /// Sorted copy of the eigenvalues.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `ln k!` for `k = 0..=max`, built by cumulative sums of `ln k` so that
/// arguments in the thousands never overflow.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn ln_fact(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`.
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_factorials_match_direct_product() {
        let lf = LogFactorials::new(20);
        let mut f = 1.0f64;
        for k in 1..=20 {
            f *= k as f64;
            assert!((lf.ln_fact(k) - f.ln()).abs() < 1e-12);
        }
        assert!((lf.ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let lf = LogFactorials::new(20_000);
        assert!(lf.ln_binomial(20_000, 10_000).is_finite());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0., 0.), C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.)]);
        assert!(Operator::hermitian(m.clone()).is_err());
        assert!(Operator::general(m).is_ok());
    }

    #[test]
    fn spectrum_propagation_is_unitary() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1., 0.), C64::new(0.3, -0.2), C64::new(0.3, 0.2), C64::new(-0.5, 0.)],
        );
        let op = Operator::hermitian(m).unwrap();
        let sp = Spectrum::of(&op).unwrap();
        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let w = sp.propagate(&v, 3.7);
        assert!((norm_sq(&w) - 1.0).abs() < 1e-14);
        let back = sp.exp_i(&w, 3.7);
        assert!(distance(&back, &v) < 1e-13);
    }
}
