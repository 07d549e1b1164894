use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVector = DVector<Complex64>;

/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix equal to its own conjugate transpose.
///
/// Construction symmetrizes the input exactly, so downstream code can rely on
/// `m[(i, j)] == m[(j, i)].conj()` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::domain(format!(
                "Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("Hermitian matrix has non-finite entries"));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::domain(format!(
                "matrix is not Hermitian (asymmetry {asym:e}, scale {scale:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let mut sym = (&m + m.adjoint()).map(|z| z * 0.5);
        for i in 0..sym.nrows() {
            sym[(i, i)].im = 0.0;
        }
        HermitianMatrix(sym)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(DMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        HermitianMatrix(DMatrix::from_diagonal_element(n, n, Complex64::new(scale, 0.0)))
    }

    /// `a a^H`
    pub fn rank_one(a: &ComplexVector) -> Self {
        Self::symmetrized(a * a.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianMatrix(self.0.map(|z| z * c))
    }

    /// `self + c · other`
    pub fn add_scaled(&self, other: &HermitianMatrix, c: f64) -> Self {
        let mut out = self.0.clone();
        out.zip_apply(&other.0, |a, b| *a += b * c);
        HermitianMatrix(out)
    }

    /// `self + c · I`
    pub fn add_identity(&self, c: f64) -> Self {
        let mut out = self.0.clone();
        for i in 0..out.nrows() {
            out[(i, i)].re += c;
        }
        HermitianMatrix(out)
    }

    /// `self += c · x x^H`, keeping the result exactly Hermitian.
    pub fn add_rank_one(&mut self, x: &ComplexVector, c: f64) {
        let n = self.dim();
        for j in 0..n {
            for i in j..n {
                let z = x[i] * x[j].conj() * c;
                self.0[(i, j)] += z;
                if i != j {
                    self.0[(j, i)] += z.conj();
                }
            }
            self.0[(j, j)].im = 0.0;
        }
    }

    pub fn mul_vec(&self, x: &ComplexVector) -> ComplexVector {
        &self.0 * x
    }

    /// Real eigenvalues (ascending) and the matching orthonormal eigenvectors
    /// as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    /// Tolerance used for positive-semidefiniteness checks: `1e-10 · trace`.
    pub fn psd_tolerance(&self) -> f64 {
        1e-10 * self.trace().abs()
    }

    pub fn is_psd(&self) -> bool {
        let tol = self.psd_tolerance();
        self.eigen().0.first().is_none_or(|&min| min >= -tol)
    }
}

/// Cholesky factorization of a Hermitian positive definite matrix, reusable
/// across many right-hand sides.
#[derive(Debug, Clone)]
pub struct HermitianSolver {
    chol: Cholesky<Complex64, Dyn>,
}

impl HermitianSolver {
    pub fn new(a: &HermitianMatrix) -> Result<Self> {
        let n = a.dim();
        let max_diag = a.0.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
        if max_diag <= 0.0 {
            return Err(Error::SingularMatrix);
        }
        let chol = Cholesky::new(a.0.clone()).ok_or(Error::SingularMatrix)?;
        let l = chol.l_dirty();
        let min_pivot = (0..n).map(|i| l[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
        if min_pivot <= n as f64 * f64::EPSILON * max_diag {
            return Err(Error::SingularMatrix);
        }
        Ok(HermitianSolver { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, b: &ComplexVector) -> ComplexVector {
        self.chol.solve(b)
    }
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn hermitian_solve(a: &HermitianMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    if b.len() != a.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: matrix is {n}x{n}, vector has {}",
            b.len(),
            n = a.dim()
        )));
    }
    Ok(HermitianSolver::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hpd(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let g = DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &g * g.adjoint() + DMatrix::from_diagonal_element(n, n, c(0.5, 0.0));
        HermitianMatrix::new(m).unwrap()
    }

    fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
        DVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Gauss-Jordan elimination with partial pivoting on the augmented system.
    fn elimination_oracle(a: &DMatrix<Complex64>, b: &ComplexVector) -> ComplexVector {
        let n = b.len();
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)]).chain(std::iter::once(b[i])).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
                .unwrap();
            m.swap(col, pivot);
            let p = m[col][col];
            for x in &mut m[col][col..] {
                *x /= p;
            }
            let pivot_row = m[col].clone();
            for (row, r) in m.iter_mut().enumerate() {
                if row != col {
                    let f = r[col];
                    for (x, q) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * q;
                    }
                }
            }
        }
        DVector::from_fn(n, |i, _| m[i][n])
    }

    #[test]
    fn identity_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_vector(5, &mut rng);
        let x = hermitian_solve(&HermitianMatrix::identity(5), &b).unwrap();
        assert!((x - &b).norm() <= 1e-15 * b.norm());
        let x = hermitian_solve(&HermitianMatrix::scaled_identity(5, 2.0), &b).unwrap();
        assert!((x - b.map(|z| z / 2.0)).norm() <= 1e-15 * b.norm());
    }

    #[test]
    fn random_hpd_matches_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_hpd(4, &mut rng);
            let b = random_vector(4, &mut rng);
            let x = hermitian_solve(&a, &b).unwrap();
            let oracle = elimination_oracle(a.as_matrix(), &b);
            assert!((&x - &oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
            assert!((a.mul_vec(&x) - &b).norm() <= 1e-10 * b.norm());
        }
    }

    fn matrix_with_condition(n: usize, cond: f64, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let (_, q) = random_hpd(n, rng).eigen();
        let diag = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(cond.powf(-(i as f64) / (n - 1) as f64), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        HermitianMatrix::new(&q * diag * q.adjoint()).unwrap()
    }

    #[test]
    fn residual_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            // moderate conditioning: plain relative residual
            let a = matrix_with_condition(12, 1e5, &mut rng);
            let b = random_vector(12, &mut rng);
            let x = hermitian_solve(&a, &b).unwrap();
            assert!((a.mul_vec(&x) - &b).norm() <= 1e-10 * b.norm());

            // condition number 1e8: normwise backward error
            let a = matrix_with_condition(12, 1e8, &mut rng);
            let x = hermitian_solve(&a, &b).unwrap();
            let r = (a.mul_vec(&x) - &b).norm();
            assert!(r <= 1e-10 * (a.as_matrix().norm() * x.norm() + b.norm()), "{r:e}");
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let v = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)]);
        let a = HermitianMatrix::rank_one(&v);
        let b = DVector::from_element(3, c(1.0, 0.0));
        assert_eq!(hermitian_solve(&a, &b), Err(Error::SingularMatrix));
        assert_eq!(
            hermitian_solve(&HermitianMatrix::zeros(3), &b),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]);
        assert!(HermitianMatrix::new(m).is_err());
        assert!(HermitianMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hpd(6, &mut rng);
        let (vals, vecs) = a.eigen();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = DMatrix::from_fn(6, 6, |i, j| if i == j { c(vals[i], 0.0) } else { c(0.0, 0.0) });
        let back = &vecs * d * vecs.adjoint();
        assert!((back - a.as_matrix()).norm() < 1e-12 * a.as_matrix().norm());
        assert!(a.is_psd());
    }
}
