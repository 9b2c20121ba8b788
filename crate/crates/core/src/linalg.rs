//! Small dense linear algebra: induced norms, spectral radius, Schur tests,
//! discrete Lyapunov solving and SPD inverse square roots.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. The plants handled by
//! this crate are tiny (a few dozen states at most), so the Lyapunov solver
//! vectorizes the equation and solves the dense Kronecker system directly.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// Builds a matrix from row slices. Panics on ragged input; meant for
/// literals in code and tests.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == n_cols), "ragged matrix literal");
    Matrix::from_fn(n_rows, n_cols, |i, j| rows[i][j])
}

pub fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_nonempty(m: &Matrix) -> Result<()> {
    if m.is_empty() {
        Err(Error::Dimension("empty matrix".into()))
    } else {
        Ok(())
    }
}

fn ensure_square(m: &Matrix) -> Result<()> {
    ensure_nonempty(m)?;
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!("expected square matrix, got {}x{}", m.nrows(), m.ncols())))
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Induced 1-norm: maximum absolute column sum.
pub fn induced_norm_1(m: &Matrix) -> Result<f64> {
    ensure_nonempty(m)?;
    Ok(m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Induced infinity-norm: maximum absolute row sum.
pub fn induced_norm_inf(m: &Matrix) -> Result<f64> {
    ensure_nonempty(m)?;
    Ok(m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Induced 2-norm (largest singular value).
pub fn induced_norm_2(m: &Matrix) -> Result<f64> {
    ensure_nonempty(m)?;
    ensure_finite(m, "matrix")?;
    Ok(m.singular_values().max())
}

/// Eigenvalues of a real square matrix, via the real Schur form.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    ensure_square(m)?;
    ensure_finite(m, "matrix")?;
    if m.nrows() == 1 {
        return Ok(vec![Complex::new(m[(0, 0)], 0.0)]);
    }
    let schur = Schur::try_new(m.clone(), SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::EigenNotConverged)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Maximum eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `true` iff the spectral radius is below `1 - tol`.
pub fn is_schur_stable(m: &Matrix, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be nonnegative, got {tol}")));
    }
    Ok(spectral_radius(m)? < 1.0 - tol)
}

/// Numerical rank: number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<Complex<f64>>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let sigma_max = sv.max();
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * sigma_max).count()
}

pub fn matrix_power(m: &Matrix, k: usize) -> Matrix {
    let mut acc = Matrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

fn max_asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn ensure_symmetric(m: &Matrix, what: &str) -> Result<()> {
    let scale = max_abs(m).max(1.0);
    if max_asymmetry(m) > 1e-9 * scale {
        return Err(Error::InvalidInput(format!("{what} is not symmetric")));
    }
    Ok(())
}

/// Residual `Z - F Z F^T - W`.
pub fn lyapunov_residual(f: &Matrix, w: &Matrix, z: &Matrix) -> Matrix {
    z - f * z * f.transpose() - w
}

/// Solves `Z = F Z F^T + W` for Schur-stable `F`.
///
/// Uses `vec(Z) = (I - F ⊗ F)^{-1} vec(W)` followed by one step of iterative
/// refinement; the returned `Z` is symmetrized.
pub fn solve_discrete_lyapunov(f: &Matrix, w: &Matrix) -> Result<Matrix> {
    ensure_square(f)?;
    ensure_finite(f, "lyapunov dynamics")?;
    ensure_finite(w, "lyapunov forcing")?;
    let n = f.nrows();
    if w.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "forcing term is {}x{}, dynamics are {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    ensure_symmetric(w, "lyapunov forcing term")?;
    let rho = spectral_radius(f)?;
    if rho >= 1.0 {
        return Err(Error::Instability { spectral_radius: rho });
    }

    let system = Matrix::identity(n * n, n * n) - f.kronecker(f);
    let lu = system.lu();
    let rhs = Vector::from_column_slice(w.as_slice());
    let mut vec_z = lu
        .solve(&rhs)
        .ok_or(Error::Singular { min_eigenvalue: 0.0 })?;

    let z = Matrix::from_column_slice(n, n, vec_z.as_slice());
    let r = lyapunov_residual(f, w, &z);
    if let Some(corr) = lu.solve(&Vector::from_column_slice(r.as_slice())) {
        vec_z -= corr;
    }
    Ok(symmetrize(&Matrix::from_column_slice(n, n, vec_z.as_slice())))
}

/// Returns `R = S^{-1/2}` for symmetric positive definite `S`.
pub fn spd_inverse_sqrt(s: &Matrix) -> Result<Matrix> {
    ensure_square(s)?;
    ensure_finite(s, "matrix")?;
    ensure_symmetric(s, "matrix")?;
    let eig = SymmetricEigen::new(symmetrize(s));
    let max_ev = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min_ev = eig.eigenvalues.min();
    if min_ev <= 1e-12 * max_ev.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular { min_eigenvalue: min_ev });
    }
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let r = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    Ok(symmetrize(&r))
}
