//! The tridiagonal coupling matrices that drive the nonlinear periodic
//! system, their exact integer factorisation `C = E·D`, and the spectral
//! data the solver needs: a simple positive spectrum, a chosen eigenvalue
//! λ with ω = √(B₀λ), and the nonresonance check that keeps the mode-wise
//! linear solves invertible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CMatrixError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The computed spectrum contradicts the guaranteed structure (real,
    /// positive, simple); this signals an implementation bug, not bad input.
    #[error("spectral structure violated: {0}")]
    LemmaViolation(String),
}

/// Coupling matrix of size m×m:
/// `C₁₁ = 2m`, `C_jj = 4(m−j+1)` for j ≥ 2, `C_{j,j−1} = −2(m−j+2)`,
/// `C_{j,j+1} = −2(m−j)`; `[2]` for m = 1.
pub fn build_c_matrix(m: usize) -> Result<DMatrix<i64>, CMatrixError> {
    if m == 0 {
        return Err(CMatrixError::InvalidArgument(
            "m must be a positive integer".into(),
        ));
    }
    let mi = m as i64;
    let mut c = DMatrix::<i64>::zeros(m, m);
    c[(0, 0)] = 2 * mi;
    for j in 2..=m {
        c[(j - 1, j - 1)] = 4 * (mi - j as i64 + 1);
        c[(j - 1, j - 2)] = -2 * (mi - j as i64 + 2);
    }
    for j in 1..m {
        c[(j - 1, j)] = -2 * (mi - j as i64);
    }
    Ok(c)
}

/// Factors of `C = E·D`: symmetric tridiagonal `E` (1 in the corner, 2 on
/// the rest of the diagonal, −1 off-diagonal) and the diagonal
/// `D_jj = 2(m−j+1)`.
pub fn build_e_d(m: usize) -> Result<(DMatrix<i64>, DVector<i64>), CMatrixError> {
    if m == 0 {
        return Err(CMatrixError::InvalidArgument(
            "m must be a positive integer".into(),
        ));
    }
    let mut e = DMatrix::<i64>::zeros(m, m);
    e[(0, 0)] = 1;
    for j in 1..m {
        e[(j, j)] = 2;
        e[(j, j - 1)] = -1;
        e[(j - 1, j)] = -1;
    }
    let d = DVector::from_iterator(m, (1..=m).map(|j| 2 * (m as i64 - j as i64 + 1)));
    Ok((e, d))
}

/// Exact integer determinant of the symmetric tridiagonal `E` via the
/// three-term continuant recursion.
pub fn det_e(e: &DMatrix<i64>) -> i64 {
    let m = e.nrows();
    let mut prev = 1i64; // det of the empty matrix
    let mut cur = e[(0, 0)];
    for k in 1..m {
        let off = e[(k, k - 1)];
        let next = e[(k, k)] * cur - off * off * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Determinant `D_N` of the N×N second-difference matrix (2 on the
/// diagonal, −1 off); equals N+1.
pub fn second_difference_det(n: usize) -> i64 {
    let mut f = DMatrix::<i64>::zeros(n, n);
    for j in 0..n {
        f[(j, j)] = 2;
        if j > 0 {
            f[(j, j - 1)] = -1;
            f[(j - 1, j)] = -1;
        }
    }
    det_e(&f)
}

/// Sorted eigen-decomposition of the coupling matrix.
///
/// `C = E·D` with `E` symmetric positive definite and `D` positive
/// diagonal, so `S = D^{1/2} E D^{1/2}` is symmetric with the same
/// spectrum; solving the symmetric problem guarantees a real spectrum and
/// the eigenvectors map back via `a = D^{−1/2} s`.
pub fn eigen_decompose(
    e: &DMatrix<i64>,
    d: &DVector<i64>,
) -> Result<(Vec<f64>, Vec<DVector<f64>>), CMatrixError> {
    let m = e.nrows();
    let ef = e.map(|x| x as f64);
    let sqrt_d = DVector::from_iterator(m, d.iter().map(|&x| (x as f64).sqrt()));
    let mut s = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            s[(i, j)] = sqrt_d[i] * ef[(i, j)] * sqrt_d[j];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(s);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for &idx in &order {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 0.0 {
            return Err(CMatrixError::LemmaViolation(format!(
                "non-positive eigenvalue {lambda}"
            )));
        }
        let mut a = DVector::from_iterator(
            m,
            eig.eigenvectors.column(idx).iter().zip(sqrt_d.iter()).map(|(s, sd)| s / sd),
        );
        a /= a.norm();
        if a[0] == 0.0 {
            return Err(CMatrixError::LemmaViolation(
                "eigenvector with vanishing first component".into(),
            ));
        }
        if a[0] < 0.0 {
            a = -a;
        }
        values.push(lambda);
        vectors.push(a);
    }
    let scale = values[m - 1];
    for k in 1..m {
        if values[k] - values[k - 1] <= 1e-10 * scale {
            return Err(CMatrixError::LemmaViolation(format!(
                "eigenvalues {} and {} not separated",
                values[k - 1],
                values[k]
            )));
        }
    }
    Ok((values, vectors))
}

/// Outcome of the nonresonance test `n²λ ≠ λ_j` (n ≥ 2, λ_j > λ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub satisfied: bool,
    /// `(n, j)` pairs with `|n²λ − λ_j| < 1e−6·λ_j` (close calls worth a look).
    pub near_resonances: Vec<(u32, usize)>,
}

/// Check `n²λ ≠ λ_j` for every integer n ≥ 2 and every eigenvalue
/// `λ_j > λ`; the n-range is finite because `n²λ ≤ λ_max` is required for
/// a hit. Equality is tested with relative tolerance `rtol`.
pub fn check_nonresonance(eigenvalues: &[f64], chosen: usize, rtol: f64) -> NonresonanceReport {
    let lambda = eigenvalues[chosen];
    let lambda_max = *eigenvalues.last().unwrap();
    let n_max = (lambda_max / lambda).sqrt().floor() as u32;
    let mut satisfied = true;
    let mut near = Vec::new();
    for n in 2..=n_max.max(1) {
        let target = (n as f64) * (n as f64) * lambda;
        for (j, &lj) in eigenvalues.iter().enumerate() {
            if lj <= lambda {
                continue;
            }
            let gap = (target - lj).abs();
            if gap <= rtol * lj {
                satisfied = false;
            }
            if gap < 1e-6 * lj {
                near.push((n, j));
            }
        }
    }
    NonresonanceReport {
        satisfied,
        near_resonances: near,
    }
}

/// The coupling matrix with its factorisation, spectral data, and the
/// frequency scale derived from the chosen eigenvalue.
#[derive(Debug, Clone)]
pub struct CMatrixBundle {
    pub m: usize,
    pub c: DMatrix<i64>,
    pub e: DMatrix<i64>,
    /// Diagonal of D.
    pub d: DVector<i64>,
    /// Ascending, all positive and simple.
    pub eigenvalues: Vec<f64>,
    /// Unit norm, first component > 0, same order as `eigenvalues`.
    pub eigenvectors: Vec<DVector<f64>>,
    pub chosen_index: usize,
    pub b0: f64,
    /// ω = √(B₀ λ).
    pub omega: f64,
    pub nonresonance: NonresonanceReport,
}

impl CMatrixBundle {
    /// Assemble the bundle for a given size, field scale and eigenvalue
    /// choice (`None` picks the largest eigenvalue, for which the
    /// nonresonance condition is vacuous).
    pub fn new(m: usize, b0: f64, eig_index: Option<usize>) -> Result<Self, CMatrixError> {
        if b0 <= 0.0 {
            return Err(CMatrixError::InvalidArgument("b0 must be positive".into()));
        }
        let c = build_c_matrix(m)?;
        let (e, d) = build_e_d(m)?;
        debug_assert_eq!(product_ed(&e, &d), c);
        let (eigenvalues, eigenvectors) = eigen_decompose(&e, &d)?;
        let chosen_index = eig_index.unwrap_or(m - 1);
        if chosen_index >= m {
            return Err(CMatrixError::InvalidArgument(format!(
                "eigenvalue index {chosen_index} out of range for m={m}"
            )));
        }
        let nonresonance = check_nonresonance(&eigenvalues, chosen_index, 1e-9);
        let omega = (b0 * eigenvalues[chosen_index]).sqrt();
        Ok(Self {
            m,
            c,
            e,
            d,
            eigenvalues,
            eigenvectors,
            chosen_index,
            b0,
            omega,
            nonresonance,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.eigenvalues[self.chosen_index]
    }

    /// Chosen unit eigenvector `a` with `a₁ > 0`.
    pub fn eigenvector(&self) -> &DVector<f64> {
        &self.eigenvectors[self.chosen_index]
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn c_f64(&self) -> DMatrix<f64> {
        self.c.map(|x| x as f64)
    }
}

/// `E·D` with D given as its diagonal.
pub fn product_ed(e: &DMatrix<i64>, d: &DVector<i64>) -> DMatrix<i64> {
    let m = e.nrows();
    DMatrix::from_fn(m, m, |i, j| e[(i, j)] * d[j])
}
