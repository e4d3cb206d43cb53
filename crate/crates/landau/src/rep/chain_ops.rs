//! The intertwining operators built from a potential chain and the
//! constructive eigenfunction they produce.
//!
//! With `Ẑ∓ = Π₁ ± iΠ₂` and a verified chain, the operators
//!
//! ```text
//! ℬ⁽⁰⁾ = Ẑ₋⁻¹(Ẑ₊Ẑ₋ + 𝒲⁽⁰⁾),
//! ℬ⁽ʲ⁾ = Ẑ₊ + Ẑ₋⁻¹𝒲⁽ʲ⁻¹⁾ − i((∂₁ − i∂₂) ln|𝒲⁽⁰⁾…𝒲⁽ʲ⁻¹⁾|)
//! ```
//!
//! satisfy `Ẑ₋ℬ⁽ʲ⁾Ψ = 𝒲⁽ʲ⁾Ψ` on the lowest level. For x₂-only chains the
//! logarithmic term is multiplication by `−Σ_{s≤j} u_s′(x₂)`. Applying the
//! product `Ẑ₋⁻¹𝒲⁽⁰⁾ … Ẑ₋⁻¹𝒲⁽ᵐ⁻¹⁾` to a lowest-level state and adding
//! lowest-level corrections chosen so that `(Ẑ₊Ẑ₋ + 𝒲⁽⁰⁾)Φ = 0` yields an
//! eigenfunction of `Ĥ_B + V` at the (m+1)-th Landau level.

use super::state::{ChannelState, Ladder};
use crate::chain::PotentialChain;
use crate::series::{PeriodicFn, SeriesError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenfunctionError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("least-squares solve failed")]
    LeastSquares,
    #[error(
        "kernel residual {residual:.3e} above {tol:.3e}; increase the level/channel truncation"
    )]
    TruncationInsufficient { residual: f64, tol: f64 },
    #[error("constructed state vanished (norm {norm:.3e})")]
    Degenerate { norm: f64 },
}

/// Apply `ℬ⁽ʲ⁾` (closed form) to a state; `j = 0..=m`.
pub fn b_chain_apply(j: usize, chain: &PotentialChain, state: &ChannelState) -> ChannelState {
    assert!(j <= chain.m, "chain index out of range");
    if j == 0 {
        let quad = state.ladder(Ladder::Minus).ladder(Ladder::Plus);
        return quad
            .add(&state.multiply_fn(&chain.w[0]))
            .ladder(Ladder::MinusInverse);
    }
    let raised = state.ladder(Ladder::Plus);
    let mixed = state
        .multiply_fn(&chain.w[j - 1])
        .ladder(Ladder::MinusInverse);
    // −Σ_{s=1..j} u_s′ as a multiplication operator
    let mut u_sum = PeriodicFn::zero(chain.u[0].omega());
    for us in chain.u.iter().take(j) {
        u_sum = u_sum.add(us);
    }
    let log_term = state.multiply_derivative(&u_sum, -1.0);
    raised.add(&mixed).add(&log_term)
}

/// Apply `ℬ⁽ʲ⁾` through the defining recursion
/// `ℬ⁽ʲ⁾ = (𝒲⁽ʲ⁻¹⁾)⁻¹ Ẑ₋ ℬ⁽ʲ⁻¹⁾ Ẑ₋⁻¹ 𝒲⁽ʲ⁻¹⁾`; a cross-check path for
/// the closed form.
pub fn b_chain_apply_recursive(
    j: usize,
    chain: &PotentialChain,
    state: &ChannelState,
) -> Result<ChannelState, SeriesError> {
    if j == 0 {
        return Ok(b_chain_apply(0, chain, state));
    }
    let m = chain.m;
    // 1/𝒲⁽ʲ⁻¹⁾ = −e^{−u_j} / (2B(m−j+1))
    let recip = chain.u[j - 1]
        .scale(-1.0)
        .exp()?
        .scale(-1.0 / (2.0 * chain.b * (m - j + 1) as f64));
    let inner = state
        .multiply_fn(&chain.w[j - 1])
        .ladder(Ladder::MinusInverse);
    let prev = b_chain_apply_recursive(j - 1, chain, &inner)?;
    Ok(prev.ladder(Ladder::Minus).multiply_fn(&recip))
}

/// `(Ẑ₊Ẑ₋ + 𝒲⁽⁰⁾)φ`, the kernel operator of the eigenfunction equation.
fn kernel_op(chain: &PotentialChain, state: &ChannelState) -> ChannelState {
    state
        .ladder(Ladder::Minus)
        .ladder(Ladder::Plus)
        .add(&state.multiply_fn(&chain.w[0]))
}

/// Product `Ẑ₋⁻¹𝒲⁽ᵃ⁾ Ẑ₋⁻¹𝒲⁽ᵃ⁺¹⁾ … Ẑ₋⁻¹𝒲⁽ᵇ⁾` applied to a state
/// (rightmost factor first).
fn chain_product(chain: &PotentialChain, a: usize, b: usize, state: &ChannelState) -> ChannelState {
    let mut t = state.clone();
    for idx in (a..=b).rev() {
        t = t.multiply_fn(&chain.w[idx]).ladder(Ladder::MinusInverse);
    }
    t
}

/// Constructed eigenfunction with its residual diagnostics.
#[derive(Debug)]
pub struct Eigenfunction {
    pub state: ChannelState,
    /// `‖(Ĥ_B + V − (2m+1)B)Φ‖ / ‖Φ‖`.
    pub rho: f64,
    /// `‖(Ẑ₊Ẑ₋ + 𝒲⁽⁰⁾)Φ‖ / ‖Φ‖` after the correction solve.
    pub kernel_residual: f64,
    /// Tail mass lost to truncation while building Φ.
    pub dropped_norm_sq: f64,
}

/// Build `Φ(Ψ)` from the seed `Ψ` = lowest level, central channel: the
/// leading chain term plus lowest-level corrections `Ψ_s` determined by a
/// least-squares solve of `(Ẑ₊Ẑ₋ + 𝒲⁽⁰⁾)Φ = 0` on the truncated basis.
pub fn build_eigenfunction(
    chain: &PotentialChain,
    k0: f64,
    n_max: usize,
    p_max: usize,
    tol: f64,
) -> Result<Eigenfunction, EigenfunctionError> {
    let m = chain.m;
    let omega = chain.v.omega();
    let b = chain.b;
    let seed = ChannelState::seed_level0(b, k0, omega, n_max, p_max);
    let lead = chain_product(chain, 0, m - 1, &seed);

    let channels = 2 * p_max + 1;
    let dim = (n_max + 1) * channels;
    let unknowns = m * channels;

    // columns: kernel image of each correction basis vector through its map
    let mut a = DMatrix::<Complex64>::zeros(dim, unknowns);
    for s in 0..m {
        for (ci, p) in (-(p_max as i32)..=p_max as i32).enumerate() {
            let mut basis = ChannelState::zeros(b, k0, omega, n_max, p_max);
            basis.set_amp(0, p, Complex64::new(1.0, 0.0));
            // L_s = Ẑ₋⁻¹𝒲⁽⁰⁾…Ẑ₋⁻¹𝒲⁽ᵐ⁻²⁻ˢ⁾, empty product for s = m−1
            let mapped = if s + 2 <= m {
                chain_product(chain, 0, m - 2 - s, &basis)
            } else {
                basis
            };
            let col = kernel_op(chain, &mapped).flatten();
            a.set_column(s * channels + ci, &col);
        }
    }
    let rhs = -kernel_op(chain, &lead).flatten();
    let svd = a.svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-13)
        .map_err(|_| EigenfunctionError::LeastSquares)?;

    // assemble Φ = lead + Σ_s L_s(Ψ_s)
    let mut phi = lead;
    for s in 0..m {
        let mut psi_s = ChannelState::zeros(b, k0, omega, n_max, p_max);
        for (ci, p) in (-(p_max as i32)..=p_max as i32).enumerate() {
            psi_s.set_amp(0, p, coeffs[s * channels + ci]);
        }
        let mapped = if s + 2 <= m {
            chain_product(chain, 0, m - 2 - s, &psi_s)
        } else {
            psi_s
        };
        phi = phi.add(&mapped);
    }

    let norm = phi.norm();
    if norm <= 1e-8 {
        return Err(EigenfunctionError::Degenerate { norm });
    }
    let kernel_residual = kernel_op(chain, &phi).norm() / norm;
    if kernel_residual > tol {
        return Err(EigenfunctionError::TruncationInsufficient {
            residual: kernel_residual,
            tol,
        });
    }
    let target = (2 * m + 1) as f64 * b;
    let rho = phi
        .hamiltonian(&chain.v)
        .sub(&phi.scale(Complex64::new(target, 0.0)))
        .norm()
        / norm;
    let dropped_norm_sq = phi.dropped_norm_sq;
    Ok(Eigenfunction {
        state: phi,
        rho,
        kernel_residual,
        dropped_norm_sq,
    })
}

/// Flatten helper exposed for the eigenfunction solve.
impl ChannelState {
    pub(crate) fn flatten(&self) -> DVector<Complex64> {
        let mut v = DVector::<Complex64>::zeros((self.n_max() + 1) * (2 * self.p_max() + 1));
        let mut i = 0;
        for p in -(self.p_max() as i32)..=self.p_max() as i32 {
            for n in 0..=self.n_max() {
                v[i] = self.amp(n, p);
                i += 1;
            }
        }
        v
    }
}
