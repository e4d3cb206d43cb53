//! The ordered chain of negative potentials 𝒲⁽⁰⁾…𝒲⁽ᵐ⁻¹⁾ built from the
//! solved periodic functions via `𝒲⁽ʲ⁻¹⁾ = −2B(m−j+1) e^{u_j}`, the
//! telescoping membership conditions that force the eigenvalue, and the
//! electric potential `V = 𝒲⁽⁰⁾ + 2Bm` with zero mean.
//!
//! Because every 𝒲 is a negative constant times `e^{u}`, the logarithm in
//! the conditions reduces to `Δ ln|𝒲⁽ˢ⁾| = u_{s+1}″`, so the residuals are
//! evaluated in exact series arithmetic with no logarithms at all.

use crate::cmatrix;
use crate::series::{PeriodicFn, SeriesError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Residuals and margins of the membership conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    /// Condition (b) residual bounds, one per j = 1..m−1.
    pub res_b: Vec<f64>,
    /// Condition (c) residual bound.
    pub res_c: f64,
    /// Negativity margins δ_j = −max_t 𝒲⁽ʲ⁾(t) over 1024 samples
    /// (condition (a)/(a1) quantified; all must be positive).
    pub margins: Vec<f64>,
    /// |mean 𝒲⁽ʲ⁾ + 2B(m−j)| per j.
    pub mean_errors: Vec<f64>,
    /// Mean value of V (should vanish).
    pub v0: f64,
    pub tol: f64,
    pub pass: bool,
}

/// The potential chain with its verification report.
#[derive(Debug, Clone)]
pub struct PotentialChain {
    pub m: usize,
    /// Effective field strength the chain certifies.
    pub b: f64,
    /// Source functions u_j (x₂-dependent).
    pub u: Vec<PeriodicFn>,
    /// 𝒲⁽ʲ⁾ for j = 0..m−1.
    pub w: Vec<PeriodicFn>,
    /// Electric potential V = 𝒲⁽⁰⁾ + 2Bm.
    pub v: PeriodicFn,
    pub report: ChainReport,
}

/// Assemble the chain from the solved functions: `𝒲⁽ʲ⁾ = −2B(m−j) e^{u_{j+1}}`
/// in series form, and `V = 𝒲⁽⁰⁾ + 2Bm`.
pub fn build_chain(u: &[PeriodicFn], b: f64) -> Result<PotentialChain, ChainError> {
    if u.is_empty() {
        return Err(ChainError::InvalidInput("empty chain input".into()));
    }
    if b <= 0.0 {
        return Err(ChainError::InvalidInput("field strength must be positive".into()));
    }
    let m = u.len();
    let mut w = Vec::with_capacity(m);
    for (idx, uj) in u.iter().enumerate() {
        let factor = -2.0 * b * (m - idx) as f64;
        w.push(uj.exp()?.scale(factor));
    }
    let v = w[0].add_constant(2.0 * b * m as f64);
    let report = verify_conditions_on(u, &w, &v, b, 1e-8);
    Ok(PotentialChain {
        m,
        b,
        u: u.to_vec(),
        w,
        v,
        report,
    })
}

/// Re-check the membership conditions at a caller-chosen tolerance.
pub fn verify_conditions(chain: &PotentialChain, tol: f64) -> ChainReport {
    verify_conditions_on(&chain.u, &chain.w, &chain.v, chain.b, tol)
}

fn verify_conditions_on(
    u: &[PeriodicFn],
    w: &[PeriodicFn],
    v: &PeriodicFn,
    b: f64,
    tol: f64,
) -> ChainReport {
    let m = u.len();
    let d2: Vec<PeriodicFn> = u.iter().map(|f| f.second_derivative()).collect();

    // condition (b): 𝒲⁽ʲ⁾ − 𝒲⁽⁰⁾ − 2Bj + Σ_{s<j} (j−s) u_{s+1}″ = 0
    let mut res_b = Vec::new();
    for j in 1..m {
        let mut r = w[j].sub(&w[0]).add_constant(-2.0 * b * j as f64);
        for (s, d) in d2.iter().enumerate().take(j) {
            r = r.add(&d.scale((j - s) as f64));
        }
        res_b.push(r.norm_l1());
    }
    // condition (c): 𝒲⁽⁰⁾ + 2Bm − Σ_s (m−s) u_{s+1}″ = 0
    let mut rc = w[0].add_constant(2.0 * b * m as f64);
    for (s, d) in d2.iter().enumerate() {
        rc = rc.sub(&d.scale((m - s) as f64));
    }
    let res_c = rc.norm_l1();

    let mut margins = Vec::with_capacity(m);
    let mut mean_errors = Vec::with_capacity(m);
    for (j, wj) in w.iter().enumerate() {
        let samples = 1024;
        let mut max = f64::NEG_INFINITY;
        for i in 0..samples {
            let t = i as f64 / samples as f64 * wj.period();
            max = max.max(wj.evaluate(t));
        }
        margins.push(-max);
        mean_errors.push((wj.mean() + 2.0 * b * (m - j) as f64).abs());
    }
    let v0 = v.mean();
    let pass = res_b.iter().all(|&r| r <= tol)
        && res_c <= tol
        && margins.iter().all(|&d| d > 0.0)
        && v0.abs() <= tol;
    ChainReport {
        res_b,
        res_c,
        margins,
        mean_errors,
        v0,
        tol,
        pass,
    }
}

/// Max residual bounds of the three equivalent displayed systems on the
/// same input, an independent check of the row-reduction equivalences.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SystemResiduals {
    /// Triangular-sum form (the membership conditions unfolded).
    pub cumulative_weighted: f64,
    /// Telescoped form with consecutive exponentials.
    pub telescoped: f64,
    /// Coupling-matrix form `−Δu_j = B Σ C_{jμ}(e^{u_μ}−1)`.
    pub coupled: f64,
}

pub(crate) fn residuals_weighted(
    u: &[PeriodicFn],
    b: f64,
) -> Result<Vec<PeriodicFn>, ChainError> {
    let m = u.len();
    let e: Vec<PeriodicFn> = u
        .iter()
        .map(|f| f.exp_remainder(0))
        .collect::<Result<_, _>>()?;
    let d2: Vec<PeriodicFn> = u.iter().map(|f| f.second_derivative()).collect();
    let mut out = Vec::with_capacity(m);
    for j in 1..=m {
        let mut lhs = PeriodicFn::zero(u[0].omega());
        if j < m {
            // −jΔu₁ − (j−1)Δu₂ − … − Δu_j
            for s in 1..=j {
                lhs = lhs.sub(&d2[s - 1].scale((j - s + 1) as f64));
            }
            let mut rhs = e[0].scale(2.0 * b * m as f64);
            rhs = rhs.sub(&e[j].scale(2.0 * b * (m - j) as f64));
            out.push(lhs.sub(&rhs));
        } else {
            for s in 1..=m {
                lhs = lhs.sub(&d2[s - 1].scale((m - s + 1) as f64));
            }
            let rhs = e[0].scale(2.0 * b * m as f64);
            out.push(lhs.sub(&rhs));
        }
    }
    Ok(out)
}

pub(crate) fn residuals_telescoped(
    u: &[PeriodicFn],
    b: f64,
) -> Result<Vec<PeriodicFn>, ChainError> {
    let m = u.len();
    let e: Vec<PeriodicFn> = u
        .iter()
        .map(|f| f.exp_remainder(0))
        .collect::<Result<_, _>>()?;
    let d2: Vec<PeriodicFn> = u.iter().map(|f| f.second_derivative()).collect();
    let mut out = Vec::with_capacity(m);
    for j in 1..=m {
        let mut lhs = PeriodicFn::zero(u[0].omega());
        for s in 1..=j {
            lhs = lhs.sub(&d2[s - 1]);
        }
        let rhs = if j == 1 && m == 1 {
            e[0].scale(2.0 * b)
        } else if j == 1 {
            e[0].scale(2.0 * b * m as f64)
                .sub(&e[1].scale(2.0 * b * (m - 1) as f64))
        } else if j < m {
            e[j - 1]
                .scale(2.0 * b * (m - j + 1) as f64)
                .sub(&e[j].scale(2.0 * b * (m - j) as f64))
        } else {
            e[m - 1].scale(2.0 * b)
        };
        out.push(lhs.sub(&rhs));
    }
    Ok(out)
}

pub(crate) fn residuals_coupled(u: &[PeriodicFn], b: f64) -> Result<Vec<PeriodicFn>, ChainError> {
    let m = u.len();
    let c = cmatrix::build_c_matrix(m)
        .map_err(|e| ChainError::InvalidInput(e.to_string()))?
        .map(|x| x as f64);
    let e: Vec<PeriodicFn> = u
        .iter()
        .map(|f| f.exp_remainder(0))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut r = u[j].second_derivative().scale(-1.0);
        for (mu, emu) in e.iter().enumerate() {
            r = r.sub(&emu.scale(b * c[(j, mu)]));
        }
        out.push(r);
    }
    Ok(out)
}

/// Evaluate all three systems on the same input and report the max
/// residual bound of each.
pub fn cross_check_systems(u: &[PeriodicFn], b: f64) -> Result<SystemResiduals, ChainError> {
    let max_norm = |rs: &[PeriodicFn]| rs.iter().map(|r| r.norm_l1()).fold(0.0, f64::max);
    Ok(SystemResiduals {
        cumulative_weighted: max_norm(&residuals_weighted(u, b)?),
        telescoped: max_norm(&residuals_telescoped(u, b)?),
        coupled: max_norm(&residuals_coupled(u, b)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::CMatrixBundle;
    use crate::family;
    use approx::assert_abs_diff_eq;

    fn solved_chain(m: usize, eps: f64) -> (PotentialChain, CMatrixBundle) {
        let bundle = CMatrixBundle::new(m, 1.0, None).unwrap();
        let sol = family::iterate_family(eps, &bundle, 1e-13, 80).unwrap();
        (build_chain(&sol.v, sol.b_eff).unwrap(), bundle)
    }

    #[test]
    fn constant_case_m1() {
        let omega = 1.0;
        let u = vec![PeriodicFn::zero(omega)];
        let chain = build_chain(&u, 1.0).unwrap();
        assert_eq!(chain.w[0].coeffs(), &[-2.0]);
        assert!(chain.v.is_zero());
        assert_eq!(chain.report.res_c, 0.0);
        assert!(chain.report.pass);
    }

    #[test]
    fn zero_u_chain_has_exact_constants() {
        let omega = 0.7;
        let m = 3;
        let u = vec![PeriodicFn::zero(omega); m];
        let chain = build_chain(&u, 2.0).unwrap();
        for (j, wj) in chain.w.iter().enumerate() {
            assert_eq!(wj.coeffs(), &[-2.0 * 2.0 * (m - j) as f64]);
        }
        assert_eq!(chain.report.res_c, 0.0);
        for r in &chain.report.res_b {
            assert_eq!(*r, 0.0);
        }
    }

    #[test]
    fn m1_potential_matches_closed_form() {
        // V = 2B(1 − e^{u}) for the scalar case
        let (chain, _) = solved_chain(1, 0.1);
        let b = chain.b;
        let closed = chain.u[0].exp().unwrap().scale(-2.0 * b).add_constant(2.0 * b);
        assert!(chain.v.sub(&closed).norm_l1() <= 1e-14);
    }

    #[test]
    fn m1_condition_c_is_the_scalar_equation() {
        let (chain, _) = solved_chain(1, 0.1);
        // ‖𝒲⁰ + 2B − u″‖ = ‖−2B(e^u−1) − u″‖ → 0 iff the scalar equation holds
        let direct = chain.u[0]
            .exp()
            .unwrap()
            .scale(-2.0 * chain.b)
            .add_constant(2.0 * chain.b)
            .sub(&chain.u[0].second_derivative());
        assert_abs_diff_eq!(chain.report.res_c, direct.norm_l1(), epsilon = 1e-15);
        assert!(chain.report.res_c <= 1e-8);
    }

    #[test]
    fn solver_chain_m2_passes_conditions() {
        let (chain, _) = solved_chain(2, 0.05);
        assert!(chain.report.pass);
        assert!(chain.report.res_b[0] <= 1e-8);
        assert!(chain.report.res_c <= 1e-8);
        for err in &chain.report.mean_errors {
            assert!(*err <= 1e-9);
        }
        assert!(chain.report.v0.abs() <= 1e-10);
    }

    #[test]
    fn negativity_margins_comfortable() {
        let (chain, _) = solved_chain(2, 0.05);
        for (j, margin) in chain.report.margins.iter().enumerate() {
            assert!(*margin >= chain.b * (chain.m - j) as f64);
        }
    }

    #[test]
    fn systems_agree_on_converged_solution() {
        let (chain, _) = solved_chain(3, 0.05);
        let res = cross_check_systems(&chain.u, chain.b).unwrap();
        assert!(res.cumulative_weighted <= 1e-8);
        assert!(res.telescoped <= 1e-8);
        assert!(res.coupled <= 1e-8);
        let triple = [res.cumulative_weighted, res.telescoped, res.coupled];
        let max = triple.iter().cloned().fold(0.0, f64::max);
        let min = triple.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max <= 10.0 * min.max(1e-14));
    }

    #[test]
    fn systems_vanish_on_zero_input() {
        let u = vec![PeriodicFn::zero(1.0); 2];
        let res = cross_check_systems(&u, 1.0).unwrap();
        assert_eq!(res.cumulative_weighted, 0.0);
        assert_eq!(res.telescoped, 0.0);
        assert_eq!(res.coupled, 0.0);
    }

    #[test]
    fn row_operations_connect_the_systems() {
        // telescoped_j = weighted_j − weighted_{j−1}, coupled_j likewise
        let omega = 0.9;
        let u: Vec<PeriodicFn> = (0..3)
            .map(|k| {
                PeriodicFn::new(
                    omega,
                    vec![0.01 * (k as f64 + 1.0), 0.02, -0.015, 0.005 * k as f64],
                )
            })
            .collect();
        let b = 1.3;
        let r04 = residuals_weighted(&u, b).unwrap();
        let r06 = residuals_telescoped(&u, b).unwrap();
        let r07 = residuals_coupled(&u, b).unwrap();
        for j in 0..3 {
            let expect06 = if j == 0 {
                r04[0].clone()
            } else {
                r04[j].sub(&r04[j - 1])
            };
            assert!(r06[j].sub(&expect06).norm_l1() <= 1e-12);
            let expect07 = if j == 0 {
                r06[0].clone()
            } else {
                r06[j].sub(&r06[j - 1])
            };
            assert!(r07[j].sub(&expect07).norm_l1() <= 1e-12);
        }
    }

    #[test]
    fn rejects_empty_input() {
        assert!(matches!(
            build_chain(&[], 1.0),
            Err(ChainError::InvalidInput(_))
        ));
    }
}
