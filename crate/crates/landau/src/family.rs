//! Fixed-point construction of the solution family of the nonlinear
//! periodic system
//!
//! ```text
//! −v_j″ = B₀(1+ε²τ(ε)) Σ_μ C_{jμ} (e^{v_μ} − 1),   j = 1..m,
//! ```
//!
//! in the form `v_j = ε a_j w_* + ε² w_j + ε³ b_j w_*` with `w_j ∈ 𝔏(𝕐′)`
//! (no ±ω modes) and `(b, a) = 0`. Projecting the system onto the ±ω modes
//! and their complement splits it into a bordered m+1 linear solve for
//! `(τ, b)` and a mode-wise off-resonant linear solve for `w`, coupled
//! through exponential remainder terms of order ε; iterating this map
//! contracts for small ε.
//!
//! The remainders are evaluated cancellation-free: powers of `v` are kept
//! as exact polynomials in ε with series coefficients, so dividing by ε³
//! or ε⁴ is a coefficient shift, valid at ε = 0, and only the exponential
//! tail beyond the cubic term is summed numerically.

use crate::cmatrix::CMatrixBundle;
use crate::series::{PeriodicFn, SeriesError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("mode n = {n} is resonant for the chosen eigenvalue (gap ratio {gap:.3e})")]
    Resonance { n: usize, gap: f64 },
    #[error("bordered system unexpectedly singular or inaccurate (residual {residual:.3e})")]
    SingularBordered { residual: f64 },
    #[error("no contraction at epsilon = {epsilon} (three consecutive increment ratios ≥ 1)")]
    NoContraction { epsilon: f64 },
    #[error("no convergence within {max_iter} iterations (last increment {delta:.3e})")]
    MaxIterations { max_iter: usize, delta: f64 },
}

/// ε-independent leading data of the family.
#[derive(Debug, Clone)]
pub struct LeadingTerms {
    /// 𝕎_j, the ε² coefficient of w at leading order (in 𝔏(𝕐′)).
    pub w_lead: Vec<PeriodicFn>,
    /// 𝕎̃_j, source of the leading bordered solve.
    pub w_tilde: Vec<PeriodicFn>,
    /// Pairings (1/2T)(w_*, 𝕎̃_j) feeding the bordered solve.
    pub f0: DVector<f64>,
    pub tau0: f64,
    pub b0: DVector<f64>,
}

/// Converged family member at one ε.
#[derive(Debug, Clone)]
pub struct FamilySolution {
    pub epsilon: f64,
    pub tau: f64,
    /// Correction vector with (b, a) = 0.
    pub b: DVector<f64>,
    /// w_j ∈ 𝔏(𝕐′).
    pub w: Vec<PeriodicFn>,
    /// v_j = ε a_j w_* + ε² w_j + ε³ b_j w_*.
    pub v: Vec<PeriodicFn>,
    /// Effective field strength B₀(1 + ε²τ).
    pub b_eff: f64,
    pub iterations: usize,
    pub final_delta: f64,
    /// Increment after each iteration (for contraction diagnostics).
    pub increments: Vec<f64>,
}

/// `(1/2T)(w_*, f)` — the cos ωt coefficient halved.
fn pair_w_star(f: &PeriodicFn) -> f64 {
    0.5 * f.coeff(1)
}

/// Unique `G ∈ 𝔏(𝕐′)^m` with `−G_j″ − B₀ Σ C_{jμ} G_μ = B₀ F_j`, solved
/// mode by mode: `(n²ω² I − B₀C) g⁽ⁿ⁾ = B₀ f⁽ⁿ⁾` for every n ≠ 1.
pub fn linear_offresonant_solve(
    fs: &[PeriodicFn],
    bundle: &CMatrixBundle,
) -> Result<Vec<PeriodicFn>, FamilyError> {
    let m = bundle.m;
    assert_eq!(fs.len(), m);
    for (j, f) in fs.iter().enumerate() {
        if f.coeff(1).abs() > 1e-12 * (1.0 + f.norm_l1()) {
            return Err(FamilyError::InvalidInput(format!(
                "input {j} has a ±ω mode (c1 = {})",
                f.coeff(1)
            )));
        }
    }
    let omega2 = bundle.omega * bundle.omega;
    let b0 = bundle.b0;
    let c = bundle.c_f64();
    let n_max = fs.iter().map(|f| f.order()).max().unwrap_or(0);
    let mut out = vec![vec![0.0; n_max + 1]; m];
    for n in 0..=n_max {
        if n == 1 {
            continue;
        }
        let shift = (n * n) as f64 * omega2;
        // distance of n²ω² to the spectrum of B₀C decides solvability
        let (mut gap_min, mut gap_max) = (f64::INFINITY, 0.0f64);
        for &lam in &bundle.eigenvalues {
            let gap = (shift - b0 * lam).abs();
            gap_min = gap_min.min(gap);
            gap_max = gap_max.max(gap.max(shift));
        }
        if gap_min <= 1e-12 * gap_max {
            return Err(FamilyError::Resonance {
                n,
                gap: gap_min / gap_max,
            });
        }
        let a = DMatrix::<f64>::identity(m, m) * shift - &c * b0;
        let rhs = DVector::from_iterator(m, fs.iter().map(|f| b0 * f.coeff(n)));
        if rhs.amax() == 0.0 {
            continue;
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or(FamilyError::Resonance { n, gap: 0.0 })?;
        for j in 0..m {
            out[j][n] = sol[j];
        }
    }
    Ok(out
        .into_iter()
        .map(|coeffs| PeriodicFn::new(bundle.omega, coeffs))
        .collect())
}

/// Unique `(τ, b)` with `(b, a) = 0` and
/// `(ω²I − B₀C) b − τω²a = B₀ f`, assembled as one bordered
/// (m+1)×(m+1) solve whose last row carries the orthogonality constraint.
pub fn bordered_solve(
    f: &DVector<f64>,
    bundle: &CMatrixBundle,
) -> Result<(f64, DVector<f64>), FamilyError> {
    let m = bundle.m;
    assert_eq!(f.len(), m);
    let omega2 = bundle.omega * bundle.omega;
    let a = bundle.eigenvector();
    let c = bundle.c_f64();
    let mut sys = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            sys[(i, j)] = -bundle.b0 * c[(i, j)];
        }
        sys[(i, i)] += omega2;
        sys[(i, m)] = -omega2 * a[i];
        sys[(m, i)] = a[i];
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    for i in 0..m {
        rhs[i] = bundle.b0 * f[i];
    }
    let sol = sys
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(FamilyError::SingularBordered { residual: f64::INFINITY })?;
    let residual = (&sys * &sol - &rhs).amax();
    let tol = 1e-12 * (f.amax() + 1.0) * (omega2 + bundle.b0);
    if residual > tol {
        return Err(FamilyError::SingularBordered { residual });
    }
    let b = DVector::from_iterator(m, sol.iter().take(m).copied());
    Ok((sol[m], b))
}

/// Leading terms: 𝕎 from the off-resonant solve of `½(Ca²)_μ w_*²`,
/// 𝕎̃ by series products, and `(τ⁰, b⁰)` from the bordered solve of the
/// w_*-pairings of 𝕎̃.
pub fn leading_terms(bundle: &CMatrixBundle) -> Result<LeadingTerms, FamilyError> {
    let m = bundle.m;
    let a = bundle.eigenvector();
    let c = bundle.c_f64();
    let w_star = PeriodicFn::w_star(bundle.omega);
    let w_star_sq = w_star.mul(&w_star)?;
    let w_star_cu = w_star_sq.mul(&w_star)?;

    let mut sources = Vec::with_capacity(m);
    for mu in 0..m {
        let coupling: f64 = (0..m).map(|nu| c[(mu, nu)] * a[nu] * a[nu]).sum();
        sources.push(w_star_sq.scale(0.5 * coupling));
    }
    let w_lead = linear_offresonant_solve(&sources, bundle)?;

    let mut w_tilde = Vec::with_capacity(m);
    for j in 0..m {
        let mut t = PeriodicFn::zero(bundle.omega);
        for mu in 0..m {
            t = t.add(&w_star.mul(&w_lead[mu])?.scale(c[(j, mu)] * a[mu]));
        }
        let cubic: f64 = (0..m).map(|mu| c[(j, mu)] * a[mu].powi(3)).sum();
        t = t.add(&w_star_cu.scale(cubic / 6.0));
        w_tilde.push(t);
    }
    let f0 = DVector::from_iterator(m, w_tilde.iter().map(pair_w_star));
    let (tau0, b0) = bordered_solve(&f0, bundle)?;
    Ok(LeadingTerms {
        w_lead,
        w_tilde,
        f0,
        tau0,
        b0,
    })
}

/// Polynomial in ε with series coefficients.
struct EpsPoly {
    omega: f64,
    terms: Vec<PeriodicFn>,
}

impl EpsPoly {
    fn zero(omega: f64, degree: usize) -> Self {
        Self {
            omega,
            terms: vec![PeriodicFn::zero(omega); degree + 1],
        }
    }

    fn slot_mut(&mut self, k: usize) -> &mut PeriodicFn {
        &mut self.terms[k]
    }

    fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let mut out = Self::zero(self.omega, self.terms.len() + other.terms.len() - 2);
        for (i, f) in self.terms.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            for (j, g) in other.terms.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                let p = f.mul(g)?;
                out.terms[i + j] = out.terms[i + j].add(&p);
            }
        }
        Ok(out)
    }

    fn add_scaled(&mut self, other: &Self, s: f64) {
        if self.terms.len() < other.terms.len() {
            self.terms
                .resize(other.terms.len(), PeriodicFn::zero(self.omega));
        }
        for (k, g) in other.terms.iter().enumerate() {
            self.terms[k] = self.terms[k].add(&g.scale(s));
        }
    }

    /// `self += s · ε^shift · other`.
    fn add_shifted_scaled(&mut self, other: &Self, shift: usize, s: f64) {
        let need = other.terms.len() + shift;
        if self.terms.len() < need {
            self.terms.resize(need, PeriodicFn::zero(self.omega));
        }
        for (k, g) in other.terms.iter().enumerate() {
            self.terms[k + shift] = self.terms[k + shift].add(&g.scale(s));
        }
    }
}

/// Exponential remainders of the projected system at the current iterate.
///
/// Returns the cos ωt coefficients of the ±ω-mode remainder (one real
/// number per component) and the full complementary-mode remainder
/// functions, each in 𝔏(𝕐′). Everything divisible by ε³ / ε⁴ is divided
/// symbolically, so the result is finite and exact also at ε = 0.
pub fn remainders(
    epsilon: f64,
    tau: f64,
    b: &DVector<f64>,
    w: &[PeriodicFn],
    bundle: &CMatrixBundle,
) -> Result<(Vec<f64>, Vec<PeriodicFn>), FamilyError> {
    let m = bundle.m;
    let a = bundle.eigenvector();
    let c = bundle.c_f64();
    let omega = bundle.omega;
    let w_star = PeriodicFn::w_star(omega);
    let w_star_cu = w_star.mul(&w_star)?.mul(&w_star)?;

    // per-component cubic polynomial of v_μ in ε and its powers
    let mut poly = Vec::with_capacity(m);
    let mut amp = Vec::with_capacity(m); // A_μ = a_μ w_*
    for mu in 0..m {
        let a_mu = w_star.scale(a[mu]);
        let mut v = EpsPoly::zero(omega, 3);
        *v.slot_mut(1) = a_mu.clone();
        *v.slot_mut(2) = w[mu].clone();
        *v.slot_mut(3) = w_star.scale(b[mu]);
        let v2 = v.mul(&v)?;
        let v3 = v2.mul(&v)?;
        let mut p = EpsPoly::zero(omega, v3.terms.len() - 1);
        p.add_scaled(&v, 1.0);
        p.add_scaled(&v2, 0.5);
        p.add_scaled(&v3, 1.0 / 6.0);
        poly.push(p);
        amp.push(a_mu);
    }

    // exponential tails: T4_μ = Σ_{i≥4} ε^{i−4} p_μ^i / i!  with
    // p_μ = A_μ + ε w_μ + ε² b_μ w_*  evaluated at the numeric ε
    let mut tail = Vec::with_capacity(m);
    for mu in 0..m {
        let p = amp[mu]
            .add(&w[mu].scale(epsilon))
            .add(&w_star.scale(b[mu] * epsilon * epsilon));
        let mut term = p.mul(&p)?.mul(&p)?.mul(&p)?.scale(1.0 / 24.0);
        let mut sum = term.clone();
        let mut i = 4usize;
        loop {
            i += 1;
            term = term.mul(&p)?.scale(epsilon / i as f64);
            let inc = term.norm_l1();
            sum = sum.add(&term);
            if inc < 1e-16 {
                break;
            }
            if i > 500 {
                return Err(SeriesError::Divergence {
                    max_terms: 500,
                    increment: inc,
                }
                .into());
            }
        }
        tail.push(sum);
    }

    let one_plus = 1.0 + epsilon * epsilon * tau;
    let mut f0 = Vec::with_capacity(m);
    let mut f1 = Vec::with_capacity(m);
    for j in 0..m {
        // bracket_j = (1 + τε²) Σ_μ C_{jμ} (v + v²/2 + v³/6)_μ  minus the
        // explicit terms of the projected system up to order ε³
        let mut base = EpsPoly::zero(omega, 0);
        for mu in 0..m {
            base.add_scaled(&poly[mu], c[(j, mu)]);
        }
        let mut bracket = EpsPoly::zero(omega, base.terms.len() + 1);
        bracket.add_scaled(&base, 1.0);
        bracket.add_shifted_scaled(&base, 2, tau);

        let ca: f64 = (0..m).map(|mu| c[(j, mu)] * a[mu]).sum();
        let cb: f64 = (0..m).map(|mu| c[(j, mu)] * b[mu]).sum();
        let ca3: f64 = (0..m).map(|mu| c[(j, mu)] * a[mu].powi(3)).sum();

        // ε¹: Σ C a_μ w_*
        let s1 = w_star.scale(ca);
        // ε²: Σ C w_μ + ½ Σ C a_μ² w_*²
        let mut s2 = PeriodicFn::zero(omega);
        for mu in 0..m {
            s2 = s2.add(&w[mu].scale(c[(j, mu)]));
            s2 = s2.add(&amp[mu].mul(&amp[mu])?.scale(0.5 * c[(j, mu)]));
        }
        // ε³ (±ω part only): (ΣCb + τΣCa) w_* + Σ C a_μ P_Y(w_* w_μ) + (1/6) Σ C a³ P_Y(w_*³)
        let mut s3 = w_star.scale(cb + tau * ca);
        for mu in 0..m {
            s3 = s3.add(&w_star.mul(&w[mu])?.project_y().scale(c[(j, mu)] * a[mu]));
        }
        s3 = s3.add(&w_star_cu.project_y().scale(ca3 / 6.0));

        *bracket.slot_mut(1) = bracket.terms[1].sub(&s1);
        *bracket.slot_mut(2) = bracket.terms[2].sub(&s2);
        *bracket.slot_mut(3) = bracket.terms[3].sub(&s3);

        // orders 0..2 and the ±ω part of order 3 cancel identically;
        // anything left is roundoff from the subtractions above
        let scale = 1.0 + bracket.terms.iter().map(|t| t.norm_l1()).fold(0.0, f64::max);
        for k in 0..=2 {
            let junk = bracket.terms[k].norm_l1();
            assert!(
                junk <= 1e-11 * scale,
                "order-{k} term failed to cancel: {junk:.3e}"
            );
        }
        let junk_y3 = bracket.terms[3].coeff(1).abs();
        assert!(junk_y3 <= 1e-11 * scale, "±ω part of order 3 failed to cancel");

        // F1_j: ε^{−3} of the 𝕐′ projection, plus the exponential tail
        let mut r1 = PeriodicFn::zero(omega);
        for k in (3..bracket.terms.len()).rev() {
            r1 = r1.scale(epsilon).add(&bracket.terms[k].project_yprime());
        }
        let mut tail1 = PeriodicFn::zero(omega);
        for mu in 0..m {
            tail1 = tail1.add(&tail[mu].project_yprime().scale(c[(j, mu)]));
        }
        r1 = r1.add(&tail1.scale(epsilon * one_plus));
        f1.push(r1);

        // F0_j: cos ωt coefficient of ε^{−4} of the 𝕐 projection
        let mut r0 = 0.0;
        for k in (4..bracket.terms.len()).rev() {
            r0 = r0 * epsilon + bracket.terms[k].coeff(1);
        }
        let tail0: f64 = (0..m).map(|mu| c[(j, mu)] * tail[mu].coeff(1)).sum();
        r0 += one_plus * tail0;
        f0.push(r0);
    }
    Ok((f0, f1))
}

/// One application of the fixed-point map at the current iterate.
fn iteration_step(
    epsilon: f64,
    tau: f64,
    b: &DVector<f64>,
    w: &[PeriodicFn],
    lead: &LeadingTerms,
    bundle: &CMatrixBundle,
) -> Result<(f64, DVector<f64>, Vec<PeriodicFn>), FamilyError> {
    let m = bundle.m;
    let a = bundle.eigenvector();
    let c = bundle.c_f64();
    let w_star = PeriodicFn::w_star(bundle.omega);

    let (f0, f1) = remainders(epsilon, tau, b, w, bundle)?;
    let f2 = linear_offresonant_solve(&f1, bundle)?;

    // pairings of F³_μ = Σ_ν C_{μν} a_ν w_* F²_ν + F⁰_μ with w_*
    let mut f_total = lead.f0.clone();
    for mu in 0..m {
        let mut p3 = 0.5 * f0[mu];
        for nu in 0..m {
            p3 += c[(mu, nu)] * a[nu] * pair_w_star(&w_star.mul(&f2[nu])?);
        }
        f_total[mu] += epsilon * p3;
    }
    let (tau_next, b_next) = bordered_solve(&f_total, bundle)?;
    let w_next: Vec<PeriodicFn> = (0..m)
        .map(|nu| lead.w_lead[nu].add(&f2[nu].scale(epsilon)))
        .collect();
    Ok((tau_next, b_next, w_next))
}

/// Run the fixed-point iteration at one ε until the summed increment
/// `|Δτ| + Σ|Δb| + Σ‖Δw‖_C` drops below `tol`.
pub fn iterate_family(
    epsilon: f64,
    bundle: &CMatrixBundle,
    tol: f64,
    max_iter: usize,
) -> Result<FamilySolution, FamilyError> {
    let lead = leading_terms(bundle)?;
    let mut tau = lead.tau0;
    let mut b = lead.b0.clone();
    let mut w = lead.w_lead.clone();
    let mut increments = Vec::new();

    for it in 1..=max_iter {
        let (tau_next, b_next, w_next) = iteration_step(epsilon, tau, &b, &w, &lead, bundle)?;
        let mut delta = (tau_next - tau).abs();
        for j in 0..bundle.m {
            delta += (b_next[j] - b[j]).abs();
            delta += w_next[j].sub(&w[j]).norm_c();
        }
        increments.push(delta);
        tau = tau_next;
        b = b_next;
        w = w_next;
        if delta < tol {
            let w_star = PeriodicFn::w_star(bundle.omega);
            let a = bundle.eigenvector();
            let v = (0..bundle.m)
                .map(|j| {
                    w_star
                        .scale(epsilon * a[j])
                        .add(&w[j].scale(epsilon * epsilon))
                        .add(&w_star.scale(epsilon.powi(3) * b[j]))
                })
                .collect();
            return Ok(FamilySolution {
                epsilon,
                tau,
                b,
                w,
                v,
                b_eff: bundle.b0 * (1.0 + epsilon * epsilon * tau),
                iterations: it,
                final_delta: delta,
                increments,
            });
        }
        let n = increments.len();
        if n >= 4
            && (1..=3).all(|k| increments[n - k] >= increments[n - k - 1])
        {
            return Err(FamilyError::NoContraction { epsilon });
        }
    }
    Err(FamilyError::MaxIterations {
        max_iter,
        delta: *increments.last().unwrap_or(&f64::NAN),
    })
}

/// Sup-norm bound (coefficient sum) of the worst equation residual of the
/// full nonlinear system at the solution; the module's ground truth.
pub fn residual_check(solution: &FamilySolution, bundle: &CMatrixBundle) -> f64 {
    let m = bundle.m;
    let c = bundle.c_f64();
    let factor = bundle.b0 * (1.0 + solution.epsilon * solution.epsilon * solution.tau);
    let mut worst = 0.0f64;
    let expm1: Vec<PeriodicFn> = solution
        .v
        .iter()
        .map(|vj| vj.exp_remainder(0).expect("exponential tail converges"))
        .collect();
    for j in 0..m {
        let mut res = solution.v[j].second_derivative().scale(-1.0);
        for (mu, e) in expm1.iter().enumerate() {
            res = res.sub(&e.scale(factor * c[(j, mu)]));
        }
        worst = worst.max(res.norm_l1());
    }
    worst
}

/// τ_μ from the closed-form expression
/// `τ_μ = −a_μ/2 · ((m−μ+1) λ (Da, a))⁻¹`; diagnostic only — it disagrees
/// with the bordered solve by a constant factor (4 at m = 1), and the
/// bordered solve is what the solution residuals certify.
pub fn tau_footnote(bundle: &CMatrixBundle) -> Vec<f64> {
    let m = bundle.m;
    let a = bundle.eigenvector();
    let da: f64 = (0..m).map(|j| bundle.d[j] as f64 * a[j] * a[j]).sum();
    (0..m)
        .map(|mu| -a[mu] / 2.0 / ((m - mu) as f64 * bundle.lambda() * da))
        .collect()
}

/// τ_μ as actually defined by the bordered solve: the τ response to a
/// unit source in component μ.
pub fn tau_mu_direct(bundle: &CMatrixBundle) -> Result<Vec<f64>, FamilyError> {
    let m = bundle.m;
    let mut out = Vec::with_capacity(m);
    for mu in 0..m {
        let mut e = DVector::<f64>::zeros(m);
        e[mu] = 1.0;
        out.push(bordered_solve(&e, bundle)?.0);
    }
    Ok(out)
}

/// Empirical contraction radius: the largest ε (from bisection, starting
/// at 0.2) at which the iteration still contracts.
pub fn empirical_radius(bundle: &CMatrixBundle) -> f64 {
    let converges = |eps: f64| iterate_family(eps, bundle, 1e-12, 60).is_ok();
    let mut good = 0.0f64;
    let mut probe = 0.2f64;
    let mut bad = f64::INFINITY;
    for _ in 0..8 {
        if converges(probe) {
            good = probe;
            probe *= 2.0;
        } else {
            bad = probe;
            break;
        }
    }
    if bad.is_infinite() {
        return good;
    }
    let mut lo = good;
    let mut hi = bad;
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
