//! Arithmetic for even real T-periodic functions stored as finite cosine
//! series on the frequency grid ωℤ:
//!
//! ```text
//! f(t) = c₀ + Σ_{n≥1} c_n cos(nωt),   T = 2π/ω.
//! ```
//!
//! Evenness is a property of the representation itself: sine modes do not
//! exist in the type, so every value is an even function by construction.
//! Products are exact (product-to-sum, no aliasing), which keeps the
//! fixed-point solver's residuals at roundoff level.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Global cap on the truncation order of a series.
pub const MAX_ORDER: usize = 256;

/// Trailing coefficients below `TRIM_REL * max|c|` are dropped.
pub const TRIM_REL: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("fundamental frequencies differ: {0} vs {1}")]
    OmegaMismatch(f64, f64),
    #[error("exponential tail did not converge within {max_terms} terms (last increment {increment:.3e})")]
    Divergence { max_terms: usize, increment: f64 },
}

/// Even real T-periodic function as a finite cosine series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFn {
    omega: f64,
    coeffs: Vec<f64>,
}

fn same_omega(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl PeriodicFn {
    /// Build a series from coefficients `c₀..c_N`; trailing negligible
    /// coefficients are trimmed.
    pub fn new(omega: f64, coeffs: Vec<f64>) -> Self {
        assert!(omega > 0.0, "fundamental frequency must be positive");
        let mut f = Self { omega, coeffs };
        f.trim();
        f
    }

    pub fn zero(omega: f64) -> Self {
        Self::new(omega, vec![0.0])
    }

    pub fn constant(omega: f64, c: f64) -> Self {
        Self::new(omega, vec![c])
    }

    /// `amp · cos(nωt)`.
    pub fn cosine_mode(omega: f64, n: usize, amp: f64) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = amp;
        Self::new(omega, coeffs)
    }

    /// The seed oscillation `w_*(t) = 2 cos ωt`.
    pub fn w_star(omega: f64) -> Self {
        Self::cosine_mode(omega, 1, 2.0)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Truncation order N (index of the highest retained mode).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `cos(nωt)` (0 beyond the truncation order).
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn trim(&mut self) {
        let max_abs = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let thr = TRIM_REL * max_abs;
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().abs() <= thr {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
        if self.coeffs.len() > MAX_ORDER + 1 {
            self.coeffs.truncate(MAX_ORDER + 1);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(
            same_omega(self.omega, other.omega),
            "mixed fundamental frequencies in add"
        );
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeff(i) + other.coeff(i);
        }
        Self::new(self.omega, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.omega, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        Self::new(self.omega, coeffs)
    }

    /// Exact cosine-series product via `cos a · cos b = ½cos(a+b) + ½cos(a−b)`.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if !same_omega(self.omega, other.omega) {
            return Err(SeriesError::OmegaMismatch(self.omega, other.omega));
        }
        let mut coeffs = vec![0.0; self.order() + other.order() + 1];
        for (n, &cn) in self.coeffs.iter().enumerate() {
            if cn == 0.0 {
                continue;
            }
            for (m, &cm) in other.coeffs.iter().enumerate() {
                if cm == 0.0 {
                    continue;
                }
                let p = 0.5 * cn * cm;
                coeffs[n + m] += p;
                coeffs[n.abs_diff(m)] += p;
            }
        }
        Ok(Self::new(self.omega, coeffs))
    }

    /// Keep only the ±ω modes (the `cos ωt` term).
    pub fn project_y(&self) -> Self {
        Self::cosine_mode(self.omega, 1, self.coeff(1))
    }

    /// Zero the ±ω modes; the result lies in 𝔏(𝕐′).
    pub fn project_yprime(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() > 1 {
            coeffs[1] = 0.0;
        }
        Self::new(self.omega, coeffs)
    }

    /// `d²f/dt²`, i.e. `c_n ↦ −n²ω²c_n`.
    pub fn second_derivative(&self) -> Self {
        let w2 = self.omega * self.omega;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| -((n * n) as f64) * w2 * c)
            .collect();
        Self::new(self.omega, coeffs)
    }

    /// Mean value over one period (the coefficient c₀).
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// Squared L² norm over one period: `T(c₀² + ½Σc_n²)`.
    pub fn norm_l2_sq(&self) -> f64 {
        let mut s = self.coeffs[0] * self.coeffs[0];
        for c in &self.coeffs[1..] {
            s += 0.5 * c * c;
        }
        s * self.period()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    /// Sup-norm estimate by dense sampling (a lower bound). Use
    /// [`PeriodicFn::norm_l1`] when a rigorous upper bound is needed.
    pub fn norm_c(&self) -> f64 {
        let samples = (8 * self.order()).max(256);
        let dt = self.period() / samples as f64;
        (0..samples)
            .map(|i| self.evaluate(i as f64 * dt).abs())
            .fold(0.0, f64::max)
    }

    /// Coefficient-sum bound `Σ|c_n| ≥ ‖f‖_C`.
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let wt = self.omega * t;
        let mut s = self.coeffs[0];
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            s += c * (n as f64 * wt).cos();
        }
        s
    }

    /// Tail of the exponential series: `e^f − Σ_{i=0}^{k} f^i/i!`, summed
    /// term by term in series arithmetic so small inputs keep full relative
    /// accuracy (no cancellation against the leading 1).
    pub fn exp_remainder(&self, k: usize) -> Result<Self, SeriesError> {
        assert!(k <= 4, "exponential tail only supported up to order 4");
        const MAX_TERMS: usize = 500;
        const ATOL: f64 = 1e-15;
        // term = f^{k+1}/(k+1)!
        let mut term = self.clone();
        for i in 2..=(k + 1) {
            term = term.mul(self)?.scale(1.0 / i as f64);
        }
        let mut sum = term.clone();
        let mut i = k + 1;
        loop {
            i += 1;
            term = term.mul(self)?.scale(1.0 / i as f64);
            let inc = term.norm_l1();
            sum = sum.add(&term);
            if inc < ATOL {
                return Ok(sum);
            }
            if i > MAX_TERMS {
                return Err(SeriesError::Divergence {
                    max_terms: MAX_TERMS,
                    increment: inc,
                });
            }
        }
    }

    /// `e^f` as a series (`1 + exp_remainder(f, 0)`).
    pub fn exp(&self) -> Result<Self, SeriesError> {
        Ok(self.exp_remainder(0)?.add_constant(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const OMEGA: f64 = 1.3;

    #[test]
    fn w_star_squared_is_product_to_sum() {
        let w = PeriodicFn::w_star(OMEGA);
        let sq = w.mul(&w).unwrap();
        assert_eq!(sq.coeffs(), &[2.0, 0.0, 2.0]);
    }

    #[test]
    fn hand_product_example() {
        // w_* · (−1 + ⅓cos 2ωt) = (−5/3)cos ωt + (1/3)cos 3ωt
        let w = PeriodicFn::w_star(OMEGA);
        let g = PeriodicFn::new(OMEGA, vec![-1.0, 0.0, 1.0 / 3.0]);
        let p = w.mul(&g).unwrap();
        assert_abs_diff_eq!(p.coeff(0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeff(1), -5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeff(2), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeff(3), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn multiply_by_one_is_identity() {
        let f = PeriodicFn::new(OMEGA, vec![0.3, -1.2, 0.0, 0.7]);
        let one = PeriodicFn::constant(OMEGA, 1.0);
        assert_eq!(f.mul(&one).unwrap(), f);
    }

    #[test]
    fn mismatched_omega_rejected() {
        let f = PeriodicFn::w_star(1.0);
        let g = PeriodicFn::w_star(2.0);
        assert!(matches!(f.mul(&g), Err(SeriesError::OmegaMismatch(..))));
    }

    #[test]
    fn projections_of_w_star() {
        let w = PeriodicFn::w_star(OMEGA);
        assert_eq!(w.project_y(), w);
        assert!(w.project_yprime().is_zero());
        // P_Y w_*² = 0
        let sq = w.mul(&w).unwrap();
        assert!(sq.project_y().is_zero());
    }

    #[test]
    fn projection_masking() {
        let f = PeriodicFn::new(OMEGA, vec![1.0, 1.0, 0.0, 1.0]);
        assert_eq!(f.project_y().coeffs(), &[0.0, 1.0]);
        assert_eq!(f.project_yprime().coeffs(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn second_derivative_of_cosine() {
        let f = PeriodicFn::cosine_mode(OMEGA, 1, 1.0);
        let d2 = f.second_derivative();
        assert_abs_diff_eq!(d2.coeff(1), -OMEGA * OMEGA, epsilon = 1e-15);
        assert!(PeriodicFn::constant(OMEGA, 3.0)
            .second_derivative()
            .is_zero());
    }

    #[test]
    fn w_star_l2_norm() {
        let w = PeriodicFn::w_star(OMEGA);
        assert_abs_diff_eq!(w.norm_l2_sq(), 2.0 * w.period(), epsilon = 1e-13);
    }

    #[test]
    fn norm_c_of_shifted_cosine() {
        let f = PeriodicFn::new(OMEGA, vec![1.0, 1.0]);
        assert_abs_diff_eq!(f.norm_c(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_remainder_zero_fn() {
        let z = PeriodicFn::zero(OMEGA);
        assert!(z.exp_remainder(1).unwrap().is_zero());
    }

    #[test]
    fn exp_remainder_constant() {
        let c = PeriodicFn::constant(OMEGA, 0.37);
        let r = c.exp_remainder(0).unwrap();
        assert_abs_diff_eq!(r.coeff(0), 0.37f64.exp() - 1.0, epsilon = 1e-14);
        assert_eq!(r.order(), 0);
    }

    #[test]
    fn exp_remainder_pointwise_oracle() {
        let f = PeriodicFn::w_star(OMEGA).scale(0.1);
        let r = f.exp_remainder(3).unwrap();
        let t_samples = 64;
        for i in 0..t_samples {
            let t = i as f64 / t_samples as f64 * f.period();
            let x = f.evaluate(t);
            let expect = x.exp() - 1.0 - x - x * x / 2.0 - x * x * x / 6.0;
            assert_abs_diff_eq!(r.evaluate(t), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = PeriodicFn::new(2.0, vec![1.0, 0.0, -0.25]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"omega":2.0,"coeffs":[1.0,0.0,-0.25]}"#);
        let g: PeriodicFn = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    fn arb_fn() -> impl Strategy<Value = PeriodicFn> {
        proptest::collection::vec(-1.0f64..1.0, 1..12).prop_map(|c| PeriodicFn::new(OMEGA, c))
    }

    proptest! {
        #[test]
        fn projections_sum_to_identity(f in arb_fn()) {
            let back = f.project_y().add(&f.project_yprime());
            prop_assert_eq!(back, f);
        }

        #[test]
        fn product_matches_pointwise(f in arb_fn(), g in arb_fn()) {
            let p = f.mul(&g).unwrap();
            let samples = 4 * (f.order() + g.order()).max(4);
            let scale = 1.0 + f.norm_l1() * g.norm_l1();
            for i in 0..samples {
                let t = i as f64 / samples as f64 * f.period();
                prop_assert!((p.evaluate(t) - f.evaluate(t) * g.evaluate(t)).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn exp_remainder_reconstructs_exp(f in arb_fn(), k in 0usize..=4) {
            // Σ_{i≤k} f^i/i! + exp_remainder(f,k) = e^f pointwise.
            let mut head = PeriodicFn::constant(OMEGA, 1.0);
            let mut pw = PeriodicFn::constant(OMEGA, 1.0);
            for i in 1..=k {
                pw = pw.mul(&f).unwrap().scale(1.0 / i as f64);
                head = head.add(&pw);
            }
            let total = head.add(&f.exp_remainder(k).unwrap());
            for i in 0..32 {
                let t = i as f64 / 32.0 * f.period();
                prop_assert!((total.evaluate(t) - f.evaluate(t).exp()).abs() <= 1e-12 * f.evaluate(t).exp().max(1.0));
            }
        }

        #[test]
        fn derivative_has_zero_mean(f in arb_fn()) {
            prop_assert_eq!(f.second_derivative().mean(), 0.0);
        }
    }
}
