//! Finite states of the Landau problem in the Hermite-level × momentum-
//! channel basis.
//!
//! Channel p carries the x₂ plane wave of momentum `k₀ + pω` paired with
//! the Gaussian center `(k₀ + pω)/B` in x₁; level n is the n-th oscillator
//! state around that center. The basis functions carry a phase `i^n`
//! chosen so that the ladder coefficients are real positive:
//!
//! ```text
//! Ẑ₊|n,p⟩ = √(2B(n+1)) |n+1,p⟩,   Ẑ₋|n,p⟩ = √(2Bn) |n−1,p⟩.
//! ```
//!
//! Multiplication by a T-periodic function of x₂ shifts channels by whole
//! modes and mixes levels through displaced-oscillator overlaps; the phase
//! convention turns the real overlap matrix `M` into `i^{n−n'} M[n'][n]`.
//! Amplitudes lost to the level/channel truncation are accumulated in
//! `dropped_norm_sq` as a tail-mass diagnostic.

use super::overlap;
use crate::series::PeriodicFn;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Ladder directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Plus,
    Minus,
    MinusInverse,
}

/// Complex amplitudes indexed by (level n ≤ N, channel |p| ≤ P).
#[derive(Debug, Clone)]
pub struct ChannelState {
    pub b: f64,
    pub k0: f64,
    pub omega: f64,
    n_max: usize,
    p_max: usize,
    /// rows = levels 0..=N, cols = channels −P..=P
    amps: DMatrix<Complex64>,
    /// Accumulated squared norm lost to truncation.
    pub dropped_norm_sq: f64,
}

impl ChannelState {
    pub fn zeros(b: f64, k0: f64, omega: f64, n_max: usize, p_max: usize) -> Self {
        assert!(b > 0.0 && omega > 0.0);
        Self {
            b,
            k0,
            omega,
            n_max,
            p_max,
            amps: DMatrix::zeros(n_max + 1, 2 * p_max + 1),
            dropped_norm_sq: 0.0,
        }
    }

    /// Unit amplitude in the lowest level of the central channel.
    pub fn seed_level0(b: f64, k0: f64, omega: f64, n_max: usize, p_max: usize) -> Self {
        let mut s = Self::zeros(b, k0, omega, n_max, p_max);
        s.set_amp(0, 0, Complex64::new(1.0, 0.0));
        s
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn amp(&self, n: usize, p: i32) -> Complex64 {
        self.amps[(n, (p + self.p_max as i32) as usize)]
    }

    pub fn set_amp(&mut self, n: usize, p: i32, value: Complex64) {
        self.amps[(n, (p + self.p_max as i32) as usize)] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// ⟨self, other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.amps *= s;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.amps += &other.amps;
        out.dropped_norm_sq += other.dropped_norm_sq;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.amps -= &other.amps;
        out.dropped_norm_sq += other.dropped_norm_sq;
        out
    }

    /// Iterate non-zero amplitudes as (n, p, amp).
    pub fn iter_amps(&self) -> impl Iterator<Item = (usize, i32, Complex64)> + '_ {
        let p_max = self.p_max as i32;
        (0..=self.n_max).flat_map(move |n| {
            (-p_max..=p_max).filter_map(move |p| {
                let a = self.amp(n, p);
                (a != Complex64::ZERO).then_some((n, p, a))
            })
        })
    }

    /// Apply a ladder operator; amplitudes pushed beyond the level cap are
    /// dropped into `dropped_norm_sq`.
    pub fn ladder(&self, dir: Ladder) -> Self {
        let mut out = Self::zeros(self.b, self.k0, self.omega, self.n_max, self.p_max);
        out.dropped_norm_sq = self.dropped_norm_sq;
        let cols = 2 * self.p_max + 1;
        for col in 0..cols {
            for n in 0..=self.n_max {
                let a = self.amps[(n, col)];
                if a == Complex64::ZERO {
                    continue;
                }
                match dir {
                    Ladder::Plus => {
                        let f = (2.0 * self.b * (n as f64 + 1.0)).sqrt();
                        if n + 1 <= self.n_max {
                            out.amps[(n + 1, col)] = a * f;
                        } else {
                            out.dropped_norm_sq += (a * f).norm_sqr();
                        }
                    }
                    Ladder::Minus => {
                        if n > 0 {
                            let f = (2.0 * self.b * n as f64).sqrt();
                            out.amps[(n - 1, col)] = a * f;
                        }
                    }
                    Ladder::MinusInverse => {
                        let f = (2.0 * self.b * (n as f64 + 1.0)).sqrt().recip();
                        if n + 1 <= self.n_max {
                            out.amps[(n + 1, col)] = a * f;
                        } else {
                            out.dropped_norm_sq += (a * f).norm_sqr();
                        }
                    }
                }
            }
        }
        out
    }

    /// Multiply by `Σ_q g_q e^{iqωx₂}` given the complex mode list; each
    /// mode shifts channels by q and mixes levels through the displaced
    /// overlap matrix with the `i^{n−n'}` phase adjustment of this basis.
    pub fn multiply_modes(&self, modes: &[(i32, Complex64)]) -> Self {
        let mut out = Self::zeros(self.b, self.k0, self.omega, self.n_max, self.p_max);
        out.dropped_norm_sq = self.dropped_norm_sq;
        let p_span = self.p_max as i32;
        for &(q, g) in modes {
            if g == Complex64::ZERO {
                continue;
            }
            let mix = overlap::mul_matrix(q as f64 * self.omega, self.b, self.n_max).matrix;
            // squared column-norm deficits estimate the level-truncation loss
            let col_deficit: Vec<f64> = (0..=self.n_max)
                .map(|n| {
                    let s: f64 = (0..=self.n_max).map(|r| mix[(r, n)] * mix[(r, n)]).sum();
                    (1.0 - s).max(0.0)
                })
                .collect();
            for (n, p, a) in self.iter_amps() {
                let target = p + q;
                let weight = g * a;
                if target < -p_span || target > p_span {
                    out.dropped_norm_sq += weight.norm_sqr();
                    continue;
                }
                out.dropped_norm_sq += weight.norm_sqr() * col_deficit[n];
                for np in 0..=self.n_max {
                    let phase = i_power(n as i32 - np as i32);
                    let col = (target + p_span) as usize;
                    out.amps[(np, col)] += weight * phase * mix[(np, n)];
                }
            }
        }
        out
    }

    /// Multiply by an even real T-periodic function of x₂ (cosine series
    /// sharing this state's channel spacing ω).
    pub fn multiply_fn(&self, w: &PeriodicFn) -> Self {
        assert!(
            (w.omega() - self.omega).abs() <= 1e-12 * self.omega,
            "multiplier frequency does not match channel spacing"
        );
        let mut modes = vec![(0i32, Complex64::new(w.coeff(0), 0.0))];
        for n in 1..=w.order() {
            let half = Complex64::new(0.5 * w.coeff(n), 0.0);
            modes.push((n as i32, half));
            modes.push((-(n as i32), half));
        }
        self.multiply_modes(&modes)
    }

    /// Multiply by `scale · u′(x₂)` for an even `u` (so the multiplier is
    /// the odd sine series `−Σ n ω c_n sin(nωx₂)` scaled).
    pub fn multiply_derivative(&self, u: &PeriodicFn, scale: f64) -> Self {
        let mut modes = Vec::with_capacity(2 * u.order());
        for n in 1..=u.order() {
            // sin(nωx) = (e^{inωx} − e^{−inωx}) / (2i)
            let s_n = -scale * n as f64 * u.omega() * u.coeff(n);
            let half = Complex64::new(0.0, -0.5 * s_n);
            modes.push((n as i32, half));
            modes.push((-(n as i32), -half));
        }
        self.multiply_modes(&modes)
    }

    /// Apply `Ĥ_B + V`: `B(2n+1)` per level plus multiplication by V.
    pub fn hamiltonian(&self, v: &PeriodicFn) -> Self {
        let mut diag = self.clone();
        for n in 0..=self.n_max {
            let e = self.b * (2.0 * n as f64 + 1.0);
            for col in 0..2 * self.p_max + 1 {
                diag.amps[(n, col)] *= e;
            }
        }
        diag.add(&self.multiply_fn(v))
    }
}

/// `i^k` for signed k.
fn i_power(k: i32) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::overlap::hermite_fn;
    use approx::assert_abs_diff_eq;

    const B: f64 = 0.8;
    const OMEGA: f64 = 1.1;

    fn random_state(n_max: usize, p_max: usize) -> ChannelState {
        // deterministic pseudo-random fill, concentrated at low levels
        let mut s = ChannelState::zeros(B, 0.25, OMEGA, n_max, p_max);
        let mut x = 0.372f64;
        for n in 0..=n_max.min(6) {
            for p in -(p_max as i32).min(3)..=(p_max as i32).min(3) {
                x = (x * 997.0 + 0.123).fract();
                let y = (x * 31.0).fract();
                let damp = 0.5f64.powi(n as i32 + p.abs());
                s.set_amp(n, p, Complex64::new(x - 0.5, y - 0.5) * damp);
            }
        }
        s
    }

    #[test]
    fn minus_annihilates_lowest_level() {
        let s = ChannelState::seed_level0(B, 0.0, OMEGA, 10, 2);
        assert_eq!(s.ladder(Ladder::Minus).norm(), 0.0);
    }

    #[test]
    fn ladder_norm_identities() {
        for n in [0usize, 3, 7] {
            let mut s = ChannelState::zeros(B, 0.0, OMEGA, 20, 1);
            s.set_amp(n, 0, Complex64::new(0.6, -0.8));
            let up = s.ladder(Ladder::Plus);
            assert_abs_diff_eq!(
                up.norm(),
                (2.0 * B * (n as f64 + 1.0)).sqrt() * s.norm(),
                epsilon = 1e-12
            );
            if n > 0 {
                let down = s.ladder(Ladder::Minus);
                assert_abs_diff_eq!(
                    down.norm(),
                    (2.0 * B * n as f64).sqrt() * s.norm(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn minus_inverse_right_inverse_and_projection() {
        let s = random_state(20, 4);
        // Ẑ₋ Ẑ₋⁻¹ = I
        let back = s.ladder(Ladder::MinusInverse).ladder(Ladder::Minus);
        assert!(back.sub(&s).norm() <= 1e-12 * s.norm());
        // Ẑ₋⁻¹ Ẑ₋ = I − P⁰
        let proj = s.ladder(Ladder::Minus).ladder(Ladder::MinusInverse);
        let mut expect = s.clone();
        for p in -4..=4 {
            expect.set_amp(0, p, Complex64::ZERO);
        }
        assert!(proj.sub(&expect).norm() <= 1e-12 * s.norm());
    }

    #[test]
    fn plus_then_minus_scales_by_2bn() {
        let mut s = ChannelState::zeros(B, 0.0, OMEGA, 20, 1);
        s.set_amp(5, 0, Complex64::new(1.0, 0.0));
        let round = s.ladder(Ladder::Minus).ladder(Ladder::Plus);
        let expect = s.scale(Complex64::new(2.0 * B * 5.0, 0.0));
        assert!(round.sub(&expect).norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn constant_multiplier_is_scalar() {
        let s = random_state(15, 4);
        let c = PeriodicFn::constant(OMEGA, -1.7);
        let out = s.multiply_fn(&c);
        assert!(out.sub(&s.scale(Complex64::new(-1.7, 0.0))).norm() <= 1e-13 * s.norm());
    }

    #[test]
    fn cosine_multiplier_spreads_two_channels() {
        let s = ChannelState::seed_level0(B, 0.3, OMEGA, 30, 3);
        let w = PeriodicFn::cosine_mode(OMEGA, 1, 1.0);
        let out = s.multiply_fn(&w);
        // column-0 norm of M(±ω) is 1 untruncated; each channel gets 1/2 weight
        let m = overlap::mul_matrix(OMEGA, B, 30).matrix;
        let col0: f64 = (0..=30).map(|r| m[(r, 0)] * m[(r, 0)]).sum();
        let per_channel: f64 = (0..=30).map(|n| out.amp(n, 1).norm_sqr()).sum();
        assert_abs_diff_eq!(per_channel, 0.25 * col0, epsilon = 1e-12);
        assert!(out.norm_sq() <= s.norm_sq() * w.norm_c() * w.norm_c() + 1e-12);
        assert_abs_diff_eq!(out.norm_sq(), 0.5 * col0, epsilon = 1e-12);
    }

    #[test]
    fn unimodular_mode_preserves_norm() {
        let s = random_state(40, 6);
        let out = s.multiply_modes(&[(1, Complex64::new(1.0, 0.0))]);
        // e^{iωx₂} is unitary; only truncation mass is lost
        assert!(out.norm_sq() <= s.norm_sq() + 1e-12);
        assert!(out.norm_sq() + out.dropped_norm_sq >= s.norm_sq() - 1e-9);
    }

    #[test]
    fn real_even_multiplier_is_self_adjoint() {
        let x = random_state(20, 4);
        let y = random_state(20, 4);
        let w = PeriodicFn::new(OMEGA, vec![0.4, -0.3, 0.2]);
        let lhs = x.multiply_fn(&w).inner(&y);
        let rhs = x.inner(&y.multiply_fn(&w));
        assert!((lhs - rhs).norm() <= 1e-12 * (x.norm() * y.norm()));
    }

    #[test]
    fn hamiltonian_on_level_is_landau_level() {
        let s = ChannelState::seed_level0(B, 0.0, OMEGA, 10, 2);
        let zero = PeriodicFn::zero(OMEGA);
        let h = s.hamiltonian(&zero);
        let res = h.sub(&s.scale(Complex64::new(B, 0.0)));
        assert!(res.norm() <= 1e-14);
    }

    /// Ladder phases and factors validated against the differential
    /// operators `Ẑ∓ = Π₁ ± iΠ₂` applied on an x₁ grid (Π₂ acts as
    /// multiplication by k − Bx₁ on a plane-wave channel).
    #[test]
    fn ladder_matches_grid_operators() {
        let (b, k) = (0.7f64, 0.3f64);
        let sqrt_b = b.sqrt();
        let center = k / b;
        let grid_n = 24_000usize;
        let (lo, hi) = (center - 14.0 / sqrt_b, center + 14.0 / sqrt_b);
        let h = (hi - lo) / grid_n as f64;
        let phase = |n: usize| i_power(n as i32);

        for n in [0usize, 1, 4] {
            // ψ_n(x₁) on the grid, including the i^n basis phase
            let psi: Vec<Complex64> = (0..=grid_n)
                .map(|i| {
                    let x = lo + i as f64 * h;
                    phase(n) * sqrt_b.sqrt() * hermite_fn(n, sqrt_b * (x - center))
                })
                .collect();
            // Ẑ∓ψ = −i ψ′ ± i (k − Bx₁) ψ, 4th-order central differences
            let apply = |sign: f64| -> Vec<Complex64> {
                (0..=grid_n)
                    .map(|i| {
                        if i < 2 || i > grid_n - 2 {
                            return Complex64::ZERO;
                        }
                        let d = (-psi[i + 2] + psi[i + 1] * 8.0 - psi[i - 1] * 8.0 + psi[i - 2])
                            / (12.0 * h);
                        let x = lo + i as f64 * h;
                        -Complex64::i() * d + Complex64::i() * sign * (k - b * x) * psi[i]
                    })
                    .collect()
            };
            let project = |f: &[Complex64], target: usize| -> Complex64 {
                let mut s = Complex64::ZERO;
                for (i, fi) in f.iter().enumerate() {
                    let x = lo + i as f64 * h;
                    let basis = phase(target) * sqrt_b.sqrt() * hermite_fn(target, sqrt_b * (x - center));
                    s += basis.conj() * fi * h;
                }
                s
            };
            // Ẑ₋ = Π₁ + iΠ₂ lowers with coefficient √(2Bn)
            if n > 0 {
                let low = project(&apply(1.0), n - 1);
                assert_abs_diff_eq!(low.re, (2.0 * b * n as f64).sqrt(), epsilon = 1e-6);
                assert_abs_diff_eq!(low.im, 0.0, epsilon = 1e-6);
            }
            // Ẑ₊ = Π₁ − iΠ₂ raises with coefficient √(2B(n+1))
            let up = project(&apply(-1.0), n + 1);
            assert_abs_diff_eq!(up.re, (2.0 * b * (n as f64 + 1.0)).sqrt(), epsilon = 1e-6);
            assert_abs_diff_eq!(up.im, 0.0, epsilon = 1e-6);
        }
    }
}
