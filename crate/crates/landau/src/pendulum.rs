//! The scalar oscillation `−u″ = 2B(e^u − 1)` and its period map α ↦ T_α.
//!
//! All orbits through `u(0) = 0, u′(0) = α > 0` are periodic; the turning
//! points `u_±` satisfy `e^{u±} − 1 − u± = α²/(4B)` and the period is
//!
//! ```text
//! T_α = (α/B) ∫_{−1}^{1} ξ/(e^{u_ξ}−1) · dξ/√(1−ξ²)
//! ```
//!
//! with `u_ξ` the monotone solution of `e^{u}−1−u = α²ξ²/(4B)`. The module
//! provides the turning points, the implicit function `u_ξ`, the period by
//! quadrature (ξ = sin θ removes the endpoint singularity) and an
//! independent RK4 time integration with its own period estimate, so the
//! two routes can be cross-checked.

use crate::quad;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PendulumError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("requested accuracy not reached: achieved {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },
}

/// One solved orbit: turning points, minimal period, optional samples.
#[derive(Debug, Clone)]
pub struct PendulumSolution {
    pub alpha: f64,
    pub b: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub t_alpha: f64,
    pub samples: Option<Vec<(f64, f64)>>,
}

/// `g(u) = e^u − 1 − u`, the potential shape (positive away from 0).
fn g(u: f64) -> f64 {
    f64::exp_m1(u) - u
}

/// Solve `g(u) = level` on the increasing branch u ≥ 0 (`positive`) or the
/// decreasing branch u ≤ 0, by safeguarded Newton inside a bracket.
fn solve_branch(level: f64, positive: bool) -> f64 {
    if level == 0.0 {
        return 0.0;
    }
    // g(u) ≥ u²/2 for u ≥ 0, so the positive root is below √(2·level);
    // on the negative branch g(−x) ≥ x − 1.
    let (mut lo, mut hi, mut u) = if positive {
        let cap = (2.0 * level).sqrt();
        (0.0, cap, cap)
    } else {
        let cap = -(level + 1.0).max((2.0 * level).sqrt());
        (cap, 0.0, -(2.0 * level).sqrt().min(-cap))
    };
    for _ in 0..200 {
        let f = g(u) - level;
        if f == 0.0 {
            break;
        }
        if (f > 0.0) == positive {
            hi = u;
        } else {
            lo = u;
        }
        let step = f / f64::exp_m1(u);
        if step.abs() <= f64::EPSILON * u.abs() {
            break;
        }
        let next = u - step;
        u = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * u.abs() {
            break;
        }
    }
    u
}

/// Turning points `(u₋, u₊)` of the orbit with initial slope α.
pub fn amplitude_bounds(alpha: f64, b: f64) -> Result<(f64, f64), PendulumError> {
    if alpha <= 0.0 || b <= 0.0 {
        return Err(PendulumError::InvalidArgument(
            "alpha and B must be positive".into(),
        ));
    }
    let level = alpha * alpha / (4.0 * b);
    let u_plus = solve_branch(level, true);
    let u_minus = solve_branch(level, false);
    Ok((u_minus, u_plus))
}

/// The monotone implicit function `u_ξ` with `g(u_ξ) = α²ξ²/(4B)` and
/// `sign(u_ξ) = sign(ξ)`.
pub fn u_of_xi(xi: f64, alpha: f64, b: f64) -> Result<f64, PendulumError> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(PendulumError::InvalidArgument(format!(
            "xi = {xi} outside [-1, 1]"
        )));
    }
    if alpha <= 0.0 || b <= 0.0 {
        return Err(PendulumError::InvalidArgument(
            "alpha and B must be positive".into(),
        ));
    }
    let level = alpha * alpha * xi * xi / (4.0 * b);
    Ok(if xi >= 0.0 {
        solve_branch(level, true)
    } else {
        solve_branch(level, false)
    })
}

/// Integrand `ξ/(e^{u_ξ}−1)`, continued by its limit `√(2B)/α` at ξ = 0.
fn period_integrand(xi: f64, alpha: f64, b: f64) -> f64 {
    if xi == 0.0 {
        return (2.0 * b).sqrt() / alpha;
    }
    let u = if xi > 0.0 {
        solve_branch(alpha * alpha * xi * xi / (4.0 * b), true)
    } else {
        solve_branch(alpha * alpha * xi * xi / (4.0 * b), false)
    };
    xi / f64::exp_m1(u)
}

fn period_quadrature(alpha: f64, b: f64, n: usize) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    alpha / b * quad::integrate(n, -FRAC_PI_2, FRAC_PI_2, |theta| {
        period_integrand(theta.sin(), alpha, b)
    })
}

/// Minimal period by Gauss–Legendre quadrature in θ = arcsin ξ, with a
/// doubled-node consistency check.
pub fn period_integral(alpha: f64, b: f64) -> Result<f64, PendulumError> {
    if alpha <= 0.0 || b <= 0.0 {
        return Err(PendulumError::InvalidArgument(
            "alpha and B must be positive".into(),
        ));
    }
    // steeper transition near ξ = 0 for large α²/B needs more nodes
    let steep = (alpha * alpha / (4.0 * b)).sqrt();
    let mut n = (200.0 + 16.0 * steep) as usize;
    let mut coarse = period_quadrature(alpha, b, n);
    for _ in 0..3 {
        let fine = period_quadrature(alpha, b, 2 * n);
        let err = (fine - coarse).abs();
        if err <= 1e-12 * fine.abs() {
            return Ok(fine);
        }
        coarse = fine;
        n *= 2;
    }
    let fine = period_quadrature(alpha, b, 2 * n);
    let err = ((fine - coarse) / fine).abs();
    if err <= 1e-10 {
        Ok(fine)
    } else {
        Err(PendulumError::Accuracy {
            achieved: err,
            requested: 1e-10,
        })
    }
}

/// Full solution bundle: turning points and quadrature period.
pub fn solve(alpha: f64, b: f64) -> Result<PendulumSolution, PendulumError> {
    let (u_minus, u_plus) = amplitude_bounds(alpha, b)?;
    let t_alpha = period_integral(alpha, b)?;
    Ok(PendulumSolution {
        alpha,
        b,
        u_plus,
        u_minus,
        t_alpha,
        samples: None,
    })
}

/// Time integration result with an independent period estimate.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub samples: Vec<(f64, f64)>,
    /// Period from upward zero crossings of u.
    pub period_estimate: f64,
    /// max |H(t) − H(0)| / H(0) over the run.
    pub energy_drift: f64,
}

/// Integrate `−u″ = 2B(e^u − 1)` from `u(0)=0, u′(0)=α` with fixed-step
/// RK4 to `t_end`; the period comes from the zero crossings with u′ > 0,
/// refined on the cubic Hermite interpolant.
pub fn solve_ode(alpha: f64, b: f64, t_end: f64, dt: f64) -> Result<OdeSolution, PendulumError> {
    if alpha <= 0.0 || b <= 0.0 || t_end <= 0.0 || dt <= 0.0 {
        return Err(PendulumError::InvalidArgument(
            "alpha, B, t_end, dt must be positive".into(),
        ));
    }
    let accel = |u: f64| -2.0 * b * f64::exp_m1(u);
    let h0 = 0.5 * alpha * alpha;
    let energy = |u: f64, p: f64| 0.5 * p * p + 2.0 * b * g(u);

    let steps = (t_end / dt).ceil() as usize;
    let mut u = 0.0f64;
    let mut p = alpha;
    let mut t = 0.0f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((t, u));
    let mut drift = 0.0f64;
    let mut crossings: Vec<f64> = Vec::new();

    for _ in 0..steps {
        let (u0, p0) = (u, p);
        // classic RK4 on (u, p)
        let k1 = (p, accel(u));
        let k2 = (p + 0.5 * dt * k1.1, accel(u + 0.5 * dt * k1.0));
        let k3 = (p + 0.5 * dt * k2.1, accel(u + 0.5 * dt * k2.0));
        let k4 = (p + dt * k3.1, accel(u + dt * k3.0));
        u += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        t += dt;
        samples.push((t, u));
        drift = drift.max((energy(u, p) - h0).abs() / h0);

        if u0 < 0.0 && u >= 0.0 && p > 0.0 {
            crossings.push(t - dt + hermite_zero(dt, u0, p0, u, p));
        }
    }

    if drift > 1e-10 {
        return Err(PendulumError::Accuracy {
            achieved: drift,
            requested: 1e-10,
        });
    }
    // u(0) = 0 with u′ > 0 is itself a crossing, so crossing k sits at (k+1)·T
    let period_estimate = match crossings.last() {
        Some(&last) => last / crossings.len() as f64,
        None => {
            return Err(PendulumError::InvalidArgument(
                "t_end shorter than one period".into(),
            ))
        }
    };
    Ok(OdeSolution {
        samples,
        period_estimate,
        energy_drift: drift,
    })
}

/// Root of the cubic Hermite interpolant of u on one step, as an offset in
/// (0, dt]; used to refine a sign change detected on the grid.
fn hermite_zero(dt: f64, u0: f64, p0: f64, u1: f64, p1: f64) -> f64 {
    let eval = |s: f64| {
        // standard Hermite basis on [0, 1]
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * u0 + h10 * dt * p0 + h01 * u1 + h11 * dt * p1
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) * dt
}
