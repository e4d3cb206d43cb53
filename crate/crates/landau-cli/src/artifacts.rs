//! JSON artifact schemas persisted between pipeline stages.
//!
//! All artifacts carry `"schema": "1"`. Outputs are deterministic: the
//! same config produces byte-identical files.

use landau::chain::{ChainReport, PotentialChain, SystemResiduals};
use landau::cmatrix::{CMatrixBundle, NonresonanceReport};
use landau::family::FamilySolution;
use landau::rep::BandScan;
use landau::series::PeriodicFn;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
pub struct CMatrixArtifact {
    pub schema: String,
    pub m: usize,
    pub b0: f64,
    pub c: Vec<Vec<i64>>,
    pub e: Vec<Vec<i64>>,
    pub d: Vec<i64>,
    pub det_e: i64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub chosen_index: usize,
    pub omega: f64,
    pub period: f64,
    pub nonresonance: NonresonanceReport,
}

impl CMatrixArtifact {
    pub fn from_bundle(b: &CMatrixBundle) -> Self {
        let rows = |mat: &nalgebra::DMatrix<i64>| -> Vec<Vec<i64>> {
            (0..mat.nrows())
                .map(|i| (0..mat.ncols()).map(|j| mat[(i, j)]).collect())
                .collect()
        };
        Self {
            schema: SCHEMA.into(),
            m: b.m,
            b0: b.b0,
            c: rows(&b.c),
            e: rows(&b.e),
            d: b.d.iter().copied().collect(),
            det_e: landau::cmatrix::det_e(&b.e),
            eigenvalues: b.eigenvalues.clone(),
            eigenvectors: b
                .eigenvectors
                .iter()
                .map(|v| v.iter().copied().collect())
                .collect(),
            chosen_index: b.chosen_index,
            omega: b.omega,
            period: b.period(),
            nonresonance: b.nonresonance.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PeriodArtifact {
    pub schema: String,
    pub alpha: f64,
    pub b: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub t_alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FamilyArtifact {
    pub schema: String,
    pub m: usize,
    pub b0: f64,
    pub eps: f64,
    pub eig_index: usize,
    pub lambda: f64,
    pub omega: f64,
    pub period: f64,
    pub tau: f64,
    pub b: Vec<f64>,
    pub b_eff: f64,
    pub w: Vec<PeriodicFn>,
    pub v: Vec<PeriodicFn>,
    pub iterations: usize,
    pub final_delta: f64,
    pub increments: Vec<f64>,
    pub residual: f64,
    pub contraction_radius_estimate: f64,
    /// τ response per unit source, from the bordered solve.
    pub tau_mu: Vec<f64>,
    /// Closed-form τ_μ diagnostic; disagrees with `tau_mu` by a constant
    /// factor (4 at m = 1) and is reported for reference only.
    pub tau_mu_closed_form: Vec<f64>,
}

impl FamilyArtifact {
    pub fn new(
        bundle: &CMatrixBundle,
        sol: &FamilySolution,
        residual: f64,
        radius: f64,
        tau_mu: Vec<f64>,
        tau_mu_closed_form: Vec<f64>,
    ) -> Self {
        Self {
            schema: SCHEMA.into(),
            m: bundle.m,
            b0: bundle.b0,
            eps: sol.epsilon,
            eig_index: bundle.chosen_index,
            lambda: bundle.lambda(),
            omega: bundle.omega,
            period: bundle.period(),
            tau: sol.tau,
            b: sol.b.iter().copied().collect(),
            b_eff: sol.b_eff,
            w: sol.w.clone(),
            v: sol.v.clone(),
            iterations: sol.iterations,
            final_delta: sol.final_delta,
            increments: sol.increments.clone(),
            residual,
            contraction_radius_estimate: radius,
            tau_mu,
            tau_mu_closed_form,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChainArtifact {
    pub schema: String,
    pub m: usize,
    /// Effective field strength the chain certifies.
    pub b: f64,
    pub omega: f64,
    pub u: Vec<PeriodicFn>,
    pub w: Vec<PeriodicFn>,
    pub v: PeriodicFn,
    pub report: ChainReport,
    pub system_residuals: SystemResiduals,
}

impl ChainArtifact {
    pub fn from_chain(chain: &PotentialChain, systems: SystemResiduals) -> Self {
        Self {
            schema: SCHEMA.into(),
            m: chain.m,
            b: chain.b,
            omega: chain.v.omega(),
            u: chain.u.clone(),
            w: chain.w.clone(),
            v: chain.v.clone(),
            report: chain.report.clone(),
            system_residuals: systems,
        }
    }

    pub fn into_chain(self) -> PotentialChain {
        PotentialChain {
            m: self.m,
            b: self.b,
            u: self.u,
            w: self.w,
            v: self.v,
            report: self.report,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BandArtifact {
    pub schema: String,
    pub m: usize,
    pub b: f64,
    pub levels: usize,
    pub channels: usize,
    pub k_samples: usize,
    pub hermiticity_defect: f64,
    pub scan: BandScan,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EigenfunctionArtifact {
    pub schema: String,
    pub m: usize,
    pub b: f64,
    pub k0: f64,
    pub levels: usize,
    pub channels: usize,
    /// ‖(Ĥ_B + V − (2m+1)B)Φ‖ / ‖Φ‖.
    pub rho: f64,
    pub kernel_residual: f64,
    pub dropped_norm_sq: f64,
    pub norm: f64,
    /// `[re, im]` pairs indexed `[level][channel]`, channels −P..P.
    pub amplitudes: Vec<Vec<[f64; 2]>>,
}
