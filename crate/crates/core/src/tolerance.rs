use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Generic absolute tolerance (orthogonality, equal norms, identities).
    pub eps: f64,
    pub herm: f64,
    pub trace: f64,
    /// Eigenvalues must be ≥ −psd.
    pub psd: f64,
    /// Relative SVD reconstruction residual.
    pub svd: f64,
    /// Relative reconstruction residual for decompositions.
    pub recon: f64,
    /// Schmidt coefficients at or below this are dropped.
    pub rank_cutoff: f64,
    /// Feasible iff the 2-norm residual is at most this.
    pub feas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            herm: 1e-9,
            trace: 1e-9,
            psd: 1e-9,
            svd: 1e-12,
            recon: 1e-9,
            rank_cutoff: 1e-10,
            feas: 1e-8,
        }
    }
}

/// Deletions count as infeasible in reports and tests only above this residual.
pub const INFEASIBLE_MARGIN: f64 = 1e-3;
