//! Result records shared between the solvers, the metrics layer and the CLI.

use serde::{Deserialize, Serialize};

/// Steady-state currents for one bath.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BathCurrents {
    pub bath: usize,
    pub node: usize,
    pub temperature: f64,
    /// Period-averaged heat current into the system from this bath.
    pub heat: f64,
    /// Local work rate assigned to this bath (0 for static networks).
    pub work_local: f64,
    /// Quasi-current: heat + local work.
    pub quasi: f64,
}

/// Per-bath averaged heat currents, work rates and conservation diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurrentsReport {
    pub baths: Vec<BathCurrents>,
    /// Total averaged work rate injected by the drive (0 for static).
    pub work_total: f64,
    /// First-law residual: sum of heat currents plus total work rate.
    pub first_law_residual: f64,
    /// Worst relative quadrature error across the integral components.
    pub quad_error: f64,
    /// Analytic bound on the truncated |omega| > omega_max tails.
    pub tail_bound: f64,
    /// Integration half-range actually used.
    pub omega_max: f64,
    /// Floquet truncation order used (None for static solves).
    pub k_order: Option<i32>,
    pub driven: bool,
}

impl CurrentsReport {
    pub fn heat(&self, alpha: usize) -> f64 {
        self.baths[alpha].heat
    }

    pub fn work_local(&self, alpha: usize) -> f64 {
        self.baths[alpha].work_local
    }

    pub fn quasi(&self, alpha: usize) -> f64 {
        self.baths[alpha].quasi
    }

    /// Largest |heat current| over the baths, as the scale for residual checks.
    pub fn current_scale(&self) -> f64 {
        self.baths
            .iter()
            .map(|b| b.heat.abs())
            .fold(self.work_total.abs(), f64::max)
    }
}

/// Static heat-transfer matrix sampled over a frequency grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferSet {
    pub grid: Vec<f64>,
    /// Row-major n_baths x n_baths matrix per grid point.
    pub transfer: Vec<Vec<f64>>,
    pub n_baths: usize,
}

/// Stability diagnosis for a driven network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Markovian proxy: no Floquet multiplier of the damped monodromy matrix
    /// exceeds 1 in modulus (beyond tolerance).
    pub markov_stable: bool,
    pub worst_multiplier: f64,
    /// Spectral probe: the Floquet block system stayed well-conditioned at
    /// every probe frequency.
    pub spectral_ok: bool,
    pub worst_condition: f64,
    pub probe_frequencies: Vec<f64>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.markov_stable && self.spectral_ok
    }
}
