//! Alternating optimization of secrecy energy efficiency: conic subproblem
//! assembly, penalized surface updates, the protocol drivers, baselines, and
//! the solver-complexity estimator.
//!
//! # Overview
//!
//! The optimizer maximizes worst-case secrecy energy efficiency by cycling
//! three convex subproblems over one channel realization — power weights,
//! transmit beams, surface coefficients — each built from the robust
//! constraint families in [`crate::lmi`] around the current iterate and
//! solved with certification by [`conic_core::solve`]:
//!
//! - [`power_subproblem`] reallocates per-signal amplitudes along the fixed
//!   beam directions,
//! - [`active_subproblem`] redesigns the per-cluster transmit beams under
//!   the radiated-power budget,
//! - [`pccp_passive_es`] / [`ms_passive_step`] redesign the surface by a
//!   penalized convex-concave iteration (with binarization for mode
//!   switching),
//!
//! while [`ao_run`] drives the loop with a nondecreasing objective trace,
//! [`ts_two_layer`] adds the outer slot-fraction search for time switching,
//! [`oma_baseline`] runs the orthogonal-access reference, and
//! [`complexity_estimate`] reports the interior-point cost model alongside
//! the exact constraint-block catalog the builders emit.
//!
//! # Example
//!
//! ```
//! use star_see::optimizer::complexity_estimate;
//!
//! // 5 antennas, 20 elements, 2 users per space.
//! let c = complexity_estimate(5, 20, 2, 2);
//! assert_eq!(c.a1, 106);      // rate-certificate block size
//! assert_eq!(c.a3, 12);       // leakage-certificate block size
//! assert_eq!(c.sum_pairs, 6); // decoding-stage pairs
//! assert_eq!(c.n2, 10);       // beam-design variable count
//! ```

use thiserror::Error;

use conic_core::SolverTolerances;

mod ao;
mod complexity;
mod oma;
mod subproblem;
mod ts;

pub use ao::{
    active_subproblem, ao_run, init_state, ms_passive_step, passive_subproblem,
    pccp_passive_es, power_subproblem, product_anchor, AoResult, PassiveOutcome, StepOutcome,
};
pub use complexity::{
    built_catalog, complexity_estimate, predicted_catalog, BlockCount, ComplexityEstimate,
};
pub use oma::{oma_baseline, oma_secrecy_sum_rate, oma_see, OmaResult, OmaSlot, OmaState, SlotReport};
pub use subproblem::BlockFamily;
pub use ts::ts_two_layer;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Penalized convex-concave (surface step) parameters.
#[derive(Clone, Copy, Debug)]
pub struct PccpConfig {
    /// Initial penalty weight.
    pub lambda0: f64,
    /// Multiplicative penalty growth per inner iteration (`> 1`).
    pub growth: f64,
    /// Penalty ceiling.
    pub lambda_max: f64,
    /// Stop when the surface moved less than this in entrywise l1 norm...
    pub step_tol: f64,
    /// ... and the closure penalty (sum of slack magnitudes) is below this.
    pub closure_tol: f64,
    /// Inner-iteration budget before a reinitialized retry.
    pub max_inner: usize,
}

impl Default for PccpConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            growth: 10.0,
            lambda_max: 1e6,
            step_tol: 1e-3,
            closure_tol: 1e-4,
            max_inner: 30,
        }
    }
}

/// Outer slot-fraction search parameters for time switching.
#[derive(Clone, Copy, Debug)]
pub struct TsSearchConfig {
    /// Smallest admissible slot fraction (search covers `[floor, 1-floor]`).
    pub tau_floor: f64,
    /// Coarse bracketing grid size.
    pub coarse_points: usize,
    /// Golden-section refinement iterations inside the bracket.
    pub refine_iters: usize,
    /// Looser convergence tolerance for the search-phase inner runs.
    pub search_tol: f64,
    /// Outer-iteration cap for the search-phase inner runs.
    pub search_max_outer: usize,
}

impl Default for TsSearchConfig {
    fn default() -> Self {
        Self {
            tau_floor: 0.05,
            coarse_points: 5,
            refine_iters: 6,
            search_tol: 1e-3,
            search_max_outer: 20,
        }
    }
}

/// Alternating-optimization driver parameters.
#[derive(Clone, Copy, Debug)]
pub struct AOConfig {
    /// Outer stop: `|psi - psi_prev| <= tol`.
    pub tol: f64,
    /// Outer-iteration cap.
    pub max_outer: usize,
    /// Surface-step parameters.
    pub pccp: PccpConfig,
    /// Slot-fraction search parameters.
    pub ts: TsSearchConfig,
    /// Seed for initialization phases and retry perturbations.
    pub seed: u64,
    /// Interior-point tolerances for every subproblem solve.
    pub solver: SolverTolerances,
}

impl Default for AOConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_outer: 60,
            pccp: PccpConfig::default(),
            ts: TsSearchConfig::default(),
            seed: 1,
            solver: SolverTolerances::default(),
        }
    }
}

/// Configuration-validation failures.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("penalty growth must exceed 1, got {0}")]
    BadGrowth(f64),
    #[error("penalty ceiling {lambda_max} must exceed the initial weight {lambda0}")]
    BadPenaltyRange { lambda0: f64, lambda_max: f64 },
    #[error("tolerance must be positive and finite: {what} = {value}")]
    BadTolerance { what: &'static str, value: f64 },
    #[error("slot-fraction floor must lie in (0, 0.5), got {0}")]
    BadTauFloor(f64),
    #[error("iteration budget must be positive: {0}")]
    BadBudget(&'static str),
}

impl AOConfig {
    /// Check parameter ranges.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pccp.growth <= 1.0 {
            return Err(ConfigError::BadGrowth(self.pccp.growth));
        }
        if self.pccp.lambda_max <= self.pccp.lambda0 {
            return Err(ConfigError::BadPenaltyRange {
                lambda0: self.pccp.lambda0,
                lambda_max: self.pccp.lambda_max,
            });
        }
        for (what, value) in [
            ("tol", self.tol),
            ("pccp.lambda0", self.pccp.lambda0),
            ("pccp.step_tol", self.pccp.step_tol),
            ("pccp.closure_tol", self.pccp.closure_tol),
            ("ts.search_tol", self.ts.search_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::BadTolerance { what, value });
            }
        }
        if !(self.ts.tau_floor > 0.0 && self.ts.tau_floor < 0.5) {
            return Err(ConfigError::BadTauFloor(self.ts.tau_floor));
        }
        if self.max_outer == 0 {
            return Err(ConfigError::BadBudget("max_outer"));
        }
        if self.pccp.max_inner == 0 {
            return Err(ConfigError::BadBudget("pccp.max_inner"));
        }
        if self.ts.coarse_points < 3 {
            return Err(ConfigError::BadBudget("ts.coarse_points"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Run traces
// ---------------------------------------------------------------------------

/// Outcome of one block inside an outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    /// Solved and improved (or matched) the running objective.
    Accepted,
    /// Solved but would have decreased the objective; previous state kept.
    RejectedDecrease,
    /// Certified infeasible; previous state kept.
    Infeasible,
    /// Solver returned no trustworthy point; previous state kept.
    NumericalFailure,
    /// Not applicable for this protocol or layout.
    Skipped,
}

/// One outer iteration of the alternating loop.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Outer-iteration index (0-based).
    pub iteration: usize,
    /// Accepted efficiency surrogate after this iteration.
    pub psi: f64,
    /// Exact secrecy energy efficiency of the accepted state on the
    /// estimated channels.
    pub see_estimated: f64,
    /// Surface-closure penalty at the end of the surface step.
    pub closure_penalty: f64,
    /// Binarization penalty (mode switching only).
    pub binary_penalty: f64,
    /// Power, beam, and surface step outcomes.
    pub statuses: [StepStatus; 3],
    /// Wall time of the iteration.
    pub millis: u128,
}

/// Full history of one optimization run.
#[derive(Clone, Debug, Default)]
pub struct TraceRecord {
    /// Per-iteration records, in order.
    pub iterations: Vec<IterationRecord>,
    /// True when the run stopped on the objective tolerance rather than the
    /// iteration cap.
    pub converged: bool,
    /// Human-readable anomalies (restoration slack, penalty restarts,
    /// rounding damage, ...).
    pub warnings: Vec<String>,
    /// Slot-fraction search samples `(tau_r, efficiency)` for time
    /// switching; empty otherwise.
    pub tau_search: Vec<(f64, f64)>,
}

impl TraceRecord {
    /// True when the recorded surrogate never drops by more than `slack`.
    pub fn psi_nondecreasing(&self, slack: f64) -> bool {
        self.iterations.windows(2).all(|w| w[1].psi >= w[0].psi - slack)
    }

    /// One text line per iteration: iteration, surrogate, exact efficiency,
    /// penalties, step statuses, wall time.
    pub fn lines(&self) -> Vec<String> {
        self.iterations
            .iter()
            .map(|it| {
                format!(
                    "iter={} psi={:.6e} see={:.6e} closure={:.3e} binary={:.3e} steps={:?} millis={}",
                    it.iteration,
                    it.psi,
                    it.see_estimated,
                    it.closure_penalty,
                    it.binary_penalty,
                    it.statuses,
                    it.millis
                )
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    // 1. Defaults satisfy their own invariants.
    #[test]
    fn default_config_is_valid() {
        AOConfig::default().validate().unwrap();
        let d = AOConfig::default();
        assert_eq!(d.pccp.lambda0, 1e-3);
        assert_eq!(d.pccp.growth, 10.0);
        assert_eq!(d.pccp.lambda_max, 1e6);
        assert_eq!(d.tol, 1e-4);
    }

    // 2. Validation rejects out-of-range parameters.
    #[test]
    fn validation_rejects_bad_parameters() {
        let mut c = AOConfig::default();
        c.pccp.growth = 1.0;
        assert!(matches!(c.validate(), Err(ConfigError::BadGrowth(_))));

        let mut c = AOConfig::default();
        c.pccp.lambda_max = 1e-4;
        assert!(matches!(c.validate(), Err(ConfigError::BadPenaltyRange { .. })));

        let mut c = AOConfig::default();
        c.ts.tau_floor = 0.6;
        assert!(matches!(c.validate(), Err(ConfigError::BadTauFloor(_))));

        let mut c = AOConfig::default();
        c.tol = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::BadTolerance { .. })));
    }

    // 3. Monotonicity helper flags a drop beyond slack.
    #[test]
    fn trace_monotonicity_helper() {
        let rec = |i: usize, psi: f64| IterationRecord {
            iteration: i,
            psi,
            see_estimated: psi,
            closure_penalty: 0.0,
            binary_penalty: 0.0,
            statuses: [StepStatus::Accepted; 3],
            millis: 0,
        };
        let mut tr = TraceRecord::default();
        tr.iterations = vec![rec(0, 1.0), rec(1, 1.5), rec(2, 1.5 - 1e-9)];
        assert!(tr.psi_nondecreasing(1e-6));
        tr.iterations.push(rec(3, 1.0));
        assert!(!tr.psi_nondecreasing(1e-6));
    }
}
