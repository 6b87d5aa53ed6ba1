//! Beamforming state and performance bookkeeping: decode rates under
//! successive interference cancellation, eavesdropper leakage, consumed
//! power, and secrecy energy efficiency (SEE).
//!
//! # Overview
//!
//! The base station sends one spatial beam `f_k` per space with per-user
//! power weights `alpha_{k,j}` (so user `(k, j)` gets `w_{k,j} = alpha_{k,j}
//! f_k`), and the surface applies a per-space coefficient vector `u_k` whose
//! squared moduli are the element energy splits. Users are indexed by
//! descending channel strength and share the beam by superposition coding
//! with successive cancellation: user `l` peels off signals in descending
//! index order down to its own (`j >= l`), so signal `j` must be decodable
//! at its own user and at every stronger user `l < j`, and while decoding
//! signal `j` the uncancelled interference is same-space signals `0..j-1`
//! plus the other space's whole beam.
//!
//! All rate kernels are evaluated directly on channel vectors (no solver
//! involved), which makes this module the ground-truth oracle for everything
//! the optimizer claims.
//!
//! # Example
//!
//! ```
//! use star_see::metrics::decode_rate;
//! use nalgebra::{DVector, RowDVector};
//! use num_complex::Complex64 as C64;
//!
//! // Signal power 3 sigma^2, no interference: log2(4) = 2 b/s/Hz.
//! let row = RowDVector::from_vec(vec![C64::new(1.0, 0.0)]);
//! let w = DVector::from_vec(vec![C64::new(3f64.sqrt(), 0.0)]);
//! let rate = decode_rate(&row, &w, &[], 1.0);
//! assert!((rate - 2.0).abs() < 1e-12);
//! ```

use nalgebra::{DVector, RowDVector};
use thiserror::Error;

use crate::channel::{ChannelRealization, Link, SystemParams, NUM_SPACES, SPACE_R};
use crate::C64;

// ---------------------------------------------------------------------------
// Protocols and state
// ---------------------------------------------------------------------------

/// Surface operating protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// Energy splitting: each element serves both spaces simultaneously with
    /// amplitudes `beta_r + beta_t = 1`.
    EnergySplit,
    /// Mode switching: each element is dedicated to one space
    /// (`beta in {0, 1}`).
    ModeSwitch,
    /// Static split: the first half of the elements reflect, the second half
    /// transmit; only phases are optimized.
    StaticSplit,
    /// Time switching: the whole surface alternates between spaces over
    /// fractions `tau_r + tau_t = 1`, every element at full amplitude.
    TimeSwitch,
}

/// Which channel estimate a metric is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChanView {
    /// Estimated links (`h_hat`, `G_hat`).
    Estimated,
    /// True links (estimate plus the drawn bounded error).
    True,
}

/// Complete transmit-side decision: beams, power split, surface
/// coefficients, and (for time switching) slot fractions.
#[derive(Clone, Debug)]
pub struct BeamformingState {
    /// Surface protocol this state is shaped for.
    pub protocol: Protocol,
    /// Per-space transmit beam (length `N`); `||f_r||^2 + ||f_t||^2` is the
    /// radiated power.
    pub f: Vec<DVector<C64>>,
    /// Per-space, per-user power weights with `sum_j alpha^2 = 1`.
    pub alpha: Vec<Vec<f64>>,
    /// Per-space surface coefficient vectors (length `M`); `|u_{k,m}|^2` is
    /// element `m`'s energy share toward space `k`.
    pub u: Vec<DVector<C64>>,
    /// Slot fractions, `[1, 1]` except for time switching where they sum
    /// to 1.
    pub tau: [f64; 2],
}

/// State-validation failures.
#[derive(Debug, Error)]
pub enum StateError {
    #[error("state has {got} spaces / expected {expected}")]
    SpaceCount { got: usize, expected: usize },
    #[error("space {space}: expected {expected} entries in {what}, got {got}")]
    Shape { space: usize, what: &'static str, expected: usize, got: usize },
    #[error("space {space}: power weights square-sum to {sum}, expected 1")]
    AlphaSum { space: usize, sum: f64 },
    #[error("element {elem}: energy shares sum to {sum}, expected 1")]
    BetaSum { elem: usize, sum: f64 },
    #[error("element {elem}: share {beta} is not binary for a mode-switching surface")]
    BetaNotBinary { elem: usize, beta: f64 },
    #[error("element {elem}: share {beta} does not match the static half-half split")]
    BetaNotStatic { elem: usize, beta: f64 },
    #[error("element {elem} space {space}: modulus {modulus} is not 1 for time switching")]
    NotUnitModulus { elem: usize, space: usize, modulus: f64 },
    #[error("slot fractions {tau:?} invalid for this protocol")]
    BadTau { tau: [f64; 2] },
}

/// Tolerance for the energy-split closure `beta_r + beta_t = 1` (the
/// penalized surface step guarantees this residual at convergence).
pub const BETA_SUM_TOL: f64 = 1e-3;
/// Tolerance for binary shares under mode switching.
pub const BETA_BINARY_TOL: f64 = 1e-3;
/// Tolerance for the power-weight closure `sum alpha^2 = 1`.
pub const ALPHA_SUM_TOL: f64 = 1e-6;

impl BeamformingState {
    /// Beam carrying signal `(k, j)`: `alpha_{k,j} f_k`.
    pub fn beam(&self, k: usize, j: usize) -> DVector<C64> {
        &self.f[k] * C64::new(self.alpha[k][j], 0.0)
    }

    /// Element energy shares toward space `k`: `|u_{k,m}|^2`.
    pub fn beta(&self, k: usize) -> Vec<f64> {
        self.u[k].iter().map(|x| x.norm_sqr()).collect()
    }

    /// Radiated power `sum_k ||f_k||^2` (the per-user weights square-sum to
    /// one inside each space, so cluster beams carry the whole budget).
    pub fn radiated_power(&self) -> f64 {
        self.f.iter().map(|f| f.norm_squared()).sum()
    }

    /// Validate shapes and the protocol-specific surface structure.
    pub fn validate(&self, params: &SystemParams) -> Result<(), StateError> {
        if self.f.len() != NUM_SPACES || self.alpha.len() != NUM_SPACES || self.u.len() != NUM_SPACES
        {
            return Err(StateError::SpaceCount {
                got: self.f.len().min(self.alpha.len()).min(self.u.len()),
                expected: NUM_SPACES,
            });
        }
        for k in 0..NUM_SPACES {
            if self.f[k].len() != params.n {
                return Err(StateError::Shape {
                    space: k,
                    what: "beam f",
                    expected: params.n,
                    got: self.f[k].len(),
                });
            }
            if self.alpha[k].len() != params.users_in(k) {
                return Err(StateError::Shape {
                    space: k,
                    what: "alpha",
                    expected: params.users_in(k),
                    got: self.alpha[k].len(),
                });
            }
            if self.u[k].len() != params.m {
                return Err(StateError::Shape {
                    space: k,
                    what: "surface u",
                    expected: params.m,
                    got: self.u[k].len(),
                });
            }
            let sum: f64 = self.alpha[k].iter().map(|a| a * a).sum();
            if (sum - 1.0).abs() > ALPHA_SUM_TOL {
                return Err(StateError::AlphaSum { space: k, sum });
            }
        }

        let beta_r = self.beta(SPACE_R);
        let beta_t = self.beta(1);
        match self.protocol {
            Protocol::EnergySplit | Protocol::ModeSwitch | Protocol::StaticSplit => {
                if self.tau != [1.0, 1.0] {
                    return Err(StateError::BadTau { tau: self.tau });
                }
                for m in 0..params.m {
                    let sum = beta_r[m] + beta_t[m];
                    if (sum - 1.0).abs() > BETA_SUM_TOL {
                        return Err(StateError::BetaSum { elem: m, sum });
                    }
                }
            }
            Protocol::TimeSwitch => {
                if !(self.tau[0] > 0.0
                    && self.tau[1] > 0.0
                    && (self.tau[0] + self.tau[1] - 1.0).abs() <= 1e-9)
                {
                    return Err(StateError::BadTau { tau: self.tau });
                }
                for k in 0..NUM_SPACES {
                    for m in 0..params.m {
                        let modulus = self.u[k][m].norm();
                        if (modulus - 1.0).abs() > 1e-6 {
                            return Err(StateError::NotUnitModulus { elem: m, space: k, modulus });
                        }
                    }
                }
            }
        }
        match self.protocol {
            Protocol::ModeSwitch => {
                for (m, &b) in beta_r.iter().enumerate() {
                    if b.min(1.0 - b).abs() > BETA_BINARY_TOL {
                        return Err(StateError::BetaNotBinary { elem: m, beta: b });
                    }
                }
            }
            Protocol::StaticSplit => {
                let half = params.m / 2;
                for (m, &b) in beta_r.iter().enumerate() {
                    let want = if m < half { 1.0 } else { 0.0 };
                    if (b - want).abs() > 1e-6 {
                        return Err(StateError::BetaNotStatic { elem: m, beta: b });
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Channel rows
// ---------------------------------------------------------------------------

/// Effective receive row `h^H + u^H G` for one endpoint and one surface
/// vector.
pub fn combined_channel(
    h: &DVector<C64>,
    g: &nalgebra::DMatrix<C64>,
    u: &DVector<C64>,
) -> RowDVector<C64> {
    let mut row = RowDVector::from_fn(h.len(), |_, i| h[i].conj());
    row += u.adjoint() * g;
    row
}

/// Receive row of a link under the chosen view and surface vector. A `u` of
/// zeros yields the direct-only row (used for the far-space eavesdropper in
/// time switching).
pub fn link_row(link: &Link, u: &DVector<C64>, view: ChanView) -> RowDVector<C64> {
    match view {
        ChanView::Estimated => combined_channel(&link.hhat, &link.ghat, u),
        ChanView::True => combined_channel(&link.h_true(), &link.g_true(), u),
    }
}

// ---------------------------------------------------------------------------
// Rate kernels
// ---------------------------------------------------------------------------

/// Shannon rate `log2(1 + |row w|^2 / (sum_i |row w_i|^2 + sigma2))`,
/// computed through `ln_1p` for stability near zero.
pub fn decode_rate(
    row: &RowDVector<C64>,
    w: &DVector<C64>,
    interferers: &[DVector<C64>],
    sigma2: f64,
) -> f64 {
    let signal = (row * w)[0].norm_sqr();
    let interference: f64 = interferers.iter().map(|wi| (row * wi)[0].norm_sqr()).sum();
    (signal / (interference + sigma2)).ln_1p() / std::f64::consts::LN_2
}

/// Time-switching variant: the slot is active a fraction `tau` of the time
/// and integrates noise over that fraction, `tau log2(1 + S / (I + tau
/// sigma2))`.
pub fn ts_decode_rate(
    tau: f64,
    row: &RowDVector<C64>,
    w: &DVector<C64>,
    interferers: &[DVector<C64>],
    sigma2: f64,
) -> f64 {
    let signal = (row * w)[0].norm_sqr();
    let interference: f64 = interferers.iter().map(|wi| (row * wi)[0].norm_sqr()).sum();
    tau * (signal / (interference + tau * sigma2)).ln_1p() / std::f64::consts::LN_2
}

/// Interference set seen while decoding signal `l` of space `k`: same-space
/// signals `0..l` plus (outside time switching) the other space's whole beam.
pub fn interferers_for(state: &BeamformingState, k: usize, l: usize) -> Vec<DVector<C64>> {
    let mut set: Vec<DVector<C64>> = (0..l).map(|i| state.beam(k, i)).collect();
    if state.protocol != Protocol::TimeSwitch {
        set.push(state.f[1 - k].clone());
    }
    set
}

fn rate_of_signal_at_row(
    state: &BeamformingState,
    row: &RowDVector<C64>,
    k: usize,
    l: usize,
    sigma2: f64,
) -> f64 {
    let its = interferers_for(state, k, l);
    let w = state.beam(k, l);
    if state.protocol == Protocol::TimeSwitch {
        ts_decode_rate(state.tau[k], row, &w, &its, sigma2)
    } else {
        decode_rate(row, &w, &its, sigma2)
    }
}

/// Deliverable rate of signal `(k, j)` (user `j`'s data): the signal must be
/// decoded at its own user and at every stronger user `l < j` that cancels
/// it during successive decoding, so the rate is the minimum of the stage
/// rates over receivers `l <= j`, each evaluated at that receiver's channel
/// with the signal's interference set.
pub fn achievable_rate(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    sigma2: f64,
    k: usize,
    j: usize,
) -> f64 {
    (0..=j)
        .map(|l| {
            let row = link_row(&real.bobs[k][l], &state.u[k], view);
            rate_of_signal_at_row(state, &row, k, j, sigma2)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Leakage rate of signal `(k, j)` at eavesdropper `e` of space `eve_space`,
/// assuming the worst case where the eavesdropper has already cancelled all
/// later-indexed signals (same interference set as the legitimate stage).
///
/// The eavesdropper hears through the surface vector of *its own* space:
/// a full-surface protocol radiates toward both spaces at once, so every
/// eavesdropper overhears every signal. Under time switching the surface
/// serves one space per slot, so an eavesdropper in the other space is
/// reached by its direct path alone during that slot.
pub fn eve_rate(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    sigma2: f64,
    k: usize,
    j: usize,
    eve_space: usize,
    e: usize,
) -> f64 {
    let link = &real.eves[eve_space][e];
    let row = if state.protocol == Protocol::TimeSwitch && eve_space != k {
        let zero_u = DVector::zeros(state.u[eve_space].len());
        link_row(link, &zero_u, view)
    } else {
        link_row(link, &state.u[eve_space], view)
    };
    rate_of_signal_at_row(state, &row, k, j, sigma2)
}

/// Total leakage subtracted from user `(k, j)`'s rate: the sum over every
/// eavesdropper in *both* spaces, each evaluated per [`eve_rate`].
pub fn total_eve_rate(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    sigma2: f64,
    k: usize,
    j: usize,
) -> f64 {
    (0..NUM_SPACES)
        .map(|s| {
            (0..real.eves[s].len())
                .map(|e| eve_rate(state, real, view, sigma2, k, j, s, e))
                .sum::<f64>()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Secrecy and efficiency
// ---------------------------------------------------------------------------

/// Per-user secrecy rate `[R - sum_e R_e]^+`. The clamp at zero mirrors the
/// definition of a secrecy rate; the optimizer's constraints keep the
/// operating point strictly positive, so a clamped term signals an
/// infeasible or non-converged state rather than a design target.
pub fn secrecy_rate(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    sigma2: f64,
    k: usize,
    j: usize,
) -> f64 {
    let r = achievable_rate(state, real, view, sigma2, k, j);
    let leak = total_eve_rate(state, real, view, sigma2, k, j);
    (r - leak).max(0.0)
}

/// Secrecy sum rate over every user.
pub fn secrecy_sum_rate(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    sigma2: f64,
) -> f64 {
    (0..NUM_SPACES)
        .map(|k| {
            (0..real.bobs[k].len())
                .map(|j| secrecy_rate(state, real, view, sigma2, k, j))
                .sum::<f64>()
        })
        .sum()
}

/// Consumed power: amplifier-scaled radiated power plus base-station,
/// per-user, and per-element circuit terms.
///
/// # Example
///
/// ```
/// use star_see::channel::SystemParams;
/// use star_see::metrics::total_power;
///
/// let params = SystemParams::default(); // 4 users, 20 elements, 10 W base
/// assert!((total_power(&params, 0.0) - 10.24).abs() < 1e-12);
/// assert!((total_power(&params, 1.0) - 11.24).abs() < 1e-12);
/// ```
pub fn total_power(params: &SystemParams, radiated: f64) -> f64 {
    params.amp_inefficiency * radiated
        + params.p_bs
        + params.num_users() as f64 * params.p_user
        + params.m as f64 * params.p_elem
}

/// Secrecy energy efficiency: secrecy sum rate per watt consumed.
#[inline]
pub fn see(ssr: f64, power: f64) -> f64 {
    debug_assert!(power > 0.0);
    ssr / power
}

/// SEE of a state on a realization, in one call.
pub fn state_see(
    state: &BeamformingState,
    real: &ChannelRealization,
    view: ChanView,
    params: &SystemParams,
) -> f64 {
    let ssr = secrecy_sum_rate(state, real, view, params.sigma2);
    see(ssr, total_power(params, state.radiated_power()))
}

// ---------------------------------------------------------------------------
// Decoding order
// ---------------------------------------------------------------------------

/// Per-pair decoding-order margins at the estimated channels:
/// `|row_j w_j|^2 - |row_{j+1} w_{j+1}|^2` for adjacent users of each space,
/// flattened space-major. Non-negative margins mean the successive-decoding
/// order is consistent with the received signal strengths.
pub fn decoding_order_margins(
    state: &BeamformingState,
    real: &ChannelRealization,
) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..NUM_SPACES {
        let rows: Vec<RowDVector<C64>> = (0..real.bobs[k].len())
            .map(|j| link_row(&real.bobs[k][j], &state.u[k], ChanView::Estimated))
            .collect();
        for j in 0..real.bobs[k].len().saturating_sub(1) {
            let a = (&rows[j] * state.beam(k, j))[0].norm_sqr();
            let b = (&rows[j + 1] * state.beam(k, j + 1))[0].norm_sqr();
            out.push(a - b);
        }
    }
    out
}

/// True when every decoding-order margin clears `-tol` (tolerance expressed
/// relative to the larger of the two received powers).
pub fn decoding_order_ok(
    state: &BeamformingState,
    real: &ChannelRealization,
    rel_tol: f64,
) -> bool {
    let mut ok = true;
    for k in 0..NUM_SPACES {
        let rows: Vec<RowDVector<C64>> = (0..real.bobs[k].len())
            .map(|j| link_row(&real.bobs[k][j], &state.u[k], ChanView::Estimated))
            .collect();
        for j in 0..real.bobs[k].len().saturating_sub(1) {
            let a = (&rows[j] * state.beam(k, j))[0].norm_sqr();
            let b = (&rows[j + 1] * state.beam(k, j + 1))[0].norm_sqr();
            if a - b < -rel_tol * a.max(b) {
                ok = false;
            }
        }
    }
    ok
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
