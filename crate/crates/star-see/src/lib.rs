//! Robust secrecy-energy-efficiency (SEE) optimization for a downlink in
//! which a base station serves two user groups through a simultaneously
//! transmitting and reflecting surface, with non-orthogonal multiple access
//! inside each group and an eavesdropper lurking in each half-space.
//!
//! # Overview
//!
//! The library is layered bottom-up:
//!
//! * [`units`] — decibel/linear conversions, used only at config boundaries.
//! * [`channel`] — geometry, fading, cascaded surface links, and the bounded
//!   spherical CSI-error model with its sampling oracles.
//! * [`metrics`] — beamforming state plus the rate / power / SEE bookkeeping
//!   evaluated directly on channel vectors.
//! * [`lmi`] — affine complex expressions over real decision variables and
//!   the robustness-certificate builders (quadratic linearization,
//!   S-procedure, Schur expansion, sign-definiteness borders, convex
//!   surrogates) together with a sampling oracle that audits any certificate
//!   against the original semi-infinite constraints.
//! * [`optimizer`] — the alternating optimization driver: power-allocation,
//!   active-beamforming, and passive-surface subproblems (penalized
//!   convex-concave for the surface), the two-layer time-switching search,
//!   orthogonal-access baselines, and the interior-point cost model.
//! * [`experiments`] — TOML-configured Monte-Carlo campaigns with CSV
//!   streaming, summaries, and vector-graphic plots.
//!
//! Everything deterministic is seeded; identical configs reproduce identical
//! artifacts byte for byte.

pub mod channel;
pub mod lmi;
pub mod metrics;
pub mod optimizer;
pub mod units;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
