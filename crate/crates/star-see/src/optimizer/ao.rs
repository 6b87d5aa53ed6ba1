//! Alternating-optimization driver: initialization, the three step drivers
//! with their accept guards, the penalized surface iterations, and the outer
//! loop with feasibility restoration.
//!
//! Every step lowers through the single subproblem builder, solves with
//! certification, and is accepted only when the solver proves optimality and
//! the efficiency surrogate does not decrease; otherwise the previous state
//! is kept and the step is flagged in the trace. The product anchor `t` is
//! refreshed once per outer iteration and shared by all three steps.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conic_core::{solve, SolveStatus, SolverTolerances};

use crate::channel::{ChannelRealization, SystemParams, NUM_SPACES};
use crate::metrics::{
    achievable_rate, decoding_order_ok, eve_rate, link_row, secrecy_sum_rate, total_power,
    BeamformingState, ChanView, Protocol,
};
use crate::C64;

use super::subproblem::{
    build_subproblem, noma_plan, noma_power_groups, BinaryPenalty, ClusterPlan, Extracted,
    PassiveWeights, StepKind, SubproblemInput,
};
use super::{AOConfig, IterationRecord, StepStatus, TraceRecord};

/// Surrogate decrease tolerated by the accept guards.
const ACCEPT_SLACK: f64 = 1e-9;

/// Restoration slack below which beams count as feasible.
const RESTORE_TOL: f64 = 1e-6;

/// Restoration attempts (initial + perturbed reinitializations).
const RESTORE_ATTEMPTS: u64 = 3;

/// Softened-step rounds per restoration attempt; each round re-anchors the
/// linearizations at the previous slack minimizer.
const RESTORE_ROUNDS: usize = 8;

/// Closure residual beyond which a surface candidate is refused outright.
const CLOSURE_ACCEPT_FACTOR: f64 = 10.0;

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Final state and history of one optimization run.
#[derive(Clone, Debug)]
pub struct AoResult {
    /// Accepted beamforming state.
    pub state: BeamformingState,
    /// Final efficiency surrogate.
    pub psi: f64,
    /// Exact secrecy energy efficiency on the estimated channels.
    pub see: f64,
    /// Per-iteration history, warnings, and search samples.
    pub trace: TraceRecord,
    /// False when feasibility restoration failed and the instance was
    /// abandoned.
    pub feasible: bool,
}

/// Outcome of one power or beam step.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome {
    /// Accept/reject classification.
    pub status: StepStatus,
    /// Surrogate after the step (unchanged unless accepted).
    pub psi: f64,
    /// Restoration slack (softened beam step only).
    pub slack: f64,
}

/// Outcome of one penalized surface update.
#[derive(Clone, Debug)]
pub struct PassiveOutcome {
    /// Accept/reject classification.
    pub status: StepStatus,
    /// Surrogate after the step (unchanged unless accepted).
    pub psi: f64,
    /// Final amplitude-closure penalty.
    pub closure_penalty: f64,
    /// Final binarization penalty (mode switching only).
    pub binary_penalty: f64,
    /// Inner iterations consumed (across reinitializations).
    pub inner_iters: usize,
    /// True when the inner loop was restarted from a perturbed surface.
    pub reinitialized: bool,
    /// Anomalies to merge into the run trace.
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Initialization and anchors
// ---------------------------------------------------------------------------

/// Deterministic starting state: equal power weights, beams matched to the
/// strongest user's estimated combined channel and then projected away from
/// every eavesdropper row (the linearized leakage caps are scale-invariant
/// well above the noise floor, so a start that already sits near the
/// eavesdroppers' null space is what lets the convexified steps make
/// progress), with the budget split evenly across spaces and a
/// protocol-shaped surface with random phases.
pub fn init_state(
    real: &ChannelRealization,
    params: &SystemParams,
    protocol: Protocol,
    seed: u64,
) -> BeamformingState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_surface(params, protocol, &mut rng);
    let alpha: Vec<Vec<f64>> = (0..NUM_SPACES)
        .map(|k| {
            let j_k = params.users_in(k);
            vec![(1.0 / j_k as f64).sqrt(); j_k]
        })
        .collect();
    let f = matched_beams(real, params, protocol, &u);
    let tau = if protocol == Protocol::TimeSwitch { [0.5, 0.5] } else { [1.0, 1.0] };
    BeamformingState { protocol, f, alpha, u, tau }
}

/// Protocol-shaped surface draw: amplitudes fixed by the protocol, phases
/// uniform.
pub(super) fn random_surface(
    params: &SystemParams,
    protocol: Protocol,
    rng: &mut ChaCha8Rng,
) -> Vec<DVector<C64>> {
    (0..NUM_SPACES)
        .map(|k| {
            DVector::from_fn(params.m, |i, _| {
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                let amp = match protocol {
                    Protocol::EnergySplit => 0.5f64.sqrt(),
                    Protocol::TimeSwitch => 1.0,
                    // Binary families start from a balanced assignment:
                    // alternating elements for mode switching, the fixed
                    // halves for the static split.
                    Protocol::ModeSwitch => {
                        if (k == 0) == (i % 2 == 0) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Protocol::StaticSplit => {
                        if (k == 0) == (i < params.m / 2) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                C64::from_polar(amp, theta)
            })
        })
        .collect()
}

/// Per-space beams matched to the strongest user's estimated combined
/// channel through the given surface, projected away from the eavesdropper
/// rows and splitting the budget evenly.
fn matched_beams(
    real: &ChannelRealization,
    params: &SystemParams,
    protocol: Protocol,
    u: &[DVector<C64>],
) -> Vec<DVector<C64>> {
    (0..NUM_SPACES)
        .map(|k| {
            let basis = eve_basis(real, protocol, u, k, params.n);
            let link = &real.bobs[k][0];
            let combined = &link.hhat + link.ghat.adjoint() * &u[k];
            let norm = combined.norm();
            let dir = if norm > 1e-15 {
                combined / C64::new(norm, 0.0)
            } else {
                let mut e0 = DVector::zeros(params.n);
                e0[0] = C64::new(1.0, 0.0);
                e0
            };
            away_from_eves(&(dir * C64::new((params.p_max / 2.0).sqrt(), 0.0)), &basis)
        })
        .collect()
}

/// Orthonormal basis of the estimated eavesdropper rows that face cluster
/// `k`'s beams: the combined row through each space's surface, or the
/// direct row alone for the far space under time switching (its slot leaves
/// that space unserved by the surface). At most `n - 1` directions are
/// kept, so at least one dimension always remains for the served user.
pub(super) fn eve_basis(
    real: &ChannelRealization,
    protocol: Protocol,
    u: &[DVector<C64>],
    k: usize,
    n: usize,
) -> Vec<DVector<C64>> {
    let silent = DVector::zeros(u[0].len());
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for (s, eves) in real.eves.iter().enumerate() {
        let surface =
            if protocol == Protocol::TimeSwitch && s != k { &silent } else { &u[s] };
        for link in eves {
            let mut v: DVector<C64> =
                link_row(link, surface, ChanView::Estimated).adjoint();
            let scale = v.norm();
            for b in &basis {
                let coef = (b.adjoint() * &v)[(0, 0)];
                v -= b * coef;
            }
            if basis.len() + 1 < n && v.norm() > 1e-9 * scale {
                let len = v.norm();
                basis.push(v / C64::new(len, 0.0));
            }
        }
    }
    basis
}

/// Projection of a beam onto the orthogonal complement of `basis`, rescaled
/// to its original power; the unprojected beam when the projection
/// collapses (the user sits inside the eavesdropper span).
pub(super) fn away_from_eves(
    beam: &DVector<C64>,
    basis: &[DVector<C64>],
) -> DVector<C64> {
    let power = beam.norm_squared();
    let mut v = beam.clone();
    for b in basis {
        let coef = (b.adjoint() * &v)[(0, 0)];
        v -= b * coef;
    }
    let len = v.norm();
    if len > 1e-9 * power.sqrt() {
        v * C64::new((power / (len * len)).sqrt(), 0.0)
    } else {
        beam.clone()
    }
}

/// Product-surrogate anchor from a surrogate/consumption pair: the ratio
/// with the surrogate clamped away from zero.
#[inline]
pub(crate) fn anchor_from(psi: f64, rho: f64) -> f64 {
    rho / psi.max(1e-6)
}

/// Product-surrogate anchor `t = rho / psi` at the current state, with the
/// efficiency clamped away from zero.
pub fn product_anchor(
    state: &BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
) -> f64 {
    let rho = total_power(params, state.radiated_power());
    let ssr = secrecy_sum_rate(state, real, ChanView::Estimated, params.sigma2);
    anchor_from(ssr / rho, rho)
}

/// Exact secrecy energy efficiency on the estimated channels.
fn estimated_see(
    state: &BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
) -> f64 {
    secrecy_sum_rate(state, real, ChanView::Estimated, params.sigma2)
        / total_power(params, state.radiated_power())
}

// ---------------------------------------------------------------------------
// Step plumbing
// ---------------------------------------------------------------------------

/// Cluster plan, budget groups, and stored beams for the current state.
fn assemble(
    state: &BeamformingState,
    params: &SystemParams,
) -> (Vec<ClusterPlan>, Vec<(Vec<usize>, f64)>, Vec<Vec<DVector<C64>>>) {
    let plan = noma_plan(state.protocol, params, state.tau);
    let groups = noma_power_groups(plan.len(), params.p_max);
    let w0: Vec<Vec<DVector<C64>>> = (0..plan.len())
        .map(|c| (0..plan[c].bobs.len()).map(|j| state.beam(c, j)).collect())
        .collect();
    (plan, groups, w0)
}

/// Build and solve one step for an explicit plan, classifying the solver
/// outcome. The state-based drivers and the orthogonal baseline both lower
/// through here.
#[allow(clippy::too_many_arguments)]
pub(super) fn solve_step(
    real: &ChannelRealization,
    params: &SystemParams,
    protocol: Protocol,
    plan: &[ClusterPlan],
    groups: &[(Vec<usize>, f64)],
    w0: &[Vec<DVector<C64>>],
    u0: &[DVector<C64>],
    t: f64,
    step: &StepKind,
    tol: &SolverTolerances,
) -> Result<Extracted, StepStatus> {
    let input =
        SubproblemInput { real, params, protocol, plan, power_groups: groups, w0, u0, t };
    let built = build_subproblem(&input, step).expect("subproblem lowers cleanly");
    let sol = solve(&built.program, tol);
    match sol.status {
        SolveStatus::Optimal => {
            let x = sol.primal.expect("optimal solve carries a primal point");
            let got = built.extract(&x);
            debug_assert!(
                got.rho > 0.0,
                "consumed power sits above the static floor, got {}",
                got.rho
            );
            Ok(got)
        }
        SolveStatus::Infeasible => Err(StepStatus::Infeasible),
        SolveStatus::Unbounded | SolveStatus::NumericalFailure => {
            Err(StepStatus::NumericalFailure)
        }
    }
}

/// Build and solve one step at the current state.
fn attempt(
    state: &BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    step: &StepKind,
    tol: &SolverTolerances,
) -> Result<Extracted, StepStatus> {
    let (plan, groups, w0) = assemble(state, params);
    solve_step(
        real,
        params,
        state.protocol,
        &plan,
        &groups,
        &w0,
        &state.u,
        t,
        step,
        tol,
    )
}

/// Write accepted beams and weights back into the state.
fn apply_beams(state: &mut BeamformingState, got: &Extracted) {
    state.f = got.cluster_beams.clone();
    state.alpha = got.cluster_alphas.clone();
}

/// Reallocate per-signal power along the frozen beam directions. Accepts
/// only a certified-optimal point that does not decrease the surrogate.
pub fn power_subproblem(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    tol: &SolverTolerances,
) -> StepOutcome {
    match attempt(state, real, params, t, &StepKind::Power, tol) {
        Ok(got) => {
            if got.psi >= psi_curr - ACCEPT_SLACK {
                apply_beams(state, &got);
                StepOutcome { status: StepStatus::Accepted, psi: got.psi, slack: 0.0 }
            } else {
                StepOutcome { status: StepStatus::RejectedDecrease, psi: psi_curr, slack: 0.0 }
            }
        }
        Err(status) => StepOutcome { status, psi: psi_curr, slack: 0.0 },
    }
}

/// Redesign the per-cluster beams under the radiated-power budgets. With
/// `soften`, minimizes a shared constraint slack instead (feasibility
/// restoration) and accepts any certified-optimal point.
pub fn active_subproblem(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    tol: &SolverTolerances,
    soften: bool,
) -> StepOutcome {
    match attempt(state, real, params, t, &StepKind::Active { soften }, tol) {
        Ok(got) => {
            if soften {
                apply_beams(state, &got);
                StepOutcome { status: StepStatus::Accepted, psi: psi_curr, slack: got.slack }
            } else if got.psi >= psi_curr - ACCEPT_SLACK {
                apply_beams(state, &got);
                StepOutcome { status: StepStatus::Accepted, psi: got.psi, slack: 0.0 }
            } else {
                StepOutcome { status: StepStatus::RejectedDecrease, psi: psi_curr, slack: 0.0 }
            }
        }
        Err(status) => StepOutcome { status, psi: psi_curr, slack: 0.0 },
    }
}

// ---------------------------------------------------------------------------
// Penalized surface updates
// ---------------------------------------------------------------------------

/// Shared penalized convex-concave loop. `binary` adds the binarization
/// epigraph with its pull targets refreshed from the running surface each
/// inner iteration.
fn penalized_surface_loop(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    cfg: &AOConfig,
    binary: bool,
) -> PassiveOutcome {
    let backup_u = state.u.clone();
    let pccp = cfg.pccp;
    let mut warnings = Vec::new();
    let mut inner_iters = 0usize;
    let mut reinitialized = false;

    let mut psi_last = psi_curr;
    let mut closure = f64::INFINITY;
    let mut binary_pen = 0.0;
    let mut converged = false;

    'attempts: for attempt_idx in 0..2u64 {
        if attempt_idx > 0 {
            // Perturbed reinitialization after an exhausted budget.
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED + attempt_idx));
            state.u = random_surface(params, state.protocol, &mut rng);
            reinitialized = true;
        }
        let mut lambda = pccp.lambda0;
        for _ in 0..pccp.max_inner {
            inner_iters += 1;
            let weights = PassiveWeights {
                lambda,
                binary: binary.then(|| BinaryPenalty {
                    lambda,
                    d: binary_targets(&state.u),
                }),
            };
            let step = StepKind::Passive { weights };
            match attempt(state, real, params, t, &step, &cfg.solver) {
                Ok(got) => {
                    let step_l1: f64 = state
                        .u
                        .iter()
                        .zip(&got.surface)
                        .map(|(a, b)| (a - b).iter().map(|d| d.norm()).sum::<f64>())
                        .sum();
                    state.u = got.surface.clone();
                    psi_last = got.psi;
                    closure = got.closure_penalty;
                    binary_pen = got.binary_penalty;
                    let closed = closure <= pccp.closure_tol
                        && (!binary || binary_residual(&state.u) <= 1e-3);
                    if step_l1 <= pccp.step_tol && closed {
                        converged = true;
                        break 'attempts;
                    }
                    lambda = (lambda * pccp.growth).min(pccp.lambda_max);
                }
                Err(status) => {
                    // No trustworthy point: abandon this attempt.
                    warnings.push(format!(
                        "surface inner solve failed with {status:?} at lambda {lambda:.1e}"
                    ));
                    continue 'attempts;
                }
            }
        }
    }

    if !converged {
        warnings.push(format!(
            "surface update unconverged after {inner_iters} inner iterations \
             (closure {closure:.2e})"
        ));
    }

    // Refuse candidates that fail closure badly or decrease the surrogate.
    let closure_ok = closure <= pccp.closure_tol * CLOSURE_ACCEPT_FACTOR;
    if closure_ok && psi_last >= psi_curr - ACCEPT_SLACK {
        PassiveOutcome {
            status: StepStatus::Accepted,
            psi: psi_last,
            closure_penalty: closure,
            binary_penalty: binary_pen,
            inner_iters,
            reinitialized,
            warnings,
        }
    } else {
        state.u = backup_u;
        let status = if closure_ok {
            StepStatus::RejectedDecrease
        } else {
            StepStatus::NumericalFailure
        };
        warnings.push("surface candidate refused; previous surface kept".into());
        PassiveOutcome {
            status,
            psi: psi_curr,
            closure_penalty: closure,
            binary_penalty: binary_pen,
            inner_iters,
            reinitialized,
            warnings,
        }
    }
}

/// Binarization pull targets from the current amplitude shares: `d` is the
/// fixed-point map `(b + b^2) / (1 + b^2)`, whose only fixed points on
/// `[0, 1]` are the endpoints.
fn binary_targets(u: &[DVector<C64>]) -> Vec<Vec<f64>> {
    u.iter()
        .map(|space| {
            space
                .iter()
                .map(|x| {
                    let b = x.norm_sqr().clamp(0.0, 1.0);
                    (b + b * b) / (1.0 + b * b)
                })
                .collect()
        })
        .collect()
}

/// Largest distance of any amplitude share from the binary set.
fn binary_residual(u: &[DVector<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for space in u {
        for x in space {
            let b = x.norm_sqr();
            worst = worst.max(b.min((1.0 - b).abs()));
        }
    }
    worst
}

/// Surface update for the continuous-amplitude protocols (and the fixed
/// split, where only supported phases move).
pub fn pccp_passive_es(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    cfg: &AOConfig,
) -> PassiveOutcome {
    let out = penalized_surface_loop(state, real, params, t, psi_curr, cfg, false);
    if out.status == StepStatus::Accepted {
        project_protocol_amplitudes(state, params);
    }
    out
}

/// Surface update for mode switching: the penalized loop with binarization
/// epigraphs pulling every share toward `{0, 1}`.
pub fn ms_passive_step(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    cfg: &AOConfig,
) -> PassiveOutcome {
    penalized_surface_loop(state, real, params, t, psi_curr, cfg, true)
}

/// Protocol dispatcher for the surface step.
pub fn passive_subproblem(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    t: f64,
    psi_curr: f64,
    cfg: &AOConfig,
) -> PassiveOutcome {
    match state.protocol {
        Protocol::ModeSwitch => ms_passive_step(state, real, params, t, psi_curr, cfg),
        _ => pccp_passive_es(state, real, params, t, psi_curr, cfg),
    }
}

/// Snap unit-modulus protocols back onto their exact amplitude sets after a
/// surface step (the conic relaxation can undershoot slightly).
fn project_protocol_amplitudes(state: &mut BeamformingState, params: &SystemParams) {
    match state.protocol {
        Protocol::TimeSwitch => {
            for space in &mut state.u {
                for x in space.iter_mut() {
                    let n = x.norm();
                    if n > 1e-12 {
                        *x /= C64::new(n, 0.0);
                    } else {
                        *x = C64::new(1.0, 0.0);
                    }
                }
            }
        }
        Protocol::StaticSplit => {
            let m = params.m;
            for (k, space) in state.u.iter_mut().enumerate() {
                for (i, x) in space.iter_mut().enumerate() {
                    if (k == 0) == (i < m / 2) {
                        let n = x.norm();
                        *x = if n > 1e-12 {
                            *x / C64::new(n, 0.0)
                        } else {
                            C64::new(1.0, 0.0)
                        };
                    } else {
                        *x = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        Protocol::EnergySplit | Protocol::ModeSwitch => {}
    }
}

/// Rescale each element pair so its shares close to one exactly.
fn project_share_closure(state: &mut BeamformingState) {
    let m = state.u[0].len();
    for i in 0..m {
        let total: f64 = state.u.iter().map(|space| space[i].norm_sqr()).sum();
        if total > 1e-15 {
            let scale = C64::new((1.0 / total).sqrt(), 0.0);
            for space in &mut state.u {
                space[i] *= scale;
            }
        } else {
            state.u[0][i] = C64::new(0.5f64.sqrt(), 0.0);
            state.u[1][i] = C64::new(0.5f64.sqrt(), 0.0);
        }
    }
}

/// Round mode-switching shares to the binary set: each element keeps its
/// phase in the space holding the larger share and goes dark in the other.
fn round_binary_shares(state: &mut BeamformingState) {
    let m = state.u[0].len();
    for i in 0..m {
        let winner = if state.u[0][i].norm_sqr() >= state.u[1][i].norm_sqr() { 0 } else { 1 };
        for (k, space) in state.u.iter_mut().enumerate() {
            if k == winner {
                let n = space[i].norm();
                space[i] =
                    if n > 1e-12 { space[i] / C64::new(n, 0.0) } else { C64::new(1.0, 0.0) };
            } else {
                space[i] = C64::new(0.0, 0.0);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Outer driver
// ---------------------------------------------------------------------------

/// Estimated-channel feasibility of the rate floors, leakage caps, and
/// decoding order at the current state.
fn thresholds_met(
    state: &BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
) -> bool {
    for k in 0..NUM_SPACES {
        for j in 0..real.bobs[k].len() {
            if achievable_rate(state, real, ChanView::Estimated, params.sigma2, k, j)
                < params.rate_user - 1e-9
            {
                return false;
            }
            for s in 0..NUM_SPACES {
                for e in 0..real.eves[s].len() {
                    if eve_rate(state, real, ChanView::Estimated, params.sigma2, k, j, s, e)
                        > params.rate_eve + 1e-9
                    {
                        return false;
                    }
                }
            }
        }
    }
    decoding_order_ok(state, real, 1e-9)
}

/// Restoration pre-phase: from perturbed initializations, iterate the
/// softened beam step (each round re-anchors the linearizations at the
/// slack-minimizing beams of the previous one) until the shared constraint
/// slack closes. Returns the restored state, or `None` when every attempt
/// stalls above the tolerance.
fn restore_feasibility(
    real: &ChannelRealization,
    params: &SystemParams,
    protocol: Protocol,
    cfg: &AOConfig,
    tau: [f64; 2],
    trace: &mut TraceRecord,
) -> Option<BeamformingState> {
    for attempt_idx in 0..RESTORE_ATTEMPTS {
        let seed = cfg.seed.wrapping_add(attempt_idx.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut state = init_state(real, params, protocol, seed);
        state.tau = tau;
        let t = product_anchor(&state, real, params);
        let mut slack = f64::INFINITY;
        let mut status = StepStatus::Skipped;
        for _ in 0..RESTORE_ROUNDS {
            let out = active_subproblem(&mut state, real, params, t, 0.0, &cfg.solver, true);
            status = out.status;
            if out.status != StepStatus::Accepted {
                break;
            }
            let improved = out.slack < slack - RESTORE_TOL;
            slack = out.slack;
            if slack <= RESTORE_TOL || !improved {
                break;
            }
        }
        if status == StepStatus::Accepted && slack <= RESTORE_TOL {
            if attempt_idx > 0 {
                trace.warnings.push(format!(
                    "feasibility restored after {attempt_idx} perturbed reinitializations"
                ));
            }
            return Some(state);
        }
        trace.warnings.push(format!(
            "restoration attempt {attempt_idx}: status {status:?}, slack {slack:.3e}"
        ));
    }
    None
}

/// Shared outer loop: restoration pre-phase when the start violates the
/// thresholds, then power/beams/surface rounds with a per-iteration product
/// anchor until the surrogate settles. `tol`/`max_outer` override the
/// config (the slot-fraction search runs loosened inner loops).
pub(super) fn ao_loop(
    real: &ChannelRealization,
    params: &SystemParams,
    protocol: Protocol,
    cfg: &AOConfig,
    tol: f64,
    max_outer: usize,
    tau: [f64; 2],
) -> AoResult {
    let mut trace = TraceRecord::default();
    let mut state = init_state(real, params, protocol, cfg.seed);
    state.tau = tau;

    if !thresholds_met(&state, real, params) {
        match restore_feasibility(real, params, protocol, cfg, tau, &mut trace) {
            Some(restored) => state = restored,
            None => {
                trace
                    .warnings
                    .push("instance abandoned: feasibility restoration failed".into());
                let see = estimated_see(&state, real, params);
                return AoResult { state, psi: 0.0, see, trace, feasible: false };
            }
        }
    }

    let rho0 = total_power(params, state.radiated_power());
    let mut psi_curr =
        secrecy_sum_rate(&state, real, ChanView::Estimated, params.sigma2) / rho0;
    let mut psi_prev = psi_curr;
    let mut converged = false;

    for iteration in 0..max_outer {
        let started = Instant::now();
        let t = product_anchor(&state, real, params);

        let power = power_subproblem(&mut state, real, params, t, psi_curr, &cfg.solver);
        psi_curr = power.psi;
        let active =
            active_subproblem(&mut state, real, params, t, psi_curr, &cfg.solver, false);
        psi_curr = active.psi;
        let passive = passive_subproblem(&mut state, real, params, t, psi_curr, cfg);
        psi_curr = passive.psi;
        trace.warnings.extend(passive.warnings.iter().cloned());

        trace.iterations.push(IterationRecord {
            iteration,
            psi: psi_curr,
            see_estimated: estimated_see(&state, real, params),
            closure_penalty: passive.closure_penalty,
            binary_penalty: passive.binary_penalty,
            statuses: [power.status, active.status, passive.status],
            millis: started.elapsed().as_millis(),
        });

        if (psi_curr - psi_prev).abs() <= tol {
            converged = true;
            break;
        }
        psi_prev = psi_curr;
    }
    trace.converged = converged;

    finalize_state(&mut state, real, params, &mut trace);
    let see = estimated_see(&state, real, params);
    AoResult { state, psi: psi_curr, see, trace, feasible: true }
}

/// Exact-feasibility finish: binary rounding for mode switching (flagging
/// visible efficiency damage), exact share closure for the split surfaces,
/// and exact unit modulus for the others.
fn finalize_state(
    state: &mut BeamformingState,
    real: &ChannelRealization,
    params: &SystemParams,
    trace: &mut TraceRecord,
) {
    match state.protocol {
        Protocol::ModeSwitch => {
            let before = estimated_see(state, real, params);
            round_binary_shares(state);
            let after = estimated_see(state, real, params);
            if before > 0.0 && (before - after) > 0.01 * before {
                trace.warnings.push(format!(
                    "binary rounding cost {:.2}% efficiency",
                    100.0 * (before - after) / before
                ));
            }
        }
        Protocol::EnergySplit => project_share_closure(state),
        Protocol::TimeSwitch | Protocol::StaticSplit => {
            project_protocol_amplitudes(state, params);
        }
    }
}

/// Full alternating optimization for the simultaneous full-time protocols.
/// Time switching runs through its two-layer slot-fraction driver instead.
pub fn ao_run(
    protocol: Protocol,
    real: &ChannelRealization,
    params: &SystemParams,
    cfg: &AOConfig,
) -> AoResult {
    assert_ne!(
        protocol,
        Protocol::TimeSwitch,
        "time switching runs through its two-layer driver"
    );
    cfg.validate().expect("optimizer configuration is valid");
    ao_loop(real, params, protocol, cfg, cfg.tol, cfg.max_outer, [1.0, 1.0])
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_realization, Geometry, UncertaintyConfig};

    fn tiny_params() -> SystemParams {
        SystemParams { n: 4, m: 2, j_r: 1, j_t: 1, ..SystemParams::default() }
    }

    fn tiny_real(perfect: bool) -> ChannelRealization {
        let unc =
            if perfect { UncertaintyConfig::perfect() } else { UncertaintyConfig::default() };
        generate_realization(&tiny_params(), &Geometry::default(), &unc, 7)
            .expect("tiny scene generates")
    }

    // 1. Initialization invariants: exact weight normalization, exact power
    //    budget, protocol-shaped surface, determinism.
    #[test]
    fn init_state_invariants() {
        let params = tiny_params();
        let real = tiny_real(true);
        for protocol in [
            Protocol::EnergySplit,
            Protocol::ModeSwitch,
            Protocol::TimeSwitch,
            Protocol::StaticSplit,
        ] {
            let state = init_state(&real, &params, protocol, 3);
            for alphas in &state.alpha {
                let s: f64 = alphas.iter().map(|a| a * a).sum();
                assert!((s - 1.0).abs() < 1e-12, "weights normalize for {protocol:?}");
            }
            let radiated = state.radiated_power();
            assert!(
                (radiated - params.p_max).abs() < 1e-9,
                "budget used exactly for {protocol:?}, got {radiated}"
            );
            state.validate(&params).expect("initial state is valid");
        }
        let a = init_state(&real, &params, Protocol::EnergySplit, 9);
        let b = init_state(&real, &params, Protocol::EnergySplit, 9);
        assert_eq!(a.u[0][0], b.u[0][0], "same seed draws the same surface");
    }

    // 2. Anchor ratio rule and its clamp.
    #[test]
    fn anchor_ratio_and_clamp() {
        assert!((anchor_from(0.5, 11.0) - 22.0).abs() < 1e-12, "plain ratio");
        assert!((anchor_from(0.0, 5.0) - 5e6).abs() < 1e-6, "clamped near zero");
        let params = tiny_params();
        let real = tiny_real(true);
        let state = init_state(&real, &params, Protocol::EnergySplit, 1);
        let t = product_anchor(&state, &real, &params);
        assert!(t.is_finite() && t > 0.0, "anchor is a positive scale, got {t}");
    }

    // 3. One full outer loop on a perfect-CSI scene: surrogate trace never
    //    decreases, the final state validates, and efficiency is positive.
    #[test]
    fn ao_run_monotone_and_valid() {
        let params = tiny_params();
        let real = tiny_real(true);
        let mut cfg = AOConfig { tol: 1e-3, max_outer: 4, ..AOConfig::default() };
        cfg.pccp.max_inner = 5;
        let out = ao_run(Protocol::EnergySplit, &real, &params, &cfg);
        assert!(out.feasible, "instance must be feasible: {:?}", out.trace.warnings);
        assert!(!out.trace.iterations.is_empty(), "at least one iteration runs");
        assert!(
            out.trace.psi_nondecreasing(1e-6),
            "surrogate trace must be nondecreasing: {:?}",
            out.trace.lines()
        );
        out.state.validate(&params).expect("final state is valid");
        assert!(out.see > 0.0, "efficiency is positive, got {}", out.see);
    }

    // 4. Determinism: identical config and seed reproduce the exact trace.
    #[test]
    fn ao_run_is_deterministic() {
        let params = tiny_params();
        let real = tiny_real(true);
        let mut cfg = AOConfig { tol: 1e-3, max_outer: 2, ..AOConfig::default() };
        cfg.pccp.max_inner = 3;
        let a = ao_run(Protocol::EnergySplit, &real, &params, &cfg);
        let b = ao_run(Protocol::EnergySplit, &real, &params, &cfg);
        let pa: Vec<f64> = a.trace.iterations.iter().map(|it| it.psi).collect();
        let pb: Vec<f64> = b.trace.iterations.iter().map(|it| it.psi).collect();
        assert_eq!(pa, pb, "psi traces must match bitwise");
        assert_eq!(a.see, b.see, "final efficiency must match bitwise");
    }

    // 5. Mode switching ends binary: every element dark in one space and at
    //    full amplitude in the other.
    #[test]
    fn mode_switch_ends_binary() {
        let params = tiny_params();
        let real = tiny_real(true);
        let mut cfg = AOConfig { tol: 1e-3, max_outer: 3, ..AOConfig::default() };
        cfg.pccp.max_inner = 5;
        let out = ao_run(Protocol::ModeSwitch, &real, &params, &cfg);
        assert!(out.feasible);
        for i in 0..params.m {
            let b0 = out.state.u[0][i].norm_sqr();
            let b1 = out.state.u[1][i].norm_sqr();
            assert!(
                (b0 - 1.0).abs() < 1e-9 && b1 < 1e-18
                    || (b1 - 1.0).abs() < 1e-9 && b0 < 1e-18,
                "element {i} must be binary, got shares ({b0}, {b1})"
            );
        }
        out.state.validate(&params).expect("rounded state is valid");
    }

    // 6. The driver rejects the time-switching protocol.
    #[test]
    #[should_panic(expected = "two-layer driver")]
    fn ao_run_rejects_time_switching() {
        let params = tiny_params();
        let real = tiny_real(true);
        ao_run(Protocol::TimeSwitch, &real, &params, &AOConfig::default());
    }
}
