//! Single-path assembly of one optimizer subproblem as a conic program.
//!
//! # Overview
//!
//! Every step of the alternating loop — power weights, transmit beams,
//! surface coefficients — optimizes a different variable group under the
//! *same* robust constraint system. This module builds that system once,
//! generically over the free group, so the three steps cannot drift apart:
//!
//! ```text
//!   variables   psi (efficiency epigraph), rho (consumed-power epigraph),
//!               r[c][j] (rate terms), re[c][j][s][e] (leakage terms),
//!               eta / etae (interference budgets), order margins,
//!               one step-specific group, S-procedure multipliers
//!   rows        rate floors, leakage caps, efficiency epigraph (SOC),
//!               consumed-power ledger (SOC or equality),
//!               per-stage robust certificates (PSD blocks, with exact
//!               linear degenerations when no uncertainty survives),
//!               decoding-order certificates, step-specific structure
//! ```
//!
//! A [`ClusterPlan`] abstracts the access scheme: each cluster lists its
//! users in decoding order, the cluster (if any) whose beam interferes, and
//! a time share that scales thresholds, noise, and the secrecy objective.
//! Full-time protocols use share 1, time switching uses its slot fractions,
//! and the orthogonal baseline uses `1/J` — with beams stored in
//! slot-averaged form (`stored = sqrt(share) * transmitted`) so the radiated
//! power and the conic rows keep one shape for every scheme.
//!
//! Channels enter the rows normalized by the noise deviation (`h / sigma`),
//! which moves constraint constants to order one without touching any
//! decision variable; rates and powers are invariant under this scaling.
//! The builder also returns a catalog of every emitted PSD block so the
//! solver-cost model can be audited against the real construction.

use nalgebra::{DMatrix, DVector};

use conic_core::ConicProgram;

use crate::channel::{ChannelRealization, Link, SystemParams, NUM_SPACES};
use crate::lmi::affine::{lift_vec, LinC};
use crate::lmi::blocks::{
    interference_upper_block, leakage_upper_block, power_sum_lower_block, s_procedure_psd,
    ErrorRadii,
};
use crate::lmi::emit::{add_nonneg, add_psd, add_soc, add_zero, EmitError};
use crate::lmi::linearize::{
    combined_scalar, combined_scalar_num, product_upper_soc_rows, quadratic_lower_bound,
    rate_product_tangent,
};
use crate::metrics::{total_power, Protocol};
use crate::C64;

// ---------------------------------------------------------------------------
// Cluster plans
// ---------------------------------------------------------------------------

/// One decoding cluster: which users share a beam, who interferes, and the
/// time share scaling its rows.
#[derive(Clone, Debug)]
pub(crate) struct ClusterPlan {
    /// Space whose surface vector serves this cluster.
    pub space: usize,
    /// Time share of the cluster: thresholds divide by it, noise multiplies
    /// by it, and its secrecy terms enter the objective weighted by it.
    pub share: f64,
    /// User indices within `space`, strongest first (decoding order).
    pub bobs: Vec<usize>,
    /// Cluster whose whole beam interferes with every receiver here.
    pub cross: Option<usize>,
}

/// Simultaneous-access plan: one cluster per space, full time share for the
/// full-surface protocols or the slot fractions for time switching (which
/// also removes cross-space interference).
pub(crate) fn noma_plan(
    protocol: Protocol,
    params: &SystemParams,
    tau: [f64; 2],
) -> Vec<ClusterPlan> {
    (0..NUM_SPACES)
        .map(|k| ClusterPlan {
            space: k,
            share: if protocol == Protocol::TimeSwitch { tau[k] } else { 1.0 },
            bobs: (0..params.users_in(k)).collect(),
            cross: if protocol == Protocol::TimeSwitch { None } else { Some(1 - k) },
        })
        .collect()
}

/// Orthogonal-access plan: one single-user cluster per slot, share `1/J`,
/// no interference between slots.
pub(crate) fn oma_plan(params: &SystemParams) -> Vec<ClusterPlan> {
    let share = 1.0 / params.num_users() as f64;
    let mut plan = Vec::with_capacity(params.num_users());
    for k in 0..NUM_SPACES {
        for j in 0..params.users_in(k) {
            plan.push(ClusterPlan { space: k, share, bobs: vec![j], cross: None });
        }
    }
    plan
}

/// Simultaneous-access budget: one joint cap over every cluster beam.
pub(crate) fn noma_power_groups(num_clusters: usize, p_max: f64) -> Vec<(Vec<usize>, f64)> {
    vec![((0..num_clusters).collect(), p_max)]
}

/// Orthogonal-access budget: each slot may radiate the full budget, which
/// caps its stored slot-averaged beam at `P_max / J`.
pub(crate) fn oma_power_groups(num_clusters: usize, p_max: f64) -> Vec<(Vec<usize>, f64)> {
    (0..num_clusters).map(|c| (vec![c], p_max / num_clusters as f64)).collect()
}

// ---------------------------------------------------------------------------
// Step kinds
// ---------------------------------------------------------------------------

/// Binarization pull for mode-switching surface steps.
#[derive(Clone, Debug)]
pub(crate) struct BinaryPenalty {
    /// Weight on the binarization epigraph terms.
    pub lambda: f64,
    /// Per-space, per-element pull target `d = (b + b^2) / (1 + b^2)`
    /// evaluated at the current shares (its fixed points are exactly 0
    /// and 1).
    pub d: Vec<Vec<f64>>,
}

/// Penalty weights for the surface step.
#[derive(Clone, Debug)]
pub(crate) struct PassiveWeights {
    /// Weight on the amplitude-closure slacks.
    pub lambda: f64,
    /// Binarization epigraph (mode switching only).
    pub binary: Option<BinaryPenalty>,
}

/// Which variable group the subproblem frees.
#[derive(Clone, Debug)]
pub(crate) enum StepKind {
    /// Per-signal amplitudes along the current beam directions.
    Power,
    /// Per-cluster transmit beams under the radiated-power budgets. With
    /// `soften`, one shared slack relaxes every rate floor and leakage cap
    /// and is minimized instead of the efficiency (feasibility restoration).
    Active {
        /// Relax floors/caps by a minimized shared slack.
        soften: bool,
    },
    /// Surface coefficients under penalized closure rows.
    Passive {
        /// Penalty weights for closure and binarization.
        weights: PassiveWeights,
    },
}

// ---------------------------------------------------------------------------
// Block catalog
// ---------------------------------------------------------------------------

/// Robust-certificate families emitted by the subproblem builder.
///
/// Each family is one linear-matrix-inequality shape. The builder records
/// every emitted block so the solver-cost model can be audited against the
/// real construction rather than a hand-maintained table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockFamily {
    /// Anchored lower bound on a legitimate stage's signal power against the
    /// tangent rate surrogate.
    RateLower,
    /// Schur upper bound on a legitimate stage's interference budget.
    InterferenceUpper,
    /// Schur upper bound on one leaked signal power against the tangent
    /// rate surrogate.
    LeakageUpper,
    /// Anchored lower bound on an eavesdropper's interference power.
    EveInterferenceLower,
    /// Anchored lower bound on the stronger user's received signal power in
    /// a decoding-order pair.
    OrderLower,
    /// Schur upper bound on the weaker user's received signal power in a
    /// decoding-order pair.
    OrderUpper,
}

/// One emitted PSD block: family and complex-side dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct BlockShape {
    /// Certificate family.
    pub family: BlockFamily,
    /// Complex dimension before the real embedding.
    pub complex_dim: usize,
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// Everything a subproblem build needs besides the free variable group.
pub(crate) struct SubproblemInput<'a> {
    /// Channel realization (estimates and certified radii).
    pub real: &'a ChannelRealization,
    /// System constants.
    pub params: &'a SystemParams,
    /// Surface protocol (drives eavesdropper coupling and surface rows).
    pub protocol: Protocol,
    /// Decoding clusters.
    pub plan: &'a [ClusterPlan],
    /// Radiated-power budgets as `(cluster indices, cap)` groups.
    pub power_groups: &'a [(Vec<usize>, f64)],
    /// Stored beams at the iterate, `[cluster][signal]`.
    pub w0: &'a [Vec<DVector<C64>>],
    /// Surface vectors at the iterate, `[space]`.
    pub u0: &'a [DVector<C64>],
    /// Product-surrogate anchor, `t ~ rho / psi` at the iterate.
    pub t: f64,
}

// ---------------------------------------------------------------------------
// Variable map
// ---------------------------------------------------------------------------

/// Surface-element variables for one `(space, element)` slot.
struct SurfVars {
    /// Real/imaginary parts of the coefficient.
    u_re: usize,
    u_im: usize,
    /// Convexified amplitude-closure slacks (both penalized).
    c: usize,
    chat: usize,
    /// Energy share toward this space (energy-splitting and mode-switching
    /// surfaces; constant elsewhere).
    b: Option<usize>,
    /// Binarization epigraph (mode switching only).
    s_bin: Option<usize>,
}

/// Step-specific variable group.
enum StepVars {
    /// Amplitudes `a[c][j]` along fixed unit directions.
    Power { amp: Vec<Vec<usize>>, dirs: Vec<DVector<C64>> },
    /// Per-cluster beams as `2N` stacked reals starting at `f[c]`, plus the
    /// optional restoration slack.
    Active { f: Vec<usize>, slack: Option<usize> },
    /// Per-`(space, element)` surface variables; `None` off the support.
    Passive { elems: Vec<Vec<Option<SurfVars>>> },
}

/// Indices extraction needs back out of the solved program; the rate,
/// interference, and ordering variables only feed constraints and stay
/// internal to the builder.
struct VarMap {
    psi: usize,
    rho: usize,
    step: StepVars,
}

// ---------------------------------------------------------------------------
// Scaled links and anchors
// ---------------------------------------------------------------------------

/// Channel estimate and radii divided by the noise deviation, so that the
/// effective noise power is the bare time share.
struct ScaledLink {
    hhat: DVector<C64>,
    ghat: DMatrix<C64>,
    radii: ErrorRadii,
}

#[inline]
fn scale_link(link: &Link, inv_sigma: f64) -> ScaledLink {
    ScaledLink {
        hhat: &link.hhat * C64::new(inv_sigma, 0.0),
        ghat: &link.ghat * C64::new(inv_sigma, 0.0),
        radii: ErrorRadii { direct: link.xi * inv_sigma, cascade: link.zeta * inv_sigma },
    }
}

/// Interferers of signal `(c, j)`: own-cluster signals before `j`, then every
/// signal of the crossing cluster. The order is part of the block layout.
fn members(plan: &[ClusterPlan], c: usize, j: usize) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = (0..j).map(|i| (c, i)).collect();
    if let Some(cc) = plan[c].cross {
        v.extend((0..plan[cc].bobs.len()).map(|i| (cc, i)));
    }
    v
}

/// Power weights implied by stored beams: `||w_j|| / sqrt(sum ||w_i||^2)`,
/// uniform when the cluster radiates nothing.
pub(crate) fn recover_alphas(w0_c: &[DVector<C64>]) -> Vec<f64> {
    let total: f64 = w0_c.iter().map(|w| w.norm_squared()).sum();
    if total <= 1e-24 {
        let uniform = (1.0 / w0_c.len() as f64).sqrt();
        return vec![uniform; w0_c.len()];
    }
    w0_c.iter().map(|w| (w.norm_squared() / total).sqrt()).collect()
}

/// Scalar anchors of every tangent surrogate and anchored expansion,
/// evaluated at the iterate on the estimated (noise-scaled) channels.
struct Anchors {
    /// Interference-plus-noise per `(cluster, signal, stage)`.
    eta0: Vec<Vec<Vec<f64>>>,
    /// Rate term per `(cluster, signal)`: the worst stage's value.
    r0: Vec<Vec<f64>>,
    /// Eavesdropper interference per `(cluster, signal, space, eve)`.
    eta_e0: Vec<Vec<Vec<Vec<f64>>>>,
    /// Leakage term per `(cluster, signal, space, eve)`.
    r_e0: Vec<Vec<Vec<Vec<f64>>>>,
    /// Received-amplitude anchor per `(cluster, signal, space, eve)` over
    /// the member beams, for the interference-floor expansion.
    q0: Vec<Vec<Vec<Vec<DVector<C64>>>>>,
}

/// `true` when this eavesdropper hears only its direct path: under time
/// switching the surface serves one space per slot, so an eavesdropper
/// outside the transmitting cluster's space gets no cascaded component.
#[inline]
fn eve_is_direct_only(protocol: Protocol, cluster_space: usize, eve_space: usize) -> bool {
    protocol == Protocol::TimeSwitch && eve_space != cluster_space
}

fn compute_anchors(
    input: &SubproblemInput,
    sb: &[Vec<ScaledLink>],
    se: &[Vec<ScaledLink>],
) -> Anchors {
    let plan = input.plan;
    let m_elems = input.params.m;
    let zero_u = DVector::<C64>::zeros(m_elems);

    let mut eta0 = Vec::with_capacity(plan.len());
    let mut r0 = Vec::with_capacity(plan.len());
    let mut eta_e0 = Vec::with_capacity(plan.len());
    let mut r_e0 = Vec::with_capacity(plan.len());
    let mut q0 = Vec::with_capacity(plan.len());

    for (c, cluster) in plan.iter().enumerate() {
        let noise = cluster.share;
        let u_own = &input.u0[cluster.space];
        let mut c_eta0 = Vec::new();
        let mut c_r0 = Vec::new();
        let mut c_eta_e0 = Vec::new();
        let mut c_r_e0 = Vec::new();
        let mut c_q0 = Vec::new();

        for j in 0..cluster.bobs.len() {
            let mem = members(plan, c, j);
            let w_own = &input.w0[c][j];

            // Legitimate stages: interference then the worst-stage rate.
            let mut stage_eta = Vec::with_capacity(j + 1);
            let mut rate = f64::INFINITY;
            for &l in &cluster.bobs[..=j] {
                let link = &sb[cluster.space][l];
                let sig =
                    combined_scalar_num(&link.hhat, &link.ghat, u_own, w_own).norm_sqr();
                let interf: f64 = mem
                    .iter()
                    .map(|&(mc, mj)| {
                        combined_scalar_num(&link.hhat, &link.ghat, u_own, &input.w0[mc][mj])
                            .norm_sqr()
                    })
                    .sum();
                let denom = interf + noise;
                stage_eta.push(denom);
                rate = rate.min((sig / denom).ln_1p() / std::f64::consts::LN_2);
            }
            c_eta0.push(stage_eta);
            c_r0.push(rate);

            // Eavesdroppers in both spaces.
            let mut j_eta_e0 = Vec::with_capacity(NUM_SPACES);
            let mut j_r_e0 = Vec::with_capacity(NUM_SPACES);
            let mut j_q0 = Vec::with_capacity(NUM_SPACES);
            for (s, eves) in se.iter().enumerate() {
                let u_eff = if eve_is_direct_only(input.protocol, cluster.space, s) {
                    &zero_u
                } else {
                    &input.u0[s]
                };
                let mut s_eta = Vec::with_capacity(eves.len());
                let mut s_rate = Vec::with_capacity(eves.len());
                let mut s_q = Vec::with_capacity(eves.len());
                for link in eves {
                    let anchor = DVector::from_iterator(
                        mem.len(),
                        mem.iter().map(|&(mc, mj)| {
                            combined_scalar_num(
                                &link.hhat,
                                &link.ghat,
                                u_eff,
                                &input.w0[mc][mj],
                            )
                            .conj()
                        }),
                    );
                    let sig =
                        combined_scalar_num(&link.hhat, &link.ghat, u_eff, w_own).norm_sqr();
                    let denom = anchor.norm_squared() + noise;
                    s_eta.push(denom);
                    s_rate.push((sig / denom).ln_1p() / std::f64::consts::LN_2);
                    s_q.push(anchor);
                }
                j_eta_e0.push(s_eta);
                j_r_e0.push(s_rate);
                j_q0.push(s_q);
            }
            c_eta_e0.push(j_eta_e0);
            c_r_e0.push(j_r_e0);
            c_q0.push(j_q0);
        }
        eta0.push(c_eta0);
        r0.push(c_r0);
        eta_e0.push(c_eta_e0);
        r_e0.push(c_r_e0);
        q0.push(c_q0);
    }
    Anchors { eta0, r0, eta_e0, r_e0, q0 }
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Scale by a real factor.
#[inline]
fn rs(e: &LinC, x: f64) -> LinC {
    e.scale(C64::new(x, 0.0))
}

/// Allocate one direct/cascade multiplier pair, registered for the batched
/// sign constraint.
#[inline]
fn mult_pair(prog: &mut ConicProgram, mults: &mut Vec<usize>, tag: &str) -> (usize, usize) {
    let mh = prog.add_var(format!("mh.{tag}"));
    let mg = prog.add_var(format!("mg.{tag}"));
    mults.push(mh);
    mults.push(mg);
    (mh, mg)
}

/// Anchored affine floor on a received-power sum plus noise against the
/// interference-floor variable; used directly as a linear row when no
/// channel uncertainty survives (it is the corner of the robust block).
fn anchored_power_corner(
    link: &ScaledLink,
    cols: &[Vec<LinC>],
    u: &[LinC],
    anchor: &DVector<C64>,
    noise: f64,
    eta_e: &LinC,
) -> LinC {
    let mut acc = LinC::zero();
    for (l, w) in cols.iter().enumerate() {
        let qhat = combined_scalar(&link.hhat, &link.ghat, u, w).conj();
        acc = acc.add(&qhat.scale(anchor[l].conj()));
    }
    acc.two_re()
        .sub(&LinC::real_constant(anchor.norm_squared()))
        .add(&LinC::real_constant(noise))
        .sub(eta_e)
}

/// A subproblem lowered to a conic program, with its variable map and the
/// catalog of emitted PSD blocks.
pub(crate) struct BuiltSubproblem {
    /// The assembled program (maximization).
    pub program: ConicProgram,
    /// Every emitted PSD block, in emission order.
    pub catalog: Vec<BlockShape>,
    vars: VarMap,
    soften: bool,
    u0: Vec<DVector<C64>>,
    f0: Vec<DVector<C64>>,
    alphas0: Vec<Vec<f64>>,
}

/// Build the conic program for one step of the alternating loop.
///
/// The free group is `step`; everything else is frozen at the iterate
/// (`w0`, `u0`). Exactly one of the beam/surface groups carries variables,
/// so every certificate stays affine by construction (a bilinear product
/// would panic inside the expression algebra).
pub(crate) fn build_subproblem(
    input: &SubproblemInput,
    step: &StepKind,
) -> Result<BuiltSubproblem, EmitError> {
    let params = input.params;
    let plan = input.plan;
    let nc = plan.len();
    assert_eq!(input.w0.len(), nc, "one beam set per cluster");
    assert_eq!(input.u0.len(), NUM_SPACES, "one surface vector per space");
    for (c, cluster) in plan.iter().enumerate() {
        assert_eq!(input.w0[c].len(), cluster.bobs.len(), "one beam per signal");
        assert!(cluster.share > 0.0, "cluster share must be positive");
    }
    assert!(input.t > 0.0, "product anchor must be positive");

    let n = params.n;
    let m_elems = params.m;
    let inv_sigma = 1.0 / params.sigma2.sqrt();
    let sb: Vec<Vec<ScaledLink>> = input
        .real
        .bobs
        .iter()
        .map(|sp| sp.iter().map(|l| scale_link(l, inv_sigma)).collect())
        .collect();
    let se: Vec<Vec<ScaledLink>> = input
        .real
        .eves
        .iter()
        .map(|sp| sp.iter().map(|l| scale_link(l, inv_sigma)).collect())
        .collect();

    let alphas0: Vec<Vec<f64>> = input.w0.iter().map(|ws| recover_alphas(ws)).collect();
    let f0: Vec<DVector<C64>> = (0..nc)
        .map(|c| {
            let mut acc = DVector::zeros(n);
            for (j, w) in input.w0[c].iter().enumerate() {
                acc += w * C64::new(alphas0[c][j], 0.0);
            }
            acc
        })
        .collect();
    let beta0: Vec<f64> = input.u0.iter().map(|u| u.norm_squared()).collect();
    let radiated0: f64 = input.w0.iter().flatten().map(|w| w.norm_squared()).sum();
    let anchors = compute_anchors(input, &sb, &se);

    let mut prog = ConicProgram::new();
    let mut catalog = Vec::new();
    let mut mults: Vec<usize> = Vec::new();

    // --- Variable allocation -------------------------------------------
    let psi = prog.add_var("psi");
    let rho = prog.add_var("rho");
    let r: Vec<Vec<usize>> = (0..nc)
        .map(|c| (0..plan[c].bobs.len()).map(|j| prog.add_var(format!("r[{c}][{j}]"))).collect())
        .collect();
    let r_e: Vec<Vec<Vec<Vec<usize>>>> = (0..nc)
        .map(|c| {
            (0..plan[c].bobs.len())
                .map(|j| {
                    (0..NUM_SPACES)
                        .map(|s| {
                            (0..se[s].len())
                                .map(|e| prog.add_var(format!("re[{c}][{j}][{s}][{e}]")))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let eta: Vec<Vec<Vec<usize>>> = (0..nc)
        .map(|c| {
            (0..plan[c].bobs.len())
                .map(|j| {
                    (0..=j).map(|l| prog.add_var(format!("eta[{c}][{j}][{l}]"))).collect()
                })
                .collect()
        })
        .collect();
    let eta_e: Vec<Vec<Vec<Vec<usize>>>> = (0..nc)
        .map(|c| {
            (0..plan[c].bobs.len())
                .map(|j| {
                    (0..NUM_SPACES)
                        .map(|s| {
                            (0..se[s].len())
                                .map(|e| prog.add_var(format!("etae[{c}][{j}][{s}][{e}]")))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let varsigma: Vec<Vec<usize>> = (0..nc)
        .map(|c| {
            (0..plan[c].bobs.len().saturating_sub(1))
                .map(|p| prog.add_var(format!("order[{c}][{p}]")))
                .collect()
        })
        .collect();

    let step_vars = match step {
        StepKind::Power => {
            let amp: Vec<Vec<usize>> = (0..nc)
                .map(|c| {
                    (0..plan[c].bobs.len())
                        .map(|j| prog.add_var(format!("a[{c}][{j}]")))
                        .collect()
                })
                .collect();
            let dirs: Vec<DVector<C64>> = f0
                .iter()
                .map(|f| {
                    let norm = f.norm();
                    if norm > 1e-12 {
                        f / C64::new(norm, 0.0)
                    } else {
                        let mut e0 = DVector::zeros(n);
                        e0[0] = C64::new(1.0, 0.0);
                        e0
                    }
                })
                .collect();
            StepVars::Power { amp, dirs }
        }
        StepKind::Active { soften } => {
            let f: Vec<usize> = (0..nc).map(|c| prog.add_vars(&format!("f[{c}]"), 2 * n)).collect();
            let slack = soften.then(|| prog.add_var("slack"));
            StepVars::Active { f, slack }
        }
        StepKind::Passive { weights } => {
            let elems: Vec<Vec<Option<SurfVars>>> = (0..NUM_SPACES)
                .map(|s| {
                    (0..m_elems)
                        .map(|m| {
                            if !surface_support(input.protocol, m_elems, s, m) {
                                return None;
                            }
                            Some(SurfVars {
                                u_re: prog.add_var(format!("u_re[{s}][{m}]")),
                                u_im: prog.add_var(format!("u_im[{s}][{m}]")),
                                c: prog.add_var(format!("c[{s}][{m}]")),
                                chat: prog.add_var(format!("chat[{s}][{m}]")),
                                b: matches!(
                                    input.protocol,
                                    Protocol::EnergySplit | Protocol::ModeSwitch
                                )
                                .then(|| prog.add_var(format!("b[{s}][{m}]"))),
                                s_bin: weights
                                    .binary
                                    .is_some()
                                    .then(|| prog.add_var(format!("sbin[{s}][{m}]"))),
                            })
                        })
                        .collect()
                })
                .collect();
            StepVars::Passive { elems }
        }
    };

    // --- Expressions for beams and surface vectors ----------------------
    let u_zero: Vec<LinC> = vec![LinC::zero(); m_elems];
    let u_exprs: Vec<Vec<LinC>> = (0..NUM_SPACES)
        .map(|s| match &step_vars {
            StepVars::Passive { elems } => (0..m_elems)
                .map(|m| match &elems[s][m] {
                    Some(sv) => LinC::complex_var(sv.u_re, sv.u_im),
                    None => LinC::constant(input.u0[s][m]),
                })
                .collect(),
            _ => lift_vec(&input.u0[s]),
        })
        .collect();
    let beam_exprs: Vec<Vec<Vec<LinC>>> = (0..nc)
        .map(|c| {
            (0..plan[c].bobs.len())
                .map(|j| match &step_vars {
                    StepVars::Power { amp, dirs } => (0..n)
                        .map(|i| LinC::var(amp[c][j]).scale(dirs[c][i]))
                        .collect(),
                    StepVars::Active { f, .. } => (0..n)
                        .map(|i| {
                            rs(
                                &LinC::complex_var(f[c] + 2 * i, f[c] + 2 * i + 1),
                                alphas0[c][j],
                            )
                        })
                        .collect(),
                    StepVars::Passive { .. } => lift_vec(&input.w0[c][j]),
                })
                .collect()
        })
        .collect();

    // --- Objective -------------------------------------------------------
    let soften = matches!(step, StepKind::Active { soften: true });
    let slack_var = match &step_vars {
        StepVars::Active { slack, .. } => *slack,
        _ => None,
    };
    let mut objective: Vec<(usize, f64)> = Vec::new();
    if soften {
        objective.push((slack_var.expect("soften allocates the slack"), -1.0));
    } else {
        objective.push((psi, 1.0));
        if let (StepKind::Passive { weights }, StepVars::Passive { elems }) = (step, &step_vars) {
            for row in elems.iter().flatten().flatten() {
                objective.push((row.c, -weights.lambda));
                objective.push((row.chat, -weights.lambda));
                if let (Some(s_bin), Some(binary)) = (row.s_bin, &weights.binary) {
                    objective.push((s_bin, -binary.lambda));
                }
            }
        }
    }
    prog.set_objective(objective, true)?;

    // --- Signs, floors, caps ---------------------------------------------
    let mut signs = vec![LinC::var(psi)];
    for c in 0..nc {
        for j in 0..plan[c].bobs.len() {
            for s in 0..NUM_SPACES {
                for e in 0..se[s].len() {
                    signs.push(LinC::var(r_e[c][j][s][e]));
                    signs.push(LinC::var(eta_e[c][j][s][e]));
                }
            }
        }
    }
    if let Some(sv) = slack_var {
        signs.push(LinC::var(sv));
    }
    add_nonneg(&mut prog, "signs", &signs)?;

    let slack_expr = slack_var.map(LinC::var).unwrap_or_else(LinC::zero);
    let mut rate_floors = Vec::new();
    let mut leakage_caps = Vec::new();
    for c in 0..nc {
        let share = plan[c].share;
        for j in 0..plan[c].bobs.len() {
            rate_floors.push(
                LinC::var(r[c][j])
                    .sub(&LinC::real_constant(params.rate_user / share))
                    .add(&slack_expr),
            );
            for s in 0..NUM_SPACES {
                for e in 0..se[s].len() {
                    leakage_caps.push(
                        LinC::real_constant(params.rate_eve / share)
                            .sub(&LinC::var(r_e[c][j][s][e]))
                            .add(&slack_expr),
                    );
                }
            }
        }
    }
    add_nonneg(&mut prog, "rate-floors", &rate_floors)?;
    add_nonneg(&mut prog, "leakage-caps", &leakage_caps)?;

    // --- Efficiency epigraph ----------------------------------------------
    if !soften {
        let mut ssr = LinC::zero();
        for c in 0..nc {
            let mut cluster_terms = LinC::zero();
            for j in 0..plan[c].bobs.len() {
                cluster_terms = cluster_terms.add(&LinC::var(r[c][j]));
                for s in 0..NUM_SPACES {
                    for e in 0..se[s].len() {
                        cluster_terms = cluster_terms.sub(&LinC::var(r_e[c][j][s][e]));
                    }
                }
            }
            ssr = ssr.add(&rs(&cluster_terms, plan[c].share));
        }
        let (head, stack) =
            product_upper_soc_rows(&ssr, &LinC::var(psi), &LinC::var(rho), input.t);
        add_soc(&mut prog, "efficiency-epigraph", &head, &stack)?;
    }

    // --- Consumed-power ledger ---------------------------------------------
    let p0 = total_power(params, 0.0);
    let varrho = params.amp_inefficiency;
    match &step_vars {
        StepVars::Passive { .. } => {
            let ledger =
                LinC::var(rho).sub(&LinC::real_constant(varrho * radiated0 + p0));
            add_zero(&mut prog, "power-ledger", &[ledger])?;
        }
        StepVars::Power { amp, .. } => {
            let shifted = LinC::var(rho).sub(&LinC::real_constant(p0));
            let head = rs(&shifted.add(&LinC::real_constant(varrho)), 1.0 / (2.0 * varrho));
            let mut stack =
                vec![rs(&shifted.sub(&LinC::real_constant(varrho)), 1.0 / (2.0 * varrho))];
            stack.extend(amp.iter().flatten().map(|&a| LinC::var(a)));
            add_soc(&mut prog, "power-ledger", &head, &stack)?;
        }
        StepVars::Active { f, .. } => {
            let shifted = LinC::var(rho).sub(&LinC::real_constant(p0));
            let head = rs(&shifted.add(&LinC::real_constant(varrho)), 1.0 / (2.0 * varrho));
            let mut stack =
                vec![rs(&shifted.sub(&LinC::real_constant(varrho)), 1.0 / (2.0 * varrho))];
            for &base in f {
                stack.extend((0..n).map(|i| LinC::complex_var(base + 2 * i, base + 2 * i + 1)));
            }
            add_soc(&mut prog, "power-ledger", &head, &stack)?;
        }
    }

    // --- Per-stage robust certificates --------------------------------------
    let mut interference_floors = Vec::new();
    let mut signal_floors = Vec::new();
    let mut eve_interference_caps = Vec::new();
    for (c, cluster) in plan.iter().enumerate() {
        let noise = cluster.share;
        let u_own = &u_exprs[cluster.space];
        let beta_own = beta0[cluster.space];
        for j in 0..cluster.bobs.len() {
            let mem = members(plan, c, j);
            let cols: Vec<Vec<LinC>> =
                mem.iter().map(|&(mc, mj)| beam_exprs[mc][mj].clone()).collect();
            let r_expr = LinC::var(r[c][j]);

            for (l_pos, &l) in cluster.bobs[..=j].iter().enumerate() {
                let link = &sb[cluster.space][l];
                let eta_expr = LinC::var(eta[c][j][l_pos]);

                // Interference budget: eta >= sum of member powers + noise.
                if mem.is_empty() {
                    interference_floors
                        .push(eta_expr.sub(&LinC::real_constant(noise)));
                } else {
                    let (mh, mg) =
                        mult_pair(&mut prog, &mut mults, &format!("iu{c}.{j}.{l_pos}"));
                    let block = interference_upper_block(
                        &link.hhat,
                        &link.ghat,
                        &cols,
                        u_own,
                        &eta_expr.sub(&LinC::real_constant(noise)),
                        beta_own,
                        link.radii,
                        mh,
                        mg,
                    );
                    add_psd(
                        &mut prog,
                        &format!("interference-upper[{c}][{j}][{l_pos}]"),
                        &block,
                    )?;
                    catalog.push(BlockShape {
                        family: BlockFamily::InterferenceUpper,
                        complex_dim: block.shape().0,
                    });
                }

                // Signal floor against the tangent rate surrogate.
                let rhs = rate_product_tangent(
                    &eta_expr,
                    &r_expr,
                    anchors.eta0[c][j][l_pos],
                    anchors.r0[c][j],
                )
                .sub(&eta_expr);
                let bound = quadratic_lower_bound(
                    &link.hhat,
                    &link.ghat,
                    &input.w0[c][j],
                    &input.u0[cluster.space],
                    &beam_exprs[c][j],
                    u_own,
                );
                if link.radii.is_zero() {
                    signal_floors.push(bound.a_scalar.sub(&rhs));
                } else {
                    let (mh, mg) =
                        mult_pair(&mut prog, &mut mults, &format!("rl{c}.{j}.{l_pos}"));
                    let block = s_procedure_psd(&bound, &rhs, link.radii, mh, mg);
                    add_psd(&mut prog, &format!("rate-lower[{c}][{j}][{l_pos}]"), &block)?;
                    catalog.push(BlockShape {
                        family: BlockFamily::RateLower,
                        complex_dim: block.shape().0,
                    });
                }
            }

            // Eavesdroppers in both spaces.
            for (s, eves) in se.iter().enumerate() {
                let direct_only = eve_is_direct_only(input.protocol, cluster.space, s);
                let (u_eff, beta_eff) =
                    if direct_only { (&u_zero, 0.0) } else { (&u_exprs[s], beta0[s]) };
                for (e, link) in eves.iter().enumerate() {
                    let re_expr = LinC::var(r_e[c][j][s][e]);
                    let etae_expr = LinC::var(eta_e[c][j][s][e]);

                    // Leakage cap against the tangent rate surrogate.
                    let corner = rate_product_tangent(
                        &etae_expr,
                        &re_expr,
                        anchors.eta_e0[c][j][s][e],
                        anchors.r_e0[c][j][s][e],
                    )
                    .sub(&etae_expr);
                    let (mh, mg) =
                        mult_pair(&mut prog, &mut mults, &format!("lu{c}.{j}.{s}.{e}"));
                    let block = leakage_upper_block(
                        &link.hhat,
                        &link.ghat,
                        &[beam_exprs[c][j].clone()],
                        u_eff,
                        &corner,
                        beta_eff,
                        link.radii,
                        mh,
                        mg,
                    );
                    add_psd(
                        &mut prog,
                        &format!("leakage-upper[{c}][{j}][{s}][{e}]"),
                        &block,
                    )?;
                    catalog.push(BlockShape {
                        family: BlockFamily::LeakageUpper,
                        complex_dim: block.shape().0,
                    });

                    // Interference floor at the eavesdropper.
                    if mem.is_empty() {
                        eve_interference_caps
                            .push(LinC::real_constant(noise).sub(&etae_expr));
                    } else if link.radii.is_zero() {
                        eve_interference_caps.push(anchored_power_corner(
                            link,
                            &cols,
                            u_eff,
                            &anchors.q0[c][j][s][e],
                            noise,
                            &etae_expr,
                        ));
                    } else {
                        let (mh, mg) =
                            mult_pair(&mut prog, &mut mults, &format!("el{c}.{j}.{s}.{e}"));
                        let block = power_sum_lower_block(
                            &link.hhat,
                            &link.ghat,
                            &cols,
                            u_eff,
                            &etae_expr,
                            noise,
                            &anchors.q0[c][j][s][e],
                            beta_eff,
                            link.radii,
                            mh,
                            mg,
                        );
                        add_psd(
                            &mut prog,
                            &format!("eve-interference-lower[{c}][{j}][{s}][{e}]"),
                            &block,
                        )?;
                        catalog.push(BlockShape {
                            family: BlockFamily::EveInterferenceLower,
                            complex_dim: block.shape().0,
                        });
                    }
                }
            }
        }
    }
    add_nonneg(&mut prog, "interference-floors", &interference_floors)?;
    add_nonneg(&mut prog, "signal-power-floors", &signal_floors)?;
    add_nonneg(&mut prog, "eavesdropper-interference-caps", &eve_interference_caps)?;

    // --- Decoding-order certificates ----------------------------------------
    let mut order_floors = Vec::new();
    let mut order_chain = Vec::new();
    for (c, cluster) in plan.iter().enumerate() {
        let u_own = &u_exprs[cluster.space];
        let beta_own = beta0[cluster.space];
        for p in 0..cluster.bobs.len().saturating_sub(1) {
            let margin = LinC::var(varsigma[c][p]);

            // Stronger user's own-signal power stays above the margin.
            let strong = &sb[cluster.space][cluster.bobs[p]];
            let bound = quadratic_lower_bound(
                &strong.hhat,
                &strong.ghat,
                &input.w0[c][p],
                &input.u0[cluster.space],
                &beam_exprs[c][p],
                u_own,
            );
            if strong.radii.is_zero() {
                order_floors.push(bound.a_scalar.sub(&margin));
            } else {
                let (mh, mg) = mult_pair(&mut prog, &mut mults, &format!("ol{c}.{p}"));
                let block = s_procedure_psd(&bound, &margin, strong.radii, mh, mg);
                add_psd(&mut prog, &format!("order-lower[{c}][{p}]"), &block)?;
                catalog.push(BlockShape {
                    family: BlockFamily::OrderLower,
                    complex_dim: block.shape().0,
                });
            }

            // Weaker user's own-signal power stays below the margin.
            let weak = &sb[cluster.space][cluster.bobs[p + 1]];
            let (mh, mg) = mult_pair(&mut prog, &mut mults, &format!("ou{c}.{p}"));
            let block = leakage_upper_block(
                &weak.hhat,
                &weak.ghat,
                &[beam_exprs[c][p + 1].clone()],
                u_own,
                &margin,
                beta_own,
                weak.radii,
                mh,
                mg,
            );
            add_psd(&mut prog, &format!("order-upper[{c}][{p}]"), &block)?;
            catalog.push(BlockShape {
                family: BlockFamily::OrderUpper,
                complex_dim: block.shape().0,
            });

            if p + 1 < cluster.bobs.len() - 1 {
                order_chain
                    .push(LinC::var(varsigma[c][p]).sub(&LinC::var(varsigma[c][p + 1])));
            }
        }
    }
    add_nonneg(&mut prog, "order-floors", &order_floors)?;
    add_nonneg(&mut prog, "order-chain", &order_chain)?;

    // --- Step-specific structure ---------------------------------------------
    match &step_vars {
        StepVars::Power { amp, .. } => {
            let amp_signs: Vec<LinC> =
                amp.iter().flatten().map(|&a| LinC::var(a)).collect();
            add_nonneg(&mut prog, "amplitude-signs", &amp_signs)?;
            for (c, cluster_amps) in amp.iter().enumerate() {
                let cap: f64 =
                    input.w0[c].iter().map(|w| w.norm_squared()).sum::<f64>().sqrt();
                let stack: Vec<LinC> =
                    cluster_amps.iter().map(|&a| LinC::var(a)).collect();
                add_soc(
                    &mut prog,
                    &format!("cluster-power-cap[{c}]"),
                    &LinC::real_constant(cap),
                    &stack,
                )?;
            }
        }
        StepVars::Active { f, .. } => {
            for (g, (group, budget)) in input.power_groups.iter().enumerate() {
                let mut stack = Vec::new();
                for &c in group {
                    stack.extend(
                        (0..n).map(|i| LinC::complex_var(f[c] + 2 * i, f[c] + 2 * i + 1)),
                    );
                }
                add_soc(
                    &mut prog,
                    &format!("budget-cap[{g}]"),
                    &LinC::real_constant(budget.sqrt()),
                    &stack,
                )?;
            }
        }
        StepVars::Passive { elems } => {
            let binary = match step {
                StepKind::Passive { weights } => weights.binary.as_ref(),
                _ => None,
            };
            let mut tangent_floors = Vec::new();
            let mut closure_signs = Vec::new();
            let mut share_signs = Vec::new();
            for (s, space_elems) in elems.iter().enumerate() {
                for (m, slot) in space_elems.iter().enumerate() {
                    let Some(sv) = slot else { continue };
                    let u_expr = LinC::complex_var(sv.u_re, sv.u_im);
                    let b_expr = match sv.b {
                        Some(b) => LinC::var(b),
                        None => LinC::real_constant(1.0),
                    };

                    // |u|^2 <= b + c as a small cone.
                    let budget = b_expr.add(&LinC::var(sv.c));
                    add_soc(
                        &mut prog,
                        &format!("surface-amplitude-cap[{s}][{m}]"),
                        &rs(&budget.add(&LinC::real_constant(1.0)), 0.5),
                        &[rs(&budget.sub(&LinC::real_constant(1.0)), 0.5), u_expr.clone()],
                    )?;

                    // Anchored floor: 2 Re{u0* u} - |u0|^2 >= b - chat.
                    let u0_val = input.u0[s][m];
                    tangent_floors.push(
                        u_expr
                            .scale(u0_val.conj())
                            .two_re()
                            .sub(&LinC::real_constant(u0_val.norm_sqr()))
                            .sub(&b_expr)
                            .add(&LinC::var(sv.chat)),
                    );
                    closure_signs.push(LinC::var(sv.c));
                    closure_signs.push(LinC::var(sv.chat));
                    if let Some(b) = sv.b {
                        share_signs.push(LinC::var(b));
                    }

                    // Binarization epigraph: sbin >= (b-d)^2 + ((1-d) b)^2.
                    if let (Some(s_bin), Some(binary)) = (sv.s_bin, binary) {
                        let d = binary.d[s][m];
                        let sb_expr = LinC::var(s_bin);
                        add_soc(
                            &mut prog,
                            &format!("binary-epigraph[{s}][{m}]"),
                            &rs(&sb_expr.add(&LinC::real_constant(1.0)), 0.5),
                            &[
                                rs(&sb_expr.sub(&LinC::real_constant(1.0)), 0.5),
                                b_expr.sub(&LinC::real_constant(d)),
                                rs(&b_expr, 1.0 - d),
                            ],
                        )?;
                    }
                }
            }
            add_nonneg(&mut prog, "surface-tangent-floors", &tangent_floors)?;
            add_nonneg(&mut prog, "closure-signs", &closure_signs)?;
            add_nonneg(&mut prog, "share-signs", &share_signs)?;

            // Per-element share closure across the two spaces.
            if matches!(input.protocol, Protocol::EnergySplit | Protocol::ModeSwitch) {
                let closure: Vec<LinC> = (0..m_elems)
                    .map(|m| {
                        let mut acc = LinC::real_constant(-1.0);
                        for space_elems in elems {
                            if let Some(sv) = &space_elems[m] {
                                acc = acc
                                    .add(&sv.b.map(LinC::var).unwrap_or_else(|| {
                                        LinC::real_constant(1.0)
                                    }));
                            }
                        }
                        acc
                    })
                    .collect();
                add_zero(&mut prog, "share-closure", &closure)?;
            }
        }
    }

    let mult_signs: Vec<LinC> = mults.iter().map(|&v| LinC::var(v)).collect();
    add_nonneg(&mut prog, "multiplier-signs", &mult_signs)?;

    Ok(BuiltSubproblem {
        program: prog,
        catalog,
        vars: VarMap { psi, rho, step: step_vars },
        soften,
        u0: input.u0.to_vec(),
        f0,
        alphas0,
    })
}

/// Elements of space `s` the surface step may vary: the whole surface for
/// the full-surface protocols, the fixed half for the static split.
#[inline]
fn surface_support(protocol: Protocol, m_elems: usize, s: usize, m: usize) -> bool {
    match protocol {
        Protocol::StaticSplit => (s == 0) == (m < m_elems / 2),
        _ => true,
    }
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

/// Decision variables recovered from one subproblem solution.
#[derive(Clone, Debug)]
pub(crate) struct Extracted {
    /// Efficiency-epigraph value (meaningless in restoration mode).
    pub psi: f64,
    /// Consumed-power epigraph value.
    pub rho: f64,
    /// Per-cluster beams.
    pub cluster_beams: Vec<DVector<C64>>,
    /// Per-cluster power weights (unit square-sum).
    pub cluster_alphas: Vec<Vec<f64>>,
    /// Per-space surface vectors.
    pub surface: Vec<DVector<C64>>,
    /// Sum of the amplitude-closure slacks (surface step).
    pub closure_penalty: f64,
    /// Sum of the binarization epigraphs (mode-switching surface step).
    pub binary_penalty: f64,
    /// Restoration slack (softened beam step).
    pub slack: f64,
}

impl BuiltSubproblem {
    /// Recover the step's decisions from a primal point, renormalizing the
    /// power weights exactly and passing frozen groups through unchanged.
    pub fn extract(&self, x: &[f64]) -> Extracted {
        let psi = x[self.vars.psi];
        let rho = x[self.vars.rho];
        let mut cluster_beams = self.f0.clone();
        let mut cluster_alphas = self.alphas0.clone();
        let mut surface = self.u0.clone();
        let mut closure_penalty = 0.0;
        let mut binary_penalty = 0.0;
        let mut slack = 0.0;

        match &self.vars.step {
            StepVars::Power { amp, dirs } => {
                for (c, cluster_amps) in amp.iter().enumerate() {
                    let values: Vec<f64> =
                        cluster_amps.iter().map(|&a| x[a].abs()).collect();
                    let scale = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if scale > 1e-12 {
                        cluster_beams[c] = &dirs[c] * C64::new(scale, 0.0);
                        cluster_alphas[c] = values.iter().map(|v| v / scale).collect();
                    }
                }
            }
            StepVars::Active { f, slack: sv } => {
                let n = cluster_beams.first().map_or(0, |b| b.len());
                for (c, &base) in f.iter().enumerate() {
                    cluster_beams[c] = DVector::from_fn(n, |i, _| {
                        C64::new(x[base + 2 * i], x[base + 2 * i + 1])
                    });
                }
                if let Some(sv) = sv {
                    slack = x[*sv];
                }
            }
            StepVars::Passive { elems } => {
                for (s, space_elems) in elems.iter().enumerate() {
                    for (m, slot) in space_elems.iter().enumerate() {
                        let Some(sv) = slot else { continue };
                        surface[s][m] = C64::new(x[sv.u_re], x[sv.u_im]);
                        closure_penalty += x[sv.c] + x[sv.chat];
                        if let Some(s_bin) = sv.s_bin {
                            binary_penalty += x[s_bin];
                        }
                    }
                }
            }
        }

        Extracted {
            psi: if self.soften { 0.0 } else { psi },
            rho,
            cluster_beams,
            cluster_alphas,
            surface,
            closure_penalty,
            binary_penalty,
            slack,
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_realization, Geometry, UncertaintyConfig};
    use crate::metrics::{
        secrecy_sum_rate, tests::uniform_state, BeamformingState, ChanView,
    };
    use conic_core::{solve, SolveStatus, SolverTolerances};

    fn tiny_params() -> SystemParams {
        SystemParams { n: 2, m: 2, j_r: 1, j_t: 1, ..SystemParams::default() }
    }

    fn tiny_real(perfect: bool) -> ChannelRealization {
        let unc =
            if perfect { UncertaintyConfig::perfect() } else { UncertaintyConfig::default() };
        generate_realization(&tiny_params(), &Geometry::default(), &unc, 7)
            .expect("tiny scene generates")
    }

    /// Scene with enough antennas to steer away from both eavesdroppers and
    /// a start inside the threshold region, so un-softened steps solve.
    fn solver_scene() -> (SystemParams, ChannelRealization, BeamformingState) {
        let params = SystemParams { n: 4, m: 2, j_r: 1, j_t: 1, ..SystemParams::default() };
        let real = generate_realization(
            &params,
            &Geometry::default(),
            &UncertaintyConfig::perfect(),
            7,
        )
        .expect("scene generates");
        let state = crate::optimizer::init_state(&real, &params, Protocol::EnergySplit, 7);
        (params, real, state)
    }

    struct Fixture {
        plan: Vec<ClusterPlan>,
        groups: Vec<(Vec<usize>, f64)>,
        w0: Vec<Vec<DVector<C64>>>,
        u0: Vec<DVector<C64>>,
        t: f64,
        protocol: Protocol,
    }

    fn fixture(
        state: &BeamformingState,
        real: &ChannelRealization,
        params: &SystemParams,
    ) -> Fixture {
        let plan = noma_plan(state.protocol, params, state.tau);
        let groups = noma_power_groups(plan.len(), params.p_max);
        let w0: Vec<Vec<DVector<C64>>> = (0..plan.len())
            .map(|c| (0..plan[c].bobs.len()).map(|j| state.beam(c, j)).collect())
            .collect();
        let ssr = secrecy_sum_rate(state, real, ChanView::Estimated, params.sigma2);
        let rho0 = total_power(params, state.radiated_power());
        let psi0 = (ssr / rho0).max(1e-6);
        Fixture {
            plan,
            groups,
            w0,
            u0: state.u.clone(),
            t: rho0 / psi0,
            protocol: state.protocol,
        }
    }

    fn build(fx: &Fixture, real: &ChannelRealization, params: &SystemParams, step: &StepKind)
    -> BuiltSubproblem {
        let input = SubproblemInput {
            real,
            params,
            protocol: fx.protocol,
            plan: &fx.plan,
            power_groups: &fx.groups,
            w0: &fx.w0,
            u0: &fx.u0,
            t: fx.t,
        };
        build_subproblem(&input, step).expect("subproblem lowers cleanly")
    }

    fn family_dims(built: &BuiltSubproblem, family: BlockFamily) -> Vec<usize> {
        built
            .catalog
            .iter()
            .filter(|b| b.family == family)
            .map(|b| b.complex_dim)
            .collect()
    }

    // 1. Full-surface catalog: every robust family appears with the sizes
    //    implied by the antenna/element counts.
    #[test]
    fn catalog_matches_expected_shapes_full_surface() {
        let params = tiny_params();
        let real = tiny_real(false);
        let state = uniform_state(&params, Protocol::EnergySplit, params.p_max);
        let fx = fixture(&state, &real, &params);
        let built = build(&fx, &real, &params, &StepKind::Power);

        let (n, m) = (params.n, params.m);
        let a1 = m * n + n + 1;
        // One cross-space member per stage: Schur core 1+1 plus two borders.
        assert_eq!(
            family_dims(&built, BlockFamily::InterferenceUpper),
            vec![2 + 2 * n; 2],
            "one interference certificate per stage"
        );
        assert_eq!(
            family_dims(&built, BlockFamily::RateLower),
            vec![a1; 2],
            "one rate certificate per stage"
        );
        assert_eq!(
            family_dims(&built, BlockFamily::LeakageUpper),
            vec![2 + 2 * n; 4],
            "both eavesdroppers hear both signals"
        );
        assert_eq!(
            family_dims(&built, BlockFamily::EveInterferenceLower),
            vec![1 + 2 * n; 4],
            "anchored floors carry one border pair"
        );
        assert!(family_dims(&built, BlockFamily::OrderLower).is_empty());
        assert!(family_dims(&built, BlockFamily::OrderUpper).is_empty());
    }

    // 2. Time switching decouples the spaces: no cross interference rows,
    //    and far-space eavesdroppers keep only the direct-error border.
    #[test]
    fn time_switching_drops_cross_space_coupling() {
        let params = tiny_params();
        let real = tiny_real(false);
        let mut state = uniform_state(&params, Protocol::TimeSwitch, params.p_max);
        state.tau = [0.4, 0.6];
        let fx = fixture(&state, &real, &params);
        let built = build(&fx, &real, &params, &StepKind::Power);

        let n = params.n;
        assert!(
            family_dims(&built, BlockFamily::InterferenceUpper).is_empty(),
            "single-user slots have no interference certificates"
        );
        assert!(
            family_dims(&built, BlockFamily::EveInterferenceLower).is_empty(),
            "eavesdropper floors reduce to linear noise rows"
        );
        let mut leak = family_dims(&built, BlockFamily::LeakageUpper);
        leak.sort_unstable();
        assert_eq!(
            leak,
            vec![2 + n, 2 + n, 2 + 2 * n, 2 + 2 * n],
            "near eavesdroppers keep both borders, far ones only the direct"
        );
    }

    // 3. Power step on a perfect-CSI scene: solves, improves the surrogate,
    //    and the recovered weights square-sum to one exactly.
    #[test]
    fn power_step_solves_and_renormalizes() {
        let (params, real, state) = solver_scene();
        let fx = fixture(&state, &real, &params);
        let built = build(&fx, &real, &params, &StepKind::Power);

        let sol = solve(&built.program, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "power step must solve");
        let x = sol.primal.expect("optimal point present");
        let got = built.extract(&x);
        assert!(got.psi > 0.0, "efficiency surrogate is positive");
        for alphas in &got.cluster_alphas {
            let sum: f64 = alphas.iter().map(|a| a * a).sum();
            assert!((sum - 1.0).abs() < 1e-12, "weights renormalize exactly, got {sum}");
        }
        for (c, beam) in got.cluster_beams.iter().enumerate() {
            let f0 = &built.f0[c];
            let ip = (f0.adjoint() * beam)[(0, 0)].norm();
            assert!(
                (ip - f0.norm() * beam.norm()).abs() <= 1e-9 * f0.norm() * beam.norm(),
                "power step keeps each cluster beam on its direction"
            );
        }
        let radiated: f64 = got.cluster_beams.iter().map(|f| f.norm_squared()).sum();
        let ledger = crate::metrics::total_power(&params, radiated);
        assert!(
            (got.rho - ledger).abs() <= 1e-5 * ledger,
            "power ledger ties out: epigraph {} vs consumed {}",
            got.rho,
            ledger
        );
    }

    // 4. Beam step on the same scene: solves and respects the joint budget.
    #[test]
    fn active_step_solves_within_budget() {
        let (params, real, state) = solver_scene();
        let fx = fixture(&state, &real, &params);
        let built = build(&fx, &real, &params, &StepKind::Active { soften: false });

        let sol = solve(&built.program, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "beam step must solve");
        let got = built.extract(&sol.primal.expect("optimal point present"));
        let radiated: f64 = got.cluster_beams.iter().map(|f| f.norm_squared()).sum();
        assert!(
            radiated <= params.p_max * (1.0 + 1e-6),
            "radiated power {radiated} exceeds the budget"
        );
        assert!(got.psi > 0.0);
    }

    // 5. Surface step: solves with the closure machinery and returns a
    //    finite, nonnegative penalty alongside the new surface.
    #[test]
    fn passive_step_solves_with_closure_rows() {
        let (params, real, state) = solver_scene();
        let fx = fixture(&state, &real, &params);
        let step = StepKind::Passive {
            weights: PassiveWeights { lambda: 1e-3, binary: None },
        };
        let built = build(&fx, &real, &params, &step);

        let sol = solve(&built.program, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "surface step must solve");
        let got = built.extract(&sol.primal.expect("optimal point present"));
        assert!(got.closure_penalty.is_finite() && got.closure_penalty >= -1e-9);
        for u in &got.surface {
            assert_eq!(u.len(), params.m);
            assert!(u.iter().all(|x| x.norm() <= 1.5), "coefficients stay bounded");
        }
        // Beams pass through the surface step untouched.
        for (c, beam) in got.cluster_beams.iter().enumerate() {
            assert!((beam - &built.f0[c]).norm() < 1e-12, "beams are frozen");
        }
    }

    // 6. Restoration mode: with unattainable rate floors the softened beam
    //    step still solves and reports the violation through its slack.
    #[test]
    fn soften_reports_infeasibility_as_slack() {
        let mut params = tiny_params();
        params.rate_user = 30.0; // far beyond the scene's capacity
        let real = generate_realization(
            &params,
            &Geometry::default(),
            &UncertaintyConfig::perfect(),
            7,
        )
        .expect("scene generates");
        let state = uniform_state(&params, Protocol::EnergySplit, params.p_max);
        let fx = fixture(&state, &real, &params);

        let hard = build(&fx, &real, &params, &StepKind::Active { soften: false });
        let sol = solve(&hard.program, &SolverTolerances::default());
        assert_ne!(
            sol.status,
            SolveStatus::Optimal,
            "unattainable floors cannot solve un-softened"
        );

        let soft = build(&fx, &real, &params, &StepKind::Active { soften: true });
        let sol = solve(&soft.program, &SolverTolerances::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "softened step always solves");
        let got = soft.extract(&sol.primal.expect("optimal point present"));
        assert!(got.slack > 1.0, "slack must absorb the impossible floor, got {}", got.slack);
    }

    // 7. Orthogonal plan: single-user slots with scaled thresholds produce
    //    only leakage certificates plus linear rows.
    #[test]
    fn orthogonal_plan_reduces_to_leakage_blocks() {
        let params = tiny_params();
        let real = tiny_real(false);
        let plan = oma_plan(&params);
        assert_eq!(plan.len(), 2);
        assert!(plan.iter().all(|c| (c.share - 0.5).abs() < 1e-12));
        let groups = oma_power_groups(plan.len(), params.p_max);
        assert!(groups.iter().all(|(g, b)| g.len() == 1 && (*b - 5.0).abs() < 1e-12));

        let state = uniform_state(&params, Protocol::EnergySplit, params.p_max);
        let w0: Vec<Vec<DVector<C64>>> =
            (0..2).map(|c| vec![state.beam(c, 0) * C64::new(0.5f64.sqrt(), 0.0)]).collect();
        let input = SubproblemInput {
            real: &real,
            params: &params,
            protocol: Protocol::EnergySplit,
            plan: &plan,
            power_groups: &groups,
            w0: &w0,
            u0: &state.u,
            t: 10.0,
        };
        let built =
            build_subproblem(&input, &StepKind::Active { soften: false }).expect("builds");
        assert!(family_dims(&built, BlockFamily::InterferenceUpper).is_empty());
        assert!(family_dims(&built, BlockFamily::EveInterferenceLower).is_empty());
        assert_eq!(family_dims(&built, BlockFamily::LeakageUpper).len(), 4);
        assert_eq!(family_dims(&built, BlockFamily::RateLower), vec![params.m * params.n + params.n + 1; 2]);
    }

    // 8. Weight recovery: proportional beams give back the exact weights,
    //    and a silent cluster falls back to uniform.
    #[test]
    fn alpha_recovery_inverts_beam_scaling() {
        let f = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.25)]);
        let alphas = [0.6, 0.8];
        let w: Vec<DVector<C64>> =
            alphas.iter().map(|&a| &f * C64::new(a, 0.0)).collect();
        let got = recover_alphas(&w);
        for (g, want) in got.iter().zip(alphas.iter()) {
            assert!((g - want).abs() < 1e-12, "recovered {g}, wanted {want}");
        }
        let silent = vec![DVector::zeros(2), DVector::zeros(2)];
        let got = recover_alphas(&silent);
        assert!(got.iter().all(|a| (a - 0.5f64.sqrt()).abs() < 1e-12));
    }

    // 9. Member enumeration: own-cluster predecessors first, then the whole
    //    crossing cluster; no cross entries without a crossing cluster.
    #[test]
    fn member_order_is_intra_then_cross() {
        let params = SystemParams { j_r: 2, j_t: 2, ..tiny_params() };
        let plan = noma_plan(Protocol::EnergySplit, &params, [1.0, 1.0]);
        assert_eq!(members(&plan, 0, 1), vec![(0, 0), (1, 0), (1, 1)]);
        assert_eq!(members(&plan, 1, 0), vec![(0, 0), (0, 1)]);

        let ts = noma_plan(Protocol::TimeSwitch, &params, [0.3, 0.7]);
        assert_eq!(members(&ts, 0, 1), vec![(0, 0)]);
        assert!(members(&ts, 1, 0).is_empty());
        assert!((ts[0].share - 0.3).abs() < 1e-12 && (ts[1].share - 0.7).abs() < 1e-12);
    }
}
