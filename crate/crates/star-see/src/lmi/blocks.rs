//! Robust matrix-inequality assemblers.
//!
//! Each semi-infinite constraint over the bounded error vector
//! `x = [dh; vec(dG*)]`, `||dh|| <= xi`, `||dG||_F <= zeta`, is absorbed
//! into one finite Hermitian-affine matrix by a classical certificate:
//!
//! * **Two-ball S-procedure** ([`s_procedure_psd`]) for quadratic forms
//!   produced by [`super::linearize::quadratic_lower_bound`]: a nonnegative
//!   multiplier per ball loads the quadratic coefficient's diagonal and pays
//!   its squared radius in the corner.
//! * **Norm-bounded sign-definiteness** ([`sign_definiteness_psd`]) for
//!   constraints affine in the error: each unknown factor `G` with
//!   `||G|| <= radius` becomes one bordered block `[[-radius E], [mult I]]`
//!   plus a diagonal deduction `mult * F^H F` in the core.
//!
//! The wrappers below instantiate these for the four semi-infinite families
//! the optimizer needs: a beam-power lower bound, an interference upper
//! bound, a leakage upper bound, and an eavesdropper-interference lower
//! bound. Tests in this module certify bounds with the interior-point
//! backend and then attack them with boundary sampling, checking soundness
//! (the certificate never beats the sampled extremum) and non-vacuity (it
//! lands within a modest factor of it).

use nalgebra::DVector;

use super::affine::{CMat, LinC};
use super::linearize::QuadraticLowerBound;
use crate::C64;

// ---------------------------------------------------------------------------
// Error radii
// ---------------------------------------------------------------------------

/// Radii of the two error balls for one link: direct channel (Euclidean) and
/// cascaded channel (Frobenius).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRadii {
    /// Bound on `||dh||_2`.
    pub direct: f64,
    /// Bound on `||dG||_F`.
    pub cascade: f64,
}

impl ErrorRadii {
    /// Radii for a perfectly known link; robust blocks degenerate to their
    /// nominal forms.
    #[inline]
    pub fn zero() -> Self {
        Self { direct: 0.0, cascade: 0.0 }
    }

    /// `true` when both balls are degenerate points.
    #[inline]
    pub fn is_zero(&self) -> bool {
        self.direct == 0.0 && self.cascade == 0.0
    }
}

// ---------------------------------------------------------------------------
// Two-ball S-procedure
// ---------------------------------------------------------------------------

/// Certificate matrix for
/// `QF(x) >= rhs` for all `||x_direct|| <= xi`, `||x_cascade|| <= zeta`:
///
/// ```text
///     [[ A + mh C_dir + mg C_casc ,  a                               ]
///      [ a^H                      ,  a0 - rhs - mh xi^2 - mg zeta^2 ]]  >= 0
/// ```
///
/// where `C_dir`/`C_casc` select the direct/cascade diagonal and `mh`, `mg`
/// are nonnegative multiplier variables (caller constrains their sign).
pub fn s_procedure_psd(
    bound: &QuadraticLowerBound,
    rhs: &LinC,
    radii: ErrorRadii,
    mult_direct: usize,
    mult_cascade: usize,
) -> CMat {
    let d = bound.layout.dim();
    let n = bound.layout.n;
    let mut m = CMat::zeros(d + 1, d + 1);

    for c in 0..d {
        for r in 0..d {
            m.set(r, c, bound.a_mat.get(r, c).clone());
        }
    }
    for i in 0..d {
        let mult = if i < n { mult_direct } else { mult_cascade };
        m.add_to(i, i, &LinC::var(mult));
        m.set(i, d, bound.a_vec[i].clone());
        m.set(d, i, bound.a_vec[i].conj());
    }
    let corner = bound
        .a_scalar
        .sub(rhs)
        .sub(&LinC::var(mult_direct).scale(C64::new(radii.direct * radii.direct, 0.0)))
        .sub(&LinC::var(mult_cascade).scale(C64::new(radii.cascade * radii.cascade, 0.0)));
    m.set(d, d, corner);
    m
}

// ---------------------------------------------------------------------------
// Norm-bounded sign-definiteness
// ---------------------------------------------------------------------------

/// One norm-bounded uncertainty absorbed by [`sign_definiteness_psd`].
///
/// Represents a perturbation `E^H G F + F^H G^H E` of the core with
/// `||G|| <= radius`; `F^H F` must be diagonal, given as
/// `(core index, coefficient)` deductions charged to the multiplier.
#[derive(Clone, Debug)]
pub struct RobustBorder {
    /// Left factor `E` (`p x core_dim`, affine entries).
    pub e_block: CMat,
    /// Operator/Frobenius bound on the unknown factor.
    pub radius: f64,
    /// Nonnegative multiplier variable (caller constrains its sign).
    pub mult: usize,
    /// Diagonal of `F^H F` as `(core diagonal index, coefficient)` pairs.
    pub deductions: Vec<(usize, f64)>,
}

/// Certificate matrix for `core + sum_i (E_i^H G_i F_i + h.c.) >= 0` over all
/// `||G_i|| <= radius_i`:
///
/// ```text
///     [[ core - sum_i m_i F_i^H F_i ,  -r_1 E_1^H  ...  ]
///      [ -r_1 E_1                   ,   m_1 I           ]
///      [  ...                       ,            ...    ]]  >= 0
/// ```
pub fn sign_definiteness_psd(core: &CMat, borders: &[RobustBorder]) -> CMat {
    let (nc, nc2) = core.shape();
    assert_eq!(nc, nc2, "core must be square");
    let total: usize = nc + borders.iter().map(|b| b.e_block.shape().0).sum::<usize>();
    let mut m = CMat::zeros(total, total);

    for c in 0..nc {
        for r in 0..nc {
            m.set(r, c, core.get(r, c).clone());
        }
    }
    let mut off = nc;
    for b in borders {
        let (p, ec) = b.e_block.shape();
        assert_eq!(ec, nc, "border width must match core");
        for &(idx, coef) in &b.deductions {
            m.add_to(idx, idx, &LinC::var(b.mult).scale(C64::new(-coef, 0.0)));
        }
        let neg_r = C64::new(-b.radius, 0.0);
        for r in 0..p {
            for c in 0..nc {
                let e = b.e_block.get(r, c);
                m.set(off + r, c, e.scale(neg_r));
                m.set(c, off + r, e.conj().scale(neg_r));
            }
            m.set(off + r, off + r, LinC::var(b.mult));
        }
        off += p;
    }
    m
}

// ---------------------------------------------------------------------------
// Specialized robust blocks
// ---------------------------------------------------------------------------

/// Border factor `E = [0 | w_1 ... w_j]` (`n x (1 + j)`) shared by the
/// direct and cascaded uncertainties of Schur-expanded norm constraints.
fn zero_padded_beam_border(n: usize, cols: &[Vec<LinC>]) -> CMat {
    let mut e = CMat::zeros(n, 1 + cols.len());
    for (i, w) in cols.iter().enumerate() {
        assert_eq!(w.len(), n, "beam length must match antenna count");
        for r in 0..n {
            e.set(r, 1 + i, w[r].clone());
        }
    }
    e
}

/// Drops borders that cannot perturb the core: zero-radius balls and borders
/// whose deduction coefficients all vanish (a vanishing right factor makes
/// the perturbation identically zero). Omitting them is exact and keeps the
/// certificates minimal — with every border gone the bare Schur core remains.
fn effective_borders(borders: Vec<RobustBorder>) -> Vec<RobustBorder> {
    borders
        .into_iter()
        .filter(|b| b.radius > 0.0 && b.deductions.iter().any(|&(_, c)| c != 0.0))
        .collect()
}

/// Robust interference upper bound
/// `budget >= sum_l |(h(x)^H + u^H G(x)) w_l|^2` for every admissible error.
///
/// `corner_budget` is the already-assembled scalar `eta - sigma2_eff`;
/// `beta_sum` is the cascade deduction `||u||^2` evaluated at the current
/// iterate (exact when `u` is numeric, frozen at the iterate when `u` is the
/// optimization variable). Matrix size is `1 + j + 2n`; each zero-radius ball
/// or vanishing `beta_sum` removes its `n`-row border, down to the bare
/// `(1 + j)` Schur core when no error survives.
#[allow(clippy::too_many_arguments)]
pub fn interference_upper_block(
    hhat: &DVector<C64>,
    ghat: &nalgebra::DMatrix<C64>,
    cols: &[Vec<LinC>],
    u: &[LinC],
    corner_budget: &LinC,
    beta_sum: f64,
    radii: ErrorRadii,
    mult_direct: usize,
    mult_cascade: usize,
) -> CMat {
    let n = hhat.len();
    let j = cols.len();
    let mut core = CMat::zeros(1 + j, 1 + j);
    core.set(0, 0, corner_budget.clone());
    for (i, w) in cols.iter().enumerate() {
        let s = super::linearize::combined_scalar(hhat, ghat, u, w);
        core.set(1 + i, 0, s.conj());
        core.set(0, 1 + i, s);
        core.set(1 + i, 1 + i, LinC::real_constant(1.0));
    }
    let e = zero_padded_beam_border(n, cols);
    let borders = effective_borders(vec![
        RobustBorder {
            e_block: e.clone(),
            radius: radii.direct,
            mult: mult_direct,
            deductions: vec![(0, 1.0)],
        },
        RobustBorder {
            e_block: e,
            radius: radii.cascade,
            mult: mult_cascade,
            deductions: vec![(0, beta_sum)],
        },
    ]);
    sign_definiteness_psd(&core, &borders)
}

/// Robust leakage upper bound
/// `corner >= |(h(x)^H + u^H G(x)) w|^2` for every admissible error.
///
/// Matrix size is `2 + 2n`.
#[allow(clippy::too_many_arguments)]
pub fn leakage_upper_block(
    hhat: &DVector<C64>,
    ghat: &nalgebra::DMatrix<C64>,
    w: &[Vec<LinC>; 1],
    u: &[LinC],
    corner: &LinC,
    beta_sum: f64,
    radii: ErrorRadii,
    mult_direct: usize,
    mult_cascade: usize,
) -> CMat {
    interference_upper_block(
        hhat,
        ghat,
        &w[..],
        u,
        corner,
        beta_sum,
        radii,
        mult_direct,
        mult_cascade,
    )
}

/// Robust lower bound on a received-power sum via its anchored expansion:
/// certifies
///
/// ```text
///     sum_l |(h(x)^H + u^H G(x)) w_l|^2 + sigma2  >=  eta_e
/// ```
///
/// for every admissible error, where the sum is bounded below by
/// `2 Re{q0^H q(x)} - ||q0||^2` with `q(x)_l = conj((h(x)^H + u^H G(x)) w_l)`
/// and a numeric anchor `q0` (the previous iterate's value). Matrix size is
/// `1 + 2n`; each zero-radius ball or vanishing `beta_sum` removes its
/// `n`-row border. With no beams the caller should emit the linear row
/// `sigma2 - eta_e >= 0` instead, and with no surviving error the caller
/// should emit the corner itself as a linear row.
#[allow(clippy::too_many_arguments)]
pub fn power_sum_lower_block(
    hhat: &DVector<C64>,
    ghat: &nalgebra::DMatrix<C64>,
    cols: &[Vec<LinC>],
    u: &[LinC],
    eta_e: &LinC,
    sigma2: f64,
    anchor: &DVector<C64>,
    beta_sum: f64,
    radii: ErrorRadii,
    mult_direct: usize,
    mult_cascade: usize,
) -> CMat {
    let n = hhat.len();
    let j = cols.len();
    assert_eq!(anchor.len(), j, "anchor length must match beam count");
    assert!(j > 0, "empty beam set has no robust block; emit a linear row");

    // Corner: 2 Re{q0^H qhat} - ||q0||^2 + sigma2 - eta_e, with
    // qhat_l = conj((hhat^H + u^H Ghat) w_l).
    let mut acc = LinC::zero();
    for (l, w) in cols.iter().enumerate() {
        let qhat_l = super::linearize::combined_scalar(hhat, ghat, u, w).conj();
        acc = acc.add(&qhat_l.scale(anchor[l].conj()));
    }
    let corner = acc
        .two_re()
        .sub(&LinC::real_constant(anchor.norm_squared()))
        .add(&LinC::real_constant(sigma2))
        .sub(eta_e);

    let mut core = CMat::zeros(1, 1);
    core.set(0, 0, corner);

    // Error coupling: 2 Re{(W q0)^H dh} + 2 Re{u^H dG (W q0)} — one border
    // per ball, both with E = W q0 (n x 1).
    let mut e = CMat::zeros(n, 1);
    for r in 0..n {
        let mut entry = LinC::zero();
        for (l, w) in cols.iter().enumerate() {
            entry = entry.add(&w[r].scale(anchor[l]));
        }
        e.set(r, 0, entry);
    }

    let borders = effective_borders(vec![
        RobustBorder {
            e_block: e.clone(),
            radius: radii.direct,
            mult: mult_direct,
            deductions: vec![(0, 1.0)],
        },
        RobustBorder {
            e_block: e,
            radius: radii.cascade,
            mult: mult_cascade,
            deductions: vec![(0, beta_sum)],
        },
    ]);
    sign_definiteness_psd(&core, &borders)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
