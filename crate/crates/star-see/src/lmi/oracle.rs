//! Sampling audit of semi-infinite power constraints.
//!
//! Robust blocks *certify* constraints over the whole error ball; this
//! module independently *attacks* them: it draws admissible errors
//! (deterministically seeded, alternating ball boundary and interior, always
//! including the zero error), evaluates the true constraint at each draw,
//! and reports relative violations. A certificate is only trusted when the
//! audit finds none; the audit is also used on its own to validate final
//! optimizer states against the exact nonlinear constraints, free of any
//! surrogate.
//!
//! Violations are measured relative to the constraint's own scale
//! (`max(|required|, |actual|)`), since received powers live around
//! `1e-9` watts where absolute thresholds would be meaningless.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::blocks::ErrorRadii;
use crate::channel::{sample_in_ball, sample_matrix_in_ball, sample_on_sphere};
use crate::C64;

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// Semi-infinite constraint families the auditor understands. All apply to
/// the summed beam powers `P(x) = sum_l |(h(x)^H + u^H G(x)) w_l|^2`.
#[derive(Clone, Copy, Debug)]
pub enum SemiInfiniteCheck {
    /// `P(x) >= rhs` for every admissible error.
    PowerLower { rhs: f64 },
    /// `bound >= P(x) + sigma2` for every admissible error.
    PowerSumUpper { bound: f64, sigma2: f64 },
    /// `bound <= P(x) + sigma2` for every admissible error.
    PowerSumLower { bound: f64, sigma2: f64 },
}

/// Outcome of one audit sweep.
#[derive(Clone, Copy, Debug)]
pub struct AuditOutcome {
    /// Number of error draws evaluated (zero error included).
    pub samples: usize,
    /// Draws whose relative violation exceeded the tolerance.
    pub violations: usize,
    /// Largest relative violation observed (0 when none).
    pub worst_violation: f64,
    /// Smallest signed relative margin observed; negative means some draw
    /// violated the constraint.
    pub tightest_margin: f64,
}

// ---------------------------------------------------------------------------
// Error enumeration
// ---------------------------------------------------------------------------

/// Visit `samples` admissible error pairs: draw 0 is the zero error, even
/// draws sit on both ball boundaries, odd draws are interior.
pub fn for_each_error(
    n: usize,
    m: usize,
    radii: ErrorRadii,
    samples: usize,
    seed: u64,
    mut f: impl FnMut(&DVector<C64>, &DMatrix<C64>),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples {
        let (dh, dg) = if i == 0 {
            (DVector::zeros(n), DMatrix::zeros(m, n))
        } else if i % 2 == 0 {
            let v = sample_on_sphere(&mut rng, m * n, radii.cascade);
            (
                sample_on_sphere(&mut rng, n, radii.direct),
                DMatrix::from_fn(m, n, |r, c| v[c * m + r]),
            )
        } else {
            (
                sample_in_ball(&mut rng, n, radii.direct),
                sample_matrix_in_ball(&mut rng, m, n, radii.cascade),
            )
        };
        f(&dh, &dg);
    }
}

/// Summed true beam powers at one concrete error.
pub fn perturbed_power_sum(
    hhat: &DVector<C64>,
    ghat: &DMatrix<C64>,
    dh: &DVector<C64>,
    dg: &DMatrix<C64>,
    u: &DVector<C64>,
    beams: &[DVector<C64>],
) -> f64 {
    let h = hhat + dh;
    let g = ghat + dg;
    let row = h.adjoint() + u.adjoint() * g;
    beams.iter().map(|w| (&row * w)[(0, 0)].norm_sqr()).sum()
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

/// Attack one semi-infinite power constraint with `samples` seeded error
/// draws; relative violations above `tol` are counted.
#[allow(clippy::too_many_arguments)]
pub fn audit_semi_infinite(
    hhat: &DVector<C64>,
    ghat: &DMatrix<C64>,
    u: &DVector<C64>,
    beams: &[DVector<C64>],
    radii: ErrorRadii,
    check: SemiInfiniteCheck,
    samples: usize,
    tol: f64,
    seed: u64,
) -> AuditOutcome {
    let n = hhat.len();
    let m = ghat.nrows();
    let mut outcome = AuditOutcome {
        samples,
        violations: 0,
        worst_violation: 0.0,
        tightest_margin: f64::INFINITY,
    };
    for_each_error(n, m, radii, samples, seed, |dh, dg| {
        let p = perturbed_power_sum(hhat, ghat, dh, dg, u, beams);
        // Signed margin: >= 0 when satisfied.
        let (actual, required) = match check {
            SemiInfiniteCheck::PowerLower { rhs } => (p, rhs),
            SemiInfiniteCheck::PowerSumUpper { bound, sigma2 } => (bound, p + sigma2),
            SemiInfiniteCheck::PowerSumLower { bound, sigma2 } => (p + sigma2, bound),
        };
        let scale = actual.abs().max(required.abs()).max(1e-30);
        let margin = (actual - required) / scale;
        outcome.tightest_margin = outcome.tightest_margin.min(margin);
        if margin < -tol {
            outcome.violations += 1;
            outcome.worst_violation = outcome.worst_violation.max(-margin);
        }
    });
    outcome
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
