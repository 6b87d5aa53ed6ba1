//! First-order linearization of channel-power quadratic forms.
//!
//! The received power of a beam through an estimated channel with bounded
//! error is `|s(x)|^2`, where `x = [dh; vec(dG*)]` stacks the direct and
//! cascaded error vectors and
//!
//! ```text
//!     s(x) = (hhat^H + u^H Ghat) w  +  x^H t(w, u),
//!     t(w, u) = [w; w (x) conj(u)].
//! ```
//!
//! `|s(x)|^2` is quartic in the error and bilinear in the design variables,
//! so subproblems replace it by the anchored expansion
//!
//! ```text
//!     QF(x) = 2 Re{ conj(s0(x)) s(x) } - |s0(x)|^2,
//! ```
//!
//! where `s0` uses the previous iterate's beams. The identity
//! `|s|^2 - QF = |s - s0|^2 >= 0` makes `QF` a global lower bound that is
//! exact at the iterate, and — crucially for the robust reformulation — `QF`
//! is *quadratic in `x` with affine coefficients*, so a two-ball S-procedure
//! turns each semi-infinite power constraint into one finite matrix
//! inequality. [`quadratic_lower_bound`] produces those coefficients; its
//! tests pin the expansion to the identity at machine precision.

use nalgebra::{DMatrix, DVector};

use super::affine::{conj_vec, eval_vec, inner_cc, inner_nc, kron, lift_vec, mat_vec, CMat, LinC};
use crate::C64;

// ---------------------------------------------------------------------------
// Error-vector layout
// ---------------------------------------------------------------------------

/// Shape of the stacked error vector `x = [dh; vec(dG*)]` for one user link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErrorLayout {
    /// Transmit antennas (length of the direct error `dh`).
    pub n: usize,
    /// Surface elements (rows of the cascaded error `dG`).
    pub m: usize,
}

impl ErrorLayout {
    /// Total complex dimension `n + m*n`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n + self.m * self.n
    }

    /// Pack concrete errors into the stacked vector. The cascaded block is
    /// `vec(dG*)` in column-major order, matching the Kronecker layout of
    /// [`beam_error_stack`].
    pub fn pack(&self, dh: &DVector<C64>, dg: &DMatrix<C64>) -> DVector<C64> {
        assert_eq!(dh.len(), self.n, "direct error length");
        assert_eq!(dg.shape(), (self.m, self.n), "cascaded error shape");
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, self.n).copy_from(dh);
        for col in 0..self.n {
            for row in 0..self.m {
                x[self.n + col * self.m + row] = dg[(row, col)].conj();
            }
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Channel scalars and stacks
// ---------------------------------------------------------------------------

/// Estimated combined-channel response of one beam,
/// `(hhat^H + u^H Ghat) w`, as an affine expression (at most one of `w`, `u`
/// may contain variables).
pub fn combined_scalar(
    hhat: &DVector<C64>,
    ghat: &DMatrix<C64>,
    u: &[LinC],
    w: &[LinC],
) -> LinC {
    let direct = inner_nc(hhat, w);
    let through = inner_cc(u, &mat_vec(ghat, w));
    direct.add(&through)
}

/// Error-coupling stack `t(w, u) = [w; w (x) conj(u)]` satisfying
/// `x^H t = dh^H w + u^H dG w` under the [`ErrorLayout`] packing.
pub fn beam_error_stack(w: &[LinC], u: &[LinC]) -> Vec<LinC> {
    let mut t = w.to_vec();
    t.extend(kron(w, &conj_vec(u)));
    t
}

/// Numeric counterpart of [`beam_error_stack`].
pub fn beam_error_stack_num(w: &DVector<C64>, u: &DVector<C64>) -> DVector<C64> {
    let mut t = DVector::zeros(w.len() + w.len() * u.len());
    t.rows_mut(0, w.len()).copy_from(w);
    let ku = w.kronecker(&u.map(|c| c.conj()));
    t.rows_mut(w.len(), ku.len()).copy_from(&ku);
    t
}

/// Numeric counterpart of [`combined_scalar`].
pub fn combined_scalar_num(
    hhat: &DVector<C64>,
    ghat: &DMatrix<C64>,
    u: &DVector<C64>,
    w: &DVector<C64>,
) -> C64 {
    (hhat.adjoint() * w)[(0, 0)] + (u.adjoint() * ghat * w)[(0, 0)]
}

// ---------------------------------------------------------------------------
// Quadratic lower bound
// ---------------------------------------------------------------------------

/// Coefficients of the anchored expansion
/// `QF(x) = x^H A x + 2 Re{a^H x} + a0` of a beam power `|s(x)|^2` around the
/// previous iterate. `A` and `a` are affine in the current design variables.
#[derive(Clone, Debug)]
pub struct QuadraticLowerBound {
    /// Error layout the coefficients are expressed over.
    pub layout: ErrorLayout,
    /// Quadratic coefficient matrix (Hermitian-affine, `dim x dim`).
    pub a_mat: CMat,
    /// Linear coefficient vector (`dim`).
    pub a_vec: Vec<LinC>,
    /// Real-valued affine constant term.
    pub a_scalar: LinC,
}

impl QuadraticLowerBound {
    /// Evaluate `QF(x)` at a concrete error vector and variable assignment.
    pub fn eval(&self, x: &DVector<C64>, assignment: &[f64]) -> f64 {
        let a = self.a_mat.eval(assignment);
        let v = eval_vec(&self.a_vec, assignment);
        let quad = (x.adjoint() * &a * x)[(0, 0)].re;
        let lin = 2.0 * v.dotc(x).re;
        quad + lin + self.a_scalar.eval(assignment).re
    }
}

/// Build the anchored expansion of `|s(x; w, u)|^2` around the iterate
/// `(w0, u0)`.
///
/// With `t0 = t(w0, u0)`, `c0 = (hhat^H + u0^H Ghat) w0` and the current
/// `t = t(w, u)`, `c = (hhat^H + u^H Ghat) w`:
///
/// ```text
///     A  = t0 t^H + t t0^H - t0 t0^H,
///     a  = t conj(c0) + t0 conj(c) - t0 conj(c0),
///     a0 = 2 Re{ conj(c0) c } - |c0|^2.
/// ```
pub fn quadratic_lower_bound(
    hhat: &DVector<C64>,
    ghat: &DMatrix<C64>,
    w0: &DVector<C64>,
    u0: &DVector<C64>,
    w: &[LinC],
    u: &[LinC],
) -> QuadraticLowerBound {
    let n = hhat.len();
    let m = ghat.nrows();
    assert_eq!(ghat.ncols(), n, "cascade matrix shape");
    assert_eq!(w0.len(), n, "iterate beam length");
    assert_eq!(u0.len(), m, "iterate surface length");
    assert_eq!(w.len(), n, "beam expression length");
    assert_eq!(u.len(), m, "surface expression length");
    let layout = ErrorLayout { n, m };

    let t0 = beam_error_stack_num(w0, u0);
    let c0 = combined_scalar_num(hhat, ghat, u0, w0);
    let t0e = lift_vec(&t0);

    let t = beam_error_stack(w, u);
    let c = combined_scalar(hhat, ghat, u, w);

    let a_tilde = CMat::outer(&t0e, &t);
    let a_mat = a_tilde.add(&a_tilde.adjoint()).sub(&CMat::outer(&t0e, &t0e));

    let c0_conj = c0.conj();
    let c_conj = c.conj();
    let a_vec: Vec<LinC> = (0..layout.dim())
        .map(|i| {
            t[i].scale(c0_conj)
                .add(&c_conj.scale(t0[i]))
                .sub(&LinC::constant(t0[i] * c0_conj))
        })
        .collect();

    let a_scalar = c
        .scale(c0_conj)
        .two_re()
        .sub(&LinC::real_constant(c0.norm_sqr()));

    QuadraticLowerBound { layout, a_mat, a_vec, a_scalar }
}

// ---------------------------------------------------------------------------
// Scalar convex surrogates
// ---------------------------------------------------------------------------

/// Tangent-plane surrogate of the product `eta * 2^r` at `(eta0, r0)`:
///
/// ```text
///     ((r - r0) eta0 ln 2 + eta) 2^{r0}
/// ```
///
/// Exact at the anchor, with partial derivatives `2^{r0}` in `eta` and
/// `eta0 ln 2 * 2^{r0}` in `r`.
pub fn rate_product_tangent(eta: &LinC, r: &LinC, eta0: f64, r0: f64) -> LinC {
    let pow = (r0 * std::f64::consts::LN_2).exp();
    r.sub(&LinC::real_constant(r0))
        .scale(C64::new(eta0 * std::f64::consts::LN_2, 0.0))
        .add(eta)
        .scale(C64::new(pow, 0.0))
}

/// Arithmetic-mean upper bound of a product of nonnegative scalars,
/// `psi * rho <= (t/2) psi^2 + rho^2 / (2t)`, tight at `t = rho / psi`.
///
/// Numeric audit form; the solver-side version lowers the right side as a
/// second-order cone via [`product_upper_soc_rows`].
#[inline]
pub fn bilinear_product_upper(psi: f64, rho: f64, t: f64) -> f64 {
    0.5 * t * psi * psi + rho * rho / (2.0 * t)
}

/// Rows encoding `lhs >= (t/2) psi^2 + rho^2/(2t)` as the standard cone
/// `lhs + 1 >= || [lhs - 1, sqrt(2t) psi, sqrt(2/t) rho] ||` — returns
/// `(head, stack)` for [`super::emit::add_soc`].
pub fn product_upper_soc_rows(lhs: &LinC, psi: &LinC, rho: &LinC, t: f64) -> (LinC, Vec<LinC>) {
    assert!(t > 0.0, "tangent parameter must be positive");
    let head = lhs.add(&LinC::real_constant(1.0));
    let stack = vec![
        lhs.sub(&LinC::real_constant(1.0)),
        psi.scale(C64::new((2.0 * t).sqrt(), 0.0)),
        rho.scale(C64::new((2.0 / t).sqrt(), 0.0)),
    ];
    (head, stack)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
