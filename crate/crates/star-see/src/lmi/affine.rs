//! Complex-affine expressions over real decision variables.
//!
//! Every optimization variable in this crate is a real scalar; complex
//! quantities (beams, surface coefficients, channel products) are expressed
//! as [`LinC`] — a complex-coefficient linear combination of real variables
//! plus a complex constant. Because the variables are real, the family is
//! closed under conjugation, which is what lets Hermitian matrix expressions
//! be assembled symbolically and lowered to the real solver kernel through
//! one code path.
//!
//! Products of two expressions are only defined when at least one side is
//! constant (the block-coordinate structure of the optimizer guarantees
//! this); a variable-times-variable product panics rather than silently
//! linearizing.

use nalgebra::{DMatrix, DVector};

use crate::C64;

// ---------------------------------------------------------------------------
// Scalar expressions
// ---------------------------------------------------------------------------

/// Complex-affine expression `sum_i coeff_i * x_i + constant` over real
/// variables `x`.
#[derive(Clone, Debug, Default)]
pub struct LinC {
    /// Sparse `(variable, coefficient)` terms.
    pub terms: Vec<(usize, C64)>,
    /// Constant offset.
    pub constant: C64,
}

impl LinC {
    /// The zero expression.
    pub fn zero() -> Self {
        Self::default()
    }

    /// A constant expression.
    pub fn constant(c: C64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    /// A real constant expression.
    pub fn real_constant(c: f64) -> Self {
        Self::constant(C64::new(c, 0.0))
    }

    /// A single real variable with coefficient 1.
    pub fn var(idx: usize) -> Self {
        Self { terms: vec![(idx, C64::new(1.0, 0.0))], constant: C64::new(0.0, 0.0) }
    }

    /// A complex quantity built from a real-part and an imaginary-part
    /// variable: `x_re + i x_im`.
    pub fn complex_var(re_idx: usize, im_idx: usize) -> Self {
        Self {
            terms: vec![(re_idx, C64::new(1.0, 0.0)), (im_idx, C64::new(0.0, 1.0))],
            constant: C64::new(0.0, 0.0),
        }
    }

    /// `true` when no variable appears.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Complex conjugate; legal because the variables are real.
    pub fn conj(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, c.conj())).collect(),
            constant: self.constant.conj(),
        }
    }

    /// Scale by a complex constant.
    pub fn scale(&self, s: C64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    /// Sum of two expressions.
    pub fn add(&self, rhs: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        Self { terms, constant: self.constant + rhs.constant }.merged()
    }

    /// Difference of two expressions.
    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    /// Product, defined only when at least one factor is constant.
    ///
    /// # Panics
    ///
    /// Panics when both factors contain variables: a bilinear product has no
    /// affine representation and always indicates a construction bug.
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_constant() {
            rhs.scale(self.constant)
        } else if rhs.is_constant() {
            self.scale(rhs.constant)
        } else {
            panic!("bilinear product of two variable expressions");
        }
    }

    /// Twice the real part, `e + conj(e)`, still an affine expression.
    pub fn two_re(&self) -> Self {
        self.add(&self.conj())
    }

    /// Evaluate at a real assignment.
    pub fn eval(&self, x: &[f64]) -> C64 {
        let mut acc = self.constant;
        for &(i, c) in &self.terms {
            acc += c * x[i];
        }
        acc
    }

    /// Combine duplicate variable entries.
    fn merged(mut self) -> Self {
        if self.terms.len() <= 1 {
            return self;
        }
        self.terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, C64)> = Vec::with_capacity(self.terms.len());
        for (i, c) in self.terms.drain(..) {
            match out.last_mut() {
                Some((last, acc)) if *last == i => *acc += c,
                _ => out.push((i, c)),
            }
        }
        self.terms = out;
        self
    }

    /// Real part as `(terms, constant)` over the same real variables.
    pub fn re_parts(&self) -> (Vec<(usize, f64)>, f64) {
        (self.terms.iter().map(|&(i, c)| (i, c.re)).collect(), self.constant.re)
    }

    /// Imaginary part as `(terms, constant)` over the same real variables.
    pub fn im_parts(&self) -> (Vec<(usize, f64)>, f64) {
        (self.terms.iter().map(|&(i, c)| (i, c.im)).collect(), self.constant.im)
    }

    /// Largest coefficient magnitude (constant included), for tolerance
    /// scaling.
    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().fold(self.constant.norm(), |acc, &(_, c)| acc.max(c.norm()))
    }
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

/// Lift a numeric complex vector into constant expressions.
pub fn lift_vec(v: &DVector<C64>) -> Vec<LinC> {
    v.iter().map(|&c| LinC::constant(c)).collect()
}

/// Evaluate a vector of expressions at an assignment.
pub fn eval_vec(v: &[LinC], x: &[f64]) -> DVector<C64> {
    DVector::from_fn(v.len(), |i, _| v[i].eval(x))
}

/// Inner product `a^H b` of a numeric vector with an expression vector.
pub fn inner_nc(a: &DVector<C64>, b: &[LinC]) -> LinC {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = LinC::zero();
    for (i, e) in b.iter().enumerate() {
        acc = acc.add(&e.scale(a[i].conj()));
    }
    acc
}

/// Inner product `a^H b` of two expression vectors (one side must be
/// constant entry-wise for the products to stay affine).
pub fn inner_cc(a: &[LinC], b: &[LinC]) -> LinC {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = LinC::zero();
    for (ai, bi) in a.iter().zip(b.iter()) {
        acc = acc.add(&ai.conj().mul(bi));
    }
    acc
}

/// Matrix-vector product `A v` of a numeric matrix with an expression vector.
pub fn mat_vec(a: &DMatrix<C64>, v: &[LinC]) -> Vec<LinC> {
    debug_assert_eq!(a.ncols(), v.len());
    (0..a.nrows())
        .map(|r| {
            let mut acc = LinC::zero();
            for (c, item) in v.iter().enumerate() {
                acc = acc.add(&item.scale(a[(r, c)]));
            }
            acc
        })
        .collect()
}

/// Kronecker product `a (x) b` of expression vectors, index `i_a * len(b) +
/// i_b` (at least one side must be constant entry-wise).
pub fn kron(a: &[LinC], b: &[LinC]) -> Vec<LinC> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ai in a {
        for bi in b {
            out.push(ai.mul(bi));
        }
    }
    out
}

/// Conjugate every entry.
pub fn conj_vec(v: &[LinC]) -> Vec<LinC> {
    v.iter().map(|e| e.conj()).collect()
}

// ---------------------------------------------------------------------------
// Matrix expressions
// ---------------------------------------------------------------------------

/// Dense matrix of complex-affine expressions (column-major).
#[derive(Clone, Debug)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<LinC>,
}

impl CMat {
    /// Zero matrix.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![LinC::zero(); nrows * ncols] }
    }

    /// Dimensions `(nrows, ncols)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    /// Entry accessor.
    pub fn get(&self, r: usize, c: usize) -> &LinC {
        &self.data[c * self.nrows + r]
    }

    /// Entry mutator.
    pub fn set(&mut self, r: usize, c: usize, e: LinC) {
        self.data[c * self.nrows + r] = e;
    }

    /// Add an expression into an entry.
    pub fn add_to(&mut self, r: usize, c: usize, e: &LinC) {
        let cur = self.get(r, c).clone();
        self.set(r, c, cur.add(e));
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for c in 0..self.ncols {
            for r in 0..self.nrows {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    /// Entrywise sum.
    pub fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.shape(), rhs.shape());
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a = a.add(b);
        }
        out
    }

    /// Entrywise difference.
    pub fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.shape(), rhs.shape());
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a = a.sub(b);
        }
        out
    }

    /// Outer product `col * row^H` of expression vectors (one side constant
    /// entry-wise).
    pub fn outer(col: &[LinC], row: &[LinC]) -> Self {
        let mut out = Self::zeros(col.len(), row.len());
        for (r, cr) in col.iter().enumerate() {
            for (c, rc) in row.iter().enumerate() {
                out.set(r, c, cr.mul(&rc.conj()));
            }
        }
        out
    }

    /// Evaluate every entry at an assignment.
    pub fn eval(&self, x: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.nrows, self.ncols, |r, c| self.get(r, c).eval(x))
    }

    /// Worst coefficient-level deviation from Hermitian symmetry,
    /// `max_(i,j) ||M_ij - conj(M_ji)||` over matched coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        debug_assert_eq!(self.nrows, self.ncols);
        let mut worst: f64 = 0.0;
        for c in 0..self.ncols {
            for r in 0..=c {
                let diff = self.get(r, c).sub(&self.get(c, r).conj());
                worst = worst.max(diff.max_coeff());
            }
        }
        worst
    }

    /// Exact Hermitian symmetrization `(M + M^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let mut out = self.add(&adj);
        for e in out.data.iter_mut() {
            *e = e.scale(C64::new(0.5, 0.0));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // 1. Conjugation over real variables: eval(conj(e)) == conj(eval(e)).
    #[test]
    fn conjugation_commutes_with_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let e = LinC {
                terms: vec![
                    (0, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
                    (2, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
                ],
                constant: c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            };
            let x = [rng.gen_range(-2.0..2.0), 0.0, rng.gen_range(-2.0..2.0)];
            assert!((e.conj().eval(&x) - e.eval(&x).conj()).norm() < 1e-15);
            // two_re is real-valued.
            assert!(e.two_re().eval(&x).im.abs() < 1e-15);
            assert!((e.two_re().eval(&x).re - 2.0 * e.eval(&x).re).abs() < 1e-14);
        }
    }

    // 2. Arithmetic matches direct numeric computation.
    #[test]
    fn arithmetic_matches_numeric() {
        let a = LinC::complex_var(0, 1);
        let b = LinC::constant(c(2.0, -1.0));
        let x = [0.3, -0.7];
        let av = c(0.3, -0.7);
        assert!((a.eval(&x) - av).norm() < 1e-15);
        assert!((a.add(&b).eval(&x) - (av + c(2.0, -1.0))).norm() < 1e-15);
        assert!((a.mul(&b).eval(&x) - av * c(2.0, -1.0)).norm() < 1e-15);
        assert!((b.mul(&a).eval(&x) - av * c(2.0, -1.0)).norm() < 1e-15);
        assert!((a.sub(&b).neg().eval(&x) - (c(2.0, -1.0) - av)).norm() < 1e-15);
    }

    // 3. Bilinear products are rejected loudly.
    #[test]
    #[should_panic(expected = "bilinear")]
    fn bilinear_product_panics() {
        let a = LinC::var(0);
        let b = LinC::var(1);
        let _ = a.mul(&b);
    }

    // 4. Vector kernels agree with nalgebra on random numeric data.
    #[test]
    fn vector_kernels_match_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = 4;
            let a = DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let b = DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let m = DMatrix::from_fn(3, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));

            let be = lift_vec(&b);
            assert!((inner_nc(&a, &be).eval(&[]) - a.dotc(&b)).norm() < 1e-14);
            assert!((inner_cc(&lift_vec(&a), &be).eval(&[]) - a.dotc(&b)).norm() < 1e-14);

            let mv = eval_vec(&mat_vec(&m, &be), &[]);
            assert!((mv - &m * &b).norm() < 1e-14);

            let kr = eval_vec(&kron(&lift_vec(&a), &be), &[]);
            let kr_direct = a.kronecker(&b);
            assert!((kr - kr_direct).norm() < 1e-14);
        }
    }

    // 5. Outer products and adjoints match numeric counterparts.
    #[test]
    fn matrix_kernels_match_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let a = DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let b = DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let outer = CMat::outer(&lift_vec(&a), &lift_vec(&b));
        let want = &a * b.adjoint();
        assert!((outer.eval(&[]) - &want).norm() < 1e-14);
        assert!((outer.adjoint().eval(&[]) - want.adjoint()).norm() < 1e-14);
    }

    // 6. Hermitian bookkeeping: defect detection and exact symmetrization.
    #[test]
    fn hermitian_defect_and_part() {
        let mut m = CMat::zeros(2, 2);
        m.set(0, 0, LinC::real_constant(1.0));
        m.set(1, 1, LinC::var(0));
        m.set(0, 1, LinC::constant(c(0.0, 1.0)));
        m.set(1, 0, LinC::constant(c(0.0, -1.0))); // = conj of (0,1): Hermitian
        assert!(m.hermitian_defect() < 1e-15);

        let mut bad = m.clone();
        bad.set(1, 0, LinC::constant(c(0.5, -1.0)));
        assert!((bad.hermitian_defect() - 0.5).abs() < 1e-15);

        let fixed = bad.hermitian_part();
        assert!(fixed.hermitian_defect() < 1e-15);
    }

    // 7. Duplicate-variable terms merge.
    #[test]
    fn duplicate_terms_merge() {
        let e = LinC::var(3).add(&LinC::var(3)).add(&LinC::var(1));
        assert_eq!(e.terms.len(), 2);
        assert!((e.eval(&[0.0, 2.0, 0.0, 5.0]) - c(12.0, 0.0)).norm() < 1e-15);
    }
}
